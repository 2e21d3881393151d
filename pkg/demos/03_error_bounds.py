"""
How many steps are enough
=========================

Each stat site gets an ergodicity certificate ``(C, rho)``. Unrolling the
site ``N`` times then costs at most ``C * rho**N`` in total variation, and
nested sites are weighted by the factors of the sites around them.
"""
from statl.corpus import load
from statl.ergodicity import certify_program, theorem4_bound

t = load("nested_stat")
certs = certify_program(t)
for label, cert in certs.items():
    print(label, cert.C, cert.rho, cert.m)

# bound and exact distance for a few plans
for plan in ({0: 0, 1: 0}, {0: 2, 1: 5}, {0: 10, 1: 10}, {0: 20, 1: 20}):
    r = theorem4_bound(t, plan, certs)
    print(plan, "bound", float(r.total), "actual", float(r.empirical_tv), "sound", r.sound)
