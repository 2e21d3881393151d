"""
Stationary limits of finite chains
==================================

``stat(init, fn x => body)`` denotes the limit of the chain started from
``init``. When the limit is not unique the result is the error branch.
"""
from statl.semantics import analyze_stat, eval_prob
from statl.syntax import parse
from statl.measure import FiniteMeasure, TRUE

# an ergodic two-state chain: limit (1/3, 2/3)
ergodic = parse("stat(return tt, fn x => if x then sample(bern 1/2) else sample(bern 1/4))")
print(eval_prob(ergodic))

# a deterministic flip is periodic; the error value (1, ()) prints as ff
flip = parse("stat(return tt, fn x => if x then return ff else return tt)")
print(eval_prob(flip))

# the analysis object exposes the matrix, classes and period
a = analyze_stat(FiniteMeasure.dirac(TRUE), flip.body, flip.var)
print(a.matrix.rows, a.recurrent_classes, a.period, a.verdict)
