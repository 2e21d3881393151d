"""
Conditioning, and the same result without conditioning
=======================================================

A coin is tossed and the outcome is weighted by 2 on heads. The posterior
is computed exactly, then the program is rewritten into one that uses only
sampling and a stationary-distribution operator, and evaluated again.
"""
from statl import compile_program, eval_prob, parse, pretty, tv

# a weighted program wrapped in norm
src = "norm(let x = sample(bern 1/2) in let _ = score(if x then 2 else 1) in return x)"
t = parse(src)
print(eval_prob(t))

# the rewritten program: an MH chain over traces, projected back to results
c = compile_program(t)
print(pretty(c))

# both denote the same measure, exactly
print("tv =", tv(eval_prob(t), eval_prob(c)))
