"""Exact semantics, norm-eliminating compilation and convergence bounds for a
small first-order probabilistic language."""
from .measure import FiniteMeasure, tv, bind, scale, normalize
from .syntax import ParseError, SourceProgram, parse, pretty
from .terms import Term
from .typecheck import TypeCheckError, kind_check, is_program
from .types import Kind
from .semantics import eval_det, eval_prob, build_kernel_matrix, stat_solve, StateBudgetExceeded
from .transforms import (tracer, prior_tracer, lhd_tracer, mh, mh_guarded, compile_program,
                         iterate_unroll, approx_all, stat_sites)
from .ergodicity import (ErgodicityCert, NotCertified, certify, dobrushin, check_contraction,
                         check_perturbation, certify_program, theorem4_bound)

__all__ = [
    "FiniteMeasure", "tv", "bind", "scale", "normalize",
    "ParseError", "SourceProgram", "parse", "pretty", "Term",
    "TypeCheckError", "kind_check", "is_program", "Kind",
    "eval_det", "eval_prob", "build_kernel_matrix", "stat_solve", "StateBudgetExceeded",
    "tracer", "prior_tracer", "lhd_tracer", "mh", "mh_guarded", "compile_program",
    "iterate_unroll", "approx_all", "stat_sites",
    "ErgodicityCert", "NotCertified", "certify", "dobrushin", "check_contraction",
    "check_perturbation", "certify_program", "theorem4_bound",
]
