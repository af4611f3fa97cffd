"""Workbench for a reversible Markovian process calculus.

Parse terms, explore forward/backward transition systems, study causality
of computations, analyze the induced continuous-time Markov chains (steady
state, time reversibility, product form) and compare systems by Markovian
bisimilarity.
"""
from .syntax import (
    NIL, Choice, Nil, Parallel, Prefix, IllFormedTermError, RmpcSyntaxError,
    check_well_formed, format_term, parse_model, parse_term,
)
from .semantics import EQUAL, RatePolicy, all_transitions, backward_transitions, explore, forward_transitions
from .causality import Computation, causally_equivalent, complete_diamond, conflicting, normalize_parabolic
from .markov import (
    Ctmc, build_ctmc, check_product_form, check_time_reversibility, reverse_ctmc, steady_state,
)
from .bisim import RatedLts, fbmb_check, ftabmb_equivalent, mb_equivalent

__all__ = [
    "NIL", "Nil", "Prefix", "Choice", "Parallel", "IllFormedTermError", "RmpcSyntaxError",
    "check_well_formed", "format_term", "parse_model", "parse_term",
    "EQUAL", "RatePolicy", "all_transitions", "backward_transitions", "explore", "forward_transitions",
    "Computation", "causally_equivalent", "complete_diamond", "conflicting", "normalize_parabolic",
    "Ctmc", "build_ctmc", "check_product_form", "check_time_reversibility", "reverse_ctmc", "steady_state",
    "RatedLts", "fbmb_check", "ftabmb_equivalent", "mb_equivalent",
]

__version__ = "0.1.0"
