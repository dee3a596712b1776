"""Exact verification of Hamiltonian operators ``P + omega`` of hydrodynamic type."""
from .symkernel import (
    Expr, FieldVar, FuncDeriv, JetVar, Param, Polynomial, RewriteTable,
    add, coeff_of_jet, const, diff, div, func, int_pow, is_zero, jet, mul, neg,
    param, substitute, var,
)
from .operators import FieldSpace, OperatorSpec, degeneracy, from_parts, tail_matrix
from .conditions import (
    DEFAULT_READING, PRINTED, ConditionId, ConditionReport, Reading, TermEdit,
    check_compatibility, check_mokhov, check_ultralocal, verify,
)
from .necessity import Ansatz, detect_forced_zero, extract, perturb_and_refute

__version__ = "0.1.0"
