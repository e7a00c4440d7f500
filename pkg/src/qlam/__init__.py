"""qlam: a linear lambda calculus with explicit qubits, projective
measurement, and an empirical confluence harness."""

from .quantum import (
    GateAtom,
    GateExpr,
    MeasurementOutcome,
    QubitValue,
    apply_gate,
    basis_state,
    coincidence_set,
    ket,
    measure,
    tensor,
    uniform_state,
)
from .syntax import (
    App,
    Bang,
    BangLam,
    GateConst,
    If,
    Lam,
    LetTensor,
    MeasConst,
    QubitConst,
    Term,
    Var,
    alpha_eq,
    pretty,
    substitute,
)
from .parser import ParseError, Program, parse_program, parse_term
from .wellformed import WfReport, check, is_normalized
from .reduction import (
    ProbStep,
    RuleSet,
    RULESET_S,
    RULESET_ST,
    RULESET_T,
    enumerate_redexes,
    step_at,
    step_strategy,
)
from .ensemble import (
    TermEnsemble,
    det_step,
    equivalent,
    evaluate,
    min_ensemble,
    sample,
    singleton,
)
from .confluence import DiamondReport, GenConfig, check_diamond, generate, run_suite

__all__ = [name for name in dir() if not name.startswith("_")]
