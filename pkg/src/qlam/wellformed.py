"""Well-formedness checking: the linearity discipline plus the register rules.

A pre-term is well-formed when:

  * every linearly bound variable is used exactly once in its scope, and a
    free variable (treated as linear) is used at most once.  Occurrences are
    counted additively across all subterms, so substitution for a linear
    variable never duplicates a pending redex, which is what keeps the
    functional and measurement rules strongly commuting;
  * the arms of a conditional consume no linear variables: a conditional is
    a classical branch point, one arm is always discarded, and a discarded
    arm must not take a linear resource with it.  Programs that want a value
    in an arm bind it nonlinearly;
  * a bang term captures no linear variables;
  * a nonlinear abstraction is only applied to arguments that are duplicable
    or may still reduce to one: a banged term, a register constant, or a
    reducible form (application, conditional, destructuring let).  Bare
    variables, abstractions and the other constants can never become
    duplicable, so those applications are rejected outright;
  * every register constant is normalized: the squared amplitude moduli sum
    to 1 within EPS_NORM.  (Zero-amplitude summands are dropped eagerly by
    the register representation, and gate constants are checked unitary at
    construction.)

Violations are reported, never raised; check is total.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .quantum import EPS_NORM
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
)

LINEAR = "linear"
NONLINEAR = "nonlinear"

Position = tuple[int, ...]
Violation = tuple[Position, str, str]  # (position, rule name, message)


@dataclass(frozen=True)
class Context:
    """Typing context: variable names with their linearity, in binding order.
    A linear variable occurs at most once."""

    entries: tuple[tuple[str, str], ...] = ()

    def extended(self, name: str, linearity: str) -> "Context":
        if linearity == LINEAR and any(n == name and l == LINEAR for n, l in self.entries):
            raise ValueError(f"linear variable {name!r} already in context")
        return Context(self.entries + ((name, linearity),))

    def lookup(self, name: str) -> str | None:
        for n, linearity in reversed(self.entries):
            if n == name:
                return linearity
        return None


@dataclass
class WfReport:
    verdict: bool
    violations: list[Violation] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.verdict


def is_normalized(amplitudes: Iterable[complex], tol: float) -> bool:
    """True iff the squared moduli sum to 1 within tol."""
    total = sum(abs(a) ** 2 for a in amplitudes)
    return abs(total - 1.0) <= tol


# Argument shapes that may still reduce to a duplicable value.
_REDUCIBLE_ARGS = (App, If, LetTensor)


def check(t: Term) -> WfReport:
    """Decide well-formedness; the verdict is true iff no violations."""
    violations: list[Violation] = []
    _walk(t, {}, (), violations, _Ids())
    # Free variables are linear: more than one use anywhere is a violation.
    free_uses = Counter()
    _count_free(t, set(), free_uses)
    for name, n in sorted(free_uses.items()):
        if n > 1:
            violations.append(((), "linear",
                               f"free variable {name!r} used {n} times"))
    return WfReport(not violations, violations)


class _Ids:
    def __init__(self) -> None:
        self.n = 0

    def fresh(self) -> int:
        self.n += 1
        return self.n


def _count_free(t: Term, bound: set[str], uses: Counter) -> None:
    match t:
        case Var(x):
            if x not in bound:
                uses[x] += 1
        case Lam(x, body) | BangLam(x, body):
            _count_free(body, bound | {x}, uses)
        case LetTensor(x, y, value, body):
            _count_free(value, bound, uses)
            _count_free(body, bound | {x, y}, uses)
        case If(c, a, b):
            _count_free(c, bound, uses)
            _count_free(a, bound, uses)
            _count_free(b, bound, uses)
        case _:
            from .syntax import children

            for c in children(t):
                _count_free(c, bound, uses)


def _walk(t: Term, env: dict[str, tuple[str, int]], pos: Position,
          violations: list[Violation], ids: _Ids) -> Counter:
    """Returns usage counts of linear binders (by binder id) below t."""
    match t:
        case Var(x):
            entry = env.get(x)
            if entry is not None and entry[0] == LINEAR:
                return Counter({entry[1]: 1})
            return Counter()
        case Lam(x, body):
            bid = ids.fresh()
            uses = _walk(body, {**env, x: (LINEAR, bid)}, pos + (0,), violations, ids)
            n = uses.pop(bid, 0)
            if n != 1:
                violations.append((pos, "linear",
                                   f"linear variable {x!r} used {n} times (expected exactly once)"))
            return uses
        case BangLam(x, body):
            return _walk(body, {**env, x: (NONLINEAR, 0)}, pos + (0,), violations, ids)
        case App(fun, arg):
            if isinstance(fun, BangLam):
                _check_nonlinear_arg(arg, env, pos + (1,), violations)
            uses = _walk(fun, env, pos + (0,), violations, ids)
            uses.update(_walk(arg, env, pos + (1,), violations, ids))
            return uses
        case Bang(body):
            uses = _walk(body, env, pos + (0,), violations, ids)
            if uses:
                names = sorted({x for x, (lin, bid) in env.items()
                                if lin == LINEAR and uses.get(bid)})
                free_linear = ", ".join(repr(n) for n in names) or "a linear variable"
                violations.append((pos, "bang",
                                   f"nonlinear term captures linear variable(s) {free_linear}"))
            return uses
        case QubitConst(q):
            if not is_normalized((a for _, a in q.amps), EPS_NORM):
                violations.append((pos, "superposition",
                                   f"register amplitudes have squared mass {q.norm_sq():.6g}, "
                                   "expected 1"))
            return Counter()
        case GateConst(_) | MeasConst(_):
            return Counter()
        case If(c, a, b):
            uses = _walk(c, env, pos + (0,), violations, ids)
            for child_index, arm in ((1, a), (2, b)):
                arm_uses = _walk(arm, env, pos + (child_index,), violations, ids)
                if arm_uses:
                    names = sorted({x for x, (lin, bid) in env.items()
                                    if lin == LINEAR and arm_uses.get(bid)})
                    listed = ", ".join(repr(n) for n in names) or "a linear variable"
                    violations.append((pos, "linear",
                                       f"conditional arm consumes linear variable(s) "
                                       f"{listed}; the other arm would discard them"))
                uses.update(arm_uses)
            return uses
        case LetTensor(x, y, value, body):
            uses = _walk(value, env, pos + (0,), violations, ids)
            env2 = {**env, x: (NONLINEAR, 0), y: (NONLINEAR, 0)}
            uses.update(_walk(body, env2, pos + (1,), violations, ids))
            return uses
    raise TypeError(f"not a term: {t!r}")


def _check_nonlinear_arg(arg: Term, env: dict[str, tuple[str, int]],
                         pos: Position, violations: list[Violation]) -> None:
    if isinstance(arg, (Bang, QubitConst)) or isinstance(arg, _REDUCIBLE_ARGS):
        return
    if isinstance(arg, Var):
        what = f"variable {arg.name!r}"
    elif isinstance(arg, (Lam, BangLam)):
        what = "an abstraction"
    elif isinstance(arg, GateConst):
        what = "a gate constant"
    elif isinstance(arg, MeasConst):
        what = "a measurement constant"
    else:
        what = "this argument"
    violations.append((pos, "nonlinear-application",
                       f"nonlinear abstraction applied to {what}; the argument must be "
                       "banged, a register constant, or reducible to one"))
