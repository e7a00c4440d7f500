"""Single-step probabilistic reduction.

Two rule sets drive everything:

  S = { beta, !beta1, !beta2, U, split }   the functional rules
  T = { M, if-0, if-1 }                    measurement and conditionals

Head rules:

  beta    (\\x. b) a            -> b[a/x]            p = 1
  !beta1  (\\!x. b) !a          -> b[a/x]            p = 1
  !beta2  (\\!x. b) q           -> b[q/x]            p = 1   q a register constant
  U       (c_U q)               -> (U q)             p = 1   arities must match
  M       (M_I q)               -> post-state        one step per outcome, p = p_w
  if-0    if !|0> then a else b -> a                 p = 1
  if-1    if !|1> then a else b -> b                 p = 1
  split   let x * y = q in u    -> u[q1/x][q2/y]     p = 1   q = q1 (x) q2 product

Both sets are closed under all term contexts except under a bang (bang terms
are values), so redexes are enumerated at every position reachable without
crossing a !, including under binders and in all three conditional arms.
The linear beta rule is not value-restricted: it fires on arbitrary
arguments.  The nonlinear rules only fire on duplicable values, which is why
a measurement suspended under a bang is copied as a whole and a bare
measurement application must collapse before it can be passed.

Only (M) branches; every other rule yields a single step of probability 1,
and the steps of one (position, rule) pair always carry total probability 1.
"""

from __future__ import annotations

from dataclasses import dataclass

from .quantum import EPS_NORM, QubitValue, factor_split, measure
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
    children,
    replace_at,
    substitute,
    subterm_at,
)

RULE_BETA = "beta"
RULE_BANG_BETA1 = "!beta1"
RULE_BANG_BETA2 = "!beta2"
RULE_UNITARY = "U"
RULE_SPLIT = "split"
RULE_MEASURE = "M"
RULE_IF0 = "if-0"
RULE_IF1 = "if-1"
RULE_ID = "Id"  # the idle step of ensemble reduction; never enumerated

Position = tuple[int, ...]


class NoRedexError(ValueError):
    """The requested rule does not match at the given position."""


class StuckMeasurementError(NoRedexError):
    """(M) was requested where the operand is not a register constant."""


@dataclass(frozen=True)
class ProbStep:
    """One probabilistic successor: the full rewritten term, the branch
    probability, the rule that fired, and where."""

    target: Term
    probability: float
    rule: str
    position: Position


@dataclass(frozen=True)
class RuleSet:
    name: str
    members: frozenset[str]

    def __contains__(self, rule: str) -> bool:
        return rule in self.members


RULESET_S = RuleSet("S", frozenset({RULE_BETA, RULE_BANG_BETA1, RULE_BANG_BETA2,
                                    RULE_UNITARY, RULE_SPLIT}))
RULESET_T = RuleSet("T", frozenset({RULE_MEASURE, RULE_IF0, RULE_IF1}))
RULESET_ST = RuleSet("S+T", RULESET_S.members | RULESET_T.members)

RULESETS = {"S": RULESET_S, "T": RULESET_T, "S+T": RULESET_ST}


def _is_base_bit(q: QubitValue, bit: int) -> bool:
    """Exactly the base qubit |bit> (amplitude 1, no phase)."""
    if q.width != 1 or len(q.amps) != 1:
        return False
    u, a = q.amps[0]
    return u == bit and abs(a - 1.0) <= EPS_NORM


def head_rule(t: Term) -> str | None:
    """The head rule firing at the root of t, if any.  At most one matches."""
    match t:
        case App(Lam(_, _), _):
            return RULE_BETA
        case App(BangLam(_, _), Bang(_)):
            return RULE_BANG_BETA1
        case App(BangLam(_, _), QubitConst(_)):
            return RULE_BANG_BETA2
        case App(GateConst(g), QubitConst(q)) if g.arity == q.width:
            return RULE_UNITARY
        case App(MeasConst(idx), QubitConst(q)) if idx and max(idx) <= q.width:
            return RULE_MEASURE
        case If(QubitConst(q), _, _):
            if _is_base_bit(q, 0):
                return RULE_IF0
            if _is_base_bit(q, 1):
                return RULE_IF1
            return None
        case LetTensor(_, _, QubitConst(q), _) if q.width >= 2:
            if factor_split(q, 1) is not None:
                return RULE_SPLIT
            return None
    return None


def _contract(t: Term, rule: str) -> list[tuple[Term, float]]:
    """Successors of the head redex t under rule, with probabilities."""
    match t, rule:
        case App(Lam(x, body), arg), "beta":
            return [(substitute(body, x, arg), 1.0)]
        case App(BangLam(x, body), Bang(payload)), "!beta1":
            return [(substitute(body, x, payload), 1.0)]
        case App(BangLam(x, body), QubitConst(_) as q), "!beta2":
            return [(substitute(body, x, q), 1.0)]
        case App(GateConst(g), QubitConst(q)), "U":
            from .quantum import apply_gate

            return [(QubitConst(apply_gate(g, q)), 1.0)]
        case App(MeasConst(idx), QubitConst(q)), "M":
            return [(QubitConst(o.post), o.probability) for o in measure(q, idx)]
        case If(_, a, _), "if-0":
            return [(a, 1.0)]
        case If(_, _, b), "if-1":
            return [(b, 1.0)]
        case LetTensor(x, y, QubitConst(q), body), "split":
            parts = factor_split(q, 1)
            assert parts is not None
            left, right = parts
            contracted = substitute(substitute(body, x, QubitConst(left)), y, QubitConst(right))
            return [(contracted, 1.0)]
    raise NoRedexError(f"rule {rule} does not match")


def step_at(t: Term, position: Position, rule: str) -> list[ProbStep]:
    """Fire ``rule`` at ``position``; the returned steps' probabilities sum
    to 1.  Raises NoRedexError when the rule does not match there, and the
    sharper StuckMeasurementError when (M) meets a non-constant operand."""
    sub = subterm_at(t, position)
    actual = head_rule(sub)
    if actual != rule:
        if rule == RULE_MEASURE and isinstance(sub, App) and \
                isinstance(sub.fun, MeasConst) and not isinstance(sub.arg, QubitConst):
            raise StuckMeasurementError(
                f"measurement operand at {position} is not a register constant")
        raise NoRedexError(f"rule {rule} does not match at {position}")
    return [ProbStep(replace_at(t, position, target), p, rule, position)
            for target, p in _contract(sub, rule)]


def enumerate_redexes(t: Term, rules: RuleSet) -> list[tuple[Position, str]]:
    """Every (position, rule) where step_at succeeds, in preorder position
    order.  Never descends under a bang."""
    out: list[tuple[Position, str]] = []

    def walk(term: Term, pos: Position) -> None:
        rule = head_rule(term)
        if rule is not None and rule in rules:
            out.append((pos, rule))
        if isinstance(term, Bang):
            return
        for i, c in enumerate(children(term)):
            walk(c, pos + (i,))

    walk(t, ())
    return out


def is_normal_form(t: Term, rules: RuleSet = RULESET_ST) -> bool:
    return not enumerate_redexes(t, rules)


def stuck_sites(t: Term) -> list[tuple[Position, str]]:
    """Positions that look like redexes but can never fire as they stand:
    conditionals on superposed or non-register conditions, measurements of
    non-constants or out-of-range wires, entangled splits, arity mismatches.
    Useful diagnostics for terms that converge while still containing them."""
    out: list[tuple[Position, str]] = []

    def walk(term: Term, pos: Position) -> None:
        match term:
            case If(cond, _, _) if head_rule(term) is None:
                if isinstance(cond, QubitConst):
                    out.append((pos, "conditional on a non-base register"))
            case LetTensor(_, _, QubitConst(q), _) if head_rule(term) is None:
                if q.width < 2:
                    out.append((pos, "split of a single-wire register"))
                else:
                    out.append((pos, "split of an entangled register"))
            case App(GateConst(g), QubitConst(q)) if g.arity != q.width:
                out.append((pos, f"gate arity {g.arity} vs register width {q.width}"))
            case App(MeasConst(idx), QubitConst(q)) if max(idx) > q.width:
                out.append((pos, f"measured wire {max(idx)} beyond width {q.width}"))
        if isinstance(term, Bang):
            return
        for i, c in enumerate(children(term)):
            walk(c, pos + (i,))

    walk(t, ())
    return out


# ---------------------------------------------------------------------------
# Deterministic strategy


def strategy_redex(t: Term) -> tuple[Position, str] | None:
    """The redex the deterministic strategy fires: call-by-value order
    (function position to a value, then the argument, then the head), with
    a leftmost-outermost fallback for redexes the value walk cannot reach
    (e.g. under binders).  None iff t is a normal form."""

    def walk(term: Term, pos: Position) -> tuple[Position, str] | None:
        match term:
            case App(fun, arg):
                found = walk(fun, pos + (0,))
                if found:
                    return found
                found = walk(arg, pos + (1,))
                if found:
                    return found
            case If(cond, _, _):
                found = walk(cond, pos + (0,))
                if found:
                    return found
            case LetTensor(_, _, value, _):
                found = walk(value, pos + (0,))
                if found:
                    return found
            case _:
                return None
        rule = head_rule(term)
        return (pos, rule) if rule is not None else None

    found = walk(t, ())
    if found:
        return found
    rest = enumerate_redexes(t, RULESET_ST)
    return rest[0] if rest else None


def step_strategy(t: Term) -> list[ProbStep]:
    """One strategy step; a normal form idles as [(t, 1, Id)]."""
    redex = strategy_redex(t)
    if redex is None:
        return [ProbStep(t, 1.0, RULE_ID, ())]
    return step_at(t, *redex)
