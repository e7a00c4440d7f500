"""Core term syntax: AST, traversal by position, alpha-equivalence,
capture-avoiding substitution, and the canonical pretty-printer.

Terms are immutable values, safe to share across threads.  A position is a
tuple of child indices (child numbering per constructor is fixed below), so
() addresses the whole term.

Qubit registers appear in terms only as whole constants (QubitConst); there
is no term-level tensor, which is what makes cloning of unknown quantum data
unwritable.  The destructuring binder LetTensor is the one primitive that
takes a register apart, and only product states split.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .quantum import GateExpr, QubitValue

# Default absolute tolerance for amplitude comparison inside alpha_eq.
AMP_TOL = 1e-9


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    """Linear abstraction: the bound variable must be used exactly once."""

    var: str
    body: "Term"


@dataclass(frozen=True)
class BangLam:
    """Nonlinear abstraction: the bound variable may be used any number of
    times, and only duplicable arguments may be passed."""

    var: str
    body: "Term"


@dataclass(frozen=True)
class App:
    fun: "Term"
    arg: "Term"


@dataclass(frozen=True)
class Bang:
    """Promotion !t: a duplicable suspended term.  Reduction never descends
    inside a bang; bang terms are values."""

    body: "Term"


@dataclass(frozen=True)
class GateConst:
    gate: GateExpr


@dataclass(frozen=True)
class QubitConst:
    value: QubitValue


@dataclass(frozen=True)
class MeasConst:
    """Measurement operator over the 1-based wire indices in ``indices``."""

    indices: frozenset[int]

    def __post_init__(self) -> None:
        idx = frozenset(self.indices)
        if not idx or any(i < 1 for i in idx):
            raise ValueError("measurement indices must be a nonempty set of wires >= 1")
        object.__setattr__(self, "indices", idx)


@dataclass(frozen=True)
class If:
    """Conditional on a base qubit.  Only |0> or |1> conditions reduce."""

    cond: "Term"
    then: "Term"
    orelse: "Term"


@dataclass(frozen=True)
class LetTensor:
    """Destructure a register into its first wire and the rest:
    ``let left * right = value in body``.

    The split fires only when the register is a product across the cut.
    Both binders are nonlinear: they only ever bind post-measurement
    (classical, duplicable) data.
    """

    left: str
    right: str
    value: "Term"
    body: "Term"


Term = Union[Var, Lam, BangLam, App, Bang, GateConst, QubitConst, MeasConst, If, LetTensor]

_LEAVES = (Var, GateConst, QubitConst, MeasConst)


# ---------------------------------------------------------------------------
# Traversal


def bang(t: Term) -> Term:
    """Promote a term.  Register constants are already duplicable, so a bang
    on one collapses: banged base qubits and banged registers are the
    constants themselves."""
    return t if isinstance(t, QubitConst) else Bang(t)


def children(t: Term) -> tuple[Term, ...]:
    match t:
        case Lam(_, body) | BangLam(_, body) | Bang(body):
            return (body,)
        case App(fun, arg):
            return (fun, arg)
        case If(c, a, b):
            return (c, a, b)
        case LetTensor(_, _, value, body):
            return (value, body)
        case _:
            return ()


def with_children(t: Term, new: tuple[Term, ...]) -> Term:
    match t:
        case Lam(v, _):
            return Lam(v, new[0])
        case BangLam(v, _):
            return BangLam(v, new[0])
        case Bang(_):
            return bang(new[0])
        case App(_, _):
            return App(new[0], new[1])
        case If(_, _, _):
            return If(new[0], new[1], new[2])
        case LetTensor(x, y, _, _):
            return LetTensor(x, y, new[0], new[1])
        case _:
            return t


def subterm_at(t: Term, pos: tuple[int, ...]) -> Term:
    for i in pos:
        t = children(t)[i]
    return t


def replace_at(t: Term, pos: tuple[int, ...], new: Term) -> Term:
    if not pos:
        return new
    kids = list(children(t))
    kids[pos[0]] = replace_at(kids[pos[0]], pos[1:], new)
    return with_children(t, tuple(kids))


def positions(t: Term) -> Iterator[tuple[int, ...]]:
    """All positions in preorder (lexicographic)."""
    stack = [((), t)]
    while stack:
        pos, term = stack.pop()
        yield pos
        for i, c in reversed(list(enumerate(children(term)))):
            stack.append((pos + (i,), c))


def term_size(t: Term) -> int:
    return 1 + sum(term_size(c) for c in children(t))


# ---------------------------------------------------------------------------
# Variables


def free_vars(t: Term) -> frozenset[str]:
    match t:
        case Var(x):
            return frozenset((x,))
        case Lam(x, body) | BangLam(x, body):
            return free_vars(body) - {x}
        case LetTensor(x, y, value, body):
            return free_vars(value) | (free_vars(body) - {x, y})
        case _:
            out: frozenset[str] = frozenset()
            for c in children(t):
                out |= free_vars(c)
            return out


def fresh_name(base: str, avoid: frozenset[str] | set[str]) -> str:
    name = base
    while name in avoid:
        name += "'"
    return name


def substitute(body: Term, var: str, replacement: Term) -> Term:
    """Capture-avoiding substitution body[replacement/var]."""
    rep_free = free_vars(replacement)

    def go(t: Term) -> Term:
        match t:
            case Var(x):
                return replacement if x == var else t
            case Lam(x, inner) | BangLam(x, inner):
                cls = type(t)
                if x == var:
                    return t
                if x in rep_free and var in free_vars(inner):
                    x2 = fresh_name(x, rep_free | free_vars(inner))
                    inner = substitute(inner, x, Var(x2))
                    return cls(x2, go(inner))
                return cls(x, go(inner))
            case LetTensor(x, y, value, inner):
                new_value = go(value)
                if var in (x, y):
                    return LetTensor(x, y, new_value, inner)
                if var in free_vars(inner):
                    inner_free = free_vars(inner)
                    if x in rep_free:
                        x2 = fresh_name(x, rep_free | inner_free | {y})
                        inner = substitute(inner, x, Var(x2))
                        x = x2
                    if y in rep_free:
                        y2 = fresh_name(y, rep_free | free_vars(inner) | {x})
                        inner = substitute(inner, y, Var(y2))
                        y = y2
                    return LetTensor(x, y, new_value, go(inner))
                return LetTensor(x, y, new_value, inner)
            case _ if isinstance(t, _LEAVES):
                return t
            case _:
                return with_children(t, tuple(go(c) for c in children(t)))

    return go(body)


# ---------------------------------------------------------------------------
# Alpha-equivalence


def alpha_eq(a: Term, b: Term, tol: float = AMP_TOL) -> bool:
    """Structural equality up to consistent renaming of bound variables.

    Qubit constants compare amplitude-wise with absolute tolerance ``tol``
    (they are already canonical: zero summands dropped, indices sorted).
    """

    def go(a: Term, b: Term, env_a: dict[str, int], env_b: dict[str, int], depth: int) -> bool:
        if type(a) is not type(b):
            return False
        match a, b:
            case Var(x), Var(y):
                la, lb = env_a.get(x), env_b.get(y)
                if la is None and lb is None:
                    return x == y
                return la == lb
            case (Lam(x, ba), Lam(y, bb)) | (BangLam(x, ba), BangLam(y, bb)):
                return go(ba, bb, {**env_a, x: depth}, {**env_b, y: depth}, depth + 1)
            case App(f1, a1), App(f2, a2):
                return go(f1, f2, env_a, env_b, depth) and go(a1, a2, env_a, env_b, depth)
            case Bang(ba), Bang(bb):
                return go(ba, bb, env_a, env_b, depth)
            case GateConst(g1), GateConst(g2):
                return g1 == g2
            case QubitConst(q1), QubitConst(q2):
                from .quantum import amps_close

                return amps_close(q1, q2, tol)
            case MeasConst(i1), MeasConst(i2):
                return i1 == i2
            case If(c1, t1, e1), If(c2, t2, e2):
                return (go(c1, c2, env_a, env_b, depth)
                        and go(t1, t2, env_a, env_b, depth)
                        and go(e1, e2, env_a, env_b, depth))
            case LetTensor(x1, y1, v1, b1), LetTensor(x2, y2, v2, b2):
                if not go(v1, v2, env_a, env_b, depth):
                    return False
                ea = {**env_a, x1: depth, y1: depth + 1}
                eb = {**env_b, x2: depth, y2: depth + 1}
                return go(b1, b2, ea, eb, depth + 2)
            case _:
                return False

    return go(a, b, {}, {}, 0)


# ---------------------------------------------------------------------------
# Pretty-printing


def _fmt_float(x: float) -> str:
    if x == 0:
        return "0"
    return f"{x:.12g}"


def format_qubit(q: QubitValue) -> tuple[str, bool]:
    """Render a register constant; the flag says whether the text is atomic
    (a single banged ket needing no parentheses)."""
    if len(q.amps) == 1:
        u, a = q.amps[0]
        if _fmt_float(a.real) == "1" and _fmt_float(a.imag) == "0":
            return f"!|{format(u, f'0{q.width}b')}>", True
    parts = []
    for u, a in q.amps:
        bits = format(u, f"0{q.width}b")
        parts.append(f"({_fmt_float(a.real)},{_fmt_float(a.imag)})!|{bits}>")
    return " + ".join(parts), False


def format_gate(g: GateExpr) -> tuple[str, bool]:
    return "*".join(g.names), len(g.atoms) == 1


def pretty(t: Term) -> str:
    """Canonical concrete syntax; parsing the result gives back an
    alpha-equivalent term."""
    return _pp(t)


def _atomic(t: Term) -> bool:
    match t:
        case Var(_) | MeasConst(_):
            return True
        case GateConst(g):
            return len(g.atoms) == 1
        case QubitConst(q):
            return format_qubit(q)[1]
        case Bang(body):
            return _atomic(body)
        case _:
            return False


def _pp_atom(t: Term) -> str:
    text = _pp(t)
    return text if _atomic(t) else f"({text})"


def _pp(t: Term) -> str:
    match t:
        case Var(x):
            return x
        case Lam(x, body):
            return f"\\{x}. {_pp(body)}"
        case BangLam(x, body):
            return f"\\!{x}. {_pp(body)}"
        case App(fun, arg):
            fun_text = _pp(fun) if isinstance(fun, App) or _atomic(fun) else f"({_pp(fun)})"
            return f"{fun_text} {_pp_atom(arg)}"
        case Bang(body):
            return f"!{_pp_atom(body)}"
        case GateConst(g):
            return format_gate(g)[0]
        case QubitConst(q):
            return format_qubit(q)[0]
        case MeasConst(indices):
            return "M{" + ",".join(str(i) for i in sorted(indices)) + "}"
        case If(c, a, b):
            return f"if {_pp_atom(c)} then {_pp_atom(a)} else {_pp_atom(b)}"
        case LetTensor(x, y, value, body):
            return f"let {x} * {y} = {_pp_atom(value)} in {_pp(body)}"
    raise TypeError(f"not a term: {t!r}")
