"""Term ensembles: finite probability distributions over terms.

An ensemble is a finite multiset of (term, probability) entries with total
mass 1.  Probabilistic reduction determinizes over ensembles: in one
ensemble step every entry independently fires one enumerated redex or idles,
and a branching rule fans an entry out into its weighted successors.  Mass
is preserved by every such step.

``min_ensemble`` canonicalizes by merging alpha-equivalent entries
(summing their probabilities); two ensembles are equivalent when their
canonical forms contain the same alpha-classes with matching probabilities.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Callable, Literal

from .syntax import AMP_TOL, Term, alpha_eq, pretty
from .reduction import (
    RULE_ID,
    RULESET_ST,
    Position,
    ProbStep,
    RuleSet,
    enumerate_redexes,
    step_at,
    strategy_redex,
)

# Probabilities accumulate multiplicative float error along reduction paths,
# so ensemble comparison is looser than the amplitude tolerance.
PROB_TOL = 1e-7

# Hard cap on ensemble size; measured wires multiply branches, and blowing
# past this means the program is out of desk scale.
ENSEMBLE_CAP = 1 << 16

MASS_TOL = 1e-6

Chooser = Callable[[Term], "tuple[Position, str] | None"]
Status = Literal["Converged", "StepLimit"]


class EnsembleCapError(RuntimeError):
    """An ensemble step produced more than the configured number of entries."""


class StepLimitError(RuntimeError):
    """A sampling run hit its step budget before reaching a normal form."""


@dataclass(frozen=True)
class TermEnsemble:
    """Entries (term, probability) with each probability in (0, 1] and total
    mass 1 within MASS_TOL."""

    entries: tuple[tuple[Term, float], ...]

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("an ensemble cannot be empty")
        if any(p <= 0 for _, p in self.entries):
            raise ValueError("entry probabilities must be positive")
        if abs(self.mass() - 1.0) > MASS_TOL:
            raise ValueError(f"ensemble mass {self.mass()} is not 1")

    def mass(self) -> float:
        return sum(p for _, p in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def to_json(self, status: Status | None = None) -> dict:
        doc = {"entries": [{"term": pretty(t), "p": _round12(p)} for t, p in self.entries]}
        if status is not None:
            doc["status"] = status
        return doc


def _round12(p: float) -> float:
    return float(f"{p:.12g}")


def singleton(t: Term) -> TermEnsemble:
    return TermEnsemble(((t, 1.0),))


def min_ensemble(e: TermEnsemble, tol: float = AMP_TOL) -> TermEnsemble:
    """Merge alpha-equivalent entries, summing probabilities.  Idempotent,
    mass-preserving, and deterministic (first-occurrence order)."""
    groups: list[list] = []
    for term, p in e.entries:
        for group in groups:
            if alpha_eq(group[0], term, tol):
                group[1] += p
                break
        else:
            groups.append([term, p])
    return TermEnsemble(tuple((t, p) for t, p in groups))


def equivalent(a: TermEnsemble, b: TermEnsemble,
               tol: float = PROB_TOL, amp_tol: float = AMP_TOL) -> bool:
    """Ensemble equivalence: equal canonical forms, probabilities within tol."""
    ma, mb = min_ensemble(a, amp_tol), min_ensemble(b, amp_tol)
    if len(ma) != len(mb):
        return False
    remaining = list(mb.entries)
    for term, p in ma.entries:
        for i, (other, q) in enumerate(remaining):
            if abs(p - q) <= tol and alpha_eq(term, other, amp_tol):
                del remaining[i]
                break
        else:
            return False
    return True


# ---------------------------------------------------------------------------
# Determinized reduction


def det_step(e: TermEnsemble, rules: RuleSet, chooser: Chooser,
             cap: int = ENSEMBLE_CAP) -> TermEnsemble:
    """One ensemble step: each entry fires the redex its chooser picks, or
    idles on None.  Mass is preserved.  The chooser must pick from
    enumerate_redexes(term, rules)."""
    out: list[tuple[Term, float]] = []
    for term, p in e.entries:
        choice = chooser(term)
        if choice is None:
            out.append((term, p))
        else:
            for step in step_at(term, *choice):
                out.append((step.target, p * step.probability))
        if len(out) > cap:
            raise EnsembleCapError(f"ensemble exceeded {cap} entries")
    return TermEnsemble(tuple(out))


def strategy_chooser(rules: RuleSet = RULESET_ST) -> Chooser:
    """The deterministic evaluation strategy, restricted to ``rules``."""
    if rules is RULESET_ST:
        return strategy_redex

    def choose(t: Term) -> tuple[Position, str] | None:
        preferred = strategy_redex(t)
        if preferred is not None and preferred[1] in rules:
            return preferred
        redexes = enumerate_redexes(t, rules)
        return redexes[0] if redexes else None

    return choose


def leftmost_chooser(rules: RuleSet) -> Chooser:
    def choose(t: Term) -> tuple[Position, str] | None:
        redexes = enumerate_redexes(t, rules)
        return redexes[0] if redexes else None

    return choose


def rightmost_chooser(rules: RuleSet) -> Chooser:
    def choose(t: Term) -> tuple[Position, str] | None:
        redexes = enumerate_redexes(t, rules)
        return redexes[-1] if redexes else None

    return choose


NAMED_CHOOSERS: dict[str, Callable[[RuleSet], Chooser]] = {
    "strategy": strategy_chooser,
    "leftmost": leftmost_chooser,
    "rightmost": rightmost_chooser,
}

TraceFn = Callable[[int, int, ProbStep], None]


@dataclass(frozen=True)
class EvalResult:
    ensemble: TermEnsemble
    status: Status
    steps: int


def evaluate(t: Term, max_steps: int = 10_000, rules: RuleSet = RULESET_ST,
             chooser: Chooser | None = None, trace: TraceFn | None = None,
             cap: int = ENSEMBLE_CAP) -> EvalResult:
    """Iterate ensemble steps under the chooser (the deterministic strategy
    by default) until every entry is a normal form, canonicalizing along the
    way.  Status is StepLimit when the budget runs out first."""
    if chooser is None:
        chooser = strategy_chooser(rules)
    ens = singleton(t)
    for step_index in range(max_steps):
        choices = [chooser(term) for term, _ in ens.entries]
        if all(c is None for c in choices):
            return EvalResult(min_ensemble(ens), "Converged", step_index)
        out: list[tuple[Term, float]] = []
        for entry_index, ((term, p), choice) in enumerate(zip(ens.entries, choices)):
            if choice is None:
                out.append((term, p))
                continue
            for step in step_at(term, *choice):
                out.append((step.target, p * step.probability))
                if trace is not None:
                    trace(step_index, entry_index, step)
            if len(out) > cap:
                raise EnsembleCapError(f"ensemble exceeded {cap} entries")
        ens = min_ensemble(TermEnsemble(tuple(out)))
    status: Status = "Converged" if all(
        chooser(term) is None for term, _ in ens.entries) else "StepLimit"
    return EvalResult(min_ensemble(ens), status, max_steps)


def sample(t: Term, seed: int, max_steps: int = 10_000,
           trace: TraceFn | None = None) -> Term:
    """One seeded run: follow the deterministic strategy, sampling each
    measurement branch with its Born probability.  Reproducible per seed."""
    rng = random.Random(seed)
    term = t
    for step_index in range(max_steps):
        redex = strategy_redex(term)
        if redex is None:
            return term
        steps = step_at(term, *redex)
        if len(steps) == 1:
            chosen = steps[0]
        else:
            chosen = rng.choices(steps, weights=[s.probability for s in steps])[0]
        if trace is not None:
            trace(step_index, 0, chosen)
        term = chosen.target
    raise StepLimitError(f"no normal form within {max_steps} steps")
