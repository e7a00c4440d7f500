import math
from collections import Counter

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from qlam.confluence import (
    BudgetExceededError,
    GenConfig,
    check_diamond,
    check_diamond_ensemble,
    generate,
    regression_seeds,
    run_suite,
)
from qlam.ensemble import TermEnsemble, equivalent, singleton
from qlam.parser import parse_term
from qlam.reduction import RULESET_S, RULESET_T
from qlam.syntax import (
    App,
    BangLam,
    If,
    Lam,
    LetTensor,
    MeasConst,
    QubitConst,
    Var,
    alpha_eq,
    children,
)
from qlam.wellformed import check

from conftest import random_terms

S2 = f"{1 / math.sqrt(2):.17g}"
HALF = f"(({S2},0)!|0> + ({S2},0)!|1>)"


# ---------------------------------------------------------------------------
# generator


def test_generate_deterministic():
    cfg = GenConfig(count=40, seed=42)
    a, b = generate(cfg), generate(cfg)
    assert all(x == y for x, y in zip(a, b))


def test_generate_seed_changes_output():
    a = generate(GenConfig(count=30, seed=1))
    b = generate(GenConfig(count=30, seed=2))
    assert any(x != y for x, y in zip(a, b))


def test_generate_all_well_formed():
    for t in generate(GenConfig(count=1000, seed=5)):
        assert check(t).verdict


def test_generator_includes_regression_shapes():
    corpus = generate(GenConfig(count=20, seed=0))
    seeds = regression_seeds()
    for seed in seeds:
        assert any(alpha_eq(seed, t) for t in corpus)
    # the copying and promotion shapes, and the two commutation shapes
    assert isinstance(seeds[0].fun, BangLam)
    assert isinstance(seeds[2].fun, Lam) and isinstance(seeds[2].arg.fun, MeasConst)
    assert isinstance(seeds[3].fun, App) and isinstance(seeds[3].fun.fun, MeasConst)


def test_constructor_coverage():
    counts = Counter()
    total = 0
    for t in generate(GenConfig(count=10_000, seed=3)):
        stack = [t]
        while stack:
            node = stack.pop()
            counts[type(node).__name__] += 1
            total += 1
            stack.extend(children(node))
    for name in ("Var", "Lam", "BangLam", "App", "Bang", "GateConst",
                 "QubitConst", "MeasConst", "If", "LetTensor"):
        assert counts[name] / total > 0.01, (name, counts[name], total)


# ---------------------------------------------------------------------------
# diamonds


def test_normal_form_vacuously_confluent():
    report = check_diamond(parse_term(r"\x. x"), RULESET_T, RULESET_T)
    assert report.pairs_checked == 0 and report.ok


def test_two_measurements_commute():
    t = parse_term(f"(M{{1}} {HALF}) (M{{1}} ((0.6,0)!|0> + (0.8,0)!|1>))")
    report = check_diamond(t, RULESET_T, RULESET_T)
    assert report.ok and report.pairs_checked > 0


def test_substitution_commutes_with_measurement():
    t = parse_term(r"(\x. H x) (M{1} " + HALF + ")")
    report = check_diamond(t, RULESET_S, RULESET_T)
    assert report.ok


def test_budget_exceeded_raises():
    t = parse_term(f"(M{{1}} {HALF}) (M{{1}} {HALF})")
    with pytest.raises(BudgetExceededError):
        check_diamond(t, RULESET_T, RULESET_T, pair_cap=1)


def test_diamond_detects_genuine_failure():
    """A non-confluent ad-hoc shape must be reported, not smoothed over: a
    linear variable duplicated into both conditional arms (rejected by the
    checker for exactly this reason) breaks the one-step diamond."""
    m = parse_term(f"M{{1}} {HALF}")
    bad = App(Lam("x", If(QubitConst_bit0(),
                          App(Var("f"), Var("x")),
                          App(Var("x"), Var("g")))), m)
    assert not check(bad).verdict
    report = check_diamond(bad, RULESET_S, RULESET_T)
    assert not report.ok


def QubitConst_bit0():
    from qlam.quantum import QubitValue

    return QubitConst(QubitValue(1, {0: 1.0}))


def test_suite_smoke():
    summary = run_suite(GenConfig(count=120, seed=9))
    assert summary.ok
    for result in summary.results:
        assert result.terms_checked == 120
        assert result.failures == []


def test_suite_replay_is_identical():
    cfg = GenConfig(count=60, seed=17)
    a, b = run_suite(cfg), run_suite(cfg)
    for ra, rb in zip(a.results, b.results):
        assert (ra.terms_checked, ra.pairs_checked, ra.failures) == \
            (rb.terms_checked, rb.pairs_checked, rb.failures)


# ---------------------------------------------------------------------------
# lifting to multi-term ensembles


def test_lifting_consistency():
    """Diamonds over two-term ensembles agree with the single-term checks:
    both find no failures on generated corpora."""
    terms = random_terms(23, 24, max_size=8)
    for a, b in zip(terms[::2], terms[1::2]):
        tau = TermEnsemble(((a, 0.5), (b, 0.5)))
        try:
            joint = check_diamond_ensemble(tau, RULESET_S, RULESET_T)
            single_a = check_diamond(a, RULESET_S, RULESET_T)
            single_b = check_diamond(b, RULESET_S, RULESET_T)
        except BudgetExceededError:
            continue
        assert joint.ok == (single_a.ok and single_b.ok)
        assert joint.ok


# ---------------------------------------------------------------------------
# equivalence is a congruence


_CONTEXTS = [
    lambda t: App(Lam("w", Var("w")), t),
    lambda t: App(t, QubitConst_bit0()),
    lambda t: If(t, Var("a"), Var("b")),
    lambda t: Lam("w", App(Var("w"), t)),
    lambda t: LetTensor("p", "q", t, Var("p")),
]


@given(st.integers(0, 2**32 - 1), st.sampled_from(_CONTEXTS))
@settings(max_examples=40)
def test_plugging_preserves_equivalence(seed, context):
    t = random_terms(seed, 1, max_size=6)[0]
    omega1 = singleton(t)
    omega2 = TermEnsemble(((t, 0.5), (t, 0.5)))
    assert equivalent(omega1, omega2)
    tau1 = TermEnsemble(tuple((context(u), p) for u, p in omega1.entries))
    tau2 = TermEnsemble(tuple((context(u), p) for u, p in omega2.entries))
    assert equivalent(tau1, tau2)
