import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtlflow.formula import (Always, And, Atom, Eventually, FormulaSyntaxError,
                             HorizonError, IntervalError, Not, Or, TrueF, Until,
                             atoms, evaluate, horizon, in_convex_fragment, parse,
                             random_formula, random_fragment_formula, size,
                             subformulas, to_text)

from strategies import NAMES, formulas, traces

E = frozenset()


# parsing

def test_parse_eventually():
    assert parse("F[0,15] goal") == Eventually(Atom("goal"), (0, 15))


def test_parse_until_with_negation():
    assert parse("(!obstacle) U[0,15] goal") == Until(Not(Atom("obstacle")), Atom("goal"), (0, 15))


def test_parse_reversed_interval():
    with pytest.raises(IntervalError):
        parse("G[2,1] a")


def test_parse_negative_bound():
    with pytest.raises(IntervalError):
        parse("G[-1,2] a")


def test_precedence():
    # ! > temporal prefix > & > |
    assert parse("a | b & c") == Or((Atom("a"), And((Atom("b"), Atom("c")))))
    assert parse("!F[0,1] a & b") == And((Not(Eventually(Atom("a"), (0, 1))), Atom("b")))
    assert parse("G[0,2] a & b") == And((Always(Atom("a"), (0, 2)), Atom("b")))
    assert parse("a & b & c") == And((Atom("a"), Atom("b"), Atom("c")))


def test_until_operands_and_chains():
    assert parse("!a U[0,2] b & c") == And((Until(Not(Atom("a")), Atom("b"), (0, 2)), Atom("c")))
    with pytest.raises(FormulaSyntaxError):
        parse("a U[0,1] b U[0,1] c")
    assert parse("(a U[0,1] b) U[0,1] c") == Until(Until(Atom("a"), Atom("b"), (0, 1)), Atom("c"), (0, 1))


def test_true_literal():
    assert parse("true") == TrueF()
    assert parse("F[0,1] true") == Eventually(TrueF(), (0, 1))


@pytest.mark.parametrize("text, pos", [("a &", 3), ("a $ b", 2), ("(a", 2), ("a b", 2), ("", 0)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(FormulaSyntaxError) as info:
        parse(text)
    assert info.value.position == pos


def test_node_invariants():
    with pytest.raises(ValueError):
        And((Atom("a"),))
    with pytest.raises(IntervalError):
        Eventually(Atom("a"), (3, 1))


@settings(max_examples=300, deadline=None)
@given(formulas())
def test_round_trip(f):
    assert parse(to_text(f)) == f


# horizon

def test_horizon_examples():
    assert horizon(Atom("goal")) == 0
    assert horizon(Until(Not(Atom("obstacle")), Atom("goal"), (0, 15))) == 15
    assert horizon(Eventually(Always(Atom("a"), (0, 5)), (0, 10))) == 15


def test_horizon_is_tight_by_brute_force():
    # a trace differing only at step 15 flips F[0,10] G[0,5] a
    f = Eventually(Always(Atom("a"), (0, 5)), (0, 10))
    w = [E] * 10 + [frozenset({"a"})] * 5 + [E]
    assert not evaluate(f, w)
    w[15] = frozenset({"a"})
    assert evaluate(f, w)


@settings(max_examples=200, deadline=None)
@given(formulas())
def test_horizon_monotone(f):
    h = horizon(f)
    assert all(horizon(g) <= h for g in subformulas(f))


# semantics

def test_evaluate_examples():
    assert evaluate(Atom("goal"), [E, frozenset({"goal"})], 1)
    f = Until(Not(Atom("obs")), Atom("goal"), (0, 1))
    assert evaluate(f, [E, frozenset({"goal"})], 0)
    assert not evaluate(Always(Not(Atom("obs")), (0, 1)), [frozenset({"obs"}), E], 0)


def test_evaluate_short_trace():
    with pytest.raises(HorizonError):
        evaluate(Eventually(Atom("a"), (0, 3)), [E, E, E], 0)
    with pytest.raises(HorizonError):
        evaluate(Atom("a"), [E, E], 2)


def test_until_empty_prefix_counts():
    # right holds immediately: left is never consulted
    f = Until(Atom("never"), Atom("goal"), (0, 2))
    assert evaluate(f, [frozenset({"goal"}), E, E])
    # lower bound forces left to hold before the window opens
    g = Until(Atom("a"), Atom("goal"), (1, 2))
    assert not evaluate(g, [frozenset({"goal"}), frozenset({"goal"}), E])
    assert evaluate(g, [frozenset({"a"}), frozenset({"goal"}), E])


def _naive(f, w, t):
    """Direct transcription of the semantics, no memoisation."""
    if isinstance(f, TrueF):
        return True
    if isinstance(f, Atom):
        return f.name in w[t]
    if isinstance(f, Not):
        return not _naive(f.child, w, t)
    if isinstance(f, And):
        return all(_naive(c, w, t) for c in f.children)
    if isinstance(f, Or):
        return any(_naive(c, w, t) for c in f.children)
    a, b = f.interval
    if isinstance(f, Eventually):
        return any(_naive(f.child, w, k) for k in range(t + a, t + b + 1))
    if isinstance(f, Always):
        return all(_naive(f.child, w, k) for k in range(t + a, t + b + 1))
    return any(_naive(f.right, w, k) and all(_naive(f.left, w, j) for j in range(t, k))
               for k in range(t + a, t + b + 1))


@settings(max_examples=300, deadline=None)
@given(st.data())
def test_evaluate_matches_naive(data):
    f = data.draw(formulas())
    h = horizon(f)
    w = data.draw(traces(h + 3))
    t = data.draw(st.integers(0, 2))
    assert evaluate(f, w, t) == _naive(f, w, t)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_locality(data):
    f = data.draw(formulas())
    h = horizon(f)
    t = data.draw(st.integers(0, 2))
    w = data.draw(traces(t + h + 3))
    w2 = data.draw(traces(t + h + 3))
    w2[t:t + h + 1] = w[t:t + h + 1]
    assert evaluate(f, w, t) == evaluate(f, w2, t)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_duality(data):
    f = data.draw(formulas(max_leaves=4))
    iv = data.draw(st.tuples(st.integers(0, 3), st.integers(0, 3)).map(sorted))
    iv = tuple(iv)
    lhs = Not(Eventually(f, iv))
    rhs = Always(Not(f), iv)
    w = data.draw(traces(horizon(lhs) + 2))
    t = data.draw(st.integers(0, 1))
    assert evaluate(lhs, w, t) == evaluate(rhs, w, t)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_until_base_case(data):
    l, r = data.draw(formulas(max_leaves=4)), data.draw(formulas(max_leaves=4))
    f = Until(l, r, (0, 0))
    w = data.draw(traces(horizon(f) + 2))
    t = data.draw(st.integers(0, 1))
    assert evaluate(f, w, t) == evaluate(r, w, t)


# fragment

def test_fragment_examples():
    assert in_convex_fragment(Eventually(Or((Atom("t1"), Atom("t2"))), (5, 5)))
    assert not in_convex_fragment(Eventually(Atom("goal"), (0, 15)))
    assert not in_convex_fragment(Always(Not(Atom("obs")), (0, 15)))
    assert in_convex_fragment(Always(Not(Atom("obs")), (0, 15)), allow_negated_atoms=True)


def test_fragment_shapes():
    yes = ["G[0,3] (a | b & c)", "F[2,2] a & G[0,1] b", "a U[2,2] (b | c)",
           "G[0,1] a & (F[1,1] b & a U[0,0] b)"]
    no = ["a", "F[0,1] a", "a U[0,2] b", "G[0,1] F[0,0] a", "G[0,1] a | F[1,1] b",
          "G[0,1] true", "!G[0,1] a"]
    for text in yes:
        assert in_convex_fragment(parse(text)), text
    for text in no:
        assert not in_convex_fragment(parse(text)), text


def test_random_fragment_formulas_are_inside():
    rng = np.random.default_rng(4)
    for _ in range(100):
        f = random_fragment_formula(rng, NAMES, max_time=4)
        assert in_convex_fragment(f)
        assert horizon(f) <= 4


def test_distinct_atoms_option():
    rng = np.random.default_rng(6)
    for _ in range(100):
        f = random_fragment_formula(rng, ["p", "q", "r", "s"], 4, n_conjuncts=3,
                                    distinct_atoms=True)
        assert in_convex_fragment(f)
        parts = f.children if isinstance(f, And) else (f,)
        for g in parts:
            for psi in ((g.left, g.right) if isinstance(g, Until) else (g.child,)):
                names = [h.name for h in subformulas(psi) if isinstance(h, Atom)]
                assert len(names) == len(set(names))


# helpers and generator

def test_size_and_atoms():
    f = parse("(!a) U[0,2] (b | goal)")
    assert size(f) == 6  # U, !, a, |, b, goal
    assert atoms(f) == {"a", "b", "goal"}


def test_random_formula_seeded_and_bounded():
    a = [random_formula(np.random.default_rng(9), NAMES, 3) for _ in range(2)]
    assert a[0] == a[1]
    rng = np.random.default_rng(1)
    for _ in range(200):
        f = random_formula(rng, NAMES, 3, max_bound=2)
        assert horizon(f) <= 6
        assert atoms(f) <= set(NAMES)


def test_random_formula_weights():
    rng = np.random.default_rng(2)
    only_g = {"atom": 1.0, "always": 1.0}
    for _ in range(50):
        f = random_formula(rng, NAMES, 2, weights=only_g)
        assert all(isinstance(g, (Atom, Always)) for g in subformulas(f))


def test_all_short_traces_for_small_formula():
    # exhaustive check over every 3-step trace on one proposition
    f = parse("a U[1,2] !a")
    for bits in itertools.product([0, 1], repeat=3):
        w = [frozenset({"a"}) if b else E for b in bits]
        expected = (bits[0] and not bits[1]) or (bits[0] and bits[1] and not bits[2])
        assert evaluate(f, w) == bool(expected)
