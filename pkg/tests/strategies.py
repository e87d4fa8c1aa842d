"""Hypothesis strategies shared by the test modules."""
from hypothesis import strategies as st

from mtlflow.formula import Always, And, Atom, Eventually, Not, Or, TrueF, Until

NAMES = ("a", "b", "goal")


@st.composite
def intervals(draw, max_bound=3):
    t1 = draw(st.integers(0, max_bound))
    t2 = draw(st.integers(t1, max_bound))
    return (t1, t2)


def formulas(max_leaves=8, max_bound=3):
    leaves = st.one_of(st.sampled_from(NAMES).map(Atom), st.just(TrueF()))

    def extend(inner):
        return st.one_of(
            inner.map(Not),
            st.lists(inner, min_size=2, max_size=3).map(lambda cs: And(tuple(cs))),
            st.lists(inner, min_size=2, max_size=3).map(lambda cs: Or(tuple(cs))),
            st.builds(Until, inner, inner, intervals(max_bound)),
            st.builds(Eventually, inner, intervals(max_bound)),
            st.builds(Always, inner, intervals(max_bound)),
        )

    return st.recursive(leaves, extend, max_leaves=max_leaves)


def traces(length, names=NAMES):
    step = st.frozensets(st.sampled_from(names))
    return st.lists(step, min_size=length, max_size=length)
