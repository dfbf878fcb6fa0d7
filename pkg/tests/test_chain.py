from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import stationary_distribution
from petrigame.chain import analyze_chain, gain_and_bias, gains, solve


@st.composite
def chains(draw, max_states=6):
    n = draw(st.integers(1, max_states))
    P = []
    for _ in range(n):
        support = draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n))
        weights = [draw(st.integers(1, 4)) for _ in support]
        total = sum(weights)
        P.append({y: Fraction(w, total) for y, w in zip(sorted(support), weights)})
    r = [Fraction(draw(st.integers(-3, 3))) for _ in range(n)]
    return P, r


def apply(P, v):
    return [sum((p * v[y] for y, p in row.items()), Fraction(0)) for row in P]


@given(chains())
def test_gain_and_bias_solve_the_average_reward_equations(chain):
    P, r = chain
    g, h = gain_and_bias(P, r)
    assert apply(P, g) == g
    assert [g[x] + h[x] for x in range(len(P))] == [r[x] + apply(P, h)[x] for x in range(len(P))]


@given(chains())
def test_limit_rows_are_distributions_and_invariant(chain):
    P, _ = chain
    info = analyze_chain(P)
    for x in range(len(P)):
        row = info.limit_row(x)
        assert sum(row.values()) == 1
        moved = {}
        for y, q in row.items():
            for z, p in P[y].items():
                moved[z] = moved.get(z, Fraction(0)) + q * p
        assert {k: v for k, v in moved.items() if v} == {k: v for k, v in row.items() if v}


@given(chains())
def test_stationary_distribution_matches_sympy_on_closed_classes(chain):
    P, _ = chain
    info = analyze_chain(P)
    for members, pi in zip(info.classes, info.stationary):
        sub = {x: {y: p for y, p in P[x].items()} for x in members}
        assert stationary_distribution(members, sub) == pi


def test_gains_with_transient_states():
    # 0 is transient and splits evenly between absorbing states 1 and 2
    half = Fraction(1, 2)
    P = [{1: half, 2: half}, {1: Fraction(1)}, {2: Fraction(1)}]
    assert gains(P, [[Fraction(0)], [Fraction(4)], [Fraction(2)]]) == [[3], [4], [2]]


def test_solve_detects_singular_systems():
    with pytest.raises(ZeroDivisionError):
        solve([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]], [[Fraction(1)], [Fraction(2)]])
