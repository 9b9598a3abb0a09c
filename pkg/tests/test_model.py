from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from minwalk.closed_form import mean_exact
from minwalk.errors import CapExceeded, DegenerateStep, OutOfRange
from minwalk.model import (
    ModelParams,
    WalkState,
    enumerate_distribution,
    exact_moment,
    iter_distributions,
    step_probability,
    validate,
)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_validate_examples():
    assert validate(ModelParams(0.7, 0.2, 0.5)).alpha == pytest.approx(0.5)
    assert validate(ModelParams(0.0, 1.0, 0.0)).alpha == -1.0
    with pytest.raises(OutOfRange) as err:
        validate(ModelParams(1.1, 0.2, 0.5))
    assert err.value.field == "p"


@pytest.mark.parametrize("field", ["p", "q", "s"])
@pytest.mark.parametrize("bad", [-0.01, 1.5, float("nan"), "x"])
def test_validate_names_field(field, bad):
    kw = {"p": 0.5, "q": 0.5, "s": 0.5, field: bad}
    with pytest.raises(OutOfRange) as err:
        validate(ModelParams(**kw))
    assert err.value.field == field
    assert field in str(err.value)


def test_step_probability_examples():
    params = ModelParams(0.8, 0.2)
    assert step_probability(WalkState(5, 0), params) == 0.2
    assert step_probability(WalkState(5, 5), params) == pytest.approx(0.8)
    assert step_probability(WalkState(6, 3), params) == pytest.approx(0.5)
    with pytest.raises(DegenerateStep):
        step_probability(WalkState(0, 0), params)


def test_walk_state_rejects_impossible_positions():
    with pytest.raises(ValueError):
        WalkState(3, 4)
    with pytest.raises(ValueError):
        WalkState(3, -1)


@given(p=unit, q=unit, data=st.data())
def test_step_probability_is_a_probability(p, q, data):
    n = data.draw(st.integers(1, 10**6))
    x = data.draw(st.integers(0, n))
    u = step_probability(WalkState(n, x), ModelParams(p, q))
    assert min(p, q) - 1e-15 <= u <= max(p, q) + 1e-15


def test_n1_table():
    dist = enumerate_distribution(ModelParams(0.3, 0.6, 0.25), 1)
    assert dist.as_mapping() == {0: 0.75, 1: 0.25}
    assert exact_moment(dist, 1) == 0.25
    assert exact_moment(dist, 2) == 0.25


def test_n2_independent_steps():
    s, q = 0.3, 0.4
    dist = enumerate_distribution(ModelParams(q, q, s), 2)
    assert dist[2] == pytest.approx(s * q, abs=1e-15)
    assert dist[1] == pytest.approx(s * (1 - q) + (1 - s) * q, abs=1e-15)
    assert dist[0] == pytest.approx((1 - s) * (1 - q), abs=1e-15)


def test_n3_table_matches_brute_force(oracle):
    exact = oracle(Fraction(4, 5), Fraction(1, 5), Fraction(1, 2), 3)
    dist = enumerate_distribution(ModelParams(0.8, 0.2, 0.5), 3)
    for x in range(4):
        assert dist[x] == pytest.approx(float(exact.get(x, 0)), abs=1e-15)
    assert exact_moment(dist, 1) == pytest.approx(mean_exact(ModelParams(0.8, 0.2, 0.5), 3), rel=1e-14)


@pytest.mark.parametrize("n", [2, 5, 9, 12])
@pytest.mark.parametrize("pqs", [(0.8, 0.2, 0.5), (0.1, 0.9, 0.3), (1.0, 0.0, 0.7), (0.6, 0.6, 1.0)])
def test_dp_matches_brute_force(oracle, n, pqs):
    p, q, s = (Fraction(v).limit_denominator(100) for v in pqs)
    exact = oracle(p, q, s, n)
    dist = enumerate_distribution(ModelParams(*pqs), n)
    got = dist.as_mapping()
    for x in range(n + 1):
        assert got[x] == pytest.approx(float(exact.get(x, 0)), abs=1e-14)


@given(p=unit, q=unit, s=unit, n=st.integers(1, 200))
def test_mass_is_a_distribution(p, q, s, n):
    dist = enumerate_distribution(ModelParams(p, q, s), n)
    assert np.all(dist.mass >= 0)
    assert abs(dist.mass.sum() - 1.0) < 1e-12
    assert dist.support[-1] == n
    assert dist[n + 1] == 0.0


def test_table_is_read_only():
    dist = enumerate_distribution(ModelParams(0.5, 0.5), 4)
    with pytest.raises(ValueError):
        dist.mass[0] = 1.0


def test_cap():
    with pytest.raises(CapExceeded):
        enumerate_distribution(ModelParams(0.5, 0.5), 5000)
    assert enumerate_distribution(ModelParams(0.5, 0.5), 5000, cap=5000).n == 5000


def test_exact_moment_rejects_order_zero():
    with pytest.raises(ValueError):
        exact_moment(enumerate_distribution(ModelParams(0.5, 0.5), 2), 0)


def test_iter_distributions_matches_single_runs():
    params = ModelParams(0.65, 0.15, 0.4)
    tables = list(iter_distributions(params, 40))
    assert [d.n for d in tables] == list(range(1, 41))
    for d in (tables[0], tables[9], tables[-1]):
        assert np.array_equal(d.mass, enumerate_distribution(params, d.n).mass)
