import numpy as np
import pytest
from hypothesis import given, strategies as st

from srk.corpus import generate_corpus, random_rights
from srk.dispatch import solve_dispatch
from srk.errors import DimensionMismatch, InvalidIndex, ValidationError
from srk.rights import (
    Ecr, Fgr, Fsr, Ftr, aggregate, combine, empty_portfolio, portfolio_from_vectors, rent,
)


def test_aggregate_examples():
    p = aggregate([Ftr(0, 1, [1, 1]), Ftr(0, 1, [2, 0])], 2, 2, 2)
    assert np.array_equal(p.T[(0, 1)], [3, 1])
    q = aggregate([Ftr(0, 1, [3]), Ftr(1, 0, [1])], 2, 1, 2)
    assert np.array_equal(q.t[:, 0], [2, -2])
    e = aggregate([], 3, 4, 6)
    assert e.is_empty()
    for arr in (e.t, e.s, e.e):
        assert arr.shape == (3, 4) and not arr.any()
    assert e.f.shape == (6, 4) and not e.f.any()


def test_aggregate_errors():
    with pytest.raises(DimensionMismatch):
        aggregate([Ftr(0, 1, [1.0])], 2, 2, 2)
    with pytest.raises(InvalidIndex):
        aggregate([Ftr(0, 5, [1.0])], 2, 1, 2)
    with pytest.raises(InvalidIndex):
        aggregate([Fgr(2, [1.0])], 2, 1, 2)
    with pytest.raises(InvalidIndex):
        aggregate([Fsr(-1, [1.0])], 2, 1, 2)
    with pytest.raises(ValidationError):
        Ftr(0, 1, [-1.0])
    with pytest.raises(ValidationError):
        Ftr(1, 1, [1.0])
    with pytest.raises(ValidationError):
        Ecr(0, [-0.5])
    with pytest.raises(ValidationError):
        Fgr(0, [np.nan])
    assert Fsr(0, [-1.0, 2.0]).profile[0] == -1.0


def test_rent_examples(sol_b, sol_c):
    r = rent(aggregate([Ftr(0, 1, [3.0])], 2, 1, 2), sol_b)
    assert r.ftr == pytest.approx(12.0, abs=1e-6)
    r = rent(aggregate([Fgr(0, [3.0])], 2, 1, 2), sol_b)
    assert r.fgr == pytest.approx(12.0, abs=1e-6) and r.phi == pytest.approx(12.0, abs=1e-6)
    r = rent(aggregate([Fsr(1, [-1.0, 1.0])], 2, 2, 2), sol_c)
    assert r.fsr == pytest.approx(8.0, abs=1e-6)
    r = rent(aggregate([Ecr(1, [1.0, 0.0])], 2, 2, 2), sol_c)
    assert r.ecr == pytest.approx(8.0, abs=1e-6) and r.sigma == pytest.approx(8.0, abs=1e-6)
    assert r.per_key[("ECR", 1)] == pytest.approx(8.0, abs=1e-6)


def test_rent_dimension_check(sol_b):
    with pytest.raises(DimensionMismatch):
        rent(empty_portfolio(2, 2, 2), sol_b)


_CORPUS = generate_corpus(23, 12)
_SOLUTIONS = [solve_dispatch(s) for s in _CORPUS]


@given(st.integers(0, len(_CORPUS) - 1), st.integers(0, 10_000), st.integers(0, 10_000))
def test_rent_is_linear(q, seed1, seed2):
    s, sol = _CORPUS[q], _SOLUTIONS[q]
    p1 = random_rights(np.random.default_rng(seed1), s, False)
    p2 = random_rights(np.random.default_rng(seed2), s, False)
    assert rent(combine(p1, p2), sol).total == pytest.approx(rent(p1, sol).total + rent(p2, sol).total, abs=1e-9)
    assert rent(p1.scaled(2.5), sol).total == pytest.approx(2.5 * rent(p1, sol).total, abs=1e-9)


@given(st.integers(0, len(_CORPUS) - 1), st.integers(0, 10_000))
def test_ftr_antisymmetry_and_dual_signs(q, seed):
    s, sol = _CORPUS[q], _SOLUTIONS[q]
    rng = np.random.default_rng(seed)
    i, j = (int(x) for x in rng.choice(s.n, 2, replace=False))
    prof = rng.uniform(0, 3, s.N)
    fwd = rent(aggregate([Ftr(i, j, prof)], s.n, s.N, 2 * s.m), sol).total
    back = rent(aggregate([Ftr(j, i, prof)], s.n, s.N, 2 * s.m), sol).total
    assert fwd == pytest.approx(-back, abs=1e-12)
    l = int(rng.integers(0, 2 * s.m))
    node = int(rng.integers(0, s.n))
    rs = rent(aggregate([Fgr(l, prof), Ecr(node, prof)], s.n, s.N, 2 * s.m), sol)
    assert rs.fgr >= -1e-9 and rs.ecr >= -1e-9


def test_portfolio_from_vectors_reproduces_injections():
    t = np.array([[1.0, -2.0], [-3.0, 0.5], [2.0, 1.5]])
    p = portfolio_from_vectors(t, np.zeros((4, 2)), s=np.array([[0, 0], [1.0, -1.0], [0, 0]]))
    assert np.allclose(p.t, t)
    assert np.allclose(p.s[1], [1.0, -1.0])
    assert all(i != j for i, j in p.T)


def test_scaled_rejects_negative():
    with pytest.raises(ValidationError):
        empty_portfolio(2, 1, 2).scaled(-1.0)
