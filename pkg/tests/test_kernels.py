import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dtn_incentive import _kernels_py, kernels

try:
    from dtn_incentive import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

needs_ext = pytest.mark.skipif(compiled is None, reason="compiled extension not built")

arrays = st.integers(1, 9).flatmap(
    lambda n: st.tuples(
        st.lists(st.floats(0.01, 10.0), min_size=n, max_size=n),
        st.lists(st.floats(0.01, 10.0), min_size=n, max_size=n),
        st.integers(0, n - 1),
    )
)


def _brute_race(lam, mu, cand):
    """Direct recursion over holder sets, memoised on the set."""
    n = len(lam)
    memo = {}

    def win(mask):
        if mask in memo:
            return memo[mask]
        out_rate = sum(lam[u] for u in range(n) if not mask >> u & 1)
        held_rate = sum(mu[h] for h in range(n) if mask >> h & 1)
        total = mu[cand] + sum(lam[u] * win(mask | 1 << u) for u in range(n) if not mask >> u & 1)
        memo[mask] = total / (out_rate + held_rate)
        return memo[mask]

    return np.array([win(m) if m >> cand & 1 else 0.0 for m in range(1 << n)])


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")


@given(arrays)
def test_fallback_race_table_matches_recursion(case):
    lam, mu, cand = case
    lam, mu = np.array(lam), np.array(mu)
    got = _kernels_py.race_table(lam, mu, cand)
    want = _brute_race(lam, mu, cand)
    held = [(m >> cand) & 1 == 1 for m in range(1 << len(lam))]
    np.testing.assert_allclose(got[held], want[held], rtol=1e-12)


@needs_ext
@given(arrays)
def test_compiled_race_table_matches_fallback(case):
    lam, mu, cand = case
    lam, mu = np.ascontiguousarray(lam, float), np.ascontiguousarray(mu, float)
    np.testing.assert_allclose(compiled.race_table(lam, mu, cand),
                               _kernels_py.race_table(lam, mu, cand), rtol=1e-13, atol=1e-300)


def _brute_subset_sum(x, y, vals, size):
    n = len(x)
    total = 0.0
    for m in range(1 << n):
        if size >= 0 and bin(m).count("1") != size:
            continue
        term = vals[m]
        for i in range(n):
            term *= x[i] if m >> i & 1 else y[i]
        total += term
    return total


@given(st.integers(0, 8).flatmap(lambda n: st.tuples(
    st.lists(st.floats(0, 1), min_size=n, max_size=n),
    st.lists(st.floats(0, 1), min_size=n, max_size=n),
    st.lists(st.floats(0, 1), min_size=1 << n, max_size=1 << n),
    st.integers(-1, n))))
def test_subset_sum_backends(case):
    x, y, vals, size = (np.ascontiguousarray(a, float) if isinstance(a, list) else a for a in case)
    want = _brute_subset_sum(x, y, vals, size)
    assert _kernels_py.subset_sum(x, y, vals, size) == pytest.approx(want, rel=1e-12, abs=1e-300)
    if compiled is not None:
        assert compiled.subset_sum(x, y, vals, size) == pytest.approx(want, rel=1e-12, abs=1e-300)


def test_race_table_two_relays_closed_form():
    # holder 0 alone, relay 1 still to arrive: deliver first, or let 1 arrive then win the duel
    lam, mu = np.array([0.7, 1.3]), np.array([0.4, 2.2])
    t = kernels.race_table(lam, mu, 0)
    duel = mu[0] / (mu[0] + mu[1])
    alone = mu[0] / (mu[0] + lam[1]) + lam[1] / (mu[0] + lam[1]) * duel
    assert t[0b11] == pytest.approx(duel)
    assert t[0b01] == pytest.approx(alone)
