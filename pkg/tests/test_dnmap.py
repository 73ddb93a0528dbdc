import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logcalderon import (
    CoercivityError,
    DNCache,
    DNOracle,
    assemble_dn_map,
    assemble_log_form,
    build_grid,
    define_regions,
    integral_identity_residual,
    monotonicity_bounds,
)
from logcalderon.dnmap import q_tag
from logcalderon.solver import DirichletProblem

from conftest import TRUTH_1D, block_potential, potential_matrix


@pytest.fixture(scope="module")
def q_base(grid1, regions1):
    return block_potential(grid1, regions1, TRUTH_1D).values


@pytest.fixture(scope="module")
def split_regions(grid1):
    """Disjoint windows: W1 left of Omega, W2 right of it."""
    return define_regions(grid1, {"box": [-0.5, 0.5]}, {"box": [-1.2, -0.6]}, {"box": [0.6, 1.2]})


def Qm(grid, q):
    return np.diag(q * grid.cell_volume)


@pytest.mark.parametrize("which", ["regions1", "split_regions"])
def test_schur_matches_explicit_solve(grid1, K1, q_base, which, request):
    regions = request.getfixturevalue(which)
    Q = Qm(grid1, q_base)
    L = assemble_dn_map(K1, Q, regions, grid1.grid_hash)
    assert L.matrix.shape == (regions.w2.size, regions.w1.size)
    A = K1.matrix + Q
    problem = DirichletProblem(grid1, K1, Q, regions.omega)
    rng = np.random.default_rng(5)
    for _ in range(10):
        fc, gc = rng.standard_normal(regions.w1.size), rng.standard_normal(regions.w2.size)
        f = np.zeros(grid1.num_cells)
        f[regions.w1] = fc
        v = np.zeros(grid1.num_cells)
        v[regions.w2] = gc
        u, _ = problem.solve_values(f)
        explicit = v @ A @ u  # B_q(u_f, v_g) with v_g the zero extension of g
        assert L.pair(fc, gc) == pytest.approx(explicit, rel=1e-10, abs=1e-12)


def test_symmetric_when_windows_equal(grid1, regions1, K1, q_base):
    L = assemble_dn_map(K1, Qm(grid1, q_base), regions1)
    S = L.matrix
    assert np.max(np.abs(S - S.T)) <= 1e-10 * np.max(np.abs(S))
    assert L.windows_equal


def test_two_dimensional_symmetry():
    g = build_grid([[-1.0, -1.0], [1.0, 1.0]], [8, 8])
    r = define_regions(g, {"box": [[-0.3, -0.3], [0.3, 0.3]]}, {"box": [[0.6, -0.9], [0.9, 0.9]]})
    K = assemble_log_form(g)
    L = assemble_dn_map(K, np.zeros((64, 64)), r)
    assert L.symmetry_defect() <= 1e-10


@pytest.mark.parametrize("c", [0.1, 1.0, 5.0])
def test_constant_shift_is_monotone(grid1, regions1, K1, q_base, c):
    L0 = assemble_dn_map(K1, Qm(grid1, q_base), regions1).matrix
    q = q_base.copy()
    q[regions1.omega] += c
    L1 = assemble_dn_map(K1, Qm(grid1, q), regions1).matrix
    assert np.linalg.eigvalsh(L1 - L0)[0] >= -1e-10


def test_indefinite_potential_rejected(grid1, regions1, K1):
    Q = potential_matrix(grid1, regions1, np.full(regions1.omega.size, -5.0))
    with pytest.raises(CoercivityError):
        assemble_dn_map(K1, Q, regions1)


def test_extended_precision_agrees_with_double(grid1, regions1, K1, q_base):
    lo = assemble_dn_map(K1, Qm(grid1, q_base), regions1)
    hi = assemble_dn_map(K1, Qm(grid1, q_base), regions1, precision_bits=170)
    assert hi.hp is not None and hi.precision_bits == 170
    np.testing.assert_allclose(hi.matrix, lo.matrix, rtol=0, atol=1e-12 * np.abs(lo.matrix).max())


# --- integral identity -------------------------------------------------------


def test_identity_vanishes_for_equal_potentials(grid1, regions1, K1, q_base):
    f = np.ones(regions1.w1.size)
    lhs, rhs, res = integral_identity_residual(grid1, K1, regions1, q_base, q_base, f, f)
    assert abs(lhs) <= 1e-12 and abs(rhs) <= 1e-12 and res <= 1e-12


def random_potential(grid, regions, rng, low=0.0, high=2.0):
    q = np.zeros(grid.num_cells)
    q[regions.omega] = rng.uniform(low, high, regions.omega.size)
    return q


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_integral_identity(grid1, split_regions, K1, seed):
    rng = np.random.default_rng(seed)
    q1, q2 = random_potential(grid1, split_regions, rng), random_potential(grid1, split_regions, rng)
    f1 = rng.standard_normal(split_regions.w1.size)
    f2 = rng.standard_normal(split_regions.w2.size)
    lhs, rhs, res = integral_identity_residual(grid1, K1, split_regions, q1, q2, f1, f2)
    assert res <= 1e-9 * max(abs(lhs), abs(rhs), 1.0)
    lhs2, rhs2, _ = integral_identity_residual(grid1, K1, split_regions, q2, q1, f1, f2)
    assert lhs2 == pytest.approx(-lhs, rel=1e-9, abs=1e-15)
    assert rhs2 == pytest.approx(-rhs, rel=1e-9, abs=1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_monotonicity_bounds(grid1, regions1, K1, seed):
    rng = np.random.default_rng(seed)
    q1 = random_potential(grid1, regions1, rng, -0.2, 1.0)
    q2 = random_potential(grid1, regions1, rng, -0.2, 1.0)
    f = rng.standard_normal(regions1.w1.size)
    lower, middle, upper = monotonicity_bounds(grid1, K1, regions1, q1, q2, f)
    slack = 1e-9 * max(abs(lower), abs(middle), abs(upper), 1e-300)
    assert lower - slack <= middle <= upper + slack


def test_bounds_need_equal_windows(grid1, split_regions, K1, q_base):
    with pytest.raises(ValueError, match="W1 = W2"):
        monotonicity_bounds(grid1, K1, split_regions, q_base, q_base, np.ones(split_regions.w1.size))


# --- oracle and cache --------------------------------------------------------


def test_oracle_caches_by_potential(grid1, regions1, K1, q_base):
    oracle = DNOracle(grid1, K1, regions1)
    a = oracle(q_base)
    b = oracle(q_base.copy())
    assert a is b and oracle.cache.misses == 1
    assert a.q_tag == q_tag(q_base)
    c = oracle(q_base * 2)
    assert c is not a and len(oracle.cache) == 2


def test_oracle_rejects_exterior_potential(grid1, regions1, K1):
    q = np.zeros(grid1.num_cells)
    q[0] = 1.0
    with pytest.raises(ValueError, match="outside Omega"):
        DNOracle(grid1, K1, regions1)(q)


def test_cache_under_concurrent_access(grid1, regions1, K1, q_base):
    cache = DNCache()
    oracle = DNOracle(grid1, K1, regions1, cache=cache)
    potentials = [q_base * (1 + k % 4) for k in range(32)]
    results = [None] * len(potentials)
    start = threading.Barrier(len(potentials), timeout=30)

    def work(k):
        start.wait()  # every thread hits the cold cache at once
        results[k] = oracle(potentials[k])

    threads = [threading.Thread(target=work, args=(k,)) for k in range(len(potentials))]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert cache.misses == 4 and len(cache) == 4
    for k, L in enumerate(results):
        assert L is results[k % 4]


def test_cache_key_separates_precision(grid1, regions1, K1, q_base):
    cache = DNCache()
    lo = DNOracle(grid1, K1, regions1, cache=cache)(q_base)
    hi = DNOracle(grid1, K1, regions1, cache=cache, precision_bits=120)(q_base)
    assert lo is not hi and cache.misses == 2


def test_persisted_envelope(grid1, regions1, K1, q_base):
    d = assemble_dn_map(K1, Qm(grid1, q_base), regions1, grid1.grid_hash, "truth").to_dict()
    assert d["q_tag"] == "truth" and d["grid_hash"] == grid1.grid_hash
    assert d["rows"] == regions1.w2.tolist()
