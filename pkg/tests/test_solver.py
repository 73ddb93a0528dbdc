import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logcalderon import CellField, CoercivityError, minimal_extension, solve_dirichlet
from logcalderon.solver import DirichletProblem, g_norm, inertia, stability_audit

from conftest import potential_matrix


@pytest.fixture(scope="module")
def Q1(grid1, regions1):
    return potential_matrix(grid1, regions1, np.linspace(0.2, 1.0, regions1.omega.size))


def data(grid, regions, seed):
    rng = np.random.default_rng(seed)
    f = CellField.on(grid, regions.windows, rng.standard_normal(regions.windows.size), "exterior")
    F = CellField.on(grid, regions.omega, rng.standard_normal(regions.omega.size), "omega")
    return f, F


def test_zero_data_gives_zero(grid1, regions1, K1, Q1):
    f = CellField.zeros(grid1, regions1.windows, "exterior")
    F = CellField.zeros(grid1, regions1.omega, "omega")
    rep = solve_dirichlet(grid1, K1, Q1, f, F, regions1.omega)
    assert not rep.u.values.any()


@pytest.mark.parametrize("seed", range(5))
def test_weak_form_residual(grid1, regions1, K1, Q1, seed):
    f, F = data(grid1, regions1, seed)
    rep = solve_dirichlet(grid1, K1, Q1, f, F, regions1.omega)
    u = rep.u.values
    A = K1.matrix + Q1
    I = regions1.omega
    E = np.setdiff1d(np.arange(grid1.num_cells), I)
    # A_II u_I = M_II F_I - A_IE f_E, i.e. B_q(u, chi_i) = (F, chi_i) on Omega
    rhs = grid1.cell_volume * F.values[I] - A[np.ix_(I, E)] @ f.values[E]
    assert np.linalg.norm(A[np.ix_(I, I)] @ u[I] - rhs) <= 1e-10 * np.linalg.norm(rhs)
    assert rep.linear_residual <= 1e-10
    outside = np.setdiff1d(np.arange(grid1.num_cells), I)
    np.testing.assert_array_equal(u[outside], f.values[outside])


def test_solves_are_bit_identical(grid1, regions1, K1, Q1):
    f, F = data(grid1, regions1, 11)
    a = solve_dirichlet(grid1, K1, Q1, f, F, regions1.omega).u.values
    b = solve_dirichlet(grid1, K1, Q1, f, F, regions1.omega).u.values
    assert a.tobytes() == b.tobytes()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 2**31))
def test_superposition(grid1, regions1, K1, Q1, s1, s2):
    p = DirichletProblem(grid1, K1, Q1, regions1.omega)
    f1, _ = data(grid1, regions1, s1)
    f2, _ = data(grid1, regions1, s2)
    u1, _ = p.solve_values(f1.values)
    u2, _ = p.solve_values(f2.values)
    u12, _ = p.solve_values((f1 + f2).values)
    np.testing.assert_allclose(u12, u1 + u2, rtol=0, atol=1e-10 * max(1.0, np.abs(u12).max()))


def test_wrong_supports_rejected(grid1, regions1, K1, Q1):
    f, F = data(grid1, regions1, 0)
    with pytest.raises(ValueError, match="exterior data"):
        solve_dirichlet(grid1, K1, Q1, F, F, regions1.omega)
    with pytest.raises(ValueError, match="source F"):
        solve_dirichlet(grid1, K1, Q1, f, f, regions1.omega)


def test_indefinite_block_raises_coercivity_error(grid1, regions1, K1):
    Q = potential_matrix(grid1, regions1, np.full(regions1.omega.size, -5.0))
    f, F = data(grid1, regions1, 0)
    with pytest.raises(CoercivityError, match="lambda_1") as err:
        solve_dirichlet(grid1, K1, Q, f, F, regions1.omega)
    pos, zero, neg = err.value.inertia
    assert neg >= 1 and neg + zero + pos == regions1.omega.size


def test_inertia_counts():
    assert inertia(np.diag([-1.0, 0.0, 2.0, 3.0])) == (2, 1, 1)  # (positive, zero, negative)


def test_energy_and_stability_reported(grid1, regions1, K1, Q1, G1):
    f, F = data(grid1, regions1, 3)
    rep = solve_dirichlet(grid1, K1, Q1, f, F, regions1.omega, G=G1)
    assert rep.energy_norm > 0 and rep.stability_ratio > 0
    assert rep.to_dict()["data_norms"][0] == pytest.approx(
        np.sqrt(grid1.cell_volume * np.sum(F.values**2))
    )


def test_stability_audit_bounded(grid1, regions1, K1, Q1, G1):
    out = stability_audit(grid1, K1, Q1, G1, regions1.omega, regions1.windows, draws=100)
    assert out["draws"] == 100
    assert 0 < out["mean_ratio"] <= out["max_ratio"] < 100


# --- minimal extension -------------------------------------------------------


def test_zero_extension_of_zero(grid1, regions1, G1):
    f = CellField.zeros(grid1, regions1.windows, "exterior")
    assert not minimal_extension(G1, f, regions1.omega).values.any()


@pytest.mark.parametrize("seed", range(4))
def test_minimal_extension_optimality(grid1, regions1, G1, seed):
    f, _ = data(grid1, regions1, seed)
    ext = minimal_extension(G1, f, regions1.omega)
    G = G1.matrix
    v = ext.values
    orth = np.linalg.norm((G @ v)[regions1.omega])
    assert orth <= 1e-10 * np.linalg.norm(G, 2) * np.linalg.norm(v)
    outside = np.setdiff1d(np.arange(grid1.num_cells), regions1.omega)
    np.testing.assert_array_equal(v[outside], f.values[outside])
    base = g_norm(G, ext.values)
    assert base <= g_norm(G, f.values)
    rng = np.random.default_rng(seed)
    for _ in range(20):
        other = f.values.copy()
        other[regions1.omega] = rng.standard_normal(regions1.omega.size)
        assert base <= g_norm(G, other) * (1 + 1e-12)
