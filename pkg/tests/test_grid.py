import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from logcalderon import CellField, RegionError, build_grid, define_regions
from logcalderon.grid import resolve_cells


def test_one_dimensional_grid():
    g = build_grid([-1.0, 1.0], 8)
    assert g.h == 0.25
    assert g.num_cells == 8
    np.testing.assert_allclose(g.cell_centers[:, 0], -0.875 + 0.25 * np.arange(8))


def test_two_dimensional_grid_is_lexicographic():
    g = build_grid([[-1.0, -1.0], [1.0, 1.0]], [8, 8])
    assert (g.num_cells, g.h) == (64, 0.25)
    # flat index i0 * 8 + i1
    np.testing.assert_array_equal(g.cell_index[9], [1, 1])
    np.testing.assert_allclose(g.cell_centers[1], [-0.875, -0.625])


def test_coarse_grid_rejected_with_guidance():
    with pytest.raises(RegionError, match="refine"):
        build_grid([0.0, 1.0], 1)


@pytest.mark.parametrize(
    "box, cells",
    [([1.0, -1.0], 8), ([0.0, 0.0], 4), ([[0, 0], [1, 2]], [4, 4]), ([-1, 1], [4, 4]), ([-1, 1], 0)],
)
def test_bad_grids(box, cells):
    with pytest.raises(RegionError):
        build_grid(box, cells)


def test_three_dimensions_unsupported():
    with pytest.raises(RegionError, match="unsupported dimension"):
        build_grid([[0, 0, 0], [1, 1, 1]], [4, 4, 4])


def test_grid_hash_is_stable():
    a = build_grid([-2.0, 2.0], 32)
    b = build_grid([-2, 2], [32])
    assert a.grid_hash == b.grid_hash
    assert a.grid_hash != build_grid([-2.0, 2.0], 64).grid_hash


def test_valid_region_layout():
    g = build_grid([-2.0, 2.0], 32)
    r = define_regions(g, {"box": [-0.5, 0.5]}, {"box": [1.0, 1.5]})
    np.testing.assert_array_equal(r.omega, np.arange(12, 20))
    np.testing.assert_array_equal(r.w1, np.arange(24, 28))
    np.testing.assert_array_equal(r.w1, r.w2)
    assert len(r.partition) == 1


def test_adjacent_window_rejected_with_cells():
    g = build_grid([-2.0, 2.0], 32)
    with pytest.raises(RegionError, match=r"\(20, 19\)"):
        define_regions(g, {"box": [-0.5, 0.5]}, [20, 21])


def test_overlapping_window_rejected():
    g = build_grid([-2.0, 2.0], 32)
    with pytest.raises(RegionError, match="overlaps Omega in cells \\[19\\]"):
        define_regions(g, {"box": [-0.5, 0.5]}, [19, 25])


def test_diagonal_touch_rejected_in_2d():
    g = build_grid([[-1.0, -1.0], [1.0, 1.0]], [8, 8])
    omega = [3 * 8 + 3]
    with pytest.raises(RegionError, match="touch"):
        define_regions(g, omega, [4 * 8 + 4])
    define_regions(g, omega, [5 * 8 + 5])


def test_equal_blocks_partition():
    g = build_grid([-2.0, 2.0], 64)
    r = define_regions(g, {"box": [-0.5, 0.5]}, [0, 1], partition_spec={"blocks_per_axis": [4]})
    assert [b.size for b in r.partition] == [4, 4, 4, 4]
    np.testing.assert_array_equal(np.concatenate(r.partition), r.omega)


def test_two_dimensional_quadrant_partition():
    g = build_grid([[-1.0, -1.0], [1.0, 1.0]], [16, 16])
    r = define_regions(
        g, {"box": [[-0.5, -0.5], [0.5, 0.5]]}, {"box": [[0.7, 0.7], [0.9, 0.9]]}, partition_spec={"blocks_per_axis": [2, 2]}
    )
    assert r.omega.size == 64
    assert [b.size for b in r.partition] == [16] * 4
    for b in r.partition:
        span = np.ptp(g.cell_index[b], axis=0)
        np.testing.assert_array_equal(span, [3, 3])


@pytest.mark.parametrize(
    "partition, msg",
    [
        ([[28, 29], [29, 30, 31, 32, 33, 34, 35]], "overlap"),
        ([[28, 29, 30]], "cover"),
        ([[28, 29, 30, 31, 32, 33, 34, 35], []], "empty"),
        ({"blocks": 2}, "unknown partition"),
    ],
)
def test_bad_partitions(partition, msg):
    g = build_grid([-2.0, 2.0], 64)
    with pytest.raises(RegionError, match=msg):
        define_regions(g, list(range(28, 36)), [0], partition_spec=partition)


def test_empty_regions_rejected():
    g = build_grid([-2.0, 2.0], 64)
    with pytest.raises(RegionError, match="Omega selects no cells"):
        define_regions(g, {"box": [5.0, 6.0]}, [0])
    with pytest.raises(RegionError, match="nonempty"):
        define_regions(g, [30], [])


def test_box_union_and_callable_agree():
    g = build_grid([-2.0, 2.0], 64)
    union = resolve_cells(g, {"boxes": [[-1.2, -0.6], [0.6, 1.2]]})
    pred = resolve_cells(g, lambda c: (np.abs(c[:, 0]) > 0.6) & (np.abs(c[:, 0]) < 1.2))
    np.testing.assert_array_equal(union, pred)
    assert union.size == 18


def test_region_spec_dimension_checked():
    g = build_grid([-2.0, 2.0], 64)
    with pytest.raises(RegionError, match="dimension"):
        resolve_cells(g, {"box": [[0, 0], [1, 1]]})
    with pytest.raises(RegionError, match="out of range"):
        resolve_cells(g, [64])


@settings(max_examples=40, deadline=None)
@given(
    lo=st.integers(20, 28),
    width=st.integers(1, 8),
    gap=st.integers(2, 6),
    wsize=st.integers(1, 6),
    seed=st.integers(0, 2**16),
)
def test_validation_is_idempotent_and_order_independent(lo, width, gap, wsize, seed):
    g = build_grid([-2.0, 2.0], 64)
    omega = list(range(lo, lo + width))
    window = list(range(lo + width - 1 + gap, lo + width - 1 + gap + wsize))
    rng = np.random.default_rng(seed)
    a = define_regions(g, omega, window)
    b = define_regions(g, rng.permutation(omega).tolist(), rng.permutation(window).tolist())
    c = define_regions(g, a.omega, a.w1, a.w2, [a.omega])
    for other in (b, c):
        assert other.to_dict() == a.to_dict()


def test_cell_field_support_enforced():
    g = build_grid([-1.0, 1.0], 8)
    f = CellField.on(g, [1, 2], [3.0, 4.0], "exterior")
    assert f.values.tolist() == [0, 3, 4, 0, 0, 0, 0, 0]
    with pytest.raises(ValueError, match="outside its support"):
        CellField(np.ones(8), "omega", np.zeros(8, dtype=bool))
    with pytest.raises(ValueError, match="finite"):
        CellField.on(g, [0], [np.nan], "omega")
    doubled = (f + f) * 0.5
    np.testing.assert_array_equal(doubled.values, f.values)
