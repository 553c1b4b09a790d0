import math

import numpy as np
import pytest

from wsdist.grid import (
    ConnectivityKind,
    GridShape,
    LabelVolume,
    ProbabilityVolume,
    ScalarVolume,
    boundary_of,
    neighbors,
)

FULL = ConnectivityKind.FULL
FACES = ConnectivityKind.FACES


class TestGridShape:
    def test_basic(self):
        sh = GridShape((3, 4), (1.0, 2.0))
        assert sh.ndim == 2 and sh.nvox == 12

    @pytest.mark.parametrize(
        "dims,spacing",
        [((3,), (1.0,)), ((3, 3, 3, 3), (1,) * 4), ((0, 3), (1, 1)), ((3, 3), (1, 0))],
    )
    def test_rejects_bad_shapes(self, dims, spacing):
        with pytest.raises(ValueError):
            GridShape(dims, spacing)


class TestNeighbors:
    def test_center_full_2d(self):
        sh = GridShape((3, 3), (1.0, 1.0))
        nbs = neighbors((1, 1), sh, FULL)
        assert len(nbs) == 8
        lens = sorted(ln for _, ln in nbs)
        assert lens[:4] == pytest.approx([1.0] * 4)
        assert lens[4:] == pytest.approx([math.sqrt(2)] * 4)

    def test_corner_clipped(self):
        sh = GridShape((3, 3), (1.0, 1.0))
        assert len(neighbors((0, 0), sh, FULL)) == 3

    def test_anisotropic_3d_step(self):
        sh = GridShape((3, 3, 3), (1.0, 1.0, 4.0))
        nbs = dict(neighbors((1, 1, 1), sh, FULL))
        assert nbs[(1, 1, 2)] == pytest.approx(4.0)
        assert len(nbs) == 26

    def test_faces_connectivity(self):
        sh = GridShape((3, 3), (1.0, 1.0))
        assert len(neighbors((1, 1), sh, FACES)) == 4

    def test_out_of_bounds_rejected(self):
        sh = GridShape((3, 3), (1.0, 1.0))
        with pytest.raises(ValueError):
            neighbors((3, 0), sh, FULL)

    def test_symmetry(self):
        sh = GridShape((4, 3), (1.0, 2.5))
        for i in np.ndindex(*sh.dims):
            for j, ln in neighbors(i, sh, FULL):
                back = dict(neighbors(j, sh, FULL))
                assert i in back
                assert back[i] == pytest.approx(ln)


class TestBoundaryOf:
    def _labels(self, arr, k=2):
        arr = np.asarray(arr, dtype=np.int32)
        return LabelVolume(GridShape(arr.shape, (1.0,) * arr.ndim), k, arr)

    def test_full_grid_boundary_is_ring(self):
        lab = self._labels(np.ones((5, 5), dtype=np.int32))
        b = boundary_of(lab, 1, FULL)
        ring = {
            (r, c)
            for r in range(5)
            for c in range(5)
            if r in (0, 4) or c in (0, 4)
        }
        assert b == ring

    def test_single_voxel(self):
        arr = np.zeros((4, 4), dtype=np.int32)
        arr[2, 1] = 1
        assert boundary_of(self._labels(arr), 1, FULL) == {(2, 1)}

    def test_absent_class_empty(self):
        lab = self._labels(np.zeros((3, 3), dtype=np.int32))
        assert boundary_of(lab, 1, FULL) == set()

    def test_subset_of_class(self):
        rng = np.random.default_rng(3)
        arr = rng.integers(0, 3, (6, 6)).astype(np.int32)
        lab = self._labels(arr, 3)
        for k in range(3):
            for v in boundary_of(lab, k, FULL):
                assert arr[v] == k

    def test_interior_rectangle_perimeter(self):
        arr = np.zeros((8, 9), dtype=np.int32)
        arr[2:6, 3:7] = 1
        b = boundary_of(self._labels(arr), 1, FULL)
        perim = {
            (r, c)
            for r in range(2, 6)
            for c in range(3, 7)
            if r in (2, 5) or c in (3, 6)
        }
        assert b == perim


class TestVolumeTypes:
    def test_scalar_rejects_nan(self):
        with pytest.raises(ValueError):
            ScalarVolume(GridShape((2, 2), (1, 1)), np.array([[0.0, np.nan], [0, 0]]))

    def test_labels_range_checked(self):
        sh = GridShape((2, 2), (1, 1))
        with pytest.raises(ValueError):
            LabelVolume(sh, 2, np.array([[0, 2], [0, 0]], dtype=np.int32))

    def test_probabilities_sum_checked(self):
        sh = GridShape((2, 2), (1, 1))
        bad = np.full((2, 2, 2), 0.4)
        with pytest.raises(ValueError):
            ProbabilityVolume(sh, 2, bad)
        ok = np.full((2, 2, 2), 0.5)
        ProbabilityVolume(sh, 2, ok)

    def test_immutability(self):
        sv = ScalarVolume(GridShape((2, 2), (1, 1)), np.zeros((2, 2)))
        with pytest.raises(ValueError):
            sv.data[0, 0, 0] = 1.0
