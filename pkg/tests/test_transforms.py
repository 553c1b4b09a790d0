import math

import numpy as np
import pytest

from oracles import (
    enumerate_paths_additive,
    enumerate_paths_mbd,
    jacobi_additive,
    mbd_levelset,
)
from wsdist.grid import ConnectivityKind, GridShape, LabelVolume, ScalarVolume
from wsdist.transforms import (
    DistanceKind,
    RasterConfig,
    TransformConfig,
    distance_map_exact,
    distance_map_raster,
    make_signed_map,
    rescale_intensities,
    signed_maps_2d_stack,
    signed_maps_for_all_classes,
    step_cost,
)
from wsdist.weaklabels import AbsentClassPolicy

EUC = TransformConfig(kind=DistanceKind.EUCLIDEAN, rescale_to_255=False)
GEO = TransformConfig(kind=DistanceKind.GEODESIC, rescale_to_255=False)
INT = TransformConfig(kind=DistanceKind.INTENSITY, rescale_to_255=False)
MBD = TransformConfig(kind=DistanceKind.MBD, rescale_to_255=False)


def vol(img, spacing=None):
    img = np.asarray(img, dtype=float)
    return ScalarVolume(GridShape(img.shape, spacing or (1.0,) * img.ndim), img)


class TestStepCost:
    def test_zero_intensity_difference(self):
        assert step_cost(10, 10, 1.0, 0.5) == pytest.approx(0.5)

    def test_pure_spatial(self):
        assert step_cost(0, 255, math.sqrt(2), 0.0) == pytest.approx(math.sqrt(2))

    def test_mixed(self):
        assert step_cost(3, 7, 1.0, 0.5) == pytest.approx(2.5)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            step_cost(0, 1, 0.0, 0.5)
        with pytest.raises(ValueError):
            step_cost(0, 1, 1.0, 1.5)


class TestTransformConfig:
    def test_kind_pins_mix(self):
        assert TransformConfig(kind=DistanceKind.EUCLIDEAN).intensity_mix == 0.0
        assert TransformConfig(kind=DistanceKind.INTENSITY).intensity_mix == 1.0
        assert TransformConfig(kind=DistanceKind.GEODESIC).intensity_mix == 0.5
        with pytest.raises(ValueError):
            TransformConfig(kind=DistanceKind.EUCLIDEAN, intensity_mix=0.3)
        with pytest.raises(ValueError):
            TransformConfig(kind=DistanceKind.INTENSITY, intensity_mix=0.3)
        # geodesic default is overridable
        cfg = TransformConfig(kind=DistanceKind.GEODESIC, intensity_mix=0.7)
        assert cfg.intensity_mix == 0.7


class TestExactEngine:
    def test_mbd_on_1d_row(self):
        d = distance_map_exact(vol([[0.0, 5.0, 10.0]]), {(0, 0)}, MBD)
        assert d.data == pytest.approx(np.array([[0.0, 5.0, 10.0]]))

    def test_intensity_kind_constant_image(self):
        d = distance_map_exact(vol(np.full((4, 5), 7.0)), {(2, 2)}, INT)
        assert np.all(d.data == 0.0)

    def test_euclidean_one_step_chamfer(self):
        d = distance_map_exact(vol(np.zeros((3, 3))), {(1, 1)}, EUC)
        expected = np.array(
            [
                [math.sqrt(2), 1, math.sqrt(2)],
                [1, 0, 1],
                [math.sqrt(2), 1, math.sqrt(2)],
            ]
        )
        assert d.data == pytest.approx(expected)

    def test_mbd_ridge_crossing(self):
        # bright one-voxel ridge between source column and the far side
        img = np.zeros((4, 4))
        img[:, 2] = np.array([50.0, 30.0, 80.0, 60.0])
        d = distance_map_exact(vol(img), {(0, 0)}, MBD)
        oracle = enumerate_paths_mbd(img, {(0, 0)})
        assert d.data == pytest.approx(oracle)
        assert d.data[0, 3] == pytest.approx(30.0)  # cheapest ridge crossing

    def test_empty_sources_rejected(self):
        with pytest.raises(ValueError, match="no sources"):
            distance_map_exact(vol(np.zeros((2, 2))), set(), EUC)

    def test_matches_path_enumeration(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            img = rng.integers(0, 20, (3, 3)).astype(float)
            src = {tuple(rng.integers(0, 3, 2))}
            for cfg, mix in ((EUC, 0.0), (GEO, 0.5), (INT, 1.0)):
                got = distance_map_exact(vol(img), src, cfg).data
                want = enumerate_paths_additive(img, src, mix, (1, 1))
                assert got == pytest.approx(want)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(11)
        img = rng.integers(0, 30, (4, 4)).astype(float)
        pts = [(0, 0), (3, 3), (1, 2)]
        d = {
            p: distance_map_exact(vol(img), {p}, GEO).data for p in pts
        }
        for a in pts:
            for b in pts:
                for c in pts:
                    assert d[a][b] <= d[a][c] + d[c][b] + 1e-9

    def test_source_order_invariance(self):
        rng = np.random.default_rng(13)
        img = rng.random((5, 6)) * 40
        srcs = [(0, 0), (4, 5), (2, 3)]
        a = distance_map_exact(vol(img), srcs, GEO).data
        b = distance_map_exact(vol(img), list(reversed(srcs)), GEO).data
        assert np.array_equal(a, b)

    def test_anisotropic_spacing(self):
        d = distance_map_exact(
            vol(np.zeros((3, 3, 3)), spacing=(1.0, 1.0, 4.0)), {(1, 1, 1)}, EUC
        )
        assert d.data[1, 1, 2] == pytest.approx(4.0)
        assert d.data[0, 1, 1] == pytest.approx(1.0)


class TestMixEndpoints:
    def test_mu0_ignores_intensities(self):
        rng = np.random.default_rng(5)
        img = rng.random((6, 6)) * 100
        perm = rng.permutation(img.ravel()).reshape(img.shape)
        a = distance_map_exact(vol(img), {(2, 3)}, EUC).data
        b = distance_map_exact(vol(perm), {(2, 3)}, EUC).data
        assert np.array_equal(a, b)

    def test_mu1_ignores_spacing(self):
        rng = np.random.default_rng(6)
        img = rng.random((6, 6)) * 100
        a = distance_map_exact(vol(img), {(1, 1)}, INT).data
        b = distance_map_exact(
            vol(img, spacing=(2.0, 2.0)), {(1, 1)}, INT
        ).data
        assert np.array_equal(a, b)


class TestRasterEngine:
    def test_fixed_point_equals_exact(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            img = rng.random((8, 8)) * 50
            src = {tuple(rng.integers(0, 8, 2))}
            for cfg in (EUC, GEO, INT):
                ex = distance_map_exact(vol(img), src, cfg).data
                ra = distance_map_raster(
                    vol(img), src, cfg, RasterConfig(max_passes=50)
                ).data
                assert np.max(np.abs(ra - ex)) < 1e-9

    def test_one_pass_convex_source_euclidean(self):
        # single-voxel source, monotone front: one pass suffices
        rng = np.random.default_rng(19)
        for _ in range(5):
            src = {tuple(rng.integers(0, 8, 2))}
            ex = distance_map_exact(vol(np.zeros((8, 8))), src, EUC).data
            ra = distance_map_raster(
                vol(np.zeros((8, 8))), src, EUC, RasterConfig(max_passes=1)
            ).data
            assert ra == pytest.approx(ex)

    def test_upper_bound_and_monotone_in_passes(self):
        rng = np.random.default_rng(23)
        img = rng.random((7, 9)) * 80
        src = {(0, 0)}
        ex = distance_map_exact(vol(img), src, GEO).data
        prev = None
        for passes in (1, 2, 3):
            ra = distance_map_raster(
                vol(img), src, GEO, RasterConfig(max_passes=passes)
            ).data
            assert np.all(ra >= ex - 1e-12)
            if prev is not None:
                assert np.all(ra <= prev + 1e-12)
            prev = ra

    def test_mbd_unsupported(self):
        with pytest.raises(ValueError, match="raster"):
            distance_map_raster(vol(np.zeros((3, 3))), {(0, 0)}, MBD)

    def test_3d_fixed_point(self):
        rng = np.random.default_rng(29)
        img = rng.random((4, 5, 3)) * 20
        v = vol(img, spacing=(1.0, 1.5, 4.0))
        src = {(1, 2, 1)}
        ex = distance_map_exact(v, src, GEO).data
        ra = distance_map_raster(v, src, GEO, RasterConfig(max_passes=50)).data
        assert np.max(np.abs(ra - ex)) < 1e-9


class TestMbdProperties:
    def test_upper_bound_of_exact(self):
        rng = np.random.default_rng(31)
        for _ in range(10):
            img = rng.integers(0, 50, (4, 4)).astype(float)
            src = {tuple(rng.integers(0, 4, 2))}
            got = distance_map_exact(vol(img), src, MBD).data
            exact = mbd_levelset(img, src)
            assert np.all(got >= exact - 1e-12)

    def test_exact_on_1d_and_constant(self):
        rng = np.random.default_rng(37)
        img = rng.integers(0, 99, (1, 7)).astype(float)
        got = distance_map_exact(vol(img), {(0, 3)}, MBD).data
        assert got == pytest.approx(mbd_levelset(img, {(0, 3)}))
        const = np.full((4, 4), 3.0)
        got = distance_map_exact(vol(const), {(2, 2)}, MBD).data
        assert np.all(got == 0.0)

    def test_reflexivity_violation(self):
        # constant corridor: zero barrier far away from the source
        img = np.full((3, 8), 10.0)
        d = distance_map_exact(vol(img), {(1, 0)}, MBD).data
        assert d[1, 7] == 0.0


class TestSignedMaps:
    def _labels(self, arr, k=2):
        arr = np.asarray(arr, dtype=np.int32)
        return LabelVolume(GridShape(arr.shape, (1.0,) * arr.ndim), k, arr)

    def test_single_voxel_annotation(self):
        arr = np.zeros((5, 5), dtype=np.int32)
        arr[2, 2] = 1
        lab = self._labels(arr)
        d = distance_map_exact(vol(np.zeros((5, 5))), {(2, 2)}, EUC, class_id=1)
        s = make_signed_map(d, lab)
        assert s.data[2, 2] == 0.0
        mask = np.ones((5, 5), dtype=bool)
        mask[2, 2] = False
        assert np.all(s.data[mask] > 0)

    def test_full_grid_annotation(self):
        from wsdist.grid import boundary_of

        arr = np.ones((5, 5), dtype=np.int32)
        lab = self._labels(arr)
        srcs = boundary_of(lab, 1, ConnectivityKind.FULL)
        d = distance_map_exact(vol(np.zeros((5, 5))), srcs, EUC, class_id=1)
        s = make_signed_map(d, lab)
        assert np.all(s.data <= 0)
        for r in range(5):
            for c in range(5):
                if r in (0, 4) or c in (0, 4):
                    assert s.data[r, c] == 0.0
        assert np.all(s.data[1:4, 1:4] < 0)

    def test_disc_matches_analytic_chamfer(self):
        from wsdist.grid import boundary_of

        arr = np.zeros((9, 9), dtype=np.int32)
        rr, cc = np.ogrid[:9, :9]
        disc = (rr - 4) ** 2 + (cc - 4) ** 2 <= 4
        arr[disc] = 1
        lab = self._labels(arr)
        srcs = boundary_of(lab, 1, ConnectivityKind.FULL)
        d = distance_map_exact(vol(np.zeros((9, 9))), srcs, EUC, class_id=1)
        s = make_signed_map(d, lab)

        def octile(p, q):
            dr, dc = abs(p[0] - q[0]), abs(p[1] - q[1])
            return abs(dr - dc) + min(dr, dc) * math.sqrt(2)

        for p in np.ndindex(9, 9):
            chamfer = min(octile(p, q) for q in srcs)
            want = -chamfer if disc[p] else chamfer
            assert s.data[p] == pytest.approx(want)

    def test_shape_mismatch_rejected(self):
        d = distance_map_exact(vol(np.zeros((3, 3))), {(0, 0)}, EUC)
        with pytest.raises(ValueError):
            make_signed_map(d, self._labels(np.zeros((4, 4), dtype=np.int32)))


class TestPerClassPipeline:
    def _inputs(self):
        rng = np.random.default_rng(41)
        img = rng.random((6, 6)) * 9 + 1
        arr = np.zeros((6, 6), dtype=np.int32)
        arr[1, 1] = 1
        arr[4, 4] = 3  # class 2 absent
        lab = LabelVolume(GridShape((6, 6), (1.0, 1.0)), 4, arr)
        return vol(img), lab

    def test_all_maps_zero_on_their_boundary(self):
        image, lab = self._inputs()
        maps = signed_maps_for_all_classes(
            image, lab, GEO, AbsentClassPolicy(mode="ones")
        )
        assert [m.class_id for m in maps] == [1, 2, 3]
        assert maps[0].data[1, 1] == 0.0
        assert maps[2].data[4, 4] == 0.0

    def test_absent_class_policies(self):
        image, lab = self._inputs()
        ones = signed_maps_for_all_classes(
            image, lab, GEO, AbsentClassPolicy(mode="ones")
        )[1]
        assert np.all(ones.data == 1.0)
        zeros = signed_maps_for_all_classes(
            image, lab, GEO, AbsentClassPolicy(mode="zeros")
        )[1]
        assert np.all(zeros.data == 0.0)
        const = signed_maps_for_all_classes(
            image, lab, GEO, AbsentClassPolicy(mode="constant", value=2.5)
        )[1]
        assert np.all(const.data == 2.5)

    def test_parallel_matches_sequential(self):
        image, lab = self._inputs()
        seq = signed_maps_for_all_classes(
            image, lab, GEO, AbsentClassPolicy(mode="ones")
        )
        par = signed_maps_for_all_classes(
            image, lab, GEO, AbsentClassPolicy(mode="ones"), max_workers=3
        )
        for a, b in zip(seq, par):
            assert np.array_equal(a.data, b.data)

    def test_2d_stack_is_slicewise(self):
        rng = np.random.default_rng(43)
        img3 = rng.random((5, 5, 3)) * 10 + 1
        arr = np.zeros((5, 5, 3), dtype=np.int32)
        arr[2, 2, 0] = 1
        arr[1, 3, 2] = 1
        lab = LabelVolume(GridShape((5, 5, 3), (1, 1, 4)), 2, arr)
        image = vol(img3, spacing=(1.0, 1.0, 4.0))
        maps = signed_maps_2d_stack(
            image, lab, GEO, AbsentClassPolicy(mode="ones")
        )
        # slice 1 has no annotation -> policy constant
        assert np.all(maps[0].data[:, :, 1] == 1.0)
        assert maps[0].data[2, 2, 0] == 0.0


class TestRescale:
    def test_binary_channel(self):
        out = rescale_intensities(vol(np.array([[0.0, 1.0]])), 0)
        assert out.data[0] == pytest.approx(np.array([[0.0, 255.0]]))

    def test_affine_midpoint(self):
        out = rescale_intensities(vol(np.array([[-5.0, 0.0, 5.0]])), 0)
        assert out.data[0] == pytest.approx(np.array([[0.0, 127.5, 255.0]]))

    def test_idempotent_on_target_range(self):
        img = np.array([[0.0, 100.0, 255.0]])
        out = rescale_intensities(vol(img), 0)
        assert np.max(np.abs(out.data[0] - img)) < 1e-9

    def test_constant_channel_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            rescale_intensities(vol(np.full((2, 2), 3.0)), 0)

    def test_other_channels_untouched(self):
        data = np.stack([np.array([[0.0, 1.0]]), np.array([[5.0, 6.0]])])
        sv = ScalarVolume(GridShape((1, 2), (1, 1)), data)
        out = rescale_intensities(sv, 0)
        assert np.array_equal(out.data[1], data[1])


class TestRangeBounds:
    def test_bounds_on_rescaled_images(self):
        rng = np.random.default_rng(47)
        n = 16
        for _ in range(5):
            img = rng.random((n, n)) * 1000 - 200
            sv = rescale_intensities(vol(img), 0)
            src = {tuple(rng.integers(0, n, 2))}
            mbd = distance_map_exact(sv, src, MBD).data
            assert np.max(mbd) <= 255.0
            euc = distance_map_exact(sv, src, EUC).data
            assert np.max(euc) <= math.sqrt(2) * n

    def test_jacobi_agreement_sanity(self):
        rng = np.random.default_rng(53)
        img = rng.integers(0, 9, (4, 4)).astype(float)
        src = {(0, 0)}
        got = distance_map_exact(vol(img), src, GEO).data
        assert got == pytest.approx(jacobi_additive(img, src, 0.5, (1, 1)))
