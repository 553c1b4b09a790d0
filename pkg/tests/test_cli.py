import json

import numpy as np
import pytest

from wsdist import cli
from wsdist.grid import GridShape, LabelVolume, ProbabilityVolume, ScalarVolume
from wsdist.io import read_signed_map, read_volume, write_volume


@pytest.fixture
def workspace(tmp_path):
    rng = np.random.default_rng(0)
    shape = GridShape((12, 12), (1.0, 1.0))
    img = ScalarVolume(shape, rng.random((12, 12)) * 100)
    arr = np.zeros((12, 12), dtype=np.int32)
    arr[2:6, 2:6] = 1
    arr[8:11, 7:11] = 2
    labels = LabelVolume(shape, 3, arr)
    write_volume(img, tmp_path / "img.npy")
    write_volume(labels, tmp_path / "labels.npy")
    return tmp_path


def run(args):
    return cli.main(args)


class TestDistmap:
    def test_writes_one_map_per_class(self, workspace, capsys):
        out = workspace / "maps"
        rc = run(
            [
                "distmap",
                str(workspace / "img.npy"),
                str(workspace / "labels.npy"),
                "--out",
                str(out),
                "--kind",
                "euc",
                "--json",
            ]
        )
        assert rc == 0
        written = json.loads(capsys.readouterr().out)["written"]
        assert len(written) == 2
        m1 = read_signed_map(out / "sdm_class1.npy")
        assert m1.class_id == 1
        assert np.any(m1.data < 0) and np.any(m1.data > 0)

    def test_mbd_raster_is_usage_error(self, workspace):
        rc = run(
            [
                "distmap",
                str(workspace / "img.npy"),
                str(workspace / "labels.npy"),
                "--out",
                str(workspace / "m"),
                "--kind",
                "mbd",
                "--engine",
                "raster",
            ]
        )
        assert rc == 2

    def test_missing_file_is_runtime_error(self, workspace):
        rc = run(
            [
                "distmap",
                str(workspace / "nope.npy"),
                str(workspace / "labels.npy"),
                "--out",
                str(workspace / "m"),
            ]
        )
        assert rc == 1

    def test_2d_stack_of_3d_volume(self, tmp_path):
        rng = np.random.default_rng(1)
        shape = GridShape((8, 8, 3), (1.0, 1.0, 4.0))
        img = ScalarVolume(shape, rng.random((8, 8, 3)) * 50)
        arr = np.zeros((8, 8, 3), dtype=np.int32)
        arr[2:5, 2:5, 0] = 1
        labels = LabelVolume(shape, 2, arr)
        write_volume(img, tmp_path / "img.npy")
        write_volume(labels, tmp_path / "labels.npy")
        for dims in ("2d", "3d"):
            rc = run(
                [
                    "distmap",
                    str(tmp_path / "img.npy"),
                    str(tmp_path / "labels.npy"),
                    "--out",
                    str(tmp_path / dims),
                    "--dims",
                    dims,
                    "--kind",
                    "geo",
                ]
            )
            assert rc == 0
        m2d = read_signed_map(tmp_path / "2d" / "sdm_class1.npy")
        m3d = read_signed_map(tmp_path / "3d" / "sdm_class1.npy")
        # slices without annotation fall back to the absent policy in 2D mode
        assert np.all(m2d.data[:, :, 1] == 1.0)
        assert np.any(m3d.data[:, :, 1] != 1.0)

    def test_deterministic(self, workspace):
        for d in ("a", "b"):
            run(
                [
                    "distmap",
                    str(workspace / "img.npy"),
                    str(workspace / "labels.npy"),
                    "--out",
                    str(workspace / d),
                    "--kind",
                    "mbd",
                ]
            )
        a = (workspace / "a" / "sdm_class1.npy").read_bytes()
        b = (workspace / "b" / "sdm_class1.npy").read_bytes()
        assert a == b


class TestPoints:
    def test_generates_subset(self, workspace, capsys):
        out = workspace / "weak.npy"
        rc = run(
            [
                "points",
                str(workspace / "labels.npy"),
                "--out",
                str(out),
                "--seed",
                "5",
                "--json",
            ]
        )
        assert rc == 0
        info = json.loads(capsys.readouterr().out)
        assert info["annotated_voxels"] > 0
        weak = read_volume(out)
        full = read_volume(workspace / "labels.npy")
        ann = weak.data != 0
        assert np.array_equal(weak.data[ann], full.data[ann])

    def test_seed_determinism(self, workspace):
        for name in ("w1.npy", "w2.npy"):
            run(
                [
                    "points",
                    str(workspace / "labels.npy"),
                    "--out",
                    str(workspace / name),
                    "--seed",
                    "9",
                ]
            )
        assert (workspace / "w1.npy").read_bytes() == (
            workspace / "w2.npy"
        ).read_bytes()


class TestLoss:
    def test_combined_objective_json(self, workspace, capsys):
        run(
            [
                "distmap",
                str(workspace / "img.npy"),
                str(workspace / "labels.npy"),
                "--out",
                str(workspace / "maps"),
                "--kind",
                "euc",
            ]
        )
        capsys.readouterr()
        rng = np.random.default_rng(3)
        raw = rng.random((3, 12, 12))
        raw /= raw.sum(axis=0)
        raw = (raw.astype(np.float32) / raw.astype(np.float32).sum(axis=0)).astype(
            np.float64
        )
        probs = ProbabilityVolume(GridShape((12, 12), (1, 1)), 3, raw)
        write_volume(probs, workspace / "probs.npy")
        rc = run(
            [
                "loss",
                str(workspace / "probs.npy"),
                str(workspace / "labels.npy"),
                str(workspace / "maps"),
                "--alpha",
                "0.5",
                "--json",
            ]
        )
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["total"] == pytest.approx(
            out["ce_term"] + 0.5 * out["bl_term"], abs=1e-9
        )


class TestMetrics:
    def test_single_pair(self, workspace, capsys):
        rc = run(
            [
                "metrics",
                "--gt",
                str(workspace / "labels.npy"),
                "--pred",
                str(workspace / "labels.npy"),
                "--json",
            ]
        )
        assert rc == 0
        rep = json.loads(capsys.readouterr().out)
        case = rep["cases"]["labels"]
        assert case["per_class"]["1"]["dsc"] == 1.0
        assert case["per_class"]["1"]["hd95"] == 0.0

    def test_report_file(self, workspace):
        out = workspace / "report.json"
        rc = run(
            [
                "metrics",
                "--gt",
                str(workspace / "labels.npy"),
                "--pred",
                str(workspace / "labels.npy"),
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        assert json.loads(out.read_text())["schema"] == 1


class TestBench:
    def test_structure_and_nonnegative(self, capsys):
        rc = run(
            [
                "bench",
                "--size2d",
                "24,24",
                "--size3d",
                "10,10,4",
                "--reps",
                "1",
                "--json",
            ]
        )
        assert rc == 0
        rep = json.loads(capsys.readouterr().out)
        assert set(rep["mean_seconds"]) == {"euc", "geo", "int", "mbd"}
        for row in rep["mean_seconds"].values():
            assert set(row) == {"2D", "3D"}
            assert all(t >= 0 for t in row.values())


class TestUsage:
    def test_help_exits_zero(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["--help"])
        assert e.value.code == 0

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as e:
            cli.main(["bench", "--frobnicate"])
        assert e.value.code == 2
