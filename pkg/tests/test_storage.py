"""Trajectory store, manifests and side files."""

import csv
import json

import numpy as np
import pytest

from src.models.experiment import TheoremId
from src.models.manifest import RunManifest, RunRecord
from src.models.reports import CSV_COLUMNS, EstimateReport
from src.systems.errors import ManifestError
from src.systems.grid import Grid, Trajectory
from src.systems.storage import (
    HEADER,
    code_version,
    decode_trajectory,
    encode_trajectory,
    load_manifest,
    load_norms,
    load_trajectory,
    store_trajectory,
    verify_manifest,
    write_manifest,
    write_reports_csv,
    write_timing,
)


def _trajectory(grid, label="rho"):
    x = grid.coordinates[0]
    times = np.array([0.0, 0.5, 1.0])
    values = np.stack([np.exp(-t) * np.sin(2 * np.pi * x) for t in times])
    return Trajectory(grid, times, values, label)


def test_binary_layout(grid1):
    data = encode_trajectory(_trajectory(grid1))
    assert data[:4] == b"TTLB"
    assert len(data) == HEADER.size + 8 * (3 + 3 * 32)
    back = decode_trajectory(data, "rho")
    np.testing.assert_array_equal(back.times, [0.0, 0.5, 1.0])
    assert back.values.shape == (3, 32)
    assert back.label == "rho"


def test_two_dimensional_payload_is_row_major(grid2):
    x, y = grid2.coordinates
    traj = Trajectory(grid2, np.array([0.0]), (x + 10 * y)[None])
    back = decode_trajectory(encode_trajectory(traj))
    np.testing.assert_array_equal(back.values, traj.values)


@pytest.mark.parametrize("corrupt", [
    lambda d: b"XXXX" + d[4:],
    lambda d: d[:10],
    lambda d: d[:-8],
])
def test_decode_rejects_corrupt_files(grid1, corrupt):
    with pytest.raises(ManifestError):
        decode_trajectory(corrupt(encode_trajectory(_trajectory(grid1))))


def test_store_is_content_addressed(tmp_path, grid1):
    traj = _trajectory(grid1)
    ref = store_trajectory(tmp_path, traj)
    again = store_trajectory(tmp_path, _trajectory(grid1), label="copy")
    assert ref.sha256 == again.sha256 and again.label == "copy"
    assert ref.path == f"traj/{ref.sha256}.bin"
    assert len(list((tmp_path / "traj").glob("*.bin"))) == 1
    assert (tmp_path / ref.csv_path).read_text().startswith("t,v0,v1,")
    assert (ref.dim, ref.n_points, ref.samples) == (1, 32, 3)

    loaded = load_trajectory(tmp_path, ref)
    np.testing.assert_array_equal(loaded.values, traj.values)

    norms = load_norms(tmp_path, ref)
    assert norms.shape == (3, 4)
    np.testing.assert_allclose(norms[:, 2], traj.norm_series(2))
    np.testing.assert_allclose(norms[:, 3], traj.norm_series("inf"))


def test_large_grids_skip_the_csv(tmp_path):
    grid = Grid(1, 128)
    ref = store_trajectory(tmp_path, _trajectory(grid))
    assert ref.csv_path is None
    assert (tmp_path / ref.norms_path).exists()


def test_tampering_is_detected(tmp_path, grid1):
    ref = store_trajectory(tmp_path, _trajectory(grid1))
    path = tmp_path / ref.path
    data = bytearray(path.read_bytes())
    data[-1] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ManifestError, match="hash mismatch"):
        load_trajectory(tmp_path, ref)
    manifest = RunManifest(experiment_id="e", runs=[RunRecord(run_id="r", experiment_id="e", seed=0, trajectories=[ref])])
    assert verify_manifest(tmp_path, manifest) == [f"r: hash mismatch for {ref.path}"]
    path.unlink()
    assert verify_manifest(tmp_path, manifest) == [f"r: missing {ref.path}"]


def test_manifest_files(tmp_path, grid1):
    ref = store_trajectory(tmp_path, _trajectory(grid1))
    report = EstimateReport.assess(TheoremId.THM_STABILITY_L2, 1.0, float("inf"), run_id="r")
    manifest = RunManifest(experiment_id="e", code_version="0123456789abcdef",
                           runs=[RunRecord(run_id="r", experiment_id="e", seed=0, trajectories=[ref], reports=[report])])
    path = write_manifest(tmp_path, manifest)
    assert path.name == "manifest.json"
    assert load_manifest(tmp_path) == manifest

    lines = write_reports_csv(tmp_path, manifest).read_text().splitlines()
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].startswith("r,thm_stability_L2,passed,1.0,inf,")

    timing = write_timing(tmp_path, {"total": 1.5, "runs": {"r": 1.5}})
    assert json.loads(timing.read_text()) == {"runs": {"r": 1.5}, "total": 1.5}
    assert "timing" not in path.read_text()


def test_missing_manifest(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path)


def test_code_version_hashes_sources(tmp_path):
    (tmp_path / "a.py").write_text("x = 1\n")
    first = code_version(tmp_path)
    assert len(first) == 16 and int(first, 16) >= 0
    assert code_version(tmp_path) == first
    (tmp_path / "b.py").write_text("y = 2\n")
    assert code_version(tmp_path) != first
    assert len(code_version()) == 16


def test_reports_csv_quotes_awkward_fields(tmp_path):
    report = EstimateReport.assess(TheoremId.THM_L1_CD, 0.5, 1.0, run_id='a,b "c"')
    manifest = RunManifest(experiment_id="e", runs=[RunRecord(run_id=report.run_id, experiment_id="e", seed=0,
                                                              reports=[report])])
    with write_reports_csv(tmp_path, manifest).open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert rows[1][:3] == ['a,b "c"', "thm_L1_cd", "passed"]
    assert float(rows[1][3]) == 0.5
