"""Content-addressed trajectory store and manifest files.

Binary layout (little-endian): magic b"TTLB", int64 format version, int64 dim, int64 N,
int64 sample count, float64 times, then the row-major float64 payload.
"""

from __future__ import annotations
import csv
import hashlib
import io
import json
import logging
import struct
from pathlib import Path
from typing import Any, Iterable, Optional

import numpy as np

from src.models.manifest import RunManifest, TrajectoryRef
from src.models.reports import CSV_COLUMNS
from src.systems.errors import ManifestError
from src.systems.grid import Grid, Trajectory

logger = logging.getLogger(__name__)

MAGIC = b"TTLB"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sqqqq")
CSV_MAX_POINTS = 64
MANIFEST_NAME = "manifest.json"
TIMING_NAME = "timing.json"
NORM_COLUMNS = ["t", "L1", "L2", "Linf"]

SOURCE_ROOT = Path(__file__).resolve().parents[1]


def encode_trajectory(traj: Trajectory) -> bytes:
    grid = traj.grid
    header = HEADER.pack(MAGIC, FORMAT_VERSION, grid.dim, grid.n_points, len(traj))
    times = np.ascontiguousarray(traj.times, dtype="<f8").tobytes()
    payload = np.ascontiguousarray(traj.values, dtype="<f8").tobytes()
    return header + times + payload


def decode_trajectory(data: bytes, label: str = "") -> Trajectory:
    if len(data) < HEADER.size:
        raise ManifestError("trajectory file is truncated")
    magic, version, dim, n, samples = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ManifestError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ManifestError(f"unsupported trajectory format version {version}")
    grid = Grid(int(dim), int(n))
    count = samples * (1 + n ** dim)
    body = np.frombuffer(data, dtype="<f8", offset=HEADER.size)
    if body.size != count:
        raise ManifestError(f"expected {count} values, found {body.size}")
    times = body[:samples].astype(float)
    values = body[samples:].astype(float).reshape((samples,) + grid.shape)
    return Trajectory(grid, times, values, label)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def code_version(root: Path = SOURCE_ROOT) -> str:
    """Hash of every source file, in path order."""
    digest = hashlib.sha256()
    for path in sorted(root.rglob("*.py")):
        digest.update(path.relative_to(root).as_posix().encode())
        digest.update(path.read_bytes())
    return digest.hexdigest()[:16]


def _write_once(path: Path, data: bytes) -> None:
    if path.exists() and path.read_bytes() == data:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data)


def _csv_text(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _float_rows(values: np.ndarray) -> list[list[str]]:
    return [[repr(float(x)) for x in row] for row in values]


def store_trajectory(exp_dir: Path, traj: Trajectory, label: Optional[str] = None) -> TrajectoryRef:
    """Write traj/<sha256>.bin (plus a CSV for small grids) and its norm series; identical runs share files."""
    data = encode_trajectory(traj)
    sha = sha256_bytes(data)
    rel = Path("traj") / f"{sha}.bin"
    _write_once(exp_dir / rel, data)
    grid = traj.grid
    flat = traj.values.reshape(len(traj), -1)

    csv_rel = None
    if grid.n_points <= CSV_MAX_POINTS:
        csv_rel = Path("traj") / f"{sha}.csv"
        header = ["t"] + [f"v{i}" for i in range(flat.shape[1])]
        _write_once(exp_dir / csv_rel, _csv_text(header, _float_rows(np.column_stack([traj.times, flat]))).encode())

    norms_rel = Path("norms") / f"{sha}.csv"
    norms = np.column_stack([traj.times, traj.norm_series(1), traj.norm_series(2), traj.norm_series("inf")])
    _write_once(exp_dir / norms_rel, _csv_text(NORM_COLUMNS, _float_rows(norms)).encode())
    return TrajectoryRef(
        label=label or traj.label, path=rel.as_posix(), sha256=sha, dim=grid.dim, n_points=grid.n_points,
        samples=len(traj), csv_path=csv_rel.as_posix() if csv_rel else None, norms_path=norms_rel.as_posix(),
    )


def load_trajectory(exp_dir: Path, ref: TrajectoryRef, verify: bool = True) -> Trajectory:
    path = exp_dir / ref.path
    if not path.exists():
        raise ManifestError(f"missing trajectory {ref.path}")
    data = path.read_bytes()
    if verify and sha256_bytes(data) != ref.sha256:
        raise ManifestError(f"hash mismatch for {ref.path}")
    return decode_trajectory(data, ref.label)


def load_norms(exp_dir: Path, ref: TrajectoryRef) -> np.ndarray:
    """Columns t, L1, L2, Linf."""
    if ref.norms_path is None:
        raise ManifestError(f"{ref.label} has no norm series")
    return np.loadtxt(exp_dir / ref.norms_path, delimiter=",", skiprows=1, ndmin=2)


def verify_manifest(exp_dir: Path, manifest: RunManifest) -> list[str]:
    """Problems with referenced files; empty when every file exists and hashes match."""
    problems = []
    for run in manifest.runs:
        for ref in run.trajectories:
            path = exp_dir / ref.path
            if not path.exists():
                problems.append(f"{run.run_id}: missing {ref.path}")
            elif sha256_bytes(path.read_bytes()) != ref.sha256:
                problems.append(f"{run.run_id}: hash mismatch for {ref.path}")
            for extra in (ref.csv_path, ref.norms_path):
                if extra is not None and not (exp_dir / extra).exists():
                    problems.append(f"{run.run_id}: missing {extra}")
    return problems


def write_manifest(exp_dir: Path, manifest: RunManifest) -> Path:
    exp_dir.mkdir(parents=True, exist_ok=True)
    path = exp_dir / MANIFEST_NAME
    path.write_text(manifest.model_dump_json(indent=2) + "\n")
    return path


def load_manifest(exp_dir: Path, verify: bool = True) -> RunManifest:
    path = exp_dir / MANIFEST_NAME
    if not path.exists():
        raise ManifestError(f"no manifest in {exp_dir}")
    manifest = RunManifest.model_validate_json(path.read_text())
    if verify:
        problems = verify_manifest(exp_dir, manifest)
        if problems:
            raise ManifestError("; ".join(problems))
    return manifest


def write_timing(exp_dir: Path, timing: dict[str, Any]) -> Path:
    """Wall-clock data lives beside the manifest, outside the hashed content."""
    exp_dir.mkdir(parents=True, exist_ok=True)
    path = exp_dir / TIMING_NAME
    path.write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n")
    return path


def write_reports_csv(exp_dir: Path, manifest: RunManifest) -> Path:
    path = exp_dir / "reports.csv"
    path.write_text(_csv_text(CSV_COLUMNS, (report.csv_row() for report in manifest.reports())))
    return path
