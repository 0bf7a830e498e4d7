"""Binary trace-file format and the acquisition manifest sidecar.

Layout (little-endian): header {magic "HTRC", version u32, n_traces u64,
n_samples u32, dt f64, flags u32}, then per trace {herald_id u64, theta f64,
samples f32[n_samples]}.  The manifest is a JSON sidecar carrying the full
acquisition config and seed.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .traces import TraceSet

MAGIC = b"HTRC"
VERSION = 1
_HEADER = struct.Struct("<4sIQIdI")


class TraceFileError(Exception):
    """Trace file is missing, truncated, or not in the expected format."""


def _record_dtype(n_samples: int):
    return np.dtype(
        [("herald_id", "<u8"), ("theta", "<f8"), ("samples", "<f4", (n_samples,))]
    )


def write_trace_file(path, traces: TraceSet, flags: int = 0) -> None:
    n_traces = len(traces)
    records = np.empty(n_traces, dtype=_record_dtype(traces.n_samples))
    records["herald_id"] = traces.herald_ids
    records["theta"] = traces.thetas
    records["samples"] = traces.samples
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n_traces, traces.n_samples, traces.dt, flags))
        fh.write(records.tobytes())


def read_trace_file(path) -> TraceSet:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise TraceFileError(f"cannot read trace file {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise TraceFileError(f"{path} is too short to hold a trace header")
    magic, version, n_traces, n_samples, dt, _flags = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise TraceFileError(f"{path} does not start with the trace magic {MAGIC!r}")
    if version != VERSION:
        raise TraceFileError(f"unsupported trace format version {version}")
    dtype = _record_dtype(n_samples)
    expected = _HEADER.size + n_traces * dtype.itemsize
    if len(raw) != expected:
        raise TraceFileError(
            f"{path} holds {len(raw)} bytes, expected {expected} for {n_traces} traces"
        )
    records = np.frombuffer(raw, dtype=dtype, offset=_HEADER.size)
    return TraceSet(
        herald_ids=records["herald_id"].copy(),
        thetas=records["theta"].copy(),
        samples=records["samples"].copy(),
        dt=dt,
    )


def manifest_path(trace_path) -> Path:
    p = Path(trace_path)
    return p.with_name(p.stem + ".manifest.json")


def write_manifest(trace_path, manifest: dict) -> Path:
    path = manifest_path(trace_path)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(trace_path) -> dict:
    with open(manifest_path(trace_path)) as fh:
        return json.load(fh)


def read_traces_csv(path, dt: float) -> TraceSet:
    """Import adapter for experimental records: CSV columns herald_id, theta,
    then the samples.  The sample period is not part of the file and must be
    supplied."""
    herald_ids, thetas, rows = [], [], []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["herald_id", "theta"]:
            raise TraceFileError(f"{path}: expected columns herald_id, theta, samples...")
        for line in fh:
            if not line.strip():
                continue
            parts = line.split(",")
            herald_ids.append(int(parts[0]))
            thetas.append(float(parts[1]))
            rows.append(np.asarray(parts[2:], dtype=np.float32))
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise TraceFileError(f"{path}: ragged sample rows")
    samples = np.vstack(rows) if rows else np.empty((0, 0), dtype=np.float32)
    return TraceSet(
        herald_ids=np.asarray(herald_ids, dtype=np.uint64),
        thetas=np.asarray(thetas, dtype=np.float64),
        samples=samples,
        dt=dt,
    )
