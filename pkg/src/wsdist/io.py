"""Bit-exact serialization: strict NPY v1.0 arrays plus JSON sidecars.

Only little-endian C-order NPY version 1.0 with dtype float32, int32 or
uint8 is accepted; anything else errors loudly instead of being silently
reinterpreted.  Every array ``name.npy`` carries a sidecar ``name.json``
with the physical spacing and axis names.  Writes go through a temp file
and an atomic rename.
"""

from __future__ import annotations

import ast
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .grid import (
    DistanceMap,
    GridShape,
    LabelVolume,
    ProbabilityVolume,
    ScalarVolume,
    SignedDistanceMap,
)

MAGIC = b"\x93NUMPY"
SUPPORTED_DESCRS = ("<f4", "<i4", "|u1")
AXIS_NAMES = ("row", "col", "slab")


class NpyParseError(ValueError):
    """Malformed or unsupported NPY content; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def _atomic_write(path: Path, payload: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_npy(path, arr: np.ndarray):
    """Write a C-order little-endian NPY v1.0 file."""
    arr = np.ascontiguousarray(arr)
    descr = arr.dtype.str
    if descr == "|i1" or descr not in SUPPORTED_DESCRS:
        raise ValueError(f"unsupported dtype {arr.dtype} for NPY output")
    header = {
        "descr": descr,
        "fortran_order": False,
        "shape": tuple(int(d) for d in arr.shape),
    }
    text = (
        "{"
        + ", ".join(f"'{k}': {v!r}" for k, v in header.items())
        + "}"
    )
    # pad with spaces so magic+version+len+header is a multiple of 64
    base = len(MAGIC) + 2 + 2
    pad = 64 - (base + len(text) + 1) % 64
    text = text + " " * pad + "\n"
    payload = MAGIC + bytes([1, 0]) + struct.pack("<H", len(text))
    payload += text.encode("latin1") + arr.tobytes(order="C")
    _atomic_write(Path(path), payload)


def read_npy(path) -> np.ndarray:
    """Read a strict NPY v1.0 file; rejects anything outside the profile."""
    raw = Path(path).read_bytes()
    if len(raw) < 10 or raw[:6] != MAGIC:
        raise NpyParseError("missing NPY magic bytes", 0)
    major, minor = raw[6], raw[7]
    if (major, minor) != (1, 0):
        raise NpyParseError(f"unsupported NPY version {major}.{minor}", 6)
    (hlen,) = struct.unpack("<H", raw[8:10])
    if len(raw) < 10 + hlen:
        raise NpyParseError("truncated header", 10)
    try:
        header = ast.literal_eval(raw[10 : 10 + hlen].decode("latin1"))
    except (ValueError, SyntaxError) as exc:
        raise NpyParseError(f"unparseable header dict: {exc}", 10) from None
    if not isinstance(header, dict) or set(header) != {
        "descr",
        "fortran_order",
        "shape",
    }:
        raise NpyParseError("header must have exactly descr/fortran_order/shape", 10)
    descr = header["descr"]
    if descr not in SUPPORTED_DESCRS:
        raise NpyParseError(f"unsupported dtype descr {descr!r}", 10)
    if header["fortran_order"] is not False:
        raise NpyParseError("Fortran-order arrays are not supported", 10)
    shape = header["shape"]
    if not isinstance(shape, tuple) or not all(
        isinstance(d, int) and d >= 0 for d in shape
    ):
        raise NpyParseError("bad shape in header", 10)
    dtype = np.dtype(descr)
    count = int(np.prod(shape)) if shape else 1
    start = 10 + hlen
    expected = count * dtype.itemsize
    if len(raw) - start != expected:
        raise NpyParseError(
            f"payload has {len(raw) - start} bytes, expected {expected}", start
        )
    return np.frombuffer(raw[start:], dtype=dtype).reshape(shape).copy()


def _sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def _write_sidecar(path, sidecar: dict):
    payload = json.dumps(sidecar, indent=2, sort_keys=True).encode() + b"\n"
    _atomic_write(_sidecar_path(path), payload)


def _read_sidecar(path) -> dict:
    sc_path = _sidecar_path(path)
    if not sc_path.exists():
        raise FileNotFoundError(f"missing sidecar {sc_path}")
    sidecar = json.loads(sc_path.read_text())
    for key in ("spacing", "axes"):
        if key not in sidecar:
            raise ValueError(f"sidecar {sc_path} missing required key {key!r}")
    return sidecar


def write_volume(vol, path, **extra):
    """Serialize any volume type; extra keys go into the sidecar."""
    path = Path(path)
    ndim = vol.shape.ndim
    sidecar = {
        "spacing": list(vol.shape.spacing),
        "axes": list(AXIS_NAMES[:ndim]),
        **extra,
    }
    if isinstance(vol, ScalarVolume):
        write_npy(path, vol.data.astype(np.float32))
    elif isinstance(vol, LabelVolume):
        write_npy(path, vol.data.astype(np.int32))
        sidecar.setdefault("num_classes", vol.num_classes)
    elif isinstance(vol, ProbabilityVolume):
        write_npy(path, vol.data.astype(np.float32))
        sidecar.setdefault("num_classes", vol.num_classes)
        sidecar.setdefault("class_major", True)
    elif isinstance(vol, (DistanceMap, SignedDistanceMap)):
        write_npy(path, vol.data.astype(np.float32))
        sidecar.setdefault("class_id", vol.class_id)
        sidecar.setdefault(
            "signed", isinstance(vol, SignedDistanceMap)
        )
    else:
        raise TypeError(f"cannot serialize {type(vol).__name__}")
    _write_sidecar(path, sidecar)


def read_volume(path):
    """Read an array + sidecar back into a ScalarVolume or LabelVolume."""
    arr = read_npy(path)
    sidecar = _read_sidecar(path)
    axes = sidecar["axes"]
    shape = GridShape(
        arr.shape[-len(axes) :], tuple(float(s) for s in sidecar["spacing"])
    )
    if np.issubdtype(arr.dtype, np.integer):
        num_classes = int(
            sidecar.get("num_classes", int(arr.max()) + 1 if arr.size else 1)
        )
        return LabelVolume(shape, num_classes, arr.astype(np.int32))
    return ScalarVolume(shape, arr.astype(np.float64))


def read_signed_map(path) -> SignedDistanceMap:
    arr = read_npy(path)
    sidecar = _read_sidecar(path)
    shape = GridShape(arr.shape, tuple(float(s) for s in sidecar["spacing"]))
    return SignedDistanceMap(
        shape, int(sidecar.get("class_id", 0)), arr.astype(np.float64)
    )


def read_probability(path) -> ProbabilityVolume:
    arr = read_npy(path)
    sidecar = _read_sidecar(path)
    axes = sidecar["axes"]
    shape = GridShape(
        arr.shape[-len(axes) :], tuple(float(s) for s in sidecar["spacing"])
    )
    num_classes = int(sidecar.get("num_classes", arr.shape[0]))
    return ProbabilityVolume(shape, num_classes, arr.astype(np.float64))


def write_report(report: dict, path):
    if "schema" not in report:
        report = {"schema": 1, **report}
    _atomic_write(Path(path), json.dumps(report, indent=2).encode() + b"\n")
