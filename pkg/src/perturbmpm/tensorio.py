"""File codecs: the PMPM binary tensor format, binary PGM images, CSV
exports, and sidecar manifests.

Tensor layout (all little-endian):
    magic   4 bytes  b"PMPM"
    version u16      currently 1
    dtype   u16      0 = float64, 1 = uint32
    rank    u32
    dims    rank x u64
    payload row-major (C order) array data

Round trips are bitwise exact.
"""
from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"PMPM"
VERSION = 1
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<u4")}
_DTYPE_CODES = {np.dtype("<f8"): 0, np.dtype("<u4"): 1}


def write_tensor(path, array: np.ndarray) -> None:
    """Write an array as a PMPM tensor; dtype must be float64 or uint32."""
    arr = np.ascontiguousarray(array)
    if arr.dtype == np.float64:
        arr = arr.astype("<f8", copy=False)
    elif arr.dtype in (np.uint32, np.int64, np.int32):
        arr = arr.astype("<u4")
    code = _DTYPE_CODES.get(arr.dtype)
    if code is None:
        raise FormatError(f"unsupported tensor dtype {array.dtype}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HHI", VERSION, code, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(path) -> np.ndarray:
    """Read a PMPM tensor file."""
    data = Path(path).read_bytes()
    if len(data) < 12 or data[:4] != MAGIC:
        raise FormatError(f"{path}: not a PMPM tensor (bad magic)")
    version, code, rank = struct.unpack_from("<HHI", data, 4)
    if version != VERSION:
        raise FormatError(f"{path}: unsupported tensor version {version}")
    if code not in _DTYPES:
        raise FormatError(f"{path}: unknown dtype code {code}")
    header_end = 12 + 8 * rank
    if len(data) < header_end:
        raise FormatError(f"{path}: truncated tensor header")
    dims = struct.unpack_from(f"<{rank}Q", data, 12)
    dtype = _DTYPES[code]
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    payload = data[header_end:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(dims).copy()


def read_tensor_expect(path, rank: int | None = None,
                       shape: tuple | None = None) -> np.ndarray:
    """Read a tensor and validate its rank/shape at the call site."""
    arr = read_tensor(path)
    if rank is not None and arr.ndim != rank:
        raise FormatError(f"{path}: expected rank {rank}, got {arr.ndim}")
    if shape is not None and arr.shape != tuple(shape):
        raise FormatError(f"{path}: expected shape {tuple(shape)}, got {arr.shape}")
    return arr


# -- PGM (binary, 8-bit grayscale) ----------------------------------------

def write_pgm(path, image: np.ndarray, max_val: int = 255) -> None:
    """Write an 8-bit grayscale image in the binary (P5) PGM variant."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise FormatError("PGM image must be 2-d")
    if not 0 < max_val <= 255:
        raise FormatError("max_val must be in 1..255")
    data = np.clip(np.rint(img), 0, max_val).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n{max_val}\n".encode())
        fh.write(data.tobytes())


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary (P5) PGM image; returns (image, max_val)."""
    data = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4 and pos < len(data):
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if len(fields) < 4:
        raise FormatError(f"{path}: truncated PGM header")
    if fields[0] != b"P5":
        raise FormatError(
            f"{path}: unsupported PGM variant {fields[0].decode(errors='replace')} "
            "(only binary P5 is supported)")
    width, height, max_val = (int(f) for f in fields[1:4])
    if not 0 < max_val <= 255:
        raise FormatError(f"{path}: unsupported max value {max_val}")
    pos += 1  # single whitespace after max_val
    payload = data[pos:pos + width * height]
    if len(payload) != width * height:
        raise FormatError(f"{path}: truncated PGM payload")
    img = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return img.copy(), max_val


def entropy_heatmap_image(entropy: np.ndarray, n_labels: int,
                          shape: tuple[int, int]) -> np.ndarray:
    """Rescale an entropy map from [0, log2 m] bits to 8-bit pixels."""
    top = np.log2(n_labels)
    scaled = np.clip(np.asarray(entropy) / top, 0.0, 1.0) * 255.0
    return np.rint(scaled).reshape(shape)


# -- CSV exports ----------------------------------------------------------

def write_marginals_csv(path, marginals: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["voxel", "label", "probability"])
        for i, row in enumerate(np.asarray(marginals)):
            for l, p in enumerate(row):
                writer.writerow([i, l, repr(float(p))])


def write_histogram_csv(path, counts: np.ndarray) -> None:
    """Per-voxel label counts, one row per voxel."""
    counts = np.asarray(counts)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["voxel"] + [f"count_label_{l}"
                                     for l in range(counts.shape[1])])
        for i, row in enumerate(counts):
            writer.writerow([i] + [int(c) for c in row])


def write_uncertainty_csv(path, entropy: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["voxel", "entropy_bits"])
        for i, h in enumerate(np.asarray(entropy)):
            writer.writerow([i, repr(float(h))])


def write_distribution_csv(path, dist) -> None:
    """ExactDistribution rows (labeling code, energy, probability)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["labeling_code", "energy", "probability"])
        for code, (e, p) in enumerate(zip(dist.energies, dist.probabilities)):
            writer.writerow([code, repr(float(e)), repr(float(p))])


def write_error_curve_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_voxels", "n_samples", "sampled_error",
                         "mean_field_error"])
        for row in curve.rows:
            writer.writerow([row.n_voxels, row.n_samples,
                             repr(row.sampled_error), repr(row.mean_field_error)])


def write_biomarker_csv(path, report) -> None:
    fields = ["truth_v_pre", "truth_v_post", "truth_eor", "v_pre", "v_post",
              "eor", "v_pre_corrected", "v_post_corrected", "eor_corrected",
              "rtv_error", "rtv_error_corrected", "eor_error",
              "eor_error_corrected"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        writer.writerow([repr(float(getattr(report, f))) for f in fields])


# -- manifests ------------------------------------------------------------

def write_manifest(output_path, command: str, config_text: str,
                   version: str) -> None:
    """Sidecar text manifest for an output artifact (no timestamps, so
    identical runs produce identical manifests)."""
    manifest = Path(str(output_path) + ".manifest.txt")
    lines = [f"artifact-version: {version}", f"command: {command}",
             "config:"]
    lines += ["  " + line for line in config_text.splitlines()]
    manifest.write_text("\n".join(lines) + "\n")
