"""Permutohedral lattice for fast approximate high-dimensional Gaussian filtering.

The filter evaluates, for every point i with feature vector f_i,

    out_i = sum_j exp(-0.5 * ||f_i - f_j||^2) * v_j

over all points j (including i itself), where features are pre-scaled so the
Gaussian has unit bandwidth.  The splat/blur/slice scheme runs in O(N * d)
per value channel instead of O(N^2).

Two departures from the textbook single-pass scheme, both for accuracy:

* The blur stage runs ``n_blur`` passes of a [1, 2, 1]/4 kernel along each
  lattice direction, with features pre-scaled by sqrt(0.125 + 0.75 * n_blur)
  so the effective bandwidth stays at 1.  More passes give a more Gaussian
  profile; the lattice vertex set is expanded by n_blur - 1 neighbour rings
  so blurred mass is not truncated.
* The pipeline's global gain is arbitrary, so it is calibrated once at
  construction against exact Gaussian row masses at a few probe points.
  Filter outputs are then directly comparable to the brute-force kernel sum.
"""
from __future__ import annotations

import numpy as np

# Empirical variance of the splat/slice interpolation and of one blur pass,
# in lattice units (measured from the filter's impulse response).
_SPLAT_VARIANCE = 0.125
_BLUR_VARIANCE = 0.75


class PermutohedralLattice:
    """Splat/blur/slice Gaussian filter over a fixed point set."""

    def __init__(self, features: np.ndarray, n_blur: int = 12,
                 calibrate: bool = True, n_probes: int = 32):
        features = np.ascontiguousarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ValueError("features must be an (N, d) array")
        if n_blur < 1:
            raise ValueError("n_blur must be >= 1")
        self.n_points, self.d = features.shape
        self.n_blur = n_blur
        scale = np.sqrt(_SPLAT_VARIANCE + _BLUR_VARIANCE * n_blur)
        self._build(features * scale)
        self.gain = 1.0
        if calibrate:
            self.gain = self._calibrate(features, n_probes)

    # -- construction -----------------------------------------------------

    def _build(self, features: np.ndarray) -> None:
        n, d = features.shape
        # Rotate/scale onto the hyperplane sum(x) = 0 in d+1 dimensions.
        inv_std = np.sqrt(2.0 / 3.0) * (d + 1)
        axis_scale = inv_std / np.sqrt(np.arange(1, d + 1) * np.arange(2, d + 2))
        cf = features * axis_scale

        elevated = np.empty((n, d + 1))
        sm = np.zeros(n)
        for i in range(d, 0, -1):
            elevated[:, i] = sm - i * cf[:, i - 1]
            sm += cf[:, i - 1]
        elevated[:, 0] = sm

        # Nearest lattice point with coordinates that are multiples of d+1,
        # then repair the zero-sum constraint using the coordinate ranks.
        greedy = np.rint(elevated / (d + 1)) * (d + 1)
        diff = elevated - greedy
        order = np.argsort(-diff, axis=1, kind="stable")
        rank = np.empty_like(order)
        np.put_along_axis(
            rank, order,
            np.broadcast_to(np.arange(d + 1), order.shape).copy(), axis=1)
        coord_sum = np.rint(greedy.sum(axis=1) / (d + 1)).astype(np.int64)
        rank = rank + coord_sum[:, None]
        low = rank < 0
        greedy[low] += d + 1
        rank[low] += d + 1
        high = rank > d
        greedy[high] -= d + 1
        rank[high] -= d + 1

        # Barycentric coordinates inside the enclosing simplex.
        bary = np.zeros((n, d + 2))
        delta = (elevated - greedy) / (d + 1)
        rows = np.arange(n)
        for i in range(d + 1):
            bary[rows, d - rank[:, i]] += delta[:, i]
            bary[rows, d + 1 - rank[:, i]] -= delta[:, i]
        bary[:, 0] += 1.0 + bary[:, d + 1]
        self.barycentric = bary[:, : d + 1]

        # Simplex vertex keys; only the first d coordinates are stored.
        greedy_i = np.rint(greedy).astype(np.int64)
        keys = np.empty((n, d + 1, d), dtype=np.int64)
        for rem in range(d + 1):
            canonical = np.where(rank[:, :d] < d + 1 - rem, rem, rem - (d + 1))
            keys[:, rem, :] = greedy_i[:, :d] + canonical
        flat_keys = keys.reshape(-1, d)

        # Keys are encoded as single integers (mixed-radix over a bounding
        # box padded for the neighbour-ring growth) so that deduplication
        # and neighbour lookups are plain sorted-integer operations.
        offsets = []
        for axis in range(d + 1):
            off = np.ones(d, dtype=np.int64)
            if axis < d:
                off[axis] = -d
            offsets.append(off)
        margin = (self.n_blur + 1) * d
        lo = flat_keys.min(axis=0) - margin
        span = flat_keys.max(axis=0) + margin + 1 - lo
        if np.prod(span, dtype=np.float64) > 2 ** 62:
            raise ValueError("lattice key range too large to encode")
        strides = np.empty(d, dtype=np.int64)
        strides[-1] = 1
        for i in range(d - 2, -1, -1):
            strides[i] = strides[i + 1] * span[i + 1]
        off_codes = np.array([off @ strides for off in offsets])

        codes = (flat_keys - lo) @ strides
        uniq = np.unique(codes)
        # Grow the vertex set so multi-pass blur does not truncate mass.
        for _ in range(self.n_blur - 1):
            grown = np.concatenate(
                [uniq] + [uniq + c for c in off_codes]
                + [uniq - c for c in off_codes])
            uniq = np.unique(grown)

        self.n_lattice = len(uniq)
        self.vertex_index = np.searchsorted(uniq, codes).reshape(n, d + 1)

        # Neighbour tables; missing neighbours index the zero padding row.
        pad = self.n_lattice
        self.neighbours = np.empty((d + 1, 2, self.n_lattice), dtype=np.int64)
        for axis in range(d + 1):
            for sign, slot in ((1, 0), (-1, 1)):
                shifted = uniq + sign * off_codes[axis]
                pos = np.searchsorted(uniq, shifted)
                clipped = np.minimum(pos, self.n_lattice - 1)
                found = uniq[clipped] == shifted
                self.neighbours[axis, slot] = np.where(found, clipped, pad)

    # -- filtering --------------------------------------------------------

    def filter(self, values: np.ndarray) -> np.ndarray:
        """Gaussian-filter per-point values; accepts (N,) or (N, c)."""
        squeeze = values.ndim == 1
        vals = np.ascontiguousarray(values, dtype=np.float64)
        if squeeze:
            vals = vals[:, None]
        if vals.shape[0] != self.n_points:
            raise ValueError("value count does not match lattice points")
        c = vals.shape[1]

        lattice = np.zeros((self.n_lattice + 1, c))
        contrib = (self.barycentric[:, :, None] * vals[:, None, :]).reshape(-1, c)
        np.add.at(lattice, self.vertex_index.ravel(), contrib)

        for _ in range(self.n_blur):
            for axis in range(self.d + 1):
                n1 = lattice[self.neighbours[axis, 0]]
                n2 = lattice[self.neighbours[axis, 1]]
                lattice[: self.n_lattice] = (
                    0.5 * lattice[: self.n_lattice] + 0.25 * (n1 + n2))
                lattice[self.n_lattice] = 0.0

        gathered = lattice[self.vertex_index]
        out = self.gain * np.einsum("nk,nkc->nc", self.barycentric, gathered)
        return out[:, 0] if squeeze else out

    # -- calibration ------------------------------------------------------

    def _calibrate(self, features: np.ndarray, n_probes: int) -> float:
        """Match the filter's global gain to exact Gaussian row masses."""
        raw = self.filter(np.ones(self.n_points))
        probes = np.unique(
            np.linspace(0, self.n_points - 1,
                        min(n_probes, self.n_points)).astype(int))
        sq = ((features[probes, None, :] - features[None, :, :]) ** 2).sum(axis=2)
        exact_mass = np.exp(-0.5 * sq).sum(axis=1)
        return float(np.median(exact_mass / raw[probes]))
