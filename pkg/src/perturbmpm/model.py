"""Dense CRF model: unary potentials, Gaussian pairwise kernels, Gibbs energy.

Labels are 0-indexed integers 0..m-1.  Unary potentials are stored in nats
as psi_u = -log(p_u); lower values mean more likely.  Pairwise potentials
use a Potts compatibility mu(l, l') = 1{l != l'} weighted by a mixture of
diagonal-bandwidth Gaussian kernels over per-voxel feature vectors.
"""
from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

from .errors import ModelShapeError

PROB_CLAMP = 1e-12


def _frozen_array(values, dtype=np.float64, ndim=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ModelShapeError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True)
class GaussianKernel:
    """Weighted Gaussian kernel: w * exp(-0.5 * sum_d ((f_i - f_j) / sigma_d)^2)."""

    weight: float
    features: np.ndarray    # (N, D) per-voxel feature vectors
    bandwidths: np.ndarray  # (D,) per-dimension standard deviations

    def __post_init__(self):
        features = _frozen_array(np.atleast_2d(self.features), ndim=2)
        bandwidths = _frozen_array(np.atleast_1d(self.bandwidths), ndim=1)
        if self.weight < 0:
            raise ModelShapeError("kernel weight must be non-negative")
        if np.any(bandwidths <= 0) or not np.all(np.isfinite(bandwidths)):
            raise ModelShapeError("kernel bandwidths must be positive and finite")
        if features.shape[1] != bandwidths.shape[0]:
            raise ModelShapeError(
                f"feature dimension {features.shape[1]} does not match "
                f"{bandwidths.shape[0]} bandwidths")
        if not np.all(np.isfinite(features)):
            raise ModelShapeError("kernel features must be finite")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "bandwidths", bandwidths)
        object.__setattr__(self, "weight", float(self.weight))

    @property
    def n_voxels(self) -> int:
        return self.features.shape[0]

    def scaled_features(self) -> np.ndarray:
        """Features divided by bandwidths (unit-bandwidth Gaussian space)."""
        return self.features / self.bandwidths


@dataclasses.dataclass(frozen=True)
class DenseCrfModel:
    """Fully connected CRF over a voxel grid with Potts compatibility."""

    dims: tuple[int, ...]
    n_labels: int
    unary: np.ndarray              # (N, m) potentials in nats
    kernels: tuple[GaussianKernel, ...] = ()

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if not dims or any(d < 1 for d in dims):
            raise ModelShapeError(f"invalid grid dims {dims}")
        if self.n_labels < 2:
            raise ModelShapeError("need at least 2 labels")
        unary = _frozen_array(self.unary, ndim=2)
        n = int(np.prod(dims))
        if unary.shape != (n, self.n_labels):
            raise ModelShapeError(
                f"unary shape {unary.shape} does not match grid with "
                f"{n} voxels and {self.n_labels} labels")
        if not np.all(np.isfinite(unary)):
            raise ModelShapeError("unary potentials must be finite")
        kernels = tuple(self.kernels)
        for k in kernels:
            if k.n_voxels != n:
                raise ModelShapeError(
                    f"kernel has {k.n_voxels} feature rows, expected {n}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "n_labels", int(self.n_labels))
        object.__setattr__(self, "unary", unary)
        object.__setattr__(self, "kernels", kernels)

    @property
    def n_voxels(self) -> int:
        return self.unary.shape[0]

    def with_unary(self, unary: np.ndarray) -> "DenseCrfModel":
        """Copy of this model with replaced unary potentials."""
        return DenseCrfModel(self.dims, self.n_labels, unary, self.kernels)


def potts(label: int, label_prime: int) -> float:
    """Potts compatibility: 1 if the labels differ, else 0."""
    return float(label != label_prime)


def kernel_weight(kernel: GaussianKernel, i: int, j: int) -> float:
    """Kernel value between voxels i and j; symmetric, in [0, weight]."""
    z = (kernel.features[i] - kernel.features[j]) / kernel.bandwidths
    return kernel.weight * float(np.exp(-0.5 * np.dot(z, z)))


def kernel_matrix(kernel: GaussianKernel) -> np.ndarray:
    """Full (N, N) kernel matrix; O(N^2), intended for small models."""
    f = kernel.scaled_features()
    sq = ((f[:, None, :] - f[None, :, :]) ** 2).sum(axis=2)
    return kernel.weight * np.exp(-0.5 * sq)


def pairwise_matrix(model: DenseCrfModel, zero_diagonal: bool = False) -> np.ndarray:
    """Sum of all kernel matrices of the model."""
    n = model.n_voxels
    total = np.zeros((n, n))
    for kernel in model.kernels:
        total += kernel_matrix(kernel)
    if zero_diagonal:
        np.fill_diagonal(total, 0.0)
    return total


def energy(model: DenseCrfModel, labeling: np.ndarray) -> float:
    """Gibbs energy of a labeling; each unordered voxel pair counted once."""
    labeling = np.asarray(labeling)
    if labeling.shape != (model.n_voxels,):
        raise ModelShapeError(
            f"labeling has shape {labeling.shape}, expected ({model.n_voxels},)")
    if labeling.min(initial=0) < 0 or labeling.max(initial=0) >= model.n_labels:
        raise ModelShapeError("labeling contains out-of-range labels")
    e = float(model.unary[np.arange(model.n_voxels), labeling].sum())
    if model.kernels:
        pair = pairwise_matrix(model)
        neq = labeling[:, None] != labeling[None, :]
        e += 0.5 * float((pair * neq).sum())
    return e


def grid_coordinates(dims: Sequence[int]) -> np.ndarray:
    """(N, D) voxel coordinates of a row-major grid."""
    axes = [np.arange(d, dtype=np.float64) for d in dims]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def build_grid_model(dims: Sequence[int], n_labels: int, unary: np.ndarray,
                     kernels: Sequence = ()) -> DenseCrfModel:
    """Build a grid CRF with spatial kernel features from voxel coordinates.

    ``kernels`` entries are either ready GaussianKernel objects or
    (weight, bandwidths) pairs; bandwidths may be a scalar applied to every
    grid dimension.
    """
    dims = tuple(int(d) for d in dims)
    coords = grid_coordinates(dims)
    built = []
    for spec in kernels:
        if isinstance(spec, GaussianKernel):
            built.append(spec)
            continue
        weight, bandwidths = spec
        bandwidths = np.broadcast_to(
            np.atleast_1d(np.asarray(bandwidths, dtype=np.float64)),
            (len(dims),))
        built.append(GaussianKernel(weight, coords, bandwidths))
    return DenseCrfModel(dims, n_labels, unary, tuple(built))


def unaries_from_probabilities(probabilities: np.ndarray) -> np.ndarray:
    """Convert per-voxel label probabilities to potentials psi = -log(p).

    Probabilities are clamped to [1e-12, 1 - 1e-12] to keep potentials finite.
    """
    p = np.clip(np.asarray(probabilities, dtype=np.float64),
                PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -np.log(p)
