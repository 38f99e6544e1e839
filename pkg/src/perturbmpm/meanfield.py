"""Mean-field approximation of the dense CRF and MPM decoding.

The marginal update is the parallel (synchronous) form

    Q'_i(l) = softmax_l( -psi_u(i, l) - sum_k msg_k(i, l) )
    msg_k(i, l) = sum_{j != i} k(i, j) * (1 - Q_j(l))        (Potts)

with two interchangeable message-passing backends: an exact O(N^2 m)
matrix product and an approximate permutohedral-lattice filter.
"""
from __future__ import annotations

import dataclasses

import numpy as np
from scipy.special import softmax

from .errors import ModelShapeError
from .lattice import PermutohedralLattice
from .model import DenseCrfModel, GaussianKernel, kernel_matrix

BACKENDS = ("exact", "lattice")


@dataclasses.dataclass(frozen=True)
class InferenceConfig:
    max_iterations: int = 10
    convergence_tol: float = 1e-5
    backend: str = "exact"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be non-negative")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")


def mean_field_init(model: DenseCrfModel) -> np.ndarray:
    """Initial marginals: per-voxel softmax of negative unaries."""
    return softmax(-model.unary, axis=1)


def _init_batched(unaries: np.ndarray) -> np.ndarray:
    return softmax(-unaries, axis=-1)


def message_pass_exact(model: DenseCrfModel, q: np.ndarray,
                       kernel: GaussianKernel) -> np.ndarray:
    """Exact Potts messages msg(i, l) = sum_{j != i} k(i, j) * (1 - Q_j(l))."""
    k0 = kernel_matrix(kernel)
    np.fill_diagonal(k0, 0.0)
    row_mass = k0.sum(axis=1)
    return row_mass[..., :, None] - np.einsum("ij,...jl->...il", k0, q)


def message_pass_lattice(model: DenseCrfModel, q: np.ndarray,
                         kernel: GaussianKernel,
                         lattice: PermutohedralLattice | None = None) -> np.ndarray:
    """Lattice-filtered Potts messages; approximates message_pass_exact.

    The filter includes each voxel's self-term k(i, i) = weight, which is
    subtracted afterwards to honour the j != i sum.
    """
    if lattice is None:
        lattice = PermutohedralLattice(kernel.scaled_features())
    filtered = _lattice_apply(lattice, q)
    mass = kernel.weight * lattice.filter(np.ones(model.n_voxels))
    neigh = kernel.weight * filtered - kernel.weight * q
    return (mass - kernel.weight)[..., :, None] - neigh


def _lattice_apply(lattice: PermutohedralLattice, q: np.ndarray) -> np.ndarray:
    """Filter marginals of shape (N, m) or (T, N, m), channel-wise."""
    if q.ndim == 2:
        return lattice.filter(q)
    t, n, m = q.shape
    stacked = np.ascontiguousarray(q.transpose(1, 0, 2)).reshape(n, t * m)
    out = lattice.filter(stacked)
    return out.reshape(n, t, m).transpose(1, 0, 2)


class _MessagePasser:
    """Per-model message computation, reusable across many marginal fields."""

    def __init__(self, model: DenseCrfModel, backend: str):
        if backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        self.model = model
        self.backend = backend
        if backend == "exact":
            k0 = np.zeros((model.n_voxels, model.n_voxels))
            for kernel in model.kernels:
                k0 += kernel_matrix(kernel)
            np.fill_diagonal(k0, 0.0)
            self._k0 = k0
            self._row_mass = k0.sum(axis=1)
        else:
            ones = np.ones(model.n_voxels)
            self._filters = []
            for kernel in model.kernels:
                lattice = PermutohedralLattice(kernel.scaled_features())
                neighbour_mass = kernel.weight * (lattice.filter(ones) - 1.0)
                self._filters.append((kernel, lattice, neighbour_mass))

    def messages(self, q: np.ndarray) -> np.ndarray:
        """Summed Potts messages for marginals of shape (..., N, m)."""
        if self.backend == "exact":
            return (self._row_mass[..., :, None]
                    - np.einsum("ij,...jl->...il", self._k0, q))
        total = np.zeros_like(q)
        for kernel, lattice, neighbour_mass in self._filters:
            neigh = kernel.weight * (_lattice_apply(lattice, q) - q)
            total += neighbour_mass[..., :, None] - neigh
        return total


def mean_field_step(model: DenseCrfModel, q: np.ndarray, backend: str = "exact",
                    passer: _MessagePasser | None = None) -> np.ndarray:
    """One parallel mean-field sweep; rows of the result sum to 1."""
    q = np.asarray(q)
    if q.shape[-2:] != (model.n_voxels, model.n_labels):
        raise ModelShapeError(
            f"marginal field shape {q.shape} does not match model")
    if passer is None:
        passer = _MessagePasser(model, backend)
    e = model.unary + passer.messages(q)
    return softmax(-e, axis=-1)


def _infer_batched(model: DenseCrfModel, unaries: np.ndarray,
                   cfg: InferenceConfig,
                   passer: _MessagePasser | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Mean-field inference for a batch of unary fields sharing the kernels.

    Converged batch entries are frozen so results are identical to running
    each entry on its own.  Returns (marginals, iterations) with shapes
    (T, N, m) and (T,).
    """
    if passer is None:
        passer = _MessagePasser(model, cfg.backend)
    q = _init_batched(unaries)
    t = q.shape[0]
    iterations = np.full(t, cfg.max_iterations, dtype=np.int64)
    active = np.arange(t)
    for it in range(cfg.max_iterations):
        e = unaries[active] + passer.messages(q[active])
        q_new = softmax(-e, axis=-1)
        delta = np.abs(q_new - q[active]).max(axis=(1, 2))
        q[active] = q_new
        converged = delta < cfg.convergence_tol
        iterations[active[converged]] = it + 1
        active = active[~converged]
        if active.size == 0:
            break
    return q, iterations


def mean_field_infer(model: DenseCrfModel, cfg: InferenceConfig | None = None
                     ) -> tuple[np.ndarray, int]:
    """Iterate mean-field sweeps to convergence; returns (Q, n_iterations)."""
    if cfg is None:
        cfg = InferenceConfig()
    q, iterations = _infer_batched(model, model.unary[None, :, :], cfg)
    return q[0], int(iterations[0])


def mpm_decode(q: np.ndarray) -> np.ndarray:
    """Per-voxel argmax labels; ties break toward the lowest label index."""
    return np.argmax(q, axis=-1)


def check_marginal_field(q: np.ndarray, atol: float = 1e-9) -> None:
    """Raise if q is not a row-stochastic (N, m) field."""
    q = np.asarray(q)
    if q.ndim != 2:
        raise ModelShapeError("marginal field must be 2-d")
    if np.any(q < -atol) or np.any(q > 1 + atol):
        raise ModelShapeError("marginal entries outside [0, 1]")
    if np.max(np.abs(q.sum(axis=1) - 1.0)) > atol:
        raise ModelShapeError("marginal rows do not sum to 1")
