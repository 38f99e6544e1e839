"""Brute-force ground truth for tiny models.

Everything here enumerates all m^N labelings directly: exact Gibbs
probabilities, exact marginals, exact MAP, inverse-CDF Gibbs sampling, and
perturbed-MAP sampling in both the full-order (one Gumbel per labeling,
exact by the Gumbel-max trick) and order-1 (unaries only) variants.
Capacity guards keep this at desk scale; it exists to validate the
approximate samplers, not to be clever.
"""
from __future__ import annotations

import dataclasses

import numpy as np
from scipy.special import logsumexp

from .errors import CapacityError, ModelShapeError
from .gumbel import perturb_unaries
from .model import DenseCrfModel, pairwise_matrix

MAX_ENUM_STATES = 2 ** 24
MAX_PERTURB_STATES = 2 ** 20
_CHUNK = 1 << 16


def n_states(model: DenseCrfModel) -> int:
    return model.n_labels ** model.n_voxels


def decode_labeling(codes, n_voxels: int, n_labels: int) -> np.ndarray:
    """Mixed-radix decode; voxel 0 is the least significant digit."""
    codes = np.asarray(codes, dtype=np.int64)
    digits = (codes[..., None] // n_labels ** np.arange(n_voxels)) % n_labels
    return digits


def encode_labeling(labeling: np.ndarray, n_labels: int) -> int:
    labeling = np.asarray(labeling, dtype=np.int64)
    return int((labeling * n_labels ** np.arange(labeling.shape[0])).sum())


def _all_energies(model: DenseCrfModel) -> np.ndarray:
    """Energies of every labeling, in labeling-code order."""
    total = n_states(model)
    if total > MAX_ENUM_STATES:
        raise CapacityError(
            f"{model.n_labels}^{model.n_voxels} = {total} labelings exceeds "
            f"the enumeration guard of {MAX_ENUM_STATES}")
    pair = pairwise_matrix(model) if model.kernels else None
    n = model.n_voxels
    energies = np.empty(total)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total))
        states = decode_labeling(codes, n, model.n_labels)
        e = np.take_along_axis(
            model.unary[None, :, :],
            states[:, :, None], axis=2)[:, :, 0].sum(axis=1)
        if pair is not None:
            for i in range(n):
                for j in range(i + 1, n):
                    e += pair[i, j] * (states[:, i] != states[:, j])
        energies[start:len(codes) + start] = e
    return energies


@dataclasses.dataclass(frozen=True)
class ExactDistribution:
    """Fully enumerated Gibbs distribution of a tiny model."""

    n_voxels: int
    n_labels: int
    log_partition: float
    probabilities: np.ndarray  # (m^N,) indexed by labeling code
    energies: np.ndarray       # (m^N,) matching energies

    def __post_init__(self):
        probs = np.asarray(self.probabilities)
        if abs(probs.sum() - 1.0) > 1e-9:
            raise ModelShapeError("probabilities do not sum to 1")


def enumerate_gibbs(model: DenseCrfModel) -> ExactDistribution:
    """Enumerate every labeling and normalise with log-sum-exp."""
    energies = _all_energies(model)
    log_z = float(logsumexp(-energies))
    probabilities = np.exp(-energies - log_z)
    return ExactDistribution(model.n_voxels, model.n_labels, log_z,
                             probabilities, energies)


def exact_marginals(dist: ExactDistribution) -> np.ndarray:
    """Per-voxel marginals P(x_i = l) by direct summation."""
    n, m = dist.n_voxels, dist.n_labels
    out = np.zeros((n, m))
    total = len(dist.probabilities)
    for start in range(0, total, _CHUNK):
        codes = np.arange(start, min(start + _CHUNK, total))
        states = decode_labeling(codes, n, m)
        probs = dist.probabilities[codes]
        for i in range(n):
            out[i] += np.bincount(states[:, i], weights=probs, minlength=m)
    return out


def exact_map(model: DenseCrfModel) -> np.ndarray:
    """Global energy minimiser; ties break toward the lowest labeling code."""
    energies = _all_energies(model)
    return decode_labeling(int(np.argmin(energies)),
                           model.n_voxels, model.n_labels)


def exact_gibbs_sample(dist: ExactDistribution, sampler) -> np.ndarray:
    """One exact Gibbs draw via inverse CDF over the enumerated table."""
    return exact_gibbs_sample_many(dist, sampler, 1)[0]


def exact_gibbs_sample_many(dist: ExactDistribution, sampler,
                            count: int) -> np.ndarray:
    cdf = np.cumsum(dist.probabilities)
    u = sampler.uniform(count)
    codes = np.searchsorted(cdf, u, side="right")
    codes = np.minimum(codes, len(cdf) - 1)
    return decode_labeling(codes, dist.n_voxels, dist.n_labels)


def perturb_and_map_full_order(model: DenseCrfModel, sampler) -> np.ndarray:
    """Exact Gibbs sample: perturb every labeling's energy, take the argmin."""
    return perturb_and_map_full_order_many(model, sampler, 1)[0]


def perturb_and_map_full_order_many(model: DenseCrfModel, sampler,
                                    count: int) -> np.ndarray:
    total = n_states(model)
    if total > MAX_PERTURB_STATES:
        raise CapacityError(
            f"{total} labelings exceeds the full-order perturbation guard "
            f"of {MAX_PERTURB_STATES}")
    energies = _all_energies(model)
    codes = np.empty(count, dtype=np.int64)
    chunk = max(1, _CHUNK // total)
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        g = sampler.field((stop - start, total))
        codes[start:stop] = np.argmin(energies[None, :] - g, axis=1)
    return decode_labeling(codes, model.n_voxels, model.n_labels)


def perturb_and_map_order1(model: DenseCrfModel, sampler) -> np.ndarray:
    """Order-1 perturbed MAP: perturb unaries only, then exact MAP."""
    return exact_map(perturb_unaries(model, sampler))


def perturb_and_map_order1_many(model: DenseCrfModel, seed: int, count: int,
                                euler_shift: bool = True) -> np.ndarray:
    """Order-1 perturbed MAP draws using the per-iteration noise streams.

    Sample t uses iteration_noise(seed, t), so a perturb_and_mpm run with
    the same seed sees exactly the same perturbations (paired decodes).
    """
    from .gumbel import iteration_noise

    total = n_states(model)
    if total > MAX_ENUM_STATES:
        raise CapacityError(
            f"{total} labelings exceeds the enumeration guard of "
            f"{MAX_ENUM_STATES}")
    n, m = model.n_voxels, model.n_labels
    codes_all = np.arange(total)
    states = decode_labeling(codes_all, n, m)
    base_pair = np.zeros(total)
    if model.kernels:
        pair = pairwise_matrix(model)
        for i in range(n):
            for j in range(i + 1, n):
                base_pair += pair[i, j] * (states[:, i] != states[:, j])
    out = np.empty((count, n), dtype=np.int64)
    chunk = max(1, _CHUNK // total)
    for start in range(0, count, chunk):
        stop = min(start + chunk, count)
        noise = np.stack([iteration_noise(seed, t, (n, m), euler_shift)
                          for t in range(start, stop)])
        perturbed = model.unary[None] - noise
        e = np.broadcast_to(base_pair, (stop - start, total)).copy()
        for i in range(n):
            e += perturbed[:, i, states[:, i]]
        out[start:stop] = states[np.argmin(e, axis=1)]
    return out


def kl_product_vs_exact(q: np.ndarray, model: DenseCrfModel,
                        dist: ExactDistribution) -> float:
    """KL(Q || P) of a product field Q against the enumerated Gibbs P."""
    q = np.asarray(q)
    safe = np.clip(q, 1e-300, 1.0)
    neg_entropy = float((q * np.log(safe)).sum())
    expected_unary = float((q * model.unary).sum())
    expected_pair = 0.0
    if model.kernels:
        pair = pairwise_matrix(model)
        agree = q @ q.T
        disagree = 1.0 - agree
        np.fill_diagonal(disagree, 0.0)
        expected_pair = 0.5 * float((pair * disagree).sum())
    return neg_entropy + expected_unary + expected_pair + dist.log_partition
