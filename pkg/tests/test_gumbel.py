import numpy as np
import pytest

from perturbmpm import (EULER_GAMMA, GumbelSampler, ModelShapeError,
                        SampleSet, SamplingConfig, ZeroNoiseSampler,
                        build_grid_model, empirical_marginals,
                        gumbel_max_select, gumbel_max_select_many,
                        iteration_noise, mean_field_infer, mpm_decode,
                        perturb_and_mpm, perturb_unaries, sample_gumbel)


def test_gumbel_moments():
    sampler = GumbelSampler(0)
    g = sample_gumbel(sampler, 200_000)
    # shifted draws have mean 0 and variance pi^2 / 6
    assert abs(g.mean()) < 0.01
    assert abs(g.var() - np.pi ** 2 / 6.0) < 0.02


def test_unshifted_mean_is_euler_gamma():
    sampler = GumbelSampler(0, euler_shift=False)
    g = sample_gumbel(sampler, 200_000)
    assert abs(g.mean() - EULER_GAMMA) < 0.01


def test_sampler_reproducible():
    a = GumbelSampler(42).field((3, 4))
    b = GumbelSampler(42).field((3, 4))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, GumbelSampler(43).field((3, 4)))


def test_iteration_noise_streams_independent_of_order():
    shapes = [(2, 3)] * 4
    forward = [iteration_noise(7, t, s) for t, s in enumerate(shapes)]
    backward = [iteration_noise(7, t, shapes[t])
                for t in reversed(range(4))][::-1]
    for f, b in zip(forward, backward):
        assert np.array_equal(f, b)
    assert not np.array_equal(forward[0], forward[1])


def test_select_matches_softmax():
    theta = -np.log(np.array([0.6, 0.3, 0.1]))
    draws = gumbel_max_select_many(theta, GumbelSampler(1), 100_000)
    freqs = np.bincount(draws, minlength=3) / len(draws)
    assert np.abs(freqs - [0.6, 0.3, 0.1]).max() < 0.01


def test_select_single_draw_range():
    theta = np.array([0.5, 0.1])
    labels = {gumbel_max_select(theta, GumbelSampler(s)) for s in range(20)}
    assert labels <= {0, 1}
    assert len(labels) == 2


def test_select_rejects_bad_theta():
    with pytest.raises(ValueError):
        gumbel_max_select(np.array([[1.0, 2.0]]), GumbelSampler(0))
    with pytest.raises(ValueError):
        gumbel_max_select(np.array([np.nan, 0.0]), GumbelSampler(0))


def test_zero_noise_perturbation_is_identity():
    model = build_grid_model((3,), 2, np.random.default_rng(0).random((3, 2)),
                             [(1.0, 1.0)])
    perturbed = perturb_unaries(model, ZeroNoiseSampler())
    assert np.array_equal(perturbed.unary, model.unary)


def test_perturb_unaries_leaves_input_unchanged():
    unary = np.random.default_rng(1).random((4, 3))
    model = build_grid_model((4,), 3, unary)
    perturbed = perturb_unaries(model, GumbelSampler(5))
    assert np.array_equal(model.unary, unary)
    assert not np.array_equal(perturbed.unary, unary)


def test_sample_set_validation_and_prefix():
    s = SampleSet(np.array([[0, 1], [1, 1], [0, 0]]), 2)
    assert len(s) == 3
    assert s.n_voxels == 2
    assert len(s.prefix(2)) == 2
    with pytest.raises(ModelShapeError):
        SampleSet(np.array([[0, 2]]), 2)
    with pytest.raises(ModelShapeError):
        SampleSet(np.array([0, 1]), 2)


def test_perturb_and_mpm_shapes_and_determinism():
    model = build_grid_model((4,), 2,
                             np.random.default_rng(2).random((4, 2)),
                             [(1.0, 1.0)])
    cfg = SamplingConfig(50, seed=3)
    a = perturb_and_mpm(model, cfg)
    b = perturb_and_mpm(model, cfg)
    assert a.labels.shape == (50, 4)
    assert np.array_equal(a.labels, b.labels)
    c = perturb_and_mpm(model, cfg, batch_size=7)
    assert np.array_equal(a.labels, c.labels)


def test_perturb_and_mpm_matches_manual_iteration():
    model = build_grid_model((3,), 2,
                             np.random.default_rng(4).random((3, 2)),
                             [(0.5, 1.0)])
    cfg = SamplingConfig(5, seed=11)
    run = perturb_and_mpm(model, cfg)
    for t in range(5):
        noise = iteration_noise(11, t, (3, 2))
        q, _ = mean_field_infer(model.with_unary(model.unary - noise),
                                cfg.inference)
        assert np.array_equal(run.labels[t], mpm_decode(q))


def test_empirical_marginals_counts():
    s = SampleSet(np.array([[0, 1], [0, 0], [1, 1], [0, 1]]), 2)
    f = empirical_marginals(s)
    assert np.allclose(f, [[0.75, 0.25], [0.25, 0.75]])
    with pytest.raises(ValueError):
        empirical_marginals(SampleSet(np.empty((0, 2), dtype=int), 2))


def test_sampling_config_validation():
    with pytest.raises(ValueError):
        SamplingConfig(0)
