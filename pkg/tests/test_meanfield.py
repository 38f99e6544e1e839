import numpy as np
import pytest
from scipy.special import softmax

from perturbmpm import (DenseCrfModel, InferenceConfig, ModelShapeError,
                        build_grid_model, check_marginal_field,
                        mean_field_infer, mean_field_init, mean_field_step,
                        mpm_decode)
from perturbmpm.meanfield import _infer_batched, _MessagePasser, \
    message_pass_exact


def grid_model(n=4, weight=1.0, seed=0):
    rng = np.random.default_rng(seed)
    unary = rng.random((n, 2))
    return build_grid_model((n,), 2, unary, [(weight, 1.0)])


def test_init_is_softmax_of_negated_unaries():
    model = grid_model()
    q = mean_field_init(model)
    assert np.allclose(q, softmax(-model.unary, axis=1))
    check_marginal_field(q)


def test_zero_kernel_fixed_point_is_softmax():
    rng = np.random.default_rng(3)
    unary = rng.random((5, 3))
    model = DenseCrfModel((5,), 3, unary)
    q, n_iter = mean_field_infer(model, InferenceConfig())
    assert np.allclose(q, softmax(-unary, axis=1), atol=1e-12)
    assert n_iter == 1


def test_single_node_exact():
    unary = np.array([[0.2, 1.1, 0.4]])
    model = DenseCrfModel((1,), 3, unary)
    q, _ = mean_field_infer(model)
    assert np.allclose(q, softmax(-unary, axis=1), atol=1e-12)


def test_message_pass_exact_brute_force():
    model = grid_model(n=3, weight=1.3)
    q = mean_field_init(model)
    msgs = message_pass_exact(model, q, model.kernels[0])
    from perturbmpm import kernel_weight
    for i in range(3):
        for l in range(2):
            want = sum(kernel_weight(model.kernels[0], i, j) * (1 - q[j, l])
                       for j in range(3) if j != i)
            assert msgs[i, l] == pytest.approx(want)


def test_step_rows_sum_to_one():
    model = grid_model(n=6, weight=2.0)
    q = mean_field_step(model, mean_field_init(model))
    check_marginal_field(q)


def test_step_rejects_wrong_shape():
    model = grid_model()
    with pytest.raises(ModelShapeError):
        mean_field_step(model, np.zeros((3, 2)))


def test_infer_reaches_fixed_point():
    model = grid_model(n=5, weight=0.8, seed=7)
    cfg = InferenceConfig(max_iterations=200, convergence_tol=1e-12)
    q, n_iter = mean_field_infer(model, cfg)
    q_next = mean_field_step(model, q)
    assert np.abs(q_next - q).max() < 1e-10
    assert n_iter < 200


def test_batched_matches_sequential():
    model = grid_model(n=5, weight=1.0, seed=1)
    rng = np.random.default_rng(9)
    unaries = rng.random((7, 5, 2))
    cfg = InferenceConfig()
    passer = _MessagePasser(model, "exact")
    q_batch, it_batch = _infer_batched(model, unaries, cfg, passer)
    for t in range(7):
        q_one, it_one = _infer_batched(model, unaries[t:t + 1], cfg, passer)
        assert np.array_equal(q_batch[t], q_one[0])
        assert it_batch[t] == it_one[0]


def test_mpm_decode_tie_breaks_low():
    q = np.array([[0.5, 0.5], [0.2, 0.8], [0.8, 0.2]])
    assert mpm_decode(q).tolist() == [0, 1, 0]


def test_check_marginal_field_rejects():
    with pytest.raises(ModelShapeError):
        check_marginal_field(np.array([[0.6, 0.6]]))
    with pytest.raises(ModelShapeError):
        check_marginal_field(np.array([0.5, 0.5]))
    with pytest.raises(ModelShapeError):
        check_marginal_field(np.array([[-0.1, 1.1]]))


def test_inference_config_validation():
    with pytest.raises(ValueError):
        InferenceConfig(max_iterations=0)
    with pytest.raises(ValueError):
        InferenceConfig(convergence_tol=-1.0)
    with pytest.raises(ValueError):
        InferenceConfig(backend="magic")
