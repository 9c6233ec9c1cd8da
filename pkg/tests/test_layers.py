import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claimcheck.errors import ConfigurationError, NonFiniteError, ShapeMismatchError
from claimcheck.nn import (
    BatchNorm,
    Linear,
    as_tensor,
    dropout,
    make_rng,
    masked_softmax,
    relu,
    relu_backward,
)


def exp_normalize_oracle(logits):
    """Independent high-precision softmax (mpmath, 50 digits)."""
    import mpmath

    mpmath.mp.dps = 50
    vals = [mpmath.exp(mpmath.mpf(v)) for v in logits]
    total = sum(vals)
    return [float(v / total) for v in vals]


# --- linear -----------------------------------------------------------------


def make_linear(in_dim, out_dim, W, b):
    lin = Linear(in_dim, out_dim, make_rng(0), "lin")
    lin.weight.value[...] = W
    lin.bias.value[...] = b
    return lin


def test_linear_identity_matrix():
    lin = make_linear(2, 2, np.eye(2), [0.0, 0.0])
    out = lin.forward(np.array([[1.0, 2.0]]))
    assert np.array_equal(out, [[1.0, 2.0]])


def test_linear_zero_input_passes_bias():
    lin = make_linear(2, 2, np.array([[5.0, 6.0], [7.0, 8.0]]), [3.0, 4.0])
    out = lin.forward(np.zeros((1, 2)))
    assert np.array_equal(out, [[3.0, 4.0]])


def test_linear_hand_evaluated():
    # [1,1] @ [[2,3],[4,5]] + [1,1] = [2+4+1, 3+5+1]
    lin = make_linear(2, 2, np.array([[2.0, 3.0], [4.0, 5.0]]), [1.0, 1.0])
    out = lin.forward(np.array([[1.0, 1.0]]))
    assert np.array_equal(out, [[7.0, 9.0]])


def test_linear_shape_mismatch_names_both_shapes():
    lin = Linear(3, 2, make_rng(0), "proj")
    with pytest.raises(ShapeMismatchError) as exc:
        lin.forward(np.zeros((1, 4)))
    assert "(1, 4)" in str(exc.value) and "(3, 2)" in str(exc.value)


def test_linear_rejects_nan_input():
    lin = Linear(2, 2, make_rng(0), "lin")
    with pytest.raises(NonFiniteError):
        lin.forward(np.array([[np.nan, 0.0]]))


def test_linear_backward_accumulates():
    lin = make_linear(2, 2, np.array([[1.0, 2.0], [3.0, 4.0]]), [0.0, 0.0])
    x = np.array([[1.0, -1.0]])
    lin.forward(x)
    dx = lin.backward(np.array([[1.0, 1.0]]))
    assert np.array_equal(dx, [[3.0, 7.0]])  # dout @ W.T
    assert np.array_equal(lin.weight.grad, [[1.0, 1.0], [-1.0, -1.0]])
    assert np.array_equal(lin.bias.grad, [1.0, 1.0])


# --- relu -------------------------------------------------------------------


def test_relu_basic():
    out, _ = relu(np.array([-1.0, 0.0, 2.0]))
    assert np.array_equal(out, [0.0, 0.0, 2.0])


def test_relu_all_positive_unchanged():
    x = np.array([0.5, 1.0, 7.25])
    out, _ = relu(x)
    assert np.array_equal(out, x)


def test_relu_gradient_definition():
    out, cache = relu(np.array([-1.0, 2.0]))
    assert np.array_equal(relu_backward(np.array([1.0, 1.0]), cache), [0.0, 1.0])


def test_relu_subgradient_at_zero_is_zero():
    out, cache = relu(np.array([0.0]))
    assert relu_backward(np.array([1.0]), cache)[0] == 0.0


# --- masked softmax ----------------------------------------------------------


def test_masked_softmax_symmetry():
    out, _ = masked_softmax(np.array([[0.0, 0.0]]), np.array([[True, True]]))
    assert np.array_equal(out, [[0.5, 0.5]])


def test_masked_softmax_single_valid():
    out, _ = masked_softmax(np.array([[5.0, -3.0]]), np.array([[True, False]]))
    assert np.array_equal(out, [[1.0, 0.0]])


def test_masked_softmax_matches_high_precision_oracle():
    logits = [1.0, 2.0, 3.0]
    expected = exp_normalize_oracle(logits)
    # frozen from the oracle
    assert np.allclose(expected, [0.09003057, 0.24472847, 0.66524096], atol=5e-9)
    out, _ = masked_softmax(np.array([logits]), np.ones((1, 3), dtype=bool))
    assert np.allclose(out[0], expected, atol=1e-12)


def test_masked_softmax_empty_row_is_zeros():
    out, _ = masked_softmax(np.array([[1.0, 2.0]]), np.zeros((1, 2), dtype=bool))
    assert np.array_equal(out, [[0.0, 0.0]])


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-30, 30), min_size=1, max_size=6),
    st.floats(-25, 25),
)
def test_masked_softmax_rows_sum_to_one_and_shift_invariant(logits, shift):
    row = np.array([logits])
    mask = np.ones_like(row, dtype=bool)
    out, _ = masked_softmax(row, mask)
    assert abs(out.sum() - 1.0) < 1e-12
    shifted, _ = masked_softmax(row + shift, mask)
    assert np.allclose(out, shifted, atol=1e-9)


def test_masked_softmax_masked_positions_exactly_zero():
    out, _ = masked_softmax(
        np.array([[10.0, 1.0, -4.0]]), np.array([[True, False, True]])
    )
    assert out[0, 1] == 0.0
    assert abs(out.sum() - 1.0) < 1e-12


# --- batch norm ---------------------------------------------------------------


def test_batchnorm_zero_variance_columns():
    bn = BatchNorm(2, "bn")
    x = np.array([[3.0, -1.0], [3.0, -1.0]])
    out = bn.forward(x, train=True)
    assert np.allclose(out, 0.0)


def test_batchnorm_gamma_zero_outputs_beta():
    bn = BatchNorm(2, "bn")
    bn.gamma.value[...] = 0.0
    bn.beta.value[...] = [5.0, -2.0]
    out = bn.forward(np.array([[1.0, 2.0], [3.0, 4.0]]), train=True)
    assert np.allclose(out, [[5.0, -2.0], [5.0, -2.0]])


def test_batchnorm_direct_formula_oracle():
    bn = BatchNorm(1, "bn")
    x = np.array([[1.0], [3.0]])
    out = bn.forward(x, train=True)
    mu, var = 2.0, 1.0  # biased variance of {1, 3}
    expected = (x - mu) / math.sqrt(var + 1e-5)
    assert np.allclose(out, expected, atol=1e-15)


def test_batchnorm_train_batch_of_one_rejected():
    bn = BatchNorm(2, "bn")
    with pytest.raises(ConfigurationError):
        bn.forward(np.ones((1, 2)), train=True)


def test_batchnorm_normalizes_mean_and_variance():
    bn = BatchNorm(4, "bn")
    x = make_rng(3).normal(2.0, 5.0, size=(64, 4))
    out = bn.forward(x, train=True)
    assert np.all(np.abs(out.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(out.var(axis=0) - 1.0) < 1e-6)


def test_batchnorm_eval_uses_running_stats():
    bn = BatchNorm(1, "bn")
    rng = make_rng(0)
    for _ in range(200):
        bn.forward(rng.normal(4.0, 2.0, size=(16, 1)), train=True)
    out = bn.forward(np.array([[4.0]]), train=False)
    assert abs(out[0, 0]) < 0.3  # running mean has converged near 4


# --- dropout ------------------------------------------------------------------


def test_dropout_rate_zero_is_identity():
    x = np.arange(6.0).reshape(2, 3)
    out, _ = dropout(x, 0.0, train=True, rng=make_rng(0))
    assert np.array_equal(out, x)


def test_dropout_eval_is_identity():
    x = np.arange(6.0).reshape(2, 3)
    out, _ = dropout(x, 0.25, train=False, rng=make_rng(0))
    assert np.array_equal(out, x)


def test_dropout_rate_one_rejected():
    with pytest.raises(ConfigurationError):
        dropout(np.ones(3), 1.0, train=True, rng=make_rng(0))


def test_dropout_large_sample_mean_preserved():
    x = np.ones(100_000)
    out, _ = dropout(x, 0.5, train=True, rng=make_rng(7))
    assert abs(out.mean() - 1.0) < 0.02
    # survivors are scaled by exactly 1/(1-rate)
    kept = out[out != 0.0]
    assert np.allclose(kept, 2.0)


def test_as_tensor_rejects_inf():
    with pytest.raises(NonFiniteError):
        as_tensor([1.0, np.inf], "x")
