"""Finite-difference verification of every layer's analytic gradients."""

import numpy as np
import pytest

from claimcheck.errors import NonFiniteError
from claimcheck.nn import (
    BatchNorm,
    EmbeddingTable,
    Linear,
    LstmEncoder,
    Parameter,
    gradcheck,
    make_rng,
    masked_softmax,
    masked_softmax_backward,
    relu,
    relu_backward,
)

TOL = 1e-4
H = 1e-5


def test_constant_function_zero_everywhere():
    p = Parameter(np.ones(3), "c")

    def fn():
        p.zero_grad()
        return 7.0

    assert gradcheck(fn, [p], h=H) == 0.0


def test_linear_layer_param_and_input_grads():
    rng = make_rng(42)
    lin = Linear(4, 3, rng, "lin")
    x_p = Parameter(rng.normal(size=(2, 4)), "x")
    target = rng.normal(size=(2, 3))

    def fn():
        for p in [lin.weight, lin.bias, x_p]:
            p.zero_grad()
        lin.reset_tape()
        out = lin.forward(x_p.value)
        diff = out - target
        loss = float((diff * diff).sum())
        dx = lin.backward(2.0 * diff)
        x_p.grad += dx
        return loss

    err = gradcheck(fn, [lin.weight, lin.bias, x_p], h=H)
    assert err < 1e-6


def test_relu_gradcheck_away_from_kink():
    rng = make_rng(1)
    x_p = Parameter(rng.normal(size=(8,)) + np.sign(rng.normal(size=8)) * 0.05, "x")
    w = rng.normal(size=8)

    def fn():
        x_p.zero_grad()
        out, cache = relu(x_p.value)
        loss = float(out @ w)
        x_p.grad += relu_backward(w, cache)
        return loss

    assert gradcheck(fn, [x_p], h=H) < TOL


def test_masked_softmax_gradcheck():
    rng = make_rng(5)
    x_p = Parameter(rng.normal(size=(3, 5)), "logits")
    mask = np.array(
        [[True, True, False, True, True],
         [True, False, False, False, True],
         [True, True, True, True, True]]
    )
    w = rng.normal(size=(3, 5))

    def fn():
        x_p.zero_grad()
        p, cache = masked_softmax(x_p.value, mask)
        loss = float((p * w).sum())
        x_p.grad += masked_softmax_backward(w, cache)
        return loss

    assert gradcheck(fn, [x_p], h=H) < TOL


def test_batchnorm_train_gradcheck():
    rng = make_rng(9)
    bn = BatchNorm(4, "bn")
    bn.gamma.value[...] = rng.normal(1.0, 0.2, size=4)
    bn.beta.value[...] = rng.normal(size=4)
    x_p = Parameter(rng.normal(size=(6, 4)), "x")
    w = rng.normal(size=(6, 4))

    def fn():
        for p in [bn.gamma, bn.beta, x_p]:
            p.zero_grad()
        bn.reset_tape()
        out = bn.forward(x_p.value, train=True)
        loss = float((out * w).sum())
        x_p.grad += bn.backward(w)
        return loss

    assert gradcheck(fn, [bn.gamma, bn.beta, x_p], h=H) < TOL


def test_batchnorm_eval_gradcheck():
    rng = make_rng(10)
    bn = BatchNorm(3, "bn")
    bn.running_mean = rng.normal(size=3)
    bn.running_var = rng.uniform(0.5, 2.0, size=3)
    x_p = Parameter(rng.normal(size=(2, 3)), "x")
    w = rng.normal(size=(2, 3))

    def fn():
        for p in [bn.gamma, bn.beta, x_p]:
            p.zero_grad()
        bn.reset_tape()
        out = bn.forward(x_p.value, train=False)
        loss = float((out * w).sum())
        x_p.grad += bn.backward(w)
        return loss

    assert gradcheck(fn, [bn.gamma, bn.beta, x_p], h=H) < TOL


def test_lstm_gradcheck_params_and_tokens():
    rng = make_rng(13)
    enc = LstmEncoder(3, 2, rng, "lstm")
    tok_p = Parameter(rng.normal(size=(4, 3)), "tokens")
    w = rng.normal(size=4)

    def fn():
        for p in [enc.w_ih, enc.w_hh, enc.bias, tok_p]:
            p.zero_grad()
        enc.reset_tape()
        out = enc.forward(tok_p.value)
        loss = float(out @ w)
        tok_p.grad += enc.backward(w)
        return loss

    params = [enc.w_ih, enc.w_hh, enc.bias, tok_p]
    assert gradcheck(fn, params, h=H) < TOL


def test_embedding_table_gradcheck():
    rng = make_rng(17)
    emb = EmbeddingTable(5, 3, rng, "emb")
    idx = np.array([[0, 2], [2, 4]])
    w = rng.normal(size=(2, 2, 3))

    def fn():
        emb.table.zero_grad()
        emb.reset_tape()
        out = emb.forward(idx)
        loss = float((out * w).sum())
        emb.backward(w)
        return loss

    assert gradcheck(fn, [emb.table], h=H) < TOL


def test_gradcheck_reports_nonfinite_with_parameter_name():
    p = Parameter(np.array([1.0]), "theta")

    def fn():
        p.zero_grad()
        if p.value[0] != 1.0:  # any perturbation explodes
            return float("nan")
        p.grad += 1.0
        return float(p.value[0])

    with pytest.raises(NonFiniteError) as exc:
        gradcheck(fn, [p], h=H)
    assert "theta" in str(exc.value)


def test_gradcheck_subsampling_is_deterministic():
    rng = make_rng(3)
    lin = Linear(30, 20, rng, "big")
    x = rng.normal(size=(2, 30))
    w = rng.normal(size=(2, 20))

    def fn():
        lin.weight.zero_grad()
        lin.bias.zero_grad()
        lin.reset_tape()
        out = lin.forward(x)
        loss = float((out * w).sum())
        lin.backward(w)
        return loss

    e1 = gradcheck(fn, [lin.weight, lin.bias], h=H, max_coords_per_param=25, seed=5)
    e2 = gradcheck(fn, [lin.weight, lin.bias], h=H, max_coords_per_param=25, seed=5)
    assert e1 == e2 and e1 < 1e-6
