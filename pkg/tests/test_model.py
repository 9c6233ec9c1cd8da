"""Memory/attention oracle equivalence and whole-model behavior."""

import math

import numpy as np
import pytest
from helpers import permuted_record, record, small_config, store_for

from claimcheck.data import assemble_batch, build_domain_vocab
from claimcheck.model import (
    AttentionMemory,
    CcnConfig,
    ConsistencyModel,
    DropoutRates,
    ZeroVectorError,
    attend,
    clip_joint,
    memory_output,
)
from claimcheck.nn import make_rng


# --- brute-force oracle -------------------------------------------------------


def brute_force_memory(items, W_a, b_a, W_c, b_c, query_hat):
    """Direct scalar-loop composition of the memory formulas."""
    J = len(items)
    m_a, m_c = [], []
    for x in items:
        m_a.append([max(0.0, sum(x[k] * W_a[k][d] for k in range(len(x))) + b_a[d])
                    for d in range(len(b_a))])
        m_c.append([max(0.0, sum(x[k] * W_c[k][d] for k in range(len(x))) + b_c[d])
                    for d in range(len(b_c))])
    logits = [sum(query_hat[d] * m_a[j][d] for d in range(len(query_hat))) for j in range(J)]
    if J:
        mx = max(logits)
        exps = [math.exp(v - mx) for v in logits]
        z = sum(exps)
        p = [e / z for e in exps]
    else:
        p = []
    o = [query_hat[d] + sum(p[j] * m_c[j][d] for j in range(J))
         for d in range(len(query_hat))]
    return p, o


@pytest.mark.parametrize("j", [1, 2, 3])
def test_memory_matches_brute_force_composition(j):
    rng = make_rng(100 + j)
    mem = AttentionMemory("m", input_dim=5, mem_dim=4, rng=rng)
    items = rng.normal(size=(1, j, 5))
    q = rng.normal(size=(1, 4))
    o, p, _ = mem.forward(items, q, np.ones((1, j), dtype=bool))
    p_ref, o_ref = brute_force_memory(
        items[0].tolist(),
        mem.input_bank.weight.value.tolist(), mem.input_bank.bias.value.tolist(),
        mem.output_bank.weight.value.tolist(), mem.output_bank.bias.value.tolist(),
        q[0].tolist(),
    )
    assert np.max(np.abs(p[0] - p_ref)) < 1e-10
    assert np.max(np.abs(o[0] - o_ref)) < 1e-10


def test_memory_embed_zero_item_zero_bias():
    rng = make_rng(0)
    mem = AttentionMemory("m", 4, 3, rng)
    mem.input_bank.bias.value[...] = 0.0
    mem.output_bank.bias.value[...] = 0.0
    m_a, m_c, _ = mem.memory_embed(np.zeros((1, 1, 4)))
    assert np.array_equal(m_a, np.zeros((1, 1, 3)))
    assert np.array_equal(m_c, np.zeros((1, 1, 3)))


def test_memory_embed_empty_memory_shapes():
    mem = AttentionMemory("m", 4, 3, make_rng(0))
    m_a, m_c, _ = mem.memory_embed(np.zeros((2, 0, 4)))
    assert m_a.shape == (2, 0, 3) and m_c.shape == (2, 0, 3)


def test_memory_embed_composes_linear_relu():
    rng = make_rng(7)
    mem = AttentionMemory("m", 4, 3, rng)
    x = rng.normal(size=(1, 1, 4))
    m_a, _, _ = mem.memory_embed(x)
    manual = np.maximum(0.0, x[0] @ mem.input_bank.weight.value + mem.input_bank.bias.value)
    assert np.allclose(m_a[0], manual, atol=1e-12)


# --- attend / memory_output edge cases ----------------------------------------


def test_attend_single_item():
    p, _ = attend(np.array([[1.0, 2.0]]), np.array([[[3.0, 4.0]]]), np.ones((1, 1), bool))
    assert np.array_equal(p, [[1.0]])


def test_attend_identical_items():
    m = np.array([[[1.0, 2.0], [1.0, 2.0]]])
    p, _ = attend(np.array([[0.5, -0.5]]), m, np.ones((1, 2), bool))
    assert np.allclose(p, [[0.5, 0.5]], atol=1e-15)


def test_attend_exp_normalize_oracle():
    m = np.array([[[1.0, 0.0], [0.0, 1.0]]])
    p, _ = attend(np.array([[1.0, 0.0]]), m, np.ones((1, 2), bool))
    assert np.allclose(p, [[0.7310586, 0.2689414]], atol=1e-7)


def test_memory_output_single_item():
    m_c = np.array([[[1.0, 2.0]]])
    q = np.array([[10.0, 20.0]])
    o = memory_output(np.array([[1.0]]), m_c, q)
    assert np.array_equal(o, [[11.0, 22.0]])


def test_memory_output_empty_memory_is_query():
    q = np.array([[3.0, -1.0]])
    o = memory_output(np.zeros((1, 0)), np.zeros((1, 0, 2)), q)
    assert np.array_equal(o, q)


def test_memory_output_two_items_weighted():
    m_c = np.array([[[2.0, 0.0], [0.0, 2.0]]])
    q = np.array([[1.0, 1.0]])
    o = memory_output(np.array([[0.5, 0.5]]), m_c, q)
    assert np.allclose(o, [[2.0, 2.0]])


# --- clip joint -----------------------------------------------------------------


def test_clip_joint_identical_unit_vectors_sum_to_one():
    u = np.array([[0.6, 0.8, 0.0]])
    j = clip_joint(u, u)
    assert abs(j.sum() - 1.0) < 1e-12


def test_clip_joint_orthogonal_one_hots_zero():
    a = np.array([[1.0, 0.0]])
    b = np.array([[0.0, 1.0]])
    assert np.array_equal(clip_joint(a, b), [[0.0, 0.0]])


def test_clip_joint_matches_direct_formula():
    rng = make_rng(3)
    a, b = rng.normal(size=(2, 8)), rng.normal(size=(2, 8))
    j = clip_joint(a, b)
    ref = (a / np.linalg.norm(a, axis=1, keepdims=True)) * (
        b / np.linalg.norm(b, axis=1, keepdims=True)
    )
    assert np.max(np.abs(j - ref)) < 1e-12


def test_clip_joint_zero_vector_rejected():
    with pytest.raises(ZeroVectorError):
        clip_joint(np.zeros((1, 4)), np.ones((1, 4)))


# --- whole model -----------------------------------------------------------------


def build_batch(cfg, n=4, seed=0, with_tokens=False):
    recs = [record(i, n_imgs=2 + i % 2, n_sents=1 + i % 3, n_ents=1 + i % 2,
                   label="falsified" if i % 2 else "pristine") for i in range(n)]
    store = store_for(recs, cfg, seed=seed, with_tokens=with_tokens)
    vocab = build_domain_vocab(recs) if cfg.use_domains else None
    return assemble_batch(recs, store, vocab, cfg), recs, store, vocab


def test_full_width_concat_dimension():
    cfg = CcnConfig(text_encoder="token_lstm_512")
    model_dim = sum(cfg.mem_dim(m) for m in cfg.enabled_memories()) + cfg.clip_dim
    assert model_dim == 1024 + 1024 + 512 + 512 + 512 == 3584


def test_zero_parameters_give_half_probability():
    cfg = small_config()
    batch, *_ , vocab = build_batch(cfg)
    model = ConsistencyModel(cfg, vocab, seed=0)
    for p in model.parameters().values():
        p.value[...] = 0.0
    out = model.forward(batch, train=False)
    assert np.allclose(out.p_f, 0.5)


def test_eval_mode_is_deterministic():
    cfg = small_config()
    batch, *_, vocab = build_batch(cfg)
    model = ConsistencyModel(cfg, vocab, seed=1)
    a = model.forward(batch, train=False).p_f
    b = model.forward(batch, train=False).p_f
    assert np.array_equal(a, b)


def test_permutation_equivariance_of_forward():
    cfg = small_config()
    rec = record(0, n_imgs=3, n_sents=3, n_ents=2)
    store = store_for([rec], cfg)
    vocab = build_domain_vocab([rec])
    model = ConsistencyModel(cfg, vocab, seed=2)

    perm = [2, 0, 1]
    b1 = assemble_batch([rec], store, vocab, cfg)
    b2 = assemble_batch([permuted_record(rec, perm)], store, vocab, cfg)
    r1 = model.forward(b1, train=False)
    r2 = model.forward(b2, train=False)
    assert abs(r1.p_f[0] - r2.p_f[0]) < 1e-9
    a1 = r1.attention[0]["image"]
    a2 = r2.attention[0]["image"]
    assert [a1.probabilities[p] for p in perm] == pytest.approx(a2.probabilities, abs=1e-12)
    assert [a1.item_ids[p] for p in perm] == a2.item_ids


def test_empty_memory_identity():
    cfg = small_config(use_clip=False, use_scenes=False, use_entities=False,
                       use_captions=False, use_labels_feature=False, use_domains=False,
                       use_bn=False)
    rec = record(0, n_imgs=0, n_sents=0, n_ents=0)
    store = store_for([rec], cfg)
    # two copies so train-mode BN constraints never bite; eval here anyway
    batch = assemble_batch([rec], store, None, cfg)
    model = ConsistencyModel(cfg, None, seed=3)
    out = model.forward(batch, train=False)
    # o must equal query_hat exactly: recompute the projection by hand
    q_hat = batch.memories["image"].query @ model.query_projs["image"].weight.value \
        + model.query_projs["image"].bias.value
    assert np.array_equal(out.o_t, q_hat)


def test_attention_records_cover_valid_items_and_sum_to_one():
    cfg = small_config()
    batch, recs, _, vocab = build_batch(cfg, n=3)
    model = ConsistencyModel(cfg, vocab, seed=4)
    out = model.forward(batch, train=False)
    for i, rec in enumerate(recs):
        att = out.attention[i]["sentence"]
        assert len(att.probabilities) == len(rec.sentences)
        if rec.sentences:
            assert abs(sum(att.probabilities) - 1.0) < 1e-9
        assert all(pv > 0 for pv in att.probabilities)


def test_image_only_config_degrades_to_image_path():
    cfg = small_config(use_clip=False, use_scenes=False, use_entities=False,
                       use_captions=False, use_domains=False, use_bn=False,
                       use_labels_feature=False)
    batch, *_ = build_batch(cfg)
    model = ConsistencyModel(cfg, None, seed=5)
    names = set(model.parameters())
    assert names == {
        "memory.image.input_bank.weight", "memory.image.input_bank.bias",
        "memory.image.output_bank.weight", "memory.image.output_bank.bias",
        "query_proj.image.weight", "query_proj.image.bias",
        "classifier.fc1.weight", "classifier.fc1.bias",
        "classifier.bn.gamma", "classifier.bn.beta",
        "classifier.fc2.weight", "classifier.fc2.bias",
    }
    out = model.forward(batch, train=False)

    # manual composition of the same path
    mb = batch.memories["image"]
    q_hat = mb.query @ model.query_projs["image"].weight.value + model.query_projs["image"].bias.value
    o, _, _ = model.memories["image"].forward(mb.items, q_hat, mb.mask)
    from claimcheck.nn import relu, sigmoid

    h = o @ model.fc1.weight.value + model.fc1.bias.value
    h, _ = relu(h)
    h = (h - model.cls_bn.running_mean) / np.sqrt(model.cls_bn.running_var + 1e-5)
    h = h * model.cls_bn.gamma.value + model.cls_bn.beta.value
    logit = (h @ model.fc2.weight.value + model.fc2.bias.value)[:, 0]
    assert np.allclose(out.p_f, sigmoid(logit), atol=1e-12)


def test_classifier_bias_shift():
    cfg = small_config()
    batch, *_, vocab = build_batch(cfg)
    model = ConsistencyModel(cfg, vocab, seed=0)
    for p in model.parameters().values():
        p.value[...] = 0.0
    model.fc2.bias.value[...] = 10.0
    out = model.forward(batch, train=False)
    assert np.allclose(out.p_f, 1.0 / (1.0 + math.exp(-10.0)))
    assert abs(out.p_f[0] - 0.99995) < 1e-4


@pytest.mark.parametrize("fusion", ["avg_pool", "max_pool", "multiply"])
def test_pooled_fusion_modes_run(fusion):
    cfg = small_config(fusion=fusion)
    batch, *_, vocab = build_batch(cfg)
    model = ConsistencyModel(cfg, vocab, seed=6)
    out = model.forward(batch, train=False)
    assert out.p_f.shape == (4,)
    assert np.all((out.p_f > 0) & (out.p_f < 1))


def test_multiply_fusion_with_all_ones_component_is_identity():
    from claimcheck.model.network import _pool_backward, _pool_forward

    rng = make_rng(8)
    a = rng.normal(size=(3, 5))
    ones = np.ones((3, 5))
    combined, cache = _pool_forward("multiply", [a, ones])
    assert np.array_equal(combined, a)
    g = rng.normal(size=(3, 5))
    da, dones = _pool_backward("multiply", g, cache)
    assert np.array_equal(da, g)
    assert np.array_equal(dones, g * a)


def test_unified_layout_forward():
    cfg = small_config(memory_layout="unified", use_domains=False, use_scenes=False,
                       use_labels_feature=True, use_ner_feature=True)
    batch, *_ = build_batch(cfg)
    model = ConsistencyModel(cfg, None, seed=7)
    out = model.forward(batch, train=False)
    assert out.p_f.shape == (4,)
    assert set(out.attention[0]) == {"unified"}


def test_token_lstm_path_forward():
    cfg = small_config(text_encoder="token_lstm_512")
    batch, *_, vocab = build_batch(cfg, with_tokens=True)
    model = ConsistencyModel(cfg, vocab, seed=8)
    out = model.forward(batch, train=False)
    assert out.p_f.shape == (4,)


def test_evidence_only_mode_ignores_queries():
    cfg = small_config(query_mode="learned_constant", use_clip=False)
    batch, recs, store, vocab = build_batch(cfg)
    model = ConsistencyModel(cfg, vocab, seed=9)
    out1 = model.forward(batch, train=False).p_f

    # changing every query embedding must not change anything
    for rec in recs:
        store.float_sections["image_obj"][rec.query_image_id] = (
            store.float_sections["image_obj"][rec.query_image_id] + 5.0
        )
        store.float_sections["sentence"][rec.query_caption_id] = (
            store.float_sections["sentence"][rec.query_caption_id] - 3.0
        )
        store.float_sections["image_scene"][rec.query_image_id] = (
            store.float_sections["image_scene"][rec.query_image_id] * 2.0
        )
    batch2 = assemble_batch(recs, store, vocab, cfg)
    out2 = model.forward(batch2, train=False).p_f
    assert np.array_equal(out1, out2)
