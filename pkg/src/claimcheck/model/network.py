"""The full consistency model: memories + joint image-text head + classifier.

Forward wiring (separate layout, concat fusion):

    per memory:  raw features -> input dropout -> [side features,
                 domain embedding (own dropout)] -> banks/attention -> o
    queries:     image/scene projected to the memory width, text used at
                 its native width (or LSTM-encoded on the token path)
    joint:       J = normalize(clip image) * normalize(clip text)
    fuse:        o_t = BN(o_image) ++ BN(o_scene) ++ BN(o_entity)
                 ++ BN(o_sentence) ++ BN(J)          (BN optional)
    classify:    FC(o_t -> hidden) -> ReLU -> BN -> FC(-> 1) -> sigmoid

The unified layout runs one memory over all evidence with the query
being concat(projected image query, caption embedding). Non-concat
fusion modes project textual outputs to the image memory width and
combine the memory outputs elementwise before concatenation with BN(J).

The backward pass is written by hand as the exact mirror of forward;
``parameters()`` exposes every trainable tensor for the optimizer, the
checkpoint writer, and the finite-difference verifier.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # batches imports the config; keep the cycle annotation-only
    from ..data.batches import BatchSet, MemoryBatch
from ..data.vocab import DomainVocabulary
from ..errors import ClaimCheckError, ConfigurationError
from ..nn.layers import (
    BatchNorm,
    EmbeddingTable,
    Linear,
    LstmEncoder,
    dropout,
    dropout_backward,
    relu,
    relu_backward,
    sigmoid,
)
from ..nn.tensor import Parameter, make_rng, uniform_init
from .config import CcnConfig
from .memory import AttentionMemory


class ZeroVectorError(ClaimCheckError):
    """A joint-embedding input had zero norm and cannot be normalized."""


def clip_joint(clip_image: np.ndarray, clip_text: np.ndarray) -> np.ndarray:
    """Unit-normalize each embedding, then elementwise product.

    Inputs are frozen backbone outputs, so this branch carries no
    gradient; it feeds the fusion/classifier as a fixed feature.
    """
    for name, arr in (("image", clip_image), ("text", clip_text)):
        norms = np.linalg.norm(arr, axis=-1)
        if np.any(norms == 0.0):
            raise ZeroVectorError(f"clip {name} embedding has zero norm")
    img = clip_image / np.linalg.norm(clip_image, axis=-1, keepdims=True)
    txt = clip_text / np.linalg.norm(clip_text, axis=-1, keepdims=True)
    return img * txt


@dataclass
class DropoutRates:
    input: float = 0.05
    domain: float = 0.25
    memory: float = 0.25

    @classmethod
    def off(cls) -> "DropoutRates":
        return cls(0.0, 0.0, 0.0)


@dataclass
class AttentionRecord:
    memory: str
    item_ids: list[str]
    probabilities: list[float]


@dataclass
class ForwardResult:
    p_f: np.ndarray                      # (b,) falsified probability
    attention: list[dict[str, AttentionRecord]]  # per example, per memory
    o_t: np.ndarray | None = None


class ConsistencyModel:
    def __init__(self, config: CcnConfig, vocab: DomainVocabulary | None = None, seed: int = 0):
        config.validate()
        if config.use_domains and vocab is None:
            raise ConfigurationError("domain embeddings enabled but no vocabulary given")
        self.config = config
        self.vocab = vocab
        self.seed = seed
        rng = make_rng(seed)

        c = config
        self.memories: dict[str, AttentionMemory] = {}
        self.query_projs: dict[str, Linear] = {}
        self.query_consts: dict[str, Parameter] = {}

        if c.memory_layout == "separate":
            memory_specs = [(m, c.item_dim(m), c.mem_dim(m)) for m in c.enabled_memories()]
        else:
            memory_specs = [("unified", c.unified_item_dim(), c.unified_query_dim())]
        for name, in_dim, mem_dim in memory_specs:
            self.memories[name] = AttentionMemory(f"memory.{name}", in_dim, mem_dim, rng)
            if c.query_mode == "learned_constant":
                self.query_consts[name] = Parameter(
                    uniform_init(rng, mem_dim, (mem_dim,)), f"query_const.{name}"
                )
        if c.query_mode == "normal":
            if c.memory_layout == "separate":
                for name in ("image", "scene"):
                    if name in self.memories:
                        self.query_projs[name] = Linear(
                            c.image_feature_dim, c.image_mem_dim, rng, f"query_proj.{name}"
                        )
            elif c.use_images or c.use_scenes:
                self.query_projs["unified"] = Linear(
                    c.image_feature_dim, c.image_mem_dim, rng, "query_proj.unified"
                )

        self.domain_table: EmbeddingTable | None = None
        if c.use_domains:
            self.domain_table = EmbeddingTable(vocab.size, c.domain_dim, rng, "domain")

        self.lstm: LstmEncoder | None = None
        if c.text_encoder == "token_lstm_512":
            self.lstm = LstmEncoder(c.token_dim, c.lstm_hidden, rng, "lstm")

        # fusion
        self.fuse_projs: dict[str, Linear] = {}
        if c.fusion != "concat" and c.memory_layout == "separate":
            for name in ("entity", "sentence"):
                if name in self.memories:
                    self.fuse_projs[name] = Linear(
                        c.text_dim, c.image_mem_dim, rng, f"fuse_proj.{name}"
                    )
        self.fuse_bns: dict[str, BatchNorm] = {}
        if c.use_bn:
            for name, dim in self._fuse_components():
                self.fuse_bns[name] = BatchNorm(dim, f"fuse_bn.{name}")

        total = sum(dim for _, dim in self._fuse_components())
        self.fc1 = Linear(total, c.classifier_hidden, rng, "classifier.fc1")
        self.cls_bn = BatchNorm(c.classifier_hidden, "classifier.bn")
        self.fc2 = Linear(c.classifier_hidden, 1, rng, "classifier.fc2")

    # -- geometry -----------------------------------------------------------

    def _fuse_components(self) -> list[tuple[str, int]]:
        """(name, width) of each vector entering the final concatenation."""
        c = self.config
        parts: list[tuple[str, int]] = []
        if c.fusion == "concat":
            for name, mem in self.memories.items():
                parts.append((name, mem.mem_dim))
        elif self.memories:
            if c.memory_layout == "separate":
                parts.append(("pooled", c.image_mem_dim))
            else:
                parts.append(("pooled", next(iter(self.memories.values())).mem_dim))
        if c.use_clip:
            parts.append(("clip", c.clip_dim))
        return parts

    # -- parameters -----------------------------------------------------------

    def parameters(self) -> dict[str, Parameter]:
        out: dict[str, Parameter] = {}
        for mem in self.memories.values():
            out.update(mem.parameters())
        for lin in self.query_projs.values():
            out.update(lin.parameters())
        for p in self.query_consts.values():
            out[p.name] = p
        if self.domain_table is not None:
            out.update(self.domain_table.parameters())
        if self.lstm is not None:
            out.update(self.lstm.parameters())
        for lin in self.fuse_projs.values():
            out.update(lin.parameters())
        for bn in self.fuse_bns.values():
            out.update(bn.parameters())
        out.update(self.fc1.parameters())
        out.update(self.cls_bn.parameters())
        out.update(self.fc2.parameters())
        return out

    def buffers(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for bn in list(self.fuse_bns.values()) + [self.cls_bn]:
            out.update(bn.buffers())
        return out

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.zero_grad()

    def reset_tapes(self) -> None:
        for mem in self.memories.values():
            mem.reset_tape()
        for lin in list(self.query_projs.values()) + list(self.fuse_projs.values()):
            lin.reset_tape()
        for bn in list(self.fuse_bns.values()) + [self.cls_bn]:
            bn.reset_tape()
        if self.domain_table is not None:
            self.domain_table.reset_tape()
        if self.lstm is not None:
            self.lstm.reset_tape()
        self.fc1.reset_tape()
        self.fc2.reset_tape()

    # -- forward ------------------------------------------------------------

    def forward(
        self,
        batch: BatchSet,
        train: bool = False,
        rng: np.random.Generator | None = None,
        rates: DropoutRates | None = None,
    ) -> ForwardResult:
        self.reset_tapes()
        rates = rates or (DropoutRates() if train else DropoutRates.off())
        if train and rng is None:
            rng = make_rng(0)
        ctx: dict = {"memories": {}, "order": []}
        self._ctx = ctx

        outputs: dict[str, np.ndarray] = {}
        attention_p: dict[str, tuple[np.ndarray, list[list[str]], np.ndarray]] = {}
        for name, mem in self.memories.items():
            mb = batch.memories[name]
            o, p, mctx = self._memory_forward(name, mem, mb, train, rng, rates)
            outputs[name] = o
            attention_p[name] = (p, mb.item_ids, mb.mask)
            ctx["order"].append(name)

        j_clip = None
        if self.config.use_clip:
            j_clip = clip_joint(batch.clip_image, batch.clip_text)

        o_t = self._fuse_forward(outputs, j_clip, train, ctx)

        h = self.fc1.forward(o_t)
        h_relu, relu_cache = relu(h)
        h_bn = self.cls_bn.forward(h_relu, train)
        logit = self.fc2.forward(h_bn)[:, 0]
        p_f = sigmoid(logit)
        ctx["classifier"] = (relu_cache, p_f)

        attention = _attention_records(batch, attention_p)
        return ForwardResult(p_f=p_f, attention=attention, o_t=o_t)

    def _memory_forward(self, name, mem, mb: MemoryBatch, train, rng, rates: DropoutRates):
        c = self.config
        mctx: dict = {"name": name}

        # queries first, then items, so backward can mirror LSTM tape order
        q_hat, mctx["query"] = self._query_forward(name, mb, train, rng, rates)
        base, mctx["items_base"] = self._item_base_forward(name, mb, train, rng, rates)

        parts = [base]
        if mb.side.shape[2]:
            parts.append(mb.side)
        mctx["has_domain"] = mb.domain_idx is not None and self.domain_table is not None
        mctx["domain_drop"] = None
        if mctx["has_domain"]:
            emb = self.domain_table.forward(mb.domain_idx)
            emb, mctx["domain_drop"] = dropout(emb, rates.domain, train, rng)
            parts.append(emb)
        mctx["split"] = [p.shape[2] for p in parts]
        items_full = np.concatenate(parts, axis=2) if len(parts) > 1 else parts[0]

        o, p, attn_ctx = mem.forward(items_full, q_hat, mb.mask, train, rng, rates.memory)
        mctx["attn"] = attn_ctx
        self._ctx["memories"][name] = mctx
        return o, p, mctx

    def _query_forward(self, name, mb: MemoryBatch, train, rng, rates):
        c = self.config
        if c.query_mode == "learned_constant":
            const = self.query_consts[name]
            b = mb.mask.shape[0]
            return np.tile(const.value, (b, 1)), ("const", name, b)
        if name == "unified":
            qctx = {"kind": "unified"}
            pieces = []
            if mb.unified_image_query is not None and "unified" in self.query_projs:
                qi, drop_i = dropout(mb.unified_image_query, rates.input, train, rng)
                pieces.append(self.query_projs["unified"].forward(qi))
                qctx["img_drop"] = drop_i
            if mb.unified_text_query is not None:
                qt, drop_t = dropout(mb.unified_text_query, rates.input, train, rng)
                pieces.append(qt)
                qctx["txt_drop"] = drop_t
                qctx["txt_dim"] = qt.shape[1]
            return np.concatenate(pieces, axis=1), qctx
        if name in ("image", "scene"):
            q, drop = dropout(mb.query, rates.input, train, rng)
            return self.query_projs[name].forward(q), ("proj", name, drop)
        if mb.query_tokens is not None:  # token path
            encs, caches = [], []
            for toks in mb.query_tokens:
                t, dcache = dropout(toks, rates.input, train, rng)
                encs.append(self.lstm.forward(t))
                caches.append(dcache)
            return np.stack(encs), ("tokens", caches)
        q, drop = dropout(mb.query, rates.input, train, rng)
        return q, ("native", drop)

    def _item_base_forward(self, name, mb: MemoryBatch, train, rng, rates):
        if mb.item_tokens is not None:  # token path: encode each sequence
            b, j_max = mb.mask.shape
            base = np.zeros((b, j_max, self.config.text_dim))
            caches = []
            for i, row in enumerate(mb.item_tokens):
                row_caches = []
                for j, toks in enumerate(row):
                    t, dcache = dropout(toks, rates.input, train, rng)
                    base[i, j] = self.lstm.forward(t)
                    row_caches.append(dcache)
                caches.append(row_caches)
            return base, ("tokens", caches)
        out, drop = dropout(mb.items, rates.input, train, rng)
        return out, ("dense", drop)

    def _fuse_forward(self, outputs, j_clip, train, ctx):
        c = self.config
        segs = []
        fctx: dict = {"mode": c.fusion, "widths": []}
        if c.fusion == "concat":
            for name in self.memories:
                o = outputs[name]
                if c.use_bn:
                    o = self.fuse_bns[name].forward(o, train)
                segs.append(o)
                fctx["widths"].append((name, o.shape[1]))
        elif self.memories:
            parts, pctx = [], []
            for name in self.memories:
                o = outputs[name]
                if name in self.fuse_projs:
                    o = self.fuse_projs[name].forward(o)
                parts.append(o)
                pctx.append(name)
            combined, pool_cache = _pool_forward(c.fusion, parts)
            fctx["pool"] = (pctx, pool_cache)
            if c.use_bn:
                combined = self.fuse_bns["pooled"].forward(combined, train)
            segs.append(combined)
            fctx["widths"].append(("pooled", combined.shape[1]))
        if j_clip is not None:
            jc = self.fuse_bns["clip"].forward(j_clip, train) if c.use_bn else j_clip
            segs.append(jc)
            fctx["widths"].append(("clip", jc.shape[1]))
        ctx["fuse"] = fctx
        return np.concatenate(segs, axis=1)

    # -- backward ----------------------------------------------------------

    def backward(self, d_pf: np.ndarray) -> None:
        """Accumulate parameter gradients given dLoss/dp_f."""
        ctx = self._ctx
        relu_cache, p_f = ctx["classifier"]
        dlogit = d_pf * p_f * (1.0 - p_f)
        dh_bn = self.fc2.backward(dlogit[:, None])
        dh_relu = self.cls_bn.backward(dh_bn)
        dh = relu_backward(dh_relu, relu_cache)
        d_ot = self.fc1.backward(dh)

        d_outputs = self._fuse_backward(d_ot, ctx["fuse"])

        for name in reversed(ctx["order"]):
            self._memory_backward(name, d_outputs.get(name), ctx["memories"][name])

    def _fuse_backward(self, d_ot, fctx) -> dict[str, np.ndarray]:
        c = self.config
        pieces: dict[str, np.ndarray] = {}
        offset = 0
        for name, width in fctx["widths"]:
            pieces[name] = d_ot[:, offset:offset + width]
            offset += width
        # clip segment: frozen input, nothing to propagate (BN params still learn)
        if "clip" in pieces and c.use_bn:
            self.fuse_bns["clip"].backward(pieces["clip"])
        d_outputs: dict[str, np.ndarray] = {}
        if c.fusion == "concat":
            for name in reversed(list(self.memories)):
                g = pieces[name]
                if c.use_bn:
                    g = self.fuse_bns[name].backward(g)
                d_outputs[name] = g
        elif self.memories:
            g = pieces["pooled"]
            if c.use_bn:
                g = self.fuse_bns["pooled"].backward(g)
            names, pool_cache = fctx["pool"]
            part_grads = _pool_backward(fctx["mode"], g, pool_cache)
            for name, pg in zip(reversed(names), reversed(part_grads)):
                if name in self.fuse_projs:
                    pg = self.fuse_projs[name].backward(pg)
                d_outputs[name] = pg
        return d_outputs

    def _memory_backward(self, name, do, mctx) -> None:
        mem = self.memories[name]
        d_items_full, dq = mem.backward(do, mctx["attn"])

        splits = np.cumsum(mctx["split"])[:-1]
        chunks = np.split(d_items_full, splits, axis=2) if len(mctx["split"]) > 1 else [d_items_full]
        if mctx["has_domain"]:
            demb = dropout_backward(chunks[-1], mctx["domain_drop"])
            self.domain_table.backward(demb)
            chunks = chunks[:-1]
        d_base = chunks[0]  # the side-feature chunk, if any, is a constant

        # items backward (reverse of forward order), then query
        self._item_base_backward(d_base, mctx["items_base"])
        self._query_backward(name, dq, mctx["query"])

    def _item_base_backward(self, d_base, cache) -> None:
        kind = cache[0]
        if kind == "tokens":
            _, caches = cache
            for i in range(len(caches) - 1, -1, -1):
                row = caches[i]
                for j in range(len(row) - 1, -1, -1):
                    dtoks = self.lstm.backward(d_base[i, j])
                    dropout_backward(dtoks, row[j])  # inputs: gradient ends here
        # dense: inputs are leaves; nothing to accumulate

    def _query_backward(self, name, dq, qctx) -> None:
        if isinstance(qctx, tuple) and qctx[0] == "const":
            self.query_consts[name].grad += dq.sum(axis=0)
            return
        if isinstance(qctx, dict) and qctx.get("kind") == "unified":
            offset = dq.shape[1]
            if "txt_drop" in qctx:
                offset -= qctx["txt_dim"]
            if "img_drop" in qctx:
                self.query_projs["unified"].backward(dq[:, :offset])
            return
        kind = qctx[0]
        if kind == "proj":
            _, name, _drop = qctx
            self.query_projs[name].backward(dq)
        elif kind == "tokens":
            _, caches = qctx
            for i in range(len(caches) - 1, -1, -1):
                self.lstm.backward(dq[i])
        # native: query is a leaf input


def _pool_forward(mode: str, parts: list[np.ndarray]):
    stack = np.stack(parts)  # (k, b, d)
    if mode == "avg_pool":
        return stack.mean(axis=0), len(parts)
    if mode == "max_pool":
        arg = np.argmax(stack, axis=0)  # ties go to the lowest index
        return np.max(stack, axis=0), (arg, len(parts))
    if mode == "multiply":
        return np.prod(stack, axis=0), stack
    raise ConfigurationError(f"unknown fusion mode {mode!r}")


def _pool_backward(mode: str, g: np.ndarray, cache) -> list[np.ndarray]:
    if mode == "avg_pool":
        k = cache
        return [g / k for _ in range(k)]
    if mode == "max_pool":
        arg, k = cache
        return [g * (arg == i) for i in range(k)]
    if mode == "multiply":
        stack = cache
        k = stack.shape[0]
        grads = []
        for i in range(k):
            others = np.ones_like(g)
            for j in range(k):
                if j != i:
                    others = others * stack[j]
            grads.append(g * others)
        return grads
    raise ConfigurationError(f"unknown fusion mode {mode!r}")


def _attention_records(batch: BatchSet, attention_p) -> list[dict[str, AttentionRecord]]:
    out: list[dict[str, AttentionRecord]] = [dict() for _ in batch.example_ids]
    for name, (p, ids, mask) in attention_p.items():
        for i in range(p.shape[0]):
            valid = mask[i]
            out[i][name] = AttentionRecord(
                memory=name,
                item_ids=list(ids[i]),
                probabilities=[float(v) for v in p[i][valid]],
            )
    return out


class ClipHead:
    """Linear classifier over the joint image-text embedding."""

    def __init__(self, joint_dim: int, seed: int = 0):
        rng = make_rng(seed)
        self.linear = Linear(joint_dim, 1, rng, "clip_head")

    def forward(self, j_clip: np.ndarray):
        self.linear.reset_tape()
        logit = self.linear.forward(j_clip)[:, 0]
        p = sigmoid(logit)
        self._p = p
        return p

    def backward(self, d_p: np.ndarray) -> None:
        dlogit = d_p * self._p * (1.0 - self._p)
        self.linear.backward(dlogit[:, None])

    def parameters(self) -> dict[str, Parameter]:
        return self.linear.parameters()
