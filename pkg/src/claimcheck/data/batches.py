"""Batch assembly: records + store -> padded per-memory arrays.

Each enabled memory gets a :class:`MemoryBatch`: a query block, evidence
items padded to the batch's max item count, scalar side features
(label-overlap count / entity-overlap flag), domain indices when that
memory carries domain embeddings, and a validity mask. Padded rows are
all zeros and masked out; an example with no items in a memory simply has
an all-zero mask row.

The memory bank input width is ``base + scalar side + domain embedding``;
the domain embedding is looked up inside the model (the table is
trainable), so here it travels as an index. ``MemoryBatch.item_dim``
reports the full width the bank will see.

On the token-LSTM path the base features of text memories are T x 768
token matrices encoded inside the model; the batch then carries ragged
token lists instead of a dense item block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DatasetValidationError
from ..model.config import CcnConfig
from ..pipeline.overlap import label_overlap_count, ner_overlap_flag
from .records import ExampleRecord, text_id
from .store import EmbeddingStore
from .vocab import DomainVocabulary


@dataclass
class MemoryBatch:
    name: str
    query: np.ndarray | None            # (b, q_dim); None on the token path
    items: np.ndarray | None            # (b, J, base); None on the token path
    side: np.ndarray                    # (b, J, n_side) scalar side features
    mask: np.ndarray                    # (b, J) bool
    domain_idx: np.ndarray | None = None    # (b, J) int64, 0 (UNK) where padded
    query_tokens: list[np.ndarray] | None = None       # b ragged (T, 768)
    item_tokens: list[list[np.ndarray]] | None = None  # b x J_i ragged
    domain_dim: int = 0
    base_dim: int = 0
    item_ids: list[list[str]] = field(default_factory=list)
    # unified layout only: the raw query halves to concatenate in the model
    unified_image_query: np.ndarray | None = None
    unified_text_query: np.ndarray | None = None

    @property
    def item_dim(self) -> int:
        """Width of one item as the memory bank sees it."""
        return self.base_dim + self.side.shape[2] + self.domain_dim

    @property
    def j_max(self) -> int:
        return self.mask.shape[1]


@dataclass
class BatchSet:
    memories: dict[str, MemoryBatch]
    clip_image: np.ndarray | None       # (b, clip_dim)
    clip_text: np.ndarray | None
    labels: np.ndarray                  # (b,) 1.0 = falsified
    example_ids: list[str]

    @property
    def size(self) -> int:
        return len(self.example_ids)


def _require(store: EmbeddingStore, section: str, key: str, rec_id: str):
    if not store.has(section, key):
        raise DatasetValidationError(
            f"example {rec_id!r}: store is missing {section}[{key!r}]"
        )


def _lookup_vec(store, section, key, rec_id) -> np.ndarray:
    _require(store, section, key, rec_id)
    return store.vector(section, key)


def _items_of(rec: ExampleRecord, memory: str):
    """(store section, [(key, display id, domain, side scalar source)], ...)"""
    if memory in ("image", "scene"):
        section = "image_obj" if memory == "image" else "image_scene"
        return [(m.image_id, m.image_id, m.domain) for m in rec.evidence_images], section
    if memory == "entity":
        return [(text_id(e), e, "") for e in rec.entities], "sentence"
    if memory == "sentence":
        return [(text_id(s.text), s.text, s.domain) for s in rec.sentences], "sentence"
    raise ValueError(memory)


def assemble_batch(
    examples: list[ExampleRecord],
    store: EmbeddingStore,
    vocab: DomainVocabulary | None,
    config: CcnConfig,
) -> BatchSet:
    config.validate()
    if config.use_domains and vocab is None:
        raise DatasetValidationError("domain features enabled but no vocabulary given")
    b = len(examples)
    token_path = config.text_encoder == "token_lstm_512"

    memories: dict[str, MemoryBatch] = {}
    for name in config.enabled_memories():
        memories[name] = _assemble_memory(name, examples, store, vocab, config, token_path)
    if config.memory_layout == "unified":
        memories = {"unified": _unify(memories, config)}

    clip_image = clip_text = None
    if config.use_clip:
        clip_image = np.stack([
            _lookup_vec(store, "clip_image", r.query_image_id, r.id) for r in examples
        ]) if b else np.zeros((0, config.clip_dim))
        clip_text = np.stack([
            _lookup_vec(store, "clip_text", r.query_caption_id, r.id) for r in examples
        ]) if b else np.zeros((0, config.clip_dim))

    labels = np.array([1.0 if r.label == "falsified" else 0.0 for r in examples])
    return BatchSet(
        memories=memories,
        clip_image=clip_image,
        clip_text=clip_text,
        labels=labels,
        example_ids=[r.id for r in examples],
    )


def _assemble_memory(name, examples, store, vocab, config, token_path) -> MemoryBatch:
    b = len(examples)
    j_max = max((len(_items_of(r, name)[0]) for r in examples), default=0)
    base = config.base_width(name)
    text_memory = name in ("entity", "sentence")
    ragged = token_path and text_memory

    n_side = 0
    if name == "image" and config.use_labels_feature:
        n_side = 1
    if text_memory and config.use_ner_feature:
        n_side = 1
    has_domain = config.memory_has_domain(name)

    items = None if ragged else np.zeros((b, j_max, base))
    side = np.zeros((b, j_max, n_side))
    mask = np.zeros((b, j_max), dtype=bool)
    dom = np.zeros((b, j_max), dtype=np.int64) if has_domain else None
    item_tokens: list[list[np.ndarray]] | None = [] if ragged else None
    query_tokens: list[np.ndarray] | None = [] if ragged else None
    query = None if ragged else np.zeros((b, base if text_memory else config.image_feature_dim))
    ids: list[list[str]] = []

    for i, rec in enumerate(examples):
        entries, section = _items_of(rec, name)
        ids.append([display for _, display, _ in entries])

        if name in ("image", "scene"):
            query[i] = _lookup_vec(
                store, "image_obj" if name == "image" else "image_scene",
                rec.query_image_id, rec.id,
            )
        elif ragged:
            _require(store, "tokens", rec.query_caption_id, rec.id)
            query_tokens.append(store.tokens(rec.query_caption_id))
        else:
            query[i] = _lookup_vec(store, "sentence", rec.query_caption_id, rec.id)

        if config.use_labels_feature and name == "image":
            _require(store, "image_labels", rec.query_image_id, rec.id)
            q_labels = store.strings("image_labels", rec.query_image_id)
        if text_memory and config.use_ner_feature:
            _require(store, "caption_entities", rec.query_caption_id, rec.id)
            q_entities = store.strings("caption_entities", rec.query_caption_id)

        row_tokens: list[np.ndarray] = []
        for j, (key, display, domain) in enumerate(entries):
            mask[i, j] = True
            if ragged:
                _require(store, "tokens", key, rec.id)
                row_tokens.append(store.tokens(key))
            else:
                items[i, j] = _lookup_vec(store, section, key, rec.id)
            if name == "image" and config.use_labels_feature:
                _require(store, "image_labels", key, rec.id)
                side[i, j, 0] = label_overlap_count(
                    q_labels, store.strings("image_labels", key)
                )
            elif text_memory and config.use_ner_feature:
                if name == "entity":
                    ev_entities = [display]  # the entity string is its own entity
                else:
                    _require(store, "caption_entities", key, rec.id)
                    ev_entities = store.strings("caption_entities", key)
                side[i, j, 0] = ner_overlap_flag(q_entities, ev_entities)
            if has_domain:
                dom[i, j] = vocab.lookup(domain) if domain else 0
        if ragged:
            item_tokens.append(row_tokens)

    return MemoryBatch(
        name=name,
        query=query,
        items=items,
        side=side,
        mask=mask,
        domain_idx=dom,
        query_tokens=query_tokens,
        item_tokens=item_tokens,
        domain_dim=config.domain_dim if has_domain else 0,
        base_dim=base,
        item_ids=ids,
    )


def _unify(memories: dict[str, MemoryBatch], config: CcnConfig) -> MemoryBatch:
    """Fold per-type batches into one memory over all evidence items.

    Items are zero-padded to the widest base; side-feature widths already
    agree (config validation). The query becomes the concatenation blueprint
    (image query block + caption block) resolved inside the model, so here
    we pass both halves through untouched in batch order.
    """
    parts = [memories[m] for m in ("image", "scene", "entity", "sentence") if m in memories]
    b = parts[0].mask.shape[0]
    base = config.unified_base_width()
    n_side = parts[0].side.shape[2]
    token_parts = [p for p in parts if p.item_tokens is not None]
    if token_parts:
        raise NotImplementedError(
            "unified layout is defined for vector text features; encode tokens "
            "with the sentence encoder or use separate memories"
        )
    j_max = sum(p.j_max for p in parts)
    items = np.zeros((b, j_max, base))
    side = np.zeros((b, j_max, n_side))
    mask = np.zeros((b, j_max), dtype=bool)
    has_domain = any(p.domain_idx is not None for p in parts)
    dom = np.zeros((b, j_max), dtype=np.int64) if has_domain else None
    ids = [[] for _ in range(b)]
    for i in range(b):
        col = 0
        for p in parts:
            for j in range(p.j_max):
                if not p.mask[i, j]:
                    continue
                items[i, col, : p.base_dim] = p.items[i, j]
                side[i, col] = p.side[i, j]
                if dom is not None and p.domain_idx is not None:
                    dom[i, col] = p.domain_idx[i, j]
                mask[i, col] = True
                col += 1
            ids[i].extend(p.item_ids[i])

    image_query = next((p.query for p in parts if p.name in ("image", "scene")), None)
    text_query = next((p.query for p in parts if p.name in ("entity", "sentence")), None)
    return MemoryBatch(
        name="unified",
        query=None,
        items=items,
        side=side,
        mask=mask,
        domain_idx=dom,
        domain_dim=config.domain_dim if has_domain else 0,
        base_dim=base,
        item_ids=ids,
        unified_image_query=image_query,
        unified_text_query=text_query,
    )
