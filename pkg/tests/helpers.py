"""Shared builders for reduced-width records, stores, and batches."""

import numpy as np

from claimcheck.data import (
    EmbeddingStore,
    EvidenceImageMeta,
    ExampleRecord,
    SentenceEvidence,
    text_id,
)
from claimcheck.model import CcnConfig

SMALL_DIMS = dict(
    image_feature_dim=8, image_mem_dim=4, sentence_dim=6, token_dim=5,
    lstm_hidden=3, clip_dim=4, domain_dim=2, classifier_hidden=8,
)


def small_config(**kw):
    return CcnConfig(**{**SMALL_DIMS, **kw})


def store_for(records, cfg, seed=0, with_tokens=False, max_token_len=4):
    rng = np.random.default_rng(seed)
    s = EmbeddingStore(dims={
        "image_obj": cfg.image_feature_dim,
        "image_scene": cfg.image_feature_dim,
        "sentence": cfg.sentence_dim,
        "tokens": cfg.token_dim,
        "clip_image": cfg.clip_dim,
        "clip_text": cfg.clip_dim,
    })
    for rec in records:
        for iid in [rec.query_image_id] + rec.evidence_image_ids:
            if not s.has("image_obj", iid):
                s.add_vector("image_obj", iid, rng.normal(size=cfg.image_feature_dim))
                s.add_vector("image_scene", iid, rng.normal(size=cfg.image_feature_dim))
                s.add_strings("image_labels", iid, ["sky", "tree", iid])
        texts = [rec.query_caption] + [x.text for x in rec.sentences] + rec.entities
        for t in texts:
            tid = text_id(t)
            if not s.has("sentence", tid):
                s.add_vector("sentence", tid, rng.normal(size=cfg.sentence_dim))
                s.add_strings("caption_entities", tid, ["Alice", t.split()[0]])
                if with_tokens:
                    tlen = int(rng.integers(1, max_token_len + 1))
                    s.add_tokens(tid, rng.normal(size=(tlen, cfg.token_dim)))
        qv = rng.normal(size=cfg.clip_dim)
        s.add_vector("clip_image", rec.query_image_id, qv / np.linalg.norm(qv))
        tv = rng.normal(size=cfg.clip_dim)
        s.add_vector("clip_text", text_id(rec.query_caption), tv / np.linalg.norm(tv))
    return s


def record(i, n_imgs=2, n_sents=2, n_ents=1, label="pristine", split="train"):
    return ExampleRecord(
        id=f"e{i}",
        query_image_id=f"q{i}",
        query_caption=f"caption number {i}",
        evidence_images=[
            EvidenceImageMeta(f"ev{i}_{k}", "news.example.com") for k in range(n_imgs)
        ],
        entities=[f"Entity {i}-{k}" for k in range(n_ents)],
        sentences=[
            SentenceEvidence(
                f"sentence {i}-{k}", "caption", "other.org", f"https://other.org/{k}"
            )
            for k in range(n_sents)
        ],
        label=label,
        split=split,
    )


def permuted_record(rec, perm):
    return ExampleRecord(
        id=rec.id,
        query_image_id=rec.query_image_id,
        query_caption=rec.query_caption,
        evidence_images=[rec.evidence_images[p] for p in perm],
        entities=rec.entities,
        sentences=[rec.sentences[p] for p in perm],
        label=rec.label,
        split=rec.split,
    )
