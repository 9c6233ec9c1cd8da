"""Training-bias filter for pristine examples.

Search can hand back the claim's own article. Left in, a model can
shortcut on its presence or absence instead of reasoning. For pristine
examples only, an evidence item is dropped when it BOTH matches the query
(perceptual-hash match for images, normalized exact match for sentences)
AND comes from the query's own website. Falsified examples pass through
untouched, and the operation is idempotent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

from ..data.records import ExampleRecord
from .phash import DEFAULT_THRESHOLD, PerceptualHash, hash_match
from .textnorm import normalize_caption


@dataclass
class FilterStats:
    images_dropped: int = 0
    sentences_dropped: int = 0

    def merged(self, other: "FilterStats") -> "FilterStats":
        return FilterStats(
            self.images_dropped + other.images_dropped,
            self.sentences_dropped + other.sentences_dropped,
        )


def filter_pristine_evidence(
    example: ExampleRecord,
    query_domain: str,
    query_hash: PerceptualHash | None,
    image_hashes: Mapping[str, PerceptualHash],
    threshold: int = DEFAULT_THRESHOLD,
) -> tuple[ExampleRecord, FilterStats]:
    """Drop self-matching same-site evidence from a pristine example.

    ``image_hashes`` maps evidence image ids to their perceptual hashes
    (from the ingestion sidecar); images without a known hash are kept.
    """
    stats = FilterStats()
    if example.label != "pristine":
        return example, stats

    query_domain = query_domain.lower()

    kept_images = []
    for meta in example.evidence_images:
        h = image_hashes.get(meta.image_id)
        same_image = (
            query_hash is not None and h is not None
            and hash_match(query_hash, h, threshold)
        )
        if same_image and meta.domain == query_domain:
            stats.images_dropped += 1
        else:
            kept_images.append(meta)

    query_norm = normalize_caption(example.query_caption)
    kept_sentences = []
    for sent in example.sentences:
        if normalize_caption(sent.text) == query_norm and sent.domain == query_domain:
            stats.sentences_dropped += 1
        else:
            kept_sentences.append(sent)

    filtered = replace(example, evidence_images=kept_images, sentences=kept_sentences)
    return filtered, stats
