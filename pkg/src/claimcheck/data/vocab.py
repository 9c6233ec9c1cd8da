"""Domain vocabulary: evidence source domains that earn a learned embedding.

Only domains seen at least three times across the training split's
evidence (visual and sentence) get an index; everything else maps to UNK
(index 0). Index order is lexicographic, so two builds over the same
corpus are identical. The 20-wide embedding table itself is created by
the model build (it is a trainable parameter tied to a seed), not here.
"""

from __future__ import annotations

import json
from collections import Counter
from pathlib import Path

from .records import ExampleRecord

DOMAIN_EMBED_DIM = 20
MIN_OCCURRENCES = 3
UNK_INDEX = 0


class DomainVocabulary:
    def __init__(self, domains: list[str]):
        self.domains = list(domains)  # index i+1 belongs to domains[i]
        self.index = {d: i + 1 for i, d in enumerate(self.domains)}

    @property
    def size(self) -> int:
        """Table rows: UNK + the indexed domains."""
        return len(self.domains) + 1

    def lookup(self, domain: str) -> int:
        return self.index.get(domain.lower(), UNK_INDEX)

    def save(self, path: str | Path) -> None:
        payload = {"format": "domain-vocab-v1", "embed_dim": DOMAIN_EMBED_DIM,
                   "domains": self.domains}
        Path(path).write_text(json.dumps(payload, indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "DomainVocabulary":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(payload["domains"])

    def __eq__(self, other) -> bool:
        return isinstance(other, DomainVocabulary) and self.domains == other.domains


def build_domain_vocab(train_examples: list[ExampleRecord]) -> DomainVocabulary:
    """Count evidence domains over the training split and keep the frequent ones."""
    counts: Counter[str] = Counter()
    for rec in train_examples:
        for meta in rec.evidence_images:
            if meta.domain:
                counts[meta.domain.lower()] += 1
        for sent in rec.sentences:
            if sent.domain:
                counts[sent.domain.lower()] += 1
    kept = sorted(d for d, c in counts.items() if c >= MIN_OCCURRENCES)
    return DomainVocabulary(kept)
