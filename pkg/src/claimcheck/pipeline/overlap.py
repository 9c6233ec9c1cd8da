"""Query-evidence overlap side features."""

from __future__ import annotations


def _fold(values: list[str]) -> set[str]:
    return {v.casefold().strip() for v in values if v and v.strip()}


def label_overlap_count(query_labels: list[str], evidence_labels: list[str]) -> int:
    """Size of the case-insensitive exact-string label intersection."""
    return len(_fold(query_labels) & _fold(evidence_labels))


def ner_overlap_flag(query_entities: list[str], evidence_entities: list[str]) -> int:
    """1 iff any named-entity string is shared (case-insensitive exact)."""
    return 1 if _fold(query_entities) & _fold(evidence_entities) else 0
