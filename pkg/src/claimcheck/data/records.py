"""Dataset records and the JSON-lines dataset file.

One claim per line. A record bundles the query image/caption pair with the
evidence retrieved for it: up to 10 evidence images (each with its search
domain), entity strings, and sentence evidence (captions and page titles
with provenance). Text items have no ids of their own; embeddings are
keyed by :func:`text_id`, a content hash, so identical strings share one
embedding.

Unknown JSON fields are rejected, as are duplicate record ids. The
real-scale corpus this schema was sized for has 71,072 / 7,024 / 7,264
train/val/test records (``REFERENCE_SPLIT_SIZES``); desk-scale files are
validated by the same rules.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..errors import DatasetValidationError

LABELS = ("pristine", "falsified")
SPLITS = ("train", "val", "test")
SENTENCE_KINDS = ("caption", "title")
IMAGE_MATCH_MODES = ("url", "perceptual_hash", "none")
IMAGE_SOURCES = ("inverse_search_page", "direct_image_search")

MAX_EVIDENCE_IMAGES = 10  # direct image search cap
MAX_SENTENCE_PAGES = 20  # inverse search result cap

REFERENCE_SPLIT_SIZES = {"train": 71072, "val": 7024, "test": 7264}


def text_id(text: str) -> str:
    """Content-addressed id for captions, sentences, and entity strings."""
    return "t:" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass
class SentenceEvidence:
    text: str
    kind: str = "caption"
    domain: str = ""
    source_page_url: str = ""
    image_matched_by: str = "none"

    def validate(self, rec_id: str, idx: int) -> None:
        where = f"record {rec_id!r} sentences[{idx}]"
        if not self.text.strip():
            raise DatasetValidationError(f"{where}: field 'text' is empty")
        if self.kind not in SENTENCE_KINDS:
            raise DatasetValidationError(f"{where}: field 'kind' invalid: {self.kind!r}")
        if self.domain != self.domain.lower():
            raise DatasetValidationError(f"{where}: field 'domain' must be lowercase")
        if self.image_matched_by not in IMAGE_MATCH_MODES:
            raise DatasetValidationError(
                f"{where}: field 'image_matched_by' invalid: {self.image_matched_by!r}"
            )


@dataclass
class EvidenceImageMeta:
    image_id: str
    domain: str = ""
    source: str = "direct_image_search"

    def validate(self, rec_id: str, idx: int) -> None:
        where = f"record {rec_id!r} evidence_images[{idx}]"
        if not self.image_id:
            raise DatasetValidationError(f"{where}: field 'image_id' is empty")
        if self.domain != self.domain.lower():
            raise DatasetValidationError(f"{where}: field 'domain' must be lowercase")
        if self.source not in IMAGE_SOURCES:
            raise DatasetValidationError(f"{where}: field 'source' invalid: {self.source!r}")


@dataclass
class ExampleRecord:
    id: str
    query_image_id: str
    query_caption: str
    evidence_images: list[EvidenceImageMeta] = field(default_factory=list)
    entities: list[str] = field(default_factory=list)
    sentences: list[SentenceEvidence] = field(default_factory=list)
    label: str = "pristine"
    split: str = "train"

    @property
    def evidence_image_ids(self) -> list[str]:
        return [m.image_id for m in self.evidence_images]

    @property
    def query_caption_id(self) -> str:
        return text_id(self.query_caption)

    def validate(self) -> None:
        def bad(fieldname: str, msg: str):
            return DatasetValidationError(f"record {self.id!r}: field {fieldname!r} {msg}")

        if not self.id:
            raise DatasetValidationError("record with empty 'id'")
        if not self.query_image_id:
            raise bad("query_image_id", "is empty")
        if not isinstance(self.query_caption, str) or not self.query_caption.strip():
            raise bad("query_caption", "is empty")
        if self.split not in SPLITS:
            raise bad("split", f"must be one of {SPLITS}, got {self.split!r}")
        if self.label not in LABELS:
            raise bad("label", f"must be one of {LABELS}, got {self.label!r}")
        if len(self.evidence_images) > MAX_EVIDENCE_IMAGES:
            raise bad(
                "evidence_images",
                f"holds {len(self.evidence_images)} items, cap is {MAX_EVIDENCE_IMAGES}",
            )
        pages = {s.source_page_url for s in self.sentences if s.source_page_url}
        if len(pages) > MAX_SENTENCE_PAGES:
            raise bad("sentences", f"spans {len(pages)} pages, cap is {MAX_SENTENCE_PAGES}")
        for i, m in enumerate(self.evidence_images):
            m.validate(self.id, i)
        for i, s in enumerate(self.sentences):
            s.validate(self.id, i)
        for i, e in enumerate(self.entities):
            if not isinstance(e, str) or not e.strip():
                raise bad(f"entities[{i}]", "is empty")

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=True)


_SENTENCE_FIELDS = {"text", "kind", "domain", "source_page_url", "image_matched_by"}
_IMAGE_FIELDS = {"image_id", "domain", "source"}
_RECORD_FIELDS = {
    "id", "query_image_id", "query_caption", "evidence_images",
    "entities", "sentences", "label", "split",
}


def record_from_dict(obj: dict) -> ExampleRecord:
    if not isinstance(obj, dict):
        raise DatasetValidationError(f"record is not an object: {obj!r}")
    rid = obj.get("id", "<missing id>")
    unknown = set(obj) - _RECORD_FIELDS
    if unknown:
        raise DatasetValidationError(
            f"record {rid!r}: unknown field(s) {sorted(unknown)}"
        )
    missing = _RECORD_FIELDS - set(obj)
    if missing:
        raise DatasetValidationError(
            f"record {rid!r}: missing field {sorted(missing)[0]!r}"
        )

    def sub(cls, fields, raw, where):
        if not isinstance(raw, dict):
            raise DatasetValidationError(f"record {rid!r}: {where} is not an object")
        unknown = set(raw) - fields
        if unknown:
            raise DatasetValidationError(
                f"record {rid!r}: {where} has unknown field(s) {sorted(unknown)}"
            )
        return cls(**raw)

    rec = ExampleRecord(
        id=obj["id"],
        query_image_id=obj["query_image_id"],
        query_caption=obj["query_caption"],
        evidence_images=[
            sub(EvidenceImageMeta, _IMAGE_FIELDS, m, f"evidence_images[{i}]")
            for i, m in enumerate(obj["evidence_images"])
        ],
        entities=list(obj["entities"]),
        sentences=[
            sub(SentenceEvidence, _SENTENCE_FIELDS, s, f"sentences[{i}]")
            for i, s in enumerate(obj["sentences"])
        ],
        label=obj["label"],
        split=obj["split"],
    )
    rec.validate()
    return rec


def load_dataset(path: str | Path) -> list[ExampleRecord]:
    """Read and validate a JSON-lines dataset; duplicate ids are rejected."""
    path = Path(path)
    records: list[ExampleRecord] = []
    seen: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            rec = record_from_dict(obj)
            if rec.id in seen:
                raise DatasetValidationError(f"record {rec.id!r}: duplicate id")
            seen.add(rec.id)
            records.append(rec)
    return records


def save_dataset(records: list[ExampleRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            rec.validate()
            fh.write(rec.to_json() + "\n")


def split_records(records: list[ExampleRecord], split: str) -> list[ExampleRecord]:
    return [r for r in records if r.split == split]


def check_manifest(records: list[ExampleRecord], declared: dict[str, int]) -> None:
    """Validate declared per-split sizes against the loaded records."""
    for split, expected in declared.items():
        got = sum(1 for r in records if r.split == split)
        if got != expected:
            raise DatasetValidationError(
                f"manifest declares {expected} {split!r} records, file has {got}"
            )
