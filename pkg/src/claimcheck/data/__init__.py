from .records import (
    ExampleRecord,
    EvidenceImageMeta,
    SentenceEvidence,
    REFERENCE_SPLIT_SIZES,
    check_manifest,
    load_dataset,
    record_from_dict,
    save_dataset,
    split_records,
    text_id,
)
from .store import EmbeddingStore, SECTION_DIMS, MAX_TOKEN_ROWS
from .vocab import DOMAIN_EMBED_DIM, DomainVocabulary, build_domain_vocab
from .batches import BatchSet, MemoryBatch, assemble_batch

__all__ = [
    "BatchSet",
    "DOMAIN_EMBED_DIM",
    "DomainVocabulary",
    "EmbeddingStore",
    "EvidenceImageMeta",
    "ExampleRecord",
    "MAX_TOKEN_ROWS",
    "MemoryBatch",
    "REFERENCE_SPLIT_SIZES",
    "SECTION_DIMS",
    "SentenceEvidence",
    "assemble_batch",
    "build_domain_vocab",
    "check_manifest",
    "load_dataset",
    "record_from_dict",
    "save_dataset",
    "split_records",
    "text_id",
]
