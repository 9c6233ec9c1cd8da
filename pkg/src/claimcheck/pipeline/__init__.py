from .domains import registrable_domain
from .extract import CAPTION_ATTRS, extract_captions
from .filtering import FilterStats, filter_pristine_evidence
from .htmldoc import Node, PageDocument, parse_html
from .ingest import ingest_crawl, load_meta, meta_image_hashes
from .overlap import label_overlap_count, ner_overlap_flag
from .phash import (
    ALGORITHM,
    DEFAULT_THRESHOLD,
    ImageDecodeError,
    PerceptualHash,
    hash_match,
    perceptual_hash,
)
from .search import (
    FixtureSearchClient,
    ImageResult,
    InverseSearchResult,
    PageResult,
    SearchClient,
)
from .textnorm import (
    dedupe_snippets,
    heuristic_english,
    language_gate,
    normalize_caption,
)

__all__ = [
    "ALGORITHM",
    "CAPTION_ATTRS",
    "DEFAULT_THRESHOLD",
    "FilterStats",
    "FixtureSearchClient",
    "ImageDecodeError",
    "ImageResult",
    "InverseSearchResult",
    "Node",
    "PageDocument",
    "PageResult",
    "PerceptualHash",
    "SearchClient",
    "dedupe_snippets",
    "extract_captions",
    "filter_pristine_evidence",
    "hash_match",
    "heuristic_english",
    "ingest_crawl",
    "label_overlap_count",
    "language_gate",
    "load_meta",
    "meta_image_hashes",
    "ner_overlap_flag",
    "normalize_caption",
    "parse_html",
    "perceptual_hash",
    "registrable_domain",
]
