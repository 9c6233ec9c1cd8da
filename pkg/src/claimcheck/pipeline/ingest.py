"""Turn raw crawl output into dataset records plus the hash sidecar.

Crawl corpus layout: one directory holding ``crawl.json`` plus the
downloaded page bodies and images it references (paths relative to the
directory)::

    {
      "examples": [
        {"id": ..., "query_caption": ..., "query_image": "images/q.png",
         "query_domain": "site.com", "label": "pristine", "split": "train"}
      ],
      "inverse": {          # keyed by the example's query_image
        "images/q.png": {
          "entities": ["Someone", ...],
          "pages": [{"page_url": ..., "image_url": ...,
                     "html_path": "pages/p1.html"}]
        }
      },
      "images": {           # keyed by the example's query_caption
        "caption text": [{"image_url": ..., "page_domain": "b.org",
                          "image_path": "images/ev1.jpg"}]
      },
      "page_images": {      # downloaded page images, for hash matching
        "https://a.com/x": {"https://a.com/other.jpg": "images/other.jpg"}
      }
    }

Ingestion hashes the query image, walks each returned page (title
language gate, caption extraction with URL-then-hash matching), caps
results at the retrieval limits, and emits validated records. The meta
sidecar carries what the pristine-evidence filter needs later: the query
domain and hash per example and a hash per evidence image.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..data.records import EvidenceImageMeta, ExampleRecord
from .domains import registrable_domain
from .htmldoc import PageDocument
from .extract import extract_captions
from .phash import PerceptualHash, perceptual_hash
from .search import (
    MAX_IMAGE_RESULTS,
    MAX_INVERSE_RESULTS,
    FixtureSearchClient,
    SearchClient,
)
from .textnorm import LanguageIdentifier, heuristic_english, language_gate


def _image_id(image_path: str, image_url: str) -> str:
    if image_path:
        return Path(image_path).stem
    import hashlib

    return "i:" + hashlib.sha256(image_url.encode("utf-8")).hexdigest()[:16]


def ingest_crawl(
    root: str | Path,
    identifier: LanguageIdentifier = heuristic_english,
    client: SearchClient | None = None,
) -> tuple[list[ExampleRecord], dict]:
    """Returns (records, meta sidecar dict)."""
    root = Path(root)
    manifest = json.loads((root / "crawl.json").read_text(encoding="utf-8"))
    if client is None:
        client = FixtureSearchClient.from_raw(
            manifest.get("inverse", {}), manifest.get("images", {})
        )
    page_images = manifest.get("page_images", {})

    records: list[ExampleRecord] = []
    meta: dict = {"query": {}, "image_hashes": {}}
    hash_cache: dict[str, PerceptualHash] = {}

    def hash_file(rel: str) -> PerceptualHash:
        if rel not in hash_cache:
            hash_cache[rel] = perceptual_hash(root / rel)
        return hash_cache[rel]

    for ex in manifest["examples"]:
        query_image_rel = ex["query_image"]
        query_hash = hash_file(query_image_rel)
        query_image_id = _image_id(query_image_rel, query_image_rel)
        meta["image_hashes"][query_image_id] = query_hash.hex()
        meta["query"][ex["id"]] = {
            "domain": ex.get("query_domain", "").lower(),
            "image_hash": query_hash.hex(),
        }

        inverse = client.inverse_image_search(query_image_rel)
        sentences = []
        for page_res in inverse.pages[:MAX_INVERSE_RESULTS]:
            html = (root / page_res.html_path).read_text(encoding="utf-8")
            page = PageDocument.from_html(page_res.page_url, html)
            if not language_gate(page.title, identifier):
                continue
            candidates = {
                url: hash_file(rel)
                for url, rel in page_images.get(page_res.page_url, {}).items()
            }
            sentences.extend(
                extract_captions(page, page_res.image_url, query_hash, candidates)
            )

        evidence_images = []
        for img_res in client.image_search(ex["query_caption"])[:MAX_IMAGE_RESULTS]:
            iid = _image_id(img_res.image_path, img_res.image_url)
            domain = (img_res.page_domain or registrable_domain(img_res.image_url)).lower()
            evidence_images.append(
                EvidenceImageMeta(iid, domain, "direct_image_search")
            )
            if img_res.image_path:
                meta["image_hashes"][iid] = hash_file(img_res.image_path).hex()

        rec = ExampleRecord(
            id=ex["id"],
            query_image_id=query_image_id,
            query_caption=ex["query_caption"],
            evidence_images=evidence_images,
            entities=list(inverse.entities),
            sentences=sentences,
            label=ex["label"],
            split=ex["split"],
        )
        rec.validate()
        records.append(rec)
    return records, meta


def load_meta(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def meta_image_hashes(meta: dict) -> dict[str, PerceptualHash]:
    return {
        iid: PerceptualHash.from_hex(hx) for iid, hx in meta.get("image_hashes", {}).items()
    }
