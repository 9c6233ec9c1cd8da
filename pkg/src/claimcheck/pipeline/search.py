"""Search-client interface and its offline fixture implementation.

Two retrieval directions feed an example's evidence:

* inverse image search (query = the claim image) returns associated
  entity strings plus up to 20 containing pages;
* text image search (query = the claim caption) returns up to 10 images
  with their source domains.

The wire adapter for a hosted search API maps onto this interface as
plain HTTP GET + JSON::

    inverse image search: request carries image bytes or an image URL;
      response {"entities": [str], "pages": [{"page_url": str,
      "image_url": str}]} capped at 20 pages.
    text image search: request carries the query string;
      response {"images": [{"image_url": str, "page_domain": str}]}
      capped at 10.

Nothing in the package performs network I/O at test time; the fixture
client below serves pre-crawled results from a directory and is the only
implementation the pipeline ships.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

MAX_INVERSE_RESULTS = 20
MAX_IMAGE_RESULTS = 10


@dataclass
class PageResult:
    page_url: str
    image_url: str
    html_path: str = ""  # fixture corpora store the page body on disk
    image_path: str = ""


@dataclass
class ImageResult:
    image_url: str
    page_domain: str
    image_path: str = ""


@dataclass
class InverseSearchResult:
    entities: list[str] = field(default_factory=list)
    pages: list[PageResult] = field(default_factory=list)


class SearchClient(Protocol):
    def inverse_image_search(self, image_ref: str) -> InverseSearchResult: ...

    def image_search(self, caption: str) -> list[ImageResult]: ...


class FixtureSearchClient:
    """Serves canned search results keyed by query from a crawl manifest.

    The manifest layout (one JSON file) is documented in
    :mod:`claimcheck.pipeline.ingest`.
    """

    def __init__(self, inverse: dict[str, InverseSearchResult], images: dict[str, list[ImageResult]]):
        self._inverse = inverse
        self._images = images

    def inverse_image_search(self, image_ref: str) -> InverseSearchResult:
        res = self._inverse.get(image_ref, InverseSearchResult())
        return InverseSearchResult(
            entities=list(res.entities),
            pages=list(res.pages)[:MAX_INVERSE_RESULTS],
        )

    def image_search(self, caption: str) -> list[ImageResult]:
        return list(self._images.get(caption, []))[:MAX_IMAGE_RESULTS]

    @classmethod
    def from_raw(cls, raw_inverse: dict, raw_images: dict) -> "FixtureSearchClient":
        inverse = {
            key: InverseSearchResult(
                entities=list(val.get("entities", [])),
                pages=[PageResult(**p) for p in val.get("pages", [])],
            )
            for key, val in raw_inverse.items()
        }
        images = {
            key: [ImageResult(**im) for im in val]
            for key, val in raw_images.items()
        }
        return cls(inverse, images)

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureSearchClient":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_raw(obj.get("inverse", {}), obj.get("images", {}))
