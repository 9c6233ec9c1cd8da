"""Caption extraction: locate the evidence image on a page, harvest text.

The target image element is found by exact URL match on the img src,
falling back to perceptual-hash comparison against the page's candidate
image hashes (collected by whoever downloaded the page's images). Once
located, the harvest is: the nearest enclosing figure's figcaption, the
img tag's textual attributes (alt, image-alt, caption, data-caption,
title), and finally the page title. Everything is whitespace-normalized
and deduplicated by normalized form. If the image cannot be located at
all, only the page title is returned, flagged image_matched_by="none".
"""

from __future__ import annotations

import re

from ..data.records import SentenceEvidence
from .domains import registrable_domain
from .htmldoc import Node, PageDocument
from .phash import DEFAULT_THRESHOLD, PerceptualHash, hash_match
from .textnorm import normalize_caption

CAPTION_ATTRS = ("alt", "image-alt", "caption", "data-caption", "title")

_WS = re.compile(r"\s+")


def _clean(text: str) -> str:
    return _WS.sub(" ", text).strip()


def _locate_image(
    dom: Node,
    target_url: str,
    target_hash: PerceptualHash | None,
    candidate_hashes: dict[str, PerceptualHash],
    threshold: int,
) -> tuple[Node | None, str]:
    imgs = dom.find_all("img")
    target_url = target_url.strip()
    for img in imgs:
        src = (img.attr("src") or "").strip()
        if src and src == target_url:
            return img, "url"
    if target_hash is not None:
        for img in imgs:
            src = (img.attr("src") or "").strip()
            cand = candidate_hashes.get(src)
            if cand is not None and hash_match(target_hash, cand, threshold):
                return img, "perceptual_hash"
    return None, "none"


def _nearest_figcaption(img: Node) -> Node | None:
    for ancestor in img.ancestors():
        fig = ancestor.find_first("figcaption")
        if fig is not None:
            return fig
    return None


def extract_captions(
    page: PageDocument,
    target_image_url: str,
    target_hash: PerceptualHash | None = None,
    candidate_hashes: dict[str, PerceptualHash] | None = None,
    threshold: int = DEFAULT_THRESHOLD,
) -> list[SentenceEvidence]:
    dom = page.dom
    domain = registrable_domain(page.url)
    img, matched_by = _locate_image(
        dom, target_image_url, target_hash, candidate_hashes or {}, threshold
    )

    texts: list[tuple[str, str]] = []  # (text, kind)
    if img is not None:
        figcaption = _nearest_figcaption(img)
        if figcaption is not None:
            texts.append((figcaption.text(), "caption"))
        for attr in CAPTION_ATTRS:
            val = img.attr(attr)
            if val:
                texts.append((_clean(val), "caption"))
    title = _clean(page.title)
    if title:
        texts.append((title, "title"))

    out: list[SentenceEvidence] = []
    seen: set[str] = set()
    for text, kind in texts:
        if not text:
            continue
        key = normalize_caption(text)
        if not key or key in seen:
            continue
        seen.add(key)
        out.append(
            SentenceEvidence(
                text=text,
                kind=kind,
                domain=domain,
                source_page_url=page.url,
                image_matched_by=matched_by,
            )
        )
    return out
