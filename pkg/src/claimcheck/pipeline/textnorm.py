"""Caption normalization, snippet dedup, and the page-language gate."""

from __future__ import annotations

import re
import unicodedata
from typing import Callable

_WS = re.compile(r"\s+")

# LanguageIdentifier: str -> bool (True = English). Production callers plug
# in a real identifier; the heuristic below exists for offline tests.
LanguageIdentifier = Callable[[str], bool]


def normalize_caption(text: str) -> str:
    """Lowercase, strip Unicode punctuation, collapse whitespace, trim."""
    lowered = text.lower()
    kept = [c for c in lowered if not unicodedata.category(c).startswith("P")]
    return _WS.sub(" ", "".join(kept)).strip()


def dedupe_snippets(snippets: list[str]) -> list[str]:
    """Order-preserving removal of normalized duplicates (first one wins)."""
    seen: set[str] = set()
    out: list[str] = []
    for s in snippets:
        key = normalize_caption(s)
        if key in seen:
            continue
        seen.add(key)
        out.append(s)
    return out


# Common English words: function words plus high-frequency news vocabulary.
# Broad on purpose so ordinary headlines without function words still hit.
_ENGLISH_WORDS = frozenset("""
a about above after again against all also am an and any are as at be because
been before being below between both but by can could did do does doing down
during each few for from further had has have having he her here hers him his
how i if in into is it its itself just me more most my new no nor not now of
off on once only or other our ours out over own said same she should so some
such than that the their theirs them then there these they this those through
to too under until up very was we were what when where which while who whom
why will with would you your yours
against amid among announced area attack authorities back bank big border
british build building called campaign capital case center chief children city
claim come companies company country court crisis day days deal death
demonstrators during early east economy election end erect erects europe
european face fence fight fire first five forces former four fence gas
government group head health high home house hundreds images killed last late
law leader leaders left life local long made major man many march market may
media meeting members migrants military million minister month months morning
national near news next night north number officials oil old one open our
party people percent photo place plan police policy political president press
prime protest protesters public race rally refugee refugees report reported
rights rise road rules run school sea season security senate set several
shooting shot show signs since site six soldiers south speaks state statement
states station still stop store storm street strike summit support team tells
test thousands three time times today told top town trade trial troops two
union united states university victims video violence visit vote war water way
week weeks west white women work workers world year years york young
""".split())


def heuristic_english(title: str) -> bool:
    """Test identifier: ASCII-letter ratio >= 0.9 and >= 1 common English word."""
    letters = [c for c in title if c.isalpha()]
    if not letters:
        return True
    ascii_ratio = sum(1 for c in letters if c.isascii()) / len(letters)
    if ascii_ratio < 0.9:
        return False
    words = re.findall(r"[a-zA-Z]+", title)
    return any(w.lower() in _ENGLISH_WORDS for w in words)


def language_gate(title: str, identifier: LanguageIdentifier = heuristic_english) -> bool:
    """True = keep the page. Empty titles always pass (caption-bearing
    pages with a missing title should not be discarded)."""
    if not title.strip():
        return True
    return bool(identifier(title))
