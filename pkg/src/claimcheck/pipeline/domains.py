"""Registrable-domain extraction without external suffix lists.

Evidence provenance is keyed by the registrable domain (one label below
the public suffix), lowercased. A compact snapshot of the common
multi-level public suffixes stands in for the full list; unknown
multi-level endings fall back to the last two labels.
"""

from __future__ import annotations

from urllib.parse import urlsplit

# Frequent two-level (and a few three-level) public suffixes. Enough for
# news-domain provenance; anything else registers one label deep.
_MULTI_SUFFIXES = {
    "co.uk", "org.uk", "ac.uk", "gov.uk", "ltd.uk", "me.uk", "net.uk", "plc.uk",
    "com.au", "net.au", "org.au", "edu.au", "gov.au", "id.au",
    "co.nz", "net.nz", "org.nz", "govt.nz", "ac.nz",
    "co.jp", "ne.jp", "or.jp", "ac.jp", "go.jp",
    "com.br", "net.br", "org.br", "gov.br",
    "co.in", "net.in", "org.in", "gov.in", "ac.in", "firm.in",
    "com.cn", "net.cn", "org.cn", "gov.cn",
    "co.za", "org.za", "net.za", "gov.za", "ac.za",
    "com.mx", "org.mx", "gob.mx",
    "com.ar", "com.tr", "com.sg", "com.hk", "com.tw", "com.my", "com.ph",
    "com.pk", "com.eg", "com.sa", "com.ua", "com.co", "com.ng", "com.bd",
    "co.kr", "or.kr", "go.kr", "ne.kr",
    "co.il", "org.il", "gov.il", "ac.il",
    "co.id", "or.id", "go.id", "web.id",
    "co.th", "or.th", "go.th", "in.th",
    "co.ke", "or.ke", "go.ke",
    "gov.pl", "com.pl", "net.pl", "org.pl",
    "edu.cn", "edu.au", "edu.in", "edu.mx", "edu.br", "edu.sg", "edu.hk",
    "gc.ca", "on.ca", "qc.ca", "bc.ca", "ab.ca",
    "co.ve", "com.ve", "co.at", "or.at", "ac.at",
    "com.vn", "net.vn", "org.vn",
}


def registrable_domain(url_or_host: str) -> str:
    """Lowercased registrable domain of a URL or bare hostname.

    >>> registrable_domain("https://www.News.BBC.co.uk/article")
    'bbc.co.uk'
    >>> registrable_domain("cdn.example.com")
    'example.com'
    """
    s = url_or_host.strip()
    if "//" in s or s.startswith(("http:", "https:")):
        host = urlsplit(s).hostname or ""
    else:
        host = s.split("/", 1)[0].split(":", 1)[0]
    host = host.strip(".").lower()
    if not host:
        return ""
    labels = host.split(".")
    if len(labels) <= 2:
        return host
    tail2 = ".".join(labels[-2:])
    if tail2 in _MULTI_SUFFIXES:
        return ".".join(labels[-3:])
    tail3 = ".".join(labels[-3:])
    if tail3 in _MULTI_SUFFIXES:
        return ".".join(labels[-4:])
    return tail2
