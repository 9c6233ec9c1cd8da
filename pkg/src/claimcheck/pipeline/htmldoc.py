"""Tolerant HTML parsing: a small DOM on top of html.parser.

Bad markup never raises; unclosed tags are auto-closed at EOF, stray
closing tags are dropped, and void elements (img, br, ...) never nest.
Just enough tree structure for caption scraping: parents, descendants,
attribute access, and whitespace-collapsed text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterator, Optional

_WS = re.compile(r"\s+")

VOID_TAGS = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
}
_SKIP_TEXT = {"script", "style"}


class Node:
    __slots__ = ("tag", "attrs", "children", "parent")

    def __init__(self, tag: str, attrs: dict[str, str], parent: Optional["Node"]):
        self.tag = tag
        self.attrs = attrs
        self.children: list = []  # Node or str
        self.parent = parent

    def attr(self, name: str) -> str | None:
        return self.attrs.get(name.lower())

    def iter_nodes(self) -> Iterator["Node"]:
        """All descendant element nodes, document order, self excluded."""
        for child in self.children:
            if isinstance(child, Node):
                yield child
                yield from child.iter_nodes()

    def find_all(self, tag: str) -> list["Node"]:
        return [n for n in self.iter_nodes() if n.tag == tag]

    def find_first(self, tag: str) -> Optional["Node"]:
        for n in self.iter_nodes():
            if n.tag == tag:
                return n
        return None

    def text(self) -> str:
        parts: list[str] = []

        def walk(node: "Node") -> None:
            for child in node.children:
                if isinstance(child, str):
                    parts.append(child)
                elif child.tag not in _SKIP_TEXT:
                    walk(child)

        walk(self)
        return _WS.sub(" ", "".join(parts)).strip()

    def ancestors(self) -> Iterator["Node"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent


class _TreeBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Node("#document", {}, None)
        self.stack = [self.root]

    def handle_starttag(self, tag, attrs):
        attr_map: dict[str, str] = {}
        for k, v in attrs:  # first occurrence of a duplicated attribute wins
            k = k.lower()
            if k not in attr_map:
                attr_map[k] = v if v is not None else ""
        node = Node(tag.lower(), attr_map, self.stack[-1])
        self.stack[-1].children.append(node)
        if tag.lower() not in VOID_TAGS:
            self.stack.append(node)

    def handle_startendtag(self, tag, attrs):
        self.handle_starttag(tag, attrs)
        if tag.lower() not in VOID_TAGS:
            self.stack.pop()

    def handle_endtag(self, tag):
        tag = tag.lower()
        for i in range(len(self.stack) - 1, 0, -1):
            if self.stack[i].tag == tag:
                del self.stack[i:]
                return
        # stray close tag: ignore

    def handle_data(self, data):
        if data:
            self.stack[-1].children.append(data)


def parse_html(html: str) -> Node:
    builder = _TreeBuilder()
    try:
        builder.feed(html)
        builder.close()
    except Exception:
        pass  # keep whatever tree was built; tolerance beats completeness
    return builder.root


@dataclass
class PageDocument:
    """One fetched page: raw HTML plus the extracted title."""

    url: str
    html: str
    title: str = ""
    fetched_at: str = ""
    _dom: Node | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_html(cls, url: str, html: str, fetched_at: str = "") -> "PageDocument":
        dom = parse_html(html)
        title_node = dom.find_first("title")
        title = title_node.text() if title_node is not None else ""
        return cls(url=url, html=html, title=title, fetched_at=fetched_at, _dom=dom)

    @property
    def dom(self) -> Node:
        if self._dom is None:
            self._dom = parse_html(self.html)
        return self._dom
