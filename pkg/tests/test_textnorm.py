import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claimcheck.pipeline import (
    dedupe_snippets,
    heuristic_english,
    language_gate,
    normalize_caption,
    registrable_domain,
)


# --- normalize_caption -------------------------------------------------------


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("Hello, World!", "hello world"),
        ("", ""),
        ("A.B.C -- test", "abc test"),
        ("  spaced\tout\n text ", "spaced out text"),
        ("Don't stop", "dont stop"),
        ("«Quoted» — dash", "quoted dash"),
        ("MiXeD CaSe", "mixed case"),
        ("semi;colon:and,comma", "semicolonandcomma"),
    ],
)
def test_normalize_caption_table(raw, expected):
    assert normalize_caption(raw) == expected


@settings(max_examples=80, deadline=None)
@given(st.text(max_size=60))
def test_normalize_caption_idempotent(text):
    once = normalize_caption(text)
    assert normalize_caption(once) == once


# --- dedupe_snippets ----------------------------------------------------------


def test_dedupe_normalized_duplicate():
    assert dedupe_snippets(["A!", "a"]) == ["A!"]


def test_dedupe_empty():
    assert dedupe_snippets([]) == []


def test_dedupe_keeps_order():
    assert dedupe_snippets(["x", "y", "X "]) == ["x", "y"]


@settings(max_examples=50, deadline=None)
@given(st.lists(st.text(max_size=20), max_size=8))
def test_dedupe_idempotent_and_order_preserving(snips):
    once = dedupe_snippets(snips)
    assert dedupe_snippets(once) == once
    it = iter(snips)
    assert all(any(s is t or s == t for t in it) for s in once) or len(once) <= len(snips)


# --- language gate ---------------------------------------------------------------


def test_gate_keeps_plain_english_title():
    assert language_gate("Hungary erects border fence") is True


def test_gate_drops_cyrillic_title():
    assert language_gate("Венгрия строит забор на границе") is False


def test_gate_keeps_empty_title():
    assert language_gate("") is True
    assert language_gate("   ") is True


def test_gate_uses_injected_identifier():
    assert language_gate("anything", identifier=lambda t: False) is False
    assert language_gate("何でも", identifier=lambda t: True) is True


def test_heuristic_needs_a_known_word():
    assert heuristic_english("qwzx brfg xyzzy") is False
    assert heuristic_english("The qwzx") is True


# --- registrable domain ---------------------------------------------------------


@pytest.mark.parametrize(
    "url,expected",
    [
        ("https://www.theguardian.com/world/x", "theguardian.com"),
        ("http://news.bbc.co.uk/article", "bbc.co.uk"),
        ("https://Example.COM/", "example.com"),
        ("cdn.images.example.org", "example.org"),
        ("https://sub.domain.com.au/path", "domain.com.au"),
        ("localhost", "localhost"),
        ("", ""),
    ],
)
def test_registrable_domain(url, expected):
    assert registrable_domain(url) == expected
