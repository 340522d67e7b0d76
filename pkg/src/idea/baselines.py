"""Title-translation baselines: exact matching and Jaccard similarity.

Titles are compared as token sets after mapping one side through an offline
translation dictionary.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path
from typing import Iterable

from .datamodel import AnchorLinkSet, Library
from .errors import ConfigError, ParseError
from .fusion import ScoredPair
from .synthgen import TranslationDictionary

DIRECTIONS = ("a_to_b", "b_to_a")


def translate_tokens(tokens: Iterable[str], dictionary) -> tuple[frozenset[str], int]:
    """Map tokens through ``dictionary``; returns ``(translated set, dropped count)``."""
    out, dropped = set(), 0
    for t in tokens:
        v = dictionary.get(t)
        if v is None:
            dropped += 1
        else:
            out.add(v)
    return frozenset(out), dropped


def jaccard_similarity(set_a, set_b) -> float:
    set_a, set_b = set(set_a), set(set_b)
    union = len(set_a | set_b)
    if union == 0:
        return 0.0
    return len(set_a & set_b) / union


def _oriented(lib_a: Library, lib_b: Library, dictionary: TranslationDictionary, direction: str):
    """(source lib, target lib, dictionary from source tokens, swapped?)"""
    if direction == "a_to_b":
        return lib_a, lib_b, dictionary, False
    if direction == "b_to_a":
        return lib_b, lib_a, dictionary.inverse(), True
    raise ConfigError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")


def exact_match(lib_a: Library, lib_b: Library, dictionary: TranslationDictionary,
                direction: str = "a_to_b") -> AnchorLinkSet:
    """Link movies whose translated title set equals the counterpart's title set.

    A title matching several counterparts, or matched by several sources, is
    left unlinked.
    """
    src, dst, d, swapped = _oriented(lib_a, lib_b, dictionary, direction)
    by_title = defaultdict(list)
    for m in dst.movies:
        by_title[frozenset(m.title)].append(m.id)
    hits = defaultdict(list)
    for m in src.movies:
        key, _ = translate_tokens(m.title, d)
        if not key:
            continue
        targets = by_title.get(key, [])
        if len(targets) == 1:
            hits[targets[0]].append(m.id)
    links = set()
    for target, sources in hits.items():
        if len(sources) == 1:
            links.add((target, sources[0]) if swapped else (sources[0], target))
    return AnchorLinkSet(lib_a.library_id, lib_b.library_id, frozenset(links))


def similarity_scores(lib_a: Library, lib_b: Library, dictionary: TranslationDictionary,
                      direction: str = "a_to_b", pairs: Iterable[tuple[str, str]] | None = None) -> list[ScoredPair]:
    """Jaccard-score every cross pair, or only ``pairs`` when given.

    The pair's distance is the Jaccard distance ``1 - J``, so ``score = J - 1``
    orders pairs exactly as the raw similarity does.
    """
    _, _, d, _ = _oriented(lib_a, lib_b, dictionary, direction)
    a_titles = {m.id: frozenset(m.title) for m in lib_a.movies}
    b_titles = {m.id: frozenset(m.title) for m in lib_b.movies}
    if direction == "a_to_b":
        a_titles = {k: translate_tokens(v, d)[0] for k, v in a_titles.items()}
    else:
        b_titles = {k: translate_tokens(v, d)[0] for k, v in b_titles.items()}
    if pairs is None:
        pairs = ((a, b) for a in lib_a.ids for b in lib_b.ids)
    out = []
    for a, b in pairs:
        out.append(ScoredPair(a, b, 1.0 - jaccard_similarity(a_titles[a], b_titles[b])))
    return out


def save_dictionary(dictionary: TranslationDictionary, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for k in sorted(dictionary.mapping):
            w.writerow([k, dictionary.mapping[k]])


def load_dictionary(path: str | Path) -> TranslationDictionary:
    mapping = {}
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ParseError(path, n, "expected 'token_a<TAB>token_b'")
            if parts[0] in mapping:
                raise ParseError(path, n, f"token {parts[0]!r} defined twice")
            mapping[parts[0]] = parts[1]
    try:
        return TranslationDictionary(mapping)
    except ValueError as exc:
        raise ParseError(path, 0, str(exc)) from None
