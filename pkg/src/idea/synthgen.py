"""Synthetic pairs of isomeric movie libraries with known anchor links.

Every linked movie pair shares a latent concept vector.  The concept picks a
topic mixture, and all text, genres, countries, languages and cast of both
records are sampled from that mixture independently per side, each side in
its own vocabulary.  Titles are a deterministic function of the concept
(top topics plus a fine-grained bucket of each topic's weight) so that two
records of one movie have translatable titles, subject to ``title_noise``.

Ratings and comment counts come from per-pair latent quality and popularity
scores plus side-specific noise scaled by ``1 - rating_correlation``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping

import numpy as np
from scipy.special import softmax

from .datamodel import AnchorLinkSet, Library, MovieRecord
from .errors import ConfigError


@dataclass(frozen=True)
class SynthConfig:
    n_movies: int = 500
    vocab_size_a: int = 1000
    vocab_size_b: int = 1000
    concept_dim: int = 8
    tokens_per_title: int = 2
    title_noise: float = 0.3
    attribute_noise: float = 0.1
    rating_correlation: float = 0.9
    seed: int = 0
    # text volume per movie and categorical pool sizes
    storyline_length: int = 30
    n_comments: int = 10
    comment_length: int = 8
    n_genres: int = 12
    n_countries: int = 8
    n_languages: int = 6
    people_per_topic: int = 25
    topic_sharpness: float = 3.0
    # share of quality/popularity variance explained by a movie's content
    content_signal: float = 0.9

    def validate(self) -> None:
        for name in ("title_noise", "attribute_noise", "rating_correlation", "content_signal"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        for name in (
            "n_movies", "vocab_size_a", "vocab_size_b", "concept_dim", "tokens_per_title",
            "n_genres", "n_countries", "n_languages", "people_per_topic",
        ):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        for name in ("storyline_length", "n_comments", "comment_length"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")
        if self.n_comments > 100:
            raise ConfigError("n_comments must not exceed 100")
        if min(self.vocab_size_a, self.vocab_size_b) < self.tokens_per_title:
            raise ConfigError("vocabulary sizes must be at least tokens_per_title")
        if min(self.vocab_size_a, self.vocab_size_b) < self.concept_dim:
            raise ConfigError("vocabulary sizes must be at least concept_dim")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "SynthConfig":
        """Build from string-valued config entries (e.g. an INI section)."""
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise ConfigError(f"unknown [synth] key: {key}")
            default = known[key].default
            try:
                kwargs[key] = type(default)(raw) if not isinstance(default, int) else int(raw)
            except ValueError:
                raise ConfigError(f"[synth] {key}: cannot parse {raw!r}") from None
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TranslationDictionary:
    mapping: Mapping[str, str]

    def __post_init__(self):
        if len(set(self.mapping.values())) != len(self.mapping):
            raise ValueError("translation dictionary must be injective")

    def __len__(self):
        return len(self.mapping)

    def __getitem__(self, token):
        return self.mapping[token]

    def get(self, token, default=None):
        return self.mapping.get(token, default)

    def __contains__(self, token):
        return token in self.mapping

    def inverse(self) -> "TranslationDictionary":
        return TranslationDictionary({v: k for k, v in self.mapping.items()})


def _unit(v):
    return v / np.linalg.norm(v)


def _token(side: str, i: int) -> str:
    return f"{side}{i:05d}"


def generate_pair(cfg: SynthConfig) -> tuple[Library, Library, AnchorLinkSet, TranslationDictionary]:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n, k = cfg.n_movies, cfg.concept_dim
    v_shared = min(cfg.vocab_size_a, cfg.vocab_size_b)

    # Canonical tokens 0..v_shared-1 carry meaning; each belongs to one topic.
    topic_of = rng.permutation(v_shared) % k
    topic_tokens = [np.flatnonzero(topic_of == t) for t in range(k)]
    perm_b = rng.permutation(cfg.vocab_size_b)
    canon_a = np.arange(v_shared)  # canonical token i is written a{i} in library A
    canon_b = perm_b[:v_shared]
    dictionary = TranslationDictionary(
        {_token("a", int(canon_a[i])): _token("b", int(canon_b[i])) for i in range(v_shared)}
    )

    concepts = rng.standard_normal((n, k))
    mixtures = softmax(cfg.topic_sharpness * concepts, axis=1)
    # latent quality and popularity: unit-variance, partly readable from content
    u_q = rng.standard_normal(k)
    u_p = 0.5 * u_q / np.linalg.norm(u_q) + math.sqrt(0.75) * _unit(rng.standard_normal(k))
    c = cfg.content_signal
    quality = math.sqrt(c) * concepts @ _unit(u_q) + math.sqrt(1 - c) * rng.standard_normal(n)
    popularity = math.sqrt(c) * concepts @ _unit(u_p) + math.sqrt(1 - c) * rng.standard_normal(n)

    country_proj = rng.standard_normal((cfg.n_countries, k))
    language_proj = rng.standard_normal((cfg.n_languages, k))
    length_proj = rng.standard_normal(k) / math.sqrt(k)
    year_proj = rng.standard_normal(k) / math.sqrt(k)

    titles = _canonical_titles(concepts, topic_tokens, cfg.tokens_per_title, rng)

    # Cast shared by both records of a movie: people are grouped by topic.
    n_people = cfg.people_per_topic * k
    cast_canon = []
    for i in range(n):
        top = np.argsort(-concepts[i], kind="stable")[:3]
        pick = lambda t: int(t * cfg.people_per_topic + rng.integers(cfg.people_per_topic))
        actor_topics = rng.choice(top, size=4, p=mixtures[i, top] / mixtures[i, top].sum())
        cast_canon.append(
            {
                "director": [pick(top[0])],
                "writer": [pick(top[0])],
                "actor_actress": [pick(t) for t in actor_topics],
            }
        )

    to_side = {"a": canon_a, "b": canon_b}
    vocab = {"a": cfg.vocab_size_a, "b": cfg.vocab_size_b}
    side_titles = {
        side: [_noisy_title(t, to_side[side], cfg.title_noise, vocab[side], rng) for t in titles]
        for side in ("a", "b")
    }
    _repair_collisions(titles, side_titles, to_side, cfg, rng)

    # Library B ids are a random relabelling so ids carry no alignment signal.
    b_ids = rng.permutation(n)
    ids = {"a": [f"a{i:04d}" for i in range(n)], "b": [f"b{int(j):04d}" for j in b_ids]}

    libraries = {}
    for side in ("a", "b"):
        movies = []
        noise = (1.0 - cfg.rating_correlation)
        tok = lambda idx: _token(side, int(idx))
        for i in range(n):
            mix = mixtures[i]
            storyline = _sample_text(mix, topic_tokens, cfg.storyline_length, rng)
            comments = [
                _sample_text(mix, topic_tokens, cfg.comment_length, rng) for _ in range(cfg.n_comments)
            ]
            top2 = np.argsort(-concepts[i], kind="stable")[:2]
            genres = {int(t) % cfg.n_genres for t in top2}
            genres = {
                int(rng.integers(cfg.n_genres)) if rng.random() < cfg.attribute_noise else g
                for g in genres
            }
            country = int(np.argmax(country_proj @ concepts[i]))
            if rng.random() < cfg.attribute_noise:
                country = int(rng.integers(cfg.n_countries))
            language = int(np.argmax(language_proj @ concepts[i]))
            if rng.random() < cfg.attribute_noise:
                language = int(rng.integers(cfg.n_languages))
            cast = {}
            for role, people in cast_canon[i].items():
                cast[role] = frozenset(
                    f"{side}-person-{int(rng.integers(n_people)) if rng.random() < cfg.attribute_noise else p:04d}"
                    for p in people
                )
            q_side = quality[i] + noise * rng.standard_normal()
            p_side = popularity[i] + noise * rng.standard_normal()
            rating = float(np.clip(round(6.0 + 1.3 * q_side, 2), 0.0, 10.0))
            comment_count = int(round(math.exp(5.0 + 0.6 * p_side)))
            length = int(round(100 + 25 * math.tanh(length_proj @ concepts[i]) + 5 * rng.standard_normal()))
            year = int(round(1998 + 9 * math.tanh(year_proj @ concepts[i]) + 2 * rng.standard_normal()))
            movies.append(
                MovieRecord(
                    id=ids[side][i],
                    title=tuple(tok(t) for t in side_titles[side][i]),
                    storyline=tuple(tok(to_side[side][t]) for t in storyline),
                    genres=frozenset(f"{side}-genre-{g:02d}" for g in genres),
                    countries=frozenset([f"{side}-country-{country:02d}"]),
                    languages=frozenset([f"{side}-language-{language:02d}"]),
                    cast=cast,
                    length_minutes=max(length, 1),
                    year=year,
                    rating=rating,
                    comment_count=comment_count,
                    top_comments=tuple(tuple(tok(to_side[side][t]) for t in c) for c in comments),
                )
            )
        movies.sort(key=lambda m: m.id)
        libraries[side] = Library(library_id=side.upper(), movies=tuple(movies))

    lib_a, lib_b = libraries["a"], libraries["b"]
    links = AnchorLinkSet("A", "B", frozenset(zip(ids["a"], ids["b"])))
    return lib_a, lib_b, links, dictionary


def _canonical_titles(concepts, topic_tokens, n_tokens, rng):
    """Deterministic title per concept, made unique as a token set."""
    titles = []
    seen = set()
    for z in concepts:
        order = np.argsort(-z, kind="stable")
        title = []
        for j in range(n_tokens):
            pool = topic_tokens[order[j % len(order)]]
            bucket = int(math.floor(abs(z[order[j % len(order)]]) * 997.0)) % len(pool)
            title.append(int(pool[bucket]))
        while frozenset(title) in seen or len(set(title)) < len(title):
            slot = int(rng.integers(n_tokens))
            pool = topic_tokens[order[slot % len(order)]]
            title[slot] = int(pool[rng.integers(len(pool))])
        seen.add(frozenset(title))
        titles.append(title)
    return titles


def _noisy_title(title, canon, noise, vocab_size, rng):
    """Side token indices for a canonical title; each token is replaced with
    probability ``noise`` by a uniformly drawn token of the side vocabulary."""
    return [int(rng.integers(vocab_size)) if rng.random() < noise else int(canon[t]) for t in title]


def _repair_collisions(titles, side_titles, canon, cfg, rng, max_rounds=1000):
    # Exact title matching must never pair two different movies: titles stay
    # unique within a side, and a translated title only equals its partner's.
    a_to_b = {int(i): int(j) for i, j in zip(canon["a"], canon["b"])}
    b_to_a = {j: i for i, j in a_to_b.items()}
    vocab = {"a": cfg.vocab_size_a, "b": cfg.vocab_size_b}
    for _ in range(max_rounds):
        bad = set()
        keys = {side: [frozenset(t) for t in side_titles[side]] for side in ("a", "b")}
        for side in ("a", "b"):
            first = {}
            for i, key in enumerate(keys[side]):
                if key in first:
                    bad.update({(side, i), (side, first[key])})
                first.setdefault(key, i)
        for src, dst, table in (("a", "b", a_to_b), ("b", "a", b_to_a)):
            index = {}
            for j, key in enumerate(keys[dst]):
                index.setdefault(key, []).append(j)
            for i, t in enumerate(side_titles[src]):
                translated = frozenset(table[x] for x in t if x in table)
                if any(j != i for j in index.get(translated, ())):
                    bad.add((src, i))
        if not bad:
            return
        if cfg.title_noise == 0:
            raise ConfigError("canonical titles collide across libraries")
        for side, i in sorted(bad):
            side_titles[side][i] = _noisy_title(titles[i], canon[side], cfg.title_noise, vocab[side], rng)
    raise ConfigError("could not make titles unique; increase vocabulary sizes")


def _sample_text(mix, topic_tokens, length, rng):
    if length == 0:
        return []
    topics = rng.choice(len(mix), size=length, p=mix)
    return [int(topic_tokens[t][rng.integers(len(topic_tokens[t]))]) for t in topics]


def ablate_missing(lib_a: Library, lib_b: Library, links: AnchorLinkSet, delta: float, seed: int):
    """Delete movies so that a ``delta`` fraction of linked pairs becomes one-sided.

    Returns ``(lib_a', lib_b', links_kept, missing_truth_a, missing_truth_b)``
    where ``missing_truth_a`` holds the lib_b movies whose lib_a partner was
    deleted, and symmetrically.
    """
    from .evaluation import delta_split

    kept, del_a, del_b = delta_split(list(links), delta, seed)
    lib_a2 = lib_a.without(a for a, _ in del_a)
    lib_b2 = lib_b.without(b for _, b in del_b)
    links_kept = AnchorLinkSet(links.lib_a, links.lib_b, frozenset(kept))
    missing_truth_a = {b for _, b in del_a}
    missing_truth_b = {a for a, _ in del_b}
    return lib_a2, lib_b2, links_kept, missing_truth_a, missing_truth_b
