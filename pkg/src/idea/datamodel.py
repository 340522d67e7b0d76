"""Knowledge-library records, anchor links and their JSON Lines storage.

A library file holds one movie per line after a header line
``{"format": "omkl", "version": 1, ...}``.  Users and comment links live in
optional sidecar files next to it (``<stem>.users.jsonl`` and
``<stem>.comments.jsonl``), each with the same header.  Anchor link files
hold ``{"a": id, "b": id}`` lines.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    CardinalityError,
    DanglingIdError,
    DuplicateIdError,
    InputError,
    ParseError,
)

logger = logging.getLogger(__name__)

FORMAT_NAME = "omkl"
FORMAT_VERSION = 1
CAST_ROLES = ("director", "writer", "actor_actress")
MAX_TOP_COMMENTS = 100

_MOVIE_FIELDS = {
    "id", "title", "storyline", "genres", "countries", "languages", "cast",
    "length_minutes", "year", "rating", "comment_count", "top_comments",
}


@dataclass(frozen=True)
class MovieRecord:
    """One movie page.  Numeric fields are ``None`` when the source lacks them."""

    id: str
    title: tuple[str, ...] = ()
    storyline: tuple[str, ...] = ()
    genres: frozenset[str] = frozenset()
    countries: frozenset[str] = frozenset()
    languages: frozenset[str] = frozenset()
    cast: Mapping[str, frozenset[str]] = field(default_factory=dict)
    length_minutes: int | None = None
    year: int | None = None
    rating: float | None = None
    comment_count: int | None = None
    top_comments: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self):
        # every role present, so records compare equal however they were built
        object.__setattr__(self, "cast", {r: frozenset(self.cast.get(r, ())) for r in CAST_ROLES})

    def role(self, name: str) -> frozenset[str]:
        return self.cast.get(name, frozenset())

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "title": list(self.title),
            "storyline": list(self.storyline),
            "genres": sorted(self.genres),
            "countries": sorted(self.countries),
            "languages": sorted(self.languages),
            "cast": {r: sorted(self.role(r)) for r in CAST_ROLES},
            "length_minutes": self.length_minutes,
            "year": self.year,
            "rating": self.rating,
            "comment_count": self.comment_count,
            "top_comments": [list(c) for c in self.top_comments],
        }
        return out

    @classmethod
    def from_json(cls, obj: dict) -> tuple["MovieRecord", int]:
        """Build a record from a parsed line; also returns the number of unknown keys."""
        if "id" not in obj:
            raise ValueError("record lacks an 'id' field")
        unknown = len(set(obj) - _MOVIE_FIELDS)
        cast_obj = obj.get("cast") or {}
        if not isinstance(cast_obj, dict):
            raise ValueError("'cast' must be an object")
        unknown += len(set(cast_obj) - set(CAST_ROLES))
        cast = {r: frozenset(str(v) for v in cast_obj.get(r, ())) for r in CAST_ROLES}
        rating = obj.get("rating")
        rec = cls(
            id=str(obj["id"]),
            title=tuple(str(t) for t in obj.get("title") or ()),
            storyline=tuple(str(t) for t in obj.get("storyline") or ()),
            genres=frozenset(str(g) for g in obj.get("genres") or ()),
            countries=frozenset(str(c) for c in obj.get("countries") or ()),
            languages=frozenset(str(c) for c in obj.get("languages") or ()),
            cast=cast,
            length_minutes=_opt_int(obj.get("length_minutes")),
            year=_opt_int(obj.get("year")),
            rating=None if rating is None else float(rating),
            comment_count=_opt_int(obj.get("comment_count")),
            top_comments=tuple(tuple(str(t) for t in c) for c in obj.get("top_comments") or ()),
        )
        return rec, unknown


def _opt_int(v):
    if v is None:
        return None
    if isinstance(v, bool) or not float(v).is_integer():
        raise ValueError(f"expected an integer, got {v!r}")
    return int(v)


@dataclass(frozen=True)
class CommentLink:
    user_id: str
    movie_id: str
    rating: float | None = None
    timestamp: int | None = None


@dataclass(frozen=True)
class Library:
    library_id: str
    movies: tuple[MovieRecord, ...] = ()
    users: frozenset[str] = frozenset()
    comments: tuple[CommentLink, ...] = ()
    unknown_fields: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.movies)

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.movies]

    def movie(self, movie_id: str) -> MovieRecord:
        return self.by_id[movie_id]

    @property
    def by_id(self) -> dict[str, MovieRecord]:
        cached = self.__dict__.get("_by_id")
        if cached is None:
            cached = {m.id: m for m in self.movies}
            object.__setattr__(self, "_by_id", cached)
        return cached

    def without(self, movie_ids: Iterable[str]) -> "Library":
        """Copy of the library with the given movies and their comment links removed."""
        drop = set(movie_ids)
        return Library(
            library_id=self.library_id,
            movies=tuple(m for m in self.movies if m.id not in drop),
            users=self.users,
            comments=tuple(c for c in self.comments if c.movie_id not in drop),
        )


@dataclass(frozen=True)
class AnchorLinkSet:
    """Undirected links, stored oriented as (lib_a id, lib_b id).

    Known links are one-to-one.  Threshold inference can produce one-to-many
    links; those sets are built with ``one_to_one=False`` and skip the check.
    """

    lib_a: str
    lib_b: str
    links: frozenset[tuple[str, str]] = frozenset()
    one_to_one: bool = field(default=True, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "links", frozenset(self.links))
        if not self.one_to_one:
            return
        seen_a, seen_b = set(), set()
        for a, b in sorted(self.links):
            if a in seen_a:
                raise CardinalityError(a, "a")
            if b in seen_b:
                raise CardinalityError(b, "b")
            seen_a.add(a)
            seen_b.add(b)

    def __len__(self):
        return len(self.links)

    def __iter__(self) -> Iterator[tuple[str, str]]:
        return iter(sorted(self.links))

    def __contains__(self, pair):
        return tuple(pair) in self.links

    def transposed(self) -> "AnchorLinkSet":
        return AnchorLinkSet(
            self.lib_b, self.lib_a, frozenset((b, a) for a, b in self.links), self.one_to_one
        )

    def matched_a(self) -> set[str]:
        return {a for a, _ in self.links}

    def matched_b(self) -> set[str]:
        return {b for _, b in self.links}

    def a_to_b(self) -> dict[str, str]:
        return dict(self.links)

    def b_to_a(self) -> dict[str, str]:
        return {b: a for a, b in self.links}


@dataclass(frozen=True)
class LabeledPair:
    id_a: str
    id_b: str
    label: int

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label!r}")


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self):
        return len(self.violations)

    def __str__(self):
        if self.ok:
            return "no violations"
        return "\n".join(f"[{v.kind}] {v.subject}: {v.message}" for v in self.violations)


def validate_library(lib: Library) -> ValidationReport:
    report = ValidationReport()
    seen: dict[str, int] = {}
    for m in lib.movies:
        seen[m.id] = seen.get(m.id, 0) + 1
    for mid, n in sorted(seen.items()):
        if n > 1:
            report.violations.append(Violation("duplicate_id", mid, f"appears {n} times"))
    for m in lib.movies:
        if m.rating is not None and not (0.0 <= m.rating <= 10.0 and math.isfinite(m.rating)):
            report.violations.append(Violation("range", m.id, f"rating {m.rating} outside [0, 10]"))
        for name in ("comment_count", "length_minutes"):
            v = getattr(m, name)
            if v is not None and v < 0:
                report.violations.append(Violation("range", m.id, f"{name} {v} is negative"))
        if len(m.top_comments) > MAX_TOP_COMMENTS:
            report.violations.append(
                Violation("range", m.id, f"{len(m.top_comments)} top comments exceed {MAX_TOP_COMMENTS}")
            )
    for c in lib.comments:
        if c.movie_id not in seen:
            report.violations.append(
                Violation("dangling_comment", c.movie_id, f"comment by {c.user_id!r} references a missing movie")
            )
    return report


# -- storage -----------------------------------------------------------------


def _header(**extra) -> str:
    return json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION, **extra}, sort_keys=True)


def _read_jsonl(path: Path) -> tuple[dict, Iterator[tuple[int, dict]]]:
    """Return the header object and an iterator over (line number, object)."""
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(path, 1, "missing header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(path, 1, f"invalid header: {exc.msg}") from None
    if (
        not isinstance(header, dict)
        or header.get("format") != FORMAT_NAME
        or header.get("version") != FORMAT_VERSION
    ):
        raise ParseError(path, 1, f'header must be {{"format": "{FORMAT_NAME}", "version": {FORMAT_VERSION}}}')

    def body():
        for no, raw in enumerate(lines[1:], start=2):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(path, no, exc.msg) from None
            if not isinstance(obj, dict):
                raise ParseError(path, no, "expected a JSON object")
            yield no, obj

    return header, body()


def sidecar_paths(path: str | Path) -> tuple[Path, Path]:
    p = Path(path)
    stem = p.name[: -len(".jsonl")] if p.name.endswith(".jsonl") else p.name
    return p.with_name(stem + ".users.jsonl"), p.with_name(stem + ".comments.jsonl")


def load_library(path: str | Path) -> Library:
    path = Path(path)
    if not path.exists():
        raise InputError(f"library file not found: {path}")
    header, body = _read_jsonl(path)
    movies = []
    unknown = 0
    for no, obj in body:
        try:
            rec, n_unknown = MovieRecord.from_json(obj)
        except (ValueError, TypeError) as exc:
            raise ParseError(path, no, str(exc)) from None
        movies.append(rec)
        unknown += n_unknown

    counts: dict[str, int] = {}
    for m in movies:
        counts[m.id] = counts.get(m.id, 0) + 1
    dups = [mid for mid, n in counts.items() if n > 1]
    if dups:
        raise DuplicateIdError(dups, str(path))

    users_path, comments_path = sidecar_paths(path)
    users: set[str] = set()
    if users_path.exists():
        _, ubody = _read_jsonl(users_path)
        for no, obj in ubody:
            if "id" not in obj:
                raise ParseError(users_path, no, "user record lacks 'id'")
            users.add(str(obj["id"]))
    comments = []
    if comments_path.exists():
        _, cbody = _read_jsonl(comments_path)
        for no, obj in cbody:
            try:
                comments.append(
                    CommentLink(
                        user_id=str(obj["user"]),
                        movie_id=str(obj["movie"]),
                        rating=None if obj.get("rating") is None else float(obj["rating"]),
                        timestamp=_opt_int(obj.get("timestamp")),
                    )
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise ParseError(comments_path, no, f"bad comment link: {exc}") from None

    if unknown:
        logger.warning("%s: ignored %d unknown field(s)", path, unknown)
    lib = Library(
        library_id=str(header.get("library_id", path.stem)),
        movies=tuple(movies),
        users=frozenset(users),
        comments=tuple(comments),
        unknown_fields=unknown,
    )
    report = validate_library(lib)
    if not report.ok:
        raise InputError(f"{path}: invalid library\n{report}")
    return lib


def save_library(lib: Library, path: str | Path) -> None:
    """Write the movie file, plus sidecars when the library has users or comments."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_header(library_id=lib.library_id)]
    lines += [json.dumps(m.to_json(), ensure_ascii=False, sort_keys=True) for m in lib.movies]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    users_path, comments_path = sidecar_paths(path)
    if lib.users:
        ulines = [_header(library_id=lib.library_id)]
        ulines += [json.dumps({"id": u}) for u in sorted(lib.users)]
        users_path.write_text("\n".join(ulines) + "\n", encoding="utf-8")
    if lib.comments:
        clines = [_header(library_id=lib.library_id)]
        for c in lib.comments:
            obj = {"user": c.user_id, "movie": c.movie_id}
            if c.rating is not None:
                obj["rating"] = c.rating
            if c.timestamp is not None:
                obj["timestamp"] = c.timestamp
            clines.append(json.dumps(obj, sort_keys=True))
        comments_path.write_text("\n".join(clines) + "\n", encoding="utf-8")


def load_anchor_links(path: str | Path, lib_a: Library, lib_b: Library) -> AnchorLinkSet:
    """Load links and orient them as (lib_a id, lib_b id).

    The header may carry ``lib_a``/``lib_b`` library ids; when they name the
    passed libraries in swapped order, the file is read transposed.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"anchor link file not found: {path}")
    header, body = _read_jsonl(path)
    swapped = header.get("lib_a") == lib_b.library_id and header.get("lib_b") == lib_a.library_id
    if swapped and lib_a.library_id == lib_b.library_id:
        swapped = False
    ids_a, ids_b = lib_a.by_id, lib_b.by_id
    pairs = []
    for no, obj in body:
        try:
            a, b = str(obj["a"]), str(obj["b"])
        except KeyError as exc:
            raise ParseError(path, no, f"missing key {exc}") from None
        if swapped:
            a, b = b, a
        if a not in ids_a:
            raise DanglingIdError(a, lib_a.library_id)
        if b not in ids_b:
            raise DanglingIdError(b, lib_b.library_id)
        pairs.append((a, b))
    seen_a, seen_b = set(), set()
    for a, b in pairs:
        if a in seen_a:
            raise CardinalityError(a, "a")
        if b in seen_b:
            raise CardinalityError(b, "b")
        seen_a.add(a)
        seen_b.add(b)
    return AnchorLinkSet(lib_a.library_id, lib_b.library_id, frozenset(pairs))


def save_anchor_links(links: AnchorLinkSet, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [_header(lib_a=links.lib_a, lib_b=links.lib_b)]
    lines += [json.dumps({"a": a, "b": b}, ensure_ascii=False) for a, b in links]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
