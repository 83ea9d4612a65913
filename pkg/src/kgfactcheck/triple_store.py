"""In-memory indexed triple store.

Triples are kept in a set with four secondary indexes: by predicate,
(predicate, subject), (predicate, object) and (subject, object).  Objects
may be entities or literals; literal numbers and dates carry a numeric value
so comparison atoms in rule bodies can be evaluated.
"""

from __future__ import annotations

import io
import logging
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional, Union

log = logging.getLogger(__name__)

ENTITY = "entity"
STRING = "literal-string"
NUMBER = "literal-number"
DATE = "literal-date"

_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_DATE_RE = re.compile(r"^(-?\d{4})-\d{2}(-\d{2})?([T ].*)?$")
_YEAR_RE = re.compile(r"^(-?\d{1,4})")

_NUMERIC_TYPES = {
    "integer", "int", "long", "short", "decimal", "double", "float",
    "nonNegativeInteger", "positiveInteger", "negativeInteger",
    "nonPositiveInteger", "unsignedInt", "unsignedLong",
}
_DATE_TYPES = {"date", "dateTime", "gYear", "gYearMonth"}


class MalformedRecord(ValueError):
    """A record that could not be turned into a triple."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class UnknownPredicate(KeyError):
    pass


@dataclass(frozen=True, order=True)
class Term:
    """An entity or literal.

    Equality and ordering use only ``kind`` and the canonical ``value``.
    """

    kind: str
    value: str
    numeric: Optional[float] = field(default=None, compare=False)

    @classmethod
    def entity(cls, name: str) -> "Term":
        return cls(ENTITY, name)

    @classmethod
    def number(cls, x: float) -> "Term":
        return cls(NUMBER, _canonical_number(float(x)), float(x))

    @classmethod
    def string(cls, text: str) -> "Term":
        return cls(STRING, text)

    @classmethod
    def date(cls, text: str) -> "Term":
        m = _YEAR_RE.match(text)
        return cls(DATE, text, float(m.group(1)) if m else None)

    def __str__(self) -> str:
        if self.kind == STRING:
            return '"' + self.value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        return self.value


def _canonical_number(x: float) -> str:
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def parse_term(text: str, normalize_spaces: bool = False) -> Term:
    """Parse the text form of a term as found in TSV files and claims.

    ``"..."`` is a string literal (optionally ``^^type`` or ``@lang``
    suffixed); bare numbers are numbers; ``YYYY-MM-DD`` and ``YYYY-MM``
    are dates; anything else is an entity identifier.
    """
    text = text.strip()
    if not text:
        raise MalformedRecord("empty term")
    if text.startswith('"'):
        return _parse_quoted(text)
    if text.startswith("<") and text.endswith(">"):
        text = text[1:-1]
    if _NUMBER_RE.match(text):
        return Term.number(float(text))
    if _DATE_RE.match(text):
        return Term.date(text)
    if normalize_spaces:
        text = text.replace(" ", "_")
    if any(c in text for c in "\t\n"):
        raise MalformedRecord(f"bad identifier {text!r}")
    return Term.entity(text)


def _parse_quoted(text: str) -> Term:
    end = _closing_quote(text)
    if end is None:
        raise MalformedRecord(f"unterminated literal {text!r}")
    body = re.sub(r"\\(.)", r"\1", text[1:end])
    suffix = text[end + 1:]
    if not suffix or suffix.startswith("@"):
        return Term.string(body)
    if not suffix.startswith("^^"):
        raise MalformedRecord(f"unexpected text after literal: {suffix!r}")
    dtype = suffix[2:].strip("<>")
    local = re.split(r"[#/:]", dtype)[-1]
    if local in _NUMERIC_TYPES:
        if not _NUMBER_RE.match(body.strip()):
            raise MalformedRecord(f"not a number: {body!r}")
        return Term.number(float(body))
    if local in _DATE_TYPES:
        return Term.date(body.strip())
    return Term.string(body)


def _closing_quote(text: str) -> Optional[int]:
    i = 1
    while i < len(text):
        if text[i] == "\\":
            i += 2
            continue
        if text[i] == '"':
            return i
        i += 1
    return None


@dataclass(frozen=True, order=True)
class Triple:
    subject: Term
    predicate: str
    object: Term

    def __post_init__(self):
        if self.subject.kind != ENTITY:
            raise MalformedRecord(f"subject must be an entity, got {self.subject.kind}")

    @classmethod
    def of(cls, subject: str, predicate: str, obj: str) -> "Triple":
        return cls(parse_term(subject), predicate, parse_term(obj))

    def __str__(self) -> str:
        return f"{self.predicate}({self.subject},{self.object})"


@dataclass(frozen=True)
class Claim:
    triple: Triple

    @property
    def predicate(self) -> str:
        return self.triple.predicate

    def __str__(self) -> str:
        return str(self.triple)


@dataclass(frozen=True)
class PredicateStats:
    predicate: str
    triple_count: int
    distinct_subject_count: int

    @property
    def functionality(self) -> float:
        if self.triple_count == 0:
            return 0.0
        return self.distinct_subject_count / self.triple_count


class Var:
    """Placeholder for an unbound position in :meth:`TripleStore.match`."""

    def __repr__(self):
        return "?"


ANY = Var()

Pattern = Union[Term, Var, None]


class TripleStore:
    """Set of triples with lookup indexes.

    Reads are safe to share between threads once loading is done;
    :meth:`remove_triple` and :meth:`add` need exclusive access.
    """

    def __init__(self, triples: Iterable[Triple] = ()):
        self._triples: set[Triple] = set()
        self._by_p: dict[str, set[Triple]] = defaultdict(set)
        self._by_ps: dict[tuple, set[Triple]] = defaultdict(set)
        self._by_po: dict[tuple, set[Triple]] = defaultdict(set)
        self._by_so: dict[tuple, set[Triple]] = defaultdict(set)
        self.load_errors: list[MalformedRecord] = []
        for t in triples:
            self.add(t)

    def __len__(self):
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(sorted(self._triples))

    def __contains__(self, t: Triple) -> bool:
        return t in self._triples

    def __eq__(self, other):
        if not isinstance(other, TripleStore):
            return NotImplemented
        return self._triples == other._triples

    def add(self, t: Triple) -> bool:
        if t in self._triples:
            return False
        self._triples.add(t)
        self._by_p[t.predicate].add(t)
        self._by_ps[t.predicate, t.subject].add(t)
        self._by_po[t.predicate, t.object].add(t)
        self._by_so[t.subject, t.object].add(t)
        return True

    def remove_triple(self, t: Triple) -> bool:
        if t not in self._triples:
            return False
        self._triples.discard(t)
        for index, key in ((self._by_p, t.predicate),
                           (self._by_ps, (t.predicate, t.subject)),
                           (self._by_po, (t.predicate, t.object)),
                           (self._by_so, (t.subject, t.object))):
            bucket = index[key]
            bucket.discard(t)
            if not bucket:
                del index[key]
        return True

    def copy(self) -> "TripleStore":
        return TripleStore(self._triples)

    @property
    def predicates(self) -> list[str]:
        return sorted(self._by_p)

    def terms(self) -> set[Term]:
        out = set()
        for t in self._triples:
            out.add(t.subject)
            out.add(t.object)
        return out

    def _candidates(self, s: Pattern, p: str, o: Pattern) -> set[Triple]:
        s_bound = isinstance(s, Term)
        o_bound = isinstance(o, Term)
        if s_bound and o_bound:
            t = Triple(s, p, o)
            return {t} if t in self._triples else set()
        if s_bound:
            return self._by_ps.get((p, s), set())
        if o_bound:
            return self._by_po.get((p, o), set())
        return self._by_p.get(p, set())

    def match(self, s: Pattern, p: str, o: Pattern) -> list[Triple]:
        """Stored triples unifying with ``(s, p, o)``; unbound positions are
        ``None`` or :data:`ANY`.  Returned in canonical sorted order."""
        if not isinstance(p, str):
            raise ValueError("predicate must be bound")
        return sorted(self._candidates(s, p, o))

    def count(self, s: Pattern, p: str, o: Pattern) -> int:
        return len(self._candidates(s, p, o))

    def predicates_between(self, s: Term, o: Term) -> set[str]:
        return {t.predicate for t in self._by_so.get((s, o), ())}

    def predicate_stats(self, predicate: str) -> PredicateStats:
        triples = self._by_p.get(predicate)
        if not triples:
            raise UnknownPredicate(predicate)
        subjects = {t.subject for t in triples}
        return PredicateStats(predicate, len(triples), len(subjects))

    def to_tsv(self) -> str:
        return "".join(f"{t.subject}\t{t.predicate}\t{t.object}\n" for t in self)

    def write_tsv(self, path: Union[str, os.PathLike]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_tsv())

    @classmethod
    def from_tsv(cls, text: str, normalize_spaces: bool = False) -> "TripleStore":
        return load_triples(io.BytesIO(text.encode("utf-8")), "tsv", normalize_spaces)


def _open_source(source) -> IO[bytes]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "rb")
    if isinstance(source, bytes):
        return io.BytesIO(source)
    return source


def load_triples(source, fmt: str = "tsv", normalize_spaces: bool = False) -> TripleStore:
    """Load a store from a path, bytes, or binary stream.

    Malformed records are skipped and collected in ``store.load_errors``.
    """
    if fmt not in ("tsv", "ntriples"):
        raise ValueError(f"unknown format {fmt!r}")
    parse_line = _parse_tsv_line if fmt == "tsv" else _parse_nt_line
    store = TripleStore()
    fh = _open_source(source)
    try:
        for lineno, raw in enumerate(fh, start=1):
            try:
                line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
            except UnicodeDecodeError as exc:
                store.load_errors.append(MalformedRecord(f"invalid UTF-8: {exc}", lineno))
                continue
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            try:
                store.add(parse_line(line, normalize_spaces))
            except MalformedRecord as exc:
                store.load_errors.append(MalformedRecord(str(exc), lineno))
    finally:
        if fh is not source:
            fh.close()
    for err in store.load_errors:
        log.warning("skipped record: %s", err)
    return store


def _parse_tsv_line(line: str, normalize_spaces: bool) -> Triple:
    fields = line.split("\t")
    if len(fields) != 3:
        raise MalformedRecord(f"expected 3 fields, got {len(fields)}")
    s, p, o = (f.strip() for f in fields)
    if not p or any(c.isspace() for c in p):
        raise MalformedRecord(f"bad predicate {p!r}")
    subject = parse_term(s, normalize_spaces)
    if subject.kind != ENTITY:
        raise MalformedRecord(f"subject must be an entity: {s!r}")
    return Triple(subject, p, parse_term(o, normalize_spaces))


_NT_IRI = r"<([^<>\s]*)>"
_NT_LINE = re.compile(
    r"^\s*" + _NT_IRI + r"\s+" + _NT_IRI + r"\s+(" + _NT_IRI
    + r'|"(?:[^"\\]|\\.)*"(?:\^\^<[^<>\s]*>|@[A-Za-z\-]+)?)\s*\.\s*$'
)


def local_name(iri: str) -> str:
    return re.split(r"[/#]", iri.rstrip("/#"))[-1] or iri


def _parse_nt_line(line: str, normalize_spaces: bool) -> Triple:
    if "_:" in line.split('"')[0]:
        raise MalformedRecord("blank nodes are not supported")
    m = _NT_LINE.match(line)
    if not m:
        raise MalformedRecord("not an N-Triples statement")
    s_iri, p_iri, obj = m.group(1), m.group(2), m.group(3)
    subject = Term.entity(local_name(s_iri))
    if obj.startswith("<"):
        o = Term.entity(local_name(obj[1:-1]))
    else:
        o = _parse_quoted(obj)
    return Triple(subject, local_name(p_iri), o)
