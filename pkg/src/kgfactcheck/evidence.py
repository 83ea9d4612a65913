"""External evidence: oracle providers and conversion to weighted facts.

A provider answers "is this ground triple true, and how likely?".  Two are
included: :class:`FileStubProvider`, backed by a TSV fixture, and
:class:`HttpProvider`, which POSTs the triple as JSON to an endpoint.
Responses above 0.5 become soft evidence facts weighted by log-odds.
"""

from __future__ import annotations

import json
import logging
import math
import os
import threading
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Protocol

from .triple_store import MalformedRecord, Triple, parse_term

log = logging.getLogger(__name__)

KG = "kg"
ORACLE = "oracle"
ACCEPT_THRESHOLD = 0.5
MAX_ORACLE_CONFIDENCE = 0.9999


class FixtureParseError(ValueError):
    pass


class ProviderUnavailable(RuntimeError):
    pass


class MalformedResponse(ValueError):
    pass


@dataclass(frozen=True)
class EvidenceFact:
    triple: Triple
    provenance: str
    confidence: float
    weight: float

    @property
    def is_hard(self) -> bool:
        return self.weight == math.inf


def kg_fact(t: Triple) -> EvidenceFact:
    return EvidenceFact(t, KG, 1.0, math.inf)


def oracle_fact(t: Triple, probability: float) -> EvidenceFact:
    """Soft fact for an accepted oracle answer (probability must exceed 0.5)."""
    if not probability > ACCEPT_THRESHOLD:
        raise ValueError(f"oracle probability {probability} not above {ACCEPT_THRESHOLD}")
    c = min(probability, MAX_ORACLE_CONFIDENCE)
    return EvidenceFact(t, ORACLE, c, math.log(c) - math.log1p(-c))


@dataclass(frozen=True)
class OracleResponse:
    triple: Triple
    probability: float
    note: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise MalformedResponse(f"probability {self.probability} outside [0, 1]")


class EvidenceProvider(Protocol):
    def lookup(self, triple: Triple) -> Optional[OracleResponse]:
        ...


class FileStubProvider:
    """Exact-match lookup table loaded from ``subject\\tpredicate\\tobject\\tprobability``."""

    def __init__(self, table: dict):
        self._table = dict(table)

    def __len__(self):
        return len(self._table)

    @classmethod
    def from_text(cls, text: str, normalize_spaces: bool = False) -> "FileStubProvider":
        table = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = [f.strip() for f in line.split("\t")]
            if len(fields) != 4:
                raise FixtureParseError(f"line {lineno}: expected 4 fields, got {len(fields)}")
            try:
                t = Triple(parse_term(fields[0], normalize_spaces), fields[1],
                           parse_term(fields[2], normalize_spaces))
                prob = float(fields[3])
            except (MalformedRecord, ValueError) as exc:
                raise FixtureParseError(f"line {lineno}: {exc}") from None
            if not 0.0 <= prob <= 1.0:
                raise FixtureParseError(f"line {lineno}: probability {prob} outside [0, 1]")
            if t in table:
                raise FixtureParseError(f"line {lineno}: duplicate entry for {t}")
            table[t] = OracleResponse(t, prob)
        return cls(table)

    @classmethod
    def from_path(cls, path, normalize_spaces: bool = False) -> "FileStubProvider":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), normalize_spaces)

    def lookup(self, triple: Triple) -> Optional[OracleResponse]:
        return self._table.get(triple)


class HttpProvider:
    """POST ``{"subject", "predicate", "object"}`` to ``endpoint``; expect
    ``{"probability": p, "note": ...}`` back.

    Timeouts, non-2xx statuses and malformed bodies yield ``None`` and are
    tallied in :attr:`report`.
    """

    def __init__(self, endpoint: str, timeout: float = 10.0, session=None):
        import requests

        self.endpoint = endpoint
        self.timeout = timeout
        self._requests = requests
        self._session = session or requests.Session()
        self._lock = threading.Lock()
        self.report: Counter = Counter()

    def _count(self, key: str) -> None:
        with self._lock:
            self.report[key] += 1

    def lookup(self, triple: Triple) -> Optional[OracleResponse]:
        payload = {"subject": triple.subject.value, "predicate": triple.predicate,
                   "object": triple.object.value}
        self._count("requests")
        try:
            resp = self._session.post(self.endpoint, json=payload, timeout=self.timeout)
        except self._requests.Timeout:
            log.warning("oracle timeout for %s", triple)
            self._count("timeout")
            return None
        except self._requests.RequestException as exc:
            log.warning("oracle unavailable for %s: %s", triple, exc)
            self._count("unavailable")
            return None
        if not 200 <= resp.status_code < 300:
            log.warning("oracle returned HTTP %s for %s", resp.status_code, triple)
            self._count("unavailable")
            return None
        try:
            return parse_response(triple, resp.content)
        except MalformedResponse as exc:
            log.warning("malformed oracle response for %s: %s", triple, exc)
            self._count("malformed")
            return None


def parse_response(triple: Triple, body: bytes) -> Optional[OracleResponse]:
    """Parse the wire response; a JSON ``null`` body means "no answer"."""
    try:
        data = json.loads(body)
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedResponse(f"invalid JSON: {exc}") from None
    if data is None:
        return None
    if not isinstance(data, dict) or "probability" not in data:
        raise MalformedResponse("missing 'probability'")
    p = data["probability"]
    if isinstance(p, bool) or not isinstance(p, (int, float)) or math.isnan(p):
        raise MalformedResponse(f"probability is not a number: {p!r}")
    note = data.get("note")
    if note is not None and not isinstance(note, str):
        raise MalformedResponse("note must be a string")
    return OracleResponse(triple, float(p), note)


class CachingProvider:
    """Per-run cache in front of a provider.

    Concurrent lookups of the same triple share one backend call.  Provider
    exceptions are treated as "no answer" and recorded.  ``persist`` may
    name a JSON file used as a cross-run cache.
    """

    def __init__(self, provider: EvidenceProvider, persist: Optional[str] = None):
        self.provider = provider
        self.persist = persist
        self._cache: dict = {}
        self._inflight: dict = {}
        self._lock = threading.Lock()
        self.calls = 0
        self.report: Counter = Counter()
        if persist and os.path.exists(persist):
            self._load(persist)

    def _load(self, path: str) -> None:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        for key, value in data.items():
            s, p, o = key.split("\t")
            t = Triple(parse_term(s), p, parse_term(o))
            self._cache[t] = None if value is None else OracleResponse(t, float(value))

    def save(self) -> None:
        if not self.persist:
            return
        data = {f"{t.subject}\t{t.predicate}\t{t.object}": (None if r is None else r.probability)
                for t, r in sorted(self._cache.items())}
        with open(self.persist, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=1, sort_keys=True)

    def lookup(self, triple: Triple) -> Optional[OracleResponse]:
        with self._lock:
            if triple in self._cache:
                return self._cache[triple]
            event = self._inflight.get(triple)
            owner = event is None
            if owner:
                event = self._inflight[triple] = threading.Event()
                self.calls += 1
        if not owner:
            event.wait()
            return self._cache.get(triple)
        try:
            resp = self.provider.lookup(triple)
        except Exception as exc:
            log.warning("provider failed for %s: %s", triple, exc)
            with self._lock:
                self.report["unavailable"] += 1
            resp = None
        with self._lock:
            self._cache[triple] = resp
            del self._inflight[triple]
        event.set()
        return resp


def query_oracle(requests: Iterable, provider: EvidenceProvider,
                 diagnostics: Optional[list] = None) -> list[EvidenceFact]:
    """Ask ``provider`` about each distinct requested atom, once.

    Answers with probability above 0.5 become oracle facts; everything else
    (low probability, no answer, provider failure) yields no fact.
    """
    seen = []
    distinct = set()
    for r in requests:
        t = r.triple if hasattr(r, "triple") else r
        if t is not None and t not in distinct:
            distinct.add(t)
            seen.append(t)
    facts = []
    for t in sorted(seen):
        try:
            resp = provider.lookup(t)
        except Exception as exc:
            msg = f"ProviderUnavailable: {t}: {exc}"
            log.warning(msg)
            if diagnostics is not None:
                diagnostics.append(msg)
            continue
        if resp is None:
            log.info("no oracle answer for %s", t)
            if diagnostics is not None:
                diagnostics.append(f"unanswered: {t}")
            continue
        if resp.probability > ACCEPT_THRESHOLD:
            facts.append(oracle_fact(t, resp.probability))
        else:
            log.info("oracle rejected %s (p=%s)", t, resp.probability)
    return facts
