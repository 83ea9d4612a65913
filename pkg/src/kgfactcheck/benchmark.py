"""Dataset construction and T/F/U evaluation."""

from __future__ import annotations

import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .inference import FALSE, TRUE, UNDECIDED
from .render import verdict_to_dict
from .triple_store import Claim, Term, Triple, TripleStore, parse_term

log = logging.getLogger(__name__)


class InsufficientCandidates(ValueError):
    def __init__(self, message: str, available: int):
        self.available = available
        super().__init__(message)


@dataclass(frozen=True)
class LabeledClaim:
    claim: Claim
    gold: str

    def __post_init__(self):
        if self.gold not in (TRUE, FALSE):
            raise ValueError(f"gold label must be true or false, got {self.gold!r}")


@dataclass
class EvalCounts:
    correct: int = 0
    incorrect: int = 0
    undecided: int = 0

    @property
    def total(self) -> int:
        return self.correct + self.incorrect + self.undecided


@dataclass(frozen=True)
class EvalMetrics:
    precision: float
    recall: float
    f_score: float


def metrics(counts: EvalCounts) -> EvalMetrics:
    """precision = T/(T+F) (0 if nothing decided), recall = T/(T+F+U)."""
    t, f = counts.correct, counts.incorrect
    decided = t + f
    precision = t / decided if decided else 0.0
    recall = t / counts.total if counts.total else 0.0
    f_score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalMetrics(precision, recall, f_score)


# --- sampling ----------------------------------------------------------------

def negative_candidates(predicate: str, store: TripleStore) -> list[tuple[Term, Term]]:
    """All pairs meeting the three negative-example conditions, sorted.

    Pairs related by another predicate are enumerated first, then filtered
    for absence under ``predicate`` and a shared subject or object with it.
    """
    pairs = set()
    for p in store.predicates:
        if p == predicate:
            continue
        for t in store.match(None, p, None):
            pairs.add((t.subject, t.object))
    out = []
    for x, y in pairs:
        if store.count(x, predicate, y):
            continue
        if store.count(x, predicate, None) or store.count(None, predicate, y):
            out.append((x, y))
    out.sort()
    return out


def _sample_negatives(predicate, store, m, rng, strict):
    cands = negative_candidates(predicate, store)
    if len(cands) < m:
        msg = f"only {len(cands)} negative candidates for {predicate}, {m} requested"
        if strict:
            raise InsufficientCandidates(msg, len(cands))
        log.warning(msg)
        m = len(cands)
    return rng.sample(cands, m)


def sample_negative_examples(predicate: str, store: TripleStore, m: int, seed: int,
                             strict: bool = False) -> list[tuple[Term, Term]]:
    """``m`` distinct negative pairs for ``predicate``, deterministic in ``seed``.

    Returns fewer pairs (with a logged warning) when the store cannot supply
    ``m``, unless ``strict`` is set, in which case InsufficientCandidates is
    raised.
    """
    return _sample_negatives(predicate, store, m, random.Random(seed), strict)


def build_dataset(predicate: str, store: TripleStore, n_true: int, n_false: int,
                  seed: int) -> tuple[list[LabeledClaim], TripleStore]:
    """Sample true claims from the store and false ones from the negative
    sampler; the returned store is a copy with the true claims removed."""
    rng = random.Random(seed)
    positives = store.match(None, predicate, None)
    if len(positives) < n_true:
        raise InsufficientCandidates(
            f"only {len(positives)} {predicate} triples, {n_true} requested", len(positives))
    chosen = rng.sample(positives, n_true)
    negatives = _sample_negatives(predicate, store, n_false, rng, strict=True)
    out = store.copy()
    for t in chosen:
        out.remove_triple(t)
    claims = [LabeledClaim(Claim(t), TRUE) for t in chosen]
    claims += [LabeledClaim(Claim(Triple(x, predicate, y)), FALSE) for x, y in negatives]
    return claims, out


def dataset_to_tsv(claims: list[LabeledClaim]) -> str:
    return "".join(f"{c.claim.triple.subject}\t{c.claim.predicate}\t{c.claim.triple.object}"
                   f"\t{c.gold}\n" for c in claims)


def write_dataset(claims: list[LabeledClaim], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dataset_to_tsv(claims))


def read_dataset(path) -> list[LabeledClaim]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(fields)}")
            s, p, o, gold = (f.strip() for f in fields)
            t = Triple(parse_term(s), p, parse_term(o))
            out.append(LabeledClaim(Claim(t), gold.lower()))
    return out


# --- evaluation --------------------------------------------------------------

@dataclass
class ClaimResult:
    claim: LabeledClaim
    outcome: str            # "T", "F" or "U"
    verdict: Optional[object] = None
    diagnostic: Optional[str] = None


@dataclass
class EvalReport:
    mode: str
    results: list = field(default_factory=list)
    oracle_calls: int = 0

    def counts(self, gold: Optional[str] = None) -> EvalCounts:
        c = EvalCounts()
        for r in self.results:
            if gold is not None and r.claim.gold != gold:
                continue
            if r.outcome == "T":
                c.correct += 1
            elif r.outcome == "F":
                c.incorrect += 1
            else:
                c.undecided += 1
        return c

    def metrics(self, gold: Optional[str] = None) -> EvalMetrics:
        return metrics(self.counts(gold))

    def to_dict(self, config: Optional[dict] = None) -> dict:
        blocks = {}
        for name, gold in (("all", None), ("true_claims", TRUE), ("false_claims", FALSE)):
            c, m = self.counts(gold), self.metrics(gold)
            blocks[name] = {"correct": c.correct, "incorrect": c.incorrect,
                            "undecided": c.undecided, "total": c.total,
                            "precision": m.precision, "recall": m.recall,
                            "f_score": m.f_score}
        claims = []
        for r in self.results:
            t = r.claim.claim.triple
            claims.append({
                "subject": t.subject.value, "predicate": t.predicate, "object": t.object.value,
                "gold": r.claim.gold, "outcome": r.outcome,
                "label": r.verdict.label if r.verdict is not None else UNDECIDED,
                "diagnostic": r.diagnostic,
                "verdict": verdict_to_dict(r.verdict) if r.verdict is not None else None,
            })
        out = {"mode": self.mode, "metrics": blocks, "oracle_calls": self.oracle_calls,
               "claims": claims}
        if config is not None:
            out["config"] = config
        return out

    def to_json(self, config: Optional[dict] = None) -> str:
        return json.dumps(self.to_dict(config), indent=2, sort_keys=True, ensure_ascii=False)

    def summary_table(self) -> str:
        cols = [("True claims", TRUE), ("False claims", FALSE), ("All", None)]
        rows = []
        header = f"{self.mode:<16}" + "".join(f"{name:>14}" for name, _ in cols)
        rows.append(header)
        counts = [self.counts(g) for _, g in cols]
        mets = [self.metrics(g) for _, g in cols]
        for label, attr in (("Correct", "correct"), ("Incorrect", "incorrect"),
                            ("Undecided", "undecided")):
            rows.append(f"{label:<16}" + "".join(
                f"{getattr(c, attr):>9}/{c.total:<4}" for c in counts))
        for label, attr in (("Precision", "precision"), ("Recall", "recall"),
                            ("F-score", "f_score")):
            rows.append(f"{label:<16}" + "".join(f"{getattr(m, attr):>14.2f}" for m in mets))
        return "\n".join(rows) + "\n"


def _outcome(gold: str, label: str) -> str:
    if label == UNDECIDED:
        return "U"
    return "T" if label == gold else "F"


def evaluate(claims: list[LabeledClaim], mode: str, checker, jobs: int = 1) -> EvalReport:
    """Check every claim in ``mode``; failures count as undecided."""

    def run(lc: LabeledClaim) -> ClaimResult:
        try:
            v = checker.check(lc.claim, mode)
        except Exception as exc:  # recorded per claim, never fatal for the batch
            log.warning("claim %s failed: %s", lc.claim, exc)
            return ClaimResult(lc, "U", None, f"{type(exc).__name__}: {exc}")
        return ClaimResult(lc, _outcome(lc.gold, v.label), v)

    calls_before = checker.oracle_calls
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, claims))
    else:
        results = [run(c) for c in claims]
    return EvalReport(mode, results, checker.oracle_calls - calls_before)
