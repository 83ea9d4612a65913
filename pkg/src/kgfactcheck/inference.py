"""Deciding a claim from its ground program.

Three modes are supported:

* pure ASP: forward-chain all ground rules over all evidence, ignoring
  weights, and read the claim off the least model;
* MAP: find the most probable stable model of the weighted program
  (hard rules first, then the sum of satisfied soft weights);
* probability: normalise the weights of all stable models.

KG evidence atoms are fixed true.  The search space is the oracle evidence
atoms plus the claim atom and its negation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from .evidence import KG
from .grounding import GroundProgram, triple_to_atom
from .rules import Atom

log = logging.getLogger(__name__)

TRUE = "true"
FALSE = "false"
UNDECIDED = "undecided"

PURE_ASP = "pure-asp"
MAP = "map"
MAP_WEB = "map+web"
MODES = (PURE_ASP, MAP, MAP_WEB)

DEFAULT_SEARCH_BOUND = 20
BRUTE_FORCE_BELOW = 12

# tie-break order among equally weighted models: neither, both, neg only, claim only
_CLASS_RANK = {(False, False): 0, (True, True): 1, (False, True): 2, (True, False): 3}


class SearchBoundExceeded(RuntimeError):
    pass


def label_of(has_claim: bool, has_neg: bool) -> str:
    if has_claim and not has_neg:
        return TRUE
    if has_neg and not has_claim:
        return FALSE
    return UNDECIDED


@dataclass(frozen=True)
class WeightedModel:
    interpretation: frozenset
    satisfied_rule_ids: frozenset
    unnormalized_weight: float
    hard_violations: int


@dataclass(frozen=True)
class BodyFact:
    atom: Atom
    provenance: str
    confidence: Optional[float]
    weight: Optional[float]


@dataclass(frozen=True)
class FiredRule:
    rule_id: str
    instance: str
    head: Atom
    weight: float
    substitution: tuple
    body: tuple


@dataclass
class Explanation:
    fired: list = field(default_factory=list)
    supporting: list = field(default_factory=list)
    conflicting: list = field(default_factory=list)


@dataclass
class Verdict:
    claim: object
    label: str
    mode: str
    explanation: Explanation
    probability: Optional[float] = None
    model: Optional[WeightedModel] = None
    tied_labels: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    @property
    def decided(self) -> bool:
        return self.label != UNDECIDED


# --- compiled program --------------------------------------------------------

@dataclass
class _Item:
    id: str
    head: int            # bit of head atom, 0 for constraints
    body: int            # mask over decision atoms
    weight: float
    hard: bool
    always_sat: bool     # head fixed true, or a body atom that can never hold
    definite: bool       # contributes to the least model when satisfied


class _Compiled:
    def __init__(self, gp: GroundProgram):
        self.gp = gp
        ev = gp.evidence_by_atom()
        self.fixed = frozenset(a for a, e in ev.items() if e.provenance == KG)
        oracle = sorted(a for a, e in ev.items() if e.provenance != KG)
        decision = [a for a in oracle]
        for a in (gp.claim_atom, gp.neg_claim_atom):
            if a not in self.fixed and a not in decision:
                decision.append(a)
        self.atoms = decision
        self.bit = {a: 1 << i for i, a in enumerate(decision)}
        self.n = len(decision)
        self.full = (1 << self.n) - 1
        self.items: list[_Item] = []
        self.instance_ids = []

        for a in oracle:
            e = ev[a]
            self.items.append(_Item(f"fact:{a}", self.bit[a], 0, e.weight, e.is_hard,
                                    False, True))
        counts: dict = {}
        for g in gp.ground_rules:
            counts[g.rule_id] = counts.get(g.rule_id, 0) + 1
            iid = f"{g.rule_id}#{counts[g.rule_id]}"
            self.instance_ids.append(iid)
            self.items.append(self._item(iid, g.head, g.body, g.weight, g.is_hard))
        for c in gp.constraints:
            self.items.append(self._item(c.id, None, c.body, c.weight, c.is_hard))

        claim_bit = self.bit.get(gp.claim_atom, 0)
        neg_bit = self.bit.get(gp.neg_claim_atom, 0)
        self.claim_fixed = gp.claim_atom in self.fixed
        self.neg_fixed = gp.neg_claim_atom in self.fixed
        self.claim_bit, self.neg_bit = claim_bit, neg_bit
        self.const_soft = [it.weight for it in self.items if it.always_sat and not it.hard]
        self.live = [it for it in self.items if not it.always_sat]

    def _item(self, iid, head, body, weight, hard) -> _Item:
        always = False
        impossible = False
        mask = 0
        for a in body:
            if a in self.fixed:
                continue
            if a in self.bit:
                mask |= self.bit[a]
            else:
                impossible = always = True      # atom outside the universe never holds
        hbit = 0
        if head is not None:
            if head in self.fixed:
                always = True
            else:
                hbit = self.bit[head]
        return _Item(iid, hbit, mask, weight, hard, always, head is not None and not impossible)

    # evaluation of a full assignment

    def has(self, mask: int, which: str) -> bool:
        if which == "claim":
            return self.claim_fixed or bool(mask & self.claim_bit)
        return self.neg_fixed or bool(mask & self.neg_bit)

    def rank(self, mask: int) -> int:
        return _CLASS_RANK[self.has(mask, "claim"), self.has(mask, "neg")]

    def satisfied(self, it: _Item, mask: int) -> bool:
        if it.always_sat:
            return True
        if it.body & ~mask:
            return True
        return bool(it.head and (mask & it.head))

    def score(self, mask: int) -> tuple[int, float]:
        viol = 0
        soft = list(self.const_soft)
        for it in self.live:
            if self.satisfied(it, mask):
                if not it.hard:
                    soft.append(it.weight)
            elif it.hard:
                viol += 1
        return viol, math.fsum(soft)

    def is_stable(self, mask: int) -> bool:
        lm = 0
        rules = [it for it in self.items if it.definite and it.head and self.satisfied(it, mask)]
        changed = True
        while changed:
            changed = False
            for it in rules:
                if not (lm & it.head) and (it.body & ~lm) == 0:
                    lm |= it.head
                    changed = True
        return lm == mask

    def model(self, mask: int) -> WeightedModel:
        viol, soft = self.score(mask)
        true_atoms = self.fixed | {a for a in self.atoms if mask & self.bit[a]}
        sat = frozenset(it.id for it in self.items
                        if not it.id.startswith("fact:") and self.satisfied(it, mask))
        return WeightedModel(frozenset(true_atoms), sat, soft, viol)

    def mask_key(self, mask: int) -> tuple:
        return tuple(sorted(str(a) for a in self.atoms if mask & self.bit[a]))

    # partial assignments, for branch and bound

    def bound(self, assigned: int, values: int) -> tuple[int, float]:
        viol = 0
        soft = list(self.const_soft)
        for it in self.live:
            if it.body & assigned & ~values:
                status = 1
            elif it.head and (it.head & assigned & values):
                status = 1
            elif (it.body & ~(assigned & values)) == 0 and (
                    not it.head or it.head & assigned & ~values):
                status = -1
            else:
                status = 0
            if status == 1:
                if not it.hard:
                    soft.append(it.weight)
            elif status == -1:
                if it.hard:
                    viol += 1
            elif not it.hard and it.weight > 0:
                soft.append(it.weight)
        return viol, math.fsum(soft)


class _Search:
    """Tracks the optimum and the best score of each claim-atom class."""

    def __init__(self, cp: _Compiled):
        self.cp = cp
        self.best = None          # (viol, -soft, rank, key)
        self.best_mask = None
        self.class_best: dict = {}

    def offer(self, mask: int) -> None:
        cp = self.cp
        if not cp.is_stable(mask):
            return
        viol, soft = cp.score(mask)
        rank = cp.rank(mask)
        key = (viol, -soft, rank, cp.mask_key(mask))
        prev = self.class_best.get(rank)
        if prev is None or (viol, -soft) < prev:
            self.class_best[rank] = (viol, -soft)
        if self.best is None or key < self.best:
            self.best = key
            self.best_mask = mask

    def worse_than_best(self, viol: int, soft_ub: float) -> bool:
        return self.best is not None and (viol, -soft_ub) > self.best[:2]


def _brute_force(cp: _Compiled, search: _Search) -> None:
    for mask in range(cp.full + 1):
        search.offer(mask)


def _branch_and_bound(cp: _Compiled, search: _Search) -> None:
    n = cp.n

    def visit(i: int, assigned: int, values: int) -> None:
        if i == n:
            search.offer(values)
            return
        viol, soft_ub = cp.bound(assigned, values)
        if search.worse_than_best(viol, soft_ub):
            return
        bit = 1 << i
        visit(i + 1, assigned | bit, values | bit)
        visit(i + 1, assigned | bit, values)

    visit(0, 0, 0)


def _check_bound(cp: _Compiled, search_bound: int) -> None:
    if cp.n > search_bound:
        raise SearchBoundExceeded(
            f"{cp.n} decision atoms exceed the exact-search bound of {search_bound}")


def map_inference(gp: GroundProgram, mode: str = MAP,
                  search_bound: int = DEFAULT_SEARCH_BOUND,
                  brute_force_below: int = BRUTE_FORCE_BELOW) -> tuple[Verdict, WeightedModel]:
    """Most probable stable model of the weighted ground program.

    Models are ranked by hard-rule violations, then by total satisfied soft
    weight.  Ties prefer neither claim atom, then the negated atom; labels
    of other equally good models are listed in ``Verdict.tied_labels``.
    """
    cp = _Compiled(gp)
    _check_bound(cp, search_bound)
    search = _Search(cp)
    if cp.n < brute_force_below:
        _brute_force(cp, search)
    else:
        _branch_and_bound(cp, search)
    mask = search.best_mask
    model = cp.model(mask)
    label = label_of(cp.has(mask, "claim"), cp.has(mask, "neg"))
    best_score = search.best[:2]
    tied = sorted({_rank_label(r) for r, s in search.class_best.items()
                   if s == best_score and r != search.best[2]} - {label})
    explanation = extract_explanation(model, gp, label)
    verdict = Verdict(gp.claim, label, mode, explanation, None, model, tied,
                      list(gp.diagnostics))
    return verdict, model


def _rank_label(rank: int) -> str:
    for (c, n), r in _CLASS_RANK.items():
        if r == rank:
            return label_of(c, n)
    raise ValueError(rank)


def claim_probability(gp: GroundProgram, search_bound: int = DEFAULT_SEARCH_BOUND) -> float:
    """Probability that the claim atom holds, normalising over stable models.

    Only the models with the fewest hard violations keep probability mass
    (the limit of the hard weight going to infinity).
    """
    cp = _Compiled(gp)
    _check_bound(cp, search_bound)
    scored = []
    for mask in range(cp.full + 1):
        if cp.is_stable(mask):
            viol, soft = cp.score(mask)
            scored.append((viol, soft, cp.has(mask, "claim")))
    min_viol = min(v for v, _, _ in scored)
    kept = [(s, c) for v, s, c in scored if v == min_viol]
    top = max(s for s, _ in kept)
    total = math.fsum(math.exp(s - top) for s, _ in kept)
    hit = math.fsum(math.exp(s - top) for s, c in kept if c)
    return hit / total


def least_model(definite_rules, facts) -> frozenset:
    """Least fixpoint of forward chaining ``definite_rules`` from ``facts``.

    Rules are any objects with ``head`` and ``body`` (an iterable of atoms).
    """
    model = set(facts)
    pending = list(definite_rules)
    changed = True
    while changed:
        changed = False
        rest = []
        for r in pending:
            if r.head in model:
                continue
            if all(a in model for a in r.body):
                model.add(r.head)
                changed = True
            else:
                rest.append(r)
        pending = rest
    return frozenset(model)


def check_pure_asp(gp: GroundProgram) -> Verdict:
    """Unweighted check: the claim holds if derived and nothing contradicts it.

    Deriving both the claim and its negation, or the claim while the store
    holds another object for a functional constraint, gives undecided.
    """
    facts = {triple_to_atom(e.triple) for e in gp.evidence}
    lm = least_model(gp.ground_rules, facts)
    has_c = gp.claim_atom in lm
    has_n = gp.neg_claim_atom in lm
    diagnostics = list(gp.diagnostics)
    label = label_of(has_c, has_n)
    if has_c and has_n:
        diagnostics.append("claim and its negation both derived; mutual exclusion violated")
    if label == TRUE:
        for c in gp.constraints:
            if c.kind == "functionality" and all(a in lm for a in c.body):
                diagnostics.append(f"functionality violated by {c.body[1]}")
                label = UNDECIDED
                break
    cp = _Compiled(gp)
    mask = sum(cp.bit[a] for a in cp.atoms if a in lm)
    viol, soft = cp.score(mask)
    sat = frozenset(it.id for it in cp.items
                    if not it.id.startswith("fact:") and cp.satisfied(it, mask))
    model = WeightedModel(lm, sat, soft, viol)
    explanation = extract_explanation(model, gp, label)
    return Verdict(gp.claim, label, PURE_ASP, explanation, None, model, [], diagnostics)


def _fired(gp: GroundProgram, atoms: frozenset) -> list[FiredRule]:
    ev = gp.evidence_by_atom()
    out = []
    counts: dict = {}
    for g in gp.ground_rules:
        counts[g.rule_id] = counts.get(g.rule_id, 0) + 1
        if not all(a in atoms for a in g.body):
            continue
        body = []
        for a in g.body:
            e = ev.get(a)
            if e is None:
                body.append(BodyFact(a, "derived", None, None))
            else:
                body.append(BodyFact(a, e.provenance, e.confidence,
                                     None if e.is_hard else e.weight))
        out.append(FiredRule(g.rule_id, f"{g.rule_id}#{counts[g.rule_id]}", g.head, g.weight,
                             g.substitution, tuple(body)))
    return out


def extract_explanation(model: WeightedModel, gp: GroundProgram, label: str) -> Explanation:
    """Fired rules of the deciding model, split into supporting and conflicting.

    For a decided label, supporting rules conclude the verdict atom and
    conflicting ones conclude the opposite atom that the model rejects.  For
    undecided, every fired rule is conflicting.
    """
    atoms = model.interpretation
    fired = _fired(gp, atoms)
    if label == TRUE:
        target, other = gp.claim_atom, gp.neg_claim_atom
    elif label == FALSE:
        target, other = gp.neg_claim_atom, gp.claim_atom
    else:
        return Explanation(fired, [], list(fired))
    supporting = [f for f in fired if f.head == target]
    conflicting = [f for f in fired if f.head == other and other not in atoms]
    return Explanation(fired, supporting, conflicting)


def replay_supporting(verdict: Verdict) -> list[str]:
    """Supporting rules whose body does not hold in the deciding model."""
    bad = []
    if verdict.model is None:
        return bad
    for f in verdict.explanation.supporting:
        if not all(b.atom in verdict.model.interpretation for b in f.body):
            bad.append(f.instance)
        if f.head not in verdict.model.interpretation:
            bad.append(f.instance)
    return bad
