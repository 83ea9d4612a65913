"""Claim-specific grounding of rules over the KG and accepted oracle facts.

For a claim ``p(x0, y0)`` the head variables of every ``p``/``negp`` rule are
bound to ``x0``/``y0`` and the rewritten body is evaluated as a conjunctive
query.  Substitutions where all atoms hold become ground rules; those where
exactly one atom is missing and fully ground become requests for external
evidence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .evidence import EvidenceFact, KG, kg_fact
from .rules import (
    FUNCTIONALITY,
    HARD,
    MUTUAL_EXCLUSION,
    Atom,
    Rule,
    RuleSet,
    Variable,
    negated,
    rules_for_claim,
)
from .triple_store import ENTITY, Claim, Term, Triple, TripleStore

log = logging.getLogger(__name__)

DEFAULT_MAX_SUBSTITUTIONS = 10_000


class NonNumericComparison(ValueError):
    pass


class TruncatedGrounding(Warning):
    pass


def evaluate_comparison(op: str, a: Term, b: Term) -> bool:
    """Evaluate a ground comparison atom.

    ``>``/``<`` compare numeric values (dates compare by year) and raise
    :class:`NonNumericComparison` when either side has none.
    """
    if op in ("!=", "≠"):
        return a != b
    if op == "=":
        return a == b
    if a.numeric is None or b.numeric is None:
        raise NonNumericComparison(f"{op}({a},{b})")
    if op == ">":
        return a.numeric > b.numeric
    if op == "<":
        return a.numeric < b.numeric
    raise ValueError(f"unknown comparison {op!r}")


Substitution = tuple  # sorted ((Variable, Term), ...)


def _freeze(binding: dict) -> Substitution:
    return tuple(sorted(binding.items()))


def substitution_key(sub: Substitution) -> tuple:
    return tuple((v.name, t.kind, t.value) for v, t in sub)


def atom_to_triple(atom: Atom) -> Optional[Triple]:
    if not atom.is_ground or atom.is_comparison or atom.arg1.kind != ENTITY:
        return None
    return Triple(atom.arg1, atom.predicate, atom.arg2)


def triple_to_atom(t: Triple) -> Atom:
    return Atom(t.predicate, t.subject, t.object)


@dataclass(frozen=True)
class GroundRule:
    rule_id: str
    head: Atom
    body: tuple
    weight: float
    substitution: Substitution = ()

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD

    @property
    def bindings(self) -> dict:
        return dict(self.substitution)


@dataclass(frozen=True)
class GroundConstraint:
    id: str
    kind: str
    body: tuple
    weight: float

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD


@dataclass(frozen=True, order=True)
class MissingAtomRequest:
    atom: Atom
    rule_id: str
    substitution: Substitution = ()

    @property
    def triple(self) -> Triple:
        return atom_to_triple(self.atom)


@dataclass
class GroundProgram:
    claim: Claim
    claim_atom: Atom
    neg_claim_atom: Atom
    ground_rules: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    evidence: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)

    def evidence_by_atom(self) -> dict:
        return {triple_to_atom(e.triple): e for e in self.evidence}

    def atoms(self) -> set:
        """Atom universe: evidence atoms plus the two claim atoms."""
        out = {triple_to_atom(e.triple) for e in self.evidence}
        out.add(self.claim_atom)
        out.add(self.neg_claim_atom)
        return out

    def to_text(self) -> str:
        return serialize_program(self)


class _Facts:
    """Store plus extra (oracle) evidence, queried as one fact source."""

    def __init__(self, store: TripleStore, extra: Iterable[EvidenceFact] = ()):
        self.store = store
        self.extra: dict[Triple, EvidenceFact] = {}
        for e in extra:
            self.extra.setdefault(e.triple, e)

    def holds(self, atom: Atom) -> bool:
        t = atom_to_triple(atom)
        return t is not None and (t in self.store or t in self.extra)

    def provenance(self, atom: Atom) -> Optional[EvidenceFact]:
        t = atom_to_triple(atom)
        if t is None:
            return None
        if t in self.store:
            return kg_fact(t)
        return self.extra.get(t)

    def _pattern(self, atom: Atom, binding: dict):
        s = binding.get(atom.arg1) if isinstance(atom.arg1, Variable) else atom.arg1
        o = binding.get(atom.arg2) if isinstance(atom.arg2, Variable) else atom.arg2
        return s, o

    def count(self, atom: Atom, binding: dict) -> int:
        s, o = self._pattern(atom, binding)
        if s is not None and s.kind != ENTITY:
            return 0
        n = self.store.count(s, atom.predicate, o)
        n += sum(1 for t in self.extra if _unifies(t, atom.predicate, s, o))
        return n

    def extend(self, atom: Atom, binding: dict) -> Iterator[dict]:
        s, o = self._pattern(atom, binding)
        if s is not None and s.kind != ENTITY:
            return
        found = self.store.match(s, atom.predicate, o)
        found += sorted(t for t in self.extra
                        if _unifies(t, atom.predicate, s, o) and t not in self.store)
        for t in found:
            new = dict(binding)
            ok = True
            for arg, val in ((atom.arg1, t.subject), (atom.arg2, t.object)):
                if isinstance(arg, Variable):
                    if new.setdefault(arg, val) != val:
                        ok = False
            if ok:
                yield new


def _unifies(t: Triple, p: str, s, o) -> bool:
    return t.predicate == p and (s is None or t.subject == s) and (o is None or t.object == o)


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0
        self.truncated = False

    def take(self) -> bool:
        if self.used >= self.cap:
            self.truncated = True
            return False
        self.used += 1
        return True


def _join(atoms: list, binding: dict, facts: _Facts, budget: _Budget) -> Iterator[dict]:
    if not atoms:
        if budget.take():
            yield binding
        return
    # most selective atom first, source order on ties
    best = min(range(len(atoms)), key=lambda i: (facts.count(atoms[i], binding), i))
    rest = atoms[:best] + atoms[best + 1:]
    for b in facts.extend(atoms[best], binding):
        if budget.truncated:
            return
        yield from _join(rest, b, facts, budget)


def _comparisons_hold(cmps: list, binding: dict, rule_id: str, diagnostics: Optional[list]) -> bool:
    for c in cmps:
        g = c.substitute(binding)
        if not g.is_ground:
            return False
        try:
            if not evaluate_comparison(g.predicate, g.arg1, g.arg2):
                return False
        except NonNumericComparison as exc:
            log.debug("discarding substitution for %s: non-numeric comparison %s", rule_id, exc)
            if diagnostics is not None:
                diagnostics.append(f"{rule_id}: non-numeric comparison {exc}")
            return False
    return True


def _head_binding(rule: Rule, claim: Claim) -> dict:
    return {rule.head.arg1: claim.triple.subject, rule.head.arg2: claim.triple.object}


def ground_rule(rule: Rule, claim: Claim, store: TripleStore,
                extra_evidence: Iterable[EvidenceFact] = (),
                max_substitutions: int = DEFAULT_MAX_SUBSTITUTIONS,
                diagnostics: Optional[list] = None,
                _facts: Optional[_Facts] = None) -> tuple[list, list]:
    """Ground ``rule`` for ``claim``.

    Returns ``(ground_rules, requests)``: complete groundings whose atoms all
    hold in the store or ``extra_evidence`` and whose comparisons are true,
    and single-missing-atom requests for external evidence.  Both lists are
    in canonical order (by substitution).
    """
    if rule.target != claim.predicate:
        raise ValueError(f"rule {rule.id} does not conclude {claim.predicate}")
    facts = _facts or _Facts(store, extra_evidence)
    head = _head_binding(rule, claim)
    atoms = [a for a in rule.body if not a.is_comparison]
    cmps = [a for a in rule.body if a.is_comparison]
    head_atom = rule.head.substitute(head)
    budget = _Budget(max_substitutions)

    grounded = {}
    for b in _join(atoms, dict(head), facts, budget):
        if not _comparisons_hold(cmps, b, rule.id, diagnostics):
            continue
        body = tuple(a.substitute(b) for a in atoms)
        sub = _freeze({v: t for v, t in b.items()})
        key = (head_atom, tuple(sorted(set(body))))
        prev = grounded.get(key)
        if prev is None or substitution_key(sub) < substitution_key(prev.substitution):
            grounded[key] = GroundRule(rule.id, head_atom, body, rule.weight, sub)

    requests = set()
    for i, missing in enumerate(atoms):
        others = atoms[:i] + atoms[i + 1:]
        for b in _join(others, dict(head), facts, budget):
            g = missing.substitute(b)
            if not g.is_ground or atom_to_triple(g) is None or facts.holds(g):
                continue
            if not _comparisons_hold(cmps, b, rule.id, diagnostics):
                continue
            requests.add(MissingAtomRequest(g, rule.id, _freeze(b)))

    if budget.truncated:
        msg = f"{rule.id}: grounding truncated after {budget.cap} substitutions"
        log.warning(msg)
        if diagnostics is not None:
            diagnostics.append(f"TruncatedGrounding: {msg}")

    ground = sorted(grounded.values(), key=lambda g: substitution_key(g.substitution))
    reqs = sorted(requests, key=lambda r: (substitution_key(r.substitution), str(r.atom)))
    return ground, reqs


def _claim_atoms(claim: Claim) -> tuple[Atom, Atom]:
    t = claim.triple
    return Atom(t.predicate, t.subject, t.object), Atom(negated(t.predicate), t.subject, t.object)


def _prepared(rs: RuleSet, store: TripleStore, claim: Claim) -> RuleSet:
    p = claim.predicate
    if rs.constraint(MUTUAL_EXCLUSION, p) is None or rs.constraint(FUNCTIONALITY, p) is None:
        return rs.with_constraints(store)
    return rs


def collect_requests(claim: Claim, rs: RuleSet, store: TripleStore,
                     max_substitutions: int = DEFAULT_MAX_SUBSTITUTIONS,
                     diagnostics: Optional[list] = None) -> list:
    """Missing-atom requests from all rules for the claim, KG evidence only."""
    cr = rules_for_claim(rs, claim)
    facts = _Facts(store)
    out = []
    for rule in cr.rules:
        _, reqs = ground_rule(rule, claim, store, (), max_substitutions, diagnostics, facts)
        out.extend(reqs)
    return out


def build_ground_program(claim: Claim, rs: RuleSet, store: TripleStore,
                         accepted_web_facts: Iterable[EvidenceFact] = (),
                         max_substitutions: int = DEFAULT_MAX_SUBSTITUTIONS) -> GroundProgram:
    """Assemble the ground program for ``claim``.

    Raises :class:`~kgfactcheck.triple_store.UnknownPredicate` when no rule
    concludes the claim predicate.
    """
    web = list(accepted_web_facts)
    diagnostics: list = []
    rs = _prepared(rs, store, claim)
    for d in rs.diagnostics:
        if isinstance(d, str) and claim.predicate in d:
            diagnostics.append(d)
    cr = rules_for_claim(rs, claim)
    c_atom, n_atom = _claim_atoms(claim)
    facts = _Facts(store, web)

    ground_rules = []
    for rule in cr.rules:
        grs, _ = ground_rule(rule, claim, store, (), max_substitutions, diagnostics, facts)
        ground_rules.extend(grs)
    order = {r.id: i for i, r in enumerate(rs.rules)}
    ground_rules.sort(key=lambda g: (order[g.rule_id], substitution_key(g.substitution)))

    p = claim.predicate
    x0, y0 = claim.triple.subject, claim.triple.object
    constraints = []
    mutex = rs.constraint(MUTUAL_EXCLUSION, p)
    if mutex is not None:
        constraints.append(GroundConstraint(mutex.id, MUTUAL_EXCLUSION, (c_atom, n_atom), HARD))
    func = rs.constraint(FUNCTIONALITY, p)
    kg_atoms = []
    if func is not None:
        k = 0
        for t in store.match(x0, p, None):
            if t.object == y0:
                continue
            k += 1
            other = triple_to_atom(t)
            kg_atoms.append(other)
            constraints.append(GroundConstraint(f"{func.id}#{k}", FUNCTIONALITY,
                                                (c_atom, other), func.weight))

    evidence: dict[Triple, EvidenceFact] = {}
    for g in ground_rules:
        for a in g.body:
            e = facts.provenance(a)
            if e is not None and e.provenance == KG:
                evidence.setdefault(e.triple, e)
    for a in kg_atoms:
        t = atom_to_triple(a)
        evidence.setdefault(t, kg_fact(t))
    for e in web:
        if e.triple not in store:
            evidence.setdefault(e.triple, e)
    ev = sorted(evidence.values(), key=lambda e: (e.provenance != KG, e.triple))

    return GroundProgram(claim, c_atom, n_atom, ground_rules, constraints, ev, diagnostics)


def _asp_term(t: Term) -> str:
    if t.kind == "literal-number":
        return t.value
    return '"' + t.value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _asp_atom(a: Atom) -> str:
    return f"{a.predicate}({_asp_term(a.arg1)},{_asp_term(a.arg2)})"


def _asp_weight(w: float) -> str:
    return "alpha" if w == HARD else repr(float(w))


def serialize_program(gp: GroundProgram) -> str:
    """lpmln2asp-style text: ``w : head :- body.`` one rule per line."""
    lines = [f"% claim: {gp.claim}"]
    for e in gp.evidence:
        lines.append(f"{_asp_weight(e.weight)} : {_asp_atom(triple_to_atom(e.triple))}.")
    for g in gp.ground_rules:
        body = ", ".join(_asp_atom(a) for a in g.body)
        lines.append(f"{_asp_weight(g.weight)} : {_asp_atom(g.head)} :- {body}.  % {g.rule_id}")
    for c in gp.constraints:
        body = ", ".join(_asp_atom(a) for a in c.body)
        lines.append(f"{_asp_weight(c.weight)} : :- {body}.  % {c.id}")
    return "\n".join(lines) + "\n"
