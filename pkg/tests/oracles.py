"""Independent reference implementations used to cross-check the engine.

Everything here is deliberately naive: sets instead of bitmasks, full
enumeration instead of search, no shared code with the modules under test
beyond the plain data types.
"""

from __future__ import annotations

import itertools
import math
import random

from kgfactcheck.evidence import EvidenceFact, kg_fact, oracle_fact
from kgfactcheck.grounding import GroundConstraint, GroundProgram, GroundRule
from kgfactcheck.rules import Atom, Variable
from kgfactcheck.triple_store import Claim, Term, Triple

INF = math.inf
CLASS_ORDER = {(False, False): 0, (True, True): 1, (False, True): 2, (True, False): 3}


def _atom(t: Triple) -> Atom:
    return Atom(t.predicate, t.subject, t.object)


# --- MAP / probability -------------------------------------------------------

def enumerate_stable_models(gp: GroundProgram):
    """Yield (interpretation, hard_violations, soft_weight) for every stable model.

    KG atoms are fixed true; every subset of the remaining atoms is tried and
    kept iff it equals the least model of the rules it satisfies.
    """
    kg = {_atom(e.triple) for e in gp.evidence if e.provenance == "kg"}
    soft_facts = [(_atom(e.triple), e.weight) for e in gp.evidence if e.provenance != "kg"]
    free = sorted({a for a, _ in soft_facts} | {gp.claim_atom, gp.neg_claim_atom} - kg, key=str)
    rules = [(a, (), w) for a, w in soft_facts]
    rules += [(g.head, tuple(g.body), g.weight) for g in gp.ground_rules]
    constraints = [(tuple(c.body), c.weight) for c in gp.constraints]

    for bits in itertools.product((False, True), repeat=len(free)):
        interp = set(kg) | {a for a, b in zip(free, bits) if b}
        satisfied = [(h, body, w) for h, body, w in rules
                     if h in interp or not set(body) <= interp]
        model = set(kg)
        while True:
            new = {h for h, body, _ in satisfied if set(body) <= model} - model
            if not new:
                break
            model |= new
        if model != interp:
            continue
        hard = sum(1 for h, body, w in rules
                   if w == INF and not (h in interp or not set(body) <= interp))
        hard += sum(1 for body, w in constraints if w == INF and set(body) <= interp)
        soft = [w for _, _, w in satisfied if w != INF]
        soft += [w for body, w in constraints if w != INF and not set(body) <= interp]
        yield frozenset(interp), hard, math.fsum(soft)


def brute_force_map(gp: GroundProgram):
    """(label, weight, hard_violations, interpretation, tied_labels)."""
    models = list(enumerate_stable_models(gp))
    best_hard = min(h for _, h, _ in models)
    best_soft = max(s for _, h, s in models if h == best_hard)

    def cls(i):
        return (gp.claim_atom in i, gp.neg_claim_atom in i)

    top = [i for i, h, s in models if h == best_hard and s == best_soft]
    top.sort(key=lambda i: (CLASS_ORDER[cls(i)], tuple(sorted(str(a) for a in i))))
    winner = top[0]
    label = _label(*cls(winner))
    tied = sorted({_label(*cls(i)) for i in top} - {label})
    return label, best_soft, best_hard, winner, tied


def brute_force_probability(gp: GroundProgram) -> float:
    models = list(enumerate_stable_models(gp))
    best_hard = min(h for _, h, _ in models)
    kept = [(i, s) for i, h, s in models if h == best_hard]
    top = max(s for _, s in kept)
    z = sum(math.exp(s - top) for _, s in kept)
    return sum(math.exp(s - top) for i, s in kept if gp.claim_atom in i) / z


def _label(c: bool, n: bool) -> str:
    if c and not n:
        return "true"
    if n and not c:
        return "false"
    return "undecided"


def random_program(rng: random.Random, max_atoms: int = 16, max_free: int = 10) -> GroundProgram:
    """A random claim-shaped ground program with at most ``max_atoms`` atoms."""
    x, y = Term.entity("x0"), Term.entity("y0")
    claim = Claim(Triple(x, "p", y))
    c_atom, n_atom = Atom("p", x, y), Atom("negp", x, y)
    n_total = rng.randint(2, max_atoms)
    n_oracle = rng.randint(0, min(max_free - 2, n_total - 2))
    n_kg = n_total - 2 - n_oracle
    preds = ["q", "r", "s", "t"]
    kg = [Triple(Term.entity(f"k{i}"), rng.choice(preds), Term.entity(f"v{i}")) for i in range(n_kg)]
    web = [Triple(Term.entity(f"w{i}"), rng.choice(preds), Term.entity(f"u{i}"))
           for i in range(n_oracle)]
    # functionality atoms are stored p(x0, z) triples
    n_func = rng.randint(0, min(2, n_kg))
    for i in range(n_func):
        kg[i] = Triple(x, "p", Term.entity(f"z{i}"))
    evidence = [kg_fact(t) for t in kg]
    evidence += [oracle_fact(t, round(rng.uniform(0.51, 0.99), 2)) for t in web]
    body_pool = [_atom(t) for t in kg[n_func:]] + [_atom(t) for t in web]

    def weight():
        r = rng.random()
        if r < 0.12:
            return INF
        return round(rng.uniform(-4.0, 4.0), 3)

    rules = []
    for k in range(rng.randint(0, 7)):
        head = c_atom if rng.random() < 0.5 else n_atom
        if body_pool:
            body = tuple(rng.sample(body_pool, rng.randint(1, min(3, len(body_pool)))))
        else:
            body = ()
        if not body:
            continue
        rules.append(GroundRule(f"r{k + 1}", head, body, weight(), ()))
    constraints = [GroundConstraint("mutex:p", "mutual-exclusion", (c_atom, n_atom), INF)]
    fw = round(rng.uniform(-4.0, 4.0), 3)
    for i in range(n_func):
        constraints.append(GroundConstraint(f"func:p#{i + 1}", "functionality",
                                            (c_atom, _atom(kg[i])), fw))
    return GroundProgram(claim, c_atom, n_atom, rules, constraints, evidence)


# --- grounding ---------------------------------------------------------------

def _compare(op, a: Term, b: Term) -> bool:
    if op == "=":
        return a == b
    if op == "!=":
        return a != b
    if a.numeric is None or b.numeric is None:
        return False
    return a.numeric > b.numeric if op == ">" else a.numeric < b.numeric


def brute_force_grounding(rule, claim: Claim, store, extra: list[EvidenceFact] = ()):
    """(set of (head, body) pairs, set of (atom, substitution) requests).

    Every non-head variable ranges over every term in the store, the extra
    evidence and the claim.
    """
    facts = {t for t in store} | {e.triple for e in extra}
    terms = sorted({t.subject for t in facts} | {t.object for t in facts}
                   | {claim.triple.subject, claim.triple.object})
    head = {rule.head.arg1: claim.triple.subject, rule.head.arg2: claim.triple.object}
    atoms = [a for a in rule.body if not a.is_comparison]
    cmps = [a for a in rule.body if a.is_comparison]
    free = sorted({v for a in rule.body for v in a.variables()} - set(head), key=lambda v: v.name)

    def holds(a):
        return a.arg1.kind == "entity" and Triple(a.arg1, a.predicate, a.arg2) in facts

    def cmps_true(binding):
        for c in cmps:
            if any(isinstance(t, Variable) and t not in binding for t in (c.arg1, c.arg2)):
                return False
            g = c.substitute(binding)
            if not _compare(g.predicate, g.arg1, g.arg2):
                return False
        return True

    ground, requests = set(), set()
    for values in itertools.product(terms, repeat=len(free)):
        b = dict(head)
        b.update(zip(free, values))
        g_atoms = [a.substitute(b) for a in atoms]
        ok = [holds(a) for a in g_atoms]
        if all(ok):
            if cmps_true(b):
                ground.add((rule.head.substitute(b), tuple(sorted(set(g_atoms)))))
            continue
        if ok.count(False) != 1:
            continue
        i = ok.index(False)
        bound = set(head) | {v for j, a in enumerate(atoms) if j != i for v in a.variables()}
        if not atoms[i].variables() <= bound:
            continue
        partial = {v: t for v, t in b.items() if v in bound}
        if g_atoms[i].arg1.kind != "entity" or not cmps_true(partial):
            continue
        requests.add((g_atoms[i], tuple(sorted(partial.items(), key=lambda kv: kv[0].name))))
    return ground, requests


# --- negative sampling -------------------------------------------------------

def violates_negative_conditions(predicate: str, store, x: Term, y: Term) -> list[str]:
    """Conditions of a valid negative example that (x, y) fails, by scanning."""
    triples = list(store)
    failed = []
    if any(t.predicate == predicate and t.subject == x and t.object == y for t in triples):
        failed.append("pair already holds")
    if not any(t.predicate == predicate and ((t.subject == x and t.object != y)
                                             or (t.object == y and t.subject != x))
               for t in triples):
        failed.append("no shared subject or object")
    if not any(t.predicate != predicate and t.subject == x and t.object == y for t in triples):
        failed.append("no other predicate relates the pair")
    return failed


def negative_checker(predicate: str, triples):
    """Independent validity test for negative pairs built from a plain triple list."""
    facts = {(t.subject, t.predicate, t.object) for t in triples}
    objects_of, subjects_of, related = {}, {}, set()
    for s, p, o in facts:
        if p == predicate:
            objects_of.setdefault(s, set()).add(o)
            subjects_of.setdefault(o, set()).add(s)
        else:
            related.add((s, o))

    def failures(x, y) -> list[str]:
        out = []
        if (x, predicate, y) in facts:
            out.append("pair already holds")
        if not (objects_of.get(x, set()) - {y} or subjects_of.get(y, set()) - {x}):
            out.append("no shared subject or object")
        if (x, y) not in related:
            out.append("no other predicate relates the pair")
        return out

    return failures
