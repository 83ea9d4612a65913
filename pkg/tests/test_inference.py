import json
import math
import random
from types import SimpleNamespace

import jsonschema
import pytest

from kgfactcheck.checker import FactChecker
from kgfactcheck.evidence import kg_fact, oracle_fact
from kgfactcheck.grounding import GroundConstraint, GroundProgram, GroundRule
from kgfactcheck.inference import (
    FALSE,
    MAP,
    TRUE,
    UNDECIDED,
    SearchBoundExceeded,
    check_pure_asp,
    claim_probability,
    least_model,
    map_inference,
    replay_supporting,
)
from kgfactcheck.render import verdict_schema, verdict_to_dict, verdict_to_json, verdict_to_text
from kgfactcheck.rules import Atom, parse_claim, support_to_weight
from kgfactcheck.triple_store import Claim, Term, Triple

from oracles import brute_force_map, brute_force_probability, random_program

INF = math.inf
X, Y = Term.entity("x"), Term.entity("y")
CLAIM = Claim(Triple(X, "p", Y))
P, NP = Atom("p", X, Y), Atom("negp", X, Y)


def fact(name):
    return Triple.of(name, "q", "v")


def atom(name):
    t = fact(name)
    return Atom(t.predicate, t.subject, t.object)


def program(rules, kg=(), web=(), extra_constraints=()):
    """rules: (rule_id, head, [body names], weight)."""
    ev = [kg_fact(fact(n)) for n in kg] + [oracle_fact(fact(n), p) for n, p in web]
    grs = [GroundRule(rid, head, tuple(atom(b) for b in body), w) for rid, head, body, w in rules]
    cons = [GroundConstraint("mutex:p", "mutual-exclusion", (P, NP), INF), *extra_constraints]
    return GroundProgram(CLAIM, P, NP, grs, cons, ev)


# --- least model ----------------------------------------------------------------

def test_least_model():
    r = SimpleNamespace(head="p", body=("q",))
    assert least_model([r], {"q"}) == {"q", "p"}
    assert least_model([], {"q", "s"}) == {"q", "s"}
    chain = [SimpleNamespace(head="c", body=("b",)), SimpleNamespace(head="b", body=("a",))]
    assert least_model(chain, {"a"}) == {"a", "b", "c"}


# --- pure ASP ---------------------------------------------------------------------

def test_pure_asp_positive_only():
    v = check_pure_asp(program([("r1", P, ["a"], 1.0)], kg=["a"]))
    assert v.label == TRUE
    assert [f.rule_id for f in v.explanation.supporting] == ["r1"]


def test_pure_asp_contradiction():
    v = check_pure_asp(program([("r1", P, ["a"], 3.0), ("r2", NP, ["b"], 0.1)], kg=["a", "b"]))
    assert v.label == UNDECIDED
    assert any("mutual exclusion" in d for d in v.diagnostics)


def test_pure_asp_nothing_fires():
    assert check_pure_asp(program([("r1", P, ["a"], 1.0)])).label == UNDECIDED


def test_pure_asp_functionality_violation():
    other = Atom("p", X, Term.entity("z"))
    gp = program([("r1", P, ["a"], 1.0)], kg=["a"],
                 extra_constraints=[GroundConstraint("func:p#1", "functionality", (P, other), -1.0)])
    gp.evidence.append(kg_fact(Triple(X, "p", Term.entity("z"))))
    v = check_pure_asp(gp)
    assert v.label == UNDECIDED
    assert any("functionality" in d for d in v.diagnostics)


# --- MAP ---------------------------------------------------------------------------

def test_single_unopposed_rule():
    v, m = map_inference(program([("r1", P, ["a"], math.log(3))], kg=["a"]))
    assert v.label == TRUE and P in m.interpretation
    assert m.unnormalized_weight == pytest.approx(math.log(3))
    assert m.hard_violations == 0


def test_low_support_pair_follows_enumeration():
    # both sides carry negative log-odds weights; leaving both rules
    # unsatisfied scores 0 and beats either derivation
    gp = program([("r1", P, ["a"], support_to_weight(0.13)), ("r2", NP, ["b"], support_to_weight(0.38))],
                 kg=["a", "b"])
    v, m = map_inference(gp)
    label, weight, *_ = brute_force_map(gp)
    assert (v.label, m.unnormalized_weight) == (label, weight)
    assert v.label == UNDECIDED


def test_heavier_side_wins():
    gp = program([("r1", P, ["a"], support_to_weight(0.62)), ("r2", NP, ["b"], support_to_weight(0.87))],
                 kg=["a", "b"])
    v, m = map_inference(gp)
    assert v.label == FALSE
    assert [f.rule_id for f in v.explanation.supporting] == ["r2"]
    assert [f.rule_id for f in v.explanation.conflicting] == ["r1"]
    assert P not in m.interpretation and NP in m.interpretation
    gp2 = program([("r1", P, ["a"], support_to_weight(0.87)), ("r2", NP, ["b"], support_to_weight(0.62))],
                  kg=["a", "b"])
    assert map_inference(gp2)[0].label == TRUE


def test_equal_weights_tie_prefers_negation():
    # p-only and negp-only models both score 1.0; neither scores 0
    gp = program([("r1", P, ["a"], 1.0), ("r2", NP, ["b"], 1.0)], kg=["a", "b"])
    v, _ = map_inference(gp)
    assert v.label == FALSE
    assert v.tied_labels == [TRUE]


def test_zero_weight_tie_prefers_undecided():
    v, _ = map_inference(program([("r1", P, ["a"], 0.0)], kg=["a"]))
    assert v.label == UNDECIDED and v.tied_labels == [TRUE]


def test_hard_rule_dominates():
    gp = program([("r1", P, ["a"], INF), ("r2", NP, ["b"], 9.0)], kg=["a", "b"])
    v, m = map_inference(gp)
    assert v.label == TRUE and m.hard_violations == 0


def test_oracle_fact_can_be_dropped():
    # a weakly believed web fact enabling a strongly negative rule is dropped
    gp = program([("r1", P, ["w"], -3.0)], web=[("w", 0.55)])
    v, m = map_inference(gp)
    assert atom("w") in m.interpretation
    assert v.label == UNDECIDED
    gp = program([("r1", P, ["w"], 2.0)], web=[("w", 0.55)])
    assert map_inference(gp)[0].label == TRUE


def test_search_bound():
    web = [(f"w{i}", 0.7) for i in range(10)]
    gp = program([("r1", P, [w for w, _ in web], 1.0)], web=web)
    with pytest.raises(SearchBoundExceeded):
        map_inference(gp, search_bound=8)
    with pytest.raises(SearchBoundExceeded):
        claim_probability(gp, search_bound=8)
    assert map_inference(gp, search_bound=12)[0].label == TRUE


def test_branch_and_bound_matches_brute_force_on_wide_program():
    rng = random.Random(3)
    web = [(f"w{i}", round(rng.uniform(0.51, 0.95), 2)) for i in range(13)]
    rules = [(f"r{k}", rng.choice([P, NP]), rng.sample([w for w, _ in web], 2), rng.uniform(-2, 2))
             for k in range(8)]
    gp = program(rules, web=web)
    a, ma = map_inference(gp, brute_force_below=0)
    b, mb = map_inference(gp, brute_force_below=99)
    assert (a.label, ma.unnormalized_weight, ma.interpretation) == (b.label, mb.unnormalized_weight,
                                                                    mb.interpretation)


# --- probability -----------------------------------------------------------------

def test_probability_hard_fact():
    gp = program([("r1", P, ["a"], INF)], kg=["a"])
    assert claim_probability(gp) == 1.0


def test_probability_zero_weight_rule():
    assert claim_probability(program([("r1", P, ["a"], 0.0)], kg=["a"])) == pytest.approx(0.5)


def test_probability_alpha_limit():
    gp = program([("r1", P, ["a"], INF), ("r2", NP, ["a"], 2.0)], kg=["a"])
    assert claim_probability(gp) == 1.0


def test_probability_matches_logistic():
    w = 1.3
    p = claim_probability(program([("r1", P, ["a"], w)], kg=["a"]))
    assert p == pytest.approx(1 / (1 + math.exp(-w)), abs=1e-12)


# --- properties over random programs --------------------------------------------

@pytest.mark.parametrize("seed", range(60))
def test_invariants_on_random_programs(seed):
    rng = random.Random(1000 + seed)
    gp = random_program(rng, max_atoms=10, max_free=8)
    v, m = map_inference(gp)
    label, weight, hard, _, tied = brute_force_map(gp)
    assert (v.label, m.unnormalized_weight, m.hard_violations) == (label, weight, hard)
    assert v.tied_labels == tied
    if hard == 0:
        assert m.hard_violations == 0
    assert not (P_of(gp) in m.interpretation and NP_of(gp) in m.interpretation) or m.hard_violations > 0
    assert replay_supporting(v) == []
    assert claim_probability(gp) == pytest.approx(brute_force_probability(gp), abs=1e-9)


def P_of(gp):
    return gp.claim_atom


def NP_of(gp):
    return gp.neg_claim_atom


@pytest.mark.parametrize("seed", range(40))
def test_weight_increase_keeps_label(seed):
    rng = random.Random(5000 + seed)
    gp = random_program(rng, max_atoms=9, max_free=7)
    v, m = map_inference(gp)
    if v.label == UNDECIDED or not v.explanation.supporting:
        return
    f = v.explanation.supporting[0]
    bumped = [GroundRule(g.rule_id, g.head, g.body,
                         g.weight + 1.5 if (g.rule_id == f.rule_id and g.body == tuple(b.atom for b in f.body)
                                            and math.isfinite(g.weight)) else g.weight, g.substitution)
              for g in gp.ground_rules]
    gp2 = GroundProgram(gp.claim, gp.claim_atom, gp.neg_claim_atom, bumped, gp.constraints, gp.evidence)
    assert map_inference(gp2)[0].label == v.label


@pytest.mark.parametrize("seed", range(40))
def test_pure_asp_agrees_with_map_without_opposition(seed):
    rng = random.Random(9000 + seed)
    kg = [f"k{i}" for i in range(rng.randint(1, 5))]
    rules = []
    for k in range(rng.randint(0, 4)):
        rules.append((f"r{k}", P, rng.sample(kg, rng.randint(1, len(kg))), rng.uniform(0.05, 5.0)))
    gp = program(rules, kg=kg)
    assert check_pure_asp(gp).label == map_inference(gp)[0].label


# --- rendering --------------------------------------------------------------------

def test_false_verdict_text_layout():
    gp = program([(f"r{i}", NP, [n], 1.0 + i) for i, n in enumerate(["e", "f", "g"], start=1)],
                 kg=["e", "f", "g"])
    v, _ = map_inference(gp)
    lines = verdict_to_text(v).splitlines()
    assert lines[0] == "FALSE : p(x, y)"
    assert sum(1 for line in lines if line.lstrip().startswith("←")) == 3


def test_json_matches_schema():
    gp = program([("r1", P, ["a", "w"], 2.0), ("r2", NP, ["b"], 0.5)], kg=["a", "b"], web=[("w", 0.7)])
    v, _ = map_inference(gp)
    v.probability = claim_probability(gp)
    doc = json.loads(verdict_to_json(v, {"mode": "map"}))
    jsonschema.validate(doc, verdict_schema())
    (sup,) = doc["explanation"]["supporting"]
    assert [b["provenance"] for b in sup["body"]] == ["kg", "oracle"]
    assert sup["body"][1]["weight"] == pytest.approx(math.log(0.7 / 0.3))
    assert verdict_to_dict(v)["label"] == "true"


def test_pure_asp_json_matches_schema(cct_store, cct_rules):
    fc = FactChecker(cct_store, cct_rules)
    v = fc.check(parse_claim("author(Cold_Copper_Tears,Glen_Cook)"), "pure-asp")
    jsonschema.validate(json.loads(verdict_to_json(v)), verdict_schema())


# --- the worked example on its KG alone ------------------------------------------

def test_listing_modes_on_kg(cct_store, cct_rules, cct_oracle):
    claim = parse_claim("author(Cold_Copper_Tears,Glen_Cook)")
    fc = FactChecker(cct_store, cct_rules, cct_oracle)
    pa = fc.check(claim, "pure-asp")
    assert pa.label == TRUE
    assert [f.rule_id for f in pa.explanation.supporting] == ["r4"]
    for mode in (MAP, "map+web"):
        v = fc.check(claim, mode)
        gp = fc.ground(claim, mode)
        assert v.label == brute_force_map(gp)[0]
        assert v.probability == pytest.approx(brute_force_probability(gp), abs=1e-9)
