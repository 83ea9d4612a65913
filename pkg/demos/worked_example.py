"""Checking one claim about a novel, three ways.

Run from the repository root::

    python demos/worked_example.py

The data lives in data/cold_copper_tears: a 16-triple slice of an
encyclopedic KG, fourteen mined rules and a fixture standing in for a
web search oracle.
"""

from pathlib import Path

from kgfactcheck import FactChecker, FileStubProvider, load_triples, parse_claim, parse_rules
from kgfactcheck.render import verdict_to_json, verdict_to_text

DATA = Path(__file__).resolve().parent.parent / "data" / "cold_copper_tears"

# %%
# Load the graph and the rules.  Rule supports are turned into log-odds
# weights, so a rule with support below 0.5 carries a negative weight.
kg = load_triples(DATA / "kg.tsv")
rules = parse_rules(DATA / "rules.txt")
print(f"{len(kg)} triples, {len(rules.rules)} rules")
for r in rules.rules[:4]:
    print(f"  {r.id}: support {r.support}  weight {r.weight:+.2f}")

claim = parse_claim("author(Cold_Copper_Tears,Glen_Cook)")

# %%
# From the KG alone one rule instance grounds fully (r4: an earlier book
# shares a genre with the author).  Read as a plain rule it proves the
# claim; weighted, its support of 0.02 is a penalty, so MAP declines.
fc = FactChecker(kg, rules)
for mode in ("pure-asp", "map"):
    v = fc.check(claim, mode)
    print(f"{mode:9s} -> {v.label}")

# %%
# With the oracle the grounder asks for the single missing body atom of
# each nearly-complete rule instance.  The fixture answers five of them.
oracle = FileStubProvider.from_path(DATA / "oracle.tsv")
fc = FactChecker(kg, rules, oracle)
verdict = fc.check(claim, "map+web")
print(f"oracle calls: {fc.oracle_calls}")
print(verdict_to_text(verdict))

# %%
# The two author rules that fire have supports 0.13 and 0.02, which are
# negative weights.  The most probable model therefore prefers to leave
# them unsatisfied, and the claim stays undecided with a low probability.
# Read as plain (unweighted) rules, the same evidence proves the claim.
from kgfactcheck.inference import check_pure_asp  # noqa: E402

gp = fc.ground(claim, "map+web")
print("unweighted reading:", check_pure_asp(gp).label)

# %%
# Machine-readable output carries the same explanation.
print(verdict_to_json(verdict)[:600], "...")
