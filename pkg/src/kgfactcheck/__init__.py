"""Explainable fact checking of KG triples with weighted Horn rules.

Typical use::

    from kgfactcheck import FactChecker, load_triples, parse_rules, parse_claim

    fc = FactChecker(load_triples("kg.tsv"), parse_rules("rules.txt"))
    verdict = fc.check(parse_claim("author(Cold_Copper_Tears,Glen_Cook)"), "map")
"""

from .benchmark import (
    EvalCounts,
    EvalMetrics,
    EvalReport,
    InsufficientCandidates,
    LabeledClaim,
    build_dataset,
    evaluate,
    metrics,
    sample_negative_examples,
)
from .checker import FactChecker
from .evidence import (
    CachingProvider,
    EvidenceFact,
    FileStubProvider,
    HttpProvider,
    OracleResponse,
    query_oracle,
)
from .grounding import GroundProgram, MissingAtomRequest, build_ground_program, ground_rule
from .inference import (
    FALSE,
    MAP,
    MAP_WEB,
    PURE_ASP,
    TRUE,
    UNDECIDED,
    Verdict,
    WeightedModel,
    check_pure_asp,
    claim_probability,
    extract_explanation,
    map_inference,
)
from .render import verdict_to_json, verdict_to_text
from .rules import Atom, Rule, RuleSet, Variable, parse_claim, parse_rules, support_to_weight
from .triple_store import Claim, Term, Triple, TripleStore, load_triples

__version__ = "0.1.0"
