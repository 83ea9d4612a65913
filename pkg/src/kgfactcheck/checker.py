"""End-to-end claim checking: rules -> evidence -> reasoner."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .evidence import CachingProvider, query_oracle
from .grounding import (
    DEFAULT_MAX_SUBSTITUTIONS,
    GroundProgram,
    build_ground_program,
    collect_requests,
)
from .inference import (
    DEFAULT_SEARCH_BOUND,
    MAP,
    MAP_WEB,
    MODES,
    PURE_ASP,
    SearchBoundExceeded,
    Verdict,
    check_pure_asp,
    claim_probability,
    map_inference,
)
from .rules import RuleSet
from .triple_store import Claim, TripleStore, UnknownPredicate

log = logging.getLogger(__name__)


@dataclass
class FactChecker:
    """Checks claims against one store and rule set.

    ``provider`` is only consulted in ``map+web`` mode; it is wrapped in a
    per-run :class:`CachingProvider` so each distinct atom is asked once.
    """

    store: TripleStore
    rules: RuleSet
    provider: object = None
    search_bound: int = DEFAULT_SEARCH_BOUND
    max_substitutions: int = DEFAULT_MAX_SUBSTITUTIONS
    with_probability: bool = True
    oracle: Optional[CachingProvider] = field(default=None, init=False)

    def __post_init__(self):
        self.rules = self.rules.with_constraints(self.store)
        if self.provider is not None:
            self.oracle = (self.provider if isinstance(self.provider, CachingProvider)
                           else CachingProvider(self.provider))

    @property
    def oracle_calls(self) -> int:
        return self.oracle.calls if self.oracle is not None else 0

    def ground(self, claim: Claim, mode: str = MAP) -> GroundProgram:
        if claim.predicate not in self.rules.head_predicates:
            raise UnknownPredicate(claim.predicate)
        diagnostics: list = []
        web = []
        if mode == MAP_WEB:
            if self.oracle is None:
                raise ValueError("map+web mode needs an evidence provider")
            requests = collect_requests(claim, self.rules, self.store,
                                        self.max_substitutions, diagnostics)
            web = query_oracle(requests, self.oracle, diagnostics)
        gp = build_ground_program(claim, self.rules, self.store, web, self.max_substitutions)
        gp.diagnostics = diagnostics + gp.diagnostics
        return gp

    def check(self, claim: Claim, mode: str = MAP) -> Verdict:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        gp = self.ground(claim, mode)
        if mode == PURE_ASP:
            return check_pure_asp(gp)
        verdict, _ = map_inference(gp, mode, self.search_bound)
        if self.with_probability:
            try:
                verdict.probability = claim_probability(gp, self.search_bound)
            except SearchBoundExceeded as exc:
                verdict.diagnostics.append(f"probability not computed: {exc}")
        return verdict
