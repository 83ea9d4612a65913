"""Weighted Horn rules: parsing, weights and generic constraints.

Rule files hold one rule per line::

    0.75: foundedBy(a,b) <- keyPerson(a,b), foundedBy(c,b), product(c,d).
    0.97: negfoundedBy(a,b) <- foundingYear(a,c), birthYear(b,d), >(d,c).
    alpha: bot <- negauthor(A,B), author(A,B).
    0.04: bot <- author(A,B), author(A,C), B != C.

A head predicate starting with ``neg`` concludes the negative predicate.
Arguments that are a single letter (optionally followed by digits) or start
with a lowercase letter are variables; quoted arguments, numbers and other
identifiers are constants.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from .triple_store import (
    Claim,
    PredicateStats,
    Term,
    UnknownPredicate,
    parse_term,
)

log = logging.getLogger(__name__)

HARD = math.inf
NEG_PREFIX = "neg"
COMPARISONS = (">", "<", "!=", "=")
DEFAULT_MAX_WEIGHT = math.log(0.9999 / 0.0001)

MUTUAL_EXCLUSION = "mutual-exclusion"
FUNCTIONALITY = "functionality"


class RuleError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"{line}:{column}: " if column is not None else f"{line}: "
        super().__init__(where + message)


class ParseError(RuleError):
    pass


class UnsafeRule(RuleError):
    pass


class SupportOutOfRange(RuleError):
    pass


@dataclass(frozen=True, order=True)
class Variable:
    name: str

    def __str__(self):
        return self.name


Arg = Union[Term, Variable]


@dataclass(frozen=True, order=True)
class Atom:
    predicate: str
    arg1: Arg
    arg2: Arg

    @property
    def is_comparison(self) -> bool:
        return self.predicate in COMPARISONS

    @property
    def args(self) -> tuple:
        return (self.arg1, self.arg2)

    def variables(self) -> set[Variable]:
        return {a for a in self.args if isinstance(a, Variable)}

    @property
    def is_ground(self) -> bool:
        return not self.variables()

    def substitute(self, binding: dict) -> "Atom":
        return Atom(self.predicate, binding.get(self.arg1, self.arg1)
                    if isinstance(self.arg1, Variable) else self.arg1,
                    binding.get(self.arg2, self.arg2)
                    if isinstance(self.arg2, Variable) else self.arg2)

    def __str__(self):
        return f"{self.predicate}({_fmt_arg(self.arg1)},{_fmt_arg(self.arg2)})"


def _fmt_arg(a: Arg) -> str:
    if isinstance(a, Variable):
        return a.name
    if a.kind == "entity" and (_is_variable_name(a.value) or not _IDENT_RE.fullmatch(a.value)):
        return "'" + a.value.replace("'", "\\'") + "'"
    return str(a)


def base_predicate(predicate: str) -> str:
    return predicate[len(NEG_PREFIX):] if predicate.startswith(NEG_PREFIX) else predicate


def negated(predicate: str) -> str:
    return NEG_PREFIX + predicate


def support_to_weight(s: float) -> float:
    """Log-odds ``ln(s / (1 - s))``; the endpoints map to -inf and +inf."""
    if not 0.0 <= s <= 1.0:
        raise SupportOutOfRange(f"support {s} not in [0, 1]")
    if s == 0.0:
        return -math.inf
    if s == 1.0:
        return math.inf
    return math.log(s) - math.log1p(-s)


def clamped_weight(s: float, max_weight: float = DEFAULT_MAX_WEIGHT) -> float:
    """Weight for a soft rule: infinite log-odds are clamped to +-max_weight."""
    w = support_to_weight(s)
    return max(-max_weight, min(max_weight, w))


@dataclass(frozen=True)
class Rule:
    id: str
    head: Atom
    body: tuple
    support: Optional[float]
    weight: float
    line: Optional[int] = field(default=None, compare=False)

    @property
    def polarity(self) -> str:
        return "negative" if self.head.predicate.startswith(NEG_PREFIX) else "positive"

    @property
    def target(self) -> str:
        return base_predicate(self.head.predicate)

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD


@dataclass(frozen=True)
class ConstraintRule:
    kind: str
    predicate: str
    weight: float
    support: Optional[float] = None
    id: str = ""

    @property
    def is_hard(self) -> bool:
        return self.weight == HARD


def synthesize_constraints(predicate: str, stats: PredicateStats,
                           max_weight: float = DEFAULT_MAX_WEIGHT) -> list[ConstraintRule]:
    """The two generic constraints for ``predicate``: hard mutual exclusion
    of p/negp and a soft functionality constraint weighted by the log-odds
    of the predicate's functionality."""
    f = stats.functionality
    if not 0.0 < f <= 1.0:
        raise ValueError(f"functionality {f} not in (0, 1]")
    return [
        ConstraintRule(MUTUAL_EXCLUSION, predicate, HARD, None, f"mutex:{predicate}"),
        ConstraintRule(FUNCTIONALITY, predicate, clamped_weight(f, max_weight), f,
                       f"func:{predicate}"),
    ]


def default_functionality(predicate: str) -> ConstraintRule:
    """Neutral functionality constraint used when no statistics exist."""
    return ConstraintRule(FUNCTIONALITY, predicate, 0.0, 0.5, f"func:{predicate}")


class ClaimRules(NamedTuple):
    positive: list
    negative: list
    constraints: list

    @property
    def rules(self) -> list:
        return self.positive + self.negative


@dataclass
class RuleSet:
    rules: list = field(default_factory=list)
    constraints: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)

    @property
    def head_predicates(self) -> set[str]:
        return {r.target for r in self.rules}

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def constraint(self, kind: str, predicate: str) -> Optional[ConstraintRule]:
        return self.constraints.get((kind, predicate))

    def add_constraint(self, c: ConstraintRule) -> None:
        self.constraints[c.kind, c.predicate] = c

    def with_constraints(self, store=None, max_weight: float = DEFAULT_MAX_WEIGHT) -> "RuleSet":
        """Copy with both generic constraints present for every head predicate.

        Missing functionality constraints are computed from ``store``
        statistics; predicates without triples get a neutral weight of 0.
        """
        out = RuleSet(list(self.rules), dict(self.constraints), list(self.diagnostics))
        for p in sorted(self.head_predicates):
            if out.constraint(MUTUAL_EXCLUSION, p) is None:
                out.add_constraint(ConstraintRule(MUTUAL_EXCLUSION, p, HARD, None, f"mutex:{p}"))
            if out.constraint(FUNCTIONALITY, p) is None:
                stats = None
                if store is not None:
                    try:
                        stats = store.predicate_stats(p)
                    except UnknownPredicate:
                        pass
                if stats is None:
                    log.info("no statistics for %s; functionality weight set to 0", p)
                    out.diagnostics.append(f"no statistics for predicate {p}; "
                                           "functionality weight defaults to 0")
                    out.add_constraint(default_functionality(p))
                else:
                    out.add_constraint(synthesize_constraints(p, stats, max_weight)[1])
        return out


def rules_for_claim(rs: RuleSet, claim: Claim) -> ClaimRules:
    p = claim.predicate
    if p not in rs.head_predicates:
        raise UnknownPredicate(p)
    pos = [r for r in rs.rules if r.head.predicate == p]
    neg = [r for r in rs.rules if r.head.predicate == negated(p)]
    cons = [c for c in (rs.constraint(MUTUAL_EXCLUSION, p), rs.constraint(FUNCTIONALITY, p))
            if c is not None]
    return ClaimRules(pos, neg, cons)


# --- parsing -----------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_\-.]*")
_VAR_RE = re.compile(r"[A-Z][0-9']*|[a-z][A-Za-z0-9_']*")
_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<arrow><-|←|:-)
  | (?P<cmp>!=|≠|<>|>|<|=)
  | (?P<bot>⊥)
  | (?P<punct>[(),.:])
  | (?P<quoted>'(?:[^'\\]|\\.)*'|"(?:[^"\\]|\\.)*")
  | (?P<number>[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-zα_][A-Za-z0-9_\-']*)
""", re.VERBOSE)

_CMP_CANON = {"≠": "!=", "<>": "!="}
_HARD_TOKENS = {"alpha", "α", "inf", "hard"}
_BOT_TOKENS = {"bot", "false", "⊥"}


def _is_variable_name(name: str) -> bool:
    return bool(_VAR_RE.fullmatch(name))


class _Tokens:
    def __init__(self, text: str, line: int):
        self.line = line
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
            if m.lastgroup != "ws":
                kind, val = m.lastgroup, m.group()
                if kind == "cmp":
                    val = _CMP_CANON.get(val, val)
                self.toks.append((kind, val, pos + 1))
            pos = m.end()
        self.i = 0

    def peek(self, k: int = 0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else ("eof", "", None)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, kind: str, val: Optional[str] = None):
        tok = self.next()
        if tok[0] != kind or (val is not None and tok[1] != val):
            want = val or kind
            raise ParseError(f"expected {want!r}, found {tok[1]!r}", self.line, tok[2])
        return tok

    def error(self, msg: str, tok=None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(msg, self.line, tok[2])


def _parse_arg(toks: _Tokens, constants_only: bool) -> Arg:
    kind, val, col = toks.next()
    if kind == "quoted":
        inner = re.sub(r"\\(.)", r"\1", val[1:-1])
        if val[0] == '"':
            return Term.string(inner)
        return parse_term(inner) if inner.strip() else Term.entity(inner)
    if kind == "number":
        return Term.number(float(val))
    if kind == "ident":
        if not constants_only and _is_variable_name(val):
            return Variable(val)
        return parse_term(val)
    raise ParseError(f"expected an argument, found {val!r}", toks.line, col)


def _parse_atom(toks: _Tokens, constants_only: bool = False) -> Atom:
    kind, val, col = toks.peek()
    if kind == "cmp" and toks.peek(1)[1] == "(":
        toks.next()
        toks.expect("punct", "(")
        a = _parse_arg(toks, constants_only)
        toks.expect("punct", ",")
        b = _parse_arg(toks, constants_only)
        toks.expect("punct", ")")
        return Atom(val, a, b)
    if kind == "ident" and toks.peek(1)[1] == "(":
        toks.next()
        toks.expect("punct", "(")
        a = _parse_arg(toks, constants_only)
        toks.expect("punct", ",")
        b = _parse_arg(toks, constants_only)
        toks.expect("punct", ")")
        return Atom(val, a, b)
    a = _parse_arg(toks, constants_only)
    op = toks.next()
    if op[0] != "cmp":
        raise ParseError(f"expected a comparison operator, found {op[1]!r}", toks.line, op[2])
    b = _parse_arg(toks, constants_only)
    return Atom(op[1], a, b)


def parse_atom(text: str, constants_only: bool = False) -> Atom:
    """Parse a single atom such as ``author(Cold_Copper_Tears,Glen_Cook)``."""
    toks = _Tokens(text.strip(), 1)
    atom = _parse_atom(toks, constants_only)
    if toks.peek()[0] == "punct" and toks.peek()[1] == ".":
        toks.next()
    if toks.peek()[0] != "eof":
        raise toks.error(f"unexpected {toks.peek()[1]!r} after atom")
    return atom


def parse_claim(text: str) -> Claim:
    from .triple_store import ENTITY, Triple

    atom = parse_atom(text, constants_only=True)
    if atom.is_comparison:
        raise ParseError("a claim cannot be a comparison")
    if atom.arg1.kind != ENTITY:
        raise ParseError(f"claim subject must be an entity: {atom.arg1}")
    return Claim(Triple(atom.arg1, atom.predicate, atom.arg2))


def _parse_line(text: str, line: int, index: int, max_weight: float):
    toks = _Tokens(text, line)
    kind, val, col = toks.next()
    if kind == "number":
        support = float(val)
        if not 0.0 <= support <= 1.0:
            raise SupportOutOfRange(f"support {support} not in [0, 1]", line, col)
        weight = clamped_weight(support, max_weight)
    elif kind == "ident" and val.lower() in _HARD_TOKENS:
        support, weight = None, HARD
    else:
        raise ParseError(f"expected a support value, found {val!r}", line, col)
    toks.expect("punct", ":")

    hk, hv, hcol = toks.peek()
    is_constraint = hk == "bot" or (hk == "ident" and hv in _BOT_TOKENS and toks.peek(1)[0] == "arrow")
    if is_constraint:
        toks.next()
        head = None
    else:
        head = _parse_atom(toks)
        if head.is_comparison:
            raise ParseError("comparison atoms cannot appear in a rule head", line, hcol)
    toks.expect("arrow")
    body = [_parse_atom(toks)]
    while toks.peek()[1] == ",":
        toks.next()
        body.append(_parse_atom(toks))
    if toks.peek()[1] == ".":
        toks.next()
    if toks.peek()[0] != "eof":
        raise toks.error(f"unexpected {toks.peek()[1]!r}")

    rid = f"r{index}"
    if head is None:
        return _constraint_from_body(body, support, weight, rid, line, col)
    return _make_rule(rid, head, body, support, weight, line, hcol)


def _make_rule(rid, head, body, support, weight, line, col) -> Rule:
    if not all(isinstance(a, Variable) for a in head.args) or head.arg1 == head.arg2:
        raise ParseError("rule head must have two distinct variables", line, col)
    bound = set()
    for a in body:
        if not a.is_comparison:
            bound |= a.variables()
    for a in head.args:
        if a not in bound:
            raise UnsafeRule(f"head variable {a} does not occur in the body", line, col)
    for a in body:
        if a.is_comparison:
            free = a.variables() - bound - set(head.args)
            if free:
                names = ", ".join(sorted(v.name for v in free))
                raise UnsafeRule(f"comparison variable {names} is not bound by a body atom",
                                 line, col)
    return Rule(rid, head, tuple(body), support, weight, line)


def _constraint_from_body(body, support, weight, rid, line, col) -> ConstraintRule:
    atoms = [a for a in body if not a.is_comparison]
    cmps = [a for a in body if a.is_comparison]
    if len(atoms) == 2 and not cmps:
        a, b = atoms
        if a.predicate.startswith(NEG_PREFIX):
            a, b = b, a
        if b.predicate == negated(a.predicate) and a.args == b.args:
            if weight != HARD:
                raise ParseError("mutual-exclusion constraint must be hard", line, col)
            return ConstraintRule(MUTUAL_EXCLUSION, a.predicate, HARD, None, rid)
    if len(atoms) == 2 and len(cmps) == 1 and cmps[0].predicate == "!=":
        a, b = atoms
        c = cmps[0]
        if (a.predicate == b.predicate and a.arg1 == b.arg1 and a.arg2 != b.arg2
                and {c.arg1, c.arg2} == {a.arg2, b.arg2}):
            return ConstraintRule(FUNCTIONALITY, a.predicate, weight, support, rid)
    raise ParseError("unsupported constraint; only mutual exclusion "
                     "and functionality are recognised", line, col)


def parse_rules(source, strict: bool = False,
                max_weight: float = DEFAULT_MAX_WEIGHT) -> RuleSet:
    """Parse a rule file from a path, text, bytes, or stream.

    Rejected lines are collected in ``RuleSet.diagnostics`` as
    :class:`RuleError` instances carrying line and column; with
    ``strict=True`` the first one is raised instead.  Mutual-exclusion
    constraints are added for every head predicate.
    """
    text = _read_text(source)
    rs = RuleSet()
    seen_ids = set()
    index = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0] if "#" in raw and not _hash_in_quotes(raw) else raw
        if not line.strip():
            continue
        index += 1
        try:
            item = _parse_line(line, lineno, index, max_weight)
        except RuleError as exc:
            if strict:
                raise
            log.warning("rejected rule: %s", exc)
            rs.diagnostics.append(exc)
            continue
        if isinstance(item, ConstraintRule):
            rs.add_constraint(item)
        else:
            assert item.id not in seen_ids
            seen_ids.add(item.id)
            rs.rules.append(item)
    for p in sorted(rs.head_predicates):
        if rs.constraint(MUTUAL_EXCLUSION, p) is None:
            rs.add_constraint(ConstraintRule(MUTUAL_EXCLUSION, p, HARD, None, f"mutex:{p}"))
    return rs


def _hash_in_quotes(line: str) -> bool:
    i = line.index("#")
    return line[:i].count("'") % 2 == 1 or line[:i].count('"') % 2 == 1


def _read_text(source) -> str:
    if isinstance(source, os.PathLike) or (isinstance(source, str) and "\n" not in source
                                           and os.path.exists(source)):
        with open(source, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


# --- printing / export -------------------------------------------------------

def _fmt_support(support: Optional[float], weight: float) -> str:
    if weight == HARD:
        return "alpha"
    return repr(support) if support is not None else "0.5"


def _fmt_body_atom(a: Atom) -> str:
    if a.is_comparison:
        return f"{a.predicate}({_fmt_arg(a.arg1)},{_fmt_arg(a.arg2)})"
    return str(a)


def format_rule(rule: Union[Rule, ConstraintRule]) -> str:
    if isinstance(rule, ConstraintRule):
        p = rule.predicate
        if rule.kind == MUTUAL_EXCLUSION:
            return f"alpha: bot <- {p}(x,y), {negated(p)}(x,y)."
        return f"{_fmt_support(rule.support, rule.weight)}: bot <- {p}(x,y), {p}(x,z), !=(y,z)."
    body = ", ".join(_fmt_body_atom(a) for a in rule.body)
    return f"{_fmt_support(rule.support, rule.weight)}: {rule.head} <- {body}."


def format_ruleset(rs: RuleSet) -> str:
    """Rule file text; rules keep their ids by position, constraints follow."""
    lines = [format_rule(r) for r in rs.rules]
    lines += [format_rule(c) for _, c in sorted(rs.constraints.items())]
    return "\n".join(lines) + "\n"


def _weight_json(w: float):
    return None if math.isinf(w) else w


def _arg_json(a: Arg) -> dict:
    if isinstance(a, Variable):
        return {"var": a.name}
    return {"kind": a.kind, "value": a.value}


def atom_to_json(a: Atom) -> dict:
    return {"predicate": a.predicate, "args": [_arg_json(a.arg1), _arg_json(a.arg2)]}


def ruleset_to_json(rs: RuleSet) -> dict:
    return {
        "rules": [
            {"id": r.id, "polarity": r.polarity, "support": r.support,
             "weight": _weight_json(r.weight), "hard": r.is_hard,
             "head": atom_to_json(r.head), "body": [atom_to_json(a) for a in r.body]}
            for r in rs.rules
        ],
        "constraints": [
            {"id": c.id, "kind": c.kind, "predicate": c.predicate, "support": c.support,
             "weight": _weight_json(c.weight), "hard": c.is_hard}
            for _, c in sorted(rs.constraints.items())
        ],
    }


def dump_ruleset_json(rs: RuleSet) -> str:
    return json.dumps(ruleset_to_json(rs), indent=2, sort_keys=True)
