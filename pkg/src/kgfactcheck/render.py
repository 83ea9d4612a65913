"""Text and JSON renderings of verdicts."""

from __future__ import annotations

import json
import math

from .rules import Atom, Variable
from .triple_store import Term

LABEL_TEXT = {"true": "TRUE", "false": "FALSE", "undecided": "UNDECIDED"}


def _term_text(t) -> str:
    if isinstance(t, Variable):
        return t.name
    return t.value if isinstance(t, Term) and t.kind != "literal-string" else str(t)


def atom_text(a: Atom) -> str:
    return f"{a.predicate}({_term_text(a.arg1)}, {_term_text(a.arg2)})"


def _weight(w):
    if w is None or (isinstance(w, float) and math.isinf(w)):
        return None
    return w


def verdict_to_text(v) -> str:
    """``LABEL : claim`` followed by one ``←`` line per supporting rule."""
    t = v.claim.triple
    head = Atom(t.predicate, t.subject, t.object)
    lines = [f"{LABEL_TEXT[v.label]} : {atom_text(head)}"]
    for f in v.explanation.supporting:
        body = ", ".join(atom_text(b.atom) for b in f.body)
        lines.append(f"  ←  {body}    [{f.rule_id}{_prov_note(f)}]")
    if v.explanation.conflicting:
        lines.append("  conflicting:")
        for f in v.explanation.conflicting:
            body = ", ".join(atom_text(b.atom) for b in f.body)
            lines.append(f"  ×  {body}    [{f.rule_id} ⇒ {f.head.predicate}{_prov_note(f)}]")
    extra = [f"mode {v.mode}"]
    if v.probability is not None:
        extra.append(f"P = {v.probability:.4f}")
    if v.tied_labels:
        extra.append("tied with " + ", ".join(v.tied_labels))
    lines.append("  (" + "; ".join(extra) + ")")
    return "\n".join(lines) + "\n"


def _prov_note(f) -> str:
    oracle = [b for b in f.body if b.provenance == "oracle"]
    if not oracle:
        return ""
    return ", web " + ", ".join(f"{b.confidence:g}" for b in oracle)


def _fired_json(f) -> dict:
    return {
        "rule_id": f.rule_id,
        "instance": f.instance,
        "head": atom_text(f.head),
        "weight": _weight(f.weight),
        "hard": f.weight == math.inf,
        "substitution": {v.name: t.value for v, t in f.substitution},
        "body": [
            {"atom": atom_text(b.atom), "provenance": b.provenance,
             "confidence": b.confidence, "weight": _weight(b.weight)}
            for b in f.body
        ],
    }


def verdict_to_dict(v, config: dict | None = None) -> dict:
    t = v.claim.triple
    out = {
        "claim": {"subject": t.subject.value, "predicate": t.predicate,
                  "object": t.object.value},
        "label": v.label,
        "mode": v.mode,
        "probability": v.probability,
        "tied_labels": list(v.tied_labels),
        "model": None,
        "explanation": {
            "supporting": [_fired_json(f) for f in v.explanation.supporting],
            "conflicting": [_fired_json(f) for f in v.explanation.conflicting],
        },
        "diagnostics": [str(d) for d in v.diagnostics],
    }
    if v.model is not None:
        out["model"] = {
            "weight": v.model.unnormalized_weight,
            "hard_violations": v.model.hard_violations,
            "atoms": sorted(atom_text(a) for a in v.model.interpretation),
        }
    if config is not None:
        out["config"] = config
    return out


def verdict_to_json(v, config: dict | None = None) -> str:
    return json.dumps(verdict_to_dict(v, config), indent=2, sort_keys=True, ensure_ascii=False)


def verdict_schema() -> dict:
    """The JSON schema that :func:`verdict_to_json` output conforms to."""
    from importlib.resources import files
    return json.loads(files(__package__).joinpath("verdict.schema.json").read_text("utf-8"))
