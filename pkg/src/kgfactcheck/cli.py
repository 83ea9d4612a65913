"""Command-line interface: ``kgfactcheck check|eval|gen-dataset``.

Exit statuses: 0 decided (or command succeeded), 3 undecided, 1 usage
error, 2 data error.  Every flag can also be set through an ``FC_``
environment variable (``FC_KG``, ``FC_RULES``, ``FC_MODE``, ``FC_PROVIDER``,
``FC_SEED``, ``FC_SEARCH_BOUND``, ``FC_FORMAT``, ``FC_JOBS``,
``FC_ORACLE_CACHE``); command-line flags win over the environment.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

from .benchmark import InsufficientCandidates, build_dataset, evaluate, read_dataset, write_dataset
from .checker import FactChecker
from .evidence import CachingProvider, FileStubProvider, FixtureParseError, HttpProvider
from .inference import MAP, MAP_WEB, MODES, UNDECIDED, DEFAULT_SEARCH_BOUND
from .render import verdict_to_json, verdict_to_text
from .rules import RuleError, parse_claim, parse_rules
from .triple_store import MalformedRecord, TripleStore, UnknownPredicate, load_triples

EXIT_DECIDED, EXIT_USAGE, EXIT_DATA, EXIT_UNDECIDED = 0, 1, 2, 3
ENV_PREFIX = "FC_"

log = logging.getLogger("kgfactcheck")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass
class RunConfig:
    kg: Optional[str] = None
    rules: Optional[str] = None
    mode: str = MAP
    provider: str = "none"
    seed: int = 0
    search_bound: int = DEFAULT_SEARCH_BOUND
    format: str = "text"
    jobs: int = 1
    oracle_cache: Optional[str] = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise UsageError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.format not in ("text", "json"):
            raise UsageError(f"unknown format {self.format!r}")
        if self.search_bound < 1:
            raise UsageError("--search-bound must be at least 1")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")
        if not (self.provider == "none" or self.provider.startswith(("file:", "http:", "https:"))):
            raise UsageError(f"bad provider {self.provider!r}; use none, file:<path> or http:<url>")
        if self.mode == MAP_WEB and self.provider == "none":
            raise UsageError("mode map+web requires --provider")

    def echo(self) -> dict:
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_INT_FIELDS = {"seed", "search_bound", "jobs"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kg", help="knowledge graph file (.tsv or .nt)")
    p.add_argument("--rules", help="rule file")
    p.add_argument("--mode", help="pure-asp, map or map+web (default map)")
    p.add_argument("--provider", help="none, file:<path> or http:<url>")
    p.add_argument("--seed", type=int)
    p.add_argument("--search-bound", type=int, dest="search_bound")
    p.add_argument("--format", choices=("text", "json"))
    p.add_argument("--jobs", type=int)
    p.add_argument("--oracle-cache", dest="oracle_cache",
                   help="JSON file persisting oracle answers between runs")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="kgfactcheck", description="Rule-based fact checking over a KG.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="check a single claim")
    _common(c)
    c.add_argument("claim", help='claim atom, e.g. "author(Cold_Copper_Tears,Glen_Cook)"')

    e = sub.add_parser("eval", help="evaluate a labelled dataset")
    _common(e)
    e.add_argument("dataset")
    e.add_argument("--out", help="write the report here instead of stdout")

    g = sub.add_parser("gen-dataset", help="sample true and false claims for a predicate")
    _common(g)
    g.add_argument("predicate")
    g.add_argument("--n-true", type=int, required=True, dest="n_true")
    g.add_argument("--n-false", type=int, required=True, dest="n_false")
    g.add_argument("--out", required=True)
    return parser


def resolve_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    cfg = RunConfig()
    for name in cfg.__dataclass_fields__:
        value = getattr(args, name, None)
        if value is None:
            raw = environ.get(ENV_PREFIX + name.upper())
            if raw is not None:
                try:
                    value = int(raw) if name in _INT_FIELDS else raw
                except ValueError:
                    raise UsageError(f"{ENV_PREFIX}{name.upper()} must be an integer") from None
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    return cfg


def _load_store(path: Optional[str]) -> TripleStore:
    if not path:
        raise UsageError("--kg is required")
    fmt = "ntriples" if path.endswith(".nt") else "tsv"
    try:
        store = load_triples(path, fmt)
    except OSError as exc:
        raise DataError(f"cannot read KG {path}: {exc}") from exc
    for err in store.load_errors:
        print(f"warning: {path}: {err}", file=sys.stderr)
    return store


def _load_rules(path: Optional[str]):
    if not path:
        raise UsageError("--rules is required")
    try:
        rs = parse_rules(Path(path))
    except OSError as exc:
        raise DataError(f"cannot read rules {path}: {exc}") from exc
    for d in rs.diagnostics:
        print(f"warning: {path}: {d}", file=sys.stderr)
    return rs


def _make_provider(cfg: RunConfig):
    if cfg.provider == "none":
        return None
    if cfg.provider.startswith("file:"):
        path = cfg.provider[len("file:"):]
        try:
            inner = FileStubProvider.from_path(path)
        except OSError as exc:
            raise DataError(f"cannot read oracle fixture {path}: {exc}") from exc
    else:
        url = cfg.provider[len("http:"):] if cfg.provider.startswith("http:") else cfg.provider
        if not url.startswith(("http://", "https://")):
            url = "http://" + url.lstrip("/")
        inner = HttpProvider(url)
    return CachingProvider(inner, persist=cfg.oracle_cache)


def _checker(cfg: RunConfig) -> FactChecker:
    store = _load_store(cfg.kg)
    rs = _load_rules(cfg.rules)
    return FactChecker(store, rs, _make_provider(cfg), search_bound=cfg.search_bound)


def cmd_check(cfg: RunConfig, claim_text: str, out=None) -> int:
    out = out or sys.stdout
    try:
        claim = parse_claim(claim_text)
    except RuleError as exc:
        raise UsageError(f"cannot parse claim {claim_text!r}: {exc}") from exc
    fc = _checker(cfg)
    try:
        verdict = fc.check(claim, cfg.mode)
    except UnknownPredicate as exc:
        raise UsageError(f"unknown predicate {exc.args[0]!r}: no rules conclude it") from exc
    for d in verdict.diagnostics:
        print(f"diagnostic: {d}", file=sys.stderr)
    _save_cache(fc)
    if cfg.format == "json":
        out.write(verdict_to_json(verdict, cfg.echo()) + "\n")
    else:
        out.write(verdict_to_text(verdict))
    return EXIT_UNDECIDED if verdict.label == UNDECIDED else EXIT_DECIDED


def cmd_eval(cfg: RunConfig, dataset: str, out_path: Optional[str] = None, out=None) -> int:
    out = out or sys.stdout
    try:
        claims = read_dataset(dataset)
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read dataset {dataset}: {exc}") from exc
    fc = _checker(cfg)
    report = evaluate(claims, cfg.mode, fc, jobs=cfg.jobs)
    _save_cache(fc)
    if cfg.format == "json":
        text = report.to_json(cfg.echo()) + "\n"
    else:
        text = report.summary_table() + f"oracle calls: {report.oracle_calls}\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        out.write(text)
    return EXIT_DECIDED


def cmd_gen_dataset(cfg: RunConfig, predicate: str, n_true: int, n_false: int,
                    out_path: str, out=None) -> int:
    out = out or sys.stdout
    if n_true < 0 or n_false < 0:
        raise UsageError("--n-true and --n-false must be non-negative")
    store = _load_store(cfg.kg)
    try:
        claims, reduced = build_dataset(predicate, store, n_true, n_false, cfg.seed)
    except InsufficientCandidates as exc:
        raise DataError(f"{exc}; maximum available: {exc.available}") from exc
    write_dataset(claims, out_path)
    kg_out = out_path + ".kg.tsv"
    reduced.write_tsv(kg_out)
    out.write(f"wrote {len(claims)} claims to {out_path} and the reduced KG to {kg_out}\n")
    return EXIT_DECIDED


def _save_cache(fc: FactChecker) -> None:
    if fc.oracle is not None:
        fc.oracle.save()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        if args.command == "check":
            return cmd_check(cfg, args.claim)
        if args.command == "eval":
            return cmd_eval(cfg, args.dataset, args.out)
        return cmd_gen_dataset(cfg, args.predicate, args.n_true, args.n_false, args.out)
    except UsageError as exc:
        print(f"kgfactcheck: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, MalformedRecord, RuleError, FixtureParseError) as exc:
        print(f"kgfactcheck: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
