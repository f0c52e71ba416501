"""Command-line front end.

Commands:

  solve     compute a verified equilibrium for an instance file
  verify    check a candidate (prices + allocation) against an instance
  exists    exhaustive existence check with witness
  sweep     sample (profile, income) pairs and measure existence rates
  instance  print a bundled named instance as an instance file
  repro     run the full reproduction suite and print the summary table

Instance files are JSON; all rationals are exact strings like "27/2"
(never floats).  See the README for the schema.  Exit codes: 0 success
or valid, 1 reproduction mismatch, 2 invalid or nonexistent equilibrium,
3 non-generic incomes, 4 unsupported market size, 5 parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from .core import (
    Bundle,
    PartialRelations,
    PreferenceOrder,
    additive_preference,
    all_bundles,
    chain_pairs,
    complete_partial,
    format_bundle,
    make_preference,
    parse_bundle,
    random_preference,
    subsets_of_size,
)
from .instances import NAMED_INSTANCES, NamedInstance, random_generic_incomes
from .market import (
    Allocation,
    CEPair,
    IncomeRegion,
    IncomeVector,
    PriceVector,
    verify_ce,
)
from .oracle import InstanceTooLargeError, ce_exists
from .pixep import NoValidSpeError
from .repro import existence_table, format_table
from .solver import NotGenericError, UnsupportedCaseError, solve

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_INVALID = 2
EXIT_NOT_GENERIC = 3
EXIT_UNSUPPORTED = 4
EXIT_PARSE = 5

#: JSON Schema (draft-07 style) of the instance file format.
INSTANCE_SCHEMA: dict = {
    "type": "object",
    "required": ["items", "agents"],
    "properties": {
        "items": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "agents": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["name", "income", "preference"],
                "properties": {
                    "name": {"type": "string"},
                    "income": {"type": "string", "description": "exact rational, e.g. '27/2'"},
                    "preference": {
                        "type": "object",
                        "description": "exactly one of the keys below",
                        "properties": {
                            "ranking": {
                                "type": "array",
                                "items": {"type": "string"},
                                "description": "all bundles, worst to best",
                            },
                            "additive": {
                                "type": "array",
                                "items": {"type": "string"},
                                "description": "one exact value per item",
                            },
                            "partial": {
                                "type": "object",
                                "properties": {
                                    "chain": {
                                        "type": "array",
                                        "description": "best-to-worst; entries are a bundle, "
                                        "a list of bundles, or {'size': k, 'except': [...]}",
                                    },
                                    "pairs": {
                                        "type": "array",
                                        "items": {
                                            "type": "array",
                                            "description": "[better, worse]",
                                        },
                                    },
                                },
                            },
                        },
                    },
                },
            },
        },
        "region": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "string"}},
            "description": "optional strict constraints: each row c asserts sum(c_i * t_i) > 0",
        },
    },
}


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class ParsedInstance:
    item_names: tuple[str, ...]
    agent_names: tuple[str, ...]
    profile: tuple[PreferenceOrder, ...]
    incomes: IncomeVector
    region: IncomeRegion | None

    @property
    def m(self) -> int:
        return len(self.item_names)

    @property
    def n(self) -> int:
        return len(self.agent_names)


def _fraction(value: Any, context: str) -> Fraction:
    if isinstance(value, float):
        raise ParseError(
            f"{context}: floats are not allowed, use exact strings like '27/2'"
        )
    try:
        return Fraction(str(value))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"{context}: {exc}") from exc


def _chain_element(element: Any, m: int, names: Sequence[str]) -> list[Bundle]:
    if isinstance(element, str):
        return [parse_bundle(element, names)]
    if isinstance(element, list):
        return [parse_bundle(text, names) for text in element]
    if isinstance(element, dict) and "size" in element:
        excluded = {
            parse_bundle(text, names) for text in element.get("except", [])
        }
        return [b for b in subsets_of_size(m, int(element["size"])) if b not in excluded]
    raise ParseError(f"bad chain element {element!r}")


def _parse_preference(doc: Any, m: int, names: Sequence[str], agent: str) -> PreferenceOrder:
    if not isinstance(doc, dict) or len(doc) != 1:
        raise ParseError(
            f"agent {agent}: preference must be an object with exactly one of "
            "'ranking', 'additive', 'partial'"
        )
    try:
        if "ranking" in doc:
            ranking = [parse_bundle(text, names) for text in doc["ranking"]]
            return make_preference(m, ranking)
        if "additive" in doc:
            values = [_fraction(v, f"agent {agent} additive value") for v in doc["additive"]]
            return additive_preference(m, values)
        if "partial" in doc:
            spec = doc["partial"]
            pairs = []
            for chain in ([spec["chain"]] if "chain" in spec else []):
                groups = [_chain_element(e, m, names) for e in chain]
                pairs.extend(chain_pairs(groups))
            for pair in spec.get("pairs", []):
                better, worse = pair
                pairs.append((parse_bundle(better, names), parse_bundle(worse, names)))
            return complete_partial(PartialRelations(m=m, pairs=tuple(pairs)))
    except ParseError:
        raise
    except ValueError as exc:
        raise ParseError(f"agent {agent}: {exc}") from exc
    raise ParseError(f"agent {agent}: unknown preference kind {set(doc)}")


def load_instance(doc: dict) -> ParsedInstance:
    if not isinstance(doc, dict):
        raise ParseError("instance file must contain a JSON object")
    for key in ("items", "agents"):
        if key not in doc:
            raise ParseError(f"instance file is missing {key!r}")
    names = tuple(str(x) for x in doc["items"])
    if len(set(names)) != len(names):
        raise ParseError("item names must be distinct")
    m = len(names)
    agent_names = []
    incomes = []
    profile = []
    for i, agent in enumerate(doc["agents"]):
        name = str(agent.get("name", f"agent{i}"))
        agent_names.append(name)
        incomes.append(_fraction(agent.get("income"), f"income of {name}"))
        profile.append(_parse_preference(agent.get("preference"), m, names, name))
    try:
        income_vector = IncomeVector.of(incomes)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    region = None
    if "region" in doc:
        rows = [
            [_fraction(v, "region coefficient") for v in row] for row in doc["region"]
        ]
        region = IncomeRegion.of(len(profile), rows)
    return ParsedInstance(
        item_names=names,
        agent_names=tuple(agent_names),
        profile=tuple(profile),
        incomes=income_vector,
        region=region,
    )


def _read_json(path: str) -> dict:
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as handle:
            return json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc


def instance_to_document(inst: NamedInstance) -> dict:
    """Serialize a bundled instance into the instance file format."""
    names = inst.item_names
    agents = []
    for agent_name, income, rel in zip(inst.agent_names, inst.reference, inst.relations):
        agents.append(
            {
                "name": agent_name,
                "income": str(income),
                "preference": {
                    "partial": {
                        "pairs": [
                            [format_bundle(b, names), format_bundle(w, names) if w else ""]
                            for b, w in rel.pairs
                        ]
                    }
                },
            }
        )
    return {
        "items": list(names),
        "agents": agents,
        "region": [[str(c) for c in row] for row in inst.region.constraints],
    }


def load_candidate(doc: dict, inst: ParsedInstance) -> CEPair:
    for key in ("prices", "allocation"):
        if key not in doc:
            raise ParseError(f"candidate document is missing {key!r}")
    prices = []
    for name in inst.item_names:
        if name not in doc["prices"]:
            raise ParseError(f"candidate prices are missing item {name!r}")
        prices.append(_fraction(doc["prices"][name], f"price of {name}"))
    bundles = []
    alloc = doc["allocation"]
    for name in inst.agent_names:
        bundles.append(parse_bundle(str(alloc.get(name, "")), inst.item_names))
    try:
        return CEPair(
            prices=PriceVector.of(prices),
            allocation=Allocation(m=inst.m, bundles=tuple(bundles)),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _allocation_doc(pair: CEPair, inst: ParsedInstance) -> dict:
    return {
        name: format_bundle(pair.allocation[i], inst.item_names)
        if pair.allocation[i]
        else ""
        for i, name in enumerate(inst.agent_names)
    }


def _prices_doc(pair: CEPair, inst: ParsedInstance) -> dict:
    return {name: str(pair.prices[j]) for j, name in enumerate(inst.item_names)}


def _emit(doc: dict) -> None:
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")


def cmd_solve(args) -> int:
    inst = load_instance(_read_json(args.instance))
    try:
        pair, transcript = solve(list(inst.profile), inst.incomes)
    except NotGenericError as exc:
        _emit({"status": "not-generic", "hyperplane": exc.hyperplane.label})
        return EXIT_NOT_GENERIC
    except UnsupportedCaseError as exc:
        _emit({"status": "unsupported-case", "error": str(exc)})
        return EXIT_UNSUPPORTED
    except NoValidSpeError as exc:
        witness = ce_exists(list(inst.profile), inst.incomes) if inst.m <= 6 else None
        _emit(
            {
                "status": "no-equilibrium-play",
                "error": str(exc),
                "exhaustive_check": "no equilibrium exists for this instance"
                if witness is None
                else "an equilibrium exists but no bundled game implements it",
            }
        )
        return EXIT_INVALID
    doc = {
        "status": "ok",
        "range": transcript.range_label,
        "game": transcript.game_label,
        "order": [inst.agent_names[i] for i in transcript.order],
        "epsilon": str(transcript.epsilon),
        "path": list(transcript.execution.path),
        "picks": [
            {
                "position": pos,
                "agent": inst.agent_names[transcript.order[agent]],
                "item": inst.item_names[item],
                "price": str(pair.prices[item]),
            }
            for pos, agent, item in transcript.execution.picks
        ],
        "allocation": _allocation_doc(pair, inst),
        "prices": _prices_doc(pair, inst),
    }
    _emit(doc)
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = load_instance(_read_json(args.instance))
    pair = load_candidate(_read_json(args.candidate), inst)
    report = verify_ce(
        list(inst.profile), inst.incomes, pair, strict_literal=args.strict_literal
    )
    _emit(
        {
            "valid": report.valid,
            "violations": [
                {
                    "agent": inst.agent_names[v.agent],
                    "kind": v.kind.value,
                    "bundle": format_bundle(v.bundle, inst.item_names),
                    "price": str(v.price),
                    "threshold": str(v.threshold),
                }
                for v in report.violations
            ],
        }
    )
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_exists(args) -> int:
    inst = load_instance(_read_json(args.instance))
    try:
        witness = ce_exists(list(inst.profile), inst.incomes)
    except InstanceTooLargeError as exc:
        _emit({"status": "instance-too-large", "error": str(exc)})
        return EXIT_UNSUPPORTED
    doc = {"allocations_checked": inst.n ** inst.m, "exists": witness is not None}
    if witness is not None:
        doc["witness"] = {
            "allocation": _allocation_doc(witness, inst),
            "prices": _prices_doc(witness, inst),
        }
    _emit(doc)
    return EXIT_OK if witness is not None else EXIT_INVALID


def _sweep_trial(payload) -> tuple[int, bool, list[str]]:
    (trial, m, n, seed, named_label) = payload
    if named_label is not None:
        inst = NAMED_INSTANCES[named_label]()
        profile = inst.completed_profile()
        incomes = inst.region.sample(seed=f"{seed}:{trial}", count=1)[0]
    else:
        profile = tuple(
            random_preference(m, seed=hash_stable(f"{seed}:{trial}:{i}"))
            for i in range(n)
        )
        incomes = _sweep_incomes(m, n, f"{seed}:{trial}")
    witness = ce_exists(list(profile), incomes)
    return (trial, witness is not None, [str(t) for t in incomes])


def hash_stable(text: str) -> int:
    import hashlib

    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


def _sweep_incomes(m: int, n: int, seed: str) -> IncomeVector:
    import random as _random

    rng = _random.Random(f"sweep:{seed}")
    while True:
        values = sorted(
            (Fraction(rng.randint(1, 2000), 100) for _ in range(n)), reverse=True
        )
        if len(set(values)) == n:
            try:
                from .solver import is_generic

                if not is_generic(IncomeVector.of(values), m):
                    continue
            except UnsupportedCaseError:
                pass
            return IncomeVector.of(values)


def cmd_sweep(args) -> int:
    named = None
    if args.profile != "random":
        if args.profile not in NAMED_INSTANCES:
            raise ParseError(
                f"unknown profile {args.profile!r}; use 'random' or one of "
                f"{', '.join(sorted(NAMED_INSTANCES))}"
            )
        named = args.profile
        inst = NAMED_INSTANCES[named]()
        m, n = inst.m, inst.n
    else:
        if args.items is None or args.agents is None:
            raise ParseError("--items and --agents are required with --profile random")
        m, n = args.items, args.agents
        if m > 5 or n > 4:
            raise ParseError("sweep supports at most 5 items and 4 agents")
    payloads = [(t, m, n, args.seed, named) for t in range(args.trials)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_trial, payloads, chunksize=8))
    else:
        results = [_sweep_trial(p) for p in payloads]
    results.sort(key=lambda r: r[0])
    hits = sum(1 for _, found, _ in results if found)
    doc = {
        "items": m,
        "agents": n,
        "profile": args.profile,
        "trials": args.trials,
        "seed": args.seed,
        "existence_count": hits,
        "existence_rate": f"{hits}/{args.trials}",
        "no_ce_points": [incomes for _, found, incomes in results if not found],
    }
    _emit(doc)
    return EXIT_OK


def cmd_instance(args) -> int:
    if args.name not in NAMED_INSTANCES:
        raise ParseError(
            f"unknown instance {args.name!r}; available: "
            f"{', '.join(sorted(NAMED_INSTANCES))}"
        )
    _emit(instance_to_document(NAMED_INSTANCES[args.name]()))
    return EXIT_OK


def cmd_repro(args) -> int:
    report = existence_table(scale=args.scale, seed=args.seed, d_max=args.dmax)
    for line in report.details:
        print(line)
    print()
    print(format_table(report))
    if report.all_match and report.audits_clean:
        print("\nall cells match the expected classification; audits clean")
        return EXIT_OK
    if not report.audits_clean:
        print("\nAUDIT FAILURE: a produced equilibrium violated a guarantee")
    if not report.all_match:
        print("\nMISMATCH: measured existence differs from the expected table")
    return EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cefai",
        description="competitive equilibrium with indivisible items and unequal incomes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve an instance file")
    p_solve.add_argument("instance", help="path to instance JSON ('-' for stdin)")
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="verify a candidate equilibrium")
    p_verify.add_argument("instance")
    p_verify.add_argument("candidate", help="JSON with 'prices' and 'allocation'")
    p_verify.add_argument(
        "--strict-literal",
        action="store_true",
        help="threshold affordability at the own-bundle price instead of the income",
    )
    p_verify.set_defaults(func=cmd_verify)

    p_exists = sub.add_parser("exists", help="exhaustive existence check")
    p_exists.add_argument("instance")
    p_exists.set_defaults(func=cmd_exists)

    p_sweep = sub.add_parser("sweep", help="existence rate over sampled instances")
    p_sweep.add_argument("--items", "-m", type=int)
    p_sweep.add_argument("--agents", "-n", type=int)
    p_sweep.add_argument(
        "--profile",
        default="random",
        help="'random' or a named instance (fixed profile, incomes from its region)",
    )
    p_sweep.add_argument("--trials", type=int, default=100)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_instance = sub.add_parser("instance", help="print a bundled named instance")
    p_instance.add_argument("name")
    p_instance.set_defaults(func=cmd_instance)

    p_repro = sub.add_parser("repro", help="reproduce the existence summary table")
    p_repro.add_argument("--scale", type=float, default=1.0)
    p_repro.add_argument("--seed", type=int, default=20)
    p_repro.add_argument(
        "--dmax", type=int, default=4, help="share-guarantee audit depth"
    )
    p_repro.set_defaults(func=cmd_repro)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NotGenericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_GENERIC
    except UnsupportedCaseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
