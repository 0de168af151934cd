"""Command-line front end.

    reducible-fields energy --scenario s.json
    reducible-fields field-eval --scenario s.json --format csv --out phi.csv
    reducible-fields verify --seed 0

Exit status is 0 when every verification request passed, 1 when any
verification failed or a request raised, 2 for unusable input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys

from .kspace import PhysicalConstants
from .em_field import calibrate_lambda_l
from .scenario import SCHEMA_VERSION, ResultRecord, Scenario, ScenarioError, load_scenario, run, run_request
from .verify import run_suite

COMMANDS = ("field-eval", "energy", "stokes", "calibrate", "verify", "appendix-b", "run")

log = logging.getLogger("reducible_fields")


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reducible-fields",
                                     description="Quantum field expectation values on wave-vector grids.")
    parser.add_argument("command", choices=COMMANDS,
                        help="request type to execute; 'run' executes every request in the scenario")
    parser.add_argument("--scenario", help="scenario JSON file (optional for calibrate and verify)")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--seed", type=_seed, default=0, help="seed for randomized checks (default 0)")
    parser.add_argument("--timing", action="store_true",
                        help="include wall-clock timings (output is then not reproducible)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _records(args, scenario: Scenario | None) -> list[ResultRecord]:
    cmd = args.command
    if scenario is None:
        if cmd == "verify":
            report = run_suite(args.seed)
            return [ResultRecord("verify", "verify", report.to_json(), "", report.passed)]
        if cmd == "calibrate":
            payload = calibrate_lambda_l(PhysicalConstants.si()).to_json()
            return [ResultRecord("calibrate", "calibrate", payload, "")]
        raise ScenarioError(f"{cmd} needs --scenario")
    if cmd == "run":
        return run(scenario, args.seed)
    records = run(scenario, args.seed, types={cmd})
    if records:
        return records
    if cmd == "field-eval":
        raise ScenarioError("scenario has no field-eval request (points are required)")
    if cmd == "appendix-b" and scenario.state_kind != "coherent":
        raise ScenarioError("appendix-b needs a coherent state with a profile")
    if cmd == "stokes" and scenario.modes != 2:
        raise ScenarioError("stokes needs a photon (two-mode) state")
    return [run_request(scenario, {"id": cmd, "type": cmd}, args.seed)]


def _to_json(args, scenario: Scenario | None, records: list[ResultRecord]) -> str:
    doc = {
        "schema": SCHEMA_VERSION,
        "command": args.command,
        "seed": args.seed,
        "scenario_checksum": scenario.checksum if scenario else None,
        "passed": all(r.passed is not False for r in records),
        "results": [r.to_json(args.timing) for r in records],
    }
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _flatten(prefix: str, value, out: list):
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(f"{prefix}.{k}" if prefix else k, value[k], out)
    elif isinstance(value, list):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, value))


def _to_csv(records: list[ResultRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    tables = [r for r in records if r.type == "field-eval" and "rows" in r.payload]
    if tables and len(tables) == len(records):
        writer.writerow(tables[0].payload["columns"])
        for r in tables:
            writer.writerows(r.payload["rows"])
        return buf.getvalue()
    writer.writerow(["id", "key", "value"])
    for r in records:
        flat: list = []
        _flatten("", {"passed": r.passed, **r.payload}, flat)
        for key, value in flat:
            writer.writerow([r.id, key, "" if value is None else value])
    return buf.getvalue()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = load_scenario(args.scenario) if args.scenario else None
        records = _records(args, scenario)
    except (ScenarioError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = _to_csv(records) if args.format == "csv" else _to_json(args, scenario, records)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for r in records:
        if r.passed is False:
            log.warning("request %s (%s) failed", r.id, r.type)
    return 0 if all(r.passed is not False for r in records) else 1


if __name__ == "__main__":
    sys.exit(main())
