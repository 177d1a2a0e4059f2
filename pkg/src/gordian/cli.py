"""
Command-line entry point.

Subcommands::

    gordian construct  --spec spec.json --out DIR
    gordian verify-iso --trials 10000 --seed 0 --out DIR
    gordian relax      --scenario gordian|clasp|scenario.json --out DIR
    gordian export     --link link.json --format tube-obj|cone-obj --out DIR
    gordian invariants --seed 0 --out DIR

Exit codes: 0 success, 2 input error, 3 construction failure, 4 I/O error,
5 invariant violation. Set ``GORDIAN_LOG`` to a logging level name (for
example ``INFO``) for progress messages on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import checks
from .construction import GordianSpec, build_link, clasp_link, validate_construction
from .engine import EngineConfig, ForceSpec, attempt_split, state_to_json
from .errors import ConstructionError, GordianError, InvariantViolation, ValidationError
from .export import cone_disk_obj, curve_tube_obj, tube_obj
from .geom import PolyCurve, ThickLink
from .isoperimetric import (EQUILATERAL_SIDE, DiskConfig, sample_and_sweep, sweep_csv,
                            verify_three_disk_bound)

log = logging.getLogger("gordian")

EXIT_OK, EXIT_INPUT, EXIT_CONSTRUCTION, EXIT_IO, EXIT_INVARIANT = 0, 2, 3, 4, 5
ISO_TOL = 1e-9


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


class OutputError(Exception):
    """Failure writing results; maps to exit code 4."""


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    spec: GordianSpec = field(default_factory=GordianSpec)
    engine: EngineConfig = field(default_factory=EngineConfig)
    outputs: str = "."
    verify: dict = field(default_factory=dict)
    link: str = "gordian"

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("scenario name must be a nonempty string")
        if self.link not in ("gordian", "clasp"):
            raise ValidationError("scenario link must be 'gordian' or 'clasp'")
        extra = set(self.verify) - {"isoperimetric_trials", "invariant_checks"}
        if extra:
            raise ValidationError(f"unknown verify keys: {sorted(extra)}")
        trials = self.verify.get("isoperimetric_trials", 0)
        if int(trials) != trials or trials < 0:
            raise ValidationError("isoperimetric_trials must be a nonnegative integer")

    @classmethod
    def from_dict(cls, data: dict) -> Scenario:
        if not isinstance(data, dict):
            raise ValidationError("scenario JSON must be an object")
        extra = set(data) - set(cls.__dataclass_fields__)
        if extra:
            raise ValidationError(f"unknown scenario keys: {sorted(extra)}")
        for key in ("spec", "engine", "verify"):
            if key in data and not isinstance(data[key], dict):
                raise ValidationError(f"scenario {key} must be an object")
        data = dict(data)
        if "name" not in data:
            raise ValidationError("scenario needs a name")
        if "spec" in data:
            data["spec"] = GordianSpec.from_dict(data["spec"])
        if "engine" in data:
            data["engine"] = EngineConfig.from_dict(data["engine"])
        return cls(**data)

    def to_dict(self) -> dict:
        return {"name": self.name, "link": self.link, "spec": self.spec.to_dict(),
                "engine": self.engine.to_dict(), "outputs": self.outputs, "verify": dict(self.verify)}

    def build(self) -> ThickLink:
        if self.link == "clasp":
            return clasp_link()
        return build_link(self.spec)


BUILTIN_SCENARIOS = {
    # the headline run: the Gordian candidate relaxed under the symmetric stretch
    "gordian": Scenario("gordian", spec=GordianSpec(n1=64, n2=256, straight_edges=3),
                        engine=EngineConfig()),
    # a splittable control: lifting a small circle out of a large one
    "clasp": Scenario("clasp", link="clasp",
                      engine=EngineConfig(force=ForceSpec(mode="direction", direction=(0.0, 0.0, 1.0)),
                                          mirror=False, max_steps=20_000, checkpoint_every=250)),
}


# --------------------------------------------------------------------------
# file helpers
# --------------------------------------------------------------------------

def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _write(out: Path, name: str, text: str) -> Path:
    try:
        out.mkdir(parents=True, exist_ok=True)
        target = out / name
        target.write_text(text)
    except OSError as exc:
        raise OutputError(f"cannot write {out / name}: {exc.strerror or exc}") from exc
    return target


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_scenario(ref: str) -> Scenario:
    if ref in BUILTIN_SCENARIOS and not Path(ref).exists():
        return BUILTIN_SCENARIOS[ref]
    try:
        return Scenario.from_dict(_read_json(ref))
    except (ValidationError, TypeError) as exc:
        raise InputError(f"invalid scenario {ref}: {exc}") from exc


def load_link(path: str) -> ThickLink | PolyCurve:
    """A link JSON, or a single curve JSON (which may be open)."""
    data = _read_json(path)
    try:
        if isinstance(data, dict) and "components" in data:
            return ThickLink.from_dict(data)
        if isinstance(data, dict) and "vertices" in data:
            return PolyCurve.from_dict(data)
    except (ValidationError, TypeError, ValueError) as exc:
        raise InputError(f"invalid link file {path}: {exc}") from exc
    raise InputError(f"{path} holds neither a link nor a curve")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_construct(args) -> int:
    if args.spec:
        try:
            spec = GordianSpec.from_dict(_read_json(args.spec))
        except (ValidationError, TypeError) as exc:
            raise InputError(f"invalid spec: {exc}") from exc
    else:
        spec = GordianSpec()
    out = Path(args.out)
    try:
        link = build_link(spec)
    except ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    report = validate_construction(*link.components, seed=args.seed)
    _write(out, "link.json", _dump(link.to_dict()))
    _write(out, "report.json", _dump(report.to_dict()))
    print(f"L1 length {report.l1_length:.9f}  thickness {report.thickness:.6f}  "
          f"determinant {report.determinant}  conditions_ok {report.conditions_ok}")
    if not report.conditions_ok:
        print("construction conditions failed: " + "; ".join(report.notes), file=sys.stderr)
        return EXIT_CONSTRUCTION
    return EXIT_OK


def cmd_verify_iso(args) -> int:
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    results = sample_and_sweep(args.trials, seed=args.seed)
    if args.include_equilateral:
        sides = (EQUILATERAL_SIDE,) * 3
        results.append((sides, verify_three_disk_bound(DiskConfig.from_sides(*sides))))
    path = _write(Path(args.out), "iso_sweep.csv", sweep_csv(results))
    worst = min(m.margin for _, m in results)
    print(f"{len(results)} configurations, min margin {worst:.12g} -> {path}")
    return EXIT_OK if worst >= -ISO_TOL else EXIT_INVARIANT


def cmd_relax(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, engine=replace(scenario.engine, seed=args.seed))
    out = Path(args.out or scenario.outputs)
    try:
        link = scenario.build()
    except ConstructionError as exc:
        print(f"construction failed: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    _write(out, "scenario.json", _dump(scenario.to_dict()))
    snaps = out / "snapshots"

    def on_checkpoint(state, row):
        _write(snaps, f"step_{state.step_index:07d}.json", state_to_json(state) + "\n")

    status = EXIT_OK
    try:
        report = attempt_split(link, scenario.engine, on_checkpoint=on_checkpoint)
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        _write(out, "violation.txt", str(exc) + "\n")
        return EXIT_INVARIANT
    _write(out, "trace.csv", report.trace_csv())
    _write(out, "report.json", _dump(report.to_dict()))
    dotted = max((h[1] for h in report.dot_history), default=0)
    print(f"{scenario.name}: {report.terminated} after {report.final_state.step_index} steps, "
          f"best separation {report.best_separation:.6f}, max dotted components {dotted}")
    if report.terminated == "stall":
        log.warning("run stalled: %s", report.message)

    trials = int(scenario.verify.get("isoperimetric_trials", 0))
    if trials:
        worst = min(m.margin for _, m in sample_and_sweep(trials, seed=scenario.engine.seed))
        status = status if worst >= -ISO_TOL else EXIT_INVARIANT
    if scenario.verify.get("invariant_checks"):
        results = checks.run_checks(scenario.engine.seed)
        _write(out, "invariants.json", _dump([r.to_dict() for r in results]))
        status = status if all(r.passed for r in results) else EXIT_INVARIANT
    return status


def cmd_export(args) -> int:
    if not args.link:
        raise InputError("--link is required")
    obj = load_link(args.link)
    out = Path(args.out)
    if args.format == "tube-obj":
        if isinstance(obj, PolyCurve):
            text = curve_tube_obj(obj, args.radius, args.segments)
        else:
            text = tube_obj(obj, args.segments)
        path = _write(out, "tube.obj", text)
    else:
        if isinstance(obj, PolyCurve):
            curve = obj
        elif 0 <= args.component < len(obj.components):
            curve = obj.components[args.component]
        else:
            raise InputError(f"--component must lie in [0, {len(obj.components) - 1}]")
        if not curve.closed:
            raise InputError("cone-obj needs a closed curve")
        path = _write(out, "cone.obj", cone_disk_obj(curve, refine=args.refine))
    print(f"wrote {path}")
    return EXIT_OK


def cmd_invariants(args) -> int:
    results = checks.run_checks(args.seed)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:16s} {r.detail}  ({r.seconds:.2f} s)")
    _write(Path(args.out), "invariants.json", _dump([r.to_dict() for r in results]))
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gordian", description=__doc__.split("\n\n")[0].strip())
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="build L1 and L2 and check the construction")
    c.add_argument("--spec", help="GordianSpec JSON (defaults apply when omitted)")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=".")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify-iso", help="random sweep of the three-disk length bound")
    v.add_argument("--trials", type=int, default=10_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--include-equilateral", action="store_true",
                   help="append the side-2 equilateral configuration")
    v.add_argument("--out", default=".")
    v.set_defaults(func=cmd_verify_iso)

    r = sub.add_parser("relax", help="run a splitting attempt")
    r.add_argument("--scenario", default="gordian",
                   help="scenario JSON, or a built-in name: " + ", ".join(BUILTIN_SCENARIOS))
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--out", default=None, help="output directory (overrides the scenario)")
    r.set_defaults(func=cmd_relax)

    e = sub.add_parser("export", help="write an OBJ mesh")
    e.add_argument("--link", help="link JSON or curve JSON")
    e.add_argument("--format", choices=("tube-obj", "cone-obj"), default="tube-obj")
    e.add_argument("--segments", type=int, default=12, help="vertices per tube ring")
    e.add_argument("--radius", type=float, default=1.0, help="tube radius for a bare curve")
    e.add_argument("--component", type=int, default=0, help="component spanned by the cone disk")
    e.add_argument("--refine", type=int, default=1, help="cone disk subdivisions per side")
    e.add_argument("--out", default=".")
    e.set_defaults(func=cmd_export)

    i = sub.add_parser("invariants", help="run the built-in property checks")
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out", default=".")
    i.set_defaults(func=cmd_invariants)
    return p


def _setup_logging() -> None:
    level = os.environ.get("GORDIAN_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OutputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GordianError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION if isinstance(exc, ConstructionError) else EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
