"""Command line runner: ``momentpoly <command> --config cfg.json``.

Every command reads one JSON experiment config, writes its outputs into the
output directory (atomically, JSON with sorted keys, floats with 17
significant digits) and records the config and its hash in manifest.json.

Exit codes: 0 success, 1 a check missed its threshold, 2 bad input,
3 file system failure, 4 numerical or pipeline failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .errors import InvalidArgument, MomentPolyError, NumericFailure, StageFailure
from .flow import FlowControls, kirwan_flow, shifted_flow
from .lie import to_fraction
from .orbit import OrbitPoint, OrbitProblem, sample_array
from .polytope import hull_from_points, project_point
from .ressayre import VerificationBudget, sampled_polytope, verify_theorem

log = logging.getLogger("momentpoly")

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4


class IOFailure(MomentPolyError):
    pass


# ---------------------------------------------------------------------------
# config


@dataclass
class ExperimentConfig:
    spectra: list[list[Fraction]]
    mode: str = "real"
    seed: int = 0
    count: int = 10000
    fixed_points: bool = False
    flow: FlowControls = field(default_factory=FlowControls)
    trials: int = 8
    rank_tol: float = 1e-7
    probe_count: int = 10
    exhaustive: bool = False
    membership_tol: float = 1e-8
    hausdorff_tol: float = 1e-2
    out_dir: str = "out"
    formats: tuple[str, ...] = ("csv", "json")

    @property
    def problem(self) -> OrbitProblem:
        return OrbitProblem(self.spectra, self.mode)

    def budget(self) -> VerificationBudget:
        return VerificationBudget(
            samples=self.count, seed=self.seed, trials=self.trials, rank_tol=self.rank_tol,
            membership_tol=self.membership_tol, hausdorff_tol=self.hausdorff_tol,
            exhaustive=self.exhaustive, fixed_points=self.fixed_points,
        )

    def to_json(self) -> dict:
        return {
            "problem": {"n": len(self.spectra[0]), "k": len(self.spectra), "mode": self.mode,
                        "spectra": [[_frac_str(x) for x in s] for s in self.spectra]},
            "sampling": {"seed": self.seed, "count": self.count, "fixed_points": self.fixed_points},
            "flow": asdict(self.flow),
            "ressayre": {"trials": self.trials, "rank_tol": self.rank_tol,
                         "probe_count": self.probe_count, "exhaustive": self.exhaustive},
            "tolerances": {"membership": self.membership_tol, "hausdorff": self.hausdorff_tol},
            "output": {"dir": self.out_dir, "formats": list(self.formats)},
        }

    def digest(self) -> str:
        return hashlib.sha256(dumps(self.to_json()).encode()).hexdigest()


def _frac_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a config document; raises InvalidArgument with the offending key."""
    if not isinstance(doc, dict):
        raise InvalidArgument("config must be a JSON object")
    prob = doc.get("problem")
    if not isinstance(prob, dict) or "spectra" not in prob:
        raise InvalidArgument("config.problem.spectra is required")
    try:
        spectra = [[to_fraction(x) for x in s] for s in prob["spectra"]]
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"config.problem.spectra: {exc}") from exc
    cfg = ExperimentConfig(spectra, prob.get("mode", "real"))
    p = cfg.problem  # OrbitProblem invariants
    if "n" in prob and int(prob["n"]) != p.n:
        raise InvalidArgument(f"config.problem.n = {prob['n']} but spectra have length {p.n}")
    if "k" in prob and int(prob["k"]) != p.k:
        raise InvalidArgument(f"config.problem.k = {prob['k']} but {p.k} spectra given")
    s = doc.get("sampling", {})
    cfg.seed = int(s.get("seed", cfg.seed))
    cfg.count = int(s.get("count", cfg.count))
    cfg.fixed_points = bool(s.get("fixed_points", cfg.fixed_points))
    if cfg.count < 1 or cfg.seed < 0:
        raise InvalidArgument("sampling.count must be >= 1 and sampling.seed >= 0")
    fl = doc.get("flow", {})
    known = {f.name for f in fields(FlowControls)}
    bad = set(fl) - known
    if bad:
        raise InvalidArgument(f"unknown flow keys: {sorted(bad)}")
    cfg.flow = FlowControls(**fl)
    r = doc.get("ressayre", {})
    cfg.trials = int(r.get("trials", cfg.trials))
    cfg.rank_tol = float(r.get("rank_tol", cfg.rank_tol))
    cfg.probe_count = int(r.get("probe_count", cfg.probe_count))
    cfg.exhaustive = bool(r.get("exhaustive", cfg.exhaustive))
    t = doc.get("tolerances", {})
    cfg.membership_tol = float(t.get("membership", cfg.membership_tol))
    cfg.hausdorff_tol = float(t.get("hausdorff", cfg.hausdorff_tol))
    o = doc.get("output", {})
    cfg.out_dir = str(o.get("dir", cfg.out_dir))
    cfg.formats = tuple(o.get("formats", cfg.formats))
    return cfg


# ---------------------------------------------------------------------------
# deterministic output


def _num(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    return s


def dumps(obj: Any, indent: int = 0) -> str:
    """JSON with sorted keys and 17 significant digits for every float."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, Fraction):
        return json.dumps(_frac_str(obj))
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    return json.dumps(str(obj))


def _atomic_write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def write_json(path: Path, obj) -> None:
    _atomic_write(path, dumps(obj) + "\n")


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    _atomic_write(path, buf.getvalue())


def _manifest(cfg: ExperimentConfig, out: Path, command: str, files: list[str], extra: dict | None = None):
    doc = {"command": command, "config": cfg.to_json(), "config_sha256": cfg.digest(),
           "files": sorted(files), "version": __version__}
    if extra:
        doc.update(extra)
    write_json(out / "manifest.json", doc)


# ---------------------------------------------------------------------------
# commands


def cmd_sample(cfg: ExperimentConfig, out: Path, args) -> int:
    p = cfg.problem
    X = sampled_polytope(p, cfg.count, cfg.seed, fixed_points=cfg.fixed_points).cloud
    name = "samples.csv" if p.mode == "real" else "samples_hermitian.csv"
    rows = [[i, *row] for i, row in enumerate(X.tolist())]
    write_csv(out / name, ["index"] + [f"c{i + 1}" for i in range(p.n)], rows)
    _manifest(cfg, out, "sample", [name])
    return EXIT_OK


def cmd_hull(cfg: ExperimentConfig, out: Path, args) -> int:
    p = cfg.problem
    sp = sampled_polytope(p, cfg.count, cfg.seed, fixed_points=cfg.fixed_points)
    doc = sp.hull.to_json()
    doc["dim"] = sp.hull.dim
    doc["sample_count"] = sp.count
    write_json(out / "hull.json", doc)
    _manifest(cfg, out, "hull", ["hull.json"])
    return EXIT_OK


def cmd_flow(cfg: ExperimentConfig, out: Path, args) -> int:
    p = cfg.problem
    seed = args.start_seed if args.start_seed is not None else cfg.seed
    z = OrbitPoint(sample_array(p, seed, 1)[0])
    if args.diagonal_start:
        z = OrbitPoint.diagonal(p)
    res = kirwan_flow(p, z, cfg.flow, record=True)
    write_csv(out / "flow_trace.csv", ["step", "f", "residual"], list(res.trace_rows()))
    write_json(out / "flow.json", res.to_json())
    _manifest(cfg, out, "flow", ["flow.json", "flow_trace.csv"], {"start_seed": seed})
    return EXIT_OK if res.converged else EXIT_CHECK


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(to_fraction(t.strip())) for t in text.split(",") if t.strip()])
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"cannot parse vector {text!r}") from exc


def cmd_project(cfg: ExperimentConfig, out: Path, args) -> int:
    p = cfg.problem
    if args.xi is None:
        raise InvalidArgument("project needs --xi")
    xi = _parse_vector(args.xi)
    sf = shifted_flow(p.with_mode("real"), xi, cfg.flow, seed=cfg.seed)
    # polytope side: the certified region when the pipeline succeeds, the sampled hull otherwise
    rep = verify_theorem(p, cfg.budget())
    V = rep.comparison.region_vertices if rep.passed else hull_from_points(
        sampled_polytope(p, cfg.count, cfg.seed, fixed_points=cfg.fixed_points).cloud).vertices
    poly = hull_from_points(V)
    _, dpoly = project_point(poly, xi)
    doc = {
        "xi": sf.xi, "xi_prime": sf.xi_prime, "gamma": sf.gamma, "dist": sf.distance,
        "polytope_dist": dpoly, "polytope_source": "certified" if rep.passed else "sampled",
        "agreement_with_polytope": abs(sf.distance - dpoly),
        "flow_steps": sf.result.steps, "flow_converged": sf.result.converged,
    }
    write_json(out / "projection.json", doc)
    _manifest(cfg, out, "project", ["projection.json"])
    return EXIT_OK


def cmd_pairs(cfg: ExperimentConfig, out: Path, args) -> int:
    rep = verify_theorem(cfg.problem, cfg.budget())
    write_json(out / "pairs.json", [pr.to_json() for pr in rep.pairs])
    _manifest(cfg, out, "pairs", ["pairs.json"])
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, out: Path, args) -> int:
    try:
        rep = verify_theorem(cfg.problem, cfg.budget())
    except StageFailure as exc:
        write_json(out / "report.json", {"passed": False, "stage": exc.stage, "error": str(exc.cause)})
        _manifest(cfg, out, "verify", ["report.json"])
        return EXIT_NUMERIC
    doc = rep.to_json()
    doc["thresholds"] = {"membership": cfg.membership_tol, "hausdorff": cfg.hausdorff_tol}
    write_json(out / "report.json", doc)
    write_json(out / "inequalities.json", rep.system.to_json())
    _manifest(cfg, out, "verify", ["inequalities.json", "report.json"])
    return EXIT_OK if rep.passed else EXIT_CHECK


def cmd_report(cfg: ExperimentConfig, out: Path, args) -> int:
    path = out / "report.json"
    if not path.exists():
        raise InvalidArgument(f"{path} not found; run verify first")
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "stage" in doc:
        print(f"pipeline failed in stage {doc['stage']}: {doc.get('error')}")
        return EXIT_NUMERIC
    c = doc["comparison"]
    print(f"samples      {doc['sample_count']}")
    print(f"pairs        {len(doc['pairs'])}")
    for e in doc["inequalities"]["equalities"]:
        print(f"  <xi, ({', '.join(e['normal'])})> = {e['offset']}")
    for i in doc["inequalities"]["inequalities"]:
        print(f"  <xi, ({', '.join(i['normal'])})> >= {i['offset']}   [{', '.join(i['sources'])}]")
    print(f"soundness    {c['soundness']:.3e}  ({'ok' if doc['soundness_ok'] else 'FAIL'})")
    print(f"hausdorff    {c['hausdorff']:.3e}  ({'ok' if doc['completeness_ok'] else 'FAIL'})")
    for w in doc.get("warnings", []):
        print(f"warning: {w}")
    return EXIT_OK if doc["passed"] else EXIT_CHECK


COMMANDS = {
    "sample": cmd_sample,
    "hull": cmd_hull,
    "flow": cmd_flow,
    "project": cmd_project,
    "pairs": cmd_pairs,
    "verify": cmd_verify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="momentpoly", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="experiment config (JSON)")
    ap.add_argument("--seed", type=int, help="override sampling.seed")
    ap.add_argument("--out", help="override output.dir")
    ap.add_argument("--mode", choices=("real", "hermitian"), help="override problem.mode")
    ap.add_argument("--xi", help="probe for 'project', comma separated (rationals allowed)")
    ap.add_argument("--start-seed", type=int, help="seed of the starting point for 'flow'")
    ap.add_argument("--diagonal-start", action="store_true", help="start 'flow' at the diagonal point")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise IOFailure(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"config is not valid JSON: {exc}") from exc
        cfg = parse_config(doc)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2**64:
                raise InvalidArgument("--seed must be an unsigned 64-bit integer")
            cfg.seed = args.seed
        if args.mode:
            cfg.mode = args.mode
            cfg.problem  # re-validate
        if args.out:
            cfg.out_dir = args.out
        return COMMANDS[args.command](cfg, Path(cfg.out_dir), args)
    except IOFailure as exc:
        print(f"io-failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvalidArgument as exc:
        print(f"invalid-argument: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericFailure, StageFailure) as exc:
        print(f"numeric-failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
