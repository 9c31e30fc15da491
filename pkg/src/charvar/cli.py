"""Command-line front end: solve / certify / volume / seifert-scan.

Configuration is JSON only (one parser, one schema), every command emits
machine-readable JSON, and files are written atomically (temp + rename).
Exit codes: 0 success, 1 configuration error, 2 numerical failure
(no convergence, insufficient samples), 3 certification failure.

Determinism contract: identical config + seed produce byte-identical
output files; nothing time- or path-dependent goes into the payloads.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import seifert as sf
from . import twoform as tf
from . import variety as vy
from . import volume as vol
from .errors import (
    CharvarError,
    ConfigError,
    InsufficientSamplesError,
    NoConvergenceError,
    OutsideDomainError,
)
from .liegroup import GroupSpec
from .presentation import GeneratorTuple, SurfacePresentation

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CERTIFY = 3

REPORT_SCHEMA = {
    "type": "object",
    "required": ["checks", "passed"],
    "properties": {
        "passed": {"type": "boolean"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["check", "value", "tolerance", "pass"],
                "properties": {
                    "check": {"type": "string"},
                    "value": {"type": "number"},
                    "tolerance": {"type": "number"},
                    "pass": {"type": "boolean"},
                },
            },
        },
    },
}

DEFAULT_TOLERANCES = {
    "tol_group": 1e-10,
    "tol_alg": 1e-10,
    "tol_flat": 1e-9,
    "gap_tol": 1e-6,
}


@dataclass
class RunConfig:
    """Validated run configuration."""

    group: GroupSpec
    problem: vy.VarietyProblem
    seed: int
    tolerances: dict
    initial: str = "haar"
    solver: dict = field(default_factory=dict)
    volume: dict = field(default_factory=dict)
    certify: dict = field(default_factory=dict)
    seifert: sf.SeifertData | None = None
    zeta_index: int | None = None

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        try:
            with open(path) as fh:
                raw = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"config parse error at line {e.lineno}, column {e.colno}: {e.msg}"
            ) from e
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config root must be a JSON object")
        try:
            group = GroupSpec.from_json(data["group"])
        except KeyError:
            raise ConfigError("missing 'group' section") from None
        except (ValueError, TypeError) as e:
            raise ConfigError(f"bad group spec: {e}") from e
        tol = dict(DEFAULT_TOLERANCES)
        tol.update(data.get("tolerances", {}))
        for name, val in tol.items():
            if not (isinstance(val, (int, float)) and val > 0):
                raise ConfigError(f"tolerance {name} must be positive")
        prob = data.get("problem")
        if not isinstance(prob, dict) or "type" not in prob:
            raise ConfigError("missing 'problem' section with a 'type'")
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ConfigError("seed must be an integer")
        seif = None
        zidx = None
        if prob["type"] == "surface":
            try:
                pres_ = SurfacePresentation(int(prob["genus"]),
                                            int(prob.get("boundary_count", 0)))
            except (KeyError, ValueError) as e:
                raise ConfigError(f"bad surface problem: {e}") from e
            cl = prob.get("classes", {})
            try:
                classes = vy.ConjugacyClassSpec.from_json(group, cl) if cl else \
                    vy.ConjugacyClassSpec(group)
            except (ValueError, KeyError) as e:
                raise ConfigError(f"bad class data: {e}") from e
            problem = vy.VarietyProblem(group, pres_, classes)
        elif prob["type"] == "seifert":
            try:
                seif = sf.SeifertData(int(prob["genus"]), int(prob["euler"]),
                                      group.rank, group.family)
            except (KeyError, ValueError) as e:
                raise ConfigError(f"bad seifert problem: {e}") from e
            zidx = int(prob.get("zeta_index", 0))
            cands = sf.fiber_holonomy_candidates(seif)
            if not (0 <= zidx < len(cands)):
                raise ConfigError(f"zeta_index out of range 0..{len(cands) - 1}")
            problem = sf.variety_problem(seif, cands[zidx])
        else:
            raise ConfigError(f"unknown problem type {prob['type']!r}")
        return cls(group=group, problem=problem, seed=seed, tolerances=tol,
                   initial=data.get("initial", "haar"),
                   solver=data.get("solver", {}),
                   volume=data.get("volume", {}),
                   certify=data.get("certify", {}),
                   seifert=seif, zeta_index=zidx)


def atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".charvar-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(payload: dict, out: str | None, quiet: bool, note: str = ""):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        atomic_write(out, text)
        if not quiet and note:
            print(note, file=sys.stderr)
    else:
        sys.stdout.write(text)


def error_record(kind: str, detail: str):
    print(json.dumps({"error": kind, "detail": detail}, sort_keys=True),
          file=sys.stderr)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _initial_tuple(cfg: RunConfig, rng) -> GeneratorTuple:
    if cfg.initial == "identity":
        return GeneratorTuple.identity(cfg.group, cfg.problem.presentation.genus,
                                       cfg.problem.presentation.boundary_count)
    if cfg.initial == "haar":
        return cfg.problem.random_initial(rng)
    raise ConfigError(f"unknown initial {cfg.initial!r}")


def cmd_solve(cfg: RunConfig, out: str | None, quiet: bool) -> int:
    rng = np.random.default_rng(cfg.seed)
    initial = _initial_tuple(cfg, rng)
    try:
        point = vy.project_to_variety(
            initial, cfg.problem.classes,
            tol_flat=cfg.tolerances["tol_flat"],
            max_iter=int(cfg.solver.get("max_iter", 200)),
            rng=rng,
        )
    except (NoConvergenceError, OutsideDomainError) as e:
        error_record("no_convergence", str(e))
        return EXIT_NUMERICAL
    point = point.with_irreducible(vy.is_irreducible(point))
    payload = {"group": cfg.group.to_json(), "point": point.to_json(),
               "seed": cfg.seed}
    emit(payload, out, quiet,
         f"solved: residual {point.residual_norm:.3e}, "
         f"irreducible={point.irreducible}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# certify
# ---------------------------------------------------------------------------

def _subspace_angle_cos_defect(A: np.ndarray, B: np.ndarray) -> float:
    """Max principal angle (radians) between equal-dimension column spans."""
    if A.shape[1] != B.shape[1]:
        return math.pi / 2
    if A.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(A.conj().T @ B, compute_uv=False)
    s = np.clip(s, -1.0, 1.0)
    return float(np.arccos(s.min()))


def certification_checks(point: vy.RepresentationPoint, cfg: RunConfig) -> list[dict]:
    """Run the descent / closedness / kernel / nondegeneracy battery."""
    checks = []
    tol_flat = cfg.tolerances["tol_flat"]
    gap_tol = cfg.tolerances["gap_tol"]
    classes = cfg.problem.classes

    def add(name, value, tolerance, ok=None):
        ok = bool(value <= tolerance) if ok is None else bool(ok)
        checks.append({"check": name, "value": float(value),
                       "tolerance": float(tolerance), "pass": ok})
        return ok

    if not add("residual", point.residual_norm, tol_flat):
        return checks
    if not add("irreducible", 0.0 if vy.is_irreducible(point) else 1.0, 0.5):
        return checks
    basis = vy.cohomology_at(point, classes, gap_tol=gap_tol, tol_flat=tol_flat)
    nz, nb, nh = basis.dims()
    add("coboundary_rank", abs(nb - cfg.group.dim), 0.5)
    add("rank_gap_quality", 1.0 / max(basis.gap_quality, 1e-300), gap_tol)
    # cocycle condition of the coboundaries
    D = tf.pres.relator_differential_matrix(
        point.spec, point.tuple.mats, point.tuple.genus, point.tuple.boundary_count)
    cocycle_defect = float(np.abs(D @ basis.b_coords).max()) if nb else 0.0
    add("coboundaries_are_cocycles", cocycle_defect, 1e-9)
    # descent, both argument orders
    if nb and nz:
        G1 = tf.form_gram(point, basis.b1, basis.z1)
        G2 = tf.form_gram(point, basis.z1, basis.b1)
        descent = max(np.abs(G1).max(), np.abs(G2).max())
    else:
        descent = 0.0
    add("descent", descent, 1e-9)
    fm = tf.form_on_cohomology(point, classes, basis)
    add("form_skew", fm.skew_defect(), 1e-10)
    svals = np.linalg.svd(fm.entries, compute_uv=False)
    smin = float(svals[-1]) if len(svals) else 0.0
    add("nondegenerate_sigma_min", -smin, -1e-8)
    kern = tf.kernel_of_form(point, classes, basis)
    K = np.stack([v.coords() for v in kern], axis=1) if kern else \
        np.zeros((basis.z_coords.shape[0], 0))
    angle = _subspace_angle_cos_defect(K, basis.b_coords)
    add("kernel_matches_coboundaries", angle, 1e-7)
    steps = cfg.certify.get("closedness_steps", [1e-3, 5e-4, 2.5e-4])
    if steps:
        vals = tf.closedness_sweep(point, classes, steps=tuple(steps))
        add("closedness_value", vals[0], 1e-4)
        order = tf.observed_order(steps, vals)
        add("closedness_order", -order, -1.8)
    return checks


def cmd_certify(cfg: RunConfig, point_path: str, out: str | None, quiet: bool) -> int:
    try:
        with open(point_path) as fh:
            data = json.load(fh)
    except OSError as e:
        error_record("config", f"cannot read point file: {e}")
        return EXIT_CONFIG
    except json.JSONDecodeError as e:
        error_record("config",
                     f"point parse error at line {e.lineno}, column {e.colno}: {e.msg}")
        return EXIT_CONFIG
    try:
        point = vy.RepresentationPoint.from_json(cfg.group, data["point"])
    except (KeyError, CharvarError) as e:
        error_record("config", f"bad point payload: {e}")
        return EXIT_CONFIG
    checks = certification_checks(point, cfg)
    passed = all(c["pass"] for c in checks)
    payload = {"checks": checks, "passed": passed, "seed": cfg.seed,
               "residual": point.residual_norm}
    emit(payload, out, quiet,
         "certify: " + ("all checks passed" if passed else "FAILED"))
    return EXIT_OK if passed else EXIT_CERTIFY


# ---------------------------------------------------------------------------
# volume
# ---------------------------------------------------------------------------

def cmd_volume(cfg: RunConfig, out: str | None, fmt: str, quiet: bool) -> int:
    n = int(cfg.volume.get("n_samples", 2000))
    gates = {}
    if "residual_gate" in cfg.volume:
        gates["residual_gate"] = float(cfg.volume["residual_gate"])
    if "distance_gate" in cfg.volume:
        gates["distance_gate"] = float(cfg.volume["distance_gate"])
    try:
        result = vol.cross_check(cfg.problem, n, cfg.seed, **gates)
    except InsufficientSamplesError as e:
        error_record("insufficient_samples", str(e))
        return EXIT_NUMERICAL
    payload = {
        "coarea": result["coarea"].to_json(),
        "tube": result["tube"].to_json(),
        "difference": result["difference"],
        "combined_stderr": result["combined_stderr"],
        "agree_3sigma": result["agree_3sigma"],
        "seed": cfg.seed,
    }
    if fmt == "csv" and out:
        rec = vol.sample_stream(cfg.problem, n, cfg.seed)
        csv_path = os.path.splitext(out)[0] + ".csv"
        _write_sample_csv(csv_path, rec)
        payload["samples_csv"] = os.path.basename(csv_path)
    emit(payload, out, quiet,
         f"volume: coarea {result['coarea'].value:.4g} "
         f"tube {result['tube'].value:.4g} "
         f"(3-sigma agree: {result['agree_3sigma']})")
    return EXIT_OK


def _write_sample_csv(path: str, rec: vol.SampleRecords):
    buf = []
    header = ["converged", "irreducible", "initial_residual",
              "displacement", "density", "jacobian"]
    buf.append(",".join(header))
    for i in range(rec.n):
        buf.append(",".join([
            str(int(rec.converged[i])), str(int(rec.irreducible[i])),
            repr(float(rec.initial_residual[i])), repr(float(rec.displacement[i])),
            repr(float(rec.density[i])), repr(float(rec.jacobian[i])),
        ]))
    atomic_write(path, "\n".join(buf) + "\n")


# ---------------------------------------------------------------------------
# seifert-scan
# ---------------------------------------------------------------------------

def cmd_seifert_scan(cfg: RunConfig, out: str | None, quiet: bool) -> int:
    if cfg.seifert is None:
        error_record("config", "seifert-scan needs a problem of type 'seifert'")
        return EXIT_CONFIG
    components = []
    worst = EXIT_OK
    for cand in sf.fiber_holonomy_candidates(cfg.seifert):
        problem = sf.variety_problem(cfg.seifert, cand)
        sub = RunConfig(group=cfg.group, problem=problem,
                        seed=cfg.seed + cand.index, tolerances=cfg.tolerances,
                        certify={"closedness_steps":
                                 cfg.certify.get("closedness_steps", [])})
        rng = np.random.default_rng(sub.seed)
        entry = {"zeta": [cand.zeta.real, cand.zeta.imag],
                 "target_power": cand.target_power}
        try:
            point = problem.solve(rng, tol_flat=cfg.tolerances["tol_flat"])
        except (NoConvergenceError, OutsideDomainError) as e:
            entry["solve"] = {"converged": False, "detail": str(e)}
            components.append(entry)
            worst = max(worst, EXIT_NUMERICAL)
            continue
        point = point.with_irreducible(vy.is_irreducible(point))
        entry["solve"] = {"converged": True,
                          "residual": point.residual_norm,
                          "irreducible": point.irreducible}
        checks = certification_checks(point, sub)
        entry["certify"] = {"checks": checks,
                            "passed": all(c["pass"] for c in checks)}
        if not entry["certify"]["passed"]:
            worst = max(worst, EXIT_CERTIFY)
        components.append(entry)
    payload = {"components": components, "seed": cfg.seed,
               "count": len(components)}
    emit(payload, out, quiet, f"seifert-scan: {len(components)} components")
    return worst


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="charvar",
        description="Character-variety solver, two-form certifier, and "
                    "volume estimator.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "certify", "volume", "seifert-scan"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output file path")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--quiet", action="store_true",
                       help="suppress human-readable notes")
        if name == "certify":
            p.add_argument("--point", required=True, help="solved point JSON")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_file(args.config)
    except ConfigError as e:
        error_record("config", str(e))
        return EXIT_CONFIG
    if args.seed is not None:
        cfg.seed = args.seed
    if args.format == "csv" and args.command != "volume":
        error_record("config", "csv format is only supported by 'volume'")
        return EXIT_CONFIG
    try:
        if args.command == "solve":
            return cmd_solve(cfg, args.out, args.quiet)
        if args.command == "certify":
            return cmd_certify(cfg, args.point, args.out, args.quiet)
        if args.command == "volume":
            return cmd_volume(cfg, args.out, args.format, args.quiet)
        if args.command == "seifert-scan":
            return cmd_seifert_scan(cfg, args.out, args.quiet)
    except ConfigError as e:
        error_record("config", str(e))
        return EXIT_CONFIG
    except (NoConvergenceError, OutsideDomainError, InsufficientSamplesError) as e:
        error_record("numerical", str(e))
        return EXIT_NUMERICAL
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
