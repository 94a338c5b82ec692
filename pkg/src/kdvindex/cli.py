"""Command-line front end.

Subcommands: wave, index, scan, kstar, verify. Settings come from an optional
JSON config file overridden by flags; the resolved config is embedded in every
report. Exit codes: 0 pass, 1 verification failure, 2 usage or numerical error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import indexcount as ic
from . import operators as ops
from . import spectra, waves
from ._io import dumps, fmt_csv

log = logging.getLogger("kdvindex")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

FAMILIES = ("dn", "cn", "fifth")
NUMERIC_ERRORS = (waves.WaveError, ops.OperatorError, ic.IndexError_, spectra.SpectrumError,
                  np.linalg.LinAlgError, ValueError, ZeroDivisionError)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    family: str = "dn"
    k: float | None = None
    c: float | None = None
    n: int = 256
    domain: float = 80.0
    a1: float = 0.0
    a2: float = 1.0
    a3: float = 1.0
    b1: float = -1.0
    b2: float = 0.0
    b3: float = 0.0
    tolerances: ic.Tolerances = field(default_factory=ic.Tolerances)
    delta: float | None = None
    out: str | None = None
    spectrum_out: str | None = None

    def validate(self) -> "RunConfig":
        if self.family not in FAMILIES:
            raise UsageError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if int(self.n) != self.n or self.n < 4 or self.n % 2:
            raise UsageError(f"n must be an even integer >= 4, got {self.n!r}")
        if self.family in ("dn", "cn"):
            if self.k is None or not 0.0 < self.k < 1.0:
                raise UsageError(f"{self.family} family needs a modulus 0 < k < 1, got {self.k!r}")
        else:
            if self.c is None or not self.c > 0:
                raise UsageError(f"fifth-order family needs a speed c > 0, got {self.c!r}")
            if not self.domain > 0:
                raise UsageError("domain length must be positive")
            if not self.a3 > 0:
                raise UsageError("a3 must be positive")
        for name, val in asdict(self.tolerances).items():
            if not val > 0:
                raise UsageError(f"tolerance {name} must be positive, got {val!r}")
        if self.delta is not None and not self.delta > 0:
            raise UsageError("delta must be positive")
        return self

    @property
    def parameter(self) -> float:
        return self.c if self.family == "fifth" else self.k

    def with_parameter(self, value: float) -> "RunConfig":
        return replace(self, c=value) if self.family == "fifth" else replace(self, k=value)

    def model(self) -> waves.ModelSpec:
        if self.family == "fifth":
            return waves.ModelSpec.fifth_order(self.a1, self.a2, self.a3, self.b1, self.b2, self.b3)
        return waves.ModelSpec.mkdv()

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["tolerances"] = asdict(self.tolerances)
        if self.family != "fifth":
            for key in ("c", "domain", "a1", "a2", "a3", "b1", "b2", "b3"):
                d.pop(key)
        else:
            d.pop("k")
        return d


_SCALAR_KEYS = {f.name for f in fields(RunConfig)} - {"tolerances"}
_TOL_KEYS = {f.name for f in fields(ic.Tolerances)}


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(data) - _SCALAR_KEYS - {"tolerances"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return data


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = load_config(getattr(args, "config", None))
    tol_data = dict(data.pop("tolerances", {}) or {})
    bad = set(tol_data) - _TOL_KEYS
    if bad:
        raise UsageError(f"unknown tolerance keys: {sorted(bad)}")
    for key in _SCALAR_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    for key in _TOL_KEYS:
        val = getattr(args, f"tol_{key}", None)
        if val is not None:
            tol_data[key] = val
    try:
        tols = ic.Tolerances(**tol_data)
        cfg = RunConfig(**data, tolerances=tols)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return cfg


def build_profile(cfg: RunConfig) -> waves.WaveProfile:
    if cfg.family == "dn":
        return waves.dn_wave(cfg.k, cfg.n)
    if cfg.family == "cn":
        return waves.cn_wave(cfg.k, cfg.n)
    grid = waves.make_grid(cfg.n, cfg.domain)
    return waves.solve_fifth_order(cfg.model(), cfg.c, grid)


def _write_text(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _dump_operators(an: ic.Analysis, directory: str) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    ops.dump_operator(an.L, d / "L.csv")
    ops.dump_operator(an.M, d / "M.csv")
    ops.dump_operator(an.L_plus, d / "L_plus.csv")
    log.info("operators written to %s", d)


# -- subcommands ---------------------------------------------------------------


def cmd_wave(cfg: RunConfig, args) -> int:
    prof = build_profile(cfg)
    if cfg.out:
        waves.export_profile_csv(prof, cfg.out)
    summary = {
        "family": cfg.family,
        "c": prof.speed,
        "k": prof.family_param,
        "period": prof.period,
        "n": prof.grid.n,
        "residual": waves.stationary_residual(prof),
        "max": prof.scale,
        "momentum": waves.momentum(prof),
        "mean": waves.mean(prof),
    }
    if prof.provenance == "newton":
        summary["newton_iterations"] = prof.diagnostics["iterations"]
        summary["boundary_decay"] = prof.diagnostics["boundary_decay"]
    sys.stdout.write(dumps({"config": cfg.to_dict(), "summary": summary}))
    return EXIT_OK


def index_document(cfg: RunConfig, an: ic.Analysis) -> dict:
    doc = an.report.to_dict()
    doc["kind"] = an.report.kind
    doc["diagnostics"] = an.report.diagnostics
    doc["config"] = cfg.to_dict()
    return doc


def cmd_index(cfg: RunConfig, args) -> int:
    an = ic.analyze(build_profile(cfg), cfg.tolerances)
    if getattr(args, "debug", False):
        _dump_operators(an, args.dump_dir)
    if cfg.spectrum_out:
        spectra.export_spectrum_csv(an.stability, cfg.spectrum_out, an.classification.krein,
                                    an.classification.labels)
    _write_text(dumps(index_document(cfg, an)), cfg.out)
    return EXIT_OK if an.report.passed else EXIT_FAIL


SCAN_FIELDS = ("parameter", "n_L", "n_aux", "F", "N_r", "N_c", "N_i_minus", "pass", "error")


def scan_row(cfg: RunConfig) -> dict:
    """One scan point; failures are recorded in the row, never raised."""
    row = {k: None for k in SCAN_FIELDS}
    row["parameter"] = cfg.parameter
    row["pass"] = False
    try:
        an = ic.analyze(build_profile(cfg), cfg.tolerances)
    except NUMERIC_ERRORS as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    c = an.classification
    row.update(n_L=an.n_L, n_aux=an.n0_or_nD, N_r=c.N_r, N_c=c.N_c, N_i_minus=c.N_i_minus,
               F=an.D.F if an.D is not None else None, **{"pass": an.report.passed})
    return row


def cmd_scan(cfg: RunConfig, args) -> int:
    lo, hi = args.range
    steps = args.steps
    if steps < 1 or not lo < hi or (steps == 1 and lo != hi):
        raise UsageError(f"empty scan range [{lo}, {hi}] with {steps} steps")
    params = np.linspace(lo, hi, steps)
    configs = [cfg.with_parameter(float(p)).validate() for p in params]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(scan_row, configs))
    else:
        rows = [scan_row(c) for c in configs]
    aux = "n0" if cfg.family == "fifth" else "n_D"
    header = [aux if f == "n_aux" else f for f in SCAN_FIELDS]
    fh = open(cfg.out, "w", newline="") if cfg.out else sys.stdout
    try:
        fh.write(f"# config: {json.dumps(cfg.to_dict(), sort_keys=False)}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([fmt_csv(r[f]) for f in SCAN_FIELDS])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def cmd_kstar(cfg: RunConfig, args) -> int:
    lo, hi = args.bracket
    kstar = ic.find_kstar(cfg.n, (lo, hi), args.xtol)
    doc = {"kstar": kstar, "bracket": [lo, hi], "xtol": args.xtol, "n": cfg.n,
           "config": {"n": cfg.n, "bracket": [lo, hi], "xtol": args.xtol}}
    _write_text(dumps(doc), cfg.out)
    return EXIT_OK


def verify_document(cfg: RunConfig) -> dict:
    """Run every cross-check; numerical failures become failed entries."""
    checks: dict = {}

    def guarded(name, fn):
        try:
            checks[name] = fn()
        except NUMERIC_ERRORS as exc:
            checks[name] = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}
        return checks[name]

    prof = build_profile(cfg)
    guarded("assumptions", lambda: ic.verify_assumptions(prof, cfg.tolerances, cfg.delta).to_dict())
    try:
        an = ic.analyze(prof, cfg.tolerances)
    except NUMERIC_ERRORS as exc:
        checks["closure"] = {"pass": False, "error": f"{type(exc).__name__}: {exc}"}
        return {"pass": False, "checks": checks, "config": cfg.to_dict()}
    checks["closure"] = an.report.to_dict()

    def pencil_check(delta):
        _, gam, chk = ic.pencil_for(an, delta)
        return chk, gam

    def pencil_counts():
        chk, gam = pencil_check(cfg.delta)
        chk2, _ = pencil_check(chk.tolerances["delta"] / 2.0)
        same = chk.counts.to_dict() == chk2.counts.to_dict()
        eq = ic.verify_equivalence(an.stability, gam, zero_radius=an.resolved.zero_radius,
                                   scale=an.resolved.intrinsic_scale, rel=cfg.tolerances.equivalence)
        checks["equivalence"] = eq.to_dict() | {"pass": eq.passed}
        cls = an.classification
        relations = {
            "N_n_minus_equals_N_r": chk.counts.N_n_minus == cls.N_r,
            "N_n_plus_equals_2N_i_minus": chk.counts.N_n_plus == 2 * cls.N_i_minus,
            "N_c_plus_equals_2N_c": chk.counts.N_c_plus == 2 * cls.N_c,
            "N_n_zero_equals_aux": chk.counts.N_n_zero == an.n0_or_nD,
            "dim_K_equals_n_L": chk.dim_K_minus == an.n_L,
            "dim_A_equals_n_L": chk.dim_A_minus == an.n_L,
        }
        return {**chk.to_dict(), "half_delta": chk2.to_dict(), "delta_stable": same,
                "relations": relations,
                "pass": chk.passed and chk2.passed and same and all(relations.values())}

    guarded("pencil", pencil_counts)
    if "equivalence" not in checks:
        checks["equivalence"] = {"pass": False, "error": "pencil stage failed"}
    guarded("orthogonality",
            lambda: ic.orthogonality_checks(an.stability, an.L, an.classification).to_dict())
    ok = all(c.get("pass", False) for c in checks.values())
    return {"pass": ok, "checks": checks, "config": cfg.to_dict()}


def cmd_verify(cfg: RunConfig, args) -> int:
    doc = verify_document(cfg)
    _write_text(dumps(doc), cfg.out)
    return EXIT_OK if doc["pass"] else EXIT_FAIL


# -- argument parsing ----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, *, parameter: bool = True) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--family", choices=FAMILIES)
    if parameter:
        p.add_argument("--k", type=float, help="elliptic modulus (dn/cn)")
        p.add_argument("--c", type=float, help="wave speed (fifth-order)")
    p.add_argument("--n", type=int, help="grid size (even)")
    p.add_argument("--domain", type=float, help="fifth-order domain length (default 80)")
    for name in ("a1", "a2", "a3", "b1", "b2", "b3"):
        p.add_argument(f"--{name}", type=float, help=f"fifth-order coefficient {name}")
    p.add_argument("--delta", type=float, help="pencil shift (default 1e-3/||K||)")
    for name in sorted(_TOL_KEYS):
        p.add_argument(f"--tol-{name.replace('_', '-')}", dest=f"tol_{name}", type=float,
                       help=argparse.SUPPRESS)
    p.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdvindex", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("wave", help="build a wave profile and write it as CSV")
    _add_common(p)
    p.set_defaults(func=cmd_wave)

    p = sub.add_parser("index", help="run the counting pipeline, write the report JSON")
    _add_common(p)
    p.add_argument("--spectrum-out", help="write the classified stability spectrum as CSV")
    p.add_argument("--debug", action="store_true", help="dump L, M and L^+ as CSV")
    p.add_argument("--dump-dir", default="operators", help="directory for --debug dumps")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("scan", help="sweep the family parameter")
    _add_common(p)
    p.add_argument("--range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("kstar", help="locate the sign change of <L^+ 1, 1> on the cn family")
    _add_common(p, parameter=False)
    p.add_argument("--bracket", type=float, nargs=2, default=(0.85, 0.95), metavar=("LO", "HI"))
    p.add_argument("--xtol", type=float, default=1e-4)
    p.set_defaults(func=cmd_kstar, family="cn")

    p = sub.add_parser("verify", help="run every cross-check and aggregate the results")
    _add_common(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        if args.command == "kstar":
            cfg = replace(cfg, k=0.5)
        if args.command != "scan":
            cfg.validate()
        return args.func(cfg, args)
    except UsageError as exc:
        print(f"kdvindex: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except NUMERIC_ERRORS as exc:
        print(f"kdvindex: numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
