"""Command-line front end: ``lswspec simulate|estimate|montecarlo|identities``.

Every run writes ``manifest.json`` next to its outputs; passing that file
back with ``--manifest`` repeats the run.  Exit codes: 0 success, 1 failed
check, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import specfile
from .adaptive import AdaptiveConfig, ScaleContext, build_grids, default_z0, select_interval
from .csvio import SCHEMAS, CSVFormatError, read_series, write_table
from .estimator import check_series, resolve_c2
from .montecarlo import run_montecarlo
from .periodogram import periodogram, u_matrix
from .process import MIN_T, covariance_matrix, max_scales, simulate
from .wavelets import (AutocorrSystem, GramInversionError, check_delta_identity, check_symmetry,
                       gram_matrix)

__all__ = ["RunManifest", "main", "run_identities", "IdentityCheck"]

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
COMMANDS = ("simulate", "estimate", "montecarlo", "identities")
MANIFEST = "manifest.json"

# configuration overrides a manifest may carry, with their value types
OVERRIDES = {
    "scale": int, "eta": float, "eta_scale": float, "kt": float, "delta": int, "mt": int,
    "window": int, "variance": str, "c2": float, "threads": int, "input": str,
    "periodogram": bool, "trace": bool,
}


class InputError(ValueError):
    """Invalid command-line or manifest input (exit code 2)."""


@dataclass
class RunManifest:
    """Everything needed to repeat a run."""

    command: str
    spec: str | None = None
    seed: int = 0
    T: int = 1000
    replications: int = 100
    output_dir: str = "."
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if int(self.replications) < 1:
            raise InputError("replications must be >= 1")
        if int(self.T) < MIN_T:
            raise InputError(f"T must be >= {MIN_T}, got {self.T}")
        unknown = set(self.overrides) - set(OVERRIDES)
        if unknown:
            raise InputError(f"unknown overrides: {', '.join(sorted(unknown))}")
        for key, value in self.overrides.items():
            kind = OVERRIDES[key]
            ok = isinstance(value, kind) or (kind is float and isinstance(value, int))
            if not ok or (kind is int and isinstance(value, bool)):
                raise InputError(f"override {key!r} must be of type {kind.__name__}")

    def to_json(self):
        data = {"command": self.command, "spec": self.spec, "seed": int(self.seed),
                "T": int(self.T), "replications": int(self.replications),
                "output_dir": str(self.output_dir),
                "overrides": {k: self.overrides[k] for k in sorted(self.overrides)}}
        return json.dumps(data, indent=2, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"manifest is not valid JSON: {exc}") from None
        if not isinstance(data, dict) or "command" not in data:
            raise InputError("manifest must be an object with a 'command'")
        keys = {"command", "spec", "seed", "T", "replications", "output_dir", "overrides"}
        extra = set(data) - keys
        if extra:
            raise InputError(f"unknown manifest fields: {', '.join(sorted(extra))}")
        return cls(**data)

    def get(self, key, default=None):
        return self.overrides.get(key, default)


# ----------------------------------------------------------------- identities

@dataclass(frozen=True)
class IdentityCheck:
    name: str
    J: int
    residual: float
    tolerance: float

    @property
    def ok(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.tolerance)


DELTA_ORIGIN = "delta identity at tau = 0 (residual = 2^-J)"
DELTA_OFF = "delta identity off the origin"
SYMMETRY = "symmetry Psi_j(tau) = Psi_j(-tau)"
ROWSUM = "inverse Gram row sums approach 2^j as J grows"
POSITIVE = "Gram matrix positive definite"
INVERSE = "Gram inverse residual"
QUADRATIC = "quadratic form X'UX equals averaged corrected periodogram"


def _build_system(J):
    """Autocorrelation tables used by ``identities``; replaced in fault-injection tests."""
    return AutocorrSystem.build(J)


def run_identities(J_max=12, seed=0, T=256, trials=20):
    """Run the wavelet identity self-checks for ``J = 4 .. J_max``."""
    out = []
    rng = np.random.default_rng(seed)
    previous = None
    for J in range(4, J_max + 1):
        system = _build_system(J)
        L = 2 ** J
        origin = abs(check_delta_identity(J, 0, system) - 2.0 ** -J)
        out.append(IdentityCheck(DELTA_ORIGIN, J, origin, 0.0))
        taus = np.arange(1, L)
        partial = (2.0 ** -np.arange(1, J + 1)) @ system.matrix(taus)[:J]
        out.append(IdentityCheck(DELTA_OFF, J, float(np.max(np.abs(partial))), 2.0 ** (-J + 3)))
        out.append(IdentityCheck(SYMMETRY, J, check_symmetry(system), 0.0))
        try:
            g = gram_matrix(J, system)
        except GramInversionError as exc:
            out.append(IdentityCheck(INVERSE, J, float(exc.condition_number), 1e-8))
            continue
        out.append(IdentityCheck(INVERSE, J, float(np.max(np.abs(g.a @ g.a_inv - np.eye(J)))),
                                 1e-8))
        eig = float(np.min(np.linalg.eigvalsh(g.a)))
        # residual: minus the smallest eigenvalue, negative when A is positive definite
        out.append(IdentityCheck(POSITIVE, J, -eig, 0.0))
        dev = np.abs(g.a_inv.sum(axis=1) - 2.0 ** -np.arange(1, J + 1))
        if previous is not None:
            # growth of the deviation at the scales shared with the smaller J
            k = previous.size
            out.append(IdentityCheck(ROWSUM, J, float(np.max(dev[:k] - previous)), 0.0))
        previous = dev
    # quadratic-form identity on random inputs
    J = max_scales(T)
    gram = gram_matrix(J)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(T)
        j = -int(rng.integers(1, J + 1))
        lo = int(rng.integers(0, T - 1))
        hi = int(rng.integers(lo + 1, T + 1))
        grid = periodogram(x, J)
        lhs = float(x @ u_matrix(j, (lo, hi), T, gram) @ x)
        rhs = float(np.mean(grid.row(j)[lo:hi]))
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    out.append(IdentityCheck(QUADRATIC, J, worst, 1e-10))
    return out


# ------------------------------------------------------------------- commands

def _load_spec(name):
    if name is None:
        raise InputError("--spec is required")
    path = Path(name)
    if path.is_file():
        return specfile.load(path)
    builtin = name if name.endswith(".spec") else name + ".spec"
    try:
        return specfile.load_builtin(builtin)
    except FileNotFoundError:
        raise InputError(f"spectrum file {name!r} not found") from None


def _config(m):
    variance = m.get("variance", "plugin")
    if variance not in ("plugin", "exact"):
        raise InputError("--variance must be 'exact' or 'plugin'")
    return AdaptiveConfig(
        eta=m.get("eta"), eta_scale=m.get("eta_scale", AdaptiveConfig.eta_scale), kt=m.get("kt"),
        delta_points=m.get("delta", AdaptiveConfig.delta_points),
        mt=m.get("mt", AdaptiveConfig.mt), window=m.get("window", AdaptiveConfig.window),
        c2=m.get("c2"), variance_mode="exact-oracle" if variance == "exact" else "plugin")


def _out(m):
    out = Path(m.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(m):
    spec = _load_spec(m.spec)
    x = simulate(spec, m.T, m.seed).values
    out = _out(m)
    write_table(out / "series.csv", SCHEMAS["series"], ((v,) for v in x))
    return [out / "series.csv"]


def cmd_estimate(m):
    cfg = _config(m)
    if m.get("input"):
        x = read_series(m.get("input"))
        try:
            x = check_series(x)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        spec = _load_spec(m.spec) if m.spec else None
    else:
        spec = _load_spec(m.spec)
        x = simulate(spec, m.T, m.seed).values
    T = x.size
    J = max_scales(T)
    scales = [m.get("scale")] if m.get("scale") is not None else [-1, -2, -3, -4]
    for j in scales:
        if not -J <= j <= -1:
            raise InputError(f"scale {j} outside -1..-{J} for T = {T}")
    cov = None
    if cfg.variance_mode == "exact-oracle":
        if spec is None:
            raise InputError("--variance exact needs --spec")
        cov = covariance_matrix(spec, T)
    grid = periodogram(x)
    c2, _ = resolve_c2(grid, cfg)
    z0s = default_z0()
    grids = [build_grids(z, T, cfg) for z in z0s]
    est_rows, trace_rows = [], []
    for j in scales:
        ctx = ScaleContext.build(grid, j, c2, m.seed, cfg, cov)
        for z, g in zip(z0s, grids):
            e = select_interval(ctx, z, cfg, keep_trace=bool(m.get("trace")), grids=g)
            est_rows.append((j, z, e.value, e.selected.lo, e.selected.hi, e.sigma2))
            trace_rows.extend((j, z, t.R.lo, t.R.hi, t.U.lo, t.U.hi, t.statistic, t.threshold,
                               t.rejected) for t in e.trace)
    out = _out(m)
    files = [out / "estimates.csv"]
    write_table(files[0], SCHEMAS["estimates"], est_rows)
    if m.get("trace"):
        files.append(out / "intervals.csv")
        write_table(files[-1], SCHEMAS["intervals"], trace_rows)
    if m.get("periodogram"):
        files.append(out / "periodogram.csv")
        header = ("t",) + tuple(f"L{-i}" for i in range(1, J + 1))
        rows = (tuple([t]) + tuple(grid.corrected[:, t]) for t in range(T))
        write_table(files[-1], header, rows)
    return files


def cmd_montecarlo(m):
    if int(m.replications) < 2:
        raise InputError("montecarlo needs --reps >= 2")
    spec = _load_spec(m.spec)
    cfg = _config(m)
    j = m.get("scale", -1)
    if not -min(spec.J, max_scales(m.T)) <= j <= -1:
        raise InputError(f"scale {j} not available")
    rep = run_montecarlo(spec, m.T, m.replications, m.seed, j, None, cfg,
                         threads=m.get("threads", 1))
    out = _out(m)
    files = [out / "montecarlo.csv", out / "metrics.csv", out / "baseline.csv"]
    write_table(files[0], SCHEMAS["montecarlo"], rep.per_point())
    write_table(files[1], SCHEMAS["metrics"], [(rep.mse, rep.mad, rep.runtime)])
    write_table(files[2], SCHEMAS["metrics"], [(rep.baseline_mse, rep.baseline_mad, 0.0)])
    print(f"adaptive: mse {rep.mse:.4f} mad {rep.mad:.4f}; "
          f"running mean: mse {rep.baseline_mse:.4f} mad {rep.baseline_mad:.4f}; "
          f"{rep.runtime:.1f} s")
    return files


def cmd_identities(m):
    J_max = max(4, min(max_scales(m.T), 12))
    checks = run_identities(J_max, m.seed)
    out = _out(m)
    write_table(out / "identities.csv", SCHEMAS["identities"],
                ((c.name, c.J, c.residual, c.tolerance, "pass" if c.ok else "FAIL")
                 for c in checks))
    failed = [c for c in checks if not c.ok]
    for c in failed:
        print(f"FAIL {c.name} (J = {c.J}): residual {c.residual:.3g} > {c.tolerance:.3g}",
              file=sys.stderr)
    if not failed:
        print(f"all {len(checks)} identity checks passed")
    return [out / "identities.csv"], bool(failed)


HANDLERS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "montecarlo": cmd_montecarlo,
            "identities": cmd_identities}


# ------------------------------------------------------------------- argparse

def build_parser():
    parser = argparse.ArgumentParser(
        prog="lswspec", description="Simulate LSW processes and estimate their spectra.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--manifest", type=Path, help="repeat the run recorded in this file")
        p.add_argument("--spec", help="spectrum file or built-in name (paper_s5, constant, white_noise, zero)")
        p.add_argument("--t", type=int, dest="T", help="series length")
        p.add_argument("--seed", type=int)
        p.add_argument("--reps", type=int, dest="replications")
        p.add_argument("--out", dest="output_dir", help="output directory")
        p.add_argument("--scale", type=int)
        p.add_argument("--eta", type=float, help="absolute test constant eta")
        p.add_argument("--eta-scale", type=float, dest="eta_scale",
                       help="multiplier of the default eta rule")
        p.add_argument("--kt", type=float)
        p.add_argument("--delta", type=int, help="minimum test-interval length")
        p.add_argument("--mt", type=int, help="plug-in covariance band")
        p.add_argument("--window", type=int, help="plug-in local window length")
        p.add_argument("--variance", choices=("exact", "plugin"))
        p.add_argument("--c2", type=float, help="regularization constant (default: estimated)")
        p.add_argument("--threads", type=int)
        if name == "estimate":
            p.add_argument("--input", help="series CSV (column x); simulated from --spec if absent")
            p.add_argument("--periodogram", action="store_true", default=None,
                           help="also write the corrected periodogram")
            p.add_argument("--trace", action="store_true", default=None,
                           help="also write every homogeneity test (intervals.csv)")
    return parser


def manifest_from_args(args):
    """Merge the optional manifest file with explicit command-line values."""
    if args.manifest is not None:
        try:
            text = Path(args.manifest).read_text()
        except OSError as exc:
            raise InputError(f"cannot read manifest: {exc}") from None
        base = RunManifest.from_json(text)
        if base.command != args.command:
            raise InputError(f"manifest is for '{base.command}', not '{args.command}'")
    else:
        base = RunManifest(args.command,
                           replications=100 if args.command == "montecarlo" else 1,
                           T=1000 if args.command != "identities" else 4096)
    fields = {k: getattr(args, k) for k in ("spec", "seed", "T", "replications", "output_dir")}
    overrides = dict(base.overrides)
    for key in OVERRIDES:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    for key in ("threads", "delta", "window"):
        if key in overrides and overrides[key] < 1:
            raise InputError(f"--{key} must be >= 1")
    kwargs = {k: v for k, v in fields.items() if v is not None}
    merged = {**base.__dict__, **kwargs, "overrides": overrides}
    return RunManifest(**merged)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        m = manifest_from_args(args)
        result = HANDLERS[m.command](m)
        files, failed = result if isinstance(result, tuple) else (result, False)
        out = Path(m.output_dir)
        (out / MANIFEST).write_text(m.to_json())
        for f in files:
            print(f"wrote {f}")
        return EXIT_CHECK if failed else EXIT_OK
    except specfile.SpecParseError as exc:
        print(f"error: spectrum file: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, CSVFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (GramInversionError, ArithmeticError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
