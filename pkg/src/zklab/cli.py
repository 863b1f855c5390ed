"""Configuration-driven experiment runner and reporting surface.

Config files are flat ``key = value`` text ('#' comments allowed).  Unknown
keys are errors so a typo cannot silently change s, l, K or beta.  Every run
writes a manifest (atomically, on success or failure) recording the full
config in round-trip precision, pass/fail of each configured check, the
output file inventory and any sign-adjustment notes.

Exit codes: 0 all checks passed, 1 assertion failure, 2 config error,
3 numerical guard trip (resonance / blow-up).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bilinear import DecompositionParams, denominator_scan
from .estimates import (
    INTERIOR_POINTS,
    FieldProfile,
    RegularityPoint,
    build_registry,
    estimate_ratio,
    random_field,
    region_membership,
    scan_region,
)
from .grid import (
    BlowUpError,
    ResonanceError,
    SpectralField,
    dealias,
    make_grid,
)
from .littlewood_paley import NormSpec, shell_l2_profile
from .zakharov import (
    SIGN_ADJUSTMENTS,
    contraction_diagnostics,
    normal_form_residual,
    picard_solve,
    reference_solve,
    to_first_order,
)


class ConfigError(ValueError):
    """Invalid or unknown configuration."""


# -- config parsing -------------------------------------------------------------

_COMMON_SCHEMA = {
    "dimension": (int, 2),
    "n": (int, 64),
    "box_length": (float, 2 * math.pi),
    "alpha": (float, 1.0),
    "K": (int, 5),
    "beta": (int, None),
    "mode": (str, "simplified"),
    "s": (float, 1.0),
    "l": (float, 0.0),
    "seed": (int, 0),
}

_SCHEMAS = {
    "simulate": {
        **_COMMON_SCHEMA,
        "T": (float, 1.0),
        "dt": (float, 1e-3),
        "data": (str, "plane-wave"),
        "amplitude": (float, 1.0),
        "wave_index": (str, "1"),
        "u_norm": (float, 1.0),
        "n_norm": (float, 0.5),
        "checkpoint_stride": (int, 0),
        "mass_tol": (float, None),
        "energy_tol": (float, None),
    },
    "picard": {
        **_COMMON_SCHEMA,
        "T": (float, 0.1),
        "nodes": (int, 17),
        "iterations": (int, 8),
        "u_norm": (float, 0.02),
        "n_norm": (float, 0.02),
        "ratio_tol": (float, 0.5),
        "compare_reference": (bool, True),
        "reference_dt": (float, 1e-3),
        "compare_tol": (float, 1e-3),
    },
    "residual": {
        **_COMMON_SCHEMA,
        "T": (float, 4e-3),
        "dts": (str, "2.5e-4,1.25e-4,6.25e-5"),
        "u_norm": (float, 0.1),
        "n_norm": (float, 0.1),
        "order_lo": (float, 3.5),
        "order_hi": (float, 4.5),
        "unreduced_factor": (float, 10.0),
    },
    "verify-estimates": {
        **_COMMON_SCHEMA,
        "estimate": (str, "all"),
        "T": (float, 1.0),
        "samples": (int, 20),
        "nodes": (int, 5),
    },
    "scan-region": {
        **_COMMON_SCHEMA,
        "estimate": (str, "boundary-2"),
        "s_min": (float, 0.75),
        "s_max": (float, 1.75),
        "l_min": (float, 0.0),
        "l_max": (float, 0.0),
        "step": (float, 0.25),
        "j_min": (int, 6),
        "j_max": (int, 7),
        "low_shell": (int, 1),
        "samples": (int, 2),
    },
    "denominator-scan": {
        **_COMMON_SCHEMA,
        "which": (str, "omega"),
    },
    "norms": {
        **_COMMON_SCHEMA,
        "profile": (str, "sobolev-random"),
        "decay": (float, 2.0),
        "shell": (int, 3),
    },
    "contraction": {
        **_COMMON_SCHEMA,
        "T": (float, 0.1),
        "nodes": (int, 9),
        "samples": (int, 50),
        "u_norm": (float, 0.02),
        "n_norm": (float, 0.02),
        "factor_tol": (float, 0.5),
    },
}


def parse_config(path: str | Path, schema: dict) -> dict:
    """Read a flat key = value file and coerce against the schema."""
    raw: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    unknown = set(raw) - set(schema)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, (typ, default) in schema.items():
        if key not in raw:
            out[key] = default
            continue
        text_val = raw[key]
        try:
            if typ is bool:
                if text_val.lower() not in ("true", "false"):
                    raise ValueError
                out[key] = text_val.lower() == "true"
            else:
                out[key] = typ(text_val)
        except ValueError:
            raise ConfigError(f"key {key!r}: cannot parse {text_val!r} as {typ.__name__}")
    return out


def _params_from(cfg: dict) -> DecompositionParams:
    try:
        return DecompositionParams(K=cfg["K"], alpha=cfg["alpha"], beta=cfg["beta"])
    except ValueError as e:
        raise ConfigError(str(e))


def _grid_from(cfg: dict):
    try:
        return make_grid(cfg["dimension"], cfg["box_length"], cfg["n"])
    except ValueError as e:
        raise ConfigError(str(e))


# -- manifest and output helpers ---------------------------------------------------


class RunContext:
    def __init__(self, out_dir: Path, subcommand: str, cfg: dict):
        self.out_dir = out_dir
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.subcommand = subcommand
        self.cfg = cfg
        self.checks: list[dict] = []
        self.outputs: list[str] = []
        self.notes: list[str] = []
        self.t0 = time.monotonic()

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append({"name": name, "passed": bool(passed), "detail": detail})
        return passed

    def write_csv(self, name: str, header: list[str], rows: list[tuple]) -> Path:
        path = self.out_dir / name
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        self.outputs.append(name)
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        _atomic_json(path, payload)
        self.outputs.append(name)
        return path

    def finalize(self, status: str) -> None:
        manifest = {
            "tool": "zklab",
            "version": __version__,
            "subcommand": self.subcommand,
            "config": {k: _echo(v) for k, v in sorted(self.cfg.items())},
            "status": status,
            "wallclock_seconds": time.monotonic() - self.t0,
            "checks": self.checks,
            "outputs": self.outputs,
            "sign_adjustments": self.notes,
        }
        _atomic_json(self.out_dir / "manifest.json", manifest)
        missing = [f for f in self.outputs if not (self.out_dir / f).exists()]
        if missing:  # manifest invariant: every listed output exists
            raise RuntimeError(f"manifest lists missing outputs: {missing}")


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _echo(v):
    return repr(v) if isinstance(v, float) else v


def _atomic_json(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


# -- initial data -------------------------------------------------------------------


def _parse_index(text: str, d: int) -> tuple[int, ...]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    idx = tuple(int(p) for p in parts)
    if len(idx) == 1 and d > 1:
        idx = idx + (0,) * (d - 1)
    if len(idx) != d:
        raise ConfigError(f"wave_index needs {d} components, got {text!r}")
    return idx


def _plane_wave(grid, index: tuple[int, ...], amplitude: float) -> SpectralField:
    coeffs = np.zeros(grid.shape, dtype=np.complex128)
    pos = tuple(m % grid.n for m in index)
    coeffs[pos] = amplitude * grid.box_length ** (grid.d / 2.0)
    return SpectralField(grid, coeffs)


def _real_random(grid, target_s: float, value: float, rng, mean_zero=False) -> SpectralField:
    f = random_field(
        grid,
        FieldProfile(kind="sobolev-random", decay=target_s + grid.d / 2.0 + 1.0, mean_zero=mean_zero),
        None,
        rng=rng,
    )
    g = SpectralField.from_physical(grid, f.values.real.astype(np.complex128))
    g = dealias(g)
    if mean_zero:
        c = g.coefficients.copy()
        c[(0,) * grid.d] = 0.0
        g = SpectralField(grid, c)
    from .littlewood_paley import sobolev_norm

    nrm = sobolev_norm(g, target_s)
    return (value / nrm) * g if nrm > 0 else g


def _initial_state(grid, cfg, rng, zero_mode: str):
    mode = cfg["mode"]
    if mode not in ("simplified", "physical"):
        raise ConfigError(f"mode must be simplified or physical, got {mode!r}")
    if cfg["data"] == "plane-wave":
        u0 = _plane_wave(grid, _parse_index(cfg["wave_index"], grid.d), cfg["amplitude"])
        zero = SpectralField.zero(grid)
        return to_first_order(u0, zero, zero, cfg["alpha"], mode, zero_mode)
    if cfg["data"] == "random-smooth":
        u0 = random_field(
            grid,
            FieldProfile(kind="sobolev-random", decay=cfg["s"] + grid.d / 2.0 + 1.0),
            NormSpec(s=cfg["s"], sobolev=True),
            cfg["u_norm"],
            rng=rng,
        )
        n0 = _real_random(grid, cfg["l"], cfg["n_norm"], rng)
        n1 = _real_random(grid, max(cfg["l"] - 1.0, 0.0), cfg["n_norm"], rng, mean_zero=True)
        return to_first_order(u0, n0, n1, cfg["alpha"], mode, zero_mode)
    raise ConfigError(f"data must be plane-wave or random-smooth, got {cfg['data']!r}")


# -- subcommand runners ----------------------------------------------------------------


def _run_simulate(ctx: RunContext, cfg: dict, zero_mode: str) -> None:
    grid = _grid_from(cfg)
    rng = np.random.default_rng(cfg["seed"])
    state = _initial_state(grid, cfg, rng, zero_mode)
    traj = reference_solve(state, cfg["T"], cfg["dt"], store_stride=max(1, round(cfg["T"] / cfg["dt"]) // 16), s=cfg["s"], l=cfg["l"])
    d = traj.diagnostics
    rows = list(zip(d["t"], d["mass"], d["hamiltonian"], d["Hs_u"], d["Hl_N"]))
    ctx.write_csv("trajectory.csv", ["t", "mass", "hamiltonian", "Hs_u", "Hl_N"], rows)
    stride = cfg["checkpoint_stride"]
    if stride > 0:
        fields_dir = ctx.out_dir / "fields"
        fields_dir.mkdir(exist_ok=True)
        for i in range(0, traj.times.size, stride):
            np.save(fields_dir / f"u_{i:05d}.npy", traj.us[i].coefficients)
            np.save(fields_dir / f"N_{i:05d}.npy", traj.Ns[i].coefficients)
            ctx.outputs.extend([f"fields/u_{i:05d}.npy", f"fields/N_{i:05d}.npy"])
    m0 = d["mass"][0]
    mass_drift = float(np.max(np.abs(d["mass"] - m0)) / m0) if m0 > 0 else 0.0
    e0 = d["hamiltonian"][0]
    scale = abs(e0) if abs(e0) > 0 else 1.0
    energy_drift = float(np.max(np.abs(d["hamiltonian"] - e0)) / scale)
    ctx.check("finite", bool(np.all(np.isfinite(d["mass"]))), "all recorded norms finite")
    if cfg["mass_tol"] is not None:
        ctx.check("mass-drift", mass_drift < cfg["mass_tol"], f"{mass_drift:.3e}")
    if cfg["energy_tol"] is not None:
        ctx.check("energy-drift", energy_drift < cfg["energy_tol"], f"{energy_drift:.3e}")


def _run_picard(ctx: RunContext, cfg: dict, zero_mode: str) -> None:
    if cfg["mode"] != "simplified":
        raise ConfigError("picard requires mode = simplified (normal form is derived for it)")
    grid = _grid_from(cfg)
    params = _params_from(cfg)
    rng = np.random.default_rng(cfg["seed"])
    sub = dict(cfg)
    sub["data"] = "random-smooth"
    state = _initial_state(grid, sub, rng, zero_mode)
    traj, diag = picard_solve(
        state.u, state.N, cfg["T"], params, cfg["iterations"], cfg["nodes"], cfg["s"], cfg["l"]
    )
    ctx.notes.extend(SIGN_ADJUSTMENTS)
    rows = [(i, d, (diag["ratios"][i - 1] if i >= 1 and i - 1 < len(diag["ratios"]) else float("nan"))) for i, d in enumerate(diag["diffs"])]
    ctx.write_csv("picard_iterations.csv", ["iteration", "xt_diff", "ratio"], rows)
    contracting = all(r < cfg["ratio_tol"] for r in diag["ratios"][1:]) if len(diag["ratios"]) > 1 else True
    ctx.check("contraction-ratios", contracting, f"ratios: {['%.3g' % r for r in diag['ratios']]}")
    if cfg["compare_reference"]:
        ref = reference_solve(state, cfg["T"], cfg["reference_dt"], store_stride=10**9, s=cfg["s"], l=cfg["l"])
        err = (traj.us[-1] - ref.us[-1]).l2_norm() / max(ref.us[-1].l2_norm(), 1e-300)
        ctx.check("matches-reference", err < cfg["compare_tol"], f"relative L2 error {err:.3e}")


def _run_residual(ctx: RunContext, cfg: dict, zero_mode: str) -> None:
    if cfg["mode"] != "simplified":
        raise ConfigError("residual requires mode = simplified")
    grid = _grid_from(cfg)
    params = _params_from(cfg)
    dts = [float(x) for x in cfg["dts"].split(",") if x.strip()]
    if len(dts) < 2:
        raise ConfigError("residual needs at least two dt values")
    rng = np.random.default_rng(cfg["seed"])
    sub = dict(cfg)
    sub["data"] = "random-smooth"
    state = _initial_state(grid, sub, rng, zero_mode)
    ctx.notes.extend(SIGN_ADJUSTMENTS)
    rows = []
    peaks = []
    for dt in sorted(dts, reverse=True):
        traj = reference_solve(state, cfg["T"], dt)
        res = normal_form_residual(traj, params)
        peak = float(np.max(res["residual_u"] + res["residual_N"]))
        raw = float(np.max(res["unreduced_u"] + res["unreduced_N"]))
        peaks.append((dt, peak, raw))
        rows.append((dt, peak, raw))
    ctx.write_csv("residuals.csv", ["dt", "reduced_residual", "unreduced_residual"], rows)
    orders = [
        math.log2(peaks[i][1] / peaks[i + 1][1]) / math.log2(peaks[i][0] / peaks[i + 1][0])
        for i in range(len(peaks) - 1)
    ]
    ok_order = all(cfg["order_lo"] <= o <= cfg["order_hi"] for o in orders)
    ctx.check("fourth-order-decay", ok_order, f"orders {['%.2f' % o for o in orders]}")
    dt_f, peak_f, raw_f = peaks[0]
    ctx.check(
        "reduced-vs-unreduced",
        peak_f <= cfg["unreduced_factor"] * raw_f,
        f"dt={dt_f}: reduced {peak_f:.3e} vs unreduced {raw_f:.3e}",
    )


def _run_verify_estimates(ctx: RunContext, cfg: dict, exploratory: bool) -> None:
    grid = _grid_from(cfg)
    params = _params_from(cfg)
    registry = build_registry(cfg["dimension"])
    names = list(registry) if cfg["estimate"] == "all" else [cfg["estimate"]]
    for name in names:
        if name not in registry:
            raise ConfigError(f"unknown estimate {name!r}; choose from {sorted(registry)}")
    pt = RegularityPoint(cfg["s"], cfg["l"], cfg["dimension"])
    rows = []
    summary = {}
    for name in names:
        spec = registry[name]
        inside = region_membership(pt, spec.region)
        if not inside and not exploratory:
            raise ConfigError(
                f"(s, l) = ({cfg['s']}, {cfg['l']}) violates the admissible region "
                f"{spec.region!r} of {name}; pass --exploratory to run anyway"
            )
        rep = estimate_ratio(
            spec, pt, cfg["T"], grid, params, cfg["samples"], cfg["seed"], cfg["nodes"]
        )
        for i, r in enumerate(rep["ratios"]):
            rows.append((name, cfg["s"], cfg["l"], cfg["dimension"], cfg["T"], cfg["seed"] + i, "", "", r))
        summary[name] = {"sup_ratio": rep["sup_ratio"], "exploratory": rep["exploratory"]}
        ctx.check(f"finite-ratio:{name}", math.isfinite(rep["sup_ratio"]), f"sup {rep['sup_ratio']:.4g}")
    ctx.write_csv("ratios.csv", ["spec", "s", "l", "d", "T", "seed", "lhs", "rhs", "ratio"], rows)
    ctx.write_json("estimates_summary.json", summary)


def _run_scan_region(ctx: RunContext, cfg: dict) -> None:
    grid = _grid_from(cfg)
    params = _params_from(cfg)
    s_values = list(np.arange(cfg["s_min"], cfg["s_max"] + 1e-12, cfg["step"]))
    l_values = list(np.arange(cfg["l_min"], cfg["l_max"] + 1e-12, cfg["step"])) or [cfg["l_min"]]
    rows = scan_region(
        grid,
        params,
        cfg["dimension"],
        s_values,
        l_values,
        list(range(cfg["j_min"], cfg["j_max"] + 1)),
        cfg["low_shell"],
        cfg["samples"],
        cfg["seed"],
        region=cfg["estimate"],
    )
    ctx.write_csv(
        "region_scan.csv",
        ["s", "l", "exponent", "inside_region"],
        [(r["s"], r["l"], r["exponent"], r["inside"]) for r in rows],
    )
    ctx.check("scan-complete", all(math.isfinite(r["exponent"]) for r in rows), f"{len(rows)} points")


def _run_denominator_scan(ctx: RunContext, cfg: dict) -> None:
    grid = _grid_from(cfg)
    params = _params_from(cfg)
    report = denominator_scan(grid, params, cfg["which"])
    ctx.write_csv(
        "denominators.csv",
        ["shell", "min_abs_denominator", "argmin_xi", "argmin_eta"],
        report.rows(),
    )
    if report.empty:
        ctx.check("nonresonant", True, "masked pair set empty on this grid")
    else:
        ctx.check(
            "nonresonant",
            report.global_min > 0,
            f"global min {report.global_min:.6g} at {report.global_argmin}",
        )


def _run_norms(ctx: RunContext, cfg: dict) -> None:
    grid = _grid_from(cfg)
    rng = np.random.default_rng(cfg["seed"])
    profile = FieldProfile(kind=cfg["profile"], decay=cfg["decay"], shell=cfg["shell"])
    f = random_field(grid, profile, rng=rng)
    ctx.write_csv("norms.csv", ["k", "shell_norm"], shell_l2_profile(f))
    ctx.check("norms-written", True, "")


def _run_contraction(ctx: RunContext, cfg: dict, zero_mode: str) -> None:
    if cfg["mode"] != "simplified":
        raise ConfigError("contraction requires mode = simplified")
    grid = _grid_from(cfg)
    params = _params_from(cfg)
    rng = np.random.default_rng(cfg["seed"])
    sub = dict(cfg)
    sub["data"] = "random-smooth"
    state = _initial_state(grid, sub, rng, zero_mode)
    rep = contraction_diagnostics(
        state.u, state.N, cfg["T"], params, cfg["samples"], cfg["nodes"], cfg["s"], cfg["l"], cfg["seed"]
    )
    ctx.notes.extend(SIGN_ADJUSTMENTS)
    rows = [(i, f, p) for i, (f, p) in enumerate(zip(rep["lipschitz_factors"], rep["phi_norm_over_eta"]))]
    ctx.write_csv("contraction.csv", ["sample", "lipschitz_factor", "phi_norm_over_eta"], rows)
    ctx.check("lipschitz", rep["max_factor"] < cfg["factor_tol"], f"max factor {rep['max_factor']:.4g}")
    ctx.check("ball-preserved", rep["max_phi_norm_over_eta"] <= 1.0, f"max |Phi|/eta {rep['max_phi_norm_over_eta']:.4g}")


def _run_report(run_dir: str) -> int:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        print(f"error: no manifest in {run_dir}", file=sys.stderr)
        return 2
    try:
        manifest = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        print(f"error: corrupt manifest: {e}", file=sys.stderr)
        return 2
    print(f"run: {manifest.get('subcommand')} (zklab {manifest.get('version')})")
    print(f"status: {manifest.get('status')}")
    print("checks:")
    for c in manifest.get("checks", []):
        mark = "PASS" if c["passed"] else "FAIL"
        detail = f"  [{c['detail']}]" if c.get("detail") else ""
        print(f"  {mark}  {c['name']}{detail}")
    print("outputs:")
    for f in manifest.get("outputs", []):
        print(f"  {f}")
    for note in manifest.get("sign_adjustments", []):
        print(f"note: {note}")
    return 0 if all(c["passed"] for c in manifest.get("checks", [])) else 1


# -- entry point -----------------------------------------------------------------------


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="zklab", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    runners = [
        "simulate",
        "picard",
        "residual",
        "verify-estimates",
        "scan-region",
        "denominator-scan",
        "norms",
        "contraction",
    ]
    for name in runners:
        p = sub.add_parser(name)
        p.add_argument("--config", required=False, default=None)
        p.add_argument("--out", required=True)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--exploratory", action="store_true")
        p.add_argument("--strict-zero-mode", action="store_true")
    rep = sub.add_parser("report")
    rep.add_argument("run_dir")
    args = parser.parse_args(argv)

    if args.subcommand == "report":
        return _run_report(args.run_dir)

    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2

    try:
        schema = _SCHEMAS[args.subcommand]
        cfg = parse_config(args.config, schema) if args.config else {
            k: v for k, (_, v) in schema.items()
        }
        if args.seed is not None:
            cfg["seed"] = args.seed
    except (ConfigError, OSError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    ctx = RunContext(Path(args.out), args.subcommand, cfg)
    zero_mode = "reject" if args.strict_zero_mode else "annihilate"
    status, code = "ok", 0
    try:
        if args.subcommand == "simulate":
            _run_simulate(ctx, cfg, zero_mode)
        elif args.subcommand == "picard":
            _run_picard(ctx, cfg, zero_mode)
        elif args.subcommand == "residual":
            _run_residual(ctx, cfg, zero_mode)
        elif args.subcommand == "verify-estimates":
            _run_verify_estimates(ctx, cfg, args.exploratory)
        elif args.subcommand == "scan-region":
            _run_scan_region(ctx, cfg)
        elif args.subcommand == "denominator-scan":
            _run_denominator_scan(ctx, cfg)
        elif args.subcommand == "norms":
            _run_norms(ctx, cfg)
        elif args.subcommand == "contraction":
            _run_contraction(ctx, cfg, zero_mode)
        if not all(c["passed"] for c in ctx.checks):
            status, code = "assertion-failure", 1
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        status, code = f"config-error: {e}", 2
    except (ResonanceError, BlowUpError) as e:
        print(f"numerical guard: {e}", file=sys.stderr)
        status, code = f"numerical-guard: {e}", 3
    finally:
        ctx.finalize(status)
    return code


if __name__ == "__main__":
    sys.exit(main())
