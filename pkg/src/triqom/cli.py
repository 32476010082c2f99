"""Scenario runner: maps flat `key = value` config files onto library calls and
writes deterministic, diff-able data files plus a JSON manifest.

Exit codes: 0 success, 1 validation error (bad usage or bad config), 2
numerical failure while running a valid scenario.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    CompositeSpace,
    ModelParams,
    coherent_dim,
    coherent_state,
    mechanics_dim,
    qubit_state,
    tensor,
)
from .dynamics import (
    evolve_coherent,
    evolve_fock_superposition,
    evolve_thermal,
)
from .entanglement import entanglement_record
from .lindblad import IntegrationError, OpenSystemConfig, negativity_sweep
from .nonclassical import (
    cavity_unconditional,
    default_axis,
    fidelity_displaced_fock,
    projected_qubit_state,
    projection_probability,
    radial_lobe_count,
    wigner,
)

__all__ = ["ScenarioConfig", "parse_config", "run_scenario", "main"]

SCENARIOS = (
    "fock-entanglement",
    "coherent-entanglement",
    "thermal-entanglement",
    "open-sweep",
    "cat-unconditional",
    "cat-conditional",
    "kitten-fidelity",
)

_FLOAT_KEYS = frozenset({
    "g", "lambda", "alpha", "beta", "nbar", "kappa", "gamma_m", "n_th", "n_q",
    "t_start", "t_end", "dt", "g_min", "g_max",
})
_INT_KEYS = frozenset({
    "samples", "l", "p", "n_cav", "n_mech", "seed", "grid_points", "g_samples",
})
_LIST_KEYS = frozenset({"Gamma", "Gamma_phi"})  # comma lists, open-sweep only
_STR_KEYS = frozenset({"scenario", "out_dir"})
_ALL_KEYS = _FLOAT_KEYS | _INT_KEYS | _LIST_KEYS | _STR_KEYS


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario description with defaults filled in.

    `echo` preserves every resolved key for the manifest; `seed` is parsed and
    echoed but unused (all computations are deterministic).
    """

    scenario: str
    params: ModelParams
    Gammas: tuple[float, ...]
    gamma_phis: tuple[float, ...]
    t_start: float
    t_end: float
    samples: int
    l: int
    p: int
    out_dir: str | None
    n_cav: int | None
    n_mech: int | None
    dt: float
    seed: int
    grid_points: int
    g_min: float
    g_max: float
    g_samples: int
    echo: dict = field(repr=False)


def _parse_float(key: str, raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ValueError(f"key '{key}': expected a number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"key '{key}': must be finite, got {raw!r}")
    return v


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"key '{key}': expected an integer, got {raw!r}") from None


def parse_config(text: str) -> ScenarioConfig:
    """Parse flat `key = value` config text; unknown or malformed keys fail closed."""
    seen: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = body.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _ALL_KEYS:
            raise ValueError(f"line {lineno}: unknown key '{key}'")
        if key in seen:
            raise ValueError(f"line {lineno}: duplicate key '{key}'")
        if not raw:
            raise ValueError(f"line {lineno}: key '{key}' has no value")
        seen[key] = raw

    if "scenario" not in seen:
        raise ValueError("missing required key 'scenario'")
    scenario = seen.pop("scenario")
    if scenario not in SCENARIOS:
        raise ValueError(
            f"key 'scenario': unknown scenario '{scenario}' "
            f"(choose from {', '.join(SCENARIOS)})")

    vals: dict = {}
    for key, raw in seen.items():
        if key in _STR_KEYS:
            vals[key] = raw
        elif key in _INT_KEYS:
            vals[key] = _parse_int(key, raw)
        elif key in _LIST_KEYS:
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) > 1 and scenario != "open-sweep":
                raise ValueError(
                    f"key '{key}': comma lists are only valid for open-sweep")
            vals[key] = tuple(_parse_float(key, p) for p in parts)
        else:
            vals[key] = _parse_float(key, raw)

    if "lambda" not in vals:
        raise ValueError("missing required key 'lambda'")
    if "g" not in vals and scenario != "kitten-fidelity":
        raise ValueError("missing required key 'g'")

    g = vals.get("g", 0.0)
    lam = vals["lambda"]
    alpha = vals.get("alpha", 2.0)
    beta = vals.get("beta", 2.0)
    nbar = vals.get("nbar", 0.0)
    Gammas = vals.get("Gamma", (0.0,))
    gamma_phis = vals.get("Gamma_phi", (0.0,))
    t_start = vals.get("t_start", 0.0)
    t_end = vals.get("t_end", 4.0 * math.pi)
    samples = vals.get("samples", 400)
    l = vals.get("l", 1)
    p = vals.get("p", 2)
    dt = vals.get("dt", 1e-3)
    seed = vals.get("seed", 0)
    grid_points = vals.get("grid_points", 201)
    g_min = vals.get("g_min", 1e-3)
    g_max = vals.get("g_max", 0.03)
    g_samples = vals.get("g_samples", 61)
    n_cav = vals.get("n_cav")
    n_mech = vals.get("n_mech")

    if samples < 2:
        raise ValueError(f"key 'samples': need at least 2, got {samples}")
    if t_start < 0:
        raise ValueError(f"key 't_start': must be >= 0, got {t_start}")
    if t_end <= t_start:
        raise ValueError(f"key 't_end': must exceed t_start, got {t_end}")
    if l < 1:
        raise ValueError(f"key 'l': must be >= 1, got {l}")
    if p < 1:
        raise ValueError(f"key 'p': must be >= 1, got {p}")
    if dt <= 0:
        raise ValueError(f"key 'dt': must be > 0, got {dt}")
    if grid_points < 8:
        raise ValueError(f"key 'grid_points': need at least 8, got {grid_points}")
    if g_samples < 3:
        raise ValueError(f"key 'g_samples': need at least 3, got {g_samples}")
    if not 0 < g_min < g_max:
        raise ValueError(f"key 'g_min'/'g_max': need 0 < g_min < g_max, "
                         f"got {g_min}, {g_max}")
    if n_cav is not None and n_cav < 2:
        raise ValueError(f"key 'n_cav': must be >= 2, got {n_cav}")
    if n_mech is not None and n_mech < 2:
        raise ValueError(f"key 'n_mech': must be >= 2, got {n_mech}")

    try:
        params = ModelParams(
            g=g, lam=lam, alpha=alpha, beta=beta, nbar_mech=nbar,
            kappa=vals.get("kappa", 0.0), gamma_m=vals.get("gamma_m", 0.0),
            Gamma=Gammas[0], Gamma_phi=gamma_phis[0],
            n_th=vals.get("n_th", 0.0), n_q=vals.get("n_q"))
    except ValueError as exc:
        raise ValueError(f"invalid physical parameters: {exc}") from None

    echo = {
        "scenario": scenario, "g": vals.get("g"), "lambda": lam,
        "alpha": alpha, "beta": beta, "nbar": nbar,
        "kappa": params.kappa, "gamma_m": params.gamma_m,
        "Gamma": list(Gammas), "Gamma_phi": list(gamma_phis),
        "n_th": params.n_th, "n_q": params.n_q,
        "t_start": t_start, "t_end": t_end, "samples": samples,
        "l": l, "p": p, "out_dir": vals.get("out_dir"),
        "n_cav": n_cav, "n_mech": n_mech, "dt": dt, "seed": seed,
        "grid_points": grid_points,
        "g_min": g_min, "g_max": g_max, "g_samples": g_samples,
    }
    return ScenarioConfig(
        scenario=scenario, params=params, Gammas=Gammas, gamma_phis=gamma_phis,
        t_start=t_start, t_end=t_end, samples=samples, l=l, p=p,
        out_dir=vals.get("out_dir"), n_cav=n_cav, n_mech=n_mech, dt=dt,
        seed=seed, grid_points=grid_points, g_min=g_min, g_max=g_max,
        g_samples=g_samples, echo=echo)


# ---------------------------------------------------------------------------
# output writers; 17 significant digits so reruns diff byte-identically

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _require_finite(rows) -> None:
    arr = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise IntegrationError("non-finite value in output data")


def _write_csv(path: Path, header: str, rows) -> None:
    _require_finite(rows)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _write_wigner(path: Path, grid) -> None:
    _require_finite(grid.values)
    x, y = grid.x_axis, grid.y_axis
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# x: {_fmt(x[0])} {_fmt(x[-1])} {x.size}\n")
        f.write(f"# y: {_fmt(y[0])} {_fmt(y[-1])} {y.size}\n")
        for row in grid.values:
            f.write(" ".join(_fmt(v) for v in row) + "\n")


def read_wigner(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Load a Wigner grid file back into (x_axis, y_axis, values)."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if len(lines) < 3 or not lines[0].startswith("# x:") or not lines[1].startswith("# y:"):
        raise ValueError(f"{path}: not a Wigner grid file")

    def axis(line):
        lo, hi, count = line.split(":", 1)[1].split()
        return np.linspace(float(lo), float(hi), int(count))

    x, y = axis(lines[0]), axis(lines[1])
    values = np.array([[float(v) for v in line.split()] for line in lines[2:]])
    if values.shape != (x.size, y.size):
        raise ValueError(f"{path}: value block shape {values.shape} does not "
                         f"match axes ({x.size}, {y.size})")
    return x, y, values


# ---------------------------------------------------------------------------
# scenario implementations

def _time_grid(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(cfg.t_start, cfg.t_end, cfg.samples)


def _closed_spaces(cfg: ScenarioConfig) -> CompositeSpace:
    family_ncav = 2 if cfg.scenario == "fock-entanglement" else coherent_dim(cfg.params.alpha)
    n_cav = cfg.n_cav if cfg.n_cav is not None else family_ncav
    n_mech = cfg.n_mech if cfg.n_mech is not None else mechanics_dim(cfg.params, n_cav)
    return CompositeSpace(n_cav, n_mech)


def _run_entanglement(cfg: ScenarioConfig, out_dir: Path, quiet: bool,
                      manifest: dict) -> None:
    cspace = _closed_spaces(cfg)
    evolver = {
        "fock-entanglement": evolve_fock_superposition,
        "coherent-entanglement": evolve_coherent,
        "thermal-entanglement": evolve_thermal,
    }[cfg.scenario]
    ts = _time_grid(cfg)
    stride = max(1, cfg.samples // 8)
    rows = []
    max_discard = 0.0
    for i, t in enumerate(ts):
        state = evolver(float(t), cfg.params, cspace)
        rec = entanglement_record(state, float(t))
        rows.append((rec.time, rec.neg_qc, rec.neg_qo, rec.neg_oc, rec.intrinsic_qc))
        max_discard = max(max_discard, state.discarded_weight)
        if not quiet and (i % stride == 0 or i == cfg.samples - 1):
            print(f"  t = {t:9.5f}   neg_qc = {rec.neg_qc:.6f}")
    _write_csv(out_dir / "entanglement.csv",
               "t,neg_qc,neg_qo,neg_oc,intrinsic_qc", rows)
    manifest["outputs"].append("entanglement.csv")
    manifest["truncations"] = {"n_cav": cspace.n_cav, "n_mech": cspace.n_mech}
    manifest["tail_weights"] = {"max_discarded_weight": max_discard}
    manifest["results"] = {"neg_qc_final": rows[-1][1],
                           "intrinsic_qc_final": rows[-1][4]}


def _run_open_sweep(cfg: ScenarioConfig, out_dir: Path, quiet: bool,
                    manifest: dict) -> None:
    params = cfg.params
    n_cav = cfg.n_cav if cfg.n_cav is not None else coherent_dim(params.alpha)
    n_mech = cfg.n_mech if cfg.n_mech is not None else mechanics_dim(params, n_cav)
    # initial tails loosened: modest cutoffs keep the RK4 run affordable and
    # the lost weight is reported below
    cav = coherent_state(params.alpha, n_cav, label="cavity", tail_tol=1e-3)
    mech = coherent_state(params.beta, n_mech, label="mech", tail_tol=1e-3)
    rho0 = tensor(qubit_state(1.0, 1.0), cav, mech).density_matrix()
    t_cycle = 2.0 * math.pi * cfg.l

    def report(G, gphi, neg):
        if not quiet:
            print(f"  Gamma = {G:g}  gamma_phi = {gphi:g}  ->  "
                  f"neg_qc({cfg.l} cycle) = {neg:.6f}")

    rows = negativity_sweep(cfg.Gammas, cfg.gamma_phis, params, rho0,
                            t_cycle=t_cycle,
                            config=OpenSystemConfig(dt=cfg.dt),
                            progress=report)
    _write_csv(out_dir / "sweep.csv", "Gamma,gamma_phi,neg_qc_2pi", rows)
    manifest["outputs"].append("sweep.csv")
    manifest["truncations"] = {"n_cav": n_cav, "n_mech": n_mech}
    manifest["tail_weights"] = {"rho0_discarded_weight": rho0.discarded_weight}
    manifest["results"] = {"neg_qc_2pi_max": max(r[2] for r in rows),
                           "neg_qc_2pi_min": min(r[2] for r in rows)}


def _run_cat(cfg: ScenarioConfig, out_dir: Path, quiet: bool,
             manifest: dict) -> None:
    params = cfg.params
    dim = cfg.n_cav if cfg.n_cav is not None else coherent_dim(params.alpha)
    axis = default_axis(params.alpha, cfg.grid_points)
    r_max = abs(params.alpha) + 4.0
    unc = cavity_unconditional(cfg.l, params, dim)
    grid_unc = wigner(unc, axis, axis)
    results = {}
    if cfg.scenario == "cat-unconditional":
        _write_wigner(out_dir / "wigner.dat", grid_unc)
        manifest["outputs"].append("wigner.dat")
        results["min_wigner"] = float(grid_unc.values.min())
        results["lobe_count"] = radial_lobe_count(unc, r_max)
        tails = {"state_discarded_weight": unc.discarded_weight}
    else:
        proj = projected_qubit_state(cfg.l, params, +1, dim)
        grid_proj = wigner(proj, axis, axis)
        _write_wigner(out_dir / "wigner.dat", grid_proj)
        _write_wigner(out_dir / "wigner_unconditional.dat", grid_unc)
        manifest["outputs"] += ["wigner.dat", "wigner_unconditional.dat"]
        results["min_wigner"] = float(grid_proj.values.min())
        results["min_wigner_unconditional"] = float(grid_unc.values.min())
        results["projection_probability_plus"] = projection_probability(
            cfg.l, params, +1, dim)
        results["projection_probability_minus"] = projection_probability(
            cfg.l, params, -1, dim)
        results["lobe_count"] = radial_lobe_count(proj, r_max)
        tails = {"state_discarded_weight": unc.discarded_weight}
    if not quiet:
        print(f"  min Wigner value = {results['min_wigner']:.6g}")
        print(f"  lobes above 10% of peak = {results['lobe_count']}")
    manifest["truncations"] = {"n_cav": dim}
    manifest["tail_weights"] = tails
    manifest["results"] = results


def _run_kitten(cfg: ScenarioConfig, out_dir: Path, quiet: bool,
                manifest: dict) -> None:
    params = cfg.params
    dim = cfg.n_cav if cfg.n_cav is not None else coherent_dim(params.alpha) + 5
    gs = np.linspace(cfg.g_min, cfg.g_max, cfg.g_samples)
    rows = []
    for g in gs:
        p = params.with_rates(g=float(g))
        state = projected_qubit_state(cfg.l, p, +1, dim)
        rows.append((float(g), fidelity_displaced_fock(state, params.alpha, 1)))
    best = max(range(len(rows)), key=lambda i: rows[i][1])
    if not quiet:
        print(f"  best grid point: g = {rows[best][0]:.6g}  "
              f"fidelity = {rows[best][1]:.6f}")
    _write_csv(out_dir / "fidelity.csv", "g,fidelity", rows)
    manifest["outputs"].append("fidelity.csv")
    manifest["truncations"] = {"n_cav": dim}
    manifest["tail_weights"] = {}
    manifest["results"] = {"g_best": rows[best][0], "fidelity_best": rows[best][1]}


def run_scenario(cfg: ScenarioConfig, out_dir: Path | str | None = None,
                 quiet: bool = False) -> dict:
    """Execute one scenario, writing data files and manifest.json to out_dir."""
    t0 = time.perf_counter()
    out = Path(out_dir) if out_dir is not None else Path(cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "scenario": cfg.scenario,
        "version": __version__,
        "config": cfg.echo,
        "outputs": [],
    }
    if not quiet:
        print(f"scenario {cfg.scenario} -> {out}")
    if cfg.scenario in ("fock-entanglement", "coherent-entanglement",
                        "thermal-entanglement"):
        _run_entanglement(cfg, out, quiet, manifest)
    elif cfg.scenario == "open-sweep":
        _run_open_sweep(cfg, out, quiet, manifest)
    elif cfg.scenario in ("cat-unconditional", "cat-conditional"):
        _run_cat(cfg, out, quiet, manifest)
    else:
        _run_kitten(cfg, out, quiet, manifest)
    manifest["duration_seconds"] = round(time.perf_counter() - t0, 6)
    with open(out / "manifest.json", "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    if not quiet:
        print(f"wrote {', '.join(manifest['outputs'])} and manifest.json "
              f"in {manifest['duration_seconds']:.2f} s")
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="triqom",
        description="Hybrid qubit-optomechanics simulator: run scenario configs.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a scenario config file")
    run_p.add_argument("config_path", help="path to a flat key = value config")
    run_p.add_argument("--out", default=None, help="output directory override")
    run_p.add_argument("--quiet", action="store_true", help="suppress progress")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits with 2 on usage errors
        return 0 if exc.code in (0, None) else 1

    try:
        text = Path(args.config_path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return 1
    try:
        cfg = parse_config(text)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        run_scenario(cfg, args.out, quiet=args.quiet)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
