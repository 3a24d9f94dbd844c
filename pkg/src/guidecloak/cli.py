"""Command-line experiment runner.

Usage::

    guidecloak COMMAND --config cfg.json [--out report.json] [--seed N] [--format json|csv]

Commands: ``modes``, ``scatter``, ``design-position``, ``design-size``,
``design-multi``, ``sweep``, ``bound``.  Exit codes: 0 success, 2 bad
configuration, 3 numerical failure, 4 rejected physical regime.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import __version__
from .coefficients import Fly, FlyConfig, SIGN_SIGMA, s1_coefficients, s2_coefficients
from .designers import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    MULTI_CAPACITY,
    build_multimodal_design,
    choose_positions_monomodal,
    choose_positions_size_design,
    solve_multimodal_fixed_point,
    solve_position_fixed_point,
    solve_size_fixed_point,
)
from .errors import ConfigError, GuideCloakError, InvariantError, NumericalError, RegimeError
from .foldy import FoldySystem, expansion_errors, loglog_slope
from .green import DEFAULT_OFFSET_FACTORS, DEFAULT_TAIL_TOL, GreenEvaluator
from .modal import DEFAULT_CUTOFF_FACTOR, CrossSection, build_mode_basis
from .obstruction import mixed_spectrum, slab_half_length, transmission_bound, transmission_deviation

SCHEMA_VERSION = 1
COMMANDS = ("modes", "scatter", "design-position", "design-size", "design-multi", "sweep", "bound")
# names are part of the output contract (U+2212 minus, U+00B7 dot)
SWEEP_COLUMNS = (
    "epsilon",
    "|s_minus|",
    "|s_minus − eps·s1|",
    "|s_minus − eps·s1 − eps2·s2|",
    "energy_residual",
)
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_REGIME = 0, 2, 3, 4

DEFAULTS: dict[str, Any] = {
    "schema": SCHEMA_VERSION,
    "epsilon": 0.01,
    "flies": [],
    "seed": 0,
    "numerics": {
        "mode_cutoff": DEFAULT_TAIL_TOL,
        "cutoff_factor": DEFAULT_CUTOFF_FACTOR,
        "reg_offsets": None,
    },
    "design": {
        "m": 0,
        "y": None,
        "capacity": None,
        "variant": "four-fly",
        "tol": DEFAULT_TOL,
        "max_iter": DEFAULT_MAX_ITER,
        "grid_size": 256,
        "svd_floor": 1e-3,
    },
    "sweep": {"epsilons": [0.02, 0.01, 0.005, 0.0025]},
    "bound": {"spectrum_count": 6},
}


@dataclass
class ExperimentConfig:
    a: float
    b: float
    k2: float
    epsilon: float
    flies: list[dict]
    seed: int
    numerics: dict
    design: dict
    sweep: dict
    bound: dict
    schema: int = SCHEMA_VERSION
    extras: dict = field(default_factory=dict)

    @property
    def cross_section(self) -> CrossSection:
        return CrossSection(self.a, self.b)

    def fly_config(self, epsilon: float | None = None) -> FlyConfig:
        flies = []
        for f in self.flies:
            shape = f["shape"]
            center = (f["y"][0], f["y"][1], f["z"])
            if "radius" in shape:
                flies.append(Fly.sphere(center, shape["radius"]))
            else:
                flies.append(Fly(center, shape["capacity"]))
        return FlyConfig(tuple(flies), self.epsilon if epsilon is None else epsilon)

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "cross_section": {"a": self.a, "b": self.b},
            "k2": self.k2,
            "epsilon": self.epsilon,
            "flies": copy.deepcopy(self.flies),
            "seed": self.seed,
            "numerics": dict(self.numerics),
            "design": dict(self.design),
            "sweep": copy.deepcopy(self.sweep),
            "bound": dict(self.bound),
        }


def _positive(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{path}: expected a positive number, got {value!r}")
    return float(value)


def _merge(block: Any, defaults: dict, path: str) -> dict:
    if block is None:
        return dict(defaults)
    if not isinstance(block, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = set(block) - set(defaults)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    out = dict(defaults)
    out.update(block)
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Validate a JSON config and fill in every default."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: malformed JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError("$: top level must be an object")
    known = {"schema", "cross_section", "k2", "epsilon", "flies", "seed", "numerics", "design", "sweep", "bound"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"$: unknown keys {sorted(unknown)}")
    schema = doc.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"$.schema: unsupported version {schema!r} (expected {SCHEMA_VERSION})")
    cs = doc.get("cross_section")
    if not isinstance(cs, dict) or set(cs) != {"a", "b"}:
        raise ConfigError("$.cross_section: expected an object with keys 'a' and 'b'")
    a = _positive(cs["a"], "$.cross_section.a")
    b = _positive(cs["b"], "$.cross_section.b")
    if "k2" not in doc:
        raise ConfigError("$.k2: missing")
    k2 = _positive(doc["k2"], "$.k2")
    eps = _positive(doc.get("epsilon", DEFAULTS["epsilon"]), "$.epsilon")
    seed = doc.get("seed", DEFAULTS["seed"])
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"$.seed: expected a nonnegative integer, got {seed!r}")

    flies_in = doc.get("flies", [])
    if not isinstance(flies_in, list):
        raise ConfigError("$.flies: expected a list")
    flies = []
    for n, f in enumerate(flies_in):
        path = f"$.flies[{n}]"
        if not isinstance(f, dict) or not {"y", "z"} <= set(f) or set(f) - {"y", "z", "shape"}:
            raise ConfigError(f"{path}: expected an object with keys 'y', 'z' and optional 'shape'")
        y = f["y"]
        if not isinstance(y, list) or len(y) != 2 or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in y):
            raise ConfigError(f"{path}.y: expected [y1, y2]")
        if not isinstance(f["z"], (int, float)) or isinstance(f["z"], bool):
            raise ConfigError(f"{path}.z: expected a number")
        shape = f.get("shape", {"radius": 1.0})
        if not isinstance(shape, dict) or len(shape) != 1 or not set(shape) <= {"radius", "capacity"}:
            raise ConfigError(f"{path}.shape: expected {{'radius': r}} or {{'capacity': c}}")
        key = next(iter(shape))
        shape = {key: _positive(shape[key], f"{path}.shape.{key}")}
        flies.append({"y": [float(y[0]), float(y[1])], "z": float(f["z"]), "shape": shape})

    numerics = _merge(doc.get("numerics"), DEFAULTS["numerics"], "$.numerics")
    _positive(numerics["mode_cutoff"], "$.numerics.mode_cutoff")
    _positive(numerics["cutoff_factor"], "$.numerics.cutoff_factor")
    offs = numerics["reg_offsets"]
    if offs is not None:
        if not isinstance(offs, list) or len(offs) < 2:
            raise ConfigError("$.numerics.reg_offsets: expected a list of at least two offsets")
        for i, d in enumerate(offs):
            _positive(d, f"$.numerics.reg_offsets[{i}]")
        if any(x <= y for x, y in zip(offs, offs[1:])):
            raise ConfigError("$.numerics.reg_offsets: must be strictly decreasing")
    design = _merge(doc.get("design"), DEFAULTS["design"], "$.design")
    if design["variant"] not in ("four-fly", "three-fly"):
        raise ConfigError(f"$.design.variant: expected 'four-fly' or 'three-fly', got {design['variant']!r}")
    if not isinstance(design["m"], int) or isinstance(design["m"], bool) or design["m"] < 0:
        raise ConfigError("$.design.m: expected a nonnegative integer")
    if design["y"] is not None:
        y = design["y"]
        if not isinstance(y, list) or len(y) != 2 or not CrossSection(a, b).contains(y):
            raise ConfigError(f"$.design.y: expected [y1, y2] strictly inside the cross-section, got {y!r}")
    if design["capacity"] is not None:
        _positive(design["capacity"], "$.design.capacity")
    _positive(design["tol"], "$.design.tol")
    if not isinstance(design["max_iter"], int) or design["max_iter"] < 1:
        raise ConfigError("$.design.max_iter: expected a positive integer")
    sweep = _merge(doc.get("sweep"), DEFAULTS["sweep"], "$.sweep")
    if not isinstance(sweep["epsilons"], list) or len(sweep["epsilons"]) < 2:
        raise ConfigError("$.sweep.epsilons: expected a list of at least two values")
    sweep["epsilons"] = [_positive(e, f"$.sweep.epsilons[{i}]") for i, e in enumerate(sweep["epsilons"])]
    bound = _merge(doc.get("bound"), DEFAULTS["bound"], "$.bound")

    cfg = ExperimentConfig(a, b, k2, eps, flies, seed, numerics, design, sweep, bound)
    cfg.fly_config().validate(cfg.cross_section)  # InvariantError names the fly
    return cfg


# ---------------------------------------------------------------------------
def _c(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _cmat(m: np.ndarray) -> list:
    return [[_c(v) for v in row] for row in np.atleast_2d(m)]


def _threads() -> int:
    raw = os.environ.get("GUIDECLOAK_THREADS")
    if raw is None:
        return max(1, os.cpu_count() or 1)
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"GUIDECLOAK_THREADS: expected an integer, got {raw!r}") from None


def _setup(cfg: ExperimentConfig):
    basis = build_mode_basis(cfg.cross_section, cfg.k2, cutoff_factor=cfg.numerics["cutoff_factor"])
    offs = cfg.numerics["reg_offsets"]
    ev = GreenEvaluator(basis, cfg.numerics["mode_cutoff"], None if offs is None else tuple(offs))
    return basis, ev


def _flies_out(fc: FlyConfig) -> list:
    return [{"center": list(f.center), "capacity": f.capacity} for f in fc.flies]


def _design_out(rep, tol: float) -> dict:
    return {
        "kind": rep.kind,
        "epsilon": rep.epsilon,
        "iterations": rep.iterations,
        "steps": rep.steps,
        "contraction": rep.contraction,
        "kappa": rep.kappa.tolist(),
        "kappa_over_eps": rep.c0,
        "tau": rep.tau.tolist(),
        "tau0": rep.tau0.tolist(),
        "trace": [k.tolist() for k in rep.trace],
        "residual": rep.residual,
        "residual_unperturbed": rep.residual_unperturbed,
        "tolerance": tol,
        "flies": _flies_out(rep.config),
    }


def _cmd_modes(cfg, basis, ev, seed):
    rows = [
        {"j": j, "p": int(basis.p[j - 1]), "q": int(basis.q[j - 1]), "lambda": float(basis.eigenvalues[j - 1]),
         "beta": float(basis.beta_of(j).real)}
        for j in basis.n_pro
    ]
    nxt = basis.n_exp[0] if basis.n_exp else None
    return {
        "n_propagating": basis.n_propagating,
        "n_modes": basis.n_modes,
        "propagating": rows,
        "first_evanescent": None if nxt is None else {"j": nxt, "lambda": float(basis.eigenvalues[nxt - 1])},
    }


def _cmd_scatter(cfg, basis, ev, seed):
    fc = cfg.fly_config()
    sys_ = FoldySystem(fc, basis, ev)
    rep = sys_.scattering_matrix()
    return {
        "R": _cmat(rep.R),
        "T": _cmat(rep.T),
        "s1_minus": _cmat(s1_coefficients(fc, basis).minus),
        "s2_minus": _cmat(s2_coefficients(fc, basis, ev).minus) if len(fc) else _cmat(np.zeros_like(rep.R)),
        "energy_residual": rep.energy_residual.tolist(),
        "reciprocity_residual": rep.reciprocity_residual,
        "unitarity_residual": rep.unitarity_residual,
        "trust_parameter": sys_.trust_parameter,
        "sign_sigma": fc.sign_sigma,
    }


def _cmd_design_position(cfg, basis, ev, seed):
    d = cfg.design
    design = choose_positions_monomodal(basis, d["m"], d["y"], d["capacity"] or 1.0)
    rep = solve_position_fixed_point(design, cfg.epsilon, ev, d["tol"], d["max_iter"])
    return _design_out(rep, d["tol"])


def _cmd_design_size(cfg, basis, ev, seed):
    d = cfg.design
    design = choose_positions_size_design(basis, d["m"], d["y"], d["variant"], d["capacity"] or 1.0)
    rep = solve_size_fixed_point(design, cfg.epsilon, ev, d["tol"], d["max_iter"])
    out = _design_out(rep, d["tol"])
    out["variant"] = d["variant"]
    return out


def _cmd_design_multi(cfg, basis, ev, seed):
    d = cfg.design
    design = build_multimodal_design(
        basis, d["y"], d["capacity"] or MULTI_CAPACITY, d["grid_size"], d["svd_floor"], seed=seed
    )
    rep = solve_multimodal_fixed_point(design, cfg.epsilon, ev, d["tol"], d["max_iter"])
    out = _design_out(rep, d["tol"])
    out.update(
        N=design.N,
        P=design.P,
        gammas=[{"value": g.value, "j": g.j, "jp": g.jp} for g in design.gammas],
        y=design.y.tolist(),
        z=design.z.tolist(),
        sigma_min_B=rep.extra["sigma_min_B"],
        phasor_sums=rep.extra["phasor_sums"],
    )
    return out


def sweep_rows(cfg: ExperimentConfig, basis, ev, threads: int | None = None) -> list[dict]:
    fc = cfg.fly_config()
    if len(fc) == 0:
        raise ConfigError("$.flies: sweep needs at least one fly")
    A = ev.interaction_matrix(fc.centers)  # independent of epsilon

    def one(eps):
        r = expansion_errors(fc.with_epsilon(eps), basis, ev, A)
        vals = (eps, r["s_minus"], r["err1"], r["err2"], r["energy_residual"])
        return dict(zip(SWEEP_COLUMNS, vals))

    with ThreadPoolExecutor(max_workers=threads or _threads()) as pool:
        return list(pool.map(one, cfg.sweep["epsilons"]))


def _cmd_sweep(cfg, basis, ev, seed):
    rows = sweep_rows(cfg, basis, ev)
    eps = [r["epsilon"] for r in rows]
    slopes = {}
    for col in SWEEP_COLUMNS[1:4]:
        vals = [r[col] for r in rows]
        slopes[col] = loglog_slope(eps, vals) if all(v > 0 for v in vals) else None
    return {"columns": list(SWEEP_COLUMNS), "rows": rows, "slopes": slopes}


def _cmd_bound(cfg, basis, ev, seed):
    fc = cfg.fly_config()
    if len(fc) == 0:
        raise ConfigError("$.flies: bound needs at least one fly")
    L = slab_half_length(fc)
    ob = transmission_bound(basis, L)
    out = {
        "L": L,
        "mu1": ob.mu1,
        "k2": ob.k2,
        "verdict": ob.verdict,
        "mixed_spectrum": mixed_spectrum(basis, L, int(cfg.bound["spectrum_count"])).tolist(),
    }
    if basis.n_propagating == 1:
        rep = FoldySystem(fc, basis, ev).scattering_matrix()
        diag = transmission_deviation(rep, fc, basis)
        out["transmission"] = {
            "abs_T_minus_1": diag.abs_T_minus_1,
            "im_s_plus": diag.im_s_plus,
            "energy_residual": diag.energy_residual,
            "first_order_scale": diag.first_order_scale,
            "phase_shift_persists": diag.holds,
        }
    return out


_HANDLERS = {
    "modes": _cmd_modes,
    "scatter": _cmd_scatter,
    "design-position": _cmd_design_position,
    "design-size": _cmd_design_size,
    "design-multi": _cmd_design_multi,
    "sweep": _cmd_sweep,
    "bound": _cmd_bound,
}


def run(command: str, cfg: ExperimentConfig, seed: int | None = None) -> dict:
    """Execute ``command``; the result is deterministic apart from ``provenance.timings``."""
    if command not in _HANDLERS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    seed = cfg.seed if seed is None else seed
    t0 = time.perf_counter()
    basis, ev = _setup(cfg)
    outputs = _HANDLERS[command](cfg, basis, ev, seed)
    offsets = ev.reg_offsets
    return {
        "command": command,
        "inputs": cfg.to_dict(),
        "outputs": outputs,
        "tolerances": {
            "mode_cutoff": ev.mode_cutoff,
            "reg_offsets": list(offsets),
            "reg_offset_factors": list(DEFAULT_OFFSET_FACTORS) if cfg.numerics["reg_offsets"] is None else None,
            "design_tol": cfg.design["tol"],
        },
        "provenance": {
            "version": __version__,
            "seed": seed,
            "sign_sigma": SIGN_SIGMA,
            "timings": {"total_s": time.perf_counter() - t0},
        },
    }


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True)


def sweep_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(SWEEP_COLUMNS), lineterminator="\n")
    w.writeheader()
    for row in report["outputs"]["rows"]:
        w.writerow({k: repr(float(row[k])) for k in SWEEP_COLUMNS})
    return buf.getvalue()


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ConfigError, InvariantError)):
        return EXIT_CONFIG
    if isinstance(exc, RegimeError):
        return EXIT_REGIME
    if isinstance(exc, NumericalError):
        return EXIT_NUMERIC
    if isinstance(exc, (GuideCloakError, ValueError, OSError)):
        return EXIT_CONFIG
    return 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="guidecloak", description="Invisible small obstacles in a rectangular waveguide.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment configuration")
    ap.add_argument("--out", help="write the report here instead of stdout")
    ap.add_argument("--seed", type=int, help="overrides the config seed")
    ap.add_argument("--format", choices=("json", "csv"), default="json", help="csv is only available for sweep")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.format == "csv" and args.command != "sweep":
            raise ConfigError("--format csv is only supported by 'sweep'")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        with open(args.config, encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        report = run(args.command, cfg, args.seed)
        text = sweep_csv(report) if args.format == "csv" else dumps(report) + "\n"
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except Exception as exc:  # mapped to the documented exit codes
        code = exit_code_for(exc)
        if code == 1:
            raise
        print(f"guidecloak: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
