"""Command-line entry point: config parsing, dispatch, CSV + manifest output.

Runs are described by a flat sectioned key=value text file::

    [habitat]
    n = 1
    b1 = 0.5
    b2 = 2.5
    b.kind = constant
    b.params = 2.0
    d.kind = constant
    d.params = 1.0
    beta.kind = constant
    beta.params = 1.0

    [solver]
    D = 1.0
    mu = 1.0
    h0 = 1.0
    delta = 0.5

Sections: habitat (required), solver, classify, dichotomy, sweep,
threshold, steady, paths, run.  Unknown sections or keys are errors;
missing optional keys take documented defaults (N=800, dt=1e-3 h0^2/D,
T_max=200, output_interval=0.5).

Subcommands: simulate, eigen, threshold, speed, dichotomy, sweep, steady.
Every run writes its CSV outputs plus a manifest.json echoing the resolved
config, the toolkit version, the wall-clock duration and a sha256 checksum
per output file.  Outputs are deterministic: identical configs produce
byte-identical CSVs.  Exit codes: 0 success, 1 error, 2 undetermined-only
results.  Set FRONTIER_SIM_LOG=1 for progress logging.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, classify, eigen, pde, semiwave
from .errors import FrontierSimError, ParseError, ValidationError
from .habitat import PROFILE_KINDS, CoefficientProfile, Habitat, tail_limits

log = logging.getLogger(__name__)

COMMANDS = ("simulate", "eigen", "threshold", "speed", "dichotomy", "sweep", "steady")

# section -> key -> (type tag, default); defaults of None mean "required
# when the section is used" or "derived elsewhere"
_SCHEMA: dict[str, dict[str, tuple[str, object]]] = {
    "run": {"command": ("str", None)},
    "habitat": {
        "n": ("int", 1),
        "b1": ("float", None),
        "b2": ("float", None),
        "b.kind": ("str", None),
        "b.params": ("floats", None),
        "d.kind": ("str", None),
        "d.params": ("floats", None),
        "beta.kind": ("str", None),
        "beta.params": ("floats", None),
    },
    "solver": {
        "d": ("float", 1.0),
        "mu": ("float", 1.0),
        "h0": ("float", 1.0),
        "delta": ("float", 0.5),
        "phi_kind": ("str", "cosine"),
        "n": ("int", 800),
        "dt": ("float", None),
        "t_max": ("float", 200.0),
        "output_interval": ("float", 0.5),
        "snapshot_times": ("floats", ()),
        "eigen_n": ("int", 256),
    },
    "classify": {
        "eps_r0": ("float", 1e-3),
        "eps_h": ("float", 1e-3),
        "eps_vanish": ("float", 1e-5),
        "eps_front": ("float", 1e-6),
        "trailing_window": ("float", 0.2),
        "t_extension_factor": ("float", 2.0),
    },
    "dichotomy": {
        "delta_lo": ("float", 0.05),
        "delta_hi": ("float", 2.0),
        "tol": ("float", 0.05),
        "hi_cap": ("float", 1e4),
    },
    "sweep": {
        "parameter": ("str", None),
        "values": ("floats", None),
    },
    "threshold": {
        "target": ("str", "hstar"),
        "r": ("float", None),
        "grid_n": ("int", 2000),
        "tol": ("float", 1e-6),
    },
    "steady": {
        "variant": ("str", "fixed-ball"),
        "r": ("float", None),
        "grid_n": ("int", 2000),
    },
    "paths": {"out_dir": ("str", ".")},
}


@dataclass
class RunConfig:
    """Fully resolved run description (config file plus CLI overrides)."""

    command: Optional[str]
    habitat: Habitat
    solver: dict
    classify_block: dict
    dichotomy: dict
    sweep_block: dict
    threshold: dict
    steady: dict
    out_dir: str
    echo: dict = field(default_factory=dict)

    def sim_config(self) -> pde.SimConfig:
        s = self.solver
        return pde.SimConfig(
            habitat=self.habitat,
            D=s["d"],
            mu=s["mu"],
            h0=s["h0"],
            delta=s["delta"],
            phi_kind=s["phi_kind"],
            N=s["n"],
            dt=s["dt"],
            T_max=s["t_max"],
            output_interval=s["output_interval"],
            eigen_N=s["eigen_n"],
        )

    def rules(self) -> classify.ClassifyRules:
        c = self.classify_block
        return classify.ClassifyRules(
            eps_R0=c["eps_r0"],
            eps_h=c["eps_h"],
            eps_vanish=c["eps_vanish"],
            eps_front=c["eps_front"],
            trailing_window=c["trailing_window"],
        )


def _parse_value(tag: str, raw: str, where: str):
    try:
        if tag == "float":
            return float(raw)
        if tag == "int":
            v = float(raw)
            if v != int(v):
                raise ValueError
            return int(v)
        if tag == "floats":
            parts = [p for p in raw.replace(",", " ").split() if p]
            return tuple(float(p) for p in parts)
        return raw.strip()
    except ValueError:
        raise ParseError(f"cannot parse value {raw!r} for {where}") from None


def _read_sections(path: str | Path) -> dict[str, dict[str, object]]:
    sections: dict[str, dict[str, object]] = {}
    current: Optional[str] = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if text.startswith("[") and text.endswith("]"):
                current = text[1:-1].strip().lower()
                if current not in _SCHEMA:
                    raise ParseError(f"line {lineno}: unknown section [{current}]")
                sections.setdefault(current, {})
                continue
            if "=" not in text:
                raise ParseError(f"line {lineno}: expected key = value, got {text!r}")
            if current is None:
                raise ParseError(f"line {lineno}: key outside any [section]")
            key, raw = (part.strip() for part in text.split("=", 1))
            key = key.lower()
            if key not in _SCHEMA[current]:
                raise ParseError(f"line {lineno}: unknown key {key!r} in [{current}]")
            tag, _ = _SCHEMA[current][key]
            sections[current][key] = _parse_value(tag, raw, f"[{current}] {key}")
    return sections


def _resolved(section: str, given: dict[str, object]) -> dict[str, object]:
    out = {}
    for key, (_, default) in _SCHEMA[section].items():
        out[key] = given.get(key, default)
    return out


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ValidationError(message)


def _build_profile(block: dict, name: str) -> CoefficientProfile:
    kind = block.get(f"{name}.kind")
    params = block.get(f"{name}.params")
    _require(kind is not None, f"habitat is missing {name}.kind")
    _require(params is not None, f"habitat is missing {name}.params")
    if kind not in PROFILE_KINDS:
        raise ValidationError(f"{name}.kind must be one of {', '.join(PROFILE_KINDS)}")
    try:
        return CoefficientProfile(kind, tuple(params))
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from None


def parse_config(path: str | Path) -> RunConfig:
    """Parse and validate a run-config file; fill documented defaults."""
    if not Path(path).is_file():
        raise ParseError(f"config file not found: {path}")
    sections = _read_sections(path)
    if "habitat" not in sections:
        raise ValidationError("config must declare a [habitat] section")

    habitat_block = _resolved("habitat", sections["habitat"])
    _require(habitat_block["b1"] is not None and habitat_block["b2"] is not None,
             "habitat needs b1 and b2 bounds")
    try:
        hab = Habitat(
            b=_build_profile(habitat_block, "b"),
            d=_build_profile(habitat_block, "d"),
            beta=_build_profile(habitat_block, "beta"),
            n=habitat_block["n"],
            b1=habitat_block["b1"],
            b2=habitat_block["b2"],
        )
    except ValueError as exc:
        raise ValidationError(str(exc)) from None

    solver = _resolved("solver", sections.get("solver", {}))
    _require(solver["d"] > 0, "D must be positive")
    _require(solver["mu"] > 0, "mu must be positive")
    _require(solver["h0"] > 0, "h0 must be positive")
    _require(solver["delta"] > 0, "delta must be positive")
    _require(solver["n"] >= 16, "N must be at least 16")
    _require(solver["t_max"] > 0, "T_max must be positive")
    _require(solver["output_interval"] > 0, "output_interval must be positive")
    if solver["dt"] is not None:
        _require(solver["dt"] > 0, "dt must be positive")

    classify_block = _resolved("classify", sections.get("classify", {}))
    for key, value in classify_block.items():
        _require(value > 0, f"{key} must be positive")

    dichotomy = _resolved("dichotomy", sections.get("dichotomy", {}))
    _require(0 < dichotomy["delta_lo"] < dichotomy["delta_hi"],
             "dichotomy needs 0 < delta_lo < delta_hi")
    _require(dichotomy["tol"] > 0, "tol must be positive")

    sweep_block = _resolved("sweep", sections.get("sweep", {}))
    if sweep_block["parameter"] is not None:
        _require(sweep_block["parameter"] in classify.SWEEPABLE,
                 f"sweep parameter must be one of {', '.join(classify.SWEEPABLE)}")
    if sweep_block["values"]:
        vals = sweep_block["values"]
        _require(all(v > 0 for v in vals), "sweep values must be positive")
        _require(list(vals) == sorted(vals), "sweep values must be sorted ascending")

    threshold = _resolved("threshold", sections.get("threshold", {}))
    _require(threshold["target"] in ("Dstar", "hstar", "dstar"),
             "threshold target must be Dstar or hstar")
    _require(threshold["grid_n"] >= 32, "threshold grid_n must be at least 32")

    steady = _resolved("steady", sections.get("steady", {}))
    _require(steady["variant"] in ("fixed-ball", "entire-space"),
             "steady variant must be fixed-ball or entire-space")
    _require(steady["grid_n"] >= 32, "steady grid_n must be at least 32")

    run_block = _resolved("run", sections.get("run", {}))
    command = run_block["command"]
    if command is not None and command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}")

    paths = _resolved("paths", sections.get("paths", {}))

    echo = {name: _resolved(name, sections.get(name, {})) for name in _SCHEMA}
    return RunConfig(
        command=command,
        habitat=hab,
        solver=solver,
        classify_block=classify_block,
        dichotomy=dichotomy,
        sweep_block=sweep_block,
        threshold=threshold,
        steady=steady,
        out_dir=paths["out_dir"],
        echo=echo,
    )


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf"
        return repr(x)
    return str(x)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, cfg: RunConfig, outputs: list[Path], started: float) -> None:
    manifest = {
        "command": cfg.command,
        "version": __version__,
        "duration_seconds": time.time() - started,
        "config": cfg.echo,
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_simulate(cfg: RunConfig, out_dir: Path) -> tuple[int, list[Path]]:
    sim = cfg.sim_config()
    snapshots = sorted(cfg.solver["snapshot_times"])
    captured: list[tuple[float, np.ndarray, np.ndarray]] = []
    pending = list(snapshots)

    def on_sample(state: pde.SimState) -> None:
        while pending and state.t >= pending[0] - 1e-9:
            captured.append((pending.pop(0), state.physical_radii(sim), state.v.copy()))

    ts, _ = pde.run(sim, on_sample=on_sample)
    out = out_dir / "timeseries.csv"
    _write_csv(
        out,
        ["t", "h", "hp", "max_u", "mass", "R0_front"],
        list(zip(ts.t, ts.h, ts.hp, ts.max_u, ts.mass, ts.R0_front)),
    )
    outputs = [out]
    for t_req, r, u in captured:
        p = out_dir / f"profile_{t_req:g}.csv"
        _write_csv(p, ["r", "u"], list(zip(r.tolist(), u.tolist())))
        outputs.append(p)
    return 0, outputs


def _cmd_eigen(cfg: RunConfig, out_dir: Path) -> tuple[int, list[Path]]:
    D = cfg.solver["d"]
    R = cfg.solver["h0"]
    res = eigen.solve_eigenproblem(cfg.habitat, D, R, N=cfg.solver["n"])
    out = out_dir / "eigen.csv"
    _write_csv(out, ["D", "R", "lambda_star", "R0"], [(D, R, res.lambda_star, res.R0)])
    return 0, [out]


def _cmd_threshold(cfg: RunConfig, out_dir: Path) -> tuple[int, list[Path]]:
    target = cfg.threshold["target"]
    N = cfg.threshold["grid_n"]
    tol = cfg.threshold["tol"]
    if target.lower() == "dstar":
        R = cfg.threshold["r"] if cfg.threshold["r"] is not None else cfg.solver["h0"]
        res = eigen.find_Dstar(cfg.habitat, R, N=N, tol=tol)
        name = "Dstar"
    else:
        res = eigen.find_hstar(cfg.habitat, cfg.solver["d"], N=N, tol=tol)
        name = "hstar"
    out = out_dir / "threshold.csv"
    _write_csv(
        out,
        ["target", "value", "bracket_lo", "bracket_hi", "residual", "status"],
        [(name, res.value, res.bracket[0], res.bracket[1], res.residual, res.status)],
    )
    return 0, [out]


def _cmd_speed(cfg: RunConfig, out_dir: Path) -> tuple[int, list[Path]]:
    tl = tail_limits(cfg.habitat)
    if not tl.satisfies_H:
        raise ValidationError("speed needs a favorable far field (tail of b - d must be positive)")
    problem = semiwave.SemiWaveProblem(
        a=tl.alpha, b=tl.beta_inf, D=cfg.solver["d"], mu=cfg.solver["mu"]
    )
    res = semiwave.find_k0(problem)
    out = out_dir / "speed.csv"
    _write_csv(
        out,
        ["a", "b", "D", "mu", "k0", "cstar", "U0_slope"],
        [(problem.a, problem.b, problem.D, problem.mu, res.k0, res.cstar, res.U0_slope)],
    )
    return 0, [out]


def _cmd_dichotomy(cfg: RunConfig, out_dir: Path) -> tuple[int, list[Path]]:
    sim = cfg.sim_config()
    res = classify.find_delta0(
        sim,
        lo=cfg.dichotomy["delta_lo"],
        hi=cfg.dichotomy["delta_hi"],
        tol=cfg.dichotomy["tol"],
        rules=cfg.rules(),
        hi_cap=cfg.dichotomy["hi_cap"],
        t_extension=cfg.classify_block["t_extension_factor"],
    )
    out = out_dir / "delta0.csv"
    _write_csv(
        out,
        ["delta0", "lo", "hi", "runs"],
        [(res.delta0, res.bracket[0], res.bracket[1], res.runs)],
    )
    return (2 if res.aborted else 0), [out]


def _sweep_worker(args) -> classify.SweepRow:
    parameter, value, sim, rules = args
    rows = classify.sweep(parameter, [value], sim, rules=rules, check_guarantees=False)
    return rows[0]


def _cmd_sweep(cfg: RunConfig, out_dir: Path, jobs: int) -> tuple[int, list[Path]]:
    parameter = cfg.sweep_block["parameter"]
    values = cfg.sweep_block["values"]
    _require(parameter is not None and values, "sweep needs a parameter and values")
    sim = cfg.sim_config()
    rules = cfg.rules()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_worker, [(parameter, v, sim, rules) for v in values]))
        classify._check_sweep_guarantees(parameter, rows, sim)
    else:
        rows = classify.sweep(parameter, list(values), sim, rules=rules)
    out = out_dir / "sweep.csv"
    _write_csv(
        out,
        ["value", "verdict", "t_decided", "h_final"],
        [(r.value, r.verdict, r.t_decided, r.h_final) for r in rows],
    )
    all_undetermined = all(r.verdict == classify.UNDETERMINED for r in rows)
    return (2 if all_undetermined else 0), [out]


def _cmd_steady(cfg: RunConfig, out_dir: Path) -> tuple[int, list[Path]]:
    variant = cfg.steady["variant"]
    D = cfg.solver["d"]
    if cfg.steady["r"] is not None:
        R = cfg.steady["r"]
    elif variant == "entire-space":
        R = pde.default_truncation_radius(cfg.habitat, D)
    else:
        raise ValidationError("steady fixed-ball needs an explicit R")
    state = pde.solve_steady_state(cfg.habitat, D, R, N=cfg.steady["grid_n"], variant=variant)
    out = out_dir / "steady.csv"
    _write_csv(out, ["r", "u"], list(zip(state.r.tolist(), state.u.tolist())))
    return 0, [out]


def dispatch(cfg: RunConfig, jobs: int = 1) -> int:
    """Run the configured command, write outputs and manifest, return exit code."""
    if cfg.command not in COMMANDS:
        raise ValidationError(f"no command selected (one of {', '.join(COMMANDS)})")
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.time()
    if cfg.command == "simulate":
        code, outputs = _cmd_simulate(cfg, out_dir)
    elif cfg.command == "eigen":
        code, outputs = _cmd_eigen(cfg, out_dir)
    elif cfg.command == "threshold":
        code, outputs = _cmd_threshold(cfg, out_dir)
    elif cfg.command == "speed":
        code, outputs = _cmd_speed(cfg, out_dir)
    elif cfg.command == "dichotomy":
        code, outputs = _cmd_dichotomy(cfg, out_dir)
    elif cfg.command == "sweep":
        code, outputs = _cmd_sweep(cfg, out_dir, jobs)
    else:
        code, outputs = _cmd_steady(cfg, out_dir)
    _write_manifest(out_dir, cfg, outputs, started)
    return code


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="frontier-sim",
        description="Free-boundary invasion front laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "integrate the free-boundary model and write timeseries.csv"),
        ("eigen", "principal eigenvalue and threshold value of one ball"),
        ("threshold", "critical diffusion D* or critical radius h*"),
        ("speed", "semi-wave spreading speed k0 for the far-field parameters"),
        ("dichotomy", "bisect the sharp initial amplitude delta0"),
        ("sweep", "classify runs along one parameter axis"),
        ("steady", "positive steady state on a ball or truncated space"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the run-config file")
        p.add_argument("--out", default=None, help="output directory (default: paths.out_dir)")
        p.add_argument("--jobs", type=int, default=1, help="parallel runs for sweep")
        if name == "threshold":
            p.add_argument("--target", choices=("Dstar", "hstar"), default=None,
                           help="which critical value to bisect")
    args = parser.parse_args(argv)

    if os.environ.get("FRONTIER_SIM_LOG", "") not in ("", "0"):
        logging.basicConfig(level=logging.INFO, format="%(name)s: %(message)s")

    try:
        cfg = parse_config(args.config)
        cfg.command = args.command
        cfg.echo["run"]["command"] = args.command
        if args.out is not None:
            cfg.out_dir = args.out
            cfg.echo["paths"]["out_dir"] = args.out
        if args.command == "threshold" and getattr(args, "target", None):
            cfg.threshold["target"] = args.target
            cfg.echo["threshold"]["target"] = args.target
        return dispatch(cfg, jobs=args.jobs)
    except FrontierSimError as exc:
        print(f"frontier-sim: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
