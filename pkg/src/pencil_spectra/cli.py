"""Batch front end: ``pencil-spectra COMMAND --config run.json [--out DIR]``.

Exit codes: 0 success, 2 refused input or precondition, 3 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import shutil
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from . import __version__
from .bands import TruncationError, WindowError, band_sweep
from .coefficients import QuadratureError, perturbation_coeffs
from .ode import IntegrationError
from .oracle import (InBandError, certify_absence, eigenvalue_defect_order, find_isolated_eigenvalue,
                     fitted_order)
from .predictor import (VARIANTS, emergent_prediction, isolated_series, spectrum_enclosure_check,
                        threshold_context, zero_mode_analysis)
from .problem import ProblemSpec, SpecError, load_problem, problem_from_dict, problem_to_dict, sup_gamma
from .scattering import (PreconditionError, ScatteringError, discrete_spectrum, scattering_data,
                         threshold_constants)

COMMANDS = ("bands", "coeffs", "scattering", "predict", "verify", "enclosure")
SCHEMA = 1
EXIT_OK, EXIT_REFUSED, EXIT_NUMERIC = 0, 2, 3

DEFAULT_TOLERANCES = {
    "order_min": 2.5,                # fitted order needed for "confirmed"
    "search_radius_factor": 0.5,     # oracle disc radius / (eps |first-order coefficient|)
    "absence_radius_factor": 5.0,    # absence disc radius / (eps |rho0|)
    "absence_min_fraction": 1 / 1024,
    "matching_residual_max": 1e-8,
    "enclosure_slack": 0.0,
}


class ConfigError(ValueError):
    """Malformed run configuration."""


@dataclass
class RunConfig:
    problem: str | dict
    command: str | None = None
    out: str = "out"
    n: list[int] = field(default_factory=lambda: [1])
    signs: list[int] = field(default_factory=lambda: [1])
    branches: list[int] = field(default_factory=lambda: [1, -1])
    tau_points: int = 201
    epsilon_ladder: list[float] = field(default_factory=lambda: [0.04, 0.02, 0.01])
    n_modes: int | None = None
    variant: str = "corrected"
    order: int = 3
    tolerances: dict[str, float] = field(default_factory=dict)

    def resolved_tolerances(self) -> dict[str, float]:
        t = dict(DEFAULT_TOLERANCES)
        t.update(self.tolerances)
        return t


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def runconfig_from_dict(d: Mapping[str, Any]) -> RunConfig:
    if not isinstance(d, Mapping):
        raise ConfigError("run config must be a JSON object")
    unknown = set(d) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
    if "problem" not in d:
        raise ConfigError("run config needs 'problem'")
    cfg = RunConfig(**d)
    if cfg.command is not None and cfg.command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}")
    if cfg.variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}")
    if any(s not in (1, -1) for s in list(cfg.signs) + list(cfg.branches)):
        raise ConfigError("signs and branches must be +1 or -1")
    if any(int(k) != k or k < 1 for k in cfg.n):
        raise ConfigError("n entries must be positive integers")
    if cfg.tau_points < 2:
        raise ConfigError("tau_points must be >= 2")
    if len(cfg.epsilon_ladder) < 3 or any(e <= 0 for e in cfg.epsilon_ladder):
        raise ConfigError("epsilon_ladder needs >= 3 positive values")
    bad = set(cfg.tolerances) - set(DEFAULT_TOLERANCES)
    if bad:
        raise ConfigError(f"unknown tolerance keys: {sorted(bad)}")
    return cfg


def runconfig_to_dict(cfg: RunConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_runconfig(path: str | Path) -> tuple[RunConfig, ProblemSpec]:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run config: {exc}") from exc
    cfg = runconfig_from_dict(raw)
    if isinstance(cfg.problem, str):
        ppath = Path(cfg.problem)
        if not ppath.is_absolute():
            ppath = path.parent / ppath
        problem = load_problem(ppath)
    else:
        problem = problem_from_dict(cfg.problem)
    return cfg, problem


# --- deterministic serialization ---------------------------------------------------------

def _fmt(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def plain(obj: Any) -> Any:
    """Reduce to JSON-ready builtins; complex numbers become {"re", "im"}."""
    if isinstance(obj, (bool, type(None), str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, Mapping):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if hasattr(obj, "to_json"):
        return plain(obj.to_json())
    if dataclasses.is_dataclass(obj):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 0) -> str:
    """JSON with every float at 17 significant digits and sorted keys."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        return _fmt(obj)
    return json.dumps(obj)


def report(command: str, cfg: RunConfig, problem: ProblemSpec, body: dict) -> str:
    doc = {"schema": SCHEMA, "version": __version__, "command": command,
           "tolerances": cfg.resolved_tolerances(), "problem": problem_to_dict(problem)}
    doc.update(body)
    return dumps(plain(doc)) + "\n"


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _svg(draw: Callable[[Any], None]) -> str:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "pencil-spectra"
    fig, ax = plt.subplots(figsize=(6, 4))
    draw(ax)
    fig.tight_layout()
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()


# --- worker pool ----------------------------------------------------------------------

def _pmap(fn: Callable, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_star, [(fn, it) for it in items]))


def _star(arg):
    fn, it = arg
    return fn(*it)


# --- commands --------------------------------------------------------------------------

def _band_task(problem: ProblemSpec, n: int, sign: int, taus: list[float], n_modes):
    curve = band_sweep(problem, n, sign, taus, n_modes=n_modes)
    return [(p.n, sign, p.tau, p.lam.real, p.lam.imag, p.source, int(p.ambiguous)) for p in curve.points]


def cmd_bands(cfg: RunConfig, problem: ProblemSpec, jobs: int = 1) -> dict[str, str]:
    taus = list(-0.5 + np.arange(cfg.tau_points) / cfg.tau_points)
    tasks = [(problem, n, s, taus, cfg.n_modes) for n in sorted(set([0] + list(cfg.n))) for s in cfg.signs]
    rows = [r for part in _pmap(_band_task, tasks, jobs) for r in part]
    rows.sort(key=lambda r: (r[0], r[1], r[2], r[4]))

    def draw(ax):
        for n in sorted({r[0] for r in rows}):
            for s in cfg.signs:
                pts = [(r[2], r[3]) for r in rows if r[0] == n and r[1] == s]
                if pts:
                    t, y = zip(*pts)
                    ax.plot(t, y, ".", ms=2, label=f"n={n}, sign={s:+d}")
        ax.set_xlabel("tau")
        ax.set_ylabel("Re lambda")
        ax.legend(fontsize=7)

    header = ["n", "sign", "tau", "re", "im", "source", "ambiguous"]
    return {"bands.csv": csv_text(header, rows), "bands.svg": _svg(draw),
            "bands.json": report("bands", cfg, problem, {"rows": len(rows), "tau_points": cfg.tau_points})}


def cmd_coeffs(cfg: RunConfig, problem: ProblemSpec, jobs: int = 1) -> dict[str, str]:
    out = []
    for n in cfg.n:
        for s in cfg.signs:
            co = perturbation_coeffs(problem.gamma, n, problem.kappa_star, s)
            out.append({"n": n, "sign": s, "coefficients": co, "identity_residuals": co.identity_residuals()})
    return {"coeffs.json": report("coeffs", cfg, problem, {"thresholds": out})}


def cmd_scattering(cfg: RunConfig, problem: ProblemSpec, jobs: int = 1) -> dict[str, str]:
    V = problem.potential
    data = []
    for n in cfg.n:
        sd, jd = scattering_data(V, n)
        co = perturbation_coeffs(problem.gamma, n, problem.kappa_star)
        constants = abs(co.rho0) >= 1e-12
        if constants:
            threshold_constants(sd, co, problem, jd)
        data.append({"n": n, "unitarity_residual": abs(abs(sd.a) ** 2 - abs(sd.b) ** 2 - 1),
                     "threshold_constants": constants, "data": sd})
    modes = [{"index": m.index, "kappa_j": m.kappa_j, "parity": m.parity, "nodes": m.nodes}
             for m in discrete_spectrum(V)]
    return {"scattering.json": report("scattering", cfg, problem, {"thresholds": data, "discrete": modes})}


def _isolated_reports(cfg: RunConfig, problem: ProblemSpec) -> list[dict]:
    out = []
    for m in discrete_spectrum(problem.potential):
        base = {"index": m.index, "kappa_j": m.kappa_j}
        if abs(m.kappa_j + problem.kappa_star) < 1e-9:
            z = zero_mode_analysis(problem, m, cfg.order)
            out.append(dict(base, zero_case=True, gamma_moment=z.gamma_moment,
                            zero_multiplicity=z.zero_multiplicity,
                            Lambdas=None if z.extra is None else z.extra.Lambdas))
            continue
        for s in cfg.signs:
            ser = isolated_series(problem, m, s, cfg.order)
            out.append(dict(base, zero_case=False, sign=s, Lambdas=ser.Lambdas,
                            partial_sum=ser.partial_sum(problem.epsilon),
                            solvability_residuals=ser.solvability_residuals))
    return out


def _predictions(cfg: RunConfig, problem: ProblemSpec):
    preds = []
    for n in cfg.n:
        for s in cfg.signs:
            ctx = threshold_context(problem if s == 1 else problem.with_gamma(problem.gamma.negated()), n)
            for b in cfg.branches:
                preds.append(emergent_prediction(problem, n, s, b, cfg.variant, ctx))
    return preds


def cmd_predict(cfg: RunConfig, problem: ProblemSpec, jobs: int = 1) -> dict[str, str]:
    preds = _predictions(cfg, problem)
    body = {"emergent": [dict(p.to_json(), predicted=p.predict(problem.epsilon)) for p in preds],
            "isolated": _isolated_reports(cfg, problem)}
    return {"predict.json": report("predict", cfg, problem, body)}


def _verify_one(problem: ProblemSpec, p, ladder: list[float], tol: dict) -> dict:
    entry = {"prediction": p.to_json()}
    if p.exists == "yes":
        rad = lambda e: tol["search_radius_factor"] * e * abs(p.first_order)
        second = eigenvalue_defect_order(problem, lambda e: p.predict(e, 2), ladder, rad, seed=p.predict)
        errors_first = [abs(z - p.predict(e, 1)) for e, z in zip(ladder, second.oracle)]
        ok = not second.contradictions and second.order >= tol["order_min"]
        entry.update(verdict="confirmed" if ok else "refuted", order_first=fitted_order(ladder, errors_first),
                     order_second=second.order, oracle=second.oracle, errors_first=errors_first,
                     errors_second=second.errors, contradictions=second.contradictions)
    elif p.exists == "no":
        r0 = abs(perturbation_coeffs(problem.gamma, p.n, problem.kappa_star).rho0)
        certs = [certify_absence(problem.with_epsilon(e), p.predict(e), tol["absence_radius_factor"] * e * r0,
                                 tol["absence_min_fraction"]) for e in ladder]
        if all(c.winding == 0 for c in certs):
            verdict = "absence-confirmed"
        elif any(c.winding is None for c in certs):
            verdict = "inconclusive"
        else:
            verdict = "absence-refuted"
        entry.update(verdict=verdict, winding=[c.winding for c in certs],
                     radius=[c.radius for c in certs], continued=[c.continued for c in certs],
                     resonances=[list(c.resonances) for c in certs])
    else:
        entry.update(verdict="indeterminate")
    return entry


def cmd_verify(cfg: RunConfig, problem: ProblemSpec, jobs: int = 1) -> dict[str, str]:
    tol = cfg.resolved_tolerances()
    preds = _predictions(cfg, problem)
    ladder = sorted(cfg.epsilon_ladder, reverse=True)
    entries = _pmap(_verify_one, [(problem, p, ladder, tol) for p in preds], jobs)

    def draw(ax):
        for e in entries:
            if "oracle" in e:
                z = [complex(w) for w in e["oracle"]]
                ax.plot([w.real for w in z], [w.imag for w in z], "o-", ms=3,
                        label=f"n={e['prediction']['n']} {e['prediction']['branch']}")
        ax.set_xlabel("Re lambda")
        ax.set_ylabel("Im lambda")
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7)

    return {"verify.json": report("verify", cfg, problem, {"ladder": ladder, "results": entries}),
            "verify.svg": _svg(draw)}


def cmd_enclosure(cfg: RunConfig, problem: ProblemSpec, jobs: int = 1) -> dict[str, str]:
    tol = cfg.resolved_tolerances()
    modes = discrete_spectrum(problem.potential)
    kj = [m.kappa_j for m in modes]
    found = []
    for rep in _isolated_reports(cfg, problem):
        if rep["zero_case"]:
            found.append((problem.epsilon, 0j, "zero mode"))
            continue
        seed = rep["partial_sum"]
        r = max(10 * problem.epsilon ** 2, 1e-6)
        res = find_isolated_eigenvalue(problem, seed, r)
        if res.status == "isolated":
            found.append((problem.epsilon, res.lam, f"isolated j={rep['index']} sign={rep['sign']:+d}"))
    prev = Path(cfg.out) / "verify.json"
    if prev.exists():
        doc = json.loads(prev.read_text())
        for e in doc.get("results", []):
            for eps, z in zip(doc.get("ladder", []), e.get("oracle", [])):
                if z and z["re"] is not None:
                    found.append((eps, complex(z["re"], z["im"]), "emergent"))
    rows = []
    for eps, lam, src in found:
        chk = spectrum_enclosure_check(problem.with_epsilon(eps), lam, kj, tol["enclosure_slack"])
        rows.append({"epsilon": eps, "lambda": lam, "source": src, "status": "inside" if chk.inside else "outside",
                     "margin": chk.margin, "distance": chk.distance, "bound": chk.bound})
    return {"enclosure.json": report("enclosure", cfg, problem,
                                     {"discrete": kj, "sup_gamma": sup_gamma(problem.gamma), "results": rows,
                                      "all_inside": all(r["status"] == "inside" for r in rows)})}


HANDLERS = {"bands": cmd_bands, "coeffs": cmd_coeffs, "scattering": cmd_scattering,
            "predict": cmd_predict, "verify": cmd_verify, "enclosure": cmd_enclosure}


# --- entry point -----------------------------------------------------------------------

def _parse_override(items: list[str]) -> dict[str, float]:
    out = {}
    for it in items:
        if "=" not in it:
            raise ConfigError(f"--tol-override expects KEY=VAL, got {it!r}")
        k, v = it.split("=", 1)
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {k!r}")
        try:
            out[k] = float(v)
        except ValueError as exc:
            raise ConfigError(f"tolerance {k!r} needs a number") from exc
    return out


def _jobs(arg: int | None) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("PENCIL_SPECTRA_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError("PENCIL_SPECTRA_JOBS must be an integer") from exc
    return 1


def _write(out: Path, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out) as tmp:
        for name, text in files.items():
            (Path(tmp) / name).write_text(text)
        for name in files:
            shutil.move(str(Path(tmp) / name), str(out / name))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pencil-spectra", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="run config JSON")
    ap.add_argument("--out", help="output directory (overrides the config)")
    ap.add_argument("--jobs", type=int, help="worker processes (fallback: PENCIL_SPECTRA_JOBS)")
    ap.add_argument("--tol-override", action="append", default=[], metavar="KEY=VAL")
    ap.add_argument("--version", action="version", version=__version__)
    return ap


REFUSED = (ConfigError, SpecError, PreconditionError, WindowError, TruncationError, InBandError, ValueError)
NUMERIC = (IntegrationError, QuadratureError, ScatteringError, RuntimeError, FloatingPointError)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, problem = load_runconfig(args.config)
        if cfg.command is not None and cfg.command != args.command:
            raise ConfigError(f"config is for {cfg.command!r}, not {args.command!r}")
        cfg.tolerances.update(_parse_override(args.tol_override))
        if args.out:
            cfg.out = args.out
        files = HANDLERS[args.command](cfg, problem, _jobs(args.jobs))
    except NUMERIC as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except REFUSED as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    _write(Path(cfg.out), files)
    for name in sorted(files):
        print(Path(cfg.out) / name)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
