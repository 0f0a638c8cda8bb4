"""
Command-line front end.

Every data command writes CSV: one ``# {json}`` metadata line (with
``format_version``) followed by a header row and the samples.

Exit codes: 0 ok, 2 configuration error, 3 numerical error, 4 failed verification.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys as _sys
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    DensityKind,
    Regime,
    classify,
    flat_regions,
    landscape_V,
    limit_cycle_flux,
    limiting_density,
    quasi_potential,
    sup_construct,
    v_max,
)
from .attractors import barriers, build_graph, kramers_prefactor, revolution_defect
from .chain import (
    build_chain,
    chain_exponents,
    equilibrium_test,
    lambda_surgery_lifts,
    paste_global,
    single_well_asymptotics,
)
from .exact_stationary import solve_stationary
from .model import ConfigError, LandscapeError, system_from_dict, tilted_potential
from .simulate import SimConfig, SimulationError, first_passage, run_ensemble
from .systems import EXAMPLES

FORMAT_VERSION = 1
EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 2, 3, 4


def _floats(text: str) -> list[float]:
    text = text.strip()
    return [float(t) for t in text.split(",")] if text else []


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, float) and not math.isfinite(o):
        return None
    raise TypeError(type(o))


def _clean(o):
    """Replace non-finite floats by None so the header stays valid JSON."""
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, np.ndarray):
        return _clean(o.tolist())
    if isinstance(o, (float, np.floating)):
        return float(o) if math.isfinite(o) else None
    if isinstance(o, np.integer):
        return int(o)
    return o


def write_csv(out, meta: dict, columns: dict):
    meta = {"format_version": FORMAT_VERSION, **meta}
    out.write("# " + json.dumps(_clean(meta), default=_json_default) + "\n")
    names = list(columns)
    w = csv.writer(out, lineterminator="\n")
    w.writerow(names)
    cols = [np.asarray(columns[n]) for n in names]
    for row in zip(*cols):
        w.writerow([f"{v:.12g}" if isinstance(v, (float, np.floating)) else v for v in row])


def read_csv(path) -> tuple[dict, dict]:
    """Inverse of ``write_csv``: (metadata, {column: array}).

    Numeric columns come back as floats, the rest as strings.
    """
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing metadata line")
        meta = json.loads(first[2:])
        rows = list(csv.reader(fh))
    names = rows[0]
    raw = np.array(rows[1:], dtype=str).reshape(-1, len(names))
    cols = {}
    for k, n in enumerate(names):
        try:
            cols[n] = raw[:, k].astype(float)
        except ValueError:
            cols[n] = raw[:, k]
    return meta, cols


# ---------------------------------------------------------------------------
# system assembly
# ---------------------------------------------------------------------------


def _system(args, need_epsilon: bool = False):
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise ConfigError("config", f"cannot read {args.config}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"invalid JSON: {e.msg} (line {e.lineno})") from None
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
    else:
        data = {}
    for key in ("f", "epsilon"):
        if getattr(args, key, None) is not None:
            data[key] = getattr(args, key)
    for key in ("cos", "sin"):
        raw = getattr(args, key, None)
        if raw is not None:
            try:
                data[key] = _floats(raw)
            except ValueError:
                raise ConfigError(key, f"expected comma-separated numbers, got {raw!r}") from None
    if "cos" not in data and "sin" not in data:
        base = EXAMPLES[args.example](0.0).potential
        data["cos"], data["sin"] = list(base.cosine_coeffs), list(base.sine_coeffs)
    if "f" not in data:
        raise ConfigError("f", "required (use --f or a config file)")
    sys = system_from_dict(data)
    if need_epsilon and sys.epsilon is None:
        raise ConfigError("epsilon", "required for this command")
    return sys


def _meta(cmd: str, sys) -> dict:
    return {"command": cmd, "version": __version__, "system": sys.to_dict()}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_solve(args, out):
    sys = _system(args, need_epsilon=True)
    sol = solve_stationary(sys, args.grid)
    meta = _meta("solve", sys) | {"J": sol.flux, "log_normalizer": sol.log_normalizer}
    write_csv(out, meta, {"theta": sol.grid, "u": sol.density.values, "log_u": sol.log_density.values})


def cmd_landscape(args, out):
    sys = _system(args)
    n = args.grid or 4096
    cls = classify(sys, n)
    v = landscape_V(sys, n)
    us = sup_construct(sys, n)
    meta = _meta("landscape", sys) | {
        "regime": cls.regime.value,
        "nu": cls.nu,
        "degenerate": cls.degenerate,
        "v_max": v_max(sys),
        "kinks": v.kinks,
        "flat_regions": flat_regions(v),
    }
    if not cls.degenerate:
        lim = limiting_density(sys, n)
        if lim.kind is DensityKind.DELTA:
            meta["delta_locations"] = list(lim.delta_locations)
        else:
            meta["rotation_number"] = limit_cycle_flux(sys, n)
    write_csv(out, meta, {
        "theta": v.grid,
        "tilted": tilted_potential(sys, v.grid),
        "ustar": us.values,
        "V": v.values,
        "rate_function": quasi_potential(sys, n).values,
    })


def cmd_rates(args, out):
    sys = _system(args)
    g = build_graph(sys)
    bs = barriers(g)
    eps = sys.epsilon
    pref = [kramers_prefactor(g, b) for b in bs]
    log_rate = [
        (math.log(p) if p else 0.0) - b.height / eps if eps else math.nan for b, p in zip(bs, pref)
    ]
    meta = _meta("rates", sys) | {
        "attractors": g.theta,
        "saddles": [s.theta for s in g.saddles],
        "revolution_defect": revolution_defect(g),
    }
    write_csv(out, meta, {
        "source": [b.source for b in bs],
        "target": [b.target for b in bs],
        "direction": [b.direction for b in bs],
        "barrier": [b.height for b in bs],
        "saddle": [b.saddle for b in bs],
        "prefactor": [math.nan if p is None else p for p in pref],
        "log_rate": log_rate,
    })


def cmd_chain(args, out):
    sys = _system(args, need_epsilon=True)
    g = build_graph(sys)
    chain = build_chain(g, sys.epsilon, with_prefactor=args.prefactor)
    asym = chain_exponents(chain)
    eq = equilibrium_test(chain)
    lifts = lambda_surgery_lifts(asym, chain)
    meta = _meta("chain", sys) | {
        "equilibrium": eq.equilibrium,
        "defect": eq.defect,
        "lifts": [{"source": l.source, "target": l.target, "delta_mu": l.delta_mu} for l in lifts],
    }
    write_csv(out, meta, {"state": np.arange(g.n), "theta": g.theta, "W": asym.W,
                          "pi": asym.pi, "log_pi": asym.log_pi})


def cmd_paste(args, out):
    sys = _system(args)
    g = build_graph(sys)
    n = args.grid or 4096
    if g.n == 1:
        chain, asym = None, single_well_asymptotics()
    else:
        chain = build_chain(g, sys.epsilon or 1e-3)
        asym = chain_exponents(chain)
    gl = paste_global(g, asym, n, chain=chain)
    eq = equilibrium_test(chain) if chain is not None else None
    meta = _meta("paste", sys) | {
        "W_attractors": asym.W,
        "equilibrium": eq.equilibrium if eq else sys.f == 0,
        "defect": eq.defect if eq else -sys.f,
        "kinks": gl.W.kinks,
        "plateau_kinks": gl.plateau_kinks,
        "naive_jump": gl.naive_jump,
        "lifts": [l.delta_mu for l in gl.lifts],
        "lift_epsilon": (sys.epsilon or 1e-3) if chain is not None else None,
    }
    write_csv(out, meta, {"theta": gl.W.grid, "W": gl.W.values, "branch": gl.branch,
                          "naive": gl.naive.values})
    if args.svg:
        if chain is None:
            raise ConfigError("svg", "the four-panel figure needs at least two attractors")
        from .figures import fig3

        svg, _ = fig3(sys, sys.epsilon or 1e-3, min(n, 2048))
        Path(args.svg).write_text(svg)


def cmd_simulate(args, out):
    sys = _system(args, need_epsilon=True)
    try:
        cfg = SimConfig(horizon=args.horizon, n_paths=args.paths, seed=args.seed, dt=args.dt,
                        burn_in=args.burn_in, n_bins=args.bins, force=args.force)
    except SimulationError as e:
        raise ConfigError("simulate", str(e)) from None
    st = run_ensemble(sys, cfg)
    meta = _meta("simulate", sys) | {
        "flux": st.flux, "flux_stderr": st.flux_stderr, "dt": st.dt,
        "n_paths": cfg.n_paths, "seed": cfg.seed, "observed_time": st.observed_time,
    }
    if args.passage:
        g = build_graph(sys)
        a = g.attractors[0].theta
        fp = first_passage(sys, cfg, a, g.saddle_cw[0], g.saddle_ccw[0])
        meta["mfpt"] = {"target": float(g.saddle_cw[0] % 1.0), "mean": fp.mean, "stderr": fp.stderr,
                        "cv": fp.cv, "hits": int(fp.times.size), "other_side": int(fp.lower_times.size),
                        "censored": fp.censored}
    centers = 0.5 * (st.bin_edges[1:] + st.bin_edges[:-1])
    write_csv(out, meta, {"theta": centers, "probability": st.histogram})


def cmd_verify(args, out):
    from .verify import run_suite

    results = run_suite(quick=args.quick)
    for r in results:
        out.write(json.dumps(_clean(r.to_dict()), default=_json_default) + "\n")
    failed = [r.name for r in results if not r.passed]
    out.write(json.dumps({"summary": {"passed": len(results) - len(failed), "failed": failed}}) + "\n")
    return EXIT_VERIFY if failed else 0


def _range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise ConfigError("f-range", f"expected LO:HI, got {text!r}") from None
    if not hi > lo:
        raise ConfigError("f-range", "HI must exceed LO")
    return lo, hi


def cmd_sweep(args, out):
    if args.f_range:
        lo, hi = _range(args.f_range)
        if args.f is None:
            args.f = lo
        base = _system(args, need_epsilon=True)
        fs = np.linspace(lo, hi, args.points)
        exact, limit = [], []
        for f in fs:
            s = base.with_f(float(f))
            exact.append(solve_stationary(s, args.grid).flux)
            cls = classify(s, 256)
            ok = cls.regime is Regime.LIMIT_CYCLE and not cls.degenerate
            limit.append(limit_cycle_flux(s) if ok else 0.0)
        meta = _meta("sweep", base) | {"kind": "flux"}
        write_csv(out, meta, {"f": fs, "flux": exact, "flux_limit": limit})
        return 0
    if not args.eps_list:
        raise ConfigError("sweep", "give --f-range or --eps-list")
    from .verify import epsilon_sweep

    base = _system(args)
    try:
        eps = _floats(args.eps_list)
    except ValueError:
        raise ConfigError("eps-list", "expected comma-separated numbers") from None
    try:
        table = epsilon_sweep(base, eps, args.grid)
    except ValueError as e:
        if isinstance(e, LandscapeError):
            raise
        raise ConfigError("eps-list", str(e)) from None
    meta = _meta("sweep", base) | {"kind": "epsilon", "regime": table.regime.value,
                                   "shape_monotone": table.shape_monotone,
                                   "density_monotone": table.density_monotone}
    write_csv(out, meta, {name: table.column(name)
                          for name in ("epsilon", "shape_error", "offset", "density_error", "flux")})
    return 0


def cmd_figures(args, out):
    from . import figures

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    which = ["fig1", "fig2", "fig3"] if args.which == "all" else [args.which]
    for name in which:
        svg, data = getattr(figures, name)()
        (outdir / f"{name}.svg").write_text(svg)
        with open(outdir / f"{name}.csv", "w") as fh:
            write_csv(fh, {"command": "figures", "figure": name, "version": __version__}, data)
        out.write(f"{outdir / name}.svg\n")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _system_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("system")
    g.add_argument("--config", help="JSON file with keys cos, sin, f, epsilon")
    g.add_argument("--f", type=float, help="constant drive f")
    g.add_argument("--epsilon", type=float, help="noise strength")
    g.add_argument("--cos", help="cosine coefficients a_1,a_2,... of U")
    g.add_argument("--sin", help="sine coefficients b_1,b_2,... of U")
    g.add_argument("--example", choices=sorted(EXAMPLES), default="single_well",
                   help="potential used when no coefficients are given (default: single_well)")
    g.add_argument("--grid", type=int, help="grid size")
    p.add_argument("-o", "--output", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="circlescape", description=__doc__.strip().splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, system=True):
        p = sub.add_parser(name, help=help_text)
        if system:
            _system_flags(p)
        else:
            p.add_argument("-o", "--output", help="output file (default: stdout)")
        p.set_defaults(func=fn)
        return p

    add("solve", cmd_solve, "exact stationary density and flux")
    add("landscape", cmd_landscape, "U*, V and the small-noise limit")
    add("rates", cmd_rates, "barriers and Kramers rates between attractors")
    p = add("chain", cmd_chain, "reduced Markov chain: pi, W, equilibrium test")
    p.add_argument("--prefactor", action="store_true", help="include Kramers prefactors")
    p = add("paste", cmd_paste, "global landscape by lambda-surgery and pasting")
    p.add_argument("--svg", help="also write the four-panel pasting figure here")
    p = add("simulate", cmd_simulate, "Euler-Maruyama ensemble")
    p.add_argument("--dt", type=float)
    p.add_argument("--horizon", type=float, default=100.0)
    p.add_argument("--paths", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=float, default=0.0)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--force", action="store_true", help="run even if dt exceeds the safeguard")
    p.add_argument("--passage", action="store_true", help="also measure escape times from attractor 0")
    p = add("verify", cmd_verify, "run the consistency suite (exit 4 on failure)", system=False)
    p.add_argument("--quick", action="store_true", help="shorter noise sweeps")
    p = add("sweep", cmd_sweep, "flux over a range of f, or errors over a list of eps")
    p.add_argument("--f-range", help="LO:HI")
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--eps-list", help="decreasing comma-separated eps values")
    p = add("figures", cmd_figures, "write the landscape figures as SVG (+ CSV data)", system=False)
    p.add_argument("which", nargs="?", default="all", choices=["fig1", "fig2", "fig3", "all"])
    p.add_argument("--outdir", default="figures")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = open(args.output, "w") if getattr(args, "output", None) else _sys.stdout
    try:
        code = args.func(args, out) or 0
        out.flush()
        return code
    except (ConfigError, SimulationError) as e:
        print(f"config error: {e}", file=_sys.stderr)
        return EXIT_CONFIG
    except LandscapeError as e:
        print(f"numerical error ({type(e).__module__.rsplit('.', 1)[-1]}.{type(e).__name__}): {e}",
              file=_sys.stderr)
        return EXIT_NUMERIC
    except ArithmeticError as e:
        print(f"numerical error: {e}", file=_sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        import os

        os.dup2(os.open(os.devnull, os.O_WRONLY), _sys.stdout.fileno())
        return 0
    finally:
        if out is not _sys.stdout:
            out.close()


if __name__ == "__main__":
    _sys.exit(main())
