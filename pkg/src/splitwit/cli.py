"""Command-line front end.

    splitwit state --n 500 --target-db -10
    splitwit witness S --n 500 --chi-t 0.0058 --sigma-p-deg 2
    splitwit reproduce fig5 --out fig5.csv --jobs 4

Every command writes CSV (stdout unless ``--out``) headed by ``#`` lines
echoing the full configuration. ``reproduce`` also writes an SVG next to
the CSV. Options may come from a ``key = value`` file given by
``--config``; flags override the file.

Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import binomial_weights, bound_binomial, partition_bounds
from .dicke import chi_t_for_db, squeezed_frame_state, xi2_closed_form, xi2_numeric
from .errors import DegenerateState, InsufficientMoments, InvalidArgument, InvalidSpec
from .noise import NoiseConfig, VARIANCE_MODELS, required_runs, s_threshold, witness_under_noise
from .specs import WitnessSpec, named_spec
from .witness import robustness, search_optimal

DEFAULT_CHI_T = 0.0058      # -10 dB at N = 500
REFERENCE_N = 500           # dB labels of the figure sweeps refer to this atom number

# key -> (type, default); shared by flags and the config file
OPTIONS = {
    "n": (int, 500),
    "chi_t": (float, None),
    "target_db": (float, None),
    "p_white": (float, 1.0),
    "sigma_p_deg": (float, 0.0),
    "sigma_c": (float, 0.0),
    "backend": (str, "auto"),
    "restarts": (int, None),
    "seed": (int, 0),
    "jobs": (int, 1),
    "out": (str, None),
    "tail_eps": (float, 1e-12),
    "k_sigma": (float, 3.0),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser, sweep: bool = False) -> None:
    g = parser.add_argument_group("configuration")
    g.add_argument("--config", help="key = value file; flags override it")
    g.add_argument("--n", type=int, help="total atom number N (default 500)")
    nargs = "+" if sweep else None
    g.add_argument("--chi-t", type=float, nargs=nargs, help="one-axis twisting strength")
    g.add_argument("--target-db", type=float, nargs=nargs,
                   help="squeezing target 10 log10(xi^2) in dB, converted to chi t")
    g.add_argument("--p-white", type=float, help="white-noise survival probability p (default 1)")
    g.add_argument("--sigma-p-deg", type=float, help="phase-noise std per site in degrees")
    g.add_argument("--sigma-c", type=float, help="atom-counting noise std in atoms")
    g.add_argument("--backend", choices=["oracle", "moment-map", "auto"])
    g.add_argument("--restarts", type=int, help="optimizer restarts")
    g.add_argument("--seed", type=int)
    g.add_argument("--jobs", type=int, help="worker processes for sweeps")
    g.add_argument("--out", help="output CSV path (default stdout)")
    g.add_argument("--tail-eps", type=float, help="skip atom partitions of weight below this")
    g.add_argument("--k-sigma", type=float, help="standard deviations required by stats")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="splitwit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"splitwit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="squeezing report of one-axis-twisted states")
    _common(p, sweep=True)

    p = sub.add_parser("witness", help="witness value and separable threshold under noise")
    p.add_argument("spec", help="S, D or a file with 15/21 coefficients")
    _common(p)

    p = sub.add_parser("bound", help="separable bound per atom partition")
    p.add_argument("spec", help="S, D or a file with 15/21 coefficients")
    _common(p)

    p = sub.add_parser("optimize", help="search the witness most robust to white noise")
    p.add_argument("--order", type=int, choices=[1, 2], default=2)
    p.add_argument("--symmetric", action="store_true", help="party-exchange-symmetric specs only")
    p.add_argument("--spec-out", help="where to write the best spec (default <out>.spec)")
    _common(p)

    p = sub.add_parser("stats", help="estimator variances and required runs")
    p.add_argument("spec", choices=["S", "D", "s", "d"])
    p.add_argument("--variance-model", choices=VARIANCE_MODELS, default="state",
                   help="'state': quantum variances of the noisy state (counting noise only "
                        "shifts the mean); 'readings': counting noise added to the variances")
    _common(p)

    p = sub.add_parser("reproduce", help="regenerate a figure sweep")
    p.add_argument("figure", choices=["fig3", "fig4", "fig5", "fig6"])
    p.add_argument("--n-grid", help="comma-separated atom numbers (fig3, fig4)")
    p.add_argument("--db-grid", help="comma-separated squeezing values in dB (fig3, fig6)")
    p.add_argument("--sigma-grid", help="comma-separated phase-noise values in degrees (fig5)")
    p.add_argument("--search", action="store_true",
                   help="fig3: add the p_star of an order-1 witness search at each point")
    p.add_argument("--no-plot", action="store_true", help="skip the SVG")
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def read_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        kind = OPTIONS[key][0]
        try:
            out[key] = [kind(v) for v in value.replace(",", " ").split()] \
                if key in ("chi_t", "target_db") else kind(value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def resolve_config(args) -> dict:
    cfg = {key: default for key, (_, default) in OPTIONS.items()}
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in OPTIONS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key in ("chi_t", "target_db"):
        val = cfg[key]
        if val is not None and not isinstance(val, list):
            cfg[key] = [val]
    if cfg["chi_t"] is not None and cfg["target_db"] is not None:
        raise UsageError("give either chi_t or target_db, not both")
    if cfg["n"] < 1:
        raise UsageError("n must be >= 1")
    if cfg["jobs"] < 1:
        raise UsageError("jobs must be >= 1")
    if cfg["restarts"] is not None and cfg["restarts"] < 1:
        raise UsageError("restarts must be >= 1")
    if cfg["backend"] not in ("oracle", "moment-map", "auto"):
        raise UsageError(f"unknown backend {cfg['backend']!r}")
    if cfg["backend"] == "oracle" and cfg["n"] > 30:
        raise UsageError("the oracle backend needs n <= 30")
    noise_config(cfg)   # validates ranges
    return cfg


def chi_t_values(cfg, n=None) -> list[float]:
    n = cfg["n"] if n is None else n
    if cfg["chi_t"] is not None:
        return list(cfg["chi_t"])
    if cfg["target_db"] is not None:
        return [chi_t_for_db(n, db) for db in cfg["target_db"]]
    return [DEFAULT_CHI_T]


def noise_config(cfg) -> NoiseConfig:
    return NoiseConfig(cfg["p_white"], math.radians(cfg["sigma_p_deg"]), cfg["sigma_c"])


def load_spec(text: str) -> WitnessSpec:
    if text.upper() in ("S", "D"):
        return named_spec(text)
    try:
        return WitnessSpec.from_text(Path(text).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read spec file: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, InvalidSpec):
            raise
        raise InvalidSpec(f"spec file {text}: {exc}") from None


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v) + 0.0   # no "-0"
        if math.isnan(v):
            return "nan"
        return f"{v:.12g}"
    return str(v)


def render_csv(command: str, cfg: dict, columns: list[tuple[str, str]], rows,
               notes=()) -> str:
    """CSV text with ``#`` metadata lines; ``columns`` holds (name, description)."""
    buf = io.StringIO()
    buf.write(f"# splitwit {__version__}\n# command: {command}\n")
    for key in sorted(cfg):
        val = cfg[key]
        if isinstance(val, list):
            val = " ".join(fmt(v) for v in val)
        buf.write(f"# config.{key} = {fmt(val)}\n")
    for name, desc in columns:
        buf.write(f"# column {name}: {desc}\n")
    for note in notes:
        buf.write(f"# {note}\n")
    buf.write(",".join(name for name, _ in columns) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def emit(text: str, cfg: dict) -> None:
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)


def _map(func, tasks, jobs: int):
    """Ordered map, in worker processes when ``jobs > 1``."""
    tasks = list(tasks)
    if jobs <= 1 or len(tasks) <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(func, tasks))


def _grid(text, kind, default):
    if text is None:
        return list(default), False
    try:
        vals = [kind(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None
    if not vals:
        raise UsageError("empty grid")
    return vals, True


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _state_row(task):
    n, chi_t = task
    rep = xi2_numeric(squeezed_frame_state(n, chi_t))
    closed = xi2_closed_form(n, chi_t) if n >= 2 else float("nan")
    return [n, chi_t, rep.xi2, rep.xi2_db, closed, math.degrees(rep.squeezing_angle),
            *rep.mean_spin]


def cmd_state(args, cfg) -> str:
    n = cfg["n"]
    rows = _map(_state_row, [(n, c) for c in chi_t_values(cfg)], cfg["jobs"])
    cols = [("n_atoms", "total atom number"), ("chi_t", "one-axis twisting strength [rad]"),
            ("xi2", "Wineland parameter from the state"), ("xi2_db", "10 log10(xi2) [dB]"),
            ("xi2_closed_form", "closed-form Wineland parameter (N >= 2)"),
            ("squeezing_angle_deg", "rotation about the mean spin to the squeezed axis [deg]"),
            ("mean_x", "<Jx> after rotation to the squeezed frame"),
            ("mean_y", "<Jy>"), ("mean_z", "<Jz>")]
    return render_csv("state", cfg, cols, rows)


def _witness_rows(spec_text, cfg):
    rows = []
    for chi_t in chi_t_values(cfg):
        state = squeezed_frame_state(cfg["n"], chi_t)
        spec = spec_text.upper() if spec_text.upper() in ("S", "D") else load_spec(spec_text)
        ev = witness_under_noise(spec, state, noise_config(cfg), cfg["backend"],
                                 restarts=cfg["restarts"] or 64, seed=cfg["seed"],
                                 tail_eps=cfg["tail_eps"])
        rows.append([ev.name, cfg["n"], chi_t, ev.value, ev.threshold, ev.violated, ev.gap])
    return rows


def cmd_witness(args, cfg) -> str:
    rows = _witness_rows(args.spec, cfg)
    cols = [("witness", "S, D or custom"), ("n_atoms", "total atom number"),
            ("chi_t", "one-axis twisting strength [rad]"),
            ("value", "witness value on the noisy split state (squeezed frame)"),
            ("threshold", "separable threshold (S: N(N-1)/16, D: 0, custom: binomial bound)"),
            ("violated", "value beyond threshold (S, custom: above; D: below)"),
            ("gap", "|value - threshold|")]
    notes = ["D is evaluated on counting-noise-affected data; its threshold stays 0, "
             "equivalent to requiring D < -2 sigma_c^2 for the noiseless value"]
    return render_csv("witness", cfg, cols, rows, notes)


def cmd_bound(args, cfg) -> str:
    spec = load_spec(args.spec)
    n = cfg["n"]
    restarts = cfg["restarts"] or 64
    parts = partition_bounds(spec, n, cfg["tail_eps"], restarts, cfg["seed"])
    weights = binomial_weights(n, cfg["tail_eps"])
    total = bound_binomial(spec, n, cfg["tail_eps"], restarts, cfg["seed"])
    rows = []
    for k in sorted(parts):
        b = parts[k]
        sa = b.s_a if b.s_a is not None else [None] * 3
        sb = b.s_b if b.s_b is not None else [None] * 3
        rows.append([b.n_a, b.n_b, weights[k], b.value, *b.u_a, *b.u_b, *sa, *sb])
    cols = [("n_a", "atoms at A"), ("n_b", "atoms at B"), ("weight", "binomial weight"),
            ("value", "partition bound")]
    cols += [(f"u_a_{c}", "maximizer <J^A>") for c in "xyz"]
    cols += [(f"u_b_{c}", "maximizer <J^B>") for c in "xyz"]
    cols += [(f"s_a_{c}", "maximizer <(J^A)^2>, order 2") for c in "xyz"]
    cols += [(f"s_b_{c}", "maximizer <(J^B)^2>, order 2") for c in "xyz"]
    return render_csv("bound", cfg, cols, rows, [f"binomial_bound = {fmt(total)}"])


def cmd_optimize(args, cfg) -> str:
    chi_t = chi_t_values(cfg)[0]
    state = squeezed_frame_state(cfg["n"], chi_t)
    res = search_optimal(state, args.order, args.symmetric, cfg["restarts"] or 200,
                         cfg["seed"], cfg["backend"], cfg["tail_eps"])
    spec_out = args.spec_out or (str(Path(cfg["out"]).with_suffix(".spec")) if cfg["out"] else None)
    if spec_out:
        Path(spec_out).write_text(
            f"# order {res.spec.order} witness, p_star {fmt(res.p_star)}\n" + res.spec.to_text())
    cols = [("n_atoms", "total atom number"), ("chi_t", "one-axis twisting strength [rad]"),
            ("order", "witness order"), ("symmetric", "party-exchange-symmetric search"),
            ("p_star", "minimal white-noise survival probability still detected"),
            ("detected", "spec violates its bound on the noiseless state"),
            ("witness_value_opt", "witness maximized over local rotations"),
            ("bound", "binomial separable bound"), ("noise_value", "witness on local white noise")]
    cols += [(f"euler_{s}_{i}", "ZYZ rotation angle [rad]") for s in "ab" for i in range(3)]
    cols += [(f"alpha_{i}", "unit-norm spec coefficient") for i in range(res.spec.to_vector().size)]
    row = [cfg["n"], chi_t, args.order, args.symmetric, res.p_star, res.detected,
           res.witness_value_opt, res.bound, res.noise_value, *res.rotation.ravel(),
           *res.spec.to_vector()]
    notes = [f"spec_file = {spec_out}"] if spec_out else []
    return render_csv("optimize", {**cfg, "order": args.order, "symmetric": args.symmetric},
                      cols, [row], notes)


def cmd_stats(args, cfg) -> str:
    rows = []
    for chi_t in chi_t_values(cfg):
        state = squeezed_frame_state(cfg["n"], chi_t)
        rep = required_runs(args.spec, state, noise_config(cfg), cfg["backend"],
                            cfg["k_sigma"], args.variance_model)
        v = rep.variances
        rows.append([rep.witness, cfg["n"], chi_t, rep.witness_value, rep.separable_threshold,
                     v["X"], v["Y"], v["Z"], rep.required_runs, rep.k_sigma])
    cols = [("witness", "S or D"), ("n_atoms", "total atom number"),
            ("chi_t", "one-axis twisting strength [rad]"), ("value", "witness value"),
            ("threshold", "separable threshold"), ("var_x", "single-run variance, X setting"),
            ("var_y", "single-run variance, Y setting"), ("var_z", "single-run variance, Z setting"),
            ("required_runs", "runs per setting for a k_sigma separation (empty: no violation)"),
            ("k_sigma", "required separation in standard deviations")]
    return render_csv("stats", {**cfg, "variance_model": args.variance_model}, cols, rows)


# reproduce -----------------------------------------------------------------

def _robustness_point(task):
    n, chi_t, names, backend, restarts, seed, tail_eps, search = task
    state = squeezed_frame_state(n, chi_t)
    out = []
    for name in names:
        r = robustness(named_spec(name), state, backend, seed=seed, tail_eps=tail_eps)
        out += [r.p_star, r.detected]
    if search:
        out.append(search_optimal(state, 1, False, restarts, seed, backend, tail_eps).p_star)
    return out


def _noise_point(task):
    n, chi_t, noise, backend = task
    state = squeezed_frame_state(n, chi_t)
    s = witness_under_noise("S", state, noise, backend)
    d = witness_under_noise("D", state, noise, backend)
    return [s.value, s.threshold, s.value - s.threshold, d.value]


def _runs_point(task):
    n, chi_t, noise, backend, k_sigma = task
    state = squeezed_frame_state(n, chi_t)
    s = required_runs("S", state, noise, backend, k_sigma)
    d = required_runs("D", state, noise, backend, k_sigma)
    return [s.witness_value, d.witness_value, s.required_runs, d.required_runs]


def first_crossing(x, y):
    """x where ``y`` first changes sign (linear interpolation), else None."""
    for i in range(len(x) - 1):
        if y[i] == 0:
            return x[i]
        if y[i] * y[i + 1] < 0:
            return x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
    return None


def _svg_path(cfg, args):
    if args.no_plot or not cfg["out"]:
        return None
    return Path(cfg["out"]).with_suffix(".svg")


def reproduce_fig3(args, cfg):
    ns, over_n = _grid(args.n_grid, int, range(5, 61, 5))
    dbs, over_db = _grid(args.db_grid, float, [-1.0, -5.0, -10.0])
    restarts = cfg["restarts"] or 24
    tasks = [(n, chi_t_for_db(REFERENCE_N, db), ("S",), cfg["backend"], restarts, cfg["seed"],
              cfg["tail_eps"], args.search) for db in dbs for n in ns]
    res = _map(_robustness_point, tasks, cfg["jobs"])
    labels = [db for db in dbs for _ in ns]
    rows = [[db, t[1], t[0], r[0], r[1]] + ([r[2]] if args.search else [])
            for db, t, r in zip(labels, tasks, res)]
    cols = [("xi2_db_ref", f"squeezing label: dB at N = {REFERENCE_N} for this chi t"),
            ("chi_t", "one-axis twisting strength [rad]"), ("n_atoms", "total atom number"),
            ("p_star_s", "minimal survival probability detected by S"),
            ("detected_s", "S detects the noiseless state")]
    if args.search:
        cols.append(("p_star_search", "best order-1 witness found by search_optimal"))
    series = {f"S, {fmt(db)} dB": [r[3] for r in rows if r[0] == db] for db in dbs}
    svg = _svg_path(cfg, args)
    if svg:
        from .plotting import line_plot
        line_plot(svg, ns, series, "N", "p*", "white-noise robustness of S")
    notes = [f"desk_scale_override = {fmt(over_n or over_db)}", "smaller p_star tolerates more noise"]
    return render_csv("reproduce fig3", cfg, cols, rows, notes)


def reproduce_fig4(args, cfg):
    ns, over = _grid(args.n_grid, int, range(5, 61, 5))
    chi_t = chi_t_values(cfg, REFERENCE_N)[0]
    tasks = [(n, chi_t, ("S", "D"), cfg["backend"], 1, cfg["seed"], cfg["tail_eps"], False)
             for n in ns]
    res = _map(_robustness_point, tasks, cfg["jobs"])
    rows = [[n, chi_t, *r] for n, r in zip(ns, res)]
    cols = [("n_atoms", "total atom number"), ("chi_t", "one-axis twisting strength [rad]"),
            ("p_star_s", "minimal survival probability detected by S"),
            ("detected_s", "S detects the noiseless state"),
            ("p_star_d", "minimal survival probability detected by D"),
            ("detected_d", "D detects the noiseless state")]
    d_better = [r[4] < r[2] for r in rows]
    cross = next((ns[i] for i in range(len(ns)) if all(d_better[i:])), None)
    svg = _svg_path(cfg, args)
    if svg:
        from .plotting import line_plot
        line_plot(svg, ns, {"S": [r[2] for r in rows], "D": [r[4] for r in rows]},
                  "N", "p*", "white-noise robustness, S vs D")
    notes = [f"desk_scale_override = {fmt(over)}",
             f"d_more_tolerant_from_n = {fmt(cross)}",
             "white-noise square moments use N(N+5)/48 per component"]
    return render_csv("reproduce fig4", cfg, cols, rows, notes)


def reproduce_fig5(args, cfg):
    sigmas, over = _grid(args.sigma_grid, float, [round(0.1 * i, 1) for i in range(51)])
    chi_t = chi_t_values(cfg)[0]
    n = cfg["n"]
    tasks = [(n, chi_t, NoiseConfig(cfg["p_white"], math.radians(s), cfg["sigma_c"]),
              cfg["backend"]) for s in sigmas]
    res = _map(_noise_point, tasks, cfg["jobs"])
    rows = [[s, *r] for s, r in zip(sigmas, res)]
    cols = [("sigma_p_deg", "phase-noise std per site [deg]"), ("s_value", "S"),
            ("s_threshold", "N(N-1)/16"), ("s_violation", "S - N(N-1)/16 (> 0 detects)"),
            ("d_value", "D (< 0 detects)")]
    s_zero = first_crossing(sigmas, [r[3] for r in rows])
    d_zero = first_crossing(sigmas, [r[4] for r in rows])
    svg = _svg_path(cfg, args)
    if svg:
        from .plotting import line_plot
        line_plot(svg, sigmas, {"S - N(N-1)/16": [r[3] for r in rows], "D": [r[4] for r in rows]},
                  "sigma_p [deg]", "violation", "phase noise", hline=0.0)
    notes = [f"desk_scale_override = {fmt(over)}",
             f"s_violation_vanishes_at_deg = {fmt(s_zero)}",
             f"d_violation_vanishes_at_deg = {fmt(d_zero)}",
             f"s_threshold_note = N(N-1)/16 is the separable bound; an N(N+1)/16 offset "
             f"would lower s_violation by N/8 = {fmt(n / 8)}"]
    return render_csv("reproduce fig5", cfg, cols, rows, notes)


def reproduce_fig6(args, cfg):
    dbs, over = _grid(args.db_grid, float, [round(-10 + 0.25 * i, 2) for i in range(37)])
    n = cfg["n"]
    noise = NoiseConfig(cfg["p_white"], math.radians(cfg["sigma_p_deg"]), cfg["sigma_c"])
    tasks = [(n, chi_t_for_db(n, db), noise, cfg["backend"], cfg["k_sigma"]) for db in dbs]
    res = _map(_runs_point, tasks, cfg["jobs"])
    rows = [[db, t[1], *r] for db, t, r in zip(dbs, tasks, res)]
    cols = [("xi2_db", "initial squeezing [dB]"), ("chi_t", "one-axis twisting strength [rad]"),
            ("s_value", "S under noise"), ("d_value", "D under noise"),
            ("runs_s", "runs per setting for S (empty: no violation)"),
            ("runs_d", "runs per setting for D (empty: no violation)")]
    diff = [math.log(r[4]) - math.log(r[5]) if r[4] and r[5] else float("nan") for r in rows]
    ok = [i for i, v in enumerate(diff) if not math.isnan(v)]
    cross = first_crossing([dbs[i] for i in ok], [diff[i] for i in ok]) if ok else None
    svg = _svg_path(cfg, args)
    if svg:
        from .plotting import line_plot
        nan = float("nan")
        line_plot(svg, dbs, {"S": [r[4] or nan for r in rows], "D": [r[5] or nan for r in rows]},
                  "initial squeezing [dB]", "runs per setting", "required runs", logy=True)
    notes = [f"desk_scale_override = {fmt(over)}",
             f"run_count_crossover_db = {fmt(cross)}",
             "variance_model = state: phase noise enters values and variances; counting noise "
             "enters the witness values only"]
    return render_csv("reproduce fig6", cfg, cols, rows, notes)


FIGURE_DEFAULTS = {
    "fig3": {},
    "fig4": {},
    "fig5": {"target_db": [-10.0]},
    "fig6": {"sigma_p_deg": 1.0, "sigma_c": 5.0},
}


def cmd_reproduce(args, cfg) -> str:
    # figure defaults apply only where neither file nor flag set a value
    for key, val in FIGURE_DEFAULTS[args.figure].items():
        if cfg[key] == OPTIONS[key][1] and not (key == "target_db" and cfg["chi_t"]):
            cfg[key] = val
    return {"fig3": reproduce_fig3, "fig4": reproduce_fig4,
            "fig5": reproduce_fig5, "fig6": reproduce_fig6}[args.figure](args, cfg)


COMMANDS = {"state": cmd_state, "witness": cmd_witness, "bound": cmd_bound,
            "optimize": cmd_optimize, "stats": cmd_stats, "reproduce": cmd_reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        text = COMMANDS[args.command](args, cfg)
        emit(text, cfg)
    except (UsageError, InvalidArgument, InvalidSpec) as exc:
        print(f"splitwit: error: {exc}", file=sys.stderr)
        return 1
    except (DegenerateState, InsufficientMoments, RuntimeError, ArithmeticError,
            np.linalg.LinAlgError) as exc:
        print(f"splitwit: numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
