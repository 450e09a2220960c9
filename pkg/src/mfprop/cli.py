"""Command-line front end: seeded experiments emitted as CSV/JSON.

Subcommands map one-to-one onto the standard experiments (length map,
c-map, phase grid, curvature, simulation probes, boundary curvature,
shallow bound, Fourier regression, weight chaos) plus `validate-all`,
which runs the acceptance suite.  Every output embeds its resolved config
and is byte-identical across reruns with the same seed.

Exit codes: 0 success, 1 usage error, 2 numerical failure,
3 acceptance failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .activations import builtin, builtin_names
from .errors import MFPropError
from .meanfield import (
    EnsembleParams,
    correlation_trajectory,
    curvature_trajectory,
    length_fixed_point,
    length_trajectory,
    phase_grid,
    c_map,
)
from .output import read_embedded_config, write_table
from .quadrature import build_rule
from . import boundary as boundary_mod
from . import expressivity as expr_mod
from . import simulator as sim_mod


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_range(text: str) -> np.ndarray:
    """Grid syntax lo:hi:count, e.g. 0.1:5:50."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range must be lo:hi:count, got {text!r}")
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise UsageError(f"range count must be >= 1, got {count}")
    return np.linspace(lo, hi, count)


def _parse_int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


# Per-command flag tables: (dest, flags, type, default, help).  Flags parse
# with default None so config-file values can fill unset ones; the resolved
# config is what gets embedded in artifacts.
_COMMON = [
    ("sigma_w", ("--sigma-w", "--sw"), float, 1.0, "weight std scale"),
    ("sigma_b", ("--sigma-b", "--sb"), float, 0.0, "bias std"),
    ("nonlinearity", ("--nonlinearity", "--nl"), str, "tanh",
     f"one of {', '.join(builtin_names())}"),
    ("order", ("--order",), int, 201, "quadrature order"),
    ("out", ("--out", "-o"), str, None, "output path (default: <command>.<format>)"),
    ("format", ("--format",), str, "csv", "csv or json"),
]

_COMMANDS: dict[str, list] = {
    "length-map": _COMMON + [
        ("q0", ("--q0",), float, 1.0, "input squared length per neuron"),
        ("depth", ("--depth",), int, 10, "number of layers"),
    ],
    "c-map": _COMMON + [
        ("c0", ("--c0",), float, 0.9, "initial correlation"),
        ("depth", ("--depth",), int, 20, "number of layers"),
    ],
    "phase-grid": [
        ("sw_range", ("--sw", "--sigma-w"), str, "0.1:4:30", "sigma_w grid lo:hi:count"),
        ("sb_range", ("--sb", "--sigma-b"), str, "0:1:15", "sigma_b grid lo:hi:count"),
        ("nonlinearity", ("--nonlinearity", "--nl"), str, "tanh", "activation"),
        ("order", ("--order",), int, 201, "quadrature order"),
        ("threads", ("--threads",), int, None,
         "worker threads (default: MFPROP_THREADS or all cores)"),
        ("out", ("--out", "-o"), str, None, "output path"),
        ("format", ("--format",), str, "csv", "csv or json"),
    ],
    "curvature": _COMMON + [
        ("depth", ("--depth",), int, 20, "number of layers"),
    ],
    "simulate": _COMMON + [
        ("q0", ("--q0",), float, 1.0, "input squared length per neuron"),
        ("c0", ("--c0",), float, None,
         "if set, propagate a pair injected at the fixed-point radius"),
        ("depth", ("--depth",), int, 10, "number of layers"),
        ("width", ("--width",), int, 1000, "width of every layer"),
        ("seeds", ("--seeds",), int, 5, "number of network realizations"),
        ("seed", ("--seed",), int, 0, "base seed"),
    ],
    "autocorr": _COMMON + [
        ("depth", ("--depth",), int, 10, "number of layers"),
        ("width", ("--width",), int, 1000, "width of every layer"),
        ("theta_samples", ("--theta-samples",), int, 256, "circle resolution"),
        ("seed", ("--seed",), int, 0, "seed"),
    ],
    "spectrum": _COMMON + [
        ("depth", ("--depth",), int, 10, "number of layers"),
        ("width", ("--width",), int, 1000, "width of every layer"),
        ("theta_samples", ("--theta-samples",), int, 256, "circle resolution"),
        ("top_k", ("--top-k",), int, 5, "report variance fraction of top k"),
        ("seed", ("--seed",), int, 0, "seed"),
    ],
    "boundary": _COMMON + [
        ("depth", ("--depth",), int, 6, "number of layers"),
        ("width", ("--width",), int, 100, "width of every layer"),
        ("n_points", ("--n-points",), int, 10, "boundary points per layer"),
        ("seed", ("--seed",), int, 0, "seed"),
    ],
    "shallow-bound": _COMMON + [
        ("n_trials", ("--n-trials",), int, 100, "number of sampled nets"),
        ("n_hidden", ("--n-hidden",), int, 1000, "hidden width N1"),
        ("input_width", ("--input-width",), int, 1000, "input width N0"),
        ("q0", ("--q0",), float, 1.0, "circle squared radius per neuron"),
        ("theta_samples", ("--theta-samples",), int, 512, "circle resolution"),
        ("seed", ("--seed",), int, 0, "seed"),
    ],
    "fourier": _COMMON + [
        ("depths", ("--depths",), str, "1,4,8", "comma-separated depths"),
        ("width", ("--width",), int, 200, "width of every layer"),
        ("omega_max", ("--omega-max",), int, 50, "largest Fourier frequency"),
        ("theta_samples", ("--theta-samples",), int, 512, "circle resolution"),
        ("ridge", ("--ridge",), float, None, "ridge strength (default: auto)"),
        ("seed", ("--seed",), int, 0, "seed"),
    ],
    "weight-chaos": _COMMON + [
        ("depth", ("--depth",), int, 10, "number of layers"),
        ("width", ("--width",), int, 1000, "width of every layer"),
        ("deltas", ("--deltas",), str, "0:0.5:11", "delta grid lo:hi:count"),
        ("theta_samples", ("--theta-samples",), int, 256, "circle resolution"),
        ("seed", ("--seed",), int, 0, "seed"),
    ],
    "validate-all": [
        ("only", ("--only",), str, None, "comma-separated criteria numbers"),
        ("out", ("--out", "-o"), str, None, "optional report path"),
    ],
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="mfprop", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"mfprop {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, table in _COMMANDS.items():
        p = sub.add_parser(name)
        for dest, flags, typ, default, help_text in table:
            if default is not None:
                help_text = f"{help_text} (default: {default})"
            p.add_argument(*flags, dest=dest, type=typ, default=None, help=help_text)
        p.add_argument("--config", dest="config", type=str, default=None,
                       help="JSON config file; explicit flags override it")
    return parser


def _resolve_config(command: str, args: argparse.Namespace) -> dict:
    table = _COMMANDS[command]
    file_values = {}
    if args.config:
        with open(args.config) as fh:
            file_values = json.load(fh)
    cfg = {"command": command}
    for dest, _flags, typ, default, _help in table:
        value = getattr(args, dest)
        if value is None and dest in file_values and file_values[dest] is not None:
            raw = file_values[dest]
            value = raw if raw is None else typ(raw)
        if value is None:
            value = default
        cfg[dest] = value
    return cfg


def _ensemble(cfg: dict) -> EnsembleParams:
    return EnsembleParams(cfg["sigma_w"], cfg["sigma_b"], builtin(cfg["nonlinearity"]))


def _finish(cfg: dict, columns, rows, footer=()):
    out = cfg["out"] or f"{cfg['command']}.{cfg['format']}"
    cfg = dict(cfg)
    cfg["out"] = out
    write_table(out, cfg["format"], columns, rows, cfg, __version__, footer)
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# handlers


def _run_length_map(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    traj = length_trajectory(cfg["q0"], cfg["depth"], params, rule)
    rows = [(l + 1, float(q)) for l, q in enumerate(traj.values)]
    footer = [f"q_star = {traj.q_star:.17g}",
              f"iterations_to_1pct = {traj.iterations_to_1pct}"]
    return _finish(cfg, ["layer", "q_theory"], rows, footer)


def _run_c_map(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    traj = correlation_trajectory(cfg["c0"], cfg["depth"], params, rule)
    rows = [(l + 1, float(c)) for l, c in enumerate(traj.values)]
    footer = [
        f"c_star = {traj.c_star:.17g}",
        f"c_star_converged = {traj.c_star_converged}",
        f"chi1 = {traj.chi.chi1:.17g}",
        f"q_star = {traj.chi.q_star:.17g}",
    ]
    return _finish(cfg, ["layer", "c_theory"], rows, footer)


def _run_phase_grid(cfg):
    rule = build_rule(cfg["order"])
    threads = cfg["threads"]
    if threads is None:
        threads = int(os.environ.get("MFPROP_THREADS", 0)) or (os.cpu_count() or 1)
    grid = phase_grid(
        _parse_range(cfg["sw_range"]),
        _parse_range(cfg["sb_range"]),
        builtin(cfg["nonlinearity"]),
        rule,
        n_workers=threads,
    )
    rows = []
    for i, sw in enumerate(grid.sigma_w_axis):
        for j, sb in enumerate(grid.sigma_b_axis):
            rows.append((
                float(sw), float(sb),
                float(grid.q_star[i, j]), float(grid.c_star[i, j]),
                float(grid.chi1[i, j]), bool(grid.c_converged[i, j]),
            ))
    footer = [f"cell_errors = {len(grid.cell_errors)}"]
    status = _finish(cfg, ["sigma_w", "sigma_b", "q_star", "c_star", "chi1", "c_converged"],
                     rows, footer)
    out = cfg["out"] or f"{cfg['command']}.{cfg['format']}"
    boundary_path = out + ".boundary." + cfg["format"]
    brows = [(float(sb), float(sw)) for sb, sw in grid.boundary]
    write_table(boundary_path, cfg["format"], ["sigma_b", "sigma_w_star"], brows,
                {**cfg, "artifact": "phase-boundary"}, __version__)
    print(f"wrote {boundary_path}")
    return status


def _run_curvature(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    traj = curvature_trajectory(cfg["depth"], params, rule)
    rows = [
        (l + 1, float(traj.gE[l]), float(traj.kappa_sq[l]),
         float(traj.LE_norm[l]), float(traj.LG[l]))
        for l in range(cfg["depth"])
    ]
    footer = [
        f"chi1 = {traj.chi.chi1:.17g}",
        f"chi2 = {traj.chi.chi2:.17g}",
        f"q_star = {traj.chi.q_star:.17g}",
        f"kappa_star_sq = {traj.kappa_star_sq:.17g}",
    ]
    return _finish(cfg, ["layer", "gE_bar", "kappa_sq_bar", "LE_bar", "LG"], rows, footer)


def _run_simulate(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    depth, width = cfg["depth"], cfg["width"]
    widths = (width,) * (depth + 1)
    seeds = [cfg["seed"] + k for k in range(cfg["seeds"])]
    if cfg["c0"] is None:
        traj = length_trajectory(cfg["q0"], depth, params, rule)
        acc = np.zeros(depth)
        for seed in seeds:
            net = sim_mod.sample_network(widths, params, seed)
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                               spawn_key=(101,)))
            x0 = rng.normal(size=width)
            x0 *= math.sqrt(width * cfg["q0"]) / np.linalg.norm(x0)
            records = sim_mod.forward(net, x0)
            acc += np.array([sim_mod.empirical_length(r.h) for r in records])
        acc /= len(seeds)
        rows = [(l + 1, float(traj.values[l]), float(acc[l])) for l in range(depth)]
        footer = [f"q_star = {traj.q_star:.17g}"]
        return _finish(cfg, ["layer", "q_theory", "q_emp"], rows, footer)
    traj = correlation_trajectory(cfg["c0"], depth, params, rule)
    q_star = traj.chi.q_star
    acc = np.zeros(depth)
    for seed in seeds:
        net = sim_mod.sample_network(widths, params, seed)
        hA, hB = sim_mod.pair_at_correlation(width, q_star, cfg["c0"],
                                             seed=seed + 7_000_000)
        recs = sim_mod.forward_from_first(net, np.stack([hA, hB]))
        acc += np.array([
            sim_mod.empirical_correlation(r.h[0], r.h[1])[3] for r in recs
        ])
    acc /= len(seeds)
    rows = [(l + 1, float(traj.values[l]), float(acc[l])) for l in range(depth)]
    footer = [f"q_star = {q_star:.17g}", f"c_star = {traj.c_star:.17g}"]
    return _finish(cfg, ["layer", "c_theory", "c_emp"], rows, footer)


def _run_autocorr(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    q_star = length_fixed_point(params, rule)
    if q_star <= 0:
        raise MFPropError("autocorrelation experiment needs q* > 0")
    widths = (cfg["width"],) * (cfg["depth"] + 1)
    net = sim_mod.sample_network(widths, params, cfg["seed"])
    circle = sim_mod.CircleManifold.sample(cfg["width"], q_star,
                                           cfg["theta_samples"], cfg["seed"] + 1)
    records = sim_mod.forward_from_first(net, circle.h1())
    theory = np.cos(2.0 * math.pi * np.arange(cfg["theta_samples"]) / cfg["theta_samples"])
    rows = []
    for rec in records:
        dthetas, c_emp = sim_mod.autocorrelation(rec.h, q_star)
        for k in range(dthetas.size):
            rows.append((rec.layer, float(dthetas[k]), float(c_emp[k]), float(theory[k])))
        theory = np.array([c_map(c, params, rule, q_star=q_star) for c in theory])
    footer = [f"q_star = {q_star:.17g}"]
    return _finish(cfg, ["layer", "dtheta", "c_emp", "c_theory"], rows, footer)


def _run_spectrum(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    q_star = length_fixed_point(params, rule)
    if q_star <= 0:
        raise MFPropError("spectrum experiment needs q* > 0")
    widths = (cfg["width"],) * (cfg["depth"] + 1)
    net = sim_mod.sample_network(widths, params, cfg["seed"])
    circle = sim_mod.CircleManifold.sample(cfg["width"], q_star,
                                           cfg["theta_samples"], cfg["seed"] + 1)
    records = sim_mod.forward_from_first(net, circle.h1())
    rows = []
    footer = []
    for rec in records:
        spec = sim_mod.singular_spectrum(rec.h, top_k=cfg["top_k"])
        for rank, (sv, fr) in enumerate(zip(spec.singular_values,
                                            spec.variance_fractions), start=1):
            rows.append((rec.layer, rank, float(sv), float(fr)))
        footer.append(f"layer {rec.layer}: top{cfg['top_k']}_fraction = "
                      f"{spec.top_k_fraction:.17g}")
    return _finish(cfg, ["layer", "rank", "singular_value", "variance_fraction"],
                   rows, footer)


def _run_boundary(cfg):
    params = _ensemble(cfg)
    widths = (cfg["width"],) * (cfg["depth"] + 1)
    net = sim_mod.sample_network(widths, params, cfg["seed"])
    beta_rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg["seed"],
                                                            spawn_key=(202,)))
    readout = boundary_mod.LinearReadout(beta=beta_rng.normal(size=cfg["width"]))
    summaries = boundary_mod.curvature_vs_depth(net, readout, cfg["n_points"],
                                                cfg["seed"] + 5)
    rows = []
    for summary in summaries:
        for pid, report in enumerate(summary.reports):
            for rank in (1, 2, 3, 4):
                rows.append((summary.layer, pid, rank, float(report.kappas[rank - 1])))
            for rank in (-4, -3, -2, -1):
                rows.append((summary.layer, pid, rank, float(report.kappas[rank])))
    footer = [
        f"layer {s.layer}: converged {s.n_converged}/{s.n_attempted}"
        for s in summaries
    ]
    return _finish(cfg, ["layer", "point_id", "kappa_rank", "kappa_value"], rows, footer)


def _run_shallow_bound(cfg):
    params = _ensemble(cfg)
    circle = sim_mod.CircleManifold.sample(cfg["input_width"], cfg["q0"],
                                           cfg["theta_samples"], cfg["seed"] + 11)
    report = expr_mod.verify_shallow_bound(cfg["n_trials"], cfg["n_hidden"],
                                           params, circle, cfg["seed"])
    rows = [(t, float(le), float(report.bound))
            for t, le in enumerate(report.lengths)]
    footer = [f"max_LE = {report.max_length:.17g}",
              f"violations = {report.violations}"]
    return _finish(cfg, ["trial", "LE", "bound"], rows, footer)


def _run_fourier(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    q_star = length_fixed_point(params, rule)
    if q_star <= 0:
        raise MFPropError("fourier experiment needs q* > 0")
    depths = _parse_int_list(cfg["depths"])
    max_depth = max(depths)
    widths = (cfg["width"],) * (max_depth + 1)
    net = sim_mod.sample_network(widths, params, cfg["seed"])
    circle = sim_mod.CircleManifold.sample(cfg["width"], q_star,
                                           cfg["theta_samples"], cfg["seed"] + 1)
    records = sim_mod.forward_from_first(net, circle.h1())
    probe = expr_mod.uniform_probe(cfg["omega_max"], cfg["theta_samples"],
                                   ridge=cfg["ridge"])
    phi = params.nonlinearity.value
    rows = []
    for rec in records:
        if rec.layer not in depths:
            continue
        profile = expr_mod.fourier_error_profile(phi(rec.h), probe)
        for freq, err in zip(profile.frequencies, profile.errors):
            rows.append((rec.layer, int(freq), float(err)))
    return _finish(cfg, ["depth", "frequency", "error"], rows)


def _run_weight_chaos(cfg):
    params = _ensemble(cfg)
    rule = build_rule(cfg["order"])
    widths = (cfg["width"],) * (cfg["depth"] + 1)
    family = expr_mod.weight_chaos_empirical(
        params, widths, _parse_range(cfg["deltas"]), cfg["seed"],
        n_theta=cfg["theta_samples"], rule=rule,
    )
    rows = [
        (float(d), float(ct), float(ce))
        for d, ct, ce in zip(family.delta_grid, family.c_theory, family.c_empirical)
    ]
    return _finish(cfg, ["delta", "C_theory", "C_empirical"], rows)


def _run_validate_all(cfg):
    from . import acceptance

    only = _parse_int_list(cfg["only"]) if cfg["only"] else None
    results = acceptance.run_all(only=only)
    lines = [acceptance.format_result(r) for r in results]
    for line in lines:
        print(line)
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return 0 if all(r.passed for r in results) else 3


_HANDLERS = {
    "length-map": _run_length_map,
    "c-map": _run_c_map,
    "phase-grid": _run_phase_grid,
    "curvature": _run_curvature,
    "simulate": _run_simulate,
    "autocorr": _run_autocorr,
    "spectrum": _run_spectrum,
    "boundary": _run_boundary,
    "shallow-bound": _run_shallow_bound,
    "fourier": _run_fourier,
    "weight-chaos": _run_weight_chaos,
    "validate-all": _run_validate_all,
}


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (see --help)")
        cfg = _resolve_config(args.command, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return _HANDLERS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (MFPropError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


__all__ = ["main", "run", "read_embedded_config", "UsageError"]
