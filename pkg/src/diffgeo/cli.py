"""Command-line entry point.

Every subcommand writes plain CSV / JSON-lines.  With ``--out DIR`` the
results go to files under ``DIR`` together with ``manifest.json`` (argv,
resolved config, dataset hash, output checksums); without it the main
result is printed to stdout.  ``diffgeo --replay MANIFEST --out DIR`` re-runs
a manifest.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__, _kernels
from .dataset import PointSet, format_float, gen_gmm, load_csv
from .denoiser import VARIANTS, make_perturbed, optimal
from .diagnose import deviation_curves, knn
from .errors import DiffGeoError, SpecParseError
from .geometry import thin_shell_experiment, trajectory_report
from .interp import STRATEGIES, variance_factor, variance_sweep
from .meanshift import mean_shift_converge
from .sampler import SOLVERS, initial_samples, load_trajectory, ode_jump, solve_batch
from .schedule import KINDS, build_grid, weight_sequence

COMMANDS = ("sample", "jump", "stats", "schedule", "meanshift", "interp", "diagnose", "shell")


# --------------------------------------------------------------------------- dataset specs


def _floats(text: str, token: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise SpecParseError(token) from None
    if not vals or not all(math.isfinite(v) for v in vals):
        raise SpecParseError(token)
    return vals


def parse_dataset_spec(spec: str) -> PointSet:
    """``csv:<path>``, ``point:<v1,...,vd>``, ``pair:<v>`` or ``gmm:means=..;.. std=.. n=.. seed=..``.

    ``csv:`` accepts an optional ``?header`` suffix when the file has a header row.
    """
    kind, sep, body = spec.partition(":")
    if not sep or not body:
        raise SpecParseError(spec, "expected <kind>:<params>")
    if kind == "csv":
        header = body.endswith("?header")
        return load_csv(body[: -len("?header")] if header else body, has_header=header)
    if kind == "point":
        return PointSet(np.array([_floats(body, body)]))
    if kind == "pair":
        vals = _floats(body, body)
        if len(vals) != 1:
            raise SpecParseError(body, "pair takes one value")
        return PointSet(np.array([[-vals[0]], [vals[0]]]))
    if kind == "gmm":
        params = {}
        for tok in body.split():
            key, eq, val = tok.partition("=")
            if not eq or key not in ("means", "std", "n", "seed"):
                raise SpecParseError(tok)
            params[key] = val
        if "means" not in params:
            raise SpecParseError(body, "gmm needs means=")
        rows = [_floats(r, r) for r in params["means"].split(";")]
        if len({len(r) for r in rows}) != 1:
            raise SpecParseError(params["means"], "means rows differ in length")
        try:
            std = float(params.get("std", "0"))
            n = int(params.get("n", "1"))
            seed = int(params.get("seed", "0"))
        except ValueError as exc:
            raise SpecParseError(body, str(exc)) from None
        return gen_gmm(rows, std, n, seed)
    raise SpecParseError(kind, "unknown dataset kind")


# --------------------------------------------------------------------------- output helpers


class Output:
    """Collects named text outputs; writes them under ``out`` or prints the primary one."""

    def __init__(self, out: Optional[str]):
        self.out = Path(out) if out else None
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def finish(self, primary: Optional[str], manifest: dict):
        if self.out is None:
            if primary is not None:
                sys.stdout.write(self.files[primary])
            return
        self.out.mkdir(parents=True, exist_ok=True)
        digests = {}
        for name in sorted(self.files):
            data = self.files[name].encode("utf-8")
            (self.out / name).write_bytes(data)
            digests[name] = hashlib.sha256(data).hexdigest()
        manifest = dict(manifest, outputs=digests)
        (self.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join("" if v is None else (format_float(v) if isinstance(v, float) else str(v)) for v in row) + "\n")
    return buf.getvalue()


def _grid(args):
    return build_grid(args.kind, args.sigma_min, args.sigma_max, args.rho, args.steps)


def _denoiser(args, ps):
    return make_perturbed(ps, args.variant, args.denoiser_seed, fraction=args.fraction, amplitude=args.amplitude)


# --------------------------------------------------------------------------- commands


def cmd_schedule(args, out: Output, meta: dict):
    grid = _grid(args)
    w = weight_sequence(grid)
    rows = []
    for n, s in enumerate(grid.values):
        rows.append((n, float(s), float(w[n - 1]) if 1 <= n <= grid.N - 1 else None))
    out.add("schedule.csv", _csv(("n", "s_n", "w_n"), rows))
    return "schedule.csv"


def cmd_sample(args, out: Output, meta: dict):
    ps = parse_dataset_spec(args.dataset)
    meta["dataset_hash"] = ps.content_hash()
    grid = _grid(args)
    den = _denoiser(args, ps)
    X = initial_samples(grid, ps.d, args.n_traj, args.seed)
    batch = solve_batch(den, grid, X, args.solver, seed=args.seed)
    width = max(5, len(str(args.n_traj - 1)))
    names = []
    for i in range(batch.m):
        name = f"traj_{i:0{width}d}.jsonl"
        out.add(name, batch.trajectory(i).to_jsonl())
        names.append(name)
    out.add("final.csv", _csv([f"x{c}" for c in range(ps.d)], (tuple(float(v) for v in row) for row in batch.states[-1])))
    if out.out is None:
        out.add("stdout", "".join(out.files[n] for n in names))
        return "stdout"
    return "final.csv"


def cmd_jump(args, out: Output, meta: dict):
    ps = parse_dataset_spec(args.dataset)
    meta["dataset_hash"] = ps.content_hash()
    grid = _grid(args)
    den = _denoiser(args, ps)
    X = initial_samples(grid, ps.d, args.n_traj, args.seed)
    Y = ode_jump(den, grid, X, args.solver, args.jump_index)
    header = ["traj"] + [f"x{c}" for c in range(ps.d)]
    out.add("jump.csv", _csv(header, ((i, *(float(v) for v in row)) for i, row in enumerate(Y))))
    return "jump.csv"


def cmd_stats(args, out: Output, meta: dict):
    which = ("sampling", "denoising") if args.which == "both" else (args.which,)
    summary = {}
    for path in args.trajectories:
        traj = load_trajectory(path)
        stem = Path(path).stem
        summary[stem] = {"header": traj.header()}
        for w in which:
            rep = trajectory_report(traj, w, slack=args.slack)
            rows = ((k, r["s"], r["chord_dev"], r["angle_cos"], r["magnitude"], r["dist_to_final"])
                    for k, r in enumerate(rep.rows()))
            out.add(f"{stem}.{w}.csv", _csv(("step", "s", "chord_dev", "angle_cos", "magnitude", "dist_to_final"), rows))
            summary[stem][w] = rep.summary
    out.add("summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return "summary.json"


def cmd_meanshift(args, out: Output, meta: dict):
    ps = parse_dataset_spec(args.dataset)
    meta["dataset_hash"] = ps.content_hash()
    queries = load_csv(args.queries, has_header=args.queries_header)
    rows = []
    for q in queries.points:
        res = mean_shift_converge(ps, q, args.bandwidth, args.tol, args.max_iter)
        rows.append((*(float(v) for v in res.point), res.iterations, int(res.converged)))
    out.add("modes.csv", _csv([f"x{c}" for c in range(ps.d)] + ["iterations", "converged"], rows))
    return "modes.csv"


def cmd_interp(args, out: Output, meta: dict):
    strategies = args.strategy.split(",")
    for s in strategies:
        if s not in STRATEGIES:
            raise SpecParseError(s, "unknown strategy")
    alphas = _floats(args.alpha_grid, args.alpha_grid)
    dims = [int(v) for v in args.dims.split(",")]
    rows = []
    for strat in strategies:
        for a in alphas:
            for pt in variance_sweep(strat, a, dims, args.samples, args.T, args.seed):
                rows.append((strat, float(a), pt.d, pt.empirical_f, pt.stderr, variance_factor(strat, a)))
    out.add("interp.csv", _csv(("strategy", "alpha", "d", "empirical_f", "stderr", "analytic_f"), rows))
    return "interp.csv"


def cmd_diagnose(args, out: Output, meta: dict):
    ps = parse_dataset_spec(args.dataset)
    meta["dataset_hash"] = ps.content_hash()
    grid = _grid(args)
    res = deviation_curves(_denoiser(args, ps), optimal(ps), grid, args.n_traj, args.solver, args.seed)
    for fam, curve in res.curves.items():
        out.add(f"curve_{fam}.csv", _csv(("s", "deviation", "stderr"),
                                         ((float(s), float(v), float(e)) for s, v, e in zip(curve.s, curve.deviation, curve.stderr))))
    k = min(args.k, ps.n)
    rows = []
    for label, finals in (("learned", res.final_a), ("optimal", res.final_b)):
        for i, x in enumerate(finals):
            for rank, (row, dist) in enumerate(knn(ps, x, k)):
                rows.append((label, i, rank, row, dist))
    out.add("knn.csv", _csv(("trajectory_family", "traj", "rank", "row", "distance"), rows))
    return "knn.csv"


def cmd_shell(args, out: Output, meta: dict):
    st = thin_shell_experiment(args.dim, args.sigma, args.samples, args.seed)
    payload = {
        "d": args.dim,
        "sigma": args.sigma,
        "n_samples": st.n_samples,
        "mean_norm": st.mean_norm,
        "std_norm": st.std_norm,
        "mean_sq_norm": st.mean_sq_norm,
        "var_sq_norm": st.var_sq_norm,
        "se_mean_norm": st.se_mean_norm,
        "analytic_mean_norm": args.sigma * math.sqrt(args.dim),
        "analytic_std_norm": args.sigma / math.sqrt(2.0),
        "analytic_mean_sq_norm": args.sigma**2 * args.dim,
        "analytic_var_sq_norm": 2.0 * args.dim * args.sigma**4,
    }
    out.add("shell.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return "shell.json"


# --------------------------------------------------------------------------- parser


def _add_grid(p):
    p.add_argument("--kind", choices=KINDS, default="polynomial")
    p.add_argument("--sigma-min", type=float, default=0.002)
    p.add_argument("--sigma-max", type=float, default=80.0)
    p.add_argument("--rho", type=float, default=7.0)
    p.add_argument("--steps", type=int, default=18, help="number of grid points N (s_1 .. s_N)")


def _add_denoiser(p, default_variant="optimal"):
    p.add_argument("--dataset", required=True, help="csv:<path>[?header] | point:<v,..> | pair:<v> | gmm:<params>")
    p.add_argument("--variant", choices=VARIANTS, default=default_variant)
    p.add_argument("--fraction", type=float, default=0.5, help="subsampled: fraction of rows kept")
    p.add_argument("--amplitude", type=float, default=0.5, help="weight_noised: logit noise amplitude")
    p.add_argument("--denoiser-seed", type=int, default=0)


def _add_out(p):
    p.add_argument("--out", default=None, help="output directory (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffgeo", allow_abbrev=False,
                                     description="Exact-score diffusion sampling geometry experiments.")
    parser.add_argument("--version", action="version", version=f"diffgeo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", allow_abbrev=False, help="print a time grid and its Euler weights")
    _add_grid(p)
    _add_out(p)

    for name, helptext in (("sample", "solve the empirical PF-ODE and write trajectories"),
                           ("jump", "ODE-Jump: stop early and return the denoiser output")):
        p = sub.add_parser(name, allow_abbrev=False, help=helptext)
        _add_denoiser(p)
        _add_grid(p)
        p.add_argument("--solver", choices=SOLVERS, default="heun")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--n-traj", type=int, default=1)
        if name == "jump":
            p.add_argument("--jump-index", type=int, required=True)
        _add_out(p)

    p = sub.add_parser("stats", allow_abbrev=False, help="geometry report for trajectory JSON-lines files")
    p.add_argument("trajectories", nargs="+")
    p.add_argument("--which", choices=("sampling", "denoising", "both"), default="both")
    p.add_argument("--slack", type=float, default=1e-3)
    _add_out(p)

    p = sub.add_parser("meanshift", allow_abbrev=False, help="run Gaussian mean shift from query points")
    p.add_argument("--dataset", required=True)
    p.add_argument("--queries", required=True, help="CSV file of start points")
    p.add_argument("--queries-header", action="store_true")
    p.add_argument("--bandwidth", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    _add_out(p)

    p = sub.add_parser("interp", allow_abbrev=False, help="variance factors of latent interpolation strategies")
    p.add_argument("--strategy", default=",".join(STRATEGIES), help="comma list of " + ", ".join(STRATEGIES))
    p.add_argument("--alpha-grid", default="0.1,0.3,0.5")
    p.add_argument("--dims", default="2,16,128,1024")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--T", type=float, default=80.0)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)

    p = sub.add_parser("diagnose", allow_abbrev=False, help="score-deviation curves of a perturbed denoiser vs the optimum")
    _add_denoiser(p, default_variant="weight_noised")
    _add_grid(p)
    p.add_argument("--solver", choices=SOLVERS, default="heun")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-traj", type=int, default=64)
    p.add_argument("--k", type=int, default=5)
    _add_out(p)

    p = sub.add_parser("shell", allow_abbrev=False, help="thin-shell Monte Carlo for isotropic Gaussian norms")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p)
    return parser


HANDLERS = {
    "schedule": cmd_schedule,
    "sample": cmd_sample,
    "jump": cmd_jump,
    "stats": cmd_stats,
    "meanshift": cmd_meanshift,
    "interp": cmd_interp,
    "diagnose": cmd_diagnose,
    "shell": cmd_shell,
}


def _strip_out(argv: Sequence[str]) -> list[str]:
    out, skip = [], False
    for tok in argv:
        if skip:
            skip = False
            continue
        if tok == "--out":
            skip = True
            continue
        if tok.startswith("--out="):
            continue
        out.append(tok)
    return out


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "--replay":
        return replay(argv[1:])
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Output(args.out)
    config = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
    meta = {
        "tool": "diffgeo",
        "version": __version__,
        "command": args.command,
        "argv": _strip_out(argv),
        "config": config,
        "dataset_hash": None,
        "backend": _kernels.BACKEND,
    }
    try:
        primary = HANDLERS[args.command](args, out, meta)
        out.finish(primary, meta)
    except (DiffGeoError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"diffgeo {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


def replay(argv: Sequence[str]) -> int:
    """``--replay MANIFEST [--out DIR]``: re-run the argv stored in a manifest."""
    if not argv:
        print("usage: diffgeo --replay MANIFEST [--out DIR]", file=sys.stderr)
        return 2
    try:
        with open(argv[0], "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        stored = list(manifest["argv"])
    except (OSError, ValueError, KeyError) as exc:
        print(f"diffgeo --replay: error: {exc}", file=sys.stderr)
        return 1
    return run(stored + list(argv[1:]))


def main() -> None:  # pragma: no cover
    sys.exit(run())
