"""Command-line front end: single runs, experiment sweeps, topology
inspection, bound tables, and a built-in invariant check suite.

Output schema (one row per logged iteration):

    topology,n,d,tau,seed,alpha,k,stationarity,consensus,tracking_residual,fbar

Floating-point fields carry 17 significant digits and the infinite averaging
period is rendered as the literal token `inf`, so identical invocations
produce byte-identical files. Sweeps additionally write `<out>.mean.csv`
with per-iteration metric means across seeds.

Exit codes: 0 success, 2 malformed configuration, 3 divergence (partial
results flushed), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .engine import (
    DivergenceError,
    GradientStreams,
    RunConfig,
    Trajectory,
    gradient_stream,
    gt_pga_step,
    init_state,
    load_checkpoint,
    run,
    save_checkpoint,
)
from .metrics import consensus_error, tracking_residual
from .problem import (
    Dataset,
    NoiseModel,
    generate_dataset,
    local_gradient,
    local_value,
    smoothness_constant,
    stochastic_gradient,
)
from .theory import BoundParams, corollary_stepsize, rate_bound_theorem, stepsize_bound
from .topology import build_topology, is_pga_step, metropolis_weights, normalize_tau

CSV_HEADER = "topology,n,d,tau,seed,alpha,k,stationarity,consensus,tracking_residual,fbar"
MEAN_HEADER = "topology,n,d,tau,alpha,k,stationarity,consensus,tracking_residual,fbar"

DEFAULTS = {
    "topology": "ring",
    "n": 64,
    "d": 20,
    "m": 500,
    "lam": 0.01,
    "label_noise_std": 0.1,
    "data_seed": 0,
    "regularizer": "bounded",
    "tau": "inf",
    "alpha": "shared",
    "iters": 2000,
    "seed": 1,
    "seeds": "1",
    "noise_mode": "additive",
    "sigma": 1.0,
    "batch": 1,
    "cadence": 1,
    "algorithm": "gt-pga",
}


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def format_tau(tau) -> str:
    return "inf" if math.isinf(tau) else str(int(tau))


def parse_tau(text):
    if str(text).strip().lower() == "inf":
        return math.inf
    return normalize_tau(int(text))


def parse_alpha(text):
    if text in ("auto", "shared"):
        return text
    return float(text)


@dataclass(frozen=True)
class SweepSpec:
    """Cross product of topologies, averaging periods, and seeds over one base config."""

    base: RunConfig
    taus: tuple
    seeds: tuple
    topologies: tuple

    def __post_init__(self):
        if not (self.taus and self.seeds and self.topologies):
            raise ValueError("sweep lists must be non-empty")
        for tau in self.taus:
            normalize_tau(tau)

    def runs(self):
        """Configs in deterministic (topology, tau, seed) order."""
        return [
            replace(self.base, topology=topo, tau=tau, seed=seed)
            for topo in self.topologies
            for tau in self.taus
            for seed in self.seeds
        ]


def csv_rows(traj: Trajectory):
    cfg = traj.config
    prefix = f"{cfg.topology},{cfg.n},{cfg.d},{format_tau(cfg.tau)},{cfg.seed},{_fmt(traj.alpha)}"
    for r in traj.records:
        yield (
            f"{prefix},{r.k},{_fmt(r.stationarity)},{_fmt(r.consensus)},"
            f"{_fmt(r.tracking_residual)},{_fmt(r.fbar)}"
        )


def emit_csv(trajectories, path) -> None:
    """Write trajectories in (config, k) order with the fixed schema."""
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for traj in trajectories:
            for line in csv_rows(traj):
                fh.write(line + "\n")


def emit_mean_csv(trajectories, path) -> None:
    """Companion file: per-iteration metric means across seeds, grouped by
    every other config column."""
    groups = {}
    for traj in trajectories:
        cfg = traj.config
        for r in traj.records:
            key = (cfg.topology, cfg.n, cfg.d, format_tau(cfg.tau), traj.alpha, r.k)
            groups.setdefault(key, []).append(
                (r.stationarity, r.consensus, r.tracking_residual, r.fbar)
            )
    with open(path, "w", newline="\n") as fh:
        fh.write(MEAN_HEADER + "\n")
        for key in groups:  # insertion order == (config, k) order
            topo, n, d, tau, alpha, k = key
            means = np.mean(np.array(groups[key]), axis=0)
            fh.write(
                f"{topo},{n},{d},{tau},{_fmt(alpha)},{k},"
                + ",".join(_fmt(v) for v in means)
                + "\n"
            )


def _dataset_from_args(args) -> Dataset:
    return generate_dataset(
        n=args["n"],
        d=args["d"],
        m=args["m"],
        label_noise_std=args["label_noise_std"],
        seed=args["data_seed"],
        lam=args["lam"],
        regularizer=args["regularizer"],
    )


def _noise_from_args(args) -> NoiseModel:
    return NoiseModel(mode=args["noise_mode"], sigma=args["sigma"], batch=args["batch"])


def _shared_alpha(ds: Dataset, factor: float = 0.1) -> float:
    """Default stepsize shared across a sweep: a damped 1/(2L)."""
    return factor / (2.0 * smoothness_constant(ds))


def _resolve_cli_alpha(alpha, ds):
    if alpha == "shared":
        return _shared_alpha(ds)
    return alpha  # float, or "auto" resolved per run by the engine


def _worker_count(n_runs: int) -> int:
    cap = os.environ.get("GTPGA_THREADS", "")
    limit = int(cap) if cap.strip() else (os.cpu_count() or 1)
    return max(1, min(limit, n_runs))


def _execute(configs, ds):
    """Run configs (possibly in parallel) and yield trajectories in config
    order; on divergence, completed and partial results up to the failure."""
    workers = _worker_count(len(configs))
    done = []
    if workers == 1:
        for cfg in configs:
            done.append(run(cfg, ds))
        return done, 0
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run, cfg, ds) for cfg in configs]
        for fut in futures:
            try:
                done.append(fut.result())
            except DivergenceError as err:
                for other in futures:
                    other.cancel()
                if err.trajectory is not None:
                    done.append(err.trajectory)
                print(f"error: {err}", file=sys.stderr)
                return done, 3
    return done, 0


def cmd_run(args) -> int:
    ds = _dataset_from_args(args)
    cfg = RunConfig(
        topology=args["topology"],
        n=args["n"],
        d=args["d"],
        tau=args["tau"],
        alpha=_resolve_cli_alpha(args["alpha"], ds),
        iters=args["iters"],
        seed=args["seed"],
        noise=_noise_from_args(args),
        algorithm=args["algorithm"],
        cadence=args["cadence"],
    )
    initial = None
    if args.get("resume"):
        initial, _ = load_checkpoint(args["resume"])
    code = 0
    try:
        traj = run(cfg, ds, initial_state=initial)
    except DivergenceError as err:
        print(f"error: {err}", file=sys.stderr)
        traj, code = err.trajectory, 3
    emit_csv([traj], args["out"])
    if args.get("save_state"):
        save_checkpoint(traj.final_state, cfg, args["save_state"])
    return code


def cmd_sweep(args) -> int:
    ds = _dataset_from_args(args)
    base = RunConfig(
        topology=args["topologies"][0],
        n=args["n"],
        d=args["d"],
        tau=args["taus"][0],
        alpha=_resolve_cli_alpha(args["alpha"], ds),
        iters=args["iters"],
        seed=args["seeds"][0],
        noise=_noise_from_args(args),
        algorithm=args["algorithm"],
        cadence=args["cadence"],
    )
    spec = SweepSpec(
        base=base,
        taus=tuple(args["taus"]),
        seeds=tuple(args["seeds"]),
        topologies=tuple(args["topologies"]),
    )
    trajectories, code = _execute(spec.runs(), ds)
    emit_csv(trajectories, args["out"])
    if code == 0:
        emit_mean_csv(trajectories, args["out"] + ".mean.csv")
    return code


def cmd_topology_info(args) -> int:
    graph = build_topology(args["topology"], args["n"])
    wm = metropolis_weights(graph)
    print(f"topology={args['topology']}")
    print(f"n={args['n']}")
    print(f"edges={len(graph.edges)}")
    print(f"beta={_fmt(wm.beta)}")
    if args.get("export_matrix"):
        with open(args["export_matrix"], "w", newline="\n") as fh:
            for row in wm.w:
                fh.write(",".join(_fmt(v) for v in row) + "\n")
    return 0


def cmd_theory(args) -> int:
    print("tau,stepsize_bound,corollary_stepsize,term1,term2,term3,total")
    for tau in args["taus"]:
        bp = BoundParams(
            L=args["L"],
            beta=args["beta"],
            tau=int(tau),
            n=args["n"],
            sigma=args["sigma"],
            K=args["iters"],
            gamma1=args["gamma1"],
            gamma2=args["gamma2"],
            gamma3=args["gamma3"],
        )
        bound = rate_bound_theorem(bp)
        print(
            f"{int(tau)},{_fmt(stepsize_bound(bp.L, bp.beta, bp.tau))},"
            f"{_fmt(corollary_stepsize(bp))},{_fmt(bound.term1)},{_fmt(bound.term2)},"
            f"{_fmt(bound.term3)},{_fmt(bound.total)}"
        )
    return 0


def _check_gradients(ds, trials=20) -> float:
    """Worst relative error between analytic and central finite-difference
    gradients over random (agent, point) pairs."""
    rng = np.random.default_rng(12345)
    h = 1e-6
    worst = 0.0
    for _ in range(trials):
        i = int(rng.integers(0, ds.n))
        x = rng.standard_normal(ds.d)
        grad = local_gradient(ds, i, x)
        fd = np.empty(ds.d)
        for j in range(ds.d):
            e = np.zeros(ds.d)
            e[j] = h
            fd[j] = (local_value(ds, i, x + e) - local_value(ds, i, x - e)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(fd - grad) / np.linalg.norm(grad)))
    return worst


def _reference_static_gt(ds, w, alpha, noise, seed, iters):
    """Plain static-topology tracked recursion, written directly against the
    gradient oracle (used as an independent cross-check of the engine)."""
    x = np.zeros((ds.n, ds.d))
    grads = np.stack(
        [stochastic_gradient(ds, i, x[i], noise, gradient_stream(seed, i, 0)) for i in range(ds.n)]
    )
    g = grads.copy()
    for k in range(iters):
        x = w @ (x - alpha * g)
        fresh = np.stack(
            [
                stochastic_gradient(ds, i, x[i], noise, gradient_stream(seed, i, k + 1))
                for i in range(ds.n)
            ]
        )
        g = w @ g + fresh - grads
        grads = fresh
    return x, g


def cmd_check(args) -> int:
    """Built-in invariant suite; prints one PASS/FAIL line per check."""
    results = []
    ds = generate_dataset(n=8, d=5, m=30, label_noise_std=0.1, seed=7, lam=0.01)
    wm = metropolis_weights(build_topology("ring", 8))
    noise = NoiseModel(mode="additive", sigma=1.0)
    alpha = 0.01 / smoothness_constant(ds)

    worst = _check_gradients(ds)
    results.append(("gradient-oracle", worst <= 1e-6, f"max relative error {worst:.2e}"))

    tau, iters = 5, 200
    streams = GradientStreams(3)
    state = init_state(ds, None, noise, streams)
    worst_track, worst_consensus = 0.0, 0.0
    for _ in range(iters):
        state = gt_pga_step(state, wm, tau, alpha, ds, noise, streams)
        scale = 1.0 + float(np.linalg.norm(state.grad_prev.mean(axis=0)))
        worst_track = max(worst_track, tracking_residual(state) / scale)
        if is_pga_step(state.k - 1, tau):
            worst_consensus = max(worst_consensus, consensus_error(state))
    results.append(("tracking-identity", worst_track <= 1e-10, f"max residual {worst_track:.2e}"))
    results.append(
        ("post-averaging-consensus", worst_consensus <= 1e-24, f"max error {worst_consensus:.2e}")
    )

    cfg = RunConfig(
        topology="ring", n=8, d=5, tau=math.inf, alpha=alpha, iters=300, seed=3,
        noise=noise, cadence=300,
    )
    traj = run(cfg, ds)
    ref_x, ref_g = _reference_static_gt(ds, wm.w, alpha, noise, seed=3, iters=300)
    gap = max(
        float(np.max(np.abs(traj.final_state.x - ref_x))),
        float(np.max(np.abs(traj.final_state.g - ref_g))),
    )
    results.append(("static-gt-equivalence", gap <= 1e-12, f"max componentwise gap {gap:.2e}"))

    ok = True
    for name, passed, detail in results:
        print(f"check {name}: {'PASS' if passed else 'FAIL'} ({detail})")
        ok = ok and passed
    return 0 if ok else 1


def _add_problem_flags(p):
    p.add_argument("--n", type=int, help="number of agents")
    p.add_argument("--d", type=int, help="decision dimension")
    p.add_argument("--m", type=int, help="rows per agent")
    p.add_argument("--lambda", dest="lam", type=float, help="regularization weight")
    p.add_argument("--label-noise-std", type=float, help="std of the label noise in b")
    p.add_argument("--data-seed", type=int, help="dataset generation seed")
    p.add_argument("--regularizer", choices=("bounded", "unbounded"))


def _add_run_flags(p):
    p.add_argument("--alpha", type=parse_alpha, help='stepsize, "auto", or "shared" (0.1/(2L))')
    p.add_argument("--iters", type=int, help="iteration budget")
    p.add_argument("--noise-mode", choices=("additive", "minibatch"))
    p.add_argument("--sigma", type=float, help="additive gradient noise level")
    p.add_argument("--batch", type=int, help="minibatch size")
    p.add_argument("--cadence", type=int, help="log metrics every this many iterations")
    p.add_argument("--algorithm", choices=("gt-pga", "dgd"))
    p.add_argument("--config", help="JSON config file; explicit flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gtpga",
        description="Decentralized gradient tracking with periodic global averaging.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one configuration and write a CSV")
    _add_problem_flags(p_run)
    _add_run_flags(p_run)
    p_run.add_argument("--topology", choices=("ring", "meshgrid2d", "star", "hypercube", "complete"))
    p_run.add_argument("--tau", type=parse_tau, help="averaging period (integer or inf)")
    p_run.add_argument("--seed", type=int, help="master seed for gradient noise")
    p_run.add_argument("--out", required=True, help="output CSV path")
    p_run.add_argument("--save-state", help="directory for a final-state checkpoint")
    p_run.add_argument("--resume", help="checkpoint directory to resume from")

    p_sweep = sub.add_parser("sweep", help="run a (topology, tau, seed) cross product")
    _add_problem_flags(p_sweep)
    _add_run_flags(p_sweep)
    p_sweep.add_argument("--topology", help="comma-separated topology list")
    p_sweep.add_argument("--tau", help="comma-separated averaging periods (integers or inf)")
    p_sweep.add_argument("--seeds", help="comma-separated master seeds")
    p_sweep.add_argument("--out", required=True, help="output CSV path")

    p_info = sub.add_parser("topology-info", help="print agent count, edges, and beta")
    p_info.add_argument("--topology", required=True,
                        choices=("ring", "meshgrid2d", "star", "hypercube", "complete"))
    p_info.add_argument("--n", type=int, required=True)
    p_info.add_argument("--export-matrix", help="also write the dense weight matrix as CSV")

    p_theory = sub.add_parser("theory", help="print stepsize and rate-bound table as CSV")
    p_theory.add_argument("--L", type=float, required=True)
    p_theory.add_argument("--beta", type=float, required=True)
    p_theory.add_argument("--tau", required=True, help="comma-separated periods (>= 2)")
    p_theory.add_argument("--n", type=int, default=1)
    p_theory.add_argument("--sigma", type=float, default=0.0)
    p_theory.add_argument("--iters", type=int, default=1000, help="horizon K")
    p_theory.add_argument("--gamma1", type=float, default=1.0)
    p_theory.add_argument("--gamma2", type=float, default=1.0)
    p_theory.add_argument("--gamma3", type=float, default=1.0)

    sub.add_parser("check", help="run the built-in invariant suite")
    return parser


def _merge_config(ns: argparse.Namespace, scalar_tau: bool) -> dict:
    """Layer defaults, then the JSON config file, then explicit flags.

    For single runs tau is normalized to a scalar; sweeps keep it as the raw
    comma-separated text and expand it later.
    """
    merged = dict(DEFAULTS)
    raw = vars(ns)
    config_path = raw.get("config")
    if config_path:
        file_cfg = json.loads(open(config_path).read())
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config file keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key, value in raw.items():
        if value is not None and key not in ("command", "config"):
            merged[key] = value
    if scalar_tau and isinstance(merged.get("tau"), str):
        merged["tau"] = parse_tau(merged["tau"])
    if isinstance(merged.get("alpha"), str) and merged["alpha"] not in ("auto", "shared"):
        merged["alpha"] = float(merged["alpha"])
    return merged


def _parse_list(text, convert):
    return tuple(convert(part.strip()) for part in str(text).split(",") if part.strip())


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # uniform return-code contract for library callers
        return int(exc.code or 0)
    try:
        if ns.command == "topology-info":
            return cmd_topology_info(vars(ns))
        if ns.command == "theory":
            args = vars(ns)
            args["taus"] = _parse_list(args.pop("tau"), int)
            return cmd_theory(args)
        if ns.command == "check":
            return cmd_check(vars(ns))
        args = _merge_config(ns, scalar_tau=ns.command == "run")
        if ns.command == "run":
            return cmd_run(args)
        args["taus"] = _parse_list(args["tau"], parse_tau)
        args["seeds"] = _parse_list(args["seeds"], int)
        args["topologies"] = _parse_list(args["topology"], str)
        return cmd_sweep(args)
    except (ValueError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
