"""Command-line front end: ``qcfd <command> [--config F] [--out D] [--seed S] ...``.

Exit status is 0 on success, 1 for invalid input (config, paths, CSV schemas) and 2
when a solver fails numerically (blow-up or divergence).
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import scipy

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .grid import BlowUpError, BurgersConfig, Field, fdm_solve, snapshot_steps
from .io import read_csv, write_csv
from .optim import DivergenceError
from .qpinn import (
    CollocationSets,
    classical_reference_net,
    dump_net,
    evaluate_against_fdm,
    hybrid_forward,
    hybrid_reference_net,
    param_count,
    train,
)
from .qsim import ShotConfig
from .tt import TruncationPolicy, TtSolveConfig, decode_mps, dump_tt, tt_solve
from .vqa import Ansatz, vqa_burgers_solve

__all__ = ["main"]

COMMANDS = {
    "fdm-solve": "fdm",
    "tt-solve": "tt",
    "vqa-solve": "vqa",
    "qpinn-train": "qpinn",
    "sweep-chi": "tt",
}
_HELP = {
    "fdm-solve": "explicit finite-difference reference solve",
    "tt-solve": "tensor-train solve with truncation diagnostics",
    "vqa-solve": "variational time marching on a simulated circuit",
    "qpinn-train": "train the hybrid physics-informed network",
    "sweep-chi": "MSE against finite differences for each bond cap",
}


class NumericalFailure(RuntimeError):
    """A solver aborted; the message carries its diagnostics."""


# -- helpers ------------------------------------------------------------------------


def _times(burgers: BurgersConfig, steps: list[int]) -> np.ndarray:
    return np.minimum(np.array(steps, dtype=np.float64) * burgers.dt, burgers.t_final)


def _write_trajectory(path: Path, x: np.ndarray, times: np.ndarray, fields: Sequence[np.ndarray]) -> None:
    xs = np.tile(x, len(times))
    ts = np.repeat(times, len(x))
    write_csv(path, ("x", "t", "u"), (xs, ts, np.concatenate(fields)))


def _mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


def _fdm_reference(burgers: BurgersConfig) -> tuple[Field, list[Field]]:
    return fdm_solve(burgers)


# -- commands -----------------------------------------------------------------------


def run_fdm(cfg: ExperimentConfig, out: Path, threads: int) -> dict[str, Any]:
    burgers = cfg.burgers()
    final, snaps = fdm_solve(burgers)
    steps = snapshot_steps(burgers.n_steps, burgers.snapshot_stride)
    write_csv(out / "solution.csv", ("x", "u"), (final.x, final.values))
    _write_trajectory(out / "trajectory.csv", final.x, _times(burgers, steps), [s.values for s in snaps])
    norms = [s.norm() for s in snaps]
    return {
        "n_steps": burgers.n_steps,
        "initial_norm": norms[0],
        "final_norm": final.norm(),
        "energy_non_increasing": bool(np.all(np.diff(norms) <= 1e-12)),
    }


def _tt_run(burgers: BurgersConfig, policy: TruncationPolicy, per_op: bool) -> tuple[list[np.ndarray], Any, float]:
    start = time.perf_counter()
    _, diag = tt_solve(TtSolveConfig(burgers, policy, per_op_truncation=per_op))
    return [decode_mps(m, burgers.spec).values for _, m in diag.snapshots], diag, time.perf_counter() - start


def _policy(tt: dict[str, Any], chi: int | None) -> TruncationPolicy:
    if chi is None and tt["svd_cutoff"] == 0.0:
        return TruncationPolicy.unlimited()
    return TruncationPolicy(max_chi=chi, svd_cutoff=tt["svd_cutoff"])


def run_tt(cfg: ExperimentConfig, out: Path, threads: int) -> dict[str, Any]:
    burgers = cfg.burgers()
    tt = cfg.data["tt"]
    start = time.perf_counter()
    final, diag = tt_solve(TtSolveConfig(burgers, _policy(tt, tt["max_chi"]), per_op_truncation=tt["per_op_truncation"]))
    seconds = time.perf_counter() - start
    x = burgers.spec.x
    values = decode_mps(final, burgers.spec).values
    steps = [s for s, _ in diag.snapshots]
    write_csv(out / "solution.csv", ("x", "u"), (x, values))
    _write_trajectory(out / "trajectory.csv", x, _times(burgers, steps), [decode_mps(m, burgers.spec).values for _, m in diag.snapshots])
    n = len(diag.max_bond)
    write_csv(
        out / "diagnostics.csv",
        ("step", "max_bond", "discarded_weight", "seconds"),
        (np.arange(1, n + 1), diag.max_bond, diag.discarded_weight, diag.seconds),
    )
    dump_tt(final, out / "final_state.tt")
    ref_final, ref_snaps = _fdm_reference(burgers)
    snap_err = max(float(np.max(np.abs(decode_mps(m, burgers.spec).values - r.values))) for (_, m), r in zip(diag.snapshots, ref_snaps))
    return {
        "n_steps": burgers.n_steps,
        "max_chi": tt["max_chi"],
        "peak_bond": int(max(diag.max_bond, default=final.max_bond)),
        "initial_discarded_weight": diag.initial_discarded,
        "total_discarded_weight": float(np.sum(diag.discarded_weight)),
        "accumulated_truncation": diag.accumulated_truncation,
        "mse_vs_fdm": _mse(values, ref_final.values),
        "max_abs_vs_fdm_snapshots": snap_err,
        "solve_seconds": seconds,
    }


def run_sweep(cfg: ExperimentConfig, out: Path, threads: int) -> dict[str, Any]:
    burgers = cfg.burgers()
    tt = cfg.data["tt"]
    chis = sorted(set(tt["chis"]))
    ref_final, _ = _fdm_reference(burgers)

    def member(chi: int) -> dict[str, Any]:
        fields, diag, seconds = _tt_run(burgers, _policy(tt, chi), tt["per_op_truncation"])
        return {
            "chi": chi,
            "mse": _mse(fields[-1], ref_final.values),
            "max_abs": float(np.max(np.abs(fields[-1] - ref_final.values))),
            "max_bond": int(max(diag.max_bond, default=1)),
            "seconds": seconds,
        }

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(member, chis))
    best = np.inf
    for row in rows:
        # a larger bond that does no better than some smaller one is reported, not hidden
        row["anomaly"] = bool(row["mse"] > best)
        best = min(best, row["mse"])
    write_csv(
        out / "mse_vs_chi.csv",
        ("chi", "mse", "max_abs", "max_bond", "seconds", "anomaly"),
        tuple(np.array([r[k] for r in rows], dtype=np.float64) for k in ("chi", "mse", "max_abs", "max_bond", "seconds", "anomaly")),
    )
    return {"table": rows, "anomalies": [r["chi"] for r in rows if r["anomaly"]]}


def run_vqa(cfg: ExperimentConfig, out: Path, threads: int) -> dict[str, Any]:
    base = cfg.burgers()
    burgers = BurgersConfig(
        base.spec, base.nu, base.dt, base.t_final, base.initial_condition, base.allow_unstable, snapshot_stride=1
    )
    v = cfg.data["vqa"]
    steps = burgers.n_steps
    template = Ansatz.zeros(burgers.spec.L, v["layout"], v["layers"])
    shots = None if v["shots"] is None else ShotConfig(v["shots"], v["seed"])
    result = vqa_burgers_solve(
        burgers.initial_field(), steps, burgers.nu, burgers.dt, cfg.optimizer(), template,
        mode=v["mode"], shots=shots, seed=v["seed"],
    )
    _, ref = _fdm_reference(burgers)
    x = burgers.spec.x
    write_csv(out / "solution.csv", ("x", "u"), (x, result.fields[-1].values))
    _write_trajectory(out / "trajectory.csv", x, _times(burgers, list(range(steps + 1))), [f.values for f in result.fields])
    rows = [(k, i, c) for k, h in enumerate(result.histories) for i, c in enumerate(h)]
    write_csv(out / "vqa_history.csv", ("step", "iteration", "cost"), tuple(np.array(col) for col in zip(*rows)))
    rel = [
        float(np.linalg.norm(f.values - r.values) / max(np.linalg.norm(r.values), 1e-300))
        for f, r in zip(result.fields, ref)
    ]
    reductions = [float(h[0] / min(h)) if min(h) > 0 else float("inf") for h in result.histories]
    return {
        "n_steps": steps,
        "n_qubits": template.n_qubits,
        "n_params": template.K + 1,
        "initial_fit_cost": float(min(result.histories[0])),
        "cost_reduction_per_step": reductions[1:],
        "relative_l2_per_step": rel,
    }


def run_qpinn(cfg: ExperimentConfig, out: Path, threads: int) -> dict[str, Any]:
    burgers = cfg.burgers()
    q = cfg.data["qpinn"]
    opt = cfg.optimizer()
    sets = CollocationSets.sample(burgers, q["n_interior"], q["n_boundary"], q["n_initial"], q["collocation_seed"])
    lambdas = tuple(float(v) for v in q["lambdas"])
    classical = classical_reference_net(q["init_seed"], q["width"], q["hidden"]).with_lambdas(lambdas)
    if q["architecture"] == "hybrid":
        net = hybrid_reference_net(
            q["init_seed"], q["width"], q["n_qubits"], q["sublayers"], q["feature_map"], q["chebyshev_order"], q["reupload"]
        ).with_lambdas(lambdas)
    else:
        net = classical

    def fit(model, tag: str) -> tuple[Any, Any]:
        result = train(model, sets, burgers, opt, h=q["fd_step"])
        hist = result.history
        write_csv(
            out / f"{tag}training.csv",
            ("epoch", "total", "residual", "bc", "ic"),
            tuple(np.array(col) for col in zip(*hist)),
        )
        return result, evaluate_against_fdm(result.net, burgers, q["eval_times"])

    result, ev = fit(net, "")
    nx = len(ev.x)
    _write_trajectory(out / "prediction.csv", ev.x, ev.t, list(ev.predicted))
    x = burgers.spec.x
    write_csv(out / "solution.csv", ("x", "u"), (x, np.asarray(hybrid_forward(result.net, x, burgers.t_final))))
    dump_net(result.net, out / "net.txt")
    hist = result.history
    best = min(r.total for r in hist)
    metrics: dict[str, Any] = {
        "architecture": q["architecture"],
        "param_count": param_count(net),
        "epochs": len(hist) - 1,
        "initial_total_loss": hist[0].total,
        "final_total_loss": hist[-1].total,
        "best_total_loss": best,
        "loss_reduction": hist[0].total / best if best > 0 else float("inf"),
        "relative_l2_vs_fdm": ev.relative_l2,
        "evaluation_grid": [len(ev.t), nx],
        "input_derivatives": (
            f"finite differences on the network output, step {q['fd_step']:g}: "
            "central inside the box, second-order one-sided at its edges"
        ),
    }
    if q["architecture"] == "hybrid" and q["compare_classical"]:
        c_result, c_ev = fit(classical, "classical_")
        c_best = min(r.total for r in c_result.history)
        metrics["classical"] = {
            "param_count": param_count(classical),
            "best_total_loss": c_best,
            "relative_l2_vs_fdm": c_ev.relative_l2,
        }
        # > 1 means the hybrid network is the more precise of the two
        metrics["precision_ratio_classical_over_hybrid"] = c_ev.relative_l2 / ev.relative_l2
        metrics["loss_ratio_classical_over_hybrid"] = c_best / best
    return metrics


def run_compare(a: str, b: str) -> dict[str, Any]:
    try:
        ha, da = read_csv(a)
        hb, db = read_csv(b)
    except OSError as exc:
        raise ConfigError(f"cannot read {exc.filename}: {exc.strerror}") from exc
    if ha != hb:
        raise ConfigError(f"schemas differ: {','.join(ha)} vs {','.join(hb)}")
    if ha[-1] != "u" or da.shape != db.shape:
        raise ConfigError(f"incomparable solutions: shapes {da.shape} and {db.shape}")
    coords = da[:, :-1] - db[:, :-1]
    if coords.size and np.max(np.abs(coords)) > 1e-12 * max(1.0, float(np.max(np.abs(da[:, :-1])))):
        raise ConfigError("the two files sample different coordinates")
    ua, ub = da[:, -1], db[:, -1]
    ref = float(np.linalg.norm(ua))
    return {
        "a": str(a),
        "b": str(b),
        "rows": int(len(ua)),
        "mse": _mse(ua, ub),
        "max_abs": float(np.max(np.abs(ua - ub))) if len(ua) else 0.0,
        "relative_l2": float(np.linalg.norm(ua - ub) / ref) if ref > 0 else (0.0 if not np.any(ub) else float("inf")),
    }


RUNNERS: dict[str, Callable[[ExperimentConfig, Path, int], dict[str, Any]]] = {
    "fdm-solve": run_fdm,
    "tt-solve": run_tt,
    "vqa-solve": run_vqa,
    "qpinn-train": run_qpinn,
    "sweep-chi": run_sweep,
}


# -- plumbing -----------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors: exit status 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: config 'out' or ./qcfd-out/<command>)")
    common.add_argument("--seed", type=int, help="global seed; module seeds are split from it")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads for sweep-chi")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="e.g. burgers.nu=0.1 (repeatable)")

    parser = _Parser(prog="qcfd", description="Burgers solvers: finite differences, tensor trains, variational circuits and physics-informed networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=_HELP[name])
        p.add_argument("--config", help="TOML experiment file (default: built-in experiment)")
    p = sub.add_parser("compare", parents=[common], help="MSE and relative L2 between two solution CSVs")
    p.add_argument("a")
    p.add_argument("b")
    return parser


def _versions() -> dict[str, str]:
    return {"qcfd": __version__, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _prepare_out(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc.strerror or exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    return out


def _json_default(value: Any) -> Any:
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _execute(args: argparse.Namespace) -> dict[str, Any]:
    start = time.perf_counter()
    if args.command == "compare":
        out = _prepare_out(args.out or "qcfd-out/compare")
        results = run_compare(args.a, args.b)
        print(json.dumps(results, indent=2))
        record: dict[str, Any] = {"command": "compare", "results": results}
    else:
        overrides = list(args.override)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = load_config(args.config, COMMANDS[args.command], overrides)
        out = _prepare_out(args.out or cfg.data.get("out") or f"qcfd-out/{args.command}")
        np.seterr(over="ignore", invalid="ignore")
        try:
            results = RUNNERS[args.command](cfg, out, args.threads)
        except BlowUpError as exc:
            raise NumericalFailure(f"{exc} (step {exc.step})") from exc
        except DivergenceError as exc:
            last = exc.history[-1] if exc.history else float("nan")
            raise NumericalFailure(f"{exc}; {len(exc.history)} costs recorded, last {last:.6g}") from exc
        except FloatingPointError as exc:
            raise NumericalFailure(str(exc)) from exc
        record = {"command": args.command, "config": cfg.data, "seeds": cfg.seeds(), "results": results}
    record["versions"] = _versions()
    record["wall_time_seconds"] = time.perf_counter() - start
    (out / "metrics.json").write_text(json.dumps(record, indent=2, default=_json_default) + "\n", encoding="utf-8")
    return record


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        _execute(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
