"""
Seeded end-to-end experiments behind the CLI subcommands.

Each ``run_*`` function takes a plain config dict, returns a metrics dict
and writes its artifacts into ``out``. Randomness comes only from
``rng_stream(config["seed"], <consumer>)``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .dynamics import TrajectorySpec, gen_trajectory
from .function_space import SampledFunction, analyze, make_basis, norm, project_onto_span, synthesize, inner_product
from .kernels import KernelDescriptor, fit_krr, gram_matrix, predict_many
from .operator_learning import (
    Dictionary,
    SnapshotPairs,
    fit_edmd,
    forecast,
    koopman_eigs,
)
from .reasoning import analogy, compose, fit_relation_family
from .scattering import build_filter_bank, scatter
from .sparse_recovery import (
    SensingSystem,
    debias,
    detect_support,
    fista,
    ista,
    planted_sparse,
    sensing_matrix,
)
from .spectral import (
    MultiplierBank,
    ThresholdParams,
    apply_multiplier,
    fit_threshold,
    forward_transform,
    inverse_transform,
    soft_threshold_spectrum,
)
from .synthetic import analogy_store, relation_dataset, rng_stream


def thread_limit() -> int:
    """Worker cap from HILBERT_OPS_THREADS (default: every core)."""
    raw = os.environ.get("HILBERT_OPS_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _max(values) -> float:
    return float(max(values)) if len(values) else 0.0


# -- basis -----------------------------------------------------------------------


def run_basis(cfg: dict, out: Path) -> dict:
    n, kind = cfg["n"], cfg["kind"]
    m = cfg["m"] or n
    basis = make_basis(kind, m, n)
    rng = rng_stream(cfg["seed"], "basis.functions")
    span_rng = rng_stream(cfg["seed"], "basis.spans")
    parseval, roundtrip, residual = [], [], []
    first = None
    for i in range(cfg["trials"]):
        f = SampledFunction(rng.standard_normal(n))
        c = analyze(f, basis)
        if first is None:
            first = (f, c)
        if m == n:
            parseval.append(abs(float(np.sum(np.abs(c.coeffs) ** 2)) - norm(f) ** 2))
            roundtrip.append(float(np.max(np.abs(synthesize(c, basis).samples - f.samples))))
        vs = [SampledFunction(span_rng.standard_normal(n)) for _ in range(3)]
        p = project_onto_span(f, vs)
        residual.append(_max([abs(inner_product(f - p, v)) for v in vs]))
    io.function_to_csv(first[0], out / "function.csv")
    io.dump_json({"basis": basis.kind.value, "coeffs": io.function_to_json(SampledFunction(first[1].coeffs))},
                 out / "coefficients.json")
    return {
        "basis": basis.kind.value,
        "n": n,
        "m": m,
        "complete": m == n,
        "max_parseval_error": _max(parseval),
        "max_roundtrip_error": _max(roundtrip),
        "max_projection_residual": _max(residual),
    }


# -- krr -------------------------------------------------------------------------


def _target(x):
    return np.sin(2 * np.pi * x)


def run_krr(cfg: dict, out: Path) -> dict:
    kernel_kwargs = {"rbf": {"bandwidth": cfg["bandwidth"]}, "polynomial": {"degree": cfg["degree"], "offset": cfg["offset"]}, "linear": {}}
    if cfg["train"]:
        X, y = io.training_set_from_csv(cfg["train"])
        clean = None
    else:
        rng = rng_stream(cfg["seed"], "krr.data")
        X = np.sort(rng.uniform(0, 1, cfg["n_train"]))[:, None]
        clean = _target(X[:, 0])
        y = clean + cfg["noise"] * rng.standard_normal(cfg["n_train"])
        io.training_set_to_csv(X, y, out / "train.csv")
    k = KernelDescriptor(cfg["kernel"], dim=X.shape[1], **kernel_kwargs[cfg["kernel"]])
    model = fit_krr(X, y, k, cfg["lam"])
    K = gram_matrix(k, X)
    residual = float(np.max(np.abs((K + cfg["lam"] * np.eye(len(y))) @ model.alpha - y)))
    train_rmse = float(np.sqrt(np.mean((predict_many(model, X) - y) ** 2)))
    metrics = {"n_train": int(len(y)), "alpha_residual": residual, "train_rmse": train_rmse}
    if clean is not None:
        grid = np.linspace(0, 1, cfg["n_test"])[:, None]
        pred = predict_many(model, grid)
        metrics["test_rmse"] = float(np.sqrt(np.mean((pred - _target(grid[:, 0])) ** 2)))
        io.training_set_to_csv(grid, pred, out / "predictions.csv")
    io.save_kernel_model(model, out / "model.json")
    return metrics


# -- filter ----------------------------------------------------------------------


def planted_threshold_problem(seed: int, n: int, n_pairs: int):
    rng = rng_stream(seed, "filter.planted")
    theta_star = rng.uniform(0.2, 1.0, n)
    pairs = []
    for _ in range(n_pairs):
        s = forward_transform(SampledFunction(rng.standard_normal(n)))
        pairs.append((s, soft_threshold_spectrum(s, ThresholdParams(theta_star))))
    return theta_star, pairs


def run_filter(cfg: dict, out: Path) -> dict:
    n = cfg["n"]
    if cfg["mode"] == "lowpass":
        rng = rng_stream(cfg["seed"], "filter.signal")
        s = forward_transform(SampledFunction(rng.standard_normal(n)))
        keep = np.zeros(n)
        keep[: cfg["cutoff"]] = 1.0
        filtered = apply_multiplier(s, MultiplierBank(keep))
        io.spectrum_to_csv(filtered, out / "spectrum.csv")
        io.function_to_csv(inverse_transform(filtered), out / "filtered.csv")
        retained = float(np.sum(np.abs(s.coeffs[: cfg["cutoff"]]) ** 2))
        return {
            "mode": "lowpass",
            "input_energy": s.energy(),
            "output_energy": filtered.energy(),
            "energy_bookkeeping_error": abs(filtered.energy() - retained),
        }
    theta_star, pairs = planted_threshold_problem(cfg["seed"], n, cfg["pairs"])
    fit = fit_threshold(pairs, ThresholdParams(np.full(n, cfg["theta0"])), cfg["lr"], cfg["steps"])
    mean_mag = np.abs(np.vstack([p[0].coeffs for p in pairs])).mean(axis=0)
    active = mean_mag >= 0.1
    rel_err = np.abs(fit.params.theta / theta_star - 1.0)
    io.save_threshold(fit.params, out / "theta.json", fit.loss_trace)
    return {
        "mode": "threshold",
        "initial_loss": fit.initial_loss,
        "final_loss": fit.final_loss,
        "active_bins": int(active.sum()),
        "max_relative_theta_error_active": _max(rel_err[active].tolist()),
    }


# -- scatter ---------------------------------------------------------------------


def run_scatter(cfg: dict, out: Path) -> dict:
    if cfg["signal"]:
        f = io.function_from_csv(cfg["signal"])
    else:
        f = SampledFunction(rng_stream(cfg["seed"], "scatter.signal").standard_normal(cfg["n"]))
    bank = build_filter_bank(cfg["J"], f.n)
    S = scatter(f, bank, cfg["order"])
    io.dump_json(io.scattering_to_json(S), out / "scattering.json")
    io.scattering_to_csv(S, out / "scattering.csv")
    return {
        "n": f.n,
        "J": cfg["J"],
        "order": cfg["order"],
        "paths": len(S.paths()),
        "energy": S.energy(),
        "signal_energy": norm(f) ** 2,
        "littlewood_paley_max": float(bank.littlewood_paley().max()),
    }


# -- koopman ---------------------------------------------------------------------

LINEAR_DEMO_MATRIX = np.array([[0.9, 0.1], [0.0, 0.8]])


def koopman_data(cfg: dict):
    rng = rng_stream(cfg["seed"], "koopman.x0")
    system = cfg["system"]
    if system == "linear":
        x0 = np.array(cfg["x0"]) if cfg["x0"] else rng.standard_normal(2)
        traj = [x0]
        for _ in range(cfg["steps"]):
            traj.append(LINEAR_DEMO_MATRIX @ traj[-1])
        traj = np.array(traj)
        return SnapshotPairs.from_trajectory(traj), traj
    if cfg["x0"]:
        x0 = tuple(cfg["x0"])
    elif system == "lorenz":
        x0 = tuple(np.array([1.0, 1.0, 1.0]) + 0.1 * rng.standard_normal(3))
    else:
        x0 = tuple(0.5 * rng.standard_normal(2))
    return gen_trajectory(TrajectorySpec(system, x0, cfg["dt"], cfg["steps"]))


def _dictionary(cfg: dict, p: int) -> Dictionary:
    if cfg["dictionary"] == "identity":
        return Dictionary.identity(p)
    return Dictionary.monomials(p, cfg["degree"])


def run_koopman(cfg: dict, out: Path) -> dict:
    pairs, traj = koopman_data(cfg)
    n_train = int(round(cfg["train_fraction"] * len(pairs)))
    train = SnapshotPairs(pairs.X[:n_train], pairs.Y[:n_train])
    model = fit_edmd(train, _dictionary(cfg, pairs.X.shape[1]), cfg["lam"])
    eigs = koopman_eigs(model)
    test_X, test_Y = pairs.X[n_train:], pairs.Y[n_train:]
    metrics = {"system": cfg["system"], "n_train": n_train, "n_test": int(len(test_X)), "observables": model.K.shape[0]}
    if len(test_X):
        pred = np.array([forecast(model, x, 1)[0] for x in test_X])
        rmse = np.sqrt(np.mean((pred - test_Y) ** 2, axis=0))
        metrics["one_step_rmse_over_std"] = (rmse / traj.std(axis=0)).tolist()
    horizon = min(cfg["horizon"], len(traj) - 1)
    start = n_train
    if start + horizon < len(traj):
        fc = forecast(model, traj[start], horizon)
        metrics["forecast_max_error"] = float(np.max(np.abs(fc - traj[start + 1: start + 1 + horizon])))
        io.trajectory_to_csv(fc, out / "forecast.csv")
    metrics["leading_eigenvalues"] = [[w.real, w.imag] for w, _ in eigs[:5]]
    io.save_koopman(model, out / "model.json")
    io.eigenvalues_to_csv(eigs, out / "eigenvalues.csv")
    return metrics


# -- reason ----------------------------------------------------------------------


def run_reason(cfg: dict, out: Path) -> dict:
    data = relation_dataset(rng_stream(cfg["seed"], "reason.relations"), dim=cfg["dim"], n_subjects=cfg["subjects"])
    family = fit_relation_family(data.triples, data.store, cfg["lam"])
    op_err = {r: float(np.max(np.abs(family.operators[r].T.entries - data.planted[r]))) for r in sorted(data.planted)}
    chain_err = []
    for start, _, end, r1, r2 in data.chains:
        chained = compose(family.operators[r1], family.operators[r2])
        chain_err.append(float(np.linalg.norm(chained(data.store[start]) - data.store[end])))
    acc = {}
    for label, noise in (("exact", 0.0), ("noisy", cfg["noise"])):
        ds = analogy_store(
            rng_stream(cfg["seed"], "reason.analogy"),
            n_entities=cfg["entities"],
            dim=cfg["analogy_dim"],
            n_quadruples=cfg["quadruples"],
            noise=noise,
        )
        hits = [analogy(a, b, c, ds.store, metric=cfg["metric"])[0][0] == d for a, b, c, d in ds.quadruples]
        acc[label] = float(np.mean(hits))
        if label == "noisy":
            io.save_store(ds.store, out / "analogy_store.json")
    io.save_relation_family(family, out / "relations.json")
    io.save_store(data.store, out / "store.json")
    io.triples_to_csv(data.triples, out / "triples.csv")
    return {
        "relations": sorted(family.operators),
        "total_objective": family.total_objective,
        "max_operator_error": op_err,
        "max_chain_error": _max(chain_err),
        "analogy_top1_exact": acc["exact"],
        "analogy_top1_noisy": acc["noisy"],
    }


# -- recover ---------------------------------------------------------------------


def recovery_trial(seed: int, index: int, n: int, m: int, k: int, mu: float, solver: str, max_iters: int, tol: float) -> dict:
    rng = rng_stream(seed, f"recover.trial.{index}")
    phi_seed = int(rng.integers(0, 2**31 - 1))
    sys = SensingSystem.from_phi(sensing_matrix(m, n, phi_seed))
    alpha_true = planted_sparse(n, k, rng)
    y = sys.A @ alpha_true
    run = (fista if solver == "fista" else ista)(y, sys, mu, max_iters=max_iters, tol=tol)
    refit = debias(run.alpha, y, sys)
    support_ok = set(detect_support(refit).tolist()) == set(np.flatnonzero(alpha_true).tolist())
    trace = np.asarray(run.objective_trace)
    return {
        "trial": index,
        "support_recovered": bool(support_ok),
        "error": float(np.linalg.norm(refit - alpha_true)),
        "iterations": run.iterations,
        "converged": run.converged,
        "monotone": bool(np.all(np.diff(trace) <= 0)),
        "subgradient_max": float(np.max(np.abs(sys.A.T @ (sys.A @ run.alpha - y)))),
    }


def recovery_table(cfg: dict) -> list[dict]:
    args = (cfg["n"], cfg["m"], cfg["k"], cfg["mu"], cfg["solver"], cfg["max_iters"], cfg["tol"])
    with ThreadPoolExecutor(max_workers=min(thread_limit(), cfg["trials"])) as pool:
        futures = [pool.submit(recovery_trial, cfg["seed"], i, *args) for i in range(cfg["trials"])]
        return [f.result() for f in futures]


def run_recover(cfg: dict, out: Path) -> dict:
    rows = recovery_table(cfg)
    io.dump_json({"trials": rows}, out / "results.json")
    header = ["trial", "support_recovered", "error", "iterations", "converged"]
    io._write_rows(out / "recovery_table.csv", [[r[h] if not isinstance(r[h], float) else repr(r[h]) for h in header] for r in rows], header)
    return {
        "solver": cfg["solver"],
        "trials": cfg["trials"],
        "recovery_rate": float(np.mean([r["support_recovered"] for r in rows])),
        "max_error": _max([r["error"] for r in rows]),
        "all_monotone": all(r["monotone"] for r in rows) if cfg["solver"] == "ista" else None,
        "max_subgradient": _max([r["subgradient_max"] for r in rows]),
        "mean_iterations": float(np.mean([r["iterations"] for r in rows])),
    }


# -- gen-data --------------------------------------------------------------------


def run_gen_data(cfg: dict, out: Path) -> dict:
    kind = cfg["kind"]
    if kind in ("lorenz", "duffing"):
        koop_cfg = {"seed": cfg["seed"], "system": kind, "x0": cfg["x0"], "dt": cfg["dt"], "steps": cfg["steps"]}
        pairs, traj = koopman_data(koop_cfg)
        io.trajectory_to_csv(traj, out / "trajectory.csv")
        io.snapshots_to_csv(pairs, out / "snapshots.csv")
        return {"kind": kind, "snapshots": len(pairs), "max_abs": float(np.max(np.abs(traj)))}
    if kind == "embeddings":
        ds = analogy_store(rng_stream(cfg["seed"], "gen.embeddings"), n_entities=cfg["entities"], dim=cfg["dim"],
                           n_quadruples=cfg["quadruples"], noise=cfg["noise"])
        io.save_store(ds.store, out / "store.json")
        io._write_rows(out / "quadruples.csv", [list(q) for q in ds.quadruples], ["a", "b", "c", "answer"])
        return {"kind": kind, "entities": len(ds.store), "quadruples": len(ds.quadruples)}
    if kind == "relations":
        data = relation_dataset(rng_stream(cfg["seed"], "gen.relations"), dim=cfg["dim"], n_subjects=cfg["entities"])
        io.save_store(data.store, out / "store.json")
        io.triples_to_csv(data.triples, out / "triples.csv")
        return {"kind": kind, "entities": len(data.store), "triples": len(data.triples)}
    rng = rng_stream(cfg["seed"], "gen.sparse")
    Phi = sensing_matrix(cfg["m"], cfg["n"], int(rng.integers(0, 2**31 - 1)))
    alpha = planted_sparse(cfg["n"], cfg["k"], rng)
    io.matrix_to_csv(Phi, out / "phi.csv")
    io.matrix_to_csv(alpha[:, None], out / "alpha.csv")
    io.matrix_to_csv((Phi @ alpha)[:, None], out / "y.csv")
    return {"kind": kind, "m": cfg["m"], "n": cfg["n"], "k": cfg["k"]}
