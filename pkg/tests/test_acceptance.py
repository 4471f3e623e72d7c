"""Acceptance suite: ten end-to-end criteria, each timed against its budget.

Run with ``pytest tests/test_acceptance.py -s`` (or as a script) to see one
PASS/FAIL line per criterion.
"""

import json
import math
import time

import numpy as np
import pytest
import scipy.linalg

from conftest import random_function
from hilbert_ops import cli, experiments
from hilbert_ops.dynamics import TrajectorySpec, gen_trajectory
from hilbert_ops.function_space import SampledFunction, analyze, inner_product, make_basis, norm, project_onto_span, synthesize
from hilbert_ops.kernels import KernelDescriptor, fit_krr, predict_many
from hilbert_ops.operator_learning import (
    Dictionary,
    OperatorMatrix,
    SnapshotPairs,
    fit_edmd,
    fit_operator_ridge,
    forecast,
    koopman_eigs,
    ridge_objective,
)
from hilbert_ops.reasoning import analogy, compose, fit_relation_family, relational_kernel
from hilbert_ops.scattering import build_filter_bank, scatter, scattering_distance
from hilbert_ops.spectral import (
    ThresholdParams,
    circular_convolve,
    fit_threshold,
    forward_transform,
    soft_threshold_spectrum,
    spectral_convolve,
    threshold_gradient,
    threshold_loss,
)
from hilbert_ops.synthetic import analogy_store, relation_dataset, rng_stream


def _rng(n):
    return np.random.default_rng(1000 + n)


def criterion_1():
    rng = _rng(1)
    worst = [0.0, 0.0, 0.0]
    for n in (16, 64, 256):
        bases = [make_basis("fourier", n, n), make_basis("haar", n, n)]
        for i in range(100):
            f = random_function(rng, n)
            for b in bases:
                c = analyze(f, b)
                worst[0] = max(worst[0], abs(math.fsum(np.abs(c.coeffs) ** 2) - norm(f) ** 2))
                worst[1] = max(worst[1], float(np.max(np.abs(synthesize(c, b).samples - f.samples))))
            span = [random_function(rng, n) for _ in range(1 + i % 4)]
            r = f - project_onto_span(f, span)
            worst[2] = max(worst[2], max(abs(inner_product(r, v)) for v in span))
    assert worst[0] <= 1e-10 and worst[1] <= 1e-9 and worst[2] <= 1e-8, worst
    return f"parseval {worst[0]:.1e}, round trip {worst[1]:.1e}, residual {worst[2]:.1e}"


def _naive_rbf_gram(X, Y, s):
    return np.array([[math.exp(-float(np.sum((a - b) ** 2)) / (2 * s * s)) for b in Y] for a in X])


def criterion_2():
    rng = _rng(2)
    err = 0.0
    for _ in range(20):
        n, d = int(rng.integers(2, 51)), int(rng.integers(1, 4))
        X, y = rng.standard_normal((n, d)), rng.standard_normal(n)
        s, lam = rng.uniform(0.3, 1.0), 10 ** rng.uniform(-2, 0)
        m = fit_krr(X, y, KernelDescriptor.rbf(s, d), lam)
        oracle = scipy.linalg.solve(_naive_rbf_gram(X, X, s) + lam * np.eye(n), y)
        err = max(err, float(np.max(np.abs(m.alpha - oracle))))
    assert err <= 1e-10, err
    X = np.linspace(0, 1, 10)[:, None]
    y = rng.standard_normal(10)
    interp = float(np.max(np.abs(predict_many(fit_krr(X, y, KernelDescriptor.rbf(0.2), 0.0), X) - y)))
    assert interp <= 1e-6, interp
    for _ in range(10):
        Xr, yr = rng.standard_normal((15, 2)), rng.standard_normal(15)
        norms = [np.linalg.norm(fit_krr(Xr, yr, KernelDescriptor.rbf(0.6, 2), lam).alpha) for lam in np.logspace(-4, 1, 5)]
        assert all(b <= a for a, b in zip(norms, norms[1:])), norms
    return f"oracle {err:.1e}, interpolation {interp:.1e}, ridge paths monotone"


def criterion_3():
    rng = _rng(3)
    err = 0.0
    for n in (16, 32, 64):
        for _ in range(50):
            f, h = rng.standard_normal(n), rng.standard_normal(n)
            direct = np.array([sum(f[m] * h[(i - m) % n] for m in range(n)) for i in range(n)])
            err = max(err, float(np.max(np.abs(spectral_convolve(SampledFunction(f), SampledFunction(h)).samples - direct))))
            err = max(err, float(np.max(np.abs(circular_convolve(SampledFunction(f), SampledFunction(h)).samples - direct))))
    assert err <= 1e-8, err
    return f"max deviation {err:.1e}"


def criterion_4():
    rng = _rng(4)
    worst, h = 0.0, 1e-5
    for _ in range(20):
        n = 16
        s = forward_transform(SampledFunction(rng.standard_normal(n) + 1j * rng.standard_normal(n)))
        t = forward_transform(SampledFunction(rng.standard_normal(n) + 1j * rng.standard_normal(n)))
        theta = rng.uniform(0.2, 2.0, n)
        g = threshold_gradient(s, t, ThresholdParams(theta))
        for k in range(n):
            up, dn = theta.copy(), theta.copy()
            up[k] += h
            dn[k] -= h
            fd = (threshold_loss(s, t, ThresholdParams(up)) - threshold_loss(s, t, ThresholdParams(dn))) / (2 * h)
            worst = max(worst, abs(g[k] - fd) / max(abs(fd), 1e-12))
    assert worst <= 1e-4, worst
    n = 32
    theta_star = rng.uniform(0.2, 1.0, n)
    pairs = []
    for _ in range(20):
        x = forward_transform(SampledFunction(rng.standard_normal(n)))
        pairs.append((x, soft_threshold_spectrum(x, ThresholdParams(theta_star))))
    fit = fit_threshold(pairs, ThresholdParams(np.full(n, 0.5)), 0.5, 5000)
    active = np.mean([np.abs(p[0].coeffs) for p in pairs], axis=0) >= 0.1
    rel = float(np.max(np.abs(fit.params.theta[active] / theta_star[active] - 1)))
    assert active.any() and rel <= 0.05, rel
    return f"gradient rel err {worst:.1e}, planted theta within {100 * rel:.2f}% on {int(active.sum())} bins"


def criterion_5():
    rng = _rng(5)
    bank = build_filter_bank(4, 128)
    violations, slack = 0, -np.inf
    for i in range(100):
        f = random_function(rng, 128)
        g = f + random_function(rng, 128) * (10.0 ** rng.uniform(-3, 0)) if i % 2 else random_function(rng, 128)
        sf, sg = scatter(f, bank), scatter(g, bank)
        violations += scattering_distance(sf, sg) > norm(f - g)
        slack = max(slack, sf.energy() - norm(f) ** 2)
    assert violations == 0 and slack <= 1e-9, (violations, slack)
    signals = [rng.standard_normal(256) for _ in range(20)]
    ratios = []
    for J in (2, 3, 4):
        b = build_filter_bank(J, 256)
        r = [np.linalg.norm(scatter(SampledFunction(np.roll(x, 1)), b).flat() - scatter(SampledFunction(x), b).flat())
             / np.linalg.norm(scatter(SampledFunction(x), b).flat()) for x in signals]
        ratios.append(float(np.mean(r)))
    assert ratios[0] > ratios[1] > ratios[2], ratios
    return "0 violations, shift ratios " + ", ".join(f"{r:.3f}" for r in ratios)


def criterion_6():
    rng = _rng(6)
    A = np.array([[0.9, 0.1], [0.0, 0.8]])
    traj = [rng.standard_normal(2)]
    for _ in range(50):
        traj.append(A @ traj[-1])
    m = fit_edmd(SnapshotPairs.from_trajectory(np.array(traj)), Dictionary.identity(2), 0.0)
    k_err = float(np.max(np.abs(m.K.entries - A)))
    eigs = sorted(w.real for w, _ in koopman_eigs(m))
    e_err = max(abs(eigs[0] - 0.8), abs(eigs[1] - 0.9))
    fc = forecast(m, traj[0], 20)
    exact = np.array([np.linalg.matrix_power(A, t) @ traj[0] for t in range(1, 21)])
    f_err = float(np.max(np.abs(fc - exact)))
    assert k_err <= 1e-8 and e_err <= 1e-8 and f_err <= 1e-6, (k_err, e_err, f_err)
    pairs, full = gen_trajectory(TrajectorySpec("lorenz", (1.0, 1.0, 1.0), 0.01, 2000))
    cut = 1500
    lm = fit_edmd(SnapshotPairs(pairs.X[:cut], pairs.Y[:cut]), Dictionary.monomials(3, 2), 0.0)
    pred = np.array([forecast(lm, x, 1)[0] for x in pairs.X[cut:]])
    rel = np.sqrt(np.mean((pred - pairs.Y[cut:]) ** 2, axis=0)) / full.std(axis=0)
    assert np.all(rel <= 0.05), rel
    return f"K {k_err:.1e}, eigenvalues {e_err:.1e}, forecast {f_err:.1e}, Lorenz RMSE/std max {rel.max():.1e}"


def criterion_7():
    T = fit_operator_ridge([[1.0, 0.0]], [[0.0, 1.0]], 1.0)
    hand = float(np.max(np.abs(T.entries - np.array([[0.0, 0.0], [0.5, 0.0]]))))
    assert hand <= 1e-12, hand
    rng = _rng(7)
    for _ in range(10):
        X, Y = rng.standard_normal((12, 4)), rng.standard_normal((12, 3))
        lam = 10 ** rng.uniform(-2, 1)
        T = fit_operator_ridge(X, Y, lam)
        best = ridge_objective(T, X, Y, lam)
        for _ in range(50):
            D = rng.standard_normal(T.shape)
            D *= 1e-3 / np.linalg.norm(D)
            assert ridge_objective(OperatorMatrix(T.entries + D), X, Y, lam) >= best
    return f"hand example {hand:.1e}, 500 perturbations never improve"


def criterion_8():
    cfg = {"seed": 3, "trials": 20, "n": 64, "m": 32, "k": 4, "mu": 1e-4,
           "solver": "ista", "max_iters": 400000, "tol": 1e-15}
    rows = experiments.recovery_table(cfg)
    assert all(r["monotone"] for r in rows)
    assert all(r["converged"] for r in rows)
    sub = max(r["subgradient_max"] for r in rows)
    assert sub <= cfg["mu"] + 1e-6, sub
    rate = float(np.mean([r["support_recovered"] for r in rows]))
    assert rate >= 0.95, rate
    return f"ISTA monotone on 20/20, subgradient {sub:.4e}, recovery {100 * rate:.0f}%"


def criterion_9():
    data = relation_dataset(rng_stream(0, "acceptance.relations"), dim=8, n_subjects=24)
    fam = fit_relation_family(data.triples, data.store, 1e-9)
    op_err = max(float(np.max(np.abs(fam.operators[r].T.entries - Q))) for r, Q in data.planted.items())
    chain_err = max(
        float(np.linalg.norm(compose(fam.operators[r1], fam.operators[r2])(data.store[a]) - data.store[c]))
        for a, _, c, r1, r2 in data.chains
    )
    assert op_err <= 1e-3 and chain_err <= 1e-3, (op_err, chain_err)
    acc = {}
    for label, noise in (("exact", 0.0), ("noisy", 0.01)):
        ds = analogy_store(rng_stream(0, "acceptance.analogy"), 50, 32, 20, noise=noise)
        acc[label] = float(np.mean([analogy(a, b, c, ds.store)[0][0] == d for a, b, c, d in ds.quadruples]))
    assert acc["exact"] == 1.0 and acc["noisy"] >= 0.95, acc
    rng = _rng(9)
    kern = 0.0
    for d in (1, 2, 3, 4):
        for _ in range(10):
            x, y, xp, yp = rng.standard_normal((4, d))
            explicit = float(np.dot(np.outer(x, y).ravel(), np.outer(xp, yp).ravel()))
            kern = max(kern, abs(relational_kernel((x, y), (xp, yp), KernelDescriptor.linear(d)) - explicit))
    assert kern <= 1e-12, kern
    return f"operators {op_err:.1e}, chains {chain_err:.1e}, analogy {acc['exact']:.2f}/{acc['noisy']:.2f}, tensor {kern:.1e}"


def criterion_10(tmp_path):
    for command in sorted(cli.COMMANDS):
        outs = []
        for rep in ("a", "b"):
            out = tmp_path / command / rep
            assert cli.main([command, "--seed", "11", "--out", str(out)]) == 0
            cli.validate_report(json.loads((out / "metrics.json").read_text()))
            outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert outs[0] == outs[1], command
    return f"{len(cli.COMMANDS)} commands byte-identical, reports schema-valid"


BUDGETS = {1: 10, 2: 10, 3: 5, 4: 60, 5: 60, 6: 60, 7: 10, 8: 60, 9: 30, 10: 120}


def _report(number, fn, *args):
    start = time.perf_counter()
    try:
        detail = fn(*args)
    except AssertionError as exc:
        elapsed = time.perf_counter() - start
        return False, f"FAIL criterion {number}: {exc!r} ({elapsed:.1f}s)", elapsed
    elapsed = time.perf_counter() - start
    ok = elapsed < BUDGETS[number]
    status = "PASS" if ok else "FAIL"
    note = "" if ok else f" over {BUDGETS[number]}s budget"
    return ok, f"{status} criterion {number}: {detail} ({elapsed:.1f}s{note})", elapsed


@pytest.mark.parametrize("number", sorted(BUDGETS))
def test_criterion(number, tmp_path, capsys):
    fn = globals()[f"criterion_{number}"]
    ok, line, _ = _report(number, fn, *((tmp_path,) if number == 10 else ()))
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    import sys
    import tempfile
    from pathlib import Path

    results = []
    for number in sorted(BUDGETS):
        fn = globals()[f"criterion_{number}"]
        with tempfile.TemporaryDirectory() as tmp:
            ok, line, _ = _report(number, fn, *((Path(tmp),) if number == 10 else ()))
        print(line, flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
