"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Tolerances are the contractual ones; nothing here is loosened to make a
criterion pass.
"""
from __future__ import annotations

import itertools
import math
import time

import numpy as np
from scipy import integrate

from fsairy import airy, basis
from fsairy.fredholm import RuleParams, gap_probability, gap_probability_topline, tracy_widom_gue
from fsairy.kernels import kernel_airy_extended, kernel_rescaled, rescaled_block
from fsairy.quadrature import semiinfinite_rule
from fsairy.rwalk import (
    LAZY_STEP_LAW,
    SIMPLE_STEP_LAW,
    WalkModel,
    enumerate_paths,
    scaled_cdf_sup_error,
    transfer_marginal,
)
from fsairy.sampling import path_generator, sample_stationary_dpp_batch, simulate_dyson_fs
from fsairy.study import load_config, run_study

M_DOUBLING = (8, 16, 32, 64, 128)


def verdict(number, title, ok, detail, started):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d} [{title}] {detail} ({time.perf_counter() - started:.1f}s)"
    print("\n" + line)
    assert ok, line


def strictly_decreasing(values):
    return all(b < a for a, b in zip(values, values[1:]))


def fmt(values):
    return "[" + ", ".join(f"{v:.4g}" for v in values) + "]"


def test_criterion_01_top_path_law_vs_tracy_widom():
    t0 = time.perf_counter()
    grid = (-2.0, -1.0, 0.0, 1.0, 2.0)
    f2 = {s: tracy_widom_gue(s) for s in grid}
    sup = []
    for m in M_DOUBLING:
        sup.append(max(abs(gap_probability_topline(m, [0.0], [s], estimate_error=False).value - f2[s])
                       for s in grid))
    ok = strictly_decreasing(sup) and sup[-1] <= 0.02
    verdict(1, "top-path law -> F2", ok,
            f"sup_S err over M={list(M_DOUBLING)}: {fmt(sup)}; need decreasing and <= 0.02 at M=128", t0)


def test_criterion_02_kernel_convergence():
    t0 = time.perf_counter()
    points = [(a, ta, b, tb) for ta, tb in ((0.0, 0.0), (0.5, 0.0)) for a in (-1, 0, 1) for b in (-1, 0, 1)]
    ref = [kernel_airy_extended(*p) for p in points]
    worst = [max(abs(kernel_rescaled(m, *p) - r) for p, r in zip(points, ref)) for m in M_DOUBLING]
    ok = strictly_decreasing(worst) and worst[-1] <= 0.01
    verdict(2, "rescaled kernel -> extended Airy kernel", ok,
            f"max err on 18 points over M={list(M_DOUBLING)}: {fmt(worst)}; need decreasing and <= 0.01 at M=128", t0)


def test_criterion_03_kernel_bounds():
    t0 = time.perf_counter()
    xi = np.linspace(-2.0, 8.0, 41)
    weight = np.exp(xi[:, None] + xi[None, :])
    pos, neg = 0.0, 0.0
    for m in (16, 64):
        for gap in (0.0, 0.5, 2.0):
            pos = max(pos, float(np.max(np.abs(rescaled_block(m, xi, gap, xi, 0.0)) * weight)))
        for gap in (0.5, 2.0):
            neg = max(neg, float(np.max(np.abs(rescaled_block(m, xi, 0.0, xi, gap)))))
    ok = pos <= 10 and neg <= 10
    verdict(3, "kernel bounds", ok, f"max |K|e^(xi+xi')={pos:.4g} (tau_i>=tau_j), max |K|={neg:.4g} (tau_i<tau_j); need <= 10", t0)


def test_criterion_04_rank_one_fredholm_identity():
    t0 = time.perf_counter()
    a1 = abs(airy.airy_zero(1)[1])
    omega1 = airy.airy_zero(1)[0]
    worst = 0.0
    for s in np.linspace(0.0, 9.5, 20):
        tail = integrate.quad(lambda x: (airy.ai(x - omega1) / a1) ** 2, s, s + 60, limit=400,
                              epsabs=1e-13, epsrel=1e-12)[0]
        det = gap_probability(1, [0.0], [s], estimate_error=False).value
        worst = max(worst, abs(det - (1.0 - tail)))
    verdict(4, "rank-one Fredholm identity", worst <= 1e-10, f"max deviation over 20 cutoffs {worst:.3g}; need <= 1e-10", t0)


def test_criterion_05_orthonormality_and_eigenrelations():
    t0 = time.perf_counter()
    rule = semiinfinite_rule(0.0, n_per_panel=80)
    p = basis.phi_matrix(30, rule.nodes)
    gram = float(np.max(np.abs((p * rule.weights) @ p.T - np.eye(30))))
    h = 1e-4
    x = np.linspace(-10, 10, 201)
    ode = float(np.max(np.abs((airy.ai(x + h) - 2 * airy.ai(x) + airy.ai(x - h)) / h**2 - x * airy.ai(x))))
    y = np.linspace(0.1, 10, 100)
    omega = airy.zeros_and_derivs(10)[0]
    eig = 0.0
    for k in range(1, 11):
        f = basis.phi(k, y)
        d2 = (basis.phi(k, y + h) - 2 * f + basis.phi(k, y - h)) / h**2
        eig = max(eig, float(np.max(np.abs(-0.5 * d2 + 0.5 * y * f - 0.5 * omega[k - 1] * f))))
    ok = gram <= 1e-7 and ode <= 1e-6 and eig <= 1e-6
    verdict(5, "orthonormality and eigenrelations", ok,
            f"Gram dev (K=30) {gram:.3g} <= 1e-7; ODE residual {ode:.3g} <= 1e-6; eigen residual {eig:.3g} <= 1e-6", t0)


def test_criterion_06_normalization_identity():
    t0 = time.perf_counter()
    worst = 0.0
    for a in (0.0, 1.0, airy.airy_zero(1)[0], airy.airy_zero(2)[0]):
        lhs = integrate.quad(lambda x: airy.ai(x - a) ** 2, 0, 60, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
        rhs = airy.ai_prime(-a) ** 2 + a * airy.ai(-a) ** 2
        worst = max(worst, abs(lhs - rhs))
    verdict(6, "normalization identity", worst <= 1e-8, f"max deviation over 4 shifts {worst:.3g}; need <= 1e-8", t0)


def test_criterion_07_samplers_vs_fredholm():
    t0 = time.perf_counter()
    top = sample_stationary_dpp_batch(2, 100_000, path_generator(2024, 0))[:, -1]
    z = []
    for s in np.linspace(2.0, 6.5, 10):
        p = gap_probability(2, [0.0], [s], estimate_error=False).value
        z.append(abs(np.mean(top <= s) - p) / math.sqrt(p * (1 - p) / top.size))
    ens = simulate_dyson_fs(3, None, 30.0, 1e-3, 2024, n_paths=500, record_every=20, burn_in=2.0)
    start = int(round(ens.burn_in / ens.time_step))
    tops = ens.top()[:, start:].ravel()
    edges = np.linspace(2.5, 9.5, 15)
    cdf = np.array([gap_probability(3, [0.0], [s], estimate_error=False).value for s in edges])
    probs = np.diff(np.concatenate([[0.0], cdf, [1.0]]))
    hist = np.histogram(tops, np.concatenate([[-np.inf], edges, [np.inf]]))[0] / tops.size
    tv = 0.5 * float(np.abs(hist - probs).sum())
    ok = max(z) <= 3 and tv <= 0.03 and ens.ordering_certificate()
    verdict(7, "samplers vs Fredholm", ok,
            f"DPP M=2 max |z| {max(z):.3g} <= 3 at 10 cutoffs; SDE M=3 TV {tv:.3g} <= 0.03 "
            f"({ens.n_paths} paths, {ens.rejections} rejections)", t0)


def test_criterion_08_random_walk_exactness_and_scaling():
    t0 = time.perf_counter()
    worst = 0.0
    cases = 0
    for law, n, h in itertools.product((LAZY_STEP_LAW, SIMPLE_STEP_LAW), range(4), range(1, 7)):
        for u, v in itertools.product(range(1, h + 1), repeat=2):
            model = WalkModel(law, lam=0.37, n_half=n, h_max=h, u=u, v=v)
            paths = list(enumerate_paths(model))
            if not paths:
                continue
            total = sum(w for _, w in paths)
            for k in range(-n, n + 1):
                ref = np.zeros(h)
                for path, w in paths:
                    ref[path[k + n] - 1] += w
                worst = max(worst, float(np.max(np.abs(transfer_marginal(model, k).probs - ref / total))))
                cases += 1
    sup = [scaled_cdf_sup_error(n) for n in (500, 1000, 2000, 4000)]
    ok = worst <= 1e-13 and strictly_decreasing(sup)
    verdict(8, "random-walk exactness and scaling", ok,
            f"{cases} marginals vs enumeration max err {worst:.3g}; sup err N=500..4000 {fmt(sup)} decreasing", t0)


def test_criterion_09_tracy_widom_self_consistency():
    t0 = time.perf_counter()
    base = tracy_widom_gue(0.0)
    fine = tracy_widom_gue(0.0, RuleParams().doubled())
    grid = np.linspace(-5.0, 3.0, 50)
    f2 = [tracy_widom_gue(s) for s in grid]
    left, right = tracy_widom_gue(-10.0), tracy_widom_gue(8.0)
    stable = round(base, 4) == round(fine, 4) and abs(base - 0.9694) <= 1e-4
    mono = all(b >= a for a, b in zip(f2, f2[1:]))
    ok = stable and mono and left < 1e-6 and right > 1 - 1e-8
    verdict(9, "Tracy-Widom self-consistency", ok,
            f"F2(0)={base:.8f} doubled {fine:.8f}; monotone on 50 points: {mono}; "
            f"F2(-10)={left:.3g} < 1e-6; 1-F2(8)={1 - right:.3g} < 1e-8", t0)


STUDIES = {
    "kernel-convergence": "m_list = 8,16\n",
    "theorem1": "m_list = 8,16\ns_grid = -1:1:3\n",
    "tw2-table": "s_grid = -4:2:7\n",
    "sde-vs-fredholm": "m = 2\nn_paths = 20\nt_end = 3\nburn_in = 1\nseed = 7\n",
    "rw-scaling": "n_list = 500,1000\n",
}


def test_criterion_10_study_determinism(tmp_path, monkeypatch):
    t0 = time.perf_counter()
    identical = {}
    for kind, body in STUDIES.items():
        runs = []
        for threads, sub in (("1", "a"), ("3", "b")):
            monkeypatch.setenv("FS_AIRY_THREADS", threads)
            cfg_path = tmp_path / f"{kind}.cfg"
            cfg_path.write_text(f"kind = {kind}\n{body}output_dir = {tmp_path / kind / sub}\n")
            res = run_study(load_config(cfg_path))
            runs.append({p.name: p.read_bytes() for p in res.paths})
        identical[kind] = runs[0] == runs[1] and all(runs[0].values())
    ok = all(identical.values())
    verdict(10, "study determinism", ok, ", ".join(f"{k}: {'identical' if v else 'DIFFERENT'}" for k, v in identical.items()), t0)
