"""Quick oracle checks on small random instances (used by ``irsadmm validate``).

Each check returns ``(name, passed, detail)``. They are cheap versions of
the test-suite properties, meant as a smoke test of an installed build.
"""
from __future__ import annotations

import itertools

import numpy as np

from . import kernels
from .baselines import solve_centralized
from .consensus import ADMMOptions, backhaul_symbols, build_ring, initial_message, initial_state, admm_visit, run_decentralized
from .fpcore import (
    BeamState,
    cross_terms,
    fp_objective,
    sinr_from_cross,
    update_gamma,
    update_w_b,
    update_xi,
)
from .irsopt import max_eigenvalue, quad_value, solve_theta_b, QuadraticForm
from .model import ScenarioConfig, generate_scenario, make_rng

SMALL = ScenarioConfig(B=3, R=1, K=2, N=4, Nt=3)


def _random_state(sc, ch, rng):
    W = rng.standard_normal((ch.B, ch.K, ch.Nt)) + 1j * rng.standard_normal((ch.B, ch.K, ch.Nt))
    W *= np.sqrt(sc.P[:, None, None] / np.sum(np.abs(W) ** 2, axis=(1, 2), keepdims=True))
    theta = np.exp(2j * np.pi * rng.random(ch.NR))
    return W, np.tile(theta, (ch.B, 1))


def check_tightness(seed=0):
    sc, ch = generate_scenario(SMALL, seed)
    W, th = _random_state(sc, ch, make_rng(seed, 7))
    ct = cross_terms(ch, W, th)
    g = update_gamma(sc, ct)
    xi = update_xi(ct, g, sc.omega, sc.noise)
    f = fp_objective(sc, ct, g, xi)
    ref = -float(np.sum(sc.omega * np.log1p(sinr_from_cross(ct.S, sc.noise))))
    err = abs(f - ref) / max(1.0, abs(ref))
    return "surrogate tightness", err < 1e-8, f"rel err {err:.2e}"


def check_w_update(seed=0):
    sc, ch = generate_scenario(SMALL, seed)
    W, th = _random_state(sc, ch, make_rng(seed, 8))
    ct = cross_terms(ch, W, th)
    g = update_gamma(sc, ct)
    xi = update_xi(ct, g, sc.omega, sc.noise)
    st = BeamState(W, th, g, xi, np.zeros((ch.B, 0), complex), np.zeros(ch.B))
    Wb, mu = update_w_b(0, sc, ch, st, ct)
    p = float(np.sum(np.abs(Wb) ** 2))
    W2 = W.copy()
    W2[0] = Wb
    f_new = fp_objective(sc, cross_terms(ch, W2, th), g, xi)
    f_old = fp_objective(sc, ct, g, xi)
    ok = p <= sc.P[0] * (1 + 1e-8) and f_new <= f_old + 1e-12 * abs(f_old) and mu * (sc.P[0] - p) <= 1e-7 * max(mu, 1.0)
    return "W update feasibility and descent", bool(ok), f"power {p:.3e}/{sc.P[0]:.3e}, mu {mu:.3e}"


def check_mm_grid(seed=0):
    rng = make_rng(seed, 9)
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    Z = A @ A.conj().T
    q = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    qf = QuadraticForm(Z, q, max_eigenvalue(Z))
    th = solve_theta_b(np.ones(2, complex), qf, inner_iters=2000, tol=0.0)
    grid = np.exp(1j * np.linspace(0, 2 * np.pi, 721)[:-1])
    best = min(quad_value(Z, q, np.array([a, b])) for a, b in itertools.product(grid, grid))
    got = quad_value(Z, q, th)
    return "MM vs grid (NR=2)", got <= best + 1e-3 * max(1.0, abs(best)), f"mm {got:.6f} grid {best:.6f}"


def check_messages(seed=0):
    sc, ch = generate_scenario(SMALL, seed)
    graph = build_ring(ch.B)
    opts = ADMMOptions(rho_mode="absolute", rho=1e-3)
    st = initial_state(sc, ch, graph, opts.rho)
    msg = initial_message(ch, st, graph)
    for i in range(2 * ch.B):
        st, msg = admm_visit(i % ch.B, st, msg, sc, ch, graph, opts)
    ct = cross_terms(ch, st.W, st.theta)
    err = max(np.linalg.norm(msg.t - graph.residual(st.theta)),
              np.linalg.norm(msg.S - ct.S) / np.linalg.norm(ct.S))
    return "message consistency", err < 1e-9, f"err {err:.2e}"


def check_accounting(seed=0):
    sc, ch = generate_scenario(SMALL, seed)
    _, tr = run_decentralized(sc, ch, ADMMOptions(max_rounds=3, tol_rate=0.0))
    want = 3 * backhaul_symbols(ch.B, ch.K, sc.N, sc.R, ch.B)
    return "backhaul accounting", tr.cum_symbols[-1] == want, f"{tr.cum_symbols[-1]} vs {want}"


def check_single_bs(seed=0):
    sc, ch = generate_scenario(SMALL.with_(B=1), seed)
    _, td = run_decentralized(sc, ch, ADMMOptions(max_rounds=5, tol_rate=0.0))
    _, tc = solve_centralized(sc, ch, ADMMOptions(max_rounds=5, tol_rate=0.0))
    same = td.sum_rate_bits == tc.sum_rate_bits
    return "single-BS equivalence", same, f"final {td.final_rate:.6f} vs {tc.final_rate:.6f}"


def check_backends(seed=0):
    if len(kernels.BACKENDS) < 2:
        return "compiled backend", True, "only the python backend is available"
    rng = make_rng(seed, 10)
    A = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    Z = A @ A.conj().T
    q = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    th0 = np.exp(2j * np.pi * rng.random(8))
    zeta = float(np.linalg.eigvalsh(Z)[-1])
    res = []
    prev = kernels.BACKEND
    try:
        for name in sorted(kernels.BACKENDS):
            kernels.set_backend(name)
            res.append(kernels.mm_solve(Z, q, th0, zeta, 50, 0.0)[0])
    finally:
        kernels.set_backend(prev)
    err = float(np.max(np.abs(res[0] - res[1])))
    return "backend agreement", err < 1e-10, f"max diff {err:.2e}"


CHECKS = (check_tightness, check_w_update, check_mm_grid, check_messages,
          check_accounting, check_single_bs, check_backends)


def run_all(seed=0):
    return [chk(seed) for chk in CHECKS]
