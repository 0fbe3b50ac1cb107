"""Reference schemes: centralized FP+MM, and non-cooperative MRT / local ZF."""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass

import numpy as np

from .consensus import ADMMOptions, ConvergenceTrace
from .fpcore import (
    BeamState,
    CrossTerms,
    bs_contribution,
    cross_terms,
    fp_objective,
    mrt_beamformers,
    update_gamma,
    update_w_b,
    update_xi,
    wsr_from_cross,
)
from .irsopt import (
    QuadraticForm,
    max_eigenvalue,
    project_discrete,
    quadratic_terms,
    reflect_vectors,
    solve_theta_b,
)
from .model import ChannelSet, Scenario, effective_channels, initial_theta

__all__ = [
    "CentralizedState",
    "RankDeficiencyWarning",
    "solve_centralized",
    "mrt",
    "local_zf",
]

ZF_RCOND = 1e-10


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass
class CentralizedState:
    W: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    mu: np.ndarray


def solve_centralized(sc: Scenario, ch: ChannelSet, options: ADMMOptions | None = None,
                      theta0=None):
    """Block-coordinate FP+MM with one shared phase vector.

    Each round updates ``gamma``, ``xi``, then ``W_0 .. W_{B-1}`` in order,
    then the common ``theta`` by MM on the quadratic model built from the
    reflect vectors summed over BSs. Uses the same stopping rule on the
    sum-rate as :func:`irsadmm.consensus.run_decentralized` (the consensus
    residual is identically zero).
    """
    opts = options or ADMMOptions()
    B, K, NR = ch.B, ch.K, ch.NR
    theta = initial_theta(sc, NR) if theta0 is None else np.asarray(theta0, complex).copy()
    W = mrt_beamformers(effective_channels(ch, theta), sc.P)
    st = BeamState(W=W, theta=np.tile(theta, (B, 1)), gamma=np.zeros(K), xi=np.zeros(K, complex),
                   lam=np.zeros((B, 0), complex), mu=np.zeros(B), rho=0.0)
    ct = cross_terms(ch, W, st.theta)
    trace = ConvergenceTrace()
    prev_rate = wsr_from_cross(ct.S, sc.omega, sc.noise)
    t0 = time.perf_counter()
    for rnd in range(opts.max_rounds):
        st.gamma = update_gamma(sc, ct)
        st.xi = update_xi(ct, st.gamma, sc.omega, sc.noise)
        bars = []
        for b in range(B):
            phi_b, psi_b = bs_contribution(ch, b, st.W[b], st.theta[b])
            phi_bar, psi_bar = ct.phi - phi_b, ct.psi - psi_b
            Wb, mu = update_w_b(b, sc, ch, st, ct)
            st.W[b] = Wb
            st.mu[b] = mu
            phi_b2, psi_b2 = bs_contribution(ch, b, Wb, st.theta[b])
            ct = CrossTerms(phi_bar + phi_b2, psi_bar + psi_b2)
            bars = (phi_bar, psi_bar)
        if NR:
            x = sum(reflect_vectors(ch, b, st.W[b]) for b in range(B))
            Zf, qf = quadratic_terms(x, ct.S, theta, st.xi, st.gamma, sc.omega)
            new = solve_theta_b(theta, QuadraticForm(Zf, qf, max_eigenvalue(Zf, check=False)),
                                opts.inner_iters, opts.inner_tol)
            if opts.phase_bits:
                new = project_discrete(new, opts.phase_bits)
            # rebuild psi for the new phases on top of the last BS's "others" share,
            # the same arithmetic a single-BS visit performs
            last = B - 1
            phi_bar, psi_bar = bars
            for b in range(last):
                psi_bar = psi_bar - bs_contribution(ch, b, st.W[b], theta)[1]
                psi_bar = psi_bar + bs_contribution(ch, b, st.W[b], new)[1]
            theta = new
            st.theta[:] = theta
            phi_l, psi_l = bs_contribution(ch, last, st.W[last], theta)
            ct = CrossTerms(phi_bar + phi_l, psi_bar + psi_l)
        rate = wsr_from_cross(ct.S, sc.omega, sc.noise)
        trace.append(
            visit=rnd + 1, round=rnd + 1, bs=-1, sum_rate_bits=rate,
            lagrangian=fp_objective(sc, ct, st.gamma, st.xi), residual=0.0,
            max_phase_disagreement=0.0, cum_symbols=0, wall_clock=time.perf_counter() - t0,
        )
        trace.rounds = rnd + 1
        rel = abs(rate - prev_rate) / max(abs(prev_rate), 1e-300)
        prev_rate = rate
        if rel < opts.tol_rate:
            trace.converged = True
            break
    return CentralizedState(st.W, theta, st.gamma, st.xi, st.mu), trace


def _channels(sc: Scenario, ch: ChannelSet, theta) -> np.ndarray:
    if theta is None or ch.NR == 0:
        return ch.h.copy()
    return effective_channels(ch, theta)


def mrt(sc: Scenario, ch: ChannelSet, theta=None) -> np.ndarray:
    """Matched-filter beamformers with an equal power split.

    ``theta=None`` uses the direct channels only (no IRS).
    """
    return mrt_beamformers(_channels(sc, ch, theta), sc.P)


def local_zf(sc: Scenario, ch: ChannelSet, theta=None) -> np.ndarray:
    """Per-BS zero forcing on the local channels, equal power per UE.

    Column ``k`` of ``H_b (H_b^H H_b)^-1`` scaled to norm ``sqrt(P_b / K)``.
    A rank-deficient ``H_b`` falls back to the pseudo-inverse with relative
    cutoff ``ZF_RCOND`` and emits :class:`RankDeficiencyWarning`.
    """
    hh = _channels(sc, ch, theta)
    B, K, Nt = hh.shape
    W = np.zeros_like(hh)
    for b in range(B):
        H = hh[b].T                                     # (Nt, K), columns hh_bk
        s = np.linalg.svd(H, compute_uv=False)
        if K > Nt or s.size == 0 or s[-1] <= ZF_RCOND * s[0]:
            warnings.warn(f"local channel of BS {b} is rank deficient; using pseudo-inverse",
                          RankDeficiencyWarning, stacklevel=2)
            F = np.linalg.pinv(H.conj().T, rcond=ZF_RCOND)
        else:
            F = H @ np.linalg.inv(H.conj().T @ H)
        norms = np.linalg.norm(F, axis=0)
        live = norms > 0
        n = int(live.sum())
        if n:
            W[b, live] = (np.sqrt(sc.P[b] / n) * F[:, live] / norms[live]).T
    return W
