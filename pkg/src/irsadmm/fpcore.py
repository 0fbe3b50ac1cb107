"""Sum-rate evaluation and the closed-form fractional-programming updates.

The surrogate minimised by all solvers is

    f = sum_k |xi_k|^2 (sum_j |S_kj|^2 + noise)
        - 2 sqrt(omega_k (1 + gamma_k)) Re(conj(xi_k) S_kk)
        + omega_k (gamma_k - ln(1 + gamma_k))

where ``S_kj = phi_kj + psi_kj`` is the signal UE ``k`` receives from
the stream intended for UE ``j``. With ``gamma = SINR`` and ``xi`` at its
closed form, ``f = -sum_k omega_k ln(1 + SINR_k)``. Internally rates are
in nats; :func:`weighted_sum_rate` reports bits.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .model import ChannelSet, Scenario, effective_channels

__all__ = [
    "BeamState",
    "CrossTerms",
    "BisectionError",
    "cross_terms",
    "bs_contribution",
    "sinr",
    "sinr_all",
    "sinr_from_cross",
    "weighted_sum_rate",
    "wsr_from_cross",
    "fp_objective",
    "update_gamma",
    "update_xi",
    "update_w_b",
    "bisect_mu",
    "augmented_lagrangian",
    "mrt_beamformers",
    "LN2",
]

LN2 = float(np.log(2.0))

# eigenvalues of Phi_b below this fraction of the largest are treated as null
_NULL_REL = 1e-12


class BisectionError(RuntimeError):
    """Power-dual bracket could not be established."""


@dataclass
class BeamState:
    """All primal and dual variables of the ADMM iteration.

    ``theta`` holds one local phase copy per BS, shape ``(B, NR)``.
    ``lam`` holds the consensus dual as stored at each BS, shape
    ``(B, NR * |E|)``.
    """

    W: np.ndarray
    theta: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    rho: float = 1.0

    def copy(self) -> "BeamState":
        return replace(
            self,
            W=self.W.copy(), theta=self.theta.copy(), gamma=self.gamma.copy(),
            xi=self.xi.copy(), lam=self.lam.copy(), mu=self.mu.copy(),
        )

    def power(self) -> np.ndarray:
        return np.sum(np.abs(self.W) ** 2, axis=(1, 2))


@dataclass
class CrossTerms:
    phi: np.ndarray
    psi: np.ndarray

    @property
    def S(self) -> np.ndarray:
        return self.phi + self.psi

    def copy(self) -> "CrossTerms":
        return CrossTerms(self.phi.copy(), self.psi.copy())


def _theta2d(ch: ChannelSet, theta) -> np.ndarray:
    return np.broadcast_to(np.asarray(theta, complex), (ch.B, ch.NR))


def cross_terms(ch: ChannelSet, W, theta) -> CrossTerms:
    """``phi_kj = sum_b h_bk^H w_bj`` and ``psi_kj = sum_b theta_b^H V_k^H G_b w_bj``."""
    theta = _theta2d(ch, theta)
    phi = np.einsum("bkn,bjn->kj", ch.h.conj(), W)
    GW = np.einsum("bin,bjn->bji", ch.G, W)
    psi = np.einsum("bi,ki,bji->kj", theta.conj(), ch.v.conj(), GW)
    return CrossTerms(phi, psi)


def bs_contribution(ch: ChannelSet, b: int, W_b, theta_b) -> tuple[np.ndarray, np.ndarray]:
    """BS ``b``'s additive share of ``(phi, psi)``."""
    phi_b = ch.h[b].conj() @ W_b.T
    GW = ch.G[b] @ W_b.T                       # (NR, K): column j = G_b w_bj
    psi_b = (ch.v.conj() * np.conj(theta_b)) @ GW
    return phi_b, psi_b


def sinr_from_cross(S, noise: float) -> np.ndarray:
    p = np.abs(S) ** 2
    sig = np.diag(p).copy()
    interf = p.sum(axis=1) - sig
    return sig / (interf + noise)


def sinr_all(sc: Scenario, ch: ChannelSet, W, theta) -> np.ndarray:
    return sinr_from_cross(cross_terms(ch, W, theta).S, sc.noise)


def sinr(k: int, sc: Scenario, ch: ChannelSet, state: BeamState) -> float:
    """SINR of UE ``k``; each BS uses its own phase copy ``state.theta[b]``."""
    return float(sinr_all(sc, ch, state.W, state.theta)[k])


def wsr_from_cross(S, omega, noise: float) -> float:
    """Weighted sum-rate in bits from the cross-term matrix."""
    return float(np.sum(np.asarray(omega) * np.log2(1.0 + sinr_from_cross(S, noise))))


def weighted_sum_rate(sc: Scenario, ch: ChannelSet, W, theta) -> float:
    """``sum_k omega_k log2(1 + SINR_k)``."""
    return wsr_from_cross(cross_terms(ch, W, theta).S, sc.omega, sc.noise)


def fp_objective(sc: Scenario, ct: CrossTerms, gamma, xi) -> float:
    S = ct.S
    omega = sc.omega
    gamma = np.asarray(gamma, float)
    D = np.sum(np.abs(S) ** 2, axis=1) + sc.noise
    lin = np.sqrt(omega * (1.0 + gamma)) * np.real(np.conj(xi) * np.diag(S))
    return float(np.sum(np.abs(xi) ** 2 * D - 2.0 * lin + omega * (gamma - np.log1p(gamma))))


def update_gamma(sc: Scenario, ct: CrossTerms) -> np.ndarray:
    return sinr_from_cross(ct.S, sc.noise)


def update_xi(ct: CrossTerms, gamma, omega, noise: float) -> np.ndarray:
    """Minimiser of the surrogate over ``xi`` for fixed ``gamma``.

    The surrogate contains ``Re(conj(xi_k) S_kk)``, so stationarity puts
    ``S_kk`` itself (not its conjugate) in the numerator.
    """
    S = ct.S
    D = np.sum(np.abs(S) ** 2, axis=1) + noise
    return np.sqrt((1.0 + np.asarray(gamma)) * np.asarray(omega)) * np.diag(S) / D


def bisect_mu(power_profile, P_b: float, tol: float = 1e-8, max_steps: int = 200,
              mu_max: float = 1e12) -> float:
    """Smallest ``mu >= 0`` with ``power_profile(mu) <= P_b``.

    ``power_profile`` must be continuous and decreasing. The upper end of
    the bracket is returned, so the result is always feasible.
    """
    if power_profile(0.0) <= P_b:
        return 0.0
    hi = 1.0
    while power_profile(hi) > P_b:
        hi *= 10.0
        if hi > mu_max:
            raise BisectionError(f"power dual exceeds {mu_max:g}; system is ill-conditioned")
    lo = 0.0 if hi == 1.0 else hi / 10.0
    for _ in range(max_steps):
        p_hi = power_profile(hi)
        if P_b - p_hi <= tol * P_b:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if power_profile(mid) > P_b:
            lo = mid
        else:
            hi = mid
    return hi


def update_w_b(b: int, sc: Scenario, ch: ChannelSet, state: BeamState, ct: CrossTerms,
               tol: float = 1e-8, max_steps: int = 200) -> tuple[np.ndarray, float]:
    """Power-constrained minimiser of the surrogate over BS ``b``'s beamformers.

    Solves ``(Phi_b + mu_b I) w_bk = r_bk`` for every UE ``k`` with

        Phi_b = sum_j |xi_j|^2 hh_bj hh_bj^H
        r_bk  = sqrt(omega_k (1 + gamma_k)) xi_k hh_bk
                - sum_j |xi_j|^2 hh_bj (S_jk - hh_bj^H w_bk)

    where ``hh`` is the effective channel under ``theta_b`` and ``S`` comes
    from ``ct``. ``mu_b`` is zero when the minimum-norm unconstrained
    solution fits the power budget, and found by bisection otherwise.
    """
    hh = effective_channels(ch, state.theta)[b]           # (K, Nt), rows hh_bk
    xi = state.xi
    a = np.sqrt(sc.omega * (1.0 + state.gamma))
    wx = np.abs(xi) ** 2
    own = hh.conj() @ state.W[b].T                       # own[j, k] = hh_bj^H w_bk
    others = ct.S - own
    Phi = (hh.T * wx) @ hh.conj()
    R = (a * xi)[:, None] * hh - others.T @ (wx[:, None] * hh)

    lam, U = np.linalg.eigh(Phi)
    Y = R @ U.conj()                                      # Y[k, i] = u_i^H r_k
    top = lam[-1] if lam.size else 0.0
    null = lam <= _NULL_REL * max(top, 0.0)
    if np.all(null):
        return np.zeros_like(state.W[b]), 0.0
    Y[:, null] = 0.0
    lam = np.where(null, np.inf, lam)
    y2 = np.sum(np.abs(Y) ** 2, axis=0)

    def power(mu):
        return float(np.sum(y2 / (lam + mu) ** 2))

    mu = bisect_mu(power, float(sc.P[b]), tol=tol, max_steps=max_steps)
    Wb = (Y / (lam + mu)) @ U.T
    return Wb, float(mu)


def mrt_beamformers(hh, P) -> np.ndarray:
    """Matched filters ``sqrt(P_b / K') hh_bk / ||hh_bk||`` for channels ``hh`` of shape ``(B, K, Nt)``.

    UEs with an all-zero channel get a zero beamformer and the power is
    split among the remaining ``K'`` UEs.
    """
    hh = np.asarray(hh, complex)
    norms = np.linalg.norm(hh, axis=2)
    W = np.zeros_like(hh)
    for b in range(hh.shape[0]):
        live = norms[b] > 0
        n = int(live.sum())
        if n:
            W[b, live] = np.sqrt(P[b] / n) * hh[b, live] / norms[b, live][:, None]
    return W


def augmented_lagrangian(sc: Scenario, ct: CrossTerms, gamma, xi, W, mu, t, lam, rho: float) -> float:
    """Surrogate plus power-dual terms plus the consensus penalty.

    ``t`` is the stacked residual ``sum_b A_b theta_b`` and ``lam`` the
    dual vector it is paired with.
    """
    val = fp_objective(sc, ct, gamma, xi)
    power = np.sum(np.abs(W) ** 2, axis=(1, 2))
    val += float(np.sum(np.asarray(mu) * (power - sc.P)))
    t = np.asarray(t)
    if t.size:
        lam = np.asarray(lam)
        # (rho/2)||t + lam/rho||^2 without dividing by rho
        val += 0.5 * rho * float(np.vdot(t, t).real) + float(np.vdot(lam, t).real)
        if rho > 0:
            val += float(np.vdot(lam, lam).real) / (2.0 * rho)
    return val
