"""IRS phase optimisation: the per-BS quadratic model and its MM solver.

As a function of one phase copy ``theta_b`` the augmented Lagrangian is,
up to a constant,

    g_b(theta) = theta^H Z theta - 2 Re(theta^H q)

with

    x_jk = diag(conj(v_j)) G_b w_bk
    Z    = sum_jk |xi_j|^2 x_jk x_jk^H + (rho/2) A_b^T A_b
    q    = sum_k sqrt(omega_k (1 + gamma_k)) conj(xi_k) x_kk
           - sum_jk |xi_j|^2 x_jk conj(e_jk)
           - (rho/2) A_b^T t_b - (1/2) A_b^T lam

where ``e_jk = S_jk - theta_b^H x_jk`` is everything UE ``j`` receives on
stream ``k`` except BS ``b``'s reflected path, and ``t_b`` the consensus
residual without BS ``b``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "QuadraticForm",
    "reflect_vectors",
    "quadratic_terms",
    "assemble_quadratic",
    "quad_value",
    "max_eigenvalue",
    "mm_step",
    "solve_theta_b",
    "project_discrete",
]

EIG_INFLATE = 1e-8


@dataclass
class QuadraticForm:
    Z: np.ndarray
    q: np.ndarray
    zeta: float
    x: np.ndarray | None = None

    def value(self, theta) -> float:
        return quad_value(self.Z, self.q, theta)


def quad_value(Z, q, theta) -> float:
    return float(np.real(np.vdot(theta, Z @ theta)) - 2.0 * np.real(np.vdot(theta, q)))


def reflect_vectors(ch, b: int, W_b) -> np.ndarray:
    """``x[j, k] = diag(conj(v_j)) G_b w_bk``, shape ``(K, K, NR)``."""
    GW = ch.G[b] @ W_b.T                       # (NR, K)
    return ch.v.conj()[:, None, :] * GW.T[None, :, :]


def quadratic_terms(x, S, theta, xi, gamma, omega) -> tuple[np.ndarray, np.ndarray]:
    """Objective part ``(Z_f, q_f)`` of the quadratic model.

    ``x`` may be one BS's reflect vectors or their sum over BSs (common
    phase vector); ``theta`` is the phase vector that ``x`` is paired with
    inside ``S``.
    """
    wx = np.abs(xi) ** 2
    own = np.einsum("i,jki->jk", np.conj(theta), x)
    e = S - own
    Zf = np.einsum("j,jki,jkl->il", wx, x, x.conj())
    a = np.sqrt(np.asarray(omega) * (1.0 + np.asarray(gamma)))
    K = x.shape[0]
    diag_x = x[np.arange(K), np.arange(K)]                   # x_kk, (K, NR)
    qf = (a * np.conj(xi)) @ diag_x - np.einsum("j,jki,jk->i", wx, x, e.conj())
    return Zf, qf


def max_eigenvalue(Z, max_iter: int = 500, tol: float = 1e-10, check: bool = True) -> float:
    """Largest eigenvalue of Hermitian PSD ``Z`` by power iteration.

    The Rayleigh-quotient estimate is inflated by ``1 + 1e-8`` so it can
    serve as a majoriser curvature.
    """
    Z = np.asarray(Z, complex)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError("Z must be square")
    if check and Z.size:
        scale = max(np.max(np.abs(Z)), 1e-300)
        if np.max(np.abs(Z - Z.conj().T)) > 1e-10 * scale:
            raise ValueError("Z is not Hermitian")
    rq, _, _ = kernels.power_iteration(Z, max_iter, tol)
    return max(rq, 0.0) * (1.0 + EIG_INFLATE)


def assemble_quadratic(b, sc, ch, state, ct, t_b, lam, rho, graph) -> QuadraticForm:
    """Quadratic model of the augmented Lagrangian in ``theta_b``.

    ``ct`` must reflect the current beamformers (including BS ``b``'s)
    and ``state.theta[b]``; ``t_b`` is the residual of the other BSs and
    ``lam`` the dual copy used by BS ``b``.
    """
    x = reflect_vectors(ch, b, state.W[b])
    Zf, qf = quadratic_terms(x, ct.S, state.theta[b], state.xi, state.gamma, sc.omega)
    zeta = max_eigenvalue(Zf, check=False)
    if graph is not None and graph.n_edges:
        deg = graph.degree(b)
        Z = Zf + 0.5 * rho * deg * np.eye(Zf.shape[0])
        q = qf - graph.adjoint(b, 0.5 * rho * np.asarray(t_b) + 0.5 * np.asarray(lam))
        # A_b^T A_b = deg * I, so the penalty only shifts the spectrum
        zeta += 0.5 * rho * deg
    else:
        Z, q = Zf, qf
    return QuadraticForm(Z, q, zeta, x)


def mm_step(theta_prev, Z, zeta: float, q) -> np.ndarray:
    """One closed-form majorisation step on the unit-modulus set."""
    theta_prev = np.asarray(theta_prev, complex)
    a = np.asarray(Z) @ theta_prev - zeta * theta_prev - np.asarray(q)
    mag = np.abs(a)
    out = theta_prev.copy()
    nz = mag > 0.0
    out[nz] = -a[nz] / mag[nz]
    return out


def solve_theta_b(initial, qf: QuadraticForm, inner_iters: int = 20, tol: float = 1e-6,
                  trace: list | None = None) -> np.ndarray:
    """Iterate :func:`mm_step` until the objective stalls.

    Stops when ``|g_new - g_old| <= tol (1 + |g_old|)`` or after
    ``inner_iters`` steps. Objective values are appended to ``trace``
    when given.
    """
    theta, g, _ = kernels.mm_solve(qf.Z, qf.q, np.asarray(initial, complex), qf.zeta, inner_iters, tol)
    if trace is not None:
        trace.extend(g.tolist())
    return theta


def project_discrete(theta, U: int) -> np.ndarray:
    """Snap each phase to the nearest point of ``{2 pi u / 2^U}``.

    Exact ties go to the smaller index ``u``.
    """
    if U < 1:
        raise ValueError("U must be >= 1")
    M = 2 ** U
    step = 2 * np.pi / M
    ang = np.mod(np.angle(np.asarray(theta, complex)), 2 * np.pi)
    k = ang / step
    lo = np.floor(k)
    frac = k - lo
    lo_i = lo.astype(np.int64) % M
    hi_i = (lo_i + 1) % M
    u = np.where(frac > 0.5, hi_i, lo_i)
    u = np.where(frac == 0.5, np.minimum(lo_i, hi_i), u)
    return np.exp(1j * step * u)
