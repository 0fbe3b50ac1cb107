"""Independent reference computations used by the tests.

Everything here is written from the problem definition with plain loops
and generic numerics, without calling the package's solver internals.
"""
import itertools

import numpy as np
from scipy.optimize import brentq, minimize_scalar


def effective_channel_loops(h, G, v, theta, N, b, k):
    """``h_hat^H = h^H + sum_r v_rk^H Theta_r^H G_br`` with one loop per IRS."""
    R = G.shape[1] // N if N else 0
    row = h[b, k].conj().copy()
    for r in range(R):
        sl = slice(r * N, (r + 1) * N)
        Theta_r = np.diag(theta[sl])
        v_rk = v[k, sl][:, None]                 # column vector
        row = row + (v_rk.conj().T @ Theta_r.conj().T @ G[b, sl])[0]
    return row.conj()


def amplitudes_brute(h, G, v, N, W, theta):
    """``amp[k, j] = sum_b h_hat_bk^H w_bj`` from explicit sums; ``theta`` has shape ``(B, NR)``."""
    B, K, _ = h.shape
    amp = np.zeros((K, K), complex)
    for k in range(K):
        for j in range(K):
            s = 0j
            for b in range(B):
                hh = effective_channel_loops(h, G, v, theta[b], N, b, k)
                s += np.vdot(hh, W[b, j])
            amp[k, j] = s
    return amp


def sinr_from_amp(amp, noise):
    K = amp.shape[0]
    out = np.zeros(K)
    for k in range(K):
        sig = abs(amp[k, k]) ** 2
        interf = sum(abs(amp[k, j]) ** 2 for j in range(K) if j != k)
        out[k] = sig / (interf + noise)
    return out


def surrogate(S, gamma, xi, omega, noise):
    """FP surrogate written out term by term."""
    K = S.shape[0]
    total = 0.0
    for k in range(K):
        D = sum(abs(S[k, j]) ** 2 for j in range(K)) + noise
        total += abs(xi[k]) ** 2 * D
        total -= 2 * np.sqrt(omega[k] * (1 + gamma[k])) * (np.conj(xi[k]) * S[k, k]).real
        total += omega[k] * (gamma[k] - np.log(1 + gamma[k]))
    return total


def gamma_golden(S, k, omega, noise, hi=1e6):
    """Maximiser of the Lagrangian-dual-transform term for UE ``k`` by bounded scalar search."""
    D = np.sum(np.abs(S[k]) ** 2) + noise
    s = abs(S[k, k]) ** 2

    def neg(g):
        return -omega[k] * (np.log1p(g) - g + (1 + g) * s / D)

    res = minimize_scalar(neg, bounds=(0.0, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, s / (D - s))})
    return res.x


def fd_gradient(fun, x, rel=1e-6):
    """Central-difference gradient of a real function of a complex array.

    Returns ``d/dRe + 1j d/dIm`` entrywise.
    """
    x = np.asarray(x, complex)
    g = np.zeros_like(x)
    scale = max(np.max(np.abs(x)), 1e-300)
    h = rel * scale
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        for unit, slot in ((1.0, "re"), (1j, "im")):
            xp = flat.copy()
            xm = flat.copy()
            xp[i] += h * unit
            xm[i] -= h * unit
            d = (fun(xp.reshape(x.shape)) - fun(xm.reshape(x.shape))) / (2 * h)
            gf[i] += d if slot == "re" else 1j * d
    return g


def grid_min_nr2(Z, q, n=1440):
    """Exhaustive minimum of ``theta^H Z theta - 2 Re(theta^H q)`` over a phase grid, NR=2."""
    g = np.exp(1j * np.linspace(0.0, 2 * np.pi, n, endpoint=False))
    T1, T2 = np.meshgrid(g, g, indexing="ij")
    vals = (Z[0, 0].real + Z[1, 1].real
            + 2 * np.real(np.conj(T1) * Z[0, 1] * T2)
            - 2 * np.real(np.conj(T1) * q[0] + np.conj(T2) * q[1]))
    return float(vals.min())


def fp_wsr_reference(h, P, omega, noise, W0, rounds):
    """Plain FP weighted sum-rate iteration without IRSs.

    Visits BSs ``0..B-1`` in turn; at each visit the auxiliaries are
    refreshed from the current beamformers and then BS ``b``'s beamformers
    are set to the power-constrained minimiser of the surrogate. Returns
    the sum-rate in bits after ``rounds`` rounds and the beamformers.
    """
    B, K, Nt = h.shape
    W = W0.copy()

    def amps(W):
        A = np.zeros((K, K), complex)
        for k in range(K):
            for j in range(K):
                A[k, j] = sum(np.vdot(h[b, k], W[b, j]) for b in range(B))
        return A

    for _ in range(rounds):
        for b in range(B):
            A = amps(W)
            sinr = sinr_from_amp(A, noise)
            D = np.sum(np.abs(A) ** 2, axis=1) + noise
            xi = np.sqrt(omega * (1 + sinr)) * np.diag(A) / D
            Phi = sum(abs(xi[j]) ** 2 * np.outer(h[b, j], h[b, j].conj()) for j in range(K))
            rhs = np.zeros((K, Nt), complex)
            for k in range(K):
                r = np.sqrt(omega[k] * (1 + sinr[k])) * xi[k] * h[b, k]
                for j in range(K):
                    others = A[j, k] - np.vdot(h[b, j], W[b, k])
                    r = r - abs(xi[j]) ** 2 * h[b, j] * others
                rhs[k] = r
            Wb = (np.linalg.pinv(Phi, rcond=1e-12, hermitian=True) @ rhs.T).T
            if np.sum(np.abs(Wb) ** 2) > P[b]:
                p0 = np.sum(np.abs(Wb) ** 2) - P[b]

                def excess(mu):
                    # Phi is singular when K < Nt; the mu -> 0+ limit is the pinv solution
                    if mu == 0.0:
                        return p0
                    X = np.linalg.solve(Phi + mu * np.eye(Nt), rhs.T).T
                    return np.sum(np.abs(X) ** 2) - P[b]
                hi = 1.0
                while excess(hi) > 0:
                    hi *= 10
                mu = brentq(excess, 0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
                Wb = np.linalg.solve(Phi + mu * np.eye(Nt), rhs.T).T
            W[b] = Wb
    A = amps(W)
    return float(np.sum(omega * np.log2(1 + sinr_from_amp(A, noise)))), W


def bootstrap_lower(diffs, n_boot=10000, alpha=0.05, seed=0):
    """One-sided lower bootstrap confidence bound of the mean."""
    rng = np.random.default_rng(seed)
    d = np.asarray(diffs, float)
    idx = rng.integers(0, d.size, size=(n_boot, d.size))
    means = d[idx].mean(axis=1)
    return float(np.quantile(means, alpha))


def unit_starts(n, m=4):
    """All ``m^n`` phase combinations on an ``m``-point grid."""
    ph = np.exp(2j * np.pi * np.arange(m) / m)
    return [np.array(c) for c in itertools.product(ph, repeat=n)]
