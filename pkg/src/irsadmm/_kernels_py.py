"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same functions with the same semantics; the
selection happens in :mod:`irsadmm.kernels`.
"""
import numpy as np

_GOLDEN = 2.399963229728653


def start_vector(n):
    return np.exp(1j * _GOLDEN * np.arange(n)) / np.sqrt(n)


def quad_value(Z, q, theta):
    """``Re(theta^H Z theta) - 2 Re(theta^H q)``."""
    return float(np.real(np.vdot(theta, Z @ theta)) - 2.0 * np.real(np.vdot(theta, q)))


def power_iteration(Z, max_iter=500, tol=1e-10):
    """Largest eigenvalue of a Hermitian PSD matrix by power iteration.

    Returns ``(rayleigh_quotient, iterations, converged)``.
    """
    Z = np.asarray(Z, dtype=complex)
    n = Z.shape[0]
    if n == 0:
        return 0.0, 0, True
    v = start_vector(n)
    rq_old = None
    for it in range(1, max_iter + 1):
        w = Z @ v
        rq = float(np.real(np.vdot(v, w)))
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0, it, True
        v = w / nrm
        if rq_old is not None and abs(rq - rq_old) <= tol * abs(rq):
            return rq, it, True
        rq_old = rq
    return rq, max_iter, False


def mm_solve(Z, q, theta0, zeta, max_iter, tol):
    """Unit-modulus MM iterations for ``min theta^H Z theta - 2 Re(theta^H q)``.

    Each step sets ``theta = -exp(j angle((Z - zeta I) theta - q))``; a
    zero entry of the argument keeps the previous phase. A step that
    would increase the objective is rejected and the loop stops.

    Returns ``(theta, g_trace, steps)`` where ``g_trace[0]`` is the value
    at ``theta0`` and ``steps`` counts accepted updates.
    """
    Z = np.asarray(Z, dtype=complex)
    q = np.asarray(q, dtype=complex)
    theta = np.array(theta0, dtype=complex)
    g = quad_value(Z, q, theta)
    trace = [g]
    steps = 0
    for _ in range(max_iter):
        a = Z @ theta - zeta * theta - q
        mag = np.abs(a)
        nz = mag > 0.0
        cand = theta.copy()
        cand[nz] = -a[nz] / mag[nz]
        g_new = quad_value(Z, q, cand)
        if g_new > g:
            break
        theta = cand
        steps += 1
        trace.append(g_new)
        done = abs(g_new - g) <= tol * (1.0 + abs(g))
        g = g_new
        if done:
            break
    return theta, np.array(trace), steps
