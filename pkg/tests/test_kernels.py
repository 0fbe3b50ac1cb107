import os
import subprocess
import sys

import numpy as np
import pytest

from irsadmm import kernels

HAVE_C = "cython" in kernels.BACKENDS


@pytest.fixture
def restore_backend():
    prev = kernels.BACKEND
    yield
    kernels.set_backend(prev)


def _problem(seed, n):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Z = A @ A.conj().T
    q = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    th = np.exp(2j * np.pi * rng.random(n))
    return Z, q, th


def test_python_backend_always_present():
    assert "python" in kernels.BACKENDS


def test_unknown_backend(restore_backend):
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


def test_set_backend_returns_previous(restore_backend):
    prev = kernels.BACKEND
    assert kernels.set_backend("python") == prev
    assert kernels.BACKEND == "python"


@pytest.mark.skipif(not HAVE_C, reason="compiled extension not built")
@pytest.mark.parametrize("n", [1, 2, 7, 16, 48])
def test_backends_agree(restore_backend, n):
    Z, q, th = _problem(n, n)
    zeta = float(np.linalg.eigvalsh(Z)[-1]) * (1 + 1e-8)
    out = {}
    for name in ("python", "cython"):
        kernels.set_backend(name)
        out[name] = (
            kernels.power_iteration(Z, 500, 1e-10),
            kernels.mm_solve(Z, q, th, zeta, 40, 1e-9),
            kernels.quad_value(Z, q, th),
        )
    (rp, ip, cp), (tp, gp, sp), vp = out["python"]
    (rc, ic, cc), (tc, gc, scnt), vc = out["cython"]
    assert rp == pytest.approx(rc, rel=1e-12)
    assert ip == ic and cp == cc
    assert np.allclose(tp, tc, atol=1e-12)
    assert np.allclose(gp, gc, rtol=1e-12)
    assert sp == scnt
    assert vp == pytest.approx(vc, rel=1e-12)


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_power_iteration_accuracy(restore_backend, backend):
    kernels.set_backend(backend)
    Z, _, _ = _problem(3, 12)
    rq, it, conv = kernels.power_iteration(Z, 2000, 1e-13)
    assert conv
    assert rq == pytest.approx(np.linalg.eigvalsh(Z)[-1], rel=1e-8)


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_power_iteration_empty_and_zero(restore_backend, backend):
    kernels.set_backend(backend)
    assert kernels.power_iteration(np.zeros((0, 0), complex), 10, 1e-10)[0] == 0.0
    assert kernels.power_iteration(np.zeros((3, 3), complex), 10, 1e-10)[0] == 0.0


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_mm_rejects_ascent(restore_backend, backend):
    kernels.set_backend(backend)
    Z, q, th = _problem(4, 6)
    # curvature below lambda_max is not a majoriser; steps that ascend are refused
    theta, g, steps = kernels.mm_solve(Z, q, th, 0.0, 100, 0.0)
    assert np.all(np.diff(g) <= 0)
    assert len(g) == steps + 1


def test_env_forces_python():
    env = dict(os.environ, IRSADMM_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import irsadmm; print(irsadmm.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_env_rejects_unknown():
    env = dict(os.environ, IRSADMM_BACKEND="nope")
    out = subprocess.run([sys.executable, "-c", "import irsadmm"], env=env, capture_output=True, text=True)
    assert out.returncode != 0
    assert "IRSADMM_BACKEND" in out.stderr
