"""Network geometry, channel generation and the cascaded effective channel.

Array layout used throughout the package (0-based indices):

* ``h[b, k]``  -- direct channel BS ``b`` -> UE ``k``, shape ``(B, K, Nt)``
* ``G[b]``     -- stacked BS ``b`` -> IRS link, shape ``(B, NR, Nt)``
* ``v[k]``     -- diagonal of the stacked IRS -> UE ``k`` matrix ``V_k``,
  shape ``(K, NR)``

Random numbers come from numpy's PCG64 bit generator seeded through
``SeedSequence``, so a given integer seed reproduces across platforms.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "ScenarioConfig",
    "Scenario",
    "ChannelSet",
    "pathloss",
    "sample_rayleigh",
    "sample_rician",
    "steering_vector",
    "generate_scenario",
    "effective_channel",
    "effective_channels",
    "initial_theta",
    "make_rng",
    "save_channels",
    "load_channels",
]


def make_rng(seed, *spawn_key: int) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional spawn key."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in spawn_key))
    return np.random.Generator(np.random.PCG64(ss))


def dbm_to_mw(p_dbm):
    return 10.0 ** (np.asarray(p_dbm, dtype=float) / 10.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """Parameters of a random network drop.

    Defaults follow the evaluation setup: four BSs on the corners of a
    ``2D x 2D`` square, IRSs and UEs uniform in a disc of radius ``D/2``
    around the centre, 28 GHz pathloss with -32 dB at 1 m.
    """

    B: int = 4
    R: int = 1
    K: int = 4
    N: int = 16
    Nt: int = 8
    P_dBm: float = 0.0
    D: float = 50.0
    phase_bits: int | None = None
    omega: tuple[float, ...] | None = None
    eps_db: float = -32.0
    alpha_direct: float = 3.0
    alpha_bs_irs: float = 2.0
    alpha_irs_ue: float = 2.0
    rician_db: float = 0.0
    irs_loss_db: float = 10.0
    noise_dbm_hz: float = -174.0
    bandwidth_hz: float = 1e9
    min_distance: float = 1.0

    def __post_init__(self):
        if self.B < 1 or self.R < 0 or self.K < 1 or self.Nt < 1 or self.N < 1:
            raise ValueError(
                f"invalid dimensions B={self.B} R={self.R} K={self.K} Nt={self.Nt} N={self.N}"
            )
        if self.D <= 0:
            raise ValueError("D must be positive")
        if self.phase_bits is not None and self.phase_bits < 1:
            raise ValueError("phase_bits must be >= 1 or None for continuous phases")
        if self.omega is not None and len(self.omega) != self.K:
            raise ValueError("omega must have one weight per UE")

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    @property
    def noise_mw(self) -> float:
        return float(10.0 ** ((self.noise_dbm_hz + 10.0 * np.log10(self.bandwidth_hz)) / 10.0))


@dataclass(frozen=True)
class Scenario:
    """One immutable experiment instance (geometry, powers, weights)."""

    B: int
    R: int
    K: int
    Nt: int
    N: int
    P: np.ndarray
    omega: np.ndarray
    noise: float
    D: float
    bs_pos: np.ndarray
    irs_pos: np.ndarray
    ue_pos: np.ndarray
    phase_bits: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.B < 1 or self.R < 0 or self.K < 1 or self.Nt < 1 or self.N < 1:
            raise ValueError("invalid scenario dimensions")
        if np.any(np.asarray(self.P) <= 0):
            raise ValueError("all per-BS powers must be positive")
        if np.any(np.asarray(self.omega) <= 0):
            raise ValueError("all UE weights must be positive")
        if self.noise <= 0:
            raise ValueError("noise power must be positive")
        if self.phase_bits is not None and self.phase_bits < 1:
            raise ValueError("phase_bits must be >= 1")

    @property
    def NR(self) -> int:
        return self.N * self.R

    def without_irs(self) -> "Scenario":
        return replace(self, R=0, irs_pos=np.zeros((0, 2)))


@dataclass
class ChannelSet:
    """All channel coefficients of one drop."""

    h: np.ndarray
    G: np.ndarray
    v: np.ndarray
    N: int = field(default=0)

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=complex)
        self.G = np.asarray(self.G, dtype=complex)
        self.v = np.asarray(self.v, dtype=complex)
        B, K, Nt = self.h.shape
        if self.G.shape != (B, self.G.shape[1], Nt):
            raise ValueError(f"G has shape {self.G.shape}, expected (B, NR, Nt)")
        if self.v.shape != (K, self.G.shape[1]):
            raise ValueError(f"v has shape {self.v.shape}, expected (K, NR)")
        for name in ("h", "G", "v"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite entries in {name}")

    @property
    def B(self) -> int:
        return self.h.shape[0]

    @property
    def K(self) -> int:
        return self.h.shape[1]

    @property
    def Nt(self) -> int:
        return self.h.shape[2]

    @property
    def NR(self) -> int:
        return self.G.shape[1]

    def V(self, k: int) -> np.ndarray:
        """Diagonal ``NR x NR`` matrix of the IRS -> UE ``k`` link."""
        return np.diag(self.v[k])

    def G_block(self, b: int, r: int) -> np.ndarray:
        n = self.N
        return self.G[b, r * n:(r + 1) * n]

    def v_block(self, r: int, k: int) -> np.ndarray:
        n = self.N
        return self.v[k, r * n:(r + 1) * n]

    def without_irs(self) -> "ChannelSet":
        B, K, Nt = self.h.shape
        return ChannelSet(self.h.copy(), np.zeros((B, 0, Nt), complex), np.zeros((K, 0), complex), N=self.N)

    def checksum(self) -> str:
        m = hashlib.sha256()
        for a in (self.h, self.G, self.v):
            m.update(np.ascontiguousarray(a).tobytes())
        return m.hexdigest()


def pathloss(d, epsilon_db: float, alpha: float):
    """Large-scale power gain ``10^(eps/10) * d^-alpha``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = 10.0 ** (epsilon_db / 10.0) * d ** (-alpha)
    return float(out) if out.ndim == 0 else out


def sample_rayleigh(rows: int, cols: int, gain: float, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, gain) entries."""
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    return np.sqrt(gain / 2.0) * z


def steering_vector(n: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response along the x axis for azimuth ``angle``."""
    return np.exp(1j * np.pi * np.arange(n) * np.cos(angle))


def sample_rician(rows: int, cols: int, gain: float, rician_factor_db: float,
                  geometry, rng: np.random.Generator) -> np.ndarray:
    """Rician channel ``sqrt(gain) (sqrt(k/(1+k)) H_los + sqrt(1/(1+k)) H_nlos)``.

    ``geometry`` is a pair ``(rx_angle, tx_angle)`` of azimuths; the LOS
    part is ``a_rx(rx_angle) a_tx(tx_angle)^H``. A side with a single
    element contributes a unit scalar.
    """
    if gain < 0:
        raise ValueError("gain must be nonnegative")
    kappa = 10.0 ** (rician_factor_db / 10.0)
    rx_angle, tx_angle = geometry
    los = np.outer(steering_vector(rows, rx_angle), steering_vector(cols, tx_angle).conj())
    nlos = sample_rayleigh(rows, cols, 1.0, rng)
    return np.sqrt(gain) * (np.sqrt(kappa / (1.0 + kappa)) * los + np.sqrt(1.0 / (1.0 + kappa)) * nlos)


def _bs_layout(B: int, D: float) -> np.ndarray:
    if B == 4:
        return np.array([[0.0, 0.0], [0.0, 2 * D], [2 * D, 2 * D], [2 * D, 0.0]])
    # ring through the square's corners, first BS at (0, 0) when B allows
    ang = np.deg2rad(225.0) - 2 * np.pi * np.arange(B) / B
    return D + np.sqrt(2.0) * D * np.column_stack([np.cos(ang), np.sin(ang)])


def _uniform_disc(n: int, centre, radius: float, rng) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    a = 2 * np.pi * rng.random(n)
    return np.asarray(centre) + np.column_stack([r * np.cos(a), r * np.sin(a)])


def _azimuth(src, dst) -> float:
    d = np.asarray(dst) - np.asarray(src)
    return float(np.arctan2(d[1], d[0]))


def generate_scenario(config: ScenarioConfig, seed: int) -> tuple[Scenario, ChannelSet]:
    """Draw positions and channels for one drop.

    The result is a pure function of ``(config, seed)``.
    """
    cfg = config
    rng = make_rng(seed)
    D = cfg.D
    bs = _bs_layout(cfg.B, D)
    irs = _uniform_disc(cfg.R, (D, D), 0.5 * D, rng)
    ue = _uniform_disc(cfg.K, (D, D), 0.5 * D, rng)

    def dist(a, b):
        return max(float(np.hypot(*(np.asarray(a) - np.asarray(b)))), cfg.min_distance)

    h = np.zeros((cfg.B, cfg.K, cfg.Nt), complex)
    for b in range(cfg.B):
        for k in range(cfg.K):
            g = pathloss(dist(bs[b], ue[k]), cfg.eps_db, cfg.alpha_direct)
            h[b, k] = sample_rayleigh(cfg.Nt, 1, g, rng)[:, 0]

    NR = cfg.N * cfg.R
    G = np.zeros((cfg.B, NR, cfg.Nt), complex)
    for b in range(cfg.B):
        for r in range(cfg.R):
            g = pathloss(dist(bs[b], irs[r]), cfg.eps_db, cfg.alpha_bs_irs)
            geom = (_azimuth(irs[r], bs[b]), _azimuth(bs[b], irs[r]))
            G[b, r * cfg.N:(r + 1) * cfg.N] = sample_rician(cfg.N, cfg.Nt, g, cfg.rician_db, geom, rng)

    loss = 10.0 ** (-cfg.irs_loss_db / 10.0)
    v = np.zeros((cfg.K, NR), complex)
    for k in range(cfg.K):
        for r in range(cfg.R):
            g = loss * pathloss(dist(irs[r], ue[k]), cfg.eps_db, cfg.alpha_irs_ue)
            geom = (_azimuth(irs[r], ue[k]), 0.0)
            v[k, r * cfg.N:(r + 1) * cfg.N] = sample_rician(cfg.N, 1, g, cfg.rician_db, geom, rng)[:, 0]

    omega = np.ones(cfg.K) if cfg.omega is None else np.asarray(cfg.omega, float)
    sc = Scenario(
        B=cfg.B, R=cfg.R, K=cfg.K, Nt=cfg.Nt, N=cfg.N,
        P=np.full(cfg.B, float(dbm_to_mw(cfg.P_dBm))),
        omega=omega, noise=cfg.noise_mw, D=D,
        bs_pos=bs, irs_pos=irs, ue_pos=ue,
        phase_bits=cfg.phase_bits, seed=int(seed),
    )
    return sc, ChannelSet(h, G, v, N=cfg.N)


def initial_theta(scenario: Scenario, n: int | None = None) -> np.ndarray:
    """Common random starting phases drawn from the scenario seed (length ``NR`` by default)."""
    rng = make_rng(scenario.seed, 1)
    return np.exp(2j * np.pi * rng.random(scenario.NR if n is None else n))


def effective_channel(h_bk, V_k, G_b, theta) -> np.ndarray:
    """``h_hat`` with ``h_hat^H = h^H + theta^H V_k^H G_b``.

    ``V_k`` may be the full diagonal matrix or its diagonal.
    """
    h_bk = np.asarray(h_bk, complex)
    G_b = np.asarray(G_b, complex)
    theta = np.asarray(theta, complex)
    V_k = np.asarray(V_k, complex)
    vd = np.diag(V_k) if V_k.ndim == 2 else V_k
    if G_b.shape != (theta.size, h_bk.size) or vd.size != theta.size:
        raise ValueError("dimension mismatch in effective_channel")
    return h_bk + G_b.conj().T @ (vd * theta)


def effective_channels(ch: ChannelSet, theta) -> np.ndarray:
    """All ``h_hat[b, k]`` for per-BS phases ``theta`` of shape ``(B, NR)`` or ``(NR,)``."""
    theta = np.broadcast_to(np.asarray(theta, complex), (ch.B, ch.NR))
    # G_b^H (v_k * theta_b) for every (b, k)
    return ch.h + np.einsum("bin,ki,bi->bkn", ch.G.conj(), ch.v, theta)


# -- plain-text channel dump -------------------------------------------------
#
# IRSADMM-CHANNELS 1
# dims B K Nt NR N
# <name> <d0> <d1> ...          then prod(shape[:-1]) lines, each holding
#                               shape[-1] pairs "re im" in row-major order

_MAGIC = "IRSADMM-CHANNELS 1"


def save_channels(ch: ChannelSet, path) -> None:
    lines = [_MAGIC, f"dims {ch.B} {ch.K} {ch.Nt} {ch.NR} {ch.N}"]
    for name in ("h", "G", "v"):
        a = getattr(ch, name)
        lines.append(name + " " + " ".join(str(s) for s in a.shape))
        rows = a.reshape(-1, a.shape[-1]) if a.shape[-1] else np.zeros((0, 0), complex)
        for row in rows:
            lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_channels(path) -> ChannelSet:
    it = iter(Path(path).read_text().splitlines())
    if next(it).strip() != _MAGIC:
        raise ValueError(f"{path}: not a channel dump")
    dims = next(it).split()
    if dims[0] != "dims":
        raise ValueError(f"{path}: missing dims header")
    N = int(dims[5])
    arrays = {}
    for name in ("h", "G", "v"):
        head = next(it).split()
        if head[0] != name:
            raise ValueError(f"{path}: expected block {name}, got {head[0]}")
        shape = tuple(int(s) for s in head[1:])
        nrows = int(np.prod(shape[:-1])) if shape[-1] else 0
        vals = []
        for _ in range(nrows):
            x = np.array(next(it).split(), dtype=float)
            vals.append(x[0::2] + 1j * x[1::2])
        arrays[name] = np.array(vals, complex).reshape(shape) if nrows else np.zeros(shape, complex)
    return ChannelSet(arrays["h"], arrays["G"], arrays["v"], N=N)
