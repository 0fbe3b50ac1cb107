"""Incremental consensus ADMM over a ring of base stations.

One *visit* is the work a single BS does while it holds the token: it
removes its own contribution from the received message ``(t, phi, psi)``,
refreshes ``gamma`` and ``xi``, re-solves its beamformers and its local
IRS phase copy, updates its dual copy and forwards the message. One
*round* is ``B`` consecutive visits in the fixed order ``0, 1, ..., B-1``.

Each BS keeps its own copy of the consensus dual (``state.lam[b]``); the
message carries only ``t``, ``phi`` and ``psi``.
"""
from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .fpcore import (
    BeamState,
    CrossTerms,
    augmented_lagrangian,
    bs_contribution,
    cross_terms,
    mrt_beamformers,
    update_gamma,
    update_w_b,
    update_xi,
    wsr_from_cross,
)
from .irsopt import (
    assemble_quadratic,
    max_eigenvalue,
    project_discrete,
    quadratic_terms,
    reflect_vectors,
    solve_theta_b,
)
from .model import ChannelSet, Scenario, effective_channels, initial_theta

__all__ = [
    "ConsensusGraph",
    "BackhaulMessage",
    "ConvergenceTrace",
    "ADMMOptions",
    "ProtocolDesyncError",
    "build_ring",
    "apply_incidence",
    "backhaul_symbols",
    "initial_state",
    "initial_message",
    "curvature_scale",
    "admm_visit",
    "update_lambda",
    "run_decentralized",
    "max_phase_disagreement",
]

TRACE_COLUMNS = (
    "visit", "round", "bs", "sum_rate_bits", "lagrangian",
    "residual", "max_phase_disagreement", "cum_symbols",
)


class ProtocolDesyncError(RuntimeError):
    """The received message does not match the network state."""


@dataclass(frozen=True)
class ConsensusGraph:
    """Undirected BS graph; edge ``(b, l)`` contributes the block ``theta_b - theta_l``."""

    B: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(a), int(c)) for a, c in self.edges))
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edge")
        for a, c in self.edges:
            if not (0 <= a < self.B and 0 <= c < self.B) or a == c:
                raise ValueError(f"invalid edge {(a, c)} for B={self.B}")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree(self, b: int) -> int:
        return sum((a == b) + (c == b) for a, c in self.edges)

    def signs(self, b: int) -> np.ndarray:
        """Per-edge coefficient of ``theta_b``: +1, -1 or 0."""
        return np.array([(a == b) * 1.0 - (c == b) * 1.0 for a, c in self.edges])

    def apply(self, b: int, theta_b) -> np.ndarray:
        """``A_b theta_b`` as a stacked vector of length ``NR |E|``."""
        theta_b = np.asarray(theta_b, complex)
        return (self.signs(b)[:, None] * theta_b[None, :]).ravel()

    def adjoint(self, b: int, y) -> np.ndarray:
        """``A_b^T y`` for a stacked edge vector ``y``."""
        y = np.asarray(y, complex)
        if self.n_edges == 0:
            return np.zeros(0, complex)
        return self.signs(b) @ y.reshape(self.n_edges, -1)

    def residual(self, theta) -> np.ndarray:
        """``sum_b A_b theta_b`` for phases of shape ``(B, NR)``."""
        theta = np.asarray(theta, complex)
        if self.n_edges == 0:
            return np.zeros(0, complex)
        blocks = [theta[a] - theta[c] for a, c in self.edges]
        return np.concatenate(blocks)

    def is_connected(self) -> bool:
        seen, todo = {0}, [0]
        adj = {b: set() for b in range(self.B)}
        for a, c in self.edges:
            adj[a].add(c)
            adj[c].add(a)
        while todo:
            for n in adj[todo.pop()] - seen:
                seen.add(n)
                todo.append(n)
        return len(seen) == self.B


def build_ring(B: int) -> ConsensusGraph:
    """Ring ``0-1-...-(B-1)-0``; for ``B=2`` the two directed copies ``(0,1), (1,0)``."""
    if B < 2:
        raise ValueError("a ring needs at least two BSs")
    return ConsensusGraph(B, tuple((b, (b + 1) % B) for b in range(B)))


def apply_incidence(graph: ConsensusGraph, b: int, theta_b) -> np.ndarray:
    return graph.apply(b, theta_b)


def backhaul_symbols(B: int, K: int, N: int, R: int, E_count: int) -> int:
    """Complex symbols exchanged per round: ``B (2 K^2 + N R |E|)``."""
    return B * (2 * K * K + N * R * E_count)


@dataclass
class BackhaulMessage:
    t: np.ndarray
    phi: np.ndarray
    psi: np.ndarray

    @property
    def symbol_count(self) -> int:
        return int(self.phi.size + self.psi.size + self.t.size)

    @property
    def S(self) -> np.ndarray:
        return self.phi + self.psi

    def copy(self) -> "BackhaulMessage":
        return BackhaulMessage(self.t.copy(), self.phi.copy(), self.psi.copy())


@dataclass
class ADMMOptions:
    """Knobs of the decentralized solver.

    With ``rho_mode="relative"`` the penalty is ``rho`` times the mean
    largest eigenvalue of the per-BS phase curvature at the starting
    point (see :func:`curvature_scale`); ``"absolute"`` uses ``rho`` as
    is. After every round the penalty is multiplied by ``rho_growth``
    and capped at ``rho_max`` (same units as ``rho``).
    """

    rho: float = 0.1
    rho_mode: str = "relative"
    rho_growth: float = 1.2
    rho_max: float = 100.0
    max_rounds: int = 200
    tol_rate: float = 1e-4
    tol_residual: float = 1e-3
    phase_bits: int | None = None
    inner_iters: int = 20
    inner_tol: float = 1e-6
    graph: ConsensusGraph | None = None
    verify: bool = True
    desync_tol: float = 1e-6
    debug: bool = False


@dataclass
class ConvergenceTrace:
    visit: list = field(default_factory=list)
    round: list = field(default_factory=list)
    bs: list = field(default_factory=list)
    sum_rate_bits: list = field(default_factory=list)
    lagrangian: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    max_phase_disagreement: list = field(default_factory=list)
    cum_symbols: list = field(default_factory=list)
    wall_clock: list = field(default_factory=list)
    rounds: int = 0
    converged: bool = False
    debug: list = field(default_factory=list)

    def __len__(self):
        return len(self.visit)

    def append(self, **row):
        for name in TRACE_COLUMNS + ("wall_clock",):
            getattr(self, name).append(row[name])

    def rows(self):
        for i in range(len(self)):
            yield tuple(getattr(self, c)[i] for c in TRACE_COLUMNS)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACE_COLUMNS)
            for row in self.rows():
                w.writerow([_fmt(x) for x in row])

    @property
    def final_rate(self) -> float:
        return self.sum_rate_bits[-1] if self.sum_rate_bits else float("nan")


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def max_phase_disagreement(theta) -> float:
    """``max_{b,l} max_i |theta_b[i] - theta_l[i]|``."""
    theta = np.asarray(theta)
    if theta.shape[0] < 2 or theta.shape[1] == 0:
        return 0.0
    d = np.abs(theta[:, None, :] - theta[None, :, :])
    return float(d.max())


def update_lambda(lam, rho: float, t) -> np.ndarray:
    return np.asarray(lam) + rho * np.asarray(t)


def _default_graph(B: int) -> ConsensusGraph:
    return build_ring(B) if B >= 2 else ConsensusGraph(B, ())


def initial_state(sc: Scenario, ch: ChannelSet, graph: ConsensusGraph, rho: float) -> BeamState:
    """MRT beamformers under common random phases, zero duals."""
    theta0 = initial_theta(sc, ch.NR)
    theta = np.tile(theta0, (ch.B, 1))
    W = mrt_beamformers(effective_channels(ch, theta), sc.P)
    return BeamState(
        W=W, theta=theta,
        gamma=np.zeros(ch.K), xi=np.zeros(ch.K, complex),
        lam=np.zeros((ch.B, ch.NR * graph.n_edges), complex),
        mu=np.zeros(ch.B), rho=float(rho),
    )


def curvature_scale(sc: Scenario, ch: ChannelSet, state: BeamState) -> float:
    """Mean over BSs of ``lambda_max(Z_f)`` at ``state``; 1 when there is no IRS."""
    if ch.NR == 0:
        return 1.0
    ct = cross_terms(ch, state.W, state.theta)
    gamma = update_gamma(sc, ct)
    xi = update_xi(ct, gamma, sc.omega, sc.noise)
    lam = [
        max_eigenvalue(quadratic_terms(reflect_vectors(ch, b, state.W[b]), ct.S, state.theta[b],
                                       xi, gamma, sc.omega)[0], check=False)
        for b in range(ch.B)
    ]
    scale = float(np.mean(lam))
    return scale if scale > 0 else 1.0


def initial_message(ch: ChannelSet, state: BeamState, graph: ConsensusGraph) -> BackhaulMessage:
    ct = cross_terms(ch, state.W, state.theta)
    return BackhaulMessage(graph.residual(state.theta), ct.phi, ct.psi)


def _check_message(ch, state, msg, graph, tol):
    ref_t = graph.residual(state.theta)
    ct = cross_terms(ch, state.W, state.theta)
    err_t = np.linalg.norm(msg.t - ref_t)
    if err_t > tol * max(1.0, np.linalg.norm(ref_t)):
        raise ProtocolDesyncError(f"residual mismatch {err_t:.3e}")
    scale = np.linalg.norm(ct.phi) + np.linalg.norm(ct.psi)
    err = np.linalg.norm(msg.phi - ct.phi) + np.linalg.norm(msg.psi - ct.psi)
    if err > tol * scale + 1e-300:
        raise ProtocolDesyncError(f"cross-term mismatch {err:.3e} (scale {scale:.3e})")


def admm_visit(b: int, state: BeamState, msg: BackhaulMessage, sc: Scenario, ch: ChannelSet,
               graph: ConsensusGraph, options: ADMMOptions | None = None, log: list | None = None):
    """Run BS ``b``'s local update; returns the new state and outgoing message.

    When ``log`` is a list, the MM objective trace of the phase update is
    appended to it.
    """
    opts = options or ADMMOptions()
    if opts.verify:
        _check_message(ch, state, msg, graph, opts.desync_tol)
    st = state.copy()
    theta_b = st.theta[b].copy()
    use_irs = ch.NR > 0

    # remove own contributions
    t_b = msg.t - graph.apply(b, theta_b) if msg.t.size else msg.t
    phi_b, psi_b = bs_contribution(ch, b, st.W[b], theta_b)
    phi_bar = msg.phi - phi_b
    psi_bar = msg.psi - psi_b

    ct = CrossTerms(msg.phi, msg.psi)
    st.gamma = update_gamma(sc, ct)
    st.xi = update_xi(ct, st.gamma, sc.omega, sc.noise)
    Wb, mu = update_w_b(b, sc, ch, st, ct)
    st.W[b] = Wb
    st.mu[b] = mu

    mm_trace = log
    t = msg.t
    if use_irs:
        phi_b2, psi_b2 = bs_contribution(ch, b, Wb, theta_b)
        ct2 = CrossTerms(phi_bar + phi_b2, psi_bar + psi_b2)
        qf = assemble_quadratic(b, sc, ch, st, ct2, t_b, st.lam[b], st.rho, graph)
        new_theta = solve_theta_b(theta_b, qf, opts.inner_iters, opts.inner_tol, trace=mm_trace)
        if opts.phase_bits:
            new_theta = project_discrete(new_theta, opts.phase_bits)
        st.theta[b] = new_theta
        if msg.t.size:
            t = t_b + graph.apply(b, new_theta)
            st.lam[b] = update_lambda(st.lam[b], st.rho, t)

    phi_b3, psi_b3 = bs_contribution(ch, b, Wb, st.theta[b])
    return st, BackhaulMessage(t.copy(), phi_bar + phi_b3, psi_bar + psi_b3)


def run_decentralized(sc: Scenario, ch: ChannelSet, options: ADMMOptions | None = None,
                      state: BeamState | None = None):
    """Algorithm loop: visit BSs ``0..B-1`` repeatedly until the stopping rule fires.

    Stops after a full round when the relative sum-rate change over the
    round is below ``tol_rate`` and ``||t|| / sqrt(NR |E|)`` is below
    ``tol_residual``, or after ``max_rounds`` rounds. The penalty grows
    between rounds as set by ``options`` (``state.rho`` holds its current
    absolute value).
    """
    opts = options or ADMMOptions()
    B = ch.B
    graph = opts.graph or _default_graph(B)
    if graph.B != B:
        raise ValueError("graph size does not match the number of BSs")
    if opts.rho_mode not in ("relative", "absolute"):
        raise ValueError(f"unknown rho_mode {opts.rho_mode!r}")
    if state is None:
        state = initial_state(sc, ch, graph, opts.rho)
    unit = curvature_scale(sc, ch, state) if opts.rho_mode == "relative" else 1.0
    state.rho = opts.rho * unit
    rho_cap = opts.rho_max * unit
    msg = initial_message(ch, state, graph)
    trace = ConvergenceTrace()
    per_msg = 2 * ch.K * ch.K + ch.NR * graph.n_edges
    prev_rate = wsr_from_cross(msg.S, sc.omega, sc.noise)
    cum = 0
    visit = 0
    t0 = time.perf_counter()
    for rnd in range(opts.max_rounds):
        for b in range(B):
            mm_log = [] if opts.debug else None
            state, msg = admm_visit(b, state, msg, sc, ch, graph, opts, log=mm_log)
            visit += 1
            cum += msg.symbol_count
            rate = wsr_from_cross(msg.S, sc.omega, sc.noise)
            lag = augmented_lagrangian(
                sc, CrossTerms(msg.phi, msg.psi), state.gamma, state.xi, state.W,
                state.mu, msg.t, state.lam[b], state.rho,
            )
            trace.append(
                visit=visit, round=rnd + 1, bs=b, sum_rate_bits=rate, lagrangian=lag,
                residual=float(np.linalg.norm(msg.t)),
                max_phase_disagreement=max_phase_disagreement(state.theta),
                cum_symbols=cum, wall_clock=time.perf_counter() - t0,
            )
            if opts.debug:
                trace.debug.append({
                    "visit": visit, "bs": b, "gamma": state.gamma.copy(), "xi": state.xi.copy(),
                    "mu": state.mu.copy(), "objective": lag, "mm": mm_log,
                })
        trace.rounds = rnd + 1
        assert cum == trace.rounds * B * per_msg
        rate = trace.sum_rate_bits[-1]
        rel = abs(rate - prev_rate) / max(abs(prev_rate), 1e-300)
        nres = np.linalg.norm(msg.t) / np.sqrt(msg.t.size) if msg.t.size else 0.0
        prev_rate = rate
        state.rho = min(state.rho * opts.rho_growth, rho_cap)
        if rel < opts.tol_rate and nres < opts.tol_residual:
            trace.converged = True
            break
    return state, trace
