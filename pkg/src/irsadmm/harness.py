"""Monte-Carlo experiment runner.

An experiment is a grid of sweep values times ``drops`` random network
drops. Every method listed in the config runs on the same channel draw
of a drop. Output files (all CSV, fixed column order):

``results.csv``     one row per (method, value, drop); byte-identical
                    for identical configs
``timings.csv``     wall-clock seconds per row, kept apart so that the
                    results file stays reproducible
``aggregate.csv``   mean and standard error per (method, value)
``traces/``         per-run convergence traces, when requested

Method names are a base scheme plus optional ``_``-separated modifiers:

* ``decentralized``, ``centralized``  FP+MM solvers
* ``mrt``, ``zf``                     non-cooperative baselines
* ``noirs``  drop the IRSs from the channel
* ``irs``    (mrt/zf only) use the phases found by the decentralized solver
* ``u<k>``   ``k``-bit discrete phases

e.g. ``decentralized_noirs`` or ``decentralized_u3``.
"""
from __future__ import annotations

import csv
import re
import time
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .baselines import RankDeficiencyWarning, local_zf, mrt, solve_centralized
from .consensus import ADMMOptions, backhaul_symbols, run_decentralized
from .fpcore import weighted_sum_rate
from .model import ScenarioConfig, generate_scenario

__all__ = [
    "ExperimentConfig",
    "MethodSpec",
    "ResultRow",
    "parse_method",
    "drop_seed",
    "load_config",
    "run_method",
    "run_experiment",
    "aggregate",
    "RESULT_COLUMNS",
    "AGGREGATE_COLUMNS",
]

BASES = ("decentralized", "centralized", "mrt", "zf")

# sweep variable name -> ScenarioConfig field
SWEEP_FIELDS = {
    "P_t": "P_dBm", "P_dBm": "P_dBm",
    "N_t": "Nt", "Nt": "Nt",
    "N": "N", "K": "K", "R": "R", "B": "B", "D": "D",
}

RESULT_COLUMNS = (
    "method", "value", "value2", "drop", "seed", "sum_rate_bits",
    "rounds", "converged", "backhaul_symbols", "channel_checksum",
)
TIMING_COLUMNS = ("method", "value", "value2", "drop", "wall_clock_s")
AGGREGATE_COLUMNS = ("method", "value", "value2", "n", "mean_sum_rate", "stderr_sum_rate", "mean_rounds")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    base: str
    irs: bool = True
    bits: int | None = None
    use_opt_theta: bool = False


def parse_method(name: str) -> MethodSpec:
    parts = name.strip().lower().split("_")
    base = parts[0]
    if base not in BASES:
        raise ValueError(f"unknown method {name!r}; bases are {', '.join(BASES)}")
    spec = MethodSpec(name=name, base=base, irs=base in ("decentralized", "centralized"))
    for mod in parts[1:]:
        if mod == "noirs":
            spec = replace(spec, irs=False, use_opt_theta=False)
        elif mod == "irs" and base in ("mrt", "zf"):
            spec = replace(spec, irs=True, use_opt_theta=True)
        elif re.fullmatch(r"u\d+", mod) and base in ("decentralized", "centralized"):
            bits = int(mod[1:])
            if bits < 1:
                raise ValueError(f"{name!r}: phase bits must be >= 1")
            spec = replace(spec, bits=bits)
        else:
            raise ValueError(f"unknown modifier {mod!r} in method {name!r}")
    return spec


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    methods: tuple[str, ...] = ("decentralized",)
    sweep: str = "P_t"
    values: tuple = (0.0,)
    sweep2: str | None = None
    values2: tuple = ()
    drops: int = 20
    seed: int = 0
    out: str | None = None
    admm: ADMMOptions = field(default_factory=ADMMOptions)
    save_traces: bool = False
    debug: bool = False

    def __post_init__(self):
        if self.drops < 1:
            raise ValueError("drops must be >= 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        if not len(self.values):
            raise ValueError("sweep values must be non-empty")
        for name in (self.sweep, self.sweep2):
            if name is not None and name not in SWEEP_FIELDS:
                raise ValueError(f"unknown sweep variable {name!r}; choose from {sorted(SWEEP_FIELDS)}")
        if self.sweep2 is not None and not len(self.values2):
            raise ValueError("sweep2 needs a non-empty values2 list")
        for m in self.methods:
            parse_method(m)

    def grid(self):
        """``(value, value2)`` pairs in output order."""
        second = self.values2 if self.sweep2 is not None else (None,)
        return [(v, w) for v in self.values for w in second]

    def scenario_for(self, value, value2=None) -> ScenarioConfig:
        changes = {SWEEP_FIELDS[self.sweep]: _cast(SWEEP_FIELDS[self.sweep], value)}
        if self.sweep2 is not None:
            changes[SWEEP_FIELDS[self.sweep2]] = _cast(SWEEP_FIELDS[self.sweep2], value2)
        return self.scenario.with_(**changes)


def _cast(fname, value):
    return float(value) if fname in ("P_dBm", "D") else int(value)


@dataclass
class ResultRow:
    method: str
    value: float
    value2: float | None
    drop: int
    seed: int
    sum_rate_bits: float
    rounds: int
    converged: bool
    backhaul_symbols: int
    channel_checksum: str
    wall_clock_s: float = 0.0


def drop_seed(master: int, drop: int) -> int:
    """Seed of drop ``drop``; depends only on ``(master, drop)``."""
    ss = np.random.SeedSequence(int(master), spawn_key=(int(drop),))
    return int(ss.generate_state(1, np.uint32)[0])


# -- config file ---------------------------------------------------------------

_SCENARIO_KEYS = {f.name for f in fields(ScenarioConfig)} | {"N_t", "U_bits"}
_ADMM_KEYS = {"rho", "rho_mode", "rho_growth", "rho_max", "max_rounds", "tol_rate",
              "tol_residual", "inner_iters", "inner_tol"}
_TOP_KEYS = {"methods", "sweep", "values", "sweep2", "values2", "drops", "seed", "out",
             "save_traces", "debug"}


def _as_tuple(x):
    if x is None:
        return ()
    if isinstance(x, (list, tuple)):
        return tuple(x)
    return (x,)


def config_from_dict(d: dict) -> ExperimentConfig:
    d = dict(d or {})
    unknown = set(d) - _SCENARIO_KEYS - _ADMM_KEYS - _TOP_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    sc = {}
    for k in _SCENARIO_KEYS & set(d):
        val = d[k]
        if k == "N_t":
            sc["Nt"] = int(val)
        elif k == "U_bits":
            sc["phase_bits"] = None if val in (None, "continuous") else int(val)
        elif k == "omega":
            sc["omega"] = tuple(float(x) for x in _as_tuple(val))
        else:
            sc[k] = val
    admm = ADMMOptions(**{k: d[k] for k in _ADMM_KEYS & set(d)})
    scen = ScenarioConfig(**sc)
    admm.phase_bits = scen.phase_bits
    sweep = d.get("sweep", "P_t")
    values = _as_tuple(d.get("values"))
    if not values:
        # no sweep given: a single point at the configured value
        values = (getattr(scen, SWEEP_FIELDS.get(sweep, "P_dBm")),)
    return ExperimentConfig(
        scenario=scen,
        methods=tuple(_as_tuple(d.get("methods", "decentralized"))),
        sweep=sweep,
        values=values,
        sweep2=d.get("sweep2"),
        values2=_as_tuple(d.get("values2")),
        drops=int(d.get("drops", 20)),
        seed=int(d.get("seed", 0)),
        out=d.get("out"),
        admm=admm,
        save_traces=bool(d.get("save_traces", False)),
        debug=bool(d.get("debug", False)),
    )


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValueError(f"{path}: cannot parse config: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ValueError(f"{path}: config must be a mapping of keys to values")
    return config_from_dict(data)


# -- running -------------------------------------------------------------------

def _admm_for(spec: MethodSpec, base: ADMMOptions, debug: bool) -> ADMMOptions:
    bits = spec.bits if spec.bits is not None else base.phase_bits
    return replace(base, phase_bits=bits, debug=debug)


def run_method(spec: MethodSpec, sc, ch, admm: ADMMOptions, opt_theta=None, debug=False):
    """Run one method on one drop; returns ``(rate_bits, rounds, converged, symbols, trace, theta)``."""
    if not spec.irs:
        sc, ch = sc.without_irs(), ch.without_irs()
    opts = _admm_for(spec, admm, debug)
    if spec.base == "decentralized":
        state, trace = run_decentralized(sc, ch, opts)
        n_edges = opts.graph.n_edges if opts.graph is not None else (ch.B if ch.B >= 2 else 0)
        symbols = trace.rounds * backhaul_symbols(ch.B, ch.K, ch.N, sc.R, n_edges)
        if trace.cum_symbols and trace.cum_symbols[-1] != symbols:
            raise RuntimeError("backhaul accounting mismatch")
        return trace.final_rate, trace.rounds, trace.converged, symbols, trace, state.theta[0]
    if spec.base == "centralized":
        cstate, trace = solve_centralized(sc, ch, opts)
        return trace.final_rate, trace.rounds, trace.converged, 0, trace, cstate.theta
    theta = opt_theta if spec.use_opt_theta else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficiencyWarning)
        W = mrt(sc, ch, theta) if spec.base == "mrt" else local_zf(sc, ch, theta)
    if theta is None:
        # baselines without optimised phases see the IRS-free channel
        sc, ch = sc.without_irs(), ch.without_irs()
        theta = np.zeros(0, complex)
    return weighted_sum_rate(sc, ch, W, theta), 0, True, 0, None, None


def _needs_opt_theta(specs) -> bool:
    return any(s.use_opt_theta for s in specs)


def run_experiment(config: ExperimentConfig, out=None, per_method: bool = False,
                   progress=None) -> list[ResultRow]:
    """Run every (value, drop, method) and write the CSV outputs to ``out``.

    ``out`` defaults to ``config.out``; with neither set nothing is
    written. ``per_method`` adds one ``aggregate_<method>.csv`` per method.
    """
    out = out if out is not None else config.out
    outdir = Path(out) if out else None
    if outdir is not None:
        try:
            outdir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {outdir}: {exc}") from None
        if config.save_traces or config.debug:
            (outdir / "traces").mkdir(exist_ok=True)
    specs = [parse_method(m) for m in config.methods]
    rows: list[ResultRow] = []
    for vi, (value, value2) in enumerate(config.grid()):
        scfg = config.scenario_for(value, value2)
        for drop in range(config.drops):
            seed = drop_seed(config.seed, drop)
            sc, ch = generate_scenario(scfg, seed)
            checksum = ch.checksum()
            opt_theta = None
            if _needs_opt_theta(specs) and ch.NR:
                opt_theta = run_method(parse_method("decentralized"), sc, ch, config.admm)[5]
            for spec in specs:
                if ch.checksum() != checksum:
                    raise RuntimeError("channel set modified between methods")
                t0 = time.perf_counter()
                rate, rounds, conv, sym, trace, _ = run_method(
                    spec, sc, ch, config.admm, opt_theta=opt_theta, debug=config.debug)
                wall = time.perf_counter() - t0
                rows.append(ResultRow(spec.name, value, value2, drop, seed, rate, rounds,
                                      conv, sym, checksum, wall))
                if outdir is not None and trace is not None and (config.save_traces or config.debug):
                    stem = f"{spec.name}_v{vi}_d{drop}"
                    trace.to_csv(outdir / "traces" / f"{stem}.csv")
                    if config.debug and trace.debug:
                        _write_debug(trace.debug, outdir / "traces" / f"{stem}_debug.csv")
                if progress is not None:
                    progress(rows[-1])
    if outdir is not None:
        write_results(rows, outdir / "results.csv")
        write_timings(rows, outdir / "timings.csv")
        agg = aggregate(rows)
        write_aggregate(agg, outdir / "aggregate.csv")
        if per_method:
            for m in config.methods:
                write_aggregate([a for a in agg if a["method"] == m], outdir / f"aggregate_{m}.csv")
    return rows


# -- output --------------------------------------------------------------------

def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write(path, columns, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([_fmt(rec[c]) for c in columns])


def write_results(rows, path) -> None:
    _write(path, RESULT_COLUMNS, [vars(r) for r in rows])


def write_timings(rows, path) -> None:
    _write(path, TIMING_COLUMNS, [vars(r) for r in rows])


def write_aggregate(agg, path) -> None:
    _write(path, AGGREGATE_COLUMNS, agg)


def aggregate(rows) -> list[dict]:
    """Mean and standard error of the sum-rate per (method, value, value2).

    Groups keep first-appearance order; the standard error uses the
    sample standard deviation (zero for a single drop).
    """
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.method, r.value, r.value2), []).append(r)
    out = []
    for (m, v, v2), rs in groups.items():
        x = np.array([r.sum_rate_bits for r in rs], float)
        se = float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0
        out.append({
            "method": m, "value": v, "value2": v2, "n": x.size,
            "mean_sum_rate": float(x.mean()), "stderr_sum_rate": se,
            "mean_rounds": float(np.mean([r.rounds for r in rs])),
        })
    return out


def _write_debug(records, path) -> None:
    cols = ("visit", "bs", "objective", "gamma", "xi", "mu", "mm")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in records:
            w.writerow([
                rec["visit"], rec["bs"], repr(float(rec["objective"])),
                " ".join(repr(float(g)) for g in rec["gamma"]),
                " ".join(f"{z.real!r}{z.imag:+}j" for z in rec["xi"]),
                " ".join(repr(float(m)) for m in rec["mu"]),
                " ".join(repr(float(g)) for g in (rec["mm"] or [])),
            ])
