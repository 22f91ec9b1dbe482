"""Monte Carlo validation of both detectors and parameter sweeps.

Every trial draws from its own generator seeded by ``(master_seed, trial)``
so results do not depend on how trials are split across workers.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.stats import binomtest

from . import __version__, detection, spectral
from .channel import InterfererDistribution, sample_interferer
from .estimation import coarse_grid_init, mle_estimate
from .kinetics import simulate_bound_counts
from .params import DerivedParams, SystemConfig, derive_all, with_similarity

logger = logging.getLogger(__name__)

SWEEP_PARAMS = ("gamma", "eta", "N", "s1hz", "bit_ratio")


@dataclass(frozen=True)
class Thresholds:
    tdd: detection.Threshold
    fdd: detection.Threshold


def compute_thresholds(cfg: SystemConfig, derived: DerivedParams | None = None) -> Thresholds:
    derived = derive_all(cfg) if derived is None else derived
    return Thresholds(
        tdd=detection.tdd_receiver_threshold(cfg, derived),
        fdd=detection.fdd_threshold(cfg, derived),
    )


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    bit: int
    c_i: float
    tdd_sample: float
    tdd_decision: int
    c_m_hat: float
    c_i_hat: float
    converged: bool
    iterations: int
    fdd_decision: int

    @property
    def tdd_error(self) -> bool:
        return self.tdd_decision != self.bit

    @property
    def fdd_error(self) -> bool:
        return self.fdd_decision != self.bit


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


GRID_POINTS = 12
GRID_SPAN = (1e-2, 1e2)


def receiver_grid(derived: DerivedParams):
    """Initial-guess grid ``(points, span)`` in units of K_D.

    The default 12-point grid over [1e-2, 1e2] is widened, at the same
    spacing, when a symbol concentration the receiver expects lies outside
    it (for example strongly saturating bit-1 releases).
    """
    lo, hi = GRID_SPAN
    for c in (derived.c_m0, derived.c_m1):
        if c > 0:
            lo = min(lo, 0.5 * c / derived.K_Dm)
            hi = max(hi, 2.0 * c / derived.K_Dm)
    if (lo, hi) == GRID_SPAN:
        return GRID_POINTS, GRID_SPAN
    step = math.log(GRID_SPAN[1] / GRID_SPAN[0]) / (GRID_POINTS - 1)
    points = int(math.ceil(math.log(hi / lo) / step)) + 1
    return points, (lo, hi)


def run_trial(
    bit: int,
    cfg: SystemConfig,
    derived: DerivedParams,
    thresholds: Thresholds,
    rng: np.random.Generator,
    trial: int = -1,
    model: spectral.PsdModel | None = None,
    backend: str | None = None,
) -> TrialRecord:
    """One transmitted bit through channel, sensor, and both detectors."""
    model = spectral.PsdModel.from_config(cfg, derived) if model is None else model
    c_m = derived.c_m(bit)
    c_i = sample_interferer(InterfererDistribution(derived.mu_ci, derived.sigma_ci), rng)
    counts = simulate_bound_counts(
        cfg.N_r, c_m, c_i, model.kinetics, cfg.burn_in, cfg.N, cfg.dt, rng, backend=backend
    ).counts
    flicker = spectral.synthesize_one_over_f(
        cfg.N, cfg.dt, cfg.S_1Hz, cfg.beta, rng, total_variance=derived.sigma2_f
    )
    current = derived.zeta * counts + flicker

    sample = float(current[cfg.N // 2])
    tdd_bit = detection.tdd_decide(sample, thresholds.tdd)

    noise = current - current.mean()
    noise = spectral.lowpass_filter(noise, cfg.lpf_cutoff)
    pg = spectral.periodogram(noise, cfg.dt)
    points, span = receiver_grid(derived)
    lam0 = coarse_grid_init(pg.values, pg.freqs, model, points=points, span=span)
    try:
        est = mle_estimate(pg.values, pg.freqs, lam0, model)
        lam, converged, iterations = est.lam, est.converged, est.iterations
    except (FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        logger.warning("trial %d: estimation failed (%s); using grid point", trial, exc)
        lam, converged, iterations = lam0, False, 0
    if not converged:
        logger.info("trial %d: estimator did not converge, using last iterate", trial)
    fdd_bit = detection.fdd_decide(lam[0], thresholds.fdd)
    return TrialRecord(
        trial=trial,
        bit=int(bit),
        c_i=float(c_i),
        tdd_sample=sample,
        tdd_decision=int(tdd_bit),
        c_m_hat=float(lam[0]),
        c_i_hat=float(lam[1]),
        converged=bool(converged),
        iterations=int(iterations),
        fdd_decision=int(fdd_bit),
    )


def _run_chunk(args) -> list[TrialRecord]:
    cfg, derived, thresholds, master_seed, trials, backend = args
    model = spectral.PsdModel.from_config(cfg, derived)
    out = []
    for trial in trials:
        rng = trial_rng(master_seed, trial)
        bit = int(rng.integers(2))
        out.append(run_trial(bit, cfg, derived, thresholds, rng, trial, model, backend))
    return out


def run_trials(cfg, M, master_seed, workers=1, derived=None, thresholds=None, backend=None):
    """All ``M`` trial records, ordered by trial index."""
    derived = derive_all(cfg) if derived is None else derived
    thresholds = compute_thresholds(cfg, derived) if thresholds is None else thresholds
    workers = resolve_workers(workers)
    if workers == 1:
        return _run_chunk((cfg, derived, thresholds, master_seed, range(M), backend))
    n_chunks = min(M, 4 * workers)
    chunks = [range(i, M, n_chunks) for i in range(n_chunks)]
    jobs = [(cfg, derived, thresholds, master_seed, c, backend) for c in chunks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        records = [r for part in pool.map(_run_chunk, jobs) for r in part]
    return sorted(records, key=lambda r: r.trial)


def resolve_workers(workers: int | None) -> int:
    if not workers:
        return os.cpu_count() or 1
    if workers < 0:
        raise ValueError("worker count must be non-negative")
    return int(workers)


def wilson_interval(errors: int, trials: int, level: float = 0.95):
    ci = binomtest(errors, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class BepReport:
    trials: int
    tdd_errors: int
    tdd_bep: float
    tdd_ci_low: float
    tdd_ci_high: float
    fdd_errors: int
    fdd_bep: float
    fdd_ci_low: float
    fdd_ci_high: float
    analytic_tdd_bep: float
    analytic_fdd_bep: float
    fdd_nonconverged: int
    config_fingerprint: str
    master_seed: int

    @classmethod
    def from_records(cls, records, cfg, master_seed, analytic=(math.nan, math.nan)):
        M = len(records)
        e_t = sum(r.tdd_error for r in records)
        e_f = sum(r.fdd_error for r in records)
        t_lo, t_hi = wilson_interval(e_t, M)
        f_lo, f_hi = wilson_interval(e_f, M)
        return cls(
            trials=M,
            tdd_errors=e_t,
            tdd_bep=e_t / M,
            tdd_ci_low=t_lo,
            tdd_ci_high=t_hi,
            fdd_errors=e_f,
            fdd_bep=e_f / M,
            fdd_ci_low=f_lo,
            fdd_ci_high=f_hi,
            analytic_tdd_bep=float(analytic[0]),
            analytic_fdd_bep=float(analytic[1]),
            fdd_nonconverged=sum(not r.converged for r in records),
            config_fingerprint=cfg.fingerprint(),
            master_seed=int(master_seed),
        )

    def tdd_interval(self):
        return self.tdd_ci_low, self.tdd_ci_high

    def fdd_interval(self):
        return self.fdd_ci_low, self.fdd_ci_high


def analytic_beps(cfg, derived=None):
    """``(tdd, fdd)`` closed-form BEPs; a failure yields NaN plus the message."""
    derived = derive_all(cfg) if derived is None else derived
    out, errors = [], []
    for fn in (detection.tdd_bep, detection.fdd_bep):
        try:
            out.append(fn(cfg, derived))
        except (ValueError, ArithmeticError) as exc:
            out.append(math.nan)
            errors.append(f"{fn.__name__}: {exc}")
    return tuple(out), "; ".join(errors)


def monte_carlo_bep(
    cfg: SystemConfig,
    M: int = 1000,
    master_seed: int = 0,
    workers: int = 1,
    backend: str | None = None,
) -> BepReport:
    if M < 100:
        raise ValueError("need at least 100 trials")
    derived = derive_all(cfg)
    records = run_trials(cfg, M, master_seed, workers, derived, backend=backend)
    analytic, err = analytic_beps(cfg, derived)
    if err:
        logger.warning("analytic BEP unavailable: %s", err)
    return BepReport.from_records(records, cfg, master_seed, analytic)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    report: BepReport | None
    error: str = ""


@dataclass
class SweepResult:
    param: str
    points: list[SweepPoint] = field(default_factory=list)

    @property
    def values(self):
        return [p.value for p in self.points]

    @property
    def reports(self):
        return [p.report for p in self.points]


def apply_sweep_value(cfg: SystemConfig, param: str, value: float) -> SystemConfig:
    """Configuration for one sweep point.

    ``eta`` sets K_Di = eta * K_Dm through the interferer unbinding rate and
    scales the mean interferer concentration by eta, which holds the
    interferer's share of bound receptors roughly fixed. ``bit_ratio`` is
    N_m0 / N_m1 with N_m1 held.
    """
    if param == "gamma":
        return cfg.replace(gamma=float(value))
    if param == "eta":
        return with_similarity(cfg, float(value)).replace(mu_ci_scale=float(value))
    if param == "N":
        if int(value) != value:
            raise ValueError("N must be an integer")
        return cfg.replace(N=int(value))
    if param == "s1hz":
        return cfg.replace(S_1Hz=float(value))
    if param == "bit_ratio":
        return cfg.replace(N_m0=float(value) * cfg.N_m1)
    raise ValueError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")


def sweep(
    param: str,
    values,
    cfg: SystemConfig,
    M: int = 1000,
    master_seed: int = 0,
    workers: int = 1,
    backend: str | None = None,
) -> SweepResult:
    """Monte Carlo BEP at each value; point failures are recorded, not raised."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("no sweep values")
    diffs = np.diff(values)
    if len(values) > 1 and not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ValueError("sweep values must be strictly monotone")
    result = SweepResult(param)
    for value in values:
        try:
            point_cfg = apply_sweep_value(cfg, param, value)
            derived = derive_all(point_cfg)
            thresholds = compute_thresholds(point_cfg, derived)
            records = run_trials(point_cfg, M, master_seed, workers, derived, thresholds, backend)
            analytic, err = analytic_beps(point_cfg, derived)
            report = BepReport.from_records(records, point_cfg, master_seed, analytic)
            result.points.append(SweepPoint(value, report, err))
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            logger.warning("sweep %s=%g failed: %s", param, value, exc)
            result.points.append(SweepPoint(value, None, str(exc)))
    return result


# Report files

REPORT_COLUMNS = ["param", "value"] + [f.name for f in fields(BepReport)] + ["error"]
_INT_COLUMNS = {"trials", "tdd_errors", "fdd_errors", "fdd_nonconverged", "master_seed"}
_STR_COLUMNS = {"param", "config_fingerprint", "error"}


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17e}"
    return str(value)


def _rows(obj):
    if isinstance(obj, BepReport):
        yield {"param": "", "value": math.nan, **asdict(obj), "error": ""}
        return
    for p in obj.points:
        row = {"param": obj.param, "value": p.value, "error": p.error}
        if p.report is not None:
            row.update(asdict(p.report))
        yield row


def format_report(obj, metadata: dict | None = None) -> str:
    """Render a BepReport or SweepResult as comma-separated text.

    Layout: ``# key: value`` metadata rows, one header row, then one row
    per report. Floats use 17 significant digits so values round-trip.
    """
    meta = {"tool": "fddmc", "version": __version__}
    if isinstance(obj, BepReport):
        meta.update(config_fingerprint=obj.config_fingerprint, master_seed=obj.master_seed)
    elif isinstance(obj, SweepResult):
        meta["param"] = obj.param
        done = [p.report for p in obj.points if p.report is not None]
        if done:
            meta.update(master_seed=done[0].master_seed)
    else:
        raise TypeError(f"cannot format {type(obj).__name__}")
    meta.update(metadata or {})
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, restval="", lineterminator="\n")
    writer.writeheader()
    for row in _rows(obj):
        writer.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def write_report(obj, path, metadata: dict | None = None) -> None:
    text = format_report(obj, metadata)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def read_report(path):
    """Parse a report file into ``(metadata, rows)``; rows are typed dicts."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read report {path}: {exc}") from exc
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        else:
            body.append(line)
    rows = []
    for raw in csv.DictReader(body):
        row = {}
        for key, value in raw.items():
            if key in _STR_COLUMNS:
                row[key] = value
            elif value == "":
                row[key] = None
            elif key in _INT_COLUMNS:
                row[key] = int(value)
            else:
                row[key] = float(value)
        rows.append(row)
    return meta, rows


def report_from_row(row: dict) -> BepReport:
    return BepReport(**{f.name: row[f.name] for f in fields(BepReport)})
