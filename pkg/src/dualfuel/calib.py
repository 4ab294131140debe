"""Synthetic dataset generation and batch gradient-descent calibration of the
CA50 model against the plant, with holdout validation statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, fields

import numpy as np

from .core import (
    DomainError,
    EngineGeometry,
    ModelCoefficients,
    OperatingPoint,
    default_coefficients,
)
from .model import burn_duration, ca50_from_soc_bd, predict_ca50, predict_soc
from .plant import Misfire, PlantConfig, knock_integral_soc

DATASET_COLUMNS = ("speed", "t_ivc", "p_ivc", "phi_di", "phi_ng", "egr",
                   "x_r", "soi", "soc_ref", "ca50_ref")

# coefficients adjusted by calibration (Wiebe shape is plant-only)
CALIBRATED_FIELDS = ("c1", "c2", "c3", "c4", "c5", "c6", "c8", "c9", "c10",
                     "c11", "k_c")

DIVERGENCE_RMSE = 1e3


class CalibrationDiverged(RuntimeError):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class CalibSample:
    """One steady-state reference point: boundary conditions, injection angle
    and the plant's resulting phasing."""

    op: OperatingPoint
    soi: float
    soc_ref: float
    ca50_ref: float


@dataclass(frozen=True)
class SampleRanges:
    """Sampling box for dataset generation (min, max per quantity)."""

    speed: tuple = (1200.0, 1500.0)
    t_ivc: tuple = (372.56, 408.87)
    p_ivc: tuple = (2.85, 4.37)
    phi_di: tuple = (0.2, 0.5)
    phi_ng: tuple = (0.2, 0.7)
    egr: tuple = (0.0, 0.5)
    x_r: tuple = (0.02, 0.05)
    soi: tuple = (-20.0, -10.0)


@dataclass
class CalibrationOptions:
    learn_rate: float = 0.05
    max_iters: int = 2000
    tol: float = 1e-6   # stop when an accepted step improves RMSE by less


@dataclass
class ValidationStats:
    n_samples: int
    soc_err_std: float
    soc_err_max: float
    ca50_err_std: float
    ca50_err_max: float
    soc_within_1cad: float
    ca50_within_1cad: float


@dataclass
class CalibReport:
    iterations: int
    final_rmse: float
    rmse_history: list = field(default_factory=list)
    coeff_history: list = field(default_factory=list)  # dict per iteration
    soc_err_std: float = float("nan")
    soc_err_max: float = float("nan")
    ca50_err_std: float = float("nan")
    ca50_err_max: float = float("nan")


# ---------------------------------------------------------------------------
# dataset generation

def _latin_hypercube(n, dims, rng):
    u = np.empty((n, dims))
    for j in range(dims):
        u[:, j] = (rng.permutation(n) + rng.uniform(size=n)) / n
    return u


def generate_dataset(ranges: SampleRanges | None, n_samples: int,
                     cfg: PlantConfig, seed: int = 0):
    """Latin-hypercube sample of the operating box with plant references.

    Returns (samples, misfire_count); misfired points are excluded.
    """
    if n_samples < 1:
        raise DomainError("n_samples must be at least 1")
    ranges = ranges or SampleRanges()
    names = [f.name for f in fields(SampleRanges)]
    rng = np.random.default_rng(seed)
    u = _latin_hypercube(n_samples, len(names), rng)
    samples = []
    misfires = 0
    for row in u:
        vals = {}
        for j, name in enumerate(names):
            lo, hi = getattr(ranges, name)
            vals[name] = float(lo + (hi - lo) * row[j])
        soi = vals.pop("soi")
        op = OperatingPoint(**vals)
        try:
            soc = knock_integral_soc(op, soi, cfg)
        except Misfire:
            misfires += 1
            continue
        bd = burn_duration(op.egr + op.x_r, op.phi_ng, op.phi_di, cfg.coeffs)
        ca50 = ca50_from_soc_bd(soc, bd, cfg.coeffs)
        samples.append(CalibSample(op=op, soi=soi, soc_ref=soc, ca50_ref=ca50))
    return samples, misfires


def split_dataset(samples, holdout_frac: float = 0.2, seed: int = 0):
    """Shuffle and split into (train, holdout); holdout_frac of 0 keeps
    everything in the training set."""
    if not 0.0 <= holdout_frac < 1.0:
        raise DomainError("holdout_frac must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(samples))
    n_holdout = int(round(holdout_frac * len(samples)))
    holdout_idx = set(order[:n_holdout].tolist())
    train = [s for i, s in enumerate(samples) if i not in holdout_idx]
    holdout = [s for i, s in enumerate(samples) if i in holdout_idx]
    return train, holdout


# ---------------------------------------------------------------------------
# vectorised evaluation over a dataset

def _columns(dataset):
    """Array-valued OperatingPoint plus soi/reference arrays for fast
    whole-dataset prediction."""
    if not dataset:
        raise DomainError("dataset is empty")
    cols = {name: np.array([getattr(s.op, name) for s in dataset])
            for name in ("speed", "phi_ng", "phi_di", "egr", "x_r", "p_ivc", "t_ivc")}
    op = OperatingPoint(**cols)
    soi = np.array([s.soi for s in dataset])
    soc_ref = np.array([s.soc_ref for s in dataset])
    ca50_ref = np.array([s.ca50_ref for s in dataset])
    return op, soi, soc_ref, ca50_ref


def _locate_domain_error(dataset, coeffs, geom):
    for i, s in enumerate(dataset):
        try:
            predict_ca50(s.op, s.soi, coeffs, geom)
        except DomainError as exc:
            raise DomainError(f"sample {i}: {exc}") from exc


def rmse(coeffs: ModelCoefficients, dataset, geom: EngineGeometry) -> float:
    """Root-mean-square CA50 prediction error over the dataset [CAD]."""
    op, soi, _, ca50_ref = _columns(dataset)
    try:
        pred = predict_ca50(op, soi, coeffs, geom)
    except DomainError:
        _locate_domain_error(dataset, coeffs, geom)
        raise
    return float(np.sqrt(np.mean((pred - ca50_ref) ** 2)))


def validate(coeffs: ModelCoefficients, dataset, geom: EngineGeometry) -> ValidationStats:
    """SOC and CA50 prediction-error statistics against reference values."""
    op, soi, soc_ref, ca50_ref = _columns(dataset)
    soc_err = predict_soc(op, soi, coeffs, geom) - soc_ref
    ca50_err = predict_ca50(op, soi, coeffs, geom) - ca50_ref
    return ValidationStats(
        n_samples=len(dataset),
        soc_err_std=float(np.std(soc_err)),
        soc_err_max=float(np.max(np.abs(soc_err))),
        ca50_err_std=float(np.std(ca50_err)),
        ca50_err_max=float(np.max(np.abs(ca50_err))),
        soc_within_1cad=float(np.mean(np.abs(soc_err) <= 1.0)),
        ca50_within_1cad=float(np.mean(np.abs(ca50_err) <= 1.0)),
    )


# ---------------------------------------------------------------------------
# batch gradient descent

def _pack(coeffs):
    return np.array([getattr(coeffs, name) for name in CALIBRATED_FIELDS])


def _unpack(coeffs, vec):
    return coeffs.replace(**{name: float(v) for name, v in zip(CALIBRATED_FIELDS, vec)})


def _objective(base_coeffs, op, soi, ca50_ref, geom):
    def f(vec):
        try:
            coeffs = _unpack(base_coeffs, vec)
            pred = predict_ca50(op, soi, coeffs, geom)
        except DomainError:
            return float("inf")
        out = np.sqrt(np.mean((pred - ca50_ref) ** 2))
        return float(out) if np.isfinite(out) else float("inf")
    return f


def gradient(f, vec, rel_step=1e-6):
    """Central-difference gradient with a relative step per coordinate."""
    g = np.zeros_like(vec)
    for i in range(len(vec)):
        h = rel_step * max(abs(vec[i]), 1e-12)
        e = np.zeros_like(vec)
        e[i] = h
        g[i] = (f(vec + e) - f(vec - e)) / (2.0 * h)
    return g


def calibrate(initial: ModelCoefficients | None, dataset, geom: EngineGeometry,
              options: CalibrationOptions | None = None):
    """Minimise the CA50 RMSE by batch gradient descent.

    Descent runs in magnitude-normalised coordinates (each coefficient
    scaled by its starting size) with a spectral (Barzilai-Borwein) step
    size, safeguarded by backtracking halving whenever a trial step would
    increase the RMSE, so the reported RMSE trace is non-increasing. Stops
    when no halved step improves, the improvement drops below tol, or
    max_iters is reached. The shipped coefficient set is the default
    starting point. Returns (report, coefficients).
    """
    if initial is None:
        initial = default_coefficients()
    options = options or CalibrationOptions()
    op, soi, _, ca50_ref = _columns(dataset)
    f = _objective(initial, op, soi, ca50_ref, geom)

    x = _pack(initial)
    fx = f(x)
    report = CalibReport(iterations=0, final_rmse=fx)
    report.rmse_history.append(fx)
    report.coeff_history.append(dict(zip(CALIBRATED_FIELDS, x.tolist())))
    if not np.isfinite(fx) or fx > DIVERGENCE_RMSE:
        raise CalibrationDiverged(f"initial RMSE {fx:.3g} CAD exceeds "
                                  f"{DIVERGENCE_RMSE:g}", report)

    scale = np.maximum(np.abs(x), 1e-12)
    x_prev = None
    gs_prev = None
    for _ in range(options.max_iters):
        gs = gradient(f, x) * scale   # gradient in normalised coordinates
        if not np.any(gs):
            break
        if gs_prev is not None:
            du = (x - x_prev) / scale
            dg = gs - gs_prev
            curvature = float(du @ dg)
            t = float(du @ du) / curvature if curvature > 0.0 else options.learn_rate
            t = min(max(t, 1e-6), 1e3)
        else:
            t = options.learn_rate
        accepted = False
        for _ in range(60):
            x_try = x - t * gs * scale
            f_try = f(x_try)
            if f_try < fx:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        x_prev, gs_prev = x, gs
        improvement = fx - f_try
        x, fx = x_try, f_try
        report.iterations += 1
        report.rmse_history.append(fx)
        report.coeff_history.append(dict(zip(CALIBRATED_FIELDS, x.tolist())))
        if fx > DIVERGENCE_RMSE:
            report.final_rmse = fx
            raise CalibrationDiverged(f"RMSE {fx:.3g} CAD exceeds "
                                      f"{DIVERGENCE_RMSE:g}", report)
        if improvement < options.tol:
            break

    coeffs = _unpack(initial, x)
    report.final_rmse = fx
    stats = validate(coeffs, dataset, geom)
    report.soc_err_std = stats.soc_err_std
    report.soc_err_max = stats.soc_err_max
    report.ca50_err_std = stats.ca50_err_std
    report.ca50_err_max = stats.ca50_err_max
    return report, coeffs


# ---------------------------------------------------------------------------
# CSV round trips (floats written with repr for exact reload)

def write_dataset(path, samples):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(DATASET_COLUMNS)
        for s in samples:
            row = (s.op.speed, s.op.t_ivc, s.op.p_ivc, s.op.phi_di,
                   s.op.phi_ng, s.op.egr, s.op.x_r, s.soi, s.soc_ref,
                   s.ca50_ref)
            w.writerow([repr(float(v)) for v in row])


def read_dataset(path):
    samples = []
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if tuple(header) != DATASET_COLUMNS:
            raise ValueError(f"unexpected dataset columns: {header}")
        for row in r:
            vals = dict(zip(DATASET_COLUMNS, map(float, row)))
            op = OperatingPoint(speed=vals["speed"], phi_ng=vals["phi_ng"],
                                phi_di=vals["phi_di"], egr=vals["egr"],
                                x_r=vals["x_r"], p_ivc=vals["p_ivc"],
                                t_ivc=vals["t_ivc"])
            samples.append(CalibSample(op=op, soi=vals["soi"],
                                       soc_ref=vals["soc_ref"],
                                       ca50_ref=vals["ca50_ref"]))
    return samples


def write_report_csv(path, report: CalibReport):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("iteration", "rmse") + tuple(CALIBRATED_FIELDS))
        for i, (r, c) in enumerate(zip(report.rmse_history, report.coeff_history)):
            w.writerow([i, repr(r)] + [repr(c[name]) for name in CALIBRATED_FIELDS])


def write_report_summary(path, report: CalibReport):
    lines = [
        f"iterations          {report.iterations}",
        f"final CA50 RMSE     {report.final_rmse:.6f} CAD",
        f"SOC error std/max   {report.soc_err_std:.4f} / {report.soc_err_max:.4f} CAD",
        f"CA50 error std/max  {report.ca50_err_std:.4f} / {report.ca50_err_max:.4f} CAD",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
