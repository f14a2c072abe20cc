"""Numerical search for minimax designs and first-order stationarity certificates.

The objective is ``l(u) = max_delta ||sum_i delta_i u_i||^2``.  Descent uses the
soft-max of the squared combination norms as a smooth surrogate; its gradient is
projected onto the tangent spaces of the sphere and the step is retracted by
renormalizing each point.  A step is accepted only if the exact objective does
not increase, and the temperature is annealed whenever no step is accepted.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import _kernels
from .core import (
    ENUMERATION_CAP,
    Configuration,
    EnergyReport,
    EnumerationInfeasible,
    energy,
    enumerate_patterns,
    resolve_threads,
    sign_matrix,
)

DENSE_MAX_N = 14
CERTIFY_ACTIVE_TOLERANCE = 1e-7
CERTIFY_TOLERANCE = 1e-6


@dataclass(frozen=True)
class OptimizerSettings:
    restarts: int = 16
    max_iterations: int = 20000
    initial_temperature: float = 1.0
    temperature_decay: float = 0.9
    final_temperature: float = 1e-6
    step_size: float = 0.1
    convergence_tolerance: float = 1e-12
    seed: int = 0
    seed_constructions: bool = True

    def __post_init__(self):
        for name in ("restarts", "max_iterations", "initial_temperature", "final_temperature",
                     "step_size", "convergence_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.temperature_decay < 1.0:
            raise ValueError(f"temperature_decay must lie in (0, 1), got {self.temperature_decay}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DescentTrace:
    config: Configuration
    history: list
    iterations: int
    converged: bool


def _normalize_rows(u):
    return u / np.linalg.norm(u, axis=1, keepdims=True)


class _Objective:
    """Exact max and soft-max gradient, dense for small n and windowed otherwise."""

    def __init__(self, n):
        self.n = n
        self.signs = sign_matrix(n) if n <= DENSE_MAX_N else None

    def value(self, u):
        if self.signs is not None:
            v = self.signs @ u
            return float(np.einsum("ij,ij->i", v, v).max())
        low, high, _ = _kernels.pattern_tables(u)
        return float(_kernels.get_backend().row_maxima(low, high, 1).max())

    def softmax_gradient(self, u, temperature):
        if self.signs is not None:
            s = self.signs
        else:
            window = min(30.0 * temperature, 0.5)
            _, codes, _ = enumerate_patterns(u, window)
            bits = (codes[:, None] >> np.arange(self.n - 1)) & 1
            s = np.column_stack([np.ones(codes.size), 1.0 - 2.0 * bits])
        v = s @ u
        q = np.einsum("ij,ij->i", v, v)
        top = q.max()
        w = np.exp((q - top) / (temperature * top))
        w /= w.sum()
        g = 2.0 * (s * w[:, None]).T @ v
        return g - np.sum(g * u, axis=1, keepdims=True) * u


def descend(config, settings: OptimizerSettings = OptimizerSettings()) -> DescentTrace:
    """Annealed smoothed descent from ``config``; ``history`` holds accepted objective values."""
    u = _normalize_rows(np.array(config.array if isinstance(config, Configuration) else config,
                                 dtype=np.float64))
    n = u.shape[0]
    if n > ENUMERATION_CAP:
        raise EnumerationInfeasible(f"n={n} exceeds the enumeration cap ({ENUMERATION_CAP})")
    obj = _Objective(n)
    current = obj.value(u)
    history = [current]
    temperature = settings.initial_temperature
    eta = settings.step_size
    it = 0
    while temperature > settings.final_temperature and it < settings.max_iterations:
        it += 1
        g = obj.softmax_gradient(u, temperature)
        step = eta
        accepted = None
        for _ in range(30):
            trial = _normalize_rows(u - step * g)
            val = obj.value(trial)
            if val <= current:
                accepted = (trial, val)
                break
            step *= 0.5
        if accepted is not None and current - accepted[1] > settings.convergence_tolerance * current:
            u, current = accepted
            history.append(current)
            eta = min(2.0 * step, 1.0)
        else:
            temperature *= settings.temperature_decay
            eta = settings.step_size
    converged = temperature <= settings.final_temperature
    return DescentTrace(Configuration(u), history, it, converged)


def local_descent(config, settings: OptimizerSettings = OptimizerSettings()) -> Configuration:
    return descend(config, settings).config


def _restart_start(n, p, seed, index):
    rng = np.random.default_rng([seed, index])
    return _normalize_rows(rng.standard_normal((n, p)))


def _sort_key(value, cfg):
    return (value, tuple(cfg.array.ravel().tolist()))


def minimize(n: int, p: int, settings: OptimizerSettings = OptimizerSettings(), *,
             num_threads=None, return_trials: bool = False):
    """Best configuration over random restarts (and closed-form seeds, if enabled).

    Restart ``r`` starts from Gaussian points drawn with ``default_rng([seed, r])``;
    ties in energy are broken by the lexicographically smallest coordinate list.
    Returns ``(configuration, energy_report)``, plus the list of per-start
    ``(label, energy)`` pairs when ``return_trials`` is set.
    """
    if not 1 <= n <= ENUMERATION_CAP:
        raise EnumerationInfeasible(f"n must lie in [1, {ENUMERATION_CAP}], got {n}")
    if p < 1:
        raise ValueError("p must be >= 1")
    starts = [(f"random:{r}", _restart_start(n, p, settings.seed, r)) for r in range(settings.restarts)]
    if settings.seed_constructions:
        from .designs import closed_form_designs
        starts += [(f"construction:{k}", cfg.array) for k, cfg in sorted(closed_form_designs(n, p).items())]

    def run(item):
        label, start = item
        cfg = local_descent(start, settings)
        return label, cfg, energy(cfg, 0.0).squared_energy

    threads = resolve_threads(num_threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(item) for item in starts]
    label, best, _ = min(results, key=lambda r: _sort_key(r[2], r[1]))
    report = energy(best)
    if return_trials:
        return best, report, [(lab, math.sqrt(val)) for lab, _, val in results]
    return best, report


@dataclass
class CertificationResult:
    active_set: list
    residual: float
    descent_margin: float
    descent_direction_found: bool
    certified: bool
    squared_energy: float = 0.0
    coefficients: list = field(default_factory=list)
    kind: str = "stationary (first-order)"

    def to_dict(self) -> dict:
        return {
            "active_set": [list(a.signs) for a in self.active_set],
            "residual": self.residual,
            "descent_margin": self.descent_margin,
            "descent_direction_found": self.descent_direction_found,
            "certified": self.certified,
            "squared_energy": self.squared_energy,
            "coefficients": list(self.coefficients),
            "kind": self.kind,
        }


def tangent_basis(u) -> np.ndarray:
    """Orthonormal basis (columns) of the tangent space at unit vector ``u``."""
    u = np.asarray(u, dtype=np.float64)
    q, _ = np.linalg.qr(np.column_stack([u, np.eye(u.size)]))
    return q[:, 1:u.size]


def certify_local_minimum(config: Configuration, active_tolerance: float = CERTIFY_ACTIVE_TOLERANCE,
                          certification_tolerance: float = CERTIFY_TOLERANCE) -> CertificationResult:
    """First-order stationarity test for the max objective at ``config``.

    1. Active set ``M``: canonical patterns within ``active_tolerance`` of the max.
    2. Descent LP: maximize ``s`` subject to ``<V_a, sum_j a_j t_j> <= -s`` for all
       ``a in M``, with tangent vectors ``t_j`` in a unit box.  A margin
       ``s > certification_tolerance`` is a descent direction.
    3. Otherwise the smallest eigenvalue of the Gram of the projected active
       gradients, divided by the squared energy, is the residual.
    """
    if active_tolerance <= 0 or certification_tolerance <= 0:
        raise ValueError("tolerances must be positive")
    rep: EnergyReport = energy(config, active_tolerance)
    u = config.array
    n, p = u.shape
    active = rep.argmax_patterns
    if not active:
        raise RuntimeError("empty active set")
    bases = [tangent_basis(ui) for ui in u]
    dt = p - 1
    m = len(active)
    # projected gradients: rows alpha, blocks i of size p-1 hold alpha_i B_i^T V_alpha
    grads = np.zeros((m, n * dt))
    for row, pat in enumerate(active):
        vec = pat.as_array() @ u
        for i in range(n):
            grads[row, i * dt:(i + 1) * dt] = pat.signs[i] * (bases[i].T @ vec)
    scale = rep.squared_energy
    if dt == 0:
        margin = 0.0
    else:
        c = np.zeros(n * dt + 1)
        c[-1] = -1.0
        a_ub = np.column_stack([grads, np.ones(m)])
        bounds = [(-1.0, 1.0)] * (n * dt) + [(None, 1.0)]
        lp = linprog(c, A_ub=a_ub, b_ub=np.zeros(m), bounds=bounds, method="highs")
        if lp.status != 0:
            raise RuntimeError(f"descent LP failed: {lp.message}")
        margin = float(lp.x[-1]) / math.sqrt(scale)
    found = margin > certification_tolerance
    q = grads @ grads.T
    evals, evecs = np.linalg.eigh(q)
    residual = float(max(evals[0], 0.0) / scale)
    coeffs = evecs[:, 0]
    coeffs = coeffs * (1.0 if coeffs[np.argmax(np.abs(coeffs))] > 0 else -1.0)
    certified = (not found) and residual <= certification_tolerance
    return CertificationResult(
        active_set=active,
        residual=residual,
        descent_margin=margin,
        descent_direction_found=found,
        certified=certified,
        squared_energy=rep.squared_energy,
        coefficients=coeffs.tolist(),
    )


@dataclass
class BasinStatistics:
    counts: dict
    certified: int
    total: int
    unexplained: list

    def to_dict(self):
        return asdict(self)


def basin_statistics(n: int, p: int, restarts: int, settings: OptimizerSettings = OptimizerSettings(),
                     known: dict | None = None, tolerance: float = 1e-3) -> BasinStatistics:
    """Classify terminal energies of independent random restarts against known values."""
    known = known or {}
    counts = {k: 0 for k in known}
    counts["other"] = 0
    unexplained = []
    certified = 0
    for r in range(restarts):
        cfg = local_descent(_restart_start(n, p, settings.seed, r), settings)
        cert = certify_local_minimum(cfg)
        e = math.sqrt(cert.squared_energy)
        certified += cert.certified
        label = next((k for k, val in known.items() if abs(e - val) <= tolerance), None)
        if label is None:
            counts["other"] += 1
            if cert.certified:
                unexplained.append(e)
        else:
            counts[label] += 1
    return BasinStatistics(counts=counts, certified=certified, total=restarts, unexplained=unexplained)
