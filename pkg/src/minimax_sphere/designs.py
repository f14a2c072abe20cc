"""Closed-form minimax designs, their Gram matrices, and the asymptotic bounds."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Configuration, ENUMERATION_CAP, energy

SQRT5_OVER_2 = math.sqrt(5.0) / 2.0

PYRAMID_GRAM = np.array([
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.5, -0.5],
    [0.0, 0.5, 1.0, 0.5],
    [0.0, -0.5, 0.5, 1.0],
])

CUBE_GRAM = np.array([
    [1.0, 1 / 3, 1 / 3, -1 / 3],
    [1 / 3, 1.0, -1 / 3, 1 / 3],
    [1 / 3, -1 / 3, 1.0, 1 / 3],
    [-1 / 3, 1 / 3, 1 / 3, 1.0],
])


def orthonormal_design(n: int, p: int) -> Configuration:
    """First ``n`` standard basis vectors of R^p (optimal for n <= p)."""
    if not 1 <= n <= p:
        raise ValueError(f"orthonormal design needs 1 <= n <= p, got n={n}, p={p}")
    return Configuration(np.eye(p)[:n])


def semicircle_design(n: int, p: int = 2) -> Configuration:
    """Evenly spaced points ``exp(i k pi / n)``, k = 0..n-1, on the upper semicircle.

    For ``p > 2`` the circle is embedded in the first two coordinates.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if p < 2:
        raise ValueError("semicircle design needs p >= 2")
    angles = np.arange(n) * math.pi / n
    pts = np.zeros((n, p))
    pts[:, 0] = np.cos(angles)
    pts[:, 1] = np.sin(angles)
    return Configuration(pts)


def semicircle_energy(n: int) -> float:
    """Minimal energy for p = 2: ``1 / sin(pi / (2n))``."""
    return 1.0 / math.sin(math.pi / (2 * n))


def triangular_pyramid_design(p: int = 3) -> Configuration:
    """Pole ``e3`` plus an equilateral equatorial triangle starting at ``e1``.

    The second equatorial vertex is negated so that the all-plus pattern is a
    maximizing one; the Gram matrix is then exactly :data:`PYRAMID_GRAM`.
    """
    h = math.sqrt(3.0) / 2.0
    pts = np.array([
        [0.0, 0.0, 1.0],
        [1.0, 0.0, 0.0],
        [0.5, -h, 0.0],
        [-0.5, -h, 0.0],
    ])
    return Configuration(_embed(pts, p))


def cube_design(p: int = 3) -> Configuration:
    """One representative of each antipodal pair of inscribed-cube vertices (top face)."""
    pts = np.array([[1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [-1.0, -1.0, 1.0], [-1.0, 1.0, 1.0]]) / math.sqrt(3.0)
    return Configuration(_embed(pts, p))


def _embed(pts, p):
    if p < pts.shape[1]:
        raise ValueError(f"design needs p >= {pts.shape[1]}")
    out = np.zeros((pts.shape[0], p))
    out[:, :pts.shape[1]] = pts
    return out


def basis_repetition_design(n: int, p: int) -> Configuration:
    """``u_i = e_{i mod p}``: the cyclic repetition of the standard basis."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be >= 1")
    return Configuration(np.eye(p)[np.arange(n) % p])


def basis_repetition_energy(n: int, p: int) -> float:
    """Closed form ``sqrt(p k^2 + 2 k r + r)`` with ``n = k p + r``."""
    k, r = divmod(n, p)
    return math.sqrt(p * k * k + 2 * k * r + r)


def expected_abs_projection(p: int) -> float:
    """``c_p = Gamma(p/2) / (sqrt(pi) Gamma((p+1)/2))``, the mean of ``|v_1|`` on ``S^{p-1}``."""
    if p < 1:
        raise ValueError("p must be >= 1")
    if p > 2000:
        return math.exp(math.lgamma(p / 2.0) - math.lgamma((p + 1) / 2.0)) / math.sqrt(math.pi)
    # c_{q+2} = c_q * q / (q + 1), from c_1 = 1 and c_2 = 2 / pi
    q, c = (1, 1.0) if p % 2 else (2, 2.0 / math.pi)
    while q < p:
        c *= q / (q + 1.0)
        q += 2
    return c


def gautschi_lower(p: int) -> float:
    """``sqrt(2 / (pi (p + 1)))``, a strict lower bound on ``c_p``."""
    return math.sqrt(2.0 / (math.pi * (p + 1)))


def gram_matrix(config: Configuration) -> np.ndarray:
    return config.gram()


def gram_distance(gram, target) -> float:
    """Smallest max-abs entry difference over point permutations and sign flips.

    Both matrices are reduced to the same orbit representative, so the result
    is zero iff the configurations agree up to O(p), relabelling and reflections.
    """
    gram = np.asarray(gram, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    n = gram.shape[0]
    if gram.shape != target.shape:
        raise ValueError("Gram matrices must have the same shape")
    if n > 8:
        raise ValueError("gram_distance enumerates n! * 2^n relabellings; n <= 8 only")
    best = math.inf
    sign_rows = np.array(list(itertools.product((1.0, -1.0), repeat=n - 1)))
    sign_rows = np.column_stack([np.ones(len(sign_rows)), sign_rows])
    for perm in itertools.permutations(range(n)):
        g = gram[np.ix_(perm, perm)]
        for s in sign_rows:
            d = np.max(np.abs(s[:, None] * g * s[None, :] - target))
            if d < best:
                best = d
    return float(best)


def max_cosine_sum(k: int, theta: float) -> float:
    """Maximum of ``sum cos(theta_i)`` over the cyclic region ``A_k^theta``: ``k cos(theta / k)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if theta < 0 or theta > k * math.pi / 2 + 1e-15:
        raise ValueError(f"A_k^theta is empty for theta={theta} (need 0 <= theta <= k*pi/2)")
    return k * math.cos(theta / k)


@dataclass(frozen=True)
class AsymptoticBounds:
    n: int
    p: int
    c_p: float
    lower: float
    upper: float
    C_p: float | None = None


def asymptotic_bounds(n: int, p: int, C_p: float | None = None) -> AsymptoticBounds:
    """Lower and upper bounds on the minimal energy for ``n > p``.

    ``lower = max(c_p n, sqrt(2/pi) n / sqrt(p+1))`` and
    ``upper = min(c_p n + C_p n^((p-1)/p), (sqrt(5)/2) n / sqrt(p))``; the first
    upper term is dropped when ``C_p`` is None.
    """
    if n <= p:
        raise ValueError(f"bounds need n > p (for n <= p the minimal energy is sqrt(n)); got n={n}, p={p}")
    if p < 1:
        raise ValueError("p must be >= 1")
    if C_p is not None and C_p <= 0:
        raise ValueError("C_p must be positive")
    c = expected_abs_projection(p)
    lower = max(c * n, math.sqrt(2.0 / math.pi) * n / math.sqrt(p + 1))
    upper = SQRT5_OVER_2 * n / math.sqrt(p)
    if C_p is not None:
        upper = min(upper, c * n + C_p * n ** ((p - 1) / p))
    return AsymptoticBounds(n=n, p=p, c_p=c, lower=lower, upper=upper, C_p=C_p)


def closed_form_designs(n: int, p: int) -> dict:
    """All closed-form constructions that exist for ``(n, p)``, keyed by family name."""
    out = {}
    if n <= p:
        out["orthonormal"] = orthonormal_design(n, p)
    if p >= 2:
        out["semicircle"] = semicircle_design(n, p)
    if n == 4 and p >= 3:
        out["pyramid"] = triangular_pyramid_design(p)
        out["cube"] = cube_design(p)
    out["basis-repetition"] = basis_repetition_design(n, p)
    return out


@dataclass
class RatioRow:
    n: int
    energy: float
    ratio: float
    method: str


@dataclass
class RatioReport:
    """Best known energy per ``n`` for fixed ``p`` and the average energy ``energy / n``."""

    p: int
    rows: list = field(default_factory=list)

    def violations(self) -> list:
        """Consecutive ``n`` where the ratio increases (findings, not failures)."""
        return [(a.n, b.n) for a, b in zip(self.rows, self.rows[1:]) if b.ratio > a.ratio + 1e-12]

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "rows": [vars(r) for r in self.rows],
            "monotonicity_violations": self.violations(),
        }


def ratio_report(p: int, n_max: int, *, optimize: bool = True, restarts: int = 8, seed: int = 0,
                 optimize_n_max: int = 14) -> RatioReport:
    """Average-energy table ``R_p(n)``, n = 1..n_max, from the best construction per n.

    Exact values are used where they are known (n <= p; p = 2; n = 4, p = 3);
    otherwise the minimum over closed-form designs and, for ``n <= optimize_n_max``,
    a randomized optimizer run.
    """
    from .optimizer import OptimizerSettings, minimize

    report = RatioReport(p=p)
    for n in range(1, n_max + 1):
        if n <= p:
            e, method = math.sqrt(n), "exact:orthonormal"
        elif p == 2:
            e, method = semicircle_energy(n), "exact:semicircle"
        elif p == 3 and n == 4:
            e, method = math.sqrt(5.0), "exact:pyramid"
        elif p == 1:
            e, method = float(n), "exact:line"
        else:
            cands = {}
            for name, cfg in closed_form_designs(n, p).items():
                if n <= ENUMERATION_CAP:
                    cands["construction:" + name] = energy(cfg, 0.0).energy
            cands.setdefault("construction:basis-repetition", basis_repetition_energy(n, p))
            if optimize and n <= optimize_n_max:
                settings = OptimizerSettings(restarts=restarts, seed=seed)
                _, rep = minimize(n, p, settings)
                cands["optimizer"] = rep.energy
            method = min(cands, key=lambda k: (cands[k], k))
            e = cands[method]
        report.rows.append(RatioRow(n=n, energy=e, ratio=e / n, method=method))
    return report
