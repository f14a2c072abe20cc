"""Monte Carlo versus equal-area stratified (QMC) surface integration on S^2.

Both estimators use the surface measure (total mass ``4 pi``):
``I(f) ~ 4 pi / n * sum_i f(x_i)``, with ``x_i`` i.i.d. uniform for MC and one
uniform point per equal-area region for QMC.
"""
from __future__ import annotations

import functools
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .designs import expected_abs_projection
from .partition import FOUR_PI, equal_area_partition_s2

METHODS = ("MC", "QMC")
_METHOD_CODE = {"MC": 0, "QMC": 1}

DEFAULT_GRID = tuple(int(round(10 ** e)) for e in (4.0, 4.5, 5.0, 5.5, 6.0))
DESK_GRID = DEFAULT_GRID[:3]


@dataclass(frozen=True)
class Integrand:
    identifier: str
    evaluate: Callable
    exact_value: float
    description: str


def _f1(x):
    return x[:, 0] ** 2


def _f2(x):
    return 1.0 / np.linalg.norm(x - 1.0, axis=1)


def _f3(x):
    return np.exp(x[:, 0] - x[:, 1])


def _one(x):
    return np.ones(x.shape[0])


INTEGRANDS = {
    "f1": Integrand("f1", _f1, 4.0 * math.pi / 3.0, "x1^2; symmetry gives 4 pi / 3"),
    "f2": Integrand("f2", _f2, 4.0 * math.pi / math.sqrt(3.0),
                    "1/|x - (1,1,1)|; shell potential at distance sqrt(3) gives 4 pi / sqrt(3)"),
    "f3": Integrand("f3", _f3, 2.0 ** 1.5 * math.pi * math.sinh(math.sqrt(2.0)),
                    "exp(x1 - x2); 4 pi sinh(|a|)/|a| with |a| = sqrt(2)"),
    "one": Integrand("one", _one, FOUR_PI, "constant 1"),
}


def get_integrand(identifier) -> Integrand:
    if isinstance(identifier, Integrand):
        return identifier
    try:
        return INTEGRANDS[identifier]
    except KeyError:
        raise ValueError(f"unknown integrand {identifier!r}; choose from {sorted(INTEGRANDS)}") from None


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _estimate(values) -> float:
    return FOUR_PI * (math.fsum(values.tolist()) / values.size)


def uniform_sphere(n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, 3))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def integrate_mc(integrand, n: int, seed=0) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    f = get_integrand(integrand)
    return _estimate(f.evaluate(uniform_sphere(n, _rng(seed))))


@functools.lru_cache(maxsize=16)
def _cached_partition(n):
    return equal_area_partition_s2(n)


def qmc_nodes(n: int, seed=0) -> np.ndarray:
    """Partition-design nodes: one uniform point per equal-area region."""
    return _cached_partition(n).sample(_rng(seed))


def integrate_qmc(integrand, n: int, seed=0) -> float:
    if n < 1:
        raise ValueError("n must be >= 1")
    f = get_integrand(integrand)
    return _estimate(f.evaluate(qmc_nodes(n, seed)))


def mc_oracle(integrand, samples: int = 10 ** 8, seed: int = 12345, chunk: int = 10 ** 6,
              num_threads: int = 1):
    """Plain MC estimate and its standard error; chunk ``k`` uses ``default_rng([seed, k])``."""
    f = get_integrand(integrand)
    sizes = [min(chunk, samples - s) for s in range(0, samples, chunk)]

    def moments(k):
        v = f.evaluate(uniform_sphere(sizes[k], np.random.default_rng([seed, k])))
        return math.fsum(v.tolist()), math.fsum((v * v).tolist())

    if num_threads > 1:
        with ThreadPoolExecutor(max_workers=num_threads) as pool:
            parts = list(pool.map(moments, range(len(sizes))))
    else:
        parts = [moments(k) for k in range(len(sizes))]
    mean = math.fsum(a for a, _ in parts) / samples
    var = max(math.fsum(b for _, b in parts) / samples - mean * mean, 0.0)
    return FOUR_PI * mean, FOUR_PI * math.sqrt(var / samples)


@dataclass(frozen=True)
class ExperimentSpec:
    integrand: str
    node_counts: tuple = DESK_GRID
    repetitions: int = 50
    seed: int = 0
    methods: tuple = METHODS

    def __post_init__(self):
        get_integrand(self.integrand)
        if self.repetitions < 2:
            raise ValueError("repetitions must be >= 2")
        counts = tuple(int(c) for c in self.node_counts)
        if not counts or any(c < 1 for c in counts):
            raise ValueError("node counts must be positive")
        if list(counts) != sorted(counts):
            raise ValueError("node counts must be sorted ascending")
        object.__setattr__(self, "node_counts", counts)
        methods = tuple(self.methods)
        if not methods or any(m not in METHODS for m in methods):
            raise ValueError(f"methods must be a nonempty subset of {METHODS}")
        object.__setattr__(self, "methods", methods)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["node_counts"] = list(self.node_counts)
        d["methods"] = list(self.methods)
        return d


@dataclass
class ErrorRow:
    method: str
    integrand: str
    n: int
    replicate_count: int
    rmse: float
    mean_estimate: float
    standard_error: float


@dataclass
class ErrorTable:
    rows: list
    slopes: dict = field(default_factory=dict)

    def row(self, method, n) -> ErrorRow:
        return next(r for r in self.rows if r.method == method and r.n == n)

    def to_csv(self, config: dict | None = None) -> str:
        buf = io.StringIO()
        if config is not None:
            buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
        buf.write("method,integrand,n,replicate_count,rmse,slope_fitted\n")
        for r in self.rows:
            buf.write(f"{r.method},{r.integrand},{r.n},{r.replicate_count},{r.rmse!r},{self.slopes[r.method]!r}\n")
        return buf.getvalue()


def fit_loglog_slope(ns, errors) -> float:
    x = np.log10(np.asarray(ns, dtype=np.float64))
    y = np.log10(np.asarray(errors, dtype=np.float64))
    if x.size < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def _replicate(task):
    integrand, method, n, seed, rep = task
    stream = [seed, _METHOD_CODE[method], n, rep]
    if method == "MC":
        return task, integrate_mc(integrand, n, stream)
    return task, integrate_qmc(integrand, n, stream)


def run_experiment(spec: ExperimentSpec, num_threads: int = 1) -> ErrorTable:
    """RMSE over ``repetitions`` independent replicates for each (method, n)."""
    f = get_integrand(spec.integrand)
    tasks = [(spec.integrand, m, n, spec.seed, r)
             for m in spec.methods for n in spec.node_counts for r in range(spec.repetitions)]
    if num_threads > 1:
        with ThreadPoolExecutor(max_workers=num_threads) as pool:
            results = dict(pool.map(_replicate, tasks))
    else:
        results = dict(map(_replicate, tasks))
    rows, slopes = [], {}
    for m in spec.methods:
        for n in spec.node_counts:
            est = np.array([results[(spec.integrand, m, n, spec.seed, r)] for r in range(spec.repetitions)])
            err = est - f.exact_value
            rows.append(ErrorRow(
                method=m, integrand=spec.integrand, n=n, replicate_count=spec.repetitions,
                rmse=math.sqrt(math.fsum((err * err).tolist()) / est.size),
                mean_estimate=math.fsum(est.tolist()) / est.size,
                standard_error=float(np.std(est, ddof=1) / math.sqrt(est.size)),
            ))
        mine = [r for r in rows if r.method == m]
        slopes[m] = fit_loglog_slope([r.n for r in mine], [r.rmse for r in mine])
    return ErrorTable(rows=rows, slopes=slopes)


def error_plot_svg(tables: dict, config: dict | None = None, width: int = 640, height: int = 420) -> str:
    """log10(n) vs log10(RMSE), one polyline per (integrand, method)."""
    series = []
    for name, table in tables.items():
        for m in sorted({r.method for r in table.rows}):
            pts = [(math.log10(r.n), math.log10(r.rmse)) for r in table.rows if r.method == m and r.rmse > 0]
            series.append((f"{name} {m}", m, pts))
    xs = [x for _, _, pts in series for x, _ in pts] or [0.0, 1.0]
    ys = [y for _, _, pts in series for _, y in pts] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = math.floor(min(ys)), math.ceil(max(ys))
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0
    left, right, top, bottom = 70, 160, 20, 50

    def sx(x):
        return left + (x - x0) / (x1 - x0) * (width - left - right)

    def sy(y):
        return top + (y1 - y) / (y1 - y0) * (height - top - bottom)

    colors = {"MC": "#c0392b", "QMC": "#27ae60"}
    dashes = ["", "6,3", "2,3", "8,3,2,3"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">']
    if config is not None:
        out.append("<metadata>" + json.dumps(config, sort_keys=True).replace("--", "- -") + "</metadata>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>')
    out.append(f'<line x1="{left}" y1="{height - bottom}" x2="{width - right}" y2="{height - bottom}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{top}" x2="{left}" y2="{height - bottom}" stroke="black"/>')
    for k in range(int(y0), int(y1) + 1):
        out.append(f'<text x="{left - 8}" y="{sy(k) + 4:.2f}" font-size="11" text-anchor="end">{k}</text>')
    for x in sorted(set(round(v, 2) for v in xs)):
        out.append(f'<text x="{sx(x):.2f}" y="{height - bottom + 16}" font-size="11" text-anchor="middle">{x:.1f}</text>')
    out.append(f'<text x="{(left + width - right) / 2:.1f}" y="{height - 10}" font-size="12" '
               'text-anchor="middle">log10(n)</text>')
    out.append(f'<text x="16" y="{(top + height - bottom) / 2:.1f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 16 {(top + height - bottom) / 2:.1f})">log10(RMSE)</text>')
    names = sorted({s[0].rsplit(" ", 1)[0] for s in series})
    for idx, (label, method, pts) in enumerate(series):
        dash = dashes[names.index(label.rsplit(" ", 1)[0]) % len(dashes)]
        path = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts)
        style = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline points="{path}" fill="none" stroke="{colors.get(method, "black")}" '
                   f'stroke-width="2"{style}/>')
        ly = top + 16 * idx + 10
        out.append(f'<line x1="{width - right + 10}" y1="{ly}" x2="{width - right + 34}" y2="{ly}" '
                   f'stroke="{colors.get(method, "black")}" stroke-width="2"{style}/>')
        out.append(f'<text x="{width - right + 40}" y="{ly + 4}" font-size="11">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _log_beta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def first_coordinate_density(p: int, s: float) -> float:
    """Density of ``v_1`` for ``v`` uniform on ``S^{p-1}``: ``(1 - s^2)^((p-3)/2) / B((p-1)/2, 1/2)``."""
    if p < 2:
        raise ValueError("p = 1 is a point mass on {-1, 1}; no density")
    if abs(s) > 1.0:
        raise ValueError(f"s must lie in [-1, 1], got {s}")
    expo = (p - 3) / 2.0
    base = 1.0 - s * s
    if base == 0.0:
        if expo < 0:
            return math.inf
        value = 1.0 if expo == 0 else 0.0
    else:
        value = math.exp(expo * math.log(base))
    return value * math.exp(-_log_beta((p - 1) / 2.0, 0.5))


def density_checks(p: int) -> tuple:
    """Total mass and ``E|v_1|`` of the density by adaptive quadrature (via ``s = sin t``)."""
    from scipy.integrate import quad

    def mass(t):
        return first_coordinate_density(p, math.sin(t)) * math.cos(t)

    def first_abs(t):
        return math.sin(t) * first_coordinate_density(p, math.sin(t)) * math.cos(t)

    half = math.pi / 2
    total = 2.0 * quad(mass, 0.0, half, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    mean_abs = 2.0 * quad(first_abs, 0.0, half, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
    return total, mean_abs, expected_abs_projection(p)
