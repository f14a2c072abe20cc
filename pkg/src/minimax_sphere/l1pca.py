"""First principal component under the L1 criterion.

``max_{|v|=1} sum_i |x_i . v|`` equals ``max_delta |sum_i delta_i x_i|``, and the
maximizing direction is the normalized maximizing combination, so the exact
solver reuses the sign-pattern enumeration of :mod:`minimax_sphere.core`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ENUMERATION_CAP, EnumerationInfeasible, SignPattern, UnitVector, enumerate_patterns
from .designs import expected_abs_projection, gautschi_lower

NORM_TOLERANCE = 1e-9


class DataMatrix:
    """Observation rows ``x_i`` (shape ``(n, p)``) and whether they are unit-norm."""

    def __init__(self, rows, normalized: bool = False):
        arr = np.array(rows, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("data must be a nonempty (n, p) matrix")
        if not np.all(np.isfinite(arr)):
            raise ValueError("data contains non-finite entries")
        if normalized:
            norms = np.linalg.norm(arr, axis=1)
            bad = np.flatnonzero(np.abs(norms - 1.0) > NORM_TOLERANCE)
            if bad.size:
                raise ValueError(f"row {bad[0]} has norm {norms[bad[0]]!r}; normalized data needs unit rows")
        arr.setflags(write=False)
        self.rows = arr
        self.normalized = bool(normalized)

    @classmethod
    def normalize(cls, rows) -> "DataMatrix":
        arr = np.asarray(rows, dtype=np.float64)
        norms = np.linalg.norm(arr, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise ValueError("cannot normalize a zero row")
        return cls(arr / norms, normalized=True)

    @classmethod
    def from_csv(cls, path, normalized: bool = False) -> "DataMatrix":
        rows = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        return cls.normalize(rows) if normalized else cls(rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def p(self) -> int:
        return self.rows.shape[1]


@dataclass
class PC1Result:
    direction: UnitVector
    objective: float
    explained_ratio: float
    optimal_pattern: SignPattern
    normalized: bool
    method: str
    history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "direction": self.direction.coords.tolist(),
            "objective": self.objective,
            "explained_ratio": self.explained_ratio,
            "explained_ratio_basis": "n" if self.normalized else "sum_of_row_norms",
            "optimal_pattern": list(self.optimal_pattern.signs),
            "normalized": self.normalized,
            "method": self.method,
        }
        if self.history:
            out["history"] = list(self.history)
        return out


def _result(data: DataMatrix, signs, method, history=()):
    x = data.rows
    combo = signs @ x
    norm = np.linalg.norm(combo)
    if norm == 0:
        raise ValueError("all-zero data has no principal direction")
    oriented = combo / norm
    # v and -v are equivalent; make the first nonzero coordinate positive
    if oriented[np.flatnonzero(oriented)[0]] < 0:
        oriented, signs = -oriented, -signs
    objective = math.fsum(np.abs(x @ oriented).tolist())
    if data.normalized:
        ratio = objective / data.n
    else:
        ratio = objective / math.fsum(np.linalg.norm(x, axis=1).tolist())
    return PC1Result(
        direction=UnitVector(oriented),
        objective=objective,
        explained_ratio=ratio,
        optimal_pattern=SignPattern(signs.astype(int)).canonical(),
        normalized=data.normalized,
        method=method,
        history=list(history),
    )


def _check_nonzero(data: DataMatrix):
    if not np.any(data.rows):
        raise ValueError("all-zero data has no principal direction")


def exact_pc1(data: DataMatrix, num_threads=None) -> PC1Result:
    """Globally optimal L1 direction by enumerating the ``2^(n-1)`` canonical patterns.

    Ties go to the sign-lexicographically smallest canonical pattern.
    """
    _check_nonzero(data)
    if data.n > ENUMERATION_CAP:
        raise EnumerationInfeasible(
            f"n={data.n} exceeds the enumeration cap ({ENUMERATION_CAP}); use heuristic_pc1")
    _, codes, _ = enumerate_patterns(data.rows, 0.0, num_threads=num_threads)
    signs = SignPattern.from_code(int(codes[0]), data.n).as_array()
    return _result(data, signs, "exact")


def _greedy_flips(x, sq_norms, signs):
    combo = signs @ x
    value = float(combo @ combo)
    trace = [math.sqrt(value)]
    while True:
        # flipping i changes |V|^2 by 4 (|x_i|^2 - delta_i <V, x_i>)
        gain = 4.0 * (sq_norms - signs * (x @ combo))
        i = int(np.argmax(gain))
        if gain[i] <= 1e-12 * max(value, 1.0):
            return signs, trace
        combo = combo - 2.0 * signs[i] * x[i]
        signs[i] = -signs[i]
        value = float(combo @ combo)
        trace.append(math.sqrt(value))


def heuristic_pc1(data: DataMatrix, restarts: int = 32, seed: int = 0) -> PC1Result:
    """Best-improvement bit flipping on the sign pattern from random starts.

    Restart ``r`` draws its start from ``default_rng([seed, r])``.  ``history``
    is the objective trace of the winning restart and is non-decreasing.
    """
    _check_nonzero(data)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    x = data.rows
    sq_norms = np.einsum("ij,ij->i", x, x)
    best = None
    for r in range(restarts):
        rng = np.random.default_rng([seed, r])
        start = np.where(rng.random(data.n) < 0.5, -1.0, 1.0)
        signs, trace = _greedy_flips(x, sq_norms, start)
        if best is None or trace[-1] > best[1][-1]:
            best = (signs.copy(), trace)
    return _result(data, best[0], "heuristic", best[1])


def worst_case_ratio_bounds(n: int, p: int, C_p: float | None = None) -> tuple:
    """Bounds on the smallest explained ratio over normalized ``n x p`` data.

    ``lower = max(c_p, sqrt(2/(pi (p+1))))`` and
    ``upper = min(c_p + C_p n^(-1/p), sqrt(5/(4p)))``.  Without ``C_p`` the
    partition-calibrated constant is used for ``p`` in {2, 3}; for other ``p``
    the first upper term is dropped.
    """
    if p < 1 or n <= p:
        raise ValueError(f"bounds need n > p >= 1, got n={n}, p={p}")
    c = expected_abs_projection(p)
    lower = max(c, gautschi_lower(p))
    upper = math.sqrt(5.0 / (4.0 * p))
    if C_p is None and p in (2, 3):
        from .partition import calibrated_constant
        C_p = calibrated_constant(p)
    if C_p is not None:
        upper = min(upper, c + C_p * n ** (-1.0 / p))
    return lower, upper
