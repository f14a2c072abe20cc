"""Point configurations on the unit sphere and the max-absolute-projection energy.

The energy of ``u_1, ..., u_n`` on ``S^{p-1}`` is

    E(u) = max_{v in S^{p-1}} sum_i |u_i . v| = max_{delta in {-1,1}^n} || sum_i delta_i u_i ||,

and the right-hand side is evaluated by enumerating the ``2^(n-1)`` canonical
sign patterns (``delta[0] = +1``) with the kernels in :mod:`._kernels`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels

ENUMERATION_CAP = 30
DEFAULT_ACTIVE_TOLERANCE = 1e-9
MAX_ACTIVE_TOLERANCE = 1e-3
FORMAT_VERSION = 1


class EnumerationInfeasible(ValueError):
    """Raised when a configuration has too many points for exact enumeration."""


@dataclass(frozen=True)
class UnitVector:
    """A point of ``S^{p-1}``; the constructor normalizes its input."""

    coords: np.ndarray

    def __init__(self, coords):
        arr = np.array(coords, dtype=np.float64).reshape(-1)
        if arr.size < 1:
            raise ValueError("a unit vector needs dimension p >= 1")
        norm = np.linalg.norm(arr)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("cannot normalize a zero or non-finite vector")
        arr = arr / norm
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def p(self) -> int:
        return self.coords.shape[0]

    def __eq__(self, other):
        return isinstance(other, UnitVector) and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash(self.coords.tobytes())


class Configuration:
    """An ordered tuple of ``n`` points on ``S^{p-1}``, stored as an ``(n, p)`` array.

    Parameters
    ----------
    points : array_like, shape (n, p)
        Rows are normalized on construction; zero rows are rejected.
    """

    def __init__(self, points):
        raw = np.array(points, dtype=np.float64)
        if raw.ndim == 1:
            raw = raw.reshape(1, -1)
        if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
            raise ValueError(f"expected an (n, p) array with n, p >= 1, got shape {raw.shape}")
        norms = np.linalg.norm(raw, axis=1)
        if not np.all(np.isfinite(norms)) or np.any(norms == 0.0):
            raise ValueError("configuration points must be finite and nonzero")
        arr = raw / norms[:, None]
        arr.setflags(write=False)
        raw.setflags(write=False)
        self._array = arr
        self._raw = raw

    @classmethod
    def from_vectors(cls, vectors: Iterable[UnitVector]) -> "Configuration":
        vectors = list(vectors)
        dims = {v.p for v in vectors}
        if len(dims) > 1:
            raise ValueError(f"dimension mismatch among points: {sorted(dims)}")
        return cls(np.stack([v.coords for v in vectors]))

    @property
    def array(self) -> np.ndarray:
        return self._array

    @property
    def raw(self) -> np.ndarray:
        return self._raw

    @property
    def n(self) -> int:
        return self._array.shape[0]

    @property
    def p(self) -> int:
        return self._array.shape[1]

    @property
    def points(self) -> list[UnitVector]:
        return [UnitVector(row) for row in self._array]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Configuration(n={self.n}, p={self.p})"

    def transformed(self, matrix) -> "Configuration":
        """Apply ``x -> matrix @ x`` to every point."""
        return Configuration(self._array @ np.asarray(matrix, dtype=np.float64).T)

    def flipped(self, signs) -> "Configuration":
        """Per-point reflection ``u_i -> s_i u_i``; exact, no renormalization."""
        signs = np.asarray(signs, dtype=np.float64)
        if signs.shape != (self.n,) or np.any(np.abs(signs) != 1.0):
            raise ValueError("signs must be n values in {-1, +1}")
        out = object.__new__(Configuration)
        out._array = self._array * signs[:, None]
        out._raw = self._raw * signs[:, None]
        out._array.setflags(write=False)
        out._raw.setflags(write=False)
        return out

    def gram(self) -> np.ndarray:
        return self._array @ self._array.T

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "p": self.p,
            "n": self.n,
            "points": self._array.tolist(),
            "input_points": self._raw.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Configuration":
        points = np.array(data["points"], dtype=np.float64)
        if points.ndim != 2:
            raise ValueError("'points' must be a list of coordinate lists")
        if "p" in data and points.shape[1] != int(data["p"]):
            raise ValueError(f"declared p={data['p']} but points have {points.shape[1]} coordinates")
        norms = np.linalg.norm(points, axis=1)
        bad = np.flatnonzero((norms < 0.5) | (norms > 2.0))
        if bad.size:
            raise ValueError(f"point norms outside [0.5, 2] (likely corrupt) at rows {bad.tolist()}")
        raw = np.array(data.get("input_points", points), dtype=np.float64)
        # rebuild from the original input so normalization reproduces the stored bits
        return cls(raw if raw.shape == points.shape and np.all(np.linalg.norm(raw, axis=1) > 0) else points)


def save_configuration(config: Configuration, path, extra: dict | None = None) -> None:
    payload = config.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_configuration(path) -> Configuration:
    with open(path) as fh:
        return Configuration.from_dict(json.load(fh))


@dataclass(frozen=True)
class SignPattern:
    """A vector in ``{-1, +1}^n``; a pattern and its negation are identified."""

    signs: tuple

    def __init__(self, signs):
        signs = tuple(int(s) for s in signs)
        if not signs or any(s not in (-1, 1) for s in signs):
            raise ValueError("sign patterns are nonempty tuples of +1/-1")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def from_code(cls, code: int, n: int) -> "SignPattern":
        """Decode a canonical pattern: bit ``j`` of ``code`` set means ``signs[j + 1] = -1``."""
        code = int(code)
        return cls((1,) + tuple(-1 if (code >> j) & 1 else 1 for j in range(n - 1)))

    @property
    def n(self) -> int:
        return len(self.signs)

    def canonical(self) -> "SignPattern":
        return self if self.signs[0] == 1 else SignPattern(-s for s in self.signs)

    def code(self) -> int:
        c = self.canonical().signs
        return sum(1 << (j - 1) for j in range(1, len(c)) if c[j] == -1)

    def as_array(self) -> np.ndarray:
        return np.array(self.signs, dtype=np.float64)

    def sort_key(self):
        # lexicographic on the sign vector with + ordered before -
        return tuple(-s for s in self.signs)

    def __neg__(self):
        return SignPattern(-s for s in self.signs)

    def __eq__(self, other):
        return isinstance(other, SignPattern) and self.canonical().signs == other.canonical().signs

    def __hash__(self):
        return hash(self.canonical().signs)

    def __str__(self):
        return "(" + ",".join("+" if s > 0 else "-" for s in self.signs) + ")"


@dataclass
class EnergyReport:
    """Result of an exact energy evaluation."""

    energy: float
    squared_energy: float
    argmax_patterns: list
    witness: UnitVector
    active_tolerance: float
    n: int = field(default=0)
    p: int = field(default=0)

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "squared_energy": self.squared_energy,
            "argmax_patterns": [list(pat.signs) for pat in self.argmax_patterns],
            "witness": self.witness.coords.tolist(),
            "active_tolerance": self.active_tolerance,
        }


def _as_array(config) -> np.ndarray:
    if isinstance(config, Configuration):
        return config.array
    arr = np.asarray(config, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("expected an (n, p) array of points")
    return arr


def combination_vector(config, pattern) -> np.ndarray:
    """Return ``V = sum_i pattern_i u_i`` (not normalized)."""
    arr = _as_array(config)
    signs = pattern.as_array() if isinstance(pattern, SignPattern) else np.asarray(pattern, dtype=np.float64)
    if signs.shape != (arr.shape[0],):
        raise ValueError(f"pattern length {signs.shape[0]} does not match n={arr.shape[0]}")
    return signs @ arr


def enumerate_patterns(points, tolerance=DEFAULT_ACTIVE_TOLERANCE, *, cap=ENUMERATION_CAP,
                       backend=None, num_threads=None):
    """Maximum squared combination norm and all canonical codes within ``tolerance`` of it.

    Works on arbitrary (not necessarily unit) rows.  Returns ``(max_sq, codes, values)``
    with codes sorted in sign-lexicographic order (``+`` before ``-``).
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    if n > cap:
        raise EnumerationInfeasible(
            f"n={n} exceeds the enumeration cap ({cap}); use energy_lower_bound_sampled "
            "or the heuristic L1-PCA solver instead")
    kernels = _kernels.get_backend(backend)
    threads = resolve_threads(num_threads)
    low, high, k_low = _kernels.pattern_tables(points)
    rowmax = kernels.row_maxima(low, high, threads)
    max_sq = float(rowmax.max())
    threshold = (1.0 - tolerance) * max_sq
    rows = np.flatnonzero(rowmax >= threshold).astype(np.int64)
    codes, values = kernels.collect_rows(low, high, rows, threshold, k_low)
    order = _lexicographic_order(np.asarray(codes, dtype=np.int64), n)
    return max_sq, np.asarray(codes)[order], np.asarray(values)[order]


def _lexicographic_order(codes, n):
    # sign j+1 is bit j, so sign-lexicographic order is ascending bit-reversed code
    rev = np.zeros_like(codes)
    for j in range(n - 1):
        rev |= ((codes >> j) & 1) << (n - 2 - j)
    return np.argsort(rev, kind="stable")


def resolve_threads(num_threads=None) -> int:
    if num_threads is None:
        import os
        num_threads = int(os.environ.get("SPHERE_MINIMAX_THREADS", "1") or 1)
    return max(1, int(num_threads))


def energy(config, active_tolerance: float = DEFAULT_ACTIVE_TOLERANCE, *, cap: int = ENUMERATION_CAP,
           backend=None, num_threads=None) -> EnergyReport:
    """Exact energy of ``config`` by enumeration of canonical sign patterns.

    Parameters
    ----------
    config : Configuration or (n, p) array of unit rows
    active_tolerance : float
        Relative tolerance on the squared energy for collecting near-maximal
        patterns; must lie in ``[0, 1e-3]``.
    cap : int
        Largest ``n`` accepted before :class:`EnumerationInfeasible` is raised.
    """
    if not 0.0 <= active_tolerance <= MAX_ACTIVE_TOLERANCE:
        raise ValueError(f"active_tolerance must lie in [0, {MAX_ACTIVE_TOLERANCE}], got {active_tolerance}")
    if isinstance(config, Configuration):
        arr = config.array
    else:
        arr = Configuration(config).array
    n, p = arr.shape
    max_sq, codes, _ = enumerate_patterns(arr, active_tolerance, cap=cap, backend=backend,
                                          num_threads=num_threads)
    patterns = [SignPattern.from_code(c, n) for c in codes]
    best = combination_vector(arr, patterns[0])
    assert np.linalg.norm(best) > 0.0, "maximizing combination vanished; energy must be >= sqrt(n)"
    return EnergyReport(
        energy=math.sqrt(max_sq),
        squared_energy=max_sq,
        argmax_patterns=patterns,
        witness=UnitVector(best),
        active_tolerance=active_tolerance,
        n=n,
        p=p,
    )


def energy_value(config, **kwargs) -> float:
    return energy(config, 0.0, **kwargs).energy


def projection_sum(points, direction) -> float:
    """``sum_i |u_i . v|`` with compensated summation."""
    points = np.asarray(points, dtype=np.float64)
    return math.fsum(np.abs(points @ np.asarray(direction, dtype=np.float64)))


def fibonacci_sphere(count: int) -> np.ndarray:
    """Fibonacci lattice of ``count`` points on ``S^2``."""
    i = np.arange(count, dtype=np.float64) + 0.5
    z = 1.0 - 2.0 * i / count
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(count)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def random_rotation(p: int, rng) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((p, p)))
    return q * np.sign(np.diag(r))


def sample_directions(p: int, count: int, seed: int) -> np.ndarray:
    """Quasi-uniform directions: a randomly rotated Fibonacci lattice for p = 3, Gaussian otherwise."""
    rng = np.random.default_rng(seed)
    if p == 1:
        return np.ones((1, 1))
    if p == 3:
        return fibonacci_sphere(count) @ random_rotation(3, rng).T
    if p == 2:
        phi = (np.arange(count) + rng.random()) * (2 * math.pi / count)
        return np.column_stack([np.cos(phi), np.sin(phi)])
    g = rng.standard_normal((count, p))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def energy_lower_bound_sampled(config, directions: int, seed: int = 0, *, refine: bool = False,
                               chunk: int = 4096) -> float:
    """Lower bound on the energy: max of ``sum_i |u_i . v|`` over sampled directions.

    With ``refine=True`` the best sampled direction is improved by the fixed-point
    ascent ``v <- sum_i sign(u_i . v) u_i / ||...||``; every value reported is
    attained by an actual direction, so the result stays a lower bound.
    """
    if directions < 1:
        raise ValueError("directions must be >= 1")
    arr = config.array if isinstance(config, Configuration) else Configuration(config).array
    dirs = sample_directions(arr.shape[1], directions, seed)
    best_val, best_dir = -1.0, None
    for start in range(0, dirs.shape[0], chunk):
        block = dirs[start:start + chunk]
        sums = np.abs(block @ arr.T).sum(axis=1)
        k = int(np.argmax(sums))
        if sums[k] > best_val:
            best_val, best_dir = float(sums[k]), block[k]
    value = projection_sum(arr, best_dir)
    if refine:
        v = best_dir
        for _ in range(100):
            s = np.sign(arr @ v)
            s[s == 0] = 1.0
            w = s @ arr
            norm = np.linalg.norm(w)
            if norm == 0.0:
                break
            w = w / norm
            new = projection_sum(arr, w)
            if new <= value:
                break
            value, v = new, w
    return value


def all_squared_norms(config) -> np.ndarray:
    """``||V_delta||^2`` for every one of the ``2^n`` sign patterns (small ``n`` only)."""
    arr = _as_array(config)
    if arr.shape[0] > 20:
        raise EnumerationInfeasible("all_squared_norms is meant for n <= 20")
    table = _kernels.subset_sums(arr)
    return np.einsum("ij,ij->i", table, table)


def sign_matrix(n: int) -> np.ndarray:
    """Rows are the ``2^(n-1)`` canonical sign patterns in code order."""
    codes = np.arange(1 << max(n - 1, 0), dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n - 1)) & 1
    return np.column_stack([np.ones(codes.size), 1.0 - 2.0 * bits])
