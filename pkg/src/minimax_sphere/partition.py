"""Equal-area partitions of S^2 (and S^1) into z-phi rectangles.

On S^2 the area of ``{z_lo <= z <= z_hi, phi_lo <= phi < phi_hi}`` is
``(z_hi - z_lo) (phi_hi - phi_lo)`` (Archimedes' hat-box theorem), so a band of
height ``2 s / n`` split into ``s`` equal sectors has regions of area exactly
``4 pi / n``.  Band sector counts follow the recursive zonal scheme: one polar
cap at each pole, then collars of nearly square regions whose counts are
rounded with carry-over so that they sum to ``n - 2``.
"""
from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np

from .core import Configuration, UnitVector

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi
CALIBRATION_SIZES = (16, 64, 256, 1024, 4096)


@dataclass(frozen=True)
class Region:
    z_range: tuple
    azimuth_range: tuple

    @property
    def area(self) -> float:
        return (self.z_range[1] - self.z_range[0]) * (self.azimuth_range[1] - self.azimuth_range[0])


@dataclass(frozen=True)
class Arc:
    azimuth_range: tuple

    @property
    def length(self) -> float:
        return self.azimuth_range[1] - self.azimuth_range[0]


class Partition:
    """An equal-measure partition stored as boundary arrays.

    For ``p = 3`` the regions are z-phi rectangles; for ``p = 2`` they are arcs
    and ``z_lo``/``z_hi`` are None.
    """

    def __init__(self, p, phi_lo, phi_hi, z_lo=None, z_hi=None):
        self.p = int(p)
        self.phi_lo = np.asarray(phi_lo, dtype=np.float64)
        self.phi_hi = np.asarray(phi_hi, dtype=np.float64)
        self.z_lo = None if z_lo is None else np.asarray(z_lo, dtype=np.float64)
        self.z_hi = None if z_hi is None else np.asarray(z_hi, dtype=np.float64)
        self.diameter_max = None

    @property
    def n(self) -> int:
        return self.phi_lo.shape[0]

    @property
    def measure(self) -> float:
        return FOUR_PI if self.p == 3 else TWO_PI

    @property
    def regions(self) -> list:
        if self.p == 2:
            return [Arc((a, b)) for a, b in zip(self.phi_lo.tolist(), self.phi_hi.tolist())]
        return [Region((zl, zh), (a, b)) for zl, zh, a, b in
                zip(self.z_lo.tolist(), self.z_hi.tolist(), self.phi_lo.tolist(), self.phi_hi.tolist())]

    def areas(self) -> np.ndarray:
        width = self.phi_hi - self.phi_lo
        return width if self.p == 2 else (self.z_hi - self.z_lo) * width

    def sample(self, rng) -> np.ndarray:
        """One uniform point per region, drawn in region order from ``rng``."""
        if self.p == 2:
            phi = self.phi_lo + (self.phi_hi - self.phi_lo) * rng.random(self.n)
            return np.column_stack([np.cos(phi), np.sin(phi)])
        z = self.z_lo + (self.z_hi - self.z_lo) * rng.random(self.n)
        phi = self.phi_lo + (self.phi_hi - self.phi_lo) * rng.random(self.n)
        return _to_cartesian(z, phi)

    def to_dict(self) -> dict:
        if self.p == 2:
            regions = [{"phi": [a, b]} for a, b in zip(self.phi_lo.tolist(), self.phi_hi.tolist())]
        else:
            regions = [{"z": [zl, zh], "phi": [a, b]} for zl, zh, a, b in
                       zip(self.z_lo.tolist(), self.z_hi.tolist(), self.phi_lo.tolist(), self.phi_hi.tolist())]
        out = {"format_version": 1, "p": self.p, "n": self.n, "regions": regions}
        if self.diameter_max is not None:
            out["diameter_max"] = self.diameter_max
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Partition":
        regions = data["regions"]
        if len(regions) != int(data["n"]):
            raise ValueError(f"declared n={data['n']} but found {len(regions)} regions")
        phi = np.array([r["phi"] for r in regions], dtype=np.float64).reshape(-1, 2)
        p = int(data.get("p", 3 if regions and "z" in regions[0] else 2))
        if p == 2:
            return cls(2, phi[:, 0], phi[:, 1])
        z = np.array([r["z"] for r in regions], dtype=np.float64).reshape(-1, 2)
        return cls(3, phi[:, 0], phi[:, 1], z[:, 0], z[:, 1])


def _to_cartesian(z, phi):
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _round_half_up(x):
    return int(math.floor(x + 0.5))


def collar_counts(n: int) -> list:
    """Region counts per band from north to south, polar caps included."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return [1]
    if n == 2:
        return [1, 1]
    area = FOUR_PI / n
    cap = math.acos(1.0 - 2.0 / n)
    span = math.pi - 2.0 * cap
    collars = max(1, _round_half_up(span / math.sqrt(area)))
    width = span / collars
    counts, carry = [], 0.0
    for i in range(collars):
        top, bottom = cap + i * width, cap + (i + 1) * width
        ideal = TWO_PI * (math.cos(top) - math.cos(bottom)) / area
        m = _round_half_up(ideal + carry)
        carry += ideal - m
        counts.append(m)
    # carry-over rounding preserves the total up to floating error
    counts[-1] += (n - 2) - sum(counts)
    return [1] + [m for m in counts if m > 0] + [1]


def equal_area_partition_s2(n: int) -> Partition:
    """Partition S^2 into ``n`` z-phi rectangles of area ``4 pi / n``."""
    counts = collar_counts(n)
    z_lo, z_hi, phi_lo, phi_hi = [], [], [], []
    done = 0
    for m in counts:
        top = 1.0 - 2.0 * done / n
        done += m
        bottom = 1.0 - 2.0 * done / n if done < n else -1.0
        edges = np.arange(m + 1) * (TWO_PI / m)
        edges[-1] = TWO_PI
        z_hi += [top] * m
        z_lo += [bottom] * m
        phi_lo += edges[:-1].tolist()
        phi_hi += edges[1:].tolist()
    return Partition(3, phi_lo, phi_hi, z_lo, z_hi)


def equal_area_partition_s1(n: int) -> Partition:
    """``n`` arcs of length ``2 pi / n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    edges = np.arange(n + 1) * (TWO_PI / n)
    edges[-1] = TWO_PI
    return Partition(2, edges[:-1], edges[1:])


def equal_area_partition(n: int, p: int = 3) -> Partition:
    if p == 3:
        return equal_area_partition_s2(n)
    if p == 2:
        return equal_area_partition_s1(n)
    raise ValueError(f"equal-area partitions are implemented for p in {{2, 3}}, got p={p}")


def sample_region(region, seed: int, index: int) -> UnitVector:
    """Uniform point in one region from the stream ``default_rng([seed, index])``."""
    rng = np.random.default_rng([seed, index])
    if isinstance(region, Arc):
        a, b = region.azimuth_range
        phi = a + (b - a) * rng.random()
        return UnitVector([math.cos(phi), math.sin(phi)])
    z = region.z_range[0] + (region.z_range[1] - region.z_range[0]) * rng.random()
    phi = region.azimuth_range[0] + (region.azimuth_range[1] - region.azimuth_range[0]) * rng.random()
    return UnitVector(_to_cartesian(np.array([z]), np.array([phi]))[0])


def partition_design(n: int, seed: int = 0, p: int = 3) -> Configuration:
    """One uniformly sampled point in every region of the equal-area partition."""
    part = equal_area_partition(n, p)
    return Configuration(part.sample(np.random.default_rng(seed)))


def _region_points(part: Partition, samples_per_region: int, rng, edge_points: int = 17):
    # boundary grid (corners included) plus uniform interior samples, shape (n, m, dim)
    t = np.linspace(0.0, 1.0, edge_points)
    if part.p == 2:
        frac = np.concatenate([t, rng.random((samples_per_region,))])
        phi = part.phi_lo[:, None] + (part.phi_hi - part.phi_lo)[:, None] * frac[None, :]
        return np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    zs, ps = [], []
    for fz, fp in ((t, np.zeros_like(t)), (t, np.ones_like(t)), (np.zeros_like(t), t), (np.ones_like(t), t)):
        zs.append(np.broadcast_to(fz, (part.n, t.size)))
        ps.append(np.broadcast_to(fp, (part.n, t.size)))
    zs.append(rng.random((part.n, samples_per_region)))
    ps.append(rng.random((part.n, samples_per_region)))
    fz, fp = np.concatenate(zs, axis=1), np.concatenate(ps, axis=1)
    z = part.z_lo[:, None] + (part.z_hi - part.z_lo)[:, None] * fz
    phi = part.phi_lo[:, None] + (part.phi_hi - part.phi_lo)[:, None] * fp
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def region_diameters(part: Partition, samples_per_region: int = 32, seed: int = 0,
                     block: int = 512) -> np.ndarray:
    """Measured chord diameter of every region (a lower bound that tightens with sampling)."""
    if samples_per_region < 2:
        raise ValueError("samples_per_region must be >= 2")
    rng = np.random.default_rng(seed)
    pts = _region_points(part, samples_per_region, rng)
    out = np.empty(part.n)
    for start in range(0, part.n, block):
        x = pts[start:start + block]
        g = np.einsum("rid,rjd->rij", x, x)
        sq = np.clip(2.0 - 2.0 * g, 0.0, 4.0)
        out[start:start + block] = np.sqrt(sq.max(axis=(1, 2)))
    return out


def diameters(part: Partition, samples_per_region: int = 32, seed: int = 0) -> float:
    """Largest measured region diameter; also stored on ``part.diameter_max``."""
    dmax = float(region_diameters(part, samples_per_region, seed).max())
    part.diameter_max = dmax
    return dmax


@functools.lru_cache(maxsize=None)
def calibrated_constant(p: int = 3, sizes: tuple = CALIBRATION_SIZES, samples_per_region: int = 32,
                        seed: int = 0) -> float:
    """``max over sizes of diameter_max * n^(1/p)`` for the partitions of this module."""
    return max(diameters(equal_area_partition(n, p), samples_per_region, seed) * n ** (1.0 / p)
               for n in sizes)


def save_partition(part: Partition, path, extra: dict | None = None) -> None:
    payload = part.to_dict()
    if extra:
        payload.update(extra)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_partition(path) -> Partition:
    with open(path) as fh:
        return Partition.from_dict(json.load(fh))
