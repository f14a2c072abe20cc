"""Acceptance criteria as runnable checks, shared by ``sphere-minimax accept`` and the test suite."""
from __future__ import annotations

import io
import math
import tempfile
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number:>2}: {self.title} ({self.seconds:.1f}s) {self.detail}"

    def to_dict(self):
        return asdict(self)


CRITERIA = {}


def criterion(number, title):
    def wrap(fn):
        CRITERIA[number] = (title, fn)
        return fn
    return wrap


def _random_settings(restarts, seed=0):
    from .optimizer import OptimizerSettings
    return OptimizerSettings(restarts=restarts, seed=seed, seed_constructions=False)


@criterion(1, "n <= p: orthonormal optimum sqrt(n)")
def check_orthonormal(num_threads=1):
    from .core import energy
    from .designs import orthonormal_design
    from .optimizer import minimize
    worst_gen = worst_opt = 0.0
    for p in range(1, 9):
        for n in range(1, p + 1):
            target = math.sqrt(n)
            worst_gen = max(worst_gen, abs(energy(orthonormal_design(n, p)).energy - target))
            _, rep = minimize(n, p, _random_settings(4), num_threads=num_threads)
            worst_opt = max(worst_opt, abs(rep.energy - target))
    ok = worst_gen <= 1e-12 and worst_opt <= 1e-4
    return ok, f"max generator error {worst_gen:.2e}, max optimizer error {worst_opt:.2e}", 60.0


@criterion(2, "p = 2: semicircle optimum 1/sin(pi/(2n))")
def check_semicircle(num_threads=1):
    from .core import energy
    from .designs import semicircle_design, semicircle_energy
    from .optimizer import minimize
    worst_gen = worst_opt = 0.0
    for n in range(2, 11):
        target = semicircle_energy(n)
        worst_gen = max(worst_gen, abs(energy(semicircle_design(n)).energy - target))
        _, rep = minimize(n, 2, _random_settings(8), num_threads=num_threads)
        worst_opt = max(worst_opt, abs(rep.energy - target))
    ok = worst_gen <= 1e-10 and worst_opt <= 1e-4
    return ok, f"max generator error {worst_gen:.2e}, max optimizer error {worst_opt:.2e}", 120.0


def optimize_pyramid(num_threads=1, seed=7):
    from .optimizer import minimize
    return minimize(4, 3, _random_settings(64, seed), num_threads=num_threads)


@criterion(3, "n = 4, p = 3: pyramid optimum sqrt(5), cube stationary at 4/sqrt(3)")
def check_pyramid(num_threads=1):
    from .designs import PYRAMID_GRAM, cube_design, gram_distance
    from .optimizer import certify_local_minimum
    best, rep = optimize_pyramid(num_threads)
    err = abs(rep.energy - math.sqrt(5.0))
    cert = certify_local_minimum(best)
    gdist = gram_distance(best.gram(), PYRAMID_GRAM)
    cube = certify_local_minimum(cube_design())
    cube_err = abs(math.sqrt(cube.squared_energy) - 4.0 / math.sqrt(3.0))
    ok = err <= 1e-4 and cert.certified and gdist <= 1e-2 and cube.certified and cube_err <= 1e-6
    detail = (f"energy error {err:.2e}, optimum certified={cert.certified} "
              f"(|M|={len(cert.active_set)}), Gram distance {gdist:.2e}, "
              f"cube certified={cube.certified} error {cube_err:.2e}")
    return ok, detail, 120.0


@criterion(4, "averaging identity sum ||V_delta||^2 = n 2^n")
def check_averaging(num_threads=1):
    from .core import all_squared_norms
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(100):
        n, p = int(rng.integers(1, 13)), int(rng.integers(1, 7))
        u = rng.standard_normal((n, p))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        total = math.fsum(all_squared_norms(u).tolist())
        worst = max(worst, abs(total - n * 2 ** n) / (n * 2 ** n))
    return worst <= 1e-9, f"max relative error {worst:.2e}", None


@criterion(5, "partition regions have area exactly 4 pi / n")
def check_partition_areas(num_threads=1):
    from .partition import FOUR_PI, equal_area_partition_s2
    worst_region = worst_total = 0.0
    for n in list(range(1, 65)) + [169, 1024, 4096]:
        areas = equal_area_partition_s2(n).areas()
        if areas.size != n:
            return False, f"n={n} produced {areas.size} regions", None
        worst_region = max(worst_region, float(np.max(np.abs(areas - FOUR_PI / n))))
        worst_total = max(worst_total, abs(math.fsum(areas.tolist()) - FOUR_PI))
    ok = worst_region <= 1e-9 and worst_total <= 1e-9
    return ok, f"max region error {worst_region:.2e}, max total error {worst_total:.2e}", None


@criterion(6, "partition diameters scale like n^(-1/2) and stay below 4 pi n^(-1/2)")
def check_diameters(num_threads=1):
    from .partition import diameters, equal_area_partition_s2
    ns = [k * k for k in range(4, 65)]
    d = np.array([diameters(equal_area_partition_s2(n)) for n in ns])
    slope = float(np.polyfit(np.log(ns), np.log(d), 1)[0])
    bound_ok = bool(np.all(d <= 4.0 * math.pi / np.sqrt(ns)))
    worst = float(np.max(d * np.sqrt(ns)))
    ok = abs(slope + 0.5) <= 0.1 and bound_ok
    return ok, f"slope {slope:.4f}, max diameter*sqrt(n) {worst:.3f} (bound {4 * math.pi:.3f})", None


SANDWICH_SIZES = (256, 1024, 4096)
SANDWICH_DIRECTIONS = 10 ** 5


def sandwich_ratios(seed=0):
    from .core import energy_lower_bound_sampled
    from .partition import partition_design
    return [energy_lower_bound_sampled(partition_design(n, seed), SANDWICH_DIRECTIONS, seed) / n
            for n in SANDWICH_SIZES]


@criterion(7, "partition designs: 1/2 <= E/n <= 1/2 + C_3 n^(-1/3), decreasing")
def check_sandwich(num_threads=1):
    from .partition import calibrated_constant
    c3 = calibrated_constant(3)
    ratios = sandwich_ratios()
    inside = all(0.5 <= r <= 0.5 + c3 * n ** (-1.0 / 3.0) for n, r in zip(SANDWICH_SIZES, ratios))
    decreasing = all(b < a for a, b in zip(ratios, ratios[1:]))
    detail = f"C_3={c3:.4f}, ratios " + ", ".join(f"n={n}: {r:.6f}" for n, r in zip(SANDWICH_SIZES, ratios))
    return inside and decreasing, detail, 300.0


@criterion(8, "arbitrary (n, p): basis repetition inside the asymptotic window")
def check_arbitrary_bounds(num_threads=1):
    from .designs import basis_repetition_energy
    rng = np.random.default_rng(8)
    failures = []
    for _ in range(20):
        p = int(rng.integers(2, 65))
        n = int(rng.integers(p + 1, 4 * p + 1))
        r = basis_repetition_energy(n, p) / n
        lo, hi = math.sqrt(2.0 / math.pi) / math.sqrt(p + 1), math.sqrt(5.0) / (2.0 * math.sqrt(p))
        if not lo < r < hi:
            failures.append((n, p, r))
    return not failures, f"{20 - len(failures)}/20 inside" + (f"; failures {failures}" if failures else ""), None


ORACLE_SAMPLES = 10 ** 8


def qmc_tables(seed=0, num_threads=1, reps=50):
    from .qmc import DESK_GRID, ExperimentSpec, run_experiment
    return {name: run_experiment(ExperimentSpec(name, DESK_GRID, reps, seed), num_threads)
            for name in ("f1", "f2", "f3")}


@criterion(9, "QMC vs MC on S^2: slopes and error ratio at desk scale")
def check_qmc(num_threads=1):
    from .qmc import INTEGRANDS, mc_oracle
    notes, ok = [], True
    for name in ("f1", "f2", "f3"):
        est, se = mc_oracle(name, ORACLE_SAMPLES, num_threads=num_threads)
        z = (est - INTEGRANDS[name].exact_value) / se
        ok &= abs(z) <= 4.0
        notes.append(f"{name} oracle z={z:+.2f}")
    for name, table in qmc_tables(num_threads=num_threads).items():
        mc, qm = table.slopes["MC"], table.slopes["QMC"]
        nmax = max(r.n for r in table.rows)
        ratio = table.row("QMC", nmax).rmse / table.row("MC", nmax).rmse
        ok &= abs(mc + 0.5) <= 0.1 and qm <= -0.75 and ratio <= 0.1
        notes.append(f"{name} MC {mc:.3f} QMC {qm:.3f} rmse ratio {ratio:.4f}")
    return ok, "; ".join(notes), 600.0


@criterion(10, "first-coordinate density and c_p")
def check_density(num_threads=1):
    from .designs import expected_abs_projection
    from .qmc import density_checks
    worst_mass = worst_mean = 0.0
    for p in range(2, 51):
        mass, mean_abs, c = density_checks(p)
        worst_mass = max(worst_mass, abs(mass - 1.0))
        worst_mean = max(worst_mean, abs(mean_abs - c))
    e2 = abs(expected_abs_projection(2) - 2.0 / math.pi)
    e3 = abs(expected_abs_projection(3) - 0.5)
    ok = worst_mass <= 1e-8 and worst_mean <= 1e-8 and e2 <= 1e-12 and e3 <= 1e-12
    return ok, f"mass error {worst_mass:.1e}, mean error {worst_mean:.1e}, c_2 error {e2:.1e}, c_3 error {e3:.1e}", None


@criterion(11, "exact L1-PCA agrees with dense direction search")
def check_l1pca(num_threads=1):
    from .core import sample_directions
    from .designs import triangular_pyramid_design
    from .l1pca import DataMatrix, exact_pc1
    rng = np.random.default_rng(11)
    worst = 0.0
    for k in range(100):
        n, p = int(rng.integers(1, 11)), int(rng.integers(2, 5))
        data = DataMatrix.normalize(rng.standard_normal((n, p)))
        exact = exact_pc1(data).objective
        dirs = sample_directions(p, 10 ** 6, k)
        grid = max(float(np.abs(block @ data.rows.T).sum(axis=1).max())
                   for block in np.array_split(dirs, 64))
        worst = max(worst, abs(exact - grid) / exact)
    pyr = exact_pc1(DataMatrix(triangular_pyramid_design().array, normalized=True)).explained_ratio
    pyr_err = abs(pyr - math.sqrt(5.0) / 4.0)
    return worst <= 1e-3 and pyr_err <= 1e-10, f"max relative gap {worst:.2e}, pyramid ratio error {pyr_err:.1e}", None


def _run_cli(argv):
    from .cli import run
    sink = io.StringIO()
    code = run(argv, stream=sink)
    if code != 0:
        raise RuntimeError(f"command {' '.join(argv)} exited with {code}")


@criterion(12, "identical seeds give byte-identical outputs at 1 and 4 threads")
def check_determinism(num_threads=1):
    jobs = {
        "optimize.json": ["design", "optimize", "--n", "4", "--p", "3", "--restarts", "64", "--seed", "7",
                          "--no-seed-constructions"],
        "qmc.csv": ["qmc", "run", "--integrand", "all", "--grid", "desk", "--reps", "50", "--seed", "1"],
    }
    for n in SANDWICH_SIZES:
        jobs[f"partition_{n}.json"] = ["partition", "generate", "--n", str(n), "--seed", "0",
                                       "--energy-directions", str(SANDWICH_DIRECTIONS)]
    mismatched = []
    with tempfile.TemporaryDirectory() as tmp:
        for name, argv in jobs.items():
            out = str(Path(tmp) / name)
            paths = [out] if not name.endswith(".csv") else [out[:-4] + ".csv", out[:-4] + ".svg"]
            target = out if not name.endswith(".csv") else out[:-4]
            blobs = []
            for threads in (1, 4, 1):
                _run_cli(argv + ["--out", target, "--threads", str(threads)])
                blobs.append(tuple(Path(p).read_bytes() for p in paths))
            if len(set(blobs)) != 1:
                mismatched.append(name)
    detail = "all outputs identical" if not mismatched else f"differing outputs: {mismatched}"
    return not mismatched, f"{len(jobs)} commands x threads (1, 4, 1): {detail}", None


def run_criterion(number: int, num_threads: int = 1) -> CriterionResult:
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    ok, detail, budget = fn(num_threads=num_threads)
    seconds = time.perf_counter() - start
    if budget is not None and seconds > budget:
        ok = False
        detail += f"; exceeded runtime budget {budget:.0f}s"
    return CriterionResult(number, title, bool(ok), detail, seconds)


def run_criteria(numbers=None, stream=None, num_threads: int = 1) -> list:
    results = []
    for number in numbers or sorted(CRITERIA):
        res = run_criterion(number, num_threads)
        if stream is not None:
            stream.write(res.line() + "\n")
            stream.flush()
        results.append(res)
    return results
