"""``sphere-minimax``: command-line entry point.

Every option can also come from a JSON file given with ``--config``; explicit
flags override the file, and the file overrides built-in defaults.  Output files
embed the resolved run configuration (minus ``threads``, which never changes
results) and the package version.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

RUN_CONFIG_VERSION = 1


class CliError(Exception):
    def __init__(self, flag: str, message: str):
        super().__init__(f"{flag}: {message}")
        self.flag = flag


@dataclass(frozen=True)
class Param:
    dest: str
    kind: type = int
    default: object = None
    required: bool = False
    minimum: float | None = None
    maximum: float | None = None
    choices: tuple | None = None
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.dest.replace("_", "-")


def _out(default=None, help="output path (stdout when omitted)"):
    return Param("out", str, default, help=help)


COMMANDS = {
    ("design", "generate"): [
        Param("family", str, required=True,
              choices=("orthonormal", "semicircle", "pyramid", "cube", "basis-repetition", "partition")),
        Param("n", int, required=True, minimum=1),
        Param("p", int, 3, minimum=1),
        Param("seed", int, 0, minimum=0, help="sampling seed (partition family)"),
        _out(),
    ],
    ("design", "optimize"): [
        Param("n", int, required=True, minimum=1, maximum=30),
        Param("p", int, required=True, minimum=1),
        Param("restarts", int, 16, minimum=1),
        Param("seed", int, 0, minimum=0),
        Param("max_iterations", int, 20000, minimum=1),
        Param("step_size", float, 0.1, minimum=1e-12),
        Param("seed_constructions", bool, True, help="also start from closed-form designs"),
        Param("certify", bool, True, help="attach a first-order stationarity certificate"),
        _out(),
    ],
    ("design", "certify"): [
        Param("input", str, required=True, help="configuration JSON"),
        Param("active_tolerance", float, 1e-7, minimum=1e-15, maximum=1e-3),
        Param("tolerance", float, 1e-6, minimum=1e-15),
        _out(),
    ],
    ("partition", "generate"): [
        Param("n", int, required=True, minimum=1),
        Param("p", int, 3, choices=(2, 3)),
        Param("seed", int, 0, minimum=0),
        Param("samples_per_region", int, 32, minimum=2),
        Param("energy_directions", int, 0, minimum=0,
              help="also report the sampled energy ratio of the partition design"),
        _out(),
    ],
    ("qmc", "run"): [
        Param("integrand", str, "all", choices=("f1", "f2", "f3", "one", "all")),
        Param("grid", str, "desk", help="'default', 'desk' or a comma-separated list of node counts"),
        Param("reps", int, 50, minimum=2),
        Param("seed", int, 0, minimum=0),
        _out("qmc", help="output prefix; writes PREFIX.csv and PREFIX.svg"),
    ],
    ("l1pca",): [
        Param("input", str, required=True, help="CSV, one observation per row"),
        Param("normalized", bool, False, help="normalize rows to unit length"),
        Param("method", str, "exact", choices=("exact", "heuristic")),
        Param("restarts", int, 32, minimum=1),
        Param("seed", int, 0, minimum=0),
        _out(),
    ],
    ("ratios",): [
        Param("p", int, required=True, minimum=1),
        Param("n_max", int, required=True, minimum=1),
        Param("restarts", int, 8, minimum=1),
        Param("seed", int, 0, minimum=0),
        Param("optimize", bool, True),
        Param("optimize_n_max", int, 14, minimum=0, maximum=30),
        _out(),
    ],
    ("accept",): [
        Param("criteria", str, "all", help="comma-separated criterion numbers"),
        _out(help="optional JSON report"),
    ],
}


@dataclass
class RunConfig:
    command: tuple
    params: dict
    threads: int = 1
    format_version: int = RUN_CONFIG_VERSION
    explicit: set = field(default_factory=set)

    def provenance(self) -> dict:
        return {
            "command": " ".join(self.command),
            "format_version": self.format_version,
            "params": dict(sorted(self.params.items())),
            "tool": "minimax_sphere",
            "version": __version__,
        }


def _add_params(parser, params):
    for prm in params:
        if prm.kind is bool:
            parser.add_argument(prm.flag, dest=prm.dest, action="store_const", const=True, default=None,
                                help=prm.help)
            parser.add_argument("--no-" + prm.dest.replace("_", "-"), dest=prm.dest, action="store_const",
                                const=False, help=argparse.SUPPRESS)
        elif prm.dest == "method":
            group = parser.add_mutually_exclusive_group()
            for choice in prm.choices:
                group.add_argument("--" + choice, dest="method", action="store_const", const=choice,
                                   default=None)
        else:
            parser.add_argument(prm.flag, dest=prm.dest, type=str, default=None, help=prm.help)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="JSON file supplying any option")
    common.add_argument("--threads", default=None,
                        help="worker cap (falls back to SPHERE_MINIMAX_THREADS, then 1)")
    parser = argparse.ArgumentParser(prog="sphere-minimax", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    top = parser.add_subparsers(dest="group", required=True)
    groups = {}
    for path, params in COMMANDS.items():
        if len(path) == 1:
            sub = top.add_parser(path[0], parents=[common])
        else:
            if path[0] not in groups:
                g = top.add_parser(path[0])
                groups[path[0]] = g.add_subparsers(dest="action", required=True)
            sub = groups[path[0]].add_parser(path[1], parents=[common])
        sub.set_defaults(command=path)
        _add_params(sub, params)
    return parser


def _coerce(prm: Param, value, source: str):
    flag = prm.flag if source == "flag" else f"{prm.flag} (from config)"
    if value is None:
        return None
    try:
        if prm.kind is bool:
            if not isinstance(value, bool):
                raise ValueError
            out = value
        elif prm.kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError
            out = int(value)
        elif prm.kind is float:
            out = float(value)
            if not math.isfinite(out):
                raise ValueError
        else:
            out = str(value)
    except (TypeError, ValueError):
        raise CliError(flag, f"expected {prm.kind.__name__}, got {value!r}") from None
    if prm.choices is not None and out not in prm.choices:
        raise CliError(flag, f"must be one of {', '.join(map(str, prm.choices))}; got {out!r}")
    if prm.minimum is not None and out < prm.minimum:
        raise CliError(flag, f"must be >= {prm.minimum}; got {out}")
    if prm.maximum is not None and out > prm.maximum:
        raise CliError(flag, f"must be <= {prm.maximum}; got {out}")
    return out


def _load_config_file(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError("--config", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError("--config", f"malformed JSON in {path}: {exc.msg} (line {exc.lineno})") from None
    if not isinstance(data, dict):
        raise CliError("--config", "top level must be a JSON object")
    version = data.pop("format_version", RUN_CONFIG_VERSION)
    if version != RUN_CONFIG_VERSION:
        raise CliError("--config", f"unsupported format_version {version!r}")
    data.pop("command", None)
    if isinstance(data.get("params"), dict):
        # accept a provenance block copied from an output file
        data = dict(data["params"], **{k: v for k, v in data.items() if k != "params"})
    return {k.replace("-", "_"): v for k, v in data.items()}


def resolve(args) -> RunConfig:
    params = COMMANDS[args.command]
    file_values = _load_config_file(args.config) if args.config else {}
    known = {prm.dest for prm in params} | {"threads"}
    for key in file_values:
        if key not in known and key not in ("tool", "version"):
            raise CliError("--config", f"unknown option {key!r} for '{' '.join(args.command)}'")
    resolved, explicit = {}, set()
    for prm in params:
        flag_value = getattr(args, prm.dest, None)
        if flag_value is not None:
            value = _coerce(prm, flag_value if prm.kind is bool or prm.dest == "method"
                            else _parse_flag(prm, flag_value), "flag")
            explicit.add(prm.dest)
        elif prm.dest in file_values:
            value = _coerce(prm, file_values[prm.dest], "config")
        else:
            value = prm.default
        if value is None and prm.required:
            raise CliError(prm.flag, "is required")
        resolved[prm.dest] = value
    threads_raw = args.threads if args.threads is not None else file_values.get("threads")
    if threads_raw is None:
        from .core import resolve_threads
        try:
            threads = resolve_threads(None)
        except ValueError:
            raise CliError("--threads", "SPHERE_MINIMAX_THREADS is not an integer") from None
    else:
        threads = _coerce(Param("threads", int, minimum=1), _parse_flag(Param("threads"), threads_raw)
                          if isinstance(threads_raw, str) else threads_raw, "flag")
    return RunConfig(command=args.command, params=resolved, threads=threads, explicit=explicit)


def _parse_flag(prm: Param, text: str):
    if prm.kind is int:
        try:
            return int(text)
        except ValueError:
            raise CliError(prm.flag, f"expected an integer, got {text!r}") from None
    if prm.kind is float:
        try:
            return float(text)
        except ValueError:
            raise CliError(prm.flag, f"expected a number, got {text!r}") from None
    return text


def _dump(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, path, stream):
    if path is None:
        stream.write(text)
        return
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text)
    except OSError as exc:
        raise CliError("--out", f"cannot write {path}: {exc.strerror}") from None


# -- commands ---------------------------------------------------------------

def cmd_design_generate(cfg: RunConfig, stream):
    from . import designs
    from .core import ENUMERATION_CAP, energy
    from .partition import partition_design
    prm = cfg.params
    n, p, family = prm["n"], prm["p"], prm["family"]
    try:
        if family == "orthonormal":
            conf = designs.orthonormal_design(n, p)
        elif family == "semicircle":
            conf = designs.semicircle_design(n, p)
        elif family in ("pyramid", "cube"):
            if n != 4:
                raise CliError("--n", f"the {family} design has n = 4")
            conf = designs.triangular_pyramid_design(p) if family == "pyramid" else designs.cube_design(p)
        elif family == "basis-repetition":
            conf = designs.basis_repetition_design(n, p)
        else:
            if p not in (2, 3):
                raise CliError("--p", "partition designs need p in {2, 3}")
            conf = partition_design(n, prm["seed"], p)
    except ValueError as exc:
        raise CliError("--n", str(exc)) from None
    payload = {"run_config": cfg.provenance(), "configuration": conf.to_dict()}
    if n <= ENUMERATION_CAP:
        payload["energy_report"] = energy(conf, num_threads=cfg.threads).to_dict()
    _emit(_dump(payload), prm["out"], stream)


def cmd_design_optimize(cfg: RunConfig, stream):
    from .optimizer import OptimizerSettings, certify_local_minimum, minimize
    prm = cfg.params
    settings = OptimizerSettings(restarts=prm["restarts"], seed=prm["seed"],
                                 max_iterations=prm["max_iterations"], step_size=prm["step_size"],
                                 seed_constructions=prm["seed_constructions"])
    best, report, trials = minimize(prm["n"], prm["p"], settings, num_threads=cfg.threads, return_trials=True)
    payload = {
        "run_config": cfg.provenance(),
        "settings": settings.to_dict(),
        "configuration": best.to_dict(),
        "energy": report.energy,
        "energy_report": report.to_dict(),
        "trials": [{"start": lab, "energy": e} for lab, e in trials],
    }
    if prm["certify"]:
        payload["certification"] = certify_local_minimum(best).to_dict()
    _emit(_dump(payload), prm["out"], stream)


def _read_configuration(path):
    from .core import Configuration
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise CliError("--input", f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise CliError("--input", f"malformed JSON: {exc.msg}") from None
    if isinstance(data, dict) and "configuration" in data:
        data = data["configuration"]
    try:
        return Configuration.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError("--input", f"not a configuration file: {exc}") from None


def cmd_design_certify(cfg: RunConfig, stream):
    from .optimizer import certify_local_minimum
    prm = cfg.params
    conf = _read_configuration(prm["input"])
    cert = certify_local_minimum(conf, prm["active_tolerance"], prm["tolerance"])
    payload = {"run_config": cfg.provenance(), "configuration": conf.to_dict(),
               "energy": math.sqrt(cert.squared_energy), "certification": cert.to_dict()}
    _emit(_dump(payload), prm["out"], stream)


def cmd_partition_generate(cfg: RunConfig, stream):
    from .core import energy_lower_bound_sampled
    from .partition import diameters, equal_area_partition
    prm = cfg.params
    part = equal_area_partition(prm["n"], prm["p"])
    diameters(part, prm["samples_per_region"], prm["seed"])
    import numpy as np
    from .core import Configuration
    design = Configuration(part.sample(np.random.default_rng(prm["seed"])))
    payload = {"run_config": cfg.provenance(), "partition": part.to_dict(), "design": design.to_dict()}
    if prm["energy_directions"]:
        e = energy_lower_bound_sampled(design, prm["energy_directions"], prm["seed"])
        payload["sampled_energy"] = e
        payload["sampled_ratio"] = e / prm["n"]
    _emit(_dump(payload), prm["out"], stream)


def parse_grid(text: str) -> tuple:
    from .qmc import DEFAULT_GRID, DESK_GRID
    if text == "default":
        return DEFAULT_GRID
    if text == "desk":
        return DESK_GRID
    try:
        values = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise CliError("--grid", f"expected 'default', 'desk' or integers, got {text!r}") from None
    if not values or any(v < 1 for v in values) or list(values) != sorted(values):
        raise CliError("--grid", "node counts must be positive and ascending")
    return values


def cmd_qmc_run(cfg: RunConfig, stream):
    from . import qmc
    prm = cfg.params
    grid = parse_grid(prm["grid"])
    names = ("f1", "f2", "f3") if prm["integrand"] == "all" else (prm["integrand"],)
    tables = {}
    for name in names:
        spec = qmc.ExperimentSpec(name, grid, prm["reps"], prm["seed"])
        tables[name] = qmc.run_experiment(spec, cfg.threads)
    provenance = cfg.provenance()
    provenance["params"]["grid"] = list(grid)
    csv_lines = []
    for i, name in enumerate(names):
        text = tables[name].to_csv(provenance if i == 0 else None)
        csv_lines.append(text if i == 0 else text.split("\n", 1)[1])
    prefix = prm["out"]
    _emit("".join(csv_lines), prefix + ".csv", stream)
    _emit(qmc.error_plot_svg(tables, provenance), prefix + ".svg", stream)
    for name in names:
        slopes = tables[name].slopes
        stream.write(f"{name}: " + ", ".join(f"{m} slope {s:.3f}" for m, s in slopes.items()) + "\n")


def cmd_l1pca(cfg: RunConfig, stream):
    from .core import EnumerationInfeasible
    from .l1pca import DataMatrix, exact_pc1, heuristic_pc1
    prm = cfg.params
    try:
        data = DataMatrix.from_csv(prm["input"], prm["normalized"])
    except OSError as exc:
        raise CliError("--input", f"cannot read {prm['input']}: {exc.strerror}") from None
    except ValueError as exc:
        raise CliError("--input", str(exc)) from None
    try:
        if prm["method"] == "exact":
            res = exact_pc1(data, num_threads=cfg.threads)
        else:
            res = heuristic_pc1(data, prm["restarts"], prm["seed"])
    except EnumerationInfeasible as exc:
        raise CliError("--exact", f"{exc} (pass --heuristic)") from None
    payload = {"run_config": cfg.provenance(), "n": data.n, "p": data.p, **res.to_dict()}
    _emit(_dump(payload), prm["out"], stream)


def cmd_ratios(cfg: RunConfig, stream):
    from .designs import ratio_report
    prm = cfg.params
    rep = ratio_report(prm["p"], prm["n_max"], optimize=prm["optimize"], restarts=prm["restarts"],
                       seed=prm["seed"], optimize_n_max=prm["optimize_n_max"])
    lines = [f"{'n':>4}  {'energy':>14}  {'ratio':>12}  method"]
    lines += [f"{r.n:>4}  {r.energy:>14.10f}  {r.ratio:>12.10f}  {r.method}" for r in rep.rows]
    if rep.violations():
        lines.append("ratio increases at: " + ", ".join(f"{a}->{b}" for a, b in rep.violations()))
    stream.write("\n".join(lines) + "\n")
    if prm["out"]:
        _emit(_dump({"run_config": cfg.provenance(), **rep.to_dict()}), prm["out"], stream)


def cmd_accept(cfg: RunConfig, stream):
    from .acceptance import CRITERIA, run_criteria
    text = cfg.params["criteria"]
    if text == "all":
        ids = sorted(CRITERIA)
    else:
        try:
            ids = [int(v) for v in text.split(",")]
        except ValueError:
            raise CliError("--criteria", f"expected numbers, got {text!r}") from None
        bad = [i for i in ids if i not in CRITERIA]
        if bad:
            raise CliError("--criteria", f"unknown criterion {bad[0]}")
    results = run_criteria(ids, stream=stream, num_threads=cfg.threads)
    if cfg.params["out"]:
        _emit(_dump({"run_config": cfg.provenance(), "results": [r.to_dict() for r in results]}),
              cfg.params["out"], stream)
    return 0 if all(r.passed for r in results) else 1


HANDLERS = {
    ("design", "generate"): cmd_design_generate,
    ("design", "optimize"): cmd_design_optimize,
    ("design", "certify"): cmd_design_certify,
    ("partition", "generate"): cmd_partition_generate,
    ("qmc", "run"): cmd_qmc_run,
    ("l1pca",): cmd_l1pca,
    ("ratios",): cmd_ratios,
    ("accept",): cmd_accept,
}


def run(argv=None, stream=None) -> int:
    stream = stream if stream is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        code = HANDLERS[args.command](cfg, stream)
    except CliError as exc:
        print(f"sphere-minimax: error: {exc}", file=sys.stderr)
        return 2
    return int(code or 0)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
