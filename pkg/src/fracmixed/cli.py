"""Command-line front end.

Configuration is an INI file with three sections::

    [problem]
    lambda = 0.5
    a1 = 2 + t
    a2 = 1
    a3 = sin(t)
    phi1 = x^2
    phi2 = 1 + y^2
    # kind = manufactured   (Volterra-only study for `converge`)

    [discretization]
    h = 0.0078125
    solver_tol = 1e-10
    n_images = 5
    gamma_factor = true

    [output]
    field = field.csv
    diagnostics = diagnostics.txt
    stride = 4

Data functions are expressions in ``t`` (``a1, a2, a3``), ``x`` (``phi1``) or
``y`` (``phi2``), or ``file:<path>`` naming a CSV table ``arg,value[,derivative]``.
The environment variables ``FRACMIXED_FIELD`` and ``FRACMIXED_DIAGNOSTICS``
override the output paths.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Sequence, TextIO

import numpy as np
from scipy.interpolate import CubicSpline

from fracmixed.assembler import CONDITION_KEYS, DiscretizationConfig, SolutionField, solve_problem
from fracmixed.errors import FracMixedError, NumericalError, ValidationError
from fracmixed.greens import KernelCache
from fracmixed.oracle import BoundaryData, FdConfig, compare_representation, eigen_solution, fd_first_bvp
from fracmixed.problem import FunctionData, ProblemSpec
from fracmixed.volterra import manufactured_error

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

# residuals below this are at the roundoff floor (the exact-data tolerance) in convergence tables
RESIDUAL_FLOOR = 1e-6

_VARIABLES = {"a1": "t", "a2": "t", "a3": "t", "phi1": "x", "phi2": "y"}

# option name in [discretization] -> DiscretizationConfig field
_DISC_KEYS = {
    "h": "h",
    "solver_tol": "solver_tol",
    "n_images": "n_images",
    "z_cutoff": "z_cutoff",
    "quad_nodes": "tau1_gauss_nodes",
    "quad_tol": "tau1_quad_tol",
    "gamma_factor": "gamma_factor_enabled",
    "det_tol": "det_tol",
    "transmission_points": "transmission_points",
    "transmission_width": "transmission_width",
}


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemSpec | None
    problem_text: dict[str, str]
    kind: str
    disc: DiscretizationConfig
    field_path: Path
    diagnostics_path: Path

    @property
    def lam(self) -> float:
        return float(self.problem_text["lambda"])


def _load_table(path: Path, variable: str) -> FunctionData:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
    except (OSError, ValueError):
        # allow one header line
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        except (OSError, ValueError) as exc:
            raise ValidationError(f"cannot read table {str(path)!r}: {exc}", stage="cli") from exc
    if data.shape[1] not in (2, 3) or data.shape[0] < 2:
        raise ValidationError(f"table {str(path)!r} needs columns {variable},value[,derivative]", stage="cli")
    if data.shape[1] == 3:
        return FunctionData.from_table(data[:, 0], data[:, 1], data[:, 2], source=f"file:{path}")
    spline = CubicSpline(data[:, 0], data[:, 1])
    return FunctionData.from_table(data[:, 0], data[:, 1], spline(data[:, 0], 1), source=f"file:{path}")


def _function(value: str, variable: str, base: Path) -> FunctionData:
    value = value.strip()
    if value.startswith("file:"):
        p = Path(value[5:].strip())
        return _load_table(p if p.is_absolute() else base / p, variable)
    return FunctionData.from_expression(value, variable)


def _coerce(name: str, raw: str) -> Any:
    kind = {f.name: f.type for f in fields(DiscretizationConfig)}[name]
    raw = raw.strip()
    if "None" in str(kind) and raw.lower() in ("auto", "none", ""):
        return None
    try:
        if "bool" in str(kind):
            low = raw.lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "yes", "1", "on")
        if "int" in str(kind) and "float" not in str(kind):
            return int(raw)
        if name == "h" and "/" in raw:
            num, den = raw.split("/", 1)
            return float(num) / float(den)
        return float(raw)
    except ValueError as exc:
        raise ValidationError(f"discretization option {name!r}: cannot parse {raw!r}", stage="cli") from exc


def load_config(path: str | os.PathLike[str]) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config {str(path)!r}: {exc}", stage="cli") from exc
    except configparser.Error as exc:
        raise ValidationError(f"malformed config: {exc}", stage="cli") from exc
    if not parser.has_section("problem"):
        raise ValidationError("config needs a [problem] section", stage="cli")
    prob = dict(parser["problem"])
    kind = prob.pop("kind", "mixed").strip()
    if kind not in ("mixed", "manufactured"):
        raise ValidationError(f"unknown problem kind {kind!r}", stage="cli")
    if "lambda" not in prob:
        raise ValidationError("[problem] needs lambda", stage="cli")
    try:
        lam = float(prob["lambda"])
    except ValueError as exc:
        raise ValidationError(f"lambda: cannot parse {prob['lambda']!r}", stage="cli") from exc
    if not (0 < lam <= 1):
        raise ValidationError(f"lambda must lie in (0, 1], got {lam!r}", stage="cli")

    spec = None
    if kind == "mixed":
        missing = [k for k in _VARIABLES if k not in prob]
        if missing:
            raise ValidationError(f"[problem] is missing {', '.join(missing)}", stage="cli")
        funcs = {k: _function(prob[k], v, path.parent) for k, v in _VARIABLES.items()}
        spec = ProblemSpec(lam, **funcs)
        spec.validate()

    disc_kw: dict[str, Any] = {}
    if parser.has_section("discretization"):
        for key, raw in parser["discretization"].items():
            if key not in _DISC_KEYS:
                raise ValidationError(f"unknown discretization option {key!r}", stage="cli")
            disc_kw[_DISC_KEYS[key]] = _coerce(_DISC_KEYS[key], raw)
    out = parser["output"] if parser.has_section("output") else {}
    if "stride" in out:
        try:
            disc_kw["output_stride"] = int(out["stride"])
        except ValueError as exc:
            raise ValidationError(f"output stride: cannot parse {out['stride']!r}", stage="cli") from exc
    disc = DiscretizationConfig(**disc_kw)

    field_path = Path(os.environ.get("FRACMIXED_FIELD", out.get("field", "field.csv")))
    diag_path = Path(os.environ.get("FRACMIXED_DIAGNOSTICS", out.get("diagnostics", "diagnostics.txt")))
    if not field_path.is_absolute() and "FRACMIXED_FIELD" not in os.environ:
        field_path = path.parent / field_path
    if not diag_path.is_absolute() and "FRACMIXED_DIAGNOSTICS" not in os.environ:
        diag_path = path.parent / diag_path
    text = {"lambda": repr(lam), **{k: prob[k].strip() for k in _VARIABLES if k in prob}}
    return RunConfig(spec, text, kind, disc, field_path, diag_path)


# {{{ output


def effective_config(cfg: RunConfig) -> list[str]:
    lines = ["[problem]", f"kind = {cfg.kind}"]
    lines += [f"{k} = {v}" for k, v in cfg.problem_text.items()]
    lines.append("[discretization]")
    inverse = {v: k for k, v in _DISC_KEYS.items()}
    for f in fields(DiscretizationConfig):
        if f.name in inverse:
            value = getattr(cfg.disc, f.name)
            lines.append(f"{inverse[f.name]} = {'auto' if value is None else repr(value)}")
    lines += ["[output]", f"field = {cfg.field_path}", f"diagnostics = {cfg.diagnostics_path}"]
    lines.append(f"stride = {cfg.disc.output_stride}")
    return lines


def write_field(field: SolutionField, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,u,domain\n")
        for x, y, u, tag in field.samples():
            fh.write(f"{x!r},{y!r},{u!r},{tag}\n")


def write_report(path: Path, cfg: RunConfig, sections: list[tuple[str, list[str]]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# effective configuration", *effective_config(cfg)]
    for title, body in sections:
        lines += ["", f"# {title}", *body]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _diag_lines(diag: dict[str, float]) -> list[str]:
    return [f"{k} = {v!r}" for k, v in diag.items()]


# }}}


# {{{ commands


def _require_mixed(cfg: RunConfig, command: str) -> ProblemSpec:
    if cfg.problem is None:
        raise ValidationError(f"'{command}' needs a mixed problem, not kind = {cfg.kind}", stage="cli")
    return cfg.problem


def run_solve(cfg: RunConfig, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    spec = _require_mixed(cfg, "solve")
    field = solve_problem(spec, cfg.disc)
    write_field(field, cfg.field_path)
    write_report(cfg.diagnostics_path, cfg, [("diagnostics", _diag_lines(field.diagnostics))])
    print(f"wrote {len(field.u)} samples to {cfg.field_path}", file=out)
    print(f"wrote diagnostics to {cfg.diagnostics_path}", file=out)
    return EXIT_OK


def run_verify(cfg: RunConfig, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    spec = _require_mixed(cfg, "verify")
    field = solve_problem(spec, cfg.disc)
    write_report(cfg.diagnostics_path, cfg, [("diagnostics", _diag_lines(field.diagnostics))])
    for k in CONDITION_KEYS:
        print(f"{k:14s} {field.diagnostics[k]:.3e}", file=out)
    return EXIT_OK


def _order(a: float, b: float) -> str:
    if a <= RESIDUAL_FLOOR or b <= RESIDUAL_FLOOR:
        return "floor"
    return f"{math.log2(a / b):.2f}"


def convergence_table(cfg: RunConfig, levels: int) -> tuple[list[str], list[dict[str, float]]]:
    if levels < 2:
        raise ValidationError("converge needs at least 2 levels", stage="cli")
    rows: list[dict[str, float]] = []
    disc = cfg.disc
    hs = []
    for _ in range(levels):
        hs.append(disc.h)
        if cfg.kind == "manufactured":
            rows.append({"volterra_error": manufactured_error(KernelCache(cfg.lam, disc.n_images, disc.z_cutoff), disc.n)})
        else:
            rows.append(dict(solve_problem(cfg.problem, disc).diagnostics))
        disc = disc.refined()
    keys = list(rows[0])
    lines = ["h," + ",".join(keys)]
    for h, r in zip(hs, rows):
        lines.append(f"{h!r}," + ",".join(f"{r[k]!r}" for k in keys))
    lines.append("# empirical orders log2(r_k / r_k+1)")
    for k in range(levels - 1):
        lines.append(
            f"{hs[k]!r}->{hs[k + 1]!r}," + ",".join(_order(rows[k][key], rows[k + 1][key]) for key in keys)
        )
    return lines, rows


def run_converge(cfg: RunConfig, levels: int, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    lines, _ = convergence_table(cfg, levels)
    write_report(cfg.diagnostics_path, cfg, [("convergence", lines)])
    print("\n".join(lines), file=out)
    return EXIT_OK


def run_oracle(cfg: RunConfig, out: TextIO | None = None) -> int:
    """Green's-function solution against the finite-difference oracle, eigenmode data."""
    out = out or sys.stdout
    n = cfg.disc.n
    fd_cfg = FdConfig(n + 1, n + 1, cfg.lam)
    data = BoundaryData.eigenmode()
    X, Y = np.meshgrid(fd_cfg.x, fd_cfg.y)
    fd_err = float(np.max(np.abs(fd_first_bvp(data.tau1, data.tau2, data.tau3, fd_cfg) - eigen_solution(cfg.lam, X, Y))))
    rep = compare_representation(data, fd_cfg)
    body = [f"grid = {n + 1}x{n + 1}", f"fd_vs_closed_form = {fd_err!r}", f"representation_vs_fd = {rep!r}"]
    write_report(cfg.diagnostics_path, cfg, [("oracle", body)])
    print("\n".join(body), file=out)
    return EXIT_OK


# }}}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracmixed", description="Mixed fractional-parabolic / hyperbolic solver")
    sub = p.add_subparsers(dest="command", required=True)
    for name, text in (
        ("solve", "solve and write the field and diagnostics"),
        ("verify", "solve and report the condition residuals"),
        ("oracle", "compare with the finite-difference reference"),
    ):
        sub.add_parser(name, help=text).add_argument("config")
    c = sub.add_parser("converge", help="residuals and orders under h-halving")
    c.add_argument("config")
    c.add_argument("--levels", type=int, default=3)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.command == "solve":
            return run_solve(cfg)
        if args.command == "verify":
            return run_verify(cfg)
        if args.command == "converge":
            return run_converge(cfg, args.levels)
        return run_oracle(cfg)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except FracMixedError as exc:  # pragma: no cover - every error is one of the two kinds
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
