"""Full pipeline: traces, Volterra march, reconstruction over the four subdomains, residual checks.

Subdomains carry the tags ``omega0`` (unit square, parabolic), ``omega1``
(below AB), ``omega2`` (left of AA0) and ``omega3`` (right of BB0).  The
non-local condition is checked in the form

    a1(t) u(-t, t) + a2(t) u(t, -t) = a3(t),   0 <= t <= 1/2,

with ``u(-t, t)`` on AD and ``u(t, -t)`` on AC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterator

import numpy as np

from fracmixed.errors import DegenerateGrid, ValidationError
from fracmixed.fracquad import caputo_l1, caputo_l1_nonuniform
from fracmixed.greens import KernelCache
from fracmixed.hyperbolic import TraceTable, char_trace, dalembert_eval, trace_nu1, wave_residual
from fracmixed.parabolic import ParabolicField
from fracmixed.problem import ProblemSpec
from fracmixed.tau1solver import Tau1Config, Tau1Solution, solve_tau1
from fracmixed.volterra import (
    VolterraSystem,
    boundary_fluxes,
    convolve_tables,
    kernel_tables,
    nonlocal_remainder,
    recover_traces,
    rhs_f1,
    rhs_f2,
    solve_march,
)

DOMAIN_TAGS = ("omega0", "omega1", "omega2", "omega3")

# residuals of the five defining conditions
CONDITION_KEYS = ("pde", "nonlocal", "char_CB", "char_BE", "transmission")


@dataclass(frozen=True)
class DiscretizationConfig:
    """:arg h: trace and Volterra step; ``1/h`` must be an integer >= 8.
    :arg output_stride: samples are written every ``output_stride`` trace steps.
    :arg gamma_factor_enabled: coupling constant ``Gamma(lam)`` in the ``tau1`` problem.
    """

    h: float = 1.0 / 128
    solver_tol: float = 1e-10
    n_images: int = 5
    z_cutoff: float = 30.0
    tau1_gauss_nodes: int = 12
    tau1_quad_tol: float = 1e-12
    gamma_factor_enabled: bool = True
    output_stride: int = 4
    det_tol: float = 1e-12
    transmission_points: int | None = None
    transmission_width: float = 1.0 / 256
    verify: bool = True

    def __post_init__(self) -> None:
        if not (0 < self.h <= 0.125):
            raise DegenerateGrid(f"h = {self.h!r} must lie in (0, 1/8]", stage="assembler")
        n = round(1.0 / self.h)
        if abs(n * self.h - 1.0) > 1e-9:
            raise DegenerateGrid(f"1/h = {1.0 / self.h!r} is not an integer", stage="assembler")
        if self.output_stride < 1 or n % self.output_stride or (n // self.output_stride) % 2:
            raise ValidationError(
                "output_stride must divide 1/h into an even number of output steps", stage="assembler"
            )
        if self.solver_tol <= 0 or self.n_images < 1 or self.z_cutoff <= 0:
            raise ValidationError("tolerances, image count and cutoff must be positive", stage="assembler")

    @property
    def n(self) -> int:
        return round(1.0 / self.h)

    @property
    def transmission_mesh(self) -> int:
        """Graded L1 steps for the Caputo limit; the L1 error falls like ``points^(lam - 2)``."""
        return self.transmission_points or max(48, 2 * self.n)

    def refined(self) -> DiscretizationConfig:
        return replace(self, h=self.h / 2, output_stride=self.output_stride * 2)


@dataclass
class SolutionField:
    """Samples ``(x, y, u, domain)`` over the whole domain with the objects needed to verify them."""

    x: np.ndarray
    y: np.ndarray
    u: np.ndarray
    domain: np.ndarray
    spec: ProblemSpec
    disc: DiscretizationConfig
    traces: TraceTable
    parabolic: ParabolicField
    system: VolterraSystem
    tau1: Tau1Solution
    parts: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    diagnostics: dict[str, float] = field(default_factory=dict)

    def samples(self) -> Iterator[tuple[float, float, float, str]]:
        for row in zip(self.x, self.y, self.u, self.domain):
            yield float(row[0]), float(row[1]), float(row[2]), str(row[3])

    def max_error(self, exact: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> float:
        return float(np.max(np.abs(self.u - exact(self.x, self.y))))

    def select(self, tag: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        m = self.domain == tag
        return self.x[m], self.y[m], self.u[m]


# {{{ pipeline


def _output_points(n_out: int) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Sample points on an ``n_out``-step lattice; every point lies in exactly one tag."""
    k = np.arange(n_out + 1)
    X, Y = np.meshgrid(k, k)
    pts = {"omega0": (X.ravel(), Y.ravel())}
    tri_x, tri_y = [], []
    for j in range(1, n_out // 2 + 1):
        i = np.arange(j, n_out - j + 1)
        tri_x.append(i)
        tri_y.append(np.full(i.size, j))
    a = np.concatenate(tri_x)
    b = np.concatenate(tri_y)
    pts["omega1"] = (a, -b)
    pts["omega2"] = (-b, a)
    pts["omega3"] = (n_out + b, a)
    return {tag: (px / n_out, py / n_out) for tag, (px, py) in pts.items()}


def _omega0_rows(pf: ParabolicField, stride: int) -> tuple[np.ndarray, np.ndarray]:
    m = np.arange(0, pf.n + 1, stride)
    return m, pf.rows(m)[:, ::stride]


def solve_problem(spec: ProblemSpec, disc: DiscretizationConfig | None = None) -> SolutionField:
    disc = disc or DiscretizationConfig()
    spec.validate()
    n = disc.n
    h = disc.h
    lam = spec.lam
    cache = KernelCache(lam, n_images=disc.n_images, z_cutoff=disc.z_cutoff)

    # tau1 at nodes and cell midpoints
    tcfg = Tau1Config(
        lam,
        n=2 * n,
        quad_tol=disc.tau1_quad_tol,
        gauss_nodes=disc.tau1_gauss_nodes,
        gamma_factor_enabled=disc.gamma_factor_enabled,
    )
    t1 = solve_tau1(spec, tcfg)
    tau1, dtau1 = t1.tau[::2], t1.dtau[::2]
    tau1_mid, dtau1_mid = t1.tau[1::2], t1.dtau[1::2]
    grid = np.linspace(0.0, 1.0, n + 1)
    g = spec.phi1.deriv(0.5 * (grid + 1.0))
    d2tau1 = t1.c * (g - dtau1)
    nu1 = trace_nu1(dtau1, spec.phi1.deriv, grid)
    traces = TraceTable(h=h, grid=grid, tau1=tau1, dtau1=dtau1, nu1=nu1)

    # Volterra system at the collocation points
    tables = kernel_tables(cache, n)
    system = VolterraSystem(n=n, tables=tables, f1=np.empty(0), f2=np.empty(0))
    t = system.collocation
    F0, F1 = boundary_fluxes(cache, dtau1, d2tau1, t)
    R = nonlocal_remainder(spec, t, tau1_mid, dtau1_mid, float(tau1[0]))
    system.f1 = rhs_f1(spec, t, F0, tau1_mid, dtau1_mid, float(tau1[0]))
    system.f2 = rhs_f2(spec, t, F1)
    mu2, mu3 = solve_march(system, det_tol=disc.det_tol)
    traces = recover_traces(mu2, mu3, spec, traces)

    pf = ParabolicField(cache, tau1, dtau1, float(traces.tau2[0]), float(traces.tau3[0]), mu2, mu3)
    field_ = SolutionField(
        x=np.empty(0),
        y=np.empty(0),
        u=np.empty(0),
        domain=np.empty(0, dtype="<U6"),
        spec=spec,
        disc=disc,
        traces=traces,
        parabolic=pf,
        system=system,
        tau1=t1,
        parts={"F0": F0, "F1": F1, "R": R},
    )
    _fill_samples(field_)
    if disc.verify:
        field_.diagnostics = verify_conditions(field_, spec, disc)
    return field_


def _fill_samples(f: SolutionField) -> None:
    stride = f.disc.output_stride
    n_out = f.disc.n // stride
    pts = _output_points(n_out)
    xs, ys, us, tags = [], [], [], []
    _, rows = _omega0_rows(f.parabolic, stride)
    px, py = pts["omega0"]
    xs.append(px)
    ys.append(py)
    us.append(rows.ravel())
    tags.append(np.full(px.size, "omega0"))
    for tag in DOMAIN_TAGS[1:]:
        px, py = pts[tag]
        xs.append(px)
        ys.append(py)
        us.append(np.asarray(dalembert_eval(tag, f.traces, px, py), float))
        tags.append(np.full(px.size, tag))
    f.x, f.y, f.u = np.concatenate(xs), np.concatenate(ys), np.concatenate(us)
    f.domain = np.concatenate(tags)


# }}}


# {{{ verification


def _basis_exponents(lam: float) -> list[float]:
    out: list[float] = []
    for e in (0.0, 1.0 - lam, lam, 2.0 * lam, 1.0):
        if all(abs(e - o) > 1e-3 for o in out):
            out.append(e)
    return out


def caputo_limit(pf: ParabolicField, lam: float, height: float, points: int) -> np.ndarray:
    """Extrapolated ``lim_{y -> 0+} D^lam u(x_i, y)`` at every grid node.

    L1 on a mesh graded towards ``y = 0``, followed by a least-squares fit of
    the upper three quarters against the leading powers of ``y``.
    """
    grading = min((2.0 - lam) / lam, 6.0)
    ys = height * (np.arange(points + 1) / points) ** grading
    U = np.empty((pf.n + 1, ys.size))
    U[:, 0] = pf.tau1
    for j in range(1, ys.size):
        U[:, j] = pf.at(float(ys[j]))
    D = caputo_l1_nonuniform(U, ys, lam)
    sel = slice(points // 4, None)
    A = np.stack([ys[sel] ** e for e in _basis_exponents(lam)], axis=1)
    coef, *_ = np.linalg.lstsq(A, D[:, sel].T, rcond=None)
    return coef[0]


def _transmission(f: SolutionField, disc: DiscretizationConfig) -> float:
    """Caputo limit against ``nu1`` on columns clear of the corners.

    The limit is taken where the kernel width ``y^rho`` equals
    ``transmission_width``; within about twelve widths of ``x = 0, 1`` the
    field still carries the corner layer, whose limit is not uniform unless
    ``nu1`` vanishes at the corners.
    """
    w = disc.transmission_width
    height = w ** (2.0 / f.spec.lam)
    lim = caputo_limit(f.parabolic, f.spec.lam, height, disc.transmission_mesh)
    x = f.parabolic.x
    cols = (x >= 12 * w) & (x <= 1 - 12 * w)
    if not np.any(cols):
        cols = x == x[x.size // 2]
    return float(np.max(np.abs(lim[cols] - f.traces.nu1[cols])))


def _parabolic_pde(f: SolutionField, rows: np.ndarray) -> float:
    h = f.disc.h
    lam = f.spec.lam
    D = caputo_l1(rows, h, lam, axis=0)
    uxx = (rows[:, 2:] - 2 * rows[:, 1:-1] + rows[:, :-2]) / h**2
    if lam == 1.0:
        # the backward difference is centred half a step below the node
        uxx[1:] = 0.5 * (uxx[1:] + uxx[:-1])
    start = int(math.ceil(0.25 / h))
    return float(np.max(np.abs(D[start:, 1:-1] - uxx[start:])))


def _wave_pde(f: SolutionField) -> float:
    # the sample points keep 0.05 from the triangle edges
    h = min(f.disc.h, 1.0 / 32)
    s = np.linspace(0.1, 0.4, 7)
    worst = 0.0
    for a in s:
        # points well inside each triangle, at depth a from the type-change line
        for b in np.linspace(a + 0.05, 1.0 - a - 0.05, 5):
            worst = max(worst, abs(wave_residual("omega1", f.traces, b, -a, h)))
            worst = max(worst, abs(wave_residual("omega2", f.traces, -a, b, h)))
            worst = max(worst, abs(wave_residual("omega3", f.traces, 1.0 + a, b, h)))
    return worst


def _cross_route(f: SolutionField) -> tuple[float, float]:
    """``nu2`` and ``nu3`` from the hyperbolic relations vs the Green route (dense convolution)."""
    sys_ = f.system
    t = sys_.collocation
    mu2, mu3 = f.traces.mu2, f.traces.mu3
    (A2, A3), (B2, B3) = convolve_tables(sys_.tables, mu2, mu3)
    nu2_h = mu2 + f.parts["R"]
    nu2_g = -A2 + B3 + f.parts["F0"]
    nu3_h = -mu3 + f.spec.phi2.deriv(0.5 * t)
    nu3_g = -B2 + A3 + f.parts["F1"]
    return float(np.max(np.abs(nu2_h - nu2_g))), float(np.max(np.abs(nu3_h - nu3_g)))


def verify_conditions(f: SolutionField, spec: ProblemSpec, disc: DiscretizationConfig) -> dict[str, float]:
    """Max-norm residuals of the defining conditions and of the gluing across type-change lines."""
    tr = f.traces
    n = disc.n
    h = disc.h
    pf = f.parabolic
    out: dict[str, float] = {}

    rows = pf.rows(np.arange(n + 1))
    out["pde_parabolic"] = _parabolic_pde(f, rows)
    out["pde_wave"] = _wave_pde(f)
    out["pde"] = max(out["pde_parabolic"], out["pde_wave"])

    t = np.linspace(0.0, 0.5, n // 2 + 1)
    res = spec.a1(t) * char_trace("AD", tr, t) + spec.a2(t) * char_trace("AC", tr, t) - spec.a3(t)
    out["nonlocal"] = float(np.max(np.abs(res)))

    xc = np.linspace(0.5, 1.0, n // 2 + 1)
    out["char_CB"] = float(np.max(np.abs(dalembert_eval("omega1", tr, xc, xc - 1.0) - spec.phi1(xc))))
    s = np.linspace(0.0, 0.5, n // 2 + 1)
    out["char_BE"] = float(np.max(np.abs(dalembert_eval("omega3", tr, 1.0 + s, s) - spec.phi2(s))))

    out["transmission"] = _transmission(f, disc)

    # limit of the parabolic field at a height where the kernel width is h/8
    y_eps = max((h / 8.0) ** (1.0 / (0.5 * spec.lam)), 1e-300)
    grid = tr.grid
    below = dalembert_eval("omega1", tr, grid, np.zeros_like(grid))
    out["continuity_AB"] = float(np.max(np.abs(pf.at(y_eps) - below)))
    out["continuity_AA0"] = float(np.max(np.abs(rows[:, 0] - dalembert_eval("omega2", tr, 0.0, grid))))
    out["continuity_BB0"] = float(np.max(np.abs(rows[:, -1] - dalembert_eval("omega3", tr, 1.0, grid))))

    start = int(math.ceil(0.125 / h))
    ux0 = (-3 * rows[:, 0] + 4 * rows[:, 1] - rows[:, 2]) / (2 * h)
    ux1 = (3 * rows[:, -1] - 4 * rows[:, -2] + rows[:, -3]) / (2 * h)
    out["flux_AA0"] = float(np.max(np.abs(ux0[start:] - tr.nu2[start:])))
    out["flux_BB0"] = float(np.max(np.abs(ux1[start:] - tr.nu3[start:])))

    out["crossroute_nu2"], out["crossroute_nu3"] = _cross_route(f)
    out["march_step"] = float(f.system.step_residual)
    out["corner"] = tr.corner_mismatch(float(spec.phi1(1.0)))
    out["tau1_quadrature"] = float(f.tau1.quad_error)
    trunc = f.parabolic.cache.truncation_report
    out["truncation"] = float(max(trunc.values())) if trunc else 0.0
    return {k: abs(float(v)) for k, v in out.items()}


# }}}


# {{{ fault injection


def inject_fault(f: SolutionField, trace: str, delta: float = 0.1) -> SolutionField:
    """Copy of ``f`` with one trace shifted by ``delta`` and everything downstream of it rebuilt.

    ``trace`` is one of ``nu1``, ``nu2``, ``nu3``, ``mu2``, ``mu3``.  Shifting
    ``mu2`` or ``mu3`` also changes the integrated ``tau2`` / ``tau3`` and the
    parabolic field; the other traces are left as solved.
    """
    tr = f.traces
    if trace in ("nu1", "nu2", "nu3"):
        new = tr.with_traces(**{trace: getattr(tr, trace) + delta})
        pf = f.parabolic
    elif trace in ("mu2", "mu3"):
        mu = getattr(tr, trace) + delta
        tau_name = "tau2" if trace == "mu2" else "tau3"
        tau = getattr(tr, tau_name)[0] + np.concatenate([[0.0], np.cumsum(tr.h * mu)])
        new = tr.with_traces(**{trace: mu, tau_name: tau})
        pf = replace(f.parabolic, **{trace: mu, "_tables": {}})
    else:
        raise ValueError(f"unknown trace {trace!r}")
    g = replace(f, traces=new, parabolic=pf, diagnostics={})
    _fill_samples(g)
    g.diagnostics = verify_conditions(g, g.spec, g.disc)
    return g


# }}}


def condition_residuals(diagnostics: dict[str, Any]) -> dict[str, float]:
    return {k: float(diagnostics[k]) for k in CONDITION_KEYS}
