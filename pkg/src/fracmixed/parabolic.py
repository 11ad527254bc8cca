"""Solution of the first boundary problem in the unit square from its three traces.

With ``P_b(x, s)`` the antiderivative in ``s`` of the source-boundary derivative
``G_x1(x, s; b, 0)`` and ``Q_b`` its antiderivative again, integrating by parts in
``y1`` turns the boundary integrals into

    u(x, y) = P_0(x, y) tau2(0) + int_0^y P_0(x, y - y1) tau2'(y1) dy1
            - P_1(x, y) tau3(0) - int_0^y P_1(x, y - y1) tau3'(y1) dy1
            + int_0^1 Gbar(x - x1, y) tau1(x1) dx1.

With ``tau2'``, ``tau3'`` piecewise constant the ``y1`` integrals are exact
differences of ``Q_b``.  Evaluation points are nodes of the trace grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from fracmixed.greens import (
    KernelCache,
    boundary_potential,
    boundary_potential_integral,
    cell_weights,
    gbar_integral,
)


@dataclass
class ParabolicField:
    cache: KernelCache
    tau1: np.ndarray
    dtau1: np.ndarray
    tau2_0: float
    tau3_0: float
    mu2: np.ndarray
    mu3: np.ndarray
    _tables: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.tau1.size - 1

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n + 1)

    def _lag_tables(self) -> dict[str, np.ndarray]:
        if not self._tables:
            s = np.arange(self.n + 1) * self.h
            X, S = np.meshgrid(self.x, s, indexing="ij")
            for b in (0, 1):
                self._tables[f"P{b}"] = boundary_potential(X, S, b, self.cache)
                self._tables[f"Q{b}"] = boundary_potential_integral(X, S, b, self.cache)
        return self._tables

    def _initial_part(self, y: float) -> np.ndarray:
        return gbar_integral(self.tau1, self.dtau1, y, self.cache, cell_weights(self.cache, y, self.n))

    def rows(self, m: np.ndarray) -> np.ndarray:
        """``u`` at ``y = m h`` (integers ``m``) for every grid node ``x``; shape (len(m), n+1)."""
        m = np.asarray(m, int)
        tab = self._lag_tables()
        out = np.empty((m.size, self.n + 1))
        # sum_k mu_k [Q(x, (m - k) h) - Q(x, (m - k - 1) h)] is a causal convolution
        conv = {}
        for b, mu in ((0, self.mu2), (1, self.mu3)):
            dQ = np.diff(tab[f"Q{b}"], axis=1)
            conv[b] = fftconvolve(dQ, mu[None, :], axes=1)
        for r, mm in enumerate(m):
            if mm == 0:
                out[r] = self.tau1
                continue
            u = tab["P0"][:, mm] * self.tau2_0 - tab["P1"][:, mm] * self.tau3_0
            u = u + conv[0][:, mm - 1] - conv[1][:, mm - 1]
            out[r] = u + self._initial_part(mm * self.h)
        return out

    def at(self, y: float) -> np.ndarray:
        """``u`` at an arbitrary height ``y > 0`` for every grid node ``x``."""
        if y <= 0:
            return self.tau1.copy()
        x = self.x
        k = np.arange(min(self.n, int(np.ceil(y / self.h - 1e-12))))
        lo = y - k * self.h
        hi = np.maximum(y - (k + 1) * self.h, 0.0)
        u = boundary_potential(x, y, 0, self.cache) * self.tau2_0
        u = u - boundary_potential(x, y, 1, self.cache) * self.tau3_0
        for b, mu in ((0, self.mu2), (1, self.mu3)):
            if k.size == 0:
                continue
            X = x[:, None]
            dq = boundary_potential_integral(X, lo[None, :], b, self.cache) - boundary_potential_integral(
                X, hi[None, :], b, self.cache
            )
            term = dq @ mu[: k.size]
            u = u + term if b == 0 else u - term
        return u + self._initial_part(y)
