"""Green's-function representation against an independent finite-difference solver.

With ``u(x, 0) = sin(pi x)`` and zero side values the exact solution is
``E_lambda(-pi^2 y^lambda) sin(pi x)``.  The finite-difference reference
(implicit L1 in y on a graded mesh, central differences in x) shares no code
with the kernel route.
"""

from __future__ import annotations

import logging

import numpy as np

from fracmixed.oracle import BoundaryData, FdConfig, compare_representation, eigen_solution, fd_first_bvp

logging.basicConfig(level=logging.INFO, format="%(message)s")
log = logging.getLogger("oracle")

data = BoundaryData.eigenmode()
for lam in (0.5, 1.0):
    for n in (33, 65, 129):
        cfg = FdConfig(n, n, lam)
        fd = fd_first_bvp(data.tau1, data.tau2, data.tau3, cfg)
        fd_err = np.max(np.abs(fd - eigen_solution(lam, cfg.x[None, :], cfg.y[:, None])))
        rep = compare_representation(data, cfg)
        log.info("lambda %.1f  grid %3dx%-3d  FD vs exact %.2e  representation vs FD %.2e", lam, n, n, fd_err, rep)
