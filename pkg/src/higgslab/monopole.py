"""Abelian reduction of rank-2 nilpotent solutions.

For ``E = L + L^-1`` with metric ``H = diag(e^{2u}, e^{-2u})`` and Higgs field
``M = (0 0; f 0)`` the rank-2 equation collapses to the scalar equation

    -lap(u) - c_beta |f|^2 e^{-4u} = c,     c_beta = 2,

where ``lap`` is the same discrete Laplacian that enters the curvature.  The
sign and size of ``c_beta`` are fixed by :func:`monopole_crosscheck`, which
evaluates the full rank-2 residual of the assembled pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import geometry as geo
from .errors import InvalidInputError
from .solver import SolveConfig, run_flow, vw_residual

C_BETA = 2.0


@dataclass
class MonopoleData:
    """Inputs of the abelian equation.

    ``f`` is the coefficient of ``beta = f dz``; ``u_bc`` supplies Dirichlet
    values on disk boundary nodes (zero when omitted) and the initial guess.
    ``c`` may be a constant or a forcing field.  With ``solve_c`` on a
    torus, ``c`` is instead determined by the compatibility condition and
    the mean of ``u`` is held fixed.
    """

    domain: geo.Domain
    f: np.ndarray
    c: object = 0.0
    u_bc: Optional[np.ndarray] = None
    c_beta: float = C_BETA
    solve_c: bool = False

    def __post_init__(self):
        self.f = np.broadcast_to(np.asarray(self.f, dtype=complex), self.domain.shape).copy()
        if not np.all(np.isfinite(self.f)):
            raise InvalidInputError("f has non-finite values")
        if self.solve_c and not self.domain.periodic:
            raise InvalidInputError("solve_c is only meaningful on a torus")


def kazdan_warner_residual(dom, u, f, c=0.0, c_beta=C_BETA):
    """``-lap(u) - c_beta |f|^2 e^{-4u} - c`` on interior nodes."""
    u = np.asarray(u, dtype=float)
    K = geo.lambda_curvature(dom, np.exp(2.0 * u)[..., None, None])[..., 0, 0].real
    R = K - c_beta * np.abs(f) ** 2 * np.exp(-4.0 * u) - c
    return geo._mask_interior(dom, R)


def kazdan_warner_solve(data, config=None, callback=None):
    """Solve the abelian equation with the rank-1 heat-flow stepper.

    Returns ``(u, report)``; ``report.diagnostics["c"]`` holds the constant
    actually used (the solved one when ``solve_c`` is set).
    """
    dom = data.domain
    config = SolveConfig() if config is None else config
    u0 = np.zeros(dom.shape) if data.u_bc is None else np.asarray(data.u_bc, dtype=float)
    fsq = np.abs(data.f) ** 2
    c_field = np.broadcast_to(np.asarray(data.c, dtype=float), dom.shape)
    state = {"c": 0.0}

    def residual(H):
        R = geo.lambda_curvature(dom, H)[..., 0, 0].real \
            - data.c_beta * fsq / H[..., 0, 0].real ** 2 - c_field
        R = geo._mask_interior(dom, R)
        if data.solve_c:
            shift = float(np.sum(dom.weights * R) / dom.area)
            state["c"] = shift
            R = R - shift
        return R[..., None, None].astype(complex)

    def jacobian(stencil, H):
        h = H[..., 0, 0].real
        local = stencil.gather(2.0 * data.c_beta * fsq / h ** 2)
        return -0.5 * stencil.lap + sp.diags(local.astype(complex), format="csr")

    H0 = np.exp(2.0 * u0)[..., None, None].astype(complex)
    H, report = run_flow(dom, H0, residual, jacobian, config, callback,
                         mean_free=data.solve_c)
    residual(H)
    u = 0.5 * np.log(H[..., 0, 0].real)
    c_used = state["c"] if data.solve_c else None
    report.diagnostics["c"] = c_used
    report.diagnostics["c_beta"] = data.c_beta
    if not dom.periodic:
        u = np.where(dom.active, u, 0.0)
    report.diagnostics["integrated_identity"] = integrated_identity(dom, u, data.f, data.c_beta)
    return u, report


def integrated_identity(dom, u, f, c_beta=C_BETA):
    """Both sides of the integrated abelian equation over interior nodes.

    Returns ``{"curvature": int(-lap u), "higgs": int(c_beta |f|^2 e^{-4u})}``.
    """
    K = geo.lambda_curvature(dom, np.exp(2.0 * u)[..., None, None])[..., 0, 0].real
    w = dom.weights * dom.interior
    return {
        "curvature": float(np.sum(w * K)),
        "higgs": float(np.sum(w * c_beta * np.abs(f) ** 2 * np.exp(-4.0 * u))),
    }


def assemble_monopole(u, f):
    """Rank-2 pair ``H = diag(e^{2u}, e^{-2u})``, ``M = (0 0; f 0)``."""
    u = np.asarray(u, dtype=float)
    f = np.broadcast_to(np.asarray(f, dtype=complex), u.shape)
    H = np.zeros(u.shape + (2, 2), dtype=complex)
    H[..., 0, 0] = np.exp(2.0 * u)
    H[..., 1, 1] = np.exp(-2.0 * u)
    M = np.zeros(u.shape + (2, 2), dtype=complex)
    M[..., 1, 0] = f
    return H, M


def monopole_crosscheck(dom, u, f, mu=0.0):
    """Sup over interior nodes of the H-norm of the rank-2 residual of the assembled pair."""
    H, M = assemble_monopole(u, f)
    R = vw_residual(dom, H, M, mu)
    return float(geo.pointwise_norm(R, geo._filled_metric(dom, H))[dom.interior].max())
