"""Metric form of the Vafa-Witten equation on flat model domains.

The unknown is a Hermitian metric field ``H`` in a fixed holomorphic
trivialization, with Higgs field ``phi = M dz``.  The pointwise residual is

    R(H) = lambda_curvature(H) + 2 [M, M*_H] - mu id,    M*_H = H^-1 M^dagger H,

the factor 2 being ``|dz|^2`` for the flat metric.  ``heat_flow`` drives
``dH/dt = -H R(H)`` with the multiplicative update ``H <- H exp(-X)``, which
keeps every accepted iterate exactly Hermitian positive-definite.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import geometry as geo
from .errors import PositivityError, PreconditionError
from .matrix import adjoint, is_nilpotent_batch

log = logging.getLogger(__name__)


@dataclass
class SolveConfig:
    """Step-control parameters for :func:`heat_flow`.

    ``scheme="implicit"`` solves ``(I/dt + J) X = R`` with an approximate
    Jacobian ``J`` each step (linearly implicit Euler); ``"explicit"`` takes
    ``X = dt R``.  Both share the acceptance rule: keep the step only when the
    L2 residual does not increase, otherwise halve ``dt``.
    """

    dt0: float = 0.5
    tol: float = 1e-8
    max_steps: int = 200
    scheme: str = "implicit"
    grow: float = 2.0
    shrink: float = 0.5
    dt_min: float = 1e-14
    dt_max: float = 1e6
    normalize_det: bool = False
    record_every: int = 0
    max_rejects: int = 12

    def __post_init__(self):
        if self.dt0 <= 0 or self.tol <= 0:
            raise ValueError("dt0 and tol must be positive")
        if self.scheme not in ("implicit", "explicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass
class SolveReport:
    converged: bool
    steps: int
    residual_history: list = field(default_factory=list)
    rejected: int = 0
    trajectory: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def sup_residual(self):
        return self.residual_history[-1][1]

    @property
    def l2_residual(self):
        return self.residual_history[-1][2]

    def to_json(self):
        return {
            "converged": bool(self.converged),
            "steps": int(self.steps),
            "rejected": int(self.rejected),
            "residual_history": [[int(s), float(a), float(b)] for s, a, b in self.residual_history],
            "diagnostics": self.diagnostics,
        }


# --- residuals -------------------------------------------------------------

def bracket_field(M, H):
    """Nodewise ``[M, M*_H]`` for matrix fields."""
    Ms = adjoint(M, H)
    return M @ Ms - Ms @ M


def vw_residual(dom, H, M, mu=0.0):
    """Pointwise Vafa-Witten residual; zero on disk boundary nodes."""
    H = geo._filled_metric(dom, H)
    r = H.shape[-1]
    K = geo.lambda_curvature(dom, H)
    M = np.broadcast_to(M, H.shape)
    R = K + 2.0 * bracket_field(M, H) - mu * np.eye(r)
    return geo._mask_interior(dom, R)


def _residual_norms(dom, R, H):
    pn = geo.pointwise_norm(R, H)
    free = dom.interior
    sup = float(pn[free].max())
    l2 = float(np.sqrt(np.sum(dom.weights[free] * pn[free] ** 2)))
    return sup, l2


# --- sparse linearization ----------------------------------------------------

class _Stencil:
    """Sparse operators restricted to the free nodes of a domain."""

    def __init__(self, dom):
        self.dom = dom
        free = dom.interior
        self.free = free
        idx = -np.ones(dom.shape, dtype=np.int64)
        idx[free] = np.arange(int(free.sum()))
        self.idx = idx
        self.n = int(free.sum())
        h = dom.h
        me = idx[free]
        # compact Laplacian (matches lambda_curvature) and dbar = (Dx + i Dy)/2
        self.lap = self._assemble(me, [(d, w / (6.0 * h ** 2)) for d, w in geo.COMPACT_STENCIL]) \
            - sp.identity(self.n, format="csr") * (20.0 / (6.0 * h ** 2))
        c = 1.0 / (4.0 * h)
        self.dbar = self._assemble(me, [((1, 0), c), ((-1, 0), -c), ((0, 1), 1j * c), ((0, -1), -1j * c)])

    def _assemble(self, me, weights):
        rows, cols, vals = [], [], []
        for (di, dj), w in weights:
            nb = geo.shift(self.dom, self.idx, di, dj, fill=-1)[self.free]
            ok = nb >= 0
            rows.append(me[ok])
            cols.append(nb[ok])
            vals.append(np.full(ok.sum(), w, dtype=complex))
        return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(self.n, self.n))

    def gather(self, F):
        return F[self.free]

    def scatter(self, vals, like):
        out = np.zeros_like(like)
        out[self.free] = vals
        return out


def _ad(B):
    """Row-major vectorization of ``X -> B X - X B`` for a stack of matrices."""
    r = B.shape[-1]
    eye = np.eye(r)
    left = np.einsum("...ik,jl->...ijkl", B, eye)
    right = np.einsum("ik,...lj->...ijkl", eye, B)
    return (left - right).reshape(B.shape[:-2] + (r * r, r * r))


def _block_diag(blocks):
    n, m, _ = blocks.shape
    base = (np.arange(n) * m)[:, None, None]
    rows = base + np.arange(m)[None, :, None] + np.zeros((1, 1, m), dtype=np.int64)
    cols = base + np.arange(m)[None, None, :] + np.zeros((1, m, 1), dtype=np.int64)
    return sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(n * m, n * m))


def vw_jacobian(stencil, H, M, K):
    """Approximate Jacobian of ``R(H exp(X))`` at ``X = 0`` on free nodes.

    ``J X = -lap(X)/2 + [K, X] - 2 [A, dbar X] + 2 [M, [M*_H, X]]`` with
    ``A = H^-1 del_ H`` and ``K = lambda_curvature(H)``.
    """
    dom = stencil.dom
    r = H.shape[-1]
    m = r * r
    A = np.linalg.inv(H) @ geo.del_(dom, H)
    Mb = np.broadcast_to(M, H.shape)
    Ms = adjoint(Mb, H)
    g = stencil.gather
    local = _ad(g(K)) + 2.0 * _ad(g(Mb)) @ _ad(g(Ms))
    eye_m = sp.identity(m, format="csr")
    J = (-0.5 * sp.kron(stencil.lap, eye_m, format="csr")
         + _block_diag(local)
         - 2.0 * _block_diag(_ad(g(A))) @ sp.kron(stencil.dbar, eye_m, format="csr"))
    return J


# --- the flow ----------------------------------------------------------------

def _exp_update(L, S):
    """``L exp(-S) L^dagger`` for Hermitian ``S`` (``H = L L^dagger``)."""
    w, V = np.linalg.eigh(S)
    E = (V * np.exp(-w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    Hn = L @ E @ np.conj(np.swapaxes(L, -1, -2))
    return 0.5 * (Hn + np.conj(np.swapaxes(Hn, -1, -2)))


def _to_hermitian_frame(L, X):
    """``S = L^dagger X L^-dagger``, Hermitian when X is H-self-adjoint (then symmetrised)."""
    Lh = np.conj(np.swapaxes(L, -1, -2))
    S = Lh @ X @ np.linalg.inv(Lh)
    return 0.5 * (S + np.conj(np.swapaxes(S, -1, -2)))


def run_flow(dom, H0, residual, jacobian, config, callback=None, mean_free=False):
    """Generic multiplicative heat flow for a residual ``R(H)``.

    ``residual(H)`` returns an H-self-adjoint field vanishing off the free
    nodes; ``jacobian(stencil, H)`` returns a sparse approximate Jacobian on
    the free nodes (only used by the implicit scheme).  ``mean_free``
    removes the weighted mean of each update (fixes the mean of ``log H``).
    """
    H = geo._filled_metric(dom, H0)
    geo.check_metric(dom, H)
    r = H.shape[-1]
    stencil = _Stencil(dom) if config.scheme == "implicit" else None
    R = residual(H)
    sup, l2 = _residual_norms(dom, R, H)
    report = SolveReport(converged=sup <= config.tol, steps=0, residual_history=[(0, sup, l2)])
    if config.record_every:
        report.trajectory.append(H.copy())
    dt = config.dt0
    det0 = np.linalg.det(H).real if config.normalize_det else None
    step = 0
    while not report.converged and step < config.max_steps:
        if not np.isfinite(l2):
            break
        J = None
        if stencil is not None:
            J = jacobian(stencil, H)
            rhs = stencil.gather(R).reshape(-1)
        L = np.linalg.cholesky(H)
        rejects = 0
        positivity_failed = False
        accepted = False
        while rejects <= config.max_rejects:
            if dt < config.dt_min:
                if positivity_failed:
                    raise PositivityError(f"step size underflow (dt={dt:.3e}) at step {step}")
                break
            Hn = None
            if J is None:
                X = dt * R
            else:
                Aop = (sp.identity(J.shape[0], format="csc") / dt + J).tocsc()
                xv = spla.splu(Aop).solve(rhs.astype(complex))
                X = stencil.scatter(xv.reshape(-1, r, r), H)
            if mean_free:
                w = dom.weights[..., None, None]
                X = X - np.sum(w * X, axis=(0, 1)) / np.sum(w)
            if config.normalize_det:
                X = X - (np.trace(X, axis1=-2, axis2=-1) / r)[..., None, None] * np.eye(r)
            S = _to_hermitian_frame(L, X)
            if np.all(np.isfinite(S)):
                Hn = _exp_update(L, S)
                if not dom.periodic:
                    Hn[~dom.interior] = H[~dom.interior]
                if config.normalize_det:
                    scale = (det0 / np.linalg.det(Hn).real) ** (1.0 / r)
                    Hn = Hn * scale[..., None, None]
                try:
                    Rn = residual(Hn)
                except (np.linalg.LinAlgError, ValueError):
                    Hn = None
            if Hn is None:
                positivity_failed = True
            else:
                sup_n, l2_n = _residual_norms(dom, Rn, Hn)
                if np.isfinite(l2_n) and l2_n <= l2 + 1e-12:
                    accepted = True
                    break
            dt *= config.shrink
            rejects += 1
            report.rejected += 1
        if not accepted:
            # no admissible step: the residual sits at its rounding floor
            report.diagnostics["stalled"] = True
            break
        step += 1
        H, R, sup, l2 = Hn, Rn, sup_n, l2_n
        report.residual_history.append((step, sup, l2))
        report.steps = step
        report.converged = sup <= config.tol
        if config.record_every and step % config.record_every == 0:
            report.trajectory.append(H.copy())
        if callback is not None:
            callback(step, H, sup, l2)
        log.debug("step %d dt=%.3e sup=%.3e l2=%.3e", step, dt, sup, l2)
        dt = min(dt * config.grow, config.dt_max)
    return H, report


def heat_flow(dom, M, H0, mu=0.0, config=None, callback=None):
    """Solve ``R(H) = 0`` for the Higgs field ``M`` starting from ``H0``.

    Disk boundary values of ``H0`` are held fixed.  Non-convergence is
    reported through ``report.converged`` rather than raised.
    """
    config = SolveConfig() if config is None else config
    H0 = geo._filled_metric(dom, H0)
    M = np.broadcast_to(np.asarray(M, dtype=complex), H0.shape)

    def residual(H):
        return vw_residual(dom, H, M, mu)

    def jacobian(stencil, H):
        return vw_jacobian(stencil, H, M, geo.lambda_curvature(dom, H))

    return run_flow(dom, H0, residual, jacobian, config, callback)


# --- diagnostics -------------------------------------------------------------

def hermitian_einstein_constant(degree, rank, volume):
    """``mu = 2 pi deg(E) / (rank(E) vol(X))``; zero for trivial bundles."""
    if rank < 1 or volume <= 0:
        raise ValueError("rank must be >= 1 and volume positive")
    return 2.0 * np.pi * degree / (rank * volume)


def _covariant(dom, H, F):
    """Real-direction Chern derivatives ``(D_x F, D_y F)`` of an endomorphism field.

    With ``A = H^-1 del_ H`` the connection acts as ``D_x = d_x + [A, .]`` and
    ``D_y = d_y + [iA, .]`` in the holomorphic frame.
    """
    A = np.linalg.inv(H) @ geo.del_(dom, H)
    Dx = geo.d_x(dom, F) + (A @ F - F @ A)
    Dy = geo.d_y(dom, F) + 1j * (A @ F - F @ A)
    return geo._mask_interior(dom, Dx), geo._mask_interior(dom, Dy)


def _sq_l2(dom, F, H, mask):
    pn = geo.pointwise_norm(F, H)
    return float(np.sum(dom.weights * mask * pn ** 2))


def _diag_mask(dom, mask):
    """Nodes where second covariant derivatives are defined (two rings inside on a disk)."""
    inner = dom.interior
    if not dom.periodic:
        for di, dj in geo._NEIGHBOURS:
            inner = inner & geo.shift(dom, dom.interior, di, dj, fill=False)
    return inner if mask is None else inner & np.asarray(mask, bool)


def weitzenbock_residual(dom, H, M, mask=None):
    """Pointwise ``W = (1/2) nabla* nabla M + [[M, M*_H], M]`` and the integrated gap.

    At a solution with ``mu`` scalar the field vanishes up to discretization.
    The integrated gap is ``||nabla phi||^2 + ||[phi; phi]||^2`` (``phi = M dz``,
    ``|dz|^2 = 2``), which integration by parts on the torus ties to ``<W, M>``.
    Returns ``(W, gap)``.
    """
    H = geo._filled_metric(dom, H)
    M = np.broadcast_to(np.asarray(M, dtype=complex), H.shape)
    Dx, Dy = _covariant(dom, H, M)
    DDx, _ = _covariant(dom, H, Dx)
    _, DDy = _covariant(dom, H, Dy)
    B = bracket_field(M, H)
    W = -0.5 * (DDx + DDy) + (B @ M - M @ B)
    region = _diag_mask(dom, mask)
    W = np.where(region[..., None, None], W, 0)
    grad_sq = 2.0 * (_sq_l2(dom, Dx, H, region) + _sq_l2(dom, Dy, H, region))
    br_sq = _sq_l2(dom, 2.0 * B, H, region)
    return W, grad_sq + br_sq


def l2_identities(dom, H, M, mu=0.0, mask=None):
    """Curvature, bracket and Higgs-field norms of a metric.

    Norms use the metric ``H`` and ``|dz|^2 = 2``: ``|phi| = sqrt(2)|M|_H``,
    ``|F_H| = 2 |dbar(H^-1 del_ H)|_H``.  ``curvature_ratio`` compares
    ``||F_H||`` with ``||[phi; phi]|| + ||mu id||``.
    """
    H = geo._filled_metric(dom, H)
    M = np.broadcast_to(np.asarray(M, dtype=complex), H.shape)
    r = H.shape[-1]
    region = dom.interior if mask is None else dom.interior & np.asarray(mask, bool)
    Fc = geo.curvature_coefficient(dom, H)
    K = geo.lambda_curvature(dom, H)
    B = 2.0 * bracket_field(M, H)
    F_l2 = 2.0 * geo.norms(dom, Fc, H, region)[0]
    lambdaF_l2 = geo.norms(dom, K, H, region)[0]
    bracket_l2 = geo.norms(dom, B, H, region)[0]
    phi_l2, phi_c0 = (np.sqrt(2.0) * v for v in geo.norms(dom, M, H, region))
    Dx, Dy = _covariant(dom, H, M)
    grad_phi_l2 = float(np.sqrt(2.0 * (_sq_l2(dom, Dx, H, region) + _sq_l2(dom, Dy, H, region))))
    mu_l2 = abs(mu) * np.sqrt(r * float(np.sum(dom.weights * region)))
    den = bracket_l2 + mu_l2
    out = {
        "F_l2": float(F_l2),
        "lambdaF_l2": float(lambdaF_l2),
        "bracket_l2": float(bracket_l2),
        "phi_l2": float(phi_l2),
        "phi_c0": float(phi_c0),
        "grad_phi_l2": grad_phi_l2,
    }
    out["curvature_ratio"] = float(F_l2 / den) if den > 0 else None
    return out


def nilpotent_diagnostics(dom, trajectory, M):
    """``||[phi; phi]_{H_t}||_{L2}`` along a flow trajectory of a nilpotent field."""
    H_first = geo._filled_metric(dom, trajectory[0])
    Mb = np.broadcast_to(np.asarray(M, dtype=complex), H_first.shape)
    if not np.all(is_nilpotent_batch(Mb[dom.active])):
        raise PreconditionError("Higgs field is not nilpotent at every node")
    values = []
    for H in trajectory:
        H = geo._filled_metric(dom, H)
        values.append(geo.norms(dom, 2.0 * bracket_field(Mb, H), H, dom.interior)[0])
    values = np.array(values)
    final = values[-1]
    return {
        "bracket_l2": values.tolist(),
        "initial": float(values[0]),
        "final": float(final),
        "reduction": float(values[0] / final) if final > 0 else float("inf"),
        "monotone": bool(np.all(np.diff(values) <= 1e-12 * (1.0 + values[:-1]))),
    }
