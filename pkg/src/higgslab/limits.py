"""Large-field scaling experiments: solve for ``t phi_0`` and measure decoupling.

For each ``t`` the metric ``H_t`` solving the equation for ``t M_0`` is
computed with fixed boundary data, and on a measurement region ``Y`` away
from the branch locus the holomorphic eigen-projectors ``p_k`` of ``M_0`` are
compared with their ``H_t``-orthogonal counterparts ``pi_k``.

The renormalized field is ``rho_t = t phi_0 / ||t phi_0||`` where the norm is
the flat-reference L2 norm (``H = id``).  With this choice the characteristic
coefficients of ``rho_t`` are exactly t-independent on a scaling family.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import geometry as geo
from .errors import InsufficientDataError, InvalidInputError, PreconditionError
from .matrix import char_coeffs, hol_projector_batch, orth_projector_batch
from .solver import SolveConfig, bracket_field, heat_flow
from .spectral import (HiggsField, branch_locus, discriminant_field, eigen_gap, match_to,
                       sheet_track, spectral_data)

log = logging.getLogger(__name__)

CSV_FIELDS = ("t", "phi_l2", "phi_c0", "delta", "S", "gap_pPi_c0", "grad_pi_l2",
              "bracket_rho_l2", "sigma_gap_c0", "converged")
DECAY_FIELDS = ("gap_pPi_c0", "grad_pi_l2", "bracket_rho_l2", "sigma_gap_c0")


@dataclass
class SweepRecord:
    t: float
    phi_l2: float
    phi_c0: float
    delta: float
    S: float
    gap_pPi_c0: float
    grad_pi_l2: float
    bracket_rho_l2: float
    sigma_gap_c0: float
    converged: bool
    steps: int = 0
    sup_residual: float = math.nan
    b2_rho_l1: Optional[float] = None
    report: dict = field(default_factory=dict, repr=False)

    def row(self):
        return [self.t, self.phi_l2, self.phi_c0, self.delta, self.S, self.gap_pPi_c0,
                self.grad_pi_l2, self.bracket_rho_l2, self.sigma_gap_c0, self.converged]

    def to_json(self):
        return asdict(self)


@dataclass
class DecayFit:
    model: str
    rate: float
    intercept: float
    r_squared: float
    n: int
    field: str = ""


# --- regions -------------------------------------------------------------------

def annulus_region(dom, inner, outer):
    """Interior nodes with ``inner <= |z| <= outer``."""
    az = np.abs(dom.z)
    return (az >= inner) & (az <= outer) & dom.interior


def default_region(dom, phi0, branch_tol=1e-8, branch_margin=0.25, boundary_margin=0.2):
    """Nodes at least ``branch_margin`` (domain size fraction) from the branch
    locus and ``boundary_margin`` from the disk boundary."""
    size = dom.radius if not dom.periodic else 0.5 * min(dom.period_x, dom.period_y)
    disc = discriminant_field(spectral_data(phi0))
    locus = branch_locus(disc, branch_tol, dom)
    region = dom.interior & ~dom.nodes_within(locus, branch_margin * size)
    if not dom.periodic:
        region &= np.abs(dom.z) <= dom.radius * (1.0 - boundary_margin)
    return region


def _grow(dom, mask):
    out = mask.copy()
    for di, dj in geo._NEIGHBOURS:
        out |= geo.shift(dom, mask, di, dj, fill=False)
    return out & dom.interior


# --- comparison fields -----------------------------------------------------------

def build_sigma(sheets, projectors, mode="general", tol=1e-10):
    """Isometric comparison ``sigma . tau`` from sheets and orthogonal projectors.

    ``sheets`` has shape ``(n, r)`` and ``projectors`` ``(n, r, r, r)`` (one
    per sheet).  ``"general"`` returns ``sum_k lambda_k pi_k``;
    ``"trace_free"`` (rank 2, ``lambda_1 + lambda_2 = 0``) returns
    ``nu (pi_+ - pi_-)`` with ``nu = lambda_1``.
    """
    sheets = np.asarray(sheets)
    projectors = np.asarray(projectors)
    if sheets.shape[-1] != projectors.shape[-3]:
        raise InvalidInputError(
            f"{sheets.shape[-1]} sheets but {projectors.shape[-3]} projectors")
    if mode == "general":
        return np.einsum("...k,...kij->...ij", sheets, projectors)
    if mode == "trace_free":
        if sheets.shape[-1] != 2:
            raise PreconditionError("trace-free mode needs rank 2")
        scale = np.abs(sheets).max(axis=-1)
        if np.any(np.abs(sheets.sum(axis=-1)) > tol * (1.0 + scale)):
            raise PreconditionError("trace-free mode needs b_1 = 0")
        nu = sheets[..., 0]
        return nu[..., None, None] * (projectors[..., 0, :, :] - projectors[..., 1, :, :])
    raise InvalidInputError(f"unknown mode {mode!r}")


def sheet_projectors(M, sheets, nodes=64):
    """Holomorphic projectors for each simple sheet; ``M`` is ``(n, r, r)``, sheets ``(n, r)``."""
    r = sheets.shape[-1]
    radius = 0.25 * eigen_gap(sheets)
    if r == 1:
        radius = np.maximum(np.abs(sheets[..., 0]), 1.0)
    return np.stack([hol_projector_batch(M, sheets[:, k], radius, nodes) for k in range(r)],
                    axis=1)


def _hnorm(F, H):
    return geo.pointwise_norm(F[:, None], H[:, None])[:, 0]


def _measure(dom, M0, H, t, region, ref_norm, mode):
    """All projector-based quantities of one record."""
    r = M0.shape[-1]
    phi = HiggsField(dom, t * M0)
    track = sheet_track(phi, region)
    ext = _grow(dom, region)
    track_ext = sheet_track(HiggsField(dom, M0), ext)
    sheets = track_ext.sheets
    P = np.zeros(dom.shape + (r, r, r), dtype=complex)
    Pi = np.zeros_like(P)
    P[ext] = sheet_projectors(M0[ext], sheets[ext])
    for k in range(r):
        Pi[ext, k] = orth_projector_batch(P[ext, k], H[ext], 1)
    Y = region
    HY = H[Y]
    gap = max(_hnorm(P[Y, k] - Pi[Y, k], HY).max() for k in range(r))
    # covariant derivatives of pi_k with neighbour sheets rematched across the cut
    A = np.linalg.inv(H) @ geo.del_(dom, H)
    grad_sq = 0.0
    lamY = sheets[Y]
    diffs = {}
    for (di, dj) in geo._NEIGHBOURS:
        nb_sheets = geo.shift(dom, sheets, di, dj, fill=np.nan)[Y]
        _, idx = match_to(lamY, nb_sheets)
        nb_pi = geo.shift(dom, Pi, di, dj)[Y]
        diffs[(di, dj)] = np.take_along_axis(nb_pi, idx[..., None, None], axis=1)
    h = dom.h
    dx = (diffs[(1, 0)] - diffs[(-1, 0)]) / (2 * h)
    dy = (diffs[(0, 1)] - diffs[(0, -1)]) / (2 * h)
    AY = A[Y][:, None]
    PiY = Pi[Y]
    d_pi = 0.5 * (dx - 1j * dy) + (AY @ PiY - PiY @ AY)
    dbar_pi = 0.5 * (dx + 1j * dy)
    w = dom.weights[Y]
    for k in range(r):
        grad_sq += float(np.sum(w * 2.0 * (_hnorm(d_pi[:, k], HY) ** 2
                                           + _hnorm(dbar_pi[:, k], HY) ** 2)))
    rho = M0[Y] * (t / ref_norm)
    bracket_rho = math.sqrt(float(np.sum(w * _hnorm(2.0 * bracket_field(rho, HY), HY) ** 2)))
    rho_sheets = sheets[Y] * (t / ref_norm)
    sigma = build_sigma(rho_sheets, PiY, mode)
    sigma_gap = float(np.sqrt(2.0) * _hnorm(sigma - rho, HY).max())
    return track, gap, grad_sq, bracket_rho, sigma_gap


def reference_norm(dom, M):
    """Flat-reference L2 norm of ``phi = M dz`` (``|phi|^2 = 2 |M|^2``)."""
    return math.sqrt(2.0) * geo.norms(dom, M)[0]


def b2_rho_l1(dom, M0, t):
    """``int |b_2(rho_t)|`` over the domain."""
    M = t * M0
    rho = M / reference_norm(dom, M)
    b2 = char_coeffs(rho)[..., 1]
    return float(geo.integrate(dom, np.abs(b2), dom.active).real)


def _workers():
    try:
        return max(1, int(os.environ.get("HIGGSLAB_THREADS", "1")))
    except ValueError:
        return 1


def t_sweep(phi0, H_bc, t_list, region, config=None, mode="general", mu=0.0):
    """One :class:`SweepRecord` per ``t``; records are independent solves.

    Non-converged solves are still measured but flagged, and :func:`fit_decay`
    skips them.
    """
    dom = phi0.domain
    t_list = [float(t) for t in t_list]
    if any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise InvalidInputError("t_list must be strictly increasing")
    region = np.asarray(region, bool) & dom.interior
    if not region.any():
        raise InvalidInputError("measurement region is empty")
    config = SolveConfig() if config is None else config
    M0 = phi0.M
    H_bc = geo._filled_metric(dom, H_bc)

    def one(t):
        M = t * M0
        H, rep = heat_flow(dom, M, H_bc, mu, config)
        ref = reference_norm(dom, M)
        track, gap, grad_sq, bracket_rho, sigma_gap = _measure(dom, M0, H, t, region, ref, mode)
        phi_l2, phi_c0 = (math.sqrt(2.0) * v for v in geo.norms(dom, M, H))
        log.info("t=%g steps=%d gap=%.3e", t, rep.steps, gap)
        return SweepRecord(
            t=t, phi_l2=phi_l2, phi_c0=phi_c0, delta=track.delta, S=track.S,
            gap_pPi_c0=float(gap), grad_pi_l2=float(grad_sq), bracket_rho_l2=float(bracket_rho),
            sigma_gap_c0=sigma_gap, converged=bool(rep.converged), steps=rep.steps,
            sup_residual=rep.sup_residual, b2_rho_l1=b2_rho_l1(dom, M0, t) if M0.shape[-1] >= 2
            else None, report=rep.to_json())

    workers = min(_workers(), len(t_list))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            return list(ex.map(one, t_list))
    return [one(t) for t in t_list]


# --- fits and output -----------------------------------------------------------

def fit_decay(records, selector, model="exponential", x="t"):
    """Least-squares fit of ``log y`` against ``t`` (exponential) or ``log t`` (power).

    ``selector`` is a record attribute name or a callable.  Records that did
    not converge or have ``y <= 0`` are skipped; at least four must remain.
    """
    if model not in ("exponential", "power"):
        raise InvalidInputError(f"unknown model {model!r}")
    get = selector if callable(selector) else (lambda rec: getattr(rec, selector))
    xs, ys = [], []
    for rec in records:
        y = float(get(rec))
        if getattr(rec, "converged", True) and np.isfinite(y) and y > 0:
            xs.append(float(getattr(rec, x)))
            ys.append(math.log(y))
    if len(xs) < 4:
        raise InsufficientDataError(f"need >= 4 usable records, have {len(xs)}")
    X = np.array(xs)
    if model == "power":
        if np.any(X <= 0):
            raise InvalidInputError("power model needs positive abscissae")
        X = np.log(X)
    Yv = np.array(ys)
    slope, intercept = np.polyfit(X, Yv, 1)
    resid = Yv - (slope * X + intercept)
    ss_tot = float(np.sum((Yv - Yv.mean()) ** 2))
    ss_res = float(np.sum(resid ** 2))
    r2 = 0.0 if ss_tot <= 1e-24 * max(1.0, float(np.sum(Yv ** 2))) else max(0.0, 1.0 - ss_res / ss_tot)
    if ss_tot <= 1e-24 * max(1.0, float(np.sum(Yv ** 2))):
        slope = 0.0
    name = selector if isinstance(selector, str) else getattr(selector, "__name__", "")
    return DecayFit(model, float(slope), float(intercept), float(min(r2, 1.0)), len(xs), name)


@dataclass
class _Fake:
    t: float
    y: float
    converged: bool = True


def synthetic_records(ts, ys):
    """Lightweight records for fitting tabulated data (attributes ``t``, ``y``)."""
    return [_Fake(float(t), float(y)) for t, y in zip(ts, ys)]


def nonincreasing(values, slack=0.05):
    """True when no step increases the value by more than ``slack`` (relative)."""
    v = list(values)
    return all(b <= a * (1.0 + slack) for a, b in zip(v, v[1:]))


def records_csv(records, header_comment=None):
    """RFC-4180 CSV text with the fixed column set; floats use ``repr``."""
    buf = io.StringIO()
    if header_comment:
        buf.write(f"# {header_comment}\r\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_FIELDS)
    for rec in records:
        w.writerow([_fmt(v) for v in rec.row()])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def read_records_csv(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    out = []
    for row in rows:
        vals = {k: (row[k] == "true") if k == "converged" else float(row[k]) for k in CSV_FIELDS}
        out.append(SweepRecord(**vals))
    return out
