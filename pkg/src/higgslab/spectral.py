"""Spectral covers of Higgs fields on a grid.

A Higgs field ``phi = M dz`` is stored as its matrix field ``M``.  This module
computes the characteristic coefficients as fields, the discriminant and its
near-zero locus, eigenvalue sheets continued across a region, and the square
root ``nu`` of ``-b_2`` for rank-2 trace-free fields.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import geometry as geo
from .errors import InvalidInputError, TrackingError, TransportError
from .matrix import as_matrix, char_coeffs

_STEPS4 = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass
class HiggsField:
    """Matrix field ``M`` with ``phi = M dz``; shape ``domain.shape + (r, r)``."""

    domain: geo.Domain
    M: np.ndarray

    def __post_init__(self):
        M = as_matrix(self.M)
        if M.ndim == 2:
            M = np.broadcast_to(M, self.domain.shape + M.shape).copy()
        if M.shape[:2] != self.domain.shape or M.ndim != 4:
            raise InvalidInputError(f"Higgs field shape {M.shape} does not fit {self.domain.shape}")
        self.M = M

    @property
    def rank(self):
        return self.M.shape[-1]

    @classmethod
    def from_polynomial(cls, domain, coeffs):
        """``M(z) = sum_k coeffs[k] z^k`` for a list of ``(r, r)`` coefficient matrices."""
        coeffs = [as_matrix(c, "coefficient") for c in coeffs]
        if not coeffs:
            raise InvalidInputError("need at least one coefficient matrix")
        r = coeffs[0].shape[-1]
        if any(c.shape != (r, r) for c in coeffs):
            raise InvalidInputError("coefficient matrices must share one shape")
        z = domain.z
        M = np.zeros(domain.shape + (r, r), dtype=complex)
        for c in reversed(coeffs):
            M = M * z[..., None, None] + c
        return cls(domain, M)

    def scaled(self, t):
        return HiggsField(self.domain, t * self.M)

    def holomorphy_residual(self):
        """``c0`` norm of ``dbar M`` over interior nodes."""
        return geo.norms(self.domain, geo.dbar(self.domain, self.M), mask=self.domain.interior)[1]


@dataclass
class SpectralField:
    """Characteristic coefficients ``b[..., k-1] = b_k`` at every node."""

    domain: geo.Domain
    b: np.ndarray

    @property
    def rank(self):
        return self.b.shape[-1]

    def b_k(self, k):
        return self.b[..., k - 1]


def spectral_data(phi):
    return SpectralField(phi.domain, char_coeffs(phi.M))


def _sylvester(p, q):
    """Batched Sylvester matrices for coefficient stacks (highest degree first)."""
    m = p.shape[-1] - 1
    n = q.shape[-1] - 1
    size = m + n
    S = np.zeros(p.shape[:-1] + (size, size), dtype=complex)
    for i in range(n):
        S[..., i, i:i + m + 1] = p
    for i in range(m):
        S[..., n + i, i:i + n + 1] = q
    return S


def resultant_discriminant(b):
    """Discriminant of the monic ``lambda^r + b_1 lambda^(r-1) + ... + b_r`` via ``Res(p, p')``.

    Normalized as ``(-1)^(r(r-1)/2) Res(p, p')``, which equals
    ``prod_{i<j} (lambda_i - lambda_j)^2``.
    """
    b = np.asarray(b, dtype=complex)
    r = b.shape[-1]
    if r == 1:
        return np.ones(b.shape[:-1], dtype=complex)
    p = np.concatenate([np.ones(b.shape[:-1] + (1,), dtype=complex), b], axis=-1)
    q = p[..., :-1] * np.arange(r, 0, -1)
    sign = (-1) ** (r * (r - 1) // 2)
    return sign * np.linalg.det(_sylvester(p, q))


def discriminant_field(b):
    """Discriminant of the characteristic polynomial at every node.

    Closed forms for ranks 2 and 3, the resultant otherwise.  Accepts a
    :class:`SpectralField` or a raw coefficient array ``(..., r)``.
    """
    arr = b.b if isinstance(b, SpectralField) else np.asarray(b, dtype=complex)
    if arr.ndim < 1 or arr.shape[-1] < 1:
        raise InvalidInputError("need at least one coefficient")
    r = arr.shape[-1]
    if r == 1:
        return np.ones(arr.shape[:-1], dtype=complex)
    if r == 2:
        b1, b2 = arr[..., 0], arr[..., 1]
        return b1 * b1 - 4.0 * b2
    if r == 3:
        a, c1, c0 = arr[..., 0], arr[..., 1], arr[..., 2]
        return (a * a * c1 * c1 - 4 * c1 ** 3 - 4 * a ** 3 * c0
                - 27 * c0 * c0 + 18 * a * c1 * c0)
    return resultant_discriminant(arr)


def branch_locus(disc, tol, dom=None):
    """Nodes where ``|disc| < tol (1 + c0(disc))`` (restricted to active nodes)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    disc = np.asarray(disc)
    active = np.ones(disc.shape, bool) if dom is None else dom.active
    mag = np.abs(disc)
    c0 = mag[active].max() if active.any() else 0.0
    return (mag < tol * (1.0 + c0)) & active


def eigen_gap(lam):
    """Minimal pairwise separation of the last axis (``inf`` for rank 1)."""
    r = lam.shape[-1]
    if r < 2:
        return np.full(lam.shape[:-1], np.inf)
    d = np.abs(lam[..., :, None] - lam[..., None, :])
    d[..., np.arange(r), np.arange(r)] = np.inf
    return d.min(axis=(-2, -1))


# --- sheet tracking ----------------------------------------------------------

@dataclass
class SheetTrack:
    """Eigenvalue sheets continued along a flood fill of a region.

    ``sheets[i, j, k]`` is the k-th sheet (NaN off ``valid_mask``);
    ``parent[i, j]`` is the flat index of the node it was continued from
    (-1 for seeds and untracked nodes).  The spanning tree formed by
    ``parent`` is the implicit branch cut.
    """

    domain: geo.Domain
    sheets: np.ndarray
    delta: float
    S: float
    valid_mask: np.ndarray
    parent: np.ndarray = field(repr=False)

    @property
    def rank(self):
        return self.sheets.shape[-1]


def _flood_order(region, priority):
    """Max-priority flood fill over 4-connected components of ``region``.

    Yields ``(node, parent)`` flat-index pairs; seeds have parent -1.
    Ties fall back to row-major order, so the result is deterministic.
    """
    nx, ny = region.shape
    flat = region.ravel()
    pri = priority.ravel()
    seen = np.zeros(flat.size, bool)
    candidates = np.flatnonzero(flat)
    # seeds in order of decreasing priority
    seed_order = candidates[np.lexsort((candidates, -pri[candidates]))]
    for seed in seed_order:
        if seen[seed]:
            continue
        seen[seed] = True
        heap = [(-pri[seed], seed, -1)]
        while heap:
            _, node, par = heapq.heappop(heap)
            yield node, par
            i, j = divmod(node, ny)
            for di, dj in _STEPS4:
                a, b = i + di, j + dj
                if 0 <= a < nx and 0 <= b < ny:
                    nb = a * ny + b
                    if flat[nb] and not seen[nb]:
                        seen[nb] = True
                        heapq.heappush(heap, (-pri[nb], nb, node))


def eigenvalues_field(M, mask):
    lam = np.full(M.shape[:2] + (M.shape[-1],), np.nan + 0j)
    lam[mask] = np.linalg.eigvals(M[mask])
    return lam


def sheet_track(phi, region, match_tol=0.5):
    """Continue eigenvalue branches over ``region`` from the node of largest gap.

    Each node is matched to its flood-fill parent by an optimal assignment;
    the jump of every sheet must stay below ``match_tol`` times the local gap
    (the smaller gap of node and parent), otherwise :class:`TrackingError`.
    """
    dom = phi.domain
    region = np.asarray(region, bool) & dom.active
    if not region.any():
        raise InvalidInputError("empty tracking region")
    M = phi.M
    r = M.shape[-1]
    lam = eigenvalues_field(M, region)
    gap = eigen_gap(lam)
    gap = np.where(region, gap, -np.inf)
    lam_flat = lam.reshape(-1, r)
    gap_flat = gap.ravel()
    sheets = np.full_like(lam_flat, np.nan)
    parent = -np.ones(lam_flat.shape[0], dtype=np.int64)
    ny = dom.n_y
    for node, par in _flood_order(region, np.where(np.isfinite(gap), gap, 1e300)):
        vals = lam_flat[node]
        if par < 0:
            order = np.lexsort((vals.imag, vals.real))
            sheets[node] = vals[order]
            continue
        prev = sheets[par]
        if r == 1:
            sheets[node] = vals
        else:
            cost = np.abs(prev[:, None] - vals[None, :])
            _, cols = linear_sum_assignment(cost)
            new = vals[cols]
            local = min(gap_flat[node], gap_flat[par])
            jump = np.abs(new - prev).max()
            if not jump < match_tol * local:
                raise TrackingError(
                    f"no gap-respecting assignment at node {divmod(int(node), ny)} "
                    f"(jump {jump:.3e}, local gap {local:.3e})", divmod(int(node), ny))
            sheets[node] = new
        parent[node] = par
    sheets = sheets.reshape(lam.shape)
    delta = float(gap[region].min()) if r > 1 else math.inf
    S = float(np.abs(lam[region]).max())
    return SheetTrack(dom, sheets, delta, S, region.copy(), parent.reshape(dom.shape))


def match_to(reference, candidates):
    """Reorder ``candidates`` so entry k is the one nearest ``reference[..., k]``.

    Returns ``(matched, index)``.
    """
    cost = np.abs(reference[..., :, None] - candidates[..., None, :])
    idx = np.argmin(cost, axis=-1)
    return np.take_along_axis(candidates, idx, axis=-1), idx


# --- Z2 forms ------------------------------------------------------------------

@dataclass
class Z2Form:
    """Branch ``nu`` of ``sqrt(-b_2)`` with loop monodromies.

    ``abs_nu = sqrt(|b_2|)``.  ``nu`` is continued along a flood fill off
    ``zero_set``; on ``zero_set`` (where the sign is meaningless) it is the
    principal root, so ``|nu| = abs_nu`` at every node.
    """

    domain: geo.Domain
    nu: np.ndarray
    abs_nu: np.ndarray
    zero_set: np.ndarray
    monodromy: list


def _roots(b2):
    """``sqrt(|b2|) exp(i arg(-b2)/2)``, so ``|root| = sqrt(|b2|)`` to rounding."""
    return np.sqrt(np.abs(b2)) * np.exp(0.5j * np.angle(-b2))


def transport_sign(b2_values, ambiguity=0.5):
    """Continue a square root of ``-b2`` along a closed sequence of values.

    Returns True when the root comes back with the opposite sign.
    """
    roots = _roots(np.asarray(b2_values, dtype=complex))
    w = roots[0]
    for v in list(roots[1:]) + [roots[0]]:
        near, far = sorted((abs(w - v), abs(w + v)))
        if near > ambiguity * far:
            raise TransportError("ambiguous branch choice along loop (step too coarse)")
        w = v if abs(w - v) <= abs(w + v) else -v
    return bool(abs(w + roots[0]) < abs(w - roots[0]))


def z2_form(dom, b2, loops=(), tol=1e-10, region=None):
    """Square root of ``-b_2`` on the cut domain plus monodromy of each loop.

    ``loops`` are sequences of ``(i, j)`` grid nodes, implicitly closed.
    """
    b2 = np.asarray(b2, dtype=complex)
    roots = _roots(b2)
    mag = np.abs(b2)
    active = dom.active
    zero = (mag < tol * (1.0 + mag[active].max())) & active
    region = active & ~zero if region is None else (np.asarray(region, bool) & active & ~zero)
    nu = roots.copy()
    flat_nu = nu.reshape(-1)
    flat_roots = roots.reshape(-1)
    for node, par in _flood_order(region, mag):
        v = flat_roots[node]
        if par >= 0 and abs(flat_nu[par] + v) < abs(flat_nu[par] - v):
            v = -v
        flat_nu[node] = v
    monodromy = []
    for loop in loops:
        idx = np.asarray(loop, dtype=np.int64)
        if idx.ndim != 2 or idx.shape[1] != 2 or len(idx) < 3:
            raise InvalidInputError("a loop is a sequence of at least three (i, j) nodes")
        if zero[idx[:, 0], idx[:, 1]].any():
            raise TransportError("loop passes through the zero set of b_2")
        monodromy.append(transport_sign(b2[idx[:, 0], idx[:, 1]]))
    return Z2Form(dom, nu, np.sqrt(mag), zero, monodromy)


def circle_loop(dom, center, radius, samples=None):
    """Grid nodes along a circle, consecutive duplicates removed."""
    if samples is None:
        samples = max(16, int(np.ceil(4 * np.pi * radius / dom.h)))
    theta = 2 * np.pi * np.arange(samples) / samples
    pts = center + radius * np.exp(1j * theta)
    i = np.rint((pts.real - dom.x[0]) / dom.h).astype(int)
    j = np.rint((pts.imag - dom.y[0]) / dom.h).astype(int)
    if dom.periodic:
        i %= dom.n_x
        j %= dom.n_y
    nodes = [(a, b) for a, b in zip(i, j)]
    out = [nodes[0]]
    for n in nodes[1:]:
        if n != out[-1]:
            out.append(n)
    if len(out) > 1 and out[-1] == out[0]:
        out.pop()
    return out


def winding_number(points, about=0.0):
    """Winding number of the closed polygon ``points`` (complex) around ``about``."""
    p = np.asarray(points, dtype=complex) - about
    ang = np.angle(np.roll(p, -1) / p)
    return int(np.rint(ang.sum() / (2 * np.pi)))
