"""Flat model geometry: grids, finite differences, curvature contraction, quadrature.

Fields are plain numpy arrays whose two leading axes index grid nodes
``(i, j)`` with ``x = x[i]``, ``y = y[j]``.  A scalar field has shape
``(n_x, n_y)``; a matrix field has shape ``(n_x, n_y, r, r)``.

Conventions (flat Kähler form ``(i/2) dz ^ dzbar``):

* ``del_ = (d/dx - i d/dy) / 2`` and ``dbar = (d/dx + i d/dy) / 2``,
* ``laplacian = d2/dx2 + d2/dy2 = 4 del_ dbar``,
* ``lambda_curvature(H) = -2 dbar(H^-1 del_ H)``, so that a rank-one metric
  ``h`` gives ``-laplacian(log h) / 2``.

On the disk only *interior* nodes (whose 3x3 neighbourhood stays inside the
disk) carry operator values; boundary nodes hold Dirichlet data and every
operator returns zero there.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError, InvalidMetricError, UnderResolvedError

MIN_NODES = 8
_NEIGHBOURS = ((1, 0), (-1, 0), (0, 1), (0, -1))
_CORNERS = ((1, 1), (1, -1), (-1, 1), (-1, -1))
# compact isotropic 9-point weights (times 1/(6 h^2)); fourth order on harmonic functions
COMPACT_STENCIL = tuple((d, 4.0) for d in _NEIGHBOURS) + tuple((d, 1.0) for d in _CORNERS)


@dataclass(frozen=True)
class Domain:
    """Node-centred grid on a flat torus or a disk.

    Use :meth:`torus` or :meth:`disk` rather than the raw constructor.
    """

    kind: str
    n_x: int
    n_y: int
    period_x: float = 1.0
    period_y: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("torus", "disk"):
            raise InvalidInputError(f"unknown domain kind {self.kind!r}")
        if min(self.n_x, self.n_y) < MIN_NODES:
            raise UnderResolvedError(
                f"resolution {self.n_x}x{self.n_y} below {MIN_NODES} nodes per side")
        if self.kind == "torus":
            hx = self.period_x / self.n_x
            hy = self.period_y / self.n_y
            if not np.isclose(hx, hy, rtol=1e-12, atol=0.0):
                raise InvalidInputError(
                    f"torus spacings differ: {hx!r} vs {hy!r} (need a square grid)")
        elif self.n_x != self.n_y:
            raise InvalidInputError("disk grids must be square")
        if min(self.period_x, self.period_y, self.radius) <= 0:
            raise InvalidInputError("periods and radius must be positive")

    @classmethod
    def torus(cls, n, period=1.0, n_y=None, period_y=None):
        period_y = period if period_y is None else period_y
        n_y = n if n_y is None else n_y
        return cls("torus", int(n), int(n_y), float(period), float(period_y))

    @classmethod
    def disk(cls, n, radius=1.0):
        return cls("disk", int(n), int(n), radius=float(radius))

    @property
    def periodic(self):
        return self.kind == "torus"

    @property
    def shape(self):
        return (self.n_x, self.n_y)

    @property
    def h(self):
        if self.periodic:
            return self.period_x / self.n_x
        return 2.0 * self.radius / (self.n_x - 1)

    @cached_property
    def x(self):
        if self.periodic:
            return self.h * np.arange(self.n_x)
        return -self.radius + self.h * np.arange(self.n_x)

    @cached_property
    def y(self):
        if self.periodic:
            return self.h * np.arange(self.n_y)
        return -self.radius + self.h * np.arange(self.n_y)

    @cached_property
    def z(self):
        """Complex node coordinates, shape ``(n_x, n_y)``."""
        return self.x[:, None] + 1j * self.y[None, :]

    @cached_property
    def active(self):
        """Nodes that belong to the domain (the closed disk, or every torus node)."""
        if self.periodic:
            return np.ones(self.shape, dtype=bool)
        return np.abs(self.z) <= self.radius * (1.0 + 1e-12)

    @cached_property
    def interior(self):
        """Nodes whose full 3x3 stencil lies in the domain."""
        if self.periodic:
            return np.ones(self.shape, dtype=bool)
        ok = self.active.copy()
        for di, dj in _NEIGHBOURS + _CORNERS:
            ok &= shift(self, self.active, di, dj, fill=False)
        return ok

    @cached_property
    def boundary_mask(self):
        """Active nodes whose stencil leaves the disk (empty on the torus)."""
        return self.active & ~self.interior

    @property
    def area(self):
        if self.periodic:
            return self.period_x * self.period_y
        return np.pi * self.radius ** 2

    @cached_property
    def weights(self):
        """Quadrature weights: midpoint on the torus, masked trapezoid on the disk."""
        w = np.full(self.shape, self.h ** 2)
        if not self.periodic:
            w = np.where(self.interior, w, 0.0)
            w = np.where(self.boundary_mask, 0.5 * self.h ** 2, w)
        return w

    def header(self):
        """JSON-serialisable description of the grid."""
        out = {"kind": self.kind, "n_x": self.n_x, "n_y": self.n_y}
        if self.periodic:
            out["periods"] = [self.period_x, self.period_y]
        else:
            out["radius"] = self.radius
        return out

    @classmethod
    def from_header(cls, header):
        if header["kind"] == "torus":
            px, py = header["periods"]
            return cls("torus", int(header["n_x"]), int(header["n_y"]), float(px), float(py))
        return cls("disk", int(header["n_x"]), int(header["n_y"]), radius=float(header["radius"]))

    def nodes_within(self, mask, distance):
        """Boolean field of nodes at Euclidean distance <= ``distance`` from ``mask``."""
        from scipy.ndimage import distance_transform_edt

        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return np.zeros(self.shape, dtype=bool)
        if self.periodic:
            tiled = np.tile(mask, (3, 3))
            d = distance_transform_edt(~tiled)[self.n_x:2 * self.n_x, self.n_y:2 * self.n_y]
        else:
            d = distance_transform_edt(~mask)
        return d * self.h <= distance


def shift(dom, f, di, dj, fill=0.0):
    """Return ``g`` with ``g[i, j] = f[i + di, j + dj]``.

    Periodic on the torus; out-of-grid values are ``fill`` on the disk.
    """
    f = np.asarray(f)
    if dom.periodic:
        return np.roll(f, (-di, -dj), axis=(0, 1))
    out = np.full_like(f, fill)
    nx, ny = f.shape[:2]
    src_i = slice(max(di, 0), nx + min(di, 0))
    dst_i = slice(max(-di, 0), nx + min(-di, 0))
    src_j = slice(max(dj, 0), ny + min(dj, 0))
    dst_j = slice(max(-dj, 0), ny + min(-dj, 0))
    out[dst_i, dst_j] = f[src_i, src_j]
    return out


def _check_finite(f):
    f = np.asarray(f)
    if not np.all(np.isfinite(f)):
        raise InvalidInputError("field contains non-finite values")
    return f


def _mask_interior(dom, g):
    if dom.periodic:
        return g
    m = dom.interior.reshape(dom.shape + (1,) * (g.ndim - 2))
    return np.where(m, g, 0)


def laplacian(dom, f):
    """Five-point Laplacian ``d2/dx2 + d2/dy2`` (entrywise for matrix fields)."""
    f = _check_finite(f)
    acc = -4.0 * f
    for di, dj in _NEIGHBOURS:
        acc = acc + shift(dom, f, di, dj)
    return _mask_interior(dom, acc / dom.h ** 2)


def compact_laplacian(dom, f):
    """Compact 9-point Laplacian (second order; fourth order on harmonic ``f``)."""
    f = _check_finite(f)
    acc = -20.0 * f
    for (di, dj), w in COMPACT_STENCIL:
        acc = acc + w * shift(dom, f, di, dj)
    return _mask_interior(dom, acc / (6.0 * dom.h ** 2))


def d_x(dom, f):
    f = _check_finite(f)
    return _mask_interior(dom, (shift(dom, f, 1, 0) - shift(dom, f, -1, 0)) / (2 * dom.h))


def d_y(dom, f):
    f = _check_finite(f)
    return _mask_interior(dom, (shift(dom, f, 0, 1) - shift(dom, f, 0, -1)) / (2 * dom.h))


def del_(dom, f):
    """Centred ``d/dz = (d/dx - i d/dy) / 2``."""
    return 0.5 * (d_x(dom, f) - 1j * d_y(dom, f))


def dbar(dom, f):
    """Centred ``d/dzbar = (d/dx + i d/dy) / 2``."""
    return 0.5 * (d_x(dom, f) + 1j * d_y(dom, f))


def spectral_derivative(dom, f, axis):
    """FFT derivative along grid ``axis`` (0 for x, 1 for y); torus only."""
    if not dom.periodic:
        raise InvalidInputError("spectral differentiation needs a periodic domain")
    f = _check_finite(f)
    n = f.shape[axis]
    k = 2j * np.pi * np.fft.fftfreq(n, d=dom.h)
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = n
    return np.fft.ifft(k.reshape(shape) * np.fft.fft(f, axis=axis), axis=axis)


# --- metric fields -------------------------------------------------------

def _filled_metric(dom, H):
    """Copy of ``H`` with identity at inactive nodes (disk corners)."""
    H = np.array(H, dtype=complex)
    if H.ndim != 4 or H.shape[:2] != dom.shape or H.shape[2] != H.shape[3]:
        raise InvalidInputError(f"metric field must have shape {dom.shape} + (r, r)")
    if not dom.periodic:
        H[~dom.active] = np.eye(H.shape[-1])
    return H


def check_metric(dom, H, herm_tol=1e-10):
    """Validate a metric field; return its Cholesky factor (identity off-domain)."""
    H = _filled_metric(dom, H)
    if not np.all(np.isfinite(H)):
        bad = np.argwhere(~np.isfinite(H).all(axis=(-2, -1)))[0]
        raise InvalidMetricError(f"non-finite metric at node {tuple(bad)}", tuple(bad))
    scale = 1.0 + np.abs(H).max(axis=(-2, -1))
    asym = np.abs(H - np.conj(np.swapaxes(H, -1, -2))).max(axis=(-2, -1))
    if np.any(asym > herm_tol * scale):
        bad = tuple(int(v) for v in np.unravel_index(np.argmax(asym / scale), dom.shape))
        raise InvalidMetricError(f"metric not Hermitian at node {bad}", bad)
    try:
        return np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        w = np.linalg.eigvalsh(H)[..., 0]
        bad = tuple(int(v) for v in np.unravel_index(np.argmin(w), dom.shape))
        raise InvalidMetricError(f"metric not positive-definite at node {bad}", bad) from None


def _herm_log(W):
    w, V = np.linalg.eigh(W)
    return (V * np.log(w)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def connection(dom, H):
    """Centred Chern connection coefficients ``H^-1 dH/dx`` and ``H^-1 dH/dy``."""
    H = _filled_metric(dom, H)
    Hinv = np.linalg.inv(H)
    return Hinv @ d_x(dom, H), Hinv @ d_y(dom, H)


def lambda_curvature(dom, H):
    """Contracted curvature ``sqrt(-1) Lambda F_H`` of a metric field.

    The divergence part is discretised with matrix logarithms of neighbour
    transports ``H(n)^-1 H(n +- e)``, which makes the scalar reduction exact
    (``-laplacian(log h) / 2`` for diagonal metrics) and the result exactly
    covariant under constant gauge changes.
    """
    H = _filled_metric(dom, H)
    L = check_metric(dom, H)
    r = H.shape[-1]
    if r == 1:
        return -0.5 * compact_laplacian(dom, np.log(H.real))
    Linv = np.linalg.inv(L)
    LinvH = np.conj(np.swapaxes(Linv, -1, -2))
    LH = np.conj(np.swapaxes(L, -1, -2))
    div = np.zeros_like(H)
    for (di, dj), w in COMPACT_STENCIL:
        Hn = shift(dom, H, di, dj, fill=0.0)
        if not dom.periodic:
            Hn[~dom.interior] = H[~dom.interior]
        W = Linv @ Hn @ LinvH
        div += w * (LinvH @ _herm_log(W) @ LH)
    div /= 6.0 * dom.h ** 2
    Ax, Ay = connection(dom, H)
    K = -0.5 * (div + 1j * (Ax @ Ay - Ay @ Ax))
    return _mask_interior(dom, K)


def curvature_coefficient(dom, H):
    """``dbar(H^-1 del_ H)`` by plain centred differences (the dzbar^dz coefficient of F_H)."""
    H = _filled_metric(dom, H)
    check_metric(dom, H)
    A = np.linalg.inv(H) @ del_(dom, H)
    return dbar(dom, A)


# --- norms and quadrature ------------------------------------------------

def pointwise_norm(f, H=None):
    """Pointwise modulus (scalars) or Frobenius / H-norm (matrix fields)."""
    f = np.asarray(f)
    if f.ndim == 2:
        return np.abs(f)
    if H is None:
        return np.sqrt(np.sum(np.abs(f) ** 2, axis=(-2, -1)))
    Hinv = np.linalg.inv(H)
    fstar = Hinv @ np.conj(np.swapaxes(f, -1, -2)) @ H
    val = np.trace(f @ fstar, axis1=-2, axis2=-1).real
    return np.sqrt(np.maximum(val, 0.0))


def integrate(dom, f, mask=None):
    """Weighted sum of a scalar field against the flat area form."""
    f = np.asarray(f)
    w = dom.weights if mask is None else dom.weights * mask
    return complex(np.sum(w * f))


def norms(dom, f, H=None, mask=None):
    """Return ``(l2, c0)`` of a field over the domain (or over ``mask``)."""
    f = _check_finite(f)
    if H is not None:
        H = _filled_metric(dom, H)
    pn = pointwise_norm(f, H)
    region = dom.active if mask is None else (np.asarray(mask, bool) & dom.active)
    l2 = float(np.sqrt(max(integrate(dom, pn ** 2, region).real, 0.0)))
    c0 = float(pn[region].max()) if region.any() else 0.0
    return l2, c0
