"""Pointwise linear algebra of Higgs-field values.

All functions accept a single ``(r, r)`` complex matrix; the ``*_batch``
variants and the characteristic-coefficient routines also accept stacks of
shape ``(..., r, r)`` so that fields can be processed nodewise.  The matrix
norm is Frobenius throughout.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import (ContourError, InvalidInputError, InvalidMetricError, NumericalRankError,
                     UndefinedPhaseError, UnsupportedRankError)

DEFAULT_NODES = 64


def as_matrix(M, name="M"):
    """Validate and convert to a complex square matrix (or stack of them)."""
    A = np.asarray(M, dtype=complex)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2] or A.shape[-1] < 1:
        raise InvalidInputError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def frob(M):
    return np.sqrt(np.sum(np.abs(M) ** 2, axis=(-2, -1)))


def _dagger(M):
    return np.conj(np.swapaxes(M, -1, -2))


def check_metric_value(H, r):
    """Validate a Hermitian positive-definite metric value (or stack)."""
    H = as_matrix(H, "H")
    if H.shape[-1] != r:
        raise InvalidMetricError(f"metric has rank {H.shape[-1]}, expected {r}")
    scale = 1.0 + np.abs(H).max()
    if np.abs(H - _dagger(H)).max() > 1e-10 * scale:
        raise InvalidMetricError("metric is not Hermitian")
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise InvalidMetricError("metric is not positive-definite") from None
    return H


def adjoint(M, H=None):
    """Adjoint with respect to the metric: ``H^-1 M^dagger H``."""
    M = np.asarray(M, dtype=complex)
    if H is None:
        return _dagger(M)
    H = np.asarray(H, dtype=complex)
    return np.linalg.solve(H, _dagger(M) @ H)


# --- characteristic coefficients ------------------------------------------

def char_coeffs(M):
    """Coefficients ``(b_1, ..., b_r)`` of ``det(lambda - M) = lambda^r + b_1 lambda^(r-1) + ... + b_r``.

    Uses closed forms for ``r <= 2`` and the Faddeev-LeVerrier recursion
    otherwise, so exactly nilpotent inputs give exact zeros.  Stacks of
    matrices return an array of shape ``(..., r)``.
    """
    M = as_matrix(M)
    r = M.shape[-1]
    if r == 1:
        return -M[..., 0, :]
    if r == 2:
        tr = M[..., 0, 0] + M[..., 1, 1]
        det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        return np.stack([-tr, det], axis=-1)
    eye = np.broadcast_to(np.eye(r, dtype=complex), M.shape)
    b = np.empty(M.shape[:-2] + (r,), dtype=complex)
    N = np.zeros_like(M)
    c = np.ones(M.shape[:-2], dtype=complex)
    for k in range(1, r + 1):
        N = M @ N + c[..., None, None] * eye
        c = -np.trace(M @ N, axis1=-2, axis2=-1) / k
        b[..., k - 1] = c
    return b


def bracket(M, H=None):
    """``[M, M*_H]`` with ``M*_H = H^-1 M^dagger H`` (identity metric by default)."""
    M = as_matrix(M)
    if H is not None:
        H = check_metric_value(H, M.shape[-1])
    Ms = adjoint(M, H)
    return M @ Ms - Ms @ M


def norm_gap(M):
    """Return ``(|M|^2 - sum |lambda_i|^2, |[M, M^dagger]|)`` in Frobenius norm."""
    M = as_matrix(M)
    lam = np.linalg.eigvals(M)
    gap = frob(M) ** 2 - np.sum(np.abs(lam) ** 2, axis=-1)
    return gap, frob(bracket(M))


def henrici_constant(r):
    """Dimensional constant ``sqrt((r^3 - r)/12)`` in ``gap <= C |[M, M^dagger]|``.

    Henrici's bound on the departure from normality; the rank-2 Jordan
    block attains it.
    """
    return math.sqrt((r ** 3 - r) / 12.0)


def is_nilpotent(M, tol=1e-6):
    """True when every ``|b_k(M)|^(1/k) <= tol (1 + |M|)``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return bool(is_nilpotent_batch(as_matrix(M), tol))


def is_nilpotent_batch(M, tol=1e-6):
    M = as_matrix(M)
    b = np.abs(char_coeffs(M))
    k = np.arange(1, M.shape[-1] + 1)
    bound = tol * (1.0 + frob(M))
    return np.all(b ** (1.0 / k) <= bound[..., None], axis=-1)


# --- eigenvalue clusters and projectors -------------------------------------

def cluster_eigenvalues(eigs, threshold):
    """Single-linkage clusters of eigenvalues, ordered by centroid (Re, Im).

    Returns a list of index arrays into ``eigs``.
    """
    eigs = np.asarray(eigs, dtype=complex)
    n = len(eigs)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(n), 2):
        if abs(eigs[i] - eigs[j]) <= threshold:
            parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    clusters = [np.array(sorted(g)) for g in groups.values()]
    clusters.sort(key=lambda g: (eigs[g].mean().real, eigs[g].mean().imag))
    return clusters


def eigen_clusters(M, tol=1e-6):
    """Cluster the spectrum of ``M`` with threshold ``tol (1 + |M|)``."""
    M = as_matrix(M)
    eigs = np.linalg.eigvals(M)
    return eigs, cluster_eigenvalues(eigs, tol * (1.0 + frob(M)))


def _cauchy(M, center, radius, nodes):
    """Trapezoid rule for ``(1/2 pi i) oint (zeta - M)^-1 dzeta`` on circles (batched)."""
    M = np.asarray(M, dtype=complex)
    r = M.shape[-1]
    w = np.exp(2j * np.pi * (np.arange(nodes) + 0.5) / nodes)
    center = np.asarray(center, dtype=complex)[..., None]
    radius = np.asarray(radius, dtype=float)[..., None]
    zeta = center + radius * w
    eye = np.eye(r, dtype=complex)
    res = np.linalg.inv(zeta[..., None, None] * eye - M[..., None, :, :])
    weights = (radius * w / nodes)[..., None, None]
    return np.sum(weights * res, axis=-3)


def hol_projector(M, cluster, radius=None, nodes=DEFAULT_NODES, match_tol=1e-6):
    """Spectral (holomorphic) projector onto the generalized eigenspace of ``cluster``.

    The contour is the circle about the cluster centroid; its default radius
    is a quarter of the distance from the cluster to the rest of the spectrum.
    """
    M = as_matrix(M)
    if M.ndim != 2:
        raise InvalidInputError("hol_projector takes a single matrix; use hol_projector_batch")
    eigs = np.linalg.eigvals(M)
    scale = 1.0 + frob(M)
    targets = np.atleast_1d(np.asarray(list(cluster) if isinstance(cluster, (set, frozenset))
                                       else cluster, dtype=complex))
    dist = np.abs(eigs[:, None] - targets[None, :]).min(axis=1)
    inside = dist <= match_tol * scale
    if not inside.any():
        raise ContourError(f"no eigenvalue of M matches cluster {targets}")
    center = eigs[inside].mean()
    rest = eigs[~inside]
    spread = np.abs(eigs[inside] - center).max()
    if radius is None:
        if rest.size:
            gap = np.abs(eigs[inside][:, None] - rest[None, :]).min()
            radius = 0.25 * gap
        else:
            radius = max(1.0, 4.0 * spread)
    d = np.abs(np.abs(eigs - center) - radius)
    if d.min() < 1e-12 * scale:
        raise ContourError("an eigenvalue lies on the contour")
    if spread >= radius or (rest.size and np.abs(rest - center).min() <= radius):
        raise ContourError("contour does not separate the cluster from the rest of the spectrum")
    return _cauchy(M, center, radius, nodes)


def hol_projector_batch(M, centers, radii, nodes=DEFAULT_NODES):
    """Batched Cauchy projectors for stacks ``M[..., r, r]`` with per-matrix circles."""
    return _cauchy(as_matrix(M), centers, radii, nodes)


def _range_basis(p, band=(0.1, 0.9)):
    U, s, _ = np.linalg.svd(p)
    if np.any((s > band[0]) & (s < band[1])):
        raise NumericalRankError(f"projector singular values {s} have no clean rank gap")
    k = int(np.sum(s >= 0.5))
    tr = np.trace(p).real
    if abs(tr - k) > 1e-6 * max(1.0, s[0]):
        raise NumericalRankError(f"numerical rank {k} disagrees with trace {tr:.6g}")
    return U[:, :k]


def orth_projector(p, H=None):
    """H-orthogonal projector onto ``range(p)`` for an idempotent ``p``."""
    p = as_matrix(p, "p")
    r = p.shape[-1]
    H = np.eye(r, dtype=complex) if H is None else check_metric_value(H, r)
    V = _range_basis(p)
    if V.shape[1] == 0:
        return np.zeros_like(p)
    G = _dagger(V) @ H @ V
    return V @ np.linalg.solve(G, _dagger(V) @ H)


def orth_projector_batch(p, H, rank):
    """Batched :func:`orth_projector` for a fixed common ``rank``."""
    p = np.asarray(p, dtype=complex)
    U, _, _ = np.linalg.svd(p)
    V = U[..., :rank]
    Vh = _dagger(V)
    G = Vh @ H @ V
    return V @ np.linalg.solve(G, Vh @ H)


# --- stability of rank-2 pairs ---------------------------------------------

def _eigvec_candidates(A, B, cluster_tol):
    """Candidate eigenvectors of ``A`` that could also be eigenvectors of ``B``."""
    r = A.shape[0]
    scale = 1.0 + frob(A)
    eigs, clusters = eigen_clusters(A, cluster_tol)
    out = []
    for idx in clusters:
        c = eigs[idx].mean()
        _, s, Vh = np.linalg.svd(A - c * np.eye(r))
        null = s <= cluster_tol * scale
        null[-1] = True
        basis = _dagger(Vh[null])
        k = basis.shape[1]
        if k == r:
            out.extend(np.linalg.eig(B)[1].T)
        elif k == 1:
            out.append(basis[:, 0])
        else:
            _, W = np.linalg.eig(_dagger(basis) @ B @ basis)
            out.extend((basis @ W).T)
    return out


def common_eigenvector(M, N, tol=None, cluster_tol=1e-6):
    """Return a common eigenvector of ``M`` and ``N``, or ``None``.

    Brute force: eigenvectors (or geometric eigenspaces of clustered
    eigenvalues) of each matrix are tested against the other.  ``tol``
    bounds the eigen-residuals ``|Mv - lambda v|``; the default is
    ``1e-9 max(1, |M|, |N|)``.
    """
    M = as_matrix(M, "M")
    N = as_matrix(N, "N")
    if M.shape != N.shape or M.ndim != 2:
        raise InvalidInputError(f"dimension mismatch: {M.shape} vs {N.shape}")
    if tol is None:
        tol = 1e-9 * max(1.0, frob(M), frob(N))
    cands = _eigvec_candidates(M, N, cluster_tol) + _eigvec_candidates(N, M, cluster_tol)
    for v in cands:
        v = v / np.linalg.norm(v)
        lam = np.vdot(v, M @ v)
        mu = np.vdot(v, N @ v)
        if (np.linalg.norm(M @ v - lam * v) <= tol
                and np.linalg.norm(N @ v - mu * v) <= tol):
            return v
    return None


def stability_det(M, N):
    """``det(MN - NM)`` for rank-2 matrices; nonzero iff no common eigenvector."""
    M = as_matrix(M, "M")
    N = as_matrix(N, "N")
    if M.shape[-1] != 2 or N.shape[-1] != 2:
        raise UnsupportedRankError("stability_det is defined for rank 2 only")
    C = M @ N - N @ M
    return C[..., 0, 0] * C[..., 1, 1] - C[..., 0, 1] * C[..., 1, 0]


def is_stable_pair(M, N, det_tol=1e-9):
    """Verdict for the trivial rank-2 pair: ``|det[M, N]| > det_tol (|M||N|)^2``."""
    d = stability_det(M, N)
    scale = max(1.0, float(frob(as_matrix(M)) * frob(as_matrix(N)))) ** 2
    return bool(abs(d) > det_tol * scale)


# --- phase normalization -------------------------------------------------------

def phase_normalizations(M, k, tol=1e-12):
    """The ``k`` unit numbers ``e^{i theta}`` with ``b_k(e^{i theta} M)`` real positive."""
    M = as_matrix(M)
    r = M.shape[-1]
    if not 1 <= k <= r:
        raise InvalidInputError(f"k must lie in 1..{r}")
    bk = char_coeffs(M)[k - 1]
    if abs(bk) <= tol * (1.0 + frob(M)) ** k:
        raise UndefinedPhaseError(f"b_{k}(M) vanishes; phase undefined")
    theta = (-np.angle(bk) + 2.0 * np.pi * np.arange(k)) / k
    theta = np.angle(np.exp(1j * theta))
    return list(np.exp(1j * np.sort(theta)))
