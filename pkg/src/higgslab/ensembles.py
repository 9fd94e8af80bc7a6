"""Seeded random ensembles exercising the matrix layer.

Both the CLI (``matrix-props``, ``stability``) and the acceptance suite use
these, so a fixed seed gives identical numbers everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import (char_coeffs, common_eigenvector, frob, henrici_constant,
                     hol_projector_batch, norm_gap, stability_det)

PROPS_COLUMNS = ("sample", "norm", "gap", "bracket_norm", "gap_ratio", "lemma_ratio",
                 "conj_err", "homog_err", "proj_err")


def complex_gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def well_conditioned(rng, n, r, spread=2.0):
    """Random invertible matrices ``Q1 diag(s) Q2`` with ``s`` in ``[1/spread, spread]``."""
    Q1, _ = np.linalg.qr(complex_gaussian(rng, (n, r, r)))
    Q2, _ = np.linalg.qr(complex_gaussian(rng, (n, r, r)))
    s = np.exp(rng.uniform(-np.log(spread), np.log(spread), (n, r)))
    return (Q1 * s[:, None, :]) @ Q2


@dataclass
class PropsResult:
    rank: int
    table: np.ndarray          # rows follow PROPS_COLUMNS
    fitted_C: float
    henrici_C: float
    lemma_bounds: tuple

    def column(self, name):
        return self.table[:, PROPS_COLUMNS.index(name)]


def _eig_projector(M, index):
    """Spectral projector onto eigenvalue ``index`` from explicit right/left eigenvectors."""
    w, V = np.linalg.eig(M)
    Vinv = np.linalg.inv(V)
    rows = np.arange(len(M))
    return w, V[rows, :, index][:, :, None] * Vinv[rows, index, :][:, None, :]


def matrix_props(rank, samples, seed):
    """Per-sample invariance, homogeneity, gap and projector checks for one rank."""
    rng = np.random.default_rng([seed, rank])
    r = rank
    M = complex_gaussian(rng, (samples, r, r))
    U = well_conditioned(rng, samples, r)
    t = np.exp(rng.uniform(-np.log(2), np.log(2), samples) + 2j * np.pi * rng.uniform(size=samples))
    k = np.arange(1, r + 1)
    nrm = frob(M)
    b = char_coeffs(M)
    bc = char_coeffs(U @ M @ np.linalg.inv(U))
    bt = char_coeffs(t[:, None, None] * M)
    conj_err = (np.abs(bc - b) / (1.0 + nrm[:, None]) ** k).max(axis=1)
    homog_err = (np.abs(bt - t[:, None] ** k * b)
                 / (np.abs(t[:, None]) * (1.0 + nrm[:, None])) ** k).max(axis=1)
    gap, br = norm_gap(M)
    lemma = nrm ** 2 / (br + np.sum(np.abs(b) ** (2.0 / k), axis=1))
    # projector onto the eigenvalue of smallest real part
    w, _ = np.linalg.eig(M)
    idx = np.argmin(w.real, axis=1)
    rows = np.arange(samples)
    lam = w[rows, idx]
    others = np.abs(w - lam[:, None])
    others[rows, idx] = np.inf
    radius = 0.25 * others.min(axis=1)
    p = hol_projector_batch(M, lam, radius)
    _, p_ref = _eig_projector(M, idx)
    proj_err = frob(p - p_ref) / np.maximum(1.0, frob(p_ref))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(br > 0, gap / br, 0.0)
    table = np.column_stack([np.arange(samples), nrm, gap, br, ratio, lemma,
                             conj_err, homog_err, proj_err])
    return PropsResult(r, table, float(ratio.max()), henrici_constant(r),
                       (float(lemma.min()), float(lemma.max())))


@dataclass
class StabilityResult:
    dets: np.ndarray
    has_common: np.ndarray
    constructed: np.ndarray
    det_tol: float
    band: tuple

    @property
    def in_band(self):
        a = np.abs(self.dets)
        return (a >= self.band[0]) & (a <= self.band[1])

    @property
    def disagreements(self):
        stable = np.abs(self.dets) > self.det_tol
        return int(np.sum((stable == self.has_common) & ~self.in_band))


def _constructed_pairs(rng, count):
    pairs = []
    for i in range(count):
        M = complex_gaussian(rng, (2, 2))
        if i % 2 == 0:
            a, c = complex_gaussian(rng, 2)
            N = a * M + c * np.eye(2)
        else:
            P = well_conditioned(rng, 1, 2)[0]
            T1 = np.triu(complex_gaussian(rng, (2, 2)))
            T2 = np.triu(complex_gaussian(rng, (2, 2)))
            Pinv = np.linalg.inv(P)
            M, N = P @ T1 @ Pinv, P @ T2 @ Pinv
        pairs.append((M, N))
    return pairs


def stability_ensemble(samples, seed, constructed=100, det_tol=1e-8, band=(1e-10, 1e-8)):
    """``det[M, N]`` versus the brute-force common-eigenvector oracle on random pairs."""
    rng = np.random.default_rng([seed, 2])
    MN = complex_gaussian(rng, (samples, 2, 2, 2))
    pairs = [(m[0], m[1]) for m in MN] + _constructed_pairs(rng, constructed)
    dets = np.array([complex(stability_det(M, N)) for M, N in pairs])
    common = np.array([common_eigenvector(M, N) is not None for M, N in pairs])
    flag = np.zeros(len(pairs), bool)
    flag[samples:] = True
    return StabilityResult(dets, common, flag, det_tol, band)
