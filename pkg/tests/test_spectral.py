import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from higgslab import spectral as spc
from higgslab.errors import InvalidInputError, TrackingError, TransportError
from higgslab.geometry import Domain

CANON = [[[0, 1], [0, 0]], [[0, 0], [1, 0]]]      # M = (0 1; z 0)


@pytest.fixture
def disk():
    return Domain.disk(65)


def test_from_polynomial_and_holomorphy(disk):
    phi = spc.HiggsField.from_polynomial(disk, CANON)
    assert np.allclose(phi.M[..., 1, 0], disk.z)
    assert phi.holomorphy_residual() < 1e-12
    nonhol = spc.HiggsField(disk, np.conj(phi.M))
    assert nonhol.holomorphy_residual() > 0.5
    with pytest.raises(InvalidInputError):
        spc.HiggsField.from_polynomial(disk, [])
    with pytest.raises(InvalidInputError):
        spc.HiggsField(disk, np.zeros((3, 3, 2, 2)))


def test_spectral_data_canonical(disk):
    sd = spc.spectral_data(spc.HiggsField.from_polynomial(disk, CANON))
    assert np.abs(sd.b_k(1)).max() == 0
    assert np.allclose(sd.b_k(2), -disk.z)
    disc = spc.discriminant_field(sd)
    assert np.allclose(disc, 4 * disk.z)
    bl = spc.branch_locus(disc, 1e-8, disk)
    assert bl.sum() == 1 and bl[32, 32]


@pytest.mark.parametrize("r", [2, 3, 4])
def test_discriminant_vs_eigenvalues(r):
    rng = np.random.default_rng(r)
    M = rng.standard_normal((5, r, r)) + 1j * rng.standard_normal((5, r, r))
    lam = np.linalg.eigvals(M)
    ref = np.ones(5, complex)
    for i in range(r):
        for j in range(i + 1, r):
            ref *= (lam[:, i] - lam[:, j]) ** 2
    b = spc.char_coeffs(M)
    assert np.allclose(spc.discriminant_field(b), ref, rtol=1e-9)
    assert np.allclose(spc.resultant_discriminant(b), ref, rtol=1e-9)


def test_branch_locus_validation():
    with pytest.raises(ValueError):
        spc.branch_locus(np.ones((4, 4)), 0)


def test_sheet_track_away_from_branch(disk):
    phi = spc.HiggsField.from_polynomial(disk, CANON)
    r = np.abs(disk.z)
    region = (r > 0.4) & (r < 0.9) & (disk.x[:, None] > 0.1)
    tr = spc.sheet_track(phi, region)
    lam = tr.sheets[region]
    assert np.allclose(lam[:, 0] ** 2, disk.z[region], atol=1e-12)
    assert np.allclose(lam.sum(axis=1), 0, atol=1e-12)
    # continuity of each sheet between tracked neighbours
    jumps = np.abs(np.diff(tr.sheets, axis=0))
    assert np.nanmax(jumps) < 0.2
    assert tr.delta == pytest.approx(2 * np.sqrt(r[region].min()))
    assert tr.S == pytest.approx(np.sqrt(r[region].max()))
    # parent map points only to tracked neighbours
    p = tr.parent[region]
    assert np.all((p == -1) | region.ravel()[np.maximum(p, 0)])


def test_sheet_track_fails_on_branch_point(disk):
    phi = spc.HiggsField.from_polynomial(disk, CANON)
    with pytest.raises(TrackingError) as err:
        spc.sheet_track(phi, np.abs(disk.z) < 0.5)
    assert err.value.node is not None


def test_sheet_track_empty_region(disk):
    phi = spc.HiggsField.from_polynomial(disk, CANON)
    with pytest.raises(InvalidInputError):
        spc.sheet_track(phi, np.zeros(disk.shape, bool))


def test_match_to():
    ref = np.array([1.0, -1.0, 2j])
    cand = np.array([2j + 0.01, 1.01, -0.99])
    m, idx = spc.match_to(ref, cand)
    assert np.allclose(m, [1.01, -0.99, 2j + 0.01])
    assert list(idx) == [1, 2, 0]


def test_z2_form_abs_and_square(disk):
    b2 = -disk.z
    z2 = spc.z2_form(disk, b2)
    assert np.abs(np.abs(z2.nu) - np.sqrt(np.abs(b2)))[disk.active].max() <= 1e-12
    assert np.allclose(z2.nu ** 2, -b2, atol=1e-12)
    assert z2.zero_set.sum() == 1


def test_z2_form_continuity_off_cut(disk):
    b2 = -(disk.z - 0.3) * (disk.z + 0.3)
    z2 = spc.z2_form(disk, b2)
    # neighbouring values agree up to small variation except across the implicit cut
    d = np.abs(np.diff(z2.nu, axis=1))[disk.active[:, 1:] & disk.active[:, :-1]]
    assert np.mean(d < 0.2) > 0.95


@settings(max_examples=20, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5), st.floats(0.1, 0.45))
def test_monodromy_parity_matches_winding(cx, cy, rad):
    dom = Domain.disk(65)
    loop = spc.circle_loop(dom, complex(cx, cy), rad)
    pts = [dom.z[i, j] for i, j in loop]
    if min(abs(p) for p in pts) < 1.5 * dom.h:
        return
    z2 = spc.z2_form(dom, -dom.z, loops=[loop])
    assert z2.monodromy[0] == (spc.winding_number(pts) % 2 == 1)


def test_monodromy_two_branch_points_cancels():
    dom = Domain.disk(65)
    b2 = -(dom.z - 0.2) * (dom.z + 0.2)
    loops = [spc.circle_loop(dom, 0.0, 0.6), spc.circle_loop(dom, 0.2, 0.1)]
    z2 = spc.z2_form(dom, b2, loops=loops)
    assert z2.monodromy == [False, True]


def test_transport_errors():
    dom = Domain.disk(33)
    loop = [(16, 16), (16, 17), (17, 17)]
    with pytest.raises(TransportError):
        spc.z2_form(dom, -dom.z, loops=[loop])
    with pytest.raises(InvalidInputError):
        spc.z2_form(dom, -dom.z, loops=[[(1, 1)]])
    with pytest.raises(TransportError):
        spc.transport_sign([1.0, -1.0, 1.0])


def test_winding_number():
    pts = np.exp(2j * np.pi * np.arange(20) / 20)
    assert spc.winding_number(pts) == 1
    assert spc.winding_number(pts[::-1]) == -1
    assert spc.winding_number(pts, about=3.0) == 0
