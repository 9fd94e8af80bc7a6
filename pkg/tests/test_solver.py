import numpy as np
import pytest

from higgslab import geometry as geo, solver
from higgslab.errors import InvalidMetricError, PositivityError, PreconditionError
from higgslab.geometry import Domain
from higgslab.solver import SolveConfig

from conftest import smooth_metric
from oracles import dirichlet_compact_poisson

JORDAN = np.array([[0, 1], [0, 0]], complex)


def identity_field(dom, r=2):
    return np.broadcast_to(np.eye(r, dtype=complex), dom.shape + (r, r)).copy()


def test_config_validation():
    with pytest.raises(ValueError):
        SolveConfig(dt0=0)
    with pytest.raises(ValueError):
        SolveConfig(tol=-1)
    with pytest.raises(ValueError):
        SolveConfig(scheme="rk4")


def test_residual_trivial_cases(torus32):
    H = identity_field(torus32)
    assert np.abs(solver.vw_residual(torus32, H, np.zeros((2, 2)))).max() == 0
    R = solver.vw_residual(torus32, H, np.diag([1.0, 2j]), mu=0.7)
    assert np.allclose(R, -0.7 * np.eye(2), atol=1e-14)


def test_residual_rank1_reduction(torus32):
    u = 0.2 * np.cos(2 * np.pi * torus32.x[:, None]) * np.sin(2 * np.pi * torus32.y[None, :])
    R = solver.vw_residual(torus32, np.exp(u)[..., None, None], np.zeros((1, 1)), mu=0.3)
    assert np.allclose(R[..., 0, 0], -0.5 * geo.compact_laplacian(torus32, u) - 0.3, atol=1e-12)


def test_residual_is_h_selfadjoint():
    dom = Domain.disk(33)
    H = smooth_metric(dom)
    M = np.broadcast_to(np.array([[0.3, 1], [0.5j, -0.3]]), H.shape)
    R = solver.vw_residual(dom, H, M)
    HR = H @ R
    assert np.abs(HR - np.conj(np.swapaxes(HR, -1, -2))).max() < 1e-10


def test_residual_mms_order():
    # manufactured: choose the mu-field so the continuum residual vanishes
    errs = []
    for n in (32, 64, 128):
        dom = Domain.torus(n)
        H = smooth_metric(dom)
        sd = lambda F, ax: geo.spectral_derivative(dom, F, ax)
        A = np.linalg.inv(H) @ (0.5 * (sd(H, 0) - 1j * sd(H, 1)))
        K_exact = -(sd(A, 0) + 1j * sd(A, 1))
        M = np.broadcast_to(np.array([[0.0, 1.0], [0.5, 0.0]], complex), H.shape)
        forcing = K_exact + 2 * solver.bracket_field(M, H)
        R = solver.vw_residual(dom, H, M) - forcing
        errs.append(np.abs(R).max())
    o = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all((o > 1.8) & (o < 2.2))


def test_flat_fixed_point_converges_at_step_zero(torus32):
    H, rep = solver.heat_flow(torus32, np.zeros((2, 2)), identity_field(torus32))
    assert rep.converged and rep.steps == 0
    assert len(rep.residual_history) == 1


def test_invalid_initial_metric(torus32):
    H0 = identity_field(torus32)
    H0[2, 2] = -np.eye(2)
    with pytest.raises(InvalidMetricError):
        solver.heat_flow(torus32, np.zeros((2, 2)), H0)


def rank1_boundary(dom):
    x, y = dom.x[:, None], dom.y[None, :]
    g = x ** 2 * y + 0.5 * np.cos(2 * x) + 0 * y
    return np.where(dom.active, g, 0.0)


def test_rank1_disk_matches_poisson_oracle():
    dom = Domain.disk(48)
    g = rank1_boundary(dom)
    logh0 = np.where(dom.interior, 0.0, g)
    H0 = np.exp(logh0)[..., None, None].astype(complex)
    H, rep = solver.heat_flow(dom, np.zeros((1, 1)), H0, config=SolveConfig(tol=1e-10))
    assert rep.converged
    ref = dirichlet_compact_poisson(dom, logh0)
    err = np.abs(H[..., 0, 0].real - np.exp(ref))[dom.active].max()
    assert err < 1e-8


@pytest.mark.parametrize("scheme", ["implicit", "explicit"])
def test_history_monotone_and_positive(scheme):
    dom = Domain.torus(16)
    M = np.diag([1.0, -1.0]) + 0j
    H0 = smooth_metric(dom, trace_free=True)
    seen = []
    cfg = SolveConfig(scheme=scheme, tol=1e-8, max_steps=30 if scheme == "implicit" else 400,
                      dt0=1e-3 if scheme == "explicit" else 0.5, normalize_det=True)

    def cb(step, H, sup, l2):
        np.linalg.cholesky(H)
        assert np.abs(H - np.conj(np.swapaxes(H, -1, -2))).max() <= 1e-12
        seen.append(l2)

    H, rep = solver.heat_flow(dom, M, H0, config=cfg, callback=cb)
    l2 = [h[2] for h in rep.residual_history]
    assert np.all(np.diff(l2) <= 1e-12)
    assert seen == l2[1:]
    assert l2[-1] < 0.1 * l2[0]
    if rep.converged:
        assert rep.sup_residual <= cfg.tol


def test_det_normalization_preserves_det():
    dom = Domain.torus(16)
    H0 = smooth_metric(dom, trace_free=False)
    det0 = np.linalg.det(H0).real
    H, rep = solver.heat_flow(dom, np.diag([1.0, -1.0]), H0,
                              config=SolveConfig(normalize_det=True, max_steps=5))
    assert np.abs(np.linalg.det(H).real - det0).max() <= 1e-10


def test_gauge_covariance_disk():
    dom = Domain.disk(24)
    M = np.zeros(dom.shape + (2, 2), complex)
    M[..., 0, 1] = 1.0
    M[..., 1, 0] = dom.z
    H0 = smooth_metric(dom)
    g = np.array([[1.2, 0.3 - 0.4j], [0.1j, 0.9]])
    gi = np.linalg.inv(g)
    cfg = SolveConfig(tol=1e-11)
    H1, r1 = solver.heat_flow(dom, M, H0, config=cfg)
    H2, r2 = solver.heat_flow(dom, g @ M @ gi, np.conj(gi.T) @ H0 @ gi, config=cfg)
    assert r1.converged and r2.converged
    target = np.conj(gi.T) @ H1 @ gi
    assert np.abs(H2 - target)[dom.active].max() < 1e-6


def test_positivity_underflow_raises(torus32):
    calls = {"n": 0}

    def residual(H):
        calls["n"] += 1
        if calls["n"] > 1:
            raise np.linalg.LinAlgError("boom")
        return np.broadcast_to(np.eye(2, dtype=complex), H.shape).copy()

    cfg = SolveConfig(scheme="explicit", dt0=1e-2, dt_min=1e-3)
    with pytest.raises(PositivityError):
        solver.run_flow(torus32, identity_field(torus32), residual, None, cfg)


def test_stall_reports_instead_of_raising(torus32):
    def residual(H):
        return np.broadcast_to(np.eye(2, dtype=complex), H.shape) * np.linalg.det(H)[..., None, None].real

    # every step increases det, hence the residual: the flow must stop as stalled
    cfg = SolveConfig(scheme="explicit", dt0=1.0, max_rejects=3)
    neg = lambda H: -residual(H)
    H, rep = solver.run_flow(torus32, identity_field(torus32), neg, None, cfg)
    assert not rep.converged
    assert rep.diagnostics.get("stalled")
    assert rep.rejected == 4


def test_hermitian_einstein_constant():
    assert solver.hermitian_einstein_constant(0, 2, 1.0) == 0
    assert solver.hermitian_einstein_constant(3, 2, np.pi) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        solver.hermitian_einstein_constant(1, 0, 1.0)


def test_weitzenbock_zero_field(torus32):
    W, gap = solver.weitzenbock_residual(torus32, smooth_metric(torus32), np.zeros((2, 2)))
    assert np.abs(W).max() == 0 and gap == 0


def test_l2_identities_trivial(torus32):
    out = solver.l2_identities(torus32, identity_field(torus32), np.zeros((2, 2)))
    assert all(v == 0 for k, v in out.items() if k != "curvature_ratio")
    assert out["curvature_ratio"] is None


def test_l2_identities_rank1_manufactured():
    dom = Domain.torus(64)
    x, y = dom.x[:, None], dom.y[None, :]
    u = 0.1 * np.sin(2 * np.pi * x) + 0 * y
    out = solver.l2_identities(dom, np.exp(2 * u)[..., None, None], np.zeros((1, 1)))
    # F = 2 dbar del (2u) = lap u; ||lap u|| = 0.1 (2 pi)^2 / sqrt 2 on the unit torus
    exact = 0.1 * (2 * np.pi) ** 2 / np.sqrt(2)
    assert out["F_l2"] == pytest.approx(exact, rel=1e-2)
    assert out["lambdaF_l2"] == pytest.approx(exact, rel=1e-2)


def test_normal_torus_solution_is_rigid():
    dom = Domain.torus(32)
    M = np.diag([1.0, -1.0]) + 0j
    H, rep = solver.heat_flow(dom, M, smooth_metric(dom, trace_free=True),
                              config=SolveConfig(normalize_det=True, tol=1e-8))
    assert rep.converged
    ids = solver.l2_identities(dom, H, M)
    assert ids["grad_phi_l2"] <= 1e-4 * ids["phi_l2"]
    assert ids["bracket_l2"] <= 1e-4 * ids["phi_l2"] ** 2
    W, gap = solver.weitzenbock_residual(dom, H, M)
    assert np.abs(W).max() < 1e-6 and gap < 1e-12


def test_nilpotent_diagnostics_closed_form(torus32):
    traj = []
    for a in (1.0, 0.8, 0.5):
        H = np.broadcast_to(np.diag([a, 1 / a]).astype(complex), torus32.shape + (2, 2)).copy()
        traj.append(H)
    d = solver.nilpotent_diagnostics(torus32, traj, JORDAN)
    # [phi; phi] = 2 a^2 diag(1, -1) on the unit torus
    assert np.allclose(d["bracket_l2"], [2 * np.sqrt(2) * a ** 2 for a in (1.0, 0.8, 0.5)])
    assert d["monotone"] and d["reduction"] == pytest.approx(4.0)
    zero = solver.nilpotent_diagnostics(torus32, traj, np.zeros((2, 2)))
    assert zero["final"] == 0
    with pytest.raises(PreconditionError):
        solver.nilpotent_diagnostics(torus32, traj, np.eye(2))


@pytest.mark.slow
def test_nilpotent_flow_doubling_does_not_increase():
    dom = Domain.torus(16)
    finals = []
    for steps in (40, 80):
        cfg = SolveConfig(normalize_det=True, dt_max=1.0, max_steps=steps, record_every=10)
        _, rep = solver.heat_flow(dom, JORDAN, identity_field(dom), config=cfg)
        assert not rep.converged
        finals.append(solver.nilpotent_diagnostics(dom, rep.trajectory, JORDAN)["final"])
    assert finals[1] <= finals[0]
