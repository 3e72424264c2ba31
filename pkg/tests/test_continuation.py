import numpy as np
import pytest

import mqcont.continuation as cont
from mqcont.problems import catalog

from conftest import make_system


def circle():
    return cont.FunctionSystem(
        lambda u, a: u**2 + a**2 - 1.0, 1, lambda u, a: 2 * u[None, :], lambda u, a: np.array([2 * a])
    )


def settings(**kw):
    base = dict(alpha_range=(-2.0, 2.0), ds_initial=0.1, ds_max=0.1)
    base.update(kw)
    return cont.ContinuationSettings(**base)


def test_linear_tangent_and_corrector():
    sys_ = cont.FunctionSystem(lambda u, a: u - a, 1)
    st = settings().resolved()
    p0 = cont.init_branch(sys_, [0.0], 0.0, st)
    np.testing.assert_allclose(p0.tangent, np.array([1.0, 1.0]) / np.sqrt(2), atol=1e-10)
    p1 = cont.corrector(sys_, p0.y + 0.3 * p0.tangent, p0, 0.3, st)
    assert p1.newton_iters <= 1
    assert abs(p1.u[0] - p1.alpha) <= 1e-12


def test_circle_corrector_on_circle():
    st = settings().resolved()
    sys_ = circle()
    p0 = cont.init_branch(sys_, [1.0], 0.0, st)
    p1 = cont.corrector(sys_, p0.y + 0.1 * p0.tangent, p0, 0.1, st)
    assert abs(p1.u[0] ** 2 + p1.alpha**2 - 1.0) <= 1e-10


def test_circle_full_revolution_and_fold():
    res = cont.run_continuation(circle(), [1.0], 0.0, settings(max_steps=200, detect=("fold",)))
    pts = np.array([p.y for p in res.branch])
    assert np.abs(pts[:, 0] ** 2 + pts[:, 1] ** 2 - 1.0).max() <= 1e-10
    angle = np.unwrap(np.arctan2(pts[:, 1], pts[:, 0]))
    assert abs(angle[-1] - angle[0]) >= 2 * np.pi
    folds = sorted(e.alpha_star for e in res.events if e.kind == "fold")
    assert any(abs(a - 1.0) <= 1e-8 for a in folds)
    assert any(abs(a + 1.0) <= 1e-8 for a in folds)


def test_fold_certificate_signs():
    res = cont.run_continuation(circle(), [1.0], 0.0, settings(max_steps=40, detect=("fold",)))
    ev = next(e for e in res.events if e.kind == "fold")
    lo, hi = ev.certificate.values
    assert np.sign(lo) != np.sign(hi)


def test_pitchfork_bordered_sign_change():
    sys_ = cont.FunctionSystem(lambda u, a: a * u - u**3, 1)
    res = cont.run_continuation(sys_, [0.0], -1.0, settings(alpha_range=(-1.0, 1.0), detect=("branch", "fold")))
    br = [e for e in res.events if e.kind == "branch"]
    assert len(br) == 1 and abs(br[0].alpha_star) <= 1e-8
    signs = {p.det_sign_bordered for p in res.branch}
    assert signs == {-1, 1}


def test_brusselator_ode_hopf():
    a = 4.0

    def f(u, b):
        x, y = u
        return np.array([a - (b + 1) * x + x * x * y, b * x - x * x * y])

    sys_ = cont.FunctionSystem(f, 2)
    res = cont.run_continuation(sys_, [a, 10.0 / a], 10.0, settings(alpha_range=(10.0, 25.0), ds_initial=0.5, ds_max=0.5))
    hopf = [e for e in res.events if e.kind == "hopf"]
    assert len(hopf) == 1
    assert abs(hopf[0].alpha_star - (1 + a * a)) <= 1e-8
    assert cont.hopf_certified(hopf[0])


def test_brusselator_1d_hopf():
    # with d1 = d2 = d the Dirichlet mode n goes oscillatory at b = 1 + a^2 + 2 d (n pi)^2
    entry, system = make_system("brusselator_1d", 10, 8.0, params={"a": 4.0, "d1": 0.01, "d2": 0.01, "b": 15.0})
    u0 = entry.initial_nodal(system.N).ravel()
    st = cont.ContinuationSettings(alpha_range=(15.0, 19.0), ds_initial=0.2, detect=("hopf",))
    res = cont.run_continuation(system, u0, 15.0, st)
    found = [e.alpha_star for e in res.events if e.kind == "hopf"]
    expected = [17.0 + 0.02 * (np.pi * n) ** 2 for n in (1, 2, 3)]
    assert len(found) == 3
    np.testing.assert_allclose(found, expected, rtol=1e-4)
    assert abs(found[0] - 17.197) <= 1e-3
    assert all(cont.hopf_certified(e) for e in res.events)


def test_tangent_continuity_and_residuals():
    entry, system = make_system("bratu_1d", 10, 9.25)
    st = cont.ContinuationSettings(alpha_range=(0.0, 4.0), u_max=5.0)
    res = cont.run_continuation(system, np.zeros(system.N), 0.0, st)
    for p, q in zip(res.branch, res.branch[1:]):
        assert np.dot(p.tangent, q.tangent) > 0
    for p in res.branch:
        # fresh evaluation with no cached factors
        r = system.evaluate(p.u, p.alpha)
        assert cont.scaled_residual(r, system.jac_u(p.u, p.alpha), p.u) <= st.newton_tol
    assert sum(e.kind == "fold" for e in res.events) == 1


def test_determinism():
    entry, system = make_system("brusselator_1d", 8, 7.0)
    st = cont.ContinuationSettings(alpha_range=(10.0, 55.0), detect=("branch",))
    u0 = entry.initial_nodal(system.N).ravel()
    a = cont.run_continuation(system, u0, entry.alpha0, st)
    b = cont.run_continuation(system, u0, entry.alpha0, st)
    assert [(e.kind, e.alpha_star) for e in a.events] == [(e.kind, e.alpha_star) for e in b.events]
    assert all(np.array_equal(p.u, q.u) for p, q in zip(a.branch, b.branch))


def test_bratu_first_step_is_easy():
    _, system = make_system("bratu_1d", 10, 9.25)
    st = cont.ContinuationSettings(alpha_range=(0.0, 4.0)).resolved()
    p0 = cont.init_branch(system, np.zeros(system.N), 0.0, st)
    assert p0.tangent[-1] > 0
    assert np.abs(p0.u).max() == 0.0
    p1 = cont.corrector(system, p0.y + 0.05 * p0.tangent, p0, 0.05, st)
    assert p1 is not None and p1.newton_iters <= 4


def test_brusselator_constant_state_initializes():
    entry, system = make_system("brusselator_1d", 8, 7.0, params={"b": 23.0})
    st = cont.ContinuationSettings(alpha_range=(10.0, 55.0)).resolved()
    p0 = cont.init_branch(system, entry.initial_nodal(system.N).ravel(), 23.0, st)
    assert p0.newton_iters == 0


def test_settings_validation():
    with pytest.raises(ValueError):
        cont.ContinuationSettings(alpha_range=(1.0, 0.0)).resolved()
    with pytest.raises(ValueError):
        cont.ContinuationSettings(alpha_range=(0.0, 1.0), detect=("cusp",)).resolved()
    st = cont.ContinuationSettings(alpha_range=(0.0, 4.0)).resolved()
    assert st.ds_initial == pytest.approx(0.08) and st.ds_max == pytest.approx(0.8)


def test_step_failure_raises():
    sys_ = cont.FunctionSystem(lambda u, a: np.array([np.nan]) if a > 0.5 else u - a, 1)
    with pytest.raises(cont.ContinuationError):
        cont.run_continuation(sys_, [0.0], 0.0, settings(alpha_range=(0.0, 2.0), ds_min=1e-3))


def test_initialization_failure():
    sys_ = cont.FunctionSystem(lambda u, a: u**2 + 1.0, 1)
    with pytest.raises(cont.InitializationError):
        cont.run_continuation(sys_, [0.0], 0.0, settings())


def test_catalog_brusselator_range():
    assert catalog("brusselator_1d").alpha_range == (10.0, 55.0)
