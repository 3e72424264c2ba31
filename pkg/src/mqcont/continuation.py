"""Pseudo-arclength continuation of ``G(u, alpha) = 0`` with bifurcation detection.

A system is anything with ``size``, ``evaluate(u, alpha)``, ``jac_u(u, alpha)``
and ``jac_alpha(u, alpha)``; both ``DiscretizedSystem`` and ``FunctionSystem``
qualify. Points are tracked as ``y = (u, alpha)`` with a unit tangent. Folds
are flagged by the alpha component of the tangent, branch points by the sign
of the bordered determinant and Hopf points by complex eigenvalues of
``G_u`` crossing the imaginary axis.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .collocation import NodalState
from .linalg import EPS, LinAlgFailure, Spectrum, eigen_full, lu_factor, lu_solve, null_vector

log = logging.getLogger(__name__)

EVENT_KINDS = ("fold", "branch", "hopf")
REFINE_MAXIT = 60


class ContinuationError(RuntimeError):
    """Continuation aborted; ``branch`` and ``events`` hold what was computed."""

    def __init__(self, message, branch=None, events=None):
        super().__init__(message)
        self.branch = branch or []
        self.events = events or []


class InitializationError(ContinuationError):
    pass


class RefinementError(ContinuationError):
    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class ContinuationSettings:
    alpha_range: tuple
    ds_initial: float | None = None
    ds_min: float = 1e-8
    ds_max: float | None = None
    newton_tol: float = 1e-10
    newton_max: int = 12
    detect: tuple = EVENT_KINDS
    event_tol_alpha: float = 1e-8
    max_steps: int = 1000
    direction: int = 1
    hopf_im_tol: float = 1e-6
    compute_spectrum: bool = True
    verify_jacobians: bool = False
    u_max: float = float("inf")  # stop once max|u| exceeds this

    def resolved(self) -> "ContinuationSettings":
        lo, hi = self.alpha_range
        if not lo < hi:
            raise ValueError(f"alpha_range must be increasing, got {self.alpha_range}")
        ds0 = 0.02 * (hi - lo) if self.ds_initial is None else self.ds_initial
        dsmax = 10.0 * ds0 if self.ds_max is None else self.ds_max
        out = replace(self, alpha_range=(float(lo), float(hi)), ds_initial=float(ds0), ds_max=float(dsmax))
        if not (0 < out.ds_min <= out.ds_initial <= out.ds_max):
            raise ValueError("need 0 < ds_min <= ds_initial <= ds_max")
        if out.event_tol_alpha <= 0:
            raise ValueError("event_tol_alpha must be positive")
        unknown = set(out.detect) - set(EVENT_KINDS)
        if unknown:
            raise ValueError(f"unknown event kinds {sorted(unknown)}")
        return out


@dataclass(frozen=True)
class SpectrumSummary:
    n_unstable: int
    n_unstable_complex: int
    critical: complex | None  # complex eigenvalue (Im > 0) with the smallest |Re|
    leading: tuple

    @classmethod
    def from_spectrum(cls, spec: Spectrum, im_tol=1e-6, n_leading=6):
        ev = spec.eigenvalues
        cplx = np.abs(ev.imag) > im_tol
        return cls(
            n_unstable=int(np.count_nonzero(ev.real > 0)),
            n_unstable_complex=int(np.count_nonzero((ev.real > 0) & cplx)),
            critical=spec.nearest_axis_pair(im_tol),
            leading=tuple(complex(z) for z in ev[:n_leading]),
        )


@dataclass(frozen=True)
class BranchPoint:
    u: np.ndarray
    alpha: float
    tangent: np.ndarray
    newton_iters: int
    residual_norm: float
    det_sign_bordered: int
    log_abs_det: float
    jac_norm: float
    spectrum_summary: SpectrumSummary | None = None
    jacobian_check: float | None = None

    @property
    def y(self) -> np.ndarray:
        return np.append(self.u, self.alpha)

    def state(self, system) -> NodalState:
        n = getattr(system, "n", None)
        U = self.u.reshape(n, -1) if n else self.u.copy()
        return NodalState(U, self.alpha)


@dataclass(frozen=True)
class Certificate:
    values: tuple  # test-function values at the final bracket ends
    bracket_width: float
    iterations: int
    re: float = float("nan")
    im: float = float("nan")


@dataclass(frozen=True)
class Event:
    kind: str
    alpha_star: float
    point: BranchPoint
    certificate: Certificate

    @property
    def u_star(self) -> np.ndarray:
        return self.point.u


@dataclass
class ContinuationResult:
    branch: list
    events: list
    warnings: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.branch, self.events))


class FunctionSystem:
    """Wrap plain callables as a continuation system; missing Jacobians use central differences."""

    def __init__(self, f: Callable, size: int, jac_u: Callable | None = None, jac_alpha: Callable | None = None):
        self.f = f
        self.size = size
        self._ju = jac_u
        self._ja = jac_alpha

    def evaluate(self, u, alpha):
        return np.atleast_1d(np.asarray(self.f(np.asarray(u, dtype=float), alpha), dtype=float))

    def jac_u(self, u, alpha):
        if self._ju is not None:
            return np.atleast_2d(np.asarray(self._ju(u, alpha), dtype=float))
        u = np.asarray(u, dtype=float)
        J = np.empty((self.size, self.size))
        for i in range(self.size):
            h = 1e-6 * (1 + abs(u[i]))
            e = np.zeros(self.size)
            e[i] = h
            J[:, i] = (self.evaluate(u + e, alpha) - self.evaluate(u - e, alpha)) / (2 * h)
        return J

    def jac_alpha(self, u, alpha):
        if self._ja is not None:
            return np.atleast_1d(np.asarray(self._ja(u, alpha), dtype=float))
        h = 1e-6 * (1 + abs(alpha))
        return (self.evaluate(u, alpha + h) - self.evaluate(u, alpha - h)) / (2 * h)


def scaled_residual(r, J, u) -> float:
    """``max|G| / (1 + ||G_u||_inf (1 + max|u|))``: the residual relative to the size of its terms.

    Ill-conditioned Gamma maps put the roundoff floor of G well above machine
    precision, so an absolute tolerance is not attainable for every system.
    """
    return float(np.abs(r).max() / (1.0 + np.abs(J).sum(axis=1).max() * (1.0 + np.abs(u).max())))


def _bordered(Ju, Ja, t):
    return np.vstack([np.column_stack([Ju, Ja]), t[None, :]])


def _make_point(system, u, alpha, t_old, iters, resid, settings, Ju=None, Ja=None):
    if Ju is None:
        Ju = system.jac_u(u, alpha)
    if Ja is None:
        Ja = system.jac_alpha(u, alpha)
    if t_old is None:
        t = null_vector(np.column_stack([Ju, Ja]))
        if t[-1] * settings.direction < 0 or (t[-1] == 0 and t[0] < 0):
            t = -t
    else:
        z = lu_solve(lu_factor(_bordered(Ju, Ja, t_old)), np.append(np.zeros(len(u)), 1.0))
        t = z / np.linalg.norm(z)
    fac = lu_factor(_bordered(Ju, Ja, t))
    summary = None
    if settings.compute_spectrum:
        try:
            summary = SpectrumSummary.from_spectrum(eigen_full(Ju), settings.hopf_im_tol)
        except LinAlgFailure as exc:
            log.warning("spectrum unavailable at alpha=%g: %s", alpha, exc)
    check = None
    if settings.verify_jacobians and hasattr(system, "verify_jacobians"):
        check = system.verify_jacobians(u, alpha)
    return BranchPoint(
        u=np.array(u, dtype=float),
        alpha=float(alpha),
        tangent=t,
        newton_iters=int(iters),
        residual_norm=float(resid),
        det_sign_bordered=int(fac.det_sign),
        log_abs_det=float(fac.log_abs_det),
        jac_norm=float(np.abs(Ju).sum(axis=1).max()),
        spectrum_summary=summary,
        jacobian_check=check,
    )


def init_branch(system, u0, alpha0, settings: ContinuationSettings) -> BranchPoint:
    """Newton at fixed alpha, then the initial tangent from the null space of [G_u | G_alpha]."""
    settings = settings.resolved()
    u = np.array(u0, dtype=float).ravel()
    if u.size != system.size:
        raise ValueError(f"initial state has {u.size} entries, system has {system.size}")
    for it in range(settings.newton_max + 1):
        r = system.evaluate(u, alpha0)
        J = system.jac_u(u, alpha0)
        res = scaled_residual(r, J, u)
        if res <= settings.newton_tol:
            return _make_point(system, u, alpha0, None, it, res, settings, J)
        fac = lu_factor(J)
        if fac.singular or not np.all(np.isfinite(r)):
            break
        u = u - lu_solve(fac, r)
    raise InitializationError("initialization failed: Newton did not converge")


def _polish(system, y, r, Ju, Ja, t, plane):
    """One extra Newton step; kept only when it lowers max|G|."""
    fac = lu_factor(_bordered(Ju, Ja, t))
    if fac.singular:
        return None
    y2 = y - lu_solve(fac, np.append(r, plane))
    m = len(r)
    r2 = system.evaluate(y2[:m], y2[m])
    if not np.all(np.isfinite(r2)) or np.abs(r2).max() >= np.abs(r).max():
        return None
    return y2, r2, system.jac_u(y2[:m], y2[m]), system.jac_alpha(y2[:m], y2[m])


def corrector(system, predicted, base: BranchPoint, ds: float, settings: ContinuationSettings):
    """Newton on G = 0 plus the plane <y - y_base, t_base> = ds. Returns a BranchPoint or None."""
    y = np.array(predicted, dtype=float)
    m = system.size
    yb, t = base.y, base.tangent
    for it in range(settings.newton_max + 1):
        u, a = y[:m], y[m]
        r = system.evaluate(u, a)
        if not np.all(np.isfinite(r)):
            return None
        plane = float(np.dot(y - yb, t) - ds)
        Ju = system.jac_u(u, a)
        Ja = system.jac_alpha(u, a)
        res = scaled_residual(r, Ju, u)
        if abs(plane) <= settings.newton_tol * (1 + abs(ds)) and res <= settings.newton_tol:
            if np.abs(r).max() > settings.newton_tol:
                polished = _polish(system, y, r, Ju, Ja, t, plane)
                if polished is not None:
                    y, r, Ju, Ja = polished
                    u, a = y[:m], y[m]
                    res = scaled_residual(r, Ju, u)
            try:
                return _make_point(system, u, a, t, it, res, settings, Ju, Ja)
            except LinAlgFailure:
                return None
        fac = lu_factor(_bordered(Ju, Ja, t))
        if fac.singular:
            return None
        y = y - lu_solve(fac, np.append(r, plane))
    return None


def test_fold(point: BranchPoint) -> float:
    return float(point.tangent[-1])


def test_branch(point: BranchPoint, reference: BranchPoint | None = None) -> float:
    """Signed determinant of the bordered matrix, scaled to stay finite.

    Without a reference the magnitude is the geometric mean of |det|; with one
    it is the determinant ratio, which varies smoothly along the branch.
    """
    if point.det_sign_bordered == 0:
        return 0.0
    if reference is None:
        return point.det_sign_bordered * float(np.exp(point.log_abs_det / (len(point.tangent))))
    return point.det_sign_bordered * float(np.exp(np.clip(point.log_abs_det - reference.log_abs_det, -700, 700)))


def test_hopf(point: BranchPoint) -> float:
    """Real part of the complex eigenvalue nearest the imaginary axis; NaN without complex pairs."""
    s = point.spectrum_summary
    if s is None or s.critical is None:
        return float("nan")
    return float(s.critical.real)


def _hopf_count(point):
    s = point.spectrum_summary
    return None if s is None else s.n_unstable_complex


def _flagged(kind, left, right):
    if kind == "fold":
        return test_fold(left) * test_fold(right) < 0
    if kind == "branch":
        return left.det_sign_bordered * right.det_sign_bordered < 0
    cl, cr = _hopf_count(left), _hopf_count(right)
    return cl is not None and cr is not None and cl != cr


def locate_event(system, left: BranchPoint, right: BranchPoint, kind: str, settings: ContinuationSettings) -> Event:
    """Refine a sign change between two accepted points by secant/bisection in arclength."""
    settings = settings.resolved()
    s_hi = float(np.dot(right.y - left.y, left.tangent))
    if kind == "hopf":
        c_lo = _hopf_count(left)

        def side(p):  # True on the left side of the crossing
            return _hopf_count(p) == c_lo

        value = test_hopf
    elif kind == "branch":

        def side(p):
            return p.det_sign_bordered == left.det_sign_bordered

        def value(p):
            return test_branch(p, left)
    else:

        def side(p):
            return np.sign(test_fold(p)) == np.sign(test_fold(left))

        value = test_fold

    lo, hi = (0.0, left), (s_hi, right)
    v_lo, v_hi = value(left), value(right)
    best = None
    for it in range(1, REFINE_MAXIT + 1):
        width = abs(hi[1].alpha - lo[1].alpha)
        if width <= settings.event_tol_alpha or abs(hi[0] - lo[0]) <= 1e-15 * (1 + abs(s_hi)):
            best = lo[1] if abs(v_lo) <= abs(v_hi) or np.isnan(v_hi) else hi[1]
            if np.isnan(value(best)):
                best = hi[1] if best is lo[1] else lo[1]
            cert = Certificate((v_lo, v_hi), width, it - 1)
            return _finish_event(kind, best, cert, system, settings)
        w = hi[0] - lo[0]
        sigma = lo[0] + 0.5 * w
        if np.isfinite(v_lo) and np.isfinite(v_hi) and v_lo * v_hi < 0:
            sec = lo[0] - v_lo * w / (v_hi - v_lo)
            if lo[0] + 0.05 * w < sec < hi[0] - 0.05 * w:
                sigma = sec
        p = corrector(system, left.y + sigma * left.tangent, left, sigma, settings)
        if p is None:
            raise RefinementError("event refinement failed: corrector did not converge", (lo[1].alpha, hi[1].alpha))
        v = value(p)
        if side(p):
            lo, v_lo = (sigma, p), v
        else:
            hi, v_hi = (sigma, p), v
    raise RefinementError("event refinement stalled", (lo[1].alpha, hi[1].alpha))


def _finish_event(kind, point, cert, system, settings):
    if kind == "hopf":
        s = point.spectrum_summary
        crit = s.critical if s is not None else None
        if crit is not None:
            cert = replace(cert, re=float(crit.real), im=float(crit.imag))
    return Event(kind, point.alpha, point, cert)


def hopf_certified(event: Event) -> bool:
    c = event.certificate
    return bool(np.isfinite(c.re) and abs(c.re) <= 1e-6 * event.point.jac_norm and abs(c.im) > 1e-6)


def _in_range(alpha, rng):
    return rng[0] <= alpha <= rng[1]


def run_continuation(system, u0, alpha0, settings: ContinuationSettings) -> ContinuationResult:
    settings = settings.resolved()
    lo, hi = settings.alpha_range
    first = init_branch(system, u0, alpha0, settings)
    branch, events, warnings = [first], [], []
    ds = settings.ds_initial
    easy = 0
    try:
        for _ in range(settings.max_steps):
            base = branch[-1]
            while True:
                p = corrector(system, base.y + ds * base.tangent, base, ds, settings)
                if p is not None:
                    break
                ds *= 0.5
                easy = 0
                if ds < settings.ds_min:
                    raise ContinuationError(f"step failure at alpha={base.alpha:.10g}: ds below ds_min")
            branch.append(p)
            if p.newton_iters <= 3:
                easy += 1
                if easy >= 2:
                    ds = min(1.3 * ds, settings.ds_max)
                    easy = 0
            else:
                easy = 0
            fold_flag = "fold" in settings.detect and _flagged("fold", base, p)
            found = []
            for kind in settings.detect:
                if not _flagged(kind, base, p):
                    continue
                if kind == "branch" and fold_flag:
                    continue  # coincides with a fold
                ev = locate_event(system, base, p, kind, settings)
                if kind == "hopf" and not hopf_certified(ev):
                    msg = f"rejected hopf candidate at alpha={ev.alpha_star:.10g}: Re={ev.certificate.re:.3e}"
                    log.info(msg)
                    warnings.append(msg)
                    continue
                if _in_range(ev.alpha_star, settings.alpha_range):
                    found.append(ev)
            found.sort(key=lambda ev: float(np.dot(ev.point.y - base.y, base.tangent)))
            events.extend(found)
            if p.spectrum_summary is None and settings.compute_spectrum:
                warnings.append(f"spectrum unavailable at alpha={p.alpha:.10g}; hopf detection degraded")
            if not _in_range(p.alpha, (lo, hi)) or np.abs(p.u).max() > settings.u_max:
                break
    except ContinuationError as exc:
        exc.branch, exc.events = branch, events
        raise
    return ContinuationResult(branch, events, warnings)
