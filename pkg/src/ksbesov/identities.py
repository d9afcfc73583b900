"""Residual checks for the increment identities of forced Burgers-type equations.

Every check returns an :class:`IdentityReport` holding the individual terms,
the absolute residual and the residual relative to the largest term.

Conventions shared by the KHM family: ``u`` and ``eta`` are trajectories on
one grid with ``eta = u_t + u u_x`` (or ``u_t + a(u)_x`` for a general flux).
Time derivatives are centered differences across frames, h-derivatives are
centered differences with step ``dh``; time integrals use the trapezoid rule
over the recorded frames.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kinks import sign_integral, upsample
from .spectral import (
    DomainError,
    GridSpec,
    Trajectory,
    _check_grids,
    _cumulative_array,
    _derivative_array,
    _diff_array,
    _integrate_array,
    _integrate_x_times_array,
    _shift_array,
    fsum,
)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class IdentityReport:
    """Terms and residual of one identity check.

    ``terms`` maps term names to representative magnitudes (for per-frame
    identities, the largest magnitude over frames).  ``series`` optionally
    holds per-frame residuals.
    """

    name: str
    terms: dict
    residual_abs: float
    residual_rel: float
    resolution: dict = field(default_factory=dict)
    series: np.ndarray | None = field(default=None, repr=False)

    def passed(self, tol: float) -> bool:
        return bool(self.residual_rel <= tol)

    def summary(self) -> str:
        return f"{self.name}: residual_abs={self.residual_abs:.3e} residual_rel={self.residual_rel:.3e}"


def _report(name, terms, residual, resolution, series=None, floor: float = 0.0) -> IdentityReport:
    """Relative residual against the largest term; at or below ``floor`` the terms
    count as zero and the absolute residual is reported instead."""
    scale = max((abs(float(v)) for v in terms.values()), default=0.0)
    residual = abs(float(residual))
    rel = residual / scale if scale > floor else residual
    return IdentityReport(name, {k: float(v) for k, v in terms.items()}, residual, rel,
                          resolution, series)


def _pair(u: Trajectory, eta: Trajectory):
    _check_grids(u.grid, eta.grid)
    if u.n_frames != eta.n_frames:
        raise ValueError("u and eta must have the same number of frames")
    if abs(u.dt_rec - eta.dt_rec) > 1e-12 * u.dt_rec:
        raise ValueError("u and eta must share dt_rec")


def _khm_floor(u: Trajectory, eta: Trajectory) -> float:
    """Roundoff level of KHM terms: 1e-13 L (max|u|^3 + max|u| max|eta|)."""
    mu = float(np.max(np.abs(u.frames)))
    me = float(np.max(np.abs(eta.frames)))
    return 1e-13 * u.grid.L * (mu ** 3 + mu * me)


def _trapezoid_t(values: np.ndarray, dt: float) -> float:
    """Trapezoid rule over the leading (time) axis of a 1-D series."""
    v = np.asarray(values, dtype=float)
    if len(v) == 1:
        return 0.0
    return dt * (fsum(v) - 0.5 * (v[0] + v[-1]))


def default_dh(grid: GridSpec) -> float:
    return 1e-4 * grid.L


# |D^h u| has kinks where D^h u changes sign.  Integrals involving it are
# written as sign(D) * P and evaluated exactly on a grid refined by this
# factor, which must hold the polynomial products P without aliasing.
DEFAULT_OVERSAMPLE = 4


# --------------------------------------------------------------------------
# KHM identities
# --------------------------------------------------------------------------


def _khm_series(u: Trajectory, eta: Trajectory, h: float, dh: float, signed: bool,
                oversample: int = DEFAULT_OVERSAMPLE):
    _pair(u, eta)
    if u.n_frames < 3:
        raise ValueError("KHM residuals need at least 3 frames")
    if signed:
        F, g, Fe = u.frames, u.grid, eta.frames
    else:
        F, g = upsample(u.frames, u.grid, oversample)
        Fe, _ = upsample(eta.frames, u.grid, oversample)
    D = _diff_array(F, g, h)
    Dp = _diff_array(F, g, h + dh)
    Dm = _diff_array(F, g, h - dh)
    De = _diff_array(Fe, g, h)
    if signed:
        E = 0.5 * _integrate_array(D * D, g)
        cube = _integrate_array(Dp ** 3 - Dm ** 3, g)
        src = _integrate_array(De * D, g)
    else:
        E = 0.5 * sign_integral(D * D, D, g)
        cube = sign_integral(Dp ** 3, Dp, g) - sign_integral(Dm ** 3, Dm, g)
        src = sign_integral(De * D, D, g)
    t_term = (E[2:] - E[:-2]) / (2.0 * u.dt_rec)
    h_term = (cube / 6.0 / (2.0 * dh))[1:-1]
    return t_term, h_term, src[1:-1]


def _khm_report(name, u, eta, h, dh, signed, oversample):
    dh = default_dh(u.grid) if dh is None else dh
    t_term, h_term, src = _khm_series(u, eta, h, dh, signed, oversample)
    res = t_term + h_term - src
    terms = {
        "time_derivative": float(np.max(np.abs(t_term))),
        "h_derivative": float(np.max(np.abs(h_term))),
        "source": float(np.max(np.abs(src))),
    }
    return _report(name, terms, np.max(np.abs(res)),
                   {"N": u.grid.N, "dt": u.dt_rec, "dh": dh, "h": h, "oversample": oversample},
                   res, floor=_khm_floor(u, eta))


def khm_modified_residual(u: Trajectory, eta: Trajectory, h: float, dh: float | None = None,
                          oversample: int = DEFAULT_OVERSAMPLE) -> IdentityReport:
    """d/dt (1/2) int |D^h u| D^h u + d/dh (1/6) int |D^h u|^3 - int D^h eta |D^h u|."""
    return _khm_report("khm_modified", u, eta, h, dh, False, oversample)


def khm_signed_residual(u: Trajectory, eta: Trajectory, h: float,
                        dh: float | None = None) -> IdentityReport:
    """d/dt (1/2) int (D^h u)^2 + d/dh (1/6) int (D^h u)^3 - int D^h eta D^h u."""
    return _khm_report("khm_signed", u, eta, h, dh, True, 1)


def khm_pointwise_residual(u: Trajectory, eta: Trajectory, h: float,
                           dh: float | None = None) -> IdentityReport:
    """Pointwise flux form, max over interior frames and grid points.

    The x-derivative of the flux is expanded by the chain rule so that only
    spectral derivatives of band-limited fields are needed.
    """
    _pair(u, eta)
    if u.n_frames < 3:
        raise ValueError("the pointwise residual needs at least 3 frames")
    g = u.grid
    dh = default_dh(g) if dh is None else dh
    F = u.frames
    D = _diff_array(F, g, h)
    aD = np.abs(D)
    quad = aD * D
    t_term = 0.5 * (quad[2:] - quad[:-2]) / (2.0 * u.dt_rec)
    cube_p = np.abs(_diff_array(F[1:-1], g, h + dh)) ** 3
    cube_m = np.abs(_diff_array(F[1:-1], g, h - dh)) ** 3
    h_term = (cube_p - cube_m) / (6.0 * 2.0 * dh)
    ux = _derivative_array(F[1:-1], g, 1)
    Dx = _diff_array(ux, g, h)
    Dc, aDc = D[1:-1], aD[1:-1]
    # d/dx (u |D| D + |D|^3 / 3) = u_x |D| D + 2 u |D| D_x + |D| D D_x
    x_term = 0.5 * (ux * aDc * Dc + 2.0 * F[1:-1] * aDc * Dx + aDc * Dc * Dx)
    src = _diff_array(eta.frames[1:-1], g, h) * aDc
    res = t_term + h_term + x_term - src
    x_integral = float(np.max(np.abs(_integrate_array(x_term, g))))
    terms = {
        "time_derivative": float(np.max(np.abs(t_term))),
        "h_derivative": float(np.max(np.abs(h_term))),
        "x_flux": float(np.max(np.abs(x_term))),
        "source": float(np.max(np.abs(src))),
    }
    return _report("khm_pointwise", terms, np.max(np.abs(res)),
                   {"N": g.N, "dt": u.dt_rec, "dh": dh, "h": h, "x_flux_integral": x_integral},
                   np.max(np.abs(res), axis=-1))


def delta_nodes(h: float, grid: GridSpec, panels: int | None = None):
    """Composite 4-point Gauss-Legendre nodes on [0, h] (or [h, 0]).

    The x-integrated Delta-integrands are smooth away from Delta = 0 mod L,
    so the default uses 16 panels per period.
    """
    if panels is None:
        panels = max(4, math.ceil(16.0 * abs(h) / grid.L))
    edges = np.linspace(0.0, h, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * np.diff(edges)[:, None]
    return (mid + half * _GL_X).ravel(), (half * _GL_W).ravel()


def _delta_integrals(u: Trajectory, eta: Trajectory | None, h: float, panels=None,
                     oversample: int = DEFAULT_OVERSAMPLE):
    """int_0^h int |D u| D u on the first and last frames and, per frame,
    int_0^h int D eta |D u| (Delta-quadrature by :func:`delta_nodes`)."""
    nodes, w = delta_nodes(h, u.grid, panels)
    F, g = upsample(u.frames, u.grid, oversample)
    Fe = upsample(eta.frames, u.grid, oversample)[0] if eta is not None else None
    ends = F[[0, -1]]
    quad = np.zeros(2)
    src = np.zeros(u.n_frames)
    for d, wd in zip(nodes, w):
        De = _diff_array(ends, g, d)
        quad += wd * sign_integral(De * De, De, g)
        if Fe is not None:
            D = _diff_array(F, g, d)
            src += wd * sign_integral(_diff_array(Fe, g, d) * D, D, g)
    return quad, src, len(nodes)


def khm_integrated_residual(u: Trajectory, eta: Trajectory, h: float,
                            panels: int | None = None,
                            oversample: int = DEFAULT_OVERSAMPLE) -> IdentityReport:
    """[(1/2) int_0^h int |D u| D u]_0^T + (1/6) int int |D^h u|^3 = int int int_0^h D eta |D u|.

    T spans the first to the last frame.  The Delta-integrals use composite
    Gauss-Legendre panels.
    """
    _pair(u, eta)
    g = u.grid
    quad, src, m = _delta_integrals(u, eta, h, panels, oversample)
    boundary = 0.5 * (quad[-1] - quad[0])
    F, gf = upsample(u.frames, g, oversample)
    D = _diff_array(F, gf, h)
    cube = _trapezoid_t(sign_integral(D ** 3, D, gf), u.dt_rec) / 6.0
    source = _trapezoid_t(src, u.dt_rec)
    terms = {"boundary": boundary, "cubic": cube, "source": source}
    return _report("khm_integrated", terms, boundary + cube - source,
                   {"N": g.N, "dt": u.dt_rec, "h": h, "delta_nodes": m, "oversample": oversample},
                   floor=_khm_floor(u, eta))


# --------------------------------------------------------------------------
# general flux
# --------------------------------------------------------------------------


_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def _antiderivative_difference(a: Callable, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """int_lo^hi a(v) dv by 8-point Gauss-Legendre (exact for polynomials of degree <= 15)."""
    mid = 0.5 * (hi + lo)
    half = 0.5 * (hi - lo)
    out = np.zeros_like(mid)
    for x, w in zip(_GL8_X, _GL8_W):
        out += w * a(mid + half * x)
    return half * out


def _flux_polynomial(u: np.ndarray, uh: np.ndarray, a: Callable, A: Callable | None):
    """D (a(u) + a(u^h)) - 2 (A(u^h) - A(u)) and D = u^h - u."""
    D = uh - u
    dA = (A(uh) - A(u)) if A is not None else _antiderivative_difference(a, u, uh)
    return D * (a(u) + a(uh)) - 2.0 * dA, D


def flux_increment(u: np.ndarray, uh: np.ndarray, a: Callable, A: Callable | None = None) -> np.ndarray:
    """|D| (a(u) + a(u^h)) - 2 sign(D) (A(u^h) - A(u)) pointwise, D = u^h - u.

    For non-negative ``a`` this equals the form with ``|A(u^h) - A(u)|``;
    the signed form also makes the term vanish for linear fluxes.
    """
    P, D = _flux_polynomial(u, uh, a, A)
    return np.sign(D) * P


def conservation_flux(frames: np.ndarray, grid: GridSpec, a: Callable, h: float,
                      A: Callable | None = None, oversample: int = DEFAULT_OVERSAMPLE) -> np.ndarray:
    """Per-frame h-flux int flux_increment(u, u(. + h)) dx, integrated across the kinks of D^h u."""
    F, g = upsample(frames, grid, oversample)
    P, D = _flux_polynomial(F, _shift_array(F, g, h), a, A)
    return sign_integral(P, D, g)


def conservation_khm_residual(u: Trajectory, eta: Trajectory, a: Callable, h: float,
                              A: Callable | None = None, dh: float | None = None,
                              oversample: int = DEFAULT_OVERSAMPLE) -> IdentityReport:
    """KHM identity for u_t + a(u)_x = eta.

    The h-flux is ``int |D^h u| (a(u) + a(u^h)) - 2 sign(D^h u) (A(u^h) - A(u))``
    with A' = a; pass ``A`` in closed form or leave it to quadrature.  For a
    flux of polynomial degree q, ``oversample`` should exceed (q + 2) / 2.
    """
    _pair(u, eta)
    if u.n_frames < 3:
        raise ValueError("need at least 3 frames")
    g = u.grid
    dh = default_dh(g) if dh is None else dh
    F, gf = upsample(u.frames, g, oversample)
    Fe = upsample(eta.frames[1:-1], g, oversample)[0]
    D = _diff_array(F, gf, h)
    E = 0.5 * sign_integral(D * D, D, gf)
    t_term = (E[2:] - E[:-2]) / (2.0 * u.dt_rec)
    inner = u.frames[1:-1]
    h_term = (conservation_flux(inner, g, a, h + dh, A, oversample)
              - conservation_flux(inner, g, a, h - dh, A, oversample)) / (2.0 * dh)
    Dc = D[1:-1]
    src = sign_integral(_diff_array(Fe, gf, h) * Dc, Dc, gf)
    res = t_term + h_term - src
    terms = {
        "time_derivative": float(np.max(np.abs(t_term))),
        "h_derivative": float(np.max(np.abs(h_term))),
        "source": float(np.max(np.abs(src))),
    }
    return _report("conservation_khm", terms, np.max(np.abs(res)),
                   {"N": g.N, "dt": u.dt_rec, "dh": dh, "h": h, "oversample": oversample}, res,
                   floor=_khm_floor(u, eta))


# --------------------------------------------------------------------------
# interaction identity
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class InteractionFields:
    """Two balance laws A_t + B_x = C and D_t + E_x = F on one grid.

    ``C`` and ``F`` may be left as ``None``; they are then formed from the
    data by centered time differences and spectral x-derivatives.
    """

    A: Trajectory
    B: Trajectory
    D: Trajectory
    E: Trajectory
    C: Trajectory | None = None
    F: Trajectory | None = None

    def __post_init__(self):
        for name in ("B", "D", "E", "C", "F"):
            t = getattr(self, name)
            if t is None:
                continue
            _check_grids(self.A.grid, t.grid)
            if t.n_frames != self.A.n_frames:
                raise ValueError(f"{name} has {t.n_frames} frames, A has {self.A.n_frames}")

    def check_means(self, tol: float = 1e-10):
        g = self.A.grid
        for name in ("A", "D"):
            m = np.max(np.abs(_integrate_array(getattr(self, name).frames, g))) / g.L
            if m > tol:
                raise DomainError(f"{name} must have zero spatial mean (max |mean| = {m:.3e})")

    def source(self, which: str) -> np.ndarray:
        dens, flux, given = (self.A, self.B, self.C) if which == "C" else (self.D, self.E, self.F)
        if given is not None:
            return given.frames
        if dens.n_frames < 3:
            raise ValueError("at least 3 frames are needed to form sources from data")
        dt = np.gradient(dens.frames, dens.dt_rec, axis=0, edge_order=2)
        return dt + _derivative_array(flux.frames, dens.grid, 1)


def _pair_with_cumulative(a: np.ndarray, b: np.ndarray, g: GridSpec) -> np.ndarray:
    """Per frame int_0^L a(x) int_0^x b(y) dy dx, exact for band-limited data."""
    P, m = _cumulative_array(b, g)
    return _integrate_array(a * P, g) + m * _integrate_x_times_array(a, g)


def interaction_identity_residual(fields: InteractionFields) -> IdentityReport:
    """int int (AE - BD) against the cumulative-integral pairings and the time bracket."""
    fields.check_means()
    g = fields.A.grid
    dt = fields.A.dt_rec
    A, B, D, E = (t.frames for t in (fields.A, fields.B, fields.D, fields.E))
    C = fields.source("C")
    F = fields.source("F")
    lhs = _trapezoid_t(_integrate_array(A * E - B * D, g), dt)
    r1 = _trapezoid_t(_pair_with_cumulative(A, F, g), dt)
    r2 = _trapezoid_t(_pair_with_cumulative(C, D, g), dt)
    bracket = _pair_with_cumulative(A[[0, -1]], D[[0, -1]], g)
    r3 = -(bracket[1] - bracket[0])
    terms = {"lhs": lhs, "A_cumF": r1, "C_cumD": r2, "bracket": r3}
    # roundoff level of the pairings: L^2 T max|A| max(|D|, |F|) and the like
    span = max(dt * (len(A) - 1), dt)
    mags = [np.max(np.abs(a)) for a in (A, B, C, D, E, F)]
    floor = 1e-13 * g.L * max(g.L, 1.0) * max(span, 1.0) * max(mags) ** 2
    return _report("interaction", terms, lhs - (r1 + r2 + r3), {"N": g.N, "dt": dt},
                   floor=floor)


# --------------------------------------------------------------------------
# energy balance
# --------------------------------------------------------------------------


def energy_terms(traj: Trajectory):
    """Per-frame (int u^2, 2 int u_x^2, 2 int u_xx^2)."""
    g = traj.grid
    F = traj.frames
    ux = _derivative_array(F, g, 1)
    uxx = _derivative_array(F, g, 2)
    return (np.asarray(_integrate_array(F * F, g)), 2.0 * np.asarray(_integrate_array(ux * ux, g)),
            2.0 * np.asarray(_integrate_array(uxx * uxx, g)))


def energy_constants(traj: Trajectory, window: float = 1.0) -> dict:
    """Measured constants of the windowed energy bounds.

    ``c_growth`` is max over t, s in [0, window] of E(t+s)/E(t); ``c_window``
    is max over t of (int_t^{t+1} int u_xx^2 + sup_{[t,t+1]} E) / E(t).  The
    differential inequality dE/dt <= E - int u_xx^2 gives the bounds e and
    2e for a unit window.
    """
    E, _, dxx2 = energy_terms(traj)
    k = int(round(window / traj.dt_rec))
    n = traj.n_frames
    if k < 1 or n <= k:
        return {"c_growth": math.nan, "c_window": math.nan, "bound_growth": math.e,
                "bound_window": 2 * math.e}
    uxx2 = 0.5 * dxx2
    cg, cw = 0.0, 0.0
    for i in range(n - k):
        if E[i] <= 0:
            continue
        seg = E[i : i + k + 1]
        cg = max(cg, float(seg.max() / E[i]))
        cw = max(cw, (_trapezoid_t(uxx2[i : i + k + 1], traj.dt_rec) + float(seg.max())) / E[i])
    return {"c_growth": cg, "c_window": cw, "bound_growth": math.e ** window,
            "bound_window": 2 * math.e ** window}


def energy_balance_residual(run) -> IdentityReport:
    """d/dt int u^2 = 2 int u_x^2 - 2 int u_xx^2 per interior frame.

    Accepts a :class:`~ksbesov.evolution.RunResult` or a trajectory.  The
    per-frame relative residual divides by the largest of the three terms
    at that frame; the report holds its maximum.
    """
    traj = getattr(run, "trajectory", run)
    if traj.n_frames < 3:
        raise ValueError("need at least 3 frames")
    E, dx2, dxx2 = energy_terms(traj)
    dE = (E[2:] - E[:-2]) / (2.0 * traj.dt_rec)
    rhs = dx2[1:-1] - dxx2[1:-1]
    res = dE - rhs
    scale = np.maximum.reduce([np.abs(dE), dx2[1:-1], dxx2[1:-1]])
    rel = np.where(scale > 0, np.abs(res) / np.where(scale > 0, scale, 1.0), np.abs(res))
    consts = energy_constants(traj)
    terms = {"dE_dt": float(np.max(np.abs(dE))), "gradient": float(np.max(dx2)),
             "dissipation": float(np.max(dxx2))}
    return IdentityReport("energy_balance", terms, float(np.max(np.abs(res))) if len(res) else 0.0,
                          float(np.max(rel)) if len(rel) else 0.0,
                          {"N": traj.grid.N, "dt_rec": traj.dt_rec, **consts}, rel)


# --------------------------------------------------------------------------
# manufactured data
# --------------------------------------------------------------------------


def standard_manufactured(amplitude: float = 0.1, L: float = 10.0):
    """u*(t, x) = amplitude sin(2 pi x / L) cos t, the default smooth test solution."""
    k = 2.0 * np.pi / L

    def u_star(t, x):
        return amplitude * np.sin(k * x) * np.cos(t)

    return u_star


def manufactured_trajectories(u_star, grid: GridSpec, dt: float, t_end: float, t0: float = 0.0,
                              flux_derivative=None) -> tuple[Trajectory, Trajectory]:
    """Sample ``u_star`` and its inviscid forcing eta = u*_t + a'(u*) u*_x on a time grid."""
    from .evolution import manufactured_forcing

    n = int(round((t_end - t0) / dt))
    if n < 1 or abs(n * dt - (t_end - t0)) > 1e-9 * max(1.0, t_end):
        raise ValueError("t_end - t0 must be a positive multiple of dt")
    times = t0 + dt * np.arange(n + 1)
    eta = manufactured_forcing(u_star, "ForcedBurgers", grid, flux_derivative=flux_derivative)
    u = Trajectory(grid, t0, dt, np.stack([np.broadcast_to(u_star(t, grid.x), (grid.N,)) for t in times]))
    e = Trajectory(grid, t0, dt, np.stack([eta(t) for t in times]))
    return u, e
