"""Kinetic formulation of forced Burgers: f(t, x, v) = 1 if v <= u(t, x) else 0.

For smooth solutions of u_t + u u_x = eta the indicator obeys the linear
transport equation f_t + v f_x = -eta f_v.  Since f jumps in v, every
v-integral of f against a smooth weight psi reduces to a cumulative sum of
psi over the cells below u; the helpers here work with the per-point cell
counts ``n(x) = #{i : v_i <= u(x)}`` and never form f explicitly except in
:class:`KineticProfile`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .identities import IdentityReport, _delta_integrals, _pair, _report, _trapezoid_t
from .spectral import GridSpec, RealField, Trajectory, _derivative_array, _integrate_array, _shift_array

V_PAD = 3


@dataclass(frozen=True)
class VGrid:
    """Uniform v samples v_i = v_min + i dv, i = 0..M-1."""

    v_min: float
    dv: float
    M: int

    @property
    def v(self) -> np.ndarray:
        return self.v_min + self.dv * np.arange(self.M)

    @classmethod
    def spanning(cls, lo: float, hi: float, dv: float) -> "VGrid":
        """Grid over [lo - 3 dv, hi + 3 dv]; a constant field gets 3 cells around it."""
        if not dv > 0:
            raise ValueError("dv must be positive")
        if hi - lo <= 0.0:
            return cls(lo - dv, dv, 3)
        v_min = lo - V_PAD * dv
        M = int(np.ceil((hi + V_PAD * dv - v_min) / dv)) + 1
        return cls(v_min, dv, M)

    def counts(self, u: np.ndarray) -> np.ndarray:
        """n(u) = number of samples v_i <= u, clipped to [0, M]."""
        n = np.floor((np.asarray(u, dtype=float) - self.v_min) / self.dv).astype(np.int64) + 1
        return np.clip(n, 0, self.M)


@dataclass(frozen=True)
class KineticProfile:
    """Bit-packed indicator f(x_j, v_i) of one frame.

    ``bits`` packs the boolean array of shape (N, M) along v.
    """

    grid: GridSpec
    vgrid: VGrid
    bits: np.ndarray = field(repr=False)
    u_ref: np.ndarray = field(repr=False)

    @property
    def v_grid(self) -> np.ndarray:
        return self.vgrid.v

    @property
    def data(self) -> np.ndarray:
        return np.unpackbits(self.bits, axis=1, count=self.vgrid.M).astype(bool)

    def counts(self) -> np.ndarray:
        """Number of occupied cells per x (f is a step in v, so this fixes f)."""
        return np.unpackbits(self.bits, axis=1, count=self.vgrid.M).sum(axis=1)

    def reconstruct(self) -> np.ndarray:
        """dv * sum_i f(x, v_i) + v_min - dv, equal to u up to one cell."""
        return self.vgrid.v_min + self.vgrid.dv * (self.counts() - 1)

    def is_monotone(self) -> bool:
        d = self.data
        return bool(np.all(d[:, 1:] <= d[:, :-1]))


def _field_values(u) -> tuple[GridSpec, np.ndarray]:
    if isinstance(u, RealField):
        return u.grid, u.samples
    raise TypeError("expected a RealField")


def kinetic_profile(u: RealField, dv: float, vgrid: VGrid | None = None) -> KineticProfile:
    """Indicator profile of one frame on a v-grid spanning its range (or ``vgrid``)."""
    grid, vals = _field_values(u)
    if vgrid is None:
        vgrid = VGrid.spanning(float(vals.min()), float(vals.max()), dv)
    f = vgrid.v[None, :] <= vals[:, None]
    return KineticProfile(grid, vgrid, np.packbits(f, axis=1), vals.copy())


def kinetic_profiles(traj: Trajectory, dv: float) -> list[KineticProfile]:
    """Profiles of every frame on one common v-grid."""
    vg = VGrid.spanning(float(traj.frames.min()), float(traj.frames.max()), dv)
    return [kinetic_profile(fr, dv, vg) for fr in traj]


def _bump(v: np.ndarray, c: float, w: float):
    """C-infinity bump exp(-1 / (1 - z^2)) on |z| < 1, z = (v - c) / w, and its v-derivative."""
    z = (v - c) / w
    inside = np.abs(z) < 1.0
    psi = np.zeros_like(v)
    dpsi = np.zeros_like(v)
    zi = z[inside]
    e = np.exp(-1.0 / (1.0 - zi * zi))
    psi[inside] = e
    dpsi[inside] = e * (-2.0 * zi / (1.0 - zi * zi) ** 2) / w
    return psi, dpsi


def _cell_sums(weights: np.ndarray, dv: float) -> np.ndarray:
    """G[k] = dv * sum_{i<k} weights[i], k = 0..M."""
    return dv * np.concatenate([[0.0], np.cumsum(weights)])


def kinetic_residual(profiles, eta: Trajectory, n_bumps: int = 4, n_modes: int = 2) -> IdentityReport:
    """Weak residual of f_t + v f_x = -eta f_v over [first frame, last frame].

    Against psi(v) phi(x) with C-infinity bumps psi supported inside the
    sampled v-range (f = 1 below it) and phi in {1, cos, sin}
    of the first ``n_modes`` wavenumbers:

        [int int f psi phi]_0^T - int int int v f psi phi_x - int int int eta f psi' phi = 0.

    ``profiles`` is a sequence of :class:`KineticProfile` on a common v-grid,
    one per frame of ``eta``.  Time integrals use the trapezoid rule.
    """
    profiles = list(profiles)
    if len(profiles) != eta.n_frames:
        raise ValueError("one profile per eta frame is required")
    vg = profiles[0].vgrid
    if any(p.vgrid != vg for p in profiles):
        raise ValueError("profiles must share one v-grid")
    g = eta.grid
    counts = np.stack([p.counts() for p in profiles])
    v = vg.v
    # bumps live inside the padded range; a constant state has no padding
    pad = V_PAD if vg.M > 2 * V_PAD + 1 else 0
    lo, hi = v[pad], v[-1 - pad]
    width = max(hi - lo, vg.dv) / (n_bumps + 1)
    centers = lo + width * np.arange(1, n_bumps + 1)
    x = g.x
    xs = [(np.ones(g.N), np.zeros(g.N))]
    for m in range(1, n_modes + 1):
        k = 2.0 * np.pi * m / g.L
        xs += [(np.cos(k * x), -k * np.sin(k * x)), (np.sin(k * x), k * np.cos(k * x))]
    worst = np.zeros(4)
    res_max, scale = 0.0, 0.0
    for c in centers:
        psi, dpsi = _bump(v, c, width)
        Fpsi = _cell_sums(psi, vg.dv)[counts]
        Fvpsi = _cell_sums(v * psi, vg.dv)[counts]
        Fdpsi = _cell_sums(dpsi, vg.dv)[counts]
        for phi, dphi in xs:
            bnd = _integrate_array(Fpsi[[0, -1]] * phi, g)
            boundary = bnd[1] - bnd[0]
            transport = _trapezoid_t(_integrate_array(Fvpsi * dphi, g), eta.dt_rec)
            source = _trapezoid_t(_integrate_array(eta.frames * Fdpsi * phi, g), eta.dt_rec)
            r = boundary - transport - source
            mags = np.abs([boundary, transport, source, r])
            if abs(r) >= res_max:
                res_max, worst = abs(r), mags
            scale = max(scale, mags[:3].max())
    terms = {"boundary": worst[0], "transport": worst[1], "source": worst[2]}
    floor = 1e-13 * g.L * max(1.0, float(np.abs(v).max())) ** 2
    rep = _report("kinetic_weak", terms, res_max,
                  {"N": g.N, "dt": eta.dt_rec, "dv": vg.dv, "M": vg.M,
                   "n_tests": n_bumps * len(xs)}, floor=floor)
    # relative to the largest term over the whole test set
    rel = res_max / scale if scale > floor else res_max
    return IdentityReport(rep.name, rep.terms, rep.residual_abs, rel, rep.resolution)


def cube_identity(u: float, ubar: float, dv: float) -> tuple[float, float]:
    """(|u - ubar|^3 / 6, v-quadrature of the double integral with M_u - M_ubar).

    The right side sums (v_i - v_j) chi_i chi_j dv^2 over i > j with
    chi = 1{v <= u} - 1{v <= ubar} on the grid spanning both values.
    """
    lhs = abs(u - ubar) ** 3 / 6.0
    vg = VGrid.spanning(min(u, ubar), max(u, ubar), dv)
    v = vg.v
    chi = (v <= u).astype(float) - (v <= ubar).astype(float)
    # sum_i chi_i (v_i C_i - S_i) with C, S the exclusive cumulative sums
    C = np.cumsum(chi) - chi
    S = np.cumsum(chi * v) - chi * v
    rhs = dv * dv * float(np.sum(chi * (v * C - S)))
    return lhs, rhs


def wedge_integral(a, b):
    """int_{min(a, b)}^{b} (a - v) dv = -(1/2) min(a - b, 0)^2."""
    d = np.minimum(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), 0.0)
    return -0.5 * d * d


@dataclass(frozen=True)
class QDecomposition:
    """Kinetic Q(h) against its decomposition and the cubic increment integral.

    ``Q`` is the 4-fold kinetic sum, ``Q12`` the source part
    int int int_0^h D eta |D u|, ``Q3`` the time bracket
    -[(1/2) int_0^h int |D u| D u], and ``cube`` = (1/6) int int |D^h u|^3.
    """

    Q: float
    Q12: float
    Q3: float
    cube: float
    dv: float
    decomposition: IdentityReport
    cube_check: IdentityReport
    refined: "QDecomposition | None" = None

    @property
    def residual(self) -> float:
        return self.decomposition.residual_abs

    @property
    def flagged(self) -> bool:
        """True when halving dv did not reduce the decomposition residual."""
        if self.refined is None:
            return False
        return self.refined.decomposition.residual_abs >= self.decomposition.residual_abs


def kinetic_q(u: Trajectory, h: float, dv: float) -> float:
    """Q(h) = int int int int 1{v > w} (v - w) D^h f(v) D^h f(w) dv dw dx dt.

    On the v-grid D^h f(t, x, .) is +-1 on K = |n(u^h) - n(u)| consecutive
    cells, so the double v-sum is dv^3 (K^3 - K) / 6 exactly.
    """
    g = u.grid
    vg = VGrid.spanning(float(u.frames.min()), float(u.frames.max()), dv)
    uh = _shift_array(u.frames, g, h)
    K = np.abs(vg.counts(uh) - vg.counts(u.frames)).astype(float)
    per_point = dv ** 3 * (K ** 3 - K) / 6.0
    return _trapezoid_t(_integrate_array(per_point, g), u.dt_rec)


def q_decomposition(u: Trajectory, eta: Trajectory, h: float, dv: float,
                    refine: bool = False, panels: int | None = None) -> QDecomposition:
    """Check Q = Q12 + Q3 and Q = (1/6) int int |D^h u|^3.

    Q is the kinetic sum of :func:`kinetic_q`; the other parts are evaluated
    from u and eta directly.  With ``refine`` the check is repeated at dv / 2
    and :attr:`QDecomposition.flagged` reports a residual that did not shrink.
    """
    from .identities import DEFAULT_OVERSAMPLE, _khm_floor
    from .kinks import sign_integral, upsample
    from .spectral import _diff_array

    _pair(u, eta)
    quad, src, m = _delta_integrals(u, eta, h, panels)
    Q12 = _trapezoid_t(src, u.dt_rec)
    Q3 = -0.5 * (quad[1] - quad[0])
    F, gf = upsample(u.frames, u.grid, DEFAULT_OVERSAMPLE)
    D = _diff_array(F, gf, h)
    cube = _trapezoid_t(sign_integral(D ** 3, D, gf), u.dt_rec) / 6.0
    floor = _khm_floor(u, eta)

    def build(step: float) -> QDecomposition:
        Q = kinetic_q(u, h, step)
        res = {"N": u.grid.N, "dt": u.dt_rec, "dv": step, "h": h, "delta_nodes": m}
        dec = _report("q_decomposition", {"Q": Q, "Q12": Q12, "Q3": Q3}, Q - (Q12 + Q3), res,
                      floor=floor)
        cub = _report("q_cube", {"Q": Q, "cube": cube}, Q - cube, res, floor=floor)
        return QDecomposition(Q, Q12, Q3, cube, step, dec, cub)

    out = build(dv)
    if refine:
        fine = build(0.5 * dv)
        out = QDecomposition(out.Q, out.Q12, out.Q3, out.cube, dv, out.decomposition,
                             out.cube_check, fine)
    return out
