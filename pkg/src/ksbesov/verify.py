"""Named verification suites at standard resolutions.

Each suite evaluates a group of identities or inequalities and returns a
:class:`SuiteResult` of individual checks against fixed limits.  A suite
passes when every check is within its limit and no estimate is flagged as
unresolved.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .besov import (
    BesovParams,
    HGrid,
    LPFamily,
    agmon_check,
    besov_norm_fd,
    besov_norm_lp,
    duality_bound_check,
    duality_pairing,
    interpolation_check,
    sobolev_check,
    three_scale_split,
)
from .evolution import EquationSpec, StepperConfig, integrate, random_initial_condition
from .identities import (
    InteractionFields,
    conservation_flux,
    conservation_khm_residual,
    energy_balance_residual,
    interaction_identity_residual,
    khm_integrated_residual,
    khm_modified_residual,
    khm_signed_residual,
    manufactured_trajectories,
    standard_manufactured,
)
from .kinetic import cube_identity, kinetic_profiles, kinetic_residual, q_decomposition
from .kinks import sign_integral, upsample
from .spectral import GridSpec, Trajectory, _diff_array, band_limited_noise, resample


@dataclass(frozen=True)
class Check:
    """``value`` compared with ``limit`` by ``relation`` ('<=' or '>=')."""

    name: str
    value: float
    limit: float
    relation: str = "<="
    note: str = ""

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        return self.value <= self.limit if self.relation == "<=" else self.value >= self.limit


@dataclass
class SuiteResult:
    suite: str
    checks: list = field(default_factory=list)
    flags: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and not self.flags

    def add(self, name, value, limit, relation="<=", note=""):
        self.checks.append(Check(name, float(value), float(limit), relation, note))

    def text(self) -> str:
        lines = [f"suite {self.suite}: {'PASS' if self.passed else 'FAIL'} ({self.seconds:.1f} s)"]
        for c in self.checks:
            mark = "ok  " if c.passed else "FAIL"
            note = f"  [{c.note}]" if c.note else ""
            lines.append(f"  {mark} {c.name}: {c.value:.4e} {c.relation} {c.limit:.4e}{note}")
        for f in self.flags:
            lines.append(f"  FLAG {f}")
        return "\n".join(lines)

    def rows(self):
        return [[self.suite, c.name, c.value, c.relation, c.limit, "pass" if c.passed else "fail", c.note]
                for c in self.checks] + [[self.suite, "flag", math.nan, "", math.nan, "fail", f]
                                         for f in self.flags]


ROW_HEADER = ["suite", "check", "value", "relation", "limit", "status", "note"]


def _manufactured(N: int = 256, dt: float = 1e-3, L: float = 10.0, flux_derivative=None):
    grid = GridSpec(L, N)
    return manufactured_trajectories(standard_manufactured(L=L), grid, dt, 1.0,
                                     flux_derivative=flux_derivative)


# --------------------------------------------------------------------------
# suites
# --------------------------------------------------------------------------


def suite_khm(N: int = 256, dt: float = 1e-3) -> SuiteResult:
    """Signed and modified KHM on the manufactured solution, with a dt and dh halving."""
    res = SuiteResult("khm")
    u, e = _manufactured(N, dt)
    u2, e2 = _manufactured(N, dt / 2)
    L = u.grid.L
    dh = 1e-4 * L
    for label, h in (("L/7", L / 7), ("L/3", L / 3)):
        m = khm_modified_residual(u, e, h, dh)
        s = khm_signed_residual(u, e, h, dh)
        m2 = khm_modified_residual(u2, e2, h, dh / 2)
        res.add(f"modified h={label} residual_rel", m.residual_rel, 1e-5)
        res.add(f"signed h={label} residual_rel", s.residual_rel, 1e-5)
        ratio = m.residual_abs / m2.residual_abs if m2.residual_abs > 0 else math.inf
        res.add(f"modified h={label} halving ratio", ratio, 3.5, ">=")
    return res


def suite_khm_int(N: int = 256, dt: float = 1e-3) -> SuiteResult:
    """Integrated KHM form and the general-flux identity."""
    res = SuiteResult("khm-int")
    u, e = _manufactured(N, dt)
    L = u.grid.L
    r = khm_integrated_residual(u, e, L / 5)
    res.add("integrated h=L/5 residual_rel", r.residual_rel, 1e-4)
    uq, eq = _manufactured(N, dt, flux_derivative=lambda v: v ** 3)
    c = conservation_khm_residual(uq, eq, lambda v: v ** 4 / 4.0, L / 7, A=lambda v: v ** 5 / 20.0)
    res.add("quartic flux h=L/7 residual_rel", c.residual_rel, 1e-4)
    # Burgers flux against (1/6) int |D^h u|^3, offset by offset
    frames = u.frames[:: max(1, u.n_frames // 10)]
    worst, scale = 0.0, 0.0
    for h in np.linspace(0.05, 0.95, 7) * L:
        flux = conservation_flux(frames, u.grid, lambda v: 0.5 * v * v, h, A=lambda v: v ** 3 / 6.0)
        F, gf = upsample(frames, u.grid, 4)
        D = _diff_array(F, gf, h)
        cube = sign_integral(D ** 3, D, gf) / 6.0
        worst = max(worst, float(np.max(np.abs(flux - cube))))
        scale = max(scale, float(np.max(np.abs(cube))))
    res.add("Burgers flux vs cube term (relative)", worst / scale, 1e-10)
    lin = conservation_flux(frames, u.grid, lambda v: 3.0 * v, L / 7, A=lambda v: 1.5 * v * v)
    res.add("linear flux term (absolute)", float(np.max(np.abs(lin))), 1e-14)
    return res


def interaction_fields(grid: GridSpec, dt: float, t_end: float = 1.0, degenerate: bool = True):
    """Analytic single-mode fields; C and F are left to be formed from the data."""
    k = 2.0 * np.pi / grid.L
    x = grid.x
    t = (dt * np.arange(int(round(t_end / dt)) + 1))[:, None]

    def T(a):
        return Trajectory(grid, 0.0, dt, np.broadcast_to(a, (t.shape[0], grid.N)).copy())

    if degenerate:
        A = np.sin(k * x) * np.cos(t)
        B = np.cos(2 * k * x) + 0 * t
        D = np.sin(2 * k * x) * np.sin(t)
        E = 0 * D
    else:
        A = np.sin(k * x) * np.cos(t)
        B = np.cos(k * x) + 0 * t
        D = np.cos(k * x) * np.sin(t) + np.sin(2 * k * x) * np.cos(t)
        E = np.sin(k * x) * np.cos(t)
    return InteractionFields(T(A), T(B), T(D), T(E))


def suite_interaction(N: int = 256, dt: float = 1e-3) -> SuiteResult:
    res = SuiteResult("interaction")
    g = GridSpec(10.0, N)
    for label, deg in (("orthogonal modes", True), ("coupled modes", False)):
        r = interaction_identity_residual(interaction_fields(g, dt, degenerate=deg))
        res.add(f"{label} residual_rel", r.residual_rel, 1e-6)
    return res


def suite_kinetic(N: int = 256, dt: float = 1e-3) -> SuiteResult:
    """Weak kinetic residual with a dv halving, and the cube identity."""
    res = SuiteResult("kinetic")
    u, e = _manufactured(N, dt)
    span = float(u.frames.max() - u.frames.min())
    r1 = kinetic_residual(kinetic_profiles(u, span / 256), e)
    r2 = kinetic_residual(kinetic_profiles(u, span / 512), e)
    res.add("weak residual_rel dv=range/256", r1.residual_rel, 1e-2)
    res.add("weak residual dv halving ratio", r1.residual_abs / r2.residual_abs, 1.4, ">=")
    lhs, rhs = cube_identity(1.0, 0.0, 1.0 / 512)
    res.add("cube (1,0) lhs - 1/6", abs(lhs - 1.0 / 6.0), 1e-15)
    res.add("cube (1,0) quadrature error dv=1/512", abs(rhs - lhs), 1e-3)
    _, rhs2 = cube_identity(1.0, 0.0, 1.0 / 1024)
    res.add("cube dv halving ratio", abs(rhs - lhs) / abs(rhs2 - lhs), 1.8, ">=")
    lhs, rhs = cube_identity(0.0, 2.0, 1.0 / 512)
    res.add("cube (0,2) relative error", abs(rhs - lhs) / lhs, 1e-3)
    return res


def suite_q_decomp(N: int = 256, dt: float = 1e-3, divisions: int = 256) -> SuiteResult:
    """Q = Q12 + Q3 and Q = (1/6) int int |D^h u|^3 with a dv halving."""
    res = SuiteResult("q-decomp")
    u, e = _manufactured(N, dt)
    span = float(u.frames.max() - u.frames.min())
    L = u.grid.L
    q = q_decomposition(u, e, L / 7, span / divisions, refine=True)
    res.add(f"decomposition residual_rel dv=range/{divisions}", q.decomposition.residual_rel, 1e-3)
    res.add(f"cube residual_rel dv=range/{divisions}", q.cube_check.residual_rel, 1e-3)
    ratio = q.decomposition.residual_abs / q.refined.decomposition.residual_abs
    res.add("dv halving ratio", ratio, 1.8, ">=")
    if q.flagged:
        res.flags.append("Q residual did not shrink under dv refinement (unresolved dv)")
    return res


def energy_run(L: float = 100.0, N: int = 1024, dealias: bool = True, seed: int = 1,
               t_burn: float = 200.0, t_run: float = 1.0, dt_rec: float = 0.01):
    """KS burn-in at N = 256, then a short run at resolution ``N`` recorded every ``dt_rec``."""
    coarse = GridSpec(L, 256)
    burn = integrate(EquationSpec(), random_initial_condition(coarse, seed),
                     StepperConfig(dt=0.1, record_every=int(round(t_burn / 0.1))), t_burn)
    u = resample(burn.trajectory.frame(burn.trajectory.n_frames - 1), N)
    dt = dt_rec / 25
    return integrate(EquationSpec(), u, StepperConfig(dt=dt, dealias=dealias, record_every=25), t_run)


def suite_energy(L: float = 100.0, N: int = 1024, dealias: bool = True) -> SuiteResult:
    res = SuiteResult("energy")
    run = energy_run(L, N, dealias)
    r = energy_balance_residual(run)
    res.add(f"per-frame residual_rel N={N} dealias={'on' if dealias else 'off'}", r.residual_rel, 1e-3)
    burn = integrate(EquationSpec(), random_initial_condition(GridSpec(L, 256), 2),
                     StepperConfig(dt=0.01, record_every=10), 60.0)
    tr = burn.trajectory.trimmed(20.0)
    c = energy_balance_residual(tr).resolution
    res.add("energy growth constant over unit windows", c["c_growth"], c["bound_growth"])
    res.add("windowed dissipation constant", c["c_window"], c["bound_window"])
    return res


def suite_duality(N: int = 128, L: float = 10.0, n_pairs: int = 5) -> SuiteResult:
    res = SuiteResult("duality")
    g = GridSpec(L, N)
    c = g.sample(lambda x: np.cos(2 * np.pi * x / L))
    d = duality_pairing(c, c)
    res.add("cos-cos lhs - pi", abs(d.lhs - math.pi), 1e-12)
    res.add("cos-cos h-quadrature relative error", d.rel_error, 1e-4)
    fine = HGrid.span(g, 0.0, L / 2, 64)
    worst, worst_fine = 0.0, 0.0
    for seed in range(n_pairs):
        a = band_limited_noise(g, seed)
        b = band_limited_noise(g, seed + 1000)
        worst = max(worst, duality_pairing(a, b).rel_error)
        worst_fine = max(worst_fine, duality_pairing(a, b, fine).rel_error)
    res.add("random pairs relative error", worst, 1e-4)
    res.add("random pairs relative error (refined h-grid)", worst_fine, 1e-4)
    return res


EQUIVALENCE_CASES = tuple(BesovParams(s, p, p) for s in (0.3, 0.5, 0.7) for p in (2.0, 3.0))


def equivalence_ratios(n_fields: int = 20, N: int = 128, L: float = 10.0, cases=EQUIVALENCE_CASES):
    """fd/dyadic norm ratios per case over seeded random fields."""
    g = GridSpec(L, N)
    fam = LPFamily.for_grid(g)
    fields = [band_limited_noise(g, seed) for seed in range(n_fields)]
    out = {}
    for bp in cases:
        out[bp] = np.array([besov_norm_fd(u, bp).value / besov_norm_lp(u, bp, fam).value for u in fields])
    return out


def suite_interpolation(n_fields: int = 20, N: int = 128, L: float = 10.0) -> SuiteResult:
    """Norm equivalence band, interpolation and duality bounds on random fields."""
    res = SuiteResult("interpolation")
    g = GridSpec(L, N)
    fam = LPFamily.for_grid(g)
    ratios = equivalence_ratios(n_fields, N, L)
    allr = np.concatenate(list(ratios.values()))
    c = float(max(allr.max(), 1.0 / allr.min()))
    res.add("equivalence constant c", c, math.inf, note="fd/dyadic ratios lie in [1/c, c]")
    spread = max(float(np.max(np.abs(r / np.median(r) - 1.0))) for r in ratios.values())
    res.add("per-case ratio deviation from median", spread, 0.10)
    fields = [band_limited_noise(g, seed) for seed in range(n_fields)]
    worst_interp, worst_dual = -math.inf, -math.inf
    b1, b2 = BesovParams(0.3, 2.0, 2.0), BesovParams(0.7, 3.0, 3.0)
    for i, u in enumerate(fields):
        for theta in (0.25, 0.5, 0.75):
            rep = interpolation_check(u, b1, b2, theta, fam)
            worst_interp = max(worst_interp, rep.lhs - rep.rhs)
        v = fields[(i + 1) % len(fields)]
        for bp in EQUIVALENCE_CASES:
            rep = duality_bound_check(u, v, bp)
            worst_dual = max(worst_dual, rep.lhs - rep.rhs)
    res.add("interpolation max(lhs - rhs)", worst_interp, 1e-6)
    res.add("duality bound max(lhs - rhs)", worst_dual, 1e-6)
    return res


def ks_trajectory(L: float = 50.0, N: int = 128, seed: int = 3, t_burn: float = 200.0,
                  t_avg: float = 50.0, dt_rec: float = 1.0) -> Trajectory:
    grid = GridSpec(L, N)
    burn = integrate(EquationSpec(), random_initial_condition(grid, seed),
                     StepperConfig(dt=0.1, record_every=int(round(t_burn / 0.1))), t_burn)
    u = burn.trajectory.frame(burn.trajectory.n_frames - 1)
    run = integrate(EquationSpec(), u, StepperConfig(dt=0.1, record_every=int(round(dt_rec / 0.1))),
                    t_avg, t0=t_burn)
    return run.trajectory


def suite_three_scale(L: float = 50.0, N: int = 128) -> SuiteResult:
    res = SuiteResult("three-scale")
    traj = ks_trajectory(L, N)
    worst_rec, worst_c, worst_b = 0.0, -math.inf, -math.inf
    for ell in (1.0, 4.0, L / 4, 0.75 * L):
        ts = three_scale_split(traj, ell)
        worst_rec = max(worst_rec, ts.reconstruction_error)
        worst_c = max(worst_c, ts.C / ((math.pi ** 2 / 6.0) * (ts.A + ts.B)))
        worst_b = max(worst_b, ts.B / (math.log(L / ell) * ts.sup_ratio))
    res.add("A+B+C reconstruction relative error", worst_rec, 1e-4)
    res.add("C / ((pi^2/6)(A+B))", worst_c, 1.0)
    res.add("B / (ln(L/l) sup-norm^3)", worst_b, 1.0)
    agmon = max(lhs - rhs for lhs, rhs in (agmon_check(f) for f in traj))
    sob = max(lhs - rhs for lhs, rhs in (sobolev_check(f) for f in traj))
    res.add("Agmon max(lhs - rhs)", agmon, 1e-10)
    res.add("Sobolev max(lhs - rhs)", sob, 1e-10)
    return res


SUITES = {
    "khm": suite_khm,
    "khm-int": suite_khm_int,
    "interaction": suite_interaction,
    "kinetic": suite_kinetic,
    "q-decomp": suite_q_decomp,
    "energy": suite_energy,
    "duality": suite_duality,
    "interpolation": suite_interpolation,
    "three-scale": suite_three_scale,
}


def run_suite(name: str, **options) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    start = time.perf_counter()
    res = SUITES[name](**options)
    res.seconds = time.perf_counter() - start
    return res
