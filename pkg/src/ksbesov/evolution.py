"""Time integration of Kuramoto-Sivashinsky and Burgers-type equations.

Three equations are supported, all written as
``d/dt u_hat = lambda(xi) u_hat + N(u, t)_hat``:

* ``KS``:               u_t + u u_x + u_xx + u_xxxx = 0
* ``CapillaryBurgers``: u_t + u u_x + u_xxxx = |d_x| g
* ``ForcedBurgers``:    u_t + u u_x = eps u_xx + |d_x| g + |d_x| xi

The transport term is advanced in conservative form d_x(u^2/2) with
optional 2/3-rule truncation of the product.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Literal, Optional

import numpy as np

from .spectral import (
    GridSpec,
    RealField,
    Trajectory,
    _derivative_array,
    _halfwave_array,
    _integrate_array,
    _irfft,
    _rfft,
    band_limited_noise,
)

log = logging.getLogger(__name__)

EquationKind = Literal["KS", "CapillaryBurgers", "ForcedBurgers"]
_KINDS = ("KS", "CapillaryBurgers", "ForcedBurgers")

DIVERGENCE_THRESHOLD = 1e8
MAX_STIFFNESS = 500.0
DEFAULT_T_BURN = 200.0


class ConfigurationError(ValueError):
    """Solver configuration cannot produce a meaningful run."""


class ConfigurationWarning(UserWarning):
    pass


class DivergenceError(RuntimeError):
    """The solution blew up; ``time`` records when it was detected."""

    def __init__(self, time: float, max_abs: float):
        super().__init__(f"solution diverged at t={time:.6g} (max|u| = {max_abs:.3g})")
        self.time = time
        self.max_abs = max_abs


ForcingFn = Callable[[float], "np.ndarray | RealField"]


@dataclass(frozen=True)
class EquationSpec:
    kind: EquationKind = "KS"
    viscosity: float = 0.0
    forcing_g: Optional[ForcingFn] = None
    forcing_xi: Optional[ForcingFn] = None
    linear_only: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown equation kind {self.kind!r}")
        if self.kind == "KS" and (self.forcing_g is not None or self.forcing_xi is not None):
            raise ValueError("the KS equation takes no forcing")
        if self.kind == "CapillaryBurgers" and self.forcing_xi is not None:
            raise ValueError("capillary Burgers carries g only")
        if self.viscosity < 0:
            raise ValueError("viscosity must be >= 0")
        if self.viscosity and self.kind != "ForcedBurgers":
            raise ValueError("viscosity applies to ForcedBurgers only")


@dataclass(frozen=True)
class StepperConfig:
    scheme: Literal["ETDRK4", "IMEX"] = "ETDRK4"
    dt: float = 0.05
    dealias: bool = True
    record_every: int = 1

    def __post_init__(self):
        if self.scheme not in ("ETDRK4", "IMEX"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")

    @property
    def dt_rec(self) -> float:
        return self.dt * self.record_every


@dataclass(frozen=True, eq=False)
class RunResult:
    trajectory: Trajectory
    energy_series: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def linear_symbol(spec: EquationSpec, grid: GridSpec) -> np.ndarray:
    """Per-mode growth rates for the ``rfft`` modes of ``grid``.

    KS: xi^2 - xi^4;  capillary Burgers: -xi^4;  forced Burgers: -eps xi^2.
    """
    xi = grid.xi_rfft
    if spec.kind == "KS":
        sym = xi**2 - xi**4
    elif spec.kind == "CapillaryBurgers":
        sym = -(xi**4)
    else:
        sym = -spec.viscosity * xi**2
    return sym.astype(complex)


def random_initial_condition(grid: GridSpec, seed) -> RealField:
    """Seeded noise on modes 1..N/8 with amplitude 0.1 / n."""
    return band_limited_noise(grid, seed, n_max=grid.N // 8, amplitude=0.1, decay=1.0)


def _as_samples(value, grid: GridSpec) -> np.ndarray:
    if isinstance(value, RealField):
        return value.samples
    a = np.asarray(value, dtype=float)
    return np.broadcast_to(a, (grid.N,))


class _Rhs:
    """Nonlinear/forcing part N(v, t) in coefficient space."""

    def __init__(self, spec: EquationSpec, grid: GridSpec, dealias: bool):
        self.spec = spec
        self.grid = grid
        n = grid.n_rfft
        self.ik_half = -0.5j * grid.xi_rfft
        self.ik_half[-1] = 0.0
        self.mask = (n < grid.N / 3.0) if dealias else np.ones(n.shape, dtype=bool)
        self.abs_xi = np.abs(grid.xi_rfft)
        self.last_max = 0.0

    def __call__(self, v: np.ndarray, t: float) -> np.ndarray:
        N = self.grid.N
        u = _irfft(v, N)
        self.last_max = float(np.max(np.abs(u))) if np.all(np.isfinite(u)) else math.inf
        out = np.zeros_like(v)
        if not self.spec.linear_only:
            out += self.ik_half * (_rfft(u * u) * self.mask)
        forcing = None
        for fn in (self.spec.forcing_g, self.spec.forcing_xi):
            if fn is not None:
                f = _as_samples(fn(t), self.grid)
                forcing = f if forcing is None else forcing + f
        if forcing is not None:
            out += self.abs_xi * _rfft(forcing)
        return out


def _phi_coefficients(z: np.ndarray, dt: float, n_contour: int = 32):
    """ETDRK4 coefficients via contour averages of the phi-functions."""
    r = np.exp(2j * np.pi * (np.arange(1, n_contour + 1) - 0.5) / n_contour)
    lr = z[:, None] + r[None, :]
    e = np.exp(lr)
    q = dt * np.mean((np.exp(lr / 2) - 1.0) / lr, axis=1)
    f1 = dt * np.mean((-4.0 - lr + e * (4.0 - 3.0 * lr + lr**2)) / lr**3, axis=1)
    f2 = dt * np.mean((2.0 + lr + e * (lr - 2.0)) / lr**3, axis=1)
    f3 = dt * np.mean((-4.0 - 3.0 * lr - lr**2 + e * (4.0 - lr)) / lr**3, axis=1)
    return q.real, f1.real, f2.real, f3.real


def _stepper(spec: EquationSpec, grid: GridSpec, cfg: StepperConfig, rhs: _Rhs):
    lam = linear_symbol(spec, grid).real
    dt = cfg.dt
    if cfg.scheme == "ETDRK4":
        stiffness = dt * float(np.max(np.abs(lam)))
        if stiffness > MAX_STIFFNESS:
            raise ConfigurationError(
                f"dt * max|symbol| = {stiffness:.4g} exceeds {MAX_STIFFNESS:g}; reduce dt or N"
            )
        E = np.exp(dt * lam)
        E2 = np.exp(dt * lam / 2)
        Q, f1, f2, f3 = _phi_coefficients(dt * lam, dt)

        def step(v, t):
            Nv = rhs(v, t)
            a = E2 * v + Q * Nv
            Na = rhs(a, t + dt / 2)
            b = E2 * v + Q * Na
            Nb = rhs(b, t + dt / 2)
            c = E2 * a + Q * (2.0 * Nb - Nv)
            Nc = rhs(c, t + dt)
            return E * v + Nv * f1 + 2.0 * (Na + Nb) * f2 + Nc * f3

        return step

    # Crank-Nicolson / Adams-Bashforth 2, Heun start
    plus = 1.0 + 0.5 * dt * lam
    minus = 1.0 - 0.5 * dt * lam
    history = {}

    def step(v, t):
        Nv = rhs(v, t)
        prev = history.get("N")
        if prev is None:
            vs = (plus * v + dt * Nv) / minus
            new = (plus * v + 0.5 * dt * (Nv + rhs(vs, t + dt))) / minus
        else:
            new = (plus * v + dt * (1.5 * Nv - 0.5 * prev)) / minus
        history["N"] = Nv
        return new

    return step


def integrate(spec: EquationSpec, u0: RealField, cfg: StepperConfig, t_end: float,
              t0: float = 0.0, enforce_zero_mean: bool = True) -> RunResult:
    """Integrate from ``u0`` at ``t0`` to ``t0 + t_end``.

    Frames are recorded every ``cfg.record_every`` steps, starting with the
    initial condition.  For KS the mean of ``u0`` is projected out unless
    ``enforce_zero_mean`` is False.  Raises :class:`DivergenceError` when
    max|u| exceeds 1e8.
    """
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    n_steps = int(round(t_end / cfg.dt))
    if n_steps < 1 or abs(n_steps * cfg.dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ConfigurationError(f"t_end={t_end} is not a multiple of dt={cfg.dt}")
    grid = u0.grid
    v = _rfft(u0.samples).astype(complex)
    zero_mean = spec.kind == "KS" and enforce_zero_mean
    if zero_mean:
        v[0] = 0.0
    rhs = _Rhs(spec, grid, cfg.dealias)
    step = _stepper(spec, grid, cfg, rhs)

    frames = [_irfft(v, grid.N)]
    t = t0
    for k in range(1, n_steps + 1):
        v = step(v, t)
        if zero_mean:
            v[0] = 0.0
        t = t0 + k * cfg.dt
        if not math.isfinite(rhs.last_max) or rhs.last_max > DIVERGENCE_THRESHOLD:
            raise DivergenceError(t, rhs.last_max)
        if k % cfg.record_every == 0:
            u = _irfft(v, grid.N)
            m = float(np.max(np.abs(u)))
            if not math.isfinite(m) or m > DIVERGENCE_THRESHOLD:
                raise DivergenceError(t, m)
            frames.append(u)

    traj = Trajectory(grid, t0, cfg.dt_rec, np.stack(frames))
    return RunResult(traj, energy_series(traj), _diagnostics(traj))


def energy_series(traj: Trajectory) -> np.ndarray:
    """int_0^L u^2 dx for every frame."""
    return np.asarray(_integrate_array(traj.frames**2, traj.grid), dtype=float)


def _diagnostics(traj: Trajectory) -> dict:
    c = np.abs(_rfft(traj.frames))
    N = traj.grid.N
    top = max(1, int(0.1 * (N // 2)))
    overall = float(np.max(c[:, 1:])) if c.shape[1] > 1 else 0.0
    near = float(np.max(c[:, -top - 1 :]))
    return {
        "max_mode": overall,
        "max_near_nyquist": near,
        "resolution_ratio": near / overall if overall > 0 else 0.0,
    }


# --------------------------------------------------------------------------
# manufactured solutions
# --------------------------------------------------------------------------


def _complex_step_dt(u_star, t: float, x: np.ndarray) -> np.ndarray:
    hstep = 1e-30
    val = u_star(t + 1j * hstep, x)
    return np.imag(val) / hstep


def _fd_dt(u_star, t: float, x: np.ndarray) -> np.ndarray:
    h = 1e-3
    return (-u_star(t + 2 * h, x) + 8 * u_star(t + h, x) - 8 * u_star(t - h, x)
            + u_star(t - 2 * h, x)) / (12 * h)


def manufactured_forcing(u_star, kind: EquationKind, grid: GridSpec, viscosity: float = 0.0,
                         dudt=None, flux_derivative=None):
    """Forcing eta(t) for which ``u_star(t, x)`` solves u_t + (flux)_x = eta (+ linear terms).

    Returns a callable ``eta(t) -> ndarray`` of samples on ``grid``:

    * ``ForcedBurgers``:    eta = u*_t + u* u*_x - eps u*_xx
    * ``CapillaryBurgers``: eta = u*_t + u* u*_x + u*_xxxx
    * ``KS``:               eta = u*_t + u* u*_x + u*_xx + u*_xxxx

    ``dudt(t, x)`` may be supplied; otherwise the time derivative is taken
    by a complex step (falling back to a 4th-order difference when
    ``u_star`` does not accept complex time).  ``flux_derivative`` replaces
    u -> a'(u) in the transport term for general conservation laws.
    """
    x = grid.x
    if dudt is None:
        try:
            test = u_star(0.0 + 1e-30j, x)
            use_cs = np.iscomplexobj(test)
        except (TypeError, ValueError):
            use_cs = False
        dudt = (lambda t, xx: _complex_step_dt(u_star, t, xx)) if use_cs else (
            lambda t, xx: _fd_dt(u_star, t, xx))
    speed = flux_derivative if flux_derivative is not None else (lambda u: u)

    def eta(t: float) -> np.ndarray:
        u = np.real(np.broadcast_to(u_star(t, x), (grid.N,))).astype(float)
        out = np.asarray(dudt(t, x), dtype=float) + speed(u) * _derivative_array(u, grid, 1)
        if kind == "ForcedBurgers" and viscosity:
            out = out - viscosity * _derivative_array(u, grid, 2)
        if kind in ("CapillaryBurgers", "KS"):
            out = out + _derivative_array(u, grid, 4)
        if kind == "KS":
            out = out + _derivative_array(u, grid, 2)
        return out

    return eta


def forcing_xi_from_eta(eta, grid: GridSpec) -> Callable[[float], np.ndarray]:
    """xi(t) = |d_x|^{-1} eta(t), so that |d_x| xi reproduces the zero-mean part of eta."""

    def xi(t: float) -> np.ndarray:
        return _halfwave_array(np.asarray(eta(t), dtype=float), grid, -1.0)

    return xi


# --------------------------------------------------------------------------
# vanishing viscosity
# --------------------------------------------------------------------------


def vanishing_viscosity_run(u0: RealField, eps_list, cfg: StepperConfig, t_end: float,
                            forcing_g=None, forcing_xi=None) -> list[tuple[float, RunResult]]:
    """Viscous Burgers runs u_t + u u_x = eps u_xx for each eps, largest first.

    ``eps_list`` must be positive and strictly decreasing.  Values with
    eps < 4 dx max|u0| under-resolve the viscous layer; they are skipped
    with a :class:`ConfigurationWarning`.
    """
    eps = [float(e) for e in eps_list]
    if not eps or any(e <= 0 for e in eps):
        raise ValueError("viscosities must be positive")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("viscosities must be strictly decreasing")
    floor = 4.0 * u0.grid.dx * float(np.max(np.abs(u0.samples)))
    out = []
    for e in eps:
        if e < floor:
            warnings.warn(
                f"eps={e:g} below 4*dx*max|u0|={floor:g}: viscous layer unresolved, skipped",
                ConfigurationWarning,
                stacklevel=2,
            )
            continue
        spec = EquationSpec("ForcedBurgers", viscosity=e, forcing_g=forcing_g, forcing_xi=forcing_xi)
        out.append((e, integrate(spec, u0, cfg, t_end)))
    return out
