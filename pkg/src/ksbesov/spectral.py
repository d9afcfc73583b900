"""Periodic grids, Fourier transforms and exact spectral operators.

Fourier coefficients follow the normalization

    F(u)(xi_n) = (1/L) * int_0^L exp(-i xi_n x) u(x) dx,   xi_n = 2 pi n / L,

evaluated on the collocation points x_j = j L / N, i.e.
``u_hat_n = (1/N) sum_j exp(-i xi_n x_j) u_j``.  With this convention
``u(x) = sum_n u_hat_n exp(i xi_n x)`` and ``int_0^L |u|^2 = L sum_n |u_hat_n|^2``.

Most operators come in two flavours: a public function acting on
:class:`RealField` objects, and a private ``_*_array`` helper acting on the
last axis of a plain ndarray so that whole trajectories can be processed at
once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np


class GridMismatchError(ValueError):
    """Two fields that must live on the same grid do not."""


class DomainError(ValueError):
    """An operator was applied outside its mathematical domain."""


# --------------------------------------------------------------------------
# compensated reductions
# --------------------------------------------------------------------------


def fsum(a, axis: int | None = None):
    """Correctly rounded sum (``math.fsum``) along ``axis``.

    Reductions go through here so that identity residuals are not polluted
    by summation order.  With ``axis=None`` the whole array is summed.
    """
    a = np.asarray(a, dtype=float)
    if axis is None:
        return math.fsum(a.ravel())
    a = np.moveaxis(a, axis, -1)
    lead = a.shape[:-1]
    flat = a.reshape(-1, a.shape[-1])
    out = np.fromiter(map(math.fsum, flat), dtype=float, count=flat.shape[0])
    return out.reshape(lead)


# --------------------------------------------------------------------------
# grid and field types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, L) with N collocation points."""

    L: float
    N: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"domain length must be positive, got L={self.L}")
        if int(self.N) != self.N or self.N < 8 or self.N % 2:
            raise ValueError(f"N must be an even integer >= 8, got N={self.N}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "L", float(self.L))

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) * (self.L / self.N)

    @property
    def n_rfft(self) -> np.ndarray:
        """Mode indices 0..N/2 in ``rfft`` order."""
        return np.arange(self.N // 2 + 1)

    @property
    def xi_rfft(self) -> np.ndarray:
        """Wavenumbers 2 pi n / L for the ``rfft`` modes."""
        return 2.0 * np.pi * self.n_rfft / self.L

    @property
    def n_full(self) -> np.ndarray:
        """Mode indices in full ``fft`` order (0, 1, ..., N/2-1, -N/2, ..., -1)."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N).astype(int)

    @property
    def xi_full(self) -> np.ndarray:
        return 2.0 * np.pi * self.n_full / self.L

    def sample(self, func) -> "RealField":
        """Evaluate ``func(x)`` on the collocation points."""
        return RealField(self, func(self.x))


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RealField:
    """Real samples u(x_j) of an L-periodic function."""

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        s = _readonly(self.samples)
        if s.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} samples, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("field samples must be finite")
        object.__setattr__(self, "samples", s)

    def __add__(self, other):
        if isinstance(other, RealField):
            _check_grids(self.grid, other.grid)
            return RealField(self.grid, self.samples + other.samples)
        return RealField(self.grid, self.samples + other)

    def __sub__(self, other):
        if isinstance(other, RealField):
            _check_grids(self.grid, other.grid)
            return RealField(self.grid, self.samples - other.samples)
        return RealField(self.grid, self.samples - other)

    def __mul__(self, c):
        if isinstance(c, RealField):
            _check_grids(self.grid, c.grid)
            return RealField(self.grid, self.samples * c.samples)
        return RealField(self.grid, self.samples * c)

    __rmul__ = __mul__

    def __neg__(self):
        return RealField(self.grid, -self.samples)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a field, stored in full ``fft`` order.

    ``modes[k]`` is the coefficient of mode ``grid.n_full[k]``; use
    :meth:`mode` to look one up by its signed index n in -N/2..N/2-1.
    """

    grid: GridSpec
    modes: np.ndarray

    def __post_init__(self):
        m = np.array(self.modes, dtype=complex)
        if m.shape != (self.grid.N,):
            raise ValueError(f"expected {self.grid.N} modes, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "modes", m)

    def mode(self, n: int) -> complex:
        N = self.grid.N
        if not -N // 2 <= n < N // 2:
            raise IndexError(f"mode {n} outside -N/2..N/2-1")
        return complex(self.modes[n % N])

    @property
    def wavenumbers(self) -> np.ndarray:
        return self.grid.xi_full

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        m = self.modes
        scale = max(float(np.max(np.abs(m))), 1.0)
        return bool(np.max(np.abs(m - np.conj(m[-np.arange(len(m)) % len(m)]))) <= tol * scale)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered frames u(t0 + k dt_rec, x_j) on one grid.

    ``frames`` has shape (n_frames, N).
    """

    grid: GridSpec
    t0: float
    dt_rec: float
    frames: np.ndarray

    def __post_init__(self):
        f = _readonly(self.frames)
        if f.ndim == 1:
            f = _readonly(f[None, :])
        if f.ndim != 2 or f.shape[1] != self.grid.N:
            raise ValueError(f"frames must have shape (n, {self.grid.N}), got {f.shape}")
        if f.shape[0] < 1:
            raise ValueError("a trajectory needs at least one frame")
        if not self.dt_rec > 0:
            raise ValueError(f"dt_rec must be positive, got {self.dt_rec}")
        if not np.all(np.isfinite(f)):
            raise ValueError("trajectory frames must be finite")
        object.__setattr__(self, "frames", f)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt_rec", float(self.dt_rec))

    @classmethod
    def from_fields(cls, fields, t0: float = 0.0, dt_rec: float = 1.0) -> "Trajectory":
        fields = list(fields)
        grid = fields[0].grid
        for f in fields[1:]:
            _check_grids(grid, f.grid)
        return cls(grid, t0, dt_rec, np.stack([f.samples for f in fields]))

    @classmethod
    def sample(cls, grid: GridSpec, func, times) -> "Trajectory":
        """Tabulate ``func(t, x)`` at uniformly spaced ``times``."""
        times = np.asarray(times, dtype=float)
        if times.size > 1:
            dt = float(times[1] - times[0])
        else:
            dt = 1.0
        frames = np.stack([np.broadcast_to(func(t, grid.x), (grid.N,)) for t in times])
        return cls(grid, float(times[0]), dt, frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt_rec * np.arange(self.n_frames)

    @property
    def duration(self) -> float:
        """Total time weight T = n_frames * dt_rec used by time-space norms."""
        return self.n_frames * self.dt_rec

    def frame(self, k: int) -> RealField:
        return RealField(self.grid, self.frames[k])

    def __iter__(self) -> Iterator[RealField]:
        for k in range(self.n_frames):
            yield self.frame(k)

    def __len__(self) -> int:
        return self.n_frames

    def trimmed(self, t_burn: float) -> "Trajectory":
        """Drop frames recorded before ``t0 + t_burn``."""
        k0 = int(math.ceil(t_burn / self.dt_rec - 1e-9)) if t_burn > 0 else 0
        if k0 >= self.n_frames:
            raise ValueError("burn-in removes every frame")
        return Trajectory(self.grid, self.t0 + k0 * self.dt_rec, self.dt_rec, self.frames[k0:])

    def with_frames(self, frames) -> "Trajectory":
        return Trajectory(self.grid, self.t0, self.dt_rec, frames)


def _check_grids(a: GridSpec, b: GridSpec):
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


# --------------------------------------------------------------------------
# array-level kernels (operate on the last axis)
# --------------------------------------------------------------------------


def _rfft(a):
    a = np.asarray(a, dtype=float)
    return np.fft.rfft(a, axis=-1) / a.shape[-1]


def _irfft(c, N: int):
    return np.fft.irfft(c * N, n=N, axis=-1)


def _apply_symbol(a, grid: GridSpec, symbol, zero_nyquist: bool):
    c = _rfft(a) * symbol
    if zero_nyquist:
        c[..., -1] = 0.0
    return _irfft(c, grid.N)


def _derivative_array(a, grid: GridSpec, m: int):
    if m == 0:
        return np.array(a, dtype=float)
    symbol = (1j * grid.xi_rfft) ** m
    return _apply_symbol(a, grid, symbol, zero_nyquist=bool(m % 2))


def _halfwave_array(a, grid: GridSpec, alpha: float):
    xi = grid.xi_rfft
    symbol = np.zeros_like(xi)
    if alpha == 0:
        return np.array(a, dtype=float)
    symbol[1:] = xi[1:] ** alpha
    return _apply_symbol(a, grid, symbol, zero_nyquist=False)


def _shift_phase(grid: GridSpec, h: float) -> np.ndarray | None:
    frac = math.fmod(h / grid.L, 1.0)
    if frac < 0:
        frac += 1.0
    if frac == 0.0:
        return None
    phase = np.exp(2j * np.pi * grid.n_rfft * frac)
    phase[-1] = 0.0
    return phase


def _shift_array(a, grid: GridSpec, h: float):
    """Samples of x -> u(x + h) for the trigonometric interpolant of ``a``."""
    phase = _shift_phase(grid, h)
    if phase is None:
        return np.array(a, dtype=float)
    return _irfft(_rfft(a) * phase, grid.N)


def _shift_many(a, grid: GridSpec, hs) -> np.ndarray:
    """Shift ``a`` (shape (..., N)) by every offset in ``hs``.

    Returns shape (len(hs), ..., N); the forward transform is shared.
    """
    c = _rfft(a)
    out = np.empty((len(hs),) + np.shape(a), dtype=float)
    for i, h in enumerate(hs):
        phase = _shift_phase(grid, float(h))
        out[i] = a if phase is None else _irfft(c * phase, grid.N)
    return out


def _diff_array(a, grid: GridSpec, h: float):
    return _shift_array(a, grid, h) - a


def _integrate_array(a, grid: GridSpec):
    """Rectangle rule (L/N) sum_j along the last axis, compensated."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        return grid.dx * fsum(a)
    return grid.dx * fsum(a, axis=-1)


def _cumulative_array(a, grid: GridSpec):
    """Exact running integral int_0^{x_j} u(y) dy of the trigonometric interpolant.

    Returns ``(periodic, mean)`` where the integral equals
    ``periodic + mean * x_j``.  The Nyquist mode is dropped (its
    antiderivative is not representable on the grid).
    """
    c = _rfft(a)
    mean = c[..., 0].real.copy()
    xi = grid.xi_rfft
    anti = np.zeros_like(c)
    anti[..., 1:-1] = c[..., 1:-1] / (1j * xi[1:-1])
    P = _irfft(anti, grid.N)
    return P - P[..., :1], mean


def _integrate_x_times_array(a, grid: GridSpec):
    """Exact int_0^L x u(x) dx for the trigonometric interpolant."""
    c = _rfft(a)
    L = grid.L
    n = grid.n_rfft[1:-1]
    # int_0^L x exp(i xi_n x) dx = L^2 / (2 pi i n); the Nyquist cosine integrates to 0
    inner = 2.0 * np.real(c[..., 1:-1] * (L * L / (2j * np.pi * n)))
    return c[..., 0].real * L * L / 2.0 + fsum(inner, axis=-1 if inner.ndim > 1 else None)


# --------------------------------------------------------------------------
# public operators
# --------------------------------------------------------------------------


def fft_forward(u: RealField) -> SpectralField:
    """Fourier coefficients of ``u`` (full ``fft`` order)."""
    return SpectralField(u.grid, np.fft.fft(u.samples) / u.grid.N)


def fft_inverse(uh: SpectralField) -> RealField:
    """Inverse of :func:`fft_forward`.  The imaginary part must vanish."""
    vals = np.fft.ifft(np.asarray(uh.modes) * uh.grid.N)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    if np.max(np.abs(vals.imag)) > 1e-10 * scale:
        raise DomainError("coefficients are not Hermitian; inverse is not real")
    return RealField(uh.grid, vals.real)


def derivative(u: RealField, m: int) -> RealField:
    """m-th spectral derivative (multiplier (i xi_n)^m)."""
    if int(m) != m or m < 0:
        raise ValueError("derivative order must be a non-negative integer")
    if m > 8:
        raise ValueError("derivative order above 8 is dominated by roundoff")
    return RealField(u.grid, _derivative_array(u.samples, u.grid, int(m)))


def halfwave(u: RealField, alpha: float) -> RealField:
    """Fractional operator |d/dx|^alpha, multiplier (2 pi |n| / L)^alpha.

    The mean maps to zero for ``alpha > 0``.  For ``alpha < 0`` the field
    must have zero mean, otherwise :class:`DomainError` is raised.
    """
    if alpha < -1:
        raise ValueError("alpha must be >= -1")
    if alpha < 0:
        m = mean(u)
        if abs(m) > 1e-12:
            raise DomainError(f"|d/dx|^{alpha} undefined on the mean (mean = {m:.3e})")
    return RealField(u.grid, _halfwave_array(u.samples, u.grid, alpha))


def shift(u: RealField, h: float) -> RealField:
    """x -> u(x + h) via the spectral phase exp(i xi_n h)."""
    return RealField(u.grid, _shift_array(u.samples, u.grid, h))


def finite_diff(u: RealField, h: float) -> RealField:
    """Finite difference D^h u = u(. + h) - u."""
    return RealField(u.grid, _diff_array(u.samples, u.grid, h))


def integrate_x(u: RealField) -> float:
    """Rectangle rule (L/N) sum_j u_j; exact for band-limited integrands."""
    return float(_integrate_array(u.samples, u.grid))


def mean(u: RealField) -> float:
    return integrate_x(u) / u.grid.L


def project_zero_mean(u: RealField) -> RealField:
    """Remove the mean; the zero mode of the result vanishes exactly."""
    c = _rfft(u.samples)
    c[0] = 0.0
    return RealField(u.grid, _irfft(c, u.grid.N))


def cumulative_integral(u: RealField) -> np.ndarray:
    """Samples of int_0^{x_j} u(y) dy (exact for band-limited u)."""
    P, m = _cumulative_array(u.samples, u.grid)
    return P + m * u.grid.x


def band_limited_noise(grid: GridSpec, rng, n_max: int | None = None,
                       amplitude: float = 0.1, decay: float = 1.0) -> RealField:
    """Zero-mean random field on modes 1..n_max with envelope amplitude*n^-decay.

    ``rng`` is a ``numpy.random.Generator`` or an integer seed.  The
    default ``n_max`` is N/8.
    """
    rng = np.random.default_rng(rng)
    n_max = grid.N // 8 if n_max is None else int(n_max)
    c = np.zeros(grid.N // 2 + 1, dtype=complex)
    n = np.arange(1, n_max + 1)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n_max)
    c[1 : n_max + 1] = 0.5 * amplitude * n ** (-decay) * np.exp(1j * phases)
    return RealField(grid, _irfft(c, grid.N))


def resample(u: RealField, N: int) -> RealField:
    """Spectral interpolation of ``u`` onto a grid with ``N`` points (same L).

    Modes that do not fit on the coarser grid are dropped; the Nyquist mode
    is dropped in either direction.
    """
    new = GridSpec(u.grid.L, N)
    c = _rfft(u.samples)
    out = np.zeros(N // 2 + 1, dtype=complex)
    keep = min(len(c), len(out)) - 1
    out[:keep] = c[:keep]
    return RealField(new, _irfft(out, N))
