"""Exact x-integrals of sign(D) * P for band-limited D and P.

Integrands such as |D^h u| D^h u or D^h eta |D^h u| are not smooth where
D^h u changes sign, so the rectangle rule converges only algebraically for
them.  Writing ``|D| = sign(D) D`` turns every such integrand into
``sign(D) * P`` with ``P`` a product of band-limited fields.  On a grid fine
enough to hold ``P`` without aliasing, the zeros of ``D`` are located to
machine precision and ``P`` is integrated exactly between them through its
spectral antiderivative.
"""

from __future__ import annotations

import numpy as np

from .spectral import GridSpec, _irfft, _rfft


def upsample(frames: np.ndarray, grid: GridSpec, factor: int):
    """Trigonometric interpolation onto ``factor * N`` points (Nyquist dropped)."""
    frames = np.asarray(frames, dtype=float)
    c = _rfft(frames)
    c[..., -1] = 0.0
    if factor == 1:
        return _irfft(c, grid.N), grid
    fine = GridSpec(grid.L, grid.N * factor)
    out = np.zeros(c.shape[:-1] + (fine.N // 2 + 1,), dtype=complex)
    out[..., : c.shape[-1]] = c
    return _irfft(out, fine.N), fine


def _trig_eval(c: np.ndarray, xi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Evaluate real trigonometric series with rfft coefficients ``c`` (rows) at ``x`` (rows)."""
    ph = np.exp(1j * x[:, None] * xi[None, :])
    return c[:, 0].real + 2.0 * np.real(np.sum(c[:, 1:] * ph[:, 1:], axis=1))


def _band(c: np.ndarray) -> int:
    """Number of leading modes that carry any nonzero coefficient."""
    nz = np.nonzero(np.any(np.abs(c) > 0, axis=tuple(range(c.ndim - 1))))[0]
    return int(nz[-1]) + 1 if len(nz) else 1


def _roots(D: np.ndarray, grid: GridSpec):
    """Sign-change roots of each row of ``D`` (periodic).

    Returns (frame index, root position) arrays, refined by safeguarded
    Newton iterations on the trigonometric interpolant.
    """
    N = grid.N
    pos = D > 0
    nxt = np.roll(pos, -1, axis=-1)
    fi, ji = np.nonzero(pos != nxt)
    if len(fi) == 0:
        return fi, np.zeros(0)
    c = _rfft(D)
    c[..., -1] = 0.0
    m = _band(np.where(np.abs(c) > 1e-15 * np.abs(c).max(), c, 0.0))
    c = c[..., :m]
    xi = grid.xi_rfft[:m]
    dc = c * (1j * xi)
    a = ji * grid.dx
    b = a + grid.dx
    fa = D[fi, ji]
    fb = D[fi, (ji + 1) % N]
    ca, cd = c[fi], dc[fi]
    # start from the secant point
    with np.errstate(divide="ignore", invalid="ignore"):
        x = np.where(fb != fa, a - fa * (b - a) / (fb - fa), 0.5 * (a + b))
    x = np.clip(x, a, b)
    lo, hi = a.copy(), b.copy()
    sa = fa > 0
    # |f| below this is roundoff in the series evaluation
    floor = 8.0 * np.finfo(float).eps * (2.0 * np.sum(np.abs(ca), axis=1))
    active = np.arange(len(x))
    for _ in range(60):
        xa = x[active]
        f = _trig_eval(ca[active], xi, xa)
        # keep the bracket
        left = (f > 0) == sa[active]
        lo[active] = np.where(left, xa, lo[active])
        hi[active] = np.where(left, hi[active], xa)
        df = _trig_eval(cd[active], xi, xa)
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - f / df
        bad = ~np.isfinite(xn) | (xn <= lo[active]) | (xn >= hi[active])
        xn = np.where(bad, 0.5 * (lo[active] + hi[active]), xn)
        done = (np.abs(xn - xa) <= 1e-14 * grid.L) | (np.abs(f) <= floor[active])
        x[active] = np.where(np.abs(f) <= floor[active], xa, xn)
        active = active[~done]
        if len(active) == 0:
            break
    return fi, x


def sign_integral(P: np.ndarray, D: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Per-row int_0^L sign(D(x)) P(x) dx.

    ``P`` and ``D`` are sample arrays on ``grid`` (shape (..., N)); both must
    be resolved by that grid.  Rows where D vanishes identically give 0.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    shape = P.shape[:-1]
    P = P.reshape(-1, grid.N)
    D = D.reshape(-1, grid.N)
    L = grid.L
    cp = _rfft(P)
    cp[..., -1] = 0.0
    mean = cp[:, 0].real
    m = _band(np.where(np.abs(cp) > 1e-17 * max(np.abs(cp).max(), 1e-300), cp, 0.0))
    xi = grid.xi_rfft[:m]
    anti = np.zeros_like(cp[:, :m])
    anti[:, 1:] = cp[:, 1:m] / (1j * xi[1:])
    cD = _rfft(D)
    cD[..., -1] = 0.0
    mD = _band(np.where(np.abs(cD) > 1e-17 * max(np.abs(cD).max(), 1e-300), cD, 0.0))
    out = np.zeros(P.shape[0])
    scale = np.max(np.abs(D), axis=-1)
    fi, roots = _roots(D, grid)
    order = np.lexsort((roots, fi))
    fi, roots = fi[order], roots[order]
    Qr = _trig_eval(anti[fi], xi, roots) + mean[fi] * roots if len(fi) else np.zeros(0)
    n_rows = P.shape[0]
    counts = np.bincount(fi, minlength=n_rows)
    # rows without sign changes: constant sign
    flat = (counts == 0) & (scale > 0)
    out[flat] = np.sign(np.sum(D[flat], axis=-1)) * mean[flat] * L
    if len(fi):
        start = np.searchsorted(fi, fi, side="left")
        last = np.searchsorted(fi, fi, side="right") - 1
        idx = np.arange(len(fi))
        wrap = idx == last
        nxt = np.where(wrap, start, idx + 1)
        zn = roots[nxt] + np.where(wrap, L, 0.0)
        qn = Qr[nxt] + np.where(wrap, mean[fi] * L, 0.0)
        mid = 0.5 * (roots + zn)
        sgn = np.sign(_trig_eval(cD[fi, :mD], grid.xi_rfft[:mD], mid))
        np.add.at(out, fi, sgn * (qn - Qr))
    return out.reshape(shape)
