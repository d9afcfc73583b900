"""Sweeps over the system size, spectra, snapshot files and flat config files.

A sweep burns in one Kuramoto-Sivashinsky run per (L, seed), records the
statistically steady part and reduces it to a :class:`SweepRecord` of
rescaled Besov norms and diagnostics.  Records are written to CSV sorted by
(L, seed) with floats in shortest round-trip form, so re-running a sweep
reproduces the file byte for byte apart from its timestamp line.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
import os
import struct
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from scipy import stats

from .besov import (
    BesovParams,
    NormEstimate,
    besov_norm_fd,
    besov_norm_lp,
    stationarity,
)
from .evolution import (
    MAX_STIFFNESS,
    ConfigurationWarning,
    DivergenceError,
    EquationSpec,
    StepperConfig,
    integrate,
    linear_symbol,
    random_initial_condition,
)
from .spectral import DomainError, GridSpec, Trajectory, _halfwave_array, _rfft

WORKERS_ENV = "KSBESOV_WORKERS"

# the four norms carried by every sweep record
NORM_THIRD_INF = BesovParams(1.0 / 3.0, 3.0, math.inf)
NORM_THIRD_3 = BesovParams(1.0 / 3.0, 3.0, 3.0)
NORM_TWO = BesovParams(2.0, 2.0, 2.0)
NORM_HALF = BesovParams(0.5, 2.0, 2.0)
# the norm of g = |d_x| u in the energy-estimate probe
NORM_G = BesovParams(2.0 / 3.0, 1.5, 1.0)


def resolution_for(L: float) -> int:
    """Smallest power of two N with N >= 8 L / pi (about 2.5 points per unit length)."""
    return max(8, 1 << math.ceil(math.log2(8.0 * L / math.pi)))


def stable_dt(grid: GridSpec, dt: float, dt_rec: float) -> tuple[float, int]:
    """Largest step dt_rec / k <= dt inside the ETDRK4 stiffness limit, and k.

    The power-of-two resolution rule can put max|symbol| up to 16 times above
    its value at 8 L / pi points, so the requested step is refined rather
    than rejected; a :class:`ConfigurationWarning` reports the change.
    """
    lam = float(np.max(np.abs(linear_symbol(EquationSpec(), grid))))
    k = max(1, math.ceil(dt_rec / dt - 1e-9))
    while dt_rec / k * lam > MAX_STIFFNESS:
        k += 1
    step = dt_rec / k
    if step < dt * (1 - 1e-12):
        warnings.warn(f"dt reduced from {dt:g} to {step:.6g} for L={grid.L:g}, N={grid.N} "
                      f"(stiffness limit {MAX_STIFFNESS:g})", ConfigurationWarning, stacklevel=2)
    return step, k


def seed_for(master: int, L: float, run: int) -> int:
    """64-bit seed of run ``run`` at size ``L``, from a Philox stream keyed by ``master``.

    The counter encodes (L, run), so the seed does not depend on scheduling.
    """
    counter = [int(round(L * 1000)) & (2**64 - 1), int(run) & (2**64 - 1), 0, 0]
    bg = np.random.Philox(key=int(master) & (2**64 - 1), counter=counter)
    return int(bg.random_raw())


@dataclass(frozen=True)
class SweepConfig:
    """Sizes, seeds and times of an L-sweep.

    ``seeds`` are run labels; the generator seed of each run comes from
    :func:`seed_for`.  ``dt_rec`` is the recording interval of the steady
    part.
    """

    L_list: tuple = (50.0, 100.0, 200.0, 400.0)
    seeds: tuple = (0, 1, 2, 3)
    dt: float = 0.1
    t_burn: float = 200.0
    t_avg: float = 1000.0
    dt_rec: float = 1.0
    master_seed: int = 0
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "L_list", tuple(float(v) for v in self.L_list))
        object.__setattr__(self, "seeds", tuple(int(v) for v in self.seeds))
        if not self.L_list or not self.seeds:
            raise ValueError("L_list and seeds must be non-empty")
        if min(self.L_list) < 20:
            raise ValueError("every L must be >= 20")
        if self.t_avg < 5 * self.t_burn:
            raise ValueError("t_avg must be at least 5 t_burn")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        k = self.dt_rec / self.dt
        if abs(k - round(k)) > 1e-9 or round(k) < 1:
            raise ValueError("dt_rec must be a positive multiple of dt")

    @property
    def record_every(self) -> int:
        return int(round(self.dt_rec / self.dt))

    def runs(self):
        return [(L, s) for L in sorted(self.L_list) for s in self.seeds]


@dataclass(frozen=True)
class SweepRecord:
    """Reduced statistics of one (L, seed) run.

    ``log_ratio`` is B^{1/3}_{3,3} / (ln^{1/3}(L) B^{1/3}_{3,inf});
    ``lemma_ratio`` is B^2_{2,2} / (B^{1/3}_{3,inf} ||g||_{B^{2/3}_{3/2,1}})^{1/2}
    with g = |d_x| u; ``stationarity`` is the relative half-window change of
    B^{1/3}_{3,inf}; ``flagged`` lists norms whose tail fraction is too large.
    """

    L: float
    seed: int
    N: int
    status: str
    b_third_3_inf: float = math.nan
    b_third_3_3: float = math.nan
    b_two_2_2: float = math.nan
    b_half_2_2: float = math.nan
    log_ratio: float = math.nan
    lemma_ratio: float = math.nan
    energy_mean: float = math.nan
    energy_max: float = math.nan
    stationarity: float = math.nan
    flagged: str = ""
    message: str = ""
    wall_time: float = field(default=math.nan, compare=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


CSV_FIELDS = [f.name for f in dataclasses.fields(SweepRecord) if f.name != "wall_time"]


def _rescale(est: NormEstimate, bp: BesovParams, traj: Trajectory) -> float:
    return float(est.value * (traj.grid.L * traj.duration) ** (-1.0 / bp.p))


def record_from_trajectory(traj: Trajectory, L: float, seed: int, wall_time: float = math.nan) -> SweepRecord:
    """Norms and diagnostics of a post-burn-in trajectory."""
    flagged = []

    def norm(bp, method, tr=traj):
        est = besov_norm_fd(tr, bp) if method == "fd" else besov_norm_lp(tr, bp)
        if est.flagged:
            flagged.append(bp.label())
        return _rescale(est, bp, tr)

    b_inf = norm(NORM_THIRD_INF, "fd")
    b_3 = norm(NORM_THIRD_3, "fd")
    b_two = norm(NORM_TWO, "lp")
    b_half = norm(NORM_HALF, "fd")
    g = traj.with_frames(_halfwave_array(traj.frames, traj.grid, 1.0))
    g_norm = norm(NORM_G, "fd", g)
    energy = np.mean(traj.frames ** 2, axis=1)
    denom = math.log(L) ** (1.0 / 3.0) * b_inf
    return SweepRecord(
        L=float(L), seed=int(seed), N=traj.grid.N, status="ok",
        b_third_3_inf=b_inf, b_third_3_3=b_3, b_two_2_2=b_two, b_half_2_2=b_half,
        log_ratio=float(b_3 / denom) if denom > 0 else math.nan,
        lemma_ratio=float(b_two / math.sqrt(b_inf * g_norm)) if b_inf * g_norm > 0 else math.nan,
        energy_mean=float(np.mean(energy)), energy_max=float(np.max(energy)),
        stationarity=float(stationarity(traj, NORM_THIRD_INF)),
        flagged=";".join(flagged), wall_time=wall_time,
    )


def simulate_run(L: float, seed: int, cfg: SweepConfig) -> Trajectory:
    """Burn in for ``t_burn`` and return the next ``t_avg`` recorded every ``dt_rec``."""
    grid = GridSpec(float(L), resolution_for(L))
    dt, every = stable_dt(grid, cfg.dt, cfg.dt_rec)
    u0 = random_initial_condition(grid, seed_for(cfg.master_seed, L, seed))
    burn = integrate(EquationSpec(), u0, StepperConfig(dt=dt, record_every=int(round(cfg.t_burn / dt))),
                     cfg.t_burn)
    u1 = burn.trajectory.frame(burn.trajectory.n_frames - 1)
    run = integrate(EquationSpec(), u1, StepperConfig(dt=dt, record_every=every), cfg.t_avg, t0=cfg.t_burn)
    return run.trajectory


def run_one(L: float, seed: int, cfg: SweepConfig) -> SweepRecord:
    """One sweep row; solver divergence gives a ``failed`` row instead of an exception."""
    start = time.perf_counter()
    try:
        traj = simulate_run(L, seed, cfg)
    except DivergenceError as exc:
        return SweepRecord(float(L), int(seed), resolution_for(L), "failed", message=str(exc),
                           wall_time=time.perf_counter() - start)
    rec = record_from_trajectory(traj, L, seed)
    return dataclasses.replace(rec, wall_time=time.perf_counter() - start)


def worker_count() -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _run_packed(args):
    return run_one(*args)


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[SweepRecord]:
    """All (L, seed) runs of ``cfg``, sorted by (L, seed); written to ``cfg.out`` if set."""
    jobs = [(L, s, cfg) for L, s in cfg.runs()]
    n = worker_count() if workers is None else workers
    if n > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
            records = list(pool.map(_run_packed, jobs))
    else:
        records = [run_one(*j) for j in jobs]
    records.sort(key=lambda r: (r.L, r.seed))
    if cfg.out:
        write_records_csv(records, cfg.out)
        write_timing_csv(records, str(cfg.out) + ".timing.csv")
    return records


# --------------------------------------------------------------------------
# CSV
# --------------------------------------------------------------------------


def format_value(v) -> str:
    """Shortest round-trip text for floats, plain text otherwise."""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _timestamp_line() -> str:
    return "# generated " + datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def write_table(path, header: list[str], rows, timestamp: bool = True):
    """CSV with an optional leading timestamp comment line."""
    buf = io.StringIO()
    if timestamp:
        buf.write(_timestamp_line() + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    Path(path).write_text(buf.getvalue())


def write_records_csv(records, path, timestamp: bool = True):
    """Sweep rows in :data:`CSV_FIELDS` order; wall times go to a separate file."""
    rows = [[getattr(r, name) for name in CSV_FIELDS] for r in records]
    write_table(path, CSV_FIELDS, rows, timestamp)


def write_timing_csv(records, path):
    write_table(path, ["L", "seed", "wall_time"], [[r.L, r.seed, r.wall_time] for r in records])


def read_records_csv(path) -> list[SweepRecord]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    out = []
    types = {f.name: f.type for f in dataclasses.fields(SweepRecord)}
    for row in csv.DictReader(lines):
        kw = {}
        for k, v in row.items():
            t = types[k]
            if t in ("float", float):
                kw[k] = float(v)
            elif t in ("int", int):
                kw[k] = int(v)
            else:
                kw[k] = v
        out.append(SweepRecord(**kw))
    return out


# --------------------------------------------------------------------------
# exponent fit
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentFit:
    """norm ~ c ln^kappa(L) fitted by least squares in (ln ln L, ln norm)."""

    kappa: float
    stderr: float
    log_c: float
    n_points: int

    def __iter__(self):
        return iter((self.kappa, self.stderr))


def fit_log_exponent(records, column: str = "b_third_3_inf") -> ExponentFit:
    """Fit ``column`` of the successful records against ln ln L.

    Needs at least three distinct L > e (so that ln ln L > 0 separates them).
    """
    pts = [(r.L, getattr(r, column)) for r in records
           if getattr(r, "ok", True) and math.isfinite(getattr(r, column)) and getattr(r, column) > 0]
    Ls = sorted({L for L, _ in pts})
    if len(Ls) < 3:
        raise DomainError(f"need at least 3 distinct L values, got {len(Ls)}")
    if min(Ls) <= math.e:
        raise DomainError("L must exceed e")
    x = np.log(np.log([L for L, _ in pts]))
    y = np.log([v for _, v in pts])
    fit = stats.linregress(x, y)
    return ExponentFit(float(fit.slope), float(fit.stderr), float(fit.intercept), len(pts))


# --------------------------------------------------------------------------
# power spectrum
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Time-averaged power (1/(L T)) int |F u(t, xi)|^2 dt per resolved xi > 0.

    ``plateau_flatness`` is max/min of the power over ``plateau_band``;
    ``tail_rate`` and ``tail_r2`` come from a linear fit of ln power against
    xi over ``tail_band``.
    """

    xi: np.ndarray
    power: np.ndarray
    plateau_band: tuple
    plateau_flatness: float
    tail_band: tuple
    tail_rate: float
    tail_r2: float


def power_spectrum(traj: Trajectory, plateau_band: tuple | None = None,
                   tail_band: tuple | None = None, floor: float = 1e-20) -> Spectrum:
    """Spectrum and band summaries of a post-burn-in trajectory.

    Defaults: the plateau band is the decade [xi_1, 10 xi_1] and the tail
    band runs from xi = 2 to the last mode whose power exceeds ``floor``
    times the peak (and below 2/3 of the Nyquist wavenumber).
    """
    g = traj.grid
    c = _rfft(traj.frames)
    power = g.L * np.mean(np.abs(c) ** 2, axis=0)
    xi = g.xi_rfft
    xi, power = xi[1:-1], power[1:-1]
    if plateau_band is None:
        plateau_band = (xi[0], 10.0 * xi[0])
    sel = (xi >= plateau_band[0] * (1 - 1e-12)) & (xi <= plateau_band[1] * (1 + 1e-12))
    pw = power[sel]
    flat = float(pw.max() / pw.min()) if len(pw) and pw.min() > 0 else math.inf
    if tail_band is None:
        cut = (2.0 / 3.0) * g.xi_rfft[-1]
        live = xi[(power > floor * power.max()) & (xi < cut)]
        tail_band = (2.0, float(live.max()) if len(live) else 2.0)
    sel = (xi >= tail_band[0]) & (xi <= tail_band[1]) & (power > 0)
    if sel.sum() >= 3:
        fit = stats.linregress(xi[sel], np.log(power[sel]))
        rate, r2 = float(fit.slope), float(fit.rvalue ** 2)
    else:
        rate, r2 = math.nan, math.nan
    return Spectrum(xi, power, tuple(plateau_band), flat, tuple(tail_band), rate, r2)


# --------------------------------------------------------------------------
# snapshot files
# --------------------------------------------------------------------------


MAGIC = b"KSB1"
VERSION = 1
_HEADER = struct.Struct("<IdIddQ")


class SnapshotError(IOError):
    """Malformed snapshot file; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


def save_trajectory(traj: Trajectory, path):
    """Write ``traj`` as a KSB1 snapshot file.

    Layout: magic ``KSB1``; little-endian u32 version, f64 L, u32 N,
    f64 t0, f64 dt_rec, u64 frame count; then per frame f64 time followed
    by N f64 samples.
    """
    g = traj.grid
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(_HEADER.pack(VERSION, g.L, g.N, traj.t0, traj.dt_rec, traj.n_frames))
    times = traj.times
    frames = np.ascontiguousarray(traj.frames, dtype="<f8")
    for k in range(traj.n_frames):
        buf.write(struct.pack("<d", times[k]))
        buf.write(frames[k].tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_trajectory(path) -> Trajectory:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise SnapshotError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", 0)
    if len(data) < 4 + _HEADER.size:
        raise SnapshotError("truncated header", len(data))
    version, L, N, t0, dt_rec, count = _HEADER.unpack_from(data, 4)
    if version != VERSION:
        raise SnapshotError(f"unsupported version {version}", 4)
    off = 4 + _HEADER.size
    block = 8 * (N + 1)
    need = off + block * count
    if len(data) < need:
        raise SnapshotError(f"truncated file: {count} frames need {need} bytes, found {len(data)}", len(data))
    if len(data) > need:
        raise SnapshotError("trailing bytes after the last frame", need)
    raw = np.frombuffer(data, dtype="<f8", count=(N + 1) * count, offset=off).reshape(count, N + 1)
    return Trajectory(GridSpec(L, N), t0, dt_rec, raw[:, 1:].astype(float))


# --------------------------------------------------------------------------
# config files
# --------------------------------------------------------------------------


def normalize_key(key: str) -> str:
    return key.strip().replace("-", "_")


def load_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment; keys use ``_`` or ``-``."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected 'key = value'")
        k, v = line.split("=", 1)
        out[normalize_key(k)] = v.strip()
    return out


def parse_list(text: str, kind=float) -> tuple:
    """Comma or whitespace separated values."""
    return tuple(kind(v) for v in text.replace(",", " ").split())
