"""Sub-stepped Euler simulation with exact large-jump sampling.

Per substep of length ``h = delta / substeps`` with the state frozen at the
left endpoint ``x``, the increment is

    b(x) h + sqrt(c(x) h) Z + (jumps with |y| > eps) + (remainder of jumps with |y| <= eps).

Large jumps arrive as a Poisson number with mean ``tail_mass(x, eps) h`` and
are logged with their left limit ``x``. Observations keep every
``substeps``-th state.

The two built-in model families run through compiled loops; any other
:class:`~levykernel.models.LevyModel` uses a plain Python loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numba
import numpy as np

from .exceptions import SimulationError
from .models import CompoundPoissonToy, LevyModel, StableExample, positive_stable
from scipy import special

__all__ = [
    "SimulationScheme",
    "SamplePath",
    "JumpLog",
    "make_rng",
    "simulate_path",
    "downsample",
    "write_path",
    "read_path",
    "write_jumplog",
    "read_jumplog",
]

SMALL_JUMP_MODES = ("stable_exact", "neglect")
_CHUNK = 1 << 16


@dataclass(frozen=True)
class SimulationScheme:
    t_end: float
    delta: float
    substeps: int = 10
    eps_jump: float = 0.05
    small_jump_mode: str = "stable_exact"

    def __post_init__(self):
        if not (self.t_end > 0 and self.delta > 0):
            raise ValueError("t_end and delta must be positive")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("substeps must be a positive integer")
        if not 0.0 < self.eps_jump < 1.0:
            raise ValueError("eps_jump must lie in (0, 1)")
        if self.small_jump_mode not in SMALL_JUMP_MODES:
            raise ValueError(f"small_jump_mode must be one of {SMALL_JUMP_MODES}")

    @property
    def n_obs(self) -> int:
        return int(round(self.t_end / self.delta))

    @property
    def step(self) -> float:
        return self.delta / self.substeps

    @property
    def n_substeps(self) -> int:
        return self.n_obs * self.substeps


@dataclass
class SamplePath:
    """States ``X_0, X_delta, ..., X_{n delta}`` observed at lag ``delta``."""

    delta: float
    values: np.ndarray
    seed: Optional[int] = None
    model_id: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim not in (1, 2) or len(self.values) < 1:
            raise ValueError("values must be a non-empty 1-d or 2-d array")

    @property
    def n(self) -> int:
        return len(self.values) - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.delta

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=0)

    @property
    def t_end(self) -> float:
        return self.n * self.delta


@dataclass
class JumpLog:
    """Individually simulated jumps plus the fine-grid sojourn path.

    Event times are the left endpoints of the containing substeps.
    """

    times: np.ndarray
    left_limits: np.ndarray
    jumps: np.ndarray
    eps_jump: float
    step: float
    sojourn_grid: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.left_limits = np.asarray(self.left_limits, dtype=float)
        self.jumps = np.asarray(self.jumps, dtype=float)

    def __len__(self):
        return len(self.times)

    @property
    def t_end(self) -> float:
        if self.sojourn_grid is None:
            return float("nan")
        return (len(self.sojourn_grid) - 1) * self.step

    def fine_path(self) -> SamplePath:
        if self.sojourn_grid is None:
            raise ValueError("jump log carries no fine grid")
        return SamplePath(self.step, self.sojourn_grid)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based stream keyed by ``seed``; one stream per trajectory."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


# --------------------------------------------------------------------------
# compiled loops


@numba.njit(cache=True)
def _zeta_plus_scalar(x, xi):
    if x <= -xi:
        return 2.0
    if x > xi:
        return 0.0
    bump = (1.0 + math.cos(math.pi * x / xi)) / 2.0
    if x <= 0.0:
        return 2.0 - bump
    return bump


@numba.njit(cache=True)
def _stable_chunk(fine, k0, k1, base, x, h, b, sd, xi, alpha, eps, exact, scale_coef,
                  z, counts, mags, signs_u, jpos, sp, sm, pool, ppos,
                  ev_idx, ev_left, ev_jump, ev_n):
    """Advance substeps ``k0..k1`` (chunk-local). Returns status, k, x, jpos, ppos, ev_n."""
    inv_alpha = 1.0 / alpha
    for k in range(k0, k1):
        zp = _zeta_plus_scalar(x, xi)
        inc = -b * x * h + sd * z[k]
        if exact:
            small = 0.0
            for side in range(2):
                w = zp if side == 0 else 2.0 - zp
                if w <= 0.0:
                    continue
                scale = (scale_coef * w) ** inv_alpha
                s = scale * (sp[k] if side == 0 else sm[k])
                while s > eps:
                    if ppos >= pool.shape[0]:
                        return 1, k, x, jpos, ppos, ev_n
                    s = scale * pool[ppos]
                    ppos += 1
                small += s if side == 0 else -s
            inc += small
        for _ in range(counts[k]):
            y = mags[jpos] if signs_u[jpos] < zp / 2.0 else -mags[jpos]
            jpos += 1
            ev_idx[ev_n] = base + k
            ev_left[ev_n] = x
            ev_jump[ev_n] = y
            ev_n += 1
            inc += y
        x = x + inc
        if not math.isfinite(x):
            return 2, k, x, jpos, ppos, ev_n
        fine[base + k + 1] = x
    return 0, k1, x, jpos, ppos, ev_n


@numba.njit(cache=True)
def _toy_chunk(fine, k0, k1, base, x, h, b, sd, m0, m1, s, eps, keep_small,
               z, counts, jn, ev_idx, ev_left, ev_jump):
    jpos = 0
    ev_n = 0
    for k in range(k0, k1):
        inc = -b * x * h + sd * z[k]
        m = m0 + m1 * math.tanh(x)
        for _ in range(counts[k]):
            y = m + s * jn[jpos]
            jpos += 1
            if abs(y) > eps:
                ev_idx[ev_n] = base + k
                ev_left[ev_n] = x
                ev_jump[ev_n] = y
                ev_n += 1
                inc += y
            elif keep_small:
                inc += y
        x = x + inc
        if not math.isfinite(x):
            return 2, k, x, ev_n
        fine[base + k + 1] = x
    return 0, k1, x, ev_n


def _blowup(k, h):
    return SimulationError(f"non-finite state at t = {(k + 1) * h:.6g}", time=(k + 1) * h)


def _run_stable(model: StableExample, scheme: SimulationScheme, x0: float, rng):
    p = model.params
    h = scheme.step
    n_sub = scheme.n_substeps
    eps = scheme.eps_jump
    exact = scheme.small_jump_mode == "stable_exact"
    rate = model.tail_mass(0.0, eps) * h
    scale_coef = h * special.gamma(1.0 - p.alpha) / p.alpha
    sd = math.sqrt(p.c * h)
    fine = np.empty(n_sub + 1)
    fine[0] = x0
    x = float(x0)
    idx_parts, left_parts, jump_parts = [], [], []
    empty = np.empty(0)
    pool = empty
    ppos = 0
    for base in range(0, n_sub, _CHUNK):
        m = min(_CHUNK, n_sub - base)
        z = rng.standard_normal(m)
        counts = rng.poisson(rate, m)
        total = int(counts.sum())
        mags = eps * (1.0 - rng.random(total)) ** (-1.0 / p.alpha)
        signs_u = rng.random(total)
        if exact:
            sp = positive_stable(p.alpha, m, rng)
            sm = positive_stable(p.alpha, m, rng)
        else:
            sp = sm = empty
        ev_idx = np.empty(total, dtype=np.int64)
        ev_left = np.empty(total)
        ev_jump = np.empty(total)
        k, jpos, ev_n = 0, 0, 0
        while True:
            status, k, x, jpos, ppos, ev_n = _stable_chunk(
                fine, k, m, base, x, h, p.b, sd, p.xi, p.alpha, eps, exact, scale_coef,
                z, counts, mags, signs_u, jpos, sp, sm, pool, ppos,
                ev_idx, ev_left, ev_jump, ev_n)
            if status == 0:
                break
            if status == 2:
                raise _blowup(base + k, h)
            pool = positive_stable(p.alpha, 1024, rng)
            ppos = 0
        idx_parts.append(ev_idx[:ev_n])
        left_parts.append(ev_left[:ev_n])
        jump_parts.append(ev_jump[:ev_n])
    return fine, _concat(idx_parts, np.int64), _concat(left_parts), _concat(jump_parts)


def _run_toy(model: CompoundPoissonToy, scheme: SimulationScheme, x0: float, rng):
    h = scheme.step
    n_sub = scheme.n_substeps
    eps = scheme.eps_jump
    keep_small = scheme.small_jump_mode != "neglect"
    sd = math.sqrt(model.c * h)
    fine = np.empty(n_sub + 1)
    fine[0] = x0
    x = float(x0)
    idx_parts, left_parts, jump_parts = [], [], []
    for base in range(0, n_sub, _CHUNK):
        m = min(_CHUNK, n_sub - base)
        z = rng.standard_normal(m)
        counts = rng.poisson(model.lam * h, m)
        total = int(counts.sum())
        jn = rng.standard_normal(total)
        ev_idx = np.empty(total, dtype=np.int64)
        ev_left = np.empty(total)
        ev_jump = np.empty(total)
        status, k, x, ev_n = _toy_chunk(fine, 0, m, base, x, h, model.b, sd, model.m0,
                                        model.m1, model.s, eps, keep_small, z, counts, jn,
                                        ev_idx, ev_left, ev_jump)
        if status == 2:
            raise _blowup(base + k, h)
        idx_parts.append(ev_idx[:ev_n])
        left_parts.append(ev_left[:ev_n])
        jump_parts.append(ev_jump[:ev_n])
    return fine, _concat(idx_parts, np.int64), _concat(left_parts), _concat(jump_parts)


def _run_python(model: LevyModel, scheme: SimulationScheme, x0: float, rng):
    h = scheme.step
    eps = scheme.eps_jump
    mode = scheme.small_jump_mode
    n_sub = scheme.n_substeps
    fine = np.empty(n_sub + 1)
    fine[0] = x = float(x0)
    idx, left, jumps = [], [], []
    for k in range(n_sub):
        try:
            inc = float(model.drift(x)) * h
            c = float(model.diffusion_coeff(x))
            if c > 0.0:
                inc += math.sqrt(c * h) * rng.standard_normal()
            inc += model.small_jump_increment(x, h, eps, rng, mode)
            for _ in range(rng.poisson(model.tail_mass(x, eps) * h)):
                y = model.sample_large_jump(x, eps, rng)
                idx.append(k)
                left.append(x)
                jumps.append(y)
                inc += y
            x = x + inc
        except (OverflowError, FloatingPointError):
            x = math.inf
        if not math.isfinite(x):
            raise _blowup(k, h)
        fine[k + 1] = x
    return fine, np.asarray(idx, dtype=np.int64), np.asarray(left, float), np.asarray(jumps, float)


def _concat(parts, dtype=float):
    return np.concatenate(parts) if parts else np.empty(0, dtype=dtype)


def simulate_path(model: LevyModel, scheme: SimulationScheme, x0: float = 0.0,
                  seed: int = 0, engine: str = "auto", keep_fine: bool = True):
    """Simulate one trajectory; returns ``(SamplePath, JumpLog)``.

    ``engine`` is ``"auto"``, ``"compiled"`` or ``"python"``; the compiled
    loops exist for :class:`StableExample` and :class:`CompoundPoissonToy`.
    The result is a pure function of ``(model, scheme, x0, seed, engine)``.
    """
    rng = make_rng(seed)
    compiled = isinstance(model, (StableExample, CompoundPoissonToy))
    if engine == "auto":
        engine = "compiled" if compiled else "python"
    if engine == "compiled":
        if isinstance(model, StableExample):
            fine, idx, left, jumps = _run_stable(model, scheme, x0, rng)
        elif isinstance(model, CompoundPoissonToy):
            fine, idx, left, jumps = _run_toy(model, scheme, x0, rng)
        else:
            raise ValueError(f"no compiled loop for {type(model).__name__}")
    elif engine == "python":
        fine, idx, left, jumps = _run_python(model, scheme, x0, rng)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    h = scheme.step
    log = JumpLog(idx * h, left, jumps, scheme.eps_jump, h, fine if keep_fine else None)
    path = downsample(SamplePath(h, fine, seed, getattr(model, "name", "")), scheme.substeps)
    return path, log


def downsample(path: SamplePath, keep_every: int) -> SamplePath:
    """Keep indices ``0, keep_every, 2 keep_every, ...`` of ``path``."""
    keep_every = int(keep_every)
    if keep_every < 1:
        raise ValueError("keep_every must be a positive integer")
    if (len(path.values) - 1) % keep_every:
        raise ValueError(
            f"fine path of length {len(path.values)} cannot be thinned by {keep_every}")
    return SamplePath(path.delta * keep_every, path.values[::keep_every].copy(),
                      path.seed, path.model_id)


# --------------------------------------------------------------------------
# persistence


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_rows(fh, rows):
    for row in rows:
        fh.write(",".join(_fmt(v) for v in row))
        fh.write("\n")


def _read_header(fh):
    meta = {}
    pos = fh.tell()
    line = fh.readline()
    while line.startswith("#"):
        key, _, val = line[1:].strip().partition("=")
        meta[key.strip()] = val.strip()
        pos = fh.tell()
        line = fh.readline()
    fh.seek(pos)
    return meta


def write_path(path: SamplePath, file, extra_header: Optional[dict] = None) -> None:
    """Write ``time,state`` rows with a commented header naming delta, seed and model."""
    file = Path(file)
    with open(file, "w", newline="\n") as fh:
        fh.write(f"# delta={_fmt(path.delta)}\n")
        fh.write(f"# seed={path.seed}\n")
        fh.write(f"# model={path.model_id}\n")
        for k, v in (extra_header or {}).items():
            fh.write(f"# {k}={v}\n")
        fh.write("time,state\n")
        _write_rows(fh, zip(path.times, path.values))


def read_path(file) -> SamplePath:
    with open(file) as fh:
        meta = _read_header(fh)
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    if "delta" in meta:
        delta = float(meta["delta"])
    elif len(data) > 1:
        delta = float(data[1, 0] - data[0, 0])
    else:
        raise ValueError(f"{file}: cannot determine the observation lag")
    seed = meta.get("seed")
    seed = int(seed) if seed not in (None, "", "None") else None
    return SamplePath(delta, data[:, 1], seed, meta.get("model", ""))


def write_jumplog(log: JumpLog, file, seed=None, model_id: str = "",
                  extra_header: Optional[dict] = None) -> None:
    with open(file, "w", newline="\n") as fh:
        fh.write(f"# step={_fmt(log.step)}\n")
        fh.write(f"# eps_jump={_fmt(log.eps_jump)}\n")
        fh.write(f"# seed={seed}\n")
        fh.write(f"# model={model_id}\n")
        for k, v in (extra_header or {}).items():
            fh.write(f"# {k}={v}\n")
        fh.write("time,left_limit,jump\n")
        _write_rows(fh, zip(log.times, log.left_limits, log.jumps))


def read_jumplog(file, sojourn_grid=None) -> JumpLog:
    with open(file) as fh:
        meta = _read_header(fh)
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        data = np.empty((0, 3))
    grid = None
    if sojourn_grid is not None:
        grid = sojourn_grid.values if isinstance(sojourn_grid, SamplePath) else np.asarray(sojourn_grid)
    return JumpLog(data[:, 0], data[:, 1], data[:, 2], float(meta["eps_jump"]),
                   float(meta["step"]), grid)
