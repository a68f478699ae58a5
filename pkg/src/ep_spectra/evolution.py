"""Time integration of the transport form and the Picard approximation scheme.

The state is always kept inside the dealiasing band: the initial datum is
projected once, and every RK4 stage adds band-limited increments only.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .ep_dynamics import DEFAULT_DEALIAS, RhsKernel
from .littlewood_paley import (
    DyadicPartition,
    NormKind,
    SpaceParams,
    besov_norm,
    low_pass,
    tl_norm,
)
from .spectral_core import PeriodicGrid, VectorField

__all__ = [
    "SolverConfig",
    "Trajectory",
    "CFLViolation",
    "BlowupDetected",
    "rk4_step",
    "solve",
    "picard_solve",
    "cauchy_diagnostic",
    "h1_energy",
    "grad_linf",
]

DIAGNOSTIC_COLUMNS = ("t", "f_norm", "besov_low_norm", "grad_linf", "energy")


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_final: float
    blowup_threshold: float | None = None  # on ||grad u||_inf; None -> 10x initial value
    dealias_fraction: float = DEFAULT_DEALIAS
    cfl_safety: float = 0.5
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.blowup_threshold is not None and not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


class CFLViolation(ValueError):
    """Raised by :func:`rk4_step` when ``dt`` breaks the advective CFL bound."""

    def __init__(self, dt: float, limit: float):
        self.dt = dt
        self.limit = limit
        self.suggested_dt = dt / 2
        super().__init__(f"dt={dt:.4g} exceeds CFL limit {limit:.4g}; retry with dt={dt / 2:.4g}")


class BlowupDetected(RuntimeError):
    """The gradient guard tripped: the run left the regime where existence is assured."""

    def __init__(self, time: float, norm: float, threshold: float, trajectory: "Trajectory"):
        self.time = time
        self.norm = norm
        self.threshold = threshold
        self.trajectory = trajectory
        super().__init__(f"||grad u||_inf = {norm:.4g} > {threshold:.4g} at t = {time:.6g}")


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[VectorField]
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ValueError("times and states differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.states and any(s.grid != self.states[0].grid for s in self.states):
            raise ValueError("states must share a grid")

    @property
    def final(self) -> VectorField:
        return self.states[-1]

    @property
    def grid(self) -> PeriodicGrid:
        return self.states[0].grid

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(DIAGNOSTIC_COLUMNS)
        n = len(self.diagnostics.get("t", self.times))
        cols = [self.diagnostics.get(c, np.full(n, np.nan)) for c in DIAGNOSTIC_COLUMNS]
        for row in zip(*cols):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


# --- scalar diagnostics ---------------------------------------------------

def h1_energy(u: VectorField) -> float:
    """``int |u|^2 + |grad u|^2 dx`` via Parseval."""
    g = u.grid
    w = 1.0 + g.frequency_magnitude**2
    return float(g.volume * np.sum(np.abs(u.coefficients) ** 2 * w))


def grad_linf(u: VectorField, kernel: RhsKernel | None = None) -> float:
    k = kernel or RhsKernel(u.grid)
    gu = k.grad_t(u.coefficients)
    return float(np.sqrt(np.sum(gu**2, axis=(0, 1))).max())


class _Diagnostics:
    def __init__(self, space: SpaceParams | None, part: DyadicPartition | None, kernel: RhsKernel):
        self.space = space
        self.part = part
        self.kernel = kernel
        self.rows: dict[str, list[float]] = {c: [] for c in DIAGNOSTIC_COLUMNS}

    def record(self, t: float, u: VectorField) -> float:
        g = grad_linf(u, self.kernel)
        self.rows["t"].append(t)
        self.rows["grad_linf"].append(g)
        self.rows["energy"].append(h1_energy(u))
        if self.space is not None and self.part is not None:
            sp = self.space
            f = tl_norm(u, SpaceParams(sp.s, sp.p, sp.index, NormKind.TRIEBEL_LIZORKIN), self.part)
            b = besov_norm(u, SpaceParams(sp.s - 1, sp.p, math.inf, NormKind.BESOV), self.part) \
                if sp.s > 1 else math.nan
        else:
            f = b = math.nan
        self.rows["f_norm"].append(f)
        self.rows["besov_low_norm"].append(b)
        return g

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(v) for k, v in self.rows.items()}


# --- integrators ---------------------------------------------------------

def _cfl_limit(kernel: RhsKernel, speed: float, safety: float) -> float:
    rate = kernel.max_frequency * speed
    return math.inf if rate == 0 else safety / rate


def _rk4(f, y: np.ndarray, h: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_step(u: VectorField, dt: float, kernel: RhsKernel | None = None,
             cfl_safety: float = 1.0) -> VectorField:
    """One classical RK4 step of ``u_t = -(u . grad) u + P(u, u)``."""
    k = kernel or RhsKernel(u.grid)
    speed = float(np.sqrt(np.sum(u.samples**2, axis=0)).max())
    limit = _cfl_limit(k, speed, cfl_safety)
    if dt > limit:
        raise CFLViolation(dt, limit)
    return VectorField.from_coefficients(u.grid, _rk4(k.rhs, u.coefficients, dt))


def _time_grid(cfg: SolverConfig):
    n = max(1, math.ceil(cfg.t_final / cfg.dt - 1e-9))
    return [min((i + 1) * cfg.dt, cfg.t_final) for i in range(n)]


def solve(u0: VectorField, cfg: SolverConfig, space: SpaceParams | None = None,
          partition: DyadicPartition | None = None) -> Trajectory:
    """Integrate from ``u0`` to ``cfg.t_final`` with RK4, recording diagnostics.

    ``space`` selects the ``F^s_{p,r}`` and ``B^{s-1}_{p,inf}`` diagnostic
    norms; without it those columns are NaN.  Raises :class:`BlowupDetected`
    when ``||grad u||_inf`` crosses the guard.
    """
    grid = u0.grid
    kernel = RhsKernel(grid, cfg.dealias_fraction)
    diag = _Diagnostics(space, partition, kernel)
    u = VectorField.from_coefficients(grid, u0.coefficients * kernel.mask)
    g0 = diag.record(0.0, u)
    threshold = cfg.blowup_threshold
    if threshold is None:
        threshold = 10.0 * g0 if g0 > 0 else math.inf
    times, states = [0.0], [u]
    t = 0.0
    for step, t_next in enumerate(_time_grid(cfg), start=1):
        uc = u.coefficients
        h = t_next - t
        n_sub = 1
        while True:
            try:
                sub = VectorField.from_coefficients(grid, uc)
                for _ in range(n_sub):
                    sub = rk4_step(sub, h / n_sub, kernel, cfg.cfl_safety)
                break
            except CFLViolation:
                n_sub *= 2
                if n_sub > 2**20:
                    raise
        u, t = sub, t_next
        last = t_next == cfg.t_final
        if step % cfg.record_every == 0 or last:
            g = diag.record(t, u)
            times.append(t)
            states.append(u)
        else:
            g = grad_linf(u, kernel)
        if g > threshold:
            traj = Trajectory(times, states, diag.arrays())
            raise BlowupDetected(t, g, threshold, traj)
    return Trajectory(times, states, diag.arrays())


def picard_solve(u0: VectorField, n_iters: int, cfg: SolverConfig,
                 part: DyadicPartition) -> list[Trajectory]:
    """Trajectories of the Picard iterates ``u^0 = 0, u^1, ..., u^n_iters``.

    Iterate ``k+1`` solves the linear transport problem
    ``d_t u^{k+1} + (u^k . grad) u^{k+1} = P(u^k, u^k)`` from ``S_{k+1} u0``.
    All iterates advance together through the same RK4 stages, so iterate
    ``k+1`` sees ``u^k`` at exactly the stage times its own update uses;
    the hierarchy is lower triangular and each level is linear in its unknown.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    grid = u0.grid
    kernel = RhsKernel(grid, cfg.dealias_fraction)
    d = grid.dim
    levels = n_iters + 1
    y = np.zeros((levels, d) + grid.shape, dtype=complex)
    for k in range(1, levels):
        y[k] = low_pass(u0, k, part).coefficients * kernel.mask

    def rhs(y):
        out = np.zeros_like(y)
        prev_u = prev_p = None
        # level 0 is the zero iterate: no velocity, no source
        prev_u = np.zeros((d,) + grid.shape)
        prev_p = np.zeros_like(y[0])
        for k in range(1, levels):
            uc = y[k]
            gu = kernel.grad_t(uc)
            out[k] = prev_p - kernel.convection(prev_u, gu)
            if k < levels - 1:
                prev_u = np.stack([kernel.physical(c) for c in uc])
                prev_p = kernel.q(gu, gu) + kernel.r(gu, prev_u)
        return out

    diags = [_Diagnostics(None, None, kernel) for _ in range(levels)]
    records: list[list[VectorField]] = [[] for _ in range(levels)]
    times = [0.0]
    for k in range(levels):
        v = VectorField.from_coefficients(grid, y[k])
        diags[k].record(0.0, v)
        records[k].append(v)
    t = 0.0
    for step, t_next in enumerate(_time_grid(cfg), start=1):
        h = t_next - t
        speed = max(float(np.sqrt(np.sum(kernel.physical(y[k]) ** 2, axis=0)).max())
                    for k in range(levels))
        n_sub = max(1, 2 ** math.ceil(math.log2(max(1.0, h / _cfl_limit(kernel, speed, cfg.cfl_safety)))))
        for _ in range(n_sub):
            y = _rk4(rhs, y, h / n_sub)
        t = t_next
        if step % cfg.record_every == 0 or t_next == cfg.t_final:
            times.append(t)
            for k in range(levels):
                v = VectorField.from_coefficients(grid, y[k].copy())
                diags[k].record(t, v)
                records[k].append(v)
    return [Trajectory(times, records[k], diags[k].arrays()) for k in range(levels)]


def cauchy_diagnostic(iterates: list[Trajectory], m: int, sp_lowered: SpaceParams,
                      part: DyadicPartition) -> list[float]:
    """``b_n^m = ||u^{n+m} - u^n||`` in ``sp_lowered`` at the final time, for each ``n``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if len(iterates) <= m:
        raise ValueError(f"need more than {m} iterates, got {len(iterates)}")
    norm = besov_norm if sp_lowered.kind is NormKind.BESOV else tl_norm
    return [norm(iterates[n + m].final - iterates[n].final, sp_lowered, part)
            for n in range(len(iterates) - m)]
