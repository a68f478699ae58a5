"""Discrete nonhomogeneous Littlewood-Paley decomposition and the Besov /
Triebel-Lizorkin norms built on it.

The low-frequency cutoff ``chi`` is radial, equal to 1 on ``|xi| <= 3/4`` and
0 on ``|xi| >= 4/3``, with a C-infinity transition.  Ring profiles are defined
telescopically, ``phi_j(xi) = chi(xi / 2^(j+1)) - chi(xi / 2^j)``, so the
partition of unity holds identically and plateau values are exactly 0.0 or
1.0 in floating point.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .spectral_core import Field, PeriodicGrid, ScalarField, VectorField, lp_norm

__all__ = [
    "smooth_step",
    "chi_profile",
    "DyadicPartition",
    "build_partition",
    "NormKind",
    "SpaceParams",
    "dyadic_block",
    "low_pass",
    "block_norms",
    "besov_norm",
    "tl_norm",
    "tl_seminorm",
    "single_block_tl_seminorm",
    "EmbeddingReport",
    "embedding_check",
    "spectrum_csv",
]

CHI_INNER = 0.75
CHI_OUTER = 4.0 / 3.0


def _h(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(r, a: float, b: float):
    """1 for ``r <= a``, 0 for ``r >= b``, smooth and monotone in between."""
    r = np.asarray(r, dtype=float)
    num = _h(b - r)
    den = num + _h(r - a)
    out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    out = np.where(r <= a, 1.0, out)
    return np.where(r >= b, 0.0, out)


def chi_profile(r):
    return smooth_step(r, CHI_INNER, CHI_OUTER)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    grid: PeriodicGrid
    chi_values: np.ndarray
    phi_values_per_block: np.ndarray  # shape (J_max + 1, *grid.shape)

    @property
    def j_max(self) -> int:
        return self.phi_values_per_block.shape[0] - 1

    def profile(self, j: int) -> np.ndarray | None:
        """Multiplier of block ``j``; ``None`` when the block is identically zero."""
        if j == -1:
            return self.chi_values
        if 0 <= j <= self.j_max:
            return self.phi_values_per_block[j]
        return None

    def block_indices(self) -> range:
        return range(-1, self.j_max + 1)


def build_partition(grid: PeriodicGrid) -> DyadicPartition:
    xi = grid.frequency_magnitude
    top = float(xi.max())
    # largest j whose ring (3/4) 2^j <= |xi| still meets the lattice
    j_max = -1
    while CHI_INNER * 2.0 ** (j_max + 1) < top:
        j_max += 1
    chi = chi_profile(xi)
    prev = chi
    blocks = []
    for j in range(j_max + 1):
        nxt = chi_profile(xi / 2.0 ** (j + 1))
        blocks.append(nxt - prev)
        prev = nxt
    phi = np.stack(blocks) if blocks else np.zeros((0,) + grid.shape)
    return DyadicPartition(grid, chi, phi)


class NormKind(enum.Enum):
    BESOV = "besov"
    TRIEBEL_LIZORKIN = "tl"


@dataclass(frozen=True)
class SpaceParams:
    """Regularity ``s``, integrability ``p``, summability ``index`` and the space family."""

    s: float
    p: float
    index: float
    kind: NormKind = NormKind.TRIEBEL_LIZORKIN

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", NormKind(self.kind))
        if not self.s > 0:
            raise ValueError(f"s must be positive, got {self.s}")
        if not (1 < self.p < math.inf):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")
        if not self.index > 1:
            raise ValueError(f"index must exceed 1, got {self.index}")
        if self.kind is NormKind.TRIEBEL_LIZORKIN and math.isinf(self.index):
            raise ValueError("Triebel-Lizorkin norms need a finite index")

    def with_s(self, s: float) -> "SpaceParams":
        return SpaceParams(s, self.p, self.index, self.kind)

    def besov(self, index: float | None = None) -> "SpaceParams":
        return SpaceParams(self.s, self.p, self.index if index is None else index, NormKind.BESOV)

    def well_posed_regime(self, d: int) -> bool:
        """True when ``s > max(3/2, 1 + d/p)``."""
        return self.s > max(1.5, 1.0 + d / self.p)


def _multiply(f: Field, m: np.ndarray) -> Field:
    return type(f).from_coefficients(f.grid, f.coefficients * m)


def _zero_like(f: Field) -> Field:
    return type(f).from_coefficients(f.grid, np.zeros_like(f.coefficients))


def _check_grid(f: Field, part: DyadicPartition):
    if f.grid != part.grid:
        raise ValueError("partition was built on a different grid")


def dyadic_block(f: Field, j: int, part: DyadicPartition) -> Field:
    """``Delta_j f``; zero for ``j <= -2`` and for rings beyond the lattice."""
    _check_grid(f, part)
    prof = part.profile(j)
    if prof is None:
        return _zero_like(f)
    return _multiply(f, prof)


def low_pass(f: Field, n: int, part: DyadicPartition) -> Field:
    """``S_n f = sum_{q <= n-1} Delta_q f`` (multiplier ``chi(2^-n xi)``, telescoped)."""
    _check_grid(f, part)
    if n <= -1:
        return _zero_like(f)
    mult = np.array(part.chi_values, copy=True)
    for q in range(0, min(n, part.j_max + 1)):
        mult = mult + part.phi_values_per_block[q]
    return _multiply(f, mult)


def _block_magnitudes(f: Field, part: DyadicPartition):
    for j in part.block_indices():
        blk = dyadic_block(f, j, part)
        if isinstance(blk, VectorField):
            yield j, blk.magnitude()
        else:
            yield j, np.abs(blk.samples)


def block_norms(f: Field, p: float, part: DyadicPartition) -> dict[int, float]:
    """``||Delta_j f||_{L^p}`` for every ``j`` in ``-1..J_max``."""
    _check_grid(f, part)
    return {j: lp_norm(dyadic_block(f, j, part), p) for j in part.block_indices()}


def besov_norm(f: Field, sp: SpaceParams, part: DyadicPartition) -> float:
    if sp.kind is not NormKind.BESOV:
        raise ValueError("besov_norm needs SpaceParams of kind BESOV")
    terms = np.array([2.0 ** (j * sp.s) * v for j, v in block_norms(f, sp.p, part).items()])
    if math.isinf(sp.index):
        return float(terms.max())
    m = terms.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((terms / m) ** sp.index) ** (1.0 / sp.index))


def tl_seminorm(f: Field, sp: SpaceParams, part: DyadicPartition) -> float:
    """``|| (sum_j 2^{jsr} |Delta_j f|^r)^{1/r} ||_{L^p}`` with the pointwise inner sum."""
    if sp.kind is not NormKind.TRIEBEL_LIZORKIN:
        raise ValueError("tl_seminorm needs SpaceParams of kind TRIEBEL_LIZORKIN")
    _check_grid(f, part)
    r = sp.index
    weighted = [2.0 ** (j * sp.s) * mag for j, mag in _block_magnitudes(f, part)]
    scale = max(float(w.max()) for w in weighted)
    if scale == 0.0:
        return 0.0
    stack = sum((w / scale) ** r for w in weighted) ** (1.0 / r)
    return scale * lp_norm(ScalarField(f.grid, stack), sp.p)


def tl_norm(f: Field, sp: SpaceParams, part: DyadicPartition) -> float:
    """Full Triebel-Lizorkin norm ``||f||_{L^p} + |f|_{F^s_{p,r}}``."""
    return lp_norm(f, sp.p) + tl_seminorm(f, sp, part)


def single_block_tl_seminorm(f: Field, n: int, sp: SpaceParams) -> float:
    """Shortcut ``2^{ns} ||f||_{L^p}`` valid when only block ``n`` of ``f`` is nonzero."""
    return 2.0 ** (n * sp.s) * lp_norm(f, sp.p)


@dataclass(frozen=True)
class EmbeddingReport:
    besov_inf: float
    triebel_lizorkin: float

    @property
    def passed(self) -> bool:
        # exact discrete inequality; slack only for summation order
        return self.besov_inf <= self.triebel_lizorkin * (1 + 1e-12) + 1e-300


def embedding_check(f: Field, s: float, p: float, part: DyadicPartition, r: float = 2.0) -> EmbeddingReport:
    """Compare ``||f||_{B^s_{p,inf}}`` with ``||f||_{F^s_{p,r}}`` on a concrete field."""
    b = besov_norm(f, SpaceParams(s, p, math.inf, NormKind.BESOV), part)
    t = tl_norm(f, SpaceParams(s, p, r, NormKind.TRIEBEL_LIZORKIN), part)
    return EmbeddingReport(b, t)


def spectrum_csv(f: Field, s: float, p: float, part: DyadicPartition, floor: float = 0.0) -> str:
    """CSV rows ``j, blocknorm, weighted`` with ``weighted = 2^{js} blocknorm``.

    Block norms at or below ``floor`` times the largest one are written as 0,
    which removes transform round-off from fields read back from samples.
    """
    norms = block_norms(f, p, part)
    cut = floor * max(norms.values(), default=0.0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "blocknorm", "weighted"])
    for j, v in norms.items():
        v = 0.0 if v <= cut else v
        w.writerow([j, repr(v), repr(2.0 ** (j * s) * v)])
    return buf.getvalue()
