"""Multigrid-in-energy right preconditioner.

Each coarse energy grid has half as many groups as the one above it (rounded
up).  Cross sections are restricted once at setup; errors are restricted by
pairwise averaging and prolonged by injection plus averaging.  Every energy
set runs its own V-cycles on its own groups with weighted Richardson
smoothing, so no data moves between sets.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .operator import Discretization, TransportOperator
from .problem import CartesianMesh, MaterialCrossSections
from .quadrature import AngularQuadrature
from .sweep import Sweeper

log = logging.getLogger(__name__)


def chain_length(num_groups: int) -> int:
    """Number of grids in the chain G, ceil(G/2), ..., 1."""
    n, count = num_groups, 1
    while n > 1:
        n = -(-n // 2)
        count += 1
    return count


def _floor_log2(n: int) -> int:
    return n.bit_length() - 1


def grid_depth(num_groups: int, num_sets: int = 1, override=None,
               min_set_size: Optional[int] = None) -> int:
    """Number of energy grids used by every set.

    One set: ``floor(log2(G - 1)) + 2`` (1 for a single group).  Several
    sets: the same count evaluated at ``floor(G / num_sets)``, clamped to what
    the smallest set can actually coarsen to.
    """
    if num_groups < 1:
        raise ValueError("need at least one group")
    if num_sets == 1:
        achievable = 1 if num_groups == 1 else _floor_log2(num_groups - 1) + 2
        auto = achievable
    else:
        g_min = num_groups // num_sets
        smallest = min_set_size if min_set_size is not None else g_min
        achievable = chain_length(smallest)
        auto = _floor_log2(g_min) + 2 if g_min >= 1 else 1
    depth = auto if override in (None, "auto") else int(override)
    if depth > achievable or depth < 1:
        clamped = min(max(depth, 1), achievable)
        if override not in (None, "auto"):
            log.warning("grid depth %d not achievable, using %d", depth, clamped)
        depth = clamped
    return depth


def restrict_vector(fine: np.ndarray) -> np.ndarray:
    """Average neighbouring groups; an odd last group is copied.

    Works along axis 0, so ``(groups, cells)`` arrays restrict cell by cell.
    """
    fine = np.asarray(fine, dtype=float)
    N = fine.shape[0]
    half = N // 2
    coarse = np.empty((-(-N // 2),) + fine.shape[1:])
    coarse[:half] = 0.5 * (fine[0:2 * half:2] + fine[1:2 * half:2])
    if N % 2:
        coarse[-1] = fine[-1]
    return coarse


def prolong_vector(coarse: np.ndarray, num_fine: int) -> np.ndarray:
    """Inject coarse values on even fine groups and average in between.

    For an even fine count the last fine group has no right-hand coarse
    neighbour and takes the last coarse value.
    """
    coarse = np.asarray(coarse, dtype=float)
    M = coarse.shape[0]
    if M != -(-num_fine // 2):
        raise ValueError(f"coarse length {M} does not match {num_fine} fine groups")
    fine = np.empty((num_fine,) + coarse.shape[1:])
    fine[0::2] = coarse[: len(range(0, num_fine, 2))]
    n_mid = M - 1
    fine[1:2 * n_mid:2] = 0.5 * (coarse[:n_mid] + coarse[1:M])
    if num_fine % 2 == 0:
        fine[-1] = coarse[-1]
    return fine


def _restrict_sum(v: np.ndarray) -> np.ndarray:
    N = len(v)
    half = N // 2
    out = np.empty(-(-N // 2))
    out[:half] = v[0:2 * half:2] + v[1:2 * half:2]
    if N % 2:
        out[-1] = v[-1]
    return out


def restrict_scatter(S: np.ndarray) -> np.ndarray:
    """Coarsen a destination-by-source scattering matrix.

    Paired entries take a quarter of the 2x2 fine block sum; with an odd
    group count the last row and column average the two matching fine
    entries and the corner is copied.
    """
    N = S.shape[0]
    half = N // 2
    M = -(-N // 2)
    C = np.empty((M, M))
    e = slice(0, 2 * half, 2)
    o = slice(1, 2 * half, 2)
    C[:half, :half] = 0.25 * (S[e, e] + S[o, e] + S[e, o] + S[o, o])
    if N % 2:
        last = N - 1
        C[-1, :half] = 0.5 * (S[last, e] + S[last, o])
        C[:half, -1] = 0.5 * (S[e, last] + S[o, last])
        C[-1, -1] = S[last, last]
    return C


def restrict_material(xs: MaterialCrossSections) -> MaterialCrossSections:
    """One level of cross-section coarsening; chi is summed to keep its norm."""
    return MaterialCrossSections(
        sigma_t=restrict_vector(xs.sigma_t),
        sigma_s=restrict_scatter(xs.sigma_s),
        nu_sigma_f=restrict_vector(xs.nu_sigma_f),
        chi=_restrict_sum(xs.chi),
    )


@dataclass(frozen=True)
class Level:
    num_groups: int
    materials: dict
    operator: TransportOperator


class EnergyHierarchy:
    """Per-set list of grid levels, built once and never modified."""

    def __init__(self, sets: Sequence[range], levels: Sequence[Sequence[Level]]):
        self.set_blocks = tuple(sets)
        self.levels = tuple(tuple(lv) for lv in levels)

    @property
    def depth(self) -> int:
        return len(self.levels[0])

    def group_counts(self, s: int = 0) -> list:
        return [lv.num_groups for lv in self.levels[s]]


def build_hierarchy(materials: dict, set_blocks: Sequence[range], depth: int,
                    mesh: CartesianMesh, quadrature: AngularQuadrature) -> EnergyHierarchy:
    """Restrict each set's own slice of the data ``depth - 1`` times.

    Scattering between sets is dropped; each set sees only its diagonal block.
    """
    sweeper = Sweeper(mesh, quadrature)
    smallest = min(len(b) for b in set_blocks)
    if depth > chain_length(smallest):
        log.warning("depth %d exceeds achievable %d; clamping", depth, chain_length(smallest))
        depth = chain_length(smallest)
    all_levels = []
    for blk in set_blocks:
        mats = {m: xs.subset(blk) for m, xs in materials.items()}
        levels = []
        for lvl in range(depth):
            if lvl:
                mats = {m: restrict_material(xs) for m, xs in mats.items()}
            disc = Discretization(mesh, mats, quadrature, sweeper=sweeper)
            levels.append(Level(disc.num_groups, mats, TransportOperator(disc)))
        all_levels.append(levels)
    return EnergyHierarchy(set_blocks, all_levels)


def relax_richardson(x: Optional[np.ndarray], b: np.ndarray, op: TransportOperator,
                     weight: float) -> np.ndarray:
    """One weighted Richardson step ``x + w (b - A x)``; ``x=None`` means zero."""
    if x is None:
        return weight * b
    return x + weight * (b - op.apply(x))


def v_cycle(b: np.ndarray, levels: Sequence[Level], level: int, relax: int,
            weight: float) -> np.ndarray:
    """Correction for ``A_level x = b`` from one V-cycle started at zero."""
    op = levels[level].operator
    x = None
    for _ in range(relax):
        x = relax_richardson(x, b, op, weight)
    if level == len(levels) - 1:
        return x
    rho = b - op.apply(x)
    e = v_cycle(restrict_vector(rho), levels, level + 1, relax, weight)
    x = x + prolong_vector(e, levels[level].num_groups)
    for _ in range(relax):
        x = relax_richardson(x, b, op, weight)
    return x


class MGEPreconditioner:
    """Linear map ``u -> G^-1 u`` built from concatenated V-cycles per set."""

    def __init__(self, hierarchy: EnergyHierarchy, weight: float = 1.0, relax: int = 2,
                 vcycles: int = 2):
        self.hierarchy = hierarchy
        self.weight = weight
        self.relax = relax
        self.vcycles = vcycles
        g0 = hierarchy.set_blocks[0].start
        self._rel = [range(b.start - g0, b.stop - g0) for b in hierarchy.set_blocks]
        self.num_groups = sum(len(b) for b in hierarchy.set_blocks)
        self.applications = 0

    def apply_set(self, s: int, u: np.ndarray) -> np.ndarray:
        levels = self.hierarchy.levels[s]
        x = None
        for _ in range(self.vcycles):
            r = u if x is None else u - levels[0].operator.apply(x)
            e = v_cycle(r, levels, 0, self.relax, self.weight)
            x = e if x is None else x + e
        return x

    def apply(self, u: np.ndarray, order: Optional[Sequence[int]] = None) -> np.ndarray:
        """Apply to a ``(groups, cells)`` array; ``order`` permutes set execution."""
        self.applications += 1
        out = np.empty_like(u, dtype=float)
        for s in (order if order is not None else range(len(self._rel))):
            rel = self._rel[s]
            out[rel.start:rel.stop] = self.apply_set(s, u[rel.start:rel.stop])
        return out

    def __call__(self, u_flat: np.ndarray) -> np.ndarray:
        u = u_flat.reshape(self.num_groups, -1)
        return self.apply(u).ravel()
