"""Matrix-free multigroup operator (I - T M S) over a block of groups.

The block may be split into energy sets.  Each set multiplies its own columns
of the scattering matrix; the partial products are combined by a single
ordered reduce-plus-scatter, after which every set sweeps its own groups.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

import numpy as np

from .problem import CartesianMesh, MaterialCrossSections
from .quadrature import AngularQuadrature
from .sweep import Sweeper


class Discretization:
    """Mesh, per-cell material map, quadrature and sweeper for one group structure."""

    def __init__(self, mesh: CartesianMesh, materials: dict, quadrature: AngularQuadrature,
                 sweeper: Optional[Sweeper] = None):
        self.mesh = mesh
        self.quadrature = quadrature
        self.ids = sorted(materials)
        missing = set(np.unique(mesh.material_id).tolist()) - set(self.ids)
        if missing:
            raise ValueError(f"mesh refers to undefined material(s) {sorted(missing)}")
        self.xs = [materials[i] for i in self.ids]
        self.num_groups = self.xs[0].num_groups
        index = {m: n for n, m in enumerate(self.ids)}
        cell_mat = np.vectorize(index.__getitem__)(mesh.material_id.ravel())
        self._masks = [(n, cell_mat == n) for n in range(len(self.xs)) if np.any(cell_mat == n)]
        self._single = len(self._masks) == 1
        self.sweeper = sweeper if sweeper is not None else Sweeper(mesh, quadrature)
        self._sigma_t = np.empty((self.num_groups, mesh.num_cells))
        for n, mask in self._masks:
            self._sigma_t[:, mask] = self.xs[n].sigma_t[:, None]

    @property
    def num_cells(self) -> int:
        return self.mesh.num_cells

    def sigma_t(self, groups: range) -> np.ndarray:
        return self._sigma_t[groups.start:groups.stop]

    def cell_values(self, attr: str) -> np.ndarray:
        """Per-group material vector ``attr`` expanded to ``(groups, cells)``."""
        out = np.zeros((self.num_groups, self.num_cells))
        for n, mask in self._masks:
            out[:, mask] = getattr(self.xs[n], attr)[:, None]
        return out

    def scatter(self, v: np.ndarray, rows: range, cols: range) -> np.ndarray:
        """``S[rows, cols] @ v`` cell by cell; ``v`` is ``(len(cols), cells)``."""
        out = np.zeros((len(rows), self.num_cells))
        for n, mask in self._masks:
            block = self.xs[n].sigma_s[rows.start:rows.stop, cols.start:cols.stop]
            if self._single:
                out[:] = block @ v
            else:
                out[:, mask] = block @ v[:, mask]
        return out

    def sweep(self, source: np.ndarray, groups: range) -> np.ndarray:
        """T M applied to an isotropic source over ``groups``."""
        return self.sweeper.sweep(source, self.sigma_t(groups))


def scatter_matvec(disc: Discretization, v: np.ndarray, block: range, rows: range) -> np.ndarray:
    """Scattering source into ``rows`` from a vector spanning ``block``."""
    return disc.scatter(v, rows, block)


def reduce_plus_scatter(partials: Sequence[np.ndarray], set_slices: Sequence[range]) -> list:
    """Sum per-set contributions in set order, then hand each set its own rows.

    ``set_slices`` index rows of the contribution arrays (block-relative).
    """
    total = np.array(partials[0], dtype=float, copy=True)
    for p in partials[1:]:
        if p.shape != total.shape:
            raise ValueError(f"contribution shape {p.shape} does not match {total.shape}")
        total += p
    return [total[s.start:s.stop] for s in set_slices]


class TransportOperator:
    """The linear map ``v -> v - T M S v`` on a contiguous group block.

    ``groups`` are absolute group indices into ``disc``; ``set_blocks`` are
    absolute sub-ranges of ``groups`` (default: a single set).
    """

    def __init__(self, disc: Discretization, groups: Optional[range] = None,
                 set_blocks: Optional[Sequence[range]] = None, workers: int = 1):
        self.disc = disc
        self.groups = groups if groups is not None else range(disc.num_groups)
        self.set_blocks = tuple(set_blocks) if set_blocks else (self.groups,)
        covered = [g for b in self.set_blocks for g in b]
        if covered != list(self.groups):
            raise ValueError("energy sets must cover the operator's group block exactly")
        g0 = self.groups.start
        self._rel = [range(b.start - g0, b.stop - g0) for b in self.set_blocks]
        self.workers = workers
        self.applications = 0

    @property
    def shape(self):
        n = len(self.groups) * self.disc.num_cells
        return (n, n)

    def _map_sets(self, fn: Callable, items):
        if self.workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(fn, items))
        return [fn(it) for it in items]

    def scatter_source(self, v: np.ndarray) -> list:
        """Per-set scattering sources after the reduce-plus-scatter."""
        def contribution(s):
            blk, rel = s
            return self.disc.scatter(v[rel.start:rel.stop], self.groups, blk)
        partials = self._map_sets(contribution, list(zip(self.set_blocks, self._rel)))
        return reduce_plus_scatter(partials, self._rel)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """``v - T M S v`` for a ``(groups, cells)`` array."""
        self.applications += 1
        sources = self.scatter_source(v)
        swept = self._map_sets(lambda s: self.disc.sweep(s[0], s[1]),
                               list(zip(sources, self.set_blocks)))
        return v - np.concatenate(swept, axis=0)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        shape = (len(self.groups), self.disc.num_cells)
        return self.apply(v.reshape(shape)).ravel()

    def assemble(self) -> np.ndarray:
        """Dense matrix by applying the operator to unit vectors (small problems only)."""
        n = self.shape[0]
        A = np.empty((n, n))
        e = np.zeros(n)
        for j in range(n):
            e[j] = 1.0
            A[:, j] = self.matvec(e)
            e[j] = 0.0
        return A


def build_fixed_rhs(disc: Discretization, q: np.ndarray, block: range,
                    cascade: Sequence[int] = (), phi: Optional[np.ndarray] = None) -> np.ndarray:
    """``T M (S[block, cascade] phi_cascade + q_block)`` as a ``(block, cells)`` array.

    ``q`` and ``phi`` are full ``(groups, cells)`` arrays; only cascade rows
    of ``phi`` are read.
    """
    src = np.array(q[block.start:block.stop], dtype=float, copy=True)
    if len(cascade):
        c = range(cascade[0], cascade[-1] + 1)
        src += disc.scatter(phi[c.start:c.stop], block, c)
    return disc.sweep(src, block)


def within_group_gmres(tol: float, max_iters: int = 1000):
    """Default single-group solver: unpreconditioned GMRES."""
    from .krylov import gmres

    def solve(op: TransportOperator, b: np.ndarray):
        res = gmres(op.matvec, b.ravel(), tol=tol, max_iters=max_iters)
        if not res.converged:
            raise RuntimeError(f"within-group solve for group {op.groups.start} did not converge")
        return res.x.reshape(b.shape), res.iterations
    return solve


def solve_cascade(disc: Discretization, q: np.ndarray, cascade: Sequence[int],
                  within_group_solver: Callable) -> tuple[np.ndarray, int]:
    """Solve pure-downscatter groups once each, highest energy first.

    Returns the full-size flux array (zero outside the cascade) and the total
    within-group iteration count.
    """
    phi = np.zeros((disc.num_groups, disc.num_cells))
    iters = 0
    for g in cascade:
        rows = range(g, g + 1)
        src = np.array(q[g:g + 1], dtype=float, copy=True)
        if g > 0:
            src += disc.scatter(phi[:g], rows, range(0, g))
        b = disc.sweep(src, rows)
        phi[g:g + 1], n = within_group_solver(TransportOperator(disc, rows), b)
        iters += n
    return phi, iters
