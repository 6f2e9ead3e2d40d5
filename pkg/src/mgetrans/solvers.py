"""Multigroup solvers: preconditioned GMRES, Gauss-Seidel, and power iteration."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .krylov import CONVERGED, gmres
from .mge import MGEPreconditioner, build_hierarchy, grid_depth
from .operator import (Discretization, TransportOperator, build_fixed_rhs,
                       solve_cascade, within_group_gmres)
from .problem import (ConfigurationError, ProblemSpec, SolverConfig, group_partition)
from .quadrature import build_quadrature


@dataclass
class ConvergenceRecord:
    """Iteration history of a fixed-source or eigenvalue solve.

    ``residuals`` are relative residual norms with entry 0 the initial
    residual; ``outer`` holds one dict per power or Gauss-Seidel iteration.
    """
    kind: str = "fixed"
    residuals: list = field(default_factory=list)
    seconds: list = field(default_factory=list)
    outer: list = field(default_factory=list)
    status: str = "converged"
    krylov_iterations: int = 0
    within_group_solves: int = 0

    @property
    def converged(self) -> bool:
        return self.status in CONVERGED

    @property
    def outer_iterations(self) -> int:
        return len(self.outer)


def gmres_solve(operator: TransportOperator, b: np.ndarray, tol: float,
                max_iters: int = 1000, restart: Optional[int] = None,
                preconditioner: Optional[MGEPreconditioner] = None):
    """Right-preconditioned GMRES on a ``(groups, cells)`` right-hand side."""
    res = gmres(operator.matvec, b.ravel(), tol=tol, max_iters=max_iters,
                restart=restart, precond=preconditioner)
    rec = ConvergenceRecord(kind="fixed", residuals=list(res.relative_residuals),
                            seconds=list(res.seconds), status=res.status,
                            krylov_iterations=res.iterations)
    return res.x.reshape(b.shape), rec


class MultigroupSolver:
    """Set up once for a problem; solve ``(I - TMS) phi = TM q`` for many ``q``.

    Groups in the downscatter cascade (``block_mode='upscatter'``) are solved
    one at a time; the remaining block goes to GMRES, preconditioned with
    multigrid in energy when ``config.precond`` is set.
    """

    def __init__(self, spec: ProblemSpec, config: Optional[SolverConfig] = None):
        self.spec = spec
        self.config = cfg = config if config is not None else spec.solver
        self.partition = part = group_partition_for(spec, cfg)
        self.quadrature = build_quadrature(spec.sn_order)
        self.disc = Discretization(spec.mesh, spec.materials, self.quadrature)
        self.block = part.block_groups
        self.operator = None
        self.preconditioner = None
        self.depth = None
        if len(self.block):
            self.operator = TransportOperator(self.disc, self.block, part.set_blocks)
            if cfg.precond:
                self.preconditioner = self._build_preconditioner()

    def _build_preconditioner(self) -> MGEPreconditioner:
        cfg, spec = self.config, self.spec
        pc_sn = cfg.pc_sn if cfg.pc_sn is not None else spec.sn_order
        if pc_sn != spec.sn_order and spec.mesh.any_reflecting:
            raise ConfigurationError(
                "a reduced preconditioner quadrature is only supported with vacuum "
                "boundaries on every face"
            )
        sets = self.partition.set_blocks
        self.depth = grid_depth(len(self.block), len(sets), cfg.depth,
                                min_set_size=min(len(b) for b in sets))
        pc_quad = self.quadrature if pc_sn == spec.sn_order else build_quadrature(pc_sn)
        hierarchy = build_hierarchy(spec.materials, sets, self.depth, spec.mesh, pc_quad)
        return MGEPreconditioner(hierarchy, cfg.weight, cfg.relax, cfg.vcycles)

    def solve(self, q: np.ndarray):
        """Flux for a ``(groups, cells)`` source density, plus its record."""
        cfg = self.config
        cascade = self.partition.cascade_groups
        phi, wg_iters = solve_cascade(self.disc, q, cascade, within_group_gmres(cfg.tol))
        rec = ConvergenceRecord(kind="fixed", residuals=[1.0], seconds=[0.0])
        if len(self.block):
            b = build_fixed_rhs(self.disc, q, self.block, cascade, phi)
            x, rec = gmres_solve(self.operator, b, cfg.tol, cfg.max_iters, cfg.restart,
                                 self.preconditioner)
            phi[self.block.start:self.block.stop] = x
        rec.within_group_solves = len(cascade)
        self.cascade_iterations = wg_iters
        return phi, rec


def group_partition_for(spec: ProblemSpec, cfg: SolverConfig):
    if cfg is spec.solver:
        return group_partition(spec)
    return group_partition(ProblemSpec(spec.mesh, spec.materials, spec.source,
                                       spec.sn_order, cfg, spec.eigen, spec.eigen_enabled))


def solve_fixed_source(spec: ProblemSpec, config: Optional[SolverConfig] = None):
    """Fixed-source flux ``(groups, cells)`` and convergence record."""
    solver = MultigroupSolver(spec, config)
    q = spec.source.density(spec.mesh.num_cells)
    return solver.solve(q)


def gauss_seidel_solve(spec: ProblemSpec, tol: Optional[float] = None, max_outer: int = 1000):
    """Classic group-by-group iteration, highest energy first.

    Each within-group equation is solved by single-group GMRES to ``0.1 tol``.
    Converged when the max-norm relative change of the flux falls below
    ``tol``; without any upscatter a single pass is exact.
    """
    tol = spec.solver.tol if tol is None else tol
    quad = build_quadrature(spec.sn_order)
    disc = Discretization(spec.mesh, spec.materials, quad)
    G, nc = disc.num_groups, disc.num_cells
    q = spec.source.density(nc)
    has_upscatter = any(np.any(np.triu(xs.sigma_s, 1) != 0) for xs in disc.xs)
    inner = within_group_gmres(0.1 * tol)
    ops = [TransportOperator(disc, range(g, g + 1)) for g in range(G)]
    everything = range(G)

    phi = np.zeros((G, nc))
    rec = ConvergenceRecord(kind="gs", status="max-iters")
    t0 = time.perf_counter()
    for it in range(max_outer):
        old = phi.copy()
        krylov = 0
        for g in range(G):
            rows = range(g, g + 1)
            # self-scatter stays on the left-hand side
            src = q[g:g + 1] + disc.scatter(phi, rows, everything) \
                - disc.scatter(phi[g:g + 1], rows, rows)
            b = disc.sweep(src, rows)
            phi[g:g + 1], n = inner(ops[g], b)
            krylov += n
        rec.within_group_solves += G
        rec.krylov_iterations += krylov
        scale = np.max(np.abs(phi))
        change = np.max(np.abs(phi - old)) / scale if scale > 0 else 0.0
        rec.outer.append({"change": change, "krylov_iters": krylov,
                          "seconds": time.perf_counter() - t0})
        if not has_upscatter or change <= tol:
            rec.status = "converged"
            break
    return phi, rec


def power_iteration(spec: ProblemSpec, config: Optional[SolverConfig] = None):
    """Power iteration on the energy-independent fission source.

    Returns ``(k, fission_source, phi, record)``.
    """
    ecfg = spec.eigen
    solver = MultigroupSolver(spec, config)
    disc = solver.disc
    if not any(xs.fissile for xs in disc.xs):
        raise ConfigurationError("eigenvalue problem needs a material with nu_sigma_f > 0")
    chi = disc.cell_values("chi")
    nsf = disc.cell_values("nu_sigma_f")

    nc = disc.num_cells
    gamma = np.ones(nc) / nc
    k = ecfg.k0
    rec = ConvergenceRecord(kind="eigen", status="max-iters")
    t0 = time.perf_counter()
    phi = None
    for i in range(ecfg.max_outer):
        phi, inner = solver.solve(chi * gamma[None, :])
        if inner.status not in CONVERGED:
            raise RuntimeError(f"multigroup solve failed in outer iteration {i}: {inner.status}")
        new = np.sum(nsf * phi, axis=0)
        norm_new = np.sum(np.abs(new))
        k_new = norm_new / np.sum(np.abs(gamma))
        new = new / norm_new
        dk = abs(k_new - k) / k_new
        diff = new - gamma
        l2, linf = float(np.linalg.norm(diff)), float(np.max(np.abs(diff)))
        rec.krylov_iterations += inner.krylov_iterations
        rec.outer.append({"k": k_new, "delta_k": dk, "l2_fission": l2, "linf_fission": linf,
                          "krylov_iters": inner.krylov_iterations,
                          "seconds": time.perf_counter() - t0})
        k, gamma = k_new, new
        if dk <= ecfg.k_tol and l2 <= ecfg.l2_tol and linf <= ecfg.linf_tol:
            rec.status = "converged"
            break
    return k, gamma, phi, rec


def dominance_ratio_estimate(record: ConvergenceRecord) -> Optional[float]:
    """Geometric-mean decay ratio of the fission-source change, or None.

    Uses the successive L2 changes of the last (up to five) outer iterations.
    """
    changes = [o["l2_fission"] for o in record.outer]
    if len(changes) < 3:
        return None
    tail = np.array(changes[-5:])
    if np.any(tail <= 0):
        return 0.0
    ratios = tail[1:] / tail[:-1]
    est = float(np.exp(np.mean(np.log(ratios))))
    return min(max(est, 0.0), np.nextafter(1.0, 0.0))
