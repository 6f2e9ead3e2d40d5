"""Problem data: materials, mesh, sources, solver settings and group partitions.

Scattering matrices are stored destination-by-source: ``sigma_s[g, gp]`` is
the cross section for scattering from group ``gp`` into group ``g``.  Group 0
is the highest energy group.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

BOUNDARY_KINDS = ("vacuum", "reflect")
FACES = ("xlo", "xhi", "ylo", "yhi", "zlo", "zhi")


class ConfigurationError(ValueError):
    """Raised for inconsistent or unsupported solver configurations."""


@dataclass(frozen=True)
class MaterialCrossSections:
    sigma_t: np.ndarray
    sigma_s: np.ndarray
    nu_sigma_f: np.ndarray
    chi: np.ndarray

    def __post_init__(self):
        G = len(self.sigma_t)
        for name, shape in (("sigma_t", (G,)), ("sigma_s", (G, G)),
                            ("nu_sigma_f", (G,)), ("chi", (G,))):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_arrays(cls, sigma_t, sigma_s, nu_sigma_f=None, chi=None):
        G = len(sigma_t)
        return cls(
            sigma_t=sigma_t,
            sigma_s=sigma_s,
            nu_sigma_f=np.zeros(G) if nu_sigma_f is None else nu_sigma_f,
            chi=np.zeros(G) if chi is None else chi,
        )

    @property
    def num_groups(self) -> int:
        return len(self.sigma_t)

    @property
    def fissile(self) -> bool:
        return bool(np.any(self.nu_sigma_f > 0))

    def subset(self, groups: range) -> "MaterialCrossSections":
        """Slice to a contiguous group range, dropping coupling to other groups."""
        sl = slice(groups.start, groups.stop)
        return MaterialCrossSections(
            sigma_t=self.sigma_t[sl],
            sigma_s=self.sigma_s[sl, sl],
            nu_sigma_f=self.nu_sigma_f[sl],
            chi=self.chi[sl],
        )


def validate_material(xs: MaterialCrossSections) -> list[str]:
    """Return a list of invariant violations; empty when the material is valid."""
    problems = []
    for name in ("sigma_t", "nu_sigma_f"):
        arr = getattr(xs, name)
        for g in np.flatnonzero(~np.isfinite(arr) | (arr < 0)):
            problems.append(f"{name} negative or non-finite in group {g}")
    bad = ~np.isfinite(xs.sigma_s) | (xs.sigma_s < 0)
    for g, gp in zip(*np.nonzero(bad)):
        problems.append(f"scatter negative or non-finite from group {gp} to group {g}")
    for g in np.flatnonzero(xs.chi < 0):
        problems.append(f"chi negative in group {g}")

    col = xs.sigma_s.sum(axis=0)
    for gp in range(xs.num_groups):
        if col[gp] > xs.sigma_t[gp] * (1 + 1e-14):
            problems.append(
                f"c > 1 in column {gp}: scattering exceeds total in group {gp}"
            )

    if xs.fissile:
        if abs(xs.chi.sum() - 1.0) > 1e-12:
            problems.append(f"chi must sum to 1 (sums to {xs.chi.sum():.12g})")
    elif np.any(xs.chi != 0):
        problems.append("chi must be all zero when there is no fission")
    return problems


@dataclass(frozen=True)
class CartesianMesh:
    nx: int
    ny: int
    nz: int
    dx: float = 1.0
    dy: float = 1.0
    dz: float = 1.0
    material_id: Optional[np.ndarray] = None
    boundary: tuple = ("vacuum",) * 6

    def __post_init__(self):
        if min(self.nx, self.ny, self.nz) < 1:
            raise ValueError("cell counts must be >= 1")
        if min(self.dx, self.dy, self.dz) <= 0:
            raise ValueError("cell widths must be > 0")
        ids = np.zeros(self.shape, dtype=int) if self.material_id is None \
            else np.array(self.material_id, dtype=int).reshape(self.shape)
        ids.setflags(write=False)
        object.__setattr__(self, "material_id", ids)
        bc = tuple(self.boundary)
        if len(bc) != 6 or any(b not in BOUNDARY_KINDS for b in bc):
            raise ValueError(f"boundary must be 6 entries from {BOUNDARY_KINDS}, got {bc}")
        object.__setattr__(self, "boundary", bc)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def num_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def widths(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def any_reflecting(self) -> bool:
        return "reflect" in self.boundary

    def with_boundary(self, boundary) -> "CartesianMesh":
        if isinstance(boundary, str):
            boundary = (boundary,) * 6
        return CartesianMesh(self.nx, self.ny, self.nz, self.dx, self.dy, self.dz,
                             self.material_id, tuple(boundary))


@dataclass(frozen=True)
class SourceSpec:
    """Isotropic volumetric source.

    ``q`` is either a per-group vector (uniform in space) or a
    ``(groups, cells)`` array.
    """
    q: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        if q.ndim not in (1, 2):
            raise ValueError("source must be per-group or per-group-per-cell")
        if np.any(q < 0):
            raise ValueError("source must be non-negative")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    @property
    def mode(self) -> str:
        return "uniform-isotropic-by-group" if self.q.ndim == 1 else "per-cell"

    def density(self, num_cells: int) -> np.ndarray:
        """Source as a ``(groups, cells)`` array."""
        if self.q.ndim == 1:
            return np.repeat(self.q[:, None], num_cells, axis=1)
        if self.q.shape[1] != num_cells:
            raise ValueError("per-cell source does not match the mesh")
        return self.q.copy()


@dataclass
class SolverConfig:
    tol: float = 1e-6
    max_iters: int = 1000
    restart: Optional[int] = None
    weight: float = 1.0
    relax: int = 2
    vcycles: int = 2
    depth: Union[str, int] = "auto"
    pc_sn: Optional[int] = None
    num_sets: int = 1
    block_mode: str = "all"
    precond: bool = False

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigurationError("tol must be > 0")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be >= 1")
        if self.restart is not None and self.restart < 1:
            raise ConfigurationError("restart must be >= 1")
        if self.weight <= 0:
            raise ConfigurationError("weight must be > 0")
        if self.relax < 1 or self.vcycles < 1:
            raise ConfigurationError("relax and vcycles must be >= 1")
        if self.depth != "auto" and (not isinstance(self.depth, int) or self.depth < 1):
            raise ConfigurationError("depth must be 'auto' or an integer >= 1")
        if self.num_sets < 1:
            raise ConfigurationError("num_sets must be >= 1")
        if self.block_mode not in ("all", "upscatter"):
            raise ConfigurationError("block_mode must be 'all' or 'upscatter'")


@dataclass
class EigenConfig:
    k_tol: float = 1e-5
    l2_tol: float = 1.0
    linf_tol: float = 0.01
    k0: float = 1.0
    max_outer: int = 500

    def __post_init__(self):
        if min(self.k_tol, self.l2_tol, self.linf_tol) <= 0:
            raise ConfigurationError("eigenvalue tolerances must be > 0")
        if self.k0 <= 0:
            raise ConfigurationError("k0 must be > 0")


@dataclass
class ProblemSpec:
    mesh: CartesianMesh
    materials: dict
    source: SourceSpec
    sn_order: int = 4
    solver: SolverConfig = field(default_factory=SolverConfig)
    eigen: EigenConfig = field(default_factory=EigenConfig)
    eigen_enabled: bool = False

    @property
    def num_groups(self) -> int:
        return next(iter(self.materials.values())).num_groups


@dataclass(frozen=True)
class GroupPartition:
    num_groups: int
    cascade_groups: tuple
    block_groups: range
    set_blocks: tuple = ()


def synth_upscatter_fixture(num_groups: int, num_upscatter: int) -> MaterialCrossSections:
    """Deterministic banded test material with an upscatter tail.

    Self scatter 0.45, downscatter 0.20 and (for the last ``num_upscatter``
    source groups) upscatter 0.05, all as fractions of the source group's
    total cross section.
    """
    if not 1 <= num_upscatter <= num_groups:
        raise ValueError("need 1 <= num_upscatter <= num_groups")
    G = num_groups
    sigma_t = 1.0 + 0.05 * np.arange(G)
    sigma_s = np.zeros((G, G))
    for gp in range(G):
        sigma_s[gp, gp] = 0.45 * sigma_t[gp]
        if gp + 1 < G:
            sigma_s[gp + 1, gp] = 0.20 * sigma_t[gp]
        if gp >= G - num_upscatter and gp >= 1:
            sigma_s[gp - 1, gp] = 0.05 * sigma_t[gp]
    return MaterialCrossSections.from_arrays(sigma_t, sigma_s)


def synth_fission_fixture(num_groups: int, num_upscatter: int) -> MaterialCrossSections:
    """The upscatter fixture plus fission: chi falls off over the top groups."""
    base = synth_upscatter_fixture(num_groups, num_upscatter)
    G = num_groups
    nu_sigma_f = 0.40 + 0.02 * np.arange(G)
    chi = np.zeros(G)
    top = min(3, G)
    chi[:top] = np.arange(top, 0, -1, dtype=float)
    chi /= chi.sum()
    return MaterialCrossSections(base.sigma_t, base.sigma_s, nu_sigma_f, chi)


def fixture_problem(num_groups=10, num_upscatter=5, n=3, boundary="vacuum",
                    sn_order=4, source_groups=3, fission=False, **solver_kw) -> ProblemSpec:
    """One-material cube with the synthetic cross sections.

    The source is 1 in the first ``source_groups`` groups (none when fission
    is requested).
    """
    synth = synth_fission_fixture if fission else synth_upscatter_fixture
    xs = synth(num_groups, num_upscatter)
    mesh = CartesianMesh(n, n, n, boundary=(boundary,) * 6 if isinstance(boundary, str) else boundary)
    q = np.zeros(num_groups)
    if not fission:
        q[:min(source_groups, num_groups)] = 1.0
    return ProblemSpec(mesh=mesh, materials={0: xs}, source=SourceSpec(q),
                       sn_order=sn_order, solver=SolverConfig(**solver_kw),
                       eigen_enabled=fission)


def partition_upscatter(materials, mesh: Optional[CartesianMesh] = None) -> GroupPartition:
    """Split groups into a downscatter cascade and a trailing upscatter block."""
    mats = list(materials.values()) if isinstance(materials, dict) else list(materials)
    if mesh is not None and isinstance(materials, dict):
        used = set(np.unique(mesh.material_id).tolist())
        mats = [materials[m] for m in sorted(used)]
    G = mats[0].num_groups
    start = G
    for xs in mats:
        upper = np.triu(xs.sigma_s, k=1)
        rows = np.flatnonzero(np.any(upper != 0, axis=1))
        if rows.size:
            start = min(start, int(rows[0]))
    return GroupPartition(G, tuple(range(start)), range(start, G))


def assign_groups_to_sets(block_size: int, num_sets: int, offset: int = 0) -> tuple:
    """Split a block of groups into contiguous, nearly equal energy sets.

    Lower-indexed sets take the extra groups.  Returned ranges are shifted by
    ``offset`` so they index absolute groups.
    """
    if num_sets < 1:
        raise ConfigurationError("need at least one energy set")
    if num_sets > block_size:
        raise ConfigurationError(
            f"{num_sets} energy sets requested for a block of {block_size} groups"
        )
    base, extra = divmod(block_size, num_sets)
    blocks, start = [], offset
    for s in range(num_sets):
        size = base + (1 if s < extra else 0)
        blocks.append(range(start, start + size))
        start += size
    return tuple(blocks)


def group_partition(spec: ProblemSpec) -> GroupPartition:
    """Cascade/block split plus energy sets according to the solver config."""
    cfg = spec.solver
    G = spec.num_groups
    if cfg.block_mode == "all":
        cascade, block = (), range(0, G)
    else:
        part = partition_upscatter(spec.materials, spec.mesh)
        cascade, block = part.cascade_groups, part.block_groups
    sets = assign_groups_to_sets(len(block), cfg.num_sets, block.start) if len(block) else ()
    return GroupPartition(G, cascade, block, sets)
