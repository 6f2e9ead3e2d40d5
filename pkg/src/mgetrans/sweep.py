"""Transport sweeps: the action of T = D L^-1 on an isotropic moment source.

Spatial differencing is the step (fully upwind) scheme, so the cell-average
angular flux is also the outgoing face flux.  All eight octants and every
ordinate in an octant are swept together: each octant's data is mirrored so
it travels in +x, +y, +z, and cells are visited by diagonal hyperplanes
i + j + k = const, whose cells are mutually independent.

Flux moments are ``(groups, cells)`` arrays with cells in C order over
``(nx, ny, nz)``.
"""
from __future__ import annotations

import numpy as np

from .problem import CartesianMesh
from .quadrature import AngularQuadrature, octant_signs

FOUR_PI = 4.0 * np.pi
REFLECT_TOL = 1e-10
MAX_REFLECT_PASSES = 50


class SweepConvergenceError(RuntimeError):
    pass


def step_cell_kernel(sigma_t, widths, cosines, incoming, q_angular):
    """Single-cell step-scheme balance for one ordinate.

    Returns the cell angular flux and the three outgoing face fluxes, which
    for the step scheme all equal the cell flux.
    """
    a = np.abs(np.asarray(cosines, dtype=float)) / np.asarray(widths, dtype=float)
    den = sigma_t + a.sum()
    if den == 0:
        raise ZeroDivisionError("step kernel: sigma_t and all cosines are zero")
    psi = (q_angular + np.dot(a, incoming)) / den
    return psi, (psi, psi, psi)


def _group_gmres(matvec, b, atol, max_iters):
    """Independent GMRES solves, one per row of ``b``, sharing each matvec call.

    ``matvec`` maps an ``(n_sys, n)`` stack to another.  A row stops
    iterating once its residual is below its ``atol`` entry; later Arnoldi
    steps do not touch its solution.  Returns the solutions and the number
    of matvecs used.
    """
    ns = b.shape[0]
    beta = np.linalg.norm(b, axis=1)
    active = beta > atol
    m = max_iters
    V = [np.divide(b, beta[:, None], out=np.zeros_like(b), where=beta[:, None] > 0)]
    H = np.zeros((ns, m + 1, m))
    cs, sn = np.zeros((ns, m)), np.zeros((ns, m))
    g = np.zeros((ns, m + 1))
    g[:, 0] = beta
    used = np.zeros(ns, dtype=int)
    k = 0
    while np.any(active) and k < m:
        w = matvec(V[k])
        for _ in range(2):  # modified Gram-Schmidt, applied twice
            for i in range(k + 1):
                h = np.einsum("ij,ij->i", V[i], w)
                H[:, i, k] += h
                w = w - h[:, None] * V[i]
        hn = np.linalg.norm(w, axis=1)
        H[:, k + 1, k] = hn
        V.append(np.divide(w, hn[:, None], out=np.zeros_like(w), where=hn[:, None] > 0))
        for i in range(k):
            t = cs[:, i] * H[:, i, k] + sn[:, i] * H[:, i + 1, k]
            H[:, i + 1, k] = -sn[:, i] * H[:, i, k] + cs[:, i] * H[:, i + 1, k]
            H[:, i, k] = t
        r = np.hypot(H[:, k, k], H[:, k + 1, k])
        safe = np.where(r > 0, r, 1.0)
        cs[:, k] = np.where(r > 0, H[:, k, k] / safe, 1.0)
        sn[:, k] = np.where(r > 0, H[:, k + 1, k] / safe, 0.0)
        H[:, k, k] = r
        H[:, k + 1, k] = 0.0
        g[:, k + 1] = -sn[:, k] * g[:, k]
        g[:, k] = cs[:, k] * g[:, k]
        k += 1
        used[active] = k
        active &= (np.abs(g[:, k]) > atol) & (hn > 0)
    x = np.zeros_like(b)
    for s in range(ns):
        j = used[s]
        if j:
            coef = np.linalg.solve(np.triu(H[s, :j, :j]), g[s, :j])
            x[s] = np.array([v[s] for v in V[:j]]).T @ coef
    return x, k


def _flip(arr, signs):
    """Mirror the trailing three spatial axes for an octant."""
    sl = tuple(slice(None, None, s) for s in signs)
    return arr[(Ellipsis,) + sl]


class Sweeper:
    """Reusable sweep machinery for one mesh and quadrature."""

    def __init__(self, mesh: CartesianMesh, quadrature: AngularQuadrature,
                 max_passes: int = MAX_REFLECT_PASSES, tol: float = REFLECT_TOL):
        self.mesh = mesh
        self.quadrature = quadrature
        self.max_passes = max_passes
        self.tol = tol
        base, wb = quadrature.first_octant()
        self.weights = wb
        self.signs = octant_signs()
        widths = np.array(mesh.widths)
        a = base / widths  # (Mo, 3)
        self._ax, self._ay, self._az = (a[:, d][None, :, None, None] for d in range(3))
        self._asum = a.sum(axis=1)[None, :, None, None]

        nx, ny, nz = mesh.shape
        planes = {}
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    planes.setdefault(i + j + k, []).append((i, j, k))
        self._planes = [tuple(np.array(c) for c in zip(*planes[d])) for d in sorted(planes)]

        sign_index = {s: o for o, s in enumerate(self.signs)}
        faces = {0: ("xlo", "xhi"), 1: ("ylo", "yhi"), 2: ("zlo", "zhi")}
        bc = dict(zip(("xlo", "xhi", "ylo", "yhi", "zlo", "zhi"), mesh.boundary))
        # For each axis, the (octant, mirror octant) pairs whose incoming face
        # is reflecting.
        self._reflect = {}
        for axis in range(3):
            pairs = []
            for o, s in enumerate(self.signs):
                face = faces[axis][0] if s[axis] > 0 else faces[axis][1]
                if bc[face] == "reflect":
                    m = list(s)
                    m[axis] = -m[axis]
                    pairs.append((o, sign_index[tuple(m)], face))
            self._reflect[axis] = pairs
        self.reflecting = any(self._reflect.values())
        self.last_passes = 0

    def _single_pass(self, q_f, sig_f, bnd):
        nx, ny, nz = self.mesh.shape
        n_oct, ng = q_f.shape[:2]
        Mo = len(self.weights)
        P = np.zeros((n_oct, Mo, ng, nx + 1, ny + 1, nz + 1))
        if bnd is not None:
            P[:, :, :, 0, 1:, 1:] = bnd[0]
            P[:, :, :, 1:, 0, 1:] = bnd[1]
            P[:, :, :, 1:, 1:, 0] = bnd[2]
        ax, ay, az, asum = self._ax, self._ay, self._az, self._asum
        for I, J, K in self._planes:
            num = (q_f[:, None, :, I, J, K]
                   + ax * P[:, :, :, I, J + 1, K + 1]
                   + ay * P[:, :, :, I + 1, J, K + 1]
                   + az * P[:, :, :, I + 1, J + 1, K])
            P[:, :, :, I + 1, J + 1, K + 1] = num / (sig_f[:, None, :, I, J, K] + asum)
        return P[:, :, :, 1:, 1:, 1:]

    def _boundary_from(self, psi, bnd):
        """Incoming reflecting-face fluxes implied by the outgoing fluxes."""
        new = [b.copy() for b in bnd]
        for axis, pairs in self._reflect.items():
            for o, m, _ in pairs:
                if axis == 0:
                    new[0][o] = psi[m, :, :, -1, :, :]
                elif axis == 1:
                    new[1][o] = psi[m, :, :, :, -1, :]
                else:
                    new[2][o] = psi[m, :, :, :, :, -1]
        return new

    def sweep(self, source: np.ndarray, sigma_t: np.ndarray) -> np.ndarray:
        """Scalar flux from an isotropic source density, both ``(groups, cells)``."""
        shape = self.mesh.shape
        ng = source.shape[0]
        q = source.reshape((ng,) + shape) / FOUR_PI
        sig = sigma_t.reshape((ng,) + shape)
        q_f = np.stack([_flip(q, s) for s in self.signs])
        sig_f = np.stack([_flip(sig, s) for s in self.signs])

        if not self.reflecting:
            self.last_passes = 1
            return self._moments(self._single_pass(q_f, sig_f, None))

        nx, ny, nz = shape
        Mo = len(self.weights)
        shapes = [(8, Mo, ng, ny, nz), (8, Mo, ng, nx, nz), (8, Mo, ng, nx, ny)]
        sizes = [int(np.prod(s)) // ng for s in shapes]

        def to_groups(parts):
            # boundary arrays -> (ng, unknowns per group)
            return np.concatenate([np.moveaxis(a, 2, 0).reshape(ng, -1) for a in parts], axis=1)

        def from_groups(flat):
            parts = np.split(flat, np.cumsum(sizes)[:-1], axis=1)
            return [np.moveaxis(p.reshape((ng,) + s[:2] + s[3:]), 0, 2)
                    for p, s in zip(parts, shapes)]

        zero = [np.zeros(s) for s in shapes]

        def outgoing(qf, B):
            psi = self._single_pass(qf, sig_f, from_groups(B))
            return psi, to_groups(self._boundary_from(psi, zero))

        psi, f0 = outgoing(q_f, np.zeros((ng, sum(sizes))))
        phi = self._moments(psi)
        npass = 1
        target = self.tol * (1.0 + np.max(np.abs(phi), axis=1))
        if np.any(np.max(np.abs(f0), axis=1) > target):
            # The reflected fluxes solve B = K B + f0 with K the source-free
            # pass; GMRES on (I - K) B = f0, one pass per iteration.  Every
            # group has its own Krylov space and stopping test, so results do
            # not depend on which groups are swept together.
            q_zero = np.zeros_like(q_f)
            B, its = _group_gmres(lambda V: V - outgoing(q_zero, V)[1], f0, 0.5 * target,
                                  self.max_passes - 2)
            npass += its
            psi, fb = outgoing(q_f, B)
            npass += 1
            phi = self._moments(psi)
            change = np.abs(fb - B)
            bad = np.max(change, axis=1) > self.tol * (1.0 + np.max(np.abs(phi), axis=1))
            if np.any(bad):
                parts = from_groups(np.where(bad[:, None], change, 0.0))
                axis = int(np.argmax([p.max() for p in parts]))
                face = self._reflect[axis][0][2] if self._reflect[axis] else "?"
                raise SweepConvergenceError(
                    f"reflecting boundary iteration did not converge in {self.max_passes} "
                    f"passes (largest change {change.max():.3e} on face {face})"
                )
        self.last_passes = npass
        return phi

    def _moments(self, psi):
        """Weighted ordinate sum, mirrored back and reduced over octants."""
        phi_f = np.tensordot(self.weights, psi, axes=(0, 1))  # (8, ng, nx, ny, nz)
        phi = np.zeros(phi_f.shape[1:])
        for o, s in enumerate(self.signs):
            phi += _flip(phi_f[o], s)
        return phi.reshape(phi.shape[0], -1)


def transport_sweep(source, sigma_t, quadrature, mesh, **kw):
    """One-shot convenience wrapper around :class:`Sweeper`."""
    return Sweeper(mesh, quadrature, **kw).sweep(np.asarray(source, float),
                                                 np.asarray(sigma_t, float))
