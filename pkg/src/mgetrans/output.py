"""CSV writers for convergence histories and flux maps."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .problem import CartesianMesh

FIXED_HEADER = ["iter", "res_norm", "seconds"]
EIGEN_HEADER = ["outer", "k", "delta_k", "l2_fission", "linf_fission", "krylov_iters", "seconds"]
GS_HEADER = ["outer", "change", "krylov_iters", "seconds"]
FLUX_HEADER = ["g", "i", "j", "k", "flux"]


def _f(x) -> str:
    return repr(float(x))


def emit_convergence_csv(record, path) -> Path:
    """Write one row per recorded iteration; floats keep full precision."""
    path = Path(path)
    if record.kind == "eigen":
        if not record.outer:
            raise ValueError("empty convergence record")
        header = EIGEN_HEADER
        rows = [[i, _f(o["k"]), _f(o["delta_k"]), _f(o["l2_fission"]),
                 _f(o["linf_fission"]), o["krylov_iters"], _f(o["seconds"])]
                for i, o in enumerate(record.outer)]
    elif record.kind == "gs":
        if not record.outer:
            raise ValueError("empty convergence record")
        header = GS_HEADER
        rows = [[i, _f(o["change"]), o["krylov_iters"], _f(o["seconds"])]
                for i, o in enumerate(record.outer)]
    else:
        if not record.residuals:
            raise ValueError("empty convergence record")
        header = FIXED_HEADER
        rows = [[i, _f(r), _f(t)] for i, (r, t) in enumerate(zip(record.residuals, record.seconds))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def write_flux_output(phi: np.ndarray, mesh: CartesianMesh, path) -> Path:
    """Group-major, then lexicographic (i, j, k) cell rows."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim != 2 or phi.shape[1] != mesh.num_cells:
        raise ValueError(f"flux shape {phi.shape} does not match a {mesh.shape} mesh")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FLUX_HEADER)
        for g in range(phi.shape[0]):
            for c, (i, j, k) in enumerate(np.ndindex(mesh.shape)):
                w.writerow([g, i, j, k, _f(phi[g, c])])
    return path


def read_flux_output(path) -> np.ndarray:
    """Inverse of :func:`write_flux_output`; returns ``(groups, cells)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != FLUX_HEADER:
        raise ValueError(f"unexpected flux header {rows[0]}")
    data = rows[1:]
    G = 1 + max(int(r[0]) for r in data)
    shape = tuple(1 + max(int(r[d]) for r in data) for d in (1, 2, 3))
    phi = np.zeros((G, int(np.prod(shape))))
    for g, i, j, k, v in data:
        phi[int(g), np.ravel_multi_index((int(i), int(j), int(k)), shape)] = float(v)
    return phi


def write_manifest(manifest: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
