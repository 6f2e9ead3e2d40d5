"""Reader and writer for the bracketed-section problem file format.

Example::

    [mesh] 3 3 3 1.0 1.0 1.0
    [bc] vacuum vacuum vacuum vacuum vacuum vacuum
    [quadrature] 4
    [material 0]
    total 0 1.0
    scatter 0 0 0.45
    [cells] fill 0
    [source] group 0 1.0
    [solver] tol=1e-6 block=all sets=1
    [mge] enabled=true weight=1 relax=2 vcycles=2 depth=auto sn=same
"""
from __future__ import annotations

import re

import numpy as np

from .problem import (BOUNDARY_KINDS, CartesianMesh, ConfigurationError, EigenConfig,
                      MaterialCrossSections, ProblemSpec, SolverConfig, SourceSpec,
                      validate_material)
from .quadrature import SUPPORTED_ORDERS

_HEADER = re.compile(r"^\[\s*([A-Za-z]+)\s*([^\]]*)\]\s*(.*)$")


class ProblemFileError(ValueError):
    pass


def _bool(text, lineno):
    low = text.lower()
    if low in ("true", "on", "yes", "1"):
        return True
    if low in ("false", "off", "no", "0"):
        return False
    raise ProblemFileError(f"line {lineno}: expected true/false, got {text!r}")


def _num(text, kind, lineno):
    try:
        return kind(text)
    except ValueError:
        raise ProblemFileError(f"line {lineno}: expected {kind.__name__}, got {text!r}") from None


def _keyvals(tokens, lineno):
    out = {}
    for tok in tokens:
        if "=" not in tok:
            raise ProblemFileError(f"line {lineno}: expected key=value, got {tok!r}")
        k, v = tok.split("=", 1)
        out[k.strip().lower()] = (v.strip(), lineno)
    return out


def parse_problem_file(text: str) -> ProblemSpec:
    """Parse and validate problem-file text."""
    sections: list[tuple[str, str, int, list]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            name, arg, rest = m.group(1).lower(), m.group(2).strip(), m.group(3).strip()
            sections.append((name, arg, lineno, []))
            if rest:
                sections[-1][3].append((lineno, rest.split()))
            continue
        if line.startswith("["):
            raise ProblemFileError(f"line {lineno}: malformed section header {line!r}")
        if not sections:
            raise ProblemFileError(f"line {lineno}: content before any section header")
        sections[-1][3].append((lineno, line.split()))

    mesh_args = None
    bc = ("vacuum",) * 6
    sn = 4
    raw_mats: dict = {}
    fill = None
    cell_ids: list = []
    source: dict = {}
    solver_kv: dict = {}
    mge_kv: dict = {}
    eigen_kv: dict = {}

    for name, arg, hline, body in sections:
        if name == "mesh":
            for lineno, tok in body:
                if len(tok) != 6:
                    raise ProblemFileError(f"line {lineno}: [mesh] needs nx ny nz dx dy dz")
                mesh_args = ([_num(t, int, lineno) for t in tok[:3]]
                             + [_num(t, float, lineno) for t in tok[3:]], lineno)
        elif name == "bc":
            for lineno, tok in body:
                if len(tok) != 6 or any(t not in BOUNDARY_KINDS for t in tok):
                    raise ProblemFileError(
                        f"line {lineno}: [bc] needs six entries from {BOUNDARY_KINDS}")
                bc = tuple(tok)
        elif name == "quadrature":
            for lineno, tok in body:
                sn = _num(tok[0], int, lineno)
        elif name == "material":
            mid = _num(arg, int, hline)
            entries = raw_mats.setdefault(mid, [])
            for lineno, tok in body:
                kind = tok[0].lower()
                nargs = {"total": 2, "scatter": 3, "nufission": 2, "chi": 2}.get(kind)
                if nargs is None or len(tok) != nargs + 1:
                    raise ProblemFileError(f"line {lineno}: bad material entry {' '.join(tok)!r}")
                idx = [_num(t, int, lineno) for t in tok[1:-1]]
                if min(idx) < 0:
                    raise ProblemFileError(f"line {lineno}: negative group index")
                entries.append((kind, idx, _num(tok[-1], float, lineno), lineno))
        elif name == "cells":
            for lineno, tok in body:
                if tok[0] == "fill" and len(tok) == 2:
                    fill = (_num(tok[1], int, lineno), lineno)
                elif tok[0] == "cell" and len(tok) == 5:
                    cell_ids.append(([_num(t, int, lineno) for t in tok[1:]], lineno))
                else:
                    raise ProblemFileError(f"line {lineno}: bad [cells] entry")
        elif name == "source":
            for lineno, tok in body:
                if tok[0] != "group" or len(tok) != 3:
                    raise ProblemFileError(f"line {lineno}: [source] entries are 'group g v'")
                source[_num(tok[1], int, lineno)] = _num(tok[2], float, lineno)
        elif name in ("solver", "mge", "eigen"):
            target = {"solver": solver_kv, "mge": mge_kv, "eigen": eigen_kv}[name]
            for lineno, tok in body:
                target.update(_keyvals(tok, lineno))
        else:
            raise ProblemFileError(f"line {hline}: unknown section [{name}]")

    if mesh_args is None:
        raise ProblemFileError("missing [mesh] section")
    if sn not in SUPPORTED_ORDERS:
        raise ProblemFileError(f"unsupported quadrature order S{sn}")
    if not raw_mats:
        raise ProblemFileError("no [material] sections")

    G = 1 + max(max(idx) for ents in raw_mats.values() for _, idx, _, _ in ents)
    if source:
        G = max(G, 1 + max(source))
    materials = {}
    for mid, ents in raw_mats.items():
        st, ss, nf, chi = np.zeros(G), np.zeros((G, G)), np.zeros(G), np.zeros(G)
        for kind, idx, val, lineno in ents:
            if kind == "total":
                st[idx[0]] = val
            elif kind == "scatter":
                ss[idx[0], idx[1]] = val
            elif kind == "nufission":
                nf[idx[0]] = val
            else:
                chi[idx[0]] = val
        xs = MaterialCrossSections(st, ss, nf, chi)
        problems = validate_material(xs)
        if problems:
            raise ProblemFileError(f"material {mid}: " + "; ".join(problems))
        materials[mid] = xs

    (nx, ny, nz, dx, dy, dz), mline = mesh_args
    ids = np.full((nx, ny, nz), fill[0] if fill else min(materials), dtype=int)
    for (i, j, k, mid), lineno in cell_ids:
        if not (0 <= i < nx and 0 <= j < ny and 0 <= k < nz):
            raise ProblemFileError(f"line {lineno}: cell ({i}, {j}, {k}) outside the mesh")
        ids[i, j, k] = mid
    unknown = set(np.unique(ids).tolist()) - set(materials)
    if unknown:
        raise ProblemFileError(f"unknown material reference {sorted(unknown)}")
    try:
        mesh = CartesianMesh(nx, ny, nz, dx, dy, dz, ids, bc)
    except ValueError as err:
        raise ProblemFileError(f"line {mline}: {err}") from None

    q = np.zeros(G)
    for g, v in source.items():
        q[g] = v
    try:
        src = SourceSpec(q)
        solver = _solver_config(solver_kv, mge_kv)
        eigen, eigen_on = _eigen_config(eigen_kv)
        if solver.pc_sn is not None and solver.pc_sn not in SUPPORTED_ORDERS:
            raise ProblemFileError(f"unsupported preconditioner quadrature order S{solver.pc_sn}")
    except ConfigurationError as err:
        raise ProblemFileError(str(err)) from None
    except ValueError as err:
        raise ProblemFileError(str(err)) from None
    return ProblemSpec(mesh, materials, src, sn, solver, eigen, eigen_on)


def _solver_config(solver_kv, mge_kv) -> SolverConfig:
    kw = {}
    for key, (val, lineno) in solver_kv.items():
        if key == "tol":
            kw["tol"] = _num(val, float, lineno)
        elif key == "max_iters":
            kw["max_iters"] = _num(val, int, lineno)
        elif key == "restart":
            kw["restart"] = None if val == "none" else _num(val, int, lineno)
        elif key == "block":
            if val not in ("all", "upscatter"):
                raise ProblemFileError(f"line {lineno}: block must be all or upscatter")
            kw["block_mode"] = val
        elif key == "sets":
            kw["num_sets"] = _num(val, int, lineno)
        else:
            raise ProblemFileError(f"line {lineno}: unknown [solver] key {key!r}")
    for key, (val, lineno) in mge_kv.items():
        if key == "enabled":
            kw["precond"] = _bool(val, lineno)
        elif key == "weight":
            kw["weight"] = _num(val, float, lineno)
        elif key == "relax":
            kw["relax"] = _num(val, int, lineno)
        elif key == "vcycles":
            kw["vcycles"] = _num(val, int, lineno)
        elif key == "depth":
            kw["depth"] = "auto" if val == "auto" else _num(val, int, lineno)
        elif key == "sn":
            kw["pc_sn"] = None if val == "same" else _num(val, int, lineno)
        else:
            raise ProblemFileError(f"line {lineno}: unknown [mge] key {key!r}")
    return SolverConfig(**kw)


def _eigen_config(eigen_kv):
    kw, enabled = {}, False
    names = {"ktol": ("k_tol", float), "k0": ("k0", float), "l2tol": ("l2_tol", float),
             "linftol": ("linf_tol", float), "max_outer": ("max_outer", int)}
    for key, (val, lineno) in eigen_kv.items():
        if key == "enabled":
            enabled = _bool(val, lineno)
        elif key in names:
            field_name, kind = names[key]
            kw[field_name] = _num(val, kind, lineno)
        else:
            raise ProblemFileError(f"line {lineno}: unknown [eigen] key {key!r}")
    return EigenConfig(**kw), enabled


def format_problem(spec: ProblemSpec) -> str:
    """Problem-file text that parses back to an equivalent ProblemSpec."""
    m = spec.mesh
    out = [f"[mesh] {m.nx} {m.ny} {m.nz} {m.dx!r} {m.dy!r} {m.dz!r}",
           "[bc] " + " ".join(m.boundary),
           f"[quadrature] {spec.sn_order}"]
    for mid in sorted(spec.materials):
        xs = spec.materials[mid]
        out.append(f"[material {mid}]")
        out += [f"total {g} {float(v)!r}" for g, v in enumerate(xs.sigma_t)]
        for g, gp in zip(*np.nonzero(xs.sigma_s)):
            out.append(f"scatter {g} {gp} {float(xs.sigma_s[g, gp])!r}")
        out += [f"nufission {g} {float(v)!r}" for g, v in enumerate(xs.nu_sigma_f) if v]
        out += [f"chi {g} {float(v)!r}" for g, v in enumerate(xs.chi) if v]
    ids = np.unique(m.material_id)
    if len(ids) == 1:
        out.append(f"[cells] fill {ids[0]}")
    else:
        out.append("[cells]")
        for (i, j, k), mid in np.ndenumerate(m.material_id):
            out.append(f"cell {i} {j} {k} {mid}")
    q = spec.source.q if spec.source.q.ndim == 1 else spec.source.q.mean(axis=1)
    out.append("[source]")
    out += [f"group {g} {float(v)!r}" for g, v in enumerate(q) if v]
    s = spec.solver
    out.append(f"[solver] tol={s.tol!r} max_iters={s.max_iters} "
               f"restart={s.restart if s.restart else 'none'} block={s.block_mode} "
               f"sets={s.num_sets}")
    out.append(f"[mge] enabled={'true' if s.precond else 'false'} weight={s.weight!r} "
               f"relax={s.relax} vcycles={s.vcycles} depth={s.depth} "
               f"sn={s.pc_sn if s.pc_sn else 'same'}")
    e = spec.eigen
    out.append(f"[eigen] enabled={'true' if spec.eigen_enabled else 'false'} "
               f"ktol={e.k_tol!r} k0={e.k0!r} l2tol={e.l2_tol!r} linftol={e.linf_tol!r} "
               f"max_outer={e.max_outer}")
    return "\n".join(out) + "\n"
