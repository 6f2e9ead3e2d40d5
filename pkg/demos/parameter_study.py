"""GMRES iteration counts on the 10-group upscatter fixture.

Iteration counts over the Richardson weight, relaxations and V-cycles: more
relaxations and cycles mean fewer Krylov iterations, and a large Richardson
weight eventually makes the preconditioner worse than none at all.
"-" marks a run that did not converge within 30 iterations.
"""
from mgetrans import SolverConfig, fixture_problem, solve_fixed_source


def count(spec, **kw):
    _, rec = solve_fixed_source(spec, SolverConfig(tol=1e-6, max_iters=30, **kw))
    return rec.krylov_iterations if rec.converged else "-"


for boundary in ("vacuum", "reflect"):
    spec = fixture_problem(boundary=boundary)
    print(f"\n{boundary} fixture, unpreconditioned: {count(spec)} iterations")
    print("  w    r1v1  r2v2  r3v3")
    for w in (1.0, 1.3, 1.5, 2.0, 2.5):
        row = [count(spec, precond=True, weight=w, relax=r, vcycles=r) for r in (1, 2, 3)]
        print(f"  {w:<4} " + "  ".join(f"{c:>4}" for c in row))
    depths = {d: count(spec, precond=True, depth=d) for d in range(1, 6)}
    print("  depth ->", depths)
