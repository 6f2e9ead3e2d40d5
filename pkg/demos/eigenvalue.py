"""Power iteration on the fissioning fixture, with and without MGE.

The outer iteration is unchanged by preconditioning (same count, same k);
only the Krylov work inside each outer iteration drops.
"""
from mgetrans import SolverConfig, dominance_ratio_estimate, fixture_problem, power_iteration

spec = fixture_problem(fission=True)
for precond in (False, True):
    k, gamma, phi, rec = power_iteration(spec, SolverConfig(precond=precond))
    print(f"MGE {'on ' if precond else 'off'}: k = {k:.8f}, {rec.outer_iterations} outers, "
          f"{rec.krylov_iterations} Krylov iterations, dominance ratio "
          f"{dominance_ratio_estimate(rec):.3f}")
