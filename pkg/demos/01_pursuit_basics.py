"""Greedy sparse approximation from the ground up.

Builds a small random dictionary, codes a few signals with OMP, checks the
greedy answer against the exhaustive optimum, and shows how a restricted
candidate set changes the solve.
"""

import numpy as np

from crossdict import PursuitConfig, brute_force_best_k, normalize_atoms, omp

rng = np.random.default_rng(0)

# a mildly overcomplete dictionary: 8-dimensional signals, 20 unit-norm atoms
dictionary = normalize_atoms(rng.standard_normal((8, 20)))

print("=== exact 2-sparse signal ===")
truth = {3: 1.5, 11: -0.7}
y = sum(c * dictionary.atom(j) for j, c in truth.items())
result = omp(dictionary, y, PursuitConfig(sparsity_budget=4))
print(f"planted support {sorted(truth)}, recovered {list(result.code.support)}")
print(f"residual norm {result.residual_norm:.2e} after {result.iterations} picks")
print(f"atom scans performed: {result.atom_scan_count}")

print("\n=== greedy vs exhaustive on a dense signal ===")
y = rng.standard_normal(8)
greedy = omp(dictionary, y, PursuitConfig(2, residual_tolerance=0.0))
exact = brute_force_best_k(dictionary, y, 2)
print(f"OMP support {list(greedy.code.support)} residual {greedy.residual_norm:.4f}")
print(f"best possible {list(exact.code.support)} residual {exact.residual_norm:.4f}")
print("greedy is optimal here" if greedy.code.support == exact.code.support
      else "greedy picked a slightly worse support, as it sometimes must")

print("\n=== restricting the candidate atoms ===")
allowed = frozenset({2, 4, 6, 8, 10})
restricted = omp(dictionary, y, PursuitConfig(3, allowed_support=allowed))
print(f"candidates {sorted(allowed)} -> support {list(restricted.code.support)}")
print(f"scans: {restricted.atom_scan_count} (full scan would use "
      f"{greedy.atom_scan_count} for budget 2)")
