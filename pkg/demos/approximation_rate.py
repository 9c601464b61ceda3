"""
Approximating a fixed target in H1
==================================

Fit networks of growing width m to a smooth cosine target in the H1 norm
and compare the error with the O(1/sqrt(m)) approximation bound.
"""

from barron_ground import CosineSeries, approximation_check

target = CosineSeries(1, {(0,): 1.0, (1,): 0.3, (2,): -0.1})

rows = approximation_check(target, [4, 8, 16, 32], seeds=[0, 1], steps=300, refit_every=50)
for row in rows:
    print(f"m={row.m:3d}  best={row.best_error:.3e}  median={row.median_error:.3e}  bound={row.eta:.3e}")
