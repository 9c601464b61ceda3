"""
Training a constrained two-layer network
========================================

Minimize the empirical Rayleigh quotient over the Softplus network class
and compare the result with the Galerkin reference.
"""

from barron_ground import CosineSeries, GalerkinConfig, TrainConfig, solve_ground_truth, stability_check, train

V = CosineSeries(1, {(0,): 1.0, (1,): 0.5})
truth = solve_ground_truth(V, GalerkinConfig(64, 1))

# width defaults to ceil(sqrt(n)); B defaults to a budget derived from u*
cfg = TrainConfig(n=1024, steps=200, refit_every=20, seed=0)
result = train(V, cfg, truth)
r = result.report

print("width m          :", result.net.m)
print("empirical E_n    :", result.best_loss)
print("population energy:", r.energy, " lambda0:", truth.lambda0)
print("excess energy    :", r.excess)
print("L2 / H1 distance to span(u*):", r.p_perp_l2, r.p_perp_h1)
print("loss after 1, 50, last step :", result.trace[0], result.trace[49], result.trace[-1])

# the energy excess controls the distance to the ground state
s = stability_check(r.excess, r.p_perp_l2, r.p_perp_h1, truth, 0.5, 1.5)
print("stability slacks (L2, H1):", s.l2_slack, s.h1_slack, " violated:", s.violated)
