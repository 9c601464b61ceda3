"""
Generalization bounds for the network class
===========================================

Tabulate the envelope constants, Dudley bounds on the Rademacher
complexities and the resulting deviation terms as the sample size grows.
The oracle right-hand side is only meaningful once xi1 and xi3 drop below 1.
"""

from barron_ground import ClassParams, bounds_report

p = ClassParams(B=0.25, m=64, d=1, V_max=1.5, V_min=0.5)

print(f"{'n':>14} {'R1':>10} {'R2':>10} {'xi1':>10} {'xi3':>10}  status")
for n in (10**4, 10**6, 10**8, 10**10, 10**12):
    rep = bounds_report(p, n, 0.1, approx_gap=0.01)
    print(f"{n:>14d} {rep.rademacher_bound_1:10.4g} {rep.rademacher_bound_2:10.4g} "
          f"{rep.xi1:10.4g} {rep.xi3:10.4g}  {rep.status}")

rep = bounds_report(p, 10**12, 0.1, approx_gap=0.01)
print("envelopes M_F, M_1, M_2:", rep.M_F, rep.M_1, rep.M_2)
print("Lipschitz constants    :", rep.Lambda1, rep.Lambda2)
print("oracle right-hand side :", rep.oracle_rhs)
