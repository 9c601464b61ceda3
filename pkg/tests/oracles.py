"""Independent reference computations used by the tests.

None of these touch the package's Galerkin machinery.
"""
import numpy as np
from scipy.linalg import eigh_tridiagonal


def fd_neumann_lambda0(V, nodes: int) -> float:
    """Lowest eigenvalue of -u'' + V u on [0, 1] with Neumann ends.

    Cell-centred second-order differences; the reflected ghost cell makes the
    end rows ``(u_1 - u_0) / h^2``.  ``V`` is a vectorized callable of x.
    """
    h = 1.0 / nodes
    x = (np.arange(nodes) + 0.5) * h
    diag = np.full(nodes, 2.0 / h**2)
    diag[0] = diag[-1] = 1.0 / h**2
    diag += V(x)
    off = np.full(nodes - 1, -1.0 / h**2)
    return float(eigh_tridiagonal(diag, off, select="i", select_range=(0, 0), eigvals_only=True)[0])


def fd_richardson_lambda0(V, nodes: int = 10_000) -> float:
    """Second-order FD eigenvalue at ``nodes`` and ``nodes/2``, Richardson-extrapolated."""
    coarse = fd_neumann_lambda0(V, nodes // 2)
    fine = fd_neumann_lambda0(V, nodes)
    return (4.0 * fine - coarse) / 3.0
