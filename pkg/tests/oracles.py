"""Independent reference solvers used by the tests."""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from higgslab.geometry import Domain


def dirichlet_compact_poisson(dom: Domain, boundary, rhs=None):
    """Solve the compact 9-point ``lap u = rhs`` with ``u = boundary`` off the interior.

    Assembled node by node from the stencil ``[1 4 1; 4 -20 4; 1 4 1] / (6 h^2)``.
    """
    n = dom.n_x
    inner = dom.interior
    index = {}
    for i in range(n):
        for j in range(n):
            if inner[i, j]:
                index[(i, j)] = len(index)
    rows, cols, vals = [], [], []
    b = np.zeros(len(index))
    w = {(0, 0): -20.0}
    for d in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        w[d] = 4.0
    for d in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        w[d] = 1.0
    scale = 1.0 / (6.0 * dom.h ** 2)
    for (i, j), k in index.items():
        if rhs is not None:
            b[k] = rhs[i, j]
        for (di, dj), wt in w.items():
            nb = (i + di, j + dj)
            if nb in index:
                rows.append(k)
                cols.append(index[nb])
                vals.append(wt * scale)
            else:
                b[k] -= wt * scale * boundary[nb]
    A = sp.csr_matrix((vals, (rows, cols)), shape=(len(index), len(index)))
    u = np.array(boundary, dtype=float).copy()
    sol = spla.spsolve(A.tocsc(), b)
    for (i, j), k in index.items():
        u[i, j] = sol[k]
    return u
