"""Independent finite-difference oracle for the vertical transport PDE.

Solves p_t = D p_zz + v p_z on [0, h] (v = 2 D u, drift directed toward
z = 0) with Robin boundary conditions

    p'(0) = (kappa - 2u) p(0),      p'(h) = -(kappa + 2u) p(h),

by Crank-Nicolson on a uniform grid with ghost-node boundary closure and
a few startup implicit-Euler half steps to damp the rough delta initial
condition. Written against the PDE statement only; shares no code with
the eigenfunction series implementation it validates.
"""

import numpy as np
from scipy.linalg import solve_banded


def solve_drift_diffusion(h, D, u, kappa, z0, times, nz=400, dt=2.5e-4):
    """Return (z_grid, list of densities) at the requested times.

    z0 should coincide with a grid node so the discrete delta carries
    unit trapezoidal mass exactly.
    """
    times = np.asarray(times, dtype=float)
    z = np.linspace(0.0, h, nz)
    dz = z[1] - z[0]
    v = 2.0 * D * u
    g0 = kappa - 2.0 * u
    gh = -(kappa + 2.0 * u)

    # tridiagonal operator A p = D p'' + v p' with ghost-node closure
    lower = np.full(nz, D / dz ** 2 - v / (2 * dz))
    diag = np.full(nz, -2.0 * D / dz ** 2)
    upper = np.full(nz, D / dz ** 2 + v / (2 * dz))
    diag[0] = -2.0 * D / dz ** 2 - 2.0 * D * g0 / dz + v * g0
    upper[0] = 2.0 * D / dz ** 2
    diag[-1] = -2.0 * D / dz ** 2 + 2.0 * D * gh / dz + v * gh
    lower[-1] = 2.0 * D / dz ** 2

    def implicit_matrix(step):
        # rows: upper, diag, lower for solve_banded((1, 1), ...)
        ab = np.zeros((3, nz))
        ab[0, 1:] = -step * upper[:-1]
        ab[1, :] = 1.0 - step * diag
        ab[2, :-1] = -step * lower[1:]
        return ab

    def apply_A(p):
        out = diag * p
        out[:-1] += upper[:-1] * p[1:]
        out[1:] += lower[1:] * p[:-1]
        return out

    j = int(round(z0 / dz))
    if abs(j * dz - z0) > 1e-9 * h:
        raise ValueError("z0 must lie on the spatial grid")
    p = np.zeros(nz)
    p[j] = 1.0 / dz if 0 < j < nz - 1 else 2.0 / dz

    t = 0.0
    out = []
    targets = iter(np.sort(times))
    target = next(targets, None)
    # four implicit-Euler half steps smooth the delta before CN takes over
    ab_ie = implicit_matrix(dt / 2)
    for _ in range(4):
        p = solve_banded((1, 1), ab_ie, p)
        t += dt / 2
    ab_cn = implicit_matrix(dt / 2)
    while target is not None:
        while t < target - 1e-12:
            rhs = p + (dt / 2) * apply_A(p)
            p = solve_banded((1, 1), ab_cn, rhs)
            t += dt
        out.append(p.copy())
        target = next(targets, None)
    return z, out
