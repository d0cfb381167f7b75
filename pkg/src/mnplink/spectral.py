"""Sturm-Liouville eigenproblem for drift-diffusion in a slab.

The vertical concentration problem with drift parameter u = v_m/(2D),
adsorption parameter kappa = a_c/D and domain [0, L] reduces, after an
exponential substitution, to a self-adjoint eigenproblem with Robin
boundary conditions. Real eigenvalues s_n (n >= 1) solve

    tan(s L) (s^2 - kappa^2 + u^2) = 2 s kappa,

one root per interval (n pi / L, (n+1) pi / L). The ground mode changes
character at the critical drift u_crit = sqrt(2 kappa / L + kappa^2):
below it the ground eigenvalue is a trigonometric root in (0, pi/L),
above it the eigenvalue is imaginary, s_0 = i sigma, with sigma solving

    tanh(sigma L) (u^2 - kappa^2 - sigma^2) = 2 sigma kappa,

and exactly at the transition the ground eigenfunction is affine.

All root finding is bisection inside analytically constructed brackets;
the characteristic equations are rewritten in pole-free form so the
bracket endpoints have known signs. The batch entry point solves whole
arrays of (u, kappa) pairs at once, which is what makes Monte Carlo
averaging over particle sizes affordable.
"""

from dataclasses import dataclass, field

import numpy as np

# below kappa*L = 1e-12 the adsorbing perturbation of the spectrum is far
# beneath double precision; route to the exact reflecting-wall spectrum
_TINY_KAPPA_L = 1e-12

TRIGONOMETRIC = "trigonometric"
HYPERBOLIC = "hyperbolic"
AFFINE = "affine"

_BRANCH_NAMES = (TRIGONOMETRIC, HYPERBOLIC, AFFINE)


@dataclass(frozen=True)
class BoundaryParams:
    """Drift parameter u [1/m], adsorption parameter kappa [1/m], extent [m]."""

    drift_param: float
    adsorption_param: float
    length: float

    def __post_init__(self):
        if self.drift_param < 0:
            raise ValueError("drift_param must be >= 0")
        if self.adsorption_param < 0:
            raise ValueError("adsorption_param must be >= 0")
        if self.length <= 0:
            raise ValueError("length must be > 0")


@dataclass(frozen=True)
class GroundMode:
    """Ground-mode branch and its eigenvalue parameter.

    value is s_0 for the trigonometric branch, sigma for the hyperbolic
    branch (the squared eigenvalue is -sigma^2), and None for affine.
    """

    branch: str
    value: float | None


@dataclass
class EigenSystem:
    """Spectrum of one (u, kappa, length) problem, truncated at N.

    norms[0] belongs to the ground mode, norms[n] to s_n. Expansion
    coefficients for a point source are attached on demand.
    """

    params: BoundaryParams
    ground: GroundMode
    higher_eigenvalues: np.ndarray
    norms: np.ndarray
    truncation: int
    coefficients: np.ndarray | None = None
    source_position: float | None = None


@dataclass
class BatchEigenSystems:
    """Vectorized spectra for arrays of (u, kappa) sharing one domain.

    branch codes: 0 trigonometric, 1 hyperbolic, 2 affine. ground holds
    s_0 or sigma (0 for affine rows). higher has shape (M, N).
    """

    drift_param: np.ndarray
    adsorption_param: np.ndarray
    length: float
    truncation: int
    branch: np.ndarray
    ground: np.ndarray
    higher: np.ndarray
    norm_ground: np.ndarray
    norm_higher: np.ndarray


def critical_drift(params):
    """u_crit = sqrt(2 kappa / L + kappa^2); ground branch switches here."""
    k = params.adsorption_param
    return np.sqrt(2.0 * k / params.length + k * k)


def _char_trig(x, a, b):
    # pole-free form of tan(x)(x^2 - a^2 + b^2) = 2 a x in units of 1/L
    return np.sin(x) * (x * x - a * a + b * b) - 2.0 * a * x * np.cos(x)


def _char_hyp(y, a, b):
    return np.tanh(y) * (b * b - a * a - y * y) - 2.0 * a * y


def _bisect(f, lo, hi, move_hi, iters=90):
    # move_hi(value) says whether the midpoint replaces the upper bound
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        cond = move_hi(f(mid))
        hi = np.where(cond, mid, hi)
        lo = np.where(cond, lo, mid)
    return 0.5 * (lo + hi)


def _trig_norm(s, alpha, L):
    return (2.0 * s * (L * (s * s + alpha * alpha) - alpha)
            + 2.0 * s * alpha * np.cos(2.0 * L * s)
            + (s * s - alpha * alpha) * np.sin(2.0 * L * s)) / (4.0 * s ** 3)


def _hyp_norm(sig, alpha, L):
    # exponential form of the cosh/sinh combination; the e^{+2 sig L}
    # coefficient vanishes identically as alpha -> sig (reflecting limit),
    # which the naive cosh - sinh difference cannot represent in doubles
    X = 2.0 * sig * L
    c_plus = -0.5 * (sig - alpha) ** 2
    c_minus = 0.5 * (sig + alpha) ** 2
    return -(2.0 * sig * ((alpha * alpha - sig * sig) * L - alpha)
             + c_plus * np.exp(X) + c_minus * np.exp(-X)) / (4.0 * sig ** 3)


def _affine_norm(alpha, L):
    return L - alpha * L ** 2 + alpha ** 2 * L ** 3 / 3.0


def solve_eigenvalues_batch(u, kappa, length, count):
    """Solve arrays of eigenproblems sharing one domain length.

    u and kappa broadcast against each other; returns BatchEigenSystems
    with ground branch, ground value, N higher eigenvalues and all norms.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    u, kappa = np.broadcast_arrays(u, kappa)
    u = np.ascontiguousarray(u, dtype=float)
    kappa = np.ascontiguousarray(kappa, dtype=float)
    if np.any(u < 0) or np.any(kappa < 0) or length <= 0 or count < 0:
        raise ValueError("require u >= 0, kappa >= 0, length > 0, count >= 0")
    M, N = u.size, int(count)
    L = float(length)
    a = kappa * L
    b = u * L
    bc = np.sqrt(2.0 * a + a * a)  # u_crit * L
    tiny = a < _TINY_KAPPA_L

    affine = np.where(bc > 0, np.abs(b - bc) < 1e-6 * bc, b < 1e-6 * L)
    hyp = ~affine & (b > bc)
    trig = ~affine & ~hyp
    # with kappa ~ 0 and u below u_crit everything is affine to double precision
    affine |= trig & tiny
    trig &= ~tiny

    branch = np.full(M, 2, dtype=np.int8)
    branch[trig] = 0
    branch[hyp] = 1
    ground = np.zeros(M)

    if np.any(trig):
        at, bt = a[trig], b[trig]
        # G(0+) < 0 below the critical drift, G(pi) = 2 a pi > 0
        x = _bisect(lambda m: _char_trig(m, at, bt),
                    np.zeros(at.size), np.full(at.size, np.pi),
                    lambda g: g > 0)
        ground[trig] = x / L
    if np.any(hyp):
        sel = hyp & ~tiny
        if np.any(sel):
            ah, bh = a[sel], b[sel]
            # H(0+) > 0 above the critical drift, H(b) = -a^2 tanh b - 2ab < 0
            y = _bisect(lambda m: _char_hyp(m, ah, bh),
                        np.zeros(ah.size), bh.copy(),
                        lambda g: g < 0)
            ground[sel] = y / L
        sel = hyp & tiny
        ground[sel] = u[sel]  # reflecting walls: sigma = u exactly

    higher = np.empty((M, N))
    if N > 0:
        n = np.arange(1, N + 1)
        if np.any(~tiny):
            a2 = a[~tiny, None]
            b2 = b[~tiny, None]
            lo = np.broadcast_to(n * np.pi, (a2.shape[0], N)).copy()
            hi = lo + np.pi
            # sign of the characteristic at the right endpoint (n+1) pi
            rs = np.where(n % 2 == 0, 1.0, -1.0)
            x = _bisect(lambda m: _char_trig(m, a2, b2), lo, hi,
                        lambda g: g * rs >= 0)
            higher[~tiny] = x / L
        if np.any(tiny):
            higher[tiny] = n * np.pi / L

    alpha = u - kappa
    norm_ground = np.empty(M)
    norm_ground[affine] = _affine_norm(alpha[affine], L)
    if np.any(trig):
        norm_ground[trig] = _trig_norm(ground[trig], alpha[trig], L)
    if np.any(hyp):
        norm_ground[hyp] = _hyp_norm(ground[hyp], alpha[hyp], L)
    norm_higher = (_trig_norm(higher, alpha[:, None], L) if N > 0
                   else np.empty((M, 0)))

    return BatchEigenSystems(drift_param=u, adsorption_param=kappa,
                             length=L, truncation=N, branch=branch,
                             ground=ground, higher=higher,
                             norm_ground=norm_ground, norm_higher=norm_higher)


_CACHE: dict = {}
_CACHE_LIMIT = 1024


def _cache_key(params, count):
    return (f"{params.drift_param:.12e}", f"{params.adsorption_param:.12e}",
            f"{params.length:.12e}", int(count))


def solve_eigenvalues(params, count):
    """Solve one eigenproblem, with memoization on (u, kappa, L, N)."""
    key = _cache_key(params, count)
    hit = _CACHE.get(key)
    if hit is not None:
        return hit
    batch = solve_eigenvalues_batch(params.drift_param, params.adsorption_param,
                                    params.length, count)
    branch = _BRANCH_NAMES[batch.branch[0]]
    value = None if branch == AFFINE else float(batch.ground[0])
    system = EigenSystem(params=params,
                         ground=GroundMode(branch=branch, value=value),
                         higher_eigenvalues=batch.higher[0].copy(),
                         norms=np.concatenate(([batch.norm_ground[0]],
                                               batch.norm_higher[0])),
                         truncation=int(count))
    if len(_CACHE) >= _CACHE_LIMIT:
        _CACHE.clear()
    _CACHE[key] = system
    return system


def eigenfunction(system, n, pos):
    """Evaluate Z_n at positions in [0, length]; Z_n(0) = 1 on every branch."""
    if n < 0 or n > system.truncation:
        raise IndexError(f"mode index {n} out of range 0..{system.truncation}")
    pos = np.asarray(pos, dtype=float)
    if np.any(pos < -1e-15) or np.any(pos > system.params.length * (1 + 1e-12)):
        raise ValueError("position outside the domain")
    beta = system.params.adsorption_param - system.params.drift_param
    if n >= 1:
        s = system.higher_eigenvalues[n - 1]
        return np.cos(s * pos) + (beta / s) * np.sin(s * pos)
    g = system.ground
    if g.branch == TRIGONOMETRIC:
        return np.cos(g.value * pos) + (beta / g.value) * np.sin(g.value * pos)
    if g.branch == HYPERBOLIC:
        # exponential form; exact in the reflecting limit beta = -sigma
        r = beta / g.value
        return (0.5 * (1.0 + r) * np.exp(g.value * pos)
                + 0.5 * (1.0 - r) * np.exp(-g.value * pos))
    return 1.0 + beta * pos


def mode_norm(system, n):
    """Closed-form squared L2 norm of Z_n over the domain [m]."""
    if n < 0 or n > system.truncation:
        raise IndexError(f"mode index {n} out of range 0..{system.truncation}")
    return float(system.norms[n])


def expansion_coefficients(system, source):
    """a_n = Z_n(source) / ||Z_n||^2; attached to the system and returned."""
    if source < 0 or source > system.params.length:
        raise ValueError("source outside the domain")
    coeffs = np.array([float(eigenfunction(system, n, source)) / system.norms[n]
                       for n in range(system.truncation + 1)])
    system.coefficients = coeffs
    system.source_position = float(source)
    return coeffs


def y_eigensystem(width, kappa, count, source=0.0):
    """Driftless lateral eigensystem on [0, w] in the shifted coordinate.

    The physical lateral coordinate y in [-w/2, w/2] maps to y + w/2;
    source is the physical release coordinate y_0.
    """
    if abs(source) > width / 2:
        raise ValueError("source outside the channel width")
    params = BoundaryParams(drift_param=0.0, adsorption_param=kappa, length=width)
    system = solve_eigenvalues(params, count)
    expansion_coefficients(system, source + width / 2)
    return system
