"""Analytical channel model for a point release in a rectangular duct.

The spatial concentration factorizes into an unbounded Gaussian along
the flow axis (x) and two slab eigenfunction series across the duct
(y, z). This module assembles axis densities, per-axis observation
probabilities over the receiver box, their product, the single-mode
quasi-steady approximation, closed forms for the reflecting and
adsorbing wall limits, and the impulse response with optional Monte
Carlo averaging over the log-normal particle size law.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from . import physics, spectral


@dataclass(frozen=True)
class ChannelGeometry:
    """Duct cross section, release point, receiver box, flow, adsorption.

    The release point is (-tx_distance, tx_lateral, tx_height); the
    receiver box spans [-c_x/2, c_x/2] x [-c_y/2, c_y/2] x [0, c_z].
    """

    height: float
    width: float
    tx_distance: float
    tx_height: float
    tx_lateral: float
    rx_extent: tuple
    flow: float
    adsorption: float

    def __post_init__(self):
        cx, cy, cz = self.rx_extent
        ok = (self.height > 0 and self.width > 0 and cx > 0
              and 0 < cy <= self.width and 0 < cz <= self.height
              and 0 <= self.tx_height <= self.height
              and abs(self.tx_lateral) <= self.width / 2
              and self.flow >= 0 and self.adsorption >= 0)
        if not ok:
            raise ValueError("invalid channel geometry")


@dataclass(frozen=True)
class ImpulseResponse:
    """Expected receiver counts at sample instants for one pulse."""

    times: np.ndarray
    mean_counts: np.ndarray
    n_tx: int
    mode: str


def axial_pdf(x, t, diffusion, geometry):
    """Gaussian marginal along the flow axis [1/m]."""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be > 0")
    mean = -geometry.tx_distance + geometry.flow * np.asarray(t, dtype=float)
    var = 2.0 * diffusion * np.asarray(t, dtype=float)
    return np.exp(-(np.asarray(x, dtype=float) - mean) ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)


def axial_observation(t, diffusion, geometry):
    """Probability that the axial coordinate lies in the receiver window."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("t must be > 0")
    cx = geometry.rx_extent[0]
    mean = -geometry.tx_distance + geometry.flow * t
    sig = np.sqrt(4.0 * diffusion * t)
    return 0.5 * (erf((mean + cx / 2) / sig) - erf((mean - cx / 2) / sig))


def _as_arrays(system):
    """Represent a scalar EigenSystem as length-1 batch arrays."""
    branch = {spectral.TRIGONOMETRIC: 0, spectral.HYPERBOLIC: 1,
              spectral.AFFINE: 2}[system.ground.branch]
    ground = 0.0 if system.ground.value is None else system.ground.value
    return spectral.BatchEigenSystems(
        drift_param=np.array([system.params.drift_param]),
        adsorption_param=np.array([system.params.adsorption_param]),
        length=system.params.length, truncation=system.truncation,
        branch=np.array([branch], dtype=np.int8),
        ground=np.array([ground]),
        higher=system.higher_eigenvalues[None, :],
        norm_ground=np.array([system.norms[0]]),
        norm_higher=system.norms[None, 1:])


def _ground_eigenfunction_batch(batch, z):
    beta = batch.adsorption_param - batch.drift_param
    trig = batch.branch == 0
    hyp = batch.branch == 1
    g = np.where(batch.branch == 2, 1.0, batch.ground)  # avoid 0/0 on affine rows
    out = 1.0 + beta * z  # affine
    out = np.where(trig, np.cos(g * z) + (beta / g) * np.sin(g * z), out)
    # exponential form: the e^{+g z} coefficient vanishes exactly in the
    # reflecting limit beta = -g, where cosh - sinh loses all precision
    gz = np.where(hyp, g, 0.0) * z
    r = beta / g
    out = np.where(hyp, 0.5 * (1.0 + r) * np.exp(gz)
                   + 0.5 * (1.0 - r) * np.exp(-gz), out)
    return out


def _weighted_integral_trig(u, beta, s, lo, hi):
    # int e^{-u z} (cos(s z) + beta/s sin(s z)) dz via the antiderivative
    def F(z):
        e = np.exp(-u * z)
        cos_term = -u * np.cos(s * z) + s * np.sin(s * z)
        sin_term = -u * np.sin(s * z) - s * np.cos(s * z)
        return e * (cos_term + (beta / s) * sin_term) / (u * u + s * s)
    return F(hi) - F(lo)


def _weighted_integral_hyp(u, beta, sig, denom, lo, hi):
    # denom is u^2 - sig^2 supplied in a cancellation-free form
    def F(z):
        e = np.exp(-u * z)
        cosh_term = u * np.cosh(sig * z) + sig * np.sinh(sig * z)
        sinh_term = sig * np.cosh(sig * z) + u * np.sinh(sig * z)
        return -e * (cosh_term + (beta / sig) * sinh_term) / denom
    return F(hi) - F(lo)


def _weighted_integral_reflecting_ground(u, lo, hi):
    # kappa = 0 ground mode Z_0 = e^{-u z}: integrand e^{-2 u z}
    return np.exp(-2.0 * u * lo) * -np.expm1(-2.0 * u * (hi - lo)) / (2.0 * u)


def _weighted_integral_affine(u, beta, lo, hi):
    delta = hi - lo
    small = u * np.maximum(np.abs(hi), 1.0e-300) < 1e-8
    usafe = np.where(u > 0, u, 1.0)
    e_lo = np.exp(-u * lo)
    base = np.where(small, delta * (1.0 - u * (lo + hi) / 2.0),
                    e_lo * -np.expm1(-usafe * delta) / usafe)
    lin = np.where(small, (hi * hi - lo * lo) / 2.0,
                   e_lo * ((lo * usafe + 1.0)
                           - np.exp(-usafe * delta) * (hi * usafe + 1.0)) / usafe ** 2)
    return base + beta * lin


def _mode_amplitudes(batch, diffusion, source, lo, hi):
    """Per-mode amplitude and decay rate of the window probability.

    P(t) = sum_n amp_n exp(-rate_n t) with amp_n = a_n e^{u z0} I_n,
    I_n the e^{-u z}-weighted integral of Z_n over [lo, hi]. Returns
    (amp, rate) of shape (M, N+1); rates are nonnegative.
    """
    u = batch.drift_param
    beta = batch.adsorption_param - u
    D = np.broadcast_to(np.asarray(diffusion, dtype=float), u.shape)
    M, N = u.size, batch.truncation
    amp = np.empty((M, N + 1))
    rate = np.empty((M, N + 1))
    pre = np.exp(u * source)

    kappa = batch.adsorption_param
    L = batch.length
    trig = batch.branch == 0
    refl = (batch.branch == 1) & (kappa * L < 1e-12)
    hyp = (batch.branch == 1) & ~refl
    aff = batch.branch == 2
    g = batch.ground
    Z0 = _ground_eigenfunction_batch(batch, source)
    a0 = Z0 / batch.norm_ground
    I0 = np.empty(M)
    rate0 = np.empty(M)
    if np.any(trig):
        I0[trig] = _weighted_integral_trig(u[trig], beta[trig], g[trig], lo, hi)
        rate0[trig] = D[trig] * (u[trig] ** 2 + g[trig] ** 2)
    if np.any(hyp):
        # u^2 - sigma^2 = kappa^2 + 2 kappa sigma / tanh(sigma L), exact
        # rearrangement of the characteristic equation (no cancellation)
        denom = kappa[hyp] ** 2 + 2.0 * kappa[hyp] * g[hyp] / np.tanh(g[hyp] * L)
        I0[hyp] = _weighted_integral_hyp(u[hyp], beta[hyp], g[hyp], denom, lo, hi)
        rate0[hyp] = D[hyp] * denom
    if np.any(refl):
        I0[refl] = _weighted_integral_reflecting_ground(u[refl], lo, hi)
        rate0[refl] = 0.0
    if np.any(aff):
        I0[aff] = _weighted_integral_affine(u[aff], beta[aff],
                                            np.full(int(aff.sum()), float(lo)),
                                            np.full(int(aff.sum()), float(hi)))
        rate0[aff] = D[aff] * u[aff] ** 2
    amp[:, 0] = a0 * I0 * pre
    rate[:, 0] = rate0

    if N > 0:
        s = batch.higher
        u2, b2 = u[:, None], beta[:, None]
        Zs = np.cos(s * source) + (b2 / s) * np.sin(s * source)
        an = Zs / batch.norm_higher
        In = _weighted_integral_trig(u2, b2, s, lo, hi)
        amp[:, 1:] = an * In * pre[:, None]
        rate[:, 1:] = D[:, None] * (u2 * u2 + s * s)
    return amp, rate


def _series_eval(amp, rate, times):
    """sum_n amp_n exp(-rate_n t) accumulated per time; returns (T, M)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.zeros((times.size, amp.shape[0]))
    for n in range(amp.shape[1]):
        out += amp[:, n] * np.exp(-np.outer(times, rate[:, n]))
    return out


def vertical_pdf(z, t, system, source, diffusion):
    """Series density of the vertical coordinate at one time [1/m]."""
    if t <= 0:
        raise ValueError("t must be > 0")
    z = np.asarray(z, dtype=float)
    u = system.params.drift_param
    D = diffusion
    a = spectral.expansion_coefficients(system, source)
    dens = np.zeros_like(z, dtype=float)
    for n in range(system.truncation + 1):
        if n == 0 and system.ground.branch == spectral.HYPERBOLIC:
            s2 = -system.ground.value ** 2
        elif n == 0 and system.ground.branch == spectral.AFFINE:
            s2 = 0.0
        elif n == 0:
            s2 = system.ground.value ** 2
        else:
            s2 = system.higher_eigenvalues[n - 1] ** 2
        dens += a[n] * np.exp(-D * (u * u + s2) * t) * spectral.eigenfunction(system, n, z)
    return np.exp(-u * (z - source)) * dens


def vertical_observation(t, system, source, window, diffusion):
    """Probability of z in [0, window] for the drifted slab problem."""
    amp, rate = _mode_amplitudes(_as_arrays(system), diffusion, source, 0.0, window)
    out = _series_eval(amp, rate, t)[:, 0]
    return out if np.ndim(t) else float(out[0])


def lateral_observation(t, system, source, window, diffusion):
    """Probability of y in [-window/2, window/2]; source is physical y_0."""
    w = system.params.length
    shifted = source + w / 2
    amp, rate = _mode_amplitudes(_as_arrays(system), diffusion, shifted,
                                 w / 2 - window / 2, w / 2 + window / 2)
    out = _series_eval(amp, rate, t)[:, 0]
    return out if np.ndim(t) else float(out[0])


def _build_systems(geometry, diffusion, drift, n_terms):
    u = drift / (2.0 * diffusion)
    kappa = geometry.adsorption / diffusion
    zsys = spectral.solve_eigenvalues(
        spectral.BoundaryParams(u, kappa, geometry.height), n_terms)
    ysys = spectral.solve_eigenvalues(
        spectral.BoundaryParams(0.0, kappa, geometry.width), n_terms)
    return zsys, ysys


def _check_early(times, geometry, diffusion, n_terms, early_ok):
    tmin = np.min(times)
    guard = 1e-6 * max(geometry.height, geometry.width) ** 2 / diffusion
    if tmin < guard and not early_ok and n_terms <= 10:
        raise ValueError(
            f"series not converged for t < {guard:.3e} s at N = {n_terms}; "
            "increase the number of terms and pass early_ok=True")


def observation_probability(t, geometry, diffusion, drift, n_terms=10,
                            early_ok=False):
    """Product of the three axis observation probabilities."""
    _check_early(t, geometry, diffusion, n_terms, early_ok)
    zsys, ysys = _build_systems(geometry, diffusion, drift, n_terms)
    cx, cy, cz = geometry.rx_extent
    return (axial_observation(t, diffusion, geometry)
            * vertical_observation(t, zsys, geometry.tx_height, cz, diffusion)
            * lateral_observation(t, ysys, geometry.tx_lateral, cy, diffusion))


def asymptotic_observation(t, geometry, diffusion, drift):
    """Single-mode quasi-steady approximation of the observation probability."""
    zsys, ysys = _build_systems(geometry, diffusion, drift, 0)
    cx, cy, cz = geometry.rx_extent
    return (axial_observation(t, diffusion, geometry)
            * vertical_observation(t, zsys, geometry.tx_height, cz, diffusion)
            * lateral_observation(t, ysys, geometry.tx_lateral, cy, diffusion))


def reflecting_observation(t, drift_param, diffusion, length, source, window,
                           n_terms=10):
    """Closed-form vertical factor for reflecting walls (no adsorption)."""
    u, D, h, c = drift_param, diffusion, length, window
    t = np.asarray(t, dtype=float)
    if u * h < 1e-12:
        steady = c / h
    else:
        steady = np.expm1(-2.0 * c * u) / np.expm1(-2.0 * u * h)
    out = np.full(t.shape, steady, dtype=float)
    for n in range(1, n_terms + 1):
        s = n * np.pi / h
        a = (2.0 / h) * (np.cos(s * source) - (u / s) * np.sin(s * source)) / (1.0 + u * u / (s * s))
        # fold the e^{u(z0-c)} prefactor into the decaying exponential so
        # strong drift cannot overflow before the product is formed
        expo = u * (source - c) - D * (u * u + s * s) * t
        out = out + a * (np.sin(c * s) / s) * np.exp(expo)
    return out if out.ndim else float(out)


def adsorbing_observation(t, drift_param, diffusion, length, source, window,
                          n_terms=10):
    """Closed-form vertical factor in the fully adsorbing wall limit."""
    u, D, h, c = drift_param, diffusion, length, window
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape, dtype=float)
    for n in range(0, n_terms + 1):
        s = (n + 1) * np.pi / h
        term = (2.0 / h) * s * np.sin(s * source) * np.exp(u * (source - c)) \
            * (np.exp(c * u) - np.cos(c * s) - (u / s) * np.sin(c * s)) / (s * s + u * u)
        out = out + term * np.exp(-D * (u * u + s * s) * t)
    return out if out.ndim else float(out)


def _size_factors(particle, size_draws, seed):
    rng = np.random.default_rng(seed)
    radii = physics.sample_radius(particle, rng, size=size_draws)
    return np.asarray(radii) / particle.mean_radius


def size_averaged_observation(times, geometry, diffusion, drift, particle,
                              size_draws=10 ** 6, seed=0, n_terms=10,
                              chunk=100_000):
    """Monte Carlo mean observation probability over the particle size law.

    Per draw the drift scales with the squared radius and the diffusion
    inversely with the radius; eigen-systems are rebuilt per draw by the
    vectorized solver. Fixed seed and fixed chunking make the average
    bit-reproducible.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    f = _size_factors(particle, size_draws, seed)
    cx, cy, cz = geometry.rx_extent
    u0 = drift / (2.0 * diffusion)
    kappa0 = geometry.adsorption / diffusion
    total = np.zeros(times.size)
    for start in range(0, size_draws, chunk):
        fi = f[start:start + chunk]
        D = diffusion / fi
        u = u0 * fi ** 3
        kappa = kappa0 * fi
        zbatch = spectral.solve_eigenvalues_batch(u, kappa, geometry.height, n_terms)
        ybatch = spectral.solve_eigenvalues_batch(np.zeros_like(u), kappa,
                                                 geometry.width, n_terms)
        az, rz = _mode_amplitudes(zbatch, D, geometry.tx_height, 0.0, cz)
        y0 = geometry.tx_lateral + geometry.width / 2
        ay, ry = _mode_amplitudes(ybatch, D, y0,
                                  geometry.width / 2 - cy / 2,
                                  geometry.width / 2 + cy / 2)
        pz = _series_eval(az, rz, times)
        py = _series_eval(ay, ry, times)
        mean = -geometry.tx_distance + geometry.flow * times[:, None]
        sig = np.sqrt(4.0 * D[None, :] * times[:, None])
        px = 0.5 * (erf((mean + cx / 2) / sig) - erf((mean - cx / 2) / sig))
        total += np.sum(px * py * pz, axis=1)
    return total / size_draws


def impulse_response(geometry, diffusion, drift, n_tx, times, mode="nominal",
                     particle=None, size_draws=10 ** 6, seed=0, n_terms=10,
                     early_ok=False):
    """Expected receiver counts over time for one instantaneous pulse.

    nominal mode evaluates n_tx P_ob(t) at the nominal radius; the
    size-averaged mode averages P_ob over Monte Carlo radius draws with
    the radius scalings applied to drift and diffusion.
    """
    if n_tx < 1:
        raise ValueError("n_tx must be >= 1")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("times must be nonempty")
    _check_early(times, geometry, diffusion, n_terms, early_ok)
    if mode == "nominal" or (mode == "size-averaged" and particle is not None
                             and particle.radius_std == 0.0):
        p = observation_probability(times, geometry, diffusion, drift,
                                    n_terms=n_terms, early_ok=early_ok)
        label = "nominal"
    elif mode == "size-averaged":
        if particle is None:
            raise ValueError("size-averaged mode needs the particle spec")
        p = size_averaged_observation(times, geometry, diffusion, drift,
                                      particle, size_draws=size_draws,
                                      seed=seed, n_terms=n_terms)
        label = f"size-averaged({size_draws},{seed})"
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ImpulseResponse(times=times, mean_counts=n_tx * np.asarray(p),
                           n_tx=n_tx, mode=label)
