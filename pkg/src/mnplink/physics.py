"""Transport physics for magnetic nanoparticles in a viscous fluid.

Maps magnet geometry, fluid properties and particle composition to the
coefficients that drive particle transport: magnetization of the
superparamagnetic cores, on-axis flux density and gradient of a
cylindrical magnet, magnetic drift velocity, diffusion coefficient and
friction coefficient. All quantities are strict SI.
"""

from dataclasses import dataclass

import numpy as np

# Boltzmann constant [m^2 kg s^-2 K^-1]
BOLTZMANN = 1.380649e-23


def _require(cond, msg):
    if not cond:
        raise ValueError(msg)


@dataclass(frozen=True)
class FluidEnvironment:
    """Carrier fluid: dynamic viscosity [kg/(m s)] and temperature [K]."""

    viscosity: float
    temperature: float

    def __post_init__(self):
        _require(self.viscosity > 0, "viscosity must be > 0")
        _require(self.temperature > 0, "temperature must be > 0")


@dataclass(frozen=True)
class MagnetSpec:
    """Cylindrical magnet on the z axis below the channel.

    strength_B0 is the flux-density scale [T], length and radius the
    cylinder dimensions [m], standoff the distance from the magnet face
    to the channel bottom (z = 0) [m].
    """

    strength_B0: float
    length: float
    radius: float
    standoff: float

    def __post_init__(self):
        for name in ("strength_B0", "length", "radius", "standoff"):
            _require(getattr(self, name) > 0, f"{name} must be > 0")


@dataclass(frozen=True)
class ParticleSpec:
    """Composite nanoparticle: log-normal size law and core composition.

    mean_radius / radius_std are the arithmetic mean and standard
    deviation of the hydrodynamic radius [m]. spion_volume is the volume
    of a single magnetic core [m^3], spion_concentration the core number
    density inside the particle [m^-3], saturation_magnetization the
    core saturation magnetization [A/m].
    """

    mean_radius: float
    radius_std: float
    spion_volume: float
    spion_concentration: float
    saturation_magnetization: float

    def __post_init__(self):
        _require(self.mean_radius > 0, "mean_radius must be > 0")
        _require(self.radius_std >= 0, "radius_std must be >= 0")
        _require(self.spion_volume > 0, "spion_volume must be > 0")
        _require(self.spion_concentration >= 0, "spion_concentration must be >= 0")
        _require(self.saturation_magnetization > 0,
                 "saturation_magnetization must be > 0")


@dataclass(frozen=True)
class TransportCoefficients:
    """Per-particle transport coefficients.

    drift_magnetic is the nonnegative magnitude of the drift toward the
    channel bottom; the transport layers apply it along -z.
    """

    diffusion: float
    drift_magnetic: float
    friction: float
    radius: float

    def __post_init__(self):
        _require(self.diffusion > 0, "diffusion must be > 0")
        _require(self.friction > 0, "friction must be > 0")
        _require(self.drift_magnetic >= 0, "drift_magnetic must be >= 0")


def langevin(s):
    """Langevin function L(s) = coth(s) - 1/s.

    Below |s| = 1e-4 the closed form cancels catastrophically, so the
    odd series s/3 - s^3/45 is used instead.
    """
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-4
    safe = np.where(small, 1.0, s)
    exact = 1.0 / np.tanh(safe) - 1.0 / safe
    series = s / 3.0 - s ** 3 / 45.0
    out = np.where(small, series, exact)
    return out if out.ndim else float(out)


def langevin_deriv(s):
    """Derivative L'(s) = 1/s^2 - 1/sinh(s)^2 with small/large-s guards."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 0.05
    big = np.abs(s) > 350.0  # sinh overflows; csch^2 underflows to 0
    safe = np.where(small | big, 1.0, s)
    exact = 1.0 / safe ** 2 - 1.0 / np.sinh(safe) ** 2
    series = 1.0 / 3.0 - s ** 2 / 15.0 + 2.0 * s ** 4 / 189.0
    out = np.where(small, series, np.where(big, 1.0 / np.where(big, s, 1.0) ** 2, exact))
    return out if out.ndim else float(out)


def magnetization_argument(B, env, spec):
    """Dimensionless field-to-thermal energy ratio s = V_s M_sat B / (k T)."""
    return (spec.spion_volume * spec.saturation_magnetization * np.asarray(B, dtype=float)
            / (BOLTZMANN * env.temperature))


def magnetization(B, env, spec):
    """Mean core magnetization M(B) = M_sat L(V_s M_sat B / (k T)) [A/m]."""
    return spec.saturation_magnetization * langevin(magnetization_argument(B, env, spec))


def flux_density(z, magnet):
    """On-axis flux density [T] at height z above the channel bottom.

    The axial coordinate of the cylindrical-magnet formula is the
    distance from the magnet face, i.e. z + standoff.
    """
    zeta = np.asarray(z, dtype=float) + magnet.standoff
    L, R = magnet.length, magnet.radius
    return 0.5 * magnet.strength_B0 * (
        (zeta + L) / np.sqrt((zeta + L) ** 2 + R ** 2)
        - zeta / np.sqrt(zeta ** 2 + R ** 2))


def flux_gradient(z, magnet):
    """Axial derivative dB/dz [T/m]; negative above the magnet face."""
    zeta = np.asarray(z, dtype=float) + magnet.standoff
    L, R = magnet.length, magnet.radius
    return 0.5 * magnet.strength_B0 * R ** 2 * (
        ((zeta + L) ** 2 + R ** 2) ** -1.5 - (zeta ** 2 + R ** 2) ** -1.5)


def _drift_prefactor(radius, env, spec):
    # terminal velocity of the Stokes drag balance: N_s V_s grad(MB) / (6 pi eta R)
    # with N_s = C_s (4/3) pi R^3, which collapses to R^2 C_s 2 V_s / (9 eta)
    return (radius ** 2 * spec.spion_concentration * 2.0 * spec.spion_volume
            / (9.0 * env.viscosity))


def drift_velocity(z, radius, env, spec, magnet):
    """Magnitude of the magnetic drift velocity [m/s] at height z.

    Uses the exact product-rule derivative of M(B(z)) B(z):
    d(MB)/dz = B'(z) M_sat (L(s) + s L'(s)).
    """
    _require(radius > 0, "radius must be > 0")
    B = flux_density(z, magnet)
    dB = flux_gradient(z, magnet)
    s = magnetization_argument(B, env, spec)
    grad_MB = dB * spec.saturation_magnetization * (langevin(s) + s * langevin_deriv(s))
    return _drift_prefactor(radius, env, spec) * np.abs(grad_MB)


def drift_velocity_approx(z, radius, regime, env, spec, magnet):
    """Weak-field (M = alpha B) or saturated (M = M_sat) drift magnitude."""
    _require(radius > 0, "radius must be > 0")
    B = flux_density(z, magnet)
    dB = flux_gradient(z, magnet)
    pref = _drift_prefactor(radius, env, spec)
    if regime == "small-B":
        alpha = (spec.saturation_magnetization ** 2 * spec.spion_volume
                 / (3.0 * BOLTZMANN * env.temperature))
        return pref * 2.0 * alpha * B * np.abs(dB)
    if regime == "large-B":
        return pref * spec.saturation_magnetization * np.abs(dB)
    raise ValueError(f"unknown regime {regime!r}")


def friction_coefficient(radius, env):
    """Stokes friction zeta = 6 pi eta R [kg/s]."""
    _require(radius > 0, "radius must be > 0")
    return 6.0 * np.pi * env.viscosity * radius


def diffusion_coefficient(radius, env):
    """Einstein diffusion coefficient D = k T / (6 pi eta R) [m^2/s]."""
    return BOLTZMANN * env.temperature / friction_coefficient(radius, env)


def transport_coefficients(radius, env, spec=None, magnet=None, z=0.0):
    """Bundle D, zeta and v_m(z) for one particle radius.

    With no magnet (or no particle composition) the magnetic drift is
    zero; otherwise it is evaluated at the given height.
    """
    zeta = friction_coefficient(radius, env)
    D = BOLTZMANN * env.temperature / zeta
    if magnet is None or spec is None:
        vm = 0.0
    else:
        vm = float(drift_velocity(z, radius, env, spec, magnet))
    return TransportCoefficients(diffusion=D, drift_magnetic=vm,
                                 friction=zeta, radius=radius)


def lognormal_params(mean, std):
    """Underlying normal (mu, sigma) of a log-normal with arithmetic moments."""
    _require(mean > 0, "mean must be > 0")
    var_ln = np.log1p((std / mean) ** 2)
    return np.log(mean) - 0.5 * var_ln, np.sqrt(var_ln)


def sample_radius(spec, rng, size=None):
    """Draw hydrodynamic radii from the particle size law.

    The log-normal is parameterized so that the arithmetic mean and
    standard deviation of the draws equal mean_radius and radius_std.
    A zero radius_std degenerates to the nominal radius.
    """
    _require(spec.mean_radius > 0, "mean_radius must be > 0")
    if spec.radius_std == 0.0:
        if size is None:
            return spec.mean_radius
        return np.full(size, spec.mean_radius)
    mu, sigma = lognormal_params(spec.mean_radius, spec.radius_std)
    return rng.lognormal(mean=mu, sigma=sigma, size=size)
