"""Particle-based Monte Carlo simulation of the microfluidic link.

Euler-Maruyama stepping of independent particles under flow, magnetic
drift and diffusion. The duct cross section confines y and z with
elastic mirror reflection; a wall crossing is converted into permanent
adsorption with the flat-boundary polynomial probability fit. The flow
axis is unbounded, so axial positions are advanced exactly at the
sample instants only. Drivers reproduce the impulse-response experiment
(mean receiver counts over repeated releases) and the on-off keying
symbol error rate experiment.

Hot loops are compiled with numba and consume pre-generated random
arrays; a scalar step() is kept as the readable reference.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import channel, comms, physics

RECTANGULAR = "rectangular"
CIRCULAR = "circular"

NOMINAL = "nominal"
LOG_NORMAL = "log-normal"

# particles simulated per vectorized batch; fixed so that results are
# reproducible for a given seed regardless of problem size
_BATCH = 250_000


@dataclass(frozen=True)
class SimConfig:
    """Time step [s], realization count, cross-section shape, seed, sizing."""

    time_step: float
    realizations: int
    cross_section: str = RECTANGULAR
    seed: int = 0
    particle_sizing: str = NOMINAL

    def __post_init__(self):
        if self.time_step <= 0:
            raise ValueError("time_step must be > 0")
        if self.realizations < 1:
            raise ValueError("realizations must be >= 1")
        if self.cross_section not in (RECTANGULAR, CIRCULAR):
            raise ValueError("cross_section must be rectangular or circular")
        if self.particle_sizing not in (NOMINAL, LOG_NORMAL):
            raise ValueError("particle_sizing must be nominal or log-normal")


@dataclass
class ParticleState:
    """One particle: position (x, y, z) [m], size, transport, alive flag."""

    position: np.ndarray
    radius: float
    transport: physics.TransportCoefficients
    alive: bool = True


def adsorption_probability(a_c, D, dt):
    """Per-crossing adsorption probability from the flat-wall polynomial fit.

    The fit argument is kappa' = a_c sqrt(dt / (2 D)), clamped to [0, 1];
    the polynomial output is clamped to [0, 1] as well.
    """
    a_c = np.asarray(a_c, dtype=float)
    if np.any(a_c < 0) or D <= 0 or dt <= 0:
        raise ValueError("require a_c >= 0, D > 0, dt > 0")
    kp = np.minimum(a_c * np.sqrt(dt / (2.0 * D)), 1.0)
    p = (kp * np.sqrt(2.0 * np.pi) - 3.33321 * kp ** 2
         + 3.35669 * kp ** 3 - 1.52092 * kp ** 4)
    out = np.clip(p, 0.0, 1.0)
    return out if out.ndim else float(out)


def _circle_radius(geometry):
    """Equal-area circular cross-section radius sqrt(w h / pi)."""
    return math.sqrt(geometry.width * geometry.height / math.pi)


def step(state, config, geometry, rng):
    """Advance one particle by one time step (scalar reference path).

    Returns the state, mutated in place. Boundary crossings are resolved
    in order z then y, each crossing running its own adsorption trial;
    the circular cross section is reflective only.
    """
    if not state.alive:
        return state
    dt = config.time_step
    D = state.transport.diffusion
    sig = math.sqrt(2.0 * D * dt)
    x, y, z = state.position
    x = x + geometry.flow * dt + sig * rng.standard_normal()
    y = y + sig * rng.standard_normal()
    z = z - state.transport.drift_magnetic * dt + sig * rng.standard_normal()

    if config.cross_section == CIRCULAR:
        if geometry.adsorption > 0:
            raise ValueError("adsorbing walls are not supported for the "
                             "circular cross section")
        rc = _circle_radius(geometry)
        while True:
            dzc = z - rc
            r = math.hypot(y, dzc)
            if r <= rc:
                break
            f = (2.0 * rc - r) / r
            y = f * y
            z = rc + f * dzc
    else:
        h = geometry.height
        whalf = geometry.width / 2.0
        pad = adsorption_probability(geometry.adsorption, D, dt)
        while state.alive and (z < 0.0 or z > h):
            if pad > 0.0 and rng.uniform() < pad:
                state.alive = False
            else:
                z = -z if z < 0.0 else 2.0 * h - z
        while state.alive and (y < -whalf or y > whalf):
            if pad > 0.0 and rng.uniform() < pad:
                state.alive = False
            else:
                y = -2.0 * whalf - y if y < -whalf else 2.0 * whalf - y

    state.position = np.array([x, y, z])
    return state


def count_in_rx(states, geometry):
    """Number of alive particles inside the closed receiver box."""
    cx, cy, cz = geometry.rx_extent
    n = 0
    for s in states:
        x, y, z = s.position
        if (s.alive and -cx / 2 <= x <= cx / 2 and -cy / 2 <= y <= cy / 2
                and 0.0 <= z <= cz):
            n += 1
    return n


@njit(cache=True)
def _step_rect(z, y, alive, gz, gy, uz, uy, sig, vmdt, pad, h, whalf):
    # one Euler-Maruyama step in the confined coordinates with mirror
    # reflection and per-crossing adsorption trials (z resolved first);
    # a second crossing within one step reuses the same uniform, which
    # is unreachable in practice for step sizes far below the duct size
    for i in range(z.size):
        if not alive[i]:
            continue
        zi = z[i] - vmdt[i] + sig[i] * gz[i]
        while zi < 0.0 or zi > h:
            if pad[i] > 0.0 and uz[i] < pad[i]:
                alive[i] = False
                break
            zi = -zi if zi < 0.0 else 2.0 * h - zi
        if not alive[i]:
            continue
        z[i] = zi
        yi = y[i] + sig[i] * gy[i]
        while yi < -whalf or yi > whalf:
            if pad[i] > 0.0 and uy[i] < pad[i]:
                alive[i] = False
                break
            yi = -2.0 * whalf - yi if yi < -whalf else 2.0 * whalf - yi
        if alive[i]:
            y[i] = yi


@njit(cache=True)
def _step_rect_reflect(z, y, gz, gy, sig, vmdt, h, whalf):
    # adsorption-free fast path: purely reflecting walls
    for i in range(z.size):
        zi = z[i] - vmdt[i] + sig[i] * gz[i]
        while zi < 0.0 or zi > h:
            zi = -zi if zi < 0.0 else 2.0 * h - zi
        z[i] = zi
        yi = y[i] + sig[i] * gy[i]
        while yi < -whalf or yi > whalf:
            yi = -2.0 * whalf - yi if yi < -whalf else 2.0 * whalf - yi
        y[i] = yi


@njit(cache=True)
def _step_circular(z, y, gz, gy, sig, vmdt, rc):
    # reflective circular cross section centered at (y, z) = (0, rc)
    for i in range(z.size):
        zi = z[i] - vmdt[i] + sig[i] * gz[i]
        yi = y[i] + sig[i] * gy[i]
        while True:
            dzc = zi - rc
            r = math.sqrt(yi * yi + dzc * dzc)
            if r <= rc:
                break
            f = (2.0 * rc - r) / r
            yi = f * yi
            zi = rc + f * dzc
        z[i] = zi
        y[i] = yi


def _particle_arrays(n, config, geometry, env, particle, magnet, rng):
    """Per-particle transport arrays for one batch.

    Radii follow the configured sizing; drift and diffusion scale with
    radius as R^2 and 1/R around the nominal values. Returns
    (sig, vmdt, pad) step-scaled arrays.
    """
    dt = config.time_step
    mean_R = particle.mean_radius
    if config.particle_sizing == LOG_NORMAL:
        R = np.asarray(physics.sample_radius(particle, rng, n))
    else:
        R = np.full(n, mean_R)
    D = physics.diffusion_coefficient(mean_R, env) * (mean_R / R)
    if magnet is None:
        vm = np.zeros(n)
    else:
        vm0 = physics.drift_velocity(geometry.height / 2.0, mean_R, env,
                                     particle, magnet)
        vm = vm0 * (R / mean_R) ** 2
    sig = np.sqrt(2.0 * D * dt)
    vmdt = vm * dt
    if geometry.adsorption > 0 and config.cross_section == RECTANGULAR:
        kp = np.minimum(geometry.adsorption * np.sqrt(dt / (2.0 * D)), 1.0)
        pad = np.clip(kp * np.sqrt(2.0 * np.pi) - 3.33321 * kp ** 2
                      + 3.35669 * kp ** 3 - 1.52092 * kp ** 4, 0.0, 1.0)
    else:
        pad = np.zeros(n)
    return D, sig, vmdt, pad


def _sample_steps(sample_times, dt):
    """Map sample times to step indices; times must sit on the step grid."""
    times = np.asarray(sample_times, dtype=float)
    if times.size == 0 or np.any(times <= 0):
        raise ValueError("sample times must be positive")
    idx = np.rint(times / dt).astype(np.int64)
    if np.any(np.abs(idx * dt - times) > 1e-9 * np.maximum(times, dt)):
        raise ValueError("sample times must be integer multiples of the "
                         "time step")
    return idx


def _run_batch(n, sample_idx, config, geometry, env, particle, magnet, rng):
    """Simulate n particles; return (n_samples, n) in-receiver booleans."""
    dt = config.time_step
    cx, cy, cz = geometry.rx_extent
    circular = config.cross_section == CIRCULAR
    if circular and geometry.adsorption > 0:
        raise ValueError("adsorbing walls are not supported for the "
                         "circular cross section")
    D, sig, vmdt, pad = _particle_arrays(n, config, geometry, env, particle,
                                         magnet, rng)
    z = np.full(n, float(geometry.tx_height))
    y = np.full(n, float(geometry.tx_lateral))
    x = np.full(n, -float(geometry.tx_distance))
    alive = np.ones(n, dtype=np.bool_)
    use_ads = bool(np.any(pad > 0))
    rc = _circle_radius(geometry)

    order = np.argsort(sample_idx)
    inside = np.empty((len(sample_idx), n), dtype=np.bool_)
    last_sampled = 0
    next_pos = 0
    n_steps = int(sample_idx.max())
    for k in range(1, n_steps + 1):
        gz = rng.standard_normal(n)
        gy = rng.standard_normal(n)
        if circular:
            _step_circular(z, y, gz, gy, sig, vmdt, rc)
        elif use_ads:
            uz = rng.random(n)
            uy = rng.random(n)
            _step_rect(z, y, alive, gz, gy, uz, uy, sig, vmdt, pad,
                       geometry.height, geometry.width / 2.0)
        else:
            _step_rect_reflect(z, y, gz, gy, sig, vmdt,
                               geometry.height, geometry.width / 2.0)
        while next_pos < len(order) and sample_idx[order[next_pos]] == k:
            # advance the unbounded axial coordinate exactly over the
            # gap since the previous sample instant
            gap = (k - last_sampled) * dt
            x += geometry.flow * gap + np.sqrt(2.0 * D * gap) * rng.standard_normal(n)
            last_sampled = k
            j = order[next_pos]
            inside[j] = (alive & (np.abs(x) <= cx / 2)
                         & (np.abs(y) <= cy / 2) & (z <= cz))
            next_pos += 1
    return inside


def run_impulse(config, geometry, env, particle, n_tx, sample_times,
                magnet=None):
    """Impulse-response experiment: repeated releases of n_tx particles.

    Returns (mean_counts, standard_errors) over the realizations at each
    sample time. Particle radii are drawn once at release when log-normal
    sizing is configured; the axial coordinate is advanced exactly at the
    sample instants.
    """
    if n_tx < 1:
        raise ValueError("n_tx must be >= 1")
    sample_idx = _sample_steps(sample_times, config.time_step)
    rng = np.random.Generator(np.random.SFC64(np.random.SeedSequence(config.seed)))

    R = config.realizations
    counts = np.zeros((R, len(sample_idx)))
    reals_per_batch = max(1, _BATCH // n_tx)
    r0 = 0
    while r0 < R:
        g = min(reals_per_batch, R - r0)
        inside = _run_batch(g * n_tx, sample_idx, config, geometry, env,
                            particle, magnet, rng)
        per_real = inside.reshape(len(sample_idx), g, n_tx).sum(axis=2)
        counts[r0:r0 + g] = per_real.T
        r0 += g
    mean = counts.mean(axis=0)
    if R > 1:
        stderr = counts.std(axis=0, ddof=1) / math.sqrt(R)
    else:
        stderr = np.full(len(sample_idx), np.nan)
    return mean, stderr


def _max_isi_lag(link, geometry, diffusion, n_tx, frames):
    """Largest symbol lag whose axial window probability still matters.

    A release contributes to a later slot only if its axial Gaussian
    still overlaps the receiver window at that lag; lags whose expected
    stray count over the whole experiment is below 1e-6 are dropped.
    """
    cutoff = 1e-6 / (n_tx * max(frames * link.sequence_length, 1))
    lag = 0
    while lag + 1 < link.sequence_length:
        t = link.sample_offset + (lag + 1) * link.symbol_interval
        # doubled diffusion bounds the spread of plausible size draws
        if channel.axial_observation(t, 2.0 * diffusion, geometry) < cutoff:
            break
        lag += 1
    return lag


def run_ser(config, geometry, env, particle, link, magnet=None,
            n_tx_list=None):
    """Symbol error rate experiment over config.realizations OOK frames.

    Each frame carries sequence_length equiprobable random bits; a 1-bit
    releases a cohort of particles at the transmitter at the slot start
    and the receiver count is sampled at sample_offset into every slot.
    When n_tx_list is given (ascending), the largest cohort is simulated
    once and the smaller pulse sizes are read off as prefix counts;
    returns a list of (n_tx, ser, stderr). Without n_tx_list returns
    (ser, stderr) for link.particles_per_pulse.
    """
    single = n_tx_list is None
    if single:
        n_tx_list = [link.particles_per_pulse]
    n_tx_list = sorted(int(n) for n in n_tx_list)
    if n_tx_list[0] < 1:
        raise ValueError("pulse sizes must be >= 1")
    n_max = n_tx_list[-1]
    frames = config.realizations
    K = link.sequence_length
    T = link.symbol_interval
    t0 = link.sample_offset

    rng = np.random.Generator(np.random.SFC64(np.random.SeedSequence(config.seed)))
    bits = (rng.random((frames, K)) < 0.5).astype(np.int64)
    ones = np.flatnonzero(bits.ravel())
    n_cohorts = ones.size

    D0 = physics.diffusion_coefficient(particle.mean_radius, env)
    max_lag = _max_isi_lag(link, geometry, D0, n_max, frames)
    lag_times = t0 + T * np.arange(max_lag + 1)
    sample_idx = _sample_steps(lag_times, config.time_step)

    # cohort counts per lag and per pulse-size prefix
    cohort_counts = np.zeros((n_cohorts, max_lag + 1, len(n_tx_list)),
                             dtype=np.int64)
    cohorts_per_batch = max(1, _BATCH // n_max)
    c0 = 0
    while c0 < n_cohorts:
        g = min(cohorts_per_batch, n_cohorts - c0)
        inside = _run_batch(g * n_max, sample_idx, config, geometry, env,
                            particle, magnet, rng)
        by_cohort = inside.reshape(len(sample_idx), g, n_max)
        for p, n_tx in enumerate(n_tx_list):
            cohort_counts[c0:c0 + g, :, p] = \
                by_cohort[:, :, :n_tx].sum(axis=2).T
        c0 += g

    # map each 1-bit to its cohort and accumulate slot counts per lag
    cohort_of = np.full(frames * K, -1, dtype=np.int64)
    cohort_of[ones] = np.arange(n_cohorts)
    cohort_of = cohort_of.reshape(frames, K)
    results = []
    for p, n_tx in enumerate(n_tx_list):
        counts = np.zeros((frames, K), dtype=np.int64)
        for lag in range(max_lag + 1):
            src = cohort_of[:, : K - lag]
            sel = src >= 0
            add = np.zeros_like(src)
            add[sel] = cohort_counts[src[sel], lag, p]
            counts[:, lag:] += add
        sub = comms.OokLink(symbol_interval=T, sample_offset=t0,
                            threshold=link.threshold,
                            particles_per_pulse=n_tx, sequence_length=K)
        ser, stderr = comms.ser_simulated(sub, counts, bits)
        results.append((n_tx, ser, stderr))
    if single:
        return results[0][1], results[0][2]
    return results
