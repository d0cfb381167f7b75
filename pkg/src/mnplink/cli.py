"""Command line interface: experiment drivers writing CSV artifacts.

Commands: field (flux density profile), drift (magnetic drift velocity
profile), impulse (analytic and simulated impulse response),
signal-sweep (received signal strength versus drift velocity), ser
(symbol error rate versus pulse size). Every artifact is accompanied by
a JSON manifest recording the config hash, seed and package version;
reruns with identical inputs are byte-identical.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

import argparse
import configparser
import dataclasses
import hashlib
import importlib.resources
import json
import sys

import numpy as np

from . import __version__, channel, comms, physics, simulator


class ConfigError(Exception):
    """Raised for malformed or invalid configuration input."""


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated bundle of all experiment parameters."""

    env: physics.FluidEnvironment
    magnet: physics.MagnetSpec
    particle: physics.ParticleSpec
    geometry: channel.ChannelGeometry
    link: comms.OokLink
    sim: simulator.SimConfig


# section -> key -> (python type,)
_SCHEMA = {
    "fluid": {
        "viscosity_kg_per_m_s": float,
        "temperature_K": float,
    },
    "magnet": {
        "strength_B0_T": float,
        "length_m": float,
        "radius_m": float,
        "standoff_m": float,
    },
    "particle": {
        "mean_radius_m": float,
        "radius_std_m": float,
        "spion_volume_m3": float,
        "spion_concentration_per_m3": float,
        "saturation_magnetization_A_per_m": float,
    },
    "geometry": {
        "height_m": float,
        "width_m": float,
        "tx_distance_m": float,
        "tx_height_m": float,
        "tx_lateral_m": float,
        "rx_x_m": float,
        "rx_y_m": float,
        "rx_z_m": float,
        "flow_m_per_s": float,
        "adsorption_m_per_s": float,
    },
    "link": {
        "symbol_interval_s": float,
        "sample_offset_s": float,
        "threshold": int,
        "particles_per_pulse": int,
        "sequence_length": int,
    },
    "simulation": {
        "time_step_s": float,
        "realizations": int,
        "cross_section": str,
        "particle_sizing": str,
        "seed": int,
    },
}


def default_config_path():
    """Path of the packaged default configuration file."""
    return str(importlib.resources.files("mnplink") / "data" / "default.ini")


def parse_config(path):
    """Parse and validate an INI configuration file into a RunConfig.

    Unknown sections or keys are rejected; every value is converted to
    its SI type and all domain invariants are checked on construction.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys carry unit suffixes; keep their case
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in section [{section}]")
    for section, keys in _SCHEMA.items():
        if section not in parser:
            raise ConfigError(f"missing config section [{section}]")
        values[section] = {}
        for key, typ in keys.items():
            if key not in parser[section]:
                raise ConfigError(f"missing key '{key}' in section [{section}]")
            raw = parser[section][key]
            try:
                values[section][key] = typ(float(raw)) if typ in (float, int) \
                    else raw.strip()
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for '{key}' in [{section}]: {raw!r}") from exc

    f, m, p, g, l, s = (values[k] for k in
                        ("fluid", "magnet", "particle", "geometry", "link",
                         "simulation"))
    try:
        return RunConfig(
            env=physics.FluidEnvironment(
                viscosity=f["viscosity_kg_per_m_s"],
                temperature=f["temperature_K"]),
            magnet=physics.MagnetSpec(
                strength_B0=m["strength_B0_T"], length=m["length_m"],
                radius=m["radius_m"], standoff=m["standoff_m"]),
            particle=physics.ParticleSpec(
                mean_radius=p["mean_radius_m"], radius_std=p["radius_std_m"],
                spion_volume=p["spion_volume_m3"],
                spion_concentration=p["spion_concentration_per_m3"],
                saturation_magnetization=p["saturation_magnetization_A_per_m"]),
            geometry=channel.ChannelGeometry(
                height=g["height_m"], width=g["width_m"],
                tx_distance=g["tx_distance_m"], tx_height=g["tx_height_m"],
                tx_lateral=g["tx_lateral_m"],
                rx_extent=(g["rx_x_m"], g["rx_y_m"], g["rx_z_m"]),
                flow=g["flow_m_per_s"], adsorption=g["adsorption_m_per_s"]),
            link=comms.OokLink(
                symbol_interval=l["symbol_interval_s"],
                sample_offset=l["sample_offset_s"],
                threshold=l["threshold"],
                particles_per_pulse=l["particles_per_pulse"],
                sequence_length=l["sequence_length"]),
            sim=simulator.SimConfig(
                time_step=s["time_step_s"], realizations=s["realizations"],
                cross_section=s["cross_section"], seed=s["seed"],
                particle_sizing=s["particle_sizing"]))
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def _write_csv(path, header, columns):
    """Write columns as CSV with one header row, 9 significant digits."""
    rows = np.column_stack(columns)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.8e}" for v in row) + "\n")


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write_manifest(outdir, command, config_path, seed, outputs):
    manifest = {
        "command": command,
        "version": __version__,
        "config_sha256": _sha256(config_path),
        "seed": seed,
        "outputs": {name: _sha256(outdir / name) for name in outputs},
    }
    path = outdir / f"{command.replace('-', '_')}_manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(manifest, sort_keys=True))
    return path


def _magnet_settings(run, choice):
    """(label, MagnetSpec or None) pairs for the requested magnet mode."""
    if choice == "on":
        return [("on", run.magnet)]
    if choice == "off":
        return [("off", None)]
    return [("on", run.magnet), ("off", None)]


def _nominal_transport(run, magnet):
    """(diffusion, drift magnitude) at the nominal radius and mid height."""
    R = run.particle.mean_radius
    D = physics.diffusion_coefficient(R, run.env)
    if magnet is None:
        return D, 0.0
    vm = physics.drift_velocity(run.geometry.height / 2.0, R, run.env,
                                run.particle, magnet)
    return D, float(vm)


def cmd_field(run, args, outdir):
    z = np.linspace(0.0, run.geometry.height, 101)
    B = physics.flux_density(z, run.magnet)
    dB = physics.flux_gradient(z, run.magnet)
    _write_csv(outdir / "field.csv", ["z_m", "B_T", "dBdz_T_per_m"],
               [z, B, dB])
    return ["field.csv"]


def cmd_drift(run, args, outdir):
    z = np.linspace(0.0, run.geometry.height, 101)
    R = run.particle.mean_radius
    exact = physics.drift_velocity(z, R, run.env, run.particle, run.magnet)
    small = physics.drift_velocity_approx(z, R, "small-B", run.env,
                                          run.particle, run.magnet)
    large = physics.drift_velocity_approx(z, R, "large-B", run.env,
                                          run.particle, run.magnet)
    _write_csv(outdir / "drift.csv",
               ["z_m", "vm_exact", "vm_smallB", "vm_largeB"],
               [np.broadcast_to(z, exact.shape), exact,
                np.broadcast_to(small, exact.shape),
                np.broadcast_to(large, exact.shape)])
    return ["drift.csv"]


def _impulse_times(run):
    """Sample instants on the simulation step grid around the transit time."""
    dt = run.sim.time_step
    t1 = run.geometry.tx_distance / run.geometry.flow
    lo = max(1, int(round((t1 - 0.3) / dt)))
    hi = int(round((t1 + 0.3) / dt))
    idx = np.unique(np.round(np.linspace(lo, hi, 151)).astype(np.int64))
    return idx * dt


def cmd_impulse(run, args, outdir):
    times = _impulse_times(run)
    n_tx = run.link.particles_per_pulse
    outputs = []
    for label, magnet in _magnet_settings(run, args.magnet):
        D, vm = _nominal_transport(run, magnet)
        nominal = channel.impulse_response(
            run.geometry, D, vm, n_tx, times, mode="nominal",
            n_terms=args.series_terms).mean_counts
        n0 = n_tx * channel.asymptotic_observation(times, run.geometry, D, vm)
        sim_mean, sim_stderr = simulator.run_impulse(
            run.sim, run.geometry, run.env, run.particle, n_tx, times, magnet)
        name = f"impulse_magnet_{label}.csv"
        _write_csv(outdir / name,
                   ["t_s", "analytic_nominal", "analytic_N0", "sim_mean",
                    "sim_stderr"],
                   [times, nominal, n0, sim_mean, sim_stderr])
        outputs.append(name)
    return outputs


_SWEEP_ADSORPTION = (0.0, 1e-7, 1e-6)  # m/s
_SWEEP_SIZE_DRAWS = 10_000


def cmd_signal_sweep(run, args, outdir):
    vm_grid = np.linspace(0.0, 1e-5, 21)
    t0 = run.link.sample_offset
    D = physics.diffusion_coefficient(run.particle.mean_radius, run.env)
    header = ["vm0_m_per_s"]
    columns = [vm_grid]
    for ka in _SWEEP_ADSORPTION:
        geom = dataclasses.replace(run.geometry, adsorption=ka)
        tag = f"ka_{ka:.0e}"
        nom10 = np.array([channel.observation_probability(
            t0, geom, D, vm, n_terms=args.series_terms) for vm in vm_grid])
        nom0 = np.array([channel.asymptotic_observation(t0, geom, D, vm)
                         for vm in vm_grid])
        avg10 = np.array([channel.size_averaged_observation(
            t0, geom, D, vm, run.particle, size_draws=_SWEEP_SIZE_DRAWS,
            seed=run.sim.seed, n_terms=args.series_terms)[0]
            for vm in vm_grid])
        avg0 = np.array([channel.size_averaged_observation(
            t0, geom, D, vm, run.particle, size_draws=_SWEEP_SIZE_DRAWS,
            seed=run.sim.seed, n_terms=0)[0] for vm in vm_grid])
        header += [f"nominal_N10_{tag}", f"nominal_N0_{tag}",
                   f"sizeavg_N10_{tag}", f"sizeavg_N0_{tag}"]
        columns += [nom10, nom0, avg10, avg0]
    _write_csv(outdir / "signal_sweep.csv", header, columns)
    return ["signal_sweep.csv"]


_SER_NTX = (100, 250, 500, 1000)


def cmd_ser(run, args, outdir):
    link = run.link
    lag_times = link.sample_offset + link.symbol_interval * np.arange(
        link.sequence_length)
    outputs = []
    for label, magnet in _magnet_settings(run, args.magnet):
        D, vm = _nominal_transport(run, magnet)
        # per-particle observation probability at each lag: taps scale
        # linearly with the pulse size
        p_lag = channel.impulse_response(
            run.geometry, D, vm, 1, lag_times, mode="nominal",
            n_terms=args.series_terms).mean_counts
        sim_results = simulator.run_ser(run.sim, run.geometry, run.env,
                                        run.particle, link, magnet,
                                        n_tx_list=list(_SER_NTX))
        n_tx_col, no_isi, exact, sim_ser, sim_se = [], [], [], [], []
        for n_tx, ser, stderr in sim_results:
            sub = dataclasses.replace(link, particles_per_pulse=n_tx)
            n_tx_col.append(float(n_tx))
            no_isi.append(comms.ser_no_isi(n_tx * p_lag[0]))
            exact.append(comms.ser_exact(sub, n_tx * p_lag))
            sim_ser.append(ser)
            sim_se.append(stderr)
        name = f"ser_magnet_{label}.csv"
        _write_csv(outdir / name,
                   ["n_tx", "analytic_no_isi", "analytic_exact", "sim_ser",
                    "sim_stderr"],
                   [n_tx_col, no_isi, exact, sim_ser, sim_se])
        outputs.append(name)
    return outputs


_COMMANDS = {
    "field": cmd_field,
    "drift": cmd_drift,
    "impulse": cmd_impulse,
    "signal-sweep": cmd_signal_sweep,
    "ser": cmd_ser,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mnplink",
        description="Magnetic-nanoparticle molecular communication link "
                    "experiments")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", default=None,
                        help="configuration file (default: packaged Table "
                             "of system parameters)")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured seed")
    parser.add_argument("--magnet", choices=["on", "off", "both"],
                        default="both")
    parser.add_argument("--realizations", type=int, default=None,
                        help="override the configured realization count")
    parser.add_argument("--dt", type=float, default=None,
                        help="override the configured time step [s]")
    parser.add_argument("--series-terms", type=int, default=10,
                        help="eigenfunction series truncation")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    config_path = args.config or default_config_path()
    try:
        run = parse_config(config_path)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.realizations is not None:
            overrides["realizations"] = args.realizations
        if args.dt is not None:
            overrides["time_step"] = args.dt
        if overrides:
            run = dataclasses.replace(
                run, sim=dataclasses.replace(run.sim, **overrides))
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        from pathlib import Path
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        outputs = _COMMANDS[args.command](run, args, outdir)
        _write_manifest(outdir, args.command, config_path, run.sim.seed,
                        outputs)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
