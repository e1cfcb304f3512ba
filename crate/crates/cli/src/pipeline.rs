//! Experiment pipelines: each turns a resolved [`Config`] into output files
//! and a [`RunManifest`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use kickshift_core::io::{
    write_checkpoint, write_density_csv, write_density_snapshot, DensitySnapshot,
};
use kickshift_core::models::{
    chain_potential, chain_sites, coulomb_potential, coulomb_potential_at, diagonal_amplitude,
    exchange_residual, helium_ion_potential, helium_model, hydrogenic_state, superpose,
    two_electron_state,
};
use kickshift_core::pulse::distortion_ratio;
use kickshift_core::solver::{propagate_observed, Relaxed};
use kickshift_core::wavefield::fidelity;
use kickshift_core::{
    eigensolve_1d, fit_table, fit_theta, propagate, relax, scan, scan_by_linearity,
    CoordinateSystem, Direction, Grid, PotentialField, PropagationPlan, PulseTrain, RecordSpec,
    RelaxOptions, ScanProblem, ScanSpec, SingleCyclePulse, SpectralOps, Spin, Trajectory,
    WaveField,
};
use num_complex::Complex64;

use crate::config::{Config, DirectionName, ModelName, Pipeline, ScanMethod};
use crate::error::{CliError, Result};
use crate::manifest::{sha256_file, OutputEntry, PulseRecord, RunManifest, SCHEMA_ID};
use crate::presets::load_preset;

/// Samples per pulse window in `pulse.csv`.
const PULSE_SAMPLES: usize = 2000;

/// Load a preset, apply overrides and run it into `out_dir`.
pub fn run_preset(name: &str, overrides: &[String], out_dir: &Path) -> Result<RunManifest> {
    let config = load_preset(name, overrides)?;
    run_config(name, &config, out_dir)
}

/// Run a resolved config. `label` names the run in the manifest.
pub fn run_config(label: &str, config: &Config, out_dir: &Path) -> Result<RunManifest> {
    check_guards(config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let started = Instant::now();
    let mut run = Run::new(out_dir);
    run.write_text("config.toml", "manifest-input", &config.to_toml())?;
    match config.pipeline {
        Pipeline::Design => design(config, &mut run)?,
        Pipeline::Relax => relax_pipeline(config, &mut run)?,
        Pipeline::Transport => transport(config, &mut run)?,
        Pipeline::Chain => chain(config, &mut run)?,
        Pipeline::Helium => helium(config, &mut run)?,
        Pipeline::PhaseScan => phase_scan(config, &mut run, label)?,
    }
    let manifest = RunManifest {
        schema: SCHEMA_ID.to_string(),
        preset: label.to_string(),
        pipeline: config.pipeline.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(config).expect("config serializes"),
        config_toml: config.to_toml(),
        pulses: run.pulses,
        plan_hash: run.plan_hash.map(|h| format!("{h:016x}")),
        threads: rayon::current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
        results: run.results,
        notes: run.notes,
        outputs: run.outputs,
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Refuse full-scale runs unless allowed, and runs whose output would
/// exceed the configured byte budget.
pub fn check_guards(config: &Config) -> Result<()> {
    if config.run.long_running && !config.run.allow_long_running {
        let e = estimate(config)?;
        return Err(CliError::config(format!(
            "this run is flagged long-running (about {:.1} h on this model); \
             pass --set run.allow_long_running=true to start it",
            e.seconds / 3600.0
        )));
    }
    let e = estimate(config)?;
    if e.output_bytes > config.run.max_output_bytes {
        return Err(CliError::config(format!(
            "estimated output {} bytes exceeds run.max_output_bytes = {}; \
             disable snapshots or raise the limit",
            e.output_bytes, config.run.max_output_bytes
        )));
    }
    Ok(())
}

/// Cost estimate for `--dry-run` and the guards.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub grid_points: usize,
    pub propagations: usize,
    pub steps_per_propagation: usize,
    pub seconds: f64,
    pub output_bytes: u64,
    /// Relaxation stops early when converged; the estimate assumes it does not.
    pub upper_bound: bool,
}

impl Estimate {
    pub fn describe(&self) -> String {
        format!(
            "grid_points = {}\npropagations = {}\nsteps_per_propagation = {}\n\
             estimated_seconds = {:.1}{}\nestimated_output_bytes = {}\n",
            self.grid_points,
            self.propagations,
            self.steps_per_propagation,
            self.seconds,
            if self.upper_bound {
                " (upper bound)"
            } else {
                ""
            },
            self.output_bytes
        )
    }
}

/// Seconds per step for `n` points: measured single-node constants of the
/// FFT and of the dense radial transform.
fn step_seconds(grid: &Grid) -> f64 {
    let n = grid.len() as f64;
    let fft = n * n.log2().max(1.0);
    match grid.system() {
        CoordinateSystem::CylindricalRz => {
            let (n_rho, n_z) = grid.shape();
            1.02e-9 * fft + 0.317e-9 * (n_rho * n_rho * n_z) as f64
        }
        _ => 2.6e-9 * fft,
    }
}

pub fn estimate(config: &Config) -> Result<Estimate> {
    if config.pipeline == Pipeline::Design {
        return Ok(Estimate {
            grid_points: 0,
            propagations: 0,
            steps_per_propagation: 0,
            seconds: 0.0,
            output_bytes: (PULSE_SAMPLES * config.pulse()?.displacement.len().max(1) * 100) as u64,
            upper_bound: false,
        });
    }
    let grid = simulation_grid(config)?;
    let n = grid.len();
    let mut setup = 0.0;
    if grid.system() == CoordinateSystem::CylindricalRz {
        setup += 1e-8 * (grid.shape().0 as f64).powi(3);
    }
    let per_step = step_seconds(&grid);
    let n_z = grid.inner_axis().n_points;
    let (propagations, steps, upper_bound) = match config.pipeline {
        Pipeline::Relax => (1, config.relax.max_iterations, true),
        Pipeline::PhaseScan => {
            let s = config.scan()?;
            let steps = if s.field_free {
                0
            } else {
                build_plan(config, pulse_train(config)?)?.n_steps()
            };
            let count = match s.method {
                ScanMethod::Linearity => 2,
                ScanMethod::PerCell => s.theta.len() * s.phi.len(),
            };
            (count, steps, false)
        }
        _ => (
            1,
            build_plan(config, pulse_train(config)?)?.n_steps(),
            false,
        ),
    };
    let mut bytes = 4096u64;
    if matches!(
        config.pipeline,
        Pipeline::Transport | Pipeline::Chain | Pipeline::Helium
    ) {
        let records = (steps / config.plan.record_every + 2) as u64;
        bytes += records * 220;
        if config.output.density_csv {
            bytes += records * n_z as u64 * 100;
        }
        if config.output.snapshots {
            let count = match config.pipeline {
                Pipeline::Chain => config.pulse()?.displacement.len() + 1,
                _ => config.plan.snapshots,
            };
            bytes += count as u64 * (8 * n as u64 + 128);
        }
        if config.output.checkpoint {
            bytes += 16 * n as u64 + 128;
        }
    }
    if config.pipeline == Pipeline::Relax && config.output.checkpoint {
        bytes += 24 * n as u64 + 256;
    }
    if config.pipeline == Pipeline::PhaseScan {
        let s = config.scan()?;
        bytes += (s.theta.len() * s.phi.len() * 120) as u64;
    }
    Ok(Estimate {
        grid_points: n,
        propagations,
        steps_per_propagation: steps,
        seconds: setup + per_step * (propagations * steps) as f64,
        output_bytes: bytes,
        upper_bound,
    })
}

/// Output files, results and notes collected during a run.
struct Run {
    dir: PathBuf,
    outputs: Vec<OutputEntry>,
    results: BTreeMap<String, f64>,
    notes: Vec<String>,
    pulses: Vec<PulseRecord>,
    plan_hash: Option<u64>,
}

impl Run {
    fn new(dir: &Path) -> Self {
        Run {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            results: BTreeMap::new(),
            notes: Vec::new(),
            pulses: Vec::new(),
            plan_hash: None,
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Register a file already written under the run directory.
    fn add(&mut self, name: &str, kind: &str) -> Result<()> {
        let (sha256, bytes) = sha256_file(&self.path(name))?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            kind: kind.to_string(),
            bytes,
            sha256,
        });
        Ok(())
    }

    fn write_text(&mut self, name: &str, kind: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.add(name, kind)
    }

    fn set(&mut self, key: impl Into<String>, value: f64) {
        self.results.insert(key.into(), value);
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    fn record_pulses(&mut self, train: &PulseTrain) {
        self.pulses = train.pulses().iter().map(PulseRecord::of).collect();
    }

    fn snapshot(&mut self, name: &str, field: &WaveField, time: f64) -> Result<()> {
        write_density_snapshot(&self.path(name), &DensitySnapshot::of(field, time))?;
        self.add(name, "density-snapshot")
    }

    fn checkpoint(&mut self, name: &str, field: &WaveField, time: f64) -> Result<()> {
        let hash = self.plan_hash.unwrap_or(0);
        write_checkpoint(&self.path(name), field, time, hash)?;
        self.add(name, "checkpoint")
    }

    /// Trajectory table, `P(z, t)` table, snapshots and final checkpoint.
    fn trajectory_outputs(&mut self, config: &Config, traj: &Trajectory) -> Result<()> {
        let name = "trajectory.csv";
        write_trajectory_csv(&self.path(name), traj)?;
        self.add(name, "trajectory-csv")?;
        if let Some(trace) = &traj.density {
            let name = "density_zt.csv";
            write_density_csv(&self.path(name), trace)?;
            self.add(name, "density-csv")?;
        }
        if config.output.snapshots {
            for (k, (t, field)) in traj.snapshots.iter().enumerate() {
                self.snapshot(&format!("snapshot_{k:03}.den"), field, *t)?;
            }
        }
        if config.output.checkpoint {
            self.checkpoint("final.chk", &traj.final_state, traj.final_time)?;
        }
        self.set("norm_drift_max", traj.max_norm_drift());
        self.set(
            "boundary_density_final",
            traj.final_state
                .boundary_density(kickshift_core::solver::BOUNDARY_MARGIN),
        );
        self.set("t_final_au", traj.final_time);
        Ok(())
    }
}

/// `t_au,norm,z_au,pz_au,alpha_au,energy_au` plus the per-axis means
/// (`rho_au` on cylindrical grids, `z1_au,z2_au` for two electrons).
/// Energy is blank while a pulse is on.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let system = traj.final_state.grid().system();
    let mut text = String::from("t_au,norm,z_au,pz_au,alpha_au,energy_au");
    match system {
        CoordinateSystem::CylindricalRz => text.push_str(",rho_au"),
        CoordinateSystem::Cartesian2e => text.push_str(",z1_au,z2_au"),
        CoordinateSystem::Cartesian1d => {}
    }
    text.push('\n');
    for k in 0..traj.times.len() {
        let energy = traj.energy[k]
            .map(|e| format!("{e:.17e}"))
            .unwrap_or_default();
        let _ = write!(
            text,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
            traj.times[k], traj.norm[k], traj.z[k], traj.pz[k], traj.alpha[k], energy
        );
        match system {
            CoordinateSystem::CylindricalRz => {
                let _ = write!(text, ",{:.17e}", traj.positions[k][0]);
            }
            CoordinateSystem::Cartesian2e => {
                let _ = write!(
                    text,
                    ",{:.17e},{:.17e}",
                    traj.positions[k][0], traj.positions[k][1]
                );
            }
            CoordinateSystem::Cartesian1d => {}
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Grid the pipeline propagates on.
pub fn simulation_grid(config: &Config) -> Result<Arc<Grid>> {
    let m = config.model()?;
    let g = config.grid()?;
    let grid = if m.name == ModelName::Helium1d {
        if g.z_center.au() != 0.0 {
            return Err(CliError::config(
                "the two-electron grid must be centred (grid.z_center = 0)",
            ));
        }
        Grid::cartesian_2e(g.z_extent.au(), g.z_spacing.au())?
    } else {
        let (Some(l_rho), Some(d_rho)) = (g.rho_extent, g.rho_spacing) else {
            return Err(CliError::config(
                "cylindrical models need grid.rho_extent and grid.rho_spacing",
            ));
        };
        let half_cell = if g.offset_nuclei {
            g.z_spacing.au() / 2.0
        } else {
            0.0
        };
        Grid::cylindrical(l_rho.au(), d_rho.au(), g.z_extent.au(), g.z_spacing.au())?
            .with_z_offset(g.z_center.au() + half_cell)?
    };
    Ok(Arc::new(grid))
}

/// Pulses described by the `[pulse]` section.
pub fn pulse_train(config: &Config) -> Result<PulseTrain> {
    let p = config.pulse()?;
    let (omega, t_start) = (p.omega.au(), p.t_start.au());
    let sign = match p.direction {
        DirectionName::Positive => 1.0,
        DirectionName::Negative => -1.0,
    };
    let direction = if sign > 0.0 {
        Direction::Positive
    } else {
        Direction::Negative
    };
    let train = if !p.displacement.is_empty() {
        let targets: Vec<f64> = p.displacement.iter().map(|d| sign * d.au()).collect();
        PulseTrain::from_displacements(&targets, omega, t_start, p.gap.au())?
    } else if let Some(i) = p.intensity {
        PulseTrain::single(SingleCyclePulse::from_intensity(
            i.watts_per_cm2(),
            omega,
            t_start,
            direction,
        )?)
    } else if let Some(e0) = p.field {
        PulseTrain::single(SingleCyclePulse::new(e0.au(), omega, t_start, direction)?)
    } else {
        return Err(CliError::config(
            "pulse needs exactly one of displacement, intensity or field",
        ));
    };
    Ok(train)
}

/// Real-time plan through the pulses plus the settle time.
pub fn build_plan(config: &Config, pulses: PulseTrain) -> Result<PropagationPlan> {
    let t_end = pulses.t_end() + config.plan.settle.au();
    let dt = config.dt();
    let n = config.plan.snapshots;
    let snapshot_times = match n {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect(),
    };
    let limit = config
        .plan
        .boundary_guard
        .then_some(config.plan.boundary_limit);
    Ok(PropagationPlan::real_time(dt, t_end, pulses)?
        .with_record(RecordSpec {
            every: config.plan.record_every,
            density: config.output.density_csv,
            snapshot_times,
        })
        .with_boundary_limit(limit))
}

fn relax_options(config: &Config) -> RelaxOptions {
    RelaxOptions {
        dtau: config.relax.dtau.au(),
        tol: config.relax.tol,
        max_iterations: config.relax.max_iterations,
        check_every: config.relax.check_every,
    }
}

fn design(config: &Config, run: &mut Run) -> Result<()> {
    let train = pulse_train(config)?;
    run.record_pulses(&train);
    let first = train.pulses()[0];
    let t_end = train.t_end();
    let n = PULSE_SAMPLES * train.pulses().len();
    let mut text = String::from("t_au,efield_au,a_au,alpha_au\n");
    for k in 0..=n {
        let t = first.t_start + (t_end - first.t_start) * k as f64 / n as f64;
        let _ = writeln!(
            text,
            "{t:.17e},{:.17e},{:.17e},{:.17e}",
            train.electric_field(t),
            train.vector_potential(t),
            train.displacement(t)
        );
    }
    run.write_text("pulse.csv", "pulse-csv", &text)?;
    run.set("e0_au", first.e0);
    run.set("intensity_wpcm2", first.intensity());
    run.set("duration_au", first.duration());
    run.set("ponderomotive_au", first.ponderomotive());
    run.set("alpha_final_au", train.final_displacement());
    run.set(
        "alpha_over_up",
        first.final_displacement() / first.ponderomotive(),
    );
    if let Some(de) = config.pulse()?.delta_e {
        let advice = distortion_ratio(first.omega, de.au())?;
        run.set("distortion_ratio", advice.ratio);
        if advice.distortion_prone {
            run.note(format!(
                "omega / delta_e = {:.3} is below {}: the pulse drives transitions and the \
                 state will distort while it moves",
                advice.ratio,
                kickshift_core::pulse::DISTORTION_THRESHOLD
            ));
        }
    }
    Ok(())
}

/// Hydrogen-like 1s guess `sqrt(2 pi rho) exp(-charge r)` centred at `z0`.
fn hydrogen_guess(grid: &Arc<Grid>, charge: f64, z0: f64) -> Result<WaveField> {
    Ok(WaveField::from_fn(grid.clone(), |rho, z| {
        let r = (rho * rho + (z - z0) * (z - z0)).sqrt();
        Complex64::new((2.0 * PI * rho).sqrt() * (-charge * r).exp(), 0.0)
    })
    .normalized()?)
}

/// Initial site of the chain, counted from the left.
fn chain_site(config: &Config) -> Result<(f64, f64, f64, usize)> {
    let m = config.model()?;
    let (charge, spacing, n) = (
        m.charge.unwrap_or(0.8),
        m.site_spacing.map_or(5.0, |s| s.au()),
        m.sites.unwrap_or(4),
    );
    let site = config.state.site;
    if site >= n {
        return Err(CliError::config(format!(
            "state.site = {site} but the chain has {n} sites"
        )));
    }
    // chain_sites lists the leftmost site last
    let z0 = chain_sites(spacing, n)[n - 1 - site];
    Ok((charge, spacing, z0, n))
}

/// Ground state of the isolated site the electron starts on.
fn relax_chain_site(config: &Config, grid: &Arc<Grid>, run: &mut Run) -> Result<Relaxed> {
    let (charge, spacing, z0, n) = chain_site(config)?;
    let site = coulomb_potential_at(grid.clone(), charge, z0)?;
    let relaxed = relax(
        &site,
        &hydrogen_guess(grid, charge, z0)?,
        &relax_options(config),
        &[],
    )?;
    let chain = chain_potential(grid.clone(), charge, spacing, n)?;
    let ops = SpectralOps::new(grid.clone());
    run.set("site_z_au", z0);
    run.set("energy_site", relaxed.energy);
    run.set("energy_in_chain", ops.total_energy(&relaxed.state, &chain)?);
    run.set("relax_iterations", relaxed.iterations as f64);
    Ok(relaxed)
}

fn relax_pipeline(config: &Config, run: &mut Run) -> Result<()> {
    let m = config.model()?;
    let grid = simulation_grid(config)?;
    let state = match m.name {
        ModelName::HydrogenSurrogate | ModelName::HydrogenRydbergFull => {
            let charge = m.charge.unwrap_or(1.0);
            let potential = coulomb_potential(grid.clone(), charge)?;
            let relaxed = relax(
                &potential,
                &hydrogen_guess(&grid, charge, 0.0)?,
                &relax_options(config),
                &[],
            )?;
            run.set("energy", relaxed.energy);
            run.set("energy_exact", -charge * charge / 2.0);
            run.set("energy_error", relaxed.energy + charge * charge / 2.0);
            run.set("relax_iterations", relaxed.iterations as f64);
            relaxed.state
        }
        ModelName::Chain4 => {
            run.note(
                "ground state of the isolated starting site, evaluated also in the full chain",
            );
            let relaxed = relax_chain_site(config, &grid, run)?;
            run.set("energy", relaxed.energy);
            relaxed.state
        }
        ModelName::Helium1d => {
            let g = config.grid()?;
            let line = Arc::new(Grid::cartesian_1d(g.z_extent.au(), g.z_spacing.au())?);
            let ion = eigensolve_1d(&helium_ion_potential(line)?, 2)?;
            run.set("energy_ion_1s", ion[0].1);
            run.set("energy_ion_2s", ion[1].1);
            let model = helium_model(grid.clone())?;
            let guess = WaveField::from_fn(grid.clone(), |z1, z2| {
                Complex64::new((-(z1 * z1 + z2 * z2)).exp(), 0.0)
            })
            .normalized()?;
            let relaxed = relax(&model.total(), &guess, &relax_options(config), &[])?;
            run.set("energy", relaxed.energy);
            run.set("relax_iterations", relaxed.iterations as f64);
            run.set(
                "exchange_residual",
                exchange_residual(&relaxed.state, Spin::Singlet),
            );
            relaxed.state
        }
    };
    if config.output.snapshots {
        run.snapshot("ground.den", &state, 0.0)?;
    }
    if config.output.checkpoint {
        run.checkpoint("ground.chk", &state, 0.0)?;
    }
    Ok(())
}

/// Index of the largest entry.
fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Position of the peak of the last electron marginal.
fn peak_z(psi: &WaveField) -> f64 {
    let marginals = psi.density_z();
    let p = marginals.last().expect("one marginal");
    psi.grid().inner_axis().coordinate(argmax(p))
}

fn transport(config: &Config, run: &mut Run) -> Result<()> {
    let grid = simulation_grid(config)?;
    let charge = config.model()?.charge.unwrap_or(1.0);
    let (lower, upper) = config.labels()?;
    let a = hydrogenic_state(lower, grid.clone())?;
    let b = hydrogenic_state(upper, grid.clone())?;
    let psi0 = superpose(config.state.theta.0, config.state.phi.0, &a, &b)?;
    let potential = coulomb_potential(grid.clone(), charge)?;
    let train = pulse_train(config)?;
    run.record_pulses(&train);
    if let Some(de) = config.pulse()?.delta_e {
        run.set(
            "distortion_ratio",
            distortion_ratio(train.max_omega().unwrap_or(0.0), de.au())?.ratio,
        );
    }
    let alpha = train.final_displacement();
    let plan = build_plan(config, train)?;
    run.plan_hash = Some(plan.hash());
    let traj = propagate(&psi0, &plan, &potential)?;
    run.trajectory_outputs(config, &traj)?;

    let dz = grid.inner_axis().spacing;
    let (z0, z1) = (traj.z[0], *traj.z.last().expect("records"));
    let (peak0, peak1) = (peak_z(&psi0), peak_z(&traj.final_state));
    run.set("alpha_final_au", alpha);
    run.set("z_initial", z0);
    run.set("z_final", z1);
    run.set("z_shift", z1 - z0);
    run.set("argmax_initial", peak0);
    run.set("argmax_final", peak1);
    run.set("argmax_shift", peak1 - peak0);
    run.set("argmax_error_cells", (peak1 - peak0 - alpha).abs() / dz);
    run.set("pz_initial", traj.pz[0]);
    run.set("pz_final", *traj.pz.last().expect("records"));
    if let (Some(e0), Some(e1)) = (traj.energy[0], *traj.energy.last().expect("records")) {
        run.set("energy_initial", e0);
        run.set("energy_final", e1);
    }
    let ops = SpectralOps::new(grid.clone());
    let moved = ops.translated(&psi0, alpha)?;
    run.set("fidelity_translated", fidelity(&traj.final_state, &moved)?);
    Ok(())
}

fn chain(config: &Config, run: &mut Run) -> Result<()> {
    let grid = simulation_grid(config)?;
    let relaxed = relax_chain_site(config, &grid, run)?;
    let (charge, spacing, _, n) = chain_site(config)?;
    let potential = chain_potential(grid.clone(), charge, spacing, n)?;
    let psi0 = relaxed.state;
    let train = pulse_train(config)?;
    run.record_pulses(&train);
    let ends: Vec<f64> = train.pulses().iter().map(|p| p.t_end()).collect();
    let alpha = train.final_displacement();
    let mut plan = build_plan(config, train.clone())?;
    // snapshots at the start and after every pulse
    plan.record.snapshot_times = std::iter::once(0.0).chain(ends.iter().copied()).collect();
    run.plan_hash = Some(plan.hash());
    let traj = propagate(&psi0, &plan, &potential)?;
    run.trajectory_outputs(config, &traj)?;

    let z0 = psi0.expectation_z();
    run.set("z_initial", z0);
    for (k, (_, field)) in traj.snapshots.iter().skip(1).enumerate() {
        let z = field.expectation_z();
        run.set(format!("z_after_pulse_{}", k + 1), z);
        let previous = if k == 0 {
            z0
        } else {
            traj.snapshots[k].1.expectation_z()
        };
        run.set(format!("shift_pulse_{}", k + 1), z - previous);
        run.set(
            format!("alpha_pulse_{}", k + 1),
            train.pulses()[k].final_displacement(),
        );
    }
    run.set("alpha_final_au", alpha);
    run.set("fidelity_initial", fidelity(&traj.final_state, &psi0)?);
    let ops = SpectralOps::new(grid.clone());
    let moved = ops.translated(&psi0, alpha)?;
    run.set("fidelity_translated", fidelity(&traj.final_state, &moved)?);
    Ok(())
}

fn helium(config: &Config, run: &mut Run) -> Result<()> {
    let grid = simulation_grid(config)?;
    let g = config.grid()?;
    let line = Arc::new(Grid::cartesian_1d(g.z_extent.au(), g.z_spacing.au())?);
    let ion = eigensolve_1d(&helium_ion_potential(line)?, 2)?;
    let spin: Spin = config.state.spin.expect("filled for helium").into();
    let psi0 = two_electron_state(&ion[0].0, &ion[1].0, spin, grid.clone())?;
    let potential: PotentialField = helium_model(grid.clone())?.total();
    let train = pulse_train(config)?;
    run.record_pulses(&train);
    let alpha = train.final_displacement();
    let plan = build_plan(config, train)?;
    run.plan_hash = Some(plan.hash());

    let mut max_exchange: f64 = 0.0;
    let mut max_diagonal: f64 = 0.0;
    let traj = propagate_observed(&psi0, &plan, &potential, |_, psi| {
        max_exchange = max_exchange.max(exchange_residual(psi, spin));
        max_diagonal = max_diagonal.max(diagonal_amplitude(psi));
        Ok(())
    })?;
    run.trajectory_outputs(config, &traj)?;

    let start = psi0.mean_positions();
    let end = traj.final_state.mean_positions();
    run.set("energy_ion_1s", ion[0].1);
    run.set("energy_ion_2s", ion[1].1);
    run.set("alpha_final_au", alpha);
    run.set("z1_initial", start[0]);
    run.set("z2_initial", start[1]);
    run.set("z1_final", end[0]);
    run.set("z2_final", end[1]);
    run.set("exchange_residual_max", max_exchange);
    run.set("diagonal_amplitude_max", max_diagonal);
    run.note(format!(
        "{} state from the ion 1s and 2s orbitals",
        spin.name()
    ));
    Ok(())
}

fn phase_scan(config: &Config, run: &mut Run, label: &str) -> Result<()> {
    let grid = simulation_grid(config)?;
    let charge = config.model()?.charge.unwrap_or(1.0);
    let (lower_label, upper_label) = config.labels()?;
    let lower = hydrogenic_state(lower_label, grid.clone())?;
    let upper = hydrogenic_state(upper_label, grid.clone())?;
    let potential = coulomb_potential(grid.clone(), charge)?;
    let s = config.scan()?;
    let spec = ScanSpec::new(
        s.theta.iter().map(|a| a.0).collect(),
        s.phi.iter().map(|a| a.0).collect(),
    )?;
    let plan = if s.field_free {
        PropagationPlan::real_time(config.dt(), 0.0, PulseTrain::empty())?
    } else {
        let train = pulse_train(config)?;
        run.record_pulses(&train);
        build_plan(config, train)?.with_record(RecordSpec {
            every: config.plan.record_every,
            density: false,
            snapshot_times: Vec::new(),
        })
    };
    run.plan_hash = Some(plan.hash());
    let problem = ScanProblem {
        lower: &lower,
        upper: &upper,
        potential: &potential,
        plan: &plan,
    };
    let table = match s.method {
        ScanMethod::Linearity => scan_by_linearity(&spec, &problem, label)?,
        ScanMethod::PerCell => scan(&spec, &problem, label)?,
    };
    table.write_csv(&run.path("scan.csv"))?;
    run.add("scan.csv", "scan-csv")?;

    let ops = SpectralOps::new(grid.clone());
    let rho_ij = ops.expectation_pz(&superpose(PI / 4.0, 0.0, &lower, &upper)?)?;
    run.set("rho_ij", rho_ij);
    if s.field_free {
        let mut worst: f64 = 0.0;
        for (p, &phi) in table.phi_values.iter().enumerate() {
            for (t, &theta) in table.theta_values.iter().enumerate() {
                let model = rho_ij * phi.cos() * (2.0 * theta).sin();
                worst = worst.max((table.pz[[p, t]] - model).abs());
            }
        }
        run.set("field_free_max_deviation", worst);
    }
    for (p, _) in table.phi_values.iter().enumerate() {
        match fit_theta(&table.theta_values, &table.row(p)) {
            Ok(row) => {
                run.set(format!("amplitude_phi_{p}"), row.amplitude);
                run.set(format!("offset_phi_{p}"), row.a);
            }
            Err(e) => run.note(format!("row {p} not fitted: {e}")),
        }
    }
    match fit_table(&table, s.b_ref) {
        Ok(fit) => {
            run.set("fit_a", fit.a);
            run.set("fit_b", fit.b);
            run.set("fit_phi0", fit.phi0);
            run.set("fit_phi0_over_pi", fit.phi0 / PI);
            if fit.gamma.is_finite() {
                run.set("fit_gamma", fit.gamma);
            }
            run.set("fit_residual_rms", fit.residual_rms);
            if fit.b > 0.0 {
                run.set("fit_residual_over_b", fit.residual_rms / fit.b);
            }
            run.note(format!(
                "phase fit: pz = a + b cos(phi + phi0) sin(2 theta_R); a = {:.6e}, b = {:.6e}, \
                 phi0 = {:.6e} rad, gamma = {:.6e}, residual_rms = {:.6e}, degenerate = {}",
                fit.a, fit.b, fit.phi0, fit.gamma, fit.residual_rms, fit.degenerate
            ));
        }
        Err(e) => run.note(format!("phase fit failed: {e}")),
    }
    Ok(())
}

/// Density snapshot plus `P(z)` table of a checkpoint, written next to
/// each other as `<stem>.den` and `<stem>_pz.csv`.
pub fn export_checkpoint(checkpoint: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let chk = kickshift_core::io::read_checkpoint(checkpoint)?;
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let stem = checkpoint
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("state")
        .to_string();
    let den = out_dir.join(format!("{stem}.den"));
    write_density_snapshot(&den, &DensitySnapshot::of(&chk.field, chk.time))?;
    let csv = out_dir.join(format!("{stem}_pz.csv"));
    let marginals = chk.field.density_z();
    let p = marginals.last().expect("one marginal");
    let axis = chk.field.grid().inner_axis();
    let mut file = std::fs::File::create(&csv).map_err(|e| CliError::io(&csv, e))?;
    let mut text = String::from("z_au,density\n");
    for (j, v) in p.iter().enumerate() {
        let _ = writeln!(text, "{:.17e},{v:.17e}", axis.coordinate(j));
    }
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::io(&csv, e))?;
    Ok(vec![den, csv])
}
