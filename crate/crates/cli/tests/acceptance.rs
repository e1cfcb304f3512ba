//! Acceptance suite: one PASS/FAIL line per criterion, each followed by the
//! checks behind it. Checks listed in `KNOWN_DEVIATIONS` are expected to fail
//! (see the README); the binary exits non-zero only when the set of failing
//! checks differs from that list.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use kickshift_cli::pipeline::simulation_grid;
use kickshift_cli::{load_preset, run_preset, RunManifest};
use kickshift_core::models::{coulomb_potential, helium_one_body, helium_pair, hydrogenic_state};
use kickshift_core::pulse::{design_for_displacement, DISPLACEMENT_FACTOR};
use kickshift_core::retrieval::{fit_table, pz_model};
use kickshift_core::{
    propagate, Direction, Grid, HydrogenicLabel, PotentialField, PropagationPlan, PulseTrain,
    ScanSpec, ScanTable, SingleCyclePulse, SpectralOps, WaveField,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;

use common::{checksum_errors, schema_errors};

/// Checks that fail under the adopted pulse window and caption values.
const KNOWN_DEVIATIONS: &[&str] = &[
    "caption (1000, 0.0059)",
    "caption (1000, 0.0006)",
    "chain round trip",
];

struct Check {
    name: String,
    pass: bool,
    detail: String,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        pass,
        detail,
    }
}

struct Suite {
    root: PathBuf,
    runs: Vec<(PathBuf, RunManifest)>,
    failed: BTreeSet<String>,
    info: Vec<String>,
}

impl Suite {
    fn run(&mut self, preset: &str, overrides: &[&str], dir: &str) -> RunManifest {
        let out = self.root.join(dir);
        let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        let start = Instant::now();
        let m = run_preset(preset, &overrides, &out).unwrap_or_else(|e| panic!("{preset}: {e}"));
        println!("     run {dir} ({:.0} s)", start.elapsed().as_secs_f64());
        self.runs.push((out, m.clone()));
        m
    }

    fn criterion(&mut self, title: &str, checks: Vec<Check>) {
        let pass = checks.iter().all(|c| c.pass);
        println!("{} {title}", verdict(pass));
        for c in checks {
            println!("     {} {}: {}", verdict(c.pass), c.name, c.detail);
            if !c.pass {
                self.failed.insert(c.name);
            }
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn result(m: &RunManifest, key: &str) -> f64 {
    m.result(key)
        .unwrap_or_else(|| panic!("{} has no result {key}", m.preset))
}

fn pulse_algebra() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let worst = (0..100)
        .map(|_| {
            let e0 = 10f64.powf(rng.gen_range(-4.0..2.0));
            let omega = 10f64.powf(rng.gen_range(-3.0..1.5));
            let p = SingleCyclePulse::new(e0, omega, 0.0, Direction::Positive).unwrap();
            (p.displacement(p.t_end()) / p.ponderomotive() - DISPLACEMENT_FACTOR).abs()
        })
        .fold(0.0, f64::max);
    let mut checks = vec![check(
        "alpha/Up",
        worst < 1e-12,
        format!("1.17810 for 100 random pulses, max deviation {worst:.1e}"),
    )];
    let captions = [
        (1000.0, 0.057, 4.26e18, 0.02),
        (1000.0, 0.0059, 4.78e14, 0.02),
        (1000.0, 0.00117, 7.66e11, 0.05),
        (1000.0, 0.00088, 2.45e11, 0.05),
        (1000.0, 0.0006, 4.78e10, 0.05),
        (5.0, 6.0, 1.31e22, 0.02),
    ];
    for (alpha, omega, expected, tol) in captions {
        let intensity = design_for_displacement(alpha, omega, 0.0)
            .unwrap()
            .intensity();
        let rel = intensity / expected - 1.0;
        checks.push(check(
            &format!("caption ({alpha}, {omega})"),
            rel.abs() <= tol,
            format!(
                "{intensity:.3e} W/cm^2 vs {expected:.3e} ({:+.1}%, tolerance {:.0}%)",
                rel * 100.0,
                tol * 100.0
            ),
        ));
    }
    checks
}

fn gaussian(grid: &Arc<Grid>, center: f64, width: f64) -> WaveField {
    WaveField::from_fn(grid.clone(), |_, z| {
        Complex64::new((-(z - center).powi(2) / (2.0 * width * width)).exp(), 0.0)
    })
    .normalized()
    .unwrap()
}

fn propagator_oracles() -> Vec<Check> {
    let mut checks = Vec::new();

    let line = Arc::new(Grid::cartesian_1d(256.0, 0.125).unwrap());
    let psi = gaussian(&line, -40.0, 2.0);
    let pulse = design_for_displacement(50.0, 4.0, 0.0).unwrap();
    let alpha = pulse.final_displacement();
    let plan = PropagationPlan::through_pulses(0.01, PulseTrain::single(pulse)).unwrap();
    let traj = propagate(&psi, &plan, &PotentialField::zero(line.clone())).unwrap();
    let shift = traj.z.last().unwrap() - traj.z[0];
    let rel = (shift - alpha).abs() / alpha;
    let dp = (traj.pz.last().unwrap() - traj.pz[0]).abs();
    let dn = traj.max_norm_drift();
    checks.push(check(
        "free particle",
        rel < 1e-6 && dp < 1e-10 && dn < 1e-10,
        format!("shift {shift:.9} vs alpha {alpha:.9} (rel {rel:.1e}), p_z change {dp:.1e}, norm {dn:.1e}"),
    ));

    let line = Arc::new(Grid::cartesian_1d(32.0, 0.0625).unwrap());
    let v = PotentialField::from_fn(line.clone(), "harmonic", |_, z| 0.5 * z * z);
    let d = 2.0;
    let mut plan = PropagationPlan::real_time(0.01, 2.0 * PI, PulseTrain::empty()).unwrap();
    plan.record.every = 1;
    let traj = propagate(&gaussian(&line, d, 1.0), &plan, &v).unwrap();
    let worst = traj
        .times
        .iter()
        .zip(&traj.z)
        .map(|(t, z)| (z - d * t.cos()).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "coherent state",
        worst < 1e-4,
        format!("max |<z> - d cos t| over one period at dt 0.01: {worst:.1e}"),
    ));

    let grid = Arc::new(
        Grid::cylindrical(16.0, 0.25, 32.0, 0.25)
            .unwrap()
            .with_z_offset(0.125)
            .unwrap(),
    );
    let v = coulomb_potential(grid.clone(), 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (n, m) = grid.shape();
    let values: Vec<Complex64> = (0..n * m)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let random = WaveField::new(grid.clone(), ndarray_from(n, m, values))
        .unwrap()
        .normalized()
        .unwrap();
    let mut plan = PropagationPlan::real_time(0.01, 100.0, PulseTrain::empty())
        .unwrap()
        .with_boundary_limit(None);
    plan.record.every = 100;
    let traj = propagate(&random, &plan, &v).unwrap();
    let drift = traj.max_norm_drift();
    checks.push(check(
        "unitarity",
        drift < 1e-10 && plan.n_steps() == 10_000,
        format!(
            "norm drift of a random field over {} steps: {drift:.1e}",
            plan.n_steps()
        ),
    ));

    let grid = Arc::new(
        Grid::cylindrical(32.0, 0.5, 64.0, 0.5)
            .unwrap()
            .with_z_offset(0.25)
            .unwrap(),
    );
    let v = coulomb_potential(grid.clone(), 1.0).unwrap();
    let ops = SpectralOps::new(grid.clone());
    let ground = kickshift_core::relax(
        &v,
        &hydrogenic_state(HydrogenicLabel::new(1, 0).unwrap(), grid.clone()).unwrap(),
        &kickshift_core::RelaxOptions {
            dtau: 0.02,
            ..Default::default()
        },
        &[],
    )
    .unwrap()
    .state;
    let psi = ops.translated(&ground, 0.5).unwrap();
    let mut plan = PropagationPlan::real_time(0.001, 10.0, PulseTrain::empty())
        .unwrap()
        .with_boundary_limit(None);
    plan.record.every = 500;
    let traj = propagate(&psi, &plan, &v).unwrap();
    let e0 = ops.total_energy(&psi, &v).unwrap();
    let worst = traj
        .energy
        .iter()
        .map(|e| ((e.unwrap() - e0) / e0).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "energy conservation",
        worst < 1e-6,
        format!("max |E(t) - E(0)| / |E(0)| over 10^4 steps at dt 0.001: {worst:.1e}"),
    ));
    checks
}

fn ndarray_from(n: usize, m: usize, values: Vec<Complex64>) -> ndarray::Array2<Complex64> {
    ndarray::Array2::from_shape_vec((n, m), values).unwrap()
}

/// Lowest eigenvalue of the two-electron helium Hamiltonian by Lanczos on a
/// fourth-order finite-difference grid with hard walls.
fn helium_oracle(extent: f64, h: f64, iterations: usize) -> f64 {
    let n = (extent / h).round() as usize;
    let z: Vec<f64> = (0..n)
        .map(|j| -extent / 2.0 + (j as f64 + 0.5) * h)
        .collect();
    let diag: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            helium_one_body(z[i]) + helium_one_body(z[j]) + helium_pair(z[i], z[j])
        })
        .collect();
    let c = -0.5 / (12.0 * h * h);
    let stencil = [(-2i64, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
    let apply = |x: &[f64], y: &mut [f64]| {
        for i in 0..n {
            for j in 0..n {
                let mut lap = 0.0;
                for (o, w) in stencil {
                    let (ii, jj) = (i as i64 + o, j as i64 + o);
                    if (0..n as i64).contains(&ii) {
                        lap += w * x[ii as usize * n + j];
                    }
                    if (0..n as i64).contains(&jj) {
                        lap += w * x[i * n + jj as usize];
                    }
                }
                y[i * n + j] = c * lap + diag[i * n + j] * x[i * n + j];
            }
        }
    };
    let mut v: Vec<f64> = (0..n * n)
        .map(|k| {
            let (a, b) = (z[k / n], z[k % n]);
            (-(a * a + b * b)).exp()
        })
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    let mut previous = vec![0.0; n * n];
    let mut w = vec![0.0; n * n];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut beta = 0.0;
    for _ in 0..iterations {
        apply(&v, &mut w);
        let a: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum();
        for k in 0..n * n {
            w[k] -= a * v[k] + beta * previous[k];
        }
        alphas.push(a);
        beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        betas.push(beta);
        std::mem::swap(&mut previous, &mut v);
        for k in 0..n * n {
            v[k] = w[k] / beta;
        }
    }
    let m = alphas.len();
    let t = nalgebra::DMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => alphas[i],
        1 => betas[i.min(j)],
        _ => 0.0,
    });
    t.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

fn eigenstates(suite: &mut Suite) -> Vec<Check> {
    let chain = suite.run("relax-chain4", &[], "relax-chain4");
    let e_chain = result(&chain, "energy_site");
    let helium = suite.run("relax-helium", &[], "relax-helium");
    let e_helium = result(&helium, "energy");
    let start = Instant::now();
    let (coarse, fine) = (helium_oracle(24.0, 0.2, 400), helium_oracle(24.0, 0.1, 400));
    println!(
        "     helium oracle ({:.0} s)",
        start.elapsed().as_secs_f64()
    );
    let hydrogen = suite.run("relax-hydrogen", &[], "relax-hydrogen");
    let e_hydrogen = result(&hydrogen, "energy");
    vec![
        check(
            "chain left site",
            within(e_chain, -0.322, 0.003),
            format!("{e_chain:.5} vs -0.322 +- 0.003"),
        ),
        check(
            "helium ground",
            within(e_helium, -2.90, 0.02) && within(e_helium, fine, 0.02) && within(fine, coarse, 1e-3),
            format!(
                "{e_helium:.5}; Lanczos oracle {fine:.5} at h = 0.1 ({coarse:.5} at h = 0.2); target -2.90 +- 0.02"
            ),
        ),
        check(
            "hydrogen ground",
            within(e_hydrogen, -0.5, 0.02),
            format!("{e_hydrogen:.5} at d = 0.25 vs -0.5 +- 0.02"),
        ),
    ]
}

fn chain_transport(suite: &mut Suite) -> Vec<Check> {
    let m = suite.run("chain4-roundtrip", &[], "chain4-roundtrip");
    let shift = result(&m, "shift_pulse_1");
    let back = result(&m, "fidelity_initial");
    let alt = suite.run(
        "chain4-roundtrip",
        &["pulse.omega=\"24 au\""],
        "chain4-roundtrip-omega24",
    );
    suite.info.push(format!(
        "chain with the window compressed to omega = 24: shift {:.3}, round-trip fidelity {:.3}",
        result(&alt, "shift_pulse_1"),
        result(&alt, "fidelity_initial")
    ));
    vec![
        check(
            "chain single pulse",
            within(shift, 5.0, 0.2),
            format!("<z> moved {shift:.3} vs 5 +- 0.2"),
        ),
        check(
            "chain round trip",
            back >= 0.90,
            format!("fidelity {back:.3} vs >= 0.90"),
        ),
    ]
}

fn helium_transport(suite: &mut Suite) -> Vec<Check> {
    let mut checks = Vec::new();
    for spin in ["singlet", "triplet"] {
        let m = suite.run(&format!("helium-{spin}"), &[], &format!("helium-{spin}"));
        let (z1, z2) = (result(&m, "z1_final"), result(&m, "z2_final"));
        checks.push(check(
            &format!("helium {spin} relocation"),
            within(z1, 15.5, 0.3) && within(z2, 15.5, 0.3),
            format!("(<z1>, <z2>) = ({z1:.3}, {z2:.3}) vs (15.5, 15.5) +- 0.3"),
        ));
        let exchange = result(&m, "exchange_residual_max");
        checks.push(check(
            &format!("helium {spin} exchange"),
            exchange < 1e-8,
            format!("max exchange residual {exchange:.1e}"),
        ));
        if spin == "triplet" {
            let diagonal = result(&m, "diagonal_amplitude_max");
            checks.push(check(
                "helium triplet node",
                diagonal < 1e-8,
                format!("max |psi(z, z)| / max |psi| = {diagonal:.1e}"),
            ));
        }
    }
    checks
}

/// `Re <i| -i d/dz |j>` with the z derivative taken by an independent FFT.
fn momentum_coherence(lower: &WaveField, upper: &WaveField) -> f64 {
    let grid = lower.grid();
    let (rows, nz) = grid.shape();
    let dz = grid.inner_axis().spacing;
    let fft = FftPlanner::new().plan_fft_forward(nz);
    let ifft = FftPlanner::new().plan_fft_inverse(nz);
    let (a, b) = (lower.amplitudes(), upper.amplitudes());
    let mut total = Complex64::new(0.0, 0.0);
    for r in 0..rows {
        let mut row: Vec<Complex64> = b.row(r).to_vec();
        fft.process(&mut row);
        for (k, v) in row.iter_mut().enumerate() {
            let index = if k <= nz / 2 {
                k as f64
            } else {
                k as f64 - nz as f64
            };
            let kz = if 2 * k == nz {
                0.0
            } else {
                2.0 * PI * index / (nz as f64 * dz)
            };
            *v *= Complex64::new(kz / nz as f64, 0.0);
        }
        ifft.process(&mut row);
        for (x, y) in a.row(r).iter().zip(&row) {
            total += x.conj() * y;
        }
    }
    (total * grid.volume_element()).re
}

fn phase_pipeline(suite: &mut Suite) -> Vec<Check> {
    let mut checks = Vec::new();

    let m = suite.run("phase-scan-field-free", &[], "phase-scan-field-free");
    let dir = suite.runs.last().unwrap().0.clone();
    let table = ScanTable::read_csv(&dir.join("scan.csv")).unwrap();
    let config = load_preset("phase-scan-field-free", &[]).unwrap();
    let grid = simulation_grid(&config).unwrap();
    let lower = hydrogenic_state(HydrogenicLabel::new(2, 1).unwrap(), grid.clone()).unwrap();
    let upper = hydrogenic_state(HydrogenicLabel::new(3, 2).unwrap(), grid.clone()).unwrap();
    let rho_ij = momentum_coherence(&lower, &upper);
    let worst = table
        .pz
        .indexed_iter()
        .map(|((p, t), v)| (v - pz_model(table.theta_values[t], table.phi_values[p], rho_ij)).abs())
        .fold(0.0, f64::max);
    checks.push(check(
        "field-free scan",
        worst < 1e-6,
        format!("max deviation {worst:.1e} from rho_ij cos(phi) sin(2 theta) with rho_ij = {rho_ij:.6} by FFT quadrature"),
    ));
    // <2p|z|3d> in closed form, times the level spacing
    let radial = 4.0 / (162.0 * 180f64.sqrt()) * 720.0 * (6.0f64 / 5.0).powi(7);
    let continuum = (5.0 / 72.0) * radial * (4.0f64 / 15.0).sqrt();
    suite.info.push(format!(
        "field-free coherence on the grid {:.6} (pipeline) vs {continuum:.6} for exact hydrogen",
        result(&m, "rho_ij")
    ));

    let (a, b, phi0) = (0.0, 0.09, -0.033 * PI);
    let spec = ScanSpec::standard();
    let values: Vec<f64> = (0..spec.n_cells())
        .map(|k| {
            let (p, t) = spec.cell(k);
            a + b * (spec.phi_values[p] + phi0).cos() * (2.0 * spec.theta_values[t]).sin()
        })
        .collect();
    let pz = ndarray::Array2::from_shape_vec((4, 9), values).unwrap();
    let fit = fit_table(&ScanTable::new(&spec, pz, "synthetic").unwrap(), None).unwrap();
    let err = (fit.a - a)
        .abs()
        .max((fit.b - b).abs())
        .max((fit.phi0 - phi0).abs());
    checks.push(check(
        "synthetic fit",
        err < 1e-10,
        format!(
            "(a, b, phi0/pi) = ({:.3e}, {:.12}, {:.12}), max error {err:.1e}",
            fit.a,
            fit.b,
            fit.phi0 / PI
        ),
    ));

    let m = suite.run("phase-scan", &[], "phase-scan");
    let residual = result(&m, "fit_residual_over_b");
    checks.push(check(
        "surrogate fit residual",
        residual < 0.05,
        format!(
            "rms / b = {residual:.4} (b = {:.4}, phi0/pi = {:.4})",
            result(&m, "fit_b"),
            result(&m, "fit_phi0_over_pi")
        ),
    ));
    let phi0 = result(&m, "fit_phi0");
    let amplitudes: Vec<f64> = (0..4)
        .map(|p| result(&m, &format!("amplitude_phi_{p}")))
        .collect();
    let order = |keys: Vec<f64>| {
        let mut idx: Vec<usize> = (0..keys.len()).collect();
        idx.sort_by(|&i, &j| keys[j].total_cmp(&keys[i]));
        idx
    };
    let predicted = order(spec.phi_values.iter().map(|p| (p + phi0).cos()).collect());
    let found = order(amplitudes.clone());
    let rms = result(&m, "fit_residual_rms");
    let gap = found
        .windows(2)
        .map(|w| amplitudes[w[0]] - amplitudes[w[1]])
        .fold(f64::INFINITY, f64::min);
    checks.push(check(
        "surrogate phase ordering",
        predicted == found && gap > rms,
        format!(
            "row amplitudes {:?} at phi = pi/6, pi/4, pi/3, pi/2; smallest gap {gap:.4} > residual {rms:.4}",
            amplitudes.iter().map(|a| format!("{a:.4}")).collect::<Vec<_>>()
        ),
    ));
    checks
}

fn full_scale(suite: &mut Suite) -> Vec<Check> {
    let config = load_preset("transport-full", &[]).unwrap();
    let estimate = kickshift_cli::estimate(&config).unwrap();
    let refused = run_preset("transport-full", &[], &suite.root.join("transport-full")).is_err();
    suite.info.push(
        "NOT desk-reproducible: the n = 9/10 Rydberg run on the 16384 x 4096 grid with alpha = 1000 \
         and the fitted values b = 0.09, phi0 = -0.033 pi from its data take hours to days; they ship \
         as the flagged transport-full preset and are not part of this suite"
            .into(),
    );
    let m = suite.run("transport-surrogate", &[], "transport-surrogate");
    let cells = result(&m, "argmax_error_cells");
    vec![
        check(
            "full-scale preset flagged",
            refused && config.run.long_running,
            format!(
                "transport-full refuses to start without run.allow_long_running; estimate {:.1} h",
                estimate.seconds / 3600.0
            ),
        ),
        check(
            "surrogate transport",
            cells.abs() <= 2.0,
            format!(
                "argmax moved {:.3} vs alpha {:.3} ({cells} cells), fidelity to the translated state {:.3}",
                result(&m, "argmax_shift"),
                result(&m, "alpha_final_au"),
                result(&m, "fidelity_translated")
            ),
        ),
    ]
}

fn run_records(suite: &Suite) -> Vec<Check> {
    let mut bad = Vec::new();
    let mut worst_norm: f64 = 0.0;
    for (dir, m) in &suite.runs {
        bad.extend(
            schema_errors(dir)
                .into_iter()
                .map(|e| format!("{}: {e}", m.preset)),
        );
        bad.extend(
            checksum_errors(m, dir)
                .into_iter()
                .map(|e| format!("{}: {e}", m.preset)),
        );
        if let Some(drift) = m.result("norm_drift_max") {
            worst_norm = worst_norm.max(drift);
        }
    }
    vec![
        check(
            "manifests",
            bad.is_empty(),
            if bad.is_empty() {
                format!(
                    "{} run manifests validate against the schema and their checksums",
                    suite.runs.len()
                )
            } else {
                bad.join("; ")
            },
        ),
        check(
            "norm over every run",
            worst_norm < 1e-8,
            format!("max |norm - 1| over all propagating runs: {worst_norm:.1e}"),
        ),
    ]
}

fn main() -> ExitCode {
    let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    let _ = std::fs::remove_dir_all(&root);
    let mut suite = Suite {
        root,
        runs: Vec::new(),
        failed: BTreeSet::new(),
        info: Vec::new(),
    };
    let start = Instant::now();

    suite.criterion("pulse algebra", pulse_algebra());
    suite.criterion("propagator oracles", propagator_oracles());
    let checks = eigenstates(&mut suite);
    suite.criterion("eigenstate checkpoints", checks);
    let checks = chain_transport(&mut suite);
    suite.criterion("chain transport", checks);
    let checks = helium_transport(&mut suite);
    suite.criterion("helium transport", checks);
    let checks = phase_pipeline(&mut suite);
    suite.criterion("phase retrieval pipeline", checks);
    let checks = full_scale(&mut suite);
    suite.criterion("full-scale run stated as not desk-reproducible", checks);
    let checks = run_records(&suite);
    suite.criterion("run records", checks);

    for line in &suite.info {
        println!("INFO {line}");
    }
    let known: BTreeSet<String> = KNOWN_DEVIATIONS.iter().map(|s| s.to_string()).collect();
    println!(
        "acceptance: {} failing checks, {} known deviations ({:.0} s)",
        suite.failed.len(),
        known.len(),
        start.elapsed().as_secs_f64()
    );
    if suite.failed == known {
        ExitCode::SUCCESS
    } else {
        let unexpected: Vec<_> = suite.failed.difference(&known).collect();
        let recovered: Vec<_> = known.difference(&suite.failed).collect();
        println!(
            "unexpected failures: {unexpected:?}; known deviations now passing: {recovered:?}"
        );
        ExitCode::FAILURE
    }
}
