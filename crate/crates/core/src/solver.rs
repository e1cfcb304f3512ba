//! Split-operator propagation in the velocity gauge, imaginary-time
//! relaxation, and a finite-difference eigensolver for 1D models.
//!
//! One real-time step from `t` to `t + dt` is the Strang product
//!
//! ```text
//! exp(-i V dt/2) F^-1 exp(-i [T(k) dt + D P(k)]) F exp(-i V dt/2)
//! ```
//!
//! where `T(k)` is diagonal in the transform basis, `P(k)` is the total
//! z-momentum of a mode and `D = alpha(t + dt) - alpha(t)` is the exact
//! integral of the vector potential over the step. The `A^2/2` term is a
//! global phase under the dipole approximation and is dropped.

use std::sync::Arc;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{CoordinateSystem, Grid};
use crate::models::PotentialField;
use crate::pulse::PulseTrain;
use crate::wavefield::{inner_product, DensityTrace, SpectralOps, WaveField};

/// Default boundary-density guard for real-time runs.
pub const DEFAULT_BOUNDARY_LIMIT: f64 = 1e-10;
/// Nodes at each box edge counted as "boundary".
pub const BOUNDARY_MARGIN: usize = 8;
/// Steps per shortest quarter-period `2 pi / (4 omega)` required of `dt`.
pub const STEPS_PER_QUARTER_PERIOD: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    RealTime,
    ImaginaryTime,
}

/// What to store while propagating.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordSpec {
    /// Observables every `every` steps (and always at the first and last step).
    pub every: usize,
    /// Store `P(z, t)` at each observation.
    pub density: bool,
    /// Full-field snapshots at the first step reaching each of these times.
    pub snapshot_times: Vec<f64>,
}

impl Default for RecordSpec {
    fn default() -> Self {
        RecordSpec {
            every: 100,
            density: false,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationPlan {
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub pulses: PulseTrain,
    pub record: RecordSpec,
    pub mode: Mode,
    /// Abort when the boundary density exceeds this; `None` disables the guard.
    pub boundary_limit: Option<f64>,
}

impl PropagationPlan {
    /// Real-time plan from 0 to `t_end`.
    pub fn real_time(dt: f64, t_end: f64, pulses: PulseTrain) -> Result<Self> {
        let plan = PropagationPlan {
            dt,
            t_start: 0.0,
            t_end,
            pulses,
            record: RecordSpec::default(),
            mode: Mode::RealTime,
            boundary_limit: Some(DEFAULT_BOUNDARY_LIMIT),
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Plan that ends when the last pulse does.
    pub fn through_pulses(dt: f64, pulses: PulseTrain) -> Result<Self> {
        let t_end = pulses.t_end();
        Self::real_time(dt, t_end, pulses)
    }

    pub fn with_record(mut self, record: RecordSpec) -> Self {
        self.record = record;
        self
    }

    pub fn with_boundary_limit(mut self, limit: Option<f64>) -> Self {
        self.boundary_limit = limit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end >= self.t_start) {
            return Err(Error::InvalidParameter(format!(
                "t_end {} precedes t_start {}",
                self.t_end, self.t_start
            )));
        }
        if self.record.every == 0 {
            return Err(Error::InvalidParameter(
                "record cadence must be >= 1".into(),
            ));
        }
        if self.mode == Mode::RealTime {
            if let Some(omega) = self.pulses.max_omega() {
                let limit = max_time_step(omega);
                if self.dt > limit {
                    return Err(Error::InvalidParameter(format!(
                        "dt = {} does not resolve omega = {omega} (need dt <= {limit:.3e})",
                        self.dt
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to end exactly at `t_end`.
    pub fn n_steps(&self) -> usize {
        let span = self.t_end - self.t_start;
        ((span / self.dt) - 1e-9).ceil().max(0.0) as usize
    }

    /// Stable textual digest of every parameter that affects the result.
    pub fn fingerprint(&self) -> String {
        let pulses: Vec<String> = self
            .pulses
            .pulses()
            .iter()
            .map(|p| {
                format!(
                    "{:e}/{:e}/{:e}/{}",
                    p.e0,
                    p.omega,
                    p.t_start,
                    p.direction.sign()
                )
            })
            .collect();
        format!(
            "dt={:e};t0={:e};t1={:e};mode={:?};pulses=[{}]",
            self.dt,
            self.t_start,
            self.t_end,
            self.mode,
            pulses.join(",")
        )
    }

    /// 64-bit FNV-1a hash of [`PropagationPlan::fingerprint`].
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.fingerprint().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

/// Largest real-time step resolving a pulse of angular frequency `omega`.
pub fn max_time_step(omega: f64) -> f64 {
    (2.0 * std::f64::consts::PI / (4.0 * omega)) / STEPS_PER_QUARTER_PERIOD
}

/// Precomputed split-operator factors for one potential and time step.
#[derive(Debug, Clone)]
pub struct Propagator {
    ops: SpectralOps,
    mode: Mode,
    dt: f64,
    half_potential: Array2<Complex64>,
    /// Kinetic factor with the transform's mode scaling folded in.
    kinetic: Array2<Complex64>,
    /// Whether the drift phase acts on the outer axis too (two electrons).
    drift_outer: bool,
}

impl Propagator {
    /// Real-time propagator.
    pub fn new(potential: &PotentialField, dt: f64) -> Result<Self> {
        Self::build(
            SpectralOps::new(potential.grid().clone()),
            potential,
            dt,
            Mode::RealTime,
        )
    }

    /// Imaginary-time propagator with step `dtau`.
    pub fn imaginary(potential: &PotentialField, dtau: f64) -> Result<Self> {
        Self::build(
            SpectralOps::new(potential.grid().clone()),
            potential,
            dtau,
            Mode::ImaginaryTime,
        )
    }

    /// Reuse an existing spectral context.
    pub fn with_ops(
        ops: SpectralOps,
        potential: &PotentialField,
        dt: f64,
        mode: Mode,
    ) -> Result<Self> {
        Self::build(ops, potential, dt, mode)
    }

    fn build(ops: SpectralOps, potential: &PotentialField, dt: f64, mode: Mode) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        potential.check_grid(ops.grid())?;
        let factor = |x: f64| match mode {
            Mode::RealTime => Complex64::from_polar(1.0, -x),
            Mode::ImaginaryTime => Complex64::new((-x).exp(), 0.0),
        };
        let half_potential = potential.values().mapv(|v| factor(0.5 * v * dt));
        let mut kinetic = ops.kinetic().mapv(|t| factor(t * dt));
        kinetic.zip_mut_with(ops.transformer().mode_scale(), |k, &s| *k *= s);
        let drift_outer = ops.grid().system() == CoordinateSystem::Cartesian2e;
        Ok(Propagator {
            ops,
            mode,
            dt,
            half_potential,
            kinetic,
            drift_outer,
        })
    }

    pub fn ops(&self) -> &SpectralOps {
        &self.ops
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.ops.grid()
    }

    /// Advance `psi` from `t` to `t + dt`; returns the norm^2 afterwards.
    ///
    /// In imaginary-time mode the pulses are ignored and the field is not
    /// renormalized here.
    pub fn step(&self, psi: &mut WaveField, pulses: &PulseTrain, t: f64) -> Result<f64> {
        if **psi.grid() != **self.grid() {
            return Err(Error::GridMismatch(
                "field and propagator grids differ".into(),
            ));
        }
        let drift = match self.mode {
            Mode::RealTime => pulses.displacement_between(t, t + self.dt),
            Mode::ImaginaryTime => 0.0,
        };
        let transformer = self.ops.transformer();
        let data = psi.amplitudes_mut();
        Zip::from(&mut *data)
            .and(&self.half_potential)
            .for_each(|v, &p| *v *= p);
        transformer.forward(data.view_mut())?;
        if drift == 0.0 {
            Zip::from(&mut *data)
                .and(&self.kinetic)
                .for_each(|v, &k| *v *= k);
        } else {
            let spectral = self.ops.spectral();
            let inner: Vec<Complex64> = spectral
                .inner()
                .iter()
                .map(|k| Complex64::from_polar(1.0, -drift * k))
                .collect();
            let outer: Option<Vec<Complex64>> = if self.drift_outer {
                spectral.outer().map(|ks| {
                    ks.iter()
                        .map(|k| Complex64::from_polar(1.0, -drift * k))
                        .collect()
                })
            } else {
                None
            };
            for (i, (mut row, krow)) in data
                .rows_mut()
                .into_iter()
                .zip(self.kinetic.rows())
                .enumerate()
            {
                let o = outer.as_ref().map_or(Complex64::new(1.0, 0.0), |o| o[i]);
                for ((v, k), d) in row.iter_mut().zip(krow.iter()).zip(&inner) {
                    *v *= k * d * o;
                }
            }
        }
        transformer.inverse_unscaled(data.view_mut())?;
        let mut sum = 0.0;
        Zip::from(&mut *data)
            .and(&self.half_potential)
            .for_each(|v, &p| {
                *v *= p;
                sum += v.norm_sqr();
            });
        let norm = sum * self.grid().volume_element();
        if !norm.is_finite() {
            return Err(Error::NumericalAbort {
                time: t + self.dt,
                reason: "non-finite amplitude".into(),
                max_amplitude: psi.max_amplitude(),
            });
        }
        Ok(norm)
    }
}

/// Single real-time step with freshly built operators.
pub fn step(
    psi: &WaveField,
    potential: &PotentialField,
    pulses: &PulseTrain,
    t: f64,
    dt: f64,
) -> Result<WaveField> {
    let propagator = Propagator::new(potential, dt)?;
    let mut out = psi.clone();
    propagator.step(&mut out, pulses, t)?;
    Ok(out)
}

/// Observables recorded along a propagation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    /// `<z>` (`<z1 + z2>` for two electrons).
    pub z: Vec<f64>,
    /// Mean coordinate of every grid axis.
    pub positions: Vec<Vec<f64>>,
    /// Canonical `<p_z>`.
    pub pz: Vec<f64>,
    /// Total energy, only where no pulse is active.
    pub energy: Vec<Option<f64>>,
    /// Displacement of the pulse train at each record.
    pub alpha: Vec<f64>,
    pub density: Option<DensityTrace>,
    pub snapshots: Vec<(f64, WaveField)>,
    pub final_state: WaveField,
    pub final_time: f64,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm
            .iter()
            .map(|n| (n - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Propagate `psi0` according to `plan`.
pub fn propagate(
    psi0: &WaveField,
    plan: &PropagationPlan,
    potential: &PotentialField,
) -> Result<Trajectory> {
    propagate_observed(psi0, plan, potential, |_, _| Ok(()))
}

/// As [`propagate`], calling `observer` at every record.
pub fn propagate_observed(
    psi0: &WaveField,
    plan: &PropagationPlan,
    potential: &PotentialField,
    mut observer: impl FnMut(f64, &WaveField) -> Result<()>,
) -> Result<Trajectory> {
    plan.validate()?;
    if plan.mode != Mode::RealTime {
        return Err(Error::InvalidParameter(
            "propagate runs real time; use relax for imaginary time".into(),
        ));
    }
    let propagator = Propagator::new(potential, plan.dt)?;
    let ops = propagator.ops();
    let grid = propagator.grid().clone();
    let mut psi = psi0.clone();
    let n_steps = plan.n_steps();

    let mut traj = Trajectory {
        times: Vec::new(),
        norm: Vec::new(),
        z: Vec::new(),
        positions: Vec::new(),
        pz: Vec::new(),
        energy: Vec::new(),
        alpha: Vec::new(),
        density: plan
            .record
            .density
            .then(|| DensityTrace::new(grid.inner_axis().coordinates())),
        snapshots: Vec::new(),
        final_state: psi0.clone(),
        final_time: plan.t_start,
    };
    let mut pending_snapshots: Vec<f64> = plan.record.snapshot_times.clone();
    pending_snapshots.sort_by(f64::total_cmp);
    let mut next_snapshot = 0usize;

    let mut record = |step: usize, t: f64, psi: &WaveField, traj: &mut Trajectory| -> Result<()> {
        let norm = psi.norm_sqr();
        traj.times.push(t);
        traj.norm.push(norm);
        traj.z.push(psi.expectation_z());
        traj.positions.push(psi.mean_positions());
        traj.pz.push(ops.expectation_pz(psi)?);
        let field_free = !plan.pulses.is_active(t);
        traj.energy.push(if field_free {
            Some(ops.total_energy(psi, potential)?)
        } else {
            None
        });
        let alpha = plan.pulses.displacement(t);
        traj.alpha.push(alpha);
        if let Some(trace) = traj.density.as_mut() {
            let marginals = psi.density_z();
            trace.push(t, marginals.last().expect("one marginal"), alpha)?;
        }
        if let Some(limit) = plan.boundary_limit {
            let edge = psi.boundary_density(BOUNDARY_MARGIN);
            if edge > limit {
                return Err(Error::BoundaryLeak {
                    time: t,
                    density: edge,
                    limit,
                });
            }
        }
        debug_assert!(step <= n_steps);
        observer(t, psi)
    };

    record(0, plan.t_start, &psi, &mut traj)?;
    while next_snapshot < pending_snapshots.len()
        && pending_snapshots[next_snapshot] <= plan.t_start
    {
        traj.snapshots.push((plan.t_start, psi.clone()));
        next_snapshot += 1;
    }
    // the last step is shortened so the run ends exactly at t_end
    let last_t0 = plan.t_start + n_steps.saturating_sub(1) as f64 * plan.dt;
    let last_dt = plan.t_end - last_t0;
    let last = if n_steps > 0 && plan.dt - last_dt > 1e-12 * plan.dt {
        Some(Propagator::with_ops(
            ops.clone(),
            potential,
            last_dt,
            Mode::RealTime,
        )?)
    } else {
        None
    };
    for n in 1..=n_steps {
        let t0 = plan.t_start + (n - 1) as f64 * plan.dt;
        let (step, t1) = match (&last, n == n_steps) {
            (Some(p), true) => (p, plan.t_end),
            _ => (&propagator, plan.t_start + n as f64 * plan.dt),
        };
        step.step(&mut psi, &plan.pulses, t0)?;
        if n % plan.record.every == 0 || n == n_steps {
            record(n, t1, &psi, &mut traj)?;
        }
        while next_snapshot < pending_snapshots.len()
            && pending_snapshots[next_snapshot] <= t1 + 1e-12
        {
            traj.snapshots.push((t1, psi.clone()));
            next_snapshot += 1;
        }
    }
    traj.final_time = if n_steps == 0 {
        plan.t_start
    } else {
        plan.t_end
    };
    traj.final_state = psi;
    Ok(traj)
}

/// Imaginary-time relaxation settings.
#[derive(Debug, Clone)]
pub struct RelaxOptions {
    pub dtau: f64,
    /// Converged once consecutive energy checks differ by less than this.
    pub tol: f64,
    pub max_iterations: usize,
    /// Steps between energy checks.
    pub check_every: usize,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        RelaxOptions {
            dtau: 0.02,
            tol: 1e-10,
            max_iterations: 200_000,
            check_every: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Relaxed {
    pub state: WaveField,
    /// Rayleigh quotient of the returned state.
    pub energy: f64,
    pub iterations: usize,
}

/// Relax `guess` towards the lowest eigenstate of `T + V` orthogonal to
/// every state in `orthogonal_to` (assumed orthonormal).
pub fn relax(
    potential: &PotentialField,
    guess: &WaveField,
    options: &RelaxOptions,
    orthogonal_to: &[WaveField],
) -> Result<Relaxed> {
    if !(options.dtau.is_finite() && options.dtau > 0.0) {
        return Err(Error::InvalidParameter("dtau must be positive".into()));
    }
    if options.check_every == 0 {
        return Err(Error::InvalidParameter("check_every must be >= 1".into()));
    }
    let propagator = Propagator::imaginary(potential, options.dtau)?;
    let ops = propagator.ops();
    let mut psi = guess.clone();
    project_out(&mut psi, orthogonal_to)?;
    psi.normalize()?;
    let empty = PulseTrain::empty();
    let mut last_energy = ops.total_energy(&psi, potential)?;
    let mut last_delta = f64::INFINITY;
    for iteration in 1..=options.max_iterations {
        propagator.step(&mut psi, &empty, 0.0)?;
        project_out(&mut psi, orthogonal_to)?;
        psi.normalize()?;
        if iteration % options.check_every == 0 {
            let energy = ops.total_energy(&psi, potential)?;
            last_delta = (energy - last_energy).abs();
            last_energy = energy;
            if last_delta < options.tol {
                return Ok(Relaxed {
                    state: psi,
                    energy,
                    iterations: iteration,
                });
            }
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        last_delta,
    })
}

fn project_out(psi: &mut WaveField, basis: &[WaveField]) -> Result<()> {
    for phi in basis {
        let overlap = inner_product(phi, psi)?;
        let amplitudes = psi.amplitudes_mut();
        amplitudes.zip_mut_with(phi.amplitudes(), |v, p| *v -= overlap * p);
    }
    Ok(())
}

/// Lowest `count` eigenpairs of the second-order finite-difference
/// Hamiltonian `-1/2 d^2/dz^2 + V` on a 1D grid (Dirichlet beyond the box).
///
/// States are normalized on the grid, real, and signed so that their first
/// significant lobe is positive.
pub fn eigensolve_1d(potential: &PotentialField, count: usize) -> Result<Vec<(WaveField, f64)>> {
    let grid = potential.grid().clone();
    if grid.system() != CoordinateSystem::Cartesian1d {
        return Err(Error::GridMismatch("eigensolve_1d needs a 1D grid".into()));
    }
    if count == 0 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let n = grid.inner_axis().n_points;
    if count > n {
        return Err(Error::InvalidParameter(format!(
            "requested {count} states from a {n}-node grid"
        )));
    }
    let h = grid.inner_axis().spacing;
    let diag: Vec<f64> = potential
        .values()
        .row(0)
        .iter()
        .map(|v| 1.0 / (h * h) + v)
        .collect();
    let off = -0.5 / (h * h);
    let tri = SymTridiagonal { diag, off };
    let mut out: Vec<(WaveField, f64)> = Vec::with_capacity(count);
    for index in 0..count {
        let lambda = tri.eigenvalue(index);
        let mut vector = tri.eigenvector(lambda);
        // orthogonalize against earlier (exactly degenerate states cannot occur
        // for a tridiagonal matrix with non-zero off-diagonal)
        for (prev, _) in &out {
            let p = prev.amplitudes().row(0);
            let dot: f64 = p.iter().zip(&vector).map(|(a, b)| a.re * b).sum::<f64>() * h;
            for (v, a) in vector.iter_mut().zip(p.iter()) {
                *v -= dot * a.re;
            }
        }
        let norm = (vector.iter().map(|v| v * v).sum::<f64>() * h).sqrt();
        let peak = vector.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let first_lobe = vector
            .iter()
            .find(|v| v.abs() > 1e-3 * peak)
            .copied()
            .unwrap_or(1.0);
        let sign = if first_lobe < 0.0 { -1.0 } else { 1.0 };
        let amplitudes = Array2::from_shape_fn((1, n), |(_, j)| {
            Complex64::new(sign * vector[j] / norm, 0.0)
        });
        out.push((WaveField::new(grid.clone(), amplitudes)?, lambda));
    }
    Ok(out)
}

/// Real symmetric tridiagonal matrix with constant off-diagonal.
struct SymTridiagonal {
    diag: Vec<f64>,
    off: f64,
}

impl SymTridiagonal {
    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    fn count_below(&self, x: f64) -> usize {
        let e2 = self.off * self.off;
        let mut count = 0;
        let mut q = 1.0;
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - x } else { d - x - e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (d.abs() + self.off.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `index`-th smallest eigenvalue by bisection.
    fn eigenvalue(&self, index: usize) -> f64 {
        let radius = 2.0 * self.off.abs();
        let mut lo = self.diag.iter().fold(f64::INFINITY, |m, &d| m.min(d)) - radius;
        let mut hi = self.diag.iter().fold(f64::NEG_INFINITY, |m, &d| m.max(d)) + radius;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration at a converged eigenvalue.
    fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.diag.len();
        let scale = self.diag.iter().fold(self.off.abs(), |m, d| m.max(d.abs()));
        let shift = lambda + 1e-13 * scale;
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64)
            .collect();
        for _ in 0..3 {
            x = self.solve_shifted(shift, &x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }

    /// Solve `(T - shift) y = b` by LU with partial pivoting.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        // rows of U hold up to three entries: u0 (diag), u1, u2
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut rhs = b.to_vec();
        let tiny = f64::MIN_POSITIVE.sqrt();
        // current working row
        let mut a = self.diag[0] - shift;
        let mut c = if n > 1 { self.off } else { 0.0 };
        let mut d = 0.0;
        for i in 0..n {
            if i + 1 < n {
                let below_diag = self.off;
                let below_main = self.diag[i + 1] - shift;
                let below_super = if i + 2 < n { self.off } else { 0.0 };
                if below_diag.abs() > a.abs() {
                    // swap rows i and i+1
                    let m = a / below_diag;
                    u0[i] = below_diag;
                    u1[i] = below_main;
                    u2[i] = below_super;
                    rhs.swap(i, i + 1);
                    let new_a = c - m * below_main;
                    let new_c = d - m * below_super;
                    rhs[i + 1] -= m * rhs[i];
                    a = new_a;
                    c = new_c;
                    d = 0.0;
                } else {
                    let pivot = if a.abs() < tiny { tiny } else { a };
                    let m = below_diag / pivot;
                    u0[i] = pivot;
                    u1[i] = c;
                    u2[i] = d;
                    rhs[i + 1] -= m * rhs[i];
                    a = below_main - m * c;
                    c = below_super - m * d;
                    d = 0.0;
                }
            } else {
                u0[i] = if a.abs() < tiny { tiny } else { a };
            }
        }
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= u1[i] * y[i + 1];
            }
            if i + 2 < n {
                s -= u2[i] * y[i + 2];
            }
            y[i] = s / u0[i];
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::PotentialField;
    use crate::pulse::{design_for_displacement, PulseTrain};
    use nalgebra::DMatrix;

    fn grid_1d(l: f64, h: f64) -> Arc<Grid> {
        Arc::new(Grid::cartesian_1d(l, h).unwrap())
    }

    fn gaussian(grid: &Arc<Grid>, center: f64, width: f64) -> WaveField {
        WaveField::from_fn(grid.clone(), |_, z| {
            Complex64::new((-(z - center).powi(2) / (2.0 * width * width)).exp(), 0.0)
        })
        .normalized()
        .unwrap()
    }

    #[test]
    fn runs_end_exactly_at_t_end() {
        let grid = grid_1d(32.0, 0.125);
        let v = PotentialField::from_fn(grid.clone(), "free", |_, _| 0.0);
        let psi = WaveField::from_fn(grid.clone(), |_, z| {
            Complex64::from_polar((-z * z / 2.0).exp(), 1.5 * z)
        })
        .normalized()
        .unwrap();
        let run = |dt: f64| {
            let plan = PropagationPlan::real_time(dt, 1.05, PulseTrain::empty())
                .unwrap()
                .with_boundary_limit(None);
            propagate(&psi, &plan, &v).unwrap()
        };
        let (coarse, fine) = (run(0.1), run(0.05));
        assert_eq!(coarse.final_time, 1.05);
        assert_eq!(*coarse.times.last().unwrap(), 1.05);
        // free motion splits exactly, so the step size must not matter
        assert!((coarse.final_state.expectation_z() - 1.5 * 1.05).abs() < 1e-10);
        assert!(
            (coarse.final_state.expectation_z() - fine.final_state.expectation_z()).abs() < 1e-12
        );
    }

    #[test]
    fn plan_validation() {
        let pulses = PulseTrain::single(design_for_displacement(5.0, 6.0, 0.0).unwrap());
        assert!(PropagationPlan::through_pulses(0.001, pulses.clone()).is_ok());
        assert!(PropagationPlan::through_pulses(0.05, pulses).is_err());
        assert!(PropagationPlan::real_time(0.0, 1.0, PulseTrain::empty()).is_err());
        assert!(PropagationPlan::real_time(0.1, -1.0, PulseTrain::empty()).is_err());
        let plan = PropagationPlan::real_time(0.1, 1.0, PulseTrain::empty()).unwrap();
        assert_eq!(plan.n_steps(), 10);
        assert_ne!(
            plan.hash(),
            PropagationPlan::real_time(0.05, 1.0, PulseTrain::empty())
                .unwrap()
                .hash()
        );
    }

    #[test]
    fn harmonic_relaxation() {
        let grid = grid_1d(32.0, 0.125);
        let v = PotentialField::from_fn(grid.clone(), "harmonic", |_, z| 0.5 * z * z);
        let guess = gaussian(&grid, 0.7, 2.0);
        let out = relax(&v, &guess, &RelaxOptions::default(), &[]).unwrap();
        assert!((out.energy - 0.5).abs() < 1e-6, "{}", out.energy);
        let first = relax(&v, &guess, &RelaxOptions::default(), &[out.state.clone()]).unwrap();
        assert!((first.energy - 1.5).abs() < 1e-5, "{}", first.energy);
    }

    #[test]
    fn relax_reports_non_convergence() {
        let grid = grid_1d(32.0, 0.125);
        let v = PotentialField::from_fn(grid.clone(), "harmonic", |_, z| 0.5 * z * z);
        let options = RelaxOptions {
            max_iterations: 20,
            tol: 1e-15,
            ..RelaxOptions::default()
        };
        assert!(matches!(
            relax(&v, &gaussian(&grid, 3.0, 0.5), &options, &[]),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn eigensolver_oscillator_ladder() {
        let grid = grid_1d(32.0, 0.015625);
        let v = PotentialField::from_fn(grid.clone(), "harmonic", |_, z| 0.5 * z * z);
        let states = eigensolve_1d(&v, 3).unwrap();
        for (k, (_, e)) in states.iter().enumerate() {
            assert!((e - (k as f64 + 0.5)).abs() < 1e-4, "{k}: {e}");
        }
        for a in 0..3 {
            for b in 0..3 {
                let ip = inner_product(&states[a].0, &states[b].0).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-10 && ip.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigensolver_matches_dense_diagonalization() {
        let grid = grid_1d(16.0, 0.125);
        let v = PotentialField::from_fn(grid.clone(), "soft", |_, z| {
            -1.0 / (z * z + 0.5).sqrt() + 0.01 * z
        });
        let n = grid.inner_axis().n_points;
        let h = 0.125;
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = 1.0 / (h * h) + v.values()[[0, i]];
            if i + 1 < n {
                dense[(i, i + 1)] = -0.5 / (h * h);
                dense[(i + 1, i)] = -0.5 / (h * h);
            }
        }
        let mut reference: Vec<f64> = dense
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        reference.sort_by(f64::total_cmp);
        let states = eigensolve_1d(&v, 4).unwrap();
        for (k, (psi, e)) in states.iter().enumerate() {
            assert!((e - reference[k]).abs() < 1e-10);
            // residual check
            let x: Vec<f64> = psi.amplitudes().row(0).iter().map(|c| c.re).collect();
            let hx = &dense * nalgebra::DVector::from_vec(x.clone());
            let r = hx - nalgebra::DVector::from_vec(x) * *e;
            assert!(r.amax() < 1e-8);
        }
    }

    #[test]
    fn eigenstates_alternate_parity() {
        let grid = grid_1d(64.0, 0.125);
        let v = PotentialField::from_fn(grid.clone(), "well", |_, z| {
            -1.0 / (1.0 + (z / 6.0).powi(8))
        });
        let states = eigensolve_1d(&v, 2).unwrap();
        let sign_changes = |psi: &WaveField| {
            let peak = psi.max_amplitude();
            let xs: Vec<f64> = psi
                .amplitudes()
                .row(0)
                .iter()
                .map(|c| c.re)
                .filter(|x| x.abs() > 1e-6 * peak)
                .collect();
            xs.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
        };
        assert_eq!(sign_changes(&states[0].0), 0);
        assert_eq!(sign_changes(&states[1].0), 1);
    }

    #[test]
    fn free_gaussian_is_translated_by_the_pulse() {
        let grid = grid_1d(256.0, 0.125);
        let v = PotentialField::zero(grid.clone());
        let psi = gaussian(&grid, -20.0, 2.0);
        let pulse = design_for_displacement(37.0, 1.3, 0.4).unwrap();
        let plan = PropagationPlan::through_pulses(0.01, PulseTrain::single(pulse)).unwrap();
        let traj = propagate(&psi, &plan, &v).unwrap();
        let shift = traj.z.last().unwrap() - traj.z[0];
        assert!(((shift - 37.0) / 37.0).abs() < 1e-6, "{shift}");
        assert!((traj.pz.last().unwrap() - traj.pz[0]).abs() < 1e-10);
        assert!(traj.max_norm_drift() < 1e-10);
    }

    #[test]
    fn coherent_state_oscillates() {
        let grid = grid_1d(32.0, 0.0625);
        let v = PotentialField::from_fn(grid.clone(), "harmonic", |_, z| 0.5 * z * z);
        let d = 2.0;
        let psi = gaussian(&grid, d, 1.0);
        let period = 2.0 * std::f64::consts::PI;
        let mut plan = PropagationPlan::real_time(0.01, period, PulseTrain::empty()).unwrap();
        plan.record.every = 1;
        let traj = propagate(&psi, &plan, &v).unwrap();
        let worst = traj
            .times
            .iter()
            .zip(&traj.z)
            .map(|(t, z)| (z - d * t.cos()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn grid_mismatch_in_step() {
        let g1 = grid_1d(32.0, 0.125);
        let g2 = grid_1d(16.0, 0.125);
        let v = PotentialField::zero(g1);
        let psi = gaussian(&g2, 0.0, 1.0);
        assert!(step(&psi, &v, &PulseTrain::empty(), 0.0, 0.01).is_err());
    }

    #[test]
    fn non_finite_field_aborts() {
        let grid = grid_1d(32.0, 0.125);
        let v = PotentialField::zero(grid.clone());
        let mut psi = gaussian(&grid, 0.0, 1.0);
        psi.amplitudes_mut()[[0, 3]] = Complex64::new(f64::NAN, 0.0);
        let p = Propagator::new(&v, 0.01).unwrap();
        assert!(matches!(
            p.step(&mut psi, &PulseTrain::empty(), 0.0),
            Err(Error::NumericalAbort { .. })
        ));
    }

    #[test]
    fn boundary_guard_trips() {
        let grid = grid_1d(32.0, 0.125);
        let v = PotentialField::zero(grid.clone());
        let psi = gaussian(&grid, 14.0, 1.0);
        let plan = PropagationPlan::real_time(0.01, 0.1, PulseTrain::empty()).unwrap();
        assert!(matches!(
            propagate(&psi, &plan, &v),
            Err(Error::BoundaryLeak { .. })
        ));
    }

    #[test]
    fn snapshots_and_density_are_recorded() {
        let grid = grid_1d(64.0, 0.125);
        let v = PotentialField::from_fn(grid.clone(), "harmonic", |_, z| 0.5 * z * z);
        let psi = gaussian(&grid, 1.0, 1.0);
        let plan = PropagationPlan::real_time(0.01, 1.0, PulseTrain::empty())
            .unwrap()
            .with_record(RecordSpec {
                every: 10,
                density: true,
                snapshot_times: vec![0.0, 0.5],
            });
        let traj = propagate(&psi, &plan, &v).unwrap();
        assert_eq!(traj.times.len(), 11);
        assert_eq!(traj.snapshots.len(), 2);
        let density = traj.density.unwrap();
        assert!(density.integrals().iter().all(|s| (s - 1.0).abs() < 1e-6));
        assert!(traj.energy.iter().all(Option::is_some));
    }
}
