//! Phase retrieval from post-pulse momentum scans.
//!
//! A scan records `<p_z>` after the pulse for superpositions
//! `cos(theta) |i> + sin(theta) e^{i phi} |j>` over a grid of `(theta, phi)`.
//! The model
//!
//! ```text
//! <p_z> = a + b cos(phi + phi0) sin(2 theta)
//! ```
//!
//! is bilinear in `{1, sin 2 theta} x {cos phi, sin phi}`, so it is fitted in
//! two linear stages: per-`phi` rows against `{1, sin 2 theta}`, then the row
//! amplitudes against `P cos phi - Q sin phi`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{superpose, PotentialField};
use crate::solver::{propagate, PropagationPlan};
use crate::wavefield::{SpectralOps, WaveField};

/// Field-free `<p_z>` of the two-state superposition; the diagonal terms
/// vanish by parity.
pub fn pz_model(theta_r: f64, phi: f64, rho_ij: f64) -> f64 {
    rho_ij * phi.cos() * (2.0 * theta_r).sin()
}

/// Scan coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub theta_values: Vec<f64>,
    pub phi_values: Vec<f64>,
}

impl ScanSpec {
    pub fn new(theta_values: Vec<f64>, phi_values: Vec<f64>) -> Result<Self> {
        if theta_values.is_empty() || phi_values.is_empty() {
            return Err(Error::InvalidParameter(
                "scan needs theta and phi values".into(),
            ));
        }
        if let Some(t) = theta_values
            .iter()
            .find(|t| !(0.0..=PI / 2.0 + 1e-12).contains(*t))
        {
            return Err(Error::InvalidParameter(format!(
                "theta_R = {t} lies outside [0, pi/2]"
            )));
        }
        if phi_values.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParameter("phi values must be finite".into()));
        }
        Ok(ScanSpec {
            theta_values,
            phi_values,
        })
    }

    /// `theta_R` in steps of pi/16 over [0, pi/2] and `phi` in
    /// {pi/6, pi/4, pi/3, pi/2}.
    pub fn standard() -> Self {
        ScanSpec {
            theta_values: (0..=8).map(|k| k as f64 * PI / 16.0).collect(),
            phi_values: vec![PI / 6.0, PI / 4.0, PI / 3.0, PI / 2.0],
        }
    }

    pub fn n_cells(&self) -> usize {
        self.theta_values.len() * self.phi_values.len()
    }

    /// `(phi index, theta index)` of cell `k` (row-major over phi).
    pub fn cell(&self, k: usize) -> (usize, usize) {
        (k / self.theta_values.len(), k % self.theta_values.len())
    }
}

/// Post-pulse `<p_z>` over a scan grid; row `phi`, column `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub theta_values: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub pz: Array2<f64>,
    /// Identifier of the run that produced the table.
    pub provenance: String,
}

impl ScanTable {
    pub fn new(spec: &ScanSpec, pz: Array2<f64>, provenance: impl Into<String>) -> Result<Self> {
        let shape = (spec.phi_values.len(), spec.theta_values.len());
        if pz.dim() != shape {
            return Err(Error::ShapeMismatch {
                expected: vec![shape.0, shape.1],
                found: vec![pz.dim().0, pz.dim().1],
            });
        }
        if pz.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "scan table has non-finite entries".into(),
            ));
        }
        Ok(ScanTable {
            theta_values: spec.theta_values.clone(),
            phi_values: spec.phi_values.clone(),
            pz,
            provenance: provenance.into(),
        })
    }

    pub fn row(&self, phi_index: usize) -> Vec<f64> {
        self.pz.row(phi_index).to_vec()
    }

    /// Run id of one cell.
    pub fn run_id(&self, phi_index: usize, theta_index: usize) -> String {
        format!(
            "{}#{}",
            self.provenance,
            phi_index * self.theta_values.len() + theta_index
        )
    }

    /// `theta_rad,phi_rad,pz_au,run_id`, one line per cell.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "theta_rad,phi_rad,pz_au,run_id")?;
            for (p, phi) in self.phi_values.iter().enumerate() {
                for (t, theta) in self.theta_values.iter().enumerate() {
                    writeln!(
                        out,
                        "{theta:.17e},{phi:.17e},{:.17e},{}",
                        self.pz[[p, t]],
                        self.run_id(p, t)
                    )?;
                }
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let format = |reason: String| Error::Format {
            path: path.display().to_string(),
            reason,
        };
        let mut lines = BufReader::new(file).lines();
        match lines.next() {
            Some(Ok(h)) if h == "theta_rad,phi_rad,pz_au,run_id" => {}
            _ => return Err(format("missing scan header".into())),
        }
        let mut thetas: Vec<f64> = Vec::new();
        let mut phis: Vec<f64> = Vec::new();
        let mut values = Vec::new();
        let mut provenance = String::new();
        for (number, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let parts: Vec<&str> = line.splitn(4, ',').collect();
            let [theta, phi, pz, run_id] = parts[..] else {
                return Err(format(format!("line {}: expected 4 fields", number + 2)));
            };
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| format(format!("line {}: {e}", number + 2)))
            };
            let (theta, phi, pz) = (parse(theta)?, parse(phi)?, parse(pz)?);
            if phis.last() != Some(&phi) {
                phis.push(phi);
            }
            if phis.len() == 1 {
                thetas.push(theta);
            }
            values.push(pz);
            if provenance.is_empty() {
                provenance = run_id
                    .rsplit_once('#')
                    .map_or(run_id, |(p, _)| p)
                    .to_string();
            }
        }
        let pz = Array2::from_shape_vec((phis.len(), thetas.len()), values)
            .map_err(|_| format("incomplete scan table".into()))?;
        let spec = ScanSpec::new(thetas, phis)?;
        ScanTable::new(&spec, pz, provenance)
    }
}

/// What every scan cell propagates.
#[derive(Debug, Clone, Copy)]
pub struct ScanProblem<'a> {
    pub lower: &'a WaveField,
    pub upper: &'a WaveField,
    pub potential: &'a PotentialField,
    pub plan: &'a PropagationPlan,
}

impl ScanProblem<'_> {
    fn validate(&self) -> Result<()> {
        if self.plan.t_end < self.plan.pulses.t_end() {
            return Err(Error::InvalidParameter(
                "scan plan ends before the pulse window closes".into(),
            ));
        }
        Ok(())
    }
}

/// One propagation per cell, run concurrently; cells are independent and
/// merge by index, so the table does not depend on scheduling.
pub fn scan(spec: &ScanSpec, problem: &ScanProblem, provenance: &str) -> Result<ScanTable> {
    problem.validate()?;
    let results: Vec<Result<f64>> = (0..spec.n_cells())
        .into_par_iter()
        .map(|k| {
            let (p, t) = spec.cell(k);
            let psi = superpose(
                spec.theta_values[t],
                spec.phi_values[p],
                problem.lower,
                problem.upper,
            )?;
            let traj = propagate(&psi, problem.plan, problem.potential)?;
            Ok(*traj.pz.last().expect("at least one record"))
        })
        .collect();
    collect_cells(spec, results, provenance)
}

/// Same table as [`scan`] from two propagations: the propagator is linear,
/// so each cell is the superposition of the propagated basis states.
pub fn scan_by_linearity(
    spec: &ScanSpec,
    problem: &ScanProblem,
    provenance: &str,
) -> Result<ScanTable> {
    problem.validate()?;
    let (lower, upper) = rayon::join(
        || propagate(problem.lower, problem.plan, problem.potential),
        || propagate(problem.upper, problem.plan, problem.potential),
    );
    let (lower, upper) = (lower?.final_state, upper?.final_state);
    let ops = SpectralOps::new(lower.grid().clone());
    let results: Vec<Result<f64>> = (0..spec.n_cells())
        .into_par_iter()
        .map(|k| {
            let (p, t) = spec.cell(k);
            let psi = superpose(spec.theta_values[t], spec.phi_values[p], &lower, &upper)?;
            ops.expectation_pz(&psi)
        })
        .collect();
    collect_cells(spec, results, provenance)
}

fn collect_cells(
    spec: &ScanSpec,
    results: Vec<Result<f64>>,
    provenance: &str,
) -> Result<ScanTable> {
    let total = results.len();
    let mut values = Vec::with_capacity(total);
    let mut details = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => values.push(v),
            Err(e) => {
                let (p, t) = spec.cell(k);
                details.push(format!(
                    "theta={:.6} phi={:.6}: {e}",
                    spec.theta_values[t], spec.phi_values[p]
                ));
                values.push(f64::NAN);
            }
        }
    }
    if !details.is_empty() {
        return Err(Error::PartialScan {
            failed: details.len(),
            total,
            details: details.join("; "),
        });
    }
    let pz = Array2::from_shape_vec((spec.phi_values.len(), spec.theta_values.len()), values)
        .expect("one value per cell");
    ScanTable::new(spec, pz, provenance)
}

/// Offset and `sin 2 theta` amplitude of one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaFit {
    pub a: f64,
    pub amplitude: f64,
    pub residual_rms: f64,
}

/// Least squares of `pz(theta) = a + B sin(2 theta)`.
pub fn fit_theta(theta: &[f64], pz: &[f64]) -> Result<ThetaFit> {
    if theta.len() != pz.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![theta.len()],
            found: vec![pz.len()],
        });
    }
    if distinct(theta) < 3 {
        return Err(Error::InvalidParameter(
            "fit_theta needs at least three distinct theta values".into(),
        ));
    }
    let s: Vec<f64> = theta.iter().map(|t| (2.0 * t).sin()).collect();
    let n = s.len() as f64;
    let s_mean = s.iter().sum::<f64>() / n;
    let y_mean = pz.iter().sum::<f64>() / n;
    let sxx: f64 = s.iter().map(|x| (x - s_mean).powi(2)).sum();
    let scale: f64 = s.iter().map(|x| x * x).sum::<f64>().max(1.0);
    if sxx <= 1e-14 * scale {
        return Err(Error::RankDeficient(
            "all theta values share the same sin(2 theta)".into(),
        ));
    }
    let sxy: f64 = s
        .iter()
        .zip(pz)
        .map(|(x, y)| (x - s_mean) * (y - y_mean))
        .sum();
    let amplitude = sxy / sxx;
    let a = y_mean - amplitude * s_mean;
    let residual_rms = rms(s.iter().zip(pz).map(|(x, y)| y - a - amplitude * x));
    Ok(ThetaFit {
        a,
        amplitude,
        residual_rms,
    })
}

/// Retrieved model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseFit {
    pub a: f64,
    /// `b >= 0`.
    pub b: f64,
    /// In `(-pi, pi]`; 0 when `degenerate`.
    pub phi0: f64,
    /// `-ln(b / b_ref)`, or `-ln b` without a reference.
    pub gamma: f64,
    pub residual_rms: f64,
    /// `b` vanished and `phi0` is undefined.
    pub degenerate: bool,
}

impl PhaseFit {
    pub fn model(&self, theta_r: f64, phi: f64) -> f64 {
        self.a + self.b * (phi + self.phi0).cos() * (2.0 * theta_r).sin()
    }
}

/// Amplitudes below this are treated as zero.
const DEGENERATE_AMPLITUDE: f64 = 1e-14;

/// Least squares of `B(phi) = P cos(phi) - Q sin(phi)`, reported as
/// `b = |(P, Q)|`, `phi0 = atan2(Q, P)`. `a` and the residual are left 0.
pub fn fit_phase(phi: &[f64], amplitudes: &[f64]) -> Result<PhaseFit> {
    if phi.len() != amplitudes.len() {
        return Err(Error::ShapeMismatch {
            expected: vec![phi.len()],
            found: vec![amplitudes.len()],
        });
    }
    if distinct(phi) < 3 {
        return Err(Error::InvalidParameter(
            "fit_phase needs at least three distinct phi values".into(),
        ));
    }
    let (mut cc, mut cs, mut ss, mut cb, mut sb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, b) in phi.iter().zip(amplitudes) {
        let (s, c) = p.sin_cos();
        cc += c * c;
        cs += c * s;
        ss += s * s;
        cb += c * b;
        sb += s * b;
    }
    // normal equations for (P, Q) with columns (cos, -sin)
    let det = cc * ss - cs * cs;
    if det <= 1e-12 * (cc + ss).powi(2) {
        return Err(Error::RankDeficient(
            "phi values are collinear modulo pi".into(),
        ));
    }
    let p = (ss * cb - cs * sb) / det;
    let q = (cs * cb - cc * sb) / det;
    let b = p.hypot(q);
    let degenerate = b < DEGENERATE_AMPLITUDE;
    let phi0 = if degenerate {
        0.0
    } else {
        wrap_phase(q.atan2(p))
    };
    Ok(PhaseFit {
        a: 0.0,
        b,
        phi0,
        gamma: -b.ln(),
        residual_rms: 0.0,
        degenerate,
    })
}

/// Two-stage fit of a whole table. With `b_ref`, `gamma = -ln(b / b_ref)`.
pub fn fit_table(table: &ScanTable, b_ref: Option<f64>) -> Result<PhaseFit> {
    let rows: Vec<ThetaFit> = (0..table.phi_values.len())
        .map(|p| fit_theta(&table.theta_values, &table.row(p)))
        .collect::<Result<_>>()?;
    let amplitudes: Vec<f64> = rows.iter().map(|r| r.amplitude).collect();
    let mut fit = fit_phase(&table.phi_values, &amplitudes)?;
    fit.a = rows.iter().map(|r| r.a).sum::<f64>() / rows.len() as f64;
    if let Some(reference) = b_ref {
        fit.gamma = -(fit.b / reference).ln();
    }
    let residuals = table
        .pz
        .indexed_iter()
        .map(|((p, t), v)| v - fit.model(table.theta_values[t], table.phi_values[p]));
    fit.residual_rms = rms(residuals);
    Ok(fit)
}

/// Map an angle into `(-pi, pi]`.
pub fn wrap_phase(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

fn distinct(values: &[f64]) -> usize {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
    v.len()
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    if n == 0 {
        0.0
    } else {
        (sum / n as f64).sqrt()
    }
}
