//! Physical model content: potentials and analytically prepared states.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{CoordinateSystem, Grid};
use crate::wavefield::{inner_product, WaveField};

/// Pair term `C / sqrt((z1 - z2)^2 + a)` of the reduced helium model.
pub const HELIUM_PAIR_STRENGTH: f64 = 0.6317;
pub const HELIUM_PAIR_SOFTENING: f64 = 0.09168;
/// One-body term `-Z / sqrt(z^2 + a)` of the reduced helium model.
pub const HELIUM_ION_CHARGE: f64 = 1.1225;
pub const HELIUM_ION_SOFTENING: f64 = 0.09169;

/// Boundary amplitude allowed for an analytic state, relative to its peak.
pub const TAIL_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PotentialLabel {
    Coulomb,
    Chain,
    HeliumPair,
    HeliumIon1d,
    Custom(String),
}

impl fmt::Display for PotentialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialLabel::Coulomb => write!(f, "coulomb"),
            PotentialLabel::Chain => write!(f, "chain"),
            PotentialLabel::HeliumPair => write!(f, "helium_pair"),
            PotentialLabel::HeliumIon1d => write!(f, "helium_ion_1d"),
            PotentialLabel::Custom(name) => write!(f, "{name}"),
        }
    }
}

/// Real potential sampled on a grid.
///
/// Holds physical values only; the `-1/(8 rho^2)` term of the
/// u-representation belongs to the radial kinetic operator.
#[derive(Debug, Clone)]
pub struct PotentialField {
    grid: Arc<Grid>,
    values: Array2<f64>,
    label: PotentialLabel,
}

impl PotentialField {
    pub fn new(grid: Arc<Grid>, values: Array2<f64>, label: PotentialLabel) -> Result<Self> {
        let shape = grid.shape();
        if values.dim() != shape {
            return Err(Error::ShapeMismatch {
                expected: vec![shape.0, shape.1],
                found: vec![values.dim().0, values.dim().1],
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{label} potential has non-finite values"
            )));
        }
        Ok(PotentialField {
            grid,
            values,
            label,
        })
    }

    /// Sample `f(outer, inner)`; panics only if `f` returns non-finite values.
    pub fn from_fn(grid: Arc<Grid>, label: &str, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::sample(grid, PotentialLabel::Custom(label.to_string()), f)
            .expect("potential function returned non-finite values")
    }

    fn sample(grid: Arc<Grid>, label: PotentialLabel, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let inner = grid.inner_axis().coordinates();
        let outer = grid
            .outer_axis()
            .map(|a| a.coordinates())
            .unwrap_or_else(|| vec![0.0]);
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| f(outer[i], inner[j]));
        Self::new(grid, values, label)
    }

    /// The zero potential on a grid.
    pub fn zero(grid: Arc<Grid>) -> Self {
        let values = Array2::zeros(grid.shape());
        Self::new(grid, values, PotentialLabel::Custom("free".into())).expect("zeros are finite")
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn label(&self) -> &PotentialLabel {
        &self.label
    }

    /// Pointwise sum of two potentials on the same grid.
    pub fn plus(&self, other: &PotentialField, label: PotentialLabel) -> Result<Self> {
        other.check_grid(&self.grid)?;
        Self::new(self.grid.clone(), &self.values + &other.values, label)
    }

    pub(crate) fn check_grid(&self, grid: &Arc<Grid>) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, grid) && *self.grid != **grid {
            return Err(Error::GridMismatch(
                "potential lives on a different grid".into(),
            ));
        }
        Ok(())
    }
}

fn require_system(grid: &Grid, system: CoordinateSystem, what: &str) -> Result<()> {
    if grid.system() != system {
        return Err(Error::GridMismatch(format!(
            "{what} needs a {} grid, got {}",
            system.name(),
            grid.system().name()
        )));
    }
    Ok(())
}

/// `-Z / sqrt(rho^2 + z^2)` on a cylindrical grid.
pub fn coulomb_potential(grid: Arc<Grid>, charge: f64) -> Result<PotentialField> {
    coulomb_potential_at(grid, charge, 0.0)
}

/// Bare Coulomb well centred at `(rho = 0, z = center)`.
pub fn coulomb_potential_at(grid: Arc<Grid>, charge: f64, center: f64) -> Result<PotentialField> {
    require_system(&grid, CoordinateSystem::CylindricalRz, "coulomb potential")?;
    PotentialField::sample(grid, PotentialLabel::Coulomb, |rho, z| {
        -charge / (rho * rho + (z - center).powi(2)).sqrt()
    })
}

/// Site positions `(n + 1 - 2i) R / 2`, `i = 1..=n`, leftmost last.
pub fn chain_sites(spacing: f64, n_sites: usize) -> Vec<f64> {
    (1..=n_sites)
        .map(|i| (n_sites as f64 + 1.0 - 2.0 * i as f64) * spacing / 2.0)
        .collect()
}

/// Linear chain of bare Coulomb sites along z.
pub fn chain_potential(
    grid: Arc<Grid>,
    charge: f64,
    spacing: f64,
    n_sites: usize,
) -> Result<PotentialField> {
    require_system(&grid, CoordinateSystem::CylindricalRz, "chain potential")?;
    let sites = chain_sites(spacing, n_sites);
    let (lo, hi) = grid.inner_axis().bounds();
    if let Some(&bad) = sites.iter().find(|&&s| s <= lo || s >= hi) {
        return Err(Error::BoxTooSmall {
            what: format!("chain site at z = {bad}"),
            required: 2.0 * bad.abs(),
            available: hi - lo,
        });
    }
    PotentialField::sample(grid, PotentialLabel::Chain, |rho, z| {
        -sites
            .iter()
            .map(|s| charge / ((z - s).powi(2) + rho * rho).sqrt())
            .sum::<f64>()
    })
}

/// One-body soft-core well of the reduced helium model on a 1D grid.
pub fn helium_ion_potential(grid: Arc<Grid>) -> Result<PotentialField> {
    require_system(&grid, CoordinateSystem::Cartesian1d, "helium ion model")?;
    PotentialField::sample(grid, PotentialLabel::HeliumIon1d, |_, z| helium_one_body(z))
}

#[inline]
pub fn helium_one_body(z: f64) -> f64 {
    -HELIUM_ION_CHARGE / (z * z + HELIUM_ION_SOFTENING).sqrt()
}

#[inline]
pub fn helium_pair(z1: f64, z2: f64) -> f64 {
    HELIUM_PAIR_STRENGTH / ((z1 - z2).powi(2) + HELIUM_PAIR_SOFTENING).sqrt()
}

/// Potential terms of the two-electron helium model.
#[derive(Debug, Clone)]
pub struct HeliumModel {
    /// Electron-electron repulsion.
    pub pair: PotentialField,
    /// Nuclear attraction summed over both electrons.
    pub one_body: PotentialField,
}

impl HeliumModel {
    pub fn total(&self) -> PotentialField {
        self.pair
            .plus(&self.one_body, PotentialLabel::Custom("helium".into()))
            .expect("terms share a grid")
    }
}

pub fn helium_model(grid: Arc<Grid>) -> Result<HeliumModel> {
    require_system(&grid, CoordinateSystem::Cartesian2e, "helium model")?;
    let pair = PotentialField::sample(grid.clone(), PotentialLabel::HeliumPair, helium_pair)?;
    let one_body = PotentialField::sample(
        grid,
        PotentialLabel::Custom("helium_one_body".into()),
        |z1, z2| helium_one_body(z1) + helium_one_body(z2),
    )?;
    Ok(HeliumModel { pair, one_body })
}

/// Hydrogen bound state `(n, l, m = 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HydrogenicLabel {
    pub n: u32,
    pub l: u32,
}

impl HydrogenicLabel {
    pub fn new(n: u32, l: u32) -> Result<Self> {
        if n == 0 || l >= n {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= l < n, got n = {n}, l = {l}"
            )));
        }
        Ok(HydrogenicLabel { n, l })
    }

    /// `-1 / (2 n^2)`.
    pub fn energy(&self) -> f64 {
        -0.5 / (self.n as f64).powi(2)
    }

    /// `R_nl(r)` for `Z = 1`, normalized so `int R^2 r^2 dr = 1`.
    pub fn radial(&self, r: f64) -> f64 {
        let n = self.n as f64;
        let l = self.l as i32;
        let x = 2.0 * r / n;
        let k = self.n - self.l - 1;
        let log_norm = 0.5
            * (3.0 * (2.0 / n).ln() + ln_factorial(k)
                - (2.0 * n).ln()
                - ln_factorial(self.n + self.l));
        let laguerre = generalized_laguerre(k, (2 * self.l + 1) as f64, x);
        if x == 0.0 {
            return if l == 0 {
                log_norm.exp() * laguerre
            } else {
                0.0
            };
        }
        let log_envelope = log_norm - x / 2.0 + l as f64 * x.ln();
        log_envelope.exp() * laguerre
    }

    /// Smallest radius beyond which `|R_nl|` stays below `tolerance` times
    /// its peak.
    pub fn required_extent(&self, tolerance: f64) -> f64 {
        let n = self.n as f64;
        let r_max = 40.0 * n * n + 100.0;
        let step = 0.01 * n;
        let samples: Vec<(f64, f64)> = (1..)
            .map(|i| i as f64 * step)
            .take_while(|&r| r <= r_max)
            .map(|r| (r, self.radial(r).abs()))
            .collect();
        let peak = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        let mut extent = r_max;
        for &(r, v) in samples.iter().rev() {
            if v >= tolerance * peak {
                break;
            }
            extent = r;
        }
        extent
    }
}

impl fmt::Display for HydrogenicLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const L: [char; 10] = ['s', 'p', 'd', 'f', 'g', 'h', 'i', 'k', 'l', 'm'];
        match L.get(self.l as usize) {
            Some(c) => write!(f, "{}{}", self.n, c),
            None => write!(f, "n{}l{}", self.n, self.l),
        }
    }
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// `L_k^{(a)}(x)` by the three-term recurrence.
fn generalized_laguerre(k: u32, a: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for j in 1..k {
        let j = j as f64;
        let next = ((2.0 * j + 1.0 + a - x) * cur - (j + a) * prev) / (j + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `Y_l0(theta)` as a function of `cos(theta)`.
fn spherical_harmonic_m0(l: u32, cos_theta: f64) -> f64 {
    let mut p_prev = 1.0;
    let mut p = cos_theta;
    let legendre = if l == 0 {
        1.0
    } else {
        for k in 1..l {
            let k = k as f64;
            let next = ((2.0 * k + 1.0) * cos_theta * p - k * p_prev) / (k + 1.0);
            p_prev = p;
            p = next;
        }
        p
    };
    ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * legendre
}

/// `i^l`, the phase attached to every `|n l 0>` so that `<l|p_z|l+1>` is real.
fn angular_phase(l: u32) -> Complex64 {
    match l % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Sampled hydrogen eigenstate in u-representation, normalized on the grid.
///
/// States carry the phase `i^l`; with it the dipole matrix elements
/// `<n l|p_z|n' l+1>` are real and a superposition with relative phase 0
/// carries the largest current.
pub fn hydrogenic_state(label: HydrogenicLabel, grid: Arc<Grid>) -> Result<WaveField> {
    require_system(&grid, CoordinateSystem::CylindricalRz, "hydrogenic state")?;
    let required = label.required_extent(TAIL_TOLERANCE);
    let (z_lo, z_hi) = grid.inner_axis().bounds();
    let available = grid.axes()[0].length().min(-z_lo).min(z_hi);
    if available < required {
        return Err(Error::BoxTooSmall {
            what: format!("state {label}"),
            required,
            available,
        });
    }
    let phase = angular_phase(label.l);
    let field = WaveField::from_fn(grid, |rho, z| {
        let r = (rho * rho + z * z).sqrt();
        let psi = label.radial(r) * spherical_harmonic_m0(label.l, z / r);
        phase * ((2.0 * PI * rho).sqrt() * psi)
    });
    field.normalized()
}

/// Two-state superposition `cos(theta) |i> + sin(theta) e^{i phi} |j>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperpositionSpec {
    pub theta_r: f64,
    pub phi: f64,
    pub lower: HydrogenicLabel,
    pub upper: HydrogenicLabel,
}

impl SuperpositionSpec {
    pub fn new(
        theta_r: f64,
        phi: f64,
        lower: HydrogenicLabel,
        upper: HydrogenicLabel,
    ) -> Result<Self> {
        let spec = SuperpositionSpec {
            theta_r,
            phi,
            lower,
            upper,
        };
        if !(spec.delta_e() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "{upper} must lie above {lower}"
            )));
        }
        Ok(spec)
    }

    /// `E_upper - E_lower`.
    pub fn delta_e(&self) -> f64 {
        self.upper.energy() - self.lower.energy()
    }

    /// Pump-probe delay `phi / dE`.
    pub fn delay(&self) -> f64 {
        self.phi / self.delta_e()
    }
}

/// Superposition of two hydrogen states from their grid samples.
pub fn superposition(spec: &SuperpositionSpec, grid: Arc<Grid>) -> Result<WaveField> {
    let lower = hydrogenic_state(spec.lower, grid.clone())?;
    let upper = hydrogenic_state(spec.upper, grid)?;
    superpose(spec.theta_r, spec.phi, &lower, &upper)
}

/// `cos(theta) a + sin(theta) e^{i phi} b`, normalized.
pub fn superpose(theta_r: f64, phi: f64, a: &WaveField, b: &WaveField) -> Result<WaveField> {
    if **a.grid() != **b.grid() {
        return Err(Error::GridMismatch(
            "superposed states differ in grid".into(),
        ));
    }
    let ca = Complex64::new(theta_r.cos(), 0.0);
    let cb = Complex64::from_polar(theta_r.sin(), phi);
    let mut amplitudes = a.amplitudes().mapv(|v| v * ca);
    amplitudes.zip_mut_with(b.amplitudes(), |x, y| *x += y * cb);
    WaveField::new(a.grid().clone(), amplitudes)?.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    /// Symmetric spatial part.
    Singlet,
    /// Antisymmetric spatial part.
    Triplet,
}

impl Spin {
    pub fn exchange_sign(self) -> f64 {
        match self {
            Spin::Singlet => 1.0,
            Spin::Triplet => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Spin::Singlet => "singlet",
            Spin::Triplet => "triplet",
        }
    }
}

/// `(a(z1) b(z2) +/- b(z1) a(z2)) / sqrt(2)` from orthonormal 1D states.
pub fn two_electron_state(
    a: &WaveField,
    b: &WaveField,
    spin: Spin,
    grid: Arc<Grid>,
) -> Result<WaveField> {
    require_system(&grid, CoordinateSystem::Cartesian2e, "two-electron state")?;
    for chi in [a, b] {
        require_system(chi.grid(), CoordinateSystem::Cartesian1d, "orbital")?;
        if chi.grid().inner_axis() != &grid.axes()[0] {
            return Err(Error::GridMismatch(
                "orbital axis differs from the two-electron axes".into(),
            ));
        }
        if (chi.norm_sqr() - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidParameter(format!(
                "orbital norm^2 = {} is not 1",
                chi.norm_sqr()
            )));
        }
    }
    let overlap = inner_product(a, b)?.norm();
    if overlap > 1e-6 {
        return Err(Error::NotOrthogonal(overlap));
    }
    let s = spin.exchange_sign();
    let ra = a.amplitudes().row(0);
    let rb = b.amplitudes().row(0);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let amplitudes = Array2::from_shape_fn(grid.shape(), |(i, j)| {
        (ra[i] * rb[j] + s * rb[i] * ra[j]) * inv_sqrt2
    });
    WaveField::new(grid, amplitudes)
}

/// Largest `|psi(z1, z2) - s psi(z2, z1)|` relative to `max |psi|`:
/// zero for an exact singlet (`s = +1`) or triplet (`s = -1`).
pub fn exchange_residual(psi: &WaveField, spin: Spin) -> f64 {
    let a = psi.amplitudes();
    let s = spin.exchange_sign();
    let scale = psi.max_amplitude();
    let n = a.nrows().min(a.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[[i, j]] - s * a[[j, i]]).norm());
        }
    }
    worst / scale
}

/// `max_z |psi(z, z)| / max |psi|`.
pub fn diagonal_amplitude(psi: &WaveField) -> f64 {
    let a = psi.amplitudes();
    let n = a.nrows().min(a.ncols());
    (0..n).map(|i| a[[i, i]].norm()).fold(0.0, f64::max) / psi.max_amplitude()
}
