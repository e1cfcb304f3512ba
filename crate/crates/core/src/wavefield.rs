//! The propagated state and its observables.

use std::sync::Arc;

use ndarray::{Array1, Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{CoordinateSystem, Grid, SpectralSpace};
use crate::models::PotentialField;
use crate::spectral::Transformer;

/// How the stored amplitudes relate to the physical wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Psi,
    /// `u = sqrt(2 pi rho) psi`, used on cylindrical grids.
    UScaled,
}

impl Representation {
    pub fn for_system(system: CoordinateSystem) -> Self {
        match system {
            CoordinateSystem::CylindricalRz => Representation::UScaled,
            _ => Representation::Psi,
        }
    }
}

/// Complex amplitudes on a grid.
#[derive(Debug, Clone)]
pub struct WaveField {
    grid: Arc<Grid>,
    amplitudes: Array2<Complex64>,
    representation: Representation,
}

impl WaveField {
    pub fn new(grid: Arc<Grid>, amplitudes: Array2<Complex64>) -> Result<Self> {
        let (a, b) = grid.shape();
        if amplitudes.dim() != (a, b) {
            return Err(Error::ShapeMismatch {
                expected: vec![a, b],
                found: vec![amplitudes.dim().0, amplitudes.dim().1],
            });
        }
        let representation = Representation::for_system(grid.system());
        Ok(WaveField {
            grid,
            amplitudes,
            representation,
        })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let amplitudes = Array2::zeros(grid.shape());
        let representation = Representation::for_system(grid.system());
        WaveField {
            grid,
            amplitudes,
            representation,
        }
    }

    /// Sample `f(outer_coordinate, inner_coordinate)` at every node. On
    /// one-dimensional grids the outer coordinate is 0.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let inner = grid.inner_axis().coordinates();
        let outer = grid
            .outer_axis()
            .map(|a| a.coordinates())
            .unwrap_or_else(|| vec![0.0]);
        let amplitudes = Array2::from_shape_fn(grid.shape(), |(i, j)| f(outer[i], inner[j]));
        let representation = Representation::for_system(grid.system());
        WaveField {
            grid,
            amplitudes,
            representation,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn amplitudes(&self) -> &Array2<Complex64> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array2<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.volume_element()
    }

    /// Rescale to unit norm; fails on an all-zero field.
    pub fn normalize(&mut self) -> Result<()> {
        let n2 = self.norm_sqr();
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize a field with norm^2 = {n2}"
            )));
        }
        let s = 1.0 / n2.sqrt();
        self.amplitudes.mapv_inplace(|v| v * s);
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amplitudes.mapv_inplace(|v| v * factor);
    }

    pub fn max_amplitude(&self) -> f64 {
        self.amplitudes.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn has_non_finite(&self) -> bool {
        self.amplitudes
            .iter()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
    }

    fn check_compatible(&self, other: &WaveField) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &other.grid) && *self.grid != *other.grid {
            return Err(Error::GridMismatch("fields live on different grids".into()));
        }
        if self.representation != other.representation {
            return Err(Error::GridMismatch("representations differ".into()));
        }
        Ok(())
    }

    /// Position-space expectation of the inner coordinate. On two-electron
    /// grids this is `<z1 + z2>`.
    pub fn expectation_z(&self) -> f64 {
        let means = self.mean_positions();
        match self.grid.system() {
            CoordinateSystem::Cartesian2e => means[0] + means[1],
            _ => *means.last().expect("one axis"),
        }
    }

    /// `<x>` for every grid axis, in axis order (`[<rho>, <z>]`, `[<z1>, <z2>]`
    /// or `[<z>]`).
    pub fn mean_positions(&self) -> Vec<f64> {
        let norm = self.norm_sqr();
        let vol = self.grid.volume_element();
        let inner = self.grid.inner_axis().coordinates();
        let mut inner_sum = 0.0;
        let mut outer_sum = 0.0;
        let outer = self.grid.outer_axis().map(|a| a.coordinates());
        for ((i, j), v) in self.amplitudes.indexed_iter() {
            let p = v.norm_sqr();
            inner_sum += inner[j] * p;
            if let Some(o) = &outer {
                outer_sum += o[i] * p;
            }
        }
        let inner_mean = inner_sum * vol / norm;
        match outer {
            Some(_) => vec![outer_sum * vol / norm, inner_mean],
            None => vec![inner_mean],
        }
    }

    /// Marginal densities along each electron coordinate: one array for
    /// cylindrical and 1D grids (`P(z)`, integrated over rho), two for
    /// two-electron grids (`P(z1)`, `P(z2)`).
    pub fn density_z(&self) -> Vec<Vec<f64>> {
        let (n_outer, n_inner) = self.grid.shape();
        let inner_spacing = self.grid.inner_axis().spacing;
        let outer_spacing = self.grid.outer_axis().map(|a| a.spacing).unwrap_or(1.0);
        let mut along_inner = vec![0.0; n_inner];
        let mut along_outer = vec![0.0; n_outer];
        for ((i, j), v) in self.amplitudes.indexed_iter() {
            let p = v.norm_sqr();
            along_inner[j] += p;
            along_outer[i] += p;
        }
        along_inner.iter_mut().for_each(|p| *p *= outer_spacing);
        match self.grid.system() {
            CoordinateSystem::Cartesian2e => {
                along_outer.iter_mut().for_each(|p| *p *= inner_spacing);
                vec![along_outer, along_inner]
            }
            _ => vec![along_inner],
        }
    }

    /// Probability within `margin` nodes of the box edges of the periodic
    /// axes and the far edge of the radial axis.
    pub fn boundary_density(&self, margin: usize) -> f64 {
        let (n_outer, n_inner) = self.grid.shape();
        let vol = self.grid.volume_element();
        let system = self.grid.system();
        let mut total = 0.0;
        for ((i, j), v) in self.amplitudes.indexed_iter() {
            let inner_edge = j < margin || j + margin >= n_inner;
            let outer_edge = match system {
                CoordinateSystem::Cartesian1d => false,
                CoordinateSystem::CylindricalRz => i + margin >= n_outer,
                CoordinateSystem::Cartesian2e => i < margin || i + margin >= n_outer,
            };
            if inner_edge || outer_edge {
                total += v.norm_sqr();
            }
        }
        total * vol
    }
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner_product(a: &WaveField, b: &WaveField) -> Result<Complex64> {
    a.check_compatible(b)?;
    let sum: Complex64 = a
        .amplitudes
        .iter()
        .zip(b.amplitudes.iter())
        .map(|(x, y)| x.conj() * y)
        .sum();
    Ok(sum * a.grid.volume_element())
}

/// `|<a|b>|^2`.
pub fn fidelity(a: &WaveField, b: &WaveField) -> Result<f64> {
    Ok(inner_product(a, b)?.norm_sqr())
}

/// Spectral context of one grid: transform plans, wavenumbers, and the
/// diagonal operators built from them.
#[derive(Debug, Clone)]
pub struct SpectralOps {
    grid: Arc<Grid>,
    transformer: Transformer,
    spectral: SpectralSpace,
    /// `(k_outer^2 + k_inner^2) / 2` in storage shape.
    kinetic: Array2<f64>,
    /// Total z-momentum of a mode (`k_z`, or `k_z1 + k_z2`).
    momentum: Array2<f64>,
    /// Parseval weights.
    weights: Array2<f64>,
}

impl SpectralOps {
    pub fn new(grid: Arc<Grid>) -> Self {
        let transformer = Transformer::new(&grid);
        let spectral = grid.spectral();
        let shape = grid.shape();
        let inner = spectral.inner().to_vec();
        let outer = spectral.outer().map(<[f64]>::to_vec);
        let system = grid.system();
        let kinetic = Array2::from_shape_fn(shape, |(i, j)| {
            let ko = outer.as_ref().map_or(0.0, |o| o[i]);
            0.5 * (ko * ko + inner[j] * inner[j])
        });
        // the Nyquist mode has no sign, so its first-derivative symbol is 0;
        // a real field then carries exactly zero momentum
        let odd_symbol = |ks: &[f64]| -> Vec<f64> {
            let nyquist = ks.len() / 2;
            ks.iter()
                .enumerate()
                .map(|(j, &k)| {
                    if ks.len() % 2 == 0 && j == nyquist {
                        0.0
                    } else {
                        k
                    }
                })
                .collect()
        };
        let p_inner = odd_symbol(&inner);
        let p_outer = outer.as_deref().map(odd_symbol);
        let momentum = Array2::from_shape_fn(shape, |(i, j)| match system {
            CoordinateSystem::Cartesian2e => p_outer.as_ref().expect("two axes")[i] + p_inner[j],
            _ => p_inner[j],
        });
        let weights = Array2::from_shape_fn(shape, |(i, j)| spectral.weight(i, j));
        SpectralOps {
            grid,
            transformer,
            spectral,
            kinetic,
            momentum,
            weights,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn transformer(&self) -> &Transformer {
        &self.transformer
    }

    pub fn spectral(&self) -> &SpectralSpace {
        &self.spectral
    }

    pub fn kinetic(&self) -> &Array2<f64> {
        &self.kinetic
    }

    pub fn momentum(&self) -> &Array2<f64> {
        &self.momentum
    }

    fn check(&self, psi: &WaveField) -> Result<()> {
        if !Arc::ptr_eq(&self.grid, &psi.grid) && *self.grid != *psi.grid {
            return Err(Error::GridMismatch(
                "field and spectral context use different grids".into(),
            ));
        }
        Ok(())
    }

    /// Raw spectral coefficients of a field.
    pub fn transform_forward(&self, psi: &WaveField) -> Result<Array2<Complex64>> {
        self.check(psi)?;
        let mut c = psi.amplitudes.clone();
        self.transformer.forward(c.view_mut())?;
        Ok(c)
    }

    /// Field from raw spectral coefficients.
    pub fn transform_inverse(&self, coefficients: Array2<Complex64>) -> Result<WaveField> {
        let mut c = coefficients;
        self.transformer.inverse(c.view_mut())?;
        WaveField::new(self.grid.clone(), c)
    }

    /// Canonical momentum expectation `sum k |c|^2 w / sum |c|^2 w`.
    pub fn expectation_pz(&self, psi: &WaveField) -> Result<f64> {
        let c = self.transform_forward(psi)?;
        let mut num = 0.0;
        let mut den = 0.0;
        Zip::from(&c)
            .and(&self.momentum)
            .and(&self.weights)
            .for_each(|v, &k, &w| {
                let p = v.norm_sqr() * w;
                num += k * p;
                den += p;
            });
        Ok(num / den)
    }

    /// Field-free kinetic energy `<T>` (not divided by the norm).
    fn kinetic_energy(&self, coefficients: &Array2<Complex64>) -> f64 {
        let mut t = 0.0;
        Zip::from(coefficients)
            .and(&self.kinetic)
            .and(&self.weights)
            .for_each(|v, &k, &w| t += k * v.norm_sqr() * w);
        t
    }

    /// `<psi|T + V|psi> / <psi|psi>`.
    pub fn total_energy(&self, psi: &WaveField, potential: &PotentialField) -> Result<f64> {
        self.check(psi)?;
        potential.check_grid(&self.grid)?;
        let c = self.transform_forward(psi)?;
        let kinetic = self.kinetic_energy(&c);
        let mut v = 0.0;
        Zip::from(&psi.amplitudes)
            .and(potential.values())
            .for_each(|a, &u| v += u * a.norm_sqr());
        let potential_energy = v * self.grid.volume_element();
        Ok((kinetic + potential_energy) / psi.norm_sqr())
    }

    /// Copy of `psi` translated by `shift` along every electron z axis
    /// (exact spectral shift on the periodic axes).
    pub fn translated(&self, psi: &WaveField, shift: f64) -> Result<WaveField> {
        let mut c = self.transform_forward(psi)?;
        Zip::from(&mut c)
            .and(&self.momentum)
            .for_each(|v, &k| *v *= Complex64::from_polar(1.0, -k * shift));
        self.transform_inverse(c)
    }
}

/// Density `P(z, t)` integrated over the remaining coordinates, with the
/// displacement overlay `alpha(t)`.
#[derive(Debug, Clone)]
pub struct DensityTrace {
    pub times: Vec<f64>,
    pub z_axis: Vec<f64>,
    /// Row `t`, column `z`.
    pub density: Array2<f64>,
    pub alpha_overlay: Vec<f64>,
}

impl DensityTrace {
    pub fn new(z_axis: Vec<f64>) -> Self {
        let n = z_axis.len();
        DensityTrace {
            times: Vec::new(),
            z_axis,
            density: Array2::zeros((0, n)),
            alpha_overlay: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, density: &[f64], alpha: f64) -> Result<()> {
        if density.len() != self.z_axis.len() {
            return Err(Error::ShapeMismatch {
                expected: vec![self.z_axis.len()],
                found: vec![density.len()],
            });
        }
        self.density
            .push_row(Array1::from(density.to_vec()).view())
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        self.times.push(time);
        self.alpha_overlay.push(alpha);
        Ok(())
    }

    /// `sum_z P(z, t) dz` for each stored time.
    pub fn integrals(&self) -> Vec<f64> {
        let dz = if self.z_axis.len() > 1 {
            self.z_axis[1] - self.z_axis[0]
        } else {
            1.0
        };
        self.density
            .rows()
            .into_iter()
            .map(|r| r.sum() * dz)
            .collect()
    }
}
