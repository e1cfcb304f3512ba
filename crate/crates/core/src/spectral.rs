//! Forward and inverse spectral transforms on a [`Grid`].
//!
//! Periodic axes use a complex FFT. The staggered radial axis is expanded
//! in the orthonormal eigenbasis of the discrete radial operator (see
//! [`crate::radial`]), applied as a real matrix product over all columns.
//!
//! The forward transform is unnormalized; [`Transformer::mode_scale`] holds
//! the per-mode factor that makes synthesis its exact inverse (`1/n` per
//! periodic axis, 1 on the radial axis).

use std::sync::Arc;

use ndarray::{Array2, ArrayViewMut2, Axis as NdAxis, Zip};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Axis, Boundary, Grid};
use crate::radial::{radial_basis, RadialBasis};

const COLUMN_BATCH: usize = 16;

/// Transform along one axis of the storage layout.
#[derive(Clone)]
enum AxisTransform {
    Periodic {
        n: usize,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
    },
    Radial(Arc<RadialBasis>),
    /// Singleton outer axis of a one-dimensional grid.
    Identity,
}

impl AxisTransform {
    fn new(axis: &Axis, planner: &mut FftPlanner<f64>) -> Self {
        let n = axis.n_points;
        match axis.boundary {
            Boundary::Periodic => AxisTransform::Periodic {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            },
            Boundary::Odd => AxisTransform::Radial(radial_basis(n, axis.spacing)),
        }
    }

    fn scratch_len(&self) -> usize {
        match self {
            AxisTransform::Periodic {
                forward, inverse, ..
            } => forward
                .get_inplace_scratch_len()
                .max(inverse.get_inplace_scratch_len()),
            _ => 0,
        }
    }

    /// Mode scaling that turns raw coefficients into synthesis amplitudes.
    fn mode_scale(&self) -> Vec<f64> {
        match self {
            AxisTransform::Periodic { n, .. } => vec![1.0 / *n as f64; *n],
            AxisTransform::Radial(basis) => vec![1.0; basis.len()],
            AxisTransform::Identity => vec![1.0],
        }
    }

    /// FFT of one contiguous line in place.
    fn fft_line(&self, line: &mut [Complex64], scratch: &mut [Complex64], synth: bool) {
        if let AxisTransform::Periodic {
            forward, inverse, ..
        } = self
        {
            if synth {
                inverse.process_with_scratch(line, scratch);
            } else {
                forward.process_with_scratch(line, scratch);
            }
        }
    }
}

/// Precomputed transform plans for one grid.
///
/// Plans are immutable; the same `Transformer` can be shared by any number of
/// threads transforming different buffers.
#[derive(Clone)]
pub struct Transformer {
    shape: (usize, usize),
    outer: AxisTransform,
    inner: AxisTransform,
    mode_scale: Array2<f64>,
}

impl std::fmt::Debug for Transformer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transformer")
            .field("shape", &self.shape)
            .finish()
    }
}

impl Transformer {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let inner = AxisTransform::new(grid.inner_axis(), &mut planner);
        let outer = match grid.outer_axis() {
            Some(axis) => AxisTransform::new(axis, &mut planner),
            None => AxisTransform::Identity,
        };
        let so = outer.mode_scale();
        let si = inner.mode_scale();
        let mode_scale = Array2::from_shape_fn(grid.shape(), |(i, j)| so[i] * si[j]);
        Transformer {
            shape: grid.shape(),
            outer,
            inner,
            mode_scale,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    /// Factor that `inverse_unscaled` expects to have been applied per mode.
    pub fn mode_scale(&self) -> &Array2<f64> {
        &self.mode_scale
    }

    fn check(&self, data: &ArrayViewMut2<Complex64>) -> Result<()> {
        if data.dim() != self.shape {
            return Err(Error::ShapeMismatch {
                expected: vec![self.shape.0, self.shape.1],
                found: vec![data.dim().0, data.dim().1],
            });
        }
        Ok(())
    }

    /// Raw forward transform in place (no normalization).
    pub fn forward(&self, mut data: ArrayViewMut2<Complex64>) -> Result<()> {
        self.check(&data)?;
        self.apply_inner(&mut data, false);
        self.apply_outer(&mut data, false);
        Ok(())
    }

    /// Exact inverse of [`Transformer::forward`].
    pub fn inverse(&self, mut data: ArrayViewMut2<Complex64>) -> Result<()> {
        self.check(&data)?;
        data.zip_mut_with(&self.mode_scale, |c, &s| *c *= s);
        self.apply_outer(&mut data, true);
        self.apply_inner(&mut data, true);
        Ok(())
    }

    /// Synthesis without the per-mode scaling; callers fold
    /// [`Transformer::mode_scale`] into their own spectral multiplier.
    pub fn inverse_unscaled(&self, mut data: ArrayViewMut2<Complex64>) -> Result<()> {
        self.check(&data)?;
        self.apply_outer(&mut data, true);
        self.apply_inner(&mut data, true);
        Ok(())
    }

    fn apply_inner(&self, data: &mut ArrayViewMut2<Complex64>, synth: bool) {
        let transform = &self.inner;
        let scratch_len = transform.scratch_len();
        let rows: Vec<_> = data.axis_iter_mut(NdAxis(0)).collect();
        rows.into_par_iter().for_each_init(
            || {
                (
                    vec![Complex64::default(); scratch_len],
                    vec![Complex64::default(); self.shape.1],
                )
            },
            |(scratch, line), mut row| match row.as_slice_mut() {
                Some(slice) => transform.fft_line(slice, scratch, synth),
                None => {
                    for (dst, src) in line.iter_mut().zip(row.iter()) {
                        *dst = *src;
                    }
                    transform.fft_line(line, scratch, synth);
                    for (dst, src) in row.iter_mut().zip(line.iter()) {
                        *dst = *src;
                    }
                }
            },
        );
    }

    fn apply_outer(&self, data: &mut ArrayViewMut2<Complex64>, synth: bool) {
        match &self.outer {
            AxisTransform::Identity => {}
            AxisTransform::Radial(basis) => {
                let matrix = if synth {
                    basis.vectors()
                } else {
                    basis.analysis()
                };
                let re = matrix.dot(&data.mapv(|c| c.re));
                let im = matrix.dot(&data.mapv(|c| c.im));
                Zip::from(data)
                    .and(&re)
                    .and(&im)
                    .for_each(|c, &r, &i| *c = Complex64::new(r, i));
            }
            transform @ AxisTransform::Periodic { .. } => {
                self.fft_columns(transform, data, synth);
            }
        }
    }

    /// Column transforms by batched gather/scatter into contiguous lines.
    fn fft_columns(
        &self,
        transform: &AxisTransform,
        data: &mut ArrayViewMut2<Complex64>,
        synth: bool,
    ) {
        let n_outer = self.shape.0;
        let scratch_len = transform.scratch_len();
        let blocks: Vec<_> = data.axis_chunks_iter_mut(NdAxis(1), COLUMN_BATCH).collect();
        blocks.into_par_iter().for_each_init(
            || {
                (
                    vec![Complex64::default(); scratch_len],
                    vec![Complex64::default(); n_outer * COLUMN_BATCH],
                )
            },
            |(scratch, batch), mut block| {
                let width = block.ncols();
                for (i, row) in block.axis_iter(NdAxis(0)).enumerate() {
                    for (b, v) in row.iter().enumerate() {
                        batch[b * n_outer + i] = *v;
                    }
                }
                for b in 0..width {
                    transform.fft_line(&mut batch[b * n_outer..(b + 1) * n_outer], scratch, synth);
                }
                for (i, mut row) in block.axis_iter_mut(NdAxis(0)).enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = batch[b * n_outer + i];
                    }
                }
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::CoordinateSystem;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(shape: (usize, usize), seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn(shape, |_| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn round_trip_all_systems() {
        let grids = [
            Grid::cartesian_1d(64.0, 0.5).unwrap(),
            Grid::cylindrical(16.0, 0.25, 32.0, 0.5).unwrap(),
            Grid::cartesian_2e(16.0, 0.25).unwrap(),
        ];
        for (s, grid) in grids.iter().enumerate() {
            let t = Transformer::new(grid);
            let original = random_field(grid.shape(), s as u64);
            let mut data = original.clone();
            t.forward(data.view_mut()).unwrap();
            t.inverse(data.view_mut()).unwrap();
            let scale = original.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(max_abs_diff(&data, &original) / scale < 1e-12);
        }
    }

    #[test]
    fn radial_axis_applies_the_eigenbasis() {
        let grid = Grid::cylindrical(4.0, 0.25, 2.0, 0.5).unwrap();
        let t = Transformer::new(&grid);
        let (n_rho, n_z) = grid.shape();
        let original = random_field(grid.shape(), 7);
        let mut data = original.clone();
        t.forward(data.view_mut()).unwrap();
        let mut z_only = original.clone();
        for mut row in z_only.axis_iter_mut(NdAxis(0)) {
            let mut line = row.to_vec();
            FftPlanner::new()
                .plan_fft_forward(line.len())
                .process(&mut line);
            row.assign(&ndarray::Array1::from(line));
        }
        let q = radial_basis(n_rho, 0.25);
        for col in 0..n_z {
            for m in 0..n_rho {
                let expected: Complex64 = (0..n_rho)
                    .map(|j| z_only[[j, col]] * q.vectors()[[j, m]])
                    .sum();
                assert!((data[[m, col]] - expected).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn radial_kinetic_equals_tridiagonal_operator() {
        let grid = Grid::cylindrical(8.0, 0.125, 2.0, 1.0).unwrap();
        let (n_rho, _) = grid.shape();
        let (diag, off) = crate::radial::radial_operator(n_rho, 0.125);
        let lambda = radial_basis(n_rho, 0.125).eigenvalues().to_vec();
        let t = Transformer::new(&grid);
        let original = random_field(grid.shape(), 3);
        let mut data = original.clone();
        t.forward(data.view_mut()).unwrap();
        for ((i, _), v) in data.indexed_iter_mut() {
            *v *= lambda[i];
        }
        t.inverse(data.view_mut()).unwrap();
        let scale = diag[0];
        for ((i, j), v) in data.indexed_iter() {
            let mut expected = diag[i] * original[[i, j]];
            if i > 0 {
                expected += off[i - 1] * original[[i - 1, j]];
            }
            if i + 1 < n_rho {
                expected += off[i] * original[[i + 1, j]];
            }
            assert!((v - expected).norm() / scale < 1e-12);
        }
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let grid = Grid::cartesian_1d(32.0, 0.25).unwrap();
        let axis = grid.inner_axis();
        let k = axis.wavenumbers();
        let k0 = k[5];
        let z = axis.coordinates();
        let t = Transformer::new(&grid);
        let mut data =
            Array2::from_shape_fn(grid.shape(), |(_, j)| Complex64::from_polar(1.0, k0 * z[j]));
        t.forward(data.view_mut()).unwrap();
        for (j, v) in data.row(0).iter().enumerate() {
            if j == 5 {
                assert!((v.norm() - axis.n_points as f64).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn parseval_with_spectral_weights() {
        for grid in [
            Grid::cylindrical(8.0, 0.125, 16.0, 0.25).unwrap(),
            Grid::cartesian_2e(8.0, 0.125).unwrap(),
            Grid::cartesian_1d(64.0, 0.125).unwrap(),
        ] {
            let t = Transformer::new(&grid);
            let spectral = grid.spectral();
            let original = random_field(grid.shape(), 11);
            let position: f64 =
                original.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.volume_element();
            let mut data = original.clone();
            t.forward(data.view_mut()).unwrap();
            let momentum: f64 = data
                .indexed_iter()
                .map(|((i, j), v)| v.norm_sqr() * spectral.weight(i, j))
                .sum();
            assert!((position - momentum).abs() / position < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let grid = Grid::cartesian_1d(16.0, 0.5).unwrap();
        let t = Transformer::new(&grid);
        let mut wrong = Array2::<Complex64>::zeros((1, 16));
        assert!(matches!(
            t.forward(wrong.view_mut()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn round_trip_sizes_64_to_4096() {
        let mut n = 64usize;
        while n <= 4096 {
            for system in [
                CoordinateSystem::Cartesian1d,
                CoordinateSystem::CylindricalRz,
            ] {
                let grid = match system {
                    CoordinateSystem::Cartesian1d => {
                        Grid::cartesian_1d(n as f64 * 0.25, 0.25).unwrap()
                    }
                    // dense radial basis: keep the eigensolve small
                    _ if n > 1024 => continue,
                    _ => Grid::cylindrical(n as f64 * 0.25, 0.25, 1.0, 0.5).unwrap(),
                };
                let t = Transformer::new(&grid);
                let original = random_field(grid.shape(), n as u64);
                let mut data = original.clone();
                t.forward(data.view_mut()).unwrap();
                t.inverse(data.view_mut()).unwrap();
                assert!(max_abs_diff(&data, &original) < 1e-12);
            }
            n *= 4;
        }
    }
}
