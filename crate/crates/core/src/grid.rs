//! Structured grids and their spectral duals.
//!
//! Every field in the crate lives on a two-level layout `(outer, inner)`:
//!
//! | system           | outer axis          | inner axis     |
//! |------------------|---------------------|----------------|
//! | `CylindricalRz`  | rho (staggered, odd)| z (periodic)   |
//! | `Cartesian2e`    | z1 (periodic)       | z2 (periodic)  |
//! | `Cartesian1d`    | (singleton)         | z (periodic)   |
//!
//! so the inner axis is always a contiguous periodic row.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::radial::radial_basis;

/// Boundary rule of an axis, which also fixes its spectral basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Plane waves `exp(i k x)`.
    Periodic,
    /// Closed at the axis by symmetry, Dirichlet at the far end; spanned by
    /// the eigenbasis of the radial operator.
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoordinateSystem {
    CylindricalRz,
    Cartesian2e,
    Cartesian1d,
}

impl CoordinateSystem {
    pub fn name(self) -> &'static str {
        match self {
            CoordinateSystem::CylindricalRz => "cylindrical_rz",
            CoordinateSystem::Cartesian2e => "cartesian_2e",
            CoordinateSystem::Cartesian1d => "cartesian_1d",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "cylindrical_rz" => Some(CoordinateSystem::CylindricalRz),
            "cartesian_2e" => Some(CoordinateSystem::Cartesian2e),
            "cartesian_1d" => Some(CoordinateSystem::Cartesian1d),
            _ => None,
        }
    }

    pub(crate) fn code(self) -> u32 {
        match self {
            CoordinateSystem::CylindricalRz => 0,
            CoordinateSystem::Cartesian2e => 1,
            CoordinateSystem::Cartesian1d => 2,
        }
    }

    pub(crate) fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(CoordinateSystem::CylindricalRz),
            1 => Some(CoordinateSystem::Cartesian2e),
            2 => Some(CoordinateSystem::Cartesian1d),
            _ => None,
        }
    }
}

/// Measure attached to one node when summing over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolumeElement {
    /// `d rho * dz`; valid because the field is stored as `u = sqrt(2 pi rho) psi`.
    RhoZScaled,
    Dz,
    Dz1Dz2,
}

/// A uniform one-dimensional axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub n_points: usize,
    pub spacing: f64,
    pub origin_offset: f64,
    pub stagger: bool,
    pub boundary: Boundary,
}

impl Axis {
    /// Periodic axis spanning `[-L/2, L/2) + origin_offset`.
    pub fn periodic(n_points: usize, spacing: f64) -> Result<Self> {
        let axis = Axis {
            n_points,
            spacing,
            origin_offset: 0.0,
            stagger: false,
            boundary: Boundary::Periodic,
        };
        axis.validate()?;
        Ok(axis)
    }

    /// Staggered Dirichlet axis with nodes at `(j + 1/2) * spacing`.
    pub fn staggered_odd(n_points: usize, spacing: f64) -> Result<Self> {
        let axis = Axis {
            n_points,
            spacing,
            origin_offset: 0.0,
            stagger: true,
            boundary: Boundary::Odd,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn with_origin_offset(mut self, offset: f64) -> Result<Self> {
        self.origin_offset = offset;
        self.validate()?;
        Ok(self)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !self.n_points.is_power_of_two() || self.n_points < 2 {
            return Err(Error::InvalidGrid(format!(
                "node count {} is not a power of two >= 2",
                self.n_points
            )));
        }
        if !self.origin_offset.is_finite() {
            return Err(Error::InvalidGrid("origin offset is not finite".into()));
        }
        match (self.boundary, self.stagger) {
            (Boundary::Odd, true) if self.origin_offset == 0.0 => Ok(()),
            (Boundary::Odd, _) => Err(Error::InvalidGrid(
                "odd axes must be staggered and start at the origin".into(),
            )),
            (Boundary::Periodic, false) => Ok(()),
            (Boundary::Periodic, true) => {
                Err(Error::InvalidGrid("periodic axes are not staggered".into()))
            }
        }
    }

    /// Total extent `L = n * spacing`.
    pub fn length(&self) -> f64 {
        self.n_points as f64 * self.spacing
    }

    /// Coordinate of node `j`.
    #[inline]
    pub fn coordinate(&self, j: usize) -> f64 {
        match self.boundary {
            Boundary::Periodic => {
                self.origin_offset + (j as f64 - (self.n_points / 2) as f64) * self.spacing
            }
            Boundary::Odd => (j as f64 + 0.5) * self.spacing,
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.coordinate(j)).collect()
    }

    /// Lowest and highest node coordinates.
    pub fn bounds(&self) -> (f64, f64) {
        (self.coordinate(0), self.coordinate(self.n_points - 1))
    }

    /// Wavenumbers of the spectral basis, in transform output order.
    ///
    /// Periodic: `2 pi m / L` with the usual FFT wraparound.
    /// Odd: `sqrt(2 lambda_m)` for the radial eigenvalues, ascending.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let l = self.length();
        match self.boundary {
            Boundary::Periodic => (0..n)
                .map(|m| {
                    let signed = if m < n / 2 {
                        m as f64
                    } else {
                        m as f64 - n as f64
                    };
                    2.0 * PI * signed / l
                })
                .collect(),
            Boundary::Odd => radial_basis(n, self.spacing).wavenumbers(),
        }
    }

    /// Per-mode weights making `sum |c|^2 w` equal `sum |f|^2 spacing`
    /// for the raw (unnormalized) forward transform; the radial basis is
    /// orthonormal so its weight is the spacing.
    pub fn spectral_weights(&self) -> Vec<f64> {
        let n = self.n_points;
        let h = self.spacing;
        match self.boundary {
            Boundary::Periodic => vec![h / n as f64; n],
            Boundary::Odd => vec![h; n],
        }
    }
}

/// A structured grid: coordinate system plus its ordered axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    system: CoordinateSystem,
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(system: CoordinateSystem, axes: Vec<Axis>) -> Result<Self> {
        for axis in &axes {
            axis.validate()?;
        }
        let ok = match system {
            CoordinateSystem::CylindricalRz => {
                axes.len() == 2
                    && axes[0].boundary == Boundary::Odd
                    && axes[0].stagger
                    && axes[1].boundary == Boundary::Periodic
            }
            CoordinateSystem::Cartesian2e => {
                axes.len() == 2 && axes.iter().all(|a| a.boundary == Boundary::Periodic)
            }
            CoordinateSystem::Cartesian1d => {
                axes.len() == 1 && axes[0].boundary == Boundary::Periodic
            }
        };
        if !ok {
            return Err(Error::InvalidGrid(format!(
                "axis layout does not match {}",
                system.name()
            )));
        }
        Ok(Grid { system, axes })
    }

    /// Cylindrical `(rho, z)` grid.
    pub fn cylindrical(l_rho: f64, d_rho: f64, l_z: f64, dz: f64) -> Result<Self> {
        build_grid(CoordinateSystem::CylindricalRz, &[l_rho, l_z], &[d_rho, dz])
    }

    pub fn cartesian_1d(l: f64, dz: f64) -> Result<Self> {
        build_grid(CoordinateSystem::Cartesian1d, &[l], &[dz])
    }

    /// Two-electron grid; both electrons share the same axis.
    pub fn cartesian_2e(l: f64, dz: f64) -> Result<Self> {
        build_grid(CoordinateSystem::Cartesian2e, &[l, l], &[dz, dz])
    }

    /// Shift the periodic z axis (the inner axis) so it spans
    /// `[-L/2, L/2) + offset`. Not available on two-electron grids,
    /// whose axes must stay identical for exchange symmetry.
    pub fn with_z_offset(mut self, offset: f64) -> Result<Self> {
        if self.system == CoordinateSystem::Cartesian2e {
            return Err(Error::InvalidGrid(
                "two-electron axes must stay identical".into(),
            ));
        }
        let last = self.axes.len() - 1;
        self.axes[last] = self.axes[last].with_origin_offset(offset)?;
        Ok(self)
    }

    pub fn system(&self) -> CoordinateSystem {
        self.system
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// The periodic axis along which the pulse is polarized (z, or z2).
    pub fn inner_axis(&self) -> &Axis {
        self.axes.last().expect("grid has at least one axis")
    }

    /// Outer axis (rho or z1); `None` on one-dimensional grids.
    pub fn outer_axis(&self) -> Option<&Axis> {
        if self.axes.len() == 2 {
            Some(&self.axes[0])
        } else {
            None
        }
    }

    /// Storage shape `(outer, inner)`.
    pub fn shape(&self) -> (usize, usize) {
        match self.outer_axis() {
            Some(outer) => (outer.n_points, self.inner_axis().n_points),
            None => (1, self.inner_axis().n_points),
        }
    }

    pub fn len(&self) -> usize {
        let (a, b) = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume_element_rule(&self) -> VolumeElement {
        match self.system {
            CoordinateSystem::CylindricalRz => VolumeElement::RhoZScaled,
            CoordinateSystem::Cartesian2e => VolumeElement::Dz1Dz2,
            CoordinateSystem::Cartesian1d => VolumeElement::Dz,
        }
    }

    /// Measure of one node.
    pub fn volume_element(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Spectral dual of this grid.
    pub fn spectral(&self) -> SpectralSpace {
        SpectralSpace::new(self)
    }
}

/// Build a grid from extents and spacings, one pair per axis in storage
/// order (rho before z for the cylindrical system).
///
/// The node count of each axis is `extent / spacing`, which must land within
/// one node of a power of two; the spacing is kept exactly.
pub fn build_grid(system: CoordinateSystem, extents: &[f64], spacings: &[f64]) -> Result<Grid> {
    let expected = match system {
        CoordinateSystem::Cartesian1d => 1,
        _ => 2,
    };
    if extents.len() != expected || spacings.len() != expected {
        return Err(Error::InvalidGrid(format!(
            "{} needs {expected} extents and spacings",
            system.name()
        )));
    }
    let mut counts = Vec::with_capacity(expected);
    for (&extent, &spacing) in extents.iter().zip(spacings) {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {extent}"
            )));
        }
        let ratio = extent / spacing;
        let nearest = (ratio.max(1.0).log2().round()).exp2();
        if (ratio - nearest).abs() > 1.0 {
            return Err(Error::InvalidGrid(format!(
                "extent/spacing = {ratio} is not within one node of a power of two"
            )));
        }
        counts.push(nearest as usize);
    }
    let axes = match system {
        CoordinateSystem::CylindricalRz => vec![
            Axis::staggered_odd(counts[0], spacings[0])?,
            Axis::periodic(counts[1], spacings[1])?,
        ],
        CoordinateSystem::Cartesian2e => vec![
            Axis::periodic(counts[0], spacings[0])?,
            Axis::periodic(counts[1], spacings[1])?,
        ],
        CoordinateSystem::Cartesian1d => vec![Axis::periodic(counts[0], spacings[0])?],
    };
    Grid::new(system, axes)
}

/// Wavenumbers and Parseval weights of every axis of a grid.
#[derive(Debug, Clone)]
pub struct SpectralSpace {
    /// One array per grid axis, in the same order as [`Grid::axes`].
    pub wavenumbers: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
}

impl SpectralSpace {
    pub fn new(grid: &Grid) -> Self {
        SpectralSpace {
            wavenumbers: grid.axes().iter().map(Axis::wavenumbers).collect(),
            weights: grid.axes().iter().map(Axis::spectral_weights).collect(),
        }
    }

    /// Wavenumbers of the inner (z) axis.
    pub fn inner(&self) -> &[f64] {
        self.wavenumbers.last().expect("at least one axis")
    }

    /// Wavenumbers of the outer axis, if any.
    pub fn outer(&self) -> Option<&[f64]> {
        if self.wavenumbers.len() == 2 {
            Some(&self.wavenumbers[0])
        } else {
            None
        }
    }

    /// Per-mode Parseval weights in storage shape `(outer, inner)`.
    pub fn weight(&self, outer: usize, inner: usize) -> f64 {
        let wi = self.weights.last().expect("at least one axis")[inner];
        if self.weights.len() == 2 {
            self.weights[0][outer] * wi
        } else {
            wi
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_cylindrical_preset() {
        let g = build_grid(
            CoordinateSystem::CylindricalRz,
            &[512.0, 4096.0],
            &[0.25, 0.25],
        )
        .unwrap();
        assert_eq!(g.shape(), (2048, 16384));
        let rho = g.axes()[0].coordinates();
        assert_eq!(&rho[..3], &[0.125, 0.375, 0.625]);
        assert!(rho.iter().all(|&r| r != 0.0));
    }

    #[test]
    fn one_dimensional_grid_spans_symmetric_box() {
        let g = build_grid(CoordinateSystem::Cartesian1d, &[512.0], &[0.25]).unwrap();
        let z = g.inner_axis();
        assert_eq!(z.n_points, 2048);
        assert_eq!(z.bounds(), (-256.0, 255.75));
        assert_eq!(g.shape(), (1, 2048));
    }

    #[test]
    fn two_electron_grid() {
        let g = Grid::cartesian_2e(64.0, 0.5).unwrap();
        assert_eq!(g.shape(), (128, 128));
        assert_eq!(g.axes()[0].bounds().0, -32.0);
        assert_eq!(g.axes()[1].bounds().1, 31.5);
        assert_eq!(g.volume_element(), 0.25);
    }

    #[test]
    fn rejects_bad_resolution() {
        assert!(matches!(
            build_grid(CoordinateSystem::Cartesian1d, &[300.0], &[1.0]),
            Err(Error::InvalidGrid(_))
        ));
        assert!(build_grid(CoordinateSystem::Cartesian1d, &[64.0], &[0.0]).is_err());
        assert!(build_grid(CoordinateSystem::Cartesian1d, &[64.0], &[-0.5]).is_err());
        // within one node of 128
        assert!(build_grid(CoordinateSystem::Cartesian1d, &[64.4], &[0.5]).is_ok());
    }

    #[test]
    fn periodic_wavenumbers_wrap_and_peak_at_nyquist() {
        let axis = Axis::periodic(16, 0.5).unwrap();
        let k = axis.wavenumbers();
        assert_eq!(k[0], 0.0);
        let kmax = k.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!((kmax - PI / 0.5).abs() < 1e-14);
        assert!(k[8] < 0.0);
    }

    #[test]
    fn odd_wavenumbers_are_ascending_and_bounded() {
        let axis = Axis::staggered_odd(64, 0.25).unwrap();
        let k = axis.wavenumbers();
        assert!(k.windows(2).all(|w| w[0] < w[1]));
        // lowest mode: first zero of J0 over the box
        let l = 64.5 * 0.25;
        assert!((k[0] - 2.404_825_557_695_773 / l).abs() < 1e-3);
        // three-point operator: 2 lambda <= 4 / h^2
        assert!(k[63] <= 2.0 / 0.25 + 1e-12);
    }

    #[test]
    fn origin_offset_shifts_periodic_axis() {
        let g = Grid::cylindrical(16.0, 0.25, 64.0, 0.25)
            .unwrap()
            .with_z_offset(8.0)
            .unwrap();
        assert_eq!(g.inner_axis().bounds().0, -24.0);
        assert!(Grid::cartesian_2e(8.0, 0.5)
            .unwrap()
            .with_z_offset(1.0)
            .is_err());
    }

    #[test]
    fn layouts_are_enforced() {
        let p = Axis::periodic(8, 1.0).unwrap();
        let o = Axis::staggered_odd(8, 1.0).unwrap();
        assert!(Grid::new(CoordinateSystem::CylindricalRz, vec![p, o]).is_err());
        assert!(Grid::new(CoordinateSystem::Cartesian2e, vec![o, p]).is_err());
        assert!(Grid::new(CoordinateSystem::Cartesian1d, vec![p, p]).is_err());
        assert!(Axis::periodic(12, 1.0).is_err());
    }
}
