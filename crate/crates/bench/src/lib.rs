//! Fixtures shared by the propagation benchmarks.

use std::sync::Arc;

use kickshift_core::models::{coulomb_potential, helium_model, hydrogenic_state};
use kickshift_core::{Grid, HydrogenicLabel, PotentialField, WaveField};

/// Hydrogen 2p on an `n_rho x n_z` cylindrical grid with spacing 0.25.
pub fn cylindrical_case(n_rho: usize, n_z: usize) -> (PotentialField, WaveField) {
    let d = 0.25;
    let grid = Grid::cylindrical(n_rho as f64 * d, d, n_z as f64 * d, d)
        .and_then(|g| g.with_z_offset(d / 2.0))
        .expect("power-of-two grid");
    let grid = Arc::new(grid);
    let v = coulomb_potential(grid.clone(), 1.0).expect("cylindrical grid");
    let psi = hydrogenic_state(HydrogenicLabel::new(2, 1).expect("valid label"), grid)
        .expect("box holds 2p");
    (v, psi)
}

/// Two-electron helium grid of `n x n` nodes with spacing 0.25 and a
/// Gaussian pair state.
pub fn helium_case(n: usize) -> (PotentialField, WaveField) {
    let grid = Arc::new(Grid::cartesian_2e(n as f64 * 0.25, 0.25).expect("power-of-two grid"));
    let v = helium_model(grid.clone())
        .expect("two-electron grid")
        .total();
    let psi = WaveField::from_fn(grid, |z1, z2| {
        num_complex::Complex64::new((-(z1 * z1 + z2 * z2) / 2.0).exp(), 0.0)
    })
    .normalized()
    .expect("non-zero state");
    (v, psi)
}
