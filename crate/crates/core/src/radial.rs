//! Radial kinetic operator of the cylindrical model and its eigenbasis.
//!
//! On the staggered nodes `rho_j = (j + 1/2) h` the m = 0 radial operator
//! `-1/(2 rho) d/drho (rho d/drho)` is discretized in conservative form with
//! fluxes at `rho_{j+1/2} = (j + 1) h` and zero flux through the axis. In the
//! u-representation this is the symmetric tridiagonal matrix
//!
//! ```text
//! K_jj     = 1 / h^2
//! K_j,j+1  = -(j + 1) / (2 h^2 sqrt((j + 1/2)(j + 3/2)))
//! ```
//!
//! which equals the plain second difference plus the `-1/(8 rho^2)` term
//! spread over the off-diagonals. The outer edge is a Dirichlet wall.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use ndarray::Array2;

/// Orthogonal eigenbasis of the radial operator for one axis.
#[derive(Debug)]
pub struct RadialBasis {
    spacing: f64,
    /// Eigenvalues in ascending order.
    eigenvalues: Vec<f64>,
    /// `vectors[[j, m]]`: node `j` of eigenvector `m`.
    vectors: Array2<f64>,
    /// Transpose of `vectors`, kept contiguous for analysis.
    transposed: Array2<f64>,
}

impl RadialBasis {
    fn build(n: usize, spacing: f64) -> Self {
        let (diag, off) = radial_operator(n, spacing);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            dense[(j, j)] = diag[j];
            if j + 1 < n {
                dense[(j, j + 1)] = off[j];
                dense[(j + 1, j)] = off[j];
            }
        }
        let eigen = dense.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&m| eigen.eigenvalues[m]).collect();
        let mut vectors = Array2::<f64>::zeros((n, n));
        for (col, &m) in order.iter().enumerate() {
            let v = eigen.eigenvectors.column(m);
            // sign convention: positive next to the axis
            let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                vectors[[j, col]] = sign * v[j];
            }
        }
        let transposed = vectors.t().as_standard_layout().into_owned();
        RadialBasis {
            spacing,
            eigenvalues,
            vectors,
            transposed,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Kinetic energies `lambda_m` of the radial modes, ascending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Effective wavenumbers `sqrt(2 lambda_m)`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| (2.0 * l).sqrt()).collect()
    }

    /// Synthesis matrix: columns are the modes.
    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    /// Analysis matrix (transpose of [`RadialBasis::vectors`]).
    pub fn analysis(&self) -> &Array2<f64> {
        &self.transposed
    }
}

/// Diagonal and off-diagonal of the u-representation radial operator.
pub fn radial_operator(n: usize, spacing: f64) -> (Vec<f64>, Vec<f64>) {
    let h2 = spacing * spacing;
    let diag = vec![1.0 / h2; n];
    let off = (0..n.saturating_sub(1))
        .map(|j| {
            let j = j as f64;
            -(j + 1.0) / (2.0 * h2 * ((j + 0.5) * (j + 1.5)).sqrt())
        })
        .collect();
    (diag, off)
}

/// Shared basis for `n` nodes at `spacing`, built once per process.
pub fn radial_basis(n: usize, spacing: f64) -> Arc<RadialBasis> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<RadialBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, spacing.to_bits());
    if let Some(basis) = cache.lock().expect("radial cache poisoned").get(&key) {
        return basis.clone();
    }
    // built outside the lock; a concurrent duplicate build is harmless
    let basis = Arc::new(RadialBasis::build(n, spacing));
    cache
        .lock()
        .expect("radial cache poisoned")
        .entry(key)
        .or_insert(basis)
        .clone()
}
