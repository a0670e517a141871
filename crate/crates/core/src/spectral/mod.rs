//! Stationary states of the coupled SQUID pair.
//!
//! Two routes are provided. The product-basis route diagonalizes each SQUID
//! on a Fourier grid, keeps the `K` lowest single-SQUID states and
//! diagonalizes the coupled Hamiltonian in their `K^2` product basis. The
//! direct route iterates on the full two-dimensional grid operator without
//! truncation. They are independent enough to cross-check each other.

mod davidson;
mod fgh;
mod labels;
mod transitions;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::device::{potential_2d_scaled, DerivedConstants, DeviceParams, Qubit};
use crate::error::{Error, Result};

pub use davidson::DavidsonOptions;
pub use fgh::{
    check_coverage, fgh_hamiltonian_1d, kinetic_matrix, solve_1d, sorted_eigen, Grid1D, Spectrum1D,
    MIN_GRID_POINTS,
};
pub use labels::{label_computational_states, quadrant_masses, ComputationalBasis, LABEL_THRESHOLD};
pub use transitions::{transition_table, TransitionTable};

pub const MAX_STATES: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    ProductBasis,
    Direct2d,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Each grid spans `xe_i +/- half_width`.
    pub half_width: f64,
    pub n_points: usize,
    pub n_states: usize,
    /// Single-SQUID states kept per qubit in the product basis.
    #[serde(rename = "K")]
    pub k_basis: usize,
    pub method: SolverMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            half_width: 0.45,
            n_points: 256,
            n_states: 20,
            k_basis: 16,
            method: SolverMethod::ProductBasis,
        }
    }
}

impl SolverConfig {
    pub fn grids(&self, d: &DerivedConstants) -> Result<(Grid1D, Grid1D)> {
        Ok((
            Grid1D::centered(d.xe1, self.half_width, self.n_points)?,
            Grid1D::centered(d.xe2, self.half_width, self.n_points)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_states > MAX_STATES {
            return Err(Error::Configuration(format!(
                "n_states must be in 1..={MAX_STATES}, got {}",
                self.n_states
            )));
        }
        if self.k_basis < 2 || self.k_basis * self.k_basis < self.n_states {
            return Err(Error::Configuration(format!(
                "k_basis = {} cannot hold {} coupled states",
                self.k_basis, self.n_states
            )));
        }
        if self.k_basis > self.n_points {
            return Err(Error::Configuration("k_basis exceeds grid size".into()));
        }
        if !(self.half_width > 0.0) {
            return Err(Error::Configuration("half_width must be positive".into()));
        }
        Ok(())
    }
}

/// How the eigenvectors of an [`EigenSolution`] are stored.
#[derive(Clone, Debug)]
pub enum Representation {
    /// Coefficients over products of single-SQUID eigenstates; row index
    /// `a * K + b` pairs control state `a` with target state `b`.
    ProductBasis {
        phi1: DMatrix<f64>,
        phi2: DMatrix<f64>,
        coefficients: DMatrix<f64>,
    },
    /// Amplitudes on the full product grid, flattened column-major
    /// (`i1 + n1 * i2`).
    Grid2D { vectors: DMatrix<f64> },
}

/// Lowest eigenpairs of the coupled Hamiltonian.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    /// Ascending, units of hbar omega_LC.
    pub energies: Vec<f64>,
    pub grid1: Grid1D,
    pub grid2: Grid1D,
    pub biases: (f64, f64),
    pub representation: Representation,
}

impl EigenSolution {
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    pub fn basis_descriptor(&self) -> &'static str {
        match self.representation {
            Representation::ProductBasis { .. } => "product-basis",
            Representation::Grid2D { .. } => "direct-2d",
        }
    }

    /// Real-valued wavefunction of state `n` on the `n1 x n2` grid.
    pub fn wavefunction(&self, n: usize) -> DMatrix<f64> {
        let (n1, n2) = (self.grid1.n_points, self.grid2.n_points);
        match &self.representation {
            Representation::ProductBasis { phi1, phi2, coefficients } => {
                let k = phi1.ncols();
                // C[a, b] = coefficients[a * k + b]
                let c = DMatrix::from_row_slice(k, k, coefficients.column(n).as_slice());
                phi1 * c * phi2.transpose()
            }
            Representation::Grid2D { vectors } => DMatrix::from_column_slice(n1, n2, vectors.column(n).as_slice()),
        }
    }

    /// Flips the sign of eigenvector `n`.
    pub fn negate(&mut self, n: usize) {
        match &mut self.representation {
            Representation::ProductBasis { coefficients, .. } => coefficients.column_mut(n).neg_mut(),
            Representation::Grid2D { vectors } => vectors.column_mut(n).neg_mut(),
        }
    }

    fn coefficient_matrix(&self) -> &DMatrix<f64> {
        match &self.representation {
            Representation::ProductBasis { coefficients, .. } => coefficients,
            Representation::Grid2D { vectors } => vectors,
        }
    }

    /// Gram matrix of the retained eigenvectors.
    pub fn gram(&self) -> DMatrix<f64> {
        let v = self.coefficient_matrix();
        v.transpose() * v
    }

    /// Matrix elements `(n|x1 - xe1|m)` and `(n|x2 - xe2|m)`.
    pub fn dipole_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let (xe1, xe2) = self.biases;
        match &self.representation {
            Representation::ProductBasis { phi1, phi2, coefficients } => {
                let k = phi1.ncols();
                let x1 = position_matrix(phi1, &self.grid1, xe1);
                let x2 = position_matrix(phi2, &self.grid2, xe2);
                let ns = self.n_states();
                let cs: Vec<DMatrix<f64>> = (0..ns)
                    .map(|n| DMatrix::from_row_slice(k, k, coefficients.column(n).as_slice()))
                    .collect();
                let a1: Vec<DMatrix<f64>> = cs.iter().map(|c| &x1 * c).collect();
                let a2: Vec<DMatrix<f64>> = cs.iter().map(|c| c * &x2).collect();
                let d1 = DMatrix::from_fn(ns, ns, |m, n| cs[m].dot(&a1[n]));
                let d2 = DMatrix::from_fn(ns, ns, |m, n| cs[m].dot(&a2[n]));
                (d1, d2)
            }
            Representation::Grid2D { vectors } => {
                let (n1, n2) = (self.grid1.n_points, self.grid2.n_points);
                let w1 = DVector::from_fn(n1 * n2, |k, _| self.grid1.point(k % n1) - xe1);
                let w2 = DVector::from_fn(n1 * n2, |k, _| self.grid2.point(k / n1) - xe2);
                let v1 = DMatrix::from_fn(n1 * n2, vectors.ncols(), |k, n| w1[k] * vectors[(k, n)]);
                let v2 = DMatrix::from_fn(n1 * n2, vectors.ncols(), |k, n| w2[k] * vectors[(k, n)]);
                (vectors.transpose() * v1, vectors.transpose() * v2)
            }
        }
    }

    /// Applies the default phase convention: the largest-magnitude grid
    /// amplitude of every state is positive.
    fn normalize_phases(&mut self) {
        for n in 0..self.n_states() {
            let psi = self.wavefunction(n);
            let peak = psi.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
            if peak < 0.0 {
                self.negate(n);
            }
        }
    }
}

/// `phi^T diag(x - xe) phi` over the retained single-SQUID states.
fn position_matrix(phi: &DMatrix<f64>, grid: &Grid1D, xe: f64) -> DMatrix<f64> {
    let weighted = DMatrix::from_fn(phi.nrows(), phi.ncols(), |i, a| (grid.point(i) - xe) * phi[(i, a)]);
    phi.transpose() * weighted
}

/// Solves the stationary problem of the coupled pair with the configured
/// method.
pub fn solve_coupled(p: &DeviceParams, d: &DerivedConstants, cfg: &SolverConfig) -> Result<EigenSolution> {
    cfg.validate()?;
    let (grid1, grid2) = cfg.grids(d)?;
    let (s1, s2) = rayon::join(
        || solve_1d(p, d, &grid1, Qubit::Control),
        || solve_1d(p, d, &grid2, Qubit::Target),
    );
    let (s1, s2) = (s1?, s2?);
    let mut sol = match cfg.method {
        SolverMethod::ProductBasis => product_basis(d, cfg, grid1, grid2, &s1, &s2),
        SolverMethod::Direct2d => davidson::solve_direct(d, cfg, grid1, grid2, &s1, &s2, &DavidsonOptions::default())?,
    };
    sol.normalize_phases();
    Ok(sol)
}

fn product_basis(
    d: &DerivedConstants,
    cfg: &SolverConfig,
    grid1: Grid1D,
    grid2: Grid1D,
    s1: &Spectrum1D,
    s2: &Spectrum1D,
) -> EigenSolution {
    let k = cfg.k_basis;
    let phi1 = s1.vectors.columns(0, k).into_owned();
    let phi2 = s2.vectors.columns(0, k).into_owned();
    let x1 = position_matrix(&phi1, &grid1, d.xe1);
    let x2 = position_matrix(&phi2, &grid2, d.xe2);
    let g = d.kappa / (2.0 * d.eta);
    let dim = k * k;
    let h = DMatrix::from_fn(dim, dim, |r, c| {
        let (a, b) = (r / k, r % k);
        let (a2, b2) = (c / k, c % k);
        let mut v = g * x1[(a, a2)] * x2[(b, b2)];
        if r == c {
            v += s1.energies[a] + s2.energies[b];
        }
        v
    });
    let eig = sorted_eigen(h);
    let n = cfg.n_states;
    EigenSolution {
        energies: eig.energies.iter().take(n).copied().collect(),
        grid1,
        grid2,
        biases: (d.xe1, d.xe2),
        representation: Representation::ProductBasis {
            phi1,
            phi2,
            coefficients: eig.vectors.columns(0, n).into_owned(),
        },
    }
}

/// Potential of the coupled pair sampled on the product grid, column-major.
pub(crate) fn potential_grid(d: &DerivedConstants, grid1: &Grid1D, grid2: &Grid1D) -> DMatrix<f64> {
    let cols: Vec<Vec<f64>> = (0..grid2.n_points)
        .into_par_iter()
        .map(|j| {
            let x2 = grid2.point(j);
            grid1.points().map(|x1| potential_2d_scaled(d, x1, x2)).collect()
        })
        .collect();
    DMatrix::from_fn(grid1.n_points, grid2.n_points, |i, j| cols[j][i])
}
