//! Fourier-grid (sinc DVR) Hamiltonian for a single SQUID.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::device::{potential_1d, DerivedConstants, DeviceParams, Qubit};
use crate::error::{Error, Result};

pub const MIN_GRID_POINTS: usize = 64;

/// Uniform grid in one flux coordinate, both endpoints included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        let g = Grid1D { x_min, x_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn centered(center: f64, half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(center - half_width, center + half_width, n_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max) {
            return Err(Error::Configuration(format!(
                "grid bounds must satisfy x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.n_points < MIN_GRID_POINTS {
            return Err(Error::Configuration(format!(
                "grid needs at least {MIN_GRID_POINTS} points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Index of the grid point closest to `x` (clamped to the grid).
    pub fn nearest(&self, x: f64) -> usize {
        let t = ((x - self.x_min) / self.spacing()).round();
        t.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Same spacing halved, same bounds.
    pub fn refined(&self) -> Self {
        Grid1D { n_points: 2 * self.n_points - 1, ..*self }
    }
}

/// Kinetic energy `-(eta/2) d^2/dx^2` on the grid in the infinite-interval
/// Fourier-grid form:
/// `T_ii = (eta/2) pi^2 / (3 dx^2)`, `T_ij = (eta/2) 2 (-1)^(i-j) / ((i-j)^2 dx^2)`.
pub fn kinetic_matrix(eta: f64, grid: &Grid1D) -> DMatrix<f64> {
    let n = grid.n_points;
    let dx = grid.spacing();
    let pref = 0.5 * eta / (dx * dx);
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            pref * PI * PI / 3.0
        } else {
            let k = i as i64 - j as i64;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            pref * 2.0 * sign / (k * k) as f64
        }
    })
}

/// Checks that the grid holds every minimum of the 1D potential with at
/// least five harmonic lengths `sqrt(eta)` of margin.
pub fn check_coverage(d: &DerivedConstants, grid: &Grid1D, qubit: Qubit) -> Result<()> {
    let v: Vec<f64> = grid.points().map(|x| potential_1d(d, qubit, x)).collect();
    let n = v.len();
    let margin = 5.0 * d.eta.sqrt();
    if v[0] <= v[1] || v[n - 1] <= v[n - 2] {
        return Err(Error::Configuration(format!(
            "grid [{}, {}] truncates the potential: minimum at the boundary",
            grid.x_min, grid.x_max
        )));
    }
    for i in 1..n - 1 {
        if v[i] < v[i - 1] && v[i] <= v[i + 1] {
            let x = grid.point(i);
            if x - margin < grid.x_min || x + margin > grid.x_max {
                return Err(Error::Configuration(format!(
                    "grid [{}, {}] does not cover well at {x:.4} with margin {margin:.4}",
                    grid.x_min, grid.x_max
                )));
            }
        }
    }
    Ok(())
}

/// Dense single-SQUID Hamiltonian on `grid`, in units of hbar omega_LC.
pub fn fgh_hamiltonian_1d(
    _p: &DeviceParams,
    d: &DerivedConstants,
    grid: &Grid1D,
    which: Qubit,
) -> Result<DMatrix<f64>> {
    grid.validate()?;
    check_coverage(d, grid, which)?;
    let mut h = kinetic_matrix(d.eta, grid);
    for (i, x) in grid.points().enumerate() {
        h[(i, i)] += potential_1d(d, which, x);
    }
    Ok(h)
}

/// Eigenpairs of a 1D Hamiltonian, ascending; each eigenvector's
/// largest-magnitude component is positive.
#[derive(Clone, Debug)]
pub struct Spectrum1D {
    pub energies: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

pub fn sorted_eigen(h: DMatrix<f64>) -> Spectrum1D {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let energies = DVector::from_iterator(order.len(), order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = eig.eigenvectors.select_columns(&order);
    for mut col in vectors.column_iter_mut() {
        let peak = col.iter().copied().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if peak < 0.0 {
            col.neg_mut();
        }
    }
    Spectrum1D { energies, vectors }
}

pub fn solve_1d(p: &DeviceParams, d: &DerivedConstants, grid: &Grid1D, which: Qubit) -> Result<Spectrum1D> {
    Ok(sorted_eigen(fgh_hamiltonian_1d(p, d, grid, which)?))
}
