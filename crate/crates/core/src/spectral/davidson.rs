//! Block Davidson iteration on the full two-dimensional grid Hamiltonian.
//!
//! The operator is never assembled: on the `n1 x n2` grid a state `Psi`
//! maps to `h1 Psi + Psi h2 + C .* Psi`, where `h1`, `h2` are the dense
//! single-SQUID Hamiltonians and `C` the coupling term sampled on the grid.
//! Residuals are preconditioned with the exact inverse of the separable
//! part, `(h1 (+) h2 - sigma)^-1`, applied through the single-SQUID
//! eigenbases.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::fgh::{kinetic_matrix, Spectrum1D};
use super::{potential_grid, EigenSolution, Grid1D, Representation, SolverConfig};
use crate::device::{potential_1d, DerivedConstants, Qubit};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct DavidsonOptions {
    /// Convergence threshold on the residual norm of every wanted pair.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Extra Ritz pairs carried along beyond the wanted ones.
    pub guard: usize,
    /// Restart when the subspace would exceed this many blocks.
    pub max_blocks: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        DavidsonOptions { tolerance: 1e-9, max_iterations: 300, guard: 4, max_blocks: 6 }
    }
}

struct GridOperator {
    n1: usize,
    n2: usize,
    h1: DMatrix<f64>,
    h2: DMatrix<f64>,
    coupling: DMatrix<f64>,
    u1: DMatrix<f64>,
    u2: DMatrix<f64>,
    e1: DVector<f64>,
    e2: DVector<f64>,
}

impl GridOperator {
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let psi = DMatrix::from_column_slice(self.n1, self.n2, v.as_slice());
        let mut out = &self.h1 * &psi + &psi * &self.h2;
        out += self.coupling.component_mul(&psi);
        DVector::from_column_slice(out.as_slice())
    }

    fn precondition(&self, r: &DVector<f64>, sigma: f64) -> DVector<f64> {
        let psi = DMatrix::from_column_slice(self.n1, self.n2, r.as_slice());
        let mut m = self.u1.transpose() * psi * &self.u2;
        for j in 0..self.n2 {
            for i in 0..self.n1 {
                m[(i, j)] /= self.e1[i] + self.e2[j] - sigma;
            }
        }
        let out = &self.u1 * m * self.u2.transpose();
        DVector::from_column_slice(out.as_slice())
    }
}

fn orthonormalize_against(basis: &[DVector<f64>], mut t: DVector<f64>) -> Option<DVector<f64>> {
    let start = t.norm();
    if start == 0.0 {
        return None;
    }
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.par_iter().map(|b| b.dot(&t)).collect();
        for (b, c) in basis.iter().zip(coeffs) {
            t.axpy(-c, b, 1.0);
        }
    }
    let norm = t.norm();
    (norm > 1e-8 * start).then(|| t / norm)
}

pub(super) fn solve_direct(
    d: &DerivedConstants,
    cfg: &SolverConfig,
    grid1: Grid1D,
    grid2: Grid1D,
    s1: &Spectrum1D,
    s2: &Spectrum1D,
    opts: &DavidsonOptions,
) -> Result<EigenSolution> {
    let (n1, n2) = (grid1.n_points, grid2.n_points);
    let mut h1 = kinetic_matrix(d.eta, &grid1);
    for (i, x) in grid1.points().enumerate() {
        h1[(i, i)] += potential_1d(d, Qubit::Control, x);
    }
    let mut h2 = kinetic_matrix(d.eta, &grid2);
    for (j, x) in grid2.points().enumerate() {
        h2[(j, j)] += potential_1d(d, Qubit::Target, x);
    }
    let full = potential_grid(d, &grid1, &grid2);
    let coupling = DMatrix::from_fn(n1, n2, |i, j| {
        full[(i, j)] - potential_1d(d, Qubit::Control, grid1.point(i)) - potential_1d(d, Qubit::Target, grid2.point(j))
    });
    let op = GridOperator {
        n1,
        n2,
        h1,
        h2,
        coupling,
        u1: s1.vectors.clone(),
        u2: s2.vectors.clone(),
        e1: s1.energies.clone(),
        e2: s2.energies.clone(),
    };

    let wanted = cfg.n_states;
    let block = wanted + opts.guard;

    // Start from the lowest separable product states.
    let mut pairs: Vec<(f64, usize, usize)> = (0..block.min(n1))
        .flat_map(|a| (0..block.min(n2)).map(move |b| (a, b)))
        .map(|(a, b)| (s1.energies[a] + s2.energies[b], a, b))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let sigma = pairs[0].0 - 1.0;

    let mut basis: Vec<DVector<f64>> = pairs[..block]
        .iter()
        .map(|&(_, a, b)| {
            let ua = s1.vectors.column(a);
            let ub = s2.vectors.column(b);
            DVector::from_fn(n1 * n2, |k, _| ua[k % n1] * ub[k / n1])
        })
        .collect();
    let mut images: Vec<DVector<f64>> = basis.par_iter().map(|v| op.apply(v)).collect();
    let mut projected = DMatrix::from_fn(block, block, |i, j| basis[i].dot(&images[j]));

    let mut worst = f64::INFINITY;
    for _iteration in 0..opts.max_iterations {
        let sym = (&projected + projected.transpose()) * 0.5;
        let ritz = super::sorted_eigen(sym);
        let m = basis.len();
        let coeffs = ritz.vectors.columns(0, block).into_owned();
        let combine = |vs: &[DVector<f64>], k: usize| {
            let mut out = DVector::zeros(n1 * n2);
            for j in 0..m {
                out.axpy(coeffs[(j, k)], &vs[j], 1.0);
            }
            out
        };
        let x: Vec<DVector<f64>> = (0..block).into_par_iter().map(|k| combine(&basis, k)).collect();
        let ax: Vec<DVector<f64>> = (0..block).into_par_iter().map(|k| combine(&images, k)).collect();
        let theta: Vec<f64> = (0..block).map(|k| ritz.energies[k]).collect();
        let residuals: Vec<DVector<f64>> = (0..block).map(|k| &ax[k] - &x[k] * theta[k]).collect();
        let norms: Vec<f64> = residuals.iter().map(|r| r.norm()).collect();
        worst = norms[..wanted].iter().copied().fold(0.0, f64::max);

        if worst < opts.tolerance {
            let vectors = DMatrix::from_fn(n1 * n2, wanted, |k, n| x[n][k]);
            return Ok(EigenSolution {
                energies: theta[..wanted].to_vec(),
                grid1,
                grid2,
                biases: (d.xe1, d.xe2),
                representation: Representation::Grid2D { vectors },
            });
        }

        if m + block > opts.max_blocks * block {
            basis = x;
            images = ax;
            projected = DMatrix::from_diagonal(&DVector::from_vec(theta.clone()));
        }

        let corrections: Vec<DVector<f64>> = residuals
            .par_iter()
            .zip(norms.par_iter())
            .filter(|(_, &n)| n >= opts.tolerance)
            .map(|(r, _)| op.precondition(r, sigma))
            .collect();
        let mut added = 0;
        for t in corrections {
            if let Some(v) = orthonormalize_against(&basis, t) {
                basis.push(v);
                added += 1;
            }
        }
        if added == 0 {
            break;
        }
        let m_old = basis.len() - added;
        let new_images: Vec<DVector<f64>> = basis[m_old..].par_iter().map(|v| op.apply(v)).collect();
        images.extend(new_images);
        let m_new = basis.len();
        let mut grown = DMatrix::zeros(m_new, m_new);
        grown.view_mut((0, 0), (m_old, m_old)).copy_from(&projected);
        let entries: Vec<(usize, usize, f64)> = (0..m_new)
            .into_par_iter()
            .flat_map_iter(|i| {
                let basis = &basis;
                let images = &images;
                (m_old..m_new).map(move |j| (i, j, basis[i].dot(&images[j])))
            })
            .collect();
        for (i, j, v) in entries {
            grown[(i, j)] = v;
            grown[(j, i)] = v;
        }
        projected = grown;
    }
    Err(Error::SolverNonConvergence { iterations: opts.max_iterations, residual: worst })
}
