use nalgebra::DMatrix;

use super::{ComputationalBasis, EigenSolution};
use crate::device::Qubit;
use crate::label::StateLabel;

/// Level spacings and flux matrix elements over the retained eigenstates.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    pub energies: Vec<f64>,
    /// `spacing[(n, m)] = E_m - E_n`.
    pub spacing: DMatrix<f64>,
    /// `(n|x1 - xe1|m)`.
    pub d1: DMatrix<f64>,
    /// `(n|x2 - xe2|m)`.
    pub d2: DMatrix<f64>,
    pub basis: ComputationalBasis,
}

impl TransitionTable {
    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    /// `E_to - E_from` between two computational states.
    pub fn delta(&self, from: StateLabel, to: StateLabel) -> f64 {
        self.spacing[(self.basis.index(from), self.basis.index(to))]
    }

    pub fn dipole(&self, qubit: Qubit) -> &DMatrix<f64> {
        match qubit {
            Qubit::Control => &self.d1,
            Qubit::Target => &self.d2,
        }
    }

    pub fn dipole_between(&self, qubit: Qubit, a: StateLabel, b: StateLabel) -> f64 {
        self.dipole(qubit)[(self.basis.index(a), self.basis.index(b))]
    }
}

/// Builds the table from a labeled solution. Call after
/// [`super::label_computational_states`] so the phase convention of the
/// computational states is in place.
pub fn transition_table(sol: &EigenSolution, basis: &ComputationalBasis) -> TransitionTable {
    let (d1, d2) = sol.dipole_matrices();
    let sym = |m: DMatrix<f64>| (&m + m.transpose()) * 0.5;
    let e = &sol.energies;
    TransitionTable {
        energies: e.clone(),
        spacing: DMatrix::from_fn(e.len(), e.len(), |n, m| e[m] - e[n]),
        d1: sym(d1),
        d2: sym(d2),
        basis: *basis,
    }
}
