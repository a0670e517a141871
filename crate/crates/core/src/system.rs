//! One-call assembly of the static pieces: constants, wells, eigenstates,
//! computational labels and the transition table.

use crate::device::{derive_constants, find_wells, DerivedConstants, DeviceParams, SearchBox, Well};
use crate::error::Result;
use crate::label::StateLabel;
use crate::spectral::{
    label_computational_states, solve_coupled, transition_table, ComputationalBasis, EigenSolution, SolverConfig,
    TransitionTable,
};

#[derive(Clone, Debug)]
pub struct CoupledSystem {
    pub params: DeviceParams,
    pub constants: DerivedConstants,
    pub wells: Vec<Well>,
    pub solution: EigenSolution,
    pub basis: ComputationalBasis,
    pub table: TransitionTable,
}

impl CoupledSystem {
    pub fn build(params: &DeviceParams, solver: &SolverConfig) -> Result<Self> {
        let constants = derive_constants(params)?;
        let wells = find_wells(params, &constants, &SearchBox::default_for(&constants))?;
        let mut solution = solve_coupled(params, &constants, solver)?;
        let basis = label_computational_states(&mut solution, &constants, &wells)?;
        let table = transition_table(&solution, &basis);
        Ok(CoupledSystem { params: *params, constants, wells, solution, basis, table })
    }

    pub fn reference_defaults() -> Result<Self> {
        Self::build(&DeviceParams::reference_defaults(), &SolverConfig::default())
    }

    /// `Delta E_13`, `Delta E_24`, `Delta E_12`, `Delta E_34` in units of
    /// hbar omega_LC.
    pub fn key_spacings(&self) -> [f64; 4] {
        use StateLabel::*;
        [
            self.table.delta(L00, L10),
            self.table.delta(L01, L11),
            self.table.delta(L00, L01),
            self.table.delta(L10, L11),
        ]
    }
}
