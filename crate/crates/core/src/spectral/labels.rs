use serde::Serialize;

use super::EigenSolution;
use crate::device::{saddle_between, DerivedConstants, Well};
use crate::error::{Error, Result};
use crate::label::StateLabel;

/// Minimum probability mass a computational state must hold in its
/// well's quadrant.
pub const LABEL_THRESHOLD: f64 = 0.9;

/// Assignment of the labels `00, 01, 10, 11` to eigenstate indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ComputationalBasis {
    /// Eigenstate index of `|00>, |01>, |10>, |11>`, in that order.
    pub indices: [usize; 4],
    /// Quadrant mass of each assigned state.
    pub masses: [f64; 4],
}

impl ComputationalBasis {
    pub fn index(&self, label: StateLabel) -> usize {
        self.indices[label.index()]
    }

    pub fn label_of(&self, n: usize) -> Option<StateLabel> {
        self.indices.iter().position(|&k| k == n).map(StateLabel::from_index)
    }
}

/// Quadrant split lines: the control split `s1` depends on the target side
/// and vice versa, both taken at the saddles between neighboring wells.
struct Quadrants {
    /// Control split at target = 0 and target = 1.
    split1: [f64; 2],
    /// Target split at control = 0 and control = 1.
    split2: [f64; 2],
}

impl Quadrants {
    fn from_wells(d: &DerivedConstants, wells: &[Well]) -> Result<Self> {
        let w = |l: StateLabel| {
            wells
                .iter()
                .find(|w| w.label == l)
                .ok_or_else(|| Error::Labeling(format!("no well labeled {l}")))
        };
        use StateLabel::*;
        Ok(Quadrants {
            split1: [saddle_between(d, w(L00)?, w(L10)?)?.0, saddle_between(d, w(L01)?, w(L11)?)?.0],
            split2: [saddle_between(d, w(L00)?, w(L01)?)?.1, saddle_between(d, w(L10)?, w(L11)?)?.1],
        })
    }

    fn quadrant(&self, x1: f64, x2: f64) -> StateLabel {
        // Decide control side with the split nearest in x2, then target side.
        let c_at = |t: usize| u8::from(x1 > self.split1[t]);
        let t_guess = u8::from(x2 > 0.5 * (self.split2[0] + self.split2[1]));
        let c = c_at(t_guess as usize);
        let t = u8::from(x2 > self.split2[c as usize]);
        StateLabel::from_bits(c, t)
    }
}

/// Probability mass of every retained state in each of the four quadrants.
pub fn quadrant_masses(sol: &EigenSolution, d: &DerivedConstants, wells: &[Well]) -> Result<Vec<[f64; 4]>> {
    let q = Quadrants::from_wells(d, wells)?;
    let (n1, n2) = (sol.grid1.n_points, sol.grid2.n_points);
    let region: Vec<StateLabel> = (0..n1 * n2)
        .map(|k| q.quadrant(sol.grid1.point(k % n1), sol.grid2.point(k / n1)))
        .collect();
    Ok((0..sol.n_states())
        .map(|n| {
            let psi = sol.wavefunction(n);
            let mut m = [0.0; 4];
            for (k, v) in psi.iter().enumerate() {
                m[region[k].index()] += v * v;
            }
            m
        })
        .collect())
}

/// Picks, for every well, the lowest eigenstate holding more than
/// [`LABEL_THRESHOLD`] of its probability in that well's quadrant. The
/// labeled states are re-phased so their amplitude at the grid point
/// nearest the well minimum is positive.
pub fn label_computational_states(
    sol: &mut EigenSolution,
    d: &DerivedConstants,
    wells: &[Well],
) -> Result<ComputationalBasis> {
    if wells.len() != 4 {
        return Err(Error::Labeling(format!("need 4 wells, got {}", wells.len())));
    }
    let masses = quadrant_masses(sol, d, wells)?;
    let mut indices = [0usize; 4];
    let mut scores = [0.0; 4];
    for label in StateLabel::ALL {
        let found = (0..sol.n_states()).find(|&n| masses[n][label.index()] > LABEL_THRESHOLD);
        let Some(n) = found else {
            let best = masses.iter().map(|m| m[label.index()]).fold(0.0, f64::max);
            return Err(Error::Labeling(format!(
                "no eigenstate localized in well {label} (best quadrant mass {best:.3})"
            )));
        };
        indices[label.index()] = n;
        scores[label.index()] = masses[n][label.index()];
    }

    for label in StateLabel::ALL {
        let well = wells.iter().find(|w| w.label == label).unwrap();
        let n = indices[label.index()];
        let i1 = sol.grid1.nearest(well.location.0);
        let i2 = sol.grid2.nearest(well.location.1);
        if sol.wavefunction(n)[(i1, i2)] < 0.0 {
            sol.negate(n);
        }
    }
    Ok(ComputationalBasis { indices, masses: scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{derive_constants, find_wells, DeviceParams, SearchBox};
    use crate::spectral::{solve_coupled, SolverConfig};

    fn setup(p: DeviceParams) -> (DerivedConstants, EigenSolution, Vec<Well>) {
        let d = derive_constants(&p).unwrap();
        let sol = solve_coupled(&p, &d, &SolverConfig { n_points: 160, ..Default::default() }).unwrap();
        let wells = find_wells(&p, &d, &SearchBox::default_for(&d)).unwrap();
        (d, sol, wells)
    }

    #[test]
    fn reference_point_labels_lowest_states() {
        let (d, mut sol, wells) = setup(DeviceParams::reference_defaults());
        let basis = label_computational_states(&mut sol, &d, &wells).unwrap();
        assert_eq!(basis.indices, [0, 1, 2, 3]);
        assert!(basis.masses.iter().all(|&m| m > 0.99));
        assert_eq!(basis.label_of(2), Some(StateLabel::L10));
        assert_eq!(basis.label_of(7), None);
    }

    #[test]
    fn sign_flip_keeps_labels() {
        let (d, mut sol, wells) = setup(DeviceParams::reference_defaults());
        let first = label_computational_states(&mut sol, &d, &wells).unwrap();
        for n in 0..sol.n_states() {
            sol.negate(n);
        }
        let second = label_computational_states(&mut sol, &d, &wells).unwrap();
        assert_eq!(first.indices, second.indices);
        // Re-phasing restores the convention.
        let psi = sol.wavefunction(first.index(StateLabel::L00));
        let w = wells[0];
        assert!(psi[(sol.grid1.nearest(w.location.0), sol.grid2.nearest(w.location.1))] > 0.0);
    }

    #[test]
    fn symmetric_uncoupled_pair_is_hybridized() {
        let (d, mut sol, wells) = setup(DeviceParams::reference_defaults().with_kappa(0.0).with_biases(0.5, 0.5));
        assert!(matches!(label_computational_states(&mut sol, &d, &wells), Err(Error::Labeling(_))));
        let masses = quadrant_masses(&sol, &d, &wells).unwrap();
        assert!((masses[0][0] - 0.25).abs() < 1e-6);
    }
}
