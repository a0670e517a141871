//! Device parameters of two identical inductively coupled rf SQUIDs and the
//! classical potential-energy surface they define.
//!
//! Internally everything is dimensionless: fluxes in units of the flux
//! quantum, energies in units of `hbar * omega_LC`. In these units the
//! Hamiltonian of the coupled pair reads
//!
//! ```text
//! H = sum_i [ -(eta/2) d^2/dx_i^2 + (x_i - xe_i)^2 / (2 eta)
//!             - beta_L / (4 pi^2 eta) cos(2 pi x_i) ]
//!     + kappa (x_1 - xe_1)(x_2 - xe_2) / (2 eta)
//! ```
//!
//! with `eta = hbar / (m omega_LC) = hbar sqrt(L/C) / Phi0^2`.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::StateLabel;

/// Magnetic flux quantum h/2e in webers.
pub const PHI0: f64 = 2.067833848e-15;
/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054571817e-34;

/// Potential-shape parameter, given either directly or through the junction
/// critical current.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Screening {
    BetaL(f64),
    /// Critical current in amperes.
    CriticalCurrent(f64),
}

/// Inter-qubit coupling, given either as `kappa = 2M/L` or as the mutual
/// inductance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Coupling {
    Kappa(f64),
    /// Mutual inductance in henry.
    MutualInductance(f64),
}

/// Physical parameters of the coupled SQUID pair (identical loops).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Loop inductance in henry.
    pub inductance: f64,
    /// Junction capacitance in farad.
    pub capacitance: f64,
    pub screening: Screening,
    pub coupling: Coupling,
    /// External flux bias of the control qubit, in units of Phi0.
    pub xe1: f64,
    /// External flux bias of the target qubit, in units of Phi0.
    pub xe2: f64,
}

impl DeviceParams {
    /// L = 100 pH, C = 40 fF, beta_L = 1.2, kappa = 5e-4,
    /// xe1 = 0.499, xe2 = 0.4998.
    pub fn reference_defaults() -> Self {
        DeviceParams {
            inductance: 100e-12,
            capacitance: 40e-15,
            screening: Screening::BetaL(1.2),
            coupling: Coupling::Kappa(5e-4),
            xe1: 0.499,
            xe2: 0.4998,
        }
    }

    pub fn with_beta_l(mut self, beta_l: f64) -> Self {
        self.screening = Screening::BetaL(beta_l);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.coupling = Coupling::Kappa(kappa);
        self
    }

    pub fn with_biases(mut self, xe1: f64, xe2: f64) -> Self {
        self.xe1 = xe1;
        self.xe2 = xe2;
        self
    }

    pub fn beta_l(&self) -> f64 {
        match self.screening {
            Screening::BetaL(b) => b,
            Screening::CriticalCurrent(ic) => 2.0 * PI * self.inductance * ic / PHI0,
        }
    }

    pub fn critical_current(&self) -> f64 {
        match self.screening {
            Screening::BetaL(b) => b * PHI0 / (2.0 * PI * self.inductance),
            Screening::CriticalCurrent(ic) => ic,
        }
    }

    pub fn kappa(&self) -> f64 {
        match self.coupling {
            Coupling::Kappa(k) => k,
            Coupling::MutualInductance(m) => 2.0 * m / self.inductance,
        }
    }

    pub fn mutual_inductance(&self) -> f64 {
        match self.coupling {
            Coupling::Kappa(k) => 0.5 * k * self.inductance,
            Coupling::MutualInductance(m) => m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.inductance, self.capacitance, self.beta_l(), self.kappa(), self.xe1, self.xe2];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite device parameter".into()));
        }
        if self.inductance <= 0.0 {
            return Err(Error::Parameter(format!("inductance must be positive, got {}", self.inductance)));
        }
        if self.capacitance <= 0.0 {
            return Err(Error::Parameter(format!("capacitance must be positive, got {}", self.capacitance)));
        }
        // beta_L = 0 is allowed: it is the harmonic limit used by the oracles.
        if self.beta_l() < 0.0 {
            return Err(Error::Parameter(format!("beta_L must be non-negative, got {}", self.beta_l())));
        }
        if self.kappa().abs() >= 1.0 {
            return Err(Error::Parameter(format!("|kappa| must be < 1, got {}", self.kappa())));
        }
        for (name, xe) in [("xe1", self.xe1), ("xe2", self.xe2)] {
            if !(xe > 0.0 && xe < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0, 1), got {xe}")));
            }
        }
        Ok(())
    }
}

/// Quantities derived from [`DeviceParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// 1/sqrt(LC) in rad/s.
    pub omega_lc: f64,
    /// Flux-particle mass C Phi0^2.
    pub mass: f64,
    /// Josephson energy in joule.
    pub e_j: f64,
    pub phi0: f64,
    /// hbar / (m omega_LC).
    pub eta: f64,
    pub beta_l: f64,
    pub kappa: f64,
    pub critical_current: f64,
    pub mutual_inductance: f64,
    pub xe1: f64,
    pub xe2: f64,
}

impl DerivedConstants {
    /// Energy unit hbar * omega_LC in joule.
    pub fn energy_unit(&self) -> f64 {
        HBAR * self.omega_lc
    }

    /// Characteristic frequency omega_LC / 2 pi in Hz.
    pub fn f_lc(&self) -> f64 {
        self.omega_lc / (2.0 * PI)
    }

    /// Prefactor of the cosine term in units of hbar omega_LC.
    pub fn josephson_coefficient(&self) -> f64 {
        self.beta_l / (4.0 * PI * PI * self.eta)
    }

    /// Converts dimensionless time tau = omega_LC t into seconds.
    pub fn tau_to_seconds(&self, tau: f64) -> f64 {
        tau / self.omega_lc
    }

    pub fn bias(&self, qubit: Qubit) -> f64 {
        match qubit {
            Qubit::Control => self.xe1,
            Qubit::Target => self.xe2,
        }
    }
}

pub fn derive_constants(p: &DeviceParams) -> Result<DerivedConstants> {
    p.validate()?;
    let omega_lc = 1.0 / (p.inductance * p.capacitance).sqrt();
    let mass = p.capacitance * PHI0 * PHI0;
    let beta_l = p.beta_l();
    let e_j = mass * omega_lc * omega_lc * beta_l / (4.0 * PI * PI);
    let eta = HBAR / (mass * omega_lc);
    Ok(DerivedConstants {
        omega_lc,
        mass,
        e_j,
        phi0: PHI0,
        eta,
        beta_l,
        kappa: p.kappa(),
        critical_current: p.critical_current(),
        mutual_inductance: p.mutual_inductance(),
        xe1: p.xe1,
        xe2: p.xe2,
    })
}

/// Which SQUID of the pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Qubit {
    /// Qubit 1, coordinate x1.
    Control,
    /// Qubit 2, coordinate x2.
    Target,
}

/// Single-SQUID potential (without the coupling) in units of hbar omega_LC.
pub fn potential_1d(d: &DerivedConstants, qubit: Qubit, x: f64) -> f64 {
    let dx = x - d.bias(qubit);
    dx * dx / (2.0 * d.eta) - d.josephson_coefficient() * (2.0 * PI * x).cos()
}

/// Potential energy surface of the coupled pair in units of hbar omega_LC.
///
/// `U/(hbar w) = sum_i [(x_i - xe_i)^2/(2 eta) - beta_L/(4 pi^2 eta) cos(2 pi x_i)]
/// + kappa (x1 - xe1)(x2 - xe2)/(2 eta)`.
pub fn potential_2d(_p: &DeviceParams, d: &DerivedConstants, x1: f64, x2: f64) -> f64 {
    potential_2d_scaled(d, x1, x2)
}

pub(crate) fn potential_2d_scaled(d: &DerivedConstants, x1: f64, x2: f64) -> f64 {
    potential_1d(d, Qubit::Control, x1)
        + potential_1d(d, Qubit::Target, x2)
        + d.kappa * (x1 - d.xe1) * (x2 - d.xe2) / (2.0 * d.eta)
}

fn gradient(d: &DerivedConstants, x: Vector2<f64>) -> Vector2<f64> {
    let (u1, u2) = (x[0] - d.xe1, x[1] - d.xe2);
    let jc = d.josephson_coefficient() * 2.0 * PI;
    Vector2::new(
        u1 / d.eta + jc * (2.0 * PI * x[0]).sin() + d.kappa * u2 / (2.0 * d.eta),
        u2 / d.eta + jc * (2.0 * PI * x[1]).sin() + d.kappa * u1 / (2.0 * d.eta),
    )
}

fn hessian(d: &DerivedConstants, x: Vector2<f64>) -> Matrix2<f64> {
    let jc = d.josephson_coefficient() * 4.0 * PI * PI;
    let off = d.kappa / (2.0 * d.eta);
    Matrix2::new(
        1.0 / d.eta + jc * (2.0 * PI * x[0]).cos(),
        off,
        off,
        1.0 / d.eta + jc * (2.0 * PI * x[1]).cos(),
    )
}

/// Rectangular region of the (x1, x2) plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBox {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    /// Grid-scan resolution per axis.
    pub resolution: usize,
}

impl SearchBox {
    pub fn around_biases(d: &DerivedConstants, half_width: f64) -> Self {
        SearchBox {
            x1: (d.xe1 - half_width, d.xe1 + half_width),
            x2: (d.xe2 - half_width, d.xe2 + half_width),
            resolution: 201,
        }
    }

    pub fn default_for(d: &DerivedConstants) -> Self {
        Self::around_biases(d, 0.35)
    }

    fn contains(&self, x: Vector2<f64>) -> bool {
        x[0] > self.x1.0 && x[0] < self.x1.1 && x[1] > self.x2.0 && x[1] < self.x2.1
    }
}

/// A local minimum of the potential surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Well {
    pub location: (f64, f64),
    /// Potential at the minimum, units of hbar omega_LC.
    pub depth: f64,
    pub label: StateLabel,
}

const GRADIENT_TOL: f64 = 1e-10;

/// Damped Newton iteration on the gradient. With `minimize` the step is
/// backtracked on the potential value, otherwise on the gradient norm
/// (which also converges to saddles).
fn newton(d: &DerivedConstants, start: Vector2<f64>, minimize: bool) -> Option<Vector2<f64>> {
    let mut x = start;
    let merit = |x: Vector2<f64>| {
        if minimize {
            potential_2d_scaled(d, x[0], x[1])
        } else {
            gradient(d, x).norm_squared()
        }
    };
    for _ in 0..200 {
        let g = gradient(d, x);
        if g.norm() < GRADIENT_TOL {
            return Some(x);
        }
        let h = hessian(d, x);
        let mut step = match h.try_inverse() {
            Some(inv) => -(inv * g),
            None => -g * d.eta,
        };
        if minimize && g.dot(&step) >= 0.0 {
            // Not a descent direction; fall back to a scaled gradient step.
            step = -g * d.eta;
        }
        // Near a minimum the potential stops resolving progress before the
        // gradient does; take the full Newton step if it shrinks the gradient.
        if minimize && h.cholesky().is_some() {
            let trial = x + step;
            if gradient(d, trial).norm() < 0.5 * g.norm() {
                x = trial;
                continue;
            }
        }
        let f0 = merit(x);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = x + step * t;
            if merit(trial) <= f0 {
                x = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // Merit can no longer decrease in floating point.
            return (gradient(d, x).norm() < 1e3 * GRADIENT_TOL).then_some(x);
        }
    }
    (gradient(d, x).norm() < GRADIENT_TOL).then_some(x)
}

/// All local minima inside the box, refined to gradient norm < 1e-10.
/// Sorted by `(x1, x2)`.
pub fn scan_minima(d: &DerivedConstants, search: &SearchBox) -> Vec<(f64, f64)> {
    let n = search.resolution.max(3);
    let h1 = (search.x1.1 - search.x1.0) / (n - 1) as f64;
    let h2 = (search.x2.1 - search.x2.0) / (n - 1) as f64;
    let values: Vec<f64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            potential_2d_scaled(d, search.x1.0 + i as f64 * h1, search.x2.0 + j as f64 * h2)
        })
        .collect();
    let at = |i: usize, j: usize| values[i * n + j];

    let mut found: Vec<Vector2<f64>> = Vec::new();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let v = at(i, j);
            let is_min = (-1i64..=1)
                .flat_map(|di| (-1i64..=1).map(move |dj| (di, dj)))
                .filter(|&(di, dj)| di != 0 || dj != 0)
                .all(|(di, dj)| v <= at((i as i64 + di) as usize, (j as i64 + dj) as usize));
            if !is_min {
                continue;
            }
            let seed = Vector2::new(search.x1.0 + i as f64 * h1, search.x2.0 + j as f64 * h2);
            let Some(x) = newton(d, seed, true) else { continue };
            if !search.contains(x) || !hessian(d, x).cholesky().is_some() {
                continue;
            }
            if found.iter().all(|y| (y - x).norm() > 1e-6) {
                found.push(x);
            }
        }
    }
    let mut out: Vec<(f64, f64)> = found.into_iter().map(|v| (v[0], v[1])).collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Locates the four wells of the coupled potential and labels them: the
/// two wells with smaller x1 are control state 0, and within each pair the
/// smaller x2 is target state 0.
pub fn find_wells(_p: &DeviceParams, d: &DerivedConstants, search: &SearchBox) -> Result<Vec<Well>> {
    let minima = scan_minima(d, search);
    if minima.len() != 4 {
        return Err(Error::DegenerateLandscape { found: minima.len() });
    }
    let mut by_x1 = minima.clone();
    by_x1.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut wells = Vec::with_capacity(4);
    for (control, pair) in by_x1.chunks(2).enumerate() {
        let mut pair = pair.to_vec();
        pair.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        for (target, &(x1, x2)) in pair.iter().enumerate() {
            wells.push(Well {
                location: (x1, x2),
                depth: potential_2d_scaled(d, x1, x2),
                label: StateLabel::from_bits(control as u8, target as u8),
            });
        }
    }
    wells.sort_by_key(|w| w.label);
    Ok(wells)
}

/// Saddle point of the potential between two wells, by Newton iteration on
/// the gradient started from their midpoint.
pub fn saddle_between(d: &DerivedConstants, a: &Well, b: &Well) -> Result<(f64, f64)> {
    let mid = Vector2::new(
        0.5 * (a.location.0 + b.location.0),
        0.5 * (a.location.1 + b.location.1),
    );
    newton(d, mid, false)
        .map(|x| (x[0], x[1]))
        .ok_or_else(|| Error::Numerical {
            message: "saddle search did not converge".into(),
            dump: format!("wells {:?} and {:?}", a.location, b.location),
        })
}
