//! Time evolution of the expansion coefficients `c_n(tau)` under the reduced
//! Hamiltonian, `i dc/dtau = H^R(tau) c`.
//!
//! The production integrator is a symmetric (Strang) splitting: half a step
//! of the diagonal energies, the drive part exponentiated exactly at the
//! step midpoint through its eigendecomposition, then the second half step.
//! Every step is exactly unitary. A classical RK4 integrator in the
//! interaction picture serves as an independent reference.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::{drive_coefficients, ReducedHamiltonian};
use crate::error::{Error, Result};
use crate::label::StateLabel;
use crate::spectral::ComputationalBasis;

pub type C64 = Complex64;

/// Largest allowed `dtau * omega_max` (at least ~60 steps per drive period).
pub const MAX_PHASE_PER_STEP: f64 = 0.1;
/// Norm drift that aborts a propagation.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Coefficients over the retained eigenstates at time `tau` (lab frame).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    pub amplitudes: DVector<C64>,
    pub tau: f64,
}

impl StateVector {
    pub fn new(amplitudes: DVector<C64>, tau: f64) -> Self {
        StateVector { amplitudes, tau }
    }

    /// Eigenstate `|n)` at `tau`.
    pub fn eigenstate(dim: usize, n: usize, tau: f64) -> Self {
        let mut a = DVector::zeros(dim);
        a[n] = C64::new(1.0, 0.0);
        StateVector { amplitudes: a, tau }
    }

    pub fn computational(dim: usize, basis: &ComputationalBasis, label: StateLabel, tau: f64) -> Self {
        Self::eigenstate(dim, basis.index(label), tau)
    }

    /// Builds a state from amplitudes over `|00>, |01>, |10>, |11>` given in
    /// the rotating frame.
    pub fn from_computational_amplitudes(
        dim: usize,
        basis: &ComputationalBasis,
        amps: &[C64; 4],
        energies: &DVector<f64>,
        tau: f64,
    ) -> Self {
        let mut rot = DVector::zeros(dim);
        for l in StateLabel::ALL {
            rot[basis.index(l)] = amps[l.index()];
        }
        Self::from_rotating_frame(&rot, energies, tau)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Amplitudes with the free evolution removed, `e^{i (E_n - E_0) tau} c_n`.
    /// The common reference `E_0` only changes a global phase.
    pub fn rotating_frame(&self, energies: &DVector<f64>) -> DVector<C64> {
        let e0 = energies[0];
        DVector::from_fn(self.dim(), |n, _| self.amplitudes[n] * C64::from_polar(1.0, (energies[n] - e0) * self.tau))
    }

    pub fn from_rotating_frame(rot: &DVector<C64>, energies: &DVector<f64>, tau: f64) -> Self {
        let e0 = energies[0];
        let a = DVector::from_fn(rot.len(), |n, _| rot[n] * C64::from_polar(1.0, -(energies[n] - e0) * tau));
        StateVector { amplitudes: a, tau }
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.amplitudes - &other.amplitudes).norm()
    }
}

/// `|<target|c>|^2`, clamped to `[0, 1]`.
pub fn fidelity(c: &StateVector, target: &StateVector) -> f64 {
    overlap_fidelity(&c.amplitudes, &target.amplitudes)
}

pub fn overlap_fidelity(c: &DVector<C64>, target: &DVector<C64>) -> f64 {
    target.dotc(c).norm_sqr().clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    SplitOperator,
    ReferenceRk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dtau: f64,
    /// Steps between recorded samples.
    pub record_stride: usize,
    pub method: Integrator,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dtau: 0.05, record_stride: 500, method: Integrator::SplitOperator }
    }
}

impl IntegratorConfig {
    pub fn with_method(self, method: Integrator) -> Self {
        IntegratorConfig { method, ..self }
    }

    pub fn with_dtau(self, dtau: f64) -> Self {
        IntegratorConfig { dtau, ..self }
    }

    pub fn validate(&self, max_omega: f64) -> Result<()> {
        if !(self.dtau > 0.0 && self.dtau.is_finite()) {
            return Err(Error::Configuration(format!("dtau must be positive, got {}", self.dtau)));
        }
        if self.record_stride == 0 {
            return Err(Error::Configuration("record_stride must be at least 1".into()));
        }
        if self.dtau * max_omega > MAX_PHASE_PER_STEP {
            return Err(Error::Configuration(format!(
                "dtau = {} does not resolve drive frequency {max_omega} (dtau * omega must be <= {MAX_PHASE_PER_STEP})",
                self.dtau
            )));
        }
        Ok(())
    }
}

/// Sampled history of one propagation.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryRecord {
    pub tau: Vec<f64>,
    /// Lab-frame amplitudes at each sample.
    pub amplitudes: Vec<DVector<C64>>,
    pub norm: Vec<f64>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    fn push(&mut self, s: &StateVector) {
        self.tau.push(s.tau);
        self.norm.push(s.norm());
        self.amplitudes.push(s.amplitudes.clone());
    }

    pub fn state(&self, k: usize) -> StateVector {
        StateVector { amplitudes: self.amplitudes[k].clone(), tau: self.tau[k] }
    }

    pub fn final_state(&self) -> StateVector {
        self.state(self.len() - 1)
    }

    pub fn population(&self, k: usize, n: usize) -> f64 {
        self.amplitudes[k][n].norm_sqr()
    }

    /// Populations of `|00>, |01>, |10>, |11>` at sample `k`.
    pub fn computational_populations(&self, k: usize, basis: &ComputationalBasis) -> [f64; 4] {
        let mut p = [0.0; 4];
        for l in StateLabel::ALL {
            p[l.index()] = self.population(k, basis.index(l));
        }
        p
    }

    /// `1 - sum of computational populations` at sample `k`.
    pub fn leakage(&self, k: usize, basis: &ComputationalBasis) -> f64 {
        1.0 - self.computational_populations(k, basis).iter().sum::<f64>()
    }

    pub fn max_leakage(&self, basis: &ComputationalBasis) -> f64 {
        (0..self.len()).map(|k| self.leakage(k, basis)).fold(0.0, f64::max)
    }

    /// Time series of the population of `|n)`.
    pub fn population_series(&self, n: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.population(k, n)).collect()
    }
}

struct LineEigen {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl LineEigen {
    fn new(m: &DMatrix<f64>) -> Result<Self> {
        let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000).ok_or_else(|| Error::Numerical {
            message: "eigendecomposition of the drive operator failed".into(),
            dump: format!("{m:.6e}"),
        })?;
        let mut vectors = eig.eigenvectors;
        reorthonormalize(&mut vectors);
        Ok(LineEigen { values: eig.eigenvalues, vectors })
    }
}

/// Two passes of modified Gram-Schmidt, tightening the eigensolver's
/// orthonormality to rounding level.
fn reorthonormalize(v: &mut DMatrix<f64>) {
    for _ in 0..2 {
        for j in 0..v.ncols() {
            for k in 0..j {
                let proj = v.column(k).dot(&v.column(j));
                let vk = v.column(k).clone_owned();
                v.column_mut(j).axpy(-proj, &vk, 1.0);
            }
            let n = v.column(j).norm();
            v.column_mut(j).unscale_mut(n);
        }
    }
}

/// Work buffers for applying `V diag(e^{-i s lambda}) V^T` to a complex
/// vector with a real orthogonal `V`.
struct ExpBuffers {
    re: DVector<f64>,
    im: DVector<f64>,
    yr: DVector<f64>,
    yi: DVector<f64>,
}

impl ExpBuffers {
    fn new(n: usize) -> Self {
        ExpBuffers { re: DVector::zeros(n), im: DVector::zeros(n), yr: DVector::zeros(n), yi: DVector::zeros(n) }
    }

    /// `c <- exp(-i scale A) c` where `A = V diag(values) V^T`, evaluated as
    /// `c + V (D - I) V^T c`. The identity part passes through untouched, so
    /// the rounding in `V V^T` (a few ulps, with a fixed sign pattern) is
    /// scaled by the small `D - I` instead of accumulating in the norm.
    fn apply(&mut self, eig: &LineEigen, scale: f64, c: &mut DVector<C64>) {
        for (k, z) in c.iter().enumerate() {
            self.re[k] = z.re;
            self.im[k] = z.im;
        }
        self.yr.gemv_tr(1.0, &eig.vectors, &self.re, 0.0);
        self.yi.gemv_tr(1.0, &eig.vectors, &self.im, 0.0);
        for k in 0..self.yr.len() {
            let (sh, ch) = (0.5 * eig.values[k] * scale).sin_cos();
            let s = 2.0 * sh * ch;
            // cos x - 1 without cancellation.
            let cm1 = -2.0 * sh * sh;
            let (a, b) = (self.yr[k], self.yi[k]);
            // (a + i b)(cm1 - i s)
            self.yr[k] = a * cm1 + b * s;
            self.yi[k] = b * cm1 - a * s;
        }
        self.re.gemv(1.0, &eig.vectors, &self.yr, 1.0);
        self.im.gemv(1.0, &eig.vectors, &self.yi, 1.0);
        for (k, z) in c.iter_mut().enumerate() {
            *z = C64::new(self.re[k], self.im[k]);
        }
    }
}

/// `c_I = e^{iE tau} c`.
fn to_interaction(energies: &DVector<f64>, s: &StateVector) -> DVector<C64> {
    DVector::from_fn(s.dim(), |n, _| s.amplitudes[n] * C64::from_polar(1.0, energies[n] * s.tau))
}

fn to_lab(energies: &DVector<f64>, y: &DVector<C64>, tau: f64) -> StateVector {
    let a = DVector::from_fn(y.len(), |n, _| y[n] * C64::from_polar(1.0, -energies[n] * tau));
    StateVector { amplitudes: a, tau }
}

/// Strang-split stepper with cached eigendecompositions of the two line
/// operators. When only one line is active the drive part is a scalar
/// multiple of that line's operator; when both are, the combined matrix is
/// decomposed afresh.
///
/// The step `e^{-iE h/2} e^{-iW h} e^{-iE h/2}` is carried out on the
/// interaction-picture coefficients as `e^{iE t_m} e^{-iW h} e^{-iE t_m}`
/// with `t_m` the step midpoint. The two forms are identical, but the
/// second draws fresh phases every step instead of multiplying by the same
/// rounded factor millions of times, so rounding does not pile up in the
/// norm.
pub struct SplitOperatorStepper<'a> {
    h: &'a ReducedHamiltonian,
    dtau: f64,
    e_rel: DVector<f64>,
    phase: DVector<C64>,
    control: LineEigen,
    target: LineEigen,
    buffers: ExpBuffers,
}

impl<'a> SplitOperatorStepper<'a> {
    /// `dtau` may be negative (backward propagation).
    pub fn new(h: &'a ReducedHamiltonian, dtau: f64) -> Result<Self> {
        let e0 = h.energies[0];
        Ok(SplitOperatorStepper {
            h,
            dtau,
            e_rel: h.energies.map(|e| e - e0),
            phase: DVector::zeros(h.dim()),
            control: LineEigen::new(&h.control_operator)?,
            target: LineEigen::new(&h.target_operator)?,
            buffers: ExpBuffers::new(h.dim()),
        })
    }

    /// Advances interaction-picture coefficients `y` from `tau`.
    fn step_interaction(&mut self, tau: f64, y: &mut DVector<C64>) -> Result<()> {
        let h = self.dtau;
        let mid = tau + 0.5 * h;
        let (xc, xt) = self.h.schedule.line_values(mid);
        let d12 = if self.h.options.include_identity_term { drive_coefficients(xc, xt, &self.h.constants).2 } else { 0.0 };
        if xc == 0.0 && xt == 0.0 && d12 == 0.0 {
            return Ok(());
        }
        // A global phase; the reference energy drops out.
        for n in 0..y.len() {
            self.phase[n] = C64::from_polar(1.0, -self.e_rel[n] * mid);
            y[n] *= self.phase[n];
        }
        match (xc != 0.0, xt != 0.0) {
            (false, false) => {}
            (true, false) => self.buffers.apply(&self.control, xc * h, y),
            (false, true) => self.buffers.apply(&self.target, xt * h, y),
            (true, true) => {
                let w = &self.h.control_operator * xc + &self.h.target_operator * xt;
                let eig = LineEigen::new(&w)?;
                self.buffers.apply(&eig, h, y);
            }
        }
        let global = C64::from_polar(1.0, -d12 * h);
        for n in 0..y.len() {
            y[n] *= self.phase[n].conj() * global;
        }
        Ok(())
    }

    pub fn step(&mut self, state: &mut StateVector) -> Result<()> {
        let mut y = to_interaction(&self.h.energies, state);
        self.step_interaction(state.tau, &mut y)?;
        *state = to_lab(&self.h.energies, &y, state.tau + self.dtau);
        Ok(())
    }
}

/// One split-operator step of size `dtau` from `c`.
pub fn step_split_operator(c: &StateVector, h: &ReducedHamiltonian, dtau: f64) -> Result<StateVector> {
    let mut out = c.clone();
    SplitOperatorStepper::new(h, dtau)?.step(&mut out)?;
    Ok(out)
}

/// RK4 on the interaction-picture coefficients `c_I = e^{iE tau} c`, which
/// removes the fast free phases so the step only has to resolve the drive.
struct Rk4Stepper<'a> {
    h: &'a ReducedHamiltonian,
    dtau: f64,
    e_rel: DVector<f64>,
    ph: DVector<C64>,
    xr: DVector<f64>,
    xi: DVector<f64>,
    wr: DVector<f64>,
    wi: DVector<f64>,
    k: [DVector<C64>; 4],
    tmp: DVector<C64>,
}

impl<'a> Rk4Stepper<'a> {
    fn new(h: &'a ReducedHamiltonian, dtau: f64) -> Self {
        let n = h.dim();
        let e0 = h.energies[0];
        let z = || DVector::<C64>::zeros(n);
        let r = || DVector::<f64>::zeros(n);
        Rk4Stepper {
            h,
            dtau,
            e_rel: h.energies.map(|e| e - e0),
            ph: z(),
            xr: r(),
            xi: r(),
            wr: r(),
            wi: r(),
            k: [z(), z(), z(), z()],
            tmp: z(),
        }
    }

    /// `k[slot] = -i e^{iE tau} W(tau) e^{-iE tau} tmp`.
    fn rhs(&mut self, tau: f64, slot: usize) {
        for n in 0..self.tmp.len() {
            self.ph[n] = C64::from_polar(1.0, self.e_rel[n] * tau);
            let x = self.tmp[n] * self.ph[n].conj();
            self.xr[n] = x.re;
            self.xi[n] = x.im;
        }
        let (xc, xt) = self.h.schedule.line_values(tau);
        let d12 = if self.h.options.include_identity_term {
            drive_coefficients(xc, xt, &self.h.constants).2
        } else {
            0.0
        };
        self.wr.fill(0.0);
        self.wi.fill(0.0);
        for (x, op) in [(xc, &self.h.control_operator), (xt, &self.h.target_operator)] {
            if x != 0.0 {
                self.wr.gemv(x, op, &self.xr, 1.0);
                self.wi.gemv(x, op, &self.xi, 1.0);
            }
        }
        if d12 != 0.0 {
            self.wr.axpy(d12, &self.xr, 1.0);
            self.wi.axpy(d12, &self.xi, 1.0);
        }
        let out = &mut self.k[slot];
        for n in 0..out.len() {
            out[n] = C64::new(self.wi[n], -self.wr[n]) * self.ph[n];
        }
    }

    fn step(&mut self, tau: f64, y: &mut DVector<C64>) {
        let h = self.dtau;
        self.tmp.copy_from(y);
        self.rhs(tau, 0);
        self.tmp.copy_from(y);
        self.tmp.axpy(C64::from(0.5 * h), &self.k[0], C64::from(1.0));
        self.rhs(tau + 0.5 * h, 1);
        self.tmp.copy_from(y);
        self.tmp.axpy(C64::from(0.5 * h), &self.k[1], C64::from(1.0));
        self.rhs(tau + 0.5 * h, 2);
        self.tmp.copy_from(y);
        self.tmp.axpy(C64::from(h), &self.k[2], C64::from(1.0));
        // Last stage taken as the limit from inside the step, so a pulse edge
        // on the step boundary does not leak into it.
        self.rhs(tau + h * (1.0 - 1e-9), 3);
        let w = C64::from(h / 6.0);
        for n in 0..y.len() {
            y[n] += w * (self.k[0][n] + 2.0 * self.k[1][n] + 2.0 * self.k[2][n] + self.k[3][n]);
        }
    }
}

fn check_norm(s: &StateVector, reference: f64) -> Result<()> {
    let drift = (s.norm() - reference).abs();
    if drift > NORM_DRIFT_LIMIT || !drift.is_finite() {
        return Err(Error::IntegratorInstability { drift, tau: s.tau });
    }
    Ok(())
}

/// Takes `n_steps` fixed steps of size `dtau` (negative runs backward),
/// recording every `record_stride` steps and at the end.
pub fn propagate_steps(
    c0: &StateVector,
    h: &ReducedHamiltonian,
    dtau: f64,
    n_steps: usize,
    record_stride: usize,
    method: Integrator,
) -> Result<TrajectoryRecord> {
    if c0.dim() != h.dim() {
        return Err(Error::Configuration(format!(
            "state has {} components, Hamiltonian {}",
            c0.dim(),
            h.dim()
        )));
    }
    let stride = record_stride.max(1);
    let n0 = c0.norm();
    let mut rec = TrajectoryRecord::default();
    rec.push(c0);
    match method {
        Integrator::SplitOperator => {
            let mut stepper = SplitOperatorStepper::new(h, dtau)?;
            let mut y = to_interaction(&h.energies, c0);
            for k in 1..=n_steps {
                stepper.step_interaction(c0.tau + (k - 1) as f64 * dtau, &mut y)?;
                if k % stride == 0 || k == n_steps {
                    let s = to_lab(&h.energies, &y, c0.tau + k as f64 * dtau);
                    check_norm(&s, n0)?;
                    rec.push(&s);
                }
            }
        }
        Integrator::ReferenceRk4 => {
            let mut stepper = Rk4Stepper::new(h, dtau);
            let mut y = to_interaction(&h.energies, c0);
            for k in 1..=n_steps {
                let tau = c0.tau + (k - 1) as f64 * dtau;
                stepper.step(tau, &mut y);
                if k % stride == 0 || k == n_steps {
                    let s = to_lab(&h.energies, &y, c0.tau + k as f64 * dtau);
                    check_norm(&s, n0)?;
                    rec.push(&s);
                }
            }
        }
    }
    Ok(rec)
}

/// Number of equal steps no longer than `dtau` that cover `duration`.
pub fn step_count(duration: f64, dtau: f64) -> usize {
    ((duration / dtau) - 1e-9).ceil().max(1.0) as usize
}

/// Integrates from `c0` over `duration`; the step is shrunk slightly so an
/// integer number of steps lands exactly on the end time.
pub fn propagate(
    c0: &StateVector,
    h: &ReducedHamiltonian,
    cfg: &IntegratorConfig,
    duration: f64,
) -> Result<TrajectoryRecord> {
    cfg.validate(h.schedule.max_omega())?;
    let norm = c0.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("initial state not normalized (norm {norm})")));
    }
    if !(duration > 0.0) {
        return Err(Error::Parameter(format!("duration must be positive, got {duration}")));
    }
    let n = step_count(duration, cfg.dtau);
    propagate_steps(c0, h, duration / n as f64, n, cfg.record_stride, cfg.method)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{derive_constants, DeviceParams};
    use crate::drive::{reduced_hamiltonian, DriveOptions, DriveSchedule, Line, PulseSpec};
    use crate::spectral::TransitionTable;

    fn table(energies: Vec<f64>, d1: DMatrix<f64>, d2: DMatrix<f64>) -> TransitionTable {
        let n = energies.len();
        TransitionTable {
            spacing: DMatrix::from_fn(n, n, |i, j| energies[j] - energies[i]),
            energies,
            d1,
            d2,
            basis: ComputationalBasis { indices: [0, 1, 2, 3], masses: [1.0; 4] },
        }
    }

    fn toy(schedule: DriveSchedule) -> ReducedHamiltonian {
        let d = derive_constants(&DeviceParams::reference_defaults()).unwrap();
        let e = vec![0.0, 0.04, 0.24, 0.3, 0.55];
        let d1 = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.1 * i as f64 } else { 1e-3 / (1.0 + (i + j) as f64) });
        let d2 = DMatrix::from_fn(5, 5, |i, j| if i == j { -0.05 } else { 2e-3 / (1.0 + (i * j) as f64) });
        reduced_hamiltonian(&table(e, d1, d2), &d, schedule, DriveOptions::default()).unwrap()
    }

    #[test]
    fn free_evolution_phases() {
        let h = toy(DriveSchedule::empty(10.0));
        let amps = DVector::from_fn(5, |n, _| C64::new(1.0 + n as f64, -0.5) / 6.0);
        let c = StateVector::new(amps.clone(), 0.0);
        let out = step_split_operator(&c, &h, 0.07).unwrap();
        for n in 0..5 {
            let expected = amps[n] * C64::from_polar(1.0, -h.energies[n] * 0.07);
            assert!((out.amplitudes[n] - expected).norm() < 1e-15);
        }
    }

    #[test]
    fn pure_drive_step_is_exact() {
        // E = 0 and a constant drive: the split step equals exp(-i W dtau).
        let d = derive_constants(&DeviceParams::reference_defaults()).unwrap();
        let d1 = DMatrix::from_row_slice(3, 3, &[0.0, 0.02, 0.01, 0.02, 0.1, 0.03, 0.01, 0.03, -0.2]);
        let t = table(vec![0.0; 3], d1.clone(), DMatrix::zeros(3, 3));
        // omega tiny and phase -omega*tau_mid so cos() = 1 at the midpoint.
        let dtau = 0.3;
        let p = PulseSpec::rectangular(Line::C, 2e-5, 1e-9, -1e-9 * dtau / 2.0, 0.0, 10.0);
        let h = reduced_hamiltonian(&t, &d, DriveSchedule::new(vec![p]).unwrap(), DriveOptions::default()).unwrap();
        let w = h.drive_matrix(dtau / 2.0);
        let c = StateVector::new(DVector::from_vec(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8), C64::new(0.0, 0.0)]), 0.0);
        let out = step_split_operator(&c, &h, dtau).unwrap();
        // Independent exact exponential via a Taylor series to convergence.
        let wc = w.map(|v| C64::new(0.0, -v * dtau));
        let mut term = c.amplitudes.clone();
        let mut sum = term.clone();
        for k in 1..40 {
            term = &wc * term / C64::from(k as f64);
            sum += &term;
        }
        assert!((out.amplitudes - sum).norm() < 1e-13);
    }

    #[test]
    fn no_drive_keeps_populations() {
        let h = toy(DriveSchedule::empty(1000.0));
        let c0 = StateVector::new(DVector::from_fn(5, |n, _| C64::new(if n < 2 { 0.6 } else { 0.0 }, if n == 1 { 0.52915026221 } else { 0.0 })), 0.0);
        let c0 = StateVector::new(&c0.amplitudes / C64::from(c0.norm()), 0.0);
        let rec = propagate(&c0, &h, &IntegratorConfig { record_stride: 100, ..Default::default() }, 1000.0).unwrap();
        let p0 = c0.populations();
        for k in 0..rec.len() {
            for (n, p) in p0.iter().enumerate() {
                assert!((rec.population(k, n) - p).abs() < 1e-12);
            }
        }
        assert!((rec.tau.last().unwrap() - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn norm_preserved_per_step() {
        let sched = DriveSchedule::new(vec![
            PulseSpec::rectangular(Line::C, 3e-4, 0.24, 0.0, 0.0, 400.0),
            PulseSpec::rectangular(Line::T, 2e-4, 0.3, 0.5, 100.0, 200.0),
        ])
        .unwrap();
        let h = toy(sched);
        let mut s = StateVector::eigenstate(5, 0, 0.0);
        let mut stepper = SplitOperatorStepper::new(&h, 0.05).unwrap();
        for _ in 0..8000 {
            let before = s.norm();
            stepper.step(&mut s).unwrap();
            assert!((s.norm() - before).abs() < 1e-13);
        }
    }

    #[test]
    fn backward_returns_to_start() {
        let sched = DriveSchedule::new(vec![
            PulseSpec::rectangular(Line::C, 5e-4, 0.24, 0.3, 0.0, 300.0),
            PulseSpec::rectangular(Line::T, 4e-4, 0.26, -0.1, 50.0, 250.0),
        ])
        .unwrap();
        let h = toy(sched);
        let c0 = StateVector::eigenstate(5, 0, 0.0);
        let fwd = propagate_steps(&c0, &h, 0.05, 6000, 6000, Integrator::SplitOperator).unwrap();
        let back = propagate_steps(&fwd.final_state(), &h, -0.05, 6000, 6000, Integrator::SplitOperator).unwrap();
        assert!(back.final_state().distance(&c0) < 1e-8);
        assert!(back.final_state().tau.abs() < 1e-9);
    }

    #[test]
    fn rk4_agrees_with_split_operator() {
        let sched = DriveSchedule::new(vec![PulseSpec::rectangular(Line::C, 2e-3, 0.24, 0.0, 0.0, 2000.0)]).unwrap();
        let h = toy(sched);
        let c0 = StateVector::eigenstate(5, 0, 0.0);
        let cfg = IntegratorConfig { dtau: 0.01, record_stride: 1000, ..Default::default() };
        let a = propagate(&c0, &h, &cfg, 2000.0).unwrap().final_state();
        let b = propagate(&c0, &h, &cfg.with_method(Integrator::ReferenceRk4), 2000.0).unwrap().final_state();
        assert!(a.distance(&b) < 1e-6, "{}", a.distance(&b));
    }

    #[test]
    fn fidelity_examples() {
        let s00 = StateVector::eigenstate(4, 0, 0.0);
        let s10 = StateVector::eigenstate(4, 2, 0.0);
        assert_eq!(fidelity(&s00, &s00), 1.0);
        assert_eq!(fidelity(&s00, &s10), 0.0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let sup = StateVector::new(DVector::from_vec(vec![r.into(), 0.0.into(), r.into(), 0.0.into()]), 0.0);
        assert!((fidelity(&sup, &s00) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_unresolved_step() {
        let sched = DriveSchedule::new(vec![PulseSpec::rectangular(Line::C, 1e-5, 3.0, 0.0, 0.0, 10.0)]).unwrap();
        let h = toy(sched);
        let c0 = StateVector::eigenstate(5, 0, 0.0);
        let r = propagate(&c0, &h, &IntegratorConfig::default(), 10.0);
        assert!(matches!(r, Err(Error::Configuration(_))));
        let unnormalized = StateVector::new(DVector::from_element(5, C64::new(1.0, 0.0)), 0.0);
        assert!(propagate(&unnormalized, &h.with_schedule(DriveSchedule::empty(1.0)), &IntegratorConfig::default(), 1.0).is_err());
    }

    #[test]
    fn rotating_frame_round_trip() {
        let e = DVector::from_vec(vec![47.6, 47.64, 47.85]);
        let amps = DVector::from_vec(vec![C64::new(0.1, 0.2), C64::new(-0.3, 0.4), C64::new(0.5, 0.0)]);
        let s = StateVector::from_rotating_frame(&amps, &e, 1234.5);
        assert!((s.rotating_frame(&e) - amps).norm() < 1e-12);
    }
}
