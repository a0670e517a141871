//! A single-qubit gate on the control qubit written as the product of two
//! conditional two-qubit gates, one acting when the target is `|0>` and one
//! when it is `|1>`. Basis order throughout is `|00>, |01>, |10>, |11>`
//! with the control qubit first.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const UNITARITY_TOLERANCE: f64 = 1e-12;

/// Largest entry of `|U^dagger U - I|`.
pub fn unitarity_error2(u: &Matrix2<C64>) -> f64 {
    (u.adjoint() * u - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn unitarity_error4(u: &Matrix4<C64>) -> f64 {
    (u.adjoint() * u - Matrix4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SingleQubitGate {
    pub name: String,
    pub u: Matrix2<C64>,
}

impl SingleQubitGate {
    pub fn new(name: impl Into<String>, u: Matrix2<C64>) -> Result<Self> {
        let err = unitarity_error2(&u);
        if !(err <= UNITARITY_TOLERANCE) {
            return Err(Error::Validation(format!("gate matrix is not unitary (|U'U - I| = {err:.3e})")));
        }
        Ok(SingleQubitGate { name: name.into(), u })
    }

    fn known(name: &str, u: Matrix2<C64>) -> Self {
        SingleQubitGate { name: name.into(), u }
    }

    pub fn identity() -> Self {
        Self::known("I", Matrix2::identity())
    }

    pub fn not() -> Self {
        Self::known("NOT", Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)))
    }

    pub fn hadamard() -> Self {
        let h = c(FRAC_1_SQRT_2, 0.0);
        Self::known("H", Matrix2::new(h, h, h, -h))
    }

    /// `exp(-i theta sigma_y / 2)`.
    pub fn ry(theta: f64) -> Self {
        let (s, co) = (0.5 * theta).sin_cos();
        Self::known("Ry", Matrix2::new(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)))
    }

    /// `exp(-i theta sigma_x / 2)`.
    pub fn rx(theta: f64) -> Self {
        let (s, co) = (0.5 * theta).sin_cos();
        Self::known("Rx", Matrix2::new(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0)))
    }

    /// `exp(-i theta sigma_z / 2)`.
    pub fn rz(theta: f64) -> Self {
        Self::known(
            "Rz",
            Matrix2::new(C64::from_polar(1.0, -0.5 * theta), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, 0.5 * theta)),
        )
    }

    /// `e^{i alpha} Rz(beta) Ry(gamma) Rz(delta)`; every 2x2 unitary has
    /// this form.
    pub fn from_euler(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        let u = Self::rz(beta).u * Self::ry(gamma).u * Self::rz(delta).u * C64::from_polar(1.0, alpha);
        Self::known("U", u)
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error2(&self.u)
    }
}

/// `a (x) b` with `a` on the first (control) factor.
pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|i, j| a[(i >> 1, j >> 1)] * b[(i & 1, j & 1)])
}

/// `u (x) I`: the gate on the control qubit.
pub fn on_control(u: &Matrix2<C64>) -> Matrix4<C64> {
    kron(u, &Matrix2::identity())
}

/// `U0` acts on `{|00>, |10>}` (target in `|0>`), `U1` on `{|01>, |11>}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalGatePair {
    pub u0: Matrix4<C64>,
    pub u1: Matrix4<C64>,
}

impl ConditionalGatePair {
    pub fn product(&self) -> Matrix4<C64> {
        self.u1 * self.u0
    }

    /// Each factor is the identity, exactly, on the other block and has no
    /// entries coupling the blocks.
    pub fn blocks_disjoint(&self) -> bool {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let check = |m: &Matrix4<C64>, target: usize| {
            (0..4).all(|i| {
                (0..4).all(|j| {
                    let in_block = (i & 1) == target && (j & 1) == target;
                    let v = m[(i, j)];
                    if in_block {
                        true
                    } else if i == j && (i & 1) != target {
                        v == one
                    } else {
                        v == zero
                    }
                })
            })
        };
        check(&self.u0, 0) && check(&self.u1, 1)
    }

    pub fn commutator_norm(&self) -> f64 {
        (self.u1 * self.u0 - self.u0 * self.u1).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Builds the conditional pair with `U1 U0 = u (x) I` and checks the
/// identity to `UNITARITY_TOLERANCE`.
pub fn decompose_single_qubit(gate: &SingleQubitGate) -> Result<ConditionalGatePair> {
    let err = gate.unitarity_error();
    if !(err <= UNITARITY_TOLERANCE) {
        return Err(Error::Validation(format!("{} is not unitary (|U'U - I| = {err:.3e})", gate.name)));
    }
    let u = &gate.u;
    let mut u0 = Matrix4::identity();
    let mut u1 = Matrix4::identity();
    for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        // Control index i selects |i t>, which sits at row 2i + t.
        u0[(2 * i, 2 * j)] = u[(i, j)];
        u1[(2 * i + 1, 2 * j + 1)] = u[(i, j)];
    }
    let pair = ConditionalGatePair { u0, u1 };
    let mismatch = (pair.product() - on_control(u)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if mismatch > UNITARITY_TOLERANCE {
        return Err(Error::Validation(format!("decomposition of {} misses u (x) I by {mismatch:.3e}", gate.name)));
    }
    Ok(pair)
}

/// `|M_ij|^2`: the map a gate induces on computational populations.
pub fn population_map(m: &Matrix4<C64>) -> Matrix4<f64> {
    m.map(|z| z.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Matrix4<C64>, b: &Matrix4<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn identity_gives_identities() {
        let p = decompose_single_qubit(&SingleQubitGate::identity()).unwrap();
        assert_eq!(p.u0, Matrix4::identity());
        assert_eq!(p.u1, Matrix4::identity());
    }

    #[test]
    fn not_swaps_within_blocks() {
        let p = decompose_single_qubit(&SingleQubitGate::not()).unwrap();
        let one = C64::new(1.0, 0.0);
        assert_eq!(p.u0[(2, 0)], one);
        assert_eq!(p.u0[(0, 2)], one);
        assert_eq!(p.u0[(1, 1)], one);
        assert_eq!(p.u1[(3, 1)], one);
        assert_eq!(p.u1[(1, 3)], one);
        assert_eq!(p.u1[(0, 0)], one);
        assert!(max_diff(&p.product(), &on_control(&SingleQubitGate::not().u)) == 0.0);
        assert!(p.blocks_disjoint());
    }

    #[test]
    fn hadamard_product_by_hand() {
        let h = SingleQubitGate::hadamard();
        let p = decompose_single_qubit(&h).unwrap();
        let r = FRAC_1_SQRT_2;
        #[rustfmt::skip]
        let expected = Matrix4::new(
            r, 0.0, r, 0.0,
            0.0, r, 0.0, r,
            r, 0.0, -r, 0.0,
            0.0, r, 0.0, -r,
        )
        .map(|v| C64::new(v, 0.0));
        assert!(max_diff(&p.product(), &expected) < 1e-12);
        assert!(p.commutator_norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unitary() {
        let bad = Matrix2::new(c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(SingleQubitGate::new("bad", bad), Err(Error::Validation(_))));
        let g = SingleQubitGate { name: "bad".into(), u: bad };
        assert!(matches!(decompose_single_qubit(&g), Err(Error::Validation(_))));
    }

    #[test]
    fn kron_ordering() {
        let x = SingleQubitGate::not().u;
        let k = kron(&x, &Matrix2::identity());
        // |00> -> |10>
        assert_eq!(k[(2, 0)], C64::new(1.0, 0.0));
        let k = kron(&Matrix2::identity(), &x);
        // |00> -> |01>
        assert_eq!(k[(1, 0)], C64::new(1.0, 0.0));
    }

    #[test]
    fn euler_gates_unitary() {
        let g = SingleQubitGate::from_euler(0.3, 1.1, -2.0, 0.7);
        assert!(g.unitarity_error() < 1e-14);
        assert!(SingleQubitGate::ry(1.0).unitarity_error() < 1e-15);
        assert!(SingleQubitGate::rx(1.0).unitarity_error() < 1e-15);
    }
}
