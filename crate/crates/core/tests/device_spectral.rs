//! Device and spectral checks against independent calculations.

use std::f64::consts::PI;

use squidgates::device::{derive_constants, potential_1d, potential_2d, DeviceParams, Qubit, HBAR, PHI0};
use squidgates::spectral::{solve_1d, SolverConfig, SolverMethod};
use squidgates::system::CoupledSystem;

/// Potential energy in joule straight from the circuit: two loops with
/// inductive energy, Josephson energy and the mutual-inductance term.
fn potential_si(p: &DeviceParams, phi1: f64, phi2: f64) -> f64 {
    let l = p.inductance;
    let e_j = PHI0 * p.critical_current() / (2.0 * PI);
    let (d1, d2) = (phi1 - p.xe1 * PHI0, phi2 - p.xe2 * PHI0);
    d1 * d1 / (2.0 * l) + d2 * d2 / (2.0 * l)
        - e_j * ((2.0 * PI * phi1 / PHI0).cos() + (2.0 * PI * phi2 / PHI0).cos())
        + p.mutual_inductance() * d1 * d2 / (l * l)
}

#[test]
fn potential_matches_si_circuit_energy() {
    let p = DeviceParams::reference_defaults().with_kappa(0.02);
    let d = derive_constants(&p).unwrap();
    let unit = HBAR * d.omega_lc;
    let points = [(0.35, 0.6), (0.499, 0.4998), (0.62, 0.41), (0.2, 0.8)];
    let (r1, r2) = points[0];
    let ref_dimless = potential_2d(&p, &d, r1, r2);
    let ref_si = potential_si(&p, r1 * PHI0, r2 * PHI0);
    for &(x1, x2) in &points[1..] {
        // Differences, so a constant offset does not matter.
        let dimless = potential_2d(&p, &d, x1, x2) - ref_dimless;
        let si = (potential_si(&p, x1 * PHI0, x2 * PHI0) - ref_si) / unit;
        assert!((dimless - si).abs() < 1e-9 * si.abs().max(1.0), "({x1}, {x2}): {dimless} vs {si}");
    }
}

#[test]
fn characteristic_frequency_and_quoted_pairs() {
    let d = derive_constants(&DeviceParams::reference_defaults()).unwrap();
    let f = d.f_lc() / 1e9;
    assert!((f - 79.58).abs() < 0.01, "{f}");
    assert!((0.239 * f - 19.0).abs() / 19.0 < 0.01);
    assert!((0.0592 * f - 4.7).abs() / 4.7 < 0.01);
}

/// Lowest levels of one SQUID by Numerov shooting with node counting.
fn numerov_levels(p: &DeviceParams, qubit: Qubit, x_min: f64, x_max: f64, count: usize) -> Vec<f64> {
    let d = derive_constants(p).unwrap();
    let n = 40_000;
    let h = (x_max - x_min) / n as f64;
    let v: Vec<f64> = (0..=n).map(|i| potential_1d(&d, qubit, x_min + i as f64 * h)).collect();
    let nodes = |e: f64| -> usize {
        let g = |i: usize| 2.0 / d.eta * (v[i] - e);
        let f = |i: usize| 1.0 - h * h * g(i) / 12.0;
        let (mut prev, mut cur) = (0.0_f64, 1e-30_f64);
        let mut crossings = 0;
        for i in 1..n {
            let next = (2.0 * cur * (1.0 + 5.0 * h * h * g(i) / 12.0) - prev * f(i - 1)) / f(i + 1);
            if next == 0.0 || next.signum() != cur.signum() {
                crossings += 1;
            }
            prev = cur;
            cur = next;
            if cur.abs() > 1e100 {
                prev *= 1e-100;
                cur *= 1e-100;
            }
        }
        crossings
    };
    let v_min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (0..count)
        .map(|level| {
            let (mut lo, mut hi) = (v_min, v_min + 40.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if nodes(mid) > level {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn fgh_agrees_with_numerov_shooting() {
    let p = DeviceParams::reference_defaults();
    let d = derive_constants(&p).unwrap();
    let cfg = SolverConfig::default();
    let (g1, g2) = cfg.grids(&d).unwrap();
    for (g, q) in [(g1, Qubit::Control), (g2, Qubit::Target)] {
        let fgh = solve_1d(&p, &d, &g, q).unwrap().energies;
        let shoot = numerov_levels(&p, q, g.x_min, g.x_max, 8);
        for (k, e) in shoot.iter().enumerate() {
            assert!((fgh[k] - e).abs() < 1e-7, "{q:?} level {k}: fgh {} numerov {e}", fgh[k]);
        }
    }
}

#[test]
fn direct_2d_matches_product_basis() {
    let p = DeviceParams::reference_defaults();
    let product = CoupledSystem::reference_defaults().unwrap();
    let direct = CoupledSystem::build(&p, &SolverConfig { method: SolverMethod::Direct2d, ..Default::default() }).unwrap();
    for n in 0..20 {
        assert!((product.solution.energies[n] - direct.solution.energies[n]).abs() < 1e-9, "level {n}");
    }
    assert_eq!(product.basis.indices, direct.basis.indices);
    assert!((&product.table.d1 - &direct.table.d1).abs().max() < 1e-9);
    assert!((&product.table.d2 - &direct.table.d2).abs().max() < 1e-9);
}

#[test]
fn product_basis_converged_in_k() {
    let p = DeviceParams::reference_defaults();
    let k16 = CoupledSystem::reference_defaults().unwrap();
    let k24 = CoupledSystem::build(&p, &SolverConfig { k_basis: 24, ..Default::default() }).unwrap();
    for (a, b) in k16.key_spacings().iter().zip(k24.key_spacings()) {
        assert!((a - b).abs() < 1e-9, "{a} {b}");
    }
    assert!((&k16.table.d1 - &k24.table.d1).abs().max() < 1e-9);
}

#[test]
fn grid_refinement_converged() {
    let p = DeviceParams::reference_defaults();
    let base = CoupledSystem::reference_defaults().unwrap();
    let fine = CoupledSystem::build(&p, &SolverConfig { n_points: 512, ..Default::default() }).unwrap();
    for n in 0..20 {
        assert!((base.solution.energies[n] - fine.solution.energies[n]).abs() < 1e-9, "level {n}");
    }
}

#[test]
fn computational_states_are_lowest_four() {
    let sys = CoupledSystem::reference_defaults().unwrap();
    assert_eq!(sys.basis.indices, [0, 1, 2, 3]);
    let [d13, d24, d12, d34] = sys.key_spacings();
    assert!((d13 - 0.23948).abs() < 1e-4);
    assert!((d24 - 0.25860).abs() < 1e-4);
    assert!((d12 - 0.04012).abs() < 1e-4);
    assert!((d34 - 0.05924).abs() < 1e-4);
    // Sum rule of the level ladder.
    assert!((d13 + d34 - d12 - d24).abs() < 1e-12);
}
