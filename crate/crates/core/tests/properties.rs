use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;

use ptlz::bloch::{
    bloch_hamiltonian, dispersion, gaussian_momentum_analytic, split_two_component, theta2_scaled,
    theta3, theta3_scaled, MomentumGrid, ThetaArguments,
};
use ptlz::lattice::{build_hamiltonian_action, GaussianBeam, LatticeParams};
use ptlz::two_level::{analytic_transmission, hamiltonian, spectrum, DEFAULT_EP_TOLERANCE};

fn sz_conj_sz(h: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let s = [1.0, -1.0];
    let mut out = h;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = h[i][j].conj() * s[i] * s[j];
        }
    }
    out
}

proptest! {
    #[test]
    fn two_level_pt_identity(v in -50.0..50.0f64, gamma in 1e-6..50.0f64) {
        prop_assume!((v * v - gamma * gamma).abs() > 0.0);
        let h = hamiltonian(v, gamma).unwrap();
        prop_assert_eq!(sz_conj_sz(h), h);
    }

    #[test]
    fn bloch_pt_identity(k in -PI..PI, gamma in 0.0..4.0f64) {
        let h = bloch_hamiltonian(k, gamma);
        prop_assert_eq!(sz_conj_sz(h), h);
    }

    #[test]
    fn real_spectrum_outside_exceptional_points(gamma in 1e-3..10.0f64, excess in 1e-3..10.0f64, sign in prop::bool::ANY) {
        let v = if sign { gamma + excess } else { -gamma - excess };
        let s = spectrum(v, gamma, DEFAULT_EP_TOLERANCE).unwrap();
        for l in s.eigenvalues {
            prop_assert!(l.im.abs() < 1e-12 * l.norm());
        }
        prop_assert!(s.lambda_plus().re >= 0.0);
    }

    #[test]
    fn conjugate_pair_inside_exceptional_points(gamma in 1e-3..10.0f64, frac in -0.999..0.999f64) {
        let s = spectrum(frac * gamma, gamma, DEFAULT_EP_TOLERANCE).unwrap();
        prop_assert_eq!(s.lambda_plus(), s.lambda_minus().conj());
        prop_assert!(s.lambda_plus().im > 0.0);
    }

    #[test]
    fn biorthogonality(v in -20.0..20.0f64, gamma in 1e-2..10.0f64) {
        prop_assume!((v * v - gamma * gamma).abs() > 1e-4);
        let s = spectrum(v, gamma, DEFAULT_EP_TOLERANCE).unwrap();
        let (l, r) = (s.left_eigenvectors.unwrap(), s.right_eigenvectors.unwrap());
        for i in 0..2 {
            for j in 0..2 {
                let d = l[i][0] * r[j][0] + l[i][1] * r[j][1];
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - expected).norm() < 1e-10, "<L{i}|R{j}> = {d}");
            }
        }
    }

    #[test]
    fn transmission_fields_are_consistent(gamma in 1e-3..20.0f64, alpha in 1e-3..1e3f64) {
        let t = analytic_transmission(gamma, alpha).unwrap();
        let from_fields = 1.0 / (1.0 + (t.log_mod_psi1_sq - t.log_mod_psi2_sq).exp());
        prop_assert_eq!(t.p_tr, from_fields);
        prop_assert!((0.5..=1.0).contains(&t.p_tr));
    }

    #[test]
    fn bond_centred_lattice_identity(gamma in 0.0..3.0f64, half in 1usize..40) {
        // sites -half+1 ..= half are mapped onto themselves by j -> 1 - j
        let p = LatticeParams::new(gamma, 0.0, 2 * half, 1 - half as i64).unwrap();
        let h = build_hamiltonian_action(&p).dense_matrix();
        let n = h.len();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(h[n - 1 - a][n - 1 - b].conj(), h[a][b]);
            }
        }
    }

    #[test]
    fn broken_bands_above_two(k in -PI..PI, gamma in 2.0001..6.0f64) {
        for e in dispersion(k, gamma) {
            prop_assert_eq!(e.re, 0.0);
        }
    }

    #[test]
    fn theta2_theta3_relation(re in -3.0..3.0f64, im in -2.0..2.0f64, nome_log in -5.0..-0.05f64) {
        let args = ThetaArguments { z: C64::new(re, im), nome_log };
        let shifted = ThetaArguments { z: C64::new(re, im - nome_log / 2.0), nome_log };
        let rhs = theta3(&shifted, 1e-17).unwrap() * (C64::i() * args.z + nome_log / 4.0).exp();
        let lhs = theta2_scaled(&args, 1e-17).unwrap();
        // compared on the scale of the dominant term since θ₂ has zeros
        let scale = lhs.ln_scale.exp();
        prop_assert!((lhs.to_complex() - rhs).norm() < 1e-11 * scale, "{} vs {rhs}", lhs.to_complex());
    }

    #[test]
    fn theta_truncation_self_convergence(re in -3.0..3.0f64, im in -40.0..40.0f64, nome_log in -200.0..-0.05f64, tol_exp in 3.0..14.0f64) {
        let tol = 10f64.powf(-tol_exp);
        let args = ThetaArguments { z: C64::new(re, im), nome_log };
        for f in [theta2_scaled, theta3_scaled] {
            let coarse = f(&args, tol).unwrap();
            let fine = f(&args, tol / 2.0).unwrap();
            prop_assert_eq!(coarse.ln_scale, fine.ln_scale);
            prop_assert!((coarse.mantissa - fine.mantissa).norm() < tol);
        }
    }

    #[test]
    fn momentum_representation_is_periodic(k in -PI..PI, q0 in -30.0..30.0f64, k0 in -PI..PI, sigma_sq in 0.5..60.0f64) {
        let beam = GaussianBeam::new(q0, k0, sigma_sq).unwrap();
        let (a1, a2) = gaussian_momentum_analytic(&beam, k).unwrap();
        let (b1, b2) = gaussian_momentum_analytic(&beam, k + 2.0 * PI).unwrap();
        let scale = a1.norm().max(a2.norm());
        prop_assert!((a1 - b1).norm() <= 1e-9 * scale + 1e-300);
        prop_assert!((a2 - b2).norm() <= 1e-9 * scale + 1e-300);
        // ψ(k + π) is the second component at k
        let (c1, _) = gaussian_momentum_analytic(&beam, k + PI).unwrap();
        prop_assert!((c1 - a2).norm() <= 1e-9 * scale + 1e-300);
    }

    #[test]
    fn two_component_round_trip(half in 1usize..64, seed in any::<u64>()) {
        let n = 2 * half;
        let grid = MomentumGrid::new(n).unwrap();
        let full: Vec<C64> = (0..n)
            .map(|i| {
                let x = seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) as f64;
                C64::new(x.sin(), x.cos())
            })
            .collect();
        let two = split_two_component(&full, &grid).unwrap();
        prop_assert_eq!(two.reassemble(&grid).unwrap(), full);
    }
}

#[test]
fn transmission_monotone_in_sweep_rate() {
    // 100 log-spaced rates over the window where e^{-πγ²/α} is resolvable in f64
    for gamma in [0.1, 0.5, 1.0, 2.0] {
        let ps: Vec<f64> = (0..100)
            .map(|i| gamma * gamma * 10f64.powf(-1.0 + 4.0 * i as f64 / 99.0))
            .map(|alpha| analytic_transmission(gamma, alpha).unwrap().p_tr)
            .collect();
        assert!(ps.windows(2).all(|w| w[1] > w[0]), "gamma {gamma}");
    }
    assert_eq!(analytic_transmission(1.0, 1e-3).unwrap().p_tr, 0.5);
    assert!(analytic_transmission(1.0, 1e9).unwrap().p_tr > 1.0 - 1e-8);
}
