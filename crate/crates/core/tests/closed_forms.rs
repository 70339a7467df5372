use std::f64::consts::PI;

use proptest::prelude::*;
use wienerjam_core::analytic::{
    analytic_bmse, bmse_one_tone, bmse_two_tone, bmse_uniform_comb, build_crr, error_covariance, error_covariance_direct, gamma_matrix,
    steering,
};
use wienerjam_core::linalg::{Cholesky, C64};
use wienerjam_core::optimizer::uniform_comb;
use wienerjam_core::{SystemParams, ToneSet};

fn taps_strategy() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![4usize, 8, 16, 32])
}

fn params_strategy() -> impl Strategy<Value = SystemParams> {
    (0.1f64..5.0, 0.1f64..50.0, 0.5f64..500.0, taps_strategy()).prop_map(|(s, n, j, l)| SystemParams::new(s, n, j, l).unwrap())
}

fn tones_strategy() -> impl Strategy<Value = ToneSet> {
    (1usize..=8)
        .prop_flat_map(|k| (prop::collection::vec(0.05f64..3.0, k), prop::collection::vec(-PI..PI, k)))
        .prop_map(|(a, w)| ToneSet::new(a, w).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn short_and_long_forms_agree(p in params_strategy(), t in tones_strategy()) {
        let short = error_covariance(&p, &t).unwrap();
        let long = error_covariance_direct(&p, &t).unwrap();
        prop_assert!(rel(short.sum(), long.sum()) < 1e-9, "{} vs {}", short.sum(), long.sum());
        let scale = short.max_abs().max(1e-12);
        prop_assert!(short.max_abs_diff(&long) < 1e-8 * scale);
    }

    #[test]
    fn bmse_bounded_by_jammer_power(p in params_strategy(), t in tones_strategy()) {
        let b = analytic_bmse(&p, &t).unwrap();
        prop_assert!(b > 0.0);
        prop_assert!(b <= t.power() * (1.0 + 1e-9));
    }

    #[test]
    fn crr_is_hermitian_positive_definite(p in params_strategy(), t in tones_strategy()) {
        let crr = build_crr(&p, &t).unwrap();
        prop_assert!(crr.is_hermitian(0.0));
        prop_assert!(Cholesky::new(&crr).is_ok());
    }

    #[test]
    fn gamma_matches_gram(t in tones_strategy(), l in taps_strategy()) {
        let direct = steering(t.omega(), l).unwrap().gram().unwrap();
        let kernel = gamma_matrix(t.omega(), l).unwrap();
        prop_assert!(direct.max_abs_diff(&kernel) < 1e-9 * l as f64);
    }

    #[test]
    fn bmse_invariant_to_common_shift(p in params_strategy(), t in tones_strategy(), shift in -PI..PI) {
        let moved: Vec<f64> = t.omega().iter().map(|w| w + shift).collect();
        let u = ToneSet::new(t.alpha().to_vec(), moved).unwrap();
        let a = analytic_bmse(&p, &t).unwrap();
        let b = analytic_bmse(&p, &u).unwrap();
        prop_assert!(rel(a, b) < 1e-9);
    }

    #[test]
    fn one_tone_closed_form(p in params_strategy(), w in -PI..PI) {
        let t = ToneSet::equal_power(p.jammer_power, vec![w]).unwrap();
        prop_assert!(rel(analytic_bmse(&p, &t).unwrap(), bmse_one_tone(&p)) < 1e-10);
    }

    #[test]
    fn two_tone_closed_form(p in params_strategy(), w in -PI..PI, d in 0.01f64..6.27) {
        let t = ToneSet::equal_power(p.jammer_power, vec![w, w + d]).unwrap();
        prop_assert!(rel(analytic_bmse(&p, &t).unwrap(), bmse_two_tone(&p, d)) < 1e-10);
    }

    #[test]
    fn comb_closed_form(p in params_strategy(), k in 1usize..=20, w in -PI..PI) {
        let c = uniform_comb(&p, k, w).unwrap();
        prop_assert!(rel(c.bmse, bmse_uniform_comb(&p, k)) < 1e-10);
        if k > p.half_taps() {
            prop_assert!(rel(c.bmse, p.jammer_power) < 1e-9);
        }
    }
}

#[test]
fn comb_first_eigenvalue_by_dft() {
    for k in 1..=16usize {
        for l in (2..=64usize).step_by(2) {
            let omega: Vec<f64> = (0..k).map(|i| i as f64 * 2.0 * PI / k as f64).collect();
            let g = gamma_matrix(&omega, l).unwrap();
            // Γ is circulant for a comb; eigenvalue i is the DFT of the first row
            let lambda: Vec<C64> = (0..k)
                .map(|i| (0..k).map(|j| g[(0, j)] * C64::from_polar(1.0, 2.0 * PI * (i * j) as f64 / k as f64)).sum())
                .collect();
            let expected = (2 * k * (l / (2 * k))) as f64;
            assert!((lambda[0].re - expected).abs() < 1e-9, "K={k} L={l}: {} vs {expected}", lambda[0].re);
            assert!(lambda[0].im.abs() < 1e-9);
            // every row of a circulant is a shift of the first
            for r in 1..k {
                for c in 0..k {
                    assert!((g[(r, c)] - g[(0, (c + k - r) % k)]).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn dominance_chain() {
    for l in [4usize, 8, 16, 32, 64] {
        let p = SystemParams::from_db(-15.0, 25.0, l).unwrap();
        let one = bmse_one_tone(&p);
        let two = bmse_two_tone(&p, 9.0 / (l as f64 + 1.0));
        let comb = uniform_comb(&p, l / 2 + 1, 0.0).unwrap().bmse;
        assert!(one <= two && two <= comb);
        assert!(rel(comb, p.jammer_power) < 1e-9);
    }
}
