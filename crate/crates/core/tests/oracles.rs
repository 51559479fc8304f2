//! End-to-end oracle checks through the public API: each closed form against
//! an independently computed expectation.

use padic_expsums_core::characters::{make_char, theta, UnitPhase};
use padic_expsums_core::expsums::{kloosterman_brute, kloosterman_closed, ramanujan_brute, ramanujan_closed};
use padic_expsums_core::modarith::{epsilon, inv, mul_mod, EpsilonFactor, PrimePowerModulus, Residue};
use padic_expsums_core::padic::{plog, psqrt, SqrtBranch};
use padic_expsums_core::papersums::{c_def, c_zero_closed, g_def, g_kloosterman, CSumParams, GSumParams};

#[test]
fn postnikov_identity_from_outside() {
    // α for χ of index 1 mod 3^4, checked at a handful of m ≡ 1 mod 3
    let chi = make_char(3, 4, 1).unwrap();
    let q = PrimePowerModulus::new(3, 4).unwrap();
    let alpha = chi.alpha().value();
    for m in [1u64, 4, 10, 28, 40, 79] {
        let lg = plog(&Residue::new(m as i128, 81), &q).unwrap().value();
        assert_eq!(
            chi.eval(m as i64).unwrap(),
            theta(mul_mod(alpha, lg, 81) as i128, 3, 4)
        );
    }
}

#[test]
fn kloosterman_sum_against_hand_value() {
    // S(1, 1; 25): stationary points at ±1; 2·5·cos(4π/25)
    let q = PrimePowerModulus::new(5, 2).unwrap();
    let branch = SqrtBranch::canonical(5);
    let closed = kloosterman_closed(1, 1, &q, &branch).unwrap();
    let expect = 10.0 * (4.0 * std::f64::consts::PI / 25.0).cos();
    assert!((closed.re - expect).abs() < 1e-12 && closed.im.abs() < 1e-12);
    let brute = kloosterman_brute(1, 1, 25);
    assert!((brute.value.re - expect).abs() < brute.tolerance);
}

#[test]
fn ramanujan_sum_is_moebius_on_coprime_argument() {
    for c in [2u64, 3, 5, 6, 30, 105, 210] {
        let closed = ramanujan_closed(1, c);
        let brute = ramanujan_brute(1, c);
        assert!((brute.value.re - closed as f64).abs() <= brute.tolerance.max(1e-9));
    }
}

#[test]
fn square_root_and_epsilon_plumbing() {
    let q = PrimePowerModulus::new(7, 3).unwrap();
    let branch = SqrtBranch::canonical(7);
    let w = psqrt(&Residue::new(2, 343), &q, &branch).unwrap();
    assert_eq!(mul_mod(w, w, 343), 2);
    assert_eq!(epsilon(3, 7, 1).unwrap(), EpsilonFactor::MINUS_I);
    assert_eq!(UnitPhase::from(EpsilonFactor::I), UnitPhase::new(1, 4));
    assert_eq!(inv(w, 343).unwrap(), mul_mod(w, inv(2, 343).unwrap(), 343));
}

#[test]
fn g_and_c_forms_cross_check() {
    let chi = make_char(3, 3, 2).unwrap();
    // definition (triple sum) vs Kloosterman product at an off-grid point
    let params = GSumParams::new(&chi, 2, 2, 4, 7).unwrap();
    let def = g_def(&params).unwrap();
    let kl = g_kloosterman(&params).unwrap();
    assert!((def - kl).norm() < 1e-8);
    // diagonal evaluation
    let cparams = CSumParams::new(&chi, 2, 1, 1, 0, 4, 4).unwrap();
    assert_eq!(c_zero_closed(&cparams).unwrap(), 243 - 81);
    let direct = c_def(&cparams).unwrap();
    assert!((direct.re - 162.0).abs() < 1e-6 && direct.im.abs() < 1e-9);
}
