use degenspec::bornopp::{
    effective_levels, expansion_value, gate, hbar_of, h_of, transverse_mu, Numerics, Regime, TransverseOptions,
};
use degenspec::potential::Evaluator;
use degenspec::quad::QuadOptions;
use degenspec::weyl::{gamma_const, phase_volume_of, weyl_prediction_of};
use std::f64::consts::PI;

#[test]
fn transverse_levels_of_abs_z_are_airy_zeros() {
    // even states sit at zeros of Ai', odd states at zeros of Ai
    let airy = [1.018_792_971_6, 2.338_107_410_5, 3.248_197_582_2, 4.087_949_444_1];
    let g = Evaluator::new("|z|", 1, |z| z[0].abs());
    let t = transverse_mu(&g, 1.0, 4, &TransverseOptions::default()).unwrap();
    for (m, e) in t.mu.iter().zip(airy) {
        assert!((m - e).abs() < 1e-5 * e, "{m} vs {e}");
    }
}

#[test]
fn transverse_levels_of_quartic_oscillator() {
    // ground level of -d^2 + z^4
    let g = Evaluator::new("z^4", 1, |z| z[0].powi(4));
    let t = transverse_mu(&g, 4.0, 2, &TransverseOptions::default()).unwrap();
    assert!((t.mu[0] - 1.060_362_090_5).abs() < 1e-6, "{}", t.mu[0]);
    assert!((t.mu[1] - 3.799_673_029_8).abs() < 1e-5, "{}", t.mu[1]);
}

#[test]
fn phase_volume_of_isotropic_oscillator() {
    // ∫ (1 - |x|²)_+ dx = π/2; times the unit disc area gives the unit 4-ball volume π²/2
    let v = Evaluator::new("y^2+z^2", 2, |x| x[0] * x[0] + x[1] * x[1]);
    let quad = QuadOptions::default();
    let vol = phase_volume_of(&v, 1.0, &quad, None).unwrap();
    assert!((vol - PI / 2.0).abs() < 1e-5, "{vol}");
    let n = weyl_prediction_of(0.1, 1.0, &v, &quad).unwrap();
    assert!((n - 1.0 / (8.0 * 0.01)).abs() < 1e-3 * n, "{n}");
}

#[test]
fn counting_constant_of_the_harmonic_oscillator() {
    // N(λ) ~ λ/2 for -D² + x², and the angular integral of x² over {±1} is 2
    let g = gamma_const(1, 2.0).unwrap();
    assert!((g * 2.0 - 0.5).abs() < 1e-12, "{g}");
}

#[test]
fn scaling_between_h_and_hbar() {
    for a in [1.0, 2.0, 4.0] {
        for h in [0.5, 0.1, 0.01] {
            assert!((h_of(hbar_of(h, a), a) - h).abs() < 1e-14);
        }
    }
    assert!((hbar_of(0.01, 2.0) - 0.1).abs() < 1e-15);
}

#[test]
fn effective_ground_level_follows_expansion() {
    let f = Evaluator::new("1+y^2", 1, |y| 1.0 + y[0] * y[0]);
    for hbar in [0.1, 0.05] {
        let l = effective_levels(&f, 2.0, 1.0, hbar, 1, &Numerics::default()).unwrap();
        let e = expansion_value(1.0, hbar, 2f64.sqrt(), 2.0);
        assert!((l[0].value - e).abs() < hbar * hbar, "hbar {hbar}: {} vs {e}", l[0].value);
    }
}

#[test]
fn gates_follow_essential_bound_and_regime() {
    let admitted = gate(Regime::LowEnergy, &[1.0, 3.0, 5.0], Some(2.0), 2.0, 0.1).unwrap();
    assert_eq!(admitted.iter().filter(|r| r.is_ok()).count(), 1);
    assert!(admitted[0].is_ok());
    assert!(gate(Regime::MiddleEnergy, &[1.0], None, 1.0, 0.1).is_err());
    assert!(gate(Regime::MiddleEnergy, &[1.0], Some(3.0), 2.0, 0.1).is_err());
    let mid = gate(Regime::MiddleEnergy, &[1.0, 50.0, 150.0], None, 2.0, 0.1).unwrap();
    assert_eq!(mid.iter().map(|r| r.is_ok()).collect::<Vec<_>>(), [true, true, false]);
}
