use eat_qkd::channel::PerturbationBudget;
use eat_qkd::linalg::{h2, trace_prod_re, ProbabilityVector};
use eat_qkd::protocols::*;
use proptest::prelude::*;

fn stat(spec: &ProtocolSpec, label: &str) -> f64 {
    let i = spec.channel.test_alphabet_prime().iter().position(|l| l == label).unwrap_or_else(|| panic!("{label}"));
    spec.q_bar.entries()[i]
}

#[test]
fn bb84_noiseless_statistics() {
    let s = bb84(0.0, 0.9).unwrap();
    assert_eq!(stat(&s, "err"), 0.0);
    assert!((stat(&s, "ok") - 1.0).abs() < 1e-12);
    assert!((s.gamma - 0.01).abs() < 1e-12);
    assert!((s.key_fraction - 0.81).abs() < 1e-12);
    assert_eq!(s.h_cond, 0.0);
    assert_eq!((s.alice_size, s.bob_size, s.d_s()), (2, 2, 9));
}

#[test]
fn bb84_noisy_statistics() {
    let s = bb84(0.01, 0.5).unwrap();
    assert!((stat(&s, "err") - 0.01).abs() < 1e-12);
    assert!((s.gamma - 0.25).abs() < 1e-12);
    assert!((s.h_cond - 0.25 * h2(0.01)).abs() < 1e-14);
    let full = s.q_bar_full();
    assert!((full.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!((full.last().unwrap() - 0.75).abs() < 1e-12);
    assert!(bb84(0.7, 0.5).is_err());
    assert!(bb84(0.01, 1.0).is_err());
}

#[test]
fn six_four_error_rates_follow_rotation() {
    for (q, theta) in [(0.0, 0.0), (0.02, 0.2), (0.05, 11f64.to_radians())] {
        let s = six_four(q, theta, 0.9).unwrap();
        // ⟨XX⟩ = (1 - 2Q) cos 2θ for the rotated depolarized Bell state; half the tests are XX.
        let xx_err = 0.5 * (1.0 - (1.0 - 2.0 * q) * (2.0 * theta).cos());
        assert!((stat(&s, "XX:err") - 0.5 * xx_err).abs() < 1e-12, "{q} {theta}");
        assert!((stat(&s, "XX:ok") + stat(&s, "XX:err") - 0.5).abs() < 1e-12);
        assert!((stat(&s, "YX:ok") + stat(&s, "YX:err") - 0.5).abs() < 1e-12);
        // The Z key is unaffected by a Z rotation.
        assert!((s.key_error_rate - q).abs() < 1e-15);
    }
    // At θ = 0, ⟨YX⟩ = 0 for every Bell mixture.
    let s = six_four(0.03, 0.0, 0.9).unwrap();
    assert!((stat(&s, "YX:err") - 0.25).abs() < 1e-12);
}

#[test]
fn mub_weights_are_normalized() {
    for d in [2usize, 3, 5, 7] {
        for q in [0.0, 0.01, 0.1] {
            let lam = mub_bell_weights(d, q);
            let total: f64 = lam.iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-12, "{d} {q}");
            assert!(lam.iter().flatten().all(|&l| l >= -1e-15));
            // Shift errors j ≠ 0 flip the Z outcome; their total mass is Q.
            let z_err: f64 = lam[1..].iter().flatten().sum();
            assert!((z_err - q).abs() < 1e-12);
        }
    }
}

#[test]
fn mub_test_errors_equal_q() {
    for d in [3usize, 5] {
        let q = 0.03;
        let s = mub2(d, q, 0.9).unwrap();
        let err: f64 = s
            .channel
            .test_alphabet_prime()
            .iter()
            .zip(s.q_bar.entries())
            .filter(|(l, _)| l.as_bytes()[0] != l.as_bytes()[1])
            .map(|(_, v)| v)
            .sum();
        assert!((err - q).abs() < 1e-10, "{d}: {err}");
        let df = d as f64;
        let ent = -(1.0 - q) * (1.0 - q).log2() - q * (q / (df - 1.0)).log2();
        assert!((s.h_cond - 0.81 * ent).abs() < 1e-12);
    }
}

#[test]
fn mub_in_dimension_two_matches_bb84() {
    let (a, b) = (mub2(2, 0.03, 0.8).unwrap(), bb84(0.03, 0.8).unwrap());
    assert!((a.h_cond - b.h_cond).abs() < 1e-14);
    let wa = a.channel.value_raw(a.rho_sim.matrix(), 0.0);
    let wb = b.channel.value_raw(b.rho_sim.matrix(), 0.0);
    assert!((wa - wb).abs() < 1e-9, "{wa} vs {wb}");
    let err_a: f64 = a.q_bar.entries()[1] + a.q_bar.entries()[2];
    assert!((err_a - stat(&b, "err")).abs() < 1e-12);
}

#[test]
fn mub_rejects_composite_dimension() {
    assert!(mub2(4, 0.01, 0.9).is_err());
    assert!(mub2(6, 0.01, 0.9).is_err());
    assert!(mub2(1, 0.01, 0.9).is_err());
}

#[test]
fn mub_seven_builds() {
    let s = mub2(7, 0.01, 0.9).unwrap();
    assert_eq!(s.channel.dim(), 49);
    assert_eq!(s.q_bar.len(), 49);
    assert_eq!(s.d_s(), 64);
}

#[test]
fn pdc_gain_examples() {
    // Ideal detectors, no dark counts: each arm clicks with probability 1 - 1/(1+λ)².
    for lambda in [0.05, 0.1, 0.5] {
        let p = PdcParams { lambda, eta_a: 1.0, eta_b: 1.0, y0_a: 0.0, y0_b: 0.0, e_d: 0.0 };
        let (gain, eq) = pdc_gain_error(&p);
        assert!((gain - (1.0 - 1.0 / (1.0 + lambda).powi(2))).abs() < 1e-14);
        assert!((eq - 0.5 * lambda * lambda / (1.0 + lambda).powi(2)).abs() < 1e-14);
    }
    let tiny = PdcParams { lambda: 1e-4, y0_a: 0.0, y0_b: 0.0, e_d: 0.0, ..Default::default() };
    let (gain, eq) = pdc_gain_error(&tiny);
    assert!(gain < 2e-4 && eq / gain < 1e-3, "{gain} {eq}");
}

#[test]
fn pdc_statistics_use_gain() {
    let p = PdcParams::default();
    let s = pdc_bb84(&p, 0.9).unwrap();
    let (gain, eq) = pdc_gain_error(&p);
    assert!((stat(&s, "nodet") - (1.0 - gain)).abs() < 1e-12);
    assert!((stat(&s, "err") - eq).abs() < 1e-12);
    assert_eq!(s.channel.dim(), 9);
    let far = p.at_distance(0.8, 100.0, FIBER_LOSS_DB_PER_KM);
    assert!((far.eta_a - 0.08).abs() < 1e-12);
    assert!(pdc_gain_error(&far).0 < gain);
    assert!(pdc_bb84(&PdcParams { lambda: 0.0, ..p }, 0.9).is_err());
}

#[test]
fn gamma_grid_layout() {
    for n in [1e5, 9.9e9, 1e10, 1e15] {
        let g = gamma_grid(n);
        assert_eq!(g.len(), 21);
        assert!(g.windows(2).all(|w| w[0] > w[1]));
    }
    assert!((gamma_grid(9.9e9)[0] - 1e-2).abs() < 1e-15);
    assert!((gamma_grid(1e10)[0] - 1e-3).abs() < 1e-15);
    assert!((gamma_grid(1e10)[20] - 1e-7).abs() < 1e-20);
    assert!((p_z_for_gamma(0.01) - 0.9).abs() < 1e-15);
    assert_eq!(noise_grid().len(), 14);
    assert_eq!(scan_parameters(1e6, true).len(), 21 * 14);
}

#[test]
fn protocol_enum_dispatches() {
    let p = Protocol::SixFour { q: 0.01, theta: 0.1 };
    assert_eq!(p.name(), "sixfour");
    assert_eq!(p.with_noise(0.02), Protocol::SixFour { q: 0.02, theta: 0.1 });
    let s = p.build(0.9).unwrap();
    assert_eq!(s.protocol, p);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn statistics_reproduce_from_simulated_state(q in 0.0f64..0.1, p_z in 0.5f64..0.99, which in 0usize..4) {
        let s = match which {
            0 => bb84(q, p_z).unwrap(),
            1 => six_four(q, 0.15, p_z).unwrap(),
            2 => mub2(3, q, p_z).unwrap(),
            _ => pdc_bb84(&PdcParams { e_d: q, ..Default::default() }, p_z).unwrap(),
        };
        prop_assert!((s.gamma - (1.0 - p_z).powi(2)).abs() < 1e-12);
        let full: Vec<f64> = s.channel.test_povm().iter().map(|m| trace_prod_re(m.matrix(), s.rho_sim.matrix())).collect();
        for (a, b) in full.iter().zip(s.q_bar_full()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!(ProbabilityVector::new(s.q_bar.entries().to_vec()).is_ok());
        prop_assert!(PerturbationBudget::default_for(&s.channel).eta_epsilon > 0.0);
    }
}
