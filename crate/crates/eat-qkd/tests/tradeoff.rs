use eat_qkd::channel::PerturbationBudget;
use eat_qkd::frank_wolfe::FwOptions;
use eat_qkd::linalg::ProbabilityVector;
use eat_qkd::protocols::{bb84, six_four, ProtocolSpec};
use eat_qkd::tradeoff::*;
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn opts(tol: f64) -> BuildOptions {
    BuildOptions { target: Target::Crossover, fw: FwOptions { tol, max_iter: 3000 } }
}

fn build1(spec: &ProtocolSpec, tol: f64) -> BuildReport {
    let budget = PerturbationBudget::default_for(&spec.channel);
    algorithm1(&spec.q_bar, &spec.channel, &budget, &opts(tol)).unwrap()
}

#[test]
fn algorithm1_is_valid_and_tight() {
    let spec = bb84(0.02, 0.9).unwrap();
    let r = build1(&spec, 1e-7);
    let g = &r.function;
    assert!(g.crossover);
    assert_eq!(g.coeffs.len(), spec.q_bar.len());
    let margin = validate_min_tradeoff(g, &spec.channel, 1000, 7).unwrap();
    assert!(margin >= -1e-9, "margin {margin}");
    let at_q = g.evaluate(spec.q_bar.entries());
    assert!(at_q <= r.primal_value + 1e-9);
    assert!(r.primal_value - at_q <= 1e-4, "{} vs {at_q}", r.primal_value);
    // Oracle: sifted fraction times 1 - h(e) for BB84 with symmetric errors.
    let h = |p: f64| -(p * p.log2() + (1.0 - p) * (1.0 - p).log2());
    let oracle = spec.key_fraction * (1.0 - h(spec.key_error_rate));
    assert!((at_q - oracle).abs() < 1e-3, "{at_q} vs {oracle}");
}

#[test]
fn algorithm1_dual_matches_primal() {
    let spec = six_four(0.01, 11f64.to_radians(), 0.9).unwrap();
    let r = build1(&spec, 1e-7);
    assert!((r.primal_value - r.dual_value).abs() <= r.fw_gap + 1e-6, "{} vs {}", r.primal_value, r.dual_value);
}

#[test]
fn algorithm2_is_valid_and_primal_matches_dual() {
    for spec in [bb84(0.02, 0.9).unwrap(), six_four(0.01, 11f64.to_radians(), 0.9).unwrap()] {
        let budget = PerturbationBudget::default_for(&spec.channel);
        let k = Alg2Constants::default_for(1e8, 1e-8, 1e-8 / 3.0, Some(spec.gamma));
        let r = algorithm2(&spec.q_bar, &spec.channel, k, &budget, &opts(1e-8)).unwrap();
        assert!((r.primal_value - r.dual_value).abs() <= 1e-5, "{} vs {}", r.primal_value, r.dual_value);
        let margin = validate_min_tradeoff(&r.function, &spec.channel, 500, 11).unwrap();
        assert!(margin >= -1e-9, "margin {margin}");
    }
}

#[test]
fn algorithm2_with_zero_c0_reduces_to_algorithm1() {
    let spec = bb84(0.02, 0.9).unwrap();
    let budget = PerturbationBudget::default_for(&spec.channel);
    let k = Alg2Constants::new(0.0, 1.0).unwrap();
    let a = algorithm2(&spec.q_bar, &spec.channel, k, &budget, &opts(1e-6)).unwrap();
    let b = algorithm1(&spec.q_bar, &spec.channel, &budget, &opts(1e-6)).unwrap();
    assert_eq!(a.function, b.function);
}

#[test]
fn second_order_score_prefers_algorithm2() {
    let spec = bb84(0.03, 0.9).unwrap();
    let budget = PerturbationBudget::default_for(&spec.channel);
    let k = Alg2Constants::default_for(1e6, 1e-8, 1e-8 / 3.0, Some(spec.gamma));
    let f1 = build1(&spec, 1e-7).function;
    let f2 = algorithm2(&spec.q_bar, &spec.channel, k, &budget, &opts(1e-7)).unwrap().function;
    let (s1, s2) = (second_order_score(&f1, spec.q_bar.entries(), k), second_order_score(&f2, spec.q_bar.entries(), k));
    assert!(s2 >= s1 - 1e-6, "{s2} < {s1}");
}

#[test]
fn alg2_constant_defaults() {
    let (n, ea, eb) = (1e10_f64, 1e-8_f64, 1e-8_f64 / 3.0);
    let k = Alg2Constants::default_for(n, ea, eb, None);
    let c0 = 2.0 * (2f64.ln() * (1.0 - 2.0 * (ea * eb / 4.0).log2())).sqrt() / n.sqrt();
    assert!((k.c0 - c0).abs() <= 1e-15 * c0);
    assert!((k.c1 - 1.0 / 8f64.sqrt()).abs() < 1e-15);
    let kc = Alg2Constants::default_for(n, ea, eb, Some(0.02));
    assert!((kc.c1 - 5.0).abs() < 1e-12);
    assert!(Alg2Constants::new(-1.0, 1.0).is_err());
    assert!(Alg2Constants::new(1.0, 0.0).is_err());
}

#[test]
fn crossover_of_constant_is_constant() {
    let g = MinTradeoffFunction::crossover(labels(3), vec![0.7; 3], 0.1);
    let f = crossover_to_full(&g, 0.1).unwrap();
    assert!(f.coeffs.iter().all(|&v| (v - 0.7).abs() < 1e-15));
    assert_eq!(f.stats.var, 0.0);
}

#[test]
fn crossover_half_example() {
    let g = MinTradeoffFunction::crossover(labels(2), vec![1.0, 0.0], 0.5);
    let f = crossover_to_full(&g, 0.5).unwrap();
    assert_eq!(f.coeffs, vec![1.0, -1.0, 1.0]);
    assert_eq!(f.labels.last().unwrap(), eat_qkd::channel::BOT);
    assert_eq!(f.stats.max, 1.0);
    assert_eq!(f.stats.min, -1.0);
    assert_eq!(f.stats.min_sigma, 0.0);
    assert_eq!(f.stats.var, 2.0);
}

#[test]
fn crossover_at_unit_gamma_keeps_coefficients() {
    let g = MinTradeoffFunction::crossover(labels(3), vec![0.2, -0.5, 0.9], 1.0);
    let f = crossover_to_full(&g, 1.0).unwrap();
    for (a, b) in f.coeffs.iter().zip(&g.coeffs) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!((f.stats.min - -0.5).abs() < 1e-15);
    assert!(crossover_to_full(&f, 0.5).is_err());
    assert!(crossover_to_full(&g, 0.0).is_err());
}

#[test]
fn validation_detects_shifted_function() {
    let spec = bb84(0.02, 0.9).unwrap();
    let g = build1(&spec, 1e-6).function;
    assert!(validate_min_tradeoff(&g.shifted(10.0), &spec.channel, 100, 1).unwrap() < 0.0);
    let zero = MinTradeoffFunction::direct(spec.channel.test_alphabet().to_vec(), vec![0.0; spec.channel.test_povm().len()], spec.gamma);
    assert!(validate_min_tradeoff(&zero, &spec.channel, 100, 1).unwrap() >= 0.0);
    let short = MinTradeoffFunction::direct(labels(1), vec![0.0], spec.gamma);
    assert!(validate_min_tradeoff(&short, &spec.channel, 10, 1).is_err());
}

#[test]
fn acceptance_minimum_examples() {
    let q = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
    assert!((min_over_acceptance(&[1.0, 0.0], &q, 0.2).unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(min_over_acceptance(&[1.0, 0.0], &q, 2.0).unwrap(), 0.0);
    assert_eq!(min_over_acceptance(&[1.0, 0.0], &q, 0.0).unwrap(), 0.5);
    assert!(min_over_acceptance(&[1.0, 0.0], &q, -0.1).is_err());
    assert!(min_over_acceptance(&[1.0], &q, 0.1).is_err());
}

#[test]
fn text_roundtrip_is_exact() {
    let spec = bb84(0.02, 0.9).unwrap();
    let g = build1(&spec, 1e-6).function;
    let f = crossover_to_full(&g, spec.gamma).unwrap();
    for h in [g, f] {
        assert_eq!(MinTradeoffFunction::from_text(&h.to_text()).unwrap(), h);
    }
    assert!(MinTradeoffFunction::from_text("garbage").is_err());
}

/// Grid minimum of `⟨c, q⟩` over the L1 ball around `q̄` intersected with the 3-simplex.
fn brute_min(c: &[f64; 3], qb: &[f64; 3], xi: f64, steps: usize) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let q = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
            let dist: f64 = q.iter().zip(qb).map(|(a, b)| (a - b).abs()).sum();
            if dist <= xi + 1e-12 {
                best = best.min(c.iter().zip(&q).map(|(a, b)| a * b).sum());
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossover_preserves_values_on_tested_statistics(
        g in prop::collection::vec(-3.0f64..3.0, 4),
        w in prop::collection::vec(0.01f64..1.0, 4),
        gamma in 0.01f64..1.0,
    ) {
        let gf = MinTradeoffFunction::crossover(labels(4), g.clone(), gamma);
        let f = crossover_to_full(&gf, gamma).unwrap();
        let s: f64 = w.iter().sum();
        let qp: Vec<f64> = w.iter().map(|v| v / s).collect();
        let mut full: Vec<f64> = qp.iter().map(|v| gamma * v).collect();
        full.push(1.0 - gamma);
        prop_assert!((f.evaluate(&full) - gf.evaluate(&qp)).abs() <= 1e-12);
        prop_assert!(f.stats.min <= f.coeffs.iter().cloned().fold(f64::INFINITY, f64::min) + 1e-12);
    }

    #[test]
    fn acceptance_minimum_matches_brute_force(
        c in prop::array::uniform3(-1.0f64..1.0),
        w in prop::array::uniform3(0.0f64..1.0),
        xi in 0.0f64..1.0,
    ) {
        let s: f64 = w.iter().sum::<f64>().max(1e-9);
        // Quantize q̄ onto the grid so the brute-force search contains it.
        let steps = 200;
        let mut qb = w.map(|v| ((v / s) * steps as f64).floor() / steps as f64);
        qb[2] = 1.0 - qb[0] - qb[1];
        let exact = min_over_acceptance(&c, &ProbabilityVector::new(qb.to_vec()).unwrap(), xi).unwrap();
        let grid = brute_min(&c, &qb, xi, steps);
        prop_assert!(exact <= grid + 1e-12, "{exact} > {grid}");
        prop_assert!(exact >= grid - 4.0 / steps as f64, "{exact} << {grid}");
    }
}
