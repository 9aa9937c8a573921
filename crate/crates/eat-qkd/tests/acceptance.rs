//! Acceptance report: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::time::{Duration, Instant};

use eat_qkd::channel::{gradient_w, PerturbationBudget, TestChannel};
use eat_qkd::config::RunConfig;
use eat_qkd::error::Result;
use eat_qkd::frank_wolfe::FwOptions;
use eat_qkd::keylength::fixed_length_epsilon;
use eat_qkd::linalg::{frob, random_mixed_state, random_traceless_hermitian, scale, trace_prod_re};
use eat_qkd::markov::check_condition_b;
use eat_qkd::protocols::*;
use eat_qkd::scan::{run_scan, KeyRatePoint};
use eat_qkd::tradeoff::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VALIDITY_TOL: f64 = 1e-6;
const VALIDITY_STATES: usize = 1000;
const TIGHTNESS_TOL: f64 = 1e-4;
const ORACLE_GAP: f64 = 1e-7;
const FD_TOL: f64 = 1e-5;
const FD_STATES: usize = 50;
const DUALITY_TOL: f64 = 1e-5;
const CROSSOVER_TOL: f64 = 1e-12;
const FIXED_LENGTH_TOL: f64 = 1e-12;
const ASYMPTOTIC_REL_TOL: f64 = 0.05;
const MARKOV_FAIL_NORM: f64 = 0.1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn default_protocols() -> Vec<(String, Protocol)> {
    vec![
        ("bb84".into(), Protocol::Bb84 { q: 0.01 }),
        ("sixfour".into(), Protocol::SixFour { q: 0.01, theta: 11f64.to_radians() }),
        ("mub2 d=3".into(), Protocol::Mub2 { d: 3, q: 0.01 }),
        ("mub2 d=7".into(), Protocol::Mub2 { d: 7, q: 0.01 }),
        ("pdc".into(), Protocol::Pdc(PdcParams::default())),
    ]
}

fn build_opts() -> BuildOptions {
    BuildOptions { target: Target::Crossover, fw: FwOptions { tol: 1e-6, max_iter: 2000 } }
}

fn criterion_1() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, proto) in default_protocols() {
        let start = Instant::now();
        let spec = proto.build(0.9)?;
        let budget = PerturbationBudget::default_for(&spec.channel);
        let f1 = algorithm1(&spec.q_bar, &spec.channel, &budget, &build_opts())?.function;
        let k = Alg2Constants::default_for(1e8, 1e-8, 1e-8 / 3.0, Some(spec.gamma));
        let f2 = algorithm2(&spec.q_bar, &spec.channel, k, &budget, &build_opts())?.function;
        let m1 = validate_min_tradeoff(&f1, &spec.channel, VALIDITY_STATES, 1)?;
        let m2 = validate_min_tradeoff(&f2, &spec.channel, VALIDITY_STATES, 2)?;
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(if spec.channel.dim() > 9 { 1200 } else { 120 });
        pass &= m1 >= -VALIDITY_TOL && m2 >= -VALIDITY_TOL && elapsed <= limit;
        parts.push(format!("{name}: margins {m1:.2e}/{m2:.2e} in {:.1}s", elapsed.as_secs_f64()));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_2() -> Result<Outcome> {
    let spec = bb84(0.01, 0.9)?;
    let budget = PerturbationBudget::default_for(&spec.channel);
    let f = algorithm1(&spec.q_bar, &spec.channel, &budget, &build_opts())?.function;
    let oracle = minimize_on_slice(
        &spec.q_bar,
        &spec.channel,
        &budget,
        Target::Crossover,
        &FwOptions { tol: ORACLE_GAP, max_iter: 20_000 },
    )?;
    let diff = (f.evaluate(spec.q_bar.entries()) + budget.eta_epsilon - oracle.value).abs();
    outcome(
        diff <= TIGHTNESS_TOL && oracle.gap <= ORACLE_GAP,
        format!("|f(q0) + eta - r| = {diff:.2e}, oracle gap {:.1e}", oracle.gap),
    )
}

/// Worst relative error of central differences of `W` against `⟨∇W, H⟩`.
fn fd_worst(ch: &TestChannel, rng: &mut ChaCha8Rng) -> Result<f64> {
    let d = ch.dim();
    let mut worst = 0.0_f64;
    for _ in 0..FD_STATES {
        let rho = random_mixed_state(rng, d);
        let g = gradient_w(ch, &rho)?;
        let h = random_traceless_hermitian(rng, d);
        let h = scale(&h, 1.0 / frob(&h));
        let lmin = eat_qkd::linalg::eigh(rho.matrix()).min();
        // The step tracks the smallest eigenvalue to stay inside the cone while keeping
        // roundoff well below the tolerance; Richardson removes the leading truncation term.
        let t = 0.1 * lmin.min(1e-3);
        let central = |t: f64| {
            let plus = ch.value_raw(&(rho.matrix() + scale(&h, t)), 0.0);
            let minus = ch.value_raw(&(rho.matrix() - scale(&h, t)), 0.0);
            (plus - minus) / (2.0 * t)
        };
        let fd = (4.0 * central(0.5 * t) - central(t)) / 3.0;
        let an = trace_prod_re(g.matrix(), &h);
        // Relative to the gradient norm, since a random direction may be nearly orthogonal.
        worst = worst.max((fd - an).abs() / frob(g.matrix()).max(1e-12));
    }
    Ok(worst)
}

fn criterion_3() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, proto) in default_protocols() {
        let spec = proto.build(0.9)?;
        let w = fd_worst(&spec.channel, &mut rng)?;
        pass &= w <= FD_TOL;
        parts.push(format!("{name} {w:.1e}"));
    }
    outcome(pass, format!("max relative error: {}", parts.join(", ")))
}

fn criterion_4() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("bb84", bb84(0.01, 0.9)?), ("sixfour", six_four(0.01, 11f64.to_radians(), 0.9)?)] {
        let budget = PerturbationBudget::default_for(&spec.channel);
        for n in [1e6, 1e10] {
            let k = Alg2Constants::default_for(n, 1e-8, 1e-8 / 3.0, Some(spec.gamma));
            let opts = BuildOptions { fw: FwOptions { tol: 1e-8, max_iter: 5000 }, ..build_opts() };
            let r = algorithm2(&spec.q_bar, &spec.channel, k, &budget, &opts)?;
            let diff = (r.primal_value - r.dual_value).abs();
            pass &= diff <= DUALITY_TOL;
            parts.push(format!("{name} n={n:.0e} {diff:.1e}"));
        }
    }
    outcome(pass, format!("|primal - dual|: {}", parts.join(", ")))
}

fn criterion_5() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    let mut bounds_hold = true;
    for _ in 0..100 {
        let nx = rng.gen_range(2..8);
        let coeffs: Vec<f64> = (0..nx).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let gamma = 10f64.powf(rng.gen_range(-3.0..0.0));
        let labels = (0..nx).map(|i| i.to_string()).collect();
        let g = MinTradeoffFunction::crossover(labels, coeffs.clone(), gamma);
        let f = crossover_to_full(&g, gamma)?;
        let max_g = coeffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_g = coeffs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_f = f.coeffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min_f = f.coeffs.iter().cloned().fold(f64::INFINITY, f64::min);
        let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + a.abs().max(b.abs()));
        worst = worst
            .max(rel(max_f, max_g))
            .max(rel(f.stats.max, max_g))
            .max(rel(min_f, (1.0 - 1.0 / gamma) * max_g + min_g / gamma))
            .max(rel(f.stats.min, min_f));
        for (x, &gx) in coeffs.iter().enumerate() {
            worst = worst.max(rel(f.coeffs[x], max_g + (gx - max_g) / gamma));
        }
        worst = worst.max(rel(f.coeffs[nx], max_g));
        // Over distributions with ⊥ mass 1 - γ: f(q) = g(q'), so MinΣ f = Min g; the
        // variance never exceeds the stated bound.
        for _ in 0..50 {
            let w: Vec<f64> = (0..nx).map(|_| rng.gen::<f64>().powi(4)).collect();
            let s: f64 = w.iter().sum();
            let mut q: Vec<f64> = w.iter().map(|v| gamma * v / s).collect();
            q.push(1.0 - gamma);
            let mean = f.evaluate(&q);
            let gq: f64 = coeffs.iter().zip(&w).map(|(c, v)| c * v / s).sum();
            worst = worst.max(rel(mean, gq));
            let var: f64 = f.coeffs.iter().zip(&q).map(|(c, p)| p * (c - mean).powi(2)).sum();
            bounds_hold &= mean >= f.stats.min_sigma - 1e-12 && var <= f.stats.var * (1.0 + 1e-12);
        }
        bounds_hold &= f.stats.min_sigma >= min_g - 1e-15;
    }
    outcome(worst <= CROSSOVER_TOL && bounds_hold, format!("worst relative deviation {worst:.1e}, bounds hold {bounds_hold}"))
}

fn criterion_6() -> Result<Outcome> {
    let mut worst = 0.0_f64;
    for gamma in [0.1_f64, 0.25, 0.5] {
        for n in 1u32..=12 {
            let mut by_weight = vec![0.0_f64; n as usize + 1];
            for mask in 0u32..1 << n {
                let m = mask.count_ones();
                by_weight[m as usize] += gamma.powi(m as i32) * (1.0 - gamma).powi((n - m) as i32);
            }
            for (m, &exact) in by_weight.iter().enumerate() {
                let got = fixed_length_epsilon(n as u64, m as u64, gamma, 1.0)?;
                worst = worst.max((got - exact).abs() / exact);
            }
        }
    }
    outcome(worst <= FIXED_LENGTH_TOL, format!("worst relative error {worst:.1e}"))
}

fn scan(protocol: &str, extra: &[(&str, &str)], ns: &str) -> Result<Vec<KeyRatePoint>> {
    let mut cfg = RunConfig::default();
    cfg.set("protocol", protocol)?;
    cfg.set("n", ns)?;
    for (k, v) in extra {
        cfg.set(k, v)?;
    }
    let table = run_scan(&cfg)?;
    Ok(table.into_iter().filter(|p| p.is_ok()).collect())
}

fn best_at(table: &[KeyRatePoint], n: f64) -> Option<&KeyRatePoint> {
    table.iter().find(|p| p.n == n)
}

fn criterion_7() -> Result<Outcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let cases: [(&str, Vec<(&str, &str)>); 4] = [
        ("bb84", vec![]),
        ("mub2 d=3", vec![("d", "3")]),
        ("mub2 d=5", vec![("d", "5")]),
        ("mub2 d=7", vec![("d", "7")]),
    ];
    for (name, extra) in cases {
        let proto = if name == "bb84" { "bb84" } else { "mub2" };
        let mut settings = extra.clone();
        settings.push(("q", "0.01"));
        let table = scan(proto, &settings, "1e15")?;
        let Some(row) = best_at(&table, 1e15) else {
            pass = false;
            parts.push(format!("{name}: no successful point"));
            continue;
        };
        let mut cfg = RunConfig::default();
        cfg.set("protocol", proto)?;
        for (k, v) in &settings {
            cfg.set(k, v)?;
        }
        let spec = cfg.protocol()?.build(row.p_z)?;
        let budget = PerturbationBudget::default_for(&spec.channel);
        let r = asymptotic_rate(
            &spec.q_bar,
            &spec.channel,
            &budget,
            Target::Crossover,
            &FwOptions { tol: ORACLE_GAP, max_iter: 20_000 },
        )?;
        let reference = r.lower_bound - cfg.f_ec * spec.h_cond;
        let rel = (row.key_rate - reference).abs() / reference.abs();
        pass &= rel <= ASYMPTOTIC_REL_TOL;
        parts.push(format!("{name}: {:.4} vs {:.4} ({:.1}%)", row.key_rate, reference, 100.0 * rel));
    }
    let elapsed = start.elapsed();
    pass &= elapsed <= Duration::from_secs(3600);
    outcome(pass, format!("{} in {:.0}s", parts.join("; "), elapsed.as_secs_f64()))
}

fn criterion_8() -> Result<Outcome> {
    let ns = "1e7,1e8,1e9,1e10,1e11,1e12";
    let mut pass = true;
    let mut worst = f64::INFINITY;
    for proto in ["bb84", "sixfour"] {
        let renyi = scan(proto, &[("q", "0.01"), ("thm", "renyi")], ns)?;
        let smooth = scan(proto, &[("q", "0.01"), ("thm", "smooth")], ns)?;
        for k in 7..=12 {
            let n = 10f64.powi(k);
            match (best_at(&renyi, n), best_at(&smooth, n)) {
                (Some(r), Some(s)) => {
                    pass &= r.ell >= s.ell;
                    worst = worst.min((r.ell - s.ell) / n);
                }
                _ => pass = false,
            }
        }
    }
    outcome(pass, format!("smallest (l_renyi - l_smooth)/n = {worst:.3e}"))
}

fn criterion_9() -> Result<Outcome> {
    let bb = check_condition_b(&bb84(0.01, 0.9)?.channel.elements())?;
    let pdc = check_condition_b(&pdc_bb84(&PdcParams::default(), 0.9)?.channel.elements())?;
    let bad = check_condition_b(&x_announcement_counterexample())?;
    outcome(
        bb.pass && pdc.pass && !bad.pass && bad.worst_commutator > MARKOV_FAIL_NORM,
        format!(
            "bb84 {}, pdc {}, counterexample {} (norm {:.4})",
            bb.pass, pdc.pass, bad.pass, bad.worst_commutator
        ),
    )
}

fn criterion_10() -> Result<Outcome> {
    let bb = scan("bb84", &[("q", "0.01")], "1e5,1e10")?;
    let r5 = best_at(&bb, 1e5).map(|p| p.key_rate);
    let r10 = best_at(&bb, 1e10).map(|p| p.key_rate);
    let pdc = scan("pdc", &[("distance_km", "0")], "1e8,1e10")?;
    let pdc_best = pdc.iter().map(|p| p.key_rate).fold(0.0_f64, f64::max);
    let pass = r5 == Some(0.0) && r10.is_some_and(|r| r > 0.0) && pdc_best > 0.0;
    outcome(pass, format!("bb84 rate(1e5) {r5:?}, rate(1e10) {r10:?}; pdc best rate {pdc_best:.3e}"))
}

fn main() {
    let criteria: [(usize, &str, fn() -> Result<Outcome>); 10] = [
        (1, "min-tradeoff validity", criterion_1),
        (2, "tightness", criterion_2),
        (3, "gradient", criterion_3),
        (4, "strong duality", criterion_4),
        (5, "crossover identities", criterion_5),
        (6, "fixed-length conversion", criterion_6),
        (7, "asymptotic recovery", criterion_7),
        (8, "renyi vs smooth", criterion_8),
        (9, "markov checker", criterion_9),
        (10, "threshold reproduction", criterion_10),
    ];
    let mut failed = 0;
    for (k, name, run) in criteria {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {k} ({name}): {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
