//! Finite-size key length from the Rényi-entropy and smooth-min-entropy statements,
//! optimization of their free parameters, and fixed-length testing conversion.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::tradeoff::MinTradeoffFunction;

/// Security and protocol parameters entering the key-length formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityParams {
    pub n: f64,
    pub gamma: f64,
    pub eps_acc: f64,
    pub eps_sec: f64,
    pub eps_ec: f64,
    pub eps_pa: f64,
    pub eps_bar: f64,
    /// `|A|`, Alice's private alphabet without `⊥`.
    pub alice_size: usize,
    /// `|B|`, Bob's private alphabet without `⊥`.
    pub bob_size: usize,
    pub f_ec: f64,
    pub h_cond: f64,
    pub xi_t: f64,
}

pub const DEFAULT_EPS_ACC: f64 = 1e-8;
pub const DEFAULT_F_EC: f64 = 1.16;

impl SecurityParams {
    /// Defaults: `ε_acc = 1e-8`, `ε_sec = 2/3 ε_acc`, `ε_EC = ε̄ = ε_PA = 1/3 ε_acc`, `f_EC = 1.16`.
    pub fn defaults(n: f64, gamma: f64, alice_size: usize, bob_size: usize, h_cond: f64) -> Self {
        let third = DEFAULT_EPS_ACC / 3.0;
        Self {
            n,
            gamma,
            eps_acc: DEFAULT_EPS_ACC,
            eps_sec: 2.0 * third,
            eps_ec: third,
            eps_pa: third,
            eps_bar: third,
            alice_size,
            bob_size,
            f_ec: DEFAULT_F_EC,
            h_cond,
            xi_t: 0.0,
        }
    }

    /// `d_S = (|A| + 1)(|B| + 1)`.
    pub fn d_s(&self) -> f64 {
        ((self.alice_size + 1) * (self.bob_size + 1)) as f64
    }

    fn check_common(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{name} = {v} outside (0, 1]")))
            }
        };
        if !(self.n >= 1.0 && self.n.is_finite()) {
            return Err(Error::Parameter(format!("block size {} must be at least 1", self.n)));
        }
        unit("gamma", self.gamma)?;
        unit("eps_acc", self.eps_acc)?;
        unit("eps_ec", self.eps_ec)?;
        if self.f_ec < 1.0 {
            return Err(Error::Parameter(format!("f_EC = {} below 1", self.f_ec)));
        }
        if !(self.xi_t >= 0.0) {
            return Err(Error::Parameter(format!("xi_t = {} negative", self.xi_t)));
        }
        if self.alice_size == 0 || self.bob_size == 0 {
            return Err(Error::Parameter("private alphabets must be nonempty".into()));
        }
        Ok(())
    }

    /// Constraints of the Rényi statement: `ε_acc ≥ ε_sec + ε_EC`.
    pub fn validate_renyi(&self) -> Result<()> {
        self.check_common()?;
        if !(self.eps_sec > 0.0 && self.eps_sec <= 1.0) {
            return Err(Error::Parameter(format!("eps_sec = {} outside (0, 1]", self.eps_sec)));
        }
        if self.eps_acc < (self.eps_sec + self.eps_ec) * (1.0 - 1e-12) {
            return Err(Error::Parameter("need eps_acc >= eps_sec + eps_EC".into()));
        }
        Ok(())
    }

    /// Constraints of the smooth statement: `ε_acc ≥ ε̄ + ε_PA + ε_EC`.
    pub fn validate_smooth(&self) -> Result<()> {
        self.check_common()?;
        for (name, v) in [("eps_bar", self.eps_bar), ("eps_pa", self.eps_pa)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Parameter(format!("{name} = {v} outside (0, 1)")));
            }
        }
        if self.eps_acc < (self.eps_bar + self.eps_pa + self.eps_ec) * (1.0 - 1e-12) {
            return Err(Error::Parameter("need eps_acc >= eps_bar + eps_PA + eps_EC".into()));
        }
        Ok(())
    }
}

/// First-order rate and extremal statistics of the min-tradeoff function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffStats {
    pub h: f64,
    pub max_f: f64,
    pub min_f: f64,
    pub min_sigma_f: f64,
    pub var_f: f64,
}

impl TradeoffStats {
    pub fn new(h: f64, f: &MinTradeoffFunction) -> Self {
        Self { h, max_f: f.stats.max, min_f: f.stats.min, min_sigma_f: f.stats.min_sigma, var_f: f.stats.var }
    }
}

/// `V = √(Var f + 2) + log2(2 d_S² + 1)`.
pub fn v_constant(stats: &TradeoffStats, d_s: f64) -> f64 {
    (stats.var_f + 2.0).sqrt() + (2.0 * d_s * d_s + 1.0).log2()
}

/// `ln K_β`, with `E = log2 d_S + Max f - Min_Σ f` and
/// `K_β = 2^{(β-1)E} ln³(2^E + e²) / (6 (2-β)³ ln 2)`.
pub fn ln_k_constant(stats: &TradeoffStats, d_s: f64, beta: f64) -> Result<f64> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::Parameter(format!("beta = {beta} outside (1, 2)")));
    }
    let ln2 = std::f64::consts::LN_2;
    let e = d_s.log2() + stats.max_f - stats.min_sigma_f;
    let (a, b) = (e * ln2, 2.0_f64);
    let ln_sum = a.max(b) + (-(a - b).abs()).exp().ln_1p();
    Ok(-(6.0 * ln2).ln() - 3.0 * (2.0 - beta).ln() + (beta - 1.0) * e * ln2 + 3.0 * ln_sum.ln())
}

pub fn k_constant(stats: &TradeoffStats, d_s: f64, beta: f64) -> Result<f64> {
    Ok(ln_k_constant(stats, d_s, beta)?.exp())
}

/// `α = (δ - β) / (2δ - βδ - 1)`.
pub fn alpha_of(beta: f64, delta: f64) -> f64 {
    (delta - beta) / (2.0 * delta - beta * delta - 1.0)
}

/// `n (a-1)² K_a` evaluated in log space so that `K_a` never overflows on its own.
fn k_penalty(stats: &TradeoffStats, d_s: f64, a: f64, n: f64) -> Result<f64> {
    let ln = ln_k_constant(stats, d_s, a)? + 2.0 * (a - 1.0).ln() + n.ln();
    Ok(ln.exp())
}

fn check_h(stats: &TradeoffStats, leak: f64) -> Result<()> {
    if !(stats.var_f >= 0.0) || !stats.h.is_finite() || !leak.is_finite() {
        return Err(Error::Parameter("invalid tradeoff statistics or leakage".into()));
    }
    Ok(())
}

/// Key length of the Rényi statement; may be negative.
pub fn keylength_renyi(stats: &TradeoffStats, p: &SecurityParams, leak: f64, beta: f64, delta: f64) -> Result<f64> {
    check_h(stats, leak)?;
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::Parameter(format!("beta = {beta} outside (1, 2)")));
    }
    if !(delta > 0.5 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta = {delta} outside (1/2, 1)")));
    }
    let n = p.n;
    let d_s = p.d_s();
    let v = v_constant(stats, d_s);
    let alpha = alpha_of(beta, delta);
    let ln2 = std::f64::consts::LN_2;
    Ok(n * stats.h - leak - n * (beta - 1.0) * ln2 / 2.0 * v * v - k_penalty(stats, d_s, beta, n)?
        - n * p.gamma * ((p.alice_size * p.bob_size) as f64).log2()
        + (beta - delta) / ((beta + 1.0) * (1.0 - delta)) * p.eps_acc.log2()
        + alpha / (alpha - 1.0) * p.eps_sec.log2()
        + 1.0)
}

/// Key length of the smooth-min-entropy statement; may be negative.
pub fn keylength_smooth(stats: &TradeoffStats, p: &SecurityParams, leak: f64, alpha: f64) -> Result<f64> {
    check_h(stats, leak)?;
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} outside (1, 2)")));
    }
    let n = p.n;
    let d_s = p.d_s();
    let v = v_constant(stats, d_s);
    let ln2 = std::f64::consts::LN_2;
    let eb = p.eps_bar;
    let quarter = eb / 4.0;
    // 1 - √(1 - x²) computed without cancellation.
    let one_minus_root = quarter * quarter / (1.0 + (1.0 - quarter * quarter).sqrt());
    Ok(n * stats.h - leak - n * (alpha - 1.0) * ln2 / 2.0 * v * v - k_penalty(stats, d_s, alpha, n)?
        - n * p.gamma * ((p.alice_size * p.bob_size) as f64).log2()
        - 2.0 * n.sqrt() * (1.0 + 2.0 * d_s).log2() * (1.0 - 2.0 * (quarter * p.eps_acc).log2()).sqrt()
        - (32.0 / (eb * p.eps_acc).powi(2)).log2() / (alpha - 1.0)
        - 2.0 * one_minus_root.log2()
        - 2.0 * (2.0 / p.eps_pa).log2())
}

/// `n f_EC h_cond + log2(2 / ε_EC)`.
pub fn leak_ec(n: f64, f_ec: f64, h_cond: f64, eps_ec: f64) -> f64 {
    n * f_ec * h_cond + (2.0 / eps_ec).log2()
}

/// `ε_EA = C(n, m) γ^m (1-γ)^{n-m} ε_PE`, the probability that round-by-round testing
/// produces exactly `m` tests times `ε_PE`. For `m = γn` this is `2^{-n h(γ)} C(n, m) ε_PE`.
pub fn fixed_length_epsilon(n: u64, m: u64, gamma: f64, eps_pe: f64) -> Result<f64> {
    if m > n {
        return Err(Error::Parameter(format!("m = {m} exceeds n = {n}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Parameter(format!("gamma = {gamma} outside (0, 1)")));
    }
    let (nf, mf) = (n as f64, m as f64);
    let ln_binom = ln_gamma(nf + 1.0) - ln_gamma(mf + 1.0) - ln_gamma(nf - mf + 1.0);
    let ln_p = ln_binom + mf * gamma.ln() + (nf - mf) * (-gamma).ln_1p();
    Ok(ln_p.exp() * eps_pe)
}

/// Best Rényi key length found and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenyiOptimum {
    pub ell: f64,
    pub beta: f64,
    pub delta: f64,
}

/// Best smooth key length found and its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothOptimum {
    pub ell: f64,
    pub alpha: f64,
}

const LN_BETA_MIN: f64 = -18.420_680_743_952_367; // ln 1e-8

fn beta_of(u: f64) -> f64 {
    1.0 + u.clamp(LN_BETA_MIN, -1e-9).exp()
}

fn delta_of(v: f64) -> f64 {
    0.5 + 0.5 / (1.0 + (-v).exp())
}

fn logspace(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
}

/// Derivative-free simplex search maximizing `f` from `x0` with initial steps `step`.
fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], step: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..dim {
        let mut p = x0.to_vec();
        p[i] += step[i];
        pts.push(p);
    }
    // Minimize the negation; non-finite values rank last.
    let cost = |p: &[f64]| {
        let v = -f(p);
        if v.is_finite() { v } else { f64::INFINITY }
    };
    let mut vals: Vec<f64> = pts.iter().map(|p| cost(p)).collect();
    for _ in 0..iters {
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = (vals[dim] - vals[0]).abs();
        if spread <= 1e-12 * (1.0 + vals[0].abs()) && vals[0].is_finite() {
            break;
        }
        let centroid: Vec<f64> =
            (0..dim).map(|j| pts[..dim].iter().map(|p| p[j]).sum::<f64>() / dim as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[dim]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = along(1.0);
        let fr = cost(&xr);
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = cost(&xe);
            if fe < fr {
                pts[dim] = xe;
                vals[dim] = fe;
            } else {
                pts[dim] = xr;
                vals[dim] = fr;
            }
        } else if fr < vals[dim - 1] {
            pts[dim] = xr;
            vals[dim] = fr;
        } else {
            let xc = if fr < vals[dim] { along(0.5) } else { along(-0.5) };
            let fc = cost(&xc);
            if fc < vals[dim].min(fr) {
                pts[dim] = xc;
                vals[dim] = fc;
            } else {
                for i in 1..=dim {
                    pts[i] = pts[0].iter().zip(&pts[i]).map(|(b, p)| b + 0.5 * (p - b)).collect();
                    vals[i] = cost(&pts[i]);
                }
            }
        }
    }
    let best = (0..=dim).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    (pts[best].clone(), -vals[best])
}

/// Maximizes the Rényi key length over `β ∈ (1, 2)`, `δ ∈ (1/2, 1)`: a log grid in
/// `β - 1 ∈ [1e-8, 1)` and a logistic grid in `δ`, then simplex refinement.
pub fn optimize_renyi(stats: &TradeoffStats, p: &SecurityParams, leak: f64) -> Result<RenyiOptimum> {
    p.validate_renyi()?;
    keylength_renyi(stats, p, leak, 1.5, 0.75)?;
    let eval = |x: &[f64]| keylength_renyi(stats, p, leak, beta_of(x[0]), delta_of(x[1])).unwrap_or(f64::NEG_INFINITY);
    let mut best = (vec![LN_BETA_MIN, 0.0], f64::NEG_INFINITY);
    for u in logspace(LN_BETA_MIN, -0.01, 60) {
        for v in logspace(-8.0, 12.0, 41) {
            let val = eval(&[u, v]);
            if val > best.1 {
                best = (vec![u, v], val);
            }
        }
    }
    let (x, val) = nelder_mead(&eval, &best.0, &[0.3, 0.5], 400);
    let (x, val) = if val >= best.1 { (x, val) } else { best };
    Ok(RenyiOptimum { ell: val, beta: beta_of(x[0]), delta: delta_of(x[1]) })
}

/// Maximizes the smooth key length over `α ∈ (1, 2)` with a log grid in `α - 1`
/// followed by simplex refinement.
pub fn optimize_smooth(stats: &TradeoffStats, p: &SecurityParams, leak: f64) -> Result<SmoothOptimum> {
    p.validate_smooth()?;
    keylength_smooth(stats, p, leak, 1.5)?;
    let eval = |x: &[f64]| keylength_smooth(stats, p, leak, beta_of(x[0])).unwrap_or(f64::NEG_INFINITY);
    let mut best = (vec![LN_BETA_MIN], f64::NEG_INFINITY);
    for u in logspace(LN_BETA_MIN, -0.01, 200) {
        let val = eval(&[u]);
        if val > best.1 {
            best = (vec![u], val);
        }
    }
    let (x, val) = nelder_mead(&eval, &best.0, &[0.1], 200);
    let (x, val) = if val >= best.1 { (x, val) } else { best };
    Ok(SmoothOptimum { ell: val, alpha: beta_of(x[0]) })
}
