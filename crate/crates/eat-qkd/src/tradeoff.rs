//! Construction of min-tradeoff functions from the dual of a linearized entropy
//! minimization (first order) or of a penalized primal (second order), conversion of
//! crossover functions to full ones, and Monte-Carlo validation.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{PerturbationBudget, TestChannel};
use crate::error::{Error, Result};
use crate::frank_wolfe::{
    find_feasible, frank_wolfe, golden_section, FwGrad, FwOptions, FwPoint, FwProblem, FwTraceRow, LmoResult, SliceLmo,
};
use crate::linalg::{
    eigh, hermitize, identity, random_state, scale, trace_prod_re, CMat, HermitianOperator,
    ProbabilityVector, RMat,
};
use crate::sdp::{combine, solve_std, unembed_primal, IpmOptions, Mat, Row, SdpStatus, StdProblem};

/// Margin by which the returned dual point is kept strictly inside its constraint.
pub const DUAL_GUARD: f64 = 1e-7;

/// Extremal statistics of an affine function on the probability simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionStats {
    pub max: f64,
    pub min: f64,
    /// Lower bound on the minimum over distributions the adversary can induce.
    pub min_sigma: f64,
    /// Upper bound on the single-round variance.
    pub var: f64,
}

/// Affine function `q ↦ Σ_x coeffs(x) q(x)` over a test alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct MinTradeoffFunction {
    pub labels: Vec<String>,
    pub coeffs: Vec<f64>,
    /// `true` for a function on `X'` (statistics conditioned on testing).
    pub crossover: bool,
    pub gamma: f64,
    pub stats: FunctionStats,
}

fn extremes(c: &[f64]) -> (f64, f64) {
    c.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(mx, mn), &v| (mx.max(v), mn.min(v)))
}

impl MinTradeoffFunction {
    /// A function on the full alphabet with the generic variance bound `(Max - Min)² / 4`.
    pub fn direct(labels: Vec<String>, coeffs: Vec<f64>, gamma: f64) -> Self {
        let (max, min) = extremes(&coeffs);
        let stats = FunctionStats { max, min, min_sigma: min, var: 0.25 * (max - min).powi(2) };
        Self { labels, coeffs, crossover: false, gamma, stats }
    }

    /// A crossover function on `X'`; its stats are those of `g` itself.
    pub fn crossover(labels: Vec<String>, coeffs: Vec<f64>, gamma: f64) -> Self {
        let (max, min) = extremes(&coeffs);
        let stats = FunctionStats { max, min, min_sigma: min, var: 0.25 * (max - min).powi(2) };
        Self { labels, coeffs, crossover: true, gamma, stats }
    }

    pub fn evaluate(&self, q: &[f64]) -> f64 {
        self.coeffs.iter().zip(q).map(|(a, b)| a * b).sum()
    }

    /// Adds a constant to every coefficient.
    pub fn shifted(&self, c: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|v| v + c).collect();
        if self.crossover {
            Self::crossover(self.labels.clone(), coeffs, self.gamma)
        } else {
            let mut f = Self::direct(self.labels.clone(), coeffs, self.gamma);
            f.stats = FunctionStats {
                max: self.stats.max + c,
                min: self.stats.min + c,
                min_sigma: self.stats.min_sigma + c,
                var: self.stats.var,
            };
            f
        }
    }

    /// Text form: header, coefficients in alphabet order, then the stats block.
    pub fn to_text(&self) -> String {
        let mut s = String::from("eat-qkd-tradeoff 1\n");
        let _ = writeln!(s, "crossover {}", self.crossover);
        let _ = writeln!(s, "gamma {:.16e}", self.gamma);
        let _ = writeln!(s, "coeffs {}", self.coeffs.len());
        for (l, c) in self.labels.iter().zip(&self.coeffs) {
            let _ = writeln!(s, "{l} {c:.16e}");
        }
        let st = &self.stats;
        let _ = writeln!(s, "max {:.16e}", st.max);
        let _ = writeln!(s, "min {:.16e}", st.min);
        let _ = writeln!(s, "min_sigma {:.16e}", st.min_sigma);
        let _ = writeln!(s, "var {:.16e}", st.var);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse(format!("tradeoff: {m}"));
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some("eat-qkd-tradeoff 1") {
            return Err(bad("missing header"));
        }
        fn field<'a>(lines: &mut impl Iterator<Item = &'a str>, key: &str) -> Result<String> {
            let bad = |m: &str| Error::Parse(format!("tradeoff: {m}"));
            let line = lines.next().ok_or_else(|| bad(&format!("missing {key}")))?;
            let (k, v) = line.split_once(' ').ok_or_else(|| bad(line))?;
            if k != key {
                return Err(bad(&format!("expected {key}, found {k}")));
            }
            Ok(v.trim().to_string())
        }
        let num = |v: String| v.parse::<f64>().map_err(|_| bad(&format!("bad number {v}")));
        let crossover = match field(&mut lines, "crossover")?.as_str() {
            "true" => true,
            "false" => false,
            v => return Err(bad(&format!("bad flag {v}"))),
        };
        let gamma = num(field(&mut lines, "gamma")?)?;
        let count: usize = field(&mut lines, "coeffs")?.parse().map_err(|_| bad("bad count"))?;
        let mut labels = Vec::with_capacity(count);
        let mut coeffs = Vec::with_capacity(count);
        for _ in 0..count {
            let line = lines.next().ok_or_else(|| bad("missing coefficient"))?;
            let (l, v) = line.split_once(' ').ok_or_else(|| bad(line))?;
            labels.push(l.to_string());
            coeffs.push(num(v.trim().to_string())?);
        }
        let stats = FunctionStats {
            max: num(field(&mut lines, "max")?)?,
            min: num(field(&mut lines, "min")?)?,
            min_sigma: num(field(&mut lines, "min_sigma")?)?,
            var: num(field(&mut lines, "var")?)?,
        };
        Ok(Self { labels, coeffs, crossover, gamma, stats })
    }
}

/// Second-order constants `c0`, `c1` of the penalized construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alg2Constants {
    pub c0: f64,
    pub c1: f64,
}

impl Alg2Constants {
    pub fn new(c0: f64, c1: f64) -> Result<Self> {
        if !(c0 >= 0.0 && c0.is_finite() && c1 > 0.0 && c1.is_finite()) {
            return Err(Error::Parameter(format!("need c0 >= 0 and c1 > 0, got ({c0}, {c1})")));
        }
        Ok(Self { c0, c1 })
    }

    /// Defaults for `n` rounds; `crossover_gamma = Some(γ)` selects the crossover `c1`.
    pub fn default_for(n: f64, eps_acc: f64, eps_bar: f64, crossover_gamma: Option<f64>) -> Self {
        let c0 = 2.0 * std::f64::consts::LN_2.sqrt() * (1.0 - 2.0 * (eps_acc * eps_bar / 4.0).log2()).sqrt()
            / n.sqrt();
        let c1 = match crossover_gamma {
            Some(g) => 1.0 / (2.0 * g).sqrt(),
            None => 1.0 / (2.0 * 2f64.sqrt()),
        };
        Self { c0, c1 }
    }
}

/// Which test POVM the constructed function lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `g` on `X'` against `M_x / γ`, with `q₀` conditioned on testing.
    Crossover,
    /// `f` on `X` against `M_x`, including `⊥`.
    Direct,
}

impl Target {
    fn povm(self, ch: &TestChannel) -> Vec<HermitianOperator> {
        match self {
            Target::Crossover => ch.crossover_povm(),
            Target::Direct => ch.test_povm().to_vec(),
        }
    }

    fn labels(self, ch: &TestChannel) -> Vec<String> {
        match self {
            Target::Crossover => ch.test_alphabet_prime().to_vec(),
            Target::Direct => ch.test_alphabet().to_vec(),
        }
    }

    fn wrap(self, ch: &TestChannel, coeffs: Vec<f64>) -> MinTradeoffFunction {
        match self {
            Target::Crossover => MinTradeoffFunction::crossover(self.labels(ch), coeffs, ch.gamma()),
            Target::Direct => MinTradeoffFunction::direct(self.labels(ch), coeffs, ch.gamma()),
        }
    }
}

/// Builder settings shared by both constructions.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    pub target: Target,
    pub fw: FwOptions,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { target: Target::Crossover, fw: FwOptions { tol: 1e-6, max_iter: 2000 } }
    }
}

/// A constructed function with the diagnostics of its two steps.
#[derive(Debug, Clone)]
pub struct BuildReport {
    pub function: MinTradeoffFunction,
    /// Near-optimal state from the first step.
    pub rho_star: CMat,
    /// First-step objective at `rho_star`.
    pub primal_value: f64,
    /// Second-step dual objective, before the guard shift and the `η_ε` subtraction.
    pub dual_value: f64,
    pub fw_gap: f64,
    pub fw_iterations: usize,
    pub trace: Vec<FwTraceRow>,
    pub eta_epsilon: f64,
}

fn check_q0(q0: &ProbabilityVector, povm: &[HermitianOperator], ch: &TestChannel) -> Result<()> {
    if q0.len() != povm.len() {
        return Err(Error::Dimension(format!(
            "{} statistics for {} POVM elements",
            q0.len(),
            povm.len()
        )));
    }
    if povm[0].dim() != ch.dim() {
        return Err(Error::Dimension("POVM and channel dimensions differ".into()));
    }
    Ok(())
}

/// `W_ε` minimized over the slice `{ρ : Φ_M(ρ) = q₀}`.
struct SliceProblem<'a> {
    ch: &'a TestChannel,
    eps: f64,
    lmo: SliceLmo,
    povm: Vec<HermitianOperator>,
}

impl FwProblem for SliceProblem<'_> {
    fn value(&self, x: &FwPoint) -> f64 {
        self.ch.value_raw(&x.rho, self.eps)
    }

    fn gradient(&self, x: &FwPoint) -> Result<FwGrad> {
        let (_, g) = self.ch.evaluate(&x.rho, self.eps, true)?;
        Ok(FwGrad { rho: g.expect("gradient requested"), aux: vec![] })
    }

    fn lmo(&self, g: &FwGrad, rel_tol: f64) -> Result<LmoResult> {
        let (sigma, _, lb) = self.lmo.solve(&g.rho, rel_tol, &self.povm)?;
        Ok(LmoResult { vertex: FwPoint::state(sigma), lower_bound: lb })
    }
}

/// Shifts `y` down so that `Σ y(x) M_x + guard·I ⪯ O`; returns the shift applied.
fn guard_dual(y: &mut [f64], povm: &[HermitianOperator], o: &CMat) -> f64 {
    let lhs = combine(povm, y);
    let excess = eigh(&hermitize(&(lhs - o))).max() + DUAL_GUARD;
    let shift = excess.max(0.0);
    for v in y.iter_mut() {
        *v -= shift;
    }
    shift
}

/// Directions `n` with `Σ n(x) M_x = 0`, from an SVD of the vectorized POVM.
fn povm_null_space(povm: &[HermitianOperator]) -> Vec<Vec<f64>> {
    let d = povm[0].dim();
    let mut a = RMat::zeros(2 * d * d, povm.len());
    for (x, m) in povm.iter().enumerate() {
        for (k, z) in m.matrix().iter().enumerate() {
            a[(2 * k, x)] = z.re;
            a[(2 * k + 1, x)] = z.im;
        }
    }
    let nx = povm.len();
    // Eigenvectors of the Gram matrix with negligible eigenvalue span the null space.
    let (vals, vecs) = crate::linalg::eigh_real(&(a.transpose() * &a));
    let top = vals.iter().fold(0.0_f64, |m, &v| m.max(v));
    (0..nx)
        .filter(|&i| vals[i] <= 1e-20 * top.max(1.0))
        .map(|i| vecs.column(i).iter().copied().collect())
        .collect()
}

fn spread(y: &[f64]) -> f64 {
    let (mx, mn) = extremes(y);
    mx - mn
}

/// Moves `y` within `y + ker(Σ · M_x)` to reduce `Max - Min`. `Σ y M` is unchanged and,
/// for attainable `q₀`, so is `⟨q₀, y⟩`.
fn reduce_spread(y: &mut [f64], povm: &[HermitianOperator]) {
    let null = povm_null_space(povm);
    for _ in 0..20 {
        let before = spread(y);
        for n in &null {
            let width = spread(n);
            if width <= 0.0 {
                continue;
            }
            let r = 2.0 * spread(y) / width;
            let at = |t: f64| spread(&y.iter().zip(n).map(|(a, b)| a + t * b).collect::<Vec<_>>());
            let (t, v) = golden_section(at, -r, r);
            if v < spread(y) {
                y.iter_mut().zip(n).for_each(|(a, b)| *a += t * b);
            }
        }
        if spread(y) >= before * (1.0 - 1e-12) {
            break;
        }
    }
}

/// Linearization `O = (W_ε(ρ) - Tr[Gρ]) I + G` at `ρ`.
fn linearization(ch: &TestChannel, rho: &CMat, eps: f64) -> Result<(f64, CMat)> {
    let (w, g) = ch.evaluate(rho, eps, true)?;
    let g = g.expect("gradient requested");
    let constant = w - trace_prod_re(&g, rho);
    Ok((constant, hermitize(&(g + scale(&identity(ch.dim()), constant)))))
}

/// Minimizes `W_ε` over `Σ(q₀)` by Frank-Wolfe; returns the final iterate and run data.
pub fn minimize_on_slice(
    q0: &ProbabilityVector,
    ch: &TestChannel,
    budget: &PerturbationBudget,
    target: Target,
    fw: &FwOptions,
) -> Result<crate::frank_wolfe::FwResult> {
    let povm = target.povm(ch);
    check_q0(q0, &povm, ch)?;
    let start = find_feasible(q0, &povm).map_err(|e| match e {
        Error::Infeasible(m) => Error::Infeasible(format!(
            "{m}; the statistics admit no exact state, use the second-order construction"
        )),
        other => other,
    })?;
    let cons: Vec<(HermitianOperator, f64)> = povm.iter().cloned().zip(q0.entries().iter().cloned()).collect();
    let prob = SliceProblem { ch, eps: budget.epsilon, lmo: SliceLmo::new(&cons), povm };
    frank_wolfe(&prob, FwPoint::state(start.matrix().clone()), fw)
}

/// First-order construction: dual of the linearized slice minimization.
pub fn algorithm1(
    q0: &ProbabilityVector,
    ch: &TestChannel,
    budget: &PerturbationBudget,
    opts: &BuildOptions,
) -> Result<BuildReport> {
    let povm = opts.target.povm(ch);
    let run = minimize_on_slice(q0, ch, budget, opts.target, &opts.fw)?;
    let rho = run.point.rho.clone();
    let (_, o) = linearization(ch, &rho, budget.epsilon)?;
    let cons: Vec<(HermitianOperator, f64)> = povm.iter().cloned().zip(q0.entries().iter().cloned()).collect();
    let (_, mut y, _) = SliceLmo::new(&cons).solve(&o, 1e-11, &povm)?;
    let dual_value: f64 = y.iter().zip(q0.entries()).map(|(a, b)| a * b).sum();
    reduce_spread(&mut y, &povm);
    guard_dual(&mut y, &povm, &o);
    let coeffs = y.iter().map(|v| v - budget.eta_epsilon).collect();
    Ok(BuildReport {
        function: opts.target.wrap(ch, coeffs),
        rho_star: rho,
        primal_value: run.value,
        dual_value,
        fw_gap: run.gap,
        fw_iterations: run.iterations,
        trace: run.trace,
        eta_epsilon: budget.eta_epsilon,
    })
}

/// Penalized problem over `(ρ, ξ)`.
struct PenaltyProblem<'a> {
    ch: &'a TestChannel,
    eps: f64,
    k: Alg2Constants,
    povm: Vec<HermitianOperator>,
    q0: Vec<f64>,
    base: StdProblem,
}

impl PenaltyProblem<'_> {
    fn radius(&self) -> f64 {
        2.0 * self.k.c0 * self.k.c1
    }

    fn penalty(&self, xi: &[f64]) -> f64 {
        let s: f64 = xi.iter().sum();
        let inner = self.k.c0 * self.k.c0 - s * s / (4.0 * self.k.c1 * self.k.c1);
        -inner.max(0.0).sqrt()
    }

    /// Standard form of the oracle; variables `[ξ, s⁺, s⁻, s_Σ]`.
    fn build(ch: &TestChannel, povm: &[HermitianOperator], q0: &[f64], k: Alg2Constants) -> StdProblem {
        let d = ch.dim();
        let nx = povm.len();
        let mut rows = Vec::with_capacity(2 * nx + 2);
        let mut b = Vec::with_capacity(2 * nx + 2);
        rows.push(Row { psd: vec![(0, Mat::from_hermitian(&identity(d)))], lp: vec![] });
        b.push(1.0);
        for (x, m) in povm.iter().enumerate() {
            rows.push(Row { psd: vec![(0, Mat::from_hermitian(m.matrix()))], lp: vec![(x, 1.0), (nx + x, -1.0)] });
            b.push(q0[x]);
        }
        for (x, m) in povm.iter().enumerate() {
            rows.push(Row {
                psd: vec![(0, Mat::from_hermitian(m.matrix()))],
                lp: vec![(x, -1.0), (2 * nx + x, 1.0)],
            });
            b.push(q0[x]);
        }
        let mut sum = Row::default();
        sum.lp = (0..nx).map(|x| (x, 1.0)).collect();
        sum.lp.push((3 * nx, 1.0));
        rows.push(sum);
        b.push(2.0 * k.c0 * k.c1);
        StdProblem {
            psd_dims: vec![2 * d],
            lp_dim: 3 * nx + 1,
            c_psd: vec![RMat::zeros(2 * d, 2 * d)],
            c_lp: vec![0.0; 3 * nx + 1],
            rows,
            b,
        }
    }

    /// Lower bound on the oracle value from any dual point `y`.
    fn certified(&self, p: &StdProblem, y: &[f64]) -> f64 {
        let nx = self.povm.len();
        let mut z = p.c_psd[0].clone();
        let mut zl = DVector::from_column_slice(&p.c_lp);
        for (row, &yi) in p.rows.iter().zip(y) {
            for (_, m) in &row.psd {
                z -= m.to_dense() * yi;
            }
            for &(k, a) in &row.lp {
                zl[k] -= a * yi;
            }
        }
        let lmin = crate::linalg::eigh_real(&z).0[0];
        let r = self.radius();
        let ub = |k: usize| if k < nx || k == 3 * nx { r } else { 1.0 + r };
        let lp_term: f64 = zl.iter().enumerate().map(|(k, &v)| v.min(0.0) * ub(k)).sum();
        p.b.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + lmin.min(0.0) + lp_term
    }
}

impl FwProblem for PenaltyProblem<'_> {
    fn value(&self, x: &FwPoint) -> f64 {
        self.ch.value_raw(&x.rho, self.eps) + self.penalty(&x.aux)
    }

    fn gradient(&self, x: &FwPoint) -> Result<FwGrad> {
        let (_, g) = self.ch.evaluate(&x.rho, self.eps, true)?;
        let s: f64 = x.aux.iter().sum();
        let c12 = 4.0 * self.k.c1 * self.k.c1;
        let root = (self.k.c0 * self.k.c0 - s * s / c12).max(1e-30 * self.k.c0 * self.k.c0).sqrt();
        let dxi = s / (c12 * root);
        Ok(FwGrad { rho: g.expect("gradient requested"), aux: vec![dxi; x.aux.len()] })
    }

    fn lmo(&self, g: &FwGrad, rel_tol: f64) -> Result<LmoResult> {
        let nx = self.povm.len();
        let mut p = self.base.clone();
        p.c_psd[0] = crate::linalg::real_embed(&g.rho);
        p.c_lp[..nx].copy_from_slice(&g.aux);
        let opts = IpmOptions { gap_tol: rel_tol, feas_tol: rel_tol.min(1e-9), ..Default::default() };
        let sol = solve_std(&p, &opts);
        match sol.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => return Err(Error::Infeasible("penalized oracle infeasible".into())),
            SdpStatus::NumericalTrouble => {
                if !(sol.primal_residual < 1e-7 && (sol.primal_obj - sol.dual_obj).abs() < 1e-5) {
                    return Err(Error::Numerical(format!(
                        "penalized oracle stalled (residual {:.2e})",
                        sol.primal_residual
                    )));
                }
            }
        }
        let sigma = unembed_primal(&sol.x_psd[0]);
        let r = self.radius();
        let mut xi: Vec<f64> = sol.x_lp[..nx].iter().map(|v| v.max(0.0)).collect();
        let total: f64 = xi.iter().sum();
        if total > r {
            xi.iter_mut().for_each(|v| *v *= r / total);
        }
        let lb = self.certified(&p, &sol.y);
        Ok(LmoResult { vertex: FwPoint { rho: sigma, aux: xi }, lower_bound: lb })
    }
}

/// Dual of the linearized penalized problem at `G`: returns `(f, t)`.
fn penalty_dual(povm: &[HermitianOperator], q0: &[f64], g: &CMat, k: Alg2Constants) -> Result<(Vec<f64>, f64)> {
    let d = g.nrows();
    let nx = povm.len();
    let cc = k.c0 * k.c1;
    let off = RMat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let mut rows = Vec::with_capacity(nx + 3);
    for (x, m) in povm.iter().enumerate() {
        rows.push(Row { psd: vec![(0, Mat::from_hermitian(m.matrix()))], lp: vec![(x, 1.0), (nx + x, -1.0)] });
    }
    rows.push(Row { psd: vec![(1, Mat::Dense(&off * -cc))], lp: (0..nx).map(|x| (x, -1.0)).collect() });
    rows.push(Row { psd: vec![(1, Mat::Dense(&off * cc))], lp: (0..nx).map(|x| (nx + x, 1.0)).collect() });
    rows.push(Row { psd: vec![(1, Mat::Dense(-RMat::identity(2, 2)))], lp: vec![] });
    let mut b = q0.to_vec();
    b.extend([0.0, 0.0, -1.0]);
    let p = StdProblem {
        psd_dims: vec![2 * d, 2],
        lp_dim: 2 * nx,
        c_psd: vec![crate::linalg::real_embed(g), RMat::from_row_slice(2, 2, &[-k.c0, 0.0, 0.0, k.c0])],
        c_lp: vec![0.0; 2 * nx],
        rows,
        b,
    };
    let sol = solve_std(&p, &IpmOptions { gap_tol: 1e-11, feas_tol: 1e-11, ..Default::default() });
    if sol.status == SdpStatus::Infeasible
        || (sol.status == SdpStatus::NumericalTrouble && (sol.primal_obj - sol.dual_obj).abs() > 1e-6)
    {
        return Err(Error::Numerical(format!("linearized dual failed ({:?})", sol.status)));
    }
    Ok((sol.y[..nx].to_vec(), sol.y[nx + 2]))
}

/// Starting point `(ρ, ξ)` with `|Φ(ρ) - q₀| ≤ ξ` and `Σξ ≤ 2 c0 c1`.
fn penalty_start(prob: &PenaltyProblem) -> Result<FwPoint> {
    let q0 = ProbabilityVector::new(prob.q0.clone())?;
    if let Ok(rho) = find_feasible(&q0, &prob.povm) {
        return Ok(FwPoint { rho: rho.matrix().clone(), aux: vec![0.0; prob.povm.len()] });
    }
    // Closest attainable statistics in L1: minimize Σξ.
    let d = prob.ch.dim();
    let nx = prob.povm.len();
    let g = FwGrad { rho: CMat::zeros(d, d), aux: vec![1.0; nx] };
    let v = prob.lmo(&g, 1e-10)?.vertex;
    let stats: Vec<f64> = prob.povm.iter().map(|m| trace_prod_re(m.matrix(), &v.rho)).collect();
    let xi: Vec<f64> = stats.iter().zip(&prob.q0).map(|(a, b)| (a - b).abs()).collect();
    if xi.iter().sum::<f64>() >= prob.radius() {
        return Err(Error::Infeasible("statistics farther than 2 c0 c1 from every attainable point".into()));
    }
    Ok(FwPoint { rho: v.rho, aux: xi })
}

/// Second-order construction from the penalized primal and its linearized dual.
pub fn algorithm2(
    q0: &ProbabilityVector,
    ch: &TestChannel,
    k: Alg2Constants,
    budget: &PerturbationBudget,
    opts: &BuildOptions,
) -> Result<BuildReport> {
    let k = Alg2Constants::new(k.c0, k.c1)?;
    if k.c0 == 0.0 {
        return algorithm1(q0, ch, budget, opts);
    }
    let povm = opts.target.povm(ch);
    check_q0(q0, &povm, ch)?;
    let prob = PenaltyProblem {
        ch,
        eps: budget.epsilon,
        k,
        base: PenaltyProblem::build(ch, &povm, q0.entries(), k),
        povm: povm.clone(),
        q0: q0.entries().to_vec(),
    };
    let start = penalty_start(&prob)?;
    let run = frank_wolfe(&prob, start, &opts.fw)?;
    let rho = run.point.rho.clone();
    let (_, o) = linearization(ch, &rho, budget.epsilon)?;
    let (mut f, t) = penalty_dual(&povm, q0.entries(), &o, k)?;
    let dual_value = f.iter().zip(q0.entries()).map(|(a, b)| a * b).sum::<f64>() - t;
    guard_dual(&mut f, &povm, &o);
    let coeffs = f.iter().map(|v| v - budget.eta_epsilon).collect();
    Ok(BuildReport {
        function: opts.target.wrap(ch, coeffs),
        rho_star: rho,
        primal_value: run.value,
        dual_value,
        fw_gap: run.gap,
        fw_iterations: run.iterations,
        trace: run.trace,
        eta_epsilon: budget.eta_epsilon,
    })
}

/// Full function on `X = X' ∪ {⊥}` from a crossover function `g`.
pub fn crossover_to_full(g: &MinTradeoffFunction, gamma: f64) -> Result<MinTradeoffFunction> {
    if !g.crossover {
        return Err(Error::Parameter("function is not a crossover function".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!("testing probability {gamma} outside (0, 1]")));
    }
    let (max_g, min_g) = extremes(&g.coeffs);
    let mut coeffs: Vec<f64> = g.coeffs.iter().map(|&v| max_g + (v - max_g) / gamma).collect();
    coeffs.push(max_g);
    let mut labels = g.labels.clone();
    labels.push(crate::channel::BOT.to_string());
    let stats = FunctionStats {
        max: max_g,
        min: (1.0 - 1.0 / gamma) * max_g + min_g / gamma,
        min_sigma: min_g,
        var: (max_g - min_g).powi(2) / gamma,
    };
    Ok(MinTradeoffFunction { labels, coeffs, crossover: false, gamma, stats })
}

/// Smallest `W(ρ) - ⟨f, Φ(ρ)⟩` over `trials` random states (pure, Ginibre, depolarized pure).
pub fn validate_min_tradeoff(f: &MinTradeoffFunction, ch: &TestChannel, trials: usize, seed: u64) -> Result<f64> {
    let povm = if f.crossover { ch.crossover_povm() } else { ch.test_povm().to_vec() };
    if povm.len() != f.coeffs.len() {
        return Err(Error::Dimension(format!(
            "{} coefficients for {} POVM elements",
            f.coeffs.len(),
            povm.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    for i in 0..trials {
        let rho = random_state(&mut rng, ch.dim(), i);
        let w = ch.value_raw(rho.matrix(), 0.0);
        let fv: f64 = povm.iter().zip(&f.coeffs).map(|(m, c)| c * m.inner(rho.op())).sum();
        worst = worst.min(w - fv);
    }
    Ok(worst)
}

/// `min f(q)` over `{q ∈ simplex : ‖q - q̄‖₁ ≤ ξ_t}`.
///
/// Moving mass `m` from one entry to another costs `2m` in L1, so the optimum takes
/// up to `ξ_t / 2` from the entries with the largest coefficients and gives it to the
/// entry with the smallest.
pub fn min_over_acceptance(coeffs: &[f64], q_bar: &ProbabilityVector, xi_t: f64) -> Result<f64> {
    if !(xi_t >= 0.0) {
        return Err(Error::Parameter(format!("acceptance radius {xi_t} is negative")));
    }
    if coeffs.len() != q_bar.len() {
        return Err(Error::Dimension("coefficients and statistics differ in length".into()));
    }
    let mut q = q_bar.entries().to_vec();
    let target = (0..coeffs.len())
        .min_by(|&a, &b| coeffs[a].total_cmp(&coeffs[b]))
        .ok_or_else(|| Error::Dimension("empty alphabet".into()))?;
    let mut order: Vec<usize> = (0..coeffs.len()).filter(|&i| i != target).collect();
    order.sort_by(|&a, &b| coeffs[b].total_cmp(&coeffs[a]));
    let mut budget = 0.5 * xi_t;
    for i in order {
        if budget <= 0.0 || coeffs[i] <= coeffs[target] {
            break;
        }
        let m = budget.min(q[i]);
        q[i] -= m;
        q[target] += m;
        budget -= m;
    }
    Ok(coeffs.iter().zip(&q).map(|(a, b)| a * b).sum())
}

/// Lower bound on `r_∞(q)`: Frank-Wolfe value minus its certified gap, minus `η_ε`.
#[derive(Debug, Clone)]
pub struct AsymptoticReport {
    pub lower_bound: f64,
    pub value: f64,
    pub gap: f64,
    pub eta_epsilon: f64,
    pub iterations: usize,
    pub trace: Vec<FwTraceRow>,
}

pub fn asymptotic_rate(
    q: &ProbabilityVector,
    ch: &TestChannel,
    budget: &PerturbationBudget,
    target: Target,
    fw: &FwOptions,
) -> Result<AsymptoticReport> {
    let run = minimize_on_slice(q, ch, budget, target, fw)?;
    Ok(AsymptoticReport {
        lower_bound: run.value - run.gap - budget.eta_epsilon,
        value: run.value,
        gap: run.gap,
        eta_epsilon: budget.eta_epsilon,
        iterations: run.iterations,
        trace: run.trace,
    })
}

/// Objective maximized by the second-order construction, `⟨f, q̄⟩ - c0 √(1 + c1² (Max - Min)²)`.
pub fn second_order_score(f: &MinTradeoffFunction, q_bar: &[f64], k: Alg2Constants) -> f64 {
    let (max, min) = extremes(&f.coeffs);
    f.evaluate(q_bar) - k.c0 * (1.0 + k.c1 * k.c1 * (max - min).powi(2)).sqrt()
}
