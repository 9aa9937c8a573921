//! Single-round channel as a joint POVM with key, announcement and test structure,
//! and the convex objective `W(ρ)` with its gradient and perturbed variants.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    c, eigh, frob, hermitize, identity, trace_prod_re, trace_re, CMat, DensityOperator,
    HermitianOperator,
};

/// Label of the "no symbol" outcome.
pub const BOT: &str = "bot";

const POVM_TOL: f64 = 1e-9;

/// One POVM block `M_{s,p}` tagged with its test outcome `x = t(s,p)`.
#[derive(Debug, Clone)]
pub struct PovmElement {
    pub s: String,
    pub p: String,
    pub x: String,
    pub op: HermitianOperator,
}

/// Spectral factor of a PSD block used for fast entropy evaluation.
#[derive(Debug, Clone)]
pub enum Factor {
    /// `M = c I`.
    Scaled(f64),
    /// `M = U diag(μ) U†` with `U` a `d × r` isometry.
    LowRank { u: CMat, mu: Vec<f64> },
}

impl Factor {
    pub fn of(m: &CMat) -> Self {
        let d = m.nrows();
        let e = eigh(m);
        let mx = e.max().max(0.0);
        let mean = trace_re(m) / d as f64;
        let spread = e.values.iter().map(|&l| (l - mean).abs()).fold(0.0, f64::max);
        let off = {
            let mut dev = m.clone();
            for i in 0..d {
                dev[(i, i)] -= c(mean);
            }
            frob(&dev)
        };
        if spread <= 1e-13 * mx.max(1e-300) || off <= 1e-14 {
            return Factor::Scaled(mean.max(0.0));
        }
        let cut = 1e-12 * mx;
        let keep: Vec<usize> = (0..d).filter(|&i| e.values[i] > cut).collect();
        let mut u = CMat::zeros(d, keep.len());
        for (j, &i) in keep.iter().enumerate() {
            u.set_column(j, &e.vectors.column(i));
        }
        Factor::LowRank { u, mu: keep.iter().map(|&i| e.values[i]).collect() }
    }

    /// `sqrt(M)` as a dense matrix.
    pub fn sqrt_dense(&self, d: usize) -> CMat {
        match self {
            Factor::Scaled(cc) => identity(d).map(|z| z * cc.sqrt()),
            Factor::LowRank { u, mu } => {
                let mut us = u.clone();
                for (j, m) in mu.iter().enumerate() {
                    us.column_mut(j).iter_mut().for_each(|z| *z *= m.sqrt());
                }
                hermitize(&(us * u.adjoint()))
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Block {
    s: usize,
    p: usize,
    x: usize,
    op: HermitianOperator,
    factor: Factor,
}

/// Per-round channel with infrequent sampling, as a joint POVM.
#[derive(Debug, Clone)]
pub struct TestChannel {
    dim: usize,
    gamma: f64,
    key_alphabet: Vec<String>,
    announce_alphabet: Vec<String>,
    test_alphabet: Vec<String>,
    blocks: Vec<Block>,
    announce_ops: Vec<HermitianOperator>,
    announce_factors: Vec<Factor>,
    test_ops: Vec<HermitianOperator>,
    kraus: Vec<CMat>,
}

/// Perturbation `ε` and the continuity bound `η_ε`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationBudget {
    pub epsilon: f64,
    pub eta_epsilon: f64,
}

impl PerturbationBudget {
    pub fn new(ch: &TestChannel, epsilon: f64) -> Result<Self> {
        let d = ch.dim as f64;
        let upper = 1.0 / (std::f64::consts::E * (d - 1.0));
        if !(epsilon > 0.0 && epsilon <= upper) {
            return Err(Error::Parameter(format!(
                "perturbation {epsilon} outside (0, {upper}]"
            )));
        }
        let s = ch.key_alphabet.len() as f64;
        let p = ch.announce_alphabet.len() as f64;
        let e1 = epsilon * (d - 1.0);
        let eta = (s + 1.0) * p * e1 * (d / e1).log2();
        Ok(Self { epsilon, eta_epsilon: eta })
    }

    /// Default `ε = min(1e-8, 1/(e(d-1)))`.
    pub fn default_for(ch: &TestChannel) -> Self {
        let d = ch.dim as f64;
        let eps = 1e-8_f64.min(1.0 / (std::f64::consts::E * (d - 1.0)));
        Self::new(ch, eps).expect("default perturbation is in range")
    }
}

/// Generation-round POVM element before coarse-graining Bob's outcome.
#[derive(Debug, Clone)]
pub struct GenElement {
    pub alice: String,
    pub bob: String,
    pub p: String,
    pub op: HermitianOperator,
}

/// Test-round POVM element with its test outcome in `X'`.
#[derive(Debug, Clone)]
pub struct TestElement {
    pub alice: String,
    pub bob: String,
    pub p: String,
    pub x: String,
    pub op: HermitianOperator,
}

fn index_of(list: &mut Vec<String>, label: &str) -> usize {
    match list.iter().position(|l| l == label) {
        Some(i) => i,
        None => {
            list.push(label.to_string());
            list.len() - 1
        }
    }
}

impl TestChannel {
    /// Builds a channel from labelled blocks; blocks sharing `(s,p)` are merged.
    pub fn new(dim: usize, gamma: f64, elements: Vec<PovmElement>) -> Result<Self> {
        Self::with_alphabets(dim, gamma, elements, vec![], vec![], vec![])
    }

    /// As [`TestChannel::new`] with prescribed leading alphabet order.
    pub fn with_alphabets(
        dim: usize,
        gamma: f64,
        elements: Vec<PovmElement>,
        mut key_alphabet: Vec<String>,
        mut announce_alphabet: Vec<String>,
        mut test_alphabet: Vec<String>,
    ) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::Parameter(format!("testing probability {gamma} outside (0,1]")));
        }
        if dim == 0 {
            return Err(Error::Dimension("zero-dimensional channel".into()));
        }
        test_alphabet.retain(|x| x != BOT);
        let mut merged: Vec<(usize, usize, usize, CMat)> = Vec::new();
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for el in elements {
            if el.op.dim() != dim {
                return Err(Error::Dimension(format!(
                    "block ({}, {}) has dim {} but channel dim is {dim}",
                    el.s,
                    el.p,
                    el.op.dim()
                )));
            }
            if !el.op.is_psd(POVM_TOL) {
                return Err(Error::InvalidOperator(format!(
                    "block ({}, {}) not PSD (min eigenvalue {:.3e})",
                    el.s,
                    el.p,
                    el.op.eigh().min()
                )));
            }
            let s = index_of(&mut key_alphabet, &el.s);
            let p = index_of(&mut announce_alphabet, &el.p);
            let x = if el.x == BOT { usize::MAX } else { index_of(&mut test_alphabet, &el.x) };
            match seen.get(&(s, p)) {
                Some(&k) => {
                    if merged[k].2 != x {
                        return Err(Error::Parameter(format!(
                            "block ({}, {}) maps to two test outcomes",
                            el.s, el.p
                        )));
                    }
                    merged[k].3 += el.op.matrix();
                }
                None => {
                    seen.insert((s, p), merged.len());
                    merged.push((s, p, x, el.op.into_matrix()));
                }
            }
        }
        test_alphabet.push(BOT.to_string());
        let bot = test_alphabet.len() - 1;
        let mut total = CMat::zeros(dim, dim);
        for b in &merged {
            total += &b.3;
        }
        let dev = frob(&(total - identity(dim)));
        if dev > POVM_TOL {
            return Err(Error::InvalidOperator(format!("POVM incomplete (deviation {dev:.3e})")));
        }
        let blocks: Vec<Block> = merged
            .into_iter()
            .map(|(s, p, x, m)| {
                let factor = Factor::of(&m);
                Block {
                    s,
                    p,
                    x: if x == usize::MAX { bot } else { x },
                    op: HermitianOperator::from_hermitian(m),
                    factor,
                }
            })
            .collect();
        let mut announce = vec![CMat::zeros(dim, dim); announce_alphabet.len()];
        let mut tests = vec![CMat::zeros(dim, dim); test_alphabet.len()];
        for b in &blocks {
            announce[b.p] += b.op.matrix();
            tests[b.x] += b.op.matrix();
        }
        let announce_factors = announce.iter().map(Factor::of).collect();
        let kraus = blocks.iter().map(|b| b.factor.sqrt_dense(dim)).collect();
        Ok(Self {
            dim,
            gamma,
            key_alphabet,
            announce_alphabet,
            test_alphabet,
            blocks,
            announce_ops: announce.into_iter().map(HermitianOperator::from_hermitian).collect(),
            announce_factors,
            test_ops: tests.into_iter().map(HermitianOperator::from_hermitian).collect(),
            kraus,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn key_alphabet(&self) -> &[String] {
        &self.key_alphabet
    }

    pub fn announce_alphabet(&self) -> &[String] {
        &self.announce_alphabet
    }

    /// Test alphabet `X`, with `⊥` last.
    pub fn test_alphabet(&self) -> &[String] {
        &self.test_alphabet
    }

    /// `X' = X \ {⊥}`.
    pub fn test_alphabet_prime(&self) -> &[String] {
        &self.test_alphabet[..self.test_alphabet.len() - 1]
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `(s, p, x, M_{s,p})` for every block.
    pub fn elements(&self) -> Vec<PovmElement> {
        self.blocks
            .iter()
            .map(|b| PovmElement {
                s: self.key_alphabet[b.s].clone(),
                p: self.announce_alphabet[b.p].clone(),
                x: self.test_alphabet[b.x].clone(),
                op: b.op.clone(),
            })
            .collect()
    }

    /// Cached `K_{s,p} = sqrt(M_{s,p})`, in block order.
    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// `M_p = Σ_s M_{s,p}`, in announcement order.
    pub fn announcement_ops(&self) -> &[HermitianOperator] {
        &self.announce_ops
    }

    /// Derived test POVM `M_x` over `X` (⊥ last).
    pub fn test_povm(&self) -> &[HermitianOperator] {
        &self.test_ops
    }

    /// Test POVM on `X'` conditioned on a test round, `M_x / γ`.
    pub fn crossover_povm(&self) -> Vec<HermitianOperator> {
        self.test_ops[..self.test_ops.len() - 1]
            .iter()
            .map(|m| m.scaled(1.0 / self.gamma))
            .collect()
    }

    /// `Φ_M(ρ)` over `X`.
    pub fn statistics(&self, rho: &DensityOperator) -> Vec<f64> {
        self.test_ops.iter().map(|m| m.inner(rho.op())).collect()
    }

    /// Statistics on `X'` conditioned on testing.
    pub fn crossover_statistics(&self, rho: &DensityOperator) -> Vec<f64> {
        self.crossover_povm().iter().map(|m| m.inner(rho.op())).collect()
    }

    fn check_state(&self, rho: &DensityOperator) -> Result<()> {
        if rho.dim() != self.dim {
            return Err(Error::Dimension(format!(
                "state dim {} vs channel dim {}",
                rho.dim(),
                self.dim
            )));
        }
        if (rho.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidOperator("objective requires a trace-1 state".into()));
        }
        Ok(())
    }

    /// Evaluates `W_ε` and optionally its gradient on a raw Hermitian matrix.
    /// `eps = 0` gives the unperturbed objective; its gradient fails on singular blocks.
    pub fn evaluate(&self, rho: &CMat, eps: f64, want_grad: bool) -> Result<(f64, Option<CMat>)> {
        let d = self.dim;
        let df = d as f64;
        let er = eigh(rho);
        let t_rho = er.values.iter().sum::<f64>();
        let mut value = 0.0;
        let mut diag_w = vec![0.0; d];
        let mut grad = if want_grad { Some(CMat::zeros(d, d)) } else { None };
        let terms = self
            .blocks
            .iter()
            .map(|b| (&b.factor, -1.0))
            .chain(self.announce_factors.iter().map(|f| (f, 1.0)));
        for (factor, sign) in terms {
            match factor {
                Factor::Scaled(cc) => {
                    if *cc <= 0.0 {
                        continue;
                    }
                    let ys: Vec<f64> = er
                        .values
                        .iter()
                        .map(|&l| (1.0 - eps) * cc * l.max(0.0) + eps * cc * t_rho / df)
                        .collect();
                    value += -sign * spectrum_entropy(&ys, 0.0, 0, eps);
                    if want_grad {
                        let logs = safe_logs(&ys, eps)?;
                        let mean = logs.iter().sum::<f64>() / df;
                        for i in 0..d {
                            diag_w[i] += sign * cc * ((1.0 - eps) * logs[i] + eps * mean);
                        }
                    }
                }
                Factor::LowRank { u, mu } => {
                    let r = mu.len();
                    let sq: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
                    let mut us = u.clone();
                    for j in 0..r {
                        us.column_mut(j).iter_mut().for_each(|z| *z *= sq[j]);
                    }
                    let bmat = hermitize(&(us.adjoint() * rho * &us));
                    let eb = eigh(&bmat);
                    let t = eb.values.iter().map(|v| v.max(0.0)).sum::<f64>();
                    let floor = eps * t / df;
                    let ys: Vec<f64> =
                        eb.values.iter().map(|&b| (1.0 - eps) * b.max(0.0) + floor).collect();
                    let tail = d - r;
                    value += -sign * spectrum_entropy(&ys, floor, tail, eps);
                    if want_grad {
                        let logs = safe_logs(&ys, eps)?;
                        let tail_log = if eps > 0.0 && tail > 0 {
                            safe_logs(&[floor], eps)?[0]
                        } else {
                            0.0
                        };
                        let mean =
                            (logs.iter().sum::<f64>() + tail as f64 * tail_log) / df;
                        let inner: Vec<f64> =
                            logs.iter().map(|l| (1.0 - eps) * l + eps * mean).collect();
                        let core = crate::linalg::reconstruct(&eb.vectors, &inner);
                        let contrib = &us * core * us.adjoint();
                        if let Some(g) = grad.as_mut() {
                            *g += contrib.map(|z| z * sign);
                        }
                    }
                }
            }
        }
        if let Some(g) = grad.as_mut() {
            *g += crate::linalg::reconstruct(&er.vectors, &diag_w);
            *g = hermitize(g);
        }
        Ok((value, grad))
    }

    /// Objective value only, for line searches.
    pub fn value_raw(&self, rho: &CMat, eps: f64) -> f64 {
        self.evaluate(rho, eps, false).map(|v| v.0).unwrap_or(f64::NAN)
    }

    /// Sum of `-Σ_sp H(K ρ K†) + Σ_p H(K_p ρ K_p†)` evaluated through dense Kraus
    /// operators; slow reference path used by tests.
    pub fn objective_dense(&self, rho: &CMat) -> f64 {
        let mut v = 0.0;
        for k in &self.kraus {
            v += crate::linalg::entropy_of_eigs(&eigh(&(k * rho * k.adjoint())).values);
        }
        for f in &self.announce_factors {
            let k = f.sqrt_dense(self.dim);
            v -= crate::linalg::entropy_of_eigs(&eigh(&(&k * rho * k.adjoint())).values);
        }
        v
    }
}

fn safe_logs(ys: &[f64], eps: f64) -> Result<Vec<f64>> {
    let mx = ys.iter().cloned().fold(0.0, f64::max);
    let cut = crate::linalg::eig_cutoff(mx);
    ys.iter()
        .map(|&y| {
            if eps == 0.0 && y <= cut {
                Err(Error::Singular("conditional state has a zero eigenvalue".into()))
            } else {
                Ok(y.max(f64::MIN_POSITIVE).log2())
            }
        })
        .collect()
}

/// Entropy of `ys` plus `mult` copies of `tail`. The unperturbed path (`eps = 0`)
/// applies the zero cutoff; the perturbed spectrum is strictly positive and summed exactly.
fn spectrum_entropy(ys: &[f64], tail: f64, mult: usize, eps: f64) -> f64 {
    let term = |l: f64| if l > 0.0 { -l * l.log2() } else { 0.0 };
    if eps == 0.0 {
        return crate::linalg::entropy_of_eigs(ys);
    }
    ys.iter().map(|&l| term(l)).sum::<f64>() + mult as f64 * term(tail)
}

/// `W(ρ) = Σ_{s,p} H(K_sp ρ K_sp†) - Σ_p H(K_p ρ K_p†)` in bits.
pub fn objective_w(ch: &TestChannel, rho: &DensityOperator) -> Result<f64> {
    ch.check_state(rho)?;
    Ok(ch.evaluate(rho.matrix(), 0.0, false)?.0)
}

/// Gradient of `W` at a state whose conditional states are nonsingular.
pub fn gradient_w(ch: &TestChannel, rho: &DensityOperator) -> Result<HermitianOperator> {
    ch.check_state(rho)?;
    let g = ch.evaluate(rho.matrix(), 0.0, true)?.1.expect("gradient requested");
    Ok(HermitianOperator::from_hermitian(g))
}

fn check_eps(ch: &TestChannel, eps: f64) -> Result<()> {
    PerturbationBudget::new(ch, eps).map(|_| ())
}

/// Perturbed objective `W_ε` with every Kraus output passed through the depolarizing map.
pub fn objective_w_perturbed(ch: &TestChannel, rho: &DensityOperator, eps: f64) -> Result<f64> {
    ch.check_state(rho)?;
    check_eps(ch, eps)?;
    Ok(ch.evaluate(rho.matrix(), eps, false)?.0)
}

/// Gradient of `W_ε`; finite for every state.
pub fn gradient_w_perturbed(
    ch: &TestChannel,
    rho: &DensityOperator,
    eps: f64,
) -> Result<HermitianOperator> {
    ch.check_state(rho)?;
    check_eps(ch, eps)?;
    let g = ch.evaluate(rho.matrix(), eps, true)?.1.expect("gradient requested");
    Ok(HermitianOperator::from_hermitian(g))
}

/// Prefix marking generation-round announcements.
pub const GEN_PREFIX: &str = "gen:";
/// Prefix marking test-round announcements.
pub const TEST_PREFIX: &str = "test:";

/// Combines generation and test POVMs into the channel with testing probability `γ`.
/// Generation blocks keep Alice's outcome as key and map to `⊥`; test blocks keep
/// the joint outcome `alice,bob` and their test outcome.
pub fn build_full_channel(
    gen_povm: &[GenElement],
    test_povm: &[TestElement],
    gamma: f64,
) -> Result<TestChannel> {
    let dim = test_povm
        .first()
        .map(|e| e.op.dim())
        .or_else(|| gen_povm.first().map(|e| e.op.dim()))
        .ok_or_else(|| Error::Dimension("empty POVMs".into()))?;
    if gen_povm.iter().any(|e| e.op.dim() != dim) || test_povm.iter().any(|e| e.op.dim() != dim) {
        return Err(Error::Dimension("generation and test POVMs act on different spaces".into()));
    }
    let mut elements = Vec::new();
    if gamma < 1.0 {
        for e in gen_povm {
            elements.push(PovmElement {
                s: e.alice.clone(),
                p: format!("{GEN_PREFIX}{}", e.p),
                x: BOT.to_string(),
                op: e.op.scaled(1.0 - gamma),
            });
        }
    }
    for e in test_povm {
        elements.push(PovmElement {
            s: format!("{},{}", e.alice, e.bob),
            p: format!("{TEST_PREFIX}{}", e.p),
            x: e.x.clone(),
            op: e.op.scaled(gamma),
        });
    }
    TestChannel::new(dim, gamma, elements)
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Text serialization: alphabets, `γ`, and each block as a dense row-major matrix of
/// `re,im` pairs at 17 significant digits.
pub fn channel_to_string(ch: &TestChannel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "eat-qkd-channel 1");
    let _ = writeln!(out, "dim {}", ch.dim);
    let _ = writeln!(out, "gamma {}", fmt17(ch.gamma));
    let _ = writeln!(out, "key_alphabet {}", ch.key_alphabet.join(" "));
    let _ = writeln!(out, "announce_alphabet {}", ch.announce_alphabet.join(" "));
    let _ = writeln!(out, "test_alphabet {}", ch.test_alphabet.join(" "));
    let _ = writeln!(out, "blocks {}", ch.blocks.len());
    for b in &ch.blocks {
        let _ = writeln!(
            out,
            "block {} {} {}",
            ch.key_alphabet[b.s], ch.announce_alphabet[b.p], ch.test_alphabet[b.x]
        );
        let m = b.op.matrix();
        for i in 0..ch.dim {
            let row: Vec<String> = (0..ch.dim)
                .map(|j| format!("{},{}", fmt17(m[(i, j)].re), fmt17(m[(i, j)].im)))
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

fn parse_f64(tok: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{tok}'")))
}

/// Parses the format written by [`channel_to_string`].
pub fn channel_from_str(text: &str) -> Result<TestChannel> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse(format!("unexpected end of input, expected {what}")))
    };
    let header = next("header")?;
    if header != "eat-qkd-channel 1" {
        return Err(Error::Parse(format!("unknown header '{header}'")));
    }
    let field = |line: &str, key: &str| -> Result<Vec<String>> {
        let mut it = line.split_whitespace();
        if it.next() != Some(key) {
            return Err(Error::Parse(format!("expected '{key}', found '{line}'")));
        }
        Ok(it.map(String::from).collect())
    };
    let one = |v: Vec<String>, key: &str| -> Result<String> {
        v.into_iter().next().ok_or_else(|| Error::Parse(format!("missing value for {key}")))
    };
    let dim: usize = one(field(next("dim")?, "dim")?, "dim")?
        .parse()
        .map_err(|_| Error::Parse("bad dim".into()))?;
    let gamma = parse_f64(&one(field(next("gamma")?, "gamma")?, "gamma")?)?;
    let keys = field(next("key_alphabet")?, "key_alphabet")?;
    let anns = field(next("announce_alphabet")?, "announce_alphabet")?;
    let tests = field(next("test_alphabet")?, "test_alphabet")?;
    let nb: usize = one(field(next("blocks")?, "blocks")?, "blocks")?
        .parse()
        .map_err(|_| Error::Parse("bad block count".into()))?;
    let mut elements = Vec::with_capacity(nb);
    for _ in 0..nb {
        let lab = field(next("block")?, "block")?;
        if lab.len() != 3 {
            return Err(Error::Parse("block line needs s, p, x".into()));
        }
        let mut m = CMat::zeros(dim, dim);
        for i in 0..dim {
            let row = next("matrix row")?;
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks.len() != dim {
                return Err(Error::Parse(format!("row has {} entries, expected {dim}", toks.len())));
            }
            for (j, t) in toks.iter().enumerate() {
                let (re, im) = t
                    .split_once(',')
                    .ok_or_else(|| Error::Parse(format!("entry '{t}' is not re,im")))?;
                m[(i, j)] = Complex64::new(parse_f64(re)?, parse_f64(im)?);
            }
        }
        elements.push(PovmElement {
            s: lab[0].clone(),
            p: lab[1].clone(),
            x: lab[2].clone(),
            op: HermitianOperator::new(m)?,
        });
    }
    TestChannel::with_alphabets(dim, gamma, elements, keys, anns, tests)
}

pub fn write_channel(ch: &TestChannel, path: &Path) -> Result<()> {
    std::fs::write(path, channel_to_string(ch))
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

pub fn read_channel(path: &Path) -> Result<TestChannel> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    channel_from_str(&text)
}

/// `Re Tr[A ρ]` for each operator.
pub fn expectations(ops: &[HermitianOperator], rho: &CMat) -> Vec<f64> {
    ops.iter().map(|m| trace_prod_re(m.matrix(), rho)).collect()
}
