//! Channel, simulated statistics and sifting parameters for the example protocols:
//! qubit BB84, six-state four-state, two-basis qudit (prime `d`), and BB84 with a
//! parametric downconversion source under the squashing model.

use num_complex::Complex64;

use crate::channel::{build_full_channel, GenElement, TestChannel, TestElement, BOT};
use crate::error::{Error, Result};
use crate::linalg::{
    c, h2, hermitize, kron_mat, CMat, DensityOperator, HermitianOperator,
    ProbabilityVector,
};

/// Protocol family with its noise parameters; `p_z` is supplied at build time.
#[derive(Debug, Clone, PartialEq)]
pub enum Protocol {
    Bb84 { q: f64 },
    SixFour { q: f64, theta: f64 },
    Mub2 { d: usize, q: f64 },
    Pdc(PdcParams),
}

/// Source and detector parameters for the downconversion protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdcParams {
    pub lambda: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub y0_a: f64,
    pub y0_b: f64,
    pub e_d: f64,
}

impl Default for PdcParams {
    fn default() -> Self {
        Self { lambda: 0.1, eta_a: 0.8, eta_b: 0.8, y0_a: 1e-7, y0_b: 1e-7, e_d: 0.01 }
    }
}

/// Fiber loss in dB per km.
pub const FIBER_LOSS_DB_PER_KM: f64 = 0.2;

impl PdcParams {
    /// Detector efficiency `eta_det` with a source at the midpoint of `distance_km` of fiber.
    pub fn at_distance(mut self, eta_det: f64, distance_km: f64, loss_db_per_km: f64) -> Self {
        let t = 10f64.powf(-loss_db_per_km * distance_km / 2.0 / 10.0);
        self.eta_a = eta_det * t;
        self.eta_b = eta_det * t;
        self
    }
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Bb84 { .. } => "bb84",
            Protocol::SixFour { .. } => "sixfour",
            Protocol::Mub2 { .. } => "mub2",
            Protocol::Pdc(_) => "pdc",
        }
    }

    /// Same family with the noise parameter replaced (`e_d` for the PDC source).
    pub fn with_noise(&self, q: f64) -> Protocol {
        match self.clone() {
            Protocol::Bb84 { .. } => Protocol::Bb84 { q },
            Protocol::SixFour { theta, .. } => Protocol::SixFour { q, theta },
            Protocol::Mub2 { d, .. } => Protocol::Mub2 { d, q },
            Protocol::Pdc(p) => Protocol::Pdc(PdcParams { e_d: q, ..p }),
        }
    }

    pub fn build(&self, p_z: f64) -> Result<ProtocolSpec> {
        match self {
            Protocol::Bb84 { q } => bb84(*q, p_z),
            Protocol::SixFour { q, theta } => six_four(*q, *theta, p_z),
            Protocol::Mub2 { d, q } => mub2(*d, *q, p_z),
            Protocol::Pdc(p) => pdc_bb84(p, p_z),
        }
    }
}

/// A fully built protocol instance.
#[derive(Debug, Clone)]
pub struct ProtocolSpec {
    pub protocol: Protocol,
    pub p_z: f64,
    pub gamma: f64,
    pub channel: TestChannel,
    pub rho_sim: DensityOperator,
    /// Expected statistics on `X'` conditioned on a test round.
    pub q_bar: ProbabilityVector,
    /// Per-round `H(Z|Ẑ)` including the probability of a sifted key round.
    pub h_cond: f64,
    /// Probability that a round yields a sifted key bit.
    pub key_fraction: f64,
    /// Error rate of sifted key bits.
    pub key_error_rate: f64,
    pub alice_size: usize,
    pub bob_size: usize,
}

impl ProtocolSpec {
    /// Expected statistics on the full alphabet `X`: `(γ q̄, 1-γ)`.
    pub fn q_bar_full(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.q_bar.entries().iter().map(|q| q * self.gamma).collect();
        v.push(1.0 - self.gamma);
        v
    }

    pub fn d_s(&self) -> usize {
        (self.alice_size + 1) * (self.bob_size + 1)
    }
}

struct Outcome {
    label: String,
    detected: bool,
    op: CMat,
}

struct Basis {
    name: String,
    prob: f64,
    outcomes: Vec<Outcome>,
}

fn projector(v: &[Complex64]) -> CMat {
    let col = nalgebra::DVector::from_column_slice(v);
    hermitize(&(&col * col.adjoint()))
}

fn basis_from_vectors(name: &str, prob: f64, vecs: &[Vec<Complex64>]) -> Basis {
    Basis {
        name: name.into(),
        prob,
        outcomes: vecs
            .iter()
            .enumerate()
            .map(|(i, v)| Outcome { label: i.to_string(), detected: true, op: projector(v) })
            .collect(),
    }
}

struct Layout<'a> {
    alice: &'a [Basis],
    bob: &'a [Basis],
    test_pairs: &'a [(usize, usize)],
    key_pair: (usize, usize),
    announce_detection: bool,
}

/// Assembles the full channel from local measurements; returns it with `γ`.
fn assemble(
    lay: &Layout,
    test_outcome: impl Fn(usize, usize, &Outcome, &Outcome) -> String,
) -> Result<(TestChannel, f64)> {
    let gamma: f64 =
        lay.test_pairs.iter().map(|&(i, j)| lay.alice[i].prob * lay.bob[j].prob).sum();
    let mut gen = Vec::new();
    let mut test = Vec::new();
    for (i, ba) in lay.alice.iter().enumerate() {
        for (j, bb) in lay.bob.iter().enumerate() {
            let w = ba.prob * bb.prob;
            if w == 0.0 {
                continue;
            }
            let is_test = lay.test_pairs.contains(&(i, j));
            for oa in &ba.outcomes {
                for ob in &bb.outcomes {
                    let mut p = format!("{}{}", ba.name, bb.name);
                    if lay.announce_detection {
                        let flag = |d: bool| if d { 'd' } else { 'n' };
                        p.push(flag(oa.detected));
                        p.push(flag(ob.detected));
                    }
                    let label = |o: &Outcome| {
                        if o.detected { o.label.clone() } else { BOT.to_string() }
                    };
                    if is_test {
                        let op = kron_mat(&oa.op, &ob.op).map(|z| z * (w / gamma));
                        test.push(TestElement {
                            alice: label(oa),
                            bob: label(ob),
                            p,
                            x: test_outcome(i, j, oa, ob),
                            op: HermitianOperator::from_hermitian(op),
                        });
                    } else {
                        let op = kron_mat(&oa.op, &ob.op).map(|z| z * (w / (1.0 - gamma)));
                        let key = (i, j) == lay.key_pair && oa.detected && ob.detected;
                        gen.push(GenElement {
                            alice: if key { oa.label.clone() } else { BOT.to_string() },
                            bob: label(ob),
                            p,
                            op: HermitianOperator::from_hermitian(op),
                        });
                    }
                }
            }
        }
    }
    Ok((build_full_channel(&gen, &test, gamma)?, gamma))
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::Parameter(format!("{name} = {v} must lie in (0,1)")));
    }
    Ok(())
}

fn qubit_bases() -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let s = 1.0 / 2f64.sqrt();
    let z = vec![vec![c(1.0), c(0.0)], vec![c(0.0), c(1.0)]];
    let x = vec![vec![c(s), c(s)], vec![c(s), c(-s)]];
    let y = vec![
        vec![c(s), Complex64::new(0.0, s)],
        vec![c(s), Complex64::new(0.0, -s)],
    ];
    (z, x, y)
}

fn bell_states() -> [Vec<Complex64>; 4] {
    let s = 1.0 / 2f64.sqrt();
    [
        vec![c(s), c(0.0), c(0.0), c(s)],
        vec![c(s), c(0.0), c(0.0), c(-s)],
        vec![c(0.0), c(s), c(s), c(0.0)],
        vec![c(0.0), c(s), c(-s), c(0.0)],
    ]
}

/// `(1 - 3Q/2) Φ⁺ + (Q/2)(Φ⁻ + Ψ⁺ + Ψ⁻)`.
pub fn depolarized_bell(q: f64) -> DensityOperator {
    let b = bell_states();
    let w = [1.0 - 1.5 * q, q / 2.0, q / 2.0, q / 2.0];
    let mut m = CMat::zeros(4, 4);
    for (v, wi) in b.iter().zip(w) {
        m += projector(v).map(|z| z * wi);
    }
    DensityOperator::state(HermitianOperator::from_hermitian(m)).expect("Bell mixture is a state")
}

fn finish(
    protocol: Protocol,
    p_z: f64,
    gamma: f64,
    channel: TestChannel,
    rho_sim: DensityOperator,
    key_error_rate: f64,
    key_error_entropy: f64,
    key_fraction: f64,
    sizes: (usize, usize),
) -> Result<ProtocolSpec> {
    let q = channel.crossover_statistics(&rho_sim);
    let q = q.into_iter().map(|v| if v.abs() < 1e-15 { 0.0 } else { v }).collect();
    Ok(ProtocolSpec {
        protocol,
        p_z,
        gamma,
        channel,
        rho_sim,
        q_bar: ProbabilityVector::new(q)?,
        h_cond: key_fraction * key_error_entropy,
        key_fraction,
        key_error_rate,
        alice_size: sizes.0,
        bob_size: sizes.1,
    })
}

/// Qubit BB84 with depolarizing noise `Q`, key from ZZ rounds and testing in XX.
pub fn bb84(q: f64, p_z: f64) -> Result<ProtocolSpec> {
    if !(0.0..=2.0 / 3.0).contains(&q) {
        return Err(Error::Parameter(format!("error rate {q} outside [0, 2/3]")));
    }
    check_unit("p_z", p_z)?;
    let (z, x, _) = qubit_bases();
    let alice = [basis_from_vectors("Z", p_z, &z), basis_from_vectors("X", 1.0 - p_z, &x)];
    let bob = [basis_from_vectors("Z", p_z, &z), basis_from_vectors("X", 1.0 - p_z, &x)];
    let lay = Layout {
        alice: &alice,
        bob: &bob,
        test_pairs: &[(1, 1)],
        key_pair: (0, 0),
        announce_detection: false,
    };
    let (ch, gamma) = assemble(&lay, |_, _, a, b| err_label(a.label != b.label))?;
    finish(Protocol::Bb84 { q }, p_z, gamma, ch, depolarized_bell(q), q, h2(q), p_z * p_z, (2, 2))
}

fn err_label(err: bool) -> String {
    if err { "err".into() } else { "ok".into() }
}

/// Six-state four-state protocol: Alice measures Z/X/Y, Bob Z/X; Bob's half of the
/// depolarized Bell state is rotated by `exp(iθσ_Z)`.
pub fn six_four(q: f64, theta: f64, p_z: f64) -> Result<ProtocolSpec> {
    if !(0.0..=2.0 / 3.0).contains(&q) {
        return Err(Error::Parameter(format!("error rate {q} outside [0, 2/3]")));
    }
    check_unit("p_z", p_z)?;
    let (z, x, y) = qubit_bases();
    let half = (1.0 - p_z) / 2.0;
    let alice = [
        basis_from_vectors("Z", p_z, &z),
        basis_from_vectors("X", half, &x),
        basis_from_vectors("Y", half, &y),
    ];
    let bob = [basis_from_vectors("Z", p_z, &z), basis_from_vectors("X", 1.0 - p_z, &x)];
    let lay = Layout {
        alice: &alice,
        bob: &bob,
        test_pairs: &[(1, 1), (2, 1)],
        key_pair: (0, 0),
        announce_detection: false,
    };
    let (ch, gamma) = assemble(&lay, |i, _, a, b| {
        let pair = if i == 1 { "XX" } else { "YX" };
        format!("{pair}:{}", err_label(a.label != b.label))
    })?;
    let mut u = CMat::zeros(4, 4);
    let rot = [Complex64::new(0.0, theta).exp(), Complex64::new(0.0, -theta).exp()];
    for a in 0..2 {
        for b in 0..2 {
            u[(2 * a + b, 2 * a + b)] = rot[b];
        }
    }
    let dp = depolarized_bell(q);
    let rho = DensityOperator::state(HermitianOperator::from_hermitian(
        &u * dp.matrix() * u.adjoint(),
    ))?;
    finish(Protocol::SixFour { q, theta }, p_z, gamma, ch, rho, q, h2(q), p_z * p_z, (2, 2))
}

fn is_prime(d: usize) -> bool {
    d >= 2 && (2..d).take_while(|k| k * k <= d).all(|k| d % k != 0)
}

/// Generalized Bell weights `λ_jk` from per-basis error vectors `(1-Q, Q/(d-1), …)`.
pub fn mub_bell_weights(d: usize, q: f64) -> Vec<Vec<f64>> {
    let qv = |e: usize| if e == 0 { 1.0 - q } else { q / (d as f64 - 1.0) };
    (0..d)
        .map(|j| {
            (0..d)
                .map(|k| {
                    let s: f64 = (0..d).map(|s| qv((s * j + d * d - k) % d)).sum();
                    (s + qv(j) - 1.0) / d as f64
                })
                .collect()
        })
        .collect()
}

/// Two-basis protocol on a pair of qudits of prime dimension `d`.
pub fn mub2(d: usize, q: f64, p_z: f64) -> Result<ProtocolSpec> {
    if !is_prime(d) {
        return Err(Error::Parameter(format!("dimension {d} is not prime")));
    }
    let df = d as f64;
    if !(0.0..=(df - 1.0) / df).contains(&q) {
        return Err(Error::Parameter(format!("error rate {q} outside [0, (d-1)/d]")));
    }
    check_unit("p_z", p_z)?;
    let omega = |k: usize| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k % d) as f64 / df);
    let inv = 1.0 / df.sqrt();
    let zb: Vec<Vec<Complex64>> =
        (0..d).map(|a| (0..d).map(|s| c(if s == a { 1.0 } else { 0.0 })).collect()).collect();
    // Alice's X basis ψ_j = Σ_s ω^{-js} |s⟩/√d; Bob uses the complex conjugate basis.
    let xa: Vec<Vec<Complex64>> = (0..d)
        .map(|j| (0..d).map(|s| omega(d * d - (j * s) % d) * inv).collect())
        .collect();
    let xb: Vec<Vec<Complex64>> =
        xa.iter().map(|v| v.iter().map(|z| z.conj()).collect()).collect();
    let alice = [basis_from_vectors("Z", p_z, &zb), basis_from_vectors("X", 1.0 - p_z, &xa)];
    let bob = [basis_from_vectors("Z", p_z, &zb), basis_from_vectors("X", 1.0 - p_z, &xb)];
    let lay = Layout {
        alice: &alice,
        bob: &bob,
        test_pairs: &[(1, 1)],
        key_pair: (0, 0),
        announce_detection: false,
    };
    let (ch, gamma) = assemble(&lay, |_, _, a, b| format!("{}{}", a.label, b.label))?;
    // Φ_jk = (I ⊗ X^j Z^k) Φ_00 with X|s⟩ = |s+1⟩ and Z|s⟩ = ω^s |s⟩.
    let lam = mub_bell_weights(d, q);
    let mut m = CMat::zeros(d * d, d * d);
    for (j, row) in lam.iter().enumerate() {
        for (k, &l) in row.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            let mut v = vec![c(0.0); d * d];
            for s in 0..d {
                let b = (s + j) % d;
                v[s * d + b] = omega(k * s) * inv;
            }
            m += projector(&v).map(|z| z * l);
        }
    }
    let rho = DensityOperator::state(HermitianOperator::from_hermitian(m))?;
    let ent = if q > 0.0 { -(1.0 - q) * (1.0 - q).log2() - q * (q / (df - 1.0)).log2() } else { 0.0 };
    finish(Protocol::Mub2 { d, q }, p_z, gamma, ch, rho, q, ent, p_z * p_z, (d, d))
}

/// Gain `Q_λ` and error-weighted gain `E_λ Q_λ` of a downconversion source.
pub fn pdc_gain_error(p: &PdcParams) -> (f64, f64) {
    let (l, ea, eb) = (p.lambda, p.eta_a, p.eta_b);
    let da = 1.0 + ea * l;
    let db = 1.0 + eb * l;
    let dab = 1.0 + ea * l + eb * l - ea * eb * l;
    let gain = 1.0 - (1.0 - p.y0_a) / (da * da) - (1.0 - p.y0_b) / (db * db)
        + (1.0 - p.y0_a) * (1.0 - p.y0_b) / (dab * dab);
    let e0 = 0.5;
    let eq = e0 * gain - 2.0 * (e0 - p.e_d) * ea * eb * l * (1.0 + l) / (da * db * dab);
    (gain, eq)
}

/// BB84 with a downconversion source; each party holds vacuum ⊕ qubit and announces
/// whether it detected a photon.
pub fn pdc_bb84(p: &PdcParams, p_z: f64) -> Result<ProtocolSpec> {
    if !(p.lambda > 0.0) {
        return Err(Error::Parameter("mean pair number must be positive".into()));
    }
    for (name, v) in [
        ("eta_a", p.eta_a),
        ("eta_b", p.eta_b),
        ("y0_a", p.y0_a),
        ("y0_b", p.y0_b),
        ("e_d", p.e_d),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("{name} = {v} outside [0,1]")));
        }
    }
    check_unit("p_z", p_z)?;
    let (gain, eq) = pdc_gain_error(p);
    if !(gain > 0.0 && gain <= 1.0 && eq >= 0.0 && eq <= gain) {
        return Err(Error::Parameter(format!("unphysical gain {gain} / error {eq}")));
    }
    let e = eq / gain;
    let (z, x, _) = qubit_bases();
    let embed = |v: &Vec<Complex64>| vec![c(0.0), v[0], v[1]];
    let vac = vec![c(1.0), c(0.0), c(0.0)];
    let party_basis = |name: &str, prob: f64, vecs: &[Vec<Complex64>]| {
        let mut outcomes = vec![Outcome { label: "nd".into(), detected: false, op: projector(&vac) }];
        for (i, v) in vecs.iter().enumerate() {
            outcomes.push(Outcome { label: i.to_string(), detected: true, op: projector(&embed(v)) });
        }
        Basis { name: name.into(), prob, outcomes }
    };
    let alice = [party_basis("Z", p_z, &z), party_basis("X", 1.0 - p_z, &x)];
    let bob = [party_basis("Z", p_z, &z), party_basis("X", 1.0 - p_z, &x)];
    let lay = Layout {
        alice: &alice,
        bob: &bob,
        test_pairs: &[(1, 1)],
        key_pair: (0, 0),
        announce_detection: true,
    };
    let (ch, gamma) = assemble(&lay, |_, _, a, b| {
        if a.detected && b.detected { err_label(a.label != b.label) } else { "nodet".into() }
    })?;
    let dp = depolarized_bell(e);
    let mut m = CMat::zeros(9, 9);
    let idx = |a: usize, b: usize| 3 * (a + 1) + (b + 1);
    for a in 0..2 {
        for b in 0..2 {
            for a2 in 0..2 {
                for b2 in 0..2 {
                    m[(idx(a, b), idx(a2, b2))] = dp.matrix()[(2 * a + b, 2 * a2 + b2)] * gain;
                }
            }
        }
    }
    m[(0, 0)] = c(1.0 - gain);
    let rho = DensityOperator::state(HermitianOperator::from_hermitian(m))?;
    finish(Protocol::Pdc(*p), p_z, gamma, ch, rho, e, h2(e), p_z * p_z * gain, (2, 2))
}

/// `γ = 10^{-k}` grid: `k ∈ [2,4]` step 0.1 below `n = 10^10`, else `k ∈ [3,7]` step 0.2.
pub fn gamma_grid(n: f64) -> Vec<f64> {
    let (lo, hi, step): (f64, f64, f64) = if n < 1e10 { (2.0, 4.0, 0.1) } else { (3.0, 7.0, 0.2) };
    let count = ((hi - lo) / step).round() as usize + 1;
    (0..count).map(|i| 10f64.powf(-(lo + step * i as f64))).collect()
}

/// `p_z` with `γ = (1 - p_z)^2`.
pub fn p_z_for_gamma(gamma: f64) -> f64 {
    1.0 - gamma.sqrt()
}

/// Algorithm-1 linearization noise grid `Q ∈ [0.005, 0.07]` step 0.005.
pub fn noise_grid() -> Vec<f64> {
    (1..=14).map(|i| 0.005 * i as f64).collect()
}

/// Enumerates `(p_z, q₀ noise)` candidates in deterministic order.
pub fn scan_parameters(n: f64, with_noise_grid: bool) -> Vec<(f64, Option<f64>)> {
    let mut out = Vec::new();
    for g in gamma_grid(n) {
        let pz = p_z_for_gamma(g);
        if with_noise_grid {
            out.extend(noise_grid().into_iter().map(|q| (pz, Some(q))));
        } else {
            out.push((pz, None));
        }
    }
    out
}

/// The seeded-basis counterexample partner: announcing an X outcome while keying in Z.
pub fn x_announcement_counterexample() -> Vec<crate::channel::PovmElement> {
    let (z, x, _) = qubit_bases();
    let mut els = Vec::new();
    for (i, v) in x.iter().enumerate() {
        els.push(crate::channel::PovmElement {
            s: BOT.into(),
            p: format!("x{i}"),
            x: BOT.into(),
            op: HermitianOperator::from_hermitian(projector(v).map(|w| w * 0.5)),
        });
    }
    for (i, v) in z.iter().enumerate() {
        els.push(crate::channel::PovmElement {
            s: i.to_string(),
            p: "z".into(),
            x: BOT.into(),
            op: HermitianOperator::from_hermitian(projector(v).map(|w| w * 0.5)),
        });
    }
    els
}
