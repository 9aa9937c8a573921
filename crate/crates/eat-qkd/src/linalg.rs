//! Dense complex Hermitian linear algebra and entropy primitives.
//!
//! All logarithms are base 2.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;
/// Dense real matrix.
pub type RMat = DMatrix<f64>;

/// Relative Frobenius tolerance for Hermiticity.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL` count as nonnegative for states.
pub const PSD_TOL: f64 = 1e-10;
/// Trace tolerance for states.
pub const TRACE_TOL: f64 = 1e-10;
/// Negative eigenvalues below this are rejected by entropy evaluation.
pub const NEG_EIG_REJECT: f64 = 1e-8;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Zero cutoff for `0 log 0`: relative to the largest eigenvalue, floor 1.
pub fn eig_cutoff(max_eig: f64) -> f64 {
    1e-12 * max_eig.max(1.0)
}

pub fn scale(m: &CMat, a: f64) -> CMat {
    m.map(|z| z * a)
}

/// `(X + X†)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    let mut out = m + m.adjoint();
    out.iter_mut().for_each(|z| *z *= 0.5);
    out
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn trace_re(m: &CMat) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// `Re Tr[A B]` without forming the product.
pub fn trace_prod_re(a: &CMat, b: &CMat) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

pub fn frob(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigh {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `V diag(f(λ)) V†`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let w: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        reconstruct(&self.vectors, &w)
    }
}

/// `V diag(w) V†`, Hermitian by construction.
pub fn reconstruct(v: &CMat, w: &[f64]) -> CMat {
    let mut vw = v.clone();
    for (j, &wj) in w.iter().enumerate() {
        vw.column_mut(j).iter_mut().for_each(|z| *z *= wj);
    }
    hermitize(&(vw * v.adjoint()))
}

pub fn eigh(m: &CMat) -> Eigh {
    let d = m.nrows();
    if d == 0 {
        return Eigh { values: vec![], vectors: CMat::zeros(0, 0) };
    }
    let h = hermitize(m);
    let (values, vectors) = if h.iter().all(|z| z.im == 0.0) {
        let (w, v) = eigh_real(&h.map(|z| z.re));
        (w, v.map(c))
    } else {
        let fm = faer::Mat::<faer::complex_native::c64>::from_fn(d, d, |i, j| {
            let z = h[(i, j)];
            faer::complex_native::c64::new(z.re, z.im)
        });
        let e = fm.selfadjoint_eigendecomposition(faer::Side::Lower);
        let (s, u) = (e.s().column_vector(), e.u());
        let values = (0..d).map(|i| s.read(i).re).collect();
        let vectors = CMat::from_fn(d, d, |i, j| {
            let z = u.read(i, j);
            Complex64::new(z.re, z.im)
        });
        (values, vectors)
    };
    Eigh { values, vectors }
}

/// Symmetric eigendecomposition of a real matrix: ascending values and their vectors.
pub fn eigh_real(m: &RMat) -> (Vec<f64>, RMat) {
    let d = m.nrows();
    if d == 0 {
        return (vec![], RMat::zeros(0, 0));
    }
    let fm = faer::Mat::<f64>::from_fn(d, d, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let e = fm.selfadjoint_eigendecomposition(faer::Side::Lower);
    let (s, u) = (e.s().column_vector(), e.u());
    ((0..d).map(|i| s.read(i)).collect(), RMat::from_fn(d, d, |i, j| u.read(i, j)))
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn lambda_max(m: &CMat) -> f64 {
    eigh(m).max()
}

/// `-Σ λ log2 λ` over eigenvalues above the cutoff.
pub fn entropy_of_eigs(vals: &[f64]) -> f64 {
    let mx = vals.iter().cloned().fold(0.0, f64::max);
    let cut = eig_cutoff(mx);
    vals.iter().filter(|&&l| l > cut).map(|&l| -l * l.log2()).sum()
}

/// Check Hermiticity within [`HERMITIAN_TOL`] relative Frobenius norm.
pub fn check_hermitian(m: &CMat) -> Result<()> {
    if !m.is_square() {
        return Err(Error::InvalidOperator("matrix is not square".into()));
    }
    let dev = frob(&(m - m.adjoint()));
    let nrm = frob(m).max(1.0);
    if dev > HERMITIAN_TOL * nrm * 2.0 {
        return Err(Error::InvalidOperator(format!("not Hermitian (deviation {dev:.3e})")));
    }
    Ok(())
}

/// Complex Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    m: CMat,
}

impl HermitianOperator {
    /// Validates Hermiticity and scrubs the anti-Hermitian roundoff.
    pub fn new(m: CMat) -> Result<Self> {
        check_hermitian(&m)?;
        Ok(Self { m: hermitize(&m) })
    }

    /// Wraps a matrix that is Hermitian by construction, symmetrizing it.
    pub fn from_hermitian(m: CMat) -> Self {
        Self { m: hermitize(&m) }
    }

    pub fn identity(d: usize) -> Self {
        Self { m: identity(d) }
    }

    pub fn projector(v: &[Complex64]) -> Self {
        let col = nalgebra::DVector::from_column_slice(v);
        Self::from_hermitian(&col * col.adjoint())
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = CMat::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = c(x);
        }
        Self { m }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn eigh(&self) -> Eigh {
        eigh(&self.m)
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.m)
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { m: scale(&self.m, a) }
    }

    /// `Re Tr[self · other]`.
    pub fn inner(&self, other: &HermitianOperator) -> f64 {
        trace_prod_re(&self.m, &other.m)
    }

    pub fn add(&self, other: &HermitianOperator) -> Self {
        Self { m: &self.m + &other.m }
    }

    pub fn sub(&self, other: &HermitianOperator) -> Self {
        Self { m: &self.m - &other.m }
    }

    /// `K X K†` followed by symmetrization.
    pub fn conjugate_by(&self, k: &CMat) -> Self {
        Self::from_hermitian(k * &self.m * k.adjoint())
    }

    /// Check positive semidefiniteness with absolute tolerance `tol`.
    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigh().min() >= -tol
    }
}

/// Positive semidefinite operator with a declared trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
    trace: f64,
}

impl DensityOperator {
    /// Validates PSD and trace within [`PSD_TOL`] and [`TRACE_TOL`].
    pub fn new(op: HermitianOperator, trace: f64) -> Result<Self> {
        let e = op.eigh();
        if e.min() < -PSD_TOL {
            return Err(Error::InvalidOperator(format!("negative eigenvalue {:.3e}", e.min())));
        }
        let t = op.trace();
        if (t - trace).abs() > TRACE_TOL {
            return Err(Error::InvalidOperator(format!("trace {t} differs from declared {trace}")));
        }
        Ok(Self { op, trace })
    }

    /// Unit-trace state.
    pub fn state(op: HermitianOperator) -> Result<Self> {
        Self::new(op, 1.0)
    }

    /// Normalizes a PSD matrix to unit trace.
    pub fn normalized(m: CMat) -> Result<Self> {
        let op = HermitianOperator::new(m)?;
        let t = op.trace();
        if t <= 0.0 {
            return Err(Error::InvalidOperator("nonpositive trace".into()));
        }
        Self::state(op.scaled(1.0 / t))
    }

    pub fn pure(v: &[Complex64]) -> Result<Self> {
        Self::normalized(HermitianOperator::projector(v).into_matrix())
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { op: HermitianOperator::identity(d).scaled(1.0 / d as f64), trace: 1.0 }
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }
}

/// Probability distribution over a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector {
    entries: Vec<f64>,
}

impl ProbabilityVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if let Some(x) = entries.iter().find(|&&x| !(x >= -1e-12)) {
            return Err(Error::Parameter(format!("negative probability {x}")));
        }
        let s: f64 = entries.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(Error::Parameter(format!("probabilities sum to {s}")));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Von Neumann entropy in bits of a possibly subnormalized PSD operator.
pub fn von_neumann_entropy(x: &HermitianOperator) -> Result<f64> {
    let e = x.eigh();
    if e.min() < -NEG_EIG_REJECT {
        return Err(Error::InvalidOperator(format!("negative eigenvalue {:.3e}", e.min())));
    }
    Ok(entropy_of_eigs(&e.values))
}

/// `(1-p) ρ + p Tr(ρ) I/d`.
pub fn depolarize(rho: &DensityOperator, p: f64) -> Result<DensityOperator> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Parameter(format!("depolarizing probability {p} outside [0,1]")));
    }
    let m = depolarize_mat(rho.matrix(), p);
    Ok(DensityOperator { op: HermitianOperator::from_hermitian(m), trace: rho.trace() })
}

/// Depolarizing map on a raw matrix; self-adjoint under the trace inner product.
pub fn depolarize_mat(x: &CMat, p: f64) -> CMat {
    let d = x.nrows();
    let t = trace_re(x);
    let mut out = scale(x, 1.0 - p);
    for i in 0..d {
        out[(i, i)] += c(p * t / d as f64);
    }
    out
}

/// `-γ log2 γ - (1-γ) log2 (1-γ)`.
pub fn binary_entropy(g: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::Parameter(format!("binary entropy argument {g} outside [0,1]")));
    }
    Ok(h2(g))
}

/// Unchecked binary entropy.
pub fn h2(g: f64) -> f64 {
    let t = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    t(g) + t(1.0 - g)
}

pub fn kron(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator { m: a.matrix().kronecker(b.matrix()) }
}

pub fn kron_mat(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Haar-random unit vector.
pub fn random_unit_vector<R: Rng>(rng: &mut R, d: usize) -> Vec<Complex64> {
    let v: Vec<Complex64> = (0..d)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

/// Random full-rank state from the Ginibre ensemble.
pub fn random_mixed_state<R: Rng>(rng: &mut R, d: usize) -> DensityOperator {
    let g = CMat::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    DensityOperator::normalized(&g * g.adjoint()).expect("Ginibre matrix is PSD")
}

/// Random state of a given kind: pure, Ginibre, or a pure state depolarized by a random amount.
pub fn random_state<R: Rng>(rng: &mut R, d: usize, kind: usize) -> DensityOperator {
    match kind % 3 {
        0 => DensityOperator::pure(&random_unit_vector(rng, d)).expect("unit vector"),
        1 => random_mixed_state(rng, d),
        _ => {
            let p: f64 = rng.gen::<f64>();
            let psi = DensityOperator::pure(&random_unit_vector(rng, d)).expect("unit vector");
            depolarize(&psi, p).expect("p in range")
        }
    }
}

/// Random traceless Hermitian direction with unit Frobenius norm.
pub fn random_traceless_hermitian<R: Rng>(rng: &mut R, d: usize) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let mut h = hermitize(&g);
    let t = trace_re(&h) / d as f64;
    for i in 0..d {
        h[(i, i)] -= c(t);
    }
    let n = frob(&h);
    scale(&h, 1.0 / n)
}

/// Real embedding `[[Re A, -Im A], [Im A, Re A]]`.
pub fn real_embed(a: &CMat) -> RMat {
    let d = a.nrows();
    RMat::from_fn(2 * d, 2 * d, |i, j| {
        let (bi, ii) = (i / d, i % d);
        let (bj, jj) = (j / d, j % d);
        let z = a[(ii, jj)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

/// Inverse of the embedding for a (not necessarily structured) PSD `X`:
/// `(X11 + X22) + i (X21 - X12)`, which maps `real_embed(ρ)/2` back to `ρ`.
pub fn real_unembed(x: &RMat) -> CMat {
    let d = x.nrows() / 2;
    let m = CMat::from_fn(d, d, |i, j| {
        Complex64::new(x[(i, j)] + x[(i + d, j + d)], x[(i + d, j)] - x[(i, j + d)])
    });
    hermitize(&m)
}
