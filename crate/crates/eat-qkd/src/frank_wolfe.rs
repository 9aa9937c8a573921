//! Frank-Wolfe (conditional gradient) minimization over spectraplex slices, with a
//! linear minimization oracle solved as an SDP and a certified duality gap.

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, hermitize, real_embed, scale, trace_prod_re, CMat, DensityOperator, HermitianOperator,
};
use crate::sdp::{solve_std, IpmOptions, Mat, Row, SdpStatus, StdProblem};

/// Iterate: a Hermitian matrix plus auxiliary real coordinates.
#[derive(Debug, Clone)]
pub struct FwPoint {
    pub rho: CMat,
    pub aux: Vec<f64>,
}

impl FwPoint {
    pub fn state(rho: CMat) -> Self {
        Self { rho, aux: vec![] }
    }

    fn lerp(&self, other: &FwPoint, t: f64) -> FwPoint {
        FwPoint {
            rho: &self.rho * num_complex::Complex64::new(1.0 - t, 0.0)
                + &other.rho * num_complex::Complex64::new(t, 0.0),
            aux: self.aux.iter().zip(&other.aux).map(|(a, b)| (1.0 - t) * a + t * b).collect(),
        }
    }
}

/// Gradient with the same layout as [`FwPoint`].
#[derive(Debug, Clone)]
pub struct FwGrad {
    pub rho: CMat,
    pub aux: Vec<f64>,
}

impl FwGrad {
    pub fn pair(&self, x: &FwPoint) -> f64 {
        trace_prod_re(&self.rho, &x.rho) + self.aux.iter().zip(&x.aux).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Vertex returned by a linear minimization oracle with a lower bound on `min <g, s>`.
#[derive(Debug, Clone)]
pub struct LmoResult {
    pub vertex: FwPoint,
    pub lower_bound: f64,
}

/// Smooth convex problem over a compact convex set.
pub trait FwProblem {
    fn value(&self, x: &FwPoint) -> f64;
    fn gradient(&self, x: &FwPoint) -> Result<FwGrad>;
    /// Minimizes `<g, s>` over the feasible set; `rel_tol` is the requested accuracy.
    fn lmo(&self, g: &FwGrad, rel_tol: f64) -> Result<LmoResult>;
}

#[derive(Debug, Clone, Copy)]
pub struct FwOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FwOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_iter: 500 }
    }
}

/// One row of the optional iteration trace.
#[derive(Debug, Clone, Copy)]
pub struct FwTraceRow {
    pub iteration: usize,
    pub value: f64,
    pub gap: f64,
}

#[derive(Debug, Clone)]
pub struct FwResult {
    pub point: FwPoint,
    pub value: f64,
    /// Certified bound on `value - min`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<FwTraceRow>,
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Minimizes a unimodal function on `[lo, hi]`; returns the argument and value.
pub fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..80 {
        if b - a < 1e-12 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

/// Runs away-step Frank-Wolfe from a feasible `x0` until the certified gap drops below
/// `opts.tol`. The iterate is kept as a convex combination of `x0` and oracle vertices.
pub fn frank_wolfe(prob: &dyn FwProblem, x0: FwPoint, opts: &FwOptions) -> Result<FwResult> {
    let mut x = x0.clone();
    let mut fx = prob.value(&x);
    if !fx.is_finite() {
        return Err(Error::Numerical("objective not finite at the starting point".into()));
    }
    let mut atoms = vec![x0];
    let mut weights = vec![1.0];
    let mut trace = Vec::new();
    let mut gap = f64::INFINITY;
    let mut rel_tol = 1e-6;
    for k in 0..opts.max_iter {
        let g = prob.gradient(&x)?;
        let lmo = prob.lmo(&g, rel_tol)?;
        let gx = g.pair(&x);
        gap = (gx - lmo.lower_bound).max(0.0);
        trace.push(FwTraceRow { iteration: k, value: fx, gap });
        if gap <= opts.tol {
            return Ok(FwResult { point: x, value: fx, gap, iterations: k, converged: true, trace });
        }
        rel_tol = (0.05 * gap / (1.0 + gx.abs())).clamp(1e-11, 1e-6);
        let s = lmo.vertex;
        let fw_gap = gx - g.pair(&s);
        let (ia, ga) = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (i, g.pair(a)))
            .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        let away_gap = ga - gx;
        let mut moved = false;
        if away_gap > fw_gap && atoms.len() > 1 {
            let alpha = weights[ia];
            let t_max = alpha / (1.0 - alpha);
            let v = atoms[ia].clone();
            let phi = |t: f64| prob.value(&x.lerp(&v, -t));
            let (t, ft) = golden_section(&phi, 0.0, t_max);
            if ft < fx {
                x = x.lerp(&v, -t);
                fx = ft;
                weights.iter_mut().for_each(|w| *w *= 1.0 + t);
                weights[ia] -= t;
                if t >= t_max * (1.0 - 1e-12) {
                    weights[ia] = 0.0;
                }
                moved = true;
            }
        }
        if !moved {
            let phi = |t: f64| prob.value(&x.lerp(&s, t));
            let (t_ls, f_ls) = golden_section(&phi, 0.0, 1.0);
            let (t, ft) = if f_ls <= fx {
                (t_ls, f_ls)
            } else {
                let t2 = 2.0 / (k as f64 + 2.0);
                let f2 = phi(t2);
                if f2 <= fx { (t2, f2) } else { (0.0, fx) }
            };
            if t == 0.0 {
                // No descent along either direction at working precision.
                return Ok(FwResult { point: x, value: fx, gap, iterations: k, converged: false, trace });
            }
            x = x.lerp(&s, t);
            fx = ft;
            weights.iter_mut().for_each(|w| *w *= 1.0 - t);
            atoms.push(s);
            weights.push(t);
        }
        let mut i = 0;
        while i < atoms.len() {
            if weights[i] <= 1e-14 {
                atoms.swap_remove(i);
                weights.swap_remove(i);
            } else {
                i += 1;
            }
        }
    }
    Ok(FwResult { point: x, value: fx, gap, iterations: opts.max_iter, converged: gap <= opts.tol, trace })
}

/// Writes the iteration trace as CSV (`iteration,value,gap`).
pub fn trace_csv(trace: &[FwTraceRow]) -> String {
    let mut s = String::from("iteration,value,gap\n");
    for r in trace {
        s.push_str(&format!("{},{:.16e},{:.16e}\n", r.iteration, r.value, r.gap));
    }
    s
}

/// Linear minimization over `{σ ⪰ 0 : Tr[A_k σ] = b_k}` where the constraints fix the trace to 1.
#[derive(Debug, Clone)]
pub struct SliceLmo {
    dim: usize,
    rows: Vec<Row>,
    b: Vec<f64>,
}

impl SliceLmo {
    pub fn new(constraints: &[(HermitianOperator, f64)]) -> Self {
        let dim = constraints.first().map(|c| c.0.dim()).unwrap_or(0);
        Self {
            dim,
            rows: constraints
                .iter()
                .map(|(a, _)| Row { psd: vec![(0, Mat::from_hermitian(a.matrix()))], lp: vec![] })
                .collect(),
            b: constraints.iter().map(|c| c.1).collect(),
        }
    }

    fn problem(&self, c: &CMat) -> StdProblem {
        StdProblem {
            psd_dims: vec![2 * self.dim],
            lp_dim: 0,
            c_psd: vec![real_embed(c)],
            c_lp: vec![],
            rows: self.rows.clone(),
            b: self.b.clone(),
        }
    }

    /// Solves `min Tr[Cσ]`; returns `σ`, the dual `y`, and a certified lower bound.
    pub fn solve(&self, c: &CMat, rel_tol: f64, ops: &[HermitianOperator]) -> Result<(CMat, Vec<f64>, f64)> {
        let p = self.problem(c);
        let opts = IpmOptions { gap_tol: rel_tol, feas_tol: rel_tol.min(1e-9), ..Default::default() };
        let sol = solve_std(&p, &opts);
        match sol.status {
            SdpStatus::Optimal => {}
            SdpStatus::Infeasible => return Err(Error::Infeasible("statistics not attainable".into())),
            SdpStatus::NumericalTrouble => {
                if !(sol.primal_residual < 1e-7 && (sol.primal_obj - sol.dual_obj).abs() < 1e-5) {
                    return Err(Error::Numerical(format!(
                        "SDP stalled (residual {:.2e}, gap {:.2e})",
                        sol.primal_residual,
                        sol.primal_obj - sol.dual_obj
                    )));
                }
            }
        }
        let sigma = crate::sdp::unembed_primal(&sol.x_psd[0]);
        let lb = certified_bound(c, ops, &sol.y, &self.b);
        Ok((sigma, sol.y, lb))
    }
}

/// Lower bound `b·y + min(0, λ_min(C - Σ y A))` valid over unit-trace feasible states.
pub fn certified_bound(c: &CMat, ops: &[HermitianOperator], y: &[f64], b: &[f64]) -> f64 {
    let mut z = c.clone();
    for (a, &w) in ops.iter().zip(y) {
        z -= scale(a.matrix(), w);
    }
    let lmin = eigh(&hermitize(&z)).min();
    b.iter().zip(y).map(|(bi, yi)| bi * yi).sum::<f64>() + lmin.min(0.0)
}

/// Interior point of `{ρ ⪰ 0 : Tr[M_x ρ] = q₀(x)}`, where `{M_x}` is a complete POVM.
pub fn find_feasible(q0: &crate::linalg::ProbabilityVector, test_povm: &[HermitianOperator]) -> Result<DensityOperator> {
    if q0.len() != test_povm.len() {
        return Err(Error::Dimension(format!(
            "{} statistics for {} POVM elements",
            q0.len(),
            test_povm.len()
        )));
    }
    let d = test_povm[0].dim();
    let cons: Vec<(HermitianOperator, f64)> =
        test_povm.iter().cloned().zip(q0.entries().iter().cloned()).collect();
    let lmo = SliceLmo::new(&cons);
    let p = lmo.problem(&CMat::zeros(d, d));
    let sol = solve_std(&p, &IpmOptions { gap_tol: 1e-12, feas_tol: 1e-12, ..Default::default() });
    if sol.status == SdpStatus::Infeasible {
        return Err(Error::Infeasible("no state reproduces the statistics".into()));
    }
    let rho = crate::sdp::unembed_primal(&sol.x_psd[0]);
    let e = eigh(&rho);
    let clipped: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
    let rho = crate::linalg::reconstruct(&e.vectors, &clipped);
    let resid = test_povm
        .iter()
        .zip(q0.entries())
        .map(|(m, q)| (trace_prod_re(m.matrix(), &rho) - q).abs())
        .fold(0.0, f64::max);
    if resid > 1e-8 {
        return Err(Error::Infeasible(format!("no state reproduces the statistics (residual {resid:.2e})")));
    }
    let t = crate::linalg::trace_re(&rho);
    DensityOperator::state(HermitianOperator::from_hermitian(scale(&rho, 1.0 / t)))
}

/// Unconstrained spectraplex oracle: the minimal eigenvector.
pub fn spectraplex_lmo(g: &CMat) -> (CMat, f64) {
    let e = eigh(g);
    let v = e.vectors.column(0).into_owned();
    (hermitize(&(&v * v.adjoint())), e.min())
}
