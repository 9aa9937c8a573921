//! Small dense SDP solver: infeasible primal-dual path following with the HKM search
//! direction and Mehrotra predictor-corrector steps, over a product of real PSD blocks
//! and one nonnegative-orthant block.
//!
//! Primal: `min <C, X>  s.t.  <A_i, X> = b_i,  X ⪰ 0`.
//! Dual:   `max b·y  s.t.  C - Σ y_i A_i = Z ⪰ 0`.
//!
//! Complex Hermitian problems are mapped to real ones through the embedding
//! `[[Re A, -Im A], [Im A, Re A]]`; see [`solve_sdp`].

use nalgebra::{Cholesky, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, eigh_real, real_embed, real_unembed, CMat, DensityOperator, HermitianOperator, RMat};

/// Constraint coefficient on one PSD block.
#[derive(Debug, Clone)]
pub enum Mat {
    Dense(RMat),
    /// `V diag(w) Vᵀ`.
    Factored { v: RMat, w: Vec<f64> },
}

impl Mat {
    pub fn to_dense(&self) -> RMat {
        match self {
            Mat::Dense(m) => m.clone(),
            Mat::Factored { v, w } => {
                let mut vw = v.clone();
                for (j, wj) in w.iter().enumerate() {
                    vw.column_mut(j).scale_mut(*wj);
                }
                vw * v.transpose()
            }
        }
    }

    /// Chooses a factored form when the rank is at most a quarter of the dimension.
    pub fn from_dense(m: RMat) -> Self {
        let n = m.nrows();
        let (vals, vecs) = eigh_real(&m);
        let mx = vals.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
        let keep: Vec<usize> = (0..n).filter(|&i| vals[i].abs() > 1e-13 * mx).collect();
        if 4 * keep.len() <= n {
            let mut v = RMat::zeros(n, keep.len());
            for (j, &i) in keep.iter().enumerate() {
                v.set_column(j, &vecs.column(i));
            }
            Mat::Factored { v, w: keep.iter().map(|&i| vals[i]).collect() }
        } else {
            Mat::Dense(m)
        }
    }

    /// Real embedding of a complex Hermitian matrix, factored when of low rank.
    pub fn from_hermitian(a: &CMat) -> Self {
        let d = a.nrows();
        let e = eigh(a);
        let mx = e.values.iter().fold(0.0_f64, |x, &y| x.max(y.abs()));
        let keep: Vec<usize> = (0..d).filter(|&i| e.values[i].abs() > 1e-13 * mx).collect();
        if 2 * keep.len() <= d {
            let mut v = RMat::zeros(2 * d, 2 * keep.len());
            let mut w = Vec::with_capacity(2 * keep.len());
            for (j, &i) in keep.iter().enumerate() {
                let col = e.vectors.column(i);
                for r in 0..d {
                    v[(r, 2 * j)] = col[r].re;
                    v[(r + d, 2 * j)] = col[r].im;
                    v[(r, 2 * j + 1)] = -col[r].im;
                    v[(r + d, 2 * j + 1)] = col[r].re;
                }
                w.push(e.values[i]);
                w.push(e.values[i]);
            }
            Mat::Factored { v, w }
        } else {
            Mat::Dense(real_embed(a))
        }
    }

    fn frob_sq(&self) -> f64 {
        match self {
            Mat::Dense(m) => m.norm_squared(),
            Mat::Factored { v, w } => {
                let g = v.transpose() * v;
                let mut s = 0.0;
                for k in 0..w.len() {
                    for l in 0..w.len() {
                        s += w[k] * w[l] * g[(k, l)] * g[(k, l)];
                    }
                }
                s
            }
        }
    }
}

/// One equality constraint `Σ_j <A_ij, X_j> + Σ_k a_k x_k = b`.
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub psd: Vec<(usize, Mat)>,
    pub lp: Vec<(usize, f64)>,
}

/// Standard-form problem over PSD blocks and one LP block.
#[derive(Debug, Clone)]
pub struct StdProblem {
    pub psd_dims: Vec<usize>,
    pub lp_dim: usize,
    pub c_psd: Vec<RMat>,
    pub c_lp: Vec<f64>,
    pub rows: Vec<Row>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
    NumericalTrouble,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub max_iter: usize,
    /// Relative duality gap target.
    pub gap_tol: f64,
    /// Relative primal and dual residual target.
    pub feas_tol: f64,
    pub tau: f64,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self { max_iter: 120, gap_tol: 1e-10, feas_tol: 1e-10, tau: 0.98 }
    }
}

#[derive(Debug, Clone)]
pub struct StdSolution {
    pub x_psd: Vec<RMat>,
    pub x_lp: Vec<f64>,
    pub y: Vec<f64>,
    pub z_psd: Vec<RMat>,
    pub z_lp: Vec<f64>,
    pub status: SdpStatus,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

/// Per-block constraint layout: all factored columns side by side plus dense terms.
struct BlockLayout {
    vall: RMat,
    wall: Vec<f64>,
    owner: Vec<usize>,
    dense: Vec<(usize, RMat)>,
}

struct Prepared<'a> {
    p: &'a StdProblem,
    layouts: Vec<BlockLayout>,
    lp_rows: RMat,
}

fn prepare(p: &StdProblem) -> Prepared<'_> {
    let m = p.rows.len();
    let mut layouts: Vec<BlockLayout> = Vec::new();
    for (j, &n) in p.psd_dims.iter().enumerate() {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        let mut wall = Vec::new();
        let mut owner = Vec::new();
        let mut dense = Vec::new();
        for (i, row) in p.rows.iter().enumerate() {
            for (blk, mat) in &row.psd {
                if *blk != j {
                    continue;
                }
                match mat {
                    Mat::Dense(a) => dense.push((i, a.clone())),
                    Mat::Factored { v, w } => {
                        for k in 0..w.len() {
                            cols.push(v.column(k).into_owned());
                            wall.push(w[k]);
                            owner.push(i);
                        }
                    }
                }
            }
        }
        let vall = if cols.is_empty() { RMat::zeros(n, 0) } else { RMat::from_columns(&cols) };
        layouts.push(BlockLayout { vall, wall, owner, dense });
    }
    let mut lp_rows = RMat::zeros(m, p.lp_dim);
    for (i, row) in p.rows.iter().enumerate() {
        for &(k, a) in &row.lp {
            lp_rows[(i, k)] += a;
        }
    }
    Prepared { p, layouts, lp_rows }
}

fn sym(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

fn dot(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

impl Prepared<'_> {
    fn a_op(&self, xs: &[RMat], xl: &[f64]) -> Vec<f64> {
        let m = self.p.rows.len();
        let mut out = vec![0.0; m];
        for (lay, x) in self.layouts.iter().zip(xs) {
            if lay.vall.ncols() > 0 {
                let xv = x * &lay.vall;
                for k in 0..lay.vall.ncols() {
                    out[lay.owner[k]] += lay.wall[k] * lay.vall.column(k).dot(&xv.column(k));
                }
            }
            for (i, a) in &lay.dense {
                out[*i] += dot(a, x);
            }
        }
        for i in 0..m {
            out[i] += (0..self.p.lp_dim).map(|k| self.lp_rows[(i, k)] * xl[k]).sum::<f64>();
        }
        out
    }

    fn at_op(&self, y: &[f64]) -> (Vec<RMat>, Vec<f64>) {
        let mut mats = Vec::with_capacity(self.layouts.len());
        for (lay, &n) in self.layouts.iter().zip(&self.p.psd_dims) {
            let mut s = RMat::zeros(n, n);
            if lay.vall.ncols() > 0 {
                let mut vw = lay.vall.clone();
                for k in 0..vw.ncols() {
                    vw.column_mut(k).scale_mut(lay.wall[k] * y[lay.owner[k]]);
                }
                s += vw * lay.vall.transpose();
            }
            for (i, a) in &lay.dense {
                s += a * y[*i];
            }
            mats.push(sym(&s));
        }
        let lp = (0..self.p.lp_dim)
            .map(|k| (0..self.p.rows.len()).map(|i| self.lp_rows[(i, k)] * y[i]).sum())
            .collect();
        (mats, lp)
    }

    fn schur(&self, xs: &[RMat], zinv: &[RMat], xl: &[f64], zl: &[f64]) -> RMat {
        let m = self.p.rows.len();
        let mut s = RMat::zeros(m, m);
        for ((lay, x), zi) in self.layouts.iter().zip(xs).zip(zinv) {
            let r = lay.vall.ncols();
            if r > 0 {
                let g1 = lay.vall.transpose() * (x * &lay.vall);
                let g2 = lay.vall.transpose() * (zi * &lay.vall);
                for k in 0..r {
                    for l in 0..r {
                        s[(lay.owner[k], lay.owner[l])] +=
                            lay.wall[k] * lay.wall[l] * g1[(k, l)] * g2[(l, k)];
                    }
                }
            }
            for (idx, (i, a)) in lay.dense.iter().enumerate() {
                let pm = x * a * zi;
                for (i2, a2) in lay.dense.iter().skip(idx) {
                    let v = dot(a2, &pm);
                    s[(*i, *i2)] += v;
                    if idx_ne(*i, *i2) {
                        s[(*i2, *i)] += v;
                    }
                }
                if r > 0 {
                    let pv = &pm * &lay.vall;
                    for l in 0..r {
                        let v = lay.wall[l] * lay.vall.column(l).dot(&pv.column(l));
                        s[(*i, lay.owner[l])] += v;
                        s[(lay.owner[l], *i)] += v;
                    }
                }
            }
        }
        for k in 0..self.p.lp_dim {
            let d = xl[k] / zl[k];
            for i in 0..m {
                let ai = self.lp_rows[(i, k)];
                if ai == 0.0 {
                    continue;
                }
                for i2 in 0..m {
                    s[(i, i2)] += ai * self.lp_rows[(i2, k)] * d;
                }
            }
        }
        sym(&s)
    }
}

fn idx_ne(a: usize, b: usize) -> bool {
    a != b
}

fn max_step(x: &RMat, dx: &RMat) -> Option<f64> {
    let ch = Cholesky::new(x.clone())?;
    let l = ch.l();
    let w = l.solve_lower_triangular(dx)?;
    let w2 = l.solve_lower_triangular(&w.transpose())?;
    let mn = eigh_real(&sym(&w2)).0[0];
    Some(if mn < 0.0 { -1.0 / mn } else { f64::INFINITY })
}

fn max_step_lp(x: &[f64], dx: &[f64]) -> f64 {
    x.iter()
        .zip(dx)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&xi, &d)| -xi / d)
        .fold(f64::INFINITY, f64::min)
}

fn inv_spd(z: &RMat) -> Option<RMat> {
    Cholesky::new(z.clone()).map(|c| sym(&c.inverse()))
}

/// Removes linearly dependent rows. Returns kept row indices, or an error when the
/// dropped rows are inconsistent with the kept ones.
fn independent_rows(p: &StdProblem) -> Result<Vec<usize>> {
    let m = p.rows.len();
    let dense: Vec<(Vec<RMat>, DVector<f64>)> = p
        .rows
        .iter()
        .map(|row| {
            let mut mats: Vec<RMat> = p.psd_dims.iter().map(|&n| RMat::zeros(n, n)).collect();
            for (j, a) in &row.psd {
                mats[*j] += a.to_dense();
            }
            let mut lp = DVector::zeros(p.lp_dim);
            for &(k, a) in &row.lp {
                lp[k] += a;
            }
            (mats, lp)
        })
        .collect();
    let inner = |a: &(Vec<RMat>, DVector<f64>), b: &(Vec<RMat>, DVector<f64>)| -> f64 {
        a.0.iter().zip(&b.0).map(|(x, y)| dot(x, y)).sum::<f64>() + a.1.dot(&b.1)
    };
    let gram = RMat::from_fn(m, m, |i, j| inner(&dense[i], &dense[j]));
    // Greedy Gram-Schmidt in coefficient space.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut kept = Vec::new();
    for i in 0..m {
        let nii = gram[(i, i)];
        if nii <= 1e-300 {
            if p.b[i].abs() > 1e-9 {
                return Err(Error::Infeasible(format!("zero constraint {i} with nonzero rhs")));
            }
            continue;
        }
        let mut coef = DVector::zeros(m);
        coef[i] = 1.0;
        for q in &basis {
            let proj: f64 = (0..m).map(|k| q[k] * gram[(k, i)]).sum();
            coef -= q * proj;
        }
        let nrm2: f64 = {
            let gc = &gram * &coef;
            coef.dot(&gc)
        };
        if nrm2 > 1e-20 * nii {
            basis.push(coef / nrm2.sqrt());
            kept.push(i);
        } else {
            // Dependent: verify consistency of the right-hand side through the Gram system.
            let sub: Vec<usize> = kept.clone();
            let gk = RMat::from_fn(sub.len(), sub.len(), |a, b| gram[(sub[a], sub[b])]);
            let rhs = DVector::from_iterator(sub.len(), sub.iter().map(|&k| gram[(k, i)]));
            if let Some(coefs) = gk.lu().solve(&rhs) {
                let pred: f64 = sub.iter().zip(coefs.iter()).map(|(&k, c)| c * p.b[k]).sum();
                if (pred - p.b[i]).abs() > 1e-7 * (1.0 + p.b[i].abs()) {
                    return Err(Error::Infeasible(format!(
                        "dependent constraint {i} has inconsistent rhs ({pred} vs {})",
                        p.b[i]
                    )));
                }
            }
        }
    }
    Ok(kept)
}

/// Solves a standard-form problem.
pub fn solve_std(p: &StdProblem, opts: &IpmOptions) -> StdSolution {
    let kept = match independent_rows(p) {
        Ok(k) => k,
        Err(_) => return failed(p, SdpStatus::Infeasible),
    };
    if kept.len() == p.rows.len() {
        return solve_reduced(p, opts);
    }
    let reduced = StdProblem {
        psd_dims: p.psd_dims.clone(),
        lp_dim: p.lp_dim,
        c_psd: p.c_psd.clone(),
        c_lp: p.c_lp.clone(),
        rows: kept.iter().map(|&i| p.rows[i].clone()).collect(),
        b: kept.iter().map(|&i| p.b[i]).collect(),
    };
    let mut sol = solve_reduced(&reduced, opts);
    let mut y = vec![0.0; p.rows.len()];
    for (k, &i) in kept.iter().enumerate() {
        y[i] = sol.y[k];
    }
    sol.y = y;
    sol
}

fn failed(p: &StdProblem, status: SdpStatus) -> StdSolution {
    StdSolution {
        x_psd: p.psd_dims.iter().map(|&n| RMat::zeros(n, n)).collect(),
        x_lp: vec![0.0; p.lp_dim],
        y: vec![0.0; p.rows.len()],
        z_psd: p.psd_dims.iter().map(|&n| RMat::zeros(n, n)).collect(),
        z_lp: vec![0.0; p.lp_dim],
        status,
        primal_obj: f64::NAN,
        dual_obj: f64::NAN,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        iterations: 0,
    }
}

/// Primal infeasibility certificate from a diverging dual iterate: a direction `ŷ` with
/// `b·ŷ > 0` and `Aᵀŷ ⪯ 0` (up to roundoff relative to `b·ŷ`).
fn farkas_certificate(pr: &Prepared, p: &StdProblem, y: &[f64]) -> bool {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return false;
    }
    let yh: Vec<f64> = y.iter().map(|v| v / norm).collect();
    let by: f64 = p.b.iter().zip(&yh).map(|(b, v)| b * v).sum();
    if by <= 1e-8 {
        return false;
    }
    let (aty, atyl) = pr.at_op(&yh);
    let tol = 1e-6 * by;
    aty.iter().all(|a| eigh_real(a).0.last().map_or(true, |&l| l <= tol)) && atyl.iter().all(|&v| v <= tol)
}

fn solve_reduced(p: &StdProblem, opts: &IpmOptions) -> StdSolution {
    let pr = prepare(p);
    let m = p.rows.len();
    let nb = p.psd_dims.len();
    let ntot: usize = p.psd_dims.iter().sum::<usize>() + p.lp_dim;

    let row_norms: Vec<f64> = p
        .rows
        .iter()
        .map(|r| {
            (r.psd.iter().map(|(_, a)| a.frob_sq()).sum::<f64>()
                + r.lp.iter().map(|(_, a)| a * a).sum::<f64>())
            .sqrt()
        })
        .collect();
    let bnorm = p.b.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cnorm = (p.c_psd.iter().map(|c| c.norm_squared()).sum::<f64>()
        + p.c_lp.iter().map(|c| c * c).sum::<f64>())
    .sqrt();

    let init = |n: usize| -> (f64, f64) {
        let sn = (n as f64).sqrt();
        let mut xi: f64 = 10.0_f64.max(sn);
        let mut eta: f64 = 10.0_f64.max(sn).max(cnorm);
        for i in 0..m {
            xi = xi.max(sn * (1.0 + p.b[i].abs()) / (1.0 + row_norms[i]));
            eta = eta.max(row_norms[i]);
        }
        (xi, eta)
    };
    let mut xs: Vec<RMat> = Vec::with_capacity(nb);
    let mut zs: Vec<RMat> = Vec::with_capacity(nb);
    for &n in &p.psd_dims {
        let (xi, eta) = init(n);
        xs.push(RMat::identity(n, n) * xi);
        zs.push(RMat::identity(n, n) * eta);
    }
    let (xil, etal) = init(p.lp_dim.max(1));
    let mut xl = vec![xil; p.lp_dim];
    let mut zl = vec![etal; p.lp_dim];
    let mut y = vec![0.0; m];

    let mut status = SdpStatus::NumericalTrouble;
    let mut iters = 0;
    let mut best_inf = f64::INFINITY;
    let mut stall = 0;
    for it in 0..opts.max_iter {
        iters = it;
        let ax = pr.a_op(&xs, &xl);
        let rp: Vec<f64> = (0..m).map(|i| p.b[i] - ax[i]).collect();
        let (aty, atyl) = pr.at_op(&y);
        let rd: Vec<RMat> = (0..nb).map(|j| &p.c_psd[j] - &zs[j] - &aty[j]).collect();
        let rdl: Vec<f64> = (0..p.lp_dim).map(|k| p.c_lp[k] - zl[k] - atyl[k]).collect();
        let pobj = (0..nb).map(|j| dot(&p.c_psd[j], &xs[j])).sum::<f64>()
            + (0..p.lp_dim).map(|k| p.c_lp[k] * xl[k]).sum::<f64>();
        let dobj = (0..m).map(|i| p.b[i] * y[i]).sum::<f64>();
        let xz = (0..nb).map(|j| dot(&xs[j], &zs[j])).sum::<f64>()
            + (0..p.lp_dim).map(|k| xl[k] * zl[k]).sum::<f64>();
        let mu = xz / ntot as f64;
        let pinf = rp.iter().map(|r| r * r).sum::<f64>().sqrt() / (1.0 + bnorm);
        let dinf = (rd.iter().map(|r| r.norm_squared()).sum::<f64>()
            + rdl.iter().map(|r| r * r).sum::<f64>())
        .sqrt()
            / (1.0 + cnorm);
        let relgap = xz.abs().max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
        if pinf <= opts.feas_tol && dinf <= opts.feas_tol && relgap <= opts.gap_tol {
            status = SdpStatus::Optimal;
            break;
        }
        // Infeasibility heuristic: dual objective diverging while primal stays infeasible.
        if pinf > 1e-6 && dobj > 1e10 * (1.0 + cnorm) && dinf < 1e-6 {
            status = SdpStatus::Infeasible;
            break;
        }
        let inf = pinf.max(dinf).max(relgap);
        if inf < 0.5 * best_inf {
            best_inf = inf;
            stall = 0;
        } else {
            stall += 1;
            if stall > 25 {
                break;
            }
        }

        let zinv: Option<Vec<RMat>> = zs.iter().map(inv_spd).collect();
        let Some(zinv) = zinv else { break };
        let schur = pr.schur(&xs, &zinv, &xl, &zl);
        let chol = Cholesky::new(schur.clone());
        let lu = schur.clone().lu();
        let solve = |rhs: &[f64]| -> Option<DVector<f64>> {
            let v = DVector::from_column_slice(rhs);
            match &chol {
                Some(c) => Some(c.solve(&v)),
                None => lu.solve(&v),
            }
        };
        // Direction for a given complementarity target R (PSD) / r (LP).
        let direction = |rc: &[RMat], rcl: &[f64]| -> Option<(Vec<RMat>, Vec<f64>, DVector<f64>, Vec<RMat>, Vec<f64>)> {
            let h: Vec<RMat> = (0..nb)
                .map(|j| sym(&(&rc[j] - &xs[j] * &rd[j] * &zinv[j])))
                .collect();
            let hl: Vec<f64> = (0..p.lp_dim).map(|k| rcl[k] - xl[k] * rdl[k] / zl[k]).collect();
            let ah = pr.a_op(&h, &hl);
            let rhs: Vec<f64> = (0..m).map(|i| rp[i] - ah[i]).collect();
            let dy = solve(&rhs)?;
            let (atdy, atdyl) = pr.at_op(dy.as_slice());
            let dz: Vec<RMat> = (0..nb).map(|j| &rd[j] - &atdy[j]).collect();
            let dzl: Vec<f64> = (0..p.lp_dim).map(|k| rdl[k] - atdyl[k]).collect();
            let dx: Vec<RMat> = (0..nb)
                .map(|j| sym(&(&rc[j] - &xs[j] * &dz[j] * &zinv[j])))
                .collect();
            let dxl: Vec<f64> = (0..p.lp_dim).map(|k| rcl[k] - xl[k] * dzl[k] / zl[k]).collect();
            Some((dx, dxl, dy, dz, dzl))
        };
        let steps = |dx: &[RMat], dxl: &[f64], dz: &[RMat], dzl: &[f64]| -> Option<(f64, f64)> {
            let mut ap = max_step_lp(&xl, dxl);
            let mut ad = max_step_lp(&zl, dzl);
            for j in 0..nb {
                ap = ap.min(max_step(&xs[j], &dx[j])?);
                ad = ad.min(max_step(&zs[j], &dz[j])?);
            }
            Some((ap, ad))
        };

        let rc0: Vec<RMat> = xs.iter().map(|x| -x.clone()).collect();
        let rcl0: Vec<f64> = xl.iter().map(|x| -x).collect();
        let Some((dxp, dxlp, _, dzp, dzlp)) = direction(&rc0, &rcl0) else { break };
        let Some((app, adp)) = steps(&dxp, &dxlp, &dzp, &dzlp) else { break };
        let (app, adp) = (app.min(1.0), adp.min(1.0));
        let xz_aff = (0..nb)
            .map(|j| dot(&(&xs[j] + &dxp[j] * app), &(&zs[j] + &dzp[j] * adp)))
            .sum::<f64>()
            + (0..p.lp_dim)
                .map(|k| (xl[k] + app * dxlp[k]) * (zl[k] + adp * dzlp[k]))
                .sum::<f64>();
        let mu_aff = xz_aff / ntot as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3).max(if pinf > 1e-3 { 0.1 } else { 0.0 });
        let rc: Vec<RMat> = (0..nb)
            .map(|j| &zinv[j] * (sigma * mu) - &xs[j] - &dxp[j] * &dzp[j] * &zinv[j])
            .collect();
        let rcl: Vec<f64> = (0..p.lp_dim)
            .map(|k| sigma * mu / zl[k] - xl[k] - dxlp[k] * dzlp[k] / zl[k])
            .collect();
        let Some((dx, dxl, dy, dz, dzl)) = direction(&rc, &rcl) else { break };
        let Some((ap, ad)) = steps(&dx, &dxl, &dz, &dzl) else { break };
        let ap = (opts.tau * ap).min(1.0);
        let ad = (opts.tau * ad).min(1.0);
        for j in 0..nb {
            xs[j] = sym(&(&xs[j] + &dx[j] * ap));
            zs[j] = sym(&(&zs[j] + &dz[j] * ad));
        }
        for k in 0..p.lp_dim {
            xl[k] += ap * dxl[k];
            zl[k] += ad * dzl[k];
        }
        for i in 0..m {
            y[i] += ad * dy[i];
        }
    }
    if status == SdpStatus::NumericalTrouble && farkas_certificate(&pr, p, &y) {
        status = SdpStatus::Infeasible;
    }
    let ax = pr.a_op(&xs, &xl);
    let primal_residual = (0..m).map(|i| (p.b[i] - ax[i]).powi(2)).sum::<f64>().sqrt();
    let (aty, atyl) = pr.at_op(&y);
    let dual_residual = ((0..nb)
        .map(|j| (&p.c_psd[j] - &zs[j] - &aty[j]).norm_squared())
        .sum::<f64>()
        + (0..p.lp_dim).map(|k| (p.c_lp[k] - zl[k] - atyl[k]).powi(2)).sum::<f64>())
    .sqrt();
    let primal_obj = (0..nb).map(|j| dot(&p.c_psd[j], &xs[j])).sum::<f64>()
        + (0..p.lp_dim).map(|k| p.c_lp[k] * xl[k]).sum::<f64>();
    let dual_obj = (0..m).map(|i| p.b[i] * y[i]).sum::<f64>();
    StdSolution {
        x_psd: xs,
        x_lp: xl,
        y,
        z_psd: zs,
        z_lp: zl,
        status,
        primal_obj,
        dual_obj,
        primal_residual,
        dual_residual,
        iterations: iters,
    }
}

/// Complex Hermitian SDP: `min Tr[Cρ]` s.t. `Tr[A_k ρ] = b_k`, `Tr[B_j ρ] ≤ u_j`, `ρ ⪰ 0`.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: HermitianOperator,
    pub equalities: Vec<(HermitianOperator, f64)>,
    pub inequalities: Vec<(HermitianOperator, f64)>,
}

/// Primal-dual pair for a complex problem. `dual` lists equality multipliers then
/// inequality multipliers (the latter nonpositive).
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub primal: DensityOperator,
    pub dual: Vec<f64>,
    pub status: SdpStatus,
    pub gap: f64,
    pub primal_obj: f64,
    pub dual_obj: f64,
}

impl SdpProblem {
    pub fn to_std(&self) -> Result<StdProblem> {
        let d = self.objective.dim();
        let all = self.equalities.iter().chain(&self.inequalities);
        if all.clone().any(|(a, _)| a.dim() != d) {
            return Err(Error::Dimension("constraint dimension differs from objective".into()));
        }
        let mut rows = Vec::new();
        let mut b = Vec::new();
        for (a, bk) in &self.equalities {
            rows.push(Row { psd: vec![(0, Mat::from_hermitian(a.matrix()))], lp: vec![] });
            b.push(*bk);
        }
        for (k, (a, u)) in self.inequalities.iter().enumerate() {
            rows.push(Row { psd: vec![(0, Mat::from_hermitian(a.matrix()))], lp: vec![(k, 1.0)] });
            b.push(*u);
        }
        Ok(StdProblem {
            psd_dims: vec![2 * d],
            lp_dim: self.inequalities.len(),
            c_psd: vec![real_embed(self.objective.matrix())],
            c_lp: vec![0.0; self.inequalities.len()],
            rows,
            b,
        })
    }
}

/// Recovers `ρ` from an embedded primal block.
pub fn unembed_primal(x: &RMat) -> CMat {
    real_unembed(x)
}

/// Solves a complex Hermitian SDP through its real embedding.
pub fn solve_sdp(p: &SdpProblem) -> Result<SdpSolution> {
    solve_sdp_with(p, &IpmOptions::default())
}

pub fn solve_sdp_with(p: &SdpProblem, opts: &IpmOptions) -> Result<SdpSolution> {
    let std = p.to_std()?;
    let sol = solve_std(&std, opts);
    let rho = unembed_primal(&sol.x_psd[0]);
    let op = HermitianOperator::from_hermitian(rho);
    let tr = op.trace();
    let primal = DensityOperator::new(op.clone(), tr)
        .unwrap_or_else(|_| DensityOperator::new(clip_psd(&op), tr).expect("clipped operator is PSD"));
    Ok(SdpSolution {
        primal,
        dual: sol.y.clone(),
        status: sol.status,
        gap: (sol.primal_obj - sol.dual_obj).abs(),
        primal_obj: sol.primal_obj,
        dual_obj: sol.dual_obj,
    })
}

/// Clips tiny negative eigenvalues while keeping the trace.
fn clip_psd(op: &HermitianOperator) -> HermitianOperator {
    let e = op.eigh();
    let t = op.trace();
    let vals: Vec<f64> = e.values.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = vals.iter().sum();
    let scale = if s > 0.0 { t / s } else { 1.0 };
    HermitianOperator::from_hermitian(crate::linalg::reconstruct(
        &e.vectors,
        &vals.iter().map(|v| v * scale).collect::<Vec<_>>(),
    ))
}

/// `Σ_k y_k A_k` for complex operators.
pub fn combine(ops: &[HermitianOperator], y: &[f64]) -> CMat {
    let d = ops[0].dim();
    let mut s = CMat::zeros(d, d);
    for (a, &w) in ops.iter().zip(y) {
        s += a.matrix().map(|z| z * Complex64::new(w, 0.0));
    }
    s
}
