//! Weak-dependence check for public announcements: every block `M_{s,p}` must commute
//! with every announcement operator `M_{p'}`, in which case the announcements are
//! block diagonal along a common decomposition of the input space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::PovmElement;
use crate::error::{Error, Result};
use crate::linalg::{eigh, frob, identity, CMat};

/// Relative commutator tolerance.
pub const COMMUTATOR_TOL: f64 = 1e-8;
/// Absolute tolerance for grouping joint eigenvalues.
pub const GROUPING_TOL: f64 = 1e-7;

/// Outcome of the commutation test.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovReport {
    pub pass: bool,
    /// Largest `‖[M_sp, M_p']‖_F / (‖M_sp‖_F ‖M_p'‖_F)` over all pairs.
    pub worst_commutator: f64,
}

/// Common block decomposition of the announcement operators.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    /// Announcement labels, in the order used by `constants`.
    pub announcements: Vec<String>,
    /// Orthonormal basis of each subspace, as columns.
    pub subspaces: Vec<CMat>,
    /// `constants[λ][p]` is the eigenvalue of `M_p` on subspace `λ`.
    pub constants: Vec<Vec<f64>>,
}

impl BlockDecomposition {
    pub fn dims(&self) -> Vec<usize> {
        self.subspaces.iter().map(|u| u.ncols()).collect()
    }
}

fn announcement_ops(povm: &[PovmElement]) -> Result<(Vec<String>, Vec<CMat>)> {
    let d = povm
        .first()
        .map(|e| e.op.dim())
        .ok_or_else(|| Error::InvalidOperator("empty POVM".into()))?;
    let mut labels: Vec<String> = Vec::new();
    let mut ops: Vec<CMat> = Vec::new();
    let mut total = CMat::zeros(d, d);
    for e in povm {
        if e.op.dim() != d {
            return Err(Error::Dimension("POVM elements differ in dimension".into()));
        }
        total += e.op.matrix();
        match labels.iter().position(|l| *l == e.p) {
            Some(i) => ops[i] += e.op.matrix(),
            None => {
                labels.push(e.p.clone());
                ops.push(e.op.matrix().clone());
            }
        }
    }
    let dev = frob(&(total - identity(d)));
    if dev > 1e-9 {
        return Err(Error::InvalidOperator(format!("POVM incomplete (deviation {dev:.3e})")));
    }
    Ok((labels, ops))
}

/// Tests `[M_sp, M_p'] = 0` for all `s, p, p'`.
pub fn check_condition_b(povm: &[PovmElement]) -> Result<MarkovReport> {
    check_condition_b_tol(povm, COMMUTATOR_TOL)
}

pub fn check_condition_b_tol(povm: &[PovmElement], tol: f64) -> Result<MarkovReport> {
    let (_, anns) = announcement_ops(povm)?;
    let mut worst: f64 = 0.0;
    for e in povm {
        let m = e.op.matrix();
        let nm = frob(m);
        for a in &anns {
            let na = frob(a);
            if nm == 0.0 || na == 0.0 {
                continue;
            }
            let comm = m * a - a * m;
            worst = worst.max(frob(&comm) / (nm * na));
        }
    }
    Ok(MarkovReport { pass: worst <= tol, worst_commutator: worst })
}

/// Simultaneous eigendecomposition of the announcement operators.
pub fn decompose_blocks(povm: &[PovmElement]) -> Result<BlockDecomposition> {
    let report = check_condition_b(povm)?;
    if !report.pass {
        return Err(Error::NotWeaklyDependent(format!(
            "worst relative commutator {:.3e}",
            report.worst_commutator
        )));
    }
    let (labels, anns) = announcement_ops(povm)?;
    let d = anns[0].nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut mix = CMat::zeros(d, d);
    for a in &anns {
        let w: f64 = rng.gen_range(0.5..1.5);
        mix += a.map(|z| z * w);
    }
    let e = eigh(&mix);
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for k in 0..d {
        let v = e.vectors.column(k);
        let tuple: Vec<f64> = anns
            .iter()
            .map(|a| {
                let val = (v.adjoint() * a * v)[(0, 0)].re;
                (val * 1e7).round() / 1e7
            })
            .collect();
        let hit = groups.iter_mut().find(|(t, _)| {
            t.iter().zip(&tuple).all(|(x, y)| (x - y).abs() <= GROUPING_TOL)
        });
        match hit {
            Some((_, members)) => members.push(k),
            None => groups.push((tuple, vec![k])),
        }
    }
    groups.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut subspaces = Vec::new();
    let mut constants = Vec::new();
    for (tuple, members) in groups {
        let mut u = CMat::zeros(d, members.len());
        for (j, &k) in members.iter().enumerate() {
            u.set_column(j, &e.vectors.column(k));
        }
        for (a, &cpl) in anns.iter().zip(&tuple) {
            let restricted = u.adjoint() * a * &u;
            let dev = frob(&(restricted - identity(members.len()).map(|z| z * cpl)));
            if dev > 1e-8 {
                return Err(Error::NotWeaklyDependent(format!(
                    "announcement not proportional to identity on a block (deviation {dev:.3e})"
                )));
            }
        }
        subspaces.push(u);
        constants.push(tuple);
    }
    Ok(BlockDecomposition { announcements: labels, subspaces, constants })
}

/// Largest matrix element of any `M_{s,p}` between distinct subspaces.
pub fn max_cross_block_element(povm: &[PovmElement], dec: &BlockDecomposition) -> f64 {
    let mut worst: f64 = 0.0;
    for e in povm {
        for (i, ui) in dec.subspaces.iter().enumerate() {
            for (j, uj) in dec.subspaces.iter().enumerate() {
                if i != j {
                    let cross = ui.adjoint() * e.op.matrix() * uj;
                    worst = worst.max(cross.iter().map(|z| z.norm()).fold(0.0, f64::max));
                }
            }
        }
    }
    worst
}
