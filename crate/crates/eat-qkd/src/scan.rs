//! Key-rate scans over block sizes and testing probabilities, and their CSV output.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::channel::PerturbationBudget;
use crate::config::{Algorithm, RunConfig, Theorem};
use crate::error::{Error, Result};
use crate::frank_wolfe::FwOptions;
use crate::keylength::{
    k_constant, leak_ec, optimize_renyi, optimize_smooth, v_constant, TradeoffStats,
};
use crate::linalg::ProbabilityVector;
use crate::protocols::{gamma_grid, noise_grid, p_z_for_gamma, ProtocolSpec};
use crate::tradeoff::{
    algorithm1, algorithm2, crossover_to_full, min_over_acceptance, Alg2Constants, BuildOptions,
    MinTradeoffFunction, Target,
};

/// One row of a scan table.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyRatePoint {
    pub n: f64,
    /// `max(ℓ, 0) / n`.
    pub key_rate: f64,
    /// Raw optimized key length, possibly negative.
    pub ell: f64,
    /// `β` for the Rényi statement; `NaN` for the smooth one.
    pub beta: f64,
    /// `δ` for the Rényi statement, `α` for the smooth one.
    pub delta_or_alpha: f64,
    pub p_z: f64,
    pub gamma: f64,
    pub h: f64,
    pub v: f64,
    pub k: f64,
    /// `ok`, or an error description for a failed grid point.
    pub status: String,
}

impl KeyRatePoint {
    fn failed(n: f64, p_z: f64, gamma: f64, err: &Error) -> Self {
        Self {
            n,
            key_rate: f64::NAN,
            ell: f64::NAN,
            beta: f64::NAN,
            delta_or_alpha: f64::NAN,
            p_z,
            gamma,
            h: f64::NAN,
            v: f64::NAN,
            k: f64::NAN,
            status: format!("error: {err}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

fn fw_options(cfg: &RunConfig) -> BuildOptions {
    BuildOptions { target: Target::Crossover, fw: FwOptions { tol: cfg.fw_tol, max_iter: cfg.fw_max_iter } }
}

/// Testing probabilities scanned for `n`, as `p_z` values.
pub fn p_z_candidates(cfg: &RunConfig, n: f64) -> Vec<f64> {
    match cfg.p_z {
        Some(p) => vec![p],
        None => gamma_grid(n).into_iter().map(p_z_for_gamma).collect(),
    }
}

/// Crossover functions from the first-order construction at every grid noise level.
/// They do not depend on `n`.
pub fn algorithm1_candidates(cfg: &RunConfig, spec: &ProtocolSpec) -> Result<Vec<MinTradeoffFunction>> {
    let protocol = cfg.protocol()?;
    let budget = PerturbationBudget::default_for(&spec.channel);
    let opts = fw_options(cfg);
    let mut out = Vec::new();
    let mut last_err = None;
    for q in noise_grid() {
        let q0 = protocol.with_noise(q).build(spec.p_z)?.q_bar;
        match algorithm1(&q0, &spec.channel, &budget, &opts) {
            Ok(r) => {
                log::debug!(
                    "alg1 p_z={:.6} q0 noise={q}: {} iterations, gap {:.3e}",
                    spec.p_z,
                    r.fw_iterations,
                    r.fw_gap
                );
                out.push(r.function);
            }
            Err(e) => {
                log::debug!("alg1 p_z={:.6} q0 noise={q}: {e}", spec.p_z);
                last_err = Some(e);
            }
        }
    }
    match (out.is_empty(), last_err) {
        (true, Some(e)) => Err(e),
        _ => Ok(out),
    }
}

/// Crossover function from the second-order construction at the expected statistics.
pub fn algorithm2_candidate(cfg: &RunConfig, spec: &ProtocolSpec, n: f64) -> Result<MinTradeoffFunction> {
    let sp = cfg.security(n, spec.gamma, spec.alice_size, spec.bob_size, spec.h_cond);
    let k = Alg2Constants::default_for(n, sp.eps_acc, sp.eps_bar, Some(spec.gamma));
    let budget = PerturbationBudget::default_for(&spec.channel);
    let r = algorithm2(&spec.q_bar, &spec.channel, k, &budget, &fw_options(cfg))?;
    log::debug!(
        "alg2 n={n:e} p_z={:.6}: {} iterations, gap {:.3e}, primal {:.9}, dual {:.9}",
        spec.p_z,
        r.fw_iterations,
        r.fw_gap,
        r.primal_value,
        r.dual_value
    );
    Ok(r.function)
}

/// Optimized key length for one crossover function at block size `n`.
pub fn evaluate_point(cfg: &RunConfig, spec: &ProtocolSpec, g: &MinTradeoffFunction, n: f64) -> Result<KeyRatePoint> {
    let full = crossover_to_full(g, spec.gamma)?;
    let q_full = ProbabilityVector::new(spec.q_bar_full())?;
    let h = min_over_acceptance(&full.coeffs, &q_full, cfg.xi_t)?;
    let stats = TradeoffStats::new(h, &full);
    let sp = cfg.security(n, spec.gamma, spec.alice_size, spec.bob_size, spec.h_cond);
    let leak = leak_ec(n, sp.f_ec, sp.h_cond, sp.eps_ec);
    let v = v_constant(&stats, sp.d_s());
    let (ell, beta, second, k) = match cfg.theorem {
        Theorem::Renyi => {
            let o = optimize_renyi(&stats, &sp, leak)?;
            (o.ell, o.beta, o.delta, k_constant(&stats, sp.d_s(), o.beta)?)
        }
        Theorem::Smooth => {
            let o = optimize_smooth(&stats, &sp, leak)?;
            (o.ell, f64::NAN, o.alpha, k_constant(&stats, sp.d_s(), o.alpha)?)
        }
    };
    Ok(KeyRatePoint {
        n,
        key_rate: ell.max(0.0) / n,
        ell,
        beta,
        delta_or_alpha: second,
        p_z: spec.p_z,
        gamma: spec.gamma,
        h,
        v,
        k,
        status: "ok".into(),
    })
}

/// Best point over a candidate list; ties keep the earliest candidate.
fn best_of(points: impl IntoIterator<Item = Result<KeyRatePoint>>) -> Result<KeyRatePoint> {
    let mut best: Option<KeyRatePoint> = None;
    let mut last_err = None;
    for p in points {
        match p {
            Ok(p) => {
                if best.as_ref().map_or(true, |b| p.ell > b.ell) {
                    best = Some(p);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Numerical("no candidate functions".into())))
}

fn run_grid(cfg: &RunConfig) -> Result<Vec<KeyRatePoint>> {
    let protocol = cfg.protocol()?;
    // Distinct p_z values in first-seen order, so first-order functions are built once.
    let mut pzs: Vec<f64> = Vec::new();
    for &n in &cfg.ns {
        for p in p_z_candidates(cfg, n) {
            if !pzs.iter().any(|&q| q.to_bits() == p.to_bits()) {
                pzs.push(p);
            }
        }
    }
    let specs: Vec<Result<ProtocolSpec>> = pzs.par_iter().map(|&p| protocol.build(p)).collect();
    let alg1: Vec<Option<Result<Vec<MinTradeoffFunction>>>> = specs
        .par_iter()
        .map(|s| match (cfg.algorithm, s) {
            (Algorithm::One, Ok(spec)) => Some(algorithm1_candidates(cfg, spec)),
            _ => None,
        })
        .collect();
    let tasks: Vec<(usize, usize, f64)> = cfg
        .ns
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| {
            p_z_candidates(cfg, n)
                .into_iter()
                .map(move |p| (i, p, n))
                .collect::<Vec<_>>()
        })
        .map(|(i, p, n)| (i, pzs.iter().position(|&q| q.to_bits() == p.to_bits()).unwrap_or(0), n))
        .collect();
    let results: Vec<(usize, KeyRatePoint)> = tasks
        .par_iter()
        .map(|&(i, j, n)| {
            let p_z = pzs[j];
            let point = match &specs[j] {
                Err(e) => Err(Error::Parameter(e.to_string())),
                Ok(spec) => match cfg.algorithm {
                    Algorithm::One => match alg1[j].as_ref() {
                        Some(Ok(fs)) => best_of(fs.iter().map(|g| evaluate_point(cfg, spec, g, n))),
                        Some(Err(e)) => Err(Error::Numerical(e.to_string())),
                        None => Err(Error::Numerical("missing first-order functions".into())),
                    },
                    Algorithm::Two => {
                        algorithm2_candidate(cfg, spec, n).and_then(|g| evaluate_point(cfg, spec, &g, n))
                    }
                },
            };
            let gamma = specs[j].as_ref().map(|s| s.gamma).unwrap_or(f64::NAN);
            let point = point.unwrap_or_else(|e| {
                log::warn!("n={n:e} p_z={p_z}: {e}");
                KeyRatePoint::failed(n, p_z, gamma, &e)
            });
            log::debug!("n={n:e} p_z={p_z:.6}: ell={:.6e} status={}", point.ell, point.status);
            (i, point)
        })
        .collect();

    let mut table = Vec::new();
    for (i, &n) in cfg.ns.iter().enumerate() {
        let rows: Vec<&KeyRatePoint> = results.iter().filter(|(k, _)| *k == i).map(|(_, p)| p).collect();
        let mut best: Option<&KeyRatePoint> = None;
        for p in rows.iter().filter(|p| p.is_ok()) {
            if best.map_or(true, |b| p.ell > b.ell) {
                best = Some(p);
            }
        }
        match best {
            Some(b) => {
                log::info!("n={n:e}: rate {:.6e} at p_z={:.6}", b.key_rate, b.p_z);
                table.push(b.clone());
            }
            None => log::warn!("n={n:e}: every grid point failed"),
        }
        table.extend(rows.iter().filter(|p| !p.is_ok()).map(|p| (*p).clone()));
    }
    Ok(table)
}

/// Runs the key-rate procedure for every configured block size: one row per `n` with the
/// best testing probability, followed by a status row for each failed grid point.
pub fn run_scan(cfg: &RunConfig) -> Result<Vec<KeyRatePoint>> {
    cfg.validate()?;
    if cfg.threads == 0 {
        return run_grid(cfg);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    pool.install(|| run_grid(cfg))
}

pub const CSV_HEADER: &str = "n,key_rate,ell,beta,delta_or_alpha,p_z,gamma,h,V,K,status";

fn fmt17(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV text: header plus one line per point; undefined numbers are empty fields.
pub fn to_csv(table: &[KeyRatePoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in table {
        let nums = [p.n, p.key_rate, p.ell, p.beta, p.delta_or_alpha, p.p_z, p.gamma, p.h, p.v, p.k];
        let fields: Vec<String> = nums.iter().map(|&x| fmt17(x)).collect();
        let status = p.status.replace([',', '\n', '\r'], ";");
        let _ = writeln!(s, "{},{status}", fields.join(","));
    }
    s
}

pub fn emit_csv(table: &[KeyRatePoint], path: &Path) -> Result<()> {
    std::fs::write(path, to_csv(table)).map_err(|source| Error::Io { path: path.into(), source })
}
