//! Run configuration: a flat `key = value` text format with `#` comments, plus
//! programmatic overrides applied in order.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::keylength::{SecurityParams, DEFAULT_EPS_ACC, DEFAULT_F_EC};
use crate::protocols::{PdcParams, Protocol, FIBER_LOSS_DB_PER_KM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// First-order construction over a grid of linearization points.
    One,
    /// Second-order penalized construction at the expected statistics.
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Theorem {
    Renyi,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    Bb84,
    SixFour,
    Mub2,
    Pdc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    /// Depolarizing error rate (BB84, six-four, 2-MUB).
    pub q: f64,
    pub theta_deg: f64,
    pub d: usize,
    pub lambda: f64,
    /// Detector efficiency before fiber loss.
    pub eta_det: f64,
    pub y0: f64,
    pub e_d: f64,
    pub distance_km: f64,
    pub loss_db_per_km: f64,
    pub ns: Vec<f64>,
    pub algorithm: Algorithm,
    pub theorem: Theorem,
    pub eps_acc: f64,
    pub eps_sec: Option<f64>,
    pub eps_ec: Option<f64>,
    pub eps_pa: Option<f64>,
    pub eps_bar: Option<f64>,
    pub f_ec: f64,
    pub xi_t: f64,
    /// Fixes `p_z` instead of scanning the testing-probability grid.
    pub p_z: Option<f64>,
    pub fw_tol: f64,
    pub fw_max_iter: usize,
    /// Worker threads; 0 uses every available core.
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolKind::Bb84,
            q: 0.01,
            theta_deg: 11.0,
            d: 3,
            lambda: 0.1,
            eta_det: 0.8,
            y0: 1e-7,
            e_d: 0.01,
            distance_km: 0.0,
            loss_db_per_km: FIBER_LOSS_DB_PER_KM,
            ns: (5..=15).map(|k| 10f64.powi(k)).collect(),
            algorithm: Algorithm::Two,
            theorem: Theorem::Renyi,
            eps_acc: DEFAULT_EPS_ACC,
            eps_sec: None,
            eps_ec: None,
            eps_pa: None,
            eps_bar: None,
            f_ec: DEFAULT_F_EC,
            xi_t: 0.0,
            p_z: None,
            fw_tol: 1e-6,
            fw_max_iter: 1000,
            threads: 0,
            out: None,
        }
    }
}

fn num(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("{key}: not a number: {v}")))
}

fn count(key: &str, v: &str) -> Result<usize> {
    v.trim().parse::<usize>().map_err(|_| Error::Parse(format!("{key}: not a nonnegative integer: {v}")))
}

/// Parses a comma-separated list of block sizes such as `1e6, 1e8, 1e10`.
pub fn parse_ns(v: &str) -> Result<Vec<f64>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let n = num("n", s)?;
            if n >= 1.0 && n.fract() == 0.0 && n <= 9.0e15 {
                Ok(n)
            } else {
                Err(Error::Parameter(format!("block size {s} must be an integer in [1, 9e15]")))
            }
        })
        .collect()
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "protocol" => {
                self.protocol = match v {
                    "bb84" => ProtocolKind::Bb84,
                    "sixfour" | "six-four" => ProtocolKind::SixFour,
                    "mub2" => ProtocolKind::Mub2,
                    "pdc" => ProtocolKind::Pdc,
                    _ => return Err(Error::Parse(format!("unknown protocol {v}"))),
                }
            }
            "q" => self.q = num(key, v)?,
            "theta_deg" => self.theta_deg = num(key, v)?,
            "d" => self.d = count(key, v)?,
            "lambda" => self.lambda = num(key, v)?,
            "eta_det" => self.eta_det = num(key, v)?,
            "y0" => self.y0 = num(key, v)?,
            "e_d" => self.e_d = num(key, v)?,
            "distance_km" => self.distance_km = num(key, v)?,
            "loss_db_per_km" => self.loss_db_per_km = num(key, v)?,
            "n" => self.ns = parse_ns(v)?,
            "alg" => {
                self.algorithm = match v {
                    "1" => Algorithm::One,
                    "2" => Algorithm::Two,
                    _ => return Err(Error::Parse(format!("alg must be 1 or 2, got {v}"))),
                }
            }
            "thm" => {
                self.theorem = match v {
                    "renyi" => Theorem::Renyi,
                    "smooth" => Theorem::Smooth,
                    _ => return Err(Error::Parse(format!("thm must be renyi or smooth, got {v}"))),
                }
            }
            "eps_acc" => self.eps_acc = num(key, v)?,
            "eps_sec" => self.eps_sec = Some(num(key, v)?),
            "eps_ec" => self.eps_ec = Some(num(key, v)?),
            "eps_pa" => self.eps_pa = Some(num(key, v)?),
            "eps_bar" => self.eps_bar = Some(num(key, v)?),
            "f_ec" => self.f_ec = num(key, v)?,
            "xi_t" => self.xi_t = num(key, v)?,
            "p_z" => self.p_z = Some(num(key, v)?),
            "fw_tol" => self.fw_tol = num(key, v)?,
            "fw_max_iter" => self.fw_max_iter = count(key, v)?,
            "threads" => self.threads = count(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            other => return Err(Error::Parse(format!("unknown key {other}"))),
        }
        Ok(())
    }

    /// Parses the flat text format on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            self.set(k, v).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    /// The protocol described by this configuration.
    pub fn protocol(&self) -> Result<Protocol> {
        Ok(match self.protocol {
            ProtocolKind::Bb84 => Protocol::Bb84 { q: self.q },
            ProtocolKind::SixFour => Protocol::SixFour { q: self.q, theta: self.theta_deg.to_radians() },
            ProtocolKind::Mub2 => Protocol::Mub2 { d: self.d, q: self.q },
            ProtocolKind::Pdc => {
                if !(self.distance_km >= 0.0 && self.loss_db_per_km >= 0.0) {
                    return Err(Error::Parameter("distance and loss must be nonnegative".into()));
                }
                let base = PdcParams { lambda: self.lambda, y0_a: self.y0, y0_b: self.y0, e_d: self.e_d, ..Default::default() };
                Protocol::Pdc(base.at_distance(self.eta_det, self.distance_km, self.loss_db_per_km))
            }
        })
    }

    /// Security parameters for block size `n` and testing probability `gamma`, with the
    /// unspecified parts of `ε_acc` split as in the defaults.
    pub fn security(&self, n: f64, gamma: f64, alice_size: usize, bob_size: usize, h_cond: f64) -> SecurityParams {
        let third = self.eps_acc / 3.0;
        SecurityParams {
            n,
            gamma,
            eps_acc: self.eps_acc,
            eps_sec: self.eps_sec.unwrap_or(2.0 * third),
            eps_ec: self.eps_ec.unwrap_or(third),
            eps_pa: self.eps_pa.unwrap_or(third),
            eps_bar: self.eps_bar.unwrap_or(third),
            alice_size,
            bob_size,
            f_ec: self.f_ec,
            h_cond,
            xi_t: self.xi_t,
        }
    }

    /// Checks ranges without running any solver.
    pub fn validate(&self) -> Result<()> {
        if self.ns.is_empty() {
            return Err(Error::Parameter("no block sizes given".into()));
        }
        if let Some(p) = self.p_z {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::Parameter(format!("p_z = {p} outside (0, 1)")));
            }
        }
        if !(self.fw_tol > 0.0) || self.fw_max_iter == 0 {
            return Err(Error::Parameter("Frank-Wolfe tolerance and iteration cap must be positive".into()));
        }
        // Build once to surface protocol range errors as configuration errors.
        let spec = self.protocol()?.build(self.p_z.unwrap_or(0.9))?;
        let sp = self.security(self.ns[0], spec.gamma, spec.alice_size, spec.bob_size, spec.h_cond);
        match self.theorem {
            Theorem::Renyi => sp.validate_renyi(),
            Theorem::Smooth => sp.validate_smooth(),
        }
    }
}
