//! Finite-power sum rates: DPC sum capacity and zero-forcing.
//!
//! The DPC sum capacity is computed on the dual uplink,
//! `max_{p >= 0, sum p <= P} log2 det(I + sigma^-2 sum_k p_k h_k h_k^H)`,
//! with sum-power iterative waterfilling. The averaging step (each new
//! allocation is blended `1/K : (K-1)/K` with the previous one) makes the
//! objective nondecreasing per iteration. All work is done on the `K x K`
//! Gram matrix, never on the `N_B x N_B` uplink covariance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{compose_effective, ChannelSet, PhaseConfig};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, gram, log2_det_hpd, CMat};
use crate::waterfill::waterfill;

pub const DEFAULT_DPC_TOL: f64 = 1e-12;
pub const DEFAULT_DPC_MAX_ITER: usize = 20_000;

pub fn dbm_to_watt(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerPoint {
    pub power: f64,
    pub noise_variance: f64,
}

impl PowerPoint {
    pub fn new(power: f64, noise_variance: f64) -> Result<Self> {
        if !(power > 0.0 && noise_variance > 0.0) || !power.is_finite() || !noise_variance.is_finite() {
            return Err(Error::Domain(format!("invalid power point P={power}, sigma2={noise_variance}")));
        }
        Ok(Self { power, noise_variance })
    }

    pub fn from_dbm(power_dbm: f64, noise_dbm: f64) -> Result<Self> {
        Self::new(dbm_to_watt(power_dbm), dbm_to_watt(noise_dbm))
    }

    /// Transmit power normalized to the noise variance.
    pub fn snr(&self) -> f64 {
        self.power / self.noise_variance
    }
}

/// `log2 det(I + S^1/2 G S^1/2)` with `S = diag(p) / sigma^2`.
fn mac_objective(g: &CMat, p: &[f64], sigma2: f64) -> Result<f64> {
    let k = g.nrows();
    let s: Vec<f64> = p.iter().map(|&x| (x / sigma2).sqrt()).collect();
    let m = CMat::from_fn(k, k, |i, j| {
        let base = g[(i, j)] * (s[i] * s[j]);
        if i == j { base + Complex64::new(1.0, 0.0) } else { base }
    });
    log2_det_hpd(&m)
}

/// Effective single-user uplink gains `h_k^H Z_k^-1 h_k / sigma^2` with
/// `Z_k = I + sigma^-2 sum_{j != k} p_j h_j h_j^H`, via the matrix inversion
/// lemma on the `K x K` Gram matrix.
fn effective_gains(g: &CMat, p: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    let k = g.nrows();
    (0..k)
        .map(|user| {
            let s: Vec<f64> = (0..k)
                .map(|j| if j == user { 0.0 } else { (p[j] / sigma2).sqrt() })
                .collect();
            let inner = CMat::from_fn(k, k, |i, j| {
                let base = g[(i, j)] * (s[i] * s[j]);
                if i == j { base + Complex64::new(1.0, 0.0) } else { base }
            });
            let w = nalgebra::DVector::from_fn(k, |i, _| g[(i, user)] * s[i]);
            let correction = w.dotc(&cholesky(&inner)?.solve(&w)).re;
            Ok(((g[(user, user)].re - correction) / sigma2).max(0.0))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct DpcSolution {
    pub rate: f64,
    pub powers: Vec<f64>,
    /// Objective after each iteration, starting from equal power.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// DPC sum capacity of a channel whose rows are single-antenna users.
pub fn dpc_sum_capacity(h_eff: &CMat, pp: &PowerPoint, tol: f64, max_iter: usize) -> Result<f64> {
    dpc_sum_capacity_detailed(h_eff, pp, tol, max_iter).map(|s| s.rate)
}

pub fn dpc_sum_capacity_detailed(h_eff: &CMat, pp: &PowerPoint, tol: f64, max_iter: usize) -> Result<DpcSolution> {
    let k = h_eff.nrows();
    if k == 0 {
        return Err(Error::Domain("channel has no users".into()));
    }
    let g = gram(h_eff);
    let sigma2 = pp.noise_variance;
    let mut p = vec![pp.power / k as f64; k];
    let mut value = mac_objective(&g, &p, sigma2)?;
    let mut trace = vec![value];
    let blend = 1.0 / k as f64;

    for iter in 1..=max_iter {
        let gains = effective_gains(&g, &p, sigma2)?;
        let bases: Vec<f64> = gains.iter().map(|&x| if x > 0.0 { 1.0 / x } else { f64::INFINITY }).collect();
        let fresh = waterfill(&bases, pp.power)?;
        for (pk, new) in p.iter_mut().zip(&fresh.levels) {
            *pk = blend * new + (1.0 - blend) * *pk;
        }
        let next = mac_objective(&g, &p, sigma2)?;
        trace.push(next);
        let done = (next - value).abs() <= tol * next.abs().max(f64::MIN_POSITIVE);
        value = next;
        if done {
            return Ok(DpcSolution {
                rate: value,
                powers: p,
                objective_trace: trace,
                iterations: iter,
            });
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        last_value: value,
    })
}

/// Zero-forcing sum rate with waterfilling over the per-user effective gains
/// `1 / [(H H^H)^-1]_kk`.
pub fn zf_sum_rate(h_eff: &CMat, pp: &PowerPoint) -> Result<f64> {
    let inv = cholesky(&gram(h_eff))
        .map_err(|_| Error::Singular("zero-forcing needs a full row rank channel".into()))?
        .inverse();
    let gains: Vec<f64> = (0..inv.nrows()).map(|k| 1.0 / inv[(k, k)].re).collect();
    if gains.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
        return Err(Error::Singular("non-positive zero-forcing gain".into()));
    }
    let bases: Vec<f64> = gains.iter().map(|g| pp.noise_variance / g).collect();
    let alloc = waterfill(&bases, pp.power)?;
    Ok(alloc
        .levels
        .iter()
        .zip(&gains)
        .map(|(p, g)| (1.0 + p * g / pp.noise_variance).log2())
        .sum())
}

/// `R_DPC(theta_geo) - R_ZF(theta_har)`.
pub fn rate_gap(
    channels: &ChannelSet,
    theta_geo: &PhaseConfig,
    theta_har: &PhaseConfig,
    pp: &PowerPoint,
) -> Result<f64> {
    let dpc = dpc_sum_capacity(
        &compose_effective(channels, theta_geo)?,
        pp,
        DEFAULT_DPC_TOL,
        DEFAULT_DPC_MAX_ITER,
    )?;
    let zf = zf_sum_rate(&compose_effective(channels, theta_har)?, pp)?;
    Ok(dpc - zf)
}
