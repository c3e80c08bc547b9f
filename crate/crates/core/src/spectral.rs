//! High-SNR rate offsets and eigenvalue means of the Gram matrix `H H^H`.
//!
//! At high SNR both DPC and linear precoding behave like
//! `r log2 P - r log2 r + offset`. The DPC offset is `r log2` of the
//! geometric mean of the Gram eigenvalues; the linear offset is sandwiched
//! between `r log2` of the harmonic mean and the DPC offset.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, gram, hermitian_eigenvalues, log2_det_hpd, CMat};

/// Eigenvalues at or below this fraction of the largest one are singular.
pub const SINGULAR_REL_TOL: f64 = 1e-14;

/// Descending, nonnegative eigenvalues of a Gram matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSpectrum {
    values: Vec<f64>,
}

impl EigenSpectrum {
    /// Sorts descending and clamps small negative round-off to zero.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < -1e-10) {
            return Err(Error::Domain(format!("invalid eigenvalues {values:?}")));
        }
        for v in values.iter_mut() {
            *v = v.max(0.0);
        }
        values.sort_by(|a, b| b.total_cmp(a));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn r(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// `lambda_max / lambda_min`.
    pub fn spread(&self) -> f64 {
        self.max() / self.min()
    }

    fn ensure_nonsingular(&self) -> Result<()> {
        let max = self.max();
        if self.values.is_empty() || !(self.min() > SINGULAR_REL_TOL * max) {
            return Err(Error::Singular(format!(
                "smallest eigenvalue {:e} vs largest {:e}",
                self.min(),
                max
            )));
        }
        Ok(())
    }
}

/// Row blocks of the stacked channel, one per user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserPartition {
    blocks: Vec<Vec<usize>>,
}

impl UserPartition {
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        let r: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; r];
        for &i in blocks.iter().flatten() {
            if i >= r || seen[i] {
                return Err(Error::Domain(format!("blocks do not partition 0..{r}")));
            }
            seen[i] = true;
        }
        if blocks.iter().any(Vec::is_empty) {
            return Err(Error::Domain("empty user block".into()));
        }
        Ok(Self { blocks })
    }

    /// `n_users` consecutive blocks of `n_ms` rows.
    pub fn contiguous(n_users: usize, n_ms: usize) -> Self {
        Self {
            blocks: (0..n_users)
                .map(|k| (k * n_ms..(k + 1) * n_ms).collect())
                .collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn r(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffsetReport {
    pub dpc_offset: f64,
    pub lin_offset: f64,
    pub geo_mean: f64,
    pub har_mean: f64,
}

pub fn gram_spectrum(h_eff: &CMat) -> EigenSpectrum {
    let values = hermitian_eigenvalues(&gram(h_eff))
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    EigenSpectrum { values }
}

/// Geometric and harmonic mean of a nonsingular spectrum.
pub fn spectrum_means(s: &EigenSpectrum) -> Result<(f64, f64)> {
    s.ensure_nonsingular()?;
    let r = s.r() as f64;
    let geo = (s.values.iter().map(|v| v.ln()).sum::<f64>() / r).exp();
    let har = r / s.values.iter().map(|v| 1.0 / v).sum::<f64>();
    Ok((geo, har))
}

fn nonsingular_gram(h_eff: &CMat) -> Result<CMat> {
    let g = gram(h_eff);
    EigenSpectrum::new(hermitian_eigenvalues(&g))?.ensure_nonsingular()?;
    Ok(g)
}

/// `-log2 det((H H^H)^-1)`, via a Cholesky log-determinant.
pub fn dpc_offset(h_eff: &CMat) -> Result<f64> {
    log2_det_hpd(&nonsingular_gram(h_eff)?)
}

/// `-sum_k log2 det(E_k^T (H H^H)^-1 E_k)`.
pub fn lin_offset(h_eff: &CMat, partition: &UserPartition) -> Result<f64> {
    if partition.r() != h_eff.nrows() {
        return Err(crate::error::dim_mismatch("partition size", h_eff.nrows(), partition.r()));
    }
    let inv = cholesky(&nonsingular_gram(h_eff)?)?.inverse();
    let mut total = 0.0;
    for block in partition.blocks() {
        let sub = CMat::from_fn(block.len(), block.len(), |i, j| inv[(block[i], block[j])]);
        total -= log2_det_hpd(&sub)?;
    }
    Ok(total)
}

/// Affine high-SNR rate `r log2 P - r log2 r + offset`. `snr` is the transmit
/// power normalized to the per-antenna noise variance.
pub fn high_snr_rate(snr: f64, r: usize, offset: f64) -> f64 {
    let r_f = r as f64;
    r_f * snr.log2() - r_f * r_f.log2() + offset
}

/// Upper bound `r log2(geo / har)` on the DPC-linear high-SNR gap.
pub fn gap_bound(s: &EigenSpectrum) -> Result<f64> {
    let (geo, har) = spectrum_means(s)?;
    Ok((s.r() as f64 * (geo / har).log2()).max(0.0))
}

pub fn offset_report(h_eff: &CMat, partition: &UserPartition) -> Result<OffsetReport> {
    let (geo_mean, har_mean) = spectrum_means(&gram_spectrum(h_eff))?;
    Ok(OffsetReport {
        dpc_offset: dpc_offset(h_eff)?,
        lin_offset: lin_offset(h_eff, partition)?,
        geo_mean,
        har_mean,
    })
}
