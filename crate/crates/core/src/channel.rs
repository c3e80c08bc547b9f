//! Channel generation and composition for RIS-aided MIMO downlink.
//!
//! The stacked effective channel seen by all `r = K * N_M` receive antennas is
//!
//! ```text
//! H(theta) = H_d + sum_n H_re,n * diag(theta_n) * H_s,n
//! ```
//!
//! with `H_d` the direct BS-user channel, `H_re,n` the channel from surface `n`
//! to the users, and `H_s,n` the BS-to-surface channel. Large-scale path loss
//! enters as a scalar amplitude `sqrt(gain)` on top of unit-power fading.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{cn01_matrix, random_unitary, CMat, CVec};
use crate::scenario::ScenarioConfig;

/// Maximum deviation from `|theta_i| = 1` accepted for an active phase vector.
pub const UNIMODULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDimensions {
    pub n_bs: usize,
    pub n_ms: usize,
    pub n_users: usize,
    pub n_ris_elements: Vec<usize>,
}

impl SystemDimensions {
    /// Total receive dimension `K * N_M`.
    pub fn r(&self) -> usize {
        self.n_users * self.n_ms
    }

    pub fn total_ris_elements(&self) -> usize {
        self.n_ris_elements.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 || self.n_ms == 0 || self.n_users == 0 {
            return Err(Error::Domain("antenna and user counts must be >= 1".into()));
        }
        if self.n_ris_elements.iter().any(|&n| n == 0) {
            return Err(Error::Domain("every surface needs at least one element".into()));
        }
        if self.n_bs < self.r() {
            return Err(Error::Domain(format!(
                "N_B = {} must be at least r = {}",
                self.n_bs,
                self.r()
            )));
        }
        Ok(())
    }
}

/// Log-distance path loss `L_dB = alpha + 10 * beta * log10(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    pub alpha_db: f64,
    pub beta: f64,
}

impl PathLossParams {
    pub fn new(alpha_db: f64, beta: f64) -> Result<Self> {
        let p = Self { alpha_db, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.alpha_db.is_finite() {
            return Err(Error::Domain(format!("invalid path-loss parameters {self:?}")));
        }
        Ok(())
    }
}

/// Realized node positions of one trial, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub bs_position: [f64; 2],
    pub ris_positions: Vec<[f64; 2]>,
    pub user_positions: Vec<[f64; 2]>,
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FadingSpec {
    Rayleigh,
    Rician { rician_factor_db: f64 },
    KroneckerRank { rank: usize },
}

/// One realization of the propagation environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Stacked direct channel, `r x N_B`.
    pub h_direct: CMat,
    /// Surface-to-user channels, each `r x N_RIS,n`.
    pub h_reflect: Vec<CMat>,
    /// BS-to-surface channels, each `N_RIS,n x N_B`.
    pub h_bs_ris: Vec<CMat>,
}

impl ChannelSet {
    pub fn new(h_direct: CMat, h_reflect: Vec<CMat>, h_bs_ris: Vec<CMat>) -> Result<Self> {
        let set = Self {
            h_direct,
            h_reflect,
            h_bs_ris,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let (r, n_bs) = self.h_direct.shape();
        if self.h_reflect.len() != self.h_bs_ris.len() {
            return Err(dim_mismatch(
                "surface count",
                self.h_reflect.len(),
                self.h_bs_ris.len(),
            ));
        }
        for (re, s) in self.h_reflect.iter().zip(&self.h_bs_ris) {
            if re.nrows() != r {
                return Err(dim_mismatch("reflect rows", r, re.nrows()));
            }
            if s.ncols() != n_bs {
                return Err(dim_mismatch("bs-ris columns", n_bs, s.ncols()));
            }
            if re.ncols() != s.nrows() {
                return Err(dim_mismatch("surface elements", re.ncols(), s.nrows()));
            }
        }
        let finite = |m: &CMat| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&self.h_direct)
            || !self.h_reflect.iter().all(finite)
            || !self.h_bs_ris.iter().all(finite)
        {
            return Err(Error::Domain("channel contains non-finite entries".into()));
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.h_direct.nrows()
    }

    pub fn n_bs(&self) -> usize {
        self.h_direct.ncols()
    }

    pub fn ris_sizes(&self) -> Vec<usize> {
        self.h_bs_ris.iter().map(|s| s.nrows()).collect()
    }

    pub fn total_elements(&self) -> usize {
        self.h_bs_ris.iter().map(|s| s.nrows()).sum()
    }

    /// Single-surface view: reflect channels side by side and BS-to-surface
    /// channels stacked, so that `H_re * diag(theta) * H_s` equals the sum
    /// over surfaces when `theta` is the concatenation of per-surface phases.
    pub fn concatenated(&self) -> (CMat, CMat) {
        let n = self.total_elements();
        let mut h_re = CMat::zeros(self.r(), n);
        let mut h_s = CMat::zeros(n, self.n_bs());
        let mut offset = 0;
        for (re, s) in self.h_reflect.iter().zip(&self.h_bs_ris) {
            let k = s.nrows();
            h_re.view_mut((0, offset), (self.r(), k)).copy_from(re);
            h_s.view_mut((offset, 0), (k, self.n_bs())).copy_from(s);
            offset += k;
        }
        (h_re, h_s)
    }
}

/// Reflection state of every surface.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseConfig {
    /// Surfaces absent: only the direct channel remains.
    Off,
    /// One unit-modulus vector per surface.
    Active(Vec<CVec>),
}

impl PhaseConfig {
    pub fn active(phases: Vec<CVec>) -> Result<Self> {
        let mut index = 0;
        for v in &phases {
            check_unimodular(v.as_slice(), index)?;
            index += v.len();
        }
        Ok(Self::Active(phases))
    }

    /// Split a concatenated phase vector back into per-surface pieces.
    pub fn from_concatenated(theta: &CVec, sizes: &[usize]) -> Result<Self> {
        let total: usize = sizes.iter().sum();
        if theta.len() != total {
            return Err(dim_mismatch("phase vector length", total, theta.len()));
        }
        let mut out = Vec::with_capacity(sizes.len());
        let mut offset = 0;
        for &k in sizes {
            out.push(theta.rows(offset, k).into_owned());
            offset += k;
        }
        Self::active(out)
    }

    pub fn all_ones(sizes: &[usize]) -> Self {
        Self::Active(
            sizes
                .iter()
                .map(|&k| CVec::from_element(k, Complex64::new(1.0, 0.0)))
                .collect(),
        )
    }
}

pub(crate) fn check_unimodular(theta: &[Complex64], index_offset: usize) -> Result<()> {
    for (i, z) in theta.iter().enumerate() {
        let m = z.norm();
        if !((m - 1.0).abs() <= UNIMODULAR_TOL) {
            return Err(Error::NotUnimodular {
                index: index_offset + i,
                modulus: m,
            });
        }
    }
    Ok(())
}

/// Linear power gain of the log-distance model at `distance` meters.
pub fn path_loss_linear(params: &PathLossParams, distance: f64) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    let loss_db = params.alpha_db + params.beta * 10.0 * distance.log10();
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Half-wavelength ULA response, entry `k` is `exp(j * pi * k * sin(angle))`.
pub fn steering_vector(n: usize, angle: f64) -> CVec {
    let s = angle.sin();
    CVec::from_fn(n, |k, _| Complex64::from_polar(1.0, PI * k as f64 * s))
}

/// I.i.d. `CN(0, gain)` entries.
pub fn gen_rayleigh<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, gain: f64) -> CMat {
    cn01_matrix(rng, rows, cols) * Complex64::new(gain.max(0.0).sqrt(), 0.0)
}

/// Rayleigh scatter plus a rank-one ULA line-of-sight term, with the power
/// split `kappa / (1 + kappa)` to the LOS part so the total gain is `gain`.
pub fn gen_rician<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    gain: f64,
    kappa_db: f64,
    aoa: f64,
    aod: f64,
) -> CMat {
    let kappa = 10f64.powf(kappa_db / 10.0);
    // kappa = inf (kappa_db = +inf) must give the pure LOS term.
    let (los_w, nlos_w) = if kappa.is_infinite() {
        (1.0, 0.0)
    } else {
        ((kappa / (1.0 + kappa)).sqrt(), (1.0 / (1.0 + kappa)).sqrt())
    };
    let los = steering_vector(rows, aoa) * steering_vector(cols, aod).adjoint();
    let scatter = cn01_matrix(rng, rows, cols);
    (los * Complex64::new(los_w, 0.0) + scatter * Complex64::new(nlos_w, 0.0))
        * Complex64::new(gain.max(0.0).sqrt(), 0.0)
}

/// Rank-controlled channel `sqrt(gain * N_B / R_s) * M * blkdiag(I_Rs, 0) * S^H`
/// with Gaussian `M` and Haar-random unitary `S`.
pub fn gen_kronecker_rank<R: Rng + ?Sized>(
    rng: &mut R,
    n_ris: usize,
    n_bs: usize,
    rank: usize,
    gain: f64,
) -> Result<CMat> {
    if rank == 0 || rank > n_ris.min(n_bs) {
        return Err(Error::Domain(format!(
            "rank {rank} outside 1..={}",
            n_ris.min(n_bs)
        )));
    }
    let m = cn01_matrix(rng, n_ris, n_bs);
    let s = random_unitary(rng, n_bs);
    // M * blkdiag(I_R, 0) keeps only the first R columns of M.
    let m_r = m.columns(0, rank);
    let s_r = s.columns(0, rank);
    let scale = (gain.max(0.0) * n_bs as f64 / rank as f64).sqrt();
    Ok(m_r * s_r.adjoint() * Complex64::new(scale, 0.0))
}

/// `H_d + sum_n H_re,n diag(theta_n) H_s,n`, or `H_d` when the surfaces are off.
pub fn compose_effective(channels: &ChannelSet, phases: &PhaseConfig) -> Result<CMat> {
    let theta = match phases {
        PhaseConfig::Off => return Ok(channels.h_direct.clone()),
        PhaseConfig::Active(theta) => theta,
    };
    if theta.len() != channels.h_bs_ris.len() {
        return Err(dim_mismatch("phase vectors", channels.h_bs_ris.len(), theta.len()));
    }
    let mut h = channels.h_direct.clone();
    let mut offset = 0;
    for ((re, s), th) in channels.h_reflect.iter().zip(&channels.h_bs_ris).zip(theta) {
        if th.len() != s.nrows() {
            return Err(dim_mismatch("phase vector length", s.nrows(), th.len()));
        }
        check_unimodular(th.as_slice(), offset)?;
        offset += th.len();
        // diag(theta) * H_s scales row i of H_s by theta_i.
        let mut scaled = s.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= th[i];
        }
        h += re * scaled;
    }
    Ok(h)
}

/// Draws `n` positions area-uniformly from a disk.
pub fn sample_disk<R: Rng + ?Sized>(rng: &mut R, center: [f64; 2], radius: f64, n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let phi: f64 = rng.random::<f64>() * 2.0 * PI;
            let rho = radius * u.sqrt();
            [center[0] + rho * phi.cos(), center[1] + rho * phi.sin()]
        })
        .collect()
}

/// Unit-gain fading realization of one link.
fn draw_fading<R: Rng + ?Sized>(rng: &mut R, spec: &FadingSpec, rows: usize, cols: usize) -> Result<CMat> {
    match *spec {
        FadingSpec::Rayleigh => Ok(gen_rayleigh(rng, rows, cols, 1.0)),
        FadingSpec::Rician { rician_factor_db } => {
            let aoa = rng.random::<f64>() * 2.0 * PI;
            let aod = rng.random::<f64>() * 2.0 * PI;
            Ok(gen_rician(rng, rows, cols, 1.0, rician_factor_db, aoa, aod))
        }
        FadingSpec::KroneckerRank { rank } => gen_kronecker_rank(rng, rows, cols, rank, 1.0),
    }
}

fn scale_rows(m: &mut CMat, amplitudes: &[f64]) {
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= Complex64::new(amplitudes[i], 0.0);
    }
}

/// Draws user positions and then every sub-channel of one trial.
///
/// Draw order is fixed: user positions, `H_d`, then `(H_s,n, H_re,n)` per
/// surface. Two configs that differ only in surface size therefore share the
/// same users and direct channel for a given rng state.
pub fn build_scenario_channels<R: Rng + ?Sized>(
    rng: &mut R,
    config: &ScenarioConfig,
) -> Result<(Geometry, ChannelSet)> {
    config.validate()?;
    let dims = &config.dimensions;
    let geo = &config.geometry;
    let users = sample_disk(rng, geo.user_center, geo.user_radius, dims.n_users);
    let n_ms = dims.n_ms;
    let r = dims.r();

    // Per receive-row amplitude of the direct link, including the user penalty.
    let extra = 10f64.powf(-config.extra_loss_db / 10.0);
    let mut direct_amp = Vec::with_capacity(r);
    for (k, &pos) in users.iter().enumerate() {
        let mut gain = path_loss_linear(&config.pathloss.direct, distance(geo.bs_position, pos))?;
        if config.extra_loss_users.contains(&k) {
            gain *= extra;
        }
        direct_amp.extend(std::iter::repeat(gain.sqrt()).take(n_ms));
    }
    let mut h_direct = draw_fading(rng, &config.fading.direct, r, dims.n_bs)?;
    scale_rows(&mut h_direct, &direct_amp);

    let mut h_reflect = Vec::with_capacity(geo.ris_positions.len());
    let mut h_bs_ris = Vec::with_capacity(geo.ris_positions.len());
    for (&ris, &n_ris) in geo.ris_positions.iter().zip(&dims.n_ris_elements) {
        let gain_s = path_loss_linear(&config.pathloss.bs_ris, distance(geo.bs_position, ris))?;
        let h_s = draw_fading(rng, &config.fading.bs_ris, n_ris, dims.n_bs)?
            * Complex64::new(gain_s.sqrt(), 0.0);

        let mut reflect_amp = Vec::with_capacity(r);
        for &pos in &users {
            let g = path_loss_linear(&config.pathloss.reflect, distance(ris, pos))?;
            reflect_amp.extend(std::iter::repeat(g.sqrt()).take(n_ms));
        }
        let mut h_re = draw_fading(rng, &config.fading.reflect, r, n_ris)?;
        scale_rows(&mut h_re, &reflect_amp);

        h_bs_ris.push(h_s);
        h_reflect.push(h_re);
    }

    let geometry = Geometry {
        bs_position: geo.bs_position,
        ris_positions: geo.ris_positions.clone(),
        user_positions: users,
    };
    Ok((geometry, ChannelSet::new(h_direct, h_reflect, h_bs_ris)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, ONE};
    use nalgebra::SVD;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn singular_values(m: &CMat) -> Vec<f64> {
        let mut s: Vec<f64> = SVD::new(m.clone(), false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    #[test]
    fn path_loss_values() {
        let p = PathLossParams::new(30.0, 3.76).unwrap();
        assert!((path_loss_linear(&p, 1.0).unwrap() - 1e-3).abs() < 1e-18);

        // 30 + 22 * log10(200) = 80.6227 dB
        let p = PathLossParams::new(30.0, 2.2).unwrap();
        let g = path_loss_linear(&p, 200.0).unwrap();
        assert!((-10.0 * g.log10() - 80.622_7).abs() < 1e-3, "{}", -10.0 * g.log10());

        // User at (200, 30) from the BS at the origin: d = 202.2375 m.
        let p = PathLossParams::new(30.0, 3.76).unwrap();
        let d = distance([0.0, 0.0], [200.0, 30.0]);
        assert!((d - 202.237_484).abs() < 1e-5);
        let g = path_loss_linear(&p, d).unwrap();
        assert!((-10.0 * g.log10() - 116.700_1).abs() < 1e-3, "{}", -10.0 * g.log10());

        assert!(path_loss_linear(&p, 0.0).is_err());
        assert!(path_loss_linear(&p, -3.0).is_err());
        assert!(path_loss_linear(&p, 10.0).unwrap() > path_loss_linear(&p, 11.0).unwrap());
    }

    #[test]
    fn steering_vector_cases() {
        assert_eq!(steering_vector(1, 0.7)[0], ONE);
        let a = steering_vector(4, 0.0);
        assert!(a.iter().all(|z| (*z - ONE).norm() < 1e-15));
        let b = steering_vector(2, PI / 2.0);
        assert!((b[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rayleigh_statistics_and_determinism() {
        assert!(gen_rayleigh(&mut rng(0), 3, 4, 0.0).iter().all(|z| *z == Complex64::new(0.0, 0.0)));
        let m = gen_rayleigh(&mut rng(1), 100, 100, 2.0);
        let mean = m.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e4;
        assert!((mean - 2.0).abs() < 0.1, "{mean}");
        assert_eq!(gen_rayleigh(&mut rng(9), 5, 5, 1.0), gen_rayleigh(&mut rng(9), 5, 5, 1.0));
    }

    #[test]
    fn rician_limits() {
        let los_fraction = 10f64.powf(0.6) / (1.0 + 10f64.powf(0.6));
        assert!((los_fraction - 0.7992).abs() < 1e-4);

        let m = gen_rician(&mut rng(2), 8, 6, 1.0, f64::INFINITY, 0.3, 1.1);
        let s = singular_values(&m);
        assert!(s[1] / s[0] < 1e-12);

        // kappa -> 0 is the scatter term alone, drawn from the same stream.
        let pure = gen_rician(&mut rng(3), 8, 6, 1.5, f64::NEG_INFINITY, 0.3, 1.1);
        let reference = gen_rayleigh(&mut rng(3), 8, 6, 1.5);
        assert!(frobenius(&(pure - reference)) < 1e-12);

        let mut r = rng(4);
        let n = 400;
        let mean: f64 = (0..n)
            .map(|_| gen_rician(&mut r, 8, 8, 2.0, 6.0, 0.4, 2.0).iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum::<f64>()
            / n as f64;
        assert!((mean / (64.0 * 2.0) - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn kronecker_rank_and_gain() {
        let mut r = rng(5);
        let full = gen_kronecker_rank(&mut r, 4, 4, 4, 1.0).unwrap();
        assert!(singular_values(&full)[3] > 1e-6);

        for rank in 1..=3 {
            let m = gen_kronecker_rank(&mut r, 10, 8, rank, 1.0).unwrap();
            let s = singular_values(&m);
            assert!(s[rank] / s[0] < 1e-10, "rank {rank}: {s:?}");
            assert!(s[rank - 1] / s[0] > 1e-6);
        }

        let draws = 1000;
        let mean: f64 = (0..draws)
            .map(|_| {
                gen_kronecker_rank(&mut r, 8, 16, 2, 3.0)
                    .unwrap()
                    .iter()
                    .map(|z| z.norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / draws as f64;
        let expected = 3.0 * 16.0 * 8.0;
        assert!((mean / expected - 1.0).abs() < 0.05, "{mean} vs {expected}");

        assert!(gen_kronecker_rank(&mut r, 4, 6, 0, 1.0).is_err());
        assert!(gen_kronecker_rank(&mut r, 4, 6, 5, 1.0).is_err());
    }

    fn small_set(seed: u64) -> ChannelSet {
        let mut r = rng(seed);
        ChannelSet::new(
            cn01_matrix(&mut r, 2, 2),
            vec![cn01_matrix(&mut r, 2, 3)],
            vec![cn01_matrix(&mut r, 3, 2)],
        )
        .unwrap()
    }

    #[test]
    fn compose_off_and_zero_reflect() {
        let set = small_set(6);
        assert_eq!(compose_effective(&set, &PhaseConfig::Off).unwrap(), set.h_direct);

        let mut zero = set.clone();
        zero.h_reflect[0] = CMat::zeros(2, 3);
        let theta = PhaseConfig::from_concatenated(
            &CVec::from_fn(3, |i, _| Complex64::from_polar(1.0, i as f64)),
            &[3],
        )
        .unwrap();
        assert_eq!(compose_effective(&zero, &theta).unwrap(), zero.h_direct);
    }

    #[test]
    fn compose_matches_entrywise_sum() {
        let set = small_set(7);
        let h = compose_effective(&set, &PhaseConfig::all_ones(&[3])).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut expected = set.h_direct[(i, j)];
                for n in 0..3 {
                    expected += set.h_reflect[0][(i, n)] * set.h_bs_ris[0][(n, j)];
                }
                assert!((h[(i, j)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn compose_rejects_bad_phases() {
        let set = small_set(8);
        let bad = PhaseConfig::Active(vec![CVec::from_element(3, Complex64::new(1.1, 0.0))]);
        assert!(matches!(compose_effective(&set, &bad), Err(Error::NotUnimodular { .. })));
        let short = PhaseConfig::all_ones(&[2]);
        assert!(compose_effective(&set, &short).is_err());
        assert!(ChannelSet::new(CMat::zeros(2, 2), vec![CMat::zeros(3, 3)], vec![CMat::zeros(3, 2)]).is_err());
    }

    #[test]
    fn compose_is_affine_in_each_phase() {
        // The map theta -> H(theta) extended to all complex theta is affine, so the
        // midpoint second difference along one coordinate vanishes.
        let set = small_set(9);
        let (h_re, h_s) = set.concatenated();
        let eval = |theta: &CVec| {
            let mut h = set.h_direct.clone();
            for n in 0..theta.len() {
                h += h_re.column(n) * h_s.row(n) * theta[n];
            }
            h
        };
        let base = CVec::from_fn(3, |i, _| Complex64::from_polar(1.0, 0.3 * i as f64));
        for n in 0..3 {
            let (a, b) = (Complex64::new(0.2, -1.0), Complex64::new(-0.7, 0.4));
            let mut ta = base.clone();
            ta[n] = a;
            let mut tb = base.clone();
            tb[n] = b;
            let mut tm = base.clone();
            tm[n] = (a + b) * 0.5;
            let second = eval(&ta) + eval(&tb) - eval(&tm) * Complex64::new(2.0, 0.0);
            assert!(frobenius(&second) < 1e-12);
        }
        // On the unit circle the affine extension agrees with compose_effective.
        let direct = compose_effective(&set, &PhaseConfig::from_concatenated(&base, &[3]).unwrap()).unwrap();
        assert!(frobenius(&(direct - eval(&base))) < 1e-13);
    }

    #[test]
    fn multi_surface_sum_matches_concatenation() {
        let mut r = rng(10);
        let set = ChannelSet::new(
            cn01_matrix(&mut r, 3, 4),
            vec![cn01_matrix(&mut r, 3, 2), cn01_matrix(&mut r, 3, 5)],
            vec![cn01_matrix(&mut r, 2, 4), cn01_matrix(&mut r, 5, 4)],
        )
        .unwrap();
        let theta = CVec::from_fn(7, |i, _| Complex64::from_polar(1.0, 1.3 * i as f64));
        let phases = PhaseConfig::from_concatenated(&theta, &set.ris_sizes()).unwrap();
        let (h_re, h_s) = set.concatenated();
        let concat = &set.h_direct + h_re * CMat::from_diagonal(&theta) * h_s;
        let summed = compose_effective(&set, &phases).unwrap();
        assert!(frobenius(&(concat - summed)) < 1e-12);
    }
}
