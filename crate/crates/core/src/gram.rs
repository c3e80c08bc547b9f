//! Exact split of the Gram matrix into a phase-independent part and a
//! low-rank phase-controlled part.
//!
//! With the SVD `H_s = sum_l sigma_l u_l v_l^H` and `theta_bar = [theta; 1]`,
//!
//! ```text
//! H H^H = C + Q,   C = H_d P H_d^H,   P = I - sum_l v_l v_l^H,
//!                  Q = sum_l D_l theta_bar theta_bar^H D_l^H,
//!                  D_l = [H_re diag(u_l) sigma_l, H_d v_l].
//! ```
//!
//! `Q` is PSD with rank at most `rank(H_s)`, which is what limits how many
//! eigenvalues a surface can lift.


use crate::channel::{check_unimodular, ChannelSet};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, hermitian_part, CMat, CVec, ONE};

/// Default relative singular-value cutoff for the numerical rank of `H_s`.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SvdTriplet {
    pub sigma: f64,
    pub u: CVec,
    pub v: CVec,
}

#[derive(Debug, Clone)]
pub struct GramDecomposition {
    pub c_matrix: CMat,
    pub d_factors: Vec<CMat>,
    pub svd_triplets: Vec<SvdTriplet>,
    pub projector: CMat,
    pub n_elements: usize,
}

impl GramDecomposition {
    /// Number of retained singular values of `H_s`.
    pub fn rank_s(&self) -> usize {
        self.svd_triplets.len()
    }

    pub fn r(&self) -> usize {
        self.c_matrix.nrows()
    }
}

/// `theta_bar = [theta; 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPhase {
    theta_bar: CVec,
}

impl AugmentedPhase {
    pub fn new(theta: &CVec) -> Result<Self> {
        check_unimodular(theta.as_slice(), 0)?;
        let n = theta.len();
        let theta_bar = CVec::from_fn(n + 1, |i, _| if i < n { theta[i] } else { ONE });
        Ok(Self { theta_bar })
    }

    pub fn as_vector(&self) -> &CVec {
        &self.theta_bar
    }
}

pub fn decompose(h_d: &CMat, h_re: &CMat, h_s: &CMat, rank_tolerance: f64) -> Result<GramDecomposition> {
    let (r, n_bs) = h_d.shape();
    let n_ris = h_s.nrows();
    if h_re.nrows() != r || h_re.ncols() != n_ris {
        return Err(dim_mismatch("H_re shape", format!("{r}x{n_ris}"), format!("{}x{}", h_re.nrows(), h_re.ncols())));
    }
    if h_s.ncols() != n_bs {
        return Err(dim_mismatch("H_s columns", n_bs, h_s.ncols()));
    }
    if !(rank_tolerance > 0.0 && rank_tolerance < 1.0) {
        return Err(Error::Domain(format!("rank tolerance {rank_tolerance} outside (0, 1)")));
    }

    let triplets = svd_triplets(h_s, rank_tolerance);

    let mut projector = CMat::identity(n_bs, n_bs);
    for t in &triplets {
        projector -= &t.v * t.v.adjoint();
    }
    let c_matrix = hermitian_part(&(h_d * &projector * h_d.adjoint()));

    let d_factors = triplets
        .iter()
        .map(|t| {
            let mut d = CMat::zeros(r, n_ris + 1);
            for n in 0..n_ris {
                let w = t.u[n] * t.sigma;
                d.column_mut(n).copy_from(&(h_re.column(n) * w));
            }
            d.column_mut(n_ris).copy_from(&(h_d * &t.v));
            d
        })
        .collect();

    Ok(GramDecomposition {
        c_matrix,
        d_factors,
        svd_triplets: triplets,
        projector,
        n_elements: n_ris,
    })
}

/// Decomposition of a (possibly multi-surface) channel set via its
/// concatenated single-surface form.
pub fn decompose_channels(channels: &ChannelSet, rank_tolerance: f64) -> Result<GramDecomposition> {
    let (h_re, h_s) = channels.concatenated();
    decompose(&channels.h_direct, &h_re, &h_s, rank_tolerance)
}

/// Singular triplets of `h_s` above `rank_tolerance * sigma_max`.
///
/// The right vectors come from the eigendecomposition of `H_s^H H_s`, which
/// stays orthonormal for rank-deficient inputs; `sigma` and `u` are then read
/// off `H_s v` directly so small singular values keep absolute accuracy.
fn svd_triplets(h_s: &CMat, rank_tolerance: f64) -> Vec<SvdTriplet> {
    if h_s.is_empty() {
        return Vec::new();
    }
    let (_, v) = hermitian_eigen(&(h_s.adjoint() * h_s));
    let mut triplets: Vec<SvdTriplet> = v
        .column_iter()
        .map(|col| {
            let w = h_s * col;
            let sigma = w.norm();
            SvdTriplet {
                sigma,
                u: if sigma > 0.0 { w.unscale(sigma) } else { w },
                v: col.into_owned(),
            }
        })
        .collect();
    triplets.sort_by(|a, b| b.sigma.total_cmp(&a.sigma));
    let sigma_max = triplets[0].sigma;
    if !(sigma_max > 0.0) {
        return Vec::new();
    }
    triplets.retain(|t| t.sigma > rank_tolerance * sigma_max);
    triplets
}

/// `Q = sum_l (D_l theta_bar)(D_l theta_bar)^H`.
pub fn assemble_q(decomp: &GramDecomposition, theta: &CVec) -> Result<CMat> {
    if theta.len() != decomp.n_elements {
        return Err(dim_mismatch("phase vector length", decomp.n_elements, theta.len()));
    }
    let theta_bar = AugmentedPhase::new(theta)?;
    let r = decomp.r();
    let mut q = CMat::zeros(r, r);
    for d in &decomp.d_factors {
        let x = d * theta_bar.as_vector();
        q += &x * x.adjoint();
    }
    Ok(hermitian_part(&q))
}

/// `M = sum_l D_l^H D_l`, so that `tr(Q) = theta_bar^H M theta_bar`.
pub fn trace_form(decomp: &GramDecomposition) -> CMat {
    let n = decomp.n_elements + 1;
    decomp
        .d_factors
        .iter()
        .fold(CMat::zeros(n, n), |acc, d| acc + d.adjoint() * d)
}

/// Upper bound `(N_RIS + 1) * lambda_max(M)` on `tr(Q)` over all unimodular phases.
pub fn trace_budget_bound(decomp: &GramDecomposition) -> f64 {
    if decomp.d_factors.is_empty() {
        return 0.0;
    }
    let lambda_max = hermitian_eigenvalues(&trace_form(decomp))
        .first()
        .copied()
        .unwrap_or(0.0)
        .max(0.0);
    (decomp.n_elements as f64 + 1.0) * lambda_max
}

/// Alternative budget `tr(M)`, the expected `tr(Q)` under uniform random phases.
pub fn trace_budget_mean(decomp: &GramDecomposition) -> f64 {
    let m = trace_form(decomp);
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Upper limit on the number of eigenvalues the surfaces can move.
pub fn controllable_ev_count(ranks: &[usize]) -> usize {
    ranks.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{compose_effective, gen_kronecker_rank, PhaseConfig};
    use crate::linalg::{cn01_matrix, frobenius, gram};
    use crate::optimizer::random_phases;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn instance(seed: u64, r: usize, n_bs: usize, n_ris: usize, rank: usize) -> ChannelSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ChannelSet::new(
            cn01_matrix(&mut rng, r, n_bs),
            vec![cn01_matrix(&mut rng, r, n_ris)],
            vec![gen_kronecker_rank(&mut rng, n_ris, n_bs, rank, 1.0).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn zero_bs_ris_channel() {
        let mut set = instance(1, 3, 4, 5, 2);
        set.h_bs_ris[0] = CMat::zeros(5, 4);
        let d = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank_s(), 0);
        assert!(d.d_factors.is_empty());
        assert!(frobenius(&(&d.c_matrix - gram(&set.h_direct))) < 1e-12);
        let q = assemble_q(&d, &CVec::from_element(5, ONE)).unwrap();
        assert_eq!(q, CMat::zeros(3, 3));
        assert_eq!(trace_budget_bound(&d), 0.0);
    }

    #[test]
    fn rank_one_projector() {
        let set = instance(2, 3, 4, 5, 1);
        let d = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(d.rank_s(), 1);
        assert_eq!(d.d_factors.len(), 1);
        let v = &d.svd_triplets[0].v;
        let expected = CMat::identity(4, 4) - v * v.adjoint();
        assert!(frobenius(&(&d.projector - expected)) < 1e-14);
    }

    #[test]
    fn identity_holds_for_random_phases() {
        let set = instance(3, 3, 4, 5, 4);
        let d = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        for _ in 0..20 {
            let theta = random_phases(&mut rng, 5);
            let h = compose_effective(&set, &PhaseConfig::from_concatenated(&theta, &[5]).unwrap()).unwrap();
            let g = gram(&h);
            let cq = &d.c_matrix + assemble_q(&d, &theta).unwrap();
            assert!(frobenius(&(&g - cq)) / frobenius(&g) < 1e-10);
        }
    }

    #[test]
    fn projector_idempotent_and_hermitian() {
        let set = instance(4, 4, 9, 6, 3);
        let p = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap().projector;
        assert!(frobenius(&(&p * &p - &p)) < 1e-10);
        assert!(frobenius(&(&p - p.adjoint())) < 1e-12);
    }

    #[test]
    fn q_rank_limited() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for rank in 1..=3 {
            let set = instance(50 + rank as u64, 5, 8, 7, rank);
            let d = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap();
            let theta = random_phases(&mut rng, 7);
            let q = assemble_q(&d, &theta).unwrap();
            let ev = hermitian_eigenvalues(&q);
            assert!(ev[rank..].iter().all(|&x| x.abs() < 1e-10 * ev[0]), "{ev:?}");
            let m = trace_form(&d);
            let tb = AugmentedPhase::new(&theta).unwrap();
            let quad = (tb.as_vector().adjoint() * m * tb.as_vector())[(0, 0)].re;
            let tr: f64 = (0..5).map(|i| q[(i, i)].re).sum();
            assert!((quad - tr).abs() < 1e-10 * tr);
        }
    }

    #[test]
    fn rank_one_q_is_outer_product() {
        let set = instance(6, 3, 4, 5, 1);
        let d = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap();
        let theta = random_phases(&mut ChaCha8Rng::seed_from_u64(60), 5);
        let x = &d.d_factors[0] * AugmentedPhase::new(&theta).unwrap().as_vector();
        let q = assemble_q(&d, &theta).unwrap();
        assert!(frobenius(&(q - &x * x.adjoint())) < 1e-12);
    }

    #[test]
    fn budget_bound_dominates_random_search() {
        let set = instance(7, 3, 4, 4, 3);
        let d = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap();
        let bound = trace_budget_bound(&d);
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        let best = (0..10_000)
            .map(|_| {
                let q = assemble_q(&d, &random_phases(&mut rng, 4)).unwrap();
                (0..3).map(|i| q[(i, i)].re).sum::<f64>()
            })
            .fold(0.0f64, f64::max);
        assert!(bound >= best, "{bound} < {best}");
        assert!(trace_budget_mean(&d) <= bound);
    }

    #[test]
    fn budget_bound_identity_form() {
        // A single D with orthonormal columns gives M = I.
        let n = 3;
        let d = GramDecomposition {
            c_matrix: CMat::zeros(n + 1, n + 1),
            d_factors: vec![CMat::identity(n + 1, n + 1)],
            svd_triplets: vec![],
            projector: CMat::identity(2, 2),
            n_elements: n,
        };
        assert!((trace_budget_bound(&d) - (n as f64 + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn controllable_counts() {
        assert_eq!(controllable_ev_count(&[1]), 1);
        assert_eq!(controllable_ev_count(&[1, 1, 2]), 4);
        assert_eq!(controllable_ev_count(&[]), 0);
    }

    #[test]
    fn errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h_d = cn01_matrix(&mut rng, 2, 3);
        assert!(decompose(&h_d, &cn01_matrix(&mut rng, 3, 4), &cn01_matrix(&mut rng, 4, 3), 1e-10).is_err());
        assert!(decompose(&h_d, &cn01_matrix(&mut rng, 2, 4), &cn01_matrix(&mut rng, 4, 2), 1e-10).is_err());
        let set = instance(9, 2, 3, 4, 2);
        let d = decompose_channels(&set, DEFAULT_RANK_TOL).unwrap();
        assert!(assemble_q(&d, &CVec::from_element(3, ONE)).is_err());
    }
}
