//! Waterfilling and its rank-constrained variant.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMat};

const BISECTION_MAX_ITER: usize = 200;
const BISECTION_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillAllocation {
    pub levels: Vec<f64>,
    pub water_level: f64,
    pub support: Vec<usize>,
}

impl WaterfillAllocation {
    pub fn total(&self) -> f64 {
        self.levels.iter().sum()
    }
}

fn poured(bases: &[f64], level: f64) -> f64 {
    bases.iter().map(|&b| (level - b).max(0.0)).sum()
}

/// `q_i = max(0, nu - base_i)` with `sum q_i = budget`.
///
/// Bases may be `+inf` (channels that can never be active).
pub fn waterfill(bases: &[f64], budget: f64) -> Result<WaterfillAllocation> {
    if bases.iter().any(|b| b.is_nan() || *b == f64::NEG_INFINITY) || !(budget >= 0.0) || !budget.is_finite() {
        return Err(Error::Domain(format!("invalid waterfilling input (budget {budget})")));
    }
    let lowest = bases.iter().copied().fold(f64::INFINITY, f64::min);
    if bases.is_empty() || !lowest.is_finite() {
        if budget > 0.0 {
            return Err(Error::Domain("no finite base to pour into".into()));
        }
        return Ok(WaterfillAllocation {
            levels: vec![0.0; bases.len()],
            water_level: lowest,
            support: Vec::new(),
        });
    }
    if budget == 0.0 {
        return Ok(WaterfillAllocation {
            levels: vec![0.0; bases.len()],
            water_level: lowest,
            support: Vec::new(),
        });
    }

    // Level sits in [lowest, lowest + budget]: pouring everything on the
    // lowest base already reaches the budget.
    let (mut lo, mut hi) = (lowest, lowest + budget);
    let tol = BISECTION_REL_TOL * budget.max(1.0);
    let mut level = hi;
    for _ in 0..BISECTION_MAX_ITER {
        level = 0.5 * (lo + hi);
        let total = poured(bases, level);
        if (total - budget).abs() <= tol {
            break;
        }
        if total > budget {
            hi = level;
        } else {
            lo = level;
        }
    }

    // Solve exactly on the identified active set so the budget is met to
    // round-off, then re-derive the levels from it.
    let support: Vec<usize> = (0..bases.len()).filter(|&i| bases[i] < level).collect();
    if !support.is_empty() {
        let exact = (budget + support.iter().map(|&i| bases[i]).sum::<f64>()) / support.len() as f64;
        if support.iter().all(|&i| bases[i] < exact) {
            level = exact;
        }
    }
    let levels: Vec<f64> = bases.iter().map(|&b| (level - b).max(0.0)).collect();
    let support = (0..bases.len()).filter(|&i| levels[i] > 0.0).collect();
    Ok(WaterfillAllocation {
        levels,
        water_level: level,
        support,
    })
}

#[derive(Debug, Clone)]
pub struct RankConstrainedSolution {
    pub q: CMat,
    pub allocation: WaterfillAllocation,
    /// Eigenvalues of `C + Q*`, descending.
    pub filled_spectrum: Vec<f64>,
    /// Eigenvalues of `C`, descending.
    pub base_spectrum: Vec<f64>,
}

/// Maximizes `det(C + Q)` over PSD `Q` with `tr(Q) <= budget` and
/// `rank(Q) <= rank_limit` by waterfilling over the `rank_limit` smallest
/// eigenvalues of `C`. The same `Q` minimizes `tr((C + Q)^-1)` on that set.
pub fn rank_constrained_waterfill(c_matrix: &CMat, budget: f64, rank_limit: usize) -> Result<RankConstrainedSolution> {
    let r = c_matrix.nrows();
    if c_matrix.ncols() != r {
        return Err(Error::Domain("C must be square".into()));
    }
    if rank_limit == 0 || rank_limit > r {
        return Err(Error::Domain(format!("rank limit {rank_limit} outside 1..={r}")));
    }
    let (phi, w) = hermitian_eigen(c_matrix);
    let first = r - rank_limit;
    let bases: Vec<f64> = phi[first..].iter().map(|&p| p.max(0.0)).collect();
    let allocation = waterfill(&bases, budget)?;

    let mut q = CMat::zeros(r, r);
    for (k, &amount) in allocation.levels.iter().enumerate() {
        if amount > 0.0 {
            let col = w.column(first + k);
            q += &col * col.adjoint() * Complex64::new(amount, 0.0);
        }
    }

    let mut filled: Vec<f64> = phi.iter().map(|p| p.max(0.0)).collect();
    for (k, &amount) in allocation.levels.iter().enumerate() {
        filled[first + k] += amount;
    }
    filled.sort_by(|a, b| b.total_cmp(a));

    Ok(RankConstrainedSolution {
        q,
        allocation,
        filled_spectrum: filled,
        base_spectrum: phi,
    })
}
