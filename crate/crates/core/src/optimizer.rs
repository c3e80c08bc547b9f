//! Element-wise coordinate optimization of the surface phases.
//!
//! Isolating element `n` writes the channel as `H = A_n + theta_n b c^H`
//! with `b` the `n`-th column of `H_re` and `c^H` the `n`-th row of `H_s`.
//! The Gram matrix becomes a rank-two update
//!
//! ```text
//! H H^H = M + theta b d^H + conj(theta) d b^H,
//! M = A A^H + |c|^2 b b^H,   d = A c,
//! ```
//!
//! so both objectives reduce to scalar functions of `theta_n` on the unit
//! circle, using `beta = d^H M^-1 b`, `gamma = d^H M^-1 d`, `delta = b^H M^-1 b`:
//!
//! * `det(H H^H) = det(M) (|1 + theta beta|^2 - gamma delta)`, maximized in
//!   closed form by `theta = exp(-j arg beta)`;
//! * `tr((H H^H)^-1) = tr(M^-1) - (2 Re(theta beta2) + 2 Re(conj(beta) beta2)
//!   - gamma delta2 - delta gamma2) / (|1 + theta beta|^2 - gamma delta)` with the
//!   `M^-2` counterparts `beta2, gamma2, delta2`, minimized by a grid scan plus
//!   golden-section refinement.
//!
//! Multi-surface channels are optimized through their concatenated form.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::channel::{check_unimodular, ChannelSet};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{cholesky, gram, hermitian_part, log2_det_hpd, trace_re, CMat, CVec};

const GRID_POINTS: usize = 64;
const GOLDEN_TOL_RAD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseInit {
    RandomUniform,
    Given(CVec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub max_sweeps: usize,
    /// Stop once `|f_k - f_{k-1}| <= rel_tolerance * max(|f_{k-1}|, 1)`.
    pub rel_tolerance: f64,
    /// Diagonal loading, relative to `tr(H H^H) / r`, used only when `M`
    /// fails to factor.
    pub regularization: f64,
    pub init: PhaseInit,
    pub randomized_order: bool,
    /// Re-evaluate the objective from scratch after every element update and
    /// record the worst regression in the trace. Slow; meant for tests.
    pub verify_updates: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 200,
            rel_tolerance: 1e-10,
            regularization: 1e-12,
            init: PhaseInit::RandomUniform,
            randomized_order: false,
            verify_updates: false,
        }
    }
}

impl OptimizerConfig {
    pub fn with_init(mut self, theta: CVec) -> Self {
        self.init = PhaseInit::Given(theta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || !(self.rel_tolerance > 0.0) || !(self.regularization >= 0.0) {
            return Err(Error::Domain(format!("invalid optimizer config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Maximize `log2 det(H H^H)`.
    GeoMean,
    /// Minimize `tr((H H^H)^-1)`.
    HarMean,
}

impl Objective {
    /// Objective value of a Gram matrix in the optimizer's own units.
    pub fn evaluate(self, g: &CMat) -> Result<f64> {
        let value = match self {
            Objective::GeoMean => log2_det_hpd(g)?,
            Objective::HarMean => trace_re(&cholesky(g)?.inverse()),
        };
        if !value.is_finite() {
            return Err(Error::Optimizer(format!("non-finite objective {value}")));
        }
        Ok(value)
    }

    /// Positive when `new` is worse than `old`, relative to `max(|old|, 1)`.
    fn regression(self, old: f64, new: f64) -> f64 {
        let worse = match self {
            Objective::GeoMean => old - new,
            Objective::HarMean => new - old,
        };
        worse / old.abs().max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerTrace {
    /// Objective at initialization followed by one value per sweep, each
    /// evaluated from a freshly composed channel.
    pub objective_per_sweep: Vec<f64>,
    pub sweeps_run: usize,
    pub converged: bool,
    pub final_theta: CVec,
    /// Element updates that needed diagonal loading.
    pub regularized_updates: usize,
    /// Worst relative per-update regression seen with `verify_updates`.
    pub worst_update_regression: f64,
}

/// `n` phases `exp(j phi)` with `phi` uniform on `[0, 2 pi)`.
pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| Complex64::from_polar(1.0, rng.random::<f64>() * 2.0 * PI))
}

pub fn optimize_geo_mean<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<(CVec, OptimizerTrace)> {
    optimize(channels, Objective::GeoMean, config, rng)
}

pub fn optimize_har_mean<R: Rng + ?Sized>(
    channels: &ChannelSet,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<(CVec, OptimizerTrace)> {
    optimize(channels, Objective::HarMean, config, rng)
}

/// Scalar quantities of one element's rank-two update.
struct ElementTerms {
    beta: Complex64,
    gamma: f64,
    delta: f64,
    beta2: Complex64,
    gamma2: f64,
    delta2: f64,
    /// `M` itself, kept so the Gram matrix can be rebuilt after the update.
    m: CMat,
    d: CVec,
}

impl ElementTerms {
    fn det_factor(&self, theta: Complex64) -> f64 {
        (ONE_C + theta * self.beta).norm_sqr() - self.gamma * self.delta
    }

    /// `tr((H H^H)^-1) - tr(M^-1)` as a function of the element phase.
    fn trace_shift(&self, theta: Complex64) -> f64 {
        let num = 2.0 * (theta * self.beta2).re + 2.0 * (self.beta.conj() * self.beta2).re
            - self.gamma * self.delta2
            - self.delta * self.gamma2;
        -num / self.det_factor(theta)
    }
}

const ONE_C: Complex64 = Complex64 { re: 1.0, im: 0.0 };

struct State<'a> {
    h_d: &'a CMat,
    h_re: CMat,
    h_s: CMat,
    theta: CVec,
    h: CMat,
    g: CMat,
    loading: f64,
    regularized_updates: usize,
}

impl<'a> State<'a> {
    fn new(h_d: &'a CMat, h_re: CMat, h_s: CMat, theta: CVec, regularization: f64) -> Self {
        let mut s = Self {
            h_d,
            h_re,
            h_s,
            theta,
            h: CMat::zeros(0, 0),
            g: CMat::zeros(0, 0),
            loading: 0.0,
            regularized_updates: 0,
        };
        s.refresh();
        let r = s.g.nrows().max(1) as f64;
        s.loading = regularization * trace_re(&s.g) / r;
        s
    }

    /// Recompose `H` and its Gram matrix from scratch.
    fn refresh(&mut self) {
        let mut scaled = self.h_s.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row *= self.theta[i];
        }
        self.h = self.h_d + &self.h_re * scaled;
        self.g = gram(&self.h);
    }

    fn terms(&mut self, n: usize) -> Result<ElementTerms> {
        let b: CVec = self.h_re.column(n).into_owned();
        let c: CVec = self.h_s.row(n).adjoint();
        let c_norm2 = c.norm_squared();
        let hc = &self.h * &c;
        let th = self.theta[n];
        let d = &hc - &b * (th * c_norm2);

        let b_hc = &b * hc.adjoint();
        let mut m = &self.g - &b_hc * th - b_hc.adjoint() * th.conj()
            + &b * b.adjoint() * Complex64::new(2.0 * c_norm2, 0.0);
        m = hermitian_part(&m);

        let chol = match cholesky(&m) {
            Ok(ch) => ch,
            Err(_) => {
                self.regularized_updates += 1;
                let loaded = &m + CMat::identity(m.nrows(), m.ncols()) * Complex64::new(self.loading, 0.0);
                cholesky(&loaded).map_err(|_| {
                    Error::Optimizer(format!("element {n}: M singular even with loading {:e}", self.loading))
                })?
            }
        };
        let x = chol.solve(&b);
        let y = chol.solve(&d);
        let dot = |u: &CVec, v: &CVec| u.dotc(v);
        Ok(ElementTerms {
            beta: dot(&d, &x),
            gamma: dot(&d, &y).re,
            delta: dot(&b, &x).re,
            beta2: dot(&y, &x),
            gamma2: y.norm_squared(),
            delta2: x.norm_squared(),
            m,
            d,
        })
    }

    fn apply(&mut self, n: usize, new: Complex64, terms: &ElementTerms) {
        let old = self.theta[n];
        let b = self.h_re.column(n).into_owned();
        let delta = new - old;
        self.h += &b * self.h_s.row(n) * delta;
        let b_d = &b * terms.d.adjoint();
        self.g = hermitian_part(&(&terms.m + &b_d * new + b_d.adjoint() * new.conj()));
        self.theta[n] = new;
    }
}

fn best_geo_phase(terms: &ElementTerms, current: Complex64) -> Option<Complex64> {
    if terms.beta.norm() == 0.0 {
        return None;
    }
    let candidate = Complex64::from_polar(1.0, -terms.beta.arg());
    (terms.det_factor(candidate) > terms.det_factor(current)).then_some(candidate)
}

fn best_har_phase(terms: &ElementTerms, current: Complex64) -> Option<Complex64> {
    let f = |angle: f64| terms.trace_shift(Complex64::from_polar(1.0, angle));
    let step = 2.0 * PI / GRID_POINTS as f64;
    let start = current.arg();
    let current_val = f(start);
    let (mut best_angle, mut best_val) = (start, current_val);
    for k in 1..GRID_POINTS {
        let a = start + k as f64 * step;
        let v = f(a);
        if v < best_val {
            best_angle = a;
            best_val = v;
        }
    }
    let (angle, value) = golden_section(&f, best_angle - step, best_angle + step, GOLDEN_TOL_RAD);
    let (angle, value) = if value < best_val { (angle, value) } else { (best_angle, best_val) };
    (value < current_val).then(|| Complex64::from_polar(1.0, angle))
}

/// Minimizes `f` on `[lo, hi]` by golden-section search.
fn golden_section(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 { (x1, f1) } else { (x2, f2) }
}

pub fn optimize<R: Rng + ?Sized>(
    channels: &ChannelSet,
    objective: Objective,
    config: &OptimizerConfig,
    rng: &mut R,
) -> Result<(CVec, OptimizerTrace)> {
    config.validate()?;
    let (h_re, h_s) = channels.concatenated();
    let n_elements = h_s.nrows();
    let theta0 = match &config.init {
        PhaseInit::RandomUniform => random_phases(rng, n_elements),
        PhaseInit::Given(theta) => {
            if theta.len() != n_elements {
                return Err(dim_mismatch("initial phases", n_elements, theta.len()));
            }
            check_unimodular(theta.as_slice(), 0)?;
            theta.clone()
        }
    };

    let mut state = State::new(&channels.h_direct, h_re, h_s, theta0, config.regularization);
    let mut objectives = vec![objective.evaluate(&state.g)?];
    let mut order: Vec<usize> = (0..n_elements).collect();
    let mut converged = false;
    let mut sweeps_run = 0;
    let mut worst_regression = f64::NEG_INFINITY;

    while sweeps_run < config.max_sweeps {
        if config.randomized_order {
            order.shuffle(rng);
        }
        let mut verified = if config.verify_updates { Some(*objectives.last().unwrap()) } else { None };
        for &n in &order {
            let terms = state.terms(n)?;
            let current = state.theta[n];
            let update = match objective {
                Objective::GeoMean => best_geo_phase(&terms, current),
                Objective::HarMean => best_har_phase(&terms, current),
            };
            if let Some(new) = update {
                state.apply(n, new, &terms);
                if let Some(prev) = verified.as_mut() {
                    let value = objective.evaluate(&gram(&compose_concat(&state, &state.theta)))?;
                    worst_regression = worst_regression.max(objective.regression(*prev, value));
                    *prev = value;
                }
            }
        }
        sweeps_run += 1;
        state.refresh();
        let value = objective.evaluate(&state.g)?;
        let prev = *objectives.last().unwrap();
        objectives.push(value);
        if (value - prev).abs() <= config.rel_tolerance * prev.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    for z in state.theta.iter_mut() {
        // Keep exact unit modulus after many polar round-trips.
        *z /= z.norm();
    }
    let theta = state.theta.clone();
    Ok((
        theta.clone(),
        OptimizerTrace {
            objective_per_sweep: objectives,
            sweeps_run,
            converged,
            final_theta: theta,
            regularized_updates: state.regularized_updates,
            worst_update_regression: worst_regression,
        },
    ))
}

fn compose_concat(state: &State<'_>, theta: &CVec) -> CMat {
    let mut scaled = state.h_s.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= theta[i];
    }
    state.h_d + &state.h_re * scaled
}
