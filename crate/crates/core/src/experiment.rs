//! Monte-Carlo experiment drivers and their CSV/JSON outputs.
//!
//! Every trial draws from its own ChaCha stream, selected by the trial index
//! under the configured seed, and trials are reduced in index order. Output
//! bytes therefore do not depend on the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{build_scenario_channels, compose_effective, ChannelSet, PhaseConfig};
use crate::error::{Error, Result};
use crate::optimizer::{optimize_geo_mean, optimize_har_mean, random_phases, PhaseInit};
use crate::rates::{dpc_sum_capacity, zf_sum_rate, PowerPoint, DEFAULT_DPC_MAX_ITER, DEFAULT_DPC_TOL};
use crate::scenario::{ExperimentKind, ScenarioConfig};
use crate::spectral::{gram_spectrum, high_snr_rate};

/// Phase configuration a record was evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    GeoMean,
    HarMean,
    Random,
    Off,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::GeoMean, Method::HarMean, Method::Random, Method::Off];

    pub fn label(self) -> &'static str {
        match self {
            Method::GeoMean => "GeoMean",
            Method::HarMean => "HarMean",
            Method::Random => "Random",
            Method::Off => "Off",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_index: usize,
    pub method: Method,
    /// Gram eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// DPC sum rate per power point, when evaluated for this method.
    pub dpc_rates: Option<Vec<f64>>,
    /// Zero-forcing sum rate per power point, when evaluated for this method.
    pub zf_rates: Option<Vec<f64>>,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub case: usize,
    pub trial_index: usize,
    pub message: String,
}

/// Records of one experiment case (one rank or one surface size).
#[derive(Debug, Clone)]
pub struct CaseResult {
    /// Rank of the BS-surface channel (eigenvalue runs), surface size
    /// (element sweeps) or the fixed surface size (SNR sweeps).
    pub case_value: usize,
    /// `records[t]` holds the four methods of the t-th successful trial.
    pub records: Vec<[TrialRecord; 4]>,
}

impl CaseResult {
    pub fn method(&self, trial: usize, method: Method) -> &TrialRecord {
        &self.records[trial][method as usize]
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub kind: ExperimentKind,
    pub cases: Vec<CaseResult>,
    pub powers_dbm: Vec<f64>,
    pub noise_dbm: f64,
    pub r: usize,
    pub failures: Vec<TrialFailure>,
}

pub fn trial_rng(seed: u64, trial_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index as u64);
    rng
}

struct TrialSpec<'a> {
    cfg: &'a ScenarioConfig,
    powers: &'a [PowerPoint],
    with_rates: bool,
}

fn run_trial(spec: &TrialSpec<'_>, trial_index: usize) -> Result<[TrialRecord; 4]> {
    let cfg = spec.cfg;
    let mut rng = trial_rng(cfg.seed, trial_index);
    let (_, channels) = build_scenario_channels(&mut rng, cfg)?;
    let theta_random = random_phases(&mut rng, channels.total_elements());

    let opt_cfg = cfg.optimizer.to_config(PhaseInit::Given(theta_random.clone()));
    let (theta_geo, geo_trace) = optimize_geo_mean(&channels, &opt_cfg, &mut rng)?;
    let (theta_har, har_trace) = optimize_har_mean(&channels, &opt_cfg, &mut rng)?;

    let sizes = channels.ris_sizes();
    let phases = [
        (Method::GeoMean, PhaseConfig::from_concatenated(&theta_geo, &sizes)?, geo_trace.sweeps_run),
        (Method::HarMean, PhaseConfig::from_concatenated(&theta_har, &sizes)?, har_trace.sweeps_run),
        (Method::Random, PhaseConfig::from_concatenated(&theta_random, &sizes)?, 0),
        (Method::Off, PhaseConfig::Off, 0),
    ];

    let records: Vec<TrialRecord> = phases
        .into_iter()
        .map(|(method, phase, sweeps)| evaluate(spec, &channels, trial_index, method, &phase, sweeps))
        .collect::<Result<_>>()?;
    Ok(records.try_into().expect("four methods"))
}

fn evaluate(
    spec: &TrialSpec<'_>,
    channels: &ChannelSet,
    trial_index: usize,
    method: Method,
    phase: &PhaseConfig,
    sweeps: usize,
) -> Result<TrialRecord> {
    let h = compose_effective(channels, phase)?;
    let eigenvalues = gram_spectrum(&h).values().to_vec();
    let (mut dpc_rates, mut zf_rates) = (None, None);
    if spec.with_rates {
        // DPC curves use the geometric-mean phases, linear curves the harmonic ones.
        if method != Method::HarMean {
            dpc_rates = Some(
                spec.powers
                    .iter()
                    .map(|pp| dpc_sum_capacity(&h, pp, DEFAULT_DPC_TOL, DEFAULT_DPC_MAX_ITER))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        if method != Method::GeoMean {
            zf_rates = Some(spec.powers.iter().map(|pp| zf_sum_rate(&h, pp)).collect::<Result<Vec<_>>>()?);
        }
    }
    Ok(TrialRecord {
        trial_index,
        method,
        eigenvalues,
        dpc_rates,
        zf_rates,
        sweeps,
    })
}

/// Runs the experiment selected by `config.experiment` on `threads` workers.
pub fn run_experiment(config: &ScenarioConfig, threads: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let with_rates = config.experiment != ExperimentKind::Eigenvalues;
    let powers: Vec<PowerPoint> = if with_rates {
        config
            .power_grid_dbm
            .iter()
            .map(|&p| PowerPoint::from_dbm(p, config.noise_dbm))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let case_configs: Vec<(usize, ScenarioConfig)> = match config.experiment {
        ExperimentKind::Eigenvalues => config
            .ranks()
            .into_iter()
            .map(|rank| (rank.unwrap_or(0), config.with_rank(rank)))
            .collect(),
        ExperimentKind::SnrSweep => vec![(config.dimensions.total_ris_elements(), config.clone())],
        ExperimentKind::ElementSweep => config
            .element_cases()
            .into_iter()
            .map(|sizes| (sizes.iter().sum(), config.with_elements(&sizes)))
            .collect(),
    };

    let mut cases = Vec::with_capacity(case_configs.len());
    let mut failures = Vec::new();
    for (case_idx, (case_value, cfg)) in case_configs.iter().enumerate() {
        let spec = TrialSpec {
            cfg,
            powers: &powers,
            with_rates,
        };
        let outcomes: Vec<Result<[TrialRecord; 4]>> =
            pool.install(|| (0..cfg.n_trials).into_par_iter().map(|t| run_trial(&spec, t)).collect());
        let mut records = Vec::with_capacity(outcomes.len());
        for (t, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(rec) => records.push(rec),
                Err(e) => {
                    log::warn!("case {case_value}, trial {t} skipped: {e}");
                    failures.push(TrialFailure {
                        case: case_idx,
                        trial_index: t,
                        message: e.to_string(),
                    });
                }
            }
        }
        cases.push(CaseResult {
            case_value: *case_value,
            records,
        });
    }

    Ok(ExperimentResult {
        kind: config.experiment,
        cases,
        powers_dbm: config.power_grid_dbm.clone(),
        noise_dbm: config.noise_dbm,
        r: config.dimensions.r(),
        failures,
    })
}

/// Eigenvalue experiment over the configured rank grid.
pub fn run_eigenvalue_experiment(config: &ScenarioConfig, threads: usize) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::Eigenvalues)?;
    run_experiment(config, threads)
}

pub fn run_snr_sweep(config: &ScenarioConfig, threads: usize) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::SnrSweep)?;
    run_experiment(config, threads)
}

pub fn run_element_sweep(config: &ScenarioConfig, threads: usize) -> Result<ExperimentResult> {
    expect_kind(config, ExperimentKind::ElementSweep)?;
    run_experiment(config, threads)
}

fn expect_kind(config: &ScenarioConfig, kind: ExperimentKind) -> Result<()> {
    if config.experiment != kind {
        return Err(Error::Config(format!(
            "config describes a {:?} experiment, not {kind:?}",
            config.experiment
        )));
    }
    Ok(())
}

/// Labels of the rate curves, in CSV order.
pub const RATE_SERIES: [&str; 13] = [
    "DPC-opt",
    "ZF-opt",
    "DPC-random",
    "ZF-random",
    "DPC-off",
    "ZF-off",
    "Geo-opt",
    "Har-opt",
    "Geo-random",
    "Har-random",
    "Geo-off",
    "Har-off",
    "Har-linear",
];

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `r log2` of the geometric and harmonic eigenvalue means.
fn mean_offsets(eigenvalues: &[f64]) -> (f64, f64) {
    let r = eigenvalues.len() as f64;
    let geo = eigenvalues.iter().map(|v| v.log2()).sum::<f64>();
    let har = r * (r / eigenvalues.iter().map(|v| 1.0 / v).sum::<f64>()).log2();
    (geo, har)
}

impl ExperimentResult {
    /// Per-trial values of a rate series at power index `p` of `case`.
    pub fn series(&self, case: usize, label: &str, p: usize) -> Vec<f64> {
        let snr = PowerPoint::from_dbm(self.powers_dbm[p], self.noise_dbm)
            .map(|pp| pp.snr())
            .unwrap_or(f64::NAN);
        let r = self.r;
        self.cases[case]
            .records
            .iter()
            .map(|rec| {
                let dpc = |m: Method| rec[m as usize].dpc_rates.as_ref().map_or(f64::NAN, |v| v[p]);
                let zf = |m: Method| rec[m as usize].zf_rates.as_ref().map_or(f64::NAN, |v| v[p]);
                let geo = |m: Method| high_snr_rate(snr, r, mean_offsets(&rec[m as usize].eigenvalues).0);
                let har = |m: Method| high_snr_rate(snr, r, mean_offsets(&rec[m as usize].eigenvalues).1);
                match label {
                    "DPC-opt" => dpc(Method::GeoMean),
                    "ZF-opt" => zf(Method::HarMean),
                    "DPC-random" => dpc(Method::Random),
                    "ZF-random" => zf(Method::Random),
                    "DPC-off" => dpc(Method::Off),
                    "ZF-off" => zf(Method::Off),
                    "Geo-opt" => geo(Method::GeoMean),
                    "Har-opt" => har(Method::GeoMean),
                    "Geo-random" => geo(Method::Random),
                    "Har-random" => har(Method::Random),
                    "Geo-off" => geo(Method::Off),
                    "Har-off" => har(Method::Off),
                    "Har-linear" => har(Method::HarMean),
                    _ => f64::NAN,
                }
            })
            .collect()
    }

    /// CSV text: `rank,method,eig_index,mean_value` for eigenvalue runs,
    /// `x,method,mean_rate_bpcu,stderr` otherwise, followed by one
    /// `summary,failed_trials,...` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.kind {
            ExperimentKind::Eigenvalues => {
                out.push_str("rank,method,eig_index,mean_value\n");
                for case in &self.cases {
                    for method in Method::ALL {
                        for i in 0..self.r {
                            let vals: Vec<f64> = case.records.iter().map(|rec| rec[method as usize].eigenvalues[i]).collect();
                            let (mean, _) = mean_stderr(&vals);
                            let _ = writeln!(out, "{},{},{},{:e}", case.case_value, method.label(), i + 1, mean);
                        }
                    }
                }
                let _ = writeln!(out, "summary,failed_trials,0,{}", self.failures.len());
            }
            ExperimentKind::SnrSweep | ExperimentKind::ElementSweep => {
                out.push_str("x,method,mean_rate_bpcu,stderr\n");
                for (c, case) in self.cases.iter().enumerate() {
                    for p in 0..self.powers_dbm.len() {
                        let x = if self.kind == ExperimentKind::SnrSweep {
                            format!("{}", self.powers_dbm[p])
                        } else {
                            format!("{}", case.case_value)
                        };
                        for label in RATE_SERIES {
                            let (mean, se) = mean_stderr(&self.series(c, label, p));
                            let _ = writeln!(out, "{x},{label},{mean},{se}");
                        }
                    }
                }
                let _ = writeln!(out, "summary,failed_trials,{},0", self.failures.len());
            }
        }
        out
    }

    pub fn csv_file_name(&self, name: &str) -> String {
        match self.kind {
            ExperimentKind::Eigenvalues => format!("{name}_eigenvalues.csv"),
            _ => format!("{name}_rates.csv"),
        }
    }
}

#[derive(Serialize)]
struct Sidecar<'a> {
    artifact: &'static str,
    version: &'static str,
    seed: u64,
    n_trials: usize,
    failed_trials: usize,
    config: &'a ScenarioConfig,
}

/// Writes the CSV and its JSON metadata into `dir`; returns the CSV path.
pub fn write_outputs(config: &ScenarioConfig, result: &ExperimentResult, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let csv_path = dir.join(result.csv_file_name(&config.name));
    fs::write(&csv_path, result.to_csv())?;
    let meta = Sidecar {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        seed: config.seed,
        n_trials: config.n_trials,
        failed_trials: result.failures.len(),
        config,
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join(format!("{}.json", config.name)), json)?;
    Ok(csv_path)
}
