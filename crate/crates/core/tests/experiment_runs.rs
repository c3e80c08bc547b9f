use riseig::experiment::{run_experiment, write_outputs, Method, RATE_SERIES};
use riseig::scenario::{ExperimentKind, ScenarioConfig};

fn small(name: &str, trials: usize) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::preset(name).unwrap();
    cfg.n_trials = trials;
    cfg
}

#[test]
fn eigenvalue_csv_layout() {
    let cfg = small("fig1a", 3);
    let result = run_experiment(&cfg, 1).unwrap();
    let csv = result.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "rank,method,eig_index,mean_value");
    let ranks = cfg.rank_grid.len();
    assert_eq!(lines.len(), 1 + ranks * Method::ALL.len() * 6 + 1);
    assert_eq!(*lines.last().unwrap(), "summary,failed_trials,0,0");
    for line in &lines[1..lines.len() - 1] {
        let value: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(value > 0.0 && value.is_finite());
    }
}

#[test]
fn rate_csv_layout() {
    let mut cfg = small("fig3a", 2);
    cfg.power_grid_dbm = vec![0.0, 20.0, 40.0];
    cfg.dimensions.n_ris_elements = vec![16];
    let result = run_experiment(&cfg, 2).unwrap();
    let csv = result.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "x,method,mean_rate_bpcu,stderr");
    assert_eq!(lines.len(), 1 + 3 * RATE_SERIES.len() + 1);
    assert_eq!(*lines.last().unwrap(), "summary,failed_trials,0,0");
}

#[test]
fn thread_count_does_not_change_output() {
    let mut cfg = small("fig4b", 4);
    cfg.ris_element_grid = vec![2, 8];
    let one = run_experiment(&cfg, 1).unwrap().to_csv();
    let three = run_experiment(&cfg, 3).unwrap().to_csv();
    assert_eq!(one, three);
}

#[test]
fn off_curves_ignore_surface_size() {
    let mut cfg = small("fig4a", 3);
    cfg.ris_element_grid = vec![1, 16];
    let result = run_experiment(&cfg, 1).unwrap();
    for label in ["DPC-off", "ZF-off", "Geo-off", "Har-off"] {
        assert_eq!(result.series(0, label, 0), result.series(1, label, 0), "{label}");
    }
}

#[test]
fn optimized_rates_beat_off_at_large_surface() {
    let mut cfg = small("fig4a", 4);
    cfg.ris_element_grid = vec![64];
    let result = run_experiment(&cfg, 1).unwrap();
    let opt = result.series(0, "DPC-opt", 0);
    let off = result.series(0, "DPC-off", 0);
    assert!(opt.iter().zip(&off).all(|(a, b)| a > b));
    let dpc = result.series(0, "DPC-random", 0);
    let zf = result.series(0, "ZF-random", 0);
    assert!(dpc.iter().zip(&zf).all(|(d, z)| d >= z));
}

#[test]
fn outputs_written_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small("fig1d", 2);
    let result = run_experiment(&cfg, 1).unwrap();
    assert_eq!(result.kind, ExperimentKind::Eigenvalues);
    let path = write_outputs(&cfg, &result, dir.path()).unwrap();
    assert_eq!(path.file_name().unwrap(), "fig1d_eigenvalues.csv");
    assert_eq!(std::fs::read_to_string(&path).unwrap(), result.to_csv());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig1d.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], cfg.seed);
    assert_eq!(meta["n_trials"], 2);
    assert_eq!(meta["failed_trials"], 0);
}

#[test]
fn wrong_kind_is_rejected() {
    let cfg = small("fig1a", 1);
    assert!(riseig::experiment::run_snr_sweep(&cfg, 1).is_err());
}
