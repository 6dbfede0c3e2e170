use std::fs;

use predbayes::bayes::Decision;
use predbayes::sampler::Schedule;
use predbayes::study::{emit_tables, error_rates, git_blob_hash, metrics, run_study, StudyConfig, StudyResult};
use proptest::prelude::*;

fn small(n: usize) -> StudyConfig {
    StudyConfig { n, schedule: Schedule { m0: 200, m1: 9000, thin: 45 }, seed: 11, ..StudyConfig::default() }
}

#[test]
fn serial_and_parallel_runs_are_identical() {
    let cfg = StudyConfig { keep_traces: true, ..small(6) };
    let serial = run_study(&cfg).unwrap();
    let parallel = run_study(&StudyConfig { jobs: 3, ..cfg.clone() }).unwrap();
    assert_eq!(serial.cells, parallel.cells);
    let again = run_study(&cfg).unwrap();
    assert_eq!(serial, again);
    let other = run_study(&StudyConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(serial.cells[0].replications[0].ols, other.cells[0].replications[0].ols);
}

#[test]
fn emitted_tables_round_trip() {
    let res = run_study(&small(8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_tables(&res, dir.path()).unwrap();

    let mut rdr = csv::Reader::from_path(dir.path().join("tables/beta.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let beta: f64 = row[0].parse().unwrap();
        let s = res.cell(beta).unwrap().summary(&row[1]).unwrap();
        assert_eq!(row[2].parse::<f64>().unwrap(), s.beta.b);
        assert_eq!(row[5].parse::<f64>().unwrap(), s.beta.mae);
        assert_eq!(row[7].parse::<f64>().unwrap(), s.error_rate);
        assert_eq!(&row[6], if beta == 0.0 { "FP" } else { "FN" });
    }

    let mut rdr = csv::Reader::from_path(dir.path().join("figures/a0r_posterior_means.csv")).unwrap();
    let a0r: Vec<f64> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    assert!(!a0r.is_empty());
    assert!(a0r.iter().all(|v| (0.1..=0.5).contains(v)), "{a0r:?}");

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_object().unwrap();
    assert!(files.contains_key("tables/phi.csv") && files.contains_key("ess.csv"));
    for (name, hash) in files {
        let bytes = fs::read(dir.path().join(name)).unwrap();
        assert_eq!(hash.as_str().unwrap(), git_blob_hash(&bytes), "{name}");
    }
    let back: StudyConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(back, res.config);
}

#[test]
fn git_blob_hash_matches_git() {
    assert_eq!(git_blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    assert_eq!(git_blob_hash(b"hello\n"), "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4");
}

#[test]
fn empty_studies_are_rejected() {
    assert!(run_study(&small(0)).is_err());
    let empty = StudyResult { config: small(0), cells: Vec::new() };
    assert!(emit_tables(&empty, tempfile::tempdir().unwrap().path()).is_err());
    assert!(metrics(&[], 0.0).is_err());
    assert!(error_rates(&[], true).is_err());
}

#[test]
fn error_rate_counts_wrong_decisions() {
    let d = [Decision::H0, Decision::H1, Decision::H1, Decision::H0];
    assert_eq!(error_rates(&d, true).unwrap(), 0.5);
    assert_eq!(error_rates(&d[..3], false).unwrap(), 1.0 / 3.0);
}

#[test]
fn frequentist_only_study_skips_bayes_outputs() {
    let cfg = StudyConfig { bayes: false, ..small(5) };
    let res = run_study(&cfg).unwrap();
    assert!(res.cells.iter().all(|c| c.summaries.len() == 2 && c.prior_density.is_empty()));
    let dir = tempfile::tempdir().unwrap();
    emit_tables(&res, dir.path()).unwrap();
    assert!(!dir.path().join("ess.csv").exists());
    assert!(dir.path().join("tables/phi.csv").exists());
}

proptest! {
    #[test]
    fn metric_identities(xs in prop::collection::vec(-10.0f64..10.0, 1..60), truth in -5.0f64..5.0, rot in 0usize..60) {
        let m = metrics(&xs, truth).unwrap();
        let tol = 1e-9 * (1.0 + m.rmse * m.rmse);
        prop_assert!((m.rmse * m.rmse - (m.b * m.b + m.sigma * m.sigma)).abs() < tol);
        prop_assert!(m.mae <= m.rmse * (1.0 + 1e-12) && m.sigma >= 0.0);
        let mut ys = xs.clone();
        ys.rotate_left(rot % xs.len());
        ys.reverse();
        let p = metrics(&ys, truth).unwrap();
        for (a, b) in [(m.b, p.b), (m.sigma, p.sigma), (m.rmse, p.rmse), (m.mae, p.mae)] {
            prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
        }
    }
}
