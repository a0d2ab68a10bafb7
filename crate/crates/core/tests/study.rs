use std::fs;

use steklov_core::eigen::Sign;
use steklov_core::homog::{EffectiveTensor, SignCase};
use steklov_core::study::*;

fn config(density: &str, levels: &[usize], k: usize, dir: &std::path::Path) -> StudyConfig {
    let text = format!(
        r#"
[geometry]
hole = "square"
size = 0.5
m = 8

[coefficients]
preset = "identity"

[density]
expr = "{density}"

[study]
levels = {levels:?}
k = {k}
m_limit = 32

[output]
dir = "{}"
formats = ["csv", "json", "svg"]
"#,
        dir.display()
    );
    StudyConfig::from_toml(&text).unwrap()
}

#[test]
fn config_defaults_and_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = StudyConfig::from_toml(
        r#"
[geometry]
hole = "disk"
size = 0.25
m = 16
[density]
preset = "rho-shifted"
"#,
    )
    .unwrap();
    assert_eq!(cfg.study.levels, vec![2, 4, 8, 16]);
    assert_eq!(cfg.study.k, 3);
    assert_eq!(cfg.study.m_limit, 64);
    assert_eq!(cfg.tolerances.tol_zero, 1e-10);
    cfg.validate().unwrap();
    let back = StudyConfig::from_toml(&cfg.to_toml()).unwrap();
    assert_eq!(back, cfg);

    let mut bad = config("sin(2*pi*y1)", &[2], 1, dir.path());
    bad.study.levels.clear();
    assert_eq!(bad.validate().unwrap_err().exit_code(), 2);
    bad.study.levels = vec![4, 2];
    assert!(bad.validate().is_err());
    let nonperiodic = config("y1", &[2], 1, dir.path());
    assert!(matches!(nonperiodic.validate(), Err(StudyError::Config(_))));
    assert!(StudyConfig::from_toml("[geometry]\nhole = \"square\"\nbogus = 1\n[density]\nexpr = \"1\"").is_err());
    assert!(StudyConfig::from_toml("[geometry]\nhole = \"square\"\n[density]\nexpr = \"1\"\n[study]\ncase_override = \"crit\"").is_ok());
}

#[test]
fn hash_ignores_output_settings() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c1 = config("sin(2*pi*y1)", &[2], 1, a.path());
    let mut c2 = config("sin(2*pi*y1)", &[2], 1, b.path());
    c2.study.threads = Some(3);
    assert_eq!(c1.hash(), c2.hash());
    assert_eq!(c1.seed(), c2.seed());
    let c3 = config("sin(2*pi*y2)", &[2], 1, a.path());
    assert_ne!(c1.hash(), c3.hash());
}

#[test]
fn positive_study_gap_decreases() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("1 + 0.5*sin(2*pi*y1)", &[2, 4, 8], 1, dir.path());
    let r = run_study(&cfg).unwrap();
    assert_eq!(r.case, SignCase::Positive);
    assert!(r.lambda1_neg.is_none());
    assert!(!r.notes.is_empty());
    let s = r.series(1, Sign::Positive);
    assert_eq!(s.len(), 3);
    assert!(s.windows(2).all(|w| w[1].abs_gap < w[0].abs_gap), "{s:?}");
    assert!(r.series(1, Sign::Negative).is_empty());
    for row in &r.rows {
        assert_eq!(row.diagnostic, row.lambda_raw / row.epsilon);
        assert_eq!(row.abs_gap, (row.diagnostic - row.limit).abs());
        assert_eq!(row.rel_gap, row.abs_gap / row.limit.abs());
    }
}

#[test]
fn critical_study_trends() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("sin(2*pi*y1)", &[2, 4, 8], 1, dir.path());
    let r = run_study(&cfg).unwrap();
    assert_eq!(r.case, SignCase::Critical);
    assert!(r.nu_sq.unwrap() > 0.0);
    let plus = r.series(1, Sign::Positive);
    let minus = r.series(1, Sign::Negative);
    let sums: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p.lambda_raw + m.lambda_raw).abs()).collect();
    assert!(sums.iter().all(|s| *s < 1e-8 * plus[0].lambda_raw));
    assert!(plus.windows(2).all(|w| w[1].abs_gap < w[0].abs_gap));
    assert!(r.correctors.iter().all(|c| c.ratio < 1.0));
}

#[test]
fn reports_are_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("0.5 + sin(2*pi*y1)", &[2, 4], 2, dir.path());
    let first = run_study(&cfg).unwrap();
    let csv1 = render_csv(&first).unwrap();
    let cache = dir.path().join("cache").join(cfg.hash());
    assert!(cache.join("homog.json").exists() && cache.join("level-4.json").exists());

    let cached = run_study(&cfg).unwrap();
    assert_eq!(render_csv(&cached).unwrap(), csv1);

    fs::remove_dir_all(&cache).unwrap();
    let fresh = run_study_with(&cfg, Some(2)).unwrap();
    assert_eq!(render_csv(&fresh).unwrap(), csv1);
    assert_eq!(fresh, first);

    let files = emit_reports(&first, dir.path(), &cfg.output.formats).unwrap();
    assert_eq!(files.len(), 3);
    let csv = fs::read_to_string(dir.path().join("study.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(csv.lines().count(), 1 + first.rows.len());
    let json = fs::read_to_string(dir.path().join("study.json")).unwrap();
    assert_eq!(StudyReport::from_json(&json).unwrap(), first);
    let svg = fs::read_to_string(dir.path().join("study.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);

    for row in first.series(1, Sign::Negative) {
        let lambda1 = first.lambda1_neg.unwrap();
        let expected = (row.lambda_raw - lambda1 / row.epsilon) / row.epsilon;
        assert!((row.diagnostic - expected).abs() <= 1e-12 * expected.abs());
    }
}

#[test]
fn single_row_report() {
    let report = StudyReport {
        schema: REPORT_SCHEMA.into(),
        config_hash: "00".into(),
        seed: 1,
        case: SignCase::Positive,
        m_s_rho: 1.0,
        perimeter: 2.0,
        q: EffectiveTensor::isotropic(0.5),
        nu_sq: None,
        lambda1_neg: None,
        q_tilde: None,
        m_s_rho_tilde: None,
        limits: vec![],
        rows: vec![StudyRow {
            case: SignCase::Positive,
            k: 1,
            sign: Sign::Positive,
            n: 2,
            epsilon: 0.5,
            lambda_raw: 4.0,
            diagnostic: 8.0,
            limit: 10.0,
            abs_gap: 2.0,
            rel_gap: 0.2,
        }],
        correctors: vec![],
        levels: vec![],
        notes: vec![],
    };
    let csv = render_csv(&report).unwrap();
    assert_eq!(csv, format!("{}\npositive,1,+,2,0.5,4,8,10,2,0.2\n", CSV_HEADER.join(",")));
    assert_eq!(render_svg(&report).matches("<polyline").count(), 1);
    assert!(StudyReport::from_json(&report.to_json().replace("studyreport 1", "x")).is_err());
}

#[test]
fn stage_errors_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // forcing the critical case on rho = 1 breaks the surface corrector identity
    let mut cfg = config("1", &[2], 1, dir.path());
    cfg.study.case_override = Some(SignCase::Critical);
    let err = run_study(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    assert!(err.to_string().starts_with("cell stage"));
}
