use std::fs;
use std::path::Path;

use appstress::model_selection::Grid;
use appstress::pipeline::{
    self, PipelineConfig, CLEAN_DIR, EMA_FILE, EVENTS_FILE, FEATURES_FILE, LABELS_FILE, MODELS_DIR,
    REPORT_CSV, REPORT_TXT, SCREEN_FILE, TRUTH_FILE, USAGE_SVG,
};
use appstress::svm::KernelSpec;
use appstress::synth::CohortSpec;

fn small_spec() -> CohortSpec {
    CohortSpec {
        n_users: 4,
        n_days: 14,
        seed: 5,
        ..CohortSpec::default()
    }
}

fn quick(dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::in_dir(dir);
    cfg.evaluation.grid = Grid {
        kernels: vec![KernelSpec::Linear, KernelSpec::Rbf { gamma: 0.1 }],
        c_values: vec![1.0, 10.0],
    };
    cfg
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_owned()
}

#[test]
fn stages_write_their_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline::run_synth(&small_spec(), dir).unwrap();
    for f in [EVENTS_FILE, SCREEN_FILE, EMA_FILE, TRUTH_FILE] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    assert_eq!(header(&dir.join(TRUTH_FILE)), "user_id,date,latent_stress,rule_id");

    let cfg = quick(dir);
    let ing = pipeline::run_ingest(&cfg).unwrap();
    assert!(ing.diagnostics.iter().all(|d| d.diagnostics.is_empty()));
    assert!(dir.join(CLEAN_DIR).join(EVENTS_FILE).is_file());

    let feat = pipeline::run_featurize(&cfg).unwrap();
    assert_eq!(feat.features.len(), 4 * 14);
    assert_eq!(
        header(&dir.join(FEATURES_FILE)),
        "user_id,date,freq_ent,freq_social,freq_game,freq_utility,freq_browser,\
         time_ent,time_social,time_game,time_utility,time_browser,unique_app_count"
    );
    assert_eq!(header(&dir.join(LABELS_FILE)), "user_id,date,level,n_responses");

    let trained = pipeline::run_train(&cfg).unwrap();
    assert_eq!(trained.models.len(), 4);
    assert!(trained.summary.contains("selected"));
    assert_eq!(fs::read_dir(dir.join(MODELS_DIR)).unwrap().count(), 4);

    let (report, table) = pipeline::run_evaluate(&cfg).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert_eq!(fs::read_to_string(dir.join(REPORT_TXT)).unwrap(), table);
    let csv = fs::read_to_string(dir.join(REPORT_CSV)).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 + 2);

    let usage = pipeline::run_report(&cfg, true).unwrap();
    assert!(usage.contains("browser"));
    assert!(dir.join(USAGE_SVG).is_file());
}

#[test]
fn rerunning_a_stage_overwrites_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline::run_synth(&small_spec(), dir).unwrap();
    let cfg = quick(dir);
    pipeline::run_featurize(&cfg).unwrap();
    pipeline::run_evaluate(&cfg).unwrap();
    let first = (
        fs::read(dir.join(FEATURES_FILE)).unwrap(),
        fs::read(dir.join(REPORT_CSV)).unwrap(),
    );
    pipeline::run_featurize(&cfg).unwrap();
    pipeline::run_evaluate(&cfg).unwrap();
    let second = (
        fs::read(dir.join(FEATURES_FILE)).unwrap(),
        fs::read(dir.join(REPORT_CSV)).unwrap(),
    );
    assert_eq!(first, second);
}

#[test]
fn later_stages_need_earlier_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick(tmp.path());
    assert!(pipeline::run_ingest(&cfg).unwrap_err().is_config());
    assert!(pipeline::run_evaluate(&cfg).unwrap_err().is_config());
    assert!(pipeline::run_report(&cfg, false).unwrap_err().is_config());
}

#[test]
fn config_errors_are_reported_before_reading_data() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = quick(tmp.path());
    cfg.timezone = "Nowhere/Land".into();
    assert!(pipeline::run_featurize(&cfg).unwrap_err().is_config());

    let mut cfg = quick(tmp.path());
    cfg.taxonomy = Some(tmp.path().join("missing.csv"));
    assert!(pipeline::run_featurize(&cfg).unwrap_err().is_config());

    let mut cfg = quick(tmp.path());
    cfg.evaluation.folds.k = 1;
    assert!(pipeline::run_train(&cfg).unwrap_err().is_config());
}

#[test]
fn jsonl_inputs_match_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline::run_synth(&CohortSpec { n_users: 2, n_days: 5, ..small_spec() }, dir).unwrap();
    let cfg = quick(dir);
    let from_csv = pipeline::run_featurize(&cfg).unwrap();

    for name in [EVENTS_FILE, SCREEN_FILE, EMA_FILE] {
        let mut reader = csv::Reader::from_path(dir.join(name)).unwrap();
        let headers = reader.headers().unwrap().clone();
        let mut out = String::new();
        for rec in reader.records() {
            let rec = rec.unwrap();
            let obj: serde_json::Map<String, serde_json::Value> = headers
                .iter()
                .zip(rec.iter())
                .map(|(h, v)| (h.to_owned(), serde_json::Value::String(v.to_owned())))
                .collect();
            out.push_str(&serde_json::to_string(&obj).unwrap());
            out.push('\n');
        }
        fs::write(dir.join(name.replace(".csv", ".jsonl")), out).unwrap();
    }
    let mut jcfg = cfg.clone();
    jcfg.events = dir.join("app_events.jsonl");
    jcfg.screen = dir.join("screen.jsonl");
    jcfg.ema = dir.join("ema.jsonl");
    let from_jsonl = pipeline::run_featurize(&jcfg).unwrap();
    assert_eq!(from_csv.features, from_jsonl.features);
    assert_eq!(from_csv.labels, from_jsonl.labels);
}

#[test]
fn custom_taxonomy_changes_categories() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline::run_synth(&CohortSpec { n_users: 2, n_days: 5, ..small_spec() }, dir).unwrap();
    fs::write(dir.join("tax.csv"), "pattern,match_kind,category\n").unwrap();
    let mut cfg = quick(dir);
    cfg.taxonomy = Some(dir.join("tax.csv"));
    let f = pipeline::run_featurize(&cfg).unwrap();
    assert!(f.features.iter().all(|d| d.freq == [0; 5] && d.unique_app_count > 0));
}

#[test]
fn work_hours_filter_limits_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    pipeline::run_synth(&CohortSpec { n_users: 2, n_days: 5, ..small_spec() }, dir).unwrap();
    let cfg = quick(dir);
    let all = pipeline::run_featurize(&cfg).unwrap();
    let mut wcfg = cfg.clone();
    wcfg.work_hours = appstress::ingest::WorkHoursFilter::enabled(
        chrono::NaiveTime::from_hms_opt(10, 0, 0).unwrap(),
        chrono::NaiveTime::from_hms_opt(12, 0, 0).unwrap(),
        "UTC",
    );
    let work = pipeline::run_featurize(&wcfg).unwrap();
    let total = |f: &pipeline::Featurized| -> u64 { f.features.iter().map(|d| d.time.iter().sum::<u64>()).sum() };
    assert!(total(&work) < total(&all));
    assert!(work.features.iter().all(|d| d.time.iter().sum::<u64>() <= 2 * 3600));
}
