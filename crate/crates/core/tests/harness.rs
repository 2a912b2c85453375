use famsec_core::harness::{
    self, toy, ExperimentConfig, ExperimentId, Format, RangeSource, Scale, SweepAxis, TrustedSource,
};
use famsec_core::metrics::{self, RewardRange};
use famsec_core::solver::{MctsConfig, SolverSpec};
use famsec_core::surrogate::RegressorConfig;
use famsec_core::Error;

fn quick(id: ExperimentId) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::preset(id, Scale::Desk).unwrap();
    cfg.n_episodes = 10;
    for s in cfg.candidates.iter_mut().chain(std::iter::once(&mut cfg.trusted)) {
        if let Some(m) = s.mcts_config_mut() {
            m.iterations = 20;
        }
    }
    cfg
}

#[test]
fn toy_rows_and_direction() {
    let cfg = ExperimentConfig::preset(ExperimentId::Toy, Scale::Desk).unwrap();
    let result = harness::run_experiment(&cfg).unwrap();
    assert_eq!(result.rows.len(), 21 * toy::TOY_WIDTHS.len());
    let at = |x: f64, w: f64| {
        result
            .rows
            .iter()
            .find(|r| (r.sweep_value("x").unwrap() - x).abs() < 1e-12 && r.range.width() == w)
            .unwrap()
            .xq
    };
    let (b5, b005) = (at(toy::POINT_B, 5.0), at(toy::POINT_B, 0.05));
    assert!(b5 < 1.0 && b005 < b5, "B: {b5} -> {b005}");
    let (c5, c0005) = (at(toy::POINT_C, 5.0), at(toy::POINT_C, 0.005));
    assert!(c5 > 1.0 && c0005 > c5 && c0005 < 2.0, "C: {c5} -> {c0005}");
    assert_eq!(at(toy::POINT_A, 0.005), 1.0);
}

#[test]
fn empty_candidates_rejected() {
    let mut cfg = quick(ExperimentId::Exp1);
    cfg.id = ExperimentId::Custom;
    cfg.candidates.clear();
    assert!(matches!(harness::run_experiment(&cfg), Err(Error::InvalidConfig(_))));
}

#[test]
fn duplicate_or_trusted_labels_rejected() {
    let mut cfg = quick(ExperimentId::Exp1);
    cfg.candidates.push(cfg.trusted.clone());
    assert!(harness::run_experiment(&cfg).is_err());
}

#[test]
fn surrogate_experiments_need_a_model() {
    for id in [ExperimentId::Exp3, ExperimentId::Exp4] {
        let cfg = quick(id);
        assert!(matches!(harness::run_experiment(&cfg), Err(Error::MissingSurrogate(_))));
    }
}

#[test]
fn unknown_sweep_feature_rejected() {
    let mut cfg = quick(ExperimentId::Exp1);
    cfg.sweep = vec![SweepAxis::new("gravity", vec![1.0])];
    assert!(matches!(harness::run_experiment(&cfg), Err(Error::UnknownFeature(_))));
}

#[test]
fn rows_recompute_from_stored_summaries() {
    let result = harness::run_experiment(&quick(ExperimentId::Exp1)).unwrap();
    assert_eq!(result.rows.len(), 10);
    let depths: Vec<f64> = result.rows.iter().map(|r| r.sweep_value("d_mcts").unwrap()).collect();
    assert_eq!(depths, (1..=10).map(f64::from).collect::<Vec<_>>());
    for row in &result.rows {
        let cand = famsec_core::GaussianSummary::new(row.mean, row.std).floored();
        let sq = metrics::solver_quality(&row.trusted, &cand, &result.manifest.reward_range, 0.5).unwrap();
        assert!((sq.xq - row.xq).abs() <= 1e-9);
        assert_eq!(row.outcomes.total(), row.n);
    }
    // Depth is a candidate-only axis: one trusted distribution serves every row.
    assert!(result.rows.windows(2).all(|w| w[0].trusted == w[1].trusted));
    let net = result.manifest.network.as_ref().unwrap();
    assert_eq!(net.sha256.len(), 64);
}

#[test]
fn csv_layout() {
    let result = harness::run_experiment(&quick(ExperimentId::Exp1)).unwrap();
    let csv = harness::to_csv(&result.rows);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,d_mcts,label,mean,std,n,exited,caught,truncated,hellinger_sq,q,xq"
    );
    assert_eq!(lines.count(), 10);
    let dir = tempfile::tempdir().unwrap();
    let path = harness::write_outputs(&result, dir.path(), Format::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(path).unwrap(), csv);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["id"], "exp1");
    assert_eq!(manifest["csv_columns"][1], "d_mcts");
    // The embedded config is enough to rerun the experiment.
    let replay: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(harness::to_csv(&harness::run_experiment(&replay).unwrap().rows), csv);
}

#[test]
fn surrogate_experiment_with_training_and_with_saved_model() {
    let mut cfg = quick(ExperimentId::Exp3);
    cfg.sweep = vec![SweepAxis::new("p_trans", vec![0.25, 0.75])];
    let mut training = cfg.default_training().unwrap();
    training.n_episodes = 10;
    training.regressor = RegressorConfig::KNearest { k: 1 };
    cfg.training = Some(training);
    let trained = harness::run_experiment(&cfg).unwrap();
    assert_eq!(trained.rows.len(), 4);
    let model = trained.trained_surrogate.clone().unwrap();
    assert!(trained.manifest.trusted.iter().all(|t| t.source == TrustedSource::Surrogate));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surrogate.json");
    model.save(&path).unwrap();
    let mut from_file = cfg.clone();
    from_file.training = None;
    from_file.surrogate = Some(path);
    let loaded = harness::run_experiment(&from_file).unwrap();
    assert_eq!(harness::to_csv(&loaded.rows), harness::to_csv(&trained.rows));
    assert_eq!(loaded.manifest.reward_range, model.reward_range.unwrap());
}

#[test]
fn fixed_range_is_used_verbatim() {
    let mut cfg = quick(ExperimentId::Exp1);
    cfg.range = RangeSource::Fixed { r_low: -2000.0, r_high: 2000.0 };
    let result = harness::run_experiment(&cfg).unwrap();
    assert_eq!(result.manifest.reward_range, RewardRange::new(-2000.0, 2000.0).unwrap());
}

#[test]
fn custom_config_json_roundtrip() {
    let text = r#"{
        "id": "custom",
        "network": "small",
        "params": {"p_trans": 0.9, "discount": 0.9, "rwd_exit": 2000.0, "rwd_caught": -2000.0, "rwd_sense": -200.0, "max_steps": 30},
        "trusted": {"kind": "mcts", "depth": 6, "exploration": 1000.0, "iterations": 20, "label": "trusted"},
        "candidates": [
            {"kind": "random", "label": "random"},
            {"kind": "mcts", "depth": 2, "exploration": 1000.0, "iterations": 20, "label": "d2"}
        ],
        "sweep": [{"feature": "p_trans", "values": [0.5, 1.0]}],
        "n_episodes": 10,
        "master_seed": 4
    }"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    assert_eq!(cfg.candidates[1], SolverSpec::mcts("d2", MctsConfig::new(2, 1000.0, 20)));
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    let result = harness::run_experiment(&cfg).unwrap();
    assert_eq!(result.rows.len(), 4);
    assert_eq!(result.rows[0].label, "d2");
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 2);
}
