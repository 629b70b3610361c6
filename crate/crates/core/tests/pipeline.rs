use empathy_core::analysis::class_conditional_curves;
use empathy_core::features::{featurize_dataset, resample_dataset};
use empathy_core::ingest::{clean_features, load_dataset};
use empathy_core::labels::{label_responses, read_questionnaires};
use empathy_core::synth::{
    generate_dataset, write_synth, Effect, FeatureSchema, SynthConfig, QUESTIONNAIRE_FILE,
};

#[test]
fn paper_sized_recording_layout() {
    let config = SynthConfig {
        schema: FeatureSchema::Features(vec!["AU14_r".into(), "AU14_c".into()]),
        seed: 12,
        ..SynthConfig::default()
    };
    assert_eq!(
        (
            config.participants,
            config.stories_per_participant,
            config.fps,
            config.duration_s
        ),
        (40, 3, 30.0, 180.0)
    );
    let out = generate_dataset(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_synth(dir.path(), &out).unwrap();
    let sessions: Vec<_> = written
        .iter()
        .filter(|p| p.parent().unwrap().ends_with("sessions"))
        .collect();
    assert_eq!(sessions.len(), 120);
    for path in sessions {
        let rows = std::fs::read_to_string(path).unwrap().lines().count() - 1;
        assert_eq!(rows, 5400, "{}", path.display());
    }
}

#[test]
fn files_flow_through_every_stage() {
    let config = SynthConfig {
        participants: 12,
        duration_s: 30.0,
        fps: 15.0,
        effects: vec![Effect::new("AU14_r", 0.23, 0.11, 0.08, 0.9)],
        seed: 5,
        ..SynthConfig::default()
    };
    let out = generate_dataset(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_synth(dir.path(), &out).unwrap();

    let dataset = load_dataset(dir.path()).unwrap();
    let (clean, removed) = clean_features(&dataset).unwrap();
    assert!(removed.is_empty());
    let q = read_questionnaires(std::fs::File::open(dir.path().join(QUESTIONNAIRE_FILE)).unwrap())
        .unwrap();
    let labels = label_responses(&q).unwrap();
    assert_eq!(labels.labels, out.labels.labels);
    for (key, score) in &labels.scores {
        let empathic = labels.labels[key].is_empathic();
        assert_eq!((*score as f64) > labels.median, empathic);
        assert!((8..=40).contains(score));
    }

    let table = featurize_dataset(&clean, Some(&labels)).unwrap();
    assert_eq!(table.names.len(), 4 * 75);
    assert_eq!(table.len(), 36);

    let seqs = resample_dataset(&clean).unwrap();
    assert!(seqs.iter().all(|s| s.grid.len() == 30));
    let curves = class_conditional_curves(&seqs, &labels, "AU14_r").unwrap();
    assert!((curves.empathic_mean - 0.23).abs() < 0.02);
    assert!((curves.less_empathic_mean - 0.11).abs() < 0.02);

    let same = class_conditional_curves(&seqs, &labels, "AU01_r").unwrap();
    let gap = same.empathic_mean - same.less_empathic_mean;
    assert!(gap.abs() < 0.1, "{gap}");
}
