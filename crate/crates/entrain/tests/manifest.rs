use entrain::manifest::{resolve_config, Manifest, Overrides};
use entrain::Error;
use serde_json::json;

#[test]
fn later_layers_win() {
    let study = json!({"resample": {"k": 5, "grid_step": 0.2}, "entrainment": {"significance": {"alpha": 0.05}}});
    let dyad = json!({"resample": {"k": 3}, "frame": {"pitch_floor": 60.0}});
    let cfg = resolve_config(&[&study, &dyad], &Overrides::default()).unwrap();
    assert_eq!(cfg.resample.k, 3);
    assert_eq!(cfg.resample.grid_step, 0.2);
    assert_eq!(cfg.entrainment.significance.alpha, 0.05);
    assert_eq!(cfg.frame.pitch_floor, 60.0);
    assert_eq!(cfg.frame.pitch_ceiling, 600.0);
    assert_eq!(cfg.vad.open_db, -30.0);

    let flags = Overrides {
        alpha: Some(0.001),
        grid_step: Some(0.05),
        k: Some(9),
        delta: Some(-0.3),
    };
    let cfg = resolve_config(&[&study, &dyad], &flags).unwrap();
    assert_eq!(cfg.resample.k, 9);
    assert_eq!(cfg.resample.grid_step, 0.05);
    assert_eq!(cfg.entrainment.significance.alpha, 0.001);
    assert_eq!(cfg.entrainment.synchrony.delta, -0.3);
}

#[test]
fn defaults_without_layers() {
    let cfg = resolve_config(&[], &Overrides::default()).unwrap();
    assert_eq!(cfg.resample.k, 7);
    assert_eq!(cfg.resample.grid_step, 0.1);
    assert_eq!(cfg.entrainment.significance.alpha, 0.01);
    assert_eq!(cfg.entrainment.synchrony.delta, 0.0);
    assert_eq!(cfg.frame.frame_length, 0.04);
    assert_eq!(cfg.frame.hop, 0.01);
    assert_eq!(cfg.stream.window, 120.0);
}

#[test]
fn bad_config_is_rejected() {
    for bad in [
        json!({"nonsense": 1}),
        json!({"resample": {"k": 0}}),
        json!({"entrainment": {"significance": {"alpha": 2.0}}}),
    ] {
        assert!(
            matches!(resolve_config(&[&bad], &Overrides::default()), Err(Error::Manifest(_))),
            "{bad}"
        );
    }
}

#[test]
fn paths_resolve_against_manifest_directory() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("study.json");
    std::fs::write(
        &p,
        json!({
            "perception_csv": "scores.csv",
            "dyads": [{"id": "d1", "condition": "human", "speaker_a": "tutor.wav", "speaker_b": "/abs/p1.wav", "segments_b": "segs/p1.csv"}]
        })
        .to_string(),
    )
    .unwrap();
    let m = Manifest::load(&p).unwrap();
    assert_eq!(
        m.perception_csv.as_deref(),
        Some(dir.path().join("scores.csv").as_path())
    );
    let d = &m.dyads[0];
    assert_eq!(d.speaker_a, dir.path().join("tutor.wav"));
    assert_eq!(d.speaker_b, std::path::Path::new("/abs/p1.wav"));
    assert_eq!(d.segments_b.as_deref(), Some(dir.path().join("segs/p1.csv").as_path()));
    assert!(d.segments_a.is_none());
}

#[test]
fn manifest_checks() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("study.json");
    let entry = |id: &str| json!({"id": id, "condition": "c", "speaker_a": "a.wav", "speaker_b": "b.wav"});
    for (body, ok) in [
        (json!({"dyads": [entry("d1"), entry("d1")]}), false),
        (json!({"dyads": [entry("../up")]}), false),
        (json!({"dyads": [entry("..")]}), false),
        (json!({"dyads": [entry("")]}), false),
        (json!({"dyads": [entry("d-1.a_b")]}), true),
        (json!({"dyads": []}), true),
        (json!({"config": 3, "dyads": []}), false),
        (json!({"dyads": [], "extra": true}), false),
    ] {
        std::fs::write(&p, body.to_string()).unwrap();
        assert_eq!(Manifest::load(&p).is_ok(), ok, "{body}");
    }
    std::fs::write(&p, "{not json").unwrap();
    assert!(matches!(Manifest::load(&p), Err(Error::Parse { .. })));
}
