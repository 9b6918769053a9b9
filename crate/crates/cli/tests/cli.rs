mod common;

use std::path::Path;

use common::{code, json, ok, snapshot, stderr, vpoint, write};
use vpoint::store::{self, ClipManifest};
use vpoint::{BinaryMask, MaskClip, ObjectTrack, PixelPoint};

fn one_object_scene(root: &Path) {
    write(
        &root.join("scene.json"),
        r#"{"kind": "scene", "width": 24, "height": 20, "frame_count": 6,
            "objects": [{"shape": "ellipse", "start": [10.0, 9.0], "velocity": [1.0, 0.5], "size": [4.0, 3.0]}]}"#,
    );
}

fn small_suite(root: &Path, clips: usize) {
    write(
        &root.join("suite.json"),
        &format!(
            r#"{{"kind": "suite", "clips": {clips}, "width": 48, "height": 48, "frame_count": 16,
                "min_objects": 2, "max_objects": 5, "noise": {{"jitter": 1.0, "dropout": 0.1}}}}"#
        ),
    );
}

#[test]
fn synth_writes_frames_and_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    one_object_scene(root);
    ok(root, &["synth", "--config", "scene.json", "--seed", "1", "--out", "a"]);
    assert!(root.join("a/scene/clip.json").is_file());
    assert!(root.join("a/scene/frames").is_dir());
    assert_eq!(std::fs::read_dir(root.join("a/scene/frames")).unwrap().count(), 6);
    assert!(root.join("a/run.json").is_file());
    assert_eq!(json(&root.join("a/run.json"))["command"], "synth");

    ok(root, &["synth", "--config", "scene.json", "--seed", "1", "--out", "b"]);
    let (mut a, mut b) = (snapshot(&root.join("a")), snapshot(&root.join("b")));
    a.remove(Path::new("run.json"));
    b.remove(Path::new("run.json"));
    assert_eq!(a, b);
}

#[test]
fn synth_defaults_to_the_output_root() {
    let dir = tempfile::tempdir().unwrap();
    one_object_scene(dir.path());
    ok(dir.path(), &["synth", "--config", "scene.json"]);
    assert!(dir.path().join("vpoint-out/synth/scene/clip.json").is_file());
}

#[test]
fn bad_configs_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("bad.json"), r#"{"kind": "suite", "clips": 0, "width": 8, "height": 8, "frame_count": 2}"#);
    let o = vpoint(root, &["synth", "--config", "bad.json"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let o = vpoint(root, &["synth", "--config", "missing.json"]);
    assert_eq!(code(&o), 2);
    write(&root.join("junk.json"), "{not json");
    let o = vpoint(root, &["synth", "--config", "junk.json"]);
    assert_eq!(code(&o), 2);
    assert!(!root.join("vpoint-out/synth/run.json").exists());
}

#[test]
fn suite_counts_echo_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(
        &root.join("suite.json"),
        r#"{"kind": "suite", "clips": 3, "width": 64, "height": 64, "frame_count": 3, "object_counts": [2, 7, 13]}"#,
    );
    ok(root, &["synth", "--config", "suite.json", "--out", "gt"]);
    for (i, n) in [2, 7, 13].into_iter().enumerate() {
        let m = json(&root.join(format!("gt/clip_{i:03}/clip.json")));
        assert_eq!(m["count"], n);
        assert_eq!(m["objects"].as_array().unwrap().len(), n);
    }
}

#[test]
fn annotations_fall_inside_their_objects() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 3);
    ok(root, &["synth", "--config", "suite.json", "--seed", "2", "--out", "gt"]);
    ok(root, &["annotate", "--clips", "gt", "--seed", "5", "--out", "a"]);
    ok(root, &["annotate", "--clips", "gt", "--seed", "5", "--out", "b"]);
    let text = std::fs::read_to_string(root.join("a/annotations.jsonl")).unwrap();
    assert_eq!(text, std::fs::read_to_string(root.join("b/annotations.jsonl")).unwrap());

    let clips: Vec<_> = store::clip_dirs(&root.join("gt"))
        .unwrap()
        .iter()
        .map(|d| store::read_clip(d).unwrap())
        .collect();
    let mut expected = 0;
    for c in &clips {
        for t in c.clip.tracks() {
            expected += t.masks.iter().filter(|m| !m.is_empty()).count();
        }
    }
    let mut seen = 0;
    for line in text.lines() {
        let a: vpoint::annotator::PointAnnotation = serde_json::from_str(line).unwrap();
        let c = clips.iter().find(|c| c.manifest.name == a.video).unwrap();
        let p = vpoint::annotator::percent_to_pixel(a.x, a.y, c.clip.width(), c.clip.height());
        assert!(c.clip.mask(a.object, a.frame).unwrap().at(p), "{line}");
        seen += 1;
    }
    assert_eq!(seen, expected);

    let o = vpoint(root, &["annotate", "--clips", "gt", "--candidates", "0"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn exact_fusion_reproduces_ground_truth_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 3);
    ok(root, &["synth", "--config", "suite.json", "--out", "gt"]);
    for k in ["5", "40"] {
        let out = format!("pred_{k}");
        ok(root, &["fuse", "--clips", "gt", "--propagator", "exact", "--k", k, "--out", &out]);
        for i in 0..3 {
            let name = format!("clip_{i:03}");
            for sub in ["frames", "tracks"] {
                assert_eq!(
                    snapshot(&root.join(&out).join(&name).join(sub)),
                    snapshot(&root.join("gt").join(&name).join(sub)),
                    "k={k} {name}/{sub}"
                );
            }
        }
    }
}

#[test]
fn bidirectional_beats_prefer_left_when_evaluated() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 16);
    ok(root, &["synth", "--config", "suite.json", "--seed", "8", "--out", "gt"]);
    let mut jf = Vec::new();
    for s in ["bidirectional", "prefer-left"] {
        let (pred, ev) = (format!("pred_{s}"), format!("ev_{s}"));
        ok(root, &["fuse", "--clips", "gt", "--strategy", s, "--seed", "3", "--out", &pred]);
        ok(root, &["eval", "--pred", &pred, "--gt", "gt", "--out", &ev]);
        let r = json(&root.join(&ev).join("report.json"));
        assert_eq!(r["strategy"], s);
        assert_eq!(r["k"], 5);
        jf.push(r["jf"].as_f64().unwrap());
    }
    assert!(jf[0] >= jf[1], "{jf:?}");
}

#[test]
fn inconsistent_keyframes_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 2);
    ok(root, &["synth", "--config", "suite.json", "--out", "gt"]);
    ok(root, &["keyframes", "--clips", "gt", "--k", "5", "--out", "kf"]);
    ok(root, &["fuse", "--clips", "gt", "--keyframes", "kf", "--k", "5", "--out", "p"]);
    let o = vpoint(root, &["fuse", "--clips", "gt", "--keyframes", "kf", "--k", "3", "--out", "q"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("keyframes"));

    std::fs::remove_dir_all(root.join("kf/clip_001")).unwrap();
    let o = vpoint(root, &["fuse", "--clips", "gt", "--keyframes", "kf", "--out", "q"]);
    assert_eq!(code(&o), 2);
}

/// One clip, one object, 6x6 frames (boundary tolerance 1 pixel):
///
/// - frame 0: prediction equals the truth, J 1, F 1;
/// - frame 1: prediction empty, J 0, F 0;
/// - frame 2: 3x3 squares one pixel apart, J 6/12; every boundary pixel lies within
///   one pixel of the other boundary, F 1.
///
/// So J = 1/2, F = 2/3, J&F = 7/12.
fn write_fixture(root: &Path) {
    let rect = |x0: usize, y0: usize, x1: usize, y1: usize| {
        BinaryMask::from_fn(6, 6, |x, y| (x0..=x1).contains(&x) && (y0..=y1).contains(&y)).unwrap()
    };
    let empty = BinaryMask::empty(6, 6).unwrap();
    let gt = vec![rect(1, 1, 3, 3), rect(0, 0, 1, 1), rect(0, 0, 2, 2)];
    let pred = vec![rect(1, 1, 3, 3), empty, rect(1, 0, 3, 2)];
    for (dir, masks) in [("gt", gt), ("pred", pred)] {
        let clip = MaskClip::new(6, 6, 3, vec![ObjectTrack { id: 1, masks }]).unwrap();
        let mut m = ClipManifest::for_clip("fx", &clip);
        m.objects = vec![1];
        store::write_clip(&root.join(dir).join("fx"), &m, &clip, None).unwrap();
    }
    // Pixel centres (2,2) on frame 0 and (1,1) twice on frame 2 hit; (5,5) on frame 1
    // misses. Matched 2 of 4 predicted and 3 actual: P 1/2, R 2/3, F1 4/7.
    let centre = |p: PixelPoint| (100.0 * (p.x as f64 + 0.5) / 6.0, 100.0 * (p.y as f64 + 0.5) / 6.0);
    let lines: String = [(0, PixelPoint::new(2, 2)), (1, PixelPoint::new(5, 5)), (2, PixelPoint::new(1, 1)), (2, PixelPoint::new(1, 1))]
        .iter()
        .map(|&(frame, p)| {
            let (x, y) = centre(p);
            format!("{{\"video\": \"fx\", \"frame\": {frame}, \"object\": 1, \"x\": {x}, \"y\": {y}}}\n")
        })
        .collect();
    write(&root.join("points.jsonl"), &lines);
    write(&root.join("counts.jsonl"), "{\"video\": \"fx\", \"count\": 3}\n");
}

#[test]
fn eval_matches_hand_scored_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_fixture(root);
    let table = ok(
        root,
        &["eval", "--pred", "pred", "--gt", "gt", "--points", "points.jsonl", "--counts", "counts.jsonl", "--out", "ev"],
    );
    assert!(table.starts_with("dataset"));
    let r = json(&root.join("ev/report.json"));
    let close = |key: &str, want: f64| {
        let got = r[key].as_f64().unwrap();
        assert!((got - want).abs() <= 1e-12, "{key}: {got} vs {want}");
    };
    close("j", 0.5);
    close("f", 2.0 / 3.0);
    close("jf", 7.0 / 12.0);
    close("precision", 0.5);
    close("recall", 2.0 / 3.0);
    close("f1", 4.0 / 7.0);
    close("mae", 2.0);
    close("ema", 0.0);
    assert_eq!(r["dataset"], "gt");
    assert!(r["strategy"].is_null());
}

#[test]
fn eval_against_itself_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 2);
    ok(root, &["synth", "--config", "suite.json", "--out", "gt"]);
    ok(root, &["eval", "--pred", "gt", "--gt", "gt", "--counts", "gt/counts.jsonl", "--name", "self", "--out", "ev"]);
    let r = json(&root.join("ev/report.json"));
    assert_eq!(r["jf"], 1.0);
    assert_eq!(r["mae"], 0.0);
    assert_eq!(r["ema"], 100.0);
    assert_eq!(r["dataset"], "self");
    // No points file: segmentation only.
    assert!(r["precision"].is_null());
}

#[test]
fn eval_rejects_mismatched_rosters() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write_fixture(root);
    let clip = MaskClip::new(6, 6, 3, vec![ObjectTrack { id: 2, masks: vec![BinaryMask::empty(6, 6).unwrap(); 3] }]).unwrap();
    store::write_clip(&root.join("other/fx"), &ClipManifest::for_clip("fx", &clip), &clip, None).unwrap();
    let o = vpoint(root, &["eval", "--pred", "other", "--gt", "gt"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    store::write_clip(&root.join("renamed/fy"), &ClipManifest::for_clip("fy", &clip), &clip, None).unwrap();
    let o = vpoint(root, &["eval", "--pred", "renamed", "--gt", "gt"]);
    assert_eq!(code(&o), 2);
}

fn sweep_config(root: &Path, grid: &str) {
    write(&root.join("sweep.json"), &format!(r#"{{"clips": "gt", "seed": 4, "grid": {grid}}}"#));
}

#[test]
fn tau_sweep_echoes_grid_values() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 3);
    ok(root, &["synth", "--config", "suite.json", "--out", "gt"]);
    sweep_config(root, r#"{"tau": [0, 0.3, 0.5, 0.7, 0.9]}"#);
    ok(root, &["sweep", "--config", "sweep.json", "--out", "sw"]);
    let summary = json(&root.join("sw/summary.json"));
    let reports = summary["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 5);
    for (r, tau) in reports.iter().zip([0.0, 0.3, 0.5, 0.7, 0.9]) {
        assert_eq!(r["tau"], tau);
        assert_eq!(r["k"], 5);
        assert_eq!(r["l"], 4);
        assert_eq!(r["strategy"], "bidirectional");
    }
    assert_eq!(std::fs::read_dir(root.join("sw/reports")).unwrap().count(), 5);
    assert_eq!(json(&root.join("sw/reports/004.json")), reports[4]);
}

#[test]
fn strategy_sweep_ranks_bidirectional_first() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(
        &root.join("sweep.json"),
        r#"{"suite": {"clips": 30, "width": 64, "height": 64, "frame_count": 21, "min_objects": 2,
                      "max_objects": 6, "noise": {"jitter": 1.0, "dropout": 0.1}},
            "seed": 2024,
            "grid": {"strategy": ["prefer-left", "prefer-right", "intersection", "larger", "smaller", "bidirectional"]}}"#,
    );
    ok(root, &["sweep", "--config", "sweep.json", "--out", "sw"]);
    let summary = json(&root.join("sw/summary.json"));
    assert_eq!(summary["reports"].as_array().unwrap().len(), 6);
    let best = summary["ranking"][0].as_u64().unwrap() as usize;
    assert_eq!(summary["reports"][best]["strategy"], "bidirectional");
}

#[test]
fn single_point_sweep_matches_fuse_and_eval() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 4);
    ok(root, &["synth", "--config", "suite.json", "--seed", "6", "--out", "gt"]);
    sweep_config(root, r#"{"tau": [0.5], "k": [4], "strategy": ["larger"]}"#);
    ok(root, &["sweep", "--config", "sweep.json", "--out", "sw"]);
    ok(
        root,
        &["fuse", "--clips", "gt", "--k", "4", "--tau", "0.5", "--strategy", "larger", "--seed", "4", "--out", "pred"],
    );
    ok(root, &["eval", "--pred", "pred", "--gt", "gt", "--out", "ev"]);
    let swept = json(&root.join("sw/reports/000.json"));
    let evaluated = json(&root.join("ev/report.json"));
    for key in ["j", "f", "jf", "tau", "k", "strategy"] {
        assert_eq!(swept[key], evaluated[key], "{key}");
    }
}

#[test]
fn empty_grid_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    small_suite(root, 1);
    ok(root, &["synth", "--config", "suite.json", "--out", "gt"]);
    sweep_config(root, r#"{"strategy": []}"#);
    let o = vpoint(root, &["sweep", "--config", "sweep.json"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("empty grid"));
}

#[test]
fn attn_check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let out = ok(root, &["attn-check", "--out", "ac"]);
    assert!(out.contains("residual identity  exact"));
    let r = json(&root.join("ac/attn_check.json"));
    assert_eq!(r["passed"], true);
    assert!(r["max_rel"].as_f64().unwrap() <= 1e-4);
    assert!(root.join("ac/params.tprm").is_file());

    let o = vpoint(root, &["attn-check", "--dim", "6", "--heads", "4"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));

    // An unreachable tolerance is a verification failure, not an input error.
    let o = vpoint(root, &["attn-check", "--tolerance", "1e-15", "--out", "strict"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert_eq!(json(&root.join("strict/attn_check.json"))["passed"], false);
    assert!(root.join("strict/run.json").is_file());
}

#[test]
fn rerun_rejects_foreign_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("run.json"), r#"{"tool": "other", "version": "1", "command": "synth", "args": {}}"#);
    assert_eq!(code(&vpoint(root, &["rerun", "run.json"])), 2);
    assert_eq!(code(&vpoint(root, &["rerun", "absent.json"])), 2);
}

#[test]
fn manifest_inlines_configs() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    one_object_scene(root);
    ok(root, &["synth", "--config", "scene.json", "--seed", "3", "--out", "a"]);
    let before = snapshot(&root.join("a"));
    // The recorded config wins over later edits to the file.
    std::fs::remove_file(root.join("scene.json")).unwrap();
    ok(root, &["rerun", "a/run.json"]);
    assert_eq!(snapshot(&root.join("a")), before);
    let m = json(&root.join("a/run.json"));
    assert_eq!(m["args"]["resolved"]["kind"], "scene");
    assert!(Path::new(m["args"]["out"].as_str().unwrap()).is_absolute());
}
