use proptest::prelude::*;
use vpoint::benchmark::{fuse_one, run_suite, ClipRef, PropagatorKind};
use vpoint::fusion::{FusionConfig, KeyframeSet, Strategy};
use vpoint::metrics::{jf, point_prf};
use vpoint::store;
use vpoint::synth::{gen_suite, NoiseConfig, SuiteSpec, SynthClip};

fn spec(clips: usize, frames: usize) -> SuiteSpec {
    SuiteSpec {
        clips,
        width: 40,
        height: 32,
        frame_count: frames,
        object_counts: None,
        min_objects: 1,
        max_objects: 5,
        noise: NoiseConfig {
            jitter: 1.5,
            dropout: 0.2,
        },
    }
}

#[test]
fn stored_suite_round_trips_and_fuses_identically() {
    let dir = tempfile::tempdir().unwrap();
    let clips = gen_suite(&spec(3, 9), 12).unwrap();
    for c in &clips {
        store::write_synth_clip(&dir.path().join(&c.name), c).unwrap();
    }
    let dirs = store::clip_dirs(dir.path()).unwrap();
    assert_eq!(dirs.len(), 3);
    let cfg = FusionConfig::default();
    let kind = PropagatorKind::Noisy { noise: None, seed: 3 };
    for (d, c) in dirs.iter().zip(&clips) {
        let s = store::read_clip(d).unwrap();
        assert_eq!(s.clip, c.gt);
        assert_eq!(s.labels, c.labels);
        assert_eq!(store::read_points(d).unwrap().unwrap(), c.points);
        let stored = ClipRef {
            name: &s.manifest.name,
            seed: s.manifest.seed.unwrap(),
            gt: &s.clip,
            noise: s.manifest.noise.unwrap(),
        };
        assert_eq!(
            fuse_one(stored, None, &cfg, kind).unwrap(),
            fuse_one(c.as_ref(), None, &cfg, kind).unwrap()
        );
    }
}

#[test]
fn keyframes_from_disk_fuse_like_sampled_ones() {
    let dir = tempfile::tempdir().unwrap();
    let c = &gen_suite(&spec(1, 13), 4).unwrap()[0];
    let kf = KeyframeSet::sample(&c.gt, 4).unwrap();
    store::write_keyframes(dir.path(), &c.name, 40, 32, &kf).unwrap();
    let (_, back) = store::read_keyframes(dir.path()).unwrap();
    let cfg = FusionConfig { k: 4, ..Default::default() };
    let kind = PropagatorKind::Noisy { noise: None, seed: 1 };
    assert_eq!(
        fuse_one(c.as_ref(), Some(&back), &cfg, kind).unwrap(),
        fuse_one(c.as_ref(), None, &cfg, kind).unwrap()
    );
}

#[test]
fn generated_points_hit_their_objects() {
    for c in gen_suite(&spec(4, 6), 8).unwrap() {
        let preds: Vec<_> = c.points.iter().map(|p| (p.frame, vpoint::annotator::percent_to_pixel(p.x, p.y, 40, 32))).collect();
        let s = point_prf(&preds, &c.gt).unwrap();
        assert_eq!((s.precision, s.recall), (1.0, 1.0), "{}", c.name);
    }
}

#[test]
fn noise_lowers_scores_but_runs_repeat() {
    let clips = gen_suite(&spec(6, 11), 2).unwrap();
    let refs: Vec<ClipRef> = clips.iter().map(SynthClip::as_ref).collect();
    let cfg = FusionConfig::default();
    let kind = PropagatorKind::Noisy { noise: None, seed: 9 };
    let a = run_suite(&refs, &cfg, kind).unwrap();
    assert_eq!(a, run_suite(&refs, &cfg, kind).unwrap());
    assert!(a.jf < 1.0);
    assert_eq!(run_suite(&refs, &cfg, PropagatorKind::Exact).unwrap().jf, 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_fusion_is_lossless_for_every_strategy(seed in any::<u64>(), k in 1usize..12, s in 0usize..6) {
        let c = &gen_suite(&spec(1, 12), seed).unwrap()[0];
        let cfg = FusionConfig { k, strategy: Strategy::ALL[s], ..Default::default() };
        let fused = fuse_one(c.as_ref(), None, &cfg, PropagatorKind::Exact).unwrap();
        prop_assert_eq!(&fused, &c.gt);
    }

    #[test]
    fn scores_are_bounded(seed in any::<u64>(), noise_seed in any::<u64>()) {
        let c = &gen_suite(&spec(1, 8), seed).unwrap()[0];
        let kind = PropagatorKind::Noisy { noise: None, seed: noise_seed };
        let fused = fuse_one(c.as_ref(), None, &FusionConfig::default(), kind).unwrap();
        let s = jf(&fused, &c.gt).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.j) && (0.0..=1.0).contains(&s.f));
        prop_assert_eq!(s.jf, (s.j + s.f) / 2.0);
    }
}
