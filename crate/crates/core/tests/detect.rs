mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triage_core::detect::{airgun_template, detect, ncc, pick_peaks, Template};
use triage_core::ingest::AudioClip;
use triage_core::synth::pulse_train;

fn random(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn template_in_silence_peaks_at_insertion_point() {
    let tpl: Template<f64> = airgun_template(2_000, 3);
    let mut x = vec![0.0; 4_000];
    for (k, v) in tpl.samples.iter().enumerate() {
        x[1_000 + k] = *v;
    }
    let scores = ncc(&AudioClip::new("s", x.clone(), 2_000), &tpl).unwrap();
    let oracle = common::ncc_oracle(&x, &tpl.samples);
    let best = (0..scores.len()).max_by(|&a, &b| scores[a].total_cmp(&scores[b])).unwrap();
    let best_oracle = (0..oracle.len()).max_by(|&a, &b| oracle[a].total_cmp(&oracle[b])).unwrap();
    assert_eq!(best, 1_000);
    assert_eq!(best_oracle, 1_000);
    assert!((scores[1_000] - 1.0).abs() < 1e-12);
}

#[test]
fn fft_path_matches_direct_oracle_on_random_signals() {
    for seed in 0..5 {
        let x = random(seed, 20_000 + 1_000 * seed as usize);
        let y = random(seed + 100, 64 + 200 * seed as usize);
        let tpl = Template::new("r", y.clone(), 1_000).unwrap();
        let got = ncc(&AudioClip::new("c", x.clone(), 1_000), &tpl).unwrap();
        let want = common::ncc_oracle(&x, &y);
        assert_eq!(got.len(), want.len());
        let err = got.iter().zip(&want).fold(0.0f64, |e, (a, b)| e.max((a - b).abs()));
        assert!(err < 1e-6, "seed {seed}: {err}");
    }
}

#[test]
fn ten_pulses_at_10db_are_all_found() {
    let tpl: Template<f64> = airgun_template(22_050, 11);
    let (clip, truth) = pulse_train(&tpl, 10, 10.0, 30.0, 0.05, 99);
    let events = detect(&clip, &tpl, 0.5, 0.5).unwrap();
    assert_eq!(events.len(), 10, "{events:?}");
    for (e, t) in events.iter().zip(&truth) {
        assert!((e.offset_s - t).abs() <= 1e-3, "{} vs {t}", e.offset_s);
        assert!(e.score >= 0.5);
    }
}

#[test]
fn two_close_peaks_keep_the_stronger() {
    let mut s = vec![0.0f64; 1_000];
    s[300] = 0.8;
    s[400] = 0.9;
    let ev = pick_peaks(&s, 1_000, 0.5, 0.5).unwrap();
    assert_eq!(ev.len(), 1);
    assert_eq!(ev[0].offset_s, 0.4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn amplitude_invariant_and_bounded(seed in 0u64..10_000, gain in 1e-3f64..1e3, m in 32usize..200, dc in -5.0f64..5.0) {
        let x: Vec<f64> = random(seed, 3_000).iter().map(|v| v + dc).collect();
        let tpl = Template::new("p", random(seed ^ 0xabc, m), 500).unwrap();
        let a = ncc(&AudioClip::new("a", x.clone(), 500), &tpl).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * gain).collect();
        let b = ncc(&AudioClip::new("b", scaled, 500), &tpl).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-9);
            prop_assert!(u.abs() <= 1.0 + 1e-9);
        }
    }
}
