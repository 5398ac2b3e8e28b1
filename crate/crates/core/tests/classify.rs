mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triage_core::classify::{
    decide_argmax, decide_threshold, loss_and_gradient, softmax, train, ClassifierModel, Labeled, Prediction, TrainConfig,
};
use triage_core::ingest::SnippetRef;

fn names(c: usize) -> Vec<String> {
    (0..c).map(|i| format!("c{i}")).collect()
}

fn labeled(xs: &[Vec<f64>], ys: &[usize]) -> Vec<Labeled<f64>> {
    xs.iter()
        .zip(ys)
        .enumerate()
        .map(|(i, (x, &y))| Labeled { snippet: SnippetRef::new("s", i as u32), vector: x.clone(), class: y })
        .collect()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (c, d) = (3, 6);
    let mut model = ClassifierModel::<f64>::zeros(names(c), d);
    model.weights.iter_mut().for_each(|w| *w = rng.random_range(-0.5..0.5));
    model.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    let xs: Vec<Vec<f64>> = (0..4).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let ys = vec![0, 2, 1, 2];
    let l2 = 1e-2;
    let g = loss_and_gradient(&model, &xs, &ys, l2).unwrap();
    let base = common::softmax_loss(&model.weights, &model.bias, d, &xs, &ys, l2);
    assert!((g.loss - base).abs() < 1e-12);

    let eps = 1e-5;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-8);
    let mut worst = 0.0f64;
    for i in 0..model.weights.len() {
        let mut w = model.weights.clone();
        w[i] += eps;
        let up = common::softmax_loss(&w, &model.bias, d, &xs, &ys, l2);
        w[i] -= 2.0 * eps;
        let down = common::softmax_loss(&w, &model.bias, d, &xs, &ys, l2);
        worst = worst.max(rel(g.weights[i], (up - down) / (2.0 * eps)));
    }
    for i in 0..c {
        let mut b = model.bias.clone();
        b[i] += eps;
        let up = common::softmax_loss(&model.weights, &b, d, &xs, &ys, l2);
        b[i] -= 2.0 * eps;
        let down = common::softmax_loss(&model.weights, &b, d, &xs, &ys, l2);
        worst = worst.max(rel(g.bias[i], (up - down) / (2.0 * eps)));
    }
    assert!(worst < 1e-5, "max relative error {worst}");
}

#[test]
fn separable_clouds_are_learned() {
    let (xs, ys) = common::separable_clouds(3, 3, 100, 16);
    let data = labeled(&xs, &ys);
    let model = train(&data, &[], names(3), &TrainConfig::default()).unwrap();
    let correct = xs
        .iter()
        .zip(&ys)
        .filter(|(x, &y)| {
            let p = model.probabilities(x).unwrap();
            (0..3).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap() == y
        })
        .count();
    assert!(correct as f64 / 300.0 >= 0.99, "{correct}/300");
    assert!(model.train_meta.train_accuracy >= 0.99);
}

#[test]
fn full_batch_loss_never_increases() {
    let (xs, ys) = common::separable_clouds(9, 3, 30, 5);
    // overlapping clouds so the optimum is interior
    let xs: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().map(|v| v * 0.1).collect()).collect();
    let data = labeled(&xs, &ys);
    let cfg = TrainConfig { epochs: 60, batch: 1_000, lr: 0.01, l2: 1e-3, seed: 1 };
    let model = train(&data, &[], names(3), &cfg).unwrap();
    let losses = &model.train_meta.train_losses;
    assert_eq!(losses.len(), 60);
    for w in losses.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn softmax_matches_closed_form() {
    // logits ln 1, ln 2, ln 3 give 1/6, 2/6, 3/6
    let p = softmax(&[0.0f64, 2f64.ln(), 3f64.ln()]);
    let want = [1.0 / 6.0, 1.0 / 3.0, 0.5];
    for (a, b) in p.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    // shifting every logit by 700 changes nothing
    let q = softmax(&[700.0f64, 700.0 + 2f64.ln(), 700.0 + 3f64.ln()]);
    for (a, b) in q.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn training_is_bitwise_reproducible() {
    let (xs, ys) = common::separable_clouds(5, 3, 40, 8);
    let data = labeled(&xs, &ys);
    let a = train(&data, &data[..20], names(3), &TrainConfig::default()).unwrap();
    let b = train(&data, &data[..20], names(3), &TrainConfig::default()).unwrap();
    assert_eq!(a.weights, b.weights);
    assert_eq!(a.bias, b.bias);
}

fn prediction(probs: Vec<f64>) -> Prediction {
    Prediction { snippet: SnippetRef::new("p", 0), classes: names(probs.len()), probs }
}

proptest! {
    #[test]
    fn argmax_floor_for_three_classes(z in prop::array::uniform3(-50.0f64..50.0)) {
        let p = prediction(softmax(&z).to_vec());
        let winner = decide_argmax(&p);
        prop_assert!(p.prob(winner).unwrap() >= 1.0 / 3.0);
    }

    #[test]
    fn argmax_ignores_common_shift(z in prop::array::uniform3(-50.0f64..50.0), shift in -100.0f64..100.0) {
        let a = prediction(softmax(&z).to_vec());
        let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let b = prediction(softmax(&shifted));
        prop_assert_eq!(decide_argmax(&a), decide_argmax(&b));
    }

    #[test]
    fn lower_threshold_detects_superset(p0 in 0.0f64..1.0, t1 in 0.001f64..1.0, t2 in 0.001f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let p = prediction(vec![p0, 1.0 - p0]);
        if decide_threshold(&p, "c0", hi).unwrap() {
            prop_assert!(decide_threshold(&p, "c0", lo).unwrap());
        }
    }
}
