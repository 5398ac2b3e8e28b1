use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, Truth};
use crate::classify::{decide_argmax, Prediction};
use crate::ingest::SnippetRef;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 with every empty denominator mapped to 0.
pub fn prf(c: &ConfusionCounts) -> Prf {
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Prf {
        precision: ratio(c.tp, c.tp + c.fp),
        recall: ratio(c.tp, c.tp + c.fn_),
        // 2PR/(P+R) written over counts so exact cases stay exact
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
    }
}

fn check_refs<'a>(refs: impl Iterator<Item = &'a SnippetRef>, truth: &Truth) -> Result<(), EvalError> {
    let seen: BTreeSet<&SnippetRef> = refs.collect();
    let extra: Vec<_> = seen.iter().filter(|s| !truth.contains_key(s)).collect();
    let missing: Vec<_> = truth.keys().filter(|s| !seen.contains(s)).collect();
    if extra.is_empty() && missing.is_empty() {
        return Ok(());
    }
    let example = extra
        .first()
        .map(|s| s.to_string())
        .or_else(|| missing.first().map(|s| s.to_string()))
        .unwrap_or_default();
    Err(EvalError::RefMismatch { missing: missing.len(), extra: extra.len(), example })
}

/// One-vs-rest counts for `target`, where each decision says whether the
/// snippet was called `target`.
pub fn confusion(decisions: &[(SnippetRef, bool)], truth: &Truth, target: &str) -> Result<ConfusionCounts, EvalError> {
    check_refs(decisions.iter().map(|d| &d.0), truth)?;
    if decisions.len() != truth.len() {
        return Err(EvalError::RefMismatch { missing: 0, extra: decisions.len() - truth.len(), example: "duplicate".into() });
    }
    let mut c = ConfusionCounts::default();
    for (s, called) in decisions {
        let actual = truth[s] == target;
        match (called, actual) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// Confusion for the argmax decision rule.
pub fn argmax_confusion(preds: &[Prediction], truth: &Truth, target: &str) -> Result<ConfusionCounts, EvalError> {
    let decisions: Vec<_> = preds.iter().map(|p| (p.snippet.clone(), decide_argmax(p) == target)).collect();
    confusion(&decisions, truth, target)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub target: String,
    pub rows: Vec<SweepRow>,
    pub best_tau: f64,
    pub best_f1: f64,
}

/// `0.01, 0.02, ..., 1.00`.
pub fn default_grid() -> Vec<f64> {
    (1..=100).map(|i| f64::from(i) / 100.0).collect()
}

/// Parses `start:end:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, EvalError> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| EvalError::InvalidGrid(format!("{spec:?}: {e}")))?;
    let [start, end, step] = parts[..] else {
        return Err(EvalError::InvalidGrid(format!("{spec:?}: expected start:end:step")));
    };
    if !(step > 0.0) || !(end >= start) {
        return Err(EvalError::InvalidGrid(format!("{spec:?}: need step > 0 and end >= start")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    // snap to 1e-9 so 0.05 is the same double as the literal
    Ok((0..count).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect())
}

fn check_grid(taus: &[f64]) -> Result<(), EvalError> {
    if taus.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    if taus.iter().any(|&t| !(t > 0.0 && t <= 1.0)) {
        return Err(EvalError::InvalidGrid("thresholds must lie in (0, 1]".into()));
    }
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EvalError::InvalidGrid("thresholds must be strictly increasing".into()));
    }
    Ok(())
}

/// Threshold decision `p[target] >= tau` at every grid point. The best row
/// maximises F1; ties go to the larger threshold.
pub fn sweep(preds: &[Prediction], truth: &Truth, target: &str, taus: &[f64]) -> Result<SweepCurve, EvalError> {
    check_grid(taus)?;
    let mut scored = Vec::with_capacity(preds.len());
    for p in preds {
        let prob = p.prob(target).map_err(|_| EvalError::UnknownClass(target.to_string()))?;
        scored.push((p.snippet.clone(), prob));
    }
    check_refs(scored.iter().map(|s| &s.0), truth)?;
    let actual: Vec<bool> = scored.iter().map(|(s, _)| truth[s] == target).collect();

    let rows: Vec<SweepRow> = taus
        .par_iter()
        .map(|&tau| {
            let mut c = ConfusionCounts::default();
            for ((_, p), &a) in scored.iter().zip(&actual) {
                match (*p >= tau, a) {
                    (true, true) => c.tp += 1,
                    (true, false) => c.fp += 1,
                    (false, true) => c.fn_ += 1,
                    (false, false) => c.tn += 1,
                }
            }
            let m = prf(&c);
            SweepRow { tau, precision: m.precision, recall: m.recall, f1: m.f1, tp: c.tp, fp: c.fp, fn_: c.fn_ }
        })
        .collect();
    let best = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.f1.total_cmp(&b.1.f1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("grid not empty");
    Ok(SweepCurve { target: target.to_string(), best_tau: rows[best].tau, best_f1: rows[best].f1, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(i: u32, airgun: f64) -> Prediction {
        Prediction {
            snippet: SnippetRef::new("t", i),
            classes: vec!["airgun".into(), "background".into()],
            probs: vec![airgun, 1.0 - airgun],
        }
    }

    fn fixture() -> (Vec<Prediction>, Truth) {
        let probs = [(0.9, true), (0.4, true), (0.2, true), (0.1, false), (0.35, false)];
        let preds = probs.iter().enumerate().map(|(i, &(p, _))| pred(i as u32, p)).collect();
        let truth = probs
            .iter()
            .enumerate()
            .map(|(i, &(_, pos))| (SnippetRef::new("t", i as u32), if pos { "airgun" } else { "background" }.to_string()))
            .collect();
        (preds, truth)
    }

    #[test]
    fn prf_conventions() {
        let m = prf(&ConfusionCounts { tp: 3, fp: 1, fn_: 2, tn: 0 });
        assert_eq!((m.precision, m.recall), (0.75, 0.6));
        assert_eq!(m.f1, 2.0 / 3.0);
        assert_eq!(prf(&ConfusionCounts { tp: 0, fp: 4, fn_: 2, tn: 1 }).f1, 0.0);
        assert_eq!(prf(&ConfusionCounts::default()), Prf { precision: 0.0, recall: 0.0, f1: 0.0 });
        assert_eq!(prf(&ConfusionCounts { tp: 5, fp: 0, fn_: 0, tn: 9 }).f1, 1.0);
    }

    #[test]
    fn hand_tally() {
        let truth: Truth = ["a", "a", "b", "a", "b", "b"]
            .iter()
            .enumerate()
            .map(|(i, c)| (SnippetRef::new("x", i as u32), c.to_string()))
            .collect();
        let calls = [true, false, true, true, false, false];
        let d: Vec<_> = calls.iter().enumerate().map(|(i, &c)| (SnippetRef::new("x", i as u32), c)).collect();
        let c = confusion(&d, &truth, "a").unwrap();
        assert_eq!(c, ConfusionCounts { tp: 2, fp: 1, fn_: 1, tn: 2 });
        assert_eq!(c.total(), 6);
        assert!(matches!(confusion(&d[..5], &truth, "a"), Err(EvalError::RefMismatch { missing: 1, .. })));
    }

    #[test]
    fn five_snippet_sweep() {
        let (preds, truth) = fixture();
        let curve = sweep(&preds, &truth, "airgun", &[0.05, 0.3333]).unwrap();
        assert_eq!(curve.rows[1].precision, 2.0 / 3.0);
        assert_eq!(curve.rows[1].recall, 2.0 / 3.0);
        assert_eq!(curve.rows[1].f1, 2.0 / 3.0);
        assert_eq!((curve.rows[0].precision, curve.rows[0].recall, curve.rows[0].f1), (0.6, 1.0, 0.75));
        assert_eq!(curve.best_tau, 0.05);
        assert_eq!(curve.best_f1, 0.75);
    }

    #[test]
    fn ties_go_to_largest_tau() {
        let preds = vec![pred(0, 1.0), pred(1, 0.0)];
        let truth: Truth = [(SnippetRef::new("t", 0), "airgun".to_string()), (SnippetRef::new("t", 1), "background".to_string())]
            .into_iter()
            .collect();
        let curve = sweep(&preds, &truth, "airgun", &default_grid()).unwrap();
        assert!(curve.rows.iter().all(|r| r.f1 == 1.0));
        assert_eq!(curve.best_tau, 1.0);
    }

    #[test]
    fn grid_parsing_and_validation() {
        let g = parse_grid("0.01:1.0:0.01").unwrap();
        assert_eq!(g, default_grid());
        assert!(g.contains(&0.05));
        assert!(parse_grid("0.1:0.05:0.01").is_err());
        assert!(parse_grid("a:b").is_err());
        let (preds, truth) = fixture();
        assert!(matches!(sweep(&preds, &truth, "airgun", &[]), Err(EvalError::EmptyGrid)));
        assert!(matches!(sweep(&preds, &truth, "airgun", &[0.5, 0.5]), Err(EvalError::InvalidGrid(_))));
        assert!(matches!(sweep(&preds, &truth, "airgun", &[0.0, 0.5]), Err(EvalError::InvalidGrid(_))));
        assert!(matches!(sweep(&preds, &truth, "walrus", &[0.5]), Err(EvalError::UnknownClass(_))));
    }
}
