use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifyError, TrainMeta};
use crate::features::Embedding;
use crate::ingest::SnippetRef;
use crate::scalar::{dot, Scalar};

/// Multinomial logistic regression over fixed-length embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel<T = f64> {
    pub classes: Vec<String>,
    pub dim: usize,
    /// `classes.len() x dim`, row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    #[serde(default)]
    pub train_meta: TrainMeta,
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn zeros(classes: Vec<String>, dim: usize) -> Self {
        let c = classes.len();
        Self { classes, dim, weights: vec![T::zero(); c * dim], bias: vec![T::zero(); c], train_meta: TrainMeta::default() }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        let c = self.classes.len();
        if c < 2 {
            return Err(ClassifyError::InvalidModel(format!("{c} classes, need at least 2")));
        }
        if self.weights.len() != c * self.dim || self.bias.len() != c {
            return Err(ClassifyError::InvalidModel("parameter shapes disagree with class count".into()));
        }
        if !self.weights.iter().chain(&self.bias).all(|v| v.is_finite()) {
            return Err(ClassifyError::InvalidModel("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn row(&self, class: usize) -> &[T] {
        &self.weights[class * self.dim..(class + 1) * self.dim]
    }

    pub fn class_index(&self, name: &str) -> Result<usize, ClassifyError> {
        self.classes
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ClassifyError::UnknownClass(name.to_string()))
    }

    pub fn logits(&self, e: &[T]) -> Result<Vec<T>, ClassifyError> {
        if e.len() != self.dim {
            return Err(ClassifyError::DimensionMismatch { expected: self.dim, found: e.len() });
        }
        Ok((0..self.classes.len()).map(|c| dot(self.row(c), e) + self.bias[c]).collect())
    }

    /// Class probabilities for one embedding vector.
    pub fn probabilities(&self, e: &[T]) -> Result<Vec<T>, ClassifyError> {
        Ok(softmax(&self.logits(e)?))
    }

    pub fn predict(&self, e: &Embedding<T>) -> Result<Prediction, ClassifyError> {
        let probs = self.probabilities(&e.vector)?;
        Ok(Prediction {
            snippet: e.snippet.clone(),
            classes: self.classes.clone(),
            probs: probs.into_iter().map(Scalar::as_f64).collect(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifyError>
    where
        T: Serialize,
    {
        let path = path.as_ref();
        let tmp = path.with_extension("json.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp)?);
            serde_json::to_writer_pretty(&mut w, self).map_err(std::io::Error::other)?;
            w.flush()?;
        }
        std::fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifyError>
    where
        T: for<'de> Deserialize<'de>,
    {
        let text = std::fs::read_to_string(path)?;
        let model: Self = serde_json::from_str(&text).map_err(|e| ClassifyError::Parse { line: e.line(), msg: e.to_string() })?;
        model.validate()?;
        Ok(model)
    }
}

/// Softmax with the maximum logit subtracted first.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|v| v / total).collect()
}

/// Class probabilities for one snippet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    #[serde(flatten)]
    pub snippet: SnippetRef,
    pub classes: Vec<String>,
    pub probs: Vec<f64>,
}

impl Prediction {
    pub fn prob(&self, class: &str) -> Result<f64, ClassifyError> {
        self.classes
            .iter()
            .position(|c| c == class)
            .map(|i| self.probs[i])
            .ok_or_else(|| ClassifyError::UnknownClass(class.to_string()))
    }
}

/// Most probable class; the earliest class wins ties.
pub fn decide_argmax(p: &Prediction) -> &str {
    let mut best = 0;
    for (i, &v) in p.probs.iter().enumerate() {
        if v > p.probs[best] {
            best = i;
        }
    }
    &p.classes[best]
}

/// `p[target] >= tau`.
pub fn decide_threshold(p: &Prediction, target: &str, tau: f64) -> Result<bool, ClassifyError> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(ClassifyError::InvalidThreshold(tau));
    }
    Ok(p.prob(target)? >= tau)
}

pub fn write_predictions(path: impl AsRef<Path>, preds: &[Prediction]) -> Result<(), ClassifyError> {
    let mut w = BufWriter::new(File::create(path)?);
    for p in preds {
        serde_json::to_writer(&mut w, p).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<Vec<Prediction>, ClassifyError> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| ClassifyError::Parse { line: i + 1, msg: e.to_string() })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pred(probs: &[f64]) -> Prediction {
        Prediction {
            snippet: SnippetRef::new("c", 0),
            classes: ["airgun", "bearded_seal", "background"].map(String::from).to_vec(),
            probs: probs.to_vec(),
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = ClassifierModel::<f64>::zeros(vec!["a".into(), "b".into(), "c".into()], 4);
        let p = m.probabilities(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_is_stable() {
        let p = softmax(&[1000.0f64, 0.0, 0.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] < 1e-300);
        let q = softmax(&[-1000.0f32, -1000.0]);
        assert_eq!(q, vec![0.5, 0.5]);
    }

    #[test]
    fn argmax_rules() {
        assert_eq!(decide_argmax(&pred(&[0.5, 0.3, 0.2])), "airgun");
        let third = 1.0 / 3.0;
        assert_eq!(decide_argmax(&pred(&[third, third, third])), "airgun");
        assert_eq!(decide_argmax(&pred(&[0.2, 0.4, 0.4])), "bearded_seal");
    }

    #[test]
    fn threshold_rules() {
        assert!(decide_threshold(&pred(&[0.06, 0.5, 0.44]), "airgun", 0.05).unwrap());
        assert!(!decide_threshold(&pred(&[0.999, 0.0, 0.001]), "airgun", 1.0).unwrap());
        assert!(decide_threshold(&pred(&[0.25, 0.5, 0.25]), "airgun", 0.25).unwrap());
        assert!(matches!(decide_threshold(&pred(&[0.2, 0.4, 0.4]), "walrus", 0.5), Err(ClassifyError::UnknownClass(_))));
        assert!(decide_threshold(&pred(&[0.2, 0.4, 0.4]), "airgun", 0.0).is_err());
    }

    #[test]
    fn dimension_checked_and_json_round_trip() {
        let mut m = ClassifierModel::<f64>::zeros(vec!["a".into(), "b".into()], 3);
        m.weights[4] = 0.25;
        assert!(matches!(m.logits(&[1.0]), Err(ClassifyError::DimensionMismatch { .. })));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.json");
        m.save(&p).unwrap();
        assert_eq!(ClassifierModel::<f64>::load(&p).unwrap(), m);
        let bad = ClassifierModel::<f64>::zeros(vec!["a".into()], 3);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn prediction_lines_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("preds.jsonl");
        let preds = vec![pred(&[0.1, 0.2, 0.7]), pred(&[0.6, 0.2, 0.2])];
        write_predictions(&p, &preds).unwrap();
        assert_eq!(read_predictions(&p).unwrap(), preds);
        assert!(std::fs::read_to_string(&p).unwrap().starts_with("{\"clip_id\":\"c\",\"index\":0,"));
    }
}
