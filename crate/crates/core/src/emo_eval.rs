//! Embedding-space clustering evaluation and the utterance-level perceptual
//! losses, computed over vectors supplied by an external recognizer.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::csv_err;

const PROB_FLOOR: f64 = 1e-12;
const SIMPLEX_TOL: f64 = 1e-6;

/// Labeled embeddings, one row per utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub embeddings: Array2<f64>,
    /// Class index per row, `< class_names.len()`.
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Row identifiers, when the set was read from a file.
    pub ids: Vec<String>,
}

impl EmbeddingSet {
    pub fn new(
        embeddings: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != embeddings.nrows() {
            return Err(Error::DimensionMismatch {
                expected: embeddings.nrows(),
                actual: labels.len(),
            });
        }
        if embeddings.ncols() == 0 {
            return Err(Error::InvalidParams(
                "embeddings need at least one dimension".into(),
            ));
        }
        if embeddings.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embeddings".into()));
        }
        let k = class_names.len();
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidParams(format!(
                "label {bad} out of range for {k} classes"
            )));
        }
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass(class_names[i].clone()));
        }
        let ids = (0..labels.len()).map(|i| i.to_string()).collect();
        Ok(Self {
            embeddings,
            labels,
            class_names,
            ids,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.ncols()
    }

    /// Applies `f` to every embedding row.
    pub fn map_rows(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Self {
        let rows: Vec<f64> = self
            .embeddings
            .outer_iter()
            .flat_map(|r| f(&r.to_vec()))
            .collect();
        let d = rows.len() / self.embeddings.nrows();
        Self {
            embeddings: Array2::from_shape_vec((self.embeddings.nrows(), d), rows)
                .expect("row length is uniform"),
            ..self.clone()
        }
    }
}

/// Class means, `K x D`.
pub fn centroids(es: &EmbeddingSet) -> Result<Array2<f64>> {
    let (k, d) = (es.n_classes(), es.dim());
    let mut sums = Array2::zeros((k, d));
    let mut counts = vec![0usize; k];
    for (row, &l) in es.embeddings.outer_iter().zip(&es.labels) {
        let mut acc = sums.row_mut(l);
        acc += &row;
        counts[l] += 1;
    }
    for (i, mut row) in sums.outer_iter_mut().enumerate() {
        if counts[i] == 0 {
            return Err(Error::EmptyClass(es.class_names[i].clone()));
        }
        row /= counts[i] as f64;
    }
    Ok(sums)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub class_names: Vec<String>,
    pub centroids: Vec<Vec<f64>>,
    pub dist_inter: f64,
    pub dist_intra: f64,
    pub ratio: f64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Intra-class over inter-class mean distance; lower is tighter clustering.
///
/// ```text
/// inter = 1/(K(K-1)) sum_i 1/N_i sum_{e in E_i} sum_{j != i} |e - c_j|
/// intra = 1/K        sum_i 1/N_i sum_{e in E_i} |e - c_i|
/// ```
pub fn clustering_ratio(es: &EmbeddingSet) -> Result<ClusterReport> {
    let k = es.n_classes();
    if k < 2 {
        return Err(Error::InvalidParams(format!(
            "need at least 2 classes, got {k}"
        )));
    }
    let c = centroids(es)?;
    let rows: Vec<Vec<f64>> = c.outer_iter().map(|r| r.to_vec()).collect();
    let mut inter = vec![0.0; k];
    let mut intra = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (e, &i) in es.embeddings.outer_iter().zip(&es.labels) {
        let e = e.to_vec();
        counts[i] += 1;
        intra[i] += euclidean(&e, &rows[i]);
        inter[i] += (0..k)
            .filter(|&j| j != i)
            .map(|j| euclidean(&e, &rows[j]))
            .sum::<f64>();
    }
    let kf = k as f64;
    let dist_inter = (0..k).map(|i| inter[i] / counts[i] as f64).sum::<f64>() / (kf * (kf - 1.0));
    let dist_intra = (0..k).map(|i| intra[i] / counts[i] as f64).sum::<f64>() / kf;
    if !(dist_inter > 0.0) {
        return Err(Error::DegenerateClusters);
    }
    Ok(ClusterReport {
        class_names: es.class_names.clone(),
        centroids: rows,
        dist_inter,
        dist_intra,
        ratio: dist_intra / dist_inter,
    })
}

/// Cross-entropy between a one-hot target and predicted class probabilities.
pub fn emotion_classification_loss(label: &[f64], probs: &[f64]) -> Result<f64> {
    if label.len() != probs.len() {
        return Err(Error::DimensionMismatch {
            expected: label.len(),
            actual: probs.len(),
        });
    }
    let target = label.iter().position(|&v| v == 1.0);
    let one_hot = target.is_some() && label.iter().filter(|&&v| v != 0.0).count() == 1;
    let Some(target) = target.filter(|_| one_hot) else {
        return Err(Error::InvalidDistribution("label is not one-hot".into()));
    };
    if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidDistribution(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(-probs[target].max(PROB_FLOOR).ln())
}

/// Root-mean-square difference between two embeddings.
pub fn emotion_similarity_loss(h_emo: &[f64], h_ser: &[f64]) -> Result<f64> {
    if h_emo.len() != h_ser.len() {
        return Err(Error::DimensionMismatch {
            expected: h_emo.len(),
            actual: h_ser.len(),
        });
    }
    if h_emo.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sq: f64 = h_emo.iter().zip(h_ser).map(|(a, b)| (a - b).powi(2)).sum();
    Ok((sq / h_emo.len() as f64).sqrt())
}

/// Reads `id,label,d0..dN`. Class indices follow sorted label names.
pub fn read_embeddings_csv(path: &Path) -> Result<EmbeddingSet> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let parse = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = rd.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
        return Err(parse(1, "expected header id,label,d0,...".into()));
    }
    let d = header.len() - 2;
    let mut ids = Vec::new();
    let mut names = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse(line, e.to_string()))?;
        for field in rec.iter().skip(2) {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| parse(line, e.to_string()))?,
            );
        }
        ids.push(rec[0].to_string());
        names.push(rec[1].to_string());
    }
    let classes: BTreeMap<&str, usize> = names
        .iter()
        .map(String::as_str)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n, i))
        .collect();
    let labels = names.iter().map(|n| classes[n.as_str()]).collect();
    let class_names = classes.keys().map(|s| s.to_string()).collect();
    let embeddings =
        Array2::from_shape_vec((ids.len(), d), values).map_err(|e| parse(0, e.to_string()))?;
    let mut es = EmbeddingSet::new(embeddings, labels, class_names)?;
    es.ids = ids;
    Ok(es)
}
