//! Relative-attribute ranking of emotion intensity.
//!
//! A linear function `r(x) = w . x` is learned per emotion from ordered pairs
//! (emotional outranks neutral) and similar pairs (same class, equal
//! intensity) with a max-margin objective on squared slacks. Raw scores are
//! min-max normalized over the training samples to give an intensity in
//! `[0, 1]`.

mod solver;

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use solver::{Problem, SolverSettings};

pub use solver::SolverReport;

/// Ordered pairs are subsampled above this many.
pub const MAX_ORDERED_PAIRS: usize = 10_000;
pub const MODEL_VERSION: u32 = 1;
const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Neutral,
    Emotional,
}

/// Training samples with their ordered and similar index pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSets {
    /// `T x d`, one row per training sample.
    pub features: Array2<f64>,
    /// `(a, b)`: sample `a` must outrank sample `b`.
    pub ordered: Vec<(usize, usize)>,
    /// `(a, b)`: samples of equal intensity.
    pub similar: Vec<(usize, usize)>,
}

impl PairSets {
    pub fn new(
        features: Array2<f64>,
        ordered: Vec<(usize, usize)>,
        similar: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let n = features.nrows();
        for &(a, b) in ordered.iter().chain(&similar) {
            if a >= n || b >= n {
                return Err(Error::InvalidParams(format!(
                    "pair ({a}, {b}) out of range for {n} samples"
                )));
            }
            if a == b {
                return Err(Error::InvalidParams(format!(
                    "pair ({a}, {a}) is degenerate"
                )));
            }
        }
        Ok(Self {
            features,
            ordered,
            similar,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Pairs every emotional sample with every neutral one (subsampled to
/// [`MAX_ORDERED_PAIRS`]) and draws `n_similar` same-class pairs, split
/// between neutral-neutral and emotional-emotional. `n_similar` defaults to
/// half the ordered count. All sampling is driven by `seed`.
pub fn build_pairs(
    features: Array2<f64>,
    labels: &[Polarity],
    n_similar: Option<usize>,
    seed: u64,
) -> Result<PairSets> {
    if labels.len() != features.nrows() {
        return Err(Error::DimensionMismatch {
            expected: features.nrows(),
            actual: labels.len(),
        });
    }
    let of =
        |p: Polarity| -> Vec<usize> { (0..labels.len()).filter(|&i| labels[i] == p).collect() };
    let (neutral, emotional) = (of(Polarity::Neutral), of(Polarity::Emotional));
    if neutral.is_empty() {
        return Err(Error::EmptyClass("neutral".into()));
    }
    if emotional.is_empty() {
        return Err(Error::EmptyClass("emotional".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = emotional.len() * neutral.len();
    let to_pair = |k: usize| (emotional[k / neutral.len()], neutral[k % neutral.len()]);
    let ordered: Vec<(usize, usize)> = if total <= MAX_ORDERED_PAIRS {
        (0..total).map(to_pair).collect()
    } else {
        let mut picks = index::sample(&mut rng, total, MAX_ORDERED_PAIRS).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(to_pair).collect()
    };

    let n_similar = n_similar.unwrap_or(ordered.len() / 2);
    let (nn_ok, ee_ok) = (neutral.len() >= 2, emotional.len() >= 2);
    let (n_nn, n_ee) = match (nn_ok, ee_ok) {
        (true, true) => (n_similar / 2, n_similar - n_similar / 2),
        (true, false) => (n_similar, 0),
        (false, true) => (0, n_similar),
        (false, false) => (0, 0),
    };
    let mut similar = Vec::with_capacity(n_nn + n_ee);
    for (class, count) in [(&neutral, n_nn), (&emotional, n_ee)] {
        for _ in 0..count {
            let i = rng.gen_range(0..class.len());
            let mut j = rng.gen_range(0..class.len() - 1);
            if j >= i {
                j += 1;
            }
            similar.push((class[i], class[j]));
        }
    }
    PairSets::new(features, ordered, similar)
}

/// Squared-slack primal objective at `w` on the pair features as given.
pub fn objective(w: &[f64], pairs: &PairSets, c: f64) -> Result<f64> {
    if w.len() != pairs.dim() {
        return Err(Error::DimensionMismatch {
            expected: pairs.dim(),
            actual: w.len(),
        });
    }
    let problem = Problem {
        samples: &pairs.features,
        ordered: &pairs.ordered,
        similar: &pairs.similar,
        c,
    };
    Ok(problem.objective(ndarray::ArrayView1::from(w)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerConfig {
    /// Margin/slack trade-off.
    pub c: f64,
    /// Z-score features before optimizing.
    pub standardize: bool,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for RankerConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            standardize: true,
            max_iter: 200,
            grad_tol: 1e-6,
        }
    }
}

/// A learned per-emotion intensity ranker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingModel {
    pub version: u32,
    pub emotion: String,
    #[serde(rename = "C")]
    pub c: f64,
    pub weights: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub attr_min: f64,
    pub attr_max: f64,
    pub solver_report: SolverReport,
}

impl RankingModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: n,
            });
        }
        Ok(())
    }

    /// Unnormalized attribute `w . standardize(x)`.
    pub fn raw_score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(x.iter()
            .zip(&self.feature_mean)
            .zip(&self.feature_std)
            .zip(&self.weights)
            .map(|(((v, m), s), w)| w * (v - m) / s)
            .sum())
    }

    /// Intensity in `[0, 1]`; inputs beyond the training range are clamped.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        let raw = self.raw_score(x)?;
        if !(self.attr_max > self.attr_min) {
            return Ok(0.5);
        }
        Ok(((raw - self.attr_min) / (self.attr_max - self.attr_min)).clamp(0.0, 1.0))
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        for len in [self.feature_mean.len(), self.feature_std.len()] {
            if len != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: len,
                });
            }
        }
        if self.feature_std.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidParams("feature_std must be positive".into()));
        }
        if !(self.attr_max >= self.attr_min) {
            return Err(Error::InvalidParams("attr_max < attr_min".into()));
        }
        Ok(())
    }
}

pub fn score(model: &RankingModel, x: &[f64]) -> Result<f64> {
    model.score(x)
}

/// Per-dimension mean and floored population standard deviation.
fn standardization(features: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    let mean = features
        .mean_axis(Axis(0))
        .expect("training matrix has rows");
    let std = features.std_axis(Axis(0), 0.0).mapv(|s| s.max(STD_FLOOR));
    (mean, std)
}

pub fn train_ranker(pairs: &PairSets, emotion: &str, cfg: &RankerConfig) -> Result<RankingModel> {
    if pairs.ordered.is_empty() {
        return Err(Error::NoOrderedPairs);
    }
    if pairs.features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training features".into()));
    }
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::InvalidParams(format!(
            "C must be positive, got {}",
            cfg.c
        )));
    }
    let d = pairs.dim();
    let (mean, std) = if cfg.standardize {
        standardization(&pairs.features)
    } else {
        (Array1::zeros(d), Array1::ones(d))
    };
    let z = (&pairs.features - &mean) / &std;
    let problem = Problem {
        samples: &z,
        ordered: &pairs.ordered,
        similar: &pairs.similar,
        c: cfg.c,
    };
    let (w, report) = problem.minimize(&SolverSettings {
        max_iter: cfg.max_iter,
        grad_tol: cfg.grad_tol,
    });
    let mut model = RankingModel {
        version: MODEL_VERSION,
        emotion: emotion.to_string(),
        c: cfg.c,
        weights: w.to_vec(),
        feature_mean: mean.to_vec(),
        feature_std: std.to_vec(),
        attr_min: 0.0,
        attr_max: 0.0,
        solver_report: report,
    };
    // Same arithmetic as scoring, so training extremes map exactly to 0 and 1.
    let raw: Vec<f64> = pairs
        .features
        .rows()
        .into_iter()
        .map(|r| model.raw_score(&r.to_vec()))
        .collect::<Result<_>>()?;
    model.attr_min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    model.attr_max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(model)
}

pub fn save_model(model: &RankingModel, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(model)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<RankingModel> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let found = value
        .get("version")
        .and_then(|v| v.as_u64())
        .map(|v| v as u32)
        .unwrap_or(0);
    if found != MODEL_VERSION {
        return Err(Error::SchemaVersionMismatch {
            expected: MODEL_VERSION,
            found,
        });
    }
    let model: RankingModel = serde_json::from_value(value)?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Objective evaluated straight from the definition, pair by pair.
    fn oracle_objective(
        w: &[f64],
        x: &Array2<f64>,
        o: &[(usize, usize)],
        s: &[(usize, usize)],
        c: f64,
    ) -> f64 {
        let margin = |a: usize, b: usize| -> f64 {
            (0..w.len()).map(|k| w[k] * (x[[a, k]] - x[[b, k]])).sum()
        };
        let mut f = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
        for &(a, b) in o {
            let xi = (1.0 - margin(a, b)).max(0.0);
            f += c * xi * xi;
        }
        for &(a, b) in s {
            let gamma = margin(a, b).abs();
            f += c * gamma * gamma;
        }
        f
    }

    fn grid_min(x: &Array2<f64>, o: &[(usize, usize)], s: &[(usize, usize)], c: f64) -> f64 {
        let steps: Vec<f64> = (0..=1000).map(|i| -5.0 + 0.01 * i as f64).collect();
        let mut best = f64::INFINITY;
        if x.ncols() == 1 {
            for &a in &steps {
                best = best.min(oracle_objective(&[a], x, o, s, c));
            }
        } else {
            for &a in &steps {
                for &b in &steps {
                    best = best.min(oracle_objective(&[a, b], x, o, s, c));
                }
            }
        }
        best
    }

    fn raw_cfg(c: f64) -> RankerConfig {
        RankerConfig {
            c,
            standardize: false,
            ..RankerConfig::default()
        }
    }

    fn toy() -> (Array2<f64>, Vec<Polarity>) {
        use Polarity::*;
        (
            array![[0.0], [0.0], [2.0], [2.0]],
            vec![Neutral, Neutral, Emotional, Emotional],
        )
    }

    #[test]
    fn cross_product_pairs() {
        let (x, labels) = toy();
        let p = build_pairs(x, &labels, Some(2), 3).unwrap();
        assert_eq!(p.ordered.len(), 4);
        assert_eq!(p.similar.len(), 2);
        for &(a, b) in &p.ordered {
            assert_eq!(labels[a], Polarity::Emotional);
            assert_eq!(labels[b], Polarity::Neutral);
        }
        for &(a, b) in &p.similar {
            assert_ne!(a, b);
            assert_eq!(labels[a], labels[b]);
        }
    }

    #[test]
    fn pairs_are_deterministic_per_seed() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| (i * 3 + j) as f64);
        let labels: Vec<Polarity> = (0..40)
            .map(|i| {
                if i % 3 == 0 {
                    Polarity::Emotional
                } else {
                    Polarity::Neutral
                }
            })
            .collect();
        let a = build_pairs(x.clone(), &labels, Some(25), 42).unwrap();
        let b = build_pairs(x.clone(), &labels, Some(25), 42).unwrap();
        assert_eq!(a, b);
        let c = build_pairs(x, &labels, Some(25), 43).unwrap();
        assert_ne!(a.similar, c.similar);
    }

    #[test]
    fn large_cross_products_are_subsampled() {
        let n = 250;
        let x = Array2::zeros((n, 1));
        let labels: Vec<Polarity> = (0..n)
            .map(|i| {
                if i < 125 {
                    Polarity::Emotional
                } else {
                    Polarity::Neutral
                }
            })
            .collect();
        let p = build_pairs(x, &labels, None, 1).unwrap();
        assert_eq!(p.ordered.len(), MAX_ORDERED_PAIRS);
        assert_eq!(p.similar.len(), MAX_ORDERED_PAIRS / 2);
        let unique: std::collections::HashSet<_> = p.ordered.iter().collect();
        assert_eq!(unique.len(), MAX_ORDERED_PAIRS);
    }

    #[test]
    fn missing_class_is_an_error() {
        let x = Array2::zeros((3, 1));
        let all_emotional = vec![Polarity::Emotional; 3];
        assert!(matches!(
            build_pairs(x.clone(), &all_emotional, None, 0),
            Err(Error::EmptyClass(_))
        ));
        assert!(matches!(
            build_pairs(x, &[Polarity::Neutral; 3], None, 0),
            Err(Error::EmptyClass(_))
        ));
    }

    #[test]
    fn singleton_classes_get_no_similar_pairs() {
        let (x, labels) = (
            array![[0.0], [1.0]],
            vec![Polarity::Neutral, Polarity::Emotional],
        );
        let p = build_pairs(x, &labels, Some(4), 0).unwrap();
        assert!(p.similar.is_empty());
    }

    #[test]
    fn pair_validation() {
        let x = Array2::zeros((2, 1));
        assert!(PairSets::new(x.clone(), vec![(0, 2)], vec![]).is_err());
        assert!(PairSets::new(x, vec![(1, 1)], vec![]).is_err());
    }

    #[test]
    fn objective_examples() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]];
        let p = PairSets::new(x, vec![(0, 1), (2, 1)], vec![(0, 2)]).unwrap();
        assert_eq!(objective(&[0.0, 0.0], &p, 1.0).unwrap(), 2.0);

        let empty = PairSets::new(array![[1.0, 1.0]], vec![], vec![]).unwrap();
        assert_eq!(objective(&[3.0, 4.0], &empty, 1.0).unwrap(), 12.5);

        let single = PairSets::new(array![[0.0], [2.0]], vec![(1, 0)], vec![]).unwrap();
        let f = objective(&[4.0 / 9.0], &single, 1.0).unwrap();
        assert!((f - 1.0 / 9.0).abs() < 1e-12);
        assert!((f - 0.11111).abs() < 1e-5);

        assert!(matches!(
            objective(&[1.0], &p, 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn one_pair_closed_form() {
        // f(w) = w^2/2 + C (1 - 2w)^2 is stationary at w = 4C / (1 + 8C)
        for c in [0.1, 1.0, 3.0] {
            let p =
                PairSets::new(array![[0.0], [0.0], [2.0], [2.0]], vec![(2, 0)], vec![]).unwrap();
            let m = train_ranker(&p, "angry", &raw_cfg(c)).unwrap();
            let expected = 4.0 * c / (1.0 + 8.0 * c);
            assert!(
                (m.weights[0] - expected).abs() < 1e-9,
                "C={c}: {}",
                m.weights[0]
            );
            let grid_w = (0..=1000)
                .map(|i| -5.0 + 0.01 * i as f64)
                .min_by(|a, b| {
                    let fa = oracle_objective(&[*a], &p.features, &p.ordered, &[], c);
                    let fb = oracle_objective(&[*b], &p.features, &p.ordered, &[], c);
                    fa.partial_cmp(&fb).unwrap()
                })
                .unwrap();
            assert!((grid_w - expected).abs() <= 0.01);
        }
    }

    #[test]
    fn full_cross_product_toy() {
        // four identical ordered pairs act like C' = 4C
        let (x, labels) = toy();
        let p = build_pairs(x, &labels, Some(0), 0).unwrap();
        let m = train_ranker(&p, "angry", &raw_cfg(1.0)).unwrap();
        assert!((m.weights[0] - 16.0 / 33.0).abs() < 1e-9);
        assert_eq!(m.score(&[0.0]).unwrap(), 0.0);
        assert_eq!(m.score(&[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn duplicated_pairs_match_doubled_c() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((12, 5), |_| StandardNormal.sample(&mut rng));
        let ordered = vec![(0, 6), (1, 7), (2, 8), (3, 9), (4, 10), (5, 11), (0, 11)];
        let similar = vec![(0, 1), (6, 7), (8, 9)];
        let base = PairSets::new(x.clone(), ordered.clone(), similar.clone()).unwrap();
        let dup = PairSets::new(
            x,
            ordered.iter().chain(&ordered).copied().collect(),
            similar.iter().chain(&similar).copied().collect(),
        )
        .unwrap();
        let a = train_ranker(&base, "e", &raw_cfg(2.0)).unwrap();
        let b = train_ranker(&dup, "e", &raw_cfg(1.0)).unwrap();
        for (u, v) in a.weights.iter().zip(&b.weights) {
            assert!((u - v).abs() < 1e-9, "{u} vs {v}");
        }
    }

    #[test]
    fn training_errors() {
        let p = PairSets::new(array![[0.0], [1.0]], vec![], vec![(0, 1)]).unwrap();
        assert!(matches!(
            train_ranker(&p, "e", &RankerConfig::default()),
            Err(Error::NoOrderedPairs)
        ));
        let p = PairSets::new(array![[f64::NAN], [1.0]], vec![(1, 0)], vec![]).unwrap();
        assert!(matches!(
            train_ranker(&p, "e", &RankerConfig::default()),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn score_endpoints_and_degenerate_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = Array2::from_shape_fn((10, 3), |(i, _)| {
            let n: f64 = StandardNormal.sample(&mut rng);
            n + if i < 5 { 0.0 } else { 2.0 }
        });
        let labels: Vec<Polarity> = (0..10)
            .map(|i| {
                if i < 5 {
                    Polarity::Neutral
                } else {
                    Polarity::Emotional
                }
            })
            .collect();
        let p = build_pairs(x.clone(), &labels, None, 0).unwrap();
        let m = train_ranker(&p, "happy", &RankerConfig::default()).unwrap();
        let scores: Vec<f64> = x
            .outer_iter()
            .map(|r| m.score(r.as_slice().unwrap()).unwrap())
            .collect();
        assert!(scores.contains(&0.0));
        assert!(scores.contains(&1.0));
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
        assert!(matches!(
            m.score(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));

        let flat = RankingModel {
            attr_min: 0.3,
            attr_max: 0.3,
            ..m
        };
        assert_eq!(flat.score(&[5.0, 1.0, -2.0]).unwrap(), 0.5);
    }

    #[test]
    fn objective_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = Array2::from_shape_fn((60, 8), |(i, j)| {
            let n: f64 = StandardNormal.sample(&mut rng);
            n + if i >= 30 && j < 2 { 1.0 } else { 0.0 }
        });
        let labels: Vec<Polarity> = (0..60)
            .map(|i| {
                if i < 30 {
                    Polarity::Neutral
                } else {
                    Polarity::Emotional
                }
            })
            .collect();
        let p = build_pairs(x, &labels, None, 5).unwrap();
        let m = train_ranker(&p, "sad", &RankerConfig::default()).unwrap();
        let h = &m.solver_report.objective_history;
        assert!(h.windows(2).all(|w| w[1] <= w[0]), "{h:?}");
        assert!(m.solver_report.converged);
        assert!(m.solver_report.gradient_norm <= 1e-6);
    }

    #[test]
    fn model_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = Array2::from_shape_fn((8, 4), |_| StandardNormal.sample(&mut rng));
        let labels: Vec<Polarity> = (0..8)
            .map(|i| {
                if i % 2 == 0 {
                    Polarity::Neutral
                } else {
                    Polarity::Emotional
                }
            })
            .collect();
        let p = build_pairs(x, &labels, None, 2).unwrap();
        let m = train_ranker(&p, "surprise", &RankerConfig::default()).unwrap();
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let probe = [0.1, -0.7, 1.3, 0.0];
        assert_eq!(back.score(&probe).unwrap(), m.score(&probe).unwrap());

        let text = std::fs::read_to_string(&path).unwrap();
        for key in [
            "\"version\"",
            "\"emotion\"",
            "\"C\"",
            "\"weights\"",
            "\"feature_mean\"",
            "\"feature_std\"",
            "\"attr_min\"",
            "\"attr_max\"",
            "\"solver_report\"",
        ] {
            assert!(text.contains(key), "{key}");
        }
        std::fs::write(&path, text.replace("\"version\": 1", "\"version\": 7")).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::SchemaVersionMismatch { found: 7, .. })
        ));
        std::fs::write(&path, "{ not json").unwrap();
        assert!(load_model(&path).is_err());
    }

    type Instance = (Array2<f64>, Vec<(usize, usize)>, Vec<(usize, usize)>);

    fn tiny_instance() -> impl Strategy<Value = Instance> {
        (1usize..=2, 3usize..=5).prop_flat_map(|(d, n)| {
            let feats = proptest::collection::vec(-2.0f64..2.0, n * d);
            let pair = (0..n, 0..n).prop_filter("distinct", |(a, b)| a != b);
            (
                feats.prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap()),
                proptest::collection::vec(pair.clone(), 1..=4),
                proptest::collection::vec(pair, 0..=2),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn solver_matches_grid_search((x, o, s) in tiny_instance(), c in 0.1f64..3.0) {
            let p = PairSets::new(x.clone(), o.clone(), s.clone()).unwrap();
            let m = train_ranker(&p, "e", &raw_cfg(c)).unwrap();
            let solved = oracle_objective(&m.weights, &x, &o, &s, c);
            prop_assert!(solved <= grid_min(&x, &o, &s, c) + 1e-3);
        }

        #[test]
        fn score_order_follows_raw_order(a in proptest::collection::vec(-10.0f64..10.0, 3), b in proptest::collection::vec(-10.0f64..10.0, 3)) {
            let x = array![[0.0, 1.0, 0.5], [0.2, 0.1, -0.4], [1.5, 2.0, 1.0], [2.2, 1.4, 0.9]];
            let labels = [Polarity::Neutral, Polarity::Neutral, Polarity::Emotional, Polarity::Emotional];
            let m = train_ranker(&build_pairs(x, &labels, None, 0).unwrap(), "e", &RankerConfig::default()).unwrap();
            let (ra, rb) = (m.raw_score(&a).unwrap(), m.raw_score(&b).unwrap());
            let (sa, sb) = (m.score(&a).unwrap(), m.score(&b).unwrap());
            if ra >= rb { prop_assert!(sa >= sb); }
            if sa > sb { prop_assert!(ra > rb); }
        }

        #[test]
        fn rescaling_a_raw_dimension_keeps_ranking(dim in 0usize..4, k in 0.01f64..100.0, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = Array2::from_shape_fn((16, 4), |(i, _)| {
                let n: f64 = StandardNormal.sample(&mut rng);
                n + if i >= 8 { 1.0 } else { 0.0 }
            });
            let labels: Vec<Polarity> = (0..16).map(|i| if i < 8 { Polarity::Neutral } else { Polarity::Emotional }).collect();
            let mut xs = x.clone();
            xs.column_mut(dim).mapv_inplace(|v| v * k);
            let ma = train_ranker(&build_pairs(x.clone(), &labels, None, 1).unwrap(), "e", &RankerConfig::default()).unwrap();
            let mb = train_ranker(&build_pairs(xs.clone(), &labels, None, 1).unwrap(), "e", &RankerConfig::default()).unwrap();
            let ra: Vec<f64> = x.outer_iter().map(|r| ma.raw_score(r.as_slice().unwrap()).unwrap()).collect();
            let rb: Vec<f64> = xs.outer_iter().map(|r| mb.raw_score(r.as_slice().unwrap()).unwrap()).collect();
            for i in 0..16 {
                for j in 0..16 {
                    if (ra[i] - ra[j]).abs() > 1e-6 {
                        prop_assert_eq!(ra[i] > ra[j], rb[i] > rb[j]);
                    }
                }
            }
        }
    }
}
