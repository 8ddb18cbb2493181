//! Objective comparison of a converted utterance against its reference:
//! Mel-cepstral distortion over a DTW alignment, voiced-duration difference,
//! and aligned pitch/energy contours for plotting.

use std::f64::consts::LN_10;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{energy_contour, pitch_contour, EnergyConfig, F0Contour, PitchConfig};
use crate::signal::{dct_ii, mel_energies, Waveform};

/// `10 sqrt(2) / ln 10`, the dB scale factor of the distortion.
pub const MCD_SCALE: f64 = 10.0 * std::f64::consts::SQRT_2 / LN_10;

const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McepConfig {
    pub order: usize,
    pub n_bands: usize,
    pub frame_ms: f64,
    pub shift_ms: f64,
}

impl Default for McepConfig {
    fn default() -> Self {
        Self {
            order: 24,
            n_bands: 40,
            frame_ms: 50.0,
            shift_ms: 12.5,
        }
    }
}

/// Per-frame cepstra `c0..c_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct McepSequence {
    /// `n_frames x (order + 1)`.
    pub coeffs: Array2<f64>,
    pub frame_shift_ms: f64,
}

impl McepSequence {
    pub fn new(coeffs: Array2<f64>, frame_shift_ms: f64) -> Result<Self> {
        if coeffs.ncols() < 2 {
            return Err(Error::InvalidParams(
                "cepstral order must be at least 1".into(),
            ));
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cepstral coefficients".into()));
        }
        Ok(Self {
            coeffs,
            frame_shift_ms,
        })
    }

    pub fn order(&self) -> usize {
        self.coeffs.ncols() - 1
    }

    pub fn n_frames(&self) -> usize {
        self.coeffs.nrows()
    }
}

/// DCT-II of the log Mel power spectrum; `c0` carries overall energy.
pub fn mcep(w: &Waveform, cfg: &McepConfig) -> Result<McepSequence> {
    if cfg.order < 1 || cfg.order >= cfg.n_bands {
        return Err(Error::InvalidParams(format!(
            "order must lie in 1..{} (got {})",
            cfg.n_bands, cfg.order
        )));
    }
    let energies = mel_energies(w, cfg.frame_ms, cfg.shift_ms, cfg.n_bands, 0.0, None)?;
    let mut coeffs = Array2::zeros((energies.nrows(), cfg.order + 1));
    for (src, mut dst) in energies.outer_iter().zip(coeffs.outer_iter_mut()) {
        let log_mel: Vec<f64> = src.iter().map(|e| e.max(LOG_FLOOR).ln()).collect();
        for (d, c) in dst.iter_mut().zip(dct_ii(&log_mel, cfg.order + 1)) {
            *d = c;
        }
    }
    McepSequence::new(coeffs, cfg.shift_ms)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    #[default]
    Euclidean,
}

impl Distance {
    fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Monotone frame correspondence from `(0, 0)` to `(n-1, m-1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentPath {
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
}

impl AlignmentPath {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Minimum-cost alignment with steps (1,1), (1,0), (0,1); ties prefer the
/// diagonal, then (1,0).
pub fn dtw_by(n: usize, m: usize, cost: impl Fn(usize, usize) -> f64) -> Result<AlignmentPath> {
    if n == 0 || m == 0 {
        return Err(Error::EmptyInput);
    }
    let mut acc = Array2::from_elem((n, m), f64::INFINITY);
    for i in 0..n {
        for j in 0..m {
            let prev = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 {
                    acc[[i - 1, j - 1]]
                } else {
                    f64::INFINITY
                };
                let up = if i > 0 {
                    acc[[i - 1, j]]
                } else {
                    f64::INFINITY
                };
                let left = if j > 0 {
                    acc[[i, j - 1]]
                } else {
                    f64::INFINITY
                };
                diag.min(up).min(left)
            };
            acc[[i, j]] = prev + cost(i, j);
        }
    }
    let (mut i, mut j) = (n - 1, m - 1);
    let mut pairs = vec![(i, j)];
    while (i, j) != (0, 0) {
        let diag = if i > 0 && j > 0 {
            acc[[i - 1, j - 1]]
        } else {
            f64::INFINITY
        };
        let up = if i > 0 {
            acc[[i - 1, j]]
        } else {
            f64::INFINITY
        };
        let left = if j > 0 {
            acc[[i, j - 1]]
        } else {
            f64::INFINITY
        };
        if diag <= up && diag <= left {
            (i, j) = (i - 1, j - 1);
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        pairs.push((i, j));
    }
    pairs.reverse();
    Ok(AlignmentPath {
        pairs,
        total_cost: acc[[n - 1, m - 1]],
    })
}

pub fn dtw_align(a: &[Vec<f64>], b: &[Vec<f64>], distance: Distance) -> Result<AlignmentPath> {
    dtw_by(a.len(), b.len(), |i, j| distance.eval(&a[i], &b[j]))
}

pub fn dtw_align_scalar(a: &[f64], b: &[f64]) -> Result<AlignmentPath> {
    dtw_by(a.len(), b.len(), |i, j| (a[i] - b[j]).abs())
}

/// Distortion of one frame pair over `M` coefficients:
/// `(10 sqrt 2 / ln 10) * (1/M) * sqrt(sum (y_m - yhat_m)^2)`.
pub fn mcd_frame(y: &[f64], y_hat: &[f64]) -> f64 {
    let sq: f64 = y.iter().zip(y_hat).map(|(a, b)| (a - b).powi(2)).sum();
    MCD_SCALE / y.len() as f64 * sq.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct McdOptions {
    /// Also compare the energy coefficient `c0`.
    pub include_c0: bool,
}

fn cepstral_rows(s: &McepSequence, include_c0: bool) -> Vec<Vec<f64>> {
    let skip = usize::from(!include_c0);
    s.coeffs
        .outer_iter()
        .map(|r| r.iter().skip(skip).copied().collect())
        .collect()
}

/// Mean per-frame distortion along a given alignment.
pub fn mcd_along(
    a: &McepSequence,
    b: &McepSequence,
    path: &AlignmentPath,
    opts: McdOptions,
) -> Result<f64> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch(a.order(), b.order()));
    }
    if path.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (ra, rb) = (
        cepstral_rows(a, opts.include_c0),
        cepstral_rows(b, opts.include_c0),
    );
    let total: f64 = path
        .pairs
        .iter()
        .map(|&(i, j)| mcd_frame(&ra[i], &rb[j]))
        .sum();
    Ok(total / path.len() as f64)
}

/// DTW-aligned distortion and the path it was averaged over.
pub fn mcd_with_path(
    a: &McepSequence,
    b: &McepSequence,
    opts: McdOptions,
) -> Result<(f64, AlignmentPath)> {
    if a.order() != b.order() {
        return Err(Error::OrderMismatch(a.order(), b.order()));
    }
    let (ra, rb) = (
        cepstral_rows(a, opts.include_c0),
        cepstral_rows(b, opts.include_c0),
    );
    let path = dtw_align(&ra, &rb, Distance::Euclidean)?;
    Ok((mcd_along(a, b, &path, opts)?, path))
}

/// Mel-cepstral distortion in dB, `c0` excluded.
pub fn mcd(a: &McepSequence, b: &McepSequence) -> Result<f64> {
    mcd_with_path(a, b, McdOptions::default()).map(|(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DdurMode {
    /// Number of voiced frames times the frame shift.
    #[default]
    Total,
    /// First to last voiced frame, inclusive.
    Span,
}

impl std::str::FromStr for DdurMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "total" => Ok(DdurMode::Total),
            "span" => Ok(DdurMode::Span),
            other => Err(Error::InvalidParams(format!("unknown ddur mode {other:?}"))),
        }
    }
}

pub fn voiced_duration(c: &F0Contour, mode: DdurMode) -> f64 {
    let frames = match mode {
        DdurMode::Total => c.n_voiced(),
        DdurMode::Span => match (
            c.voiced.iter().position(|&v| v),
            c.voiced.iter().rposition(|&v| v),
        ) {
            (Some(first), Some(last)) => last - first + 1,
            _ => 0,
        },
    };
    frames as f64 * c.frame_shift_ms / 1000.0
}

/// Absolute difference of voiced durations in seconds.
pub fn ddur(
    converted: &Waveform,
    reference: &Waveform,
    pitch: &PitchConfig,
    mode: DdurMode,
) -> Result<f64> {
    let z_hat = voiced_duration(&pitch_contour(converted, pitch)?, mode);
    let z = voiced_duration(&pitch_contour(reference, pitch)?, mode);
    Ok((z - z_hat).abs())
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub pitch: PitchConfig,
    pub energy: EnergyConfig,
    pub mcep: McepConfig,
    pub ddur_mode: DdurMode,
    pub include_c0: bool,
}

/// One aligned frame pair of a scalar contour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedPoint {
    pub i: usize,
    pub j: usize,
    pub converted: f64,
    pub reference: f64,
}

/// Row of the plotting table, following the F0 alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourRow {
    pub path_idx: usize,
    pub i: usize,
    pub j: usize,
    pub f0_conv: f64,
    pub f0_ref: f64,
    pub energy_conv: f64,
    pub energy_ref: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mcd_db: f64,
    pub ddur_s: f64,
    /// Length of the cepstral alignment behind `mcd_db`.
    pub n_aligned_frames: usize,
    pub aligned_f0: Vec<AlignedPoint>,
    pub aligned_energy: Vec<AlignedPoint>,
    #[serde(skip)]
    pub contour_rows: Vec<ContourRow>,
}

impl EvaluationReport {
    /// Mean `reference - converted` F0 over rows where both frames are voiced.
    pub fn mean_f0_offset(&self) -> Option<f64> {
        let diffs: Vec<f64> = self
            .aligned_f0
            .iter()
            .filter(|p| p.converted > 0.0 && p.reference > 0.0)
            .map(|p| p.reference - p.converted)
            .collect();
        (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64)
    }
}

fn aligned(path: &AlignmentPath, conv: &[f64], reference: &[f64]) -> Vec<AlignedPoint> {
    path.pairs
        .iter()
        .map(|&(i, j)| AlignedPoint {
            i,
            j,
            converted: conv[i],
            reference: reference[j],
        })
        .collect()
}

/// MCD, DDUR and DTW-aligned pitch and energy contours for one pair.
///
/// F0 is aligned on raw Hz with unvoiced frames at 0; energy is aligned on
/// its log so loud and quiet passages weigh alike.
pub fn contour_report(
    converted: &Waveform,
    reference: &Waveform,
    cfg: &MetricsConfig,
) -> Result<EvaluationReport> {
    let opts = McdOptions {
        include_c0: cfg.include_c0,
    };
    let (mcd_db, mcd_path) = mcd_with_path(
        &mcep(converted, &cfg.mcep)?,
        &mcep(reference, &cfg.mcep)?,
        opts,
    )?;

    let f0_conv = pitch_contour(converted, &cfg.pitch)?;
    let f0_ref = pitch_contour(reference, &cfg.pitch)?;
    let ddur_s =
        (voiced_duration(&f0_ref, cfg.ddur_mode) - voiced_duration(&f0_conv, cfg.ddur_mode)).abs();
    let f0_path = dtw_align_scalar(&f0_conv.f0_hz, &f0_ref.f0_hz)?;

    let e_conv = energy_contour(converted, &cfg.energy)?.energy;
    let e_ref = energy_contour(reference, &cfg.energy)?.energy;
    let log = |e: &[f64]| -> Vec<f64> { e.iter().map(|v| (v + LOG_FLOOR).ln()).collect() };
    let e_path = dtw_align_scalar(&log(&e_conv), &log(&e_ref))?;

    let at = |v: &[f64], k: usize| v.get(k).or(v.last()).copied().unwrap_or(0.0);
    let contour_rows = f0_path
        .pairs
        .iter()
        .enumerate()
        .map(|(path_idx, &(i, j))| ContourRow {
            path_idx,
            i,
            j,
            f0_conv: f0_conv.f0_hz[i],
            f0_ref: f0_ref.f0_hz[j],
            energy_conv: at(&e_conv, i),
            energy_ref: at(&e_ref, j),
        })
        .collect();

    Ok(EvaluationReport {
        mcd_db,
        ddur_s,
        n_aligned_frames: mcd_path.len(),
        aligned_f0: aligned(&f0_path, &f0_conv.f0_hz, &f0_ref.f0_hz),
        aligned_energy: aligned(&e_path, &e_conv, &e_ref),
        contour_rows,
    })
}

/// Writes `path_idx,i,j,f0_conv,f0_ref,energy_conv,energy_ref`.
pub fn write_contour_csv(path: &Path, rows: &[ContourRow]) -> Result<()> {
    let mut wr = csv::Writer::from_path(path).map_err(|e| crate::features::csv_err(path, e))?;
    for row in rows {
        wr.serialize(row)
            .map_err(|e| crate::features::csv_err(path, e))?;
    }
    if rows.is_empty() {
        wr.write_record([
            "path_idx",
            "i",
            "j",
            "f0_conv",
            "f0_ref",
            "energy_conv",
            "energy_ref",
        ])
        .map_err(|e| crate::features::csv_err(path, e))?;
    }
    wr.flush().map_err(|e| Error::io(path, e))
}
