//! Utterance-level acoustic descriptors.
//!
//! 16 low-level descriptors are computed per 25 ms frame (zero-crossing rate,
//! RMS energy, F0, harmonics-to-noise ratio, MFCC 1-12), extended with their
//! regression deltas, and summarized by 12 statistical functionals each:
//! `32 x 12 = 384` values. Index `column * 12 + functional` is fixed; see
//! [`describe_features`].

mod pitch;

use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{
    dct_ii, frame, mel_energies, mel_filterbank, ms_to_samples, next_pow2, power_spectrogram,
    Waveform,
};

pub(crate) use pitch::{analyze_frame, rms};
pub use pitch::{pitch_contour, F0Contour, PitchConfig};

pub const N_LLD: usize = 16;
pub const N_FUNCTIONALS: usize = 12;
pub const N_COLUMNS: usize = 2 * N_LLD;
pub const FEATURE_DIM: usize = N_COLUMNS * N_FUNCTIONALS;

const N_MEL_FILTERS: usize = 26;
const N_MFCC: usize = 12;
const LOG_FLOOR: f64 = 1e-10;
const HNR_LIMIT_DB: f64 = 60.0;

pub const LLD_NAMES: [&str; N_LLD] = [
    "zcr",
    "rms_energy",
    "f0",
    "hnr_db",
    "mfcc1",
    "mfcc2",
    "mfcc3",
    "mfcc4",
    "mfcc5",
    "mfcc6",
    "mfcc7",
    "mfcc8",
    "mfcc9",
    "mfcc10",
    "mfcc11",
    "mfcc12",
];

pub const FUNCTIONAL_NAMES: [&str; N_FUNCTIONALS] = [
    "mean",
    "stddev",
    "skewness",
    "kurtosis",
    "min",
    "min_pos",
    "max",
    "max_pos",
    "range",
    "linreg_offset",
    "linreg_slope",
    "linreg_mse",
];

/// Per-frame descriptor matrix (`n_frames x 16`).
#[derive(Debug, Clone, PartialEq)]
pub struct LldMatrix {
    pub values: Array2<f64>,
    pub frame_shift_ms: f64,
}

impl LldMatrix {
    pub fn n_frames(&self) -> usize {
        self.values.nrows()
    }

    pub fn column(&self, name: &str) -> Option<ArrayView1<'_, f64>> {
        LLD_NAMES
            .iter()
            .position(|&n| n == name)
            .map(|i| self.values.column(i))
    }
}

/// The 384-dimensional utterance descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub id: String,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != FEATURE_DIM {
            return Err(Error::DimensionMismatch {
                expected: FEATURE_DIM,
                actual: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector".into()));
        }
        Ok(Self {
            id: id.into(),
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LldConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
    pub pitch: PitchConfig,
}

impl Default for LldConfig {
    fn default() -> Self {
        Self {
            frame_ms: 25.0,
            hop_ms: 10.0,
            pitch: PitchConfig::default(),
        }
    }
}

/// Fraction of adjacent sample pairs whose signs differ.
fn zero_crossing_rate(frame: &[f64]) -> f64 {
    if frame.len() < 2 {
        return 0.0;
    }
    let crossings = frame.windows(2).filter(|p| p[0] * p[1] < 0.0).count();
    crossings as f64 / (frame.len() - 1) as f64
}

fn hnr_db(peak: f64) -> f64 {
    if peak <= 0.0 {
        -HNR_LIMIT_DB
    } else if peak >= 1.0 {
        HNR_LIMIT_DB
    } else {
        (10.0 * (peak / (1.0 - peak)).log10()).clamp(-HNR_LIMIT_DB, HNR_LIMIT_DB)
    }
}

pub fn compute_llds(w: &Waveform, cfg: &LldConfig) -> Result<LldMatrix> {
    cfg.pitch.validate()?;
    let sr = w.sample_rate();
    let frame_len = ms_to_samples(cfg.frame_ms, sr);
    let fs = frame(w, frame_len, ms_to_samples(cfg.hop_ms, sr))?;
    let n_fft = next_pow2(frame_len);
    let power = power_spectrogram(&fs, n_fft)?;
    let bank = mel_filterbank(N_MEL_FILTERS, n_fft, sr, 0.0, sr as f64 / 2.0)?;
    let mel = bank.apply(&power)?;

    let mut values = Array2::zeros((fs.n_frames(), N_LLD));
    for (i, frame) in fs.frames.outer_iter().enumerate() {
        let frame = frame.as_slice().expect("frames are contiguous");
        let periodicity = analyze_frame(frame, sr, &cfg.pitch);
        let log_mel: Vec<f64> = mel.row(i).iter().map(|e| e.max(LOG_FLOOR).ln()).collect();
        let cepstrum = dct_ii(&log_mel, N_MFCC + 1);

        let mut row = values.row_mut(i);
        row[0] = zero_crossing_rate(frame);
        row[1] = rms(frame);
        row[2] = if periodicity.is_voiced(&cfg.pitch) {
            periodicity.f0_hz
        } else {
            0.0
        };
        row[3] = hnr_db(periodicity.peak);
        for (dst, c) in row.iter_mut().skip(4).zip(&cepstrum[1..]) {
            *dst = *c;
        }
    }
    Ok(LldMatrix {
        values,
        frame_shift_ms: cfg.hop_ms,
    })
}

/// Regression deltas over a two-frame radius with clamped edges.
pub fn delta(lld: &LldMatrix) -> LldMatrix {
    const RADIUS: isize = 2;
    let denom = 2.0 * (1..=RADIUS).map(|k| (k * k) as f64).sum::<f64>();
    let n = lld.n_frames() as isize;
    let at = |t: isize| t.clamp(0, n - 1) as usize;
    let mut out = Array2::zeros(lld.values.raw_dim());
    for t in 0..n {
        for c in 0..lld.values.ncols() {
            let num: f64 = (1..=RADIUS)
                .map(|k| k as f64 * (lld.values[[at(t + k), c]] - lld.values[[at(t - k), c]]))
                .sum();
            out[[t as usize, c]] = num / denom;
        }
    }
    LldMatrix {
        values: out,
        frame_shift_ms: lld.frame_shift_ms,
    }
}

/// The 12 functionals of one trajectory, in [`FUNCTIONAL_NAMES`] order.
pub fn column_functionals(x: ArrayView1<'_, f64>) -> [f64; N_FUNCTIONALS] {
    let n = x.len();
    let nf = n as f64;
    let mean = x.sum() / nf;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / nf;
    let std = var.sqrt();
    let (skew, kurt) = if std > f64::EPSILON * mean.abs().max(1.0) {
        let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / nf;
        let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / nf;
        (m3 / std.powi(3), m4 / (var * var) - 3.0)
    } else {
        (0.0, 0.0)
    };

    let (mut imin, mut imax) = (0, 0);
    for (i, &v) in x.iter().enumerate() {
        if v < x[imin] {
            imin = i;
        }
        if v > x[imax] {
            imax = i;
        }
    }
    let rel = |i: usize| {
        if n > 1 {
            i as f64 / (n - 1) as f64
        } else {
            0.0
        }
    };

    // least squares line over t = 0..n-1
    let t_mean = (nf - 1.0) / 2.0;
    let sxx: f64 = (0..n).map(|t| (t as f64 - t_mean).powi(2)).sum();
    let sxy: f64 = x
        .iter()
        .enumerate()
        .map(|(t, v)| (t as f64 - t_mean) * (v - mean))
        .sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let offset = mean - slope * t_mean;
    let mse = x
        .iter()
        .enumerate()
        .map(|(t, v)| (v - (offset + slope * t as f64)).powi(2))
        .sum::<f64>()
        / nf;

    [
        mean,
        std,
        skew,
        kurt,
        x[imin],
        rel(imin),
        x[imax],
        rel(imax),
        x[imax] - x[imin],
        offset,
        slope,
        mse,
    ]
}

/// Summarizes descriptors and their deltas into a [`FeatureVector`] with an
/// empty id.
pub fn functionals(lld: &LldMatrix, deltas: &LldMatrix) -> Result<FeatureVector> {
    if lld.n_frames() != deltas.n_frames() {
        return Err(Error::DimensionMismatch {
            expected: lld.n_frames(),
            actual: deltas.n_frames(),
        });
    }
    if lld.n_frames() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut values = Vec::with_capacity(FEATURE_DIM);
    for m in [&lld.values, &deltas.values] {
        for col in m.axis_iter(Axis(1)) {
            values.extend(column_functionals(col));
        }
    }
    FeatureVector::new(String::new(), values)
}

/// Full extraction chain: descriptors, deltas, functionals.
pub fn extract_features(w: &Waveform, id: &str, cfg: &LldConfig) -> Result<FeatureVector> {
    let lld = compute_llds(w, cfg)?;
    let mut fv = functionals(&lld, &delta(&lld))?;
    fv.id = id.to_string();
    Ok(fv)
}

/// Position of `(column, functional)` in a [`FeatureVector`].
pub fn feature_index(column: usize, functional: usize) -> usize {
    column * N_FUNCTIONALS + functional
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub index: usize,
    pub column: usize,
    pub descriptor: String,
    pub delta: bool,
    pub functional: String,
    pub name: String,
}

pub fn describe_features() -> Vec<FeatureDescriptor> {
    (0..N_COLUMNS)
        .flat_map(|column| {
            (0..N_FUNCTIONALS).map(move |f| {
                let descriptor = LLD_NAMES[column % N_LLD];
                let delta = column >= N_LLD;
                let functional = FUNCTIONAL_NAMES[f];
                let name = if delta {
                    format!("{descriptor}_delta_{functional}")
                } else {
                    format!("{descriptor}_{functional}")
                };
                FeatureDescriptor {
                    index: feature_index(column, f),
                    column,
                    descriptor: descriptor.to_string(),
                    delta,
                    functional: functional.to_string(),
                    name,
                }
            })
        })
        .collect()
}

/// Per-frame sum of 26 Mel-filtered power values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyContour {
    pub energy: Vec<f64>,
    pub frame_shift_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyConfig {
    pub frame_ms: f64,
    pub hop_ms: f64,
}

impl Default for EnergyConfig {
    /// Same grid as [`PitchConfig::default`] so the two contours line up.
    fn default() -> Self {
        Self {
            frame_ms: 40.0,
            hop_ms: 10.0,
        }
    }
}

pub fn energy_contour(w: &Waveform, cfg: &EnergyConfig) -> Result<EnergyContour> {
    let sr = w.sample_rate() as f64;
    let mel = mel_energies(
        w,
        cfg.frame_ms,
        cfg.hop_ms,
        N_MEL_FILTERS,
        0.0,
        Some(sr / 2.0),
    )?;
    Ok(EnergyContour {
        energy: mel.sum_axis(Axis(1)).to_vec(),
        frame_shift_ms: cfg.hop_ms,
    })
}

/// Writes `id,f000..f383` rows.
pub fn write_feature_csv(path: &Path, rows: &[FeatureVector]) -> Result<()> {
    let mut wr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["id".to_string()];
    header.extend((0..FEATURE_DIM).map(|i| format!("f{i:03}")));
    wr.write_record(&header).map_err(|e| csv_err(path, e))?;
    for fv in rows {
        let mut rec = vec![fv.id.clone()];
        rec.extend(fv.values().iter().map(|v| v.to_string()));
        wr.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    wr.flush().map_err(|e| Error::io(path, e))
}

pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureVector>> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let parse = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = rd.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() != FEATURE_DIM + 1 || &header[0] != "id" {
        return Err(parse(
            1,
            format!("expected header id,f000..f{:03}", FEATURE_DIM - 1),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse(line, e.to_string()))?;
        let values = rec
            .iter()
            .skip(1)
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse(line, e.to_string()))?;
        out.push(FeatureVector::new(&rec[0], values).map_err(|e| parse(line, e.to_string()))?);
    }
    Ok(out)
}

pub(crate) fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}
