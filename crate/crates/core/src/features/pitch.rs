//! Normalized-autocorrelation F0 tracker.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{frame, ms_to_samples, Waveform};

/// Settings for [`pitch_contour`] and the F0/HNR descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub frame_ms: f64,
    pub hop_ms: f64,
    /// Minimum normalized autocorrelation peak for a voiced frame.
    pub voicing_threshold: f64,
    /// Frames quieter than this RMS are unvoiced regardless of periodicity.
    pub silence_rms: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: 60.0,
            f0_max: 400.0,
            frame_ms: 40.0,
            hop_ms: 10.0,
            voicing_threshold: 0.45,
            silence_rms: 1e-3,
        }
    }
}

impl PitchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f0_min > 0.0 && self.f0_min < self.f0_max) {
            return Err(Error::InvalidParams(format!(
                "F0 range must satisfy 0 < min < max (got {}..{})",
                self.f0_min, self.f0_max
            )));
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return Err(Error::InvalidParams(
                "voicing threshold must lie in (0, 1)".into(),
            ));
        }
        if !(self.frame_ms > 0.0 && self.hop_ms > 0.0) || self.silence_rms < 0.0 {
            return Err(Error::InvalidParams("invalid pitch framing".into()));
        }
        Ok(())
    }
}

/// Per-frame fundamental frequency, 0 where unvoiced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F0Contour {
    pub f0_hz: Vec<f64>,
    pub voiced: Vec<bool>,
    pub frame_shift_ms: f64,
}

impl F0Contour {
    pub fn n_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Mean F0 over voiced frames, `None` when nothing is voiced.
    pub fn mean_voiced_f0(&self) -> Option<f64> {
        let n = self.n_voiced();
        (n > 0).then(|| self.f0_hz.iter().filter(|&&f| f > 0.0).sum::<f64>() / n as f64)
    }
}

/// Periodicity analysis of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FrameAnalysis {
    /// Candidate F0 from the chosen autocorrelation peak (0 when none).
    pub f0_hz: f64,
    /// Normalized autocorrelation at the chosen peak, in `[-1, 1]`.
    pub peak: f64,
    pub rms: f64,
}

impl FrameAnalysis {
    pub fn is_voiced(&self, cfg: &PitchConfig) -> bool {
        self.f0_hz > 0.0 && self.peak >= cfg.voicing_threshold && self.rms >= cfg.silence_rms
    }
}

pub(crate) fn rms(frame: &[f64]) -> f64 {
    (frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64).sqrt()
}

/// Normalized autocorrelation of `x` at `lag`, each lag normalized by the
/// energies of the two overlapping segments.
fn nacf(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (a, b) = (&x[..n], &x[lag..]);
    let cross: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let ea: f64 = a.iter().map(|p| p * p).sum();
    let eb: f64 = b.iter().map(|q| q * q).sum();
    let denom = (ea * eb).sqrt();
    if denom > 0.0 {
        cross / denom
    } else {
        0.0
    }
}

pub(crate) fn analyze_frame(frame: &[f64], sample_rate: u32, cfg: &PitchConfig) -> FrameAnalysis {
    let rms = rms(frame);
    let mean = frame.iter().sum::<f64>() / frame.len() as f64;
    let x: Vec<f64> = frame.iter().map(|s| s - mean).collect();
    let sr = sample_rate as f64;
    let lag_min = ((sr / cfg.f0_max).floor() as usize).max(2);
    // keep at least a third of the frame overlapping at the longest lag
    let lag_max = ((sr / cfg.f0_min).ceil() as usize).min(x.len() * 2 / 3);
    let unvoiced = FrameAnalysis {
        f0_hz: 0.0,
        peak: 0.0,
        rms,
    };
    if lag_max < lag_min + 2 {
        return unvoiced;
    }
    // r[i] holds lag (lag_min - 1 + i) so every candidate has both neighbours
    let r: Vec<f64> = (lag_min - 1..=lag_max + 1)
        .map(|lag| nacf(&x, lag))
        .collect();
    let best = r[1..r.len() - 1].iter().cloned().fold(f64::MIN, f64::max);
    if best <= 0.0 {
        return FrameAnalysis {
            peak: best.max(-1.0),
            ..unvoiced
        };
    }
    // shortest-lag local maximum close to the global peak avoids octave drops
    let pick =
        (1..r.len() - 1).find(|&i| r[i] >= r[i - 1] && r[i] >= r[i + 1] && r[i] >= 0.9 * best);
    let Some(i) = pick else {
        return FrameAnalysis {
            peak: best,
            ..unvoiced
        };
    };
    let (y0, y1, y2) = (r[i - 1], r[i], r[i + 1]);
    let curvature = y0 - 2.0 * y1 + y2;
    let (offset, peak) = if curvature < 0.0 {
        let d = 0.5 * (y0 - y2) / curvature;
        (d, y1 - 0.25 * (y0 - y2) * d)
    } else {
        (0.0, y1)
    };
    let lag = (lag_min - 1 + i) as f64 + offset;
    FrameAnalysis {
        f0_hz: sr / lag,
        peak: peak.min(1.0),
        rms,
    }
}

/// Tracks F0 with 40 ms frames every 10 ms by default.
pub fn pitch_contour(w: &Waveform, cfg: &PitchConfig) -> Result<F0Contour> {
    cfg.validate()?;
    let sr = w.sample_rate();
    let fs = frame(
        w,
        ms_to_samples(cfg.frame_ms, sr),
        ms_to_samples(cfg.hop_ms, sr),
    )?;
    let mut f0_hz = Vec::with_capacity(fs.n_frames());
    let mut voiced = Vec::with_capacity(fs.n_frames());
    for row in fs.frames.outer_iter() {
        let a = analyze_frame(row.as_slice().expect("frames are contiguous"), sr, cfg);
        let v = a.is_voiced(cfg);
        voiced.push(v);
        f0_hz.push(if v { a.f0_hz } else { 0.0 });
    }
    Ok(F0Contour {
        f0_hz,
        voiced,
        frame_shift_ms: cfg.hop_ms,
    })
}
