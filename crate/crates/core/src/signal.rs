//! Audio ingestion and spectral front end.
//!
//! Everything downstream works on [`Waveform`]s: they are framed into
//! [`FrameSequence`]s, Hann-windowed and transformed into one-sided power
//! spectra, and optionally projected through a triangular Mel
//! [`FilterBank`]. All routines are pure functions of their inputs.

use std::path::Path;

use ndarray::{Array2, Axis};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// Mono PCM audio with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParams("waveform has no samples".into()));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidParams("sample rate must be positive".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("waveform samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|s| s * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Writes the waveform as 16-bit mono PCM, clipping to `[-1, 1]`.
    pub fn save_wav(&self, path: &Path) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(path, spec).map_err(|e| wav_io(path, e))?;
        for &s in &self.samples {
            let q = (s * 32768.0)
                .round()
                .clamp(i16::MIN as f64, i16::MAX as f64) as i16;
            writer.write_sample(q).map_err(|e| wav_io(path, e))?;
        }
        writer.finalize().map_err(|e| wav_io(path, e))
    }
}

fn wav_io(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::io(path, source),
        other => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    }
}

/// Reads a RIFF/WAVE file holding 16-bit mono PCM.
pub fn load_wav(path: &Path) -> Result<Waveform> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| wav_io(path, e))?;
    let spec = reader.spec();
    let unsupported = |reason: String| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        reason,
    };
    if spec.channels != 1 {
        return Err(unsupported(format!(
            "{} channels; convert to mono first",
            spec.channels
        )));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(unsupported(format!(
            "{}-bit {:?} samples; expected 16-bit PCM",
            spec.bits_per_sample, spec.sample_format
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| wav_io(path, e))?;
    if samples.is_empty() {
        return Err(unsupported("no audio samples".into()));
    }
    Waveform::new(samples, spec.sample_rate)
}

/// Converts a duration in milliseconds to a whole number of samples.
pub fn ms_to_samples(ms: f64, sample_rate: u32) -> usize {
    (ms * sample_rate as f64 / 1000.0).round() as usize
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// Overlapping analysis frames cut from a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Array2<f64>,
    pub frame_len: usize,
    pub hop_len: usize,
}

impl FrameSequence {
    pub fn n_frames(&self) -> usize {
        self.frames.nrows()
    }
}

/// Number of frames produced for a signal of `len` samples.
///
/// `floor((len - frame_len) / hop) + 1` when the signal holds at least one
/// frame, otherwise a single zero-padded frame.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len >= frame_len {
        (len - frame_len) / hop + 1
    } else {
        1
    }
}

/// Cuts `w` into frames of `frame_len` samples every `hop` samples. A trailing
/// partial region is dropped.
pub fn frame(w: &Waveform, frame_len: usize, hop: usize) -> Result<FrameSequence> {
    frame_samples(w.samples(), frame_len, hop)
}

pub(crate) fn frame_samples(x: &[f64], frame_len: usize, hop: usize) -> Result<FrameSequence> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::InvalidParams(format!(
            "frame length ({frame_len}) and hop ({hop}) must be at least 1"
        )));
    }
    let n = frame_count(x.len(), frame_len, hop);
    let mut frames = Array2::zeros((n, frame_len));
    for (i, mut row) in frames.axis_iter_mut(Axis(0)).enumerate() {
        let start = i * hop;
        let end = (start + frame_len).min(x.len());
        for (dst, &src) in row.iter_mut().zip(&x[start..end]) {
            *dst = src;
        }
    }
    Ok(FrameSequence {
        frames,
        frame_len,
        hop_len: hop,
    })
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Squared DFT magnitudes of each Hann-windowed frame, bins `0..=n_fft/2`.
pub fn power_spectrogram(fs: &FrameSequence, n_fft: usize) -> Result<Array2<f64>> {
    if n_fft < fs.frame_len {
        return Err(Error::InvalidParams(format!(
            "n_fft ({n_fft}) is smaller than the frame length ({})",
            fs.frame_len
        )));
    }
    let window = hann_window(fs.frame_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let n_bins = n_fft / 2 + 1;
    let mut out = Array2::zeros((fs.n_frames(), n_bins));
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for (frame, mut row) in fs.frames.outer_iter().zip(out.outer_iter_mut()) {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for ((dst, &s), &w) in buf.iter_mut().zip(frame.iter()).zip(&window) {
            dst.re = s * w;
        }
        fft.process(&mut buf);
        for (dst, c) in row.iter_mut().zip(&buf[..n_bins]) {
            *dst = c.norm_sqr();
        }
    }
    Ok(out)
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Orthonormal DCT-II of `input`, first `n_coeffs` coefficients.
pub fn dct_ii(input: &[f64], n_coeffs: usize) -> Vec<f64> {
    let n = input.len() as f64;
    (0..n_coeffs)
        .map(|k| {
            let scale = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            let sum: f64 = input
                .iter()
                .enumerate()
                .map(|(i, &x)| x * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n).cos())
                .sum();
            scale * sum
        })
        .collect()
}

/// Triangular filters with centers equally spaced on the Mel scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    /// `n_mels x (n_fft/2 + 1)` nonnegative weights.
    pub weights: Array2<f64>,
    pub sample_rate: u32,
    pub fmin: f64,
    pub fmax: f64,
    /// Peak frequency of each filter in Hz.
    pub centers_hz: Vec<f64>,
}

impl FilterBank {
    pub fn n_mels(&self) -> usize {
        self.weights.nrows()
    }

    /// Projects power spectra (`n_frames x n_bins`) onto the filters.
    pub fn apply(&self, power: &Array2<f64>) -> Result<Array2<f64>> {
        if power.ncols() != self.weights.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.ncols(),
                actual: power.ncols(),
            });
        }
        Ok(power.dot(&self.weights.t()))
    }
}

pub fn mel_filterbank(
    n_mels: usize,
    n_fft: usize,
    sample_rate: u32,
    fmin: f64,
    fmax: f64,
) -> Result<FilterBank> {
    let nyquist = sample_rate as f64 / 2.0;
    if n_mels == 0 || n_fft < 2 {
        return Err(Error::InvalidParams(format!(
            "need n_mels >= 1 and n_fft >= 2 (got {n_mels}, {n_fft})"
        )));
    }
    if !(0.0 <= fmin && fmin < fmax && fmax <= nyquist) {
        return Err(Error::InvalidParams(format!(
            "frequency range must satisfy 0 <= fmin < fmax <= {nyquist} (got {fmin}..{fmax})"
        )));
    }
    let (mel_lo, mel_hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    let n_bins = n_fft / 2 + 1;
    let bin_hz = sample_rate as f64 / n_fft as f64;
    let mut weights = Array2::zeros((n_mels, n_bins));
    for m in 0..n_mels {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..n_bins {
            let f = k as f64 * bin_hz;
            let w = if f > lo && f <= center {
                (f - lo) / (center - lo)
            } else if f > center && f < hi {
                (hi - f) / (hi - center)
            } else {
                0.0
            };
            weights[[m, k]] = w;
        }
        if weights.row(m).iter().all(|&w| w == 0.0) {
            return Err(Error::InvalidParams(format!(
                "filter {m} ({lo:.1}-{hi:.1} Hz) covers no FFT bin; use fewer filters or a larger n_fft"
            )));
        }
    }
    Ok(FilterBank {
        weights,
        sample_rate,
        fmin,
        fmax,
        centers_hz: edges[1..=n_mels].to_vec(),
    })
}

/// Framing and filterbank settings for [`mel_log_spectrogram`].
#[derive(Debug, Clone, PartialEq)]
pub struct MelConfig {
    pub frame_ms: f64,
    pub shift_ms: f64,
    pub n_mels: usize,
    pub log_floor: f64,
    pub fmin: f64,
    /// Upper band edge; `None` means Nyquist.
    pub fmax: Option<f64>,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            frame_ms: 50.0,
            shift_ms: 12.5,
            n_mels: 80,
            log_floor: 1e-10,
            fmin: 0.0,
            fmax: None,
        }
    }
}

/// Log-compressed Mel filterbank energies.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrogram {
    /// `n_frames x n_mels`.
    pub values: Array2<f64>,
    pub n_mels: usize,
    pub frame_shift_ms: f64,
    pub frame_len_ms: f64,
}

/// Filterbank energies (linear power) for every frame of `w`.
pub(crate) fn mel_energies(
    w: &Waveform,
    frame_ms: f64,
    shift_ms: f64,
    n_mels: usize,
    fmin: f64,
    fmax: Option<f64>,
) -> Result<Array2<f64>> {
    let sr = w.sample_rate();
    let frame_len = ms_to_samples(frame_ms, sr);
    let hop = ms_to_samples(shift_ms, sr);
    let fs = frame(w, frame_len, hop)?;
    let n_fft = next_pow2(frame_len);
    let power = power_spectrogram(&fs, n_fft)?;
    let bank = mel_filterbank(n_mels, n_fft, sr, fmin, fmax.unwrap_or(sr as f64 / 2.0))?;
    bank.apply(&power)
}

pub fn mel_log_spectrogram(w: &Waveform, cfg: &MelConfig) -> Result<MelSpectrogram> {
    if !(cfg.log_floor > 0.0) {
        return Err(Error::InvalidParams("log floor must be positive".into()));
    }
    let energies = mel_energies(
        w,
        cfg.frame_ms,
        cfg.shift_ms,
        cfg.n_mels,
        cfg.fmin,
        cfg.fmax,
    )?;
    Ok(MelSpectrogram {
        values: energies.mapv(|e| e.max(cfg.log_floor).ln()),
        n_mels: cfg.n_mels,
        frame_shift_ms: cfg.shift_ms,
        frame_len_ms: cfg.frame_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, sr: u32, n: usize, amp: f64) -> Waveform {
        let x = (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / sr as f64).sin())
            .collect();
        Waveform::new(x, sr).unwrap()
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
    }

    #[test]
    fn frame_counts() {
        let w = Waveform::new(vec![0.1; 100], 16000).unwrap();
        assert_eq!(frame(&w, 40, 20).unwrap().n_frames(), 4);
        let w = Waveform::new(vec![0.1; 40], 16000).unwrap();
        assert_eq!(frame(&w, 40, 20).unwrap().n_frames(), 1);
    }

    #[test]
    fn short_input_is_zero_padded() {
        let w = Waveform::new(vec![0.5; 10], 16000).unwrap();
        let fs = frame(&w, 40, 20).unwrap();
        assert_eq!(fs.n_frames(), 1);
        assert_eq!(fs.frames.row(0).iter().filter(|&&v| v == 0.5).count(), 10);
        assert!(fs.frames.row(0).iter().skip(10).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_lengths_rejected() {
        let w = Waveform::new(vec![0.0; 10], 16000).unwrap();
        assert!(matches!(frame(&w, 0, 1), Err(Error::InvalidParams(_))));
        assert!(matches!(frame(&w, 4, 0), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn waveform_rejects_bad_input() {
        assert!(Waveform::new(vec![], 16000).is_err());
        assert!(Waveform::new(vec![0.0], 0).is_err());
        assert!(Waveform::new(vec![f64::NAN], 16000).is_err());
    }

    #[test]
    fn zero_frame_has_zero_spectrum() {
        let w = Waveform::new(vec![0.0; 256], 16000).unwrap();
        let p = power_spectrogram(&frame(&w, 256, 128).unwrap(), 256).unwrap();
        assert_eq!(p.ncols(), 129);
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn n_fft_smaller_than_frame_rejected() {
        let w = Waveform::new(vec![0.0; 256], 16000).unwrap();
        let fs = frame(&w, 256, 128).unwrap();
        assert!(matches!(
            power_spectrogram(&fs, 128),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn bin_centered_sine_concentrates_energy() {
        let (sr, n_fft, k0) = (16000, 512, 37);
        let f = k0 as f64 * sr as f64 / n_fft as f64;
        let w = sine(f, sr, n_fft, 0.8);
        let p = power_spectrogram(&frame(&w, n_fft, n_fft).unwrap(), n_fft).unwrap();
        let row = p.row(0);
        let total: f64 = row.sum();
        let near: f64 = row.iter().skip(k0 - 1).take(3).sum();
        assert!(near / total >= 0.95, "fraction {}", near / total);
    }

    #[test]
    fn parseval_identity_holds() {
        let x = noise(400, 7);
        let w = Waveform::new(x.clone(), 16000).unwrap();
        let n_fft = 512;
        let p = power_spectrogram(&frame(&w, 400, 400).unwrap(), n_fft).unwrap();
        // One-sided spectrum: interior bins stand in for their mirrored twins.
        let row = p.row(0);
        let spectral: f64 = row
            .iter()
            .enumerate()
            .map(|(k, &v)| if k == 0 || k == n_fft / 2 { v } else { 2.0 * v })
            .sum();
        let win = hann_window(400);
        let time: f64 = x.iter().zip(&win).map(|(s, w)| (s * w).powi(2)).sum();
        let rel = (spectral - n_fft as f64 * time).abs() / (n_fft as f64 * time);
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn mel_scale_reference_point() {
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01);
        assert!((mel_to_hz(hz_to_mel(1234.5)) - 1234.5).abs() < 1e-9);
    }

    #[test]
    fn filterbank_construction() {
        let fb = mel_filterbank(26, 512, 16000, 0.0, 8000.0).unwrap();
        assert_eq!(fb.n_mels(), 26);
        for row in fb.weights.outer_iter() {
            assert!(row.sum() > 0.0);
            assert!(row.iter().all(|&w| w >= 0.0));
            // single triangular peak: rises then falls
            let nz: Vec<f64> = row.iter().copied().filter(|&w| w > 0.0).collect();
            let peak = nz.iter().cloned().fold(f64::MIN, f64::max);
            let ip = nz.iter().position(|&v| v == peak).unwrap();
            assert!(nz[..=ip].windows(2).all(|p| p[0] <= p[1]));
            assert!(nz[ip..].windows(2).all(|p| p[0] >= p[1]));
        }
        assert!(fb.centers_hz.windows(2).all(|c| c[0] < c[1]));
    }

    #[test]
    fn filterbank_rejects_bad_ranges() {
        assert!(mel_filterbank(26, 512, 16000, 100.0, 100.0).is_err());
        assert!(mel_filterbank(26, 512, 16000, 0.0, 9000.0).is_err());
        assert!(mel_filterbank(26, 512, 16000, -1.0, 8000.0).is_err());
        // 200 filters cannot be resolved by 257 bins at low frequencies
        assert!(mel_filterbank(200, 512, 16000, 0.0, 8000.0).is_err());
    }

    #[test]
    fn mel_spectrogram_defaults() {
        let w = sine(440.0, 16000, 16000, 0.3);
        let m = mel_log_spectrogram(&w, &MelConfig::default()).unwrap();
        assert_eq!(m.values.dim(), (77, 80));
        assert!(m.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn silence_hits_the_log_floor() {
        let w = Waveform::new(vec![0.0; 4000], 16000).unwrap();
        let m = mel_log_spectrogram(&w, &MelConfig::default()).unwrap();
        let floor = 1e-10f64.ln();
        assert!(m.values.iter().all(|&v| v == floor));
    }

    #[test]
    fn doubling_amplitude_adds_log_four() {
        let w = Waveform::new(noise(8000, 3), 16000).unwrap();
        let cfg = MelConfig::default();
        let a = mel_log_spectrogram(&w, &cfg).unwrap();
        let b = mel_log_spectrogram(&w.scaled(2.0), &cfg).unwrap();
        let floor = cfg.log_floor.ln();
        for (x, y) in a.values.iter().zip(b.values.iter()) {
            if *x > floor {
                assert!((y - x - 4f64.ln()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prepending_one_hop_of_silence_shifts_frames() {
        let x = noise(6000, 11);
        let cfg = MelConfig::default();
        let hop = ms_to_samples(cfg.shift_ms, 16000);
        let mut shifted = vec![0.0; hop];
        shifted.extend_from_slice(&x);
        let a = mel_log_spectrogram(&Waveform::new(x, 16000).unwrap(), &cfg).unwrap();
        let b = mel_log_spectrogram(&Waveform::new(shifted, 16000).unwrap(), &cfg).unwrap();
        assert_eq!(b.values.nrows(), a.values.nrows() + 1);
        for i in 0..a.values.nrows() {
            for j in 0..cfg.n_mels {
                assert!((a.values[[i, j]] - b.values[[i + 1, j]]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn wav_round_trip_and_format_checks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one_second.wav");
        let w = sine(300.0, 16000, 16000, 0.5);
        w.save_wav(&path).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.len(), 16000);
        assert_eq!(back.sample_rate(), 16000);
        assert!(back.samples().iter().all(|s| (-1.0..=1.0).contains(s)));

        let zeros = dir.path().join("zeros.wav");
        Waveform::new(vec![0.0; 800], 16000)
            .unwrap()
            .save_wav(&zeros)
            .unwrap();
        assert!(load_wav(&zeros)
            .unwrap()
            .samples()
            .iter()
            .all(|&s| s == 0.0));

        let stereo = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut wr = hound::WavWriter::create(&stereo, spec).unwrap();
        for _ in 0..200 {
            wr.write_sample(0i16).unwrap();
        }
        wr.finalize().unwrap();
        assert!(matches!(
            load_wav(&stereo),
            Err(Error::UnsupportedFormat { .. })
        ));

        let float = dir.path().join("float.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut wr = hound::WavWriter::create(&float, spec).unwrap();
        wr.write_sample(0.25f32).unwrap();
        wr.finalize().unwrap();
        assert!(matches!(
            load_wav(&float),
            Err(Error::UnsupportedFormat { .. })
        ));

        assert!(matches!(
            load_wav(&dir.path().join("absent.wav")),
            Err(Error::NotFound(_))
        ));
    }

    proptest::proptest! {
        #[test]
        fn frame_count_formula(len in 1usize..2000, frame_len in 1usize..300, hop in 1usize..200) {
            let w = Waveform::new(vec![0.0; len], 8000).unwrap();
            let fs = frame(&w, frame_len, hop).unwrap();
            let expected = if len >= frame_len { (len - frame_len) / hop + 1 } else { 1 };
            proptest::prop_assert_eq!(fs.n_frames(), expected);
        }
    }
}
