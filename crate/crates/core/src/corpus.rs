//! Deterministic synthetic speech-like corpus.
//!
//! Each base utterance is a train of harmonic "syllables" with a vowel-like
//! formant envelope, a rise-fall pitch gesture and global declination. Its
//! emotional variant keeps the syllable and vowel plan but is re-rendered
//! with higher and wider pitch, more energy, a faster tempo and a flatter
//! spectral tilt. The corpus is small enough to generate inside tests.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::signal::Waveform;

pub const SAMPLE_RATE: u32 = 16000;

/// Vowel formant centers (Hz) and bandwidths.
const VOWELS: [[(f64, f64); 3]; 5] = [
    [(730.0, 90.0), (1090.0, 110.0), (2440.0, 170.0)],
    [(270.0, 60.0), (2290.0, 100.0), (3010.0, 120.0)],
    [(530.0, 60.0), (1840.0, 100.0), (2480.0, 120.0)],
    [(570.0, 70.0), (840.0, 80.0), (2410.0, 160.0)],
    [(300.0, 60.0), (870.0, 80.0), (2240.0, 120.0)],
];

/// Rendering parameters for one speaking style.
#[derive(Debug, Clone, PartialEq)]
pub struct Prosody {
    pub f0_scale: f64,
    /// Relative pitch rise at syllable nuclei.
    pub excursion: f64,
    pub loudness: f64,
    /// Duration multiplier; below 1 is faster.
    pub tempo: f64,
    /// Harmonic amplitude falls as `k^-tilt`.
    pub tilt: f64,
    pub breath: f64,
}

impl Prosody {
    pub fn neutral() -> Self {
        Self {
            f0_scale: 1.0,
            excursion: 0.08,
            loudness: 0.22,
            tempo: 1.0,
            tilt: 1.2,
            breath: 0.004,
        }
    }

    pub fn emotional() -> Self {
        Self {
            f0_scale: 1.45,
            excursion: 0.3,
            loudness: 0.55,
            tempo: 0.85,
            tilt: 0.7,
            breath: 0.012,
        }
    }
}

/// Syllable and vowel plan shared by an utterance and its variants.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub base_f0: f64,
    syllables: Vec<(f64, usize, f64)>,
    noise_seed: u64,
}

impl Script {
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base_f0 = rng.gen_range(100.0..135.0);
        let n = rng.gen_range(4..=7);
        let syllables = (0..n)
            .map(|_| {
                (
                    rng.gen_range(0.16..0.28),
                    rng.gen_range(0..VOWELS.len()),
                    rng.gen_range(0.04..0.09),
                )
            })
            .collect();
        Self {
            base_f0,
            syllables,
            noise_seed: rng.gen(),
        }
    }

    pub fn render(&self, style: &Prosody) -> Waveform {
        let sr = SAMPLE_RATE as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(self.noise_seed);
        let edge = (0.1 * sr) as usize;
        let mut out: Vec<f64> = vec![0.0; edge];
        let n_syl = self.syllables.len() as f64;
        let mut phase = 0.0;
        for (s, &(dur, vowel, gap)) in self.syllables.iter().enumerate() {
            let len = (dur * style.tempo * sr) as usize;
            let declination = 1.0 - 0.12 * s as f64 / n_syl;
            let f0_base = self.base_f0 * style.f0_scale * declination;
            for t in 0..len {
                let pos = t as f64 / len as f64;
                let f0 = f0_base * (1.0 + style.excursion * (PI * pos).sin());
                phase += 2.0 * PI * f0 / sr;
                let mut v = 0.0;
                let mut k = 1;
                while (k as f64) * f0 < 0.45 * sr {
                    let hz = k as f64 * f0;
                    let env: f64 = VOWELS[vowel]
                        .iter()
                        .map(|&(fc, bw)| (-((hz - fc) / (1.5 * bw)).powi(2)).exp())
                        .sum::<f64>()
                        + 0.05;
                    v += env * (k as f64).powf(-style.tilt) * (k as f64 * phase).sin();
                    k += 1;
                }
                let envelope = (PI * pos).sin().powf(0.6);
                let breath = style.breath * rng.gen_range(-1.0..1.0);
                out.push(style.loudness * envelope * (0.5 * v) + breath * envelope);
            }
            let pause = (gap * style.tempo * sr) as usize;
            out.extend((0..pause).map(|_| 1e-4 * rng.gen_range(-1.0..1.0)));
        }
        out.extend(std::iter::repeat_n(0.0, edge));
        let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.99 {
            out.iter_mut().for_each(|v| *v *= 0.99 / peak);
        }
        Waveform::new(out, SAMPLE_RATE).expect("rendered audio is finite and non-empty")
    }
}

/// Writes `n_base` neutral utterances and their emotional (`emotion`)
/// variants under `dir/<speaker>/<emotion>/`, plus `dir/manifest.tsv`. The
/// last fifth of each speaker's base utterances goes to the eval split.
pub fn write_demo_corpus(dir: &Path, n_base: usize, emotion: &str, seed: u64) -> Result<PathBuf> {
    if n_base < 2 {
        return Err(Error::InvalidParams(
            "need at least two base utterances".into(),
        ));
    }
    let speakers = ["spk1", "spk2"];
    let mut manifest = String::from("utt_id\twav_path\tspeaker\temotion\tsplit\n");
    for k in 0..n_base {
        let s = k % speakers.len();
        let speaker = speakers[s];
        let count = (0..n_base).filter(|i| i % speakers.len() == s).count();
        let n_eval = (count / 5).max(1).min(count - 1);
        let split = if k / speakers.len() + n_eval >= count {
            "eval"
        } else {
            "train"
        };
        let script = Script::random(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
        for (label, style) in [
            ("neutral", Prosody::neutral()),
            (emotion, Prosody::emotional()),
        ] {
            let rel = PathBuf::from(speaker)
                .join(label)
                .join(format!("{speaker}_{label}_{k:03}.wav"));
            let path = dir.join(&rel);
            fs::create_dir_all(path.parent().expect("joined path has a parent"))
                .map_err(|e| Error::io(&path, e))?;
            script.render(&style).save_wav(&path)?;
            let _ = writeln!(
                manifest,
                "{speaker}_{label}_{k:03}\t{}\t{speaker}\t{label}\t{split}",
                rel.to_string_lossy()
            );
        }
    }
    let out = dir.join("manifest.tsv");
    fs::write(&out, manifest).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{pitch_contour, PitchConfig};

    #[test]
    fn variants_share_structure_but_not_prosody() {
        let script = Script::random(3);
        let neutral = script.render(&Prosody::neutral());
        let emotional = script.render(&Prosody::emotional());
        assert!(emotional.len() < neutral.len());
        let cfg = PitchConfig::default();
        let fn_ = pitch_contour(&neutral, &cfg)
            .unwrap()
            .mean_voiced_f0()
            .unwrap();
        let fe = pitch_contour(&emotional, &cfg)
            .unwrap()
            .mean_voiced_f0()
            .unwrap();
        assert!(fe > 1.3 * fn_, "{fe} vs {fn_}");
        let energy = |w: &Waveform| w.samples().iter().map(|s| s * s).sum::<f64>() / w.len() as f64;
        assert!(energy(&emotional) > energy(&neutral));
        assert!(neutral.samples().iter().all(|s| s.abs() <= 1.0));
    }

    #[test]
    fn rendering_is_deterministic() {
        let a = Script::random(11).render(&Prosody::emotional());
        let b = Script::random(11).render(&Prosody::emotional());
        assert_eq!(a, b);
    }

    #[test]
    fn demo_corpus_layout() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_demo_corpus(dir.path(), 5, "angry", 1).unwrap();
        let text = fs::read_to_string(manifest).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().any(|r| r.ends_with("\teval")));
        assert!(rows.iter().any(|r| r.ends_with("\ttrain")));
        assert!(dir.path().join("spk1/angry/spk1_angry_000.wav").exists());
    }
}
