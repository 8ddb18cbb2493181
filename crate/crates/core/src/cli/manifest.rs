//! Utterance manifests: `utt_id  wav_path  speaker  emotion  split` (TSV).

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HEADER: [&str; 5] = ["utt_id", "wav_path", "speaker", "emotion", "split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Neutral,
    Angry,
    Happy,
    Sad,
    Surprise,
}

impl Emotion {
    pub const ALL: [Emotion; 5] = [
        Emotion::Neutral,
        Emotion::Angry,
        Emotion::Happy,
        Emotion::Sad,
        Emotion::Surprise,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Neutral => "neutral",
            Emotion::Angry => "angry",
            Emotion::Happy => "happy",
            Emotion::Sad => "sad",
            Emotion::Surprise => "surprise",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = Error;

    /// Case-insensitive, so capitalized corpus directory names parse too.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Emotion::ALL
            .into_iter()
            .find(|e| e.as_str() == lower)
            .ok_or_else(|| Error::UnknownEmotion(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
    Reference,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Eval => "eval",
            Split::Reference => "reference",
        }
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "train" => Ok(Split::Train),
            "eval" => Ok(Split::Eval),
            "reference" => Ok(Split::Reference),
            other => Err(format!(
                "unknown split {other:?} (expected train, eval or reference)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub utt_id: String,
    /// Resolved against the manifest's directory.
    pub wav_path: PathBuf,
    pub speaker: String,
    pub emotion: Emotion,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, utt_id: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.utt_id == utt_id)
    }
}

pub fn parse_manifest(path: &Path) -> Result<Manifest> {
    if !path.exists() {
        return Err(Error::NotFound(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(1, "empty manifest".into()));
    };
    let cols: Vec<&str> = header.split('\t').map(str::trim).collect();
    if cols != HEADER {
        return Err(parse_err(
            1,
            format!("expected header {:?}", HEADER.join("\t")),
        ));
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != HEADER.len() {
            return Err(parse_err(
                lineno,
                format!(
                    "expected {} tab-separated fields, found {}",
                    HEADER.len(),
                    fields.len()
                ),
            ));
        }
        let utt_id = fields[0].to_string();
        if utt_id.is_empty() {
            return Err(parse_err(lineno, "empty utt_id".into()));
        }
        if !seen.insert(utt_id.clone()) {
            return Err(Error::DuplicateId(utt_id));
        }
        let emotion: Emotion = fields[3].parse()?;
        let split: Split = fields[4].parse().map_err(|m| parse_err(lineno, m))?;
        let wav_path = base.join(fields[1]);
        if !wav_path.exists() {
            return Err(Error::MissingFile(wav_path));
        }
        entries.push(ManifestEntry {
            utt_id,
            wav_path,
            speaker: fields[2].to_string(),
            emotion,
            split,
        });
    }
    Ok(Manifest { entries })
}

fn sorted_children(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

fn is_wav(p: &Path) -> bool {
    p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav"))
}

fn split_dir(name: &str) -> Option<Split> {
    match name.to_ascii_lowercase().as_str() {
        "train" => Some(Split::Train),
        "eval" | "evaluation" => Some(Split::Eval),
        "test" | "reference" => Some(Split::Reference),
        _ => None,
    }
}

/// Walks `root/<speaker>/<emotion>/[<split>/]*.wav` in sorted order. Files
/// directly under an emotion directory are assigned to the train split.
pub fn scan_corpus(root: &Path) -> Result<Vec<ManifestEntry>> {
    if !root.is_dir() {
        return Err(Error::NotFound(root.to_path_buf()));
    }
    let mut rows = Vec::new();
    for speaker_dir in sorted_children(root)?.into_iter().filter(|p| p.is_dir()) {
        let speaker = speaker_dir
            .file_name()
            .unwrap()
            .to_string_lossy()
            .to_string();
        for emo_dir in sorted_children(&speaker_dir)?
            .into_iter()
            .filter(|p| p.is_dir())
        {
            let emotion: Emotion = emo_dir.file_name().unwrap().to_string_lossy().parse()?;
            for child in sorted_children(&emo_dir)? {
                let name = child.file_name().unwrap().to_string_lossy().to_string();
                if is_wav(&child) {
                    rows.push((speaker.clone(), child, Split::Train, emotion));
                } else if let Some(split) = child.is_dir().then(|| split_dir(&name)).flatten() {
                    for wav in sorted_children(&child)?.into_iter().filter(|p| is_wav(p)) {
                        rows.push((speaker.clone(), wav, split, emotion));
                    }
                }
            }
        }
    }
    Ok(rows
        .into_iter()
        .map(|(speaker, wav_path, split, emotion)| ManifestEntry {
            utt_id: wav_path.file_stem().unwrap().to_string_lossy().to_string(),
            wav_path,
            speaker,
            emotion,
            split,
        })
        .collect())
}

/// Writes a manifest for an ESD-style directory tree. Paths under the
/// manifest's own directory are written relative to it.
pub fn make_manifest(root: &Path, out: &Path) -> Result<usize> {
    let rows = scan_corpus(root)?;
    let out_dir = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    let out_dir = out_dir.canonicalize().map_err(|e| Error::io(out_dir, e))?;
    let mut seen = HashSet::new();
    let mut text = HEADER.join("\t");
    text.push('\n');
    for e in &rows {
        if !seen.insert(e.utt_id.as_str()) {
            return Err(Error::DuplicateId(e.utt_id.clone()));
        }
        let abs = e
            .wav_path
            .canonicalize()
            .map_err(|err| Error::io(&e.wav_path, err))?;
        let shown = abs
            .strip_prefix(&out_dir)
            .map(Path::to_path_buf)
            .unwrap_or(abs);
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            e.utt_id,
            shown.to_string_lossy(),
            e.speaker,
            e.emotion,
            e.split.as_str()
        ));
    }
    fs::write(out, text).map_err(|e| Error::io(out, e))?;
    Ok(rows.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(p: &Path) {
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, b"RIFF").unwrap();
    }

    fn write_manifest(dir: &Path, rows: &[&str]) -> PathBuf {
        let path = dir.join("m.tsv");
        let mut text = HEADER.join("\t") + "\n";
        for r in rows {
            text.push_str(r);
            text.push('\n');
        }
        fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn parses_well_formed_manifest() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["a.wav", "b.wav", "sub/c.wav"] {
            touch(&dir.path().join(f));
        }
        let path = write_manifest(
            dir.path(),
            &[
                "u1\ta.wav\ts1\tneutral\ttrain",
                "u2\tb.wav\ts1\tangry\teval",
                "u3\tsub/c.wav\ts2\tSurprise\treference",
            ],
        );
        let m = parse_manifest(&path).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.entries[2].emotion, Emotion::Surprise);
        assert_eq!(m.entries[2].split, Split::Reference);
        assert_eq!(m.entries[2].wav_path, dir.path().join("sub/c.wav"));
    }

    #[test]
    fn rejects_duplicates_and_unknown_values() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("a.wav"));
        let path = write_manifest(
            dir.path(),
            &["u1\ta.wav\ts\tneutral\ttrain", "u1\ta.wav\ts\tangry\ttrain"],
        );
        match parse_manifest(&path) {
            Err(Error::DuplicateId(id)) => assert_eq!(id, "u1"),
            other => panic!("{other:?}"),
        }

        let path = write_manifest(dir.path(), &["u1\ta.wav\ts\tbored\ttrain"]);
        assert!(matches!(parse_manifest(&path), Err(Error::UnknownEmotion(e)) if e == "bored"));

        let path = write_manifest(dir.path(), &["u1\tmissing.wav\ts\tsad\ttrain"]);
        assert!(matches!(parse_manifest(&path), Err(Error::MissingFile(_))));

        let path = write_manifest(
            dir.path(),
            &["u1\ta.wav\ts\tsad\ttrain", "u2\ta.wav\ts\tsad"],
        );
        assert!(matches!(
            parse_manifest(&path),
            Err(Error::Parse { line: 3, .. })
        ));

        let path = write_manifest(dir.path(), &["u1\ta.wav\ts\tsad\tdev"]);
        assert!(matches!(
            parse_manifest(&path),
            Err(Error::Parse { line: 2, .. })
        ));

        fs::write(dir.path().join("bad.tsv"), "id\tpath\n").unwrap();
        assert!(matches!(
            parse_manifest(&dir.path().join("bad.tsv")),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn scans_flat_and_split_layouts() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("corpus");
        touch(&root.join("0011/Angry/train/0011_000351.wav"));
        touch(&root.join("0011/Angry/evaluation/0011_000371.wav"));
        touch(&root.join("0011/Neutral/test/0011_000001.wav"));
        touch(&root.join("0012/sad/0012_001051.wav"));
        fs::write(root.join("0011/0011.txt"), "transcripts").unwrap();

        let out = dir.path().join("manifest.tsv");
        assert_eq!(make_manifest(&root, &out).unwrap(), 4);
        let m = parse_manifest(&out).unwrap();
        let find = |id: &str| m.get(id).unwrap();
        assert_eq!(find("0011_000351").split, Split::Train);
        assert_eq!(find("0011_000371").split, Split::Eval);
        assert_eq!(find("0011_000001").split, Split::Reference);
        assert_eq!(find("0011_000001").emotion, Emotion::Neutral);
        assert_eq!(find("0012_001051").speaker, "0012");
        let text = fs::read_to_string(&out).unwrap();
        assert!(text.contains("\tcorpus/0011/Angry/train/0011_000351.wav\t"));
    }

    #[test]
    fn unknown_emotion_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        touch(&dir.path().join("s1/bored/x.wav"));
        assert!(matches!(
            scan_corpus(dir.path()),
            Err(Error::UnknownEmotion(_))
        ));
    }
}
