use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const RECORD_FILE: &str = "checksums.sha256";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Completion record of one stage unit: the key it ran under and the
/// SHA-256 of every output, relative to the unit directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRecord {
    pub key: String,
    pub outputs: Vec<(String, String)>,
}

impl StageRecord {
    pub fn render(&self) -> String {
        let mut s = format!("# key {}\n", self.key);
        for (hash, file) in &self.outputs {
            s.push_str(&format!("{hash}  {file}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Option<StageRecord> {
        let mut lines = text.lines();
        let key = lines.next()?.strip_prefix("# key ")?.to_string();
        let outputs = lines
            .map(|l| {
                let (h, f) = l.split_once("  ")?;
                Some((h.to_string(), f.to_string()))
            })
            .collect::<Option<_>>()?;
        Some(StageRecord { key, outputs })
    }

    pub fn read(dir: &Path) -> Option<StageRecord> {
        StageRecord::parse(&fs::read_to_string(dir.join(RECORD_FILE)).ok()?)
    }

    /// Hashes `files` under `dir`.
    pub fn of_files(dir: &Path, key: String, files: &[PathBuf]) -> io::Result<StageRecord> {
        let mut outputs = Vec::with_capacity(files.len());
        for f in files {
            let rel = f
                .strip_prefix(dir)
                .unwrap_or(f)
                .to_string_lossy()
                .replace('\\', "/");
            outputs.push((sha256_hex(&fs::read(f)?), rel));
        }
        outputs.sort_by(|a, b| a.1.cmp(&b.1));
        Ok(StageRecord { key, outputs })
    }

    /// True when the record has `key` and every output still hashes to
    /// its recorded value.
    pub fn is_current(&self, dir: &Path, key: &str) -> bool {
        self.key == key
            && self
                .outputs
                .iter()
                .all(|(hash, file)| fs::read(dir.join(file)).is_ok_and(|b| sha256_hex(&b) == *hash))
    }
}

/// Accumulates the inputs a stage key depends on.
pub struct KeyBuilder(Sha256);

impl KeyBuilder {
    pub fn new(stage: &str, unit: &str) -> Self {
        let mut k = KeyBuilder(Sha256::new());
        k.add(stage);
        k.add(unit);
        k
    }

    pub fn add(&mut self, part: &str) -> &mut Self {
        self.0.update((part.len() as u64).to_le_bytes());
        self.0.update(part.as_bytes());
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        fs::write(&a, "hello").unwrap();
        let r = StageRecord::of_files(dir.path(), "k1".into(), std::slice::from_ref(&a)).unwrap();
        assert_eq!(
            r.outputs[0].0,
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
        assert_eq!(StageRecord::parse(&r.render()), Some(r.clone()));
        assert!(r.is_current(dir.path(), "k1"));
        assert!(!r.is_current(dir.path(), "k2"));
        fs::write(&a, "hello!").unwrap();
        assert!(!r.is_current(dir.path(), "k1"));
        fs::remove_file(&a).unwrap();
        assert!(!r.is_current(dir.path(), "k1"));
    }

    #[test]
    fn keys_are_framed() {
        let k = |parts: &[&str]| {
            let mut b = KeyBuilder::new("s", "u");
            for p in parts {
                b.add(p);
            }
            b.finish()
        };
        assert_ne!(k(&["ab", "c"]), k(&["a", "bc"]));
        assert_eq!(k(&["x"]), k(&["x"]));
    }
}
