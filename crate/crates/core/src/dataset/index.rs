use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::invalid(format!("unknown split '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexRecord {
    /// Relative to the index's root directory.
    pub path: PathBuf,
    pub label: bool,
    pub split: Split,
}

/// Tab-separated `path label split` lines, paths relative to the index file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetIndex {
    pub root: PathBuf,
    pub records: Vec<IndexRecord>,
}

impl DatasetIndex {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut records = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |m: &str| Error::Parse { position: format!("{}: line {}", path.display(), n + 1), message: m.into() };
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(err("expected 3 tab-separated fields: path, label, split"));
            }
            let label = match fields[1] {
                "1" => true,
                "0" => false,
                _ => return Err(err("label must be 0 or 1")),
            };
            let split = fields[2].parse().map_err(|_| err("split must be train or test"))?;
            records.push(IndexRecord { path: PathBuf::from(fields[0]), label, split });
        }
        Ok(DatasetIndex { root, records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        for r in &self.records {
            text.push_str(&format!("{}\t{}\t{}\n", r.path.display(), u8::from(r.label), r.split));
        }
        std::fs::write(path, text).map_err(|e| Error::file(path, e))
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &IndexRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    pub fn resolve(&self, record: &IndexRecord) -> PathBuf {
        self.root.join(&record.path)
    }
}
