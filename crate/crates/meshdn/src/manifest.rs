//! Dataset manifests: one mesh path per line under `[train]`,
//! `[test-intra]` and `[test-inter]` headers.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Split {
    Train,
    TestIntra,
    TestInter,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::TestIntra, Split::TestInter];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::TestIntra => "test-intra",
            Split::TestInter => "test-inter",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub train: Vec<PathBuf>,
    pub test_intra: Vec<PathBuf>,
    pub test_inter: Vec<PathBuf>,
}

impl Manifest {
    pub fn split(&self, split: Split) -> &[PathBuf] {
        match split {
            Split::Train => &self.train,
            Split::TestIntra => &self.test_intra,
            Split::TestInter => &self.test_inter,
        }
    }

    fn split_mut(&mut self, split: Split) -> &mut Vec<PathBuf> {
        match split {
            Split::Train => &mut self.train,
            Split::TestIntra => &mut self.test_intra,
            Split::TestInter => &mut self.test_inter,
        }
    }

    /// Both test splits, intra first.
    pub fn test(&self) -> impl Iterator<Item = &PathBuf> {
        self.test_intra.iter().chain(&self.test_inter)
    }

    /// Every path in manifest order: train, test-intra, test-inter.
    pub fn all(&self) -> impl Iterator<Item = (Split, &PathBuf)> {
        Split::ALL
            .into_iter()
            .flat_map(move |s| self.split(s).iter().map(move |p| (s, p)))
    }

    /// Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut manifest = Manifest::default();
        let mut seen: BTreeMap<PathBuf, (Split, usize)> = BTreeMap::new();
        let mut current = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let entry = raw.split('#').next().unwrap_or("").trim();
            if entry.is_empty() {
                continue;
            }
            if let Some(header) = entry.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                current = Some(
                    Split::ALL
                        .into_iter()
                        .find(|s| s.name() == header.trim())
                        .ok_or_else(|| Error::parse(line, format!("unknown section `[{header}]`")))?,
                );
                continue;
            }
            let split = current.ok_or_else(|| Error::parse(line, "path before any section header"))?;
            let path = base.join(entry);
            if let Some((other, first)) = seen.get(&path) {
                return Err(Error::parse(
                    line,
                    format!("`{entry}` already listed in [{other}] on line {first}"),
                ));
            }
            seen.insert(path.clone(), (split, line));
            manifest.split_mut(split).push(path);
        }
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base).map_err(|e| e.in_file(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_relative_paths() {
        let text = "# data\n[train]\na.obj\nsub/b.off\n\n[test-intra]\nc.obj\n[test-inter]\n/abs/d.obj\n";
        let m = Manifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.train, [PathBuf::from("/data/a.obj"), PathBuf::from("/data/sub/b.off")]);
        assert_eq!(m.test_intra, [PathBuf::from("/data/c.obj")]);
        assert_eq!(m.test_inter, [PathBuf::from("/abs/d.obj")]);
        assert_eq!(m.test().count(), 2);
        assert_eq!(m.all().count(), 4);
    }

    #[test]
    fn path_in_two_splits_is_rejected() {
        let e = Manifest::parse("[train]\na.obj\n[test-inter]\na.obj\n", Path::new(".")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
    }

    #[test]
    fn unknown_section_and_orphan_path() {
        assert!(Manifest::parse("[val]\n", Path::new(".")).is_err());
        assert!(Manifest::parse("a.obj\n", Path::new(".")).is_err());
    }
}
