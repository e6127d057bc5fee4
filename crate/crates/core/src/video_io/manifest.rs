use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Storage path, relative to the manifest's directory.
    pub path: String,
    pub label: String,
}

/// Registry of clips with a label -> clip ids index for class-conditional
/// partner sampling.
#[derive(Clone, Debug, Default)]
pub struct DatasetManifest {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    by_id: HashMap<String, usize>,
    index: BTreeMap<String, Vec<String>>,
}

impl DatasetManifest {
    /// Builds a manifest from entries whose paths are relative to `root`.
    pub fn from_entries(root: impl Into<PathBuf>, entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut manifest = DatasetManifest {
            root: root.into(),
            ..Default::default()
        };
        for (i, entry) in entries.into_iter().enumerate() {
            manifest.push(entry, i + 1)?;
        }
        Ok(manifest)
    }

    fn push(&mut self, entry: ManifestEntry, line: usize) -> Result<()> {
        if self.by_id.contains_key(&entry.id) {
            return Err(Error::DuplicateClipId { id: entry.id, line });
        }
        self.by_id.insert(entry.id.clone(), self.entries.len());
        self.index
            .entry(entry.label.clone())
            .or_default()
            .push(entry.id.clone());
        self.entries.push(entry);
        Ok(())
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// label -> clip ids, in manifest order.
    pub fn index(&self) -> &BTreeMap<String, Vec<String>> {
        &self.index
    }

    pub fn get(&self, id: &str) -> Option<&ManifestEntry> {
        self.by_id.get(id).map(|&i| &self.entries[i])
    }

    /// Ids sharing `id`'s label, including `id` itself.
    pub fn class_members(&self, id: &str) -> Result<&[String]> {
        let entry = self.get(id).ok_or_else(|| Error::UnknownClip(id.to_owned()))?;
        Ok(self.index[&entry.label].as_slice())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        self.root.join(&entry.path)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses a JSON Lines manifest. Blank lines are skipped; line numbers in
/// errors are 1-based physical lines.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(&text, root)
}

pub(crate) fn parse_manifest(text: &str, root: PathBuf) -> Result<DatasetManifest> {
    let mut manifest = DatasetManifest {
        root,
        ..Default::default()
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        manifest.push(entry, i + 1)?;
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<DatasetManifest> {
        parse_manifest(text, PathBuf::from("/data"))
    }

    #[test]
    fn builds_class_index() {
        let m = parse(
            "{\"id\":\"id1\",\"path\":\"a.rvt\",\"label\":\"smile\"}\n\
             {\"id\":\"id2\",\"path\":\"b.rvt\",\"label\":\"smile\"}\n",
        )
        .unwrap();
        assert_eq!(m.index().len(), 1);
        assert_eq!(m.index()["smile"], vec!["id1", "id2"]);
        assert_eq!(m.resolve(m.get("id2").unwrap()), PathBuf::from("/data/b.rvt"));
        assert_eq!(m.class_members("id1").unwrap(), ["id1", "id2"]);
    }

    #[test]
    fn empty_file_is_empty_manifest() {
        let m = parse("").unwrap();
        assert!(m.is_empty());
        assert!(m.index().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse(
            "{\"id\":\"a\",\"path\":\"x\",\"label\":\"l\"}\n\
             {\"id\":\"a\",\"path\":\"y\",\"label\":\"m\"}",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateClipId { line: 2, .. }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse(
            "{\"id\":\"a\",\"path\":\"x\",\"label\":\"l\"}\n\n{\"id\":\"b\",\"path\":3}",
        )
        .unwrap_err();
        assert!(matches!(err, Error::MalformedLine { line: 3, .. }));
        assert!(matches!(parse("not json"), Err(Error::MalformedLine { line: 1, .. })));
    }

    #[test]
    fn unknown_clip() {
        let m = parse("").unwrap();
        assert!(matches!(m.class_members("zz"), Err(Error::UnknownClip(_))));
    }

    proptest! {
        #[test]
        fn index_partitions_ids(labels in proptest::collection::vec(0u8..4, 0..30)) {
            let entries: Vec<ManifestEntry> = labels.iter().enumerate().map(|(i, l)| ManifestEntry {
                id: format!("c{i}"),
                path: format!("c{i}.rvt"),
                label: format!("L{l}"),
            }).collect();
            let m = DatasetManifest::from_entries("/", entries.clone()).unwrap();
            let mut seen: Vec<&String> = m.index().values().flatten().collect();
            prop_assert_eq!(seen.len(), entries.len());
            seen.sort();
            seen.dedup();
            prop_assert_eq!(seen.len(), entries.len());
            for (label, ids) in m.index() {
                for id in ids {
                    prop_assert_eq!(&m.get(id).unwrap().label, label);
                }
            }
        }
    }
}
