//! Corpus manifest: one tab-separated row per translation.
//!
//! Columns: `translation_id  license  source  sha256  [family  country]`.
//! `source` is an http(s) URL, a file, or a directory of USFM files
//! (concatenated in file-name order). Lines starting with `#` are comments;
//! the first non-comment line is a header.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum License {
    CcBySa,
    CcByNc,
    CcByNd,
    CcByNcNd,
    PublicDomain,
}

impl License {
    pub const ALL: [License; 5] = [License::CcBySa, License::CcByNc, License::CcByNd, License::CcByNcNd, License::PublicDomain];

    pub fn tag(self) -> &'static str {
        match self {
            License::CcBySa => "CC BY-SA",
            License::CcByNc => "CC BY-NC",
            License::CcByNd => "CC BY-ND",
            License::CcByNcNd => "CC BY-NC-ND",
            License::PublicDomain => "Public Domain",
        }
    }

    pub fn parse(s: &str) -> Result<License, String> {
        let norm = |x: &str| x.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        License::ALL
            .into_iter()
            .find(|l| norm(l.tag()) == norm(s))
            .ok_or_else(|| format!("unknown license tag {s:?} (expected one of: {})", License::ALL.map(|l| l.tag()).join(", ")))
    }
}

impl fmt::Display for License {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Source {
    Url(String),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRow {
    pub id: String,
    pub license: License,
    pub source: Source,
    /// Expected sha256 of the fetched bundle; `None` skips verification.
    pub sha256: Option<String>,
    pub family: String,
    pub country: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusManifest {
    pub rows: Vec<CorpusRow>,
}

impl CorpusManifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<CorpusManifest, String> {
        let mut rows = Vec::new();
        let mut ids = BTreeSet::new();
        let mut header_seen = false;
        for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if !line.starts_with("translation_id") {
                    return Err(format!("line {n}: expected a header starting with translation_id"));
                }
                continue;
            }
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if !(4..=6).contains(&cols.len()) {
                return Err(format!("line {n}: expected 4 to 6 tab-separated columns, found {}", cols.len()));
            }
            let id = cols[0].to_string();
            if id.is_empty() || id.contains(['/', '\\', '.']) || id.chars().any(char::is_whitespace) {
                return Err(format!("line {n}: invalid translation id {id:?}"));
            }
            if !ids.insert(id.clone()) {
                return Err(format!("line {n}: duplicate translation id {id}"));
            }
            let license = License::parse(cols[1]).map_err(|e| format!("line {n}: {e}"))?;
            let source = if cols[2].starts_with("http://") || cols[2].starts_with("https://") {
                Source::Url(cols[2].to_string())
            } else {
                let p = Path::new(cols[2]);
                Source::Path(if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) })
            };
            let sha256 = match cols[3] {
                "" | "-" => None,
                s if s.len() == 64 && s.chars().all(|c| c.is_ascii_hexdigit()) => Some(s.to_ascii_lowercase()),
                s => return Err(format!("line {n}: bad sha256 {s:?}")),
            };
            let col = |i: usize| cols.get(i).map_or(String::new(), |s| s.to_string());
            rows.push(CorpusRow { id, license, source, sha256, family: col(4), country: col(5) });
        }
        Ok(CorpusManifest { rows })
    }

    pub fn load(path: &Path) -> Result<CorpusManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        CorpusManifest::parse(&text, base).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Rows whose license is in `allow`; every row when `allow` is empty.
    pub fn filtered(&self, allow: &[License]) -> Vec<&CorpusRow> {
        self.rows.iter().filter(|r| allow.is_empty() || allow.contains(&r.license)).collect()
    }

    pub fn get(&self, id: &str) -> Option<&CorpusRow> {
        self.rows.iter().find(|r| r.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows_and_rejects_duplicates() {
        let text = "# corpus\ntranslation_id\tlicense\tsource\tsha256\tfamily\tcountry\nabc-abc\tCC BY-SA\tabc\t-\tToy\tXX\nxyz-x\tPublic Domain\thttps://example.org/x.usfm\t-\n";
        let m = CorpusManifest::parse(text, Path::new("/data")).unwrap();
        assert_eq!(m.rows.len(), 2);
        assert_eq!(m.rows[0].source, Source::Path(PathBuf::from("/data/abc")));
        assert_eq!(m.rows[0].family, "Toy");
        assert_eq!(m.rows[1].license, License::PublicDomain);
        assert!(matches!(m.rows[1].source, Source::Url(_)));
        let dup = format!("{text}abc-abc\tCC BY-NC\tabc\t-\n");
        assert!(CorpusManifest::parse(&dup, Path::new(".")).unwrap_err().contains("duplicate"));
    }

    #[test]
    fn license_tags_are_closed() {
        assert_eq!(License::parse("cc by-nc-nd").unwrap(), License::CcByNcNd);
        assert!(License::parse("MIT").is_err());
    }

    #[test]
    fn empty_manifest_is_valid() {
        assert!(CorpusManifest::parse("", Path::new(".")).unwrap().rows.is_empty());
    }
}
