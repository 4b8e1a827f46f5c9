//! Relation files, merge files and ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::model::{Constant, Database, MergePair};
use crate::spec::{AttrType, Schema};

/// A merge by constant text, smaller text first.
pub type TextPair = (String, String);

pub fn text_pair(a: &str, b: &str) -> TextPair {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

pub fn text_pairs(db: &Database, pairs: &BTreeSet<MergePair>) -> BTreeSet<TextPair> {
    pairs
        .iter()
        .map(|p| text_pair(db.text(p.left()), db.text(p.right())))
        .collect()
}

fn relation_file(dir: &Path, name: &str) -> Option<(PathBuf, u8)> {
    [("tsv", b'\t'), ("csv", b',')]
        .into_iter()
        .map(|(ext, delim)| (dir.join(format!("{name}.{ext}")), delim))
        .find(|(p, _)| p.is_file())
}

/// Loads `<Relation>.tsv` or `<Relation>.csv` for every declared relation.
/// Each file starts with a header naming the attributes in order. Empty
/// cells and cells equal to `null_token` become the null constant; id
/// columns hold entity references, all others plain values.
pub fn ingest(dir: &Path, schema: &Schema, null_token: &str) -> Result<Database, PipelineError> {
    let mut b = Database::builder();
    for decl in &schema.relations {
        b.relation(&decl.name, decl.arity())
            .map_err(|e| PipelineError::Data(e.to_string()))?;
    }
    for decl in &schema.relations {
        let (path, delim) = relation_file(dir, &decl.name).ok_or_else(|| {
            PipelineError::MissingFile(dir.join(format!("{}.tsv", decl.name)))
        })?;
        let mut rdr = csv::ReaderBuilder::new()
            .delimiter(delim)
            .flexible(true)
            .quoting(delim == b',')
            .from_path(&path)
            .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?
            .iter()
            .map(str::to_string)
            .collect();
        let want: Vec<&str> = decl.attrs.iter().map(|a| a.name.as_str()).collect();
        if header != want {
            return Err(PipelineError::HeaderMismatch {
                file: path,
                expected: want.join(","),
                found: header.join(","),
            });
        }
        for (i, row) in rdr.records().enumerate() {
            let row = row.map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?;
            if row.len() != decl.arity() {
                return Err(PipelineError::RaggedRow {
                    file: path,
                    line: i + 2,
                    expected: decl.arity(),
                    found: row.len(),
                });
            }
            let args = row
                .iter()
                .zip(&decl.attrs)
                .map(|(cell, attr)| {
                    if cell.is_empty() || cell == null_token {
                        Constant::null()
                    } else if attr.ty == AttrType::Id {
                        Constant::entity(cell)
                    } else {
                        Constant::value(cell)
                    }
                })
                .collect();
            b.fact(&decl.name, args)
                .map_err(|e| PipelineError::Data(e.to_string()))?;
        }
    }
    Ok(b.build())
}

/// `left<TAB>right` rows, sorted.
pub fn merges_tsv(pairs: &BTreeSet<TextPair>) -> String {
    let mut out = String::new();
    for (a, b) in pairs {
        out.push_str(a);
        out.push('\t');
        out.push_str(b);
        out.push('\n');
    }
    out
}

fn rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i, l.split('\t').collect()))
}

/// Reads `left<TAB>right` rows; orientation and duplicates do not matter,
/// reflexive rows are dropped.
pub fn parse_pairs(text: &str) -> Result<BTreeSet<TextPair>, PipelineError> {
    let mut out = BTreeSet::new();
    for (line, cols) in rows(text) {
        if cols.len() != 2 {
            return Err(PipelineError::Data(format!(
                "line {line}: expected 2 tab-separated columns, found {}",
                cols.len()
            )));
        }
        if cols[0] != cols[1] {
            out.insert(text_pair(cols[0], cols[1]));
        }
    }
    Ok(out)
}

/// Reads `constant<TAB>cluster` rows and returns every pair of distinct
/// constants sharing a cluster.
pub fn parse_clusters(text: &str) -> Result<BTreeSet<TextPair>, PipelineError> {
    let mut clusters: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (line, cols) in rows(text) {
        if cols.len() != 2 {
            return Err(PipelineError::Data(format!(
                "line {line}: expected constant and cluster id, found {} columns",
                cols.len()
            )));
        }
        clusters.entry(cols[1]).or_default().insert(cols[0]);
    }
    let mut out = BTreeSet::new();
    for members in clusters.values() {
        let m: Vec<&str> = members.iter().copied().collect();
        for (i, a) in m.iter().enumerate() {
            for b in &m[i + 1..] {
                out.insert(text_pair(a, b));
            }
        }
    }
    Ok(out)
}

/// Ground truth from a pair list, or from a cluster file when the path is
/// given as `clusters:FILE`.
pub fn read_truth(spec: &str) -> Result<BTreeSet<TextPair>, PipelineError> {
    let (clusters, path) = match spec.strip_prefix("clusters:") {
        Some(p) => (true, p),
        None => (false, spec.strip_prefix("pairs:").unwrap_or(spec)),
    };
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::Data(format!("{path}: {e}")))?;
    if clusters {
        parse_clusters(&text)
    } else {
        parse_pairs(&text)
    }
}
