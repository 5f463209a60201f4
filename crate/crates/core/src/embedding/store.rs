//! Content digests and the plain-text vector file.
//!
//! One record per line: `<digest> <dim> <x_1> ... <x_dim>`, fields separated
//! by a single ASCII space, lines terminated by `\n`. The digest is lowercase
//! hex SHA-256 over `len(model_id) as u64 little-endian || model_id || text`,
//! all UTF-8 bytes, with no text normalization. Writers emit floats in the
//! shortest decimal form that parses back to the same `f64` and sort lines by
//! digest. Readers skip blank lines and lines starting with `#`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Hex SHA-256 identifying one `(model_id, text)` embedding.
pub fn content_digest(model_id: &str, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update((model_id.len() as u64).to_le_bytes());
    hasher.update(model_id.as_bytes());
    hasher.update(text.as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Error)]
pub enum VectorFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

/// Parse vector-file text. `origin` only labels error messages.
pub fn parse_vector_file(text: &str, origin: &Path) -> Result<BTreeMap<String, Vec<f64>>, VectorFileError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| VectorFileError::Parse { path: origin.to_path_buf(), line: line_no, message };
        let mut fields = trimmed.split_ascii_whitespace();
        let digest = fields.next().unwrap_or_default();
        if digest.len() != 64 || !digest.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(err(format!("malformed digest {digest:?}")));
        }
        let dim: usize = fields
            .next()
            .ok_or_else(|| err("missing dimension".into()))?
            .parse()
            .map_err(|e| err(format!("bad dimension: {e}")))?;
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|e| err(format!("bad float {f:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != dim {
            return Err(err(format!("declared dim {dim} but found {} values", values.len())));
        }
        let key = digest.to_ascii_lowercase();
        match out.get(&key) {
            Some(prev) if prev != &values => {
                return Err(err(format!("conflicting duplicate digest {key}")));
            }
            _ => {
                out.insert(key, values);
            }
        }
    }
    Ok(out)
}

pub fn read_vector_file(path: &Path) -> Result<BTreeMap<String, Vec<f64>>, VectorFileError> {
    let text = fs::read_to_string(path).map_err(|source| VectorFileError::Io { path: path.to_path_buf(), source })?;
    parse_vector_file(&text, path)
}

pub fn format_vector_file<'a, I>(entries: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a [f64])>,
{
    let mut sorted: Vec<_> = entries.into_iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = String::new();
    for (digest, values) in sorted {
        let _ = write!(out, "{digest} {}", values.len());
        for v in values {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    out
}

/// Write via a sibling temp file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}
