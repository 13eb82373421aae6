//! Codebooks shared by every trial of a run, optionally cached on disk.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use oia_core::codebook::{build_codebook, Codebook, Kind};

use crate::error::{HarnessError, Result};

/// File name of a cached codebook.
pub fn cache_file_name(kind: Kind, l: usize, n_f: u32, seed: u64) -> String {
    format!("{}_L{l}_nf{n_f}_seed{seed}.cb", kind.as_str())
}

/// Builds `(kind, n_f)` codebooks once per run. With a cache directory, files
/// are reused when present and written otherwise.
#[derive(Debug, Default)]
pub struct CodebookStore {
    books: HashMap<(Kind, u32), Codebook>,
}

impl CodebookStore {
    pub fn prepare(l: usize, seed: u64, wanted: &[(Kind, u32)], cache: Option<&Path>) -> Result<Self> {
        let mut books = HashMap::new();
        for &(kind, n_f) in wanted {
            if books.contains_key(&(kind, n_f)) {
                continue;
            }
            books.insert((kind, n_f), load_or_build(kind, l, n_f, seed, cache)?);
        }
        Ok(CodebookStore { books })
    }

    pub fn get(&self, kind: Kind, n_f: u32) -> &Codebook {
        &self.books[&(kind, n_f)]
    }
}

fn load_or_build(kind: Kind, l: usize, n_f: u32, seed: u64, cache: Option<&Path>) -> Result<Codebook> {
    let Some(dir) = cache else {
        return Ok(build_codebook(kind, l, n_f, seed)?);
    };
    let path: PathBuf = dir.join(cache_file_name(kind, l, n_f, seed));
    if path.exists() {
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        let cb = Codebook::from_text(&text)
            .map_err(|e| HarnessError::Csv { path: path.clone(), msg: e.to_string() })?;
        if cb.kind() != kind || cb.dim() != l || cb.size() != 1usize << n_f {
            return Err(HarnessError::Csv { path, msg: "cached codebook does not match its name".into() });
        }
        return Ok(cb);
    }
    let cb = build_codebook(kind, l, n_f, seed)?;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    std::fs::write(&path, cb.to_text()).map_err(|e| HarnessError::io(&path, e))?;
    Ok(cb)
}
