use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// A command's declared outputs, staged in temporary files beside their
/// targets and only moved into place together.
#[derive(Default)]
pub struct Outputs {
    staged: Vec<(PathBuf, tempfile::NamedTempFile)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stage(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if self.staged.iter().any(|(p, _)| p == path) {
            return Err(Error::Config(format!("{} is named as two different outputs", path.display())));
        }
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
        self.staged.push((path.to_path_buf(), tmp));
        Ok(())
    }

    /// Moves every staged file into place. If one move fails, the ones
    /// already committed are removed again.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        let mut done: Vec<PathBuf> = Vec::new();
        for (path, tmp) in self.staged {
            if let Err(e) = tmp.persist(&path) {
                for p in &done {
                    let _ = std::fs::remove_file(p);
                }
                return Err(Error::io(&path, e.error));
            }
            done.push(path);
        }
        Ok(done)
    }
}
