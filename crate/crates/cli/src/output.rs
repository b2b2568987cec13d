//! Output directory handling: flag, then `FRMPC_OUT_DIR`, then the config
//! file. Existing files are only replaced with `--force`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "FRMPC_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "frmpc-out";

#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
    force: bool,
}

impl OutDir {
    pub fn resolve(flag: Option<&Path>, config: Option<&Path>, force: bool) -> Self {
        let root = flag
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .or_else(|| config.map(Path::to_path_buf))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
        Self { root, force }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Fails before anything is written if one of `names` already exists.
    pub fn claim(&self, names: &[String]) -> Result<(), CliError> {
        if self.force {
            return Ok(());
        }
        for n in names {
            let p = self.root.join(n);
            if p.exists() {
                return Err(CliError::Config(format!(
                    "refusing to overwrite {} (pass --force)",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        std::fs::create_dir_all(&self.root)
            .map_err(|e| CliError::io(format!("creating {}", self.root.display()), e))?;
        let p = self.root.join(name);
        let f = File::create(&p).map_err(|e| CliError::io(format!("creating {}", p.display()), e))?;
        Ok(BufWriter::new(f))
    }
}
