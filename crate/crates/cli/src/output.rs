use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;

/// A problem with user input that is not a library error.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Output directory with the overwrite policy applied up front, so a run
/// never half-overwrites a previous one.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn prepare(root: &Path, files: &[&str], force: bool) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        if !force {
            for f in files {
                let p = root.join(f);
                if p.exists() {
                    return Err(InputError(format!(
                        "{} exists; pass --force to overwrite",
                        p.display()
                    ))
                    .into());
                }
            }
        }
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn create(&self, name: &str) -> anyhow::Result<BufWriter<File>> {
        let p = self.root.join(name);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir)?;
        }
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        Ok(BufWriter::new(f))
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

pub fn open(path: &Path) -> anyhow::Result<File> {
    File::open(path).with_context(|| format!("opening {}", path.display()))
}
