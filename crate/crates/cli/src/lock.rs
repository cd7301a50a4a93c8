//! One pipeline per corpus directory, held through a pid file.

use std::fs::{self, OpenOptions};
use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const LOCK_FILE: &str = ".cherry.lock";

#[derive(Debug)]
pub struct CorpusLock {
    path: PathBuf,
}

impl CorpusLock {
    /// Takes the lock, replacing one left behind by a process that is gone.
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::runtime(format!("{}: {e}", dir.display())))?;
        let path = dir.join(LOCK_FILE);
        for _ in 0..2 {
            match OpenOptions::new().write(true).create_new(true).open(&path) {
                Ok(mut f) => {
                    writeln!(f, "{}", std::process::id()).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
                    return Ok(Self { path });
                }
                Err(e) if e.kind() == ErrorKind::AlreadyExists => {
                    let holder = fs::read_to_string(&path).ok().and_then(|s| s.trim().parse::<u32>().ok());
                    match holder {
                        Some(pid) if alive(pid) => {
                            return Err(CliError::Runtime(format!(
                                "{} is in use by process {pid} ({})",
                                dir.display(),
                                path.display()
                            )))
                        }
                        _ => {
                            tracing::warn!(path = %path.display(), ?holder, "removing stale lock");
                            let _ = fs::remove_file(&path);
                        }
                    }
                }
                Err(e) => return Err(CliError::runtime(format!("{}: {e}", path.display()))),
            }
        }
        Err(CliError::Runtime(format!("could not take {}", path.display())))
    }
}

impl Drop for CorpusLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(target_os = "linux")]
fn alive(pid: u32) -> bool {
    Path::new("/proc").join(pid.to_string()).exists()
}

#[cfg(not(target_os = "linux"))]
fn alive(_pid: u32) -> bool {
    true
}
