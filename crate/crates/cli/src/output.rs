use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{SystemTime, UNIX_EPOCH};

use cea_core::Error;

use crate::error::CliResult;

pub const OUT_ENV: &str = "CEA_OUT_DIR";

/// Recipe text being executed, echoed into the sidecar.
pub static RECIPE: OnceLock<String> = OnceLock::new();

pub fn out_dir(flag: &Option<PathBuf>) -> CliResult<PathBuf> {
    let dir = flag
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| Error::io_at(&dir, e))?;
    Ok(dir)
}

/// Writes a data file through `body`, reporting the path on failure.
pub fn write_file<F>(dir: &Path, name: &str, body: F) -> CliResult<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Error::io_at(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io_at(&path, e))?;
    Ok(path)
}

/// Metadata sidecar: command echo, seed and code version. The timestamp
/// lives here so that data files stay byte-identical across reruns.
pub fn write_meta(dir: &Path, command: &str, seed: Option<u64>) -> CliResult<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let stamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_file(dir, "meta.txt", |w| {
        writeln!(w, "command = {command}")?;
        writeln!(w, "args = {}", args.join(" "))?;
        if let Some(s) = seed {
            writeln!(w, "seed = {s}")?;
        }
        writeln!(w, "version = {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "created_unix = {stamp}")?;
        if let Some(r) = RECIPE.get() {
            writeln!(w, "\n[recipe]")?;
            write!(w, "{r}")?;
        }
        Ok(())
    })?;
    Ok(())
}
