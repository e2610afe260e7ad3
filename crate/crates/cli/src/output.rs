//! Run artifacts: `table.csv`, `plot.svg` and `manifest.conf`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::table::ResultTable;

pub const TABLE_FILE: &str = "table.csv";
pub const PLOT_FILE: &str = "plot.svg";
pub const MANIFEST_FILE: &str = "manifest.conf";

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io)
}

/// The manifest is itself a valid config file: passing it back through
/// `--config` reproduces the run. Provenance and summary lines are comments.
pub fn manifest(
    config: &ExperimentConfig,
    table: &ResultTable,
    summary: &[(String, String)],
) -> String {
    let mut lines = vec![
        "# shapegeo run manifest".to_string(),
        format!("# shapegeo-cli {}", env!("CARGO_PKG_VERSION")),
        format!("# shapegeo-core {}", shapegeo_core::VERSION),
        format!("# note: {}", table.note),
        format!("# rows: {}", table.len()),
    ];
    lines.extend(config.to_kv_lines());
    lines.extend(summary.iter().map(|(k, v)| format!("# summary: {k} = {v}")));
    lines.join("\n") + "\n"
}

/// Reads `# summary: key = value` lines back from a manifest.
pub fn manifest_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.strip_prefix("# summary: "))
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Paths of the artifacts of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub table: PathBuf,
    pub plot: PathBuf,
    pub manifest: PathBuf,
}

pub fn write_artifacts(
    dir: &Path,
    csv: &str,
    svg: &str,
    manifest: &str,
) -> Result<Artifacts, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let a = Artifacts {
        table: dir.join(TABLE_FILE),
        plot: dir.join(PLOT_FILE),
        manifest: dir.join(MANIFEST_FILE),
    };
    write_atomic(&a.table, csv.as_bytes())?;
    write_atomic(&a.plot, svg.as_bytes())?;
    // last, so a present manifest implies complete artifacts
    write_atomic(&a.manifest, manifest.as_bytes())?;
    Ok(a)
}
