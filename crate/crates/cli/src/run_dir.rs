//! Output directory handling and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use parkstate::io::{sha256_file, write_file};
use serde::Serialize;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const OUT_PLACEHOLDER: &str = "<out>";

#[derive(Debug, Default, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Vec<String>,
    pub config_fingerprint: Option<String>,
    pub master_seed: Option<u64>,
    pub penetrations: Vec<f64>,
    pub artifacts: BTreeMap<String, String>,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A directory the command owns. Artifacts are recorded as they are written;
/// the manifest is written once by [`RunDir::finish`].
#[derive(Debug)]
pub struct RunDir {
    root: PathBuf,
    pub manifest: RunManifest,
}

impl RunDir {
    /// Creates `root` or empties it. A non-empty directory is refused unless
    /// `overwrite` is set.
    pub fn prepare(root: &Path, overwrite: bool, command: Vec<String>) -> anyhow::Result<RunDir> {
        if root.exists() {
            if !root.is_dir() {
                bail!(
                    "output path {} exists and is not a directory",
                    root.display()
                );
            }
            let entries: Vec<_> = fs::read_dir(root)
                .with_context(|| format!("reading {}", root.display()))?
                .collect::<Result<_, _>>()?;
            if !entries.is_empty() {
                if !overwrite {
                    bail!(
                        "output directory {} is not empty (pass --overwrite to replace it)",
                        root.display()
                    );
                }
                for entry in entries {
                    let path = entry.path();
                    if entry.file_type()?.is_dir() {
                        fs::remove_dir_all(&path)
                    } else {
                        fs::remove_file(&path)
                    }
                    .with_context(|| format!("removing {}", path.display()))?;
                }
            }
        } else {
            fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        }
        Ok(RunDir {
            root: root.to_path_buf(),
            manifest: RunManifest {
                tool: "parkstate",
                version: env!("CARGO_PKG_VERSION"),
                command,
                ..Default::default()
            },
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.root.join(name);
        write_file(&path, contents)?;
        self.manifest
            .artifacts
            .insert(name.to_owned(), sha256_file(&path)?);
        Ok(())
    }

    /// Records the outcome and writes the manifest. The returned error is the
    /// command's own error if there was one.
    pub fn finish(mut self, outcome: anyhow::Result<()>) -> anyhow::Result<()> {
        match &outcome {
            Ok(()) => self.manifest.status = "ok".to_owned(),
            Err(e) => {
                self.manifest.status = "failed".to_owned();
                self.manifest.error = Some(format!("{e:#}"));
            }
        }
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        let written = write_file(&self.root.join(MANIFEST_FILE), &text);
        outcome?;
        Ok(written?)
    }
}

/// The command line with the value of `--out` replaced by a placeholder, so
/// runs into different directories record the same command.
pub fn normalized_command(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut replace_next = false;
    for arg in args.iter().skip(1) {
        if replace_next {
            out.push(OUT_PLACEHOLDER.to_owned());
            replace_next = false;
        } else if arg == "--out" || arg == "-o" {
            out.push(arg.clone());
            replace_next = true;
        } else if arg.starts_with("--out=") {
            out.push(format!("--out={OUT_PLACEHOLDER}"));
        } else {
            out.push(arg.clone());
        }
    }
    out
}
