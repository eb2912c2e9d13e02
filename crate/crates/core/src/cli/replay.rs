use std::path::PathBuf;

use clap::Args;

use super::manifest::RunManifest;
use super::{CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// A manifest, or a result file embedding one.
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded `--out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// The recorded arguments with `--out` and `--threads` replaced.
pub fn replay_args(recorded: &[String], out: Option<&str>, threads: Option<usize>) -> Vec<String> {
    let mut args = Vec::with_capacity(recorded.len() + 4);
    let mut it = recorded.iter();
    while let Some(a) = it.next() {
        let (is_out, is_threads) = (a == "--out", a == "--threads");
        if (is_out && out.is_some()) || is_threads {
            it.next();
            continue;
        }
        if (a.starts_with("--out=") && out.is_some()) || a.starts_with("--threads=") {
            continue;
        }
        args.push(a.clone());
    }
    if let Some(o) = out {
        args.push("--out".into());
        args.push(o.into());
    }
    if let Some(t) = threads {
        args.push("--threads".into());
        args.push(t.to_string());
    }
    args
}

pub fn run(args: &ReplayArgs) -> CliResult<()> {
    let manifest = RunManifest::load(&args.manifest)?;
    if manifest.command.first().map(String::as_str) == Some("replay") {
        return Err(CliError::data("manifest records a replay; refusing to recurse"));
    }
    let threads = Some(rayon::current_num_threads());
    let out = args.out.as_ref().map(|p| p.display().to_string());
    let mut argv = vec!["rasgw".to_string()];
    argv.extend(replay_args(&manifest.command, out.as_deref(), threads));
    match super::run(argv) {
        0 => Ok(()),
        code => Err(CliError {
            code,
            message: "replayed command failed".into(),
        }),
    }
}
