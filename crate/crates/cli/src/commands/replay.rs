use std::path::PathBuf;

use clap::{Args, Parser};

use super::{run as run_command, Cli, Command};
use crate::failure::{runtime, usage, CmdResult};
use crate::manifest::{read_manifest, Invocation, TOOL};

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Manifest written next to an earlier run's output.
    #[arg(long)]
    pub manifest: PathBuf,
}

pub fn run(args: ReplayArgs) -> CmdResult {
    let m = read_manifest(&args.manifest)?;
    if m.tool != TOOL {
        return Err(runtime(format!(
            "{} was written by `{}`, not {TOOL}",
            args.manifest.display(),
            m.tool
        )));
    }
    if m.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest is from version {}, this is {}; outputs may differ",
            m.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let cli = Cli::try_parse_from(std::iter::once(TOOL.to_string()).chain(m.argv.iter().cloned()))
        .map_err(|e| usage(format!("recorded arguments no longer parse: {e}")))?;
    if let Command::Replay(_) = cli.command {
        return Err(runtime(
            "manifest records a replay; replay the original manifest instead",
        ));
    }
    std::env::set_current_dir(&m.cwd).map_err(|e| {
        runtime(format!(
            "cannot enter recorded directory {}: {e}",
            m.cwd.display()
        ))
    })?;
    run_command(
        cli.command,
        Invocation {
            argv: m.argv,
            cwd: m.cwd,
        },
    )
}
