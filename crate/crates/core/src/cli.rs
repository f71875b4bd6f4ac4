//! Command-line entry point.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::case::{AssemblyOptions, Case};
use crate::error::Result;
use crate::io::deck::read_case_file;
use crate::io::vtk::{read_vtk, Format};
use crate::scheduler::{self, RunOptions};

#[derive(Debug, Clone, Parser)]
#[command(name = "nauticle", version, about = "Particle simulations from symbolic case files")]
pub struct CliConfig {
    /// Case file (YAML). `-yamlname` is accepted as well.
    #[arg(long = "yamlname", visible_alias = "case", value_name = "FILE")]
    pub case: PathBuf,
    /// Worker threads [default: hardware threads, capped at the particle count]
    #[arg(long, env = "NAUTICLE_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,
    /// Seed for `rand`
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory [default: the case file name without extension]
    #[arg(long, value_name = "DIR")]
    pub outdir: Option<PathBuf>,
    /// Result file format: ascii or binary
    #[arg(long, default_value = "ascii", value_parser = parse_format)]
    pub format: Format,
    /// Restart from a result frame written by an earlier run
    #[arg(long, value_name = "FRAME")]
    pub hotstart: Option<PathBuf>,
    /// Parse and assemble the case, then stop
    #[arg(long)]
    pub validate: bool,
    /// Log progress to stderr
    #[arg(long, short)]
    pub verbose: bool,
}

fn parse_format(s: &str) -> std::result::Result<Format, String> {
    s.parse()
}

/// The single-dash `-yamlname` form becomes `--yamlname`.
fn normalize(args: impl IntoIterator<Item = OsString>) -> Vec<OsString> {
    args.into_iter()
        .map(|a| match a.to_str() {
            Some(s) if s == "-yamlname" || s.starts_with("-yamlname=") => OsString::from(format!("-{s}")),
            _ => a,
        })
        .collect()
}

pub fn parse_args(args: impl IntoIterator<Item = OsString>) -> std::result::Result<CliConfig, clap::Error> {
    CliConfig::try_parse_from(normalize(args))
}

fn init_logging(verbose: bool) {
    let level = if verbose { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("NAUTICLE_LOG", level))
        .format_timestamp(None)
        .try_init();
}

pub fn execute(config: &CliConfig) -> Result<()> {
    let doc = read_case_file(&config.case)?;
    let hot_start = config.hotstart.as_deref().map(read_vtk).transpose()?;
    let threads = config
        .threads
        .map(|t| t as usize)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |t| t.get()));
    let mut case = Case::assemble(
        &doc,
        &AssemblyOptions {
            seed: config.seed,
            threads,
            hot_start,
        },
    )?;
    log::info!(
        "assembled `{}`: {} particles, {} equations, {} threads",
        case.name,
        case.particles().len(),
        case.equations().len(),
        case.executor().threads()
    );
    if config.validate {
        println!(
            "{}: ok ({} particles, {} equations)",
            config.case.display(),
            case.particles().len(),
            case.equations().len()
        );
        return Ok(());
    }
    let outdir = config.outdir.clone().unwrap_or_else(|| PathBuf::from(&doc.name));
    let report = scheduler::run(
        &mut case,
        &RunOptions {
            outdir: Some(outdir.clone()),
            format: config.format,
            keep_frames: false,
        },
    )?;
    println!(
        "{}: {} steps, {} frames, {} cell builds in {:.2} s -> {}",
        report.case,
        report.steps,
        report.frames.len(),
        report.cell_builds,
        report.wall_time.as_secs_f64(),
        outdir.display()
    );
    Ok(())
}

/// Process exit code: 0 on success, 2 for usage errors, 1 otherwise.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    let config = match parse_args(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(config.verbose);
    match execute(&config) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("nauticle: {}: {e}", e.class());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<OsString> {
        list.iter().map(OsString::from).collect()
    }

    #[test]
    fn paper_invocation() {
        let c = parse_args(args(&["nauticle", "-yamlname", "case.yaml"])).unwrap();
        assert_eq!(c.case, PathBuf::from("case.yaml"));
        assert_eq!(c.seed, 0);
        assert_eq!(c.format, Format::Ascii);
        let c = parse_args(args(&["nauticle", "--case", "a.yaml", "--threads", "3", "--format", "binary"])).unwrap();
        assert_eq!(c.threads, Some(3));
        assert_eq!(c.format, Format::Binary);
    }

    #[test]
    fn usage_errors() {
        assert!(parse_args(args(&["nauticle"])).is_err());
        assert!(parse_args(args(&["nauticle", "--case", "a", "--threads", "0"])).is_err());
        assert!(parse_args(args(&["nauticle", "--case", "a", "--format", "xml"])).is_err());
    }
}
