//! Command line front end. Exit codes: 0 success, 1 numerical failure,
//! 2 usage error. Failures also print one `error kind=... exit=... message="..."`
//! line on stderr.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::selftest;
use super::spec::{parse_dt, ExperimentSpec};
use super::study::{run_sample, run_spatial_study, run_temporal_study, write_nodal_csv};
use super::table::ErrorTable;
use crate::error::{Error, Result};
use crate::spatial::dump;

#[derive(Debug, Parser)]
#[command(name = "spde-fbm", version, about = "Strong convergence studies for SPDEs driven by fractional Brownian motion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Temporal convergence study on a fixed mesh.
    Temporal(StudyArgs),
    /// Spatial convergence study on nested meshes at fixed dt.
    Spatial(StudyArgs),
    /// Dump one solution field at the final time as node CSV.
    Sample(SampleArgs),
    /// Run the built-in oracle checks.
    Selftest,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// implicit | setd1 | sers
    #[arg(long)]
    scheme: Option<String>,
    /// Hurst index in (1/2, 1].
    #[arg(long, allow_negative_numbers = true)]
    hurst: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    /// Comma separated, e.g. `1/16,1/32,1/64`.
    #[arg(long)]
    dt_levels: Option<String>,
    #[arg(long)]
    dt_ref: Option<String>,
    /// Cells of the finest mesh.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    mesh: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    jump_intensity: Option<String>,
    /// auto | on | off; bare `--upwind` means on.
    #[arg(long, num_args = 0..=1, default_missing_value = "on")]
    upwind: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` file; flags given on the command line take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra settings as `key=value`, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    study: StudyArgs,
    /// Time step of the dumped solution; defaults to dt-ref.
    #[arg(long)]
    dt: Option<String>,
    #[arg(long, default_value_t = 0)]
    sample_index: usize,
    /// Also write the mesh and operator text dumps.
    #[arg(long)]
    dump_operator: bool,
}

impl StudyArgs {
    fn to_spec(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::InvalidExperiment(format!("cannot read config {}: {e}", path.display())))?;
            spec.apply_config(&text)?;
        }
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidExperiment(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            spec.set(k, v)?;
        }
        let flags = [
            ("scheme", &self.scheme),
            ("hurst", &self.hurst),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("samples", &self.samples),
            ("dt-levels", &self.dt_levels),
            ("dt-ref", &self.dt_ref),
            ("seed", &self.seed),
            ("jump-intensity", &self.jump_intensity),
            ("upwind", &self.upwind),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                spec.set(k, v)?;
            }
        }
        if let Some(m) = &self.mesh {
            spec.set("mesh", &m.join(" "))?;
        }
        if let Some(out) = &self.out {
            spec.out_dir = Some(out.clone());
        }
        Ok(spec)
    }
}

fn print_table(table: &ErrorTable) {
    print!("{}", table.to_csv());
    match table.global_order {
        Some(o) => println!("# global_order = {o:.4}"),
        None => println!("# global_order = none"),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Temporal(args) => print_table(&run_temporal_study(&args.to_spec()?)?),
        Command::Spatial(args) => print_table(&run_spatial_study(&args.to_spec()?)?),
        Command::Sample(args) => {
            let spec = args.study.to_spec()?;
            let dt = match &args.dt {
                Some(s) => parse_dt(s)?,
                None => spec.dt_reference,
            };
            let (disc, nodal) = run_sample(&spec, args.sample_index, dt)?;
            let dir = spec.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            let path = dir.join(format!("sample_{}.csv", args.sample_index));
            write_nodal_csv(&path, &disc.mesh, &nodal)?;
            if args.dump_operator {
                dump::write_mesh(&disc.mesh, &dir)?;
                dump::write_operator(&disc.op, &dir)?;
            }
            println!("wrote {}", path.display());
        }
        Command::Selftest => {
            let checks = selftest::run_all();
            let mut failed = 0;
            for c in &checks {
                println!("selftest {} {} {}", c.name, if c.passed { "ok" } else { "FAIL" }, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Error::SelftestFailed(failed));
            }
        }
    }
    Ok(())
}

fn error_line(kind: &str, code: i32, message: &str) -> String {
    format!("error kind={kind} exit={code} message={message:?}")
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let _ = e.print();
            eprintln!("{}", error_line("Usage", 2, e.kind().to_string().as_str()));
            return 2;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let code = if e.is_usage() { 2 } else { 1 };
            eprintln!("{}", error_line(e.kind(), code, &e.to_string()));
            code
        }
    }
}
