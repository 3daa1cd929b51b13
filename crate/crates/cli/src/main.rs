mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use statica_core::{ExampleName, Params};

use config::{MetricSpec, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Core(#[from] statica_core::Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use statica_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Parse(_) | E::InvalidMetric(_) | E::InvalidParameter(_)) => 2,
            CliError::Core(_) | CliError::Io { .. } => 1,
        }
    }
}

/// Static metrics with boundary: curvature, static potentials, boundary
/// geometry, flux integrals and rigidity verdicts.
#[derive(Debug, Parser)]
#[command(name = "statica", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check that V is a static potential and whether it is admissible.
    Verify(Common),
    /// Curvature summaries over interior samples.
    Curvature(Common),
    /// Second fundamental form and umbilicity of the boundary face.
    Boundary(Common),
    /// Flux scan toward the unbounded end, optionally written as CSV.
    Flux(Common),
    /// Local identity residuals and truncated divergence bookkeeping.
    Identity(Common),
    /// Obata-type classification.
    Classify(Common),
    /// Local surjectivity verdict.
    Surjectivity(Common),
    /// Mass from the flux limit.
    Mass(Common),
    /// Reproduce every catalog reference value.
    Selftest(Common),
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog example name.
    #[arg(long)]
    example: Option<ExampleName>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    m: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long)]
    vol: Option<f64>,
    #[arg(long)]
    fiber_flat: Option<bool>,
    #[arg(long)]
    inner_radius: Option<f64>,
    /// Potential expression, overriding the example's.
    #[arg(long, allow_hyphen_values = true)]
    potential: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    mean_curvature: Option<f64>,
    /// Outer radius of flux scans.
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    interior: Option<usize>,
    #[arg(long)]
    boundary: Option<usize>,
    /// Truncation of unbounded coordinate ranges for sampling.
    #[arg(long)]
    far: Option<f64>,
    /// CSV output path for flux scans.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn params(&self) -> Params {
        Params {
            n: self.n,
            m: self.m,
            lambda: self.lambda,
            v0: self.v0,
            vol: self.vol,
            fiber_flat: self.fiber_flat,
            inner_radius: self.inner_radius,
        }
    }

    fn has_params(&self) -> bool {
        self.params() != Params::default()
    }

    /// Inline flags win over the config file.
    fn merge(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => config::load(p)?,
            None => RunConfig::default(),
        };
        match (self.example, cfg.metric.as_mut()) {
            (Some(name), _) => cfg.metric = Some(MetricSpec::Example { name, params: self.params() }),
            (None, Some(MetricSpec::Example { params, .. })) => {
                let p = self.params();
                params.n = p.n.or(params.n);
                params.m = p.m.or(params.m);
                params.lambda = p.lambda.or(params.lambda);
                params.v0 = p.v0.or(params.v0);
                params.vol = p.vol.or(params.vol);
                params.fiber_flat = p.fiber_flat.or(params.fiber_flat);
                params.inner_radius = p.inner_radius.or(params.inner_radius);
            }
            (None, _) if self.has_params() => {
                return Err(CliError::Config("example parameters given without --example".into()));
            }
            _ => {}
        }
        if self.potential.is_some() {
            cfg.potential = self.potential.clone();
        }
        if self.mean_curvature.is_some() {
            cfg.mean_curvature = self.mean_curvature;
        }
        if let Some(r) = self.rmax {
            cfg.quadrature.r_max = r;
        }
        if let Some(k) = self.interior {
            cfg.sampling.interior = k;
        }
        if let Some(k) = self.boundary {
            cfg.sampling.boundary = k;
        }
        if let Some(f) = self.far {
            cfg.sampling.far = f;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.quadrature.validate()?;
        Ok(cfg)
    }
}

impl Command {
    fn split(&self) -> (&'static str, &Common) {
        match self {
            Command::Verify(c) => ("verify", c),
            Command::Curvature(c) => ("curvature", c),
            Command::Boundary(c) => ("boundary", c),
            Command::Flux(c) => ("flux", c),
            Command::Identity(c) => ("identity", c),
            Command::Classify(c) => ("classify", c),
            Command::Surjectivity(c) => ("surjectivity", c),
            Command::Mass(c) => ("mass", c),
            Command::Selftest(c) => ("selftest", c),
        }
    }
}

fn run(command: &Command) -> Result<(String, bool), CliError> {
    let (name, common) = command.split();
    let cfg = common.merge()?;
    let outcome = commands::dispatch(name, &cfg)?;
    let doc = json!({
        "tool": { "name": "statica", "version": env!("CARGO_PKG_VERSION") },
        "command": name,
        "config": serde_json::to_value(&cfg).expect("config serializes"),
        "pass": outcome.pass,
        "report": outcome.report,
    });
    Ok((report::render(&doc), outcome.pass))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((text, pass)) => {
            print!("{text}");
            ExitCode::from(if pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("statica: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
