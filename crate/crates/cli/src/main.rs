use std::path::PathBuf;
use std::process::ExitCode;

use amolab_cli::config::{RunConfig, Scale};
use amolab_cli::{run, CliError, Command};
use clap::Parser;

#[derive(Parser, Debug)]
#[command(name = "amolab", version, about = "Almost Mathieu operator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; defaults are used for missing fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Eigensystem cache directory (else $AMOLAB_CACHE_DIR, else no cache).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    radius: Option<u32>,
    #[arg(long, global = true)]
    margin: Option<u32>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    ell_min: Option<i64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    ell_max: Option<i64>,
    /// Multiple of L.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Multiple of L.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Multiple of L.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta0: Option<f64>,
    /// Comma-separated distances.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    n: Option<Vec<i64>>,
    #[arg(long, global = true)]
    phases: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_parser = parse_scale)]
    scale: Option<Scale>,
}

fn parse_scale(s: &str) -> Result<Scale, String> {
    match s {
        "full" => Ok(Scale::Full),
        "smoke" => Ok(Scale::Smoke),
        _ => Err(format!("unknown scale `{s}` (full, smoke)")),
    }
}

impl Cli {
    fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($src:expr, $dst:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        set!(self.seed, c.seed);
        set!(self.out, c.out);
        set!(self.lambda, c.model.lambda);
        set!(self.alpha, c.model.alpha);
        set!(self.theta, c.model.theta);
        set!(self.radius, c.window.radius);
        set!(self.ell_min, c.ell.min);
        set!(self.ell_max, c.ell.max);
        set!(self.gamma, c.gamma);
        set!(self.eta, c.eta);
        set!(self.epsilon, c.epsilon);
        set!(self.delta0, c.delta0);
        set!(self.n, c.n);
        set!(self.phases, c.phases);
        set!(self.samples, c.samples);
        set!(self.scale, c.scale);
        if self.workers.is_some() {
            c.workers = self.workers;
        }
        if self.margin.is_some() {
            c.window.margin = self.margin;
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                let err = CliError::Validation(vec![e]);
                eprintln!("error: {err}");
                return ExitCode::from(err.exit_code());
            }
        },
        None => RunConfig::default(),
    };
    cli.apply(&mut config);
    match run(cli.command, &config, cli.cache.clone()) {
        Ok(files) => {
            eprintln!("wrote {} files to {}", files.len(), config.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
