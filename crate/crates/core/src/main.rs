use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mzuq::config::RunConfig;
use mzuq::run::run;

/// Propagate a uniform uncertainty through viscous Burgers with a polynomial
/// chaos expansion, optionally reduced with a finite-memory closure.
#[derive(Parser, Debug)]
#[command(name = "mzuq", version)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// full, markovian, memory, adaptive or mc.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    n_modes: Option<String>,
    #[arg(long)]
    n_pc: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    t_end: Option<String>,
    #[arg(long)]
    t0: Option<String>,
    #[arg(long)]
    n0: Option<String>,
    #[arg(long)]
    lambda_stat: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    observer_stride: Option<String>,
    #[arg(long)]
    convolution: Option<String>,
    /// Output path prefix.
    #[arg(long)]
    out: Option<String>,
    /// Any other setting, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Cli {
    fn overrides(&self) -> Result<Vec<(String, String)>, String> {
        let named = [
            ("mode", &self.mode),
            ("nu", &self.nu),
            ("n_modes", &self.n_modes),
            ("n_pc", &self.n_pc),
            ("lambda", &self.lambda),
            ("dt", &self.dt),
            ("t_end", &self.t_end),
            ("t0", &self.t0),
            ("n0", &self.n0),
            ("lambda_stat", &self.lambda_stat),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("observer_stride", &self.observer_stride),
            ("convolution", &self.convolution),
            ("out", &self.out),
        ];
        let mut out: Vec<(String, String)> = named
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{item}`"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(out)
    }
}

fn main() -> ExitCode {
    // usage errors are configuration errors (1); 2 is reserved for numerical failures
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let overrides = match cli.overrides() {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("configuration error: {msg}");
            return ExitCode::from(1);
        }
    };
    let text = match &cli.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("configuration error: cannot read {}: {e}", path.display());
                return ExitCode::from(1);
            }
        },
        None => None,
    };
    let cfg = match RunConfig::from_sources(text.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    match run(&cfg) {
        Ok(summary) => {
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
