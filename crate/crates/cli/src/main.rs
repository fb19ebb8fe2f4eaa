use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tdlc_cli::checks::{self, CheckArgs};
use tdlc_cli::{commands, emit, ModelKind, PartialConfig, Row, RunConfig};

#[derive(Parser)]
#[command(name = "tdlc", version, about = "Finite-resolution experiments on t.d.l.c. model groups")]
struct Cli {
    #[command(flatten)]
    shared: Shared,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Shared {
    #[arg(long, global = true, value_enum)]
    model: Option<ModelKind>,
    #[arg(long, global = true)]
    p: Option<u64>,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    resolution: Option<u32>,
    #[arg(long, global = true)]
    horizon: Option<u32>,
    #[arg(long, global = true)]
    max_k: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// JSON file with any of the above; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write rows here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scale by the tidying procedure, compared with the closed form.
    Scale {
        #[arg(long, alias = "matrix")]
        g: String,
    },
    /// Run the tidying procedure from U.
    Tidy {
        #[arg(long)]
        u: String,
        #[arg(long)]
        g: String,
    },
    /// Membership of x in con(g), con(g⁻¹), par(g), par(g⁻¹).
    ConTest {
        #[arg(long)]
        g: String,
        #[arg(long)]
        x: String,
    },
    /// Window image of nub(g).
    Nub {
        #[arg(long)]
        g: String,
    },
    /// Forward and two-sided conjugators for (g, gu) over U.
    Conjugator {
        #[arg(long)]
        g: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        set: String,
    },
    #[command(subcommand)]
    Experiment(Experiment),
    /// Seeded verification batteries.
    TheoremCheck {
        #[arg(long, default_value = "all")]
        which: String,
        /// Lamp for the normal-closure witness.
        #[arg(long)]
        b: Option<String>,
        /// Normal subgroup for the quotient check: lamps or trivial.
        #[arg(long)]
        quotient: Option<String>,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Contraction groups and nubs along a shrinking net.
    Limits {
        #[arg(long)]
        n_max: Option<u32>,
    },
}

fn config(shared: &Shared, n_max: Option<u32>) -> Result<RunConfig> {
    let flags = PartialConfig {
        model: shared.model,
        p: shared.p,
        n: shared.n,
        resolution: shared.resolution,
        horizon: shared.horizon,
        max_k: shared.max_k,
        seed: shared.seed,
        samples: shared.samples,
        n_max,
        out: shared.out.clone(),
    };
    let base = match &shared.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    RunConfig::resolve(flags.over(base))
}

fn rows(cli: &Cli) -> Result<(RunConfig, Vec<Row>)> {
    let n_max = match &cli.cmd {
        Cmd::Experiment(Experiment::Limits { n_max }) => *n_max,
        _ => None,
    };
    let cfg = config(&cli.shared, n_max)?;
    let rows = match &cli.cmd {
        Cmd::Scale { g } => commands::scale(&cfg, g)?,
        Cmd::Tidy { u, g } => commands::tidy(&cfg, u, g)?,
        Cmd::ConTest { g, x } => commands::con_test(&cfg, g, x)?,
        Cmd::Nub { g } => commands::nub(&cfg, g)?,
        Cmd::Conjugator { g, u, set } => commands::conjugator(&cfg, g, u, set)?,
        Cmd::Experiment(Experiment::Limits { .. }) => commands::experiment_limits(&cfg)?,
        Cmd::TheoremCheck { which, b, quotient } => {
            let names = checks::names(which).map_err(anyhow::Error::msg)?;
            let args = CheckArgs { b: b.clone(), quotient: quotient.clone() };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            names.iter().flat_map(|c| checks::run(c, &cfg, &args, &mut rng)).collect()
        }
    };
    Ok((cfg, rows))
}

fn write(cfg: &RunConfig, rows: &[Row]) -> Result<bool> {
    Ok(match &cfg.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            let ok = emit(rows, &mut w)?;
            w.flush()?;
            ok
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            emit(rows, &mut w)?
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match rows(&cli).and_then(|(cfg, rows)| write(&cfg, &rows)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
