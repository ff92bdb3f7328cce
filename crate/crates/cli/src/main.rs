use bondlearn_cli::commands::{
    cmd_build_ts_table, cmd_compare, cmd_generate, cmd_profile, cmd_rank_features, cmd_report, cmd_run,
    format_comparison, resolve_out,
};
use bondlearn_cli::{CliError, ExperimentConfig};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Bond price prediction benchmarks.
#[derive(Parser, Debug)]
#[command(name = "bondlearn", version)]
struct Cli {
    /// Output root (default: $BONDLEARN_OUT, else ./bondlearn-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic dataset and its provenance sidecar.
    Generate(ConfigArgs),
    /// Correlations, lag autocorrelations and categorical frequencies.
    Profile(ConfigArgs),
    /// Cross-validate one method and append it to the results table.
    Run(ConfigArgs),
    /// Random-forest feature elimination.
    RankFeatures(ConfigArgs),
    /// Per-bond-type ARMA(1,1) table over the whole dataset.
    BuildTsTable(ConfigArgs),
    /// Significance of the test-error difference between two result rows.
    Compare { row_a: String, row_b: String },
    /// Results table and plot data files.
    Report,
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    let out_for = |cfg: Option<&ExperimentConfig>| resolve_out(cli.out.as_deref(), cfg);
    match &cli.command {
        Command::Generate(a) => {
            let cfg = load(a)?;
            let path = cmd_generate(&cfg, &out_for(Some(&cfg)))?;
            println!("wrote {}", path.display());
        }
        Command::Profile(a) => {
            let cfg = load(a)?;
            let out = out_for(Some(&cfg));
            let report = cmd_profile(&cfg, &out)?;
            println!("profiled {} records; wrote {}", report.n_records, out.join("profile.json").display());
        }
        Command::Run(a) => {
            let cfg = load(a)?;
            let row = cmd_run(&cfg, &out_for(Some(&cfg)))?;
            println!(
                "{}: train WEPS {:.6}, test WEPS {:.6}, fit {:.3}s ({} failed instances)",
                row.label,
                row.train_weps.unwrap_or(f64::NAN),
                row.test_weps.unwrap_or(f64::NAN),
                row.fit_seconds.unwrap_or(f64::NAN),
                row.failed_instances
            );
        }
        Command::RankFeatures(a) => {
            let cfg = load(a)?;
            let ranking = cmd_rank_features(&cfg, &out_for(Some(&cfg)))?;
            for (i, f) in ranking.ordered.iter().enumerate() {
                let score = f.score.map(|s| format!("{s:.6}")).unwrap_or_else(|| "-".into());
                println!("{:>3}  {:<32} {score}", i + 1, f.name);
            }
        }
        Command::BuildTsTable(a) => {
            let cfg = load(a)?;
            let out = out_for(Some(&cfg));
            let table = cmd_build_ts_table(&cfg, &out)?;
            println!("{} bond types; wrote {}", table.groups.len(), out.join("ts_table.json").display());
        }
        Command::Compare { row_a, row_b } => {
            let s = cmd_compare(&out_for(None), row_a, row_b)?;
            println!("{}", format_comparison(row_a, row_b, &s));
        }
        Command::Report => {
            let summary = cmd_report(&out_for(None))?;
            let table = Path::new(&summary.files[0]);
            print!("{}", std::fs::read_to_string(table).map_err(|e| CliError::io(table, e))?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
