use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedsim_cli::experiment::{load_dataset, prepare_data, rounds_to_target, run_experiment};
use fedsim_cli::metrics::{write_summary, MetricsWriter};
use fedsim_cli::{ExperimentConfig, Result};

#[derive(Parser)]
#[command(
    name = "fedsim",
    about = "Deterministic federated-learning simulator (FedAvg, FedProx, FedCL)",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics.csv plus summary.txt.
    Run {
        /// TOML experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for the metrics files.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print per-client class histograms for the configured partition.
    PartitionReport {
        /// TOML experiment config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Run several configs and tabulate rounds-to-target against a common
    /// accuracy target.
    Compare {
        /// TOML experiment configs, one per run.
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        /// Initial-accuracy target to reach.
        #[arg(long)]
        target: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out } => run(&config, &out),
        Command::PartitionReport { config } => partition_report(&config),
        Command::Compare { configs, target } => compare(&configs, target),
    }
}

fn run(config_path: &PathBuf, out_dir: &PathBuf) -> Result<()> {
    let cfg = ExperimentConfig::from_file(config_path)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| fedsim_cli::CliError::Io {
            path: out_dir.clone(),
            source: e,
        })?;
    let csv_path = out_dir.join("metrics.csv");

    // Stream rows to disk as rounds finish so partial metrics survive an
    // aborted run.
    let mut writer = MetricsWriter::create(&csv_path)?;
    let output = fedsim_cli::run_experiment_with(&cfg, |record| writer.write_record(record))?;

    let summary_path = out_dir.join("summary.txt");
    write_summary(&output.summary, &summary_path)?;

    println!("wrote {} and {}", csv_path.display(), summary_path.display());
    println!(
        "strategy={} rounds={} final_initial_acc={:.4} final_personalize_acc={:.4}",
        cfg.fl.strategy,
        cfg.fl.rounds,
        output.summary.final_initial_accuracy,
        output.summary.final_personalize_accuracy
    );
    if let Some(ratio) = output.summary.extra_cost_ratio_vs_fedavg {
        println!(
            "transfer={} scalars, {:.3}x a plain-averaging run",
            output.summary.total_params_transferred, ratio
        );
    }
    if let (Some(target), Some(rounds)) = (
        output.summary.target_accuracy,
        output.summary.rounds_to_target,
    ) {
        println!("reached {target:.3} initial accuracy at round {rounds}");
    }
    Ok(())
}

fn partition_report(config_path: &PathBuf) -> Result<()> {
    let cfg = ExperimentConfig::from_file(config_path)?;
    let dataset = load_dataset(&cfg)?;
    let data = prepare_data(&cfg, &dataset)?;

    println!(
        "partition: {} examples, {} classes, alpha={}, seed={}",
        dataset.len(),
        dataset.classes(),
        cfg.fl.alpha,
        cfg.fl.seed
    );
    let header: String = (0..dataset.classes())
        .map(|c| format!("{c:>6}"))
        .collect();
    println!("client  train   test {header}");
    for shard in &data.shards {
        let counts: String = shard
            .class_histogram()
            .iter()
            .map(|c| format!("{c:>6}"))
            .collect();
        println!(
            "{:>6} {:>6} {:>6} {counts}",
            shard.client_id,
            shard.train.len(),
            shard.test.len()
        );
    }
    println!(
        "proxy: {} examples ({}overlapping client data)",
        data.proxy.data.len(),
        if cfg.disjoint_proxy { "not " } else { "" }
    );
    Ok(())
}

fn compare(config_paths: &[PathBuf], target: f64) -> Result<()> {
    println!(
        "{:<28} {:>8} {:>12} {:>12} {:>16} {:>8}",
        "config", "strategy", "final_init", "to_target", "transfer", "ratio"
    );
    for path in config_paths {
        let cfg = ExperimentConfig::from_file(path)?;
        let output = run_experiment(&cfg)?;
        let reached = rounds_to_target(&output.records, target)
            .map(|r| r.to_string())
            .unwrap_or_else(|| "never".to_string());
        let ratio = output
            .summary
            .extra_cost_ratio_vs_fedavg
            .map(|r| format!("{r:.3}"))
            .unwrap_or_else(|| "-".to_string());
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        println!(
            "{:<28} {:>8} {:>12.4} {:>12} {:>16} {:>8}",
            name,
            cfg.fl.strategy.to_string(),
            output.summary.final_initial_accuracy,
            reached,
            output.summary.total_params_transferred,
            ratio
        );
    }
    Ok(())
}
