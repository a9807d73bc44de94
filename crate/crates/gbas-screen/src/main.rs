//! Command-line front end: day-long screening runs, three-way algorithm
//! comparisons, and an LP dump for debugging single epochs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gbas_core::config::AirportConfig;
use gbas_core::inflation::build_optimal_lp;
use gbas_core::report::{
    write_compare_summary_json, write_epochs_csv, write_run_summary_json, write_vpl_series_csv,
};
use gbas_core::simulator::{availability, compare_algorithms, run_day, Algorithm, RunConfig};
use gbas_core::Error;

#[derive(Parser)]
#[command(
    name = "gbas-screen",
    about = "GBAS position-domain geometry screening simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Airport configuration TOML.
    #[arg(long)]
    config: PathBuf,
    /// Ionospheric impact ratio c (1.0 conservative, 0.5 realistic).
    #[arg(long, default_value_t = 1.0)]
    c_factor: f64,
    /// Seconds between epochs.
    #[arg(long, default_value_t = 60.0)]
    step_s: f64,
    /// Simulated span in seconds.
    #[arg(long, default_value_t = 86_400.0)]
    day_s: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm over a full day and write epochs.csv + summary.json.
    Run {
        #[command(flatten)]
        common: CommonArgs,
        /// Geometry-screening algorithm: sigma-vig, targeted, or optimal.
        #[arg(long)]
        algorithm: Algorithm,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run all three algorithms on identical epochs and write epochs.csv
    /// per algorithm, vpl_series.csv, and summary.json.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the optimal-inflation LP for one epoch in text form.
    DumpLp {
        #[command(flatten)]
        common: CommonArgs,
        /// Epoch index (0-based, at the configured step).
        #[arg(long)]
        epoch: usize,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::EmptyInput(_) | Error::Io(_) => 2,
        Error::IntegrityVerification { .. } => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            common,
            algorithm,
            out,
        } => {
            let airport = AirportConfig::load(&common.config)?;
            let mut config = RunConfig::new(airport, algorithm, common.c_factor);
            config.epoch_step_s = common.step_s;
            config.day_length_s = common.day_s;
            let results = run_day(&config)?;
            write_epochs_csv(&out.join("epochs.csv"), &results)?;
            write_run_summary_json(
                &out.join("summary.json"),
                &config.airport.name,
                algorithm.name(),
                common.c_factor,
                &results,
            )?;
            println!(
                "{} {} c={}: availability {:.2}% over {} epochs",
                config.airport.name,
                algorithm.name(),
                common.c_factor,
                availability(&results)?,
                results.len()
            );
            Ok(())
        }
        Command::Compare { common, out } => {
            let airport = AirportConfig::load(&common.config)?;
            let report = compare_algorithms(&airport, common.c_factor, common.step_s, common.day_s)?;
            for summary in &report.summaries {
                write_epochs_csv(
                    &out.join(format!("epochs_{}.csv", summary.algorithm.name())),
                    &summary.results,
                )?;
                println!(
                    "{} {} c={}: availability {:.2}%, mean inflation {:.3} m, {} LPs",
                    report.airport_name,
                    summary.algorithm.name(),
                    report.c_factor,
                    summary.availability_pct,
                    summary.mean_vpl_inflation_m,
                    summary.total_lp_count
                );
            }
            write_vpl_series_csv(&out.join("vpl_series.csv"), &report)?;
            write_compare_summary_json(&out.join("summary.json"), &report)?;
            println!(
                "optimal below sigma-vig at {:.2}% of night epochs, below targeted at {:.2}%",
                report.optimal_below_sigma_vig_night_pct, report.optimal_below_targeted_night_pct
            );
            Ok(())
        }
        Command::DumpLp { common, epoch } => {
            let airport = AirportConfig::load(&common.config)?;
            let ctx = airport.screening_context(common.c_factor)?;
            let almanac = airport.load_almanac()?;
            let t = epoch as f64 * common.step_s;
            if t >= common.day_s {
                return Err(Error::Config(format!(
                    "epoch {epoch} is past the configured day ({} epochs)",
                    (common.day_s / common.step_s).round()
                )));
            }
            let views = gbas_core::constellation::visible_satellites(
                &almanac,
                &airport.site(),
                t,
                airport.site.mask_deg.to_radians(),
            )?;
            let data = gbas_core::screening::find_unsafe(&ctx, (t / 3600.0) % 24.0, &views)?;
            let anchor = data.combo_group[airport.reference_combo_index()?];
            let p = vec![ctx.p_k_nominal; data.views.len()];
            let lp = build_optimal_lp(&ctx, &data, anchor, &p)?;
            print!("{}", lp.dump_text());
            println!(
                "epoch {epoch}: {} satellites, {} unsafe (subset, combo) pairs",
                data.views.len(),
                data.verdicts.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
