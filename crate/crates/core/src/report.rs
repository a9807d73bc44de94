//! Deterministic report writers: `epochs.csv` per run, `summary.json`
//! aggregates, and the `vpl_series.csv` comparison series. Timing values
//! are segregated (last CSV column, dedicated JSON subtree) so
//! reproducibility checks can exclude them cleanly.

use std::io::Write;
use std::path::Path;

use serde_json::json;

use crate::simulator::{ComparisonReport, EpochResult};
use crate::Result;

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(std::fs::File::create(path)?)
}

fn prn_list(prns: &[u32]) -> String {
    prns.iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Epoch-by-epoch CSV. Timing is the final column; everything before it
/// is bit-deterministic under a fixed config.
pub fn write_epochs_csv(path: &Path, results: &[EpochResult]) -> Result<()> {
    let mut f = create(path)?;
    writeln!(
        f,
        "epoch_s,visible_prns,nominal_vpl_m,inflated_vpl_m,available,unsafe_count,lp_count,adjust_iterations,timing_ms"
    )?;
    for r in results {
        writeln!(
            f,
            "{},{},{:.6},{:.6},{},{},{},{},{:.3}",
            r.epoch_s,
            prn_list(&r.visible_prns),
            r.nominal_vpl_m,
            r.inflated_vpl_m,
            r.available,
            r.unsafe_count,
            r.lp_count,
            r.adjust_iterations,
            r.timing_ms
        )?;
    }
    Ok(())
}

fn run_stats(results: &[EpochResult]) -> (f64, usize, usize, f64) {
    let mean_inflation = results
        .iter()
        .map(|r| r.inflated_vpl_m - r.nominal_vpl_m)
        .sum::<f64>()
        / results.len().max(1) as f64;
    let total_lp: usize = results.iter().map(|r| r.lp_count).sum();
    let unsafe_epochs = results.iter().filter(|r| r.unsafe_count > 0).count();
    let wall_ms: f64 = results.iter().map(|r| r.timing_ms).sum();
    (mean_inflation, total_lp, unsafe_epochs, wall_ms)
}

/// Summary JSON for a single-algorithm run. All timing lives under the
/// `timing` key.
pub fn write_run_summary_json(
    path: &Path,
    airport: &str,
    algorithm: &str,
    c_factor: f64,
    results: &[EpochResult],
) -> Result<()> {
    let availability = crate::simulator::availability(results)?;
    let (mean_inflation, total_lp, unsafe_epochs, wall_ms) = run_stats(results);
    let doc = json!({
        "airport": airport,
        "algorithm": algorithm,
        "c_factor": c_factor,
        "epochs": results.len(),
        "availability_pct": availability,
        "mean_vpl_inflation_m": mean_inflation,
        "total_lp_count": total_lp,
        "epochs_with_unsafe_subsets": unsafe_epochs,
        "timing": { "wall_ms": wall_ms },
    });
    let mut f = create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Summary JSON for a three-algorithm comparison.
pub fn write_compare_summary_json(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut algorithms = serde_json::Map::new();
    let mut timing = serde_json::Map::new();
    for summary in &report.summaries {
        let (mean_inflation, total_lp, unsafe_epochs, _) = run_stats(&summary.results);
        algorithms.insert(
            summary.algorithm.name().to_string(),
            json!({
                "availability_pct": summary.availability_pct,
                "mean_vpl_inflation_m": mean_inflation,
                "total_lp_count": total_lp,
                "epochs_with_unsafe_subsets": unsafe_epochs,
            }),
        );
        timing.insert(
            summary.algorithm.name().to_string(),
            json!({ "wall_ms": summary.wall_time_ms }),
        );
    }
    let night_epochs = report.night_epoch.iter().filter(|&&n| n).count();
    let doc = json!({
        "airport": report.airport_name,
        "c_factor": report.c_factor,
        "epochs": report.nominal_vpl_m.len(),
        "night_epochs": night_epochs,
        "algorithms": algorithms,
        "optimal_below_sigma_vig_night_pct": report.optimal_below_sigma_vig_night_pct,
        "optimal_below_targeted_night_pct": report.optimal_below_targeted_night_pct,
        "timing": timing,
    });
    let mut f = create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

/// Per-epoch VPL series across the three algorithms (the comparison-plot
/// data).
pub fn write_vpl_series_csv(path: &Path, report: &ComparisonReport) -> Result<()> {
    let mut f = create(path)?;
    writeln!(
        f,
        "epoch_s,night,nominal_vpl_m,sigma_vig_vpl_m,targeted_vpl_m,optimal_vpl_m"
    )?;
    let sigma_vig = &report.summaries[0].results;
    let targeted = &report.summaries[1].results;
    let optimal = &report.summaries[2].results;
    for i in 0..report.nominal_vpl_m.len() {
        writeln!(
            f,
            "{},{},{:.6},{:.6},{:.6},{:.6}",
            sigma_vig[i].epoch_s,
            report.night_epoch[i],
            report.nominal_vpl_m[i],
            sigma_vig[i].inflated_vpl_m,
            targeted[i].inflated_vpl_m,
            optimal[i].inflated_vpl_m
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_results() -> Vec<EpochResult> {
        (0..3)
            .map(|i| EpochResult {
                epoch_s: i as f64 * 60.0,
                visible_prns: vec![2, 5, 9, 14 + i as u32],
                nominal_vpl_m: 2.0 + i as f64 * 0.25,
                inflated_vpl_m: 2.5 + i as f64 * 0.25,
                available: i != 1,
                unsafe_count: i,
                lp_count: 1,
                adjust_iterations: 0,
                timing_ms: 1.25 * (i + 1) as f64,
            })
            .collect()
    }

    #[test]
    fn epochs_csv_shape() {
        let dir = std::env::temp_dir().join("gbas-report-tests");
        let path = dir.join("epochs.csv");
        write_epochs_csv(&path, &sample_results()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("epoch_s,visible_prns,"));
        assert!(lines[0].ends_with("timing_ms"));
        assert!(lines[1].starts_with("0,2;5;9;14,2.000000,2.500000,true,0,1,0,"));
        assert!(lines[2].contains(",false,"));
    }

    #[test]
    fn run_summary_round_trips() {
        let dir = std::env::temp_dir().join("gbas-report-tests");
        let path = dir.join("summary.json");
        write_run_summary_json(&path, "Testport", "optimal", 1.0, &sample_results()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(doc["airport"], "Testport");
        assert_eq!(doc["epochs"], 3);
        assert_eq!(doc["availability_pct"], 66.67);
        assert!(doc["timing"]["wall_ms"].as_f64().unwrap() > 0.0);
        assert!((doc["mean_vpl_inflation_m"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_is_deterministic_modulo_timing() {
        let dir = std::env::temp_dir().join("gbas-report-tests");
        let a = dir.join("a.csv");
        let b = dir.join("b.csv");
        let mut results = sample_results();
        write_epochs_csv(&a, &results).unwrap();
        for r in &mut results {
            r.timing_ms *= 3.0;
        }
        write_epochs_csv(&b, &results).unwrap();
        let strip = |p: &Path| {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| l.rsplit_once(',').unwrap().0.to_string())
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }
}
