//! Day-long simulation driver: visibility, screening, inflation, and
//! integrity verification at a fixed cadence, plus the cross-algorithm
//! comparison used for availability studies.

use std::time::Instant;

use crate::config::AirportConfig;
use crate::constellation::{visible_satellites, AlmanacEntry};
use crate::error_models::val_of;
use crate::inflation::{
    all_in_view_vpl_at, nominal_broadcast, optimal_sigma_prgnd_inflation, sigma_vig_inflation,
    targeted_inflation, InflationConfig, InflationResult,
};
use crate::screening::{find_unsafe, EpochData, ScreeningContext};
use crate::{Error, Result};

/// Geometry-screening algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    SigmaVig,
    Targeted,
    Optimal,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::SigmaVig, Algorithm::Targeted, Algorithm::Optimal];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::SigmaVig => "sigma-vig",
            Algorithm::Targeted => "targeted",
            Algorithm::Optimal => "optimal",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma-vig" | "sigma_vig" | "vig" => Ok(Algorithm::SigmaVig),
            "targeted" => Ok(Algorithm::Targeted),
            "optimal" => Ok(Algorithm::Optimal),
            other => Err(Error::Config(format!(
                "unknown algorithm '{other}' (expected sigma-vig, targeted, or optimal)"
            ))),
        }
    }
}

/// One simulation request: an airport, an algorithm, and the cadence.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub airport: AirportConfig,
    pub algorithm: Algorithm,
    pub c_factor: f64,
    pub epoch_step_s: f64,
    pub day_length_s: f64,
}

impl RunConfig {
    pub fn new(airport: AirportConfig, algorithm: Algorithm, c_factor: f64) -> Self {
        Self {
            airport,
            algorithm,
            c_factor,
            epoch_step_s: 60.0,
            day_length_s: 86_400.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epoch_step_s > 0.0) {
            return Err(Error::Config(format!(
                "epoch step {} must be positive",
                self.epoch_step_s
            )));
        }
        let ratio = self.day_length_s / self.epoch_step_s;
        if !(self.day_length_s > 0.0) || (ratio - ratio.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "day length {} is not a multiple of the epoch step {}",
                self.day_length_s, self.epoch_step_s
            )));
        }
        Ok(())
    }

    pub fn epoch_count(&self) -> usize {
        (self.day_length_s / self.epoch_step_s).round() as usize
    }
}

/// Everything recorded about one epoch of one algorithm run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochResult {
    pub epoch_s: f64,
    pub visible_prns: Vec<u32>,
    /// All-in-view VPL at the reference combo under nominal broadcast.
    pub nominal_vpl_m: f64,
    /// All-in-view VPL at the reference combo under inflated broadcast.
    pub inflated_vpl_m: f64,
    /// Inflated VPL < VAL at the reference combo.
    pub available: bool,
    pub unsafe_count: usize,
    pub lp_count: usize,
    pub adjust_iterations: usize,
    pub timing_ms: f64,
}

/// Availability percentage: 100 × available/total, rounded to 2 decimals.
pub fn availability(results: &[EpochResult]) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no epoch results".into()));
    }
    let available = results.iter().filter(|r| r.available).count();
    let pct = 100.0 * available as f64 / results.len() as f64;
    Ok((pct * 100.0).round() / 100.0)
}

struct EpochSetup {
    ctx: ScreeningContext<f64>,
    inflation: InflationConfig<f64>,
    almanac: Vec<AlmanacEntry<f64>>,
    reference_combo: usize,
    reference_val: f64,
}

fn prepare(airport: &AirportConfig, c_factor: f64) -> Result<EpochSetup> {
    let ctx = airport.screening_context(c_factor)?;
    let inflation = airport.inflation_config()?;
    let almanac = airport.load_almanac()?;
    let reference_combo = airport.reference_combo_index()?;
    let reference_val = val_of(&ctx.combos[reference_combo], &ctx.limits);
    Ok(EpochSetup {
        ctx,
        inflation,
        almanac,
        reference_combo,
        reference_val,
    })
}

fn epoch_data(setup: &EpochSetup, airport: &AirportConfig, t: f64) -> Result<EpochData<f64>> {
    let views = visible_satellites(
        &setup.almanac,
        &airport.site(),
        t,
        airport.site.mask_deg.to_radians(),
    )?;
    if views.len() < 4 {
        return Err(Error::Config(format!(
            "epoch {t} s: only {} satellites visible; check the almanac",
            views.len()
        )));
    }
    let hour_ut = (t / 3600.0) % 24.0;
    find_unsafe(&setup.ctx, hour_ut, &views)
}

fn run_algorithm(
    setup: &EpochSetup,
    data: &EpochData<f64>,
    algorithm: Algorithm,
) -> Result<InflationResult<f64>> {
    match algorithm {
        Algorithm::SigmaVig => sigma_vig_inflation(&setup.ctx, data, &setup.inflation),
        Algorithm::Targeted => targeted_inflation(&setup.ctx, data, &setup.inflation),
        Algorithm::Optimal => optimal_sigma_prgnd_inflation(&setup.ctx, data, &setup.inflation),
    }
}

fn record_epoch(
    setup: &EpochSetup,
    data: &EpochData<f64>,
    result: &InflationResult<f64>,
    epoch_s: f64,
    timing_ms: f64,
) -> Result<EpochResult> {
    if !result.screened {
        return Err(Error::IntegrityVerification {
            epoch_s: epoch_s.round() as u32,
            margin: result.worst_margin_m,
        });
    }
    let nominal = nominal_broadcast(&setup.ctx, data);
    let nominal_vpl_m = all_in_view_vpl_at(&setup.ctx, data, &nominal, setup.reference_combo)?;
    let inflated_vpl_m = result.all_in_view_vpl_by_combo[setup.reference_combo];
    Ok(EpochResult {
        epoch_s,
        visible_prns: data.views.iter().map(|v| v.prn).collect(),
        nominal_vpl_m,
        inflated_vpl_m,
        available: inflated_vpl_m < setup.reference_val,
        unsafe_count: data.verdicts.len(),
        lp_count: result.lp_count,
        adjust_iterations: result.adjust_iterations,
        timing_ms,
    })
}

/// Runs one algorithm over the full day. Integrity verification failure
/// aborts with the epoch identified; it indicates a bug, not a data
/// condition.
pub fn run_day(config: &RunConfig) -> Result<Vec<EpochResult>> {
    config.validate()?;
    let setup = prepare(&config.airport, config.c_factor)?;
    let mut results = Vec::with_capacity(config.epoch_count());
    for index in 0..config.epoch_count() {
        let t = index as f64 * config.epoch_step_s;
        let data = epoch_data(&setup, &config.airport, t)?;
        let started = Instant::now();
        let inflated = run_algorithm(&setup, &data, config.algorithm)?;
        let timing_ms = started.elapsed().as_secs_f64() * 1e3;
        results.push(record_epoch(&setup, &data, &inflated, t, timing_ms)?);
    }
    Ok(results)
}

/// Per-algorithm aggregate of a comparison run.
#[derive(Debug, Clone)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub results: Vec<EpochResult>,
    pub availability_pct: f64,
    /// Mean of (inflated − nominal) all-in-view VPL at the reference
    /// combo, m.
    pub mean_vpl_inflation_m: f64,
    pub total_lp_count: usize,
    pub wall_time_ms: f64,
}

/// All three algorithms on identical epoch inputs.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub airport_name: String,
    pub c_factor: f64,
    /// Ordered as [`Algorithm::ALL`]: sigma-vig, targeted, optimal.
    pub summaries: Vec<AlgorithmSummary>,
    pub nominal_vpl_m: Vec<f64>,
    /// Epoch flags using the airport's configured night windows.
    pub night_epoch: Vec<bool>,
    /// Share of night epochs where optimal VPL is strictly below the
    /// other method's, in percent of night epochs (0 when no night
    /// windows are configured).
    pub optimal_below_sigma_vig_night_pct: f64,
    pub optimal_below_targeted_night_pct: f64,
}

/// Runs all three algorithms per epoch on one shared screening pass, so
/// every method sees byte-identical inputs.
pub fn compare_algorithms(
    airport: &AirportConfig,
    c_factor: f64,
    epoch_step_s: f64,
    day_length_s: f64,
) -> Result<ComparisonReport> {
    let probe = RunConfig {
        airport: airport.clone(),
        algorithm: Algorithm::Optimal,
        c_factor,
        epoch_step_s,
        day_length_s,
    };
    probe.validate()?;
    let setup = prepare(airport, c_factor)?;

    let mut per_algorithm: Vec<Vec<EpochResult>> = vec![Vec::new(), Vec::new(), Vec::new()];
    let mut wall: [f64; 3] = [0.0; 3];
    let mut nominal_vpl_m = Vec::with_capacity(probe.epoch_count());
    let mut night_epoch = Vec::with_capacity(probe.epoch_count());

    for index in 0..probe.epoch_count() {
        let t = index as f64 * epoch_step_s;
        let data = epoch_data(&setup, airport, t)?;
        let hour_ut = (t / 3600.0) % 24.0;
        night_epoch.push(setup.ctx.threat.is_night(hour_ut));
        let nominal = nominal_broadcast(&setup.ctx, &data);
        nominal_vpl_m.push(all_in_view_vpl_at(
            &setup.ctx,
            &data,
            &nominal,
            setup.reference_combo,
        )?);

        for (slot, algorithm) in Algorithm::ALL.iter().enumerate() {
            let started = Instant::now();
            let inflated = run_algorithm(&setup, &data, *algorithm)?;
            let timing_ms = started.elapsed().as_secs_f64() * 1e3;
            wall[slot] += timing_ms;
            per_algorithm[slot].push(record_epoch(&setup, &data, &inflated, t, timing_ms)?);
        }
    }

    let night_total = night_epoch.iter().filter(|&&n| n).count();
    let night_share = |better: &dyn Fn(usize) -> bool| -> f64 {
        if night_total == 0 {
            return 0.0;
        }
        let count = (0..night_epoch.len())
            .filter(|&i| night_epoch[i] && better(i))
            .count();
        (10000.0 * count as f64 / night_total as f64).round() / 100.0
    };
    let optimal = &per_algorithm[2];
    let sigma_vig = &per_algorithm[0];
    let targeted = &per_algorithm[1];
    let optimal_below_sigma_vig_night_pct =
        night_share(&|i| optimal[i].inflated_vpl_m < sigma_vig[i].inflated_vpl_m);
    let optimal_below_targeted_night_pct =
        night_share(&|i| optimal[i].inflated_vpl_m < targeted[i].inflated_vpl_m);

    let mut summaries = Vec::with_capacity(3);
    for (slot, algorithm) in Algorithm::ALL.iter().enumerate() {
        let results = std::mem::take(&mut per_algorithm[slot]);
        let availability_pct = availability(&results)?;
        let mean_vpl_inflation_m = results
            .iter()
            .map(|r| r.inflated_vpl_m - r.nominal_vpl_m)
            .sum::<f64>()
            / results.len() as f64;
        let total_lp_count = results.iter().map(|r| r.lp_count).sum();
        summaries.push(AlgorithmSummary {
            algorithm: *algorithm,
            results,
            availability_pct,
            mean_vpl_inflation_m,
            total_lp_count,
            wall_time_ms: wall[slot],
        });
    }

    Ok(ComparisonReport {
        airport_name: airport.name.clone(),
        c_factor,
        summaries,
        nominal_vpl_m,
        night_epoch,
        optimal_below_sigma_vig_night_pct,
        optimal_below_targeted_night_pct,
    })
}
