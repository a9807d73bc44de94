//! Per-satellite error budgets, the ionospheric threat model, and the
//! VAL/TEL operational limit tables.
//!
//! The variance an aircraft applies to satellite j is assembled from four
//! components:
//!
//! ```text
//! σ_j² = σ_pr_gnd,j² + σ_tropo,j² + σ_pr_air,j² + σ_iono,j²
//! σ_iono,j = F_j · σ_vig · (x_aircraft + 2·τ·v_aircraft)
//! ```
//!
//! σ_pr_gnd is the broadcast ground-accuracy sigma (the inflation lever),
//! σ_vig the broadcast gradient sigma in mm/km, F_j the thin-shell
//! obliquity factor, τ the carrier-smoothing time constant, and v the
//! approach speed. Nominal values for the elevation-dependent terms come
//! from configurable curves of the form `a₀ + a₁·exp(−el/el₀)` plus a
//! refractivity-based tropospheric model.
//!
//! The threat side is a worst-case slant gradient: a flat nighttime bound
//! inside configured UT windows and an elevation-interpolated daytime
//! bound otherwise, scaled by nothing else. VAL and TEL are
//! piecewise-linear tables in the approach separation Δx = x_aircraft −
//! x_DH, clamped beyond their end anchors.

use serde::{Deserialize, Serialize};

use crate::constellation::SatelliteView;
use crate::{Error, Real, Result};

/// Mean Earth radius used by the thin-shell obliquity model, m.
pub const SHELL_EARTH_RADIUS: f64 = 6378.0e3;
/// Default ionospheric thin-shell height, m.
pub const SHELL_HEIGHT: f64 = 350.0e3;

/// Per-satellite error budget; all sigmas in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBudget<R> {
    pub sigma_pr_gnd: R,
    pub sigma_tropo: R,
    pub sigma_pr_air: R,
    pub sigma_iono: R,
    /// Sum of the four squared components, m².
    pub sigma_total_sq: R,
    /// Thin-shell obliquity factor F_j (≥ 1).
    pub obliquity: R,
}

impl<R: Real> SigmaBudget<R> {
    /// Assembles the budget from its components.
    pub fn new(sigma_pr_gnd: R, sigma_tropo: R, sigma_pr_air: R, sigma_iono: R, obliquity: R) -> Self {
        let total = sigma_pr_gnd * sigma_pr_gnd
            + sigma_tropo * sigma_tropo
            + sigma_pr_air * sigma_pr_air
            + sigma_iono * sigma_iono;
        Self {
            sigma_pr_gnd,
            sigma_tropo,
            sigma_pr_air,
            sigma_iono,
            sigma_total_sq: total,
            obliquity,
        }
    }

    /// The squared non-ground portion: σ_tropo² + σ_pr_air² + σ_iono².
    pub fn rest_sq(&self) -> R {
        self.sigma_tropo * self.sigma_tropo
            + self.sigma_pr_air * self.sigma_pr_air
            + self.sigma_iono * self.sigma_iono
    }
}

/// Aircraft smoothing-filter and approach parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftModel<R> {
    /// Carrier-smoothing time constant τ, s.
    pub tau_s: R,
    /// Horizontal approach speed, m/s.
    pub v_aircraft_mps: R,
}

impl<R: Real> AircraftModel<R> {
    /// The filter memory distance 2·τ·v, km.
    pub fn memory_distance_km(&self) -> R {
        R::of(2.0) * self.tau_s * self.v_aircraft_mps / R::of(1000.0)
    }
}

/// Ionospheric gradient threat model.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreatModel<R> {
    /// Worst-case nighttime slant gradient, mm/km.
    pub g_max_night_mmkm: R,
    /// Daytime gradient bound vs elevation: anchors (elevation deg, mm/km),
    /// linearly interpolated, clamped at the ends.
    pub daytime_anchors: Vec<(R, R)>,
    /// Nighttime UT windows [start_h, end_h); empty means daytime model
    /// around the clock.
    pub night_windows_ut: Vec<(R, R)>,
    /// Ratio of maximum negative to maximum positive induced error.
    pub c_factor: R,
    /// Broadcast σ_vig floor, mm/km.
    pub sigma_vig_min_mmkm: R,
    /// Optional cap on the per-satellite worst error ε, m.
    pub epsilon_cap_m: Option<R>,
    /// Multiply the worst error by the obliquity factor (experimentation
    /// flag; observed threat gradients are slant values, so default off).
    pub scale_epsilon_by_obliquity: bool,
}

impl<R: Real> ThreatModel<R> {
    /// True when `hour_ut` falls inside a configured night window.
    pub fn is_night(&self, hour_ut: R) -> bool {
        self.night_windows_ut
            .iter()
            .any(|&(start, end)| hour_ut >= start && hour_ut < end)
    }
}

/// VAL/TEL anchor tables in the approach separation Δx, km.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitTable<R> {
    val_anchors: Vec<(R, R)>,
    tel_anchors: Vec<(R, R)>,
}

impl<R: Real> LimitTable<R> {
    /// Validates and stores the anchor lists (each sorted by Δx, values
    /// positive and nondecreasing, TEL ≥ VAL at every VAL anchor).
    pub fn new(val_anchors: Vec<(R, R)>, tel_anchors: Vec<(R, R)>) -> Result<Self> {
        validate_anchors(&val_anchors, "val")?;
        validate_anchors(&tel_anchors, "tel")?;
        let table = Self {
            val_anchors,
            tel_anchors,
        };
        for &(dx, val) in &table.val_anchors {
            let tel = interpolate(&table.tel_anchors, dx);
            if tel < val {
                return Err(Error::Config(format!(
                    "limit table: tel({dx}) = {tel} < val({dx}) = {val}"
                )));
            }
        }
        Ok(table)
    }

    pub fn val_at_dx(&self, dx_km: R) -> R {
        interpolate(&self.val_anchors, dx_km)
    }

    pub fn tel_at_dx(&self, dx_km: R) -> R {
        interpolate(&self.tel_anchors, dx_km)
    }
}

fn validate_anchors<R: Real>(anchors: &[(R, R)], which: &str) -> Result<()> {
    if anchors.is_empty() {
        return Err(Error::Config(format!("limit table: empty {which} anchors")));
    }
    for pair in anchors.windows(2) {
        if pair[1].0 <= pair[0].0 {
            return Err(Error::Config(format!(
                "limit table: {which} anchors must have strictly increasing dx"
            )));
        }
        if pair[1].1 < pair[0].1 {
            return Err(Error::Config(format!(
                "limit table: {which} anchors must be nondecreasing"
            )));
        }
    }
    if anchors.iter().any(|&(_, v)| !(v > R::zero())) {
        return Err(Error::Config(format!("limit table: {which} values must be positive")));
    }
    Ok(())
}

/// Piecewise-linear interpolation over (x, y) anchors, clamped at the ends.
fn interpolate<R: Real>(anchors: &[(R, R)], x: R) -> R {
    let first = anchors[0];
    if x <= first.0 {
        return first.1;
    }
    let last = anchors[anchors.len() - 1];
    if x >= last.0 {
        return last.1;
    }
    for pair in anchors.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        if x <= x1 {
            let t = (x - x0) / (x1 - x0);
            return y0 + t * (y1 - y0);
        }
    }
    last.1
}

/// One (x_DH, x_aircraft) grid combination, km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningCombo<R> {
    pub x_dh_km: R,
    pub x_aircraft_km: R,
}

impl<R: Real> ScreeningCombo<R> {
    /// Approach separation Δx = x_aircraft − x_DH, km.
    pub fn dx_km(&self) -> R {
        self.x_aircraft_km - self.x_dh_km
    }
}

/// VAL at a combo's separation.
pub fn val_of<R: Real>(combo: &ScreeningCombo<R>, table: &LimitTable<R>) -> R {
    table.val_at_dx(combo.dx_km())
}

/// TEL at a combo's separation.
pub fn tel_of<R: Real>(combo: &ScreeningCombo<R>, table: &LimitTable<R>) -> R {
    table.tel_at_dx(combo.dx_km())
}

/// Elevation-parameterized sigma curve: a₀ + a₁·exp(−el/el₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpCurve<R> {
    pub a0: R,
    pub a1: R,
    pub el0_deg: R,
}

impl<R: Real> ExpCurve<R> {
    pub fn eval(&self, elevation_rad: R) -> R {
        let el_deg = elevation_rad.to_degrees();
        self.a0 + self.a1 * (-el_deg / self.el0_deg).exp()
    }
}

/// Tropospheric residual-error model driven by refractivity uncertainty:
/// σ_N·h₀·1e-6 / sqrt(0.002 + sin²el) · (1 − exp(−Δh/h₀)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TropoModel<R> {
    /// Refractivity uncertainty, dimensionless parts.
    pub sigma_n: R,
    /// Tropospheric scale height, m.
    pub scale_height_m: R,
    /// Aircraft height above the ground station, m.
    pub delta_h_m: R,
}

impl<R: Real> TropoModel<R> {
    pub fn eval(&self, elevation_rad: R) -> R {
        let sin_el = elevation_rad.sin();
        let mapping = (R::of(0.002) + sin_el * sin_el).sqrt();
        let depletion = R::one() - (-self.delta_h_m / self.scale_height_m).exp();
        self.sigma_n * self.scale_height_m * R::of(1e-6) / mapping * depletion
    }
}

/// Nominal (uninflated) error-model curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NominalCurves<R> {
    pub pr_gnd: ExpCurve<R>,
    pub pr_air: ExpCurve<R>,
    pub tropo: TropoModel<R>,
    /// Thin-shell height for the obliquity factor, m.
    pub shell_height_m: R,
}

impl<R: Real> NominalCurves<R> {
    /// Nominal ground sigma at an elevation, m.
    pub fn sigma_pr_gnd(&self, elevation_rad: R) -> Result<R> {
        check_elevation(elevation_rad)?;
        Ok(self.pr_gnd.eval(elevation_rad))
    }
}

fn check_elevation<R: Real>(elevation_rad: R) -> Result<()> {
    let half_pi = R::of(std::f64::consts::FRAC_PI_2);
    if elevation_rad <= R::zero() || elevation_rad > half_pi {
        return Err(Error::Config(format!(
            "nominal curves are defined for elevations in (0, pi/2], got {} rad",
            elevation_rad.as_f64()
        )));
    }
    Ok(())
}

/// Thin-shell obliquity factor F = [1 − (Re·cos el/(Re+h))²]^(−1/2).
pub fn obliquity<R: Real>(elevation_rad: R, shell_height_m: R, earth_radius_m: R) -> R {
    let ratio = earth_radius_m * elevation_rad.cos() / (earth_radius_m + shell_height_m);
    (R::one() - ratio * ratio).sqrt().recip()
}

/// Assembles the per-satellite error budget for one grid combination.
///
/// `sigma_pr_gnd_m` is the broadcast ground sigma to use (nominal or
/// inflated); `sigma_vig_mmkm` likewise. All other components come from the
/// nominal curves at the view's elevation.
pub fn sigma_budget_with<R: Real>(
    view: &SatelliteView<R>,
    x_aircraft_km: R,
    sigma_pr_gnd_m: R,
    sigma_vig_mmkm: R,
    aircraft: &AircraftModel<R>,
    curves: &NominalCurves<R>,
) -> Result<SigmaBudget<R>> {
    check_elevation(view.elevation)?;
    let f = obliquity(view.elevation, curves.shell_height_m, R::of(SHELL_EARTH_RADIUS));
    let distance_km = x_aircraft_km + aircraft.memory_distance_km();
    let sigma_iono = f * sigma_vig_mmkm * R::of(1e-3) * distance_km;
    Ok(SigmaBudget::new(
        sigma_pr_gnd_m,
        curves.tropo.eval(view.elevation),
        curves.pr_air.eval(view.elevation),
        sigma_iono,
        f,
    ))
}

/// Nominal budget (uninflated σ_pr_gnd from the curves, σ_vig as given).
pub fn sigma_budget<R: Real>(
    view: &SatelliteView<R>,
    combo: &ScreeningCombo<R>,
    sigma_vig_mmkm: R,
    aircraft: &AircraftModel<R>,
    curves: &NominalCurves<R>,
) -> Result<SigmaBudget<R>> {
    let gnd = curves.sigma_pr_gnd(view.elevation)?;
    sigma_budget_with(view, combo.x_aircraft_km, gnd, sigma_vig_mmkm, aircraft, curves)
}

/// Threat gradient active at a UT hour and satellite elevation, mm/km.
pub fn active_gradient<R: Real>(hour_ut: R, threat: &ThreatModel<R>, elevation_rad: R) -> R {
    if threat.is_night(hour_ut) {
        threat.g_max_night_mmkm
    } else {
        interpolate(&threat.daytime_anchors, elevation_rad.to_degrees())
    }
}

/// Builds the full (x_DH, x_aircraft) screening grid: x_DH from 0 to
/// `x_dh_max_km` and x_aircraft from x_DH to x_DH + `extra_km`, both in
/// `step_km` increments.
pub fn grid_combos<R: Real>(x_dh_max_km: R, extra_km: R, step_km: R) -> Vec<ScreeningCombo<R>> {
    assert!(step_km > R::zero(), "grid step must be positive");
    let n_dh = (x_dh_max_km / step_km).round().as_f64() as usize + 1;
    let n_offset = (extra_km / step_km).round().as_f64() as usize + 1;
    let mut combos = Vec::with_capacity(n_dh * n_offset);
    for i in 0..n_dh {
        for j in 0..n_offset {
            let x_dh = step_km * R::of(i as f64);
            let x_air = step_km * R::of((i + j) as f64);
            combos.push(ScreeningCombo {
                x_dh_km: x_dh,
                x_aircraft_km: x_air,
            });
        }
    }
    combos
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aircraft() -> AircraftModel<f64> {
        AircraftModel {
            tau_s: 100.0,
            v_aircraft_mps: 70.0,
        }
    }

    fn curves() -> NominalCurves<f64> {
        NominalCurves {
            pr_gnd: ExpCurve {
                a0: 0.08,
                a1: 0.49,
                el0_deg: 15.5,
            },
            pr_air: ExpCurve {
                a0: 0.13,
                a1: 0.55,
                el0_deg: 10.0,
            },
            tropo: TropoModel {
                sigma_n: 30.0,
                scale_height_m: 12900.0,
                delta_h_m: 1000.0,
            },
            shell_height_m: SHELL_HEIGHT,
        }
    }

    fn default_table() -> LimitTable<f64> {
        LimitTable::new(
            vec![(0.0, 10.0), (3.0, 25.0)],
            vec![(0.0, 28.8), (3.0, 78.0)],
        )
        .unwrap()
    }

    #[test]
    fn obliquity_is_one_at_zenith() {
        let f = obliquity(std::f64::consts::FRAC_PI_2, SHELL_HEIGHT, SHELL_EARTH_RADIUS);
        assert!((f - 1.0).abs() < 1e-15);
    }

    /// Frozen closed-form horizon limit: [1 − (6378/6728)²]^(−1/2).
    #[test]
    fn obliquity_horizon_limit() {
        let expect = (1.0 - (6378.0f64 / 6728.0).powi(2)).powf(-0.5); // 3.1413452...
        let f = obliquity(1e-12, SHELL_HEIGHT, SHELL_EARTH_RADIUS);
        assert!((f - expect).abs() < 1e-9, "{f} vs {expect}");
        assert!((f - 3.141345).abs() < 1e-5);
    }

    #[test]
    fn obliquity_monotone_decreasing_in_elevation() {
        let mut prev = f64::INFINITY;
        for i in 1..=90 {
            let el = (i as f64).to_radians();
            let f = obliquity(el, SHELL_HEIGHT, SHELL_EARTH_RADIUS);
            assert!(f >= 1.0 - 1e-15);
            assert!(f < prev, "obliquity not decreasing at {i} deg");
            prev = f;
        }
    }

    /// Frozen Eq.-level arithmetic: 14 mm/km over (6 + 14) km = 0.28 m.
    #[test]
    fn sigma_iono_arithmetic() {
        let view = SatelliteView {
            prn: 1,
            azimuth: 0.0,
            elevation: std::f64::consts::FRAC_PI_2,
        };
        let combo = ScreeningCombo {
            x_dh_km: 0.0,
            x_aircraft_km: 6.0,
        };
        let budget = sigma_budget(&view, &combo, 14.0, &aircraft(), &curves()).unwrap();
        assert!((budget.obliquity - 1.0).abs() < 1e-12);
        assert!((budget.sigma_iono - 0.28).abs() < 1e-12, "{}", budget.sigma_iono);

        let mid_lat = sigma_budget(&view, &combo, 6.4, &aircraft(), &curves()).unwrap();
        assert!((mid_lat.sigma_iono - 0.28 * 6.4 / 14.0).abs() < 1e-12);
    }

    #[test]
    fn budget_total_is_sum_of_squares() {
        let view = SatelliteView {
            prn: 3,
            azimuth: 1.0,
            elevation: 0.4,
        };
        let combo = ScreeningCombo {
            x_dh_km: 2.0,
            x_aircraft_km: 5.0,
        };
        let b = sigma_budget(&view, &combo, 14.0, &aircraft(), &curves()).unwrap();
        let expect = b.sigma_pr_gnd.powi(2) + b.sigma_tropo.powi(2) + b.sigma_pr_air.powi(2) + b.sigma_iono.powi(2);
        assert!((b.sigma_total_sq - expect).abs() < 1e-12);
        assert!((b.rest_sq() - (expect - b.sigma_pr_gnd.powi(2))).abs() < 1e-12);
        assert!(b.obliquity >= 1.0);
    }

    #[test]
    fn budget_rejects_nonpositive_elevation() {
        let view = SatelliteView {
            prn: 3,
            azimuth: 1.0,
            elevation: -0.1,
        };
        let combo = ScreeningCombo {
            x_dh_km: 0.0,
            x_aircraft_km: 0.0,
        };
        assert!(matches!(
            sigma_budget(&view, &combo, 14.0, &aircraft(), &curves()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn val_tel_anchor_reproduction_and_interpolation() {
        let table = default_table();
        let combo = |x_air: f64| ScreeningCombo {
            x_dh_km: 2.0,
            x_aircraft_km: 2.0 + x_air,
        };
        assert_eq!(val_of(&combo(0.0), &table), 10.0);
        assert_eq!(val_of(&combo(3.0), &table), 25.0);
        assert!((val_of(&combo(1.5), &table) - 17.5).abs() < 1e-12);
        assert_eq!(tel_of(&combo(3.0), &table), 78.0);
        // Clamped beyond the last anchor.
        assert_eq!(val_of(&combo(7.0), &table), 25.0);
        assert_eq!(tel_of(&combo(7.0), &table), 78.0);
        for dx in [0.0, 0.7, 1.9, 2.4, 3.0, 5.5] {
            assert!(table.tel_at_dx(dx) >= table.val_at_dx(dx));
        }
    }

    #[test]
    fn limit_table_rejects_crossing_anchors() {
        let res = LimitTable::new(vec![(0.0, 30.0), (3.0, 40.0)], vec![(0.0, 20.0), (3.0, 78.0)]);
        assert!(matches!(res, Err(Error::Config(_))));
        let res = LimitTable::new(vec![(0.0, 10.0), (0.0, 25.0)], vec![(0.0, 28.8)]);
        assert!(matches!(res, Err(Error::Config(_))));
    }

    fn threat_galeao() -> ThreatModel<f64> {
        ThreatModel {
            g_max_night_mmkm: 850.7,
            daytime_anchors: vec![(0.0, 375.0), (15.0, 375.0), (65.0, 425.0), (90.0, 425.0)],
            night_windows_ut: vec![(0.0, 9.0), (21.0, 24.0)],
            c_factor: 1.0,
            sigma_vig_min_mmkm: 14.0,
            epsilon_cap_m: None,
            scale_epsilon_by_obliquity: false,
        }
    }

    #[test]
    fn active_gradient_day_night_split() {
        let threat = threat_galeao();
        let el = 0.5;
        assert_eq!(active_gradient(2.0, &threat, el), 850.7);
        assert_eq!(active_gradient(22.5, &threat, el), 850.7);
        // Daytime: interpolated from the anchors.
        let day = active_gradient(12.0, &threat, 40f64.to_radians());
        assert!((day - 400.0).abs() < 1e-9, "{day}");
        // Boundary semantics: [start, end).
        assert_eq!(active_gradient(9.0, &threat, el), active_gradient(12.0, &threat, el));

        let memphis = ThreatModel {
            night_windows_ut: vec![],
            ..threat
        };
        for hour in [0.0, 6.0, 12.0, 23.9] {
            assert_eq!(
                active_gradient(hour, &memphis, el),
                active_gradient(12.0, &memphis, el)
            );
        }
    }

    #[test]
    fn grid_has_56_combos_with_defaults() {
        let combos = grid_combos(6.0, 7.0, 1.0);
        assert_eq!(combos.len(), 56);
        for c in &combos {
            assert!(c.x_aircraft_km >= c.x_dh_km);
            assert!(c.dx_km() <= 7.0 + 1e-12);
        }
        let single = grid_combos(0.0, 0.0, 1.0);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].x_dh_km, 0.0);
        assert_eq!(single[0].x_aircraft_km, 0.0);
    }

    #[test]
    fn curves_evaluate_in_f32() {
        let c = ExpCurve::<f32> {
            a0: 0.08,
            a1: 0.49,
            el0_deg: 15.5,
        };
        let v = c.eval(0.5f32);
        assert!(v > 0.08 && v < 0.57);
        let f = obliquity(0.3f32, SHELL_HEIGHT as f32, SHELL_EARTH_RADIUS as f32);
        assert!(f > 1.0);
    }
}
