//! Airport configuration: a TOML schema covering the site, the threat
//! model, nominal error curves, operational limits, the screening grid,
//! and inflation tuning. The `c` factor is an experiment parameter and
//! arrives separately (CLI flag or [`crate::simulator::RunConfig`]).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constellation::{parse_almanac, AlmanacEntry, SiteLocation};
use crate::error_models::{
    grid_combos, ExpCurve, LimitTable, NominalCurves, ThreatModel, TropoModel, SHELL_HEIGHT,
};
use crate::geometry::IntegrityConstants;
use crate::inflation::InflationConfig;
use crate::screening::ScreeningContext;
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteSection {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub height_m: f64,
    pub mask_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    pub k_ffmd: f64,
    pub k_md_eph: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AircraftSection {
    pub tau_s: f64,
    pub v_mps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    pub a0: f64,
    pub a1: f64,
    pub el0_deg: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TropoSection {
    pub sigma_n: f64,
    pub scale_height_m: f64,
    pub delta_h_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NominalSection {
    pub pr_gnd: CurveSection,
    pub pr_air: CurveSection,
    pub tropo: TropoSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreatSection {
    /// Worst-case nighttime slant gradient, mm/km. Ignored when the night
    /// window list is empty (pure daytime model).
    pub g_max_night_mmkm: f64,
    /// Daytime gradient vs elevation anchors: (elevation deg, mm/km).
    pub daytime_anchors: Vec<(f64, f64)>,
    /// Night windows in UT hours, [start, end).
    pub night_windows_ut: Vec<(f64, f64)>,
    pub sigma_vig_min_mmkm: f64,
    #[serde(default)]
    pub epsilon_cap_m: Option<f64>,
    #[serde(default)]
    pub scale_epsilon_by_obliquity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsSection {
    /// (Δx km, VAL m) anchors.
    pub val_anchors: Vec<(f64, f64)>,
    /// (Δx km, TEL m) anchors.
    pub tel_anchors: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_dh_max_km: f64,
    pub extra_km: f64,
    pub step_km: f64,
    /// x_DH of the Δx = 0 combo used for the availability metric and as
    /// the LP anchor.
    pub reference_x_dh_km: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreeningSection {
    pub subset_depth: usize,
    pub p_k_nominal: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InflationSection {
    pub sigma_vig_step_mmkm: f64,
    pub sigma_vig_ceiling_mmkm: f64,
    pub p_k_max: f64,
}

/// One airport, as loaded from TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirportConfig {
    pub name: String,
    /// Almanac path, relative to the config file's directory.
    pub almanac: String,
    pub site: SiteSection,
    pub constants: ConstantsSection,
    pub aircraft: AircraftSection,
    pub nominal: NominalSection,
    pub threat: ThreatSection,
    pub limits: LimitsSection,
    pub grid: GridSection,
    pub screening: ScreeningSection,
    pub inflation: InflationSection,
    /// Directory of the config file; set by [`AirportConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl AirportConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut config: AirportConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(format!("{}: {msg}", self.name)));
        if self.name.is_empty() {
            return Err(Error::Config("airport name must not be empty".into()));
        }
        if !(-90.0..=90.0).contains(&self.site.latitude_deg) {
            return fail(format!("latitude {} out of range", self.site.latitude_deg));
        }
        if !(-180.0..=180.0).contains(&self.site.longitude_deg) {
            return fail(format!("longitude {} out of range", self.site.longitude_deg));
        }
        if !(0.0..90.0).contains(&self.site.mask_deg) {
            return fail(format!("mask {} out of range", self.site.mask_deg));
        }
        if self.constants.k_ffmd <= 0.0 || self.constants.k_md_eph <= 0.0 {
            return fail("K multipliers must be positive".into());
        }
        if self.aircraft.tau_s <= 0.0 || self.aircraft.v_mps <= 0.0 {
            return fail("aircraft smoothing constants must be positive".into());
        }
        if self.threat.sigma_vig_min_mmkm <= 0.0 {
            return fail("sigma_vig floor must be positive".into());
        }
        if self.threat.daytime_anchors.is_empty() {
            return fail("daytime gradient anchors must not be empty".into());
        }
        for &(start, end) in &self.threat.night_windows_ut {
            if !(0.0..=24.0).contains(&start) || !(0.0..=24.0).contains(&end) || start >= end {
                return fail(format!("bad night window [{start}, {end})"));
            }
        }
        if !self.threat.night_windows_ut.is_empty() && self.threat.g_max_night_mmkm <= 0.0 {
            return fail("night gradient must be positive when night windows exist".into());
        }
        if self.grid.step_km <= 0.0 || self.grid.x_dh_max_km < 0.0 || self.grid.extra_km < 0.0 {
            return fail("grid extents must be nonnegative with a positive step".into());
        }
        if self.screening.subset_depth == 0 {
            return fail("subset depth must be at least 1".into());
        }
        if self.screening.p_k_nominal <= 0.0 {
            return fail("nominal P_k must be positive".into());
        }
        if self.inflation.p_k_max < self.screening.p_k_nominal {
            return fail("P_k upper bound below the nominal value".into());
        }
        if self.inflation.sigma_vig_step_mmkm <= 0.0 {
            return fail("sigma_vig step must be positive".into());
        }
        if self.inflation.sigma_vig_ceiling_mmkm <= self.threat.sigma_vig_min_mmkm {
            return fail("sigma_vig ceiling must exceed the floor".into());
        }
        self.reference_combo_index()?;
        Ok(())
    }

    pub fn site(&self) -> SiteLocation<f64> {
        SiteLocation {
            latitude: self.site.latitude_deg.to_radians(),
            longitude: self.site.longitude_deg.to_radians(),
            height: self.site.height_m,
        }
    }

    pub fn load_almanac(&self) -> Result<Vec<AlmanacEntry<f64>>> {
        let path = self.base_dir.join(&self.almanac);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("almanac {}: {e}", path.display())))?;
        let entries = parse_almanac(&text)?;
        if entries.is_empty() {
            return Err(Error::Config(format!(
                "almanac {} contains no satellites",
                path.display()
            )));
        }
        Ok(entries)
    }

    /// Index of the (reference_x_dh, reference_x_dh) combo in the grid.
    pub fn reference_combo_index(&self) -> Result<usize> {
        let combos = grid_combos(
            self.grid.x_dh_max_km,
            self.grid.extra_km,
            self.grid.step_km,
        );
        let x = self.grid.reference_x_dh_km;
        combos
            .iter()
            .position(|c: &crate::error_models::ScreeningCombo<f64>| {
                (c.x_dh_km - x).abs() < 1e-9 && (c.x_aircraft_km - x).abs() < 1e-9
            })
            .ok_or_else(|| {
                Error::Config(format!(
                    "{}: reference x_DH {x} km has no Δx = 0 combo in the grid",
                    self.name
                ))
            })
    }

    pub fn screening_context(&self, c_factor: f64) -> Result<ScreeningContext<f64>> {
        if !(c_factor > 0.0 && c_factor <= 1.0) {
            return Err(Error::Config(format!(
                "c factor {c_factor} outside (0, 1]"
            )));
        }
        Ok(ScreeningContext {
            constants: IntegrityConstants {
                k_ffmd: self.constants.k_ffmd,
                k_md_eph: self.constants.k_md_eph,
            },
            aircraft: crate::error_models::AircraftModel {
                tau_s: self.aircraft.tau_s,
                v_aircraft_mps: self.aircraft.v_mps,
            },
            curves: NominalCurves {
                pr_gnd: ExpCurve {
                    a0: self.nominal.pr_gnd.a0,
                    a1: self.nominal.pr_gnd.a1,
                    el0_deg: self.nominal.pr_gnd.el0_deg,
                },
                pr_air: ExpCurve {
                    a0: self.nominal.pr_air.a0,
                    a1: self.nominal.pr_air.a1,
                    el0_deg: self.nominal.pr_air.el0_deg,
                },
                tropo: TropoModel {
                    sigma_n: self.nominal.tropo.sigma_n,
                    scale_height_m: self.nominal.tropo.scale_height_m,
                    delta_h_m: self.nominal.tropo.delta_h_m,
                },
                shell_height_m: SHELL_HEIGHT,
            },
            threat: ThreatModel {
                g_max_night_mmkm: self.threat.g_max_night_mmkm,
                daytime_anchors: self.threat.daytime_anchors.clone(),
                night_windows_ut: self.threat.night_windows_ut.clone(),
                c_factor,
                sigma_vig_min_mmkm: self.threat.sigma_vig_min_mmkm,
                epsilon_cap_m: self.threat.epsilon_cap_m,
                scale_epsilon_by_obliquity: self.threat.scale_epsilon_by_obliquity,
            },
            limits: LimitTable::new(self.limits.val_anchors.clone(), self.limits.tel_anchors.clone())?,
            combos: grid_combos(
                self.grid.x_dh_max_km,
                self.grid.extra_km,
                self.grid.step_km,
            ),
            subset_depth: self.screening.subset_depth,
            p_k_nominal: self.screening.p_k_nominal,
        })
    }

    pub fn inflation_config(&self) -> Result<InflationConfig<f64>> {
        Ok(InflationConfig {
            sigma_vig_step_mmkm: self.inflation.sigma_vig_step_mmkm,
            sigma_vig_ceiling_mmkm: self.inflation.sigma_vig_ceiling_mmkm,
            p_k_max: self.inflation.p_k_max,
            anchor_combo_index: self.reference_combo_index()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn sample_toml() -> String {
        r#"
name = "Testport"
almanac = "alm.txt"

[site]
latitude_deg = -22.81
longitude_deg = -43.25
height_m = 9.0
mask_deg = 5.0

[constants]
k_ffmd = 5.762
k_md_eph = 4.1

[aircraft]
tau_s = 100.0
v_mps = 70.0

[nominal.pr_gnd]
a0 = 0.08
a1 = 0.49
el0_deg = 15.5

[nominal.pr_air]
a0 = 0.13
a1 = 0.55
el0_deg = 10.0

[nominal.tropo]
sigma_n = 30.0
scale_height_m = 12900.0
delta_h_m = 1000.0

[threat]
g_max_night_mmkm = 850.7
daytime_anchors = [[0.0, 375.0], [65.0, 425.0]]
night_windows_ut = [[0.0, 9.0], [21.0, 24.0]]
sigma_vig_min_mmkm = 14.0

[limits]
val_anchors = [[0.0, 10.0], [3.0, 25.0]]
tel_anchors = [[0.0, 28.8], [3.0, 78.0]]

[grid]
x_dh_max_km = 6.0
extra_km = 7.0
step_km = 1.0
reference_x_dh_km = 0.0

[screening]
subset_depth = 2
p_k_nominal = 0.000180

[inflation]
sigma_vig_step_mmkm = 0.1
sigma_vig_ceiling_mmkm = 100.0
p_k_max = 0.001275
"#
        .to_string()
    }

    fn write_temp(name: &str, contents: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("gbas-config-tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_and_converts() {
        let path = write_temp("ok.toml", &sample_toml());
        let config = AirportConfig::load(&path).unwrap();
        assert_eq!(config.name, "Testport");
        assert_eq!(config.reference_combo_index().unwrap(), 0);

        let ctx = config.screening_context(1.0).unwrap();
        assert_eq!(ctx.combos.len(), 56);
        assert_eq!(ctx.subset_depth, 2);
        assert!((ctx.threat.g_max_night_mmkm - 850.7).abs() < 1e-12);
        assert!((ctx.constants.k_ffmd - 5.762).abs() < 1e-12);

        let inflation = config.inflation_config().unwrap();
        assert_eq!(inflation.anchor_combo_index, 0);
        assert!((inflation.p_k_max - 0.001275).abs() < 1e-15);

        let site = config.site();
        assert!((site.latitude.to_degrees() + 22.81).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_c_factor() {
        let path = write_temp("c.toml", &sample_toml());
        let config = AirportConfig::load(&path).unwrap();
        assert!(config.screening_context(0.0).is_err());
        assert!(config.screening_context(1.5).is_err());
        assert!(config.screening_context(0.5).is_ok());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_ranges() {
        let with_unknown = sample_toml() + "\nbogus_key = 3\n";
        let path = write_temp("unknown.toml", &with_unknown);
        assert!(matches!(AirportConfig::load(&path), Err(Error::Config(_))));

        let bad_lat = sample_toml().replace("latitude_deg = -22.81", "latitude_deg = -93.0");
        let path = write_temp("lat.toml", &bad_lat);
        assert!(matches!(AirportConfig::load(&path), Err(Error::Config(_))));

        let bad_window = sample_toml().replace("[[0.0, 9.0], [21.0, 24.0]]", "[[9.0, 3.0]]");
        let path = write_temp("win.toml", &bad_window);
        assert!(matches!(AirportConfig::load(&path), Err(Error::Config(_))));

        let bad_ref = sample_toml().replace("reference_x_dh_km = 0.0", "reference_x_dh_km = 0.5");
        let path = write_temp("ref.toml", &bad_ref);
        assert!(matches!(AirportConfig::load(&path), Err(Error::Config(_))));
    }

    #[test]
    fn missing_almanac_is_config_error() {
        let path = write_temp("alm.toml", &sample_toml());
        let config = AirportConfig::load(&path).unwrap();
        let missing = config.load_almanac();
        assert!(matches!(missing, Err(Error::Config(_))));
    }
}
