//! Satellite constellation handling: almanac parsing, two-body Keplerian
//! propagation, and per-epoch visibility for a ground site.
//!
//! The almanac is a plain-text file of `KEY: value` records separated by
//! blank lines (see [`parse_almanac`]). Propagation is classical two-body
//! Kepler with a rotating-Earth correction; that is adequate here because
//! the downstream screening analysis depends only on azimuth/elevation
//! patterns, not on ephemeris-grade positions.
//!
//! ```
//! use gbas_core::constellation::{parse_almanac, visible_satellites, SiteLocation};
//!
//! let text = "ID: 1\nSQRT_A: 5153.62\nECC: 0.0\nINC: 0.9599\nRAAN: 0.0\n\
//!             RAAN_RATE: 0.0\nARG_PERIGEE: 0.0\nMEAN_ANOM: 1.0\nTOA: 0.0\n";
//! let almanac = parse_almanac::<f64>(text).unwrap();
//! let site = SiteLocation { latitude: 0.5f64, longitude: -0.75, height: 10.0 };
//! let views = visible_satellites(&almanac, &site, 0.0, 0.0873).unwrap();
//! assert!(views.len() <= almanac.len());
//! ```

use crate::{Error, Real, Result};

/// Gravitational parameter of the Earth, m³/s².
pub const MU_EARTH: f64 = 3.986005e14;
/// Earth rotation rate, rad/s.
pub const OMEGA_EARTH: f64 = 7.2921151467e-5;
/// WGS-84 ellipsoid semi-major axis, m.
pub const WGS84_A: f64 = 6378137.0;
/// WGS-84 ellipsoid flattening.
pub const WGS84_F: f64 = 1.0 / 298.257223563;

/// Kepler-equation solver: absolute residual bound, rad.
const KEPLER_TOL: f64 = 1e-12;
/// Kepler-equation solver: iteration budget.
const KEPLER_MAX_ITER: usize = 50;

/// One almanac record: Keplerian elements for a single satellite.
#[derive(Debug, Clone, PartialEq)]
pub struct AlmanacEntry<R> {
    pub prn: u32,
    /// Square root of the semi-major axis, m^0.5.
    pub sqrt_semimajor_axis: R,
    pub eccentricity: R,
    /// Inclination, rad.
    pub inclination: R,
    /// Earth-fixed longitude of the ascending node at the reference time, rad.
    pub raan_at_epoch: R,
    /// Node precession rate, rad/s.
    pub raan_rate: R,
    /// Argument of perigee, rad.
    pub argument_of_perigee: R,
    /// Mean anomaly at the reference time, rad.
    pub mean_anomaly_at_epoch: R,
    /// Reference time of the angular elements, seconds of week.
    pub reference_time: R,
}

impl<R: Real> AlmanacEntry<R> {
    /// Orbital period from Kepler's third law, s.
    pub fn orbital_period(&self) -> R {
        let a = self.sqrt_semimajor_axis * self.sqrt_semimajor_axis;
        let n = (R::of(MU_EARTH) / (a * a * a)).sqrt();
        R::of(std::f64::consts::TAU) / n
    }
}

/// Geodetic ground-site coordinates on the WGS-84 ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteLocation<R> {
    /// Latitude, rad.
    pub latitude: R,
    /// Longitude, rad.
    pub longitude: R,
    /// Ellipsoidal height, m.
    pub height: R,
}

/// A visible satellite as seen from the site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteView<R> {
    pub prn: u32,
    /// Azimuth clockwise from north, rad, in [0, 2π).
    pub azimuth: R,
    /// Elevation above the horizon, rad.
    pub elevation: R,
}

/// Parses the plain-text almanac format.
///
/// Records are blank-line separated; each consists of the nine `KEY: value`
/// fields `ID`, `SQRT_A`, `ECC`, `INC`, `RAAN`, `RAAN_RATE`, `ARG_PERIGEE`,
/// `MEAN_ANOM`, `TOA`. Lines starting with `#` are comments. A malformed
/// record aborts the parse with the offending line number.
pub fn parse_almanac<R: Real>(text: &str) -> Result<Vec<AlmanacEntry<R>>> {
    let mut entries = Vec::new();
    let mut record: RecordBuilder = RecordBuilder::default();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            if record.touched {
                entries.push(record.finish(line_no)?);
                record = RecordBuilder::default();
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(':').ok_or_else(|| Error::Parse {
            line: line_no,
            reason: format!("expected `KEY: value`, got {line:?}"),
        })?;
        record.set(key.trim(), value.trim(), line_no)?;
    }
    if record.touched {
        entries.push(record.finish(text.lines().count())?);
    }
    Ok(entries)
}

/// Accumulates one record's fields; validates on finish.
#[derive(Default)]
struct RecordBuilder {
    touched: bool,
    first_line: usize,
    id: Option<u32>,
    fields: [Option<f64>; 8],
}

/// Field order matches the documented record layout after `ID`.
const FIELD_KEYS: [&str; 8] = [
    "SQRT_A",
    "ECC",
    "INC",
    "RAAN",
    "RAAN_RATE",
    "ARG_PERIGEE",
    "MEAN_ANOM",
    "TOA",
];

impl RecordBuilder {
    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        if !self.touched {
            self.first_line = line;
            self.touched = true;
        }
        if key == "ID" {
            let id = value.parse::<u32>().map_err(|_| Error::Parse {
                line,
                reason: format!("non-integer ID {value:?}"),
            })?;
            if self.id.replace(id).is_some() {
                return Err(Error::Parse {
                    line,
                    reason: "duplicate ID field in record".into(),
                });
            }
            return Ok(());
        }
        let slot = FIELD_KEYS.iter().position(|k| *k == key).ok_or_else(|| Error::Parse {
            line,
            reason: format!("unknown field {key:?}"),
        })?;
        let parsed = value.parse::<f64>().map_err(|_| Error::Parse {
            line,
            reason: format!("non-numeric value {value:?} for {key}"),
        })?;
        if self.fields[slot].replace(parsed).is_some() {
            return Err(Error::Parse {
                line,
                reason: format!("duplicate field {key}"),
            });
        }
        Ok(())
    }

    fn finish<R: Real>(self, end_line: usize) -> Result<AlmanacEntry<R>> {
        let line = self.first_line;
        let id = self.id.ok_or(Error::Parse {
            line,
            reason: "record missing ID".into(),
        })?;
        let mut values = [0.0f64; 8];
        for (slot, key) in FIELD_KEYS.iter().enumerate() {
            values[slot] = self.fields[slot].ok_or_else(|| Error::Parse {
                line: end_line,
                reason: format!("record for ID {id} missing field {key}"),
            })?;
        }
        let [sqrt_a, ecc, inc, raan, raan_rate, argp, mean_anom, toa] = values;
        if !(sqrt_a > 0.0) {
            return Err(Error::Parse {
                line,
                reason: format!("SQRT_A must be positive, got {sqrt_a}"),
            });
        }
        if !(0.0..=0.05).contains(&ecc) {
            return Err(Error::Parse {
                line,
                reason: format!("ECC must lie in [0, 0.05], got {ecc}"),
            });
        }
        if !(inc > 0.0 && inc < std::f64::consts::PI) {
            return Err(Error::Parse {
                line,
                reason: format!("INC must lie in (0, pi), got {inc}"),
            });
        }
        Ok(AlmanacEntry {
            prn: id,
            sqrt_semimajor_axis: R::of(sqrt_a),
            eccentricity: R::of(ecc),
            inclination: R::of(inc),
            raan_at_epoch: R::of(raan),
            raan_rate: R::of(raan_rate),
            argument_of_perigee: R::of(argp),
            mean_anomaly_at_epoch: R::of(mean_anom),
            reference_time: R::of(toa),
        })
    }
}

/// Solves Kepler's equation M = E − e·sin E by Newton iteration.
fn eccentric_anomaly<R: Real>(mean_anomaly: R, ecc: R, prn: u32) -> Result<R> {
    // 1e-12 rad is reachable in f64; widen to a few ulps of the anomaly
    // for narrower scalar types.
    let tol = R::of(KEPLER_TOL).max(R::epsilon() * R::of(8.0) * mean_anomaly.abs().max(R::one()));
    let mut e_k = mean_anomaly;
    for _ in 0..KEPLER_MAX_ITER {
        let f = e_k - ecc * e_k.sin() - mean_anomaly;
        if f.abs() < tol {
            return Ok(e_k);
        }
        let fp = R::one() - ecc * e_k.cos();
        e_k = e_k - f / fp;
    }
    let residual = (e_k - ecc * e_k.sin() - mean_anomaly).abs();
    Err(Error::NonConvergence {
        prn,
        residual: residual.as_f64(),
    })
}

/// Satellite position in the orbital frame plus the node/inclination tilt,
/// with the ascending node placed at longitude `node` in the output frame.
fn position_with_node<R: Real>(entry: &AlmanacEntry<R>, t: R, node: R) -> Result<[R; 3]> {
    let a = entry.sqrt_semimajor_axis * entry.sqrt_semimajor_axis;
    let n = (R::of(MU_EARTH) / (a * a * a)).sqrt();
    let m = entry.mean_anomaly_at_epoch + n * (t - entry.reference_time);
    let e_k = eccentric_anomaly(m, entry.eccentricity, entry.prn)?;

    let one = R::one();
    let ecc = entry.eccentricity;
    let true_anom = ((one - ecc * ecc).sqrt() * e_k.sin()).atan2(e_k.cos() - ecc);
    let radius = a * (one - ecc * e_k.cos());
    let arg_lat = true_anom + entry.argument_of_perigee;

    let (sin_u, cos_u) = (arg_lat.sin(), arg_lat.cos());
    let (sin_i, cos_i) = (entry.inclination.sin(), entry.inclination.cos());
    let (sin_o, cos_o) = (node.sin(), node.cos());

    let x_orb = radius * cos_u;
    let y_orb = radius * sin_u;
    Ok([
        x_orb * cos_o - y_orb * cos_i * sin_o,
        x_orb * sin_o + y_orb * cos_i * cos_o,
        y_orb * sin_i,
    ])
}

/// Propagates an almanac entry to an Earth-fixed (ECEF) position at `t`
/// seconds of week.
pub fn propagate<R: Real>(entry: &AlmanacEntry<R>, t: R) -> Result<[R; 3]> {
    let omega_e = R::of(OMEGA_EARTH);
    let node = entry.raan_at_epoch + (entry.raan_rate - omega_e) * (t - entry.reference_time)
        - omega_e * entry.reference_time;
    position_with_node(entry, t, node)
}

/// Propagates to the inertial frame (no Earth-rotation correction); on a
/// non-precessing orbit the result is periodic with [`AlmanacEntry::orbital_period`].
pub fn propagate_inertial<R: Real>(entry: &AlmanacEntry<R>, t: R) -> Result<[R; 3]> {
    let node = entry.raan_at_epoch + entry.raan_rate * (t - entry.reference_time);
    position_with_node(entry, t, node)
}

/// Site position in ECEF from WGS-84 geodetic coordinates.
pub fn site_ecef<R: Real>(site: &SiteLocation<R>) -> [R; 3] {
    let a = R::of(WGS84_A);
    let f = R::of(WGS84_F);
    let e2 = f * (R::of(2.0) - f);
    let (sin_lat, cos_lat) = (site.latitude.sin(), site.latitude.cos());
    let (sin_lon, cos_lon) = (site.longitude.sin(), site.longitude.cos());
    let n = a / (R::one() - e2 * sin_lat * sin_lat).sqrt();
    [
        (n + site.height) * cos_lat * cos_lon,
        (n + site.height) * cos_lat * sin_lon,
        (n * (R::one() - e2) + site.height) * sin_lat,
    ]
}

/// Topocentric azimuth/elevation of a satellite ECEF position from a site.
///
/// Azimuth is measured clockwise from north in [0, 2π); elevation is the
/// angle above the local horizon plane.
pub fn azimuth_elevation<R: Real>(sat_ecef: [R; 3], site: &SiteLocation<R>) -> (R, R) {
    let origin = site_ecef(site);
    let los = [
        sat_ecef[0] - origin[0],
        sat_ecef[1] - origin[1],
        sat_ecef[2] - origin[2],
    ];
    let (sin_lat, cos_lat) = (site.latitude.sin(), site.latitude.cos());
    let (sin_lon, cos_lon) = (site.longitude.sin(), site.longitude.cos());
    let east = [-sin_lon, cos_lon, R::zero()];
    let north = [-sin_lat * cos_lon, -sin_lat * sin_lon, cos_lat];
    let up = [cos_lat * cos_lon, cos_lat * sin_lon, sin_lat];

    let dot = |a: &[R; 3], b: &[R; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let e = dot(&los, &east);
    let n = dot(&los, &north);
    let u = dot(&los, &up);
    let range = (e * e + n * n + u * u).sqrt();

    let mut azimuth = e.atan2(n);
    if azimuth < R::zero() {
        azimuth = azimuth + R::of(std::f64::consts::TAU);
    }
    let elevation = (u / range).asin();
    (azimuth, elevation)
}

/// Satellites above the elevation mask at `t`, sorted by PRN.
pub fn visible_satellites<R: Real>(
    almanac: &[AlmanacEntry<R>],
    site: &SiteLocation<R>,
    t: R,
    mask: R,
) -> Result<Vec<SatelliteView<R>>> {
    let mut views = Vec::new();
    for entry in almanac {
        let ecef = propagate(entry, t)?;
        let (azimuth, elevation) = azimuth_elevation(ecef, site);
        if elevation > mask {
            views.push(SatelliteView {
                prn: entry.prn,
                azimuth,
                elevation,
            });
        }
    }
    views.sort_by_key(|v| v.prn);
    Ok(views)
}
