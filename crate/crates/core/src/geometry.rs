//! Weighted least-squares geometry and vertical protection levels.
//!
//! An aircraft solves for position from pseudoranges via weighted least
//! squares: with geometry matrix G (one line-of-sight row per satellite)
//! and weights W = diag(1/σ_j²), the solution operator is
//! S = (GᵀWG)⁻¹GᵀW. The third row of S maps range-domain errors into the
//! vertical position component; everything integrity-related here is built
//! from that row:
//!
//! * `vpl_h0`   — K_ffmd · sqrt(Σ S²σ²), the fault-free bound,
//! * `vpl_eph`  — max_k |S_k|·x·P_k + K_md_eph · sqrt(Σ S²σ²), the
//!   ephemeris-fault bound (the sqrt term does not depend on k and sits
//!   outside the max),
//! * `vpl`      — the larger of the two.
//!
//! Subset geometries (satellites an aircraft might drop) are enumerated by
//! [`enumerate_subsets`] and evaluated with the same operators.

use crate::linalg;
use crate::{Error, Real, Result};

use crate::constellation::SatelliteView;

/// Condition-number ceiling beyond which a normal matrix is treated as
/// singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Line-of-sight geometry matrix for a satellite set.
///
/// Row layout per satellite: `[−cos el·cos az, −cos el·sin az, −sin el, 1]`;
/// the third solution component is vertical, the fourth is receiver clock.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryMatrix<R> {
    rows: Vec<[R; 4]>,
    prns: Vec<u32>,
}

impl<R: Real> GeometryMatrix<R> {
    /// Builds the matrix from visible-satellite azimuth/elevation views.
    pub fn from_views(views: &[SatelliteView<R>]) -> Self {
        let rows = views
            .iter()
            .map(|v| {
                let (sin_el, cos_el) = (v.elevation.sin(), v.elevation.cos());
                let (sin_az, cos_az) = (v.azimuth.sin(), v.azimuth.cos());
                [-cos_el * cos_az, -cos_el * sin_az, -sin_el, R::one()]
            })
            .collect();
        Self {
            rows,
            prns: views.iter().map(|v| v.prn).collect(),
        }
    }

    /// Number of satellites (rows).
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[[R; 4]] {
        &self.rows
    }

    pub fn prns(&self) -> &[u32] {
        &self.prns
    }

    /// The geometry restricted to a subset of its satellites.
    pub fn subset(&self, id: &SubsetId) -> GeometryMatrix<R> {
        GeometryMatrix {
            rows: id.members.iter().map(|&i| self.rows[i]).collect(),
            prns: id.members.iter().map(|&i| self.prns[i]).collect(),
        }
    }
}

/// Vertical row of the weighted least-squares solution operator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRow<R> {
    /// Per-satellite vertical projection coefficients, one per geometry row.
    pub s_vert: Vec<R>,
}

/// Full 4xN solution operator S = (GᵀWG)⁻¹GᵀW.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection<R> {
    /// Rows: east/north-plane components, vertical, clock; each length N.
    pub rows: [Vec<R>; 4],
}

impl<R: Real> Projection<R> {
    /// The vertical (third) row.
    pub fn vertical(&self) -> ProjectionRow<R> {
        ProjectionRow {
            s_vert: self.rows[2].clone(),
        }
    }
}

/// Multipliers applied to the fault-free and ephemeris error bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrityConstants<R> {
    pub k_ffmd: R,
    pub k_md_eph: R,
}

/// A subset geometry, identified by member indices into the all-in-view
/// geometry (strictly increasing).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SubsetId {
    pub members: Vec<usize>,
}

impl SubsetId {
    /// Number of satellites in the subset.
    pub fn n_u(&self) -> usize {
        self.members.len()
    }
}

/// Computes the full solution operator S = (GᵀWG)⁻¹GᵀW with
/// W = diag(1/σ_j²).
pub fn projection<R: Real>(g: &GeometryMatrix<R>, sigma_sq: &[R]) -> Result<Projection<R>> {
    assert_eq!(g.len(), sigma_sq.len(), "geometry/sigma length mismatch");
    assert!(g.len() >= 4, "need at least 4 satellites, got {}", g.len());

    let mut normal = [[R::zero(); 4]; 4];
    for (row, &s2) in g.rows.iter().zip(sigma_sq) {
        debug_assert!(s2 > R::zero(), "sigma squared must be positive");
        let w = R::one() / s2;
        for i in 0..4 {
            for j in 0..4 {
                normal[i][j] = normal[i][j] + w * row[i] * row[j];
            }
        }
    }

    let inv = linalg::invert4(&normal).ok_or(Error::SingularGeometry {
        condition: f64::INFINITY,
    })?;
    let condition = linalg::condition4(&normal, &inv).as_f64();
    if !(condition < CONDITION_LIMIT) {
        return Err(Error::SingularGeometry { condition });
    }

    let n = g.len();
    let mut rows: [Vec<R>; 4] = [
        vec![R::zero(); n],
        vec![R::zero(); n],
        vec![R::zero(); n],
        vec![R::zero(); n],
    ];
    for (k, (g_row, &s2)) in g.rows.iter().zip(sigma_sq).enumerate() {
        let w = R::one() / s2;
        for i in 0..4 {
            let mut acc = R::zero();
            for j in 0..4 {
                acc = acc + inv[i][j] * g_row[j];
            }
            rows[i][k] = acc * w;
        }
    }
    Ok(Projection { rows })
}

/// The vertical row of the solution operator; see [`projection`].
pub fn projection_vertical<R: Real>(
    g: &GeometryMatrix<R>,
    sigma_sq: &[R],
) -> Result<ProjectionRow<R>> {
    projection(g, sigma_sq).map(|p| p.vertical())
}

/// Fault-free vertical protection level: K_ffmd · sqrt(Σ S²σ²).
pub fn vpl_h0<R: Real>(s: &ProjectionRow<R>, sigma_sq: &[R], k: &IntegrityConstants<R>) -> R {
    k.k_ffmd * weighted_variance(s, sigma_sq).sqrt()
}

/// Ephemeris-fault vertical protection level:
/// max_k |S_k|·x_aircraft·P_k + K_md_eph · sqrt(Σ S²σ²).
///
/// `x_aircraft_m` is in meters; P_k is dimensionless (m of error per m of
/// baseline), so the max term is in meters.
pub fn vpl_eph<R: Real>(
    s: &ProjectionRow<R>,
    sigma_sq: &[R],
    p: &[R],
    x_aircraft_m: R,
    k: &IntegrityConstants<R>,
) -> R {
    assert_eq!(s.s_vert.len(), p.len(), "projection/P length mismatch");
    let mut max_term = R::zero();
    for (&s_k, &p_k) in s.s_vert.iter().zip(p) {
        max_term = max_term.max(s_k.abs() * x_aircraft_m * p_k);
    }
    max_term + k.k_md_eph * weighted_variance(s, sigma_sq).sqrt()
}

/// Vertical protection level: max of the fault-free and ephemeris bounds.
pub fn vpl<R: Real>(
    s: &ProjectionRow<R>,
    sigma_sq: &[R],
    p: &[R],
    x_aircraft_m: R,
    k: &IntegrityConstants<R>,
) -> R {
    vpl_h0(s, sigma_sq, k).max(vpl_eph(s, sigma_sq, p, x_aircraft_m, k))
}

fn weighted_variance<R: Real>(s: &ProjectionRow<R>, sigma_sq: &[R]) -> R {
    assert_eq!(s.s_vert.len(), sigma_sq.len(), "projection/sigma length mismatch");
    let mut acc = R::zero();
    for (&s_j, &s2) in s.s_vert.iter().zip(sigma_sq) {
        acc = acc + s_j * s_j * s2;
    }
    acc
}

/// Enumerates all subsets reachable by removing up to `depth` satellites
/// from an `n`-satellite all-in-view set, keeping only subsets of size ≥ 4
/// (smaller sets cannot produce a position solution). Order: by removal
/// count, then lexicographic on member indices.
pub fn enumerate_subsets(n: usize, depth: usize) -> Vec<SubsetId> {
    assert!(n >= 4, "need at least 4 satellites, got {n}");
    let mut out = Vec::new();
    for removed in 0..=depth {
        if n - removed < 4 {
            break;
        }
        push_combinations(n, n - removed, &mut out);
    }
    out
}

/// Appends all size-`k` member combinations of 0..n in lexicographic order.
fn push_combinations(n: usize, k: usize, out: &mut Vec<SubsetId>) {
    let mut members: Vec<usize> = (0..k).collect();
    loop {
        out.push(SubsetId {
            members: members.clone(),
        });
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if members[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        members[i] += 1;
        for j in (i + 1)..k {
            members[j] = members[j - 1] + 1;
        }
    }
}
