//! Per-epoch identification of unsafe subset geometries.
//!
//! For every satellite subset the aircraft might use and every
//! (x_DH, x_aircraft) combination, the maximum ionosphere-induced error in
//! vertical (MIEV) is computed under the worst-case gradient and compared
//! against the tolerable error limit (TEL). A subset whose MIEV exceeds
//! TEL at some combination is unsafe there and must be made unavailable by
//! parameter inflation.
//!
//! The impact model follows the weakest-pair framing: an ionospheric front
//! hits at most two ranging sources at once, each with worst error
//! ε_j = g·(x_aircraft + 2·τ·v) and sign options {−c·ε_j, +ε_j}
//! (plus the degenerate single-satellite case). Projections use nominal
//! sigmas throughout; inflation never re-linearizes S.
//!
//! Everything a later inflation pass needs per epoch (nominal budgets,
//! subset projection rows, MIEV, nominal VPL) is cached in [`EpochData`],
//! grouped by distinct x_aircraft value since none of those quantities
//! depend on x_DH.

use crate::constellation::SatelliteView;
use crate::error_models::{
    active_gradient, sigma_budget, tel_of, AircraftModel, LimitTable, NominalCurves,
    ScreeningCombo, SigmaBudget, ThreatModel,
};
use crate::geometry::{
    enumerate_subsets, projection_vertical, vpl, GeometryMatrix, IntegrityConstants, SubsetId,
};
use crate::{Error, Real, Result};

/// Verdict for one (subset, combo) pair. Only unsafe verdicts are emitted
/// by [`find_unsafe`].
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetVerdict<R> {
    pub subset: SubsetId,
    pub combo: ScreeningCombo<R>,
    pub miev: R,
    pub tel: R,
    pub is_unsafe: bool,
    /// VPL of this subset at this combo under nominal broadcast values.
    pub nominal_vpl: R,
    /// Index into [`EpochData::subsets`].
    pub subset_index: usize,
    /// Index into the context's combo list.
    pub combo_index: usize,
}

/// Screening configuration shared across epochs.
#[derive(Debug, Clone)]
pub struct ScreeningContext<R> {
    pub constants: IntegrityConstants<R>,
    pub aircraft: AircraftModel<R>,
    pub curves: NominalCurves<R>,
    pub threat: ThreatModel<R>,
    pub limits: LimitTable<R>,
    pub combos: Vec<ScreeningCombo<R>>,
    /// Maximum number of satellites removed when enumerating subsets.
    pub subset_depth: usize,
    /// Nominal broadcast ephemeris decorrelation parameter, applied to
    /// every satellite.
    pub p_k_nominal: R,
}

/// Cached evaluation of one epoch for one x_aircraft value.
#[derive(Debug, Clone)]
pub struct XAirGroup<R> {
    pub x_aircraft_km: R,
    /// Nominal budget per all-in-view satellite (indexed like the views).
    pub budgets: Vec<SigmaBudget<R>>,
    /// Worst ionosphere-induced range error per satellite, m.
    pub epsilons: Vec<R>,
    /// Per subset: `None` when the subset normal matrix is singular.
    pub evals: Vec<Option<SubsetEval<R>>>,
}

/// Nominal-σ evaluation of one subset at one x_aircraft value.
#[derive(Debug, Clone)]
pub struct SubsetEval<R> {
    /// Vertical projection row over the subset members, aligned with
    /// `SubsetId::members`.
    pub s_vert: Vec<R>,
    pub miev: R,
    pub nominal_vpl: R,
}

/// Everything computed once per epoch: views, subset enumeration, nominal
/// evaluations grouped by x_aircraft, and the unsafe verdict list.
#[derive(Debug, Clone)]
pub struct EpochData<R> {
    pub hour_ut: R,
    pub views: Vec<SatelliteView<R>>,
    pub subsets: Vec<SubsetId>,
    /// Distinct x_aircraft groups, ascending.
    pub groups: Vec<XAirGroup<R>>,
    /// Combo index → index into `groups`.
    pub combo_group: Vec<usize>,
    /// Unsafe verdicts, subsets outer and combos inner, both in
    /// enumeration order.
    pub verdicts: Vec<SubsetVerdict<R>>,
}

impl<R: Real> EpochData<R> {
    /// The all-in-view evaluation for a group (subset 0 never fails
    /// construction; see [`find_unsafe`]).
    pub fn aiv_eval(&self, group: usize) -> &SubsetEval<R> {
        self.groups[group].evals[0]
            .as_ref()
            .expect("all-in-view eval exists by construction")
    }
}

/// Worst ionosphere-induced range error ε = g·(x_aircraft + 2·τ·v), m,
/// for a slant gradient in mm/km and distances in km.
pub fn worst_range_error<R: Real>(
    g_max_mmkm: R,
    combo: &ScreeningCombo<R>,
    aircraft: &AircraftModel<R>,
) -> R {
    g_max_mmkm * R::of(1e-3) * (combo.x_aircraft_km + aircraft.memory_distance_km())
}

/// Maximum ionosphere-induced error in vertical over all satellite pairs:
/// each member of a pair contributes an error from {−c·ε, +ε, 0}, the 0
/// covering the degenerate single-satellite impact.
pub fn miev<R: Real>(s_vert: &[R], eps: &[R], c: R) -> R {
    assert_eq!(s_vert.len(), eps.len(), "projection/epsilon length mismatch");
    let mut worst = R::zero();
    for m in 0..s_vert.len() {
        for n in (m + 1)..s_vert.len() {
            let options_m = [-c * eps[m], eps[m], R::zero()];
            let options_n = [-c * eps[n], eps[n], R::zero()];
            for em in options_m {
                for en in options_n {
                    let impact = (s_vert[m] * em + s_vert[n] * en).abs();
                    worst = worst.max(impact);
                }
            }
        }
    }
    worst
}

/// Screens one epoch: enumerates subsets, evaluates nominal budgets,
/// projections, MIEV, and nominal VPL per x_aircraft group, and emits the
/// unsafe verdicts.
///
/// Subsets with a singular normal matrix are skipped with a warning; an
/// aircraft cannot position with them either. A singular all-in-view
/// geometry is an error since nothing downstream is defined without it.
pub fn find_unsafe<R: Real>(
    ctx: &ScreeningContext<R>,
    hour_ut: R,
    views: &[SatelliteView<R>],
) -> Result<EpochData<R>> {
    if views.len() < 4 {
        return Err(Error::EmptyInput(format!(
            "screening needs at least 4 satellites in view, got {}",
            views.len()
        )));
    }
    let geometry = GeometryMatrix::from_views(views);
    let subsets = enumerate_subsets(views.len(), ctx.subset_depth);

    let mut groups: Vec<XAirGroup<R>> = Vec::new();
    let mut combo_group = Vec::with_capacity(ctx.combos.len());
    for combo in &ctx.combos {
        let x = combo.x_aircraft_km;
        match groups.iter().position(|g| g.x_aircraft_km == x) {
            Some(i) => combo_group.push(i),
            None => {
                groups.push(evaluate_group(ctx, hour_ut, views, &geometry, &subsets, x)?);
                combo_group.push(groups.len() - 1);
            }
        }
    }

    let mut verdicts = Vec::new();
    for (subset_index, subset) in subsets.iter().enumerate() {
        for (combo_index, combo) in ctx.combos.iter().enumerate() {
            let group = &groups[combo_group[combo_index]];
            let eval = match &group.evals[subset_index] {
                Some(eval) => eval,
                None => continue,
            };
            let tel = tel_of(combo, &ctx.limits);
            if eval.miev > tel {
                verdicts.push(SubsetVerdict {
                    subset: subset.clone(),
                    combo: *combo,
                    miev: eval.miev,
                    tel,
                    is_unsafe: true,
                    nominal_vpl: eval.nominal_vpl,
                    subset_index,
                    combo_index,
                });
            }
        }
    }

    Ok(EpochData {
        hour_ut,
        views: views.to_vec(),
        subsets,
        groups,
        combo_group,
        verdicts,
    })
}

fn evaluate_group<R: Real>(
    ctx: &ScreeningContext<R>,
    hour_ut: R,
    views: &[SatelliteView<R>],
    geometry: &GeometryMatrix<R>,
    subsets: &[SubsetId],
    x_aircraft_km: R,
) -> Result<XAirGroup<R>> {
    let probe = ScreeningCombo {
        x_dh_km: R::zero(),
        x_aircraft_km,
    };
    let mut budgets = Vec::with_capacity(views.len());
    let mut epsilons = Vec::with_capacity(views.len());
    for view in views {
        let budget = sigma_budget(
            view,
            &probe,
            ctx.threat.sigma_vig_min_mmkm,
            &ctx.aircraft,
            &ctx.curves,
        )?;
        let gradient = active_gradient(hour_ut, &ctx.threat, view.elevation);
        let mut eps = worst_range_error(gradient, &probe, &ctx.aircraft);
        if ctx.threat.scale_epsilon_by_obliquity {
            eps = eps * budget.obliquity;
        }
        if let Some(cap) = ctx.threat.epsilon_cap_m {
            eps = eps.min(cap);
        }
        budgets.push(budget);
        epsilons.push(eps);
    }

    let x_aircraft_m = x_aircraft_km * R::of(1000.0);
    let mut evals = Vec::with_capacity(subsets.len());
    for (subset_index, subset) in subsets.iter().enumerate() {
        let sub_geom = geometry.subset(subset);
        let sigma_sq: Vec<R> = subset
            .members
            .iter()
            .map(|&j| budgets[j].sigma_total_sq)
            .collect();
        match projection_vertical(&sub_geom, &sigma_sq) {
            Ok(s_row) => {
                let eps: Vec<R> = subset.members.iter().map(|&j| epsilons[j]).collect();
                let p: Vec<R> = vec![ctx.p_k_nominal; subset.members.len()];
                let miev_val = miev(&s_row.s_vert, &eps, ctx.threat.c_factor);
                let nominal_vpl = vpl(&s_row, &sigma_sq, &p, x_aircraft_m, &ctx.constants);
                evals.push(Some(SubsetEval {
                    s_vert: s_row.s_vert,
                    miev: miev_val,
                    nominal_vpl,
                }));
            }
            Err(Error::SingularGeometry { condition }) => {
                if subset_index == 0 {
                    return Err(Error::SingularGeometry { condition });
                }
                log::warn!(
                    "skipping singular subset {:?} at x_aircraft = {} km (condition {condition:.3e})",
                    subset.members,
                    x_aircraft_km.as_f64()
                );
                evals.push(None);
            }
            Err(other) => return Err(other),
        }
    }

    Ok(XAirGroup {
        x_aircraft_km,
        budgets,
        epsilons,
        evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error_models::{ExpCurve, TropoModel, SHELL_HEIGHT};

    fn aircraft() -> AircraftModel<f64> {
        AircraftModel {
            tau_s: 100.0,
            v_aircraft_mps: 70.0,
        }
    }

    #[test]
    fn worst_range_error_examples() {
        let combo = ScreeningCombo {
            x_dh_km: 0.0,
            x_aircraft_km: 6.0,
        };
        let eps = worst_range_error(850.7, &combo, &aircraft());
        assert!((eps - 17.014).abs() < 1e-12, "{eps}");
        assert_eq!(worst_range_error(0.0, &combo, &aircraft()), 0.0);
        let far = ScreeningCombo {
            x_dh_km: 0.0,
            x_aircraft_km: 12.0,
        };
        let eps = worst_range_error(850.7, &far, &aircraft());
        assert!((eps - 0.8507 * 26.0).abs() < 1e-12, "{eps}");
    }

    #[test]
    fn miev_two_satellite_corners() {
        let s = [0.8f64, -0.5];
        assert!((miev(&s, &[10.0, 10.0], 1.0) - 13.0).abs() < 1e-12);
        assert!((miev(&s, &[10.0, 10.0], 0.5) - 10.5).abs() < 1e-12);
        assert_eq!(miev(&s, &[0.0, 0.0], 1.0), 0.0);
    }

    #[test]
    fn miev_at_c_one_collapses_to_abs_sum() {
        let mut rng = Lcg(42);
        for _ in 0..50 {
            let n = 4 + (rng.next_u64() % 5) as usize;
            let s: Vec<f64> = (0..n).map(|_| rng.sym()).collect();
            let eps: Vec<f64> = (0..n).map(|_| rng.unit() * 20.0).collect();
            let direct = miev(&s, &eps, 1.0);
            let mut collapsed = 0.0f64;
            for m in 0..n {
                for k in (m + 1)..n {
                    collapsed = collapsed.max(s[m].abs() * eps[m] + s[k].abs() * eps[k]);
                }
            }
            assert!((direct - collapsed).abs() < 1e-12, "{direct} vs {collapsed}");
        }
    }

    #[test]
    fn miev_monotone_in_c_eps_and_s() {
        let mut rng = Lcg(7);
        for _ in 0..50 {
            let n = 4 + (rng.next_u64() % 4) as usize;
            let s: Vec<f64> = (0..n).map(|_| rng.sym()).collect();
            let eps: Vec<f64> = (0..n).map(|_| rng.unit() * 15.0).collect();
            let c = 0.2 + 0.7 * rng.unit();
            let base = miev(&s, &eps, c);
            assert!(miev(&s, &eps, (c + 0.1).min(1.0)) >= base - 1e-12);
            let bigger_eps: Vec<f64> = eps.iter().map(|e| e * 1.3).collect();
            assert!(miev(&s, &bigger_eps, c) >= base - 1e-12);
            let bigger_s: Vec<f64> = s.iter().map(|v| v * 1.5).collect();
            assert!(miev(&bigger_s, &eps, c) >= base - 1e-12);
        }
    }

    struct Lcg(u64);

    impl Lcg {
        fn next_u64(&mut self) -> u64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            self.0
        }

        fn unit(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
        }

        /// Uniform in [−1, 1).
        fn sym(&mut self) -> f64 {
            self.unit() * 2.0 - 1.0
        }
    }

    fn view(prn: u32, az_deg: f64, el_deg: f64) -> SatelliteView<f64> {
        SatelliteView {
            prn,
            azimuth: az_deg.to_radians(),
            elevation: el_deg.to_radians(),
        }
    }

    fn six_views() -> Vec<SatelliteView<f64>> {
        vec![
            view(2, 30.0, 72.0),
            view(5, 110.0, 38.0),
            view(9, 185.0, 55.0),
            view(14, 250.0, 21.0),
            view(21, 315.0, 47.0),
            view(29, 80.0, 12.0),
        ]
    }

    fn context(g_night: f64, c: f64) -> ScreeningContext<f64> {
        ScreeningContext {
            constants: IntegrityConstants {
                k_ffmd: 5.762,
                k_md_eph: 4.1,
            },
            aircraft: aircraft(),
            curves: NominalCurves {
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
            },
            threat: ThreatModel {
                g_max_night_mmkm: g_night,
                daytime_anchors: vec![(0.0, 375.0), (65.0, 425.0)],
                night_windows_ut: vec![(0.0, 9.0), (21.0, 24.0)],
                c_factor: c,
                sigma_vig_min_mmkm: 14.0,
                epsilon_cap_m: None,
                scale_epsilon_by_obliquity: false,
            },
            limits: LimitTable::new(
                vec![(0.0, 10.0), (3.0, 25.0)],
                vec![(0.0, 28.8), (3.0, 78.0)],
            )
            .unwrap(),
            combos: crate::error_models::grid_combos(6.0, 7.0, 1.0),
            subset_depth: 2,
            p_k_nominal: 0.000180,
        }
    }

    #[test]
    fn extreme_gradient_marks_everything_unsafe() {
        let ctx = context(10_000.0, 1.0);
        let data = find_unsafe(&ctx, 2.0, &six_views()).unwrap();
        let evaluable: usize = data
            .subsets
            .iter()
            .enumerate()
            .filter(|(i, _)| data.groups[0].evals[*i].is_some())
            .count();
        assert_eq!(data.subsets.len(), 22);
        assert_eq!(evaluable, 22, "six spread views should have no singular subset");
        assert_eq!(data.verdicts.len(), 22 * 56);
        for v in &data.verdicts {
            assert!(v.is_unsafe && v.miev > v.tel);
            assert!(v.miev >= 0.0);
        }
    }

    #[test]
    fn tiny_gradient_marks_nothing() {
        let ctx = context(0.001, 1.0);
        let data = find_unsafe(&ctx, 2.0, &six_views()).unwrap();
        assert!(data.verdicts.is_empty());
    }

    #[test]
    fn smaller_c_yields_subset_of_unsafe_pairs() {
        let strict = find_unsafe(&context(850.7, 1.0), 2.0, &six_views()).unwrap();
        let relaxed = find_unsafe(&context(850.7, 0.5), 2.0, &six_views()).unwrap();
        let strict_keys: Vec<(usize, usize)> = strict
            .verdicts
            .iter()
            .map(|v| (v.subset_index, v.combo_index))
            .collect();
        for v in &relaxed.verdicts {
            assert!(
                strict_keys.contains(&(v.subset_index, v.combo_index)),
                "c=0.5 unsafe pair missing at c=1.0"
            );
        }
        assert!(relaxed.verdicts.len() <= strict.verdicts.len());
    }

    #[test]
    fn larger_gradient_never_shrinks_unsafe_set() {
        let small = find_unsafe(&context(600.0, 1.0), 2.0, &six_views()).unwrap();
        let large = find_unsafe(&context(850.7, 1.0), 2.0, &six_views()).unwrap();
        let large_keys: Vec<(usize, usize)> = large
            .verdicts
            .iter()
            .map(|v| (v.subset_index, v.combo_index))
            .collect();
        for v in &small.verdicts {
            assert!(large_keys.contains(&(v.subset_index, v.combo_index)));
        }
    }

    #[test]
    fn day_night_switch_changes_epsilons() {
        let ctx = context(850.7, 1.0);
        let night = find_unsafe(&ctx, 2.0, &six_views()).unwrap();
        let day = find_unsafe(&ctx, 12.0, &six_views()).unwrap();
        for (n, d) in night.groups[1].epsilons.iter().zip(&day.groups[1].epsilons) {
            assert!(n > d, "night epsilon should exceed daytime CONUS value");
        }
    }

    #[test]
    fn groups_cover_distinct_x_air_values() {
        let ctx = context(850.7, 1.0);
        let data = find_unsafe(&ctx, 3.0, &six_views()).unwrap();
        assert_eq!(data.groups.len(), 14);
        for (i, combo) in ctx.combos.iter().enumerate() {
            let g = &data.groups[data.combo_group[i]];
            assert_eq!(g.x_aircraft_km, combo.x_aircraft_km);
        }
        let aiv = data.aiv_eval(0);
        assert_eq!(aiv.s_vert.len(), 6);
    }

    #[test]
    fn verdicts_are_reproducible() {
        let ctx = context(850.7, 1.0);
        let a = find_unsafe(&ctx, 22.0, &six_views()).unwrap();
        let b = find_unsafe(&ctx, 22.0, &six_views()).unwrap();
        assert_eq!(a.verdicts.len(), b.verdicts.len());
        for (x, y) in a.verdicts.iter().zip(&b.verdicts) {
            assert_eq!(x.subset_index, y.subset_index);
            assert_eq!(x.combo_index, y.combo_index);
            assert_eq!(x.miev, y.miev);
            assert_eq!(x.nominal_vpl, y.nominal_vpl);
        }
    }

    #[test]
    fn singular_subset_is_skipped_not_fatal() {
        // Four satellites on a common-elevation ring are singular once the
        // two distinct-elevation satellites are removed.
        let views = vec![
            view(1, 0.0, 45.0),
            view(2, 90.0, 45.0),
            view(3, 180.0, 45.0),
            view(4, 270.0, 45.0),
            view(5, 40.0, 88.0),
            view(6, 200.0, 15.0),
        ];
        let ctx = context(10_000.0, 1.0);
        let data = find_unsafe(&ctx, 2.0, &views).unwrap();
        let ring_subset = data
            .subsets
            .iter()
            .position(|s| s.members == vec![0, 1, 2, 3])
            .expect("removal pair {4,5} enumerated");
        for group in &data.groups {
            assert!(group.evals[ring_subset].is_none());
            assert!(group.evals[0].is_some());
        }
        assert!(data.verdicts.iter().all(|v| v.subset_index != ring_subset));
        assert!(!data.verdicts.is_empty());
    }

    #[test]
    fn rejects_fewer_than_four_views() {
        let ctx = context(850.7, 1.0);
        let three = &six_views()[..3];
        assert!(matches!(
            find_unsafe(&ctx, 2.0, three),
            Err(Error::EmptyInput(_))
        ));
    }
}
