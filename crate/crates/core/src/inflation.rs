//! The three geometry-screening algorithms: σ_vig inflation, targeted
//! inflation, and optimal σ_pr_gnd inflation.
//!
//! All three start from the same unsafe verdict list (computed with
//! nominal parameters) and return broadcast parameters under which every
//! unsafe subset advertises VPL ≥ VAL:
//!
//! * **σ_vig inflation** raises the broadcast gradient sigma in fixed
//!   steps until every unsafe subset clears VAL. No LPs; inflation hits
//!   every satellite at once, so availability suffers.
//! * **Targeted inflation** works per grid combination: first an LP over
//!   the per-satellite ephemeris parameters P_k, and where that is
//!   infeasible an LP over per-satellite σ² restricted to the combo.
//!   Results merge by maximum across combos.
//! * **Optimal σ_pr_gnd inflation** solves one LP covering every unsafe
//!   (subset, combo) row simultaneously, minimizing the all-in-view
//!   vertical variance impact, then recovers per-satellite σ_pr_gnd.
//!
//! The LP rows fix the projection matrix S at its nominal value. Because
//! re-weighting with inflated sigmas changes the actual S, both LP methods
//! finish with the same increment-and-recheck adjustment: recompute true
//! projections, and while any unsafe pair still shows VPL < VAL, bump one
//! satellite's σ_pr_gnd by the 0.02 m broadcast resolution (cycling
//! through the failing subset's members in ascending index order, capped
//! at 5.08 m). [`verify_screened`] is the final word for every method: it
//! re-derives VPL from the actual inflated projections.
//!
//! LP variables are full variances σ_i² anchored at one grid combination
//! (the reference combo); rows for other combos shift their right side by
//! the difference in non-ground variance, which keeps one variable per
//! satellite exact across the whole grid.

use crate::error_models::val_of;
use crate::geometry::{projection_vertical, vpl, GeometryMatrix};
use crate::lp_solver::{solve, LinearProgram, LpOutcome};
use crate::screening::{EpochData, ScreeningContext, XAirGroup};
use crate::{Error, Real, Result};

/// Broadcast resolution of σ_pr_gnd, m.
pub const SIGMA_STEP_M: f64 = 0.02;
/// Maximum broadcast σ_pr_gnd, m.
pub const SIGMA_PR_GND_MAX_M: f64 = 5.08;

/// Broadcast integrity parameters produced by an inflation algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastParams<R> {
    /// Per-satellite σ_pr_gnd, m, on the 0.02 m broadcast grid.
    pub sigma_pr_gnd: Vec<R>,
    /// Broadcast gradient sigma, mm/km.
    pub sigma_vig_mmkm: R,
    /// Per-satellite ephemeris decorrelation parameter.
    pub p: Vec<R>,
}

/// Outcome of one inflation algorithm at one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct InflationResult<R> {
    pub params: BroadcastParams<R>,
    /// Linear programs solved (feasible or not).
    pub lp_count: usize,
    /// σ_pr_gnd increments applied by the adjustment loop; for σ_vig
    /// inflation, the number of σ_vig steps taken instead.
    pub adjust_iterations: usize,
    /// All-in-view VPL per grid combo under the final parameters, aligned
    /// with the context's combo list.
    pub all_in_view_vpl_by_combo: Vec<R>,
    /// True when every unsafe (subset, combo) re-checks at VPL ≥ VAL with
    /// actual inflated projections.
    pub screened: bool,
    /// Minimum VPL − VAL over the unsafe verdicts (+∞ when none).
    pub worst_margin_m: R,
    /// Combos where P_k alone could not deny every unsafe subset, so the
    /// targeted method fell through to a σ LP (0 for the other methods).
    pub pk_lp_infeasible: usize,
}

/// Tuning knobs shared by the algorithms.
#[derive(Debug, Clone, Copy)]
pub struct InflationConfig<R> {
    /// σ_vig inflation step, mm/km.
    pub sigma_vig_step_mmkm: R,
    /// σ_vig value above which the epoch is declared unscreenable, mm/km.
    pub sigma_vig_ceiling_mmkm: R,
    /// Upper bound of the targeted P_k LP.
    pub p_k_max: R,
    /// Combo whose error budget anchors the optimal LP's variables and
    /// objective.
    pub anchor_combo_index: usize,
}

impl<R: Real> Default for InflationConfig<R> {
    fn default() -> Self {
        Self {
            sigma_vig_step_mmkm: R::of(0.1),
            sigma_vig_ceiling_mmkm: R::of(100.0),
            p_k_max: R::of(0.001275),
            anchor_combo_index: 0,
        }
    }
}

/// Rounds a sigma up to the next multiple of the 0.02 m broadcast
/// resolution. Rounding up can only add margin, never undo screening.
pub fn quantize_broadcast<R: Real>(sigma: R) -> R {
    let step = R::of(SIGMA_STEP_M);
    let ticks = (sigma / step - R::of(1e-9)).ceil();
    ticks.max(R::zero()) * step
}

/// One re-check requirement: an unsafe subset at one x_aircraft group,
/// with the largest VAL among the combos that flagged it.
#[derive(Debug, Clone, Copy)]
#[doc(hidden)]
pub struct UnsafeReq<R> {
    pub subset_index: usize,
    pub group_index: usize,
    pub binding_val: R,
}

#[doc(hidden)]
pub fn group_requirements<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
) -> Vec<UnsafeReq<R>> {
    let mut reqs: Vec<UnsafeReq<R>> = Vec::new();
    for v in &data.verdicts {
        let group_index = data.combo_group[v.combo_index];
        let val = val_of(&v.combo, &ctx.limits);
        match reqs
            .iter_mut()
            .find(|r| r.subset_index == v.subset_index && r.group_index == group_index)
        {
            Some(req) => req.binding_val = req.binding_val.max(val),
            None => reqs.push(UnsafeReq {
                subset_index: v.subset_index,
                group_index,
                binding_val: val,
            }),
        }
    }
    reqs
}

/// σ_j² under the given broadcast parameters at one x_aircraft group: the
/// broadcast ground sigma replaces the nominal one and σ_iono scales
/// linearly with σ_vig above the floor.
fn param_sigma_sq<R: Real>(
    group: &XAirGroup<R>,
    params: &BroadcastParams<R>,
    vig_floor: R,
    j: usize,
) -> R {
    let b = &group.budgets[j];
    let gnd = params.sigma_pr_gnd[j];
    let iono = b.sigma_iono * (params.sigma_vig_mmkm / vig_floor);
    gnd * gnd + b.sigma_tropo * b.sigma_tropo + b.sigma_pr_air * b.sigma_pr_air + iono * iono
}

/// VPL of one subset at one group with projections recomputed from the
/// given parameters, together with the recomputed vertical projection row
/// (one entry per subset member). `None` when the re-weighted subset turns
/// singular (unusable by aircraft, hence vacuously screened).
fn subset_vpl_and_row_with_params<R: Real>(
    ctx: &ScreeningContext<R>,
    geometry: &GeometryMatrix<R>,
    data: &EpochData<R>,
    subset_index: usize,
    group_index: usize,
    params: &BroadcastParams<R>,
) -> Result<Option<(R, Vec<R>)>> {
    let subset = &data.subsets[subset_index];
    let group = &data.groups[group_index];
    let vig_floor = ctx.threat.sigma_vig_min_mmkm;
    let sigma_sq: Vec<R> = subset
        .members
        .iter()
        .map(|&j| param_sigma_sq(group, params, vig_floor, j))
        .collect();
    let sub_geom = geometry.subset(subset);
    match projection_vertical(&sub_geom, &sigma_sq) {
        Ok(row) => {
            let p: Vec<R> = subset.members.iter().map(|&j| params.p[j]).collect();
            let x_air_m = group.x_aircraft_km * R::of(1000.0);
            let v = vpl(&row, &sigma_sq, &p, x_air_m, &ctx.constants);
            Ok(Some((v, row.s_vert)))
        }
        Err(Error::SingularGeometry { condition }) => {
            log::warn!(
                "subset {:?} singular under inflated sigmas (condition {condition:.3e}); treating as unusable",
                subset.members
            );
            Ok(None)
        }
        Err(other) => Err(other),
    }
}

/// VPL-only variant of [`subset_vpl_and_row_with_params`].
#[doc(hidden)]
pub fn subset_vpl_with_params<R: Real>(
    ctx: &ScreeningContext<R>,
    geometry: &GeometryMatrix<R>,
    data: &EpochData<R>,
    subset_index: usize,
    group_index: usize,
    params: &BroadcastParams<R>,
) -> Result<Option<R>> {
    Ok(
        subset_vpl_and_row_with_params(ctx, geometry, data, subset_index, group_index, params)?
            .map(|(v, _)| v),
    )
}

/// Nominal broadcast parameters: quantized nominal σ_pr_gnd, σ_vig at the
/// floor, nominal P_k everywhere. This is the baseline an aircraft sees
/// with screening switched off, so VPL-inflation statistics measure
/// against it rather than against unquantized curve values.
pub fn nominal_broadcast<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
) -> BroadcastParams<R> {
    let base = &data.groups[0];
    BroadcastParams {
        sigma_pr_gnd: base
            .budgets
            .iter()
            .map(|b| quantize_broadcast(b.sigma_pr_gnd))
            .collect(),
        sigma_vig_mmkm: ctx.threat.sigma_vig_min_mmkm,
        p: vec![ctx.p_k_nominal; data.views.len()],
    }
}

/// Recomputes projections from the final parameters and evaluates every
/// unsafe (subset, combo) constraint. Returns the screened flag and the
/// minimum VPL − VAL margin (+∞ when there is nothing to check).
pub fn verify_screened<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
    params: &BroadcastParams<R>,
) -> Result<(bool, R)> {
    let geometry = GeometryMatrix::from_views(&data.views);
    let mut cache: Vec<Option<Option<R>>> = vec![None; data.subsets.len() * data.groups.len()];
    let mut margin = R::infinity();
    let mut screened = true;
    for v in &data.verdicts {
        let gi = data.combo_group[v.combo_index];
        let slot = v.subset_index * data.groups.len() + gi;
        if cache[slot].is_none() {
            cache[slot] =
                Some(subset_vpl_with_params(ctx, &geometry, data, v.subset_index, gi, params)?);
        }
        let Some(vpl_actual) = cache[slot].unwrap() else {
            continue;
        };
        let this_margin = vpl_actual - val_of(&v.combo, &ctx.limits);
        margin = margin.min(this_margin);
        if this_margin < R::zero() {
            screened = false;
        }
    }
    Ok((screened, margin))
}

/// All-in-view VPL at one grid combo under the given broadcast
/// parameters, projections recomputed. The all-in-view geometry turning
/// singular is an error: aircraft cannot fly the approach at all.
pub fn all_in_view_vpl_at<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
    params: &BroadcastParams<R>,
    combo_index: usize,
) -> Result<R> {
    let geometry = GeometryMatrix::from_views(&data.views);
    let gi = data.combo_group[combo_index];
    subset_vpl_with_params(ctx, &geometry, data, 0, gi, params)?.ok_or_else(|| {
        Error::SingularGeometry {
            condition: f64::INFINITY,
        }
    })
}

/// Builds the single optimal-inflation LP.
///
/// Variables are per-satellite total variances σ_i² anchored at the given
/// group's error budget; the objective weights are the anchor group's
/// squared all-in-view vertical projections. Each unsafe (subset, combo)
/// contributes one row −Σ_j S²_j σ_j² ≤ max{−(VAL/K_ffmd)²,
/// −((VAL − max_k|S_k|·P_k·x)/K_md_eph)²}, shifted by the non-ground
/// variance difference between that combo's group and the anchor. Rows
/// whose ephemeris term alone already satisfies VAL are pre-screened and
/// dropped.
pub fn build_optimal_lp<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
    anchor_group: usize,
    p: &[R],
) -> Result<LinearProgram<R>> {
    let n = data.views.len();
    let anchor = &data.groups[anchor_group];
    let max_sq = R::of(SIGMA_PR_GND_MAX_M) * R::of(SIGMA_PR_GND_MAX_M);

    let objective: Vec<R> = data
        .aiv_eval(anchor_group)
        .s_vert
        .iter()
        .map(|s| *s * *s)
        .collect();
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for b in &anchor.budgets {
        let rest = b.rest_sq();
        lower.push(b.sigma_pr_gnd * b.sigma_pr_gnd + rest);
        upper.push(max_sq + rest);
    }
    let mut lp = LinearProgram::new(objective, lower, upper)?;

    for v in &data.verdicts {
        let gi = data.combo_group[v.combo_index];
        let group = &data.groups[gi];
        let eval = data.groups[gi].evals[v.subset_index]
            .as_ref()
            .expect("verdicts only exist for evaluable subsets");
        let members = &data.subsets[v.subset_index].members;
        let val = val_of(&v.combo, &ctx.limits);
        let x_air_m = group.x_aircraft_km * R::of(1000.0);

        let mut max_sp = R::zero();
        for (idx, &j) in members.iter().enumerate() {
            max_sp = max_sp.max(eval.s_vert[idx].abs() * p[j]);
        }
        let eph_free = val - max_sp * x_air_m;

        let t_ffmd = (val / ctx.constants.k_ffmd) * (val / ctx.constants.k_ffmd);
        let threshold = if eph_free <= R::zero() {
            continue;
        } else {
            let t_eph = (eph_free / ctx.constants.k_md_eph) * (eph_free / ctx.constants.k_md_eph);
            t_ffmd.min(t_eph)
        };

        let mut coeffs = vec![R::zero(); n];
        let mut shift = R::zero();
        for (idx, &j) in members.iter().enumerate() {
            let s_sq = eval.s_vert[idx] * eval.s_vert[idx];
            coeffs[j] = -s_sq;
            shift = shift + s_sq * (group.budgets[j].rest_sq() - anchor.budgets[j].rest_sq());
        }
        lp.add_row(&coeffs, -threshold + shift)?;
    }
    Ok(lp)
}

/// The increment-and-recheck loop shared by both LP methods.
///
/// While any unsafe (subset, group) re-checks below its binding VAL with
/// actual recomputed projections, bump one member of the first failing
/// subset by 0.02 m, taking members in ascending index order and cycling
/// across re-checks so repeated failures of a subset spread the increments
/// evenly over its satellites. Even spreading matters: the projection matrix
/// is invariant to a uniform weight rescaling, so inflating a subset's
/// members together raises its VPL nearly linearly, while concentrating on
/// one satellite just re-weights it away. Satellites already at the cap are
/// skipped. Every σ_pr_gnd moves upward only. Returns the number of
/// increments.
fn adjust<R: Real>(
    ctx: &ScreeningContext<R>,
    geometry: &GeometryMatrix<R>,
    data: &EpochData<R>,
    reqs: &[UnsafeReq<R>],
    params: &mut BroadcastParams<R>,
) -> Result<usize> {
    let n = data.views.len();
    let step = R::of(SIGMA_STEP_M);
    let cap = R::of(SIGMA_PR_GND_MAX_M);
    let headroom_tol = R::of(SIGMA_STEP_M / 4.0);
    let max_iterations = n * 300 + 16;

    // Check the deepest shortfalls first: increments spent on the hardest
    // subset lift every easier row sharing its satellites, so later checks
    // tend to pass without increments of their own.
    let mut ordered: Vec<(R, UnsafeReq<R>)> = Vec::with_capacity(reqs.len());
    for req in reqs {
        let vpl = subset_vpl_with_params(
            ctx,
            geometry,
            data,
            req.subset_index,
            req.group_index,
            params,
        )?;
        let deficit = match vpl {
            Some(v) => req.binding_val - v,
            None => R::neg_infinity(),
        };
        ordered.push((deficit, *req));
    }
    ordered.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("deficits are never NaN"));

    let mut iterations = 0usize;
    let mut cursor = n;
    loop {
        let mut failing = None;
        for (_, req) in &ordered {
            let vpl = subset_vpl_with_params(
                ctx,
                geometry,
                data,
                req.subset_index,
                req.group_index,
                params,
            )?;
            if let Some(v) = vpl {
                if v < req.binding_val {
                    failing = Some(req);
                    break;
                }
            }
        }
        let Some(req) = failing else {
            return Ok(iterations);
        };

        let members = &data.subsets[req.subset_index].members;
        let next = members
            .iter()
            .copied()
            .filter(|&j| params.sigma_pr_gnd[j] < cap - headroom_tol)
            .min_by_key(|&j| {
                let wrapped = if j > cursor { 0usize } else { 1usize };
                (wrapped, j)
            });
        let Some(j) = next else {
            return Err(Error::Unscreenable(format!(
                "subset {:?} still below VAL {} with every member at the {} m cap",
                members,
                req.binding_val.as_f64(),
                SIGMA_PR_GND_MAX_M
            )));
        };
        params.sigma_pr_gnd[j] = (params.sigma_pr_gnd[j] + step).min(cap);
        cursor = j;
        iterations += 1;
        if iterations > max_iterations {
            return Err(Error::NumericalFailure(format!(
                "adjustment exceeded {max_iterations} increments without convergence"
            )));
        }
    }
}

/// All-in-view VPL per combo plus the integrity verdict, shared by every
/// algorithm's epilogue.
fn finish<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
    params: BroadcastParams<R>,
    lp_count: usize,
    adjust_iterations: usize,
    pk_lp_infeasible: usize,
) -> Result<InflationResult<R>> {
    let geometry = GeometryMatrix::from_views(&data.views);
    let mut aiv_by_group = Vec::with_capacity(data.groups.len());
    for gi in 0..data.groups.len() {
        let vpl_aiv = subset_vpl_with_params(ctx, &geometry, data, 0, gi, &params)?
            .ok_or_else(|| Error::SingularGeometry {
                condition: f64::INFINITY,
            })?;
        aiv_by_group.push(vpl_aiv);
    }
    let all_in_view_vpl_by_combo: Vec<R> = data
        .combo_group
        .iter()
        .map(|&gi| aiv_by_group[gi])
        .collect();
    let (screened, worst_margin_m) = verify_screened(ctx, data, &params)?;
    Ok(InflationResult {
        params,
        lp_count,
        adjust_iterations,
        all_in_view_vpl_by_combo,
        screened,
        worst_margin_m,
        pk_lp_infeasible,
    })
}

/// Optimal σ_pr_gnd inflation: one LP over every unsafe (subset, combo)
/// row, σ recovery per satellite, 0.02 m quantization, then the
/// increment-and-recheck adjustment. `lp_count` is always 1.
pub fn optimal_sigma_prgnd_inflation<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
    cfg: &InflationConfig<R>,
) -> Result<InflationResult<R>> {
    let geometry = GeometryMatrix::from_views(&data.views);
    let mut params = nominal_broadcast(ctx, data);
    let anchor_group = data.combo_group[cfg.anchor_combo_index];
    let anchor = &data.groups[anchor_group];

    let lp = build_optimal_lp(ctx, data, anchor_group, &params.p)?;
    match solve(&lp)? {
        LpOutcome::Optimal { solution, .. } => {
            let nominal_cap = R::of(SIGMA_PR_GND_MAX_M);
            for (j, sigma_sq) in solution.iter().enumerate() {
                let b = &anchor.budgets[j];
                let gnd_sq = (*sigma_sq - b.rest_sq())
                    .max(b.sigma_pr_gnd * b.sigma_pr_gnd)
                    .min(nominal_cap * nominal_cap);
                params.sigma_pr_gnd[j] =
                    quantize_broadcast(gnd_sq.sqrt()).max(params.sigma_pr_gnd[j]);
            }
        }
        LpOutcome::Infeasible => {
            // Even all-cap sigmas cannot satisfy the linearized rows; let
            // the actual-projection recheck have the final word.
            log::warn!("optimal inflation LP infeasible; starting adjustment from the cap");
            for s in &mut params.sigma_pr_gnd {
                *s = R::of(SIGMA_PR_GND_MAX_M);
            }
        }
    }

    let reqs = group_requirements(ctx, data);
    let adjust_iterations = adjust(ctx, &geometry, data, &reqs, &mut params)?;
    finish(ctx, data, params, 1, adjust_iterations, 0)
}

/// σ_vig inflation: the smallest multiple of the step above the floor at
/// which every unsafe subset re-checks at VPL ≥ VAL, projections
/// recomputed at each candidate value. No LPs.
pub fn sigma_vig_inflation<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
    cfg: &InflationConfig<R>,
) -> Result<InflationResult<R>> {
    let geometry = GeometryMatrix::from_views(&data.views);
    let mut params = nominal_broadcast(ctx, data);
    let reqs = group_requirements(ctx, data);
    let floor = ctx.threat.sigma_vig_min_mmkm;

    let mut steps = 0usize;
    // Scan candidates in order; remember which requirement failed last so
    // each unsuccessful candidate is usually rejected by a single check.
    let mut probe = 0usize;
    loop {
        params.sigma_vig_mmkm = floor + cfg.sigma_vig_step_mmkm * R::of(steps as f64);
        if params.sigma_vig_mmkm > cfg.sigma_vig_ceiling_mmkm {
            return Err(Error::Unscreenable(format!(
                "sigma_vig exceeded the {} mm/km ceiling with unsafe subsets remaining",
                cfg.sigma_vig_ceiling_mmkm.as_f64()
            )));
        }
        let mut all_pass = true;
        for k in 0..reqs.len() {
            let req = &reqs[(probe + k) % reqs.len()];
            let vpl_actual = subset_vpl_with_params(
                ctx,
                &geometry,
                data,
                req.subset_index,
                req.group_index,
                &params,
            )?;
            if let Some(v) = vpl_actual {
                if v < req.binding_val {
                    probe = (probe + k) % reqs.len();
                    all_pass = false;
                    break;
                }
            }
        }
        if all_pass || reqs.is_empty() {
            break;
        }
        steps += 1;
    }
    finish(ctx, data, params, 0, steps, 0)
}

/// Targeted inflation: per combo needing work, a P_k LP over the subsets
/// whose ephemeris VPL can reach VAL through P_k at all, and a per-combo
/// σ LP over the remainder P_k cannot touch; per-satellite maxima merge
/// across combos, followed by the shared adjustment loop.
pub fn targeted_inflation<R: Real>(
    ctx: &ScreeningContext<R>,
    data: &EpochData<R>,
    cfg: &InflationConfig<R>,
) -> Result<InflationResult<R>> {
    let geometry = GeometryMatrix::from_views(&data.views);
    let mut params = nominal_broadcast(ctx, data);
    let n = data.views.len();
    let max_sq = R::of(SIGMA_PR_GND_MAX_M) * R::of(SIGMA_PR_GND_MAX_M);

    let mut by_combo: Vec<Vec<usize>> = vec![Vec::new(); ctx.combos.len()];
    for (vi, v) in data.verdicts.iter().enumerate() {
        by_combo[v.combo_index].push(vi);
    }

    let mut lp_count = 0usize;
    let mut pk_lp_infeasible = 0usize;
    let mut sigma_merge: Vec<R> = params.sigma_pr_gnd.clone();

    for (ci, combo) in ctx.combos.iter().enumerate() {
        let val = val_of(combo, &ctx.limits);
        let needing: Vec<usize> = by_combo[ci]
            .iter()
            .copied()
            .filter(|&vi| data.verdicts[vi].nominal_vpl < val)
            .collect();
        if needing.is_empty() {
            continue;
        }
        let gi = data.combo_group[ci];
        let group = &data.groups[gi];
        let x_air_m = group.x_aircraft_km * R::of(1000.0);

        // P_k LP: push every needing subset's ephemeris VPL past VAL via
        // its strongest member, minimizing the all-in-view ephemeris term.
        // Rows already held nominally are dropped; the LP is infeasible
        // whenever some subset cannot reach VAL even at the P_k ceiling.
        let aiv = data.aiv_eval(gi);
        let objective: Vec<R> = aiv.s_vert.iter().map(|s| s.abs() * x_air_m).collect();
        let mut pk_lp = LinearProgram::new(
            objective,
            vec![ctx.p_k_nominal; n],
            vec![cfg.p_k_max; n],
        )?;
        let mut p_rows = 0usize;
        for &vi in &needing {
            let v = &data.verdicts[vi];
            let eval = group.evals[v.subset_index]
                .as_ref()
                .expect("verdicts only exist for evaluable subsets");
            let members = &data.subsets[v.subset_index].members;
            let mut weighted = R::zero();
            for (idx, &j) in members.iter().enumerate() {
                weighted = weighted
                    + eval.s_vert[idx] * eval.s_vert[idx] * group.budgets[j].sigma_total_sq;
            }
            let c_u = ctx.constants.k_md_eph * weighted.sqrt();
            if val - c_u <= R::zero() {
                continue;
            }
            let (strongest_idx, strongest_s) = members
                .iter()
                .enumerate()
                .map(|(idx, _)| (idx, eval.s_vert[idx].abs()))
                .fold((0, R::zero()), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
            let mut coeffs = vec![R::zero(); n];
            coeffs[members[strongest_idx]] = -strongest_s * x_air_m;
            pk_lp.add_row(&coeffs, -(val - c_u))?;
            p_rows += 1;
        }
        if p_rows > 0 {
            lp_count += 1;
            match solve(&pk_lp)? {
                LpOutcome::Optimal { solution, .. } => {
                    for j in 0..n {
                        params.p[j] = params.p[j].max(solution[j]);
                    }
                    continue;
                }
                LpOutcome::Infeasible => {
                    // Some subset is out of the ephemeris branch's reach at
                    // this combo; leave P_k alone and let σ carry the combo.
                    pk_lp_infeasible += 1;
                }
            }
        }

        // σ LP over this combo's rows, minimizing the combo's own
        // all-in-view fault-free variance. Each combo solves from the
        // nominal floor independently; the per-satellite maximum across
        // combos is what finally lands in the broadcast.
        let combo_aiv = data.aiv_eval(gi);
        let objective: Vec<R> = combo_aiv.s_vert.iter().map(|s| *s * *s).collect();
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        for b in &group.budgets {
            let rest = b.rest_sq();
            lower.push(b.sigma_pr_gnd * b.sigma_pr_gnd + rest);
            upper.push(max_sq + rest);
        }
        let mut sigma_lp = LinearProgram::new(objective, lower, upper)?;
        for &vi in &needing {
            let v = &data.verdicts[vi];
            let eval = group.evals[v.subset_index]
                .as_ref()
                .expect("verdicts only exist for evaluable subsets");
            let members = &data.subsets[v.subset_index].members;
            let mut max_sp = R::zero();
            for (idx, &j) in members.iter().enumerate() {
                max_sp = max_sp.max(eval.s_vert[idx].abs() * params.p[j]);
            }
            let eph_free = val - max_sp * x_air_m;
            if eph_free <= R::zero() {
                continue;
            }
            let t_ffmd = (val / ctx.constants.k_ffmd) * (val / ctx.constants.k_ffmd);
            let t_eph =
                (eph_free / ctx.constants.k_md_eph) * (eph_free / ctx.constants.k_md_eph);
            let threshold = t_ffmd.min(t_eph);
            let mut coeffs = vec![R::zero(); n];
            for (idx, &j) in members.iter().enumerate() {
                coeffs[j] = -eval.s_vert[idx] * eval.s_vert[idx];
            }
            sigma_lp.add_row(&coeffs, -threshold)?;
        }
        lp_count += 1;
        match solve(&sigma_lp)? {
            LpOutcome::Optimal { solution, .. } => {
                for (j, sigma_sq) in solution.iter().enumerate() {
                    let b = &group.budgets[j];
                    let gnd_sq = (*sigma_sq - b.rest_sq())
                        .max(b.sigma_pr_gnd * b.sigma_pr_gnd)
                        .min(max_sq);
                    sigma_merge[j] = sigma_merge[j].max(gnd_sq.sqrt());
                }
            }
            LpOutcome::Infeasible => {
                log::warn!(
                    "targeted sigma LP infeasible at combo ({}, {}); deferring to the adjustment loop",
                    combo.x_dh_km.as_f64(),
                    combo.x_aircraft_km.as_f64()
                );
            }
        }
    }

    for j in 0..n {
        params.sigma_pr_gnd[j] = quantize_broadcast(sigma_merge[j]).max(params.sigma_pr_gnd[j]);
    }
    let reqs = group_requirements(ctx, data);
    let adjust_iterations = adjust(ctx, &geometry, data, &reqs, &mut params)?;
    finish(ctx, data, params, lp_count, adjust_iterations, pk_lp_infeasible)
}


#[cfg(test)]
mod debug_probe {
    use super::*;
    use crate::config::AirportConfig;
    use crate::constellation::visible_satellites;
    use crate::error_models::val_of;
    use crate::lp_solver::{solve, LpOutcome};
    use crate::screening::find_unsafe;

    #[test]
    #[ignore]
    fn debug_aiv_flag_scan() {
        let cfg_path = std::env::var("PROBE_CONFIG")
            .unwrap_or_else(|_| "/tmp/cal/sweep/galeao_ref2.toml".into());
        let airport = AirportConfig::load(std::path::Path::new(&cfg_path)).unwrap();
        let ctx = airport.screening_context(1.0).unwrap();
        let alm = airport.load_almanac().unwrap();
        let mut night = 0usize;
        let mut aiv_any = 0usize;
        let mut aiv_near_diag = 0usize;
        for minute in 0..1440 {
            let t = minute as f64 * 60.0;
            let hour = (t / 3600.0) % 24.0;
            let is_night = hour < 9.0 || hour >= 21.0;
            if !is_night {
                continue;
            }
            night += 1;
            let views = visible_satellites(
                &alm,
                &airport.site(),
                t,
                airport.site.mask_deg.to_radians(),
            )
            .unwrap();
            let data = find_unsafe(&ctx, hour, &views).unwrap();
            let mut any = false;
            let mut near = false;
            for v in &data.verdicts {
                if v.subset_index != 0 {
                    continue;
                }
                any = true;
                let dx = v.combo.x_aircraft_km - v.combo.x_dh_km;
                if dx == 0.0 && v.combo.x_aircraft_km <= 4.0 {
                    near = true;
                }
            }
            aiv_any += any as usize;
            aiv_near_diag += near as usize;
        }
        println!(
            "night epochs {night}: AIV flagged anywhere {aiv_any} ({:.1}%), at near diagonal {aiv_near_diag} ({:.1}%)",
            100.0 * aiv_any as f64 / night as f64,
            100.0 * aiv_near_diag as f64 / night as f64
        );
    }

    #[test]
    #[ignore]
    fn debug_adjust_anatomy() {
        let cfg_path = std::env::var("PROBE_CONFIG")
            .unwrap_or_else(|_| "/tmp/cal/sweep/galeao_ref2.toml".into());
        let airport = AirportConfig::load(std::path::Path::new(&cfg_path)).unwrap();
        let ctx = airport.screening_context(1.0).unwrap();
        let alm = airport.load_almanac().unwrap();
        let anchor_ci = airport.reference_combo_index().unwrap();
        let t: f64 = std::env::var("PROBE_T")
            .unwrap_or_else(|_| "720".into())
            .parse()
            .unwrap();
        let views =
            visible_satellites(&alm, &airport.site(), t, airport.site.mask_deg.to_radians())
                .unwrap();
        let data = find_unsafe(&ctx, (t / 3600.0) % 24.0, &views).unwrap();
        let nom = nominal_broadcast(&ctx, &data);
        let anchor_group = data.combo_group[anchor_ci];
        let lp = build_optimal_lp(&ctx, &data, anchor_group, &nom.p).unwrap();
        let LpOutcome::Optimal { solution, .. } = solve(&lp).unwrap() else {
            panic!("infeasible");
        };
        let anchor = &data.groups[anchor_group];
        let mut params = nom.clone();
        for (j, sigma_sq) in solution.iter().enumerate() {
            let b = &anchor.budgets[j];
            let gnd_sq = (sigma_sq - b.rest_sq())
                .max(b.sigma_pr_gnd * b.sigma_pr_gnd)
                .min(SIGMA_PR_GND_MAX_M * SIGMA_PR_GND_MAX_M);
            params.sigma_pr_gnd[j] = quantize_broadcast(gnd_sq.sqrt()).max(params.sigma_pr_gnd[j]);
        }
        let geometry = GeometryMatrix::from_views(&data.views);
        let aiv_pre = subset_vpl_with_params(&ctx, &geometry, &data, 0, anchor_group, &params)
            .unwrap()
            .unwrap();
        let reqs = group_requirements(&ctx, &data);

        let n = data.views.len();
        let mut per_req: std::collections::HashMap<(usize, usize), usize> = Default::default();
        let mut per_sat = vec![0usize; n];
        let mut iterations = 0usize;
        let mut cursor = n;
        loop {
            let mut failing = None;
            for req in &reqs {
                let vpl = subset_vpl_with_params(
                    &ctx, &geometry, &data, req.subset_index, req.group_index, &params,
                )
                .unwrap();
                if let Some(v) = vpl {
                    if v < req.binding_val {
                        failing = Some(*req);
                        break;
                    }
                }
            }
            let Some(req) = failing else { break };
            let members = &data.subsets[req.subset_index].members;
            let next = members
                .iter()
                .copied()
                .filter(|&j| params.sigma_pr_gnd[j] < 5.08 - 0.005)
                .min_by_key(|&j| {
                    let wrapped = if j > cursor { 0usize } else { 1usize };
                    (wrapped, j)
                })
                .unwrap();
            params.sigma_pr_gnd[next] += 0.02;
            cursor = next;
            *per_req.entry((req.subset_index, req.group_index)).or_default() += 1;
            per_sat[next] += 1;
            iterations += 1;
            assert!(iterations < 5000);
        }
        let aiv_post = subset_vpl_with_params(&ctx, &geometry, &data, 0, anchor_group, &params)
            .unwrap()
            .unwrap();
        println!("epoch t={t} iterations={iterations}");
        println!("anchor AIV VPL pre-adjust {aiv_pre:.3} post-adjust {aiv_post:.3}");
        let mut rows: Vec<_> = per_req.into_iter().collect();
        rows.sort_by_key(|&(_, c)| std::cmp::Reverse(c));
        for ((si, gi), count) in rows.iter().take(12) {
            let grp = &data.groups[*gi];
            let removed: Vec<usize> = (0..n)
                .filter(|j| !data.subsets[*si].members.contains(j))
                .collect();
            println!(
                "  req subset#{si} removed={removed:?} x_air={} bumps={count}",
                grp.x_aircraft_km
            );
        }
        let s_ref = data.aiv_eval(anchor_group);
        println!("per-sat bumps {per_sat:?}");
        println!(
            "anchor |S| {:?}",
            s_ref
                .s_vert
                .iter()
                .map(|x| (x.abs() * 100.0).round() / 100.0)
                .collect::<Vec<f64>>()
        );
    }
}
