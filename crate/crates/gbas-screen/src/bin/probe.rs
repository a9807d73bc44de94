use gbas_core::config::AirportConfig;
use gbas_core::constellation::visible_satellites;
use gbas_core::inflation::*;
use gbas_core::screening::find_unsafe;

fn main() {
    let cfg_path = std::env::args()
        .nth(1)
        .unwrap_or("data/airports/galeao.toml".into());
    let t: f64 = std::env::args()
        .nth(2)
        .unwrap_or("0".into())
        .parse()
        .unwrap();
    let airport = AirportConfig::load(std::path::Path::new(&cfg_path)).unwrap();
    let ctx = airport.screening_context(1.0).unwrap();
    let icfg = airport.inflation_config().unwrap();
    let alm = airport.load_almanac().unwrap();
    let mask = airport.site.mask_deg.to_radians();

    let views = visible_satellites(&alm, &airport.site(), t, mask).unwrap();
    let hour = (t / 3600.0) % 24.0;
    let data = find_unsafe(&ctx, hour, &views).unwrap();
    let nom = nominal_broadcast(&ctx, &data);
    let n = data.views.len();
    println!("t={t} n_sats={n} subsets={}", data.subsets.len());

    let anchor_gi = data.combo_group[icfg.anchor_combo_index];
    let anchor = &data.groups[anchor_gi];
    let s_ref = data.aiv_eval(anchor_gi);
    let anchor_nom_x: f64 = (0..n)
        .map(|j| {
            s_ref.s_vert[j] * s_ref.s_vert[j]
                * (nom.sigma_pr_gnd[j] * nom.sigma_pr_gnd[j] + anchor.budgets[j].rest_sq())
        })
        .sum();
    let val0 = 10.0f64;
    let k_ffmd = ctx.constants.k_ffmd;
    let k_md_eph = ctx.constants.k_md_eph;
    let t_anchor = (val0 / k_ffmd) * (val0 / k_ffmd);
    println!(
        "anchor x_air={} nominal VPL={:.3} X={anchor_nom_x:.3} limit X={t_anchor:.3} slack={:.3}",
        anchor.x_aircraft_km,
        s_ref.nominal_vpl,
        t_anchor - anchor_nom_x
    );
    println!(
        "anchor S^2: {:?}",
        (0..n)
            .map(|j| (s_ref.s_vert[j] * s_ref.s_vert[j] * 1000.0).round() / 1000.0)
            .collect::<Vec<f64>>()
    );

    let reqs = group_requirements(&ctx, &data);
    println!("requirements: {}", reqs.len());
    for req in &reqs {
        let grp = &data.groups[req.group_index];
        let members = &data.subsets[req.subset_index].members;
        let removed: Vec<usize> = (0..n).filter(|j| !members.contains(j)).collect();
        let Some(eval) = grp.evals[req.subset_index].as_ref() else {
            continue;
        };
        let x_air_m = grp.x_aircraft_km * 1000.0;
        let x_nom: f64 = members
            .iter()
            .enumerate()
            .map(|(r, &j)| {
                eval.s_vert[r] * eval.s_vert[r]
                    * (nom.sigma_pr_gnd[j] * nom.sigma_pr_gnd[j] + grp.budgets[j].rest_sq())
            })
            .sum();
        let t_ffmd = (req.binding_val / k_ffmd) * (req.binding_val / k_ffmd);
        let max_sp = members
            .iter()
            .enumerate()
            .map(|(r, &j)| eval.s_vert[r].abs() * nom.p[j])
            .fold(0.0f64, f64::max);
        let eph_free = req.binding_val - max_sp * x_air_m;
        let t_row = if eph_free <= 0.0 {
            0.0
        } else {
            let te = (eph_free / k_md_eph) * (eph_free / k_md_eph);
            t_ffmd.min(te)
        };
        let need = t_row - x_nom;
        if need <= 0.0 {
            continue;
        }
        // Cheapest single-satellite placement, measured in anchor X added.
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (r, &j) in members.iter().enumerate() {
            let s2 = eval.s_vert[r] * eval.s_vert[r];
            if s2 <= 1e-12 {
                continue;
            }
            let gnd_cap = 5.08f64 * 5.08 - nom.sigma_pr_gnd[j] * nom.sigma_pr_gnd[j];
            if need / s2 > gnd_cap {
                continue;
            }
            let anchor_cost = s_ref.s_vert[j] * s_ref.s_vert[j] * (need / s2);
            if anchor_cost < best {
                best = anchor_cost;
                best_j = j;
            }
        }
        println!(
            "  subset#{:<3} removed={removed:?} x_air={} bind={:.1} nomVPL={:.2} X_nom={x_nom:.3} t_row={t_row:.3} need={need:.3} cheapest_anchor_cost={best:.3} via sat{best_j}",
            req.subset_index,
            grp.x_aircraft_km,
            req.binding_val,
            eval.nominal_vpl,
        );
    }
}
