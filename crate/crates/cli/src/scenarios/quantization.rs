use std::f64::consts::PI;

use hall_core::freefermion::{band_chern, free_curvature, FreeCurvatureMethod};
use hall_core::response::{chern_number, curvature_with_cache, CurvatureMethod};
use hall_core::spectral::ground_state;
use hall_core::Error;

use super::*;
use crate::report::{ResultEntry, Table};

/// Chern integer of the lowest `bands` bands at flux `p/q`.
fn oracle(p: i64, q: usize, bands: usize, grid: usize) -> Stage<(i64, f64)> {
    let mut total = 0;
    let mut min_gap = f64::INFINITY;
    for b in 0..bands {
        let bc = band_chern(p, q, b, grid).at("band Chern oracle")?;
        total += bc.value;
        min_gap = min_gap.min(bc.min_gap_above);
    }
    Ok((total, min_gap))
}

pub fn run(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let nm = &c.numerics;
    let floor = nm.gap_floor;
    let tol = nm.tolerances.quantization;

    let mut table = Table::new("L", &["L", "N", "chern_oracle", "kappa", "two_pi_kappa", "deviation", "gap"]);
    let mut deviations = Vec::new();
    for &l in &nm.sizes {
        let (p, q, _) = family_point(c, l)?;
        let (n_int, _) = timed(r, "band oracle", || oracle(p, q, nm.filled_bands, nm.band_grid))?;
        let spec = free_family_spec(c, l)?;
        let kappa = timed(r, "free curvature", || {
            free_curvature(&spec, FreeCurvatureMethod::Perturbation, floor).at("free curvature")
        })?;
        let gap = free_gap(&spec, floor)?;
        let dev = (2.0 * PI * kappa - n_int as f64).abs();
        deviations.push(dev);
        table.push(vec![l as f64, spec.n as f64, n_int as f64, kappa, 2.0 * PI * kappa, dev, gap]);
    }
    r.tables.push(table);
    if deviations.len() >= 2 {
        r.results.push(ResultEntry::below(
            "free-fermion |2πκ − n| decreases monotonically with L (largest consecutive ratio)",
            max_step_ratio(&deviations),
            1.0,
        ));
    }

    // Many-body instance of the model block.
    let m = &c.model;
    let (p, q) = (m.flux.p, m.flux.q);
    let cells = m.l * m.l;
    if (m.n * q) % cells != 0 || m.n * q / cells == 0 || m.n * q / cells >= q {
        return Err(ErrorStanza::from_core(
            "model.n",
            &Error::Precondition(format!(
                "N = {} does not fill whole bands at flux {p}/{q} on L = {}",
                m.n, m.l
            )),
        ));
    }
    let bands = m.n * q / cells;
    let (n_int, band_gap) = oracle(p, q, bands, nm.band_grid)?;
    r.diag("many_body.chern_oracle", n_int);
    r.diag_f64("many_body.band_gap_above", band_gap);

    let spec = model_spec(c)?;
    let model = timed(r, "many-body assembly", || sector_model(c, &spec))?;
    let opts = spectral_options(c);
    let (xi1, xi2) = flux_forms(model.lattice())?;
    let curv = timed(r, "many-body curvature", || {
        let h = model.hamiltonian();
        let cache = ground_state(&h, opts.auto_mode(h.dim()), &opts).at("many-body ground state")?;
        curvature_with_cache(&model, &cache, None, &xi1, &xi2, CurvatureMethod::Perturbation, &opts)
            .at("many-body curvature")
    })?;
    r.diag_f64("many_body.kappa", curv.kappa);
    r.diag_f64("many_body.two_pi_kappa", 2.0 * PI * curv.kappa);
    r.diag_f64("many_body.gap", curv.gap);
    r.diag("many_body.dim", model.dim());
    r.results.push(ResultEntry::at_most(
        "many-body |2πκ − n|",
        (2.0 * PI * curv.kappa - n_int as f64).abs(),
        tol,
    ));

    if nm.chern_grid >= 2 {
        let ch = timed(r, "many-body Chern number", || chern_number(&model, nm.chern_grid, &opts).at("many-body Chern number"))?;
        r.diag("many_body.chern_number", ch.value);
        r.diag_f64("many_body.chern_raw", ch.raw);
        r.diag_f64("many_body.chern_min_gap", ch.min_gap);
        r.results.push(ResultEntry::at_most(
            "many-body Chern number equals the band oracle (|C − n|)",
            (ch.value - n_int).abs() as f64,
            0.0,
        ));
    }
    Ok(())
}
