use hall_core::dynamics::{adiabatic_response, richardson, spectral_adiabatic_response, Richardson, RICHARDSON_COVERAGE};
use hall_core::fock::potential_operator;
use hall_core::response::kubo_resolvent;
use hall_core::Error;

use super::*;
use crate::report::{ResultEntry, Table};

/// Descending union of two ladders.
fn union(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(|x, y| y.total_cmp(x));
    all.dedup();
    all
}

fn subset_fit(all: &[f64], quotients: &[f64], ladder: &[f64], key: &str) -> Stage<Richardson> {
    let mut sorted = ladder.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let q: Vec<f64> = sorted
        .iter()
        .map(|e| quotients[all.iter().position(|x| x == e).expect("ladder entry is in the union")])
        .collect();
    richardson(&sorted, &q).at(key)
}

fn record_fit(r: &mut Report, prefix: &str, f: &Richardson) {
    r.diag_f64(&format!("{prefix}.chi0"), f.chi0);
    r.diag_f64(&format!("{prefix}.error_bar"), f.error_bar);
    r.diag_f64(&format!("{prefix}.intercept_error"), f.intercept_error);
    r.diag_f64(&format!("{prefix}.linear_chi0"), f.linear_chi0);
    r.diag_f64(&format!("{prefix}.residual_rms"), f.residual_rms);
}

pub fn run(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let nm = &c.numerics;
    let spec = model_spec(c)?;
    let model = timed(r, "many-body assembly", || sector_model(c, &spec))?;
    let lat = model.lattice().clone();
    let (drive, theta) = build_drive(c, &lat)?;
    let theta = theta.ok_or_else(|| {
        ErrorStanza::from_core(
            "geometry.drive",
            &Error::Precondition("the adiabatic-Kubo comparison needs a globally exact drive A = dθ".into()),
        )
    })?;
    let path = build_path(&lat, &c.geometry.path)?;
    let opts = dynamics_options(c)?;
    let base = drive.scaled(opts.switching.amplitude(0.0));
    let j = model.current_path(Some(&base), &path).at("current operator")?.operator;

    let (spectral, cache) = timed(r, "spectral adiabatic response", || {
        spectral_adiabatic_response(&model, &drive, &j, &opts).at("spectral adiabatic response")
    })?;
    let v = potential_operator(model.basis(), &theta);
    let kubo = kubo_resolvent(&cache, &j, &v, 0.0).at("Kubo response")?.re;
    r.diag_f64("kubo", kubo);
    r.diag_f64("spectral_adiabatic", spectral);
    r.diag_f64("gap", cache.gap);
    r.diag_f64("switching.amplitude_at_0", opts.switching.amplitude(0.0));
    r.diag_f64("switching.slope_at_0", opts.switching.slope(0.0));
    r.diag_f64("richardson.coverage_factor", RICHARDSON_COVERAGE);
    r.results.push(ResultEntry::at_most(
        "static adiabatic formula −iω([I(I(W)),J]) equals the Kubo response",
        (spectral - kubo).abs(),
        nm.tolerances.spectral,
    ));

    let all = union(&nm.eps_ladder, &nm.refined_ladder);
    let run = timed(r, "time evolution", || adiabatic_response(&model, &drive, &j, &all, &opts).at("time evolution"))?;
    r.diag_f64("norm_drift", run.norm_drift);
    let mut table = Table::new("eps", &["eps", "quotient", "infidelity"]);
    for k in 0..all.len() {
        table.push(vec![all[k], run.quotients[k], run.infidelity[k]]);
    }
    r.tables.push(table);

    let coarse = subset_fit(&all, &run.quotients, &nm.eps_ladder, "numerics.eps_ladder")?;
    let fine = subset_fit(&all, &run.quotients, &nm.refined_ladder, "numerics.refined_ladder")?;
    record_fit(r, "coarse", &coarse);
    record_fit(r, "refined", &fine);
    r.results.push(ResultEntry::at_most(
        "coarse ladder: |χ^ad − χ_Kubo| within the Richardson error bar",
        (coarse.chi0 - kubo).abs(),
        coarse.error_bar,
    ));
    r.results.push(ResultEntry::at_most(
        "refined ladder: |χ^ad − χ_Kubo| within the Richardson error bar",
        (fine.chi0 - kubo).abs(),
        fine.error_bar,
    ));
    r.results.push(ResultEntry::below(
        "error bar shrinks under ladder refinement (refined/coarse)",
        fine.error_bar / coarse.error_bar,
        1.0,
    ));
    Ok(())
}
