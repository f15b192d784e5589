use hall_core::dynamics::emf_experiment;

use super::*;
use crate::report::{ResultEntry, Table};

pub fn run(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let spec = model_spec(c)?;
    let model = timed(r, "many-body assembly", || sector_model(c, &spec))?;
    let lat = model.lattice().clone();
    let (drive, _) = build_drive(c, &lat)?;
    let path = build_path(&lat, &c.geometry.path)?;
    let opts = dynamics_options(c)?;
    r.diag("path.closed", path.is_closed(&lat));
    r.diag("path.length", path.len());
    let rep = timed(r, "time evolution", || {
        emf_experiment(&model, &path, &drive, c.geometry.r as f64, &c.numerics.eps_ladder, &opts).at("emf experiment")
    })?;
    let mut table = Table::new("eps", &["eps", "quotient", "infidelity"]);
    for k in 0..rep.response.eps.len() {
        table.push(vec![rep.response.eps[k], rep.response.quotients[k], rep.response.infidelity[k]]);
    }
    r.tables.push(table);
    let f = &rep.response.fit;
    r.diag_f64("kappa", rep.kappa);
    r.diag_f64("emf", rep.emf);
    r.diag_f64("chi_ad", f.chi0);
    r.diag_f64("chi_ad_error_bar", f.error_bar);
    r.diag_f64("gap", rep.gap);
    r.diag_f64("norm_drift", rep.response.norm_drift);
    let ratio = rep.ratio.unwrap_or(f64::NAN);
    r.diag_f64("ratio", ratio);
    r.results.push(ResultEntry::at_most(
        "relative discrepancy |κ − χ^ad/E|/|κ|",
        (rep.kappa - ratio).abs() / rep.kappa.abs(),
        c.numerics.tolerances.emf,
    ));
    r.results.push(ResultEntry::at_most(
        "|χ^ad − κE| within the Richardson error bar",
        (f.chi0 - rep.kappa * rep.emf).abs(),
        f.error_bar,
    ));
    Ok(())
}
