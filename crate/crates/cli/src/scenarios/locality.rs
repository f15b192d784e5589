use hall_core::freefermion::{current_matrix, free_kubo, free_locality_probe, path_support, potential_matrix, single_particle, SlaterState};
use hall_core::response::{hall_geometry, HallSetup};
use hall_core::Error;

use super::*;
use crate::report::{ResultEntry, Table};

/// Hopping range of the Hamiltonian.
const RANGE: f64 = 1.0;

pub fn run(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let nm = &c.numerics;
    let g = &c.geometry;
    let floor = nm.gap_floor;
    let spec = model_spec(c)?;
    let lat = spec.lattice.clone();
    let l = lat.side() as f64;
    if let Some(&bad) = nm.radii.iter().find(|&&x| x > l) {
        return Err(ErrorStanza::from_core(
            "numerics.radii",
            &Error::Geometry(format!("radius {bad} exceeds the lattice side {l}")),
        ));
    }
    let geom = hall_geometry(&lat, &HallSetup::BulkStrip { e: g.e, ell: g.ell, d: g.d }).at("geometry")?;
    // The full-lattice radius closes the ladder: Z^r = Γ.
    let mut radii = nm.radii.clone();
    radii.push(l);
    let (chi, points) = timed(r, "free Kubo response", || {
        free_locality_probe(&spec, &geom.path, &geom.potential, &radii, floor).at("locality probe")
    })?;
    r.diag_f64("chi.re", chi.re);
    r.diag_f64("chi.im", chi.im);
    r.diag_f64("gap", free_gap(&spec, floor)?);
    let mut table = Table::new("r", &["r", "region_size", "chi_re", "chi_im", "discrepancy"]);
    for p in &points {
        table.push(vec![p.r, p.region_size as f64, p.chi.re, p.chi.im, p.discrepancy]);
    }
    let disc: Vec<f64> = points.iter().map(|p| p.discrepancy).collect();
    let full = *disc.last().expect("ladder includes the full radius");
    r.results.push(ResultEntry::at_most(
        "discrepancy is non-increasing in r (largest increase)",
        max_increase(&disc),
        nm.tolerances.noise_floor,
    ));
    r.results.push(ResultEntry::at_most("Z^r = Γ: discrepancy", full, nm.tolerances.exact));
    r.tables.push(table);

    // Disjoint supports: logged, not judged.
    let supp = path_support(&lat, &geom.path);
    let far = SiteFunction::from_fn(&lat, |x| {
        let d = supp.iter().map(|&y| lat.dist(x, y)).fold(f64::INFINITY, f64::min);
        if d > 2.0 * RANGE {
            1.0
        } else {
            0.0
        }
    });
    let sites = far.values().iter().filter(|&&v| v != 0.0).count();
    r.diag("disjoint.sites", sites);
    if sites > 0 {
        let st = SlaterState::new(&single_particle(&spec, None).at("free-fermion path")?, spec.n, floor).at("free-fermion path")?;
        let j = current_matrix(&spec, None, &geom.path).at("current operator")?;
        let x = free_kubo(&st, &j, &potential_matrix(&far), 0.0, 0.0).at("free Kubo response")?;
        r.diag_f64("disjoint.chi_abs", x.norm());
        r.diag_f64("disjoint.min_distance", 2.0 * RANGE);
    }
    Ok(())
}
