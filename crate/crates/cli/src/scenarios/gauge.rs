use hall_core::freefermion::free_gauge_check;
use hall_core::response::{curvature_with_cache, CurvatureMethod};
use hall_core::spectral::ground_state;

use super::*;
use crate::report::{ResultEntry, Table};

/// `(θ₁, θ₂)` of sample `k`.
fn sample(lat: &TorusLattice, seed: u64, k: usize, amp: f64) -> (SiteFunction, SiteFunction) {
    let s = seed.wrapping_add(2 * k as u64);
    (random_sites(lat, s, amp), random_sites(lat, s + 1, amp))
}

fn constant(lat: &TorusLattice, v: f64) -> SiteFunction {
    SiteFunction::from_fn(lat, |_| v)
}

/// `|κ(ξ + dθ) − κ(ξ)|` for each pair, sharing one ground state.
fn many_body_discrepancies(
    c: &ExperimentConfig,
    spec: &HamiltonianSpec,
    pairs: &[(SiteFunction, SiteFunction)],
) -> Stage<(f64, f64, Vec<f64>)> {
    let model = sector_model(c, spec)?;
    let opts = spectral_options(c);
    let (xi1, xi2) = flux_forms(model.lattice())?;
    let h = model.hamiltonian();
    let cache = ground_state(&h, opts.auto_mode(h.dim()), &opts).at("many-body ground state")?;
    let m = CurvatureMethod::Perturbation;
    let kappa = curvature_with_cache(&model, &cache, None, &xi1, &xi2, m, &opts).at("many-body curvature")?.kappa;
    let disc = pairs
        .iter()
        .map(|(t1, t2)| {
            let d1 = xi1.add(&exterior_derivative(t1));
            let d2 = xi2.add(&exterior_derivative(t2));
            let kp = curvature_with_cache(&model, &cache, None, &d1, &d2, m, &opts).at("many-body curvature")?.kappa;
            Ok((kp - kappa).abs())
        })
        .collect::<Stage<Vec<_>>>()?;
    Ok((kappa, cache.gap, disc))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn run(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let nm = &c.numerics;
    let floor = nm.gap_floor;
    let amp = nm.theta_amplitude;

    // dθ = 0: constant θ leaves the twist directions unchanged.
    let spec = model_spec(c)?;
    let lat = spec.lattice.clone();
    let consts = vec![(constant(&lat, 0.7), constant(&lat, -1.3)), (constant(&lat, 2.0), constant(&lat, 0.0))];
    let (_, _, exact) = timed(r, "many-body curvature", || many_body_discrepancies(c, &spec, &consts))?;
    let exact_max = exact.iter().cloned().fold(0.0, f64::max);
    r.results.push(ResultEntry::at_most(
        "constant θ (dθ = 0): many-body |κ' − κ|",
        exact_max,
        nm.tolerances.exact,
    ));

    let mut mb = Table::new("many_body_L", &["L", "N", "kappa", "gap", "mean_discrepancy", "max_discrepancy"]);
    for &l in &nm.many_body_sizes {
        let spec = family_spec(c, l)?;
        let lat = spec.lattice.clone();
        let pairs: Vec<_> = (0..nm.samples).map(|k| sample(&lat, nm.seed, k, amp)).collect();
        let (kappa, gap, disc) = timed(r, "many-body curvature", || many_body_discrepancies(c, &spec, &pairs))?;
        let max = disc.iter().cloned().fold(0.0, f64::max);
        mb.push(vec![l as f64, spec.n as f64, kappa, gap, mean(&disc), max]);
    }
    let mb_mean = mb.column("mean_discrepancy").unwrap_or_default();
    if mb_mean.len() >= 2 {
        r.results.push(ResultEntry::below(
            "many-body mean random-θ discrepancy decreases with L (largest consecutive ratio)",
            max_step_ratio(&mb_mean),
            1.0,
        ));
    }
    r.tables.push(mb);

    let mut free = Table::new("free_L", &["L", "N", "kappa", "mean_discrepancy", "max_discrepancy"]);
    let mut free_exact: f64 = 0.0;
    for &l in &nm.sizes {
        let spec = free_family_spec(c, l)?;
        let lat = spec.lattice.clone();
        let (disc, kappa) = timed(r, "free curvature", || {
            let mut kappa = f64::NAN;
            let disc = (0..nm.samples)
                .map(|k| {
                    let (t1, t2) = sample(&lat, nm.seed, k, amp);
                    let g = free_gauge_check(&spec, &t1, &t2, floor).at("free curvature")?;
                    kappa = g.kappa;
                    Ok(g.discrepancy)
                })
                .collect::<Stage<Vec<_>>>()?;
            let g = free_gauge_check(&spec, &constant(&lat, 0.7), &constant(&lat, -1.3), floor).at("free curvature")?;
            free_exact = free_exact.max(g.discrepancy);
            Ok::<_, ErrorStanza>((disc, kappa))
        })?;
        let max = disc.iter().cloned().fold(0.0, f64::max);
        free.push(vec![l as f64, spec.n as f64, kappa, mean(&disc), max]);
    }
    r.results.push(ResultEntry::at_most(
        "constant θ (dθ = 0): free-fermion |κ' − κ|",
        free_exact,
        nm.tolerances.exact,
    ));
    let free_mean = free.column("mean_discrepancy").unwrap_or_default();
    if free_mean.len() >= 2 {
        let (first, last) = (free_mean[0], free_mean[free_mean.len() - 1]);
        r.results.push(ResultEntry::below(
            "free-fermion mean random-θ discrepancy decreases from the smallest to the largest L (ratio)",
            last / first,
            1.0,
        ));
        // The single-flux-quantum gap closes like 1/L², so step-wise monotonicity is not expected.
        r.diag_f64("free.largest_consecutive_ratio", max_step_ratio(&free_mean));
    }
    r.tables.push(free);
    Ok(())
}
