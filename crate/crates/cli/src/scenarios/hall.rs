use hall_core::freefermion::{free_curvature, free_hall_equivalence, FreeCurvatureMethod};
use hall_core::response::{curvature_with_cache, hall_equivalence, CurvatureMethod, HallReport, HallSetup};
use hall_core::spectral::ground_state;

use super::*;
use crate::report::{ResultEntry, Table};

fn free_kappa(spec: &HamiltonianSpec, floor: f64) -> Stage<f64> {
    free_curvature(spec, FreeCurvatureMethod::Perturbation, floor).at("free curvature")
}

/// `|κ − χ/normaliser| / |κ|`, infinite for a vanishing normaliser.
fn relative(rep: &HallReport) -> f64 {
    rep.relative.unwrap_or(f64::INFINITY)
}

fn ratio(rep: &HallReport) -> f64 {
    rep.ratio.unwrap_or(f64::NAN)
}

/// Many-body Hall reports of the model block for several setups sharing one ground state.
fn many_body(c: &ExperimentConfig, r: &mut Report, setups: &[HallSetup]) -> Stage<Vec<HallReport>> {
    let spec = model_spec(c)?;
    let model = timed(r, "many-body assembly", || sector_model(c, &spec))?;
    let opts = spectral_options(c);
    let (xi1, xi2) = flux_forms(model.lattice())?;
    timed(r, "many-body response", || {
        let h = model.hamiltonian();
        let cache = ground_state(&h, opts.auto_mode(h.dim()), &opts).at("many-body ground state")?;
        let kappa = curvature_with_cache(&model, &cache, None, &xi1, &xi2, CurvatureMethod::Perturbation, &opts)
            .at("many-body curvature")?
            .kappa;
        setups
            .iter()
            .map(|s| hall_equivalence(&model, &cache, s, kappa).at("many-body Kubo response"))
            .collect()
    })
}

fn record_many_body(r: &mut Report, prefix: &str, rep: &HallReport) {
    r.diag_f64(&format!("{prefix}.kappa"), rep.kappa);
    r.diag_f64(&format!("{prefix}.chi"), rep.chi.re);
    r.diag_f64(&format!("{prefix}.normalizer"), rep.normalizer);
    r.diag_f64(&format!("{prefix}.ratio"), ratio(rep));
    r.diag_f64(&format!("{prefix}.relative_discrepancy"), relative(rep));
    r.diag_f64(&format!("{prefix}.gap"), rep.gap);
}

/// Bulk strip field, current across `γ_d` with `ℓ = d`, free fermions on the model block.
pub fn bulk(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let floor = c.numerics.gap_floor;
    let e = c.geometry.e;
    let spec = model_spec(c)?;
    let kappa = timed(r, "free curvature", || free_kappa(&spec, floor))?;
    r.diag_f64("kappa", kappa);
    r.diag_f64("gap", free_gap(&spec, floor)?);
    let mut table = Table::new("d", &["d", "ell", "chi", "ratio", "kappa", "discrepancy", "relative"]);
    let mut disc = Vec::new();
    for &d in &c.numerics.d_values {
        let setup = HallSetup::BulkStrip { e, ell: d, d };
        let rep = timed(r, "free Kubo response", || {
            free_hall_equivalence(&spec, &setup, kappa, floor).at("free Kubo response")
        })?;
        let dd = rep.discrepancy.unwrap_or(f64::INFINITY);
        disc.push((d, dd));
        table.push(vec![d as f64, d as f64, rep.chi.re, ratio(&rep), kappa, dd, relative(&rep)]);
    }
    r.tables.push(table);
    let f = c.numerics.tolerances.halving_factor;
    for w in disc.windows(2) {
        let ((d1, a), (d2, b)) = (w[0], w[1]);
        let expected = d2 as f64 / d1 as f64;
        r.results.push(ResultEntry::within(
            format!("O(1/d) scaling: discrepancy ratio from d={d1} to d={d2}"),
            a / b,
            expected / f,
            expected * f,
        ));
    }
    Ok(())
}

/// Free sweep over `numerics.sizes` of one Hall setup; rows `[L, N, κ, χ, ratio, relative]`.
fn free_sweep(c: &ExperimentConfig, r: &mut Report, setup: impl Fn(usize) -> HallSetup) -> Stage<Table> {
    let floor = c.numerics.gap_floor;
    let mut table = Table::new("L", &["L", "N", "kappa", "chi", "ratio", "relative"]);
    for &l in &c.numerics.sizes {
        let spec = free_family_spec(c, l)?;
        let kappa = timed(r, "free curvature", || free_kappa(&spec, floor))?;
        let rep = timed(r, "free Kubo response", || {
            free_hall_equivalence(&spec, &setup(l), kappa, floor).at("free Kubo response")
        })?;
        table.push(vec![l as f64, spec.n as f64, kappa, rep.chi.re, ratio(&rep), relative(&rep)]);
    }
    Ok(table)
}

/// Flat-flanks field of width `2ℓ`, current across `γ_{ℓ+r}`.
pub fn traverse(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let g = &c.geometry;
    let setup = HallSetup::Traversing { e: g.e, ell: g.ell, r: g.r };
    let mb = many_body(c, r, &[setup])?.remove(0);
    record_many_body(r, "many_body", &mb);
    let mb_rel = relative(&mb);
    r.results.push(ResultEntry::at_most(
        "many-body relative discrepancy |κ − χ/Δv|/|κ|",
        mb_rel,
        c.numerics.tolerances.traverse,
    ));
    let table = free_sweep(c, r, |_| setup)?;
    let rel = table.column("relative").unwrap_or_default();
    if let Some(&last) = rel.last() {
        r.results.push(ResultEntry::below(
            "free-fermion relative discrepancy at the largest size is below the many-body value",
            last,
            mb_rel,
        ));
    }
    if rel.len() >= 2 {
        r.results.push(ResultEntry::below(
            "free-fermion relative discrepancy decreases strictly with L (largest consecutive ratio)",
            max_step_ratio(&rel),
            1.0,
        ));
    }
    r.tables.push(table);
    Ok(())
}

/// Straight `γ_{ℓ+r}` against the same path detouring around a bump, both in the flat-flanks field.
pub fn deformed(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    let g = &c.geometry;
    let floor = c.numerics.gap_floor;
    let straight = HallSetup::Traversing { e: g.e, ell: g.ell, r: g.r };
    let bumped = HallSetup::Deformed {
        e: g.e,
        ell: g.ell,
        r: g.r,
        bump_half_width: g.bump.half_width,
        bump_height: g.bump.height,
    };
    match many_body(c, r, &[straight, bumped]) {
        Ok(reps) => {
            record_many_body(r, "many_body.straight", &reps[0]);
            record_many_body(r, "many_body.deformed", &reps[1]);
            let shift = (ratio(&reps[1]) - ratio(&reps[0])).abs() / reps[0].kappa.abs();
            r.diag_f64("many_body.deformation_shift", shift);
        }
        // The bump may not fit on the many-body lattice; the free sweep still runs.
        Err(e) if e.kind == "geometry" => r.diag("many_body.skipped", &e),
        Err(e) => return Err(e),
    }
    let mut table = Table::new(
        "L",
        &["L", "N", "kappa", "ratio_straight", "ratio_deformed", "relative_straight", "relative_deformed", "shift"],
    );
    for &l in &c.numerics.sizes {
        let spec = free_family_spec(c, l)?;
        let kappa = timed(r, "free curvature", || free_kappa(&spec, floor))?;
        let (a, b) = timed(r, "free Kubo response", || {
            Ok::<_, ErrorStanza>((
                free_hall_equivalence(&spec, &straight, kappa, floor).at("free Kubo response")?,
                free_hall_equivalence(&spec, &bumped, kappa, floor).at("free Kubo response")?,
            ))
        })?;
        let shift = (ratio(&b) - ratio(&a)).abs() / kappa.abs();
        table.push(vec![l as f64, spec.n as f64, kappa, ratio(&a), ratio(&b), relative(&a), relative(&b), shift]);
    }
    let rel = table.column("relative_deformed").unwrap_or_default();
    let shift = table.column("shift").unwrap_or_default();
    let tol = c.numerics.tolerances.deformed;
    if let (Some(&rl), Some(&sl)) = (rel.last(), shift.last()) {
        r.results.push(ResultEntry::at_most(
            "free-fermion deformed-path relative discrepancy |κ − χ/Δv|/|κ| at the largest size",
            rl,
            tol,
        ));
        r.results.push(ResultEntry::at_most(
            "free-fermion straight-vs-deformed shift |Δratio|/|κ| at the largest size",
            sl,
            c.numerics.tolerances.spectral,
        ));
    }
    if shift.len() >= 2 {
        r.results.push(ResultEntry::at_most(
            "free-fermion straight-vs-deformed shift is non-increasing in L (largest increase)",
            max_increase(&shift),
            c.numerics.tolerances.noise_floor,
        ));
    }
    r.tables.push(table);
    Ok(())
}
