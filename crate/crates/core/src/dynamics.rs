//! Slow ramps of a vector potential, the time-dependent Schrödinger evolution they generate, and
//! the adiabatic response extracted from it.
//!
//! The driven family is `H_s = H_{a(s)·A}` for `s ∈ [−1, 0]`, evolved in physical time
//! `t = s/ε` with `i∂_t Ψ = H_{εt} Ψ` from the ground state at `s = −1`.


use num_complex::Complex64;
use rayon::prelude::*;

use crate::dense::{self, CVec};
use crate::error::{Error, Result};
use crate::fock::ManyBodyOperator;
use crate::forms::{integrate, standard_flux_form, OneForm};
use crate::hamiltonian::SectorModel;
use crate::lattice::{DualPath, DualVertex, SiteSet};
use crate::response::{curvature_along, validate_ladder, CurvatureMethod};
use crate::spectral::{ground_state, i_omega_commutator, krylov_expm, quasi_adiabatic_map, SpectralCache, SpectralOptions};

/// Gauss–Legendre nodes and weights on `[−1, 1]`, order 8.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// Panels of the composite quadrature over one ramp width.
const PANELS: usize = 48;

fn flat(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step `S(x) = f(x)/(f(x) + f(1−x))`, `f(x) = e^{−1/x}`: zero for `x ≤ 0`, one for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        flat(x) / (flat(x) + flat(1.0 - x))
    }
}

/// Switching profile with `a(−1) = 0`, `a'(s) = S((s+1)/w)`; flat to all orders at `s = −1`
/// and of unit slope on `[w − 1, 0]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SwitchingFunction {
    width: f64,
    /// `∫₀¹ S`, tabulated once.
    step_integral: f64,
}

impl SwitchingFunction {
    pub fn new(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::Config(format!("ramp width must lie in (0, 1], got {width}")));
        }
        Ok(SwitchingFunction {
            width,
            step_integral: Self::integrate_step(1.0),
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    fn integrate_step(x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let h = x / PANELS as f64;
        let mut acc = 0.0;
        for p in 0..PANELS {
            let mid = (p as f64 + 0.5) * h;
            for &(node, w) in &GL8 {
                acc += w * smooth_step(mid + 0.5 * h * node);
            }
        }
        acc * 0.5 * h
    }

    /// `a'(s)`.
    pub fn slope(&self, s: f64) -> f64 {
        smooth_step((s + 1.0) / self.width)
    }

    /// `a(s)`.
    pub fn amplitude(&self, s: f64) -> f64 {
        let x = (s + 1.0) / self.width;
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            self.width * self.step_integral + (s + 1.0 - self.width)
        } else {
            self.width * Self::integrate_step(x)
        }
    }
}

impl Default for SwitchingFunction {
    fn default() -> Self {
        SwitchingFunction::new(1.0).expect("default width")
    }
}

#[derive(Clone, Debug)]
pub struct DynamicsOptions {
    pub switching: SwitchingFunction,
    /// `dt = min(dt_scale/‖H‖, dt_scale)` before rounding to an integer number of steps.
    pub dt_scale: f64,
    /// Explicit time step; overrides `dt_scale`.
    pub dt: Option<f64>,
    pub krylov_dim: usize,
    pub norm_bound: f64,
    pub checkpoints: usize,
    pub spectral: SpectralOptions,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions {
            switching: SwitchingFunction::default(),
            dt_scale: 0.05,
            dt: None,
            krylov_dim: 24,
            norm_bound: 1e-8,
            checkpoints: 16,
            spectral: SpectralOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RampProtocol {
    pub drive: OneForm,
    pub eps: f64,
}

impl RampProtocol {
    pub fn new(drive: OneForm, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Config(format!("adiabatic rate must be positive, got {eps}")));
        }
        Ok(RampProtocol { drive, eps })
    }

    pub fn total_time(&self) -> f64 {
        1.0 / self.eps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub s: f64,
    pub energy: f64,
    pub observable: Option<f64>,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct AdiabaticRun {
    pub eps: f64,
    pub dt: f64,
    pub steps: usize,
    pub initial_gap: f64,
    pub state: CVec,
    pub checkpoints: Vec<Checkpoint>,
    pub norm_drift: f64,
    /// Sum of the Krylov a-posteriori error estimates over all steps.
    pub krylov_error: f64,
}

const MAGNUS_A1: f64 = (3.0 - 2.0 * 1.732_050_807_568_877_2) / 12.0;
const MAGNUS_A2: f64 = (3.0 + 2.0 * 1.732_050_807_568_877_2) / 12.0;
const GAUSS_C1: f64 = 0.5 - 1.732_050_807_568_877_2 / 6.0;
const GAUSS_C2: f64 = 0.5 + 1.732_050_807_568_877_2 / 6.0;

/// Integrates the Schrödinger equation from the ground state at `s = −1` to `s = 0`
/// with commutator-free fourth-order Magnus steps and Krylov exponentials.
pub fn propagate(
    model: &SectorModel,
    ramp: &RampProtocol,
    observable: Option<&ManyBodyOperator>,
    opts: &DynamicsOptions,
) -> Result<AdiabaticRun> {
    let sw = &opts.switching;
    let h0 = model.assemble(None);
    let cache = ground_state(&h0, opts.spectral.auto_mode(h0.dim()), &opts.spectral)?;
    let a_end = ramp.drive.scaled(sw.amplitude(0.0));
    let norm_h = h0.norm_estimate().max(model.assemble(Some(&a_end)).norm_estimate());
    let total = ramp.total_time();
    let dt_target = match opts.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::Config(format!("time step must be positive, got {dt}"))),
        None => (opts.dt_scale / norm_h.max(1e-300)).min(opts.dt_scale),
    };
    let steps = (total / dt_target).ceil().max(1.0) as usize;
    let dt = total / steps as f64;
    let every = (steps / opts.checkpoints.max(1)).max(1);
    let mut psi = cache.psi.clone();
    let mut drift: f64 = 0.0;
    let mut kerr = 0.0;
    let mut checkpoints = Vec::new();
    let record = |s: f64, psi: &[Complex64], out: &mut Vec<Checkpoint>| {
        let hs = model.assemble(Some(&ramp.drive.scaled(sw.amplitude(s))));
        out.push(Checkpoint {
            s,
            energy: dense::inner(psi, &hs.apply(psi)).re,
            observable: observable.map(|o| dense::inner(psi, &o.apply(psi)).re),
            norm: dense::norm(psi),
        });
    };
    record(-1.0, &psi, &mut checkpoints);
    for k in 0..steps {
        let t0 = -total + k as f64 * dt;
        let a1 = ramp.drive.scaled(sw.amplitude(ramp.eps * (t0 + GAUSS_C1 * dt)));
        let a2 = ramp.drive.scaled(sw.amplitude(ramp.eps * (t0 + GAUSS_C2 * dt)));
        let g_first = model.assemble_mix(&[(MAGNUS_A2, Some(&a1)), (MAGNUS_A1, Some(&a2))]);
        let g_second = model.assemble_mix(&[(MAGNUS_A1, Some(&a1)), (MAGNUS_A2, Some(&a2))]);
        let (p, e1) = krylov_expm(&g_first, &psi, dt, opts.krylov_dim);
        let (p, e2) = krylov_expm(&g_second, &p, dt, opts.krylov_dim);
        psi = p;
        kerr += e1 + e2;
        drift = drift.max((dense::norm(&psi) - 1.0).abs());
        if drift > opts.norm_bound {
            return Err(Error::StepSize {
                drift,
                bound: opts.norm_bound,
            });
        }
        if (k + 1) % every == 0 || k + 1 == steps {
            let s = if k + 1 == steps { 0.0 } else { ramp.eps * (t0 + dt) };
            record(s, &psi, &mut checkpoints);
        }
    }
    Ok(AdiabaticRun {
        eps: ramp.eps,
        dt,
        steps,
        initial_gap: cache.gap,
        state: psi,
        checkpoints,
        norm_drift: drift,
        krylov_error: kerr,
    })
}

/// Least-squares fit `χ(ε) ≈ χ₀ + c₁ε + c₂ε²` with an error bar.
#[derive(Clone, Debug, PartialEq)]
pub struct Richardson {
    pub chi0: f64,
    pub coefficients: [f64; 3],
    /// Root-mean-square fit residual; zero for three rates.
    pub residual_rms: f64,
    /// Standard error of `χ₀` propagated from the residual; zero for three rates.
    pub intercept_error: f64,
    /// Linear extrapolation through the two smallest rates.
    pub linear_chi0: f64,
    /// `RICHARDSON_COVERAGE · max(intercept_error, |chi0 − linear_chi0|)`.
    pub error_bar: f64,
}

/// Coverage factor applied to the extrapolation uncertainty.
pub const RICHARDSON_COVERAGE: f64 = 2.0;

/// Inverse of a symmetric positive-definite 3×3 matrix by Gauss–Jordan elimination with pivoting.
fn invert3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut a = [[0.0f64; 6]; 3];
    for i in 0..3 {
        a[i][..3].copy_from_slice(&m[i]);
        a[i][3 + i] = 1.0;
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        a.swap(col, piv);
        let d = a[col][col];
        for k in 0..6 {
            a[col][k] /= d;
        }
        for row in 0..3 {
            if row != col {
                let f = a[row][col];
                for k in 0..6 {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        inv[i].copy_from_slice(&a[i][3..]);
    }
    inv
}

pub fn richardson(eps: &[f64], values: &[f64]) -> Result<Richardson> {
    validate_ladder(eps)?;
    if values.len() != eps.len() {
        return Err(Error::InvalidArgument(format!("{} values for {} rates", values.len(), eps.len())));
    }
    // Normal equations in x = ε/ε_max; the intercept is unaffected by the rescaling.
    let scale = eps.iter().cloned().fold(0.0, f64::max);
    let mut normal = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&e, &v) in eps.iter().zip(values) {
        let x = e / scale;
        let basis = [1.0, x, x * x];
        for i in 0..3 {
            for j in 0..3 {
                normal[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * v;
        }
    }
    let inv = invert3(normal);
    let fit: Vec<f64> = (0..3).map(|i| (0..3).map(|j| inv[i][j] * rhs[j]).sum()).collect();
    let c = [fit[0], fit[1] / scale, fit[2] / (scale * scale)];
    let sq: f64 = eps
        .iter()
        .zip(values)
        .map(|(&e, &v)| (v - (c[0] + c[1] * e + c[2] * e * e)).powi(2))
        .sum();
    let n = eps.len();
    let residual_rms = (sq / n as f64).sqrt();
    let intercept_error = if n > 3 {
        (sq / (n - 3) as f64 * inv[0][0]).sqrt()
    } else {
        0.0
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eps[a].total_cmp(&eps[b]));
    let (i, j) = (order[0], order[1]);
    let linear_chi0 = (eps[j] * values[i] - eps[i] * values[j]) / (eps[j] - eps[i]);
    Ok(Richardson {
        chi0: c[0],
        coefficients: c,
        residual_rms,
        intercept_error,
        linear_chi0,
        error_bar: RICHARDSON_COVERAGE * intercept_error.max((c[0] - linear_chi0).abs()),
    })
}

#[derive(Clone, Debug)]
pub struct AdiabaticResponse {
    pub eps: Vec<f64>,
    /// `(⟨Ψ^ε, JΨ^ε⟩ − ⟨Ψ₀, JΨ₀⟩)/(ε a'(0))` per rate.
    pub quotients: Vec<f64>,
    /// `1 − |⟨Ψ₀, Ψ^ε⟩|²` per rate.
    pub infidelity: Vec<f64>,
    pub fit: Richardson,
    pub reference: f64,
    pub norm_drift: f64,
    pub final_gap: f64,
    pub degenerate: bool,
}

impl AdiabaticResponse {
    pub fn chi(&self) -> f64 {
        self.fit.chi0
    }
}

/// `χ^ad = lim_{ε→0} (⟨Ψ^ε, JΨ^ε⟩ − ⟨Ψ₀, JΨ₀⟩)/ε` at `s = 0`, extrapolated over the ladder.
pub fn adiabatic_response(
    model: &SectorModel,
    drive: &OneForm,
    j: &ManyBodyOperator,
    ladder: &[f64],
    opts: &DynamicsOptions,
) -> Result<AdiabaticResponse> {
    validate_ladder(ladder)?;
    let sw = &opts.switching;
    let h_end = model.assemble(Some(&drive.scaled(sw.amplitude(0.0))));
    let end = ground_state(&h_end, opts.spectral.auto_mode(h_end.dim()), &opts.spectral)?;
    let reference = end.expectation(j)?.re;
    if drive.sup_norm() == 0.0 {
        let zeros = vec![0.0; ladder.len()];
        return Ok(AdiabaticResponse {
            eps: ladder.to_vec(),
            quotients: zeros.clone(),
            infidelity: zeros.clone(),
            fit: richardson(ladder, &zeros)?,
            reference,
            norm_drift: 0.0,
            final_gap: end.gap,
            degenerate: true,
        });
    }
    let slope = sw.slope(0.0);
    let runs = ladder
        .par_iter()
        .map(|&eps| propagate(model, &RampProtocol::new(drive.clone(), eps)?, None, opts))
        .collect::<Result<Vec<_>>>()?;
    let quotients: Vec<f64> = runs
        .iter()
        .map(|r| (dense::inner(&r.state, &j.apply(&r.state)).re - reference) / (r.eps * slope))
        .collect();
    let infidelity = runs
        .iter()
        .map(|r| 1.0 - dense::inner(&end.psi, &r.state).norm_sqr())
        .collect();
    Ok(AdiabaticResponse {
        eps: ladder.to_vec(),
        fit: richardson(ladder, &quotients)?,
        quotients,
        infidelity,
        reference,
        norm_drift: runs.iter().map(|r| r.norm_drift).fold(0.0, f64::max),
        final_gap: end.gap,
        degenerate: false,
    })
}

/// Static form `χ^ad = −iω([I(K), J])` with `K = I(W)`, `W = ∂_s H_s` at `s = 0` per unit slope.
pub fn spectral_adiabatic_response(
    model: &SectorModel,
    drive: &OneForm,
    j: &ManyBodyOperator,
    opts: &DynamicsOptions,
) -> Result<(f64, SpectralCache)> {
    let sw = &opts.switching;
    let base = drive.scaled(sw.amplitude(0.0));
    let h = model.assemble(Some(&base));
    let cache = ground_state(&h, crate::spectral::SpectralMode::Full, &opts.spectral)?;
    let w = model.derivative(Some(&base), drive);
    let k = quasi_adiabatic_map(&cache, &w)?;
    let ik = quasi_adiabatic_map(&cache, &k)?;
    let value = -i_omega_commutator(&cache, &ik, j)?;
    Ok((value.re, cache))
}

/// The four sites around a dual vertex.
fn plaquette_corners(model: &SectorModel, v: DualVertex) -> SiteSet {
    let lat = model.lattice();
    [(0, 0), (1, 0), (0, 1), (1, 1)]
        .iter()
        .map(|&(da, db)| lat.site(v.a + da, v.b + db))
        .collect()
}

#[derive(Clone, Debug)]
pub struct EmfReport {
    pub kappa: f64,
    pub response: AdiabaticResponse,
    pub emf: f64,
    /// `χ^ad / E`; absent when the emf vanishes.
    pub ratio: Option<f64>,
    pub discrepancy: Option<f64>,
    pub gap: f64,
}

/// `κ` of `H_{a(0)A}` against `χ^ad_{J_γ}/E` with `E = ∫_γ A` along the right-hand companion path.
pub fn emf_experiment(
    model: &SectorModel,
    path: &DualPath,
    drive: &OneForm,
    r: f64,
    ladder: &[f64],
    opts: &DynamicsOptions,
) -> Result<EmfReport> {
    let lat = model.lattice();
    if !drive.is_vortex_free(1e-12) {
        return Err(Error::Precondition("emf drive must be vortex-free".into()));
    }
    if path.is_empty() {
        return Err(Error::MalformedPath("empty path".into()));
    }
    if !path.is_closed(lat) {
        let ends = [path.start(), path.end(lat)];
        let mut near = SiteSet::new();
        for v in ends.into_iter().flatten() {
            near.extend(lat.neighborhood(&plaquette_corners(model, v), r));
        }
        let touched: Vec<_> = drive.support().intersection(&near).map(|&s| lat.coords(s)).collect();
        if !touched.is_empty() {
            return Err(Error::Precondition(format!(
                "drive must vanish within radius {r} of the path endpoints; nonzero near {touched:?}"
            )));
        }
    }
    let emf = integrate(drive, &path.right_companion(lat))?;
    let base = drive.scaled(opts.switching.amplitude(0.0));
    let j = model.current_path(Some(&base), path)?.operator;
    let response = adiabatic_response(model, drive, &j, ladder, opts)?;
    let xi1 = standard_flux_form(lat, 1)?;
    let xi2 = standard_flux_form(lat, 2)?;
    let curv = curvature_along(model, Some(&base), &xi1, &xi2, CurvatureMethod::Perturbation, &opts.spectral)?;
    let ratio = if emf != 0.0 { Some(response.chi() / emf) } else { None };
    Ok(EmfReport {
        kappa: curv.kappa,
        discrepancy: ratio.map(|q| (curv.kappa - q).abs()),
        ratio,
        emf,
        gap: curv.gap,
        response,
    })
}

/// `1 − |⟨a, b⟩|²` for unit vectors.
pub fn infidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    1.0 - dense::inner(a, b).norm_sqr()
}
