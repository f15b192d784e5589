//! Static response coefficients: Kubo χ, adiabatic curvature κ, Chern numbers and Hall equivalences.
//!
//! `χ_{J,V}(ν) = i lim_{ε→0⁺} ∫₀^∞ ω([V(−t), J]) e^{iνt−εt} dt` is evaluated in closed form:
//! with `Δ_m = E_m − E₀`, `v_m = ⟨m|V|Ψ⟩`, `j_m = ⟨m|J|Ψ⟩`,
//! `χ(ν, ε) = −Σ_{m≥1} [conj(v_m) j_m / (Δ_m + ν + iε) + conj(j_m) v_m / (Δ_m − ν − iε)]`.
//! At `ν = 0` this is `−iω([I(V), J]) = iω([V, I(J)])`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dense::{self, CVec, I, ZERO};
use crate::error::{Error, Result};
use crate::fock::{gauge_phases, potential_operator, ManyBodyOperator};
use crate::forms::{build_strip_potential, standard_flux_form, OneForm, SiteFunction, StripVariant};
use crate::hamiltonian::{CurrentOperator, SectorModel};
use crate::lattice::{Direction, DualPath, TorusLattice};
use crate::spectral::{
    ground_state, i_omega_commutator, perturbed_state, projector_derivative_fd_on, quasi_adiabatic_map,
    SpectralCache, SpectralOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ResponseKind {
    Kubo,
    Curvature,
    Chern,
    Equivalence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResponseReport {
    pub kind: ResponseKind,
    pub value: Complex64,
    pub diagnostics: BTreeMap<String, f64>,
    pub fingerprint: String,
}

impl ResponseReport {
    pub fn new(kind: ResponseKind, value: Complex64, fingerprint: impl Into<String>) -> Self {
        ResponseReport {
            kind,
            value,
            diagnostics: BTreeMap::new(),
            fingerprint: fingerprint.into(),
        }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        self.diagnostics.insert(key.to_string(), v);
        self
    }
}

fn check_frequency(cache: &SpectralCache, nu: f64, strict: bool) -> Result<()> {
    let half = cache.gap / 2.0;
    let outside = if strict { nu.abs() >= half } else { nu.abs() > half };
    if outside || !nu.is_finite() {
        return Err(Error::FrequencyOutOfGap { nu, half_gap: half });
    }
    Ok(())
}

/// Excited-state amplitudes `⟨m|O|Ψ⟩` for `m ≥ 1`, with excitation energies `Δ_m`.
fn excitation_amplitudes(cache: &SpectralCache, o: &ManyBodyOperator) -> Result<(Vec<f64>, CVec)> {
    let full = cache.full()?;
    cache.hamiltonian.check_same(o)?;
    let c = cache.to_eigenbasis(&o.apply(&cache.psi))?;
    let delta = full.energies.iter().map(|e| e - cache.e0).collect();
    Ok((delta, c))
}

fn closed_form(cache: &SpectralCache, j: &ManyBodyOperator, v: &ManyBodyOperator, nu: f64, eps: f64) -> Result<Complex64> {
    let (delta, jm) = excitation_amplitudes(cache, j)?;
    let (_, vm) = excitation_amplitudes(cache, v)?;
    let mut acc = ZERO;
    for m in 1..delta.len() {
        let d1 = Complex64::new(delta[m] + nu, eps);
        let d2 = Complex64::new(delta[m] - nu, -eps);
        acc += vm[m].conj() * jm[m] / d1 + jm[m].conj() * vm[m] / d2;
    }
    Ok(-acc)
}

/// `χ_{J,V}(ν)` at `ε = 0`; eigenbasis sum with a full cache, reduced-resolvent solves otherwise.
pub fn kubo_resolvent(cache: &SpectralCache, j: &ManyBodyOperator, v: &ManyBodyOperator, nu: f64) -> Result<Complex64> {
    check_frequency(cache, nu, true)?;
    if cache.full.is_some() {
        return closed_form(cache, j, v, nu, 0.0);
    }
    cache.hamiltonian.check_same(j)?;
    cache.hamiltonian.check_same(v)?;
    let vpsi = v.apply(&cache.psi);
    let jpsi = j.apply(&cache.psi);
    let a = dense::inner(&vpsi, &cache.reduced_resolvent(&jpsi, nu)?);
    let b = dense::inner(&jpsi, &cache.reduced_resolvent(&vpsi, -nu)?);
    Ok(-(a + b))
}

/// `χ(ν, ε)`: the regularised time integral, evaluated in closed form.
pub fn kubo_time_integral(
    cache: &SpectralCache,
    j: &ManyBodyOperator,
    v: &ManyBodyOperator,
    nu: f64,
    eps: f64,
) -> Result<Complex64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("regulator ε must be positive, got {eps}")));
    }
    check_frequency(cache, nu, false)?;
    closed_form(cache, j, v, nu, eps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonLadder {
    pub eps: Vec<f64>,
    pub chi: Vec<Complex64>,
    pub chi0: Complex64,
    /// `|χ(ε) − χ(0)|`.
    pub deviation: Vec<f64>,
    /// `|χ(ε) − χ(0)| / ε`.
    pub constant: Vec<f64>,
    /// `max C / min C` over the ladder.
    pub constant_spread: f64,
}

pub fn validate_ladder(eps: &[f64]) -> Result<()> {
    if eps.len() < 3 {
        return Err(Error::Config(format!("ε ladder needs at least 3 rates, got {}", eps.len())));
    }
    if eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Error::Config("ε ladder entries must be positive and finite".into()));
    }
    let inc = eps.windows(2).all(|w| w[0] < w[1]);
    let dec = eps.windows(2).all(|w| w[0] > w[1]);
    if !(inc || dec) {
        return Err(Error::Config("ε ladder must be strictly monotone".into()));
    }
    Ok(())
}

pub fn kubo_epsilon_ladder(
    cache: &SpectralCache,
    j: &ManyBodyOperator,
    v: &ManyBodyOperator,
    nu: f64,
    eps: &[f64],
) -> Result<EpsilonLadder> {
    validate_ladder(eps)?;
    let chi0 = kubo_resolvent(cache, j, v, nu)?;
    let chi = eps
        .iter()
        .map(|&e| kubo_time_integral(cache, j, v, nu, e))
        .collect::<Result<Vec<_>>>()?;
    let deviation: Vec<f64> = chi.iter().map(|c| (c - chi0).norm()).collect();
    let constant: Vec<f64> = deviation.iter().zip(eps).map(|(d, e)| d / e).collect();
    let max = constant.iter().cloned().fold(f64::MIN, f64::max);
    let min = constant.iter().cloned().fold(f64::MAX, f64::min);
    Ok(EpsilonLadder {
        eps: eps.to_vec(),
        chi,
        chi0,
        deviation,
        constant,
        constant_spread: if min > 0.0 { max / min } else { f64::INFINITY },
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurvatureMethod {
    /// First-order perturbation theory through the reduced resolvent.
    Perturbation,
    /// Central differences of ground-state projectors with step `h`.
    FiniteDifference { h: f64 },
    /// `κ = iω([K₁, K₂])` with `K_j = I(∂_j H)`.
    Generators,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureResult {
    pub kappa: f64,
    /// Imaginary part of the raw `i(a − b)` combination.
    pub imag_residual: f64,
    pub gap: f64,
    /// Smallest gap met on a finite-difference stencil (equals `gap` otherwise).
    pub stencil_gap: f64,
}

/// `κ = iTr(P[∂₁P, ∂₂P])` at the base potential, differentiating along `dir1`, `dir2`.
pub fn curvature_along(
    model: &SectorModel,
    base: Option<&OneForm>,
    dir1: &OneForm,
    dir2: &OneForm,
    method: CurvatureMethod,
    opts: &SpectralOptions,
) -> Result<CurvatureResult> {
    let h0 = model.assemble(base);
    let mode = match method {
        CurvatureMethod::Generators => crate::spectral::SpectralMode::Full,
        _ => opts.auto_mode(h0.dim()),
    };
    let cache = ground_state(&h0, mode, opts)?;
    curvature_with_cache(model, &cache, base, dir1, dir2, method, opts)
}

pub fn curvature_with_cache(
    model: &SectorModel,
    cache: &SpectralCache,
    base: Option<&OneForm>,
    dir1: &OneForm,
    dir2: &OneForm,
    method: CurvatureMethod,
    opts: &SpectralOptions,
) -> Result<CurvatureResult> {
    let (raw, stencil_gap) = match method {
        CurvatureMethod::Perturbation => {
            let d1 = perturbed_state(cache, &model.derivative(base, dir1))?;
            let d2 = perturbed_state(cache, &model.derivative(base, dir2))?;
            (I * (dense::inner(&d1, &d2) - dense::inner(&d2, &d1)), cache.gap)
        }
        CurvatureMethod::FiniteDifference { h } => {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("finite-difference step must be positive, got {h}")));
            }
            let zero = OneForm::zero(model.lattice());
            let b = base.unwrap_or(&zero);
            let mut t = Vec::with_capacity(2);
            let mut min_gap = cache.gap;
            for dir in [dir1, dir2] {
                let caches: Vec<SpectralCache> = [h, -h]
                    .par_iter()
                    .map(|&s| {
                        let hs = model.assemble(Some(&b.add(&dir.scaled(s))));
                        ground_state(&hs, opts.auto_mode(hs.dim()), opts)
                    })
                    .collect::<Result<_>>()?;
                min_gap = min_gap.min(caches[0].gap).min(caches[1].gap);
                t.push(projector_derivative_fd_on(&caches[0], &caches[1], h, &cache.psi));
            }
            (I * (dense::inner(&t[0], &t[1]) - dense::inner(&t[1], &t[0])), min_gap)
        }
        CurvatureMethod::Generators => {
            let k1 = quasi_adiabatic_map(cache, &model.derivative(base, dir1))?;
            let k2 = quasi_adiabatic_map(cache, &model.derivative(base, dir2))?;
            (i_omega_commutator(cache, &k1, &k2)?, cache.gap)
        }
    };
    Ok(CurvatureResult {
        kappa: raw.re,
        imag_residual: raw.im.abs(),
        gap: cache.gap,
        stencil_gap,
    })
}

/// Curvature with respect to the standard twists `ξ₁`, `ξ₂` at zero twist.
pub fn adiabatic_curvature(model: &SectorModel, method: CurvatureMethod, opts: &SpectralOptions) -> Result<CurvatureResult> {
    let lattice = model.lattice();
    let xi1 = standard_flux_form(lattice, 1)?;
    let xi2 = standard_flux_form(lattice, 2)?;
    curvature_along(model, None, &xi1, &xi2, method, opts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeCheck {
    pub kappa: f64,
    pub kappa_prime: f64,
    pub discrepancy: f64,
}

/// Curvature for twist directions `ξ_j` and `ξ_j + dθ_j`.
pub fn curvature_gauge_check(
    model: &SectorModel,
    theta1: &SiteFunction,
    theta2: &SiteFunction,
    method: CurvatureMethod,
    opts: &SpectralOptions,
) -> Result<GaugeCheck> {
    let lattice = model.lattice();
    let xi1 = standard_flux_form(lattice, 1)?;
    let xi2 = standard_flux_form(lattice, 2)?;
    let d1 = xi1.add(&crate::forms::exterior_derivative(theta1));
    let d2 = xi2.add(&crate::forms::exterior_derivative(theta2));
    let h0 = model.hamiltonian();
    let mode = match method {
        CurvatureMethod::Generators => crate::spectral::SpectralMode::Full,
        _ => opts.auto_mode(h0.dim()),
    };
    let cache = ground_state(&h0, mode, opts)?;
    let k = curvature_with_cache(model, &cache, None, &xi1, &xi2, method, opts)?.kappa;
    let kp = curvature_with_cache(model, &cache, None, &d1, &d2, method, opts)?.kappa;
    Ok(GaugeCheck {
        kappa: k,
        kappa_prime: kp,
        discrepancy: (k - kp).abs(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChernResult {
    pub value: i64,
    pub raw: f64,
    pub rounding_distance: f64,
    pub min_gap: f64,
    pub grid: usize,
}

/// Plaquette link-variable sum `C = −(1/2π) Σ arg(U₁U₂U₁*U₂*)` from per-plaquette link products.
pub fn plaquette_chern(m: usize, link1: &[Complex64], link2: &[Complex64]) -> f64 {
    let idx = |i: usize, j: usize| (i % m) * m + (j % m);
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let w = link1[idx(i, j)] * link2[idx(i + 1, j)] * link1[idx(i, j + 1)].conj() * link2[idx(i, j)].conj();
            total += w.arg();
        }
    }
    -total / (2.0 * PI)
}

/// Ground-state Chern number on an `M × M` grid over the flux torus `[0, 2π)²`.
pub fn chern_number(model: &SectorModel, m: usize, opts: &SpectralOptions) -> Result<ChernResult> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("Chern grid needs M ≥ 2, got {m}")));
    }
    let lattice = model.lattice().clone();
    let points: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let step = 2.0 * PI / m as f64;
    let relaxed = SpectralOptions { gap_floor: 0.0, ..*opts };
    let states: Vec<Result<(CVec, f64)>> = points
        .par_iter()
        .map(|&(i, j)| {
            let h = model.twist(i as f64 * step, j as f64 * step);
            let c = ground_state(&h, relaxed.auto_mode(h.dim()), &relaxed)?;
            Ok((c.psi, c.gap))
        })
        .collect();
    let states = states.into_iter().collect::<Result<Vec<_>>>()?;
    let min_gap = states.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let closed: Vec<(usize, usize)> = points
        .iter()
        .zip(&states)
        .filter(|(_, s)| !(s.1 > opts.gap_floor))
        .map(|(p, _)| *p)
        .collect();
    if !closed.is_empty() {
        return Err(Error::GapClosure { points: closed, min_gap });
    }
    let l = lattice.side() as f64;
    let wrap_phase = |dir: u8| {
        let theta = SiteFunction::from_fn(&lattice, |s| {
            let (x1, x2) = lattice.coords(s);
            2.0 * PI * if dir == 1 { x1 } else { x2 } as f64 / l
        });
        gauge_phases(model.basis(), &theta)
    };
    let u1 = wrap_phase(1);
    let u2 = wrap_phase(2);
    let shifted = |psi: &[Complex64], u: &[Complex64]| -> CVec { psi.iter().zip(u).map(|(a, b)| a * b).collect() };
    let at = |i: usize, j: usize| &states[i * m + j].0;
    let mut link1 = vec![ZERO; m * m];
    let mut link2 = vec![ZERO; m * m];
    for i in 0..m {
        for j in 0..m {
            let here = at(i, j);
            let next1 = if i + 1 < m { at(i + 1, j).clone() } else { shifted(at(0, j), &u1) };
            let next2 = if j + 1 < m { at(i, j + 1).clone() } else { shifted(at(i, 0), &u2) };
            link1[i * m + j] = dense::inner(here, &next1);
            link2[i * m + j] = dense::inner(here, &next2);
        }
    }
    // Links across the seam are computed from the grid side that owns them; the plaquette sum
    // then wraps indices periodically.
    let raw = plaquette_chern(m, &link1, &link2);
    let value = raw.round();
    Ok(ChernResult {
        value: value as i64,
        raw,
        rounding_distance: (raw - value).abs(),
        min_gap,
        grid: m,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HallSetup {
    /// `γ_d` in a bulk strip potential `dv = E dx₁` on `|x₁| ≤ ℓ`, normaliser `2Ed`.
    BulkStrip { e: f64, ell: usize, d: usize },
    /// `γ_{ℓ+r}` with flat flanks of width `2r`, normaliser `Δv = 2ℓE`.
    Traversing { e: f64, ell: usize, r: usize },
    /// Flat-flanks potential with a boundary sub-path carrying a rectangular bump.
    Deformed {
        e: f64,
        ell: usize,
        r: usize,
        bump_half_width: usize,
        bump_height: usize,
    },
}

impl HallSetup {
    pub fn name(&self) -> &'static str {
        match self {
            HallSetup::BulkStrip { .. } => "bulk-strip",
            HallSetup::Traversing { .. } => "traversing",
            HallSetup::Deformed { .. } => "deformed",
        }
    }

    pub fn field(&self) -> f64 {
        match *self {
            HallSetup::BulkStrip { e, .. } | HallSetup::Traversing { e, .. } | HallSetup::Deformed { e, .. } => e,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HallGeometry {
    pub path: DualPath,
    pub potential: SiteFunction,
    pub normalizer: f64,
}

/// Deformed sub-path from `(−d+½, ½)` to `(d+½, ½)` detouring around `{|x₁| ≤ b, 1 ≤ x₂ ≤ h}`.
pub fn bump_path(lattice: &TorusLattice, d: usize, b: usize, h: usize) -> Result<DualPath> {
    if b + 1 > d || h == 0 {
        return Err(Error::Geometry(format!("bump (b={b}, h={h}) does not fit inside a path of half-length {d}")));
    }
    if h + 2 > lattice.side() || 2 * d > lattice.side() {
        return Err(Error::Geometry(format!("bump path (d={d}, h={h}) overflows L={}", lattice.side())));
    }
    let mut steps = Vec::new();
    steps.extend(std::iter::repeat(Direction::East).take(d - b - 1));
    steps.extend(std::iter::repeat(Direction::North).take(h));
    steps.extend(std::iter::repeat(Direction::East).take(2 * b + 1));
    steps.extend(std::iter::repeat(Direction::South).take(h));
    steps.extend(std::iter::repeat(Direction::East).take(d - b));
    Ok(DualPath::from_steps(lattice, (-(d as i64), 0), &steps))
}

pub fn hall_geometry(lattice: &TorusLattice, setup: &HallSetup) -> Result<HallGeometry> {
    match *setup {
        HallSetup::BulkStrip { e, ell, d } => {
            if d == 0 || d > ell {
                return Err(Error::Geometry(format!("bulk-strip needs 1 ≤ d ≤ ℓ, got d={d}, ℓ={ell}")));
            }
            let strip = build_strip_potential(lattice, e, ell, 0, StripVariant::Bulk)?;
            Ok(HallGeometry {
                path: DualPath::horizontal_segment(lattice, d),
                potential: strip.v,
                normalizer: 2.0 * e * d as f64,
            })
        }
        HallSetup::Traversing { e, ell, r } => {
            let strip = build_strip_potential(lattice, e, ell, r, StripVariant::FlatFlanks)?;
            Ok(HallGeometry {
                path: DualPath::horizontal_segment(lattice, ell + r),
                potential: strip.v,
                normalizer: strip.delta_v,
            })
        }
        HallSetup::Deformed {
            e,
            ell,
            r,
            bump_half_width,
            bump_height,
        } => {
            let strip = build_strip_potential(lattice, e, ell, r, StripVariant::FlatFlanks)?;
            let path = bump_path(lattice, ell + r, bump_half_width, bump_height)?;
            let first = path.edges()[0].right_site(lattice);
            let last = path.edges()[path.len() - 1].right_site(lattice);
            let dv = strip.v.get(last) - strip.v.get(first);
            Ok(HallGeometry {
                path,
                potential: strip.v,
                normalizer: dv,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HallReport {
    pub setup: &'static str,
    pub kappa: f64,
    pub chi: Complex64,
    pub normalizer: f64,
    /// `None` for a degenerate drive (vanishing normaliser).
    pub ratio: Option<f64>,
    pub discrepancy: Option<f64>,
    pub relative: Option<f64>,
    pub gap: f64,
}

impl HallReport {
    pub fn from_parts(setup: &HallSetup, kappa: f64, chi: Complex64, normalizer: f64, gap: f64) -> Self {
        let ratio = if normalizer != 0.0 { Some(chi.re / normalizer) } else { None };
        let discrepancy = ratio.map(|r| (kappa - r).abs());
        let relative = discrepancy.map(|d| if kappa != 0.0 { d / kappa.abs() } else { f64::INFINITY });
        HallReport {
            setup: setup.name(),
            kappa,
            chi,
            normalizer,
            ratio,
            discrepancy,
            relative,
            gap,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.ratio.is_none()
    }
}

/// Many-body Hall equivalence: `κ` against `χ_{J_γ, ⟨v, n⟩}(0) / normaliser`.
pub fn hall_equivalence(
    model: &SectorModel,
    cache: &SpectralCache,
    setup: &HallSetup,
    kappa: f64,
) -> Result<HallReport> {
    let geom = hall_geometry(model.lattice(), setup)?;
    let j: CurrentOperator = model.current_path(None, &geom.path)?;
    let v = potential_operator(model.basis(), &geom.potential);
    let chi = kubo_resolvent(cache, &j.operator, &v, 0.0)?;
    Ok(HallReport::from_parts(setup, kappa, chi, geom.normalizer, cache.gap))
}
