//! Scenario pipelines. Each writes results, diagnostics and tables into a [`Report`].

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use hall_core::dynamics::{DynamicsOptions, SwitchingFunction};
use hall_core::fock::SectorBasis;
use hall_core::forms::{exterior_derivative, standard_flux_form, OneForm, SiteFunction};
use hall_core::freefermion::{single_particle, SlaterState};
use hall_core::hamiltonian::{HamiltonianSpec, SectorModel};
use hall_core::lattice::{Direction, DualPath, TorusLattice};
use hall_core::spectral::SpectralOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{DriveSpec, ExperimentConfig, Family, PathSpec, Scenario};
use crate::report::{ErrorStanza, Report};

mod adiabatic;
mod emf;
mod gauge;
mod hall;
mod limits;
mod locality;
mod quantization;

pub type Stage<T> = Result<T, ErrorStanza>;

pub trait StageExt<T> {
    fn at(self, stage: &str) -> Stage<T>;
}

impl<T> StageExt<T> for hall_core::Result<T> {
    fn at(self, stage: &str) -> Stage<T> {
        self.map_err(|e| ErrorStanza::from_core(stage, &e))
    }
}

pub fn dispatch(c: &ExperimentConfig, r: &mut Report) -> Stage<()> {
    match c.scenario {
        Scenario::Quantization => quantization::run(c, r),
        Scenario::KuboVsCurvatureBulk => hall::bulk(c, r),
        Scenario::KuboVsCurvatureTraverse => hall::traverse(c, r),
        Scenario::KuboVsCurvatureDeformed => hall::deformed(c, r),
        Scenario::AdiabaticVsKubo => adiabatic::run(c, r),
        Scenario::Emf => emf::run(c, r),
        Scenario::GaugeInvariance => gauge::run(c, r),
        Scenario::LimitCommutation => limits::run(c, r),
        Scenario::Locality => locality::run(c, r),
    }
}

/// Runs `f` and records its wall time under `timings[stage]`.
pub fn timed<T>(r: &mut Report, stage: &str, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *r.timings.entry(stage.to_string()).or_insert(0.0) += t.elapsed().as_secs_f64();
    out
}

pub fn spectral_options(c: &ExperimentConfig) -> SpectralOptions {
    SpectralOptions {
        gap_floor: c.numerics.gap_floor,
        dense_cap: c.numerics.dense_cap,
        ..SpectralOptions::default()
    }
}

pub fn dynamics_options(c: &ExperimentConfig) -> Stage<DynamicsOptions> {
    let d = &c.numerics.dynamics;
    Ok(DynamicsOptions {
        switching: SwitchingFunction::new(d.switching_width).at("numerics.dynamics.switching_width")?,
        dt_scale: d.dt_scale,
        krylov_dim: d.krylov_dim,
        norm_bound: d.norm_bound,
        spectral: spectral_options(c),
        ..DynamicsOptions::default()
    })
}

fn harper(c: &ExperimentConfig, l: usize, p: i64, q: usize, n: usize, u: f64) -> Stage<HamiltonianSpec> {
    let m = &c.model;
    let phi = 2.0 * PI * p as f64 / q as f64;
    let spec = HamiltonianSpec::harper(l, m.t, phi, u, m.mu, n)
        .at("model")?
        .with_disorder(m.disorder.amplitude, m.disorder.seed);
    spec.validate().at("model")?;
    Ok(spec)
}

/// The Hamiltonian of the model block.
pub fn model_spec(c: &ExperimentConfig) -> Stage<HamiltonianSpec> {
    let m = &c.model;
    harper(c, m.l, m.flux.p, m.flux.q, m.n, m.u)
}

/// Flux `(p, q)` and particle number of the sweep family at side `l`.
pub fn family_point(c: &ExperimentConfig, l: usize) -> Stage<(i64, usize, usize)> {
    let bands = c.numerics.filled_bands;
    match c.numerics.family {
        Family::FixedDensity => {
            let (p, q) = (c.model.flux.p, c.model.flux.q);
            if l % q != 0 {
                return Err(ErrorStanza::from_core(
                    "numerics.sizes",
                    &hall_core::Error::Geometry(format!("flux {p}/{q} is incommensurate with L = {l}")),
                ));
            }
            Ok((p, q, bands * l * l / q))
        }
        Family::SingleFluxQuantum => Ok((1, l, bands * l)),
    }
}

/// Member of the sweep family at side `l`, interacting with the model block's `U`.
pub fn family_spec(c: &ExperimentConfig, l: usize) -> Stage<HamiltonianSpec> {
    let (p, q, n) = family_point(c, l)?;
    harper(c, l, p, q, n, c.model.u)
}

/// Free member of the sweep family (`U = 0`).
pub fn free_family_spec(c: &ExperimentConfig, l: usize) -> Stage<HamiltonianSpec> {
    let (p, q, n) = family_point(c, l)?;
    harper(c, l, p, q, n, 0.0)
}

pub fn sector_model(c: &ExperimentConfig, spec: &HamiltonianSpec) -> Stage<Arc<SectorModel>> {
    let basis = SectorBasis::with_cap(&spec.lattice, spec.n, c.numerics.basis_cap).at("numerics.basis_cap")?;
    SectorModel::with_basis(spec, basis).at("model")
}

pub fn free_gap(spec: &HamiltonianSpec, floor: f64) -> Stage<f64> {
    let h = single_particle(spec, None).at("free-fermion path")?;
    Ok(SlaterState::new(&h, spec.n, floor).at("free-fermion path")?.gap)
}

pub fn flux_forms(lat: &TorusLattice) -> Stage<(OneForm, OneForm)> {
    Ok((standard_flux_form(lat, 1).at("flux forms")?, standard_flux_form(lat, 2).at("flux forms")?))
}

pub fn build_path(lat: &TorusLattice, spec: &PathSpec) -> Stage<DualPath> {
    match spec {
        PathSpec::Segment { d } => {
            if 2 * d > lat.side() {
                return Err(ErrorStanza::from_core(
                    "geometry.path",
                    &hall_core::Error::Geometry(format!("segment of length {} exceeds L = {}", 2 * d, lat.side())),
                ));
            }
            Ok(DualPath::horizontal_segment(lat, *d))
        }
        PathSpec::HalfTorusBoundary {} => {
            let half = lat.sites().filter(|&s| lat.coords(s).0 <= 0).collect();
            lat.boundary_path(&half).into_iter().next().ok_or_else(|| {
                ErrorStanza::from_core("geometry.path", &hall_core::Error::Geometry("half torus has no boundary".into()))
            })
        }
        PathSpec::Steps { start, steps } => {
            let dirs: Vec<Direction> = steps
                .chars()
                .map(|ch| match ch {
                    'E' => Direction::East,
                    'N' => Direction::North,
                    'W' => Direction::West,
                    _ => Direction::South,
                })
                .collect();
            let path = DualPath::from_steps(lat, (start[0], start[1]), &dirs);
            DualPath::new(lat, path.edges().to_vec()).at("geometry.path")
        }
    }
}

/// Uniform site function in `[−amp, amp]`.
pub fn random_sites(lat: &TorusLattice, seed: u64, amp: f64) -> SiteFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = lat.sites().map(|_| amp * rng.gen_range(-1.0..1.0)).collect();
    SiteFunction::from_values(lat, values).expect("one value per site")
}

/// Drive one-form and, for exact drives, its potential `θ`.
pub fn build_drive(c: &ExperimentConfig, lat: &TorusLattice) -> Stage<(OneForm, Option<SiteFunction>)> {
    match c.geometry.drive {
        DriveSpec::RandomExact { amplitude } => {
            let theta = random_sites(lat, c.numerics.seed, amplitude);
            Ok((exterior_derivative(&theta), Some(theta)))
        }
        DriveSpec::Flux { direction, strength } => {
            let xi = standard_flux_form(lat, direction).at("geometry.drive")?;
            Ok((xi.scaled(strength), None))
        }
    }
}

/// Largest ratio of consecutive entries; below 1 means strictly decreasing.
pub fn max_step_ratio(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest increase between consecutive entries.
pub fn max_increase(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}
