use std::f64::consts::PI;

use hall_core::dense::I;
use hall_core::fock::{number_operator, potential_operator, ManyBodyOperator};
use hall_core::forms::{standard_flux_form, SiteFunction};
use hall_core::hamiltonian::{twist_form, HamiltonianSpec, SectorModel};
use hall_core::lattice::{Direction, SiteSet, TorusLattice};
use hall_core::response::{
    adiabatic_curvature, bump_path, chern_number, curvature_along, curvature_gauge_check, hall_equivalence,
    hall_geometry, kubo_epsilon_ladder, kubo_resolvent, kubo_time_integral, validate_ladder, CurvatureMethod,
    HallSetup,
};
use hall_core::spectral::{ground_state, quasi_adiabatic_map, SpectralCache, SpectralMode, SpectralOptions};
use hall_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn model(l: usize, n: usize, u: f64, seed: u64) -> std::sync::Arc<SectorModel> {
    let spec = HamiltonianSpec::harper(l, 1.0, 2.0 * PI / l as f64, u, 0.0, n)
        .unwrap()
        .with_disorder(0.5, seed);
    SectorModel::new(&spec).unwrap()
}

fn full(h: &ManyBodyOperator) -> SpectralCache {
    ground_state(h, SpectralMode::Full, &SpectralOptions::default()).unwrap()
}

fn random_potential(m: &SectorModel, seed: u64) -> ManyBodyOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lat = m.lattice();
    let theta = SiteFunction::from_values(lat, lat.sites().map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    potential_operator(m.basis(), &theta)
}

/// `i ∫₀^T ω([V(−t), J]) e^{iνt−εt} dt` by composite Simpson quadrature on the eigen-decomposed evolution.
fn time_integral_oracle(c: &SpectralCache, j: &ManyBodyOperator, v: &ManyBodyOperator, nu: f64, eps: f64) -> Complex64 {
    let f = c.full.as_ref().unwrap();
    let vpsi = c.to_eigenbasis(&v.apply(&c.psi)).unwrap();
    let jpsi = c.to_eigenbasis(&j.apply(&c.psi)).unwrap();
    let corr = |t: f64| -> Complex64 {
        // ω(V(−t)J) − ω(JV(−t)) summed over eigenstates.
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..f.energies.len() {
            let d = f.energies[m] - c.e0;
            acc += vpsi[m].conj() * jpsi[m] * Complex64::from_polar(1.0, d * t)
                - jpsi[m].conj() * vpsi[m] * Complex64::from_polar(1.0, -d * t);
        }
        acc * Complex64::new(0.0, nu * t).exp() * (-eps * t).exp()
    };
    let t_max = 40.0 / eps;
    let n = 200_000;
    let h = t_max / n as f64;
    let mut s = corr(0.0) + corr(t_max);
    for k in 1..n {
        s += corr(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    I * s * h / 3.0
}

#[test]
fn kubo_closed_form_matches_time_quadrature() {
    let m = model(3, 2, 0.5, 1);
    let c = full(&m.hamiltonian());
    let j = m.current_loop(None, &[0, 1, 3].into()).operator;
    let v = random_potential(&m, 2);
    for (nu, eps) in [(0.0, 0.5 * c.gap), (0.2 * c.gap, 0.25 * c.gap)] {
        let closed = kubo_time_integral(&c, &j, &v, nu, eps).unwrap();
        let quad = time_integral_oracle(&c, &j, &v, nu, eps);
        assert!((closed - quad).norm() < 1e-7 * (1.0 + closed.norm()), "{closed} vs {quad}");
    }
}

#[test]
fn kubo_routes_and_quasi_adiabatic_forms() {
    let m = model(3, 3, 0.5, 3);
    let h = m.hamiltonian();
    let c = full(&h);
    let k = ground_state(&h, SpectralMode::GroundOnly, &SpectralOptions::default()).unwrap();
    let j = m.current_path(None, &hall_core::lattice::DualPath::horizontal_segment(m.lattice(), 1)).unwrap().operator;
    let v = random_potential(&m, 4);
    for nu in [0.0, 0.3 * c.gap, -0.45 * c.gap] {
        let a = kubo_resolvent(&c, &j, &v, nu).unwrap();
        let b = kubo_resolvent(&k, &j, &v, nu).unwrap();
        assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()), "{a} vs {b}");
    }
    let chi = kubo_resolvent(&c, &j, &v, 0.0).unwrap();
    let iv = quasi_adiabatic_map(&c, &v).unwrap();
    let ij = quasi_adiabatic_map(&c, &j).unwrap();
    let w1 = hall_core::spectral::i_omega_commutator(&c, &iv, &j).unwrap();
    let w2 = hall_core::spectral::i_omega_commutator(&c, &v, &ij).unwrap();
    assert!((chi + w1).norm() < 1e-11);
    assert!((chi - w2).norm() < 1e-11);
    // Oddness of the filter: ω([I(V), J]) = −ω([V, I(J)]).
    assert!((w1 + w2).norm() < 1e-11);
    assert!(matches!(kubo_resolvent(&c, &j, &v, 0.5 * c.gap), Err(Error::FrequencyOutOfGap { .. })));
    assert!(kubo_time_integral(&c, &j, &v, 0.5 * c.gap, 0.1).is_ok());
    assert!(kubo_time_integral(&c, &j, &v, 0.0, 0.0).is_err());
}

#[test]
fn kubo_trivial_cases_and_symmetries() {
    let m = model(3, 2, 0.5, 5);
    let c = full(&m.hamiltonian());
    let j = m.current_loop(None, &[4].into()).operator;
    let n = number_operator(m.basis(), &m.lattice().all_sites()).scale(Complex64::new(2.5, 0.0));
    assert!(kubo_resolvent(&c, &j, &n, 0.0).unwrap().norm() < 1e-13);
    for eps in [0.1, 1.0, 10.0] {
        assert!(kubo_time_integral(&c, &j, &n, 0.0, eps).unwrap().norm() < 1e-13);
    }
    let v = random_potential(&m, 6);
    let big = 1e3 * c.gap;
    let decay = kubo_time_integral(&c, &j, &v, 0.0, big).unwrap().norm() * big;
    let decay2 = kubo_time_integral(&c, &j, &v, 0.0, 2.0 * big).unwrap().norm() * 2.0 * big;
    assert!((decay - decay2).abs() < 1e-2 * decay);
    let nu = 0.2 * c.gap;
    let a = kubo_resolvent(&c, &j, &v, nu).unwrap();
    let b = kubo_resolvent(&c, &v, &j, -nu).unwrap();
    assert!((a - b).norm() < 1e-12);
    assert!((a.conj() - kubo_resolvent(&c, &v, &j, nu).unwrap()).norm() < 1e-12);
}

#[test]
fn epsilon_ladder_is_linear() {
    let m = model(3, 2, 0.5, 7);
    let c = full(&m.hamiltonian());
    let j = m.current_path(None, &hall_core::lattice::DualPath::horizontal_segment(m.lattice(), 1)).unwrap().operator;
    let v = random_potential(&m, 8);
    let g = c.gap;
    let ladder = kubo_epsilon_ladder(&c, &j, &v, 0.0, &[g / 4.0, g / 8.0, g / 16.0]).unwrap();
    assert!(ladder.constant_spread < 2.0, "{:?}", ladder.constant);
    assert!(ladder.deviation.windows(2).all(|w| w[1] < w[0]));
    assert!(validate_ladder(&[0.1, 0.2]).is_err());
    assert!(validate_ladder(&[0.1, 0.3, 0.2]).is_err());
    assert!(validate_ladder(&[0.1, -0.3, 0.2]).is_err());
    assert!(validate_ladder(&[0.4, 0.2, 0.1]).is_ok());
}

#[test]
fn curvature_methods_agree() {
    let m = model(3, 2, 0.5, 9);
    let opts = SpectralOptions::default();
    let p = adiabatic_curvature(&m, CurvatureMethod::Perturbation, &opts).unwrap();
    let f = adiabatic_curvature(&m, CurvatureMethod::FiniteDifference { h: 1e-4 }, &opts).unwrap();
    let g = adiabatic_curvature(&m, CurvatureMethod::Generators, &opts).unwrap();
    assert!((p.kappa - g.kappa).abs() < 1e-10, "{} vs {}", p.kappa, g.kappa);
    assert!((p.kappa - f.kappa).abs() < 1e-6, "{} vs {}", p.kappa, f.kappa);
    assert!(p.kappa.abs() > 1e-4);
    for r in [p, f, g] {
        assert!(r.imag_residual < 1e-9);
    }
}

#[test]
fn curvature_vanishes_without_hopping() {
    let lat = TorusLattice::new(3).unwrap();
    let mut spec = HamiltonianSpec::empty(&lat, 2);
    spec = spec.with_onsite(&SiteFunction::from_fn(&lat, |s| s as f64 * 0.37));
    let m = SectorModel::new(&spec).unwrap();
    let k = adiabatic_curvature(&m, CurvatureMethod::Generators, &SpectralOptions::default()).unwrap();
    assert_eq!(k.kappa, 0.0);
}

#[test]
fn chern_sign_matches_integrated_curvature() {
    // Riemann sum of κ over the flux torus against the link-variable integer.
    let m = model(3, 3, 0.0, 10);
    let opts = SpectralOptions::default();
    let mm = 8;
    let chern = chern_number(&m, mm, &opts).unwrap();
    let lat = m.lattice().clone();
    let xi1 = standard_flux_form(&lat, 1).unwrap();
    let xi2 = standard_flux_form(&lat, 2).unwrap();
    let step = 2.0 * PI / mm as f64;
    let mut sum = 0.0;
    for i in 0..mm {
        for j in 0..mm {
            let base = twist_form(&lat, (i as f64 + 0.5) * step, (j as f64 + 0.5) * step);
            sum += curvature_along(&m, Some(&base), &xi1, &xi2, CurvatureMethod::Perturbation, &opts)
                .unwrap()
                .kappa;
        }
    }
    let integral = sum * step * step / (2.0 * PI);
    assert_eq!(chern.value, 1);
    assert!((integral - chern.value as f64).abs() < 0.25, "∫κ/2π = {integral}, C = {}", chern.value);
    assert!(chern.rounding_distance < 1e-8);
    let refined = chern_number(&m, 12, &opts).unwrap();
    assert_eq!(refined.value, chern.value);
}

#[test]
fn chern_of_atomic_limit_is_zero() {
    let lat = TorusLattice::new(3).unwrap();
    let spec = HamiltonianSpec::harper(3, 0.01, 2.0 * PI / 3.0, 0.0, 0.0, 2)
        .unwrap()
        .with_onsite(&SiteFunction::from_fn(&lat, |s| s as f64 * 0.3));
    let m = SectorModel::new(&spec).unwrap();
    let c = chern_number(&m, 6, &SpectralOptions::default()).unwrap();
    assert_eq!(c.value, 0);
}

#[test]
fn chern_reports_gap_closure() {
    let spec = HamiltonianSpec::harper(3, 1.0, 2.0 * PI / 3.0, 0.0, 0.0, 2).unwrap();
    let m = SectorModel::new(&spec).unwrap();
    match chern_number(&m, 4, &SpectralOptions::default()) {
        Err(Error::GapClosure { points, .. }) => assert!(!points.is_empty()),
        other => panic!("expected gap closure, got {other:?}"),
    }
}

#[test]
fn gauge_check_trivial_cases() {
    let m = model(3, 2, 0.5, 11);
    let lat = m.lattice().clone();
    let zero = SiteFunction::zero(&lat);
    let cst = SiteFunction::from_fn(&lat, |_| 0.7);
    let opts = SpectralOptions::default();
    let a = curvature_gauge_check(&m, &zero, &zero, CurvatureMethod::Perturbation, &opts).unwrap();
    assert_eq!(a.kappa, a.kappa_prime);
    let b = curvature_gauge_check(&m, &cst, &cst, CurvatureMethod::Perturbation, &opts).unwrap();
    assert_eq!(b.discrepancy, 0.0);
}

#[test]
fn hall_geometries() {
    let lat = TorusLattice::new(8).unwrap();
    let g = hall_geometry(&lat, &HallSetup::Traversing { e: 0.2, ell: 1, r: 1 }).unwrap();
    assert!((g.normalizer - 0.4).abs() < 1e-15);
    assert_eq!(g.path.len(), 4);
    let g = hall_geometry(&lat, &HallSetup::BulkStrip { e: 0.2, ell: 2, d: 2 }).unwrap();
    assert!((g.normalizer - 0.8).abs() < 1e-15);
    assert!(hall_geometry(&lat, &HallSetup::BulkStrip { e: 0.2, ell: 1, d: 2 }).is_err());
    let p = bump_path(&lat, 3, 1, 2).unwrap();
    p.check_boundary_compatible(&lat).unwrap();
    assert_eq!(p.len(), 6 + 2 * 2);
    assert_eq!(p.edges()[2].dir, Direction::North);
    let first = p.edges()[0].right_site(&lat);
    let last = p.edges()[p.len() - 1].right_site(&lat);
    assert_eq!(lat.coords(first), (-2, 0));
    assert_eq!(lat.coords(last), (3, 0));
    let g = hall_geometry(
        &lat,
        &HallSetup::Deformed { e: 0.2, ell: 1, r: 2, bump_half_width: 1, bump_height: 2 },
    )
    .unwrap();
    assert!((g.normalizer - 0.4).abs() < 1e-15);
    assert!(bump_path(&lat, 2, 2, 1).is_err());
}

#[test]
fn degenerate_drive() {
    let m = model(3, 2, 0.5, 12);
    let c = full(&m.hamiltonian());
    let r = hall_equivalence(&m, &c, &HallSetup::Traversing { e: 0.0, ell: 1, r: 0 }, 0.1).unwrap();
    assert!(r.is_degenerate());
    assert_eq!(r.chi.norm(), 0.0);
}

#[test]
fn loop_current_expectation_vanishes() {
    let m = model(3, 3, 0.5, 13);
    let c = full(&m.hamiltonian());
    let x: SiteSet = [0, 2, 5, 7].into();
    let j = m.current_loop_edge_sum(None, &x).unwrap().operator;
    assert!(c.expectation(&j).unwrap().norm() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn curvature_routes_agree_random(seed in any::<u64>()) {
        let m = model(3, 2, 0.5, seed);
        let opts = SpectralOptions::default();
        let p = adiabatic_curvature(&m, CurvatureMethod::Perturbation, &opts).unwrap();
        let g = adiabatic_curvature(&m, CurvatureMethod::Generators, &opts).unwrap();
        prop_assert!((p.kappa - g.kappa).abs() < 1e-9);
    }
}
