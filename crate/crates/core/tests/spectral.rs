use std::f64::consts::PI;

use hall_core::dense::{self, I};
use hall_core::fock::{number_operator, ManyBodyOperator};
use hall_core::hamiltonian::{HamiltonianSpec, SectorModel};
use hall_core::lattice::SiteSet;
use hall_core::spectral::{
    ground_state, offdiag, perturbed_state, projector_derivative_fd, projector_derivative_fd_on,
    projector_derivative_perturbation, quasi_adiabatic_map, FilterTransform, SpectralCache, SpectralMode,
    SpectralOptions,
};
use hall_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;

fn model(l: usize, n: usize, seed: u64) -> std::sync::Arc<SectorModel> {
    let spec = HamiltonianSpec::harper(l, 1.0, 2.0 * PI / l as f64, 0.5, 0.0, n)
        .unwrap()
        .with_disorder(0.5, seed);
    SectorModel::new(&spec).unwrap()
}

fn full(m: &SectorModel) -> SpectralCache {
    ground_state(&m.hamiltonian(), SpectralMode::Full, &SpectralOptions::default()).unwrap()
}

fn projector(c: &SpectralCache) -> ManyBodyOperator {
    ManyBodyOperator::from_dense(c.tag(), dense::outer(&c.psi, &c.psi))
}

#[test]
fn lanczos_agrees_with_dense() {
    for (l, n, seed) in [(3, 3, 1), (4, 2, 2), (3, 2, 3)] {
        let m = model(l, n, seed);
        let h = m.hamiltonian();
        let opts = SpectralOptions::default();
        let d = ground_state(&h, SpectralMode::Full, &opts).unwrap();
        let k = ground_state(&h, SpectralMode::GroundOnly, &opts).unwrap();
        assert!((d.e0 - k.e0).abs() < 1e-10 * d.norm_h, "e0 {} vs {}", d.e0, k.e0);
        assert!((d.gap - k.gap).abs() < 1e-8 * d.norm_h, "gap {} vs {}", d.gap, k.gap);
        assert!((dense::inner(&d.psi, &k.psi).norm() - 1.0).abs() < 1e-9);
        assert!(k.residual <= 1e-11 * k.norm_h.max(1.0));
        let e = &d.full.as_ref().unwrap().energies;
        assert!(e.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn spectral_errors() {
    let m = model(3, 2, 1);
    let opts = SpectralOptions { dense_cap: 10, ..Default::default() };
    assert!(matches!(ground_state(&m.hamiltonian(), SpectralMode::Full, &opts), Err(Error::Capability(_))));
    let zero = ManyBodyOperator::zero(m.basis());
    assert!(matches!(
        ground_state(&zero, SpectralMode::Full, &SpectralOptions::default()),
        Err(Error::GapViolation { .. })
    ));
    let c = full(&m);
    assert!(c.reduced_resolvent(&c.psi, -2.0 * c.gap).is_err());
    let other = model(3, 3, 1).hamiltonian();
    assert!(matches!(c.expectation(&other), Err(Error::BasisMismatch(_, _))));
}

#[test]
fn resolvent_routes_agree() {
    let m = model(3, 3, 4);
    let h = m.hamiltonian();
    let d = full(&m);
    let k = ground_state(&h, SpectralMode::GroundOnly, &SpectralOptions::default()).unwrap();
    let b = m.flux_derivative(1).unwrap().apply(&d.psi);
    for shift in [0.0, 0.2 * d.gap, -0.4 * d.gap] {
        let xd = d.reduced_resolvent(&b, shift).unwrap();
        // Defining equation: (H − E₀ + s) x = Q b and ⟨Ψ|x⟩ = 0.
        let mut lhs = h.apply(&xd);
        dense::axpy(Complex64::new(shift - d.e0, 0.0), &xd, &mut lhs);
        let rhs = d.project_excited(&b);
        assert!(dense::norm(&dense::sub(&lhs, &rhs)) < 1e-11);
        assert!(dense::inner(&d.psi, &xd).norm() < 1e-12);
        // The Lanczos ground state carries an arbitrary phase; compare phase-aligned.
        let phase = dense::inner(&d.psi, &k.psi);
        let bk: Vec<_> = b.iter().map(|v| v * phase).collect();
        let xk = k.reduced_resolvent(&bk, shift).unwrap();
        let xd_aligned: Vec<_> = xd.iter().map(|v| v * phase).collect();
        assert!(dense::norm(&dense::sub(&xk, &xd_aligned)) < 1e-8 * dense::norm(&xd).max(1.0));
    }
}

#[test]
fn filter_profile() {
    let f = FilterTransform::new(0.8);
    assert_eq!(f.sup_multiplier(), 2.5);
    for z in [0.4, 0.41, 1.0, 7.0, 0.1, 0.0, 0.399999] {
        assert!((f.w_hat(-z) + f.w_hat(z)).norm() < 1e-15);
        assert!(f.multiplier(z).norm() <= f.sup_multiplier() + 1e-12);
    }
    assert!((f.multiplier(0.4 - 1e-12) - f.multiplier(0.4)).norm() < 1e-9);
    assert!((f.multiplier(2.0) + I / 2.0).norm() < 1e-15);
}

#[test]
fn quasi_adiabatic_identities() {
    let m = model(3, 3, 5);
    let c = full(&m);
    let dh = m.flux_derivative(2).unwrap();
    let k = quasi_adiabatic_map(&c, &dh).unwrap();
    assert!(k.hermiticity_residual() < 1e-12);
    // ∂P = i[I(∂H), P].
    let p = projector(&c);
    let dp = projector_derivative_perturbation(&c, &dh).unwrap();
    let comm = k.commutator(&p).unwrap().scale(I);
    assert!(dp.max_abs_diff(&comm).unwrap() < 1e-11);
    // Off the diagonal blocks −i[H, I(O)] reproduces O.
    let x: SiteSet = [0, 1, 2].into();
    let o = number_operator(m.basis(), &x).add(&dh).unwrap();
    let io = quasi_adiabatic_map(&c, &o).unwrap();
    let lhs = offdiag(&c, &c.hamiltonian.commutator(&io).unwrap().scale(-I)).unwrap();
    assert!(lhs.max_abs_diff(&offdiag(&c, &o).unwrap()).unwrap() < 1e-11);
    // Norm bound with the Hilbert-Schmidt norm.
    assert!(io.hs_norm() <= FilterTransform::new(c.gap).sup_multiplier() * o.hs_norm() * (1.0 + 1e-12));
}

#[test]
fn offdiag_matches_projector_formula() {
    let m = model(3, 2, 6);
    let c = full(&m);
    let p = projector(&c);
    let q = ManyBodyOperator::identity(m.basis()).sub(&p).unwrap();
    let o = m.flux_derivative(1).unwrap().mul(&number_operator(m.basis(), &[4].into())).unwrap();
    let expected = p.mul(&o).unwrap().mul(&q).unwrap().add(&q.mul(&o).unwrap().mul(&p).unwrap()).unwrap();
    assert!(offdiag(&c, &o).unwrap().max_abs_diff(&expected).unwrap() < 1e-12);
}

#[test]
fn projector_derivative_stencil_matches_perturbation() {
    let m = model(3, 3, 7);
    let c = full(&m);
    let h = 1e-4;
    let opts = SpectralOptions::default();
    let plus = ground_state(&m.twist(h, 0.0), SpectralMode::Full, &opts).unwrap();
    let minus = ground_state(&m.twist(-h, 0.0), SpectralMode::Full, &opts).unwrap();
    let fd = projector_derivative_fd(&plus, &minus, h).unwrap();
    let pt = projector_derivative_perturbation(&c, &m.flux_derivative(1).unwrap()).unwrap();
    assert!(fd.max_abs_diff(&pt).unwrap() < 1e-6);
    let on = projector_derivative_fd_on(&plus, &minus, h, &c.psi);
    let direct = fd.apply(&c.psi);
    assert!(dense::norm(&dense::sub(&on, &direct)) < 1e-10 * dense::norm(&direct).max(1.0));
    // (∂P)Ψ = δ for the normalised first-order correction.
    let delta = perturbed_state(&c, &m.flux_derivative(1).unwrap()).unwrap();
    assert!(dense::norm(&dense::sub(&pt.apply(&c.psi), &delta)) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn quasi_adiabatic_map_is_adjoint_compatible(seed in any::<u64>()) {
        let m = model(3, 2, seed);
        let c = full(&m);
        let a = m.flux_derivative(1).unwrap().mul(&number_operator(m.basis(), &[0, 3].into())).unwrap();
        let lhs = quasi_adiabatic_map(&c, &a).unwrap().adjoint();
        let rhs = quasi_adiabatic_map(&c, &a.adjoint()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-11);
    }
}
