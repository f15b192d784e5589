use hall_core::forms::{
    build_strip_potential, exterior_derivative, find_potential, integrate, is_exact, standard_flux_form, strip_sites,
    OneForm, SiteFunction, StripVariant,
};
use hall_core::lattice::{Direction, DualPath, OrientedEdge, SiteSet, TorusLattice};
use hall_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_theta(lattice: &TorusLattice, seed: u64) -> SiteFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = lattice.sites().map(|_| rng.gen_range(-1.0..1.0)).collect();
    SiteFunction::from_values(lattice, v).unwrap()
}

fn random_form(lattice: &TorusLattice, seed: u64) -> OneForm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vals: Vec<f64> = (0..lattice.num_edges()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    OneForm::from_canonical(lattice, |e| vals[lattice.canonical(e).0])
}

#[test]
fn lattice_counts_and_neighbors() {
    for l in [2, 3, 4, 6] {
        let lat = TorusLattice::new(l).unwrap();
        assert_eq!(lat.num_sites(), l * l);
        assert_eq!(lat.canonical_edges().count(), 2 * l * l);
        for s in lat.sites() {
            let (x1, x2) = lat.coords(s);
            assert!(x1 >= lat.lo() && x1 <= lat.hi() && x2 >= lat.lo() && x2 <= lat.hi());
            assert_eq!(lat.site(x1, x2), s);
            for d in Direction::ALL {
                assert_eq!(lat.neighbor(lat.neighbor(s, d), d.reverse()), s);
            }
        }
    }
    let lat = TorusLattice::new(4).unwrap();
    assert_eq!((lat.lo(), lat.hi()), (-1, 2));
}

#[test]
fn distance_is_torus_metric() {
    let lat = TorusLattice::new(6).unwrap();
    for x in lat.sites() {
        for y in lat.sites() {
            let d = lat.dist(x, y);
            assert_eq!(d, lat.dist(y, x));
            assert!(d <= 6.0 / 2f64.sqrt() + 1e-12);
        }
    }
    assert_eq!(lat.dist(lat.site(3, 0), lat.site(-2, 0)), 1.0);
}

#[test]
fn neighborhood_examples() {
    let lat = TorusLattice::new(6).unwrap();
    let origin = lat.site(0, 0);
    let s: SiteSet = [origin].into();
    assert_eq!(lat.neighborhood(&s, 0.0), s);
    // Brute-force scan oracle.
    let expected: SiteSet = lat
        .sites()
        .filter(|&x| {
            let (a, b) = lat.coords(x);
            a.abs() + b.abs() <= 1
        })
        .collect();
    assert_eq!(lat.neighborhood(&s, 1.0), expected);
    assert_eq!(lat.neighborhood(&s, 6.0 / 2f64.sqrt()).len(), 36);
    assert!(lat.neighborhood(&SiteSet::new(), 3.0).is_empty());
}

#[test]
fn flux_forms_integrate_to_delta() {
    let lat = TorusLattice::new(5).unwrap();
    let xi1 = standard_flux_form(&lat, 1).unwrap();
    let xi2 = standard_flux_form(&lat, 2).unwrap();
    let g1 = lat.winding_loop(1, lat.site(0, 2));
    let g2 = lat.winding_loop(2, lat.site(1, 0));
    assert!((integrate(&xi1, &g1).unwrap() - 1.0).abs() < 1e-14);
    assert!(integrate(&xi1, &g2).unwrap().abs() < 1e-14);
    assert!((integrate(&xi2, &g2).unwrap() - 1.0).abs() < 1e-14);
    assert!(integrate(&xi2, &g1).unwrap().abs() < 1e-14);
    assert_eq!(xi1.get(OrientedEdge::new(lat.site(0, 0), Direction::East)), 0.2);
    assert_eq!(xi1.get(OrientedEdge::new(lat.site(0, 0), Direction::North)), 0.0);
    assert_eq!(xi1.sup_norm(), 0.2);
    for s in lat.sites() {
        assert!(xi1.plaquette_circulation(s).abs() < 1e-15);
        assert!(xi2.plaquette_circulation(s).abs() < 1e-15);
    }
    assert!(standard_flux_form(&lat, 3).is_err());
}

#[test]
fn integrate_rejects_broken_path_and_sums_entries() {
    let lat = TorusLattice::new(4).unwrap();
    let a = random_form(&lat, 7);
    let s = lat.site(0, 0);
    let path = vec![
        OrientedEdge::new(s, Direction::East),
        OrientedEdge::new(lat.site(1, 0), Direction::North),
        OrientedEdge::new(lat.site(1, 1), Direction::North),
        OrientedEdge::new(lat.site(1, 2), Direction::West),
        OrientedEdge::new(lat.site(0, 2), Direction::South),
    ];
    let direct: f64 = path.iter().map(|&e| a.get(e)).sum();
    assert!((integrate(&a, &path).unwrap() - direct).abs() < 1e-15);
    let broken = vec![path[0], path[2]];
    assert!(matches!(integrate(&a, &broken), Err(Error::MalformedPath(_))));
}

#[test]
fn exterior_derivative_examples() {
    let lat = TorusLattice::new(4).unwrap();
    let c = SiteFunction::from_fn(&lat, |_| 3.5);
    assert_eq!(exterior_derivative(&c).sup_norm(), 0.0);
    let x0 = lat.site(1, -1);
    let ind = SiteFunction::from_fn(&lat, |s| if s == x0 { 1.0 } else { 0.0 });
    let d = exterior_derivative(&ind);
    for e in lat.canonical_edges() {
        for e in [e, lat.reverse_edge(e)] {
            let t = lat.edge_target(e);
            let expected = if t == x0 { 1.0 } else if e.source == x0 { -1.0 } else { 0.0 };
            assert_eq!(d.get(e), expected);
        }
    }
}

#[test]
fn exactness_examples() {
    let lat = TorusLattice::new(8).unwrap();
    let all = lat.all_sites();
    let theta = random_theta(&lat, 3);
    assert!(is_exact(&exterior_derivative(&theta), &all));
    let xi1 = standard_flux_form(&lat, 1).unwrap();
    assert!(!is_exact(&xi1, &all));
    let strip = strip_sites(&lat, 2);
    assert!(is_exact(&xi1, &strip));
    let pot = find_potential(&xi1, &strip).unwrap();
    let anchor = pot.get(lat.site(-2, lat.lo()));
    for &s in &strip {
        let x1 = lat.coords(s).0 as f64;
        assert!((pot.get(s) - anchor - (x1 + 2.0) / 8.0).abs() < 1e-14);
    }
    let lat4 = TorusLattice::new(4).unwrap();
    let a = random_form(&lat4, 11);
    let p = lat4.site(0, 0);
    let plaq: SiteSet = [p, lat4.site(1, 0), lat4.site(1, 1), lat4.site(0, 1)].into();
    assert!(a.plaquette_circulation(p).abs() > 1e-3);
    match find_potential(&a, &plaq) {
        Err(Error::Inexact { witness, circulation }) => {
            let lattice = a.lattice();
            // The witness is a closed loop whose circulation is reported.
            assert_eq!(lattice.edge_target(*witness.last().unwrap()), witness[0].source);
            assert!((integrate(&a, &witness).unwrap() - circulation).abs() < 1e-12);
        }
        other => panic!("expected inexactness, got {other:?}"),
    }
}

#[test]
fn strip_potential_variants() {
    let lat = TorusLattice::new(8).unwrap();
    let zero = build_strip_potential(&lat, 0.0, 2, 1, StripVariant::FlatFlanks).unwrap();
    assert_eq!(zero.delta_v, 0.0);
    assert!(zero.v.values().iter().all(|&v| v == 0.0));

    let bulk = build_strip_potential(&lat, 0.1, 2, 0, StripVariant::Bulk).unwrap();
    let dv = exterior_derivative(&bulk.v);
    for e in lat.canonical_edges() {
        let (x1, _) = lat.coords(e.source);
        let (y1, _) = lat.coords(lat.edge_target(e));
        if x1.abs() <= 2 && y1.abs() <= 2 {
            let expected = if e.dir == Direction::East { 0.1 } else { 0.0 };
            assert!((dv.get(e) - expected).abs() < 1e-15);
        }
    }
    assert!((bulk.delta_v - 0.4).abs() < 1e-15);

    let lat = TorusLattice::new(12).unwrap();
    let ff = build_strip_potential(&lat, 0.3, 2, 1, StripVariant::FlatFlanks).unwrap();
    assert!((ff.delta_v - 2.0 * 2.0 * 0.3).abs() < 1e-15);
    let dv = exterior_derivative(&ff.v);
    for e in lat.canonical_edges() {
        let (x1, _) = lat.coords(e.source);
        let (y1, _) = lat.coords(lat.edge_target(e));
        let flank = |x: i64| x.abs() > 2 && x.abs() <= 4;
        if flank(x1) && flank(y1) && x1.signum() == y1.signum() {
            assert_eq!(dv.get(e), 0.0);
        }
    }
    assert!(dv.sup_norm() <= 0.3 * 2.0 + 1e-12);
    assert!(build_strip_potential(&lat, 0.1, 6, 0, StripVariant::Bulk).is_err());
    let tz = build_strip_potential(&lat, 0.3, 2, 0, StripVariant::TwoZone).unwrap();
    assert!((tz.delta_v - 1.2).abs() < 1e-15);
}

#[test]
fn boundary_paths() {
    let lat = TorusLattice::new(6).unwrap();
    let single: SiteSet = [lat.site(1, 1)].into();
    let loops = lat.boundary_path(&single);
    assert_eq!(loops.len(), 1);
    assert_eq!(loops[0].len(), 4);
    assert!(loops[0].is_closed(&lat));

    let half: SiteSet = lat.sites().filter(|&s| lat.coords(s).0 <= 0).collect();
    let loops = lat.boundary_path(&half);
    assert_eq!(loops.len(), 2);
    for p in &loops {
        assert_eq!(p.len(), 6);
        assert!(p.is_closed(&lat));
        for e in p.edges() {
            assert!(half.contains(&e.right_site(&lat)));
            assert!(!half.contains(&e.left_site(&lat)));
        }
    }
    assert!(lat.boundary_path(&SiteSet::new()).is_empty());
    assert!(lat.boundary_path(&lat.all_sites()).is_empty());
}

#[test]
fn horizontal_segment_flanks() {
    let lat = TorusLattice::new(8).unwrap();
    let g = DualPath::horizontal_segment(&lat, 2);
    assert_eq!(g.len(), 4);
    let cols: Vec<i64> = g.edges().iter().map(|e| lat.coords(e.right_site(&lat)).0).collect();
    assert_eq!(cols, vec![-1, 0, 1, 2]);
    for e in g.edges() {
        assert_eq!(lat.coords(e.right_site(&lat)).1, 0);
        assert_eq!(lat.coords(e.left_site(&lat)).1, 1);
    }
    g.check_boundary_compatible(&lat).unwrap();
    let bad = g.concat(&lat, &DualPath::from_steps(&lat, (2, 0), &[Direction::North, Direction::West, Direction::West, Direction::South])).unwrap();
    assert!(matches!(bad.check_boundary_compatible(&lat), Err(Error::Orientation(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_forms_integrate_to_zero_on_loops(seed in any::<u64>(), l in 2usize..7, start in 0usize..36) {
        let lat = TorusLattice::new(l).unwrap();
        let d = exterior_derivative(&random_theta(&lat, seed));
        let s = start % lat.num_sites();
        for p in [lat.winding_loop(1, s), lat.winding_loop(2, s), lat.plaquette(s).to_vec()] {
            prop_assert!(integrate(&d, &p).unwrap().abs() <= 1e-12);
        }
    }

    #[test]
    fn potential_round_trip(seed in any::<u64>(), l in 2usize..7, mask in any::<u64>()) {
        let lat = TorusLattice::new(l).unwrap();
        let theta = random_theta(&lat, seed);
        let sigma: SiteSet = lat.sites().filter(|&s| mask & (1 << (s % 64)) != 0).collect();
        let rec = find_potential(&exterior_derivative(&theta), &sigma).unwrap();
        for &x in &sigma {
            for d in Direction::ALL {
                let y = lat.neighbor(x, d);
                if sigma.contains(&y) {
                    let lhs = rec.get(y) - rec.get(x);
                    let rhs = theta.get(y) - theta.get(x);
                    prop_assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn integrate_reversal_and_concatenation(seed in any::<u64>(), l in 3usize..7) {
        let lat = TorusLattice::new(l).unwrap();
        let a = random_form(&lat, seed);
        let g = lat.winding_loop(1, 0);
        let rev: Vec<_> = g.iter().rev().map(|&e| lat.reverse_edge(e)).collect();
        prop_assert!((integrate(&a, &g).unwrap() + integrate(&a, &rev).unwrap()).abs() < 1e-12);
        let (p, q) = g.split_at(2);
        let sum = integrate(&a, p).unwrap() + integrate(&a, q).unwrap();
        prop_assert!((integrate(&a, &g).unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn boundary_of_complement_is_reversed(mask in any::<u64>(), l in 2usize..7) {
        let lat = TorusLattice::new(l).unwrap();
        let x: SiteSet = lat.sites().filter(|&s| mask & (1 << (s % 64)) != 0).collect();
        let comp: SiteSet = lat.sites().filter(|s| !x.contains(s)).collect();
        let mut a: Vec<_> = lat.boundary_path(&x).iter().flat_map(|p| p.edges().to_vec()).collect();
        let mut b: Vec<_> = lat
            .boundary_path(&comp)
            .iter()
            .flat_map(|p| p.edges().iter().map(|e| e.reversed(&lat)).collect::<Vec<_>>())
            .collect();
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
        for p in lat.boundary_path(&x) {
            prop_assert!(p.is_closed(&lat));
        }
    }

    #[test]
    fn linearity_of_d(s1 in any::<u64>(), s2 in any::<u64>()) {
        let lat = TorusLattice::new(4).unwrap();
        let (t1, t2) = (random_theta(&lat, s1), random_theta(&lat, s2));
        let lhs = exterior_derivative(&t1.add(&t2));
        let rhs = exterior_derivative(&t1).add(&exterior_derivative(&t2));
        prop_assert!(lhs.sub(&rhs).sup_norm() < 1e-14);
    }
}
