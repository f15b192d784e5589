//! Non-interacting fast path: single-particle matrices, Slater ground states, free curvature,
//! free Kubo response and Bloch-band Chern numbers of the Harper model.
//!
//! The single-particle matrix `h[x, y]` is the coefficient of `c†_x c_y`, so the many-body
//! operator is `Σ h[x, y] c†_x c_y` and its `N = 1` sector reproduces `h` entrywise.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::dense::{self, CVec, I, ZERO};
use crate::error::{Error, Result};
use crate::forms::{exterior_derivative, standard_flux_form, OneForm, SiteFunction};
use crate::hamiltonian::{twist_form, HamiltonianSpec};
use crate::lattice::{DualPath, SiteSet, TorusLattice};
use crate::response::{hall_geometry, plaquette_chern, ChernResult, GaugeCheck, HallReport, HallSetup};

/// Single-particle matrix of `H_A`.
pub fn single_particle(spec: &HamiltonianSpec, a: Option<&OneForm>) -> Result<Mat<Complex64>> {
    if !spec.is_quadratic() {
        return Err(Error::Capability(
            "free-fermion path needs a quadratic Hamiltonian (no multi-site density terms)".into(),
        ));
    }
    let lattice = &spec.lattice;
    let n = lattice.num_sites();
    let mut h = Mat::<Complex64>::zeros(n, n);
    for e in lattice.canonical_edges() {
        let (s, t) = (e.source, lattice.edge_target(e));
        let c = spec.peierls_alpha(a, e);
        h.write(s, t, h.read(s, t) + c);
        h.write(t, s, h.read(t, s) + c.conj());
    }
    let w = spec.onsite();
    for s in lattice.sites() {
        h.write(s, s, h.read(s, s) + Complex64::new(w.get(s) - spec.mu, 0.0));
    }
    Ok(h)
}

/// `∂_s h_{A0 + sB}` at `s = 0`.
pub fn single_particle_derivative(spec: &HamiltonianSpec, base: Option<&OneForm>, dir: &OneForm) -> Mat<Complex64> {
    let lattice = &spec.lattice;
    let n = lattice.num_sites();
    let mut d = Mat::<Complex64>::zeros(n, n);
    for e in lattice.canonical_edges() {
        let b = dir.get(e);
        if b == 0.0 {
            continue;
        }
        let (s, t) = (e.source, lattice.edge_target(e));
        let c = spec.peierls_alpha(base, e) * (-I * b);
        d.write(s, t, d.read(s, t) + c);
        d.write(t, s, d.read(t, s) + c.conj());
    }
    d
}

/// Eigen-decomposition of `h` with the lowest `n` orbitals occupied.
#[derive(Clone, Debug)]
pub struct SlaterState {
    pub energies: Vec<f64>,
    /// All orbitals as columns; the first `n` are occupied.
    pub orbitals: Mat<Complex64>,
    pub n: usize,
    /// `ε_N − ε_{N−1}`; infinite for an empty or completely filled band.
    pub gap: f64,
}

impl SlaterState {
    pub fn new(h: &Mat<Complex64>, n: usize, gap_floor: f64) -> Result<Self> {
        let dim = h.nrows();
        if n > dim {
            return Err(Error::InvalidArgument(format!("N = {n} exceeds {dim} orbitals")));
        }
        let (energies, orbitals) = dense::eigh(h);
        let gap = if n == 0 || n == dim {
            f64::INFINITY
        } else {
            energies[n] - energies[n - 1]
        };
        if gap < gap_floor {
            return Err(Error::GapViolation {
                gap,
                floor: gap_floor,
                context: format!("orbital gap at filling {n} of {dim}"),
            });
        }
        Ok(SlaterState { energies, orbitals, n, gap })
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[..self.n].iter().sum()
    }

    /// Occupied orbitals as an isometry `dim × N`.
    pub fn occupied(&self) -> Mat<Complex64> {
        self.orbitals.subcols(0, self.n).to_owned()
    }

    /// `P₁ = ΦΦ†`.
    pub fn correlation_matrix(&self) -> Mat<Complex64> {
        let phi = self.occupied();
        &phi * phi.adjoint()
    }

    /// Matrix of `o` in the orbital basis.
    pub fn to_orbital_basis(&self, o: &Mat<Complex64>) -> Mat<Complex64> {
        self.orbitals.adjoint() * o * &self.orbitals
    }
}

/// Many-body overlap `⟨Ψ_a, Ψ_b⟩ = det(Φ_a† Φ_b)` of two Slater determinants.
pub fn slater_overlap(a: &Mat<Complex64>, b: &Mat<Complex64>) -> Complex64 {
    let m = a.adjoint() * b;
    if m.nrows() == 0 {
        return Complex64::new(1.0, 0.0);
    }
    m.determinant()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FreeCurvatureMethod {
    /// Orbital perturbation sum over occupied/empty pairs.
    Perturbation,
    /// Berry phase of Slater overlaps around a square of side `h` centred on the base point.
    SlaterPlaquette { h: f64 },
}

pub fn free_curvature_along(
    spec: &HamiltonianSpec,
    base: Option<&OneForm>,
    dir1: &OneForm,
    dir2: &OneForm,
    method: FreeCurvatureMethod,
    gap_floor: f64,
) -> Result<f64> {
    let n = spec.n;
    match method {
        FreeCurvatureMethod::Perturbation => {
            let st = SlaterState::new(&single_particle(spec, base)?, n, gap_floor)?;
            let d1 = st.to_orbital_basis(&single_particle_derivative(spec, base, dir1));
            let d2 = st.to_orbital_basis(&single_particle_derivative(spec, base, dir2));
            let e = &st.energies;
            let mut acc = ZERO;
            for a in 0..n {
                for m in n..e.len() {
                    let den = (e[a] - e[m]) * (e[a] - e[m]);
                    acc += (d1.read(a, m) * d2.read(m, a) - d2.read(a, m) * d1.read(m, a)) / den;
                }
            }
            Ok((I * acc).re)
        }
        FreeCurvatureMethod::SlaterPlaquette { h } => {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument(format!("plaquette side must be positive, got {h}")));
            }
            let zero = OneForm::zero(&spec.lattice);
            let b = base.unwrap_or(&zero);
            let corners = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
            let states = corners
                .par_iter()
                .map(|&(s1, s2)| {
                    let a = b.add(&dir1.scaled(s1 * h)).add(&dir2.scaled(s2 * h));
                    Ok(SlaterState::new(&single_particle(spec, Some(&a))?, n, gap_floor)?.occupied())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..4 {
                w *= slater_overlap(&states[k], &states[(k + 1) % 4]);
            }
            Ok(-w.arg() / (h * h))
        }
    }
}

/// Free curvature at zero twist along `ξ₁`, `ξ₂`.
pub fn free_curvature(spec: &HamiltonianSpec, method: FreeCurvatureMethod, gap_floor: f64) -> Result<f64> {
    let xi1 = standard_flux_form(&spec.lattice, 1)?;
    let xi2 = standard_flux_form(&spec.lattice, 2)?;
    free_curvature_along(spec, None, &xi1, &xi2, method, gap_floor)
}

pub fn free_gauge_check(
    spec: &HamiltonianSpec,
    theta1: &SiteFunction,
    theta2: &SiteFunction,
    gap_floor: f64,
) -> Result<GaugeCheck> {
    let xi1 = standard_flux_form(&spec.lattice, 1)?;
    let xi2 = standard_flux_form(&spec.lattice, 2)?;
    let d1 = xi1.add(&exterior_derivative(theta1));
    let d2 = xi2.add(&exterior_derivative(theta2));
    let m = FreeCurvatureMethod::Perturbation;
    let k = free_curvature_along(spec, None, &xi1, &xi2, m, gap_floor)?;
    let kp = free_curvature_along(spec, None, &d1, &d2, m, gap_floor)?;
    Ok(GaugeCheck {
        kappa: k,
        kappa_prime: kp,
        discrepancy: (k - kp).abs(),
    })
}

/// Slater-determinant Chern number on an `M × M` grid over the flux torus.
pub fn free_chern_number(spec: &HamiltonianSpec, m: usize, gap_floor: f64) -> Result<ChernResult> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("Chern grid needs M ≥ 2, got {m}")));
    }
    let lattice = spec.lattice.clone();
    let step = 2.0 * PI / m as f64;
    let points: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let states = points
        .par_iter()
        .map(|&(i, j)| {
            let a = twist_form(&lattice, i as f64 * step, j as f64 * step);
            SlaterState::new(&single_particle(spec, Some(&a))?, spec.n, 0.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let min_gap = states.iter().map(|s| s.gap).fold(f64::INFINITY, f64::min);
    let closed: Vec<(usize, usize)> = points
        .iter()
        .zip(&states)
        .filter(|(_, s)| !(s.gap > gap_floor))
        .map(|(p, _)| *p)
        .collect();
    if !closed.is_empty() {
        return Err(Error::GapClosure { points: closed, min_gap });
    }
    let l = lattice.side() as f64;
    let phases = |dir: u8| -> Vec<Complex64> {
        lattice
            .sites()
            .map(|s| {
                let (x1, x2) = lattice.coords(s);
                Complex64::from_polar(1.0, 2.0 * PI * if dir == 1 { x1 } else { x2 } as f64 / l)
            })
            .collect()
    };
    let shift = |phi: &Mat<Complex64>, u: &[Complex64]| Mat::from_fn(phi.nrows(), phi.ncols(), |r, c| u[r] * phi.read(r, c));
    let occ: Vec<Mat<Complex64>> = states.iter().map(|s| s.occupied()).collect();
    let (u1, u2) = (phases(1), phases(2));
    let mut link1 = vec![ZERO; m * m];
    let mut link2 = vec![ZERO; m * m];
    for i in 0..m {
        for j in 0..m {
            let here = &occ[i * m + j];
            let n1 = if i + 1 < m { occ[(i + 1) * m + j].clone() } else { shift(&occ[j], &u1) };
            let n2 = if j + 1 < m { occ[i * m + j + 1].clone() } else { shift(&occ[i * m], &u2) };
            link1[i * m + j] = slater_overlap(here, &n1);
            link2[i * m + j] = slater_overlap(here, &n2);
        }
    }
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

/// Single-particle matrix of `J_γ` for `H_A`.
pub fn current_matrix(spec: &HamiltonianSpec, a: Option<&OneForm>, path: &DualPath) -> Result<Mat<Complex64>> {
    let lattice = &spec.lattice;
    path.check_boundary_compatible(lattice)?;
    let n = lattice.num_sites();
    let mut j = Mat::<Complex64>::zeros(n, n);
    for de in path.edges() {
        let cross = de.crossing(lattice);
        let back = lattice.reverse_edge(cross);
        let (r, l) = (cross.source, back.source);
        j.write(l, r, j.read(l, r) + I * spec.peierls_alpha(a, back));
        j.write(r, l, j.read(r, l) - I * spec.peierls_alpha(a, cross));
    }
    Ok(j)
}

pub fn potential_matrix(v: &SiteFunction) -> Mat<Complex64> {
    let vals = v.values();
    Mat::from_fn(vals.len(), vals.len(), |i, j| if i == j { Complex64::new(vals[i], 0.0) } else { ZERO })
}

/// Free `χ_{J,V}(ν, ε)` with occupied/empty blocks in place of `P`, `P⊥`; `ε = 0` allowed.
pub fn free_kubo(st: &SlaterState, j: &Mat<Complex64>, v: &Mat<Complex64>, nu: f64, eps: f64) -> Result<Complex64> {
    let half = st.gap / 2.0;
    let outside = if eps == 0.0 { nu.abs() >= half } else { nu.abs() > half };
    if outside {
        return Err(Error::FrequencyOutOfGap { nu, half_gap: half });
    }
    let jo = st.to_orbital_basis(j);
    let vo = st.to_orbital_basis(v);
    let e = &st.energies;
    let n = st.n;
    let acc: Complex64 = (0..n)
        .into_par_iter()
        .map(|a| {
            let mut s = ZERO;
            for m in n..e.len() {
                let d = e[m] - e[a];
                s += vo.read(a, m) * jo.read(m, a) / Complex64::new(d + nu, eps)
                    + jo.read(a, m) * vo.read(m, a) / Complex64::new(d - nu, -eps);
            }
            s
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(-acc)
}

/// Free-fermion Hall equivalence for one geometry; `kappa` from [`free_curvature`].
pub fn free_hall_equivalence(spec: &HamiltonianSpec, setup: &HallSetup, kappa: f64, gap_floor: f64) -> Result<HallReport> {
    let h = single_particle(spec, None)?;
    let st = SlaterState::new(&h, spec.n, gap_floor)?;
    let geom = hall_geometry(&spec.lattice, setup)?;
    let j = current_matrix(spec, None, &geom.path)?;
    let v = potential_matrix(&geom.potential);
    let chi = free_kubo(&st, &j, &v, 0.0, 0.0)?;
    Ok(HallReport::from_parts(setup, kappa, chi, geom.normalizer, st.gap))
}

/// Sites touched by the current operator of a path.
pub fn path_support(lattice: &TorusLattice, path: &DualPath) -> SiteSet {
    path.edges()
        .iter()
        .flat_map(|e| [e.right_site(lattice), e.left_site(lattice)])
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalityPoint {
    pub r: f64,
    pub region_size: usize,
    pub chi: Complex64,
    pub discrepancy: f64,
}

/// `|χ_{J,V} − χ_{J,V_{Z^r}}|` with `Z = supp J ∩ supp V` and `V_{Z^r} = ⟨v 1_{Z^r}, n⟩`.
pub fn free_locality_probe(
    spec: &HamiltonianSpec,
    path: &DualPath,
    v: &SiteFunction,
    radii: &[f64],
    gap_floor: f64,
) -> Result<(Complex64, Vec<LocalityPoint>)> {
    let lattice = &spec.lattice;
    let h = single_particle(spec, None)?;
    let st = SlaterState::new(&h, spec.n, gap_floor)?;
    let j = current_matrix(spec, None, path)?;
    let chi = free_kubo(&st, &j, &potential_matrix(v), 0.0, 0.0)?;
    let supp_v: SiteSet = lattice.sites().filter(|&s| v.get(s) != 0.0).collect();
    let z: SiteSet = path_support(lattice, path).intersection(&supp_v).copied().collect();
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r >= 0.0) {
            return Err(Error::Geometry(format!("locality radius must be non-negative, got {r}")));
        }
        let zr = lattice.neighborhood(&z, r);
        let vr = v.restricted(&zr);
        let chi_r = free_kubo(&st, &j, &potential_matrix(&vr), 0.0, 0.0)?;
        out.push(LocalityPoint {
            r,
            region_size: zr.len(),
            chi: chi_r,
            discrepancy: (chi - chi_r).norm(),
        });
    }
    Ok((chi, out))
}

/// Cell-periodic Bloch matrix of the Harper model at flux `2πp/q` (unit hopping scale `t`).
pub fn harper_bloch(p: i64, q: usize, t: f64, k1: f64, k2: f64) -> Mat<Complex64> {
    let flux = 2.0 * PI * p as f64 / q as f64;
    let qi = q as i64;
    let mut h = Mat::<Complex64>::zeros(q, q);
    for a in 0..qi {
        let up = (a + 1).rem_euclid(qi);
        let r_up = (a + 1).div_euclid(qi) as f64;
        let dn = (a - 1).rem_euclid(qi);
        let r_dn = (a - 1).div_euclid(qi) as f64;
        let (ai, ui, di) = (a as usize, up as usize, dn as usize);
        h.write(ai, ui, h.read(ai, ui) + Complex64::from_polar(t, -k1 * r_up));
        h.write(ai, di, h.read(ai, di) + Complex64::from_polar(t, -k1 * r_dn));
        h.write(ai, ai, h.read(ai, ai) + Complex64::new(2.0 * t * (flux * a as f64 - k2).cos(), 0.0));
    }
    h
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandChern {
    pub value: i64,
    pub raw: f64,
    pub min_gap_below: f64,
    pub min_gap_above: f64,
}

/// Link-variable Chern number of Bloch band `band` (0 = lowest) on an `M × M` grid.
pub fn band_chern(p: i64, q: usize, band: usize, m: usize) -> Result<BandChern> {
    if q == 0 || gcd(p.unsigned_abs(), q as u64) != 1 {
        return Err(Error::InvalidArgument(format!("flux p/q = {p}/{q} must be reduced with q ≥ 1")));
    }
    if band >= q {
        return Err(Error::InvalidArgument(format!("band {band} out of range for q = {q}")));
    }
    if m < 2 {
        return Err(Error::InvalidArgument(format!("Chern grid needs M ≥ 2, got {m}")));
    }
    let step = 2.0 * PI / m as f64;
    let points: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let eig: Vec<(Vec<f64>, CVec)> = points
        .par_iter()
        .map(|&(i, j)| {
            let (e, v) = dense::eigh(&harper_bloch(p, q, 1.0, i as f64 * step, j as f64 * step));
            (e, dense::column(&v, band))
        })
        .collect();
    let scale = 4.0;
    let tol = 1e-9 * scale;
    let mut below = f64::INFINITY;
    let mut above = f64::INFINITY;
    for (e, _) in &eig {
        if band > 0 {
            below = below.min(e[band] - e[band - 1]);
        }
        if band + 1 < q {
            above = above.min(e[band + 1] - e[band]);
        }
    }
    if below < tol {
        return Err(Error::BandTouching { lower: band - 1, upper: band, gap: below });
    }
    if above < tol {
        return Err(Error::BandTouching { lower: band, upper: band + 1, gap: above });
    }
    let idx = |i: usize, j: usize| (i % m) * m + (j % m);
    let mut link1 = vec![ZERO; m * m];
    let mut link2 = vec![ZERO; m * m];
    for i in 0..m {
        for j in 0..m {
            let here = &eig[idx(i, j)].1;
            link1[idx(i, j)] = dense::inner(here, &eig[idx(i + 1, j)].1);
            link2[idx(i, j)] = dense::inner(here, &eig[idx(i, j + 1)].1);
        }
    }
    let raw = plaquette_chern(m, &link1, &link2);
    Ok(BandChern {
        value: raw.round() as i64,
        raw,
        min_gap_below: below,
        min_gap_above: above,
    })
}

/// Sum of band Chern numbers of the lowest `bands` bands.
pub fn filled_band_chern(p: i64, q: usize, bands: usize, m: usize) -> Result<i64> {
    (0..bands).map(|b| band_chern(p, q, b, m).map(|c| c.value)).sum()
}
