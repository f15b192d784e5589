//! Discrete one-forms and scalar potentials on the torus.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::lattice::{Direction, OrientedEdge, Site, SiteSet, TorusLattice};

/// Antisymmetric edge function stored on canonical (positive) edges.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    lattice: TorusLattice,
    values: Vec<f64>,
}

impl OneForm {
    pub fn zero(lattice: &TorusLattice) -> Self {
        OneForm {
            lattice: lattice.clone(),
            values: vec![0.0; lattice.num_edges()],
        }
    }

    /// Builds a form from its values on canonical edges.
    pub fn from_canonical(lattice: &TorusLattice, f: impl Fn(OrientedEdge) -> f64) -> Self {
        OneForm {
            lattice: lattice.clone(),
            values: lattice.canonical_edges().map(f).collect(),
        }
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn canonical_values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: OrientedEdge) -> f64 {
        let (i, sign) = self.lattice.canonical(e);
        sign * self.values[i]
    }

    pub fn set(&mut self, e: OrientedEdge, value: f64) {
        let (i, sign) = self.lattice.canonical(e);
        self.values[i] = sign * value;
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, c: f64) -> Self {
        OneForm {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &OneForm) -> Self {
        assert_eq!(self.lattice, other.lattice, "one-forms on different lattices");
        OneForm {
            lattice: self.lattice.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &OneForm) -> Self {
        self.add(&other.scaled(-1.0))
    }

    pub fn plaquette_circulation(&self, s: Site) -> f64 {
        self.lattice.plaquette(s).iter().map(|&e| self.get(e)).sum()
    }

    /// No plaquette carries circulation above `tol`.
    pub fn is_vortex_free(&self, tol: f64) -> bool {
        self.lattice
            .sites()
            .all(|s| self.plaquette_circulation(s).abs() <= tol)
    }

    /// Support: sites touching an edge where the form is nonzero.
    pub fn support(&self) -> SiteSet {
        let mut out = SiteSet::new();
        for (i, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                let e = self.lattice.edge_from_canonical(i);
                out.insert(e.source);
                out.insert(self.lattice.edge_target(e));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SiteFunction {
    lattice: TorusLattice,
    values: Vec<f64>,
}

impl SiteFunction {
    pub fn zero(lattice: &TorusLattice) -> Self {
        SiteFunction {
            lattice: lattice.clone(),
            values: vec![0.0; lattice.num_sites()],
        }
    }

    pub fn from_fn(lattice: &TorusLattice, f: impl Fn(Site) -> f64) -> Self {
        SiteFunction {
            lattice: lattice.clone(),
            values: lattice.sites().map(f).collect(),
        }
    }

    pub fn from_values(lattice: &TorusLattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.num_sites() {
            return Err(Error::InvalidArgument(format!(
                "site function needs {} values, got {}",
                lattice.num_sites(),
                values.len()
            )));
        }
        Ok(SiteFunction {
            lattice: lattice.clone(),
            values,
        })
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: Site) -> f64 {
        self.values[s]
    }

    pub fn set(&mut self, s: Site, v: f64) {
        self.values[s] = v;
    }

    pub fn scaled(&self, c: f64) -> Self {
        SiteFunction {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &SiteFunction) -> Self {
        assert_eq!(self.lattice, other.lattice, "site functions on different lattices");
        SiteFunction {
            lattice: self.lattice.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        }
    }

    /// Restriction to `set`, zero elsewhere.
    pub fn restricted(&self, set: &SiteSet) -> Self {
        SiteFunction::from_fn(&self.lattice, |s| if set.contains(&s) { self.values[s] } else { 0.0 })
    }
}

/// `∫_γ A = Σ_{e∈γ} A(e)`.
pub fn integrate(a: &OneForm, path: &[OrientedEdge]) -> Result<f64> {
    let lattice = a.lattice();
    for (i, w) in path.windows(2).enumerate() {
        if lattice.edge_target(w[0]) != w[1].source {
            return Err(Error::MalformedPath(format!(
                "edge {} ends at {:?}, edge {} starts at {:?}",
                i,
                lattice.coords(lattice.edge_target(w[0])),
                i + 1,
                lattice.coords(w[1].source)
            )));
        }
    }
    Ok(path.iter().map(|&e| a.get(e)).sum())
}

/// `dθ((x, y)) = θ(y) - θ(x)`.
pub fn exterior_derivative(theta: &SiteFunction) -> OneForm {
    let lattice = theta.lattice();
    OneForm::from_canonical(lattice, |e| {
        theta.get(lattice.edge_target(e)) - theta.get(e.source)
    })
}

/// `ξ_j`: `1/L` on edges pointing in the positive `j` direction.
pub fn standard_flux_form(lattice: &TorusLattice, direction: u8) -> Result<OneForm> {
    let dir = match direction {
        1 => Direction::East,
        2 => Direction::North,
        _ => return Err(Error::InvalidArgument(format!("flux direction {direction} not in {{1,2}}"))),
    };
    let inv = 1.0 / lattice.side() as f64;
    Ok(OneForm::from_canonical(lattice, |e| if e.dir == dir { inv } else { 0.0 }))
}

const EXACTNESS_TOL: f64 = 1e-10;

/// Spanning-forest potential on `Σ`; anchors at the smallest site of each component.
pub fn find_potential(a: &OneForm, sigma: &SiteSet) -> Result<SiteFunction> {
    let lattice = a.lattice();
    let n = lattice.num_sites();
    let mut theta = vec![0.0; n];
    let mut parent: Vec<Option<OrientedEdge>> = vec![None; n];
    let mut visited = vec![false; n];
    let scale = 1.0 + a.sup_norm() * lattice.num_edges() as f64;

    for &root in sigma {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut queue = VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            for dir in Direction::ALL {
                let e = OrientedEdge::new(x, dir);
                let y = lattice.edge_target(e);
                if !sigma.contains(&y) || visited[y] {
                    continue;
                }
                visited[y] = true;
                theta[y] = theta[x] + a.get(e);
                parent[y] = Some(e);
                queue.push_back(y);
            }
        }
    }

    // Each non-tree edge closes exactly one fundamental cycle.
    for e in lattice.canonical_edges() {
        let (x, y) = (e.source, lattice.edge_target(e));
        if !(sigma.contains(&x) && sigma.contains(&y)) {
            continue;
        }
        let circulation = a.get(e) - (theta[y] - theta[x]);
        if circulation.abs() > EXACTNESS_TOL * scale {
            return Err(Error::Inexact {
                witness: fundamental_cycle(lattice, &parent, e),
                circulation,
            });
        }
    }

    let mut out = SiteFunction::zero(lattice);
    for &s in sigma {
        out.set(s, theta[s]);
    }
    Ok(out)
}

fn path_to_root(lattice: &TorusLattice, parent: &[Option<OrientedEdge>], mut x: Site) -> Vec<OrientedEdge> {
    let mut out = Vec::new();
    while let Some(e) = parent[x] {
        out.push(lattice.reverse_edge(e));
        x = e.source;
    }
    out
}

fn fundamental_cycle(lattice: &TorusLattice, parent: &[Option<OrientedEdge>], e: OrientedEdge) -> Vec<OrientedEdge> {
    let up_from_target = path_to_root(lattice, parent, lattice.edge_target(e));
    let up_from_source = path_to_root(lattice, parent, e.source);
    // Trim the common tail above the lowest common ancestor.
    let mut a = up_from_target.len();
    let mut b = up_from_source.len();
    while a > 0 && b > 0 && up_from_target[a - 1] == up_from_source[b - 1] {
        a -= 1;
        b -= 1;
    }
    let mut cycle = vec![e];
    cycle.extend_from_slice(&up_from_target[..a]);
    cycle.extend(up_from_source[..b].iter().rev().map(|&f| lattice.reverse_edge(f)));
    cycle
}

pub fn is_exact(a: &OneForm, sigma: &SiteSet) -> bool {
    find_potential(a, sigma).is_ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StripVariant {
    /// Linear in the strip, linear descent over every other column.
    Bulk,
    /// Linear in the strip, flat on the flanks `ℓ < |x1| <= ℓ+2r`, descent elsewhere.
    FlatFlanks,
    /// Flat flanks extended to the antipodal column; the whole drop sits on one edge.
    TwoZone,
}

#[derive(Clone, Debug)]
pub struct StripPotential {
    pub v: SiteFunction,
    pub delta_v: f64,
}

/// Potential depending on `x1` only with `dv = E dx1` on `{|x1| <= ℓ}^e`.
pub fn build_strip_potential(
    lattice: &TorusLattice,
    e_field: f64,
    ell: usize,
    r: usize,
    variant: StripVariant,
) -> Result<StripPotential> {
    let l = lattice.side() as i64;
    let ell_i = ell as i64;
    if 2 * ell_i + 1 > l {
        return Err(Error::Config(format!(
            "strip |x1| <= {ell} does not fit on L = {l}"
        )));
    }
    let lo = lattice.lo();
    let hi = lattice.hi();
    let top = e_field * ell as f64;
    // Columns walked eastward from x1 = ℓ around the torus back to x1 = -ℓ.
    let outer: Vec<i64> = (1..l - 2 * ell_i).map(|k| lattice.wrap(ell_i + k)).collect();
    let mut profile = std::collections::BTreeMap::new();
    for x1 in -ell_i..=ell_i {
        profile.insert(x1, e_field * x1 as f64);
    }
    let steps = outer.len() as f64 + 1.0;
    match variant {
        StripVariant::Bulk => {
            for (k, &x1) in outer.iter().enumerate() {
                profile.insert(x1, top - 2.0 * top * (k as f64 + 1.0) / steps);
            }
        }
        StripVariant::FlatFlanks | StripVariant::TwoZone => {
            let reach = if variant == StripVariant::TwoZone { l } else { ell_i + 2 * r as i64 };
            let in_flank = |x1: i64| x1.abs() > ell_i && x1.abs() <= reach;
            let descent: Vec<i64> = outer.iter().copied().filter(|&x| !in_flank(x)).collect();
            let dsteps = descent.len() as f64 + 1.0;
            for &x1 in &outer {
                if in_flank(x1) {
                    profile.insert(x1, if x1 > 0 { top } else { -top });
                }
            }
            for (k, &x1) in descent.iter().enumerate() {
                profile.insert(x1, top - 2.0 * top * (k as f64 + 1.0) / dsteps);
            }
        }
    }
    debug_assert_eq!(profile.len(), (hi - lo + 1) as usize);
    let v = SiteFunction::from_fn(lattice, |s| profile[&lattice.coords(s).0]);
    let delta_v = v.get(lattice.site(ell_i, 0)) - v.get(lattice.site(-ell_i, 0));
    Ok(StripPotential { v, delta_v })
}

/// Sites with `|x1| <= ℓ` (representative coordinates).
pub fn strip_sites(lattice: &TorusLattice, ell: usize) -> SiteSet {
    lattice
        .sites()
        .filter(|&s| lattice.coords(s).0.unsigned_abs() as usize <= ell)
        .collect()
}
