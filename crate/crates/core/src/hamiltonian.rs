//! Number-conserving lattice Hamiltonians with Peierls-coupled vector potentials.
//!
//! The coefficient of `c†_x c_y` in `H_A` is `α(x, y) e^{iA((y, x))}`: the phase
//! follows the hop `y -> x`. With `dθ((x,y)) = θ(y) - θ(x)` this gives
//! `U_θ H_A U_θ† = H_{A + dθ}` for `U_θ = exp(i⟨θ, n⟩)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{I, ZERO};
use crate::error::{Error, Result};
use crate::fock::{apply_hop, hopping_sum, ManyBodyOperator, SectorBasis};
use crate::forms::{standard_flux_form, OneForm, SiteFunction};
use crate::lattice::{Direction, DualPath, OrientedEdge, Site, SiteSet, TorusLattice};
use crate::sparse::CsrMatrix;

/// `coefficient · Π_{x ∈ sites} n_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityTerm {
    pub sites: Vec<Site>,
    pub coefficient: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianSpec {
    pub lattice: TorusLattice,
    /// `α(source, target)` on canonical edges: coefficient of `c†_source c_target`.
    pub hopping: Vec<Complex64>,
    pub interaction: Vec<DensityTerm>,
    pub mu: f64,
    pub n: usize,
    pub base_flux: f64,
    pub range: f64,
    pub strength: f64,
}

impl HamiltonianSpec {
    pub fn empty(lattice: &TorusLattice, n: usize) -> Self {
        HamiltonianSpec {
            lattice: lattice.clone(),
            hopping: vec![ZERO; lattice.num_edges()],
            interaction: Vec::new(),
            mu: 0.0,
            n,
            base_flux: 0.0,
            range: 0.0,
            strength: 0.0,
        }
    }

    /// Vertical bonds `t e^{iΦ x1}`, horizontal bonds `t`, `U Σ_{x∼y} n_x n_y`, `-μN`.
    pub fn harper(l: usize, t: f64, phi: f64, u: f64, mu: f64, n: usize) -> Result<Self> {
        let lattice = TorusLattice::new(l)?;
        let windings = phi * l as f64 / (2.0 * PI);
        if (windings - windings.round()).abs() > 1e-12 * windings.abs().max(1.0) {
            return Err(Error::Incommensurate { phi, l });
        }
        let mut spec = HamiltonianSpec::empty(&lattice, n);
        spec.mu = mu;
        spec.base_flux = phi;
        for e in lattice.canonical_edges() {
            let (i, _) = lattice.canonical(e);
            spec.hopping[i] = match e.dir {
                Direction::East => Complex64::new(t, 0.0),
                _ => Complex64::from_polar(t, phi * lattice.coords(e.source).0 as f64),
            };
        }
        if u != 0.0 {
            for e in lattice.canonical_edges() {
                spec.interaction.push(DensityTerm {
                    sites: vec![e.source, lattice.edge_target(e)],
                    coefficient: u,
                });
            }
            spec.range = 1.0;
            spec.strength = u.abs();
        }
        Ok(spec)
    }

    /// Adds `Σ_x w(x) n_x`.
    pub fn with_onsite(mut self, w: &SiteFunction) -> Self {
        for s in self.lattice.sites() {
            if w.get(s) != 0.0 {
                self.interaction.push(DensityTerm {
                    sites: vec![s],
                    coefficient: w.get(s),
                });
                self.strength = self.strength.max(w.get(s).abs());
            }
        }
        self
    }

    /// On-site potentials uniform in `[-amplitude/2, amplitude/2]`.
    pub fn with_disorder(self, amplitude: f64, seed: u64) -> Self {
        if amplitude == 0.0 {
            return self;
        }
        let w = disorder_potential(&self.lattice, amplitude, seed);
        self.with_onsite(&w)
    }

    /// Coefficient of `c†_{e.source} c_{e.target}` at zero vector potential.
    pub fn alpha(&self, e: OrientedEdge) -> Complex64 {
        let (i, sign) = self.lattice.canonical(e);
        if sign > 0.0 {
            self.hopping[i]
        } else {
            self.hopping[i].conj()
        }
    }

    /// Coefficient of `c†_{e.source} c_{e.target}` in `H_A`.
    pub fn peierls_alpha(&self, a: Option<&OneForm>, e: OrientedEdge) -> Complex64 {
        let phase = a.map_or(0.0, |a| -a.get(e));
        self.alpha(e) * Complex64::from_polar(1.0, phase)
    }

    pub fn is_quadratic(&self) -> bool {
        self.interaction.iter().all(|t| t.sites.len() <= 1 || t.coefficient == 0.0)
    }

    pub fn onsite(&self) -> SiteFunction {
        let mut w = SiteFunction::zero(&self.lattice);
        for t in self.interaction.iter().filter(|t| t.sites.len() == 1) {
            w.set(t.sites[0], w.get(t.sites[0]) + t.coefficient);
        }
        w
    }

    /// Checks Hermiticity bookkeeping and the recorded range/strength bounds.
    pub fn validate(&self) -> Result<()> {
        if self.hopping.len() != self.lattice.num_edges() {
            return Err(Error::Config("hopping table does not cover all edges".into()));
        }
        if self.n > self.lattice.num_sites() {
            return Err(Error::Config(format!("N = {} exceeds the number of sites", self.n)));
        }
        for t in &self.interaction {
            let diam = t
                .sites
                .iter()
                .flat_map(|&x| t.sites.iter().map(move |&y| (x, y)))
                .map(|(x, y)| self.lattice.dist(x, y))
                .fold(0.0, f64::max);
            if diam > self.range + 1e-12 {
                return Err(Error::Config(format!("interaction diameter {diam} exceeds range {}", self.range)));
            }
            if t.coefficient.abs() > self.strength + 1e-12 {
                return Err(Error::Config(format!(
                    "interaction strength {} exceeds bound {}",
                    t.coefficient, self.strength
                )));
            }
        }
        Ok(())
    }

    /// Stable hash of every parameter, for report provenance.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        feed(self.lattice.side() as u64);
        feed(self.n as u64);
        for z in &self.hopping {
            feed(z.re.to_bits());
            feed(z.im.to_bits());
        }
        for t in &self.interaction {
            for &s in &t.sites {
                feed(s as u64);
            }
            feed(t.coefficient.to_bits());
        }
        feed(self.mu.to_bits());
        feed(self.base_flux.to_bits());
        format!("{h:016x}")
    }
}

pub fn disorder_potential(lattice: &TorusLattice, amplitude: f64, seed: u64) -> SiteFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = lattice.sites().map(|_| amplitude * (rng.gen::<f64>() - 0.5)).collect();
    SiteFunction::from_values(lattice, values).expect("one value per site")
}

/// `φ1 ξ1 + φ2 ξ2`.
pub fn twist_form(lattice: &TorusLattice, phi1: f64, phi2: f64) -> OneForm {
    let x1 = standard_flux_form(lattice, 1).expect("direction 1");
    let x2 = standard_flux_form(lattice, 2).expect("direction 2");
    x1.scaled(phi1).add(&x2.scaled(phi2))
}

#[derive(Clone, Debug)]
struct HopEntry {
    slot: usize,
    amp: Complex64,
    edge: usize,
    /// `+1` when the hop runs along the canonical edge, `-1` against it.
    orient: f64,
}

/// Hamiltonian family `A ↦ H_A` on one particle-number sector with a fixed sparsity pattern.
#[derive(Debug)]
pub struct SectorModel {
    spec: Arc<HamiltonianSpec>,
    basis: Arc<SectorBasis>,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    diag_slots: Vec<usize>,
    diag: Vec<f64>,
    hops: Vec<HopEntry>,
}

impl SectorModel {
    pub fn new(spec: &HamiltonianSpec) -> Result<Arc<Self>> {
        spec.validate()?;
        let basis = SectorBasis::new(&spec.lattice, spec.n)?;
        Self::with_basis(spec, basis)
    }

    pub fn with_basis(spec: &HamiltonianSpec, basis: Arc<SectorBasis>) -> Result<Arc<Self>> {
        if basis.tag().l != spec.lattice.side() || basis.particles() != spec.n {
            return Err(Error::BasisMismatch(
                basis.tag().to_string(),
                format!("L={},N={}", spec.lattice.side(), spec.n),
            ));
        }
        let lattice = &spec.lattice;
        let dim = basis.dim();
        let mut raw: Vec<(usize, usize, Complex64, usize, f64)> = Vec::new();
        for e in lattice.canonical_edges() {
            let (k, _) = lattice.canonical(e);
            let a = spec.hopping[k];
            if a == ZERO {
                continue;
            }
            let (s, t) = (e.source, lattice.edge_target(e));
            for (col, &p) in basis.states().iter().enumerate() {
                if let Some((q, sign)) = apply_hop(p, s, t) {
                    raw.push((basis.index(q).unwrap(), col, a * sign, k, -1.0));
                }
                if let Some((q, sign)) = apply_hop(p, t, s) {
                    raw.push((basis.index(q).unwrap(), col, a.conj() * sign, k, 1.0));
                }
            }
        }

        let mut positions: Vec<(usize, usize)> = raw.iter().map(|r| (r.0, r.1)).collect();
        positions.extend((0..dim).map(|i| (i, i)));
        positions.sort_unstable();
        positions.dedup();
        let mut indptr = vec![0usize; dim + 1];
        for &(r, _) in &positions {
            indptr[r + 1] += 1;
        }
        for i in 0..dim {
            indptr[i + 1] += indptr[i];
        }
        let indices: Vec<usize> = positions.iter().map(|p| p.1).collect();
        let slot = |r: usize, c: usize| -> usize {
            let row = &indices[indptr[r]..indptr[r + 1]];
            indptr[r] + row.binary_search(&c).expect("position in pattern")
        };
        let hops = raw
            .iter()
            .map(|&(r, c, amp, edge, orient)| HopEntry {
                slot: slot(r, c),
                amp,
                edge,
                orient,
            })
            .collect();
        let diag_slots = (0..dim).map(|i| slot(i, i)).collect();

        let diag = basis
            .states()
            .iter()
            .map(|&p| {
                let mut e = -spec.mu * spec.n as f64;
                for term in &spec.interaction {
                    if term.sites.iter().all(|&x| p & (1u64 << x) != 0) {
                        e += term.coefficient;
                    }
                }
                e
            })
            .collect();

        Ok(Arc::new(SectorModel {
            spec: Arc::new(spec.clone()),
            basis,
            indptr,
            indices,
            diag_slots,
            diag,
            hops,
        }))
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn basis(&self) -> &Arc<SectorBasis> {
        &self.basis
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.spec.lattice
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn finish(&self, values: Vec<Complex64>) -> ManyBodyOperator {
        ManyBodyOperator::from_sparse(
            self.basis.tag(),
            CsrMatrix::from_parts(self.dim(), self.indptr.clone(), self.indices.clone(), values),
        )
    }

    fn edge_value(a: Option<&OneForm>, edge: usize) -> f64 {
        a.map_or(0.0, |a| a.canonical_values()[edge])
    }

    /// `Σ_k c_k H_{A_k}`; the coefficients are expected to sum to one for a Hamiltonian.
    pub fn assemble_mix(&self, terms: &[(f64, Option<&OneForm>)]) -> ManyBodyOperator {
        let mut values = vec![ZERO; self.indices.len()];
        let total: f64 = terms.iter().map(|t| t.0).sum();
        for (i, &d) in self.diag.iter().enumerate() {
            values[self.diag_slots[i]] += Complex64::new(total * d, 0.0);
        }
        for h in &self.hops {
            for &(c, a) in terms {
                let phase = h.orient * Self::edge_value(a, h.edge);
                values[h.slot] += c * h.amp * Complex64::from_polar(1.0, phase);
            }
        }
        self.finish(values)
    }

    /// `H_A`.
    pub fn assemble(&self, a: Option<&OneForm>) -> ManyBodyOperator {
        self.assemble_mix(&[(1.0, a)])
    }

    pub fn hamiltonian(&self) -> ManyBodyOperator {
        self.assemble(None)
    }

    /// `H(φ1, φ2) = H_{φ1 ξ1 + φ2 ξ2}`.
    pub fn twist(&self, phi1: f64, phi2: f64) -> ManyBodyOperator {
        let a = twist_form(self.lattice(), phi1, phi2);
        self.assemble(Some(&a))
    }

    /// `∂_s H_{A0 + s B}` at `s = 0`.
    pub fn derivative(&self, base: Option<&OneForm>, direction: &OneForm) -> ManyBodyOperator {
        let mut values = vec![ZERO; self.indices.len()];
        for h in &self.hops {
            let b = direction.canonical_values()[h.edge];
            if b == 0.0 {
                continue;
            }
            let phase = h.orient * Self::edge_value(base, h.edge);
            values[h.slot] += h.amp * Complex64::from_polar(1.0, phase) * I * (h.orient * b);
        }
        self.finish(values)
    }

    /// `W = ∂_s H_{sA}|_{s=0}`.
    pub fn drive_generator(&self, a: &OneForm) -> ManyBodyOperator {
        self.derivative(None, a)
    }

    /// `∂_{φ_j} H(φ)` at `φ = 0`.
    pub fn flux_derivative(&self, direction: u8) -> Result<ManyBodyOperator> {
        let xi = standard_flux_form(self.lattice(), direction)?;
        Ok(self.derivative(None, &xi))
    }

    /// `i[H_A, n_X]`.
    pub fn current_loop(&self, a: Option<&OneForm>, x: &SiteSet) -> CurrentOperator {
        let h = self.assemble(a);
        let mask = crate::fock::pattern_mask(x);
        let count: Vec<f64> = self
            .basis
            .states()
            .iter()
            .map(|p| (p & mask).count_ones() as f64)
            .collect();
        let m = h.as_sparse().expect("assembled Hamiltonians are sparse");
        let triplets = m
            .triplets()
            .map(|(i, j, v)| (i, j, I * v * (count[j] - count[i])))
            .collect();
        CurrentOperator {
            paths: self.lattice().boundary_path(x),
            operator: ManyBodyOperator::from_sparse(
                self.basis.tag(),
                CsrMatrix::from_triplets(self.dim(), triplets),
            ),
        }
    }

    /// `J_γ = i Σ_{e∈γ} (T_{e_L←e_R} − T_{e_R←e_L})` with `T_{a←b}` the `c†_a c_b` term of `H_A`.
    pub fn current_path(&self, a: Option<&OneForm>, path: &DualPath) -> Result<CurrentOperator> {
        let lattice = self.lattice();
        path.check_boundary_compatible(lattice)?;
        let mut terms = Vec::with_capacity(2 * path.len());
        for de in path.edges() {
            let cross = de.crossing(lattice);
            let back = lattice.reverse_edge(cross);
            let (r, l) = (cross.source, back.source);
            // back = (e_L -> e_R): coefficient of c†_L c_R; cross: coefficient of c†_R c_L.
            terms.push((l, r, I * self.spec.peierls_alpha(a, back)));
            terms.push((r, l, -I * self.spec.peierls_alpha(a, cross)));
        }
        Ok(CurrentOperator {
            paths: vec![path.clone()],
            operator: hopping_sum(&self.basis, &terms)?,
        })
    }

    /// Edge-sum form of `J_∂X` over every boundary loop of `X`.
    pub fn current_loop_edge_sum(&self, a: Option<&OneForm>, x: &SiteSet) -> Result<CurrentOperator> {
        let loops = self.lattice().boundary_path(x);
        let mut op = ManyBodyOperator::zero(&self.basis);
        for p in &loops {
            op = op.add(&self.current_path(a, p)?.operator)?;
        }
        Ok(CurrentOperator { paths: loops, operator: op })
    }
}

#[derive(Clone, Debug)]
pub struct CurrentOperator {
    pub paths: Vec<DualPath>,
    pub operator: ManyBodyOperator,
}
