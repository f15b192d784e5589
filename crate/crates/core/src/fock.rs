//! Fixed-particle-number fermionic bases and many-body operators.
//!
//! Bit `i` of a pattern is the occupation of site index `i`. The sign of
//! `c†_x c_y` is `(-1)^(occupied sites strictly between x and y)`.

use std::sync::Arc;

use faer::Mat;
use num_complex::Complex64;

use crate::dense::{self, CVec, ONE, ZERO};
use crate::error::{Error, Result};
use crate::forms::SiteFunction;
use crate::lattice::{Site, SiteSet, TorusLattice};
use crate::sparse::CsrMatrix;

pub const DEFAULT_SPARSE_CAP: usize = 5_000_000;
pub const DEFAULT_DENSE_CAP: usize = 200_000;

#[derive(Debug)]
pub struct SectorBasis {
    lattice: TorusLattice,
    n: usize,
    states: Vec<u64>,
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

impl SectorBasis {
    pub fn new(lattice: &TorusLattice, n: usize) -> Result<Arc<Self>> {
        Self::with_cap(lattice, n, DEFAULT_SPARSE_CAP)
    }

    pub fn with_cap(lattice: &TorusLattice, n: usize, cap: usize) -> Result<Arc<Self>> {
        let sites = lattice.num_sites();
        if sites > 64 {
            return Err(Error::Geometry(format!(
                "{sites} sites exceed the 64-bit occupation patterns"
            )));
        }
        if n > sites {
            return Err(Error::InvalidArgument(format!("N = {n} exceeds {sites} sites")));
        }
        let dim = binomial(sites, n);
        if dim > cap as u128 {
            return Err(Error::Capacity {
                sites,
                particles: n,
                dim,
                cap,
            });
        }
        let mut states = Vec::with_capacity(dim as usize);
        if n == 0 {
            states.push(0);
        } else {
            // Gosper's hack enumerates n-bit patterns in increasing order.
            let mut s: u128 = (1u128 << n) - 1;
            let limit: u128 = 1u128 << sites;
            while s < limit {
                states.push(s as u64);
                let c = s & s.wrapping_neg();
                let r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len() as u128, dim);
        Ok(Arc::new(SectorBasis {
            lattice: lattice.clone(),
            n,
            states,
        }))
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn index(&self, pattern: u64) -> Option<usize> {
        self.states.binary_search(&pattern).ok()
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag {
            l: self.lattice.side(),
            n: self.n,
        }
    }
}

/// Sector identity; two bases with equal tags are identical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisTag {
    pub l: usize,
    pub n: usize,
}

impl std::fmt::Display for BasisTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "L={},N={}", self.l, self.n)
    }
}

/// `(pattern', sign)` for `c†_x c_y |pattern>`, or `None` if it vanishes.
pub fn apply_hop(pattern: u64, x: Site, y: Site) -> Option<(u64, f64)> {
    debug_assert_ne!(x, y);
    let bx = 1u64 << x;
    let by = 1u64 << y;
    if pattern & by == 0 || pattern & bx != 0 {
        return None;
    }
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let between = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
    let sign = if (pattern & between).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((pattern ^ by ^ bx, sign))
}

#[derive(Clone, Debug)]
pub enum Repr {
    Sparse(CsrMatrix),
    Dense(Mat<Complex64>),
}

#[derive(Clone, Debug)]
pub struct ManyBodyOperator {
    tag: BasisTag,
    repr: Repr,
}

impl ManyBodyOperator {
    pub fn from_sparse(tag: BasisTag, m: CsrMatrix) -> Self {
        ManyBodyOperator {
            tag,
            repr: Repr::Sparse(m),
        }
    }

    pub fn from_dense(tag: BasisTag, m: Mat<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        ManyBodyOperator {
            tag,
            repr: Repr::Dense(m),
        }
    }

    pub fn zero(basis: &SectorBasis) -> Self {
        Self::from_sparse(basis.tag(), CsrMatrix::zeros(basis.dim()))
    }

    pub fn identity(basis: &SectorBasis) -> Self {
        Self::from_sparse(basis.tag(), CsrMatrix::identity(basis.dim()))
    }

    pub fn diagonal(basis: &SectorBasis, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), basis.dim());
        Self::from_sparse(basis.tag(), CsrMatrix::diagonal(d))
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn dim(&self) -> usize {
        match &self.repr {
            Repr::Sparse(m) => m.dim(),
            Repr::Dense(m) => m.nrows(),
        }
    }

    pub fn check_same(&self, other: &ManyBodyOperator) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::BasisMismatch(self.tag.to_string(), other.tag.to_string()));
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        match &self.repr {
            Repr::Sparse(m) => m.to_dense(),
            Repr::Dense(m) => m.clone(),
        }
    }

    pub fn as_sparse(&self) -> Option<&CsrMatrix> {
        match &self.repr {
            Repr::Sparse(m) => Some(m),
            Repr::Dense(_) => None,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match &self.repr {
            Repr::Sparse(m) => m.get(i, j),
            Repr::Dense(m) => m.read(i, j),
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> CVec {
        let mut y = vec![ZERO; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        match &self.repr {
            Repr::Sparse(m) => m.matvec_into(x, y),
            Repr::Dense(m) => y.copy_from_slice(&dense::matvec(m, x)),
        }
    }

    pub fn adjoint(&self) -> Self {
        let repr = match &self.repr {
            Repr::Sparse(m) => Repr::Sparse(m.adjoint()),
            Repr::Dense(m) => Repr::Dense(dense::adjoint(m)),
        };
        ManyBodyOperator { tag: self.tag, repr }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let repr = match &self.repr {
            Repr::Sparse(m) => Repr::Sparse(m.map_values(|v| c * v)),
            Repr::Dense(m) => Repr::Dense(dense::scale(m, c)),
        };
        ManyBodyOperator { tag: self.tag, repr }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, other: &ManyBodyOperator, alpha: Complex64) -> Result<Self> {
        self.check_same(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Sparse(a), Repr::Sparse(b)) => Repr::Sparse(a.add_scaled(b, alpha)),
            _ => Repr::Dense(self.to_dense() + dense::scale(&other.to_dense(), alpha)),
        };
        Ok(ManyBodyOperator { tag: self.tag, repr })
    }

    pub fn add(&self, other: &ManyBodyOperator) -> Result<Self> {
        self.add_scaled(other, ONE)
    }

    pub fn sub(&self, other: &ManyBodyOperator) -> Result<Self> {
        self.add_scaled(other, -ONE)
    }

    pub fn mul(&self, other: &ManyBodyOperator) -> Result<Self> {
        self.check_same(other)?;
        let repr = match (&self.repr, &other.repr) {
            (Repr::Sparse(a), Repr::Sparse(b)) => Repr::Sparse(a.matmul(b)),
            _ => Repr::Dense(self.to_dense() * other.to_dense()),
        };
        Ok(ManyBodyOperator { tag: self.tag, repr })
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &ManyBodyOperator) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        match &self.repr {
            Repr::Sparse(m) => m.max_abs(),
            Repr::Dense(m) => dense::max_abs(m),
        }
    }

    pub fn max_abs_diff(&self, other: &ManyBodyOperator) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    pub fn hs_norm(&self) -> f64 {
        match &self.repr {
            Repr::Sparse(m) => m.triplets().map(|(_, _, v)| v.norm_sqr()).sum::<f64>().sqrt(),
            Repr::Dense(m) => dense::hs_norm(m),
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.sub(&self.adjoint()).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    /// Power-iteration estimate of the operator norm of a Hermitian operator.
    pub fn norm_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut v: CVec = (0..n)
            .map(|i| Complex64::new(1.0 + (i % 7) as f64 * 0.1, (i % 3) as f64 * 0.05))
            .collect();
        dense::normalize(&mut v);
        let mut est = 0.0;
        for _ in 0..60 {
            let mut w = self.apply(&v);
            let nw = dense::normalize(&mut w);
            if (nw - est).abs() <= 1e-6 * nw.max(1e-300) {
                est = nw;
                break;
            }
            est = nw;
            v = w;
        }
        est
    }
}

/// `Σ amplitude · c†_x c_y` over the listed terms.
pub fn hopping_sum(basis: &SectorBasis, terms: &[(Site, Site, Complex64)]) -> Result<ManyBodyOperator> {
    let mut triplets = Vec::new();
    for &(x, y, amp) in terms {
        if x == y {
            return Err(Error::InvalidArgument(
                "hopping with x = y; use number_operator".into(),
            ));
        }
        for (col, &p) in basis.states().iter().enumerate() {
            if let Some((q, sign)) = apply_hop(p, x, y) {
                let row = basis.index(q).expect("hop stays in sector");
                triplets.push((row, col, amp * sign));
            }
        }
    }
    Ok(ManyBodyOperator::from_sparse(
        basis.tag(),
        CsrMatrix::from_triplets(basis.dim(), triplets),
    ))
}

/// `amplitude · c†_x c_y`.
pub fn hopping_term(basis: &SectorBasis, x: Site, y: Site, amplitude: Complex64) -> Result<ManyBodyOperator> {
    hopping_sum(basis, &[(x, y, amplitude)])
}

pub fn pattern_mask(set: &SiteSet) -> u64 {
    set.iter().fold(0u64, |m, &s| m | (1u64 << s))
}

/// `n_X = Σ_{x∈X} n_x`.
pub fn number_operator(basis: &SectorBasis, x: &SiteSet) -> ManyBodyOperator {
    let mask = pattern_mask(x);
    let d: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|p| Complex64::new((p & mask).count_ones() as f64, 0.0))
        .collect();
    ManyBodyOperator::diagonal(basis, &d)
}

/// `⟨θ, n⟩ = Σ_x θ(x) n_x` as diagonal values.
pub fn potential_diagonal(basis: &SectorBasis, theta: &SiteFunction) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|&p| {
            let mut acc = 0.0;
            let mut bits = p;
            while bits != 0 {
                let s = bits.trailing_zeros() as usize;
                acc += theta.get(s);
                bits &= bits - 1;
            }
            acc
        })
        .collect()
}

pub fn potential_operator(basis: &SectorBasis, theta: &SiteFunction) -> ManyBodyOperator {
    let d: Vec<Complex64> = potential_diagonal(basis, theta)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    ManyBodyOperator::diagonal(basis, &d)
}

/// `U_θ = exp(i⟨θ, n⟩)`.
pub fn gauge_unitary(basis: &SectorBasis, theta: &SiteFunction) -> ManyBodyOperator {
    let d: Vec<Complex64> = potential_diagonal(basis, theta)
        .into_iter()
        .map(|v| Complex64::from_polar(1.0, v))
        .collect();
    ManyBodyOperator::diagonal(basis, &d)
}

/// Phases of `U_θ` on each basis state.
pub fn gauge_phases(basis: &SectorBasis, theta: &SiteFunction) -> Vec<Complex64> {
    potential_diagonal(basis, theta)
        .into_iter()
        .map(|v| Complex64::from_polar(1.0, v))
        .collect()
}
