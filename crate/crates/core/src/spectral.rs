//! Ground states, gaps, the off-diagonal projection and the quasi-adiabatic map.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{self, CVec, I, ONE, ZERO};
use crate::error::{Error, Result};
use crate::fock::{BasisTag, ManyBodyOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectralMode {
    GroundOnly,
    Full,
}

#[derive(Clone, Copy, Debug)]
pub struct SpectralOptions {
    pub gap_floor: f64,
    /// Relative eigen-residual target `‖HΨ − E₀Ψ‖ / ‖H‖`.
    pub tol: f64,
    pub dense_cap: usize,
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Relative residual for conjugate-gradient resolvent solves.
    pub solve_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            gap_floor: 1e-6,
            tol: 1e-12,
            dense_cap: 4000,
            krylov_dim: 100,
            max_restarts: 400,
            solve_tol: 1e-13,
        }
    }
}

impl SpectralOptions {
    /// Full mode when the dimension allows a cheap dense decomposition, Lanczos otherwise.
    pub fn auto_mode(&self, dim: usize) -> SpectralMode {
        if dim <= 400.min(self.dense_cap) {
            SpectralMode::Full
        } else {
            SpectralMode::GroundOnly
        }
    }
}

#[derive(Clone, Debug)]
pub struct FullSpectrum {
    pub energies: Vec<f64>,
    /// Columns are eigenvectors.
    pub vectors: Mat<Complex64>,
}

#[derive(Clone, Debug)]
pub struct SpectralCache {
    pub hamiltonian: ManyBodyOperator,
    pub e0: f64,
    pub psi: CVec,
    /// `E₁ − E₀` (infinite for a one-dimensional sector).
    pub gap: f64,
    pub mode: SpectralMode,
    pub residual: f64,
    pub norm_h: f64,
    pub full: Option<FullSpectrum>,
    pub options: SpectralOptions,
}

struct Krylov {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<CVec>,
}

fn orthogonalize(v: &mut [Complex64], against: &[CVec], deflate: &[&[Complex64]]) {
    for _ in 0..2 {
        for u in deflate {
            dense::project_out(u, v);
        }
        for q in against {
            dense::project_out(q, v);
        }
    }
}

fn lanczos_run(h: &ManyBodyOperator, v0: &[Complex64], deflate: &[&[Complex64]], m_max: usize) -> Krylov {
    let mut q: CVec = v0.to_vec();
    orthogonalize(&mut q, &[], deflate);
    dense::normalize(&mut q);
    let mut k = Krylov {
        alpha: Vec::new(),
        beta: Vec::new(),
        basis: Vec::new(),
    };
    for _ in 0..m_max {
        let mut w = h.apply(&q);
        let a = dense::inner(&q, &w).re;
        k.basis.push(q);
        k.alpha.push(a);
        orthogonalize(&mut w, &k.basis, deflate);
        let b = dense::norm(&w);
        if b <= 1e-13 * (1.0 + a.abs()) || k.basis.len() == m_max {
            break;
        }
        k.beta.push(b);
        q = w.iter().map(|x| x / b).collect();
    }
    k
}

fn tridiagonal_eigs(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Mat<f64>) {
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.min(j)]
        } else {
            0.0
        }
    });
    dense::eigh_real(&t)
}

/// `exp(−iτH)v` from an `m`-step Lanczos projection; also returns the a-posteriori error estimate
/// `‖v‖ β_m |(e^{−iτT})_{m,1}|`, which is zero on an invariant subspace.
pub fn krylov_expm(h: &ManyBodyOperator, v: &[Complex64], tau: f64, m_max: usize) -> (CVec, f64) {
    let dim = v.len();
    let mut q: CVec = v.to_vec();
    let beta0 = dense::normalize(&mut q);
    if beta0 == 0.0 {
        return (vec![ZERO; dim], 0.0);
    }
    let m_max = m_max.min(dim).max(1);
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta = Vec::with_capacity(m_max);
    let mut basis: Vec<CVec> = Vec::with_capacity(m_max);
    let mut tail = 0.0;
    loop {
        let mut w = h.apply(&q);
        let a = dense::inner(&q, &w).re;
        basis.push(q);
        alpha.push(a);
        orthogonalize(&mut w, &basis, &[]);
        let b = dense::norm(&w);
        if b <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if basis.len() == m_max {
            tail = b;
            break;
        }
        beta.push(b);
        q = w.iter().map(|x| x / b).collect();
    }
    let (theta, y) = tridiagonal_eigs(&alpha, &beta);
    let m = alpha.len();
    let phases: Vec<Complex64> = theta.iter().map(|t| Complex64::from_polar(1.0, -tau * t)).collect();
    let coef: Vec<Complex64> = (0..m)
        .map(|k| (0..m).map(|j| phases[j] * (y.read(k, j) * y.read(0, j))).sum::<Complex64>() * beta0)
        .collect();
    let mut out = vec![ZERO; dim];
    for (c, qk) in coef.iter().zip(&basis) {
        dense::axpy(*c, qk, &mut out);
    }
    (out, tail * coef[m - 1].norm())
}

fn start_vector(dim: usize, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect()
}

/// Lowest eigenpair of `h` on the orthogonal complement of `deflate`, by restarted Lanczos.
pub fn lanczos_lowest(
    h: &ManyBodyOperator,
    deflate: &[&[Complex64]],
    opts: &SpectralOptions,
) -> Result<(f64, CVec, f64, f64)> {
    let dim = h.dim();
    let available = dim.saturating_sub(deflate.len());
    if available == 0 {
        return Err(Error::InvalidArgument("no space left after deflation".into()));
    }
    let m_max = opts.krylov_dim.min(available).max(1);
    let mut v = start_vector(dim, 0x5eed + deflate.len() as u64);
    let mut norm_h: f64 = 0.0;
    let mut last_residual = f64::INFINITY;
    for _ in 0..opts.max_restarts {
        let k = lanczos_run(h, &v, deflate, m_max);
        let (theta, y) = tridiagonal_eigs(&k.alpha, &k.beta);
        norm_h = norm_h.max(theta[0].abs()).max(theta[theta.len() - 1].abs());
        let mut x = vec![ZERO; dim];
        for (i, q) in k.basis.iter().enumerate() {
            dense::axpy(Complex64::new(y.read(i, 0), 0.0), q, &mut x);
        }
        orthogonalize(&mut x, &[], deflate);
        dense::normalize(&mut x);
        let hx = h.apply(&x);
        let e = dense::inner(&x, &hx).re;
        let mut r = hx.clone();
        dense::axpy(Complex64::new(-e, 0.0), &x, &mut r);
        orthogonalize(&mut r, &[], deflate);
        last_residual = dense::norm(&r);
        if last_residual <= opts.tol * norm_h.max(1.0) {
            return Ok((e, x, last_residual, norm_h));
        }
        v = x;
    }
    Err(Error::Solver {
        message: format!("Lanczos did not converge in {} restarts", opts.max_restarts),
        residual: last_residual,
    })
}

pub fn ground_state(h: &ManyBodyOperator, mode: SpectralMode, opts: &SpectralOptions) -> Result<SpectralCache> {
    let dim = h.dim();
    let (e0, psi, e1, residual, norm_h, full) = match mode {
        SpectralMode::Full => {
            if dim > opts.dense_cap {
                return Err(Error::Capability(format!(
                    "full eigendecomposition refused: dimension {dim} above dense cap {}",
                    opts.dense_cap
                )));
            }
            let (energies, vectors) = dense::eigh(&h.to_dense());
            let psi = dense::column(&vectors, 0);
            let e0 = energies[0];
            let e1 = energies.get(1).copied().unwrap_or(f64::INFINITY);
            let norm_h = energies[0].abs().max(energies[dim - 1].abs());
            let mut r = h.apply(&psi);
            dense::axpy(Complex64::new(-e0, 0.0), &psi, &mut r);
            let residual = dense::norm(&r);
            (e0, psi, e1, residual, norm_h, Some(FullSpectrum { energies, vectors }))
        }
        SpectralMode::GroundOnly => {
            let (e0, psi, residual, n0) = lanczos_lowest(h, &[], opts)?;
            let (e1, n1) = if dim > 1 {
                let (e1, _, _, n1) = lanczos_lowest(h, &[&psi], opts)?;
                (e1, n1)
            } else {
                (f64::INFINITY, 0.0)
            };
            (e0, psi, e1, residual, n0.max(n1), None)
        }
    };
    let gap = e1 - e0;
    if gap < opts.gap_floor {
        return Err(Error::GapViolation {
            gap,
            floor: opts.gap_floor,
            context: format!("ground state of {} sector", h.tag()),
        });
    }
    Ok(SpectralCache {
        hamiltonian: h.clone(),
        e0,
        psi,
        gap,
        mode,
        residual,
        norm_h,
        full,
        options: *opts,
    })
}

impl SpectralCache {
    pub fn tag(&self) -> BasisTag {
        self.hamiltonian.tag()
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn full(&self) -> Result<&FullSpectrum> {
        self.full
            .as_ref()
            .ok_or_else(|| Error::Capability("operation needs a full spectral cache".into()))
    }

    fn check(&self, o: &ManyBodyOperator) -> Result<()> {
        self.hamiltonian.check_same(o)
    }

    /// `ω(O) = ⟨Ψ, OΨ⟩`.
    pub fn expectation(&self, o: &ManyBodyOperator) -> Result<Complex64> {
        self.check(o)?;
        Ok(dense::inner(&self.psi, &o.apply(&self.psi)))
    }

    /// `Q v` with `Q = 1 − |Ψ⟩⟨Ψ|`.
    pub fn project_excited(&self, v: &[Complex64]) -> CVec {
        let mut out = v.to_vec();
        dense::project_out(&self.psi, &mut out);
        out
    }

    /// Components `⟨m|v⟩` in the eigenbasis.
    pub fn to_eigenbasis(&self, v: &[Complex64]) -> Result<CVec> {
        Ok(dense::adjoint_matvec(&self.full()?.vectors, v))
    }

    pub fn from_eigenbasis(&self, c: &[Complex64]) -> Result<CVec> {
        Ok(dense::matvec(&self.full()?.vectors, c))
    }

    /// Solves `(H − E₀ + shift) x = Q b` on the range of `Q`; needs `shift > −gap`.
    pub fn reduced_resolvent(&self, b: &[Complex64], shift: f64) -> Result<CVec> {
        if shift <= -self.gap {
            return Err(Error::InvalidArgument(format!(
                "shift {shift} makes the reduced resolvent singular (gap {})",
                self.gap
            )));
        }
        if let Some(full) = &self.full {
            let mut c = dense::adjoint_matvec(&full.vectors, b);
            c[0] = ZERO;
            for (m, cm) in c.iter_mut().enumerate().skip(1) {
                *cm /= full.energies[m] - self.e0 + shift;
            }
            return Ok(dense::matvec(&full.vectors, &c));
        }
        self.cg_solve(b, shift)
    }

    fn cg_solve(&self, b: &[Complex64], shift: f64) -> Result<CVec> {
        let apply = |v: &[Complex64]| -> CVec {
            let mut w = self.hamiltonian.apply(v);
            dense::axpy(Complex64::new(shift - self.e0, 0.0), v, &mut w);
            dense::project_out(&self.psi, &mut w);
            w
        };
        let rhs = self.project_excited(b);
        let bnorm = dense::norm(&rhs);
        let mut x = vec![ZERO; rhs.len()];
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut r = rhs.clone();
        let mut p = r.clone();
        let mut rr = dense::inner(&r, &r).re;
        let max_iter = 20 * rhs.len() + 200;
        for _ in 0..max_iter {
            let ap = apply(&p);
            let alpha = rr / dense::inner(&p, &ap).re;
            dense::axpy(Complex64::new(alpha, 0.0), &p, &mut x);
            dense::axpy(Complex64::new(-alpha, 0.0), &ap, &mut r);
            let rr_new = dense::inner(&r, &r).re;
            if rr_new.sqrt() <= self.options.solve_tol * bnorm {
                dense::project_out(&self.psi, &mut x);
                return Ok(x);
            }
            let beta = rr_new / rr;
            p = r.iter().zip(&p).map(|(ri, pi)| ri + beta * pi).collect();
            rr = rr_new;
        }
        Err(Error::Solver {
            message: "conjugate gradient did not converge".into(),
            residual: rr.sqrt() / bnorm,
        })
    }
}

/// Filter profile `Ŵ`: `−i/(√(2π) ζ)` for `|ζ| ≥ g/2`, linear inside the gap window.
#[derive(Clone, Copy, Debug)]
pub struct FilterTransform {
    pub gap: f64,
}

impl FilterTransform {
    pub fn new(gap: f64) -> Self {
        FilterTransform { gap }
    }

    pub fn w_hat(&self, zeta: f64) -> Complex64 {
        let s = (2.0 * PI).sqrt();
        if zeta.abs() >= self.gap / 2.0 {
            -I / (s * zeta)
        } else {
            -I * (4.0 * zeta) / (s * self.gap * self.gap)
        }
    }

    /// `√(2π) Ŵ(ζ)`.
    pub fn multiplier(&self, zeta: f64) -> Complex64 {
        (2.0 * PI).sqrt() * self.w_hat(zeta)
    }

    /// `√(2π) sup |Ŵ|`, attained at `|ζ| = g/2`.
    pub fn sup_multiplier(&self) -> f64 {
        2.0 / self.gap
    }
}

/// `Ō = PO P⊥ + P⊥ O P`.
pub fn offdiag(cache: &SpectralCache, o: &ManyBodyOperator) -> Result<ManyBodyOperator> {
    cache.check(o)?;
    let psi = &cache.psi;
    let o_psi = o.apply(psi);
    let odag_psi = o.adjoint().apply(psi);
    let w = dense::inner(psi, &o_psi);
    // PO = |Ψ⟩⟨O†Ψ|, OP = |OΨ⟩⟨Ψ|, POP = ω(O)|Ψ⟩⟨Ψ|.
    let m = dense::outer(psi, &odag_psi) + dense::outer(&o_psi, psi) - dense::scale(&dense::outer(psi, psi), 2.0 * w);
    Ok(ManyBodyOperator::from_dense(cache.tag(), m))
}

/// Matrix of `O` in the eigenbasis.
pub fn eigenbasis_matrix(cache: &SpectralCache, o: &ManyBodyOperator) -> Result<Mat<Complex64>> {
    cache.check(o)?;
    let v = &cache.full()?.vectors;
    Ok(v.adjoint() * o.to_dense() * v)
}

fn from_eigenbasis_matrix(cache: &SpectralCache, m: &Mat<Complex64>) -> Result<ManyBodyOperator> {
    let v = &cache.full()?.vectors;
    Ok(ManyBodyOperator::from_dense(cache.tag(), v * m * v.adjoint()))
}

/// `I(O)_{mn} = √(2π) Ŵ(E_n − E_m) O_{mn}` in the eigenbasis.
pub fn quasi_adiabatic_map(cache: &SpectralCache, o: &ManyBodyOperator) -> Result<ManyBodyOperator> {
    let full = cache.full()?;
    let filter = FilterTransform::new(cache.gap);
    let e = &full.energies;
    let mut m = eigenbasis_matrix(cache, o)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m.write(i, j, m.read(i, j) * filter.multiplier(e[j] - e[i]));
        }
    }
    from_eigenbasis_matrix(cache, &m)
}

/// `iω([A, B])`.
pub fn i_omega_commutator(cache: &SpectralCache, a: &ManyBodyOperator, b: &ManyBodyOperator) -> Result<Complex64> {
    cache.check(a)?;
    cache.check(b)?;
    let psi = &cache.psi;
    let ab = dense::inner(psi, &a.apply(&b.apply(psi)));
    let ba = dense::inner(psi, &b.apply(&a.apply(psi)));
    Ok(I * (ab - ba))
}

/// `∂P = |δ⟩⟨Ψ| + |Ψ⟩⟨δ|` with `δ = −R ∂H Ψ`.
pub fn projector_derivative_perturbation(cache: &SpectralCache, dh: &ManyBodyOperator) -> Result<ManyBodyOperator> {
    let delta = perturbed_state(cache, dh)?;
    let m = dense::outer(&delta, &cache.psi) + dense::outer(&cache.psi, &delta);
    Ok(ManyBodyOperator::from_dense(cache.tag(), m))
}

/// First-order ground-state correction `δ = Σ_{m≠0} |m⟩⟨m|∂H|Ψ⟩ / (E₀ − E_m)`.
pub fn perturbed_state(cache: &SpectralCache, dh: &ManyBodyOperator) -> Result<CVec> {
    cache.check(dh)?;
    let x = cache.reduced_resolvent(&dh.apply(&cache.psi), 0.0)?;
    Ok(dense::scaled(-ONE, &x))
}

/// `(P(+h) − P(−h)) / 2h` from ground states of the two stencil Hamiltonians.
pub fn projector_derivative_fd(
    plus: &SpectralCache,
    minus: &SpectralCache,
    h: f64,
) -> Result<ManyBodyOperator> {
    plus.hamiltonian.check_same(&minus.hamiltonian)?;
    let m = dense::scale(
        &(dense::outer(&plus.psi, &plus.psi) - dense::outer(&minus.psi, &minus.psi)),
        Complex64::new(0.5 / h, 0.0),
    );
    Ok(ManyBodyOperator::from_dense(plus.tag(), m))
}

/// `(∂P) Ψ` from the finite-difference stencil, without forming `∂P`.
pub fn projector_derivative_fd_on(
    plus: &SpectralCache,
    minus: &SpectralCache,
    h: f64,
    psi: &[Complex64],
) -> CVec {
    let cp = dense::inner(&plus.psi, psi);
    let cm = dense::inner(&minus.psi, psi);
    plus.psi
        .iter()
        .zip(&minus.psi)
        .map(|(p, m)| (p * cp - m * cm) / (2.0 * h))
        .collect()
}
