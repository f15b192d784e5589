//! Compressed-sparse-row complex matrices.

use faer::Mat;
use num_complex::Complex64;
use rayon::prelude::*;

const PAR_ROWS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    /// Structure-preserving constructor; explicit zeros are kept.
    pub fn from_parts(n: usize, indptr: Vec<usize>, indices: Vec<usize>, values: Vec<Complex64>) -> Self {
        assert_eq!(indptr.len(), n + 1);
        assert_eq!(indices.len(), values.len());
        CsrMatrix { n, indptr, indices, values }
    }

    pub fn zeros(n: usize) -> Self {
        CsrMatrix {
            n,
            indptr: vec![0; n + 1],
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn diagonal(d: &[Complex64]) -> Self {
        let n = d.len();
        let mut m = CsrMatrix::zeros(n);
        for (i, &v) in d.iter().enumerate() {
            if v != Complex64::new(0.0, 0.0) {
                m.indices.push(i);
                m.values.push(v);
            }
            m.indptr[i + 1] = m.indices.len();
        }
        m
    }

    /// Sums duplicate entries; drops entries that are exactly zero.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, Complex64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<Complex64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < n && c < n);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { n, indptr, indices, values }.pruned()
    }

    fn pruned(self) -> Self {
        if self.values.iter().all(|v| *v != Complex64::new(0.0, 0.0)) {
            return self;
        }
        let mut out = CsrMatrix::zeros(self.n);
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.values[k] != Complex64::new(0.0, 0.0) {
                    out.indices.push(self.indices[k]);
                    out.values.push(self.values[k]);
                }
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.row(i)
            .filter(|&(c, _)| c == j)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    fn row_dot(&self, i: usize, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in self.indptr[i]..self.indptr[i + 1] {
            acc += self.values[k] * x[self.indices[k]];
        }
        acc
    }

    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        if self.n >= PAR_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn map_values(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        CsrMatrix {
            n: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
        .pruned()
    }

    pub fn adjoint(&self) -> Self {
        CsrMatrix::from_triplets(
            self.n,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect(),
        )
    }

    pub fn add_scaled(&self, other: &CsrMatrix, alpha: Complex64) -> Self {
        assert_eq!(self.n, other.n);
        let mut t: Vec<_> = self.triplets().collect();
        t.extend(other.triplets().map(|(i, j, v)| (i, j, alpha * v)));
        CsrMatrix::from_triplets(self.n, t)
    }

    pub fn matmul(&self, other: &CsrMatrix) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let rows: Vec<Vec<(usize, Complex64)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc: std::collections::BTreeMap<usize, Complex64> = Default::default();
                for (k, a) in self.row(i) {
                    for (j, b) in other.row(k) {
                        *acc.entry(j).or_default() += a * b;
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        let mut out = CsrMatrix::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row {
                out.indices.push(j);
                out.values.push(v);
            }
            out.indptr[i + 1] = out.indices.len();
        }
        out.pruned()
    }

    pub fn to_dense(&self) -> Mat<Complex64> {
        let mut m = Mat::<Complex64>::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m.write(i, j, m.read(i, j) + v);
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i == j)
    }
}
