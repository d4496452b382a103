//! Dense complex matrices and tensor-factor kernels.
//!
//! Matrices are square and stored row-major. Multi-site operators use a uniform local
//! dimension `d`; the factor at position `0` is the most significant digit of the basis
//! index, so index `i = sum_k s_k * d^(n-1-k)`.
//!
//! Eigendecompositions and products are delegated to `faer`; the factor-level kernels
//! (partial trace, permutation, local application) are index gathers written here.

use std::ops::{Add, Mul, Sub};

use faer::{mat, Mat, MatRef, Side};

/// Complex scalar used throughout the crate.
pub type C64 = faer::complex_native::c64;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = C64::new(x, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data. Returns `None` unless `data.len()` is a square.
    pub fn from_row_major(dim: usize, data: Vec<C64>) -> Option<Self> {
        (data.len() == dim * dim).then_some(Self { dim, data })
    }

    /// Rank-one projector `|psi><psi|` (no normalization).
    pub fn outer(psi: &[C64]) -> Self {
        Self::from_fn(psi.len(), |i, j| psi[i] * psi[j].conj())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: C64) {
        self.data[i * self.dim + j] = value;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        mat::from_row_major_slice(&self.data, self.dim, self.dim)
    }

    pub fn from_faer(m: MatRef<'_, C64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self::from_fn(m.nrows(), |i, j| m.read(i, j))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).fold(ZERO, |acc, i| acc + self.data[i * self.dim + i])
    }

    pub fn real_trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_in_place(&mut self, s: f64) {
        for z in &mut self.data {
            *z = *z * s;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn adjoint_in_place(&mut self) {
        let n = self.dim;
        for i in 0..n {
            self.data[i * n + i] = self.data[i * n + i].conj();
            for j in (i + 1)..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                self.data[i * n + j] = b.conj();
                self.data[j * n + i] = a.conj();
            }
        }
    }

    /// Replaces the matrix by `(M + M†) / 2`.
    pub fn hermitize(&mut self) {
        let n = self.dim;
        for i in 0..n {
            let d = self.data[i * n + i];
            if d.im != 0.0 {
                self.data[i * n + i] = C64::new(d.re, 0.0);
            }
            for j in (i + 1)..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i].conj();
                if a == b {
                    continue;
                }
                let avg = (a + b) * 0.5;
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                let diff = self.data[i * n + j] - self.data[j * n + i].conj();
                worst = worst.max(diff.abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(0.0, f64::max)
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let product: Mat<C64> = self.as_faer() * other.as_faer();
        Self::from_faer(product.as_ref())
    }

    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    let row = (i * m + k) * dim + j * m;
                    let src = &other.data[k * m..(k + 1) * m];
                    for (dst, &b) in out.data[row..row + m].iter_mut().zip(src) {
                        *dst = a * b;
                    }
                }
            }
        }
        out
    }

    /// Eigenvalues of the Hermitian part (lower triangle is read), ascending.
    pub fn eigvalsh(&self) -> Vec<f64> {
        let mut values = self.as_faer().selfadjoint_eigenvalues(Side::Lower);
        values.sort_by(f64::total_cmp);
        values
    }

    /// Eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
    pub fn eigh(&self) -> (Vec<f64>, Matrix) {
        let evd = self.as_faer().selfadjoint_eigendecomposition(Side::Lower);
        let s = evd.s().column_vector();
        let values: Vec<f64> = (0..self.dim).map(|i| s.read(i).re).collect();
        (values, Self::from_faer(evd.u()))
    }

    /// `V f(Λ) V†` for a Hermitian matrix with eigendecomposition `V Λ V†`.
    pub fn map_hermitian(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let evd = self.as_faer().selfadjoint_eigendecomposition(Side::Lower);
        let s = evd.s().column_vector();
        let u = evd.u();
        let n = self.dim;
        let scaled = Mat::<C64>::from_fn(n, n, |i, j| u.read(i, j) * f(s.read(j).re));
        let product: Mat<C64> = &scaled * u.adjoint();
        Self::from_faer(product.as_ref())
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        Matrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

/// Index offsets contributed by a subset of tensor positions.
///
/// `offsets[a]` is the full-space index of the basis state whose digits on `positions`
/// spell `a` (most significant first) and whose other digits are zero.
fn offsets(d: usize, n: usize, positions: &[usize]) -> Vec<usize> {
    let weights: Vec<usize> = positions.iter().map(|&p| d.pow((n - 1 - p) as u32)).collect();
    let count = d.pow(positions.len() as u32);
    let mut out = vec![0usize; count];
    for (a, slot) in out.iter_mut().enumerate() {
        let mut rem = a;
        let mut acc = 0;
        for w in weights.iter().rev() {
            acc += (rem % d) * w;
            rem /= d;
        }
        *slot = acc;
    }
    out
}

fn complement(n: usize, positions: &[usize]) -> Vec<usize> {
    (0..n).filter(|p| !positions.contains(p)).collect()
}

/// Traces out every tensor position not listed in `keep` (which must be ascending).
pub fn partial_trace(m: &Matrix, d: usize, n: usize, keep: &[usize]) -> Matrix {
    debug_assert_eq!(m.dim(), d.pow(n as u32));
    debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
    if keep.len() == n {
        return m.clone();
    }
    let traced = complement(n, keep);
    let off_keep = offsets(d, n, keep);
    let off_traced = offsets(d, n, &traced);
    let dk = off_keep.len();
    let mut out = Matrix::zeros(dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for &t in &off_traced {
                acc = acc + m.get(off_keep[a] + t, off_keep[b] + t);
            }
            out.data[a * dk + b] = acc;
        }
    }
    out
}

/// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of the input.
pub fn permute_factors(m: &Matrix, d: usize, perm: &[usize]) -> Matrix {
    let n = perm.len();
    if perm.iter().enumerate().all(|(k, &p)| k == p) {
        return m.clone();
    }
    let map = offsets(d, n, perm);
    let dim = m.dim();
    let mut out = Matrix::zeros(dim);
    for (i, &oi) in map.iter().enumerate() {
        let src = m.row(oi);
        let dst = &mut out.data[i * dim..(i + 1) * dim];
        for (slot, &oj) in dst.iter_mut().zip(&map) {
            *slot = src[oj];
        }
    }
    out
}

/// In place: `M <- (op ⊗ I) M`, where `op` acts on the listed tensor positions (in the
/// order given) and the identity acts on the rest.
pub fn apply_left_in_place(m: &mut Matrix, d: usize, n: usize, positions: &[usize], op: &Matrix) {
    let k = op.dim();
    debug_assert_eq!(k, d.pow(positions.len() as u32));
    let dim = m.dim();
    let rest = complement(n, positions);
    let off_op = offsets(d, n, positions);
    let off_rest = offsets(d, n, &rest);
    let mut block = vec![ZERO; k * dim];
    let op_ref = op.as_faer();
    for &r in &off_rest {
        for (s, &o) in off_op.iter().enumerate() {
            let row = r + o;
            block[s * dim..(s + 1) * dim].copy_from_slice(m.row(row));
        }
        let view = mat::from_row_major_slice(&block, k, dim);
        let product: Mat<C64> = op_ref * view;
        for (s, &o) in off_op.iter().enumerate() {
            let row = r + o;
            let dst = &mut m.data[row * dim..(row + 1) * dim];
            for (j, slot) in dst.iter_mut().enumerate() {
                *slot = product.read(s, j);
            }
        }
    }
}

/// `(op ⊗ I) M (op ⊗ I)†` for Hermitian `M`.
pub fn conjugate_local(m: &Matrix, d: usize, n: usize, positions: &[usize], op: &Matrix) -> Matrix {
    let mut w = m.clone();
    apply_left_in_place(&mut w, d, n, positions, op);
    w.adjoint_in_place();
    apply_left_in_place(&mut w, d, n, positions, op);
    w
}
