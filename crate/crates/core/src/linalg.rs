//! Dense numerical linear algebra on top of nalgebra: ranks, orthonormal
//! bases of images and kernels, pseudo-inverses, subspace intersections and
//! a matrix exponential.

use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

pub type C64 = Complex<f64>;

/// Singular values below `RANK_RTOL * σ_max` count as zero.
pub const RANK_RTOL: f64 = 1e-9;

/// Absolute floor below which a singular value is always zero.
const ABS_FLOOR: f64 = 1e-12;

pub trait Scalar: ComplexField<RealField = f64> + Copy {
    const IS_COMPLEX: bool;
    fn parts(self) -> (f64, f64);
    fn from_parts(re: f64, im: f64) -> Self;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;
    fn parts(self) -> (f64, f64) {
        (self, 0.0)
    }
    fn from_parts(re: f64, _im: f64) -> Self {
        re
    }
}

impl Scalar for C64 {
    const IS_COMPLEX: bool = true;
    fn parts(self) -> (f64, f64) {
        (self.re, self.im)
    }
    fn from_parts(re: f64, im: f64) -> Self {
        C64::new(re, im)
    }
}

// nalgebra's complex SVD can stall on rank-deficient input, so complex
// matrices go through the real embedding [[Re, -Im], [Im, Re]].
fn embed<T: Scalar>(m: &DMatrix<T>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let (re, im) = m[(i % r, j % c)].parts();
        match (i < r, j < c) {
            (true, true) | (false, false) => re,
            (true, false) => -im,
            (false, true) => im,
        }
    })
}

/// Turns a real orthonormal basis of `(Re w; Im w)` vectors, spanning a
/// complex subspace, into a complex orthonormal basis of it.
fn complexify<T: Scalar>(real: &DMatrix<f64>) -> DMatrix<T> {
    let rows = real.nrows() / 2;
    let k = real.ncols() / 2;
    let mut cands: Vec<DVector<T>> = real
        .column_iter()
        .map(|c| DVector::from_fn(rows, |i, _| T::from_parts(c[i], c[rows + i])))
        .collect();
    let mut out = DMatrix::zeros(rows, k);
    for j in 0..k {
        let (best, _) = cands
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let mut q = cands.swap_remove(best);
        for _ in 0..2 {
            let prev = out.columns(0, j);
            let coeffs = prev.ad_mul(&q);
            q -= &prev * coeffs;
        }
        let norm = q.norm();
        q *= T::from_real(1.0 / norm);
        for c in cands.iter_mut() {
            let proj = q.dotc(c);
            *c -= &q * proj;
        }
        out.set_column(j, &q);
    }
    out
}

fn cutoff(values: &DVector<f64>, rtol: f64) -> f64 {
    let max = values.iter().cloned().fold(0.0, f64::max);
    (rtol * max).max(ABS_FLOOR)
}

/// Orthonormal basis of a subspace of `T^ambient_dim`, stored as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis<T: Scalar> {
    pub ambient_dim: usize,
    pub basis: DMatrix<T>,
    pub tol: f64,
}

impl<T: Scalar> SubspaceBasis<T> {
    pub fn zero(ambient_dim: usize) -> Self {
        SubspaceBasis { ambient_dim, basis: DMatrix::zeros(ambient_dim, 0), tol: RANK_RTOL }
    }

    pub fn full(ambient_dim: usize) -> Self {
        SubspaceBasis { ambient_dim, basis: DMatrix::identity(ambient_dim, ambient_dim), tol: RANK_RTOL }
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> DMatrix<T> {
        &self.basis * self.basis.adjoint()
    }

    pub fn coords(&self, v: &DVector<T>) -> DVector<T> {
        self.basis.ad_mul(v)
    }

    pub fn project(&self, v: &DVector<T>) -> DVector<T> {
        &self.basis * self.coords(v)
    }

    /// Norm of the component of `v` orthogonal to the subspace.
    pub fn residual(&self, v: &DVector<T>) -> f64 {
        (v - self.project(v)).norm()
    }

    /// Largest residual of the columns of `m` (absolute).
    pub fn max_residual(&self, m: &DMatrix<T>) -> f64 {
        let p = &self.basis * self.basis.ad_mul(m);
        (m - p).column_iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest residual of an orthonormal basis of `other`; zero iff `other ⊆ self`.
    pub fn containment_residual(&self, other: &SubspaceBasis<T>) -> f64 {
        self.max_residual(&other.basis)
    }

    pub fn contains(&self, other: &SubspaceBasis<T>, tol: f64) -> bool {
        self.containment_residual(other) <= tol
    }

    pub fn sum(&self, other: &SubspaceBasis<T>) -> SubspaceBasis<T> {
        let mut cols = Vec::with_capacity(self.rank() + other.rank());
        cols.extend(self.basis.column_iter().map(|c| c.into_owned()));
        cols.extend(other.basis.column_iter().map(|c| c.into_owned()));
        column_space(&hstack(self.ambient_dim, &cols), self.tol)
    }

    pub fn intersect(&self, other: &SubspaceBasis<T>) -> SubspaceBasis<T> {
        let (p, q) = (self.rank(), other.rank());
        if p == 0 || q == 0 {
            return SubspaceBasis::zero(self.ambient_dim);
        }
        let mut m = DMatrix::zeros(self.ambient_dim, p + q);
        m.columns_mut(0, p).copy_from(&self.basis);
        m.columns_mut(p, q).copy_from(&(-&other.basis));
        let kernel = null_space(&m, self.tol);
        let image = &self.basis * kernel.basis.rows(0, p);
        column_space(&image, self.tol)
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> SubspaceBasis<T> {
        if self.rank() == 0 {
            return SubspaceBasis::full(self.ambient_dim);
        }
        null_space(&self.basis.adjoint(), self.tol)
    }
}

pub fn hstack<T: Scalar>(rows: usize, cols: &[DVector<T>]) -> DMatrix<T> {
    let mut m = DMatrix::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

pub fn singular_values<T: Scalar>(m: &DMatrix<T>) -> DVector<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DVector::zeros(0);
    }
    if T::IS_COMPLEX {
        // each singular value appears twice in the embedding
        let s = embed(m).svd(false, false).singular_values;
        return DVector::from_iterator(s.len() / 2, s.iter().step_by(2).cloned());
    }
    m.clone().svd(false, false).singular_values
}

pub fn rank<T: Scalar>(m: &DMatrix<T>, rtol: f64) -> usize {
    let s = singular_values(m);
    let c = cutoff(&s, rtol);
    s.iter().filter(|&&x| x > c).count()
}

/// Orthonormal basis of the column space of `m`.
struct RefinedBases {
    col: DMatrix<f64>,
    row: DMatrix<f64>,
}

/// Column and row space bases of a real matrix. The SVD only decides the
/// rank; the bases are rebuilt by alternating products with `m`, which
/// removes the SVD's leakage into the kernels.
fn refined_bases<T: Scalar>(m: &DMatrix<T>, rtol: f64) -> RefinedBases {
    let m = DMatrix::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].parts().0);
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let c = cutoff(&svd.singular_values, rtol);
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > c).collect();
    let mut row = DMatrix::zeros(m.ncols(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        row.set_column(j, &vt.row(i).transpose());
    }
    let mut col = orthonormalize(&m * &row);
    for _ in 0..2 {
        row = orthonormalize(m.transpose() * &col);
        col = orthonormalize(&m * &row);
    }
    RefinedBases { col, row }
}

fn lift<T: Scalar>(m: DMatrix<f64>) -> DMatrix<T> {
    m.map(|x| T::from_parts(x, 0.0))
}

fn orthonormalize(a: DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return a;
    }
    a.qr().q()
}

pub fn column_space<T: Scalar>(m: &DMatrix<T>, rtol: f64) -> SubspaceBasis<T> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return SubspaceBasis { ambient_dim: rows, basis: DMatrix::zeros(rows, 0), tol: rtol };
    }
    if T::IS_COMPLEX {
        let real = column_space(&embed(m), rtol);
        return SubspaceBasis { ambient_dim: rows, basis: complexify(&real.basis), tol: rtol };
    }
    SubspaceBasis { ambient_dim: rows, basis: lift(refined_bases(m, rtol).col), tol: rtol }
}

/// Orthonormal basis of the kernel of `m` (a subspace of the domain).
pub fn null_space<T: Scalar>(m: &DMatrix<T>, rtol: f64) -> SubspaceBasis<T> {
    let cols = m.ncols();
    if cols == 0 {
        return SubspaceBasis::zero(0);
    }
    if m.nrows() == 0 {
        return SubspaceBasis { ambient_dim: cols, basis: DMatrix::identity(cols, cols), tol: rtol };
    }
    if T::IS_COMPLEX {
        let real = null_space(&embed(m), rtol);
        return SubspaceBasis { ambient_dim: cols, basis: complexify(&real.basis), tol: rtol };
    }
    // Thin SVD only yields min(rows, cols) right vectors; pad to a square
    // matrix so the whole domain is covered.
    let real = DMatrix::<f64>::from_fn(m.nrows(), cols, |i, j| m[(i, j)].parts().0);
    let padded = if real.nrows() < cols {
        let mut p = DMatrix::zeros(cols, cols);
        p.rows_mut(0, real.nrows()).copy_from(&real);
        p
    } else {
        real
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd v_t");
    let c = cutoff(&svd.singular_values, rtol);
    let keep: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] <= c).collect();
    let mut rest = DMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        rest.set_column(j, &vt.row(i).transpose());
    }
    let row = refined_bases(m, rtol).row;
    for _ in 0..2 {
        let proj = &row * (row.transpose() * &rest);
        rest -= proj;
    }
    let basis = lift(orthonormalize(rest));
    SubspaceBasis { ambient_dim: cols, basis, tol: rtol }
}

pub fn pinv<T: Scalar>(m: &DMatrix<T>, rtol: f64) -> DMatrix<T> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return DMatrix::zeros(c, r);
    }
    if T::IS_COMPLEX {
        let p = pinv(&embed(m), rtol);
        return DMatrix::from_fn(c, r, |i, j| T::from_parts(p[(i, j)], p[(c + i, j)]));
    }
    let RefinedBases { col, row } = refined_bases(m, rtol);
    if col.ncols() == 0 {
        return DMatrix::zeros(c, r);
    }
    // m = col * core * row^T with an invertible core.
    let real = DMatrix::<f64>::from_fn(r, c, |i, j| m[(i, j)].parts().0);
    let core = col.transpose() * real * &row;
    let inv = core.try_inverse().expect("core of a rank factorization is invertible");
    lift(row * inv * col.transpose())
}

fn one_norm<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.modulus()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm<T: Scalar>(a: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let norm = one_norm(a);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * T::from_real(scale);
    let mut result = DMatrix::<T>::identity(n, n);
    let mut term = DMatrix::<T>::identity(n, n);
    for k in 1..=40 {
        term = (&term * &x) * T::from_real(1.0 / k as f64);
        result += &term;
        if one_norm(&term) <= 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

pub fn max_abs<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|x| x.modulus()).fold(0.0, f64::max)
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
