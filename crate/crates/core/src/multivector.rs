//! Exterior algebra `Λ*V*` on a fixed basis `e¹..eⁿ`.
//!
//! A monomial `e^{i1..ik}` (ascending indices) is stored at the bitmask
//! with bits `i1-1, .., ik-1` set, so grade is the popcount of the index.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Ordered basis of `V` with an auxiliary positive-definite metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Basis {
    n: usize,
    metric: DMatrix<f64>,
}

impl Basis {
    pub fn euclidean(n: usize) -> Self {
        assert!(n >= 1 && n <= 16, "dimension out of range");
        Basis { n, metric: DMatrix::identity(n, n) }
    }

    pub fn with_metric(metric: DMatrix<f64>) -> Result<Self> {
        let n = metric.nrows();
        if n == 0 || metric.ncols() != n {
            return Err(Error::InvalidMetric);
        }
        if (&metric - metric.transpose()).norm() > 1e-12 * metric.norm() {
            return Err(Error::InvalidMetric);
        }
        if metric.clone().cholesky().is_none() {
            return Err(Error::InvalidMetric);
        }
        Ok(Basis { n, metric })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    /// Number of monomials, `2^n`.
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn volume_mask(&self) -> usize {
        (1 << self.n) - 1
    }
}

pub fn grade(mask: usize) -> usize {
    mask.count_ones() as usize
}

/// Bitmask of a monomial given by 1-based ascending indices.
pub fn mask_of(indices: &[usize]) -> usize {
    indices.iter().fold(0, |m, &i| m | 1 << (i - 1))
}

/// 1-based indices of a monomial.
pub fn indices_of(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|&i| mask >> i & 1 == 1).map(|i| i + 1).collect()
}

/// Sign of `e^a ∧ e^b` relative to `e^{a∪b}`; `None` when the monomials overlap.
pub fn wedge_sign(a: usize, b: usize) -> Option<f64> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let i = rest.trailing_zeros();
        swaps += (a >> (i + 1)).count_ones();
        rest &= rest - 1;
    }
    Some(if swaps % 2 == 0 { 1.0 } else { -1.0 })
}

/// `i_{v_k} e^J = sign · e^{J∖k}` for a 0-based index `k ∈ J`.
pub fn interior_sign(k: usize, mask: usize) -> Option<f64> {
    if mask >> k & 1 == 0 {
        return None;
    }
    let below = (mask & ((1 << k) - 1)).count_ones();
    Some(if below % 2 == 0 { 1.0 } else { -1.0 })
}

fn submatrix_det(m: &DMatrix<f64>, rows: usize, cols: usize) -> f64 {
    let r = indices_of(rows);
    let c = indices_of(cols);
    let k = r.len();
    if k == 0 {
        return 1.0;
    }
    let sub = DMatrix::from_fn(k, k, |i, j| m[(r[i] - 1, c[j] - 1)]);
    sub.determinant()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Multivector {
    n: usize,
    coeffs: Vec<C64>,
}

impl Multivector {
    pub fn zero(n: usize) -> Self {
        Multivector { n, coeffs: vec![ZERO; 1 << n] }
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        Self::monomial(n, 0, C64::new(c, 0.0))
    }

    pub fn monomial(n: usize, mask: usize, c: C64) -> Self {
        let mut m = Self::zero(n);
        m.coeffs[mask] = c;
        m
    }

    /// Volume form `e^{1..n}`.
    pub fn volume(n: usize) -> Self {
        Self::monomial(n, (1 << n) - 1, C64::new(1.0, 0.0))
    }

    /// `e^{i}` for a 1-based index.
    pub fn covector(n: usize, i: usize) -> Self {
        Self::monomial(n, 1 << (i - 1), C64::new(1.0, 0.0))
    }

    /// Real linear combination of monomials given by 1-based index lists in
    /// any order; unsorted lists pick up the sign of the sorting permutation.
    pub fn from_terms(n: usize, terms: &[(&[usize], f64)]) -> Self {
        let mut m = Self::zero(n);
        for (idx, c) in terms {
            let mut acc = Self::scalar(n, *c);
            for &i in idx.iter() {
                acc = acc.wedge(&Self::covector(n, i)).expect("same n");
            }
            m += &acc;
        }
        m
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: coeffs.len() });
        }
        Ok(Multivector { n, coeffs })
    }

    pub fn from_real(n: usize, coeffs: &[f64]) -> Result<Self> {
        Self::from_coeffs(n, coeffs.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [C64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> C64 {
        self.coeffs[mask]
    }

    pub fn set(&mut self, mask: usize, c: C64) {
        self.coeffs[mask] = c;
    }

    /// Nonzero terms as `(mask, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (usize, C64)> + '_ {
        self.coeffs.iter().enumerate().filter(|(_, c)| c.re != 0.0 || c.im != 0.0).map(|(m, c)| (m, *c))
    }

    fn check(&self, other: &Multivector) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.modulus()).fold(0.0, f64::max)
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.im.abs() <= tol)
    }

    pub fn conj(&self) -> Self {
        Multivector { n: self.n, coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    pub fn re(&self) -> Self {
        Multivector { n: self.n, coeffs: self.coeffs.iter().map(|c| C64::new(c.re, 0.0)).collect() }
    }

    pub fn im(&self) -> Self {
        Multivector { n: self.n, coeffs: self.coeffs.iter().map(|c| C64::new(c.im, 0.0)).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Multivector { n: self.n, coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn grade_part(&self, k: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (m, c) in self.terms() {
            if grade(m) == k {
                out.coeffs[m] = c;
            }
        }
        out
    }

    pub fn even_part(&self) -> Self {
        let mut out = self.clone();
        for (m, c) in out.coeffs.iter_mut().enumerate() {
            if grade(m) % 2 == 1 {
                *c = ZERO;
            }
        }
        out
    }

    /// Highest grade carrying a coefficient above `tol`.
    pub fn top_grade(&self, tol: f64) -> Option<usize> {
        self.coeffs.iter().enumerate().filter(|(_, c)| c.modulus() > tol).map(|(m, _)| grade(m)).max()
    }

    pub fn wedge(&self, other: &Multivector) -> Result<Multivector> {
        self.check(other)?;
        let mut out = Self::zero(self.n);
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if let Some(s) = wedge_sign(a, b) {
                    out.coeffs[a | b] += ca * cb * s;
                }
            }
        }
        Ok(out)
    }

    /// `ξ ∧ self` for a covector given by its components.
    pub fn wedge_covector(&self, xi: &[C64]) -> Result<Multivector> {
        if xi.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: xi.len() });
        }
        let mut out = Self::zero(self.n);
        for (j, &x) in xi.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (m, c) in self.terms() {
                if m >> j & 1 == 0 {
                    let s = if (m & ((1 << j) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    out.coeffs[m | 1 << j] += x * c * s;
                }
            }
        }
        Ok(out)
    }

    /// Interior product `i_v` by a vector given by its components.
    pub fn interior(&self, v: &[C64]) -> Result<Multivector> {
        if v.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: v.len() });
        }
        let mut out = Self::zero(self.n);
        for (k, &x) in v.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (m, c) in self.terms() {
                if let Some(s) = interior_sign(k, m) {
                    out.coeffs[m & !(1 << k)] += x * c * s;
                }
            }
        }
        Ok(out)
    }

    pub fn interior_real(&self, v: &[f64]) -> Result<Multivector> {
        let v: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.interior(&v)
    }

    /// Hodge star for the metric and the orientation `e^{1..n} > 0`.
    pub fn hodge_star(&self, basis: &Basis) -> Result<Multivector> {
        if basis.n != self.n {
            return Err(Error::DimensionMismatch { expected: basis.n, found: self.n });
        }
        let full = basis.volume_mask();
        let mut out = Self::zero(self.n);
        if basis.metric == DMatrix::identity(self.n, self.n) {
            for (b, c) in self.terms() {
                let s = wedge_sign(b, full ^ b).unwrap();
                out.coeffs[full ^ b] += c * s;
            }
            return Ok(out);
        }
        let ginv = basis.metric.clone().try_inverse().ok_or(Error::InvalidMetric)?;
        let vol = basis.metric.determinant().sqrt();
        for (b, c) in self.terms() {
            for a in 0..=full {
                if grade(a) != grade(b) {
                    continue;
                }
                let minor = submatrix_det(&ginv, a, b);
                if minor == 0.0 {
                    continue;
                }
                let s = wedge_sign(a, full ^ a).unwrap();
                out.coeffs[full ^ a] += c * (vol * minor * s);
            }
        }
        Ok(out)
    }

    /// Induced (Hermitian) inner product on `Λ*V*`.
    pub fn inner(&self, other: &Multivector, basis: &Basis) -> Result<C64> {
        self.check(other)?;
        if basis.n != self.n {
            return Err(Error::DimensionMismatch { expected: basis.n, found: self.n });
        }
        let ginv = basis.metric.clone().try_inverse().ok_or(Error::InvalidMetric)?;
        let mut acc = ZERO;
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if grade(a) == grade(b) {
                    acc += ca.conj() * cb * submatrix_det(&ginv, a, b);
                }
            }
        }
        Ok(acc)
    }

    /// Pullback `g*`: `g*eⁱ = Σ_j g_ij e^j`, extended as an algebra map, so
    /// `(gh)* = h*∘g*` and `λ·id` scales grade `k` by `λ^k`.
    pub fn pullback(&self, g: &DMatrix<f64>) -> Result<Multivector> {
        if g.nrows() != self.n || g.ncols() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: g.nrows() });
        }
        let scale = g.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1e-300);
        if g.determinant().abs() <= 1e-12 * scale.powi(self.n as i32) {
            return Err(Error::Singular);
        }
        let mut out = Self::zero(self.n);
        for (i, c) in self.terms() {
            for j in 0..self.coeffs.len() {
                if grade(j) == grade(i) {
                    let d = submatrix_det(g, i, j);
                    if d != 0.0 {
                        out.coeffs[j] += c * d;
                    }
                }
            }
        }
        Ok(out)
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl Add for &Multivector {
    type Output = Multivector;
    fn add(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &Multivector {
    type Output = Multivector;
    fn sub(self, rhs: &Multivector) -> Multivector {
        let mut out = self.clone();
        out += &(-rhs);
        out
    }
}

impl Neg for &Multivector {
    type Output = Multivector;
    fn neg(self) -> Multivector {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: f64) -> Multivector {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for &Multivector {
    type Output = Multivector;
    fn mul(self, rhs: C64) -> Multivector {
        self.scale(rhs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Reality {
    /// Components are real forms.
    Real,
    /// Components are complex; real spans treat each as a pair (Re, Im).
    Complex,
}

/// Tuple `(φ₁, .., φ_l)` of forms over one basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FormTuple {
    pub components: Vec<Multivector>,
    pub reality: Reality,
}

impl FormTuple {
    pub fn new(components: Vec<Multivector>, reality: Reality) -> Result<Self> {
        let n = components.first().ok_or(Error::InvalidStructure("empty tuple".into()))?.n;
        if let Some(c) = components.iter().find(|c| c.n != n) {
            return Err(Error::DimensionMismatch { expected: n, found: c.n });
        }
        Ok(FormTuple { components, reality })
    }

    pub fn real(components: Vec<Multivector>) -> Self {
        Self::new(components, Reality::Real).expect("valid tuple")
    }

    pub fn complex(components: Vec<Multivector>) -> Self {
        Self::new(components, Reality::Complex).expect("valid tuple")
    }

    pub fn n(&self) -> usize {
        self.components[0].n
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Number of real `2^n` blocks in the split view.
    pub fn blocks(&self) -> usize {
        match self.reality {
            Reality::Real => self.len(),
            Reality::Complex => 2 * self.len(),
        }
    }

    pub fn real_dim(&self) -> usize {
        self.blocks() << self.n()
    }

    /// Split real view: real tuples list the coefficients of each component;
    /// complex tuples list `Re φ_i` then `Im φ_i` for each component.
    pub fn real_view(&self) -> DVector<f64> {
        let d = 1 << self.n();
        let mut v = DVector::zeros(self.real_dim());
        for (i, c) in self.components.iter().enumerate() {
            match self.reality {
                Reality::Real => {
                    for (j, x) in c.coeffs.iter().enumerate() {
                        v[i * d + j] = x.re;
                    }
                }
                Reality::Complex => {
                    for (j, x) in c.coeffs.iter().enumerate() {
                        v[2 * i * d + j] = x.re;
                        v[(2 * i + 1) * d + j] = x.im;
                    }
                }
            }
        }
        v
    }

    pub fn from_real_view(n: usize, reality: Reality, v: &DVector<f64>) -> Result<Self> {
        let d = 1usize << n;
        let per = match reality {
            Reality::Real => d,
            Reality::Complex => 2 * d,
        };
        if v.len() == 0 || v.len() % per != 0 {
            return Err(Error::DimensionMismatch { expected: per, found: v.len() });
        }
        let comps = (0..v.len() / per)
            .map(|i| {
                let coeffs = (0..d)
                    .map(|j| match reality {
                        Reality::Real => C64::new(v[i * d + j], 0.0),
                        Reality::Complex => C64::new(v[2 * i * d + j], v[(2 * i + 1) * d + j]),
                    })
                    .collect();
                Multivector { n, coeffs }
            })
            .collect();
        Self::new(comps, reality)
    }

    /// Concatenated complex coefficients (length `l·2^n`).
    pub fn complex_vector(&self) -> DVector<C64> {
        let d = 1 << self.n();
        let mut v = DVector::zeros(self.len() * d);
        for (i, c) in self.components.iter().enumerate() {
            v.rows_mut(i * d, d).copy_from_slice(&c.coeffs);
        }
        v
    }

    pub fn map(&self, f: impl Fn(&Multivector) -> Multivector) -> Self {
        FormTuple { components: self.components.iter().map(f).collect(), reality: self.reality }
    }

    pub fn try_map(&self, f: impl Fn(&Multivector) -> Result<Multivector>) -> Result<Self> {
        let components = self.components.iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(FormTuple { components, reality: self.reality })
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c.norm() * c.norm()).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &FormTuple) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| (a - b).norm().powi(2)).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn e(n: usize, idx: &[usize]) -> Multivector {
        Multivector::from_terms(n, &[(idx, 1.0)])
    }

    #[test]
    fn wedge_basics() {
        let e1 = e(3, &[1]);
        let e2 = e(3, &[2]);
        let e3 = e(3, &[3]);
        assert_eq!(e1.wedge(&e1).unwrap(), Multivector::zero(3));
        assert_eq!(e1.wedge(&e2).unwrap(), -&e2.wedge(&e1).unwrap());
        let lhs = (&e1 + &e2).wedge(&e3).unwrap();
        assert_eq!(lhs, &e(3, &[1, 3]) + &e(3, &[2, 3]));
        assert_eq!(e(3, &[2, 1]), -&e(3, &[1, 2]));
    }

    #[test]
    fn interior_basics() {
        let v1 = [c(1.0), c(0.0)];
        let v2 = [c(0.0), c(1.0)];
        assert_eq!(e(2, &[1]).interior(&v1).unwrap(), Multivector::scalar(2, 1.0));
        assert_eq!(e(2, &[1, 2]).interior(&v1).unwrap(), e(2, &[2]));
        assert_eq!(e(2, &[1]).interior(&v2).unwrap(), Multivector::zero(2));
        assert_eq!(e(2, &[1, 2]).interior(&v2).unwrap(), -&e(2, &[1]));
    }

    #[test]
    fn hodge_examples() {
        let b = Basis::euclidean(4);
        assert_eq!(Multivector::scalar(4, 1.0).hodge_star(&b).unwrap(), Multivector::volume(4));
        assert_eq!(e(4, &[1]).hodge_star(&b).unwrap(), e(4, &[2, 3, 4]));
        assert_eq!(e(4, &[2]).hodge_star(&b).unwrap(), -&e(4, &[1, 3, 4]));
    }

    #[test]
    fn hodge_general_metric_reduces() {
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 9.0]));
        let b = Basis::with_metric(g).unwrap();
        // orthonormal coframe θ = (2e¹, e², 3e³): ⋆e¹ = ½ θ²∧θ³ = 3/2 e²³
        let star1 = e(3, &[1]).hodge_star(&b).unwrap();
        assert!((star1.coeff(mask_of(&[2, 3])) - c(6.0 / 4.0)).modulus() < 1e-12);
        assert!(Basis::with_metric(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn pullback_scaling_and_identity() {
        let a = &e(3, &[1, 2]) + &e(3, &[3]);
        assert_eq!(a.pullback(&DMatrix::identity(3, 3)).unwrap(), a);
        let g = DMatrix::identity(3, 3) * 2.0;
        let p = a.pullback(&g).unwrap();
        assert!((p.coeff(mask_of(&[1, 2])) - c(4.0)).modulus() < 1e-12);
        assert!((p.coeff(mask_of(&[3])) - c(2.0)).modulus() < 1e-12);
        assert_eq!(a.pullback(&DMatrix::zeros(3, 3)), Err(Error::Singular));
    }

    #[test]
    fn real_view_roundtrip() {
        let mut m = Multivector::zero(2);
        m.set(3, C64::new(1.0, -2.0));
        m.set(0, C64::new(0.5, 0.0));
        let t = FormTuple::complex(vec![m.clone(), m.conj()]);
        let v = t.real_view();
        assert_eq!(v.len(), 16);
        assert_eq!(FormTuple::from_real_view(2, Reality::Complex, &v).unwrap(), t);
    }

    fn arb_mv(n: usize) -> impl Strategy<Value = Multivector> {
        prop::collection::vec(-1.0f64..1.0, 1 << n).prop_map(move |v| Multivector::from_real(n, &v).unwrap())
    }

    fn arb_homogeneous(n: usize, k: usize) -> impl Strategy<Value = Multivector> {
        arb_mv(n).prop_map(move |m| m.grade_part(k))
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, n * n)
            .prop_map(move |v| DMatrix::from_row_slice(n, n, &v) + DMatrix::identity(n, n) * 2.0)
    }

    fn arb_metric(n: usize) -> impl Strategy<Value = Basis> {
        prop::collection::vec(-0.3f64..0.3, n * n).prop_map(move |v| {
            let g = DMatrix::from_row_slice(n, n, &v) + DMatrix::identity(n, n);
            Basis::with_metric(&g * g.transpose()).unwrap()
        })
    }

    proptest! {
        #[test]
        fn interior_is_antiderivation(
            ka in 0usize..5, a in arb_mv(4), b in arb_mv(4),
            v in prop::collection::vec(-1.0f64..1.0, 4),
        ) {
            let a = a.grade_part(ka);
            let lhs = a.wedge(&b).unwrap().interior_real(&v).unwrap();
            let sign = if ka % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = &a.interior_real(&v).unwrap().wedge(&b).unwrap()
                + &(&a.wedge(&b.interior_real(&v).unwrap()).unwrap() * sign);
            prop_assert!((&lhs - &rhs).norm() < 1e-12);
            let twice = b.interior_real(&v).unwrap().interior_real(&v).unwrap();
            prop_assert!(twice.norm() < 1e-12);
        }

        #[test]
        fn wedge_graded_commutative(ka in 0usize..4, kb in 0usize..4, a in arb_mv(5), b in arb_mv(5)) {
            let (a, b) = (a.grade_part(ka), b.grade_part(kb));
            let sign = if (ka * kb) % 2 == 0 { 1.0 } else { -1.0 };
            let d = &a.wedge(&b).unwrap() - &(&b.wedge(&a).unwrap() * sign);
            prop_assert!(d.norm() < 1e-12);
        }

        #[test]
        fn wedge_associative(a in arb_mv(4), b in arb_mv(4), c in arb_mv(4)) {
            let l = a.wedge(&b).unwrap().wedge(&c).unwrap();
            let r = a.wedge(&b.wedge(&c).unwrap()).unwrap();
            prop_assert!((&l - &r).norm() < 1e-11);
        }

        #[test]
        fn double_star_sign(k in 0usize..8, a in arb_mv(7), basis in arb_metric(7)) {
            let a = a.grade_part(k);
            let ss = a.hodge_star(&basis).unwrap().hodge_star(&basis).unwrap();
            let sign = if (k * (7 - k)) % 2 == 0 { 1.0 } else { -1.0 };
            prop_assert!((&ss - &(&a * sign)).norm() < 1e-8 * (1.0 + a.norm()));
        }

        #[test]
        fn star_isometry_and_positivity(a in arb_mv(4), b in arb_mv(4), basis in arb_metric(4)) {
            let ab = a.inner(&b, &basis).unwrap();
            let ba = b.inner(&a, &basis).unwrap();
            prop_assert!((ab - ba).modulus() < 1e-9 * (1.0 + ab.modulus()));
            let aa = a.inner(&a, &basis).unwrap();
            prop_assert!(aa.re > 0.0);
            let sa = a.hodge_star(&basis).unwrap();
            let sb = b.hodge_star(&basis).unwrap();
            let st = sa.inner(&sb, &basis).unwrap();
            prop_assert!((st - ab).modulus() < 1e-8 * (1.0 + ab.modulus()));
        }

        #[test]
        fn pullback_composition(g in arb_matrix(4), h in arb_matrix(4), a in arb_mv(4), b in arb_mv(4)) {
            let gh = &g * &h;
            let lhs = a.pullback(&gh).unwrap();
            let rhs = a.pullback(&g).unwrap().pullback(&h).unwrap();
            prop_assert!((&lhs - &rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
            // algebra map
            let l = a.wedge(&b).unwrap().pullback(&g).unwrap();
            let r = a.pullback(&g).unwrap().wedge(&b.pullback(&g).unwrap()).unwrap();
            prop_assert!((&l - &r).norm() < 1e-9 * (1.0 + l.norm()));
        }

        #[test]
        fn homogeneous_grades(a in arb_homogeneous(5, 3)) {
            prop_assert!(a.top_grade(0.0).map_or(true, |g| g == 3));
        }
    }
}
