//! The Clifford algebra `CL(V ⊕ V*)` for the split pairing
//! `⟨v+η, w+ζ⟩ = ½ζ(v) + ½η(w)`, realized on spinors `S = Λ*V*`.
//!
//! Generators are ordered `v₁..vₙ, e¹..eⁿ`; a monomial of `Λ*(V⊕V*)` is a
//! bitmask over `2n` bits with `v_i` at bit `i-1` and `eⁱ` at bit `n+i-1`.
//! `v` acts by interior product and `η` by wedge, so `E·E = ‖E‖²` and
//! `E·F + F·E = 2⟨E,F⟩`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{expm, C64};
use crate::multivector::{grade, Multivector};

/// Relative residual below which a twisted adjoint image lies in `V ⊕ V*`.
pub const CPIN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitPairing {
    n: usize,
}

impl SplitPairing {
    pub fn new(n: usize) -> Self {
        SplitPairing { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `⟨E, F⟩` for `E = (v, η)` given as `2n` components.
    pub fn pair(&self, e: &[f64], f: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            acc += 0.5 * (f[n + i] * e[i] + e[n + i] * f[i]);
        }
        acc
    }

    /// Gram matrix of the pairing on the generator basis.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| if i + n == j || j + n == i { 0.5 } else { 0.0 })
    }
}

fn parity_sign(bits: u32) -> f64 {
    if bits % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(-1)^{#{(a, b) : a ∈ A, b ∈ B, a > b}}`, the sign regrouping `v_A e^B`
/// into blocks ordered by index.
fn regroup_sign(a: usize, b: usize) -> f64 {
    let mut count = 0;
    let mut rest = b;
    while rest != 0 {
        let i = rest.trailing_zeros();
        count += (a >> (i + 1)).count_ones();
        rest &= rest - 1;
    }
    parity_sign(count)
}

/// Sign picked up when the unpaired generators of the flip set `x` act on
/// `e^J`, applied from the highest index down.
fn flip_sign(j: usize, x: usize) -> f64 {
    let mut count = 0;
    let mut rest = x;
    while rest != 0 {
        let i = rest.trailing_zeros();
        count += (j & ((1 << i) - 1)).count_ones();
        rest &= rest - 1;
    }
    parity_sign(count)
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for start in (0..v.len()).step_by(2 * h) {
            for i in start..start + h {
                let (a, b) = (v[i], v[i + h]);
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn submasks(x: usize) -> impl Iterator<Item = usize> {
    let mut next = Some(x);
    core::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & x) };
        Some(cur)
    })
}

/// Action on spinors of a quantized monomial (or any operator mapping each
/// basis form to a multiple of one basis form): `e^J ↦ coef[J]·e^{dst[J]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonomialOp {
    pub dst: Vec<u32>,
    pub coef: Vec<f64>,
}

impl MonomialOp {
    /// Quantization of the symbol monomial `mask`: the antisymmetrized
    /// Clifford product of its generators.
    pub fn quantized(n: usize, mask: usize) -> Self {
        let lo = (1 << n) - 1;
        let (a, b) = (mask & lo, mask >> n);
        let pairs = a & b;
        let (a1, b1) = (a & !pairs, b & !pairs);
        let x = a1 | b1;
        let s0 = regroup_sign(a, b);
        let d = 1usize << n;
        let mut dst = vec![0u32; d];
        let mut coef = vec![0.0; d];
        for j in 0..d {
            if j & x != a1 {
                continue;
            }
            let mut c = s0 * flip_sign(j, x);
            let mut p = pairs;
            while p != 0 {
                let i = p.trailing_zeros();
                c *= if j >> i & 1 == 1 { -0.5 } else { 0.5 };
                p &= p - 1;
            }
            dst[j] = (j ^ x) as u32;
            coef[j] = c;
        }
        MonomialOp { dst, coef }
    }

    pub fn apply(&self, phi: &[f64], out: &mut [f64], scale: f64) {
        for (j, (&t, &c)) in self.dst.iter().zip(&self.coef).enumerate() {
            if c != 0.0 {
                out[t as usize] += scale * c * phi[j];
            }
        }
    }

    pub fn apply_complex(&self, phi: &[C64], out: &mut [C64], scale: C64) {
        for (j, (&t, &c)) in self.dst.iter().zip(&self.coef).enumerate() {
            if c != 0.0 {
                out[t as usize] += scale * phi[j] * c;
            }
        }
    }

    pub fn add_to_matrix(&self, m: &mut DMatrix<f64>, scale: f64) {
        for (j, (&t, &c)) in self.dst.iter().zip(&self.coef).enumerate() {
            if c != 0.0 {
                m[(t as usize, j)] += scale * c;
            }
        }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.dst.len();
        let mut m = DMatrix::zeros(d, d);
        self.add_to_matrix(&mut m, 1.0);
        m
    }
}

/// Submasks of `free` in increasing order: Walsh-Hadamard index `t` is the
/// `t`-th submask.
fn ordered_submasks(free: usize, out: &mut Vec<usize>) {
    out.clear();
    let mut p = 0usize;
    loop {
        out.push(p);
        if p == free {
            break;
        }
        p = p.wrapping_sub(free) & free;
    }
}

fn half_powers(n: usize) -> Vec<f64> {
    (0..=n).map(|k| 0.5f64.powi(k as i32)).collect()
}

fn nonzero_terms(symbol: &[f64]) -> Vec<(usize, f64)> {
    // symbols are usually sparse; skip zero blocks with a vectorizable test
    let mut out = Vec::new();
    for (b, chunk) in symbol.chunks(16).enumerate() {
        if chunk.iter().fold(0u64, |acc, c| acc | (c.to_bits() << 1)) != 0 {
            out.extend(chunk.iter().enumerate().filter(|(_, c)| **c != 0.0).map(|(s, &c)| (16 * b + s, c)));
        }
    }
    out
}

/// The flip set `J ↦ J ^ x` of the quantized monomial `mask`.
fn flip_of(n: usize, mask: usize) -> usize {
    (mask & ((1 << n) - 1)) ^ (mask >> n)
}

/// Spin matrix of a symbol (`4^n` coefficients indexed by `2n`-bit masks).
pub fn quantize(n: usize, symbol: &[f64]) -> DMatrix<f64> {
    let d = 1usize << n;
    assert_eq!(symbol.len(), d * d, "symbol length");
    let mut m = DMatrix::zeros(d, d);
    let terms = nonzero_terms(symbol);
    if terms.len() < d {
        for (s, c) in terms {
            MonomialOp::quantized(n, s).add_to_matrix(&mut m, c);
        }
        return m;
    }
    let half = half_powers(n);
    let mut g = Vec::with_capacity(d);
    let mut ps = Vec::with_capacity(d);
    for x in 0..d {
        ordered_submasks(!x & (d - 1), &mut ps);
        for a1 in submasks(x) {
            let b1 = x ^ a1;
            g.clear();
            let mut any = false;
            for &p in &ps {
                let (a, b) = (a1 | p, b1 | p);
                let c = symbol[a | b << n];
                if c != 0.0 {
                    any = true;
                    g.push(c * regroup_sign(a, b) * half[p.count_ones() as usize]);
                } else {
                    g.push(0.0);
                }
            }
            if !any {
                continue;
            }
            walsh_hadamard(&mut g);
            for (&p, &val) in ps.iter().zip(&g) {
                let j = a1 | p;
                m[(j ^ x, j)] += flip_sign(j, x) * val;
            }
        }
    }
    m
}

/// Inverse of [`quantize`]; the quantized monomials are orthogonal for the
/// Frobenius product, so each coefficient is a normalized projection.
pub fn dequantize(n: usize, m: &DMatrix<f64>) -> Vec<f64> {
    dequantize_flips(n, m, 0..1usize << n)
}

/// `dequantize` for a matrix supported on the entries `(j ^ x, j)` with `x`
/// among `flips`.
fn dequantize_flips(n: usize, m: &DMatrix<f64>, flips: impl Iterator<Item = usize>) -> Vec<f64> {
    let d = 1usize << n;
    assert_eq!(m.shape(), (d, d), "spin matrix shape");
    let mut symbol = vec![0.0; d * d];
    let mut f = Vec::with_capacity(d);
    let mut ps = Vec::with_capacity(d);
    let mut scales = vec![0.0; n + 1];
    for x in flips {
        ordered_submasks(!x & (d - 1), &mut ps);
        let size = ps.len() as f64;
        for (k, s) in scales.iter_mut().enumerate() {
            *s = (1u64 << k) as f64 / size;
        }
        for a1 in submasks(x) {
            let b1 = x ^ a1;
            f.clear();
            let mut any = false;
            for &p in &ps {
                let j = a1 | p;
                let val = m[(j ^ x, j)];
                if val != 0.0 {
                    any = true;
                    f.push(flip_sign(j, x) * val);
                } else {
                    f.push(0.0);
                }
            }
            if !any {
                continue;
            }
            walsh_hadamard(&mut f);
            for (&p, &val) in ps.iter().zip(&f) {
                if val != 0.0 {
                    let (a, b) = (a1 | p, b1 | p);
                    symbol[a | b << n] = regroup_sign(a, b) * scales[p.count_ones() as usize] * val;
                }
            }
        }
    }
    symbol
}

/// Spin matrix of `E = v + η` (interior plus wedge).
pub fn vector_matrix(n: usize, e: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(1 << n, 1 << n);
    for (k, &c) in e.iter().enumerate() {
        if c != 0.0 {
            MonomialOp::quantized(n, 1 << k).add_to_matrix(&mut m, c);
        }
    }
    m
}

fn parity_diag(n: usize) -> DVector<f64> {
    DVector::from_fn(1 << n, |j, _| parity_sign(j.count_ones()))
}

/// Element of `CL(V⊕V*)`, kept both as its symbol in `Λ*(V⊕V*)` and as
/// its matrix on `Λ*V*`.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordElement {
    n: usize,
    symbol: Vec<f64>,
    matrix: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Membership {
    pub cpin: bool,
    pub pin: bool,
    pub spin: bool,
    pub spin0: bool,
    /// `σ(g)g` when it is a scalar.
    pub norm2: Option<f64>,
}

impl CliffordElement {
    pub fn from_symbol(n: usize, symbol: Vec<f64>) -> Self {
        let matrix = quantize(n, &symbol);
        CliffordElement { n, symbol, matrix }
    }

    pub fn from_matrix(n: usize, matrix: DMatrix<f64>) -> Result<Self> {
        let d = 1usize << n;
        if matrix.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.nrows() });
        }
        let symbol = dequantize(n, &matrix);
        Ok(CliffordElement { n, symbol, matrix })
    }

    pub fn scalar(n: usize, c: f64) -> Self {
        let d = 1usize << n;
        let mut symbol = vec![0.0; d * d];
        symbol[0] = c;
        CliffordElement { n, symbol, matrix: DMatrix::identity(d, d) * c }
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, 1.0)
    }

    /// `E = Σ vᵢ-components + Σ ηᵢ-components` from `2n` coefficients.
    pub fn vector(n: usize, e: &[f64]) -> Self {
        let d = 1usize << n;
        let mut symbol = vec![0.0; d * d];
        for (k, &c) in e.iter().enumerate() {
            symbol[1 << k] = c;
        }
        CliffordElement { n, symbol, matrix: vector_matrix(n, e) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn check(&self, other: &CliffordElement) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: other.n });
        }
        Ok(())
    }

    pub fn product(&self, other: &CliffordElement) -> Result<CliffordElement> {
        self.check(other)?;
        let n = self.n;
        let d = 1usize << n;
        let left = nonzero_terms(&self.symbol);
        let right = nonzero_terms(&other.symbol);
        let (l, r) = (left.len().max(1), right.len().max(1));
        // work estimates: monomial pairs, monomials against columns, dense
        let cost = [l * r * d, l * d * d, r * d * d, d * d * d];
        let best = (0..4).min_by_key(|&i| cost[i]).expect("nonempty");
        let mut out = DMatrix::zeros(d, d);
        match best {
            0 => {
                let ops: Vec<MonomialOp> = right.iter().map(|&(t, _)| MonomialOp::quantized(n, t)).collect();
                for &(s, cs) in &left {
                    let p = MonomialOp::quantized(n, s);
                    for (q, &(_, ct)) in ops.iter().zip(&right) {
                        for (j, (&mid, &k)) in q.dst.iter().zip(&q.coef).enumerate() {
                            let mid = mid as usize;
                            if k != 0.0 && p.coef[mid] != 0.0 {
                                out[(p.dst[mid] as usize, j)] += cs * ct * k * p.coef[mid];
                            }
                        }
                    }
                }
            }
            1 => {
                let src = other.matrix.as_slice();
                for &(s, c) in &left {
                    let op = MonomialOp::quantized(n, s);
                    let dst = out.as_mut_slice();
                    for j in 0..d {
                        op.apply(&src[j * d..(j + 1) * d], &mut dst[j * d..(j + 1) * d], c);
                    }
                }
            }
            2 => {
                // column J of the product is coef[J] times column dst[J] of `self`
                let src = self.matrix.as_slice();
                for &(t, c) in &right {
                    let op = MonomialOp::quantized(n, t);
                    let dst = out.as_mut_slice();
                    for (j, (&from, &k)) in op.dst.iter().zip(&op.coef).enumerate() {
                        if k != 0.0 {
                            let from = from as usize;
                            for (o, x) in dst[j * d..(j + 1) * d].iter_mut().zip(&src[from * d..(from + 1) * d]) {
                                *o += c * k * x;
                            }
                        }
                    }
                }
            }
            _ => return CliffordElement::from_matrix(n, &self.matrix * &other.matrix),
        }
        // the product only reaches the flip patterns x_s ^ x_t
        let mut flips = vec![false; d];
        if left.len() * right.len() < d * d {
            for &(s, _) in &left {
                for &(t, _) in &right {
                    flips[flip_of(n, s) ^ flip_of(n, t)] = true;
                }
            }
        } else {
            flips.iter_mut().for_each(|f| *f = true);
        }
        let symbol = dequantize_flips(n, &out, (0..d).filter(|&x| flips[x]));
        Ok(CliffordElement { n, symbol, matrix: out })
    }

    pub fn add(&self, other: &CliffordElement) -> Result<CliffordElement> {
        self.check(other)?;
        let symbol = self.symbol.iter().zip(&other.symbol).map(|(a, b)| a + b).collect();
        Ok(CliffordElement { n: self.n, symbol, matrix: &self.matrix + &other.matrix })
    }

    pub fn scale(&self, c: f64) -> CliffordElement {
        CliffordElement {
            n: self.n,
            symbol: self.symbol.iter().map(|x| x * c).collect(),
            matrix: &self.matrix * c,
        }
    }

    /// Automorphism `±1` on even/odd elements.
    pub fn tilde(&self) -> CliffordElement {
        let symbol = self.symbol.iter().enumerate().map(|(s, &c)| c * parity_sign(s.count_ones())).collect();
        let p = parity_diag(self.n);
        let matrix = DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| p[i] * self.matrix[(i, j)] * p[j]);
        CliffordElement { n: self.n, symbol, matrix }
    }

    /// Reversal anti-automorphism: grade `k` symbols pick up `(-1)^{k(k-1)/2}`.
    pub fn sigma(&self) -> CliffordElement {
        let symbol: Vec<f64> = self
            .symbol
            .iter()
            .enumerate()
            .map(|(s, &c)| {
                let k = s.count_ones();
                c * parity_sign(k * k.saturating_sub(1) / 2)
            })
            .collect();
        CliffordElement::from_symbol(self.n, symbol)
    }

    /// `σ(g)·g`, with its scalar value when it is a multiple of `1`.
    pub fn norm2(&self) -> (CliffordElement, Option<f64>) {
        let m = &self.sigma().matrix * &self.matrix;
        let c = m[(0, 0)];
        let d = m.nrows();
        let off = (&m - DMatrix::identity(d, d) * c).norm();
        let scalar = if off <= 1e-9 * m.norm().max(1.0) { Some(c) } else { None };
        (CliffordElement::from_matrix(self.n, m).expect("square"), scalar)
    }

    pub fn symbol_grade_part(&self, k: usize) -> Vec<f64> {
        self.symbol.iter().enumerate().map(|(s, &c)| if grade(s) == k { c } else { 0.0 }).collect()
    }

    /// Smallest `k` with `self ∈ CL^k`.
    pub fn filtration_degree(&self) -> Result<usize> {
        let scale = self.symbol.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let tol = 1e-12 * scale.max(1e-300);
        let mut top = None::<usize>;
        let (mut even, mut odd) = (false, false);
        for (s, &c) in self.symbol.iter().enumerate() {
            if c.abs() > tol {
                let k = grade(s);
                if k % 2 == 0 {
                    even = true;
                } else {
                    odd = true;
                }
                top = Some(top.map_or(k, |t| t.max(k)));
            }
        }
        if even && odd {
            return Err(Error::MixedParity);
        }
        Ok(top.unwrap_or(0))
    }

    pub fn inverse(&self) -> Result<CliffordElement> {
        let scale = self.matrix.norm().max(1e-300);
        let inv = self.matrix.clone().try_inverse().ok_or(Error::Singular)?;
        if !inv.iter().all(|x| x.is_finite()) || inv.norm() * scale > 1e12 * self.matrix.nrows() as f64 {
            return Err(Error::Singular);
        }
        CliffordElement::from_matrix(self.n, inv)
    }

    /// Twisted adjoint `Ad̃_g(E) = g̃⁻¹·E·g`; fails when the image leaves `V ⊕ V*`.
    pub fn ad_tilde(&self, e: &[f64]) -> Result<Vec<f64>> {
        let inv = self.tilde().matrix.clone().try_inverse().ok_or(Error::Singular)?;
        let image = inv * vector_matrix(self.n, e) * &self.matrix;
        project_to_vectors(self.n, &image, vector_matrix(self.n, e).norm())
    }

    pub fn membership(&self) -> Result<Membership> {
        self.inverse()?;
        let n = self.n;
        let inv = self.tilde().matrix.clone().try_inverse().ok_or(Error::Singular)?;
        let mut cpin = true;
        for k in 0..2 * n {
            let mut e = vec![0.0; 2 * n];
            e[k] = 1.0;
            let em = vector_matrix(n, &e);
            let image = &inv * &em * &self.matrix;
            if project_to_vectors(n, &image, em.norm()).is_err() {
                cpin = false;
                break;
            }
        }
        let (_, norm2) = self.norm2();
        let pin = cpin && norm2.is_some_and(|c| (c.abs() - 1.0).abs() <= 1e-9);
        let odd: f64 = self.symbol.iter().enumerate().filter(|(s, _)| s.count_ones() % 2 == 1).map(|(_, c)| c * c).sum();
        let total: f64 = self.symbol.iter().map(|c| c * c).sum();
        let even = odd.sqrt() <= 1e-10 * total.sqrt();
        let spin = pin && even;
        let spin0 = spin && norm2.is_some_and(|c| (c - 1.0).abs() <= 1e-9);
        Ok(Membership { cpin, pin, spin, spin0, norm2 })
    }
}

/// Coefficients of `m` along the generators, if `m` is (numerically) a
/// vector of `V ⊕ V*`.
fn project_to_vectors(n: usize, m: &DMatrix<f64>, input_norm: f64) -> Result<Vec<f64>> {
    let mut coeffs = vec![0.0; 2 * n];
    let mut recon = DMatrix::zeros(m.nrows(), m.ncols());
    let half = (1usize << n) as f64 / 2.0;
    for (k, c) in coeffs.iter_mut().enumerate() {
        let op = MonomialOp::quantized(n, 1 << k);
        let mut dot = 0.0;
        for (j, (&t, &s)) in op.dst.iter().zip(&op.coef).enumerate() {
            if s != 0.0 {
                dot += s * m[(t as usize, j)];
            }
        }
        *c = dot / half;
        op.add_to_matrix(&mut recon, *c);
    }
    let residual = (m - recon).norm();
    if residual > CPIN_TOL * input_norm.max(1e-300) {
        return Err(Error::NotInCpin { residual });
    }
    Ok(coeffs)
}

/// Element of `CL² = ℝ ⊕ End(V) ⊕ Λ²V* ⊕ Λ²V`.
///
/// `endo = A` enters as `τ(A) = Σ A_ij q(vᵢ∧eʲ)`, which acts on forms as
/// `½ tr A − D_{A*}` and satisfies `[τ(A), E] = (A ⊕ −Aᵀ)E`. The two-form is
/// `b = Σ_{i<j} b_ij eⁱ∧eʲ` acting by wedge; the two-vector is stored as an
/// antisymmetric matrix `β` acting by `Σ_{i<j} β_ij i_{vᵢ}∘i_{vⱼ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cl2Element {
    pub scalar: f64,
    pub endo: DMatrix<f64>,
    pub two_form: Multivector,
    pub two_vector: DMatrix<f64>,
}

/// Number of real coordinates of `CL²`: `1 + n² + n(n-1)`.
pub fn cl2_dim(n: usize) -> usize {
    1 + 2 * n * n - n
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

impl Cl2Element {
    pub fn zero(n: usize) -> Self {
        Cl2Element {
            scalar: 0.0,
            endo: DMatrix::zeros(n, n),
            two_form: Multivector::zero(n),
            two_vector: DMatrix::zeros(n, n),
        }
    }

    pub fn from_endo(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        Cl2Element { endo: a, ..Self::zero(n) }
    }

    pub fn from_two_form(b: Multivector) -> Self {
        let n = b.n();
        Cl2Element { two_form: b.grade_part(2).re(), ..Self::zero(n) }
    }

    pub fn from_two_vector(beta: DMatrix<f64>) -> Self {
        let n = beta.nrows();
        Cl2Element { two_vector: beta, ..Self::zero(n) }
    }

    pub fn n(&self) -> usize {
        self.endo.nrows()
    }

    /// Coordinates `[scalar, A (row-major), b_{i<j}, β_{i<j}]`.
    pub fn coords(&self) -> DVector<f64> {
        let n = self.n();
        let mut v = DVector::zeros(cl2_dim(n));
        v[0] = self.scalar;
        for i in 0..n {
            for j in 0..n {
                v[1 + i * n + j] = self.endo[(i, j)];
            }
        }
        let off = 1 + n * n;
        for (k, (i, j)) in pairs(n).enumerate() {
            v[off + k] = self.two_form.coeff(1 << i | 1 << j).re;
            v[off + n * (n - 1) / 2 + k] = self.two_vector[(i, j)];
        }
        v
    }

    pub fn from_coords(n: usize, v: &DVector<f64>) -> Result<Self> {
        if v.len() != cl2_dim(n) {
            return Err(Error::DimensionMismatch { expected: cl2_dim(n), found: v.len() });
        }
        let mut a = Self::zero(n);
        a.scalar = v[0];
        for i in 0..n {
            for j in 0..n {
                a.endo[(i, j)] = v[1 + i * n + j];
            }
        }
        let off = 1 + n * n;
        for (k, (i, j)) in pairs(n).enumerate() {
            a.two_form.set(1 << i | 1 << j, C64::new(v[off + k], 0.0));
            let b = v[off + n * (n - 1) / 2 + k];
            a.two_vector[(i, j)] = b;
            a.two_vector[(j, i)] = -b;
        }
        Ok(a)
    }

    pub fn symbol(&self) -> Vec<f64> {
        let n = self.n();
        let frame = Cl2Frame::masks(n);
        let mut s = vec![0.0; 1 << (2 * n)];
        for (mask, c) in frame.iter().zip(self.coords().iter()) {
            s[*mask] += c;
        }
        s
    }

    pub fn to_clifford(&self) -> CliffordElement {
        CliffordElement::from_symbol(self.n(), self.symbol())
    }

    pub fn from_clifford(a: &CliffordElement) -> Result<Self> {
        let n = a.n();
        if a.filtration_degree()? > 2 {
            return Err(Error::InvalidStructure("element is not in CL²".into()));
        }
        let masks = Cl2Frame::masks(n);
        let v = DVector::from_iterator(masks.len(), masks.iter().map(|&m| a.symbol()[m]));
        Self::from_coords(n, &v)
    }

    /// Matrix of `E ↦ [a, E]` on `V ⊕ V*`: `[[A, β], [b, −Aᵀ]]`.
    pub fn so_matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut x = DMatrix::zeros(2 * n, 2 * n);
        x.view_mut((0, 0), (n, n)).copy_from(&self.endo);
        x.view_mut((n, n), (n, n)).copy_from(&(-self.endo.transpose()));
        x.view_mut((0, n), (n, n)).copy_from(&self.two_vector);
        for (i, j) in pairs(n) {
            let b = self.two_form.coeff(1 << i | 1 << j).re;
            x[(n + i, j)] = b;
            x[(n + j, i)] = -b;
        }
        x
    }

    /// The element with zero scalar part whose bracket realizes `x ∈ so(V⊕V*)`.
    pub fn from_so(x: &DMatrix<f64>) -> Result<Self> {
        let n = x.nrows() / 2;
        if x.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: x.ncols() });
        }
        let q = SplitPairing::new(n).gram();
        let defect = (x.transpose() * &q + &q * x).norm();
        if defect > 1e-9 * x.norm().max(1.0) {
            return Err(Error::InvalidStructure("matrix does not preserve the pairing".into()));
        }
        let mut a = Self::from_endo(x.view((0, 0), (n, n)).into_owned());
        a.two_vector = x.view((0, n), (n, n)).into_owned();
        for (i, j) in pairs(n) {
            a.two_form.set(1 << i | 1 << j, C64::new(x[(n + i, j)], 0.0));
        }
        Ok(a)
    }
}

/// The exponential `e^a` of a `CL²` element via its spin matrix.
pub fn exp_cl2(a: &Cl2Element) -> CliffordElement {
    let m = expm(&a.to_clifford().matrix);
    CliffordElement::from_matrix(a.n(), m).expect("square")
}

/// Spinor operators for the coordinate basis of `CL²`.
#[derive(Clone, Debug)]
pub struct Cl2Frame {
    n: usize,
    ops: Vec<MonomialOp>,
}

impl Cl2Frame {
    /// Symbol masks of the coordinate basis, in coordinate order.
    pub fn masks(n: usize) -> Vec<usize> {
        let mut m = Vec::with_capacity(cl2_dim(n));
        m.push(0);
        for i in 0..n {
            for j in 0..n {
                m.push(1 << i | 1 << (n + j));
            }
        }
        for (i, j) in pairs(n) {
            m.push(1 << (n + i) | 1 << (n + j));
        }
        for (i, j) in pairs(n) {
            m.push(1 << i | 1 << j);
        }
        m
    }

    pub fn new(n: usize) -> Self {
        let ops = Self::masks(n).into_iter().map(|m| MonomialOp::quantized(n, m)).collect();
        Cl2Frame { n, ops }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[MonomialOp] {
        &self.ops
    }

    /// Spin matrix of the element with coordinates `c`.
    pub fn matrix(&self, c: &[f64]) -> DMatrix<f64> {
        let d = 1 << self.n;
        let mut m = DMatrix::zeros(d, d);
        for (op, &x) in self.ops.iter().zip(c) {
            if x != 0.0 {
                op.add_to_matrix(&mut m, x);
            }
        }
        m
    }

    pub fn complex_matrix(&self, c: &[C64]) -> DMatrix<C64> {
        let d = 1 << self.n;
        let mut m = DMatrix::zeros(d, d);
        for (op, &x) in self.ops.iter().zip(c) {
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for (j, (&t, &s)) in op.dst.iter().zip(&op.coef).enumerate() {
                if s != 0.0 {
                    m[(t as usize, j)] += x * s;
                }
            }
        }
        m
    }

    /// Apply complex coordinates `c` to every `2^n` block of `phi`, adding into `out`.
    pub fn apply_complex(&self, c: &[C64], phi: &[C64], out: &mut [C64]) {
        let d = 1 << self.n;
        for (op, &x) in self.ops.iter().zip(c) {
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for (src, dst) in phi.chunks(d).zip(out.chunks_mut(d)) {
                op.apply_complex(src, dst, x);
            }
        }
    }

    /// Columns `a_k · Φ` for each coordinate basis element, on a real view.
    pub fn action_matrix(&self, phi: &DVector<f64>) -> DMatrix<f64> {
        let d = 1 << self.n;
        let mut m = DMatrix::zeros(phi.len(), self.ops.len());
        let mut col = vec![0.0; phi.len()];
        for (k, op) in self.ops.iter().enumerate() {
            col.iter_mut().for_each(|x| *x = 0.0);
            for (src, dst) in phi.as_slice().chunks(d).zip(col.chunks_mut(d)) {
                op.apply(src, dst, 1.0);
            }
            m.set_column(k, &DVector::from_column_slice(&col));
        }
        m
    }
}
