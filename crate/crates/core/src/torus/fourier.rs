//! Truncated Fourier expansions on the flat torus `ℝⁿ/ℤⁿ`.
//!
//! A field is stored on the split real view of a [`FormTuple`]: every
//! frequency carries a complex vector made of `2ⁿ`-blocks, one per real
//! component. Frequencies outside the cube `|m|_∞ ≤ trunc` are zero, and
//! products that would leave the cube are rejected rather than dropped.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;

use crate::clifford::{cl2_dim, Cl2Element, Cl2Frame, MonomialOp};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::multivector::{FormTuple, Multivector, Reality};

pub type Freq = Vec<i32>;

pub fn linf(m: &[i32]) -> u32 {
    m.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0)
}

pub fn neg(m: &[i32]) -> Freq {
    m.iter().map(|x| -x).collect()
}

fn add(a: &[i32], b: &[i32]) -> Freq {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// All frequencies with `|m|_∞ ≤ trunc`, lexicographic.
pub fn frequency_box(n: usize, trunc: u32) -> Vec<Freq> {
    let t = trunc as i32;
    let mut out = vec![vec![-t; n]];
    loop {
        let mut m = out.last().unwrap().clone();
        let mut k = n;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if m[k] < t {
                m[k] += 1;
                break;
            }
            m[k] = -t;
        }
        out.push(m);
    }
}

/// `ξ ∧ src` for a real covector, added into `dst` with a complex scale.
pub(crate) fn wedge_covector_into(xi: &[f64], src: &[C64], dst: &mut [C64], scale: C64) {
    for (j, &x) in xi.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let bit = 1usize << j;
        for (m, &c) in src.iter().enumerate() {
            if m & bit == 0 && (c.re != 0.0 || c.im != 0.0) {
                let s = if (m & (bit - 1)).count_ones() % 2 == 0 { x } else { -x };
                dst[m | bit] += scale * c * s;
            }
        }
    }
}

/// `i_v src` for a real vector; the Euclidean adjoint of `wedge_covector_into`.
pub(crate) fn interior_into(v: &[f64], src: &[C64], dst: &mut [C64], scale: C64) {
    for (j, &x) in v.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let bit = 1usize << j;
        for (m, &c) in src.iter().enumerate() {
            if m & bit != 0 && (c.re != 0.0 || c.im != 0.0) {
                let s = if (m & (bit - 1)).count_ones() % 2 == 0 { x } else { -x };
                dst[m ^ bit] += scale * c * s;
            }
        }
    }
}

fn is_zero(v: &DVector<C64>) -> bool {
    v.iter().all(|c| c.re == 0.0 && c.im == 0.0)
}

/// Truncated Fourier series of a form-tuple valued function.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierForm {
    n: usize,
    reality: Reality,
    blocks: usize,
    trunc: u32,
    real: bool,
    coeffs: BTreeMap<Freq, DVector<C64>>,
}

impl FourierForm {
    /// Zero field whose values have the shape of `template`.
    pub fn zero_like(template: &FormTuple, trunc: u32) -> Self {
        FourierForm {
            n: template.n(),
            reality: template.reality,
            blocks: template.blocks(),
            trunc,
            real: true,
            coeffs: BTreeMap::new(),
        }
    }

    /// Zero field with one real component (an ordinary form).
    pub fn zero(n: usize, trunc: u32) -> Self {
        FourierForm { n, reality: Reality::Real, blocks: 1, trunc, real: true, coeffs: BTreeMap::new() }
    }

    pub fn constant(phi: &FormTuple, trunc: u32) -> Self {
        let mut f = Self::zero_like(phi, trunc);
        let v = phi.real_view().map(|x| C64::new(x, 0.0));
        f.coeffs.insert(vec![0; phi.n()], v);
        f
    }

    /// Real field `c e^{2πi m·x} + c̄ e^{−2πi m·x}`.
    pub fn real_mode(template: &FormTuple, trunc: u32, m: &[i32], c: DVector<C64>) -> Result<Self> {
        let mut f = Self::zero_like(template, trunc);
        if m.iter().all(|&x| x == 0) {
            f.set(m, c.map(|z| C64::new(2.0 * z.re, 0.0)))?;
        } else {
            f.set(&neg(m), c.map(|z| z.conj()))?;
            f.set(m, c)?;
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn reality(&self) -> Reality {
        self.reality
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Length of each coefficient vector.
    pub fn dim(&self) -> usize {
        self.blocks << self.n
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    /// Drop the reality flag; used for complex-valued fields.
    pub fn complexified(mut self) -> Self {
        self.real = false;
        self
    }

    pub fn with_trunc(mut self, trunc: u32) -> Result<Self> {
        if let Some(needed) = self.coeffs.keys().map(|m| linf(m)).max() {
            if needed > trunc {
                return Err(Error::TruncationTooSmall { needed, trunc });
            }
        }
        self.trunc = trunc;
        Ok(self)
    }

    pub fn coeff(&self, m: &[i32]) -> Option<&DVector<C64>> {
        self.coeffs.get(m)
    }

    pub fn set(&mut self, m: &[i32], v: DVector<C64>) -> Result<()> {
        if m.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: m.len() });
        }
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        let needed = linf(m);
        if needed > self.trunc {
            return Err(Error::TruncationTooSmall { needed, trunc: self.trunc });
        }
        self.coeffs.insert(m.to_vec(), v);
        Ok(())
    }

    /// Add `v` to the coefficient at `m`, refusing frequencies outside the cube.
    pub fn accumulate(&mut self, m: Freq, v: &DVector<C64>) -> Result<()> {
        if is_zero(v) {
            return Ok(());
        }
        let needed = linf(&m);
        if needed > self.trunc {
            return Err(Error::TruncationTooSmall { needed, trunc: self.trunc });
        }
        let dim = self.dim();
        *self.coeffs.entry(m).or_insert_with(|| DVector::zeros(dim)) += v;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Freq, &DVector<C64>)> {
        self.coeffs.iter()
    }

    pub fn support(&self) -> Vec<Freq> {
        self.coeffs.iter().filter(|(_, v)| !is_zero(v)).map(|(m, _)| m.clone()).collect()
    }

    /// Largest `|m|_∞` carrying a nonzero coefficient.
    pub fn max_freq(&self) -> u32 {
        self.support().iter().map(|m| linf(m)).max().unwrap_or(0)
    }

    /// `L²` norm over the torus (Parseval).
    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    /// `max_m ‖c(−m) − conj c(m)‖`.
    pub fn reality_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (m, v) in &self.coeffs {
            let w = self.coeffs.get(&neg(m)).cloned().unwrap_or_else(|| DVector::zeros(v.len()));
            worst = worst.max((w - v.map(|z| z.conj())).norm());
        }
        worst
    }

    fn same_shape(&self, other: &FourierForm) -> Result<()> {
        if self.n != other.n || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &FourierForm) -> Result<FourierForm> {
        self.same_shape(other)?;
        let mut out = self.clone();
        out.trunc = self.trunc.max(other.trunc);
        out.real = self.real && other.real;
        for (m, v) in &other.coeffs {
            out.accumulate(m.clone(), v)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FourierForm) -> Result<FourierForm> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> FourierForm {
        let mut out = self.clone();
        out.real = self.real && c.im == 0.0;
        for v in out.coeffs.values_mut() {
            *v *= c;
        }
        out
    }

    /// Apply a per-frequency linear map to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&[i32], &DVector<C64>) -> DVector<C64>) -> FourierForm {
        let mut out = self.clone();
        for (m, v) in out.coeffs.iter_mut() {
            *v = f(m, v);
        }
        out.coeffs.retain(|_, v| !is_zero(v));
        out
    }

    /// The frequency-zero coefficient as a form tuple (real parts).
    pub fn mean(&self) -> Result<FormTuple> {
        let v = self.coeffs.get(&vec![0; self.n]).cloned().unwrap_or_else(|| DVector::zeros(self.dim()));
        FormTuple::from_real_view(self.n, self.reality, &v.map(|z| z.re))
    }
}

/// Exterior derivative: `α ↦ 2πi Σ m_j e^j ∧ α` at frequency `m`.
pub fn dform(w: &FourierForm) -> FourierForm {
    let d = 1usize << w.n;
    w.map_coeffs(|m, v| {
        let xi: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        let mut out = DVector::zeros(v.len());
        for (src, dst) in v.as_slice().chunks(d).zip(out.as_mut_slice().chunks_mut(d)) {
            wedge_covector_into(&xi, src, dst, C64::new(0.0, 2.0 * PI));
        }
        out
    })
}

/// Formal adjoint of [`dform`] for the flat metric: `−2πi i_m` at frequency `m`.
pub fn codifferential(w: &FourierForm) -> FourierForm {
    let d = 1usize << w.n;
    w.map_coeffs(|m, v| {
        let xi: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        let mut out = DVector::zeros(v.len());
        for (src, dst) in v.as_slice().chunks(d).zip(out.as_mut_slice().chunks_mut(d)) {
            interior_into(&xi, src, dst, C64::new(0.0, -2.0 * PI));
        }
        out
    })
}

/// `a ∧ w` for a single-block field `a`, acting on every block of `w`.
pub fn wedge(a: &FourierForm, w: &FourierForm) -> Result<FourierForm> {
    if a.blocks != 1 || a.n != w.n {
        return Err(Error::DimensionMismatch { expected: 1 << w.n, found: a.dim() });
    }
    let d = 1usize << w.n;
    let mut out = w.clone();
    out.coeffs.clear();
    out.trunc = w.trunc.max(a.trunc);
    out.real = a.real && w.real;
    for (p, x) in &a.coeffs {
        for (q, y) in &w.coeffs {
            let mut acc = DVector::zeros(w.dim());
            for (i, &cx) in x.iter().enumerate() {
                if cx.re == 0.0 && cx.im == 0.0 {
                    continue;
                }
                for (src, dst) in y.as_slice().chunks(d).zip(acc.as_mut_slice().chunks_mut(d)) {
                    for (j, &cy) in src.iter().enumerate() {
                        if let Some(s) = crate::multivector::wedge_sign(i, j) {
                            dst[i | j] += cx * cy * s;
                        }
                    }
                }
            }
            out.accumulate(add(p, q), &acc)?;
        }
    }
    Ok(out)
}

/// `e^{b} = Σ b^j/j!` for a single-block field of even forms.
pub fn exp_wedge(b: &FourierForm) -> Result<FourierForm> {
    let mut one = FourierForm::zero(b.n, b.trunc);
    let mut c = DVector::zeros(1 << b.n);
    c[0] = C64::new(1.0, 0.0);
    one.set(&vec![0; b.n], c)?;
    let mut sum = one.clone();
    let mut term = one;
    for j in 1..=b.n {
        term = wedge(b, &term)?.scale(C64::new(1.0 / j as f64, 0.0));
        if term.norm() == 0.0 {
            break;
        }
        sum = sum.add(&term)?;
    }
    Ok(sum)
}

/// Truncated Fourier series of a complexified `CL²` field.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCL2Field {
    n: usize,
    trunc: u32,
    real: bool,
    coeffs: BTreeMap<Freq, DVector<C64>>,
}

impl FourierCL2Field {
    pub fn zero(n: usize, trunc: u32) -> Self {
        FourierCL2Field { n, trunc, real: true, coeffs: BTreeMap::new() }
    }

    pub fn constant(a: &Cl2Element, trunc: u32) -> Self {
        let mut f = Self::zero(a.n(), trunc);
        f.coeffs.insert(vec![0; a.n()], a.coords().map(|x| C64::new(x, 0.0)));
        f
    }

    /// Real field `c e^{2πi m·x} + c̄ e^{−2πi m·x}` in `CL²` coordinates.
    pub fn real_mode(n: usize, trunc: u32, m: &[i32], c: DVector<C64>) -> Result<Self> {
        let mut f = Self::zero(n, trunc);
        if m.iter().all(|&x| x == 0) {
            f.set(m, c.map(|z| C64::new(2.0 * z.re, 0.0)))?;
        } else {
            f.set(&neg(m), c.map(|z| z.conj()))?;
            f.set(m, c)?;
        }
        Ok(f)
    }

    /// The `b`-field `b∧` of a single-block field of 2-forms.
    pub fn from_two_form_field(b: &FourierForm) -> Result<Self> {
        let n = b.n;
        if b.blocks != 1 {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: b.dim() });
        }
        let mut f = Self::zero(n, b.trunc);
        f.real = b.real;
        for (m, v) in &b.coeffs {
            let part = |g: fn(&C64) -> f64| -> Result<DVector<f64>> {
                let mv = Multivector::from_real(n, &v.iter().map(g).collect::<Vec<_>>())?;
                if (&mv - &mv.grade_part(2)).max_abs() > 0.0 {
                    return Err(Error::InvalidStructure("b-field must be a 2-form".into()));
                }
                Ok(Cl2Element::from_two_form(mv).coords())
            };
            let (re, im) = (part(|z| z.re)?, part(|z| z.im)?);
            f.set(m, DVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i])))?;
        }
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn complexified(mut self) -> Self {
        self.real = false;
        self
    }

    pub fn coeff(&self, m: &[i32]) -> Option<&DVector<C64>> {
        self.coeffs.get(m)
    }

    pub fn set(&mut self, m: &[i32], v: DVector<C64>) -> Result<()> {
        if m.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: m.len() });
        }
        if v.len() != cl2_dim(self.n) {
            return Err(Error::DimensionMismatch { expected: cl2_dim(self.n), found: v.len() });
        }
        let needed = linf(m);
        if needed > self.trunc {
            return Err(Error::TruncationTooSmall { needed, trunc: self.trunc });
        }
        if is_zero(&v) {
            self.coeffs.remove(m);
        } else {
            self.coeffs.insert(m.to_vec(), v);
        }
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Freq, &DVector<C64>)> {
        self.coeffs.iter()
    }

    pub fn max_freq(&self) -> u32 {
        self.coeffs.keys().map(|m| linf(m)).max().unwrap_or(0)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.real = self.real && c.im == 0.0;
        for v in out.coeffs.values_mut() {
            *v *= c;
        }
        out
    }

    /// Pointwise Clifford action `a·w`, a convolution of coefficients.
    pub fn act(&self, w: &FourierForm) -> Result<FourierForm> {
        self.act_with(&Cl2Frame::new(self.n), w)
    }

    pub fn act_with(&self, frame: &Cl2Frame, w: &FourierForm) -> Result<FourierForm> {
        if w.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: w.n });
        }
        let mut out = w.clone();
        out.coeffs.clear();
        out.trunc = w.trunc.max(self.trunc);
        out.real = self.real && w.real;
        for (p, a) in &self.coeffs {
            let c = a.as_slice();
            for (q, y) in &w.coeffs {
                let mut acc = DVector::zeros(w.dim());
                frame.apply_complex(c, y.as_slice(), acc.as_mut_slice());
                out.accumulate(add(p, q), &acc)?;
            }
        }
        Ok(out)
    }
}

/// Truncated Fourier series of a complexified section `v + η` of `T ⊕ T*`;
/// coefficients hold the `n` vector components then the `n` covector ones.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierCL1Field {
    n: usize,
    trunc: u32,
    coeffs: BTreeMap<Freq, DVector<C64>>,
}

impl FourierCL1Field {
    pub fn zero(n: usize, trunc: u32) -> Self {
        FourierCL1Field { n, trunc, coeffs: BTreeMap::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn trunc(&self) -> u32 {
        self.trunc
    }

    pub fn coeff(&self, m: &[i32]) -> Option<&DVector<C64>> {
        self.coeffs.get(m)
    }

    pub fn set(&mut self, m: &[i32], v: DVector<C64>) -> Result<()> {
        if v.len() != 2 * self.n || m.len() != self.n {
            return Err(Error::DimensionMismatch { expected: 2 * self.n, found: v.len() });
        }
        let needed = linf(m);
        if needed > self.trunc {
            return Err(Error::TruncationTooSmall { needed, trunc: self.trunc });
        }
        self.coeffs.insert(m.to_vec(), v);
        Ok(())
    }

    pub fn accumulate(&mut self, m: Freq, v: &DVector<C64>) -> Result<()> {
        if is_zero(v) {
            return Ok(());
        }
        let needed = linf(&m);
        if needed > self.trunc {
            return Err(Error::TruncationTooSmall { needed, trunc: self.trunc });
        }
        let dim = 2 * self.n;
        *self.coeffs.entry(m).or_insert_with(|| DVector::zeros(dim)) += v;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Freq, &DVector<C64>)> {
        self.coeffs.iter()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &FourierCL1Field) -> Result<FourierCL1Field> {
        let mut out = self.clone();
        out.trunc = self.trunc.max(other.trunc);
        for (m, v) in &other.coeffs {
            out.accumulate(m.clone(), &(-v))?;
        }
        Ok(out)
    }

    /// Pointwise `(i_v + η∧)w`.
    pub fn act(&self, w: &FourierForm) -> Result<FourierForm> {
        if w.n != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: w.n });
        }
        let d = 1usize << self.n;
        let gens: Vec<MonomialOp> = (0..2 * self.n).map(|k| MonomialOp::quantized(self.n, 1 << k)).collect();
        let mut out = w.clone();
        out.coeffs.clear();
        out.trunc = w.trunc.max(self.trunc);
        out.real = false;
        for (p, e) in &self.coeffs {
            for (q, y) in &w.coeffs {
                let mut acc = DVector::zeros(w.dim());
                for (g, &c) in gens.iter().zip(e.iter()) {
                    if c.re == 0.0 && c.im == 0.0 {
                        continue;
                    }
                    for (src, dst) in y.as_slice().chunks(d).zip(acc.as_mut_slice().chunks_mut(d)) {
                        g.apply_complex(src, dst, c);
                    }
                }
                out.accumulate(add(p, q), &acc)?;
            }
        }
        Ok(out)
    }
}
