//! Model structures: generalized SL_n(ℂ) spinors, Calabi-Yau pairs,
//! hyperKähler triples, the G2 pair and the Spin(7) form, plus the linear
//! data attached to a pure spinor (annihilator, `Uᵖ` spaces, `J_φ`).

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::clifford::{exp_cl2, vector_matrix, Cl2Element, Cl2Frame, SplitPairing};
use crate::error::{Error, Result};
use crate::linalg::{column_space, hstack, null_space, to_complex, SubspaceBasis, C64, RANK_RTOL};
use crate::multivector::{mask_of, Basis, FormTuple, Multivector, Reality};
use crate::spinrep::act_matrix;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Sl,
    Cy,
    Hk,
    G2,
    Spin7,
}

/// A model structure, optionally moved by `e^{a₁}, e^{a₂}, ..` (applied in order).
#[derive(Clone, Debug, PartialEq)]
pub struct StructureSpec {
    pub kind: Kind,
    pub n: usize,
    pub transforms: Vec<Cl2Element>,
}

impl StructureSpec {
    pub fn new(kind: Kind, n: usize) -> Self {
        StructureSpec { kind, n, transforms: Vec::new() }
    }

    /// Dimension of `V`.
    pub fn dim(&self) -> usize {
        match self.kind {
            Kind::Sl | Kind::Cy => 2 * self.n,
            Kind::Hk => 4 * self.n,
            Kind::G2 => 7,
            Kind::Spin7 => 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.kind, Kind::Sl | Kind::Cy | Kind::Hk) && self.n == 0 {
            return Err(Error::InvalidStructure("n must be positive".to_string()));
        }
        if self.dim() > 8 {
            return Err(Error::InvalidStructure("dimension of V above 8 is not supported".to_string()));
        }
        let d = self.dim();
        if let Some(t) = self.transforms.iter().find(|t| t.n() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: t.n() });
        }
        Ok(())
    }

    pub fn build(&self) -> Result<FormTuple> {
        self.validate()?;
        let mut phi = match self.kind {
            Kind::Sl => make_sl(self.n),
            Kind::Cy => make_cy(self.n),
            Kind::Hk => make_hk(self.n),
            Kind::G2 => make_g2(),
            Kind::Spin7 => make_spin7(),
        };
        for t in &self.transforms {
            phi = act_matrix(exp_cl2(t).matrix(), &phi)?;
        }
        Ok(phi)
    }
}

/// `Ω = θ¹∧..∧θⁿ` on `ℝ^{2n}` with `θᵏ = e^{2k-1} + i e^{2k}`.
pub fn make_sl(n: usize) -> FormTuple {
    FormTuple::complex(vec![decomposable_omega(n)])
}

/// [`make_sl`] for a given dimension of `V`, rejecting odd dimensions.
pub fn make_sl_on(dim: usize) -> Result<FormTuple> {
    if dim == 0 || dim % 2 == 1 {
        return Err(Error::InvalidStructure("SL structures need an even-dimensional V".to_string()));
    }
    Ok(make_sl(dim / 2))
}

fn decomposable_omega(n: usize) -> Multivector {
    let dim = 2 * n;
    let mut omega = Multivector::scalar(dim, 1.0);
    for k in 0..n {
        let mut theta = Multivector::zero(dim);
        theta.set(1 << (2 * k), C64::new(1.0, 0.0));
        theta.set(1 << (2 * k + 1), I);
        omega = omega.wedge(&theta).expect("same dimension");
    }
    omega
}

/// Standard symplectic form `Σ e^{2k-1,2k}`.
pub fn standard_omega(n: usize) -> Multivector {
    let mut w = Multivector::zero(2 * n);
    for k in 0..n {
        w.set(1 << (2 * k) | 1 << (2 * k + 1), C64::new(1.0, 0.0));
    }
    w
}

/// `e^{iω}`.
pub fn exp_i(omega: &Multivector) -> Multivector {
    let n = omega.n();
    let w = omega * I;
    let mut acc = Multivector::scalar(n, 1.0);
    let mut term = Multivector::scalar(n, 1.0);
    for k in 1..=n / 2 {
        term = &term.wedge(&w).expect("same dimension") * (1.0 / k as f64);
        acc += &term;
    }
    acc
}

/// The Calabi-Yau pair `(Ω, e^{iω})`.
pub fn make_cy(n: usize) -> FormTuple {
    FormTuple::complex(vec![decomposable_omega(n), exp_i(&standard_omega(n))])
}

/// The hyperKähler symplectic forms `(ω_I, ω_J, ω_K)` on `ℝ^{4m}`.
pub fn hk_forms(m: usize) -> [Multivector; 3] {
    let dim = 4 * m;
    let mut out = [Multivector::zero(dim), Multivector::zero(dim), Multivector::zero(dim)];
    for k in 0..m {
        let o = 4 * k;
        let t = |a: usize, b: usize, s: f64| (vec![o + a, o + b], s);
        let blocks = [
            [t(1, 2, 1.0), t(3, 4, 1.0)],
            [t(1, 3, 1.0), t(2, 4, -1.0)],
            [t(1, 4, 1.0), t(2, 3, 1.0)],
        ];
        for (w, terms) in out.iter_mut().zip(blocks) {
            for (idx, s) in terms {
                w.set(mask_of(&idx), C64::new(s, 0.0));
            }
        }
    }
    out
}

/// The triple `(e^{iω_I}, e^{iω_J}, e^{iω_K})`.
pub fn make_hk(m: usize) -> FormTuple {
    FormTuple::complex(hk_forms(m).iter().map(exp_i).collect())
}

const FANO: [[usize; 3]; 7] = [[1, 2, 4], [2, 3, 5], [3, 4, 6], [4, 5, 7], [5, 6, 1], [6, 7, 2], [7, 1, 3]];

/// Octonion product; index 0 is the unit, 1..7 the imaginary units with
/// `e_i e_{i+1} = e_{i+3}` (indices mod 7).
pub fn octonion_mul(x: &[f64; 8], y: &[f64; 8]) -> [f64; 8] {
    let mut out = [0.0; 8];
    for i in 0..8 {
        for j in 0..8 {
            let c = x[i] * y[j];
            if c == 0.0 {
                continue;
            }
            let (s, k) = unit_product(i, j);
            out[k] += s * c;
        }
    }
    out
}

fn unit_product(i: usize, j: usize) -> (f64, usize) {
    if i == 0 {
        return (1.0, j);
    }
    if j == 0 {
        return (1.0, i);
    }
    if i == j {
        return (-1.0, 0);
    }
    for t in FANO {
        for r in 0..3 {
            let (a, b, c) = (t[r], t[(r + 1) % 3], t[(r + 2) % 3]);
            if (a, b) == (i, j) {
                return (1.0, c);
            }
            if (b, a) == (i, j) {
                return (-1.0, c);
            }
        }
    }
    unreachable!("every pair of distinct imaginary units lies on one line")
}

/// `φ(x, y, z) = ⟨xy, z⟩` on `Im 𝕆`, read in coordinates through `x ↦ x̄`.
///
/// In plain coordinates the table's form induces the orientation `−e^{1..7}`;
/// the conjugate identification makes the induced orientation `e^{1..7}`, so
/// `ψ = ⋆φ` and `vol₈` use the same orientation as every other Hodge star.
pub fn g2_three_form() -> Multivector {
    let mut phi = Multivector::zero(7);
    for i in 1..=7 {
        for j in i + 1..=7 {
            let (s, k) = unit_product(i, j);
            if k > j {
                let cur = phi.coeff(mask_of(&[i, j, k]));
                phi.set(mask_of(&[i, j, k]), cur - s);
            }
        }
    }
    phi
}

/// `ψ = ⋆φ` on `ℝ⁷`.
pub fn g2_four_form() -> Multivector {
    g2_three_form().hodge_star(&Basis::euclidean(7)).expect("dimension 7")
}

/// The G2 pair `(vol₇ − φ, 1 − ψ)`.
pub fn make_g2() -> FormTuple {
    FormTuple::real(vec![
        &Multivector::volume(7) - &g2_three_form(),
        &Multivector::scalar(7, 1.0) - &g2_four_form(),
    ])
}

fn shift(m: &Multivector, to: usize) -> Multivector {
    let mut out = Multivector::zero(to);
    for (mask, c) in m.terms() {
        out.set(mask << (to - m.n()), c);
    }
    out
}

/// Cayley form `φ_Spin = e¹∧φ + ψ` on `ℝ⁸ = 𝕆` (e¹ the real direction).
pub fn cayley_form() -> Multivector {
    let phi = shift(&g2_three_form(), 8);
    let psi = shift(&g2_four_form(), 8);
    &Multivector::covector(8, 1).wedge(&phi).expect("n=8") + &psi
}

/// `Φ_Spin = 1 − φ_Spin + vol₈`.
pub fn make_spin7() -> FormTuple {
    let phi = cayley_form();
    FormTuple::real(vec![&(&Multivector::scalar(8, 1.0) - &phi) + &Multivector::volume(8)])
}

/// Complex matrix of `E ↦ E·φ` on `(V⊕V*)⊗ℂ`.
fn clifford_map(phi: &Multivector) -> DMatrix<C64> {
    let n = phi.n();
    let v = DVector::from_column_slice(phi.coeffs());
    let cols: Vec<DVector<C64>> = (0..2 * n)
        .map(|k| {
            let mut e = vec![0.0; 2 * n];
            e[k] = 1.0;
            to_complex(&vector_matrix(n, &e)) * &v
        })
        .collect();
    hstack(1 << n, &cols)
}

#[derive(Clone, Debug)]
pub struct IsotropicData {
    /// `L_φ ⊂ (V⊕V*)⊗ℂ`.
    pub l: SubspaceBasis<C64>,
    /// `U^{-m}, .., U^{m}` (`2m = dim V`).
    pub u: Vec<SubspaceBasis<C64>>,
}

/// `L_φ = {E : E·φ = 0}`; errors unless `dim_ℂ L_φ = dim V`.
pub fn annihilator(phi: &Multivector) -> Result<SubspaceBasis<C64>> {
    let n = phi.n();
    let l = null_space(&clifford_map(phi), RANK_RTOL);
    if l.rank() != n {
        return Err(Error::Degenerate { expected: n, found: l.rank() });
    }
    Ok(l)
}

fn conj_basis(s: &SubspaceBasis<C64>) -> SubspaceBasis<C64> {
    SubspaceBasis { ambient_dim: s.ambient_dim, basis: s.basis.map(|c| c.conj()), tol: s.tol }
}

/// `L_φ ∩ conj(L_φ)` is zero.
pub fn is_nondegenerate(phi: &Multivector) -> bool {
    annihilator(phi).map(|l| l.intersect(&conj_basis(&l)).rank() == 0).unwrap_or(false)
}

/// `U^{-m+i} = Λⁱ L̄·φ`.
pub fn u_spaces(phi: &Multivector) -> Result<IsotropicData> {
    let n = phi.n();
    let l = annihilator(phi)?;
    if l.intersect(&conj_basis(&l)).rank() != 0 {
        return Err(Error::Degenerate { expected: n, found: n + 1 });
    }
    let lbar = conj_basis(&l);
    let ops: Vec<DMatrix<C64>> = lbar
        .basis
        .column_iter()
        .map(|c| {
            let e: Vec<C64> = c.iter().cloned().collect();
            let mut m = DMatrix::zeros(1 << n, 1 << n);
            for (k, x) in e.iter().enumerate() {
                let mut g = vec![0.0; 2 * n];
                g[k] = 1.0;
                m += to_complex(&vector_matrix(n, &g)) * *x;
            }
            m
        })
        .collect();
    let mut cur = column_space(&DMatrix::from_column_slice(1 << n, 1, phi.coeffs()), RANK_RTOL);
    let mut u = vec![cur.clone()];
    for _ in 0..n {
        let cols: Vec<DVector<C64>> =
            ops.iter().flat_map(|op| cur.basis.column_iter().map(move |c| op * c)).collect();
        cur = column_space(&hstack(1 << n, &cols), RANK_RTOL);
        u.push(cur.clone());
    }
    Ok(IsotropicData { l, u })
}

/// Generalized complex structure with `+i` eigenspace `conj(L_φ)`.
pub fn gcs_from_spinor(phi: &Multivector) -> Result<DMatrix<f64>> {
    let n = phi.n();
    let l = annihilator(phi)?;
    let lbar = conj_basis(&l);
    if l.intersect(&lbar).rank() != 0 {
        return Err(Error::Degenerate { expected: n, found: n + 1 });
    }
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    t.columns_mut(0, n).copy_from(&lbar.basis);
    t.columns_mut(n, n).copy_from(&l.basis);
    let tinv = t.clone().try_inverse().ok_or(Error::Singular)?;
    let d = DMatrix::from_diagonal(&DVector::from_fn(2 * n, |i, _| if i < n { I } else { -I }));
    let j = &t * d * tinv;
    Ok(j.map(|c| c.re))
}

/// The `CL²` element `a_J` with `[a_J, E] = J E` and no scalar part.
pub fn gcs_generator(j: &DMatrix<f64>) -> Result<Cl2Element> {
    Cl2Element::from_so(j)
}

/// Complex structure on `V` whose `+i` eigen-covectors are the `(1,0)` forms of `Ω`.
pub fn complex_structure(omega: &Multivector) -> Result<DMatrix<f64>> {
    let n = omega.n();
    let cols: Vec<DVector<C64>> = (0..n)
        .map(|j| {
            let mut xi = vec![C64::new(0.0, 0.0); n];
            xi[j] = C64::new(1.0, 0.0);
            DVector::from_column_slice(omega.wedge_covector(&xi).expect("dimension").coeffs())
        })
        .collect();
    let kernel = null_space(&hstack(1 << n, &cols), RANK_RTOL);
    if 2 * kernel.rank() != n {
        return Err(Error::Degenerate { expected: n / 2, found: kernel.rank() });
    }
    let k = n / 2;
    let mut t = DMatrix::zeros(n, n);
    t.columns_mut(0, k).copy_from(&kernel.basis);
    t.columns_mut(k, k).copy_from(&kernel.basis.map(|c| c.conj()));
    let tinv = t.clone().try_inverse().ok_or(Error::Degenerate { expected: k, found: 0 })?;
    let d = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| if i < k { I } else { -I }));
    // J* on covectors; J on vectors is its transpose
    let jstar = (&t * d * tinv).map(|c| c.re);
    Ok(jstar.transpose())
}

#[derive(Clone, Debug, Serialize)]
pub struct CyReport {
    /// `‖Ω∧ω‖`.
    pub omega_wedge_kahler: f64,
    /// Measured `c` with `Ω∧Ω̄ = c ωⁿ`.
    pub proportionality: C64Report,
    pub proportionality_residual: f64,
    /// Smallest eigenvalue of `g(u, v) = ω(u, Jv)`.
    pub metric_min_eigenvalue: f64,
    pub metric: Vec<Vec<f64>>,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct C64Report {
    pub re: f64,
    pub im: f64,
}

pub fn cy_check(omega_c: &Multivector, kahler: &Multivector) -> Result<CyReport> {
    let n = omega_c.n();
    let m = n / 2;
    let ow = omega_c.wedge(kahler)?.norm();
    let top = omega_c.wedge(&omega_c.conj())?;
    let mut wn = Multivector::scalar(n, 1.0);
    for _ in 0..m {
        wn = wn.wedge(kahler)?;
    }
    let full = (1 << n) - 1;
    let c = top.coeff(full) / wn.coeff(full);
    let residual = (&top - &(&wn * c)).norm();
    let j = complex_structure(omega_c)?;
    let g = DMatrix::from_fn(n, n, |a, b| {
        let mut u = vec![C64::new(0.0, 0.0); n];
        u[a] = C64::new(1.0, 0.0);
        let jv: Vec<C64> = (0..n).map(|r| C64::new(j[(r, b)], 0.0)).collect();
        kahler.interior(&u).expect("dimension").interior(&jv).expect("dimension").coeff(0).re
    });
    let sym = (&g + g.transpose()) * 0.5;
    let min_eig = sym.clone().symmetric_eigen().eigenvalues.min();
    let asym = (&g - g.transpose()).norm();
    let pass = ow <= 1e-10 && residual <= 1e-10 * top.norm().max(1.0) && c.norm_sqr() > 1e-20 && min_eig > 0.0 && asym <= 1e-10;
    Ok(CyReport {
        omega_wedge_kahler: ow,
        proportionality: C64Report { re: c.re, im: c.im },
        proportionality_residual: residual,
        metric_min_eigenvalue: min_eig,
        metric: (0..n).map(|a| (0..n).map(|b| g[(a, b)]).collect()).collect(),
        pass,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HkReport {
    /// Max residual of `I₀² = J₀² = K₀² = I₀J₀K₀ = −1`.
    pub quaternion_residual: f64,
    /// Max residual of `−I₀I₁ = −J₀J₁ = −K₀K₁`.
    pub common_g_residual: f64,
    /// `‖G² − 1‖`.
    pub g_square_residual: f64,
    /// `‖J² + 1‖` over the three spinor structures.
    pub gcs_residual: f64,
    pub pass: bool,
}

/// The three spinor structures `I₁, J₁, K₁` and `I₀ = J₁K₁, J₀ = K₁I₁, K₀ = I₁J₁`.
pub fn hk_structures(triple: &FormTuple) -> Result<([DMatrix<f64>; 3], [DMatrix<f64>; 3])> {
    if triple.len() != 3 {
        return Err(Error::InvalidStructure("a hyperKähler triple has three components".to_string()));
    }
    let i1 = gcs_from_spinor(&triple.components[0])?;
    let j1 = gcs_from_spinor(&triple.components[1])?;
    let k1 = gcs_from_spinor(&triple.components[2])?;
    let i0 = &j1 * &k1;
    let j0 = &k1 * &i1;
    let k0 = &i1 * &j1;
    Ok(([i1, j1, k1], [i0, j0, k0]))
}

pub fn hk_relations(triple: &FormTuple) -> Result<HkReport> {
    let ([i1, j1, k1], [i0, j0, k0]) = hk_structures(triple)?;
    let d = i1.nrows();
    let id = DMatrix::<f64>::identity(d, d);
    let q = [&i0 * &i0 + &id, &j0 * &j0 + &id, &k0 * &k0 + &id, &i0 * &j0 * &k0 + &id];
    let quaternion_residual = q.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let g = -(&i0 * &i1);
    let common = [(-(&j0 * &j1) - &g).norm(), (-(&k0 * &k1) - &g).norm()];
    let common_g_residual = common.iter().cloned().fold(0.0, f64::max);
    let g_square_residual = (&g * &g - &id).norm();
    let gcs_residual = [&i1, &j1, &k1].iter().map(|j| (*j * *j + &id).norm()).fold(0.0, f64::max);
    let tol = 1e-10;
    let pass = quaternion_residual <= tol && common_g_residual <= tol && g_square_residual <= tol && gcs_residual <= tol;
    Ok(HkReport { quaternion_residual, common_g_residual, g_square_residual, gcs_residual, pass })
}

/// `G` shared by the two triples of a hyperKähler structure. With `J(v) = −i_vω`
/// the product `I₀I₁` is the positive one.
pub fn hk_metric(triple: &FormTuple) -> Result<DMatrix<f64>> {
    let ([i1, _, _], [i0, _, _]) = hk_structures(triple)?;
    Ok(&i0 * &i1)
}

/// Spin-matrix action of `a_J` on a `Uᵖ` space: returns `max ‖a_J u − i p u‖`.
pub fn gcs_eigen_residual(phi: &Multivector, data: &IsotropicData) -> Result<f64> {
    let n = phi.n();
    let j = gcs_from_spinor(phi)?;
    let a = gcs_generator(&j)?;
    let m = to_complex(&Cl2Frame::new(n).matrix(a.coords().as_slice()));
    let half = (n / 2) as f64;
    let mut worst = 0.0f64;
    for (i, u) in data.u.iter().enumerate() {
        let p = i as f64 - half;
        let r = &m * &u.basis - &u.basis * (I * p);
        worst = worst.max(r.norm());
    }
    Ok(worst)
}

/// Checks that `J` squares to `−1` and preserves the pairing.
pub fn gcs_residuals(j: &DMatrix<f64>) -> (f64, f64) {
    let d = j.nrows();
    let q = SplitPairing::new(d / 2).gram();
    ((j * j + DMatrix::identity(d, d)).norm(), (j.transpose() * &q * j - &q).norm())
}

/// Spans over ℝ need the split view; this is the reality of every model.
pub fn reality(kind: Kind) -> Reality {
    match kind {
        Kind::G2 | Kind::Spin7 => Reality::Real,
        _ => Reality::Complex,
    }
}
