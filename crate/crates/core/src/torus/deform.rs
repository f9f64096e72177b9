//! Order-by-order solution of `d(e^{a(t)}·Φ) = 0` with `a(t) = Σ a_k t^k/k!`.
//!
//! At order `k` the `t^k` coefficient is `(1/k!) d(a_k·Φ) + Ob_k`, where
//! `Ob_k` only involves `a_1..a_{k-1}`. The harmonic part of `Ob_k` is the
//! obstruction; otherwise `a_k·Φ = −k!·d*G Ob_k` and `a_k` is the
//! minimal-norm preimage under `a ↦ a·Φ`, which is orthogonal to the
//! isotropy algebra. For Spin(7) the section is built instead from the
//! anti-self-dual correction of the full de Rham complex.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fourier::{dform, linf, Freq, FourierCL2Field, FourierForm};
use super::hodge::{rmul, wedge_matrix, FrequencyHodge, HodgePackage};
use super::spin7::Spin7Corrector;
use crate::clifford::Cl2Frame;
use crate::error::{Error, Result};
use crate::linalg::{null_space, pinv, C64, RANK_RTOL};
use crate::multivector::FormTuple;
use crate::orbit::action_map;
use crate::structures::{Kind, StructureSpec};

pub const CLOSED_TOL: f64 = 1e-11;
pub const OBSTRUCTION_RTOL: f64 = 1e-9;
pub const OBSTRUCTION_ATOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Green operator of the deformation subcomplex.
    Subcomplex,
    /// Full de Rham Green operator plus the anti-self-dual correction.
    Spin7,
}

#[derive(Clone, Debug)]
pub struct DeformationSeries {
    pub structure: FormTuple,
    pub order: usize,
    pub trunc: u32,
    pub route: Route,
    /// `a_1, .., a_K`.
    pub fields: Vec<FourierCL2Field>,
    /// `‖Ob_k‖` for `k = 2..K`.
    pub obstruction_norms: Vec<f64>,
    /// `‖Π Ob_k‖` for `k = 2..K`.
    pub harmonic_norms: Vec<f64>,
    /// `‖(d e^{a(t)}Φ)_{[k]}‖` for `k = 1..K`, from the independent oracle.
    pub residual_norms: Vec<f64>,
    /// Largest distance of an `Ob_k` coefficient from `E²`, relative.
    pub e2_residual: f64,
    /// Largest isotropy component of an `a_k` coefficient, relative.
    pub gauge_residual: f64,
    /// Largest `dα_− = dα` and anti-self-duality defects (Spin(7) route).
    pub correction_residual: f64,
}

impl DeformationSeries {
    pub fn max_residual(&self) -> f64 {
        self.residual_norms.iter().copied().fold(0.0, f64::max)
    }

    /// `‖Π Ob_k‖ / ‖Ob_k‖`, zero when `Ob_k = 0`.
    pub fn relative_harmonic_norms(&self) -> Vec<f64> {
        self.harmonic_norms
            .iter()
            .zip(&self.obstruction_norms)
            .map(|(&h, &o)| if o > 0.0 { h / o } else { h })
            .collect()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Fixed data for deforming one constant structure.
#[derive(Clone, Debug)]
pub struct Deformer {
    phi: FormTuple,
    route: Route,
    pkg: HodgePackage,
    action: DMatrix<f64>,
    preimage: DMatrix<f64>,
    isotropy: DMatrix<f64>,
    frame: Cl2Frame,
    corrector: Option<Spin7Corrector>,
}

impl Deformer {
    /// Subcomplex route for a constant structure.
    pub fn new(phi: &FormTuple) -> Result<Self> {
        Self::build(phi, Route::Subcomplex, None)
    }

    /// Route chosen by kind: Spin(7) uses the correction operator.
    pub fn for_spec(spec: &StructureSpec) -> Result<Self> {
        let phi = spec.build()?;
        if spec.kind == Kind::Spin7 {
            Self::build(&phi, Route::Spin7, Some(Spin7Corrector::new(spec)?))
        } else {
            Self::build(&phi, Route::Subcomplex, None)
        }
    }

    fn build(phi: &FormTuple, route: Route, corrector: Option<Spin7Corrector>) -> Result<Self> {
        let depth = if route == Route::Spin7 { 2 } else { 3 };
        let pkg = HodgePackage::new(phi, depth)?;
        let action = action_map(phi);
        let preimage = pinv(&action, RANK_RTOL);
        let isotropy = null_space(&action, RANK_RTOL).basis;
        Ok(Deformer { phi: phi.clone(), route, pkg, action, preimage, isotropy, frame: Cl2Frame::new(phi.n()), corrector })
    }

    pub fn structure(&self) -> &FormTuple {
        &self.phi
    }

    pub fn route(&self) -> Route {
        self.route
    }

    pub fn package(&self) -> &HodgePackage {
        &self.pkg
    }

    /// Minimal-norm `a` with `a·Φ = s` for `s ∈ E¹ ⊗ ℂ`.
    pub fn preimage(&self, s: &DVector<C64>) -> DVector<C64> {
        rmul(&self.preimage, s)
    }

    /// The real closed field `a₁` with `a₁·Φ = d(e^{2πi m·x} e) + c.c.`,
    /// `e = Σ c_j E⁰_j`, scaled so that `a₁·Φ` has the given amplitude.
    pub fn exact_mode(&self, m: &[i32], coords: &DVector<C64>, trunc: u32) -> Result<FourierCL2Field> {
        let e0 = self.pkg.basis(0);
        if coords.len() != e0.ncols() {
            return Err(Error::DimensionMismatch { expected: e0.ncols(), found: coords.len() });
        }
        let xi: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        let w = wedge_matrix(self.phi.n(), self.phi.blocks(), &xi);
        let s = rmul(&(w * e0), coords) * C64::new(0.0, 2.0 * PI);
        FourierCL2Field::real_mode(self.phi.n(), trunc, m, self.preimage(&s))
    }

    pub fn run(&self, a1: &FourierCL2Field, order: usize, trunc: u32) -> Result<DeformationSeries> {
        let n = self.phi.n();
        if a1.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a1.n() });
        }
        let needed = order as u32 * a1.max_freq();
        if needed > trunc {
            return Err(Error::TruncationTooSmall { needed, trunc });
        }
        let a1 = FourierCL2Field::clone(a1);
        let phi = FourierForm::constant(&self.phi, trunc);
        let first = a1.act_with(&self.frame, &phi)?;
        let closed = dform(&first).norm();
        if closed > CLOSED_TOL * first.norm().max(1.0) {
            return Err(Error::NotClosed(closed));
        }

        // scaled[i] = a_{i+1}/(i+1)!; y[j][r] = t^r coefficient of a(t)^j Φ / j!
        let mut scaled: Vec<FourierCL2Field> = vec![with_trunc(&a1, trunc)];
        let mut fields = vec![with_trunc(&a1, trunc)];
        let zero = FourierForm::zero_like(&self.phi, trunc);
        let mut y: Vec<Vec<FourierForm>> = vec![vec![phi.clone()], vec![zero.clone(), first]];
        let mut cache: BTreeMap<Freq, FrequencyHodge> = BTreeMap::new();
        let mut obstruction_norms = Vec::new();
        let mut harmonic_norms = Vec::new();
        let (mut e2_residual, mut gauge_residual, mut correction_residual) = (0.0f64, 0.0f64, 0.0f64);

        for k in 2..=order {
            for row in y.iter_mut() {
                row.push(zero.clone());
            }
            y.push(vec![zero.clone(); k + 1]);
            for j in 2..=k {
                let mut acc = zero.clone();
                for i in 1..=k - j + 1 {
                    let prev = &y[j - 1][k - i];
                    if prev.norm() == 0.0 {
                        continue;
                    }
                    acc = acc.add(&scaled[i - 1].act_with(&self.frame, prev)?)?;
                }
                y[j][k] = acc.scale(C64::new(1.0 / j as f64, 0.0));
            }
            let mut rest = zero.clone();
            for j in 2..=k {
                rest = rest.add(&y[j][k])?;
            }
            let ob = dform(&rest);
            let ob_norm = ob.norm();
            obstruction_norms.push(ob_norm);

            let e2 = self.pkg.basis(2);
            for (_, v) in ob.iter() {
                let c = rmul(&e2.transpose(), v);
                let r = (v - rmul(e2, &c)).norm();
                if v.norm() > 0.0 {
                    e2_residual = e2_residual.max(r / v.norm());
                }
            }

            let section = match self.route {
                Route::Subcomplex => {
                    let (section, harmonic) = self.subcomplex_section(&ob, k, &mut cache)?;
                    harmonic_norms.push(harmonic);
                    section
                }
                Route::Spin7 => {
                    // Ob_k = d(rest) is exact; a_k·Φ/k! = (−rest)_−
                    let corrector = self.corrector.as_ref().expect("spin7 route has a corrector");
                    let (minus, report) = corrector.correct(&rest.scale(C64::new(-1.0, 0.0)))?;
                    correction_residual = correction_residual.max(report.d_residual).max(report.asd_residual);
                    harmonic_norms.push(ob.coeff(&vec![0; n]).map(|v| v.norm()).unwrap_or(0.0));
                    minus.scale(C64::new(factorial(k), 0.0))
                }
            };
            let h = *harmonic_norms.last().unwrap();
            if h > OBSTRUCTION_RTOL * ob_norm + OBSTRUCTION_ATOL {
                return Err(Error::Obstructed { order: k, norm: h });
            }

            let mut ak = FourierCL2Field::zero(n, trunc);
            for (m, s) in section.iter() {
                let a = self.preimage(s);
                let iso = rmul(&self.isotropy.transpose(), &a).norm();
                if a.norm() > 0.0 {
                    gauge_residual = gauge_residual.max(iso / a.norm());
                }
                ak.set(m, a)?;
            }
            if !a1.is_real() {
                ak = ak.complexified();
            }
            let sk = ak.scale(C64::new(1.0 / factorial(k), 0.0));
            y[1][k] = sk.act_with(&self.frame, &phi)?;
            scaled.push(sk);
            fields.push(ak);
        }

        let residual_norms = residual_oracle(&self.phi, &fields, trunc)?;
        Ok(DeformationSeries {
            structure: self.phi.clone(),
            order,
            trunc,
            route: self.route,
            fields,
            obstruction_norms,
            harmonic_norms,
            residual_norms,
            e2_residual,
            gauge_residual,
            correction_residual,
        })
    }

    /// `s_k = −k!·d*G Ob_k` per frequency, and `‖Π Ob_k‖`.
    fn subcomplex_section(&self, ob: &FourierForm, k: usize, cache: &mut BTreeMap<Freq, FrequencyHodge>) -> Result<(FourierForm, f64)> {
        let (e1, e2) = (self.pkg.basis(1), self.pkg.basis(2));
        let mut out = FourierForm::zero_like(&self.phi, ob.trunc());
        let mut harmonic = 0.0f64;
        let scale = C64::new(0.0, 2.0 * PI * factorial(k));
        for (m, v) in ob.iter() {
            let h = cache.entry(m.clone()).or_insert_with(|| self.pkg.at(m));
            let c = rmul(&e2.transpose(), v);
            harmonic += rmul(&h.degree(2).harmonic, &c).norm_squared();
            // −k!·(−2πi D₁ᵀ) G₂ c
            let coords = rmul(&(h.differential(1).transpose() * &h.degree(2).green), &c) * scale;
            out.set(m, rmul(e1, &coords))?;
        }
        Ok((out, harmonic.sqrt()))
    }

    /// Residual of `a·Φ = s` for a section, used by tests.
    pub fn action_residual(&self, a: &DVector<C64>, s: &DVector<C64>) -> f64 {
        (rmul(&self.action, a) - s).norm()
    }
}

fn with_trunc(a: &FourierCL2Field, trunc: u32) -> FourierCL2Field {
    let mut out = FourierCL2Field::zero(a.n(), trunc);
    for (m, v) in a.iter() {
        out.set(m, v.clone()).expect("support checked against trunc");
    }
    if !a.is_real() {
        out = out.complexified();
    }
    out
}

/// `‖d c_k‖` for the `t^k` coefficients `c_k` of `e^{a(t)}Φ`, assembled
/// directly from ordered compositions of `k`.
pub fn residual_oracle(phi: &FormTuple, fields: &[FourierCL2Field], trunc: u32) -> Result<Vec<f64>> {
    let order = fields.len();
    let frame = Cl2Frame::new(phi.n());
    let base = FourierForm::constant(phi, trunc);
    let mut out = Vec::with_capacity(order);
    for k in 1..=order {
        let mut ck = FourierForm::zero_like(phi, trunc);
        for parts in compositions(k) {
            let j = parts.len();
            let mut w = base.clone();
            let mut weight = 1.0 / factorial(j);
            for &i in parts.iter().rev() {
                w = fields[i - 1].act_with(&frame, &w)?;
                weight /= factorial(i);
            }
            ck = ck.add(&w.scale(C64::new(weight, 0.0)))?;
        }
        out.push(dform(&ck).norm());
    }
    Ok(out)
}

fn compositions(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 1..=k {
        for mut rest in compositions(k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Subcomplex-route deformation of a constant structure.
pub fn deform(phi: &FormTuple, a1: &FourierCL2Field, order: usize, trunc: u32) -> Result<DeformationSeries> {
    Deformer::new(phi)?.run(a1, order, trunc)
}

/// Frequencies carried by a series, for reporting.
pub fn support(series: &DeformationSeries) -> Vec<Freq> {
    let mut all: Vec<Freq> = series.fields.iter().flat_map(|f| f.iter().map(|(m, _)| m.clone())).collect();
    all.sort();
    all.dedup();
    all.retain(|m| linf(m) <= series.trunc);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::make_sl;
    use crate::torus::fourier::tests::random_vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn composition_count() {
        assert_eq!(compositions(4).len(), 8);
        assert!(compositions(3).contains(&vec![1, 2]));
    }

    #[test]
    fn zero_and_constant_fields() {
        let phi = make_sl(2);
        let d = Deformer::new(&phi).unwrap();
        let s = d.run(&FourierCL2Field::zero(4, 4), 4, 4).unwrap();
        assert!(s.fields.iter().all(|f| f.norm() == 0.0));
        assert!(s.residual_norms.iter().all(|&r| r == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c = crate::clifford::tests::random_cl2(&mut rng, 4, 0.3);
        let s = d.run(&FourierCL2Field::constant(&c, 4), 4, 4).unwrap();
        assert!(s.obstruction_norms.iter().all(|&o| o == 0.0));
        assert!(s.fields[1..].iter().all(|f| f.norm() == 0.0));
    }

    #[test]
    fn sl2_single_mode() {
        let phi = make_sl(2);
        let d = Deformer::new(&phi).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let e0 = random_vec(&mut rng, d.package().rank(0)).map(|z| z * 0.05);
        let a1 = d.exact_mode(&[1, 0, 1, 0], &e0, 6).unwrap();
        let s = d.run(&a1, 4, 6).unwrap();
        assert!(s.obstruction_norms[0] > 1e-6, "{:?}", s.obstruction_norms);
        assert!(s.relative_harmonic_norms().iter().all(|&h| h < 1e-9));
        assert!(s.max_residual() < 1e-8, "{:?}", s.residual_norms);
        assert!(s.e2_residual < 1e-9 && s.gauge_residual < 1e-9);
        let again = d.run(&a1, 4, 6).unwrap();
        assert_eq!(again.fields, s.fields);
    }

    #[test]
    fn spin7_two_coordinate_mode() {
        let spec = StructureSpec::new(Kind::Spin7, 0);
        let d = Deformer::for_spec(&spec).unwrap();
        assert_eq!(d.route(), Route::Spin7);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let e0 = random_vec(&mut rng, d.package().rank(0)).map(|z| z * 0.02);
        let a1 = d.exact_mode(&[1, 0, 0, 0, 0, -1, 0, 0], &e0, 4).unwrap();
        let s = d.run(&a1, 3, 4).unwrap();
        assert!(s.obstruction_norms.iter().all(|&o| o > 0.0));
        assert!(s.max_residual() < 1e-8, "{:?}", s.residual_norms);
        assert!(s.correction_residual < 1e-9 && s.gauge_residual < 1e-9, "{} {}", s.correction_residual, s.gauge_residual);
    }

    #[test]
    fn preconditions() {
        let phi = make_sl(2);
        let d = Deformer::new(&phi).unwrap();
        let e0 = DVector::from_element(d.package().rank(0), C64::new(0.1, 0.0));
        let a1 = d.exact_mode(&[1, 1, 0, 0], &e0, 2).unwrap();
        assert!(matches!(d.run(&a1, 3, 2), Err(Error::TruncationTooSmall { needed: 3, trunc: 2 })));
        let mut bad = FourierCL2Field::zero(4, 2);
        bad.set(&[1, 0, 0, 0], DVector::from_element(crate::clifford::cl2_dim(4), C64::new(0.1, 0.0))).unwrap();
        assert!(matches!(d.run(&bad, 2, 2), Err(Error::NotClosed(_))));
    }
}
