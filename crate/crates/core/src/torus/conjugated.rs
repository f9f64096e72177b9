//! `exp(Ad_a)d = d + [d,a] + ½[[d,a],a] + ⋯` as an operator on Fourier forms.

use alloc::vec::Vec;

use serde::Serialize;

use super::fourier::{dform, FourierCL2Field, FourierForm};
use crate::clifford::Cl2Frame;
use crate::error::Result;
use crate::linalg::{expm, C64};

pub const SERIES_TOL: f64 = 1e-13;
pub const MAX_TERMS: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct SeriesInfo {
    pub terms: usize,
    pub last_term_norm: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SeriesOutput {
    pub form: FourierForm,
    pub info: SeriesInfo,
}

fn done(term: f64, sum: f64) -> bool {
    term == 0.0 || term <= SERIES_TOL * sum
}

/// `e^a·w = Σ aᵏw/k!`, summed until the terms decay.
pub fn exp_act(a: &FourierCL2Field, w: &FourierForm) -> Result<SeriesOutput> {
    let frame = Cl2Frame::new(a.n());
    let mut sum = w.clone();
    let mut term = w.clone();
    for k in 1..=MAX_TERMS {
        term = a.act_with(&frame, &term)?.scale(C64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term)?;
        let t = term.norm();
        if done(t, sum.norm()) {
            return Ok(SeriesOutput { form: sum, info: SeriesInfo { terms: k, last_term_norm: t, converged: true } });
        }
    }
    let t = term.norm();
    Ok(SeriesOutput { form: sum, info: SeriesInfo { terms: MAX_TERMS, last_term_norm: t, converged: false } })
}

/// The conjugated differential `e^{−a}∘d∘e^{a}` written as the series
/// `Σ_k (1/k!) ad^k`, with `[L, a] = L∘a − a∘L`.
#[derive(Clone, Debug)]
pub struct ConjugatedD {
    a: FourierCL2Field,
    frame: Cl2Frame,
}

impl ConjugatedD {
    pub fn new(a: FourierCL2Field) -> Self {
        let frame = Cl2Frame::new(a.n());
        ConjugatedD { a, frame }
    }

    /// The `k`-th term is `Σ_{i+j=k} ((−a)^j/j!) d (a^i/i!) w`; each
    /// `d(a^i w/i!)` is pushed through one more `−a/j` per step.
    pub fn apply(&self, w: &FourierForm) -> Result<SeriesOutput> {
        let minus = self.a.scale(C64::new(-1.0, 0.0));
        let mut power = w.clone();
        let mut pending: Vec<FourierForm> = Vec::new();
        let mut sum = dform(w);
        pending.push(sum.clone());
        let mut last = sum.norm();
        for k in 1..=MAX_TERMS {
            for (i, p) in pending.iter_mut().enumerate() {
                let j = (k - i) as f64;
                *p = minus.act_with(&self.frame, p)?.scale(C64::new(1.0 / j, 0.0));
            }
            power = self.a.act_with(&self.frame, &power)?.scale(C64::new(1.0 / k as f64, 0.0));
            pending.push(dform(&power));
            let mut term = pending[0].clone();
            for p in &pending[1..] {
                term = term.add(p)?;
            }
            sum = sum.add(&term)?;
            last = term.norm();
            if done(last, sum.norm()) {
                return Ok(SeriesOutput { form: sum, info: SeriesInfo { terms: k, last_term_norm: last, converged: true } });
            }
        }
        Ok(SeriesOutput { form: sum, info: SeriesInfo { terms: MAX_TERMS, last_term_norm: last, converged: false } })
    }
}

/// `e^{c}` on every block for a constant complexified `CL²` element.
pub fn exp_constant(c: &[C64], w: &FourierForm) -> FourierForm {
    let frame = Cl2Frame::new(w.n());
    let m = expm(&frame.complex_matrix(c));
    let d = 1usize << w.n();
    w.map_coeffs(|_, v| {
        let mut out = v.clone();
        for (src, dst) in v.as_slice().chunks(d).zip(out.as_mut_slice().chunks_mut(d)) {
            let y = &m * nalgebra::DVector::from_column_slice(src);
            dst.copy_from_slice(y.as_slice());
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::clifford::cl2_dim;
    use crate::torus::fourier::{exp_wedge, wedge};
    use crate::multivector::{FormTuple, Multivector};
    use crate::torus::fourier::tests::{random_form, random_vec};
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn template() -> FormTuple {
        FormTuple::real(vec![Multivector::zero(4)])
    }

    #[test]
    fn zero_field_gives_d() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_form(&mut rng, &template(), 2, 2, 3);
        let out = ConjugatedD::new(FourierCL2Field::zero(4, 2)).apply(&w).unwrap();
        assert_eq!(out.form, dform(&w));
        assert!(out.info.converged);
    }

    #[test]
    fn b_field_series_terminates() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut c = DVector::zeros(16);
        c[0b0011] = C64::new(0.3, 0.1);
        c[0b1100] = C64::new(-0.2, 0.05);
        c[0b0110] = C64::new(0.1, 0.0);
        let bf = FourierForm::real_mode(&template(), 4, &[1, 0, 1, 0], c).unwrap();
        let a = FourierCL2Field::from_two_form_field(&bf).unwrap();
        let w = random_form(&mut rng, &template(), 4, 1, 3);
        let out = ConjugatedD::new(a).apply(&w).unwrap();
        assert!(out.info.converged && out.info.terms <= 4, "{:?}", out.info);
        let plus = exp_wedge(&bf).unwrap();
        let minus = exp_wedge(&bf.scale(C64::new(-1.0, 0.0))).unwrap();
        let oracle = wedge(&minus, &dform(&wedge(&plus, &w).unwrap())).unwrap();
        assert!(oracle.sub(&out.form).unwrap().norm() < 1e-10 * oracle.norm());
    }

    #[test]
    fn constant_field_matches_matrix_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let c = random_vec(&mut rng, cl2_dim(4)).map(|z| z * 0.15);
        let mut a = FourierCL2Field::zero(4, 2);
        a.set(&[0, 0, 0, 0], c.clone()).unwrap();
        let a = a.complexified();
        let w = random_form(&mut rng, &template(), 2, 2, 3);
        let out = ConjugatedD::new(a).apply(&w).unwrap();
        assert!(out.info.converged);
        let minus: Vec<C64> = c.iter().map(|z| -z).collect();
        let oracle = exp_constant(&minus, &dform(&exp_constant(c.as_slice(), &w)));
        assert!(oracle.sub(&out.form).unwrap().norm() < 1e-10 * oracle.norm());
    }

    #[test]
    fn commutator_on_constant_structure() {
        let phi = crate::structures::make_spin7();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = crate::clifford::tests::random_cl2(&mut rng, 8, 0.3);
        let w = FourierForm::constant(&phi, 0);
        let a = FourierCL2Field::constant(&a, 0);
        let out = ConjugatedD::new(a.clone()).apply(&w).unwrap();
        assert_eq!(out.form.norm(), 0.0);
        assert_eq!(dform(&a.act(&w).unwrap()).norm(), 0.0);
    }

    #[test]
    fn exp_act_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = random_vec(&mut rng, cl2_dim(3)).map(|z| z * 0.3);
        let mut a = FourierCL2Field::zero(3, 1);
        a.set(&[0, 0, 0], c.clone()).unwrap();
        let w = random_form(&mut rng, &FormTuple::real(vec![Multivector::zero(3)]), 1, 1, 2);
        let out = exp_act(&a.complexified(), &w).unwrap();
        assert!(exp_constant(c.as_slice(), &w).sub(&out.form).unwrap().norm() < 1e-12 * w.norm());
    }
}
