//! Cohomology classes on the torus: the constant part of a closed form.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::deform::{DeformationSeries, Deformer};
use super::fourier::{dform, FourierCL2Field, FourierForm};
use crate::error::{Error, Result};
use crate::linalg::{rank, C64, RANK_RTOL};
use crate::multivector::FormTuple;

/// Closedness tolerance, relative to `max(1, ‖ω‖)`.
pub const PERIOD_CLOSED_TOL: f64 = 1e-11;

/// `[ω] ∈ H*(Tⁿ)` represented by the frequency-0 coefficient.
pub fn period(w: &FourierForm) -> Result<FormTuple> {
    let r = dform(w).norm();
    if r > PERIOD_CLOSED_TOL * w.norm().max(1.0) {
        return Err(Error::NotClosed(r));
    }
    w.mean()
}

/// Derivative of the period along the series: the constant part of `a₁·Φ`.
pub fn period_derivative(series: &DeformationSeries) -> Result<FormTuple> {
    let a1 = series.fields.first().ok_or(Error::InvalidStructure("empty series".into()))?;
    let phi = FourierForm::constant(&series.structure, series.trunc);
    a1.act(&phi)?.mean()
}

#[derive(Clone, Debug, Serialize)]
pub struct TorelliReport {
    pub e1_dim: usize,
    pub rank: usize,
    pub pass: bool,
}

/// Rank of the period derivative over constant `a₁` whose `a₁·Φ` run through
/// a basis of `E¹`.
pub fn torelli_rank(deformer: &Deformer) -> Result<TorelliReport> {
    let e1 = deformer.package().basis(1);
    let n = deformer.structure().n();
    let zero: Vec<i32> = alloc::vec![0; n];
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(e1.ncols());
    for col in e1.column_iter() {
        let s: DVector<C64> = col.map(|x| C64::new(x, 0.0));
        let a = deformer.preimage(&s).map(|z| C64::new(z.re, 0.0));
        let mut f = FourierCL2Field::zero(n, 0);
        f.set(&zero, a)?;
        let series = deformer.run(&f, 1, 0)?;
        cols.push(period_derivative(&series)?.real_view());
    }
    let m = if cols.is_empty() { DMatrix::zeros(e1.nrows(), 0) } else { DMatrix::from_columns(&cols) };
    let r = rank(&m, RANK_RTOL);
    Ok(TorelliReport { e1_dim: e1.ncols(), rank: r, pass: r == e1.ncols() })
}

#[derive(Clone, Debug, Serialize)]
pub struct InvarianceReport {
    pub samples: usize,
    /// Largest `‖period(e^{dγ}∧Φ) − period(Φ)‖`.
    pub max_defect: f64,
    pub pass: bool,
}

/// `period(e^{dγ}∧Φ) = period(Φ)` for random single-mode real 1-forms `γ`.
pub fn period_invariance<R: rand::Rng>(phi: &FormTuple, samples: usize, max_freq: i32, rng: &mut R) -> Result<InvarianceReport> {
    let n = phi.n();
    let trunc = 4 * max_freq as u32;
    let base = FourierForm::constant(phi, trunc);
    let p0 = period(&base)?.real_view();
    let scalar = FormTuple::real(alloc::vec![crate::multivector::Multivector::zero(n)]);
    let mut max_defect = 0.0f64;
    for _ in 0..samples {
        let m: Vec<i32> = loop {
            let m: Vec<i32> = (0..n).map(|_| rng.random_range(-max_freq..=max_freq)).collect();
            if m.iter().any(|&x| x != 0) {
                break m;
            }
        };
        let mut c = DVector::zeros(1 << n);
        for k in 0..n {
            c[1 << k] = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let gamma = FourierForm::real_mode(&scalar, trunc, &m, c)?;
        let moved = super::fourier::wedge(&super::fourier::exp_wedge(&dform(&gamma))?, &base)?;
        let p = period(&moved)?.real_view();
        max_defect = max_defect.max((p - &p0).norm());
    }
    Ok(InvarianceReport { samples, max_defect, pass: max_defect <= PERIOD_CLOSED_TOL })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{make_sl, make_spin7};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_period_is_itself() {
        let phi = make_sl(2);
        let p = period(&FourierForm::constant(&phi, 2)).unwrap();
        assert_eq!(p.real_view(), phi.real_view());
    }

    #[test]
    fn non_closed_rejected() {
        let t = FormTuple::real(alloc::vec![crate::multivector::Multivector::zero(2)]);
        let mut c = DVector::zeros(4);
        c[0] = C64::new(1.0, 0.0);
        let f = FourierForm::real_mode(&t, 1, &[1, 0], c).unwrap();
        assert!(matches!(period(&f), Err(Error::NotClosed(_))));
    }

    #[test]
    fn invariance_under_exact_b_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = period_invariance(&make_sl(2), 20, 2, &mut rng).unwrap();
        assert!(r.pass, "{r:?}");
        let r = period_invariance(&make_spin7(), 5, 1, &mut rng).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn local_torelli_on_sl2() {
        let d = Deformer::new(&make_sl(2)).unwrap();
        let r = torelli_rank(&d).unwrap();
        assert_eq!(r.e1_dim, 14);
        assert!(r.pass);
    }
}
