//! Clifford-Lie operators of sections of `T ⊕ T*`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use super::fourier::{dform, FourierCL1Field, FourierForm};
use crate::error::Result;
use crate::linalg::C64;

/// `L_E = d∘E + E∘d`.
pub fn lie_derivative(e: &FourierCL1Field, w: &FourierForm) -> Result<FourierForm> {
    dform(&e.act(w)?).add(&e.act(&dform(w))?)
}

/// `[L_E, F]ω = L_E(Fω) − F(L_E ω)`.
pub fn bracket_operator(e: &FourierCL1Field, f: &FourierCL1Field, w: &FourierForm) -> Result<FourierForm> {
    lie_derivative(e, &f.act(w)?)?.sub(&f.act(&lie_derivative(e, w)?)?)
}

/// `[v,w] + L_vζ − i_w dη` for `E = v + η`, `F = w + ζ`, mode by mode.
pub fn dorfman_bracket(e: &FourierCL1Field, f: &FourierCL1Field) -> Result<FourierCL1Field> {
    let n = e.n();
    let mut out = FourierCL1Field::zero(n, e.trunc() + f.trunc());
    let dot = |a: &[C64], b: &[f64]| -> C64 { a.iter().zip(b).map(|(x, &y)| x * y).sum() };
    let cdot = |a: &[C64], b: &[C64]| -> C64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let two_pi_i = C64::new(0.0, 2.0 * PI);
    for (p, x) in e.iter() {
        let (v, eta) = (&x.as_slice()[..n], &x.as_slice()[n..]);
        let pf: Vec<f64> = p.iter().map(|&t| t as f64).collect();
        for (q, y) in f.iter() {
            let (w, zeta) = (&y.as_slice()[..n], &y.as_slice()[n..]);
            let qf: Vec<f64> = q.iter().map(|&t| t as f64).collect();
            let (vq, wp) = (dot(v, &qf), dot(w, &pf));
            let (zv, we) = (cdot(zeta, v), cdot(w, eta));
            let mut g = DVector::zeros(2 * n);
            for k in 0..n {
                g[k] = two_pi_i * (vq * w[k] - wp * v[k]);
                g[n + k] = two_pi_i * (vq * zeta[k] + zv * pf[k] - wp * eta[k] + we * pf[k]);
            }
            let m: Vec<i32> = p.iter().zip(q).map(|(a, b)| a + b).collect();
            out.accumulate(m, &g)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    /// `max ‖[L_E, F]ω − Gω‖ / ‖ω‖` over the probes, `G` recovered from constants.
    pub operator_residual: f64,
    /// `‖G − (E∘F)‖ / ‖E∘F‖` against the Dorfman bracket.
    pub formula_residual: f64,
    pub recovered_norm: f64,
}

/// Recover `G` with `[L_E, F] = G` from the constant forms `1, e¹, .., eⁿ`
/// and test the identity on `probes`.
pub fn bracket_check(e: &FourierCL1Field, f: &FourierCL1Field, probes: &[FourierForm]) -> Result<(FourierCL1Field, BracketReport)> {
    let n = e.n();
    let trunc = e.trunc() + f.trunc() + probes.iter().map(|p| p.trunc()).max().unwrap_or(0);
    let zero = vec![0; n];
    let unit = |mask: usize| -> Result<FourierForm> {
        let mut w = FourierForm::zero(n, trunc);
        let mut c = DVector::zeros(1 << n);
        c[mask] = C64::new(1.0, 0.0);
        w.set(&zero, c)?;
        Ok(w)
    };
    let mut g = FourierCL1Field::zero(n, e.trunc() + f.trunc());
    let image = bracket_operator(e, f, &unit(0)?)?;
    for (m, c) in image.iter() {
        let mut v = DVector::zeros(2 * n);
        for k in 0..n {
            v[n + k] = c[1 << k];
        }
        g.accumulate(m.clone(), &v)?;
    }
    for k in 0..n {
        let image = bracket_operator(e, f, &unit(1 << k)?)?;
        for (m, c) in image.iter() {
            let mut v = DVector::zeros(2 * n);
            v[k] = c[0];
            g.accumulate(m.clone(), &v)?;
        }
    }
    let mut operator_residual = 0.0f64;
    for p in probes {
        let p = p.clone().with_trunc(trunc)?;
        let r = bracket_operator(e, f, &p)?.sub(&g.act(&p)?)?.norm();
        operator_residual = operator_residual.max(r / p.norm());
    }
    let formula = dorfman_bracket(e, f)?;
    let scale = formula.norm().max(f64::MIN_POSITIVE);
    let formula_residual = g.sub(&formula)?.norm() / scale;
    let recovered_norm = g.norm();
    Ok((g, BracketReport { operator_residual, formula_residual, recovered_norm }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multivector::{FormTuple, Multivector};
    use crate::torus::fourier::tests::{random_form, random_vec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(n: usize, m: &[i32], c: DVector<C64>) -> FourierCL1Field {
        let mut f = FourierCL1Field::zero(n, 2);
        f.set(m, c).unwrap();
        f
    }

    #[test]
    fn constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let t = FormTuple::real(vec![Multivector::zero(3)]);
        let w = FourierForm::constant(&FormTuple::real(vec![Multivector::from_real(3, &[1.0, 0.5, -0.2, 0.3, 0.7, 0.0, 1.0, 2.0]).unwrap()]), 2);
        let mut c = random_vec(&mut rng, 6);
        for k in 3..6 {
            c[k] = C64::new(0.0, 0.0);
        }
        let v = single(3, &[0, 0, 0], c.clone());
        assert_eq!(lie_derivative(&v, &w).unwrap().norm(), 0.0);
        let mut eta = c.clone();
        for k in 0..3 {
            eta.swap_rows(k, k + 3);
        }
        let eta = single(3, &[0, 0, 0], eta);
        assert_eq!(lie_derivative(&eta, &w).unwrap().norm(), 0.0);
        let probes = [random_form(&mut rng, &t, 1, 1, 2)];
        let (g, r) = bracket_check(&v, &single(3, &[0, 0, 0], c), &probes).unwrap();
        assert!(g.norm() < 1e-14 && r.operator_residual < 1e-12);
    }

    #[test]
    fn single_modes_follow_dorfman() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let t = FormTuple::real(vec![Multivector::zero(3)]);
        let e = single(3, &[1, 0, -1], random_vec(&mut rng, 6));
        let f = single(3, &[0, 1, 1], random_vec(&mut rng, 6));
        let probes: Vec<FourierForm> = (0..3).map(|_| random_form(&mut rng, &t, 1, 1, 2)).collect();
        let (_, r) = bracket_check(&e, &f, &probes).unwrap();
        assert!(r.operator_residual < 1e-10, "{r:?}");
        assert!(r.formula_residual < 1e-12, "{r:?}");
        assert!(r.recovered_norm > 1.0);
    }
}
