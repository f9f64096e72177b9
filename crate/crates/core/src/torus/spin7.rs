//! Anti-self-dual correction of an even form on `T⁸`.
//!
//! `α_− = (1 − *)(d*dGα)` with `G` the Green operator of the flat de Rham
//! Laplacian. Since `d*dG = i_m m∧/|m|²` at frequency `m`, `dα_− = dα` away
//! from the constants and `*α_− = −α_−` because `*² = 1`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fourier::{dform, FourierForm};
use super::hodge::{interior_matrix, rmul, wedge_matrix};
use crate::error::{Error, Result};
use crate::linalg::{C64, SubspaceBasis};
use crate::orbit::{fiber_complex, generalized_metric};
use crate::structures::{Kind, StructureSpec};

#[derive(Clone, Debug, Serialize)]
pub struct CorrectionReport {
    /// `‖dα_− − dα‖ / ‖dα‖`.
    pub d_residual: f64,
    /// `‖*α_− + α_−‖ / ‖α_−‖`.
    pub asd_residual: f64,
    /// Largest relative distance of a coefficient of `α_−` from `E¹`.
    pub e1_residual: f64,
}

#[derive(Clone, Debug)]
pub struct Spin7Corrector {
    star: DMatrix<f64>,
    e1: SubspaceBasis<f64>,
}

impl Spin7Corrector {
    pub fn new(spec: &StructureSpec) -> Result<Self> {
        if spec.kind != Kind::Spin7 {
            return Err(Error::InvalidStructure("the correction needs a Spin(7) structure".into()));
        }
        let star = generalized_metric(spec)?.star;
        let phi = spec.build()?;
        let e1 = fiber_complex(&phi, 2)?.space(1).clone();
        Ok(Spin7Corrector { star, e1 })
    }

    pub fn star(&self) -> &DMatrix<f64> {
        &self.star
    }

    /// `α_−` for an even form `α`; constants map to zero.
    pub fn correct(&self, alpha: &FourierForm) -> Result<(FourierForm, CorrectionReport)> {
        if alpha.dim() != self.star.nrows() {
            return Err(Error::DimensionMismatch { expected: self.star.nrows(), found: alpha.dim() });
        }
        let n = alpha.n();
        let star = &self.star;
        let out = alpha.map_coeffs(|m, v| {
            let norm2: i64 = m.iter().map(|&x| (x as i64) * (x as i64)).sum();
            if norm2 == 0 {
                return DVector::zeros(v.len());
            }
            let xi: alloc::vec::Vec<f64> = m.iter().map(|&x| x as f64).collect();
            let w = wedge_matrix(n, 1, &xi);
            let i = interior_matrix(n, 1, &xi);
            let beta = rmul(&(i * w), v) / C64::new(norm2 as f64, 0.0);
            &beta - rmul(star, &beta)
        });
        let da = dform(alpha);
        let diff = dform(&out).sub(&da)?.norm();
        let d_residual = if da.norm() > 0.0 { diff / da.norm() } else { diff };
        let starred = out.map_coeffs(|_, v| rmul(star, v));
        let asd = starred.add(&out)?.norm();
        let asd_residual = if out.norm() > 0.0 { asd / out.norm() } else { asd };
        let mut e1_residual = 0.0f64;
        for (_, v) in out.iter() {
            let nv = v.norm();
            if nv == 0.0 {
                continue;
            }
            let re = self.e1.residual(&v.map(|z| z.re));
            let im = self.e1.residual(&v.map(|z| z.im));
            e1_residual = e1_residual.max((re * re + im * im).sqrt() / nv);
        }
        Ok((out, CorrectionReport { d_residual, asd_residual, e1_residual }))
    }
}

/// Convenience wrapper on the model structure or a transformed one.
pub fn spin7_correction(alpha: &FourierForm, spec: &StructureSpec) -> Result<(FourierForm, CorrectionReport)> {
    Spin7Corrector::new(spec)?.correct(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multivector::{FormTuple, Multivector};
    use crate::torus::fourier::tests::random_vec;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn even(v: DVector<C64>) -> DVector<C64> {
        DVector::from_fn(v.len(), |i, _| if i.count_ones() % 2 == 0 { v[i] } else { C64::new(0.0, 0.0) })
    }

    #[test]
    fn constants_and_single_modes() {
        let spec = StructureSpec::new(Kind::Spin7, 0);
        let c = Spin7Corrector::new(&spec).unwrap();
        let t = FormTuple::real(vec![Multivector::zero(8)]);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = FourierForm::real_mode(&t, 1, &[0; 8], even(random_vec(&mut rng, 256))).unwrap();
        let (out, _) = c.correct(&k).unwrap();
        assert_eq!(out.norm(), 0.0);
        assert_eq!(dform(&k).norm(), 0.0);
        for m in [[1, 0, 0, 0, 0, 0, 0, 0], [1, -1, 0, 0, 0, 0, 0, 0], [0, 2, 1, 0, 0, 0, 0, 1]] {
            let a = FourierForm::real_mode(&t, 2, &m, even(random_vec(&mut rng, 256))).unwrap();
            let (out, r) = c.correct(&a).unwrap();
            assert!(r.d_residual < 1e-9 && r.asd_residual < 1e-10 && r.e1_residual < 1e-9, "{r:?}");
            assert!(out.norm() > 0.0);
        }
    }
}
