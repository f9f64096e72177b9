//! Spin representation of `CL(V⊕V*)` on tuples of forms, b- and β-field
//! transforms, and the lift of `GL⁺(V)`.

use nalgebra::{DMatrix, DVector};

use crate::clifford::{CliffordElement, Cl2Element, SplitPairing};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::multivector::{FormTuple, Multivector};

/// Applies a real spin matrix to each component of a tuple.
pub fn act_matrix(m: &DMatrix<f64>, phi: &FormTuple) -> Result<FormTuple> {
    let d = 1usize << phi.n();
    if m.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: d, found: m.nrows() });
    }
    phi.try_map(|c| {
        let v = DVector::from_column_slice(c.coeffs());
        let out = m.map(|x| C64::new(x, 0.0)) * v;
        Multivector::from_coeffs(c.n(), out.as_slice().to_vec())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpinAction {
    pairing: SplitPairing,
}

impl SpinAction {
    pub fn new(n: usize) -> Self {
        SpinAction { pairing: SplitPairing::new(n) }
    }

    pub fn pairing(&self) -> &SplitPairing {
        &self.pairing
    }

    fn check(&self, n: usize) -> Result<()> {
        if n != self.pairing.n() {
            return Err(Error::DimensionMismatch { expected: self.pairing.n(), found: n });
        }
        Ok(())
    }

    pub fn act(&self, a: &CliffordElement, phi: &FormTuple) -> Result<FormTuple> {
        self.check(a.n())?;
        self.check(phi.n())?;
        act_matrix(a.matrix(), phi)
    }

    /// `(v + η)·φ = i_v φ + η ∧ φ`, computed directly on forms.
    pub fn act_vector(&self, e: &[f64], phi: &FormTuple) -> Result<FormTuple> {
        let n = self.pairing.n();
        self.check(phi.n())?;
        if e.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: e.len() });
        }
        let v: alloc::vec::Vec<C64> = e[..n].iter().map(|&x| C64::new(x, 0.0)).collect();
        let eta: alloc::vec::Vec<C64> = e[n..].iter().map(|&x| C64::new(x, 0.0)).collect();
        phi.try_map(|c| Ok(&c.interior(&v)? + &c.wedge_covector(&eta)?))
    }

    pub fn act_cl2(&self, a: &Cl2Element, phi: &FormTuple) -> Result<FormTuple> {
        self.check(a.n())?;
        self.act(&a.to_clifford(), phi)
    }
}

/// Lift of `g ∈ GL⁺(V)`: `(det g)^{1/2}` times the pullback by `g⁻¹`.
pub fn gl_lift_action(g: &DMatrix<f64>, phi: &FormTuple) -> Result<FormTuple> {
    let n = phi.n();
    if g.shape() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, found: g.nrows() });
    }
    let det = g.determinant();
    if det <= 0.0 {
        return Err(Error::NonPositiveDeterminant(det));
    }
    let inv = g.clone().try_inverse().ok_or(Error::Singular)?;
    let s = det.sqrt();
    phi.try_map(|c| Ok(&c.pullback(&inv)? * s))
}

/// `e^b ∧ φ` by the terminating series.
pub fn b_transform(b: &Multivector, phi: &FormTuple) -> Result<FormTuple> {
    let n = phi.n();
    let b = b.grade_part(2);
    let mut exp = Multivector::scalar(n, 1.0);
    let mut term = Multivector::scalar(n, 1.0);
    for k in 1..=n / 2 {
        term = &term.wedge(&b)? * (1.0 / k as f64);
        exp += &term;
    }
    phi.try_map(|c| exp.wedge(c))
}

/// `i_β φ = Σ_{i<j} β_ij i_{vᵢ} i_{vⱼ} φ`.
pub fn interior_two_vector(beta: &DMatrix<f64>, phi: &Multivector) -> Result<Multivector> {
    let n = phi.n();
    if beta.shape() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, found: beta.nrows() });
    }
    let mut out = Multivector::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            let c = beta[(i, j)];
            if c == 0.0 {
                continue;
            }
            let mut vi = alloc::vec![C64::new(0.0, 0.0); n];
            let mut vj = vi.clone();
            vi[i] = C64::new(1.0, 0.0);
            vj[j] = C64::new(1.0, 0.0);
            out += &(&phi.interior(&vj)?.interior(&vi)? * c);
        }
    }
    Ok(out)
}

/// `e^β·φ = Σ_k (i_β)^k φ / k!`.
pub fn beta_transform(beta: &DMatrix<f64>, phi: &FormTuple) -> Result<FormTuple> {
    let n = phi.n();
    phi.try_map(|c| {
        let mut acc = c.clone();
        let mut term = c.clone();
        for k in 1..=n / 2 {
            term = &interior_two_vector(beta, &term)? * (1.0 / k as f64);
            acc += &term;
        }
        Ok(acc)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::tests::{random_cl2, random_vector};
    use crate::clifford::{exp_cl2, vector_matrix};
    use crate::linalg::expm;
    use alloc::vec::Vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tuple(rng: &mut ChaCha8Rng, n: usize) -> FormTuple {
        let c: Vec<C64> = (0..1 << n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        FormTuple::complex(alloc::vec![Multivector::from_coeffs(n, c).unwrap()])
    }

    #[test]
    fn vector_on_scalar_gives_covector() {
        let n = 3;
        let s = SpinAction::new(n);
        let one = FormTuple::real(alloc::vec![Multivector::scalar(n, 1.0)]);
        let e = [1.0, -2.0, 0.5, 0.3, 0.0, -1.0];
        let out = s.act_vector(&e, &one).unwrap();
        let expect = Multivector::from_terms(n, &[(&[1], 0.3), (&[3], -1.0)]);
        assert_eq!(out.components[0], expect);
    }

    #[test]
    fn square_is_norm_and_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 4;
        let s = SpinAction::new(n);
        for _ in 0..10 {
            let e = random_vector(&mut rng, n);
            let phi = random_tuple(&mut rng, n);
            let once = s.act_vector(&e, &phi).unwrap();
            let twice = s.act_vector(&e, &once).unwrap();
            let norm2 = s.pairing().pair(&e, &e);
            let expect = phi.map(|c| c * norm2);
            assert!(twice.distance(&expect) < 1e-12);
            let via_matrix = act_matrix(&vector_matrix(n, &e), &phi).unwrap();
            assert!(via_matrix.distance(&once) < 1e-12);
        }
    }

    #[test]
    fn action_is_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 3;
        let s = SpinAction::new(n);
        let a = random_cl2(&mut rng, n, 1.0).to_clifford();
        let b = CliffordElement::vector(n, &random_vector(&mut rng, n));
        let phi = random_tuple(&mut rng, n);
        let lhs = s.act(&a.product(&b).unwrap(), &phi).unwrap();
        let rhs = s.act(&a, &s.act(&b, &phi).unwrap()).unwrap();
        assert!(lhs.distance(&rhs) < 1e-11);
    }

    #[test]
    fn gl_lift_identity_and_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 4;
        let phi = random_tuple(&mut rng, n);
        assert!(gl_lift_action(&DMatrix::identity(n, n), &phi).unwrap().distance(&phi) < 1e-14);
        assert!(matches!(
            gl_lift_action(&DMatrix::from_diagonal(&DVector::from_vec(alloc::vec![-1.0, 1.0, 1.0, 1.0])), &phi),
            Err(Error::NonPositiveDeterminant(_))
        ));
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let h = 1e-5;
        let plus = gl_lift_action(&expm(&(&a * h)), &phi).unwrap();
        let minus = gl_lift_action(&expm(&(&a * -h)), &phi).unwrap();
        let fd = FormTuple::complex(
            plus.components.iter().zip(&minus.components).map(|(p, m)| &(p - m) * (0.5 / h)).collect(),
        );
        let tau = SpinAction::new(n).act_cl2(&Cl2Element::from_endo(a), &phi).unwrap();
        assert!(fd.distance(&tau) < 1e-8, "{}", fd.distance(&tau));
    }

    #[test]
    fn b_and_beta_transforms_match_exponentials() {
        let n = 4;
        let s = SpinAction::new(n);
        let b = Multivector::from_terms(n, &[(&[1, 2], 0.4), (&[3, 4], 1.5), (&[2, 4], -0.7)]);
        let one = FormTuple::real(alloc::vec![Multivector::scalar(n, 1.0)]);
        let tb = b_transform(&b, &one).unwrap();
        let expect = &(&Multivector::scalar(n, 1.0) + &b) + &(&b.wedge(&b).unwrap() * 0.5);
        assert!((&tb.components[0] - &expect).norm() < 1e-14);
        let via_exp = s.act(&exp_cl2(&Cl2Element::from_two_form(b.clone())), &one).unwrap();
        assert!(via_exp.distance(&tb) < 1e-12);
        assert_eq!(b_transform(&Multivector::zero(n), &one).unwrap(), one);

        let mut beta = DMatrix::zeros(n, n);
        beta[(0, 1)] = 0.5;
        beta[(1, 0)] = -0.5;
        beta[(2, 3)] = 2.0;
        beta[(3, 2)] = -2.0;
        let vol = FormTuple::real(alloc::vec![Multivector::volume(n)]);
        let tv = beta_transform(&beta, &vol).unwrap();
        let via_exp = s.act(&exp_cl2(&Cl2Element::from_two_vector(beta.clone())), &vol).unwrap();
        assert!(via_exp.distance(&tv) < 1e-12);
        let first = interior_two_vector(&beta, &vol.components[0]).unwrap();
        assert!((&tv.components[0].grade_part(2) - &first).norm() < 1e-14);
        assert_eq!(tv.components[0].grade_part(4), Multivector::volume(n));
    }

    #[test]
    fn parity_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let n = 3;
        let s = SpinAction::new(n);
        let a = random_cl2(&mut rng, n, 0.5);
        let even = FormTuple::real(alloc::vec![Multivector::from_terms(n, &[(&[], 1.0), (&[1, 2], 2.0)])]);
        let out = s.act_cl2(&a, &even).unwrap();
        assert!(out.components[0].grade_part(1).norm() + out.components[0].grade_part(3).norm() < 1e-14);
        let odd_out = s.act_vector(&random_vector(&mut rng, n), &even).unwrap();
        assert!(odd_out.components[0].even_part().norm() < 1e-14);
        let g = exp_cl2(&a);
        let mut neg = a.clone();
        neg.scalar = -a.scalar;
        neg.endo = -&a.endo;
        neg.two_form = -&a.two_form;
        neg.two_vector = -&a.two_vector;
        let ginv = exp_cl2(&neg);
        let phi = random_tuple(&mut rng, n);
        let back = s.act(&ginv, &s.act(&g, &phi).unwrap()).unwrap();
        assert!(back.distance(&phi) < 1e-11);
    }

    #[test]
    fn twisted_adjoint_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let n = 3;
        let g = exp_cl2(&random_cl2(&mut rng, n, 0.4))
            .product(&CliffordElement::vector(n, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]))
            .unwrap();
        let p = SplitPairing::new(n);
        let gt_inv = g.tilde().matrix().clone().try_inverse().unwrap();
        for _ in 0..5 {
            let e = random_vector(&mut rng, n);
            let f = random_vector(&mut rng, n);
            let ae = g.ad_tilde(&e).unwrap();
            let af = g.ad_tilde(&f).unwrap();
            let lhs = vector_matrix(n, &ae);
            let rhs = &gt_inv * vector_matrix(n, &e) * g.matrix();
            assert!((lhs - rhs).norm() < 1e-10);
            assert!((p.pair(&ae, &af) - p.pair(&e, &f)).abs() < 1e-10);
        }
    }
}
