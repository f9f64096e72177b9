//! The `dd^J` property of a constant generalized SL structure, frequency by
//! frequency, and the resulting dimension identity at frequency zero.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::fourier::{frequency_box, Freq};
use super::hodge::wedge_matrix;
use crate::error::{Error, Result};
use crate::linalg::{column_space, max_abs, null_space, to_complex, SubspaceBasis, C64, RANK_RTOL};
use crate::multivector::{FormTuple, Reality};
use crate::orbit::fiber_complex;
use crate::structures::u_spaces;

/// Containment tolerance for the subspace comparisons.
pub const DDJ_TOL: f64 = 1e-8;

/// `∂`, `∂̄` and `d^J = i(∂̄ − ∂)` at one frequency.
#[derive(Clone, Debug)]
pub struct SplitDifferential {
    pub d: DMatrix<C64>,
    pub del: DMatrix<C64>,
    pub delbar: DMatrix<C64>,
    pub dj: DMatrix<C64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyDdj {
    pub freq: Freq,
    /// Ranks of `ker d ∩ im d^J`, `im d ∩ ker d^J`, `im dd^J`.
    pub ranks: [usize; 3],
    /// `‖d − ∂ − ∂̄‖`: the part of `d` not shifting `U^p` by `±1`.
    pub split_residual: f64,
    /// `‖dd^J + d^Jd‖`.
    pub anticommutator: f64,
    /// Largest containment residual of `im dd^J` in the other two.
    pub containment: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DdjReport {
    pub trunc: u32,
    pub frequencies: usize,
    pub max_split_residual: f64,
    pub max_anticommutator: f64,
    pub max_containment: f64,
    pub failures: Vec<Freq>,
    pub pass: bool,
}

/// Oblique projectors onto `U^{-n}, .., U^{n}` of `Λ*V* ⊗ ℂ`.
#[derive(Clone, Debug)]
pub struct UProjectors {
    pub projectors: Vec<DMatrix<C64>>,
}

impl UProjectors {
    pub fn new(phi: &FormTuple) -> Result<Self> {
        let omega = single_complex(phi)?;
        let u = u_spaces(omega)?.u;
        let dim = 1usize << omega.n();
        let cols: Vec<_> = u.iter().flat_map(|s| s.basis.column_iter().map(|c| c.into_owned())).collect();
        if cols.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: cols.len() });
        }
        let t = DMatrix::from_columns(&cols);
        let inv = t.clone().try_inverse().ok_or(Error::Singular)?;
        let mut projectors = Vec::with_capacity(u.len());
        let mut off = 0;
        for s in &u {
            let r = s.rank();
            projectors.push(t.columns(off, r) * inv.rows(off, r));
            off += r;
        }
        Ok(UProjectors { projectors })
    }

    pub fn split(&self, d: DMatrix<C64>) -> SplitDifferential {
        let p = &self.projectors;
        let dim = d.nrows();
        let mut del = DMatrix::zeros(dim, dim);
        let mut delbar = DMatrix::zeros(dim, dim);
        for k in 0..p.len() {
            let dk = &d * &p[k];
            if k + 1 < p.len() {
                delbar += &p[k + 1] * &dk;
            }
            if k > 0 {
                del += &p[k - 1] * &dk;
            }
        }
        let dj = (&delbar - &del) * C64::new(0.0, 1.0);
        SplitDifferential { d, del, delbar, dj }
    }
}

fn single_complex(phi: &FormTuple) -> Result<&crate::multivector::Multivector> {
    if phi.reality != Reality::Complex || phi.len() != 1 {
        return Err(Error::InvalidStructure("expected a single complex pure spinor".into()));
    }
    Ok(&phi.components[0])
}

fn image(m: &DMatrix<C64>) -> SubspaceBasis<C64> {
    column_space(m, RANK_RTOL)
}

fn kernel(m: &DMatrix<C64>) -> SubspaceBasis<C64> {
    null_space(m, RANK_RTOL)
}

pub fn ddj_at(proj: &UProjectors, n: usize, m: &[i32]) -> FrequencyDdj {
    let xi: Vec<f64> = m.iter().map(|&x| x as f64).collect();
    let d = to_complex(&wedge_matrix(n, 1, &xi)) * C64::new(0.0, 2.0 * PI);
    let s = proj.split(d);
    let scale = max_abs(&s.d).max(1.0);
    let split_residual = max_abs(&(&s.d - &s.del - &s.delbar)) / scale;
    let anticommutator = max_abs(&(&s.d * &s.dj + &s.dj * &s.d)) / (scale * scale);
    let s1 = kernel(&s.d).intersect(&image(&s.dj));
    let s2 = image(&s.d).intersect(&kernel(&s.dj));
    let s3 = image(&(&s.d * &s.dj));
    let containment = s1.containment_residual(&s3).max(s2.containment_residual(&s3));
    let ranks = [s1.rank(), s2.rank(), s3.rank()];
    let pass = ranks[0] == ranks[2] && ranks[1] == ranks[2] && containment <= DDJ_TOL && split_residual <= DDJ_TOL;
    FrequencyDdj { freq: m.to_vec(), ranks, split_residual, anticommutator, containment, pass }
}

/// The three `dd^J` conditions agree as subspaces at every `|m|_∞ ≤ trunc`.
pub fn ddj_check(phi: &FormTuple, trunc: u32) -> Result<DdjReport> {
    let proj = UProjectors::new(phi)?;
    let n = phi.n();
    let mut report = DdjReport {
        trunc,
        frequencies: 0,
        max_split_residual: 0.0,
        max_anticommutator: 0.0,
        max_containment: 0.0,
        failures: Vec::new(),
        pass: true,
    };
    for m in frequency_box(n, trunc) {
        let f = ddj_at(&proj, n, &m);
        report.frequencies += 1;
        report.max_split_residual = report.max_split_residual.max(f.split_residual);
        report.max_anticommutator = report.max_anticommutator.max(f.anticommutator);
        report.max_containment = report.max_containment.max(f.containment);
        if !f.pass {
            report.failures.push(m);
        }
    }
    report.pass = report.failures.is_empty();
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceReport {
    /// Complex dimensions of `H^{-1}`, `H¹`, `H²_∂̄` at frequency zero.
    pub h_minus1: usize,
    pub h1: usize,
    pub h2_delbar: usize,
    pub pass: bool,
}

/// `dim H¹ = dim H^{-1} + dim H²_∂̄` with the frequency-zero fibers.
pub fn sl_sequence_check(phi: &FormTuple) -> Result<SequenceReport> {
    let omega = single_complex(phi)?;
    let dims = fiber_complex(phi, 2)?.complex_dims.ok_or(Error::InvalidStructure("no complex filtration".into()))?;
    let h2_delbar = u_spaces(omega)?.u[2].rank();
    let (h_minus1, h1) = (dims[0], dims[2]);
    Ok(SequenceReport { h_minus1, h1, h2_delbar, pass: h1 == h_minus1 + h2_delbar })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::Cl2Element;
    use crate::multivector::Multivector;
    use crate::structures::{make_sl, Kind, StructureSpec};

    #[test]
    fn zero_frequency_is_trivial() {
        let phi = make_sl(2);
        let f = ddj_at(&UProjectors::new(&phi).unwrap(), 4, &[0, 0, 0, 0]);
        assert_eq!(f.ranks, [0, 0, 0]);
        assert!(f.pass);
        let f = ddj_at(&UProjectors::new(&phi).unwrap(), 4, &[1, 0, -1, 0]);
        assert!(f.pass && f.ranks[2] > 0, "{f:?}");
    }

    #[test]
    fn projectors_resolve_identity() {
        let p = UProjectors::new(&make_sl(2)).unwrap();
        let sum = p.projectors.iter().fold(DMatrix::<C64>::zeros(16, 16), |acc, x| acc + x);
        assert!(max_abs(&(sum - DMatrix::identity(16, 16))) < 1e-12);
    }

    #[test]
    fn sl2_ddj_up_to_two() {
        let r = ddj_check(&make_sl(2), 2).unwrap();
        assert_eq!(r.frequencies, 625);
        assert!(r.pass, "{r:?}");
        assert!(r.max_anticommutator < 1e-9);
    }

    #[test]
    fn sequence_dims() {
        let r = sl_sequence_check(&make_sl(2)).unwrap();
        assert_eq!((r.h1, r.h_minus1, r.h2_delbar), (7, 1, 6));
        let r = sl_sequence_check(&make_sl(3)).unwrap();
        assert_eq!((r.h1, r.h_minus1, r.h2_delbar), (16, 1, 15));
        let b = Cl2Element::from_two_form(Multivector::from_terms(4, &[(&[1, 3], 0.7), (&[2, 4], -0.4)]));
        let mut spec = StructureSpec::new(Kind::Sl, 2);
        spec.transforms.push(b);
        let r = sl_sequence_check(&spec.build().unwrap()).unwrap();
        assert!(r.pass && r.h1 == 7);
        assert!(ddj_check(&spec.build().unwrap(), 1).unwrap().pass);
    }
}
