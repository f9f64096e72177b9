//! Per-frequency Hodge theory of a constant-coefficient subcomplex.
//!
//! For constant `Φ` the fibers `E^k` do not move, so a section of `E^k` is
//! a Fourier series with coefficients in `E^k ⊗ ℂ`. At frequency `m` the
//! differential is `2πi D_k(m)` with `D_k(m)` the real matrix of `m∧` in
//! orthonormal fiber coordinates. Adjoints use the flat fiber metric.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::fourier::{frequency_box, interior_into, wedge_covector_into};
use crate::error::Result;
use crate::linalg::{null_space, pinv, C64, RANK_RTOL};
use crate::multivector::{grade, FormTuple};
use crate::orbit::{fiber_complex, frequency_directions, FiberComplex};

/// Real matrix of `m ∧` acting blockwise on a vector of `2ⁿ`-blocks.
pub fn wedge_matrix(n: usize, blocks: usize, m: &[f64]) -> DMatrix<f64> {
    let d = 1usize << n;
    let mut out = DMatrix::zeros(blocks * d, blocks * d);
    let mut src = vec![C64::new(0.0, 0.0); d];
    let mut dst = vec![C64::new(0.0, 0.0); d];
    for j in 0..d {
        src.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        dst.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        src[j] = C64::new(1.0, 0.0);
        wedge_covector_into(m, &src, &mut dst, C64::new(1.0, 0.0));
        for b in 0..blocks {
            for (i, z) in dst.iter().enumerate() {
                out[(b * d + i, b * d + j)] = z.re;
            }
        }
    }
    out
}

/// Real matrix of `i_m` on a vector of `2ⁿ`-blocks.
pub fn interior_matrix(n: usize, blocks: usize, m: &[f64]) -> DMatrix<f64> {
    let d = 1usize << n;
    let mut out = DMatrix::zeros(blocks * d, blocks * d);
    let mut src = vec![C64::new(0.0, 0.0); d];
    let mut dst = vec![C64::new(0.0, 0.0); d];
    for j in 0..d {
        src.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        dst.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        src[j] = C64::new(1.0, 0.0);
        interior_into(m, &src, &mut dst, C64::new(1.0, 0.0));
        for b in 0..blocks {
            for (i, z) in dst.iter().enumerate() {
                out[(b * d + i, b * d + j)] = z.re;
            }
        }
    }
    out
}

/// Real matrix applied to a complex vector.
pub(crate) fn rmul(m: &DMatrix<f64>, v: &DVector<C64>) -> DVector<C64> {
    let re = m * v.map(|z| z.re);
    let im = m * v.map(|z| z.im);
    DVector::from_fn(re.len(), |i, _| C64::new(re[i], im[i]))
}

#[derive(Clone, Debug)]
pub struct DegreeHodge {
    pub degree: i32,
    pub laplacian: DMatrix<f64>,
    pub green: DMatrix<f64>,
    pub harmonic: DMatrix<f64>,
    /// `‖ΔG + Π − 1‖`.
    pub identity_residual: f64,
}

impl DegreeHodge {
    pub fn harmonic_dim(&self) -> usize {
        (self.harmonic.trace() + 0.5).floor() as usize
    }
}

/// Differentials, Laplacians, Green operators and harmonic projectors at one frequency.
#[derive(Clone, Debug)]
pub struct FrequencyHodge {
    pub freq: Vec<i32>,
    first: i32,
    /// `D_k(m)`, with `d_k(m) = 2πi D_k(m)`.
    pub differentials: Vec<DMatrix<f64>>,
    pub degrees: Vec<DegreeHodge>,
}

impl FrequencyHodge {
    pub fn degree(&self, k: i32) -> &DegreeHodge {
        &self.degrees[(k - self.first) as usize]
    }

    pub fn differential(&self, k: i32) -> &DMatrix<f64> {
        &self.differentials[(k - self.first) as usize]
    }

    pub fn max_identity_residual(&self) -> f64 {
        self.degrees.iter().map(|d| d.identity_residual).fold(0.0, f64::max)
    }
}

/// Fiber bases of a graded subcomplex together with the coordinate
/// matrices of `e^j ∧` between consecutive fibers.
#[derive(Clone, Debug)]
pub struct HodgePackage {
    n: usize,
    first: i32,
    bases: Vec<DMatrix<f64>>,
    parts: Vec<Vec<DMatrix<f64>>>,
    /// Largest residual of `e^j ∧ E^k ⊆ E^{k+1}`.
    pub inclusion_residual: f64,
}

impl HodgePackage {
    /// The subcomplex `E^{-1} → E⁰ → ⋯` of a constant structure.
    /// Laplacians exist up to degree `depth - 1`.
    pub fn new(phi: &FormTuple, depth: i32) -> Result<Self> {
        Ok(Self::from_fiber(&fiber_complex(phi, depth)?))
    }

    pub fn from_fiber(fc: &FiberComplex) -> Self {
        let bases = fc.spaces.iter().map(|s| s.basis.clone()).collect();
        Self::from_bases(fc.structure.n(), -1, bases)
    }

    /// The full de Rham complex `Λ⁰ → Λ¹ → ⋯ → Λⁿ` of a single form.
    pub fn de_rham(n: usize) -> Self {
        let d = 1usize << n;
        let bases = (0..=n)
            .map(|k| {
                let masks: Vec<usize> = (0..d).filter(|&m| grade(m) == k).collect();
                let mut b = DMatrix::zeros(d, masks.len());
                for (j, &m) in masks.iter().enumerate() {
                    b[(m, j)] = 1.0;
                }
                b
            })
            .collect();
        Self::from_bases(n, 0, bases)
    }

    fn from_bases(n: usize, first: i32, bases: Vec<DMatrix<f64>>) -> Self {
        let ambient = bases[0].nrows();
        let blocks = ambient >> n;
        let wedges: Vec<DMatrix<f64>> = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                wedge_matrix(n, blocks, &e)
            })
            .collect();
        let mut parts = Vec::new();
        let mut worst = 0.0f64;
        for k in 0..bases.len() - 1 {
            let (src, dst) = (&bases[k], &bases[k + 1]);
            let mut per = Vec::new();
            for w in &wedges {
                let image = w * src;
                let coords = dst.transpose() * &image;
                worst = worst.max((&image - dst * &coords).norm());
                per.push(coords);
            }
            parts.push(per);
        }
        HodgePackage { n, first, bases, parts, inclusion_residual: worst }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn first(&self) -> i32 {
        self.first
    }

    /// Highest degree with both neighbours, hence with a Laplacian.
    pub fn top(&self) -> i32 {
        self.first + self.bases.len() as i32 - 2
    }

    pub fn basis(&self, k: i32) -> &DMatrix<f64> {
        &self.bases[(k - self.first) as usize]
    }

    pub fn rank(&self, k: i32) -> usize {
        self.basis(k).ncols()
    }

    /// `D_k(m)` from `E^k` to `E^{k+1}` in fiber coordinates.
    pub fn differential(&self, k: i32, m: &[f64]) -> DMatrix<f64> {
        let per = &self.parts[(k - self.first) as usize];
        let mut out = DMatrix::zeros(per[0].nrows(), per[0].ncols());
        for (p, &x) in per.iter().zip(m) {
            if x != 0.0 {
                out += p * x;
            }
        }
        out
    }

    pub fn at(&self, m: &[i32]) -> FrequencyHodge {
        let xi: Vec<f64> = m.iter().map(|&x| x as f64).collect();
        let top = self.top();
        let differentials: Vec<DMatrix<f64>> = (self.first..=top).map(|k| self.differential(k, &xi)).collect();
        let s = 4.0 * PI * PI;
        let degrees = (self.first..=top)
            .map(|k| {
                let i = (k - self.first) as usize;
                let dk = &differentials[i];
                let mut lap = dk.transpose() * dk;
                if i > 0 {
                    let prev = &differentials[i - 1];
                    lap += prev * prev.transpose();
                }
                lap *= s;
                let green = pinv(&lap, RANK_RTOL);
                let harmonic = null_space(&lap, RANK_RTOL).projector();
                let r = lap.nrows();
                let identity_residual = (&lap * &green + &harmonic - DMatrix::<f64>::identity(r, r)).norm();
                DegreeHodge { degree: k, laplacian: lap, green, harmonic, identity_residual }
            })
            .collect();
        FrequencyHodge { freq: m.to_vec(), first: self.first, differentials, degrees }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrequencyKernel {
    pub freq: Vec<i32>,
    /// `dim H^k(m)` for each requested degree.
    pub kernel_dims: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TopologicalReport {
    pub degrees: Vec<i32>,
    pub trunc: u32,
    /// Fiber dimensions at `m = 0`, where every constant class is harmonic.
    pub zero_frequency_dims: Vec<usize>,
    /// Primitive directions evaluated; every nonzero frequency in the cube is a multiple of one.
    pub directions: usize,
    pub frequencies_covered: usize,
    pub kernels: Vec<FrequencyKernel>,
    pub max_identity_residual: f64,
    pub pass: bool,
}

/// Per-frequency cohomology of the subcomplex at the given degrees.
///
/// `Δ(λm) = λ²Δ(m)`, so the kernel at `m` equals the kernel at its
/// primitive direction; only those are evaluated.
pub fn topological_check(pkg: &HodgePackage, trunc: u32, degrees: &[i32]) -> TopologicalReport {
    let zero = pkg.at(&vec![0; pkg.n()]);
    let zero_frequency_dims = degrees.iter().map(|&k| zero.degree(k).harmonic_dim()).collect();
    let dirs = frequency_directions(pkg.n(), trunc as i32);
    let mut kernels = Vec::with_capacity(dirs.len());
    let mut worst = zero.max_identity_residual();
    for m in &dirs {
        let h = pkg.at(m);
        worst = worst.max(h.max_identity_residual());
        kernels.push(FrequencyKernel { freq: m.clone(), kernel_dims: degrees.iter().map(|&k| h.degree(k).harmonic_dim()).collect() });
    }
    let pass = kernels.iter().all(|k| k.kernel_dims.iter().all(|&d| d == 0));
    TopologicalReport {
        degrees: degrees.to_vec(),
        trunc,
        zero_frequency_dims,
        directions: dirs.len(),
        frequencies_covered: frequency_box(pkg.n(), trunc).len() - 1,
        kernels,
        max_identity_residual: worst,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::make_sl;

    #[test]
    fn zero_frequency() {
        let pkg = HodgePackage::new(&make_sl(2), 3).unwrap();
        let h = pkg.at(&[0, 0, 0, 0]);
        for d in &h.degrees {
            assert!(d.green.norm() == 0.0);
            assert_eq!(d.harmonic_dim(), pkg.rank(d.degree));
        }
    }

    #[test]
    fn de_rham_laplacian_is_scalar() {
        let pkg = HodgePackage::de_rham(4);
        let m = [1, -2, 0, 3];
        let h = pkg.at(&m);
        let s = 4.0 * PI * PI * 14.0;
        for d in &h.degrees {
            let r = d.laplacian.nrows();
            assert!((&d.laplacian - DMatrix::<f64>::identity(r, r) * s).norm() < 1e-9);
            assert_eq!(d.harmonic_dim(), 0);
        }
        let r = topological_check(&pkg, 1, &[1, 2]);
        assert!(r.pass);
        assert_eq!(r.zero_frequency_dims, vec![4, 6]);
    }

    #[test]
    fn sl2_hodge_identities() {
        let pkg = HodgePackage::new(&make_sl(2), 3).unwrap();
        assert!(pkg.inclusion_residual < 1e-10);
        for m in [[1, 0, 0, 0], [1, -1, 2, 0], [0, 0, 1, 1]] {
            let h = pkg.at(&m);
            assert!(h.max_identity_residual() < 1e-10);
            for k in 0..pkg.top() {
                let dk = h.differential(k);
                assert!((h.differential(k + 1) * dk).norm() < 1e-10);
                // dG = Gd and Πd = 0
                let lhs = dk * &h.degree(k).green;
                let rhs = &h.degree(k + 1).green * dk;
                assert!((lhs - rhs).norm() < 1e-10);
                assert!((&h.degree(k + 1).harmonic * dk).norm() < 1e-10);
            }
            assert_eq!(h.degree(1).harmonic_dim(), 0);
            assert_eq!(h.degree(2).harmonic_dim(), 0);
        }
    }

    #[test]
    fn sl2_topological() {
        let pkg = HodgePackage::new(&make_sl(2), 3).unwrap();
        let r = topological_check(&pkg, 3, &[1, 2]);
        assert!(r.pass, "{:?}", r.kernels.iter().find(|k| k.kernel_dims.iter().any(|&d| d > 0)));
        assert_eq!(r.frequencies_covered, 7usize.pow(4) - 1);
    }
}
