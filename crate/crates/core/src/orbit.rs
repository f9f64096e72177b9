//! Fiberwise analysis of a structure `Φ` at a point: isotropy algebra,
//! the filtration `E^k = CL^{k+1}·Φ`, the Spin(7) decompositions, the
//! generalized metric with its `*` operator, and symbol complexes.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use alloc::format;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::clifford::{cl2_dim, exp_cl2, vector_matrix, Cl2Element, Cl2Frame, MonomialOp, SplitPairing};
use crate::error::{Error, Result};
use crate::linalg::{column_space, hstack, null_space, rank, singular_values, SubspaceBasis, C64, RANK_RTOL};
use crate::multivector::{grade, Basis, FormTuple, Multivector, Reality};
use crate::structures::{cayley_form, gcs_from_spinor, hk_metric, u_spaces, Kind, StructureSpec};

/// Rank tolerance of the ellipticity checks.
pub const SYMBOL_RTOL: f64 = 1e-8;

fn apply_blocks(op: &MonomialOp, v: &[f64], d: usize) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for (src, dst) in v.chunks(d).zip(out.as_mut_slice().chunks_mut(d)) {
        op.apply(src, dst, 1.0);
    }
    out
}

fn generators(n: usize) -> Vec<MonomialOp> {
    (0..2 * n).map(|k| MonomialOp::quantized(n, 1 << k)).collect()
}

/// Real matrix of `a ↦ a·Φ` on `CL²` coordinates (columns), acting on the split view.
pub fn action_map(phi: &FormTuple) -> DMatrix<f64> {
    Cl2Frame::new(phi.n()).action_matrix(&phi.real_view())
}

#[derive(Clone, Debug, Serialize)]
pub struct IsotropyBreakdown {
    /// Largest scalar coordinate over the kernel basis.
    pub max_scalar: f64,
    pub endo_rank: usize,
    /// Largest residual of `[A_i, A_j]` against the span of the endo parts.
    pub endo_closure_residual: f64,
    pub two_form_rank: usize,
    pub two_vector_rank: usize,
    /// `s` with `b = s·β` on every kernel element, when one exists.
    pub dual_sign: Option<f64>,
    pub dual_residual: f64,
}

#[derive(Clone, Debug)]
pub struct IsotropyReport {
    /// Kernel of `a ↦ a·Φ` in `CL²` coordinates.
    pub basis: SubspaceBasis<f64>,
    pub breakdown: IsotropyBreakdown,
    /// Largest residual of a bracket of two kernel elements against the kernel.
    pub closure_residual: f64,
}

impl IsotropyReport {
    pub fn dim(&self) -> usize {
        self.basis.rank()
    }
}

pub fn isotropy_algebra(phi: &FormTuple) -> Result<IsotropyReport> {
    let n = phi.n();
    let kernel = null_space(&action_map(phi), RANK_RTOL);
    let elems: Vec<Cl2Element> = kernel
        .basis
        .column_iter()
        .map(|c| Cl2Element::from_coords(n, &c.into_owned()))
        .collect::<Result<_>>()?;
    let so: Vec<DMatrix<f64>> = elems.iter().map(|e| e.so_matrix()).collect();
    let mut closure = 0.0f64;
    for i in 0..so.len() {
        for j in i + 1..so.len() {
            let br = &so[i] * &so[j] - &so[j] * &so[i];
            let c = Cl2Element::from_so(&br)?.coords();
            closure = closure.max(kernel.residual(&c));
        }
    }
    let max_scalar = elems.iter().map(|e| e.scalar.abs()).fold(0.0, f64::max);
    let flat = |m: &DMatrix<f64>| DVector::from_iterator(m.len(), m.iter().cloned());
    let endo_cols: Vec<DVector<f64>> = elems.iter().map(|e| flat(&e.endo)).collect();
    let endo_span = column_space(&hstack(n * n, &endo_cols), RANK_RTOL);
    let mut endo_closure = 0.0f64;
    let endo_basis: Vec<DMatrix<f64>> = endo_span
        .basis
        .column_iter()
        .map(|c| DMatrix::from_iterator(n, n, c.iter().cloned()))
        .collect();
    for i in 0..endo_basis.len() {
        for j in i + 1..endo_basis.len() {
            let br = &endo_basis[i] * &endo_basis[j] - &endo_basis[j] * &endo_basis[i];
            endo_closure = endo_closure.max(endo_span.residual(&flat(&br)));
        }
    }
    let m = n * (n - 1) / 2;
    let off = 1 + n * n;
    let b_cols: Vec<DVector<f64>> = kernel.basis.column_iter().map(|c| c.rows(off, m).into_owned()).collect();
    let beta_cols: Vec<DVector<f64>> = kernel.basis.column_iter().map(|c| c.rows(off + m, m).into_owned()).collect();
    let diff = |s: f64| b_cols.iter().zip(&beta_cols).map(|(b, be)| (b - be * s).norm()).fold(0.0, f64::max);
    let (dp, dm) = (diff(1.0), diff(-1.0));
    let (dual_sign, dual_residual) = if dp <= dm { (1.0, dp) } else { (-1.0, dm) };
    let breakdown = IsotropyBreakdown {
        max_scalar,
        endo_rank: endo_span.rank(),
        endo_closure_residual: endo_closure,
        two_form_rank: rank(&hstack(m, &b_cols), RANK_RTOL),
        two_vector_rank: rank(&hstack(m, &beta_cols), RANK_RTOL),
        dual_sign: (dual_residual <= 1e-9).then_some(dual_sign),
        dual_residual,
    };
    Ok(IsotropyReport { basis: kernel, breakdown, closure_residual: closure })
}

/// `E^{-1}, E⁰, .., E^{depth}` inside the split real view of `⊕ Λ*V*`.
#[derive(Clone, Debug)]
pub struct FiberComplex {
    pub structure: FormTuple,
    pub spaces: Vec<SubspaceBasis<f64>>,
    /// Complex dimensions of `CL^{k+1}·φ` for a single complex spinor.
    pub complex_dims: Option<Vec<usize>>,
}

impl FiberComplex {
    /// `E^k` for `k ≥ -1`.
    pub fn space(&self, k: i32) -> &SubspaceBasis<f64> {
        &self.spaces[(k + 1) as usize]
    }

    pub fn depth(&self) -> i32 {
        self.spaces.len() as i32 - 2
    }

    pub fn dims(&self) -> Vec<usize> {
        self.spaces.iter().map(|s| s.rank()).collect()
    }

    /// Largest residual of `E^{k-2} ⊆ E^k`.
    pub fn nesting_residual(&self) -> f64 {
        (1..=self.depth()).map(|k| self.space(k).containment_residual(self.space(k - 2))).fold(0.0, f64::max)
    }
}

pub fn fiber_complex(phi: &FormTuple, depth: i32) -> Result<FiberComplex> {
    if depth < 2 {
        return Err(Error::InvalidStructure("depth must be at least 2".to_string()));
    }
    let n = phi.n();
    let d = 1usize << n;
    let gens = generators(n);
    let view = phi.real_view();
    let mut cur = column_space(&DMatrix::from_column_slice(view.len(), 1, view.as_slice()), RANK_RTOL);
    let mut spaces = vec![cur.clone()];
    for _ in 0..=depth {
        let cols: Vec<DVector<f64>> = gens
            .iter()
            .flat_map(|g| cur.basis.column_iter().map(move |c| apply_blocks(g, c.as_slice(), d)))
            .collect();
        cur = column_space(&hstack(view.len(), &cols), RANK_RTOL);
        spaces.push(cur.clone());
    }
    let complex_dims = (phi.reality == Reality::Complex && phi.len() == 1).then(|| complex_filtration(&phi.components[0], depth));
    Ok(FiberComplex { structure: phi.clone(), spaces, complex_dims })
}

fn complex_filtration(phi: &Multivector, depth: i32) -> Vec<usize> {
    let n = phi.n();
    let gens: Vec<DMatrix<C64>> = (0..2 * n)
        .map(|k| {
            let mut e = vec![0.0; 2 * n];
            e[k] = 1.0;
            crate::linalg::to_complex(&vector_matrix(n, &e))
        })
        .collect();
    let mut cur = column_space(&DMatrix::from_column_slice(1 << n, 1, phi.coeffs()), RANK_RTOL);
    let mut dims = vec![cur.rank()];
    for _ in 0..=depth {
        let cols: Vec<DVector<C64>> =
            gens.iter().flat_map(|g| cur.basis.column_iter().map(move |c| g * c)).collect();
        cur = column_space(&hstack(1 << n, &cols), RANK_RTOL);
        dims.push(cur.rank());
    }
    dims
}

/// Expected real dimensions of `E^{-1}..E^{depth}` for an `SL_n` structure.
pub fn sl_expected_dims(n: usize, depth: i32) -> Vec<usize> {
    let b = |k: usize| crate::linalg::binomial(2 * n, k);
    let mut out = vec![1];
    for k in 0..=depth {
        let k = k as usize;
        let s: usize = if k % 2 == 1 {
            (0..=(k + 1) / 2).map(|i| b(2 * i)).sum()
        } else {
            (0..=k / 2).map(|i| b(2 * i + 1)).sum()
        };
        out.push(2 * s);
    }
    out
}

fn two_form_basis(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push(1 << i | 1 << j);
        }
    }
    out
}

fn real_coeffs(m: &Multivector, masks: &[usize]) -> DVector<f64> {
    DVector::from_iterator(masks.len(), masks.iter().map(|&k| m.coeff(k).re))
}

fn from_coords(n: usize, masks: &[usize], c: &[f64]) -> Multivector {
    let mut m = Multivector::zero(n);
    for (&k, &x) in masks.iter().zip(c) {
        m.set(k, C64::new(x, 0.0));
    }
    m
}

/// `(α, β)` with `x ≈ α p + β ⋆p`, plus the fit residual.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Fit {
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Lambda2Report {
    /// Cluster values of `p ↦ ⋆(p∧φ_Spin)` with multiplicities.
    pub eigenvalues: Vec<(f64, usize)>,
    pub wedge_7: Fit,
    pub contract_7: Fit,
    pub wedge_21: Fit,
    pub contract_21: Fit,
    /// Largest `‖(q + q*)·Φ_Spin‖` over a basis of `Λ²₂₁`.
    pub annihilator_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct Lambda2Split {
    pub l7: SubspaceBasis<f64>,
    pub l21: SubspaceBasis<f64>,
    pub report: Lambda2Report,
}

fn cluster(values: &[f64], tol: f64) -> Result<Vec<(f64, usize, Vec<usize>)>> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out: Vec<(f64, usize, Vec<usize>)> = Vec::new();
    for i in idx {
        match out.last_mut() {
            Some(c) if (values[i] - values[c.2[0]]).abs() <= tol => c.2.push(i),
            _ => out.push((values[i], 0, vec![i])),
        }
    }
    for c in out.iter_mut() {
        c.1 = c.2.len();
        c.0 = c.2.iter().map(|&i| values[i]).sum::<f64>() / c.1 as f64;
    }
    // a cluster must be separated from its neighbours by far more than its spread
    for w in out.windows(2) {
        if (w[1].0 - w[0].0).abs() < 1e3 * tol {
            return Err(Error::Clustering(format!("eigenvalues {} and {} are not separated", w[0].0, w[1].0)));
        }
    }
    Ok(out)
}

/// `Λ² = Λ²₇ ⊕ Λ²₂₁` on `ℝ⁸` via the eigenspaces of `p ↦ ⋆(p∧φ_Spin)`.
pub fn lambda2_decompose() -> Result<Lambda2Split> {
    let n = 8;
    let basis = Basis::euclidean(n);
    let phi = cayley_form();
    let big = crate::structures::make_spin7().components.remove(0);
    let masks = two_form_basis(n);
    let cols: Vec<DVector<f64>> = masks
        .iter()
        .map(|&k| {
            let p = Multivector::monomial(n, k, C64::new(1.0, 0.0));
            Ok(real_coeffs(&p.wedge(&phi)?.hodge_star(&basis)?, &masks))
        })
        .collect::<Result<_>>()?;
    let t = hstack(masks.len(), &cols);
    let eig = ((&t + t.transpose()) * 0.5).symmetric_eigen();
    let clusters = cluster(eig.eigenvalues.as_slice(), 1e-8)?;
    if clusters.len() != 2 {
        return Err(Error::Clustering(format!("expected two eigenvalues, found {}", clusters.len())));
    }
    let space = |c: &(f64, usize, Vec<usize>)| {
        let cols: Vec<DVector<f64>> = c.2.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        column_space(&hstack(masks.len(), &cols), RANK_RTOL)
    };
    let (c7, c21) = if clusters[0].1 == 7 { (&clusters[0], &clusters[1]) } else { (&clusters[1], &clusters[0]) };
    let (l7, l21) = (space(c7), space(c21));

    let fit_over = |s: &SubspaceBasis<f64>, contract: bool| -> Result<Fit> {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut parts = Vec::new();
        for c in s.basis.column_iter() {
            let p = from_coords(n, &masks, c.as_slice());
            let sp = p.hodge_star(&basis)?;
            let x = if contract {
                let beta = DMatrix::from_fn(n, n, |i, j| {
                    if i < j {
                        p.coeff(1 << i | 1 << j).re
                    } else if j < i {
                        -p.coeff(1 << i | 1 << j).re
                    } else {
                        0.0
                    }
                });
                crate::spinrep::interior_two_vector(&beta, &big)?
            } else {
                p.wedge(&big)?
            };
            // compare the Λ²⊕Λ⁶ part; other grades must vanish
            let other = &x - &(&x.grade_part(2) + &x.grade_part(6));
            parts.push(other.norm());
            for k in 0..1 << n {
                rows.push([p.coeff(k).re, sp.coeff(k).re]);
                rhs.push(x.coeff(k).re);
            }
        }
        let a = DMatrix::from_fn(rows.len(), 2, |i, j| rows[i][j]);
        let b = DVector::from_column_slice(&rhs);
        let sol = crate::linalg::pinv(&a, RANK_RTOL) * &b;
        let res = (&a * &sol - &b).norm() + parts.iter().cloned().fold(0.0, f64::max);
        Ok(Fit { alpha: sol[0], beta: sol[1], residual: res })
    };
    let wedge_7 = fit_over(&l7, false)?;
    let contract_7 = fit_over(&l7, true)?;
    let wedge_21 = fit_over(&l21, false)?;
    let contract_21 = fit_over(&l21, true)?;
    let frame = Cl2Frame::new(n);
    let view = FormTuple::real(vec![big.clone()]).real_view();
    let off = 1 + n * n;
    let m = masks.len();
    let mut annihilator_residual = 0.0f64;
    for c in l21.basis.column_iter() {
        let mut coords = DVector::zeros(cl2_dim(n));
        coords.rows_mut(off, m).copy_from(&c);
        coords.rows_mut(off + m, m).copy_from(&c);
        let out = frame.matrix(coords.as_slice()) * &view;
        annihilator_residual = annihilator_residual.max(out.norm());
    }
    let tol = 1e-10;
    let near = |f: &Fit, a: f64, b: f64| (f.alpha - a).abs() <= tol && (f.beta - b).abs() <= tol && f.residual <= tol;
    let pass = (c7.0 - 3.0).abs() <= 1e-8
        && (c21.0 + 1.0).abs() <= 1e-8
        && near(&wedge_7, 1.0, -3.0)
        && near(&contract_7, 3.0, -1.0)
        && near(&wedge_21, 1.0, 1.0)
        && near(&contract_21, -1.0, -1.0)
        && annihilator_residual <= 1e-10;
    let report = Lambda2Report {
        eigenvalues: clusters.iter().map(|c| (c.0, c.1)).collect(),
        wedge_7,
        contract_7,
        wedge_21,
        contract_21,
        annihilator_residual,
        pass,
    };
    Ok(Lambda2Split { l7, l21, report })
}

/// A generalized metric on `V⊕V*` with its `*` operator on forms.
#[derive(Clone, Debug)]
pub struct GeneralizedMetric {
    pub g: DMatrix<f64>,
    pub star: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MetricResiduals {
    pub square: f64,
    pub pairing_symmetry: f64,
    pub star_square: f64,
}

impl GeneralizedMetric {
    /// `G₀ = (0, g⁻¹; g, 0)` for the flat metric.
    pub fn model(n: usize) -> Self {
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            g[(i, n + i)] = 1.0;
            g[(n + i, i)] = 1.0;
        }
        Self::from_g(g).expect("model metric")
    }

    /// Builds `*` as the Clifford product of a pairing-orthonormal basis of
    /// the `+1` eigenspace of `G`, obtained from `(1+G)vᵢ` in order.
    pub fn from_g(g: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows() / 2;
        if g.shape() != (2 * n, 2 * n) {
            return Err(Error::DimensionMismatch { expected: 2 * n, found: g.ncols() });
        }
        let pairing = SplitPairing::new(n);
        let id = DMatrix::<f64>::identity(2 * n, 2 * n);
        if (&g * &g - &id).norm() > 1e-9 {
            return Err(Error::InvalidMetric);
        }
        let plus = (&id + &g) * 0.5;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut c: Vec<f64> = plus.column(i).iter().cloned().collect();
            for _ in 0..2 {
                for b in &basis {
                    let p = pairing.pair(&c, b);
                    c.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
                }
            }
            let q = pairing.pair(&c, &c);
            if q <= 1e-12 {
                return Err(Error::InvalidMetric);
            }
            let s = 1.0 / q.sqrt();
            basis.push(c.into_iter().map(|x| x * s).collect());
        }
        let mut star = DMatrix::<f64>::identity(1 << n, 1 << n);
        for c in &basis {
            star = star * vector_matrix(n, c);
        }
        Ok(GeneralizedMetric { g, star })
    }

    pub fn n(&self) -> usize {
        self.g.nrows() / 2
    }

    pub fn residuals(&self) -> MetricResiduals {
        let n = self.n();
        let q = SplitPairing::new(n).gram();
        let id = DMatrix::<f64>::identity(2 * n, 2 * n);
        let qg = &q * &self.g;
        let sid = DMatrix::<f64>::identity(1 << n, 1 << n);
        MetricResiduals {
            square: (&self.g * &self.g - id).norm(),
            pairing_symmetry: (&qg - qg.transpose()).norm(),
            star_square: (&self.star * &self.star - sid).norm(),
        }
    }

    /// Conjugate by `k = e^{a₁}⋯` : `G ↦ Ad_k G Ad_k⁻¹`, `* ↦ k * k⁻¹`.
    pub fn transformed(&self, transforms: &[Cl2Element]) -> Result<Self> {
        let mut g = self.g.clone();
        let mut star = self.star.clone();
        for t in transforms {
            let ad = crate::linalg::expm(&t.so_matrix());
            let ad_inv = crate::linalg::expm(&(-t.so_matrix()));
            g = &ad * g * ad_inv;
            let k = exp_cl2(t);
            let kinv = exp_cl2(&Cl2Element::from_coords(t.n(), &(-t.coords()))?);
            star = k.matrix() * star * kinv.matrix();
        }
        Ok(GeneralizedMetric { g, star })
    }

    /// Signs `ε_k` with `⋆ = ε_k *` on `Λ^k` (flat Hodge star), when `*` maps `Λ^k` to `Λ^{n-k}`.
    pub fn hodge_signs(&self) -> Result<Vec<Option<f64>>> {
        let n = self.n();
        let basis = Basis::euclidean(n);
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let mut sign: Option<f64> = None;
            let mut ok = true;
            for mask in (0..1usize << n).filter(|&m| grade(m) == k) {
                let e = Multivector::monomial(n, mask, C64::new(1.0, 0.0));
                let hodge = e.hodge_star(&basis)?;
                let col = self.star.column(mask);
                let target = (!mask) & ((1 << n) - 1);
                let s = col[target] * hodge.coeff(target).re;
                let rest: f64 = col.iter().enumerate().filter(|&(i, _)| i != target).map(|(_, x)| x.abs()).sum();
                if rest > 1e-10 || (s.abs() - 1.0).abs() > 1e-10 || sign.is_some_and(|t| t != s.signum()) {
                    ok = false;
                    break;
                }
                sign = Some(s.signum());
            }
            out.push(if ok { sign } else { None });
        }
        Ok(out)
    }
}

/// Generalized metric attached to a Spin(7), hyperKähler or Calabi-Yau structure.
pub fn generalized_metric(spec: &StructureSpec) -> Result<GeneralizedMetric> {
    spec.validate()?;
    match spec.kind {
        Kind::Spin7 => GeneralizedMetric::model(8).transformed(&spec.transforms),
        Kind::Hk => GeneralizedMetric::from_g(hk_metric(&spec.build()?)?),
        Kind::Cy => {
            let pair = spec.build()?;
            let j0 = gcs_from_spinor(&pair.components[0])?;
            let j1 = gcs_from_spinor(&pair.components[1])?;
            GeneralizedMetric::from_g(j0 * j1)
        }
        _ => Err(Error::InvalidStructure("no generalized metric for this kind".to_string())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AsdReport {
    pub dim_asd_even: usize,
    pub dim_e1: usize,
    /// Largest residual of `Λ^even_−` against `E¹`.
    pub containment_residual: f64,
    /// Residual of `k·(1 − vol₈)` against `E¹` and its `*`-defect.
    pub scaling_residual: f64,
    /// Rank of `{p − *p : p ∈ Λ²}` after transport, and its containment residual.
    pub two_six_rank: usize,
    pub two_six_residual: f64,
    /// Rank of the `Sym₀(8)` family projected to `Λ⁴_−`.
    pub sym0_rank: usize,
    pub pass: bool,
}

/// `Λ^even_− ⊆ E¹` for a (possibly transformed) Spin(7) structure.
pub fn asd_even_check(spec: &StructureSpec) -> Result<AsdReport> {
    if spec.kind != Kind::Spin7 {
        return Err(Error::InvalidStructure("anti-self-duality check needs a Spin(7) structure".to_string()));
    }
    let n = 8;
    let d = 1usize << n;
    let phi = spec.build()?;
    let metric = generalized_metric(spec)?;
    let mut k = DMatrix::<f64>::identity(d, d);
    for t in &spec.transforms {
        k = exp_cl2(t).matrix() * k;
    }
    let e1 = column_space(&action_map(&phi), RANK_RTOL);
    let even = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| if grade(i) % 2 == 0 { 1.0 } else { 0.0 }));
    let id = DMatrix::<f64>::identity(d, d);
    let asd_proj = (&id - &metric.star) * 0.5 * &even;
    let asd = column_space(&asd_proj, RANK_RTOL);
    let containment_residual = e1.containment_residual(&asd);
    let defect = |v: &DVector<f64>| (&metric.star * v + v).norm();

    let mut s = DVector::zeros(d);
    s[0] = 1.0;
    s[d - 1] = -1.0;
    let s = &k * s;
    let scaling_residual = e1.residual(&s) + defect(&s);

    let model_star = GeneralizedMetric::model(n).star;
    let mut cols = Vec::new();
    for mask in two_form_basis(n) {
        let mut p = DVector::zeros(d);
        p[mask] = 1.0;
        cols.push(&k * (&p - &model_star * &p));
    }
    let two_six = hstack(d, &cols);
    let two_six_rank = rank(&two_six, RANK_RTOL);
    let two_six_residual = e1.max_residual(&two_six) + cols.iter().map(|c| defect(c)).fold(0.0, f64::max);

    let model = crate::structures::make_spin7().real_view();
    let frame = Cl2Frame::new(n);
    let mut sym_cols = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut a = DMatrix::zeros(n, n);
            if i == j {
                if i + 1 == n {
                    continue;
                }
                a[(i, i)] = 1.0;
                a[(n - 1, n - 1)] = -1.0;
            } else {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
            let c = Cl2Element::from_endo(a).coords();
            sym_cols.push(frame.matrix(c.as_slice()) * &model);
        }
    }
    // project the model family to model Λ⁴_−, then transport
    let deg4 = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| if grade(i) == 4 { 1.0 } else { 0.0 }));
    let p4 = (&id - &model_star) * 0.5 * deg4;
    let projected: Vec<DVector<f64>> = sym_cols.iter().map(|c| &k * (&p4 * c)).collect();
    let sym0_rank = rank(&hstack(d, &projected), RANK_RTOL);
    let tol = 1e-9;
    let pass = asd.rank() == 64
        && containment_residual <= tol
        && scaling_residual <= tol
        && two_six_rank == 28
        && two_six_residual <= tol
        && sym0_rank == 35;
    Ok(AsdReport {
        dim_asd_even: asd.rank(),
        dim_e1: e1.rank(),
        containment_residual,
        scaling_residual,
        two_six_rank,
        two_six_residual,
        sym0_rank,
        pass,
    })
}

/// Precomputed data for evaluating the symbol complex `σ(ξ)` of a fiber complex.
#[derive(Clone, Debug)]
pub struct SymbolComplex {
    dims: Vec<usize>,
    /// `P_j^k`: `e^j ∧ (basis of E^k)`, restricted to the rows touched by `ξ∧E^k`.
    images: Vec<Vec<DMatrix<f64>>>,
    n: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SymbolReport {
    /// `dim E^k` for `k = -1..=depth`.
    pub dims: Vec<usize>,
    /// `rank σ_k(ξ): E^k → E^{k+1}` for `k = -1..depth`.
    pub ranks: Vec<usize>,
    /// `dim E^k − rank σ_{k−1} − rank σ_k` for `k = 0..depth`.
    pub defects: Vec<i64>,
    /// Smallest ratio between the last kept and first dropped singular value.
    pub min_gap: f64,
}

impl SymbolReport {
    pub fn exact_at(&self, k: usize) -> bool {
        self.defects.get(k).is_some_and(|&d| d == 0)
    }
}

impl SymbolComplex {
    pub fn new(fc: &FiberComplex) -> Self {
        let n = fc.structure.n();
        let d = 1usize << n;
        let wedges: Vec<MonomialOp> = (0..n).map(|j| MonomialOp::quantized(n, 1 << (n + j))).collect();
        let mut images = Vec::new();
        for s in &fc.spaces[..fc.spaces.len() - 1] {
            let full: Vec<DMatrix<f64>> = wedges
                .iter()
                .map(|w| {
                    let cols: Vec<DVector<f64>> = s.basis.column_iter().map(|c| apply_blocks(w, c.as_slice(), d)).collect();
                    hstack(s.ambient_dim, &cols)
                })
                .collect();
            let rows: Vec<usize> =
                (0..s.ambient_dim).filter(|&r| full.iter().any(|m| m.row(r).iter().any(|x| *x != 0.0))).collect();
            images.push(full.iter().map(|m| m.select_rows(rows.iter())).collect());
        }
        SymbolComplex { dims: fc.dims(), images, n }
    }

    pub fn check(&self, xi: &[f64]) -> Result<SymbolReport> {
        if xi.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: xi.len() });
        }
        if xi.iter().all(|x| *x == 0.0) {
            return Err(Error::ZeroCovector);
        }
        let mut ranks = Vec::with_capacity(self.images.len());
        let mut min_gap = f64::INFINITY;
        for per_k in &self.images {
            let mut m = DMatrix::zeros(per_k[0].nrows(), per_k[0].ncols());
            for (p, &x) in per_k.iter().zip(xi) {
                if x != 0.0 {
                    m += p * x;
                }
            }
            let s = singular_values(&m);
            let max = s.iter().cloned().fold(0.0, f64::max);
            let cut = (SYMBOL_RTOL * max).max(1e-12);
            let r = s.iter().filter(|&&x| x > cut).count();
            let kept = s.iter().cloned().filter(|&x| x > cut).fold(f64::INFINITY, f64::min);
            let dropped = s.iter().cloned().filter(|&x| x <= cut).fold(0.0, f64::max);
            if r > 0 && dropped > 0.0 {
                min_gap = min_gap.min(kept / dropped);
            }
            ranks.push(r);
        }
        let depth = self.dims.len() - 2;
        let defects = (0..depth)
            .map(|k| {
                let e = self.dims[k + 1] as i64;
                e - ranks[k] as i64 - ranks[k + 1] as i64
            })
            .collect();
        Ok(SymbolReport { dims: self.dims.clone(), ranks, defects, min_gap })
    }
}

pub fn symbol_complex(fc: &FiberComplex, xi: &[f64]) -> Result<SymbolReport> {
    SymbolComplex::new(fc).check(xi)
}

/// Ranks of `ξ∧: Λ^k → Λ^{k+1}`; returns the defects for `k = 0..=n`.
pub fn de_rham_symbol(n: usize, xi: &[f64]) -> Result<Vec<i64>> {
    if xi.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroCovector);
    }
    let xi_c: Vec<C64> = xi.iter().map(|&x| C64::new(x, 0.0)).collect();
    let ranks: Vec<usize> = (0..=n)
        .map(|k| {
            let cols: Vec<DVector<f64>> = (0..1usize << n)
                .filter(|&m| grade(m) == k)
                .map(|m| {
                    let w = Multivector::monomial(n, m, C64::new(1.0, 0.0)).wedge_covector(&xi_c).expect("dimension");
                    DVector::from_iterator(1 << n, w.coeffs().iter().map(|c| c.re))
                })
                .collect();
            rank(&hstack(1 << n, &cols), SYMBOL_RTOL)
        })
        .collect();
    Ok((0..=n)
        .map(|k| {
            let before = if k == 0 { 0 } else { ranks[k - 1] };
            crate::linalg::binomial(n, k) as i64 - before as i64 - ranks[k] as i64
        })
        .collect())
}

/// Primitive integer directions (up to sign) with `0 < |m|_∞ ≤ max`.
pub fn frequency_directions(n: usize, max: i32) -> Vec<Vec<i32>> {
    fn gcd(a: i32, b: i32) -> i32 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }
    let side = (2 * max + 1) as usize;
    let total = side.pow(n as u32);
    let mut out = Vec::new();
    for idx in 0..total {
        let mut r = idx;
        let m: Vec<i32> = (0..n)
            .map(|_| {
                let v = (r % side) as i32 - max;
                r /= side;
                v
            })
            .collect();
        let g = m.iter().fold(0, |acc, &x| gcd(acc, x));
        if g != 1 {
            continue;
        }
        let first = m.iter().find(|&&x| x != 0).copied().unwrap_or(0);
        if first > 0 {
            out.push(m);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanFailure {
    pub xi: Vec<f64>,
    pub degree: usize,
    pub defect: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub random_samples: usize,
    pub frequency_directions: usize,
    pub degrees: Vec<usize>,
    pub failures: Vec<ScanFailure>,
    pub min_gap: f64,
    pub pass: bool,
}

/// Checks exactness at `degrees` for `random` seeded unit covectors and
/// every primitive integer direction with `|m|_∞ ≤ max_freq`.
pub fn ellipticity_scan(fc: &FiberComplex, degrees: &[usize], random: usize, max_freq: i32, seed: u64) -> Result<ScanReport> {
    let n = fc.structure.n();
    let sc = SymbolComplex::new(fc);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xis: Vec<Vec<f64>> = (0..random)
        .map(|_| loop {
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-3 && norm <= 1.0 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect();
    let dirs = frequency_directions(n, max_freq);
    let ndirs = dirs.len();
    xis.extend(dirs.into_iter().map(|m| m.into_iter().map(f64::from).collect()));
    let check = |xi: &Vec<f64>| -> Result<(Vec<ScanFailure>, f64)> {
        let r = sc.check(xi)?;
        let fails = degrees
            .iter()
            .filter(|&&k| !r.exact_at(k))
            .map(|&k| ScanFailure { xi: xi.clone(), degree: k, defect: r.defects.get(k).copied().unwrap_or(i64::MAX) })
            .collect();
        Ok((fails, r.min_gap))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(Vec<ScanFailure>, f64)>> = {
        use rayon::prelude::*;
        xis.par_iter().map(check).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(Vec<ScanFailure>, f64)>> = xis.iter().map(check).collect();
    let mut failures = Vec::new();
    let mut min_gap = f64::INFINITY;
    for r in results {
        let (f, g) = r?;
        failures.extend(f);
        min_gap = min_gap.min(g);
    }
    let pass = failures.is_empty();
    Ok(ScanReport { random_samples: random, frequency_directions: ndirs, degrees: degrees.to_vec(), failures, min_gap, pass })
}

#[derive(Clone, Debug, Serialize)]
pub struct BigradingEntry {
    pub p: i32,
    pub q: i32,
    pub dim: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct CyKernelReport {
    pub commutator: f64,
    pub bigrading: Vec<BigradingEntry>,
    pub total_dim: usize,
    /// Real dimensions of `ker⁰, ker¹, ker²`.
    pub ker_dims: Vec<usize>,
    /// Real dimensions predicted from the bigrading.
    pub expected: Vec<usize>,
    /// Largest residual of `(0, iφ₁)` and `(0, U^{0,−n+2})` against `E¹`.
    pub ker1_residual: f64,
    /// Real rank of those vectors; equals `ker¹` when they span it.
    pub ker1_span_rank: usize,
    pub pass: bool,
}

/// The kernel of the projection of the Calabi-Yau fiber complex to its first component.
pub fn cy_kernel_fibers(pair: &FormTuple) -> Result<CyKernelReport> {
    if pair.len() != 2 || pair.reality != Reality::Complex {
        return Err(Error::InvalidStructure("a Calabi-Yau pair has two complex components".to_string()));
    }
    let dimv = pair.n();
    let m = (dimv / 2) as i32;
    let (p0, p1) = (&pair.components[0], &pair.components[1]);
    let j0 = gcs_from_spinor(p0)?;
    let j1 = gcs_from_spinor(p1)?;
    let commutator = (&j0 * &j1 - &j1 * &j0).norm();
    if commutator > 1e-9 {
        return Err(Error::NonCommuting(commutator));
    }
    let u0 = u_spaces(p0)?;
    let u1 = u_spaces(p1)?;
    let mut bigrading = Vec::new();
    let lookup = |p: i32, q: i32| -> usize {
        if p.abs() > m || q.abs() > m {
            return 0;
        }
        u0.u[(p + m) as usize].intersect(&u1.u[(q + m) as usize]).rank()
    };
    let mut total = 0;
    for p in -m..=m {
        for q in -m..=m {
            let dim = lookup(p, q);
            if dim > 0 {
                bigrading.push(BigradingEntry { p, q, dim });
                total += dim;
            }
        }
    }
    let fc = fiber_complex(pair, 2)?;
    let d = 1usize << dimv;
    let ker_dims: Vec<usize> = (0..3)
        .map(|k| {
            let e = fc.space(k);
            let top = e.basis.rows(0, 2 * d).into_owned();
            null_space(&top, RANK_RTOL).rank()
        })
        .collect();
    // ker¹ also holds the line through (0, iφ₁), generated by a_{J₁}.
    let expected = vec![
        0,
        2 * lookup(0, -m + 2) + 1,
        2 * (lookup(1, -m + 1) + lookup(-1, -m + 1) + lookup(1, -m + 3) + lookup(-1, -m + 3)),
    ];
    let lift = |x: &[C64]| {
        let mut w = DVector::zeros(4 * d);
        for (j, c) in x.iter().enumerate() {
            w[2 * d + j] = c.re;
            w[3 * d + j] = c.im;
        }
        w
    };
    let mut cands = vec![lift(&p1.coeffs().iter().map(|c| c * C64::new(0.0, 1.0)).collect::<Vec<_>>())];
    if (-m + 2).abs() <= m {
        let u = u0.u[m as usize].intersect(&u1.u[2]);
        for c in u.basis.column_iter() {
            let c: Vec<C64> = c.iter().copied().collect();
            cands.push(lift(&c));
            cands.push(lift(&c.iter().map(|x| x * C64::new(0.0, 1.0)).collect::<Vec<_>>()));
        }
    }
    let e1 = fc.space(1);
    let ker1_residual = cands.iter().map(|w| e1.residual(w) / w.norm()).fold(0.0, f64::max);
    let ker1_span_rank = rank(&hstack(4 * d, &cands), RANK_RTOL);
    let pass = ker_dims == expected && total == d && ker1_residual < 1e-8 && ker1_span_rank == ker_dims[1];
    Ok(CyKernelReport {
        commutator,
        bigrading,
        total_dim: total,
        ker_dims,
        expected,
        ker1_residual,
        ker1_span_rank,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::tests::random_cl2;
    use crate::structures::{make_cy, make_hk, make_sl, make_spin7};

    #[test]
    fn spin7_isotropy() {
        let r = isotropy_algebra(&make_spin7()).unwrap();
        assert_eq!(r.dim(), 42);
        let b = &r.breakdown;
        assert!(b.max_scalar < 1e-12);
        assert_eq!(b.endo_rank, 21);
        assert!(b.endo_closure_residual < 1e-10);
        assert_eq!(b.two_form_rank, 21);
        assert_eq!(b.dual_sign, Some(1.0), "{b:?}");
        assert!(r.closure_residual < 1e-10);
    }

    #[test]
    fn scalar_spinor_isotropy() {
        let one = FormTuple::real(vec![Multivector::scalar(4, 1.0)]);
        let r = isotropy_algebra(&one).unwrap();
        // gl(V) with a compensating scalar, plus β ∈ Λ²V
        assert_eq!(r.dim(), 16 + 6);
        assert!(r.closure_residual < 1e-10);
    }

    #[test]
    fn isotropy_dim_invariant_under_transform() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut spec = StructureSpec::new(Kind::Sl, 2);
        let base = isotropy_algebra(&spec.build().unwrap()).unwrap().dim();
        spec.transforms.push(random_cl2(&mut rng, 4, 0.4));
        let moved = isotropy_algebra(&spec.build().unwrap()).unwrap();
        assert_eq!(moved.dim(), base);
        assert!(moved.closure_residual < 1e-9);
    }

    #[test]
    fn sl_fiber_dims() {
        for n in 2..=3 {
            let fc = fiber_complex(&make_sl(n), 3).unwrap();
            let dims = fc.dims();
            let expected = sl_expected_dims(n, 3);
            assert_eq!(dims[1..], expected[1..]);
            assert_eq!(dims[0], 1);
            let cd = fc.complex_dims.clone().unwrap();
            for k in 1..dims.len() {
                assert_eq!(dims[k], 2 * cd[k]);
            }
            assert!(fc.nesting_residual() < 1e-10);
        }
        let fc = fiber_complex(&make_sl(2), 3).unwrap();
        assert_eq!(fc.complex_dims.unwrap()[1..4], [4, 7, 8]);
        assert!(fiber_complex(&make_sl(2), 1).is_err());
    }

    #[test]
    fn fiber_dims_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(32);
        let mut spec = StructureSpec::new(Kind::Sl, 2);
        spec.transforms.push(random_cl2(&mut rng, 4, 0.5));
        let fc = fiber_complex(&spec.build().unwrap(), 3).unwrap();
        assert_eq!(fc.dims()[1..], sl_expected_dims(2, 3)[1..]);
    }

    #[test]
    fn spin7_fiber() {
        let fc = fiber_complex(&make_spin7(), 2).unwrap();
        assert_eq!(fc.space(-1).rank(), 1);
        assert_eq!(fc.space(1).rank(), 79);
        assert_eq!(rank(&action_map(&make_spin7()), RANK_RTOL), 79);
    }

    #[test]
    fn lambda2() {
        let s = lambda2_decompose().unwrap();
        assert_eq!((s.l7.rank(), s.l21.rank()), (7, 21));
        assert!(s.report.pass, "{:?}", s.report);
    }

    #[test]
    fn model_metric_and_star() {
        let m = GeneralizedMetric::model(8);
        let r = m.residuals();
        assert!(r.square < 1e-12 && r.pairing_symmetry < 1e-12 && r.star_square < 1e-12);
        assert_eq!(m.star[(255, 0)], 1.0);
        assert_eq!(m.star[(0, 255)], 1.0);
        let signs = m.hodge_signs().unwrap();
        for (k, expect) in [(0, 1.0), (2, -1.0), (4, 1.0), (6, -1.0), (8, 1.0)] {
            assert_eq!(signs[k], Some(expect), "degree {k}");
        }
    }

    #[test]
    fn transformed_metric_matches_its_star() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(33);
        let mut spec = StructureSpec::new(Kind::Spin7, 0);
        spec.transforms.push(random_cl2(&mut rng, 8, 0.2));
        let m = generalized_metric(&spec).unwrap();
        let r = m.residuals();
        assert!(r.square < 1e-9 && r.pairing_symmetry < 1e-9 && r.star_square < 1e-8, "{r:?}");
        let rebuilt = GeneralizedMetric::from_g(m.g.clone()).unwrap();
        let d = (&rebuilt.star - &m.star).norm().min((&rebuilt.star + &m.star).norm());
        assert!(d < 1e-8 * m.star.norm());
    }

    #[test]
    fn hk_and_cy_metrics() {
        let m = generalized_metric(&StructureSpec::new(Kind::Hk, 1)).unwrap();
        let r = m.residuals();
        assert!(r.square < 1e-10 && r.pairing_symmetry < 1e-10);
        let m = generalized_metric(&StructureSpec::new(Kind::Cy, 2)).unwrap();
        assert!(m.residuals().square < 1e-10);
        assert!(generalized_metric(&StructureSpec::new(Kind::Sl, 2)).is_err());
        let _ = make_hk(1);
    }

    #[test]
    fn spin7_asd_even() {
        let r = asd_even_check(&StructureSpec::new(Kind::Spin7, 0)).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.dim_asd_even, 64);
        assert_eq!(r.dim_e1, 79);
    }

    #[test]
    fn de_rham_control() {
        let d = de_rham_symbol(4, &[0.3, -1.0, 0.0, 2.0]).unwrap();
        assert!(d.iter().all(|&x| x == 0));
        assert!(matches!(de_rham_symbol(4, &[0.0; 4]), Err(Error::ZeroCovector)));
    }

    #[test]
    fn sl2_symbol_exact() {
        let fc = fiber_complex(&make_sl(2), 3).unwrap();
        let r = symbol_complex(&fc, &[0.2, 0.7, -0.1, 0.4]).unwrap();
        assert!(r.exact_at(1) && r.exact_at(2), "{r:?}");
        let scaled = symbol_complex(&fc, &[2.0, 7.0, -1.0, 4.0]).unwrap();
        assert_eq!(scaled.ranks, r.ranks);
        assert!(matches!(symbol_complex(&fc, &[0.0; 4]), Err(Error::ZeroCovector)));
    }

    #[test]
    fn frequency_dedup() {
        let dirs = frequency_directions(2, 1);
        assert_eq!(dirs.len(), 4);
        assert!(dirs.contains(&vec![1, 0]) && dirs.contains(&vec![1, -1]));
    }

    #[test]
    fn cy_kernels() {
        let r = cy_kernel_fibers(&make_cy(2)).unwrap();
        assert_eq!(r.total_dim, 16);
        assert_eq!(r.ker_dims[0], 0);
        assert!(r.pass, "{r:?}");
    }
}
