//! Identity suites run by `genform verify`.

use std::collections::BTreeMap;

use genform_core::clifford::{cl2_dim, exp_cl2, Cl2Element, CliffordElement, SplitPairing};
use genform_core::multivector::{FormTuple, Multivector};
use genform_core::orbit::{asd_even_check, fiber_complex, isotropy_algebra, lambda2_decompose};
use genform_core::spinrep::{act_matrix, b_transform, gl_lift_action, SpinAction};
use genform_core::structures::{cayley_form, hk_metric, hk_relations, make_hk, make_spin7, Kind, StructureSpec};
use genform_core::torus::conjugated::exp_constant;
use genform_core::torus::fourier::{exp_wedge, wedge};
use genform_core::torus::{dform, ConjugatedD, FourierCL2Field, FourierForm};
use genform_core::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::CliError;

pub const SUITES: [&str; 5] = ["clifford", "spinrep", "conjugated", "spin7", "hk"];

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub tolerance: f64,
    /// Largest residual per identity.
    pub residuals: BTreeMap<String, f64>,
    /// Exact counts checked by the suite (dimensions, multiplicities).
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub counts: BTreeMap<String, i64>,
    pub failures: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(name: &str, tolerance: f64) -> Self {
        SuiteReport {
            name: name.to_string(),
            cases: 0,
            tolerance,
            residuals: BTreeMap::new(),
            counts: BTreeMap::new(),
            failures: Vec::new(),
            pass: true,
        }
    }

    fn residual(&mut self, key: &str, value: f64) {
        let e = self.residuals.entry(key.to_string()).or_insert(0.0);
        // NaN must register as a failure
        if value.is_nan() || value > *e {
            *e = value;
        }
    }

    fn count(&mut self, key: &str, found: i64, expected: i64) {
        self.counts.insert(key.to_string(), found);
        if found != expected {
            self.failures.push(format!("{key}: found {found}, expected {expected}"));
        }
    }

    fn require(&mut self, key: &str, ok: bool) {
        if !ok {
            self.failures.push(format!("{key} failed"));
        }
    }

    fn finish(mut self) -> Self {
        for (k, &v) in &self.residuals {
            if v.is_nan() || v > self.tolerance {
                self.failures.push(format!("{k}: residual {v:.3e} > {:.1e}", self.tolerance));
            }
        }
        self.pass = self.failures.is_empty();
        self
    }
}

#[derive(Clone, Debug)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Randomized cases per dimension (Clifford) or per operator family (conjugated differential).
    pub cases: usize,
    pub tol: Option<f64>,
    /// Name of a suite whose oracle gets a deliberate sign error.
    pub fault: Option<String>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0, cases: 500, tol: None, fault: None }
    }
}

impl SuiteOptions {
    fn faulty(&self, name: &str) -> bool {
        self.fault.as_deref() == Some(name)
    }
}

pub fn run_suite(name: &str, opts: &SuiteOptions) -> Result<SuiteReport, CliError> {
    match name {
        "clifford" => clifford(opts),
        "spinrep" => spinrep(opts),
        "conjugated" => conjugated(opts),
        "spin7" => spin7(opts),
        "hk" => hk(opts),
        other => Err(CliError::Config(format!("unknown suite '{other}' (known: {})", SUITES.join(", ")))),
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// A few random monomials of the full Clifford algebra.
fn random_sparse(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> CliffordElement {
    let d = 1usize << (2 * n);
    let mut symbol = vec![0.0; d];
    for _ in 0..terms {
        symbol[rng.random_range(0..d)] = rng.random_range(-1.0..1.0);
    }
    CliffordElement::from_symbol(n, symbol)
}

fn random_form(rng: &mut ChaCha8Rng, n: usize) -> FormTuple {
    let c: Vec<f64> = (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect();
    FormTuple::real(vec![Multivector::from_real(n, &c).expect("length 2^n")])
}

fn symbol_distance(a: &CliffordElement, b: &CliffordElement) -> f64 {
    let diff: f64 = a.symbol().iter().zip(b.symbol()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let scale: f64 = a.symbol().iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1.0)
}

fn scalar_distance(a: &CliffordElement, c: f64) -> f64 {
    let mut s = a.symbol().to_vec();
    s[0] -= c;
    s.iter().map(|x| x * x).sum::<f64>().sqrt() / c.abs().max(1.0)
}

/// `E·E = ‖E‖²`, the polarized relation, associativity, `σ(ab) = σ(b)σ(a)`
/// and `act(ab) = act(a)∘act(b)` for `n = 4, 7, 8`.
pub fn clifford(opts: &SuiteOptions) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("clifford", opts.tol.unwrap_or(1e-9));
    let sign = if opts.faulty("clifford") { -1.0 } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for n in [4usize, 7, 8] {
        let pairing = SplitPairing::new(n);
        let spin = SpinAction::new(n);
        for _ in 0..opts.cases {
            let (e, f) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
            let (ce, cf) = (CliffordElement::vector(n, &e), CliffordElement::vector(n, &f));
            r.residual("square", scalar_distance(&ce.product(&ce)?, sign * pairing.pair(&e, &e)));
            let anti = ce.product(&cf)?.add(&cf.product(&ce)?)?;
            r.residual("polarized", scalar_distance(&anti, 2.0 * pairing.pair(&e, &f)));

            let a = random_sparse(&mut rng, n, 3);
            let b = random_sparse(&mut rng, n, 3);
            let c = random_sparse(&mut rng, n, 3);
            let ab = a.product(&b)?;
            r.residual("associativity", symbol_distance(&ab.product(&c)?, &a.product(&b.product(&c)?)?));
            r.residual("sigma_anti", symbol_distance(&ab.sigma(), &b.sigma().product(&a.sigma())?));

            let phi = random_form(&mut rng, n);
            let lhs = spin.act(&ab, &phi)?;
            let rhs = spin.act(&a, &spin.act(&b, &phi)?)?;
            let scale = lhs.norm().max(1.0);
            r.residual("act_homomorphism", (lhs.real_view() - rhs.real_view()).norm() / scale);
            r.cases += 1;
        }
    }
    Ok(r.finish())
}

/// The spin action against direct interior/wedge, `e^b` and the GL lift.
pub fn spinrep(opts: &SuiteOptions) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("spinrep", opts.tol.unwrap_or(1e-10));
    let sign = if opts.faulty("spinrep") { -1.0 } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let cases = opts.cases.min(50);
    for n in [4usize, 7, 8] {
        let spin = SpinAction::new(n);
        for _ in 0..cases {
            let e = random_vector(&mut rng, n);
            let phi = random_form(&mut rng, n);
            let direct = spin.act_vector(&e, &phi)?;
            let via = act_matrix(&(CliffordElement::vector(n, &e).matrix() * sign), &phi)?;
            r.residual("vector_action", (direct.real_view() - via.real_view()).norm() / phi.norm());

            let mut b = Multivector::zero(n);
            for i in 0..n {
                for j in i + 1..n {
                    b.set(1 << i | 1 << j, C64::new(0.3 * rng.random_range(-1.0..1.0), 0.0));
                }
            }
            let exp = spin.act(&exp_cl2(&Cl2Element::from_two_form(b.clone())), &phi)?;
            let wedge = b_transform(&b, &phi)?;
            r.residual("b_field", (exp.real_view() - wedge.real_view()).norm() / wedge.norm().max(1.0));

            let g = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + 0.2 * rng.random_range(-1.0..1.0));
            let h = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + 0.2 * rng.random_range(-1.0..1.0));
            if g.determinant() > 0.0 && h.determinant() > 0.0 {
                let lhs = gl_lift_action(&(&g * &h), &phi)?;
                let rhs = gl_lift_action(&g, &gl_lift_action(&h, &phi)?)?;
                r.residual("gl_composition", (lhs.real_view() - rhs.real_view()).norm() / lhs.norm().max(1.0));
            }
            r.cases += 1;
        }
    }
    // λ·id on Φ_Spin gives λ⁴ − φ + λ⁻⁴vol₈
    let lambda: f64 = 1.3;
    let lifted = gl_lift_action(&(DMatrix::identity(8, 8) * lambda), &make_spin7())?;
    let mut expected = Multivector::scalar(8, lambda.powi(4));
    expected += &(&cayley_form() * -1.0);
    expected.set(255, C64::new(lambda.powi(-4), 0.0));
    r.residual("gl_scaling", (&lifted.components[0] - &expected).norm());
    Ok(r.finish())
}

fn t4() -> FormTuple {
    FormTuple::real(vec![Multivector::zero(4)])
}

fn random_fourier(rng: &mut ChaCha8Rng, trunc: u32) -> Result<FourierForm, CliError> {
    let mut w = FourierForm::zero(4, trunc);
    for _ in 0..3 {
        let m: Vec<i32> = (0..4).map(|_| rng.random_range(-1..=1)).collect();
        let c = DVector::from_fn(16, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        w = w.add(&FourierForm::real_mode(&t4(), trunc, &m, c)?)?;
    }
    Ok(w)
}

/// `exp(Ad_a)d = e^{−a}∘d∘e^{a}` on `T⁴` for nilpotent (b-field) and general constant `a`.
pub fn conjugated(opts: &SuiteOptions) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("conjugated", opts.tol.unwrap_or(1e-10));
    let sign = if opts.faulty("conjugated") { -1.0 } else { 1.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(2));
    let cases = opts.cases.min(20);
    let mut max_terms = 0usize;
    let mut converged = true;
    for _ in 0..cases {
        // nilpotent: b-field mode, oracle through wedge products
        let mut c = DVector::zeros(16);
        for mask in [0b0011usize, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100] {
            c[mask] = C64::new(0.3 * rng.random_range(-1.0..1.0), 0.3 * rng.random_range(-1.0..1.0));
        }
        let m: Vec<i32> = (0..4).map(|_| rng.random_range(-1..=1)).collect();
        let bf = FourierForm::real_mode(&t4(), 5, &m, c)?;
        let a = FourierCL2Field::from_two_form_field(&bf)?;
        let w = random_fourier(&mut rng, 5)?;
        let out = ConjugatedD::new(a).apply(&w)?;
        converged &= out.info.converged;
        max_terms = max_terms.max(out.info.terms);
        let plus = exp_wedge(&bf)?;
        let minus = exp_wedge(&bf.scale(C64::new(-1.0, 0.0)))?;
        let oracle = wedge(&minus, &dform(&wedge(&plus, &w)?))?.scale(C64::new(sign, 0.0));
        r.residual("nilpotent", oracle.sub(&out.form)?.norm() / oracle.norm().max(1.0));

        // general constant a, oracle through matrix exponentials
        let c = DVector::from_fn(cl2_dim(4), |_, _| C64::new(rng.random_range(-0.15..0.15), rng.random_range(-0.15..0.15)));
        let mut a = FourierCL2Field::zero(4, 1);
        a.set(&[0, 0, 0, 0], c.clone())?;
        let a = a.complexified();
        let w = random_fourier(&mut rng, 1)?.complexified();
        let out = ConjugatedD::new(a).apply(&w)?;
        converged &= out.info.converged;
        let minus: Vec<C64> = c.iter().map(|z| -z).collect();
        let oracle = exp_constant(&minus, &dform(&exp_constant(c.as_slice(), &w))).scale(C64::new(sign, 0.0));
        r.residual("constant", oracle.sub(&out.form)?.norm() / oracle.norm().max(1.0));
        r.cases += 2;
    }
    r.counts.insert("max_series_terms".into(), max_terms as i64);
    r.require("series decay", converged);
    Ok(r.finish())
}

/// Spin(7) fiber facts: `Λ²` eigenvalues and multiplicities, isotropy 42 with
/// its `spin(7) ⊕ spin(7)` shape, `dim E¹ = 79`, `Λ^even_− ⊆ E¹`.
pub fn spin7(opts: &SuiteOptions) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("spin7", opts.tol.unwrap_or(1e-9));
    let flip = if opts.faulty("spin7") { -1.0 } else { 1.0 };
    let split = lambda2_decompose()?;
    let eig = &split.report.eigenvalues;
    let find = |v: f64| eig.iter().find(|(x, _)| (x - v).abs() < 1e-8).map_or(0, |&(_, m)| m as i64);
    r.count("lambda2_eigen_3", find(3.0 * flip), 7);
    r.count("lambda2_eigen_-1", find(-flip), 21);
    r.residual("lambda2_annihilator", split.report.annihilator_residual);
    r.require("lambda2 identities", split.report.pass);
    let phi = make_spin7();
    let iso = isotropy_algebra(&phi)?;
    r.count("isotropy_dim", iso.dim() as i64, 42);
    r.count("isotropy_endo_rank", iso.breakdown.endo_rank as i64, 21);
    r.residual("isotropy_scalar", iso.breakdown.max_scalar);
    r.residual("isotropy_closure", iso.closure_residual);
    r.residual("isotropy_b_equals_beta", iso.breakdown.dual_residual);
    let fc = fiber_complex(&phi, 2)?;
    r.count("dim_E1", fc.space(1).rank() as i64, 79);
    let asd = asd_even_check(&StructureSpec::new(Kind::Spin7, 0))?;
    r.count("dim_asd_even", asd.dim_asd_even as i64, 64);
    r.residual("asd_in_E1", asd.containment_residual);
    r.require("asd_even", asd.pass);
    r.cases = 1;
    Ok(r.finish())
}

/// Quaternion relations and the common generalized metric for `m = 1`.
pub fn hk(opts: &SuiteOptions) -> Result<SuiteReport, CliError> {
    let mut r = SuiteReport::new("hk", opts.tol.unwrap_or(1e-10));
    let rep = hk_relations(&make_hk(1))?;
    r.residual("quaternion", rep.quaternion_residual);
    r.residual("common_g", rep.common_g_residual);
    r.residual("gcs_square", rep.gcs_residual);
    r.residual("g_square_reported", rep.g_square_residual);
    let g = hk_metric(&make_hk(1))?;
    let id = DMatrix::<f64>::identity(g.nrows(), g.nrows());
    let target = if opts.faulty("hk") { -&id } else { id };
    r.residual("g_square", (&g * &g - target).norm());
    r.cases = 1;
    Ok(r.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> SuiteOptions {
        SuiteOptions { cases: 5, ..Default::default() }
    }

    #[test]
    fn all_suites_pass() {
        for s in SUITES {
            let r = run_suite(s, &quick()).unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn injected_faults_are_caught() {
        for s in SUITES {
            let opts = SuiteOptions { fault: Some(s.to_string()), ..quick() };
            let r = run_suite(s, &opts).unwrap();
            assert!(!r.pass, "{s} did not notice the fault");
        }
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", &quick()), Err(CliError::Config(_))));
    }
}
