//! JSON mappings for structures, `CL²` elements and Fourier fields.

use genform_core::clifford::{cl2_dim, Cl2Element};
use genform_core::structures::{Kind, StructureSpec};
use genform_core::torus::{FourierCL2Field, Freq};
use genform_core::C64;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// `{"kind": "sl", "n": 2, "transforms": [..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StructureJson {
    pub kind: Kind,
    #[serde(default)]
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<Cl2Json>,
}

/// A `CL²` element. Index pairs are 1-based; `b` and `beta` entries `[i, j, v]`
/// set the `i<j` component to `v` (a reversed pair sets it to `−v`).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Cl2Json {
    #[serde(default)]
    pub scalar: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub endo: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta: Vec<(usize, usize, f64)>,
}

fn pair_index(n: usize, i: usize, j: usize) -> Result<(usize, f64), CliError> {
    if i == 0 || j == 0 || i > n || j > n || i == j {
        return Err(CliError::Config(format!("invalid index pair ({i}, {j}) for n = {n}")));
    }
    let (a, b, s) = if i < j { (i - 1, j - 1, 1.0) } else { (j - 1, i - 1, -1.0) };
    // position of (a, b) in the lexicographic list of pairs
    let k = a * n - a * (a + 1) / 2 + (b - a - 1);
    Ok((k, s))
}

impl Cl2Json {
    pub fn to_element(&self, n: usize) -> Result<Cl2Element, CliError> {
        let mut v = DVector::zeros(cl2_dim(n));
        v[0] = self.scalar;
        if !self.endo.is_empty() {
            if self.endo.len() != n || self.endo.iter().any(|r| r.len() != n) {
                return Err(CliError::Config(format!("endo must be {n}x{n}")));
            }
            for (i, row) in self.endo.iter().enumerate() {
                for (j, &x) in row.iter().enumerate() {
                    v[1 + i * n + j] = x;
                }
            }
        }
        let off = 1 + n * n;
        let m = n * (n - 1) / 2;
        for &(i, j, x) in &self.b {
            let (k, s) = pair_index(n, i, j)?;
            v[off + k] += s * x;
        }
        for &(i, j, x) in &self.beta {
            let (k, s) = pair_index(n, i, j)?;
            v[off + m + k] += s * x;
        }
        Ok(Cl2Element::from_coords(n, &v)?)
    }

    pub fn from_element(a: &Cl2Element) -> Self {
        let n = a.n();
        let v = a.coords();
        let endo = (0..n).map(|i| (0..n).map(|j| v[1 + i * n + j]).collect()).collect();
        let off = 1 + n * n;
        let m = n * (n - 1) / 2;
        let mut b = Vec::new();
        let mut beta = Vec::new();
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                if v[off + k] != 0.0 {
                    b.push((i + 1, j + 1, v[off + k]));
                }
                if v[off + m + k] != 0.0 {
                    beta.push((i + 1, j + 1, v[off + m + k]));
                }
                k += 1;
            }
        }
        Cl2Json { scalar: v[0], endo, b, beta }
    }
}

impl StructureJson {
    pub fn to_spec(&self) -> Result<StructureSpec, CliError> {
        let mut spec = StructureSpec::new(self.kind, self.n);
        let d = spec.dim();
        spec.transforms = self.transforms.iter().map(|t| t.to_element(d)).collect::<Result<_, _>>()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &StructureSpec) -> Self {
        StructureJson { kind: spec.kind, n: spec.n, transforms: spec.transforms.iter().map(Cl2Json::from_element).collect() }
    }
}

/// One Fourier coefficient: `coords` are the complex `CL²` coordinates
/// `[scalar, A (row-major), b_{i<j}, β_{i<j}]` as `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeJson {
    pub m: Freq,
    pub coords: Vec<(f64, f64)>,
}

/// A `CL²` field on `Tⁿ`. With `real` set only one of each `±m` pair needs to
/// be listed; the conjugate is filled in.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierCl2Json {
    pub n: usize,
    pub trunc: u32,
    #[serde(default = "yes")]
    pub real: bool,
    pub modes: Vec<ModeJson>,
}

fn yes() -> bool {
    true
}

impl FourierCl2Json {
    pub fn to_field(&self) -> Result<FourierCL2Field, CliError> {
        let dim = cl2_dim(self.n);
        let mut f = FourierCL2Field::zero(self.n, self.trunc);
        if !self.real {
            f = f.complexified();
        }
        for mode in &self.modes {
            if mode.m.len() != self.n {
                return Err(CliError::Config(format!("frequency {:?} has the wrong length", mode.m)));
            }
            if mode.coords.len() != dim {
                return Err(CliError::Config(format!("mode {:?}: expected {dim} coordinates, found {}", mode.m, mode.coords.len())));
            }
            let v = DVector::from_iterator(dim, mode.coords.iter().map(|&(re, im)| C64::new(re, im)));
            if self.real {
                let zero = mode.m.iter().all(|&x| x == 0);
                let v = if zero { v.map(|z| C64::new(z.re, 0.0)) } else { v };
                if !zero {
                    let neg: Freq = mode.m.iter().map(|x| -x).collect();
                    f.set(&neg, v.map(|z| z.conj()))?;
                }
                f.set(&mode.m, v)?;
            } else {
                f.set(&mode.m, v)?;
            }
        }
        Ok(f)
    }

    pub fn from_field(f: &FourierCL2Field) -> Self {
        let modes = f
            .iter()
            .map(|(m, v)| ModeJson { m: m.clone(), coords: v.iter().map(|z| (z.re, z.im)).collect() })
            .collect();
        FourierCl2Json { n: f.n(), trunc: f.trunc(), real: f.is_real(), modes }
    }
}

/// Ways to give `a₁` in a job.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum A1Json {
    /// The closed field whose action is `d(e^{2πi m·x}e) + c.c.` for `e` in
    /// `E⁰` with the given basis coordinates (seeded random when omitted).
    Exact { exact_mode: ExactModeJson },
    Field(FourierCl2Json),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactModeJson {
    pub m: Freq,
    #[serde(default)]
    pub e0: Option<Vec<(f64, f64)>>,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    0.05
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default)]
    pub residual: Option<f64>,
}

/// `{"structure": .., "a1": .., "order": K, "trunc": N, "tolerances": {..}}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JobJson {
    pub structure: StructureJson,
    pub a1: A1Json,
    pub order: usize,
    pub trunc: u32,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cl2_roundtrip() {
        let j = Cl2Json { scalar: 0.5, endo: vec![], b: vec![(1, 3, 0.7), (4, 2, 0.1)], beta: vec![(2, 3, -1.0)] };
        let a = j.to_element(4).unwrap();
        assert_eq!(a.two_form.coeff(0b0101).re, 0.7);
        assert_eq!(a.two_form.coeff(0b1010).re, -0.1);
        assert_eq!(a.two_vector[(1, 2)], -1.0);
        let back = Cl2Json::from_element(&a).to_element(4).unwrap();
        assert_eq!(back.coords(), a.coords());
    }

    #[test]
    fn bad_pairs_rejected() {
        let j = Cl2Json { b: vec![(0, 1, 1.0)], ..Default::default() };
        assert!(j.to_element(3).is_err());
        let j = Cl2Json { b: vec![(2, 2, 1.0)], ..Default::default() };
        assert!(j.to_element(3).is_err());
    }

    #[test]
    fn structure_json() {
        let s: StructureJson = serde_json::from_str(r#"{"kind":"spin7"}"#).unwrap();
        assert_eq!(s.to_spec().unwrap().dim(), 8);
        let s: StructureJson = serde_json::from_str(r#"{"kind":"sl","n":2,"transforms":[{"b":[[1,2,0.3]]}]}"#).unwrap();
        assert_eq!(s.to_spec().unwrap().transforms.len(), 1);
        let s: StructureJson = serde_json::from_str(r#"{"kind":"sl"}"#).unwrap();
        assert!(s.to_spec().is_err());
    }

    #[test]
    fn real_field_fills_conjugates() {
        let dim = cl2_dim(2);
        let j = FourierCl2Json {
            n: 2,
            trunc: 1,
            real: true,
            modes: vec![ModeJson { m: vec![1, 0], coords: vec![(0.1, 0.2); dim] }],
        };
        let f = j.to_field().unwrap();
        assert_eq!(f.coeff(&[-1, 0]).unwrap()[0], C64::new(0.1, -0.2));
        let back = FourierCl2Json::from_field(&f).to_field().unwrap();
        assert_eq!(back.coeff(&[1, 0]), f.coeff(&[1, 0]));
    }

    proptest! {
        #[test]
        fn cl2_coords_roundtrip(v in prop::collection::vec(-2.0f64..2.0, cl2_dim(4))) {
            let a = Cl2Element::from_coords(4, &DVector::from_vec(v)).unwrap();
            let j = Cl2Json::from_element(&a);
            let text = serde_json::to_string(&j).unwrap();
            let back: Cl2Json = serde_json::from_str(&text).unwrap();
            prop_assert!((back.to_element(4).unwrap().coords() - a.coords()).amax() < 1e-14);
        }
    }
}
