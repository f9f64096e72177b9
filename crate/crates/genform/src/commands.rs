//! Subcommands and their reports.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genform_core::clifford::cl2_dim;
use genform_core::orbit::{
    asd_even_check, cy_kernel_fibers, ellipticity_scan, fiber_complex, generalized_metric, isotropy_algebra,
    lambda2_decompose, sl_expected_dims,
};
use genform_core::structures::{hk_relations, u_spaces, Kind};
use genform_core::torus::deform::support;
use genform_core::torus::{ddj_check, sl_sequence_check, topological_check, DeformationSeries, Deformer, HodgePackage};
use genform_core::{FormTuple, C64};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::format::{A1Json, FourierCl2Json, JobJson, StructureJson};
use crate::suites::{run_suite, SuiteOptions, SUITES};

#[derive(Parser, Debug)]
#[command(name = "genform", version, about = "Exact computational lab for generalized geometric structures")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    pub format: OutputFormat,
    /// Print wall time on stderr.
    #[arg(long, global = true)]
    pub timing: bool,
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Override the pass tolerance of the command.
    #[arg(long, global = true, value_parser = positive_f64)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the identity suites.
    Verify {
        /// Suite to run (repeatable); all suites when omitted.
        #[arg(long = "suite")]
        suites: Vec<String>,
        /// Randomized cases per dimension for the Clifford suite.
        #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
        cases: u64,
        /// Plant a sign error in the oracle of the named suite.
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Isotropy, fiber dimensions, ellipticity and topological scans of a structure.
    Analyze {
        #[command(flatten)]
        structure: StructureArgs,
        /// Frequency box for the topological check (default 2 for dim V ≤ 4, 1 up to
        /// dim V = 7, and 0 above, where one box of directions takes minutes).
        #[arg(long)]
        trunc: Option<u32>,
        /// Random unit covectors in the ellipticity scan.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Integer directions with |m|∞ up to this bound (default 3 for dim V ≤ 6, else 1).
        #[arg(long)]
        max_freq: Option<i32>,
    },
    /// Power-series deformation of a constant structure on a flat torus.
    Deform {
        /// Job file (JSON).
        job: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        order: Option<u64>,
        #[arg(long)]
        trunc: Option<u32>,
        /// Include the Fourier coefficients of every a_k.
        #[arg(long)]
        fields: bool,
    },
    /// Splitting of forms adapted to the structure.
    Decompose {
        #[command(flatten)]
        structure: StructureArgs,
    },
    /// The dd^J property frequency by frequency, and the dimension identity.
    Ddj {
        #[command(flatten)]
        structure: StructureArgs,
        #[arg(long, default_value_t = 2)]
        trunc: u32,
    },
}

#[derive(Args, Debug, Clone)]
pub struct StructureArgs {
    /// Structure file (JSON).
    #[arg(long, conflicts_with = "kind")]
    pub structure: Option<PathBuf>,
    /// sl, cy, hk, g2 or spin7.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub n: usize,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("'{s}' is not a positive number")),
    }
}

impl StructureArgs {
    pub fn load(&self) -> Result<StructureJson, CliError> {
        match (&self.structure, &self.kind) {
            (Some(path), _) => Ok(serde_json::from_str(&read(path)?)?),
            (None, Some(kind)) => {
                let kind: Kind = serde_json::from_value(Value::String(kind.to_lowercase()))
                    .map_err(|_| CliError::Config(format!("unknown kind '{kind}'")))?;
                Ok(StructureJson { kind, n: self.n, transforms: Vec::new() })
            }
            (None, None) => Err(CliError::Config("give --structure FILE or --kind".into())),
        }
    }
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// A finished command: its report and whether every check passed.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
    pub failure: Option<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            4
        }
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Verify { suites, cases, inject_fault } => verify(cli, suites, *cases as usize, inject_fault.clone()),
        Command::Analyze { structure, trunc, samples, max_freq } => analyze(cli, &structure.load()?, *trunc, *samples, *max_freq),
        Command::Deform { job, order, trunc, fields } => {
            let mut job: JobJson = serde_json::from_str(&read(job)?)?;
            if let Some(k) = order {
                job.order = *k as usize;
            }
            if let Some(t) = trunc {
                job.trunc = *t;
            }
            deform(cli, &job, *fields)
        }
        Command::Decompose { structure } => decompose(&structure.load()?),
        Command::Ddj { structure, trunc } => ddj(&structure.load()?, *trunc),
    }
}

pub fn verify(cli: &Cli, names: &[String], cases: usize, fault: Option<String>) -> Result<Outcome, CliError> {
    let selected: Vec<String> = if names.is_empty() { SUITES.iter().map(|s| s.to_string()).collect() } else { names.to_vec() };
    let opts = SuiteOptions { seed: cli.seed, cases, tol: cli.tol, fault };
    let mut reports = Vec::new();
    let mut failure = None;
    for name in &selected {
        let r = run_suite(name, &opts)?;
        if failure.is_none() && !r.pass {
            failure = Some(format!("suite {}: {}", r.name, r.failures.join("; ")));
        }
        reports.push(r);
    }
    let pass = failure.is_none();
    let report = json!({ "command": "verify", "seed": cli.seed, "suites": reports, "pass": pass });
    Ok(Outcome { report, pass, failure })
}

#[derive(Serialize)]
struct FiberDims {
    /// `E^{-1}, .., E³`.
    real: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    complex: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected_real: Option<Vec<usize>>,
    nesting_residual: f64,
}

pub fn analyze(cli: &Cli, sj: &StructureJson, trunc: Option<u32>, samples: usize, max_freq: Option<i32>) -> Result<Outcome, CliError> {
    let spec = sj.to_spec()?;
    let phi = spec.build()?;
    let dim = spec.dim();
    let mut checks: Vec<(&str, bool)> = Vec::new();

    let iso = isotropy_algebra(&phi)?;
    let fc = fiber_complex(&phi, 3)?;
    let expected_real = (spec.kind == Kind::Sl).then(|| sl_expected_dims(spec.n, 3));
    let dims = fc.dims();
    if let Some(e) = &expected_real {
        checks.push(("fiber_dims", dims[1..] == e[1..]));
    }
    let fiber = FiberDims { real: dims, complex: fc.complex_dims.clone(), expected_real, nesting_residual: fc.nesting_residual() };

    let max_freq = max_freq.unwrap_or(if dim <= 6 { 3 } else { 1 });
    let scan = ellipticity_scan(&fc, &[1, 2], samples, max_freq, cli.seed)?;
    let trunc = trunc.unwrap_or(match dim {
        0..=4 => 2,
        5..=7 => 1,
        _ => 0,
    });
    let topo = topological_check(&HodgePackage::from_fiber(&fc), trunc, &[1, 2]);

    let mut extras = serde_json::Map::new();
    match spec.kind {
        Kind::Spin7 => {
            let asd = asd_even_check(&spec)?;
            checks.push(("asd_even", asd.pass));
            let l2 = lambda2_decompose()?;
            checks.push(("lambda2", l2.report.pass));
            extras.insert("asd_even".into(), to_value(&asd));
            extras.insert("lambda2".into(), to_value(&l2.report));
            extras.insert("metric".into(), to_value(&generalized_metric(&spec)?.residuals()));
        }
        Kind::Hk => {
            let hk = hk_relations(&phi)?;
            checks.push(("hk_relations", hk.pass));
            extras.insert("hk_relations".into(), to_value(&hk));
        }
        Kind::Cy => {
            let cy = cy_kernel_fibers(&phi)?;
            checks.push(("cy_kernel", cy.pass));
            extras.insert("cy_kernel".into(), to_value(&cy));
        }
        Kind::Sl | Kind::G2 => {}
    }
    let pass = checks.iter().all(|c| c.1);
    let failure = checks.iter().find(|c| !c.1).map(|c| format!("{} failed", c.0));
    let report = json!({
        "command": "analyze",
        "structure": sj,
        "dim_v": dim,
        "isotropy": { "dim": iso.dim(), "breakdown": iso.breakdown, "closure_residual": iso.closure_residual },
        "fiber_dims": fiber,
        "ellipticity": scan,
        "topological": topo,
        "extras": extras,
        "checks": checks.iter().map(|(k, v)| json!({ "name": k, "pass": v })).collect::<Vec<_>>(),
        "pass": pass,
    });
    Ok(Outcome { report, pass, failure })
}

/// Default tolerance on the oracle residual of a deformation run.
pub const DEFORM_RESIDUAL_TOL: f64 = 1e-8;

fn random_coords(rng: &mut ChaCha8Rng, len: usize, scale: f64) -> DVector<C64> {
    DVector::from_fn(len, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
}

pub fn deform(cli: &Cli, job: &JobJson, with_fields: bool) -> Result<Outcome, CliError> {
    if job.order == 0 {
        return Err(CliError::Config("order must be positive".into()));
    }
    let spec = job.structure.to_spec()?;
    let deformer = Deformer::for_spec(&spec)?;
    let dim = spec.dim();
    let a1 = match &job.a1 {
        A1Json::Exact { exact_mode } => {
            if exact_mode.m.len() != dim {
                return Err(CliError::Config(format!("exact_mode.m must have {dim} entries")));
            }
            let len = deformer.package().rank(0);
            let coords = match &exact_mode.e0 {
                Some(c) if c.len() != len => return Err(CliError::Config(format!("exact_mode.e0 must have {len} entries"))),
                Some(c) => DVector::from_iterator(len, c.iter().map(|&(re, im)| C64::new(re, im))) * C64::new(exact_mode.scale, 0.0),
                None => random_coords(&mut ChaCha8Rng::seed_from_u64(cli.seed), len, exact_mode.scale),
            };
            deformer.exact_mode(&exact_mode.m, &coords, job.trunc)?
        }
        A1Json::Field(f) => {
            if f.n != dim {
                return Err(CliError::Config(format!("a1.n must be {dim}")));
            }
            if f.modes.iter().any(|m| m.coords.len() != cl2_dim(dim)) {
                return Err(CliError::Config(format!("a1 coordinates have length {}", cl2_dim(dim))));
            }
            // the run itself rejects modes the truncation cannot hold
            let widest = f.modes.iter().flat_map(|m| m.m.iter().map(|x| x.unsigned_abs())).max().unwrap_or(0);
            FourierCl2Json { trunc: job.trunc.max(widest), ..f.clone() }.to_field()?
        }
    };
    let series = deformer.run(&a1, job.order, job.trunc)?;
    let tol = cli.tol.or(job.tolerances.residual).unwrap_or(DEFORM_RESIDUAL_TOL);
    Ok(deform_outcome(&job.structure, &series, tol, with_fields))
}

fn deform_outcome(structure: &StructureJson, s: &DeformationSeries, tol: f64, with_fields: bool) -> Outcome {
    let max_residual = s.max_residual();
    let pass = max_residual <= tol;
    let failure = (!pass).then(|| format!("oracle residual {max_residual:.3e} exceeds {tol:.1e}"));
    let mut report = json!({
        "command": "deform",
        "structure": structure,
        "route": s.route,
        "order": s.order,
        "trunc": s.trunc,
        "unobstructed": true,
        "field_norms": s.fields.iter().map(|f| f.norm()).collect::<Vec<_>>(),
        "support": support(s).len(),
        "obstruction_norms": s.obstruction_norms,
        "relative_harmonic_norms": s.relative_harmonic_norms(),
        "residual_norms": s.residual_norms,
        "max_residual": max_residual,
        "tolerance": tol,
        "e2_residual": s.e2_residual,
        "gauge_residual": s.gauge_residual,
        "correction_residual": s.correction_residual,
        "pass": pass,
    });
    if with_fields {
        report["fields"] = to_value(&s.fields.iter().map(FourierCl2Json::from_field).collect::<Vec<_>>());
    }
    Outcome { report, pass, failure }
}

pub fn decompose(sj: &StructureJson) -> Result<Outcome, CliError> {
    let spec = sj.to_spec()?;
    let phi = spec.build()?;
    let mut report = json!({ "command": "decompose", "structure": sj });
    let pass = match spec.kind {
        Kind::Spin7 => {
            let l2 = lambda2_decompose()?;
            let asd = asd_even_check(&spec)?;
            report["lambda2"] = json!({ "dim_7": l2.l7.rank(), "dim_21": l2.l21.rank(), "report": l2.report });
            report["asd_even"] = to_value(&asd);
            l2.report.pass && asd.pass
        }
        Kind::G2 => {
            return Err(CliError::Config("decompose supports sl, cy, hk and spin7".into()));
        }
        _ => {
            // U^p of every complex spinor component
            let comps: Vec<Value> = phi
                .components
                .iter()
                .map(|c| {
                    let u = u_spaces(c)?;
                    let m = (u.u.len() as i32 - 1) / 2;
                    Ok(u.u.iter().enumerate().map(|(i, s)| json!({ "p": i as i32 - m, "dim": s.rank() })).collect::<Value>())
                })
                .collect::<Result<_, CliError>>()?;
            let total_ok = comps.iter().all(|c| {
                c.as_array().is_some_and(|a| a.iter().map(|e| e["dim"].as_u64().unwrap_or(0)).sum::<u64>() == 1 << phi.n())
            });
            report["u_dims"] = Value::Array(comps);
            total_ok
        }
    };
    report["pass"] = json!(pass);
    let failure = (!pass).then(|| "decomposition does not span the forms".to_string());
    Ok(Outcome { report, pass, failure })
}

pub fn ddj(sj: &StructureJson, trunc: u32) -> Result<Outcome, CliError> {
    let spec = sj.to_spec()?;
    if spec.kind != Kind::Sl {
        return Err(CliError::Config("ddj runs on generalized SL structures".into()));
    }
    let phi: FormTuple = spec.build()?;
    let d = ddj_check(&phi, trunc)?;
    let seq = sl_sequence_check(&phi)?;
    let pass = d.pass && seq.pass;
    let failure = (!pass).then(|| {
        if d.pass {
            "dimension identity fails".to_string()
        } else {
            format!("dd^J fails at {} frequencies", d.failures.len())
        }
    });
    let report = json!({ "command": "ddj", "structure": sj, "ddj": d, "sequence": seq, "pass": pass });
    Ok(Outcome { report, pass, failure })
}

/// Replaces `-0.0` (empty float sums) by `0.0` so reports read cleanly.
pub fn normalize_zeros(v: &mut Value) {
    match v {
        Value::Number(n) if n.as_f64() == Some(0.0) && n.is_f64() => *v = json!(0.0),
        Value::Array(a) => a.iter_mut().for_each(normalize_zeros),
        Value::Object(m) => m.values_mut().for_each(normalize_zeros),
        _ => {}
    }
}

/// Human-readable rendering of a report.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    text_into(v, 0, &mut out);
    out
}

fn scalar_text(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(if *b { "yes".into() } else { "no".into() }),
        Value::Number(n) => Some(match n.as_f64() {
            Some(x) if n.is_f64() && x != 0.0 && !(1e-3..1e6).contains(&x.abs()) => format!("{x:.3e}"),
            _ => n.to_string(),
        }),
        Value::String(s) => Some(s.clone()),
        Value::Array(a) if a.iter().all(|x| !x.is_object() && !x.is_array()) => {
            Some(format!("[{}]", a.iter().filter_map(scalar_text).collect::<Vec<_>>().join(", ")))
        }
        _ => None,
    }
}

fn text_into(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                match scalar_text(x) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        text_into(x, indent + 1, out);
                    }
                }
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                match scalar_text(x) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        text_into(x, indent + 1, out);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar_text(other).unwrap_or_default())),
    }
}

/// Parses arguments, runs the command and prints the report; returns the exit code.
pub fn main_with(cli: Cli) -> i32 {
    let start = Instant::now();
    let result = run(&cli);
    let elapsed = start.elapsed();
    // a closed stdout (e.g. piped into `head`) is not an error of the run
    let mut stdout = std::io::stdout().lock();
    let code = match result {
        Ok(mut outcome) => {
            normalize_zeros(&mut outcome.report);
            let _ = match cli.format {
                OutputFormat::Json => writeln!(stdout, "{}", serde_json::to_string_pretty(&outcome.report).expect("json")),
                OutputFormat::Text => write!(stdout, "{}wall_time_s: {:.3}\n", render_text(&outcome.report), elapsed.as_secs_f64()),
            };
            if let Some(f) = &outcome.failure {
                eprintln!("genform: {f}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            let code = e.exit_code();
            if cli.format == OutputFormat::Json {
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&json!({ "error": e.to_string(), "exit_code": code })).expect("json"));
            }
            eprintln!("genform: {e}");
            code
        }
    };
    if cli.timing {
        eprintln!("wall time: {:.3} s", elapsed.as_secs_f64());
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("genform").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_flags() {
        let c = cli(&["--format", "text", "--seed", "3", "verify", "--suite", "hk", "--suite", "spin7"]);
        assert_eq!(c.format, OutputFormat::Text);
        assert!(matches!(c.command, Command::Verify { ref suites, .. } if suites.len() == 2));
        assert!(Cli::try_parse_from(["genform", "--tol", "-1", "verify"]).is_err());
        assert!(Cli::try_parse_from(["genform", "deform", "job.json", "--order", "0"]).is_err());
    }

    #[test]
    fn structure_from_kind() {
        let s = StructureArgs { structure: None, kind: Some("Spin7".into()), n: 0 }.load().unwrap();
        assert_eq!(s.kind, Kind::Spin7);
        assert!(StructureArgs { structure: None, kind: Some("k3".into()), n: 0 }.load().is_err());
        assert!(StructureArgs { structure: None, kind: None, n: 0 }.load().is_err());
    }

    #[test]
    fn decompose_sl_and_hk() {
        let o = decompose(&StructureJson { kind: Kind::Sl, n: 2, transforms: vec![] }).unwrap();
        assert!(o.pass);
        let dims: Vec<u64> = o.report["u_dims"][0].as_array().unwrap().iter().map(|e| e["dim"].as_u64().unwrap()).collect();
        assert_eq!(dims, [1, 4, 6, 4, 1]);
        let o = decompose(&StructureJson { kind: Kind::Hk, n: 1, transforms: vec![] }).unwrap();
        assert!(o.pass && o.report["u_dims"].as_array().unwrap().len() == 3);
    }

    #[test]
    fn negative_zero_normalized() {
        let mut v = json!({ "a": [-0.0, 1.0], "b": { "c": -0.0 } });
        normalize_zeros(&mut v);
        assert_eq!(serde_json::to_string(&v).unwrap(), r#"{"a":[0.0,1.0],"b":{"c":0.0}}"#);
    }

    #[test]
    fn text_rendering() {
        let t = render_text(&json!({ "a": 1, "b": { "c": [1, 2], "d": 1.5e-12 }, "e": [{ "f": true }] }));
        assert_eq!(t, "a: 1\nb:\n  c: [1, 2]\n  d: 1.500e-12\ne:\n  [0]\n    f: yes\n");
    }
}
