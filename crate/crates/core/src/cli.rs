//! `ybforge` command-line front end.
//!
//! ```text
//! ybforge build|verify|reduce|calculus --config <file> [--out <dir>]
//!         [--which qybe|hecke|factor|all] [--action check|emit] [--tol <real>]
//! ```
//!
//! Exit codes: 0 all checks pass, 1 a check failed (reports written),
//! 2 invalid configuration, 3 numerical failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::braiding::{build_color_hecke, check_hecke, check_qybe, HeckeVariant};
use crate::calculus::{build_bcf_with, check_consistency, check_emitted_against_display, emit_relations, Scaling};
use crate::error::Error;
use crate::grading::{check_axioms, CommutationFactor, GradingGroup, DEFAULT_TOL};
use crate::linop::{GradedBasis, OperatorJson, TensorOperator};
use crate::superize::check_reduction;

pub const TOL_ENV: &str = "YBFORGE_TOL";
const FACTOR_SEED: u64 = 0x9e37_79b9_7f4a_7c15;
const FACTOR_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailed = 1,
    InvalidConfig = 2,
    Numerical = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    fn verdict(pass: bool) -> Self {
        if pass {
            ExitStatus::Pass
        } else {
            ExitStatus::CheckFailed
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ybforge", version, about = "Build and verify color Hecke R-matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the R-matrix as operator.json.
    Build(Common),
    /// Check factor axioms, braid relation and Hecke condition.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Which::All)]
        which: Which,
        /// Verify a previously built operator instead of rebuilding it.
        #[arg(long)]
        operator: Option<PathBuf>,
    },
    /// Compare the R-matrix with its super reduction.
    Reduce(Common),
    /// Differential calculus: consistency check or relation output.
    Calculus {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Action::Check)]
        action: Action,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Which {
    Qybe,
    Hecke,
    Factor,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Action {
    Check,
    Emit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        Complex64::new(c.re, c.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub moduli: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum FactorSpec {
    Trivial,
    Super,
    Exponents {
        #[serde(default)]
        s: Option<Vec<Vec<i64>>>,
        a: Vec<Vec<i64>>,
        z: ComplexSpec,
    },
    Omega {
        omega: Vec<Vec<i64>>,
        n: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisEntry {
    pub label: usize,
    pub grade: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub group: GroupSpec,
    pub factor: FactorSpec,
    pub basis: Vec<BasisEntry>,
    pub q: ComplexSpec,
    #[serde(default)]
    pub variant: HeckeVariant,
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Block scaling of the calculus operators.
    #[serde(default)]
    pub scaling: Scaling,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Job {
    pub factor: CommutationFactor,
    pub basis: GradedBasis,
    pub q: Complex64,
    pub variant: HeckeVariant,
    pub scaling: Scaling,
    pub tol: f64,
}

impl JobConfig {
    pub fn from_path(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Tolerance precedence: `tol_flag`, then the config, then `YBFORGE_TOL`,
    /// then the default.
    pub fn resolve(&self, tol_flag: Option<f64>) -> crate::Result<Job> {
        let tol = match tol_flag.or(self.tolerance) {
            Some(t) => t,
            None => match std::env::var(TOL_ENV) {
                Ok(s) => s.trim().parse().map_err(|_| Error::invalid(format!("{TOL_ENV}={s} is not a number")))?,
                Err(_) => DEFAULT_TOL,
            },
        };
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::invalid(format!("tolerance {tol} must be positive")));
        }
        let group = GradingGroup::new(self.group.moduli.clone())?;
        let factor = match &self.factor {
            FactorSpec::Trivial => CommutationFactor::trivial(group.clone()),
            FactorSpec::Super => {
                if group != GradingGroup::z2() {
                    return Err(Error::invalid(format!("supercommutation needs Z_2, got {group}")));
                }
                CommutationFactor::supercommutation()
            }
            FactorSpec::Exponents { s, a, z } => {
                let k = group.rank();
                let s = s.clone().unwrap_or_else(|| vec![vec![0; k]; k]);
                CommutationFactor::from_exponents(group.clone(), &s, a, (*z).into())?
            }
            FactorSpec::Omega { omega, n } => CommutationFactor::from_omega(group.clone(), omega, *n)?,
        };
        let mut labelled = Vec::with_capacity(self.basis.len());
        for entry in &self.basis {
            labelled.push((entry.label, group.element(&entry.grade)?));
        }
        let basis = GradedBasis::new(group, labelled)?;
        let q: Complex64 = self.q.into();
        if q.norm() == 0.0 || !q.re.is_finite() || !q.im.is_finite() {
            return Err(Error::invalid("q must be nonzero and finite"));
        }
        Ok(Job { factor, basis, q, variant: self.variant, scaling: self.scaling, tol })
    }
}

impl Job {
    pub fn build(&self) -> crate::Result<TensorOperator> {
        build_color_hecke(&self.factor, &self.basis, self.q, self.variant)
    }
}

fn status_of(e: &Error) -> ExitStatus {
    match e {
        Error::Singular { .. } | Error::Numerical(_) => ExitStatus::Numerical,
        _ => ExitStatus::InvalidConfig,
    }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    fs::write(dir.join(name), text)
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    check: &'a str,
    error: String,
    pass: bool,
}

/// Parses `args` (including the program name) and runs the job.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(s) => s.code(),
        Err((s, msg)) => {
            eprintln!("ybforge: {msg}");
            s.code()
        }
    }
}

type Outcome = Result<ExitStatus, (ExitStatus, String)>;

fn prepare(common: &Common) -> Result<Job, (ExitStatus, String)> {
    let config = JobConfig::from_path(&common.config).map_err(|m| (ExitStatus::InvalidConfig, m))?;
    let job = config.resolve(common.tol).map_err(|e| (ExitStatus::InvalidConfig, e.to_string()))?;
    fs::create_dir_all(&common.out)
        .map_err(|e| (ExitStatus::Numerical, format!("cannot create {}: {e}", common.out.display())))?;
    Ok(job)
}

fn io_err(e: std::io::Error) -> (ExitStatus, String) {
    (ExitStatus::Numerical, format!("write failed: {e}"))
}

/// On a numerical error writes an error report; config errors pass through.
fn guard<T>(out: &Path, check: &str, file: &str, r: crate::Result<T>) -> Result<T, (ExitStatus, String)> {
    r.map_err(|e| {
        let status = status_of(&e);
        if status == ExitStatus::Numerical {
            let report = ErrorReport { check, error: e.to_string(), pass: false };
            let _ = write_json(out, file, &report);
        }
        (status, e.to_string())
    })
}

fn execute(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build(common) => {
            let job = prepare(&common)?;
            let r = guard(&common.out, "build", "report_build.json", job.build())?;
            write_json(&common.out, "operator.json", &r.to_json()).map_err(io_err)?;
            println!("operator.json: dim {} arity {} nnz {}", r.dim(), r.arity(), r.nnz());
            Ok(ExitStatus::Pass)
        }
        Command::Verify { common, which, operator } => {
            let job = prepare(&common)?;
            let out = &common.out;
            let mut pass = true;
            if matches!(which, Which::Factor | Which::All) {
                let mut rng = ChaCha8Rng::seed_from_u64(FACTOR_SEED);
                let rep = guard(out, "factor", "report_factor.json", check_axioms(&job.factor, &mut rng, FACTOR_SAMPLES, job.tol))?;
                write_json(out, "report_factor.json", &rep).map_err(io_err)?;
                println!("factor: {}", verdict(rep.pass));
                pass &= rep.pass;
            }
            if matches!(which, Which::Qybe | Which::Hecke | Which::All) {
                let r = match &operator {
                    Some(path) => {
                        let text = fs::read_to_string(path)
                            .map_err(|e| (ExitStatus::InvalidConfig, format!("cannot read {}: {e}", path.display())))?;
                        let json: OperatorJson = serde_json::from_str(&text)
                            .map_err(|e| (ExitStatus::InvalidConfig, format!("{}: {e}", path.display())))?;
                        let r = TensorOperator::from_json(&json).map_err(|e| (ExitStatus::InvalidConfig, e.to_string()))?;
                        r.check_basis(&job.basis).map_err(|e| (ExitStatus::InvalidConfig, e.to_string()))?;
                        r
                    }
                    None => guard(out, "build", "report_build.json", job.build())?,
                };
                if matches!(which, Which::Qybe | Which::All) {
                    let rep = guard(out, "qybe", "report_qybe.json", check_qybe(&r, job.tol))?;
                    write_json(out, "report_qybe.json", &rep).map_err(io_err)?;
                    println!("qybe: {} (residual {:e})", verdict(rep.pass), rep.residual);
                    pass &= rep.pass;
                }
                if matches!(which, Which::Hecke | Which::All) {
                    let rep = guard(out, "hecke", "report_hecke.json", check_hecke(&r, &job.basis, job.q, job.tol))?;
                    write_json(out, "report_hecke.json", &rep).map_err(io_err)?;
                    println!("hecke: {}", verdict(rep.pass));
                    pass &= rep.pass;
                }
            }
            Ok(ExitStatus::verdict(pass))
        }
        Command::Reduce(common) => {
            let job = prepare(&common)?;
            let out = &common.out;
            let r = guard(out, "build", "report_build.json", job.build())?;
            match check_reduction(&r, &job.basis, &job.factor, job.q, job.tol) {
                Ok(rep) => {
                    write_json(out, "report_reduction.json", &rep).map_err(io_err)?;
                    println!("reduction: {} (residual {:e})", verdict(rep.pass), rep.max_residual());
                    Ok(ExitStatus::verdict(rep.pass))
                }
                Err(e @ Error::VariantMismatch(_)) => {
                    let report = ErrorReport { check: "reduction", error: e.to_string(), pass: false };
                    write_json(out, "report_reduction.json", &report).map_err(io_err)?;
                    println!("reduction: FAIL ({e})");
                    Ok(ExitStatus::CheckFailed)
                }
                Err(e) => guard(out, "reduction", "report_reduction.json", Err(e)),
            }
        }
        Command::Calculus { common, action } => {
            let job = prepare(&common)?;
            let out = &common.out;
            let r = guard(out, "build", "report_build.json", job.build())?;
            let t = guard(out, "calculus", "report_calculus.json", build_bcf_with(&r, &job.basis, &job.factor, job.q, job.scaling))?;
            match action {
                Action::Check => {
                    let rep = guard(out, "calculus", "report_calculus.json", check_consistency(&t, &job.factor, job.tol))?;
                    write_json(out, "report_calculus.json", &rep).map_err(io_err)?;
                    for c in &rep.conditions {
                        println!("{}: {} (residual {:e})", c.name, verdict(c.pass), c.residual);
                    }
                    Ok(ExitStatus::verdict(rep.pass))
                }
                Action::Emit => {
                    let rs = guard(out, "relations", "report_relations.json", emit_relations(&t, &job.factor))?;
                    write_json(out, "relations.json", &rs).map_err(io_err)?;
                    fs::write(out.join("relations.txt"), rs.to_text()).map_err(io_err)?;
                    if rs.fallback {
                        eprintln!("ybforge: warning: some quadratic relations emitted as raw generators");
                    }
                    println!("relations.json, relations.txt written");
                    let standard = GradedBasis::standard(job.basis.group().clone());
                    if job.basis == standard && job.scaling == Scaling::FirstFactor {
                        let rep = guard(out, "display", "report_display.json", check_emitted_against_display(&rs, &job.factor, job.q, job.tol))?;
                        write_json(out, "report_display.json", &rep).map_err(io_err)?;
                        println!("display: {}", verdict(rep.pass));
                    }
                    Ok(ExitStatus::Pass)
                }
            }
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}
