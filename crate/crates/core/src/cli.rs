//! Command-line front end: JSON run configurations, dispatch to the library
//! checks, provenance stamping and the deterministic reproduction suite.

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::embed::{
    check_efp_limit, check_finite_embedding, embed_point, embedding_residual, EmbeddingMap,
};
use crate::equiv::{
    classify_algebraic, classify_isometric, classify_multiplier_biholomorphic,
    compare_sequences_bounded_ratio, composition_blocks, linear_isometric_equivalence,
    unitary_equivalence,
};
use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, psd_certificate, random_ball_point, random_unitary};
use crate::moebius::{check_mobius_samples, hyperbolic_orbit};
use crate::multop::multiplier_norm;
use crate::number::Number;
use crate::pick::{
    bisect_flip, extremal_multiplier_eval, extremal_value, is_feasible, pick_matrix, PickProblem,
};
use crate::poly::{monomial_count, HomogeneousPolynomial, Term};
use crate::report::{Provenance, Report, Status};
use crate::series::{
    certify_np, check_np_necessary, classify_domain, np_coefficients, CoefficientSequence, Domain,
    NpVerdict, SeriesKernel, Tail,
};
use crate::variety::{lines_to_ideal, HomogeneousIdeal, SubspaceUnion, Variety};
use crate::{CMatrix, Point, C64};

/// Name of the generator recorded in every provenance block.
pub const RNG_NAME: &str = "ChaCha8Rng";

pub const DEFAULT_TRUNCATION: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Certify,
    Pick,
    Extremal,
    Embed,
    Norms,
    Classify,
    MobiusCheck,
    Reproduce,
}

#[derive(Debug, Parser)]
#[command(
    name = "cnp",
    version,
    about = "Checks for complete Nevanlinna-Pick kernels on the unit ball"
)]
pub struct Args {
    /// Command to run; overrides the `command` field of the config.
    #[arg(value_enum)]
    pub command: Option<CommandName>,
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Series truncation degree; overrides the config.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// RNG seed for sampled checks; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Emit canonical JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Print nothing; only the exit code reports the outcome.
    #[arg(long)]
    pub quiet: bool,
    /// Also write the JSON reports to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// `[re, im]`.
pub type ComplexWire = [f64; 2];

fn point_from_wire(p: &[ComplexWire]) -> Point {
    Point::from_iterator(p.len(), p.iter().map(|&[re, im]| C64::new(re, im)))
}

fn complex_from_wire([re, im]: ComplexWire) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    pub dim: usize,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VarietySpec {
    /// Union of the lines through the given directions.
    Lines { directions: Vec<Vec<ComplexWire>> },
    /// Union of subspaces, each spanned by a list of vectors.
    Subspaces {
        dim: usize,
        pieces: Vec<Vec<Vec<ComplexWire>>>,
    },
    /// Homogeneous ideal given by generators.
    Ideal {
        dim: usize,
        generators: Vec<Vec<Term>>,
        #[serde(default)]
        radical: bool,
    },
}

impl VarietySpec {
    pub fn build(&self) -> Result<Variety> {
        match self {
            VarietySpec::Ideal {
                dim,
                generators,
                radical,
            } => {
                let gens = generators
                    .iter()
                    .map(|t| HomogeneousPolynomial::from_terms(*dim, t))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Variety::Ideal(HomogeneousIdeal::new(*dim, gens, *radical)?))
            }
            _ => Ok(Variety::Union(self.union()?)),
        }
    }

    pub fn union(&self) -> Result<SubspaceUnion> {
        match self {
            VarietySpec::Lines { directions } => {
                let pts: Vec<Point> = directions.iter().map(|d| point_from_wire(d)).collect();
                let dim = pts.first().map_or(0, |p| p.len());
                SubspaceUnion::lines(dim, &pts)
            }
            VarietySpec::Subspaces { dim, pieces } => {
                let frames = pieces
                    .iter()
                    .map(|vecs| {
                        CMatrix::from_fn(*dim, vecs.len(), |i, j| {
                            complex_from_wire(vecs[j].get(i).copied().unwrap_or([0.0, 0.0]))
                        })
                    })
                    .collect();
                SubspaceUnion::new(*dim, frames)
            }
            VarietySpec::Ideal { .. } => Err(Error::Config(
                "field `varieties`: equivalence checks need `lines` or `subspaces`, not an ideal"
                    .into(),
            )),
        }
    }
}

fn default_truncation() -> usize {
    DEFAULT_TRUNCATION
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub command: Option<CommandName>,
    #[serde(default)]
    pub kernels: Vec<CoefficientSequence>,
    #[serde(default)]
    pub varieties: Vec<VarietySpec>,
    /// Nodes, evaluation points or embedding inputs.
    #[serde(default)]
    pub points: Vec<Vec<ComplexWire>>,
    /// Pick targets, one per point.
    #[serde(default)]
    pub targets: Vec<ComplexWire>,
    #[serde(default)]
    pub polynomial: Option<PolynomialSpec>,
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    #[serde(default)]
    pub seed: u64,
    /// Tolerance for negative NP coefficients in float mode.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Largest source degree for `norms`.
    #[serde(default)]
    pub sweep: Option<usize>,
    /// Random sample count for `embed` and `mobius-check`.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub dim: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            kernels: Vec::new(),
            varieties: Vec::new(),
            points: Vec::new(),
            targets: Vec::new(),
            polynomial: None,
            truncation: DEFAULT_TRUNCATION,
            seed: 0,
            tolerance: None,
            sweep: None,
            samples: None,
            alpha: None,
            dim: None,
        }
    }
}

impl RunConfig {
    /// Parses JSON; errors carry the line, column and offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&serde_json::to_value(self).expect("serializable"))
            .expect("serializable");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn kernel(&self, i: usize) -> Result<&CoefficientSequence> {
        self.kernels.get(i).ok_or_else(|| {
            Error::Config(format!(
                "field `kernels`: entry {i} is required by this command"
            ))
        })
    }

    fn variety(&self, i: usize) -> Result<&VarietySpec> {
        self.varieties.get(i).ok_or_else(|| {
            Error::Config(format!(
                "field `varieties`: entry {i} is required by this command"
            ))
        })
    }

    fn point_list(&self) -> Vec<Point> {
        self.points.iter().map(|p| point_from_wire(p)).collect()
    }
}

/// Builds the effective configuration from flags and an optional file.
pub fn load_config(args: &Args) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(c) = args.command {
        config.command = Some(c);
    }
    if let Some(n) = args.truncation {
        config.truncation = n;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if config.command.is_none() {
        return Err(Error::Config(
            "field `command`: no command given on the command line or in the config".into(),
        ));
    }
    Ok(config)
}

/// Runs the configured command. Module errors become failed reports; only
/// configuration errors are returned.
pub fn run(config: &RunConfig) -> Result<Vec<Report>> {
    let command = config
        .command
        .ok_or_else(|| Error::Config("field `command`: missing".into()))?;
    let mut reports = match command {
        CommandName::Certify => run_certify(config)?,
        CommandName::Pick => vec![guard("pick", run_pick(config))?],
        CommandName::Extremal => vec![guard("extremal", run_extremal(config))?],
        CommandName::Embed => run_embed(config)?,
        CommandName::Norms => vec![guard("multiplier_norm", run_norms(config))?],
        CommandName::Classify => run_classify(config)?,
        CommandName::MobiusCheck => run_mobius(config)?,
        CommandName::Reproduce => reproduce(config.seed),
    };
    let provenance = Provenance {
        config_hash: config.hash(),
        seed: config.seed,
        truncation: config.truncation,
        rng: RNG_NAME.into(),
    };
    for r in &mut reports {
        r.provenance = Some(provenance.clone());
    }
    Ok(reports)
}

/// Passes configuration errors through and turns every other error into a
/// failed report.
fn guard(check: &str, r: Result<Report>) -> Result<Report> {
    match r {
        Ok(report) => Ok(report),
        Err(Error::Config(msg)) => Err(Error::Config(msg)),
        Err(e) => Ok(Report::fail(check, e.to_string())),
    }
}

fn run_certify(config: &RunConfig) -> Result<Vec<Report>> {
    if config.kernels.is_empty() {
        return Err(Error::Config(
            "field `kernels`: certify needs at least one kernel".into(),
        ));
    }
    let tol = config.tolerance.unwrap_or(0.0);
    let mut out = Vec::new();
    for a in &config.kernels {
        out.push(certify_np(a, config.truncation, tol).to_report(a));
        out.push(check_np_necessary(a, config.truncation));
        let domain = classify_domain(a, config.truncation);
        let report = if domain == Domain::Unknown {
            Report::unknown("domain", "radius of convergence not decided")
        } else {
            Report::pass("domain")
        };
        out.push(report.with("kernel", a.name()).with("domain", domain));
    }
    Ok(out)
}

fn run_pick(config: &RunConfig) -> Result<Report> {
    let a = config.kernel(0)?.clone();
    let targets = config
        .targets
        .iter()
        .map(|&t| complex_from_wire(t))
        .collect();
    let problem = PickProblem::new(a.clone(), config.point_list(), targets)
        .map_err(|e| Error::Config(format!("fields `points`/`targets`: {e}")))?;
    let cert = is_feasible(&problem, config.truncation)?;
    let matrix = pick_matrix(&problem, config.truncation)?;
    Ok(Report::verdict(
        "pick",
        cert.is_psd(),
        "Pick matrix is not positive semidefinite",
    )
    .with("kernel", a.name())
    .with("certificate", &cert)
    .with("matrix", crate::equiv::matrix_json(&matrix)))
}

fn run_extremal(config: &RunConfig) -> Result<Report> {
    let a = config.kernel(0)?;
    let pts = config.point_list();
    let w = pts
        .first()
        .ok_or_else(|| Error::Config("field `points`: extremal needs the point w first".into()))?;
    let value = extremal_value(w, a, config.truncation)?;
    let evals = pts[1..]
        .iter()
        .map(|z| extremal_multiplier_eval(w, z, a, config.truncation).map(|v| [v.re, v.im]))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report::pass("extremal")
        .with("kernel", a.name())
        .with("value", value)
        .with("multiplier_values", evals))
}

fn run_embed(config: &RunConfig) -> Result<Vec<Report>> {
    let a = config.kernel(0)?;
    let n = config.truncation;
    let mut pts = config.point_list();
    let dim = pts.first().map(|p| p.len()).or(config.dim).unwrap_or(1);
    if pts.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        pts = (0..config.samples.unwrap_or(20))
            .map(|_| random_ball_point(&mut rng, dim, 0.8))
            .collect();
    }
    let identity = guard(
        "embedding_identity",
        (|| {
            let map = EmbeddingMap::new(a, dim, n)?;
            let kernel = SeriesKernel::new(a, n);
            let mut coords = Vec::new();
            for z in &pts {
                let (j, tail) = embed_point(&map, z)?;
                coords.push(json!({"coordinates": j.iter().map(|x| [x.re, x.im]).collect::<Vec<_>>(), "tail_bound": tail}));
            }
            let (mut worst, mut worst_slack, mut ok) = (0.0f64, f64::INFINITY, true);
            for z in &pts {
                for w in &pts {
                    let r = embedding_residual(&map, &kernel, z, w)?;
                    worst = worst.max(r.residual);
                    worst_slack = worst_slack.min(r.bound - r.residual);
                    ok &= r.within();
                }
            }
            Ok(Report::verdict(
                "embedding_identity",
                ok,
                format!("residual {worst} exceeds its bound"),
            )
            .with("kernel", a.name())
            .with("max_residual", worst)
            .with("min_slack", worst_slack)
            .with("points", coords))
        })(),
    )?;
    Ok(vec![identity, check_finite_embedding(a, n)])
}

fn run_norms(config: &RunConfig) -> Result<Report> {
    let a = config.kernel(0)?;
    let spec = config
        .polynomial
        .as_ref()
        .ok_or_else(|| Error::Config("field `polynomial`: norms needs a polynomial".into()))?;
    let f = HomogeneousPolynomial::from_terms(spec.dim, &spec.terms)
        .map_err(|e| Error::Config(format!("field `polynomial`: {e}")))?;
    let variety = config
        .varieties
        .first()
        .map(VarietySpec::build)
        .transpose()?;
    let sweep = config.sweep.unwrap_or(20);
    Ok(multiplier_norm(&f, a, sweep, variety.as_ref())?.to_report(&a.name()))
}

fn run_classify(config: &RunConfig) -> Result<Vec<Report>> {
    let (a, b) = (config.kernel(0)?, config.kernel(1)?);
    let v = config.variety(0)?.union()?;
    let w = config.variety(1)?.union()?;
    let n = config.truncation;
    Ok(vec![
        guard("classify_isometric", classify_isometric(a, &v, b, &w, n))?,
        guard("classify_algebraic", classify_algebraic(a, &v, b, &w, n))?,
        guard(
            "classify_multiplier_biholomorphic",
            classify_multiplier_biholomorphic(a, &v, b, &w, n),
        )?,
    ])
}

fn run_mobius(config: &RunConfig) -> Result<Vec<Report>> {
    let alpha = config.alpha.unwrap_or(1.0);
    let samples = config.samples.unwrap_or(100);
    let dim = config.dim.unwrap_or(3);
    let identities = guard(
        "mobius_identities",
        check_mobius_samples(alpha, dim, samples, 0.9, config.seed),
    )?;
    Ok(vec![identities, orbit_report(0.5, 20)])
}

fn orbit_report(r: f64, steps: usize) -> Report {
    match hyperbolic_orbit(r, steps) {
        Ok(o) => {
            let gap = 1.0 - o[steps];
            let monotone = o.windows(2).all(|p| p[1] > p[0]);
            Report::verdict(
                "hyperbolic_orbit",
                monotone && gap <= 1e-6,
                format!("1 - f^{steps}(0) = {gap}"),
            )
            .with("r", r)
            .with("gap", gap)
            .with("orbit_head", &o[..o.len().min(4)])
        }
        Err(e) => Report::fail("hyperbolic_orbit", e.to_string()),
    }
}

/// Parses, runs and prints; returns the process exit code.
pub fn main_with(args: &Args) -> i32 {
    let result = load_config(args).and_then(|c| run(&c));
    let reports = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let json_text = crate::report::emit_json(&reports);
    if let Some(path) = &args.output {
        if let Err(e) = std::fs::write(path, &json_text) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return 2;
        }
    }
    if !args.quiet {
        if args.json {
            print!("{json_text}");
        } else {
            print!("{}", crate::report::emit_table(&reports));
        }
    }
    i32::from(reports.iter().any(|r| r.status == Status::Fail))
}

// ---------------------------------------------------------------------------
// Reproduction suite

/// Homogeneous polynomial with complex Gaussian coefficients.
pub fn random_homogeneous<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    degree: usize,
) -> HomogeneousPolynomial {
    let coeffs = (0..monomial_count(dim, degree))
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    HomogeneousPolynomial::from_coeffs(dim, degree, coeffs).expect("sized")
}

fn line(v: &[f64]) -> Point {
    Point::from_iterator(v.len(), v.iter().map(|&x| C64::new(x, 0.0)))
}

pub fn two_axes() -> SubspaceUnion {
    SubspaceUnion::lines(2, &[line(&[1.0, 0.0]), line(&[0.0, 1.0])]).expect("valid lines")
}

pub fn axis_and_diagonal() -> SubspaceUnion {
    SubspaceUnion::lines(2, &[line(&[1.0, 0.0]), line(&[1.0, 1.0])]).expect("valid lines")
}

type Step = fn(u64) -> Result<Report>;

/// Every worked example of the toolkit, each reported as passing when the
/// documented outcome is reproduced.
pub fn reproduce(seed: u64) -> Vec<Report> {
    let steps: [(&str, Step); 13] = [
        ("np_counterexample", rep_np_counterexample),
        ("np_necessary_condition", rep_necessary),
        ("k_alpha_dichotomy", rep_k_alpha),
        ("multiplier_norm_sweep", rep_norm_sweep),
        ("non_np_block_growth", rep_block_growth),
        ("embedding_identity", rep_embedding),
        ("finite_embedding", rep_finite_embedding),
        ("renewal_limit", rep_renewal),
        ("pick_boundary", rep_pick_boundary),
        ("mobius_identities", rep_mobius),
        ("classifier_contrast", rep_classifiers),
        ("composition_unitarity", rep_composition),
        ("ratio_limit", rep_ratio_limit),
    ];
    steps
        .iter()
        .map(|(name, f)| match f(seed) {
            Ok(r) => Report {
                check: name.to_string(),
                ..r
            },
            Err(e) => Report::fail(*name, e.to_string()),
        })
        .collect()
}

fn rep_np_counterexample(_: u64) -> Result<Report> {
    let a = CoefficientSequence::custom(
        vec![Number::integer(1), Number::ratio(1, 2), Number::integer(1)],
        Tail::RepeatLast,
    )?;
    let b = np_coefficients(&a, 4);
    let got: Vec<String> = (1..=4).map(|n| b.get(n).to_string()).collect();
    let cert = certify_np(&a, 4, 0.0);
    let witness = cert.witness.as_ref().map(|(n, v)| (*n, v.to_string()));
    let ok = got == ["1/2", "3/4", "1/8", "-5/16"]
        && cert.verdict == NpVerdict::NotCompleteNP
        && witness == Some((4, "-5/16".to_string()));
    Ok(
        Report::verdict("", ok, "unexpected coefficients or witness")
            .with("b", got)
            .with("witness", witness),
    )
}

fn rep_necessary(_: u64) -> Result<Report> {
    let a = CoefficientSequence::h_weighted(Number::integer(1))?;
    let r = check_np_necessary(&a, 8);
    let ok = !r.passed()
        && r.get("pair") == Some(&json!([1, 1]))
        && r.get("product") == Some(&json!("4"))
        && r.get("target") == Some(&json!("3"));
    Ok(Report::verdict("", ok, "expected failure at (1, 1) with 4 > 3").with("check", &r))
}

fn rep_k_alpha(_: u64) -> Result<Report> {
    let half = CoefficientSequence::k_alpha(Number::ratio(1, 2))?;
    let passes = certify_np(&half, 100, 0.0).verdict == NpVerdict::CompleteNP;
    let three_halves = CoefficientSequence::k_alpha(Number::ratio(3, 2))?;
    let cert = certify_np(&three_halves, 100, 0.0);
    let witness = cert.witness.as_ref().map(|(n, v)| (*n, v.to_f64()));
    let ok = passes
        && cert.verdict == NpVerdict::NotCompleteNP
        && witness.is_some_and(|(n, v)| n == 2 && (v + 0.375).abs() <= 1e-12);
    Ok(Report::verdict("", ok, "dichotomy not reproduced")
        .with("half_complete_np", passes)
        .with(
            "three_halves_witness",
            cert.witness.as_ref().map(|(n, v)| (*n, v.to_string())),
        ))
}

fn rep_norm_sweep(seed: u64) -> Result<Report> {
    let kernels = [
        CoefficientSequence::drury_arveson(),
        CoefficientSequence::dirichlet(),
        CoefficientSequence::h_weighted(Number::ratio(-1, 2))?,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let polys: Vec<HomogeneousPolynomial> = (0..50)
        .map(|_| {
            let deg = rng.random_range(1..=3);
            random_homogeneous(&mut rng, 2, deg)
        })
        .collect();
    let (mut worst_excess, mut worst_base): (f64, f64) = (0.0, 0.0);
    for a in &kernels {
        for f in &polys {
            let est = multiplier_norm(f, a, 20, None)?;
            worst_excess = worst_excess.max(est.sup_block_norm / est.hilbert_norm - 1.0);
            worst_base = worst_base
                .max((est.profile[0] - est.hilbert_norm).abs() / est.hilbert_norm.max(1.0));
        }
    }
    let ok = worst_excess <= 1e-8 && worst_base <= 1e-10;
    Ok(
        Report::verdict("", ok, "block norm exceeded the Hilbert norm")
            .with("max_relative_excess", worst_excess)
            .with("max_base_deviation", worst_base)
            .with("polynomials", polys.len()),
    )
}

fn rep_block_growth(_: u64) -> Result<Report> {
    let a = CoefficientSequence::h_weighted(Number::integer(1))?;
    let est = multiplier_norm(&HomogeneousPolynomial::variable(1, 0), &a, 4, None)?;
    let factor = est.profile[1] / est.profile[0];
    let ok = factor >= (4.0f64 / 3.0).sqrt() * (1.0 - 1e-8);
    Ok(Report::verdict("", ok, format!("growth factor {factor}")).with("factor", factor))
}

fn rep_embedding(seed: u64) -> Result<Report> {
    let cases = [
        (CoefficientSequence::dirichlet(), 1),
        (CoefficientSequence::h_weighted(Number::ratio(-1, 2))?, 2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut ok, mut worst_res, mut worst_bound) = (true, 0.0f64, 0.0f64);
    for (a, d) in &cases {
        let map = EmbeddingMap::new(a, *d, 64)?;
        let kernel = SeriesKernel::new(a, 64);
        for _ in 0..100 {
            let z = random_ball_point(&mut rng, *d, 0.8);
            let w = random_ball_point(&mut rng, *d, 0.8);
            let r = embedding_residual(&map, &kernel, &z, &w)?;
            ok &= r.within() && r.bound <= 1e-6;
            worst_res = worst_res.max(r.residual);
            worst_bound = worst_bound.max(r.bound);
        }
    }
    Ok(
        Report::verdict("", ok, "identity residual outside its bound")
            .with("max_residual", worst_res)
            .with("max_bound", worst_bound),
    )
}

fn rep_finite_embedding(_: u64) -> Result<Report> {
    let da = check_finite_embedding(&CoefficientSequence::drury_arveson(), 64);
    let dir = check_finite_embedding(&CoefficientSequence::dirichlet(), 64);
    let ok = da.passed()
        && da.get("deg_star") == Some(&json!(1))
        && !dir.passed()
        && dir.get("all_positive") == Some(&json!(true))
        && dir.get("mode") == Some(&json!("rational"));
    Ok(Report::verdict("", ok, "dichotomy not reproduced")
        .with("drury_arveson", &da)
        .with("dirichlet", &dir))
}

fn rep_renewal(_: u64) -> Result<Report> {
    let half = Number::ratio(1, 2);
    let r = check_efp_limit(&[half.clone(), half], 10_000, 1e-6)?;
    let head = r
        .get("first_terms")
        .and_then(|v| v.as_array())
        .cloned()
        .unwrap_or_default();
    let ok =
        r.passed() && head.len() >= 3 && head[..3] == [json!("1/2"), json!("3/4"), json!("5/8")];
    Ok(Report::verdict("", ok, "renewal limit not reproduced").with("check", &r))
}

fn rep_pick_boundary(_: u64) -> Result<Report> {
    let hardy = CoefficientSequence::drury_arveson();
    let truncation = 2048;
    let mut rows = Vec::new();
    let mut ok = true;
    for w in [0.3, 0.5, 0.9] {
        let nodes = vec![line(&[0.0]), line(&[w])];
        let base = PickProblem::new(hardy.clone(), nodes.clone(), vec![C64::new(0.0, 0.0); 2])?;
        let flip = bisect_flip(0.0, 1.0, 1e-12, |l| {
            let m = pick_matrix(
                &base.with_targets(vec![C64::new(0.0, 0.0), C64::new(l, 0.0)]),
                truncation,
            )?;
            Ok(min_eigenvalue(&m) >= 0.0)
        })?;
        let value = extremal_value(&nodes[1], &hardy, truncation)?;
        let targets = nodes
            .iter()
            .map(|z| extremal_multiplier_eval(&nodes[1], z, &hardy, truncation))
            .collect::<Result<Vec<_>>>()?;
        let cert = psd_certificate(&pick_matrix(&base.with_targets(targets), truncation)?);
        let good = (flip - value).abs() <= 1e-9
            && (value - w).abs() <= 1e-9
            && cert.is_psd()
            && cert.min_eigenvalue.abs() <= 1e-9;
        ok &= good;
        rows.push(json!({"w": w, "flip": flip, "extremal_value": value, "min_eigenvalue": cert.min_eigenvalue}));
    }
    Ok(Report::verdict("", ok, "flip does not match the extremal value").with("cases", rows))
}

fn rep_mobius(seed: u64) -> Result<Report> {
    let mut ok = true;
    let mut parts = Vec::new();
    for alpha in [0.5, 1.0] {
        let r = check_mobius_samples(alpha, 3, 100, 0.9, seed)?;
        ok &= r.passed();
        parts.push(r);
    }
    let orbit = orbit_report(0.5, 20);
    ok &= orbit.passed();
    parts.push(orbit);
    Ok(Report::verdict("", ok, "identity residual too large").with("checks", &parts))
}

fn rep_classifiers(_: u64) -> Result<Report> {
    let da = CoefficientSequence::drury_arveson();
    let dir = CoefficientSequence::dirichlet();
    let (axes, diag) = (two_axes(), axis_and_diagonal());
    let iso = classify_isometric(&da, &axes, &da, &diag, 64)?;
    let alg = classify_algebraic(&da, &axes, &da, &diag, 64)?;
    let witness = linear_isometric_equivalence(&axes, &diag)?;
    let alg_dir = classify_algebraic(&dir, &axes, &da, &axes, 64)?;
    let bihol = classify_multiplier_biholomorphic(&dir, &axes, &da, &axes, 64)?;
    let invertible = witness.witness.as_ref().is_some_and(|a| {
        crate::linalg::singular_values(a)
            .last()
            .is_some_and(|s| *s > 1e-9)
    });
    let ok = iso.status == Status::Fail
        && alg.passed()
        && witness.residual.is_some_and(|r| r <= 1e-9)
        && invertible
        && alg_dir.status == Status::Fail
        && bihol.passed();
    Ok(
        Report::verdict("", ok, "classifier separation not reproduced")
            .with("isometric", iso.status)
            .with("algebraic", alg.status)
            .with("algebraic_witness", witness.to_json())
            .with("algebraic_dirichlet", alg_dir.status)
            .with("multiplier_biholomorphic", bihol.status),
    )
}

fn rep_composition(seed: u64) -> Result<Report> {
    let u0 = random_unitary(&mut ChaCha8Rng::seed_from_u64(seed), 2);
    let v = two_axes().map(&u0)?;
    let w = two_axes();
    let eq = unitary_equivalence(&v, &w)?;
    let u = eq
        .witness
        .clone()
        .ok_or_else(|| Error::InvalidInput(format!("no unitary witness: {}", eq.reason)))?;
    let da = CoefficientSequence::drury_arveson();
    let source = Variety::Ideal(lines_to_ideal(&v)?);
    let target = Variety::Ideal(lines_to_ideal(&w)?);
    let blocks = composition_blocks(&u, &source, &target, &da, &da, 12)?;
    let r = blocks.to_report(1.0 - 1e-8, 1.0 + 1e-8);
    Ok(Report {
        check: String::new(),
        ..r
    })
}

fn rep_ratio_limit(_: u64) -> Result<Report> {
    let k = CoefficientSequence::k_alpha(Number::ratio(1, 2))?;
    let h = CoefficientSequence::h_weighted(Number::ratio(-1, 2))?;
    let r = compare_sequences_bounded_ratio(&k, &h, 5000)?;
    let target = 1.0 / std::f64::consts::PI.sqrt();
    let within = |key: &str| {
        r.get(key)
            .and_then(|v| v.as_f64())
            .is_some_and(|v| (v / target - 1.0).abs() <= 0.02)
    };
    let ok = r.passed() && within("min_ratio") && within("max_ratio");
    Ok(
        Report::verdict("", ok, "ratio extremes not within 2% of 1/sqrt(pi)")
            .with("target", target)
            .with("check", &r),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_name_the_field() {
        let err = RunConfig::from_json("{\n  \"command\": \"certify\",\n  \"truncaton\": 4\n}")
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("truncaton") && msg.contains("line 3"), "{msg}");
        let err = RunConfig::from_json(
            "{\"command\": \"certify\", \"kernels\": [{\"family\": \"k_alpha\", \"alpha\": -1}]}",
        )
        .unwrap_err();
        assert!(err.to_string().contains("alpha"), "{err}");
    }

    #[test]
    fn certify_counterexample() {
        let cfg = RunConfig::from_json(
            r#"{"command": "certify", "truncation": 8,
                "kernels": [{"family": "custom", "terms": [1, "1/2", 1], "tail": "repeat_last"}]}"#,
        )
        .unwrap();
        let reports = run(&cfg).unwrap();
        let cert = &reports[0];
        assert_eq!(cert.status, Status::Fail);
        let text = crate::report::emit_json(&reports);
        assert!(text.contains("\"-5/16\""), "{text}");
        assert!(reports
            .iter()
            .all(|r| r.provenance.as_ref().is_some_and(|p| p.rng == RNG_NAME)));
    }

    #[test]
    fn pick_command() {
        let cfg = RunConfig::from_json(
            r#"{"command": "pick", "kernels": [{"family": "drury_arveson"}],
                "points": [[[0, 0]], [[0.5, 0]]], "targets": [[0, 0], [0.4, 0]]}"#,
        )
        .unwrap();
        let r = run(&cfg).unwrap();
        assert!(r[0].passed());
        assert_eq!(r[0].get("certificate").unwrap()["verdict"], json!("PSD"));
    }

    #[test]
    fn module_errors_become_failed_reports() {
        let cfg = RunConfig::from_json(
            r#"{"command": "extremal", "kernels": [{"family": "drury_arveson"}], "points": [[[1.5, 0]]]}"#,
        )
        .unwrap();
        let r = run(&cfg).unwrap();
        assert_eq!(r[0].status, Status::Fail);
    }

    #[test]
    fn other_commands() {
        let norms = RunConfig::from_json(
            r#"{"command": "norms", "kernels": [{"family": "dirichlet"}], "sweep": 6,
                "polynomial": {"dim": 2, "terms": [{"alpha": [1, 1], "re": 1}]},
                "varieties": [{"kind": "ideal", "dim": 2, "generators": [[{"alpha": [1, 1], "re": 1}]], "radical": true}]}"#,
        )
        .unwrap();
        let r = run(&norms).unwrap();
        assert!(r[0].passed());
        let classify = RunConfig::from_json(
            r#"{"command": "classify", "truncation": 64,
                "kernels": [{"family": "drury_arveson"}, {"family": "drury_arveson"}],
                "varieties": [{"kind": "lines", "directions": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]},
                              {"kind": "lines", "directions": [[[1, 0], [0, 0]], [[1, 0], [1, 0]]]}]}"#,
        )
        .unwrap();
        let r = run(&classify).unwrap();
        let statuses: Vec<Status> = r.iter().map(|x| x.status).collect();
        assert_eq!(statuses, [Status::Fail, Status::Pass, Status::Pass]);
        let embed = RunConfig::from_json(
            r#"{"command": "embed", "truncation": 32, "kernels": [{"family": "dirichlet"}], "points": [[[0.3, 0.1]], [[-0.2, 0.4]]]}"#,
        )
        .unwrap();
        let r = run(&embed).unwrap();
        assert!(r[0].passed());
        let mobius = RunConfig {
            command: Some(CommandName::MobiusCheck),
            samples: Some(10),
            ..RunConfig::default()
        };
        assert!(run(&mobius).unwrap().iter().all(Report::passed));
    }

    #[test]
    fn hash_is_stable() {
        let a = RunConfig {
            command: Some(CommandName::Reproduce),
            ..RunConfig::default()
        };
        let b = RunConfig::from_json(r#"{"command": "reproduce"}"#).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
