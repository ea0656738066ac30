//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::czlab::{cz_decompose_frac, ekj_expansion_check, theorem_chain_check, ChainConfig};
use crate::error::{Error, Result};
use crate::funcspace::{
    CubeFamily, FamilySpec, GridFunction, GridSpec, MatrixSpec, Measure, SegmentWeight1D, SquareMatrix, WeightSpec,
};
use crate::maximal::{MaximalRequest, Operator};
use crate::report::{to_json, write_field_csv, Report};
use crate::verify::{run_suites, SuiteId, VerifyOptions};
use crate::weightclass::{constant_grid, constant_traced, rh_probe, ClassSpec, ConstantReport};
use crate::young::YoungFn;

#[derive(Debug, Parser)]
#[command(name = "weightlab", version, about = "Maximal operators under linear maps and their weight classes")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a maximal operator on a grid function.
    Maximal(MaximalArgs),
    /// Estimate a weight-class constant over a cube family.
    Constant(ConstantArgs),
    /// Calderón-Zygmund stopping cubes of a grid function.
    Cz(CzArgs),
    /// Step-by-step check of the weighted bound for M_{A^-1} on the line.
    Chain(ChainArgs),
    /// Run reproduction suites.
    Verify(VerifyArgs),
    /// Reverse Hölder constants of a weight for several exponents.
    ProbeRh(ProbeRhArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OperatorKind {
    Hl,
    Dyadic,
    Frac,
    Orlicz,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureKind {
    Lebesgue,
    Exp,
}

impl From<MeasureKind> for Measure {
    fn from(m: MeasureKind) -> Self {
        match m {
            MeasureKind::Lebesgue => Measure::Lebesgue,
            MeasureKind::Exp => Measure::ExpAbs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ClassKind {
    Ap,
    Aap,
    Aa1,
    Bump,
    Frac,
    Fracbump,
    Rh,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Dilation,
    Nondoubling,
    Reflection,
    Theorems,
    All,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    /// Matrix file (`{"dim": .., "entries": [..]}`).
    #[arg(long, conflicts_with = "lambda")]
    matrix: Option<PathBuf>,
    /// Scalar matrix on the line.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
}

impl MatrixArgs {
    fn load(&self) -> Result<Option<SquareMatrix>> {
        match (&self.matrix, self.lambda) {
            (Some(path), _) => Ok(Some(SquareMatrix::from_spec(&read_json::<MatrixSpec>(path)?)?)),
            (None, Some(l)) => Ok(Some(SquareMatrix::scalar(l)?)),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Debug, Args)]
struct FamilyArgs {
    /// Family file (`{"levels": [j_min, j_max], "shifts": s, "box": [..]}`).
    #[arg(long)]
    family: Option<PathBuf>,
    /// Dyadic levels as `j_min,j_max`.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    #[arg(long, default_value_t = 2)]
    shifts: usize,
    /// Family box as `lo,hi` on the line or `x0,y0,x1,y1` in the plane.
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    bx: Option<Vec<f64>>,
}

impl FamilyArgs {
    fn resolve(&self, default_box: Option<Vec<f64>>, default_levels: [u32; 2]) -> Result<CubeFamily> {
        if let Some(path) = &self.family {
            return CubeFamily::from_spec(&read_json::<FamilySpec>(path)?);
        }
        let bx = self
            .bx
            .clone()
            .or(default_box)
            .ok_or_else(|| Error::Config("no family box: pass --box or --family".into()))?;
        let levels = match self.levels.as_deref() {
            Some(&[lo, hi]) => [lo, hi],
            Some(l) => return Err(Error::Config(format!("--levels takes j_min,j_max, got {l:?}"))),
            None => default_levels,
        };
        CubeFamily::from_spec(&FamilySpec { levels, shifts: self.shifts, r#box: bx })
    }
}

#[derive(Debug, Args)]
struct MaximalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, visible_alias = "op", value_enum, default_value_t = OperatorKind::Hl)]
    operator: OperatorKind,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Young function as JSON, e.g. `{"kind":"power","r":2}`.
    #[arg(long)]
    phi: Option<String>,
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = MeasureKind::Lebesgue)]
    measure: MeasureKind,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dump the resulting field as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ConstantArgs {
    #[arg(long, value_enum)]
    class: ClassKind,
    /// Analytic weight (segments) or grid weight (values).
    #[arg(long)]
    weight: PathBuf,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// Bump parameter: the class uses `t^(p/(p+eps-1))`.
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<f64>,
    #[arg(long)]
    phi: Option<String>,
    #[command(flatten)]
    matrix: MatrixArgs,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = MeasureKind::Lebesgue)]
    measure: MeasureKind,
    /// Include every per-cube value in the report.
    #[arg(long)]
    trace: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CzArgs {
    #[arg(long)]
    input: PathBuf,
    /// Level parameter; defaults to `2^(n+2)`.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    k_min: Option<i32>,
    #[arg(long, allow_hyphen_values = true)]
    k_max: Option<i32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ChainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    weight: PathBuf,
    #[command(flatten)]
    matrix: MatrixArgs,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    phi: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: SuiteArg,
    /// Exponents for the non-doubling suite.
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Grid size of the theorem probes, as a power of two.
    #[arg(long)]
    cells_log2: Option<u32>,
    #[arg(long)]
    functions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProbeRhArgs {
    #[arg(long)]
    weight: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    s: Vec<f64>,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum WeightFile {
    Analytic(WeightSpec),
    Grid(GridSpec),
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_phi(text: &Option<String>) -> Result<Option<YoungFn>> {
    text.as_deref()
        .map(|t| serde_json::from_str::<YoungFn>(t).map_err(|e| Error::Parse(format!("--phi: {e}"))))
        .transpose()
}

fn emit<T: Serialize>(out: &Option<PathBuf>, report: &Report<'_, T>) -> Result<()> {
    let text = to_json(report)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn require(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("--{name} is required for this class")))
}

fn grid_levels(g: &GridFunction) -> [u32; 2] {
    [0, g.geom().cells.trailing_zeros()]
}

fn grid_box(g: &GridFunction) -> Vec<f64> {
    let geom = g.geom();
    if geom.dim == 1 {
        vec![geom.lo[0], geom.hi(0)]
    } else {
        vec![geom.lo[0], geom.lo[1], geom.hi(0), geom.hi(1)]
    }
}

fn run_maximal(args: &MaximalArgs) -> Result<bool> {
    let f = GridFunction::from_spec(&read_json::<GridSpec>(&args.input)?)?;
    let family = args.family.resolve(Some(grid_box(&f)), grid_levels(&f))?;
    let operator = match args.operator {
        OperatorKind::Hl => Operator::Hl,
        OperatorKind::Dyadic => Operator::Dyadic,
        OperatorKind::Frac => Operator::Fractional { alpha: args.alpha },
        OperatorKind::Orlicz => Operator::Orlicz {
            phi: parse_phi(&args.phi)?.ok_or_else(|| Error::Config("--phi is required for orlicz".into()))?,
            alpha: args.alpha,
        },
    };
    let mut req = MaximalRequest::new(operator, family).with_measure(args.measure.into());
    if let Some(a) = args.matrix.load()? {
        req = req.with_matrix(a);
    }
    let mf = req.evaluate(&f)?;
    if let Some(path) = &args.csv {
        write_field_csv(path, &mf)?;
    }
    emit(&args.out, &Report::new("maximal", mf.to_spec()))?;
    Ok(true)
}

fn class_spec(args: &ConstantArgs) -> Result<ClassSpec> {
    let a = || -> Result<SquareMatrix> {
        args.matrix.load()?.ok_or_else(|| Error::Config("--matrix or --lambda is required for this class".into()))
    };
    let measure: Measure = args.measure.into();
    let phi = || -> Result<YoungFn> {
        match (parse_phi(&args.phi)?, args.eps) {
            (Some(phi), _) => Ok(phi),
            (None, Some(eps)) => Ok(YoungFn::bump(require(args.p, "p")?, eps)),
            (None, None) => Err(Error::Config("--phi or --eps is required for bump classes".into())),
        }
    };
    let spec = match args.class {
        ClassKind::Ap => ClassSpec::Ap { p: require(args.p, "p")?, measure },
        ClassKind::Aap => ClassSpec::Aap { p: require(args.p, "p")?, a: a()?, measure },
        ClassKind::Aa1 => ClassSpec::Aa1 { a: a()? },
        ClassKind::Bump => ClassSpec::Bump { p: require(args.p, "p")?, a: a()?, phi: phi()? },
        ClassKind::Frac => match (args.q, args.alpha) {
            (Some(q), _) => ClassSpec::Frac { p: require(args.p, "p")?, q, a: a()? },
            (None, Some(alpha)) => ClassSpec::frac_from_alpha(require(args.p, "p")?, alpha, a()?)?,
            (None, None) => return Err(Error::Config("--q or --alpha is required for frac".into())),
        },
        ClassKind::Fracbump => ClassSpec::FracBump {
            p: require(args.p, "p")?,
            q: require(args.q, "q")?,
            a: a()?,
            phi: phi()?,
        },
        ClassKind::Rh => ClassSpec::Rh { s: require(args.s, "s")? },
    };
    spec.validate()?;
    Ok(spec)
}

fn run_constant(args: &ConstantArgs) -> Result<bool> {
    let spec = class_spec(args)?;
    let report: ConstantReport = match read_json::<WeightFile>(&args.weight)? {
        WeightFile::Analytic(ws) => {
            let w = SegmentWeight1D::from_spec(&ws)?;
            let (lo, hi) = w.support();
            let default_box = (lo.is_finite() && hi.is_finite()).then(|| vec![lo, hi]);
            let family = args.family.resolve(default_box, [0, 6])?;
            constant_traced(&w, &spec, &family, args.trace)?
        }
        WeightFile::Grid(gs) => {
            let g = GridFunction::from_spec(&gs)?;
            let family = args.family.resolve(Some(grid_box(&g)), grid_levels(&g))?;
            constant_grid(&g, &spec, &family)?
        }
    };
    emit(&args.out, &Report::new("constant", report))?;
    Ok(true)
}

#[derive(Serialize)]
struct CzBody {
    decomposition: crate::czlab::CzDecomposition,
    expansion: crate::czlab::EkjReport,
}

fn run_cz(args: &CzArgs) -> Result<bool> {
    let f = GridFunction::from_spec(&read_json::<GridSpec>(&args.input)?)?;
    let a = args.a.unwrap_or(2f64.powi(f.dim() as i32 + 2));
    let range = match (args.k_min, args.k_max) {
        (Some(lo), Some(hi)) => Some((lo, hi)),
        (None, None) => None,
        _ => return Err(Error::Config("pass both --k-min and --k-max or neither".into())),
    };
    let dec = cz_decompose_frac(&f, a, args.alpha, range)?;
    let expansion = ekj_expansion_check(&dec);
    let ok = expansion.disjoint;
    emit(&args.out, &Report::new("cz", CzBody { decomposition: dec, expansion }).with_status(ok))?;
    Ok(ok)
}

fn run_chain(args: &ChainArgs) -> Result<bool> {
    let f = GridFunction::from_spec(&read_json::<GridSpec>(&args.input)?)?;
    let w = SegmentWeight1D::from_spec(&read_json::<WeightSpec>(&args.weight)?)?;
    let a = args.matrix.load()?.unwrap_or_else(|| SquareMatrix::identity(1));
    let cfg = ChainConfig {
        p: args.p,
        alpha: args.alpha,
        a: args.a,
        phi: parse_phi(&args.phi)?,
        shifts: 2,
    };
    let report = theorem_chain_check(&f, &w, &a, &cfg)?;
    let ok = report.holds();
    if !ok {
        for s in report.steps.iter().filter(|s| s.slack.is_some_and(|v| v < crate::czlab::SLACK_TOL)) {
            eprintln!("failing step: {}", s.name);
        }
    }
    emit(&args.out, &Report::new("chain", report).with_status(ok))?;
    Ok(ok)
}

fn run_verify(args: &VerifyArgs) -> Result<bool> {
    let ids: Vec<SuiteId> = match args.suite {
        SuiteArg::Dilation => vec![SuiteId::Dilation],
        SuiteArg::Nondoubling => vec![SuiteId::Nondoubling],
        SuiteArg::Reflection => vec![SuiteId::Reflection],
        SuiteArg::Theorems => vec![SuiteId::Theorems],
        SuiteArg::All => SuiteId::ALL.to_vec(),
    };
    let mut opts = VerifyOptions::default();
    if let Some(p) = &args.p {
        opts.nondoubling_p = p.clone();
    }
    if let Some(c) = args.cells_log2 {
        opts.theorems.cells_log2 = c;
    }
    if let Some(n) = args.functions {
        opts.theorems.functions = n;
    }
    if let Some(s) = args.seed {
        opts.theorems.seed = s;
    }
    let summary = run_suites(&ids, &opts)?;
    for suite in &summary.suites {
        eprint!("{suite}");
        for c in suite.failing() {
            eprintln!("failing check: {}/{}", suite.suite.name(), c.name);
        }
    }
    let passed = summary.passed;
    emit(&args.out, &Report::new("verify", summary).with_status(passed))?;
    Ok(passed)
}

fn run_probe_rh(args: &ProbeRhArgs) -> Result<bool> {
    let w = SegmentWeight1D::from_spec(&read_json::<WeightSpec>(&args.weight)?)?;
    let (lo, hi) = w.support();
    let family = args.family.resolve((lo.is_finite() && hi.is_finite()).then(|| vec![lo, hi]), [0, 6])?;
    let rows = rh_probe(&w, &args.s, &family)?;
    emit(&args.out, &Report::new("probe-rh", rows))?;
    Ok(true)
}

/// Caps the global thread pool at `WEIGHTLAB_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("WEIGHTLAB_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Error::Config(format!("WEIGHTLAB_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(Error::Config("WEIGHTLAB_THREADS must be positive".into()));
        }
        // a pool that is already built keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs the command line and returns the process exit code: 0 when every
/// requested check passes, 1 when one fails, 2 on bad arguments or input.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = configure_threads().and_then(|_| match &cli.command {
        Command::Maximal(a) => run_maximal(a),
        Command::Constant(a) => run_constant(a),
        Command::Cz(a) => run_cz(a),
        Command::Chain(a) => run_chain(a),
        Command::Verify(a) => run_verify(a),
        Command::ProbeRh(a) => run_probe_rh(a),
    });
    match outcome {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
