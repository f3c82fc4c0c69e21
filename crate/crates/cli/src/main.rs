//! `ergolab`: reproducible experiments on polynomial orbits of unipotent torus maps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use ergolab_core::algebra::{unipotent_canonical_form, RationalMatrix, ReductionJson};
use ergolab_core::angle::{AngleValue, Registry};
use ergolab_core::averages::{l2_distance_to_product, SampleSpec};
use ergolab_core::equidist::{
    build_phase_polynomial, discrepancy_estimate, polynomial_orbit, weyl_sum_phase,
    DiscrepancyMode, Frequency,
};
use ergolab_core::io::{load_functions, load_point, load_system, system_to_json};
use ergolab_core::nil::{NilElement1, NilElement2, NilGroup};
use ergolab_core::polynomial::{to_i64_vec, Independence, PolynomialFamily};
use ergolab_core::torus::{
    is_ergodic, is_totally_ergodic, orbit_shadows, sample_generic_point, TorusPoint,
    UnipotentAffineMap,
};

#[derive(Parser, Serialize)]
#[command(
    name = "ergolab",
    version,
    about = "Polynomial orbits of unipotent affine maps on tori"
)]
struct Cli {
    /// Worker threads for parallel kernels.
    #[arg(long, global = true, env = "ERGOLAB_THREADS")]
    threads: Option<usize>,
    /// Write the main artifact here as well as to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Decide whether no nontrivial integer combination of the family is constant.
    IndependenceCheck(IndependenceArgs),
    /// Jordan reduction `P A = J P` of a unipotent integer matrix.
    Reduce(ReduceArgs),
    /// Orbit CSV `n, x_1, ..., x_d`.
    Orbit(OrbitArgs),
    /// Normalized Weyl sum along a polynomial orbit.
    WeylSum(WeylArgs),
    /// Star-discrepancy lower bound of a polynomial orbit.
    Discrepancy(DiscrepancyArgs),
    /// L² distance of a multiple ergodic average to the product of integrals.
    Average(AverageArgs),
    /// Affine model of a nilrotation on one of the two example nilmanifolds.
    DemoNil(DemoNilArgs),
    /// The non-generic orbit of the skew product versus a generic one.
    DemoCounterexample(CounterexampleArgs),
}

#[derive(Args, Serialize)]
struct IndependenceArgs {
    #[arg(long)]
    polys: String,
}

#[derive(Args, Serialize)]
struct ReduceArgs {
    #[arg(long)]
    matrix: PathBuf,
}

#[derive(Args, Serialize)]
struct SystemArgs {
    #[arg(long)]
    system: PathBuf,
    /// `generic` for fresh generators, or a point file.
    #[arg(long, default_value = "generic")]
    point: String,
}

#[derive(Args, Serialize)]
struct OrbitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sys: SystemArgs,
    #[arg(long, default_value = "n")]
    polys: String,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
}

#[derive(Args, Serialize)]
struct WeylArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sys: SystemArgs,
    #[arg(long)]
    polys: String,
    #[arg(long)]
    freq: String,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
}

#[derive(Args, Serialize)]
struct DiscrepancyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    sys: SystemArgs,
    #[arg(long, default_value = "n")]
    polys: String,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, default_value = "grid")]
    mode: String,
    #[arg(long, default_value_t = 64)]
    trials: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Serialize)]
struct AverageArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    polys: String,
    #[arg(long)]
    functions: PathBuf,
    #[arg(long = "N")]
    #[serde(rename = "N")]
    n: u64,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Also evaluate on the rational grid with this many points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// CSV of `N, l2_estimate` over a logarithmic grid up to `N`.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DemoNilArgs {
    /// 1 for the Heisenberg nilmanifold, 2 for the 3-step example.
    #[arg(long, default_value_t = 1)]
    example: u8,
    /// Rotation element `m,a_1,a_2[,a_3]`; names in the angles mint generators.
    #[arg(long)]
    a: String,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CounterexampleArgs {
    #[arg(long = "N", default_value_t = 100_000)]
    #[serde(rename = "N")]
    n: u64,
}

/// Pretty JSON with every float written to 17 significant digits.
struct FixedDigits(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + std::io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedDigits {
    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );

    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

fn to_json_text(v: &Value) -> Outcome<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    v.serialize(&mut ser)
        .map_err(|e| Failure::Internal(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Failure::Internal(e.to_string()))
}

enum Failure {
    Validation(String),
    Internal(String),
}

impl From<ergolab_core::Error> for Failure {
    fn from(e: ergolab_core::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome<()> {
    std::fs::write(path, text).map_err(|e| Failure::Internal(format!("{}: {e}", path.display())))
}

fn csv_row(n: impl std::fmt::Display, xs: &[f64]) -> String {
    let mut line = n.to_string();
    for x in xs {
        write!(line, ",{x:.16e}").expect("string write");
    }
    line.push('\n');
    line
}

fn load_system_and_point(
    args: &SystemArgs,
    reg: &Registry,
) -> Outcome<(UnipotentAffineMap, TorusPoint)> {
    let t = load_system(&read(&args.system)?, reg)?;
    let x = if args.point == "generic" {
        sample_generic_point(t.dim(), reg)?
    } else {
        load_point(&read(Path::new(&args.point))?, reg)?
    };
    if x.dim() != t.dim() {
        return Err(Failure::Validation(format!(
            "point: dimension {} does not match the system dimension {}",
            x.dim(),
            t.dim()
        )));
    }
    Ok((t, x))
}

fn require_seed(seed: Option<u64>, what: &str) -> Outcome<u64> {
    seed.ok_or_else(|| Failure::Validation(format!("seed: --seed is required for {what}")))
}

fn point_json(x: &TorusPoint, reg: &Registry) -> Value {
    json!({
        "symbolic": x.coords().iter().map(|c| c.display_with(reg)).collect::<Vec<_>>(),
        "shadow": x.shadows(reg),
    })
}

fn independence(args: &IndependenceArgs) -> Outcome<Value> {
    let family: PolynomialFamily = args.polys.parse()?;
    Ok(match family.independence() {
        Independence::Independent => json!({ "independent": true }),
        Independence::Dependent(w) => {
            let witness =
                to_i64_vec(&w).ok_or_else(|| Failure::Internal("witness overflows i64".into()))?;
            let combination = family.combination(&w);
            json!({
                "independent": false,
                "witness": witness,
                "constant": combination.to_standard().to_string(),
            })
        }
    })
}

fn reduce(args: &ReduceArgs) -> Outcome<Value> {
    let a: RationalMatrix = read(&args.matrix)?.parse()?;
    let red = unipotent_canonical_form(&a)?;
    red.verify(&a)
        .map_err(|e| Failure::Internal(format!("self-check failed: {e}")))?;
    serde_json::to_value(ReductionJson::from(&red)).map_err(|e| Failure::Internal(e.to_string()))
}

fn orbit(args: &OrbitArgs, reg: &Registry) -> Outcome<(Value, String)> {
    let (t, x) = load_system_and_point(&args.sys, reg)?;
    let polys: PolynomialFamily = args.polys.parse()?;
    let rows = polynomial_orbit(&t, &x, &polys, 0..args.n as i64, reg)?;
    let csv: String = rows
        .iter()
        .enumerate()
        .map(|(n, r)| csv_row(n, r))
        .collect();
    Ok((
        json!({ "rows": rows.len(), "point": point_json(&x, reg) }),
        csv,
    ))
}

fn weyl(args: &WeylArgs, reg: &Registry) -> Outcome<Value> {
    let (t, x) = load_system_and_point(&args.sys, reg)?;
    let polys: PolynomialFamily = args.polys.parse()?;
    let m: Frequency = args.freq.parse()?;
    let r = build_phase_polynomial(&t, &x, &polys, &m)?;
    let w = weyl_sum_phase(&r, args.n, reg)?;
    let mut out = serde_json::to_value(w).map_err(|e| Failure::Internal(e.to_string()))?;
    out["point"] = point_json(&x, reg);
    Ok(out)
}

fn discrepancy(args: &DiscrepancyArgs, reg: &Registry) -> Outcome<Value> {
    let mode: DiscrepancyMode = args.mode.parse()?;
    let seed = match mode {
        DiscrepancyMode::Random => Some(require_seed(args.seed, "random anchors")?),
        DiscrepancyMode::Grid => args.seed,
    };
    let (t, x) = load_system_and_point(&args.sys, reg)?;
    let polys: PolynomialFamily = args.polys.parse()?;
    let dim = t.dim() * polys.len();
    if dim > ergolab_core::equidist::MAX_DIM {
        return Err(Failure::Validation(format!(
            "polys: orbit dimension {dim} exceeds {}",
            ergolab_core::equidist::MAX_DIM
        )));
    }
    if args.n == 0 {
        return Err(Failure::Validation("N: must be at least 1".into()));
    }
    let points = polynomial_orbit(&t, &x, &polys, 1..args.n as i64 + 1, reg)?;
    let estimate = discrepancy_estimate(&points, mode, args.trials, seed.unwrap_or(0))?;
    Ok(json!({
        "estimate": estimate,
        "kind": "lower bound",
        "mode": mode,
        "trials": args.trials,
        "seed": seed,
    }))
}

fn log_grid(max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = 10u64;
    while n < max {
        out.push(n);
        n = n.saturating_mul(10);
    }
    out.push(max);
    out
}

fn average(args: &AverageArgs, reg: &Registry) -> Outcome<(Value, Option<String>)> {
    let seed = require_seed(args.seed, "generic sample points")?;
    let t = load_system(&read(&args.system)?, reg)?;
    let polys: PolynomialFamily = args.polys.parse()?;
    if !polys.independence().is_independent() {
        return Err(Failure::Validation(format!(
            "polys: `{}` is not an independent family",
            args.polys
        )));
    }
    let fs = load_functions(&read(&args.functions)?, t.dim())?;
    let spec = SampleSpec {
        samples: args.samples,
        seed,
        grid_per_axis: args.grid,
    };
    let report = l2_distance_to_product(&t, &polys, &fs, args.n, &spec, reg)?;
    let trace = match &args.trace {
        None => None,
        Some(_) => {
            let mut csv = String::from("N,l2_estimate,max_deviation\n");
            for n in log_grid(args.n) {
                let r = l2_distance_to_product(&t, &polys, &fs, n, &spec, reg)?;
                csv.push_str(&csv_row(n, &[r.l2_estimate, r.max_deviation]));
            }
            Some(csv)
        }
    };
    let value = serde_json::to_value(report).map_err(|e| Failure::Internal(e.to_string()))?;
    Ok((value, trace))
}

fn nil_demo<G: NilGroup>(
    parts: &[&str],
    args: &DemoNilArgs,
    reg: &Registry,
) -> Outcome<(Value, String)> {
    if parts.len() != G::DIM + 1 {
        return Err(Failure::Validation(format!(
            "a: expected {} comma-separated entries, got {}",
            G::DIM + 1,
            parts.len()
        )));
    }
    let m: i64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Failure::Validation(format!("a: bad integer `{}`", parts[0])))?;
    let reals = parts[1..]
        .iter()
        .enumerate()
        .map(|(i, s)| {
            AngleValue::parse_with(s, &format!("a[{}]", i + 1), |name| match reg.lookup(name) {
                Some(id) => Ok(id),
                None => reg.mint(Some(name)),
            })
        })
        .collect::<ergolab_core::Result<Vec<_>>>()?;
    let a = G::from_parts(m, reals);
    let s = G::conjugated_affine(&a)?;
    let orbit = orbit_shadows(&s, &TorusPoint::origin(s.dim()), args.steps, reg)?;
    let csv: String = orbit
        .iter()
        .enumerate()
        .map(|(n, r)| csv_row(n, r))
        .collect();
    let value = json!({
        "example": args.example,
        "map": system_to_json(&s, reg),
        "ergodic": is_ergodic(&s)?,
        "totally_ergodic": is_totally_ergodic(&s)?,
    });
    Ok((value, csv))
}

fn demo_nil(args: &DemoNilArgs, reg: &Registry) -> Outcome<(Value, String)> {
    let parts: Vec<&str> = args.a.split(',').collect();
    match args.example {
        1 => nil_demo::<NilElement1>(&parts, args, reg),
        2 => nil_demo::<NilElement2>(&parts, args, reg),
        e => Err(Failure::Validation(format!(
            "example: expected 1 or 2, got {e}"
        ))),
    }
}

const GENERIC_THRESHOLD: f64 = 0.02;

fn counterexample(args: &CounterexampleArgs, reg: &Registry) -> Outcome<Value> {
    let alpha = AngleValue::generator(reg.mint(Some("alpha"))?);
    let a = RationalMatrix::from_ints(&[vec![1, 0], vec![2, 1]]);
    let t = UnipotentAffineMap::new(a, vec![alpha.clone(), alpha])?;
    let polys: PolynomialFamily = "n,n^2".parse()?;
    let special = Frequency(vec![0, 1, -1, 0]);
    let origin = TorusPoint::origin(2);
    let at_origin = weyl_sum_phase(
        &build_phase_polynomial(&t, &origin, &polys, &special)?,
        args.n,
        reg,
    )?;
    let x = sample_generic_point(2, reg)?;
    let mut rows = Vec::new();
    let mut worst = (0.0f64, special.clone());
    for m in Frequency::all_nonzero(4, 2) {
        let w = weyl_sum_phase(&build_phase_polynomial(&t, &x, &polys, &m)?, args.n, reg)?;
        if w.magnitude > worst.0 {
            worst = (w.magnitude, m.clone());
        }
        rows.push(json!({ "freq": m.0, "magnitude": w.magnitude }));
    }
    Ok(json!({
        "system": system_to_json(&t, reg),
        "polys": "n,n^2",
        "N": args.n,
        "origin": { "freq": special.0, "magnitude": at_origin.magnitude, "re": at_origin.re, "im": at_origin.im },
        "generic": {
            "point": point_json(&x, reg),
            "threshold": GENERIC_THRESHOLD,
            "max_magnitude": worst.0,
            "worst_freq": worst.1 .0,
            "all_below": worst.0 < GENERIC_THRESHOLD,
            "frequencies": rows,
        },
    }))
}

fn run(cli: &Cli) -> Outcome<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Validation("threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    let reg = Registry::new();
    let mut side: Option<(PathBuf, String)> = None;
    let mut raw_csv: Option<String> = None;
    let result = match &cli.command {
        Command::IndependenceCheck(a) => independence(a)?,
        Command::Reduce(a) => reduce(a)?,
        Command::Orbit(a) => {
            let (v, csv) = orbit(a, &reg)?;
            raw_csv = Some(csv);
            v
        }
        Command::WeylSum(a) => weyl(a, &reg)?,
        Command::Discrepancy(a) => discrepancy(a, &reg)?,
        Command::Average(a) => {
            let (v, trace) = average(a, &reg)?;
            if let (Some(path), Some(csv)) = (&a.trace, trace) {
                side = Some((path.clone(), csv));
            }
            v
        }
        Command::DemoNil(a) => {
            let (v, csv) = demo_nil(a, &reg)?;
            if let Some(path) = &a.csv {
                side = Some((path.clone(), csv));
            }
            v
        }
        Command::DemoCounterexample(a) => counterexample(a, &reg)?,
    };
    if let Some((path, csv)) = side {
        write(&path, &csv)?;
    }
    if let Some(csv) = raw_csv {
        // orbit: the CSV is the artifact; stdout carries it when no --out is given
        match &cli.out {
            Some(path) => write(path, &csv)?,
            None => print!("{csv}"),
        }
        let doc = json!({ "config": cli, "result": result });
        eprintln!("{}", to_json_text(&doc)?);
        return Ok(());
    }
    let mut doc = json!({ "config": cli });
    if let (Value::Object(target), Value::Object(fields)) = (&mut doc, result) {
        target.extend(fields);
    }
    let text = to_json_text(&doc)?;
    if let Some(path) = &cli.out {
        write(path, &format!("{text}\n"))?;
    }
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}
