//! `kwtopo`: homology tables, NFG partition sums, dualization and
//! Kramers-Wannier checks from the command line.
//!
//! Exit codes: 0 success, 1 identity violated, 2 invalid input,
//! 3 composite modulus, 4 enumeration budget exceeded.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kwtopo::bridge::{nfg_image, nfg_io, nfg_kernel, OperatorNfg};
use kwtopo::complex::{
    build_cube_3complex, build_grid_1complex, build_grid_2complex, build_torus_2complex,
    build_torus_3complex, homology_dims, ChainComplex,
};
use kwtopo::fourier::{dualize, ScaleLedger};
use kwtopo::models::{
    self, kw_verify, twisted_nfg, Cycle, InteractionKernel, KernelKind, KwReport, CSV_HEADER,
};
use kwtopo::nfg::{partition_sum_brute, partition_sum_contracted, ContractOptions, Nfg, SCHEMA_VERSION};
use kwtopo::parallel::DEFAULT_BUDGET;
use kwtopo::{Error, EvalConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "kwtopo", version, about = "Chain complexes, normal factor graphs and Kramers-Wannier duality checks")]
struct Cli {
    /// Worker threads for enumerations; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cell counts and homology dimensions of a lattice complex.
    Homology(HomologyArgs),
    /// Partition sum of an NFG file or a built-in model.
    Partition(PartitionArgs),
    /// Check the Kramers-Wannier identity on a torus.
    Kw(KwArgs),
    /// Fourier dual of an NFG file, with a ledger of omitted constants.
    Dualize(DualizeArgs),
    /// Operator NFG of a boundary or coboundary map.
    BuildNfg(BuildArgs),
    /// CSV of 2D Ising checks over a range of temperatures.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LatticeKind {
    Graph,
    Grid2d,
    Torus2d,
    Cube3d,
    Torus3d,
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long, value_enum)]
    lattice: LatticeKind,
    #[arg(long, default_value_t = 3)]
    rows: usize,
    #[arg(long, default_value_t = 3)]
    cols: usize,
    #[arg(long, default_value_t = 2)]
    l1: usize,
    #[arg(long, default_value_t = 2)]
    l2: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Face index to remove (grid2d only); repeatable.
    #[arg(long = "hole")]
    holes: Vec<usize>,
}

#[derive(Args)]
struct HomologyArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Write a Graphviz rendering of the complex.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Brute,
    Contract,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelName {
    Ising2d,
    Ising3d,
    Potts2d,
}

#[derive(Clone, Copy, ValueEnum)]
enum PottsKind {
    Standard,
    Vector,
}

impl From<PottsKind> for KernelKind {
    fn from(k: PottsKind) -> Self {
        match k {
            PottsKind::Standard => KernelKind::StandardPotts,
            PottsKind::Vector => KernelKind::VectorPotts,
        }
    }
}

#[derive(Args)]
struct PartitionArgs {
    /// NFG JSON document.
    #[arg(long, conflicts_with = "model")]
    nfg: Option<PathBuf>,
    #[arg(long, value_enum, required_unless_present = "nfg")]
    model: Option<ModelName>,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[arg(long, default_value_t = 3)]
    q: u32,
    #[arg(long, value_enum, default_value = "standard")]
    kind: PottsKind,
    /// Cycles to twist along, e.g. `h,v`.
    #[arg(long, value_delimiter = ',')]
    twist: Vec<String>,
    #[arg(long, value_enum, default_value = "brute")]
    method: Method,
    /// Run both methods and require agreement within --tol.
    #[arg(long)]
    check: bool,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// End every half-edge in the all-one function before summing.
    #[arg(long)]
    close_half_edges: bool,
}

#[derive(Args)]
struct KwArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    l: usize,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Kernel for q > 2.
    #[arg(long, value_enum, default_value = "standard")]
    kind: PottsKind,
}

#[derive(Args)]
struct DualizeArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Ledger sidecar; defaults to the output path with `.ledger.json`.
    #[arg(long)]
    ledger: Option<PathBuf>,
    /// End every half-edge in the all-one function first.
    #[arg(long)]
    close_half_edges: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Form {
    Io,
    Ker,
    Im,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OpSpec {
    form: Form,
    /// `b` for a boundary map, `d` for a coboundary map.
    coboundary: bool,
    index: usize,
}

impl FromStr for OpSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("expected io|ker|im followed by -b<i> or -d<i>, got `{s}`");
        let (form, map) = s.split_once('-').ok_or_else(bad)?;
        let form = match form {
            "io" => Form::Io,
            "ker" => Form::Ker,
            "im" => Form::Im,
            _ => return Err(bad()),
        };
        let coboundary = match map.chars().next() {
            Some('b') => false,
            Some('d') => true,
            _ => return Err(bad()),
        };
        let index: usize = map[1..].parse().map_err(|_| bad())?;
        if index == 0 {
            return Err(bad());
        }
        Ok(Self {
            form,
            coboundary,
            index,
        })
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Form and map, e.g. `ker-d1`, `im-b2`, `io-b1`. `b<i>` is the boundary
    /// from i-cells to (i-1)-cells, `d<i>` its transpose.
    #[arg(long)]
    op: OpSpec,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Output path for the NFG JSON; stdout if absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    l: usize,
    /// Explicit temperatures; overrides the range.
    #[arg(long, value_delimiter = ',')]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    beta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_max: f64,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Write 0 in the seconds column so output is byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

/// Failure with its exit code.
#[derive(Debug)]
enum Failure {
    Violation(String),
    Library(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Library(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Violation(_) => 1,
            Failure::Input(_) => 2,
            Failure::Library(Error::CompositeModulus { .. }) => 3,
            Failure::Library(Error::BudgetExceeded { .. }) => 4,
            Failure::Library(_) => 2,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Violation(m) | Failure::Input(m) => f.write_str(m),
            Failure::Library(e) => write!(f, "{e}"),
        }
    }
}

type Outcome = Result<(), Failure>;

fn eval_config(workers: usize) -> Result<EvalConfig, Failure> {
    let budget = match std::env::var("KWTOPO_BUDGET") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&b| b >= 1)
            .ok_or_else(|| Failure::Input(format!("KWTOPO_BUDGET must be a positive integer, got `{v}`")))?,
        Err(_) => DEFAULT_BUDGET,
    };
    if workers == 0 {
        return Err(Failure::Input("--workers must be at least 1".into()));
    }
    Ok(EvalConfig::default()
        .with_budget(budget)
        .with_workers(workers))
}

fn check_tol(tol: f64) -> Outcome {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::Input(format!("--tol must be positive, got {tol}")))
    }
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn build_lattice(a: &LatticeArgs) -> Result<ChainComplex, Failure> {
    if !a.holes.is_empty() && !matches!(a.lattice, LatticeKind::Grid2d) {
        return Err(Failure::Input("--hole applies to grid2d only".into()));
    }
    Ok(match a.lattice {
        LatticeKind::Graph => build_grid_1complex(a.rows, a.cols, a.q)?,
        LatticeKind::Grid2d => build_grid_2complex(a.rows, a.cols, a.q, &a.holes)?,
        LatticeKind::Torus2d => build_torus_2complex(a.l1, a.l2, a.q)?,
        LatticeKind::Cube3d => build_cube_3complex(a.l, a.q)?,
        LatticeKind::Torus3d => build_torus_3complex(a.l, a.q)?,
    })
}

#[derive(Serialize)]
struct HomologyReport {
    schema_version: u32,
    q: u32,
    /// Cell counts, top dimension first.
    cells: Vec<usize>,
    /// Homology dimensions, top dimension first.
    homology: Vec<usize>,
}

fn cmd_homology(a: &HomologyArgs) -> Outcome {
    let c = build_lattice(&a.lattice)?;
    let homology = homology_dims(&c)?;
    if let Some(path) = &a.dot {
        write_file(path, &c.to_dot())?;
    }
    let mut cells = c.cell_counts();
    cells.reverse();
    print_json(&HomologyReport {
        schema_version: SCHEMA_VERSION,
        q: c.q(),
        cells,
        homology,
    });
    Ok(())
}

#[derive(Serialize)]
struct PartitionReport {
    schema_version: u32,
    method: &'static str,
    /// `[re, im]`
    z: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    brute: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contract: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_diff: Option<f64>,
}

fn model_nfg(a: &PartitionArgs) -> Result<Nfg, Failure> {
    let model = match a.model.expect("clap requires --model without --nfg") {
        ModelName::Ising2d => models::ising_nfg_torus(a.l, a.beta)?,
        ModelName::Ising3d => models::ising_nfg_torus3d(a.l, a.beta)?,
        ModelName::Potts2d => models::potts_nfg_torus(a.l, a.q, a.beta, a.kind.into())?,
    };
    let cycles = a
        .twist
        .iter()
        .map(|s| s.parse::<Cycle>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(if cycles.is_empty() {
        model.nfg
    } else {
        twisted_nfg(&model, &cycles)?.nfg
    })
}

fn pair(z: num_complex::Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn cmd_partition(a: &PartitionArgs, cfg: &EvalConfig) -> Outcome {
    check_tol(a.tol)?;
    let mut nfg = match &a.nfg {
        Some(path) => Nfg::from_json(&read_file(path)?)?,
        None => model_nfg(a)?,
    };
    if a.close_half_edges {
        nfg = nfg.close_half_edges()?;
    }
    let brute = || partition_sum_brute(&nfg, cfg);
    let contract = || partition_sum_contracted(&nfg, None, &ContractOptions::default());
    if a.check {
        let (b, c) = (brute()?, contract()?);
        let rel = (b - c).norm() / b.norm().max(c.norm()).max(f64::MIN_POSITIVE);
        print_json(&PartitionReport {
            schema_version: SCHEMA_VERSION,
            method: "check",
            z: pair(b),
            brute: Some(pair(b)),
            contract: Some(pair(c)),
            rel_diff: Some(rel),
        });
        if rel > a.tol {
            return Err(Failure::Violation(format!(
                "brute force and contraction differ by {rel:e} (tol {:e})",
                a.tol
            )));
        }
        return Ok(());
    }
    let (method, z) = match a.method {
        Method::Brute => ("brute", brute()?),
        Method::Contract => ("contract", contract()?),
    };
    print_json(&PartitionReport {
        schema_version: SCHEMA_VERSION,
        method,
        z: pair(z),
        brute: None,
        contract: None,
        rel_diff: None,
    });
    Ok(())
}

fn kw_table(r: &KwReport, tol: f64, pass: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "dim {}  L {}  n {}  q {}  kernel {:?}",
        r.dim, r.l, r.n, r.q, r.kernel
    );
    let _ = writeln!(s, "beta       {:.10}", r.beta);
    let _ = writeln!(s, "beta_dual  {:.15}", r.beta_dual);
    if let Some(c) = r.c_beta {
        let _ = writeln!(s, "c_beta     {c:.15}");
    }
    let _ = writeln!(s, "Z          {:.15e}", r.z_primal);
    for t in &r.twisted {
        let _ = writeln!(s, "alpha {:?}  {:.15e}", t.alpha, t.value);
    }
    let _ = writeln!(s, "prefactor  {:.15e}", r.prefactor);
    let _ = writeln!(s, "rhs        {:.15e}", r.rhs);
    let _ = writeln!(s, "rel_err    {:.3e}", r.rel_err);
    let _ = writeln!(s, "coset_err  {:.3e}", r.coset_rel_err);
    let _ = writeln!(
        s,
        "{} (tol {tol:e}, {:.3} s)",
        if pass { "PASS" } else { "FAIL" },
        r.seconds
    );
    s
}

fn cmd_kw(a: &KwArgs, cfg: &EvalConfig) -> Outcome {
    check_tol(a.tol)?;
    if a.beta <= 0.0 {
        return Err(Error::NonpositiveBeta(a.beta).into());
    }
    let kernel = if a.q == 2 {
        InteractionKernel::ising(a.beta)?
    } else {
        InteractionKernel::new(a.kind.into(), a.q, a.beta)?
    };
    let r = kw_verify(a.dim, a.l, &kernel, cfg)?;
    let pass = r.rel_err <= a.tol && r.coset_rel_err <= a.tol;
    print_json(&r);
    eprint!("{}", kw_table(&r, a.tol, pass));
    if pass {
        Ok(())
    } else {
        Err(Failure::Violation(format!(
            "identity violated: rel_err {:e}, coset rel {:e} (tol {:e})",
            r.rel_err, r.coset_rel_err, a.tol
        )))
    }
}

#[derive(Serialize)]
struct LedgerDocument<'a> {
    schema_version: u32,
    /// Z_dual * value = q^edges * Z
    value: f64,
    edges: usize,
    #[serde(flatten)]
    ledger: &'a ScaleLedger,
}

fn cmd_dualize(a: &DualizeArgs) -> Outcome {
    let mut nfg = Nfg::from_json(&read_file(&a.input)?)?;
    if a.close_half_edges {
        nfg = nfg.close_half_edges()?;
    }
    let (dual, ledger) = dualize(&nfg)?;
    write_file(&a.output, &dual.to_json())?;
    let sidecar = a
        .ledger
        .clone()
        .unwrap_or_else(|| a.output.with_extension("ledger.json"));
    let doc = LedgerDocument {
        schema_version: SCHEMA_VERSION,
        value: ledger.value(),
        edges: nfg.edges().len(),
        ledger: &ledger,
    };
    write_file(&sidecar, &serde_json::to_string_pretty(&doc).expect("ledger serializes"))?;
    Ok(())
}

fn cmd_build_nfg(a: &BuildArgs) -> Outcome {
    let c = build_lattice(&a.lattice)?;
    let top = c.dimension().unwrap_or(0);
    let op = a.op;
    if op.index > top {
        return Err(Failure::Input(format!(
            "the complex has maps up to index {top}, not {}",
            op.index
        )));
    }
    let m = if op.coboundary {
        c.coboundary_zq(op.index)?
    } else {
        c.boundary_zq(op.index)?
    };
    let built: OperatorNfg = match op.form {
        Form::Io => nfg_io(&m)?,
        Form::Ker => nfg_kernel(&m)?,
        Form::Im => nfg_image(&m)?,
    };
    if let Some(path) = &a.dot {
        write_file(path, &built.nfg.to_dot())?;
    }
    let json = built.nfg.to_json();
    match &a.output {
        Some(path) => write_file(path, &json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn sweep_betas(a: &SweepArgs) -> Result<Vec<f64>, Failure> {
    if !a.betas.is_empty() {
        return Ok(a.betas.clone());
    }
    if a.steps == 0 || a.beta_min > a.beta_max {
        return Err(Failure::Input("need steps >= 1 and beta_min <= beta_max".into()));
    }
    if a.steps == 1 {
        return Ok(vec![a.beta_min]);
    }
    let step = (a.beta_max - a.beta_min) / (a.steps - 1) as f64;
    Ok((0..a.steps).map(|i| a.beta_min + step * i as f64).collect())
}

fn cmd_sweep(a: &SweepArgs, cfg: &EvalConfig) -> Outcome {
    check_tol(a.tol)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut worst: f64 = 0.0;
    for beta in sweep_betas(a)? {
        let mut r = models::kw_verify_2d(a.l, beta, cfg)?;
        if a.no_timing {
            r.seconds = 0.0;
        }
        worst = worst.max(r.rel_err);
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    match &a.output {
        Some(path) => write_file(path, &csv)?,
        None => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(csv.as_bytes());
        }
    }
    if worst > a.tol {
        return Err(Failure::Violation(format!(
            "largest rel_err {worst:e} exceeds {:e}",
            a.tol
        )));
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    let cfg = eval_config(cli.workers)?;
    match &cli.command {
        Command::Homology(a) => cmd_homology(a),
        Command::Partition(a) => cmd_partition(a, &cfg),
        Command::Kw(a) => cmd_kw(a, &cfg),
        Command::Dualize(a) => cmd_dualize(a),
        Command::BuildNfg(a) => cmd_build_nfg(a),
        Command::Sweep(a) => cmd_sweep(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_specs_parse() {
        assert_eq!(
            "ker-d1".parse::<OpSpec>().unwrap(),
            OpSpec {
                form: Form::Ker,
                coboundary: true,
                index: 1
            }
        );
        assert_eq!("im-b2".parse::<OpSpec>().unwrap().index, 2);
        for bad in ["ker", "ker-x1", "io-b0", "in-b1", "ker-b"] {
            assert!(bad.parse::<OpSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::CompositeModulus { q: 4 }).code(), 3);
        assert_eq!(
            Failure::from(Error::BudgetExceeded { needed: 1.0, cap: 0 }).code(),
            4
        );
        assert_eq!(Failure::Violation(String::new()).code(), 1);
        assert_eq!(Failure::from(Error::NotATorus).code(), 2);
    }
}
