use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use infocost::and::{buzzer_grid_tree, complete_to_zero_error, completion_bound, flip_tree, grid_leaf_law, GridWalkSpec};
use infocost::cost::{internal_ic, law_of, CostReport};
use infocost::disjointness::{
    disj_bound_curve, disj_error_audit, disj_ic_exact, disj_monte_carlo, disj_protocol, DisjInstance, GridAndFactory,
};
use infocost::optimize::{
    and_tradeoff_curve, maximize_ic_and, xor_external_experiment, xor_floor_search, Constraint, Refinement,
};
use infocost::protocol::evaluate_error;
use infocost::trivial::{is_structurally_trivial, trivial_witness_protocol, TrivialKind};
use infocost::{
    binary_entropy, Decomposition, Error, FunctionTable, JointDistribution, ProtocolTree, Task, VERSION,
};

#[derive(Debug, Parser)]
#[command(name = "infocost", version, about = "Exact information-cost experiments for two-party protocols")]
struct Cli {
    /// Worker threads (default: logical cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Write the primary output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ConstraintArg {
    Zero11,
    Full,
    TwoPoint,
}

impl From<ConstraintArg> for Constraint {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::Zero11 => Constraint::ZeroAt11,
            ConstraintArg::Full => Constraint::FullSupport,
            ConstraintArg::TwoPoint => Constraint::TwoPoint,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum KindArg {
    Internal,
    External,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum DisjMode {
    Exact,
    Mc,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Binary entropy h(x) in bits.
    Entropy {
        x: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Cost report of a protocol tree under a prior.
    Ic {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        prior: PathBuf,
    },
    /// Grid buzzer protocol for zero-error AND: leaf law and cost report.
    ///
    /// CSV columns: ell,axis,mass.
    Buzzer {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        /// Reference distribution (default: uniform on {0,1}²).
        #[arg(long)]
        nu_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Flip input x1 to x0 with probability eps on Alice's side.
    Flip {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        prior: PathBuf,
        #[arg(long, default_value_t = 0)]
        x0: usize,
        #[arg(long, default_value_t = 1)]
        x1: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Complete a protocol to zero error by verifying every leaf.
    Complete {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        prior: PathBuf,
        /// `and`, `xor` or a function-table JSON file.
        #[arg(long)]
        f: String,
    },
    /// Maximise IC⁰(AND, 0) over priors by nested grid refinement.
    Optimize {
        #[arg(long, value_enum, default_value = "zero11")]
        constraint: ConstraintArg,
        #[arg(long, default_value_t = 6)]
        levels: usize,
        #[arg(long, default_value_t = 17)]
        points: usize,
    },
    /// Flip tradeoff for AND at the constraint's maximiser.
    ///
    /// CSV columns: epsilon,flip_ic,completed_ic,gain,gain_over_h.
    Tradeoff {
        #[arg(long, value_delimiter = ',', default_value = "0.0001,0.001,0.01,0.05")]
        eps_list: Vec<f64>,
        #[arg(long, value_enum, default_value = "zero11")]
        constraint: ConstraintArg,
        #[arg(long, default_value_t = 1024)]
        grid: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// External cost of XOR with error on the diagonal prior.
    ///
    /// CSV columns: epsilon,constructed_ic_ext,max_pointwise_error,floor,drawn,accepted,min_ic_ext,below_floor.
    Xor {
        #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.3333333333333333")]
        eps_list: Vec<f64>,
        /// Accepted random protocols per eps; 0 skips the search.
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Set disjointness from permuted one-sided AND rounds.
    ///
    /// CSV output is the bound curve; columns: epsilon,p,gain,bound.
    Disj {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        /// Prior of every coordinate (default: uniform on {0,1}²).
        #[arg(long)]
        coord_prior: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: DisjMode,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Grid of the per-round AND protocol.
        #[arg(long, default_value_t = 256)]
        grid: usize,
        /// Also compute the exact composite IC with this (coarse) round grid.
        #[arg(long)]
        ic_grid: Option<usize>,
        /// Epsilons for the analytic bound curve.
        #[arg(long, value_delimiter = ',')]
        bound_eps: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Structural triviality of a prior for a function, with a witness.
    TrivialCheck {
        /// `and`, `xor` or a function-table JSON file.
        #[arg(long)]
        f: String,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long, value_enum, default_value = "internal")]
        kind: KindArg,
    },
}

enum Failure {
    Parse(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 1,
            Failure::Lib(Error::Json(_) | Error::InvalidDistribution(_) | Error::InvalidProtocol(_)) => 1,
            Failure::Lib(Error::SizeCap(_) | Error::DepthCap { .. }) => 3,
            Failure::Lib(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Parse(m) => m.clone(),
            Failure::Lib(e) => e.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Outcome<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn read_dist(path: &Path) -> Outcome<JointDistribution> {
    Ok(JointDistribution::from_json(&read(path)?)?)
}

fn read_tree(path: &Path) -> Outcome<ProtocolTree> {
    serde_json::from_str(&read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn read_function(spec: &str) -> Outcome<FunctionTable> {
    match spec {
        "and" => Ok(FunctionTable::and()),
        "xor" => Ok(FunctionTable::xor()),
        path => {
            let f: FunctionTable =
                serde_json::from_str(&read(Path::new(path))?).map_err(|e| Failure::Parse(format!("{path}: {e}")))?;
            Ok(FunctionTable::new(f.nx, f.ny, f.values)?)
        }
    }
}

fn envelope(config: &Command, result: Value) -> String {
    let doc = json!({ "version": VERSION, "config": config, "result": result });
    serde_json::to_string_pretty(&doc).expect("serialisable") + "\n"
}

fn csv_table<S: Serialize>(config: &Command, rows: &[S]) -> Outcome<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Parse(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Failure::Parse(e.to_string()))?).expect("utf-8");
    let config = serde_json::to_string(config).expect("serialisable");
    Ok(format!("# infocost {VERSION}\n# config {config}\n{body}"))
}

fn to_value<S: Serialize>(v: &S) -> Value {
    serde_json::to_value(v).expect("serialisable")
}

fn run(cmd: &Command) -> Outcome<String> {
    match cmd {
        Command::Entropy { x, format } => {
            let v = binary_entropy(*x)?;
            Ok(match format {
                Format::Text => format!("{v}\n"),
                _ => envelope(cmd, json!({ "entropy": v })),
            })
        }
        Command::Ic { protocol, prior } => {
            let law = law_of(&read_tree(protocol)?, &read_dist(prior)?)?;
            Ok(envelope(cmd, to_value(&CostReport::of(&law))))
        }
        Command::Buzzer {
            p,
            q,
            n,
            nu_file,
            format,
        } => {
            let nu = match nu_file {
                Some(path) => read_dist(path)?,
                None => JointDistribution::uniform(2, 2),
            };
            let (spec, moved) = GridWalkSpec::snap(*n, *p, *q)?;
            let dec = Decomposition::new(nu, spec.start())?;
            let tree = buzzer_grid_tree(spec, &dec)?;
            let cost = CostReport::of(&law_of(&tree, &dec.real())?);
            #[derive(Serialize)]
            struct Row {
                ell: f64,
                axis: &'static str,
                mass: f64,
            }
            let rows: Vec<Row> = grid_leaf_law(spec)
                .iter()
                .map(|l| Row {
                    ell: l.ell(),
                    axis: l.axis(),
                    mass: l.mass,
                })
                .collect();
            match format {
                Format::Csv => csv_table(cmd, &rows),
                _ => Ok(envelope(
                    cmd,
                    json!({ "grid": spec, "snap_distance": moved, "real_prior": dec.real(), "cost": cost, "leaf_law": rows }),
                )),
            }
        }
        Command::Flip {
            protocol,
            prior,
            x0,
            x1,
            eps,
        } => {
            let tree = read_tree(protocol)?;
            let prior = read_dist(prior)?;
            let flipped = flip_tree(&tree, *x0, *x1, *eps)?;
            Ok(envelope(
                cmd,
                json!({
                    "cost_before": CostReport::of(&law_of(&tree, &prior)?),
                    "cost_after": CostReport::of(&law_of(&flipped, &prior)?),
                    "protocol": flipped,
                }),
            ))
        }
        Command::Complete { protocol, prior, f } => {
            let tree = read_tree(protocol)?;
            let prior = read_dist(prior)?;
            let f = read_function(f)?;
            let eps = evaluate_error(&tree, &Task::pointwise(f.clone(), 1.0)?)?.max_pointwise;
            let done = complete_to_zero_error(&tree, &f, &prior)?;
            let before = internal_ic(&law_of(&tree, &prior)?);
            let after = internal_ic(&law_of(&done, &prior)?);
            Ok(envelope(
                cmd,
                json!({
                    "epsilon": eps,
                    "ic_before": before,
                    "ic_after": after,
                    "delta": after - before,
                    "bound": completion_bound(f.nx, f.ny, eps),
                    "protocol": done,
                }),
            ))
        }
        Command::Optimize {
            constraint,
            levels,
            points,
        } => {
            let refine = Refinement {
                levels: *levels,
                points: *points,
                ..Refinement::default()
            };
            Ok(envelope(cmd, to_value(&maximize_ic_and((*constraint).into(), refine)?)))
        }
        Command::Tradeoff {
            eps_list,
            constraint,
            grid,
            format,
        } => {
            let curve = and_tradeoff_curve(eps_list, (*constraint).into(), *grid)?;
            match format {
                Format::Csv => csv_table(cmd, &curve.rows),
                _ => Ok(envelope(cmd, to_value(&curve))),
            }
        }
        Command::Xor {
            eps_list,
            samples,
            seed,
            format,
        } => {
            let built = xor_external_experiment(eps_list)?;
            let search = if *samples > 0 {
                Some(xor_floor_search(eps_list, *samples, *seed)?)
            } else {
                None
            };
            #[derive(Serialize)]
            struct Row {
                epsilon: f64,
                constructed_ic_ext: f64,
                max_pointwise_error: f64,
                floor: f64,
                drawn: Option<usize>,
                accepted: Option<usize>,
                min_ic_ext: Option<f64>,
                below_floor: Option<usize>,
            }
            let rows: Vec<Row> = built
                .iter()
                .enumerate()
                .map(|(k, b)| {
                    let s = search.as_ref().map(|s| s.rows[k]);
                    Row {
                        epsilon: b.epsilon,
                        constructed_ic_ext: b.constructed_ic_ext,
                        max_pointwise_error: b.max_pointwise_error,
                        floor: b.floor,
                        drawn: s.map(|s| s.drawn),
                        accepted: s.map(|s| s.accepted),
                        min_ic_ext: s.map(|s| s.min_ic_ext).filter(|v| v.is_finite()),
                        below_floor: s.map(|s| s.below_floor),
                    }
                })
                .collect();
            match format {
                Format::Csv => csv_table(cmd, &rows),
                _ => Ok(envelope(cmd, to_value(&rows))),
            }
        }
        Command::Disj {
            n,
            eps,
            coord_prior,
            mode,
            samples,
            seed,
            grid,
            ic_grid,
            bound_eps,
            format,
        } => {
            let w = match coord_prior {
                Some(path) => read_dist(path)?,
                None => JointDistribution::uniform(2, 2),
            };
            let inst = DisjInstance::iid(*n, w)?;
            let factory = GridAndFactory { grid: *grid };
            let curve = bound_eps.as_ref().map(|e| disj_bound_curve(e, None)).transpose()?;
            if *format == Format::Csv {
                let Some(curve) = curve else {
                    return Err(Failure::Parse("--format csv emits the bound curve and needs --bound-eps".into()));
                };
                return csv_table(cmd, &curve.points);
            }
            let audit = match mode {
                DisjMode::Exact => to_value(&disj_error_audit(&inst, *eps, &factory)?),
                DisjMode::Mc => to_value(&disj_monte_carlo(&disj_protocol(&inst, *eps, &factory)?, *samples, *seed)),
            };
            let ic = ic_grid
                .map(|g| disj_ic_exact(&inst, *eps, &GridAndFactory { grid: g }))
                .transpose()?;
            Ok(envelope(
                cmd,
                json!({ "p_one": inst.p_one(), "audit": audit, "ic": ic, "bound_curve": curve }),
            ))
        }
        Command::TrivialCheck { f, mu, kind } => {
            let f = read_function(f)?;
            let mu = read_dist(mu)?;
            let kind = match kind {
                KindArg::Internal => TrivialKind::Internal,
                KindArg::External => TrivialKind::External,
            };
            let verdict = is_structurally_trivial(&f, &mu, kind)?;
            let witness = if verdict.trivial {
                let t = trivial_witness_protocol(&f, &mu, kind)?;
                let report = CostReport::of(&law_of(&t, &mu)?);
                Some(json!({ "protocol": t, "cost": report }))
            } else {
                None
            };
            Ok(envelope(cmd, json!({ "verdict": verdict, "witness": witness })))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let output = match run(&cli.command) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, output) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{output}"),
    }
    ExitCode::SUCCESS
}
