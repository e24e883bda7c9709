mod failure;
mod manifest;
mod run;
mod sources;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use difflog::autodiff::Value;
use difflog::compiler::dot::{path_tree_dot, term_graph_dot};
use difflog::compiler::{compile_rule, DEFAULT_MAX_PARTIAL_PATHS};
use difflog::frontend::{emit_program, format_atom, format_rule, format_term, parse_atom};
use difflog::network::dot::network_dot;
use difflog::network::Layer;
use difflog::{ModelOptions, Query};

use failure::Failure;
use manifest::RunManifest;
use run::{cmd_eval, cmd_train, EvalArgs};
use sources::{load_model, model_failure, Sources};

/// Compile weighted logic programs into differentiable networks, query
/// them and learn their weights.
#[derive(Parser)]
#[command(name = "difflog", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelFlags {
    /// Recursion depth (defaults to the program's directive, else 1).
    #[arg(long)]
    depth: Option<usize>,
    /// Seed for dense initialisation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModelFlags {
    fn options(&self) -> ModelOptions {
        ModelOptions {
            seed: self.seed,
            depth: self.depth,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the path plan of every rule and a summary of the network.
    Compile {
        #[arg(required = true)]
        program: Vec<PathBuf>,
        /// Write term-graph, path-tree and network DOT files here.
        #[arg(long, value_name = "DIR")]
        emit_dot: Option<PathBuf>,
        #[command(flatten)]
        flags: ModelFlags,
    },
    /// Score a query such as `p(a, Y)`, `p(X, a)` or `q(a)`.
    Query {
        #[arg(required = true)]
        program: Vec<PathBuf>,
        #[arg(short, long)]
        query: String,
        /// Print only the k best entities.
        #[arg(long)]
        top: Option<usize>,
        #[command(flatten)]
        flags: ModelFlags,
    },
    /// Learn weights from labelled examples.
    Train(TrainArgs),
    /// AUC-ROC of a program on labelled examples.
    Eval {
        #[arg(required = true)]
        program: Vec<PathBuf>,
        #[arg(short, long)]
        examples: PathBuf,
        /// Print JSON instead of TSV.
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        flags: ModelFlags,
    },
    /// Re-emit the program, materialising dense initial weights.
    Export {
        #[arg(required = true)]
        program: Vec<PathBuf>,
        /// Output file (stdout by default).
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: ModelFlags,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// TOML manifest; flags override its fields.
    #[arg(long)]
    manifest: Option<PathBuf>,
    program: Vec<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Rerun with seeds seed..seed+r-1 and report mean and stdev AUC.
    #[arg(long)]
    repeats: Option<usize>,
    /// Add up to k local closed world negatives per positive's first argument.
    #[arg(long, value_name = "K")]
    generate_negatives: Option<usize>,
}

impl TrainArgs {
    fn manifest(self) -> Result<RunManifest, Failure> {
        let flags = RunManifest {
            program: self.program,
            train: self.train,
            test: self.test,
            output: self.out,
            seed: self.seed,
            epochs: self.epochs,
            learning_rate: self.lr,
            epsilon: None,
            depth: self.depth,
            batch_size: self.batch_size,
            repeats: self.repeats,
            generate_negatives: self.generate_negatives,
        };
        Ok(match self.manifest {
            Some(path) => RunManifest::load(&path)?.override_with(flags),
            None => flags,
        })
    }
}

fn cmd_compile(program: &[PathBuf], emit_dot: Option<PathBuf>, flags: &ModelFlags) -> Result<(), Failure> {
    let parsed = Sources::load(program)?.program()?;
    if let Some(dir) = &emit_dot {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    for (i, rule) in parsed.rules.iter().enumerate() {
        let n = i + 1;
        println!("rule {n}: {}", format_rule(rule));
        let compiled = compile_rule(rule, rule.head.arity() - 1, DEFAULT_MAX_PARTIAL_PATHS)
            .map_err(|e| Failure::diagnostics(format!("rule {n}: error: {e}")))?;
        let plan = &compiled.plan;
        let name = |k: usize| format_term(&plan.graph.nodes[k]);
        let inputs: Vec<String> = plan.sources.iter().map(|&s| name(s)).collect();
        println!("  inputs: {}", inputs.join(", "));
        println!("  output: {}", name(plan.destination));
        for (k, p) in plan.paths.iter().enumerate() {
            println!("  path {}: {}", k + 1, p.describe(rule, &plan.graph));
        }
        for &g in &plan.disconnected_grounds {
            println!("  ground: {}", format_atom(&rule.body[g]));
        }
        for &u in &plan.unreachable {
            println!("  unreachable: {}", format_atom(&rule.body[u]));
        }
        if let Some(dir) = &emit_dot {
            write(&dir.join(format!("rule_{n}_terms.dot")), &term_graph_dot(rule, &plan.graph))?;
            write(&dir.join(format!("rule_{n}_paths.dot")), &path_tree_dot(rule, plan))?;
        }
    }
    println!("program: {} rules, {} facts", parsed.rules.len(), parsed.facts.len());
    let model = difflog::Model::new(parsed, flags.options()).map_err(model_failure)?;
    for w in &model.network.warnings {
        eprintln!("warning: {w}");
    }
    let net = &model.network;
    let count = |f: fn(&Layer) -> bool| net.layers.iter().filter(|l| f(l)).count();
    println!(
        "network: {} layers ({} fact, {} rule, {} literal, {} function, {} empty), {} targets, depth {}",
        net.layers.len(),
        count(|l| matches!(l, Layer::Fact { .. })),
        count(|l| matches!(l, Layer::Rule(_))),
        count(|l| matches!(l, Layer::Literal { .. })),
        count(|l| matches!(l, Layer::Function { .. })),
        count(|l| matches!(l, Layer::Empty { .. })),
        net.roots.len(),
        net.depth
    );
    if let Some(dir) = &emit_dot {
        write(&dir.join("network.dot"), &network_dot(net))?;
    }
    Ok(())
}

fn write(path: &std::path::Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn cmd_query(program: &[PathBuf], query: &str, top: Option<usize>, flags: &ModelFlags) -> Result<(), Failure> {
    let model = load_model(program, flags.options())?;
    let atom = parse_atom(query).map_err(|e| Failure::data(format!("query: {e}")))?;
    let kind = model.classify_query(&atom).map_err(model_failure)?;
    let value = model.query(&atom).map_err(model_failure)?;
    match (kind, value) {
        (Query::Ground(a), Value::Scalar(s)) => println!("{}\t{s:?}", format_atom(&a)),
        (_, Value::Vector(v)) => {
            let mut hits: Vec<(usize, f64)> = v.into_iter().enumerate().filter(|(_, s)| *s != 0.0).collect();
            hits.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            hits.truncate(top.unwrap_or(usize::MAX));
            for (i, s) in hits {
                println!("{}\t{s:?}", model.store.entities.name(i));
            }
        }
        (_, Value::Scalar(s)) => println!("{s:?}"),
    }
    Ok(())
}

fn cmd_export(program: &[PathBuf], output: Option<PathBuf>, flags: &ModelFlags) -> Result<(), Failure> {
    let model = load_model(program, flags.options())?;
    let text = emit_program(&model.export_program());
    match output {
        Some(path) => write(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compile {
            program,
            emit_dot,
            flags,
        } => cmd_compile(&program, emit_dot, &flags),
        Command::Query {
            program,
            query,
            top,
            flags,
        } => cmd_query(&program, &query, top, &flags),
        Command::Train(args) => cmd_train(args.manifest()?),
        Command::Eval {
            program,
            examples,
            json,
            flags,
        } => cmd_eval(EvalArgs {
            program,
            examples,
            depth: flags.depth,
            seed: flags.seed,
            json,
        }),
        Command::Export { program, output, flags } => cmd_export(&program, output, &flags),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
