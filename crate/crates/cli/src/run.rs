//! The `train` and `eval` commands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use difflog::examples::{check_examples, format_examples, generate_negatives, parse_examples, Example};
use difflog::frontend::{emit_program, Program};
use difflog::metrics::mean_stdev;
use difflog::train::{evaluate, train, Evaluation, TrainConfig};
use difflog::{Model, ModelOptions};
use serde_json::{json, Value};

use crate::failure::Failure;
use crate::manifest::RunManifest;
use crate::sources::{load_model, model_failure, read_text, Sources};

pub fn read_examples(path: &Path) -> Result<Vec<Example>, Failure> {
    parse_examples(&read_text(path)?).map_err(|e| Failure::data(format!("{}:{}: {}", path.display(), e.line, e.message)))
}

fn check_against(model: &Model, examples: &[Example], path: &Path) -> Result<(), Failure> {
    let problems = check_examples(examples, &model.program, &model.store);
    if problems.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = problems.iter().map(|p| format!("{}: {p}", path.display())).collect();
    Err(Failure::data(list.join("\n")))
}

pub fn evaluation_json(e: &Evaluation) -> Value {
    let per: serde_json::Map<String, Value> = e
        .per_predicate
        .iter()
        .map(|p| {
            (
                p.predicate.to_string(),
                json!({"auc": p.auc, "positives": p.positives, "negatives": p.negatives}),
            )
        })
        .collect();
    json!({
        "per_predicate": per,
        "mean_auc": e.mean_auc(),
        "weighted_auc": e.weighted_auc(),
        "skipped": e.skipped.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
    })
}

fn print_evaluation(e: &Evaluation) {
    for p in &e.per_predicate {
        println!("{}\t{:?}\t{}\t{}", p.predicate, p.auc, p.positives, p.negatives);
    }
    if let (Some(m), Some(w)) = (e.mean_auc(), e.weighted_auc()) {
        println!("mean\t{m:?}");
        println!("weighted_mean\t{w:?}");
    }
    for s in &e.skipped {
        eprintln!("warning: {s} skipped: needs both positive and negative examples");
    }
}

pub struct EvalArgs {
    pub program: Vec<PathBuf>,
    pub examples: PathBuf,
    pub depth: Option<usize>,
    pub seed: u64,
    pub json: bool,
}

pub fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let model = load_model(
        &args.program,
        ModelOptions {
            seed: args.seed,
            depth: args.depth,
        },
    )?;
    let examples = read_examples(&args.examples)?;
    check_against(&model, &examples, &args.examples)?;
    let e = evaluate(&model, &examples).map_err(model_failure)?;
    if e.per_predicate.is_empty() {
        return Err(Failure::data(
            "cannot compute AUC: no predicate has both positive and negative examples",
        ));
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&evaluation_json(&e)).unwrap());
    } else {
        print_evaluation(&e);
    }
    Ok(())
}

struct Prepared {
    program: Program,
    train: Vec<Example>,
    test: Option<Vec<Example>>,
    negatives_generated: bool,
}

fn prepare(m: &RunManifest) -> Result<Prepared, Failure> {
    let train_path = m.train.as_ref().ok_or_else(|| Failure::data("no training examples given"))?;
    let mut inputs: Vec<&PathBuf> = m.program.iter().collect();
    inputs.push(train_path);
    inputs.extend(m.test.iter());
    for p in inputs {
        if !p.is_file() {
            return Err(Failure::data(format!("{}: file not found", p.display())));
        }
    }
    let program = Sources::load(&m.program)?.program()?;
    let mut train = read_examples(train_path)?;
    let mut test = m.test.as_deref().map(read_examples).transpose()?;
    let seed = m.seed.unwrap_or(0);
    if let Some(k) = m.generate_negatives {
        let extra = generate_negatives(&train, &program, k, seed);
        train.extend(extra);
        if let Some(t) = test.as_mut() {
            let extra = generate_negatives(t, &program, k, seed.wrapping_add(1));
            t.extend(extra);
        }
    }
    let probe = Model::new(
        program.clone(),
        ModelOptions {
            seed,
            depth: m.depth,
        },
    )
    .map_err(model_failure)?;
    for w in &probe.network.warnings {
        eprintln!("warning: {w}");
    }
    check_against(&probe, &train, train_path)?;
    if let (Some(t), Some(p)) = (&test, &m.test) {
        check_against(&probe, t, p)?;
    }
    Ok(Prepared {
        program,
        train,
        test,
        negatives_generated: m.generate_negatives.is_some(),
    })
}

struct RunResult {
    train_auc: Option<f64>,
    test_auc: Option<f64>,
}

fn run_once(m: &RunManifest, data: &Prepared, seed: u64, dir: &Path) -> Result<RunResult, Failure> {
    let options = ModelOptions { seed, depth: m.depth };
    let mut model = Model::new(data.program.clone(), options).map_err(model_failure)?;
    let defaults = TrainConfig::default();
    let config = TrainConfig {
        epochs: m.epochs.unwrap_or(defaults.epochs),
        learning_rate: m.learning_rate.unwrap_or(defaults.learning_rate),
        epsilon: m.epsilon.unwrap_or(defaults.epsilon),
        batch_size: m.batch_size,
        seed,
    };
    let report = train(&mut model, &data.train, &config).map_err(|e| Failure::data(e.to_string()))?;
    let train_eval = evaluate(&model, &data.train).map_err(model_failure)?;
    let test_eval = data
        .test
        .as_ref()
        .map(|t| evaluate(&model, t))
        .transpose()
        .map_err(model_failure)?;

    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut loss = String::from("epoch\tmse\n");
    for (i, l) in report.losses.iter().enumerate() {
        loss.push_str(&format!("{}\t{l:?}\n", i + 1));
    }
    write(&dir.join("loss.tsv"), &loss)?;
    let metrics = json!({
        "seed": seed,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "depth": model.depth(),
        "final_loss": report.losses.last(),
        "train": evaluation_json(&train_eval),
        "test": test_eval.as_ref().map(evaluation_json),
    });
    write(&dir.join("metrics.json"), &serde_json::to_string_pretty(&metrics).unwrap())?;
    write(&dir.join("learned.pl"), &emit_program(&model.export_program()))?;
    if data.negatives_generated {
        write(&dir.join("train.ex"), &format_examples(&data.train))?;
        if let Some(t) = &data.test {
            write(&dir.join("test.ex"), &format_examples(t))?;
        }
    }
    Ok(RunResult {
        train_auc: train_eval.mean_auc(),
        test_auc: test_eval.as_ref().and_then(Evaluation::mean_auc),
    })
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn summary(values: &[Option<f64>]) -> Option<(f64, f64)> {
    let v: Vec<f64> = values.iter().flatten().copied().collect();
    (!v.is_empty()).then(|| mean_stdev(&v))
}

pub fn cmd_train(m: RunManifest) -> Result<(), Failure> {
    let out = m.output.clone().ok_or_else(|| Failure::data("no output directory given"))?;
    let repeats = m.repeats.unwrap_or(1);
    if repeats == 0 {
        return Err(Failure::data("repeats must be at least 1"));
    }
    let data = prepare(&m)?;
    let seed = m.seed.unwrap_or(0);
    let mut results = Vec::new();
    for r in 0..repeats as u64 {
        let s = seed + r;
        let dir = if repeats == 1 { out.clone() } else { out.join(format!("run_{s}")) };
        let res = run_once(&m, &data, s, &dir)?;
        println!(
            "seed {s}\ttrain_auc {}\ttest_auc {}",
            show(res.train_auc),
            show(res.test_auc)
        );
        results.push(res);
    }
    if repeats > 1 {
        let train = summary(&results.iter().map(|r| r.train_auc).collect::<Vec<_>>());
        let test = summary(&results.iter().map(|r| r.test_auc).collect::<Vec<_>>());
        let pair = |x: Option<(f64, f64)>| x.map(|(m, s)| json!({"mean": m, "stdev": s}));
        let doc = json!({
            "repeats": repeats,
            "seeds": (seed..seed + repeats as u64).collect::<Vec<_>>(),
            "train_auc": pair(train),
            "test_auc": pair(test),
        });
        write(&out.join("summary.json"), &serde_json::to_string_pretty(&doc).unwrap())?;
        if let Some((mean, sd)) = test.or(train) {
            let which = if test.is_some() { "test" } else { "train" };
            println!("{which} AUC {mean:.4} ± {sd:.4} over {repeats} runs");
        }
    }
    Ok(())
}

fn show(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{v:?}"))
}
