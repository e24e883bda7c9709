//! Training run manifests (TOML).
//!
//! ```toml
//! program = ["kb.pl", "theory.pl"]
//! train = "train.ex"
//! test = "test.ex"
//! output = "out"
//! seed = 3
//! epochs = 10
//! learning_rate = 0.1
//! depth = 1
//! repeats = 1
//! generate_negatives = 5
//! ```
//!
//! Relative paths are resolved against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::failure::Failure;
use crate::sources::read_text;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(PathBuf),
    Many(Vec<PathBuf>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    program: OneOrMany,
    train: PathBuf,
    test: Option<PathBuf>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    epsilon: Option<f64>,
    depth: Option<usize>,
    batch_size: Option<usize>,
    repeats: Option<usize>,
    generate_negatives: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunManifest {
    pub program: Vec<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub epsilon: Option<f64>,
    pub depth: Option<usize>,
    pub batch_size: Option<usize>,
    pub repeats: Option<usize>,
    pub generate_negatives: Option<usize>,
}

impl RunManifest {
    pub fn parse(text: &str, base: &Path) -> Result<RunManifest, String> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| e.to_string())?;
        let at = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
        let program = match raw.program {
            OneOrMany::One(p) => vec![p],
            OneOrMany::Many(ps) => ps,
        };
        Ok(RunManifest {
            program: program.into_iter().map(at).collect(),
            train: Some(at(raw.train)),
            test: raw.test.map(at),
            output: raw.output.map(at),
            seed: raw.seed,
            epochs: raw.epochs,
            learning_rate: raw.learning_rate,
            epsilon: raw.epsilon,
            depth: raw.depth,
            batch_size: raw.batch_size,
            repeats: raw.repeats,
            generate_negatives: raw.generate_negatives,
        })
    }

    pub fn load(path: &Path) -> Result<RunManifest, Failure> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        RunManifest::parse(&text, base).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace ours.
    pub fn override_with(mut self, other: RunManifest) -> RunManifest {
        if !other.program.is_empty() {
            self.program = other.program;
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(train, test, output, seed, epochs, learning_rate, epsilon, depth, batch_size, repeats, generate_negatives);
        self
    }
}
