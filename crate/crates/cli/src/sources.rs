//! Loading program files and mapping positions back to them.

use std::fs;
use std::path::{Path, PathBuf};

use difflog::frontend::{parse_program, validate_program, Program, Severity, Span};
use difflog::{Model, ModelError, ModelOptions};

use crate::failure::Failure;

struct SourceFile {
    path: PathBuf,
    first_line: usize,
}

/// Several `.pl` files read as one program, concatenated in order.
pub struct Sources {
    files: Vec<SourceFile>,
    text: String,
}

impl Sources {
    pub fn load(paths: &[PathBuf]) -> Result<Sources, Failure> {
        if paths.is_empty() {
            return Err(Failure::data("no program files given"));
        }
        let mut files = Vec::new();
        let mut text = String::new();
        let mut line = 1;
        for path in paths {
            let src = fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
            files.push(SourceFile {
                path: path.clone(),
                first_line: line,
            });
            text.push_str(&src);
            if !src.ends_with('\n') {
                text.push('\n');
            }
            line = text.lines().count() + 1;
        }
        Ok(Sources { files, text })
    }

    pub fn locate(&self, span: Span) -> String {
        let file = self
            .files
            .iter()
            .rev()
            .find(|f| f.first_line <= span.line)
            .unwrap_or(&self.files[0]);
        format!(
            "{}:{}:{}",
            file.path.display(),
            span.line + 1 - file.first_line,
            span.column
        )
    }

    fn location(&self, span: Option<Span>) -> String {
        match span {
            Some(s) => self.locate(s),
            None => self.files.iter().map(|f| f.path.display().to_string()).collect::<Vec<_>>().join(", "),
        }
    }

    /// Parses and validates; warnings go to stderr, errors fail with exit 1.
    pub fn program(&self) -> Result<Program, Failure> {
        let program = parse_program(&self.text)
            .map_err(|e| Failure::diagnostics(format!("{}: error: {}", self.locate(e.span), e.kind)))?;
        let mut errors = Vec::new();
        for d in validate_program(&program) {
            let line = format!(
                "{}: {}: {}",
                self.location(d.span),
                match d.severity {
                    Severity::Error => "error",
                    Severity::Warning => "warning",
                },
                d.message
            );
            if d.is_error() {
                errors.push(line);
            } else {
                eprintln!("{line}");
            }
        }
        if errors.is_empty() {
            Ok(program)
        } else {
            Err(Failure::diagnostics(errors.join("\n")))
        }
    }
}

pub fn load_model(paths: &[PathBuf], options: ModelOptions) -> Result<Model, Failure> {
    let program = Sources::load(paths)?.program()?;
    let model = Model::new(program, options).map_err(model_failure)?;
    for w in &model.network.warnings {
        eprintln!("warning: {w}");
    }
    Ok(model)
}

/// Program problems exit with 1, data problems with 2.
pub fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::Parse(_) | ModelError::Diagnostics(_) | ModelError::Network(_) => Failure::diagnostics(e.to_string()),
        _ => Failure::data(e.to_string()),
    }
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}
