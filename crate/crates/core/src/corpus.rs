//! Corpus entries on disk: one directory per entry holding `program.ml0`,
//! `test.ml0`, `meta`, and optionally `truth.stub`, `broken.stub`, and
//! `alternative.stub`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::ast::{Program, TestCase};
use crate::minilang::{execute, parse_arrange, parse_program, parse_test, ExecOptions, LangError, Limits};
use crate::stubir::{StubParseError, StubProgram};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{entry}/{file}: {msg}")]
    Parse { entry: String, file: &'static str, msg: String },
    #[error("{entry}: {check}")]
    InvariantViolation { entry: String, check: String },
    #[error("no corpus entry `{0}`")]
    UnknownEntry(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub id: String,
    /// Class the mutants of a fidelity run are seeded into.
    pub cut: String,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub id: String,
    pub dir: PathBuf,
    pub meta: EntryMeta,
    pub program: Program,
    pub test: TestCase,
    pub broken: Option<String>,
    pub truth: Option<StubProgram>,
    /// A second passing stub, for entries whose oracle admits several.
    pub alternative: Option<StubProgram>,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })
}

fn read_opt(path: &Path) -> Result<Option<String>, CorpusError> {
    if path.exists() {
        read(path).map(Some)
    } else {
        Ok(None)
    }
}

fn passes(prog: &Program, test: &TestCase, stub: &str) -> Result<bool, LangError> {
    let block = parse_arrange(stub, prog, test)?;
    Ok(execute(prog, test, &block, &ExecOptions { limits: Limits::default(), mutation: None }).passed())
}

/// Loads one entry directory and checks that the ground truth (and the
/// alternative) passes and that an empty stub fails.
pub fn load_entry(dir: &Path) -> Result<CorpusEntry, CorpusError> {
    let dir_name = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let meta_src = read(&dir.join("meta"))?;
    let meta: EntryMeta = serde_json::from_str(&meta_src)
        .map_err(|e| CorpusError::Parse { entry: dir_name.clone(), file: "meta", msg: e.to_string() })?;
    let id = meta.id.clone();
    let lang = |file: &'static str| {
        let id = id.clone();
        move |e: LangError| CorpusError::Parse { entry: id, file, msg: e.to_string() }
    };
    let program = parse_program(&read(&dir.join("program.ml0"))?).map_err(lang("program.ml0"))?;
    let test = parse_test(&read(&dir.join("test.ml0"))?, &program).map_err(lang("test.ml0"))?;
    let violation = |check: String| CorpusError::InvariantViolation { entry: id.clone(), check };
    if program.class(&meta.cut).is_none() {
        return Err(violation(format!("meta names class `{}`, which the program does not declare", meta.cut)));
    }

    let stub = |file: &'static str| -> Result<Option<StubProgram>, CorpusError> {
        let Some(text) = read_opt(&dir.join(file))? else { return Ok(None) };
        let sp = StubProgram::parse(&text, &program, &test).map_err(|e| match e {
            StubParseError::Lang(l) => lang(file)(l),
            other => CorpusError::Parse { entry: id.clone(), file, msg: other.to_string() },
        })?;
        let violations = sp.validate(&program, &test);
        if !violations.is_empty() {
            return Err(violation(format!("{file} is not a valid stub: {violations:?}")));
        }
        if !passes(&program, &test, &text).map_err(lang(file))? {
            return Err(violation(format!("the test does not pass with {file}")));
        }
        Ok(Some(sp))
    };
    let truth = stub("truth.stub")?;
    let alternative = stub("alternative.stub")?;
    if passes(&program, &test, "").map_err(lang("test.ml0"))? {
        return Err(violation("the test passes without any stub".into()));
    }
    let broken = read_opt(&dir.join("broken.stub"))?;
    Ok(CorpusEntry { id, dir: dir.to_path_buf(), meta, program, test, broken, truth, alternative })
}

/// Loads every entry directory under `path`, sorted by directory name.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let io = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let mut dirs: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| load_entry(d)).collect()
}

/// Loads the entry with id `id`.
pub fn load_one(path: &Path, id: &str) -> Result<CorpusEntry, CorpusError> {
    let direct = path.join(id);
    if direct.join("meta").exists() {
        let e = load_entry(&direct)?;
        if e.id == id {
            return Ok(e);
        }
    }
    load_corpus(path)?.into_iter().find(|e| e.id == id).ok_or_else(|| CorpusError::UnknownEntry(id.to_string()))
}
