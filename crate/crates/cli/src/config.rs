//! Experiment configuration: `[section]` headers and `key = value` lines.
//!
//! Blank lines and lines starting with `#` or `;` are ignored, and `#`
//! starts a trailing comment. Keys before the first header belong to
//! `[experiment]`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fed_core::interactions::Interaction;
use fed_core::operators::{chain_dimension, pauli, real_diag, site_operator, DIMENSION_CAP};
use fed_core::pressure::ScalarFunction;
use fed_core::states::{QmsData, StateModel};
use fed_core::variational::{uniform_grid, DEFAULT_T_MAX, DEFAULT_T_POINTS, DEFAULT_X_POINTS};
use fed_core::{ChainOperator, Interval, C64};
use nalgebra::DMatrix;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("missing key `{key}` in [{section}]")]
    Missing { section: String, key: String },
}

fn at(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Line {
        line,
        msg: msg.into(),
    }
}

#[derive(Clone, Debug)]
struct Value {
    text: String,
    line: usize,
}

/// Parsed but untyped document. Sections and keys are unique.
#[derive(Clone, Debug, Default)]
pub struct Document {
    sections: BTreeMap<String, BTreeMap<String, Value>>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        let mut current = "experiment".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.split('#').next().unwrap_or("").trim();
            if trimmed.is_empty() || trimmed.starts_with(';') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(line, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(at(line, "empty section name"));
                }
                current = name.to_string();
                if doc.sections.contains_key(&current) && current != "experiment" {
                    return Err(at(line, format!("duplicate section [{current}]")));
                }
                doc.sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| at(line, format!("expected `key = value`, got `{trimmed}`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(at(line, "empty key"));
            }
            let section = doc.sections.entry(current.clone()).or_default();
            let previous = section.insert(
                key.to_string(),
                Value {
                    text: value.trim().to_string(),
                    line,
                },
            );
            if let Some(p) = previous {
                return Err(at(line, format!("duplicate key `{key}` (first set on line {})", p.line)));
            }
        }
        Ok(doc)
    }

    fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.sections.get(section).and_then(|s| s.get(key))
    }

    fn require(&self, section: &str, key: &str) -> Result<&Value, ConfigError> {
        self.get(section, key).ok_or_else(|| ConfigError::Missing {
            section: section.to_string(),
            key: key.to_string(),
        })
    }

    fn str_or<'a>(&'a self, section: &str, key: &str, default: &'a str) -> &'a str {
        self.get(section, key).map_or(default, |v| v.text.as_str())
    }

    fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.get(section, key).map_or(Ok(default), parse_f64)
    }

    fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.get(section, key).map_or(Ok(default), |v| {
            v.text
                .parse()
                .map_err(|_| at(v.line, format!("`{key}`: expected a non-negative integer, got `{}`", v.text)))
        })
    }

    /// Reject keys nobody reads, so typos surface as errors.
    fn check_known(&self, known: &[(&str, &[&str])]) -> Result<(), ConfigError> {
        for (section, entries) in &self.sections {
            let Some((_, keys)) = known.iter().find(|(s, _)| s == section) else {
                let line = entries.values().map(|v| v.line).min().unwrap_or(0);
                return Err(at(line, format!("unknown section [{section}]")));
            };
            for (key, value) in entries {
                if !keys.contains(&key.as_str()) {
                    return Err(at(value.line, format!("unknown key `{key}` in [{section}]")));
                }
            }
        }
        Ok(())
    }
}

fn parse_f64(v: &Value) -> Result<f64, ConfigError> {
    v.text
        .parse()
        .map_err(|_| at(v.line, format!("expected a number, got `{}`", v.text)))
}

fn parse_f64_list(v: &Value) -> Result<Vec<f64>, ConfigError> {
    v.text
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| at(v.line, format!("expected a number, got `{}`", s.trim())))
        })
        .collect()
}

/// `4..14` (inclusive) or `4, 6, 8`.
fn parse_ns(v: &Value) -> Result<Vec<usize>, ConfigError> {
    let bad = |s: &str| at(v.line, format!("expected a volume, got `{s}`"));
    let ns: Vec<usize> = if let Some((a, b)) = v.text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad(a.trim()))?;
        let b: usize = b.trim().parse().map_err(|_| bad(b.trim()))?;
        (a..=b).collect()
    } else {
        v.text
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| bad(s.trim())))
            .collect::<Result<_, _>>()?
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(at(v.line, "volumes must be a non-empty list of positive integers"));
    }
    Ok(ns)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    Pressure,
    Rate,
    Variational,
    Check,
    Oracle,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Pressure => "pressure",
            Task::Rate => "rate",
            Task::Variational => "variational",
            Task::Check => "check",
            Task::Oracle => "oracle",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Task::Pressure, Task::Rate, Task::Variational, Task::Check, Task::Oracle]
            .into_iter()
            .find(|t| t.name() == s)
    }
}

/// What the pressure task evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// `(1/n) log Z_φ(n, A, f)`.
    Perturbed,
    /// `(1/n) log φ(exp(-n s_n(A)))`.
    Tilde,
    /// `(1/n) log Tr exp(-H_n(Φ))` for the model interaction.
    Interaction,
}

/// Closed-form references the runners can compare against.
#[derive(Clone, Debug)]
pub enum ModelSource {
    Tracial(usize),
    Product,
    Gibbs { interaction: Interaction, ising: Option<(f64, f64)> },
    ClassicalMarkov(DMatrix<f64>),
    File,
}

#[derive(Clone, Debug)]
pub enum ObservableSource {
    Pauli(String),
    Diagonal(Vec<f64>),
    BondEnergy,
}

#[derive(Clone, Debug)]
pub struct Tolerances {
    pub identity: f64,
    pub inequality: f64,
    pub oracle: f64,
    pub fit: f64,
    pub sandwich: f64,
    pub rate: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Optional in the file; the command line names the task.
    pub task: Option<Task>,
    pub seed: u64,
    pub output: PathBuf,
    pub state: StateModel,
    pub model: ModelSource,
    pub observable: ChainOperator,
    pub observable_source: ObservableSource,
    pub function: ScalarFunction,
    pub quantity: Quantity,
    pub ns: Vec<usize>,
    pub t_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub period: usize,
    pub restarts: usize,
    pub verbose: bool,
    pub tolerances: Tolerances,
}

const KNOWN: &[(&str, &[&str])] = &[
    ("experiment", &["task", "seed", "output", "quantity"]),
    (
        "model",
        &["kind", "site_dim", "diag", "interaction", "coupling", "field", "buffer", "transition", "file"],
    ),
    ("observable", &["kind", "terms", "values"]),
    ("function", &["kind", "coefficients"]),
    ("grid", &["n", "t_min", "t_max", "t_points", "x_min", "x_max", "x_points"]),
    ("variational", &["period", "restarts", "verbose"]),
    ("tolerance", &["identity", "inequality", "oracle", "fit", "sandwich", "rate"]),
];

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_text(&text, base)
    }

    /// Relative file references resolve against `base`.
    pub fn from_text(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let doc = Document::parse(text)?;
        doc.check_known(KNOWN)?;
        let task = match doc.get("experiment", "task") {
            Some(v) => Some(
                Task::parse(&v.text).ok_or_else(|| at(v.line, format!("unknown task `{}`", v.text)))?,
            ),
            None => None,
        };
        let seed = doc.usize_or("experiment", "seed", 0)? as u64;
        let output = PathBuf::from(doc.str_or("experiment", "output", "fed-out"));
        let quantity = match doc.get("experiment", "quantity") {
            None => Quantity::Perturbed,
            Some(v) => match v.text.as_str() {
                "perturbed" => Quantity::Perturbed,
                "tilde" => Quantity::Tilde,
                "interaction" => Quantity::Interaction,
                other => return Err(at(v.line, format!("unknown quantity `{other}`"))),
            },
        };

        let (state, model) = read_model(&doc, base)?;
        let (observable, observable_source) = read_observable(&doc, &model, state.site_dim())?;
        let function = read_function(&doc)?;

        let ns = match doc.get("grid", "n") {
            Some(v) => {
                let ns = parse_ns(v)?;
                for &n in &ns {
                    let too_big = chain_dimension(state.site_dim(), n)
                        .map(|d| d > DIMENSION_CAP)
                        .unwrap_or(true);
                    if too_big {
                        return Err(at(
                            v.line,
                            format!(
                                "n = {n} exceeds the dimension cap {DIMENSION_CAP} for site dimension {}",
                                state.site_dim()
                            ),
                        ));
                    }
                }
                ns
            }
            None => (4..=8).collect(),
        };
        let t_grid = uniform_grid(
            doc.f64_or("grid", "t_min", -DEFAULT_T_MAX)?,
            doc.f64_or("grid", "t_max", DEFAULT_T_MAX)?,
            doc.usize_or("grid", "t_points", DEFAULT_T_POINTS)?,
        );
        let x_grid = uniform_grid(
            doc.f64_or("grid", "x_min", -observable.operator_norm())?,
            doc.f64_or("grid", "x_max", observable.operator_norm())?,
            doc.usize_or("grid", "x_points", DEFAULT_X_POINTS)?,
        );
        if t_grid.len() < 3 || x_grid.len() < 3 {
            let line = doc
                .get("grid", "t_points")
                .or(doc.get("grid", "x_points"))
                .map_or(0, |v| v.line);
            return Err(at(line, "grids need at least 3 points"));
        }

        let verbose = match doc.str_or("variational", "verbose", "false") {
            "true" => true,
            "false" => false,
            other => {
                let line = doc.get("variational", "verbose").map_or(0, |v| v.line);
                return Err(at(line, format!("expected true or false, got `{other}`")));
            }
        };
        let tolerances = Tolerances {
            identity: doc.f64_or("tolerance", "identity", 1e-10)?,
            inequality: doc.f64_or("tolerance", "inequality", 1e-10)?,
            oracle: doc.f64_or("tolerance", "oracle", 1e-3)?,
            fit: doc.f64_or("tolerance", "fit", 1e-3)?,
            sandwich: doc.f64_or("tolerance", "sandwich", 1e-2)?,
            rate: doc.f64_or("tolerance", "rate", 1e-3)?,
        };
        Ok(Self {
            task,
            seed,
            output,
            state,
            model,
            observable,
            observable_source,
            function,
            quantity,
            ns,
            t_grid,
            x_grid,
            period: doc.usize_or("variational", "period", 1)?.max(1),
            restarts: doc.usize_or("variational", "restarts", 3)?,
            verbose,
            tolerances,
        })
    }
}

fn model_error(doc: &Document, key: &str, e: fed_core::Error) -> ConfigError {
    let line = doc.get("model", key).or(doc.get("model", "kind")).map_or(0, |v| v.line);
    at(line, e.to_string())
}

fn read_model(doc: &Document, base: &Path) -> Result<(StateModel, ModelSource), ConfigError> {
    let kind = doc.require("model", "kind")?;
    match kind.text.as_str() {
        "tracial" => {
            let d = doc.usize_or("model", "site_dim", 2)?;
            let state = StateModel::tracial(d).map_err(|e| model_error(doc, "site_dim", e))?;
            Ok((state, ModelSource::Tracial(d)))
        }
        "product" => {
            let v = doc.require("model", "diag")?;
            let diag = parse_f64_list(v)?;
            let block = site_operator(1, real_diag(&diag)).map_err(|e| at(v.line, e.to_string()))?;
            let state = StateModel::product(block).map_err(|e| at(v.line, e.to_string()))?;
            Ok((state, ModelSource::Product))
        }
        "local_gibbs" | "buffered_gibbs" => {
            let coupling = doc.f64_or("model", "coupling", 0.5)?;
            let field = doc.f64_or("model", "field", 0.0)?;
            let (interaction, ising) = match doc.str_or("model", "interaction", "ising") {
                "ising" => (Interaction::ising(coupling, field), Some((coupling, field))),
                "transverse_ising" => (Interaction::transverse_ising(coupling, field), None),
                other => {
                    let line = doc.get("model", "interaction").map_or(kind.line, |v| v.line);
                    return Err(at(line, format!("unknown interaction `{other}`")));
                }
            };
            let state = if kind.text == "local_gibbs" {
                StateModel::local_gibbs(interaction.clone())
            } else if let Some(v) = doc.get("model", "buffer") {
                let m = v
                    .text
                    .parse()
                    .map_err(|_| at(v.line, format!("expected a buffer width, got `{}`", v.text)))?;
                StateModel::buffered_gibbs_with(interaction.clone(), m)
            } else {
                StateModel::buffered_gibbs(interaction.clone())
            };
            Ok((state, ModelSource::Gibbs { interaction, ising }))
        }
        "classical_markov" => {
            let v = doc.require("model", "transition")?;
            let rows: Vec<Vec<f64>> = v
                .text
                .split(';')
                .map(|r| parse_f64_list(&Value { text: r.to_string(), line: v.line }))
                .collect::<Result<_, _>>()?;
            let k = rows.len();
            if rows.iter().any(|r| r.len() != k) {
                return Err(at(v.line, "transition matrix must be square (rows separated by `;`)"));
            }
            let p = DMatrix::from_fn(k, k, |i, j| rows[i][j]);
            let pi = fed_core::states::stationary_distribution(&p).map_err(|e| at(v.line, e.to_string()))?;
            let q = QmsData::classical(&p, &pi).map_err(|e| at(v.line, e.to_string()))?;
            Ok((StateModel::QuantumMarkov(q), ModelSource::ClassicalMarkov(p)))
        }
        "file" => {
            let v = doc.require("model", "file")?;
            let path = base.join(&v.text);
            let text = std::fs::read_to_string(&path)
                .map_err(|e| at(v.line, format!("{}: {e}", path.display())))?;
            let state = StateModel::from_text(&text)
                .map_err(|e| at(v.line, format!("{}: {e}", path.display())))?;
            Ok((state, ModelSource::File))
        }
        other => Err(at(kind.line, format!("unknown model kind `{other}`"))),
    }
}

fn pauli_matrix(c: char) -> Option<DMatrix<C64>> {
    match c {
        'x' => Some(pauli::sigma_x()),
        'y' => Some(pauli::sigma_y()),
        'z' => Some(pauli::sigma_z()),
        'i' => Some(DMatrix::identity(2, 2)),
        _ => None,
    }
}

/// `1.0 z; 0.5 xx`: each word acts on sites `1..=len`.
fn pauli_observable(v: &Value) -> Result<ChainOperator, ConfigError> {
    let mut terms = Vec::new();
    for raw in v.text.split(';') {
        let mut parts = raw.split_whitespace();
        let (coef, word) = match (parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(w), None) => (c, w),
            (Some(w), None, None) => ("1", w),
            _ => return Err(at(v.line, format!("expected `coefficient word`, got `{}`", raw.trim()))),
        };
        let coef: f64 = coef
            .parse()
            .map_err(|_| at(v.line, format!("expected a coefficient, got `{coef}`")))?;
        let mut m = DMatrix::from_element(1, 1, C64::new(coef, 0.0));
        for c in word.chars() {
            let p = pauli_matrix(c).ok_or_else(|| at(v.line, format!("unknown Pauli letter `{c}`")))?;
            m = m.kronecker(&p);
        }
        terms.push((word.len(), m));
    }
    let len = terms.iter().map(|t| t.0).max().unwrap_or(1);
    let window = Interval::sites(len).map_err(|e| at(v.line, e.to_string()))?;
    let mut total = ChainOperator::zeros(window, 2).map_err(|e| at(v.line, e.to_string()))?;
    for (l, m) in terms {
        let op = ChainOperator::hermitian(Interval::sites(l).map_err(|e| at(v.line, e.to_string()))?, 2, m)
            .map_err(|e| at(v.line, e.to_string()))?;
        total = total
            .add(&op.embed(window).map_err(|e| at(v.line, e.to_string()))?)
            .map_err(|e| at(v.line, e.to_string()))?;
    }
    Ok(total)
}

fn read_observable(
    doc: &Document,
    model: &ModelSource,
    site_dim: usize,
) -> Result<(ChainOperator, ObservableSource), ConfigError> {
    let kind = doc.get("observable", "kind");
    let text = kind.map_or("pauli", |v| v.text.as_str());
    let line = kind.map_or(0, |v| v.line);
    let (op, source) = match text {
        "pauli" => {
            let default = Value { text: "z".into(), line };
            let v = doc.get("observable", "terms").unwrap_or(&default);
            (pauli_observable(v)?, ObservableSource::Pauli(v.text.clone()))
        }
        "diag" => {
            let v = doc.require("observable", "values")?;
            let values = parse_f64_list(v)?;
            let op = site_operator(1, real_diag(&values)).map_err(|e| at(v.line, e.to_string()))?;
            (op, ObservableSource::Diagonal(values))
        }
        "bond_energy" => {
            let ModelSource::Gibbs { interaction, .. } = model else {
                return Err(at(line, "bond_energy needs a Gibbs model"));
            };
            let op = interaction.bond_energy().map_err(|e| at(line, e.to_string()))?;
            (op, ObservableSource::BondEnergy)
        }
        other => return Err(at(line, format!("unknown observable kind `{other}`"))),
    };
    if op.site_dim() != site_dim {
        return Err(at(
            line,
            format!("observable site dimension {} does not match the model's {site_dim}", op.site_dim()),
        ));
    }
    Ok((op, source))
}

fn read_function(doc: &Document) -> Result<ScalarFunction, ConfigError> {
    let Some(kind) = doc.get("function", "kind") else {
        return Ok(ScalarFunction::Identity);
    };
    match kind.text.as_str() {
        "identity" => Ok(ScalarFunction::Identity),
        "square" => Ok(ScalarFunction::Square),
        "polynomial" => {
            let v = doc.require("function", "coefficients")?;
            Ok(ScalarFunction::Polynomial(parse_f64_list(v)?))
        }
        other => Err(at(kind.line, format!("unknown function `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_text(text, Path::new("."))
    }

    fn line_of(e: ConfigError) -> usize {
        match e {
            ConfigError::Line { line, .. } => line,
            other => panic!("expected a line error, got {other}"),
        }
    }

    #[test]
    fn parses_sections_and_comments() {
        let doc = Document::parse("task = rate  # trailing\n# note\n[model]\n; other\nkind = tracial\n").unwrap();
        assert_eq!(doc.get("experiment", "task").unwrap().text, "rate");
        assert_eq!(doc.get("model", "kind").unwrap().line, 5);
    }

    #[test]
    fn reports_line_numbers() {
        assert_eq!(line_of(Document::parse("task = rate\n[model\n").unwrap_err()), 2);
        assert_eq!(line_of(Document::parse("[a]\nx = 1\nx = 2\n").unwrap_err()), 3);
        assert_eq!(line_of(Document::parse("[a]\njunk\n").unwrap_err()), 2);
        let e = load("task = pressure\n[model]\nkind = tracial\n[grid]\nn = 1..15\n").unwrap_err();
        assert!(e.to_string().contains("n = 15"));
        assert_eq!(line_of(e), 5);
        let e = load("task = pressure\n[model]\nkind = tracial\ncolour = red\n").unwrap_err();
        assert_eq!(line_of(e), 4);
        let e = load("task = pressure\n[model]\nkind = product\ndiag = 0.5, x\n").unwrap_err();
        assert_eq!(line_of(e), 4);
    }

    #[test]
    fn missing_keys_are_named() {
        let e = load("task = rate\n[model]\nkind = product\n").unwrap_err();
        assert!(matches!(e, ConfigError::Missing { ref key, .. } if key == "diag"));
    }

    #[test]
    fn volumes_accept_ranges_and_lists() {
        let v = |t: &str| Value { text: t.into(), line: 1 };
        assert_eq!(parse_ns(&v("4..7")).unwrap(), vec![4, 5, 6, 7]);
        assert_eq!(parse_ns(&v("2, 4,8")).unwrap(), vec![2, 4, 8]);
        assert!(parse_ns(&v("0..3")).is_err());
        assert!(parse_ns(&v("5..4")).is_err());
    }

    #[test]
    fn pauli_terms_build_observables() {
        let v = Value { text: "1.0 z; 0.5 xx".into(), line: 1 };
        let a = pauli_observable(&v).unwrap();
        assert_eq!(a.window().len(), 2);
        // z⊗1 and x⊗x anticommute, so the norm is sqrt(1 + 0.25).
        assert!((a.operator_norm() - 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn full_config_round() {
        let cfg = load(
            "task = variational\nseed = 9\n[model]\nkind = classical_markov\ntransition = 0.7, 0.3; 0.4, 0.6\n\
             [observable]\nkind = diag\nvalues = 1, -1\n[function]\nkind = polynomial\ncoefficients = 0, 0, 1\n\
             [grid]\nn = 2, 4\n[variational]\nperiod = 2\n",
        )
        .unwrap();
        assert_eq!(cfg.task, Some(Task::Variational));
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.ns, vec![2, 4]);
        assert_eq!(cfg.period, 2);
        assert_eq!(cfg.function.eval(3.0), 9.0);
        assert_eq!(cfg.x_grid.first().copied(), Some(-1.0));
    }
}
