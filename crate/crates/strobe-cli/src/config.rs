//! Experiment configuration: a flat key = value file with expression
//! values for custom potentials and intensities, merged with the command
//! line (flags win). Unknown keys are rejected before any computation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use strobe::error::{Error, Result};
use strobe::expr;
use strobe::fields::ScalarField;
use strobe::problems::{self, Problem};

/// Fully resolved configuration, embedded verbatim in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub problem: String,
    pub order: usize,
    pub eps: Vec<f64>,
    pub t_final: f64,
    pub points: usize,
    pub points_list: Option<Vec<Vec<f64>>>,
    pub seed: u64,
    pub workers: usize,
    pub format: OutputFormat,
    pub out: Option<String>,
    pub n_samples: usize,
    pub k_max: i64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub allow_expensive: bool,
    /// Expression overrides, kept as source text for reproducibility.
    pub u_expr: Option<String>,
    pub b_expr: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            problem: "const_eb_2d".into(),
            order: 1,
            eps: vec![1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5), 1e-3],
            t_final: 1.0,
            points: 10,
            points_list: None,
            seed: 42,
            workers: 0,
            format: OutputFormat::Csv,
            out: None,
            n_samples: 32,
            k_max: 3,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            allow_expensive: false,
            u_expr: None,
            b_expr: None,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "problem",
    "order",
    "eps",
    "t_final",
    "points",
    "points_list",
    "seed",
    "workers",
    "format",
    "out",
    "n_samples",
    "k_max",
    "rel_tol",
    "abs_tol",
    "allow_expensive",
    "U",
    "b",
];

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::usage(format!("config key '{key}': bad number '{v}'")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::usage(format!("config key '{key}': bad integer '{v}'")))
}

pub fn parse_eps_list(v: &str) -> Result<Vec<f64>> {
    let eps: Vec<f64> = v
        .split(',')
        .map(|s| parse_f64("eps", s))
        .collect::<Result<_>>()?;
    if eps.is_empty() || eps.iter().any(|e| *e <= 0.0) {
        return Err(Error::usage("eps list must be nonempty and positive"));
    }
    Ok(eps)
}

fn parse_points_list(v: &str) -> Result<Vec<Vec<f64>>> {
    v.split(';')
        .map(|point| {
            point
                .split(|c| c == ',' || c == ' ')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_f64("points_list", s))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

impl ExperimentConfig {
    /// Parse a flat key = value file. Lines starting with '#' are
    /// comments; unknown keys are rejected.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::usage(format!("cannot read config {path:?}: {e}")))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::usage(format!(
                    "config line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::usage(format!(
                    "config line {}: unknown key '{key}' (known: {})",
                    lineno + 1,
                    KNOWN_KEYS.join(", ")
                )));
            }
            self.apply_pair(key, value)?;
        }
        Ok(())
    }

    pub fn apply_pair(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "problem" => self.problem = value.to_string(),
            "order" => self.order = parse_usize(key, value)?,
            "eps" => self.eps = parse_eps_list(value)?,
            "t_final" => self.t_final = parse_f64(key, value)?,
            "points" => self.points = parse_usize(key, value)?,
            "points_list" => self.points_list = Some(parse_points_list(value)?),
            "seed" => {
                self.seed = value
                    .trim()
                    .parse::<u64>()
                    .map_err(|_| Error::usage(format!("bad seed '{value}'")))?
            }
            "workers" => self.workers = parse_usize(key, value)?,
            "format" => {
                self.format = match value {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    other => {
                        return Err(Error::usage(format!(
                            "format must be csv or json, got '{other}'"
                        )))
                    }
                }
            }
            "out" => self.out = Some(value.to_string()),
            "n_samples" => self.n_samples = parse_usize(key, value)?,
            "k_max" => {
                self.k_max = value
                    .trim()
                    .parse::<i64>()
                    .map_err(|_| Error::usage(format!("bad k_max '{value}'")))?
            }
            "rel_tol" => self.rel_tol = parse_f64(key, value)?,
            "abs_tol" => self.abs_tol = parse_f64(key, value)?,
            "allow_expensive" => {
                self.allow_expensive = match value {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    other => {
                        return Err(Error::usage(format!(
                            "allow_expensive must be true/false, got '{other}'"
                        )))
                    }
                }
            }
            "U" => {
                expr::parse(value)?;
                self.u_expr = Some(value.to_string());
            }
            "b" => {
                expr::parse(value)?;
                self.b_expr = Some(value.to_string());
            }
            other => return Err(Error::usage(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Build the problem, honoring expression overrides.
    pub fn build_problem(&self) -> Result<Problem> {
        let u: Option<ScalarField> = match &self.u_expr {
            Some(src) => {
                let dim = if self.problem.starts_with("vlasov_3d") { 3 } else { 2 };
                Some(expr::parse(src)?.into_scalar_field("U", dim)?)
            }
            None => None,
        };
        let b: Option<ScalarField> = match &self.b_expr {
            Some(src) => Some(expr::parse(src)?.into_scalar_field("b", 2)?),
            None => None,
        };
        match self.problem.as_str() {
            "const_eb_2d" => Ok(problems::const_eb_2d([1.0, 0.0])),
            "elementary_rotation" => Ok(problems::elementary_rotation()),
            "vlasov_const_b_2d" => problems::vlasov_const_b_2d(u),
            "vlasov_varying_b_2d" => problems::vlasov_varying_b_2d(b, u),
            "vlasov_3d" | "vlasov_3d_const_dir" => {
                let constant_direction = self.problem == "vlasov_3d_const_dir";
                let b3 = match &self.b_expr {
                    Some(src) => {
                        let e = expr::parse(src)?;
                        Some(strobe::fields::VectorField::new("B", 3, move |x| {
                            Ok(vec![0.0, 0.0, e.eval(x)?])
                        }))
                    }
                    None => None,
                };
                problems::vlasov_3d(b3, u, constant_direction)
            }
            other => Err(Error::usage(format!("unknown problem '{other}'"))),
        }
    }

    pub fn averaging(&self) -> strobe::averaging::AveragingConfig {
        strobe::averaging::AveragingConfig::default()
            .with_samples(self.n_samples)
            .with_k_max(self.k_max)
    }

    pub fn integrator(&self) -> strobe::ode::CharacteristicsIntegrator {
        let mut integ = strobe::ode::CharacteristicsIntegrator::with_tols(self.rel_tol, self.abs_tol);
        integ.allow_expensive = self.allow_expensive;
        integ
    }

    /// Evaluation points: the explicit list when given, else seeded draws.
    pub fn evaluation_points(&self, problem: &Problem) -> Result<Vec<Vec<f64>>> {
        match &self.points_list {
            Some(list) => {
                for p in list {
                    if p.len() != problem.dim {
                        return Err(Error::usage(format!(
                            "points_list entry has {} coordinates, problem needs {}",
                            p.len(),
                            problem.dim
                        )));
                    }
                }
                Ok(list.clone())
            }
            None => Ok(problem.sample_points(self.points, self.seed)),
        }
    }

    /// Stable JSON of the resolved configuration (BTreeMap keys sorted).
    /// Execution details that cannot change the numbers (worker count,
    /// output path) are left out so reruns are bit-identical.
    pub fn resolved_json(&self) -> serde_json::Value {
        let mut m = BTreeMap::new();
        m.insert("problem", serde_json::json!(self.problem));
        m.insert("order", serde_json::json!(self.order));
        m.insert("eps", serde_json::json!(self.eps));
        m.insert("t_final", serde_json::json!(self.t_final));
        m.insert("points", serde_json::json!(self.points));
        m.insert("points_list", serde_json::json!(self.points_list));
        m.insert("seed", serde_json::json!(self.seed));
        m.insert("n_samples", serde_json::json!(self.n_samples));
        m.insert("k_max", serde_json::json!(self.k_max));
        m.insert("rel_tol", serde_json::json!(self.rel_tol));
        m.insert("abs_tol", serde_json::json!(self.abs_tol));
        m.insert("allow_expensive", serde_json::json!(self.allow_expensive));
        m.insert("U", serde_json::json!(self.u_expr));
        m.insert("b", serde_json::json!(self.b_expr));
        serde_json::json!(m)
    }
}
