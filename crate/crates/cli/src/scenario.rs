//! Scenario files: a JSON document describing a preselection, a
//! postselection and named observables.
//!
//! ```json
//! {
//!   "name": "example",
//!   "dim": 2,
//!   "preselection": [[1.0, 0.0], [0.0, 0.0]],
//!   "postselection": [[0.6, 0.0], [0.0, 0.8]],
//!   "observables": {
//!     "Z": [
//!       {"eigenvalue": 1.0, "kets": [[[1.0, 0.0], [0.0, 0.0]]]},
//!       {"eigenvalue": -1.0, "projector": [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}
//!     ]
//!   }
//! }
//! ```
//!
//! Complex numbers are `[re, im]` pairs. A branch gives its eigenspace either
//! as spanning `kets` or as an explicit `projector` matrix (list of rows).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ablkit::{
    projector_from_kets, Branch, Ket, ObservableDecomposition, Operator, PrePostContext,
    Projector,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ComplexSpec = [f64; 2];
pub type KetSpec = Vec<ComplexSpec>;
pub type MatrixSpec = Vec<Vec<ComplexSpec>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub eigenvalue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kets: Option<Vec<KetSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<MatrixSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub preselection: KetSpec,
    pub postselection: KetSpec,
    pub observables: BTreeMap<String, Vec<BranchSpec>>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl ToString) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        message: message.to_string(),
    }
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub dim: usize,
    pub context: PrePostContext,
    pub observables: BTreeMap<String, ObservableDecomposition>,
}

impl Scenario {
    pub fn observable(&self, name: &str) -> Option<&ObservableDecomposition> {
        self.observables.get(name)
    }

    pub fn observable_names(&self) -> Vec<String> {
        self.observables.keys().cloned().collect()
    }
}

pub fn complex_spec(z: Complex64) -> ComplexSpec {
    [z.re, z.im]
}

pub fn ket_spec(ket: &Ket) -> KetSpec {
    ket.amplitudes().iter().copied().map(complex_spec).collect()
}

pub fn matrix_spec(op: &Operator) -> MatrixSpec {
    op.rows()
        .into_iter()
        .map(|row| row.into_iter().map(complex_spec).collect())
        .collect()
}

fn to_complex(values: &[ComplexSpec]) -> Vec<Complex64> {
    values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect()
}

fn parse_ket(spec: &KetSpec, dim: usize, field: &str) -> Result<Ket, ScenarioError> {
    if spec.len() != dim {
        return Err(invalid(
            field,
            format!("expected {dim} amplitudes, found {}", spec.len()),
        ));
    }
    Ket::new(to_complex(spec)).map_err(|e| invalid(field, e))
}

fn parse_branch(spec: &BranchSpec, dim: usize, field: &str) -> Result<Branch, ScenarioError> {
    let projector = match (&spec.kets, &spec.projector) {
        (Some(kets), None) => {
            let kets = kets
                .iter()
                .enumerate()
                .map(|(i, k)| parse_ket(k, dim, &format!("{field}.kets[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            if kets.is_empty() {
                return Err(invalid(format!("{field}.kets"), "no kets given"));
            }
            projector_from_kets(&kets).map_err(|e| invalid(format!("{field}.kets"), e))?
        }
        (None, Some(rows)) => {
            let field = format!("{field}.projector");
            if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                return Err(invalid(field, format!("expected a {dim}x{dim} matrix")));
            }
            let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| to_complex(r)).collect();
            let op = Operator::from_rows(&rows).map_err(|e| invalid(&field, e))?;
            Projector::from_operator(op).map_err(|e| invalid(&field, e))?
        }
        _ => {
            return Err(invalid(
                field,
                "exactly one of \"kets\" or \"projector\" is required",
            ))
        }
    };
    Ok(Branch {
        eigenvalue: spec.eigenvalue,
        projector,
    })
}

impl ScenarioFile {
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        if self.dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        let a = parse_ket(&self.preselection, self.dim, "preselection")?;
        let b = parse_ket(&self.postselection, self.dim, "postselection")?;
        let context = PrePostContext::new(a, b).map_err(|e| invalid("postselection", e))?;
        let mut observables = BTreeMap::new();
        for (name, branches) in &self.observables {
            let field = format!("observables.{name}");
            let parsed = branches
                .iter()
                .enumerate()
                .map(|(i, s)| parse_branch(s, self.dim, &format!("{field}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let obs = ObservableDecomposition::new(parsed).map_err(|e| invalid(&field, e))?;
            observables.insert(name.clone(), obs);
        }
        Ok(Scenario {
            name: self.name.clone().unwrap_or_else(|| "unnamed".into()),
            dim: self.dim,
            context,
            observables,
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn number(x: f64) -> String {
    serde_json::to_string(&(x + 0.0)).expect("finite scenario values")
}

fn complex_text(z: &ComplexSpec) -> String {
    format!("[{}, {}]", number(z[0]), number(z[1]))
}

fn ket_text(k: &KetSpec) -> String {
    let parts: Vec<String> = k.iter().map(complex_text).collect();
    format!("[{}]", parts.join(", "))
}

/// Canonical text form: one amplitude list or matrix row per line.
pub fn emit_scenario(file: &ScenarioFile) -> String {
    let mut out = String::from("{\n");
    if let Some(name) = &file.name {
        let _ = writeln!(out, "  \"name\": {},", serde_json::to_string(name).unwrap());
    }
    let _ = writeln!(out, "  \"dim\": {},", file.dim);
    let _ = writeln!(out, "  \"preselection\": {},", ket_text(&file.preselection));
    let _ = writeln!(out, "  \"postselection\": {},", ket_text(&file.postselection));
    out.push_str("  \"observables\": {");
    let n_obs = file.observables.len();
    for (k, (name, branches)) in file.observables.iter().enumerate() {
        let _ = write!(out, "\n    {}: [", serde_json::to_string(name).unwrap());
        for (i, b) in branches.iter().enumerate() {
            let _ = write!(out, "\n      {{\"eigenvalue\": {}", number(b.eigenvalue));
            if let Some(kets) = &b.kets {
                out.push_str(", \"kets\": [");
                for (j, ket) in kets.iter().enumerate() {
                    let sep = if j + 1 < kets.len() { "," } else { "" };
                    let _ = write!(out, "\n        {}{}", ket_text(ket), sep);
                }
                out.push_str("\n      ]");
            }
            if let Some(rows) = &b.projector {
                out.push_str(", \"projector\": [");
                for (j, row) in rows.iter().enumerate() {
                    let sep = if j + 1 < rows.len() { "," } else { "" };
                    let _ = write!(out, "\n        {}{}", ket_text(row), sep);
                }
                out.push_str("\n      ]");
            }
            out.push('}');
            if i + 1 < branches.len() {
                out.push(',');
            }
        }
        out.push_str("\n    ]");
        if k + 1 < n_obs {
            out.push(',');
        }
    }
    if n_obs > 0 {
        out.push_str("\n  ");
    }
    out.push_str("}\n}\n");
    out
}

/// Rank-1 branches listed by their eigenkets, labelled 1, 2, 3, …
pub fn basis_spec(kets: &[Ket]) -> Vec<BranchSpec> {
    kets.iter()
        .enumerate()
        .map(|(i, k)| BranchSpec {
            eigenvalue: (i + 1) as f64,
            kets: Some(vec![ket_spec(k)]),
            projector: None,
        })
        .collect()
}
