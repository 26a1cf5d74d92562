//! Parameter values, declarative schemas and validation.
//!
//! Every problem family declares a [`ParameterSchema`]: an ordered list of
//! fields, each with a list of [`Constraint`] tags. Validation walks the
//! constraints of a field in order and reports the first one that fails, with
//! the message `The field {name} does not satisfy {constraint}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde_json::Value;

use crate::error::ProblemError;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// A function-valued parameter, e.g. a forcing term `F(t)`, a ground profile
/// `h(x)` or a time-dependent coefficient matrix `A(t)`.
#[derive(Clone)]
pub struct FunctionParam {
    label: String,
    kind: FunctionKind,
}

#[derive(Clone)]
pub enum FunctionKind {
    Scalar(ScalarFn),
    /// A scalar function bundled with its first derivative.
    Differentiable { value: ScalarFn, derivative: ScalarFn },
    Matrix(MatrixFn),
}

impl FunctionParam {
    pub fn scalar(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), kind: FunctionKind::Scalar(Arc::new(f)) }
    }

    pub fn differentiable(
        label: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            kind: FunctionKind::Differentiable { value: Arc::new(value), derivative: Arc::new(derivative) },
        }
    }

    pub fn matrix(label: impl Into<String>, f: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self { label: label.into(), kind: FunctionKind::Matrix(Arc::new(f)) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &FunctionKind {
        &self.kind
    }

    /// Value of a scalar-valued function (plain or differentiable).
    pub fn scalar_fn(&self) -> Option<ScalarFn> {
        match &self.kind {
            FunctionKind::Scalar(f) => Some(f.clone()),
            FunctionKind::Differentiable { value, .. } => Some(value.clone()),
            FunctionKind::Matrix(_) => None,
        }
    }

    pub fn derivative_fn(&self) -> Option<ScalarFn> {
        match &self.kind {
            FunctionKind::Differentiable { derivative, .. } => Some(derivative.clone()),
            _ => None,
        }
    }

    pub fn matrix_fn(&self) -> Option<MatrixFn> {
        match &self.kind {
            FunctionKind::Matrix(f) => Some(f.clone()),
            _ => None,
        }
    }

    /// Representative entries used by value constraints: the function evaluated
    /// at the probe point 0.
    fn probe(&self) -> Vec<f64> {
        match &self.kind {
            FunctionKind::Scalar(f) => vec![f(0.0)],
            FunctionKind::Differentiable { value, derivative } => vec![value(0.0), derivative(0.0)],
            FunctionKind::Matrix(f) => f(0.0).iter().copied().collect(),
        }
    }
}

impl fmt::Debug for FunctionParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunctionParam({})", self.label)
    }
}

/// A single parameter value.
#[derive(Clone, Debug)]
pub enum ParamValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Matrix(DMatrix<f64>),
    Text(String),
    Function(FunctionParam),
}

impl ParamValue {
    /// Parses the textual override syntax: numbers become scalars, bracketed
    /// comma lists become vectors, nested lists become matrices (row-major),
    /// and anything else is kept as text.
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if text.starts_with('[') {
            let value: Value = serde_json::from_str(text).map_err(|e| format!("malformed list '{text}': {e}"))?;
            return Self::from_json(&value).ok_or_else(|| format!("unsupported list value '{text}'"));
        }
        if let Ok(x) = text.parse::<f64>() {
            return Ok(ParamValue::Scalar(x));
        }
        if text.is_empty() {
            return Err("empty value".to_string());
        }
        Ok(ParamValue::Text(text.to_string()))
    }

    fn from_json(value: &Value) -> Option<Self> {
        match value {
            Value::Number(n) => n.as_f64().map(ParamValue::Scalar),
            Value::String(s) => Some(ParamValue::Text(s.clone())),
            Value::Array(items) if items.iter().all(Value::is_array) && !items.is_empty() => {
                let rows: Option<Vec<Vec<f64>>> = items
                    .iter()
                    .map(|row| row.as_array()?.iter().map(Value::as_f64).collect())
                    .collect();
                let rows = rows?;
                let ncols = rows[0].len();
                if rows.iter().any(|r| r.len() != ncols) {
                    return None;
                }
                Some(ParamValue::Matrix(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])))
            }
            Value::Array(items) => items.iter().map(Value::as_f64).collect::<Option<Vec<_>>>().map(ParamValue::Vector),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ParamValue::Scalar(x) => serde_json::json!(x),
            ParamValue::Vector(v) => serde_json::json!(v),
            ParamValue::Matrix(m) => {
                let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
                serde_json::json!(rows)
            }
            ParamValue::Text(s) => Value::String(s.clone()),
            ParamValue::Function(f) => Value::String(format!("<function {}>", f.label())),
        }
    }

    fn numeric_entries(&self) -> Option<Vec<f64>> {
        match self {
            ParamValue::Scalar(x) => Some(vec![*x]),
            ParamValue::Vector(v) => Some(v.clone()),
            ParamValue::Matrix(m) => Some(m.iter().copied().collect()),
            ParamValue::Function(f) => Some(f.probe()),
            ParamValue::Text(_) => None,
        }
    }

    fn display_token(&self) -> Option<String> {
        match self {
            ParamValue::Text(s) => Some(s.clone()),
            ParamValue::Scalar(x) => Some(format!("{x}")),
            _ => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_json())
    }
}

/// Constraint tags attached to schema fields.
#[derive(Clone, Debug, PartialEq)]
pub enum Constraint {
    Scalar,
    Vector,
    /// A constant matrix or a matrix-valued function.
    Matrix,
    Square,
    Nonnegative,
    Positive,
    Finite,
    Integer,
    /// A function value; a plain scalar is accepted as a constant function.
    Function,
    Text,
    AtLeast(f64),
    OneOf(&'static [&'static str]),
    /// Grid sizes of the form 2^k - 1 (k >= 3), as needed for exact coarsening.
    PowerOfTwoMinusOne,
    /// A differentiable function whose stated derivative agrees with central
    /// differences of its value at sample points in [-10, 10].
    ConsistentDerivative,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Scalar => f.write_str("scalar"),
            Constraint::Vector => f.write_str("vector"),
            Constraint::Matrix => f.write_str("matrix"),
            Constraint::Square => f.write_str("square"),
            Constraint::Nonnegative => f.write_str("nonnegative"),
            Constraint::Positive => f.write_str("positive"),
            Constraint::Finite => f.write_str("finite"),
            Constraint::Integer => f.write_str("integer"),
            Constraint::Function => f.write_str("function"),
            Constraint::Text => f.write_str("text"),
            Constraint::AtLeast(v) => write!(f, ">= {v}"),
            Constraint::OneOf(options) => write!(f, "one of {{{}}}", options.join(", ")),
            Constraint::PowerOfTwoMinusOne => f.write_str("2^k-1"),
            Constraint::ConsistentDerivative => f.write_str("consistent derivative"),
        }
    }
}

impl Constraint {
    /// Pure check of a single value against this constraint.
    pub fn check(&self, value: &ParamValue) -> bool {
        let all = |pred: &dyn Fn(f64) -> bool| value.numeric_entries().is_some_and(|e| e.into_iter().all(pred));
        match self {
            Constraint::Scalar => matches!(value, ParamValue::Scalar(_)),
            Constraint::Vector => matches!(value, ParamValue::Vector(_)),
            Constraint::Matrix => match value {
                ParamValue::Matrix(_) => true,
                ParamValue::Function(f) => matches!(f.kind(), FunctionKind::Matrix(_)),
                _ => false,
            },
            Constraint::Square => match value {
                ParamValue::Matrix(m) => m.is_square(),
                ParamValue::Function(f) => match f.kind() {
                    FunctionKind::Matrix(a) => a(0.0).is_square(),
                    _ => false,
                },
                _ => false,
            },
            Constraint::Nonnegative => !matches!(value, ParamValue::Function(_)) && all(&|x| x >= 0.0),
            Constraint::Positive => !matches!(value, ParamValue::Function(_)) && all(&|x| x > 0.0),
            Constraint::Finite => all(&|x| x.is_finite()),
            Constraint::Integer => !matches!(value, ParamValue::Function(_)) && all(&|x| x.is_finite() && x.fract() == 0.0),
            Constraint::Function => matches!(value, ParamValue::Function(_) | ParamValue::Scalar(_)),
            Constraint::Text => matches!(value, ParamValue::Text(_)),
            Constraint::AtLeast(min) => !matches!(value, ParamValue::Function(_)) && all(&|x| x >= *min),
            Constraint::OneOf(options) => value.display_token().is_some_and(|tok| options.contains(&tok.as_str())),
            Constraint::PowerOfTwoMinusOne => match value {
                ParamValue::Scalar(x) if x.fract() == 0.0 && *x >= 7.0 && *x < 1e9 => {
                    let m = *x as u64 + 1;
                    m.is_power_of_two()
                }
                _ => false,
            },
            Constraint::ConsistentDerivative => match value {
                ParamValue::Function(FunctionParam { kind: FunctionKind::Differentiable { value, derivative }, .. }) => {
                    derivative_is_consistent(value.as_ref(), derivative.as_ref())
                }
                _ => false,
            },
        }
    }
}

fn derivative_is_consistent(value: &dyn Fn(f64) -> f64, derivative: &dyn Fn(f64) -> f64) -> bool {
    const SAMPLES: usize = 41;
    (0..SAMPLES).all(|i| {
        let x = -10.0 + 20.0 * i as f64 / (SAMPLES - 1) as f64;
        let step = 1e-5 * x.abs().max(1.0);
        let fd = (value(x + step) - value(x - step)) / (2.0 * step);
        let d = derivative(x);
        d.is_finite() && (fd - d).abs() <= 1e-5 * (1.0 + d.abs())
    })
}

/// One field of a schema.
#[derive(Clone, Debug)]
pub struct FieldSchema {
    pub name: &'static str,
    pub constraints: Vec<Constraint>,
    pub doc: &'static str,
}

/// Ordered per-field constraint lists.
#[derive(Clone, Debug, Default)]
pub struct ParameterSchema {
    fields: Vec<FieldSchema>,
}

impl ParameterSchema {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn field(mut self, name: &'static str, constraints: &[Constraint], doc: &'static str) -> Self {
        self.fields.push(FieldSchema { name, constraints: constraints.to_vec(), doc });
        self
    }

    pub fn fields(&self) -> &[FieldSchema] {
        &self.fields
    }

    pub fn get(&self, name: &str) -> Option<&FieldSchema> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Checks one field, returning the first failing constraint.
    pub fn check_field(&self, name: &str, value: &ParamValue) -> Result<(), ProblemError> {
        let field = self.get(name).ok_or_else(|| ProblemError::UnknownField(name.to_string()))?;
        match field.constraints.iter().find(|c| !c.check(value)) {
            Some(c) => Err(ProblemError::Validation { field: name.to_string(), constraint: c.clone() }),
            None => Ok(()),
        }
    }
}

/// Validated name -> value map.
#[derive(Clone, Debug, Default)]
pub struct Parameters {
    values: BTreeMap<String, ParamValue>,
}

impl Parameters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: ParamValue) -> Self {
        self.values.insert(name.to_string(), value);
        self
    }

    pub fn insert(&mut self, name: &str, value: ParamValue) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamValue)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn require(&self, name: &str) -> Result<&ParamValue, ProblemError> {
        self.values.get(name).ok_or_else(|| ProblemError::UnknownField(name.to_string()))
    }

    pub fn scalar(&self, name: &str) -> Result<f64, ProblemError> {
        match self.require(name)? {
            ParamValue::Scalar(x) => Ok(*x),
            _ => Err(ProblemError::Validation { field: name.to_string(), constraint: Constraint::Scalar }),
        }
    }

    pub fn usize(&self, name: &str) -> Result<usize, ProblemError> {
        let x = self.scalar(name)?;
        if x < 0.0 || x.fract() != 0.0 {
            return Err(ProblemError::Validation { field: name.to_string(), constraint: Constraint::Integer });
        }
        Ok(x as usize)
    }

    pub fn text(&self, name: &str) -> Result<&str, ProblemError> {
        match self.require(name)? {
            ParamValue::Text(s) => Ok(s),
            _ => Err(ProblemError::Validation { field: name.to_string(), constraint: Constraint::Text }),
        }
    }

    pub fn value(&self, name: &str) -> Result<&ParamValue, ProblemError> {
        self.require(name)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.values.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
    }
}

/// Checks every field in `params` against `schema`. Fields absent from the
/// schema are rejected with `UnknownField`, schema fields absent from
/// `params` with `MissingField`.
pub fn validate(params: &Parameters, schema: &ParameterSchema) -> Result<(), ProblemError> {
    for (name, value) in params.iter() {
        schema.check_field(name, value)?;
    }
    for field in schema.fields() {
        if params.get(field.name).is_none() {
            return Err(ProblemError::MissingField(field.name.to_string()));
        }
    }
    Ok(())
}
