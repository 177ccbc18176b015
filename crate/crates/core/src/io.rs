//! JSON and CSV interchange.
//!
//! All JSON written here is pretty-printed with keys in declaration order
//! and every finite float rendered with 17 significant digits, so repeated
//! runs produce byte-identical files. Non-finite floats become `null`.

use std::io::{self, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use thiserror::Error;

use crate::certify::Certificate;
use crate::error::SofError;
use crate::feasibility::FeasibilityReport;
use crate::model::{LosslessNonlinearity, LtiPlant, SystemDef};
use crate::sim::{GridPattern, GridSpec, IntegratorOptions, Trajectory};
use crate::synthesis::SynthesisResult;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("{field}: {message}")]
    Shape { field: String, message: String },

    #[error(transparent)]
    Model(#[from] SofError),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            return FormatError::Io(io::Error::other(e.to_string()));
        }
        FormatError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

pub type Rows = Vec<Vec<f64>>;

/// Row-major nested arrays to a matrix; rows must have equal length.
pub fn matrix_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>, FormatError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Err(FormatError::Shape { field: field.into(), message: "matrix must be non-empty".into() });
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(FormatError::Shape {
            field: field.into(),
            message: format!("row {} has {} entries, expected {}", i, r.len(), ncols),
        });
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// System description: `{"A": .., "B": .., "C": .., "S": [..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(rename = "A")]
    pub a: Rows,
    #[serde(rename = "B")]
    pub b: Rows,
    #[serde(rename = "C")]
    pub c: Rows,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<Rows>>,
}

impl SystemFile {
    pub fn from_system(sys: &SystemDef<f64>) -> Self {
        Self {
            a: matrix_to_rows(sys.plant.a()),
            b: matrix_to_rows(sys.plant.b()),
            c: matrix_to_rows(sys.plant.c()),
            s: sys.nonlinearity.as_ref().map(|nl| nl.terms().iter().map(matrix_to_rows).collect()),
        }
    }

    pub fn plant(&self) -> Result<LtiPlant<f64>, FormatError> {
        Ok(LtiPlant::new(
            matrix_from_rows("A", &self.a)?,
            matrix_from_rows("B", &self.b)?,
            matrix_from_rows("C", &self.c)?,
        )?)
    }

    /// The raw nonlinearity terms, shape-checked but not skew-checked.
    pub fn raw_terms(&self) -> Result<Option<Vec<DMatrix<f64>>>, FormatError> {
        self.s
            .as_ref()
            .map(|terms| terms.iter().enumerate().map(|(k, rows)| matrix_from_rows(&format!("S[{k}]"), rows)).collect())
            .transpose()
    }

    pub fn to_system(&self) -> Result<SystemDef<f64>, FormatError> {
        let plant = self.plant()?;
        let nl = self.raw_terms()?.map(LosslessNonlinearity::new).transpose()?;
        Ok(SystemDef::new(plant, nl)?)
    }
}

pub fn parse_system(text: &str) -> Result<SystemDef<f64>, FormatError> {
    let file: SystemFile = serde_json::from_str(text)?;
    file.to_system()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GainValue {
    Scalar(f64),
    Matrix(Rows),
}

/// Gain file: any JSON object with a `"K"` entry (extra keys ignored), so a
/// synthesis report can be fed back directly.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct GainFile {
    #[serde(rename = "K")]
    pub k: Option<GainValue>,
}

pub fn parse_gain(text: &str) -> Result<DMatrix<f64>, FormatError> {
    let file: GainFile = serde_json::from_str(text)?;
    match file.k {
        None => Err(FormatError::Shape { field: "K".into(), message: "gain is missing or null".into() }),
        Some(GainValue::Scalar(v)) => Ok(DMatrix::from_element(1, 1, v)),
        Some(GainValue::Matrix(rows)) => matrix_from_rows("K", &rows),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityJson {
    #[serde(rename = "lambda_B")]
    pub lambda_b: f64,
    #[serde(rename = "lambda_C")]
    pub lambda_c: f64,
    pub feasible: bool,
    #[serde(rename = "m_B")]
    pub m_b: usize,
    #[serde(rename = "m_C")]
    pub m_c: usize,
}

impl From<&FeasibilityReport<f64>> for FeasibilityJson {
    fn from(r: &FeasibilityReport<f64>) -> Self {
        Self { lambda_b: r.lambda_b, lambda_c: r.lambda_c, feasible: r.feasible, m_b: r.m_b(), m_c: r.m_c() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisJson {
    pub status: &'static str,
    #[serde(rename = "K")]
    pub k: Option<Rows>,
    pub achieved_lambda: Option<f64>,
    pub epsilon: f64,
    pub iterations_used: usize,
}

impl SynthesisJson {
    pub fn new(r: &SynthesisResult<f64>, epsilon: f64) -> Self {
        Self {
            status: r.status.as_str(),
            k: r.gain.as_ref().map(|g| matrix_to_rows(&g.k)),
            achieved_lambda: r.gain.as_ref().map(|g| g.achieved_lambda),
            epsilon,
            iterations_used: r.iterations_used,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateJson {
    pub valid: bool,
    pub epsilon: f64,
    pub lambda_max_reduced: f64,
    pub lambda_max_bmi: f64,
    #[serde(rename = "P")]
    pub p: &'static str,
    pub xi_o: f64,
}

impl From<&Certificate<f64>> for CertificateJson {
    fn from(c: &Certificate<f64>) -> Self {
        Self {
            valid: c.valid,
            epsilon: c.epsilon,
            lambda_max_reduced: c.lambda_max_reduced,
            lambda_max_bmi: c.lambda_max_bmi,
            p: "identity",
            xi_o: c.xi_o,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "pattern", rename_all = "lowercase")]
pub enum GridJson {
    Circle { radius: f64, count: usize, jitter_seed: Option<u64> },
    Box { bound: f64, nx: usize, ny: usize, jitter_seed: Option<u64> },
}

impl From<&GridSpec<f64>> for GridJson {
    fn from(g: &GridSpec<f64>) -> Self {
        match g.pattern {
            GridPattern::Circle { radius, count } => GridJson::Circle { radius, count, jitter_seed: g.jitter_seed },
            GridPattern::Box { bound, nx, ny } => GridJson::Box { bound, nx, ny, jitter_seed: g.jitter_seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryEntry {
    pub file: String,
    pub x0: Vec<f64>,
    pub diverged: bool,
    pub escape_time: Option<f64>,
    pub final_norm: f64,
    pub samples: usize,
}

/// `index.json` written next to a portrait's CSV files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PortraitManifest {
    pub grid: GridJson,
    pub dt: f64,
    pub t_final: f64,
    pub escape_radius: f64,
    pub closed_loop: bool,
    #[serde(rename = "K")]
    pub k: Option<Rows>,
    pub diverged: Vec<bool>,
    pub trajectories: Vec<TrajectoryEntry>,
}

impl PortraitManifest {
    pub fn new(
        grid: &GridSpec<f64>,
        opts: &IntegratorOptions<f64>,
        k: Option<&DMatrix<f64>>,
        trajs: &[Trajectory<f64>],
        files: &[String],
    ) -> Self {
        let trajectories = trajs
            .iter()
            .zip(files)
            .map(|(t, f)| TrajectoryEntry {
                file: f.clone(),
                x0: t.states.first().map(|x| x.iter().copied().collect()).unwrap_or_default(),
                diverged: t.diverged,
                escape_time: t.escape_time,
                final_norm: t.final_norm().unwrap_or(f64::NAN),
                samples: t.len(),
            })
            .collect();
        Self {
            grid: grid.into(),
            dt: opts.dt,
            t_final: opts.t_final,
            escape_radius: opts.escape_radius,
            closed_loop: k.is_some(),
            k: k.map(matrix_to_rows),
            diverged: trajs.iter().map(|t| t.diverged).collect(),
            trajectories,
        }
    }
}

/// Trajectory as CSV with header `t,x1,...,xn,norm`, one row per sample.
pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory<f64>) -> io::Result<()> {
    let n = traj.states.first().map_or(0, |x| x.len());
    let mut header = String::from("t");
    for i in 1..=n {
        header.push_str(&format!(",x{i}"));
    }
    header.push_str(",norm\n");
    w.write_all(header.as_bytes())?;
    for ((t, x), norm) in traj.times.iter().zip(&traj.states).zip(&traj.norms) {
        let mut line = format!("{t:e}");
        for v in x.iter() {
            line.push_str(&format!(",{v:e}"));
        }
        line.push_str(&format!(",{norm:e}\n"));
        w.write_all(line.as_bytes())?;
    }
    w.flush()
}

/// Pretty printer that renders finite floats as `{:.16e}`.
struct FixedDigits<'a>(PrettyFormatter<'a>);

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_string<S: Serialize>(value: &S) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory does not fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON output is UTF-8")
}
