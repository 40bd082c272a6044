//! JSON model files.
//!
//! ```json
//! { "schema_version": 1, "kind": "esn",
//!   "dims": { "state": 2, "input": 1, "output": 1 },
//!   "activation": "tanh",
//!   "matrices": { "a": {"rows": 2, "cols": 2, "data": [..]}, "c": .., "zeta": .., "w": .. } }
//! ```
//!
//! SAS files carry `"kind": "sas"`, `"degrees": [r_p, s_q]`, `"p"` and `"q"` as
//! lists of `{"exponents": [..], "matrix": {..}}`, `"w"`, and optionally `"k"`
//! and `"state_bound"`. Matrices are row-major.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Activation, EsnParams, SasParams};
use crate::{Error, Real, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixRecord {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MatrixRecord {
    fn from_matrix<T: Real>(m: &DMatrix<T>) -> Self {
        Self { rows: m.nrows(), cols: m.ncols(), data: m.transpose().iter().map(|v| v.as_f64()).collect() }
    }

    fn from_vector<T: Real>(v: &DVector<T>) -> Self {
        Self { rows: v.len(), cols: 1, data: v.iter().map(|x| x.as_f64()).collect() }
    }

    fn to_matrix<T: Real>(&self, what: &str) -> Result<DMatrix<T>> {
        if self.rows * self.cols != self.data.len() {
            return Err(Error::Schema(format!(
                "{what}: {}x{} matrix needs {} entries, found {}",
                self.rows,
                self.cols,
                self.rows * self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_iterator(self.rows, self.cols, self.data.iter().map(|&v| T::lit(v))))
    }

    fn to_vector<T: Real>(&self, what: &str) -> Result<DVector<T>> {
        if self.cols != 1 {
            return Err(Error::Schema(format!("{what}: expected a column, found {} columns", self.cols)));
        }
        Ok(self.to_matrix::<T>(what)?.column(0).into_owned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Dims {
    state: usize,
    input: usize,
    output: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EsnMatrices {
    a: MatrixRecord,
    c: MatrixRecord,
    zeta: MatrixRecord,
    w: MatrixRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Term {
    exponents: Vec<u32>,
    matrix: MatrixRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Body {
    Esn {
        dims: Dims,
        activation: String,
        matrices: EsnMatrices,
    },
    Sas {
        dims: Dims,
        degrees: (u32, u32),
        p: Vec<Term>,
        q: Vec<Term>,
        w: MatrixRecord,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state_bound: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    #[serde(flatten)]
    body: Body,
}

/// SAS parameters with the optional certificate constants stored beside them.
#[derive(Clone, Debug, PartialEq)]
pub struct SasModel<T: Real> {
    pub params: SasParams<T>,
    pub k: Option<f64>,
    pub state_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model<T: Real> {
    Esn(EsnParams<T>),
    Sas(SasModel<T>),
}

impl<T: Real> Model<T> {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Esn(_) => "esn",
            Self::Sas(_) => "sas",
        }
    }
}

fn dims_check(what: &str, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(Error::Schema(format!("{what} is {found}, dims say {expected}")));
    }
    Ok(())
}

pub fn model_to_json<T: Real>(model: &Model<T>) -> Result<String> {
    let body = match model {
        Model::Esn(p) => {
            if let Activation::Custom { name, .. } = &p.activation {
                return Err(Error::UnsupportedKind(format!("activation {name} cannot be stored in a model file")));
            }
            Body::Esn {
                dims: Dims { state: p.state_dim(), input: p.input_dim(), output: p.output_dim() },
                activation: p.activation.name().to_string(),
                matrices: EsnMatrices {
                    a: MatrixRecord::from_matrix(&p.a),
                    c: MatrixRecord::from_matrix(&p.c),
                    zeta: MatrixRecord::from_vector(&p.zeta),
                    w: MatrixRecord::from_matrix(&p.w),
                },
            }
        }
        Model::Sas(m) => {
            let s = &m.params;
            Body::Sas {
                dims: Dims { state: s.state_dim(), input: s.input_dim(), output: s.output_dim() },
                degrees: s.degrees(),
                p: s.p_terms().iter().map(|(e, a)| Term { exponents: e.clone(), matrix: MatrixRecord::from_matrix(a) }).collect(),
                q: s.q_terms().iter().map(|(e, b)| Term { exponents: e.clone(), matrix: MatrixRecord::from_vector(b) }).collect(),
                w: MatrixRecord::from_matrix(s.readout()),
                k: m.k,
                state_bound: m.state_bound,
            }
        }
    };
    serde_json::to_string_pretty(&ModelFile { schema_version: SCHEMA_VERSION, body })
        .map_err(|e| Error::Schema(e.to_string()))
}

pub fn model_from_json<T: Real>(text: &str) -> Result<Model<T>> {
    // Read the activation before the typed parse so an unknown kind is
    // reported as such rather than as a generic schema error.
    let file: ModelFile = serde_json::from_str(text).map_err(|e| {
        if e.is_data() {
            Error::Schema(format!("line {}, column {}: {e}", e.line(), e.column()))
        } else {
            Error::Parse { line: e.line(), column: e.column(), msg: e.to_string() }
        }
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!("unsupported schema_version {}", file.schema_version)));
    }
    match file.body {
        Body::Esn { dims, activation, matrices } => {
            let activation = Activation::from_name(&activation)?;
            let a = matrices.a.to_matrix::<T>("a")?;
            let c = matrices.c.to_matrix::<T>("c")?;
            let zeta = matrices.zeta.to_vector::<T>("zeta")?;
            let w = matrices.w.to_matrix::<T>("w")?;
            dims_check("rows of a", a.nrows(), dims.state)?;
            dims_check("columns of c", c.ncols(), dims.input)?;
            dims_check("rows of w", w.nrows(), dims.output)?;
            Ok(Model::Esn(EsnParams::new(a, c, zeta, w, activation)?))
        }
        Body::Sas { dims, degrees, p, q, w, k, state_bound } => {
            let mut pm = BTreeMap::new();
            for t in p {
                let m = t.matrix.to_matrix::<T>("p term")?;
                if pm.insert(t.exponents.clone(), m).is_some() {
                    return Err(Error::Schema(format!("duplicate p term {:?}", t.exponents)));
                }
            }
            let mut qm = BTreeMap::new();
            for t in q {
                let v = t.matrix.to_vector::<T>("q term")?;
                if qm.insert(t.exponents.clone(), v).is_some() {
                    return Err(Error::Schema(format!("duplicate q term {:?}", t.exponents)));
                }
            }
            let w = w.to_matrix::<T>("w")?;
            dims_check("rows of w", w.nrows(), dims.output)?;
            let params = SasParams::new(dims.state, dims.input, degrees, pm, qm, w)?;
            Ok(Model::Sas(SasModel { params, k, state_bound }))
        }
    }
}

pub fn save_model<T: Real>(model: &Model<T>, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(model)?)?;
    Ok(())
}

pub fn load_model<T: Real>(path: &Path) -> Result<Model<T>> {
    model_from_json(&std::fs::read_to_string(path)?)
}
