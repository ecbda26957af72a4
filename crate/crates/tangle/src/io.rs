//! JSON, CSV and DOT formats.
//!
//! States are `{"dims":[...], "amps":[[re,im],...]}` with element 0 varying
//! fastest. Polynomial coefficients are keyed by the decimal value of their
//! mixed-radix index, so `"7"` names `σ₃σ₂σ₁` for three qubits.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nilcore::dynamics::{Coupling, CouplingKind, Family, HamiltonianSpec, LocalDrive, Trajectory};
use nilcore::{Complex64, NilPoly, StateVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{0}")]
    Write(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub amps: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(s: &StateVector) -> Self {
        StateFile {
            dims: s.dims().to_vec(),
            amps: s.amps().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_state(&self) -> nilcore::Result<StateVector> {
        StateVector::new(
            self.dims.clone(),
            self.amps
                .iter()
                .map(|a| Complex64::new(a[0], a[1]))
                .collect(),
        )
    }
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn parse_error(path: &Path, message: impl ToString) -> IoError {
    IoError::Parse {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

pub fn parse_state(text: &str) -> Result<StateVector, String> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    file.to_state().map_err(|e| e.to_string())
}

pub fn read_state(path: &Path) -> Result<StateVector, IoError> {
    parse_state(&read_text(path)?).map_err(|m| parse_error(path, m))
}

pub fn state_json(s: &StateVector) -> Value {
    serde_json::to_value(StateFile::from_state(s)).expect("plain data serializes")
}

/// `[re, im]` with components below `floor` written as exact zeros.
pub fn complex_json(z: Complex64, floor: f64) -> Value {
    let clean = |x: f64| if x.abs() < floor { 0.0 } else { x };
    json!([clean(z.re), clean(z.im)])
}

/// Nonconstant coefficients above `floor`, in increasing index order.
pub fn coeff_map(f: &NilPoly, floor: f64) -> Value {
    let mut map = Map::new();
    for (idx, z) in f.terms() {
        if idx != 0 && z.norm() > floor {
            map.insert(idx.to_string(), complex_json(z, floor));
        }
    }
    Value::Object(map)
}

/// A complex number given either as a plain real or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Num {
    Real(f64),
    Complex([f64; 2]),
}

impl Num {
    pub fn value(self) -> Complex64 {
        match self {
            Num::Real(x) => Complex64::new(x, 0.0),
            Num::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct CouplingFile {
    pub kind: String,
    pub i: usize,
    pub j: usize,
    pub g: Num,
}

/// Time-independent Hamiltonian:
/// `{"family":"xy","n":3,"local":[[px,py,pz],...],"couplings":[{"kind":"exchange","i":0,"j":1,"g":1.0}]}`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct HamiltonianFile {
    pub family: String,
    pub n: usize,
    #[serde(default)]
    pub local: Vec<[Num; 3]>,
    #[serde(default)]
    pub couplings: Vec<CouplingFile>,
}

fn drive(z: Complex64) -> nilcore::dynamics::Drive {
    Arc::new(move |_| z)
}

impl HamiltonianFile {
    pub fn to_spec(&self) -> Result<HamiltonianSpec, String> {
        let family = match self.family.as_str() {
            "local" => Family::Local,
            "xy" => Family::XyUniversal,
            "spherical" => Family::Spherical,
            other => return Err(format!("unknown family {other:?} (local, xy, spherical)")),
        };
        if self.local.len() > self.n {
            return Err(format!(
                "{} local drives for {} qubits",
                self.local.len(),
                self.n
            ));
        }
        let mut spec = HamiltonianSpec::new(family, self.n);
        for (i, p) in self.local.iter().enumerate() {
            spec = spec.with_local_drive(
                i,
                LocalDrive {
                    x: drive(p[0].value()),
                    y: drive(p[1].value()),
                    z: drive(p[2].value()),
                },
            );
        }
        for cpl in &self.couplings {
            let kind = match cpl.kind.as_str() {
                "exchange" => CouplingKind::Exchange,
                "zz" => CouplingKind::ZZ,
                "plusplus" => CouplingKind::PlusPlus,
                other => {
                    return Err(format!(
                        "unknown coupling {other:?} (exchange, zz, plusplus)"
                    ))
                }
            };
            spec.couplings.push(Coupling {
                i: cpl.i,
                j: cpl.j,
                kind,
                g: drive(cpl.g.value()),
            });
        }
        Ok(spec)
    }
}

pub fn read_hamiltonian(path: &Path) -> Result<HamiltonianSpec, IoError> {
    let file: HamiltonianFile =
        serde_json::from_str(&read_text(path)?).map_err(|e| parse_error(path, e))?;
    file.to_spec().map_err(|m| parse_error(path, m))
}

/// Time column followed by `re`/`im` pairs of every nonconstant coefficient.
pub fn trajectory_csv(traj: &Trajectory<NilPoly>) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let len = traj.values.first().map_or(0, |f| f.len());
    let mut header = vec!["t".to_string()];
    for idx in 1..len {
        header.push(format!("{idx}.re"));
        header.push(format!("{idx}.im"));
    }
    w.write_record(&header)
        .map_err(|e| IoError::Write(e.to_string()))?;
    for (t, f) in traj.times.iter().zip(&traj.values) {
        let mut row = vec![t.to_string()];
        for idx in 1..len {
            let z = f.get(idx);
            row.push(z.re.to_string());
            row.push(z.im.to_string());
        }
        w.write_record(&row)
            .map_err(|e| IoError::Write(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Write(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Write(e.to_string()))
}

/// One sample of the four-qubit scatter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FigpolyRow {
    pub seed: u64,
    pub poly_su: f64,
    pub nonunitarity: f64,
    pub poly_sl: f64,
    pub sl_measure: f64,
}

pub fn figpoly_csv(rows: &[FigpolyRow]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| IoError::Write(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Write(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| IoError::Write(e.to_string()))
}

pub fn read_figpoly_csv(text: &str) -> Result<Vec<FigpolyRow>, String> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<Vec<FigpolyRow>, _>>()
        .map_err(|e| e.to_string())
}
