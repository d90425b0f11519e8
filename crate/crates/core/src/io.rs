//! JSON and CSV formats shared by the command line and the browser demo.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows. Shapes
//! are lists of `[label, dim]` pairs. Parse failures become [`Error::Format`]
//! naming the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channels::{Arity, Channel, Isometry};
use crate::error::{Error, Result};
use crate::region::{RatePoint, Region2D};
use crate::states::{DensityMatrix, PureState};
use crate::tensor::{c64, CMatrix, SystemShape};

pub type Complex = [f64; 2];
pub type Factors = Vec<(String, usize)>;

/// Maps a serde error to the field it complains about, when it names one.
fn from_serde(e: serde_json::Error, fallback: &str) -> Error {
    let msg = e.to_string();
    let field = msg
        .split('`')
        .nth(1)
        .filter(|_| msg.contains("field"))
        .unwrap_or(fallback)
        .to_string();
    Error::format(field, msg)
}

pub fn shape_to_json(s: &SystemShape) -> Factors {
    s.labels()
        .iter()
        .zip(s.dims())
        .map(|(l, d)| (l.to_string(), d))
        .collect()
}

fn shape_from_json(f: &Factors, field: &str) -> Result<SystemShape> {
    SystemShape::new(f.iter().cloned()).map_err(|e| Error::format(field, e.to_string()))
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<Complex>> {
    (0..m.rows())
        .map(|r| {
            (0..m.cols())
                .map(|c| [m.get(r, c).re, m.get(r, c).im])
                .collect()
        })
        .collect()
}

fn matrix_from_rows(rows: &[Vec<Complex>], field: &str) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 {
        return Err(Error::format(field, "empty matrix"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != m) {
        return Err(Error::format(
            format!("{field}[{i}]"),
            format!("row has {} entries, expected {m}", rows[i].len()),
        ));
    }
    let data = rows.iter().flatten().map(|z| c64(z[0], z[1])).collect();
    CMatrix::from_row_major(n, m, data).map_err(|e| Error::format(field, e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Density,
    Pure,
}

/// `{"shape": [["A", 2]], "kind": "density" | "pure", "data": [[re, im], ...]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub shape: Factors,
    pub kind: StateKind,
    pub data: Vec<Complex>,
}

pub enum LoadedState {
    Density(DensityMatrix),
    Pure(PureState),
}

impl StateFile {
    pub fn from_density(rho: &DensityMatrix) -> Self {
        StateFile {
            shape: shape_to_json(rho.shape()),
            kind: StateKind::Density,
            data: matrix_to_rows(rho.mat()).into_iter().flatten().collect(),
        }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        StateFile {
            shape: shape_to_json(psi.shape()),
            kind: StateKind::Pure,
            data: matrix_to_rows(psi.vec()).into_iter().flatten().collect(),
        }
    }

    pub fn load(&self) -> Result<LoadedState> {
        let shape = shape_from_json(&self.shape, "shape")?;
        let d = shape.dim();
        let entries: Vec<_> = self.data.iter().map(|z| c64(z[0], z[1])).collect();
        match self.kind {
            StateKind::Pure => {
                if entries.len() != d {
                    return Err(Error::format(
                        "data",
                        format!("{} amplitudes for dimension {d}", entries.len()),
                    ));
                }
                PureState::from_amplitudes(entries, shape)
                    .map(LoadedState::Pure)
                    .map_err(|e| Error::format("data", e.to_string()))
            }
            StateKind::Density => {
                if entries.len() != d * d {
                    return Err(Error::format(
                        "data",
                        format!("{} entries for a {d}x{d} matrix", entries.len()),
                    ));
                }
                let m = CMatrix::from_row_major(d, d, entries)
                    .map_err(|e| Error::format("data", e.to_string()))?;
                DensityMatrix::new(m, shape)
                    .map(LoadedState::Density)
                    .map_err(|e| Error::format("data", e.to_string()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArityTag {
    Single,
    Mac2,
}

/// Kraus-form channel. For `mac2` without explicit sender lists, the first
/// input factor belongs to Alice and the second to Bob.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub name: String,
    pub arity: ArityTag,
    pub in_shape: Factors,
    pub out_shape: Factors,
    pub kraus: Vec<Vec<Vec<Complex>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alice: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bob: Option<Vec<String>>,
}

impl ChannelFile {
    pub fn from_channel(name: &str, ch: &Channel) -> Self {
        let (arity, alice, bob) = match ch.arity() {
            Arity::Single => (ArityTag::Single, None, None),
            Arity::Mac2 { alice, bob } => {
                let labels = ch.in_shape().labels();
                let default = alice.len() == 1
                    && bob.len() == 1
                    && labels == [alice[0].as_str(), bob[0].as_str()];
                if default {
                    (ArityTag::Mac2, None, None)
                } else {
                    (ArityTag::Mac2, Some(alice.clone()), Some(bob.clone()))
                }
            }
        };
        ChannelFile {
            name: name.to_string(),
            arity,
            in_shape: shape_to_json(ch.in_shape()),
            out_shape: shape_to_json(ch.out_shape()),
            kraus: ch.kraus().iter().map(matrix_to_rows).collect(),
            alice,
            bob,
        }
    }

    pub fn load(&self) -> Result<Channel> {
        let in_shape = shape_from_json(&self.in_shape, "in_shape")?;
        let out_shape = shape_from_json(&self.out_shape, "out_shape")?;
        if self.kraus.is_empty() {
            return Err(Error::format("kraus", "no Kraus operators"));
        }
        let kraus = self
            .kraus
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let field = format!("kraus[{i}]");
                let m = matrix_from_rows(k, &field)?;
                if m.rows() != out_shape.dim() || m.cols() != in_shape.dim() {
                    return Err(Error::format(
                        field,
                        format!(
                            "{}x{} operator for {} -> {}",
                            m.rows(),
                            m.cols(),
                            in_shape.dim(),
                            out_shape.dim()
                        ),
                    ));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        let ch = Channel::new(kraus, in_shape.clone(), out_shape)
            .map_err(|e| Error::format("kraus", e.to_string()))?;
        match self.arity {
            ArityTag::Single => Ok(ch),
            ArityTag::Mac2 => {
                let labels = in_shape.labels();
                let (alice, bob): (Vec<&str>, Vec<&str>) = match (&self.alice, &self.bob) {
                    (Some(a), Some(b)) => (
                        a.iter().map(String::as_str).collect(),
                        b.iter().map(String::as_str).collect(),
                    ),
                    (None, None) if labels.len() == 2 => (vec![labels[0]], vec![labels[1]]),
                    _ => {
                        return Err(Error::format(
                            "arity",
                            "mac2 needs two input factors or explicit alice/bob label lists",
                        ))
                    }
                };
                ch.into_mac2(&alice, &bob)
                    .map_err(|e| Error::format("arity", e.to_string()))
            }
        }
    }
}

/// Stinespring isometry `V: in -> env (x) out`, environment factor slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsometryFile {
    pub name: String,
    pub in_shape: Factors,
    pub out_shape: Factors,
    pub env_shape: Factors,
    pub matrix: Vec<Vec<Complex>>,
}

impl IsometryFile {
    pub fn from_isometry(name: &str, v: &Isometry) -> Self {
        IsometryFile {
            name: name.to_string(),
            in_shape: shape_to_json(v.in_shape()),
            out_shape: shape_to_json(v.out_shape()),
            env_shape: shape_to_json(v.env_shape()),
            matrix: matrix_to_rows(v.mat()),
        }
    }

    pub fn load(&self) -> Result<Isometry> {
        let m = matrix_from_rows(&self.matrix, "matrix")?;
        Isometry::new(
            m,
            shape_from_json(&self.in_shape, "in_shape")?,
            shape_from_json(&self.out_shape, "out_shape")?,
            shape_from_json(&self.env_shape, "env_shape")?,
        )
        .map_err(|e| Error::format("matrix", e.to_string()))
    }
}

/// Provenance of a computed region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionMeta {
    pub channel: String,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evals: Option<usize>,
    /// Hausdorff distance to the closed-form region, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hausdorff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionFile {
    pub axes: [String; 2],
    pub hull: Vec<RatePoint>,
    pub points: Vec<RatePoint>,
    pub meta: RegionMeta,
}

impl RegionFile {
    pub fn new(region: &Region2D, meta: RegionMeta) -> Self {
        RegionFile {
            axes: region.axes.clone(),
            hull: region.hull.clone(),
            points: region.points.clone(),
            meta,
        }
    }

    pub fn region(&self) -> Region2D {
        let axes = [self.axes[0].as_str(), self.axes[1].as_str()];
        Region2D::from_points(axes, self.points.clone())
    }
}

/// Fixed-point decimal with 12 significant digits, trailing zeros removed.
pub fn fmt_sig12(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_finite() {
            "0".into()
        } else {
            v.to_string()
        };
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (11 - mag).clamp(0, 40) as usize;
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

/// `x,y,kind` lines: hull vertices first (kind `hull`), then the point cloud (`point`).
pub fn region_csv(region: &Region2D) -> String {
    let mut out = format!("{},{},kind\n", region.axes[0], region.axes[1]);
    for (kind, pts) in [("hull", &region.hull), ("point", &region.points)] {
        for p in pts {
            out.push_str(&format!("{},{},{kind}\n", fmt_sig12(p.x), fmt_sig12(p.y)));
        }
    }
    out
}

/// Environment vectors for a dephasing channel: `{"phis": [[[re, im], ...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingFile {
    pub phis: Vec<Vec<Complex>>,
}

impl DephasingFile {
    pub fn load(&self) -> Result<Vec<PureState>> {
        if self.phis.len() < 2 {
            return Err(Error::format(
                "phis",
                "need at least two environment vectors",
            ));
        }
        self.phis
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let amps = v.iter().map(|z| c64(z[0], z[1])).collect::<Vec<_>>();
                let n = amps.len();
                PureState::from_amplitudes(amps, SystemShape::single("E", n.max(1)))
                    .map_err(|e| Error::format(format!("phis[{i}]"), e.to_string()))
            })
            .collect()
    }
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| from_serde(e, what))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::format("file", format!("{}: {e}", path.display())))
}

pub fn read_channel_file(path: &Path) -> Result<Channel> {
    parse_json::<ChannelFile>(&read(path)?, "channel")?.load()
}

pub fn read_dephasing_file(path: &Path) -> Result<Vec<PureState>> {
    parse_json::<DephasingFile>(&read(path)?, "phis")?.load()
}
