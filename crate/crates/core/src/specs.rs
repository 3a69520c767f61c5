//! JSON-facing descriptions of channels and protocols.
//!
//! Channel specs are objects like
//! `{"family": "depolarizing", "d": 2, "params": {"p": 0.3}}` for discrete
//! families (plus `"pauli"` with a probability vector and a `"raw"` Kraus
//! escape hatch with no covariance guarantee), and
//! `{"family": "thermal_loss", "eta": 0.5, "nbar": 1.0}` for bosonic ones.
//! Protocols list register dims, per-round probe slots and Kraus matrices as
//! nested arrays of `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channels::{
    amplitude_damping, dephasing, depolarizing, erasure, pauli_channel, ChannelLabel,
    PauliDistribution, QuantumChannel,
};
use crate::error::{Error, Result};
use crate::gaussian::GaussianChannelParams;
use crate::linalg::CMatrix;
use crate::metrology::EstimationFamily;
use crate::stretching::{AdaptiveProtocol, ProtocolRound};

/// A parsed channel spec: either a concrete discrete channel or bosonic
/// Gaussian channel parameters.
#[derive(Clone, Debug)]
pub enum ChannelSpec {
    Discrete(QuantumChannel),
    Bosonic(GaussianChannelParams),
}

impl ChannelSpec {
    /// The estimation family and current parameter value, for specs that
    /// belong to a parameterized family.
    pub fn estimation_point(&self) -> Option<(EstimationFamily, f64)> {
        match self {
            ChannelSpec::Discrete(ch) => match *ch.label() {
                ChannelLabel::Depolarizing { p } => Some((EstimationFamily::Depolarizing, p)),
                ChannelLabel::Dephasing { p } => Some((EstimationFamily::Dephasing, p)),
                ChannelLabel::Erasure { pi, d } => Some((EstimationFamily::Erasure { d }, pi)),
                _ => None,
            },
            ChannelSpec::Bosonic(p) => {
                let family = match *p {
                    GaussianChannelParams::ThermalLoss { eta, .. } => {
                        EstimationFamily::ThermalLoss { eta }
                    }
                    GaussianChannelParams::Amplifier { eta, .. } => {
                        EstimationFamily::Amplifier { eta }
                    }
                    GaussianChannelParams::AdditiveNoise { .. } => EstimationFamily::AdditiveNoise,
                };
                Some((family, p.theta()))
            }
        }
    }
}

fn get_f64(v: &Value, key: &str) -> Result<f64> {
    v.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Spec(format!("missing or non-numeric field '{key}'")))
}

fn get_d(v: &Value) -> Result<usize> {
    match v.get("d") {
        None => Ok(2),
        Some(x) => x
            .as_u64()
            .map(|d| d as usize)
            .ok_or_else(|| Error::Spec("field 'd' must be a positive integer".into())),
    }
}

/// Parse a channel spec from JSON text.
pub fn parse_channel_spec(json: &str) -> Result<ChannelSpec> {
    let v: Value =
        serde_json::from_str(json).map_err(|e| Error::Spec(format!("invalid JSON: {e}")))?;
    channel_spec_from_value(&v)
}

/// Parse a channel spec from a JSON value.
pub fn channel_spec_from_value(v: &Value) -> Result<ChannelSpec> {
    let family = v
        .get("family")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Spec("missing field 'family'".into()))?;
    let params = v.get("params").cloned().unwrap_or(Value::Null);
    match family {
        "depolarizing" => {
            let p = get_f64(&params, "p")?;
            Ok(ChannelSpec::Discrete(depolarizing(p)?))
        }
        "dephasing" => {
            let p = get_f64(&params, "p")?;
            Ok(ChannelSpec::Discrete(dephasing(p)?))
        }
        "erasure" => {
            let pi = get_f64(&params, "pi")?;
            Ok(ChannelSpec::Discrete(erasure(pi, get_d(v)?)?))
        }
        "pauli" => {
            let d = get_d(v)?;
            let probs: Vec<f64> = params
                .get("probs")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Spec("pauli spec needs params.probs".into()))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| Error::Spec("non-numeric prob".into()))
                })
                .collect::<Result<_>>()?;
            Ok(ChannelSpec::Discrete(pauli_channel(
                PauliDistribution::new(d, probs)?,
            )))
        }
        "amplitude_damping" => {
            let gamma = get_f64(&params, "gamma")?;
            Ok(ChannelSpec::Discrete(amplitude_damping(gamma)?))
        }
        "raw" => {
            let kraus_json = params
                .get("kraus")
                .ok_or_else(|| Error::Spec("raw spec needs params.kraus".into()))?;
            let matrices: Vec<MatrixJson> = serde_json::from_value(kraus_json.clone())
                .map_err(|e| Error::Spec(format!("bad kraus encoding: {e}")))?;
            let kraus: Vec<CMatrix> = matrices
                .iter()
                .map(matrix_from_json)
                .collect::<Result<_>>()?;
            Ok(ChannelSpec::Discrete(QuantumChannel::from_kraus(
                kraus,
                ChannelLabel::Raw,
            )?))
        }
        "thermal_loss" => Ok(ChannelSpec::Bosonic(GaussianChannelParams::ThermalLoss {
            eta: get_f64(v, "eta")?,
            nbar: get_f64(v, "nbar")?,
        })),
        "amplifier" => Ok(ChannelSpec::Bosonic(GaussianChannelParams::Amplifier {
            eta: get_f64(v, "eta")?,
            nbar: get_f64(v, "nbar")?,
        })),
        "additive_noise" => Ok(ChannelSpec::Bosonic(GaussianChannelParams::AdditiveNoise {
            w: get_f64(v, "w")?,
        })),
        other => Err(Error::Spec(format!("unknown channel family '{other}'"))),
    }
}

/// A complex matrix as nested rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMatrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::Spec("empty matrix".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Spec("ragged matrix rows".into()));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        Complex64::new(rows[i][j][0], rows[i][j][1])
    }))
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Serialized form of an adaptive protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub register_dims: Vec<usize>,
    pub initial_op: Vec<MatrixJson>,
    pub rounds: Vec<RoundSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundSpec {
    pub probe_slot: usize,
    pub op: Vec<MatrixJson>,
}

impl ProtocolSpec {
    pub fn parse(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Spec(format!("invalid protocol JSON: {e}")))
    }

    pub fn to_protocol(&self) -> Result<AdaptiveProtocol> {
        let initial = self
            .initial_op
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        let rounds = self
            .rounds
            .iter()
            .map(|r| {
                Ok(ProtocolRound {
                    probe_slot: r.probe_slot,
                    op: r
                        .op
                        .iter()
                        .map(matrix_from_json)
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        AdaptiveProtocol::new(self.register_dims.clone(), initial, rounds)
    }

    pub fn from_protocol(prot: &AdaptiveProtocol) -> Self {
        Self {
            register_dims: prot.register_dims().to_vec(),
            initial_op: prot.initial_op().iter().map(matrix_to_json).collect(),
            rounds: prot
                .rounds()
                .iter()
                .map(|r| RoundSpec {
                    probe_slot: r.probe_slot,
                    op: r.op.iter().map(matrix_to_json).collect(),
                })
                .collect(),
        }
    }
}
