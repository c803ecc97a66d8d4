//! JSON encodings. Complex scalars are `[re, im]`; matrices are row-major
//! nested arrays of them.
//!
//! ```text
//! state:       {"d1", "d2", "amplitudes"}
//! operator:    {"rows", "cols", "entries"}
//! covariance:  {"d1", "d2", "epsilon", "D11", "D12", "D21", "D22"}
//! channel:     {"U1": operator, "U2": operator}
//! hamiltonian: {"H1": operator, "H2": operator, "hbar"?}
//!            | {"H": operator, "d1", "d2", "hbar"?}
//! ```

use serde::{Deserialize, Serialize};

use crate::channels::{Hamiltonian, UnitaryChannel};
use crate::covariance::BlockCovariance;
use crate::hilbert::{BipartiteState, CMatrix, Operator, C64};

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

/// Parses a row-major matrix, checking its shape against `rows x cols`.
pub fn matrix_from_json(field: &str, m: &MatrixJson, rows: usize, cols: usize) -> Result<CMatrix, String> {
    if m.len() != rows {
        return Err(format!("{field}: expected {rows} rows, found {}", m.len()));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(format!("{field}: row {i} has {} entries, expected {cols}", row.len()));
        }
        if let Some(j) = row.iter().position(|z| !z[0].is_finite() || !z[1].is_finite()) {
            return Err(format!("{field}: entry ({i}, {j}) is not finite"));
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| C64::new(m[i][j][0], m[i][j][1])))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub d1: usize,
    pub d2: usize,
    pub amplitudes: MatrixJson,
}

impl From<BipartiteState> for StateJson {
    fn from(s: BipartiteState) -> Self {
        StateJson { d1: s.d1(), d2: s.d2(), amplitudes: matrix_to_json(s.operator()) }
    }
}

impl TryFrom<StateJson> for BipartiteState {
    type Error = String;

    fn try_from(j: StateJson) -> Result<Self, String> {
        if j.d1 == 0 || j.d2 == 0 {
            return Err(format!("d1/d2: dimensions must be positive, got {}x{}", j.d1, j.d2));
        }
        let m = matrix_from_json("amplitudes", &j.amplitudes, j.d1, j.d2)?;
        BipartiteState::matricize(m, false).map_err(|e| format!("amplitudes: {e}"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: MatrixJson,
}

impl From<Operator> for OperatorJson {
    fn from(a: Operator) -> Self {
        OperatorJson { rows: a.rows(), cols: a.cols(), entries: matrix_to_json(a.matrix()) }
    }
}

impl TryFrom<OperatorJson> for Operator {
    type Error = String;

    fn try_from(j: OperatorJson) -> Result<Self, String> {
        let m = matrix_from_json("entries", &j.entries, j.rows, j.cols)?;
        Operator::new(m).map_err(|e| format!("entries: {e}"))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovarianceJson {
    pub d1: usize,
    pub d2: usize,
    pub epsilon: f64,
    #[serde(rename = "D11")]
    pub d11: MatrixJson,
    #[serde(rename = "D12")]
    pub d12: MatrixJson,
    #[serde(rename = "D21")]
    pub d21: MatrixJson,
    #[serde(rename = "D22")]
    pub d22: MatrixJson,
}

impl From<BlockCovariance> for CovarianceJson {
    fn from(d: BlockCovariance) -> Self {
        CovarianceJson {
            d1: d.d1(),
            d2: d.d2(),
            epsilon: d.epsilon(),
            d11: matrix_to_json(d.d11()),
            d12: matrix_to_json(d.d12()),
            d21: matrix_to_json(d.d21()),
            d22: matrix_to_json(d.d22()),
        }
    }
}

impl TryFrom<CovarianceJson> for BlockCovariance {
    type Error = String;

    fn try_from(j: CovarianceJson) -> Result<Self, String> {
        let d11 = matrix_from_json("D11", &j.d11, j.d1, j.d1)?;
        let d12 = matrix_from_json("D12", &j.d12, j.d1, j.d2)?;
        let d21 = matrix_from_json("D21", &j.d21, j.d2, j.d1)?;
        let d22 = matrix_from_json("D22", &j.d22, j.d2, j.d2)?;
        BlockCovariance::from_blocks(d11, d12, d21, d22, j.epsilon).map_err(|e| e.to_string())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    #[serde(rename = "U1")]
    pub u1: OperatorJson,
    #[serde(rename = "U2")]
    pub u2: OperatorJson,
}

impl From<UnitaryChannel> for ChannelJson {
    fn from(ch: UnitaryChannel) -> Self {
        let op = |m: &CMatrix| OperatorJson { rows: m.nrows(), cols: m.ncols(), entries: matrix_to_json(m) };
        ChannelJson { u1: op(ch.u1()), u2: op(ch.u2()) }
    }
}

impl TryFrom<ChannelJson> for UnitaryChannel {
    type Error = String;

    fn try_from(j: ChannelJson) -> Result<Self, String> {
        let u1 = Operator::try_from(j.u1).map_err(|e| format!("U1.{e}"))?;
        let u2 = Operator::try_from(j.u2).map_err(|e| format!("U2.{e}"))?;
        UnitaryChannel::new(u1.into_matrix(), u2.into_matrix()).map_err(|e| e.to_string())
    }
}

fn default_hbar() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianJson {
    Local {
        #[serde(rename = "H1")]
        h1: OperatorJson,
        #[serde(rename = "H2")]
        h2: OperatorJson,
        #[serde(default = "default_hbar")]
        hbar: f64,
    },
    Joint {
        #[serde(rename = "H")]
        h: OperatorJson,
        d1: usize,
        d2: usize,
        #[serde(default = "default_hbar")]
        hbar: f64,
    },
}

impl From<Hamiltonian> for HamiltonianJson {
    fn from(h: Hamiltonian) -> Self {
        HamiltonianJson::Local { h1: h.h1().clone().into(), h2: h.h2().clone().into(), hbar: h.hbar() }
    }
}

impl TryFrom<HamiltonianJson> for Hamiltonian {
    type Error = String;

    fn try_from(j: HamiltonianJson) -> Result<Self, String> {
        match j {
            HamiltonianJson::Local { h1, h2, hbar } => {
                let h1 = Operator::try_from(h1).map_err(|e| format!("H1.{e}"))?;
                let h2 = Operator::try_from(h2).map_err(|e| format!("H2.{e}"))?;
                Hamiltonian::new(h1, h2, hbar).map_err(|e| e.to_string())
            }
            HamiltonianJson::Joint { h, d1, d2, hbar } => {
                let h = Operator::try_from(h).map_err(|e| format!("H.{e}"))?;
                Hamiltonian::from_joint(&h, d1, d2, hbar).map_err(|e| e.to_string())
            }
        }
    }
}

macro_rules! serde_via {
    ($ty:ty, $json:ty) => {
        impl Serialize for $ty {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                <$json>::from(self.clone()).serialize(s)
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let j = <$json>::deserialize(d)?;
                <$ty>::try_from(j).map_err(serde::de::Error::custom)
            }
        }
    };
}

serde_via!(BipartiteState, StateJson);
serde_via!(Operator, OperatorJson);
serde_via!(BlockCovariance, CovarianceJson);
serde_via!(UnitaryChannel, ChannelJson);
serde_via!(Hamiltonian, HamiltonianJson);

/// Serializes with object keys in sorted order.
pub fn to_sorted_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string_pretty(&v)
}
