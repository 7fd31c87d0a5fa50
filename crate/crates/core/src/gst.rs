//! Average Clifford fidelity from tomographic process matrices of the
//! primitive gates.
//!
//! Process matrices are Pauli transfer matrices in the normalized basis
//! `{I, X, Y, Z}/sqrt(2)`, so a pure state with Bloch vector `n` has the unit
//! density vector `(1, n)/sqrt(2)`.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::clifford::{group, CliffordElement, GateLabel, Rotation};
use crate::error::{Error, Result};

pub type Ptm = [[f64; 4]; 4];

/// Labels a gate set must provide.
pub const GATESET_LABELS: [GateLabel; 5] = [
    GateLabel::I,
    GateLabel::X90,
    GateLabel::Y90,
    GateLabel::X180,
    GateLabel::Y180,
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessMatrix {
    pub label: String,
    pub ptm: Ptm,
}

impl ProcessMatrix {
    pub fn identity(label: impl Into<String>) -> Self {
        ProcessMatrix {
            label: label.into(),
            ptm: from_rotation(&crate::clifford::IDENTITY_ROTATION),
        }
    }

    /// `self` applied after `earlier`.
    pub fn then_after(&self, earlier: &ProcessMatrix) -> Ptm {
        mat4_mul(&self.ptm, &earlier.ptm)
    }

    /// Ideal matrix with its Bloch block scaled by `1 - q`.
    pub fn depolarized(&self, q: f64) -> Self {
        let mut ptm = self.ptm;
        for row in ptm.iter_mut().skip(1) {
            for v in row.iter_mut() {
                *v *= 1.0 - q;
            }
        }
        ProcessMatrix {
            label: self.label.clone(),
            ptm,
        }
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        (self.ptm[0][0] - 1.0).abs() <= tol && self.ptm[0][1..].iter().all(|v| v.abs() <= tol)
    }
}

fn from_rotation(r: &Rotation) -> Ptm {
    let mut m = [[0.0; 4]; 4];
    m[0][0] = 1.0;
    for i in 0..3 {
        for j in 0..3 {
            m[i + 1][j + 1] = f64::from(r[i][j]);
        }
    }
    m
}

fn mat4_mul(a: &Ptm, b: &Ptm) -> Ptm {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose4(a: &Ptm) -> Ptm {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

fn mat4_vec(a: &Ptm, v: &[f64; 4]) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (i, o) in out.iter_mut().enumerate() {
        *o = (0..4).map(|k| a[i][k] * v[k]).sum();
    }
    out
}

pub fn ideal_ptm(label: GateLabel) -> ProcessMatrix {
    ProcessMatrix {
        label: label.as_str().to_owned(),
        ptm: from_rotation(&label.rotation()),
    }
}

pub fn ideal_clifford_ptm(c: CliffordElement) -> ProcessMatrix {
    ProcessMatrix {
        label: format!("C{}", c.index),
        ptm: from_rotation(&c.rotation),
    }
}

/// The five measured primitive gates.
#[derive(Clone, Debug, PartialEq)]
pub struct GateSet {
    gates: BTreeMap<GateLabel, ProcessMatrix>,
}

impl GateSet {
    pub fn new(gates: impl IntoIterator<Item = (GateLabel, Ptm)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (label, ptm) in gates {
            if !GATESET_LABELS.contains(&label) {
                return Err(Error::Format(format!("unexpected gate {label} in gate set")));
            }
            if ptm.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Format(format!("non-finite entry in {label}")));
            }
            let pm = ProcessMatrix {
                label: label.as_str().to_owned(),
                ptm,
            };
            if map.insert(label, pm).is_some() {
                return Err(Error::Format(format!("gate {label} given twice")));
            }
        }
        if let Some(missing) = GATESET_LABELS.iter().find(|l| !map.contains_key(l)) {
            return Err(Error::Format(format!("gate set lacks {missing}")));
        }
        Ok(GateSet { gates: map })
    }

    pub fn ideal() -> Self {
        GateSet::new(GATESET_LABELS.map(|l| (l, ideal_ptm(l).ptm))).expect("complete")
    }

    /// Every gate depolarized by the same `q`.
    pub fn depolarized(q: f64) -> Self {
        GateSet::new(GATESET_LABELS.map(|l| (l, ideal_ptm(l).depolarized(q).ptm))).expect("complete")
    }

    pub fn get(&self, label: GateLabel) -> Option<&ProcessMatrix> {
        self.gates.get(&label)
    }

    /// Matrix used for `label` inside a Clifford. A negative rotation was not
    /// characterised, so it borrows its positive partner's error channel:
    /// `measured(+) ideal(+)^T ideal(-)`.
    pub fn effective(&self, label: GateLabel) -> Ptm {
        let pos = label.positive();
        let measured = &self.gates[&pos].ptm;
        if pos == label {
            return *measured;
        }
        let error = mat4_mul(measured, &transpose4(&ideal_ptm(pos).ptm));
        mat4_mul(&error, &ideal_ptm(label).ptm)
    }

    /// JSON object mapping each label to 16 row-major entries.
    pub fn from_json_reader<R: Read>(r: R) -> Result<Self> {
        let raw: BTreeMap<String, Vec<f64>> = serde_json::from_reader(r)?;
        let mut gates = Vec::new();
        for (name, vals) in raw {
            let label = GATESET_LABELS
                .into_iter()
                .find(|l| l.as_str() == name)
                .ok_or_else(|| Error::Format(format!("unknown gate label {name:?}")))?;
            if vals.len() != 16 {
                return Err(Error::Format(format!("{name} needs 16 entries, got {}", vals.len())));
            }
            let mut ptm = [[0.0; 4]; 4];
            for (i, v) in vals.into_iter().enumerate() {
                ptm[i / 4][i % 4] = v;
            }
            gates.push((label, ptm));
        }
        GateSet::new(gates)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let map: BTreeMap<&str, Vec<f64>> = self
            .gates
            .iter()
            .map(|(l, pm)| (l.as_str(), pm.ptm.iter().flatten().copied().collect()))
            .collect();
        serde_json::to_value(map).expect("plain map")
    }
}

/// The 24 Clifford process matrices composed from the measured gates along
/// the decomposition table; see [`GateSet::effective`] for negative rotations.
pub fn clifford_ptms(gs: &GateSet) -> Vec<ProcessMatrix> {
    let g = group();
    g.elements()
        .iter()
        .map(|&c| {
            let ptm = g
                .decompose(c)
                .iter()
                .fold(from_rotation(&crate::clifford::IDENTITY_ROTATION), |acc, &gate| {
                    mat4_mul(&gs.effective(gate), &acc)
                });
            ProcessMatrix {
                label: format!("C{}", c.index),
                ptm,
            }
        })
        .collect()
}

/// The six Bloch poles as `(1, ±e_k)`; the unit density vectors are these
/// divided by `sqrt(2)`.
pub fn pole_states() -> [[f64; 4]; 6] {
    let mut out = [[0.0; 4]; 6];
    for (i, s) in out.iter_mut().enumerate() {
        s[0] = 1.0;
        s[1 + i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
    }
    out
}

/// `<<rho_t|G|rho_i>>` for unit density vectors, with the `1/2` of the
/// normalization pulled out so ideal overlaps are exactly one.
fn overlap(ideal: &Ptm, measured: &Ptm, pole: &[f64; 4]) -> f64 {
    let target = mat4_vec(ideal, pole);
    let out = mat4_vec(measured, pole);
    0.5 * target.iter().zip(&out).map(|(a, b)| a * b).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordFidelity {
    /// Per element; `None` where some overlap was not positive.
    pub p_n: Vec<Option<f64>>,
    pub p_cl: f64,
    pub f_cl: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Geometric mean over the six poles of the overlap between the measured and
/// ideal output, per element; then the geometric mean over elements.
pub fn clifford_fidelity(gs: &GateSet) -> Result<CliffordFidelity> {
    let g = group();
    let poles = pole_states();
    let measured = clifford_ptms(gs);
    let mut p_n = Vec::with_capacity(measured.len());
    let mut warnings = Vec::new();
    for (c, pm) in g.elements().iter().zip(&measured) {
        let ideal = from_rotation(&c.rotation);
        let mut log_sum = 0.0;
        let mut bad = None;
        for (k, rho) in poles.iter().enumerate() {
            let v = overlap(&ideal, &pm.ptm, rho);
            if v <= 0.0 {
                bad = Some((k, v));
                break;
            }
            log_sum += v.ln();
        }
        match bad {
            Some((k, v)) => {
                warnings.push(format!("{}: overlap {v:.3e} for pole {k} is not positive; excluded", pm.label));
                p_n.push(None);
            }
            None => p_n.push(Some((log_sum / poles.len() as f64).exp())),
        }
    }
    let good: Vec<f64> = p_n.iter().flatten().copied().collect();
    if good.is_empty() {
        return Err(Error::FitFailed("no Clifford has all overlaps positive".into()));
    }
    let p_cl = (good.iter().map(|p| p.ln()).sum::<f64>() / good.len() as f64).exp();
    Ok(CliffordFidelity {
        p_n,
        p_cl,
        f_cl: 0.5 + 0.5 * p_cl,
        warnings,
    })
}
