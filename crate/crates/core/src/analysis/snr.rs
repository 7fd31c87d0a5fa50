use serde::{Deserialize, Serialize};

use super::error_model::NoiseModelParams;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub n_cl: u32,
    pub mean_a: f64,
    pub mean_b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// `mean_b - mean_a`; negative when halving the infidelity lowers the cost.
    pub delta_epsilon: f64,
    /// `|delta_epsilon|`.
    pub signal: f64,
    /// Average of `sigma_a` and `sigma_b`.
    pub noise: f64,
    pub snr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrScan {
    pub f_a: f64,
    pub f_b: f64,
    pub points: Vec<SnrPoint>,
    pub argmax_n_cl: u32,
    pub max_snr: f64,
}

impl SnrScan {
    pub(crate) fn from_points(f_a: f64, points: Vec<SnrPoint>) -> Self {
        let best = points
            .iter()
            .max_by(|a, b| a.snr.total_cmp(&b.snr))
            .cloned();
        SnrScan {
            f_a,
            f_b: halved_infidelity(f_a),
            argmax_n_cl: best.as_ref().map_or(0, |p| p.n_cl),
            max_snr: best.map_or(0.0, |p| p.snr),
            points,
        }
    }
}

pub fn halved_infidelity(f_a: f64) -> f64 {
    0.5 + 0.5 * f_a
}

/// Analytic signal and noise of the restless cost for a halving of the
/// Clifford infidelity from `1 - f_a`.
pub fn snr_scan(f_a: f64, grid: &[u32], params: &NoiseModelParams) -> Result<SnrScan> {
    if !(f_a > 0.5 && f_a <= 1.0) {
        return Err(Error::invalid("f_a", format!("must lie in (0.5, 1], got {f_a}")));
    }
    if grid.is_empty() {
        return Err(Error::Empty("n_cl grid"));
    }
    params.validate()?;
    let f_b = halved_infidelity(f_a);
    let (model_a, model_b) = if f_a == 1.0 {
        // Degenerate: both fidelities coincide, so the signal vanishes.
        (params.clone(), params.clone())
    } else {
        (params.with_clifford_error(1.0 - f_a)?, params.with_clifford_error(1.0 - f_b)?)
    };

    let points = grid
        .iter()
        .map(|&n| {
            let (mean_a, var_a) = model_a.epsilon_mean_and_var(f64::from(n));
            let (mean_b, var_b) = model_b.epsilon_mean_and_var(f64::from(n));
            let delta = mean_b - mean_a;
            let (sigma_a, sigma_b) = (var_a.sqrt(), var_b.sqrt());
            let noise = 0.5 * (sigma_a + sigma_b);
            SnrPoint {
                n_cl: n,
                mean_a,
                mean_b,
                sigma_a,
                sigma_b,
                delta_epsilon: delta,
                signal: delta.abs(),
                noise,
                snr: if noise > 0.0 { delta.abs() / noise } else { 0.0 },
            }
        })
        .collect();
    Ok(SnrScan::from_points(f_a, points))
}
