//! Analytic models: RB decay fitting, the relaxation fidelity limit, the
//! restless error-rate and noise model, and signal-to-noise scans.

mod error_model;
mod rb_fit;
mod snr;

use std::io::Write;

pub use error_model::{
    asymmetric_error_rate, epsilon_mean_and_var, error_rate, prob_add, prob_mult, sequence_flip_probability,
    spam_probs, t1_limit_fidelity, NoiseModelParams,
};
pub use rb_fit::{rb_fit, RbFit, RbPoint};
pub use snr::{halved_infidelity, snr_scan, SnrPoint, SnrScan};

use crate::error::Result;

/// Writes `(n_cl, mean, sigma)` rows of the noise model.
pub fn write_model_csv<W: Write>(out: W, params: &NoiseModelParams, grid: &[u32]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_cl", "mean", "sigma"])?;
    for &n in grid {
        let (mean, var) = params.epsilon_mean_and_var(f64::from(n));
        w.write_record([n.to_string(), mean.to_string(), var.sqrt().to_string()])?;
    }
    w.flush()?;
    Ok(())
}
