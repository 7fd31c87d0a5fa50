//! Closed-form error-rate model of a restless RB experiment.
//!
//! A single shot errs if the SPAM channel and the Clifford string together
//! produce an odd number of flips. The model tracks which state the qubit was
//! measured in, because relaxation makes the SPAM error depend on it, and
//! propagates quasi-static T1 fluctuations into the variance of the cost.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_probability, Error, Result};
use crate::transmon::Timings;

/// `a + b - 2ab`: probability that exactly one of two independent flips occurs.
pub fn prob_add(a: f64, b: f64) -> Result<f64> {
    ensure_probability("a", a)?;
    ensure_probability("b", b)?;
    Ok(a + b - 2.0 * a * b)
}

/// `k`-fold repeated [`prob_add`] of `p` with itself, in closed form.
pub fn prob_mult(k: u32, p: f64) -> Result<f64> {
    ensure_probability("p", p)?;
    Ok(sequence_flip_probability(p, f64::from(k)))
}

/// `½[1 - (1 - 2p)^n]`, the odd-flip probability after `n` Cliffords.
pub fn sequence_flip_probability(p_c: f64, n_cl: f64) -> f64 {
    0.5 * (1.0 - (1.0 - 2.0 * p_c).powf(n_cl))
}

/// Error rate of one shot with SPAM error `p_s` and per-Clifford error `p_c`.
pub fn error_rate(p_s: f64, p_c: f64, n_cl: f64) -> f64 {
    p_s + sequence_flip_probability(p_c, n_cl) * (1.0 - 2.0 * p_s)
}

/// SPAM errors when the previous measurement left the qubit in |0> or |1>.
pub fn spam_probs(t1: f64, timings: &Timings, p_s_c: f64) -> (f64, f64) {
    let decay_b = (-timings.tau_b() / t1).exp();
    let decay_a = (-timings.tau_a() / t1).exp();
    (p_s_c + (1.0 - decay_b), p_s_c + (1.0 - decay_a) * decay_b)
}

/// Steady-state error rate of the restless chain with state-dependent error
/// probabilities `p_e0` (after reading 0) and `p_e1` (after reading 1).
pub fn asymmetric_error_rate(p_e0: f64, p_e1: f64) -> Result<f64> {
    ensure_probability("p_e0", p_e0)?;
    ensure_probability("p_e1", p_e1)?;
    let denom = (1.0 - p_e0) + (1.0 - p_e1);
    if denom <= 0.0 {
        return Err(Error::invalid("p_e0, p_e1", "both equal to one; steady state undefined"));
    }
    Ok(asym_unchecked(p_e0, p_e1))
}

fn asym_unchecked(p_e0: f64, p_e1: f64) -> f64 {
    (p_e0 * (1.0 - p_e1) + p_e1 * (1.0 - p_e0)) / ((1.0 - p_e0) + (1.0 - p_e1))
}

/// Average Clifford fidelity when relaxation during the gates is the only error.
pub fn t1_limit_fidelity(t1: f64, tau_c: f64) -> f64 {
    (3.0 + 2.0 * (-tau_c / (2.0 * t1)).exp() + (-tau_c / t1).exp()) / 6.0
}

fn t1_limit_fidelity_dt1(t1: f64, tau_c: f64) -> f64 {
    tau_c / (6.0 * t1 * t1) * ((-tau_c / (2.0 * t1)).exp() + (-tau_c / t1).exp())
}

/// Inputs of the restless noise model. `p_pulse` is the relaxation-independent
/// part of the per-Clifford error; the rest follows from T1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModelParams {
    pub p_pulse: f64,
    pub p_s_c: f64,
    pub t1_mean: f64,
    pub t1_sigma: f64,
    pub timings: Timings,
    pub n_shots: u64,
}

impl NoiseModelParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("p_pulse", self.p_pulse)?;
        ensure_probability("p_s_c", self.p_s_c)?;
        if !(self.t1_mean > 0.0) {
            return Err(Error::invalid("t1_mean", "must be positive"));
        }
        if !(self.t1_sigma >= 0.0) {
            return Err(Error::invalid("t1_sigma", "must be non-negative"));
        }
        if self.n_shots == 0 {
            return Err(Error::invalid("n_shots", "must be positive"));
        }
        self.timings.validate()
    }

    /// Same parameters with `p_pulse` chosen so that the total per-Clifford
    /// error at `t1_mean` equals `p_c`.
    pub fn with_clifford_error(&self, p_c: f64) -> Result<Self> {
        ensure_probability("p_c", p_c)?;
        let p_pulse = p_c - self.t1_clifford_error(self.t1_mean);
        if p_pulse < -1e-15 {
            return Err(Error::invalid(
                "p_c",
                format!("{p_c} is below the relaxation limit {:.3e}", p_c - p_pulse),
            ));
        }
        Ok(NoiseModelParams {
            p_pulse: p_pulse.max(0.0),
            ..self.clone()
        })
    }

    pub fn t1_clifford_error(&self, t1: f64) -> f64 {
        1.0 - t1_limit_fidelity(t1, self.timings.tau_cl)
    }

    pub fn clifford_error(&self, t1: f64) -> f64 {
        self.p_pulse + self.t1_clifford_error(t1)
    }

    /// Mean restless error fraction at a fixed T1.
    pub fn error_rate_at(&self, n_cl: f64, t1: f64) -> f64 {
        let p_c = self.clifford_error(t1);
        let (ps0, ps1) = spam_probs(t1, &self.timings, self.p_s_c);
        asym_unchecked(error_rate(ps0, p_c, n_cl), error_rate(ps1, p_c, n_cl))
    }

    /// Chain rule for `d p_e / d T1` through both SPAM and Clifford errors.
    pub fn error_rate_dt1(&self, n_cl: f64, t1: f64) -> f64 {
        let tau_a = self.timings.tau_a();
        let tau_b = self.timings.tau_b();
        let p_c = self.clifford_error(t1);
        let (ps0, ps1) = spam_probs(t1, &self.timings, self.p_s_c);
        let pe0 = error_rate(ps0, p_c, n_cl);
        let pe1 = error_rate(ps1, p_c, n_cl);

        // Partials of the steady-state quotient.
        let num = pe0 * (1.0 - pe1) + pe1 * (1.0 - pe0);
        let den = (1.0 - pe0) + (1.0 - pe1);
        let dpe_dpe0 = ((1.0 - 2.0 * pe1) * den + num) / (den * den);
        let dpe_dpe1 = ((1.0 - 2.0 * pe0) * den + num) / (den * den);

        // Partials of each conditional error rate.
        let dpej_dps = (1.0 - 2.0 * p_c).powf(n_cl);
        let seq_slope = if n_cl == 0.0 {
            0.0
        } else {
            n_cl * (1.0 - 2.0 * p_c).powf(n_cl - 1.0)
        };
        let dpe0_dpc = seq_slope * (1.0 - 2.0 * ps0);
        let dpe1_dpc = seq_slope * (1.0 - 2.0 * ps1);

        let eb = (-tau_b / t1).exp();
        let eab = (-(tau_a + tau_b) / t1).exp();
        let dps0_dt1 = -tau_b / (t1 * t1) * eb;
        let dps1_dt1 = tau_b / (t1 * t1) * eb - (tau_a + tau_b) / (t1 * t1) * eab;
        let dpc_dt1 = -t1_limit_fidelity_dt1(t1, self.timings.tau_cl);

        dpe_dpe0 * (dpej_dps * dps0_dt1 + dpe0_dpc * dpc_dt1) + dpe_dpe1 * (dpej_dps * dps1_dt1 + dpe1_dpc * dpc_dt1)
    }

    /// Mean and variance of the restless cost at `n_cl`, with T1 fluctuations
    /// propagated linearly through the derivative above.
    pub fn epsilon_mean_and_var(&self, n_cl: f64) -> (f64, f64) {
        let mean = self.error_rate_at(n_cl, self.t1_mean);
        let slope = self.error_rate_dt1(n_cl, self.t1_mean);
        let var_pe = slope * slope * self.t1_sigma * self.t1_sigma;
        let n = self.n_shots as f64;
        (mean, mean * (1.0 - mean) / n + (n - 1.0) / n * var_pe)
    }

    /// Binomial-only variance, i.e. the model without T1 fluctuations.
    pub fn binomial_variance(&self, n_cl: f64) -> f64 {
        let mean = self.error_rate_at(n_cl, self.t1_mean);
        mean * (1.0 - mean) / self.n_shots as f64
    }
}

/// Free-function form: `p_c` is the total per-Clifford error at `t1_mean`.
pub fn epsilon_mean_and_var(params: &NoiseModelParams, p_c: f64, n_cl: f64) -> Result<(f64, f64)> {
    Ok(params.with_clifford_error(p_c)?.epsilon_mean_and_var(n_cl))
}
