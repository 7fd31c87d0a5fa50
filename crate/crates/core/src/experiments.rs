//! Simulated acquisitions built on the transmon model: cost evaluations, RB
//! decay curves, Monte Carlo signal-to-noise scans and cost landscapes.
//!
//! Work is split over independent streams with seeds derived from the master
//! seed and the stream's index, so parallel results are identical to serial ones.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{halved_infidelity, rb_fit, t1_limit_fidelity, RbFit, RbPoint, SnrPoint, SnrScan};
use crate::clifford::{generate_sequence_set, CliffordSequence, NetOp};
use crate::cost::{epsilon, CostSample};
use crate::error::{Error, Result};
use crate::seeds::{derive_seed, purpose};
use crate::shots::Mode;
use crate::transmon::{run_stream, simulated_wallclock, PhysicsConfig, PulseParams, T1Fluctuation};

/// Physics plus acquisition settings shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimContext {
    pub physics: PhysicsConfig,
    /// Shots per cost evaluation.
    pub n_shots: usize,
    /// Distinct random sequences per evaluation.
    pub n_sequences: usize,
    pub master_seed: u64,
}

impl SimContext {
    pub fn new(physics: PhysicsConfig, master_seed: u64) -> Self {
        SimContext {
            physics,
            n_shots: 8000,
            n_sequences: 200,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.physics.validate()?;
        if self.n_shots < 2 {
            return Err(Error::invalid("n_shots", "need at least 2 shots"));
        }
        if self.n_sequences == 0 {
            return Err(Error::invalid("n_sequences", "need at least one sequence"));
        }
        Ok(())
    }

    /// The fixed sequence set used for every evaluation at this length and mode.
    pub fn sequences(&self, n_cliffords: usize, mode: Mode) -> Result<Vec<CliffordSequence>> {
        let net = match mode {
            Mode::Conventional => NetOp::Identity,
            Mode::Restless => NetOp::BitFlip,
        };
        let first = derive_seed(self.master_seed, purpose::SEQUENCES, n_cliffords as u64);
        generate_sequence_set(first, self.n_sequences, n_cliffords, net)
    }

    /// One acquisition of the mode's cost.
    pub fn measure(&self, seqs: &[CliffordSequence], params: &PulseParams, mode: Mode, stream_seed: u64) -> Result<CostSample> {
        let stream = run_stream(seqs, params, &self.physics, self.n_shots, mode, stream_seed)?;
        epsilon(&stream)
    }

    pub fn acquisition_time(&self, n_cliffords: usize, mode: Mode) -> f64 {
        simulated_wallclock(self.n_shots, n_cliffords, mode, &self.physics, self.physics.init_wait)
    }
}

/// Physics whose per-Clifford error at the optimum and mean T1 equals
/// `1 - f_cl`, with the pulse floor absorbing whatever relaxation leaves.
pub fn physics_with_fidelity(base: &PhysicsConfig, f_cl: f64) -> Result<PhysicsConfig> {
    let relax = 1.0 - t1_limit_fidelity(base.t1_mean, base.timings.tau_cl);
    let floor = (1.0 - f_cl) - relax;
    if floor < 0.0 {
        return Err(Error::invalid(
            "f_cl",
            format!("{f_cl} exceeds the relaxation limit {}", 1.0 - relax),
        ));
    }
    Ok(PhysicsConfig {
        p_pulse_floor: floor,
        ..base.clone()
    })
}

fn mean_and_stderr(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd, sd / n.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n_cl: usize,
    pub mean: f64,
    pub std: f64,
    pub stderr: f64,
    pub repetitions: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbCurve {
    pub mode: Mode,
    pub params: PulseParams,
    pub points: Vec<CurvePoint>,
    /// Fit of `1 - eps = A p^n + B`; `None` with `fit_error` set on failure.
    pub fit: Option<RbFit>,
    pub fit_error: Option<String>,
    pub simulated_time: f64,
}

/// Repeated acquisitions at each length and the exponential fit.
pub fn rb_curve(ctx: &SimContext, params: &PulseParams, mode: Mode, n_cl_list: &[usize], reps: usize, seed: u64) -> Result<RbCurve> {
    ctx.validate()?;
    if reps == 0 {
        return Err(Error::invalid("reps", "need at least one repetition"));
    }
    let sets = n_cl_list
        .iter()
        .map(|&n| ctx.sequences(n, mode))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..n_cl_list.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();
    let eps = jobs
        .par_iter()
        .map(|&(i, r)| {
            let s = derive_seed(seed, purpose::BENCHMARK, (i * reps + r) as u64);
            ctx.measure(&sets[i], params, mode, s).map(|c| c.epsilon)
        })
        .collect::<Result<Vec<f64>>>()?;

    let points: Vec<CurvePoint> = n_cl_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let (mean, std, stderr) = mean_and_stderr(&eps[i * reps..(i + 1) * reps]);
            CurvePoint {
                n_cl: n,
                mean,
                std,
                stderr,
                repetitions: reps,
            }
        })
        .collect();

    // Weights from the repetition scatter, floored by the binomial error so a
    // length with identical repetitions does not dominate.
    let fit_points: Vec<RbPoint> = points
        .iter()
        .map(|p| {
            let binom = (p.mean * (1.0 - p.mean)).max(1.0 / ctx.n_shots as f64) / (ctx.n_shots * reps) as f64;
            let var = if reps > 1 { (p.stderr * p.stderr).max(binom) } else { 1.0 };
            RbPoint {
                n_cl: p.n_cl as f64,
                epsilon: p.mean,
                weight: 1.0 / var,
            }
        })
        .collect();
    let (fit, fit_error) = match rb_fit(&fit_points) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let simulated_time = n_cl_list.iter().map(|&n| ctx.acquisition_time(n, mode) * reps as f64).sum();
    Ok(RbCurve {
        mode,
        params: *params,
        points,
        fit,
        fit_error,
        simulated_time,
    })
}

/// Conventional RB lengths used to score a tuned pulse.
pub const SCORING_LENGTHS: [usize; 7] = [1, 50, 100, 200, 400, 700, 1000];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSnrPoint {
    pub n_cl: usize,
    pub mean_a: f64,
    pub mean_b: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub snr: f64,
}

/// Restless cost statistics over repetitions, each with its own quasi-static
/// T1 draw, at fidelities `f_a` and halved infidelity.
pub fn monte_carlo_snr(ctx: &SimContext, f_a: f64, t1_sigma: f64, grid: &[usize], reps: usize, seed: u64) -> Result<Vec<McSnrPoint>> {
    if reps < 2 {
        return Err(Error::invalid("reps", "need at least two repetitions"));
    }
    let f_b = halved_infidelity(f_a);
    let base = PhysicsConfig {
        t1_fluctuation: T1Fluctuation::QuasiStatic { sigma: t1_sigma },
        ..ctx.physics.clone()
    };
    let phys = [physics_with_fidelity(&base, f_a)?, physics_with_fidelity(&base, f_b)?];
    let params = ctx.physics.opt;
    let sets = grid
        .iter()
        .map(|&n| ctx.sequences(n, Mode::Restless))
        .collect::<Result<Vec<_>>>()?;

    let jobs: Vec<(usize, usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..2).flat_map(move |k| (0..reps).map(move |r| (i, k, r))))
        .collect();
    let eps = jobs
        .par_iter()
        .map(|&(i, k, r)| {
            let c = SimContext {
                physics: phys[k].clone(),
                ..ctx.clone()
            };
            // Both fidelities share the repetition's stream seed, hence its T1 draw.
            let s = derive_seed(seed, purpose::SNR, (i * reps + r) as u64);
            c.measure(&sets[i], &params, Mode::Restless, s).map(|c| c.epsilon)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let a = &eps[(i * 2) * reps..(i * 2 + 1) * reps];
            let b = &eps[(i * 2 + 1) * reps..(i * 2 + 2) * reps];
            let (mean_a, sigma_a, _) = mean_and_stderr(a);
            let (mean_b, sigma_b, _) = mean_and_stderr(b);
            let noise = 0.5 * (sigma_a + sigma_b);
            McSnrPoint {
                n_cl: n,
                mean_a,
                mean_b,
                sigma_a,
                sigma_b,
                snr: if noise > 0.0 { (mean_b - mean_a).abs() / noise } else { 0.0 },
            }
        })
        .collect())
}

/// Converts Monte Carlo points to the analytic scan's shape.
pub fn to_snr_scan(f_a: f64, mc: &[McSnrPoint]) -> SnrScan {
    let pts = mc
        .iter()
        .map(|p| {
            let delta = p.mean_b - p.mean_a;
            SnrPoint {
                n_cl: p.n_cl as u32,
                mean_a: p.mean_a,
                mean_b: p.mean_b,
                sigma_a: p.sigma_a,
                sigma_b: p.sigma_b,
                delta_epsilon: delta,
                signal: delta.abs(),
                noise: 0.5 * (p.sigma_a + p.sigma_b),
                snr: p.snr,
            }
        })
        .collect();
    SnrScan::from_points(f_a, pts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandscapePoint {
    pub a_g: f64,
    pub a_d: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub mode: Mode,
    pub n_cl: usize,
    /// Row-major over `a_g`, then `a_d`.
    pub points: Vec<LandscapePoint>,
    pub argmin: usize,
    pub simulated_time: f64,
}

/// One acquisition per grid point at the configured detuning optimum.
pub fn landscape(ctx: &SimContext, a_g: &[f64], a_d: &[f64], n_cl: usize, mode: Mode, seed: u64) -> Result<Landscape> {
    ctx.validate()?;
    if a_g.is_empty() || a_d.is_empty() {
        return Err(Error::Empty("landscape grid"));
    }
    let seqs = ctx.sequences(n_cl, mode)?;
    let cells: Vec<(f64, f64)> = a_g.iter().flat_map(|&g| a_d.iter().map(move |&d| (g, d))).collect();
    let points = cells
        .par_iter()
        .enumerate()
        .map(|(i, &(g, d))| {
            let p = PulseParams {
                a_g: g,
                a_d: d,
                f_detuning: ctx.physics.opt.f_detuning,
            };
            let s = derive_seed(seed, purpose::LANDSCAPE, i as u64);
            ctx.measure(&seqs, &p, mode, s).map(|c| LandscapePoint {
                a_g: g,
                a_d: d,
                epsilon: c.epsilon,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.epsilon.total_cmp(&b.1.epsilon))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(Landscape {
        mode,
        n_cl,
        simulated_time: ctx.acquisition_time(n_cl, mode) * points.len() as f64,
        points,
        argmin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injected_fidelity_is_recovered() {
        let ctx = SimContext::new(physics_with_fidelity(&PhysicsConfig::default(), 0.999).unwrap(), 5);
        let ctx = SimContext {
            physics: PhysicsConfig {
                p_leak_floor: 0.0,
                ..ctx.physics
            },
            ..ctx
        };
        let c = rb_curve(&ctx, &ctx.physics.opt, Mode::Conventional, &SCORING_LENGTHS, 20, 1).unwrap();
        let fit = c.fit.unwrap();
        assert!((fit.f_cl - 0.999).abs() < 1e-4, "{}", fit.f_cl);
    }

    #[test]
    fn error_free_rb_is_flat_at_spam() {
        let mut phys = PhysicsConfig::ideal();
        phys.p_s_c = 0.02;
        let ctx = SimContext::new(phys, 1);
        let c = rb_curve(&ctx, &ctx.physics.opt, Mode::Conventional, &[1, 10, 100], 5, 2).unwrap();
        for p in &c.points {
            assert!((p.mean - 0.02).abs() < 0.005);
        }
        let fit = c.fit.unwrap();
        assert!((fit.offset + fit.amp - 0.98).abs() < 0.005);
    }

    #[test]
    fn parallel_results_are_reproducible() {
        let ctx = SimContext::new(PhysicsConfig::default(), 3);
        let a = rb_curve(&ctx, &ctx.physics.opt, Mode::Restless, &[5, 50, 100], 4, 9).unwrap();
        let b = rb_curve(&ctx, &ctx.physics.opt, Mode::Restless, &[5, 50, 100], 4, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fidelity_above_relaxation_limit_is_rejected() {
        assert!(physics_with_fidelity(&PhysicsConfig::default(), 0.99999).is_err());
    }
}
