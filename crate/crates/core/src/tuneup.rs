//! Two-step closed-loop pulse calibration: a coarse Nelder-Mead search on
//! short sequences, then a fine search on long ones, every cost evaluation
//! being a fresh simulated acquisition.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::analysis::RbFit;
use crate::error::{Error, Result};
use crate::experiments::{rb_curve, SimContext, SCORING_LENGTHS};
use crate::optimize::{minimize, Coefficients, OptimizerConfig, ShotNoise};
use crate::seeds::{derive_seed, purpose};
use crate::shots::Mode;
use crate::transmon::PulseParams;

/// Fixed per-evaluation costs outside the acquisition itself, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overheads {
    pub settings: f64,
    pub processing: f64,
    pub misc: f64,
}

impl Overheads {
    /// Streamlined pipeline: on-board averaging and fast parameter upload.
    pub fn improved() -> Self {
        Overheads {
            settings: 1e-3,
            processing: 1e-3,
            misc: 40e-3,
        }
    }

    pub fn baseline() -> Self {
        Overheads {
            settings: 0.09,
            processing: 0.23,
            misc: 0.06,
        }
    }

    pub fn total(&self) -> f64 {
        self.settings + self.processing + self.misc
    }
}

/// One stage of the tuneup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageSettings {
    pub n_cliffords: usize,
    /// Amplitude steps relative to the nominal optimum.
    pub rel_step_a_g: f64,
    pub rel_step_a_d: f64,
    /// Detuning step, Hz.
    pub step_f: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneupSettings {
    pub coarse: StageSettings,
    pub fine: StageSettings,
    pub max_evaluations_per_stage: usize,
    pub cost_spread_tol: f64,
    /// Per-parameter simplex extent at convergence, as a fraction of the fine steps.
    pub extent_fraction: f64,
    pub coefficients: Coefficients,
    /// Binomial standard errors of cost spread treated as converged; 0 disables.
    pub noise_sigmas: f64,
    pub overheads: Overheads,
    /// Repetitions per length of the closing conventional RB.
    pub scoring_reps: usize,
}

impl Default for TuneupSettings {
    fn default() -> Self {
        TuneupSettings {
            coarse: StageSettings {
                n_cliffords: 80,
                rel_step_a_g: -0.03,
                rel_step_a_d: -0.25,
                step_f: 100e3,
            },
            fine: StageSettings {
                n_cliffords: 300,
                rel_step_a_g: -0.01,
                rel_step_a_d: -0.08,
                step_f: 50e3,
            },
            max_evaluations_per_stage: 500,
            cost_spread_tol: 1e-2,
            extent_fraction: 0.5,
            coefficients: Coefficients::default(),
            noise_sigmas: 2.0,
            overheads: Overheads::improved(),
            scoring_reps: 20,
        }
    }
}

impl TuneupSettings {
    fn steps(&self, stage: &StageSettings, nominal: &PulseParams, n_params: usize) -> Vec<f64> {
        let mut s = vec![stage.rel_step_a_g * nominal.a_g, stage.rel_step_a_d * nominal.a_d];
        if n_params == 3 {
            s.push(stage.step_f);
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub iteration: usize,
    pub stage: u8,
    pub params: PulseParams,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneupReport {
    pub mode: Mode,
    pub n_params: usize,
    pub start: PulseParams,
    pub final_params: PulseParams,
    pub final_cost: f64,
    pub trajectory: Vec<TrajectoryRow>,
    /// Cost evaluations over both stages.
    pub n_iterations: usize,
    /// Index of the first fine-stage evaluation.
    pub step_boundary: usize,
    pub converged: [bool; 2],
    /// Acquisition plus overheads, seconds.
    pub simulated_time: f64,
    pub crb: Option<RbFit>,
}

impl TuneupReport {
    pub fn final_f_cl(&self) -> Option<f64> {
        self.crb.as_ref().map(|f| f.f_cl)
    }

    /// `iteration, stage, a_g, a_d[, f_detuning], epsilon`.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["iteration", "stage", "a_g", "a_d"];
        if self.n_params == 3 {
            header.push("f_detuning");
        }
        header.push("epsilon");
        w.write_record(&header)?;
        for r in &self.trajectory {
            let mut rec = vec![
                r.iteration.to_string(),
                r.stage.to_string(),
                r.params.a_g.to_string(),
                r.params.a_d.to_string(),
            ];
            if self.n_params == 3 {
                rec.push(r.params.f_detuning.to_string());
            }
            rec.push(r.epsilon.to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn to_params(x: &[f64], fixed_f: f64) -> PulseParams {
    PulseParams {
        a_g: x[0],
        a_d: x[1],
        f_detuning: x.get(2).copied().unwrap_or(fixed_f),
    }
}

/// Runs both stages from `start` and scores the result with conventional RB.
/// `seed` keys every acquisition of the run.
pub fn two_step_tuneup(
    ctx: &SimContext,
    settings: &TuneupSettings,
    start: PulseParams,
    mode: Mode,
    n_params: usize,
    seed: u64,
) -> Result<TuneupReport> {
    ctx.validate()?;
    start.validate()?;
    if !(n_params == 2 || n_params == 3) {
        return Err(Error::invalid("n_params", format!("must be 2 or 3, got {n_params}")));
    }
    let nominal = ctx.physics.opt;
    let fine_steps = settings.steps(&settings.fine, &nominal, n_params);
    let extent_tol: Vec<f64> = fine_steps.iter().map(|s| settings.extent_fraction * s.abs()).collect();

    let mut x = vec![start.a_g, start.a_d];
    if n_params == 3 {
        x.push(start.f_detuning);
    }
    let mut trajectory = Vec::new();
    let mut converged = [false; 2];
    let mut simulated_time = 0.0;
    let mut step_boundary = 0;
    let mut final_cost = f64::NAN;

    for (k, stage) in [&settings.coarse, &settings.fine].into_iter().enumerate() {
        let seqs = ctx.sequences(stage.n_cliffords, mode)?;
        let cfg = OptimizerConfig {
            initial_point: x.clone(),
            initial_steps: settings.steps(stage, &nominal, n_params),
            max_evaluations: settings.max_evaluations_per_stage,
            cost_spread_tol: settings.cost_spread_tol,
            extent_tol: extent_tol.clone(),
            coefficients: settings.coefficients,
            shot_noise: (settings.noise_sigmas > 0.0).then_some(ShotNoise {
                shots: ctx.n_shots as u64,
                sigmas: settings.noise_sigmas,
            }),
        };
        let offset = trajectory.len();
        // Each evaluation is a fresh acquisition, even at a repeated point.
        let mut counter = 0u64;
        let cost = |v: &[f64]| -> Result<f64> {
            counter += 1;
            let p = to_params(v, start.f_detuning);
            if !(p.a_g > 0.0) {
                // Not a settable pulse; report the worst possible cost.
                return Ok(1.0);
            }
            let s = derive_seed(seed, purpose::TUNEUP, ((k as u64) << 32) | counter);
            Ok(ctx.measure(&seqs, &p, mode, s)?.epsilon)
        };
        let r = minimize(cost, &cfg)?;
        if k == 1 {
            step_boundary = offset;
        }
        for e in &r.trajectory {
            trajectory.push(TrajectoryRow {
                iteration: offset + e.index,
                stage: k as u8 + 1,
                params: to_params(&e.params, start.f_detuning),
                epsilon: e.cost,
            });
        }
        simulated_time += r.n_evaluations() as f64 * (ctx.acquisition_time(stage.n_cliffords, mode) + settings.overheads.total());
        converged[k] = r.converged;
        x = r.best_point;
        final_cost = r.best_cost;
    }

    let final_params = to_params(&x, start.f_detuning);
    let crb = if settings.scoring_reps > 0 {
        let curve = rb_curve(
            ctx,
            &final_params,
            Mode::Conventional,
            &SCORING_LENGTHS,
            settings.scoring_reps,
            derive_seed(seed, purpose::BENCHMARK, 0),
        )?;
        curve.fit
    } else {
        None
    };
    Ok(TuneupReport {
        mode,
        n_params,
        start,
        final_params,
        final_cost,
        n_iterations: trajectory.len(),
        trajectory,
        step_boundary,
        converged,
        simulated_time,
        crb,
    })
}

/// The four standard starting points: amplitude 6% high or low, derivative
/// amplitude halved or doubled.
pub fn standard_starts(nominal: &PulseParams) -> [PulseParams; 4] {
    let mk = |g: f64, d: f64| PulseParams {
        a_g: nominal.a_g * g,
        a_d: nominal.a_d * d,
        f_detuning: nominal.f_detuning,
    };
    [mk(1.06, 2.0), mk(1.06, 0.5), mk(0.94, 2.0), mk(0.94, 0.5)]
}

/// Time-per-iteration breakdown for one pipeline and mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingBar {
    pub mode: Mode,
    pub pipeline: String,
    pub settings: f64,
    pub acquire: f64,
    pub processing: f64,
    pub misc: f64,
    pub total: f64,
}

pub fn timing_breakdown(ctx: &SimContext, n_cliffords: usize) -> Vec<TimingBar> {
    let mut out = Vec::new();
    for (name, o) in [("baseline", Overheads::baseline()), ("improved", Overheads::improved())] {
        for mode in [Mode::Conventional, Mode::Restless] {
            let acquire = ctx.acquisition_time(n_cliffords, mode);
            out.push(TimingBar {
                mode,
                pipeline: name.to_owned(),
                settings: o.settings,
                acquire,
                processing: o.processing,
                misc: o.misc,
                total: acquire + o.total(),
            });
        }
    }
    out
}
