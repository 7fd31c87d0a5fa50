//! Classical three-level Monte Carlo model of a transmon running RB
//! sequences with QND readout, either re-initialized every shot
//! (conventional) or carrying its state from shot to shot (restless).
//!
//! Randomized benchmarking twirls coherent errors into depolarizing noise,
//! so a shot only needs the parity of error flips accumulated over the
//! sequence, whether it leaked, and relaxation around the measurement.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::analysis::{sequence_flip_probability, t1_limit_fidelity};
use crate::clifford::{CliffordSequence, NetOp};
use crate::error::{ensure_finite, ensure_probability, Error, Result};
use crate::seeds::{derive_seed, purpose, rng_from_seed};
use crate::shots::{Mode, ShotStream};
use crate::t1_psd;

/// Durations in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Timings {
    /// Single pulse.
    pub tau_p: f64,
    /// Mean Clifford duration.
    pub tau_cl: f64,
    /// Measurement integration window.
    pub tau_m: f64,
    /// Readout plus resonator depletion.
    pub tau_ro: f64,
    /// Effective instant of the projective measurement inside the readout.
    /// Defaults to `4 tau_m / 7`.
    pub measurement_point: Option<f64>,
}

impl Default for Timings {
    fn default() -> Self {
        Timings {
            tau_p: 20e-9,
            tau_cl: 37.5e-9,
            tau_m: 1e-6,
            tau_ro: 4.25e-6,
            measurement_point: None,
        }
    }
}

impl Timings {
    /// Relaxation window before the effective measurement.
    pub fn tau_b(&self) -> f64 {
        self.measurement_point.unwrap_or(4.0 * self.tau_m / 7.0)
    }

    /// Relaxation window between the measurement and the next sequence.
    pub fn tau_a(&self) -> f64 {
        self.tau_ro - self.tau_b()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_p", self.tau_p),
            ("tau_cl", self.tau_cl),
            ("tau_m", self.tau_m),
            ("tau_ro", self.tau_ro),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be a positive time, got {v}")));
            }
        }
        let tb = self.tau_b();
        if !(tb >= 0.0 && tb <= self.tau_ro) {
            return Err(Error::invalid("measurement_point", format!("must lie in [0, tau_ro], got {tb}")));
        }
        Ok(())
    }
}

/// Tunable pulse knobs: Gaussian and derivative amplitudes and drive detuning (Hz).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseParams {
    pub a_g: f64,
    pub a_d: f64,
    #[serde(default)]
    pub f_detuning: f64,
}

impl PulseParams {
    pub fn validate(&self) -> Result<()> {
        ensure_finite("a_g", self.a_g)?;
        ensure_finite("a_d", self.a_d)?;
        ensure_finite("f_detuning", self.f_detuning)?;
        if self.a_g <= 0.0 {
            return Err(Error::invalid("a_g", "must be positive"));
        }
        Ok(())
    }
}

/// Quadratic sensitivities of the per-Clifford error to each knob.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Curvatures {
    pub c_g: f64,
    pub c_d: f64,
    /// Per Hz².
    pub c_f: f64,
}

/// How T1 varies over a stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum T1Fluctuation {
    /// Constant at `t1_mean`.
    None,
    /// One Gaussian draw per stream, truncated below at `t1_mean / 10`.
    QuasiStatic { sigma: f64 },
    /// Per-shot series with the configured power-law spectrum.
    PowerLaw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub t1_mean: f64,
    pub t1_fluctuation: T1Fluctuation,
    /// Power-law T1 spectrum `psd_alpha * f^psd_beta`, s²/Hz.
    pub psd_alpha: f64,
    pub psd_beta: f64,
    pub timings: Timings,
    /// Non-relaxation readout error; also corrupts the post-measurement state.
    pub p_s_c: f64,
    pub opt: PulseParams,
    pub curvatures: Curvatures,
    pub leak_curvature: f64,
    pub p_pulse_floor: f64,
    pub p_leak_floor: f64,
    /// Idle time used to initialize by relaxation in conventional mode.
    pub init_wait: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        PhysicsConfig {
            t1_mean: 21.4e-6,
            t1_fluctuation: T1Fluctuation::None,
            psd_alpha: 8.4e-13,
            psd_beta: -0.81,
            timings: Timings::default(),
            p_s_c: 0.006,
            opt: PulseParams {
                a_g: 1.0,
                a_d: 0.5,
                f_detuning: 0.0,
            },
            curvatures: Curvatures {
                c_g: 2.5,
                c_d: 0.02,
                c_f: 5e-14,
            },
            leak_curvature: 2e-3,
            p_pulse_floor: 3e-4,
            p_leak_floor: 1e-6,
            init_wait: 184.5e-6,
        }
    }
}

impl PhysicsConfig {
    /// Error-free qubit: no pulse error, no leakage, no relaxation, perfect readout.
    pub fn ideal() -> Self {
        PhysicsConfig {
            t1_mean: f64::INFINITY,
            p_s_c: 0.0,
            p_pulse_floor: 0.0,
            p_leak_floor: 0.0,
            curvatures: Curvatures {
                c_g: 0.0,
                c_d: 0.0,
                c_f: 0.0,
            },
            leak_curvature: 0.0,
            ..PhysicsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1_mean > 0.0) || self.t1_mean.is_nan() {
            return Err(Error::invalid("t1_mean", "must be positive"));
        }
        self.timings.validate()?;
        self.opt.validate()?;
        ensure_probability("p_s_c", self.p_s_c)?;
        ensure_probability("p_pulse_floor", self.p_pulse_floor)?;
        ensure_probability("p_leak_floor", self.p_leak_floor)?;
        for (name, v) in [
            ("curvatures.c_g", self.curvatures.c_g),
            ("curvatures.c_d", self.curvatures.c_d),
            ("curvatures.c_f", self.curvatures.c_f),
            ("leak_curvature", self.leak_curvature),
            ("init_wait", self.init_wait),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be finite and non-negative, got {v}")));
            }
        }
        match self.t1_fluctuation {
            T1Fluctuation::None => {}
            T1Fluctuation::QuasiStatic { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::invalid("t1_fluctuation.sigma", "must be finite and non-negative"));
                }
                if !self.t1_mean.is_finite() {
                    return Err(Error::invalid("t1_mean", "must be finite when T1 fluctuates"));
                }
            }
            T1Fluctuation::PowerLaw => {
                if !self.t1_mean.is_finite() {
                    return Err(Error::invalid("t1_mean", "must be finite when T1 fluctuates"));
                }
                if !(self.psd_alpha >= 0.0 && self.psd_alpha.is_finite()) {
                    return Err(Error::invalid("psd_alpha", "must be finite and non-negative"));
                }
                if !(self.psd_beta > -2.0 && self.psd_beta <= 0.0) {
                    return Err(Error::invalid("psd_beta", "must lie in (-2, 0]"));
                }
            }
        }
        Ok(())
    }

    /// Time between the starts of consecutive shots.
    pub fn shot_period(&self, n_cliffords: usize, mode: Mode) -> f64 {
        let base = self.timings.tau_ro + self.timings.tau_cl * n_cliffords as f64;
        match mode {
            Mode::Restless => base,
            Mode::Conventional => base + self.init_wait,
        }
    }
}

/// Per-Clifford error probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    /// Probability that one Clifford flips the computational state.
    pub p_flip: f64,
    /// Probability that one Clifford leaks the qubit to |2>.
    pub p_leak: f64,
}

/// Maps pulse settings and the current T1 to per-Clifford error probabilities.
pub fn error_map(p: &PulseParams, cfg: &PhysicsConfig, t1_now: f64) -> Result<ErrorRates> {
    ensure_finite("a_g", p.a_g)?;
    ensure_finite("a_d", p.a_d)?;
    ensure_finite("f_detuning", p.f_detuning)?;
    if !(t1_now > 0.0) || t1_now.is_nan() {
        return Err(Error::invalid("t1_now", format!("must be positive, got {t1_now}")));
    }
    let dg = p.a_g - cfg.opt.a_g;
    let dd = p.a_d - cfg.opt.a_d;
    let df = p.f_detuning - cfg.opt.f_detuning;
    let c = &cfg.curvatures;
    let relax = 1.0 - t1_limit_fidelity(t1_now, cfg.timings.tau_cl);
    let p_flip = cfg.p_pulse_floor + c.c_g * dg * dg + c.c_d * dd * dd + c.c_f * df * df + relax;
    let p_leak = cfg.p_leak_floor + cfg.leak_curvature * dd * dd;
    Ok(ErrorRates {
        p_flip: p_flip.clamp(0.0, 0.5),
        p_leak: p_leak.clamp(0.0, 1.0),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QubitState {
    level: u8,
}

impl QubitState {
    pub fn ground() -> Self {
        QubitState { level: 0 }
    }

    pub fn with_level(level: u8) -> Result<Self> {
        if level > 2 {
            return Err(Error::invalid("level", format!("must be 0, 1 or 2, got {level}")));
        }
        Ok(QubitState { level })
    }

    pub fn level(self) -> u8 {
        self.level
    }

    /// Runs `n` Cliffords whose ideal product is `net`. Leakage removes the
    /// qubit from the computational subspace, where gates no longer act.
    pub fn apply_sequence<R: Rng>(&mut self, n: usize, net: NetOp, rates: ErrorRates, rng: &mut R) {
        if self.level == 2 {
            return;
        }
        let n = n as i32;
        let leak = 1.0 - (1.0 - rates.p_leak).powi(n);
        if leak > 0.0 && rng.random::<f64>() < leak {
            self.level = 2;
            return;
        }
        let flip = sequence_flip_probability(rates.p_flip, f64::from(n));
        let odd = flip > 0.0 && rng.random::<f64>() < flip;
        if net.flips() != odd {
            self.level ^= 1;
        }
    }

    /// Relaxation for `dt`; |2> cascades through |1> at the same rate.
    pub fn decay<R: Rng>(&mut self, dt: f64, t1: f64, rng: &mut R) {
        if self.level == 0 || dt <= 0.0 || t1.is_infinite() {
            return;
        }
        let x = dt / t1;
        let stay = (-x).exp();
        let u = rng.random::<f64>();
        self.level = match self.level {
            1 => u8::from(u < stay),
            _ => {
                if u < stay {
                    2
                } else if u < stay + x * stay {
                    1
                } else {
                    0
                }
            }
        };
    }

    /// QND readout: |1> and |2> both read as 1. With probability `p_err`
    /// the outcome is wrong and the qubit is left in the reported state.
    pub fn measure<R: Rng>(&mut self, p_err: f64, rng: &mut R) -> bool {
        let mut outcome = self.level >= 1;
        if p_err > 0.0 && rng.random::<f64>() < p_err {
            outcome = !outcome;
            self.level = u8::from(outcome);
        }
        outcome
    }
}

fn expected_net(mode: Mode) -> NetOp {
    match mode {
        Mode::Conventional => NetOp::Identity,
        Mode::Restless => NetOp::BitFlip,
    }
}

/// Simulates `n_shots` consecutive shots, cycling through `seq_set`.
///
/// The stream's T1 process is seeded from `seed` as well, so the result is a
/// pure function of the inputs.
pub fn run_stream(
    seq_set: &[CliffordSequence],
    p: &PulseParams,
    cfg: &PhysicsConfig,
    n_shots: usize,
    mode: Mode,
    seed: u64,
) -> Result<ShotStream> {
    let first = seq_set.first().ok_or(Error::Empty("sequence set"))?;
    if n_shots == 0 {
        return Err(Error::invalid("n_shots", "must be at least 1"));
    }
    cfg.validate()?;
    p.validate()?;
    let net = expected_net(mode);
    let n_cl = first.n_cliffords;
    for s in seq_set {
        if s.net_op != net {
            return Err(Error::ModeMismatch(format!(
                "{mode} streams need {net:?} sequences, seed {} has {:?}",
                s.seed, s.net_op
            )));
        }
        if s.n_cliffords != n_cl {
            return Err(Error::invalid("seq_set", "all sequences must have the same length"));
        }
    }
    let executed = n_cl + 1;

    let t1_series: Option<Vec<f64>> = match cfg.t1_fluctuation {
        T1Fluctuation::PowerLaw => Some(
            t1_psd::synthesize(
                cfg.psd_alpha,
                cfg.psd_beta,
                cfg.shot_period(n_cl, mode),
                n_shots.max(2),
                cfg.t1_mean,
                derive_seed(seed, purpose::T1_SERIES, 0),
            )?
            .values,
        ),
        _ => None,
    };
    let t1_fixed = match cfg.t1_fluctuation {
        T1Fluctuation::QuasiStatic { sigma } => {
            draw_quasi_static(cfg.t1_mean, sigma, derive_seed(seed, purpose::T1_SERIES, 0))
        }
        _ => cfg.t1_mean,
    };
    let fixed_rates = error_map(p, cfg, t1_fixed)?;

    let mut rng = rng_from_seed(seed);
    let (tau_b, tau_a) = (cfg.timings.tau_b(), cfg.timings.tau_a());
    let mut q = QubitState::ground();
    let mut bits = Vec::with_capacity(n_shots);
    for i in 0..n_shots {
        let (t1, rates) = match &t1_series {
            Some(v) => (v[i], error_map(p, cfg, v[i])?),
            None => (t1_fixed, fixed_rates),
        };
        if mode == Mode::Conventional {
            q = QubitState::ground();
        }
        // Every sequence executes its random Cliffords plus the recovery.
        q.apply_sequence(executed, net, rates, &mut rng);
        q.decay(tau_b, t1, &mut rng);
        bits.push(q.measure(cfg.p_s_c, &mut rng));
        q.decay(tau_a, t1, &mut rng);
    }
    // Round-robin over the set: shot i runs seq_set[i % len]. The statistics
    // above only depend on the shared length and net operation.
    Ok(ShotStream {
        bits,
        mode,
        n_cliffords: n_cl,
        seed,
    })
}

/// Gaussian T1 draw rejected below `mean / 10`.
pub fn draw_quasi_static(mean: f64, sigma: f64, seed: u64) -> f64 {
    if sigma == 0.0 {
        return mean;
    }
    let mut rng = rng_from_seed(seed);
    let normal = Normal::new(mean, sigma).expect("sigma validated");
    loop {
        let t = normal.sample(&mut rng);
        if t >= mean / 10.0 {
            return t;
        }
    }
}

/// Acquisition time of one cost evaluation.
pub fn simulated_wallclock(n_shots: usize, n_cliffords: usize, mode: Mode, cfg: &PhysicsConfig, init_wait: f64) -> f64 {
    let per_shot = cfg.timings.tau_ro + cfg.timings.tau_cl * n_cliffords as f64;
    let wait = match mode {
        Mode::Restless => 0.0,
        Mode::Conventional => init_wait,
    };
    n_shots as f64 * (per_shot + wait)
}
