//! Nelder-Mead simplex minimization with stable tie-breaking.
//!
//! Costs may be noisy: vertices are never re-evaluated, so every call of the
//! cost function is one fresh measurement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for Coefficients {
    fn default() -> Self {
        Coefficients {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub initial_point: Vec<f64>,
    /// Initial simplex is `x0` plus `step_i` along each axis.
    pub initial_steps: Vec<f64>,
    /// Budget of cost evaluations.
    pub max_evaluations: usize,
    /// Stop when `(max f - min f) / |mean f|` over the simplex falls below this...
    pub cost_spread_tol: f64,
    /// ...and every parameter's extent over the vertices is below its entry here.
    pub extent_tol: Vec<f64>,
    pub coefficients: Coefficients,
    /// Noise-aware relaxation of the spread test for fraction-valued costs.
    #[serde(default)]
    pub shot_noise: Option<ShotNoise>,
}

/// The cost is a fraction estimated from `shots` Bernoulli trials. A simplex
/// whose cost spread is within `sigmas` binomial standard errors of its mean
/// cannot be resolved further, so it passes the spread test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotNoise {
    pub shots: u64,
    pub sigmas: f64,
}

impl ShotNoise {
    pub fn spread_floor(&self, mean: f64) -> f64 {
        let m = mean.clamp(0.0, 1.0);
        self.sigmas * (m * (1.0 - m) / self.shots as f64).sqrt()
    }
}

impl OptimizerConfig {
    pub fn new(initial_point: Vec<f64>, initial_steps: Vec<f64>) -> Self {
        let extent_tol = initial_steps.iter().map(|s| 1e-6 * s.abs()).collect();
        OptimizerConfig {
            initial_point,
            initial_steps,
            max_evaluations: 500,
            cost_spread_tol: 1e-8,
            extent_tol,
            coefficients: Coefficients::default(),
            shot_noise: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.initial_point.len();
        if n == 0 {
            return Err(Error::Empty("initial_point"));
        }
        if self.initial_steps.len() != n || self.extent_tol.len() != n {
            return Err(Error::invalid("initial_steps", "steps and tolerances must match the point's dimension"));
        }
        if self.initial_point.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("initial_point", "must be finite"));
        }
        if self.initial_steps.iter().any(|s| *s == 0.0 || !s.is_finite()) {
            return Err(Error::invalid("initial_steps", "must be finite and nonzero"));
        }
        if let Some(n) = self.shot_noise {
            if n.shots == 0 || !(n.sigmas >= 0.0) {
                return Err(Error::invalid("shot_noise", "need positive shots and non-negative sigmas"));
            }
        }
        if !(self.cost_spread_tol > 0.0) || self.extent_tol.iter().any(|t| !(*t > 0.0)) {
            return Err(Error::invalid("tolerances", "must be positive"));
        }
        if self.max_evaluations < n + 1 {
            return Err(Error::invalid("max_evaluations", format!("need at least {} for the first simplex", n + 1)));
        }
        let c = &self.coefficients;
        if !(c.reflection > 0.0 && c.expansion > 1.0 && c.expansion > c.reflection)
            || !(c.contraction > 0.0 && c.contraction < 1.0 && c.shrink > 0.0 && c.shrink < 1.0)
        {
            return Err(Error::invalid("coefficients", format!("{c:?} violate 0 < rho < chi, 0 < gamma, sigma < 1")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub index: usize,
    pub params: Vec<f64>,
    pub cost: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Reflect,
    Expand,
    ContractOutside,
    ContractInside,
    Shrink,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeResult {
    pub best_point: Vec<f64>,
    pub best_cost: f64,
    /// Every cost evaluation in call order.
    pub trajectory: Vec<Evaluation>,
    /// Move taken in each iteration.
    pub steps: Vec<Step>,
    /// Best vertex cost after the initial simplex and after each iteration.
    pub best_history: Vec<f64>,
    pub converged: bool,
    pub budget_exhausted: bool,
    pub final_simplex: Vec<Vec<f64>>,
}

impl MinimizeResult {
    pub fn n_evaluations(&self) -> usize {
        self.trajectory.len()
    }

    pub fn n_iterations(&self) -> usize {
        self.steps.len()
    }
}

struct Tracker<'a, F> {
    cost: &'a mut F,
    trajectory: Vec<Evaluation>,
}

impl<F: FnMut(&[f64]) -> Result<f64>> Tracker<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let raw = (self.cost)(x)?;
        let f = if raw.is_nan() { f64::INFINITY } else { raw };
        self.trajectory.push(Evaluation {
            index: self.trajectory.len(),
            params: x.to_vec(),
            cost: f,
        });
        Ok(f)
    }
}

fn lin(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

/// Minimizes `cost` starting from the simplex described by `cfg`.
pub fn minimize<F>(mut cost: F, cfg: &OptimizerConfig) -> Result<MinimizeResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    cfg.validate()?;
    let n = cfg.initial_point.len();
    let co = cfg.coefficients;
    let mut tr = Tracker {
        cost: &mut cost,
        trajectory: Vec::new(),
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut x = cfg.initial_point.clone();
        if i > 0 {
            x[i - 1] += cfg.initial_steps[i - 1];
        }
        let f = tr.eval(&x)?;
        if !f.is_finite() {
            return Err(Error::invalid("cost", format!("non-finite value {f} on the initial simplex at {x:?}")));
        }
        simplex.push((x, f));
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut steps = Vec::new();
    let mut best_history = vec![simplex[0].1];
    let mut converged = false;
    let mut budget_exhausted = false;

    loop {
        if has_converged(&simplex, cfg) {
            converged = true;
            break;
        }
        // Every move needs at least one evaluation.
        if tr.trajectory.len() >= cfg.max_evaluations {
            budget_exhausted = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64)
            .collect();
        let (f_best, f_second_worst, f_worst) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);
        let worst = simplex[n].0.clone();

        let xr = lin(&centroid, &worst, -co.reflection);
        let fr = tr.eval(&xr)?;

        let mut replacement = None;
        if fr < f_best {
            let xe = lin(&centroid, &worst, -co.reflection * co.expansion);
            let fe = if tr.trajectory.len() < cfg.max_evaluations {
                tr.eval(&xe)?
            } else {
                f64::INFINITY
            };
            if fe < fr {
                replacement = Some((xe, fe, Step::Expand));
            } else {
                replacement = Some((xr, fr, Step::Reflect));
            }
        } else if fr < f_second_worst {
            replacement = Some((xr, fr, Step::Reflect));
        } else if tr.trajectory.len() < cfg.max_evaluations {
            if fr < f_worst {
                let xc = lin(&centroid, &worst, -co.reflection * co.contraction);
                let fc = tr.eval(&xc)?;
                if fc <= fr {
                    replacement = Some((xc, fc, Step::ContractOutside));
                }
            } else {
                let xcc = lin(&centroid, &worst, co.contraction);
                let fcc = tr.eval(&xcc)?;
                if fcc < f_worst {
                    replacement = Some((xcc, fcc, Step::ContractInside));
                }
            }
        } else {
            budget_exhausted = true;
            break;
        }

        match replacement {
            Some((x, f, step)) => {
                simplex[n] = (x, f);
                steps.push(step);
            }
            None => {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    if tr.trajectory.len() >= cfg.max_evaluations {
                        budget_exhausted = true;
                        break;
                    }
                    let x = lin(&best, &v.0, co.shrink);
                    let f = tr.eval(&x)?;
                    *v = (x, f);
                }
                steps.push(Step::Shrink);
            }
        }
        // Stable: a new vertex tied with old ones stays behind them.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        best_history.push(simplex[0].1);
        if budget_exhausted {
            break;
        }
    }

    Ok(MinimizeResult {
        best_point: simplex[0].0.clone(),
        best_cost: simplex[0].1,
        trajectory: tr.trajectory,
        steps,
        best_history,
        converged,
        budget_exhausted,
        final_simplex: simplex.into_iter().map(|v| v.0).collect(),
    })
}

fn has_converged(simplex: &[(Vec<f64>, f64)], cfg: &OptimizerConfig) -> bool {
    let costs: Vec<f64> = simplex.iter().map(|v| v.1).collect();
    let mean = costs.iter().sum::<f64>() / costs.len() as f64;
    let spread = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - costs.iter().copied().fold(f64::INFINITY, f64::min);
    let floor = cfg.shot_noise.map_or(0.0, |n| n.spread_floor(mean));
    let spread_ok = spread < floor || if mean == 0.0 { spread == 0.0 } else { spread / mean.abs() < cfg.cost_spread_tol };
    spread_ok
        && cfg.extent_tol.iter().enumerate().all(|(j, tol)| {
            let (lo, hi) = simplex
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.0[j]), hi.max(v.0[j])));
            hi - lo < *tol
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(x: &[f64]) -> Result<f64> {
        Ok((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2))
    }

    #[test]
    fn convex_quadratic() {
        let cfg = OptimizerConfig::new(vec![0.0, 0.0], vec![0.5, 0.5]);
        let r = minimize(quad, &cfg).unwrap();
        assert!(r.converged);
        assert!((r.best_point[0] - 1.0).abs() < 1e-3 && (r.best_point[1] - 2.0).abs() < 1e-3);
    }

    #[test]
    fn constant_offset_keeps_trajectory() {
        let cfg = OptimizerConfig {
            max_evaluations: 200,
            ..OptimizerConfig::new(vec![0.0, 0.0], vec![0.5, 0.5])
        };
        let a = minimize(quad, &cfg).unwrap();
        let b = minimize(|x: &[f64]| Ok(quad(x)? + 1000.0), &cfg).unwrap();
        let pa: Vec<_> = a.trajectory.iter().map(|e| e.params.clone()).collect();
        let pb: Vec<_> = b.trajectory.iter().map(|e| e.params.clone()).collect();
        let k = pa.len().min(pb.len());
        assert!(k > 50);
        assert_eq!(pa[..k], pb[..k]);
    }

    #[test]
    fn best_cost_never_increases() {
        let cfg = OptimizerConfig::new(vec![3.0, -2.0, 1.0], vec![1.0, 1.0, 1.0]);
        let r = minimize(|x: &[f64]| Ok(x.iter().map(|v| v.abs().sqrt()).sum()), &cfg).unwrap();
        assert!(r.best_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn budget_is_respected() {
        let cfg = OptimizerConfig {
            max_evaluations: 17,
            ..OptimizerConfig::new(vec![-1.2, 1.0], vec![0.1, 0.1])
        };
        let r = minimize(|x: &[f64]| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)), &cfg).unwrap();
        assert!(r.budget_exhausted && !r.converged);
        assert!(r.n_evaluations() <= 17);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let cfg = OptimizerConfig::new(vec![0.0], vec![1.0]);
        assert!(minimize(|_: &[f64]| Ok(f64::INFINITY), &cfg).is_err());
        let bad = OptimizerConfig::new(vec![0.0], vec![0.0]);
        assert!(minimize(|_: &[f64]| Ok(0.0), &bad).is_err());
    }
}
