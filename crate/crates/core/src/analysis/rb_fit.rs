//! Weighted least-squares fit of `1 - eps = A p^n + B`.
//!
//! For fixed `p` the model is linear in `(A, B)`, so the search runs over `p`
//! alone (scan plus golden section on `r = -ln p`), then a few Gauss-Newton
//! steps on all three parameters polish the optimum and provide the Jacobian
//! for the covariance.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbPoint {
    pub n_cl: f64,
    pub epsilon: f64,
    /// Inverse variance of `epsilon`; use 1.0 for an unweighted fit.
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub amp: f64,
    pub offset: f64,
    pub p_cl: f64,
    pub f_cl: f64,
    /// Covariance of `(amp, offset, p_cl)`, scaled by the reduced chi-square.
    pub covariance: [[f64; 3]; 3],
    pub f_cl_stderr: f64,
    pub chi2: f64,
    pub warnings: Vec<String>,
}

struct Data<'a> {
    points: &'a [RbPoint],
}

impl Data<'_> {
    /// Best `(A, B)` and the residual sum of squares for a fixed `p`.
    fn linear_solve(&self, p: f64) -> (f64, f64, f64) {
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for pt in self.points {
            let x = p.powf(pt.n_cl);
            sw += pt.weight;
            sx += pt.weight * x;
            sy += pt.weight * (1.0 - pt.epsilon);
        }
        let (xm, ym) = (sx / sw, sy / sw);
        let (mut sxx, mut sxy) = (0.0, 0.0);
        for pt in self.points {
            let dx = p.powf(pt.n_cl) - xm;
            sxx += pt.weight * dx * dx;
            sxy += pt.weight * dx * (1.0 - pt.epsilon - ym);
        }
        let amp = if sxx > 1e-300 { sxy / sxx } else { 0.0 };
        let offset = ym - amp * xm;
        (amp, offset, self.rss(amp, offset, p))
    }

    fn rss(&self, amp: f64, offset: f64, p: f64) -> f64 {
        self.points
            .iter()
            .map(|pt| {
                let r = 1.0 - pt.epsilon - (amp * p.powf(pt.n_cl) + offset);
                pt.weight * r * r
            })
            .sum()
    }

    fn profile(&self, r: f64) -> f64 {
        self.linear_solve((-r).exp()).2
    }

    fn jtj(&self, amp: f64, p: f64) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for pt in self.points {
            let j = Vector3::new(p.powf(pt.n_cl), 1.0, amp * pt.n_cl * p.powf(pt.n_cl - 1.0));
            m += pt.weight * j * j.transpose();
        }
        m
    }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn rb_fit(points: &[RbPoint]) -> Result<RbFit> {
    let mut lengths: Vec<f64> = points.iter().map(|p| p.n_cl).collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();
    if lengths.len() < 3 {
        return Err(Error::FitFailed(format!(
            "need at least 3 distinct sequence lengths, got {}",
            lengths.len()
        )));
    }
    for pt in points {
        if !(pt.n_cl >= 0.0 && pt.epsilon.is_finite() && pt.weight > 0.0 && pt.weight.is_finite()) {
            return Err(Error::FitFailed(format!("invalid data point {pt:?}")));
        }
    }
    let data = Data { points };
    let mut warnings = Vec::new();

    let sw: f64 = points.iter().map(|p| p.weight).sum();
    let ym = points.iter().map(|p| p.weight * (1.0 - p.epsilon)).sum::<f64>() / sw;
    let spread: f64 = points
        .iter()
        .map(|p| p.weight * (1.0 - p.epsilon - ym).powi(2))
        .sum::<f64>()
        / sw;
    if spread <= 1e-28 * (1.0 + ym * ym) {
        // No decay in the data: the depolarizing parameter is exactly one.
        return Ok(RbFit {
            amp: 0.0,
            offset: ym,
            p_cl: 1.0,
            f_cl: 1.0,
            covariance: [[0.0; 3]; 3],
            f_cl_stderr: 0.0,
            chi2: 0.0,
            warnings: vec!["flat data; p_cl fixed at 1".into()],
        });
    }

    // Coarse scan over r = -ln p, including r = 0 (p = 1).
    let n_max = *lengths.last().unwrap();
    let r_hi = (50.0 / n_max.max(1.0)).max(1e-3);
    let mut grid = vec![0.0];
    let steps = 400;
    for k in 0..=steps {
        grid.push(1e-9 * (r_hi / 1e-9f64).powf(k as f64 / steps as f64));
    }
    let values: Vec<f64> = grid.iter().map(|&r| data.profile(r)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("non-finite residuals".into()));
    }
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let mut r = golden_section(|r| data.profile(r), lo, hi);
    if data.profile(0.0) <= data.profile(r) {
        r = 0.0;
    }
    let mut p = (-r).exp();
    let (mut amp, mut offset, mut rss) = data.linear_solve(p);

    // Gauss-Newton polish on (A, B, p).
    for _ in 0..20 {
        let jtj = data.jtj(amp, p);
        let mut jtr = Vector3::zeros();
        for pt in points {
            let x = p.powf(pt.n_cl);
            let res = 1.0 - pt.epsilon - (amp * x + offset);
            let j = Vector3::new(x, 1.0, amp * pt.n_cl * p.powf(pt.n_cl - 1.0));
            jtr += pt.weight * res * j;
        }
        let Some(step) = jtj.try_inverse().map(|inv| inv * jtr) else {
            break;
        };
        let (a2, b2, p2) = (amp + step[0], offset + step[1], (p + step[2]).min(1.0));
        let rss2 = data.rss(a2, b2, p2);
        if !(rss2 < rss) {
            break;
        }
        (amp, offset, p, rss) = (a2, b2, p2, rss2);
    }

    if !(rss.is_finite() && p.is_finite()) {
        return Err(Error::FitFailed("optimizer did not converge".into()));
    }
    if p >= 1.0 {
        warnings.push("p_cl at upper bound 1".into());
    }
    if p <= 0.0 {
        warnings.push("p_cl at lower bound 0".into());
    }

    let dof = points.len().saturating_sub(3);
    let scale = if dof > 0 { rss / dof as f64 } else { 1.0 };
    let covariance = match data.jtj(amp, p).try_inverse() {
        Some(inv) => {
            let c = inv * scale;
            [
                [c[(0, 0)], c[(0, 1)], c[(0, 2)]],
                [c[(1, 0)], c[(1, 1)], c[(1, 2)]],
                [c[(2, 0)], c[(2, 1)], c[(2, 2)]],
            ]
        }
        None => {
            warnings.push("singular normal matrix; covariance unavailable".into());
            [[f64::NAN; 3]; 3]
        }
    };

    Ok(RbFit {
        amp,
        offset,
        p_cl: p,
        f_cl: 0.5 + 0.5 * p,
        f_cl_stderr: 0.5 * covariance[2][2].max(0.0).sqrt(),
        covariance,
        chi2: rss,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(amp: f64, offset: f64, p: f64, lengths: &[f64]) -> Vec<RbPoint> {
        lengths
            .iter()
            .map(|&n| RbPoint {
                n_cl: n,
                epsilon: 1.0 - (amp * p.powf(n) + offset),
                weight: 1.0,
            })
            .collect()
    }

    #[test]
    fn noiseless_recovery() {
        let lengths = [1.0, 10.0, 50.0, 100.0, 200.0, 400.0, 800.0];
        let fit = rb_fit(&synthetic(0.5, 0.5, 0.998, &lengths)).unwrap();
        assert!((fit.amp - 0.5).abs() < 1e-6, "{fit:?}");
        assert!((fit.offset - 0.5).abs() < 1e-6);
        assert!((fit.p_cl - 0.998).abs() < 1e-6);
        assert!((fit.f_cl - 0.999).abs() < 1e-6);
    }

    #[test]
    fn noiseless_recovery_fast_decay() {
        let lengths = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0];
        let fit = rb_fit(&synthetic(0.45, 0.52, 0.9, &lengths)).unwrap();
        assert!((fit.p_cl - 0.9).abs() < 1e-9, "{fit:?}");
    }

    #[test]
    fn flat_data_has_unit_fidelity() {
        let lengths = [1.0, 100.0, 300.0];
        let fit = rb_fit(&synthetic(0.4, 0.55, 1.0, &lengths)).unwrap();
        assert_eq!(fit.f_cl, 1.0);
        assert!((fit.offset + fit.amp - 0.95).abs() < 1e-12);
    }

    #[test]
    fn too_few_lengths() {
        let pts = synthetic(0.5, 0.5, 0.99, &[1.0, 5.0, 5.0, 1.0]);
        assert!(matches!(rb_fit(&pts), Err(Error::FitFailed(_))));
    }

    #[test]
    fn weights_shift_the_optimum_toward_trusted_points() {
        let lengths = [1.0, 50.0, 100.0, 200.0, 400.0];
        let mut pts = synthetic(0.5, 0.5, 0.995, &lengths);
        pts[4].epsilon += 0.01;
        let unweighted = rb_fit(&pts).unwrap();
        pts[4].weight = 1e-6;
        let weighted = rb_fit(&pts).unwrap();
        assert!((weighted.p_cl - 0.995).abs() < (unweighted.p_cl - 0.995).abs());
    }
}
