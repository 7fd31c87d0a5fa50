//! Synthetic T1 time series with a power-law spectrum, and the matching
//! estimator: segment-averaged single-sided periodogram, log-log power-law
//! fit, and band-limited integration of the fitted spectrum.
//!
//! Frequencies are in Hz and T1 in seconds, so spectra carry units of s²/Hz.

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::seeds::rng_from_seed;

/// T1 samples taken every `dt` seconds, grouped into equal-length runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T1Series {
    pub dt: f64,
    pub segment_len: usize,
    pub values: Vec<f64>,
}

impl T1Series {
    pub fn new(dt: f64, segment_len: usize, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        if segment_len == 0 || values.len() % segment_len != 0 {
            return Err(Error::invalid(
                "segment_len",
                format!("{} samples do not split into runs of {segment_len}", values.len()),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("values", format!("T1 samples must be positive, found {v}")));
        }
        Ok(T1Series {
            dt,
            segment_len,
            values,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.values.len() / self.segment_len
    }

    /// Regroups into runs of `segment_len`, dropping the incomplete tail.
    pub fn resegment(&self, segment_len: usize) -> Result<Self> {
        if segment_len == 0 {
            return Err(Error::invalid("segment_len", "must be positive"));
        }
        let keep = self.values.len() / segment_len * segment_len;
        T1Series::new(self.dt, segment_len, self.values[..keep].to_vec())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time_s", "t1_s"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(i as f64 * self.dt).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `(time_s, t1_s)` rows; `#` lines are comments. The sample
    /// interval is inferred and must be uniform.
    pub fn read_csv<R: Read>(input: R, segment_len: Option<usize>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in r.deserialize::<(f64, f64)>() {
            let (t, v) = rec?;
            times.push(t);
            values.push(v);
        }
        if times.len() < 2 {
            return Err(Error::Format("need at least two T1 samples".into()));
        }
        let dt = times[1] - times[0];
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(Error::Format(format!("non-uniform sampling near t = {}", w[0])));
            }
        }
        let len = values.len();
        T1Series::new(dt, segment_len.unwrap_or(len), values)?.resegment(segment_len.unwrap_or(len))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    pub frequencies: Vec<f64>,
    pub s_t1: Vec<f64>,
    pub fit_alpha: Option<f64>,
    pub fit_beta: Option<f64>,
}

impl PsdEstimate {
    /// Bin width of the estimate.
    pub fn resolution(&self) -> f64 {
        self.frequencies.first().copied().unwrap_or(0.0)
    }

    pub fn with_fit(mut self) -> Result<Self> {
        let (a, b) = fit_powerlaw(&self)?;
        self.fit_alpha = Some(a);
        self.fit_beta = Some(b);
        Ok(self)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["freq_hz", "psd_s2_per_hz"])?;
        for (f, s) in self.frequencies.iter().zip(&self.s_t1) {
            w.write_record([f.to_string(), s.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Spectral synthesis: complex Gaussian Fourier amplitudes scaled so the
/// single-sided periodogram has expectation `alpha * f^beta`, inverse
/// transformed, shifted to `t1_mean` and clipped below at `t1_mean / 10`.
pub fn synthesize(alpha: f64, beta: f64, dt: f64, n_samples: usize, t1_mean: f64, seed: u64) -> Result<T1Series> {
    ensure_finite("alpha", alpha)?;
    if alpha < 0.0 {
        return Err(Error::invalid("alpha", "must be non-negative"));
    }
    if !(beta > -2.0 && beta <= 0.0) {
        return Err(Error::invalid("beta", format!("must lie in (-2, 0], got {beta}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if !(t1_mean > 0.0 && t1_mean.is_finite()) {
        return Err(Error::invalid("t1_mean", "must be positive"));
    }
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least two samples"));
    }
    if alpha == 0.0 {
        return T1Series::new(dt, n_samples, vec![t1_mean; n_samples]);
    }

    let n = n_samples;
    let mut rng = rng_from_seed(seed);
    let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=n / 2 {
        let f = k as f64 / (n as f64 * dt);
        let s = alpha * f.powf(beta);
        if 2 * k == n {
            let x: f64 = StandardNormal.sample(&mut rng);
            spectrum[k] = Complex64::new((n as f64 * s / dt).sqrt() * x, 0.0);
        } else {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let scale = (n as f64 * s / (2.0 * dt)).sqrt() / std::f64::consts::SQRT_2;
            spectrum[k] = Complex64::new(re, im) * scale;
            spectrum[n - k] = spectrum[k].conj();
        }
    }
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut spectrum);

    let floor = t1_mean / 10.0;
    let values = spectrum
        .iter()
        .map(|c| (c.re / n as f64 + t1_mean).max(floor))
        .collect();
    T1Series::new(dt, n, values)
}

/// Segment-averaged single-sided periodogram with per-segment mean removal
/// and a rectangular window. Bins run from `1/(M dt)` to Nyquist; the
/// Nyquist bin of an even-length segment is not doubled.
pub fn estimate_psd(series: &T1Series) -> Result<PsdEstimate> {
    let m = series.segment_len;
    let l = series.n_segments();
    if l < 1 || m < 2 {
        return Err(Error::invalid("series", "need at least one segment of two or more samples"));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
    let n_bins = m / 2;
    let mut power = vec![0.0; n_bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for seg in series.values.chunks_exact(m) {
        let mean = seg.iter().sum::<f64>() / m as f64;
        for (b, &v) in buf.iter_mut().zip(seg) {
            *b = Complex64::new(v - mean, 0.0);
        }
        fft.process(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            *p += buf[k + 1].norm_sqr();
        }
    }
    let scale = 2.0 * series.dt / (l as f64 * m as f64);
    let s_t1 = power
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let k = i + 1;
            if 2 * k == m {
                0.5 * scale * p
            } else {
                scale * p
            }
        })
        .collect();
    let frequencies = (1..=n_bins).map(|k| k as f64 / (m as f64 * series.dt)).collect();
    Ok(PsdEstimate {
        frequencies,
        s_t1,
        fit_alpha: None,
        fit_beta: None,
    })
}

/// Least squares of `ln S = ln alpha + beta ln(f / 1 Hz)`; bins with
/// nonpositive frequency or power are skipped.
pub fn fit_powerlaw(psd: &PsdEstimate) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = psd
        .frequencies
        .iter()
        .zip(&psd.s_t1)
        .filter(|(f, s)| **f > 0.0 && **s > 0.0 && s.is_finite())
        .map(|(f, s)| (f.ln(), s.ln()))
        .collect();
    if pts.len() < 4 {
        return Err(Error::FitFailed(format!("need at least 4 positive PSD bins, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let xm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xm).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xm) * (p.1 - ym)).sum();
    if sxx <= 0.0 {
        return Err(Error::FitFailed("all bins at one frequency".into()));
    }
    let beta = sxy / sxx;
    Ok(((ym - beta * xm).exp(), beta))
}

/// `sqrt(∫ alpha f^beta df)` over `[f_l, f_u]`, with the logarithmic limit at `beta = -1`.
pub fn sigma_from_psd(alpha: f64, beta: f64, f_l: f64, f_u: f64) -> Result<f64> {
    ensure_finite("alpha", alpha)?;
    ensure_finite("beta", beta)?;
    if alpha < 0.0 {
        return Err(Error::invalid("alpha", "must be non-negative"));
    }
    if !(f_l > 0.0 && f_u > f_l && f_u.is_finite()) {
        return Err(Error::invalid("f_l, f_u", format!("need 0 < f_l < f_u, got [{f_l}, {f_u}]")));
    }
    let c = beta + 1.0;
    let (ll, lu) = (f_l.ln(), f_u.ln());
    // (f_u^c - f_l^c) / c without cancellation near c = 0.
    let integral = if c == 0.0 {
        lu - ll
    } else {
        (c * ll).exp() * (c * (lu - ll)).exp_m1() / c
    };
    Ok((alpha * integral).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn white(n: usize, m: usize, seed: u64) -> T1Series {
        let mut rng = rng_from_seed(seed);
        let v = (0..n)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                10.0 + x
            })
            .collect();
        T1Series::new(1.0, m, v).unwrap()
    }

    #[test]
    fn zero_alpha_is_constant() {
        let s = synthesize(0.0, -0.5, 2.0, 100, 20e-6, 1).unwrap();
        assert!(s.values.iter().all(|&v| v == 20e-6));
        let p = estimate_psd(&s.resegment(20).unwrap()).unwrap();
        assert!(p.s_t1.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_series_has_zero_psd() {
        let s = T1Series::new(0.5, 10, vec![3.0; 40]).unwrap();
        assert!(estimate_psd(&s).unwrap().s_t1.iter().all(|&v| v.abs() < 1e-25));
    }

    #[test]
    fn white_noise_is_flat_at_two_dt_var() {
        let s = white(21 * 400, 21, 7);
        let p = estimate_psd(&s).unwrap();
        let mean = p.s_t1.iter().sum::<f64>() / p.s_t1.len() as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.1, "{mean}");
    }

    #[test]
    fn parseval_holds() {
        for m in [20, 21] {
            let s = white(m * 300, m, 8);
            let p = estimate_psd(&s).unwrap();
            let integral: f64 = p.s_t1.iter().sum::<f64>() * p.resolution();
            let var: f64 = s
                .values
                .chunks_exact(m)
                .map(|seg| {
                    let mu = seg.iter().sum::<f64>() / m as f64;
                    seg.iter().map(|v| (v - mu).powi(2)).sum::<f64>()
                })
                .sum::<f64>()
                / s.values.len() as f64;
            assert!((integral - var).abs() / var < 1e-10, "m={m}: {integral} vs {var}");
        }
    }

    #[test]
    fn sinusoid_on_a_bin_gives_a_single_peak() {
        let (m, dt, k0) = (32usize, 0.1, 5usize);
        let v: Vec<f64> = (0..m * 4)
            .map(|i| 5.0 + (2.0 * std::f64::consts::PI * k0 as f64 * (i % m) as f64 / m as f64).sin())
            .collect();
        let p = estimate_psd(&T1Series::new(dt, m, v).unwrap()).unwrap();
        let (imax, _) = p
            .s_t1
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(imax + 1, k0);
        assert!((p.frequencies[imax] - k0 as f64 / (m as f64 * dt)).abs() < 1e-12);
        for (i, &s) in p.s_t1.iter().enumerate() {
            if i != imax {
                assert!(s < 1e-20 * p.s_t1[imax]);
            }
        }
    }

    #[test]
    fn exact_powerlaw_fit() {
        let f: Vec<f64> = (1..=10).map(|k| k as f64 * 0.05).collect();
        let s = f.iter().map(|x| 3e-12 * x.powf(-1.3)).collect();
        let (a, b) = fit_powerlaw(&PsdEstimate {
            frequencies: f,
            s_t1: s,
            fit_alpha: None,
            fit_beta: None,
        })
        .unwrap();
        assert!((a / 3e-12 - 1.0).abs() < 1e-12);
        assert!((b + 1.3).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_four_bins() {
        let p = PsdEstimate {
            frequencies: vec![1.0, 2.0, 3.0, 4.0],
            s_t1: vec![1.0, 0.0, 1.0, 1.0],
            fit_alpha: None,
            fit_beta: None,
        };
        assert!(matches!(fit_powerlaw(&p), Err(Error::FitFailed(_))));
    }

    #[test]
    fn white_noise_fit_is_flat() {
        for seed in 0..10 {
            let p = estimate_psd(&white(64 * 256, 64, 100 + seed)).unwrap();
            let (_, b) = fit_powerlaw(&p).unwrap();
            assert!(b.abs() < 0.1, "seed {seed}: beta {b}");
        }
    }

    #[test]
    fn seeds_differ_but_statistics_agree() {
        let a = synthesize(8.4e-13, -0.81, 2.0, 4096, 21.6e-6, 1).unwrap();
        let b = synthesize(8.4e-13, -0.81, 2.0, 4096, 21.6e-6, 2).unwrap();
        assert_ne!(a.values, b.values);
        assert_eq!(a, synthesize(8.4e-13, -0.81, 2.0, 4096, 21.6e-6, 1).unwrap());
        let fa = estimate_psd(&a.resegment(64).unwrap()).unwrap().with_fit().unwrap();
        let fb = estimate_psd(&b.resegment(64).unwrap()).unwrap().with_fit().unwrap();
        assert!((fa.fit_beta.unwrap() - fb.fit_beta.unwrap()).abs() < 0.3);
    }

    #[test]
    fn sigma_closed_form_cases() {
        let s = sigma_from_psd(2.0, 0.0, 1.0, 5.0).unwrap();
        assert!((s - (2.0f64 * 4.0).sqrt()).abs() < 1e-14);
        let s = sigma_from_psd(1.0, -1.0, 1.0, std::f64::consts::E).unwrap();
        assert!((s - 1.0).abs() < 1e-14);
        // Continuous through beta = -1.
        let near = sigma_from_psd(1.0, -1.0 + 1e-12, 1.0, std::f64::consts::E).unwrap();
        assert!((near - 1.0).abs() < 1e-10);
        assert!(sigma_from_psd(1.0, -0.5, 2.0, 1.0).is_err());
        assert!(sigma_from_psd(1.0, -0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn sigma_monotone_in_band_and_alpha() {
        let base = sigma_from_psd(8.4e-13, -0.81, 0.27, 13.5).unwrap();
        assert!(sigma_from_psd(8.4e-13, -0.81, 0.27, 20.0).unwrap() > base);
        assert!(sigma_from_psd(9e-13, -0.81, 0.27, 13.5).unwrap() > base);
    }

    #[test]
    fn csv_roundtrip_keeps_dt() {
        let s = synthesize(1e-12, -0.5, 2.0, 42, 20e-6, 3).unwrap();
        let mut buf = b"# provenance\n".to_vec();
        s.write_csv(&mut buf).unwrap();
        let back = T1Series::read_csv(buf.as_slice(), Some(21)).unwrap();
        assert_eq!(back.segment_len, 21);
        assert_eq!(back.n_segments(), 2);
        assert!((back.dt - 2.0).abs() < 1e-12);
        for (a, b) in back.values.iter().zip(&s.values) {
            assert!((a - b).abs() <= 1e-15 * a.abs());
        }
    }

    #[test]
    fn invalid_synthesis_parameters() {
        assert!(synthesize(1e-12, 0.5, 1.0, 10, 1e-5, 0).is_err());
        assert!(synthesize(1e-12, -2.0, 1.0, 10, 1e-5, 0).is_err());
        assert!(synthesize(-1.0, -0.5, 1.0, 10, 1e-5, 0).is_err());
        assert!(synthesize(1e-12, -0.5, 1.0, 10, 0.0, 0).is_err());
    }
}
