use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rayon::prelude::*;
use restless_core::analysis::{snr_scan, NoiseModelParams};
use restless_core::experiments::{landscape, monte_carlo_snr, rb_curve, to_snr_scan, SimContext};
use restless_core::gst::{clifford_fidelity, GateSet};
use restless_core::seeds::{derive_seed, purpose};
use restless_core::shots::Mode;
use restless_core::t1_psd::{estimate_psd, sigma_from_psd, synthesize, T1Series};
use restless_core::transmon::{PhysicsConfig, PulseParams};
use restless_core::tuneup::{standard_starts, timing_breakdown, two_step_tuneup};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::output::{fmt, OutDir};
use crate::CliError;

pub fn tuneup(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let ctx = cfg.context();
    let t = &cfg.tuneup;
    let starts = standard_starts(&ctx.physics.opt);
    let mut runs: Vec<(usize, PulseParams)> = Vec::new();
    for &i in &t.starts {
        if t.n_params == 3 {
            for &f in &t.start_detunings {
                runs.push((i, PulseParams { f_detuning: f, ..starts[i] }));
            }
        } else {
            runs.push((i, starts[i]));
        }
    }
    let mode = cfg.mode;
    let reports = runs
        .par_iter()
        .enumerate()
        .map(|(k, (_, start))| {
            let seed = derive_seed(cfg.master_seed, purpose::TUNEUP, k as u64);
            two_step_tuneup(&ctx, &t.optimizer, *start, mode, t.n_params, seed)
        })
        .collect::<restless_core::Result<Vec<_>>>()?;

    let mut summary = Vec::new();
    for (k, ((start_index, _), r)) in runs.iter().zip(&reports).enumerate() {
        let stem = format!("tuneup_{mode}_{}p_run{k}", t.n_params);
        out.json(&format!("{stem}.json"), r)?;
        out.csv_from(&format!("{stem}_trajectory.csv"), |w| r.write_trajectory_csv(w))?;
        summary.push(json!({
            "run": k,
            "start_index": start_index,
            "start": r.start,
            "final_params": r.final_params,
            "n_iterations": r.n_iterations,
            "converged": r.converged,
            "simulated_time": r.simulated_time,
            "f_cl": r.final_f_cl(),
        }));
    }
    let f: Vec<f64> = reports.iter().filter_map(|r| r.final_f_cl()).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let times: Vec<f64> = reports.iter().map(|r| r.simulated_time).collect();
    out.json(
        &format!("tuneup_{mode}_{}p_summary.json", t.n_params),
        &json!({
            "mode": mode,
            "n_params": t.n_params,
            "runs": summary,
            "mean_f_cl": if f.is_empty() { None } else { Some(mean(&f)) },
            "mean_simulated_time": mean(&times),
        }),
    )?;
    if f.len() < reports.len() {
        return Err(CliError::Fit("closing RB fit failed for at least one run".into()));
    }
    Ok(())
}

pub fn landscape_cmd(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let ctx = cfg.context();
    let l = &cfg.landscape;
    let seed = derive_seed(cfg.master_seed, purpose::LANDSCAPE, 0);
    let land = landscape(&ctx, &l.a_g.values(), &l.a_d.values(), l.n_cl, cfg.mode, seed)?;
    let best = &land.points[land.argmin];
    let rows: Vec<Vec<String>> = land
        .points
        .iter()
        .map(|p| vec![fmt(p.a_g), fmt(p.a_d), fmt(p.epsilon)])
        .collect();
    out.csv(
        &format!("landscape_{}.csv", cfg.mode),
        &[
            ("mode", cfg.mode.to_string()),
            ("n_cl", l.n_cl.to_string()),
            ("argmin", format!("a_g={} a_d={} epsilon={}", best.a_g, best.a_d, best.epsilon)),
            ("simulated_time_s", fmt(land.simulated_time)),
        ],
        &["a_g", "a_d", "epsilon"],
        &rows,
    )?;
    out.json(
        &format!("landscape_{}.json", cfg.mode),
        &json!({
            "mode": cfg.mode,
            "n_cl": l.n_cl,
            "argmin": best,
            "simulated_time": land.simulated_time,
        }),
    )
}

pub fn rb(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let ctx = cfg.context();
    let seed = derive_seed(cfg.master_seed, purpose::BENCHMARK, 1);
    let curve = rb_curve(&ctx, &ctx.physics.opt, cfg.mode, &cfg.rb.n_cl, cfg.rb.repetitions, seed)?;
    let rows: Vec<Vec<String>> = curve
        .points
        .iter()
        .map(|p| {
            vec![
                p.n_cl.to_string(),
                fmt(p.mean),
                fmt(p.std),
                fmt(p.stderr),
                p.repetitions.to_string(),
            ]
        })
        .collect();
    out.csv(
        &format!("rb_{}.csv", cfg.mode),
        &[("mode", cfg.mode.to_string())],
        &["n_cl", "epsilon_mean", "epsilon_std", "epsilon_stderr", "repetitions"],
        &rows,
    )?;
    out.json(&format!("rb_{}.json", cfg.mode), &curve)?;
    match curve.fit_error {
        Some(e) => Err(CliError::Fit(e)),
        None => Ok(()),
    }
}

pub fn snr(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let s = &cfg.snr;
    let ctx = SimContext {
        physics: PhysicsConfig {
            t1_mean: s.t1_mean,
            ..cfg.physics.clone()
        },
        ..cfg.context()
    };
    let model = NoiseModelParams {
        p_pulse: 0.0,
        p_s_c: cfg.physics.p_s_c,
        t1_mean: s.t1_mean,
        t1_sigma: s.t1_sigma,
        timings: cfg.physics.timings.clone(),
        n_shots: cfg.n_shots as u64,
    };
    // Each shot executes the recovery element as well.
    let executed: Vec<u32> = s.n_cl.iter().map(|&n| n as u32 + 1).collect();

    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (i, &f_a) in s.f_a.iter().enumerate() {
        let seed = derive_seed(cfg.master_seed, purpose::SNR, i as u64);
        let mc = monte_carlo_snr(&ctx, f_a, s.t1_sigma, &s.n_cl, s.repetitions, seed)?;
        let analytic = snr_scan(f_a, &executed, &model)?;
        let binomial = snr_scan(f_a, &executed, &NoiseModelParams { t1_sigma: 0.0, ..model.clone() })?;
        for ((m, a), b) in mc.iter().zip(&analytic.points).zip(&binomial.points) {
            rows.push(vec![
                fmt(f_a),
                m.n_cl.to_string(),
                fmt(m.mean_a),
                fmt(m.mean_b),
                fmt(m.sigma_a),
                fmt(m.sigma_b),
                fmt(m.snr),
                fmt(a.mean_a),
                fmt(a.mean_b),
                fmt(a.sigma_a),
                fmt(a.sigma_b),
                fmt(b.sigma_a),
                fmt(a.snr),
            ]);
        }
        let mc_scan = to_snr_scan(f_a, &mc);
        summary.push(json!({
            "f_a": f_a,
            "f_b": analytic.f_b,
            "model_max_snr": analytic.max_snr,
            "model_argmax_n_cl": analytic.argmax_n_cl - 1,
            "monte_carlo_max_snr": mc_scan.max_snr,
            "monte_carlo_argmax_n_cl": mc_scan.argmax_n_cl,
        }));
    }
    out.csv(
        "snr.csv",
        &[
            ("t1_mean_s", fmt(s.t1_mean)),
            ("t1_sigma_s", fmt(s.t1_sigma)),
            ("repetitions", s.repetitions.to_string()),
        ],
        &[
            "f_a",
            "n_cl",
            "monte_carlo_mean_a",
            "monte_carlo_mean_b",
            "monte_carlo_sigma_a",
            "monte_carlo_sigma_b",
            "monte_carlo_snr",
            "model_mean_a",
            "model_mean_b",
            "model_sigma_a",
            "model_sigma_b",
            "model_binomial_sigma_a",
            "model_snr",
        ],
        &rows,
    )?;
    out.json("snr_summary.json", &json!({ "scans": summary }))
}

pub fn psd(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let p = &cfg.psd;
    let series = match &p.input {
        Some(path) => {
            let f = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            T1Series::read_csv(BufReader::new(f), Some(p.segment_len)).map_err(|e| CliError::Config(format!("psd.input: {e}")))?
        }
        None => {
            let s = synthesize(
                cfg.physics.psd_alpha,
                cfg.physics.psd_beta,
                p.dt,
                p.n_samples,
                cfg.physics.t1_mean,
                derive_seed(cfg.master_seed, purpose::T1_SERIES, 1),
            )?;
            out.csv_from("t1_series.csv", |w| s.write_csv(w))?;
            s.resegment(p.segment_len)?
        }
    };
    let est = estimate_psd(&series)?;
    out.csv_from("psd.csv", |w| est.write_csv(w))?;
    let est = est.with_fit().map_err(|e| CliError::Fit(e.to_string()))?;
    let (alpha, beta) = (est.fit_alpha.unwrap_or(0.0), est.fit_beta.unwrap_or(0.0));
    let sigma = sigma_from_psd(alpha, beta, p.f_low, p.f_high)?;
    out.json(
        "psd_fit.json",
        &json!({
            "alpha": alpha,
            "beta": beta,
            "f_low": p.f_low,
            "f_high": p.f_high,
            "sigma_t1": sigma,
            "segments": series.n_segments(),
            "segment_len": series.segment_len,
            "dt": series.dt,
            "t1_mean": series.mean(),
        }),
    )
}

pub fn gst_fcl(path: &Path, out: &mut OutDir) -> Result<(), CliError> {
    let f = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let gs = GateSet::from_json_reader(BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let fid = clifford_fidelity(&gs).map_err(|e| CliError::Fit(e.to_string()))?;
    for w in &fid.warnings {
        eprintln!("warning: {w}");
    }
    out.json("gst_fcl.json", &fid)
}

pub fn timing(cfg: &ExperimentConfig, out: &mut OutDir) -> Result<(), CliError> {
    let ctx = cfg.context();
    let n_cl = cfg.tuneup.optimizer.fine.n_cliffords;
    let bars = timing_breakdown(&ctx, n_cl);
    let find = |p: &str, m: Mode| bars.iter().find(|b| b.pipeline == p && b.mode == m).map(|b| b.total);
    out.json(
        "timing.json",
        &json!({
            "n_shots": ctx.n_shots,
            "n_cl": n_cl,
            "bars": bars,
            "speedup_improved": find("improved", Mode::Conventional).zip(find("improved", Mode::Restless)).map(|(c, r)| c / r),
        }),
    )
}
