use proptest::prelude::*;
use restless_core::analysis::{error_rate, NoiseModelParams};
use restless_core::clifford::{generate_sequence, word_rotation, NetOp};
use restless_core::cost::epsilon;
use restless_core::experiments::SimContext;
use restless_core::gst::{clifford_fidelity, GateSet};
use restless_core::optimize::{minimize, OptimizerConfig};
use restless_core::seeds::{derive_seed, purpose};
use restless_core::shots::Mode;
use restless_core::t1_psd::sigma_from_psd;
use restless_core::transmon::{run_stream, PhysicsConfig, PulseParams, Timings};
use restless_core::tuneup::{standard_starts, timing_breakdown, two_step_tuneup, TuneupSettings};

fn net_op() -> impl Strategy<Value = NetOp> {
    prop_oneof![Just(NetOp::Identity), Just(NetOp::BitFlip)]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn gate_program_realizes_net_op(seed in any::<u64>(), n in 1usize..400, net in net_op()) {
        let s = generate_sequence(seed, n, net).unwrap();
        prop_assert_eq!(word_rotation(&s.gate_program), net.rotation());
        prop_assert_eq!(s.net_rotation(), net.rotation());
        prop_assert_eq!(s.executed_cliffords(), n + 1);
        prop_assert_eq!(generate_sequence(seed, n, net).unwrap(), s);
    }

    #[test]
    fn error_rate_monotone(p_s in 0.0..0.5f64, p_c in 0.0..0.499f64, dp in 0.0..0.001f64, n in 0.0..3000.0f64, dn in 0.0..50.0f64) {
        let base = error_rate(p_s, p_c, n);
        prop_assert!(error_rate(p_s, p_c + dp, n) >= base - 1e-15);
        prop_assert!(error_rate(p_s, p_c, n + dn) >= base - 1e-15);
    }

    #[test]
    fn model_without_fluctuations_is_binomial(p in 0.0..5e-3f64, n in 1.0..2000.0f64, t1 in 10e-6..40e-6f64) {
        let m = NoiseModelParams {
            p_pulse: p,
            p_s_c: 0.006,
            t1_mean: t1,
            t1_sigma: 0.0,
            timings: Timings::default(),
            n_shots: 8000,
        };
        let (_, var) = m.epsilon_mean_and_var(n);
        prop_assert!((var - m.binomial_variance(n)).abs() <= 1e-18);
    }

    #[test]
    fn band_sigma_monotone(alpha in 1e-14..1e-11f64, beta in -2.0..1.0f64, f_l in 1e-3..1.0f64, span in 1.01..100.0f64, grow in 1.0..3.0f64) {
        let f_u = f_l * span;
        let s = sigma_from_psd(alpha, beta, f_l, f_u).unwrap();
        prop_assert!(sigma_from_psd(alpha, beta, f_l, f_u * grow).unwrap() >= s * (1.0 - 1e-12));
        prop_assert!(sigma_from_psd(alpha * grow, beta, f_l, f_u).unwrap() >= s * (1.0 - 1e-12));
    }

    #[test]
    fn depolarized_fidelity_bounded_and_decreasing(q in 0.0..0.5f64, dq in 0.0..0.1f64) {
        let a = clifford_fidelity(&GateSet::depolarized(q)).unwrap();
        let b = clifford_fidelity(&GateSet::depolarized((q + dq).min(0.6))).unwrap();
        prop_assert!((0.5..=1.0).contains(&a.f_cl) && (0.0..=1.0).contains(&a.p_cl));
        prop_assert!(b.f_cl <= a.f_cl + 1e-15);
        for g in ["I", "X90", "Y90", "X180", "Y180"] {
            let label = serde_json::from_value(serde_json::json!(g)).unwrap();
            let ptm = GateSet::depolarized(q).get(label).unwrap().ptm;
            prop_assert_eq!(ptm[0], [1.0, 0.0, 0.0, 0.0]);
            prop_assert!(ptm.iter().flatten().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn best_cost_never_increases(cx in -3.0..3.0f64, cy in -3.0..3.0f64, sx in 0.1..10.0f64, sy in 0.1..10.0f64) {
        let cfg = OptimizerConfig::new(vec![0.0, 0.0], vec![0.4, -0.3]);
        let r = minimize(|x: &[f64]| Ok(sx * (x[0] - cx).powi(2) + sy * (x[1] - cy).powi(2) + x[0] * x[1] * 0.1), &cfg).unwrap();
        prop_assert!(r.best_history.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.best_cost <= r.best_history[0]);
        prop_assert!(!r.trajectory.is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn streams_are_bit_exact_per_seed(seed in any::<u64>(), n_shots in 2usize..600, restless in any::<bool>(), a_g in 0.9..1.1f64) {
        let mode = if restless { Mode::Restless } else { Mode::Conventional };
        let ctx = SimContext { n_sequences: 5, ..SimContext::new(PhysicsConfig::default(), seed) };
        let seqs = ctx.sequences(30, mode).unwrap();
        let p = PulseParams { a_g, ..ctx.physics.opt };
        let a = run_stream(&seqs, &p, &ctx.physics, n_shots, mode, seed).unwrap();
        let b = run_stream(&seqs, &p, &ctx.physics, n_shots, mode, seed).unwrap();
        prop_assert_eq!(a.bits.len(), n_shots);
        prop_assert_eq!(&a, &b);
        let c = epsilon(&a).unwrap();
        prop_assert!((0.0..=1.0).contains(&c.epsilon));
        prop_assert_eq!(c.epsilon, c.errors as f64 / n_shots as f64);
        prop_assert!(c.errors <= n_shots as u64);
    }
}

#[test]
fn restless_cost_rises_with_flip_probability() {
    let ctx = SimContext::new(PhysicsConfig::default(), 5);
    let seqs = ctx.sequences(100, Mode::Restless).unwrap();
    let mut last = 0.0;
    for (i, a_g) in [1.0, 1.01, 1.02, 1.03, 1.05, 1.08].into_iter().enumerate() {
        let p = PulseParams { a_g, ..ctx.physics.opt };
        let mean = (0..20)
            .map(|r| ctx.measure(&seqs, &p, Mode::Restless, derive_seed(5, purpose::STREAM, (i * 100 + r) as u64)).unwrap().epsilon)
            .sum::<f64>()
            / 20.0;
        assert!(mean > last, "a_g = {a_g}: {mean} after {last}");
        last = mean;
    }
}

#[test]
fn both_modes_tune_to_the_same_fidelity() {
    let ctx = SimContext::new(PhysicsConfig::default(), 2);
    let settings = TuneupSettings::default();
    let mut f = [Vec::new(), Vec::new()];
    let mut stderr = Vec::new();
    for (i, start) in standard_starts(&ctx.physics.opt).into_iter().enumerate() {
        let seed = derive_seed(2, purpose::TUNEUP, i as u64);
        for (k, mode) in [Mode::Restless, Mode::Conventional].into_iter().enumerate() {
            let fit = two_step_tuneup(&ctx, &settings, start, mode, 2, seed).unwrap().crb.unwrap();
            f[k].push(fit.f_cl);
            stderr.push(fit.f_cl_stderr);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (fr, fc, u) = (mean(&f[0]), mean(&f[1]), mean(&stderr));
    assert!((fr - fc).abs() < u, "restless {fr} vs conventional {fc}, fit uncertainty {u}");
}

#[test]
fn restless_iterations_are_much_cheaper() {
    let ctx = SimContext::new(PhysicsConfig::default(), 0);
    let bars = timing_breakdown(&ctx, 300);
    let total = |p: &str, m: Mode| bars.iter().find(|b| b.pipeline == p && b.mode == m).unwrap().total;
    assert!(total("improved", Mode::Conventional) / total("improved", Mode::Restless) >= 8.0);
}
