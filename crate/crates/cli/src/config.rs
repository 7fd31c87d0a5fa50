//! Experiment configuration: one TOML document, every key optional.

use std::path::{Path, PathBuf};

use restless_core::experiments::{SimContext, SCORING_LENGTHS};
use restless_core::shots::Mode;
use restless_core::transmon::PhysicsConfig;
use restless_core::tuneup::TuneupSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// Shots per cost evaluation.
    pub n_shots: usize,
    /// Random sequences per evaluation.
    pub n_sequences: usize,
    pub mode: Mode,
    pub out_dir: PathBuf,
    pub physics: PhysicsConfig,
    pub tuneup: TuneupConfig,
    pub rb: RbConfig,
    pub landscape: LandscapeConfig,
    pub snr: SnrConfig,
    pub psd: PsdConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 1,
            n_shots: 8000,
            n_sequences: 200,
            mode: Mode::Restless,
            out_dir: PathBuf::from("out"),
            physics: PhysicsConfig::default(),
            tuneup: TuneupConfig::default(),
            rb: RbConfig::default(),
            landscape: LandscapeConfig::default(),
            snr: SnrConfig::default(),
            psd: PsdConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneupConfig {
    /// 2 (amplitudes) or 3 (plus detuning).
    pub n_params: usize,
    /// Indices into the four standard starting points.
    pub starts: Vec<usize>,
    /// Starting detunings (Hz) crossed with `starts` for 3-parameter runs.
    pub start_detunings: Vec<f64>,
    pub optimizer: TuneupSettings,
}

impl Default for TuneupConfig {
    fn default() -> Self {
        TuneupConfig {
            n_params: 2,
            starts: vec![0, 1, 2, 3],
            start_detunings: vec![250e3, -250e3],
            optimizer: TuneupSettings::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RbConfig {
    pub n_cl: Vec<usize>,
    pub repetitions: usize,
}

impl Default for RbConfig {
    fn default() -> Self {
        RbConfig {
            n_cl: SCORING_LENGTHS.to_vec(),
            repetitions: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.min];
        }
        (0..self.points)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeConfig {
    pub a_g: Axis,
    pub a_d: Axis,
    pub n_cl: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            a_g: Axis {
                min: 0.94,
                max: 1.06,
                points: 13,
            },
            a_d: Axis {
                min: 0.25,
                max: 1.0,
                points: 13,
            },
            n_cl: 300,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnrConfig {
    pub f_a: Vec<f64>,
    pub n_cl: Vec<usize>,
    pub repetitions: usize,
    /// Standard deviation of the quasi-static T1 draws, s.
    pub t1_sigma: f64,
    /// Mean T1 for the scan, s.
    pub t1_mean: f64,
}

impl Default for SnrConfig {
    fn default() -> Self {
        SnrConfig {
            f_a: vec![0.989, 0.996, 0.998],
            n_cl: vec![1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000],
            repetitions: 50,
            t1_sigma: 1.95e-6,
            t1_mean: 21.6e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsdConfig {
    /// T1 series CSV `(time_s, t1_s)`; synthesized when absent.
    pub input: Option<PathBuf>,
    pub dt: f64,
    pub n_samples: usize,
    pub segment_len: usize,
    /// Integration band for the T1 standard deviation, Hz.
    pub f_low: f64,
    pub f_high: f64,
}

impl Default for PsdConfig {
    fn default() -> Self {
        PsdConfig {
            input: None,
            dt: 2.0,
            n_samples: 1 << 14,
            segment_len: 21,
            f_low: 1.0 / 3.7,
            f_high: 1.0 / 0.074,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let err = |key: &str, msg: String| Err(format!("{key}: {msg}"));
        self.context().validate().map_err(|e| format!("physics: {e}"))?;
        let t = &self.tuneup;
        if !(t.n_params == 2 || t.n_params == 3) {
            return err("tuneup.n_params", format!("must be 2 or 3, got {}", t.n_params));
        }
        if t.starts.is_empty() || t.starts.iter().any(|&s| s > 3) {
            return err("tuneup.starts", "need indices in 0..=3".into());
        }
        if t.n_params == 3 && t.start_detunings.is_empty() {
            return err("tuneup.start_detunings", "need at least one value for 3 parameters".into());
        }
        if t.optimizer.max_evaluations_per_stage < 4 {
            return err("tuneup.optimizer.max_evaluations_per_stage", "must be at least 4".into());
        }
        let mut lengths = self.rb.n_cl.clone();
        lengths.sort_unstable();
        lengths.dedup();
        if lengths.len() < 3 {
            return err("rb.n_cl", "need at least 3 distinct lengths".into());
        }
        if self.rb.repetitions == 0 {
            return err("rb.repetitions", "must be positive".into());
        }
        for (key, axis) in [("landscape.a_g", &self.landscape.a_g), ("landscape.a_d", &self.landscape.a_d)] {
            if axis.points == 0 || !(axis.min <= axis.max) || (axis.points > 1 && axis.min == axis.max) {
                return err(key, format!("invalid axis {axis:?}"));
            }
        }
        if self.landscape.a_g.min <= 0.0 {
            return err("landscape.a_g.min", "amplitudes must be positive".into());
        }
        if self.snr.f_a.iter().any(|f| !(*f > 0.5 && *f < 1.0)) {
            return err("snr.f_a", "fidelities must lie in (0.5, 1)".into());
        }
        if self.snr.n_cl.is_empty() || self.snr.repetitions < 2 {
            return err("snr", "need a non-empty n_cl grid and at least 2 repetitions".into());
        }
        if !(self.snr.t1_sigma >= 0.0 && self.snr.t1_mean > 0.0) {
            return err("snr.t1_sigma", "need t1_sigma >= 0 and t1_mean > 0".into());
        }
        let p = &self.psd;
        if !(p.dt > 0.0) || p.segment_len < 2 || p.n_samples < p.segment_len {
            return err("psd", "need dt > 0, segment_len >= 2 and n_samples >= segment_len".into());
        }
        if !(p.f_low > 0.0 && p.f_high > p.f_low) {
            return err("psd.f_low", "need 0 < f_low < f_high".into());
        }
        Ok(())
    }

    pub fn context(&self) -> SimContext {
        SimContext {
            physics: self.physics.clone(),
            n_shots: self.n_shots,
            n_sequences: self.n_sequences,
            master_seed: self.master_seed,
        }
    }

    /// SHA-256 of the canonical JSON form. The output directory is not part
    /// of the experiment and is left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out_dir = PathBuf::new();
        let json = serde_json::to_string(&c).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let e = ExperimentConfig::from_toml("master_seed = 3\n\n[physics]\nt1_mena = 2e-5\n").unwrap_err();
        assert!(e.contains("t1_mena"), "{e}");
        assert!(e.contains("line 4") || e.contains(":4:") || e.contains("4 |"), "{e}");
    }

    #[test]
    fn hash_ignores_out_dir_but_not_physics() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig {
            out_dir: "elsewhere".into(),
            ..a.clone()
        };
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.physics.p_s_c = 0.01;
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn validation_names_the_key() {
        let mut cfg = ExperimentConfig::default();
        cfg.rb.n_cl = vec![1, 1, 2];
        assert!(cfg.validate().unwrap_err().starts_with("rb.n_cl"));
    }

    #[test]
    fn shipped_example_parses() {
        let text = include_str!("../../../configs/example.toml");
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.validate().unwrap();
    }
}
