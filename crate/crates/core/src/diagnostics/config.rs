//! Flat, dotted-key configuration shared by every experiment.

use std::fmt::Display;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gino::GinoConfig;
use crate::train::{EnergyForm, TrainConfig};

/// Every tunable of the experiment suite. Keys are listed by [`ExperimentConfig::entries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_f: f64,
    pub gino: GinoConfig,
    pub train: TrainConfig,
    pub cnn_plan: Vec<usize>,
    pub cnn_train: TrainConfig,
    pub e2_angles: usize,
    pub e2_inputs: usize,
    pub e3_deltas: Vec<f64>,
    pub e4_resolutions: Vec<usize>,
    pub e4_steps: usize,
    pub e4_samples: usize,
    pub e5_alpha_reg: f64,
    pub e5_steps: usize,
    pub e6a_lambdas: Vec<f64>,
    pub e6a_seeds: Vec<u64>,
    pub e6a_steps: usize,
    pub e6b_weights: Vec<f64>,
    pub e6b_seeds: Vec<u64>,
    pub e6b_steps: usize,
    pub bounds_samples: usize,
    pub bounds_beta: f64,
    pub bounds_s: f64,
    pub bounds_gamma: f64,
    pub bounds_steps: usize,
    pub bounds_fault: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig {
            lr: 5e-3,
            batch: 8,
            energy_weight: 1.0,
            energy_form: EnergyForm::Squared,
            ..TrainConfig::default()
        };
        let cnn_train = TrainConfig {
            steps: 300,
            batch: 8,
            eval_every: 50,
            eval_batch: 16,
            ..TrainConfig::cnn()
        };
        Self {
            seed: 0,
            n: 64,
            alpha: 1.0,
            beta: 2.0,
            lambda_f: 100.0,
            gino: GinoConfig::default(),
            train,
            cnn_plan: crate::cnn::DEFAULT_PLAN.to_vec(),
            cnn_train,
            e2_angles: 32,
            e2_inputs: 16,
            e3_deltas: (0..=6).map(|i| 0.05 * i as f64).collect(),
            e4_resolutions: vec![32, 64, 128],
            e4_steps: 600,
            e4_samples: 16,
            e5_alpha_reg: 0.025,
            e5_steps: 2000,
            e6a_lambdas: vec![25.0, 50.0, 100.0, 200.0, 400.0],
            e6a_seeds: vec![0],
            e6a_steps: 2000,
            e6b_weights: vec![0.0, 1e-4, 1e-2],
            e6b_seeds: vec![0, 1, 2],
            e6b_steps: 1500,
            bounds_samples: 64,
            bounds_beta: 4.0,
            bounds_s: 0.0,
            bounds_gamma: 2.0,
            bounds_steps: 300,
            bounds_fault: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn energy_form_name(f: EnergyForm) -> &'static str {
    match f {
        EnergyForm::Bilinear => "bilinear",
        EnergyForm::Squared => "squared",
    }
}

fn set_train(t: &mut TrainConfig, field: &str, key: &str, value: &str) -> Result<()> {
    match field {
        "steps" => t.steps = parse(key, value)?,
        "batch" => t.batch = parse(key, value)?,
        "lr" => t.lr = parse(key, value)?,
        "weight_decay" => t.weight_decay = parse(key, value)?,
        "clip_norm" => t.clip_norm = parse(key, value)?,
        "eval_every" => t.eval_every = parse(key, value)?,
        "energy_weight" => t.energy_weight = parse(key, value)?,
        "energy_form" => t.energy_form = value.trim().parse()?,
        "smooth_weight" => t.smooth_weight = parse(key, value)?,
        "eval_batch" => t.eval_batch = parse(key, value)?,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "unknown config key {key:?}"
            )))
        }
    }
    Ok(())
}

fn train_entries(prefix: &str, t: &TrainConfig, out: &mut Vec<(String, String)>) {
    let mut push = |k: &str, v: String| out.push((format!("{prefix}.{k}"), v));
    push("steps", t.steps.to_string());
    push("batch", t.batch.to_string());
    push("lr", t.lr.to_string());
    push("weight_decay", t.weight_decay.to_string());
    push("clip_norm", t.clip_norm.to_string());
    push("eval_every", t.eval_every.to_string());
    push("energy_weight", t.energy_weight.to_string());
    push("energy_form", energy_form_name(t.energy_form).to_string());
    push("smooth_weight", t.smooth_weight.to_string());
    push("eval_batch", t.eval_batch.to_string());
}

impl ExperimentConfig {
    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = key.trim();
        if let Some(field) = k.strip_prefix("train.") {
            return set_train(&mut self.train, field, k, value);
        }
        if let Some(field) = k.strip_prefix("cnn.") {
            if field == "plan" {
                self.cnn_plan = parse_list(k, value)?;
                return Ok(());
            }
            return set_train(&mut self.cnn_train, field, k, value);
        }
        match k {
            "seed" => self.seed = parse(k, value)?,
            "n" => self.n = parse(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "beta" => self.beta = parse(k, value)?,
            "lambda_f" => self.lambda_f = parse(k, value)?,
            "gino.degree" => self.gino.degree = parse(k, value)?,
            "gino.lambda_max" => self.gino.lambda_max = parse(k, value)?,
            "gino.hidden" => self.gino.hidden = parse(k, value)?,
            "gino.init_gain" => self.gino.init_gain = parse(k, value)?,
            "gino.init_weight_std" => self.gino.init_weight_std = parse(k, value)?,
            "gino.init_coeff_std" => self.gino.init_coeff_std = parse(k, value)?,
            "e2.angles" => self.e2_angles = parse(k, value)?,
            "e2.inputs" => self.e2_inputs = parse(k, value)?,
            "e3.deltas" => self.e3_deltas = parse_list(k, value)?,
            "e4.resolutions" => self.e4_resolutions = parse_list(k, value)?,
            "e4.steps" => self.e4_steps = parse(k, value)?,
            "e4.samples" => self.e4_samples = parse(k, value)?,
            "e5.alpha_reg" => self.e5_alpha_reg = parse(k, value)?,
            "e5.steps" => self.e5_steps = parse(k, value)?,
            "e6a.lambdas" => self.e6a_lambdas = parse_list(k, value)?,
            "e6a.seeds" => self.e6a_seeds = parse_list(k, value)?,
            "e6a.steps" => self.e6a_steps = parse(k, value)?,
            "e6b.weights" => self.e6b_weights = parse_list(k, value)?,
            "e6b.seeds" => self.e6b_seeds = parse_list(k, value)?,
            "e6b.steps" => self.e6b_steps = parse(k, value)?,
            "bounds.samples" => self.bounds_samples = parse(k, value)?,
            "bounds.beta" => self.bounds_beta = parse(k, value)?,
            "bounds.s" => self.bounds_s = parse(k, value)?,
            "bounds.gamma" => self.bounds_gamma = parse(k, value)?,
            "bounds.steps" => self.bounds_steps = parse(k, value)?,
            "bounds.fault" => self.bounds_fault = parse(k, value)?,
            _ => return Err(Error::InvalidParameter(format!("unknown config key {k:?}"))),
        }
        Ok(())
    }

    /// All keys with their current values, in a fixed order.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = vec![
            ("seed".into(), self.seed.to_string()),
            ("n".into(), self.n.to_string()),
            ("alpha".into(), self.alpha.to_string()),
            ("beta".into(), self.beta.to_string()),
            ("lambda_f".into(), self.lambda_f.to_string()),
            ("gino.degree".into(), self.gino.degree.to_string()),
            ("gino.lambda_max".into(), self.gino.lambda_max.to_string()),
            ("gino.hidden".into(), self.gino.hidden.to_string()),
            ("gino.init_gain".into(), self.gino.init_gain.to_string()),
            (
                "gino.init_weight_std".into(),
                self.gino.init_weight_std.to_string(),
            ),
            (
                "gino.init_coeff_std".into(),
                self.gino.init_coeff_std.to_string(),
            ),
        ];
        train_entries("train", &self.train, &mut out);
        out.push(("cnn.plan".into(), join(&self.cnn_plan)));
        train_entries("cnn", &self.cnn_train, &mut out);
        out.extend([
            ("e2.angles".into(), self.e2_angles.to_string()),
            ("e2.inputs".into(), self.e2_inputs.to_string()),
            ("e3.deltas".into(), join(&self.e3_deltas)),
            ("e4.resolutions".into(), join(&self.e4_resolutions)),
            ("e4.steps".into(), self.e4_steps.to_string()),
            ("e4.samples".into(), self.e4_samples.to_string()),
            ("e5.alpha_reg".into(), self.e5_alpha_reg.to_string()),
            ("e5.steps".into(), self.e5_steps.to_string()),
            ("e6a.lambdas".into(), join(&self.e6a_lambdas)),
            ("e6a.seeds".into(), join(&self.e6a_seeds)),
            ("e6a.steps".into(), self.e6a_steps.to_string()),
            ("e6b.weights".into(), join(&self.e6b_weights)),
            ("e6b.seeds".into(), join(&self.e6b_seeds)),
            ("e6b.steps".into(), self.e6b_steps.to_string()),
            ("bounds.samples".into(), self.bounds_samples.to_string()),
            ("bounds.beta".into(), self.bounds_beta.to_string()),
            ("bounds.s".into(), self.bounds_s.to_string()),
            ("bounds.gamma".into(), self.bounds_gamma.to_string()),
            ("bounds.steps".into(), self.bounds_steps.to_string()),
            ("bounds.fault".into(), self.bounds_fault.to_string()),
        ]);
        out
    }

    /// GINO training settings with the run seed applied.
    pub fn gino_train(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train
        }
    }

    /// CNN training settings with the run seed applied.
    pub fn cnn_train(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.cnn_train
        }
    }
}
