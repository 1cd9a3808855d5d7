//! Run configuration read from TOML. Every key is listed here and unknown
//! keys are rejected, so a misspelt option fails instead of silently
//! falling back to a default.

use std::f64::consts::PI;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ricci4::ansatz::{ConformalProfile, Profile, SquashShape, SquashedProfile};
use ricci4::flow::{FlowConfig, FlowTolerances, Normalization};
use ricci4::functionals::FunctionalConfig;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ansatz {
    /// `dr² + a(r)²σ₁² + b(r)²(σ₂² + σ₃²)` perturbed from the round sphere.
    Squashed,
    /// `e^{2w(θ)}` times the round metric.
    Conformal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    SinSq,
    Sin4,
    /// `cos θ`; conformal ansatz only.
    Cos,
    /// Five modes with coefficients drawn from `--seed`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ansatz: Ansatz,
    #[serde(rename = "N")]
    pub n: usize,
    /// Single perturbation amplitude for `flow`.
    #[serde(default)]
    pub amplitude: Option<f64>,
    /// Amplitudes for `sweep`.
    #[serde(default)]
    pub amplitudes: Option<Vec<f64>>,
    pub shape: Shape,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(rename = "T")]
    pub t_max: f64,
    /// Time between samples; defaults to `T/100`.
    #[serde(default)]
    pub sample: Option<f64>,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(rename = "p-list", default = "default_p")]
    pub p_list: Vec<f64>,
    #[serde(default = "default_a")]
    pub a: f64,
    /// Relative per-sample slack of the monotonicity monitor.
    #[serde(default = "default_slack")]
    pub slack: f64,
    /// Stop once `sup K · Vol^{1/2}` falls below this value; `0` disables.
    #[serde(rename = "converge-k", default = "default_converge")]
    pub converge_k: f64,
}

fn default_cfl() -> f64 {
    0.1
}

fn default_p() -> Vec<f64> {
    vec![2.0]
}

fn default_a() -> f64 {
    1e-6
}

fn default_slack() -> f64 {
    1e-6
}

/// Above the round-off floor of `K` on a discrete round sphere, which
/// grows like `N⁴` and reaches about 1e-6 at `N = 257`.
fn default_converge() -> f64 {
    1e-5
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    fn validate(&self) -> Result<()> {
        if self.n < 33 || self.n.is_multiple_of(2) {
            bail!("N = {} must be odd and at least 33", self.n);
        }
        if self.ansatz == Ansatz::Squashed && self.shape == Shape::Cos {
            bail!("shape `cos` does not vanish at the poles and is only allowed for the conformal ansatz");
        }
        let amps = self.amplitude.iter().chain(self.amplitudes.iter().flatten());
        if let Some(a) = amps.clone().find(|a| !a.is_finite()) {
            bail!("amplitude {a} is not finite");
        }
        self.flow_config().validate()?;
        self.functional_config().validate()?;
        if !(self.slack >= 0.0 && self.slack.is_finite()) {
            bail!("slack = {} must be non-negative", self.slack);
        }
        Ok(())
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            cfl: self.cfl,
            t_max: self.t_max,
            sample_interval: self.sample.unwrap_or(self.t_max / 100.0),
            normalization: self.normalization,
            tolerances: FlowTolerances {
                converge_k: (self.converge_k > 0.0).then_some(self.converge_k),
                ..FlowTolerances::default()
            },
            ..FlowConfig::default()
        }
    }

    pub fn functional_config(&self) -> FunctionalConfig {
        FunctionalConfig { p: self.p_list.clone(), a: self.a, ..FunctionalConfig::default() }
    }

    pub fn single_amplitude(&self) -> Result<f64> {
        match (self.amplitude, &self.amplitudes) {
            (Some(a), None) => Ok(a),
            (Some(_), Some(_)) => bail!("give either `amplitude` or `amplitudes`, not both"),
            (None, Some(_)) => bail!("`flow` takes a single `amplitude`; use `sweep` for a list"),
            (None, None) => Ok(0.0),
        }
    }

    pub fn sweep_amplitudes(&self) -> Result<Vec<f64>> {
        match (&self.amplitudes, self.amplitude) {
            (Some(list), None) if !list.is_empty() => Ok(list.clone()),
            (Some(_), None) => bail!("`amplitudes` is empty"),
            (Some(_), Some(_)) => bail!("give either `amplitude` or `amplitudes`, not both"),
            (None, _) => bail!("`sweep` needs an `amplitudes` list"),
        }
    }

    /// The initial profile for one amplitude.
    pub fn profile(&self, amplitude: f64, seed: u64) -> Result<Profile> {
        let modes = || {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|k| rng.random_range(-1.0..1.0) / (1.0 + k as f64)).collect::<Vec<f64>>()
        };
        Ok(match self.ansatz {
            Ansatz::Squashed => {
                let shape = match self.shape {
                    Shape::SinSq => SquashShape::SinSq,
                    Shape::Sin4 => SquashShape::Sin4,
                    Shape::Random => SquashShape::Modes(modes()),
                    Shape::Cos => unreachable!("rejected by validation"),
                };
                SquashedProfile::round(self.n, 1.0)?.perturb_squash(amplitude, &shape)?.into()
            }
            Ansatz::Conformal => {
                let c = modes();
                let f = move |u: f64| -> f64 {
                    match self.shape {
                        Shape::SinSq => u.sin().powi(2),
                        Shape::Sin4 => u.sin().powi(4),
                        Shape::Cos => u.cos(),
                        Shape::Random => c.iter().enumerate().map(|(k, ck)| ck * (k as f64 * u).cos()).sum(),
                    }
                };
                ConformalProfile::from_fn(self.n, |u| amplitude * f(u.clamp(0.0, PI)))?.into()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
ansatz = "squashed"
N = 65
amplitude = 0.02
shape = "sin-sq"
T = 0.5
"p-list" = [2.0, 2.25]
"#;

    #[test]
    fn parses_documented_keys_with_defaults() {
        let cfg = RunConfig::from_toml(BASIC).unwrap();
        assert_eq!(cfg.n, 65);
        assert_eq!(cfg.cfl, 0.1);
        assert_eq!(cfg.a, 1e-6);
        assert_eq!(cfg.flow_config().sample_interval, 0.005);
        assert_eq!(cfg.functional_config().p, vec![2.0, 2.25]);
        assert_eq!(cfg.single_amplitude().unwrap(), 0.02);
        assert!(cfg.sweep_amplitudes().is_err());
    }

    #[test]
    fn rejects_unknown_and_misspelt_keys() {
        let err = RunConfig::from_toml(&format!("{BASIC}\namplitdue = 0.1\n")).unwrap_err();
        assert!(err.to_string().contains("amplitdue"), "{err}");
        assert!(RunConfig::from_toml(&BASIC.replace("sin-sq", "sine")).is_err());
    }

    #[test]
    fn rejects_invalid_values() {
        assert!(RunConfig::from_toml(&BASIC.replace("N = 65", "N = 64")).is_err());
        assert!(RunConfig::from_toml(&BASIC.replace("T = 0.5", "T = -1.0")).is_err());
        assert!(RunConfig::from_toml(&BASIC.replace("2.25", "3.0")).is_err());
        assert!(RunConfig::from_toml(&BASIC.replace("sin-sq", "cos")).is_err());
        let conformal = BASIC.replace("squashed", "conformal").replace("sin-sq", "cos");
        assert!(RunConfig::from_toml(&conformal).is_ok());
    }

    #[test]
    fn random_shape_is_reproducible_from_the_seed() {
        let cfg = RunConfig::from_toml(&BASIC.replace("sin-sq", "random")).unwrap();
        let a = cfg.profile(0.02, 5).unwrap();
        assert_eq!(a, cfg.profile(0.02, 5).unwrap());
        assert_ne!(a, cfg.profile(0.02, 6).unwrap());
    }
}
