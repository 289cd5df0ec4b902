use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{DerivativeMode, ExperimentConfig, NoiseSpec};
use crate::plant::{BenchmarkId, InputSignal};
use crate::sosm::SosmParams;
use crate::{Error, Result, Vector};

/// Which plant the experiment runs on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlantSection {
    pub benchmark: BenchmarkId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    /// Initial state of the data-collection experiment.
    pub x0: Vec<f64>,
    #[serde(flatten)]
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub x0: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    /// Threshold on `|sigma|` for the reaching-time metric.
    #[serde(default = "default_sigma_tol")]
    pub sigma_tol: f64,
    /// Keep every `log_stride`-th step in the histories.
    #[serde(default = "default_log_stride")]
    pub log_stride: usize,
}

fn default_sigma_tol() -> f64 {
    1e-2
}

fn default_log_stride() -> usize {
    1
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DesignSection {
    /// Normalize the data before the conic solve.
    #[serde(default)]
    pub prescale: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    /// Artifact directory; nothing is written when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Full description of one pipeline run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Seeds the measurement noise; overrides `experiment.seed`.
    pub seed: u64,
    pub plant: PlantSection,
    pub experiment: ExperimentSection,
    pub controller: SosmParams,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::parse(path, e))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize spec: {e}")))
    }

    /// The collection config with the top-level seed applied.
    pub fn collection_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            seed: self.seed,
            ..self.experiment.config.clone()
        }
    }

    pub fn collection_x0(&self) -> Vector {
        Vector::from_row_slice(&self.experiment.x0)
    }

    pub fn simulation_x0(&self) -> Vector {
        Vector::from_row_slice(&self.simulation.x0)
    }

    /// Checks dimensions and positivity against a plant of order `n`.
    pub fn validate(&self, n: usize) -> Result<Vec<String>> {
        if self.experiment.x0.len() != n {
            return Err(Error::Config(format!(
                "experiment x0 has {} entries for a plant of order {n}",
                self.experiment.x0.len()
            )));
        }
        if self.simulation.x0.len() != n {
            return Err(Error::Config(format!(
                "simulation x0 has {} entries for a plant of order {n}",
                self.simulation.x0.len()
            )));
        }
        let finite = |name: &str, v: &[f64]| {
            if v.iter().all(|x| x.is_finite()) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite")))
            }
        };
        finite("experiment x0", &self.experiment.x0)?;
        finite("simulation x0", &self.simulation.x0)?;
        let sim = &self.simulation;
        if !(sim.dt > 0.0 && sim.dt.is_finite()) {
            return Err(Error::Config(format!(
                "simulation dt must be positive, got {}",
                sim.dt
            )));
        }
        if !(sim.horizon > 0.0 && sim.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "simulation horizon must be positive, got {}",
                sim.horizon
            )));
        }
        if !(sim.sigma_tol > 0.0 && sim.sigma_tol.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_tol must be positive, got {}",
                sim.sigma_tol
            )));
        }
        if sim.log_stride == 0 {
            return Err(Error::Config("log_stride must be at least 1".into()));
        }
        self.controller.validate()?;
        self.collection_config().validate(n)
    }
}

/// Default configuration of a built-in benchmark.
///
/// `b1` uses the reference controller. `b3` keeps the `b1` adaptation rates
/// with its reference differentiator constant and a finer step. `b2` has
/// no reference controller; its data-driven surface is steep enough that the
/// unstable plant needs faster adaptation and a larger differentiator
/// constant.
pub fn default_spec(id: BenchmarkId) -> ExperimentSpec {
    let controller = |lipschitz, eta1, eta2| SosmParams {
        lipschitz,
        eta1,
        eta2,
        gain0: 1.0,
        warmup: 0.0,
    };
    let experiment = |x0: Vec<f64>, tau, samples, input, halfwidth, mode| ExperimentSection {
        x0,
        config: ExperimentConfig {
            t0: 0.0,
            tau,
            samples,
            input,
            noise: NoiseSpec::Uniform { halfwidth },
            derivative_mode: mode,
            seed: 0,
            dt: 1e-4,
        },
    };
    let simulation = |x0: Vec<f64>, horizon, dt, log_stride| SimulationSection {
        x0,
        horizon,
        dt,
        sigma_tol: default_sigma_tol(),
        log_stride,
    };
    let (seed, experiment, controller, simulation) = match id {
        BenchmarkId::B1 => (
            1,
            experiment(
                vec![1.0, 1.0],
                0.1,
                3,
                InputSignal::Cosine {
                    amplitude: 0.1,
                    frequency: 1.0,
                },
                0.5,
                DerivativeMode::ForwardDifference,
            ),
            controller(300.0, 30.0, 15.0),
            simulation(vec![5.0, -5.0], 20.0, 1e-4, 10),
        ),
        BenchmarkId::B2 => (
            0,
            experiment(
                vec![2.0, 3.0],
                0.5,
                3,
                InputSignal::Feedback {
                    gains: vec![-2.0, -1.0],
                },
                1.0,
                DerivativeMode::ExactPlusNoise,
            ),
            controller(3e4, 3000.0, 1500.0),
            simulation(vec![8.0, -4.0], 20.0, 1e-4, 10),
        ),
        BenchmarkId::B3 => (
            1,
            experiment(
                vec![7.0, -7.0, 3.5, -3.5],
                0.5,
                15,
                InputSignal::Sine {
                    amplitude: -1.0,
                    frequency: 1.0,
                },
                0.1,
                DerivativeMode::ExactPlusNoise,
            ),
            controller(3e5, 30.0, 15.0),
            SimulationSection {
                sigma_tol: 1.0,
                ..simulation(vec![1e5, -1e5, 5e4, -5e4], 20.0, 1e-5, 100)
            },
        ),
    };
    ExperimentSpec {
        seed,
        plant: PlantSection { benchmark: id },
        experiment,
        controller,
        simulation,
        design: DesignSection::default(),
        output: OutputSection::default(),
    }
}
