use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig1Maps,
    Fig1dScaling,
    Fig2Region,
    Fig3Eigenmaps,
    Fig3Trajectories,
    Fig3Hardware,
    Fig4Tomography,
    Sweep,
    OracleCheck,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fig1Maps => "fig1_maps",
            Self::Fig1dScaling => "fig1d_scaling",
            Self::Fig2Region => "fig2_region",
            Self::Fig3Eigenmaps => "fig3_eigenmaps",
            Self::Fig3Trajectories => "fig3_trajectories",
            Self::Fig3Hardware => "fig3_hardware",
            Self::Fig4Tomography => "fig4_tomography",
            Self::Sweep => "sweep",
            Self::OracleCheck => "oracle_check",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Config file as written on disk.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub params: Option<serde_json::Value>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: Params,
    pub output_dir: PathBuf,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Params {
    Fig1Maps(Fig1Maps),
    Fig1dScaling(Fig1dScaling),
    Fig2Region(Fig2Region),
    Fig3Eigenmaps(Fig3Eigenmaps),
    Fig3Trajectories(Fig3Trajectories),
    Fig3Hardware(Fig3Hardware),
    Fig4Tomography(Fig4Tomography),
    Sweep(Sweep),
    OracleCheck(OracleCheck),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1Maps {
    pub comb_sizes: Vec<usize>,
    pub theta_points: usize,
    pub beta_points: usize,
    pub beta_max: f64,
    /// Phase of the initial excited-state amplitude is `−gamma`.
    pub gamma: f64,
    pub phi: f64,
}

impl Default for Fig1Maps {
    fn default() -> Self {
        Self { comb_sizes: vec![1, 2, 10], theta_points: 101, beta_points: 101, beta_max: PI, gamma: -FRAC_PI_2, phi: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1dScaling {
    pub sizes: Vec<usize>,
    pub grid: usize,
    pub gamma: f64,
    /// Smallest `N` entering the slope fit.
    pub fit_min_n: usize,
}

impl Default for Fig1dScaling {
    fn default() -> Self {
        Self {
            sizes: vec![1, 2, 3, 5, 10, 20, 50, 100, 200, 500, 1000],
            grid: 51,
            gamma: -FRAC_PI_2,
            fit_min_n: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Region {
    pub gamma_ratios: Vec<f64>,
    pub points: usize,
    pub sphere_samples: usize,
    pub tolerance: f64,
}

impl Default for Fig2Region {
    fn default() -> Self {
        Self { gamma_ratios: vec![0.03, 0.3, 3.0], points: 20_000, sphere_samples: 200, tolerance: 0.02 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Eigenmaps {
    pub inorm_points: usize,
    pub beta_points: usize,
    pub beta_max: f64,
    pub gamma_e: f64,
    pub gamma_0: f64,
}

impl Default for Fig3Eigenmaps {
    fn default() -> Self {
        Self { inorm_points: 101, beta_points: 101, beta_max: PI, gamma_e: 1.0, gamma_0: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryCase {
    pub label: String,
    pub i1_abs: f64,
    pub theta1: f64,
    pub i2_abs: f64,
    pub theta2: f64,
    #[serde(default = "ground")]
    pub initial: [f64; 3],
    #[serde(default)]
    pub beta: Option<f64>,
}

fn ground() -> [f64; 3] {
    [0.0, 0.0, -1.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LockRun {
    pub g1: f64,
    pub i2_abs: f64,
    pub kappas: Vec<f64>,
    pub theta2_0: f64,
    pub r0: f64,
    pub theta0: f64,
    /// Duration in relaxation times `1/(2 g₁ |I₂|)`.
    pub duration: f64,
    pub dt: f64,
    pub record_every: usize,
}

impl Default for LockRun {
    fn default() -> Self {
        Self {
            g1: 1.0,
            i2_abs: 1.0,
            kappas: vec![0.5, 1.5],
            theta2_0: 0.0,
            r0: 1.0,
            theta0: 0.3,
            duration: 30.0,
            dt: 1e-3,
            record_every: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Trajectories {
    pub beta: f64,
    pub gamma_e: f64,
    pub gamma_0: f64,
    /// Length of each trajectory in Rabi periods.
    pub periods: f64,
    pub samples: usize,
    pub cases: Vec<TrajectoryCase>,
    pub lock: LockRun,
}

impl Default for Fig3Trajectories {
    fn default() -> Self {
        let theta_case = |label: &str, theta1: f64| TrajectoryCase {
            label: label.into(),
            i1_abs: 1.0,
            theta1,
            i2_abs: 0.0,
            theta2: 0.0,
            initial: ground(),
            beta: None,
        };
        Self {
            beta: 1e-3,
            gamma_e: 1.0,
            gamma_0: 0.0,
            periods: 1.0,
            samples: 400,
            cases: vec![
                theta_case("theta1=0", 0.0),
                theta_case("theta1=pi/4", PI / 4.0),
                theta_case("theta1=pi/2", FRAC_PI_2),
                theta_case("theta1=3pi/4", 3.0 * PI / 4.0),
            ],
            lock: LockRun::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig3Hardware {
    pub presets: Vec<String>,
    pub beta_points: usize,
    pub periods: f64,
    pub samples_per_period: usize,
    pub i1_abs: f64,
    pub i2_abs: f64,
    pub min_rebound: f64,
}

impl Default for Fig3Hardware {
    fn default() -> Self {
        Self {
            presets: vec!["wse2_hbn".into(), "sc_qubit".into()],
            beta_points: 200,
            periods: 3.0,
            samples_per_period: 100,
            i1_abs: 1.0,
            i2_abs: 1.0,
            min_rebound: 0.02,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Tomography {
    /// Bloch vector of the probed emitter.
    pub state: [f64; 3],
    pub beta: f64,
    /// Central and side peak weights of the modulated probe.
    pub f0: f64,
    pub f1: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// Electrons per spectrum; expectation values when absent.
    pub shots: Option<u64>,
}

impl Default for Fig4Tomography {
    fn default() -> Self {
        Self { state: [0.4, -0.3, 0.5], beta: 0.5, f0: 1.0, f1: 1.0, phi1: 0.0, phi2: FRAC_PI_2, shots: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Beta,
    GammaE,
    #[serde(rename = "gamma_0")]
    Gamma0,
    I1Abs,
    Theta1,
    I2Abs,
    Theta2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub log: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveBase {
    pub beta: f64,
    pub gamma_e: f64,
    pub gamma_0: f64,
    pub i1_abs: f64,
    pub theta1: f64,
    pub i2_abs: f64,
    pub theta2: f64,
}

impl Default for DriveBase {
    fn default() -> Self {
        Self { beta: 0.1, gamma_e: 1.0, gamma_0: 0.01, i1_abs: 1.0, theta1: 0.0, i2_abs: 1.0, theta2: 0.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub range: SweepRange,
    #[serde(default)]
    pub base: DriveBase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCheck {
    pub betas: Vec<f64>,
    pub chirp: f64,
    pub steps: usize,
    /// Extra slots around the padded comb window; negative values shrink it.
    pub window_pad: i64,
    pub state: [f64; 3],
    /// Real peak profile of the comb, placed at indices `0..len`.
    pub profile: Vec<f64>,
    pub phi: f64,
}

impl Default for OracleCheck {
    fn default() -> Self {
        Self {
            betas: vec![0.05, 0.1, 0.2, 0.3, 0.5],
            chirp: 2.0,
            steps: 20_000,
            window_pad: 0,
            state: [0.3, -0.2, 0.6],
            profile: vec![0.7, 1.0, 0.7],
            phi: 0.3,
        }
    }
}

fn parse_params<T: DeserializeOwned + Default>(v: Option<serde_json::Value>) -> Result<T, RunError> {
    match v {
        None => Ok(T::default()),
        Some(v) => serde_json::from_value(v).map_err(|e| RunError::Schema(format!("params: {e}"))),
    }
}

fn parse_required<T: DeserializeOwned>(v: Option<serde_json::Value>) -> Result<T, RunError> {
    let v = v.ok_or_else(|| RunError::Schema("params: missing table".into()))?;
    serde_json::from_value(v).map_err(|e| RunError::Schema(format!("params: {e}")))
}

fn schema(cond: bool, msg: impl FnOnce() -> String) -> Result<(), RunError> {
    if cond {
        Ok(())
    } else {
        Err(RunError::Schema(msg()))
    }
}

impl Params {
    pub fn parse(experiment: Experiment, v: Option<serde_json::Value>) -> Result<Self, RunError> {
        let p = match experiment {
            Experiment::Fig1Maps => Self::Fig1Maps(parse_params(v)?),
            Experiment::Fig1dScaling => Self::Fig1dScaling(parse_params(v)?),
            Experiment::Fig2Region => Self::Fig2Region(parse_params(v)?),
            Experiment::Fig3Eigenmaps => Self::Fig3Eigenmaps(parse_params(v)?),
            Experiment::Fig3Trajectories => Self::Fig3Trajectories(parse_params(v)?),
            Experiment::Fig3Hardware => Self::Fig3Hardware(parse_params(v)?),
            Experiment::Fig4Tomography => Self::Fig4Tomography(parse_params(v)?),
            Experiment::Sweep => Self::Sweep(parse_required(v)?),
            Experiment::OracleCheck => Self::OracleCheck(parse_params(v)?),
        };
        p.check()?;
        Ok(p)
    }

    /// Range checks that serde cannot express.
    fn check(&self) -> Result<(), RunError> {
        match self {
            Self::Fig1Maps(p) => {
                schema(!p.comb_sizes.is_empty() && p.comb_sizes.iter().all(|&n| n >= 1), || {
                    "params.comb_sizes: need at least one size >= 1".into()
                })?;
                schema(p.theta_points >= 2 && p.beta_points >= 2, || "params: grids need >= 2 points".into())
            }
            Self::Fig1dScaling(p) => {
                schema(!p.sizes.is_empty() && p.sizes.iter().all(|&n| n >= 1), || {
                    "params.sizes: need at least one size >= 1".into()
                })?;
                schema(p.grid >= 2, || "params.grid: need >= 2".into())
            }
            Self::Fig2Region(p) => {
                schema(p.gamma_ratios.iter().all(|&r| r >= 0.0), || "params.gamma_ratios: must be >= 0".into())?;
                schema(p.points >= 1 && p.sphere_samples >= 1, || "params: points and sphere_samples must be >= 1".into())
            }
            Self::Fig3Eigenmaps(p) => {
                schema(p.inorm_points >= 2 && p.beta_points >= 2, || "params: grids need >= 2 points".into())?;
                schema(p.gamma_e > 0.0 && p.gamma_0 >= 0.0, || "params: need gamma_e > 0, gamma_0 >= 0".into())
            }
            Self::Fig3Trajectories(p) => {
                schema(p.samples >= 1 && p.periods > 0.0, || "params: samples and periods must be positive".into())?;
                schema(p.lock.dt > 0.0 && p.lock.record_every >= 1, || "params.lock: dt and record_every must be positive".into())
            }
            Self::Fig3Hardware(p) => {
                for name in &p.presets {
                    schema(eqlab_core::dynamics::HardwarePreset::by_name(name).is_some(), || {
                        format!("params.presets: unknown preset `{name}` (expected wse2_hbn or sc_qubit)")
                    })?;
                }
                schema(p.beta_points >= 2 && p.samples_per_period >= 4, || {
                    "params: beta_points >= 2 and samples_per_period >= 4 required".into()
                })
            }
            Self::Fig4Tomography(p) => {
                schema(p.shots != Some(0), || "params.shots: must be positive".into())?;
                schema(p.f0 > 0.0 && p.f1 > 0.0, || "params: f0 and f1 must be positive".into())
            }
            Self::Sweep(p) => {
                schema(p.range.points >= 1, || "params.range.points: must be >= 1".into())?;
                schema(!p.range.log || (p.range.start > 0.0 && p.range.stop > 0.0), || {
                    "params.range: log spacing needs positive bounds".into()
                })
            }
            Self::OracleCheck(p) => {
                schema(!p.betas.is_empty() && p.steps >= 1, || "params: need betas and steps >= 1".into())?;
                schema(p.profile.iter().any(|&f| f != 0.0), || "params.profile: comb is empty".into())
            }
        }
    }
}

/// Values given on the command line; they take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn read_raw(path: &Path) -> Result<RawConfig, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::Schema(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Schema(format!("{}: {e}", path.display())))
}

fn default_out_root() -> PathBuf {
    std::env::var_os("EQLAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("eqlab-out"))
}

/// Merges flags, file and defaults in that order of precedence.
pub fn resolve(experiment: Experiment, raw: Option<RawConfig>, flags: &Overrides) -> Result<ExperimentConfig, RunError> {
    let (params, file_out, file_seed) = match raw {
        Some(r) => {
            if r.experiment != experiment {
                return Err(RunError::Schema(format!(
                    "experiment: config is for `{}` but `{experiment}` was requested",
                    r.experiment
                )));
            }
            (r.params, r.output_dir, r.seed)
        }
        None => (None, None, None),
    };
    let params = Params::parse(experiment, params)?;
    let output_dir = flags
        .out
        .clone()
        .or(file_out)
        .unwrap_or_else(|| default_out_root().join(experiment.name()));
    let seed = flags.seed.or(file_seed).unwrap_or(0);
    Ok(ExperimentConfig { experiment, params, output_dir, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(json: &str) -> Result<RawConfig, serde_json::Error> {
        serde_json::from_str(json)
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = raw(r#"{"experiment": "fig1_maps", "colour": 1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"));
        let e = raw(r#"{"experiment": "fig9"}"#).unwrap_err();
        assert!(e.to_string().contains("fig9"));
        let r = raw(r#"{"experiment": "fig1_maps", "params": {"comb_size": [1]}}"#).unwrap();
        let e = resolve(Experiment::Fig1Maps, Some(r), &Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("comb_size"), "{e}");
    }

    #[test]
    fn sweep_requires_parameter() {
        let r = raw(r#"{"experiment": "sweep", "params": {"range": {"start": 0, "stop": 1, "points": 3}}}"#).unwrap();
        let e = resolve(Experiment::Sweep, Some(r), &Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("parameter"), "{e}");
        assert!(resolve(Experiment::Sweep, None, &Overrides::default()).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let r = raw(r#"{"experiment": "fig2_region", "seed": 3, "output_dir": "a"}"#).unwrap();
        let flags = Overrides { seed: Some(9), out: Some("b".into()) };
        let c = resolve(Experiment::Fig2Region, Some(r.clone()), &flags).unwrap();
        assert_eq!((c.seed, c.output_dir), (9, PathBuf::from("b")));
        let c = resolve(Experiment::Fig2Region, Some(r), &Overrides::default()).unwrap();
        assert_eq!((c.seed, c.output_dir), (3, PathBuf::from("a")));
    }

    #[test]
    fn mismatched_experiment_rejected() {
        let r = raw(r#"{"experiment": "fig2_region"}"#).unwrap();
        assert!(matches!(resolve(Experiment::Sweep, Some(r), &Overrides::default()), Err(RunError::Schema(_))));
    }

    #[test]
    fn range_checks() {
        let r = raw(r#"{"experiment": "fig3_hardware", "params": {"presets": ["moon"]}}"#).unwrap();
        let e = resolve(Experiment::Fig3Hardware, Some(r), &Overrides::default()).unwrap_err();
        assert!(e.to_string().contains("moon"));
    }
}
