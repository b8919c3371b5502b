//! Run configuration: a flat, sectioned `key = value` text format.
//!
//! Keys are either bare robot-parameter names (`mass_kg`, `inertia_kgm2`,
//! ...) or dotted section keys (`ground.k_gz_npm`, `gait.v_ref_mps`,
//! `sim.dt_s`, `opt.n`, ...). Values are numbers, comma-separated number
//! lists, booleans, or bare words; `#` starts a comment. Unknown keys are
//! rejected by name so a typo cannot silently fall back to a default.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

use crate::contact::GroundParams;
use crate::gait::{GaitParams, JointGains};
use crate::model::{EulerAngles, RobotParams};
use crate::sim::SimConfig;
use crate::trajopt::{PenalizeMode, TerminalConditions};

#[derive(Debug, Clone, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Which problem `optimize` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OptProblem {
    Hrom,
    DoubleIntegrator,
}

/// Optimizer section.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptConfig {
    pub problem: OptProblem,
    /// Collocation grid size.
    pub n: usize,
    /// Constraint infinity-norm tolerance.
    pub tol_c: f64,
    /// Stationarity tolerance.
    pub tol_g: f64,
    /// Outer iteration cap.
    pub max_iter: usize,
    /// Inner iterations per outer iteration.
    pub inner_iters: usize,
    /// Bounds on the free final time, s.
    pub tf_bounds: (f64, f64),
    /// Optimization horizon, s; defaults to the simulation duration.
    pub horizon: Option<f64>,
    pub penalize: PenalizeMode,
    pub free_joint_inputs: bool,
    /// Terminal boundary conditions (the initial state is always pinned).
    pub terminal: TerminalConditions,
    /// Attitude weight (Q = q_att·I).
    pub q_att: f64,
    /// Thrust effort weight (R = r_thrust·I).
    pub r_thrust: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            problem: OptProblem::Hrom,
            n: 21,
            tol_c: 1e-4,
            tol_g: 1e-3,
            max_iter: 200,
            inner_iters: 40,
            tf_bounds: (0.5, 10.0),
            horizon: None,
            penalize: PenalizeMode::EdfForces,
            free_joint_inputs: false,
            terminal: TerminalConditions::default(),
            q_att: 50.0,
            r_thrust: 0.05,
        }
    }
}

/// Full run configuration covering every subsystem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub robot: RobotParams,
    pub ground: GroundParams,
    pub gait: GaitParams,
    pub sim: SimConfig,
    pub opt: OptConfig,
    pub out_dir: String,
    /// RNG seed, used only by sampling-based self checks.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            robot: RobotParams::default(),
            ground: GroundParams::default(),
            gait: GaitParams::default(),
            sim: SimConfig::default(),
            opt: OptConfig::default(),
            out_dir: "out".into(),
            seed: 0,
        }
    }
}

fn parse_floats(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| match s {
            "inf" | "+inf" => Ok(f64::INFINITY),
            _ => s.parse::<f64>().map_err(|e| ConfigError::BadValue {
                key: key.into(),
                reason: format!("`{s}`: {e}"),
            }),
        })
        .collect()
}

fn parse_scalar(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = parse_floats(key, value)?;
    if v.len() != 1 {
        return Err(ConfigError::BadValue {
            key: key.into(),
            reason: format!("expected one number, got {}", v.len()),
        });
    }
    Ok(v[0])
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            reason: format!("expected a boolean, got `{value}`"),
        }),
    }
}

fn parse_vec3(key: &str, value: &str) -> Result<Vector3<f64>, ConfigError> {
    let v = parse_floats(key, value)?;
    if v.len() != 3 {
        return Err(ConfigError::BadValue {
            key: key.into(),
            reason: format!("expected 3 numbers, got {}", v.len()),
        });
    }
    Ok(Vector3::new(v[0], v[1], v[2]))
}

fn parse_vec3_or_scalar(key: &str, value: &str) -> Result<Vector3<f64>, ConfigError> {
    let v = parse_floats(key, value)?;
    match v.len() {
        1 => Ok(Vector3::from_element(v[0])),
        3 => Ok(Vector3::new(v[0], v[1], v[2])),
        k => Err(ConfigError::BadValue {
            key: key.into(),
            reason: format!("expected 1 or 3 numbers, got {k}"),
        }),
    }
}

fn parse_per_leg(key: &str, value: &str) -> Result<[Vector3<f64>; 4], ConfigError> {
    let v = parse_floats(key, value)?;
    if v.len() != 12 {
        return Err(ConfigError::BadValue {
            key: key.into(),
            reason: format!("expected 12 numbers (4 legs x xyz), got {}", v.len()),
        });
    }
    Ok(std::array::from_fn(|i| {
        Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2])
    }))
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: lineno + 1,
                    text: line.into(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(ConfigError::DuplicateKey(key));
            }
        }
        Self::from_entries(entries)
    }

    fn from_entries(mut entries: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut take = |key: &str| entries.remove(key);

        // Robot parameters (bare keys).
        if let Some(v) = take("mass_kg") {
            cfg.robot.mass = parse_scalar("mass_kg", &v)?;
        }
        if let Some(v) = take("inertia_kgm2") {
            let nums = parse_floats("inertia_kgm2", &v)?;
            cfg.robot.inertia = match nums.len() {
                3 => Matrix3::from_diagonal(&Vector3::new(nums[0], nums[1], nums[2])),
                9 => Matrix3::from_row_slice(&nums),
                k => {
                    return Err(ConfigError::BadValue {
                        key: "inertia_kgm2".into(),
                        reason: format!("expected 3 (diagonal) or 9 (row-major) numbers, got {k}"),
                    })
                }
            };
        }
        if let Some(v) = take("hip_offsets_m") {
            cfg.robot.hip_offsets = parse_per_leg("hip_offsets_m", &v)?;
        }
        if let Some(v) = take("thruster_positions_m") {
            cfg.robot.thruster_positions = parse_per_leg("thruster_positions_m", &v)?;
        }
        if let Some(v) = take("thruster_axis") {
            cfg.robot.thruster_axis = parse_vec3("thruster_axis", &v)?;
        }
        if let Some(v) = take("max_thrust_per_edf_n") {
            cfg.robot.max_thrust_per_edf = parse_scalar("max_thrust_per_edf_n", &v)?;
        }
        if let Some(v) = take("leg_length_limits_m") {
            let nums = parse_floats("leg_length_limits_m", &v)?;
            if nums.len() != 2 {
                return Err(ConfigError::BadValue {
                    key: "leg_length_limits_m".into(),
                    reason: format!("expected 2 numbers, got {}", nums.len()),
                });
            }
            cfg.robot.leg_length_limits = (nums[0], nums[1]);
        }
        if let Some(v) = take("gravity_mps2") {
            cfg.robot.gravity = parse_vec3("gravity_mps2", &v)?;
        }
        if let Some(v) = take("pitch_guard_rad") {
            cfg.robot.pitch_guard = parse_scalar("pitch_guard_rad", &v)?;
        }

        // Ground.
        if let Some(v) = take("ground.k_gz_npm") {
            cfg.ground.k_gz = parse_scalar("ground.k_gz_npm", &v)?;
        }
        if let Some(v) = take("ground.k_dz_nspm") {
            cfg.ground.k_dz = parse_scalar("ground.k_dz_nspm", &v)?;
        }
        if let Some(v) = take("ground.mu_c") {
            cfg.ground.mu_c = parse_scalar("ground.mu_c", &v)?;
        }
        if let Some(v) = take("ground.mu_s") {
            cfg.ground.mu_s = parse_scalar("ground.mu_s", &v)?;
        }
        if let Some(v) = take("ground.mu_v") {
            cfg.ground.mu_v = parse_scalar("ground.mu_v", &v)?;
        }
        if let Some(v) = take("ground.v_s_mps") {
            cfg.ground.v_s = parse_scalar("ground.v_s_mps", &v)?;
        }
        if let Some(v) = take("ground.path_half_width_m") {
            cfg.ground.path_half_width = parse_scalar("ground.path_half_width_m", &v)?;
        }
        if let Some(v) = take("ground.height_m") {
            cfg.ground.ground_height = parse_scalar("ground.height_m", &v)?;
        }
        if let Some(v) = take("ground.slip_regularization_mps") {
            cfg.ground.slip_regularization = parse_scalar("ground.slip_regularization_mps", &v)?;
        }

        // Gait. The step length is derived, never set directly.
        if let Some(v) = take("gait.v_ref_mps") {
            cfg.gait.forward_velocity = parse_scalar("gait.v_ref_mps", &v)?;
        }
        if let Some(v) = take("gait.step_time_s") {
            cfg.gait.step_time = parse_scalar("gait.step_time_s", &v)?;
        }
        if let Some(v) = take("gait.pause_s") {
            cfg.gait.pause_time = parse_scalar("gait.pause_s", &v)?;
        }
        if let Some(v) = take("gait.step_height_m") {
            cfg.gait.step_height = parse_scalar("gait.step_height_m", &v)?;
        }
        if let Some(v) = take("gait.stance_y_offset_m") {
            cfg.gait.stance_y_offset = parse_scalar("gait.stance_y_offset_m", &v)?;
        }
        if let Some(v) = take("gait.duration_s") {
            cfg.gait.duration = parse_scalar("gait.duration_s", &v)?;
        }
        if let Some(v) = take("gait.body_height_m") {
            cfg.gait.body_height = parse_scalar("gait.body_height_m", &v)?;
        }
        if let Some(v) = take("gait.start_narrow") {
            cfg.gait.start_narrow = parse_bool("gait.start_narrow", &v)?;
        }
        if let Some(v) = take("gait.kp_joint") {
            cfg.sim.joint_gains.kp = parse_scalar("gait.kp_joint", &v)?;
        }
        if let Some(v) = take("gait.kd_joint") {
            cfg.sim.joint_gains.kd = parse_scalar("gait.kd_joint", &v)?;
        }
        if let Some(v) = take("gait.swing_profile") {
            let nums = parse_floats("gait.swing_profile", &v)?;
            if nums.len() != 14 {
                return Err(ConfigError::BadValue {
                    key: "gait.swing_profile".into(),
                    reason: format!(
                        "expected 14 numbers (7 control points x (x frac, z frac)), got {}",
                        nums.len()
                    ),
                });
            }
            cfg.gait.swing_profile = Some(std::array::from_fn(|i| (nums[2 * i], nums[2 * i + 1])));
        }
        cfg.gait.step_length =
            cfg.gait.forward_velocity * (cfg.gait.step_time + cfg.gait.pause_time);

        // Simulation.
        if let Some(v) = take("sim.dt_s") {
            cfg.sim.dt = parse_scalar("sim.dt_s", &v)?;
        }
        if let Some(v) = take("sim.duration_s") {
            cfg.sim.duration = parse_scalar("sim.duration_s", &v)?;
        } else {
            cfg.sim.duration = cfg.gait.duration;
        }
        if let Some(v) = take("sim.kp_att") {
            cfg.sim.kp_att = parse_vec3_or_scalar("sim.kp_att", &v)?;
        }
        if let Some(v) = take("sim.kd_att") {
            cfg.sim.kd_att = parse_vec3_or_scalar("sim.kd_att", &v)?;
        }
        if let Some(v) = take("sim.ref_attitude_rad") {
            let a = parse_vec3("sim.ref_attitude_rad", &v)?;
            cfg.sim.reference_attitude = EulerAngles::new(a.x, a.y, a.z);
        }
        if let Some(v) = take("sim.thrust_ff_weight_fraction") {
            cfg.sim.thrust_ff_fraction = parse_scalar("sim.thrust_ff_weight_fraction", &v)?;
        }

        // Optimizer.
        if let Some(v) = take("opt.problem") {
            cfg.opt.problem = match v.as_str() {
                "hrom" => OptProblem::Hrom,
                "double_integrator" => OptProblem::DoubleIntegrator,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "opt.problem".into(),
                        reason: format!("expected `hrom` or `double_integrator`, got `{other}`"),
                    })
                }
            };
        }
        if let Some(v) = take("opt.n") {
            let n = parse_scalar("opt.n", &v)?;
            if n < 2.0 || n.fract() != 0.0 {
                return Err(ConfigError::BadValue {
                    key: "opt.n".into(),
                    reason: format!("expected an integer >= 2, got {v}"),
                });
            }
            cfg.opt.n = n as usize;
        }
        if let Some(v) = take("opt.tol_c") {
            cfg.opt.tol_c = parse_scalar("opt.tol_c", &v)?;
        }
        if let Some(v) = take("opt.tol_g") {
            cfg.opt.tol_g = parse_scalar("opt.tol_g", &v)?;
        }
        if let Some(v) = take("opt.max_iter") {
            cfg.opt.max_iter = parse_scalar("opt.max_iter", &v)? as usize;
        }
        if let Some(v) = take("opt.inner_iters") {
            cfg.opt.inner_iters = parse_scalar("opt.inner_iters", &v)? as usize;
        }
        if let Some(v) = take("opt.tf_bounds_s") {
            let nums = parse_floats("opt.tf_bounds_s", &v)?;
            if nums.len() != 2 {
                return Err(ConfigError::BadValue {
                    key: "opt.tf_bounds_s".into(),
                    reason: format!("expected 2 numbers, got {}", nums.len()),
                });
            }
            cfg.opt.tf_bounds = (nums[0], nums[1]);
        }
        if let Some(v) = take("opt.horizon_s") {
            cfg.opt.horizon = Some(parse_scalar("opt.horizon_s", &v)?);
        }
        if let Some(v) = take("opt.penalize") {
            cfg.opt.penalize = match v.as_str() {
                "edf" => PenalizeMode::EdfForces,
                "wrench" => PenalizeMode::Wrench,
                other => {
                    return Err(ConfigError::BadValue {
                        key: "opt.penalize".into(),
                        reason: format!("expected `edf` or `wrench`, got `{other}`"),
                    })
                }
            };
        }
        if let Some(v) = take("opt.free_joint_inputs") {
            cfg.opt.free_joint_inputs = parse_bool("opt.free_joint_inputs", &v)?;
        }
        if let Some(v) = take("opt.bc") {
            let mut terminal = TerminalConditions {
                attitude: false,
                lateral: false,
                displacement: false,
            };
            for item in v.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()) {
                match item {
                    "initial" => {}
                    "attitude" => terminal.attitude = true,
                    "lateral" => terminal.lateral = true,
                    "displacement" => terminal.displacement = true,
                    other => {
                        return Err(ConfigError::BadValue {
                            key: "opt.bc".into(),
                            reason: format!(
                                "expected initial/attitude/lateral/displacement, got `{other}`"
                            ),
                        })
                    }
                }
            }
            cfg.opt.terminal = terminal;
        }
        if let Some(v) = take("opt.q_att") {
            cfg.opt.q_att = parse_scalar("opt.q_att", &v)?;
        }
        if let Some(v) = take("opt.r_thrust") {
            cfg.opt.r_thrust = parse_scalar("opt.r_thrust", &v)?;
        }

        if let Some(v) = take("out_dir") {
            cfg.out_dir = v;
        }
        if let Some(v) = take("seed") {
            cfg.seed = parse_scalar("seed", &v)? as u64;
        }

        if let Some(key) = entries.keys().next() {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.robot.validate().map_err(ConfigError::Invalid)?;
        self.ground.validate().map_err(ConfigError::Invalid)?;
        self.gait
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.sim.validate().map_err(ConfigError::Invalid)?;
        if self.opt.n < 2 {
            return Err(ConfigError::Invalid(format!(
                "opt.n must be at least 2, got {}",
                self.opt.n
            )));
        }
        if !(self.opt.tf_bounds.0 > 0.0 && self.opt.tf_bounds.0 <= self.opt.tf_bounds.1) {
            return Err(ConfigError::Invalid(format!(
                "opt.tf_bounds_s must be a positive interval, got {:?}",
                self.opt.tf_bounds
            )));
        }
        Ok(())
    }

    /// Joint tracking gains (stored on the sim section).
    pub fn joint_gains(&self) -> JointGains {
        self.sim.joint_gains
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn parses_representative_config() {
        let text = "\
# robot
mass_kg = 12.0
inertia_kgm2 = 0.1, 0.2, 0.3
gravity_mps2 = 0, 0, -9.81

ground.k_gz_npm = 9000    # stiffer ground
ground.path_half_width_m = inf

gait.v_ref_mps = 0.2
gait.step_time_s = 0.3
gait.pause_s = 0.1

sim.dt_s = 0.0005
sim.kp_att = 25

opt.n = 15
opt.bc = initial, attitude
opt.problem = double_integrator
out_dir = results
seed = 7
";
        let cfg = RunConfig::from_str_contents(text).unwrap();
        assert_eq!(cfg.robot.mass, 12.0);
        assert_eq!(cfg.robot.inertia[(1, 1)], 0.2);
        assert_eq!(cfg.ground.k_gz, 9000.0);
        assert!(cfg.ground.path_half_width.is_infinite());
        // Step length derived from speed and timing.
        assert!((cfg.gait.step_length - 0.2 * 0.4).abs() < 1e-12);
        assert_eq!(cfg.sim.dt, 0.0005);
        assert_eq!(cfg.sim.kp_att, Vector3::from_element(25.0));
        assert_eq!(cfg.opt.n, 15);
        assert!(cfg.opt.terminal.attitude);
        assert!(!cfg.opt.terminal.lateral);
        assert_eq!(cfg.opt.problem, OptProblem::DoubleIntegrator);
        assert_eq!(cfg.out_dir, "results");
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_key_named_in_error() {
        let err = RunConfig::from_str_contents("gait.v_rev_mps = 0.1").unwrap_err();
        match err {
            ConfigError::UnknownKey(k) => assert_eq!(k, "gait.v_rev_mps"),
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_rejected() {
        let err = RunConfig::from_str_contents("mass_kg 10").unwrap_err();
        assert!(matches!(err, ConfigError::Malformed { line: 1, .. }));
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = RunConfig::from_str_contents("mass_kg = 1\nmass_kg = 2").unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey(_)));
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(RunConfig::from_str_contents("mass_kg = -5").is_err());
        assert!(RunConfig::from_str_contents("opt.n = 1").is_err());
        assert!(RunConfig::from_str_contents("ground.mu_s = 0.1").is_err());
        assert!(RunConfig::from_str_contents("inertia_kgm2 = 1, 2").is_err());
    }

    #[test]
    fn start_narrow_key_parses() {
        let cfg = RunConfig::from_str_contents("gait.start_narrow = true").unwrap();
        assert!(cfg.gait.start_narrow);
        assert!(!RunConfig::default().gait.start_narrow);
    }

    #[test]
    fn sim_duration_follows_gait_duration() {
        let cfg = RunConfig::from_str_contents("gait.duration_s = 2.0").unwrap();
        assert_eq!(cfg.sim.duration, 2.0);
        let cfg2 =
            RunConfig::from_str_contents("gait.duration_s = 2.0\nsim.duration_s = 1.0").unwrap();
        assert_eq!(cfg2.sim.duration, 1.0);
    }
}
