//! Deterministic 2D stand-in for the quadruped: a rectangular room with
//! circular objects, a scalar ambient light level, and a point robot that
//! refuses any move ending closer than the halt distance to anything.

pub mod geometry;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{Robot, RobotError, TelemetrySample};
use crate::spl::{ActionCatalogue, ObjectLabel};
use geometry::{clearance, normalize_heading, ray_cast, signed_angle, unit};

const DEFAULT_WORLD: &str = include_str!("default_world.json");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("UNKNOWN_ACTION: {0}")]
    UnknownAction(String),
    #[error("NOT_STANDING: {0} needs the robot to stand up first")]
    NotStanding(String),
    #[error("UNKNOWN_OBJECT: {0}")]
    UnknownObject(String),
    #[error("BAD_ARGUMENTS: {0}")]
    BadArguments(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("cannot read world file: {0}")]
    Io(String),
}

impl SimError {
    /// Short machine-readable code, as sent in wire acks.
    pub fn code(&self) -> &'static str {
        match self {
            SimError::UnknownAction(_) => "UNKNOWN_ACTION",
            SimError::NotStanding(_) => "NOT_STANDING",
            SimError::UnknownObject(_) => "UNKNOWN_OBJECT",
            SimError::BadArguments(_) => "BAD_ARGUMENTS",
            SimError::InvalidWorld(_) => "INVALID_WORLD",
            SimError::Io(_) => "IO",
        }
    }
}

/// Room size in meters. The room is centered on the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub w: f64,
    pub h: f64,
}

impl Bounds {
    /// `(x_min, x_max, y_min, y_max)`
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (-self.w / 2.0, self.w / 2.0, -self.h / 2.0, self.h / 2.0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (x0, x1, y0, y1) = self.extent();
        (x0..=x1).contains(&x) && (y0..=y1).contains(&y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub label: ObjectLabel,
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Posture {
    #[default]
    Standing,
    Prone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tilt {
    #[default]
    Neutral,
    LeftShoulder,
    RightShoulder,
    HeadUp,
    HeadDown,
    HeadLeft,
    HeadRight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    /// Degrees in [0, 360), counter-clockwise from +x.
    pub heading: f64,
    pub posture: Posture,
    pub tilt: Tilt,
    /// Result of the most recent FIND for each label searched so far.
    pub found: BTreeMap<String, bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub bounds: Bounds,
    /// Mean normalized lightness in [0, 1].
    pub ambient: f64,
    pub robot: RobotState,
    pub objects: Vec<WorldObject>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyConfig {
    pub halt_distance: f64,
    pub near_distance: f64,
    pub far_distance: f64,
    /// Horizontal field of view of the front camera, degrees.
    pub fov: f64,
    pub find_range: f64,
    /// Rotation between detection attempts during FIND, degrees.
    pub find_step: f64,
    pub center_lo: f64,
    pub center_hi: f64,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        SafetyConfig {
            halt_distance: 0.30,
            near_distance: 0.5,
            far_distance: 1.0,
            fov: 70.0,
            find_range: 5.0,
            find_step: 15.0,
            center_lo: 0.4,
            center_hi: 0.6,
        }
    }
}

impl SafetyConfig {
    pub fn check(&self) -> Result<(), SimError> {
        let ok = self.halt_distance < self.near_distance
            && self.near_distance < self.far_distance
            && 0.0 <= self.center_lo
            && self.center_lo < self.center_hi
            && self.center_hi <= 1.0
            && self.fov > 0.0
            && self.find_step > 0.0
            && self.find_range > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SimError::InvalidWorld(format!("inconsistent safety config {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionConfig {
    /// Meters per MOVE_* command.
    pub step: f64,
    /// Degrees per TURN_* command.
    pub turn: f64,
    /// Range limit of the proximity rays.
    pub ray_cap: f64,
}

impl Default for MotionConfig {
    fn default() -> Self {
        MotionConfig {
            step: 0.3,
            turn: 30.0,
            ray_cap: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimConfig {
    pub safety: SafetyConfig,
    pub motion: MotionConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandResult {
    pub ok: bool,
    pub blocked: bool,
    pub detail: String,
}

impl CommandResult {
    fn done(detail: impl Into<String>) -> Self {
        CommandResult {
            ok: true,
            blocked: false,
            detail: detail.into(),
        }
    }

    fn blocked(detail: impl Into<String>) -> Self {
        CommandResult {
            ok: false,
            blocked: true,
            detail: detail.into(),
        }
    }
}

/// Sensor snapshot, as streamed to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Telemetry {
    pub tick: u64,
    pub front: f64,
    pub left: f64,
    pub right: f64,
    pub ambient: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub posture: Posture,
    pub found: BTreeMap<String, bool>,
}

impl Telemetry {
    pub fn min_distance(&self) -> f64 {
        self.front.min(self.left).min(self.right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FindOutcome {
    pub found: bool,
    /// Rotations performed, including a final centering turn.
    pub steps: usize,
    /// Normalized horizontal image coordinate of the target when found.
    pub image_x: Option<f64>,
}

#[derive(Deserialize)]
struct WorldFile {
    bounds: Bounds,
    ambient: f64,
    robot: RobotFile,
    #[serde(default)]
    objects: Vec<WorldObject>,
}

#[derive(Deserialize)]
struct RobotFile {
    x: f64,
    y: f64,
    #[serde(default)]
    heading: f64,
}

/// Actions that only play an animation on the real robot.
const ANIMATIONS: [&str; 4] = ["SPIN_JUMP", "LIFT", "FIRST_DANCE", "SECOND_DANCE"];

pub fn is_animation(action: &str) -> bool {
    ANIMATIONS.contains(&action)
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub state: WorldState,
    pub config: SimConfig,
    pub tick: u64,
}

impl World {
    pub fn new(state: WorldState, config: SimConfig) -> Result<Self, SimError> {
        config.safety.check()?;
        let s = &state;
        if !(s.bounds.w > 0.0 && s.bounds.h > 0.0) {
            return Err(SimError::InvalidWorld("bounds must be positive".into()));
        }
        if !(0.0..=1.0).contains(&s.ambient) {
            return Err(SimError::InvalidWorld(format!("ambient {} not in [0, 1]", s.ambient)));
        }
        if !s.bounds.contains(s.robot.x, s.robot.y) {
            return Err(SimError::InvalidWorld("robot outside bounds".into()));
        }
        for o in &s.objects {
            if !(o.radius > 0.0) {
                return Err(SimError::InvalidWorld(format!("{} has radius {}", o.label, o.radius)));
            }
            if !o.label.is_known() {
                return Err(SimError::UnknownObject(o.label.to_string()));
            }
        }
        let mut state = state;
        state.robot.heading = normalize_heading(state.robot.heading);
        Ok(World { state, config, tick: 0 })
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let file: WorldFile = serde_json::from_str(text).map_err(|e| SimError::InvalidWorld(e.to_string()))?;
        let state = WorldState {
            bounds: file.bounds,
            ambient: file.ambient,
            robot: RobotState {
                x: file.robot.x,
                y: file.robot.y,
                heading: file.robot.heading,
                posture: Posture::Standing,
                tilt: Tilt::Neutral,
                found: BTreeMap::new(),
            },
            objects: file
                .objects
                .into_iter()
                .map(|o| WorldObject {
                    label: ObjectLabel::new(o.label.as_str()),
                    ..o
                })
                .collect(),
        };
        World::new(state, SimConfig::default())
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        World::from_json(&text)
    }

    /// The bundled room: a chair, a person and a bottle.
    pub fn default_world() -> Self {
        World::from_json(DEFAULT_WORLD).expect("bundled world is valid")
    }

    pub fn clearance(&self) -> f64 {
        let r = &self.state.robot;
        clearance(&self.state.bounds, &self.state.objects, r.x, r.y)
    }

    fn require_standing(&self, action: &str) -> Result<(), SimError> {
        if self.state.robot.posture == Posture::Standing {
            Ok(())
        } else {
            Err(SimError::NotStanding(action.to_owned()))
        }
    }

    /// Translates by the step length in direction `heading + offset`, unless
    /// the end point would be closer than the halt distance to anything.
    fn translate(&mut self, action: &str, offset: f64) -> CommandResult {
        let robot = &self.state.robot;
        let (dx, dy) = unit(robot.heading + offset);
        let step = self.config.motion.step;
        let (nx, ny) = (robot.x + dx * step, robot.y + dy * step);
        let after = clearance(&self.state.bounds, &self.state.objects, nx, ny);
        if !self.state.bounds.contains(nx, ny) || after < self.config.safety.halt_distance {
            return CommandResult::blocked(format!("{action} refused: clearance would be {after:.2} m"));
        }
        let robot = &mut self.state.robot;
        robot.x = nx;
        robot.y = ny;
        CommandResult::done(format!("moved to ({nx:.2}, {ny:.2})"))
    }

    fn rotate(&mut self, degrees: f64) {
        let r = &mut self.state.robot;
        r.heading = normalize_heading(r.heading + degrees);
    }

    pub fn apply_command(&mut self, action: &str, args: &[String]) -> Result<CommandResult, SimError> {
        if !ActionCatalogue::is_builtin(action) {
            return Err(SimError::UnknownAction(action.to_owned()));
        }
        if action == "FIND" {
            let [label] = args else {
                return Err(SimError::BadArguments("FIND takes exactly one object".into()));
            };
            let outcome = self.find_scan(&ObjectLabel::new(label))?;
            let detail = if outcome.found {
                format!("found {label} after {} steps", outcome.steps)
            } else {
                format!("no {label} found")
            };
            return Ok(CommandResult::done(detail));
        }
        if !args.is_empty() {
            return Err(SimError::BadArguments(format!("{action} takes no arguments")));
        }

        let tilt = |t: Tilt, world: &mut World| {
            world.state.robot.tilt = t;
            CommandResult::done(format!("tilt {t:?}"))
        };
        let result = match action {
            "STAND_UP" => {
                self.state.robot.posture = Posture::Standing;
                CommandResult::done("standing")
            }
            "STAND_DOWN" => {
                self.state.robot.posture = Posture::Prone;
                CommandResult::done("prone")
            }
            "TILT_LEFT_SHOULDER" => tilt(Tilt::LeftShoulder, self),
            "TILT_RIGHT_SHOULDER" => tilt(Tilt::RightShoulder, self),
            "TILT_HEAD_UP" => tilt(Tilt::HeadUp, self),
            "TILT_HEAD_DOWN" => tilt(Tilt::HeadDown, self),
            "TILT_HEAD_LEFT" => tilt(Tilt::HeadLeft, self),
            "TILT_HEAD_RIGHT" => tilt(Tilt::HeadRight, self),
            "MOVE_FORWARD" => {
                self.require_standing(action)?;
                self.translate(action, 0.0)
            }
            "MOVE_LEFT" => {
                self.require_standing(action)?;
                self.translate(action, 90.0)
            }
            "MOVE_RIGHT" => {
                self.require_standing(action)?;
                self.translate(action, -90.0)
            }
            "TURN_LEFT" => {
                self.require_standing(action)?;
                self.rotate(self.config.motion.turn);
                CommandResult::done(format!("heading {:.1}", self.state.robot.heading))
            }
            "TURN_RIGHT" => {
                self.require_standing(action)?;
                self.rotate(-self.config.motion.turn);
                CommandResult::done(format!("heading {:.1}", self.state.robot.heading))
            }
            anim => {
                debug_assert!(is_animation(anim));
                self.require_standing(action)?;
                CommandResult::done(format!("played {anim}"))
            }
        };
        Ok(result)
    }

    pub fn sense(&self) -> Telemetry {
        let s = &self.state;
        let r = &s.robot;
        let cap = self.config.motion.ray_cap;
        let ray = |offset: f64| ray_cast(&s.bounds, &s.objects, r.x, r.y, r.heading + offset, cap);
        Telemetry {
            tick: self.tick,
            front: ray(0.0),
            left: ray(90.0),
            right: ray(-90.0),
            ambient: s.ambient,
            x: r.x,
            y: r.y,
            heading: r.heading,
            posture: r.posture,
            found: r.found.clone(),
        }
    }

    /// Bearing (degrees, left positive) of the most central visible `target`.
    fn visible_bearing(&self, target: &ObjectLabel) -> Option<f64> {
        let r = &self.state.robot;
        let cfg = &self.config.safety;
        self.state
            .objects
            .iter()
            .filter(|o| &o.label == target)
            .filter(|o| ((o.x - r.x).powi(2) + (o.y - r.y).powi(2)).sqrt() <= cfg.find_range)
            .map(|o| signed_angle((o.y - r.y).atan2(o.x - r.x).to_degrees() - r.heading))
            .filter(|b| b.abs() <= cfg.fov / 2.0)
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
    }

    /// Rotates in place looking for `target`.
    ///
    /// Each step checks the camera; a visible but off-center target gets one
    /// corrective turn toward it before stopping. Without a sighting the
    /// robot completes the revolution and ends where it started.
    pub fn find_scan(&mut self, target: &ObjectLabel) -> Result<FindOutcome, SimError> {
        if !target.is_known() {
            return Err(SimError::UnknownObject(target.to_string()));
        }
        self.require_standing("FIND")?;
        let cfg = self.config.safety;
        let start_heading = self.state.robot.heading;
        let turns = (360.0 / cfg.find_step).ceil() as usize;
        let image_x = |bearing: f64| 0.5 + bearing / cfg.fov;

        let mut steps = 0;
        for _ in 0..turns {
            if let Some(bearing) = self.visible_bearing(target) {
                let mut x = image_x(bearing);
                if !(cfg.center_lo..=cfg.center_hi).contains(&x) {
                    self.rotate(bearing);
                    steps += 1;
                    x = self.visible_bearing(target).map_or(0.5, image_x);
                }
                self.state.robot.found.insert(target.to_string(), true);
                return Ok(FindOutcome {
                    found: true,
                    steps,
                    image_x: Some(x),
                });
            }
            self.rotate(cfg.find_step);
            steps += 1;
        }
        self.state.robot.heading = start_heading;
        self.state.robot.found.insert(target.to_string(), false);
        Ok(FindOutcome {
            found: false,
            steps,
            image_x: None,
        })
    }
}

/// In-process robot backed directly by a [`World`]. Telemetry is always
/// current.
#[derive(Debug, Clone)]
pub struct SimRobot {
    pub world: World,
}

impl SimRobot {
    pub fn new(world: World) -> Self {
        SimRobot { world }
    }
}

impl Robot for SimRobot {
    fn command(&mut self, action: &str, args: &[String]) -> Result<CommandResult, RobotError> {
        self.world.tick += 1;
        self.world
            .apply_command(action, args)
            .map_err(|e| RobotError::Rejected(e.to_string()))
    }

    fn telemetry(&mut self) -> Result<TelemetrySample, RobotError> {
        Ok(TelemetrySample {
            telemetry: self.world.sense(),
            age: Duration::ZERO,
        })
    }
}
