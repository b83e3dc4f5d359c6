//! Program execution against a [`Robot`].

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{CommandResult, Telemetry};
use crate::spl::{ActionCatalogue, Condition, Identifier, Program, Statement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RobotError {
    #[error("TIMEOUT: no ack for {action} after {attempts} attempts")]
    Timeout { action: String, attempts: u32 },
    #[error("MALFORMED_ACK: {0}")]
    MalformedAck(String),
    #[error("command rejected: {0}")]
    Rejected(String),
    #[error("no telemetry received yet")]
    NoTelemetry,
    #[error("transport error: {0}")]
    Transport(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetrySample {
    pub telemetry: Telemetry,
    /// Time since the snapshot was produced.
    pub age: Duration,
}

/// Anything that accepts built-in actions and reports sensor snapshots.
pub trait Robot {
    fn command(&mut self, action: &str, args: &[String]) -> Result<CommandResult, RobotError>;
    fn telemetry(&mut self) -> Result<TelemetrySample, RobotError>;
}

impl<R: Robot + ?Sized> Robot for &mut R {
    fn command(&mut self, action: &str, args: &[String]) -> Result<CommandResult, RobotError> {
        (**self).command(action, args)
    }

    fn telemetry(&mut self) -> Result<TelemetrySample, RobotError> {
        (**self).telemetry()
    }
}

/// Source of user-defined function bodies.
pub trait Functions {
    fn body(&self, name: &Identifier) -> Option<Program>;
}

impl Functions for ActionCatalogue {
    fn body(&self, name: &Identifier) -> Option<Program> {
        self.function(name).cloned()
    }
}

impl Functions for BTreeMap<Identifier, Program> {
    fn body(&self, name: &Identifier) -> Option<Program> {
        self.get(name).cloned()
    }
}

impl Functions for () {
    fn body(&self, _: &Identifier) -> Option<Program> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SenseThresholds {
    pub light: f64,
    pub dark: f64,
    pub near: f64,
    pub far: f64,
    /// Telemetry at least this old is refused.
    pub stale_after: Duration,
}

impl Default for SenseThresholds {
    fn default() -> Self {
        SenseThresholds {
            light: 0.6,
            dark: 0.4,
            near: 0.5,
            far: 1.0,
            stale_after: Duration::from_millis(200),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("STALE_TELEMETRY: snapshot is {0:?} old")]
    StaleTelemetry(Duration),
    #[error("UNKNOWN_CONDITION: {0}")]
    UnknownCondition(String),
}

pub fn eval_condition(cond: &Condition, t: &Telemetry, th: &SenseThresholds) -> Result<bool, ConditionError> {
    let min = t.min_distance();
    Ok(match cond {
        Condition::Light => t.ambient >= th.light,
        Condition::Dark => t.ambient <= th.dark,
        Condition::Near => min <= th.near,
        Condition::Far => min >= th.far,
        Condition::Found(label) => t.found.get(label.as_str()).copied().unwrap_or(false),
        Condition::Other(name) => return Err(ConditionError::UnknownCondition(name.to_string())),
    })
}

/// Evaluates against a sample, refusing stale snapshots.
pub fn eval_sample(cond: &Condition, s: &TelemetrySample, th: &SenseThresholds) -> Result<bool, ConditionError> {
    if s.age >= th.stale_after {
        return Err(ConditionError::StaleTelemetry(s.age));
    }
    eval_condition(cond, &s.telemetry, th)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutionLimits {
    pub while_cap: u32,
    /// Maximum robot commands per run.
    pub repeat_cap: u64,
    pub command_timeout: Duration,
}

impl Default for ExecutionLimits {
    fn default() -> Self {
        ExecutionLimits {
            while_cap: 1000,
            repeat_cap: 10_000,
            command_timeout: Duration::from_secs(5),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Completed,
    SafetyBlock,
    LoopCap,
    CommandFailure,
    UnknownFunction,
    Recursion,
    StaleTelemetry,
    Cancelled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepOutcome {
    Ok,
    Blocked,
    Failed { error: String },
    Sampled { value: bool },
    Entered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    /// Statement indices from the top-level program down, continuing into
    /// called function bodies.
    pub path: Vec<usize>,
    /// The command sent or the condition sampled, in SPL form.
    pub what: String,
    pub outcome: StepOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub steps: Vec<Step>,
    pub halted: HaltReason,
    pub detail: Option<String>,
}

impl ExecutionTrace {
    pub fn commands(&self) -> impl Iterator<Item = &Step> {
        self.steps
            .iter()
            .filter(|s| !matches!(s.outcome, StepOutcome::Sampled { .. } | StepOutcome::Entered))
    }

    pub fn completed(&self) -> bool {
        self.halted == HaltReason::Completed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Running,
    Done,
    Blocked,
    Failed,
}

/// Progress notification for a single statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecEvent {
    pub path: Vec<usize>,
    pub statement: String,
    pub status: ExecStatus,
}

struct Halt(HaltReason, String);

type Observer<'a> = Box<dyn FnMut(&ExecEvent) + Send + 'a>;

pub struct Executor<'a> {
    limits: ExecutionLimits,
    thresholds: SenseThresholds,
    cancel: Option<&'a AtomicBool>,
    observer: Option<Observer<'a>>,
}

impl<'a> Executor<'a> {
    pub fn new(limits: ExecutionLimits) -> Self {
        Executor {
            limits,
            thresholds: SenseThresholds::default(),
            cancel: None,
            observer: None,
        }
    }

    pub fn thresholds(mut self, thresholds: SenseThresholds) -> Self {
        self.thresholds = thresholds;
        self
    }

    /// Checked between statements; setting it stops the run.
    pub fn cancel_flag(mut self, flag: &'a AtomicBool) -> Self {
        self.cancel = Some(flag);
        self
    }

    pub fn observer(mut self, f: impl FnMut(&ExecEvent) + Send + 'a) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    pub fn run(mut self, program: &Program, robot: &mut dyn Robot, functions: &dyn Functions) -> ExecutionTrace {
        let mut run = Run {
            exec: &mut self,
            robot,
            functions,
            steps: Vec::new(),
            commands: 0,
            stack: vec![program.name.clone()],
        };
        let result = run.block(&program.statements, &mut Vec::new());
        let steps = run.steps;
        match result {
            Ok(()) => ExecutionTrace {
                steps,
                halted: HaltReason::Completed,
                detail: None,
            },
            Err(Halt(reason, detail)) => ExecutionTrace {
                steps,
                halted: reason,
                detail: Some(detail),
            },
        }
    }
}

pub fn execute(
    program: &Program,
    robot: &mut dyn Robot,
    functions: &dyn Functions,
    limits: ExecutionLimits,
) -> ExecutionTrace {
    Executor::new(limits).run(program, robot, functions)
}

struct Run<'e, 'a, 'r> {
    exec: &'e mut Executor<'a>,
    robot: &'r mut dyn Robot,
    functions: &'r dyn Functions,
    steps: Vec<Step>,
    commands: u64,
    stack: Vec<Identifier>,
}

impl Run<'_, '_, '_> {
    fn notify(&mut self, path: &[usize], stmt: &Statement, status: ExecStatus) {
        if let Some(obs) = self.exec.observer.as_mut() {
            obs(&ExecEvent {
                path: path.to_vec(),
                statement: stmt.head_line(),
                status,
            });
        }
    }

    fn block(&mut self, stmts: &[Statement], path: &mut Vec<usize>) -> Result<(), Halt> {
        for (i, stmt) in stmts.iter().enumerate() {
            path.push(i);
            let r = self.statement(stmt, path);
            path.pop();
            r?;
        }
        Ok(())
    }

    fn statement(&mut self, stmt: &Statement, path: &mut Vec<usize>) -> Result<(), Halt> {
        if self.exec.cancel.is_some_and(|c| c.load(Ordering::SeqCst)) {
            return Err(Halt(HaltReason::Cancelled, "cancelled".into()));
        }
        self.notify(path, stmt, ExecStatus::Running);
        let result = match stmt {
            Statement::Action(a) => self.command(path, a.as_str(), vec![]),
            Statement::Find(label) => self.command(path, "FIND", vec![label.to_string()]),
            Statement::Call(name) => self.call(name, path),
            Statement::Repeat { count, body } => {
                for _ in 0..*count {
                    self.block(body, path)?;
                }
                Ok(())
            }
            Statement::If { cond, body } => {
                if self.sample(cond, path)? {
                    self.block(body, path)?;
                }
                Ok(())
            }
            Statement::While { cond, body } => {
                let mut iterations = 0;
                while self.sample(cond, path)? {
                    if iterations == self.exec.limits.while_cap {
                        return Err(Halt(
                            HaltReason::LoopCap,
                            format!("WHILE {cond} exceeded {} iterations", self.exec.limits.while_cap),
                        ));
                    }
                    iterations += 1;
                    self.block(body, path)?;
                }
                Ok(())
            }
        };
        let status = match &result {
            Ok(()) => ExecStatus::Done,
            Err(Halt(HaltReason::SafetyBlock, _)) => ExecStatus::Blocked,
            Err(_) => ExecStatus::Failed,
        };
        self.notify(path, stmt, status);
        result
    }

    fn call(&mut self, name: &Identifier, path: &mut Vec<usize>) -> Result<(), Halt> {
        if self.stack.contains(name) {
            return Err(Halt(HaltReason::Recursion, format!("{name} calls itself")));
        }
        let Some(body) = self.functions.body(name) else {
            return Err(Halt(HaltReason::UnknownFunction, format!("{name} is not defined")));
        };
        self.steps.push(Step {
            path: path.clone(),
            what: name.to_string(),
            outcome: StepOutcome::Entered,
        });
        self.stack.push(name.clone());
        let r = self.block(&body.statements, path);
        self.stack.pop();
        r
    }

    fn command(&mut self, path: &[usize], action: &str, args: Vec<String>) -> Result<(), Halt> {
        if self.commands == self.exec.limits.repeat_cap {
            return Err(Halt(
                HaltReason::LoopCap,
                format!("more than {} commands", self.exec.limits.repeat_cap),
            ));
        }
        self.commands += 1;
        let what = if args.is_empty() {
            action.to_owned()
        } else {
            format!("{action} {}", args.join(" ").to_uppercase().replace(' ', "_"))
        };
        let started = Instant::now();
        let result = self.robot.command(action, &args);
        let elapsed = started.elapsed();
        let (outcome, halt) = match result {
            Ok(_) if elapsed > self.exec.limits.command_timeout => {
                let msg = format!("{what} took {elapsed:?}");
                (
                    StepOutcome::Failed { error: msg.clone() },
                    Some(Halt(HaltReason::CommandFailure, msg)),
                )
            }
            Ok(r) if r.blocked => (StepOutcome::Blocked, Some(Halt(HaltReason::SafetyBlock, r.detail))),
            Ok(r) if !r.ok => (
                StepOutcome::Failed {
                    error: r.detail.clone(),
                },
                Some(Halt(HaltReason::CommandFailure, r.detail)),
            ),
            Ok(_) => (StepOutcome::Ok, None),
            Err(e) => (
                StepOutcome::Failed { error: e.to_string() },
                Some(Halt(HaltReason::CommandFailure, e.to_string())),
            ),
        };
        self.steps.push(Step {
            path: path.to_vec(),
            what,
            outcome,
        });
        halt.map_or(Ok(()), Err)
    }

    fn sample(&mut self, cond: &Condition, path: &[usize]) -> Result<bool, Halt> {
        let sample = self
            .robot
            .telemetry()
            .map_err(|e| Halt(HaltReason::CommandFailure, e.to_string()))?;
        let value = eval_sample(cond, &sample, &self.exec.thresholds).map_err(|e| match e {
            ConditionError::StaleTelemetry(_) => Halt(HaltReason::StaleTelemetry, e.to_string()),
            ConditionError::UnknownCondition(_) => Halt(HaltReason::CommandFailure, e.to_string()),
        })?;
        self.steps.push(Step {
            path: path.to_vec(),
            what: cond.to_string(),
            outcome: StepOutcome::Sampled { value },
        });
        Ok(value)
    }
}
