use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Query, State};
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use spark_core::dialog::{execution_refused, finish_execution, handle, Deps, Effect, FunctionStore, Reply};
use spark_core::interp::{ExecEvent, ExecStatus, Executor};
use spark_core::spl::Numbering;
use spark_core::{Program, Telemetry};
use tokio::sync::mpsc;

use crate::sessions::{with_session, SessionRef};
use crate::AppState;

/// Minimum spacing of forwarded world frames.
const WORLD_PERIOD: Duration = Duration::from_millis(200);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Inbound {
    Utterance { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Outbound {
    Session {
        id: String,
    },
    Reply {
        text: String,
    },
    Program {
        name: String,
        lines: Vec<String>,
        numbering: Numbering,
    },
    ExecEvent {
        path: Vec<usize>,
        statement: String,
        status: ExecStatus,
    },
    World {
        #[serde(flatten)]
        telemetry: Telemetry,
    },
    Error {
        code: String,
        message: String,
    },
}

impl Outbound {
    fn error(code: &str, message: impl Into<String>) -> Self {
        Outbound::Error {
            code: code.into(),
            message: message.into(),
        }
    }
}

impl From<ExecEvent> for Outbound {
    fn from(e: ExecEvent) -> Self {
        Outbound::ExecEvent {
            path: e.path,
            statement: e.statement,
            status: e.status,
        }
    }
}

fn reply_frames(replies: Vec<Reply>) -> Vec<Outbound> {
    let mut out = Vec::new();
    for r in replies {
        out.push(Outbound::Reply { text: r.text });
        if let Some(view) = r.program_view {
            out.push(Outbound::Program {
                name: view.name,
                lines: view.lines,
                numbering: view.numbering,
            });
        }
    }
    out
}

#[derive(Debug, Deserialize)]
struct SessionQuery {
    id: Option<String>,
}

pub(crate) fn routes() -> Router<Arc<AppState>> {
    Router::new().route("/session", get(upgrade))
}

async fn upgrade(ws: WebSocketUpgrade, Query(q): Query<SessionQuery>, State(app): State<Arc<AppState>>) -> Response {
    ws.on_upgrade(move |socket| run_session(app, socket, q.id))
}

async fn send(socket: &mut WebSocket, frame: &Outbound) -> bool {
    let text = serde_json::to_string(frame).expect("frames serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn run_session(app: Arc<AppState>, mut socket: WebSocket, requested: Option<String>) {
    let session = requested
        .and_then(|id| app.sessions.get(&id))
        .unwrap_or_else(|| app.sessions.create());
    let id = with_session(&session, |s| s.id.clone());
    if !send(&mut socket, &Outbound::Session { id: id.clone() }).await {
        return;
    }
    tracing::debug!(%id, "session attached");

    let (tx, mut rx) = mpsc::unbounded_channel::<Outbound>();
    let cancel = Arc::new(AtomicBool::new(false));
    let mut world_tick = tokio::time::interval(WORLD_PERIOD);
    world_tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
    let mut last_world: Option<Telemetry> = None;

    loop {
        tokio::select! {
            msg = socket.recv() => {
                let frames = match msg {
                    None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                    Some(Ok(Message::Text(text))) => match serde_json::from_str::<Inbound>(&text) {
                        Ok(Inbound::Utterance { text }) => utterance(&app, &session, text, &tx, &cancel).await,
                        Err(e) => vec![Outbound::error("BAD_FRAME", e.to_string())],
                    },
                    Some(Ok(Message::Binary(_))) => vec![Outbound::error("BAD_FRAME", "binary frames are not supported")],
                    Some(Ok(_)) => Vec::new(),
                };
                for f in &frames {
                    if !send(&mut socket, f).await {
                        break;
                    }
                }
            }
            Some(frame) = rx.recv() => {
                if !send(&mut socket, &frame).await {
                    break;
                }
            }
            _ = world_tick.tick() => {
                if let Some(t) = app.robot.try_snapshot() {
                    if last_world.as_ref() != Some(&t) {
                        last_world = Some(t.clone());
                        if !send(&mut socket, &Outbound::World { telemetry: t }).await {
                            break;
                        }
                    }
                }
            }
        }
    }
    cancel.store(true, Ordering::Release);
    tracing::debug!(%id, "session detached");
}

/// Runs the dialog on one utterance and starts any program it asks for.
async fn utterance(
    app: &Arc<AppState>,
    session: &SessionRef,
    text: String,
    tx: &mpsc::UnboundedSender<Outbound>,
    cancel: &Arc<AtomicBool>,
) -> Vec<Outbound> {
    let (a, s) = (app.clone(), session.clone());
    let replies = tokio::task::spawn_blocking(move || {
        with_session(&s, |s| {
            let mut store = a.store();
            let mut deps = Deps {
                decomposer: &a.decomposer,
                store: &mut *store,
                lexicon: &a.lexicon,
            };
            handle(&mut s.dialog, &text, &mut deps)
        })
    })
    .await
    .expect("dialog task panicked");

    let program = replies.iter().flat_map(|r| &r.effects).find_map(|e| match e {
        Effect::RunProgram { program } => Some(program.clone()),
        _ => None,
    });
    let mut frames = reply_frames(replies);
    if let Some(program) = program {
        match start_run(app, session, program, tx.clone(), cancel.clone()) {
            Ok(()) => {}
            Err(refused) => frames.extend(reply_frames(refused)),
        }
    }
    frames
}

/// Executes on a blocking thread, streaming progress into `tx` and closing
/// the dialog's execution phase when done.
fn start_run(
    app: &Arc<AppState>,
    session: &SessionRef,
    program: Program,
    tx: mpsc::UnboundedSender<Outbound>,
    cancel: Arc<AtomicBool>,
) -> Result<(), Vec<Reply>> {
    let Some(mut claim) = app.robot.try_claim() else {
        return Err(with_session(session, |s| execution_refused(&mut s.dialog)));
    };
    let functions = app.store().registry().clone();
    let limits = app.limits;
    let session = session.clone();
    tokio::task::spawn_blocking(move || {
        let events = tx.clone();
        let trace = Executor::new(limits)
            .cancel_flag(&cancel)
            .observer(move |e| {
                let _ = events.send(Outbound::from(e.clone()));
            })
            .run(&program, &mut claim, &functions);
        drop(claim);
        tracing::info!(program = %program.name, halted = ?trace.halted, "run finished");
        let replies = with_session(&session, |s| finish_execution(&mut s.dialog, &trace));
        for f in reply_frames(replies) {
            let _ = tx.send(f);
        }
    });
    Ok(())
}
