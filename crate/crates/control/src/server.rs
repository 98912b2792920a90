//! HTTP and WebSocket front end over a [`Session`].

use std::path::PathBuf;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use tokio::sync::broadcast::error::RecvError;
use tower_http::services::ServeDir;

use crate::protocol::{
    parse_command, Command, CommandKind, ControlCommand, ErrorCode, ErrorReply, Reply,
    ServerMessage,
};
use crate::session::Session;

const INDEX: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>hoemu</title></head>
<body>
<h1>hoemu control server</h1>
<p>No dashboard assets are installed. Endpoints:</p>
<ul>
<li>GET /state</li>
<li>POST /gain {\"link\": ..., \"gain_db\": ...}</li>
<li>POST /scenario/start (scenario JSON body)</li>
<li>POST /scenario/stop</li>
<li>WebSocket /ws</li>
</ul>
</body></html>
";

pub fn router(session: Session, assets: Option<PathBuf>) -> Router {
    let app = Router::new()
        .route("/state", get(get_state))
        .route("/gain", post(post_gain))
        .route("/scenario/start", post(start_scenario))
        .route("/scenario/stop", post(stop_scenario))
        .route("/ws", get(ws_upgrade));
    let app = match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(INDEX) })),
    };
    app.with_state(session)
}

fn status_of(reply: &Reply) -> StatusCode {
    match reply {
        Reply::Error(e) => match e.code {
            ErrorCode::Invalid | ErrorCode::UnknownLink => StatusCode::BAD_REQUEST,
            ErrorCode::NoScenario | ErrorCode::Busy => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        },
        _ => StatusCode::OK,
    }
}

fn respond(reply: Reply) -> Response {
    let status = status_of(&reply);
    (
        status,
        [(axum::http::header::CONTENT_TYPE, "application/json")],
        serde_json::to_string(&reply).expect("replies serialize"),
    )
        .into_response()
}

async fn run(session: &Session, cmd: Result<Command, ErrorReply>) -> Response {
    match cmd {
        Ok(c) => respond(session.execute(c).await),
        Err(e) => respond(Reply::Error(e)),
    }
}

async fn get_state(State(session): State<Session>) -> Response {
    run(&session, Ok(Command::GetState)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GainBody {
    link: String,
    gain_db: f64,
}

async fn post_gain(State(session): State<Session>, body: String) -> Response {
    let cmd = serde_json::from_str::<GainBody>(&body)
        .map_err(|e| ErrorReply::invalid(format!("malformed gain body: {e}")))
        .and_then(|b| ControlCommand::set_gain(b.link, b.gain_db).validate());
    run(&session, cmd).await
}

async fn start_scenario(State(session): State<Session>, body: String) -> Response {
    let cmd = serde_json::from_str::<serde_json::Value>(&body)
        .map_err(|e| ErrorReply::invalid(format!("malformed scenario: {e}")))
        .and_then(|v| {
            ControlCommand {
                scenario: Some(v),
                ..ControlCommand::simple(CommandKind::StartScenario)
            }
            .validate()
        });
    run(&session, cmd).await
}

async fn stop_scenario(State(session): State<Session>) -> Response {
    run(&session, Ok(Command::StopScenario)).await
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(session): State<Session>) -> Response {
    ws.on_upgrade(move |socket| client(socket, session))
}

async fn send(socket: &mut WebSocket, msg: ServerMessage) -> bool {
    socket
        .send(Message::Text(msg.to_json().into()))
        .await
        .is_ok()
}

async fn client(mut socket: WebSocket, session: Session) {
    // subscribe first so nothing falls between the snapshot and the stream
    let mut frames = session.subscribe();
    let snapshot = session.execute(Command::GetState).await;
    if !send(&mut socket, snapshot.into()).await {
        return;
    }
    loop {
        tokio::select! {
            incoming = socket.recv() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    let reply = match parse_command(&text) {
                        Ok(cmd) => session.execute(cmd).await,
                        Err(e) => Reply::Error(e),
                    };
                    if !send(&mut socket, reply.into()).await {
                        break;
                    }
                }
                Some(Ok(Message::Binary(_))) => {
                    let e = ErrorReply::invalid("commands are JSON text frames");
                    if !send(&mut socket, ServerMessage::Error(e)).await {
                        break;
                    }
                }
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                Some(Ok(_)) => {}
            },
            frame = frames.recv() => match frame {
                Ok(msg) => {
                    if !send(&mut socket, msg).await {
                        break;
                    }
                }
                Err(RecvError::Lagged(n)) => tracing::debug!(skipped = n, "slow subscriber dropped frames"),
                Err(RecvError::Closed) => break,
            },
        }
    }
}
