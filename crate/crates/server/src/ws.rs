//! Playback channel: pushes a state message on connect and on every change,
//! and forwards client commands to the playback's coordinator.

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::Response;

use crate::coordinator::{PlaybackHandle, Snapshot};
use crate::error::ApiError;
use crate::wire::{ClientMessage, ServerMessage};
use crate::AppState;

pub async fn playback_channel(
    State(app): State<AppState>,
    Path(id): Path<String>,
    upgrade: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let handle = app
        .playbacks
        .get(&id)
        .ok_or_else(|| ApiError::NotFound(format!("playback {id:?} not found")))?;
    Ok(upgrade.on_upgrade(move |socket| serve(socket, handle)))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    let text = serde_json::to_string(msg).expect("server messages serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

fn state_message(snap: &Snapshot) -> ServerMessage {
    ServerMessage::state(&snap.state, snap.server_time_ms)
}

async fn serve(mut socket: WebSocket, handle: PlaybackHandle) {
    let mut snapshots = handle.subscribe();
    let first = state_message(&snapshots.borrow_and_update());
    if !send(&mut socket, &first).await {
        return;
    }
    loop {
        tokio::select! {
            changed = snapshots.changed() => {
                if changed.is_err() {
                    break;
                }
                let msg = state_message(&snapshots.borrow_and_update());
                if !send(&mut socket, &msg).await {
                    break;
                }
            }
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(text))) => text,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let command = serde_json::from_str::<ClientMessage>(&text)
                    .map_err(|e| format!("invalid message: {e}"))
                    .and_then(ClientMessage::into_command);
                let outcome = match command {
                    Ok(command) => handle.send(command).await.map_err(|e| e.to_string()),
                    Err(e) => Err(e),
                };
                // accepted commands reach this client through the watch channel
                if let Err(message) = outcome {
                    if !send(&mut socket, &ServerMessage::Error { message }).await {
                        break;
                    }
                }
            }
        }
    }
}
