mod common;

use std::net::SocketAddr;
use std::time::Duration;

use common::Fixture;
use futures_util::{SinkExt, StreamExt};
use pianoview_core::playback::create_playback;
use pianoview_server::router;
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn serve(fx: &Fixture) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let app = router(fx.state.clone());
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

fn new_playback(fx: &Fixture, sources: &[&str]) -> String {
    let sources: Vec<String> = sources.iter().map(|s| s.to_string()).collect();
    let state = create_playback(&fx.state.catalog.snapshot(), "pb-test", &sources).unwrap();
    fx.state.playbacks.insert(state);
    "pb-test".into()
}

async fn recv(ws: &mut Socket) -> Value {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(5), ws.next())
            .await
            .expect("timed out waiting for a message")
            .unwrap()
            .unwrap();
        if let Message::Text(text) = msg {
            return serde_json::from_str(&text).unwrap();
        }
    }
}

/// Next state message with the given revision, skipping timer broadcasts.
async fn recv_revision(ws: &mut Socket, revision: u64) -> Value {
    loop {
        let m = recv(ws).await;
        if m["type"] == "state" && m["revision"] == revision {
            return m;
        }
        assert_eq!(m["type"], "state", "{m}");
        assert!(m["revision"].as_u64().unwrap() < revision, "{m}");
    }
}

async fn command(ws: &mut Socket, cmd: &str, value: Value) {
    let msg = json!({"type": "command", "cmd": cmd, "value": value});
    ws.send(Message::Text(msg.to_string().into())).await.unwrap();
}

#[tokio::test]
async fn state_on_connect_and_after_commands() {
    let fx = Fixture::mixed(2, 7);
    let addr = serve(&fx).await;
    let id = new_playback(&fx, &["session-000", "session-001"]);
    let (mut ws, _) = connect_async(format!("ws://{addr}/ws/playbacks/{id}")).await.unwrap();

    let first = recv(&mut ws).await;
    assert_eq!(first["type"], "state");
    assert_eq!(first["revision"], 0);
    assert_eq!(first["playing"], false);
    assert_eq!(first["loop"], Value::Null);
    assert_eq!(first["audible"], "A");
    assert!(first["server_time_ms"].as_u64().unwrap() > 0);

    command(&mut ws, "seek", json!(2.0)).await;
    let s = recv_revision(&mut ws, 1).await;
    assert_eq!(s["position_s"], 2.0);

    command(&mut ws, "loop", json!([1.0, 3.0])).await;
    assert_eq!(recv_revision(&mut ws, 2).await["loop"], json!([1.0, 3.0]));

    command(&mut ws, "select_audio", json!("B")).await;
    assert_eq!(recv_revision(&mut ws, 3).await["audible"], "B");

    command(&mut ws, "rate", json!(0.5)).await;
    assert_eq!(recv_revision(&mut ws, 4).await["rate"], 0.5);

    command(&mut ws, "clear_loop", Value::Null).await;
    assert_eq!(recv_revision(&mut ws, 5).await["loop"], Value::Null);
}

#[tokio::test]
async fn invalid_commands_get_error_messages() {
    let fx = Fixture::mixed(1, 7);
    let addr = serve(&fx).await;
    let id = new_playback(&fx, &["session-000"]);
    let (mut ws, _) = connect_async(format!("ws://{addr}/ws/playbacks/{id}")).await.unwrap();
    recv(&mut ws).await;

    ws.send(Message::Text("not json".into())).await.unwrap();
    assert_eq!(recv(&mut ws).await["type"], "error");
    command(&mut ws, "rewind", Value::Null).await;
    assert_eq!(recv(&mut ws).await["type"], "error");
    command(&mut ws, "loop", json!([3.0, 1.0])).await;
    assert_eq!(recv(&mut ws).await["type"], "error");
    // selecting audio is only meaningful when comparing two sessions
    command(&mut ws, "select_audio", json!("B")).await;
    assert_eq!(recv(&mut ws).await["type"], "error");

    command(&mut ws, "seek", json!(1.0)).await;
    assert_eq!(recv(&mut ws).await["revision"], 1);
}

#[tokio::test]
async fn observers_share_one_transport() {
    let fx = Fixture::mixed(1, 7);
    let addr = serve(&fx).await;
    let id = new_playback(&fx, &["session-000"]);
    let url = format!("ws://{addr}/ws/playbacks/{id}");
    let (mut a, _) = connect_async(&url).await.unwrap();
    let (mut b, _) = connect_async(&url).await.unwrap();
    recv(&mut a).await;
    recv(&mut b).await;

    command(&mut a, "seek", json!(4.0)).await;
    assert_eq!(recv_revision(&mut b, 1).await["position_s"], 4.0);
    command(&mut b, "play", Value::Null).await;
    let playing = recv_revision(&mut a, 2).await;
    assert_eq!(playing["playing"], true);

    // while playing, timer broadcasts advance the position
    let mut last = playing["position_s"].as_f64().unwrap();
    for _ in 0..3 {
        let m = recv(&mut a).await;
        let pos = m["position_s"].as_f64().unwrap();
        assert!(pos > last, "{pos} <= {last}");
        last = pos;
    }
    command(&mut a, "pause", Value::Null).await;
    let paused = recv_revision(&mut b, 3).await;
    assert_eq!(paused["playing"], false);
}

#[tokio::test]
async fn unknown_playback_is_rejected() {
    let fx = Fixture::mixed(1, 7);
    let addr = serve(&fx).await;
    assert!(connect_async(format!("ws://{addr}/ws/playbacks/missing")).await.is_err());
}
