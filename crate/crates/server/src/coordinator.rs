//! One task per playback owns its transport state. Commands and timer ticks
//! are serialized through that task; observers read snapshots from a watch
//! channel, so every observer sees revisions in order.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use pianoview_core::playback::{PlaybackError, PlaybackState, TransportCommand};
use tokio::sync::{mpsc, oneshot, watch};
use tokio::time::{Instant, MissedTickBehavior};

/// Broadcast interval while playing.
pub const TICK: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: PlaybackState,
    pub server_time_ms: u64,
}

type Reply = oneshot::Sender<Result<Snapshot, PlaybackError>>;

#[derive(Debug, Clone)]
pub struct PlaybackHandle {
    commands: mpsc::Sender<(TransportCommand, Reply)>,
    snapshots: watch::Receiver<Snapshot>,
}

impl PlaybackHandle {
    pub fn snapshot(&self) -> Snapshot {
        self.snapshots.borrow().clone()
    }

    pub fn subscribe(&self) -> watch::Receiver<Snapshot> {
        self.snapshots.clone()
    }

    pub async fn send(&self, command: TransportCommand) -> Result<Snapshot, PlaybackError> {
        let (tx, rx) = oneshot::channel();
        let closed = || PlaybackError::InvalidState("playback coordinator stopped".into());
        self.commands.send((command, tx)).await.map_err(|_| closed())?;
        rx.await.map_err(|_| closed())?
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Starts the coordinator task for `state`.
pub fn spawn(state: PlaybackState) -> PlaybackHandle {
    let (cmd_tx, cmd_rx) = mpsc::channel(64);
    let (snap_tx, snap_rx) = watch::channel(Snapshot {
        state: state.clone(),
        server_time_ms: now_ms(),
    });
    tokio::spawn(run(state, cmd_rx, snap_tx));
    PlaybackHandle {
        commands: cmd_tx,
        snapshots: snap_rx,
    }
}

async fn run(
    mut state: PlaybackState,
    mut commands: mpsc::Receiver<(TransportCommand, Reply)>,
    snapshots: watch::Sender<Snapshot>,
) {
    let mut ticker = tokio::time::interval(TICK);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    let mut last = Instant::now();
    let publish = |state: &PlaybackState| {
        let snap = Snapshot {
            state: state.clone(),
            server_time_ms: now_ms(),
        };
        snapshots.send_replace(snap.clone());
        snap
    };

    loop {
        tokio::select! {
            msg = commands.recv() => {
                let Some((command, reply)) = msg else { break };
                let now = Instant::now();
                state.advance((now - last).as_secs_f64());
                last = now;
                let result = state.apply(command).map(|()| publish(&state));
                let _ = reply.send(result);
            }
            _ = ticker.tick() => {
                let now = Instant::now();
                if state.playing {
                    state.advance((now - last).as_secs_f64());
                    publish(&state);
                }
                last = now;
            }
        }
    }
}

/// All live playbacks by id.
#[derive(Debug, Default)]
pub struct PlaybackRegistry {
    inner: Mutex<HashMap<String, PlaybackHandle>>,
}

impl PlaybackRegistry {
    pub fn insert(&self, state: PlaybackState) -> PlaybackHandle {
        let id = state.playback_id.clone();
        let handle = spawn(state);
        self.lock().insert(id, handle.clone());
        handle
    }

    pub fn get(&self, id: &str) -> Option<PlaybackHandle> {
        self.lock().get(id).cloned()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, PlaybackHandle>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }
}
