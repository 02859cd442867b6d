//! JSON messages on the playback channel.

use pianoview_core::playback::{PlaybackState, Side, TransportCommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Command {
        cmd: String,
        #[serde(default)]
        value: Value,
    },
}

impl ClientMessage {
    pub fn into_command(self) -> Result<TransportCommand, String> {
        let ClientMessage::Command { cmd, value } = self;
        let number = |v: &Value| v.as_f64().ok_or_else(|| format!("{cmd}: expected a number, got {v}"));
        match cmd.as_str() {
            "play" => Ok(TransportCommand::Play),
            "pause" => Ok(TransportCommand::Pause),
            "seek" => Ok(TransportCommand::Seek(number(&value)?)),
            "rate" => Ok(TransportCommand::SetRate(number(&value)?)),
            "loop" => match value.as_array().map(Vec::as_slice) {
                Some([a, b]) => Ok(TransportCommand::SetLoop {
                    a: number(a)?,
                    b: number(b)?,
                }),
                _ => Err(format!("loop: expected [a, b], got {value}")),
            },
            "clear_loop" => Ok(TransportCommand::ClearLoop),
            "select_audio" => match value.as_str() {
                Some("A") => Ok(TransportCommand::SelectAudio(Side::A)),
                Some("B") => Ok(TransportCommand::SelectAudio(Side::B)),
                _ => Err(format!("select_audio: expected \"A\" or \"B\", got {value}")),
            },
            other => Err(format!("unknown command {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State {
        revision: u64,
        position_s: f64,
        rate: f64,
        playing: bool,
        #[serde(rename = "loop")]
        loop_region: Option<[f64; 2]>,
        audible: Option<Side>,
        server_time_ms: u64,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn state(s: &PlaybackState, server_time_ms: u64) -> Self {
        ServerMessage::State {
            revision: s.revision,
            position_s: s.position_s,
            rate: s.rate,
            playing: s.playing,
            loop_region: s.loop_region.map(|l| [l.a, l.b]),
            audible: s.audible,
            server_time_ms,
        }
    }
}
