//! Simulated Car Racing (SCR) UDP bridge.
//!
//! [`wire`] encodes and decodes datagrams; [`session`] runs the lockstep
//! client and server loops over a UDP socket.

pub mod session;
pub mod wire;

use thiserror::Error;

pub use session::{run_client, run_server, ClientOptions, ServerOptions, SessionEnd, SessionReport};
pub use wire::{
    format_action_string, format_sensor_string, frame_from_message, message_from_frame, parse_action_string,
    parse_sensor_bytes, parse_sensor_string, ActuatorMessage, Group, SensorMessage,
};

#[derive(Debug, Error, PartialEq)]
pub enum ScrError {
    #[error("empty message")]
    Empty,
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("message is not valid UTF-8")]
    NotUtf8,
    #[error("invalid group name `{0}`")]
    BadName(String),
    #[error("group `{0}` has no values")]
    EmptyGroup(String),
    #[error("not a finite number: `{0}`")]
    BadNumber(String),
    #[error("`{name}` expects {expected} values, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("group `{0}` appears twice")]
    Duplicate(String),
    #[error("missing group `{0}`")]
    Missing(&'static str),
    #[error("actuator values out of range: {0:?}")]
    ActionRange(ActuatorMessage),
    #[error("socket error: {0}")]
    Io(String),
    #[error("no identification from peer")]
    Handshake,
}

impl From<std::io::Error> for ScrError {
    fn from(e: std::io::Error) -> Self {
        ScrError::Io(e.to_string())
    }
}
