//! Lockstep UDP sessions: one sensor datagram in, one actuator datagram out.

use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::time::Duration;

use log::warn;

use super::wire::{
    format_action_string, format_sensor_string, message_from_frame, parse_action_string, parse_sensor_bytes,
    ActuatorMessage, SensorMessage, IDENTIFIED, RESTART, SHUTDOWN,
};
use super::ScrError;
use crate::sensors::{sensor_frame, track_ray_angle, TRACK_RAY_COUNT};
use crate::world::{Simulator, WorldState};
use crate::Command;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(1000);
const MAX_DATAGRAM: usize = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionEnd {
    Shutdown,
    Restart,
    Timeout,
    /// The configured step limit was reached.
    StepLimit,
    /// The simulated episode ended (server side).
    EpisodeOver,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionReport {
    /// Control steps completed: actions sent (client) or applied (server).
    pub steps: usize,
    pub received: usize,
    pub sent: usize,
    /// Malformed datagrams that were logged and skipped.
    pub skipped: usize,
    pub end: SessionEnd,
}

impl SessionReport {
    fn new() -> Self {
        Self { steps: 0, received: 0, sent: 0, skipped: 0, end: SessionEnd::StepLimit }
    }
}

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub id: String,
    pub timeout: Duration,
    pub handshake_attempts: usize,
    pub max_steps: Option<usize>,
}

impl Default for ClientOptions {
    fn default() -> Self {
        Self { id: "SCR".to_string(), timeout: DEFAULT_TIMEOUT, handshake_attempts: 5, max_steps: None }
    }
}

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub timeout: Duration,
    /// How long to wait for a client to identify.
    pub accept_timeout: Duration,
    pub max_steps: usize,
}

impl Default for ServerOptions {
    fn default() -> Self {
        Self { timeout: DEFAULT_TIMEOUT, accept_timeout: Duration::from_secs(60), max_steps: 1000 }
    }
}

/// Identification datagram: client id followed by the track-ray angles in
/// degrees.
pub fn init_string(id: &str) -> String {
    let angles: Vec<String> =
        (0..TRACK_RAY_COUNT).map(|k| format!("{}", track_ray_angle(k).to_degrees().round())).collect();
    format!("{id}(init {})", angles.join(" "))
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut)
}

/// `Ok(None)` on timeout.
fn recv(socket: &UdpSocket, buf: &mut [u8]) -> Result<Option<(usize, SocketAddr)>, ScrError> {
    match socket.recv_from(buf) {
        Ok(got) => Ok(Some(got)),
        Err(e) if is_timeout(&e) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn sentinel(bytes: &[u8]) -> Option<SessionEnd> {
    let text = std::str::from_utf8(bytes).ok()?.trim_end_matches('\0').trim();
    match text {
        SHUTDOWN => Some(SessionEnd::Shutdown),
        RESTART => Some(SessionEnd::Restart),
        _ => None,
    }
}

/// Drive a remote simulator at `server`.
///
/// After the handshake every sensor datagram is answered with exactly one
/// actuator datagram from `controller`. Malformed datagrams are logged and
/// left unanswered. The session ends on a shutdown or restart token, on a
/// receive timeout, or after `max_steps` actions.
pub fn run_client<F>(server: SocketAddr, opts: &ClientOptions, mut controller: F) -> Result<SessionReport, ScrError>
where
    F: FnMut(&SensorMessage) -> Command,
{
    let bind: SocketAddr = if server.is_ipv4() {
        "0.0.0.0:0".parse().expect("literal address")
    } else {
        "[::]:0".parse().expect("literal address")
    };
    let socket = UdpSocket::bind(bind)?;
    socket.set_read_timeout(Some(opts.timeout))?;
    let mut buf = vec![0u8; MAX_DATAGRAM];
    let mut report = SessionReport::new();

    let init = init_string(&opts.id);
    let mut identified = false;
    for _ in 0..opts.handshake_attempts.max(1) {
        socket.send_to(init.as_bytes(), server)?;
        if let Some((n, _)) = recv(&socket, &mut buf)? {
            if std::str::from_utf8(&buf[..n]).is_ok_and(|t| t.trim_end_matches('\0').trim() == IDENTIFIED) {
                identified = true;
                break;
            }
        }
    }
    if !identified {
        return Err(ScrError::Handshake);
    }

    loop {
        if opts.max_steps.is_some_and(|m| report.steps >= m) {
            report.end = SessionEnd::StepLimit;
            break;
        }
        let Some((n, from)) = recv(&socket, &mut buf)? else {
            report.end = SessionEnd::Timeout;
            break;
        };
        report.received += 1;
        if let Some(end) = sentinel(&buf[..n]) {
            report.end = end;
            break;
        }
        let msg = match parse_sensor_bytes(&buf[..n]) {
            Ok(msg) => msg,
            Err(e) => {
                warn!("skipping malformed sensor datagram: {e}");
                report.skipped += 1;
                continue;
            }
        };
        let action = ActuatorMessage::from_command(controller(&msg));
        socket.send_to(format_action_string(&action)?.as_bytes(), from)?;
        report.sent += 1;
        report.steps += 1;
    }
    Ok(report)
}

/// Serve the built-in simulator to one client on `socket`.
///
/// Waits for an identification datagram, then alternates sending the
/// current sensor string and applying the client's action for up to
/// `max_steps` steps or until the episode ends, and finally sends the
/// shutdown token. A malformed action is logged and the previous action is
/// applied in its place. Returns the report and the final world state.
pub fn run_server(
    socket: &UdpSocket,
    sim: &Simulator,
    start: WorldState,
    opts: &ServerOptions,
) -> Result<(SessionReport, WorldState), ScrError> {
    let mut buf = vec![0u8; MAX_DATAGRAM];
    let mut report = SessionReport::new();

    socket.set_read_timeout(Some(opts.accept_timeout))?;
    let client = loop {
        let Some((n, from)) = recv(socket, &mut buf)? else {
            report.end = SessionEnd::Timeout;
            return Ok((report, start));
        };
        report.received += 1;
        if std::str::from_utf8(&buf[..n]).is_ok_and(|t| t.contains("(init")) {
            break from;
        }
        warn!("ignoring datagram before identification");
        report.skipped += 1;
    };
    socket.send_to(IDENTIFIED.as_bytes(), client)?;
    socket.set_read_timeout(Some(opts.timeout))?;

    let mut state = start;
    let mut action = Command::ZERO;
    while report.steps < opts.max_steps {
        if sim.status(&state).is_terminal() {
            report.end = SessionEnd::EpisodeOver;
            break;
        }
        let frame = sensor_frame(&state, &sim.geometry);
        socket.send_to(format_sensor_string(&message_from_frame(&frame)).as_bytes(), client)?;
        report.sent += 1;
        let reply = loop {
            match recv(socket, &mut buf)? {
                Some((n, from)) if from == client => break Some(n),
                Some(_) => warn!("ignoring datagram from unknown peer"),
                None => break None,
            }
        };
        let Some(n) = reply else {
            report.end = SessionEnd::Timeout;
            break;
        };
        report.received += 1;
        match std::str::from_utf8(&buf[..n]).map_err(|_| ScrError::NotUtf8).and_then(parse_action_string) {
            Ok(a) => action = a.to_command(),
            Err(e) => {
                warn!("malformed action, repeating the previous one: {e}");
                report.skipped += 1;
            }
        }
        state = sim.step(&state, action);
        report.steps += 1;
    }
    socket.send_to(SHUTDOWN.as_bytes(), client)?;
    report.sent += 1;
    Ok((report, state))
}
