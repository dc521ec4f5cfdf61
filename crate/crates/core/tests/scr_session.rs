//! UDP session behavior against scripted peers on loopback.

use std::net::{SocketAddr, UdpSocket};
use std::thread;
use std::time::Duration;

use hybrid_drive::scr::{
    format_action_string, format_sensor_string, frame_from_message, message_from_frame, parse_action_string,
    parse_sensor_string, run_client, run_server, ActuatorMessage, ClientOptions, ScrError, ServerOptions, SessionEnd,
};
use hybrid_drive::sensors::sensor_frame;
use hybrid_drive::track::TrackGeometry;
use hybrid_drive::world::{Simulator, WorldState};
use hybrid_drive::Command;

const SHORT: Duration = Duration::from_millis(300);

fn peer() -> (UdpSocket, SocketAddr) {
    let s = UdpSocket::bind("127.0.0.1:0").unwrap();
    s.set_read_timeout(Some(Duration::from_secs(5))).unwrap();
    let addr = s.local_addr().unwrap();
    (s, addr)
}

fn recv_text(s: &UdpSocket) -> (String, SocketAddr) {
    let mut buf = [0u8; 65_536];
    let (n, from) = s.recv_from(&mut buf).unwrap();
    (String::from_utf8(buf[..n].to_vec()).unwrap(), from)
}

fn sensor_text() -> String {
    let geom = TrackGeometry::oval().unwrap();
    let st = WorldState::on_track(&geom, 30.0, 1.0, 12.0);
    format_sensor_string(&message_from_frame(&sensor_frame(&st, &geom)))
}

fn client_opts() -> ClientOptions {
    ClientOptions { timeout: Duration::from_secs(2), ..Default::default() }
}

#[test]
fn client_skips_malformed_datagrams_and_stops_on_shutdown() {
    let (server, addr) = peer();
    let script = thread::spawn(move || {
        let (init, client) = recv_text(&server);
        assert!(init.starts_with("SCR(init -90 -80"));
        server.send_to(b"***identified***", client).unwrap();

        let sensors = sensor_text();
        server.send_to(sensors.as_bytes(), client).unwrap();
        let first = parse_action_string(&recv_text(&server).0).unwrap();

        // A malformed datagram gets no reply.
        server.send_to(b"(angle 0.1)(track 1 2", client).unwrap();
        server.set_read_timeout(Some(SHORT)).unwrap();
        let mut buf = [0u8; 64];
        assert!(server.recv_from(&mut buf).is_err(), "malformed datagram was answered");
        server.set_read_timeout(Some(Duration::from_secs(5))).unwrap();

        server.send_to(sensors.as_bytes(), client).unwrap();
        let second = parse_action_string(&recv_text(&server).0).unwrap();
        server.send_to(b"***shutdown***", client).unwrap();
        (first, second)
    });

    let mut seen = 0;
    let report = run_client(addr, &client_opts(), |msg| {
        seen += 1;
        assert!(frame_from_message(msg).is_ok());
        Command::new(0.25, -0.5)
    })
    .unwrap();
    let (first, second) = script.join().unwrap();

    assert_eq!(seen, 2);
    assert_eq!(report.steps, 2);
    assert_eq!(report.skipped, 1);
    assert_eq!(report.end, SessionEnd::Shutdown);
    let expected = ActuatorMessage { accel: 0.0, brake: 0.5, gear: 1, steer: 0.25 };
    assert_eq!(first, expected);
    assert_eq!(second, expected);
}

#[test]
fn client_honors_restart_and_step_limit() {
    for (limit, end) in [(None, SessionEnd::Restart), (Some(1), SessionEnd::StepLimit)] {
        let (server, addr) = peer();
        let script = thread::spawn(move || {
            let (_, client) = recv_text(&server);
            server.send_to(b"***identified***", client).unwrap();
            server.send_to(sensor_text().as_bytes(), client).unwrap();
            recv_text(&server);
            // Sent regardless; a client at its step limit never reads it.
            server.send_to(b"***restart***", client).unwrap();
        });
        let opts = ClientOptions { max_steps: limit, ..client_opts() };
        let report = run_client(addr, &opts, |_| Command::ZERO).unwrap();
        script.join().unwrap();
        assert_eq!(report.end, end);
        assert_eq!(report.steps, 1);
    }
}

#[test]
fn client_times_out_on_a_silent_server() {
    let (server, addr) = peer();
    let script = thread::spawn(move || {
        let (_, client) = recv_text(&server);
        server.send_to(b"***identified***", client).unwrap();
    });
    let opts = ClientOptions { timeout: SHORT, ..Default::default() };
    let report = run_client(addr, &opts, |_| Command::ZERO).unwrap();
    script.join().unwrap();
    assert_eq!(report.end, SessionEnd::Timeout);
    assert_eq!(report.steps, 0);
}

#[test]
fn client_reports_a_failed_handshake() {
    let (_server, addr) = peer();
    let opts = ClientOptions { timeout: Duration::from_millis(50), handshake_attempts: 2, ..Default::default() };
    assert!(matches!(run_client(addr, &opts, |_| Command::ZERO), Err(ScrError::Handshake)));
}

#[test]
fn server_repeats_the_last_action_after_a_malformed_one() {
    let geom = TrackGeometry::oval().unwrap();
    let sim = Simulator::new(geom.clone());
    let start = WorldState::on_track(&geom, 20.0, 0.0, 10.0);
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = socket.local_addr().unwrap();
    let opts = ServerOptions { timeout: Duration::from_secs(5), accept_timeout: Duration::from_secs(5), max_steps: 3 };
    let served = {
        let (sim, start) = (sim.clone(), start.clone());
        thread::spawn(move || run_server(&socket, &sim, start, &opts).unwrap())
    };

    let (client, _) = peer();
    client.send_to(b"hello", addr).unwrap();
    client.send_to(b"SCR(init -90 90)", addr).unwrap();
    assert_eq!(recv_text(&client).0, "***identified***");
    let steer = ActuatorMessage::from_command(Command::new(0.5, 0.3));
    let replies = [
        format_action_string(&steer).unwrap(),
        "(accel 0.1)(brake".to_string(),
        "(accel 0)(brake 0)(gear 1)(steer 0)".to_string(),
    ];
    for reply in &replies {
        let (text, _) = recv_text(&client);
        let msg = parse_sensor_string(&text).unwrap();
        assert!(frame_from_message(&msg).is_ok());
        client.send_to(reply.as_bytes(), addr).unwrap();
    }
    assert_eq!(recv_text(&client).0, "***shutdown***");
    let (report, end_state) = served.join().unwrap();

    assert_eq!(report.steps, 3);
    assert_eq!(report.skipped, 2);
    assert_eq!(report.end, SessionEnd::StepLimit);
    let mut expected = start;
    for cmd in [steer.to_command(), steer.to_command(), Command::ZERO] {
        expected = sim.step(&expected, cmd);
    }
    assert_eq!(end_state, expected);
}

#[test]
fn client_and_server_drive_in_lockstep() {
    let geom = TrackGeometry::oval().unwrap();
    let sim = Simulator::new(geom.clone());
    let start = WorldState::on_track(&geom, 0.0, 0.0, 5.0);
    let socket = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = socket.local_addr().unwrap();
    let opts = ServerOptions { max_steps: 40, ..Default::default() };
    let served = {
        let (sim, start) = (sim.clone(), start.clone());
        thread::spawn(move || run_server(&socket, &sim, start, &opts).unwrap())
    };
    let report = run_client(addr, &client_opts(), |_| Command::new(0.0, 0.5)).unwrap();
    let (server_report, end_state) = served.join().unwrap();

    assert_eq!(report.steps, 40);
    assert_eq!(report.end, SessionEnd::Shutdown);
    assert_eq!(server_report.steps, 40);
    let mut expected = start;
    for _ in 0..40 {
        expected = sim.step(&expected, Command::new(0.0, 0.5));
    }
    assert_eq!(end_state, expected);
}
