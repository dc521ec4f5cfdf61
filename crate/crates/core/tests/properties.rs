//! Property tests for the invariants of each module.

use std::f64::consts::{FRAC_PI_2, PI};

use hybrid_drive::apf::{repulsive_force, ApfConfig};
use hybrid_drive::blend::{blend, BlendWeights, MethodCommands};
use hybrid_drive::ddpg::{reward, soft_update};
use hybrid_drive::neural::{Activation, Mlp};
use hybrid_drive::scr::{
    format_action_string, format_sensor_string, parse_action_string, parse_sensor_bytes, parse_sensor_string,
    ActuatorMessage, Group, SensorMessage,
};
use hybrid_drive::sensors::{
    normalize_state, opponent_sectors, sector_center, sensor_frame, track_rays, ObstacleReading, OPPONENT_SECTOR_COUNT,
};
use hybrid_drive::track::TrackGeometry;
use hybrid_drive::tracking::{target_speed, tracking_steer, TrackingConfig};
use hybrid_drive::world::{Opponent, OpponentScript, Simulator, VehiclePose, WorldState};
use hybrid_drive::Command;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn oval() -> TrackGeometry {
    TrackGeometry::oval().unwrap()
}

fn command() -> impl Strategy<Value = Command> {
    (-1.0..=1.0f64, -1.0..=1.0f64).prop_map(|(s, a)| Command::new(s, a))
}

fn reading() -> impl Strategy<Value = ObstacleReading> {
    (0.5..80.0f64, 0.0..(2.0 * PI)).prop_map(|(d, theta)| ObstacleReading { d, theta })
}

fn small_net(seed: u64, hidden: Activation) -> Mlp {
    Mlp::init(&[4, 6, 5, 3], hidden, Activation::Tanh, 0.5, &mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // ----- track_world -----

    #[test]
    fn simulation_is_deterministic(cmds in prop::collection::vec(command(), 1..60), s in 0.0..388.0f64) {
        let sim = Simulator::new(oval());
        let run = || {
            let mut st = WorldState::on_track(&sim.geometry, s, 0.0, 10.0);
            for c in &cmds {
                st = sim.step(&st, *c);
            }
            st
        };
        prop_assert_eq!(run(), run());
    }

    #[test]
    fn straight_without_steering_keeps_heading_and_offset(
        s in 0.0..20.0f64, e in -5.0..5.0f64, v in 0.0..20.0f64, steps in 1usize..30,
    ) {
        let geom = oval();
        let sim = Simulator::new(geom.clone());
        let mut st = WorldState::on_track(&geom, s, e, v);
        let heading = st.ego.heading;
        for _ in 0..steps {
            st = sim.step(&st, Command::new(0.0, 0.0));
        }
        prop_assert_eq!(st.ego.heading, heading);
        prop_assert!((geom.relative_pose(&st.ego).e - e).abs() < 1e-9);
    }

    #[test]
    fn arc_length_advances_when_driving_forward(
        s in 0.0..388.0f64, e in -4.0..4.0f64, v in 1.0..40.0f64, dpsi in -1.2..1.2f64, steer in -0.3..0.3f64,
    ) {
        let geom = oval();
        let sim = Simulator::new(geom.clone());
        let st = WorldState::with_ego(&geom, geom.pose_at(s, e, dpsi, v));
        let next = sim.step(&st, Command::new(steer, 0.0));
        prop_assert!(next.progress >= 0.0, "progress {}", next.progress);
    }

    #[test]
    fn pose_reconstruction_is_identity(s in 0.0..1.0f64, e in -5.9..5.9f64, dpsi in -1.5..1.5f64, curvy in any::<bool>()) {
        let geom = if curvy { TrackGeometry::curvy().unwrap() } else { oval() };
        let s = s * geom.total_length();
        let pose = geom.pose_at(s, e, dpsi, 3.0);
        let rel = geom.relative_pose(&pose);
        let back = geom.pose_at(rel.s, rel.e, rel.delta_psi, 3.0);
        let tol = if geom.curvature_at(s) == 0.0 { 1e-9 } else { 1e-6 };
        prop_assert!(pose.distance_to(&back) < tol, "moved {}", pose.distance_to(&back));
        prop_assert!((rel.e - e).abs() < tol);
    }

    // ----- sensors -----

    #[test]
    fn normalized_state_is_bounded(s in 0.0..388.0f64, e in -5.9..5.9f64, dpsi in -3.1..3.1f64, v in 0.0..83.3f64) {
        let geom = oval();
        let st = WorldState::with_ego(&geom, geom.pose_at(s, e, dpsi, v));
        let x = normalize_state(&sensor_frame(&st, &geom));
        prop_assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)), "{:?}", x);
    }

    #[test]
    fn opponent_sectors_rotate_with_bearing(d in 6.0..150.0f64, slot in 0usize..OPPONENT_SECTOR_COUNT, heading in -PI..PI) {
        let ego = VehiclePose::new(0.0, 0.0, heading, 0.0);
        let place = |j: usize| {
            // Bearing is measured clockwise from the left of the heading.
            let world_angle = heading + FRAC_PI_2 - sector_center(j);
            let pose = VehiclePose::new(d * world_angle.cos(), d * world_angle.sin(), 0.0, 0.0);
            let mut st = WorldState::with_ego(&oval(), ego);
            st.ego = ego;
            st.opponents.push(Opponent { id: 0, script: OpponentScript { s: 0.0, offset: 0.0, speed: 0.0 }, pose });
            opponent_sectors(&st)
        };
        let (a, b) = (place(slot), place((slot + 1) % OPPONENT_SECTOR_COUNT));
        for j in 0..OPPONENT_SECTOR_COUNT {
            prop_assert!((a[j] - b[(j + 1) % OPPONENT_SECTOR_COUNT]).abs() < 1e-9);
        }
        prop_assert!((a[slot] - d).abs() < 1e-9);
    }

    #[test]
    fn opponents_do_not_touch_track_rays(s in 0.0..388.0f64, e in -5.0..5.0f64, ds in 5.0..40.0f64, off in -5.0..5.0f64) {
        let geom = oval();
        let mut st = WorldState::on_track(&geom, s, e, 10.0);
        let bare = track_rays(&geom, &st.ego);
        st.add_opponent(&geom, OpponentScript { s: geom.wrap_s(s + ds), offset: off, speed: 5.0 });
        prop_assert_eq!(track_rays(&geom, &st.ego), bare);
        prop_assert_eq!(sensor_frame(&st, &geom).track_rays, bare);
    }

    // ----- neural -----

    #[test]
    fn forward_is_deterministic(seed in any::<u64>(), x in prop::array::uniform4(-2.0..2.0f64)) {
        let net = small_net(seed, Activation::Relu);
        prop_assert_eq!(net.predict(&x).unwrap(), net.clone().predict(&x).unwrap());
    }

    #[test]
    fn backward_is_linear_in_upstream(
        seed in any::<u64>(), x in prop::array::uniform4(-2.0..2.0f64),
        u1 in prop::array::uniform3(-1.0..1.0f64), u2 in prop::array::uniform3(-1.0..1.0f64),
        a in -2.0..2.0f64, b in -2.0..2.0f64,
    ) {
        let net = small_net(seed, Activation::Tanh);
        let (_, tape) = net.forward(&x).unwrap();
        let mix: Vec<f64> = u1.iter().zip(&u2).map(|(p, q)| a * p + b * q).collect();
        let g = net.backward(&tape, &mix).unwrap();
        let g1 = net.backward(&tape, &u1).unwrap();
        let g2 = net.backward(&tape, &u2).unwrap();
        for ((m, p), q) in g.params().zip(g1.params()).zip(g2.params()) {
            prop_assert!((m - (a * p + b * q)).abs() < 1e-12);
        }
        for ((m, p), q) in g.input.iter().zip(&g1.input).zip(&g2.input) {
            prop_assert!((m - (a * p + b * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn text_round_trip_is_exact(seed in any::<u64>()) {
        let net = small_net(seed, Activation::Relu);
        prop_assert_eq!(Mlp::from_text(&net.to_text()).unwrap(), net);
    }

    // ----- ddpg -----

    #[test]
    fn reward_is_bounded(v in -10.0..200.0f64, dpsi in -10.0..10.0f64) {
        let r = reward(v.max(0.0), dpsi, 150.0);
        prop_assert!((0.0..=2.0).contains(&r));
    }

    #[test]
    fn soft_update_contracts(s1 in any::<u64>(), s2 in any::<u64>(), tau in 0.0001..1.0f64) {
        let online = small_net(s1, Activation::Relu);
        let mut target = small_net(s2, Activation::Relu);
        let before: Vec<f64> = target.params().collect();
        soft_update(&mut target, &online, tau).unwrap();
        for ((t1, t0), o) in target.params().zip(before).zip(online.params()) {
            prop_assert!(((t1 - o) - (1.0 - tau) * (t0 - o)).abs() < 1e-12);
        }
    }

    // ----- apf -----

    #[test]
    fn force_superposes(a in prop::collection::vec(reading(), 0..4), b in prop::collection::vec(reading(), 0..4)) {
        let cfg = ApfConfig::default();
        let fa = repulsive_force(&a, &cfg).unwrap();
        let fb = repulsive_force(&b, &cfg).unwrap();
        let all: Vec<ObstacleReading> = a.iter().chain(&b).copied().collect();
        let f = repulsive_force(&all, &cfg).unwrap();
        prop_assert!((f.fx - (fa.fx + fb.fx)).abs() < 1e-12);
        prop_assert!((f.fy - (fa.fy + fb.fy)).abs() < 1e-12);
    }

    #[test]
    fn ahead_never_steers_and_far_is_ignored(d in 0.5..49.0f64, far in 50.0..200.0f64, theta in 0.0..PI) {
        let cfg = ApfConfig::default();
        let ahead = repulsive_force(&[ObstacleReading { d, theta: FRAC_PI_2 }], &cfg).unwrap();
        prop_assert_eq!(ahead.fx, 0.0);
        let ignored = repulsive_force(&[ObstacleReading { d: far, theta }], &cfg).unwrap();
        prop_assert_eq!((ignored.fx, ignored.fy), (0.0, 0.0));
    }

    // ----- path_tracking -----

    #[test]
    fn steering_is_odd_and_slowdown_monotone(dpsi in -1.0..1.0f64, e in -6.0..6.0f64, s1 in -1.0..1.0f64, s2 in -1.0..1.0f64) {
        let cfg = TrackingConfig::default();
        prop_assert_eq!(tracking_steer(-dpsi, -e, &cfg), -tracking_steer(dpsi, e, &cfg));
        let (lo, hi) = if s1.abs() <= s2.abs() { (s1, s2) } else { (s2, s1) };
        prop_assert!(target_speed(hi, &cfg) <= target_speed(lo, &cfg));
    }

    // ----- blender -----

    #[test]
    fn blend_is_linear_and_permutation_invariant(
        c1 in prop::array::uniform3(command()), c2 in prop::array::uniform3(command()),
        a in 0.0..1.0f64, wa in 0.0..1.0f64, wb in 0.0..1.0f64,
    ) {
        let wb = wb * (1.0 - wa);
        let w = BlendWeights { alpha: wa, beta: wb, gamma: 1.0 - wa - wb };
        let mc = |c: [Command; 3]| MethodCommands { learn: c[0], apf: c[1], track: c[2] };
        let mix: [Command; 3] = std::array::from_fn(|i| Command::new(
            a * c1[i].steer + (1.0 - a) * c2[i].steer,
            a * c1[i].accel + (1.0 - a) * c2[i].accel,
        ));
        let lhs = blend(&mc(mix), &w);
        let (r1, r2) = (blend(&mc(c1), &w), blend(&mc(c2), &w));
        prop_assert!((lhs.steer - (a * r1.steer + (1.0 - a) * r2.steer)).abs() < 1e-12);
        prop_assert!((lhs.accel - (a * r1.accel + (1.0 - a) * r2.accel)).abs() < 1e-12);

        let rotated_w = BlendWeights { alpha: w.gamma, beta: w.alpha, gamma: w.beta };
        let rotated = blend(&MethodCommands { learn: c1[2], apf: c1[0], track: c1[1] }, &rotated_w);
        prop_assert!((rotated.steer - r1.steer).abs() < 1e-12 && (rotated.accel - r1.accel).abs() < 1e-12);
    }

    #[test]
    fn degenerate_weights_select_one_method(c in prop::array::uniform3(command())) {
        let cmds = MethodCommands { learn: c[0], apf: c[1], track: c[2] };
        for (i, w) in [(1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)].into_iter().enumerate() {
            let out = blend(&cmds, &BlendWeights::new(w.0, w.1, w.2).unwrap());
            prop_assert_eq!(out, c[i]);
        }
    }

    // ----- scr_bridge -----

    #[test]
    fn sensor_parser_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        let _ = parse_sensor_bytes(&bytes);
    }

    #[test]
    fn sensor_parser_never_panics_on_near_misses(text in "[()a-zA-Z0-9 .eE+-]{0,120}") {
        if let Ok(msg) = parse_sensor_string(&text) {
            prop_assert_eq!(parse_sensor_string(&format_sensor_string(&msg)).unwrap(), msg);
        }
        let _ = parse_action_string(&text);
    }

    #[test]
    fn sensor_messages_round_trip(
        angle in -PI..PI, pos in -2.0..2.0f64, extra in prop::collection::vec(-1e6..1e6f64, 1..6),
        track in prop::array::uniform19(0.0..200.0f64),
    ) {
        let group = |name: &str, values: Vec<f64>| Group { name: name.to_string(), values };
        let msg = SensorMessage {
            groups: vec![
                group("angle", vec![angle]),
                group("custom_1", extra),
                group("track", track.to_vec()),
                group("trackPos", vec![pos]),
            ],
        };
        let text = format_sensor_string(&msg);
        let back = parse_sensor_string(&text).unwrap();
        prop_assert_eq!(&back, &msg);
        prop_assert_eq!(format_sensor_string(&back), text);
    }

    #[test]
    fn actions_round_trip_exactly(c in command()) {
        let a = ActuatorMessage::from_command(c);
        prop_assert_eq!(parse_action_string(&format_action_string(&a).unwrap()).unwrap(), a);
        prop_assert!(a.accel == 0.0 || a.brake == 0.0);
        prop_assert_eq!(a.to_command().accel, c.accel);
    }
}
