//! Hybrid autonomous-driving controller stack.
//!
//! A learned DDPG driving policy, a repulsive potential-field collision
//! avoider and a centerline path tracker each produce a `(steer, accel)`
//! command; a fixed-weight convex blend of the three drives the car. The
//! crate also contains a deterministic 2D racing simulator to train and
//! exercise the stack, and a bridge speaking the Simulated Car Racing (SCR)
//! UDP text protocol for driving external simulators.

// NaN must fail validation, so bounds are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod apf;
pub mod blend;
mod command;
pub mod ddpg;
pub mod harness;
pub mod neural;
mod numfmt;
pub mod scr;
pub mod sensors;
pub mod track;
pub mod tracking;
pub mod world;

pub use command::Command;
pub use numfmt::sig9;

use std::f64::consts::{PI, TAU};

/// Wrap an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(TAU);
    if a > PI {
        a -= TAU;
    }
    a
}
