/// One normalized actuation pair.
///
/// `steer > 0` turns left; `accel < 0` brakes. Both components live in
/// `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    pub steer: f64,
    pub accel: f64,
}

impl Command {
    pub const ZERO: Command = Command { steer: 0.0, accel: 0.0 };

    pub fn new(steer: f64, accel: f64) -> Self {
        Self { steer, accel }
    }

    /// Saturate both components into `[-1, 1]`.
    pub fn clamped(self) -> Self {
        Self { steer: self.steer.clamp(-1.0, 1.0), accel: self.accel.clamp(-1.0, 1.0) }
    }

    pub fn is_bounded(&self) -> bool {
        (-1.0..=1.0).contains(&self.steer) && (-1.0..=1.0).contains(&self.accel)
    }
}
