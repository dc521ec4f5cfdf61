//! Dense feed-forward networks with exact reverse-mode gradients.
//!
//! Everything is `f64`. Weights are stored row-major (`outputs × inputs`).
//! [`Mlp::backward`] returns gradients of `upstream · output` with respect to
//! every parameter and to the network input; the input gradient is what lets
//! the critic hand `∂Q/∂a` to the actor.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("weight file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative given the pre-activation `z` and output `y`.
    #[inline]
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            // The kink at 0 takes the zero subgradient.
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub outputs: usize,
    pub inputs: usize,
    /// Row-major, `outputs × inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { outputs, inputs, weights: vec![0.0; outputs * inputs], bias: vec![0.0; outputs], activation }
    }

    /// Weights and biases drawn from `uniform(-bound, bound)`.
    pub fn uniform<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        bound: f64,
        rng: &mut R,
    ) -> Self {
        let mut layer = Self::zeros(inputs, outputs, activation);
        for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
            *w = rng.random_range(-bound..=bound);
        }
        layer
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// A multilayer perceptron; the network parameters of actor or critic.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// Activations cached by a forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// `values[0]` is the input, `values[i + 1]` the output of layer `i`.
    values: Vec<Vec<f64>>,
    /// Pre-activations of each layer.
    pre: Vec<Vec<f64>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.values.last().expect("tape holds the input")
    }

    /// Pre-activation values of layer `i`.
    pub fn pre_activation(&self, i: usize) -> &[f64] {
        &self.pre[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Parameter gradients shaped like an [`Mlp`], plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGrad { weights: vec![0.0; l.weights.len()], bias: vec![0.0; l.bias.len()] })
                .collect(),
            input: vec![0.0; net.input_dim()],
        }
    }

    /// Parameter gradients in [`Mlp::param`] order.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.params_mut() {
            *g *= factor;
        }
        for g in &mut self.input {
            *g *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(f64::is_finite) && self.input.iter().all(|g| g.is_finite())
    }

    fn check_shape(&self, net: &Mlp) -> Result<(), NeuralError> {
        if self.layers.len() != net.layers.len() {
            return Err(NeuralError::DimensionMismatch { expected: net.layers.len(), got: self.layers.len() });
        }
        for (g, l) in self.layers.iter().zip(&net.layers) {
            if g.weights.len() != l.weights.len() || g.bias.len() != l.bias.len() {
                return Err(NeuralError::DimensionMismatch {
                    expected: l.param_count(),
                    got: g.weights.len() + g.bias.len(),
                });
            }
        }
        Ok(())
    }
}

impl Mlp {
    pub fn new(layers: Vec<Layer>) -> Result<Self, NeuralError> {
        if layers.is_empty() {
            return Err(NeuralError::DimensionMismatch { expected: 1, got: 0 });
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(NeuralError::DimensionMismatch { expected: pair[0].outputs, got: pair[1].inputs });
            }
        }
        for l in &layers {
            if l.weights.len() != l.outputs * l.inputs || l.bias.len() != l.outputs {
                return Err(NeuralError::DimensionMismatch {
                    expected: l.outputs * l.inputs + l.outputs,
                    got: l.weights.len() + l.bias.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    /// Randomly initialised network with layer widths `sizes`.
    ///
    /// Hidden layers draw from `uniform(±1/√fan_in)`; the output layer from
    /// `uniform(±output_bound)`.
    pub fn init<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        output_bound: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output widths");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                if i == last {
                    Layer::uniform(w[0], w[1], output, output_bound, rng)
                } else {
                    Layer::uniform(w[0], w[1], hidden, 1.0 / (w[0] as f64).sqrt(), rng)
                }
            })
            .collect();
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    fn locate(&self, mut index: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            if index < l.weights.len() {
                return (li, true, index);
            }
            index -= l.weights.len();
            if index < l.bias.len() {
                return (li, false, index);
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Parameter by flat index: layer by layer, weights then biases.
    pub fn param(&self, index: usize) -> f64 {
        let (li, is_weight, i) = self.locate(index);
        let l = &self.layers[li];
        if is_weight {
            l.weights[i]
        } else {
            l.bias[i]
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let (li, is_weight, i) = self.locate(index);
        let l = &mut self.layers[li];
        if is_weight {
            l.weights[i] = value;
        } else {
            l.bias[i] = value;
        }
    }

    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(f64::is_finite)
    }

    /// Whether `other` has identical layer shapes and activations.
    pub fn same_shape(&self, other: &Mlp) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs && a.activation == b.activation)
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, Tape), NeuralError> {
        if input.len() != self.input_dim() {
            return Err(NeuralError::DimensionMismatch { expected: self.input_dim(), got: input.len() });
        }
        let mut values = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        values.push(input.to_vec());
        for layer in &self.layers {
            let x = values.last().expect("input pushed");
            let mut z = layer.bias.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                *zo += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
            }
            let y = z.iter().map(|&zi| layer.activation.apply(zi)).collect();
            pre.push(z);
            values.push(y);
        }
        let output = values.last().expect("at least one layer").clone();
        Ok((output, Tape { values, pre }))
    }

    /// Forward pass without keeping the tape.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.forward(input).map(|(out, _)| out)
    }

    /// Gradients of `upstream · output` for the forward pass in `tape`.
    pub fn backward(&self, tape: &Tape, upstream: &[f64]) -> Result<Gradients, NeuralError> {
        let mut grads = Gradients::zeros_like(self);
        self.accumulate_backward(tape, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Like [`Mlp::backward`] but adds parameter gradients into `grads`.
    /// `grads.input` is overwritten with this sample's input gradient.
    pub fn accumulate_backward(&self, tape: &Tape, upstream: &[f64], grads: &mut Gradients) -> Result<(), NeuralError> {
        if upstream.len() != self.output_dim() {
            return Err(NeuralError::DimensionMismatch { expected: self.output_dim(), got: upstream.len() });
        }
        if tape.pre.len() != self.layers.len() || tape.values[0].len() != self.input_dim() {
            return Err(NeuralError::DimensionMismatch { expected: self.layers.len(), got: tape.pre.len() });
        }
        grads.check_shape(self)?;

        let mut delta_out: Vec<f64> = upstream.to_vec();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            let z = &tape.pre[li];
            let y = &tape.values[li + 1];
            let x = &tape.values[li];
            // dL/dz
            let delta: Vec<f64> = delta_out
                .iter()
                .zip(z.iter().zip(y))
                .map(|(d, (&zi, &yi))| d * layer.activation.derivative(zi, yi))
                .collect();
            let g = &mut grads.layers[li];
            let mut delta_in = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                if d == 0.0 {
                    continue;
                }
                let row = o * layer.inputs..(o + 1) * layer.inputs;
                for ((gw, w), (xi, di)) in
                    g.weights[row.clone()].iter_mut().zip(&layer.weights[row]).zip(x.iter().zip(delta_in.iter_mut()))
                {
                    *gw += d * xi;
                    *di += d * w;
                }
            }
            delta_out = delta_in;
        }
        grads.input.copy_from_slice(&delta_out);
        Ok(())
    }

    /// Serialize in the `mlpv1` text format.
    ///
    /// ```text
    /// mlpv1 <num_layers>
    /// <out> <in> <activation>
    /// <out rows of in weights>
    /// <out biases>
    /// ```
    /// Values are written with 17 significant digits so parsing is exact.
    pub fn to_text(&self) -> String {
        let mut out = format!("mlpv1 {}\n", self.layers.len());
        for l in &self.layers {
            let _ = writeln!(out, "{} {} {}", l.outputs, l.inputs, l.activation.name());
            for row in l.weights.chunks(l.inputs) {
                out.push_str(&join_exact(row));
                out.push('\n');
            }
            out.push_str(&join_exact(&l.bias));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NeuralError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| NeuralError::Parse { line: line + 1, message };
        let (hl, header) = lines.next().ok_or_else(|| parse_err(0, "empty file".into()))?;
        let mut head = header.split_whitespace();
        if head.next() != Some("mlpv1") {
            return Err(parse_err(hl, "missing `mlpv1` magic".into()));
        }
        let count: usize =
            head.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err(hl, "bad layer count".into()))?;

        // Remaining tokens are consumed layer by layer.
        let mut tokens = lines.flat_map(|(i, l)| l.split_whitespace().map(move |t| (i, t)));
        let mut next_token =
            |what: &str| tokens.next().ok_or_else(|| parse_err(0, format!("unexpected end of file reading {what}")));
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (li, out_tok) = next_token("layer header")?;
            let outputs: usize = out_tok.parse().map_err(|_| parse_err(li, format!("bad output width `{out_tok}`")))?;
            let (li, in_tok) = next_token("layer header")?;
            let inputs: usize = in_tok.parse().map_err(|_| parse_err(li, format!("bad input width `{in_tok}`")))?;
            let (li, act_tok) = next_token("layer header")?;
            let activation = Activation::from_name(act_tok)
                .ok_or_else(|| parse_err(li, format!("unknown activation `{act_tok}`")))?;
            let mut layer = Layer::zeros(inputs, outputs, activation);
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                let (li, tok) = next_token("weights")?;
                *w = tok.parse().map_err(|_| parse_err(li, format!("bad number `{tok}`")))?;
                if !w.is_finite() {
                    return Err(NeuralError::NonFinite("weight file"));
                }
            }
            layers.push(layer);
        }
        if let Some((li, tok)) = tokens.next() {
            return Err(parse_err(li, format!("trailing token `{tok}`")));
        }
        Self::new(layers)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn join_exact(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 25);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:.16e}");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// First and second moment estimates for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let n = net.param_count();
        Self { config, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }
}

/// One bias-corrected Adam descent step: `params -= lr · m̂ / (√v̂ + ε)`.
pub fn adam_step(params: &mut Mlp, grads: &Gradients, lr: f64, state: &mut AdamState) -> Result<(), NeuralError> {
    grads.check_shape(params)?;
    if state.m.len() != params.param_count() {
        return Err(NeuralError::DimensionMismatch { expected: params.param_count(), got: state.m.len() });
    }
    if !grads.params().all(f64::is_finite) {
        return Err(NeuralError::NonFinite("gradient"));
    }
    let AdamConfig { beta1, beta2, eps } = state.config;
    state.t += 1;
    let bias1 = 1.0 - beta1.powi(state.t as i32);
    let bias2 = 1.0 - beta2.powi(state.t as i32);
    for (((p, g), m), v) in params.params_mut().zip(grads.params()).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

/// Outcome of a finite-difference gradient check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// Worst relative error over checked coordinates.
    pub max_rel_error: f64,
    pub checked: usize,
    /// Coordinates whose perturbation moved a relu across its kink; the
    /// function is not differentiable there, so they are excluded.
    pub skipped_kinks: usize,
}

/// Denominator floor for relative errors of near-zero gradients.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compare [`Mlp::backward`] against central differences of
/// `upstream · output` on every parameter and input coordinate.
pub fn finite_diff_check(net: &Mlp, input: &[f64], h: f64, upstream: &[f64]) -> Result<GradCheck, NeuralError> {
    assert!(h > 0.0, "step must be positive");
    let (_, tape) = net.forward(input)?;
    let grads = net.backward(&tape, upstream)?;
    let base_pattern = relu_pattern(net, &tape);

    let objective = |n: &Mlp, x: &[f64]| -> Result<(f64, Vec<bool>), NeuralError> {
        let (out, tape) = n.forward(x)?;
        let f = out.iter().zip(upstream).map(|(o, u)| o * u).sum();
        Ok((f, relu_pattern(n, &tape)))
    };

    let mut report = GradCheck { max_rel_error: 0.0, checked: 0, skipped_kinks: 0 };
    let mut record = |analytic: f64, plus: (f64, Vec<bool>), minus: (f64, Vec<bool>)| {
        if plus.1 != base_pattern || minus.1 != base_pattern {
            report.skipped_kinks += 1;
            return;
        }
        let numeric = (plus.0 - minus.0) / (2.0 * h);
        report.max_rel_error = report.max_rel_error.max(relative_error(analytic, numeric));
        report.checked += 1;
    };

    let mut probe = net.clone();
    for (i, analytic) in grads.params().enumerate() {
        let original = net.param(i);
        probe.set_param(i, original + h);
        let plus = objective(&probe, input)?;
        probe.set_param(i, original - h);
        let minus = objective(&probe, input)?;
        probe.set_param(i, original);
        record(analytic, plus, minus);
    }
    let mut x = input.to_vec();
    for (i, &analytic) in grads.input.iter().enumerate() {
        x[i] = input[i] + h;
        let plus = objective(net, &x)?;
        x[i] = input[i] - h;
        let minus = objective(net, &x)?;
        x[i] = input[i];
        record(analytic, plus, minus);
    }
    Ok(report)
}

fn relu_pattern(net: &Mlp, tape: &Tape) -> Vec<bool> {
    net.layers
        .iter()
        .enumerate()
        .filter(|(_, l)| l.activation == Activation::Relu)
        .flat_map(|(i, _)| tape.pre[i].iter().map(|&z| z > 0.0))
        .collect()
}
