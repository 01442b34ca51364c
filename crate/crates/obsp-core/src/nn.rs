//! Actor-critic network, optimizer and checkpoint format.
//!
//! The network is small enough (two tanh layers, a logit head and a value
//! head) that hand-rolled f64 forward/backward passes beat pulling in a
//! tensor library: gradients stay exactly reproducible across machines and
//! the whole parameter vector fits in a flat `Vec<f64>` that the optimizer
//! and the checkpoint format share.

use std::fmt;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fsio::write_atomic;

/// Inputs are divided by the state-encoding scale so activations start in
/// a tanh-friendly range.
pub const INPUT_SCALE: f64 = 1.0 / crate::env::SCALE_M as f64;
pub const HIDDEN_WIDTH: usize = 64;

pub const ADAM_LR: f64 = 3e-4;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

const CHECKPOINT_MAGIC: [u8; 8] = *b"OBSPNET\0";
const CHECKPOINT_VERSION: u32 = 1;
/// Upper bounds a checkpoint's header may claim; anything larger is
/// rejected before any allocation happens.
const MAX_LAYER_DIM: u32 = 4096;
const MAX_PARAM_COUNT: u64 = 1 << 26;

#[derive(Debug)]
pub enum NnError {
    BadMagic,
    UnsupportedVersion(u32),
    BadDimension(u32),
    OversizedParamVector(u64),
    WrongParamCount { declared: u64, expected: u64 },
    Truncated { needed: usize, got: usize },
    TrailingBytes(usize),
    NonFiniteGradient,
    Io(io::Error),
}

impl fmt::Display for NnError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NnError::BadMagic => write!(f, "not a network checkpoint (bad magic)"),
            NnError::UnsupportedVersion(v) => write!(f, "unsupported checkpoint version {v}"),
            NnError::BadDimension(d) => {
                write!(f, "layer dimension {d} is outside 1..={MAX_LAYER_DIM}")
            }
            NnError::OversizedParamVector(n) => {
                write!(f, "checkpoint declares {n} parameters, limit is {MAX_PARAM_COUNT}")
            }
            NnError::WrongParamCount { declared, expected } => {
                write!(f, "checkpoint declares {declared} parameters, dimensions imply {expected}")
            }
            NnError::Truncated { needed, got } => {
                write!(f, "checkpoint truncated: needed {needed} more bytes, got {got}")
            }
            NnError::TrailingBytes(n) => write!(f, "checkpoint has {n} trailing bytes"),
            NnError::NonFiniteGradient => write!(f, "gradient contains a non-finite value"),
            NnError::Io(e) => write!(f, "checkpoint i/o failed: {e}"),
        }
    }
}

impl std::error::Error for NnError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            NnError::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for NnError {
    fn from(e: io::Error) -> Self {
        NnError::Io(e)
    }
}

/// Parameter count for the four dense layers including biases.
pub fn param_count_for(input: usize, hidden1: usize, hidden2: usize, actions: usize) -> usize {
    (input + 1) * hidden1 + (hidden1 + 1) * hidden2 + (hidden2 + 1) * actions + (hidden2 + 1)
}

/// Offsets of each weight block inside the flat parameter vector.
#[derive(Clone, Copy, Debug)]
struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    wp: usize,
    bp: usize,
    wv: usize,
    bv: usize,
    total: usize,
}

impl Layout {
    fn new(input: usize, hidden1: usize, hidden2: usize, actions: usize) -> Layout {
        let w1 = 0;
        let b1 = w1 + hidden1 * input;
        let w2 = b1 + hidden1;
        let b2 = w2 + hidden2 * hidden1;
        let wp = b2 + hidden2;
        let bp = wp + actions * hidden2;
        let wv = bp + actions;
        let bv = wv + hidden2;
        Layout { w1, b1, w2, b2, wp, bp, wv, bv, total: bv + 1 }
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    x: Vec<f64>,
    h1: Vec<f64>,
    h2: Vec<f64>,
}

/// Two shared tanh layers feeding an action-logit head and a scalar value
/// head. Parameters live in one flat vector, row-major per layer with the
/// bias after the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyValueNet {
    pub input: usize,
    pub hidden1: usize,
    pub hidden2: usize,
    pub actions: usize,
    pub params: Vec<f64>,
}

impl PolicyValueNet {
    /// Fresh network with scaled uniform init. The policy head starts near
    /// zero so the initial policy is close to uniform.
    pub fn new(input: usize, hidden1: usize, hidden2: usize, actions: usize, seed: u64) -> Self {
        let layout = Layout::new(input, hidden1, hidden2, actions);
        let mut params = vec![0.0f64; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize, gain: f64, params: &mut [f64]| {
            let limit = gain * (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.gen_range(-limit..limit);
            }
        };
        fill(layout.w1..layout.b1, input, hidden1, 1.0, &mut params);
        fill(layout.w2..layout.b2, hidden1, hidden2, 1.0, &mut params);
        fill(layout.wp..layout.bp, hidden2, actions, 0.01, &mut params);
        fill(layout.wv..layout.bv, hidden2, 1, 1.0, &mut params);
        PolicyValueNet { input, hidden1, hidden2, actions, params }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn layout(&self) -> Layout {
        Layout::new(self.input, self.hidden1, self.hidden2, self.actions)
    }

    /// Logits and value for one state.
    pub fn forward(&self, state: &[f64]) -> (Vec<f64>, f64) {
        let fwd = self.forward_cached(state);
        (fwd.0, fwd.1)
    }

    /// Forward pass that also returns the activations needed by
    /// [`PolicyValueNet::backward`].
    pub fn forward_cached(&self, state: &[f64]) -> (Vec<f64>, f64, ForwardCache) {
        assert_eq!(state.len(), self.input, "state dimension mismatch");
        let l = self.layout();
        let p = &self.params;
        let x: Vec<f64> = state.iter().map(|v| v * INPUT_SCALE).collect();
        let mut h1 = vec![0.0; self.hidden1];
        for j in 0..self.hidden1 {
            let row = &p[l.w1 + j * self.input..l.w1 + (j + 1) * self.input];
            let mut z = p[l.b1 + j];
            for (w, xi) in row.iter().zip(&x) {
                z += w * xi;
            }
            h1[j] = z.tanh();
        }
        let mut h2 = vec![0.0; self.hidden2];
        for j in 0..self.hidden2 {
            let row = &p[l.w2 + j * self.hidden1..l.w2 + (j + 1) * self.hidden1];
            let mut z = p[l.b2 + j];
            for (w, hi) in row.iter().zip(&h1) {
                z += w * hi;
            }
            h2[j] = z.tanh();
        }
        let mut logits = vec![0.0; self.actions];
        for (j, logit) in logits.iter_mut().enumerate() {
            let row = &p[l.wp + j * self.hidden2..l.wp + (j + 1) * self.hidden2];
            let mut z = p[l.bp + j];
            for (w, hi) in row.iter().zip(&h2) {
                z += w * hi;
            }
            *logit = z;
        }
        let mut value = p[l.bv];
        for (w, hi) in p[l.wv..l.wv + self.hidden2].iter().zip(&h2) {
            value += w * hi;
        }
        (logits, value, ForwardCache { x, h1, h2 })
    }

    /// Accumulates dLoss/dparams into `grad`, given the loss gradients at
    /// the two heads for the cached forward pass.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        dlogits: &[f64],
        dvalue: f64,
        grad: &mut [f64],
    ) {
        assert_eq!(dlogits.len(), self.actions);
        assert_eq!(grad.len(), self.params.len());
        let l = self.layout();
        let p = &self.params;

        // Heads.
        let mut dh2 = vec![0.0; self.hidden2];
        for (j, &dl) in dlogits.iter().enumerate() {
            let row = l.wp + j * self.hidden2;
            for i in 0..self.hidden2 {
                grad[row + i] += dl * cache.h2[i];
                dh2[i] += dl * p[row + i];
            }
            grad[l.bp + j] += dl;
        }
        for i in 0..self.hidden2 {
            grad[l.wv + i] += dvalue * cache.h2[i];
            dh2[i] += dvalue * p[l.wv + i];
        }
        grad[l.bv] += dvalue;

        // Second tanh layer.
        let mut dh1 = vec![0.0; self.hidden1];
        for j in 0..self.hidden2 {
            let dz = dh2[j] * (1.0 - cache.h2[j] * cache.h2[j]);
            let row = l.w2 + j * self.hidden1;
            for i in 0..self.hidden1 {
                grad[row + i] += dz * cache.h1[i];
                dh1[i] += dz * p[row + i];
            }
            grad[l.b2 + j] += dz;
        }

        // First tanh layer.
        for j in 0..self.hidden1 {
            let dz = dh1[j] * (1.0 - cache.h1[j] * cache.h1[j]);
            let row = l.w1 + j * self.input;
            for i in 0..self.input {
                grad[row + i] += dz * cache.x[i];
            }
            grad[l.b1 + j] += dz;
        }
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Numerically stable log-softmax.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - max - log_sum).collect()
}

/// Adam with bias correction over a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(param_count: usize, lr: f64) -> Adam {
        Adam {
            lr,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            eps: ADAM_EPS,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    /// One update. A non-finite gradient aborts before any parameter or
    /// moment is touched.
    pub fn apply(&mut self, params: &mut [f64], grad: &[f64]) -> Result<(), NnError> {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient);
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).ok_or(NnError::Truncated {
            needed: n,
            got: self.bytes.len() - self.pos,
        })?;
        if end > self.bytes.len() {
            return Err(NnError::Truncated { needed: n, got: self.bytes.len() - self.pos });
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, NnError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>, NnError> {
        let raw = self.take(n * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

/// A decoded checkpoint: the network and, for resumable training, the
/// optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub net: PolicyValueNet,
    pub adam: Option<Adam>,
}

/// Serializes network (and optional optimizer) into the checkpoint wire
/// format: magic, version, layer dimensions, parameter count, parameters,
/// then the optimizer block behind a presence flag. All integers and
/// floats are little-endian.
pub fn encode_checkpoint(net: &PolicyValueNet, adam: Option<&Adam>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for dim in [net.input, net.hidden1, net.hidden2, net.actions, 1usize] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    out.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
    for p in &net.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    match adam {
        None => out.push(0),
        Some(a) => {
            out.push(1);
            for v in [a.lr, a.beta1, a.beta2, a.eps] {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.extend_from_slice(&a.step.to_le_bytes());
            for v in a.m.iter().chain(a.v.iter()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

/// Parses a checkpoint, validating structure before allocating: magic,
/// version, dimension bounds, the declared parameter count against the
/// dimensions, and the exact byte length.
pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, NnError> {
    let mut r = ByteReader::new(bytes);
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(NnError::BadMagic);
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(NnError::UnsupportedVersion(version));
    }
    let mut dims = [0u32; 5];
    for d in &mut dims {
        *d = r.u32()?;
        if *d == 0 || *d > MAX_LAYER_DIM {
            return Err(NnError::BadDimension(*d));
        }
    }
    if dims[4] != 1 {
        return Err(NnError::BadDimension(dims[4]));
    }
    let declared = r.u64()?;
    if declared > MAX_PARAM_COUNT {
        return Err(NnError::OversizedParamVector(declared));
    }
    let (input, hidden1, hidden2, actions) =
        (dims[0] as usize, dims[1] as usize, dims[2] as usize, dims[3] as usize);
    let expected = param_count_for(input, hidden1, hidden2, actions) as u64;
    if declared != expected {
        return Err(NnError::WrongParamCount { declared, expected });
    }
    let count = declared as usize;
    let params = r.f64_vec(count)?;
    let has_adam = r.take(1)?[0];
    let adam = match has_adam {
        0 => None,
        _ => {
            let lr = r.f64()?;
            let beta1 = r.f64()?;
            let beta2 = r.f64()?;
            let eps = r.f64()?;
            let step = r.u64()?;
            let m = r.f64_vec(count)?;
            let v = r.f64_vec(count)?;
            Some(Adam { lr, beta1, beta2, eps, step, m, v })
        }
    };
    if r.remaining() != 0 {
        return Err(NnError::TrailingBytes(r.remaining()));
    }
    Ok(Checkpoint { net: PolicyValueNet { input, hidden1, hidden2, actions, params }, adam })
}

pub fn save_checkpoint(
    path: &Path,
    net: &PolicyValueNet,
    adam: Option<&Adam>,
) -> Result<(), NnError> {
    Ok(write_atomic(path, &encode_checkpoint(net, adam))?)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, NnError> {
    decode_checkpoint(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_net(seed: u64) -> PolicyValueNet {
        PolicyValueNet::new(4, 8, 8, 5, seed)
    }

    #[test]
    fn default_topology_has_the_expected_parameter_count() {
        let net = PolicyValueNet::new(23, 64, 64, 31, 0);
        assert_eq!(net.param_count(), 7776);
        assert_eq!(net.param_count(), param_count_for(23, 64, 64, 31));
    }

    #[test]
    fn init_is_seed_deterministic() {
        assert_eq!(small_net(7).params, small_net(7).params);
        assert_ne!(small_net(7).params, small_net(8).params);
    }

    #[test]
    fn fresh_policy_is_close_to_uniform() {
        let net = PolicyValueNet::new(23, 64, 64, 31, 3);
        let state = vec![12.0; 23];
        let (logits, _) = net.forward(&state);
        let probs = softmax(&logits);
        for p in &probs {
            assert!((p - 1.0 / 31.0).abs() < 1e-3, "p = {p}");
        }
        let entropy: f64 = probs.iter().map(|p| -p * p.ln()).sum();
        assert!((entropy - (31.0f64).ln()).abs() < 1e-4);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let net = small_net(42);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let state: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..25.0)).collect();
        // Fixed linear loss over both heads keeps the oracle trivial.
        let cl: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cv: f64 = rng.gen_range(-1.0..1.0);
        let loss = |net: &PolicyValueNet| {
            let (logits, value) = net.forward(&state);
            logits.iter().zip(&cl).map(|(l, c)| l * c).sum::<f64>() + cv * value
        };
        let (_, _, cache) = net.forward_cached(&state);
        let mut grad = vec![0.0; net.param_count()];
        net.backward(&cache, &cl, cv, &mut grad);
        let h = 1e-6;
        for i in (0..net.param_count()).step_by(3) {
            let mut plus = net.clone();
            plus.params[i] += h;
            let mut minus = net.clone();
            minus.params[i] -= h;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * h);
            assert!(
                (numeric - grad[i]).abs() < 1e-6 * (1.0 + numeric.abs()),
                "param {i}: numeric {numeric} vs analytic {}",
                grad[i]
            );
        }
    }

    #[test]
    fn adam_first_step_moves_by_the_learning_rate() {
        let mut params = vec![1.0, -2.0, 0.5];
        let grad = vec![0.3, -0.7, 0.0];
        let mut adam = Adam::new(3, 1e-3);
        adam.apply(&mut params, &grad).unwrap();
        // With bias correction the first update is lr * sign(g) up to eps.
        assert!((params[0] - (1.0 - 1e-3)).abs() < 1e-6);
        assert!((params[1] - (-2.0 + 1e-3)).abs() < 1e-6);
        assert_eq!(params[2], 0.5);
        assert_eq!(adam.step, 1);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut params = vec![1.0, 2.0];
        let before = params.clone();
        let mut adam = Adam::new(2, 1e-3);
        let err = adam.apply(&mut params, &[f64::NAN, 0.0]).unwrap_err();
        assert!(matches!(err, NnError::NonFiniteGradient));
        assert_eq!(params, before);
        assert_eq!(adam.step, 0);
    }

    #[test]
    fn checkpoints_round_trip_bit_exactly() {
        let net = small_net(99);
        let mut adam = Adam::new(net.param_count(), ADAM_LR);
        let mut params = net.params.clone();
        let grad: Vec<f64> = (0..net.param_count()).map(|i| (i as f64 * 0.37).sin()).collect();
        adam.apply(&mut params, &grad).unwrap();
        let net = PolicyValueNet { params, ..net };

        let bytes = encode_checkpoint(&net, Some(&adam));
        let decoded = decode_checkpoint(&bytes).unwrap();
        assert_eq!(decoded.net, net);
        assert_eq!(decoded.adam.as_ref(), Some(&adam));
        assert_eq!(encode_checkpoint(&decoded.net, decoded.adam.as_ref()), bytes);

        let bare = encode_checkpoint(&net, None);
        let decoded = decode_checkpoint(&bare).unwrap();
        assert_eq!(decoded.net, net);
        assert_eq!(decoded.adam, None);
    }

    #[test]
    fn decoder_rejects_malformed_input() {
        let net = small_net(1);
        let good = encode_checkpoint(&net, None);

        assert!(matches!(decode_checkpoint(b"not a checkpoint"), Err(NnError::BadMagic)));
        assert!(matches!(decode_checkpoint(&good[..10]), Err(NnError::Truncated { .. })));

        let mut bad_version = good.clone();
        bad_version[8] = 9;
        assert!(matches!(decode_checkpoint(&bad_version), Err(NnError::UnsupportedVersion(9))));

        let mut zero_dim = good.clone();
        zero_dim[12..16].copy_from_slice(&0u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&zero_dim), Err(NnError::BadDimension(0))));

        let mut huge_dim = good.clone();
        huge_dim[12..16].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(matches!(decode_checkpoint(&huge_dim), Err(NnError::BadDimension(_))));

        // Dimension/count mismatch: change a dim but not the count.
        let mut mismatch = good.clone();
        mismatch[16..20].copy_from_slice(&4u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&mismatch), Err(NnError::WrongParamCount { .. })));

        let mut trailing = good.clone();
        trailing.push(0);
        assert!(matches!(decode_checkpoint(&trailing), Err(NnError::TrailingBytes(1))));

        let mut truncated = good.clone();
        truncated.truncate(good.len() - 3);
        assert!(matches!(decode_checkpoint(&truncated), Err(NnError::Truncated { .. })));
    }

    #[test]
    fn checkpoint_files_survive_a_disk_round_trip() {
        let dir = std::env::temp_dir().join(format!("nn-ckpt-{}", std::process::id()));
        let path = dir.join("net.ckpt");
        let net = small_net(5);
        let adam = Adam::new(net.param_count(), ADAM_LR);
        save_checkpoint(&path, &net, Some(&adam)).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.net, net);
        assert_eq!(loaded.adam, Some(adam));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
