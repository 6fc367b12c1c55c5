//! Recurrent sequence classifier built from scratch: a GRU or Elman cell over a
//! flat parameter vector, with independent Bernoulli output heads and analytic
//! backpropagation through time.
//!
//! The flat layout keeps the optimizer, gradient clipping and the
//! finite-difference checks trivial; at these widths (2-8 hidden units) plain
//! loops beat any BLAS dispatch.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ials::InfluencePredictor;
use crate::rng::RngStream;

use super::train::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Gru,
    Elman,
}

/// Offsets of the named parameter blocks inside the flat vector.
///
/// GRU layout: `w_r, u_r, b_r, w_u, u_u, b_u, w_h, u_h, b_h, w_o, b_o`;
/// Elman uses only the `w_h, u_h, b_h` cell block plus the heads. `w_*` are
/// `hidden x input`, `u_*` are `hidden x hidden`, `w_o` is `out x hidden`,
/// all row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RnnDims {
    pub cell: CellKind,
    pub input: usize,
    pub hidden: usize,
    pub out_bits: usize,
}

impl RnnDims {
    fn gate_count(&self) -> usize {
        match self.cell {
            CellKind::Gru => 3,
            CellKind::Elman => 1,
        }
    }

    pub fn param_count(&self) -> usize {
        let gate = self.hidden * self.input + self.hidden * self.hidden + self.hidden;
        self.gate_count() * gate + self.out_bits * self.hidden + self.out_bits
    }

    /// `(w, u, b)` offsets of gate `g` (0 = reset, 1 = update, 2 = candidate;
    /// the Elman cell has a single gate 0).
    fn gate_offsets(&self, g: usize) -> (usize, usize, usize) {
        let gate = self.hidden * self.input + self.hidden * self.hidden + self.hidden;
        let base = g * gate;
        (
            base,
            base + self.hidden * self.input,
            base + self.hidden * self.input + self.hidden * self.hidden,
        )
    }

    fn head_offsets(&self) -> (usize, usize) {
        let gate = self.hidden * self.input + self.hidden * self.hidden + self.hidden;
        let base = self.gate_count() * gate;
        (base, base + self.out_bits * self.hidden)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `out[i] = w[i,:]*x + u[i,:]*z + b[i]` for a row-major gate block.
fn gate_preact(
    theta: &[f64],
    dims: &RnnDims,
    offs: (usize, usize, usize),
    x: &[f64],
    z: &[f64],
    z_gate: Option<&[f64]>,
    out: &mut [f64],
) {
    let (wo, uo, bo) = offs;
    let zz = z_gate.unwrap_or(z);
    for i in 0..dims.hidden {
        let mut acc = theta[bo + i];
        let wrow = &theta[wo + i * dims.input..wo + (i + 1) * dims.input];
        for (a, b) in wrow.iter().zip(x) {
            acc += a * b;
        }
        let urow = &theta[uo + i * dims.hidden..uo + (i + 1) * dims.hidden];
        for (a, b) in urow.iter().zip(zz) {
            acc += a * b;
        }
        out[i] = acc;
    }
}

/// Intermediate activations of one cell step, kept for backprop.
#[derive(Debug, Clone, Default)]
pub(crate) struct StepTrace {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub c: Vec<f64>,
    pub z: Vec<f64>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RnnPredictor {
    pub dims: RnnDims,
    pub theta: Vec<f64>,
}

impl RnnPredictor {
    pub fn zeros(cell: CellKind, input: usize, hidden: usize, out_bits: usize) -> Self {
        let dims = RnnDims { cell, input, hidden, out_bits };
        RnnPredictor { dims, theta: vec![0.0; dims.param_count()] }
    }

    /// Uniform fan-in scaled initialization (`+-1/sqrt(fan_in)`), zero biases.
    pub fn init(cell: CellKind, input: usize, hidden: usize, out_bits: usize, rng: &mut RngStream) -> Self {
        let mut net = Self::zeros(cell, input, hidden, out_bits);
        let dims = net.dims;
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, theta: &mut [f64]| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for i in range {
                theta[i] = (rng.next_f64() * 2.0 - 1.0) * bound;
            }
        };
        for g in 0..dims.gate_count() {
            let (wo, uo, bo) = dims.gate_offsets(g);
            fill(wo..wo + dims.hidden * dims.input, dims.input, &mut net.theta);
            fill(uo..bo, dims.hidden, &mut net.theta);
        }
        let (ho, _bo) = dims.head_offsets();
        fill(ho..ho + dims.out_bits * dims.hidden, dims.hidden, &mut net.theta);
        net
    }

    pub fn hidden_width(&self) -> usize {
        self.dims.hidden
    }

    pub fn initial_hidden_vec(&self) -> Vec<f64> {
        vec![0.0; self.dims.hidden]
    }

    /// One forward step: new hidden state plus per-head Bernoulli probabilities.
    pub fn forward(&self, z: &[f64], input: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut z_next = vec![0.0; self.dims.hidden];
        let mut probs = vec![0.0; self.dims.out_bits];
        self.forward_into(z, input, &mut z_next, &mut probs);
        (z_next, probs)
    }

    /// Allocation-free forward step into caller buffers — the planner's hot
    /// path. Networks wider than the stack scratch fall back to the traced
    /// path.
    pub fn forward_into(&self, z: &[f64], input: &[f64], z_next: &mut [f64], probs: &mut [f64]) {
        const SCRATCH: usize = 32;
        let dims = &self.dims;
        let h = dims.hidden;
        debug_assert_eq!(input.len(), dims.input, "input width mismatch");
        debug_assert_eq!(z.len(), h, "hidden width mismatch");
        if h > SCRATCH {
            let trace = self.forward_trace(z, input);
            z_next.copy_from_slice(&trace.z);
            probs.copy_from_slice(&trace.probs);
            return;
        }
        let mut pre = [0.0; SCRATCH];
        match dims.cell {
            CellKind::Gru => {
                let mut r = [0.0; SCRATCH];
                let mut u = [0.0; SCRATCH];
                gate_preact(&self.theta, dims, dims.gate_offsets(0), input, z, None, &mut pre[..h]);
                for i in 0..h {
                    r[i] = sigmoid(pre[i]);
                }
                gate_preact(&self.theta, dims, dims.gate_offsets(1), input, z, None, &mut pre[..h]);
                for i in 0..h {
                    u[i] = sigmoid(pre[i]);
                    // Reuse r as the gated recurrent input r (.) z.
                    r[i] *= z[i];
                }
                gate_preact(
                    &self.theta,
                    dims,
                    dims.gate_offsets(2),
                    input,
                    z,
                    Some(&r[..h]),
                    &mut pre[..h],
                );
                for i in 0..h {
                    z_next[i] = u[i] * z[i] + (1.0 - u[i]) * pre[i].tanh();
                }
            }
            CellKind::Elman => {
                gate_preact(&self.theta, dims, dims.gate_offsets(0), input, z, None, &mut pre[..h]);
                for i in 0..h {
                    z_next[i] = pre[i].tanh();
                }
            }
        }
        let (ho, bo) = dims.head_offsets();
        for k in 0..dims.out_bits {
            let mut acc = self.theta[bo + k];
            for i in 0..h {
                acc += self.theta[ho + k * h + i] * z_next[i];
            }
            probs[k] = sigmoid(acc);
        }
    }

    pub(crate) fn forward_trace(&self, z: &[f64], input: &[f64]) -> StepTrace {
        let dims = &self.dims;
        assert_eq!(input.len(), dims.input, "input width mismatch");
        assert_eq!(z.len(), dims.hidden, "hidden width mismatch");
        let h = dims.hidden;
        let mut trace = StepTrace::default();
        match dims.cell {
            CellKind::Gru => {
                let mut pre = vec![0.0; h];
                gate_preact(&self.theta, dims, dims.gate_offsets(0), input, z, None, &mut pre);
                trace.r = pre.iter().map(|&a| sigmoid(a)).collect();
                gate_preact(&self.theta, dims, dims.gate_offsets(1), input, z, None, &mut pre);
                trace.u = pre.iter().map(|&a| sigmoid(a)).collect();
                let rz: Vec<f64> = trace.r.iter().zip(z).map(|(r, zi)| r * zi).collect();
                gate_preact(&self.theta, dims, dims.gate_offsets(2), input, z, Some(&rz), &mut pre);
                trace.c = pre.iter().map(|&a| a.tanh()).collect();
                trace.z = (0..h)
                    .map(|i| trace.u[i] * z[i] + (1.0 - trace.u[i]) * trace.c[i])
                    .collect();
            }
            CellKind::Elman => {
                let mut pre = vec![0.0; h];
                gate_preact(&self.theta, dims, dims.gate_offsets(0), input, z, None, &mut pre);
                trace.z = pre.iter().map(|&a| a.tanh()).collect();
            }
        }
        let (ho, bo) = dims.head_offsets();
        trace.probs = (0..dims.out_bits)
            .map(|k| {
                let mut acc = self.theta[bo + k];
                for i in 0..h {
                    acc += self.theta[ho + k * h + i] * trace.z[i];
                }
                sigmoid(acc)
            })
            .collect();
        trace
    }

    /// Cross-entropy (nats, summed over heads and steps) of one sequence, plus
    /// its gradient accumulated into `grad`. Returns the summed loss and the
    /// number of (step, head) terms.
    pub fn sequence_loss_grad(
        &self,
        inputs: &[Vec<f64>],
        targets: &[Vec<u8>],
        grad: &mut [f64],
    ) -> (f64, usize) {
        let dims = &self.dims;
        let h = dims.hidden;
        let t_len = inputs.len();
        let mut traces: Vec<StepTrace> = Vec::with_capacity(t_len);
        let mut z = vec![0.0; h];
        let mut loss = 0.0;
        for t in 0..t_len {
            let trace = self.forward_trace(&z, &inputs[t]);
            for (k, &y) in targets[t].iter().enumerate() {
                let p = trace.probs[k].clamp(1e-12, 1.0 - 1e-12);
                loss -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
            }
            z = trace.z.clone();
            traces.push(trace);
        }

        let (ho, bo) = dims.head_offsets();
        let mut dz_next = vec![0.0; h];
        for t in (0..t_len).rev() {
            let trace = &traces[t];
            let z_prev: &[f64] = if t == 0 { &vec![0.0; h] } else { &traces[t - 1].z };
            let mut dz = dz_next.clone();
            // Heads.
            for (k, &y) in targets[t].iter().enumerate() {
                let dlogit = trace.probs[k] - y as f64;
                grad[bo + k] += dlogit;
                for i in 0..h {
                    grad[ho + k * h + i] += dlogit * trace.z[i];
                    dz[i] += dlogit * self.theta[ho + k * h + i];
                }
            }
            // Cell.
            let x = &inputs[t];
            dz_next = vec![0.0; h];
            match dims.cell {
                CellKind::Gru => {
                    let (r, u, c) = (&trace.r, &trace.u, &trace.c);
                    let dc: Vec<f64> = (0..h).map(|i| dz[i] * (1.0 - u[i])).collect();
                    let du: Vec<f64> = (0..h).map(|i| dz[i] * (z_prev[i] - c[i])).collect();
                    for i in 0..h {
                        dz_next[i] += dz[i] * u[i];
                    }
                    // Candidate gate.
                    let (wo, uo, bo_g) = dims.gate_offsets(2);
                    let da_h: Vec<f64> = (0..h).map(|i| dc[i] * (1.0 - c[i] * c[i])).collect();
                    let rz: Vec<f64> = (0..h).map(|i| r[i] * z_prev[i]).collect();
                    let mut dq = vec![0.0; h];
                    for i in 0..h {
                        grad[bo_g + i] += da_h[i];
                        for (j, &xj) in x.iter().enumerate() {
                            grad[wo + i * dims.input + j] += da_h[i] * xj;
                        }
                        for j in 0..h {
                            grad[uo + i * h + j] += da_h[i] * rz[j];
                            dq[j] += da_h[i] * self.theta[uo + i * h + j];
                        }
                    }
                    let dr: Vec<f64> = (0..h).map(|i| dq[i] * z_prev[i]).collect();
                    for i in 0..h {
                        dz_next[i] += dq[i] * r[i];
                    }
                    // Reset gate.
                    let (wo, uo, bo_g) = dims.gate_offsets(0);
                    for i in 0..h {
                        let da = dr[i] * r[i] * (1.0 - r[i]);
                        grad[bo_g + i] += da;
                        for (j, &xj) in x.iter().enumerate() {
                            grad[wo + i * dims.input + j] += da * xj;
                        }
                        for j in 0..h {
                            grad[uo + i * h + j] += da * z_prev[j];
                            dz_next[j] += da * self.theta[uo + i * h + j];
                        }
                    }
                    // Update gate.
                    let (wo, uo, bo_g) = dims.gate_offsets(1);
                    for i in 0..h {
                        let da = du[i] * u[i] * (1.0 - u[i]);
                        grad[bo_g + i] += da;
                        for (j, &xj) in x.iter().enumerate() {
                            grad[wo + i * dims.input + j] += da * xj;
                        }
                        for j in 0..h {
                            grad[uo + i * h + j] += da * z_prev[j];
                            dz_next[j] += da * self.theta[uo + i * h + j];
                        }
                    }
                }
                CellKind::Elman => {
                    let (wo, uo, bo_g) = dims.gate_offsets(0);
                    for i in 0..h {
                        let da = dz[i] * (1.0 - trace.z[i] * trace.z[i]);
                        grad[bo_g + i] += da;
                        for (j, &xj) in x.iter().enumerate() {
                            grad[wo + i * dims.input + j] += da * xj;
                        }
                        for j in 0..h {
                            grad[uo + i * h + j] += da * z_prev[j];
                            dz_next[j] += da * self.theta[uo + i * h + j];
                        }
                    }
                }
            }
        }
        (loss, t_len * dims.out_bits)
    }

    /// Cross-entropy per (step, head) term over a set of episodes.
    pub fn mean_cross_entropy(&self, inputs: &[Vec<Vec<f64>>], targets: &[Vec<Vec<u8>>]) -> f64 {
        let mut loss = 0.0;
        let mut terms = 0usize;
        for (ins, tgts) in inputs.iter().zip(targets) {
            let mut z = self.initial_hidden_vec();
            for (x, ys) in ins.iter().zip(tgts) {
                let (z_next, probs) = self.forward(&z, x);
                for (k, &y) in ys.iter().enumerate() {
                    let p = probs[k].clamp(1e-12, 1.0 - 1e-12);
                    loss -= if y == 1 { p.ln() } else { (1.0 - p).ln() };
                }
                terms += ys.len();
                z = z_next;
            }
        }
        loss / terms.max(1) as f64
    }

    pub fn save(&self, path: &Path, train_config: Option<&TrainConfig>) -> std::io::Result<()> {
        let file = ModelFile::from_predictor(self, train_config.cloned());
        let w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(w, &file)?;
        Ok(())
    }

    pub fn load(path: &Path) -> std::io::Result<RnnPredictor> {
        let r = BufReader::new(File::open(path)?);
        let file: ModelFile = serde_json::from_reader(r)?;
        file.into_predictor()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }
}

impl InfluencePredictor for RnnPredictor {
    type Hidden = Vec<f64>;

    fn initial_hidden(&self) -> Vec<f64> {
        self.initial_hidden_vec()
    }

    fn advance(
        &self,
        hidden: &Vec<f64>,
        input: &[f64],
        rng: &mut RngStream,
    ) -> (Vec<f64>, Vec<bool>) {
        let k = self.dims.out_bits;
        let mut z_next = vec![0.0; self.dims.hidden];
        let mut probs = [0.0; 32];
        assert!(k <= 32, "advance supports at most 32 source bits");
        self.forward_into(hidden, input, &mut z_next, &mut probs[..k]);
        let bits = probs[..k].iter().map(|&p| rng.bernoulli(p)).collect();
        (z_next, bits)
    }
}

/// On-disk model format: named row-major parameter matrices.
#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    cell_kind: CellKind,
    input_width: usize,
    hidden_width: usize,
    out_bits: usize,
    params: std::collections::BTreeMap<String, Vec<Vec<f64>>>,
    train_config: Option<TrainConfig>,
}

impl ModelFile {
    fn block_names(cell: CellKind) -> Vec<&'static str> {
        match cell {
            CellKind::Gru => vec!["w_r", "u_r", "b_r", "w_u", "u_u", "b_u", "w_h", "u_h", "b_h", "w_o", "b_o"],
            CellKind::Elman => vec!["w_h", "u_h", "b_h", "w_o", "b_o"],
        }
    }

    fn block_shapes(dims: &RnnDims) -> Vec<(usize, usize)> {
        let (h, i, k) = (dims.hidden, dims.input, dims.out_bits);
        let gate = vec![(h, i), (h, h), (h, 1)];
        let mut shapes = Vec::new();
        for _ in 0..dims.gate_count() {
            shapes.extend(&gate);
        }
        shapes.push((k, h));
        shapes.push((k, 1));
        shapes
    }

    fn from_predictor(p: &RnnPredictor, train_config: Option<TrainConfig>) -> ModelFile {
        let names = Self::block_names(p.dims.cell);
        let shapes = Self::block_shapes(&p.dims);
        let mut params = std::collections::BTreeMap::new();
        let mut off = 0usize;
        for (name, (rows, cols)) in names.iter().zip(shapes) {
            let mat: Vec<Vec<f64>> = (0..rows)
                .map(|r| p.theta[off + r * cols..off + (r + 1) * cols].to_vec())
                .collect();
            off += rows * cols;
            params.insert((*name).to_string(), mat);
        }
        debug_assert_eq!(off, p.theta.len());
        ModelFile {
            cell_kind: p.dims.cell,
            input_width: p.dims.input,
            hidden_width: p.dims.hidden,
            out_bits: p.dims.out_bits,
            params,
            train_config,
        }
    }

    fn into_predictor(self) -> Result<RnnPredictor, String> {
        let dims = RnnDims {
            cell: self.cell_kind,
            input: self.input_width,
            hidden: self.hidden_width,
            out_bits: self.out_bits,
        };
        let names = Self::block_names(dims.cell);
        let shapes = Self::block_shapes(&dims);
        let mut theta = Vec::with_capacity(dims.param_count());
        for (name, (rows, cols)) in names.iter().zip(shapes) {
            let mat = self
                .params
                .get(*name)
                .ok_or_else(|| format!("model file missing parameter block {name}"))?;
            if mat.len() != rows || mat.iter().any(|r| r.len() != cols) {
                return Err(format!("parameter block {name} has wrong shape"));
            }
            for row in mat {
                theta.extend(row);
            }
        }
        if theta.len() != dims.param_count() {
            return Err("parameter count mismatch".into());
        }
        Ok(RnnPredictor { dims, theta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_gru_halves_hidden() {
        let net = RnnPredictor::zeros(CellKind::Gru, 3, 2, 2);
        let (z, probs) = net.forward(&[1.0, 1.0], &[0.3, 0.7, 1.0]);
        assert!((z[0] - 0.5).abs() < 1e-12 && (z[1] - 0.5).abs() < 1e-12);
        assert!(probs.iter().all(|&p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn zero_params_heads_uniform() {
        for cell in [CellKind::Gru, CellKind::Elman] {
            let net = RnnPredictor::zeros(cell, 4, 3, 2);
            let (_, probs) = net.forward(&[0.0; 3], &[1.0, 0.0, 1.0, 0.5]);
            assert!(probs.iter().all(|&p| (p - 0.5).abs() < 1e-12));
        }
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = RngStream::new(4);
        let net = RnnPredictor::init(CellKind::Gru, 3, 4, 2, &mut rng);
        let a = net.forward(&[0.1, -0.2, 0.3, 0.0], &[1.0, 0.0, 1.0]);
        let b = net.forward(&[0.1, -0.2, 0.3, 0.0], &[1.0, 0.0, 1.0]);
        assert_eq!(a, b);
    }

    /// Central finite differences over every parameter on a short sequence.
    fn grad_check(cell: CellKind) {
        let mut rng = RngStream::new(11);
        let net = RnnPredictor::init(cell, 3, 4, 2, &mut rng);
        let inputs: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..3).map(|_| rng.next_f64()).collect())
            .collect();
        let targets: Vec<Vec<u8>> = (0..3)
            .map(|_| (0..2).map(|_| rng.bernoulli(0.5) as u8).collect())
            .collect();
        let mut grad = vec![0.0; net.theta.len()];
        net.sequence_loss_grad(&inputs, &targets, &mut grad);

        let eps = 1e-5;
        let mut probe = net.clone();
        for i in 0..net.theta.len() {
            probe.theta[i] = net.theta[i] + eps;
            let (lp, _) = probe.sequence_loss_grad(&inputs, &targets, &mut vec![0.0; grad.len()]);
            probe.theta[i] = net.theta[i] - eps;
            let (lm, _) = probe.sequence_loss_grad(&inputs, &targets, &mut vec![0.0; grad.len()]);
            probe.theta[i] = net.theta[i];
            let fd = (lp - lm) / (2.0 * eps);
            let denom = fd.abs().max(grad[i].abs()).max(1e-8);
            assert!(
                (fd - grad[i]).abs() / denom < 1e-4,
                "{cell:?} param {i}: analytic {} vs fd {fd}",
                grad[i]
            );
        }
    }

    #[test]
    fn gru_gradients_match_finite_differences() {
        grad_check(CellKind::Gru);
    }

    #[test]
    fn elman_gradients_match_finite_differences() {
        grad_check(CellKind::Elman);
    }

    #[test]
    fn model_file_roundtrip() {
        let mut rng = RngStream::new(21);
        for cell in [CellKind::Gru, CellKind::Elman] {
            let net = RnnPredictor::init(cell, 5, 3, 4, &mut rng);
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("model.json");
            net.save(&path, None).unwrap();
            let back = RnnPredictor::load(&path).unwrap();
            assert_eq!(back.dims, net.dims);
            assert_eq!(back.theta, net.theta);
        }
    }

    #[test]
    fn load_rejects_bad_shapes() {
        let net = RnnPredictor::zeros(CellKind::Elman, 2, 2, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        net.save(&path, None).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mangled = text.replace("\"hidden_width\": 2", "\"hidden_width\": 3");
        std::fs::write(&path, mangled).unwrap();
        assert!(RnnPredictor::load(&path).is_err());
    }
}
