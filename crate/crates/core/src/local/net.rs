//! Two-layer tanh perceptron over steering bins, trained with smoothed-label
//! cross-entropy, an entropy bonus against overconfidence and L2 weight
//! decay.

use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::local::observation::mirror_source;
use crate::{rng, Error, Result};

/// Logits are clipped to this magnitude before the softmax.
pub const LOGIT_CLIP: f64 = 30.0;

/// Parameters laid out as `[w1 (hidden x input), b1, w2 (output x hidden), b2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringNet {
    input: usize,
    hidden: usize,
    output: usize,
    params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct LayerJson {
    rows: usize,
    cols: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    activation: String,
    layers: Vec<LayerJson>,
}

/// Forward-pass intermediates for one input.
struct Forward {
    hidden: Vec<f64>,
    probs: Vec<f64>,
    clipped: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight decay on `½‖w‖²`.
    pub lambda1: f64,
    /// Entropy bonus.
    pub lambda2: f64,
}

impl SteeringNet {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            params: vec![0.0; Self::param_count(input, hidden, output)],
        }
    }

    fn param_count(input: usize, hidden: usize, output: usize) -> usize {
        hidden * input + hidden + output * hidden + output
    }

    /// Gaussian initialization with `1/sqrt(fan_in)` scale.
    pub fn random(input: usize, hidden: usize, output: usize, seed: u64) -> Self {
        let mut net = Self::zeros(input, hidden, output);
        let mut rng = rng::seeded(seed);
        let n1 = Normal::new(0.0, 1.0 / (input as f64).sqrt()).expect("valid scale");
        let n2 = Normal::new(0.0, 1.0 / (hidden as f64).sqrt()).expect("valid scale");
        let (w1, w2) = (net.w1_range(), net.w2_range());
        net.params[w1].iter_mut().for_each(|w| *w = n1.sample(&mut rng));
        net.params[w2].iter_mut().for_each(|w| *w = n2.sample(&mut rng));
        net
    }

    /// Random net that commutes with the observation reflection: hidden units
    /// come in mirror pairs and the output layer maps mirror pairs to
    /// reversed bins. Gradient steps on mirror-balanced data keep it so.
    pub fn mirror_symmetric(m: usize, hidden: usize, seed: u64) -> Result<Self> {
        if hidden % 2 != 0 {
            return Err(Error::param("a mirror-symmetric net needs an even hidden width"));
        }
        let input = crate::local::observation::Observation::len_for(m);
        let output = 2 * m + 1;
        let mut net = Self::random(input, hidden, output, seed);
        let mut rng = rng::seeded(seed ^ 0x5eed);
        for h in (0..hidden).step_by(2) {
            let row: Vec<f64> = (0..input).map(|j| net.w1(h, j)).collect();
            for j in 0..input {
                let (src, sign) = mirror_source(m, j);
                net.set_w1(h + 1, j, sign * row[src]);
            }
            let (b, o) = (rng.gen_range(-0.1..0.1), net.b1_offset());
            net.params[o + h] = b;
            net.params[o + h + 1] = b;
        }
        for k in 0..output {
            for h in (0..hidden).step_by(2) {
                // W2[Q k][h'] = W2[k][h]
                let q = output - 1 - k;
                if q < k {
                    continue;
                }
                let (a, b) = (net.w2(k, h), net.w2(k, h + 1));
                // the center bin is its own mirror, so both units share a weight
                let b = if q == k { a } else { b };
                net.set_w2(q, h + 1, a);
                net.set_w2(q, h, b);
            }
        }
        Ok(net)
    }

    pub fn input_len(&self) -> usize {
        self.input
    }

    pub fn hidden_len(&self) -> usize {
        self.hidden
    }

    pub fn output_len(&self) -> usize {
        self.output
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    fn w1_range(&self) -> std::ops::Range<usize> {
        0..self.hidden * self.input
    }

    fn b1_offset(&self) -> usize {
        self.hidden * self.input
    }

    fn w2_offset(&self) -> usize {
        self.b1_offset() + self.hidden
    }

    fn w2_range(&self) -> std::ops::Range<usize> {
        self.w2_offset()..self.w2_offset() + self.output * self.hidden
    }

    fn b2_offset(&self) -> usize {
        self.w2_offset() + self.output * self.hidden
    }

    pub fn w1(&self, h: usize, j: usize) -> f64 {
        self.params[h * self.input + j]
    }

    fn set_w1(&mut self, h: usize, j: usize, v: f64) {
        self.params[h * self.input + j] = v;
    }

    pub fn w2(&self, k: usize, h: usize) -> f64 {
        self.params[self.w2_offset() + k * self.hidden + h]
    }

    fn set_w2(&mut self, k: usize, h: usize, v: f64) {
        let o = self.w2_offset();
        self.params[o + k * self.hidden + h] = v;
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input {
            return Err(Error::ShapeMismatch(format!(
                "net expects {} inputs, got {}",
                self.input,
                x.len()
            )));
        }
        Ok(())
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let p = &self.params;
        let b1 = self.b1_offset();
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &p[h * self.input..(h + 1) * self.input];
                (row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[b1 + h]).tanh()
            })
            .collect();
        let (w2, b2) = (self.w2_offset(), self.b2_offset());
        let mut clipped = vec![false; self.output];
        let logits: Vec<f64> = (0..self.output)
            .map(|k| {
                let row = &p[w2 + k * self.hidden..w2 + (k + 1) * self.hidden];
                let z = row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>() + p[b2 + k];
                clipped[k] = z.abs() > LOGIT_CLIP;
                z.clamp(-LOGIT_CLIP, LOGIT_CLIP)
            })
            .collect();
        Forward {
            hidden,
            probs: softmax(&logits),
            clipped,
        }
    }

    /// Predictive distribution over steering bins.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x).probs)
    }

    /// Most probable bin index (ties to the lower index).
    pub fn argmax(&self, x: &[f64]) -> Result<usize> {
        let probs = self.predict(x)?;
        let mut best = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        Ok(best)
    }

    /// Loss `sum_i l_i + lambda1 * ½‖w‖²` with
    /// `l = -sum θ log f + lambda2 * sum f log f` and its gradient.
    pub fn clone_loss(&self, inputs: &[&[f64]], labels: &[&[f64]], weights: LossWeights) -> Result<(f64, Vec<f64>)> {
        if inputs.is_empty() || inputs.len() != labels.len() {
            return Err(Error::param("clone loss needs a non-empty batch with one label per input"));
        }
        if !(weights.lambda1 >= 0.0 && weights.lambda2 >= 0.0) {
            return Err(Error::param("loss weights must be nonnegative"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let (b1, w2, b2) = (self.b1_offset(), self.w2_offset(), self.b2_offset());
        let mut dz = vec![0.0; self.output];
        let mut dh = vec![0.0; self.hidden];
        for (x, y) in inputs.iter().zip(labels) {
            self.check_input(x)?;
            if y.len() != self.output {
                return Err(Error::ShapeMismatch(format!(
                    "label has {} bins, net outputs {}",
                    y.len(),
                    self.output
                )));
            }
            let fw = self.forward(x);
            let f = &fw.probs;
            let neg_entropy: f64 = f.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum();
            let ce: f64 = y
                .iter()
                .zip(f)
                .filter(|(&t, _)| t > 0.0)
                .map(|(&t, &p)| -t * p.ln())
                .sum();
            loss += ce + weights.lambda2 * neg_entropy;
            let label_mass: f64 = y.iter().sum();
            for k in 0..self.output {
                let log_f = if f[k] > 0.0 { f[k].ln() } else { 0.0 };
                let g = label_mass * f[k] - y[k] + weights.lambda2 * f[k] * (log_f - neg_entropy);
                dz[k] = if fw.clipped[k] { 0.0 } else { g };
            }
            for (k, &d) in dz.iter().enumerate() {
                grad[b2 + k] += d;
                let row = w2 + k * self.hidden;
                for (h, &a) in fw.hidden.iter().enumerate() {
                    grad[row + h] += d * a;
                }
            }
            for h in 0..self.hidden {
                let back: f64 = (0..self.output).map(|k| dz[k] * self.params[w2 + k * self.hidden + h]).sum();
                dh[h] = back * (1.0 - fw.hidden[h] * fw.hidden[h]);
            }
            for (h, &d) in dh.iter().enumerate() {
                grad[b1 + h] += d;
                let row = h * self.input;
                for (j, &v) in x.iter().enumerate() {
                    grad[row + j] += d * v;
                }
            }
        }
        if weights.lambda1 > 0.0 {
            loss += 0.5 * weights.lambda1 * self.params.iter().map(|p| p * p).sum::<f64>();
            for (g, p) in grad.iter_mut().zip(&self.params) {
                *g += weights.lambda1 * p;
            }
        }
        Ok((loss, grad))
    }

    pub fn to_json(&self) -> Result<String> {
        let (b1, w2, b2) = (self.b1_offset(), self.w2_offset(), self.b2_offset());
        let p = &self.params;
        Ok(serde_json::to_string_pretty(&NetJson {
            activation: "tanh".into(),
            layers: vec![
                LayerJson {
                    rows: self.hidden,
                    cols: self.input,
                    weights: p[..b1].to_vec(),
                    bias: p[b1..w2].to_vec(),
                },
                LayerJson {
                    rows: self.output,
                    cols: self.hidden,
                    weights: p[w2..b2].to_vec(),
                    bias: p[b2..].to_vec(),
                },
            ],
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let json: NetJson = serde_json::from_str(text)?;
        let bad = |msg: &str| Error::parse("steering net json", msg);
        if json.activation != "tanh" {
            return Err(bad("only tanh activations are supported"));
        }
        let [l1, l2] = <[LayerJson; 2]>::try_from(json.layers).map_err(|_| bad("expected exactly two layers"))?;
        if l2.cols != l1.rows
            || l1.weights.len() != l1.rows * l1.cols
            || l1.bias.len() != l1.rows
            || l2.weights.len() != l2.rows * l2.cols
            || l2.bias.len() != l2.rows
        {
            return Err(bad("layer shapes are inconsistent"));
        }
        let mut params = l1.weights;
        params.extend(l1.bias);
        params.extend(l2.weights);
        params.extend(l2.bias);
        let net = Self {
            input: l1.cols,
            hidden: l1.rows,
            output: l2.rows,
            params,
        };
        if !net.is_finite() {
            return Err(bad("weights must be finite"));
        }
        Ok(net)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}
