//! Forward pass, loss and analytic gradients for the three classifiers.

use rand::Rng;

use super::params::{ModelParams, Tensor};
use super::spec::ModelKind;
use crate::dataset::{Example, FeatureVector};
use crate::error::{Error, Result};
use crate::seed;

/// Probabilities are clamped to this before taking logs.
pub const LOG_EPS: f64 = 1e-12;

/// Dropout behaviour of one pass. `Seeded` switches training mode on with a
/// reproducible mask; inference uses `Off`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dropout {
    Off,
    Seeded(u64),
}

/// Parameter-shaped gradient of the mean batch loss, in tensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Mean cross-entropy over the batch plus the L2 term.
    pub loss: f64,
    pub tensors: Vec<Vec<f64>>,
}

struct Hidden {
    /// Layer output after ReLU and dropout.
    out: Vec<f64>,
    /// d out / d pre-activation: zero where the unit is inactive or
    /// dropped, the dropout scale otherwise.
    gate: Vec<f64>,
}

struct Trace {
    /// Averaged embedding (embedding model only).
    embedded: Vec<f64>,
    hidden: Vec<Hidden>,
    probs: Vec<f64>,
}

fn check_dim(params: &ModelParams, z: &FeatureVector) -> Result<()> {
    if z.dim() != params.spec.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.spec.input_dim,
            actual: z.dim(),
        });
    }
    Ok(())
}

fn add_rows(acc: &mut [f64], w: &Tensor, rows: impl Iterator<Item = usize>) {
    for r in rows {
        for (a, v) in acc.iter_mut().zip(w.row(r)) {
            *a += v;
        }
    }
}

fn dense(w: &Tensor, b: &Tensor, input: &[f64]) -> Vec<f64> {
    let mut out = b.data.clone();
    for (i, &x) in input.iter().enumerate() {
        if x != 0.0 {
            for (o, v) in out.iter_mut().zip(w.row(i)) {
                *o += x * v;
            }
        }
    }
    out
}

fn activate(pre: Vec<f64>, p_drop: f64, rng: &mut Option<rand_chacha::ChaCha8Rng>) -> Hidden {
    let scale = 1.0 / (1.0 - p_drop);
    let mut out = pre;
    let mut gate = vec![0.0; out.len()];
    for (o, g) in out.iter_mut().zip(gate.iter_mut()) {
        let keep = match rng {
            Some(r) if p_drop > 0.0 => r.random::<f64>() >= p_drop,
            _ => true,
        };
        if *o > 0.0 && keep {
            let s = if rng.is_some() && p_drop > 0.0 { scale } else { 1.0 };
            *o *= s;
            *g = s;
        } else {
            *o = 0.0;
        }
    }
    Hidden { out, gate }
}

pub(crate) fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in logits.iter_mut() {
        *v /= sum;
    }
}

fn run(params: &ModelParams, z: &FeatureVector, dropout: Dropout, example: u64) -> Trace {
    let t = &params.tensors;
    let n = t.len();
    let spec = &params.spec;
    let mut rng = match dropout {
        Dropout::Off => None,
        Dropout::Seeded(s) => Some(seed::rng(seed::derive(&[s, example]))),
    };
    let active = z.active().iter().map(|&j| j as usize);
    let mut embedded = Vec::new();
    let mut hidden: Vec<Hidden> = Vec::new();
    let mut pos = 2;
    let mut logits = match spec.kind {
        ModelKind::LogisticRegression => {
            let mut l = t[1].data.clone();
            add_rows(&mut l, &t[0], active);
            pos = n;
            l
        }
        ModelKind::Mlp => {
            let mut pre = t[1].data.clone();
            add_rows(&mut pre, &t[0], active);
            hidden.push(activate(pre, spec.dropout_p, &mut rng));
            Vec::new()
        }
        ModelKind::MlpEmbedding => {
            let k = spec.input_dim / 2;
            let mut e = vec![0.0; spec.embedding_dim];
            for j in active {
                let (table, row) = if j < k { (&t[0], j) } else { (&t[1], j - k) };
                add_rows(&mut e, table, std::iter::once(row));
            }
            let m = z.active().len();
            if m > 0 {
                for v in &mut e {
                    *v /= m as f64;
                }
            }
            embedded = e;
            Vec::new()
        }
    };
    if pos < n {
        while pos < n - 2 {
            let input = hidden.last().map_or(&embedded, |h| &h.out);
            let pre = dense(&t[pos], &t[pos + 1], input);
            hidden.push(activate(pre, spec.dropout_p, &mut rng));
            pos += 2;
        }
        let input = hidden.last().map_or(&embedded, |h| &h.out);
        logits = dense(&t[n - 2], &t[n - 1], input);
    }
    softmax_in_place(&mut logits);
    Trace {
        embedded,
        hidden,
        probs: logits,
    }
}

/// Class probabilities for one feature vector.
pub fn forward(params: &ModelParams, z: &FeatureVector, dropout: Dropout) -> Result<Vec<f64>> {
    check_dim(params, z)?;
    Ok(run(params, z, dropout, 0).probs)
}

/// Cross-entropy of `probs` at `gold` plus `lambda` times the squared norm of
/// the regularized tensors.
pub fn loss(probs: &[f64], gold: usize, params: &ModelParams, lambda: f64) -> Result<f64> {
    let p = *probs.get(gold).ok_or_else(|| Error::DimensionMismatch {
        expected: probs.len(),
        actual: gold + 1,
    })?;
    Ok(-p.max(LOG_EPS).ln() + lambda * params.l2_sum())
}

/// Mean batch loss, with the dropout mask of example `i` seeded from
/// `(seed, i)`.
pub fn batch_loss(params: &ModelParams, batch: &[Example], dropout: Dropout) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid_arg("empty batch"));
    }
    let mut ce = 0.0;
    for (i, ex) in batch.iter().enumerate() {
        check_dim(params, &ex.features)?;
        let probs = run(params, &ex.features, dropout, i as u64).probs;
        ce -= probs[ex.label].max(LOG_EPS).ln();
    }
    Ok(ce / batch.len() as f64 + params.spec.l2_lambda * params.l2_sum())
}

fn backward_dense(
    w: &Tensor,
    input: &[f64],
    delta: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    want_input: bool,
) -> Vec<f64> {
    let cols = w.cols;
    for (g, d) in gb.iter_mut().zip(delta) {
        *g += d;
    }
    let mut d_in = if want_input { vec![0.0; input.len()] } else { Vec::new() };
    for (i, &x) in input.iter().enumerate() {
        let row = &mut gw[i * cols..(i + 1) * cols];
        if x != 0.0 {
            for (g, d) in row.iter_mut().zip(delta) {
                *g += x * d;
            }
        }
        if want_input {
            d_in[i] = w.row(i).iter().zip(delta).map(|(a, b)| a * b).sum();
        }
    }
    d_in
}

fn accumulate(params: &ModelParams, ex: &Example, trace: &Trace, g: &mut [Vec<f64>]) {
    let t = &params.tensors;
    let n = t.len();
    let spec = &params.spec;
    let mut delta = trace.probs.clone();
    delta[ex.label] -= 1.0;
    let active = ex.features.active();

    if spec.kind == ModelKind::LogisticRegression {
        scatter_rows(&mut g[0], t[0].cols, active.iter().map(|&j| j as usize), &delta, 1.0);
        add_to(&mut g[1], &delta);
        return;
    }

    // dense layers from the output back
    let mut layer = trace.hidden.len();
    let mut pos = n - 2;
    loop {
        let input: &[f64] = if layer == 0 {
            &trace.embedded
        } else {
            &trace.hidden[layer - 1].out
        };
        let is_first_dense_of_mlp = spec.kind == ModelKind::Mlp && pos == 0;
        if is_first_dense_of_mlp {
            break;
        }
        let (head, tail) = g.split_at_mut(pos + 1);
        let d_in = backward_dense(&t[pos], input, &delta, &mut head[pos], &mut tail[0], true);
        if layer == 0 {
            // into the embedding average
            let k = spec.input_dim / 2;
            let m = active.len() as f64;
            let cols = t[0].cols;
            for &j in active {
                let j = j as usize;
                let (gi, row) = if j < k { (0, j) } else { (1, j - k) };
                let dst = &mut g[gi][row * cols..(row + 1) * cols];
                for (a, d) in dst.iter_mut().zip(&d_in) {
                    *a += d / m;
                }
            }
            return;
        }
        delta = d_in
            .iter()
            .zip(&trace.hidden[layer - 1].gate)
            .map(|(d, gate)| d * gate)
            .collect();
        layer -= 1;
        pos -= 2;
    }
    // sparse first layer of the mlp
    scatter_rows(&mut g[0], t[0].cols, active.iter().map(|&j| j as usize), &delta, 1.0);
    add_to(&mut g[1], &delta);
}

fn add_to(dst: &mut [f64], src: &[f64]) {
    for (a, b) in dst.iter_mut().zip(src) {
        *a += b;
    }
}

fn scatter_rows(dst: &mut [f64], cols: usize, rows: impl Iterator<Item = usize>, v: &[f64], scale: f64) {
    for r in rows {
        for (a, b) in dst[r * cols..(r + 1) * cols].iter_mut().zip(v) {
            *a += scale * b;
        }
    }
}

/// Writes the gradient of the mean batch loss into `out`, which must have
/// the parameter layout, and returns the loss.
pub(crate) fn gradients_into(
    params: &ModelParams,
    batch: &[Example],
    dropout: Dropout,
    out: &mut [Vec<f64>],
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid_arg("empty batch"));
    }
    for g in out.iter_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    let mut ce = 0.0;
    for (i, ex) in batch.iter().enumerate() {
        check_dim(params, &ex.features)?;
        if ex.label >= params.spec.n_classes {
            return Err(Error::UnknownLabel(ex.label.to_string()));
        }
        let trace = run(params, &ex.features, dropout, i as u64);
        ce -= trace.probs[ex.label].max(LOG_EPS).ln();
        accumulate(params, ex, &trace, out);
    }
    let inv = 1.0 / batch.len() as f64;
    let lambda = params.spec.l2_lambda;
    for (g, t) in out.iter_mut().zip(&params.tensors) {
        if t.regularized && lambda > 0.0 {
            for (a, w) in g.iter_mut().zip(&t.data) {
                *a = *a * inv + 2.0 * lambda * w;
            }
        } else {
            g.iter_mut().for_each(|a| *a *= inv);
        }
    }
    Ok(ce * inv + lambda * params.l2_sum())
}

/// Exact gradient of the mean batch loss (cross-entropy plus L2).
pub fn gradients(params: &ModelParams, batch: &[Example], dropout: Dropout) -> Result<Gradients> {
    let mut tensors: Vec<Vec<f64>> = params.tensors.iter().map(|t| vec![0.0; t.len()]).collect();
    let loss = gradients_into(params, batch, dropout, &mut tensors)?;
    Ok(Gradients { loss, tensors })
}
