//! Forward and reverse passes of the residual policy network.
//!
//! Activations are channel-major `[C][H][W]`. Every 3x3 convolution reads
//! a half-sample mirror padded copy of its input, kept in the trace so the
//! backward pass can reuse it.

use super::{Architecture, PolicyParams, ProbabilityMap, PROB_EPS};
use crate::error::{check_dims, Error, Result};
use crate::image::{mirror_index, GrayImage, NoiseMap, Plane};

/// Cached intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    width: usize,
    height: usize,
    /// Padded input of every 3x3 convolution, in layer order.
    padded: Vec<Vec<f64>>,
    /// Pre-activation of the first convolution of each block.
    pre_inner: Vec<Vec<f64>>,
    /// Post-ReLU output of the input projection and of each block.
    acts: Vec<Vec<f64>>,
    probs: Vec<f64>,
    clamped: Vec<bool>,
}

impl Trace {
    pub fn probabilities(&self) -> ProbabilityMap {
        ProbabilityMap {
            width: self.width,
            height: self.height,
            data: self.probs.clone(),
        }
    }
}

fn pad(input: &[f64], ch: usize, w: usize, h: usize) -> Vec<f64> {
    let (pw, ph) = (w + 2, h + 2);
    let mut out = vec![0.0; ch * pw * ph];
    for c in 0..ch {
        let src = &input[c * w * h..(c + 1) * w * h];
        let dst = &mut out[c * pw * ph..(c + 1) * pw * ph];
        for py in 0..ph {
            let sy = mirror_index(py as isize - 1, h);
            let row = &src[sy * w..(sy + 1) * w];
            let drow = &mut dst[py * pw..(py + 1) * pw];
            drow[1..=w].copy_from_slice(row);
            drow[0] = row[0];
            drow[w + 1] = row[w - 1];
        }
    }
    out
}

/// Adds the gradient of a padded buffer back onto the unpadded pixels it
/// was copied from.
fn unpad_accumulate(dpad: &[f64], ch: usize, w: usize, h: usize, out: &mut [f64]) {
    let (pw, ph) = (w + 2, h + 2);
    for c in 0..ch {
        let src = &dpad[c * pw * ph..(c + 1) * pw * ph];
        let dst = &mut out[c * w * h..(c + 1) * w * h];
        for py in 0..ph {
            let sy = mirror_index(py as isize - 1, h);
            let row = &src[py * pw..(py + 1) * pw];
            let drow = &mut dst[sy * w..(sy + 1) * w];
            for (d, s) in drow.iter_mut().zip(&row[1..=w]) {
                *d += s;
            }
            drow[0] += row[0];
            drow[w - 1] += row[w + 1];
        }
    }
}

fn conv3x3(padded: &[f64], cin: usize, cout: usize, w: usize, h: usize, weights: &[f64], bias: &[f64]) -> Vec<f64> {
    let (pw, ph) = (w + 2, h + 2);
    let mut out = vec![0.0; cout * w * h];
    for o in 0..cout {
        let dst = &mut out[o * w * h..(o + 1) * w * h];
        dst.fill(bias[o]);
        for i in 0..cin {
            let src = &padded[i * pw * ph..(i + 1) * pw * ph];
            for ky in 0..3 {
                for kx in 0..3 {
                    let wt = weights[((o * cin + i) * 3 + ky) * 3 + kx];
                    for y in 0..h {
                        let s = &src[(y + ky) * pw + kx..(y + ky) * pw + kx + w];
                        for (d, v) in dst[y * w..(y + 1) * w].iter_mut().zip(s) {
                            *d += wt * v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients and, when `dpad` is given, the
/// gradient with respect to the padded input.
#[allow(clippy::too_many_arguments)]
fn conv3x3_backward(
    padded: &[f64],
    cin: usize,
    cout: usize,
    w: usize,
    h: usize,
    weights: &[f64],
    dout: &[f64],
    dweights: &mut [f64],
    dbias: &mut [f64],
    mut dpad: Option<&mut [f64]>,
) {
    let (pw, ph) = (w + 2, h + 2);
    for o in 0..cout {
        let g = &dout[o * w * h..(o + 1) * w * h];
        dbias[o] += g.iter().sum::<f64>();
        for i in 0..cin {
            let src = &padded[i * pw * ph..(i + 1) * pw * ph];
            for ky in 0..3 {
                for kx in 0..3 {
                    let widx = ((o * cin + i) * 3 + ky) * 3 + kx;
                    let wt = weights[widx];
                    let mut acc = 0.0;
                    for y in 0..h {
                        let off = (y + ky) * pw + kx;
                        let grow = &g[y * w..(y + 1) * w];
                        acc += grow.iter().zip(&src[off..off + w]).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(dp) = dpad.as_deref_mut() {
                            let dst = &mut dp[i * pw * ph + off..i * pw * ph + off + w];
                            for (d, v) in dst.iter_mut().zip(grow) {
                                *d += wt * v;
                            }
                        }
                    }
                    dweights[widx] += acc;
                }
            }
        }
    }
}

fn relu_in_place(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn split_conv(params: &[f64], off: usize, cin: usize, cout: usize) -> (&[f64], &[f64]) {
    let nw = cout * cin * 9;
    (&params[off..off + nw], &params[off + nw..off + nw + cout])
}

/// Runs the network on the stacked channels `(c, z)` and keeps the trace.
pub fn forward_trace(params: &PolicyParams, c: &GrayImage, z: &NoiseMap) -> Result<Trace> {
    check_dims(c.width(), c.height(), z.width(), z.height())?;
    let arch = params.architecture();
    let ch = arch.channels;
    let (w, h) = (c.width(), c.height());
    let n = w * h;
    let p = params.data();

    let mut input = Vec::with_capacity(2 * n);
    input.extend_from_slice(c.data());
    input.extend_from_slice(z.data());

    let mut padded = Vec::with_capacity(1 + 2 * arch.blocks);
    let mut pre_inner = Vec::with_capacity(arch.blocks);
    let mut acts = Vec::with_capacity(1 + arch.blocks);

    padded.push(pad(&input, 2, w, h));
    let (wt, b) = split_conv(p, arch.layer_offset(0), 2, ch);
    let mut x = conv3x3(&padded[0], 2, ch, w, h, wt, b);
    relu_in_place(&mut x);
    acts.push(x);

    for k in 0..arch.blocks {
        let xin = acts.last().expect("nonempty");
        let pin = pad(xin, ch, w, h);
        let (w1, b1) = split_conv(p, arch.layer_offset(1 + 2 * k), ch, ch);
        let u = conv3x3(&pin, ch, ch, w, h, w1, b1);
        let mut v = u.clone();
        relu_in_place(&mut v);
        let pv = pad(&v, ch, w, h);
        let (w2, b2) = split_conv(p, arch.layer_offset(2 + 2 * k), ch, ch);
        let mut s = conv3x3(&pv, ch, ch, w, h, w2, b2);
        for (a, b) in s.iter_mut().zip(xin) {
            *a += b;
        }
        relu_in_place(&mut s);
        padded.push(pin);
        padded.push(pv);
        pre_inner.push(u);
        acts.push(s);
    }

    let ho = arch.head_offset();
    let hw = &p[ho..ho + ch];
    let hb = p[ho + ch];
    let xb = acts.last().expect("nonempty");
    let mut probs = vec![0.0; n];
    let mut clamped = vec![false; n];
    for i in 0..n {
        let mut logit = hb;
        for (cc, wv) in hw.iter().enumerate() {
            logit += wv * xb[cc * n + i];
        }
        let s = sigmoid(logit);
        let q = s.clamp(PROB_EPS, 1.0 - PROB_EPS);
        clamped[i] = q != s;
        probs[i] = q;
    }
    if probs.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("policy output"));
    }
    Ok(Trace {
        width: w,
        height: h,
        padded,
        pre_inner,
        acts,
        probs,
        clamped,
    })
}

pub fn forward(params: &PolicyParams, c: &GrayImage, z: &NoiseMap) -> Result<ProbabilityMap> {
    Ok(forward_trace(params, c, z)?.probabilities())
}

/// Adds the gradient of `sum(p * grad_out)` to `grads`.
pub fn backward_into(params: &PolicyParams, trace: &Trace, grad_out: &Plane, grads: &mut [f64]) -> Result<()> {
    check_dims(trace.width, trace.height, grad_out.width(), grad_out.height())?;
    let arch: Architecture = params.architecture();
    if grads.len() != arch.num_params() {
        return Err(Error::ShapeMismatch {
            expected: arch.num_params(),
            actual: grads.len(),
        });
    }
    let ch = arch.channels;
    let (w, h) = (trace.width, trace.height);
    let n = w * h;
    let p = params.data();

    let ho = arch.head_offset();
    let hw = &p[ho..ho + ch];
    let xb = trace.acts.last().expect("nonempty");
    let mut dlogit = vec![0.0; n];
    for i in 0..n {
        if !trace.clamped[i] {
            let q = trace.probs[i];
            dlogit[i] = grad_out.data()[i] * q * (1.0 - q);
        }
    }
    let mut dx = vec![0.0; ch * n];
    for cc in 0..ch {
        let xs = &xb[cc * n..(cc + 1) * n];
        grads[ho + cc] += dlogit.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
        for (d, g) in dx[cc * n..(cc + 1) * n].iter_mut().zip(&dlogit) {
            *d = hw[cc] * g;
        }
    }
    grads[ho + ch] += dlogit.iter().sum::<f64>();

    let pad_len = ch * (w + 2) * (h + 2);
    for k in (0..arch.blocks).rev() {
        // through the block's output ReLU
        let out = &trace.acts[k + 1];
        for (d, a) in dx.iter_mut().zip(out) {
            if *a <= 0.0 {
                *d = 0.0;
            }
        }
        let l2 = 2 + 2 * k;
        let o2 = arch.layer_offset(l2);
        let nw = ch * ch * 9;
        let mut dpv = vec![0.0; pad_len];
        {
            let (gw, gb) = grads[o2..o2 + nw + ch].split_at_mut(nw);
            conv3x3_backward(&trace.padded[l2], ch, ch, w, h, &p[o2..o2 + nw], &dx, gw, gb, Some(&mut dpv));
        }
        let mut du = vec![0.0; ch * n];
        unpad_accumulate(&dpv, ch, w, h, &mut du);
        for (d, u) in du.iter_mut().zip(&trace.pre_inner[k]) {
            if *u <= 0.0 {
                *d = 0.0;
            }
        }
        let l1 = 1 + 2 * k;
        let o1 = arch.layer_offset(l1);
        let mut dpin = vec![0.0; pad_len];
        {
            let (gw, gb) = grads[o1..o1 + nw + ch].split_at_mut(nw);
            conv3x3_backward(&trace.padded[l1], ch, ch, w, h, &p[o1..o1 + nw], &du, gw, gb, Some(&mut dpin));
        }
        // skip connection keeps dx; add the convolution path
        unpad_accumulate(&dpin, ch, w, h, &mut dx);
    }

    for (d, a) in dx.iter_mut().zip(&trace.acts[0]) {
        if *a <= 0.0 {
            *d = 0.0;
        }
    }
    let nw = ch * 2 * 9;
    let (gw, gb) = grads[0..nw + ch].split_at_mut(nw);
    conv3x3_backward(&trace.padded[0], 2, ch, w, h, &p[0..nw], &dx, gw, gb, None);
    Ok(())
}

/// Gradient of `sum(p * grad_out)` with respect to every parameter.
pub fn backward(params: &PolicyParams, c: &GrayImage, z: &NoiseMap, grad_out: &Plane) -> Result<Vec<f64>> {
    let trace = forward_trace(params, c, z)?;
    let mut grads = vec![0.0; params.len()];
    backward_into(params, &trace, grad_out, &mut grads)?;
    Ok(grads)
}
