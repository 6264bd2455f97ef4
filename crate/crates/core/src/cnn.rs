//! Coordinate-augmented convolutional baseline with circular padding.
//!
//! Activations are stored pixel-major (`[pixel][channel]`); each convolution
//! is an im2col patch matrix times a `[tap·in][out]` weight matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, Resolution, CHANNELS};
use crate::sampler::SeededRng;
use crate::scalar::Real;

/// Default channel plan: two field channels plus two coordinate channels in,
/// three hidden layers of 32, two channels out.
pub const DEFAULT_PLAN: [usize; 5] = [4, 32, 32, 32, 2];
const TAPS: usize = 9;

/// One 3×3 convolution. Weights are stored `(out, in, ky, kx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer<T> {
    pub in_ch: usize,
    pub out_ch: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ConvLayer<T> {
    pub fn zeros(in_ch: usize, out_ch: usize) -> Self {
        Self {
            in_ch,
            out_ch,
            weights: vec![T::zero(); out_ch * in_ch * TAPS],
            bias: vec![T::zero(); out_ch],
        }
    }

    #[inline]
    fn w_index(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_ch + i) * 3 + ky) * 3 + kx
    }

    pub fn weight(&self, o: usize, i: usize, ky: usize, kx: usize) -> T {
        self.weights[self.w_index(o, i, ky, kx)]
    }

    pub fn set_weight(&mut self, o: usize, i: usize, ky: usize, kx: usize, v: T) {
        let k = self.w_index(o, i, ky, kx);
        self.weights[k] = v;
    }

    /// Weights rearranged to `[tap][in][out]`.
    fn transposed(&self) -> Vec<T> {
        let (ci, co) = (self.in_ch, self.out_ch);
        let mut wt = vec![T::zero(); TAPS * ci * co];
        for o in 0..co {
            for i in 0..ci {
                for tap in 0..TAPS {
                    wt[(tap * ci + i) * co + o] = self.weights[(o * ci + i) * TAPS + tap];
                }
            }
        }
        wt
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordCnnModel<T> {
    pub layers: Vec<ConvLayer<T>>,
}

/// Per-layer gradients in the model's layout.
pub type CnnGradients<T> = CoordCnnModel<T>;

/// Layer inputs saved by [`cnn_forward`]; ReLU masks are read from them.
#[derive(Debug, Clone)]
pub struct CnnCache<T> {
    res: Resolution,
    plan: Vec<usize>,
    inputs: Vec<Vec<T>>,
}

/// `(i₁/n, i₂/n)` at every node, i.e. `x/2π`.
pub fn coord_channels<T: Real>(res: Resolution) -> GridField<T> {
    let n = res.n();
    let inv = T::one() / T::count(n);
    let mut data = vec![T::zero(); res.len()];
    let p = res.plane();
    for i1 in 0..n {
        for i2 in 0..n {
            data[i1 * n + i2] = T::count(i1) * inv;
            data[p + i1 * n + i2] = T::count(i2) * inv;
        }
    }
    GridField::from_vec_unchecked(res, data)
}

/// Neighbour pixel index for tap `(ky, kx)` with periodic wrap.
#[inline]
fn neighbour(n: usize, i1: usize, i2: usize, tap: usize) -> usize {
    let r = (i1 + n + tap / 3 - 1) % n;
    let c = (i2 + n + tap % 3 - 1) % n;
    r * n + c
}

/// Patch matrix `[pixel][tap][in]` of the circularly padded input.
fn im2col<T: Real>(x: &[T], n: usize, ci: usize) -> Vec<T> {
    let row = TAPS * ci;
    let mut cols = vec![T::zero(); n * n * row];
    for i1 in 0..n {
        for i2 in 0..n {
            let p = i1 * n + i2;
            for tap in 0..TAPS {
                let q = neighbour(n, i1, i2, tap);
                cols[p * row + tap * ci..p * row + (tap + 1) * ci]
                    .copy_from_slice(&x[q * ci..(q + 1) * ci]);
            }
        }
    }
    cols
}

fn conv_forward<T: Real>(layer: &ConvLayer<T>, x: &[T], n: usize, relu: bool) -> Vec<T> {
    let (ci, co) = (layer.in_ch, layer.out_ch);
    let cols = im2col(x, n, ci);
    let mut out: Vec<T> = (0..n * n)
        .flat_map(|_| layer.bias.iter().copied())
        .collect();
    T::gemm(
        n * n,
        TAPS * ci,
        co,
        &cols,
        false,
        &layer.transposed(),
        false,
        &mut out,
        T::one(),
    );
    if relu {
        out.iter_mut().for_each(|a| *a = a.max(T::zero()));
    }
    out
}

/// Accumulates weight/bias gradients into `grad` and returns `∂L/∂x`.
fn conv_backward<T: Real>(
    layer: &ConvLayer<T>,
    x: &[T],
    gz: &[T],
    n: usize,
    grad: &mut ConvLayer<T>,
    need_input: bool,
) -> Vec<T> {
    let (ci, co) = (layer.in_ch, layer.out_ch);
    let (pixels, row) = (n * n, TAPS * ci);
    for g in gz.chunks_exact(co) {
        grad.bias.iter_mut().zip(g).for_each(|(b, &v)| *b = *b + v);
    }
    let cols = im2col(x, n, ci);
    let mut gwt = vec![T::zero(); row * co];
    T::gemm(row, pixels, co, &cols, true, gz, false, &mut gwt, T::zero());
    for o in 0..co {
        for i in 0..ci {
            for tap in 0..TAPS {
                let k = (o * ci + i) * TAPS + tap;
                grad.weights[k] = grad.weights[k] + gwt[(tap * ci + i) * co + o];
            }
        }
    }
    if !need_input {
        return Vec::new();
    }
    let mut gcols = cols;
    T::gemm(
        pixels,
        co,
        row,
        gz,
        false,
        &layer.transposed(),
        true,
        &mut gcols,
        T::zero(),
    );
    let mut gx = vec![T::zero(); pixels * ci];
    for i1 in 0..n {
        for i2 in 0..n {
            let p = i1 * n + i2;
            for tap in 0..TAPS {
                let q = neighbour(n, i1, i2, tap);
                let src = &gcols[p * row + tap * ci..p * row + (tap + 1) * ci];
                gx[q * ci..(q + 1) * ci]
                    .iter_mut()
                    .zip(src)
                    .for_each(|(g, &v)| *g = *g + v);
            }
        }
    }
    gx
}

impl<T: Real> CoordCnnModel<T> {
    /// He-uniform initialization for the given channel plan.
    pub fn init(plan: &[usize], rng: &mut SeededRng) -> Result<Self> {
        if plan.len() < 2 || plan[0] != CHANNELS + 2 || *plan.last().unwrap() != CHANNELS {
            return Err(Error::ShapeMismatch(format!(
                "channel plan must run from {} to {}, got {plan:?}",
                CHANNELS + 2,
                CHANNELS
            )));
        }
        let mut stream = rng.next_stream();
        let layers = plan
            .windows(2)
            .map(|w| {
                let (ci, co) = (w[0], w[1]);
                let limit = (6.0 / (ci * TAPS) as f64).sqrt();
                let mut layer = ConvLayer::zeros(ci, co);
                layer
                    .weights
                    .iter_mut()
                    .for_each(|v| *v = T::lit(limit * (2.0 * stream.uniform() - 1.0)));
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<ConvLayer<T>>) -> Result<Self> {
        let ok = !layers.is_empty()
            && layers[0].in_ch == CHANNELS + 2
            && layers.last().unwrap().out_ch == CHANNELS
            && layers.windows(2).all(|w| w[0].out_ch == w[1].in_ch)
            && layers
                .iter()
                .all(|l| l.weights.len() == l.in_ch * l.out_ch * TAPS && l.bias.len() == l.out_ch);
        if !ok {
            return Err(Error::ShapeMismatch(
                "inconsistent convolution stack".into(),
            ));
        }
        Ok(Self { layers })
    }

    pub fn plan(&self) -> Vec<usize> {
        let mut p = vec![self.layers[0].in_ch];
        p.extend(self.layers.iter().map(|l| l.out_ch));
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| ConvLayer::zeros(l.in_ch, l.out_ch))
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(ConvLayer::param_count).sum()
    }

    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, src: &[T]) -> Result<()> {
        if src.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                src.len()
            )));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let (nw, nb) = (l.weights.len(), l.bias.len());
            l.weights.copy_from_slice(&src[at..at + nw]);
            l.bias.copy_from_slice(&src[at + nw..at + nw + nb]);
            at += nw + nb;
        }
        Ok(())
    }

    pub fn apply(&self, f: &GridField<T>) -> GridField<T> {
        cnn_forward(self, f).0
    }
}

/// Forward pass: append coordinates, convolve, ReLU between layers.
pub fn cnn_forward<T: Real>(
    model: &CoordCnnModel<T>,
    f: &GridField<T>,
) -> (GridField<T>, CnnCache<T>) {
    let res = f.res();
    let (n, p) = (res.n(), res.plane());
    let coords = coord_channels::<T>(res);
    let cin = CHANNELS + 2;
    let mut x = vec![T::zero(); p * cin];
    for q in 0..p {
        x[q * cin] = f.data()[q];
        x[q * cin + 1] = f.data()[p + q];
        x[q * cin + 2] = coords.data()[q];
        x[q * cin + 3] = coords.data()[p + q];
    }
    let last = model.layers.len() - 1;
    let mut inputs = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate() {
        let y = conv_forward(layer, &x, n, l < last);
        inputs.push(std::mem::replace(&mut x, y));
    }
    let mut out = vec![T::zero(); res.len()];
    for q in 0..p {
        out[q] = x[q * CHANNELS];
        out[p + q] = x[q * CHANNELS + 1];
    }
    (
        GridField::from_vec_unchecked(res, out),
        CnnCache {
            res,
            plan: model.plan(),
            inputs,
        },
    )
}

/// Reverse pass; `grad_in` covers the two field channels only.
pub fn cnn_backward<T: Real>(
    model: &CoordCnnModel<T>,
    cache: &CnnCache<T>,
    grad_out: &GridField<T>,
) -> Result<(CnnGradients<T>, GridField<T>)> {
    if cache.plan != model.plan() || cache.inputs.len() != model.layers.len() {
        return Err(Error::CacheMismatch(
            "cache built by a different network".into(),
        ));
    }
    if grad_out.res() != cache.res {
        return Err(Error::CacheMismatch(format!(
            "gradient at n={} but cache at n={}",
            grad_out.res().n(),
            cache.res.n()
        )));
    }
    let res = cache.res;
    let (n, p) = (res.n(), res.plane());
    let mut grads = model.zeros_like();
    let mut g = vec![T::zero(); p * CHANNELS];
    for q in 0..p {
        g[q * CHANNELS] = grad_out.data()[q];
        g[q * CHANNELS + 1] = grad_out.data()[p + q];
    }
    for l in (0..model.layers.len()).rev() {
        let x = &cache.inputs[l];
        g = conv_backward(&model.layers[l], x, &g, n, &mut grads.layers[l], true);
        if l > 0 {
            // x is the ReLU output of the previous layer.
            g.iter_mut().zip(x).for_each(|(gv, &xv)| {
                if xv <= T::zero() {
                    *gv = T::zero()
                }
            });
        }
    }
    let cin = model.layers[0].in_ch;
    let mut gin = vec![T::zero(); res.len()];
    for q in 0..p {
        gin[q] = g[q * cin];
        gin[p + q] = g[q * cin + 1];
    }
    Ok((grads, GridField::from_vec_unchecked(res, gin)))
}
