use serde::{Deserialize, Serialize};

use super::{NnError, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Softmax,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Padding {
    Same,
    Valid,
}

/// Shape of the activation flowing between layers.
///
/// Images are stored channel-planar (`C × H × W`, row-major within a plane).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Flat(usize),
    Image {
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(n) => n,
            Shape::Image {
                channels,
                height,
                width,
            } => channels * height * width,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        in_units: usize,
        out_units: usize,
        activation: Activation,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        padding: Padding,
        activation: Activation,
    },
    #[serde(rename = "maxpool2d")]
    MaxPool2d { pool_size: usize, stride: usize },
    Flatten,
}

impl LayerSpec {
    pub fn dense(in_units: usize, out_units: usize, activation: Activation) -> Self {
        LayerSpec::Dense {
            in_units,
            out_units,
            activation,
        }
    }

    pub fn conv_same(in_channels: usize, out_channels: usize, kernel_size: usize, activation: Activation) -> Self {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel_size,
            stride: 1,
            padding: Padding::Same,
            activation,
        }
    }

    pub fn pool(pool_size: usize, stride: usize) -> Self {
        LayerSpec::MaxPool2d { pool_size, stride }
    }

    pub fn activation(&self) -> Activation {
        match *self {
            LayerSpec::Dense { activation, .. } | LayerSpec::Conv2d { activation, .. } => activation,
            _ => Activation::None,
        }
    }

    /// Number of (weight, bias) entries.
    pub fn param_shape(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense {
                in_units,
                out_units,
                ..
            } => (in_units * out_units, out_units),
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => (out_channels * in_channels * kernel_size * kernel_size, out_channels),
            _ => (0, 0),
        }
    }

    pub fn fan_in(&self) -> usize {
        match *self {
            LayerSpec::Dense { in_units, .. } => in_units,
            LayerSpec::Conv2d {
                in_channels,
                kernel_size,
                ..
            } => in_channels * kernel_size * kernel_size,
            _ => 0,
        }
    }
}

/// Spatial bookkeeping for a convolution or pooling layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Window {
    pub in_c: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_c: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub k: usize,
    pub stride: usize,
    pub pad_top: usize,
    pub pad_left: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LayerPlan {
    pub input: Shape,
    pub output: Shape,
    pub window: Option<Window>,
}

fn same_extent(len: usize, k: usize, stride: usize) -> (usize, usize) {
    let out = len.div_ceil(stride);
    let total = ((out - 1) * stride + k).saturating_sub(len);
    (out, total / 2)
}

/// Output shape of `spec` applied to `input`, or a human-readable reason.
pub(crate) fn plan(spec: &LayerSpec, input: Shape) -> Result<LayerPlan, String> {
    match *spec {
        LayerSpec::Dense {
            in_units,
            out_units,
            ..
        } => {
            if in_units == 0 || out_units == 0 {
                return Err("dense layer needs positive unit counts".into());
            }
            match input {
                Shape::Flat(n) if n == in_units => Ok(LayerPlan {
                    input,
                    output: Shape::Flat(out_units),
                    window: None,
                }),
                Shape::Flat(n) => Err(format!("{n} units delivered, dense layer expects {in_units}")),
                Shape::Image { .. } => Err("dense layer applied to an image; insert a flatten layer".into()),
            }
        }
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel_size,
            stride,
            padding,
            ..
        } => {
            let Shape::Image {
                channels,
                height,
                width,
            } = input
            else {
                return Err("convolution needs an image input".into());
            };
            if kernel_size == 0 || stride == 0 || out_channels == 0 {
                return Err("convolution needs positive kernel, stride and channel counts".into());
            }
            if channels != in_channels {
                return Err(format!("{channels} channels delivered, convolution expects {in_channels}"));
            }
            let (out_h, out_w, pad_top, pad_left) = match padding {
                Padding::Same => {
                    let (oh, pt) = same_extent(height, kernel_size, stride);
                    let (ow, pl) = same_extent(width, kernel_size, stride);
                    (oh, ow, pt, pl)
                }
                Padding::Valid => {
                    if height < kernel_size || width < kernel_size {
                        return Err(format!("{height}x{width} image smaller than {kernel_size}x{kernel_size} kernel"));
                    }
                    ((height - kernel_size) / stride + 1, (width - kernel_size) / stride + 1, 0, 0)
                }
            };
            Ok(LayerPlan {
                input,
                output: Shape::Image {
                    channels: out_channels,
                    height: out_h,
                    width: out_w,
                },
                window: Some(Window {
                    in_c: channels,
                    in_h: height,
                    in_w: width,
                    out_c: out_channels,
                    out_h,
                    out_w,
                    k: kernel_size,
                    stride,
                    pad_top,
                    pad_left,
                }),
            })
        }
        LayerSpec::MaxPool2d { pool_size, stride } => {
            let Shape::Image {
                channels,
                height,
                width,
            } = input
            else {
                return Err("pooling needs an image input".into());
            };
            if pool_size == 0 || stride == 0 {
                return Err("pooling needs positive size and stride".into());
            }
            if height < pool_size || width < pool_size {
                return Err(format!("{height}x{width} image smaller than {pool_size}x{pool_size} pool"));
            }
            let out_h = (height - pool_size) / stride + 1;
            let out_w = (width - pool_size) / stride + 1;
            Ok(LayerPlan {
                input,
                output: Shape::Image {
                    channels,
                    height: out_h,
                    width: out_w,
                },
                window: Some(Window {
                    in_c: channels,
                    in_h: height,
                    in_w: width,
                    out_c: channels,
                    out_h,
                    out_w,
                    k: pool_size,
                    stride,
                    pad_top: 0,
                    pad_left: 0,
                }),
            })
        }
        LayerSpec::Flatten => Ok(LayerPlan {
            input,
            output: Shape::Flat(input.len()),
            window: None,
        }),
    }
}

/// Validates a whole stack and returns one plan per layer.
pub(crate) fn plan_stack(specs: &[LayerSpec], input: Shape) -> Result<Vec<LayerPlan>, NnError> {
    if specs.is_empty() {
        return Err(NnError::InvalidConfig("network has no layers".into()));
    }
    let last = specs.len() - 1;
    for (i, spec) in specs.iter().enumerate() {
        let act = spec.activation();
        if i < last && act == Activation::Softmax {
            return Err(NnError::InvalidLayer {
                layer: i,
                reason: "softmax is only allowed on the final layer".into(),
            });
        }
        if i == last && (act != Activation::Softmax || !matches!(spec, LayerSpec::Dense { .. })) {
            return Err(NnError::InvalidLayer {
                layer: i,
                reason: "final layer must be dense with softmax activation".into(),
            });
        }
    }
    let mut plans = Vec::with_capacity(specs.len());
    let mut shape = input;
    for (i, spec) in specs.iter().enumerate() {
        let p = plan(spec, shape).map_err(|reason| {
            if i == 0 {
                NnError::InvalidLayer { layer: 0, reason }
            } else {
                NnError::ShapeMismatch {
                    prev: i - 1,
                    next: i,
                    reason,
                }
            }
        })?;
        shape = p.output;
        plans.push(p);
    }
    Ok(plans)
}

// Kernels. Weight layouts: dense `[in][out]`, conv `[out][in][ky][kx]`.

pub(crate) fn dense_forward<T: Real>(x: &[T], w: &[T], b: &[T], out: &mut [T]) {
    let n_out = b.len();
    out.copy_from_slice(b);
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let row = &w[i * n_out..(i + 1) * n_out];
        for (o, &wij) in out.iter_mut().zip(row) {
            *o += xi * wij;
        }
    }
}

/// Accumulates parameter gradients and optionally writes `dx`.
pub(crate) fn dense_backward<T: Real>(
    x: &[T],
    w: &[T],
    dz: &[T],
    grads: Option<(&mut [T], &mut [T])>,
    dx: Option<&mut [T]>,
) {
    let n_out = dz.len();
    if let Some((gw, gb)) = grads {
        for (g, &d) in gb.iter_mut().zip(dz) {
            *g += d;
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            let row = &mut gw[i * n_out..(i + 1) * n_out];
            for (g, &d) in row.iter_mut().zip(dz) {
                *g += xi * d;
            }
        }
    }
    if let Some(dx) = dx {
        for (i, d_in) in dx.iter_mut().enumerate() {
            let row = &w[i * n_out..(i + 1) * n_out];
            let mut acc = T::zero();
            for (&wij, &d) in row.iter().zip(dz) {
                acc += wij * d;
            }
            *d_in = acc;
        }
    }
}

/// Output columns `ox` whose tap `kx` lands inside the input row.
fn tap_range(win: &Window, kx: usize) -> (usize, usize) {
    let s = win.stride as isize;
    let off = kx as isize - win.pad_left as isize;
    // ix = ox * s + off must satisfy 0 <= ix < in_w
    let lo = if off >= 0 { 0 } else { ((-off) + s - 1) / s };
    let hi_excl = {
        let lim = win.in_w as isize - off;
        if lim <= 0 {
            0
        } else {
            (lim + s - 1) / s
        }
    };
    let lo = lo.max(0) as usize;
    let hi = (hi_excl as usize).min(win.out_w);
    (lo, hi.max(lo))
}

fn tap_row(win: &Window, oy: usize, ky: usize) -> Option<usize> {
    let iy = (oy * win.stride + ky) as isize - win.pad_top as isize;
    (iy >= 0 && (iy as usize) < win.in_h).then_some(iy as usize)
}

pub(crate) fn conv_forward<T: Real>(win: &Window, x: &[T], w: &[T], b: &[T], out: &mut [T]) {
    let plane_in = win.in_h * win.in_w;
    let plane_out = win.out_h * win.out_w;
    let k = win.k;
    for o in 0..win.out_c {
        let out_o = &mut out[o * plane_out..(o + 1) * plane_out];
        out_o.fill(b[o]);
        for c in 0..win.in_c {
            let inp = &x[c * plane_in..(c + 1) * plane_in];
            for ky in 0..k {
                for kx in 0..k {
                    let wv = w[((o * win.in_c + c) * k + ky) * k + kx];
                    let (lo, hi) = tap_range(win, kx);
                    for oy in 0..win.out_h {
                        let Some(iy) = tap_row(win, oy, ky) else { continue };
                        let row_in = &inp[iy * win.in_w..(iy + 1) * win.in_w];
                        let row_out = &mut out_o[oy * win.out_w..(oy + 1) * win.out_w];
                        for ox in lo..hi {
                            let ix = ox * win.stride + kx - win.pad_left;
                            row_out[ox] += wv * row_in[ix];
                        }
                    }
                }
            }
        }
    }
}

pub(crate) fn conv_backward<T: Real>(
    win: &Window,
    x: &[T],
    w: &[T],
    dz: &[T],
    mut grads: Option<(&mut [T], &mut [T])>,
    mut dx: Option<&mut [T]>,
) {
    let plane_in = win.in_h * win.in_w;
    let plane_out = win.out_h * win.out_w;
    let k = win.k;
    if let Some(d) = dx.as_deref_mut() {
        d.fill(T::zero());
    }
    for o in 0..win.out_c {
        let dz_o = &dz[o * plane_out..(o + 1) * plane_out];
        if let Some((_, gb)) = grads.as_mut() {
            gb[o] += dz_o.iter().copied().sum::<T>();
        }
        for c in 0..win.in_c {
            let inp = &x[c * plane_in..(c + 1) * plane_in];
            for ky in 0..k {
                for kx in 0..k {
                    let widx = ((o * win.in_c + c) * k + ky) * k + kx;
                    let wv = w[widx];
                    let (lo, hi) = tap_range(win, kx);
                    let mut gacc = T::zero();
                    for oy in 0..win.out_h {
                        let Some(iy) = tap_row(win, oy, ky) else { continue };
                        let row_dz = &dz_o[oy * win.out_w..(oy + 1) * win.out_w];
                        let base = c * plane_in + iy * win.in_w;
                        for ox in lo..hi {
                            let ix = ox * win.stride + kx - win.pad_left;
                            gacc += row_dz[ox] * inp[iy * win.in_w + ix];
                            if let Some(d) = dx.as_deref_mut() {
                                d[base + ix] += wv * row_dz[ox];
                            }
                        }
                    }
                    if let Some((gw, _)) = grads.as_mut() {
                        gw[widx] += gacc;
                    }
                }
            }
        }
    }
}

/// Max pooling; `argmax` receives the input index chosen for every output.
pub(crate) fn pool_forward<T: Real>(win: &Window, x: &[T], out: &mut [T], argmax: &mut [usize]) {
    let plane_in = win.in_h * win.in_w;
    let plane_out = win.out_h * win.out_w;
    for c in 0..win.in_c {
        for oy in 0..win.out_h {
            for ox in 0..win.out_w {
                let mut best_idx = c * plane_in + (oy * win.stride) * win.in_w + ox * win.stride;
                let mut best = x[best_idx];
                for ky in 0..win.k {
                    for kx in 0..win.k {
                        let idx = c * plane_in + (oy * win.stride + ky) * win.in_w + ox * win.stride + kx;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = c * plane_out + oy * win.out_w + ox;
                out[o] = best;
                argmax[o] = best_idx;
            }
        }
    }
}

pub(crate) fn pool_backward<T: Real>(argmax: &[usize], dz: &[T], dx: &mut [T]) {
    dx.fill(T::zero());
    for (&idx, &d) in argmax.iter().zip(dz) {
        dx[idx] += d;
    }
}

pub(crate) fn activate<T: Real>(act: Activation, pre: &[T], out: &mut [T]) {
    match act {
        Activation::Relu => {
            for (o, &p) in out.iter_mut().zip(pre) {
                *o = if p > T::zero() { p } else { T::zero() };
            }
        }
        Activation::Tanh => {
            for (o, &p) in out.iter_mut().zip(pre) {
                *o = p.tanh();
            }
        }
        Activation::None => out.copy_from_slice(pre),
        Activation::Softmax => softmax(pre, out),
    }
}

/// Multiplies `grad` (dL/d output) in place by the activation derivative.
/// Not used for softmax, whose gradient is folded into the loss.
pub(crate) fn activation_backward<T: Real>(act: Activation, pre: &[T], out: &[T], grad: &mut [T]) {
    match act {
        Activation::Relu => {
            for (g, &p) in grad.iter_mut().zip(pre) {
                if p <= T::zero() {
                    *g = T::zero();
                }
            }
        }
        Activation::Tanh => {
            for (g, &a) in grad.iter_mut().zip(out) {
                *g *= T::one() - a * a;
            }
        }
        Activation::None | Activation::Softmax => {}
    }
}

/// Softmax with max subtraction.
pub(crate) fn softmax<T: Real>(z: &[T], out: &mut [T]) {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o = *o / sum;
    }
}
