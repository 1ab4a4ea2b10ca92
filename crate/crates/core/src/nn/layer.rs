//! Layer vocabulary and the forward/backward compute kernels.
//!
//! Each layer is described by a serializable [`LayerDef`]; the actual math
//! lives in free functions the graph executor dispatches to. Convolutions
//! run as im2col + matrix multiply with zero padding (padding semantics for
//! network layers are always zero-fill; replicate borders exist only in the
//! image-processing module). Transposed convolution is implemented as the
//! exact adjoint of the matching convolution, so gradient checks close to
//! machine precision.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// A single layer's static description. `kind` tags the JSON encoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerDef {
    /// Fully-connected `y = W·x + b`; weight `[out, in]`, bias `[out]`.
    Dense { in_features: usize, out_features: usize },
    /// 2-D convolution, square kernel, zero padding; weight
    /// `[out_c, in_c, k, k]`, bias `[out_c]`.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    /// Transposed 2-D convolution (upsampling adjoint of [`LayerDef::Conv2d`]);
    /// weight `[in_c, out_c, k, k]`, bias `[out_c]`. Output side is
    /// `(in − 1)·stride − 2·padding + kernel`.
    ConvTranspose2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    /// `max(x, slope·x)` applied elementwise.
    LeakyRelu { negative_slope: f64 },
    /// Logistic squashing applied elementwise.
    Sigmoid,
    /// Collapses a sample to one dimension.
    Flatten,
    /// Restores a flat sample to `[channels, height, width]`.
    Unflatten { channels: usize, height: usize, width: usize },
    /// Concatenates two or more `[C_i, H, W]` inputs along the channel axis.
    Concat,
    /// Elementwise sum of two or more same-shape inputs.
    Add,
    /// Global average pool with one learned scale per channel:
    /// `y_c = w_c · mean(x_c)`. Weight `[C]`, initialized to one.
    WeightedGlobalAvgPool,
}

impl LayerDef {
    /// Number of tensor inputs the layer consumes.
    pub fn arity(&self) -> LayerArity {
        match self {
            LayerDef::Concat | LayerDef::Add => LayerArity::AtLeast(2),
            _ => LayerArity::Exactly(1),
        }
    }

    /// Whether the layer owns trainable parameters.
    pub fn has_params(&self) -> bool {
        matches!(
            self,
            LayerDef::Dense { .. }
                | LayerDef::Conv2d { .. }
                | LayerDef::ConvTranspose2d { .. }
                | LayerDef::WeightedGlobalAvgPool
        )
    }

    /// `(weight_len, bias_len)` for a parameterized layer. The weight length
    /// of [`LayerDef::WeightedGlobalAvgPool`] depends on its input channel
    /// count, so it is supplied by the caller.
    pub fn param_lens(&self, input_channels: usize) -> (usize, usize) {
        match *self {
            LayerDef::Dense { in_features, out_features } => {
                (in_features * out_features, out_features)
            }
            LayerDef::Conv2d { in_channels, out_channels, kernel, .. } => {
                (out_channels * in_channels * kernel * kernel, out_channels)
            }
            LayerDef::ConvTranspose2d { in_channels, out_channels, kernel, .. } => {
                (in_channels * out_channels * kernel * kernel, out_channels)
            }
            LayerDef::WeightedGlobalAvgPool => (input_channels, 0),
            _ => (0, 0),
        }
    }

    /// Short lowercase tag used in log lines.
    pub fn tag(&self) -> &'static str {
        match self {
            LayerDef::Dense { .. } => "dense",
            LayerDef::Conv2d { .. } => "conv2d",
            LayerDef::ConvTranspose2d { .. } => "conv_transpose2d",
            LayerDef::LeakyRelu { .. } => "leaky_relu",
            LayerDef::Sigmoid => "sigmoid",
            LayerDef::Flatten => "flatten",
            LayerDef::Unflatten { .. } => "unflatten",
            LayerDef::Concat => "concat",
            LayerDef::Add => "add",
            LayerDef::WeightedGlobalAvgPool => "weighted_global_avg_pool",
        }
    }
}

/// Input arity constraint for a layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerArity {
    Exactly(usize),
    AtLeast(usize),
}

impl LayerArity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            LayerArity::Exactly(k) => n == k,
            LayerArity::AtLeast(k) => n >= k,
        }
    }
}

/// Output spatial side of a convolution: `(side + 2p − k)/s + 1` (floor).
pub fn conv_out_side(side: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = side + 2 * padding;
    if padded < kernel || stride == 0 {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

/// Output spatial side of a transposed convolution:
/// `(side − 1)·s − 2p + k`.
pub fn conv_transpose_out_side(
    side: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
) -> Option<usize> {
    if side == 0 || stride == 0 {
        return None;
    }
    let grown = (side - 1) * stride + kernel;
    grown.checked_sub(2 * padding).filter(|&v| v > 0)
}

/// Unfolds one planar sample `[c, h, w]` into patch columns
/// `[c·k·k, oh·ow]` with zero padding.
#[allow(clippy::too_many_arguments)]
pub fn im2col<T: Scalar>(
    x: &[T],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    cols: &mut [T],
) {
    debug_assert_eq!(x.len(), c * h * w);
    debug_assert_eq!(cols.len(), c * k * k * oh * ow);
    let plane = h * w;
    let out_plane = oh * ow;
    let mut row = 0usize;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let dst = &mut cols[row * out_plane..(row + 1) * out_plane];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    let drow = &mut dst[oy * ow..(oy + 1) * ow];
                    if iy < 0 || iy >= h as isize {
                        drow.fill(T::zero());
                        continue;
                    }
                    let src = ci * plane + iy as usize * w;
                    for (ox, d) in drow.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        *d = if ix < 0 || ix >= w as isize {
                            T::zero()
                        } else {
                            x[src + ix as usize]
                        };
                    }
                }
                row += 1;
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds patch columns back into the sample
/// buffer. The caller zeroes `x` first when a plain fold is wanted.
#[allow(clippy::too_many_arguments)]
pub fn col2im_add<T: Scalar>(
    cols: &[T],
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    oh: usize,
    ow: usize,
    x: &mut [T],
) {
    debug_assert_eq!(x.len(), c * h * w);
    debug_assert_eq!(cols.len(), c * k * k * oh * ow);
    let plane = h * w;
    let out_plane = oh * ow;
    let mut row = 0usize;
    for ci in 0..c {
        for ky in 0..k {
            for kx in 0..k {
                let src = &cols[row * out_plane..(row + 1) * out_plane];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = ci * plane + iy as usize * w;
                    for (ox, &v) in src[oy * ow..(oy + 1) * ow].iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            x[dst + ix as usize] += v;
                        }
                    }
                }
                row += 1;
            }
        }
    }
}

/// `y = x·Wᵀ + b` over a batch; `x [n, in]`, `w [out, in]`, `y [n, out]`.
pub fn dense_forward<T: Scalar>(
    x: &[T],
    w: &[T],
    b: &[T],
    n: usize,
    in_f: usize,
    out_f: usize,
    y: &mut [T],
) {
    T::gemm(
        n,
        in_f,
        out_f,
        T::one(),
        x,
        in_f as isize,
        1,
        w,
        1,
        in_f as isize,
        T::zero(),
        y,
        out_f as isize,
        1,
    );
    for row in y.chunks_exact_mut(out_f) {
        for (v, &bi) in row.iter_mut().zip(b) {
            *v += bi;
        }
    }
}

/// Backward of [`dense_forward`]: fills `dx` and accumulates `dw`/`db`.
#[allow(clippy::too_many_arguments)]
pub fn dense_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    dy: &[T],
    n: usize,
    in_f: usize,
    out_f: usize,
    dx: &mut [T],
    dw: &mut [T],
    db: &mut [T],
) {
    // dx = dy · W
    T::gemm(
        n,
        out_f,
        in_f,
        T::one(),
        dy,
        out_f as isize,
        1,
        w,
        in_f as isize,
        1,
        T::zero(),
        dx,
        in_f as isize,
        1,
    );
    // dW += dyᵀ · x
    T::gemm(
        out_f,
        n,
        in_f,
        T::one(),
        dy,
        1,
        out_f as isize,
        x,
        in_f as isize,
        1,
        T::one(),
        dw,
        in_f as isize,
        1,
    );
    for row in dy.chunks_exact(out_f) {
        for (d, &g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
}

/// Geometry of one convolution application.
#[derive(Clone, Copy, Debug)]
pub struct ConvGeom {
    pub in_c: usize,
    pub out_c: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeom {
    pub fn patch_len(&self) -> usize {
        self.in_c * self.kernel * self.kernel
    }
    pub fn in_plane(&self) -> usize {
        self.in_h * self.in_w
    }
    pub fn out_plane(&self) -> usize {
        self.out_h * self.out_w
    }
}

/// Convolution forward for one batch; `x [n, in_c, h, w]`,
/// `w [out_c, in_c, k, k]`, `y [n, out_c, oh, ow]`.
pub fn conv2d_forward<T: Scalar>(x: &[T], w: &[T], b: &[T], n: usize, g: &ConvGeom, y: &mut [T]) {
    let xs = g.in_c * g.in_plane();
    let ys = g.out_c * g.out_plane();
    let mut cols = vec![T::zero(); g.patch_len() * g.out_plane()];
    for i in 0..n {
        im2col(
            &x[i * xs..(i + 1) * xs],
            g.in_c,
            g.in_h,
            g.in_w,
            g.kernel,
            g.stride,
            g.padding,
            g.out_h,
            g.out_w,
            &mut cols,
        );
        let yi = &mut y[i * ys..(i + 1) * ys];
        T::gemm(
            g.out_c,
            g.patch_len(),
            g.out_plane(),
            T::one(),
            w,
            g.patch_len() as isize,
            1,
            &cols,
            g.out_plane() as isize,
            1,
            T::zero(),
            yi,
            g.out_plane() as isize,
            1,
        );
        for (co, chunk) in yi.chunks_exact_mut(g.out_plane()).enumerate() {
            let bias = b[co];
            for v in chunk {
                *v += bias;
            }
        }
    }
}

/// Backward of [`conv2d_forward`]: fills `dx`, accumulates `dw`/`db`.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    dy: &[T],
    n: usize,
    g: &ConvGeom,
    dx: &mut [T],
    dw: &mut [T],
    db: &mut [T],
) {
    let xs = g.in_c * g.in_plane();
    let ys = g.out_c * g.out_plane();
    let mut cols = vec![T::zero(); g.patch_len() * g.out_plane()];
    let mut dcols = vec![T::zero(); g.patch_len() * g.out_plane()];
    dx.fill(T::zero());
    for i in 0..n {
        let xi = &x[i * xs..(i + 1) * xs];
        let dyi = &dy[i * ys..(i + 1) * ys];
        // dcols = Wᵀ · dy
        T::gemm(
            g.patch_len(),
            g.out_c,
            g.out_plane(),
            T::one(),
            w,
            1,
            g.patch_len() as isize,
            dyi,
            g.out_plane() as isize,
            1,
            T::zero(),
            &mut dcols,
            g.out_plane() as isize,
            1,
        );
        col2im_add(
            &dcols,
            g.in_c,
            g.in_h,
            g.in_w,
            g.kernel,
            g.stride,
            g.padding,
            g.out_h,
            g.out_w,
            &mut dx[i * xs..(i + 1) * xs],
        );
        // dW += dy · colsᵀ
        im2col(
            xi,
            g.in_c,
            g.in_h,
            g.in_w,
            g.kernel,
            g.stride,
            g.padding,
            g.out_h,
            g.out_w,
            &mut cols,
        );
        T::gemm(
            g.out_c,
            g.out_plane(),
            g.patch_len(),
            T::one(),
            dyi,
            g.out_plane() as isize,
            1,
            &cols,
            1,
            g.out_plane() as isize,
            T::one(),
            dw,
            g.patch_len() as isize,
            1,
        );
        for (co, chunk) in dyi.chunks_exact(g.out_plane()).enumerate() {
            db[co] += chunk.iter().copied().sum();
        }
    }
}

/// Transposed-convolution forward for one batch; `x [n, in_c, h, w]`,
/// `w [in_c, out_c, k, k]`, `y [n, out_c, H, W]`. Implemented as the adjoint
/// of the convolution that maps `[out_c, H, W] → [in_c, h, w]`.
pub fn conv_transpose2d_forward<T: Scalar>(
    x: &[T],
    w: &[T],
    b: &[T],
    n: usize,
    g: &ConvGeom,
    y: &mut [T],
) {
    // Adjoint view: patch length is out_c·k², "conv output" side is (h, w).
    let patch = g.out_c * g.kernel * g.kernel;
    let xs = g.in_c * g.in_plane();
    let ys = g.out_c * g.out_plane();
    let mut cols = vec![T::zero(); patch * g.in_plane()];
    for i in 0..n {
        let xi = &x[i * xs..(i + 1) * xs];
        // cols = Wᵀ · x, with W viewed as [in_c, out_c·k²].
        T::gemm(
            patch,
            g.in_c,
            g.in_plane(),
            T::one(),
            w,
            1,
            patch as isize,
            xi,
            g.in_plane() as isize,
            1,
            T::zero(),
            &mut cols,
            g.in_plane() as isize,
            1,
        );
        let yi = &mut y[i * ys..(i + 1) * ys];
        yi.fill(T::zero());
        col2im_add(
            &cols,
            g.out_c,
            g.out_h,
            g.out_w,
            g.kernel,
            g.stride,
            g.padding,
            g.in_h,
            g.in_w,
            yi,
        );
        for (co, chunk) in yi.chunks_exact_mut(g.out_plane()).enumerate() {
            let bias = b[co];
            for v in chunk {
                *v += bias;
            }
        }
    }
}

/// Backward of [`conv_transpose2d_forward`].
#[allow(clippy::too_many_arguments)]
pub fn conv_transpose2d_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    dy: &[T],
    n: usize,
    g: &ConvGeom,
    dx: &mut [T],
    dw: &mut [T],
    db: &mut [T],
) {
    let patch = g.out_c * g.kernel * g.kernel;
    let xs = g.in_c * g.in_plane();
    let ys = g.out_c * g.out_plane();
    let mut cols = vec![T::zero(); patch * g.in_plane()];
    for i in 0..n {
        let xi = &x[i * xs..(i + 1) * xs];
        let dyi = &dy[i * ys..(i + 1) * ys];
        // Gradient flows through the adjoint: im2col of dy plays the role
        // the forward pass gives to the convolution input.
        im2col(
            dyi,
            g.out_c,
            g.out_h,
            g.out_w,
            g.kernel,
            g.stride,
            g.padding,
            g.in_h,
            g.in_w,
            &mut cols,
        );
        // dx = W · cols
        T::gemm(
            g.in_c,
            patch,
            g.in_plane(),
            T::one(),
            w,
            patch as isize,
            1,
            &cols,
            g.in_plane() as isize,
            1,
            T::zero(),
            &mut dx[i * xs..(i + 1) * xs],
            g.in_plane() as isize,
            1,
        );
        // dW += x · colsᵀ (viewed [in_c, out_c·k²])
        T::gemm(
            g.in_c,
            g.in_plane(),
            patch,
            T::one(),
            xi,
            g.in_plane() as isize,
            1,
            &cols,
            1,
            g.in_plane() as isize,
            T::one(),
            dw,
            patch as isize,
            1,
        );
        for (co, chunk) in dyi.chunks_exact(g.out_plane()).enumerate() {
            db[co] += chunk.iter().copied().sum();
        }
    }
}

/// `max(x, slope·x)` elementwise.
pub fn leaky_relu_forward<T: Scalar>(x: &[T], slope: T, y: &mut [T]) {
    for (v, &xi) in y.iter_mut().zip(x) {
        *v = if xi > T::zero() { xi } else { slope * xi };
    }
}

/// Backward of [`leaky_relu_forward`] given the stored input.
pub fn leaky_relu_backward<T: Scalar>(x: &[T], slope: T, dy: &[T], dx: &mut [T]) {
    for ((d, &xi), &g) in dx.iter_mut().zip(x).zip(dy) {
        *d = if xi > T::zero() { g } else { slope * g };
    }
}

/// Logistic squashing, numerically stable on both tails.
pub fn sigmoid_forward<T: Scalar>(x: &[T], y: &mut [T]) {
    for (v, &xi) in y.iter_mut().zip(x) {
        *v = if xi >= T::zero() {
            T::one() / (T::one() + (-xi).exp())
        } else {
            let e = xi.exp();
            e / (T::one() + e)
        };
    }
}

/// Backward of [`sigmoid_forward`] given the stored output.
pub fn sigmoid_backward<T: Scalar>(y: &[T], dy: &[T], dx: &mut [T]) {
    for ((d, &yi), &g) in dx.iter_mut().zip(y).zip(dy) {
        *d = g * yi * (T::one() - yi);
    }
}

/// Global average pool with per-channel scale; `x [n, c, h, w]`, `w [c]`,
/// `y [n, c]`. Also emits per-sample channel means for the backward pass.
pub fn wgap_forward<T: Scalar>(
    x: &[T],
    w: &[T],
    n: usize,
    c: usize,
    plane: usize,
    y: &mut [T],
) {
    let inv = T::one() / T::of_usize(plane);
    for i in 0..n {
        for ci in 0..c {
            let s: T = x[(i * c + ci) * plane..(i * c + ci + 1) * plane]
                .iter()
                .copied()
                .sum();
            y[i * c + ci] = w[ci] * s * inv;
        }
    }
}

/// Backward of [`wgap_forward`].
#[allow(clippy::too_many_arguments)]
pub fn wgap_backward<T: Scalar>(
    x: &[T],
    w: &[T],
    dy: &[T],
    n: usize,
    c: usize,
    plane: usize,
    dx: &mut [T],
    dw: &mut [T],
) {
    let inv = T::one() / T::of_usize(plane);
    for i in 0..n {
        for ci in 0..c {
            let base = (i * c + ci) * plane;
            let g = dy[i * c + ci];
            let spread = g * w[ci] * inv;
            for d in &mut dx[base..base + plane] {
                *d = spread;
            }
            let mean: T = x[base..base + plane].iter().copied().sum::<T>() * inv;
            dw[ci] += g * mean;
        }
    }
}
