//! Spatial raster operations: convolution, Gaussian kernels, Sobel edges,
//! block partitioning, and bilinear resampling.

use super::{clamp01, ImageError, ImageF, Plane};
use crate::scalar::Scalar;

/// Dense 2-D filter kernel with odd side lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel2<T: Scalar> {
    pub height: usize,
    pub width: usize,
    pub weights: Vec<T>,
}

impl<T: Scalar> Kernel2<T> {
    pub fn new(height: usize, width: usize, weights: Vec<T>) -> Self {
        assert!(
            height % 2 == 1 && width % 2 == 1,
            "kernel sides must be odd, got {height}x{width}"
        );
        assert_eq!(weights.len(), height * width, "kernel weight count");
        Self {
            height,
            width,
            weights,
        }
    }

    #[inline]
    fn at(&self, ky: usize, kx: usize) -> T {
        self.weights[ky * self.width + kx]
    }
}

/// Normalized Gaussian kernel of standard deviation `sigma`.
///
/// The side length is `2·ceil(3σ) + 1`, wide enough that the truncated tail
/// is negligible; weights are sampled from the continuous density at integer
/// offsets and renormalized to sum to exactly one.
pub fn gaussian_kernel<T: Scalar>(sigma: f64) -> Kernel2<T> {
    assert!(sigma > 0.0, "gaussian_kernel: sigma must be positive");
    let radius = (3.0 * sigma).ceil() as usize;
    let side = 2 * radius + 1;
    let mut weights = Vec::with_capacity(side * side);
    let inv = -0.5 / (sigma * sigma);
    let mut total = 0.0;
    for ky in 0..side {
        for kx in 0..side {
            let dy = ky as f64 - radius as f64;
            let dx = kx as f64 - radius as f64;
            let w = ((dy * dy + dx * dx) * inv).exp();
            total += w;
            weights.push(w);
        }
    }
    Kernel2::new(
        side,
        side,
        weights.into_iter().map(|w| T::of(w / total)).collect(),
    )
}

/// Correlates a plane with a kernel, replicating the border.
///
/// The kernel is applied un-flipped (filter-style correlation); symmetric
/// kernels are unaffected and directional kernels such as Sobel are written
/// for this convention. Output has the same size as the input.
pub fn convolve2d<T: Scalar>(input: &Plane<T>, kernel: &Kernel2<T>) -> Plane<T> {
    let (h, w) = (input.height as isize, input.width as isize);
    let ry = (kernel.height / 2) as isize;
    let rx = (kernel.width / 2) as isize;
    Plane::from_fn(input.height, input.width, |y, x| {
        let mut acc = T::zero();
        for ky in 0..kernel.height {
            let sy = (y as isize + ky as isize - ry).clamp(0, h - 1) as usize;
            for kx in 0..kernel.width {
                let sx = (x as isize + kx as isize - rx).clamp(0, w - 1) as usize;
                acc += kernel.at(ky, kx) * input.get(sy, sx);
            }
        }
        acc
    })
}

/// Sobel gradient magnitude of a grayscale image, clamped to `[0, 1]`.
///
/// Uses the standard 3×3 kernels with replicate borders; the raw magnitude
/// can reach `4√2`, so a hard step edge saturates to 1.
pub fn sobel_edges<T: Scalar>(gray: &ImageF<T>) -> Result<ImageF<T>, ImageError> {
    if gray.channels() != 1 {
        return Err(ImageError::WrongChannelCount {
            expected: 1,
            got: gray.channels(),
        });
    }
    let plane = gray.plane(0);
    let (gx, gy) = sobel_gradients(&plane);
    ImageF::from_fn(gray.height(), gray.width(), 1, |y, x, _| {
        let dx = gx.get(y, x);
        let dy = gy.get(y, x);
        clamp01((dx * dx + dy * dy).sqrt())
    })
}

/// Raw horizontal and vertical Sobel responses (unclamped).
pub fn sobel_gradients<T: Scalar>(plane: &Plane<T>) -> (Plane<T>, Plane<T>) {
    let o = T::one;
    let two = T::of(2.0);
    let z = T::zero();
    let kx = Kernel2::new(
        3,
        3,
        vec![-o(), z, o(), -two, z, two, -o(), z, o()],
    );
    let ky = Kernel2::new(
        3,
        3,
        vec![-o(), -two, -o(), z, z, z, o(), two, o()],
    );
    (convolve2d(plane, &kx), convolve2d(plane, &ky))
}

/// One tile of a block partition, tagged with its top-left corner.
#[derive(Clone, Debug)]
pub struct Block<T: Scalar> {
    pub y: usize,
    pub x: usize,
    pub plane: Plane<T>,
}

/// Splits a plane into non-overlapping `bh×bw` tiles in row-major order.
///
/// Edge tiles are ragged (smaller) when the sides do not divide evenly, so
/// the tiles always partition the plane exactly.
pub fn block_partition<T: Scalar>(plane: &Plane<T>, bh: usize, bw: usize) -> Vec<Block<T>> {
    assert!(bh >= 1 && bw >= 1, "block sides must be at least 1");
    let mut blocks = Vec::new();
    let mut y = 0;
    while y < plane.height {
        let th = bh.min(plane.height - y);
        let mut x = 0;
        while x < plane.width {
            let tw = bw.min(plane.width - x);
            let tile = Plane::from_fn(th, tw, |dy, dx| plane.get(y + dy, x + dx));
            blocks.push(Block { y, x, plane: tile });
            x += bw;
        }
        y += bh;
    }
    blocks
}

/// Bilinear resample to `out_h×out_w` using edge-clamped sample positions.
pub fn resize_bilinear<T: Scalar>(
    img: &ImageF<T>,
    out_h: usize,
    out_w: usize,
) -> Result<ImageF<T>, ImageError> {
    if out_h == 0 || out_w == 0 {
        return Err(ImageError::BadDimensions {
            height: out_h,
            width: out_w,
            channels: img.channels(),
            reason: "target dimensions must be positive",
        });
    }
    let sy = img.height() as f64 / out_h as f64;
    let sx = img.width() as f64 / out_w as f64;
    ImageF::from_fn(out_h, out_w, img.channels(), |y, x, c| {
        // Half-pixel centers keep the mapping symmetric under flips.
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (img.height() - 1) as f64);
        let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (img.width() - 1) as f64);
        let y0 = fy.floor() as usize;
        let x0 = fx.floor() as usize;
        let y1 = (y0 + 1).min(img.height() - 1);
        let x1 = (x0 + 1).min(img.width() - 1);
        let wy = T::of(fy - y0 as f64);
        let wx = T::of(fx - x0 as f64);
        let top = img.get(y0, x0, c) * (T::one() - wx) + img.get(y0, x1, c) * wx;
        let bot = img.get(y1, x0, c) * (T::one() - wx) + img.get(y1, x1, c) * wx;
        top * (T::one() - wy) + bot * wy
    })
}
