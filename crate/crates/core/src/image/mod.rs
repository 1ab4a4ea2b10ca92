//! Image containers and low-level raster operations.
//!
//! [`ImageF`] is the working representation everywhere in the crate: samples
//! are floats in `[0, 1]`, stored row-major interleaved as `(y, x, channel)`
//! with 1 (grayscale) or 3 (RGB) channels. [`Plane`] is an unconstrained 2-D
//! float array used for intermediate results whose values legitimately leave
//! the unit interval (gradients, filter responses). [`LabImage`] carries
//! CIELab triples produced by [`color::rgb_to_lab`].

pub mod color;
pub mod io;
pub mod ops;

use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions {height}x{width}x{channels} are invalid: {reason}")]
    BadDimensions {
        height: usize,
        width: usize,
        channels: usize,
        reason: &'static str,
    },
    #[error("sample data length {got} does not match {height}x{width}x{channels}")]
    BadLength {
        got: usize,
        height: usize,
        width: usize,
        channels: usize,
    },
    #[error("sample at (y={y}, x={x}, c={c}) is {value}, outside [0, 1]")]
    OutOfRange { y: usize, x: usize, c: usize, value: f64 },
    #[error("operation requires {expected} channels, image has {got}")]
    WrongChannelCount { expected: usize, got: usize },
    #[error("images have mismatched shapes: {a} vs {b}")]
    ShapeMismatch { a: String, b: String },
    #[error("image {height}x{width} is smaller than the required {min}x{min}")]
    TooSmall { height: usize, width: usize, min: usize },
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Decode { path: std::path::PathBuf, reason: String },
}

/// Float image with samples in `[0, 1]`, row-major interleaved `(y, x, c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageF<T: Scalar> {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<T>,
}

impl<T: Scalar> ImageF<T> {
    /// Validating constructor: dimensions must be positive, channels 1 or 3,
    /// and every sample finite in `[0, 1]`.
    pub fn new(
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<T>,
    ) -> Result<Self, ImageError> {
        Self::check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(ImageError::BadLength {
                got: data.len(),
                height,
                width,
                channels,
            });
        }
        for (i, &v) in data.iter().enumerate() {
            if !(v >= T::zero() && v <= T::one()) {
                let c = i % channels;
                let x = (i / channels) % width;
                let y = i / (channels * width);
                return Err(ImageError::OutOfRange {
                    y,
                    x,
                    c,
                    value: v.as_f64(),
                });
            }
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Constructor that clamps every sample into `[0, 1]` (NaNs become 0).
    pub fn from_clamped(
        height: usize,
        width: usize,
        channels: usize,
        mut data: Vec<T>,
    ) -> Result<Self, ImageError> {
        Self::check_dims(height, width, channels)?;
        if data.len() != height * width * channels {
            return Err(ImageError::BadLength {
                got: data.len(),
                height,
                width,
                channels,
            });
        }
        for v in &mut data {
            *v = clamp01(*v);
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds an image by evaluating `f(y, x, c)`; results are clamped.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Result<Self, ImageError> {
        Self::check_dims(height, width, channels)?;
        let mut data = Vec::with_capacity(height * width * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(clamp01(f(y, x, c)));
                }
            }
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Constant-valued image.
    pub fn filled(
        height: usize,
        width: usize,
        channels: usize,
        value: T,
    ) -> Result<Self, ImageError> {
        Self::from_fn(height, width, channels, |_, _, _| value)
    }

    fn check_dims(height: usize, width: usize, channels: usize) -> Result<(), ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::BadDimensions {
                height,
                width,
                channels,
                reason: "height and width must be positive",
            });
        }
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadDimensions {
                height,
                width,
                channels,
                reason: "channel count must be 1 or 3",
            });
        }
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> T {
        debug_assert!(y < self.height && x < self.width && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Writes one sample, clamping it into `[0, 1]`.
    #[inline]
    pub fn set(&mut self, y: usize, x: usize, c: usize, value: T) {
        debug_assert!(y < self.height && x < self.width && c < self.channels);
        self.data[(y * self.width + x) * self.channels + c] = clamp01(value);
    }

    /// Extracts one channel as an unconstrained [`Plane`].
    pub fn plane(&self, c: usize) -> Plane<T> {
        assert!(c < self.channels, "channel {c} out of range");
        let mut data = Vec::with_capacity(self.height * self.width);
        for y in 0..self.height {
            for x in 0..self.width {
                data.push(self.get(y, x, c));
            }
        }
        Plane {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Rebuilds an image from per-channel planes, clamping samples.
    pub fn from_planes(planes: &[Plane<T>]) -> Result<Self, ImageError> {
        let channels = planes.len();
        if channels != 1 && channels != 3 {
            return Err(ImageError::BadDimensions {
                height: planes.first().map_or(0, |p| p.height),
                width: planes.first().map_or(0, |p| p.width),
                channels,
                reason: "channel count must be 1 or 3",
            });
        }
        let (h, w) = (planes[0].height, planes[0].width);
        if planes.iter().any(|p| p.height != h || p.width != w) {
            return Err(ImageError::ShapeMismatch {
                a: format!("{h}x{w}"),
                b: "differing plane shapes".into(),
            });
        }
        Self::from_fn(h, w, channels, |y, x, c| planes[c].get(y, x))
    }

    /// Converts the sample type, preserving layout.
    pub fn cast<U: Scalar>(&self) -> ImageF<U> {
        ImageF {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data: self.data.iter().map(|v| U::of(v.as_f64())).collect(),
        }
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    /// Errors unless both images have identical shape.
    pub fn check_same_shape(&self, other: &Self) -> Result<(), ImageError> {
        if self.height != other.height
            || self.width != other.width
            || self.channels != other.channels
        {
            return Err(ImageError::ShapeMismatch {
                a: self.shape_string(),
                b: other.shape_string(),
            });
        }
        Ok(())
    }
}

/// Clamp into `[0, 1]`; NaN maps to 0.
#[inline]
pub fn clamp01<T: Scalar>(v: T) -> T {
    if v >= T::one() {
        T::one()
    } else if v >= T::zero() {
        v
    } else {
        T::zero()
    }
}

/// Unconstrained 2-D float array (filter responses, gradients, 8-bit planes).
#[derive(Clone, Debug, PartialEq)]
pub struct Plane<T: Scalar> {
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Plane<T> {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![T::zero(); height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> T {
        debug_assert!(y < self.height && x < self.width);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: T) {
        debug_assert!(y < self.height && x < self.width);
        self.data[y * self.width + x] = v;
    }

    pub fn min(&self) -> T {
        self.data.iter().cloned().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.data.iter().cloned().fold(T::neg_infinity(), T::max)
    }

    pub fn mean(&self) -> T {
        let n = T::of_usize(self.data.len());
        self.data.iter().cloned().sum::<T>() / n
    }
}

/// CIELab image: `L ∈ [0, 100]`, `a`/`b` unbounded, row-major `(y, x)`.
#[derive(Clone, Debug)]
pub struct LabImage<T: Scalar> {
    pub height: usize,
    pub width: usize,
    /// Interleaved `(L, a, b)` triples.
    pub data: Vec<T>,
}

impl<T: Scalar> LabImage<T> {
    #[inline]
    pub fn lab(&self, y: usize, x: usize) -> (T, T, T) {
        let i = (y * self.width + x) * 3;
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }
}
