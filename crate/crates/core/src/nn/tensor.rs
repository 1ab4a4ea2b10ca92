//! Dense n-dimensional value container used by the neural engine.
//!
//! The first axis is always the batch axis for activations flowing through a
//! network; parameter tensors use whatever layout their layer documents.
//! Data is row-major (last axis fastest).

use super::NnError;
use crate::image::{ImageError, ImageF};
use crate::scalar::Scalar;

/// A shape-tagged flat buffer. Row-major, last axis contiguous.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    /// Wraps `data` with `shape`; the element count must match exactly.
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self, NnError> {
        let want: usize = shape.iter().product();
        if want != data.len() {
            return Err(NnError::BadShape(format!(
                "shape {shape:?} wants {want} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![T::zero(); len],
        }
    }

    pub fn filled(shape: Vec<usize>, value: T) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: vec![value; len],
        }
    }

    /// Builds from a function of the flat (row-major) index.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(usize) -> T) -> Self {
        let len = shape.iter().product();
        Self {
            shape,
            data: (0..len).map(&mut f).collect(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Leading (batch) dimension; 0 for rank-0 tensors.
    pub fn batch(&self) -> usize {
        self.shape.first().copied().unwrap_or(0)
    }

    /// Elements per batch entry.
    pub fn sample_len(&self) -> usize {
        self.shape.iter().skip(1).product()
    }

    /// One batch entry as a slice.
    pub fn sample(&self, n: usize) -> &[T] {
        let s = self.sample_len();
        &self.data[n * s..(n + 1) * s]
    }

    pub fn sample_mut(&mut self, n: usize) -> &mut [T] {
        let s = self.sample_len();
        &mut self.data[n * s..(n + 1) * s]
    }

    /// Reinterprets the buffer under a new shape of equal element count.
    pub fn reshape(self, shape: Vec<usize>) -> Result<Self, NnError> {
        let want: usize = shape.iter().product();
        if want != self.data.len() {
            return Err(NnError::BadShape(format!(
                "cannot reshape {:?} ({} elements) to {shape:?} ({want})",
                self.shape,
                self.data.len()
            )));
        }
        Ok(Self {
            shape,
            data: self.data,
        })
    }

    /// Stacks per-sample slices into a batch tensor of shape `[n, ...item]`.
    pub fn stack(item_shape: &[usize], samples: &[&[T]]) -> Result<Self, NnError> {
        let item: usize = item_shape.iter().product();
        let mut data = Vec::with_capacity(item * samples.len());
        for (i, s) in samples.iter().enumerate() {
            if s.len() != item {
                return Err(NnError::BadShape(format!(
                    "stack item {i} has {} elements, item shape {item_shape:?} wants {item}",
                    s.len()
                )));
            }
            data.extend_from_slice(s);
        }
        let mut shape = Vec::with_capacity(item_shape.len() + 1);
        shape.push(samples.len());
        shape.extend_from_slice(item_shape);
        Ok(Self { shape, data })
    }
}

/// Converts an interleaved image into a planar `[1, C, H, W]` tensor.
pub fn image_to_tensor<T: Scalar>(img: &ImageF<T>) -> Tensor<T> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut data = vec![T::zero(); c * h * w];
    for ci in 0..c {
        for y in 0..h {
            for x in 0..w {
                data[ci * h * w + y * w + x] = img.get(y, x, ci);
            }
        }
    }
    Tensor {
        shape: vec![1, c, h, w],
        data,
    }
}

/// Converts a planar `[C, H, W]` or `[1, C, H, W]` tensor back into an image,
/// clamping samples into `[0, 1]`.
pub fn tensor_to_image<T: Scalar>(t: &Tensor<T>) -> Result<ImageF<T>, NnError> {
    let dims: Vec<usize> = match t.shape() {
        [1, c, h, w] => vec![*c, *h, *w],
        [c, h, w] => vec![*c, *h, *w],
        other => {
            return Err(NnError::BadShape(format!(
                "expected [C, H, W] or [1, C, H, W], got {other:?}"
            )))
        }
    };
    let (c, h, w) = (dims[0], dims[1], dims[2]);
    let img = ImageF::from_fn(h, w, c, |y, x, ci| t.data()[ci * h * w + y * w + x])
        .map_err(|e: ImageError| NnError::BadShape(e.to_string()))?;
    Ok(img)
}
