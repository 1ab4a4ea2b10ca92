//! Spatial and spectral entropy features: per-block histogram entropy and
//! per-block DCT energy entropy, the two no-reference texture descriptors
//! used alongside the contrast metrics.

use super::gray8;
use crate::image::ImageF;
use crate::scalar::Scalar;

const BLOCK: usize = 8;

/// The two entropy features for one image, in bits.
#[derive(Clone, Copy, Debug)]
pub struct SseqFeatures<T> {
    /// Mean 8-bit histogram entropy over complete 8×8 blocks.
    pub spatial_entropy: T,
    /// Mean AC-energy entropy of the per-block orthonormal DCT-II.
    pub spectral_entropy: T,
}

/// Orthonormal DCT-II basis factor `a(u)·cos(π(2i+1)u/(2n))` tabulated for
/// one axis of an 8×8 block.
fn dct_basis<T: Scalar>() -> [[T; BLOCK]; BLOCK] {
    let n = BLOCK as f64;
    let mut basis = [[T::zero(); BLOCK]; BLOCK];
    for (u, row) in basis.iter_mut().enumerate() {
        let scale = if u == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
        for (i, cell) in row.iter_mut().enumerate() {
            let angle = std::f64::consts::PI * (2.0 * i as f64 + 1.0) * u as f64 / (2.0 * n);
            *cell = T::of(scale * angle.cos());
        }
    }
    basis
}

/// Entropy in bits of a normalized probability map, skipping zero entries.
fn entropy_bits<T: Scalar>(probabilities: impl Iterator<Item = T>) -> T {
    let mut h = T::zero();
    for p in probabilities {
        if p > T::zero() {
            h -= p * p.log2();
        }
    }
    h
}

/// Computes both entropy features on the 8-bit luminance plane. Only
/// complete 8×8 blocks count; images narrower or shorter than one block
/// yield zero for both features. A block whose AC energy is exactly zero
/// (constant block) contributes zero spectral entropy.
pub fn sseq_features<T: Scalar>(img: &ImageF<T>) -> SseqFeatures<T> {
    let gray = gray8(img);
    let (rows, cols) = (gray.height / BLOCK, gray.width / BLOCK);
    if rows == 0 || cols == 0 {
        return SseqFeatures {
            spatial_entropy: T::zero(),
            spectral_entropy: T::zero(),
        };
    }
    let basis = dct_basis::<T>();
    let inv_count = T::one() / T::of_usize(BLOCK * BLOCK);
    let mut spatial_total = T::zero();
    let mut spectral_total = T::zero();
    for by in 0..rows {
        for bx in 0..cols {
            let mut histogram = [0usize; 256];
            let mut block = [[T::zero(); BLOCK]; BLOCK];
            let mut mean = T::zero();
            for (y, row) in block.iter_mut().enumerate() {
                for (x, cell) in row.iter_mut().enumerate() {
                    let v = gray.get(by * BLOCK + y, bx * BLOCK + x);
                    histogram[v.as_f64() as usize] += 1;
                    mean += v;
                    *cell = v;
                }
            }
            spatial_total += entropy_bits(
                histogram
                    .iter()
                    .filter(|&&c| c > 0)
                    .map(|&c| T::of_usize(c) * inv_count),
            );

            // Direct orthonormal 2-D DCT-II of the mean-removed block, then
            // the energy distribution over the 63 AC coefficients. AC terms
            // are mathematically unchanged by a constant shift, and removing
            // the mean makes constant blocks produce exact zeros instead of
            // rounding dust.
            mean *= inv_count;
            for row in block.iter_mut() {
                for cell in row.iter_mut() {
                    *cell -= mean;
                }
            }
            let mut energy = [[T::zero(); BLOCK]; BLOCK];
            let mut ac_energy = T::zero();
            for u in 0..BLOCK {
                for v in 0..BLOCK {
                    if u == 0 && v == 0 {
                        continue;
                    }
                    let mut coeff = T::zero();
                    for (i, row) in block.iter().enumerate() {
                        for (j, &sample) in row.iter().enumerate() {
                            coeff += sample * basis[u][i] * basis[v][j];
                        }
                    }
                    let e = coeff * coeff;
                    energy[u][v] = e;
                    ac_energy += e;
                }
            }
            if ac_energy > T::zero() {
                spectral_total += entropy_bits(
                    energy
                        .iter()
                        .enumerate()
                        .flat_map(|(u, row)| {
                            row.iter().enumerate().map(move |(v, &e)| (u, v, e))
                        })
                        .filter(|&(u, v, _)| u != 0 || v != 0)
                        .map(|(_, _, e)| e / ac_energy),
                );
            }
        }
    }
    let blocks = T::of_usize(rows * cols);
    SseqFeatures {
        spatial_entropy: spatial_total / blocks,
        spectral_entropy: spectral_total / blocks,
    }
}
