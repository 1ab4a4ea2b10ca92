//! Single-purpose brute-force reimplementations of every quality metric,
//! plus the batch drivers that cross-check them against the library. The
//! reimplementations intentionally share no code with the library: plain
//! nested loops over `Vec<Vec<f64>>` grids. Included via `#[path]` by the
//! metric oracle tests and by the acceptance suite.
#![allow(dead_code)]

use aquaforge::image::ImageF;
use aquaforge::metrics as m;
use aquaforge::rng::KeyedRng;
use aquaforge::Plane;

const REL_TOL: f64 = 1e-6;
const IMAGES: usize = 50;
const SIDE: usize = 16;

fn assert_close(actual: f64, oracle: f64, what: &str) {
    let tol = REL_TOL * oracle.abs().max(1.0);
    assert!(
        (actual - oracle).abs() <= tol,
        "{what}: library {actual} vs oracle {oracle}"
    );
}

fn random_image(seed: u64) -> ImageF<f64> {
    let mut rng = KeyedRng::new(seed);
    ImageF::from_fn(SIDE, SIDE, 3, |_, _, _| rng.uniform()).unwrap()
}

// ---------------------------------------------------------------- helpers

type Grid = Vec<Vec<f64>>;

fn level(v: f64) -> f64 {
    ((v.clamp(0.0, 1.0) * 255.0 + 0.5).floor()).min(255.0)
}

fn grid_channel(img: &ImageF<f64>, c: usize) -> Grid {
    (0..img.height())
        .map(|y| (0..img.width()).map(|x| level(img.get(y, x, c))).collect())
        .collect()
}

fn grid_gray(img: &ImageF<f64>) -> Grid {
    (0..img.height())
        .map(|y| {
            (0..img.width())
                .map(|x| {
                    let lum = 0.299 * img.get(y, x, 0)
                        + 0.587 * img.get(y, x, 1)
                        + 0.114 * img.get(y, x, 2);
                    level(lum.clamp(0.0, 1.0))
                })
                .collect()
        })
        .collect()
}

fn grid_mean(g: &Grid) -> f64 {
    let mut total = 0.0;
    for row in g {
        for &v in row {
            total += v;
        }
    }
    total / (g.len() * g[0].len()) as f64
}

fn grid_variance(g: &Grid, mean: f64) -> f64 {
    let mut total = 0.0;
    for row in g {
        for &v in row {
            total += (v - mean) * (v - mean);
        }
    }
    total / (g.len() * g[0].len()) as f64
}

/// Top-left corners and sizes of the 8×8 tiling, ragged edges included.
fn tiles(h: usize, w: usize) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    let mut y = 0;
    while y < h {
        let bh = (h - y).min(8);
        let mut x = 0;
        while x < w {
            let bw = (w - x).min(8);
            out.push((y, x, bh, bw));
            x += bw;
        }
        y += bh;
    }
    out
}

fn tile_min_max(g: &Grid, y0: usize, x0: usize, bh: usize, bw: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for row in g.iter().skip(y0).take(bh) {
        for &v in row.iter().skip(x0).take(bw) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    (lo, hi)
}

// ---------------------------------------------------------------- oracles

fn oracle_mse(a: &ImageF<f64>, b: &ImageF<f64>) -> f64 {
    let mut total = 0.0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            for c in 0..a.channels() {
                let d = level(a.get(y, x, c)) - level(b.get(y, x, c));
                total += d * d;
            }
        }
    }
    total / (a.height() * a.width() * a.channels()) as f64
}

fn oracle_psnr(a: &ImageF<f64>, b: &ImageF<f64>) -> f64 {
    let mse = oracle_mse(a, b);
    if mse == 0.0 {
        100.0
    } else {
        20.0 * (255.0 / mse.sqrt()).log10()
    }
}

fn oracle_entropy(img: &ImageF<f64>) -> f64 {
    let gray = grid_gray(img);
    let mut counts = [0usize; 256];
    for row in &gray {
        for &v in row {
            counts[v as usize] += 1;
        }
    }
    let n = (gray.len() * gray[0].len()) as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn oracle_ssim(a: &ImageF<f64>, b: &ImageF<f64>) -> f64 {
    let (ga, gb) = (grid_gray(a), grid_gray(b));
    let (h, w) = (ga.len(), ga[0].len());
    let (c1, c2) = (6.5025, 58.5225);
    let mut total = 0.0;
    let mut windows = 0;
    for y0 in 0..=h - 8 {
        for x0 in 0..=w - 8 {
            let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..8 {
                for dx in 0..8 {
                    let (p, q) = (ga[y0 + dy][x0 + dx], gb[y0 + dy][x0 + dx]);
                    sx += p;
                    sy += q;
                    sxx += p * p;
                    syy += q * q;
                    sxy += p * q;
                }
            }
            let n = 64.0;
            let (mx, my) = (sx / n, sy / n);
            let vx = sxx / n - mx * mx;
            let vy = syy / n - my * my;
            let cov = sxy / n - mx * my;
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            windows += 1;
        }
    }
    total / windows as f64
}

fn oracle_eme(g: &Grid) -> f64 {
    let t = tiles(g.len(), g[0].len());
    let total: f64 = t
        .iter()
        .map(|&(y0, x0, bh, bw)| {
            let (lo, hi) = tile_min_max(g, y0, x0, bh, bw);
            20.0 * ((hi + 1.0) / (lo + 1.0)).log10()
        })
        .sum();
    total / t.len() as f64
}

fn oracle_emee(g: &Grid, alpha: f64) -> f64 {
    let t = tiles(g.len(), g[0].len());
    let total: f64 = t
        .iter()
        .map(|&(y0, x0, bh, bw)| {
            let (lo, hi) = tile_min_max(g, y0, x0, bh, bw);
            let r = (hi + 1.0) / (lo + 1.0);
            alpha * r.powf(alpha) * r.ln()
        })
        .sum();
    total / t.len() as f64
}

/// Plain replicate-border Sobel on a grid.
fn oracle_sobel_magnitude(g: &Grid) -> Grid {
    let (h, w) = (g.len(), g[0].len());
    let at = |y: isize, x: isize| -> f64 {
        let yy = y.clamp(0, h as isize - 1) as usize;
        let xx = x.clamp(0, w as isize - 1) as usize;
        g[yy][xx]
    };
    (0..h)
        .map(|y| {
            (0..w)
                .map(|x| {
                    let (y, x) = (y as isize, x as isize);
                    let gx = -at(y - 1, x - 1) + at(y - 1, x + 1) - 2.0 * at(y, x - 1)
                        + 2.0 * at(y, x + 1)
                        - at(y + 1, x - 1)
                        + at(y + 1, x + 1);
                    let gy = -at(y - 1, x - 1) - 2.0 * at(y - 1, x) - at(y - 1, x + 1)
                        + at(y + 1, x - 1)
                        + 2.0 * at(y + 1, x)
                        + at(y + 1, x + 1);
                    (gx * gx + gy * gy).sqrt()
                })
                .collect()
        })
        .collect()
}

fn oracle_uism(img: &ImageF<f64>) -> f64 {
    let weights = [0.299, 0.587, 0.114];
    let mut total = 0.0;
    for (c, &lambda) in weights.iter().enumerate() {
        let chan = grid_channel(img, c);
        let sobel = oracle_sobel_magnitude(&chan);
        let product: Grid = (0..chan.len())
            .map(|y| (0..chan[0].len()).map(|x| sobel[y][x] * chan[y][x]).collect())
            .collect();
        let t = tiles(product.len(), product[0].len());
        let sum: f64 = t
            .iter()
            .map(|&(y0, x0, bh, bw)| {
                let (lo, hi) = tile_min_max(&product, y0, x0, bh, bw);
                ((hi + 1.0) / (lo + 1.0)).ln()
            })
            .sum();
        total += lambda * 2.0 / t.len() as f64 * sum;
    }
    total
}

fn oracle_uiconm(img: &ImageF<f64>) -> f64 {
    let gray = grid_gray(img);
    let gamma = 1026.0;
    let t = tiles(gray.len(), gray[0].len());
    let mut total = 0.0;
    for &(y0, x0, bh, bw) in &t {
        let (lo, hi) = tile_min_max(&gray, y0, x0, bh, bw);
        let minus = gamma * (hi - lo) / (gamma - lo);
        let plus = hi + lo - hi * lo / gamma;
        if plus != 0.0 {
            let w = minus / plus;
            if w > 0.0 {
                total -= w * w.ln();
            }
        }
    }
    2.0 * total / t.len() as f64
}

fn oracle_trimmed(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let trim = sorted.len() / 10;
    let kept = &sorted[trim..sorted.len() - trim];
    let mean = kept.iter().sum::<f64>() / kept.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var)
}

fn oracle_uicm(img: &ImageF<f64>) -> f64 {
    let r = grid_channel(img, 0);
    let g = grid_channel(img, 1);
    let b = grid_channel(img, 2);
    let mut rg = Vec::new();
    let mut yb = Vec::new();
    for y in 0..r.len() {
        for x in 0..r[0].len() {
            rg.push(r[y][x] - g[y][x]);
            yb.push((r[y][x] + g[y][x]) / 2.0 - b[y][x]);
        }
    }
    let (mu_rg, var_rg) = oracle_trimmed(&rg);
    let (mu_yb, var_yb) = oracle_trimmed(&yb);
    -0.2868 * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt() + 0.1586 * (var_rg + var_yb).sqrt()
}

/// Straight-line sRGB → CIELab for the UCIQE oracle.
fn oracle_lab(r: f64, g: f64, b: f64) -> (f64, f64, f64) {
    let lin = |c: f64| {
        if c <= 0.04045 {
            c / 12.92
        } else {
            ((c + 0.055) / 1.055).powf(2.4)
        }
    };
    let (r, g, b) = (lin(r), lin(g), lin(b));
    let x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    let f = |t: f64| {
        let d = 6.0 / 29.0;
        if t > d * d * d {
            t.cbrt()
        } else {
            t / (3.0 * d * d) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x), f(y), f(z));
    (116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

fn oracle_uciqe(img: &ImageF<f64>) -> f64 {
    let mut lightness = Vec::new();
    let mut chroma = Vec::new();
    let mut saturation = Vec::new();
    for y in 0..img.height() {
        for x in 0..img.width() {
            let (l, a, b) = oracle_lab(img.get(y, x, 0), img.get(y, x, 1), img.get(y, x, 2));
            let c = (a * a + b * b).sqrt();
            lightness.push(l);
            chroma.push(c);
            saturation.push(c / (l + 1e-6));
        }
    }
    let n = chroma.len() as f64;
    let mean_c = chroma.iter().sum::<f64>() / n;
    let sigma_c =
        (chroma.iter().map(|c| (c - mean_c) * (c - mean_c)).sum::<f64>() / n).sqrt();
    lightness.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pct = |q: f64| {
        let rank = q * (lightness.len() - 1) as f64;
        let lo = rank.floor() as usize;
        let hi = rank.ceil() as usize;
        lightness[lo] + (lightness[hi] - lightness[lo]) * (rank - lo as f64)
    };
    let spread = pct(0.99) - pct(0.01);
    let mean_sat = saturation.iter().sum::<f64>() / n;
    0.4680 * sigma_c + 0.2745 * spread / 100.0 + 0.2576 * mean_sat
}

fn oracle_colourfulness(img: &ImageF<f64>) -> f64 {
    let r = grid_channel(img, 0);
    let g = grid_channel(img, 1);
    let b = grid_channel(img, 2);
    let mut rg = Vec::new();
    let mut yb = Vec::new();
    for y in 0..r.len() {
        for x in 0..r[0].len() {
            rg.push(r[y][x] - g[y][x]);
            yb.push((r[y][x] + g[y][x]) / 2.0 - b[y][x]);
        }
    }
    let stats = |v: &[f64]| {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / v.len() as f64;
        (mean, var)
    };
    let (mu_rg, var_rg) = stats(&rg);
    let (mu_yb, var_yb) = stats(&yb);
    (var_rg + var_yb).sqrt() + 0.3 * (mu_rg * mu_rg + mu_yb * mu_yb).sqrt()
}

fn oracle_iem_total(g: &Grid) -> f64 {
    let (h, w) = (g.len(), g[0].len());
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dy == 0 && dx == 0 {
                        continue;
                    }
                    let (ny, nx) = (y as i64 + dy, x as i64 + dx);
                    if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                        continue;
                    }
                    let (ny, nx) = (ny as usize, nx as usize);
                    // Only neighbours inside the same 8×8 tile count.
                    if ny / 8 == y / 8 && nx / 8 == x / 8 {
                        total += (g[y][x] - g[ny][nx]).abs();
                    }
                }
            }
        }
    }
    total
}

fn oracle_ag(g: &Grid) -> f64 {
    let (h, w) = (g.len(), g[0].len());
    let mut total = 0.0;
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let gx = g[y][x + 1] - g[y][x];
            let gy = g[y + 1][x] - g[y][x];
            total += ((gx * gx + gy * gy) / 2.0).sqrt();
        }
    }
    total / ((h - 1) * (w - 1)) as f64
}

fn oracle_pcqi(ga: &Grid, gb: &Grid) -> f64 {
    let (h, w) = (ga.len(), ga[0].len());
    let side = 11.min(h).min(w);
    let mut total = 0.0;
    let mut patches = 0;
    for y0 in 0..=h - side {
        for x0 in 0..=w - side {
            // Two-pass statistics for independence from the library's
            // one-pass accumulation.
            let n = (side * side) as f64;
            let mut mu1 = 0.0;
            let mut mu2 = 0.0;
            for dy in 0..side {
                for dx in 0..side {
                    mu1 += ga[y0 + dy][x0 + dx];
                    mu2 += gb[y0 + dy][x0 + dx];
                }
            }
            mu1 /= n;
            mu2 /= n;
            let (mut v1, mut v2, mut cov) = (0.0, 0.0, 0.0);
            for dy in 0..side {
                for dx in 0..side {
                    let da = ga[y0 + dy][x0 + dx] - mu1;
                    let db = gb[y0 + dy][x0 + dx] - mu2;
                    v1 += da * da;
                    v2 += db * db;
                    cov += da * db;
                }
            }
            v1 /= n;
            v2 /= n;
            cov /= n;
            let gain = 4.0 / std::f64::consts::PI * ((cov + 3.0) / (v1 + 3.0)).atan();
            let structure = (cov + 3.0) / (v1.sqrt() * v2.sqrt() + 3.0);
            let brightness = (-(mu1 - mu2).abs() / 256.0).exp();
            total += gain * structure * brightness;
            patches += 1;
        }
    }
    total / patches as f64
}

fn oracle_sseq(img: &ImageF<f64>) -> (f64, f64) {
    let gray = grid_gray(img);
    let (h, w) = (gray.len(), gray[0].len());
    let (rows, cols) = (h / 8, w / 8);
    if rows == 0 || cols == 0 {
        return (0.0, 0.0);
    }
    let basis = |u: usize, i: usize| {
        let a = if u == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
        a * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * u as f64 / 16.0).cos()
    };
    let mut spatial = 0.0;
    let mut spectral = 0.0;
    for by in 0..rows {
        for bx in 0..cols {
            let mut counts = [0usize; 256];
            for dy in 0..8 {
                for dx in 0..8 {
                    counts[gray[by * 8 + dy][bx * 8 + dx] as usize] += 1;
                }
            }
            spatial += counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / 64.0;
                    -p * p.log2()
                })
                .sum::<f64>();

            // Separable DCT-II: rows first, then columns — no mean removal,
            // the raw transform (AC dust is negligible on random content).
            let mut rows_dct = [[0.0f64; 8]; 8];
            for (i, row) in rows_dct.iter_mut().enumerate() {
                for (v, cell) in row.iter_mut().enumerate() {
                    *cell = (0..8)
                        .map(|j| gray[by * 8 + i][bx * 8 + j] * basis(v, j))
                        .sum();
                }
            }
            let mut energy = Vec::with_capacity(63);
            for u in 0..8 {
                for v in 0..8 {
                    if u == 0 && v == 0 {
                        continue;
                    }
                    let coeff: f64 = (0..8).map(|i| rows_dct[i][v] * basis(u, i)).sum();
                    energy.push(coeff * coeff);
                }
            }
            let ac: f64 = energy.iter().sum();
            if ac > 0.0 {
                spectral += energy
                    .iter()
                    .filter(|&&e| e > 0.0)
                    .map(|&e| {
                        let p = e / ac;
                        -p * p.log2()
                    })
                    .sum::<f64>();
            }
        }
    }
    let blocks = (rows * cols) as f64;
    (spatial / blocks, spectral / blocks)
}


// ---------------------------------------------------------------- drivers


pub fn check_full_reference_metrics_match_oracles() {
    for i in 0..IMAGES as u64 {
        let reference = random_image(1000 + i);
        let test = random_image(2000 + i);
        let tag = format!("image {i}");
        assert_close(m::mse(&reference, &test).unwrap(), oracle_mse(&reference, &test), &format!("mse {tag}"));
        assert_close(m::psnr(&reference, &test).unwrap(), oracle_psnr(&reference, &test), &format!("psnr {tag}"));
        assert_close(
            m::rmse(&reference, &test).unwrap(),
            oracle_mse(&reference, &test).sqrt(),
            &format!("rmse {tag}"),
        );
        assert_close(m::ssim(&reference, &test).unwrap(), oracle_ssim(&reference, &test), &format!("ssim {tag}"));
    }
}

pub fn check_auxiliary_full_reference_metrics_match_oracles() {
    for i in 0..IMAGES as u64 {
        let reference = random_image(3000 + i);
        let test = random_image(4000 + i);
        let aux = m::fr_auxiliary(&reference, &test).unwrap();
        let tag = format!("image {i}");

        let cm_ref = oracle_colourfulness(&reference);
        let cm_test = oracle_colourfulness(&test);
        assert_close(aux.cef, (cm_test + 1e-9) / (cm_ref + 1e-9), &format!("cef {tag}"));

        let gray_ref = grid_gray(&reference);
        let gray_test = grid_gray(&test);
        let mu_ref = grid_mean(&gray_ref);
        let mu_test = grid_mean(&gray_test);
        let sigma_test = grid_variance(&gray_test, mu_test).sqrt();
        let cnr = if sigma_test < 1e-6 { 0.0 } else { (mu_ref - mu_test) / sigma_test };
        assert_close(aux.cnr, cnr, &format!("cnr {tag}"));

        let iem =
            (oracle_iem_total(&gray_test) + 1e-9) / (oracle_iem_total(&gray_ref) + 1e-9);
        assert_close(aux.iem, iem, &format!("iem {tag}"));

        assert_close(aux.ambe, (mu_ref - mu_test).abs(), &format!("ambe {tag}"));
        assert_close(aux.ag_ref, oracle_ag(&gray_ref), &format!("ag_ref {tag}"));
        assert_close(aux.ag_test, oracle_ag(&gray_test), &format!("ag_test {tag}"));
        assert_close(aux.pcqi, oracle_pcqi(&gray_ref, &gray_test), &format!("pcqi {tag}"));
    }
}

pub fn check_no_reference_metrics_match_oracles() {
    for i in 0..IMAGES as u64 {
        let img = random_image(5000 + i);
        let tag = format!("image {i}");
        assert_close(m::entropy(&img), oracle_entropy(&img), &format!("entropy {tag}"));

        let gray = grid_gray(&img);
        let gray_plane = Plane::from_fn(SIDE, SIDE, |y, x| gray[y][x] / 255.0);
        assert_close(m::eme(&gray_plane), oracle_eme(&gray), &format!("eme {tag}"));
        assert_close(m::emee(&gray_plane, 0.2), oracle_emee(&gray, 0.2), &format!("emee {tag}"));

        assert_close(m::uism(&img).unwrap(), oracle_uism(&img), &format!("uism {tag}"));
        assert_close(m::uiconm(&img).unwrap(), oracle_uiconm(&img), &format!("uiconm {tag}"));
        assert_close(m::uicm(&img).unwrap(), oracle_uicm(&img), &format!("uicm {tag}"));
        let uiqm = 0.0282 * oracle_uicm(&img) + 0.2953 * oracle_uism(&img)
            + 3.5753 * oracle_uiconm(&img);
        assert_close(m::uiqm(&img).unwrap(), uiqm, &format!("uiqm {tag}"));
        assert_close(m::uciqe(&img).unwrap(), oracle_uciqe(&img), &format!("uciqe {tag}"));

        let features = m::sseq_features(&img);
        let (spatial, spectral) = oracle_sseq(&img);
        assert_close(features.spatial_entropy, spatial, &format!("spatial {tag}"));
        assert_close(features.spectral_entropy, spectral, &format!("spectral {tag}"));
    }
}

pub fn check_trivial_identities_hold_exactly() {
    for i in 0..5u64 {
        let img = random_image(6000 + i);
        assert_eq!(m::mse(&img, &img).unwrap(), 0.0);
        assert_eq!(m::psnr(&img, &img).unwrap(), 100.0);
        assert_eq!(m::rmse(&img, &img).unwrap(), 0.0);
        assert!((m::ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
        let h = m::entropy(&img);
        assert!((0.0..=8.0).contains(&h), "entropy {h}");
        let gray = ImageF::<f64>::from_fn(SIDE, SIDE, 3, |y, x, _| img.get(y, x, 0)).unwrap();
        assert_eq!(m::uicm(&gray).unwrap(), 0.0);
    }
    let flat = Plane::from_fn(SIDE, SIDE, |_, _| 0.37f64);
    assert_eq!(m::eme(&flat), 0.0);
}
