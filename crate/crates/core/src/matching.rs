//! Global directional matching against the labeled first frame.
//!
//! The first frame's unit features are weighted by the (target or background)
//! mask and stacked as rows of a [`KernelBank`]. Matching a new frame is then
//! one dense contraction `S[k, l] = sum_c K[k, c] * F[c, l]` followed by a
//! max over the kernel axis, which is exactly the best mask-weighted cosine
//! against every first-frame position. A looped pairwise oracle
//! ([`brute_force_match_oracle`]) states the same computation directly and is
//! the reference the contraction path is tested against.

use crate::directional::{DirectionalFeatureMap, SoftMask};
use crate::error::{Error, Result};

/// Mask-weighted first-frame features, one row per source position.
///
/// Row `k = h * W + w` holds `weight(h, w) * F0(:, h, w)`, so every row is a
/// nonnegative multiple of a unit vector and has norm at most 1.
#[derive(Debug, Clone)]
pub struct KernelBank {
    rows: usize,
    channels: usize,
    data: Vec<f64>,
}

impl KernelBank {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.channels..(k + 1) * self.channels]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Per-kernel cosine scores for every pixel of a frame, `HW x H x W`.
#[derive(Debug, Clone)]
pub struct SimilarityVolume {
    kernels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SimilarityVolume {
    pub fn kernels(&self) -> usize {
        self.kernels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self, k: usize, h: usize, w: usize) -> f64 {
        self.data[(k * self.height + h) * self.width + w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A single `H x W` matching score map (raw cosine scores, not probabilities).
#[derive(Debug, Clone, PartialEq)]
pub struct CueMap {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl CueMap {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Self {
        assert!(height >= 1 && width >= 1, "dimensions must be >= 1");
        assert_eq!(data.len(), height * width, "data length mismatch");
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self, h: usize, w: usize) -> f64 {
        self.data[h * self.width + w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Builds the target and background kernel banks from the first frame.
///
/// `Kt` rows are `M0(h, w) * F0(:, h, w)`, `Kb` rows use `1 - M0`. Zero-weight
/// rows are kept so the kernel count stays `HW` and the max over kernels is
/// floored at 0 whenever any weight vanishes.
pub fn build_kernel_banks(
    features: &DirectionalFeatureMap,
    mask: &SoftMask,
) -> Result<(KernelBank, KernelBank)> {
    if features.height() != mask.height() || features.width() != mask.width() {
        return Err(Error::ShapeMismatch {
            expected_h: features.height(),
            expected_w: features.width(),
            got_h: mask.height(),
            got_w: mask.width(),
        });
    }
    let (c, h, w) = (features.channels(), features.height(), features.width());
    let locations = h * w;
    let mut target = vec![0.0; locations * c];
    let mut background = vec![0.0; locations * c];
    let feat = features.as_slice();
    for k in 0..locations {
        let m = mask.as_slice()[k];
        for ci in 0..c {
            let f = feat[ci * locations + k];
            target[k * c + ci] = m * f;
            background[k * c + ci] = (1.0 - m) * f;
        }
    }
    Ok((
        KernelBank { rows: locations, channels: c, data: target },
        KernelBank { rows: locations, channels: c, data: background },
    ))
}

/// Contracts a frame against a kernel bank: `S[k, l] = sum_c K[k, c] * F[c, l]`.
///
/// Runs as one dense matrix product over the channel axis; the result is
/// identical (within accumulation order) to the direct triple-loop sum.
pub fn contract_similarity(
    features: &DirectionalFeatureMap,
    bank: &KernelBank,
) -> Result<SimilarityVolume> {
    contract_into_volume(features, bank, None)
}

/// Same contraction split across `threads` row blocks of the kernel bank.
///
/// Each block is an independent matrix product into a disjoint slice of the
/// output, so the result is identical to [`contract_similarity`].
pub fn contract_similarity_parallel(
    features: &DirectionalFeatureMap,
    bank: &KernelBank,
    threads: usize,
) -> Result<SimilarityVolume> {
    contract_into_volume(features, bank, Some(threads.max(1)))
}

fn contract_into_volume(
    features: &DirectionalFeatureMap,
    bank: &KernelBank,
    threads: Option<usize>,
) -> Result<SimilarityVolume> {
    if features.channels() != bank.channels() {
        return Err(Error::ChannelMismatch {
            expected: bank.channels(),
            got: features.channels(),
        });
    }
    let c = bank.channels();
    let rows = bank.rows();
    let locations = features.locations();
    let mut out = vec![0.0; rows * locations];
    match threads {
        None | Some(1) => {
            gemm_block(bank.as_slice(), features.as_slice(), &mut out, rows, c, locations);
        }
        Some(t) => {
            let chunk_rows = rows.div_ceil(t);
            std::thread::scope(|scope| {
                for (i, out_chunk) in out.chunks_mut(chunk_rows * locations).enumerate() {
                    let m = out_chunk.len() / locations;
                    let a = &bank.as_slice()[i * chunk_rows * c..i * chunk_rows * c + m * c];
                    let b = features.as_slice();
                    scope.spawn(move || gemm_block(a, b, out_chunk, m, c, locations));
                }
            });
        }
    }
    Ok(SimilarityVolume {
        kernels: rows,
        height: features.height(),
        width: features.width(),
        data: out,
    })
}

// C = A (m x k, row-major) * B (k x n, row-major), overwriting C (m x n).
fn gemm_block(a: &[f64], b: &[f64], c_out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c_out.len(), m * n);
    // SAFETY: slice lengths are checked above; strides describe dense
    // row-major layout within those bounds.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c_out.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Collapses a similarity volume to its per-pixel maximum over kernels.
pub fn reduce_channel_max(volume: &SimilarityVolume) -> CueMap {
    let locations = volume.height * volume.width;
    let mut out = volume.data[..locations].to_vec();
    for k in 1..volume.kernels {
        let slice = &volume.data[k * locations..(k + 1) * locations];
        for (o, &s) in out.iter_mut().zip(slice) {
            if s > *o {
                *o = s;
            }
        }
    }
    CueMap { height: volume.height, width: volume.width, data: out }
}

/// Full matching pass: banks from the first frame, contraction, channel max.
///
/// Returns the raw target and background score maps; no softmax is applied.
pub fn global_directional_match(
    first_features: &DirectionalFeatureMap,
    first_mask: &SoftMask,
    features: &DirectionalFeatureMap,
) -> Result<(CueMap, CueMap)> {
    let (target_bank, background_bank) = build_kernel_banks(first_features, first_mask)?;
    let st = reduce_channel_max(&contract_similarity(features, &target_bank)?);
    let sb = reduce_channel_max(&contract_similarity(features, &background_bank)?);
    Ok((st, sb))
}

/// Pairwise looped reference for [`global_directional_match`].
///
/// For every pixel, scans all first-frame positions and keeps the best
/// mask-weighted dot product. Shares the per-pair dot between the target and
/// background maxima; no blocking, no matrix product.
pub fn brute_force_match_oracle(
    first_features: &DirectionalFeatureMap,
    first_mask: &SoftMask,
    features: &DirectionalFeatureMap,
) -> Result<(CueMap, CueMap)> {
    if first_features.height() != first_mask.height()
        || first_features.width() != first_mask.width()
    {
        return Err(Error::ShapeMismatch {
            expected_h: first_features.height(),
            expected_w: first_features.width(),
            got_h: first_mask.height(),
            got_w: first_mask.width(),
        });
    }
    if first_features.channels() != features.channels() {
        return Err(Error::ChannelMismatch {
            expected: first_features.channels(),
            got: features.channels(),
        });
    }
    let c = features.channels();
    let sources = first_features.locations();
    let targets = features.locations();
    let f = features.as_slice();
    let f0 = first_features.as_slice();
    let m0 = first_mask.as_slice();
    let mut st = vec![f64::NEG_INFINITY; targets];
    let mut sb = vec![f64::NEG_INFINITY; targets];
    for l in 0..targets {
        let mut best_t = f64::NEG_INFINITY;
        let mut best_b = f64::NEG_INFINITY;
        for q in 0..sources {
            let mut dot = 0.0;
            for ci in 0..c {
                dot += f[ci * targets + l] * f0[ci * sources + q];
            }
            let t = m0[q] * dot;
            let b = (1.0 - m0[q]) * dot;
            if t > best_t {
                best_t = t;
            }
            if b > best_b {
                best_b = b;
            }
        }
        st[l] = best_t;
        sb[l] = best_b;
    }
    Ok((
        CueMap { height: features.height(), width: features.width(), data: st },
        CueMap { height: features.height(), width: features.width(), data: sb },
    ))
}

/// Per-pixel two-way softmax of the target score against the background
/// score, for visualizing match scores as probabilities.
pub fn match_probability(st: &CueMap, sb: &CueMap) -> SoftMask {
    assert_eq!(st.height, sb.height, "cue map heights differ");
    assert_eq!(st.width, sb.width, "cue map widths differ");
    let data = st
        .data
        .iter()
        .zip(&sb.data)
        .map(|(&t, &b)| {
            let m = t.max(b);
            let et = (t - m).exp();
            let eb = (b - m).exp();
            et / (et + eb)
        })
        .collect();
    SoftMask::new(st.height, st.width, data)
}
