//! Feature-map and mask primitives.
//!
//! Feature maps are dense `C x H x W` grids stored row-major in `(c, h, w)`
//! order. A [`DirectionalFeatureMap`] additionally guarantees that every
//! spatial `C`-vector lies on the unit hypersphere (or is exactly zero, the
//! degenerate case for padded/dead locations).

use crate::error::{Error, Result};

/// Vectors with L2 norm below this are treated as zero during normalization.
pub const NORM_EPSILON: f64 = 1e-12;

/// A raw (unnormalized) `C x H x W` feature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RawFeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl RawFeatureMap {
    /// Builds a feature map from `(c, h, w)` row-major data.
    ///
    /// Panics if any dimension is zero or `data.len() != c * h * w`.
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Self {
        assert!(channels >= 1 && height >= 1 && width >= 1, "dimensions must be >= 1");
        assert_eq!(data.len(), channels * height * width, "data length mismatch");
        Self { channels, height, width, data }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn value(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[(c * self.height + h) * self.width + w]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// A feature grid whose spatial vectors are unit length (or exactly zero).
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalFeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl DirectionalFeatureMap {
    /// Wraps data that is already normalized, checking the unit-or-zero
    /// invariant at every location.
    ///
    /// Panics if the invariant does not hold within `1e-6`.
    pub fn from_unit_data(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Self {
        let raw = RawFeatureMap::new(channels, height, width, data);
        let map = Self {
            channels: raw.channels,
            height: raw.height,
            width: raw.width,
            data: raw.data,
        };
        for h in 0..map.height {
            for w in 0..map.width {
                let n = map.location_norm(h, w);
                assert!(
                    n == 0.0 || (n - 1.0).abs() < 1e-6,
                    "location ({h},{w}) has norm {n}, expected unit or zero"
                );
            }
        }
        map
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of spatial locations, `H * W`.
    pub fn locations(&self) -> usize {
        self.height * self.width
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn value(&self, c: usize, h: usize, w: usize) -> f64 {
        self.data[(c * self.height + h) * self.width + w]
    }

    /// Copies the `C`-vector at one spatial location.
    pub fn location_vector(&self, h: usize, w: usize) -> Vec<f64> {
        let stride = self.height * self.width;
        let base = h * self.width + w;
        (0..self.channels).map(|c| self.data[c * stride + base]).collect()
    }

    /// Copy of this map as a raw feature grid (e.g. for serialization).
    pub fn to_raw(&self) -> RawFeatureMap {
        RawFeatureMap::new(self.channels, self.height, self.width, self.data.clone())
    }

    /// L2 norm of the `C`-vector at one spatial location.
    pub fn location_norm(&self, h: usize, w: usize) -> f64 {
        let stride = self.height * self.width;
        let base = h * self.width + w;
        (0..self.channels)
            .map(|c| {
                let v = self.data[c * stride + base];
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Projects every spatial vector of a feature map onto the unit hypersphere.
///
/// Vectors with norm below [`NORM_EPSILON`] pass through as exact zeros; the
/// cosine of anything against them is 0, a neutral score.
pub fn l2_normalize(raw: &RawFeatureMap) -> Result<DirectionalFeatureMap> {
    if !raw.is_finite() {
        return Err(Error::NonFiniteFeature);
    }
    let (c, h, w) = (raw.channels, raw.height, raw.width);
    let stride = h * w;
    let mut data = raw.data.clone();
    for base in 0..stride {
        let norm = (0..c)
            .map(|ci| {
                let v = data[ci * stride + base];
                v * v
            })
            .sum::<f64>()
            .sqrt();
        if norm < NORM_EPSILON {
            for ci in 0..c {
                data[ci * stride + base] = 0.0;
            }
        } else {
            for ci in 0..c {
                data[ci * stride + base] /= norm;
            }
        }
    }
    Ok(DirectionalFeatureMap { channels: c, height: h, width: w, data })
}

/// An `H x W` grid of values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftMask {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SoftMask {
    /// Builds a mask from `(h, w)` row-major data.
    ///
    /// Panics if any dimension is zero, `data.len() != h * w`, or a value
    /// falls outside `[0, 1]`.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Self {
        assert!(height >= 1 && width >= 1, "dimensions must be >= 1");
        assert_eq!(data.len(), height * width, "data length mismatch");
        assert!(
            data.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)),
            "mask values must lie in [0, 1]"
        );
        Self { height, width, data }
    }

    /// Mask of constant value `v`.
    pub fn constant(height: usize, width: usize, v: f64) -> Self {
        Self::new(height, width, vec![v; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn value(&self, h: usize, w: usize) -> f64 {
        self.data[h * self.width + w]
    }

    /// Hard mask with foreground where `value >= threshold`.
    pub fn binarize(&self, threshold: f64) -> BinaryMask {
        BinaryMask {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| v >= threshold).collect(),
        }
    }

    /// Integer-factor nearest-neighbor upscaling, intended for visualization.
    pub fn upscale_nearest(&self, factor: usize) -> SoftMask {
        assert!(factor >= 1, "factor must be >= 1");
        let (oh, ow) = (self.height * factor, self.width * factor);
        let mut data = vec![0.0; oh * ow];
        for h in 0..oh {
            for w in 0..ow {
                data[h * ow + w] = self.value(h / factor, w / factor);
            }
        }
        SoftMask { height: oh, width: ow, data }
    }
}

/// An `H x W` binary mask, the argument type for the overlap metrics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Self {
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

    pub fn get(&self, h: usize, w: usize) -> bool {
        self.data[h * self.width + w]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Soft view with foreground 1.0 and background 0.0.
    pub fn to_soft(&self) -> SoftMask {
        SoftMask {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

/// Reduces a full-resolution mask to the feature grid by area averaging.
///
/// Each output cell is the arithmetic mean of its source block, so hard input
/// masks become soft at object borders. The source dimensions must be integer
/// multiples of the target dimensions.
pub fn resize_mask(mask: &SoftMask, target_h: usize, target_w: usize) -> Result<SoftMask> {
    assert!(target_h >= 1 && target_w >= 1, "target dimensions must be >= 1");
    if !mask.height.is_multiple_of(target_h) || !mask.width.is_multiple_of(target_w) {
        return Err(Error::IncompatibleGrid {
            full_h: mask.height,
            full_w: mask.width,
            target_h,
            target_w,
        });
    }
    let (bh, bw) = (mask.height / target_h, mask.width / target_w);
    let block = (bh * bw) as f64;
    let mut data = vec![0.0; target_h * target_w];
    for th in 0..target_h {
        for tw in 0..target_w {
            let mut sum = 0.0;
            for dh in 0..bh {
                for dw in 0..bw {
                    sum += mask.value(th * bh + dh, tw * bw + dw);
                }
            }
            // Clamp away accumulation dust so the [0, 1] invariant is exact.
            data[th * target_w + tw] = (sum / block).clamp(0.0, 1.0);
        }
    }
    Ok(SoftMask { height: target_h, width: target_w, data })
}
