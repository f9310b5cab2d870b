//! Directional appearance model: a four-component von Mises-Fisher mixture
//! over unit feature vectors, updated online from predicted masks.
//!
//! Components 0 and 1 are the base background/foreground pair; components 2
//! and 3 are a supplementary pair fit to the residual mass the base pair
//! misclassifies. All components share one concentration `kappa`, so
//! posteriors reduce to a softmax over `kappa * dot(mu_k, r)` and the vMF
//! normalization constant never needs to be evaluated.

use crate::directional::{DirectionalFeatureMap, SoftMask};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Background base component index.
pub const BACKGROUND_BASE: usize = 0;
/// Foreground base component index.
pub const FOREGROUND_BASE: usize = 1;
/// Background supplementary component index.
pub const BACKGROUND_SUPP: usize = 2;
/// Foreground supplementary component index.
pub const FOREGROUND_SUPP: usize = 3;

/// Number of mixture components.
pub const COMPONENTS: usize = 4;

/// Sums below this are treated as a degenerate (unsupported) mean estimate.
pub const DEGENERATE_EPSILON: f64 = 1e-9;

/// Four unit mean directions plus the shared concentration and the online
/// learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AppearanceModel {
    mu: [Vec<f64>; COMPONENTS],
    kappa: f64,
    lambda: f64,
}

impl AppearanceModel {
    /// Assembles a model from explicit unit mean directions.
    ///
    /// Panics unless all means share a dimension and are unit length within
    /// `1e-6`, `kappa > 0`, and `lambda` lies in `[0, 1]`.
    pub fn from_means(mu: [Vec<f64>; COMPONENTS], kappa: f64, lambda: f64) -> Self {
        assert!(kappa > 0.0 && kappa.is_finite(), "kappa must be positive");
        assert!((0.0..=1.0).contains(&lambda), "lambda must lie in [0, 1]");
        let dim = mu[0].len();
        for (k, m) in mu.iter().enumerate() {
            assert_eq!(m.len(), dim, "component {k} dimension mismatch");
            let norm = m.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6, "component {k} norm {norm} is not unit");
        }
        Self { mu, kappa, lambda }
    }

    pub fn channels(&self) -> usize {
        self.mu[0].len()
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        &self.mu[k]
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Per-pixel scores `s_{l,k} = kappa * dot(mu_k, r_l)`, `H x W x 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ScoreField {
    /// Builds a score field from four `H x W` component planes.
    pub fn from_planes(height: usize, width: usize, planes: [&[f64]; COMPONENTS]) -> Self {
        let locations = height * width;
        for p in &planes {
            assert_eq!(p.len(), locations, "plane length mismatch");
        }
        let mut data = vec![0.0; locations * COMPONENTS];
        for (k, p) in planes.iter().enumerate() {
            for (l, &v) in p.iter().enumerate() {
                data[l * COMPONENTS + k] = v;
            }
        }
        Self { height, width, data }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self, h: usize, w: usize, k: usize) -> f64 {
        self.data[(h * self.width + w) * COMPONENTS + k]
    }

    /// Flat `(h, w, k)` row-major data, `k` fastest.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Copies one component's `H x W` plane.
    pub fn component_plane(&self, k: usize) -> Vec<f64> {
        assert!(k < COMPONENTS);
        (0..self.height * self.width).map(|l| self.data[l * COMPONENTS + k]).collect()
    }
}

/// Per-pixel soft assignments `alpha_{l,k}`, `H x W x 4`.
///
/// The base pair always sums to 1 per pixel; the supplementary values are the
/// clamped residuals and never exceed their paired base value.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftLabelField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl SoftLabelField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self, h: usize, w: usize, k: usize) -> f64 {
        self.data[(h * self.width + w) * COMPONENTS + k]
    }

    /// Copies one component's weights as a flat `H * W` vector.
    pub fn component_weights(&self, k: usize) -> Vec<f64> {
        assert!(k < COMPONENTS);
        (0..self.height * self.width).map(|l| self.data[l * COMPONENTS + k]).collect()
    }
}

/// Posterior probabilities over an explicit component subset, `H x W x |subset|`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorField {
    height: usize,
    width: usize,
    components: Vec<usize>,
    data: Vec<f64>,
}

impl PosteriorField {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// The component subset these posteriors were computed over.
    pub fn components(&self) -> &[usize] {
        &self.components
    }

    /// Posterior of `components()[j]` at `(h, w)`.
    pub fn value(&self, h: usize, w: usize, j: usize) -> f64 {
        self.data[(h * self.width + w) * self.components.len() + j]
    }
}

/// Maximum-likelihood mean direction: the normalized weighted sum of unit
/// vectors. Returns `None` (degenerate) when the weighted sum has norm below
/// [`DEGENERATE_EPSILON`].
pub fn estimate_mean_direction(
    features: &DirectionalFeatureMap,
    weights: &[f64],
) -> Option<Vec<f64>> {
    let locations = features.locations();
    assert_eq!(weights.len(), locations, "weights length mismatch");
    let c = features.channels();
    let data = features.as_slice();
    let mut sum = vec![0.0; c];
    for (ci, s) in sum.iter_mut().enumerate() {
        let plane = &data[ci * locations..(ci + 1) * locations];
        *s = plane.iter().zip(weights).map(|(f, w)| f * w).sum();
    }
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_EPSILON {
        None
    } else {
        Some(sum.into_iter().map(|v| v / norm).collect())
    }
}

/// Initializes the four-component model from the first frame.
///
/// The given mask is binarized at 0.5 into hard base labels, the base means
/// are estimated by MLE, base posteriors are evaluated, and the supplementary
/// means are fit to the clamped residuals. A degenerate supplementary
/// estimate falls back to its paired base mean.
pub fn init_from_first_frame(
    features: &DirectionalFeatureMap,
    mask: &SoftMask,
    kappa: f64,
    lambda: f64,
) -> Result<AppearanceModel> {
    assert_eq!(features.height(), mask.height(), "mask height mismatch");
    assert_eq!(features.width(), mask.width(), "mask width mismatch");
    let hard = mask.binarize(0.5).to_soft();
    let labels = base_soft_labels(&hard);

    let mu1 = estimate_mean_direction(features, &labels.component_weights(FOREGROUND_BASE));
    let mu0 = estimate_mean_direction(features, &labels.component_weights(BACKGROUND_BASE));
    let (mu0, mu1) = match (mu0, mu1) {
        (Some(b), Some(f)) => (b, f),
        _ => return Err(Error::MaskSingleClass),
    };

    // Interim model so base posteriors can be evaluated; the supplementary
    // slots are placeholders that the {0, 1} subset never reads.
    let interim =
        AppearanceModel::from_means([mu0.clone(), mu1.clone(), mu0.clone(), mu1.clone()], kappa, lambda);
    let scores = component_scores(features, &interim);
    let base_post = component_posteriors(&scores, &[BACKGROUND_BASE, FOREGROUND_BASE]);
    let labels = supplementary_soft_labels(&labels, &base_post);

    let mu2 = estimate_mean_direction(features, &labels.component_weights(BACKGROUND_SUPP))
        .unwrap_or_else(|| mu0.clone());
    let mu3 = estimate_mean_direction(features, &labels.component_weights(FOREGROUND_SUPP))
        .unwrap_or_else(|| mu1.clone());
    Ok(AppearanceModel::from_means([mu0, mu1, mu2, mu3], kappa, lambda))
}

/// Inference: `s_{l,k} = kappa * dot(mu_k, r_l)` for all four components.
///
/// These raw scores are the appearance cues fed to fusion.
pub fn component_scores(features: &DirectionalFeatureMap, model: &AppearanceModel) -> ScoreField {
    assert_eq!(features.channels(), model.channels(), "channel mismatch");
    let locations = features.locations();
    let c = features.channels();
    let data = features.as_slice();
    let mut out = vec![0.0; locations * COMPONENTS];
    for k in 0..COMPONENTS {
        let mu = model.mean(k);
        for ci in 0..c {
            let m = mu[ci] * model.kappa;
            let plane = &data[ci * locations..(ci + 1) * locations];
            for (l, f) in plane.iter().enumerate() {
                out[l * COMPONENTS + k] += m * f;
            }
        }
    }
    ScoreField { height: features.height(), width: features.width(), data: out }
}

/// Softmax of the scores over a component subset at every pixel,
/// max-subtracted for stability.
pub fn component_posteriors(scores: &ScoreField, subset: &[usize]) -> PosteriorField {
    assert!(!subset.is_empty(), "subset must be nonempty");
    assert!(subset.iter().all(|&k| k < COMPONENTS), "component index out of range");
    let locations = scores.height * scores.width;
    let n = subset.len();
    let mut data = vec![0.0; locations * n];
    for l in 0..locations {
        let row = &scores.data[l * COMPONENTS..(l + 1) * COMPONENTS];
        let m = subset.iter().map(|&k| row[k]).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (j, &k) in subset.iter().enumerate() {
            let e = (row[k] - m).exp();
            data[l * n + j] = e;
            total += e;
        }
        for v in &mut data[l * n..(l + 1) * n] {
            *v /= total;
        }
    }
    PosteriorField {
        height: scores.height,
        width: scores.width,
        components: subset.to_vec(),
        data,
    }
}

/// Base soft labels from a predicted foreground probability:
/// `alpha_1 = y`, `alpha_0 = 1 - y`. Supplementary slots start at zero.
pub fn base_soft_labels(predicted: &SoftMask) -> SoftLabelField {
    let locations = predicted.height() * predicted.width();
    let mut data = vec![0.0; locations * COMPONENTS];
    for (l, &y) in predicted.as_slice().iter().enumerate() {
        data[l * COMPONENTS + BACKGROUND_BASE] = 1.0 - y;
        data[l * COMPONENTS + FOREGROUND_BASE] = y;
    }
    SoftLabelField { height: predicted.height(), width: predicted.width(), data }
}

/// Supplementary soft labels: the nonnegative residual between each base
/// label and the base posterior, `alpha_{2,3} = max(0, alpha_{0,1} - p_{0,1})`.
///
/// The posteriors must have been computed over exactly the base pair.
pub fn supplementary_soft_labels(
    labels: &SoftLabelField,
    base_posteriors: &PosteriorField,
) -> SoftLabelField {
    assert_eq!(
        base_posteriors.components(),
        &[BACKGROUND_BASE, FOREGROUND_BASE],
        "posteriors must cover exactly the base pair"
    );
    assert_eq!(labels.height, base_posteriors.height, "height mismatch");
    assert_eq!(labels.width, base_posteriors.width, "width mismatch");
    let locations = labels.height * labels.width;
    let mut data = labels.data.clone();
    for l in 0..locations {
        let a0 = data[l * COMPONENTS + BACKGROUND_BASE];
        let a1 = data[l * COMPONENTS + FOREGROUND_BASE];
        let p0 = base_posteriors.data[l * 2];
        let p1 = base_posteriors.data[l * 2 + 1];
        data[l * COMPONENTS + BACKGROUND_SUPP] = (a0 - p0).max(0.0);
        data[l * COMPONENTS + FOREGROUND_SUPP] = (a1 - p1).max(0.0);
    }
    SoftLabelField { height: labels.height, width: labels.width, data }
}

// EMA step between the previous mean and a fresh per-frame estimate, then
// back onto the sphere. The lambda endpoints are exact: 0 keeps the previous
// bits, 1 returns the (already unit) estimate. Degenerate estimates (and the
// pathological case of a blend cancelling to zero) freeze the component.
fn blend_mean(previous: &[f64], estimate: Option<Vec<f64>>, lambda: f64) -> Vec<f64> {
    let Some(estimate) = estimate else {
        return previous.to_vec();
    };
    if lambda == 0.0 {
        return previous.to_vec();
    }
    if lambda == 1.0 {
        return estimate;
    }
    let blended: Vec<f64> = previous
        .iter()
        .zip(&estimate)
        .map(|(p, e)| (1.0 - lambda) * p + lambda * e)
        .collect();
    let norm = blended.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < DEGENERATE_EPSILON {
        previous.to_vec()
    } else {
        blended.into_iter().map(|v| v / norm).collect()
    }
}

/// One online update from frame `i`'s features and predicted mask.
///
/// Order matters: base labels, base means, base posteriors with the updated
/// base means, supplementary labels, supplementary means. Returns the new
/// model; the input is untouched.
pub fn update_model(
    model: &AppearanceModel,
    features: &DirectionalFeatureMap,
    predicted: &SoftMask,
) -> AppearanceModel {
    assert_eq!(features.height(), predicted.height(), "mask height mismatch");
    assert_eq!(features.width(), predicted.width(), "mask width mismatch");
    assert_eq!(features.channels(), model.channels(), "channel mismatch");
    let lambda = model.lambda;
    let labels = base_soft_labels(predicted);

    let mu0 = blend_mean(
        model.mean(BACKGROUND_BASE),
        estimate_mean_direction(features, &labels.component_weights(BACKGROUND_BASE)),
        lambda,
    );
    let mu1 = blend_mean(
        model.mean(FOREGROUND_BASE),
        estimate_mean_direction(features, &labels.component_weights(FOREGROUND_BASE)),
        lambda,
    );

    let interim = AppearanceModel::from_means(
        [mu0.clone(), mu1.clone(), model.mean(BACKGROUND_SUPP).to_vec(), model.mean(FOREGROUND_SUPP).to_vec()],
        model.kappa,
        lambda,
    );
    let scores = component_scores(features, &interim);
    let base_post = component_posteriors(&scores, &[BACKGROUND_BASE, FOREGROUND_BASE]);
    let labels = supplementary_soft_labels(&labels, &base_post);

    let mu2 = blend_mean(
        model.mean(BACKGROUND_SUPP),
        estimate_mean_direction(features, &labels.component_weights(BACKGROUND_SUPP)),
        lambda,
    );
    let mu3 = blend_mean(
        model.mean(FOREGROUND_SUPP),
        estimate_mean_direction(features, &labels.component_weights(FOREGROUND_SUPP)),
        lambda,
    );
    AppearanceModel::from_means([mu0, mu1, mu2, mu3], model.kappa, lambda)
}

/// Rejection sampler for the von Mises-Fisher distribution (Wood's scheme).
///
/// Per sample the generator is consumed in a fixed order: repeat
/// `(beta_symmetric((p-1)/2), uniform_open)` until the acceptance test
/// passes, then `p - 1` normals for the tangent direction. The tangent
/// sample is mapped from the north pole onto `mu` by a Householder
/// reflection, so sampling is deterministic given the generator state.
#[derive(Debug, Clone)]
pub struct VmfSampler {
    dim: usize,
    kappa: f64,
    envelope_b: f64,
    envelope_x0: f64,
    envelope_c: f64,
    beta_shape: f64,
    // Householder vector mapping e1 onto mu; None when mu == e1.
    householder: Option<Vec<f64>>,
}

impl VmfSampler {
    pub fn new(mu: &[f64], kappa: f64) -> Self {
        let p = mu.len();
        assert!(p >= 2, "dimension must be >= 2");
        assert!(kappa > 0.0 && kappa.is_finite(), "kappa must be positive");
        let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6, "mu must be unit length");

        let pm1 = (p - 1) as f64;
        // Algebraically equal to (-2k + sqrt(4k^2 + (p-1)^2)) / (p-1) but
        // stable for large kappa.
        let b = pm1 / (2.0 * kappa + (4.0 * kappa * kappa + pm1 * pm1).sqrt());
        let x0 = (1.0 - b) / (1.0 + b);
        let c = kappa * x0 + pm1 * (1.0 - x0 * x0).ln();

        let mut house = mu.to_vec();
        house[0] -= 1.0;
        let house_norm = house.iter().map(|v| v * v).sum::<f64>().sqrt();
        let householder = if house_norm > 1e-12 {
            Some(house.into_iter().map(|v| v / house_norm).collect())
        } else {
            None
        };
        Self {
            dim: p,
            kappa,
            envelope_b: b,
            envelope_x0: x0,
            envelope_c: c,
            beta_shape: pm1 / 2.0,
            householder,
        }
    }

    /// Draws one unit vector.
    pub fn sample(&self, rng: &mut SplitMix64) -> Vec<f64> {
        let pm1 = (self.dim - 1) as f64;
        let w = loop {
            let z = rng.beta_symmetric(self.beta_shape);
            let u = rng.uniform_open();
            let w = (1.0 - (1.0 + self.envelope_b) * z) / (1.0 - (1.0 - self.envelope_b) * z);
            if self.kappa * w + pm1 * (1.0 - self.envelope_x0 * w).ln() - self.envelope_c
                >= u.ln()
            {
                break w.clamp(-1.0, 1.0);
            }
        };
        let tangent = rng.unit_vector(self.dim - 1);
        let scale = (1.0 - w * w).max(0.0).sqrt();
        let mut x = Vec::with_capacity(self.dim);
        x.push(w);
        x.extend(tangent.into_iter().map(|t| t * scale));
        if let Some(house) = &self.householder {
            let proj: f64 = house.iter().zip(&x).map(|(u, v)| u * v).sum();
            for (xi, ui) in x.iter_mut().zip(house) {
                *xi -= 2.0 * proj * ui;
            }
        }
        // Rounding guard: keep the sample exactly unit for downstream checks.
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        for xi in &mut x {
            *xi /= norm;
        }
        x
    }
}

/// Draws `n` unit vectors from vMF(`mu`, `kappa`), deterministic in `seed`.
pub fn sample_vmf(mu: &[f64], kappa: f64, n: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(n >= 1, "n must be >= 1");
    let sampler = VmfSampler::new(mu, kappa);
    let mut rng = SplitMix64::new(seed);
    (0..n).map(|_| sampler.sample(&mut rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::directional::DirectionalFeatureMap;

    fn map_from_locations(c: usize, h: usize, w: usize, vecs: &[Vec<f64>]) -> DirectionalFeatureMap {
        assert_eq!(vecs.len(), h * w);
        let locations = h * w;
        let mut data = vec![0.0; c * locations];
        for (l, v) in vecs.iter().enumerate() {
            for ci in 0..c {
                data[ci * locations + l] = v[ci];
            }
        }
        DirectionalFeatureMap::from_unit_data(c, h, w, data)
    }

    fn angle_deg(a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        dot.clamp(-1.0, 1.0).acos().to_degrees()
    }

    #[test]
    fn mean_of_identical_features() {
        let u = vec![0.6, 0.8];
        let f = map_from_locations(2, 2, 2, &[u.clone(), u.clone(), u.clone(), u.clone()]);
        let mu = estimate_mean_direction(&f, &[1.0; 4]).unwrap();
        assert!((mu[0] - 0.6).abs() < 1e-12);
        assert!((mu[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn antipodal_features_degenerate() {
        let f = map_from_locations(2, 1, 2, &[vec![1.0, 0.0], vec![-1.0, 0.0]]);
        assert!(estimate_mean_direction(&f, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn weighted_mean_hand_case() {
        // weights 0.5, 1.0, 0.25 over (1,0), (0,1), (-1,0):
        // sum = (0.25, 1.0), norm = sqrt(1.0625)
        let f = map_from_locations(2, 1, 3, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]]);
        let mu = estimate_mean_direction(&f, &[0.5, 1.0, 0.25]).unwrap();
        assert!((mu[0] - 0.24253562503633297).abs() < 1e-6);
        assert!((mu[1] - 0.9701425001453319).abs() < 1e-6);
    }

    #[test]
    fn init_single_foreground_pixel() {
        let f = map_from_locations(
            2,
            2,
            2,
            &[vec![0.6, 0.8], vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let mask = SoftMask::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]);
        let model = init_from_first_frame(&f, &mask, 30.0, 0.1).unwrap();
        assert!((model.mean(FOREGROUND_BASE)[0] - 0.6).abs() < 1e-12);
        assert!((model.mean(FOREGROUND_BASE)[1] - 0.8).abs() < 1e-12);
        for k in 0..COMPONENTS {
            let norm: f64 = model.mean(k).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn init_rejects_single_class_mask() {
        let f = map_from_locations(2, 1, 2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let err = init_from_first_frame(&f, &SoftMask::constant(1, 2, 1.0), 30.0, 0.1).unwrap_err();
        assert_eq!(err.to_string(), "first-frame mask must contain both classes");
    }

    #[test]
    fn init_matches_scalar_walkthrough() {
        // 2x2 grid, 2-D features, kappa small enough that posteriors are not
        // saturated. Expected values follow the update order directly with
        // scalar arithmetic.
        let vecs = [
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![0.6, 0.8],
        ];
        let f = map_from_locations(2, 2, 2, &vecs);
        let mask = SoftMask::new(2, 2, vec![1.0, 1.0, 0.0, 0.0]);
        let kappa = 3.0;
        let model = init_from_first_frame(&f, &mask, kappa, 0.5).unwrap();

        // Scalar oracle.
        let alpha1 = [1.0, 1.0, 0.0, 0.0];
        let alpha0 = [0.0, 0.0, 1.0, 1.0];
        let normalize = |v: [f64; 2]| {
            let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
            [v[0] / n, v[1] / n]
        };
        let weighted_sum = |alpha: &[f64; 4]| {
            let mut s = [0.0, 0.0];
            for (a, v) in alpha.iter().zip(&vecs) {
                s[0] += a * v[0];
                s[1] += a * v[1];
            }
            s
        };
        let mu1 = normalize(weighted_sum(&alpha1));
        let mu0 = normalize(weighted_sum(&alpha0));
        let mut alpha2 = [0.0; 4];
        let mut alpha3 = [0.0; 4];
        for l in 0..4 {
            let s0 = kappa * (mu0[0] * vecs[l][0] + mu0[1] * vecs[l][1]);
            let s1 = kappa * (mu1[0] * vecs[l][0] + mu1[1] * vecs[l][1]);
            let m = s0.max(s1);
            let p0 = (s0 - m).exp() / ((s0 - m).exp() + (s1 - m).exp());
            let p1 = 1.0 - p0;
            alpha2[l] = (alpha0[l] - p0).max(0.0);
            alpha3[l] = (alpha1[l] - p1).max(0.0);
        }
        let mu2 = normalize(weighted_sum(&alpha2));
        let mu3 = normalize(weighted_sum(&alpha3));

        for (k, expected) in [(0, mu0), (1, mu1), (2, mu2), (3, mu3)] {
            for (c, (got, want)) in model.mean(k).iter().zip(&expected).enumerate() {
                assert!(
                    (got - want).abs() < 1e-6,
                    "component {k} channel {c}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn scores_basic_values() {
        let mu = vec![1.0, 0.0];
        let model = AppearanceModel::from_means(
            [mu.clone(), vec![0.0, 1.0], mu.clone(), mu.clone()],
            30.0,
            0.1,
        );
        let f = map_from_locations(2, 1, 2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let scores = component_scores(&f, &model);
        // r equals the component mean: kappa itself.
        assert!((scores.value(0, 0, 0) - 30.0).abs() < 1e-9);
        // orthogonal: zero.
        assert!(scores.value(0, 1, 0).abs() < 1e-9);

        let model = AppearanceModel::from_means(
            [mu.clone(), vec![0.0, 1.0], mu.clone(), mu.clone()],
            1.0,
            0.1,
        );
        let f = map_from_locations(2, 1, 1, &[vec![0.6, 0.8]]);
        let scores = component_scores(&f, &model);
        assert!((scores.value(0, 0, 0) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn score_magnitude_bounded_by_kappa() {
        let mut rng = SplitMix64::new(20);
        let mus: [Vec<f64>; 4] = std::array::from_fn(|_| rng.unit_vector(8));
        let model = AppearanceModel::from_means(mus, 17.5, 0.2);
        let vecs: Vec<Vec<f64>> = (0..12).map(|_| rng.unit_vector(8)).collect();
        let f = map_from_locations(8, 3, 4, &vecs);
        let scores = component_scores(&f, &model);
        assert!(scores.as_slice().iter().all(|&s| s.abs() <= 17.5 + 1e-9));
    }

    #[test]
    fn posteriors_uniform_and_gap() {
        let field = ScoreField { height: 1, width: 1, data: vec![2.0, 2.0, 2.0, 2.0] };
        let p = component_posteriors(&field, &[0, 1, 2, 3]);
        for j in 0..4 {
            assert!((p.value(0, 0, j) - 0.25).abs() < 1e-12);
        }

        let field = ScoreField { height: 1, width: 1, data: vec![1.0, 0.0, 0.0, 0.0] };
        let p = component_posteriors(&field, &[0, 1]);
        assert!((p.value(0, 0, 0) - 0.7310585786300049).abs() < 1e-9);
        assert!((p.value(0, 0, 1) - 0.2689414213699951).abs() < 1e-9);
    }

    #[test]
    fn posteriors_normalize_and_shift_invariant() {
        let mut rng = SplitMix64::new(21);
        let data: Vec<f64> = (0..6 * COMPONENTS).map(|_| rng.uniform() * 40.0 - 20.0).collect();
        let field = ScoreField { height: 2, width: 3, data: data.clone() };
        let p = component_posteriors(&field, &[0, 1, 2, 3]);
        for l in 0..6 {
            let total: f64 = (0..4).map(|j| p.data[l * 4 + j]).sum();
            assert!((total - 1.0).abs() < 1e-6);
            for j in 0..4 {
                let v = p.data[l * 4 + j];
                assert!(v > 0.0 && v < 1.0);
            }
        }
        // Adding a constant per location leaves posteriors unchanged.
        let shifted: Vec<f64> = data
            .chunks(COMPONENTS)
            .flat_map(|row| row.iter().map(|v| v + 123.456).collect::<Vec<_>>())
            .collect();
        let field2 = ScoreField { height: 2, width: 3, data: shifted };
        let q = component_posteriors(&field2, &[0, 1, 2, 3]);
        for (a, b) in p.data.iter().zip(&q.data) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn posterior_ordering_matches_score_ordering() {
        let mut rng = SplitMix64::new(22);
        let data: Vec<f64> = (0..5 * COMPONENTS).map(|_| rng.uniform() * 10.0).collect();
        let field = ScoreField { height: 1, width: 5, data };
        let p = component_posteriors(&field, &[0, 1, 2, 3]);
        for l in 0..5 {
            for a in 0..4 {
                for b in 0..4 {
                    let sa = field.data[l * 4 + a];
                    let sb = field.data[l * 4 + b];
                    let pa = p.data[l * 4 + a];
                    let pb = p.data[l * 4 + b];
                    assert_eq!(sa > sb, pa > pb);
                }
            }
        }
    }

    #[test]
    fn base_labels_endpoints() {
        let y = SoftMask::new(1, 3, vec![1.0, 0.3, 0.0]);
        let labels = base_soft_labels(&y);
        assert_eq!(labels.value(0, 0, BACKGROUND_BASE), 0.0);
        assert_eq!(labels.value(0, 0, FOREGROUND_BASE), 1.0);
        assert!((labels.value(0, 1, BACKGROUND_BASE) - 0.7).abs() < 1e-12);
        assert!((labels.value(0, 1, FOREGROUND_BASE) - 0.3).abs() < 1e-12);
        assert_eq!(labels.value(0, 2, FOREGROUND_BASE), 0.0);
    }

    #[test]
    fn supplementary_labels_clamp() {
        let labels = base_soft_labels(&SoftMask::new(1, 3, vec![0.0, 0.4, 0.5]));
        let post = PosteriorField {
            height: 1,
            width: 3,
            components: vec![BACKGROUND_BASE, FOREGROUND_BASE],
            data: vec![
                0.6, 0.4, // alpha0=1: residual 0.4
                0.7, 0.3, // p >= alpha on both
                0.5, 0.5, // exact match: zero residuals
            ],
        };
        let out = supplementary_soft_labels(&labels, &post);
        assert!((out.value(0, 0, BACKGROUND_SUPP) - 0.4).abs() < 1e-12);
        assert_eq!(out.value(0, 1, BACKGROUND_SUPP), 0.0);
        assert!((out.value(0, 1, FOREGROUND_SUPP) - 0.1).abs() < 1e-9);
        assert_eq!(out.value(0, 2, BACKGROUND_SUPP), 0.0);
        assert_eq!(out.value(0, 2, FOREGROUND_SUPP), 0.0);
    }

    #[test]
    fn update_lambda_endpoints() {
        let mut rng = SplitMix64::new(23);
        let vecs: Vec<Vec<f64>> = (0..6).map(|_| rng.unit_vector(3)).collect();
        let f = map_from_locations(3, 2, 3, &vecs);
        let y = SoftMask::new(2, 3, vec![0.9, 0.8, 0.1, 0.2, 0.7, 0.3]);

        let mus: [Vec<f64>; 4] = std::array::from_fn(|_| rng.unit_vector(3));
        let frozen = AppearanceModel::from_means(mus.clone(), 30.0, 0.0);
        let updated = update_model(&frozen, &f, &y);
        for k in 0..COMPONENTS {
            assert_eq!(updated.mean(k), frozen.mean(k), "lambda=0 must freeze component {k}");
        }

        let eager = AppearanceModel::from_means(mus, 30.0, 1.0);
        let updated = update_model(&eager, &f, &y);
        let labels = base_soft_labels(&y);
        let expect1 =
            estimate_mean_direction(&f, &labels.component_weights(FOREGROUND_BASE)).unwrap();
        assert_eq!(updated.mean(FOREGROUND_BASE), expect1.as_slice());
    }

    #[test]
    fn update_halfway_hand_case() {
        // Previous mean (1,0), per-frame estimate (0,1), lambda = 0.5:
        // blend (0.5, 0.5) renormalizes to (1/sqrt 2, 1/sqrt 2).
        let f = map_from_locations(2, 1, 1, &[vec![0.0, 1.0]]);
        let y = SoftMask::constant(1, 1, 1.0);
        let model = AppearanceModel::from_means(
            [vec![0.0, -1.0], vec![1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0]],
            30.0,
            0.5,
        );
        let updated = update_model(&model, &f, &y);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((updated.mean(FOREGROUND_BASE)[0] - inv_sqrt2).abs() < 1e-9);
        assert!((updated.mean(FOREGROUND_BASE)[1] - inv_sqrt2).abs() < 1e-9);
    }

    #[test]
    fn degenerate_estimate_freezes_component() {
        // All-background prediction starves the foreground components.
        let f = map_from_locations(2, 1, 2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let y = SoftMask::constant(1, 2, 0.0);
        let model = AppearanceModel::from_means(
            [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            30.0,
            1.0,
        );
        let updated = update_model(&model, &f, &y);
        assert_eq!(updated.mean(FOREGROUND_BASE), model.mean(FOREGROUND_BASE));
        assert_eq!(updated.mean(FOREGROUND_SUPP), model.mean(FOREGROUND_SUPP));
    }

    #[test]
    fn means_stay_unit_over_updates() {
        let mut rng = SplitMix64::new(24);
        let vecs: Vec<Vec<f64>> = (0..9).map(|_| rng.unit_vector(4)).collect();
        let f = map_from_locations(4, 3, 3, &vecs);
        let mask = SoftMask::new(3, 3, vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let mut model = init_from_first_frame(&f, &mask, 30.0, 0.3).unwrap();
        for step in 0..10 {
            let y = SoftMask::new(3, 3, (0..9).map(|_| rng.uniform()).collect());
            model = update_model(&model, &f, &y);
            for k in 0..COMPONENTS {
                let norm: f64 = model.mean(k).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-6, "step {step} component {k}");
            }
        }
    }

    #[test]
    fn vmf_samples_unit_and_deterministic() {
        let mut rng = SplitMix64::new(25);
        let mu = rng.unit_vector(16);
        let a = sample_vmf(&mu, 30.0, 50, 77);
        let b = sample_vmf(&mu, 30.0, 50, 77);
        assert_eq!(a, b);
        for s in &a {
            let norm: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn vmf_high_concentration_hugs_mean() {
        let mut rng = SplitMix64::new(26);
        let mu = rng.unit_vector(8);
        for s in sample_vmf(&mu, 1e6, 1000, 78) {
            assert!(angle_deg(&s, &mu) < 0.5);
        }
    }

    #[test]
    fn vmf_mean_direction_recovered() {
        let mut rng = SplitMix64::new(27);
        let mu = rng.unit_vector(64);
        let samples = sample_vmf(&mu, 30.0, 100_000, 79);
        let n = samples.len();
        let vecs: Vec<Vec<f64>> = samples;
        // Lay the samples out as a 1 x n feature grid and reuse the MLE.
        let f = map_from_locations(64, 1, n, &vecs);
        let est = estimate_mean_direction(&f, &vec![1.0; n]).unwrap();
        assert!(angle_deg(&est, &mu) < 1.0);
    }

    #[test]
    fn vmf_two_dimensional_works() {
        let samples = sample_vmf(&[1.0, 0.0], 5.0, 200, 80);
        let mean_x: f64 = samples.iter().map(|s| s[0]).sum::<f64>() / 200.0;
        assert!(mean_x > 0.5, "2-D samples should concentrate around +x, got {mean_x}");
    }
}
