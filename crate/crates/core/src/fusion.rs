//! Cue fusion and the sequential segmentation loop.
//!
//! Matching scores, appearance scores, and the previous prediction are
//! stacked into a fixed-order [`CueStack`] and combined by a per-pixel
//! logistic head. Frame predictions are recycled: each frame's fused output
//! updates the appearance model and becomes the next frame's previous-mask
//! cue, while the first-frame kernel banks stay fixed for the whole sequence.

use crate::appearance::{
    component_scores, init_from_first_frame, update_model, AppearanceModel, ScoreField,
};
use crate::directional::{DirectionalFeatureMap, SoftMask};
use crate::error::{Error, Result};
use crate::matching::{
    build_kernel_banks, contract_similarity, reduce_channel_max, CueMap, KernelBank,
};

/// Number of cue channels.
pub const CUE_CHANNELS: usize = 7;

/// Channel order of a [`CueStack`]:
/// target match, background match, the four appearance component scores
/// (background base, foreground base, background supplementary, foreground
/// supplementary), previous mask.
pub const CUE_ORDER: [&str; CUE_CHANNELS] =
    ["s_t", "s_b", "s_0", "s_1", "s_2", "s_3", "prev_mask"];

/// Fixed-order `7 x H x W` stack of per-pixel cues.
#[derive(Debug, Clone, PartialEq)]
pub struct CueStack {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl CueStack {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn value(&self, channel: usize, h: usize, w: usize) -> f64 {
        self.data[(channel * self.height + h) * self.width + w]
    }

    /// One channel's `H x W` plane.
    pub fn channel(&self, channel: usize) -> &[f64] {
        assert!(channel < CUE_CHANNELS);
        let locations = self.height * self.width;
        &self.data[channel * locations..(channel + 1) * locations]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// The per-pixel logistic fusion head: seven weights and a bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionHead {
    pub weights: [f64; CUE_CHANNELS],
    pub bias: f64,
}

impl FusionHead {
    pub fn zeros() -> Self {
        Self { weights: [0.0; CUE_CHANNELS], bias: 0.0 }
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.is_finite()) && self.bias.is_finite()
    }
}

/// Stacks the cues in the documented channel order.
pub fn assemble_cues(
    st: &CueMap,
    sb: &CueMap,
    scores: &ScoreField,
    prev_mask: &SoftMask,
) -> Result<CueStack> {
    let (h, w) = (st.height(), st.width());
    for (gh, gw) in [
        (sb.height(), sb.width()),
        (scores.height(), scores.width()),
        (prev_mask.height(), prev_mask.width()),
    ] {
        if (gh, gw) != (h, w) {
            return Err(Error::ShapeMismatch {
                expected_h: h,
                expected_w: w,
                got_h: gh,
                got_w: gw,
            });
        }
    }
    let locations = h * w;
    let mut data = Vec::with_capacity(CUE_CHANNELS * locations);
    data.extend_from_slice(st.as_slice());
    data.extend_from_slice(sb.as_slice());
    for k in 0..4 {
        data.extend(scores.component_plane(k));
    }
    data.extend_from_slice(prev_mask.as_slice());
    Ok(CueStack { height: h, width: w, data })
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Per-pixel logistic fusion: `y = sigmoid(sum_c w_c * cue_c + b)`.
pub fn fuse_logistic(cues: &CueStack, head: &FusionHead) -> SoftMask {
    let locations = cues.height * cues.width;
    let mut logits = vec![head.bias; locations];
    for (c, &weight) in head.weights.iter().enumerate() {
        let plane = cues.channel(c);
        for (z, &x) in logits.iter_mut().zip(plane) {
            *z += weight * x;
        }
    }
    SoftMask::new(cues.height, cues.width, logits.into_iter().map(sigmoid).collect())
}

/// Mean pixelwise cross-entropy of the head over labeled cue stacks.
pub fn cross_entropy_loss(training: &[(CueStack, SoftMask)], head: &FusionHead) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (cues, target) in training {
        let locations = cues.height * cues.width;
        for l in 0..locations {
            let mut z = head.bias;
            for (c, &weight) in head.weights.iter().enumerate() {
                z += weight * cues.channel(c)[l];
            }
            let t = target.as_slice()[l];
            // softplus(z) - t*z == -(t ln y + (1-t) ln (1-y))
            total += softplus(z) - t * z;
        }
        count += locations;
    }
    total / count as f64
}

/// Analytic gradient of [`cross_entropy_loss`] in the head's parameters.
///
/// Returns `(d/dw, d/db)`.
pub fn cross_entropy_gradient(
    training: &[(CueStack, SoftMask)],
    head: &FusionHead,
) -> ([f64; CUE_CHANNELS], f64) {
    let mut grad_w = [0.0; CUE_CHANNELS];
    let mut grad_b = 0.0;
    let mut count = 0usize;
    for (cues, target) in training {
        let locations = cues.height * cues.width;
        for l in 0..locations {
            let mut z = head.bias;
            for (c, &weight) in head.weights.iter().enumerate() {
                z += weight * cues.channel(c)[l];
            }
            let residual = sigmoid(z) - target.as_slice()[l];
            for (c, g) in grad_w.iter_mut().enumerate() {
                *g += residual * cues.channel(c)[l];
            }
            grad_b += residual;
        }
        count += locations;
    }
    let n = count as f64;
    for g in &mut grad_w {
        *g /= n;
    }
    (grad_w, grad_b / n)
}

/// Fits the head by full-batch gradient descent on pixelwise cross-entropy,
/// starting from zeros. Deterministic given the inputs.
pub fn fit_fusion_head(
    training: &[(CueStack, SoftMask)],
    steps: usize,
    step_size: f64,
) -> Result<FusionHead> {
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    for (cues, target) in training {
        if cues.height != target.height() || cues.width != target.width() {
            return Err(Error::ShapeMismatch {
                expected_h: cues.height,
                expected_w: cues.width,
                got_h: target.height(),
                got_w: target.width(),
            });
        }
    }
    let mut head = FusionHead::zeros();
    for _ in 0..steps {
        let (grad_w, grad_b) = cross_entropy_gradient(training, &head);
        for (w, g) in head.weights.iter_mut().zip(grad_w) {
            *w -= step_size * g;
        }
        head.bias -= step_size * grad_b;
    }
    Ok(head)
}

/// Rolling state of one object's segmentation across a sequence.
///
/// The kernel banks are built once from the first frame and never change;
/// the appearance model and previous mask advance with every frame.
#[derive(Debug, Clone)]
pub struct SequenceState {
    model: AppearanceModel,
    target_bank: KernelBank,
    background_bank: KernelBank,
    previous: SoftMask,
    frame_index: usize,
}

impl SequenceState {
    /// Builds frame-0 state: kernel banks plus the initial appearance model.
    ///
    /// `first_mask` must already be at the feature-grid resolution and must
    /// binarize to both classes.
    pub fn initialize(
        first_features: &DirectionalFeatureMap,
        first_mask: &SoftMask,
        kappa: f64,
        lambda: f64,
    ) -> Result<Self> {
        let (target_bank, background_bank) = build_kernel_banks(first_features, first_mask)?;
        let model = init_from_first_frame(first_features, first_mask, kappa, lambda)?;
        Ok(Self {
            model,
            target_bank,
            background_bank,
            previous: first_mask.clone(),
            frame_index: 0,
        })
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn model(&self) -> &AppearanceModel {
        &self.model
    }

    pub fn previous_mask(&self) -> &SoftMask {
        &self.previous
    }

    pub fn target_bank(&self) -> &KernelBank {
        &self.target_bank
    }

    pub fn background_bank(&self) -> &KernelBank {
        &self.background_bank
    }

    /// Assembles the cue stack for a frame without advancing the state.
    pub fn cues_for(&self, features: &DirectionalFeatureMap) -> Result<CueStack> {
        if features.height() != self.previous.height()
            || features.width() != self.previous.width()
        {
            return Err(Error::ShapeMismatch {
                expected_h: self.previous.height(),
                expected_w: self.previous.width(),
                got_h: features.height(),
                got_w: features.width(),
            });
        }
        let st = reduce_channel_max(&contract_similarity(features, &self.target_bank)?);
        let sb = reduce_channel_max(&contract_similarity(features, &self.background_bank)?);
        let scores = component_scores(features, &self.model);
        assemble_cues(&st, &sb, &scores, &self.previous)
    }

    /// Segments one frame: fuse the cues, then recycle the prediction into
    /// the appearance model and the previous-mask channel.
    pub fn segment_frame(
        &mut self,
        features: &DirectionalFeatureMap,
        head: &FusionHead,
    ) -> Result<SoftMask> {
        let cues = self.cues_for(features)?;
        let predicted = fuse_logistic(&cues, head);
        self.model = update_model(&self.model, features, &predicted);
        self.previous = predicted.clone();
        self.frame_index += 1;
        Ok(predicted)
    }

    /// Advances the state using an externally supplied mask (used when
    /// building training data from ground truth instead of predictions).
    pub fn advance_with_mask(
        &mut self,
        features: &DirectionalFeatureMap,
        mask: &SoftMask,
    ) -> Result<()> {
        if features.height() != self.previous.height()
            || features.width() != self.previous.width()
        {
            return Err(Error::ShapeMismatch {
                expected_h: self.previous.height(),
                expected_w: self.previous.width(),
                got_h: features.height(),
                got_w: features.width(),
            });
        }
        self.model = update_model(&self.model, features, mask);
        self.previous = mask.clone();
        self.frame_index += 1;
        Ok(())
    }
}

/// Segments a full sequence. Frame 0's output is the given mask; frames
/// `1..=T` are produced by the rolling [`SequenceState`].
pub fn segment_sequence(
    first_features: &DirectionalFeatureMap,
    first_mask: &SoftMask,
    frames: &[DirectionalFeatureMap],
    head: &FusionHead,
    kappa: f64,
    lambda: f64,
) -> Result<Vec<SoftMask>> {
    let mut state = SequenceState::initialize(first_features, first_mask, kappa, lambda)?;
    let mut outputs = Vec::with_capacity(frames.len() + 1);
    outputs.push(first_mask.clone());
    for features in frames {
        outputs.push(state.segment_frame(features, head)?);
    }
    Ok(outputs)
}

/// Builds labeled cue stacks for head fitting by running the sequence with
/// ground-truth masks in place of predictions (teacher forcing).
///
/// Returns one `(cues, target)` pair per frame `1..=T`.
pub fn teacher_forced_stacks(
    first_features: &DirectionalFeatureMap,
    first_mask: &SoftMask,
    frames: &[DirectionalFeatureMap],
    ground_truth: &[SoftMask],
    kappa: f64,
    lambda: f64,
) -> Result<Vec<(CueStack, SoftMask)>> {
    assert_eq!(frames.len(), ground_truth.len(), "one ground-truth mask per frame");
    let mut state = SequenceState::initialize(first_features, first_mask, kappa, lambda)?;
    let mut out = Vec::with_capacity(frames.len());
    for (features, gt) in frames.iter().zip(ground_truth) {
        let cues = state.cues_for(features)?;
        out.push((cues, gt.clone()));
        state.advance_with_mask(features, gt)?;
    }
    Ok(out)
}

/// Per-pixel object labels, 0 for background and `1..=O` for objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u16>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, data: Vec<u16>) -> Self {
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

    pub fn label(&self, h: usize, w: usize) -> u16 {
        self.data[h * self.width + w]
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.data
    }

    /// Binary mask of one object's pixels.
    pub fn object_mask(&self, object: u16) -> crate::directional::BinaryMask {
        crate::directional::BinaryMask::new(
            self.height,
            self.width,
            self.data.iter().map(|&l| l == object).collect(),
        )
    }
}

/// Merges per-object soft masks into a single label map: the best-scoring
/// object wins where its probability reaches 0.5, otherwise background.
/// Ties go to the lowest object index.
pub fn merge_multi_object(masks: &[SoftMask]) -> LabelMap {
    assert!(!masks.is_empty(), "at least one object mask required");
    let (h, w) = (masks[0].height(), masks[0].width());
    for m in masks {
        assert_eq!((m.height(), m.width()), (h, w), "object masks must share a shape");
    }
    let mut data = vec![0u16; h * w];
    for (l, out) in data.iter_mut().enumerate() {
        let mut best = 0usize;
        let mut best_value = masks[0].as_slice()[l];
        for (o, m) in masks.iter().enumerate().skip(1) {
            let v = m.as_slice()[l];
            if v > best_value {
                best_value = v;
                best = o;
            }
        }
        if best_value >= 0.5 {
            *out = (best + 1) as u16;
        }
    }
    LabelMap { height: h, width: w, data }
}
