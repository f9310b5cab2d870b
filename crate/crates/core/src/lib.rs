//! Video object segmentation from directional (unit-norm) features.
//!
//! Given a first frame's features and mask, the pipeline combines three cue
//! families at the feature-grid resolution:
//!
//! - **global matching** ([`matching`]): best mask-weighted cosine of every
//!   pixel against all first-frame positions, computed as one dense tensor
//!   contraction per bank and verified against a looped pairwise oracle;
//! - **appearance** ([`appearance`]): a four-component von Mises-Fisher
//!   mixture over unit features, updated online from each frame's
//!   prediction;
//! - **temporal smoothness**: the previous frame's prediction as an extra
//!   cue channel.
//!
//! A small logistic head ([`fusion`]) fuses the cues into per-pixel
//! foreground probabilities; per-object probabilities merge into label maps.
//! The toolkit modules add file formats ([`io`]), metrics ([`metrics`]),
//! synthetic sequences ([`synth`]), and a matching benchmark
//! ([`bench`](mod@bench)).

pub mod appearance;
pub mod bench;
pub mod directional;
pub mod error;
pub mod fusion;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod rng;
pub mod synth;

pub use appearance::{
    base_soft_labels, component_posteriors, component_scores, estimate_mean_direction,
    init_from_first_frame, sample_vmf, supplementary_soft_labels, update_model, AppearanceModel,
    PosteriorField, ScoreField, SoftLabelField, VmfSampler,
};
pub use bench::{bench_matching, BenchReport, BENCH_TOLERANCE};
pub use directional::{
    l2_normalize, resize_mask, BinaryMask, DirectionalFeatureMap, RawFeatureMap, SoftMask,
};
pub use error::{Error, Result};
pub use fusion::{
    assemble_cues, cross_entropy_gradient, cross_entropy_loss, fit_fusion_head, fuse_logistic,
    merge_multi_object, segment_sequence, teacher_forced_stacks, CueStack, FusionHead, LabelMap,
    SequenceState, CUE_CHANNELS, CUE_ORDER,
};
pub use matching::{
    brute_force_match_oracle, build_kernel_banks, contract_similarity,
    contract_similarity_parallel, global_directional_match, match_probability,
    reduce_channel_max, CueMap, KernelBank, SimilarityVolume,
};
pub use metrics::{boundary_f, default_boundary_radius, jaccard};
pub use rng::SplitMix64;
pub use synth::{
    bayes_component_labels, generate_synthetic_sequence, random_directional_map,
    random_hard_mask, random_soft_mask, SyntheticSequenceSpec,
};
