//! `dirseg`: segmentation, matching, synthetic data, evaluation, and
//! benchmarking over DFT feature files and PGM masks.

use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dirseg_core::io::{self, Config};
use dirseg_core::{
    bench_matching, boundary_f, default_boundary_radius, fit_fusion_head, fuse_logistic,
    generate_synthetic_sequence, global_directional_match, jaccard, l2_normalize,
    match_probability, merge_multi_object, resize_mask, teacher_forced_stacks,
    DirectionalFeatureMap, SequenceState, SoftMask, SyntheticSequenceSpec,
};

/// Seed for the benchmark's random inputs; fixed so runs are comparable.
const BENCH_SEED: u64 = 17;

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "dirseg", version, about = "Directional-feature video object segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a sequence of DFT feature frames given first-frame masks.
    Segment {
        /// Directory of frame_%05d.dft feature files.
        #[arg(long)]
        features: PathBuf,
        /// First-frame mask (PGM) for object 1.
        #[arg(long)]
        first_mask: PathBuf,
        /// Additional first-frame masks for objects 2..; repeatable.
        #[arg(long)]
        second_mask: Vec<PathBuf>,
        /// Fusion head parameter file.
        #[arg(long)]
        head: PathBuf,
        /// Appearance concentration.
        #[arg(long)]
        kappa: f64,
        /// Appearance learning rate.
        #[arg(long)]
        lambda: f64,
        /// Output directory for per-frame PGM label maps.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the softmax match probability of one frame against frame 0.
    Match {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        first_mask: PathBuf,
        /// Frame index to match (0 is the first frame).
        #[arg(long)]
        frame: usize,
        /// Output PGM path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Time the contraction matching path against the naive pairwise loop.
    Bench {
        #[arg(long)]
        channels: usize,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        #[arg(long)]
        reps: usize,
        /// Also time the multi-threaded contraction path.
        #[arg(long)]
        parallel: bool,
    },
    /// Generate a synthetic sequence (DFT frames plus PGM ground truth).
    Synth {
        /// Sequence spec (`key = value` file).
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate predicted masks against ground truth (J, F, J&F mean).
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        /// Boundary tolerance radius in pixels; default ceil(0.008 * diagonal).
        #[arg(long)]
        boundary_radius: Option<usize>,
    },
    /// Fit a fusion head on a synthetic sequence and write it to a file.
    FitHead {
        /// Sequence spec used to generate training data.
        #[arg(long)]
        synth_spec: PathBuf,
        /// Full-batch gradient steps.
        #[arg(long)]
        steps: usize,
        /// Gradient step size.
        #[arg(long)]
        lr: f64,
        /// Output head file.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Segment { features, first_mask, second_mask, head, kappa, lambda, out } => {
            cmd_segment(&features, &first_mask, &second_mask, &head, kappa, lambda, &out)
        }
        Command::Match { features, first_mask, frame, out } => {
            cmd_match(&features, &first_mask, frame, &out)
        }
        Command::Bench { channels, height, width, reps, parallel } => {
            let report = bench_matching(channels, height, width, reps, parallel, BENCH_SEED)?;
            print!("{report}");
            Ok(())
        }
        Command::Synth { spec, out } => cmd_synth(&spec, &out),
        Command::Eval { pred, gt, boundary_radius } => cmd_eval(&pred, &gt, boundary_radius),
        Command::FitHead { synth_spec, steps, lr, out } => {
            cmd_fit_head(&synth_spec, steps, lr, &out)
        }
    }
}

fn sorted_files_with_extension(dir: &Path, extension: &str) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("cannot read directory {}: {e}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == extension))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(format!("no .{extension} files in {}", dir.display()).into());
    }
    Ok(files)
}

fn load_feature_frames(dir: &Path) -> CliResult<Vec<DirectionalFeatureMap>> {
    let paths = sorted_files_with_extension(dir, "dft")?;
    let mut frames = Vec::with_capacity(paths.len());
    for path in &paths {
        let raw = io::read_dft(path).map_err(|e| format!("{}: {e}", path.display()))?;
        frames.push(l2_normalize(&raw)?);
    }
    Ok(frames)
}

// Reads a full-resolution mask and reduces it to the feature grid.
fn load_grid_mask(path: &Path, grid_h: usize, grid_w: usize) -> CliResult<SoftMask> {
    let mask = io::read_pgm(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(resize_mask(&mask, grid_h, grid_w)?)
}

fn frame_file_name(index: usize, extension: &str) -> String {
    format!("frame_{index:05}.{extension}")
}

fn cmd_segment(
    features_dir: &Path,
    first_mask: &Path,
    second_masks: &[PathBuf],
    head_path: &Path,
    kappa: f64,
    lambda: f64,
    out_dir: &Path,
) -> CliResult<()> {
    let frames = load_feature_frames(features_dir)?;
    let first = &frames[0];
    let (grid_h, grid_w) = (first.height(), first.width());

    let mut mask_paths = vec![first_mask.to_path_buf()];
    mask_paths.extend_from_slice(second_masks);
    let masks: Vec<SoftMask> = mask_paths
        .iter()
        .map(|p| load_grid_mask(p, grid_h, grid_w))
        .collect::<CliResult<_>>()?;
    let objects = masks.len();

    let head = io::read_head(head_path)?;
    let mut states: Vec<SequenceState> = masks
        .iter()
        .map(|m| SequenceState::initialize(first, m, kappa, lambda))
        .collect::<dirseg_core::Result<_>>()?;

    std::fs::create_dir_all(out_dir)?;
    let labels = merge_multi_object(&masks);
    io::write_label_pgm(&out_dir.join(frame_file_name(0, "pgm")), &labels, objects)?;

    for (i, frame) in frames.iter().enumerate().skip(1) {
        let outputs: Vec<SoftMask> = states
            .iter_mut()
            .map(|s| s.segment_frame(frame, &head))
            .collect::<dirseg_core::Result<_>>()?;
        let labels = merge_multi_object(&outputs);
        io::write_label_pgm(&out_dir.join(frame_file_name(i, "pgm")), &labels, objects)?;
    }
    println!(
        "segmented {} frames, {objects} object(s), label maps in {}",
        frames.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_match(features_dir: &Path, first_mask: &Path, frame: usize, out: &Path) -> CliResult<()> {
    let frames = load_feature_frames(features_dir)?;
    if frame >= frames.len() {
        return Err(format!("frame {frame} out of range (0..{})", frames.len()).into());
    }
    let first = &frames[0];
    let mask = load_grid_mask(first_mask, first.height(), first.width())?;
    let (st, sb) = global_directional_match(first, &mask, &frames[frame])?;
    let probability = match_probability(&st, &sb);
    io::write_pgm(out, &probability)?;
    println!("wrote match probability of frame {frame} to {}", out.display());
    Ok(())
}

fn cmd_synth(spec_path: &Path, out_dir: &Path) -> CliResult<()> {
    let cfg = Config::load(spec_path)?;
    let spec = SyntheticSequenceSpec::from_config(&cfg)?;
    let (features, masks) = generate_synthetic_sequence(&spec);
    std::fs::create_dir_all(out_dir)?;
    for (i, (f, m)) in features.iter().zip(&masks).enumerate() {
        io::write_dft(&out_dir.join(frame_file_name(i, "dft")), &f.to_raw())?;
        io::write_pgm(&out_dir.join(frame_file_name(i, "pgm")), m)?;
    }
    println!(
        "wrote {} frames ({}x{}, C={}) to {}",
        spec.frames(),
        spec.height(),
        spec.width(),
        spec.channels(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_eval(pred_dir: &Path, gt_dir: &Path, boundary_radius: Option<usize>) -> CliResult<()> {
    let pred_paths = sorted_files_with_extension(pred_dir, "pgm")?;
    let gt_paths = sorted_files_with_extension(gt_dir, "pgm")?;
    if pred_paths.len() != gt_paths.len() {
        return Err(format!(
            "frame count mismatch: {} predictions vs {} ground-truth masks",
            pred_paths.len(),
            gt_paths.len()
        )
        .into());
    }
    let mut sum_j = 0.0;
    let mut sum_f = 0.0;
    for (pred_path, gt_path) in pred_paths.iter().zip(&gt_paths) {
        let pred = io::read_pgm(pred_path).map_err(|e| format!("{}: {e}", pred_path.display()))?;
        let gt = io::read_pgm(gt_path).map_err(|e| format!("{}: {e}", gt_path.display()))?;
        if (pred.height(), pred.width()) != (gt.height(), gt.width()) {
            return Err(format!(
                "shape mismatch: {} is {}x{}, {} is {}x{}",
                pred_path.display(),
                pred.height(),
                pred.width(),
                gt_path.display(),
                gt.height(),
                gt.width()
            )
            .into());
        }
        let radius = boundary_radius
            .map(|r| r as f64)
            .unwrap_or_else(|| default_boundary_radius(gt.height(), gt.width()));
        let j = jaccard(&pred.binarize(0.5), &gt.binarize(0.5));
        let f = boundary_f(&pred.binarize(0.5), &gt.binarize(0.5), radius);
        sum_j += j;
        sum_f += f;
        let name = pred_path.file_stem().and_then(|s| s.to_str()).unwrap_or("?");
        println!("{name}: J={j:.4} F={f:.4}");
    }
    let n = pred_paths.len() as f64;
    let (mean_j, mean_f) = (sum_j / n, sum_f / n);
    println!("mean J={mean_j:.4}");
    println!("mean F={mean_f:.4}");
    println!("J&F mean={:.4}", 0.5 * (mean_j + mean_f));
    Ok(())
}

fn cmd_fit_head(spec_path: &Path, steps: usize, lr: f64, out: &Path) -> CliResult<()> {
    let cfg = Config::load(spec_path)?;
    let spec = SyntheticSequenceSpec::from_config(&cfg)?;
    // The appearance model driving the training cues; defaults match the
    // segmentation defaults.
    let model_kappa = cfg.get_f64_or("model_kappa", 30.0)?;
    let model_lambda = cfg.get_f64_or("model_lambda", 0.1)?;

    let (features, masks) = generate_synthetic_sequence(&spec);
    let stacks = teacher_forced_stacks(
        &features[0],
        &masks[0],
        &features[1..],
        &masks[1..],
        model_kappa,
        model_lambda,
    )?;
    let head = fit_fusion_head(&stacks, steps, lr)?;
    io::write_head(out, &head)?;

    let loss = dirseg_core::cross_entropy_loss(&stacks, &head);
    let mut correct = 0usize;
    let mut total = 0usize;
    for (cues, target) in &stacks {
        let y = fuse_logistic(cues, &head);
        for (p, t) in y.as_slice().iter().zip(target.as_slice()) {
            if (*p >= 0.5) == (*t >= 0.5) {
                correct += 1;
            }
            total += 1;
        }
    }
    println!(
        "fit head on {} stacks: loss {loss:.6}, train pixel accuracy {:.4}, wrote {}",
        stacks.len(),
        correct as f64 / total as f64,
        out.display()
    );
    Ok(())
}
