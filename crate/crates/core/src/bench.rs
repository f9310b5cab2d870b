//! Matching benchmark: dense contraction versus the looped pairwise search
//! on identical random inputs, with a mandatory agreement check.

use std::fmt;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matching::{
    brute_force_match_oracle, build_kernel_banks, contract_similarity_parallel,
    global_directional_match, reduce_channel_max, CueMap,
};
use crate::synth::{random_directional_map, random_hard_mask};

/// Paths must agree within this absolute tolerance before any timing is
/// reported.
pub const BENCH_TOLERANCE: f64 = 1e-5;

/// Wall-clock samples for both matching paths on one problem size.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub reps: usize,
    /// Largest absolute difference between the two paths' outputs.
    pub max_abs_diff: f64,
    pub contraction_secs: Vec<f64>,
    pub naive_secs: Vec<f64>,
    /// Present when the threaded contraction was also timed.
    pub parallel_secs: Option<Vec<f64>>,
    /// Threads used by the parallel path, if any.
    pub parallel_threads: usize,
}

fn median(samples: &[f64]) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

impl BenchReport {
    pub fn median_contraction(&self) -> f64 {
        median(&self.contraction_secs)
    }

    pub fn median_naive(&self) -> f64 {
        median(&self.naive_secs)
    }

    pub fn median_parallel(&self) -> Option<f64> {
        self.parallel_secs.as_deref().map(median)
    }

    /// Naive median over contraction median.
    pub fn speedup(&self) -> f64 {
        self.median_naive() / self.median_contraction()
    }
}

fn sample_line(f: &mut fmt::Formatter<'_>, name: &str, samples: &[f64]) -> fmt::Result {
    write!(f, "  {name:<22} samples [s]")?;
    for s in samples {
        write!(f, " {s:.4}")?;
    }
    writeln!(f, " | median {:.4}", median(samples))
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "matching benchmark: C={} H={} W={} ({} kernels), reps={}",
            self.channels,
            self.height,
            self.width,
            self.height * self.width,
            self.reps
        )?;
        writeln!(f, "  paths agree: max abs diff {:.3e}", self.max_abs_diff)?;
        sample_line(f, "contraction", &self.contraction_secs)?;
        sample_line(f, "naive pairwise", &self.naive_secs)?;
        if let Some(par) = &self.parallel_secs {
            sample_line(f, &format!("contraction x{}", self.parallel_threads), par)?;
        }
        writeln!(f, "  speedup: {:.2}x (naive median / contraction median)", self.speedup())?;
        writeln!(
            f,
            "  note: times cover the matching computation only, not feature \
             extraction; they are not comparable to end-to-end per-frame rates."
        )
    }
}

// Largest absolute difference between two cue maps.
pub(crate) fn max_abs_diff(a: &CueMap, b: &CueMap) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn check_agreement(
    fast: &(CueMap, CueMap),
    reference: &(CueMap, CueMap),
) -> Result<f64> {
    let diff = max_abs_diff(&fast.0, &reference.0).max(max_abs_diff(&fast.1, &reference.1));
    if diff > BENCH_TOLERANCE {
        Err(Error::BenchMismatch { max_abs_diff: diff, tolerance: BENCH_TOLERANCE })
    } else {
        Ok(diff)
    }
}

/// Times both matching paths on identical random inputs.
///
/// Both paths are first run once and compared; if they disagree beyond
/// [`BENCH_TOLERANCE`] the benchmark refuses to report timings. Each path is
/// then run `reps` times single-threaded; with `parallel` set the threaded
/// contraction is timed as an additional series.
pub fn bench_matching(
    channels: usize,
    height: usize,
    width: usize,
    reps: usize,
    parallel: bool,
    seed: u64,
) -> Result<BenchReport> {
    assert!(channels >= 1 && height >= 1 && width >= 1 && reps >= 1, "parameters must be >= 1");
    let mut rng = crate::rng::SplitMix64::new(seed);
    let first = random_directional_map(channels, height, width, &mut rng);
    let mask = random_hard_mask(height, width, 0.5, &mut rng);
    let frame = random_directional_map(channels, height, width, &mut rng);

    let fast = global_directional_match(&first, &mask, &frame)?;
    let reference = brute_force_match_oracle(&first, &mask, &frame)?;
    let max_abs_diff = check_agreement(&fast, &reference)?;

    let mut contraction_secs = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        let out = global_directional_match(&first, &mask, &frame)?;
        contraction_secs.push(t0.elapsed().as_secs_f64());
        std::hint::black_box(&out);
    }

    let mut naive_secs = Vec::with_capacity(reps);
    for _ in 0..reps {
        let t0 = Instant::now();
        let out = brute_force_match_oracle(&first, &mask, &frame)?;
        naive_secs.push(t0.elapsed().as_secs_f64());
        std::hint::black_box(&out);
    }

    let mut parallel_secs = None;
    let mut parallel_threads = 0;
    if parallel {
        let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let mut samples = Vec::with_capacity(reps);
        for _ in 0..reps {
            let t0 = Instant::now();
            let (target_bank, background_bank) = build_kernel_banks(&first, &mask)?;
            let st =
                reduce_channel_max(&contract_similarity_parallel(&frame, &target_bank, threads)?);
            let sb = reduce_channel_max(&contract_similarity_parallel(
                &frame,
                &background_bank,
                threads,
            )?);
            samples.push(t0.elapsed().as_secs_f64());
            std::hint::black_box((&st, &sb));
        }
        // The threaded path must agree as well.
        let (target_bank, background_bank) = build_kernel_banks(&first, &mask)?;
        let st = reduce_channel_max(&contract_similarity_parallel(&frame, &target_bank, threads)?);
        let sb =
            reduce_channel_max(&contract_similarity_parallel(&frame, &background_bank, threads)?);
        check_agreement(&(st, sb), &reference)?;
        parallel_secs = Some(samples);
        parallel_threads = threads;
    }

    Ok(BenchReport {
        channels,
        height,
        width,
        reps,
        max_abs_diff,
        contraction_secs,
        naive_secs,
        parallel_secs,
        parallel_threads,
    })
}
