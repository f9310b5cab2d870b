//! Randomized property tests over the primitives and file formats.

use proptest::prelude::*;

use dirseg_core::io;
use dirseg_core::{
    jaccard, l2_normalize, match_probability, merge_multi_object, resize_mask, BinaryMask,
    CueMap, RawFeatureMap, SoftMask,
};

fn small_map() -> impl Strategy<Value = RawFeatureMap> {
    (1usize..=6, 1usize..=5, 1usize..=5)
        .prop_flat_map(|(c, h, w)| {
            proptest::collection::vec(-100.0f64..100.0, c * h * w)
                .prop_map(move |data| RawFeatureMap::new(c, h, w, data))
        })
}

fn soft_mask() -> impl Strategy<Value = SoftMask> {
    (1usize..=6, 1usize..=6)
        .prop_flat_map(|(h, w)| {
            proptest::collection::vec(0.0f64..=1.0, h * w)
                .prop_map(move |data| SoftMask::new(h, w, data))
        })
}

proptest! {
    #[test]
    fn normalization_idempotent_and_unit_or_zero(raw in small_map()) {
        let once = l2_normalize(&raw).unwrap();
        for h in 0..once.height() {
            for w in 0..once.width() {
                let n = once.location_norm(h, w);
                prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-6);
            }
        }
        let again = l2_normalize(&once.to_raw()).unwrap();
        for (a, b) in once.as_slice().iter().zip(again.as_slice()) {
            prop_assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn resize_stays_within_block_extremes(
        mask in soft_mask(),
        factors in (1usize..=3, 1usize..=3),
    ) {
        let (fh, fw) = factors;
        let full = SoftMask::new(
            mask.height() * fh,
            mask.width() * fw,
            (0..mask.height() * fh * mask.width() * fw)
                .map(|l| {
                    let h = l / (mask.width() * fw);
                    let w = l % (mask.width() * fw);
                    mask.value(h / fh, w / fw)
                })
                .collect(),
        );
        let out = resize_mask(&full, mask.height(), mask.width()).unwrap();
        for (a, b) in out.as_slice().iter().zip(mask.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn dft_round_trip_bit_exact(
        dims in (1usize..=5, 1usize..=4, 1usize..=4),
        seed in any::<u32>(),
    ) {
        let (c, h, w) = dims;
        // f32-representable values, the format's domain.
        let data: Vec<f64> = (0..c * h * w)
            .map(|i| {
                let x = (seed as f64 + i as f64 * 17.13).sin() * 50.0;
                x as f32 as f64
            })
            .collect();
        let tensor = RawFeatureMap::new(c, h, w, data);
        let path = std::env::temp_dir().join(format!(
            "dirseg-prop-{}-{seed}.dft",
            std::process::id()
        ));
        io::write_dft(&path, &tensor).unwrap();
        let back = io::read_dft(&path).unwrap();
        std::fs::remove_file(&path).ok();
        prop_assert_eq!(tensor, back);
    }

    #[test]
    fn pgm_round_trip_within_bound(mask in soft_mask()) {
        let path = std::env::temp_dir().join(format!(
            "dirseg-prop-{}-{:p}.pgm",
            std::process::id(),
            &mask
        ));
        io::write_pgm(&path, &mask).unwrap();
        let back = io::read_pgm(&path).unwrap();
        std::fs::remove_file(&path).ok();
        for (a, b) in mask.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b).abs() <= 1.0 / 510.0 + 1e-12);
        }
    }

    #[test]
    fn match_probability_complementary(
        dims in (1usize..=4, 1usize..=4),
        seed in any::<u64>(),
    ) {
        let (h, w) = dims;
        let mut rng = dirseg_core::SplitMix64::new(seed);
        let st = CueMap::new(h, w, (0..h * w).map(|_| rng.uniform() * 2.0 - 1.0).collect());
        let sb = CueMap::new(h, w, (0..h * w).map(|_| rng.uniform() * 2.0 - 1.0).collect());
        let p = match_probability(&st, &sb);
        let q = match_probability(&sb, &st);
        for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
            prop_assert!(*a > 0.0 && *a < 1.0);
            prop_assert!((a + b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn merged_labels_partition_grid(masks_data in proptest::collection::vec(
        proptest::collection::vec(0.0f64..=1.0, 12), 1..=4
    )) {
        let masks: Vec<SoftMask> =
            masks_data.into_iter().map(|d| SoftMask::new(3, 4, d)).collect();
        let objects = masks.len() as u16;
        let labels = merge_multi_object(&masks);
        for (l, &label) in labels.as_slice().iter().enumerate() {
            prop_assert!(label <= objects);
            // Background only when nothing reaches the threshold.
            let best = masks.iter().map(|m| m.as_slice()[l]).fold(f64::MIN, f64::max);
            prop_assert_eq!(label == 0, best < 0.5);
        }
    }

    #[test]
    fn jaccard_bounds_and_identity(bits in proptest::collection::vec(any::<bool>(), 20)) {
        let a = BinaryMask::new(4, 5, bits.clone());
        let b = BinaryMask::new(4, 5, bits.iter().map(|x| !x).collect());
        prop_assert_eq!(jaccard(&a, &a), 1.0);
        let j = jaccard(&a, &b);
        prop_assert!((0.0..=1.0).contains(&j));
        prop_assert_eq!(jaccard(&a, &b), jaccard(&b, &a));
    }
}
