//! Region and contour overlap measures for hard masks.

use crate::directional::BinaryMask;

/// Jaccard index (intersection over union) of two hard masks.
///
/// Defined as 1 when both masks are empty.
pub fn jaccard(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    assert_eq!(pred.height(), gt.height(), "mask heights differ");
    assert_eq!(pred.width(), gt.width(), "mask widths differ");
    let mut intersection = 0usize;
    let mut union = 0usize;
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        if p && g {
            intersection += 1;
        }
        if p || g {
            union += 1;
        }
    }
    if union == 0 {
        1.0
    } else {
        intersection as f64 / union as f64
    }
}

// Foreground pixels with a 4-neighbor that is background or outside the grid.
fn boundary_pixels(mask: &BinaryMask) -> Vec<(usize, usize)> {
    let (h, w) = (mask.height(), mask.width());
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(y, x) {
                continue;
            }
            let edge = (y == 0 || !mask.get(y - 1, x))
                || (y + 1 == h || !mask.get(y + 1, x))
                || (x == 0 || !mask.get(y, x - 1))
                || (x + 1 == w || !mask.get(y, x + 1));
            if edge {
                out.push((y, x));
            }
        }
    }
    out
}

fn fraction_within(from: &[(usize, usize)], to: &[(usize, usize)], radius: f64) -> f64 {
    let r2 = radius * radius;
    let matched = from
        .iter()
        .filter(|&&(fy, fx)| {
            to.iter().any(|&(ty, tx)| {
                let dy = fy as f64 - ty as f64;
                let dx = fx as f64 - tx as f64;
                dy * dy + dx * dx <= r2
            })
        })
        .count();
    matched as f64 / from.len() as f64
}

/// Boundary F-measure at a pixel tolerance radius.
///
/// Boundaries are 4-connected (out-of-grid counts as background). Precision
/// is the fraction of predicted boundary pixels within Euclidean distance
/// `radius` of some ground-truth boundary pixel; recall is symmetric;
/// `F = 2PR / (P + R)`. Both boundaries empty gives 1, exactly one empty
/// gives 0. Distances are checked exhaustively.
pub fn boundary_f(pred: &BinaryMask, gt: &BinaryMask, radius: f64) -> f64 {
    assert_eq!(pred.height(), gt.height(), "mask heights differ");
    assert_eq!(pred.width(), gt.width(), "mask widths differ");
    assert!(radius >= 0.0, "radius must be nonnegative");
    let pb = boundary_pixels(pred);
    let gb = boundary_pixels(gt);
    match (pb.is_empty(), gb.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let precision = fraction_within(&pb, &gb, radius);
    let recall = fraction_within(&gb, &pb, radius);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Default boundary tolerance: `ceil(0.008 * image diagonal)` pixels.
pub fn default_boundary_radius(height: usize, width: usize) -> f64 {
    let diag = ((height * height + width * width) as f64).sqrt();
    (0.008 * diag).ceil()
}
