//! Bearings, distances and range-based adjacency from node positions.

use crate::error::{Result, SbraError};

pub type Position = [f64; 2];

pub fn distance(a: Position, b: Position) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

/// Exact bearing in degrees, counter-clockwise from the positive x-axis, in `[0, 360)`.
pub fn bearing(from: Position, to: Position) -> Result<f64> {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    if dx == 0.0 && dy == 0.0 {
        return Err(SbraError::DegeneratePair);
    }
    let deg = dy.atan2(dx).to_degrees().rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    Ok(if deg >= 360.0 { 0.0 } else { deg })
}

/// Nearest multiple of `step_deg`, halves rounded up, returned in steps modulo a full turn.
pub fn quantize(bearing_deg: f64, step_deg: f64) -> u32 {
    let turn = (360.0 / step_deg).round() as u32;
    let q = (bearing_deg / step_deg + 0.5).floor() as i64;
    q.rem_euclid(turn as i64) as u32
}

/// `δ[d][d'] = 1` iff `0 < distance <= max_range_m`.
pub fn build_adjacency(positions: &[Position], max_range_m: f64) -> Vec<Vec<u8>> {
    let n = positions.len();
    let mut delta = vec![vec![0u8; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = distance(positions[i], positions[j]);
            if dist > 0.0 && dist <= max_range_m {
                delta[i][j] = 1;
                delta[j][i] = 1;
            }
        }
    }
    delta
}

/// Quantized bearing matrix; entries with `δ = 0` are `None`.
pub fn build_align_angles(positions: &[Position], delta: &[Vec<u8>], step_deg: f64) -> Result<Vec<Vec<Option<u32>>>> {
    let n = positions.len();
    let mut v = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            if delta[i][j] == 1 {
                v[i][j] = Some(quantize(bearing(positions[i], positions[j])?, step_deg));
            }
        }
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn axis_bearings() {
        assert_eq!(bearing([0.0, 0.0], [100.0, 0.0]).unwrap(), 0.0);
        assert!((bearing([0.0, 0.0], [0.0, 100.0]).unwrap() - 90.0).abs() < 1e-12);
        assert!((bearing([0.0, 0.0], [-50.0, 0.0]).unwrap() - 180.0).abs() < 1e-12);
        assert!((bearing([0.0, 0.0], [0.0, -1.0]).unwrap() - 270.0).abs() < 1e-12);
    }

    #[test]
    fn coincident_positions_are_degenerate() {
        assert!(matches!(bearing([3.0, 4.0], [3.0, 4.0]), Err(SbraError::DegeneratePair)));
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize(171.0, 10.0) * 10, 170);
        assert_eq!(quantize(175.0, 10.0) * 10, 180);
        assert_eq!(quantize(174.999, 10.0) * 10, 170);
        assert_eq!(quantize(355.0, 10.0), 0);
        assert_eq!(quantize(359.9, 10.0), 0);
    }

    #[test]
    fn adjacency_by_range() {
        let d = build_adjacency(&[[0.0, 0.0], [180.0, 0.0]], 300.0);
        assert_eq!(d, vec![vec![0, 1], vec![1, 0]]);
        let d = build_adjacency(&[[0.0, 0.0], [400.0, 0.0]], 300.0);
        assert_eq!(d, vec![vec![0, 0], vec![0, 0]]);
        assert_eq!(build_adjacency(&[[1.0, 1.0]], 300.0), vec![vec![0]]);
        // 3-4-5 triangle scaled: distance 250 exactly
        let d = build_adjacency(&[[0.0, 0.0], [150.0, 200.0]], 250.0);
        assert_eq!(d[0][1], 1);
    }

    #[test]
    fn fig2_travel_from_node3_to_node5_bearing() {
        let s = crate::scenarios::fig2();
        let v = build_align_angles(&s.positions, &s.adjacency, 10.0).unwrap();
        assert_eq!(v, s.align_angles);
        let from3 = v[0][2].unwrap();
        let to5 = v[0][4].unwrap();
        assert_eq!((to5 + 36 - from3) % 36, 17);
    }

    fn pos() -> impl Strategy<Value = Position> {
        (-500.0f64..500.0, -500.0f64..500.0).prop_map(|(x, y)| [x, y])
    }

    proptest! {
        #[test]
        fn opposite_bearings_survive_quantization(a in pos(), b in pos(), step in prop::sample::select(vec![5.0, 10.0, 15.0, 30.0])) {
            prop_assume!(distance(a, b) > 1e-6);
            let turn = (360.0 / step) as i64;
            let f = quantize(bearing(a, b).unwrap(), step) as i64;
            let r = quantize(bearing(b, a).unwrap(), step) as i64;
            let diff = (f - (r + turn / 2)).rem_euclid(turn);
            prop_assert!(diff.min(turn - diff) <= 1);
        }

        #[test]
        fn adjacency_is_monotone_in_range(pts in prop::collection::vec(pos(), 1..12), r1 in 1.0f64..600.0, extra in 0.0f64..300.0) {
            let small = build_adjacency(&pts, r1);
            let large = build_adjacency(&pts, r1 + extra);
            for i in 0..pts.len() {
                prop_assert_eq!(small[i][i], 0);
                for j in 0..pts.len() {
                    prop_assert_eq!(small[i][j], small[j][i]);
                    prop_assert!(small[i][j] <= large[i][j]);
                }
            }
        }
    }
}
