//! Archimedes-spiral bandwidth expansion (1:2 per stage).
//!
//! A real value `w` maps to a point on one of two interleaved spirals,
//!
//! ```text
//! w >= 0:  x1 =  (d/pi) w cos(g w),       x2 =  (d/pi) w sin(g w)
//! w <  0:  x1 = -(d/pi) w cos(-g w + pi), x2 = -(d/pi) w sin(-g w + pi)
//! ```
//!
//! so the negative branch is the point reflection of the positive one and
//! the sign of `w` is carried by the branch choice. `gamma` stretches the
//! spiral without growing the occupied disc: higher values spread encode
//! points further apart along the curve (better high-SNR precision) while
//! pulling the two branches closer together (more sign flips at low SNR).
//!
//! Decoding projects a received pair onto the nearest point of either
//! branch with a coarse grid scan refined by golden-section search. The
//! search needs the encoder's input range `w_max`; callers carry it as side
//! information. Noiseless sign recovery is reliable for |w| above about 1%
//! of `w_max`; below that the branches are closer than the grid resolution.
//!
//! Depth-n recursion re-encodes each output coordinate after rescaling it
//! back into `[-w_max, w_max]`, giving a 1:2^n expansion. The rescale
//! factor is `pi/delta` per stage, fixed by the spiral radius bound
//! `|theta(w)| = (d/pi)|w|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid points per spiral branch in the decoder's coarse scan.
pub const DECODE_GRID_POINTS: usize = 4096;
/// Golden-section refinement stops when the bracket is this narrow.
pub const DECODE_REFINE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralParams {
    /// Radius scale (`delta`); 1 by default.
    pub delta: f64,
    /// Angular rate (`gamma`); controls spiral length.
    pub gamma: f64,
}

impl Default for SpiralParams {
    fn default() -> Self {
        SpiralParams {
            delta: 1.0,
            gamma: 2.0 * PI,
        }
    }
}

impl SpiralParams {
    pub fn with_gamma(gamma: f64) -> Self {
        SpiralParams { delta: 1.0, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta <= 0.0 || self.gamma <= 0.0 {
            return Err(Error::Config(
                "spiral delta and gamma must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Maps one real value to a point on the spiral pair.
pub fn sk_encode(w: f64, p: &SpiralParams) -> (f64, f64) {
    let radial = p.delta / PI * w;
    if w >= 0.0 {
        let phase = p.gamma * w;
        (radial * phase.cos(), radial * phase.sin())
    } else {
        let phase = -p.gamma * w + PI;
        (-radial * phase.cos(), -radial * phase.sin())
    }
}

/// Squared distance from `(y1, y2)` to the encode point of `signed_w`.
fn dist_sq(y1: f64, y2: f64, signed_w: f64, p: &SpiralParams) -> f64 {
    let (x1, x2) = sk_encode(signed_w, p);
    (y1 - x1) * (y1 - x1) + (y2 - x2) * (y2 - x2)
}

/// Golden-section minimization of `f` over `[a, b]` down to `tol`.
fn golden_section(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Nearest-point decode over both branches: grid scan at
/// [`DECODE_GRID_POINTS`] per spiral, then golden-section refinement. Total
/// for any input; `w_max` bounds the encoder's input range.
pub fn sk_decode(y1: f64, y2: f64, p: &SpiralParams, w_max: f64) -> f64 {
    if w_max <= 0.0 {
        return 0.0;
    }
    let step = w_max / (DECODE_GRID_POINTS - 1) as f64;
    let mut best_w = 0.0;
    let mut best_d = f64::INFINITY;
    for sign in [1.0, -1.0] {
        for i in 0..DECODE_GRID_POINTS {
            let w = sign * i as f64 * step;
            let d = dist_sq(y1, y2, w, p);
            if d < best_d {
                best_d = d;
                best_w = w;
            }
        }
    }
    let sign = if best_w < 0.0 { -1.0 } else { 1.0 };
    let u = best_w.abs();
    let lo = (u - step).max(0.0);
    let hi = (u + step).min(w_max);
    let refined = golden_section(lo, hi, DECODE_REFINE_TOL, |v| dist_sq(y1, y2, sign * v, p));
    // Keep the grid point unless refinement strictly improved on it (it
    // cannot when the grid already hit the minimum exactly).
    if dist_sq(y1, y2, sign * refined, p) < best_d {
        sign * refined
    } else {
        best_w
    }
}

/// Per-stage rescale factor taking spiral coordinates back into the
/// encoder's input range.
pub fn recursion_scale(p: &SpiralParams) -> f64 {
    PI / p.delta
}

/// Depth-n spiral expansion of one value into `2^n` dims. Depth 1 is
/// [`sk_encode`]; deeper stages re-encode each coordinate after rescaling
/// by [`recursion_scale`].
pub fn sk_encode_recursive(w: f64, p: &SpiralParams, depth: u32) -> Vec<f64> {
    assert!(depth >= 1, "recursion depth must be at least 1");
    let (x1, x2) = sk_encode(w, p);
    let mut coords = vec![x1, x2];
    let scale = recursion_scale(p);
    for _ in 1..depth {
        let mut next = Vec::with_capacity(coords.len() * 2);
        for &c in &coords {
            let (a, b) = sk_encode(scale * c, p);
            next.push(a);
            next.push(b);
        }
        coords = next;
    }
    coords
}

/// Inverse of [`sk_encode_recursive`]: decodes the deepest pairs first and
/// walks back up the recursion.
pub fn sk_decode_recursive(dims: &[f64], p: &SpiralParams, depth: u32, w_max: f64) -> f64 {
    assert!(depth >= 1, "recursion depth must be at least 1");
    assert_eq!(dims.len(), 1 << depth, "dims must hold 2^depth values");
    let scale = recursion_scale(p);
    let mut coords = dims.to_vec();
    for _ in 1..depth {
        let mut prev = Vec::with_capacity(coords.len() / 2);
        for pair in coords.chunks(2) {
            prev.push(sk_decode(pair[0], pair[1], p, w_max) / scale);
        }
        coords = prev;
    }
    sk_decode(coords[0], coords[1], p, w_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn encode_matches_closed_forms() {
        let p = SpiralParams::default();
        assert_eq!(sk_encode(0.0, &p), (0.0, 0.0));

        // w = 0.5, gamma = 2pi: ((0.5/pi) cos(pi), (0.5/pi) sin(pi)).
        let (x1, x2) = sk_encode(0.5, &p);
        assert!((x1 + 0.159_155).abs() < 1e-5, "{x1}");
        assert!(x2.abs() < 1e-12, "{x2}");

        // Mirror for w = -0.5.
        let (x1, x2) = sk_encode(-0.5, &p);
        assert!((x1 - 0.159_155).abs() < 1e-5, "{x1}");
        assert!(x2.abs() < 1e-12, "{x2}");
    }

    #[test]
    fn negative_branch_is_point_reflection() {
        let p = SpiralParams::with_gamma(4.0 * PI);
        for w in [0.1, 0.33, 0.9] {
            let (a, b) = sk_encode(w, &p);
            let (c, d) = sk_encode(-w, &p);
            assert!((a + c).abs() < 1e-12);
            assert!((b + d).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_origin_is_zero() {
        let p = SpiralParams::default();
        assert_eq!(sk_decode(0.0, 0.0, &p, 1.0), 0.0);
    }

    #[test]
    fn noiseless_round_trip_single_value() {
        let p = SpiralParams::default();
        let (x1, x2) = sk_encode(0.5, &p);
        let w = sk_decode(x1, x2, &p, 1.05);
        assert!((w - 0.5).abs() < 1e-4, "{w}");
    }

    #[test]
    fn noiseless_round_trip_sweep() {
        let p = SpiralParams::default();
        let mut rng = Rng::new(2024);
        let mut max_err: f64 = 0.0;
        for _ in 0..500 {
            let w = rng.uniform(-1.0, 1.0);
            let (x1, x2) = sk_encode(w, &p);
            let got = sk_decode(x1, x2, &p, 1.05);
            max_err = max_err.max((got - w).abs());
        }
        assert!(max_err <= 1e-4, "max error {max_err}");
    }

    #[test]
    fn recursion_depth_one_equals_base_encode() {
        let p = SpiralParams::default();
        let dims = sk_encode_recursive(0.37, &p, 1);
        let (x1, x2) = sk_encode(0.37, &p);
        assert_eq!(dims, vec![x1, x2]);
    }

    #[test]
    fn recursion_depth_two_emits_four_dims_and_round_trips() {
        let p = SpiralParams::default();
        let dims = sk_encode_recursive(0.3, &p, 2);
        assert_eq!(dims.len(), 4);
        let got = sk_decode_recursive(&dims, &p, 2, 1.0);
        assert!((got - 0.3).abs() < 1e-3, "{got}");
    }

    #[test]
    fn sign_recovery_above_threshold() {
        // Documented threshold: |w| >= 1% of w_max.
        for gamma in [2.0 * PI, 4.0 * PI] {
            let p = SpiralParams::with_gamma(gamma);
            let mut rng = Rng::new(77);
            for _ in 0..400 {
                let mag = rng.uniform(0.01, 1.0);
                let w = if rng.next_f64() < 0.5 { mag } else { -mag };
                let (x1, x2) = sk_encode(w, &p);
                let got = sk_decode(x1, x2, &p, 1.05);
                assert!(
                    got.signum() == w.signum(),
                    "sign flip at w={w} gamma={gamma} -> {got}"
                );
            }
        }
    }

    #[test]
    fn branch_distance_shrinks_as_gamma_grows() {
        // Minimum distance from well-separated positive-branch points to the
        // negative branch strictly decreases in gamma. Both branches meet at
        // the origin, so the positive side starts at 0.2 to keep the check
        // meaningful.
        fn min_branch_distance(p: &SpiralParams) -> f64 {
            let n = 2000;
            let w_max = 1.0;
            let mut best = f64::INFINITY;
            let pos: Vec<(f64, f64)> = (0..=n)
                .map(|i| sk_encode(0.2 + (w_max - 0.2) * i as f64 / n as f64, p))
                .collect();
            let neg: Vec<(f64, f64)> = (1..=n)
                .map(|i| sk_encode(-w_max * i as f64 / n as f64, p))
                .collect();
            for &(a, b) in &pos {
                for &(c, d) in &neg {
                    let dist = ((a - c).powi(2) + (b - d).powi(2)).sqrt();
                    if dist < best {
                        best = dist;
                    }
                }
            }
            best
        }

        let gammas = [2.0 * PI, 3.0 * PI, 4.0 * PI, 6.0 * PI];
        let dists: Vec<f64> = gammas
            .iter()
            .map(|&g| min_branch_distance(&SpiralParams::with_gamma(g)))
            .collect();
        for pair in dists.windows(2) {
            assert!(pair[0] > pair[1], "distances not decreasing: {dists:?}");
        }
    }
}
