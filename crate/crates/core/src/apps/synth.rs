//! Seeded synthetic inputs, so runs are reproducible without external data.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dpd::{DpdConfigToken, DpdTaps, BRANCHES, MAX_ACTIVE, MIN_ACTIVE};
use super::motion::Frame;

/// Noise frames with a bright square drifting across them, so consecutive
/// frames differ in a structured way as well as by noise.
pub fn frames(seed: u64, count: usize, width: usize, height: usize) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = (width.min(height) / 6).max(1);
    (0..count)
        .map(|i| {
            let mut pixels: Vec<u8> = (0..width * height).map(|_| rng.gen_range(0..64)).collect();
            let x0 = (i * 3) % width.max(1);
            let y0 = (i * 2) % height.max(1);
            for y in y0..(y0 + side).min(height) {
                for x in x0..(x0 + side).min(width) {
                    pixels[y * width + x] = 200 + rng.gen_range(0..56);
                }
            }
            Frame {
                width,
                height,
                pixels,
            }
        })
        .collect()
}

/// Complex noise with magnitude below 1.
pub fn samples(seed: u64, count: usize) -> Vec<Complex<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Complex::new(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)))
        .collect()
}

/// Taps that decay with branch order, as predistorter coefficients do.
pub fn taps(seed: u64) -> DpdTaps<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taps = DpdTaps::identity();
    for (b, branch) in taps.branches.iter_mut().enumerate() {
        let scale = 1.0 / (b + 1) as f32;
        for t in branch.iter_mut() {
            *t = Complex::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
        }
    }
    taps
}

/// `len` configurations with random sizes in [2, 10] and random members.
pub fn schedule(seed: u64, len: usize) -> Vec<DpdConfigToken> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len.max(1))
        .map(|_| {
            let k = rng.gen_range(MIN_ACTIVE..=MAX_ACTIVE);
            let picked = rand::seq::index::sample(&mut rng, BRANCHES, k);
            DpdConfigToken::from_indices(picked.iter()).expect("k in range")
        })
        .collect()
}

/// Active counts 2, 3, ..., 10.
pub fn cycling_schedule() -> Vec<DpdConfigToken> {
    (MIN_ACTIVE..=MAX_ACTIVE)
        .map(|k| DpdConfigToken::first(k).expect("k in range"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_in_range() {
        assert_eq!(frames(3, 4, 16, 12), frames(3, 4, 16, 12));
        assert_ne!(frames(3, 2, 16, 12), frames(4, 2, 16, 12));
        assert_eq!(samples(1, 100), samples(1, 100));
        assert!(samples(1, 1000).iter().all(|s| s.norm() < 1.0));
        for t in schedule(9, 200) {
            assert!((2..=10).contains(&t.active_count()));
        }
        assert_eq!(cycling_schedule().len(), 9);
    }
}
