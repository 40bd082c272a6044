//! Seeded randomness. Every stage draws from a named substream of a root seed
//! so that changing one stage's configuration leaves the others untouched.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::Real;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of the substream `name` from `root`.
pub fn substream_seed(root: u64, name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(root ^ splitmix64(h))
}

pub fn stream(root: u64, name: &str) -> StreamRng {
    ChaCha8Rng::seed_from_u64(substream_seed(root, name))
}

pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw on the sphere of the given radius.
pub fn on_sphere<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> DVector<T> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return DVector::from_iterator(dim, v.iter().map(|x| T::lit(x / norm * radius)));
        }
    }
}

/// Uniform draw on the closed Euclidean ball of the given radius.
pub fn in_ball<T: Real, R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> DVector<T> {
    if dim == 0 {
        return DVector::zeros(0);
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / dim as f64);
    clamp_norm(on_sphere(rng, dim, r), T::lit(radius))
}

/// Rescales `v` onto the ball of radius `radius` if rounding pushed it outside.
pub fn clamp_norm<T: Real>(v: DVector<T>, radius: T) -> DVector<T> {
    let n = v.norm();
    if n > radius {
        v * (radius / n)
    } else {
        v
    }
}

pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ_by_name_and_root() {
        assert_ne!(substream_seed(1, "a"), substream_seed(1, "b"));
        assert_ne!(substream_seed(1, "a"), substream_seed(2, "a"));
        assert_eq!(substream_seed(7, "fit"), substream_seed(7, "fit"));
    }

    #[test]
    fn ball_draws_stay_inside() {
        let mut rng = seeded(3);
        for dim in 1..6 {
            for _ in 0..500 {
                let v: DVector<f64> = in_ball(&mut rng, dim, 0.7);
                assert!(v.norm() <= 0.7);
            }
        }
    }
}
