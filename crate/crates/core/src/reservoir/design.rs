//! Point sets on products of Euclidean balls, used wherever a map has to be
//! compared or fitted over `{‖x‖ ≤ L} × {‖z‖ ≤ M}`.

use nalgebra::DVector;

use crate::{rng, Real};

const PRIMES: [u32; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107,
    109, 113, 127, 131,
];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut out) = (inv, 0.0);
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// Point `index` of the Halton sequence in `[0,1)^dim`. Dimensions past the
/// prime table fall back to scrambled repeats of the last bases.
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let base = PRIMES[k % PRIMES.len()] as u64 + 2 * (k / PRIMES.len()) as u64 * 131;
            radical_inverse(index + 1, base)
        })
        .collect()
}

/// Radial map from `[-1,1]^d` onto the unit ball: `c ↦ c·‖c‖_∞/‖c‖₂`.
fn cube_to_ball(c: &[f64]) -> Vec<f64> {
    let two = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if two == 0.0 {
        return c.to_vec();
    }
    let inf = c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    c.iter().map(|x| x * inf / two).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DesignSizes {
    pub quasi_random: usize,
    pub random: usize,
    pub boundary: usize,
}

impl DesignSizes {
    pub fn total(&self) -> usize {
        self.quasi_random + self.random + self.boundary
    }
}

/// Samples `(x, z)` on the ball product: Halton points pushed through a radial
/// cube-to-ball map, uniform random points, and points with both factors on
/// their spheres.
pub fn ball_product_design<T: Real>(
    state_dim: usize,
    state_bound: T,
    input_dim: usize,
    input_bound: T,
    sizes: DesignSizes,
    seed: u64,
) -> Vec<(DVector<T>, DVector<T>)> {
    let (l, m) = (state_bound.as_f64(), input_bound.as_f64());
    let d = state_dim + input_dim;
    let mut out = Vec::with_capacity(sizes.total());
    let skip = rng::substream_seed(seed, "halton-skip") % 1024;
    for i in 0..sizes.quasi_random {
        let c: Vec<f64> = halton(skip + i as u64, d).into_iter().map(|u| 2.0 * u - 1.0).collect();
        let x = cube_to_ball(&c[..state_dim]);
        let z = cube_to_ball(&c[state_dim..]);
        out.push((
            rng::clamp_norm(DVector::from_iterator(state_dim, x.iter().map(|v| T::lit(v * l))), state_bound),
            rng::clamp_norm(DVector::from_iterator(input_dim, z.iter().map(|v| T::lit(v * m))), input_bound),
        ));
    }
    let mut r = rng::stream(seed, "ball-product-random");
    for _ in 0..sizes.random {
        out.push((rng::in_ball(&mut r, state_dim, l), rng::in_ball(&mut r, input_dim, m)));
    }
    let mut r = rng::stream(seed, "ball-product-boundary");
    for _ in 0..sizes.boundary {
        out.push((rng::on_sphere(&mut r, state_dim, l), rng::on_sphere(&mut r, input_dim, m)));
    }
    out
}
