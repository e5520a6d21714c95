//! Normal draws built directly on uniform output of a seeded generator, so
//! the stream is identical on every platform.

use rand::Rng;

/// One standard normal via the Box-Muller transform.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // 1 - u lies in (0, 1], keeping the logarithm finite
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Componentwise `N(mean_j, sigma^2)`.
pub fn normal_vector<R: Rng>(rng: &mut R, mean: &[f64], sigma: f64) -> Vec<f64> {
    mean.iter().map(|m| m + sigma * standard_normal(rng)).collect()
}

/// Uniform direction on the unit sphere.
pub fn unit_direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}
