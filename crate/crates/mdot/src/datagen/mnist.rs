//! MNIST images as OT instances: L1 grid cost and noisy pixel-intensity
//! distributions.

use rand::Rng;

use crate::plan::CostMatrix;

pub const MNIST_SIDE: usize = 28;
pub const MNIST_PIXELS: usize = MNIST_SIDE * MNIST_SIDE;

/// Maximum L1 distance on the 28x28 grid: (27 - 0) + (27 - 0).
const MAX_GRID_DISTANCE: f64 = 54.0;

/// Amplitude of the uniform noise injected before normalization.
const NOISE_AMPLITUDE: f64 = 1e-6;

/// 784x784 cost matrix: L1 distance between pixel locations on the 28x28
/// grid, divided by the maximum distance so entries land in `[0, 1]`.
pub fn mnist_cost_matrix() -> CostMatrix {
    let n = MNIST_PIXELS;
    let mut entries = vec![0.0; n * n];
    for a in 0..n {
        let (ax, ay) = (a / MNIST_SIDE, a % MNIST_SIDE);
        for b in 0..n {
            let (bx, by) = (b / MNIST_SIDE, b % MNIST_SIDE);
            let d = (ax as f64 - bx as f64).abs() + (ay as f64 - by as f64).abs();
            entries[a * n + b] = d / MAX_GRID_DISTANCE;
        }
    }
    CostMatrix::new(n, entries).expect("grid distances are in [0,1] by construction")
}

/// Flatten a 28x28 image, add uniform `U(0, 1e-6)` noise to every pixel, and
/// L1-normalize. The result is strictly positive.
pub fn mnist_to_distribution(image: &[u8], rng: &mut impl Rng) -> Vec<f64> {
    debug_assert_eq!(image.len(), MNIST_PIXELS);
    let mut v: Vec<f64> = image
        .iter()
        .map(|&p| {
            let noise: f64 = rng.random_range(0.0..NOISE_AMPLITUDE);
            let x = p as f64 + noise;
            // a zero pixel with a zero noise draw would violate positivity
            if x > 0.0 {
                x
            } else {
                f64::MIN_POSITIVE
            }
        })
        .collect();
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::entropy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cost_matrix_corner_values() {
        let c = mnist_cost_matrix();
        // diagonal zero
        assert_eq!(c.entry(0, 0), 0.0);
        assert_eq!(c.entry(500, 500), 0.0);
        // opposite corners: (0,0) vs (27,27)
        let far = 27 * MNIST_SIDE + 27;
        assert_eq!(c.entry(0, far), 1.0);
        // (0,0) vs (0,27): 27/54
        assert_eq!(c.entry(0, 27), 0.5);
        // symmetric
        assert_eq!(c.entry(13, 400), c.entry(400, 13));
    }

    #[test]
    fn all_zero_image_becomes_near_uniform_noise() {
        let image = [0u8; MNIST_PIXELS];
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = mnist_to_distribution(&image, &mut rng);
        let sum: f64 = v.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
        assert!(v.iter().all(|&x| x > 0.0));
        let h = entropy(&v);
        let max_h = (MNIST_PIXELS as f64).ln();
        assert!(h > 0.95 * max_h, "noise-only entropy {h} vs max {max_h}");
    }

    #[test]
    fn distribution_is_normalized_and_deterministic() {
        let mut image = [0u8; MNIST_PIXELS];
        for (i, p) in image.iter_mut().enumerate() {
            *p = ((i * 7) % 251) as u8;
        }
        let a = mnist_to_distribution(&image, &mut ChaCha8Rng::seed_from_u64(9));
        let b = mnist_to_distribution(&image, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let sum: f64 = a.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-12);
    }
}
