use crate::geom::Vec3;

/// Quasi-uniform directions on the unit sphere (Fibonacci lattice).
pub fn generate_launch_directions(count: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let n = count as f64;
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let (s, c) = (golden * i as f64).sin_cos();
            Vec3::new(r * c, r * s, z).normalized()
        })
        .collect()
}

/// Smallest lattice in a nested launch.
pub const MIN_LEVEL_RAYS: usize = 32;

/// Lattice sizes `count/2, count/4, …` (down to [`MIN_LEVEL_RAYS`]) that share
/// a launch budget of `count` rays.
///
/// The levels for `2·count` are those for `count` plus one lattice of
/// `count` rays, so doubling the budget only ever adds rays.
pub fn launch_levels(count: usize) -> Vec<usize> {
    let mut levels = Vec::new();
    let mut n = count / 2;
    while n >= MIN_LEVEL_RAYS {
        levels.push(n);
        n /= 2;
    }
    if levels.is_empty() && count > 0 {
        levels.push(count);
    }
    levels
}

/// Mean angular spacing between `count` uniformly spread rays, radians.
pub fn mean_ray_spacing(count: usize) -> f64 {
    (4.0 * std::f64::consts::PI / count.max(1) as f64).sqrt()
}
