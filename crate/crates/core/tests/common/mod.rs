#![allow(dead_code)]

use flowfield::{Camera, Mat3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Camera one meter in front of the world origin on `+z`, looking back at it,
/// image `y` pointing down the world `y` axis.
pub fn front_camera(width: usize, height: usize) -> Camera {
    let r = Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0));
    let f = 2.5 * width as f64;
    Camera::new(
        f,
        f,
        width as f64 / 2.0,
        height as f64 / 2.0,
        r,
        Vec3::new(0.0, 0.0, 1.0),
        width,
        height,
    )
    .unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_in_box(rng: &mut ChaCha8Rng, lo: &Vec3, hi: &Vec3) -> Vec3 {
    Vec3::new(
        rng.gen_range(lo.x..hi.x),
        rng.gen_range(lo.y..hi.y),
        rng.gen_range(lo.z..hi.z),
    )
}

/// Bounding box of `pts` scaled by `factor` about its center.
pub fn scaled_bounds(lo: Vec3, hi: Vec3, factor: f64) -> (Vec3, Vec3) {
    let c = (lo + hi) / 2.0;
    let h = (hi - lo) / 2.0 * factor;
    (c - h, c + h)
}

pub fn rotation(axis: Vec3, degrees: f64) -> Mat3 {
    *nalgebra::Rotation3::from_axis_angle(
        &nalgebra::Unit::new_normalize(axis),
        degrees.to_radians(),
    )
    .matrix()
}
