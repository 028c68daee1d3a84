#![allow(dead_code)]

use patchnoise::{derive_stream, ImageTensor, RngStream};

pub fn random_image(rng: &mut RngStream, h: usize, w: usize, c: usize) -> ImageTensor {
    let data = (0..h * w * c).map(|_| rng.next_unit() as f32).collect();
    ImageTensor::new(h, w, c, data).unwrap()
}

pub fn random_images(seed: u64, n: usize, h: usize, w: usize, c: usize) -> Vec<ImageTensor> {
    let mut rng = derive_stream(seed, 0, "test-images");
    (0..n).map(|_| random_image(&mut rng, h, w, c)).collect()
}

pub fn random_plane(seed: u64, h: usize, w: usize) -> patchnoise::Plane {
    let mut rng = derive_stream(seed, 0, "test-plane");
    patchnoise::Plane::new(h, w, (0..h * w).map(|_| rng.next_unit()).collect()).unwrap()
}
