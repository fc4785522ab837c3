//! Deterministic synthetic test images with natural-image-like statistics:
//! smooth gradients, multi-octave value noise, a few hard-edged shapes and
//! mild sensor noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::ImageBuffer;

/// Image `index` of the synthetic corpus. Even indices are RGB, odd are gray.
pub fn image(index: u64, width: usize, height: usize) -> ImageBuffer {
    let channels = if index % 2 == 0 { 3 } else { 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + index);

    let octaves: Vec<ValueNoise> = (0..4).map(|o| ValueNoise::new(&mut rng, 4 << o)).collect();
    let tint: Vec<[f64; 3]> = (0..channels).map(|_| [rng.gen_range(0.6..1.4), rng.gen_range(-60.0..60.0), rng.gen_range(-40.0..40.0)]).collect();
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let shapes: Vec<Shape> = (0..rng.gen_range(2..6)).map(|_| Shape::random(&mut rng, channels)).collect();
    let noise_sigma = rng.gen_range(0.5..3.0);

    let mut samples = Vec::with_capacity(width * height * channels);
    for y in 0..height {
        for x in 0..width {
            let (u, v) = (x as f64 / width as f64, y as f64 / height as f64);
            let mut n = 0.0;
            let mut amp = 1.0;
            for o in &octaves {
                n += amp * o.sample(u, v);
                amp *= 0.5;
            }
            let ramp = (u - 0.5) * angle.cos() + (v - 0.5) * angle.sin();
            for (c, t) in tint.iter().enumerate() {
                let mut val = 128.0 + t[0] * 70.0 * n + t[1] * ramp + t[2] * (n * 3.0).sin();
                for s in &shapes {
                    if s.contains(u, v) {
                        val = val * 0.3 + s.color[c] * 0.7;
                    }
                }
                // Box-Muller gives deterministic Gaussian noise without another crate.
                let g = (-2.0 * rng.gen_range(1e-12f64..1.0).ln()).sqrt() * (std::f64::consts::TAU * rng.gen::<f64>()).cos();
                samples.push((val + noise_sigma * g).round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    ImageBuffer::new(width, height, channels, samples).expect("valid synthetic image")
}

/// The first `count` corpus images, all `width`×`height`.
pub fn corpus(count: usize, width: usize, height: usize) -> Vec<ImageBuffer> {
    (0..count as u64).map(|i| image(i, width, height)).collect()
}

/// Bilinearly interpolated lattice of random values in [-1, 1].
struct ValueNoise {
    cells: usize,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, cells: usize) -> Self {
        let lattice = (0..(cells + 1) * (cells + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self { cells, lattice }
    }

    fn sample(&self, u: f64, v: f64) -> f64 {
        let (fx, fy) = (u * self.cells as f64, v * self.cells as f64);
        let (x0, y0) = ((fx as usize).min(self.cells - 1), (fy as usize).min(self.cells - 1));
        let (tx, ty) = (smooth(fx - x0 as f64), smooth(fy - y0 as f64));
        let at = |x: usize, y: usize| self.lattice[y * (self.cells + 1) + x];
        let top = at(x0, y0) * (1.0 - tx) + at(x0 + 1, y0) * tx;
        let bottom = at(x0, y0 + 1) * (1.0 - tx) + at(x0 + 1, y0 + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

struct Shape {
    cx: f64,
    cy: f64,
    r: f64,
    disc: bool,
    color: [f64; 3],
}

impl Shape {
    fn random(rng: &mut ChaCha8Rng, channels: usize) -> Self {
        let mut color = [0.0; 3];
        for c in color.iter_mut().take(channels) {
            *c = rng.gen_range(0.0..255.0);
        }
        Self {
            cx: rng.gen_range(0.1..0.9),
            cy: rng.gen_range(0.1..0.9),
            r: rng.gen_range(0.05..0.25),
            disc: rng.gen_bool(0.5),
            color,
        }
    }

    fn contains(&self, u: f64, v: f64) -> bool {
        let (dx, dy) = (u - self.cx, v - self.cy);
        if self.disc {
            dx * dx + dy * dy < self.r * self.r
        } else {
            dx.abs() < self.r && dy.abs() < self.r * 0.6
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_varied() {
        let a = corpus(3, 32, 24);
        let b = corpus(3, 32, 24);
        assert_eq!(a, b);
        assert_eq!(a[0].channels(), 3);
        assert_eq!(a[1].channels(), 1);
        assert_ne!(a[0].samples(), a[2].samples());
        let s = a[1].samples();
        let (lo, hi) = (s.iter().min().unwrap(), s.iter().max().unwrap());
        assert!(hi - lo > 40, "too flat: {lo}..{hi}");
    }
}
