//! Orthonormal 8×8 DCT-II / DCT-III and zigzag scan order.

use std::sync::OnceLock;

pub type Block = [f64; 64];

/// `ZIGZAG[i]` is the row-major position of the `i`-th coefficient in scan order.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Row `k` holds the `k`-th orthonormal cosine basis vector.
fn basis() -> &'static [[f64; 8]; 8] {
    static BASIS: OnceLock<[[f64; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut m = [[0.0; 8]; 8];
        for (k, row) in m.iter_mut().enumerate() {
            let scale = if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            for (n, v) in row.iter_mut().enumerate() {
                *v = scale * (std::f64::consts::PI * (2 * n + 1) as f64 * k as f64 / 16.0).cos();
            }
        }
        m
    })
}

/// 2-D DCT-II of a row-major block.
pub fn dct8_forward(block: &Block) -> Block {
    let b = basis();
    let mut tmp = [0.0; 64];
    // Rows.
    for y in 0..8 {
        for k in 0..8 {
            tmp[y * 8 + k] = (0..8).map(|x| b[k][x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    // Columns.
    for x in 0..8 {
        for k in 0..8 {
            out[k * 8 + x] = (0..8).map(|y| b[k][y] * tmp[y * 8 + x]).sum();
        }
    }
    out
}

/// 2-D DCT-III, the exact inverse of [`dct8_forward`].
pub fn dct8_inverse(coeffs: &Block) -> Block {
    let b = basis();
    let mut tmp = [0.0; 64];
    for x in 0..8 {
        for y in 0..8 {
            tmp[y * 8 + x] = (0..8).map(|k| b[k][y] * coeffs[k * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|k| b[k][x] * tmp[y * 8 + k]).sum();
        }
    }
    out
}
