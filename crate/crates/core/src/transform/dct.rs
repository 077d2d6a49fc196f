//! Orthonormal 8×8 type-II DCT.

use std::sync::OnceLock;

pub type Block = [[f64; 8]; 8];

/// `A[k][n] = c_k cos((2n + 1) k π / 16)`, `c_0 = √(1/8)`, `c_k = √(2/8)`.
pub fn dct_matrix() -> &'static Block {
    static A: OnceLock<Block> = OnceLock::new();
    A.get_or_init(|| {
        let mut a = [[0.0; 8]; 8];
        for (k, row) in a.iter_mut().enumerate() {
            let c = if k == 0 { (1.0f64 / 8.0).sqrt() } else { 0.5 };
            for (n, v) in row.iter_mut().enumerate() {
                *v = c * ((2 * n + 1) as f64 * k as f64 * std::f64::consts::PI / 16.0).cos();
            }
        }
        a
    })
}

/// `A X Aᵀ`.
pub fn dct8_forward(block: &Block) -> Block {
    let a = dct_matrix();
    let mut tmp = [[0.0; 8]; 8];
    for k in 0..8 {
        for j in 0..8 {
            tmp[k][j] = (0..8).map(|n| a[k][n] * block[n][j]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for k in 0..8 {
        for l in 0..8 {
            out[k][l] = (0..8).map(|j| tmp[k][j] * a[l][j]).sum();
        }
    }
    out
}

/// `Aᵀ Y A`.
pub fn dct8_inverse(coeffs: &Block) -> Block {
    let a = dct_matrix();
    let mut tmp = [[0.0; 8]; 8];
    for n in 0..8 {
        for l in 0..8 {
            tmp[n][l] = (0..8).map(|k| a[k][n] * coeffs[k][l]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for n in 0..8 {
        for m in 0..8 {
            out[n][m] = (0..8).map(|l| tmp[n][l] * a[l][m]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn orthonormal() {
        let a = dct_matrix();
        for i in 0..8 {
            for j in 0..8 {
                let d: f64 = (0..8).map(|k| a[k][i] * a[k][j]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_and_constant_blocks() {
        assert_eq!(dct8_forward(&[[0.0; 8]; 8]), [[0.0; 8]; 8]);
        let y = dct8_forward(&[[3.5; 8]; 8]);
        assert!((y[0][0] - 28.0).abs() < 1e-12);
        for k in 0..8 {
            for l in 0..8 {
                if k + l > 0 {
                    assert!(y[k][l].abs() < 1e-12);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn roundtrip_and_energy(vals in proptest::collection::vec(-255.0f64..255.0, 64)) {
            let mut b = [[0.0; 8]; 8];
            for (i, v) in vals.iter().enumerate() {
                b[i / 8][i % 8] = *v;
            }
            let y = dct8_forward(&b);
            let back = dct8_inverse(&y);
            let mut e_in = 0.0;
            let mut e_out = 0.0;
            for i in 0..8 {
                for j in 0..8 {
                    prop_assert!((back[i][j] - b[i][j]).abs() < 1e-10);
                    e_in += b[i][j] * b[i][j];
                    e_out += y[i][j] * y[i][j];
                }
            }
            prop_assert!((e_in - e_out).abs() <= 1e-9 * e_in.max(1.0));
        }
    }
}
