//! Iterative radix-2 FFT used by the frequency-domain features.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::{HarError, Result};

/// In-place decimation-in-time radix-2 FFT. Length must be a power of two.
pub fn fft_in_place(data: &mut [Complex64]) -> Result<()> {
    let n = data.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(HarError::InvalidInput(format!(
            "FFT length {n} is not a power of two; use a power-of-two window"
        )));
    }
    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i as u32).reverse_bits() >> (32 - bits);
        let j = j as usize;
        if j > i {
            data.swap(i, j);
        }
    }
    // butterfly stages
    let mut len = 2;
    while len <= n {
        let angle = -2.0 * PI / len as f64;
        let w_len = Complex64::new(angle.cos(), angle.sin());
        for chunk in data.chunks_mut(len) {
            let mut w = Complex64::new(1.0, 0.0);
            let half = len / 2;
            for k in 0..half {
                let u = chunk[k];
                let v = chunk[k + half] * w;
                chunk[k] = u + v;
                chunk[k + half] = u - v;
                w *= w_len;
            }
        }
        len <<= 1;
    }
    Ok(())
}

/// Forward transform of a real signal.
pub fn fft_real(signal: &[f64]) -> Result<Vec<Complex64>> {
    let mut data: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_in_place(&mut data)?;
    Ok(data)
}

/// Direct O(n^2) DFT, kept as an independent oracle for the radix-2 path.
pub fn dft_reference(signal: &[f64]) -> Vec<Complex64> {
    let n = signal.len();
    (0..n)
        .map(|k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &x) in signal.iter().enumerate() {
                let angle = -2.0 * PI * (k * t) as f64 / n as f64;
                acc += x * Complex64::new(angle.cos(), angle.sin());
            }
            acc
        })
        .collect()
}
