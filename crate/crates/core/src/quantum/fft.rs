use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::math;

/// An unnormalised discrete Fourier transform pair on buffers of a fixed
/// power-of-two length.
///
/// `forward` computes `X_k = Σ x_j e^{-2πi jk/n}` and `inverse` the same sum
/// with `e^{+2πi jk/n}`; neither divides by `n`.
pub trait SpectralTransform {
    fn len(&self) -> usize;
    fn forward(&mut self, data: &mut [Complex64]);
    fn inverse(&mut self, data: &mut [Complex64]);
}

/// Iterative radix-2 Cooley–Tukey transform.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl Radix2Fft {
    /// # Panics
    /// If `n` is not a power of two.
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "transform length {n} is not a power of two");
        let bits = n.trailing_zeros();
        let twiddles = (0..n / 2)
            .map(|k| {
                let phase = -2.0 * PI * k as f64 / n as f64;
                Complex64::new(math::cos(phase), math::sin(phase))
            })
            .collect();
        let bitrev = (0..n as u32).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (32 - bits) }).collect();
        Radix2Fft { n, twiddles, bitrev }
    }

    fn run(&self, data: &mut [Complex64], conjugate: bool) {
        assert_eq!(data.len(), self.n);
        for (i, &j) in self.bitrev.iter().enumerate() {
            let j = j as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let stride = self.n / (2 * half);
            for block in data.chunks_exact_mut(2 * half) {
                let (lo, hi) = block.split_at_mut(half);
                for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let w = self.twiddles[k * stride];
                    let w = if conjugate { w.conj() } else { w };
                    let t = *b * w;
                    *b = *a - t;
                    *a += t;
                }
            }
            half *= 2;
        }
    }
}

impl SpectralTransform for Radix2Fft {
    fn len(&self) -> usize {
        self.n
    }

    fn forward(&mut self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    fn inverse(&mut self, data: &mut [Complex64]) {
        self.run(data, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let ph = -2.0 * PI * (j * k % n) as f64 / n as f64;
                        v * Complex64::new(libm::cos(ph), libm::sin(ph))
                    })
                    .sum()
            })
            .collect()
    }

    proptest! {
        #[test]
        fn matches_naive_dft(bits in 0u32..8, seed in any::<u64>()) {
            let n = 1usize << bits;
            let mut state = seed | 1;
            let mut next = || {
                state ^= state << 13; state ^= state >> 7; state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let x: Vec<Complex64> = (0..n).map(|_| Complex64::new(next(), next())).collect();
            let expected = naive_dft(&x);
            let mut fft = Radix2Fft::new(n);
            let mut y = x.clone();
            fft.forward(&mut y);
            for (a, b) in y.iter().zip(&expected) {
                prop_assert!((a - b).norm() < 1e-12 * n as f64);
            }
            fft.inverse(&mut y);
            for (a, b) in y.iter().zip(&x) {
                prop_assert!((a / n as f64 - b).norm() < 1e-12);
            }
        }
    }
}
