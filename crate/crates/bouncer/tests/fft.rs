use fermi_bouncer::PlannedFft;
use fermi_core::quantum::{Radix2Fft, SpectralTransform};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn planned_matches_radix2(bits in 1u32..12, seed in any::<u64>()) {
        let n = 1usize << bits;
        let mut x = seed;
        let data: Vec<Complex64> = (0..n)
            .map(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                Complex64::new(a, b)
            })
            .collect();
        let (mut a, mut b) = (data.clone(), data.clone());
        PlannedFft::new(n).forward(&mut a);
        Radix2Fft::new(n).forward(&mut b);
        let scale = n as f64;
        for (u, v) in a.iter().zip(&b) {
            prop_assert!((u - v).norm() < 1e-12 * scale);
        }
        PlannedFft::new(n).inverse(&mut a);
        for (u, v) in a.iter().zip(&data) {
            prop_assert!((u / scale - v).norm() < 1e-12);
        }
    }
}
