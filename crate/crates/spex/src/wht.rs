//! Boolean (Walsh-Hadamard) Fourier transforms.
//!
//! Conventions: the forward transform carries the 1/2^dim factor, the
//! inverse carries none, so `inverse(forward(f)) == f` and a function with a
//! single unit coefficient takes values +-1. Array index `m` maps to a mask
//! via [`BinaryVector::from_index`].

use crate::error::{Error, Result};
use crate::gf2::BinaryVector;

/// Cap for the exhaustive reference transform.
pub const BRUTE_FORCE_CAP: usize = 20;

/// A dense table of coefficients (or samples) over F2^dim.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSpectrum {
    dim: usize,
    values: Vec<f64>,
}

impl DenseSpectrum {
    pub fn new(dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1usize << dim);
        DenseSpectrum { dim, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, k: &BinaryVector) -> f64 {
        self.values[k.to_index()]
    }

    #[inline]
    pub fn get_index(&self, k: usize) -> f64 {
        self.values[k]
    }
}

fn butterfly(data: &mut [f64]) {
    let n = data.len();
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let x = *a;
                let y = *b;
                *a = x + y;
                *b = x - y;
            }
        }
        h <<= 1;
    }
}

fn check_power_of_two(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Forward transform with 1/2^dim normalization, O(dim 2^dim).
pub fn wht_forward(samples: &[f64]) -> Result<DenseSpectrum> {
    let dim = check_power_of_two(samples.len())?;
    let mut values = samples.to_vec();
    butterfly(&mut values);
    let scale = 1.0 / samples.len() as f64;
    for v in &mut values {
        *v *= scale;
    }
    Ok(DenseSpectrum { dim, values })
}

/// Inverse transform (unnormalized butterfly).
pub fn wht_inverse(spectrum: &DenseSpectrum) -> Vec<f64> {
    let mut values = spectrum.values.clone();
    butterfly(&mut values);
    values
}

/// Exhaustive reference spectrum: queries the oracle at all 2^n masks.
pub fn brute_force_spectrum<F>(mut oracle: F, n: usize) -> Result<DenseSpectrum>
where
    F: FnMut(&BinaryVector) -> f64,
{
    if n > BRUTE_FORCE_CAP {
        return Err(Error::DenseCapExceeded {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let samples: Vec<f64> = (0..1usize << n)
        .map(|m| oracle(&BinaryVector::from_index(m, n)))
        .collect();
    wht_forward(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::{dot_parity, gf2_matvec, gf2_matvec_t, random_binary_matrix};
    use crate::seeds::substream;
    use rand::Rng;

    fn random_samples(b: usize, rng: &mut impl Rng) -> Vec<f64> {
        (0..1usize << b).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// O(4^b) double sum straight from the definition.
    fn naive_forward(samples: &[f64], b: usize) -> Vec<f64> {
        (0..1usize << b)
            .map(|k| {
                let kv = BinaryVector::from_index(k, b);
                let mut acc = 0.0;
                for (m, &v) in samples.iter().enumerate() {
                    let mv = BinaryVector::from_index(m, b);
                    let sign = if dot_parity(&kv, &mv).unwrap() { -1.0 } else { 1.0 };
                    acc += sign * v;
                }
                acc / samples.len() as f64
            })
            .collect()
    }

    #[test]
    fn constant_function_concentrates_at_zero() {
        let spec = wht_forward(&vec![2.5; 32]).unwrap();
        assert_eq!(spec.get_index(0), 2.5);
        assert!(spec.values()[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pure_parity_is_a_single_coefficient() {
        let b = 5;
        let k0 = BinaryVector::from_index(0b10110, b);
        let samples: Vec<f64> = (0..1usize << b)
            .map(|m| {
                let mv = BinaryVector::from_index(m, b);
                if dot_parity(&mv, &k0).unwrap() { -1.0 } else { 1.0 }
            })
            .collect();
        let spec = wht_forward(&samples).unwrap();
        for k in 0..1usize << b {
            let expect = if k == k0.to_index() { 1.0 } else { 0.0 };
            assert!((spec.get_index(k) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_naive_double_sum() {
        let b = 6;
        let samples = random_samples(b, &mut substream(21, "wht"));
        let fast = wht_forward(&samples).unwrap();
        let naive = naive_forward(&samples, b);
        for (f, n) in fast.values().iter().zip(&naive) {
            assert!((f - n).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let mut rng = substream(22, "wht");
        for b in 1..=12 {
            let samples = random_samples(b, &mut rng);
            let spec = wht_forward(&samples).unwrap();
            let back = wht_inverse(&spec);
            for (a, b) in samples.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
            let lhs: f64 = samples.iter().map(|v| v * v).sum();
            let rhs: f64 = spec.values().iter().map(|v| v * v).sum::<f64>()
                * samples.len() as f64;
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn single_entry_inverse() {
        let mut values = vec![0.0; 16];
        let k0 = 0b0110;
        values[k0] = 2.0;
        let spec = DenseSpectrum::new(4, values);
        let f = wht_inverse(&spec);
        for (m, &v) in f.iter().enumerate() {
            let mv = BinaryVector::from_index(m, 4);
            let kv = BinaryVector::from_index(k0, 4);
            let expect = if dot_parity(&mv, &kv).unwrap() { -2.0 } else { 2.0 };
            assert_eq!(v, expect);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(wht_forward(&vec![0.0; 12]).is_err());
        assert!(wht_forward(&[]).is_err());
    }

    #[test]
    fn brute_force_on_two_feature_and_game() {
        // f(m) = m0 * m1 has all four coefficients at magnitude 1/4.
        let spec = brute_force_spectrum(
            |m| if m.get(0) && m.get(1) { 1.0 } else { 0.0 },
            2,
        )
        .unwrap();
        assert!((spec.get_index(0b00) - 0.25).abs() < 1e-15);
        assert!((spec.get_index(0b01) + 0.25).abs() < 1e-15);
        assert!((spec.get_index(0b10) + 0.25).abs() < 1e-15);
        assert!((spec.get_index(0b11) - 0.25).abs() < 1e-15);
        assert!(brute_force_spectrum(|_| 0.0, 21).is_err());
    }

    #[test]
    fn aliasing_identity() {
        // Transform of l -> f(M^T l) bins coefficients by M k = j.
        let mut rng = substream(23, "wht");
        for _ in 0..10 {
            let n = rng.gen_range(4..=10);
            let b = rng.gen_range(1..=n.min(6));
            let samples = random_samples(n, &mut rng);
            let full = wht_forward(&samples).unwrap();
            let m = random_binary_matrix(b, n, &mut rng);

            let sub: Vec<f64> = (0..1usize << b)
                .map(|l| {
                    let lv = BinaryVector::from_index(l, b);
                    samples[gf2_matvec_t(&m, &lv).unwrap().to_index()]
                })
                .collect();
            let sub_spec = wht_forward(&sub).unwrap();

            let mut binned = vec![0.0; 1 << b];
            for k in 0..1usize << n {
                let kv = BinaryVector::from_index(k, n);
                let j = gf2_matvec(&m, &kv).unwrap().to_index();
                binned[j] += full.get_index(k);
            }
            for (a, b) in sub_spec.values().iter().zip(&binned) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn shift_identity() {
        // Transform of m -> f(m ^ p) modulates coefficients by (-1)^<p,k>.
        let mut rng = substream(24, "wht");
        for _ in 0..10 {
            let n = rng.gen_range(3..=10);
            let samples = random_samples(n, &mut rng);
            let full = wht_forward(&samples).unwrap();
            let p = rng.gen_range(0..1usize << n);

            let shifted: Vec<f64> = (0..1usize << n).map(|m| samples[m ^ p]).collect();
            let shifted_spec = wht_forward(&shifted).unwrap();

            let pv = BinaryVector::from_index(p, n);
            for k in 0..1usize << n {
                let kv = BinaryVector::from_index(k, n);
                let sign = if dot_parity(&pv, &kv).unwrap() { -1.0 } else { 1.0 };
                assert!((shifted_spec.get_index(k) - sign * full.get_index(k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn transform_is_linear() {
        let mut rng = substream(25, "wht");
        let b = 7;
        let f = random_samples(b, &mut rng);
        let g = random_samples(b, &mut rng);
        let combo: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
        let sf = wht_forward(&f).unwrap();
        let sg = wht_forward(&g).unwrap();
        let sc = wht_forward(&combo).unwrap();
        for i in 0..1usize << b {
            let expect = 2.0 * sf.get_index(i) - 0.5 * sg.get_index(i);
            assert!((sc.get_index(i) - expect).abs() < 1e-12);
        }
    }
}
