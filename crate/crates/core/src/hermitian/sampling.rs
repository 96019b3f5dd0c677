//! Seeded random instances for the property suites. Every generator takes
//! its RNG explicitly; suites derive one stream per instance so runs are
//! reproducible and parallelizable.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ops::standard_normal;
use super::{FirstJet, HermitianForm, MetricForm};

/// Independent per-instance stream: one master seed, one index.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(standard_normal(rng), standard_normal(rng))
}

/// Well-conditioned random positive metric `A A^† + 0.05 I`.
pub fn random_metric(n: usize, rng: &mut ChaCha8Rng) -> MetricForm {
    let a: Vec<Complex64> = (0..n * n).map(|_| random_complex(rng)).collect();
    let form = HermitianForm::from_lower(n, |i, j| {
        let mut acc = Complex64::ZERO;
        for k in 0..n {
            acc += a[i * n + k] * a[j * n + k].conj();
        }
        acc / n as f64
            + if i == j {
                Complex64::new(0.05, 0.0)
            } else {
                Complex64::ZERO
            }
    });
    MetricForm::new(form).expect("A A^† + 0.05 I is positive definite")
}

pub fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> HermitianForm {
    let raw: Vec<Complex64> = (0..n * n).map(|_| random_complex(rng)).collect();
    HermitianForm::from_lower(n, |i, j| {
        if i == j {
            Complex64::new(raw[i * n + i].re, 0.0)
        } else {
            raw[i * n + j]
        }
    })
}

/// Fully random jet with no symmetry imposed.
pub fn random_raw_jet(n: usize, rng: &mut ChaCha8Rng) -> FirstJet {
    let entries: Vec<Complex64> = (0..n * n * n).map(|_| random_complex(rng)).collect();
    FirstJet::from_entries_unchecked(n, entries)
}

/// Random jet satisfying both structural invariants: symmetric in the two
/// holomorphic slots and conjugate-symmetric in its Hermitian pair.
pub fn random_kahler_jet(n: usize, rng: &mut ChaCha8Rng) -> FirstJet {
    let raw: Vec<f64> = (0..n * n * n).map(|_| standard_normal(rng)).collect();
    let mut entries = vec![Complex64::ZERO; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                // real + totally symmetric satisfies both invariants
                let mut idx = [k, i, j];
                idx.sort_unstable();
                let v = raw[(idx[0] * n + idx[1]) * n + idx[2]];
                entries[(k * n + i) * n + j] = Complex64::new(v, 0.0);
            }
        }
    }
    FirstJet::new(n, entries).expect("symmetrized jet is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_sampler_yields_positive_forms() {
        let mut rng = instance_rng(42, 0);
        for n in 1..=3 {
            let g = random_metric(n, &mut rng);
            assert!(g.det() > 0.0);
        }
    }

    #[test]
    fn kahler_jet_sampler_passes_validation() {
        let mut rng = instance_rng(42, 1);
        let jet = random_kahler_jet(3, &mut rng);
        assert_eq!(jet.dim(), 3);
    }

    #[test]
    fn instance_streams_are_reproducible() {
        let a = random_metric(2, &mut instance_rng(9, 4));
        let b = random_metric(2, &mut instance_rng(9, 4));
        assert_eq!(a.form().entries(), b.form().entries());
    }
}
