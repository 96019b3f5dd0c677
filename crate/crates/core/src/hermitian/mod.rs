//! Pointwise Hermitian linear algebra on `C^n` for small `n`.
//!
//! Everything in here is frame-level: Hermitian forms, positive metrics,
//! Kähler curvature tensors and metric first jets, together with the
//! algebraic contractions and inequalities that the flow diagnostics lean
//! on. All values are immutable after construction and safe to share
//! across threads.

use num_complex::Complex64;
use thiserror::Error;

mod ops;
pub mod sampling;

pub use ops::{
    constant_hsc_curvature, curvature_norm, eigen_sandwich_bound, hsc_eval, hsc_sup_estimate,
    royden_check, trace_of, yau_identity_terms, RoydenCheck, YauTerms,
};

/// Relative tolerance for the structural validators (conjugate symmetry,
/// Kähler symmetries). Contractions of double-precision inputs carry a few
/// ulps of noise per term; 1e-10 leaves five orders of headroom.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum HermitianError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("expected {expected} entries for n = {n}, got {got}")]
    BadEntryCount { n: usize, expected: usize, got: usize },
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("form is not conjugate-symmetric at ({i}, {j})")]
    NotHermitian { i: usize, j: usize },
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("curvature tensor violates the Kähler symmetry at ({i}, {j}, {k}, {l})")]
    KahlerSymmetry { i: usize, j: usize, k: usize, l: usize },
    #[error("curvature tensor violates conjugation symmetry at ({i}, {j}, {k}, {l})")]
    Reality { i: usize, j: usize, k: usize, l: usize },
    #[error("first jet is not symmetric in its two holomorphic slots at ({k}, {i}, {j})")]
    JetSymmetry { k: usize, i: usize, j: usize },
    #[error("first jet is not conjugate-symmetric in its Hermitian pair at ({k}, {i}, {j})")]
    JetHermitian { k: usize, i: usize, j: usize },
    #[error("direction vector must be nonzero")]
    ZeroVector,
    #[error("kappa must be positive, got {0}")]
    NonPositiveKappa(f64),
    #[error("bounds det <= {det} and 1/lambda <= {inv} admit no eigenvalue vector for n = {n}")]
    InconsistentBounds { det: f64, inv: f64, n: usize },
}

pub type Result<T> = std::result::Result<T, HermitianError>;

fn scale_of(entries: &[Complex64]) -> f64 {
    entries.iter().map(|z| z.norm()).fold(1.0, f64::max)
}

/// An n-by-n conjugate-symmetric form `h_{i j̄}`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    n: usize,
    entries: Vec<Complex64>,
}

impl HermitianForm {
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(HermitianError::ZeroDimension);
        }
        if entries.len() != n * n {
            return Err(HermitianError::BadEntryCount { n, expected: n * n, got: entries.len() });
        }
        let tol = SYMMETRY_TOL * scale_of(&entries);
        for i in 0..n {
            for j in 0..=i {
                let d = entries[i * n + j] - entries[j * n + i].conj();
                if d.norm() > tol {
                    return Err(HermitianError::NotHermitian { i, j });
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// Builds the form from the entries on and below the diagonal,
    /// mirroring the conjugates so the invariant holds exactly.
    pub fn from_lower(n: usize, lower: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut entries = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = lower(i, j);
                entries[i * n + j] = v;
                entries[j * n + i] = v.conj();
            }
        }
        Self { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_lower(n, |i, j| {
            if i == j { Complex64::ONE } else { Complex64::ZERO }
        })
    }

    pub fn scaled_identity(n: usize, lambda: f64) -> Self {
        Self::from_lower(n, |i, j| {
            if i == j { Complex64::new(lambda, 0.0) } else { Complex64::ZERO }
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// `|v|^2_h = h_{i j̄} v^i conj(v^j)`; real for Hermitian `h`.
    pub fn norm_sq(&self, v: &[Complex64]) -> f64 {
        let mut acc = Complex64::ZERO;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += self.entry(i, j) * v[i] * v[j].conj();
            }
        }
        acc.re
    }
}

/// A positive-definite [`HermitianForm`]; positivity is certified at
/// construction by a complex Cholesky factorization, which is then kept
/// around for inverses and determinants.
#[derive(Debug, Clone)]
pub struct MetricForm {
    form: HermitianForm,
    /// Lower-triangular factor L with G = L L^†.
    chol: Vec<Complex64>,
}

impl MetricForm {
    pub fn new(form: HermitianForm) -> Result<Self> {
        let chol = cholesky(form.n, &form.entries)?;
        Ok(Self { form, chol })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(HermitianForm::identity(n)).expect("identity is positive")
    }

    pub fn scaled_identity(n: usize, lambda: f64) -> Result<Self> {
        Self::new(HermitianForm::scaled_identity(n, lambda))
    }

    /// Diagonal radial metric `diag(b, a, ..., a)` in the frame adapted to
    /// the radial direction.
    pub fn radial_diag(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::new(HermitianForm::from_lower(n, |i, j| {
            if i != j {
                Complex64::ZERO
            } else if i == 0 {
                Complex64::new(b, 0.0)
            } else {
                Complex64::new(a, 0.0)
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.form.n
    }

    pub fn form(&self) -> &HermitianForm {
        &self.form
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.form.entry(i, j)
    }

    pub fn norm_sq(&self, v: &[Complex64]) -> f64 {
        self.form.norm_sq(v)
    }

    pub fn det(&self) -> f64 {
        let n = self.dim();
        let mut d = 1.0;
        for i in 0..n {
            d *= self.chol[i * n + i].re * self.chol[i * n + i].re;
        }
        d
    }

    /// Entries of the inverse metric with the usual index convention:
    /// `out[i][j] = g^{i j̄}`, i.e. `sum_j g^{i j̄} g_{k j̄} = δ_ik`.
    pub fn inverse_entries(&self) -> Vec<Complex64> {
        let n = self.dim();
        let linv = invert_lower(n, &self.chol);
        // G^{-1} = L^{-†} L^{-1}; g^{i j̄} is the conjugate of G^{-1}[i][j].
        let mut out = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in j.max(i)..n {
                    acc += linv[k * n + i].conj() * linv[k * n + j];
                }
                out[i * n + j] = acc.conj();
            }
        }
        out
    }
}

fn cholesky(n: usize, a: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut l = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if sum.re <= 0.0 || sum.re.abs() * SYMMETRY_TOL < sum.im.abs() {
                    return Err(HermitianError::NotPositiveDefinite { index: i, pivot: sum.re });
                }
                l[i * n + i] = Complex64::new(sum.re.sqrt(), 0.0);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

fn invert_lower(n: usize, l: &[Complex64]) -> Vec<Complex64> {
    let mut inv = vec![Complex64::ZERO; n * n];
    for j in 0..n {
        inv[j * n + j] = Complex64::new(1.0 / l[j * n + j].re, 0.0);
        for i in j + 1..n {
            let mut sum = Complex64::ZERO;
            for k in j..i {
                sum += l[i * n + k] * inv[k * n + j];
            }
            inv[i * n + j] = -sum / l[i * n + i].re;
        }
    }
    inv
}

/// Four-index curvature tensor `R_{i j̄ k l̄}` with the Kähler symmetries
/// `R_{i j̄ k l̄} = R_{k j̄ i l̄} = R_{i l̄ k j̄}` and the reality condition
/// `conj(R_{i j̄ k l̄}) = R_{j ī l k̄}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureTensor {
    n: usize,
    entries: Vec<Complex64>,
}

impl CurvatureTensor {
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(HermitianError::ZeroDimension);
        }
        let expected = n * n * n * n;
        if entries.len() != expected {
            return Err(HermitianError::BadEntryCount { n, expected, got: entries.len() });
        }
        let t = Self { n, entries };
        t.validate()?;
        Ok(t)
    }

    /// Skips the symmetry validation; for builders that impose the
    /// symmetries structurally.
    pub fn from_entries_unchecked(n: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), n * n * n * n);
        Self { n, entries }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_entries_unchecked(n, vec![Complex64::ZERO; n * n * n * n])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let tol = SYMMETRY_TOL * scale_of(&self.entries);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.entry(i, j, k, l);
                        if (r - self.entry(k, j, i, l)).norm() > tol {
                            return Err(HermitianError::KahlerSymmetry { i, j, k, l });
                        }
                        if (r - self.entry(i, l, k, j)).norm() > tol {
                            return Err(HermitianError::KahlerSymmetry { i, j, k, l });
                        }
                        if (r.conj() - self.entry(j, i, l, k)).norm() > tol {
                            return Err(HermitianError::Reality { i, j, k, l });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let n = self.n;
        self.entries[((i * n + j) * n + k) * n + l]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// `R(η, η̄, η, η̄)`, real by the reality symmetry.
    pub fn quartic(&self, eta: &[Complex64]) -> f64 {
        let n = self.n;
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            for j in 0..n {
                let pij = eta[i] * eta[j].conj();
                for k in 0..n {
                    for l in 0..n {
                        acc += self.entry(i, j, k, l) * pij * eta[k] * eta[l].conj();
                    }
                }
            }
        }
        acc.re
    }
}

/// First jet `A_{k, i j̄}` of a metric along the holomorphic directions,
/// i.e. the components of `∇̂_k g_{i j̄}`. The barred derivatives are
/// recovered by conjugation and are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstJet {
    n: usize,
    entries: Vec<Complex64>,
}

impl FirstJet {
    /// Validating constructor: requires symmetry in the two holomorphic
    /// slots (the Kähler condition) and conjugate symmetry in the
    /// Hermitian pair.
    pub fn new(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(HermitianError::ZeroDimension);
        }
        let expected = n * n * n;
        if entries.len() != expected {
            return Err(HermitianError::BadEntryCount { n, expected, got: entries.len() });
        }
        let jet = Self { n, entries };
        let tol = SYMMETRY_TOL * scale_of(&jet.entries);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if (jet.entry(k, i, j) - jet.entry(i, k, j)).norm() > tol {
                        return Err(HermitianError::JetSymmetry { k, i, j });
                    }
                    if (jet.entry(k, i, j) - jet.entry(k, j, i).conj()).norm() > tol {
                        return Err(HermitianError::JetHermitian { k, i, j });
                    }
                }
            }
        }
        Ok(jet)
    }

    /// For jets that do not come from a Kähler potential (the Cauchy-Schwarz
    /// inequality in [`yau_identity_terms`] holds for arbitrary slots).
    pub fn from_entries_unchecked(n: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), n * n * n);
        Self { n, entries }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_entries_unchecked(n, vec![Complex64::ZERO; n * n * n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, k: usize, i: usize, j: usize) -> Complex64 {
        let n = self.n;
        self.entries[(k * n + i) * n + j]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hermitian_rejects_asymmetric() {
        let entries = vec![c(1.0, 0.0), c(0.5, 0.1), c(0.5, 0.1), c(2.0, 0.0)];
        assert!(matches!(
            HermitianForm::new(2, entries),
            Err(HermitianError::NotHermitian { .. })
        ));
    }

    #[test]
    fn metric_rejects_indefinite() {
        let form = HermitianForm::from_lower(2, |i, j| {
            if i == j { c(if i == 0 { 1.0 } else { -1.0 }, 0.0) } else { c(0.0, 0.0) }
        });
        assert!(matches!(
            MetricForm::new(form),
            Err(HermitianError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn inverse_contracts_to_identity() {
        let form = HermitianForm::from_lower(3, |i, j| {
            if i == j {
                c(2.0 + i as f64, 0.0)
            } else {
                c(0.3 * (i + j) as f64, 0.1 * (i as f64 - j as f64))
            }
        });
        let g = MetricForm::new(form).unwrap();
        let inv = g.inverse_entries();
        let n = 3;
        // sum_j g^{i j̄} g_{k j̄} = δ_ik
        for i in 0..n {
            for k in 0..n {
                let mut acc = Complex64::ZERO;
                for j in 0..n {
                    acc += inv[i * n + j] * g.entry(k, j);
                }
                let expect = if i == k { 1.0 } else { 0.0 };
                assert_relative_eq!(acc.re, expect, epsilon = 1e-12);
                assert_relative_eq!(acc.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn det_matches_diagonal_product() {
        let g = MetricForm::radial_diag(3, 2.0, 5.0).unwrap();
        assert_relative_eq!(g.det(), 5.0 * 2.0 * 2.0, epsilon = 1e-12);
    }

    #[test]
    fn curvature_validator_rejects_broken_symmetry() {
        let n = 2;
        let mut entries = vec![Complex64::ZERO; 16];
        // a lone off-diagonal entry R_{0 0̄ 1 1̄} breaks R_{i j̄ k l̄} = R_{k j̄ i l̄}
        entries[n + 1] = c(1.0, 0.0);
        let t = CurvatureTensor::from_entries_unchecked(n, entries);
        assert!(t.validate().is_err());
    }

    #[test]
    fn jet_validator_rejects_slot_asymmetry() {
        let n = 2;
        let mut entries = vec![Complex64::ZERO; 8];
        entries[n + 1] = c(1.0, 0.0); // A_{0,1 1̄} != A_{1,0 1̄}
        assert!(matches!(
            FirstJet::new(n, entries),
            Err(HermitianError::JetSymmetry { .. })
        ));
    }
}
