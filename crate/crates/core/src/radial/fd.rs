//! Finite-difference curvature oracle.
//!
//! Differentiates the metric field `g_{k l̄}(z) = u' δ_kl + u'' z̄_k z_l`
//! numerically in real coordinates (the field itself only needs `u'` and
//! `u''`), so the closed-form third and fourth derivative paths of the
//! analytic assembly are never consulted. Used by the tests and by the
//! `oracle` report to bound the closed-form-vs-numeric delta.

use num_complex::Complex64;

use super::{RadialPotential, Result};
use crate::hermitian::CurvatureTensor;

/// Metric entry `g_{k l̄}` at a complex point.
fn metric_entry(u: &RadialPotential, z: &[Complex64], k: usize, l: usize) -> Complex64 {
    let s: f64 = z.iter().map(|w| w.norm_sqr()).sum();
    let jet = u.u_jet(s);
    let mut out = z[k].conj() * z[l] * jet[2];
    if k == l {
        out += Complex64::new(jet[1], 0.0);
    }
    out
}

/// Central-difference approximation of `∂_i f` at `p`,
/// `∂_i = (∂_x_i - i ∂_y_i)/2`.
fn d_holo(
    f: &dyn Fn(&[Complex64]) -> Complex64,
    p: &[Complex64],
    i: usize,
    h: f64,
) -> Complex64 {
    let mut plus = p.to_vec();
    let mut minus = p.to_vec();
    plus[i] += h;
    minus[i] -= h;
    let dx = (f(&plus) - f(&minus)) / (2.0 * h);
    let mut plus = p.to_vec();
    let mut minus = p.to_vec();
    plus[i] += Complex64::new(0.0, h);
    minus[i] -= Complex64::new(0.0, h);
    let dy = (f(&plus) - f(&minus)) / (2.0 * h);
    (dx - Complex64::i() * dy) * 0.5
}

/// Central-difference approximation of `∂_i ∂_j̄ f` at `p`.
fn dd_mixed(
    f: &dyn Fn(&[Complex64]) -> Complex64,
    p: &[Complex64],
    i: usize,
    j: usize,
    h: f64,
) -> Complex64 {
    // ∂_j̄ = (∂_x_j + i ∂_y_j)/2 applied by differencing ∂_i f
    let g = |q: &[Complex64]| d_holo(f, q, i, h);
    let mut plus = p.to_vec();
    let mut minus = p.to_vec();
    plus[j] += h;
    minus[j] -= h;
    let dx = (g(&plus) - g(&minus)) / (2.0 * h);
    let mut plus = p.to_vec();
    let mut minus = p.to_vec();
    plus[j] += Complex64::new(0.0, h);
    minus[j] -= Complex64::new(0.0, h);
    let dy = (g(&plus) - g(&minus)) / (2.0 * h);
    (dx + Complex64::i() * dy) * 0.5
}

fn richardson(coarse: Complex64, fine: Complex64) -> Complex64 {
    (fine * 4.0 - coarse) / 3.0
}

/// Curvature tensor at `p = (sqrt(s), 0, .., 0)` from finite differences
/// of the metric field, second order in `h` with one Richardson step.
pub fn fd_curvature_tensor(u: &RadialPotential, s: f64, h: f64) -> Result<CurvatureTensor> {
    let n = u.dim();
    let pair = u.eigen_pair(s)?;
    let mut p = vec![Complex64::ZERO; n];
    p[0] = Complex64::new(s.sqrt(), 0.0);

    let inv_diag: Vec<f64> = (0..n)
        .map(|q| if q == 0 { 1.0 / pair.b } else { 1.0 / pair.a })
        .collect();

    let mut dg = vec![Complex64::ZERO; n * n * n];
    let mut ddg = vec![Complex64::ZERO; n * n * n * n];
    for k in 0..n {
        for l in 0..n {
            let f = move |z: &[Complex64]| metric_entry(u, z, k, l);
            for i in 0..n {
                let coarse = d_holo(&f, &p, i, h);
                let fine = d_holo(&f, &p, i, 0.5 * h);
                dg[(i * n + k) * n + l] = richardson(coarse, fine);
                for j in 0..n {
                    let coarse = dd_mixed(&f, &p, i, j, h);
                    let fine = dd_mixed(&f, &p, i, j, 0.5 * h);
                    ddg[((i * n + j) * n + k) * n + l] = richardson(coarse, fine);
                }
            }
        }
    }

    let mut entries = vec![Complex64::ZERO; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let mut quad = Complex64::ZERO;
                    for q in 0..n {
                        // ∂_j̄ g_{q l̄} = conj(∂_j g_{l q̄})
                        quad += dg[(i * n + k) * n + q]
                            * dg[(j * n + l) * n + q].conj()
                            * inv_diag[q];
                    }
                    entries[((i * n + j) * n + k) * n + l] =
                        -ddg[((i * n + j) * n + k) * n + l] + quad;
                }
            }
        }
    }
    Ok(CurvatureTensor::from_entries_unchecked(n, entries))
}

/// Largest entrywise distance between the analytic tensor and the
/// finite-difference oracle at `s`.
pub fn curvature_delta(u: &RadialPotential, s: f64, h: f64) -> Result<f64> {
    let analytic = u.curvature_tensor_at(s)?;
    let numeric = fd_curvature_tensor(u, s, h)?;
    Ok(analytic
        .entries()
        .iter()
        .zip(numeric.entries())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}
