//! Contractions and inequality checks on Hermitian data.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CurvatureTensor, FirstJet, HermitianError, HermitianForm, MetricForm, Result};

/// Seed for the quasi-random direction schedule in [`hsc_sup_estimate`].
/// Fixed so repeated estimates are reproducible and monotone in budget.
const HSC_SAMPLING_SEED: u64 = 0x6b72_666c_6f77;
const ASCENT_ITERATIONS: usize = 48;

/// `tr_g h = g^{i j̄} h_{i j̄}`.
pub fn trace_of(h: &HermitianForm, g: &MetricForm) -> Result<f64> {
    let n = h.dim();
    if n != g.dim() {
        return Err(HermitianError::DimensionMismatch(n, g.dim()));
    }
    let inv = g.inverse_entries();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += inv[i * n + j] * h.entry(i, j);
        }
    }
    Ok(acc.re)
}

/// Upper bound on individual eigenvalues given a determinant bound
/// `prod lambda_i <= det_bound` and a reciprocal bound `1/lambda_i <=
/// inverse_bound`: each `lambda_j <= det_bound * inverse_bound^(n-1)`.
pub fn eigen_sandwich_bound(det_bound: f64, inverse_bound: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(HermitianError::ZeroDimension);
    }
    // Feasibility: lambda_i >= 1/inverse_bound forces the product to be at
    // least inverse_bound^(-n).
    if !(det_bound * inverse_bound.powi(n as i32) >= 1.0) {
        return Err(HermitianError::InconsistentBounds {
            det: det_bound,
            inv: inverse_bound,
            n,
        });
    }
    Ok(det_bound * inverse_bound.powi(n as i32 - 1))
}

/// Reference tensor with constant holomorphic sectional curvature `-c`:
/// `R_{i j̄ k l̄} = -(c/2) (g_{i j̄} g_{k l̄} + g_{i l̄} g_{k j̄})`.
pub fn constant_hsc_curvature(g: &MetricForm, c: f64) -> CurvatureTensor {
    let n = g.dim();
    let mut entries = vec![Complex64::ZERO; n * n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    entries[((i * n + j) * n + k) * n + l] =
                        (g.entry(i, j) * g.entry(k, l) + g.entry(i, l) * g.entry(k, j))
                            * (-0.5 * c);
                }
            }
        }
    }
    CurvatureTensor::from_entries_unchecked(n, entries)
}

/// Holomorphic sectional curvature `H(η) = R(η, η̄, η, η̄) / |η|^4_g`.
pub fn hsc_eval(r: &CurvatureTensor, g: &MetricForm, eta: &[Complex64]) -> Result<f64> {
    if r.dim() != g.dim() {
        return Err(HermitianError::DimensionMismatch(r.dim(), g.dim()));
    }
    let norm_sq = g.norm_sq(eta);
    if !(norm_sq > 0.0) {
        return Err(HermitianError::ZeroVector);
    }
    Ok(r.quartic(eta) / (norm_sq * norm_sq))
}

/// Sampling estimate of `sup_η H(η)` over unit directions: `budget`
/// quasi-random directions, each refined by projected gradient ascent.
/// Deterministic for a fixed budget, monotone nondecreasing in budget,
/// and always a lower bound on the true supremum.
pub fn hsc_sup_estimate(r: &CurvatureTensor, g: &MetricForm, budget: usize) -> f64 {
    let n = r.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(HSC_SAMPLING_SEED);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..budget.max(1) {
        let eta = random_unit(&mut rng, n, g);
        let refined = ascend(r, g, eta);
        if refined > best {
            best = refined;
        }
    }
    best
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize, g: &MetricForm) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(standard_normal(rng), standard_normal(rng)))
            .collect();
        let norm = g.norm_sq(&v).sqrt();
        if norm > 1e-8 {
            return v.iter().map(|z| z / norm).collect();
        }
    }
}

pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on open-interval uniforms.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn ascend(r: &CurvatureTensor, g: &MetricForm, mut eta: Vec<Complex64>) -> f64 {
    let n = r.dim();
    let mut value = r.quartic(&eta); // |eta|_g = 1, so H = quartic
    let mut step = 0.5;
    for _ in 0..ASCENT_ITERATIONS {
        // Wirtinger gradient of N(η) = R(η,η̄,η,η̄) with respect to η̄,
        // using the j <-> l symmetry: dN/dη̄_m = 2 R_{i m̄ k l̄} η_i η_k η̄_l.
        let mut grad = vec![Complex64::ZERO; n];
        for m in 0..n {
            let mut acc = Complex64::ZERO;
            for i in 0..n {
                for k in 0..n {
                    let pik = eta[i] * eta[k];
                    for l in 0..n {
                        acc += r.entry(i, m, k, l) * pik * eta[l].conj();
                    }
                }
            }
            grad[m] = acc * 2.0;
        }
        // The scale-invariant ascent direction subtracts the radial part.
        let mut gvec = vec![Complex64::ZERO; n];
        for m in 0..n {
            let mut gm = Complex64::ZERO;
            for i in 0..n {
                gm += g.entry(i, m) * eta[i];
            }
            gvec[m] = gm;
        }
        for m in 0..n {
            grad[m] -= gvec[m] * (2.0 * value);
        }
        let gnorm: f64 = grad.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if gnorm < 1e-14 * (1.0 + value.abs()) {
            break;
        }
        let mut advanced = false;
        let mut tau = step;
        for _ in 0..20 {
            let trial: Vec<Complex64> =
                eta.iter().zip(&grad).map(|(e, d)| e + d * tau).collect();
            let norm = g.norm_sq(&trial).sqrt();
            if norm > 1e-12 {
                let unit: Vec<Complex64> = trial.iter().map(|z| z / norm).collect();
                let trial_value = r.quartic(&unit);
                if trial_value > value {
                    eta = unit;
                    value = trial_value;
                    advanced = true;
                    break;
                }
            }
            tau *= 0.5;
        }
        if !advanced {
            break;
        }
        step = (tau * 2.0).min(0.5);
    }
    value
}

/// The two sides of the curvature-term bound used in the trace evolution:
/// `lhs = g^{k l̄} g^{i j̄} R̂_{k l̄ i j̄}` against
/// `rhs = -((n+1)/2n) κ S^2` with `S = tr_g ĝ`.
#[derive(Debug, Clone, Copy)]
pub struct RoydenCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub trace: f64,
    pub holds: bool,
}

pub fn royden_check(
    r_hat: &CurvatureTensor,
    g: &MetricForm,
    g_hat: &MetricForm,
    kappa: f64,
) -> Result<RoydenCheck> {
    let n = g.dim();
    if r_hat.dim() != n || g_hat.dim() != n {
        return Err(HermitianError::DimensionMismatch(r_hat.dim(), n));
    }
    if !(kappa > 0.0) {
        return Err(HermitianError::NonPositiveKappa(kappa));
    }
    let inv = g.inverse_entries();
    let mut lhs = Complex64::ZERO;
    for k in 0..n {
        for l in 0..n {
            let gkl = inv[k * n + l];
            for i in 0..n {
                for j in 0..n {
                    lhs += gkl * inv[i * n + j] * r_hat.entry(k, l, i, j);
                }
            }
        }
    }
    let s = trace_of(g_hat.form(), g)?;
    let rhs = -((n as f64 + 1.0) / (2.0 * n as f64)) * kappa * s * s;
    let lhs = lhs.re;
    let holds = lhs <= rhs + 1e-10 * (1.0 + rhs.abs());
    Ok(RoydenCheck { lhs, rhs, trace: s, holds })
}

/// The two sides of the Cauchy-Schwarz step in the second-order trace
/// computation: `lhs = |∇S|^2_g / S^2` and
/// `rhs = g^{k l̄} g_{m n̄} ĝ_{i j̄} ∇̂_k g^{i n̄} ∇̂_l̄ g^{m j̄} / S`,
/// with the jet entering through `∇̂_k g^{i n̄} = -g^{i b̄} g^{a n̄} A_{k, a b̄}`.
#[derive(Debug, Clone, Copy)]
pub struct YauTerms {
    pub lhs: f64,
    pub rhs: f64,
}

pub fn yau_identity_terms(g: &MetricForm, g_hat: &MetricForm, a: &FirstJet) -> Result<YauTerms> {
    let n = g.dim();
    if g_hat.dim() != n || a.dim() != n {
        return Err(HermitianError::DimensionMismatch(g_hat.dim(), n));
    }
    let inv = g.inverse_entries();
    let s = trace_of(g_hat.form(), g)?;

    // X[k][i][m] = ∇̂_k g^{i m̄}
    let mut x = vec![Complex64::ZERO; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for m in 0..n {
                let mut acc = Complex64::ZERO;
                for p in 0..n {
                    for q in 0..n {
                        acc += inv[i * n + q] * inv[p * n + m] * a.entry(k, p, q);
                    }
                }
                x[(k * n + i) * n + m] = -acc;
            }
        }
    }

    // ∇̂_k S = X[k][i][j] ĝ_{i j̄}
    let mut grad_s = vec![Complex64::ZERO; n];
    for k in 0..n {
        let mut acc = Complex64::ZERO;
        for i in 0..n {
            for j in 0..n {
                acc += x[(k * n + i) * n + j] * g_hat.entry(i, j);
            }
        }
        grad_s[k] = acc;
    }

    let mut grad_sq = Complex64::ZERO;
    for k in 0..n {
        for l in 0..n {
            grad_sq += inv[k * n + l] * grad_s[k] * grad_s[l].conj();
        }
    }

    let mut quad = Complex64::ZERO;
    for k in 0..n {
        for l in 0..n {
            let gkl = inv[k * n + l];
            for m in 0..n {
                for nn in 0..n {
                    let gmn = g.entry(m, nn);
                    for i in 0..n {
                        for j in 0..n {
                            quad += gkl
                                * gmn
                                * g_hat.entry(i, j)
                                * x[(k * n + i) * n + nn]
                                * x[(l * n + j) * n + m].conj();
                        }
                    }
                }
            }
        }
    }

    Ok(YauTerms {
        lhs: grad_sq.re / (s * s),
        rhs: quad.re / s,
    })
}

/// Fully `g`-contracted norm of the curvature tensor,
/// `|R|^2 = R_{i j̄ k l̄} conj(R_{p q̄ r s̄}) g^{i p̄} g^{q j̄} g^{k r̄} g^{s l̄}`.
pub fn curvature_norm(r: &CurvatureTensor, g: &MetricForm) -> f64 {
    let n = r.dim();
    let inv = g.inverse_entries();
    let mut acc = Complex64::ZERO;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let rijkl = r.entry(i, j, k, l);
                    if rijkl == Complex64::ZERO {
                        continue;
                    }
                    for p in 0..n {
                        let gip = inv[i * n + p];
                        for q in 0..n {
                            let gqj = inv[q * n + j];
                            for rr in 0..n {
                                let gkr = inv[k * n + rr];
                                for ss in 0..n {
                                    acc += rijkl
                                        * r.entry(p, q, rr, ss).conj()
                                        * gip
                                        * gqj
                                        * gkr
                                        * inv[ss * n + l];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    acc.re.max(0.0).sqrt()
}
