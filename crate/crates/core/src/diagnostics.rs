//! Monitored quantities along the flow and the per-run verdict.
//!
//! Each record captures the trace `S = tr_{ω(t)} ω₀`, the potential rate,
//! the Einstein residual, eigenvalue ratios against the initial metric,
//! the connection-difference norm, the boundary-influence probe and the
//! discrete residual of the heat identity for `e^t φ̇`. The verdict
//! aggregates them into per-criterion pass/fail lines with the measured
//! numbers attached.

use thiserror::Error;

use crate::flow::{FlowObserver, FlowState, MetricJets, ObserverSignal, RhsEval};
use crate::hermitian::curvature_norm;
use crate::radial::curvature_from_jet;

/// Residual level that certifies the Kähler-Einstein limit in verdicts.
pub const EINSTEIN_RESIDUAL_TARGET: f64 = 1e-4;
/// Relative slack on the trace bound, covering discretization and the
/// sampling gap in the curvature-constant estimate.
pub const SCHWARZ_SLACK: f64 = 1e-2;
/// Weakest admissible fitted decay rate for `sup |φ̇|`.
pub const MIN_DECAY_RATE: f64 = 0.8;
/// Window for the decay fit, intersected with the run span.
pub const DECAY_FIT_WINDOW: (f64, f64) = (2.0, 8.0);
/// Margin factor on the curvature-boundedness verdict.
pub const CURVATURE_BOUND_FACTOR: f64 = 2.0;
/// Boundary-influence ceiling asserted by the truncation contract.
pub const BOUNDARY_INFLUENCE_LIMIT: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("need at least {need} records in the fit window, got {got}")]
    DegenerateWindow { need: usize, got: usize },
    #[error("snapshots are not uniformly spaced in time: {0:e} vs {1:e}")]
    NonUniformCadence(f64, f64),
    #[error("grid mismatch between state and reference")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// One monitored snapshot of the run.
#[derive(Debug, Clone, Copy)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub sup_s: f64,
    pub schwarz_threshold: f64,
    pub sup_phidot: f64,
    pub einstein_residual: f64,
    pub lambda_ratio_min: f64,
    pub lambda_ratio_max: f64,
    pub christoffel_diff: f64,
    pub boundary_influence: f64,
    pub heat_identity_residual: f64,
    pub dt: f64,
}

/// `max(n, 2n/((n+1) κ))`; infinite trace budget cannot be certified for
/// `κ <= 0`, which callers must treat as a failed hypothesis.
pub fn schwarz_threshold(n: usize, kappa: f64) -> f64 {
    let nf = n as f64;
    if kappa > 0.0 {
        nf.max(2.0 * nf / ((nf + 1.0) * kappa))
    } else {
        f64::INFINITY
    }
}

/// Trace of the initial metric against the evolving one at every node,
/// `S(s, t) = (n-1) a₀/a + b₀/b`, plus its sup.
pub fn trace_s(state: &FlowState, a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let nm1 = state.dim() as f64 - 1.0;
    let tb = &state.tables;
    let values: Vec<f64> = (0..state.nodes())
        .map(|i| {
            let b0 = tb.u[0][i] + tb.s[i] * tb.u[1][i];
            nm1 * tb.u[0][i] / a[i] + b0 / b[i]
        })
        .collect();
    let sup = values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    (values, sup)
}

/// Eigenvalue ratios of the evolving metric against the initial one over
/// all nodes and eigen-parts. For `n = 1` only the radial eigenvalue
/// exists; the tangential one carries multiplicity `n - 1`.
pub fn equivalence_ratios(state: &FlowState, a: &[f64], b: &[f64]) -> (f64, f64) {
    let tb = &state.tables;
    let tangential = state.dim() > 1;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..state.nodes() {
        let b0 = tb.u[0][i] + tb.s[i] * tb.u[1][i];
        let mut push = |r: f64| {
            min = min.min(r);
            max = max.max(r);
        };
        push(b[i] / b0);
        if tangential {
            push(a[i] / tb.u[0][i]);
        }
    }
    (min, max)
}

/// Volume-form ratio `det g(t) / det g₀`, maximized over the nodes.
pub fn volume_ratio_sup(state: &FlowState, a: &[f64], b: &[f64]) -> f64 {
    let nm1 = state.dim() as i32 - 1;
    let tb = &state.tables;
    (0..state.nodes())
        .map(|i| {
            let b0 = tb.u[0][i] + tb.s[i] * tb.u[1][i];
            (a[i] / tb.u[0][i]).powi(nm1) * (b[i] / b0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sup over interior nodes of the relative defect of `Ric(ω) + ω = 0` in
/// its radial form `F' = a`, `(s F')' = b` with `F = (n-1) ln a + ln b` of
/// the current metric. Exactly zero (up to roundoff) at the Einstein model.
///
/// Along the flow the log-determinant satisfies `F = F₀ + φ + φ̇`
/// identically (the potential equation read backwards), so `F` splits
/// into the closed-form background profile plus a smooth grid field whose
/// two stencil derivatives are all the reconstruction needs.
pub fn einstein_residual(state: &FlowState, eval: &RhsEval) -> f64 {
    let tb = &state.tables;
    let v: Vec<f64> = state
        .phi
        .iter()
        .zip(&eval.phidot)
        .map(|(phi, rate)| phi + rate)
        .collect();
    let v1 = state.grid_derivative(&v, 1);
    let v2 = state.grid_derivative(&v, 2);
    let mut sup = 0.0_f64;
    for i in 1..state.nodes() - 1 {
        let s = tb.s[i];
        let fp = tb.f[0][i] + v1[i];
        let fpp = tb.f[1][i] + v2[i];
        let tangential = ((fp - eval.a[i]) / eval.a[i]).abs();
        let radial = ((fp + s * fpp - eval.b[i]) / eval.b[i]).abs();
        sup = sup.max(tangential).max(radial);
    }
    sup
}

/// Sup over interior nodes of `|T|^2_{g(t)}` for the connection
/// difference `T = Γ - Γ̂` between the state and a reference state on the
/// same grid: radially `|T|^2 = (s/b)[Δ_b^2 + 2(n-1) Δ_a^2]` with
/// `Δ_a = a'/a - â'/â` and `Δ_b = b'/b - b̂'/b̂`.
pub fn christoffel_diff(
    state: &FlowState,
    jets: &MetricJets,
    reference: &MetricJets,
) -> Result<f64> {
    if jets.a.len() != reference.a.len() {
        return Err(DiagnosticsError::GridMismatch);
    }
    let nm1 = state.dim() as f64 - 1.0;
    let mut sup = 0.0_f64;
    for i in 1..state.nodes() - 1 {
        let s = state.tables.s[i];
        let da = jets.ap[i] / jets.a[i] - reference.ap[i] / reference.a[i];
        let db = jets.bp[i] / jets.b[i] - reference.bp[i] / reference.b[i];
        let t_sq = (s / jets.b[i]) * (db * db + 2.0 * nm1 * da * da);
        sup = sup.max(t_sq);
    }
    Ok(sup)
}

/// Max of `|φ|` over the outer tenth of the nodes; measures contamination
/// from the Dirichlet truncation.
pub fn boundary_influence(state: &FlowState) -> f64 {
    let nodes = state.nodes();
    let start = nodes - nodes / 10;
    state.phi[start..].iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
}

/// Sup of the curvature norm `|Rm(ω(t))|` over the nodes, reconstructed
/// from the effective potential jet of the evolving metric.
pub fn curvature_sup(state: &FlowState, jets: &MetricJets) -> f64 {
    let n = state.dim();
    let mut sup = 0.0_f64;
    for i in 0..state.nodes() {
        let s = state.tables.s[i];
        if let Ok((tensor, metric)) =
            curvature_from_jet(n, s, jets.a[i], jets.ap[i], jets.app[i], jets.appp[i])
        {
            sup = sup.max(curvature_norm(&tensor, &metric));
        }
    }
    sup
}

/// Discrete residual of the identity
/// `(∂_t - Δ_{ω(t)})(e^t φ̇) = -tr_{ω(t)}(ω₀ + Ric(ω₀))`
/// at the middle state of three uniformly spaced snapshots (or one-sided
/// at the ends of a record stream).
pub fn heat_identity_residual(
    snapshots: [&FlowState; 3],
    at: usize,
) -> Result<f64> {
    let [s0, s1, s2] = snapshots;
    let dt1 = s1.t - s0.t;
    let dt2 = s2.t - s1.t;
    if (dt1 - dt2).abs() > 1e-9 * dt1.abs().max(dt2.abs()) {
        return Err(DiagnosticsError::NonUniformCadence(dt1, dt2));
    }
    let psi = |s: &FlowState| -> crate::flow::Result<Vec<f64>> {
        let scale = s.t.exp();
        Ok(s.rhs()?.phidot.iter().map(|v| v * scale).collect())
    };
    let p0 = psi(s0).map_err(|_| DiagnosticsError::GridMismatch)?;
    let p1 = psi(s1).map_err(|_| DiagnosticsError::GridMismatch)?;
    let p2 = psi(s2).map_err(|_| DiagnosticsError::GridMismatch)?;
    let state = snapshots[at];
    let eval = state.rhs().map_err(|_| DiagnosticsError::GridMismatch)?;
    let psi_here = match at {
        0 => &p0,
        1 => &p1,
        _ => &p2,
    };
    let dt = dt1;
    let nodes = state.nodes();
    let ds = state.ds();
    let nm1 = state.dim() as f64 - 1.0;
    let tb = &state.tables;
    let mut sup = 0.0_f64;
    for i in 1..nodes - 1 {
        // second-order time derivative, one-sided at the stream ends
        let dpsi_dt = match at {
            0 => (-3.0 * p0[i] + 4.0 * p1[i] - p2[i]) / (2.0 * dt),
            1 => (p2[i] - p0[i]) / (2.0 * dt),
            _ => (3.0 * p2[i] - 4.0 * p1[i] + p0[i]) / (2.0 * dt),
        };
        let dpsi = (psi_here[i + 1] - psi_here[i - 1]) / (2.0 * ds);
        let sp = tb.s[i] + 0.5 * ds;
        let sm = tb.s[i] - 0.5 * ds;
        let flux = (sp * (psi_here[i + 1] - psi_here[i]) - sm * (psi_here[i] - psi_here[i - 1]))
            / (ds * ds);
        let laplacian = nm1 * dpsi / eval.a[i] + flux / eval.b[i];
        let b0 = tb.u[0][i] + tb.s[i] * tb.u[1][i];
        let g0 = tb.f[0][i] + tb.s[i] * tb.f[1][i];
        let trace_term =
            nm1 * (tb.u[0][i] - tb.f[0][i]) / eval.a[i] + (b0 - g0) / eval.b[i];
        let residual = dpsi_dt - laplacian + trace_term;
        sup = sup.max(residual.abs());
    }
    Ok(sup)
}

/// Least-squares fit of `log(sup|φ̇| / t) = log A - r t` over a window.
#[derive(Debug, Clone, Copy)]
pub enum DecayFit {
    /// All rates in the window vanish identically (fixed-point runs).
    ExactZero,
    Fitted { rate: f64, amplitude: f64 },
}

pub fn phidot_decay_fit(records: &[DiagnosticsRecord], window: (f64, f64)) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (r.t, r.sup_phidot))
        .collect();
    if pts.len() < 5 {
        return Err(DiagnosticsError::DegenerateWindow { need: 5, got: pts.len() });
    }
    if pts.iter().all(|&(_, y)| y == 0.0) {
        return Ok(DecayFit::ExactZero);
    }
    let data: Vec<(f64, f64)> = pts
        .iter()
        .filter(|&&(t, y)| y > 0.0 && t > 0.0)
        .map(|&(t, y)| (t, (y / t).ln()))
        .collect();
    if data.len() < 5 {
        return Err(DiagnosticsError::DegenerateWindow { need: 5, got: data.len() });
    }
    let m = data.len() as f64;
    let st: f64 = data.iter().map(|p| p.0).sum();
    let sy: f64 = data.iter().map(|p| p.1).sum();
    let stt: f64 = data.iter().map(|p| p.0 * p.0).sum();
    let sty: f64 = data.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sty - st * sy) / (m * stt - st * st);
    let intercept = (sy - slope * st) / m;
    Ok(DecayFit::Fitted { rate: -slope, amplitude: intercept.exp() })
}

/// Aggregates that do not live in the per-record CSV.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunAggregates {
    /// min over records of `vol_sup * sup_S^(n-1) - max_ratio`.
    pub sandwich_min_margin: f64,
    /// sup over records of `|Rm(ω(t))|`.
    pub curvature_sup: f64,
    /// time at which the equivalence constant first reached 90% of its
    /// final excess over 1.
    pub equivalence_attained_t: f64,
}

/// Record stream builder: implements the flow observer, computes every
/// per-record quantity, and finalizes the heat-identity column (which
/// needs neighboring snapshots) after the run.
pub struct Monitor {
    kappa_est: f64,
    early_stop_residual: f64,
    snapshots: Vec<FlowState>,
    partial: Vec<DiagnosticsRecord>,
    reference_jets: Option<MetricJets>,
    sandwich_min_margin: f64,
    curvature_sup: f64,
    failure: Option<String>,
}

impl Monitor {
    /// `early_stop_residual <= 0` disables the early stop.
    pub fn new(kappa_est: f64, early_stop_residual: f64) -> Self {
        Self {
            kappa_est,
            early_stop_residual,
            snapshots: Vec::new(),
            partial: Vec::new(),
            reference_jets: None,
            sandwich_min_margin: f64::INFINITY,
            curvature_sup: 0.0,
            failure: None,
        }
    }

    /// A record-time evaluation error, if one stopped the run.
    pub fn failure(&self) -> Option<&str> {
        self.failure.as_deref()
    }

    /// Pins the connection-difference reference to an explicit state
    /// (resumed runs pass the reconstructed `t = 0` state).
    pub fn set_reference(&mut self, state: &FlowState) {
        self.reference_jets = Some(state.metric_jets());
    }

    pub fn threshold(&self, n: usize) -> f64 {
        schwarz_threshold(n, self.kappa_est)
    }

    /// Consumes the monitor, filling in the heat-identity residual from
    /// snapshot triples (one-sided at the stream ends).
    pub fn finalize(self) -> (Vec<DiagnosticsRecord>, RunAggregates) {
        let ((records, _), aggregates) = self.finalize_with_snapshots();
        (records, aggregates)
    }

    /// Like [`Monitor::finalize`], also handing back the retained
    /// snapshots so callers can persist them.
    pub fn finalize_with_snapshots(
        mut self,
    ) -> ((Vec<DiagnosticsRecord>, Vec<FlowState>), RunAggregates) {
        let count = self.snapshots.len();
        if count >= 3 {
            for k in 0..count {
                let (i0, at) = if k == 0 {
                    (0, 0)
                } else if k == count - 1 {
                    (count - 3, 2)
                } else {
                    (k - 1, 1)
                };
                let trio = [&self.snapshots[i0], &self.snapshots[i0 + 1], &self.snapshots[i0 + 2]];
                if let Ok(res) = heat_identity_residual(trio, at) {
                    self.partial[k].heat_identity_residual = res;
                }
            }
        }
        let aggregates = RunAggregates {
            sandwich_min_margin: self.sandwich_min_margin,
            curvature_sup: self.curvature_sup,
            equivalence_attained_t: equivalence_attained_time(&self.partial),
        };
        ((self.partial, self.snapshots), aggregates)
    }

}

fn equivalence_attained_time(records: &[DiagnosticsRecord]) -> f64 {
    let c_of = |r: &DiagnosticsRecord| r.lambda_ratio_max.max(1.0 / r.lambda_ratio_min);
    let c_sup = records.iter().map(&c_of).fold(0.0_f64, f64::max);
    if records.is_empty() {
        return 0.0;
    }
    if c_sup <= 1.0 {
        return records[0].t;
    }
    let target = 1.0 + 0.9 * (c_sup - 1.0);
    records
        .iter()
        .find(|r| c_of(r) >= target)
        .map(|r| r.t)
        .unwrap_or(records[records.len() - 1].t)
}

impl FlowObserver for Monitor {
    fn on_record(&mut self, state: &FlowState, last_dt: f64) -> ObserverSignal {
        let n = state.dim();
        let eval = match state.rhs() {
            Ok(e) => e,
            Err(e) => {
                self.failure = Some(e.to_string());
                return ObserverSignal::Stop;
            }
        };
        let jets = state.metric_jets();
        if self.reference_jets.is_none() {
            self.reference_jets = Some(jets.clone());
        }
        let reference = self.reference_jets.as_ref().unwrap();
        let (_, sup_s) = trace_s(state, &eval.a, &eval.b);
        let (ratio_min, ratio_max) = equivalence_ratios(state, &eval.a, &eval.b);
        let residual = einstein_residual(state, &eval);
        let sup_phidot = eval
            .phidot
            .iter()
            .take(state.nodes() - 1)
            .fold(0.0_f64, |m, &v| m.max(v.abs()));
        let christoffel = christoffel_diff(state, &jets, reference).unwrap_or(f64::NAN);
        let vol_sup = volume_ratio_sup(state, &eval.a, &eval.b);
        let margin = vol_sup * sup_s.powi(n as i32 - 1) - ratio_max;
        self.sandwich_min_margin = self.sandwich_min_margin.min(margin);
        self.curvature_sup = self.curvature_sup.max(curvature_sup(state, &jets));
        let threshold = if self.kappa_est > 0.0 { self.threshold(n) } else { 0.0 };
        self.partial.push(DiagnosticsRecord {
            t: state.t,
            sup_s,
            schwarz_threshold: threshold,
            sup_phidot,
            einstein_residual: residual,
            lambda_ratio_min: ratio_min,
            lambda_ratio_max: ratio_max,
            christoffel_diff: christoffel,
            boundary_influence: boundary_influence(state),
            heat_identity_residual: 0.0,
            dt: last_dt,
        });
        self.snapshots.push(state.clone());
        if self.early_stop_residual > 0.0 && residual < self.early_stop_residual {
            return ObserverSignal::Stop;
        }
        ObserverSignal::Continue
    }
}

/// One verdict line; `measured` and `threshold` carry the evidence.
#[derive(Debug, Clone)]
pub struct VerdictLine {
    pub name: &'static str,
    pub pass: bool,
    pub measured: f64,
    pub threshold: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct VerdictReport {
    pub lines: Vec<VerdictLine>,
}

impl VerdictReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(&format!(
                "criterion={} pass={} measured={:.6e} threshold={:.6e}",
                l.name, l.pass, l.measured, l.threshold
            ));
            if let Some(n) = &l.note {
                out.push_str(&format!(" note={n}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the verdict from a completed record stream.
pub fn verdict(
    records: &[DiagnosticsRecord],
    aggregates: &RunAggregates,
    n: usize,
    kappa_est: f64,
    b_est: f64,
    t_end: f64,
) -> VerdictReport {
    let mut lines = Vec::new();
    if records.is_empty() {
        return VerdictReport {
            lines: vec![VerdictLine {
                name: "records_present",
                pass: false,
                measured: 0.0,
                threshold: 1.0,
                note: Some("incomplete run".into()),
            }],
        };
    }

    lines.push(VerdictLine {
        name: "hypothesis_negative_hsc",
        pass: kappa_est > 0.0,
        measured: kappa_est,
        threshold: 0.0,
        note: None,
    });

    let sup_s = records.iter().map(|r| r.sup_s).fold(f64::NEG_INFINITY, f64::max);
    let thr = schwarz_threshold(n, kappa_est);
    lines.push(VerdictLine {
        name: "schwarz_bound",
        pass: kappa_est <= 0.0 || sup_s <= thr + SCHWARZ_SLACK,
        measured: sup_s,
        threshold: if thr.is_finite() { thr + SCHWARZ_SLACK } else { f64::MAX },
        note: (kappa_est <= 0.0).then(|| "vacuous: hypothesis failed".into()),
    });

    let window = (DECAY_FIT_WINDOW.0, DECAY_FIT_WINDOW.1.min(0.8 * t_end));
    let decay = phidot_decay_fit(records, window);
    match decay {
        Ok(DecayFit::ExactZero) => lines.push(VerdictLine {
            name: "phidot_decay_rate",
            pass: true,
            measured: 0.0,
            threshold: MIN_DECAY_RATE,
            note: Some("exact-zero rates; fit skipped".into()),
        }),
        Ok(DecayFit::Fitted { rate, .. }) => lines.push(VerdictLine {
            name: "phidot_decay_rate",
            pass: rate >= MIN_DECAY_RATE,
            measured: rate,
            threshold: MIN_DECAY_RATE,
            note: None,
        }),
        Err(_) => lines.push(VerdictLine {
            name: "phidot_decay_rate",
            pass: true,
            measured: 0.0,
            threshold: MIN_DECAY_RATE,
            note: Some("window too short; fit skipped".into()),
        }),
    }

    let c_sup = records
        .iter()
        .map(|r| r.lambda_ratio_max.max(1.0 / r.lambda_ratio_min))
        .fold(0.0_f64, f64::max);
    let attained_ok = aggregates.equivalence_attained_t < 3.0_f64.min(t_end) + 1e-9;
    lines.push(VerdictLine {
        name: "metric_equivalence_C",
        pass: c_sup.is_finite() && attained_ok && aggregates.sandwich_min_margin >= -1e-9,
        measured: c_sup,
        threshold: f64::MAX,
        note: Some(format!(
            "attained_t={:.3} sandwich_margin={:.3e}",
            aggregates.equivalence_attained_t, aggregates.sandwich_min_margin
        )),
    });

    let final_residual = records[records.len() - 1].einstein_residual;
    lines.push(VerdictLine {
        name: "einstein_limit",
        pass: final_residual <= EINSTEIN_RESIDUAL_TARGET,
        measured: final_residual,
        threshold: EINSTEIN_RESIDUAL_TARGET,
        note: None,
    });

    let curvature_cap = CURVATURE_BOUND_FACTOR * b_est.max(1e-6);
    lines.push(VerdictLine {
        name: "curvature_bounded",
        pass: aggregates.curvature_sup.is_finite() && aggregates.curvature_sup <= curvature_cap,
        measured: aggregates.curvature_sup,
        threshold: curvature_cap,
        note: None,
    });

    VerdictReport { lines }
}
