//! Local least-squares derivative stencils for grid fields.
//!
//! Fits a quintic over a sliding odd window by least squares and reads
//! derivatives off the fitted coefficients. Windows are clamped at the
//! grid ends, so every node gets a full-width fit; the per-position
//! coefficient rows are precomputed once per grid spacing.

/// Maximum derivative order served by the fits.
pub const MAX_ORDER: usize = 4;
const DEGREE: usize = 5;

#[derive(Debug, Clone)]
pub struct DerivStencils {
    window: usize,
    /// rows[pos][k] = weights of the k-th fitted coefficient at window
    /// position `pos`; length `window` each.
    rows: Vec<[Vec<f64>; DEGREE + 1]>,
}

impl DerivStencils {
    pub fn new(window: usize) -> Self {
        assert!(window > DEGREE && window % 2 == 1, "window must be odd and exceed the degree");
        let rows = (0..window).map(|pos| pseudo_inverse_rows(window, pos)).collect();
        Self { window, rows }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// k-th derivative field of `values` on a uniform grid with spacing
    /// `ds`, one value per node.
    pub fn derivative(&self, values: &[f64], ds: f64, order: usize) -> Vec<f64> {
        assert!((1..=MAX_ORDER).contains(&order));
        assert!(values.len() >= self.window);
        let factorial = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0][order];
        let scale = factorial / ds.powi(order as i32);
        let half = self.window / 2;
        let last_start = values.len() - self.window;
        values
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let start = i.saturating_sub(half).min(last_start);
                let pos = i - start;
                let row = &self.rows[pos][order];
                let mut acc = 0.0;
                for (j, w) in row.iter().enumerate() {
                    acc += w * values[start + j];
                }
                acc * scale
            })
            .collect()
    }
}

/// Solves the quintic least-squares normal equations for one window
/// position and returns the coefficient-extraction rows.
fn pseudo_inverse_rows(window: usize, pos: usize) -> [Vec<f64>; DEGREE + 1] {
    let m = DEGREE + 1;
    // V[r][c] = xi^c with xi = r - pos (in units of the grid spacing)
    let v: Vec<Vec<f64>> = (0..window)
        .map(|r| {
            let xi = r as f64 - pos as f64;
            (0..m).map(|c| xi.powi(c as i32)).collect()
        })
        .collect();
    // normal matrix N = V^T V
    let mut normal = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in 0..m {
            normal[a][b] = (0..window).map(|r| v[r][a] * v[r][b]).sum();
        }
    }
    // solve N X = V^T for X (m x window)
    let mut rhs = vec![vec![0.0; window]; m];
    for a in 0..m {
        for (r, row) in v.iter().enumerate() {
            rhs[a][r] = row[a];
        }
    }
    let x = solve_multi(normal, rhs);
    let mut out: [Vec<f64>; DEGREE + 1] = Default::default();
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = x[k].clone();
    }
    out
}

/// Gaussian elimination with partial pivoting for several right-hand sides.
fn solve_multi(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let m = a.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        for row in 0..m {
            if row == col {
                continue;
            }
            let factor = a[row][col] / diag;
            for k in col..m {
                let v = a[col][k];
                a[row][k] -= factor * v;
            }
            for k in 0..b[0].len() {
                let v = b[col][k];
                b[row][k] -= factor * v;
            }
        }
    }
    for col in 0..m {
        let diag = a[col][col];
        for k in 0..b[0].len() {
            b[col][k] /= diag;
        }
    }
    b
}
