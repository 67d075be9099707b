//! Preconditioned conjugate gradients on masked grid stencils.
//!
//! Systems are assembled as compact per-cell stencils (diagonal plus up to
//! four neighbor couplings) over fluid cells only. Dot products reduce
//! per-row partial sums in row order, so results are independent of the
//! worker thread count.

use crate::error::{Result, SolverError};
use oilpore_core::par;

/// One row of a symmetric 5-point system: diagonal plus neighbor couplings.
#[derive(Debug, Clone, Default)]
pub struct StencilRow {
    pub diag: f64,
    /// (flat neighbor index, coefficient); inactive slots have index == usize::MAX
    pub neighbors: [(usize, f64); 4],
    pub active: bool,
}

/// Sparse symmetric system over a row-major grid.
pub struct StencilMatrix {
    pub rows: Vec<StencilRow>,
    pub width: usize,
}

/// Convergence statistics for one solve.
#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub iterations: usize,
    /// max-norm of the final residual `b - A x`
    pub residual: f64,
}

impl StencilMatrix {
    pub fn new(len: usize, width: usize) -> Self {
        Self {
            rows: vec![StencilRow::default(); len],
            width,
        }
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let rows = &self.rows;
        par::for_each_row_mut(out, self.width, |j, row_out| {
            let base = j * self.width;
            for (i, out_v) in row_out.iter_mut().enumerate() {
                let row = &rows[base + i];
                if !row.active {
                    *out_v = 0.0;
                    continue;
                }
                let mut acc = row.diag * x[base + i];
                for &(nidx, coef) in &row.neighbors {
                    if nidx != usize::MAX {
                        acc += coef * x[nidx];
                    }
                }
                *out_v = acc;
            }
        });
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        par::map_rows_sum(a, self.width, |j, row| {
            let base = j * self.width;
            row.iter()
                .enumerate()
                .map(|(i, v)| v * b[base + i])
                .sum::<f64>()
        })
    }

    fn residual_inf(&self, x: &[f64], b: &[f64], scratch: &mut [f64]) -> f64 {
        self.apply(x, scratch);
        let mut r = 0.0f64;
        for idx in 0..b.len() {
            if self.rows[idx].active {
                r = r.max((b[idx] - scratch[idx]).abs());
            }
        }
        r
    }

    /// Jacobi-preconditioned CG. `x` holds the initial guess on entry and
    /// the solution on exit. Stops when the max-norm residual falls below
    /// `max(rel_tol * |b|_inf, abs_tol)`; `abs_tol = 0` disables the
    /// absolute criterion.
    pub fn solve_pcg(
        &self,
        x: &mut [f64],
        b: &[f64],
        rel_tol: f64,
        abs_tol: f64,
        max_iters: usize,
        what: &'static str,
    ) -> Result<SolveStats> {
        let n = b.len();
        let mut b_inf = 0.0f64;
        for idx in 0..n {
            if self.rows[idx].active {
                b_inf = b_inf.max(b[idx].abs());
            } else {
                debug_assert_eq!(b[idx], 0.0);
            }
        }
        let stop = if abs_tol > 0.0 {
            (rel_tol * b_inf).min(abs_tol).max(1e-15 * b_inf)
        } else {
            rel_tol * b_inf
        };

        let mut r = vec![0.0; n];
        let mut scratch = vec![0.0; n];
        self.apply(x, &mut scratch);
        for idx in 0..n {
            r[idx] = if self.rows[idx].active {
                b[idx] - scratch[idx]
            } else {
                0.0
            };
        }
        let mut res_inf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res_inf <= stop || b_inf == 0.0 {
            return Ok(SolveStats {
                iterations: 0,
                residual: res_inf,
            });
        }

        let inv_diag: Vec<f64> = self
            .rows
            .iter()
            .map(|row| if row.active && row.diag != 0.0 { 1.0 / row.diag } else { 0.0 })
            .collect();

        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = self.dot(&r, &z);

        for iteration in 1..=max_iters {
            self.apply(&p, &mut scratch);
            let p_ap = self.dot(&p, &scratch);
            if p_ap <= 0.0 || !p_ap.is_finite() {
                return Err(SolverError::Divergence {
                    what,
                    residual: res_inf / b_inf.max(f64::MIN_POSITIVE),
                });
            }
            let alpha = rz / p_ap;
            res_inf = 0.0;
            for idx in 0..n {
                x[idx] += alpha * p[idx];
                r[idx] -= alpha * scratch[idx];
                res_inf = res_inf.max(r[idx].abs());
            }
            if res_inf <= stop {
                // recurrence residuals drift; confirm against the true one
                let true_res = self.residual_inf(x, b, &mut scratch);
                if true_res <= stop * 1.5 {
                    return Ok(SolveStats {
                        iterations: iteration,
                        residual: true_res,
                    });
                }
                for idx in 0..n {
                    r[idx] = if self.rows[idx].active {
                        b[idx] - scratch[idx]
                    } else {
                        0.0
                    };
                }
            }
            for idx in 0..n {
                z[idx] = r[idx] * inv_diag[idx];
            }
            let rz_next = self.dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for idx in 0..n {
                p[idx] = z[idx] + beta * p[idx];
            }
        }
        Err(SolverError::Divergence {
            what,
            residual: res_inf / b_inf.max(f64::MIN_POSITIVE),
        })
    }
}

/// Matrix-free CG for SPD operators that do not fit the 5-point stencil
/// (the semi-implicit phase system applies a squared Laplacian). Same
/// deterministic row-ordered reductions as [`StencilMatrix::solve_pcg`].
pub fn cg_matrix_free(
    apply: impl Fn(&[f64], &mut [f64]),
    x: &mut [f64],
    b: &[f64],
    width: usize,
    rel_tol: f64,
    max_iters: usize,
    what: &'static str,
) -> Result<SolveStats> {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| -> f64 {
        par::map_rows_sum(a, width, |j, row| {
            let base = j * width;
            row.iter()
                .enumerate()
                .map(|(i, v)| v * c[base + i])
                .sum::<f64>()
        })
    };
    let b_inf = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let stop = rel_tol * b_inf;

    let mut scratch = vec![0.0; n];
    apply(x, &mut scratch);
    let mut r: Vec<f64> = b.iter().zip(&scratch).map(|(b, ax)| b - ax).collect();
    let mut res_inf = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res_inf <= stop || b_inf == 0.0 {
        return Ok(SolveStats {
            iterations: 0,
            residual: res_inf,
        });
    }
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for iteration in 1..=max_iters {
        apply(&p, &mut scratch);
        let p_ap = dot(&p, &scratch);
        if p_ap <= 0.0 || !p_ap.is_finite() {
            return Err(SolverError::Divergence {
                what,
                residual: res_inf / b_inf.max(f64::MIN_POSITIVE),
            });
        }
        let alpha = rr / p_ap;
        res_inf = 0.0;
        for idx in 0..n {
            x[idx] += alpha * p[idx];
            r[idx] -= alpha * scratch[idx];
            res_inf = res_inf.max(r[idx].abs());
        }
        if res_inf <= stop {
            return Ok(SolveStats {
                iterations: iteration,
                residual: res_inf,
            });
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        rr = rr_next;
        for idx in 0..n {
            p[idx] = r[idx] + beta * p[idx];
        }
    }
    Err(SolverError::Divergence {
        what,
        residual: res_inf / b_inf.max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1D Poisson with Dirichlet ends as a sanity problem.
    fn poisson_1d(n: usize) -> (StencilMatrix, Vec<f64>, Vec<f64>) {
        let mut m = StencilMatrix::new(n, n);
        let mut b = vec![0.0; n];
        let mut exact = vec![0.0; n];
        let h = 1.0 / (n as f64 + 1.0);
        for i in 0..n {
            let x = (i as f64 + 1.0) * h;
            exact[i] = x * (1.0 - x);
            b[i] = 2.0 * h * h; // -u'' = 2
            let mut row = StencilRow {
                diag: 2.0,
                neighbors: [(usize::MAX, 0.0); 4],
                active: true,
            };
            let mut slot = 0;
            if i > 0 {
                row.neighbors[slot] = (i - 1, -1.0);
                slot += 1;
            }
            if i + 1 < n {
                row.neighbors[slot] = (i + 1, -1.0);
            }
            m.rows[i] = row;
        }
        (m, b, exact)
    }

    #[test]
    fn pcg_solves_poisson() {
        let (m, b, exact) = poisson_1d(64);
        let mut x = vec![0.0; 64];
        let stats = m.solve_pcg(&mut x, &b, 1e-12, 0.0, 10_000, "test").unwrap();
        assert!(stats.residual <= 1e-12 * b.iter().fold(0.0f64, |a, v| a.max(v.abs())) * 1.5);
        for (xi, ei) in x.iter().zip(&exact) {
            assert!((xi - ei).abs() < 1e-8, "{xi} vs {ei}");
        }
    }

    #[test]
    fn pcg_reports_non_convergence() {
        let (m, b, _) = poisson_1d(64);
        let mut x = vec![0.0; 64];
        let err = m.solve_pcg(&mut x, &b, 1e-14, 0.0, 2, "test").unwrap_err();
        assert!(matches!(err, SolverError::Divergence { .. }));
    }

    #[test]
    fn warm_start_converges_immediately() {
        let (m, b, _) = poisson_1d(32);
        let mut x = vec![0.0; 32];
        m.solve_pcg(&mut x, &b, 1e-13, 0.0, 10_000, "test").unwrap();
        let warm = x.clone();
        let mut y = warm.clone();
        let stats = m.solve_pcg(&mut y, &b, 1e-12, 0.0, 10_000, "test").unwrap();
        assert_eq!(stats.iterations, 0);
    }
}
