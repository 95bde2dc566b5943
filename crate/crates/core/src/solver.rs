//! Least-squares fitting of lag coefficients.
//!
//! [`fit_ols`] uses Householder QR with column pivoting and returns the
//! minimum-norm solution when the design is rank deficient. [`fit_nnls`] is
//! the Lawson–Hanson active-set method for `min ‖Xβ − y‖ s.t. β ≥ 0`.
//! Both accept an optional ridge term `λ‖β‖²`, applied by row augmentation.

use std::io::Write;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::design::ColumnMeta;
use crate::error::{Error, Result};
use crate::linalg::{ColMajor, PivotedQr};

/// Pivots below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-10;
/// NNLS stops once no zero coefficient has a dual component above this.
pub const NNLS_DUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverVariant {
    #[default]
    Ols,
    Nnls,
}

impl std::fmt::Display for SolverVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverVariant::Ols => "ols",
            SolverVariant::Nnls => "nnls",
        })
    }
}

impl std::str::FromStr for SolverVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ols" => Ok(SolverVariant::Ols),
            "nnls" => Ok(SolverVariant::Nnls),
            other => Err(Error::Config(format!("unknown solver {other:?} (expected ols or nnls)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub values: Array1<f64>,
    pub variant: SolverVariant,
    pub training_rmse: f64,
    pub iterations: usize,
    pub rank_deficient: bool,
}

impl Coefficients {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zeros(n: usize) -> Self {
        Coefficients {
            values: Array1::zeros(n),
            variant: SolverVariant::Ols,
            training_rmse: 0.0,
            iterations: 0,
            rank_deficient: false,
        }
    }
}

fn validate(x: &ArrayView2<f64>, y: &ArrayView1<f64>) -> Result<()> {
    let (m, n) = x.dim();
    if m == 0 || n == 0 {
        return Err(Error::Dimension(format!("design is {m}x{n}")));
    }
    if y.len() != m {
        return Err(Error::Dimension(format!("x has {m} rows but y has {}", y.len())));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("x"));
    }
    if !y.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    Ok(())
}

/// Column-major copy of `x`, with `sqrt(ridge) I` appended when `ridge > 0`.
fn augmented(x: &ArrayView2<f64>, y: &ArrayView1<f64>, ridge: f64) -> Result<(ColMajor, Vec<f64>)> {
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::Config(format!("ridge must be a finite value >= 0, got {ridge}")));
    }
    let (m, n) = x.dim();
    let extra = if ridge > 0.0 { n } else { 0 };
    let s = ridge.sqrt();
    let a = ColMajor::from_fn(m + extra, n, |i, j| {
        if i < m {
            x[[i, j]]
        } else if i - m == j {
            s
        } else {
            0.0
        }
    });
    let mut b = y.to_vec();
    b.resize(m + extra, 0.0);
    Ok((a, b))
}

fn rmse_of(x: &ArrayView2<f64>, y: &ArrayView1<f64>, beta: &Array1<f64>) -> f64 {
    let pred = x.dot(beta);
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    (sse / y.len() as f64).sqrt()
}

pub fn fit_ols(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Coefficients> {
    fit_ols_ridge(x, y, 0.0)
}

pub fn fit_ols_ridge(x: ArrayView2<f64>, y: ArrayView1<f64>, ridge: f64) -> Result<Coefficients> {
    validate(&x, &y)?;
    let (a, b) = augmented(&x, &y, ridge)?;
    let qr = PivotedQr::new(a, RANK_TOL);
    let values = Array1::from(qr.solve(&b));
    Ok(Coefficients {
        training_rmse: rmse_of(&x, &y, &values),
        values,
        variant: SolverVariant::Ols,
        iterations: 0,
        rank_deficient: qr.is_rank_deficient(),
    })
}

pub fn fit_nnls(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Coefficients> {
    fit_nnls_ridge(x, y, 0.0)
}

pub fn fit_nnls_ridge(x: ArrayView2<f64>, y: ArrayView1<f64>, ridge: f64) -> Result<Coefficients> {
    validate(&x, &y)?;
    let (a, b) = augmented(&x, &y, ridge)?;
    // Tall problems are reduced to the equivalent square system R β ≈ Qᵀ y.
    let (a, b) = if a.rows > a.cols {
        let n = a.cols;
        let qr = PivotedQr::unpivoted(a);
        let mut qtb = b;
        qr.apply_qt(&mut qtb);
        qtb.truncate(n);
        (qr.r_square(), qtb)
    } else {
        (a, b)
    };
    let (beta, iterations, rank_deficient) = lawson_hanson(&a, &b)?;
    let values = Array1::from(beta);
    Ok(Coefficients {
        training_rmse: rmse_of(&x, &y, &values),
        values,
        variant: SolverVariant::Nnls,
        iterations,
        rank_deficient,
    })
}

pub fn fit(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    variant: SolverVariant,
    ridge: f64,
) -> Result<Coefficients> {
    match variant {
        SolverVariant::Ols => fit_ols_ridge(x, y, ridge),
        SolverVariant::Nnls => fit_nnls_ridge(x, y, ridge),
    }
}

pub fn nnls_iteration_cap(cols: usize) -> usize {
    (10 * cols).max(100)
}

/// Returns the solution, the number of passive-set solves, and whether any
/// passive-set solve was rank deficient.
fn lawson_hanson(a: &ColMajor, b: &[f64]) -> Result<(Vec<f64>, usize, bool)> {
    let n = a.cols;
    let cap = nnls_iteration_cap(n);
    let mut x = vec![0.0; n];
    let mut passive = vec![false; n];
    let mut iterations = 0;
    let mut rank_deficient = false;

    let dual = |x: &[f64]| -> Vec<f64> {
        let ax = a.mul_vec(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        a.tmul_vec(&r)
    };
    let solve_passive = |passive: &[bool], rank_deficient: &mut bool| -> Vec<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let qr = PivotedQr::new(a.select_columns(&idx), RANK_TOL);
        *rank_deficient |= qr.is_rank_deficient();
        let sol = qr.solve(b);
        let mut z = vec![0.0; n];
        for (k, &j) in idx.iter().enumerate() {
            z[j] = sol[k];
        }
        z
    };

    let mut w = dual(&x);
    // Columns whose entry was rejected for numerical reasons in this outer step.
    let mut blocked = vec![false; n];
    loop {
        let candidate = (0..n)
            .filter(|&j| !passive[j] && !blocked[j] && w[j] > NNLS_DUAL_TOL)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]).then(j.cmp(&i)));
        let Some(t) = candidate else {
            break;
        };
        passive[t] = true;

        let mut first = true;
        loop {
            iterations += 1;
            if iterations > cap {
                return Err(Error::Convergence(cap));
            }
            let z = solve_passive(&passive, &mut rank_deficient);
            if first && z[t] <= 0.0 {
                // The entering column cannot move off zero; try the next one.
                passive[t] = false;
                blocked[t] = true;
                break;
            }
            first = false;
            if (0..n).filter(|&j| passive[j]).all(|j| z[j] > 0.0) {
                x = z;
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            // Step toward z until the first passive coefficient hits zero.
            let mut alpha = f64::INFINITY;
            for j in (0..n).filter(|&j| passive[j] && z[j] <= 0.0) {
                alpha = alpha.min(x[j] / (x[j] - z[j]));
            }
            for j in 0..n {
                x[j] += alpha * (z[j] - x[j]);
            }
            for j in 0..n {
                if passive[j] && x[j] <= 0.0 {
                    passive[j] = false;
                    x[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
        for j in 0..n {
            if !passive[j] {
                x[j] = 0.0;
            }
        }
        w = dual(&x);
    }
    Ok((x, iterations, rank_deficient))
}

pub fn predict(x: ArrayView2<f64>, coefficients: &Coefficients) -> Result<Array1<f64>> {
    if x.ncols() != coefficients.len() {
        return Err(Error::Dimension(format!(
            "x has {} columns but there are {} coefficients",
            x.ncols(),
            coefficients.len()
        )));
    }
    Ok(x.dot(&coefficients.values))
}

/// Writes coefficients as `city,lag,value`; an intercept is written as `intercept,0`.
pub fn write_coefficients_csv<W: Write>(
    col_meta: &[ColumnMeta],
    coefficients: &Coefficients,
    writer: W,
) -> Result<()> {
    if col_meta.len() != coefficients.len() {
        return Err(Error::Dimension("column metadata and coefficients differ in length".into()));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Dimension(e.to_string());
    wtr.write_record(["city", "lag", "value"]).map_err(err)?;
    for (meta, v) in col_meta.iter().zip(&coefficients.values) {
        let (city, lag) = match meta {
            ColumnMeta::Lagged { city, lag } => (city.as_str(), *lag),
            ColumnMeta::Intercept => ("intercept", 0),
        };
        wtr.write_record([city, &lag.to_string(), &v.to_string()]).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::io("<coefficient writer>", e))?;
    Ok(())
}

/// Slow reference solvers for cross-checking the production paths.
pub mod oracle {
    use super::*;

    pub const OLS_MAX_COLS: usize = 12;
    pub const NNLS_MAX_COLS: usize = 10;

    /// Solves the normal equations `XᵀX β = Xᵀy` by Gaussian elimination with
    /// partial pivoting.
    pub fn oracle_ols(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Coefficients> {
        validate(&x, &y)?;
        let n = x.ncols();
        if n > OLS_MAX_COLS {
            return Err(Error::Dimension(format!("oracle_ols handles at most {OLS_MAX_COLS} columns")));
        }
        let gram = x.t().dot(&x);
        let rhs = x.t().dot(&y);
        let mut aug: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = gram.row(i).to_vec();
                row.push(rhs[i]);
                row
            })
            .collect();
        let scale = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| aug[i][k].abs().total_cmp(&aug[j][k].abs()))
                .unwrap();
            if aug[p][k].abs() <= 1e-12 * scale || scale == 0.0 {
                return Err(Error::Singular(format!("normal matrix pivot {k} vanishes")));
            }
            aug.swap(k, p);
            for i in k + 1..n {
                let f = aug[i][k] / aug[k][k];
                for j in k..=n {
                    aug[i][j] -= f * aug[k][j];
                }
            }
        }
        let mut beta = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| aug[i][j] * beta[j]).sum();
            beta[i] = (aug[i][n] - s) / aug[i][i];
        }
        let values = Array1::from(beta);
        Ok(Coefficients {
            training_rmse: rmse_of(&x, &y, &values),
            values,
            variant: SolverVariant::Ols,
            iterations: 0,
            rank_deficient: false,
        })
    }

    /// Enumerates every subset of columns held at zero, solves the rest by
    /// [`oracle_ols`], and keeps the best feasible candidate.
    pub fn oracle_nnls(x: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<Coefficients> {
        validate(&x, &y)?;
        let n = x.ncols();
        if n > NNLS_MAX_COLS {
            return Err(Error::Dimension(format!("oracle_nnls handles at most {NNLS_MAX_COLS} columns")));
        }
        let mut best: Option<(f64, Array1<f64>)> = None;
        for mask in 0u32..(1 << n) {
            let free: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            let mut beta = Array1::zeros(n);
            if !free.is_empty() {
                let sub = x.select(ndarray::Axis(1), &free);
                let Ok(fit) = oracle_ols(sub.view(), y) else {
                    continue;
                };
                if fit.values.iter().any(|&v| v < -1e-12) {
                    continue;
                }
                for (k, &j) in free.iter().enumerate() {
                    beta[j] = fit.values[k].max(0.0);
                }
            }
            let r = rmse_of(&x, &y, &beta);
            if best.as_ref().is_none_or(|(br, _)| r < *br) {
                best = Some((r, beta));
            }
        }
        let (training_rmse, values) =
            best.ok_or_else(|| Error::Singular("no feasible subset".into()))?;
        Ok(Coefficients {
            values,
            variant: SolverVariant::Nnls,
            training_rmse,
            iterations: 0,
            rank_deficient: false,
        })
    }
}
