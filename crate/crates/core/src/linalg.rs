//! Dense Householder QR kernels used by the solvers.
//!
//! Matrices are column-major so that reflector application walks contiguous
//! memory.

#[derive(Debug, Clone)]
pub(crate) struct ColMajor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ColMajor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ColMajor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for j in 0..cols {
            for i in 0..rows {
                m.data[j * rows + i] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn select_columns(&self, cols: &[usize]) -> ColMajor {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        ColMajor {
            rows: self.rows,
            cols: cols.len(),
            data,
        }
    }

    /// `self * v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                for (o, a) in out.iter_mut().zip(self.col(j)) {
                    *o += a * vj;
                }
            }
        }
        out
    }

    /// `selfᵀ * v`.
    pub fn tmul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds the reflector that maps `x` onto `beta * e_1`. On return `x[1..]`
/// holds the reflector tail (implicit leading 1) and `x[0]` holds `beta`.
fn make_reflector(x: &mut [f64]) -> f64 {
    let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
    let alpha = x[0];
    if tail_sq == 0.0 {
        return 0.0;
    }
    let norm = (alpha * alpha + tail_sq).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let tau = (beta - alpha) / beta;
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    x[0] = beta;
    tau
}

/// Applies `I - tau v vᵀ` (v stored as implicit 1 followed by `tail`) to `y`.
#[inline]
fn apply_reflector(tail: &[f64], tau: f64, y: &mut [f64]) {
    if tau == 0.0 {
        return;
    }
    let s = y[0] + dot(tail, &y[1..]);
    let ts = tau * s;
    y[0] -= ts;
    for (yi, vi) in y[1..].iter_mut().zip(tail) {
        *yi -= ts * vi;
    }
}

/// Householder QR with column pivoting, `A P = Q R`.
#[derive(Debug, Clone)]
pub(crate) struct PivotedQr {
    qr: ColMajor,
    tau: Vec<f64>,
    /// `perm[k]` is the original column placed at position `k`.
    pub perm: Vec<usize>,
    pub rank: usize,
}

impl PivotedQr {
    /// Factors `a`, stopping once the largest remaining column norm falls to
    /// `rel_tol` times the first pivot.
    pub fn new(mut a: ColMajor, rel_tol: f64) -> Self {
        let (m, n) = (a.rows, a.cols);
        let steps = m.min(n);
        let mut perm: Vec<usize> = (0..n).collect();
        let mut tau = Vec::with_capacity(steps);
        let mut rank = 0;
        let mut first_pivot = 0.0;
        for k in 0..steps {
            // Pick the remaining column with the largest trailing norm.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let col = &a.data[j * m + k..(j + 1) * m];
                let nrm = dot(col, col);
                if nrm > best_norm {
                    best_norm = nrm;
                    best = j;
                }
            }
            let best_norm = best_norm.sqrt();
            if k == 0 {
                first_pivot = best_norm;
            }
            if best_norm == 0.0 || best_norm <= rel_tol * first_pivot {
                break;
            }
            if best != k {
                for i in 0..m {
                    a.data.swap(k * m + i, best * m + i);
                }
                perm.swap(k, best);
            }
            let (left, right) = a.data.split_at_mut((k + 1) * m);
            let col_k = &mut left[k * m + k..];
            let t = make_reflector(col_k);
            let tail = &col_k[1..];
            for j in 0..(n - k - 1) {
                apply_reflector(tail, t, &mut right[j * m + k..(j + 1) * m]);
            }
            tau.push(t);
            rank = k + 1;
        }
        PivotedQr { qr: a, tau, perm, rank }
    }

    pub fn rows(&self) -> usize {
        self.qr.rows
    }

    pub fn cols(&self) -> usize {
        self.qr.cols
    }

    pub fn is_rank_deficient(&self) -> bool {
        self.rank < self.cols()
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.qr.get(i, j)
    }

    /// Replaces `b` with `Qᵀ b`.
    pub fn apply_qt(&self, b: &mut [f64]) {
        let m = self.rows();
        for (k, &t) in self.tau.iter().enumerate() {
            let tail = &self.qr.data[k * m + k + 1..(k + 1) * m];
            apply_reflector(tail, t, &mut b[k..]);
        }
    }

    /// Minimum-norm least-squares solution of `A x ≈ b` restricted to the
    /// numerical rank.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, r) = (self.cols(), self.rank);
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let c = &qtb[..r];
        let z = if r == n {
            back_substitute(r, |i, j| self.r(i, j), c)
        } else {
            // Minimum-norm solution of the trapezoid [R11 R12] z = c via QR of its transpose.
            let t = ColMajor::from_fn(n, r, |i, j| if i >= j { self.r(j, i) } else { 0.0 });
            let qr_t = PivotedQr::unpivoted(t);
            // Tᵀ = Q2 R2, so T z = R2ᵀ Q2ᵀ z = c; solve R2ᵀ w = c then z = Q2 [w; 0].
            let w = forward_substitute_transposed(r, |i, j| qr_t.r(i, j), c);
            let mut z = vec![0.0; n];
            z[..r].copy_from_slice(&w);
            qr_t.apply_q(&mut z);
            z
        };
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = z[k];
        }
        x
    }

    /// Plain Householder QR, every column kept.
    pub fn unpivoted(mut a: ColMajor) -> Self {
        let (m, n) = (a.rows, a.cols);
        let steps = m.min(n);
        let mut tau = Vec::with_capacity(steps);
        for k in 0..steps {
            let (left, right) = a.data.split_at_mut((k + 1) * m);
            let col_k = &mut left[k * m + k..];
            let t = make_reflector(col_k);
            let tail = &col_k[1..];
            for j in 0..(n - k - 1) {
                apply_reflector(tail, t, &mut right[j * m + k..(j + 1) * m]);
            }
            tau.push(t);
        }
        PivotedQr {
            qr: a,
            tau,
            perm: (0..n).collect(),
            rank: steps,
        }
    }

    /// Replaces `b` with `Q b`.
    pub fn apply_q(&self, b: &mut [f64]) {
        let m = self.rows();
        for (k, &t) in self.tau.iter().enumerate().rev() {
            let tail = &self.qr.data[k * m + k + 1..(k + 1) * m];
            apply_reflector(tail, t, &mut b[k..]);
        }
    }

    /// The leading `cols × cols` block of R (upper triangular), column-major.
    pub fn r_square(&self) -> ColMajor {
        let n = self.cols();
        ColMajor::from_fn(n, n, |i, j| if i <= j && i < self.rows() { self.r(i, j) } else { 0.0 })
    }
}

fn back_substitute(n: usize, r: impl Fn(usize, usize) -> f64, c: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = c[i];
        for j in i + 1..n {
            s -= r(i, j) * x[j];
        }
        x[i] = s / r(i, i);
    }
    x
}

/// Solves `Rᵀ w = c` for upper-triangular `R`.
fn forward_substitute_transposed(n: usize, r: impl Fn(usize, usize) -> f64, c: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut s = c[i];
        for j in 0..i {
            s -= r(j, i) * w[j];
        }
        w[i] = s / r(i, i);
    }
    w
}
