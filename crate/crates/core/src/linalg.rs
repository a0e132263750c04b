//! Householder QR least squares for the small dense designs used here.

/// Column-major dense matrix (n rows, p columns).
#[derive(Debug, Clone)]
pub(crate) struct Design {
    pub n: usize,
    pub p: usize,
    pub cols: Vec<Vec<f64>>,
}

impl Design {
    pub fn from_rows(rows: &[Vec<f64>], intercept: bool) -> Self {
        let n = rows.len();
        let k = rows.first().map_or(0, Vec::len);
        let mut cols = Vec::with_capacity(k + usize::from(intercept));
        if intercept {
            cols.push(vec![1.0; n]);
        }
        for j in 0..k {
            cols.push(rows.iter().map(|r| r[j]).collect());
        }
        Self {
            n,
            p: cols.len(),
            cols,
        }
    }

    pub fn row_dot(&self, i: usize, beta: &[f64]) -> f64 {
        self.cols.iter().zip(beta).map(|(c, b)| c[i] * b).sum()
    }

    /// `y - x_i'beta`, subtracting one fused term at a time (no rounded fitted value).
    pub fn residual(&self, i: usize, y: f64, beta: &[f64]) -> f64 {
        self.cols.iter().zip(beta).fold(y, |r, (c, b)| (-c[i]).mul_add(*b, r))
    }
}

pub(crate) struct LstsqFit {
    pub beta: Vec<f64>,
    /// Diagonal of `(X'X)^{-1}` (unweighted design scale).
    pub xtx_inv_diag: Vec<f64>,
}

/// Indices of columns whose QR pivot is negligible relative to the largest.
pub(crate) type Deficient = Vec<usize>;

/// Solve `min ||sqrt(w) (y - X b)||` by Householder QR without pivoting.
/// Returns the offending column indices if the design is numerically rank deficient.
pub(crate) fn lstsq(x: &Design, y: &[f64], weights: Option<&[f64]>) -> Result<LstsqFit, Deficient> {
    let (n, p) = (x.n, x.p);
    let sw: Vec<f64> = match weights {
        Some(w) => w.iter().map(|v| v.sqrt()).collect(),
        None => vec![1.0; n],
    };
    let mut a: Vec<Vec<f64>> = x
        .cols
        .iter()
        .map(|c| c.iter().zip(&sw).map(|(v, s)| v * s).collect())
        .collect();
    let mut b: Vec<f64> = y.iter().zip(&sw).map(|(v, s)| v * s).collect();
    let col_norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();

    let mut rdiag = vec![0.0; p];
    let mut reflectors: Vec<(usize, Vec<f64>, f64)> = Vec::with_capacity(p);
    let mut deficient = Vec::new();
    for k in 0..p.min(n) {
        let alpha = norm(&a[k][k..]);
        let scale = col_norms[k].max(f64::MIN_POSITIVE);
        if alpha <= 1e-10 * scale {
            deficient.push(k);
            continue;
        }
        let alpha = if a[k][k] > 0.0 { -alpha } else { alpha };
        // v = a_k[k..] - alpha e_1, stored in place
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            for col in a.iter_mut().skip(k) {
                reflect(&mut col[k..], &v, vnorm2);
            }
            reflect(&mut b[k..], &v, vnorm2);
            reflectors.push((k, v, vnorm2));
        }
        rdiag[k] = alpha;
        a[k][k] = alpha;
        for t in a[k].iter_mut().skip(k + 1) {
            *t = 0.0;
        }
    }
    if p > n {
        deficient.extend(n..p);
    }
    if !deficient.is_empty() {
        return Err(deficient);
    }

    // back substitution R beta = Q'b
    let solve = |rhs: &[f64]| {
        let mut beta = vec![0.0; p];
        for k in (0..p).rev() {
            let s: f64 = (k + 1..p).map(|j| a[j][k] * beta[j]).sum();
            beta[k] = (rhs[k] - s) / rdiag[k];
        }
        beta
    };
    let mut beta = solve(&b);

    // iterative refinement on the weighted residual; exact fits end exact
    for _ in 0..3 {
        let mut r: Vec<f64> = (0..n).map(|i| x.residual(i, y[i], &beta) * sw[i]).collect();
        for (k, v, vnorm2) in &reflectors {
            reflect(&mut r[*k..], v, *vnorm2);
        }
        let delta = solve(&r);
        if delta.iter().all(|d| *d == 0.0) {
            break;
        }
        for (bk, d) in beta.iter_mut().zip(delta) {
            *bk += d;
        }
    }

    // R^{-1} columns, then diag((R'R)^{-1}) = row norms of R^{-1}
    let mut rinv = vec![vec![0.0; p]; p]; // rinv[i][j], upper triangular
    for j in 0..p {
        rinv[j][j] = 1.0 / a[j][j];
        for i in (0..j).rev() {
            let s: f64 = (i + 1..=j).map(|k| a[k][i] * rinv[k][j]).sum();
            rinv[i][j] = -s / a[i][i];
        }
    }
    let xtx_inv_diag = (0..p)
        .map(|i| rinv[i][i..].iter().map(|v| v * v).sum())
        .collect();
    Ok(LstsqFit { beta, xtx_inv_diag })
}

fn norm(v: &[f64]) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * v.iter().map(|x| (x / scale) * (x / scale)).sum::<f64>().sqrt()
}

fn reflect(x: &mut [f64], v: &[f64], vnorm2: f64) {
    let d: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    let f = 2.0 * d / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}
