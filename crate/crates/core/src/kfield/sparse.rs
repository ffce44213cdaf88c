//! Compressed sparse rows, ILU(0) and restarted GMRES for the Newton steps.

/// Square sparse matrix with sorted, duplicate-free column indices per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from per-row (column, value) lists; duplicates are summed.
    pub fn from_rows(n: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                assert!(c < n, "column {c} out of range");
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Csr { n, row_ptr, cols, vals }
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.binary_search(&j).map(|p| v[p]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (c, v) = self.row(i);
            *yi = c.iter().zip(v).map(|(&j, a)| a * x[j]).sum();
        }
    }

    /// First row whose entries are all zero.
    pub fn zero_row(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.row(i).1.iter().all(|v| *v == 0.0))
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Clone, Debug)]
pub struct Ilu0 {
    lu: Csr,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Fails with the offending row when a pivot vanishes.
    pub fn new(a: &Csr) -> Result<Self, usize> {
        let mut lu = a.clone();
        let n = a.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            let (c, _) = lu.row(i);
            match c.binary_search(&i) {
                Ok(p) => diag[i] = lu.row_ptr[i] + p,
                Err(_) => return Err(i),
            }
        }
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let piv = lu.vals[diag[k]];
                if piv == 0.0 || !piv.is_finite() {
                    return Err(k);
                }
                let lik = lu.vals[p] / piv;
                lu.vals[p] = lik;
                // row_i[j] -= l_ik · row_k[j] for j > k within the pattern
                let (ks, ke) = (diag[k] + 1, lu.row_ptr[k + 1]);
                let mut q = p + 1;
                for kp in ks..ke {
                    let j = lu.cols[kp];
                    while q < end && lu.cols[q] < j {
                        q += 1;
                    }
                    if q < end && lu.cols[q] == j {
                        lu.vals[q] -= lik * lu.vals[kp];
                    }
                }
            }
            let d = lu.vals[diag[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(i);
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Solves LU x = b in place.
    pub fn apply(&self, x: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = x[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                s -= lu.vals[p] * x[lu.cols[p]];
            }
            x[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = x[i];
            for p in (self.diag[i] + 1)..lu.row_ptr[i + 1] {
                s -= lu.vals[p] * x[lu.cols[p]];
            }
            x[i] = s / lu.vals[self.diag[i]];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Right-preconditioned restarted GMRES for A x = b, starting from x = 0.
pub fn gmres(a: &Csr, b: &[f64], pre: &Ilu0, restart: usize, max_iter: usize, rtol: f64) -> (Vec<f64>, GmresReport) {
    let n = a.n;
    let mut x = vec![0.0; n];
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return (
            x,
            GmresReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let m = restart.max(1);
    let mut total = 0;
    let mut r = b.to_vec();
    let mut tmp = vec![0.0; n];
    loop {
        let beta = norm(&r);
        let rel = beta / bnorm;
        if rel <= rtol || total >= max_iter {
            return (
                x,
                GmresReport {
                    iterations: total,
                    relative_residual: rel,
                    converged: rel <= rtol,
                },
            );
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|ri| ri / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            let mut zk = v[k].clone();
            pre.apply(&mut zk);
            a.matvec(&zk, &mut tmp);
            z.push(zk);
            let mut w = tmp.clone();
            // modified Gram-Schmidt
            for (jj, vj) in v.iter().enumerate() {
                let hij = dot(&w, vj);
                h[jj][k] = hij;
                for (wi, vi) in w.iter_mut().zip(vj) {
                    *wi -= hij * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1][k] = hn;
            for jj in 0..k {
                let t = cs[jj] * h[jj][k] + sn[jj] * h[jj + 1][k];
                h[jj + 1][k] = -sn[jj] * h[jj][k] + cs[jj] * h[jj + 1][k];
                h[jj][k] = t;
            }
            let d = h[k][k].hypot(h[k + 1][k]);
            if d == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = h[k][k] / d;
                sn[k] = h[k + 1][k] / d;
            }
            h[k][k] = d;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k_used = k + 1;
            if g[k + 1].abs() / bnorm <= rtol || hn == 0.0 || total >= max_iter {
                break;
            }
            v.push(w.iter().map(|wi| wi / hn).collect());
        }
        // back substitution for the least-squares coefficients
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in (i + 1)..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = if h[i][i] != 0.0 { s / h[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z[j]) {
                *xi += yj * zi;
            }
        }
        a.matvec(&x, &mut tmp);
        for i in 0..n {
            r[i] = b[i] - tmp[i];
        }
        if k_used == 0 {
            let rel = norm(&r) / bnorm;
            return (
                x,
                GmresReport {
                    iterations: total,
                    relative_residual: rel,
                    converged: rel <= rtol,
                },
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplace_1d(n: usize, shift: f64) -> Csr {
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 2.0 + shift)];
                if i > 0 {
                    r.push((i - 1, -1.0));
                }
                if i + 1 < n {
                    r.push((i + 1, -1.0));
                }
                r
            })
            .collect();
        Csr::from_rows(n, rows)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = Csr::from_rows(2, vec![vec![(1, 1.0), (0, 2.0), (1, 3.0)], vec![(0, 1.0)]]);
        assert_eq!(a.get(0, 1), 4.0);
        assert_eq!(a.cols, vec![0, 1, 0]);
        assert_eq!(a.zero_row(), None);
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let a = laplace_1d(10, 0.1);
        let ilu = Ilu0::new(&a).unwrap();
        let b: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        ilu.apply(&mut x);
        let mut ax = vec![0.0; 10];
        a.matvec(&x, &mut ax);
        assert!(ax.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-12));
    }

    #[test]
    fn missing_diagonal_is_reported() {
        let a = Csr::from_rows(2, vec![vec![(1, 1.0)], vec![(0, 1.0)]]);
        assert_eq!(Ilu0::new(&a).unwrap_err(), 0);
    }

    proptest! {
        #[test]
        fn gmres_solves_perturbed_systems(seed in 0u64..1000, n in 3usize..40) {
            // periodic coupling makes ILU(0) inexact so GMRES has work to do
            let mut rows: Vec<Vec<(usize, f64)>> = (0..n)
                .map(|i| vec![(i, 3.0 + (i as f64 * 0.7 + seed as f64).sin()), ((i + 1) % n, -1.0), ((i + n - 1) % n, -1.2)])
                .collect();
            rows[0].push((n / 2, 0.5));
            let a = Csr::from_rows(n, rows);
            let ilu = Ilu0::new(&a).unwrap();
            let b: Vec<f64> = (0..n).map(|i| ((i * 7 + seed as usize) % 5) as f64 - 2.0).collect();
            let (x, rep) = gmres(&a, &b, &ilu, 5, 500, 1e-12);
            prop_assert!(rep.converged);
            let mut ax = vec![0.0; n];
            a.matvec(&x, &mut ax);
            let err = ax.iter().zip(&b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-9 * (1.0 + norm(&b)));
        }
    }
}
