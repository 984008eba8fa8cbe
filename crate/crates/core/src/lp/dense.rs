//! Explicit dense basis inverse, stored column-major.

pub(crate) struct DenseInverse {
    m: usize,
    // column k occupies data[k*m .. (k+1)*m]
    data: Vec<f64>,
}

impl DenseInverse {
    pub(crate) fn identity(m: usize) -> Self {
        let mut data = vec![0.0; m * m];
        for i in 0..m {
            data[i * m + i] = 1.0;
        }
        DenseInverse { m, data }
    }

    #[inline]
    pub(crate) fn column(&self, k: usize) -> &[f64] {
        &self.data[k * self.m..(k + 1) * self.m]
    }

    /// `B^{-1} a` for a sparse `a`.
    pub(crate) fn solve_sparse(&self, a: &[(usize, f64)], out: &mut [f64]) {
        out.fill(0.0);
        for &(k, v) in a {
            for (o, b) in out.iter_mut().zip(self.column(k)) {
                *o += v * b;
            }
        }
    }

    /// `c^T B^{-1}`.
    pub(crate) fn left_solve(&self, c: &[f64], out: &mut [f64]) {
        let nz: Vec<usize> = (0..self.m).filter(|&i| c[i] != 0.0).collect();
        for (k, o) in out.iter_mut().enumerate() {
            let col = self.column(k);
            *o = nz.iter().map(|&i| c[i] * col[i]).sum();
        }
    }

    /// Product-form update after the basic variable in row `r` is replaced by
    /// a column whose transformed vector is `alpha`.
    pub(crate) fn pivot(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let inv_piv = 1.0 / alpha[r];
        for k in 0..m {
            let col = &mut self.data[k * m..(k + 1) * m];
            let cr = col[r];
            if cr == 0.0 {
                continue;
            }
            let f = cr * inv_piv;
            for (i, (c, a)) in col.iter_mut().zip(alpha).enumerate() {
                if i != r && *a != 0.0 {
                    *c -= a * f;
                }
            }
            col[r] = f;
        }
    }

    /// Invert a dense basis given as sparse columns. On failure returns the
    /// positions (basis slots) whose columns are linearly dependent.
    pub(crate) fn factor(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Vec<usize>> {
        // Gauss-Jordan on [B | I] in row-major scratch.
        let w = 2 * m;
        let mut a = vec![0.0; m * w];
        for (j, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                a[i * w + j] += v;
            }
        }
        for i in 0..m {
            a[i * w + m + i] = 1.0;
        }
        let mut row_of_col = vec![usize::MAX; m];
        let mut used = vec![false; m];
        let mut dependent = Vec::new();
        for j in 0..m {
            let mut best = None;
            let mut best_val = 1e-11;
            for i in 0..m {
                if !used[i] {
                    let v = a[i * w + j].abs();
                    if v > best_val {
                        best_val = v;
                        best = Some(i);
                    }
                }
            }
            let Some(p) = best else {
                dependent.push(j);
                continue;
            };
            used[p] = true;
            row_of_col[j] = p;
            let inv = 1.0 / a[p * w + j];
            for x in &mut a[p * w..(p + 1) * w] {
                *x *= inv;
            }
            let pivot_row: Vec<f64> = a[p * w..(p + 1) * w].to_vec();
            for i in 0..m {
                if i == p {
                    continue;
                }
                let f = a[i * w + j];
                if f != 0.0 {
                    for (x, pr) in a[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                        *x -= f * pr;
                    }
                }
            }
        }
        if !dependent.is_empty() {
            return Err(dependent);
        }
        // Row p of the right half is row j of B^{-1}, where column j pivoted on p.
        let mut data = vec![0.0; m * m];
        for j in 0..m {
            let p = row_of_col[j];
            for k in 0..m {
                data[k * m + j] = a[p * w + m + k];
            }
        }
        Ok(DenseInverse { m, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_and_update_agree() {
        let cols = vec![
            vec![(0, 2.0), (1, 1.0)],
            vec![(1, 3.0), (2, 1.0)],
            vec![(0, 1.0), (2, 4.0)],
        ];
        let inv = DenseInverse::factor(3, &cols).unwrap();
        let mut out = vec![0.0; 3];
        for (j, c) in cols.iter().enumerate() {
            inv.solve_sparse(c, &mut out);
            for (i, v) in out.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((v - e).abs() < 1e-12);
            }
        }
        // replace column 1 by e_0 + e_1 via a pivot and compare with refactor
        let newc = vec![(0, 1.0), (1, 1.0)];
        let mut inv2 = inv;
        inv2.solve_sparse(&newc, &mut out);
        inv2.pivot(1, &out.clone());
        let fresh = DenseInverse::factor(3, &[cols[0].clone(), newc, cols[2].clone()]).unwrap();
        for (a, b) in inv2.data.iter().zip(&fresh.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let cols = vec![vec![(0, 1.0)], vec![(0, 2.0)]];
        assert_eq!(DenseInverse::factor(2, &cols).err(), Some(vec![1]));
    }
}
