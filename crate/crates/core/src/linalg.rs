//! Dense and banded LU factorizations with partial pivoting.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense LU factorization `P A = L U`.
#[derive(Debug, Clone)]
pub struct DenseLu<S> {
    n: usize,
    lu: Vec<S>,
    perm: Vec<usize>,
}

impl<S: Scalar> DenseLu<S> {
    pub fn factor(n: usize, mut a: Vec<S>) -> Result<Self> {
        Error::check_dim(n * n, a.len())?;
        let max_abs = a.iter().fold(S::zero(), |m, &x| m.max(x.abs()));
        let threshold = max_abs * S::epsilon();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (piv, piv_abs) = (k..n)
                .map(|i| (i, a[i * n + k].abs()))
                .fold((k, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(piv_abs > threshold) || !piv_abs.is_finite() {
                return Err(Error::Singular(k));
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                let l = a[i * n + k] / pivot;
                a[i * n + k] = l;
                if l != S::zero() {
                    for j in k + 1..n {
                        a[i * n + j] = a[i * n + j] - l * a[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu: a, perm })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s = s - self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Square banded matrix with `kl` sub- and `ku` super-diagonals, stored with
/// room for the `kl` extra super-diagonals produced by row pivoting.
#[derive(Debug, Clone)]
pub struct BandMatrix<S> {
    m: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<S>,
}

impl<S: Scalar> BandMatrix<S> {
    pub fn zeros(m: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            m,
            kl,
            ku,
            width,
            data: vec![S::zero(); m * width],
        }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.kl + self.ku {
            None
        } else {
            Some(i * self.width + (j + self.kl - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.slot(i, j).map_or(S::zero(), |s| self.data[s])
    }

    /// Adds `value` at `(i, j)`; panics if the entry lies outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, value: S) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).expect("in band");
        self.data[s] = self.data[s] + value;
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        (0..self.m)
            .map(|i| {
                let lo = i.saturating_sub(self.kl);
                let hi = (i + self.ku).min(self.m - 1);
                (lo..=hi).map(|j| self.get(i, j) * x[j]).sum()
            })
            .collect()
    }

    pub fn factor(mut self) -> Result<BandLu<S>> {
        let m = self.m;
        let (kl, ku) = (self.kl, self.ku);
        let max_abs = self.data.iter().fold(S::zero(), |acc, &x| acc.max(x.abs()));
        let threshold = max_abs * S::epsilon();
        let mut pivots = vec![0usize; m];
        for k in 0..m {
            let last_row = (k + kl).min(m - 1);
            let (piv, piv_abs) = (k..=last_row)
                .map(|i| (i, self.get(i, k).abs()))
                .fold((k, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(piv_abs > threshold) || !piv_abs.is_finite() {
                return Err(Error::Singular(k));
            }
            pivots[k] = piv;
            let last_col = (k + kl + ku).min(m - 1);
            if piv != k {
                for j in k..=last_col {
                    let a = self.slot(k, j).expect("in band");
                    let b = self.slot(piv, j).expect("in band");
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last_row {
                let si = self.slot(i, k).expect("in band");
                let l = self.data[si] / pivot;
                self.data[si] = l;
                if l == S::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let ukj = self.get(k, j);
                    if ukj != S::zero() {
                        let s = self.slot(i, j).expect("in band");
                        self.data[s] = self.data[s] - l * ukj;
                    }
                }
            }
        }
        Ok(BandLu {
            band: self,
            pivots,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandLu<S> {
    band: BandMatrix<S>,
    pivots: Vec<usize>,
}

impl<S: Scalar> BandLu<S> {
    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let a = &self.band;
        let m = a.m;
        let mut x = b.to_vec();
        for k in 0..m {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let last_row = (k + a.kl).min(m - 1);
            for i in k + 1..=last_row {
                x[i] = x[i] - a.get(i, k) * x[k];
            }
        }
        for k in (0..m).rev() {
            let last_col = (k + a.kl + a.ku).min(m - 1);
            let mut s = x[k];
            for j in k + 1..=last_col {
                s = s - a.get(k, j) * x[j];
            }
            x[k] = s / a.get(k, k);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_lu_solves_with_pivoting() {
        let a = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let lu = DenseLu::factor(3, a.clone()).unwrap();
        let x = lu.solve(&[3.0, 2.0, 4.0]);
        for i in 0..3 {
            let r: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((r - [3.0, 2.0, 4.0][i]).abs() < 1e-13);
        }
        assert!(DenseLu::factor(2, vec![1.0, 2.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn band_lu_matches_dense() {
        let m = 9;
        let (kl, ku) = (2, 1);
        let mut band = BandMatrix::zeros(m, kl, ku);
        let mut dense = vec![0.0; m * m];
        for i in 0..m {
            for j in i.saturating_sub(kl)..=(i + ku).min(m - 1) {
                // small diagonal so pivoting actually happens
                let v = if i == j { 0.1 } else { ((i * 7 + j * 3) % 5) as f64 - 2.0 };
                band.add(i, j, v);
                dense[i * m + j] = v;
            }
        }
        let b: Vec<f64> = (0..m).map(|i| i as f64 - 3.0).collect();
        let xb = band.clone().factor().unwrap().solve(&b);
        let xd = DenseLu::factor(m, dense).unwrap().solve(&b);
        for (u, v) in xb.iter().zip(&xd) {
            assert!((u - v).abs() < 1e-10, "{u} vs {v}");
        }
        let r = band.mul_vec(&xb);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).abs() < 1e-10);
        }
    }
}
