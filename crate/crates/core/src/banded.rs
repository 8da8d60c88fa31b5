//! Row-major band storage and LU factorization with partial pivoting.
//!
//! Entry `(i, j)` of a matrix with `kl` sub- and `ku` super-diagonals is
//! stored at `data[i * width + (j + kl - i)]`, `width = kl + ku + 1`.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

/// A zero (or numerically zero) pivot was met at the given column.
#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("singular band matrix: zero pivot at column {column}")]
pub struct SingularPivot {
    pub column: usize,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self { n, kl, ku, data: vec![0.0; n * (kl + ku + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        i * (self.kl + self.ku + 1) + (j + self.kl - i)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.data[self.index(i, j)]
        } else {
            0.0
        }
    }

    /// Sets entry `(i, j)`. Panics if `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.n && j < self.n && self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.index(i, j);
        self.data[k] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.n && j < self.n && self.in_band(i, j), "({i}, {j}) outside band");
        let k = self.index(i, j);
        self.data[k] += value;
    }

    /// Column range `[lo, hi)` of nonzero-capable entries in row `i`.
    #[inline]
    fn row_span(&self, i: usize) -> (usize, usize) {
        (i.saturating_sub(self.kl), (i + self.ku + 1).min(self.n))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                let (lo, hi) = self.row_span(i);
                (lo..hi).map(|j| self.data[self.index(i, j)] * x[j]).sum()
            })
            .collect()
    }

    /// `x ↦ Aᵀx`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let (lo, hi) = self.row_span(i);
            for j in lo..hi {
                y[j] += self.data[self.index(i, j)] * x[i];
            }
        }
        y
    }

    /// Band product `self · other`; bandwidths add.
    pub fn mul(&self, other: &BandMatrix) -> BandMatrix {
        assert_eq!(self.n, other.n);
        let mut out = BandMatrix::zeros(self.n, self.kl + other.kl, self.ku + other.ku);
        for i in 0..self.n {
            let (lo, hi) = self.row_span(i);
            for k in lo..hi {
                let a = self.data[self.index(i, k)];
                if a == 0.0 {
                    continue;
                }
                let (lo2, hi2) = other.row_span(k);
                for j in lo2..hi2 {
                    out.add(i, j, a * other.data[other.index(k, j)]);
                }
            }
        }
        out
    }

    /// Adds `value` to every diagonal entry.
    pub fn shift_diagonal(&mut self, value: f64) {
        for i in 0..self.n {
            self.add(i, i, value);
        }
    }

    /// LU factorization with row partial pivoting.
    pub fn factor(&self) -> Result<BandLu, SingularPivot> {
        BandLu::new(self)
    }
}

/// `PA = LU` for a band matrix; `U` has upper bandwidth `kl + ku`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    uw: usize,
    /// Row `i` of `U` holds columns `i..i + uw`.
    upper: Vec<f64>,
    /// Multipliers of step `k`, rows `k + 1..=k + kl`.
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandLu {
    fn new(a: &BandMatrix) -> Result<Self, SingularPivot> {
        let n = a.n;
        let kl = a.kl;
        let uw = a.kl + a.ku + 1;
        // Working rows cover columns [i - kl, i + kl + ku].
        let ww = 2 * kl + a.ku + 1;
        let mut work = vec![0.0; n * ww];
        let widx = |i: usize, j: usize| i * ww + (j + kl - i);
        for i in 0..n {
            let (lo, hi) = a.row_span(i);
            for j in lo..hi {
                work[widx(i, j)] = a.data[a.index(i, j)];
            }
        }
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * 1e-6;

        let mut lower = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = work[widx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = work[widx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > tiny) {
                return Err(SingularPivot { column: k });
            }
            pivots[k] = p;
            let col_end = (k + uw).min(n);
            if p != k {
                for j in k..col_end {
                    work.swap(widx(k, j), widx(p, j));
                }
            }
            let pivot = work[widx(k, k)];
            for i in k + 1..=last_row {
                let factor = work[widx(i, k)] / pivot;
                lower[k * kl.max(1) + (i - k - 1)] = factor;
                work[widx(i, k)] = 0.0;
                if factor != 0.0 {
                    for j in k + 1..col_end {
                        let ukj = work[widx(k, j)];
                        work[widx(i, j)] -= factor * ukj;
                    }
                }
            }
        }
        let mut upper = vec![0.0; n * uw];
        for i in 0..n {
            for j in i..(i + uw).min(n) {
                upper[i * uw + (j - i)] = work[widx(i, j)];
            }
        }
        Ok(Self { n, kl, uw, upper, lower, pivots })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let kl = self.kl;
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for i in k + 1..=(k + kl).min(n.saturating_sub(1)) {
                    b[i] -= self.lower[k * kl.max(1) + (i - k - 1)] * bk;
                }
            }
        }
        for i in (0..n).rev() {
            let row = &self.upper[i * self.uw..(i + 1) * self.uw];
            let mut s = b[i];
            for j in i + 1..(i + self.uw).min(n) {
                s -= row[j - i] * b[j];
            }
            b[i] = s / row[0];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
