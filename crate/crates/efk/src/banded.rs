//! Banded matrices with LAPACK-style band storage and an in-place LU
//! factorization with partial pivoting (the unblocked gbtrf algorithm).
//!
//! Everything downstream — the front Newton, the Evans bordered solves and
//! the IMEX time stepper — funnels into these ~150 lines, so they are
//! property-tested against dense solves.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Band matrix: entry (i,j) stored iff -kl <= j - i <= ku.
#[derive(Clone, Debug)]
pub struct Banded<T> {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    /// row-band storage: data[d][j] = A[j + ku - d, j] for d in 0..kl+ku+1
    /// (d = 0 is the highest superdiagonal, d = ku the main diagonal)
    data: Vec<Vec<T>>,
}

impl<T: Scalar> Banded<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Banded { n, kl, ku, data: vec![vec![T::zero(); n]; kl + ku + 1] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = (i as isize, j as isize);
        let d = self.ku as isize + i - j;
        if d < 0 || d > (self.kl + self.ku) as isize {
            T::zero()
        } else {
            self.data[d as usize][j as usize]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let d = self.ku as isize + i as isize - j as isize;
        assert!(
            (0..=(self.kl + self.ku) as isize).contains(&d),
            "({i},{j}) outside band"
        );
        self.data[d as usize][j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        let d = (self.ku as isize + i as isize - j as isize) as usize;
        self.data[d][j] += v;
    }

    /// zero an entire row (used when imposing boundary/pin rows)
    pub fn clear_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, T::zero());
        }
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = T::zero();
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// row of the matrix as (col, value) pairs, band-clipped
    pub fn row(&self, i: usize) -> Vec<(usize, T)> {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        (lo..=hi).map(|j| (j, self.get(i, j))).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut a = vec![vec![T::zero(); self.n]; self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[i][j] = v;
            }
        }
        a
    }

    pub fn factor(&self) -> Result<BandedLu<T>> {
        BandedLu::new(self)
    }
}

/// LU factors of a banded matrix.  Fill-in from row pivoting widens the
/// upper band to ku + kl, hence the extended storage.
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    kw: usize, // ku + kl: upper bandwidth after fill-in
    /// ab[d][j] = factored entry (j + kw - d, j), d in 0..kw+kl+1
    ab: Vec<Vec<T>>,
    piv: Vec<usize>,
}

impl<T: Scalar> BandedLu<T> {
    pub fn new(a: &Banded<T>) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let kw = ku + kl;
        let mut ab = vec![vec![T::zero(); n]; kw + kl + 1];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                ab[(kw as isize + i as isize - j as isize) as usize][j] = a.get(i, j);
            }
        }
        let mut piv = vec![0usize; n];

        // entry (i,j) lives at ab[kw + i - j][j]
        let at = |i: usize, j: usize| (kw as isize + i as isize - j as isize) as usize;

        for k in 0..n {
            let pmax = kl.min(n - 1 - k);
            let mut p = 0usize;
            let mut best = ab[at(k, k)][k].abs();
            for r in 1..=pmax {
                let v = ab[at(k + r, k)][k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(Error::LSFailure(format!("zero pivot at column {k}")));
            }
            piv[k] = k + p;
            let jhi = (k + kw).min(n - 1);
            if p != 0 {
                for j in k..=jhi {
                    let (d1, d2) = (at(k, j), at(k + p, j));
                    let tmp = ab[d1][j];
                    ab[d1][j] = ab[d2][j];
                    ab[d2][j] = tmp;
                }
            }
            let pivval = ab[at(k, k)][k];
            for r in 1..=pmax {
                let m = ab[at(k + r, k)][k] / pivval;
                ab[at(k + r, k)][k] = m;
                for j in (k + 1)..=jhi {
                    let u = ab[at(k, j)][j];
                    let d = at(k + r, j);
                    ab[d][j] = ab[d][j] - m * u;
                }
            }
        }
        Ok(BandedLu { n, kl, kw, ab, piv })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_mut(&mut x);
        x
    }

    pub fn solve_mut(&self, x: &mut [T]) {
        assert_eq!(x.len(), self.n);
        let at = |i: usize, j: usize| (self.kw as isize + i as isize - j as isize) as usize;
        // forward: apply P and L^{-1}
        for k in 0..self.n {
            if self.piv[k] != k {
                x.swap(k, self.piv[k]);
            }
            let rmax = self.kl.min(self.n - 1 - k);
            let xk = x[k];
            for r in 1..=rmax {
                let m = self.ab[at(k + r, k)][k];
                x[k + r] -= m * xk;
            }
        }
        // back substitution on U (bandwidth kw)
        for k in (0..self.n).rev() {
            let jhi = (k + self.kw).min(self.n - 1);
            let mut acc = x[k];
            for j in (k + 1)..=jhi {
                acc -= self.ab[at(k, j)][j] * x[j];
            }
            x[k] = acc / self.ab[at(k, k)][k];
        }
    }
}

/// Cyclic tridiagonal solve via Sherman-Morrison (used only by the
/// periodic-closure preconditioner path; `sub`/`dia`/`sup` are the three
/// diagonals, `corner_lo` = A[0, n-1], `corner_hi` = A[n-1, 0]).
pub fn solve_cyclic_tridiag<T: Scalar>(
    sub: &[T],
    dia: &[T],
    sup: &[T],
    corner_lo: T,
    corner_hi: T,
    b: &[T],
) -> Result<Vec<T>> {
    let n = dia.len();
    assert!(n >= 3);
    // A = B + u v^T with u = (g, 0, .., 0, corner_hi)^T, v = (1, 0, .., 0, corner_lo/g)^T
    let g = dia[0]; // any nonzero gauge works; dia[0] is safe for our operators
    let mut bb = Banded::zeros(n, 1, 1);
    bb.set(0, 0, dia[0] - g);
    for i in 1..n {
        bb.set(i, i, dia[i]);
        bb.set(i, i - 1, sub[i]);
        bb.set(i - 1, i, sup[i - 1]);
    }
    let nn = bb.get(n - 1, n - 1) - corner_hi * corner_lo / g;
    bb.set(n - 1, n - 1, nn);
    let lu = bb.factor()?;
    let y = lu.solve(b);
    let mut u = vec![T::zero(); n];
    u[0] = g;
    u[n - 1] = corner_hi;
    let z = lu.solve(&u);
    // x = y - z * (v.y)/(1 + v.z)
    let vy = y[0] + corner_lo / g * y[n - 1];
    let vz = z[0] + corner_lo / g * z[n - 1];
    let denom = T::one() + vz;
    if denom.abs() == 0.0 {
        return Err(Error::LSFailure("cyclic correction singular".into()));
    }
    let s = vy / denom;
    Ok((0..n).map(|i| y[i] - z[i] * s).collect())
}
