//! Complex banded matrices with in-place LU factorization.
//!
//! LAPACK-style band storage: entry (i, j) of an n×n matrix with kl
//! subdiagonals and ku superdiagonals lives at row `kl + ku + i - j` of
//! column j. The extra kl leading rows hold the fill-in produced by partial
//! pivoting (the upper bandwidth grows to kl + ku during elimination).

use num_complex::Complex64;

pub struct BandMatrix {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    ldab: usize,
    /// column-major, ldab = 2*kl + ku + 1 rows per column
    ab: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![Complex64::new(0.0, 0.0); ldab * n] }
    }

    #[inline]
    fn row_index(&self, i: usize, j: usize) -> usize {
        // valid for j.saturating_sub(ku) <= i <= j + kl
        self.kl + self.ku + i - j
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku >= j && i <= j + self.kl, "({i},{j}) outside band");
        let r = self.row_index(i, j);
        self.ab[j * self.ldab + r] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i + self.ku < j || i > j + self.kl {
            return Complex64::new(0.0, 0.0);
        }
        self.ab[j * self.ldab + self.row_index(i, j)]
    }

    /// In-place LU with partial pivoting (unblocked gbtrf). The effective
    /// upper bandwidth after factorization is kl + ku.
    pub fn factor(mut self) -> Result<BandLu, SingularError> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ldab = self.ldab;
        let mut ipiv = vec![0usize; n];
        let ab = &mut self.ab;

        for j in 0..n {
            let km = kl.min(n - 1 - j); // active subdiagonal rows
            // pivot search in column j among rows j..=j+km
            let base = j * ldab + kv;
            let mut p = 0usize;
            let mut pmax = ab[base].norm_sqr();
            for i in 1..=km {
                let m = ab[base + i].norm_sqr();
                if m > pmax {
                    pmax = m;
                    p = i;
                }
            }
            ipiv[j] = j + p;
            if pmax == 0.0 {
                return Err(SingularError { column: j });
            }
            // swap rows j and j+p across columns j..=min(n-1, j+kv)
            if p != 0 {
                for col in j..=(j + kv).min(n - 1) {
                    let r1 = col * ldab + (kv + j - col);
                    let r2 = r1 + p;
                    ab.swap(r1, r2);
                }
            }
            // multipliers
            let piv = ab[base];
            for i in 1..=km {
                ab[base + i] /= piv;
            }
            // trailing update
            for col in (j + 1)..=(j + kv).min(n - 1) {
                let urow = col * ldab + (kv + j - col);
                let f = ab[urow];
                if f.re != 0.0 || f.im != 0.0 {
                    for i in 1..=km {
                        let l = ab[base + i];
                        ab[urow + i] -= f * l;
                    }
                }
            }
        }
        Ok(BandLu { n, kl, kv, ldab, ab: self.ab, ipiv })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("banded matrix is numerically singular at column {column}")]
pub struct SingularError {
    pub column: usize,
}

pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ldab: usize,
    ab: Vec<Complex64>,
    ipiv: Vec<usize>,
}

impl BandLu {
    /// Solves A x = b in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, kv, ldab) = (self.n, self.kl, self.kv, self.ldab);
        // forward: apply pivots and L
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj.re != 0.0 || bj.im != 0.0 {
                let base = j * ldab + kv;
                for i in 1..=km {
                    b[j + i] -= self.ab[base + i] * bj;
                }
            }
        }
        // back substitution with U (bandwidth kv above the diagonal)
        for j in (0..n).rev() {
            let diag = self.ab[j * ldab + kv];
            b[j] /= diag;
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            let col = j * ldab + kv;
            for i in lo..j {
                b[i] -= self.ab[col + i - j] * bj;
            }
        }
    }
}
