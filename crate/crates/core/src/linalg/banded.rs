//! Banded complex matrices and an LU solver with partial pivoting.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square complex matrix with entries confined to |i - j| <= k.
///
/// Row-major diagonal storage: entry (i, j) lives at data[i*(2k+1) + (j-i+k)].
/// Slots that fall outside the matrix stay zero so row iteration never
/// branches on the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix {
    n: usize,
    k: usize,
    data: Vec<Complex64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        assert!(n > 0, "empty matrix");
        assert!(
            half_bandwidth < n,
            "half bandwidth {half_bandwidth} must be below the size {n}"
        );
        BandMatrix {
            n,
            k: half_bandwidth,
            data: vec![ZERO; n * (2 * half_bandwidth + 1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, 0);
        for v in &mut m.data {
            *v = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.k
    }

    #[inline]
    fn width(&self) -> usize {
        2 * self.k + 1
    }

    #[inline]
    pub(crate) fn row_lo(&self, i: usize) -> usize {
        i.saturating_sub(self.k)
    }

    #[inline]
    pub(crate) fn row_hi(&self, i: usize) -> usize {
        (i + self.k).min(self.n - 1)
    }

    /// Entry (i, j); zero outside the band.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.n && j < self.n);
        if j + self.k < i || j > i + self.k {
            ZERO
        } else {
            self.data[i * self.width() + (j + self.k - i)]
        }
    }

    /// Writes entry (i, j); panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        assert!(
            i < self.n && j < self.n && j + self.k >= i && j <= i + self.k,
            "entry ({i}, {j}) outside band k = {}",
            self.k
        );
        let w = self.width();
        self.data[i * w + (j + self.k - i)] = v;
    }

    pub fn add_at(&mut self, i: usize, j: usize, v: Complex64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Same matrix stored with a wider band.
    pub fn widened(&self, half_bandwidth: usize) -> Self {
        assert!(half_bandwidth >= self.k, "widened must not shrink the band");
        let mut out = Self::zeros(self.n, half_bandwidth.min(self.n - 1));
        for i in 0..self.n {
            for j in self.row_lo(i)..=self.row_hi(i) {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= c;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, Complex64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, Complex64::new(-1.0, 0.0))
    }

    fn combine(&self, other: &Self, c: Complex64) -> Self {
        assert_eq!(self.n, other.n, "size mismatch");
        let mut out = self.widened(self.k.max(other.k));
        for i in 0..self.n {
            for j in other.row_lo(i)..=other.row_hi(i) {
                out.add_at(i, j, c * other.get(i, j));
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n, self.k);
        for i in 0..self.n {
            for j in self.row_lo(i)..=self.row_hi(i) {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    /// self * other; the product band is the clamped sum of the bands.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "size mismatch");
        let n = self.n;
        let k = (self.k + other.k).min(n - 1);
        let mut out = Self::zeros(n, k);
        for i in 0..n {
            for j in i.saturating_sub(k)..=(i + k).min(n - 1) {
                let lo = self.row_lo(i).max(j.saturating_sub(other.k));
                let hi = self.row_hi(i).min((j + other.k).min(n - 1));
                let mut acc = ZERO;
                for l in lo..=hi {
                    acc += self.get(i, l) * other.get(l, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.n];
        self.matvec_into(x, &mut out);
        out
    }

    pub fn matvec_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(x.len(), self.n, "vector length mismatch");
        assert_eq!(out.len(), self.n, "output length mismatch");
        let w = self.width();
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let mut acc = ZERO;
            for j in self.row_lo(i)..=self.row_hi(i) {
                acc += row[j + self.k - i] * x[j];
            }
            out[i] = acc;
        }
    }

    /// sum_ij conj(x_i) M_ij x_j, without any quadrature weight.
    pub fn quadratic_form(&self, x: &[Complex64]) -> Complex64 {
        assert_eq!(x.len(), self.n, "vector length mismatch");
        let w = self.width();
        let mut acc = ZERO;
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let mut ri = ZERO;
            for j in self.row_lo(i)..=self.row_hi(i) {
                ri += row[j + self.k - i] * x[j];
            }
            acc += x[i].conj() * ri;
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "size mismatch");
        let mut m = 0.0f64;
        for i in 0..self.n {
            let lo = self.row_lo(i).min(other.row_lo(i));
            let hi = self.row_hi(i).max(other.row_hi(i));
            for j in lo..=hi {
                m = m.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        m
    }

    /// max_ij |M_ij - conj(M_ji)|; zero iff hermitian.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in self.row_lo(i)..=self.row_hi(i) {
                m = m.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        m
    }

    /// Largest row sum of absolute values; cheap bound on the spectral radius.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                (self.row_lo(i)..=self.row_hi(i))
                    .map(|j| self.get(i, j).norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

/// LU factorization of a band matrix with partial pivoting.
///
/// Storage follows the classic band layout: column j of the working array
/// holds rows j-ku..j+kl at slot i-j+kl+ku, with ku widened to kl+ku because
/// row swaps smear fill that far. Pivoting stays within kl rows of the
/// diagonal, so the factorization never leaves the array.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    w: Vec<Complex64>,
    perm: Vec<usize>,
}

impl BandLu {
    pub fn factor(a: &BandMatrix) -> Result<Self> {
        let n = a.n();
        let kl = a.half_bandwidth();
        let ku = a.half_bandwidth();
        let ldab = 2 * kl + ku + 1;
        let mut w = vec![ZERO; n * ldab];
        let slot = |i: usize, j: usize| j * ldab + (i + kl + ku - j);
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                w[slot(i, j)] = a.get(i, j);
            }
        }
        let mut perm = vec![0usize; n];
        for p in 0..n {
            let i_max = (p + kl).min(n - 1);
            let mut r = p;
            let mut best = w[slot(p, p)].norm();
            for i in (p + 1)..=i_max {
                let v = w[slot(i, p)].norm();
                if v > best {
                    best = v;
                    r = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularSystem { pivot: p });
            }
            perm[p] = r;
            let c_max = (p + kl + ku).min(n - 1);
            if r != p {
                for c in p..=c_max {
                    w.swap(slot(p, c), slot(r, c));
                }
            }
            let pivot = w[slot(p, p)];
            for i in (p + 1)..=i_max {
                let mult = w[slot(i, p)] / pivot;
                w[slot(i, p)] = mult;
                if mult == ZERO {
                    continue;
                }
                for c in (p + 1)..=c_max {
                    let u = w[slot(p, c)];
                    if u != ZERO {
                        let t = w[slot(i, c)] - mult * u;
                        w[slot(i, c)] = t;
                    }
                }
            }
        }
        Ok(BandLu {
            n,
            kl,
            ku,
            ldab,
            w,
            perm,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let slot = |i: usize, j: usize| j * self.ldab + (i + self.kl + self.ku - j);
        for p in 0..self.n {
            let r = self.perm[p];
            if r != p {
                b.swap(p, r);
            }
            let bp = b[p];
            if bp == ZERO {
                continue;
            }
            for i in (p + 1)..=(p + self.kl).min(self.n - 1) {
                b[i] -= self.w[slot(i, p)] * bp;
            }
        }
        for i in (0..self.n).rev() {
            let mut acc = b[i];
            for c in (i + 1)..=(i + self.kl + self.ku).min(self.n - 1) {
                acc -= self.w[slot(i, c)] * b[c];
            }
            b[i] = acc / self.w[slot(i, i)];
        }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use num_complex::Complex64;

    /// Deterministic uniform samples in [0, 1); keeps tests reproducible
    /// without an RNG dependency.
    pub fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    pub fn lcg_complex(seed: &mut u64) -> Complex64 {
        Complex64::new(2.0 * lcg(seed) - 1.0, 2.0 * lcg(seed) - 1.0)
    }

    /// Random band matrix with a dominant diagonal so LU stays benign.
    pub fn random_band(n: usize, k: usize, seed: &mut u64) -> super::BandMatrix {
        let mut a = super::BandMatrix::zeros(n, k);
        for i in 0..n {
            for j in i.saturating_sub(k)..=(i + k).min(n - 1) {
                let mut v = lcg_complex(seed);
                if i == j {
                    v += Complex64::new(4.0 + 2.0 * k as f64, 0.0);
                }
                a.set(i, j, v);
            }
        }
        a
    }
}
