//! Dense complex matrices: the oracle side of the crate. LU solves with
//! partial pivoting and a matrix exponential via degree-13 Pade
//! approximation with scaling and squaring.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::banded::BandMatrix;
use crate::par;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "empty matrix");
        DenseMatrix {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_band(b: &BandMatrix) -> Self {
        let n = b.n();
        let k = b.half_bandwidth();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i.saturating_sub(k)..=(i + k).min(n - 1) {
                m.data[i * n + j] = b.get(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "size mismatch");
        let n = self.n;
        let mut out = vec![ZERO; n * n];
        let a = &self.data;
        let b = &other.data;
        par::for_each_chunk(&mut out, n, |i, row| {
            for l in 0..n {
                let av = a[i * n + l];
                if av == ZERO {
                    continue;
                }
                let brow = &b[l * n..(l + 1) * n];
                for (o, &bv) in row.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        });
        DenseMatrix { n, data: out }
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "vector length mismatch");
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.data[i * n..(i + 1) * n];
                row.iter().zip(x).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "size mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        DenseMatrix { n: self.n, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "size mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        DenseMatrix { n: self.n, data }
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let data = self.data.iter().map(|v| v * c).collect();
        DenseMatrix { n: self.n, data }
    }

    pub fn add_identity_scaled(&mut self, c: Complex64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += c;
        }
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "size mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Solves self * X = rhs by LU with partial pivoting.
    pub fn solve_matrix(&self, rhs: &Self) -> Result<Self> {
        assert_eq!(self.n, rhs.n, "size mismatch");
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = rhs.data.clone();
        for p in 0..n {
            let mut r = p;
            let mut best = a[p * n + p].norm();
            for i in (p + 1)..n {
                let v = a[i * n + p].norm();
                if v > best {
                    best = v;
                    r = i;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularSystem { pivot: p });
            }
            if r != p {
                for c in 0..n {
                    a.swap(p * n + c, r * n + c);
                    x.swap(p * n + c, r * n + c);
                }
            }
            let piv = a[p * n + p];
            for i in (p + 1)..n {
                let mult = a[i * n + p] / piv;
                if mult == ZERO {
                    continue;
                }
                a[i * n + p] = mult;
                for c in (p + 1)..n {
                    let u = a[p * n + c];
                    a[i * n + c] -= mult * u;
                }
                for c in 0..n {
                    let u = x[p * n + c];
                    x[i * n + c] -= mult * u;
                }
            }
        }
        for i in (0..n).rev() {
            for c in 0..n {
                let mut acc = x[i * n + c];
                for l in (i + 1)..n {
                    acc -= a[i * n + l] * x[l * n + c];
                }
                x[i * n + c] = acc / a[i * n + i];
            }
        }
        Ok(DenseMatrix { n, data: x })
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        assert_eq!(b.len(), self.n, "rhs length mismatch");
        let mut rhs = Self::zeros(self.n);
        for i in 0..self.n {
            rhs.data[i * self.n] = b[i];
        }
        let x = self.solve_matrix(&rhs)?;
        Ok((0..self.n).map(|i| x.data[i * self.n]).collect())
    }

    /// e^{self} by the degree-13 Pade approximant with scaling and squaring.
    /// Backward stable for one-norms up to the squaring budget; the standard
    /// theta threshold keeps the approximant in its accuracy region.
    pub fn expm(&self) -> Result<Self> {
        const THETA13: f64 = 5.371920351148152;
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        let re = |v: f64| Complex64::new(v, 0.0);
        let norm = self.one_norm();
        let s = if norm > THETA13 {
            (norm / THETA13).log2().ceil() as i32
        } else {
            0
        };
        let a = self.scaled(re(0.5f64.powi(s)));
        let a2 = a.matmul(&a);
        let a4 = a2.matmul(&a2);
        let a6 = a2.matmul(&a4);

        let mut u_inner = a6
            .scaled(re(B[13]))
            .add(&a4.scaled(re(B[11])))
            .add(&a2.scaled(re(B[9])));
        u_inner = a6.matmul(&u_inner);
        let mut u_poly = u_inner
            .add(&a6.scaled(re(B[7])))
            .add(&a4.scaled(re(B[5])))
            .add(&a2.scaled(re(B[3])));
        u_poly.add_identity_scaled(re(B[1]));
        let u = a.matmul(&u_poly);

        let mut v_inner = a6
            .scaled(re(B[12]))
            .add(&a4.scaled(re(B[10])))
            .add(&a2.scaled(re(B[8])));
        v_inner = a6.matmul(&v_inner);
        let mut v = v_inner
            .add(&a6.scaled(re(B[6])))
            .add(&a4.scaled(re(B[4])))
            .add(&a2.scaled(re(B[2])));
        v.add_identity_scaled(re(B[0]));

        let mut r = v.sub(&u).solve_matrix(&v.add(&u))?;
        for _ in 0..s {
            r = r.matmul(&r);
        }
        Ok(r)
    }
}
