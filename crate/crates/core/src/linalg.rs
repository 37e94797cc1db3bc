//! Dense complex linear algebra for the 2×2 and 4×4 operators of a two-qubit
//! system.
//!
//! Everything here is a pure function of its inputs. Matrices are stored
//! row-major as fixed-size arrays, so dimension agreement is checked by the
//! type system rather than at runtime.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error(
        "matrix is not Hermitian: entries ({row},{col}) and ({col},{row}) differ from conjugate symmetry by {violation:.3e}"
    )]
    NotHermitian {
        /// 1-based row of the worst offending pair.
        row: usize,
        /// 1-based column of the worst offending pair.
        col: usize,
        violation: f64,
    },
    #[error("negative evolution time {0} (schedules only move forward)")]
    NegativeTime(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal mass {off:.3e})"
    )]
    NotConverged { sweeps: usize, off: f64 },
}

/// Numerical thresholds. All comparisons scale with `1 + ‖·‖_F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub unitary: f64,
    pub normalized: f64,
    /// Jacobi stops once the off-diagonal Frobenius mass is below
    /// `jacobi_offdiag · ‖H‖_F`.
    pub jacobi_offdiag: f64,
    pub jacobi_max_sweeps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-12,
            unitary: 1e-10,
            normalized: 1e-9,
            jacobi_offdiag: 1e-14,
            jacobi_max_sweeps: 64,
        }
    }
}

/// A dense `N×N` complex matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct Matrix<const N: usize>(pub [[C64; N]; N]);

pub type Mat2 = Matrix<2>;
pub type Mat4 = Matrix<4>;

/// A dense complex column vector of length `N`.
#[derive(Clone, Copy, PartialEq)]
pub struct Vector<const N: usize>(pub [C64; N]);

pub type Vec4 = Vector<4>;

impl<const N: usize> Matrix<N> {
    pub const fn new(rows: [[C64; N]; N]) -> Self {
        Self(rows)
    }

    pub fn zeros() -> Self {
        Self([[ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = ONE;
        }
        m
    }

    pub fn from_real(rows: [[f64; N]; N]) -> Self {
        let mut m = Self::zeros();
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.0[i][j] = C64::new(x, 0.0);
            }
        }
        m
    }

    pub fn from_diag(diag: [C64; N]) -> Self {
        let mut m = Self::zeros();
        for (i, &d) in diag.iter().enumerate() {
            m.0[i][i] = d;
        }
        m
    }

    pub fn from_real_diag(diag: [f64; N]) -> Self {
        Self::from_diag(diag.map(|d| C64::new(d, 0.0)))
    }

    pub fn diagonal(&self) -> [C64; N] {
        std::array::from_fn(|i| self.0[i][i])
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..N).map(|i| self.0[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|row| row.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, c: C64) -> Self {
        let mut m = *self;
        for row in m.0.iter_mut() {
            for z in row.iter_mut() {
                *z *= c;
            }
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..N {
            for j in 0..N {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    /// First entry (row-major, 0-based) where the two matrices differ by more
    /// than `tol`, with the difference.
    pub fn first_mismatch(&self, other: &Self, tol: f64) -> Option<(usize, usize, f64)> {
        for i in 0..N {
            for j in 0..N {
                let d = (self.0[i][j] - other.0[i][j]).norm();
                if d > tol || d.is_nan() {
                    return Some((i, j, d));
                }
            }
        }
        None
    }

    /// Worst `|M[i][j] − conj(M[j][i])|` and where it occurs (0-based).
    pub fn hermiticity_violation(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0_f64);
        for i in 0..N {
            for j in i..N {
                let v = (self.0[i][j] - self.0[j][i].conj()).norm();
                if v > worst.2 || v.is_nan() {
                    worst = (i, j, v);
                }
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_violation().2 <= tol * (1.0 + self.frobenius_norm())
    }

    /// `‖M†M − I‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.adjoint() * *self - Self::identity()).frobenius_norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn determinant(&self) -> C64 {
        let mut a = self.0;
        let mut det = ONE;
        for col in 0..N {
            let pivot = (col..N)
                .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
                .unwrap_or(col);
            if a[pivot][col].norm() == 0.0 {
                return ZERO;
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            let p = a[col][col];
            det *= p;
            for row in col + 1..N {
                let f = a[row][col] / p;
                let pivot_row = a[col];
                for (x, &y) in a[row].iter_mut().zip(&pivot_row).skip(col) {
                    *x -= f * y;
                }
            }
        }
        det
    }

    pub fn mul_vec(&self, v: &Vector<N>) -> Vector<N> {
        let mut out = [ZERO; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..N).map(|j| self.0[i][j] * v.0[j]).sum();
        }
        Vector(out)
    }

    pub fn column(&self, j: usize) -> Vector<N> {
        Vector(std::array::from_fn(|i| self.0[i][j]))
    }
}

impl<const N: usize> Default for Matrix<N> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for k in 0..N {
                let a = self.0[i][k];
                if a == ZERO {
                    continue;
                }
                for j in 0..N {
                    m.0[i][j] += a * rhs.0[k][j];
                }
            }
        }
        m
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] += rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..N {
            for j in 0..N {
                self.0[i][j] -= rhs.0[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-ONE)
    }
}

impl<const N: usize> fmt::Debug for Matrix<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[")?;
        for row in &self.0 {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<const N: usize> Vector<N> {
    pub const fn new(v: [C64; N]) -> Self {
        Self(v)
    }

    pub fn zeros() -> Self {
        Self([ZERO; N])
    }

    pub fn basis(k: usize) -> Self {
        let mut v = Self::zeros();
        v.0[k] = ONE;
        v
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self(self.0.map(|z| z * c))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }
}

impl<const N: usize> Add for Vector<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl<const N: usize> Index<usize> for Vector<N> {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl<const N: usize> fmt::Debug for Vector<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(self.0.iter().map(|z| format!("{:+.9}{:+.9}i", z.re, z.im)))
            .finish()
    }
}

/// Kronecker product of two single-qubit operators; the first factor acts on
/// the more significant index.
pub fn kron(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut m = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                }
            }
        }
    }
    m
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::PI;
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Correctly rounded sum of a slice of doubles (Shewchuk's non-overlapping
/// partials with round-half-even on the final fold).
pub fn exact_sum(terms: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::with_capacity(terms.len());
    for &term in terms {
        let mut x = term;
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }

    let Some(&top) = partials.last() else {
        return 0.0;
    };
    let mut hi = top;
    let mut lo = 0.0;
    let mut k = partials.len() - 1;
    while k > 0 {
        k -= 1;
        let x = hi;
        let y = partials[k];
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    // half-way case: the remaining partials decide the rounding direction
    if k > 0 && ((lo < 0.0 && partials[k - 1] < 0.0) || (lo > 0.0 && partials[k - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Collects the atomic real/imaginary contributions to each entry and rounds
/// every entry once, so different algebraic assemblies of the same matrix
/// agree bit for bit.
#[derive(Debug, Clone)]
pub struct TermAccumulator<const N: usize> {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl<const N: usize> Default for TermAccumulator<N> {
    fn default() -> Self {
        Self::new()
    }
}

impl<const N: usize> TermAccumulator<N> {
    pub fn new() -> Self {
        Self {
            re: vec![Vec::new(); N * N],
            im: vec![Vec::new(); N * N],
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        if value.re != 0.0 {
            self.re[row * N + col].push(value.re);
        }
        if value.im != 0.0 {
            self.im[row * N + col].push(value.im);
        }
    }

    /// Adds `coeff · op` entry by entry, where `coeff` is an unevaluated sum of
    /// real terms. `op` entries are expected to be exact (0, ±1, ±i).
    pub fn push_scaled(&mut self, coeff_terms: &[f64], op: &Matrix<N>) {
        for i in 0..N {
            for j in 0..N {
                let z = op.0[i][j];
                if z == ZERO {
                    continue;
                }
                for &c in coeff_terms {
                    self.push(i, j, z * c);
                }
            }
        }
    }

    pub fn finish(&self) -> Matrix<N> {
        let mut m = Matrix::<N>::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = C64::new(
                    exact_sum(&self.re[i * N + j]),
                    exact_sum(&self.im[i * N + j]),
                );
            }
        }
        m
    }
}

/// Eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone, Copy)]
pub struct Eigh<const N: usize> {
    /// Ascending.
    pub values: [f64; N],
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: Matrix<N>,
}

impl<const N: usize> Eigh<N> {
    pub fn reconstruct(&self) -> Matrix<N> {
        self.vectors * Matrix::from_real_diag(self.values) * self.vectors.adjoint()
    }
}

pub fn check_hermitian<const N: usize>(h: &Matrix<N>, tol: f64) -> Result<(), LinalgError> {
    if !h.is_finite() {
        return Err(LinalgError::NonFinite("matrix"));
    }
    let (row, col, violation) = h.hermiticity_violation();
    if violation > tol * (1.0 + h.frobenius_norm()) {
        return Err(LinalgError::NotHermitian {
            row: row + 1,
            col: col + 1,
            violation,
        });
    }
    Ok(())
}

pub fn eigh<const N: usize>(h: &Matrix<N>) -> Result<Eigh<N>, LinalgError> {
    eigh_with(h, &Tolerances::default())
}

/// Cyclic Jacobi eigendecomposition for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `h[p][q]` and then
/// applies the real symmetric Jacobi rotation, so the iterate stays exactly
/// Hermitian with a real diagonal.
pub fn eigh_with<const N: usize>(h: &Matrix<N>, tol: &Tolerances) -> Result<Eigh<N>, LinalgError> {
    check_hermitian(h, tol.hermitian)?;

    // symmetrize so that roundoff-level asymmetry does not leak into the result
    let mut a = Matrix::<N>::zeros();
    for i in 0..N {
        a.0[i][i] = C64::new(h.0[i][i].re, 0.0);
        for j in i + 1..N {
            let z = (h.0[i][j] + h.0[j][i].conj()) * 0.5;
            a.0[i][j] = z;
            a.0[j][i] = z.conj();
        }
    }
    let mut v = Matrix::<N>::identity();
    let scale = a.frobenius_norm();
    let threshold = tol.jacobi_offdiag * scale;

    let off = |m: &Matrix<N>| -> f64 {
        let mut s = 0.0;
        for i in 0..N {
            for j in 0..N {
                if i != j {
                    s += m.0[i][j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > threshold {
        if sweeps == tol.jacobi_max_sweeps {
            return Err(LinalgError::NotConverged {
                sweeps,
                off: off(&a),
            });
        }
        sweeps += 1;
        for p in 0..N {
            for q in p + 1..N {
                let b = a.0[p][q];
                let mag = b.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = b / mag;
                let theta = (a.0[q][q].re - a.0[p][p].re) / (2.0 * mag);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                let mut g = Matrix::<N>::identity();
                g.0[p][p] = C64::new(c, 0.0);
                g.0[p][q] = C64::new(s, 0.0);
                g.0[q][p] = -phase.conj() * s;
                g.0[q][q] = phase.conj() * c;

                a = g.adjoint() * a * g;
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
                for i in 0..N {
                    a.0[i][i].im = 0.0;
                }
                v = v * g;
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&x, &y| a.0[x][x].re.total_cmp(&a.0[y][y].re));
    let values = order.map(|k| a.0[k][k].re);
    let mut vectors = Matrix::<N>::zeros();
    for (col, &k) in order.iter().enumerate() {
        for row in 0..N {
            vectors.0[row][col] = v.0[row][k];
        }
    }
    Ok(Eigh { values, vectors })
}

/// `exp(−i·H·t)` via the spectral decomposition of `H`.
pub fn expm_unitary<const N: usize>(h: &Matrix<N>, t: f64) -> Result<Matrix<N>, LinalgError> {
    if !t.is_finite() {
        return Err(LinalgError::NonFinite("evolution time"));
    }
    if t < 0.0 {
        return Err(LinalgError::NegativeTime(t));
    }
    let e = eigh(h)?;
    let phases = e.values.map(|l| C64::from_polar(1.0, -l * t));
    Ok(e.vectors * Matrix::from_diag(phases) * e.vectors.adjoint())
}

/// `min_φ ‖A − e^{iφ}B‖_F`.
///
/// The minimum equals `sqrt(‖A‖² + ‖B‖² − 2|tr(A†B)|)`, but that form loses
/// about half the digits near zero, so the residual is evaluated directly at
/// the optimal phase `φ = arg tr(B†A)`.
pub fn distance_up_to_global_phase<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> f64 {
    let overlap = (b.adjoint() * *a).trace();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        ONE
    };
    (*a - b.scale(phase)).frobenius_norm()
}

/// The phase `φ = arg tr(A†B)` that best aligns `B` onto `A` as `e^{−iφ}B`.
pub fn relative_phase<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> f64 {
    (a.adjoint() * *b).trace().arg()
}
