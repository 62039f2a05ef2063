//! Smallest singular values of matrix-free and dense operators.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::evolution::random_complex;
use crate::scalar::{czero, norm_sq, Complex, Real};

/// A linear map `ℂ^ncols → ℂ^nrows` with its adjoint.
pub trait LinearOperator<T: Real>: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[Complex<T>]) -> Vec<Complex<T>>;
    fn apply_adjoint(&self, y: &[Complex<T>]) -> Vec<Complex<T>>;
}

/// Column-by-column dense realization.
pub fn assemble<T: Real, L: LinearOperator<T> + ?Sized>(op: &L) -> DMatrix<Complex<T>> {
    let (r, c) = (op.nrows(), op.ncols());
    let mut m = DMatrix::zeros(r, c);
    let mut e = vec![czero(); c];
    for j in 0..c {
        e[j] = Complex::new(T::one(), T::zero());
        let col = op.apply(&e);
        for i in 0..r {
            m[(i, j)] = col[i];
        }
        e[j] = czero();
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    DenseSvd,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveStatus {
    pub converged: bool,
    /// `‖L*L x − σ² x‖ / ‖L*L‖` at the returned vector; zero on the dense path.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverOptions {
    pub dense_cap: usize,
    pub tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub force: Option<SolveMethod>,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_cap: crate::evolution::DEFAULT_DENSE_CAP,
            tol: 1e-10,
            max_outer: 300,
            max_inner: 4000,
            force: None,
            seed: 7,
        }
    }
}

impl SolverOptions {
    pub fn choose<T: Real, L: LinearOperator<T> + ?Sized>(&self, op: &L) -> SolveMethod {
        self.force.unwrap_or(if op.ncols() <= self.dense_cap { SolveMethod::DenseSvd } else { SolveMethod::Iterative })
    }
}

/// Smallest singular value of a dense matrix; zero for wide matrices.
pub fn sigma_min_dense<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    if m.ncols() == 0 {
        return T::zero();
    }
    if m.nrows() < m.ncols() {
        return T::zero();
    }
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().copied().fold(sv[0], |a, b| if b < a { b } else { a })
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(czero(), |acc, (x, y)| acc + x.conj() * *y)
}

fn normal<T: Real, L: LinearOperator<T> + ?Sized>(op: &L, x: &[Complex<T>]) -> Vec<Complex<T>> {
    op.apply_adjoint(&op.apply(x))
}

/// Conjugate gradients for `L*L y = b`; returns the iterate after reaching
/// relative residual `tol` or exhausting `max_iter`.
fn cg<T: Real, L: LinearOperator<T> + ?Sized>(op: &L, b: &[Complex<T>], tol: T, max_iter: usize) -> Vec<Complex<T>> {
    let n = b.len();
    let mut x = vec![czero(); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = norm_sq(&r);
    let stop = tol * tol * norm_sq(b);
    for _ in 0..max_iter {
        if rr <= stop {
            break;
        }
        let ap = normal(op, &p);
        let pap = dot(&p, &ap).re;
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += p[i].scale(alpha);
            r[i] -= ap[i].scale(alpha);
        }
        let rr_new = norm_sq(&r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i].scale(beta);
        }
    }
    x
}

fn normalize<T: Real>(x: &mut [Complex<T>]) -> T {
    let n = norm_sq(x).sqrt();
    if n > T::zero() {
        for v in x.iter_mut() {
            *v = v.unscale(n);
        }
    }
    n
}

/// Inverse iteration on `L*L` with inner conjugate gradients.
pub fn sigma_min_iterative<T: Real, L: LinearOperator<T> + ?Sized>(op: &L, opts: &SolverOptions) -> (T, SolveStatus) {
    let n = op.ncols();
    if op.nrows() < n {
        return (T::zero(), SolveStatus { converged: true, residual: 0.0, iterations: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    // Norm of L*L by a short power iteration, as the residual scale.
    let mut y = random_complex::<T>(n, &mut rng);
    normalize(&mut y);
    let mut scale = T::zero();
    for _ in 0..30 {
        let mut ny = normal(op, &y);
        scale = normalize(&mut ny);
        y = ny;
    }
    if !(scale > T::zero()) {
        return (T::zero(), SolveStatus { converged: true, residual: 0.0, iterations: 0 });
    }
    let tol = T::lit(opts.tol);
    let mut x = random_complex::<T>(n, &mut rng);
    normalize(&mut x);
    let mut theta = norm_sq(&op.apply(&x));
    let mut residual = T::one();
    for it in 1..=opts.max_outer {
        let mut next = cg(op, &x, T::lit(1e-13), opts.max_inner);
        if normalize(&mut next) == T::zero() {
            break;
        }
        x = next;
        let nx = normal(op, &x);
        theta = dot(&x, &nx).re;
        residual = nx
            .iter()
            .zip(&x)
            .fold(T::zero(), |acc, (a, b)| acc + (*a - b.scale(theta)).norm_sqr())
            .sqrt()
            / scale;
        if residual <= tol {
            return (
                theta.max(T::zero()).sqrt(),
                SolveStatus { converged: true, residual: residual.to_f64_lossy(), iterations: it },
            );
        }
    }
    (
        theta.max(T::zero()).sqrt(),
        SolveStatus { converged: false, residual: residual.to_f64_lossy(), iterations: opts.max_outer },
    )
}

/// Smallest singular value by the method `opts` selects for this operator.
pub fn sigma_min<T: Real, L: LinearOperator<T> + ?Sized>(op: &L, opts: &SolverOptions) -> (T, SolveMethod, SolveStatus) {
    match opts.choose(op) {
        SolveMethod::DenseSvd => (
            sigma_min_dense(&assemble(op)),
            SolveMethod::DenseSvd,
            SolveStatus { converged: true, residual: 0.0, iterations: 0 },
        ),
        SolveMethod::Iterative => {
            let (s, st) = sigma_min_iterative(op, opts);
            (s, SolveMethod::Iterative, st)
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue<T: Real>(m: DMatrix<Complex<T>>) -> T {
    let ev = SymmetricEigen::new(m).eigenvalues;
    ev.iter().copied().fold(ev[0], |a, b| if b < a { b } else { a })
}

/// `min_{‖f‖=1, f ∈ ker M} f* N f` for Hermitian `M, N`; `None` when the kernel is trivial.
fn kernel_restricted_min<T: Real>(m: &DMatrix<Complex<T>>, n: &DMatrix<Complex<T>>) -> Option<T> {
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.iter().copied().fold(T::zero(), |a, b| a.max(b.abs()));
    let cut = T::lit(1e-12) * top.max(T::lit(f64::MIN_POSITIVE));
    let cols: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] <= cut).collect();
    if cols.is_empty() {
        return None;
    }
    let z = eig.eigenvectors.select_columns(&cols);
    Some(hermitian_min_eigenvalue(z.adjoint() * n * &z))
}

/// `min_{‖f‖=1} (c₁‖Xf‖ + c₂‖Yf‖)`, using
/// `(c₁x + c₂y)² = min_{t∈(0,1)} (c₁²x²/t + c₂²y²/(1−t))`.
///
/// The limits `t → 0` and `t → 1` are evaluated on `ker X` and `ker Y`;
/// near the ends the `1/t` scaling would swamp the eigenvalue in rounding.
pub fn sum_form_minimum<T: Real>(x: &DMatrix<Complex<T>>, y: &DMatrix<Complex<T>>, c1: T, c2: T) -> T {
    let gx = x.adjoint() * x * Complex::new(c1 * c1, T::zero());
    let gy = y.adjoint() * y * Complex::new(c2 * c2, T::zero());
    let g = |t: T| {
        let m = &gx * Complex::new(T::one() / t, T::zero()) + &gy * Complex::new(T::one() / (T::one() - t), T::zero());
        hermitian_min_eigenvalue(m)
    };
    let n = 256usize;
    let grid: Vec<T> = (0..=n)
        .map(|i| {
            // Logistic spacing crowds samples near both ends.
            let u = T::lit(-14.0) + T::lit(28.0) * T::count(i) / T::count(n);
            T::one() / (T::one() + (-u).exp())
        })
        .collect();
    let values: Vec<T> = grid.iter().map(|t| g(*t)).collect();
    let mut order: Vec<usize> = (0..=n).collect();
    order.sort_by(|a, b| values[*a].partial_cmp(&values[*b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut best = values[order[0]];
    for limit in [kernel_restricted_min(&gx, &gy), kernel_restricted_min(&gy, &gx)].into_iter().flatten() {
        best = best.min(limit);
    }
    for &i in order.iter().take(4) {
        let mut a = grid[i.saturating_sub(1)];
        let mut b = grid[(i + 1).min(n)];
        let phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
        let mut c = b - (b - a) * phi;
        let mut d = a + (b - a) * phi;
        let mut gc = g(c);
        let mut gd = g(d);
        for _ in 0..80 {
            if gc < gd {
                b = d;
                d = c;
                gd = gc;
                c = b - (b - a) * phi;
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + (b - a) * phi;
                gd = g(d);
            }
        }
        best = best.min(gc).min(gd);
    }
    best.max(T::zero()).sqrt()
}
