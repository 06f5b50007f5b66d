//! Dense complex linear algebra helpers.
//!
//! Storage is `nalgebra::DMatrix<Complex64>`; spectral routines go through faer.

use faer::complex_native::c64;
use faer::Side;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C = Complex64;
pub type Mat = DMatrix<C>;

pub const ZERO: C = C::new(0.0, 0.0);
pub const ONE: C = C::new(1.0, 0.0);

#[inline]
pub fn cr(x: f64) -> C {
    C::new(x, 0.0)
}

pub fn zeros(r: usize, c: usize) -> Mat {
    Mat::zeros(r, c)
}

pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

fn to_faer(a: &Mat) -> faer::Mat<c64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a[(i, j)];
        c64::new(z.re, z.im)
    })
}

fn from_faer(a: faer::MatRef<'_, c64>) -> Mat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        let z = a.read(i, j);
        C::new(z.re, z.im)
    })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(a: &Mat) -> (Vec<f64>, Mat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let h = hermitian_part(a);
    let e = to_faer(&h).selfadjoint_eigendecomposition(Side::Lower);
    let s = e.s().column_vector();
    let vals = (0..n).map(|i| s.read(i).re).collect();
    (vals, from_faer(e.u()))
}

pub fn eigvalsh(a: &Mat) -> Vec<f64> {
    if a.nrows() == 0 {
        return vec![];
    }
    let h = hermitian_part(a);
    let mut v: Vec<f64> = to_faer(&h).selfadjoint_eigenvalues(Side::Lower);
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

/// General eigen-decomposition; columns of the matrix are right eigenvectors.
pub fn eig(a: &Mat) -> (Vec<C>, Mat) {
    let n = a.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let e = to_faer(a).eigendecomposition::<c64>();
    let s = e.s().column_vector();
    let vals = (0..n)
        .map(|i| {
            let z = s.read(i);
            C::new(z.re, z.im)
        })
        .collect();
    (vals, from_faer(e.u()))
}

pub fn eigvals(a: &Mat) -> Vec<C> {
    if a.nrows() == 0 {
        return vec![];
    }
    to_faer(a)
        .complex_eigenvalues()
        .into_iter()
        .map(|z| C::new(z.re, z.im))
        .collect()
}

/// Thin SVD: `a = u * diag(s) * v^†`, singular values descending.
pub fn svd(a: &Mat) -> (Mat, Vec<f64>, Mat) {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return (zeros(m, 0), vec![], zeros(n, 0));
    }
    let s = to_faer(a).thin_svd();
    let sv = s.s_diagonal();
    let vals = (0..k).map(|i| sv.read(i).re).collect();
    (from_faer(s.u()), vals, from_faer(s.v()))
}

pub fn singular_values(a: &Mat) -> Vec<f64> {
    if a.nrows().min(a.ncols()) == 0 {
        return vec![];
    }
    let mut v = to_faer(a).singular_values();
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    v
}

/// Numerical rank with a threshold relative to the largest singular value.
pub fn rank(a: &Mat, rtol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        None => 0,
        Some(&s0) if s0 <= f64::MIN_POSITIVE => 0,
        Some(&s0) => s.iter().filter(|&&x| x > rtol * s0).count(),
    }
}

/// Orthonormal basis of the column space.
pub fn orth(a: &Mat, rtol: f64) -> Mat {
    let (u, s, _) = svd(a);
    let s0 = s.first().copied().unwrap_or(0.0);
    let r = s.iter().filter(|&&x| s0 > 0.0 && x > rtol * s0).count();
    u.columns(0, r).into_owned()
}

/// Orthonormal basis of the kernel.
pub fn null_space(a: &Mat, rtol: f64) -> Mat {
    let (m, n) = a.shape();
    if m == 0 {
        return eye(n);
    }
    let padded;
    let a = if m < n {
        padded = a.clone().resize_vertically(n, ZERO);
        &padded
    } else {
        a
    };
    let (_, s, v) = svd(a);
    let s0 = s.first().copied().unwrap_or(0.0);
    let r = s.iter().filter(|&&x| s0 > f64::MIN_POSITIVE && x > rtol * s0).count();
    v.columns(r, n - r).into_owned()
}

pub fn select_cols(a: &Mat, cols: &[usize]) -> Mat {
    Mat::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])])
}

pub fn pinv(a: &Mat, rtol: f64) -> Mat {
    let (u, s, v) = svd(a);
    let s0 = s.first().copied().unwrap_or(0.0);
    let mut out = zeros(a.ncols(), a.nrows());
    for (k, &sk) in s.iter().enumerate() {
        if s0 > 0.0 && sk > rtol * s0 {
            out += v.column(k) * u.column(k).adjoint() * cr(1.0 / sk);
        }
    }
    out
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn hermitian_part(a: &Mat) -> Mat {
    (a + a.adjoint()) * cr(0.5)
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn herm_fn(a: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, u) = eigh(a);
    let mut ud = u.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for i in 0..ud.nrows() {
            ud[(i, j)] *= fv;
        }
    }
    ud * u.adjoint()
}

pub fn fro(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn spectral_radius(a: &Mat) -> f64 {
    eigvals(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(a: &Mat) -> C {
    a.trace()
}

/// Von Neumann entropy in bits of `rho / tr(rho)`.
pub fn entropy(rho: &Mat) -> f64 {
    let t = rho.trace().re;
    let vals = eigvalsh(rho);
    entropy_of_spectrum(&vals, t)
}

pub fn entropy_of_spectrum(vals: &[f64], total: f64) -> f64 {
    let mut s = 0.0;
    for &v in vals {
        let p = v / total;
        if p > 1e-14 {
            s -= p * p.log2();
        }
    }
    s
}

/// Partial trace over the sites not in `keep`; `dims` lists the local dimensions.
pub fn partial_trace(rho: &Mat, dims: &[usize], keep: &[usize]) -> Mat {
    let n = dims.len();
    let kept: Vec<usize> = (0..n).filter(|k| keep.contains(k)).collect();
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let dk: usize = kept.iter().map(|&k| dims[k]).product();
    let dt: usize = traced.iter().map(|&k| dims[k]).product();
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * dims[k + 1];
    }
    let offsets = |sites: &[usize], total: usize| -> Vec<usize> {
        (0..total)
            .map(|mut x| {
                let mut off = 0;
                for &s in sites.iter().rev() {
                    off += (x % dims[s]) * strides[s];
                    x /= dims[s];
                }
                off
            })
            .collect()
    };
    let ko = offsets(&kept, dk);
    let to = offsets(&traced, dt);
    let mut out = zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for &t in &to {
                acc += rho[(ko[a] + t, ko[b] + t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

pub fn random_complex(rng: &mut impl Rng, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn random_unitary(rng: &mut impl Rng, n: usize) -> Mat {
    let g = random_complex(rng, n, n);
    let (u, _, v) = svd(&g);
    u * v.adjoint()
}

pub fn random_psd(rng: &mut impl Rng, n: usize, rank: usize) -> Mat {
    let g = random_complex(rng, n, rank);
    &g * g.adjoint()
}

/// `mat` read as a row-major vector.
pub fn vec_rows(a: &Mat) -> Vec<C> {
    let mut v = Vec::with_capacity(a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            v.push(a[(i, j)]);
        }
    }
    v
}

pub fn unvec_rows(v: &[C], r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |i, j| v[i * c + j])
}

/// Least-squares solution of `a x = b` with the residual norm.
pub fn lstsq(a: &Mat, b: &Mat, rtol: f64) -> (Mat, f64) {
    let x = pinv(a, rtol) * b;
    let res = fro(&(a * &x - b));
    (x, res)
}

pub fn is_close(a: &Mat, b: &Mat, tol: f64) -> bool {
    a.shape() == b.shape() && fro(&(a - b)) <= tol * (1.0 + fro(a).max(fro(b)))
}

/// Identity plus the generalized Gell-Mann matrices, a Hermitian operator basis.
pub fn gell_mann(d: usize) -> Vec<Mat> {
    let mut out = vec![eye(d)];
    for a in 0..d {
        for b in a + 1..d {
            let mut s = zeros(d, d);
            s[(a, b)] = ONE;
            s[(b, a)] = ONE;
            out.push(s);
            let mut t = zeros(d, d);
            t[(a, b)] = C::new(0.0, -1.0);
            t[(b, a)] = C::new(0.0, 1.0);
            out.push(t);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = zeros(d, d);
        for k in 0..l {
            m[(k, k)] = cr(norm);
        }
        m[(l, l)] = cr(-(l as f64) * norm);
        out.push(m);
    }
    out
}

/// Apply `op` (acting on `sites`, in that order) to every column of `v`,
/// a state on `n` sites of dimension `d`.
pub fn apply_local(op: &Mat, sites: &[usize], d: usize, n: usize, v: &Mat) -> Mat {
    let l = sites.len();
    let dl = d.pow(l as u32);
    let total = d.pow(n as u32);
    let stride = |s: usize| d.pow((n - 1 - s) as u32);
    let loc: Vec<usize> = (0..dl)
        .map(|mut x| {
            let mut off = 0;
            for k in (0..l).rev() {
                off += (x % d) * stride(sites[k]);
                x /= d;
            }
            off
        })
        .collect();
    let others: Vec<usize> = (0..n).filter(|s| !sites.contains(s)).collect();
    let nr = total / dl;
    let rest: Vec<usize> = (0..nr)
        .map(|mut x| {
            let mut off = 0;
            for &s in others.iter().rev() {
                off += (x % d) * stride(s);
                x /= d;
            }
            off
        })
        .collect();
    let mut out = zeros(total, v.ncols());
    let mut buf = vec![ZERO; dl];
    for c in 0..v.ncols() {
        for &r in &rest {
            for (k, &o) in loc.iter().enumerate() {
                buf[k] = v[(r + o, c)];
            }
            if buf.iter().all(|z| *z == ZERO) {
                continue;
            }
            for a in 0..dl {
                let mut acc = ZERO;
                for b in 0..dl {
                    acc += op[(a, b)] * buf[b];
                }
                out[(r + loc[a], c)] = acc;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = random_complex(&mut rng, 5, 5);
        let h = &g + g.adjoint();
        let (vals, u) = eigh(&h);
        let d = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
            5,
            vals.iter().map(|&x| cr(x)),
        ));
        assert!(fro(&(&u * d * u.adjoint() - &h)) < 1e-10);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_complex(&mut rng, 4, 4);
        let (vals, v) = eig(&a);
        for k in 0..4 {
            let lhs = &a * v.column(k);
            let rhs = v.column(k) * vals[k];
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_psd(&mut rng, 2, 2);
        let b = random_psd(&mut rng, 3, 3);
        let c = random_psd(&mut rng, 2, 1);
        let abc = kron(&kron(&a, &b), &c);
        let ac = partial_trace(&abc, &[2, 3, 2], &[0, 2]);
        let want = kron(&a, &c) * b.trace();
        assert!(fro(&(ac - want)) < 1e-10);
    }

    #[test]
    fn gell_mann_is_orthogonal_basis() {
        let g = gell_mann(3);
        assert_eq!(g.len(), 9);
        for a in 1..9 {
            assert!((g[a].trace()).norm() < 1e-14);
            for b in 1..9 {
                let t = (&g[a] * &g[b]).trace();
                let want = if a == b { 2.0 } else { 0.0 };
                assert!((t - cr(want)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn apply_local_matches_kron() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let op = random_complex(&mut rng, 4, 4);
        let v = random_complex(&mut rng, 8, 2);
        let want = kron(&eye(2), &op) * &v;
        assert!(fro(&(apply_local(&op, &[1, 2], 2, 3, &v) - want)) < 1e-12);
        // wrap-around pair (2, 0): swap to compare against the (0, 2) ordering
        let swap = Mat::from_fn(4, 4, |a, b| if a == (b % 2) * 2 + b / 2 { ONE } else { ZERO });
        let op2 = &swap * &op * &swap;
        let x = apply_local(&op, &[2, 0], 2, 3, &v);
        let y = apply_local(&op2, &[0, 2], 2, 3, &v);
        assert!(fro(&(x - y)) < 1e-12);
    }

    #[test]
    fn entropy_of_maximally_mixed() {
        assert!((entropy(&eye(8)) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_and_rank() {
        let a = Mat::from_row_slice(2, 3, &[ONE, ONE, ZERO, ZERO, ZERO, ONE]);
        assert_eq!(rank(&a, 1e-10), 2);
        let k = null_space(&a, 1e-8);
        assert_eq!(k.ncols(), 1);
        assert!(fro(&(&a * &k)) < 1e-12);
    }
}
