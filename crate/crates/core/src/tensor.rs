//! MPV / MPDO tensors, blocking, transfer maps and dense expansion.
//!
//! Index order is `[physical..., left virtual, right virtual]`. For an MPDO the
//! physical pair is `(ket, bra)` and the MPV view uses the index `ket * d + bra`.

use crate::error::{Error, Result};
use crate::linalg::{cr, eye, fro, kron, zeros, Mat, C, ZERO};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Dense-oracle size limits, as log2 of the number of amplitudes.
#[derive(Clone, Copy, Debug)]
pub struct Caps {
    pub pure_log2: f64,
    pub mixed_log2: f64,
    /// Cap for reduced density matrices `d^{2m}` of `m` contiguous sites.
    pub reduced_log2: f64,
    pub max_phys_dim: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { pure_log2: 20.0, mixed_log2: 16.0, reduced_log2: 20.0, max_phys_dim: 4096 }
    }
}

impl Caps {
    pub fn check_pure(&self, d: usize, n: usize) -> Result<()> {
        let need = n as f64 * (d as f64).log2();
        if need > self.pure_log2 + 1e-9 {
            return Err(Error::CapExceeded { what: "pure dense state", needed_log2: need, cap_log2: self.pure_log2 });
        }
        Ok(())
    }

    pub fn check_mixed(&self, d: usize, n: usize) -> Result<()> {
        let need = 2.0 * n as f64 * (d as f64).log2();
        if need > self.mixed_log2 + 1e-9 {
            return Err(Error::CapExceeded { what: "dense density operator", needed_log2: need, cap_log2: self.mixed_log2 });
        }
        Ok(())
    }

    pub fn check_reduced(&self, d: usize, m: usize) -> Result<()> {
        let need = 2.0 * m as f64 * (d as f64).log2();
        if need > self.reduced_log2 + 1e-9 {
            return Err(Error::CapExceeded { what: "reduced density operator", needed_log2: need, cap_log2: self.reduced_log2 });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpvTensor {
    pub d: usize,
    pub bond: usize,
    pub mats: Vec<Mat>,
}

impl MpvTensor {
    pub fn new(mats: Vec<Mat>) -> Result<Self> {
        let d = mats.len();
        if d == 0 {
            return Err(Error::Dimension("empty tensor".into()));
        }
        let bond = mats[0].nrows();
        if bond == 0 {
            return Err(Error::Dimension("bond dimension must be at least 1".into()));
        }
        for m in &mats {
            if m.nrows() != bond || m.ncols() != bond {
                return Err(Error::Dimension(format!("matrix of shape {:?} in a D={bond} tensor", m.shape())));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::Dimension("non-finite entry".into()));
            }
        }
        Ok(MpvTensor { d, bond, mats })
    }

    pub fn from_fn(d: usize, bond: usize, f: impl Fn(usize, usize, usize) -> C) -> Self {
        let mats = (0..d).map(|i| Mat::from_fn(bond, bond, |a, b| f(i, a, b))).collect();
        MpvTensor { d, bond, mats }
    }

    pub fn scaled(&self, s: C) -> Self {
        MpvTensor { d: self.d, bond: self.bond, mats: self.mats.iter().map(|m| m * s).collect() }
    }

    pub fn conjugated(&self, x: &Mat, xinv: &Mat) -> Self {
        MpvTensor { d: self.d, bond: self.bond, mats: self.mats.iter().map(|m| x * m * xinv).collect() }
    }

    /// Entries as the `d x D^2` coefficient matrix (row `i`, column `a*D+b`).
    pub fn coefficient_matrix(&self) -> Mat {
        let dd = self.bond * self.bond;
        Mat::from_fn(self.d, dd, |i, k| self.mats[i][(k / self.bond, k % self.bond)])
    }

    pub fn norm(&self) -> f64 {
        self.mats.iter().map(|m| fro(m).powi(2)).sum::<f64>().sqrt()
    }

    /// Restriction to the virtual subspace spanned by the orthonormal columns of `p`.
    pub fn compress(&self, p: &Mat) -> Self {
        let pa = p.adjoint();
        MpvTensor { d: self.d, bond: p.ncols(), mats: self.mats.iter().map(|m| &pa * m * p).collect() }
    }
}

/// Direct sum of tensors sharing the physical dimension.
pub fn direct_sum(parts: &[MpvTensor]) -> Result<MpvTensor> {
    let d = parts[0].d;
    if parts.iter().any(|p| p.d != d) {
        return Err(Error::Dimension("direct sum of tensors with different d".into()));
    }
    let bond: usize = parts.iter().map(|p| p.bond).sum();
    let mut mats = vec![zeros(bond, bond); d];
    let mut off = 0;
    for p in parts {
        for i in 0..d {
            mats[i].view_mut((off, off), (p.bond, p.bond)).copy_from(&p.mats[i]);
        }
        off += p.bond;
    }
    Ok(MpvTensor { d, bond, mats })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpdoTensor {
    pub d: usize,
    pub bond: usize,
    /// Virtual matrices indexed by `ket * d + bra`.
    pub mats: Vec<Mat>,
}

impl MpdoTensor {
    pub fn new(d: usize, mats: Vec<Mat>) -> Result<Self> {
        if mats.len() != d * d {
            return Err(Error::Dimension(format!("expected {} matrices, got {}", d * d, mats.len())));
        }
        let v = MpvTensor::new(mats)?;
        Ok(MpdoTensor { d, bond: v.bond, mats: v.mats })
    }

    pub fn from_fn(d: usize, bond: usize, f: impl Fn(usize, usize, usize, usize) -> C) -> Self {
        let mats = (0..d * d)
            .map(|p| Mat::from_fn(bond, bond, |a, b| f(p / d, p % d, a, b)))
            .collect();
        MpdoTensor { d, bond, mats }
    }

    pub fn get(&self, i: usize, j: usize, a: usize, b: usize) -> C {
        self.mats[i * self.d + j][(a, b)]
    }

    pub fn mpv_view(&self) -> MpvTensor {
        MpvTensor { d: self.d * self.d, bond: self.bond, mats: self.mats.clone() }
    }

    pub fn from_mpv_view(d: usize, a: &MpvTensor) -> Result<Self> {
        if a.d != d * d {
            return Err(Error::Dimension(format!("MPV view has d={} but d^2={}", a.d, d * d)));
        }
        Ok(MpdoTensor { d, bond: a.bond, mats: a.mats.clone() })
    }

    /// Physical operator attached to the virtual pair `(a, b)`.
    pub fn op(&self, a: usize, b: usize) -> Mat {
        Mat::from_fn(self.d, self.d, |i, j| self.mats[i * self.d + j][(a, b)])
    }

    /// All physical operators, indexed `a * D + b`.
    pub fn ops(&self) -> Vec<Mat> {
        let dd = self.bond;
        (0..dd * dd).map(|k| self.op(k / dd, k % dd)).collect()
    }

    pub fn from_ops(d: usize, bond: usize, ops: &[Mat]) -> Self {
        MpdoTensor::from_fn(d, bond, |i, j, a, b| ops[a * bond + b][(i, j)])
    }

    /// Physically traced transfer matrix `E[a,b] = sum_i M[i,i,a,b]`.
    pub fn traced(&self) -> Mat {
        let mut e = zeros(self.bond, self.bond);
        for i in 0..self.d {
            e += &self.mats[i * self.d + i];
        }
        e
    }

    /// Pure-state embedding `A ⊗ conj(A)` with bond `D^2`.
    pub fn from_pure(a: &MpvTensor) -> Self {
        let d = a.d;
        let mats = (0..d * d).map(|p| kron(&a.mats[p / d], &a.mats[p % d].map(|z| z.conj()))).collect();
        MpdoTensor { d, bond: a.bond * a.bond, mats }
    }

    pub fn scaled(&self, s: C) -> Self {
        MpdoTensor { d: self.d, bond: self.bond, mats: self.mats.iter().map(|m| m * s).collect() }
    }
}

#[derive(Clone, Debug)]
pub struct TransferMap {
    pub matrix: Mat,
    pub left_dim: usize,
    pub right_dim: usize,
}

impl TransferMap {
    pub fn spectral_radius(&self) -> f64 {
        crate::linalg::spectral_radius(&self.matrix)
    }

    /// Action on a `D_a x D_b` matrix `X`: `sum_i A^i X B^{i†}`.
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn block(a: &MpvTensor, p: usize) -> Result<MpvTensor> {
    block_with(a, p, &Caps::default())
}

pub fn block_with(a: &MpvTensor, p: usize, caps: &Caps) -> Result<MpvTensor> {
    if p == 0 {
        return Err(Error::Precondition("blocking factor must be at least 1".into()));
    }
    let big = (a.d as f64).powi(p as i32);
    if big > caps.max_phys_dim as f64 {
        return Err(Error::BlockingTooLarge { d: a.d, p, cap: caps.max_phys_dim });
    }
    Ok(MpvTensor { d: a.d.pow(p as u32), bond: a.bond, mats: open_products(a, p) })
}

/// Products `A^{i_1}...A^{i_n}` for all strings, `i_1` most significant.
pub fn open_products(a: &MpvTensor, n: usize) -> Vec<Mat> {
    let mut cur = vec![eye(a.bond)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(cur.len() * a.d);
        for m in &cur {
            for ai in &a.mats {
                next.push(m * ai);
            }
        }
        cur = next;
    }
    cur
}

/// Blocking of an MPDO tensor: `p` sites become one with physical dimension `d^p`.
pub fn block_mpdo(m: &MpdoTensor, p: usize) -> Result<MpdoTensor> {
    if p == 0 {
        return Err(Error::Precondition("blocking factor must be at least 1".into()));
    }
    let ops = open_operators(m, p);
    Ok(MpdoTensor::from_ops(m.d.pow(p as u32), m.bond, &ops))
}

/// `O_{ab}` on `n` sites: the open-boundary operator with virtual ends `a`, `b`.
pub fn open_operators(m: &MpdoTensor, n: usize) -> Vec<Mat> {
    let dd = m.bond;
    let site = m.ops();
    let mut cur: Vec<Mat> = (0..dd * dd)
        .map(|k| if k / dd == k % dd { eye(1) } else { zeros(1, 1) })
        .collect();
    for _ in 0..n {
        let dim = cur[0].nrows() * m.d;
        let mut next = vec![zeros(dim, dim); dd * dd];
        for a in 0..dd {
            for g in 0..dd {
                let left = &cur[a * dd + g];
                if left.iter().all(|z| *z == ZERO) {
                    continue;
                }
                for b in 0..dd {
                    let s = &site[g * dd + b];
                    if s.iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    next[a * dd + b] += kron(left, s);
                }
            }
        }
        cur = next;
    }
    cur
}

pub fn transfer_map(a: &MpvTensor, b: &MpvTensor) -> Result<TransferMap> {
    if a.d != b.d {
        return Err(Error::Dimension(format!("transfer map of tensors with d={} and d={}", a.d, b.d)));
    }
    let mut e = zeros(a.bond * b.bond, a.bond * b.bond);
    for i in 0..a.d {
        e += kron(&a.mats[i], &b.mats[i].map(|z| z.conj()));
    }
    Ok(TransferMap { matrix: e, left_dim: a.bond, right_dim: b.bond })
}

pub fn self_transfer(a: &MpvTensor) -> Mat {
    transfer_map(a, a).expect("same tensor").matrix
}

pub fn mpv_dense(a: &MpvTensor, n: usize) -> Result<Vec<C>> {
    mpv_dense_with(a, n, &Caps::default())
}

pub fn mpv_dense_with(a: &MpvTensor, n: usize, caps: &Caps) -> Result<Vec<C>> {
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    caps.check_pure(a.d, n)?;
    let n1 = n / 2;
    let n2 = n - n1;
    let left = open_products(a, n1);
    let right = open_products(a, n2);
    let mut out = Vec::with_capacity(left.len() * right.len());
    for l in &left {
        let lt = l.transpose();
        for r in &right {
            out.push(lt.dot(r));
        }
    }
    Ok(out)
}

pub fn mpdo_dense(m: &MpdoTensor, n: usize) -> Result<Mat> {
    mpdo_dense_with(m, n, &Caps::default())
}

pub fn mpdo_dense_with(m: &MpdoTensor, n: usize, caps: &Caps) -> Result<Mat> {
    if n == 0 {
        return Err(Error::Precondition("N must be at least 1".into()));
    }
    caps.check_mixed(m.d, n)?;
    let n1 = n / 2;
    let n2 = n - n1;
    let dd = m.bond;
    let left = open_operators(m, n1);
    let right = open_operators(m, n2);
    let dim = m.d.pow(n as u32);
    let mut rho = zeros(dim, dim);
    for a in 0..dd {
        for g in 0..dd {
            let l = &left[a * dd + g];
            let r = &right[g * dd + a];
            if fro(l) == 0.0 || fro(r) == 0.0 {
                continue;
            }
            rho += kron(l, r);
        }
    }
    Ok(rho)
}

/// Reduced state of `m` contiguous sites of the ring `rho^{(N)}`, unnormalized.
pub fn mpdo_reduced(mt: &MpdoTensor, n: usize, m: usize, caps: &Caps) -> Result<Mat> {
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("cannot keep {m} of {n} sites")));
    }
    caps.check_reduced(mt.d, m)?;
    let dd = mt.bond;
    let ops = open_operators(mt, m);
    let rest = mat_pow(&mt.traced(), n - m);
    let dim = mt.d.pow(m as u32);
    let mut rho = zeros(dim, dim);
    for a in 0..dd {
        for g in 0..dd {
            let w = rest[(g, a)];
            if w != ZERO {
                rho += &ops[a * dd + g] * w;
            }
        }
    }
    Ok(rho)
}

/// Reduced state of `m` contiguous sites of the pure ring state generated by `a`.
pub fn mpv_reduced(a: &MpvTensor, n: usize, m: usize, caps: &Caps) -> Result<Mat> {
    mpdo_reduced(&MpdoTensor::from_pure(a), n, m, caps)
}

pub fn mat_pow(a: &Mat, k: usize) -> Mat {
    let mut result = eye(a.nrows());
    let mut base = a.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

pub fn inner(x: &[C], y: &[C]) -> C {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn hermiticity_residual(rho: &Mat) -> f64 {
    fro(&(rho - rho.adjoint())) / fro(rho).max(f64::MIN_POSITIVE)
}

pub fn normalized(rho: &Mat) -> Mat {
    let t = rho.trace();
    rho * cr(1.0) / t
}
