//! Renormalization fixed points of matrix-product vectors.

use crate::canonical::{
    canonical_form, cfii_of, find_gauge_normal, spectral_radius_of, to_block_injective, CanonicalDecomposition,
    GaugeResult,
};
use crate::error::{Error, Result};
use crate::linalg::{
    apply_local, cr, eigh, eigvalsh, entropy, eye, fro, gell_mann, kron, orth, partial_trace, rank, zeros, Mat, C,
    ZERO,
};
use crate::tensor::{
    block, direct_sum, mpv_dense, mpv_dense_with, mpv_reduced, open_products, self_transfer, transfer_map, Caps,
    MpvTensor, TransferMap,
};

pub const RFP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Flow {
    /// Transfer matrices `E, E², E⁴, ...` up to the converged step.
    pub steps: Vec<Mat>,
    pub residuals: Vec<f64>,
    pub converged: bool,
    pub limit: TransferMap,
}

fn idempotency_residual(e: &Mat) -> f64 {
    fro(&(e * e - e)) / fro(e).max(1.0)
}

/// Transfer matrix of the CFII representative.
fn cfii_transfer(a: &MpvTensor) -> Result<(Mat, usize)> {
    let dec = canonical_form(a)?;
    if dec.bnt.is_empty() {
        return Err(Error::Precondition("zero tensor".into()));
    }
    let cf = cfii_of(&dec)?;
    Ok((self_transfer(&cf.tensor), cf.tensor.bond))
}

pub fn renormalization_flow(a: &MpvTensor, max_steps: usize) -> Result<Flow> {
    let (mut e, bond) = cfii_transfer(a)?;
    let r = crate::linalg::spectral_radius(&e);
    if (r - 1.0).abs() > 1e-6 {
        return Err(Error::Numerical { what: "unnormalized input".into(), residual: (r - 1.0).abs() });
    }
    let mut steps = Vec::new();
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..=max_steps {
        let res = idempotency_residual(&e);
        steps.push(e.clone());
        residuals.push(res);
        if res < RFP_TOL {
            converged = true;
            break;
        }
        if !e.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || fro(&e) > 1e12 {
            return Err(Error::Numerical { what: "unnormalized input".into(), residual: fro(&e) });
        }
        e = &e * &e;
    }
    let matrix = steps.last().cloned().unwrap();
    Ok(Flow { steps, residuals, converged, limit: TransferMap { matrix, left_dim: bond, right_dim: bond } })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RfpVerdict {
    pub rfp: bool,
    /// `‖E² − E‖` on the CFII representative.
    pub residual: f64,
}

pub fn is_rfp_pure(a: &MpvTensor) -> Result<RfpVerdict> {
    let (e, _) = cfii_transfer(a)?;
    let residual = fro(&(&e * &e - &e));
    Ok(RfpVerdict { rfp: residual < RFP_TOL * fro(&e).max(1.0), residual })
}

#[derive(Clone, Debug)]
pub struct RfpBlock {
    pub bnt_index: usize,
    pub weight: C,
    pub gauge: Mat,
    pub gauge_inv: Mat,
}

#[derive(Clone, Debug)]
pub struct RfpDecomposition {
    pub d: usize,
    /// Diagonal of `Λ_j`, descending, trace one.
    pub lambdas: Vec<Vec<f64>>,
    /// `U^i_j` for each BNT element `j` and physical index `i`.
    pub u: Vec<Vec<Mat>>,
    pub blocks: Vec<RfpBlock>,
    pub blocking: usize,
    pub scale: f64,
    pub isometry_residual: f64,
}

impl RfpDecomposition {
    /// `Λ_j^{1/2} U^i_j`.
    pub fn element(&self, j: usize) -> MpvTensor {
        let s: Vec<C> = self.lambdas[j].iter().map(|&x| cr(x.sqrt())).collect();
        let mats = self.u[j]
            .iter()
            .map(|m| Mat::from_fn(m.nrows(), m.ncols(), |a, b| s[a] * m[(a, b)]))
            .collect();
        MpvTensor::new(mats).unwrap()
    }

    /// `scale · ⊕ μ X Λ^{1/2} U X^{-1}`, a tensor on `blocking` sites.
    pub fn reassemble(&self) -> MpvTensor {
        let parts: Vec<MpvTensor> = self
            .blocks
            .iter()
            .map(|b| self.element(b.bnt_index).conjugated(&b.gauge, &b.gauge_inv).scaled(b.weight))
            .collect();
        direct_sum(&parts).unwrap().scaled(cr(self.scale))
    }

    /// Coefficient matrix with rows `i` and columns `(j, α, β)`.
    pub fn isometry_matrix(&self) -> Mat {
        let cols: usize = self.u.iter().map(|u| u[0].len()).sum();
        let mut m = zeros(self.u[0].len(), cols);
        let mut off = 0;
        for u in &self.u {
            let k = u[0].nrows();
            for (i, ui) in u.iter().enumerate() {
                for a in 0..k {
                    for b in 0..k {
                        m[(i, off + a * k + b)] = ui[(a, b)];
                    }
                }
            }
            off += k * k;
        }
        m
    }

    /// `U^{⊗N} |φ_j⟩^{⊗N}` with `|φ_j⟩ = Σ_m λ_m |m m⟩` linking neighbouring sites.
    pub fn entangled_pair_state(&self, j: usize, n: usize) -> Result<Vec<C>> {
        let u = &self.u[j];
        let d = u.len();
        let k = u[0].nrows();
        Caps::default().check_pure(d, n)?;
        let lam: Vec<f64> = self.lambdas[j].iter().map(|x| x.sqrt()).collect();
        let mut out = vec![ZERO; d.pow(n as u32)];
        // sum over the virtual configuration (α_1 .. α_N); β_n = α_{n+1}
        let configs = k.pow(n as u32);
        for cfg in 0..configs {
            let alpha: Vec<usize> = (0..n).map(|s| (cfg / k.pow((n - 1 - s) as u32)) % k).collect();
            let w: f64 = alpha.iter().map(|&a| lam[a]).product();
            let mut amp = vec![cr(w)];
            for s in 0..n {
                let (a, b) = (alpha[s], alpha[(s + 1) % n]);
                let mut next = Vec::with_capacity(amp.len() * d);
                for x in &amp {
                    for ui in u {
                        next.push(x * ui[(a, b)]);
                    }
                }
                amp = next;
            }
            for (o, x) in out.iter_mut().zip(amp) {
                *o += x;
            }
        }
        Ok(out)
    }
}

pub fn rfp_decompose(a: &MpvTensor) -> Result<RfpDecomposition> {
    let dec = canonical_form(a)?;
    let cf = cfii_of(&dec)?;
    let mut lambdas = Vec::new();
    let mut u = Vec::new();
    let mut align = Vec::new();
    for (j, t) in cf.bnt.iter().enumerate() {
        let lam: Vec<f64> = cf.lambdas[j].diagonal().iter().map(|z| z.re).collect();
        let inv: Vec<C> = lam.iter().map(|&x| cr(1.0 / x.sqrt())).collect();
        u.push(t.mats.iter().map(|m| Mat::from_fn(m.nrows(), m.ncols(), |p, q| inv[p] * m[(p, q)])).collect());
        lambdas.push(lam);
        match find_gauge_normal(t, &dec.bnt[j]) {
            GaugeResult::Gauge(w) => align.push(w),
            GaugeResult::Distinct { .. } => {
                return Err(Error::Numerical { what: format!("decomposition failed: block {j} lost its gauge"), residual: 1.0 })
            }
        }
    }
    let blocks = dec
        .blocks
        .iter()
        .map(|b| {
            let w = &align[b.bnt_index];
            let ph = C::from_polar(w.scale, w.phase);
            RfpBlock {
                bnt_index: b.bnt_index,
                weight: b.weight * ph,
                gauge: &b.gauge * &w.x,
                gauge_inv: &w.x_inv * &b.gauge_inv,
            }
        })
        .collect();
    let mut out = RfpDecomposition {
        d: dec.d,
        lambdas,
        u,
        blocks,
        blocking: dec.blocking,
        scale: dec.scale,
        isometry_residual: 0.0,
    };
    let m = out.isometry_matrix();
    out.isometry_residual = fro(&(m.adjoint() * &m - eye(m.ncols())));
    let unimodular = out.blocks.iter().map(|b| (b.weight.norm() - 1.0).abs()).fold(0.0, f64::max);
    let residual = out.isometry_residual.max(unimodular);
    if residual > 1e-7 {
        return Err(Error::Numerical { what: "decomposition failed".into(), residual });
    }
    Ok(out)
}

fn site_offsets(d: usize, n: usize, sites: &[usize]) -> Vec<usize> {
    let l = sites.len();
    (0..d.pow(l as u32))
        .map(|mut x| {
            let mut off = 0;
            for k in (0..l).rev() {
                off += (x % d) * d.pow((n - 1 - sites[k]) as u32);
                x /= d;
            }
            off
        })
        .collect()
}

/// Reduced density matrix of `sites` (in that order) of a pure state vector.
pub fn reduced_of_vector(psi: &[C], d: usize, n: usize, sites: &[usize]) -> Mat {
    let loc = site_offsets(d, n, sites);
    let others: Vec<usize> = (0..n).filter(|s| !sites.contains(s)).collect();
    let rest = site_offsets(d, n, &others);
    let psi_s = Mat::from_fn(loc.len(), rest.len(), |a, r| psi[loc[a] + rest[r]]);
    &psi_s * psi_s.adjoint()
}

/// `tr(ρ (X ⊗ Y))` for all basis pairs, contracting one factor at a time.
fn region_correlations(rho: &Mat, basis_a: &[Mat], basis_b: &[Mat]) -> Vec<C> {
    let da = basis_a[0].nrows();
    let db = basis_b[0].nrows();
    let mut out = Vec::with_capacity(basis_a.len() * basis_b.len());
    for x in basis_a {
        // t[b, b'] = Σ_{a,a'} ρ[(a,b),(a',b')] X[a',a]
        let mut t = zeros(db, db);
        for a in 0..da {
            for ap in 0..da {
                let w = x[(ap, a)];
                if w == ZERO {
                    continue;
                }
                for b in 0..db {
                    for bp in 0..db {
                        t[(b, bp)] += rho[(a * db + b, ap * db + bp)] * w;
                    }
                }
            }
        }
        for y in basis_b {
            out.push((&t * y).trace());
        }
    }
    out
}

fn max_spread(rows: &[Vec<C>]) -> f64 {
    let mut worst: f64 = 0.0;
    for r in rows.iter().skip(1) {
        for (x, y) in r.iter().zip(&rows[0]) {
            worst = worst.max((x - y).norm());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq)]
pub struct CidReport {
    pub cid: bool,
    pub max_deviation: f64,
}

pub fn is_cid(a: &MpvTensor, n: usize) -> Result<CidReport> {
    is_cid_with(a, n, &Caps::default())
}

pub fn is_cid_with(a: &MpvTensor, n: usize, caps: &Caps) -> Result<CidReport> {
    if n < 4 {
        return Err(Error::Precondition("CID needs N >= 4".into()));
    }
    let d = a.d;
    let mut psi = mpv_dense_with(a, n, caps)?;
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return Err(Error::Precondition(format!("state vanishes at N = {n}")));
    }
    psi.iter_mut().for_each(|z| *z /= norm);
    let g = gell_mann(d);
    let mut rows = Vec::new();
    for r in 2..=n - 2 {
        rows.push(region_correlations(&reduced_of_vector(&psi, d, n, &[0, r]), &g, &g));
    }
    let mut worst = max_spread(&rows);
    if d <= 3 && n >= 6 {
        let g2: Vec<Mat> = g.iter().flat_map(|x| g.iter().map(move |y| kron(x, y))).collect();
        let mut rows = Vec::new();
        for r in 3..=n - 3 {
            rows.push(region_correlations(&reduced_of_vector(&psi, d, n, &[0, 1, r, r + 1]), &g2, &g2));
        }
        worst = worst.max(max_spread(&rows));
    }
    Ok(CidReport { cid: worst < RFP_TOL, max_deviation: worst })
}

/// Largest relative mixed transfer map between distinct BNT elements.
pub fn local_orthogonality_residual(dec: &CanonicalDecomposition) -> f64 {
    let normed: Vec<MpvTensor> =
        dec.bnt.iter().map(|b| b.scaled(cr(1.0 / spectral_radius_of(b).sqrt()))).collect();
    let mut worst: f64 = 0.0;
    for j in 0..normed.len() {
        for k in j + 1..normed.len() {
            let e = transfer_map(&normed[j], &normed[k]).unwrap().matrix;
            let ej = fro(&self_transfer(&normed[j]));
            let ek = fro(&self_transfer(&normed[k]));
            worst = worst.max(fro(&e) / (ej * ek).sqrt());
        }
    }
    worst
}

pub fn is_locally_orthogonal(dec: &CanonicalDecomposition) -> bool {
    local_orthogonality_residual(dec) < RFP_TOL
}

#[derive(Clone, Debug)]
pub struct GroundCheck {
    pub n: usize,
    pub kernel_dim: usize,
    pub span_dim: usize,
}

#[derive(Clone, Debug)]
pub struct ParentHamiltonian {
    pub l: usize,
    pub d: usize,
    pub p_perp: Mat,
    /// Orthonormal basis of `S_L`.
    pub support: Mat,
    pub commuting: bool,
    pub commutator_norm: f64,
    pub ground: Vec<GroundCheck>,
    /// Kernel dimension equals the span of the generated states at every tested `N`.
    pub parent: bool,
}

pub const N_CHECK: usize = 8;
const KERNEL_BUDGET: usize = 1 << 22;
const KERNEL_MAX_COLS: usize = 1024;

/// `‖[P ⊗ 1, 1 ⊗ P]‖_F` for overlap shift `j`, using `G = (Q†⊗1)(1⊗Q)`.
fn shifted_commutator(q: &Mat, d: usize, l: usize, j: usize) -> f64 {
    let r = q.ncols();
    let dj = d.pow(j as u32);
    let dm = d.pow((l - j) as u32);
    let mut g = zeros(r * dj, dj * r);
    for a in 0..r {
        for t in 0..dj {
            for u in 0..dj {
                for b in 0..r {
                    let mut acc = ZERO;
                    for m in 0..dm {
                        acc += q[(u * dm + m, a)].conj() * q[(m * dj + t, b)];
                    }
                    g[(a * dj + t, u * r + b)] = acc;
                }
            }
        }
    }
    let n1 = fro(&g).powi(2);
    let n2 = fro(&(&g * g.adjoint())).powi(2);
    (2.0 * (n1 - n2)).max(0.0).sqrt()
}

/// Kernel dimension of `Σ_j τ_j(P⊥)` on a ring of `n` sites, or `None` when over budget.
fn parent_kernel_dim(q: &Mat, d: usize, l: usize, n: usize) -> Option<usize> {
    let r = q.ncols();
    let dn = d.checked_pow(n as u32)?;
    let drest = d.pow((n - l) as u32);
    let cols = r * drest;
    if cols > KERNEL_MAX_COLS || dn.saturating_mul(cols) > KERNEL_BUDGET {
        return None;
    }
    let mut w = zeros(dn, cols);
    for a in 0..r {
        for x in 0..d.pow(l as u32) {
            let v = q[(x, a)];
            if v == ZERO {
                continue;
            }
            for s in 0..drest {
                w[(x * drest + s, a * drest + s)] = v;
            }
        }
    }
    let p = q * q.adjoint();
    let dl = d.pow(l as u32);
    let mut g = zeros(cols, cols);
    for j in 1..n {
        let sites: Vec<usize> = (0..l).map(|k| (j + k) % n).collect();
        let y = apply_local(&p, &sites, d, n, &w);
        // (Q† ⊗ 1) y
        for a in 0..r {
            for s in 0..drest {
                for c in 0..cols {
                    let mut acc = ZERO;
                    for x in 0..dl {
                        acc += q[(x, a)].conj() * y[(x * drest + s, c)];
                    }
                    g[(a * drest + s, c)] -= acc;
                }
            }
        }
        g += eye(cols);
    }
    let vals = eigvalsh(&g);
    Some(vals.iter().filter(|&&v| v < 1e-8).count())
}

fn ground_span_dim(dec: &CanonicalDecomposition, n: usize) -> Option<usize> {
    if n % dec.blocking != 0 {
        return None;
    }
    let m = n / dec.blocking;
    let vecs: Vec<Vec<C>> = dec.bnt.iter().filter_map(|b| mpv_dense(b, m).ok()).collect();
    if vecs.len() != dec.bnt.len() {
        return None;
    }
    let mat = Mat::from_fn(vecs[0].len(), vecs.len(), |i, j| vecs[j][i]);
    Some(rank(&mat, 1e-8))
}

pub fn parent_hamiltonian(a: &MpvTensor, l: usize) -> Result<ParentHamiltonian> {
    if l == 0 {
        return Err(Error::Precondition("L must be at least 1".into()));
    }
    let d = a.d;
    let dl = d
        .checked_pow(l as u32)
        .filter(|&x| x <= Caps::default().max_phys_dim)
        .ok_or(Error::CapExceeded { what: "local dimension", needed_log2: (l as f64) * (d as f64).log2(), cap_log2: 12.0 })?;
    let prods = open_products(a, l);
    let dd = a.bond * a.bond;
    let v = Mat::from_fn(dl, dd, |x, c| prods[x][(c / a.bond, c % a.bond)]);
    let q = orth(&v, 1e-10);
    let r = q.ncols();
    if r >= dl {
        return Err(Error::Precondition(format!("no complement: dim S_L = {r} = d^L")));
    }
    let p_perp = eye(dl) - &q * q.adjoint();
    let commutator_norm = (1..l).map(|j| shifted_commutator(&q, d, l, j)).fold(0.0, f64::max);
    let commuting = commutator_norm < 1e-7 * (r as f64).sqrt().max(1.0);
    let dec = canonical_form(a)?;
    let mut ground = Vec::new();
    for n in l + 1..=N_CHECK {
        let span = match ground_span_dim(&dec, n) {
            Some(s) => s,
            None => continue,
        };
        match parent_kernel_dim(&q, d, l, n) {
            Some(k) => ground.push(GroundCheck { n, kernel_dim: k, span_dim: span }),
            None => break,
        }
    }
    let parent = !ground.is_empty() && ground.iter().all(|g| g.kernel_dim == g.span_dim);
    Ok(ParentHamiltonian { l, d, p_perp, support: q, commuting, commutator_norm, ground, parent })
}

#[derive(Clone, Debug)]
pub struct EntropyProfile {
    /// `S_L` for `L = 1..N-1`, in bits.
    pub entropies: Vec<f64>,
    pub sal: bool,
}

pub const SAL_TOL: f64 = 1e-8;

pub fn entropy_profile_pure(a: &MpvTensor, n: usize) -> Result<EntropyProfile> {
    entropy_profile_pure_with(a, n, &Caps::default())
}

pub fn entropy_profile_pure_with(a: &MpvTensor, n: usize, caps: &Caps) -> Result<EntropyProfile> {
    if n < 2 {
        return Err(Error::Precondition("entropy profile needs N >= 2".into()));
    }
    caps.check_pure(a.d, n)?;
    let half = n / 2;
    let mut head = Vec::with_capacity(half);
    for m in 1..=half {
        let rho = mpv_reduced(a, n, m, caps)?;
        if rho.trace().re.abs() < 1e-300 {
            return Err(Error::Precondition(format!("state vanishes at N = {n}")));
        }
        head.push(entropy(&rho));
    }
    let entropies: Vec<f64> = (1..n).map(|m| head[m.min(n - m) - 1]).collect();
    let sal = head.iter().all(|s| (s - head[0]).abs() < SAL_TOL);
    Ok(EntropyProfile { entropies, sal })
}

#[derive(Clone, Debug)]
pub struct Decorrelation {
    pub decorrelated: bool,
    /// Largest `‖P O_A P⊥ O_B P‖` over matrix units.
    pub witness: f64,
    pub commuting_witness: Option<(Mat, Mat)>,
    pub commutator: f64,
    pub product_residual: f64,
    pub agree: bool,
}

fn support_projector(rho: &Mat) -> Mat {
    let (vals, vecs) = eigh(rho);
    let top = vals.last().copied().unwrap_or(0.0);
    let mut p = zeros(rho.nrows(), rho.nrows());
    for (k, &v) in vals.iter().enumerate() {
        if v > 1e-10 * top.max(1e-300) {
            let c = vecs.column(k);
            p += &c * c.adjoint();
        }
    }
    p
}

pub fn decorrelation_check(k: &Mat, dims: (usize, usize, usize)) -> Result<Decorrelation> {
    let (da, dx, db) = dims;
    let total = da * dx * db;
    if k.nrows() != total {
        return Err(Error::Dimension(format!("basis has {} rows, partition gives {total}", k.nrows())));
    }
    if total > 4096 {
        return Err(Error::CapExceeded { what: "decorrelation dimension", needed_log2: (total as f64).log2(), cap_log2: 12.0 });
    }
    let gram = k.adjoint() * k;
    if fro(&(gram - eye(k.ncols()))) > 1e-8 {
        return Err(Error::Precondition("non-orthonormal basis".into()));
    }
    let p = k * k.adjoint();
    let pp = eye(total) - &p;
    let mut witness: f64 = 0.0;
    // (E_ab ⊗ 1) K and (1 ⊗ E_ab) K by row selection
    let first = |a: usize, b: usize| {
        let rest = dx * db;
        Mat::from_fn(total, k.ncols(), |r, c| if r / rest == a { k[(b * rest + r % rest, c)] } else { ZERO })
    };
    let last = |a: usize, b: usize| {
        Mat::from_fn(total, k.ncols(), |r, c| if r % db == a { k[(r - a + b, c)] } else { ZERO })
    };
    let left: Vec<Mat> = (0..da * da).map(|x| first(x % da, x / da).adjoint()).collect();
    let right: Vec<Mat> = (0..db * db).map(|y| &pp * last(y / db, y % db)).collect();
    for l in &left {
        for r in &right {
            witness = witness.max(fro(&(l * r)));
        }
    }
    let decorrelated = witness < RFP_TOL;
    let p_ax = support_projector(&partial_trace(&p, &[da, dx, db], &[0, 1]));
    let p_xb = support_projector(&partial_trace(&p, &[da, dx, db], &[1, 2]));
    let pa = kron(&p_ax, &eye(db));
    let pb = kron(&eye(da), &p_xb);
    let commutator = fro(&(&pa * &pb - &pb * &pa));
    let product_residual = fro(&(&pa * &pb - &p));
    let commuting_ok = commutator < 1e-8 && product_residual < 1e-8;
    Ok(Decorrelation {
        decorrelated,
        witness,
        commuting_witness: if commuting_ok { Some((p_ax, p_xb)) } else { None },
        commutator,
        product_residual,
        agree: decorrelated == commuting_ok,
    })
}

/// The three equivalent characterizations of a pure fixed point.
#[derive(Clone, Debug)]
pub struct TriangleReport {
    pub rfp: bool,
    pub cid: bool,
    pub locally_orthogonal: bool,
    pub commuting: bool,
    pub parent: bool,
}

impl TriangleReport {
    pub fn consistent(&self) -> bool {
        let b = self.cid && self.locally_orthogonal;
        let c = self.commuting && self.parent;
        self.rfp == b && b == c
    }
}

pub fn triangle(a: &MpvTensor) -> Result<TriangleReport> {
    let rfp = is_rfp_pure(a)?.rfp;
    let dec = canonical_form(a)?;
    let cf = block(&dec.reassemble(), 1)?;
    let cid = is_cid(&cf, N_CHECK)?.cid;
    let locally_orthogonal = is_locally_orthogonal(&dec);
    let (bi, _) = to_block_injective(a)?;
    let ph = parent_hamiltonian(&bi, 2)?;
    Ok(TriangleReport { rfp, cid, locally_orthogonal, commuting: ph.commuting, parent: ph.parent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library;
    use crate::linalg::ONE;

    fn diag_residual(e: &Mat, want: &[f64]) -> f64 {
        let w = Mat::from_diagonal(&nalgebra::DVector::from_iterator(want.len(), want.iter().map(|&x| cr(x))));
        fro(&(e - w))
    }

    #[test]
    fn ghz_flow_is_immediate() {
        let f = renormalization_flow(&library::ghz(), 10).unwrap();
        assert!(f.converged);
        assert_eq!(f.steps.len(), 1);
        assert!(diag_residual(&f.limit.matrix, &[1.0, 0.0, 0.0, 1.0]) < 1e-12);
    }

    #[test]
    fn zcl_example_flows_away() {
        let f = renormalization_flow(&library::zcl_example(), 64).unwrap();
        assert!(f.converged);
        assert!(f.steps.len() > 1);
        assert!(diag_residual(&f.limit.matrix, &[1.0, 0.0, 0.0, 1.0]) < 1e-8);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(diag_residual(&f.steps[0], &[1.0, s, s, 1.0]) < 1e-10);
    }

    #[test]
    fn aklt_flow_converges() {
        let f = renormalization_flow(&library::aklt(), 64).unwrap();
        assert!(f.converged);
        // subleading eigenvalue after k squarings is (1/3)^(2^k)
        let k = f.steps.len() - 1;
        assert!((1.0f64 / 3.0).powi(1 << k) < 1e-8);
        assert!(idempotency_residual(&f.limit.matrix) < 1e-9);
        assert!((f.limit.matrix.trace().re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rfp_verdicts() {
        assert!(is_rfp_pure(&library::ghz()).unwrap().rfp);
        assert!(is_rfp_pure(&library::bell_chain()).unwrap().rfp);
        assert!(is_rfp_pure(&library::product()).unwrap().rfp);
        assert!(is_rfp_pure(&library::xx_periodic()).unwrap().rfp);
        let aklt = is_rfp_pure(&library::aklt()).unwrap();
        assert!(!aklt.rfp);
        // CFII transfer has eigenvalues 1, -1/3 (x3): ‖E²-E‖ = 3 * (1/9 + 1/3) over a unitary basis change
        assert!((aklt.residual - (3.0f64).sqrt() * (1.0 / 9.0 + 1.0 / 3.0)).abs() < 1e-8, "{}", aklt.residual);
        assert!(!is_rfp_pure(&library::zcl_example()).unwrap().rfp);
    }

    #[test]
    fn bell_chain_decomposition() {
        let dec = rfp_decompose(&library::bell_chain()).unwrap();
        assert_eq!(dec.lambdas.len(), 1);
        assert!(dec.lambdas[0].iter().all(|x| (x - 0.5).abs() < 1e-10));
        assert!(dec.isometry_residual < 1e-10);
        let m = dec.isometry_matrix();
        // identity up to a unitary acting on the virtual pair
        assert!(fro(&(m.adjoint() * &m - eye(4))) < 1e-10);
        for n in 2..=5 {
            let x = mpv_dense(&dec.reassemble(), n).unwrap();
            let y = mpv_dense(&library::bell_chain(), n).unwrap();
            let err: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(err < 1e-10);
        }
    }

    #[test]
    fn ghz_decomposition() {
        let dec = rfp_decompose(&library::ghz()).unwrap();
        assert_eq!(dec.lambdas.len(), 2);
        for (j, u) in dec.u.iter().enumerate() {
            assert_eq!(dec.lambdas[j], vec![1.0]);
            let nz: Vec<usize> = (0..2).filter(|&i| u[i][(0, 0)].norm() > 0.5).collect();
            assert_eq!(nz.len(), 1);
            assert!((u[nz[0]][(0, 0)].norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn entangled_pair_picture() {
        let dec = rfp_decompose(&library::bell_chain()).unwrap();
        let e = dec.element(0);
        for n in 2..=4 {
            let x = dec.entangled_pair_state(0, n).unwrap();
            let y = mpv_dense(&e, n).unwrap();
            let err: f64 = x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
            assert!(err < 1e-12);
        }
    }

    #[test]
    fn non_rfp_decomposition_fails() {
        assert!(rfp_decompose(&library::aklt()).is_err());
    }

    #[test]
    fn correlations_match_kron() {
        let g = gell_mann(2);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(3);
        let rho = crate::linalg::random_psd(&mut rng, 4, 4);
        let fast = region_correlations(&rho, &g, &g);
        let mut k = 0;
        for x in &g {
            for y in &g {
                assert!((fast[k] - (&rho * kron(x, y)).trace()).norm() < 1e-12);
                k += 1;
            }
        }
    }

    #[test]
    fn cid_examples() {
        assert!(is_cid(&library::zcl_example(), 8).unwrap().cid);
        assert!(is_cid(&library::ghz(), 8).unwrap().cid);
        assert!(!is_cid(&library::aklt(), 8).unwrap().cid);
    }

    #[test]
    fn local_orthogonality() {
        assert!(is_locally_orthogonal(&canonical_form(&library::ghz()).unwrap()));
        let ex = canonical_form(&library::zcl_example()).unwrap();
        assert!((local_orthogonality_residual(&ex) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!(is_locally_orthogonal(&canonical_form(&library::aklt()).unwrap()));
    }

    #[test]
    fn ghz_parent() {
        let ph = parent_hamiltonian(&library::ghz(), 2).unwrap();
        assert!(ph.commuting);
        assert!(ph.parent);
        assert!(ph.ground.iter().all(|g| g.kernel_dim == 2));
        assert!(ph.ground.len() >= 4);
        assert!(fro(&(&ph.p_perp * &ph.p_perp - &ph.p_perp)) < 1e-12);
    }

    #[test]
    fn aklt_parent_is_spin_two_projector() {
        let ph = parent_hamiltonian(&library::aklt(), 2).unwrap();
        assert!(!ph.commuting);
        assert!(ph.commutator_norm > 0.1);
        assert!(ph.parent);
        assert!(ph.ground.iter().all(|g| g.kernel_dim == 1));
        // spin-2 multiplet has five states
        assert!((ph.p_perp.trace().re - 5.0).abs() < 1e-10);
    }

    #[test]
    fn commutator_matches_dense() {
        let ph = parent_hamiltonian(&library::aklt(), 2).unwrap();
        let p = eye(9) - &ph.p_perp;
        let pa = kron(&p, &eye(3));
        let pb = kron(&eye(3), &p);
        let dense = fro(&(&pa * &pb - &pb * &pa));
        assert!((dense - ph.commutator_norm).abs() < 1e-9);
    }

    #[test]
    fn bell_parent_commutes() {
        let ph = parent_hamiltonian(&library::bell_chain(), 2).unwrap();
        assert!(ph.commuting);
        assert!(ph.parent);
    }

    #[test]
    fn no_complement() {
        assert!(matches!(parent_hamiltonian(&library::bell_chain(), 1), Err(Error::Precondition(_))));
    }

    #[test]
    fn entropy_profiles() {
        let g = entropy_profile_pure(&library::ghz(), 6).unwrap();
        assert!(g.sal && g.entropies.iter().all(|s| (s - 1.0).abs() < 1e-10));
        let b = entropy_profile_pure(&library::bell_chain(), 6).unwrap();
        assert!(b.sal && b.entropies.iter().all(|s| (s - 2.0).abs() < 1e-10));
        let a = entropy_profile_pure(&library::aklt(), 8).unwrap();
        assert!(!a.sal);
        assert!(a.entropies[..4].windows(2).all(|w| w[0] < w[1]));
        assert!(a.entropies[3] < 2.0);
    }

    #[test]
    fn decorrelation_examples() {
        let mut k = zeros(8, 2);
        k[(0, 0)] = ONE;
        k[(7, 1)] = ONE;
        let r = decorrelation_check(&k, (2, 2, 2)).unwrap();
        assert!(r.decorrelated && r.agree && r.commuting_witness.is_some());

        let full = decorrelation_check(&eye(8), (2, 2, 2)).unwrap();
        assert!(full.decorrelated && full.agree);

        let aklt = library::aklt();
        let prods = open_products(&aklt, 3);
        let v = Mat::from_fn(27, 4, |x, c| prods[x][(c / 2, c % 2)]);
        let r = decorrelation_check(&orth(&v, 1e-10), (3, 3, 3)).unwrap();
        assert!(!r.decorrelated && r.agree && r.commuting_witness.is_none());

        let bad = Mat::from_element(8, 1, ONE);
        assert!(matches!(decorrelation_check(&bad, (2, 2, 2)), Err(Error::Precondition(_))));
    }

    #[test]
    fn triangle_on_examples() {
        for (name, want) in [("ghz", true), ("product", true), ("bell-chain", true), ("xx-periodic", true), ("aklt", false), ("zcl-example-3-6", false)] {
            let a = match library::example(name, None).unwrap() {
                library::Example::Mpv(a) => a,
                _ => unreachable!(),
            };
            let t = triangle(&a).unwrap();
            assert!(t.consistent(), "{name}: {t:?}");
            assert_eq!(t.rfp, want, "{name}");
        }
    }
}
