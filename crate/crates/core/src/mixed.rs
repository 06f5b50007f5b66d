//! Matrix-product density operators: validity, zero correlation length,
//! purification, mutual information and Gibbs-structure extraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::{algebra_basis, canonical_form};
use crate::error::{Error, Result};
use crate::library::eta_chain_tensor;
use crate::linalg::{
    cr, eigh, eigvalsh, entropy, entropy_of_spectrum, eye, fro, herm_fn, hermitian_part, kron, null_space, partial_trace,
    select_cols, zeros, Mat, C, ONE, ZERO,
};
use crate::pure::is_rfp_pure;
use crate::tensor::{mat_pow, mpdo_dense_with, mpdo_reduced, open_operators, Caps, MpdoTensor, MpvTensor};

pub const MIXED_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ValidationRow {
    pub n: usize,
    pub hermiticity_residual: f64,
    pub min_eigenvalue: f64,
    pub max_abs_eigenvalue: f64,
    pub psd: bool,
}

#[derive(Clone, Debug)]
pub struct Validation {
    pub rows: Vec<ValidationRow>,
    pub hermitian: bool,
    pub psd: bool,
}

pub fn validate_mpdo(m: &MpdoTensor, ns: &[usize]) -> Result<Validation> {
    validate_mpdo_with(m, ns, &Caps::default())
}

pub fn validate_mpdo_with(m: &MpdoTensor, ns: &[usize], caps: &Caps) -> Result<Validation> {
    let mut rows = Vec::new();
    for &n in ns {
        let rho = mpdo_dense_with(m, n, caps)?;
        let scale = fro(&rho).max(f64::MIN_POSITIVE);
        let herm = fro(&(&rho - rho.adjoint())) / scale;
        let vals = eigvalsh(&hermitian_part(&rho));
        let min = vals.first().copied().unwrap_or(0.0);
        let max_abs = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
        rows.push(ValidationRow {
            n,
            hermiticity_residual: herm,
            min_eigenvalue: min,
            max_abs_eigenvalue: max_abs,
            psd: herm < 1e-10 && min >= -MIXED_TOL * max_abs.max(f64::MIN_POSITIVE),
        });
    }
    let hermitian = rows.iter().all(|r| r.hermiticity_residual < 1e-10);
    let psd = rows.iter().all(|r| r.psd);
    Ok(Validation { rows, hermitian, psd })
}

#[derive(Clone, Debug)]
pub struct ZclReport {
    pub zcl: bool,
    /// Scale with `E² = λ E`.
    pub lambda: C,
    pub residual: f64,
    pub traced: Mat,
}

pub fn is_zcl_mixed(m: &MpdoTensor) -> ZclReport {
    let e = m.traced();
    let e2 = &e * &e;
    let t = e.trace();
    let norm = fro(&e);
    if norm == 0.0 || t.norm() <= 1e-12 * norm {
        return ZclReport { zcl: false, lambda: ZERO, residual: fro(&e2), traced: e };
    }
    let lambda = e2.trace() / t;
    let residual = fro(&(&e2 - &e * lambda)) / (norm * norm);
    ZclReport { zcl: residual < 1e-9 && lambda.norm() > 1e-12, lambda, residual, traced: e }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PurifyForm {
    /// Bond `D = D'²`, ancilla from a factorization of the local Choi-like matrix.
    Choi,
    /// Virtual configuration copied into the ancilla; `gauge` names the virtual basis.
    DiagonalSlice { gauge: &'static str },
}

#[derive(Clone, Debug)]
pub enum Purification {
    Success {
        /// Physical index `i * ancilla + a`.
        tensor: MpvTensor,
        d: usize,
        ancilla: usize,
        form: PurifyForm,
        residual: f64,
    },
    /// No local PSD factorization was found; this does not rule out other purifications.
    Failure { min_eigenvalue: f64 },
}

/// MPDO obtained by tracing the ancilla of a purification tensor.
pub fn trace_ancilla(a: &MpvTensor, d: usize, ancilla: usize) -> MpdoTensor {
    let k = a.bond;
    MpdoTensor::from_fn(d, k * k, |i, j, x, y| {
        let (al, alp) = (x / k, x % k);
        let (be, bep) = (y / k, y % k);
        let mut acc = ZERO;
        for s in 0..ancilla {
            acc += a.mats[i * ancilla + s][(al, be)] * a.mats[j * ancilla + s][(alp, bep)].conj();
        }
        acc
    })
}

fn psd_factor(c: &Mat) -> (f64, Vec<(f64, Vec<C>)>) {
    let (vals, vecs) = eigh(c);
    let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let min = vals.first().copied().unwrap_or(0.0);
    let mut out = Vec::new();
    for (s, &v) in vals.iter().enumerate() {
        if v > 1e-12 * top.max(f64::MIN_POSITIVE) {
            out.push((v, vecs.column(s).iter().copied().collect()));
        }
    }
    (if top > 0.0 { min / top } else { 0.0 }, out)
}

fn dft(n: usize) -> Mat {
    let s = 1.0 / (n as f64).sqrt();
    Mat::from_fn(n, n, |a, b| C::from_polar(s, 2.0 * std::f64::consts::PI * (a * b) as f64 / n as f64))
}

fn sylvester(n: usize) -> Option<Mat> {
    if !n.is_power_of_two() || n < 4 {
        return None;
    }
    let s = 1.0 / (n as f64).sqrt();
    Some(Mat::from_fn(n, n, |a, b| cr(if (a & b).count_ones() % 2 == 0 { s } else { -s })))
}

fn purification_residual(m: &MpdoTensor, a: &MpvTensor, ancilla: usize) -> f64 {
    let traced = trace_ancilla(a, m.d, ancilla);
    let caps = Caps::default();
    let mut worst: f64 = 0.0;
    for n in 1..=4 {
        let (x, y) = match (mpdo_dense_with(m, n, &caps), mpdo_dense_with(&traced, n, &caps)) {
            (Ok(x), Ok(y)) => (x, y),
            _ => break,
        };
        worst = worst.max(fro(&(&x - &y)) / fro(&x).max(fro(&y)).max(1e-12));
    }
    worst
}

pub fn purify(m: &MpdoTensor) -> Purification {
    let d = m.d;
    let dd = m.bond;
    let mut best_min = f64::NEG_INFINITY;
    let root = (dd as f64).sqrt().round() as usize;
    if root * root == dd {
        // C[(i,α,β),(j,α',β')] = M[i,j,(α,α'),(β,β')]
        let n = d * root * root;
        let c = Mat::from_fn(n, n, |p, q| {
            let (i, al, be) = (p / (root * root), (p / root) % root, p % root);
            let (j, alp, bep) = (q / (root * root), (q / root) % root, q % root);
            m.get(i, j, al * root + alp, be * root + bep)
        });
        let herm = fro(&(&c - c.adjoint())) <= 1e-10 * fro(&c).max(1e-300);
        let (min, factors) = psd_factor(&hermitian_part(&c));
        if herm && min >= -1e-10 && !factors.is_empty() {
            let anc = factors.len();
            let mats = (0..d * anc)
                .map(|x| {
                    let (i, s) = (x / anc, x % anc);
                    let (v, w) = &factors[s];
                    Mat::from_fn(root, root, |al, be| w[i * root * root + al * root + be] * v.sqrt())
                })
                .collect();
            let tensor = MpvTensor { d: d * anc, bond: root, mats };
            let residual = purification_residual(m, &tensor, anc);
            if residual < 1e-9 {
                return Purification::Success { tensor, d, ancilla: anc, form: PurifyForm::Choi, residual };
            }
        }
        best_min = best_min.max(if herm { min } else { f64::NEG_INFINITY });
    }
    let mut gauges: Vec<(&'static str, Mat)> = vec![("identity", eye(dd))];
    if dd > 1 {
        gauges.push(("dft", dft(dd)));
    }
    if let Some(h) = sylvester(dd) {
        gauges.push(("hadamard", h));
    }
    for (name, g) in gauges {
        let view = m.mpv_view().conjugated(&g.adjoint(), &g);
        let mg = MpdoTensor::from_mpv_view(d, &view).unwrap();
        let mut worst = f64::INFINITY;
        let mut factors = Vec::with_capacity(dd * dd);
        let mut ok = true;
        for al in 0..dd {
            for be in 0..dd {
                let op = mg.op(al, be);
                if fro(&(&op - op.adjoint())) > 1e-10 * fro(&op).max(1.0) {
                    ok = false;
                    worst = f64::NEG_INFINITY;
                    break;
                }
                let (min, f) = psd_factor(&hermitian_part(&op));
                worst = worst.min(min);
                factors.push(f);
            }
            if !ok {
                break;
            }
        }
        best_min = best_min.max(worst);
        if !ok || worst < -1e-10 {
            continue;
        }
        let r = factors.iter().map(|f| f.len()).max().unwrap_or(0).max(1);
        let anc = dd * r;
        let mut mats = vec![zeros(dd, dd); d * anc];
        for al in 0..dd {
            for be in 0..dd {
                for (s, (v, w)) in factors[al * dd + be].iter().enumerate() {
                    for i in 0..d {
                        mats[i * anc + al * r + s][(al, be)] = w[i] * v.sqrt();
                    }
                }
            }
        }
        let tensor = MpvTensor { d: d * anc, bond: dd, mats };
        let residual = purification_residual(m, &tensor, anc);
        if residual < 1e-9 {
            return Purification::Success { tensor, d, ancilla: anc, form: PurifyForm::DiagonalSlice { gauge: name }, residual };
        }
    }
    Purification::Failure { min_eigenvalue: if best_min.is_finite() { best_min } else { -1.0 } }
}

#[derive(Clone, Debug)]
pub struct PrfpReport {
    pub prfp: bool,
    pub zcl: bool,
    pub rfp_residual: f64,
    pub warning: Option<String>,
}

pub fn is_prfp(m: &MpdoTensor) -> Result<PrfpReport> {
    let tensor = match purify(m) {
        Purification::Success { tensor, .. } => tensor,
        Purification::Failure { min_eigenvalue } => {
            return Err(Error::NotApplicable(format!(
                "no local purification found (most negative local eigenvalue {min_eigenvalue:.3e})"
            )))
        }
    };
    let v = is_rfp_pure(&tensor)?;
    let zcl = is_zcl_mixed(m).zcl;
    let warning = (v.rfp != zcl).then(|| format!("purification RFP = {} but ZCL = {zcl}", v.rfp));
    Ok(PrfpReport { prfp: v.rfp, zcl, rfp_residual: v.residual, warning })
}

#[derive(Clone, Debug)]
pub struct MutualInfoProfile {
    pub n: usize,
    /// `S_1 .. S_N`, bits.
    pub entropies: Vec<f64>,
    /// `I_1 .. I_{⌊N/2⌋}`.
    pub mutual_info: Vec<f64>,
    pub bound: f64,
    pub sal: bool,
}

fn normalized_reduced(m: &MpdoTensor, n: usize, k: usize, caps: &Caps) -> Result<Mat> {
    let rho = mpdo_reduced(m, n, k, caps)?;
    let t = rho.trace();
    if t.norm() < 1e-300 {
        return Err(Error::Precondition(format!("state vanishes at N = {n}")));
    }
    Ok(rho / t)
}

fn checked_entropy(rho: &Mat) -> Result<f64> {
    let vals = eigvalsh(&hermitian_part(rho));
    let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if vals.first().copied().unwrap_or(0.0) < -1e-9 * top.max(f64::MIN_POSITIVE) {
        return Err(Error::Precondition(format!("non-PSD state (eigenvalue {:.3e})", vals[0])));
    }
    Ok(entropy_of_spectrum(&vals, vals.iter().sum()))
}

pub fn mutual_info_profile(m: &MpdoTensor, n: usize) -> Result<MutualInfoProfile> {
    mutual_info_profile_with(m, n, &Caps::default())
}

pub fn mutual_info_profile_with(m: &MpdoTensor, n: usize, caps: &Caps) -> Result<MutualInfoProfile> {
    if n < 2 {
        return Err(Error::Precondition("mutual information needs N >= 2".into()));
    }
    caps.check_mixed(m.d, n)?;
    let mut entropies = Vec::with_capacity(n);
    for k in 1..=n {
        entropies.push(checked_entropy(&normalized_reduced(m, n, k, caps)?)?);
    }
    let sn = entropies[n - 1];
    let mutual_info: Vec<f64> = (1..=n / 2).map(|l| entropies[l - 1] + entropies[n - l - 1] - sn).collect();
    let sal = mutual_info.iter().all(|x| (x - mutual_info[0]).abs() < 1e-8);
    let bound = 4.0 * (m.bond as f64).log2();
    Ok(MutualInfoProfile { n, entropies, mutual_info, bound, sal })
}

/// `I_L - I_1` for `L = 2..⌊N/2⌋`, using only reduced states of at most `N-1` sites.
pub fn mutual_info_increments(m: &MpdoTensor, n: usize) -> Result<Vec<f64>> {
    let caps = Caps::default();
    let mut s = vec![0.0; n];
    for k in 1..n {
        if k > n / 2 && k < n - 1 {
            continue;
        }
        s[k] = checked_entropy(&normalized_reduced(m, n, k, &caps)?)?;
    }
    for l in 2..=n / 2 {
        if s[n - l] == 0.0 {
            s[n - l] = checked_entropy(&normalized_reduced(m, n, n - l, &caps)?)?;
        }
    }
    Ok((2..=n / 2).map(|l| s[l] + s[n - l] - s[1] - s[n - 1]).collect())
}

pub fn sal_mixed(m: &MpdoTensor, n: usize) -> Result<bool> {
    Ok(mutual_info_increments(m, n)?.iter().all(|x| x.abs() < 1e-8))
}

#[derive(Clone, Debug)]
pub struct SimpleReport {
    pub simple: bool,
    /// Indices of BNT elements whose traced matrix is nilpotent.
    pub nilpotent: Vec<usize>,
    pub traced: Vec<Mat>,
}

pub fn is_simple(m: &MpdoTensor) -> Result<SimpleReport> {
    let dec = canonical_form(&m.mpv_view())?;
    let d = m.d;
    let mut nilpotent = Vec::new();
    let mut traced = Vec::new();
    for (k, b) in dec.bnt.iter().enumerate() {
        let mut t = zeros(b.bond, b.bond);
        for i in 0..d {
            t += &b.mats[i * d + i];
        }
        let scale = b.mats.iter().map(fro).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        if fro(&mat_pow(&(&t / cr(scale)), b.bond)) < 1e-9 {
            nilpotent.push(k);
        }
        traced.push(t);
    }
    Ok(SimpleReport { simple: nilpotent.is_empty(), nilpotent, traced })
}

/// Site decomposition `⊕_k H_l^k ⊗ H_r^k` embedded in the physical space by `u`.
#[derive(Clone, Debug)]
pub struct SiteSplit {
    pub u: Mat,
    pub dims: Vec<(usize, usize)>,
}

impl SiteSplit {
    pub fn internal_dim(&self) -> usize {
        self.dims.iter().map(|&(l, r)| l * r).sum()
    }

    pub fn offset(&self, k: usize) -> usize {
        self.dims[..k].iter().map(|&(l, r)| l * r).sum()
    }

    /// Internal `n`-site indices of the block with the given labels, in the
    /// order `(l_1, r_1, l_2, r_2, ...)`.
    pub fn block_indices(&self, labels: &[usize]) -> Vec<usize> {
        let s = self.internal_dim();
        let mut idx = vec![0usize];
        for &k in labels {
            let (l, r) = self.dims[k];
            let off = self.offset(k);
            idx = idx.iter().flat_map(|&x| (0..l * r).map(move |y| x * s + off + y)).collect();
        }
        idx
    }

    /// `u^{⊗n}`.
    pub fn embedding(&self, n: usize) -> Mat {
        let mut w = Mat::from_element(1, 1, ONE);
        for _ in 0..n {
            w = kron(&w, &self.u);
        }
        w
    }
}

/// Reorder tensor factors: new factor `j` is old factor `perm[j]`.
pub fn permute_factors(op: &Mat, dims: &[usize], perm: &[usize]) -> Mat {
    let n = dims.len();
    let mut stride = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * dims[k + 1];
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let total: usize = dims.iter().product();
    let map: Vec<usize> = (0..total)
        .map(|mut y| {
            let mut old = 0;
            for j in (0..n).rev() {
                old += (y % new_dims[j]) * stride[perm[j]];
                y /= new_dims[j];
            }
            old
        })
        .collect();
    Mat::from_fn(total, total, |a, b| op[(map[a], map[b])])
}

#[derive(Clone, Debug)]
pub struct GsnnchStructure {
    pub split: SiteSplit,
    /// `η_{k,h}` on `H_r^k ⊗ H_l^h`.
    pub eta: Vec<Vec<Mat>>,
    /// `T_{k,h} = tr η_{k,h}`.
    pub t: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Boundary functionals with `(Ψ|Φ) = 1`.
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// `h_{k,h} = -log η_{k,h}` on the support of `η_{k,h}`.
    pub h: Vec<Vec<Mat>>,
    pub zcl: bool,
    pub primitive: bool,
    pub primitivity_power: Option<usize>,
    pub min_eta_eigenvalue: f64,
    pub reassembly_residual: f64,
    pub commutator_residual: f64,
    /// Scale `λ` with `E_phys² = λ E_phys`.
    pub lambda: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct GsnnchOptions {
    pub n: usize,
    pub seed: u64,
}

impl Default for GsnnchOptions {
    fn default() -> Self {
        GsnnchOptions { n: 6, seed: 7 }
    }
}

/// Groups of nearly equal values in a sorted list.
fn cluster(vals: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (v - vals[*g.last().unwrap()]).abs() <= tol => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

fn random_element(basis: &[Mat], rng: &mut ChaCha8Rng, complex: bool) -> Mat {
    let n = basis[0].nrows();
    let mut z = zeros(n, n);
    for b in basis {
        let c = if complex { C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) } else { cr(rng.gen_range(-1.0..1.0)) };
        z += b * c;
    }
    z
}

/// Basis of the center of the algebra spanned by `basis`.
fn center(basis: &[Mat]) -> Vec<Mat> {
    let nb = basis.len();
    let k = basis[0].nrows();
    let mut sys = zeros(nb * k * k, nb);
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            let c = bi * bj - bj * bi;
            for (x, z) in c.iter().enumerate() {
                sys[(j * k * k + x, i)] = *z;
            }
        }
    }
    let scale = basis.iter().map(fro).fold(0.0, f64::max);
    if fro(&sys) <= 1e-10 * scale * scale {
        return basis.to_vec();
    }
    let ns = null_space(&sys, 1e-8);
    (0..ns.ncols())
        .map(|c| {
            let mut z = zeros(k, k);
            for (i, bi) in basis.iter().enumerate() {
                z += bi * ns[(i, c)];
            }
            z
        })
        .collect()
}

/// Decompose the space carrying the *-algebra generated by `left` and `right`
/// (mutually commuting families) into `⊕_k C^{m_k} ⊗ C^{n_k}`, with `left` acting
/// on the first factor. Returns the unitary basis change and `(m_k, n_k)`.
fn split_commuting_pair(left: &[Mat], right: &[Mat], seed: u64) -> Result<(Mat, Vec<(usize, usize)>)> {
    let s = left[0].nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gens: Vec<Mat> = left.to_vec();
    gens.extend(right.iter().cloned());
    let full = algebra_basis(&gens);
    let cen = center(&full);
    let z = hermitian_part(&random_element(&cen, &mut rng, false));
    let (zv, zu) = eigh(&z);
    let spread = zv.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    let mut basis = zeros(s, 0);
    let mut dims = Vec::new();
    for g in cluster(&zv, 1e-7 * spread) {
        let v = select_cols(&zu, &g);
        let dim = v.ncols();
        let restricted: Vec<Mat> = left.iter().map(|x| v.adjoint() * x * &v).collect();
        let alg = algebra_basis(&restricted);
        let m = (alg.len() as f64).sqrt().round() as usize;
        if m * m != alg.len() || dim % m != 0 {
            return Err(Error::Numerical { what: "site algebra is not a full matrix block".into(), residual: alg.len() as f64 });
        }
        let n = dim / m;
        let y = hermitian_part(&random_element(&alg, &mut rng, false));
        let (yv, yu) = eigh(&y);
        let ys = yv.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
        let groups = cluster(&yv, 1e-7 * ys);
        if groups.len() != m || groups.iter().any(|g| g.len() != n) {
            return Err(Error::Numerical { what: "degenerate site algebra element".into(), residual: groups.len() as f64 });
        }
        let e0 = select_cols(&yu, &groups[0]);
        let zc = random_element(&alg, &mut rng, true);
        let mut local = zeros(dim, dim);
        for (i, g) in groups.iter().enumerate() {
            let ei = select_cols(&yu, g);
            let block = if i == 0 {
                e0.clone()
            } else {
                let w = &ei * ei.adjoint() * &zc * &e0;
                let c = w.column(0).norm();
                if c < 1e-8 {
                    return Err(Error::Numerical { what: "site algebra coupling vanished".into(), residual: c });
                }
                w / cr(c)
            };
            for j in 0..n {
                local.set_column(i * n + j, &block.column(j));
            }
        }
        if fro(&(local.adjoint() * &local - eye(dim))) > 1e-7 {
            return Err(Error::Numerical { what: "site split basis not orthonormal".into(), residual: fro(&(local.adjoint() * &local - eye(dim))) });
        }
        let cols = &v * local;
        let mut next = zeros(s, basis.ncols() + dim);
        next.columns_mut(0, basis.ncols()).copy_from(&basis);
        next.columns_mut(basis.ncols(), dim).copy_from(&cols);
        basis = next;
        dims.push((m, n));
    }
    Ok((basis, dims))
}

fn product_residual(x: &Mat, m: usize, n: usize, left: bool) -> f64 {
    // distance of x from X ⊗ 1_n (left) or 1_m ⊗ Y (right)
    let dims = [m, n];
    let keep = if left { [0usize] } else { [1usize] };
    let red = partial_trace(x, &dims, &keep);
    let rebuilt = if left { kron(&red, &eye(n)) / cr(n as f64) } else { kron(&eye(m), &red) / cr(m as f64) };
    fro(&(x - rebuilt))
}

fn is_primitive(t: &[Vec<f64>]) -> Option<usize> {
    let k = t.len();
    let bound = (k - 1) * (k - 1) + 1;
    let pattern = |x: f64| if x > 1e-12 { 1.0 } else { 0.0 };
    let base: Vec<Vec<f64>> = t.iter().map(|r| r.iter().map(|&x| pattern(x)).collect()).collect();
    let mut p = base.clone();
    for n in 1..=bound {
        if p.iter().all(|r| r.iter().all(|&x| x > 0.0)) {
            return Some(n);
        }
        p = (0..k).map(|i| (0..k).map(|j| pattern((0..k).map(|l| p[i][l] * base[l][j]).sum())).collect()).collect();
    }
    None
}

pub fn extract_gsnnch(k: &MpdoTensor, opts: &GsnnchOptions) -> Result<GsnnchStructure> {
    let simple = is_simple(k)?;
    if !simple.simple {
        return Err(Error::NotApplicable(format!("tensor is not simple (nilpotent BNT elements {:?})", simple.nilpotent)));
    }
    let z = is_zcl_mixed(k);
    if !z.zcl {
        return Err(Error::NotApplicable(format!("no zero correlation length (residual {:.3e})", z.residual)));
    }
    let n = opts.n;
    for nn in [n - 1, n] {
        let inc = mutual_info_increments(k, nn)?;
        if let Some(x) = inc.iter().find(|x| x.abs() >= 1e-8) {
            return Err(Error::NotApplicable(format!("area law not saturated at N = {nn} (I_L - I_1 = {x:.3e})")));
        }
    }
    let caps = Caps::default();
    let d = k.d;
    let rho1 = normalized_reduced(k, n, 1, &caps)?;
    let rho2 = normalized_reduced(k, n, 2, &caps)?;
    let (v1, u1) = eigh(&rho1);
    let top = v1.last().copied().unwrap_or(0.0);
    let supp: Vec<usize> = (0..d).filter(|&i| v1[i] > 1e-10 * top).collect();
    let w = select_cols(&u1, &supp);
    let s = w.ncols();
    let inv_sqrt: Vec<f64> = supp.iter().map(|&i| 1.0 / v1[i].sqrt()).collect();
    let sb = Mat::from_diagonal(&nalgebra::DVector::from_iterator(s, inv_sqrt.iter().map(|&x| cr(x))));
    let ww = kron(&w, &w);
    let _ = ww;
    // σ_B^{-1/2} tr_A[(O ⊗ 1) ρ_AB] σ_B^{-1/2} and the mirror image for C
    let iw = kron(&eye(d), &w);
    let wi = kron(&w, &eye(d));
    let rab = iw.adjoint() * &rho2 * &iw;
    let rbc = wi.adjoint() * &rho2 * &wi;
    let basis = crate::linalg::gell_mann(d);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for o in &basis {
        let l = partial_trace(&(kron(o, &eye(s)) * &rab), &[d, s], &[1]);
        let r = partial_trace(&(kron(&eye(s), o) * &rbc), &[s, d], &[0]);
        left.push(hermitian_part(&(&sb * &l * &sb)));
        right.push(hermitian_part(&(&sb * &r * &sb)));
        // σ^{-1} G and G σ^{-1}
        let s2 = &sb * &sb;
        left.push(&s2 * &l);
        left.push(&l * &s2);
        right.push(&s2 * &r);
        right.push(&r * &s2);
    }
    let (v, dims) = split_commuting_pair(&left, &right, opts.seed)?;
    let split = SiteSplit { u: &w * &v, dims: dims.clone() };
    // the right family must act on the second factor only
    let mut structure_residual: f64 = 0.0;
    for (kk, &(m, nn)) in dims.iter().enumerate() {
        let idx: Vec<usize> = (split.offset(kk)..split.offset(kk) + m * nn).collect();
        let vk = select_cols(&v, &idx);
        for x in &left {
            structure_residual = structure_residual.max(product_residual(&(vk.adjoint() * x * &vk), m, nn, true));
        }
        for x in &right {
            structure_residual = structure_residual.max(product_residual(&(vk.adjoint() * x * &vk), m, nn, false));
        }
    }
    if structure_residual > 1e-6 {
        return Err(Error::Numerical { what: "middle-site decomposition failed".into(), residual: structure_residual });
    }
    let nl = dims.len();
    let uu = kron(&split.u, &split.u);
    let rho_int = uu.adjoint() * &rho2 * &uu;
    let mut x = vec![vec![zeros(0, 0); nl]; nl];
    for ka in 0..nl {
        for kb in 0..nl {
            let (l1, r1) = dims[ka];
            let (l2, r2) = dims[kb];
            let idx = split.block_indices(&[ka, kb]);
            let blk = Mat::from_fn(idx.len(), idx.len(), |p, q| rho_int[(idx[p], idx[q])]);
            // factors (l1, r1, l2, r2): keep (r1, l2)
            x[ka][kb] = partial_trace(&blk, &[l1, r1, l2, r2], &[1, 2]);
        }
    }
    let p: Vec<f64> = (0..nl).map(|ka| (0..nl).map(|kb| x[ka][kb].trace().re).sum()).collect();
    if p.iter().any(|&v| v <= 1e-12) {
        return Err(Error::Numerical { what: "label with vanishing weight".into(), residual: p.iter().cloned().fold(f64::INFINITY, f64::min) });
    }
    let mut eta = vec![vec![zeros(0, 0); nl]; nl];
    let mut h = vec![vec![zeros(0, 0); nl]; nl];
    let mut t = vec![vec![0.0; nl]; nl];
    let mut min_eig = f64::INFINITY;
    let mut warnings = Vec::new();
    for ka in 0..nl {
        for kb in 0..nl {
            let e = hermitian_part(&(&x[ka][kb] / cr((p[ka] * p[kb]).sqrt())));
            let vals = eigvalsh(&e);
            let emax = vals.last().copied().unwrap_or(0.0);
            min_eig = min_eig.min(vals.first().copied().unwrap_or(0.0) / emax.max(1e-300));
            if vals.first().copied().unwrap_or(0.0) < 1e-12 * emax {
                warnings.push(format!("η[{ka}][{kb}] is singular; logarithm taken on its support"));
            }
            h[ka][kb] = herm_fn(&e, |v| if v > 1e-12 * emax { -v.ln() } else { 0.0 });
            t[ka][kb] = e.trace().re;
            eta[ka][kb] = e;
        }
    }
    if min_eig < -1e-8 {
        return Err(Error::Numerical { what: "η not positive semidefinite".into(), residual: min_eig });
    }
    let a: Vec<f64> = p.iter().map(|v| v.sqrt()).collect();
    let b = a.clone();
    let rank_one = (0..nl).all(|i| (0..nl).all(|j| (t[i][j] - a[i] * b[j]).abs() < 1e-9));
    let primitivity_power = is_primitive(&t);
    // commuting neighbouring terms act on disjoint factors of the middle site
    let mut commutator_residual: f64 = 0.0;
    for k1 in 0..nl {
        for k2 in 0..nl {
            for k3 in 0..nl {
                let (_, r1) = dims[k1];
                let (l2, r2) = dims[k2];
                let (l3, _) = dims[k3];
                let ha = kron(&h[k1][k2], &eye(r2 * l3));
                let hb = kron(&eye(r1 * l2), &h[k2][k3]);
                commutator_residual = commutator_residual.max(fro(&(&ha * &hb - &hb * &ha)));
            }
        }
    }
    let rebuilt = eta_chain_tensor(&dims, &|ka, kb| eta[ka][kb].clone(), Some(&split.u));
    let mut reassembly_residual: f64 = 0.0;
    for nn in 3..=opts.n {
        let (x1, x2) = match (mpdo_dense_with(k, nn, &caps), mpdo_dense_with(&rebuilt, nn, &caps)) {
            (Ok(x1), Ok(x2)) => (x1, x2),
            _ => break,
        };
        let x1 = &x1 / x1.trace();
        let x2 = &x2 / x2.trace();
        reassembly_residual = reassembly_residual.max(fro(&(x1 - x2)));
    }
    if reassembly_residual > 1e-8 {
        return Err(Error::Numerical { what: "GSNNCH reassembly mismatch".into(), residual: reassembly_residual });
    }
    Ok(GsnnchStructure {
        split,
        eta,
        t,
        phi: a.clone(),
        psi: b.clone(),
        a,
        b,
        h,
        zcl: rank_one,
        primitive: primitivity_power.is_some(),
        primitivity_power,
        min_eta_eigenvalue: min_eig,
        reassembly_residual,
        commutator_residual,
        lambda: z.lambda.re,
        warnings,
    })
}

/// Channel `T` from one blocked site (two sites of `K`) to two blocked sites.
#[derive(Clone, Debug)]
pub struct TChannel {
    g: GsnnchStructure,
    d: usize,
}

/// Channel `S` from two blocked sites back to one.
#[derive(Clone, Debug)]
pub struct SChannel {
    g: GsnnchStructure,
    d: usize,
}

fn fallback_state(dim: usize) -> Mat {
    let mut w = zeros(dim, dim);
    w[(0, 0)] = ONE;
    w
}

impl TChannel {
    pub fn input_dim(&self) -> usize {
        self.d * self.d
    }

    pub fn apply(&self, y: &Mat) -> Mat {
        let g = &self.g;
        let sp = &g.split;
        let nl = sp.dims.len();
        let s = sp.internal_dim();
        let w2 = sp.embedding(2);
        let w4 = sp.embedding(4);
        let yi = w2.adjoint() * y * &w2;
        let lost = y.trace() - yi.trace();
        let mut out = zeros(s.pow(4), s.pow(4));
        for k1 in 0..nl {
            for k2 in 0..nl {
                let (l1, r1) = sp.dims[k1];
                let (l2, r2) = sp.dims[k2];
                let idx = sp.block_indices(&[k1, k2]);
                let blk = Mat::from_fn(idx.len(), idx.len(), |p, q| yi[(idx[p], idx[q])]);
                let z = partial_trace(&blk, &[l1, r1, l2, r2], &[0, 3]);
                let norm = cr(1.0 / (g.a[k1] * g.b[k2]));
                for k2p in 0..nl {
                    for k3 in 0..nl {
                        let (m2, s2) = sp.dims[k2p];
                        let (m3, s3) = sp.dims[k3];
                        // factors (l1, r4), (r1, l2'), (r2', l3), (r3, l4)
                        let op = kron(&kron(&kron(&z, &g.eta[k1][k2p]), &g.eta[k2p][k3]), &g.eta[k3][k2]) * norm;
                        let fdims = [l1, r2, r1, m2, s2, m3, s3, l2];
                        // target order (l1, r1, l2', r2', l3, r3, l4, r4)
                        let placed = permute_factors(&op, &fdims, &[0, 2, 3, 4, 5, 6, 7, 1]);
                        let tgt = sp.block_indices(&[k1, k2p, k3, k2]);
                        for (p, &gp) in tgt.iter().enumerate() {
                            for (q, &gq) in tgt.iter().enumerate() {
                                out[(gp, gq)] += placed[(p, q)];
                            }
                        }
                    }
                }
            }
        }
        &w4 * out * w4.adjoint() + fallback_state(w4.nrows()) * lost
    }
}

impl SChannel {
    pub fn input_dim(&self) -> usize {
        self.d.pow(4)
    }

    pub fn apply(&self, y: &Mat) -> Mat {
        let g = &self.g;
        let sp = &g.split;
        let nl = sp.dims.len();
        let s = sp.internal_dim();
        let w2 = sp.embedding(2);
        let w4 = sp.embedding(4);
        let yi = w4.adjoint() * y * &w4;
        let lost = y.trace() - yi.trace();
        let mut out = zeros(s * s, s * s);
        for k1 in 0..nl {
            for k4 in 0..nl {
                let (l1, r1) = sp.dims[k1];
                let (l4, r4) = sp.dims[k4];
                let mut z = zeros(l1 * r4, l1 * r4);
                for k2 in 0..nl {
                    for k3 in 0..nl {
                        let (m2, s2) = sp.dims[k2];
                        let (m3, s3) = sp.dims[k3];
                        let idx = sp.block_indices(&[k1, k2, k3, k4]);
                        let blk = Mat::from_fn(idx.len(), idx.len(), |p, q| yi[(idx[p], idx[q])]);
                        z += partial_trace(&blk, &[l1, r1, m2, s2, m3, s3, l4, r4], &[0, 7]);
                    }
                }
                let op = kron(&z, &g.eta[k1][k4]) * cr(1.0 / (g.a[k1] * g.b[k4]));
                // factors (l1, r2), (r1, l2) -> (l1, r1, l2, r2)
                let placed = permute_factors(&op, &[l1, r4, r1, l4], &[0, 2, 3, 1]);
                let tgt = sp.block_indices(&[k1, k4]);
                for (p, &gp) in tgt.iter().enumerate() {
                    for (q, &gq) in tgt.iter().enumerate() {
                        out[(gp, gq)] += placed[(p, q)];
                    }
                }
            }
        }
        &w2 * out * w2.adjoint() + fallback_state(w2.nrows()) * lost
    }
}

#[derive(Clone, Debug)]
pub struct ChannelCheck {
    /// `max ‖T(M_1(X)) - M_2(X)‖ / ‖M_2(X)‖` over matrix units `X`.
    pub identity_residual: f64,
    pub worst_boundary: (usize, usize),
    /// `max |tr Φ(E_ij) - δ_ij|`.
    pub trace_residual: f64,
    /// Smallest Choi eigenvalue relative to the largest, when computed.
    pub choi_min: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TsChannels {
    pub t: TChannel,
    pub s: SChannel,
    pub t_check: ChannelCheck,
    pub s_check: ChannelCheck,
}

const CHOI_MAX_DIM: usize = 1024;

fn check_channel(apply: &dyn Fn(&Mat) -> Mat, din: usize, dout: usize, pairs: &[(Mat, Mat)]) -> ChannelCheck {
    let mut identity_residual: f64 = 0.0;
    let mut worst = 0;
    for (k, (x, y)) in pairs.iter().enumerate() {
        let r = fro(&(apply(x) - y)) / fro(y).max(1e-300);
        if r > identity_residual {
            identity_residual = r;
            worst = k;
        }
    }
    let with_choi = din * dout <= CHOI_MAX_DIM;
    let mut choi = if with_choi { zeros(din * dout, din * dout) } else { zeros(0, 0) };
    let mut trace_residual: f64 = 0.0;
    for i in 0..din {
        for j in 0..din {
            let mut e = zeros(din, din);
            e[(i, j)] = ONE;
            let img = apply(&e);
            let want = if i == j { ONE } else { ZERO };
            trace_residual = trace_residual.max((img.trace() - want).norm());
            if with_choi {
                for p in 0..dout {
                    for q in 0..dout {
                        choi[(i * dout + p, j * dout + q)] = img[(p, q)];
                    }
                }
            }
        }
    }
    let choi_min = with_choi.then(|| {
        let v = eigvalsh(&hermitian_part(&choi));
        v[0] / v.last().copied().unwrap_or(1.0).abs().max(1e-300)
    });
    ChannelCheck { identity_residual, worst_boundary: (worst, 0), trace_residual, choi_min }
}

pub const CHANNEL_TOL: f64 = 1e-9;

/// `T` and `S` for the tensor blocked over two sites, built from the extracted structure.
pub fn build_ts_channels(k: &MpdoTensor, g: &GsnnchStructure) -> Result<TsChannels> {
    if !g.zcl {
        return Err(Error::Precondition("channels need a rank-one label matrix".into()));
    }
    let d = k.d;
    let kn = k.scaled(cr(1.0 / g.lambda));
    let o2 = open_operators(&kn, 2);
    let o4 = open_operators(&kn, 4);
    let t = TChannel { g: g.clone(), d };
    let s = SChannel { g: g.clone(), d };
    let fwd: Vec<(Mat, Mat)> = o2.iter().cloned().zip(o4.iter().cloned()).collect();
    let back: Vec<(Mat, Mat)> = o4.into_iter().zip(o2).collect();
    let mut t_check = check_channel(&|x| t.apply(x), d * d, d.pow(4), &fwd);
    let mut s_check = check_channel(&|x| s.apply(x), d.pow(4), d * d, &back);
    let dd = k.bond;
    t_check.worst_boundary = (t_check.worst_boundary.0 / dd, t_check.worst_boundary.0 % dd);
    s_check.worst_boundary = (s_check.worst_boundary.0 / dd, s_check.worst_boundary.0 % dd);
    for (name, c) in [("T", &t_check), ("S", &s_check)] {
        if c.identity_residual > CHANNEL_TOL {
            return Err(Error::Numerical {
                what: format!("{name} identity fails at boundary X = E{:?}", c.worst_boundary),
                residual: c.identity_residual,
            });
        }
        if c.trace_residual > CHANNEL_TOL || c.choi_min.map_or(false, |m| m < -CHANNEL_TOL) {
            return Err(Error::Numerical { what: format!("{name} is not a channel"), residual: c.trace_residual });
        }
    }
    Ok(TsChannels { t, s, t_check, s_check })
}

/// Entropy of the normalized reduced state of `m` contiguous sites.
pub fn block_entropy(mt: &MpdoTensor, n: usize, m: usize) -> Result<f64> {
    Ok(entropy(&normalized_reduced(mt, n, m, &Caps::default())?))
}
