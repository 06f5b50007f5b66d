//! Canonical forms, normality and injectivity certificates, gauge recovery.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    cr, eig, eigvals, eye, fro, herm_fn, kron, null_space, orth, pinv, random_complex, svd, unvec_rows, vec_rows, zeros,
    Mat, C, ONE, ZERO,
};
use crate::tensor::{block, direct_sum, self_transfer, transfer_map, MpvTensor};

/// Eigenvalues within this relative distance of the spectral radius are peripheral.
pub const PERIPHERAL_TOL: f64 = 1e-8;
const SPAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum NormalCertificate {
    Normal { gap: f64 },
    InvariantSubspace(Mat),
    PeripheralSpectrum(Vec<C>),
}

impl NormalCertificate {
    pub fn is_normal(&self) -> bool {
        matches!(self, NormalCertificate::Normal { .. })
    }
}

/// Orthonormal basis (as flattened row-major vectors) of a span, grown one
/// candidate at a time.
#[derive(Clone)]
struct Span {
    dim: usize,
    basis: Vec<Vec<C>>,
}

impl Span {
    fn new(dim: usize) -> Self {
        Span { dim, basis: Vec::new() }
    }

    fn add(&mut self, v: &[C]) -> bool {
        if self.basis.len() == self.dim {
            return false;
        }
        let n0 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n0 == 0.0 {
            return false;
        }
        let mut w: Vec<C> = v.iter().map(|z| z / n0).collect();
        for _ in 0..2 {
            for b in &self.basis {
                let p: C = b.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= p * bi;
                }
            }
        }
        let n = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > SPAN_TOL.sqrt() * 1e-1 {
            w.iter_mut().for_each(|z| *z /= n);
            self.basis.push(w);
            true
        } else {
            false
        }
    }

    fn len(&self) -> usize {
        self.basis.len()
    }
}

/// Basis of the unital algebra generated by `mats`.
pub fn algebra_basis(mats: &[Mat]) -> Vec<Mat> {
    let k = mats[0].nrows();
    let mut span = Span::new(k * k);
    let mut elems: Vec<Mat> = Vec::new();
    let scale = mats.iter().map(fro).fold(0.0, f64::max);
    let push = |m: Mat, span: &mut Span, elems: &mut Vec<Mat>| {
        if fro(&m) <= 1e-12 * scale {
            return false;
        }
        if span.add(&vec_rows(&m)) {
            let idx = span.len() - 1;
            elems.push(unvec_rows(&span.basis[idx], k, k));
            true
        } else {
            false
        }
    };
    push(eye(k), &mut span, &mut elems);
    for m in mats {
        push(m.clone(), &mut span, &mut elems);
    }
    let mut frontier = 0;
    while frontier < elems.len() && elems.len() < k * k {
        let e = elems[frontier].clone();
        for m in mats {
            push(m * &e, &mut span, &mut elems);
        }
        frontier += 1;
    }
    elems
}

/// Proper invariant subspace of the family `mats`, if any, as orthonormal columns.
pub fn find_invariant_subspace(mats: &[Mat], seed: u64) -> Option<Mat> {
    let k = mats[0].nrows();
    if k <= 1 {
        return None;
    }
    let alg = algebra_basis(mats);
    if alg.len() == k * k {
        return None;
    }
    // radical via the trace form: its range is invariant
    let n = alg.len();
    let g = Mat::from_fn(n, n, |a, b| (&alg[a] * &alg[b]).trace());
    let ker = null_space(&g, 1e-7);
    if ker.ncols() > 0 {
        let mut cols = zeros(k, 0);
        for c in 0..ker.ncols() {
            let mut j = zeros(k, k);
            for a in 0..n {
                j += &alg[a] * ker[(a, c)];
            }
            let old = cols.ncols();
            cols = cols.insert_columns(old, k, ZERO);
            cols.view_mut((0, old), (k, k)).copy_from(&j);
        }
        let r = orth(&cols, 1e-7);
        if r.ncols() > 0 && r.ncols() < k {
            return Some(r);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = random_complex(&mut rng, n, 1);
    let mut x = zeros(k, k);
    for a in 0..n {
        x += &alg[a] * coeffs[(a, 0)];
    }
    let (_, vecs) = eig(&x);
    let mut best: Option<Mat> = None;
    for c in 0..k {
        let v = vecs.column(c).into_owned();
        let mut cols = zeros(k, n);
        for a in 0..n {
            cols.set_column(a, &(&alg[a] * &v));
        }
        let o = orth(&cols, 1e-7);
        if o.ncols() < k && best.as_ref().map_or(true, |b| o.ncols() < b.ncols()) {
            best = Some(o);
        }
    }
    if best.is_some() {
        return best;
    }
    // dual: invariant subspace of the adjoint family gives one by complement
    let adj: Vec<Mat> = mats.iter().map(|m| m.adjoint()).collect();
    let alg_adj = algebra_basis(&adj);
    let coeffs = random_complex(&mut rng, alg_adj.len(), 1);
    let mut y = zeros(k, k);
    for a in 0..alg_adj.len() {
        y += &alg_adj[a] * coeffs[(a, 0)];
    }
    let (_, vecs) = eig(&y);
    for c in 0..k {
        let v = vecs.column(c).into_owned();
        let mut cols = zeros(k, alg_adj.len());
        for a in 0..alg_adj.len() {
            cols.set_column(a, &(&alg_adj[a] * &v));
        }
        let o = orth(&cols, 1e-7);
        if o.ncols() < k {
            let comp = null_space(&o.adjoint(), 1e-7);
            return Some(comp);
        }
    }
    None
}

pub fn spectral_radius_of(a: &MpvTensor) -> f64 {
    crate::linalg::spectral_radius(&self_transfer(a))
}

/// Peripheral eigenvalues of the transfer matrix (normalized to radius 1) and
/// the gap to the rest of the spectrum.
pub fn peripheral_spectrum(a: &MpvTensor) -> (f64, Vec<C>, f64) {
    let vals = eigvals(&self_transfer(a));
    let r = vals.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if r == 0.0 {
        return (0.0, vec![ZERO], 0.0);
    }
    let mut per = Vec::new();
    let mut sub: f64 = 0.0;
    for z in &vals {
        if z.norm() >= r * (1.0 - PERIPHERAL_TOL) {
            per.push(z / r);
        } else {
            sub = sub.max(z.norm() / r);
        }
    }
    (r, per, 1.0 - sub)
}

pub fn is_normal(a: &MpvTensor) -> NormalCertificate {
    if let Some(w) = find_invariant_subspace(&a.mats, 17) {
        return NormalCertificate::InvariantSubspace(&w * w.adjoint());
    }
    let (r, per, gap) = peripheral_spectrum(a);
    if r == 0.0 || per.len() != 1 || (per[0] - ONE).norm() > 1e-6 {
        return NormalCertificate::PeripheralSpectrum(per);
    }
    NormalCertificate::Normal { gap }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Injectivity {
    Injective(usize),
    NotInjective { rank: usize },
}

/// Dimension of the span of all length-`l` products, for `l = 1..=lmax`,
/// stopping once `target` is reached.
fn product_span_lengths(mats: &[Mat], lmax: usize, target: usize) -> (Option<usize>, usize) {
    let k = mats[0].nrows();
    let scale = mats.iter().map(fro).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mats: Vec<Mat> = mats.iter().map(|m| m / cr(scale)).collect();
    let mut cur: Vec<Mat> = vec![eye(k)];
    let mut last = 0;
    let mut history: Vec<usize> = Vec::new();
    for l in 1..=lmax {
        let mut span = Span::new(k * k);
        let mut next = Vec::new();
        for w in &cur {
            for m in &mats {
                let p = w * m;
                if span.add(&vec_rows(&p)) {
                    next.push(unvec_rows(span.basis.last().unwrap(), k, k));
                }
            }
        }
        last = span.len();
        if last >= target {
            return (Some(l), last);
        }
        if last == 0 {
            return (None, 0);
        }
        history.push(last);
        // the span dimension sequence is eventually periodic; stop after a long plateau
        if history.len() > 2 * k * k + 4 && history[history.len() - 2 * k * k - 4..].iter().all(|&x| x == last) {
            return (None, last);
        }
        cur = next;
    }
    (None, last)
}

pub fn is_injective(a: &MpvTensor) -> Injectivity {
    let dd = a.bond * a.bond;
    match product_span_lengths(&a.mats, dd * dd, dd) {
        (Some(l), _) => Injectivity::Injective(l),
        (None, rank) => Injectivity::NotInjective { rank },
    }
}

/// Residual of `pinv(C) C = 1` for the blocked coefficient matrix.
pub fn injectivity_inverse_residual(a: &MpvTensor, l: usize) -> Result<f64> {
    let b = block(a, l)?;
    let c = b.coefficient_matrix();
    let inv = pinv(&c, 1e-10);
    let dd = a.bond * a.bond;
    Ok(fro(&(inv * c - eye(dd))))
}

#[derive(Clone, Debug)]
pub struct GaugeWitness {
    pub phase: f64,
    pub x: Mat,
    pub x_inv: Mat,
    pub residual: f64,
    /// Ratio of spectral-radius normalizations, `sqrt(r_B / r_A)`.
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub enum GaugeResult {
    Gauge(GaugeWitness),
    Distinct { spectral_radius: f64 },
}

/// Right fixed point `Σ A^i Λ A^{i†} = Λ` of a normalized normal tensor.
pub fn right_fixed_point(a: &MpvTensor) -> Mat {
    let e = self_transfer(a);
    let (vals, vecs) = eig(&e);
    let k = (0..vals.len()).max_by(|&x, &y| vals[x].norm().partial_cmp(&vals[y].norm()).unwrap()).unwrap();
    let v: Vec<C> = vecs.column(k).iter().copied().collect();
    let m = unvec_rows(&v, a.bond, a.bond);
    let t = m.trace();
    let ph = if t.norm() > 0.0 { t.conj() / t.norm() } else { ONE };
    let h = crate::linalg::hermitian_part(&(m * ph));
    let t = h.trace().re;
    h / cr(t)
}

/// Left fixed point `Σ A^{i†} Λ A^i = Λ`.
pub fn left_fixed_point(a: &MpvTensor) -> Mat {
    let adj = MpvTensor { d: a.d, bond: a.bond, mats: a.mats.iter().map(|m| m.adjoint()).collect() };
    right_fixed_point(&adj)
}

pub fn normalize_gauge(x: &Mat) -> Mat {
    let n = x.nrows();
    let det = x.determinant();
    let mut y = x / cr(det.norm().powf(1.0 / n as f64));
    if let Some(first) = vec_rows(&y).into_iter().find(|z| z.norm() > 1e-12 * fro(x).max(1e-300)) {
        y *= first.conj() / first.norm();
    }
    y
}

pub fn find_gauge(a: &MpvTensor, b: &MpvTensor) -> Result<GaugeResult> {
    if a.d != b.d {
        return Err(Error::Dimension("find_gauge on tensors with different d".into()));
    }
    if !is_normal(a).is_normal() || !is_normal(b).is_normal() {
        return Err(Error::Precondition("find_gauge requires normal tensors".into()));
    }
    Ok(find_gauge_normal(a, b))
}

/// `find_gauge` without re-checking normality.
pub fn find_gauge_normal(a: &MpvTensor, b: &MpvTensor) -> GaugeResult {
    let ra = spectral_radius_of(a).sqrt();
    let rb = spectral_radius_of(b).sqrt();
    let an = a.scaled(cr(1.0 / ra));
    let bn = b.scaled(cr(1.0 / rb));
    if a.bond != b.bond {
        let e = transfer_map(&bn, &an).unwrap().matrix;
        return GaugeResult::Distinct { spectral_radius: crate::linalg::spectral_radius(&e) };
    }
    let e = transfer_map(&bn, &an).unwrap().matrix;
    let (vals, vecs) = eig(&e);
    let k = (0..vals.len()).max_by(|&x, &y| vals[x].norm().partial_cmp(&vals[y].norm()).unwrap()).unwrap();
    let rad = vals[k].norm();
    if rad < 1.0 - 1e-6 {
        return GaugeResult::Distinct { spectral_radius: rad };
    }
    let phase = vals[k].arg().rem_euclid(2.0 * std::f64::consts::PI);
    let y = unvec_rows(&vecs.column(k).iter().copied().collect::<Vec<_>>(), a.bond, a.bond);
    let lam = right_fixed_point(&an);
    let x = normalize_gauge(&(y * pinv(&lam, 1e-13)));
    let x_inv = match x.clone().try_inverse() {
        Some(xi) => xi,
        None => return GaugeResult::Distinct { spectral_radius: rad },
    };
    let ph = C::from_polar(1.0, phase);
    let residual = an
        .mats
        .iter()
        .zip(&bn.mats)
        .map(|(ai, bi)| fro(&(bi - &x * ai * &x_inv * ph)))
        .fold(0.0, f64::max);
    if residual > 1e-6 {
        return GaugeResult::Distinct { spectral_radius: rad };
    }
    GaugeResult::Gauge(GaugeWitness { phase, x, x_inv, residual, scale: rb / ra })
}

#[derive(Clone, Debug)]
pub struct CanonicalBlock {
    pub weight: C,
    pub gauge: Mat,
    pub gauge_inv: Mat,
    pub bnt_index: usize,
}

#[derive(Clone, Debug)]
pub struct CanonicalDecomposition {
    pub d: usize,
    pub blocks: Vec<CanonicalBlock>,
    pub bnt: Vec<MpvTensor>,
    /// Blocking factor applied before decomposing.
    pub blocking: usize,
    /// Overall factor: the decomposed tensor equals `scale * ⊕ μ X A_j X^{-1}`.
    pub scale: f64,
}

impl CanonicalDecomposition {
    pub fn g(&self) -> usize {
        self.bnt.len()
    }

    pub fn weights_of(&self, j: usize) -> Vec<C> {
        self.blocks.iter().filter(|b| b.bnt_index == j).map(|b| b.weight).collect()
    }

    /// `⊕ μ X A_j X^{-1}` without the overall scale.
    pub fn reassemble_unit(&self) -> MpvTensor {
        let parts: Vec<MpvTensor> = self
            .blocks
            .iter()
            .map(|b| self.bnt[b.bnt_index].conjugated(&b.gauge, &b.gauge_inv).scaled(b.weight))
            .collect();
        if parts.is_empty() {
            return MpvTensor::from_fn(self.d, 1, |_, _, _| ZERO);
        }
        direct_sum(&parts).unwrap()
    }

    pub fn reassemble(&self) -> MpvTensor {
        self.reassemble_unit().scaled(cr(self.scale))
    }

    /// Block-diagonal assembly of the gauges.
    pub fn global_gauge(&self) -> Mat {
        let n: usize = self.blocks.iter().map(|b| b.gauge.nrows()).sum();
        let mut x = zeros(n, n);
        let mut off = 0;
        for b in &self.blocks {
            let k = b.gauge.nrows();
            x.view_mut((off, off), (k, k)).copy_from(&b.gauge);
            off += k;
        }
        x
    }
}

/// Irreducible diagonal blocks of a block-triangularization.
fn composition_series(mats: &[Mat], seed: u64, out: &mut Vec<Vec<Mat>>) {
    match find_invariant_subspace(mats, seed) {
        None => out.push(mats.to_vec()),
        Some(w) => {
            let comp = null_space(&w.adjoint(), 1e-7);
            let wa = w.adjoint();
            let ca = comp.adjoint();
            let inner: Vec<Mat> = mats.iter().map(|m| &wa * m * &w).collect();
            let outer: Vec<Mat> = mats.iter().map(|m| &ca * m * &comp).collect();
            composition_series(&inner, seed + 1, out);
            composition_series(&outer, seed + 2, out);
        }
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

fn fingerprint(a: &MpvTensor) -> Vec<i64> {
    a.mats.iter().map(|m| (m.trace().norm() * 1e6).round() as i64).collect()
}

pub fn canonical_form(a: &MpvTensor) -> Result<CanonicalDecomposition> {
    canonical_form_blocked(a, 1)
}

fn canonical_form_blocked(a: &MpvTensor, blocking: usize) -> Result<CanonicalDecomposition> {
    let mut raw = Vec::new();
    composition_series(&a.mats, 101, &mut raw);
    let mut parts: Vec<(f64, MpvTensor)> = Vec::new();
    let mut period = 1;
    let top = raw
        .iter()
        .map(|m| spectral_radius_of(&MpvTensor { d: a.d, bond: m[0].nrows(), mats: m.clone() }))
        .fold(0.0, f64::max);
    for mats in raw {
        let t = MpvTensor { d: a.d, bond: mats[0].nrows(), mats };
        let (r, per, gap) = peripheral_spectrum(&t);
        if r <= 1e-12 * top.max(1e-300) {
            continue;
        }
        if gap < 1e-6 && gap > PERIPHERAL_TOL {
            return Err(Error::IllConditioned { gap });
        }
        period = lcm(period, per.len());
        parts.push((r.sqrt(), t.scaled(cr(1.0 / r.sqrt()))));
    }
    if period > 1 {
        if blocking * period > 64 {
            return Err(Error::IllConditioned { gap: 0.0 });
        }
        let b = block(a, period)?;
        return canonical_form_blocked(&b, blocking * period);
    }
    parts.sort_by(|x, y| {
        y.0.partial_cmp(&x.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.1.bond.cmp(&y.1.bond))
            .then(fingerprint(&x.1).cmp(&fingerprint(&y.1)))
    });
    let scale = parts.first().map(|p| p.0).unwrap_or(0.0);
    let mut bnt: Vec<MpvTensor> = Vec::new();
    let mut blocks = Vec::new();
    for (w, t) in parts {
        let mut found = None;
        for (j, rep) in bnt.iter().enumerate() {
            if rep.bond != t.bond {
                continue;
            }
            if let GaugeResult::Gauge(g) = find_gauge_normal(rep, &t) {
                found = Some((j, g));
                break;
            }
        }
        match found {
            Some((j, g)) => blocks.push(CanonicalBlock {
                weight: C::from_polar(w / scale, g.phase),
                gauge: g.x,
                gauge_inv: g.x_inv,
                bnt_index: j,
            }),
            None => {
                blocks.push(CanonicalBlock { weight: cr(w / scale), gauge: eye(t.bond), gauge_inv: eye(t.bond), bnt_index: bnt.len() });
                bnt.push(t);
            }
        }
    }
    Ok(CanonicalDecomposition { d: a.d, blocks, bnt, blocking, scale })
}

#[derive(Clone, Debug)]
pub struct CfiiForm {
    pub tensor: MpvTensor,
    pub bnt: Vec<MpvTensor>,
    pub lambdas: Vec<Mat>,
    pub weights: Vec<(usize, C)>,
    pub scale: f64,
    pub blocking: usize,
}

/// Trace-preserving gauge of a normal tensor with diagonal right fixed point.
pub fn cfii_block(a: &MpvTensor) -> Result<(MpvTensor, Mat)> {
    let r = spectral_radius_of(a);
    let an = a.scaled(cr(1.0 / r.sqrt()));
    let left = left_fixed_point(&an);
    let vals = crate::linalg::eigvalsh(&left);
    let lmax = vals.last().copied().unwrap_or(0.0);
    if vals.first().copied().unwrap_or(0.0) <= 1e-12 * lmax {
        return Err(Error::Numerical { what: "left fixed point not full rank".into(), residual: vals[0] });
    }
    let y = herm_fn(&left, |x| x.max(0.0).sqrt());
    let yi = herm_fn(&left, |x| 1.0 / x.max(1e-300).sqrt());
    let tp = an.conjugated(&y, &yi);
    let lam = right_fixed_point(&tp);
    let (lv, w) = crate::linalg::eigh(&lam);
    if lv[0] <= 1e-12 * lv[lv.len() - 1] {
        return Err(Error::Numerical { what: "right fixed point not full rank".into(), residual: lv[0] });
    }
    let out = tp.conjugated(&w.adjoint(), &w);
    let tr: f64 = lv.iter().sum();
    let lam = Mat::from_diagonal(&nalgebra::DVector::from_iterator(lv.len(), lv.iter().rev().map(|&x| cr(x / tr))));
    // order fixed-point weights descending
    let perm: Vec<usize> = (0..lv.len()).rev().collect();
    let p = Mat::from_fn(lv.len(), lv.len(), |i, j| if perm[i] == j { ONE } else { ZERO });
    let out = out.conjugated(&p, &p.transpose());
    Ok((out, lam))
}

pub fn to_cfii(a: &MpvTensor) -> Result<CfiiForm> {
    cfii_of(&canonical_form(a)?)
}

pub fn cfii_of(dec: &CanonicalDecomposition) -> Result<CfiiForm> {
    let mut bnt = Vec::new();
    let mut lambdas = Vec::new();
    for (j, b) in dec.bnt.iter().enumerate() {
        let (t, l) = cfii_block(b).map_err(|e| Error::Numerical { what: format!("CFII of block {j}: {e}"), residual: 0.0 })?;
        bnt.push(t);
        lambdas.push(l);
    }
    let weights: Vec<(usize, C)> = dec.blocks.iter().map(|b| (b.bnt_index, b.weight)).collect();
    let parts: Vec<MpvTensor> = weights.iter().map(|&(j, w)| bnt[j].scaled(w)).collect();
    let tensor = if parts.is_empty() { MpvTensor::from_fn(dec.d, 1, |_, _, _| ZERO) } else { direct_sum(&parts)? };
    Ok(CfiiForm { tensor, bnt, lambdas, weights, scale: dec.scale, blocking: dec.blocking })
}

/// Sum of `Σ_i A^{i†} A^i - 1` and `E(Λ) - Λ` residuals.
pub fn cfii_residuals(a: &MpvTensor, lam: &Mat) -> (f64, f64) {
    let mut tp = -eye(a.bond);
    let mut fp = -lam.clone();
    for m in &a.mats {
        tp += m.adjoint() * m;
        fp += m * lam * m.adjoint();
    }
    (fro(&tp), fro(&fp))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Equal,
    Proportional { factor: C },
    Inequivalent,
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub g_a: usize,
    pub g_b: usize,
    pub matches: Vec<(usize, usize, GaugeWitness)>,
    pub weights_match: bool,
    pub verdict: Verdict,
}

pub fn fundamental_theorem_check(a: &MpvTensor, b: &MpvTensor) -> Result<EquivalenceReport> {
    let mut da = canonical_form(a)?;
    let mut db = canonical_form(b)?;
    if da.blocking != db.blocking {
        let l = lcm(da.blocking, db.blocking);
        da = canonical_form(&block(a, l)?)?;
        db = canonical_form(&block(b, l)?)?;
    }
    let (ga, gb) = (da.g(), db.g());
    let mut matches = Vec::new();
    let mut used = vec![false; gb];
    for (j, aj) in da.bnt.iter().enumerate() {
        for (k, bk) in db.bnt.iter().enumerate() {
            if used[k] || aj.bond != bk.bond {
                continue;
            }
            if let GaugeResult::Gauge(w) = find_gauge_normal(aj, bk) {
                used[k] = true;
                matches.push((j, k, w));
                break;
            }
        }
    }
    let mut report = EquivalenceReport { g_a: ga, g_b: gb, matches, weights_match: false, verdict: Verdict::Inequivalent };
    if ga != gb || report.matches.len() != ga {
        return Ok(report);
    }
    // weights of B re-expressed on A's basis elements: μ_b e^{iφ}
    let sets: Vec<(Vec<C>, Vec<C>)> = report
        .matches
        .iter()
        .map(|(j, k, w)| {
            let wa: Vec<C> = da.weights_of(*j).iter().map(|z| z * da.scale).collect();
            let ph = C::from_polar(w.scale, w.phase);
            let wb: Vec<C> = db.weights_of(*k).iter().map(|z| z * db.scale * ph).collect();
            (wa, wb)
        })
        .collect();
    if sets.iter().all(|(x, y)| match_power_sums(x, y, x.len().max(y.len()))) {
        report.weights_match = true;
        report.verdict = Verdict::Equal;
        return Ok(report);
    }
    // common factor c with {μ_a} = c {μ_b e^{iφ}}
    let (x0, y0) = &sets[0];
    for cand in y0 {
        if cand.norm() == 0.0 {
            continue;
        }
        let c = x0[0] / cand;
        if sets.iter().all(|(x, y)| {
            let ys: Vec<C> = y.iter().map(|z| z * c).collect();
            match_power_sums(x, &ys, x.len().max(ys.len()))
        }) {
            report.weights_match = true;
            report.verdict = Verdict::Proportional { factor: c };
            return Ok(report);
        }
    }
    Ok(report)
}

fn multiset_equal_direct(a: &[C], b: &[C], tol: f64) -> bool {
    let scale = a.iter().chain(b).map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let a: Vec<C> = a.iter().copied().filter(|z| z.norm() > tol * scale).collect();
    let b: Vec<C> = b.iter().copied().filter(|z| z.norm() > tol * scale).collect();
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for x in &a {
        let best = (0..b.len()).filter(|&k| !used[k]).min_by(|&p, &q| (b[p] - x).norm().partial_cmp(&(b[q] - x).norm()).unwrap());
        match best {
            Some(k) if (b[k] - x).norm() <= 1e3 * tol * scale => used[k] = true,
            _ => return false,
        }
    }
    true
}

fn power_sums_equal(a: &[C], b: &[C], nmax: usize, tol: f64) -> bool {
    for n in 1..=nmax.max(1) {
        let pa: C = a.iter().map(|z| z.powu(n as u32)).sum();
        let pb: C = b.iter().map(|z| z.powu(n as u32)).sum();
        let s: f64 = a.iter().chain(b).map(|z| z.norm().powi(n as i32)).sum::<f64>().max(1e-300);
        if (pa - pb).norm() > 1e3 * tol * s {
            return false;
        }
    }
    true
}

/// Multiset equality of nonzero elements, checked directly and through power sums.
pub fn match_power_sums(a: &[C], b: &[C], nmax: usize) -> bool {
    let direct = multiset_equal_direct(a, b, 1e-9);
    let sums = power_sums_equal(a, b, nmax.max(a.len()).max(b.len()), 1e-9);
    direct && sums
}

/// Smallest `L` for which the BNT direct sum spans `⊕_j M_{D_j}`, and the
/// canonical-form tensor blocked `L` times.
pub fn to_block_injective(a: &MpvTensor) -> Result<(MpvTensor, usize)> {
    let dec = canonical_form(a)?;
    let l = block_injectivity_length(&dec)?;
    let cf = dec.reassemble();
    Ok((block(&cf, l)?, l))
}

pub fn block_injectivity_length(dec: &CanonicalDecomposition) -> Result<usize> {
    if dec.bnt.is_empty() {
        return Err(Error::Precondition("zero tensor".into()));
    }
    let sum = direct_sum(&dec.bnt)?;
    let target: usize = dec.bnt.iter().map(|b| b.bond * b.bond).sum();
    let dmax = sum.bond;
    let cap = 3 * dmax.pow(5);
    // products of a block-diagonal family stay block diagonal; test against the block algebra
    let k = sum.bond;
    let mut cur: Vec<Mat> = vec![eye(k)];
    for l in 1..=cap {
        let mut span = Span::new(k * k);
        let mut next = Vec::new();
        for w in &cur {
            for m in &sum.mats {
                if span.add(&vec_rows(&(w * m))) {
                    next.push(unvec_rows(span.basis.last().unwrap(), k, k));
                }
            }
        }
        if span.len() >= target {
            return Ok(l);
        }
        cur = next;
        if l > 4 * k * k + 8 {
            break;
        }
    }
    Err(Error::Numerical { what: "not block-injective within bound".into(), residual: 0.0 })
}

/// Kronecker helper for tests and callers building products of tensors.
pub fn tensor_product(a: &MpvTensor, b: &MpvTensor) -> MpvTensor {
    let mut mats = Vec::with_capacity(a.d * b.d);
    for x in &a.mats {
        for y in &b.mats {
            mats.push(kron(x, y));
        }
    }
    MpvTensor { d: a.d * b.d, bond: a.bond * b.bond, mats }
}

pub fn svd_rank_one(m: &Mat) -> (f64, f64) {
    let (_, s, _) = svd(m);
    (s.first().copied().unwrap_or(0.0), s.get(1).copied().unwrap_or(0.0))
}
