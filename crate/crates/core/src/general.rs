//! Non-simple MPDO fixed points: per-label boundary algebra, fusion
//! coefficients, projector decomposition and the Fibonacci rank formula.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::canonical::{block_injectivity_length, canonical_form, find_gauge_normal, to_cfii, GaugeResult};
use crate::error::{Error, Result};
use crate::linalg::{cr, eig, eigvals, eye, fro, lstsq, rank, singular_values, zeros, Mat, C, ZERO};
use crate::mixed::is_zcl_mixed;
use crate::tensor::{mat_pow, mpdo_dense_with, self_transfer, transfer_map, Caps, MpdoTensor, MpvTensor};

pub const ALGEBRA_TOL: f64 = 1e-7;

/// Vertical decomposition `M ≅ ⊕_α μ_α ⊗ M_α`.
#[derive(Clone, Debug)]
pub struct VerticalCf {
    pub d: usize,
    /// Physical basis change; the identity in the horizontal-BNT reading.
    pub u: Mat,
    /// Positive multiplicity weights per label.
    pub mu: Vec<Vec<f64>>,
    pub m: Vec<f64>,
    pub bnt: Vec<MpdoTensor>,
    /// Length past which the boundary operators are linearly independent.
    pub l0: usize,
    /// `max_N ‖ρ_N(M) - Σ_α tr(μ_α^N) O_N(M_α)‖ / ‖ρ_N(M)‖` over small `N`.
    pub residual: f64,
}

impl VerticalCf {
    pub fn labels(&self) -> usize {
        self.bnt.len()
    }

    /// `Σ_k μ_{α,k}^N`.
    pub fn weight(&self, alpha: usize, n: usize) -> f64 {
        self.mu[alpha].iter().map(|x| x.powi(n as i32)).sum()
    }
}

/// `O_L(M) = tr(M ⋯ M)` as a dense operator on `L` sites.
pub fn boundary_operator(m: &MpdoTensor, l: usize) -> Result<Mat> {
    mpdo_dense_with(m, l, &Caps::default())
}

fn op_norm(x: &Mat) -> f64 {
    singular_values(x).first().copied().unwrap_or(0.0)
}

pub fn vertical_cf(m: &MpdoTensor) -> Result<VerticalCf> {
    let d = m.d;
    let dec = canonical_form(&m.mpv_view())?;
    if dec.blocking > 1 {
        return Err(Error::Precondition(format!(
            "periodic vertical structure (blocking {}); these tensors may not be blocked this way",
            dec.blocking
        )));
    }
    let l0 = block_injectivity_length(&dec).unwrap_or(1).max(1);
    let mut mu = Vec::new();
    let mut bnt = Vec::new();
    for (j, b) in dec.bnt.iter().enumerate() {
        let w = dec.weights_of(j);
        let phase = w[0] / w[0].norm();
        if w.iter().any(|x| (x / x.norm() - phase).norm() > 1e-8) {
            return Err(Error::NotApplicable(format!("label {j} carries weights with different phases")));
        }
        let rotated = MpdoTensor::from_mpv_view(d, &b.scaled(phase))?;
        let s = op_norm(&boundary_operator(&rotated, l0)?).powf(1.0 / l0 as f64);
        if s < 1e-12 {
            return Err(Error::NotApplicable(format!("label {j} has a vanishing boundary operator")));
        }
        bnt.push(rotated.scaled(cr(1.0 / s)));
        mu.push(w.iter().map(|x| x.norm() * dec.scale * s).collect::<Vec<f64>>());
    }
    let m_sum = mu.iter().map(|v| v.iter().sum()).collect();
    let mut v = VerticalCf { d, u: eye(d), mu, m: m_sum, bnt, l0, residual: 0.0 };
    let caps = Caps::default();
    for n in 1..=3 {
        let rho = match mpdo_dense_with(m, n, &caps) {
            Ok(r) => r,
            Err(_) => break,
        };
        let mut rebuilt = zeros(rho.nrows(), rho.ncols());
        for a in 0..v.labels() {
            rebuilt += boundary_operator(&v.bnt[a], n)? * cr(v.weight(a, n));
        }
        v.residual = v.residual.max(fro(&(&rho - rebuilt)) / fro(&rho).max(1e-300));
    }
    Ok(v)
}

/// `⟨O_L(X), O_L(Y)⟩` through the transfer matrix.
fn overlap(x: &MpdoTensor, y: &MpdoTensor, l: usize) -> C {
    let e = transfer_map(&y.mpv_view(), &x.mpv_view()).unwrap().matrix;
    mat_pow(&e, l).trace()
}

/// Site tensor with operators `op_α(a,b) · op_β(a',b')`.
pub fn product_tensor(x: &MpdoTensor, y: &MpdoTensor) -> MpdoTensor {
    let (dx, dy) = (x.bond, y.bond);
    let mut ops = Vec::with_capacity(dx * dx * dy * dy);
    for a in 0..dx {
        for ap in 0..dy {
            for b in 0..dx {
                for bp in 0..dy {
                    ops.push(x.op(a, b) * y.op(ap, bp));
                }
            }
        }
    }
    // ops are enumerated as ((a,a'),(b,b')) row-major
    MpdoTensor::from_ops(x.d, dx * dy, &ops)
}

#[derive(Clone, Debug)]
pub struct LevelFit {
    pub l: usize,
    /// `c[(α·G + β)·G + γ]`.
    pub c: Vec<C>,
    pub closure_residual: f64,
}

fn fit_level(v: &VerticalCf, products: &[MpdoTensor], l: usize) -> Result<LevelFit> {
    let g = v.labels();
    let gram = Mat::from_fn(g, g, |a, b| overlap(&v.bnt[a], &v.bnt[b], l));
    let inv = gram.clone().try_inverse().ok_or_else(|| Error::IllConditioned { gap: 0.0 })?;
    let svals = singular_values(&gram);
    if svals[svals.len() - 1] < 1e-10 * svals[0] {
        return Err(Error::IllConditioned { gap: svals[svals.len() - 1] / svals[0] });
    }
    let mut c = vec![ZERO; g * g * g];
    let mut worst: f64 = 0.0;
    for (ab, p) in products.iter().enumerate() {
        let rhs = Mat::from_fn(g, 1, |k, _| overlap(&v.bnt[k], p, l));
        let sol = &inv * &rhs;
        for k in 0..g {
            c[ab * g + k] = sol[(k, 0)];
        }
        let pp = overlap(p, p, l).re;
        let captured = (rhs.adjoint() * &sol)[(0, 0)].re;
        let res = (pp - captured).max(0.0).sqrt() / pp.max(1e-300).sqrt();
        worst = worst.max(res);
    }
    Ok(LevelFit { l, c, closure_residual: worst })
}

/// Distinct roots with integer multiplicities, `s_j = Σ_k n_k x_k^{l0 + j}`.
pub fn power_sum_roots(s: &[C], l0: usize) -> Result<Vec<(C, usize)>> {
    let scale = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale < 1e-10 {
        return Ok(Vec::new());
    }
    let k = s.len();
    let rows = (k + 1) / 2;
    let hankel = Mat::from_fn(rows, k + 1 - rows, |i, j| s[i + j]);
    let r = rank(&hankel, 1e-8);
    if 2 * r > k {
        return Err(Error::NotApplicable(format!("{k} samples cannot resolve {r} roots")));
    }
    let a = Mat::from_fn(k - r, r, |j, i| s[j + i]);
    let b = Mat::from_fn(k - r, 1, |j, _| s[j + r]);
    let (coef, _) = lstsq(&a, &b, 1e-12);
    let comp = Mat::from_fn(r, r, |i, j| if i + 1 == r { coef[(j, 0)] } else if j == i + 1 { C::new(1.0, 0.0) } else { ZERO });
    let roots = eigvals(&comp);
    let vand = Mat::from_fn(k, r, |j, q| roots[q].powu(j as u32));
    let sv = Mat::from_fn(k, 1, |j, _| s[j]);
    let (w, _) = lstsq(&vand, &sv, 1e-12);
    let mut out = Vec::with_capacity(r);
    for q in 0..r {
        let n = w[(q, 0)] / roots[q].powu(l0 as u32);
        let ni = n.re.round();
        if (n - cr(ni)).norm() > 1e-6 || ni < 1.0 {
            return Err(Error::NotApplicable(format!("non-integer multiplicity {n:.6} for root {:.6}", roots[q])));
        }
        out.push((roots[q], ni as usize));
    }
    out.sort_by(|x, y| y.0.re.partial_cmp(&x.0.re).unwrap());
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct FusionBlock {
    pub gamma: usize,
    pub chi: C,
}

#[derive(Clone, Debug)]
pub struct Fusion {
    pub alpha: usize,
    pub beta: usize,
    /// Gauge bringing the product tensor to block form.
    pub gauge: Mat,
    pub blocks: Vec<FusionBlock>,
}

impl Fusion {
    pub fn chi_of(&self, gamma: usize) -> Vec<C> {
        self.blocks.iter().filter(|b| b.gamma == gamma).map(|b| b.chi).collect()
    }
}

/// Decompose `M_α M_β` into the labels, returning the block weights `χ`.
pub fn fusion_isometry(v: &VerticalCf, alpha: usize, beta: usize) -> Result<Fusion> {
    let p = product_tensor(&v.bnt[alpha], &v.bnt[beta]);
    let dec = canonical_form(&p.mpv_view())?;
    if dec.blocking > 1 {
        return Err(Error::Numerical { what: format!("product ({alpha},{beta}) is periodic"), residual: dec.blocking as f64 });
    }
    let views: Vec<MpvTensor> = v.bnt.iter().map(|x| x.mpv_view()).collect();
    let mut blocks = Vec::new();
    for blk in &dec.blocks {
        let el = &dec.bnt[blk.bnt_index];
        let mut found = None;
        for (gamma, view) in views.iter().enumerate() {
            if let GaugeResult::Gauge(w) = find_gauge_normal(el, view) {
                found = Some((gamma, w));
                break;
            }
        }
        let (gamma, w) = found.ok_or_else(|| Error::Numerical {
            what: format!("product ({alpha},{beta}) has a block matching no label"),
            residual: f64::INFINITY,
        })?;
        let chi = blk.weight * dec.scale * C::from_polar(1.0, -w.phase) / w.scale;
        blocks.push(FusionBlock { gamma, chi });
    }
    Ok(Fusion { alpha, beta, gauge: dec.global_gauge(), blocks })
}

#[derive(Clone, Debug)]
pub struct AlgebraStructure {
    pub labels: usize,
    pub levels: Vec<LevelFit>,
    /// Roots with multiplicities per triple `(α·G + β)·G + γ`.
    pub chi: Vec<Vec<(C, usize)>>,
    pub prediction_level: usize,
    pub prediction_residual: f64,
    pub associativity_residual: f64,
    /// `m ∝ (Σ_{α,β} c^{(1)}_{αβγ} m_α m_β)_γ`.
    pub idempotent_residual: f64,
    pub fusion: Vec<Fusion>,
    pub fusion_residual: f64,
    pub l_independent: bool,
    pub integer_coefficients: bool,
    pub idempotent_ok: bool,
    pub chi_positive: bool,
}

impl AlgebraStructure {
    pub fn c_at(&self, chi_index: usize, l: usize) -> C {
        self.chi[chi_index].iter().map(|(x, n)| x.powu(l as u32) * cr(*n as f64)).sum()
    }

    pub fn closure_residual(&self) -> f64 {
        self.levels.iter().map(|f| f.closure_residual).fold(0.0, f64::max)
    }
}

fn chi_multiset(list: &[C]) -> Vec<C> {
    let mut v = list.to_vec();
    v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
    v
}

/// Fit the structure coefficients on `L = L₀ .. L₀+count-1` and predict `L₀+count`.
pub fn fit_algebra(v: &VerticalCf, count: usize) -> Result<AlgebraStructure> {
    let g = v.labels();
    let mut products = Vec::with_capacity(g * g);
    for a in 0..g {
        for b in 0..g {
            products.push(product_tensor(&v.bnt[a], &v.bnt[b]));
        }
    }
    let mut levels = Vec::with_capacity(count);
    for l in v.l0..v.l0 + count {
        let f = fit_level(v, &products, l)?;
        if f.closure_residual > ALGEBRA_TOL {
            return Err(Error::NotApplicable(format!("not closed: residual {:.3e} at L = {l}", f.closure_residual)));
        }
        levels.push(f);
    }
    let mut chi = Vec::with_capacity(g * g * g);
    let mut chi_positive = true;
    for t in 0..g * g * g {
        let seq: Vec<C> = levels.iter().map(|f| f.c[t]).collect();
        let roots = power_sum_roots(&seq, v.l0)?;
        if roots.iter().any(|(x, _)| x.im.abs() > 1e-8 || x.re <= 1e-8) {
            chi_positive = false;
        }
        chi.push(roots);
    }
    let pl = v.l0 + count;
    let direct = fit_level(v, &products, pl)?;
    let mut s = AlgebraStructure {
        labels: g,
        levels,
        chi,
        prediction_level: pl,
        prediction_residual: 0.0,
        associativity_residual: 0.0,
        idempotent_residual: 0.0,
        fusion: Vec::new(),
        fusion_residual: 0.0,
        l_independent: false,
        integer_coefficients: false,
        idempotent_ok: false,
        chi_positive,
    };
    s.prediction_residual = (0..g * g * g).map(|t| (s.c_at(t, pl) - direct.c[t]).norm()).fold(0.0, f64::max);
    if !chi_positive {
        let bad: Vec<String> = s
            .chi
            .iter()
            .flatten()
            .filter(|(x, _)| x.im.abs() > 1e-8 || x.re <= 1e-8)
            .map(|(x, n)| format!("{:.6}×{n}", x.re))
            .collect();
        return Err(Error::NotApplicable(format!("χ not positive ({})", bad.join(", "))));
    }
    let idx = |a: usize, b: usize, c: usize| (a * g + b) * g + c;
    for f in &s.levels {
        for a in 0..g {
            for b in 0..g {
                for c in 0..g {
                    for e in 0..g {
                        let lhs: C = (0..g).map(|dl| f.c[idx(a, b, dl)] * f.c[idx(dl, c, e)]).sum();
                        let rhs: C = (0..g).map(|dl| f.c[idx(b, c, dl)] * f.c[idx(a, dl, e)]).sum();
                        s.associativity_residual = s.associativity_residual.max((lhs - rhs).norm());
                    }
                }
            }
        }
    }
    s.l_independent = s.chi.iter().flatten().all(|(x, _)| (x - cr(1.0)).norm() < 1e-8);
    s.integer_coefficients =
        s.levels.iter().all(|f| f.c.iter().all(|z| z.im.abs() < 1e-8 && (z.re - z.re.round()).abs() < 1e-8));
    let q: Vec<f64> = (0..g)
        .map(|c| {
            let mut acc = 0.0;
            for a in 0..g {
                for b in 0..g {
                    acc += s.c_at(idx(a, b, c), 1).re * v.m[a] * v.m[b];
                }
            }
            acc
        })
        .collect();
    let qn = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mn = v.m.iter().map(|x| x * x).sum::<f64>().sqrt();
    s.idempotent_residual = if qn > 0.0 {
        (0..g).map(|c| (q[c] / qn - v.m[c] / mn).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    s.idempotent_ok = s.idempotent_residual < 1e-8;
    for a in 0..g {
        for b in 0..g {
            let f = fusion_isometry(v, a, b)?;
            for c in 0..g {
                let from_fit: Vec<C> = s.chi[idx(a, b, c)]
                    .iter()
                    .flat_map(|(x, n)| std::iter::repeat(*x).take(*n))
                    .collect();
                let from_fusion = f.chi_of(c);
                if from_fit.len() != from_fusion.len() {
                    s.fusion_residual = f64::INFINITY;
                    continue;
                }
                for (x, y) in chi_multiset(&from_fit).iter().zip(chi_multiset(&from_fusion)) {
                    s.fusion_residual = s.fusion_residual.max((x - y).norm());
                }
            }
            s.fusion.push(f);
        }
    }
    Ok(s)
}

#[derive(Clone, Debug)]
pub enum RfpMpdoVerdict {
    Rfp,
    NotRfp(String),
}

#[derive(Clone, Debug)]
pub struct RfpMpdoReport {
    pub verdict: RfpMpdoVerdict,
    pub vertical: Option<VerticalCf>,
    pub algebra: Option<AlgebraStructure>,
    /// Reported alongside; not part of the verdict.
    pub zcl: bool,
}

impl RfpMpdoReport {
    pub fn is_rfp(&self) -> bool {
        matches!(self.verdict, RfpMpdoVerdict::Rfp)
    }
}

pub const DEFAULT_FIT_LEVELS: usize = 5;

pub fn is_rfp_mpdo(m: &MpdoTensor) -> RfpMpdoReport {
    let zcl = is_zcl_mixed(m).zcl;
    let not = |why: String, vertical: Option<VerticalCf>, algebra: Option<AlgebraStructure>| RfpMpdoReport {
        verdict: RfpMpdoVerdict::NotRfp(why),
        vertical,
        algebra,
        zcl,
    };
    let v = match vertical_cf(m) {
        Ok(v) => v,
        Err(e) => return not(e.to_string(), None, None),
    };
    let s = match fit_algebra(&v, DEFAULT_FIT_LEVELS) {
        Ok(s) => s,
        Err(e) => return not(e.to_string(), Some(v), None),
    };
    let why = if !s.idempotent_ok {
        Some(format!("idempotency fails (residual {:.3e})", s.idempotent_residual))
    } else if s.fusion_residual > ALGEBRA_TOL {
        Some(format!("fusion weights disagree with the fit ({:.3e})", s.fusion_residual))
    } else if s.associativity_residual > 1e-8 {
        Some(format!("structure coefficients not associative ({:.3e})", s.associativity_residual))
    } else {
        None
    };
    match why {
        Some(w) => not(w, Some(v), Some(s)),
        None => RfpMpdoReport { verdict: RfpMpdoVerdict::Rfp, vertical: Some(v), algebra: Some(s), zcl },
    }
}

#[derive(Clone, Debug)]
pub struct ProjectorTerm {
    pub lambda: Vec<f64>,
    /// `P_i = Σ_α coefficients[α] O_N(M_α)`.
    pub coefficients: Vec<C>,
}

#[derive(Clone, Debug)]
pub struct ProjectorGibbs {
    pub terms: Vec<ProjectorTerm>,
    /// Checked sizes `N`, with `λ_i` listed per size inside each term.
    pub ns: Vec<usize>,
    pub projector_residual: f64,
    pub reconstruction_residual: f64,
    /// Local Gibbs factor; identically zero in this decomposition.
    pub hamiltonian_norm: f64,
}

/// `ρ^{(N)} = Σ_i λ_i P_i^{(N)}` with `P_i` the minimal idempotents of the label algebra.
pub fn projector_gibbs_decomposition(m: &MpdoTensor, n_check: usize, seed: u64) -> Result<ProjectorGibbs> {
    let rep = is_rfp_mpdo(m);
    let (v, s) = match (&rep.verdict, rep.vertical, rep.algebra) {
        (RfpMpdoVerdict::Rfp, Some(v), Some(s)) => (v, s),
        (RfpMpdoVerdict::NotRfp(w), _, _) => return Err(Error::NotApplicable(format!("not an RFP: {w}"))),
        _ => unreachable!(),
    };
    if !(s.l_independent && s.integer_coefficients) {
        return Err(Error::NotApplicable("structure coefficients depend on L".into()));
    }
    let g = v.labels();
    let c = &s.levels[0].c;
    let reg: Vec<Mat> = (0..g).map(|a| Mat::from_fn(g, g, |k, b| c[(a * g + b) * g + k])).collect();
    for a in 0..g {
        for b in 0..g {
            if fro(&(&reg[a] * &reg[b] - &reg[b] * &reg[a])) > 1e-9 {
                return Err(Error::NotApplicable("undetermined decomposition: label algebra is not commutative".into()));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = zeros(g, g);
    for r in &reg {
        z += r * cr(rng.gen_range(0.5..1.5));
    }
    let (_, vecs) = eig(&z);
    // characters ψ_i(α): eigenvalue of R_α on the i-th common eigenvector
    let mut psi = zeros(g, g);
    for i in 0..g {
        let x = vecs.column(i).clone_owned();
        let p = (0..g).max_by(|&a, &b| x[a].norm().partial_cmp(&x[b].norm()).unwrap()).unwrap();
        for a in 0..g {
            psi[(i, a)] = (&reg[a] * &x)[(p, 0)] / x[p];
        }
    }
    let coef = psi
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::NotApplicable("undetermined decomposition: label algebra is not semisimple".into()))?;
    let caps = Caps::default();
    let mut terms: Vec<ProjectorTerm> = (0..g)
        .map(|i| ProjectorTerm { lambda: Vec::new(), coefficients: (0..g).map(|a| coef[(i, a)]).collect() })
        .collect();
    let mut ns = Vec::new();
    let mut projector_residual: f64 = 0.0;
    let mut reconstruction_residual: f64 = 0.0;
    for n in 3..=n_check {
        let rho = match mpdo_dense_with(m, n, &caps) {
            Ok(r) => r,
            Err(_) => break,
        };
        let ops: Vec<Mat> = (0..g).map(|a| boundary_operator(&v.bnt[a], n)).collect::<Result<_>>()?;
        let mut rebuilt = zeros(rho.nrows(), rho.ncols());
        for (i, t) in terms.iter_mut().enumerate() {
            let mut p = zeros(rho.nrows(), rho.ncols());
            for a in 0..g {
                p += &ops[a] * t.coefficients[a];
            }
            projector_residual = projector_residual.max(fro(&(&p * &p - &p)) / fro(&p).max(1.0));
            let lam: C = (0..g).map(|a| psi[(i, a)] * cr(v.weight(a, n))).sum();
            if lam.im.abs() > 1e-8 {
                return Err(Error::Numerical { what: "complex projector weight".into(), residual: lam.im.abs() });
            }
            rebuilt += p * lam;
            t.lambda.push(lam.re);
        }
        reconstruction_residual = reconstruction_residual.max(fro(&(&rho - rebuilt)) / fro(&rho).max(1e-300));
        ns.push(n);
    }
    if projector_residual > 1e-8 || reconstruction_residual > 1e-8 {
        return Err(Error::Numerical {
            what: "undetermined decomposition".into(),
            residual: projector_residual.max(reconstruction_residual),
        });
    }
    Ok(ProjectorGibbs { terms, ns, projector_residual, reconstruction_residual, hamiltonian_norm: 0.0 })
}

#[derive(Clone, Debug)]
pub struct GaugeSpectral {
    pub ok: bool,
    pub eigenvalues: Vec<C>,
    pub rank: usize,
    pub rank_squared: usize,
}

/// Transfer spectrum of the CFII tensor lies in `{0, 1}` without Jordan blocks.
pub fn gauge_rfp_spectral_check(a: &MpvTensor) -> Result<GaugeSpectral> {
    let cf = to_cfii(a)?;
    let e = self_transfer(&cf.tensor);
    let eigenvalues = eigvals(&e);
    let in_set = eigenvalues.iter().all(|z| z.norm() < 1e-8 || (z - cr(1.0)).norm() < 1e-8);
    let r1 = rank(&e, 1e-9);
    let r2 = rank(&(&e * &e), 1e-9);
    Ok(GaugeSpectral { ok: in_set && r1 == r2, eigenvalues, rank: r1, rank_squared: r2 })
}

#[derive(Clone, Debug)]
pub struct FibonacciRank {
    pub n: usize,
    pub closed_form: u64,
    pub brute_force: Option<usize>,
}

/// `rank ρ^{(N)}` from the integer recurrence.
pub fn fibonacci_rank_closed(n: usize) -> u64 {
    assert!(n >= 1);
    let mut x = [1u64, 1, 1, 2];
    for _ in 1..n {
        x = [x[0] + x[1], x[0] + 2 * x[1], x[2] + x[3], x[2] + 2 * x[3]];
    }
    x[0] + x[3]
}

/// Numerical rank of `ρ^{(N)}` for a tensor with diagonal site operators.
pub fn diagonal_rank(m: &MpdoTensor, n: usize) -> Result<usize> {
    let d = m.d;
    Caps::default().check_pure(d, n)?;
    let diag_ok = (0..d).all(|i| (0..d).all(|j| i == j || (0..m.bond * m.bond).all(|x| m.mats[i * d + j][(x / m.bond, x % m.bond)] == ZERO)));
    if !diag_ok {
        return Err(Error::Precondition("site operators are not diagonal".into()));
    }
    let mut count = 0;
    let total = d.pow(n as u32);
    let mut vals = Vec::with_capacity(total);
    for cfg in 0..total {
        let mut p = eye(m.bond);
        let mut c = cfg;
        let mut digits = vec![0; n];
        for k in (0..n).rev() {
            digits[k] = c % d;
            c /= d;
        }
        for &i in &digits {
            p = p * &m.mats[i * d + i];
        }
        vals.push(p.trace().norm());
    }
    let top = vals.iter().cloned().fold(0.0, f64::max);
    for v in vals {
        if v > 1e-10 * top {
            count += 1;
        }
    }
    Ok(count)
}

pub fn fibonacci_rank(n: usize) -> FibonacciRank {
    let brute_force = if n <= 5 { diagonal_rank(&crate::library::fibonacci_vacuum(), n).ok() } else { None };
    FibonacciRank { n, closed_form: fibonacci_rank_closed(n), brute_force }
}

/// Integers `r, s ≤ bound` with `ranks[N-1] = r·s^{N-1}` for every listed `N`.
pub fn geometric_rank_fit(ranks: &[u64], bound: u64) -> Option<(u64, u64)> {
    for r in 1..=bound {
        for s in 1..=bound {
            let mut p = r;
            let mut ok = true;
            for &x in ranks {
                if p != x {
                    ok = false;
                    break;
                }
                p = p.saturating_mul(s);
            }
            if ok {
                return Some((r, s));
            }
        }
    }
    None
}
