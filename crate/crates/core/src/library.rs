//! Built-in example tensors.

use crate::error::{Error, Result};
use crate::linalg::{cr, kron, zeros, Mat, ONE, ZERO};
use crate::tensor::{MpdoTensor, MpvTensor};

pub enum Example {
    Mpv(MpvTensor),
    Mpdo(MpdoTensor),
}

pub const NAMES: [&str; 11] = [
    "ghz",
    "product",
    "xx-periodic",
    "zcl-example-3-6",
    "aklt",
    "bell-chain",
    "max-mixed",
    "toric-boundary",
    "zcl-no-sal",
    "sal-no-zcl",
    "fibonacci-vacuum",
];

/// Short description stored in serialized metadata.
pub fn citation(name: &str) -> &'static str {
    match name {
        "ghz" => "GHZ tensor, two locally orthogonal blocks; RFP",
        "product" => "D=1 product tensor; RFP",
        "xx-periodic" => "2-periodic tensor; not normal, peripheral spectrum {1,-1}",
        "zcl-example-3-6" => "CID without local orthogonality; not an RFP",
        "aklt" => "AKLT state; normal, injective after blocking 2, not an RFP",
        "bell-chain" => "entangled-pair chain; RFP with Lambda = 1/2",
        "max-mixed" => "maximally mixed MPDO; RFP",
        "toric-boundary" => "toric code boundary 1 + sigma_z^N; ZCL and SAL, not simple",
        "zcl-no-sal" => "entangled pairs with local sigma_x channel; ZCL but not SAL",
        "sal-no-zcl" => "classical two-label eta family; no ZCL",
        "fibonacci-vacuum" => "Fibonacci vacuum boundary tensor; rank 3,7,18,47",
        _ => "",
    }
}

pub fn example(name: &str, p: Option<f64>) -> Result<Example> {
    Ok(match name {
        "ghz" => Example::Mpv(ghz()),
        "product" => Example::Mpv(product()),
        "xx-periodic" => Example::Mpv(xx_periodic()),
        "zcl-example-3-6" => Example::Mpv(zcl_example()),
        "aklt" => Example::Mpv(aklt()),
        "bell-chain" => Example::Mpv(bell_chain()),
        "max-mixed" => Example::Mpdo(max_mixed(2)),
        "toric-boundary" => Example::Mpdo(toric_boundary()),
        "zcl-no-sal" => {
            let p = p.unwrap_or(0.25);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Precondition(format!("p = {p} outside [0, 1]")));
            }
            Example::Mpdo(zcl_no_sal(p))
        }
        "sal-no-zcl" => Example::Mpdo(sal_no_zcl()),
        "fibonacci-vacuum" => Example::Mpdo(fibonacci_vacuum()),
        _ => return Err(Error::Precondition(format!("unknown example '{name}'"))),
    })
}

fn diag(v: &[f64]) -> Mat {
    Mat::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&x| cr(x))))
}

fn real(r: usize, c: usize, v: &[f64]) -> Mat {
    Mat::from_row_iterator(r, c, v.iter().map(|&x| cr(x)))
}

pub fn ghz() -> MpvTensor {
    MpvTensor::new(vec![diag(&[1.0, 0.0]), diag(&[0.0, 1.0])]).unwrap()
}

pub fn product() -> MpvTensor {
    MpvTensor::new(vec![Mat::from_element(1, 1, ONE), Mat::from_element(1, 1, ONE)]).unwrap()
}

pub fn xx_periodic() -> MpvTensor {
    MpvTensor::new(vec![real(2, 2, &[0.0, 1.0, 0.0, 0.0]), real(2, 2, &[0.0, 0.0, 1.0, 0.0])]).unwrap()
}

pub fn zcl_example() -> MpvTensor {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    MpvTensor::new(vec![diag(&[1.0, s]), diag(&[0.0, s])]).unwrap()
}

pub fn aklt() -> MpvTensor {
    let a = (2.0f64 / 3.0).sqrt();
    let b = (1.0f64 / 3.0).sqrt();
    MpvTensor::new(vec![
        real(2, 2, &[0.0, a, 0.0, 0.0]),
        real(2, 2, &[-b, 0.0, 0.0, b]),
        real(2, 2, &[0.0, 0.0, -a, 0.0]),
    ])
    .unwrap()
}

/// `A^{(mn)}_{ab} = δ_{ma} δ_{nb} / √2`, physical index `m * 2 + n`.
pub fn bell_chain() -> MpvTensor {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    MpvTensor::from_fn(4, 2, |i, a, b| if i / 2 == a && i % 2 == b { cr(s) } else { ZERO })
}

pub fn max_mixed(d: usize) -> MpdoTensor {
    MpdoTensor::from_fn(d, 1, |i, j, _, _| if i == j { ONE } else { ZERO })
}

pub fn toric_boundary() -> MpdoTensor {
    MpdoTensor::from_fn(2, 2, |i, j, a, b| {
        if i != j || a != b {
            ZERO
        } else if i == 1 && a == 1 {
            -ONE
        } else {
            ONE
        }
    })
}

/// Entangled pairs between neighbouring sites followed by the local channel
/// `X -> p (σx⊗σx) X (σx⊗σx) + (1-p) X` on each site's two qubits.
pub fn zcl_no_sal(p: f64) -> MpdoTensor {
    let x = real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let xx = kron(&x, &x);
    let ket = |l: usize, r: usize| {
        let mut v = zeros(4, 1);
        v[(l * 2 + r, 0)] = ONE;
        v
    };
    let mut ops = Vec::with_capacity(256);
    for a in 0..4 {
        for b in 0..4 {
            let (al, alp) = (a / 2, a % 2);
            let (be, bep) = (b / 2, b % 2);
            let o = ket(al, be) * ket(alp, bep).adjoint() * cr(0.5);
            let c = &xx * &o * &xx * cr(p) + o * cr(1.0 - p);
            ops.push(c);
        }
    }
    MpdoTensor::from_ops(4, 4, &ops)
}

/// Two qubits per site forced equal to a label `k_n`; neighbouring labels are
/// coupled by `c = [[1, 1/2], [1/2, 1]]`.
pub fn sal_no_zcl() -> MpdoTensor {
    let c = [[1.0, 0.5], [0.5, 1.0]];
    eta_chain_tensor(&[(1, 1), (1, 1)], &|k, h| Mat::from_element(1, 1, cr(c[k][h])), None)
}

/// MPDO tensor generating `⊕_{k} ⊗_n η_{k_n,k_{n+1}}` for blocks `η_{k,h}` on
/// `H_r^k ⊗ H_l^h`. The site space is `⊕_k H_l^k ⊗ H_r^k`, optionally rotated by
/// the isometry `u` into a larger physical space.
pub fn eta_chain_tensor(dims: &[(usize, usize)], eta: &dyn Fn(usize, usize) -> Mat, u: Option<&Mat>) -> MpdoTensor {
    let nk = dims.len();
    let rtot: usize = dims.iter().map(|x| x.1).sum();
    let ltot: usize = dims.iter().map(|x| x.0).sum();
    let roff: Vec<usize> = dims.iter().scan(0, |s, x| { let o = *s; *s += x.1; Some(o) }).collect();
    let loff: Vec<usize> = dims.iter().scan(0, |s, x| { let o = *s; *s += x.0; Some(o) }).collect();
    // big operator on H_R ⊗ H_L with η_{k,h} on the (k,h) block
    let mut big = zeros(rtot * ltot, rtot * ltot);
    for k in 0..nk {
        for h in 0..nk {
            let e = eta(k, h);
            let (rk, lh) = (dims[k].1, dims[h].0);
            for x in 0..rk * lh {
                for y in 0..rk * lh {
                    let gx = (roff[k] + x / lh) * ltot + loff[h] + x % lh;
                    let gy = (roff[k] + y / lh) * ltot + loff[h] + y % lh;
                    big[(gx, gy)] = e[(x, y)];
                }
            }
        }
    }
    let (rs, ls) = operator_schmidt(&big, rtot, ltot);
    let bond = rs.len();
    let site: usize = dims.iter().map(|x| x.0 * x.1).sum();
    let soff: Vec<usize> = dims.iter().scan(0, |s, x| { let o = *s; *s += x.0 * x.1; Some(o) }).collect();
    let mut ops = Vec::with_capacity(bond * bond);
    for a in 0..bond {
        for b in 0..bond {
            let mut op = zeros(site, site);
            for k in 0..nk {
                let (lk, rk) = dims[k];
                let l = ls[a].view((loff[k], loff[k]), (lk, lk)).into_owned();
                let r = rs[b].view((roff[k], roff[k]), (rk, rk)).into_owned();
                op.view_mut((soff[k], soff[k]), (lk * rk, lk * rk)).copy_from(&kron(&l, &r));
            }
            ops.push(match u {
                Some(u) => u * op * u.adjoint(),
                None => op,
            });
        }
    }
    let d = u.map(|u| u.nrows()).unwrap_or(site);
    MpdoTensor::from_ops(d, bond, &ops)
}

/// `x = Σ_s a_s ⊗ b_s` with linearly independent factors.
pub fn operator_schmidt(x: &Mat, da: usize, db: usize) -> (Vec<Mat>, Vec<Mat>) {
    // realign: rows (i,i') of A, columns (j,j') of B
    let r = Mat::from_fn(da * da, db * db, |p, q| {
        let (i, ip) = (p / da, p % da);
        let (j, jp) = (q / db, q % db);
        x[(i * db + j, ip * db + jp)]
    });
    let (u, s, v) = crate::linalg::svd(&r);
    let s0 = s.first().copied().unwrap_or(0.0);
    let mut av = Vec::new();
    let mut bv = Vec::new();
    for (k, &sk) in s.iter().enumerate() {
        if sk <= 1e-12 * s0 {
            break;
        }
        let sq = cr(sk.sqrt());
        av.push(Mat::from_fn(da, da, |i, ip| u[(i * da + ip, k)] * sq));
        bv.push(Mat::from_fn(db, db, |j, jp| v[(j * db + jp, k)].conj() * sq));
    }
    (av, bv)
}

/// Diagonal three-qubit tensor `A^{ijk}_{ab} = δ_{ia} δ_{kb} N_{ijk}`.
pub fn fibonacci_vacuum() -> MpdoTensor {
    let allowed = |i: usize, j: usize, k: usize| (i == 0) as usize + (j == 0) as usize + (k == 0) as usize != 2;
    MpdoTensor::from_fn(8, 2, |p, q, a, b| {
        let (i, j, k) = (p >> 2, (p >> 1) & 1, p & 1);
        if p == q && i == a && k == b && allowed(i, j, k) {
            ONE
        } else {
            ZERO
        }
    })
}

pub fn pauli_z() -> Mat {
    diag(&[1.0, -1.0])
}
