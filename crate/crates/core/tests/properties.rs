use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mpfp_core::canonical::{canonical_form, find_gauge, GaugeResult};
use mpfp_core::general::{fibonacci_rank_closed, fit_algebra, vertical_cf};
use mpfp_core::io::{Kind, TensorFile};
use mpfp_core::linalg::{cr, eye, random_complex, random_unitary, Mat, C};
use mpfp_core::mixed::{mutual_info_profile, trace_ancilla, validate_mpdo};
use mpfp_core::tensor::{direct_sum, inner, mat_pow, mpv_dense, transfer_map, MpdoTensor, MpvTensor};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(seed: u64, d: usize, bond: usize) -> MpvTensor {
    let mut r = rng(seed);
    MpvTensor::new((0..d).map(|_| random_complex(&mut r, bond, bond)).collect()).unwrap()
}

fn rel(x: &[C], y: &[C]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = x.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

fn entry() -> impl Strategy<Value = C> {
    (-1e3f64..1e3, -1e3f64..1e3).prop_map(|(re, im)| C::new(re, im))
}

fn tensor_file() -> impl Strategy<Value = TensorFile> {
    (prop::bool::ANY, 1usize..4, 1usize..4).prop_flat_map(|(mpdo, d, bond)| {
        let kind = if mpdo { Kind::Mpdo } else { Kind::Mpv };
        let n = TensorFile::expected_entries(kind, d, bond);
        (prop::collection::vec(entry(), n), prop::option::of("[a-z][a-z0-9-]{0,12}")).prop_map(move |(entries, name)| {
            TensorFile { kind, d, bond, entries, name, provenance: None }
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn file_round_trip(f in tensor_file()) {
        prop_assert_eq!(TensorFile::parse(&f.serialize()).unwrap(), f);
    }

    #[test]
    fn parse_never_panics(text in "(kind|d|D|entries|name|[0-9. e+-]|\n| ){0,80}") {
        let _ = TensorFile::parse(&text);
    }

    #[test]
    fn fibonacci_recurrence(n in 2usize..25) {
        let r = |k| fibonacci_rank_closed(k) as i128;
        prop_assert_eq!(r(n + 1), 3 * r(n) - r(n - 1));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transfer_matrix_gives_overlaps(seed in any::<u64>(), d in 1usize..4, bond in 1usize..4, n in 1usize..5) {
        let a = random_tensor(seed, d, bond);
        let b = random_tensor(seed ^ 0x5555, d, bond);
        let e = transfer_map(&a, &b).unwrap().matrix;
        let want = inner(&mpv_dense(&b, n).unwrap(), &mpv_dense(&a, n).unwrap());
        let got = mat_pow(&e, n).trace();
        prop_assert!((want - got).norm() <= 1e-9 * want.norm().max(1.0));
    }

    #[test]
    fn gauge_round_trip(seed in any::<u64>(), d in 2usize..4, bond in 2usize..4, phi in 0.0f64..6.28) {
        let a = random_tensor(seed, d, bond);
        let mut r = rng(seed.wrapping_add(1));
        let x = random_complex(&mut r, bond, bond) * cr(0.3) + eye(bond);
        let xi = x.clone().try_inverse().unwrap();
        let b = a.conjugated(&x, &xi).scaled(C::from_polar(1.0, phi));
        match find_gauge(&a, &b).unwrap() {
            GaugeResult::Gauge(w) => {
                let back = b.conjugated(&w.x_inv, &w.x).scaled(C::from_polar(1.0, -w.phase));
                prop_assert!(rel(&mpv_dense(&a, 3).unwrap(), &mpv_dense(&back, 3).unwrap()) < 1e-8);
                prop_assert!(w.residual < 1e-8);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn canonical_form_reassembles(seed in any::<u64>(), d in 2usize..4, b1 in 1usize..3, b2 in 1usize..3) {
        let a = direct_sum(&[random_tensor(seed, d, b1), random_tensor(seed ^ 0xabc, d, b2)]).unwrap();
        let dec = canonical_form(&a).unwrap();
        let back = dec.reassemble();
        for n in 1..=4 {
            prop_assert!(rel(&mpv_dense(&a, n).unwrap(), &mpv_dense(&back, n).unwrap()) < 1e-8);
        }
    }

    #[test]
    fn purified_mpdos_obey_area_law(seed in any::<u64>(), anc in 1usize..3, bond in 1usize..3, n in 3usize..7) {
        let a = random_tensor(seed, 2 * anc, bond);
        let m = trace_ancilla(&a, 2, anc);
        prop_assert!(validate_mpdo(&m, &[n]).unwrap().psd);
        let p = mutual_info_profile(&m, n).unwrap();
        for (l, w) in p.mutual_info.windows(2).enumerate() {
            prop_assert!(w[0] <= w[1] + 1e-9, "I_{} > I_{}", l + 1, l + 2);
        }
        prop_assert!(p.mutual_info.iter().all(|&i| i <= p.bound + 1e-9));
    }

    #[test]
    fn group_algebras_are_associative(seed in any::<u64>(), order in 2usize..4) {
        let mut r = rng(seed);
        let v = random_unitary(&mut r, 3);
        let w = C::from_polar(1.0, std::f64::consts::TAU / order as f64);
        let clock = Mat::from_diagonal(&nalgebra::DVector::from_fn(3, |i, _| w.powu(i as u32)));
        let ops: Vec<Mat> = (0..order).map(|g| &v * clock.pow(g as u32) * v.adjoint()).collect();
        let m = MpdoTensor::from_fn(3, order, |i, j, a, b| if a == b { ops[a][(i, j)] } else { C::new(0.0, 0.0) });
        let s = fit_algebra(&vertical_cf(&m).unwrap(), 4).unwrap();
        prop_assert!(s.associativity_residual < 1e-9);
        prop_assert!(s.integer_coefficients);
        prop_assert!(s.prediction_residual < 1e-9);
    }
}
