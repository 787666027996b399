use proptest::prelude::*;

use setlab::approx::{gamma, left_shift, lse_max, nu, PhiSpec, ShiftedPhi};
use setlab::janossy::{janossy_pool, sorted_eval};
use setlab::nnet::{Activation, DeepSetsModel};
use setlab::sets::{build_face_pair, canonicalize, f_star, on_face, Face, SetInput, SimplexPoint};
use setlab::sumdec::{
    power_sum_decode, power_sum_encode, varsize_decode, varsize_encode, VarSizeCodec,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![8 => -1.0..=1.0f64, 1 => Just(1.0), 1 => Just(-1.0), 1 => Just(0.0)]
}

fn set(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(unit(), 1..=max)
}

fn simplex(max: usize) -> impl Strategy<Value = Vec<f64>> {
    set(max).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    })
}

fn shuffled(v: Vec<f64>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    Just(v.clone())
        .prop_shuffle()
        .prop_map(move |p| (v.clone(), p))
}

fn encoder(n: usize, seed: u64) -> PhiSpec {
    PhiSpec::random_piecewise_linear(n, 9, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn f_star_ignores_order((a, b) in set(8).prop_flat_map(shuffled)) {
        prop_assert_eq!(f_star(&SetInput::new(a).unwrap()).to_bits(), f_star(&SetInput::new(b).unwrap()).to_bits());
    }

    #[test]
    fn f_star_two_elements(a in unit(), b in unit()) {
        let v = f_star(&SetInput::new(vec![a, b]).unwrap());
        prop_assert!((v - ((a - b).abs() - 1.0)).abs() <= 1e-15);
    }

    #[test]
    fn canonicalize_idempotent(v in set(8)) {
        let once = canonicalize(&SetInput::new(v).unwrap());
        let twice = canonicalize(&SetInput::new(once.coords().to_vec()).unwrap());
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn face_pairs_have_gap_two(z in simplex(7)) {
        let (plus, minus) = build_face_pair(&SimplexPoint::new(z).unwrap()).unwrap();
        prop_assert!(on_face(plus.coords(), Face::Plus, 0.0));
        prop_assert!(on_face(minus.coords(), Face::Minus, 0.0));
        prop_assert_eq!(f_star(&SetInput::new(plus.coords().to_vec()).unwrap()), 1.0);
        prop_assert_eq!(f_star(&SetInput::new(minus.coords().to_vec()).unwrap()), -1.0);
    }

    #[test]
    fn power_sums_round_trip(v in set(8)) {
        let x = SetInput::new(v).unwrap();
        let back = power_sum_decode(&power_sum_encode(&x).unwrap(), x.len()).unwrap();
        for (a, b) in back.coords().iter().zip(canonicalize(&x).coords()) {
            prop_assert!((a - b).abs() <= 1e-6, "{:?} vs {:?}", back.coords(), x.sorted());
        }
    }

    #[test]
    fn power_sums_round_trip_with_repeats(pool in prop::collection::vec(-1.0..=1.0f64, 1..=3), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..=8)) {
        let v: Vec<f64> = picks.iter().map(|i| pool[i.index(pool.len())]).collect();
        let x = SetInput::new(v).unwrap();
        let back = power_sum_decode(&power_sum_encode(&x).unwrap(), x.len()).unwrap();
        for (a, b) in back.coords().iter().zip(canonicalize(&x).coords()) {
            prop_assert!((a - b).abs() <= 1e-6, "{:?} vs {:?}", back.coords(), x.sorted());
        }
    }

    #[test]
    fn power_sums_ignore_order((a, b) in set(8).prop_flat_map(shuffled)) {
        let ea = power_sum_encode(&SetInput::new(a).unwrap()).unwrap();
        let eb = power_sum_encode(&SetInput::new(b).unwrap()).unwrap();
        prop_assert_eq!(ea, eb);
    }

    #[test]
    fn varsize_round_trip(m_max in 1usize..=6, v in prop::collection::vec(unit(), 0..=6)) {
        let v: Vec<f64> = v.into_iter().take(m_max).collect();
        let codec = VarSizeCodec::new(m_max).unwrap();
        let back = varsize_decode(&varsize_encode(&v, &codec).unwrap(), &codec).unwrap();
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(back.dim(), sorted.len());
        for (a, b) in back.coords().iter().zip(&sorted) {
            prop_assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn lse_between_max_and_bound(v in set(8), a in 0.5..=50.0f64) {
        let m = v.len() as f64;
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s = lse_max(&SetInput::new(v).unwrap(), a).unwrap();
        prop_assert!(s >= top - 1e-12 && s <= top + m.ln() / a + 1e-12);
    }

    #[test]
    fn nu_lands_in_simplex_and_interleaves(x in set(6)) {
        let z = nu(&x).unwrap();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let w = nu(&neg).unwrap();
        let c = z.coords();
        prop_assert!(c.windows(2).all(|p| p[0] >= p[1]) && c[0] <= 1.0 && *c.last().unwrap() >= -1.0);
        for j in 0..c.len() - 1 {
            prop_assert!(c[j] >= w.coords()[j + 1]);
        }
    }

    #[test]
    fn gamma_odd_on_cube_surface(mut x in set(6), face in any::<prop::sample::Index>(), up in any::<bool>(), seed in 0u64..64) {
        let n = x.len();
        x[face.index(n)] = if up { 1.0 } else { -1.0 };
        let phi = encoder(n, seed);
        let g = ShiftedPhi::new(&phi);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = g.gamma(nu(&x).unwrap().coords());
        let b = g.gamma(nu(&neg).unwrap().coords());
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p + q).abs() <= 1e-9);
        }
    }

    #[test]
    fn gamma_constant_on_surface_verticals(mut x in set(5), t in -1.0..=1.0f64, face in any::<prop::sample::Index>(), seed in 0u64..64) {
        let k = face.index(x.len());
        x[k] = -1.0;
        x.push(-1.0);
        let n = x.len();
        let phi = encoder(n, seed);
        let g = ShiftedPhi::new(&phi);
        let base = g.gamma(nu(&x).unwrap().coords());
        x[n - 1] = t;
        let moved = g.gamma(nu(&x).unwrap().coords());
        for (p, q) in base.iter().zip(&moved) {
            prop_assert!((p - q).abs() <= 1e-9);
        }
    }

    #[test]
    fn left_shift_negates_gamma(rest in simplex(5), seed in 0u64..64) {
        let mut z = vec![1.0];
        z.extend(rest);
        let n = z.len();
        let phi = encoder(n, seed);
        let p = SimplexPoint::new(z).unwrap();
        let a = gamma(&p, &phi).unwrap();
        let b = gamma(&left_shift(&p).unwrap(), &phi).unwrap();
        for (u, v) in a.coords().iter().zip(b.coords()) {
            prop_assert!((u + v).abs() <= 1e-12);
        }
    }

    #[test]
    fn first_element_pooling_is_unary(v in prop::collection::vec(unit(), 3..=6), w in -2.0..=2.0f64) {
        let x = SetInput::new(v).unwrap();
        let phi = move |t: &[f64]| vec![(w * t[0]).sin(), t[0]];
        let rho = |z: &[f64]| z[0] * z[1];
        let base = janossy_pool(&x, 1, phi, rho).unwrap();
        for k in 2..=3 {
            prop_assert_eq!(janossy_pool(&x, k, phi, rho).unwrap().to_bits(), base.to_bits());
        }
    }

    #[test]
    fn pooling_ignores_order((a, b) in prop::collection::vec(unit(), 2..=6).prop_flat_map(shuffled), k in 1usize..=2) {
        let g = |t: &[f64]| t[0] - 2.0 * t[t.len() - 1] * t[0];
        let (xa, xb) = (SetInput::new(a).unwrap(), SetInput::new(b).unwrap());
        let pa = janossy_pool(&xa, k, |t| vec![g(t)], |z| z[0]).unwrap();
        let pb = janossy_pool(&xb, k, |t| vec![g(t)], |z| z[0]).unwrap();
        prop_assert!((pa - pb).abs() <= 1e-12);
        prop_assert_eq!(sorted_eval(&xa, g).to_bits(), sorted_eval(&xb, g).to_bits());
    }

    #[test]
    fn deep_sets_ignore_order((a, b) in set(6).prop_flat_map(shuffled), seed in 0u64..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = DeepSetsModel::random(3, &[5], &[5], Activation::Tanh, &mut rng).unwrap();
        prop_assert_eq!(model.eval_slice(&a).to_bits(), model.eval_slice(&b).to_bits());
    }
}

#[test]
fn exact_eval_max_on_fine_grid() {
    for m in 1..=3 {
        for point in setlab::nnet::canonical_grid(m, 51) {
            let x = SetInput::new(point.clone()).unwrap();
            let v = setlab::sumdec::exact_eval(|z: &SimplexPoint| z.coords()[0], &x).unwrap();
            assert!((v - point[0]).abs() <= 1e-6, "{point:?} -> {v}");
        }
    }
}

#[test]
fn power_sums_separate_distant_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    use rand::Rng;
    for m in 1..=6 {
        for _ in 0..2000 {
            let a: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let (ca, cb) = (
                canonicalize(&SetInput::new(a).unwrap()),
                canonicalize(&SetInput::new(b).unwrap()),
            );
            if ca
                .coords()
                .iter()
                .zip(cb.coords())
                .all(|(p, q)| (p - q).abs() < 1e-3)
            {
                continue;
            }
            let ea = power_sum_encode(&SetInput::new(ca.coords().to_vec()).unwrap()).unwrap();
            let eb = power_sum_encode(&SetInput::new(cb.coords().to_vec()).unwrap()).unwrap();
            let d = ea
                .coords()
                .iter()
                .zip(eb.coords())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            assert!(d >= 1e-9, "{:?} {:?}", ca.coords(), cb.coords());
        }
    }
}
