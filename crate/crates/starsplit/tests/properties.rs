use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use starsplit::forms::approx_equal;
use starsplit::operators::{random_form, random_metric_seeded, random_mixed_form};
use starsplit::{catalog, Complex64, Form, PullbackMap};

const TOL: f64 = 1e-9;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: &Form, b: &Form) -> bool {
    approx_equal(a, b, TOL * (1.0 + a.max_abs().max(b.max_abs())))
}

fn sign(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn random_invertible(n: usize, seed: u64) -> PullbackMap {
    let mut r = rng(seed);
    let g = random_metric_seeded(n, seed).unwrap();
    let noise = random_form(n, 1, 1, &mut r);
    let a = starsplit::linalg::CMatrix::from_fn(n, n, |i, j| {
        g.matrix()[(i, j)] + noise.coeff((1 << i, 1 << j)) * 0.1
    });
    PullbackMap::new(a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn wedge_is_associative(seed in any::<u64>(), n in 2usize..=4, p in 0usize..=2, q in 0usize..=2) {
        let mut r = rng(seed);
        let a = random_form(n, p.min(n), 0, &mut r);
        let b = random_form(n, 0, q.min(n), &mut r);
        let c = random_mixed_form(n, 1, &mut r);
        prop_assert!(close(&a.wedge(&b).wedge(&c), &a.wedge(&b.wedge(&c))));
    }

    #[test]
    fn wedge_is_graded_commutative(seed in any::<u64>(), n in 2usize..=4, p in 0usize..=2, q in 0usize..=2, s in 0usize..=2, t in 0usize..=2) {
        let mut r = rng(seed);
        let (p, q, s, t) = (p.min(n), q.min(n), s.min(n), t.min(n));
        let a = random_form(n, p, q, &mut r);
        let b = random_form(n, s, t, &mut r);
        let swapped = b.wedge(&a).scale(sign((p + q) * (s + t)));
        prop_assert!(close(&a.wedge(&b), &swapped));
    }

    #[test]
    fn conjugation_is_multiplicative(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let a = random_mixed_form(n, 2, &mut r);
        let b = random_mixed_form(n, 1, &mut r);
        prop_assert!(close(&a.conjugate().conjugate(), &a));
        prop_assert!(close(&a.wedge(&b).conjugate(), &a.conjugate().wedge(&b.conjugate())));
    }

    #[test]
    fn star_squares_to_sign(seed in any::<u64>(), n in 2usize..=4, p in 0usize..=4, q in 0usize..=4) {
        let (p, q) = (p.min(n), q.min(n));
        let g = random_metric_seeded(n, seed).unwrap();
        let u = random_form(n, p, q, &mut rng(seed ^ 1));
        let twice = g.hodge_star(&g.hodge_star(&u));
        prop_assert!(close(&twice, &u.scale(sign(p + q))));
    }

    #[test]
    fn star_realizes_the_inner_product(seed in any::<u64>(), n in 2usize..=4, p in 0usize..=3, q in 0usize..=3) {
        let (p, q) = (p.min(n), q.min(n));
        let g = random_metric_seeded(n, seed).unwrap();
        let mut r = rng(seed ^ 2);
        let u = random_form(n, p, q, &mut r);
        let v = random_form(n, p, q, &mut r);
        let vol = g.omega_power(n).unwrap().top_coefficient();
        let lhs = u.wedge(&g.hodge_star(&v.conjugate())).top_coefficient();
        let rhs = g.inner(&u, &v) * vol;
        prop_assert!((lhs - rhs).norm() < TOL * (1.0 + rhs.norm()));
        prop_assert!(g.inner(&u, &u).re >= 0.0);
    }

    #[test]
    fn lefschetz_commutator_counts_degree(seed in any::<u64>(), n in 2usize..=4, p in 0usize..=4, q in 0usize..=4) {
        let (p, q) = (p.min(n), q.min(n));
        let g = random_metric_seeded(n, seed).unwrap();
        let u = random_form(n, p, q, &mut rng(seed ^ 3));
        let comm = g.lefschetz_l(&g.lefschetz_lambda(&u)).sub_form(&g.lefschetz_lambda(&g.lefschetz_l(&u)));
        let k = (p + q) as f64 - n as f64;
        prop_assert!(close(&comm, &u.scale(k)));
    }

    #[test]
    fn lefschetz_decomposition_reassembles(seed in any::<u64>(), n in 3usize..=5, p in 1usize..=2) {
        prop_assume!(2 * p <= n);
        let g = random_metric_seeded(n, seed).unwrap();
        let u = random_form(n, p, p, &mut rng(seed ^ 4));
        let pieces = g.lefschetz_decompose(&u).unwrap();
        let mut sum = Form::zero(n);
        for (r, piece) in &pieces {
            prop_assert!(g.lefschetz_lambda(piece).max_abs() < TOL * (1.0 + piece.max_abs()));
            sum = sum.add_form(&g.omega_power(*r).unwrap().wedge(piece));
        }
        prop_assert!(close(&sum, &u));
    }

    #[test]
    fn pullback_is_an_algebra_map(seed in any::<u64>(), n in 2usize..=4) {
        let phi = random_invertible(n, seed);
        let psi = random_invertible(n, seed.wrapping_add(1));
        let mut r = rng(seed ^ 5);
        let a = random_mixed_form(n, 1, &mut r);
        let b = random_mixed_form(n, 2, &mut r);
        prop_assert!(close(&phi.apply(&a.wedge(&b)), &phi.apply(&a).wedge(&phi.apply(&b))));
        let composed = phi.compose(&psi).unwrap();
        prop_assert!(close(&composed.apply(&a), &psi.apply(&phi.apply(&a))));
        let back = phi.inverse().unwrap();
        prop_assert!(close(&back.apply(&phi.apply(&b)), &b));
        let c = Complex64::new(0.3, -1.2);
        prop_assert!(close(&phi.apply(&a.scale(c)), &phi.apply(&a).scale(c)));
    }

    #[test]
    fn d_squares_to_zero_and_is_a_derivation(seed in any::<u64>(), which in 0usize..5, k in 0usize..=3, l in 0usize..=2) {
        let names = ["iwasawa3", "nakamura", "iwasawa5", "calabi_eckmann", "iwasawa_def"];
        let m = catalog::default_entry(names[which]).unwrap().manifold;
        let n = m.dim();
        let mut r = rng(seed);
        let a = random_mixed_form(n, k, &mut r);
        let b = random_mixed_form(n, l, &mut r);
        prop_assert!(m.exterior_d(&m.exterior_d(&a)).max_abs() < TOL * (1.0 + a.max_abs()));
        prop_assert!(close(&m.exterior_d(&a), &m.del(&a).add_form(&m.delbar(&a))));
        let lhs = m.exterior_d(&a.wedge(&b));
        let rhs = m.exterior_d(&a).wedge(&b).add_form(&a.wedge(&m.exterior_d(&b)).scale(sign(k)));
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn ddbar_star_rho_vanishes(seed in any::<u64>(), which in 0usize..4) {
        let names = ["iwasawa3", "nakamura", "calabi_eckmann", "iwasawa5"];
        let m = catalog::default_entry(names[which]).unwrap().manifold;
        let g = random_metric_seeded(m.dim(), seed).unwrap();
        let d = starsplit::search::pss_defect(&m, &g).unwrap();
        prop_assert!(d < 1e-9);
    }
}
