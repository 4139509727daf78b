use kn_entropy::cond_entropies::shannon_conditional;
use kn_entropy::entropies::shannon;
use kn_entropy::kn_mean::{weighted_kn_mean, MonotoneFn};
use kn_entropy::prob::{compose_markov, Channel, Dist, Joint, MarkovTriple};
use proptest::prelude::*;

fn dist(n: usize) -> impl Strategy<Value = Dist> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| Dist::from_weights(w).unwrap())
}

fn channel(n_in: usize, n_out: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(dist(n_out), n_in).prop_map(|rows| Channel::from_rows(rows).unwrap())
}

fn joint() -> impl Strategy<Value = Joint> {
    (2usize..5, 2usize..5).prop_flat_map(|(nx, ny)| {
        (dist(nx), channel(nx, ny)).prop_map(|(p, c)| Joint::new(p, c).unwrap())
    })
}

/// Maps defined on the positive reals.
fn positive_fn() -> impl Strategy<Value = MonotoneFn> {
    prop_oneof![
        Just(MonotoneFn::identity()),
        Just(MonotoneFn::Log),
        Just(MonotoneFn::Exp),
        Just(MonotoneFn::Negate),
        (0.2f64..3.0).prop_map(MonotoneFn::Power),
        (0.1f64..3.0).prop_map(MonotoneFn::QLog),
        (-3.0f64..3.0, -2.0f64..2.0)
            .prop_filter("nonzero slope", |(a, _)| a.abs() > 0.1)
            .prop_map(|(a, b)| MonotoneFn::affine(a, b).unwrap()),
    ]
}

fn values_and_weights() -> impl Strategy<Value = (Vec<f64>, Dist)> {
    (2usize..6).prop_flat_map(|n| (prop::collection::vec(0.05f64..4.0, n), dist(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mean_of_a_constant_is_the_constant(c in 0.05f64..4.0, w in dist(4), f in positive_fn()) {
        let m = weighted_kn_mean(&[c; 4], w.probs(), &f).unwrap();
        prop_assert_eq!(m, c);
    }

    #[test]
    fn mean_is_internal((v, w) in values_and_weights(), f in positive_fn()) {
        let m = weighted_kn_mean(&v, w.probs(), &f).unwrap();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= m && m <= hi);
    }

    #[test]
    fn affine_reparametrization_leaves_mean_unchanged(
        (v, w) in values_and_weights(),
        f in positive_fn(),
        a in prop_oneof![-3.0f64..-0.2, 0.2f64..3.0],
        b in -2.0f64..2.0,
    ) {
        let g = MonotoneFn::compose(MonotoneFn::affine(a, b).unwrap(), f.clone());
        let m = weighted_kn_mean(&v, w.probs(), &f).unwrap();
        let n = weighted_kn_mean(&v, w.probs(), &g).unwrap();
        prop_assert!((m - n).abs() <= 1e-9 * m.abs().max(1.0), "{} vs {}", m, n);
    }

    #[test]
    fn inverse_undoes_apply(f in positive_fn(), t in 0.05f64..4.0) {
        let s = f.apply(t).unwrap();
        let back = f.inverse(s).unwrap();
        prop_assert!((back - t).abs() <= 1e-9 * t.max(1.0), "{}: {} -> {} -> {}", f, t, s, back);
        let text = f.to_string();
        let parsed = kn_entropy::syntax::Term::parse(&text).and_then(|t| MonotoneFn::from_term(&t)).unwrap();
        prop_assert_eq!(parsed.apply(t).unwrap(), s);
    }

    #[test]
    fn markov_cascade_marginalizes_the_middle(
        (p, c1, c2) in (2usize..4, 2usize..4, 2usize..4)
            .prop_flat_map(|(x, y, z)| (dist(x), channel(x, y), channel(y, z)))
    ) {
        let t = MarkovTriple::new(p, c1.clone(), c2.clone()).unwrap();
        let (xy, xz) = compose_markov(&t).unwrap();
        for x in 0..xy.n_x() {
            for z in 0..c2.n_out() {
                let direct: f64 = (0..c1.n_out()).map(|y| xy.prob(x, y) * c2.get(y, z)).sum();
                prop_assert!((xz.prob(x, z) - direct).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn conditioning_reduces_shannon_entropy(j in joint()) {
        prop_assert!(shannon_conditional(&j) <= shannon(j.prior()) + 1e-12);
        prop_assert!(shannon_conditional(&j) >= -1e-12);
    }
}
