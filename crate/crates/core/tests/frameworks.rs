mod common;

use common::{arimoto_direct, hayashi_direct, shannon_cond_direct};
use kn_entropy::frameworks::{
    check_ccv, framework_cond_entropy, to_eavg, to_eavg_with, Aggregator, CoreFn, EntropyFramework,
};
use kn_entropy::kn_mean::MonotoneFn;
use kn_entropy::measure::Measure;
use kn_entropy::prob::{rng_from_seed, sample_joint};
use kn_entropy::properties::{check_cre, check_lemma1, posterior_dpi_hypothesis, CLOSED_FORM_TOL};
use kn_entropy::vulnerability::{GainFn, VulnSpec};

#[test]
fn renyi_frameworks_match_direct_formulas() {
    let mut rng = rng_from_seed(21);
    for a in [0.3, 0.5, 2.0, 3.5] {
        let h = EntropyFramework::hayashi(a).unwrap();
        let r = EntropyFramework::arimoto(a).unwrap();
        for _ in 0..20 {
            let j = sample_joint(&mut rng, 3, 4);
            let hv = framework_cond_entropy(&h, &j).unwrap();
            let av = framework_cond_entropy(&r, &j).unwrap();
            assert!((hv - hayashi_direct(&j, a)).abs() < 1e-12, "alpha {a}");
            assert!((av - arimoto_direct(&j, a)).abs() < 1e-12, "alpha {a}");
        }
    }
    let j = sample_joint(&mut rng, 4, 2);
    let s = framework_cond_entropy(&EntropyFramework::shannon(), &j).unwrap();
    assert!((s - shannon_cond_direct(&j)).abs() < 1e-12);
}

#[test]
fn framework_text_round_trips() {
    for text in [
        "framework(eta=affine(1,0), core=shannon, agg=epknavg(exp))",
        "framework(eta=log, core=pnorm-power(0.5), agg=eavg)",
        "framework(eta=affine(1,0), core=hct(2), agg=egm)",
    ] {
        let fw = EntropyFramework::parse(text).unwrap();
        assert_eq!(EntropyFramework::parse(&fw.to_string()).unwrap(), fw);
    }
    assert!(EntropyFramework::parse("framework(eta=negate, core=shannon)").is_err());
    assert!(EntropyFramework::parse("framework(core=shannon, extra=1)").is_err());
}

#[test]
fn concavification_of_arimoto_passes_its_check() {
    for a in [0.5, 2.0] {
        let c = to_eavg(&EntropyFramework::arimoto(a).unwrap()).unwrap();
        assert!(c.warning.is_none(), "alpha {a}: {:?}", c.warning);
        assert_eq!(*c.framework.aggregator(), Aggregator::Eavg);
    }
}

#[test]
fn concavification_warns_on_convex_core() {
    let fw = EntropyFramework::new(
        MonotoneFn::identity(),
        CoreFn::mapped(MonotoneFn::affine(5.0, 0.0).unwrap(), CoreFn::Shannon),
        Aggregator::Epknavg(MonotoneFn::Exp),
    )
    .unwrap();
    let c = to_eavg_with(&fw, 2000, 0).unwrap();
    assert!(c.warning.is_some());
    assert!(!c.check.passed);
    // the value identity holds regardless
    let mut rng = rng_from_seed(22);
    let j = sample_joint(&mut rng, 3, 3);
    let a = framework_cond_entropy(&fw, &j).unwrap();
    let b = framework_cond_entropy(&c.framework, &j).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn ccv_verdicts_of_standard_cores() {
    for core in ["shannon", "hct(0.5)", "hct(2)", "map(negate, pnorm-power(2))", "pnorm-power(0.5)"] {
        let r = check_ccv(&CoreFn::parse(core).unwrap(), 2000, 3).unwrap();
        assert!(r.passed, "{core}: worst {}", r.worst_violation);
    }
    let r = check_ccv(&CoreFn::parse("pnorm-power(2)").unwrap(), 2000, 3).unwrap();
    assert!(!r.passed && r.witness.is_some());
}

#[test]
fn egm_with_positive_core_is_a_cre_candidate() {
    let fw = EntropyFramework::new(MonotoneFn::identity(), CoreFn::Shannon, Aggregator::Egm).unwrap();
    let r = check_cre(&Measure::Framework(fw), 300, 4, CLOSED_FORM_TOL).unwrap();
    assert!(r.passed(), "{}", r.table());
}

#[test]
fn posterior_entropy_is_its_lemma_framework() {
    let specs = [
        VulnSpec::new(MonotoneFn::Log, MonotoneFn::identity(), GainFn::SoftZeroOne),
        VulnSpec::new(MonotoneFn::Log, MonotoneFn::Exp, GainFn::SoftZeroOne),
        VulnSpec::new(MonotoneFn::Log, MonotoneFn::affine(-2.0, 3.0).unwrap(), GainFn::SoftZeroOne),
    ];
    for spec in &specs {
        let r = check_lemma1(spec, 100, 5).unwrap();
        assert!(r.passed(), "{}", r.table());
        assert!(posterior_dpi_hypothesis(spec, 500, 5).unwrap().holds);
    }
}
