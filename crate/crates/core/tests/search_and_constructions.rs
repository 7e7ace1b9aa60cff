use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regretforge::adversary::{
    adversarial_search, adversarial_search_with_threads, construct_extraction_curve, construct_no_production_curve,
    optimal_k_no_production, optimal_mu_f, random_binary_technology, SearchConfig,
};
use regretforge::firm::{firm_best_response, worst_case_equilibrium};
use regretforge::io::{parse_technology_json, serialize_technology};
use regretforge::regret::regret;
use regretforge::{Params, Regulation};

fn p2() -> Params {
    Params::new(2.0, 1.0).unwrap()
}

/// `alpha exp(-1/alpha) ybar`, the worst case with no floor.
fn laissez_faire_value(alpha: f64) -> f64 {
    alpha * (-1.0 / alpha).exp()
}

#[test]
fn constructions_converge_toward_their_closed_forms() {
    let p = p2();
    let l = 1.0 / 3.0;
    let r = Regulation::mpr(l).unwrap();
    let target = 4.0 / 3.0 * (-0.5f64).exp();
    let k = optimal_k_no_production(l, 1.0).unwrap();
    let mu = optimal_mu_f(&p, 1.0);
    let np = |n| regret(&construct_no_production_curve(l, 1.0, k, n).unwrap(), &r, &p).unwrap().regret;
    let ex = |n| regret(&construct_extraction_curve(l, 1.0, mu, n).unwrap(), &r, &p).unwrap().regret;
    for f in [&np as &dyn Fn(usize) -> f64, &ex] {
        let (a, b) = (f(1000), f(2000));
        assert!((target - b).abs() <= (target - a).abs() + 1e-4, "{a} {b} {target}");
        assert!((b - target).abs() / target < 0.01);
    }
}

#[test]
fn constructed_technologies_have_their_defining_equilibria() {
    let p = p2();
    for l in [0.0, 0.2, 1.0 / 3.0, 0.45] {
        let r = Regulation::mpr(l).unwrap();
        let k = optimal_k_no_production(l, 1.0).unwrap();
        let t = construct_no_production_curve(l, 1.0, k, 300).unwrap();
        assert!(!firm_best_response(&t, &r).unwrap().participated, "ell {l}");
        let t = construct_extraction_curve(l, 1.0, optimal_mu_f(&p, 1.0), 300).unwrap();
        let eq = worst_case_equilibrium(&t, &r, &p).unwrap();
        assert_eq!(eq.action_index, Some(0));
        assert!(eq.worker_surplus.abs() < 1e-9);
    }
}

#[test]
fn search_reaches_known_worst_cases() {
    let p = p2();
    let cfg = SearchConfig::standard(&p, 3, 2000, 10);
    let all = adversarial_search(&Regulation::All, &p, &cfg).unwrap().regret;
    let target = laissez_faire_value(2.0);
    assert!((all - target).abs() / target < 0.01, "{all} vs {target}");
    assert!(all <= target + 1e-6);
    let half = adversarial_search(&Regulation::mpr(0.5).unwrap(), &p, &cfg).unwrap().regret;
    assert!((half - 1.0).abs() < 0.01, "{half}");
}

#[test]
fn search_is_independent_of_thread_count() {
    let p = p2();
    let r = Regulation::mpr(0.25).unwrap();
    let cfg = SearchConfig::standard(&p, 99, 1500, 8);
    let a = adversarial_search_with_threads(&r, &p, &cfg, 1).unwrap();
    let b = adversarial_search_with_threads(&r, &p, &cfg, 4).unwrap();
    assert_eq!(a.regret, b.regret);
    assert_eq!(a.candidate_index, b.candidate_index);
    assert_eq!(serialize_technology(&a.technology), serialize_technology(&b.technology));
}

#[test]
fn random_technologies_are_reproducible_and_bounded() {
    let p = p2();
    let mut cfg = SearchConfig::standard(&p, 42, 1, 12);
    let draw = |cfg: &SearchConfig| random_binary_technology(cfg, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
    assert_eq!(draw(&cfg), draw(&cfg));
    for s in 0..200 {
        let t = random_binary_technology(&cfg, &mut ChaCha8Rng::seed_from_u64(s)).unwrap();
        assert!(t.means().iter().all(|&m| m <= p.ybar() + 1e-12));
        assert!(parse_technology_json(&serialize_technology(&t)).unwrap() == t);
    }
    cfg.k_range = (0.0, 0.0);
    for s in 0..20 {
        assert_eq!(random_binary_technology(&cfg, &mut ChaCha8Rng::seed_from_u64(s)).unwrap().k(), 0.0);
    }
}
