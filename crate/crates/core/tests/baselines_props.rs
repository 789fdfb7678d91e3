//! Reference mechanisms and how they differ from the proposed one.

use ecmarket::case::{bundled_case, random_batch_case, ComparisonReport};
use ecmarket::mechanism::Clearing;
use ecmarket::verification::check_outcome_dispatch_following;
use ecmarket::{run_mechanism, run_t1, run_t2, run_traditional, Market, Mechanism, T2Options};

fn market(name: &str) -> Market {
    Market::new(&bundled_case(name).unwrap()).unwrap()
}

#[test]
fn t1_subsidy_is_the_negative_carbon_tax() {
    let m = market("simple");
    let o = run_t1(&m).unwrap();
    let tax = m.case.kappa * m.emissions(&o.p);
    assert!((o.subsidy() + tax).abs() <= 1e-9 * tax);
    assert!((m.case.display_scale * o.subsidy() + 107_520.0).abs() < 1e-6);
    for seed in (0..40).step_by(2) {
        let m = Market::new(&random_batch_case(seed)).unwrap();
        let o = run_t1(&m).unwrap();
        let tax = m.case.kappa * m.emissions(&o.p);
        assert!((o.subsidy() + tax).abs() <= 1e-9 * tax.max(1.0), "seed {seed}");
    }
}

#[test]
fn t2_misses_the_optimum_on_the_congested_case() {
    let m = market("mesh5");
    let o_star = Clearing::new(&m).unwrap().optimal_welfare();
    let t2 = run_t2(&m, &T2Options::default()).unwrap();
    assert!(t2.welfare < o_star - 1e-6, "{} vs {o_star}", t2.welfare);
    assert!(!check_outcome_dispatch_following(&t2, &m.case, o_star).passed);
    assert!(t2.notes.is_empty(), "{:?}", t2.notes);
}

#[test]
fn t2_charges_loads_their_traced_carbon_on_the_simple_system() {
    let m = market("simple");
    let t2 = run_t2(&m, &T2Options::default()).unwrap();
    let trad = run_traditional(&m).unwrap();
    assert_eq!(t2.p, trad.p);
    let avg = m.emissions(&t2.p) / t2.p.iter().sum::<f64>();
    for (lp, tp) in t2.load_prices.iter().zip(&trad.load_prices) {
        assert!((lp - tp - m.case.kappa * avg).abs() < 1e-12);
    }
}

#[test]
fn zero_emission_collapses_three_mechanisms() {
    let mut case = bundled_case("simple").unwrap();
    case.generators.iter_mut().for_each(|g| g.emission = 0.0);
    let m = Market::new(&case).unwrap();
    let outcomes: Vec<_> = [Mechanism::Traditional, Mechanism::T1, Mechanism::Proposed]
        .iter()
        .map(|&mech| run_mechanism(&m, mech).unwrap())
        .collect();
    let report = ComparisonReport::new(&case, &outcomes);
    let first = &report.rows[0];
    for row in &report.rows[1..] {
        for (a, b) in [
            (row.generator_net_profit, first.generator_net_profit),
            (row.load_net_profit, first.load_net_profit),
            (row.generator_revenue, first.generator_revenue),
            (row.load_payment, first.load_payment),
            (row.carbon_tax, first.carbon_tax),
            (row.subsidy, first.subsidy),
            (row.social_welfare, first.social_welfare),
        ] {
            assert!((a - b).abs() < 1e-6, "{}: {a} vs {b}", row.mechanism);
        }
    }
}

#[test]
fn random_batch_clears_under_every_mechanism() {
    for seed in 0..100 {
        let m = Market::new(&random_batch_case(seed)).unwrap();
        for mech in Mechanism::ALL {
            let o = run_mechanism(&m, mech).unwrap_or_else(|e| panic!("seed {seed} {mech}: {e}"));
            assert!(m.primal_violation(&o.p, &o.d) <= 1e-6, "seed {seed} {mech}");
            assert!((o.subsidy() - o.breakdown.total()).abs() <= 1e-6 * o.generator_revenue().max(1.0));
        }
    }
}

#[test]
fn relaxing_line_limits_never_lowers_welfare() {
    let base = bundled_case("mesh5").unwrap();
    let mut last = f64::NEG_INFINITY;
    for k in 0..=5 {
        let factor = 0.8 + 0.1 * k as f64;
        let m = Market::new(&base.with_scaled_capacities(factor)).unwrap();
        let o_star = Clearing::new(&m).unwrap().optimal_welfare();
        let tol = 1e-7 * o_star.abs().max(1.0);
        for mech in [Mechanism::Proposed, Mechanism::T1] {
            let w = run_mechanism(&m, mech).unwrap().welfare;
            assert!((w - o_star).abs() <= tol, "{mech} at {factor}: {w} vs {o_star}");
        }
        assert!(o_star >= last - tol);
        last = o_star;
    }
}

#[test]
fn copper_plate_ignores_capacity_scaling() {
    let base = bundled_case("simple").unwrap();
    let w = |f: f64| run_t1(&Market::new(&base.with_scaled_capacities(f)).unwrap()).unwrap().welfare;
    assert_eq!(w(0.8), w(1.3));
}
