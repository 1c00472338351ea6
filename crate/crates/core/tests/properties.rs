use proptest::prelude::*;

use infoflow::credit::{digital_decomposition, price_bond};
use infoflow::process::{conditional_density, conditional_probs};
use infoflow::rates::kernel::RationalModelSpec;
use infoflow::rates::ScenarioTree;
use infoflow::zfactor::{build_reduction, evaluate_reduction, joint_from_x_probs, x_probs_from_joint, JointDistribution};
use infoflow::{ContinuousDensity, DiscountCurve, DiscretePayoff, InformationProcessSpec};

/// Sorted distinct levels and a strictly positive prior on them.
fn payoff() -> impl Strategy<Value = DiscretePayoff> {
    prop::collection::vec((0.0..2.0f64, 0.05..1.0f64), 2..6).prop_filter_map("distinct levels", |mut pairs| {
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.windows(2).any(|w| w[1].0 - w[0].0 < 1e-3) {
            return None;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let (levels, probs) = pairs.into_iter().map(|(h, w)| (h, w / total)).unzip();
        DiscretePayoff::new(levels, probs).ok()
    })
}

/// `(sigma, T, t, xi)` with `t < T` and `xi` around its typical range.
fn market() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.01..2.0f64, 0.5..10.0f64, 0.0..0.99f64, -3.0..3.0f64).prop_map(|(s, horizon, frac, z)| {
        let t = frac * horizon;
        (s, horizon, t, s * t + z * (t * (horizon - t) / horizon).sqrt() * 3.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn posterior_is_a_distribution(payoff in payoff(), (sigma, horizon, t, xi) in market()) {
        let spec = InformationProcessSpec::discrete(sigma, horizon, payoff.clone()).unwrap();
        let w = conditional_probs(&payoff, &spec, t, xi).unwrap();
        prop_assert!(w.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn bond_price_stays_within_payoff_bounds(
        payoff in payoff(),
        (sigma, horizon, t, xi) in market(),
        rate in 0.0..0.1f64,
    ) {
        let spec = InformationProcessSpec::discrete(sigma, horizon, payoff.clone()).unwrap();
        let curve = DiscountCurve::flat(rate).unwrap();
        let state = price_bond(&payoff, &spec, &curve, t, xi).unwrap();
        let d = curve.forward_discount(t, horizon);
        let (lo, hi) = (payoff.levels()[0], *payoff.levels().last().unwrap());
        let slack = 1e-14 * d * hi.max(1.0);
        prop_assert!(state.price >= d * lo - slack && state.price <= d * hi + slack);
        prop_assert!(state.cond_var >= 0.0 && state.abs_vol >= 0.0);
    }

    #[test]
    fn more_information_raises_the_conditional_mean(
        payoff in payoff(),
        (sigma, horizon, t, xi) in market(),
        bump in 0.01..1.0f64,
    ) {
        prop_assume!(t > 0.0);
        let spec = InformationProcessSpec::discrete(sigma, horizon, payoff.clone()).unwrap();
        let curve = DiscountCurve::flat(0.0).unwrap();
        let lo = price_bond(&payoff, &spec, &curve, t, xi).unwrap().cond_mean;
        let hi = price_bond(&payoff, &spec, &curve, t, xi + bump).unwrap().cond_mean;
        prop_assert!(hi >= lo - 1e-14, "{lo} > {hi}");
    }

    #[test]
    fn digital_parts_rebuild_the_binary_bond(
        h0 in 0.0..0.9f64,
        p1 in 0.01..0.99f64,
        (sigma, horizon, t, xi) in market(),
    ) {
        let payoff = DiscretePayoff::binary(h0, 1.0, p1).unwrap();
        let spec = InformationProcessSpec::discrete(sigma, horizon, payoff.clone()).unwrap();
        let curve = DiscountCurve::flat(0.03).unwrap();
        let parts = digital_decomposition(&payoff, &spec, &curve, t, xi).unwrap();
        let bond = price_bond(&payoff, &spec, &curve, t, xi).unwrap().price;
        prop_assert!((parts.reconstructed - bond).abs() <= 1e-14 * bond.max(1e-300) + 1e-300);
    }

    #[test]
    fn exponential_posterior_mean_is_positive_and_increasing(
        mean in 0.2..5.0f64,
        (sigma, horizon, t, xi) in market(),
        bump in 0.05..1.0f64,
    ) {
        prop_assume!(t > 0.0);
        let prior = ContinuousDensity::exponential(mean).unwrap();
        let spec = InformationProcessSpec::continuous(sigma, horizon, prior.clone()).unwrap();
        let lo = conditional_density(&prior, &spec, t, xi).unwrap().mean().unwrap();
        let hi = conditional_density(&prior, &spec, t, xi + bump).unwrap().mean().unwrap();
        prop_assert!(lo > 0.0);
        prop_assert!(hi >= lo * (1.0 - 1e-9), "{lo} > {hi}");
    }

    #[test]
    fn reduction_round_trips(n in 1usize..6, seed in prop::collection::vec(0.01..1.0f64, 32)) {
        let weights = &seed[..1 << n];
        let total: f64 = weights.iter().sum();
        let joint = JointDistribution::new(n, weights.iter().map(|w| w / total).collect()).unwrap();
        let tree = build_reduction(n).unwrap();
        let xs = x_probs_from_joint(&joint).unwrap();
        prop_assert_eq!(xs.len(), tree.x_count());
        prop_assert!(xs.iter().all(|p| *p > 0.0 && *p < 1.0));
        let back = joint_from_x_probs(&tree, &xs).unwrap();
        for (a, b) in back.probs.iter().zip(&joint.probs) {
            prop_assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn independent_x_factors_generate_the_joint_law(
        n in 1usize..4,
        xs in prop::collection::vec(0.0..1.0f64, 7),
    ) {
        let tree = build_reduction(n).unwrap();
        let xs = &xs[..tree.x_count()];
        let mut direct = vec![0.0; 1 << n];
        for assignment in 0..1usize << tree.x_count() {
            let x: Vec<bool> = (0..tree.x_count()).map(|k| assignment >> k & 1 == 1).collect();
            let weight: f64 = x.iter().zip(xs).map(|(&b, p)| if b { *p } else { 1.0 - p }).product();
            let z = evaluate_reduction(&tree, &x).unwrap();
            let index = z.iter().fold(0usize, |acc, &b| 2 * acc + b as usize);
            direct[index] += weight;
        }
        let joint = joint_from_x_probs(&tree, xs).unwrap();
        for (a, b) in direct.iter().zip(&joint.probs) {
            prop_assert!((a - b).abs() <= 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn rational_bond_prices_lie_in_unit_interval(
        depth in 1usize..7,
        a in prop::collection::vec(0.5..0.99f64, 7),
        b in prop::collection::vec(0.5..0.99f64, 7),
        n0 in 0.1..5.0f64,
        up in 1.01..2.0f64,
        down in 0.3..0.99f64,
    ) {
        let decreasing = |r: &[f64]| {
            let mut v = vec![1.0];
            for x in &r[..depth] {
                v.push(v.last().unwrap() * x);
            }
            v
        };
        let spec = RationalModelSpec { alpha: decreasing(&a), beta: decreasing(&b), n0, up, down, dates: None };
        let model = spec.model().unwrap();
        let n = spec.martingale(&model.tree);
        for j in 1..=depth {
            for i in 0..j {
                for k in ScenarioTree::nodes(i) {
                    let p = model.bond_price(i, j, k).unwrap();
                    prop_assert!(p > 0.0 && p < 1.0, "P_{i}{j} = {p}");
                    let closed = spec.bond_price(i, j, n[k]);
                    prop_assert!((p - closed).abs() <= 1e-14, "{p} vs {closed}");
                }
            }
        }
    }

    #[test]
    fn forward_discounts_compose(
        steps in prop::collection::vec((0.05..3.0f64, 0.001..0.08f64), 1..6),
        t in 0.0..12.0f64,
        gap in 0.0..5.0f64,
    ) {
        let (mut times, mut factors) = (vec![0.0], vec![1.0]);
        for (dt, r) in steps {
            times.push(times.last().unwrap() + dt);
            factors.push(factors.last().unwrap() * (-r * dt).exp());
        }
        let curve = DiscountCurve::tabulated(times, factors).unwrap();
        let maturity = t + gap;
        let lhs = curve.discount(t) * curve.forward_discount(t, maturity);
        prop_assert!((lhs - curve.discount(maturity)).abs() <= 1e-14);
    }
}
