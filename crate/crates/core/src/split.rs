//! Split measurement and the Hoeffding-bound split decision.
//!
//! Candidates are ranked by *split quality*,
//! `Σ_j L_j² / |L| + Σ_j R_j² / |R|`. At a fixed leaf the gini reduction of a
//! candidate is `quality / |S| + gini(S) - 1`, an increasing affine function
//! of quality, so only the winner and runner-up ever need the full gain.

use serde::{Deserialize, Serialize};

use crate::leaf::{ClassDistPair, LeafElement, SplitPoint};

/// Gini impurity `1 - Σ p_j²`; zero for an empty count vector.
pub fn gini(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

fn side_quality(side: &[f64]) -> f64 {
    let size: f64 = side.iter().sum();
    if size <= 0.0 {
        return 0.0;
    }
    side.iter().map(|c| c * c).sum::<f64>() / size
}

/// `Σ_j L_j² / |L| + Σ_j R_j² / |R|`, an empty side contributing zero.
pub fn split_quality(pair: &ClassDistPair) -> f64 {
    side_quality(&pair.left) + side_quality(&pair.right)
}

/// Weighted gini reduction of a partition of `total`.
pub fn gini_reduction(total: &[f64], pair: &ClassDistPair) -> f64 {
    let n: f64 = total.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    let nl: f64 = pair.left.iter().sum();
    let nr: f64 = pair.right.iter().sum();
    gini(total) - nl / n * gini(&pair.left) - nr / n * gini(&pair.right)
}

/// Gini reduction recovered from a split quality: `quality / n + gini - 1`.
pub fn gain_from_quality(quality: f64, n: f64, total_gini: f64) -> f64 {
    quality / n + total_gini - 1.0
}

/// `ε = sqrt(R² ln(1/δ) / 2n)`.
pub fn hoeffding_bound(range: f64, delta: f64, n: u64) -> f64 {
    (range * range * (1.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub attribute: usize,
    pub split_point: SplitPoint,
    pub quality: f64,
    /// Gini reduction; filled in for the best and second-best candidates.
    pub full_gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionReason {
    GainExceedsBound,
    TieBelowTau,
    NotTaken,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitDecision {
    pub taken: bool,
    pub best: Option<SplitCandidate>,
    pub second_best: Option<SplitCandidate>,
    pub epsilon: f64,
    pub reason: DecisionReason,
}

/// Parameters of a split trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialParams {
    pub delta: f64,
    pub tau: f64,
    pub range: f64,
    pub split_points: usize,
}

impl From<&crate::config::TreeConfig> for TrialParams {
    fn from(c: &crate::config::TreeConfig) -> Self {
        TrialParams {
            delta: c.delta,
            tau: c.tau,
            range: c.range,
            split_points: c.split_points,
        }
    }
}

// Gains at or below this are treated as no improvement.
const MIN_GAIN: f64 = 1e-12;

/// The Hoeffding test on two gains: split when the gap beats `ε`, or when
/// `ε` has shrunk below `τ`. A best gain that is not positive never splits.
pub fn decide(g_best: f64, g_second: f64, epsilon: f64, tau: f64) -> DecisionReason {
    if g_best <= MIN_GAIN {
        DecisionReason::NotTaken
    } else if g_best - g_second > epsilon {
        DecisionReason::GainExceedsBound
    } else if epsilon < tau {
        DecisionReason::TieBelowTau
    } else {
        DecisionReason::NotTaken
    }
}

/// Best candidate of every attribute that has one, in attribute order.
pub fn best_per_attribute(el: &LeafElement, split_points: usize) -> Vec<SplitCandidate> {
    let layout = el.layout();
    let mut out = Vec::new();
    for attr in 0..layout.attribute_count() {
        let pairs: Vec<ClassDistPair> = if layout.is_numeric(attr) {
            el.split_points(attr, split_points)
                .into_iter()
                .map(|pt| el.deduce_partitions(attr, pt))
                .collect()
        } else {
            let card = layout.cardinality(attr).unwrap_or(0);
            (0..card).map(|v| el.categorical_partitions(attr, v)).collect()
        };
        let mut best: Option<SplitCandidate> = None;
        for pair in &pairs {
            let quality = split_quality(pair);
            // Strict comparison keeps the earliest (smallest) point on ties.
            if best.is_none_or(|b| quality > b.quality) {
                best = Some(SplitCandidate {
                    attribute: attr,
                    split_point: pair.split_point,
                    quality,
                    full_gain: f64::NAN,
                });
            }
        }
        out.extend(best);
    }
    out
}

/// Runs a split trial on the statistics of one leaf.
pub fn evaluate_split_trial(el: &LeafElement, params: &TrialParams) -> SplitDecision {
    let n = el.n_f();
    let epsilon = hoeffding_bound(params.range, params.delta, n.max(1));
    let not_taken = SplitDecision {
        taken: false,
        best: None,
        second_best: None,
        epsilon,
        reason: DecisionReason::NotTaken,
    };
    let occupied = el.class_counts().iter().filter(|&&c| c > 0).count();
    if n == 0 || occupied < 2 {
        return not_taken;
    }

    let mut ranked = best_per_attribute(el, params.split_points);
    if ranked.is_empty() {
        return not_taken;
    }
    // Stable sort: equal qualities keep the lower attribute first.
    ranked.sort_by(|a, b| b.quality.total_cmp(&a.quality));

    let totals: Vec<f64> = el.class_counts().iter().map(|&c| c as f64).collect();
    let total_gini = gini(&totals);
    let with_gain = |mut c: SplitCandidate| {
        c.full_gain = gain_from_quality(c.quality, n as f64, total_gini);
        c
    };
    let best = with_gain(ranked[0]);
    let second = ranked.get(1).copied().map(with_gain);
    let g_second = second.map_or(0.0, |c| c.full_gain);
    let reason = decide(best.full_gain, g_second, epsilon, params.tau);
    SplitDecision {
        taken: reason != DecisionReason::NotTaken,
        best: Some(best),
        second_best: second,
        epsilon,
        reason,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TreeConfig;
    use crate::leaf::ElementLayout;
    use crate::schema::{AttributeSpec, DatasetSchema, Sample};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn pair(left: &[f64], right: &[f64]) -> ClassDistPair {
        ClassDistPair {
            left: left.to_vec(),
            right: right.to_vec(),
            split_point: SplitPoint::Threshold(0.0),
        }
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[4.0, 4.0]), 0.5);
        assert_eq!(gini(&[8.0, 0.0]), 0.0);
        assert_eq!(gini(&[3.0, 1.0]), 0.375);
        assert_eq!(gini(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn quality_examples() {
        assert_eq!(split_quality(&pair(&[3.0, 1.0], &[1.0, 3.0])), 5.0);
        assert_eq!(split_quality(&pair(&[0.0, 0.0], &[4.0, 4.0])), 4.0);
        // Halving a pure node: quality equals Σ n_j² / n.
        assert_eq!(split_quality(&pair(&[3.0, 0.0], &[3.0, 0.0])), 36.0 / 6.0);
    }

    #[test]
    fn reduction_examples() {
        let total = [4.0, 4.0];
        let p = pair(&[3.0, 1.0], &[1.0, 3.0]);
        assert!((gini_reduction(&total, &p) - 0.125).abs() < 1e-15);
        assert!((gain_from_quality(5.0, 8.0, 0.5) - 0.125).abs() < 1e-15);
        assert_eq!(gini_reduction(&total, &pair(&[4.0, 4.0], &[0.0, 0.0])), 0.0);
        assert_eq!(gini_reduction(&[6.0, 0.0], &pair(&[2.0, 0.0], &[4.0, 0.0])), 0.0);
    }

    #[test]
    fn hoeffding_examples() {
        // sqrt(ln(1000) / 400) and sqrt(ln(1000) / 2), evaluated directly.
        let e200 = hoeffding_bound(1.0, 1e-3, 200);
        assert!((e200 - (1000f64.ln() / 400.0).sqrt()).abs() < 1e-15);
        assert!((e200 - 0.131_413).abs() < 1e-5);
        assert!((hoeffding_bound(1.0, 1e-3, 1) - 1.858_46).abs() < 1e-5);
        assert!((hoeffding_bound(1.0, 1e-3, 800) * 2.0 - e200).abs() < 1e-15);
    }

    #[test]
    fn decision_rule() {
        assert_eq!(decide(0.3, 0.1, 0.1, 0.05), DecisionReason::GainExceedsBound);
        assert_eq!(decide(0.3, 0.29, 0.04, 0.05), DecisionReason::TieBelowTau);
        assert_eq!(decide(0.3, 0.29, 0.06, 0.05), DecisionReason::NotTaken);
        assert_eq!(decide(0.0, 0.0, 0.01, 0.05), DecisionReason::NotTaken);
    }

    fn leaf(attrs: Vec<AttributeSpec>, config: &TreeConfig) -> LeafElement {
        let schema = DatasetSchema::new(attrs, 2).unwrap();
        LeafElement::new(Arc::new(ElementLayout::new(&schema, config)))
    }

    #[test]
    fn informative_attribute_wins() {
        let config = TreeConfig::default();
        let mut el = leaf(
            vec![AttributeSpec::numeric("a", -1.0, 1.0), AttributeSpec::numeric("b", -1.0, 1.0)],
            &config,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let label = rng.random_range(0..2usize);
            let a = if label == 0 { rng.random_range(-1.0..-0.1) } else { rng.random_range(0.1..1.0) };
            let b = rng.random_range(-1.0..1.0);
            el.observe(&Sample::new(vec![a, b], label));
        }
        let d = evaluate_split_trial(&el, &TrialParams::from(&config));
        assert!(d.taken);
        assert_eq!(d.reason, DecisionReason::GainExceedsBound);
        let best = d.best.unwrap();
        assert_eq!(best.attribute, 0);
        let second = d.second_best.unwrap();
        assert!(best.full_gain - second.full_gain > d.epsilon);
        assert!((d.epsilon - hoeffding_bound(1.0, 1e-3, 1000)).abs() < 1e-15);
    }

    #[test]
    fn constant_attributes_give_no_candidates() {
        let config = TreeConfig::default();
        let mut el = leaf(vec![AttributeSpec::numeric("a", -1.0, 1.0)], &config);
        for i in 0..400 {
            el.observe(&Sample::new(vec![0.25], i % 2));
        }
        let d = evaluate_split_trial(&el, &TrialParams::from(&config));
        assert!(!d.taken);
        assert_eq!(d.reason, DecisionReason::NotTaken);
        assert!(d.best.is_none());
        assert!(d.epsilon > 0.0);
    }

    #[test]
    fn duplicated_attribute_splits_on_tie_rule() {
        let config = TreeConfig::default();
        let mut el = leaf(
            vec![AttributeSpec::numeric("a", -1.0, 1.0), AttributeSpec::numeric("a2", -1.0, 1.0)],
            &config,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // ln(1000) / (2 · 0.05²) ≈ 1381.6, so ε < τ from 1382 samples on.
        for _ in 0..1400 {
            let label = rng.random_range(0..2usize);
            let centre = if label == 0 { -0.3 } else { 0.3 };
            let a: f64 = centre + rng.random_range(-0.6..0.6);
            el.observe(&Sample::new(vec![a, a], label));
        }
        let d = evaluate_split_trial(&el, &TrialParams::from(&config));
        assert!(d.epsilon < config.tau);
        assert!(d.taken);
        assert_eq!(d.reason, DecisionReason::TieBelowTau);
        assert_eq!(d.best.unwrap().attribute, 0, "ties go to the lower index");
        assert_eq!(d.best.unwrap().quality, d.second_best.unwrap().quality);
    }

    #[test]
    fn pure_leaf_never_splits() {
        let config = TreeConfig::default();
        let mut el = leaf(vec![AttributeSpec::numeric("a", -1.0, 1.0)], &config);
        for i in 0..5000 {
            el.observe(&Sample::new(vec![(i % 100) as f64 / 100.0], 1));
        }
        let d = evaluate_split_trial(&el, &TrialParams::from(&config));
        assert!(!d.taken);
    }

    #[test]
    fn single_splittable_attribute_compares_against_zero() {
        let config = TreeConfig::default();
        let mut el = leaf(
            vec![AttributeSpec::numeric("a", -1.0, 1.0), AttributeSpec::numeric("k", -1.0, 1.0)],
            &config,
        );
        for i in 0..1000 {
            let label = i % 2;
            el.observe(&Sample::new(vec![if label == 0 { -0.5 } else { 0.5 }, 0.0], label));
        }
        let d = evaluate_split_trial(&el, &TrialParams::from(&config));
        assert!(d.second_best.is_none());
        assert!(d.taken);
        assert_eq!(d.reason, DecisionReason::GainExceedsBound);
    }

    proptest! {
        #[test]
        fn reduction_is_nonnegative_and_matches_quality_form(
            left in prop::collection::vec(0u32..50, 2..5),
            extra in prop::collection::vec(0u32..50, 5),
        ) {
            let left: Vec<f64> = left.iter().map(|&v| v as f64).collect();
            let right: Vec<f64> = extra[..left.len()].iter().map(|&v| v as f64).collect();
            let total: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
            let n: f64 = total.iter().sum();
            prop_assume!(n > 0.0);
            let p = pair(&left, &right);
            let g = gini_reduction(&total, &p);
            prop_assert!(g >= -1e-12);
            prop_assert!((g - gain_from_quality(split_quality(&p), n, gini(&total))).abs() <= 1e-9);
        }

        #[test]
        fn bound_is_monotone(n in 1u64..1_000_000, r in 0.1f64..4.0, d in 1e-9f64..0.5) {
            prop_assert!(hoeffding_bound(r, d, n + 1) < hoeffding_bound(r, d, n));
            prop_assert!(hoeffding_bound(r * 1.5, d, n) > hoeffding_bound(r, d, n));
            prop_assert!(hoeffding_bound(r, d / 2.0, n) > hoeffding_bound(r, d, n));
        }

        #[test]
        fn taken_stays_taken_with_more_samples(gb in 0.0f64..1.0, gs in 0.0f64..1.0, n in 1u64..100_000, more in 1u64..100_000) {
            let e1 = hoeffding_bound(1.0, 1e-3, n);
            let e2 = hoeffding_bound(1.0, 1e-3, n + more);
            if decide(gb, gs, e1, 0.05) != DecisionReason::NotTaken {
                prop_assert!(decide(gb, gs, e2, 0.05) != DecisionReason::NotTaken);
            }
        }
    }
}
