//! Confusion counts, binary overlap metrics and degenerate predictors.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{mismatch, Error, Result};

/// True/false positive/negative totals. Real-valued so expected counts fit.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConfusionCounts {
    pub tp: f64,
    pub fp: f64,
    pub fn_: f64,
    pub tn: f64,
}

impl ConfusionCounts {
    pub fn new(tp: f64, fp: f64, fn_: f64, tn: f64) -> Result<Self> {
        if [tp, fp, fn_, tn].iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(Error::InvalidParameter(
                "confusion counts must be finite and non-negative".into(),
            ));
        }
        Ok(Self { tp, fp, fn_, tn })
    }

    pub fn total(&self) -> f64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Relabels positives as negatives and vice versa.
    pub fn swap_classes(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

pub fn confusion_from_masks(predicted: &[bool], truth: &[bool]) -> Result<ConfusionCounts> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(mismatch(
            "confusion_from_masks",
            format!("mask lengths {} and {}", predicted.len(), truth.len()),
        ));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => c.tp += 1.0,
            (true, false) => c.fp += 1.0,
            (false, true) => c.fn_ += 1.0,
            (false, false) => c.tn += 1.0,
        }
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Predictor {
    Zeros,
    Ones,
    /// Predicts positive with probability `p`.
    Random { p: f64 },
    Custom { predicted: Vec<bool>, truth: Vec<bool> },
}

impl Predictor {
    pub const RANDOM: Predictor = Predictor::Random { p: 0.5 };

    /// The three baselines at their default settings.
    pub fn degenerate() -> [Predictor; 3] {
        [Predictor::Zeros, Predictor::Ones, Predictor::RANDOM]
    }

    pub fn name(&self) -> String {
        match self {
            Predictor::Zeros => "zeros".into(),
            Predictor::Ones => "ones".into(),
            Predictor::Random { p } if *p == 0.5 => "random".into(),
            Predictor::Random { p } => format!("random_p{p}"),
            Predictor::Custom { .. } => "custom".into(),
        }
    }
}

/// A ground truth with `ratio * total` positive vertices and a predictor.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapScenario {
    ratio: f64,
    total: f64,
    predictor: Predictor,
}

impl OverlapScenario {
    pub fn new(ratio: f64, total: f64, predictor: Predictor) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::InvalidParameter(format!("ratio {ratio} outside [0, 1]")));
        }
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidParameter(format!("total {total} must be positive")));
        }
        if let Predictor::Random { p } = predictor {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(Self {
            ratio,
            total,
            predictor,
        })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }
}

pub fn expected_confusion(s: &OverlapScenario) -> Result<ConfusionCounts> {
    let pos = s.ratio * s.total;
    let neg = (1.0 - s.ratio) * s.total;
    let p = match s.predictor {
        Predictor::Zeros => 0.0,
        Predictor::Ones => 1.0,
        Predictor::Random { p } => p,
        Predictor::Custom { .. } => {
            return Err(Error::InvalidParameter(
                "custom predictors have no expected counts; use confusion_from_masks".into(),
            ))
        }
    };
    Ok(ConfusionCounts {
        tp: p * pos,
        fp: p * neg,
        fn_: (1.0 - p) * pos,
        tn: (1.0 - p) * neg,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Accuracy,
    Precision,
    Sensitivity,
    Specificity,
    IoU,
    F1,
    BalancedAccuracy,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Sensitivity,
        Metric::Specificity,
        Metric::IoU,
        Metric::F1,
        Metric::BalancedAccuracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
            Metric::IoU => "iou",
            Metric::F1 => "f1",
            Metric::BalancedAccuracy => "balanced_accuracy",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A metric value; `degenerate` marks a zero denominator (value forced to 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricValue {
    pub value: f64,
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64) -> MetricValue {
    if den == 0.0 {
        MetricValue {
            value: 0.0,
            degenerate: true,
        }
    } else {
        MetricValue {
            value: num / den,
            degenerate: false,
        }
    }
}

pub fn metric(c: &ConfusionCounts, which: Metric) -> Result<MetricValue> {
    if c.total() == 0.0 {
        return Err(Error::EmptyCounts);
    }
    let ConfusionCounts { tp, fp, fn_, tn } = *c;
    Ok(match which {
        Metric::Accuracy => ratio(tp + tn, c.total()),
        Metric::Precision => ratio(tp, tp + fp),
        Metric::Sensitivity => ratio(tp, tp + fn_),
        Metric::Specificity => ratio(tn, tn + fp),
        Metric::IoU => ratio(tp, tp + fp + fn_),
        Metric::F1 => ratio(2.0 * tp, 2.0 * tp + fp + fn_),
        Metric::BalancedAccuracy => {
            let se = ratio(tp, tp + fn_);
            let sp = ratio(tn, tn + fp);
            MetricValue {
                value: 0.5 * (se.value + sp.value),
                degenerate: se.degenerate || sp.degenerate,
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub predictor: String,
    pub metric: Metric,
    pub value: MetricValue,
}

/// All seven metrics for each predictor at `steps` evenly spaced ratios in
/// `[0, 1]`, from expected counts. Rows are grouped by predictor, then ratio.
pub fn sweep_ratio(predictors: &[Predictor], total: f64, steps: usize) -> Result<Vec<SweepRow>> {
    if steps < 2 {
        return Err(Error::InvalidParameter(format!("steps must be >= 2, got {steps}")));
    }
    let mut rows = Vec::with_capacity(predictors.len() * steps * Metric::ALL.len());
    for pred in predictors {
        for s in 0..steps {
            let r = s as f64 / (steps - 1) as f64;
            let counts = expected_confusion(&OverlapScenario::new(r, total, pred.clone())?)?;
            for m in Metric::ALL {
                rows.push(SweepRow {
                    r,
                    predictor: pred.name(),
                    metric: m,
                    value: metric(&counts, m)?,
                });
            }
        }
    }
    Ok(rows)
}

/// Mean counts over `trials` draws. The truth has `round(ratio * total)`
/// positives; random predictions are seeded and deterministic.
pub fn monte_carlo_confusion(s: &OverlapScenario, seed: u64, trials: usize) -> Result<ConfusionCounts> {
    if s.total.fract() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs an integer total, got {}",
            s.total
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let n = s.total as usize;
    let positives = (s.ratio * s.total).round() as usize;
    let truth: Vec<bool> = (0..n).map(|i| i < positives).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = ConfusionCounts::default();
    let mut predicted = vec![false; n];
    for _ in 0..trials {
        match &s.predictor {
            Predictor::Zeros => predicted.fill(false),
            Predictor::Ones => predicted.fill(true),
            Predictor::Random { p } => predicted.iter_mut().for_each(|x| *x = rng.random_bool(*p)),
            Predictor::Custom { predicted, truth } => return confusion_from_masks(predicted, truth),
        }
        let c = confusion_from_masks(&predicted, &truth)?;
        sum.tp += c.tp;
        sum.fp += c.fp;
        sum.fn_ += c.fn_;
        sum.tn += c.tn;
    }
    let t = trials as f64;
    Ok(ConfusionCounts {
        tp: sum.tp / t,
        fp: sum.fp / t,
        fn_: sum.fn_ / t,
        tn: sum.tn / t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::collection::vec;
    use proptest::prelude::*;

    fn counts(tp: f64, fp: f64, fn_: f64, tn: f64) -> ConfusionCounts {
        ConfusionCounts::new(tp, fp, fn_, tn).unwrap()
    }

    fn scenario(r: f64, n: f64, p: Predictor) -> OverlapScenario {
        OverlapScenario::new(r, n, p).unwrap()
    }

    fn value(c: &ConfusionCounts, m: Metric) -> f64 {
        metric(c, m).unwrap().value
    }

    #[test]
    fn mask_counting() {
        let t = [true, true, false, false];
        assert_eq!(confusion_from_masks(&t, &t).unwrap(), counts(2.0, 0.0, 0.0, 2.0));
        let inv: Vec<bool> = t.iter().map(|x| !x).collect();
        let c = confusion_from_masks(&inv, &t).unwrap();
        assert_eq!((c.tp, c.tn), (0.0, 0.0));
        let c = confusion_from_masks(&[true, false, true, false], &t).unwrap();
        assert_eq!(c, counts(1.0, 1.0, 1.0, 1.0));
        assert!(confusion_from_masks(&[true], &t).is_err());
        assert!(confusion_from_masks(&[], &[]).is_err());
    }

    #[test]
    fn expected_counts_at_thirty_percent() {
        let e = |p| expected_confusion(&scenario(0.3, 1000.0, p)).unwrap();
        let close = |a: ConfusionCounts, b: ConfusionCounts| {
            [a.tp - b.tp, a.fp - b.fp, a.fn_ - b.fn_, a.tn - b.tn]
                .iter()
                .all(|d| d.abs() < 1e-9)
        };
        assert!(close(e(Predictor::Zeros), counts(0.0, 0.0, 300.0, 700.0)));
        assert!(close(e(Predictor::Ones), counts(300.0, 700.0, 0.0, 0.0)));
        assert!(close(e(Predictor::RANDOM), counts(150.0, 350.0, 150.0, 350.0)));
        let custom = Predictor::Custom {
            predicted: vec![true],
            truth: vec![true],
        };
        assert!(expected_confusion(&scenario(0.3, 1.0, custom)).is_err());
    }

    #[test]
    fn ones_iou_is_ratio() {
        let c = expected_confusion(&scenario(0.3, 1000.0, Predictor::Ones)).unwrap();
        assert!((value(&c, Metric::IoU) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn baselines_have_half_balanced_accuracy() {
        let z = expected_confusion(&scenario(0.4, 50.0, Predictor::Zeros)).unwrap();
        assert_eq!(value(&z, Metric::Sensitivity), 0.0);
        assert_eq!(value(&z, Metric::Specificity), 1.0);
        assert_eq!(value(&z, Metric::BalancedAccuracy), 0.5);
        let r = expected_confusion(&scenario(0.4, 50.0, Predictor::RANDOM)).unwrap();
        assert_eq!(value(&r, Metric::Sensitivity), 0.5);
        assert_eq!(value(&r, Metric::Specificity), 0.5);
        assert_eq!(value(&r, Metric::BalancedAccuracy), 0.5);
        assert!((value(&r, Metric::Accuracy) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_denominator_is_flagged() {
        let z = expected_confusion(&scenario(0.3, 10.0, Predictor::Zeros)).unwrap();
        let p = metric(&z, Metric::Precision).unwrap();
        assert_eq!(p, MetricValue { value: 0.0, degenerate: true });
        assert!(!metric(&z, Metric::Accuracy).unwrap().degenerate);
        assert_eq!(metric(&ConfusionCounts::default(), Metric::F1), Err(Error::EmptyCounts));
    }

    #[test]
    fn perfect_predictor_scores_one() {
        let t = [true, false, true, true, false];
        let c = confusion_from_masks(&t, &t).unwrap();
        for m in Metric::ALL {
            assert_eq!(metric(&c, m).unwrap(), MetricValue { value: 1.0, degenerate: false });
        }
    }

    #[test]
    fn sweep_shape_and_witnesses() {
        let rows = sweep_ratio(&Predictor::degenerate(), 1000.0, 101).unwrap();
        assert_eq!(rows.len(), 2121);
        for row in &rows {
            match (row.predictor.as_str(), row.metric) {
                ("zeros", Metric::Accuracy) => assert!((row.value.value - (1.0 - row.r)).abs() < 1e-12),
                ("ones", Metric::F1) => {
                    assert!((row.value.value - 2.0 * row.r / (1.0 + row.r)).abs() < 1e-12)
                }
                (_, Metric::BalancedAccuracy) if row.r > 0.0 && row.r < 1.0 => {
                    assert_eq!(row.value.value, 0.5)
                }
                _ => {}
            }
        }
        let half = rows
            .iter()
            .find(|r| r.predictor == "ones" && r.metric == Metric::F1 && r.r == 0.5)
            .unwrap();
        assert!((half.value.value - 2.0 / 3.0).abs() < 1e-15);
        assert!(sweep_ratio(&Predictor::degenerate(), 10.0, 1).is_err());
    }

    #[test]
    fn endpoints_carry_the_flag() {
        let rows = sweep_ratio(&[Predictor::Zeros], 10.0, 2).unwrap();
        let sens = rows
            .iter()
            .find(|r| r.r == 0.0 && r.metric == Metric::Sensitivity)
            .unwrap();
        assert!(sens.value.degenerate);
    }

    #[test]
    fn monte_carlo_random_converges() {
        let s = scenario(0.5, 10_000.0, Predictor::RANDOM);
        let c = monte_carlo_confusion(&s, 7, 100).unwrap();
        for x in [c.tp, c.fp, c.fn_, c.tn] {
            assert!((x - 2500.0).abs() / 2500.0 <= 0.02, "{x}");
        }
        assert_eq!(monte_carlo_confusion(&s, 7, 100).unwrap(), c);
    }

    #[test]
    fn monte_carlo_deterministic_predictors_are_exact() {
        for p in [Predictor::Zeros, Predictor::Ones] {
            let s = scenario(0.25, 400.0, p);
            assert_eq!(
                monte_carlo_confusion(&s, 1, 3).unwrap(),
                expected_confusion(&s).unwrap()
            );
        }
        let s = scenario(0.25, 400.5, Predictor::Ones);
        assert!(monte_carlo_confusion(&s, 1, 3).is_err());
    }

    #[test]
    fn scenario_validation() {
        assert!(OverlapScenario::new(1.5, 10.0, Predictor::Zeros).is_err());
        assert!(OverlapScenario::new(0.5, 0.0, Predictor::Zeros).is_err());
        assert!(OverlapScenario::new(0.5, 10.0, Predictor::Random { p: 2.0 }).is_err());
        assert!(ConfusionCounts::new(-1.0, 0.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn counts_sum_to_length(pairs in vec((any::<bool>(), any::<bool>()), 1..200)) {
            let (p, t): (Vec<bool>, Vec<bool>) = pairs.into_iter().unzip();
            let c = confusion_from_masks(&p, &t).unwrap();
            prop_assert_eq!(c.total(), p.len() as f64);
        }

        #[test]
        fn random_p_keeps_balanced_accuracy_at_half(r in 0.01..0.99f64, p in 0.0..=1.0f64, n in 1.0..1e6f64) {
            let c = expected_confusion(&scenario(r, n, Predictor::Random { p })).unwrap();
            prop_assert!((value(&c, Metric::BalancedAccuracy) - 0.5).abs() <= 1e-12);
        }

        #[test]
        fn balanced_accuracy_survives_class_swap(
            tp in 0.0..100.0f64, fp in 0.0..100.0f64, fn_ in 0.0..100.0f64, tn in 0.0..100.0f64,
        ) {
            let c = counts(tp, fp, fn_, tn);
            prop_assume!(c.total() > 0.0);
            let a = metric(&c, Metric::BalancedAccuracy).unwrap();
            let b = metric(&c.swap_classes(), Metric::BalancedAccuracy).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-12);
            prop_assert_eq!(a.degenerate, b.degenerate);
        }

        #[test]
        fn metrics_lie_in_unit_interval(
            tp in 0.0..100.0f64, fp in 0.0..100.0f64, fn_ in 0.0..100.0f64, tn in 0.0..100.0f64,
        ) {
            let c = counts(tp, fp, fn_, tn);
            prop_assume!(c.total() > 0.0);
            for m in Metric::ALL {
                let v = metric(&c, m).unwrap().value;
                prop_assert!((0.0..=1.0 + 1e-15).contains(&v));
            }
        }
    }
}
