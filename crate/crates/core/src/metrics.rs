//! Multi-class evaluation: confusion matrices, per-class and aggregate
//! scores, one-vs-rest ROC/PR curves, and macro-averaged mean curves.
//!
//! All routines are pure functions generic over the scalar type. ROC AUC is
//! the trapezoid area over the threshold sweep, which equals the
//! Mann-Whitney pair statistic with ties counted 1/2; PR AUC is average
//! precision (step integration), with the trapezoid value kept alongside as
//! a secondary figure.

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictions::PredictionMatrix;

/// Number of grid points used when averaging curves.
pub const MEAN_CURVE_GRID: usize = 1001;

/// Maximum number of points persisted per curve in `metrics.json`.
pub const MAX_STORED_CURVE_POINTS: usize = 256;

/// Per-row argmax with ties broken toward the lowest index.
pub fn argmax_labels<F: Float>(scores: &[Vec<F>]) -> Result<Vec<usize>> {
    if scores.is_empty() || scores[0].is_empty() {
        return Err(Error::EmptyScores);
    }
    let width = scores[0].len();
    let mut out = Vec::with_capacity(scores.len());
    for (row, r) in scores.iter().enumerate() {
        if r.len() != width {
            return Err(Error::RaggedScores {
                expected: width,
                actual: r.len(),
                row,
            });
        }
        let mut best = 0usize;
        for (j, &v) in r.iter().enumerate() {
            if v > r[best] {
                best = j;
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// K x K contingency counts; rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn from_labels(true_labels: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        let mut counts = vec![0u64; classes * classes];
        for (row, (&t, &p)) in true_labels.iter().zip(predicted).enumerate() {
            for label in [t, p] {
                if label >= classes {
                    return Err(Error::LabelOutOfRange {
                        label,
                        row,
                        classes,
                    });
                }
            }
            counts[t * classes + p] += 1;
        }
        Ok(Self { classes, counts })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    #[inline]
    pub fn count(&self, true_class: usize, predicted_class: usize) -> u64 {
        self.counts[true_class * self.classes + predicted_class]
    }

    /// Per-class support (row sum).
    pub fn support(&self, class: usize) -> u64 {
        (0..self.classes).map(|j| self.count(class, j)).sum()
    }

    pub fn predicted_total(&self, class: usize) -> u64 {
        (0..self.classes).map(|i| self.count(i, class)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|i| self.count(i, i)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        (0..self.classes)
            .map(|i| (0..self.classes).map(|j| self.count(i, j)).collect())
            .collect()
    }
}

/// One-vs-rest scores for a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
    /// One-vs-rest accuracy: (TP + TN) / N.
    pub ovr_accuracy: F,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics<F> {
    pub accuracy: F,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
    pub weighted_precision: F,
    pub weighted_recall: F,
    pub weighted_f1: F,
    pub per_class: Vec<ClassMetrics<F>>,
}

#[inline]
fn ratio<F: Float>(num: u64, den: u64) -> F {
    if den == 0 {
        F::zero()
    } else {
        F::from(num).unwrap() / F::from(den).unwrap()
    }
}

/// Precision/recall/F1 per class plus macro (unweighted) and weighted
/// (support-weighted) aggregates. Zero denominators yield zero, and F1 is
/// zero whenever precision + recall is zero.
pub fn aggregate_metrics<F: Float>(cm: &ConfusionMatrix) -> AggregateMetrics<F> {
    let k = cm.classes();
    let n = cm.total();
    let mut per_class = Vec::with_capacity(k);
    for class in 0..k {
        let tp = cm.count(class, class);
        let support = cm.support(class);
        let predicted = cm.predicted_total(class);
        let precision: F = ratio(tp, predicted);
        let recall: F = ratio(tp, support);
        let f1 = if precision + recall == F::zero() {
            F::zero()
        } else {
            F::from(2).unwrap() * precision * recall / (precision + recall)
        };
        let fp = predicted - tp;
        let fnc = support - tp;
        let tn = n - tp - fp - fnc;
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            ovr_accuracy: ratio(tp + tn, n),
            support,
        });
    }

    let kf = F::from(k).unwrap();
    let nf = F::from(n.max(1)).unwrap();
    let macro_of = |f: &dyn Fn(&ClassMetrics<F>) -> F| {
        per_class.iter().map(|c| f(c)).fold(F::zero(), |a, b| a + b) / kf
    };
    let weighted_of = |f: &dyn Fn(&ClassMetrics<F>) -> F| {
        per_class
            .iter()
            .map(|c| f(c) * F::from(c.support).unwrap())
            .fold(F::zero(), |a, b| a + b)
            / nf
    };

    AggregateMetrics {
        accuracy: ratio(cm.trace(), n),
        macro_precision: macro_of(&|c| c.precision),
        macro_recall: macro_of(&|c| c.recall),
        macro_f1: macro_of(&|c| c.f1),
        weighted_precision: weighted_of(&|c| c.precision),
        weighted_recall: weighted_of(&|c| c.recall),
        weighted_f1: weighted_of(&|c| c.f1),
        per_class,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Roc,
    Pr,
}

/// An ROC or PR curve with its area.
///
/// For ROC curves `auc` is the trapezoid area. For PR curves `auc` is
/// average precision and `trapezoid_auc` carries the (optimistic) trapezoid
/// value for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve<F> {
    pub kind: CurveKind,
    pub points: Vec<(F, F)>,
    pub auc: F,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trapezoid_auc: Option<F>,
}

fn sort_descending<F: Float>(scores: &[F], labels: &[bool]) -> Vec<(F, bool)> {
    let mut pairs: Vec<(F, bool)> = scores.iter().cloned().zip(labels.iter().cloned()).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    pairs
}

fn trapezoid<F: Float>(points: &[(F, F)]) -> F {
    let two = F::from(2).unwrap();
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / two)
        .fold(F::zero(), |a, b| a + b)
}

/// One-vs-rest ROC curve over descending distinct thresholds.
///
/// Points run from (0, 0) to (1, 1); tied scores collapse into a single
/// sweep step so the trapezoid area equals the pair-counting statistic
/// exactly.
pub fn roc_curve<F: Float>(scores: &[F], positives: &[bool], class: &str) -> Result<Curve<F>> {
    let pos = positives.iter().filter(|&&p| p).count();
    let neg = positives.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateRoc {
            class: class.to_string(),
            reason: if pos == 0 {
                "no positive instance in the split".into()
            } else {
                "no negative instance in the split".into()
            },
        });
    }
    let pairs = sort_descending(scores, positives);
    let (posf, negf) = (F::from(pos).unwrap(), F::from(neg).unwrap());

    let mut points = vec![(F::zero(), F::zero())];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0usize;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == threshold {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((
            F::from(fp).unwrap() / negf,
            F::from(tp).unwrap() / posf,
        ));
    }
    let auc = trapezoid(&points);
    Ok(Curve {
        kind: CurveKind::Roc,
        points,
        auc,
        trapezoid_auc: None,
    })
}

/// One-vs-rest precision/recall curve with average-precision area.
///
/// Points run recall-ascending, anchored at (0, p_first); `auc` is the step
/// integral sum(dRecall * precision) over distinct thresholds.
pub fn pr_curve<F: Float>(scores: &[F], positives: &[bool], class: &str) -> Result<Curve<F>> {
    let pos = positives.iter().filter(|&&p| p).count();
    if pos == 0 {
        return Err(Error::DegeneratePr {
            class: class.to_string(),
        });
    }
    let pairs = sort_descending(scores, positives);
    let posf = F::from(pos).unwrap();

    let mut sweep: Vec<(F, F)> = Vec::new(); // (recall, precision)
    let mut tp = 0usize;
    let mut predicted = 0usize;
    let mut average_precision = F::zero();
    let mut prev_recall = F::zero();
    let mut i = 0usize;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        while i < pairs.len() && pairs[i].0 == threshold {
            if pairs[i].1 {
                tp += 1;
            }
            predicted += 1;
            i += 1;
        }
        let recall = F::from(tp).unwrap() / posf;
        let precision = F::from(tp).unwrap() / F::from(predicted).unwrap();
        average_precision = average_precision + (recall - prev_recall) * precision;
        prev_recall = recall;
        sweep.push((recall, precision));
    }

    let mut points = Vec::with_capacity(sweep.len() + 1);
    points.push((F::zero(), sweep[0].1));
    points.extend_from_slice(&sweep);
    let trapezoid_auc = trapezoid(&points);
    Ok(Curve {
        kind: CurveKind::Pr,
        points,
        auc: average_precision,
        trapezoid_auc: Some(trapezoid_auc),
    })
}

/// Linear interpolation at `x` with endpoint clamping. Curves may contain
/// vertical jumps (duplicated x); `lower` selects which side of a jump is
/// reported when `x` lands exactly on one.
fn interpolate_at<F: Float>(points: &[(F, F)], x: F, lower: bool) -> F {
    debug_assert!(!points.is_empty());
    let last = points.len() - 1;
    if x < points[0].0 {
        return points[0].1;
    }
    if x > points[last].0 {
        return points[last].1;
    }
    // last index with x-coordinate <= x
    let mut lo = 0usize;
    let mut hi = last;
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if points[mid].0 <= x {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    if points[lo].0 == x {
        if lower {
            while lo > 0 && points[lo - 1].0 == x {
                lo -= 1;
            }
        }
        return points[lo].1;
    }
    let (x0, y0) = points[lo];
    let (x1, y1) = points[lo + 1];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Macro-average curves of one kind.
///
/// Every curve is linearly interpolated at a shared set of x positions — a
/// uniform grid of `grid_size` points in [0, 1] joined with every input
/// curve's own breakpoints — and the y values are averaged. Keeping the
/// breakpoints (with both sides of each vertical jump) makes the averaged
/// polyline the exact pointwise mean of the inputs, so its trapezoid area
/// is the exact mean of the individual areas rather than a grid
/// approximation.
pub fn mean_curve<F: Float>(curves: &[Curve<F>], kind: CurveKind, grid_size: usize) -> Result<Curve<F>> {
    if curves.is_empty() {
        return Err(Error::NoCurves);
    }
    if curves.iter().any(|c| c.kind != kind) {
        return Err(Error::MixedCurveKinds(kind));
    }
    let grid_size = grid_size.max(2);
    let step = F::one() / F::from(grid_size - 1).unwrap();
    let mut xs: Vec<F> = (0..grid_size)
        .map(|j| {
            if j == grid_size - 1 {
                F::one()
            } else {
                step * F::from(j).unwrap()
            }
        })
        .collect();
    for curve in curves {
        xs.extend(curve.points.iter().map(|p| p.0));
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    xs.dedup();

    let count = F::from(curves.len()).unwrap();
    let mean_at = |x: F, lower: bool| {
        curves
            .iter()
            .map(|c| interpolate_at(&c.points, x, lower))
            .fold(F::zero(), |a, b| a + b)
            / count
    };

    let mut points: Vec<(F, F)> = Vec::with_capacity(xs.len() + curves.len());
    for x in xs {
        let lo = mean_at(x, true);
        let hi = mean_at(x, false);
        points.push((x, lo));
        if hi != lo {
            points.push((x, hi));
        }
    }
    let auc = trapezoid(&points);
    Ok(Curve {
        kind,
        points,
        auc,
        trapezoid_auc: None,
    })
}

/// Evenly subsample a point list to at most `limit` points, keeping both
/// endpoints.
pub fn downsample_points<F: Clone>(points: &[(F, F)], limit: usize) -> Vec<(F, F)> {
    if points.len() <= limit || limit < 2 {
        return points.to_vec();
    }
    let last = points.len() - 1;
    (0..limit)
        .map(|i| {
            let idx = (i as f64 * last as f64 / (limit - 1) as f64).round() as usize;
            points[idx].clone()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Full-report assembly
// ---------------------------------------------------------------------------

/// Stored curve sample: class-tagged, downsampled points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample<F> {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    pub auc: F,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trapezoid_auc: Option<F>,
    pub points: Vec<(F, F)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet<F> {
    pub roc: Vec<CurveSample<F>>,
    pub pr: Vec<CurveSample<F>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_roc: Option<CurveSample<F>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_pr: Option<CurveSample<F>>,
}

/// A class whose ROC or PR curve could not be computed, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFailure {
    pub class: String,
    pub kind: CurveKind,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerClassReport<F> {
    pub name: String,
    pub support: u64,
    pub precision: F,
    pub recall: F,
    pub f1: F,
    pub ovr_accuracy: F,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roc_auc: Option<F>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pr_auc: Option<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport<F> {
    pub accuracy: F,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
    pub weighted_precision: F,
    pub weighted_recall: F,
    pub weighted_f1: F,
}

/// Everything persisted to `metrics.json` for one model run and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport<F> {
    pub n: u64,
    pub class_names: Vec<String>,
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<PerClassReport<F>>,
    pub aggregates: AggregateReport<F>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_roc_auc: Option<F>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_pr_auc: Option<F>,
    pub curves: CurveSet<F>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curve_errors: Vec<CurveFailure>,
}

impl<F: Float + Serialize + serde::de::DeserializeOwned> EvaluationReport<F> {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| Error::json("serializing evaluation report", e))?;
        s.push('\n');
        std::fs::write(path, s)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        serde_json::from_str(&raw).map_err(|e| Error::json("parsing evaluation report", e))
    }
}

fn sample_curve<F: Float>(curve: &Curve<F>, class: Option<&str>) -> CurveSample<F> {
    CurveSample {
        class: class.map(str::to_string),
        auc: curve.auc,
        trapezoid_auc: curve.trapezoid_auc,
        points: downsample_points(&curve.points, MAX_STORED_CURVE_POINTS),
    }
}

/// Compute the full evaluation report for one prediction matrix.
///
/// Classes without both a positive and a negative instance get explicit
/// entries in `curve_errors` instead of curves; the mean curves average
/// whatever per-class curves exist.
pub fn evaluate<F: Float + Serialize + serde::de::DeserializeOwned>(
    pm: &PredictionMatrix,
    class_names: &[String],
) -> Result<EvaluationReport<F>> {
    let k = class_names.len();
    pm.validate(k)?;

    let scores: Vec<Vec<F>> = pm
        .scores
        .iter()
        .map(|row| row.iter().map(|&v| F::from(v).unwrap()).collect())
        .collect();
    let predicted = argmax_labels(&scores)?;
    let cm = ConfusionMatrix::from_labels(&pm.true_labels, &predicted, k)?;
    let aggregates = aggregate_metrics::<F>(&cm);

    let mut roc_curves: Vec<Curve<F>> = Vec::new();
    let mut pr_curves: Vec<Curve<F>> = Vec::new();
    let mut roc_by_class: Vec<Option<Curve<F>>> = Vec::with_capacity(k);
    let mut pr_by_class: Vec<Option<Curve<F>>> = Vec::with_capacity(k);
    let mut curve_errors = Vec::new();

    for class in 0..k {
        let class_scores: Vec<F> = scores.iter().map(|row| row[class]).collect();
        let positives: Vec<bool> = pm.true_labels.iter().map(|&t| t == class).collect();
        match roc_curve(&class_scores, &positives, &class_names[class]) {
            Ok(curve) => {
                roc_curves.push(curve.clone());
                roc_by_class.push(Some(curve));
            }
            Err(e) => {
                curve_errors.push(CurveFailure {
                    class: class_names[class].clone(),
                    kind: CurveKind::Roc,
                    reason: e.to_string(),
                });
                roc_by_class.push(None);
            }
        }
        match pr_curve(&class_scores, &positives, &class_names[class]) {
            Ok(curve) => {
                pr_curves.push(curve.clone());
                pr_by_class.push(Some(curve));
            }
            Err(e) => {
                curve_errors.push(CurveFailure {
                    class: class_names[class].clone(),
                    kind: CurveKind::Pr,
                    reason: e.to_string(),
                });
                pr_by_class.push(None);
            }
        }
    }

    let mean_roc = if roc_curves.is_empty() {
        None
    } else {
        Some(mean_curve(&roc_curves, CurveKind::Roc, MEAN_CURVE_GRID)?)
    };
    let mean_pr = if pr_curves.is_empty() {
        None
    } else {
        Some(mean_curve(&pr_curves, CurveKind::Pr, MEAN_CURVE_GRID)?)
    };

    let per_class = (0..k)
        .map(|class| {
            let m = &aggregates.per_class[class];
            PerClassReport {
                name: class_names[class].clone(),
                support: m.support,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                ovr_accuracy: m.ovr_accuracy,
                roc_auc: roc_by_class[class].as_ref().map(|c| c.auc),
                pr_auc: pr_by_class[class].as_ref().map(|c| c.auc),
            }
        })
        .collect();

    Ok(EvaluationReport {
        n: cm.total(),
        class_names: class_names.to_vec(),
        confusion: cm.rows(),
        per_class,
        aggregates: AggregateReport {
            accuracy: aggregates.accuracy,
            macro_precision: aggregates.macro_precision,
            macro_recall: aggregates.macro_recall,
            macro_f1: aggregates.macro_f1,
            weighted_precision: aggregates.weighted_precision,
            weighted_recall: aggregates.weighted_recall,
            weighted_f1: aggregates.weighted_f1,
        },
        mean_roc_auc: mean_roc.as_ref().map(|c| c.auc),
        mean_pr_auc: mean_pr.as_ref().map(|c| c.auc),
        curves: CurveSet {
            roc: roc_by_class
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.as_ref().map(|c| sample_curve(c, Some(&class_names[i]))))
                .collect(),
            pr: pr_by_class
                .iter()
                .enumerate()
                .filter_map(|(i, c)| c.as_ref().map(|c| sample_curve(c, Some(&class_names[i]))))
                .collect(),
            mean_roc: mean_roc.as_ref().map(|c| sample_curve(c, None)),
            mean_pr: mean_pr.as_ref().map(|c| sample_curve(c, None)),
        },
        curve_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    /// Pair-counting AUC: fraction of (positive, negative) pairs ordered
    /// correctly, ties worth 1/2.
    fn mann_whitney(scores: &[f64], positives: &[bool]) -> f64 {
        let pos: Vec<f64> = scores
            .iter()
            .zip(positives)
            .filter(|(_, &p)| p)
            .map(|(&s, _)| s)
            .collect();
        let neg: Vec<f64> = scores
            .iter()
            .zip(positives)
            .filter(|(_, &p)| !p)
            .map(|(&s, _)| s)
            .collect();
        let mut acc = 0.0;
        for &p in &pos {
            for &n in &neg {
                acc += if p > n {
                    1.0
                } else if p == n {
                    0.5
                } else {
                    0.0
                };
            }
        }
        acc / (pos.len() as f64 * neg.len() as f64)
    }

    /// Average precision by brute-force enumeration of distinct thresholds.
    fn average_precision_oracle(scores: &[f64], positives: &[bool]) -> f64 {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
        thresholds.dedup();
        let pos = positives.iter().filter(|&&p| p).count() as f64;
        let mut ap = 0.0;
        let mut prev_recall = 0.0;
        for &t in &thresholds {
            let mut tp = 0.0;
            let mut predicted = 0.0;
            for (&s, &p) in scores.iter().zip(positives) {
                if s >= t {
                    predicted += 1.0;
                    if p {
                        tp += 1.0;
                    }
                }
            }
            let recall = tp / pos;
            let precision = tp / predicted;
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
        ap
    }

    #[test]
    fn argmax_basics() {
        assert_eq!(argmax_labels(&[vec![0.1, 0.7, 0.2]]).unwrap(), vec![1]);
        assert_eq!(argmax_labels(&[vec![0.5, 0.5]]).unwrap(), vec![0]);
        assert!(argmax_labels::<f64>(&[]).is_err());
    }

    #[test]
    fn confusion_hand_example() {
        let true_labels = [0, 0, 1, 1, 2, 2];
        let predicted = [0, 1, 1, 1, 2, 0];
        let cm = ConfusionMatrix::from_labels(&true_labels, &predicted, 3).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 1, 0], vec![0, 2, 0], vec![1, 0, 1]]);
        assert_eq!(cm.trace(), 4);
        assert_eq!(cm.total(), 6);

        let agg = aggregate_metrics::<f64>(&cm);
        assert!((agg.accuracy - 4.0 / 6.0).abs() < 1e-15);
        assert!((agg.per_class[0].precision - 0.5).abs() < 1e-15);
        assert!((agg.per_class[0].recall - 0.5).abs() < 1e-15);
        assert!((agg.per_class[0].f1 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn confusion_label_out_of_range() {
        assert!(matches!(
            ConfusionMatrix::from_labels(&[0, 3], &[0, 0], 3),
            Err(Error::LabelOutOfRange { label: 3, row: 1, .. })
        ));
    }

    #[test]
    fn perfect_predictions_are_all_ones() {
        let labels = [0, 1, 2, 0, 1, 2, 1];
        let cm = ConfusionMatrix::from_labels(&labels, &labels, 3).unwrap();
        let agg = aggregate_metrics::<f64>(&cm);
        assert_eq!(agg.accuracy, 1.0);
        assert_eq!(agg.macro_f1, 1.0);
        assert_eq!(agg.weighted_precision, 1.0);
        for c in &agg.per_class {
            assert_eq!(c.f1, 1.0);
            assert_eq!(c.ovr_accuracy, 1.0);
        }
    }

    #[test]
    fn roc_perfect_and_hand_example() {
        let perfect = roc_curve(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false], "c").unwrap();
        assert!((perfect.auc - 1.0).abs() < 1e-15);
        assert_eq!(perfect.points.first().unwrap(), &(0.0, 0.0));
        assert_eq!(perfect.points.last().unwrap(), &(1.0, 1.0));

        // positives {0.9, 0.4}, negatives {0.6, 0.1}: 3 of 4 pairs ordered.
        let c = roc_curve(&[0.9, 0.4, 0.6, 0.1], &[true, true, false, false], "c").unwrap();
        assert!((c.auc - 0.75).abs() < 1e-15);
    }

    #[test]
    fn roc_rejects_single_class() {
        assert!(matches!(
            roc_curve(&[0.5, 0.6], &[true, true], "only-pos"),
            Err(Error::DegenerateRoc { .. })
        ));
        assert!(matches!(
            roc_curve(&[0.5, 0.6], &[false, false], "only-neg"),
            Err(Error::DegenerateRoc { .. })
        ));
    }

    #[test]
    fn pr_perfect_and_uniform() {
        let perfect = pr_curve(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false], "c").unwrap();
        assert!((perfect.auc - 1.0).abs() < 1e-15);

        // all scores equal: single sweep point, AP = prevalence
        let flat = pr_curve(&[0.5; 8], &[true, false, false, true, false, false, false, false], "c")
            .unwrap();
        assert!((flat.auc - 0.25).abs() < 1e-15);
    }

    #[test]
    fn pr_rejects_no_positives() {
        assert!(matches!(
            pr_curve(&[0.1, 0.9], &[false, false], "c"),
            Err(Error::DegeneratePr { .. })
        ));
    }

    #[test]
    fn mean_curve_identical_inputs() {
        let c = roc_curve(&[0.9, 0.4, 0.6, 0.1], &[true, true, false, false], "c").unwrap();
        let mean = mean_curve(&[c.clone(), c.clone(), c.clone()], CurveKind::Roc, 1001).unwrap();
        assert!((mean.auc - c.auc).abs() < 1e-9);
    }

    #[test]
    fn mean_curve_perfect_plus_diagonal() {
        // A perfect ROC and a chance diagonal average to AUC 0.75.
        let perfect = roc_curve(&[0.9, 0.1], &[true, false], "a").unwrap();
        let diagonal = Curve {
            kind: CurveKind::Roc,
            points: vec![(0.0, 0.0), (1.0, 1.0)],
            auc: 0.5,
            trapezoid_auc: None,
        };
        let mean = mean_curve(&[perfect, diagonal], CurveKind::Roc, 1001).unwrap();
        assert!((mean.auc - 0.75).abs() < 1e-3, "auc = {}", mean.auc);
    }

    #[test]
    fn mean_curve_rejects_empty_and_mixed() {
        assert!(matches!(
            mean_curve::<f64>(&[], CurveKind::Roc, 101),
            Err(Error::NoCurves)
        ));
        let roc = roc_curve(&[0.9, 0.1], &[true, false], "a").unwrap();
        let pr = pr_curve(&[0.9, 0.1], &[true, false], "a").unwrap();
        assert!(matches!(
            mean_curve(&[roc, pr], CurveKind::Roc, 101),
            Err(Error::MixedCurveKinds(_))
        ));
    }

    #[test]
    fn downsample_keeps_endpoints() {
        let points: Vec<(f64, f64)> = (0..1000).map(|i| (i as f64, i as f64 * 2.0)).collect();
        let down = downsample_points(&points, 256);
        assert_eq!(down.len(), 256);
        assert_eq!(down[0], points[0]);
        assert_eq!(down[255], points[999]);
    }

    #[test]
    fn evaluate_perfect_one_hot() {
        let pm = PredictionMatrix {
            image_ids: (0..6).map(|i| format!("img{i}")).collect(),
            true_labels: vec![0, 1, 2, 0, 1, 2],
            scores: vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        };
        let names = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let report: EvaluationReport<f64> = evaluate(&pm, &names).unwrap();
        assert_eq!(report.aggregates.accuracy, 1.0);
        assert_eq!(report.mean_roc_auc, Some(1.0));
        for pc in &report.per_class {
            assert_eq!(pc.roc_auc, Some(1.0));
            assert_eq!(pc.pr_auc, Some(1.0));
        }
        assert!(report.curve_errors.is_empty());
    }

    #[test]
    fn evaluate_uniform_scores_degenerate_case() {
        // all rows 1/K: argmax tie-breaks to class 0, ROC AUCs are 0.5
        let k = 3;
        let n = 9;
        let pm = PredictionMatrix {
            image_ids: (0..n).map(|i| format!("img{i}")).collect(),
            true_labels: (0..n).map(|i| i % k).collect(),
            scores: vec![vec![1.0 / k as f64; k]; n],
        };
        let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let report: EvaluationReport<f64> = evaluate(&pm, &names).unwrap();
        let prevalence_of_first = 3.0 / 9.0;
        assert!((report.aggregates.accuracy - prevalence_of_first).abs() < 1e-12);
        for pc in &report.per_class {
            assert!((pc.roc_auc.unwrap() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluate_missing_class_yields_error_entry() {
        // class 2 never occurs: its ROC and PR carry explicit errors
        let pm = PredictionMatrix {
            image_ids: vec!["a".into(), "b".into()],
            true_labels: vec![0, 1],
            scores: vec![vec![0.8, 0.1, 0.1], vec![0.2, 0.7, 0.1]],
        };
        let names = vec!["x".to_string(), "y".to_string(), "z".to_string()];
        let report: EvaluationReport<f64> = evaluate(&pm, &names).unwrap();
        assert_eq!(report.curve_errors.len(), 2);
        assert!(report.curve_errors.iter().all(|e| e.class == "z"));
        assert_eq!(report.per_class[2].roc_auc, None);
        assert_eq!(report.per_class[2].pr_auc, None);
    }

    #[test]
    fn evaluate_reference_scale_is_fast() {
        // 225 x 15 with distinct scores; generous wall-clock bound
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let k = 15;
        let n = 225;
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                let sum: f64 = raw.iter().sum();
                raw.into_iter().map(|v| v / sum).collect()
            })
            .collect();
        let pm = PredictionMatrix {
            image_ids: (0..n).map(|i| format!("img{i}")).collect(),
            true_labels: (0..n).map(|i| i % k).collect(),
            scores,
        };
        let names: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
        let start = std::time::Instant::now();
        let report: EvaluationReport<f64> = evaluate(&pm, &names).unwrap();
        assert!(start.elapsed().as_secs() < 5, "evaluation took too long");
        assert_eq!(report.n, n as u64);
        assert_eq!(report.curves.roc.len(), k);
    }

    proptest! {
        #[test]
        fn argmax_matches_linear_scan(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let scores: Vec<Vec<f64>> = (0..100)
                .map(|_| (0..15).map(|_| (rng.random::<f64>() * 8.0).floor() / 8.0).collect())
                .collect();
            let got = argmax_labels(&scores).unwrap();
            for (row, labels) in scores.iter().zip(&got) {
                let mut best = 0usize;
                for j in 0..row.len() {
                    if row[j] > row[best] {
                        best = j;
                    }
                }
                prop_assert_eq!(best, *labels);
            }
        }

        /// Trapezoidal ROC AUC equals the pair-counting statistic exactly
        /// (quantized scores force plenty of ties).
        #[test]
        fn roc_auc_equals_mann_whitney(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let n = rng.random_range(2usize..=50);
            let mut positives: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            positives[0] = true;
            positives[1 % n] = false;
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random::<f64>() * 6.0).floor() / 6.0)
                .collect();
            let curve = roc_curve(&scores, &positives, "t").unwrap();
            prop_assert!((curve.auc - mann_whitney(&scores, &positives)).abs() < 1e-9);
        }

        /// ROC AUC is invariant under strictly monotone score transforms.
        #[test]
        fn roc_auc_monotone_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let n = rng.random_range(4usize..=40);
            let mut positives: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            positives[0] = true;
            positives[1] = false;
            let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let cubed: Vec<f64> = scores.iter().map(|&s| s.powi(3)).collect();
            let a = roc_curve(&scores, &positives, "t").unwrap();
            let b = roc_curve(&cubed, &positives, "t").unwrap();
            prop_assert!((a.auc - b.auc).abs() < 1e-12);
        }

        #[test]
        fn average_precision_matches_threshold_enumeration(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let n = rng.random_range(2usize..=50);
            let mut positives: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
            positives[0] = true;
            let scores: Vec<f64> = (0..n)
                .map(|_| (rng.random::<f64>() * 5.0).floor() / 5.0)
                .collect();
            let curve = pr_curve(&scores, &positives, "t").unwrap();
            prop_assert!((curve.auc - average_precision_oracle(&scores, &positives)).abs() < 1e-9);
        }

        /// Confusion bookkeeping: row sums are supports, column sums are
        /// prediction counts, trace/N is accuracy, F1 sits between P and R.
        #[test]
        fn aggregate_consistency(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let k = rng.random_range(2usize..=8);
            let n = rng.random_range(k..=120);
            let true_labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let predicted: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let cm = ConfusionMatrix::from_labels(&true_labels, &predicted, k).unwrap();
            prop_assert_eq!(cm.total(), n as u64);
            for class in 0..k {
                let support = true_labels.iter().filter(|&&t| t == class).count() as u64;
                prop_assert_eq!(cm.support(class), support);
                let pred = predicted.iter().filter(|&&p| p == class).count() as u64;
                prop_assert_eq!(cm.predicted_total(class), pred);
            }
            let agg = aggregate_metrics::<f64>(&cm);
            let correct = true_labels.iter().zip(&predicted).filter(|(t, p)| t == p).count();
            prop_assert!((agg.accuracy - correct as f64 / n as f64).abs() < 1e-12);
            for c in &agg.per_class {
                if c.precision > 0.0 && c.recall > 0.0 {
                    prop_assert!(c.f1 >= c.precision.min(c.recall) - 1e-12);
                    prop_assert!(c.f1 <= c.precision.max(c.recall) + 1e-12);
                }
            }
        }

        /// With balanced supports, weighted recall collapses to accuracy.
        #[test]
        fn balanced_weighted_recall_is_accuracy(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let k = rng.random_range(2usize..=6);
            let per_class = rng.random_range(1usize..=30);
            let mut true_labels = Vec::new();
            for class in 0..k {
                true_labels.extend(std::iter::repeat_n(class, per_class));
            }
            let predicted: Vec<usize> = (0..true_labels.len()).map(|_| rng.random_range(0..k)).collect();
            let cm = ConfusionMatrix::from_labels(&true_labels, &predicted, k).unwrap();
            let agg = aggregate_metrics::<f64>(&cm);
            prop_assert!((agg.weighted_recall - agg.accuracy).abs() < 1e-12);
        }

        /// Mean of per-class curves never drops below the worst input AUC by
        /// more than the grid error.
        #[test]
        fn mean_curve_lower_bound(seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut curves = Vec::new();
            for _ in 0..4 {
                let n = rng.random_range(4usize..=30);
                let mut positives: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
                positives[0] = true;
                positives[1] = false;
                let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                curves.push(roc_curve(&scores, &positives, "t").unwrap());
            }
            let min_auc = curves.iter().map(|c| c.auc).fold(f64::INFINITY, f64::min);
            let mean = mean_curve(&curves, CurveKind::Roc, 1001).unwrap();
            prop_assert!(mean.auc >= min_auc - 1e-3);
        }
    }
}
