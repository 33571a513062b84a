//! One-to-one point matching within a radius and F-score reports.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infer::Prediction;
use crate::pattern::{Point, PointPattern};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    /// `(pred index, gt index)` in acceptance order.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_pred: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
}

/// Greedy matching: all pairs with `d <= radius` are accepted in ascending
/// distance order (ties by gt index, then pred index) while both ends are free.
pub fn match_points(pred: &[Point], gt: &[Point], radius: f64) -> Result<Matching> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("match radius must be positive, got {radius}")));
    }
    let r2 = radius * radius;
    let key = |p: Point| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (j, &g) in gt.iter().enumerate() {
        buckets.entry(key(g)).or_default().push(j);
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, &p) in pred.iter().enumerate() {
        let (bx, by) = key(p);
        for gx in bx - 1..=bx + 1 {
            for gy in by - 1..=by + 1 {
                for &j in buckets.get(&(gx, gy)).into_iter().flatten() {
                    let d2 = p.dist_sq(gt[j]);
                    if d2 <= r2 {
                        candidates.push((d2, j, i));
                    }
                }
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for (_, j, i) in candidates {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            pairs.push((i, j));
        }
    }
    Ok(Matching {
        pairs,
        unmatched_pred: (0..pred.len()).filter(|&i| !pred_used[i]).collect(),
        unmatched_gt: (0..gt.len()).filter(|&j| !gt_used[j]).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
        }
    }

    fn from_matching(m: &Matching) -> Self {
        Self::from_counts(m.pairs.len(), m.unmatched_pred.len(), m.unmatched_gt.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub radius: f64,
    pub detection: Scores,
    pub per_class: Vec<Scores>,
    pub mean_f1: f64,
}

impl EvalReport {
    fn assemble(radius: f64, detection: Scores, per_class: Vec<Scores>) -> Self {
        let mean_f1 = if per_class.is_empty() {
            0.0
        } else {
            per_class.iter().map(|s| s.f1).sum::<f64>() / per_class.len() as f64
        };
        Self {
            radius,
            detection,
            per_class,
            mean_f1,
        }
    }
}

pub fn evaluate(preds: &[Prediction], gt: &PointPattern, radius: f64) -> Result<EvalReport> {
    let n_classes = gt.n_classes();
    if let Some(p) = preds.iter().find(|p| p.class >= n_classes) {
        return Err(Error::invalid(format!(
            "prediction class {} exceeds the {n_classes} ground-truth classes",
            p.class
        )));
    }
    let pred_points: Vec<Point> = preds.iter().map(Prediction::point).collect();
    let detection = Scores::from_matching(&match_points(&pred_points, gt.points(), radius)?);
    let mut per_class = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let p: Vec<Point> = preds.iter().filter(|p| p.class == c).map(Prediction::point).collect();
        let g: Vec<Point> = (0..gt.len()).filter(|&j| gt.label(j) == c).map(|j| gt.point(j)).collect();
        per_class.push(Scores::from_matching(&match_points(&p, &g, radius)?));
    }
    Ok(EvalReport::assemble(radius, detection, per_class))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Pool TP/FP/FN over patches, then score.
    #[default]
    Micro,
    /// Score each patch, then average precision, recall and F.
    Macro,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Self::Micro),
            "macro" => Ok(Self::Macro),
            other => Err(Error::invalid(format!("unknown averaging '{other}'"))),
        }
    }
}

/// Combine per-patch reports evaluated with the same radius and classes.
pub fn aggregate(reports: &[EvalReport], averaging: Averaging) -> Result<EvalReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    let n_classes = first.per_class.len();
    if reports.iter().any(|r| r.per_class.len() != n_classes || r.radius != first.radius) {
        return Err(Error::inconsistent("reports differ in classes or radius"));
    }
    let combine = |pick: &dyn Fn(&EvalReport) -> Scores| -> Scores {
        let all: Vec<Scores> = reports.iter().map(pick).collect();
        let tp = all.iter().map(|s| s.tp).sum();
        let fp = all.iter().map(|s| s.fp).sum();
        let fn_ = all.iter().map(|s| s.fn_).sum();
        match averaging {
            Averaging::Micro => Scores::from_counts(tp, fp, fn_),
            Averaging::Macro => {
                let n = all.len() as f64;
                Scores {
                    tp,
                    fp,
                    fn_,
                    precision: all.iter().map(|s| s.precision).sum::<f64>() / n,
                    recall: all.iter().map(|s| s.recall).sum::<f64>() / n,
                    f1: all.iter().map(|s| s.f1).sum::<f64>() / n,
                }
            }
        }
    };
    let detection = combine(&|r| r.detection);
    let per_class = (0..n_classes).map(|c| combine(&|r| r.per_class[c])).collect();
    Ok(EvalReport::assemble(first.radius, detection, per_class))
}
