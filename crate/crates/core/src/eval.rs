//! Accuracy, macro-F1 and tweet-to-user prediction aggregation.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::finetune::PredictionResult;

/// Fraction of predictions equal to gold.
pub fn accuracy(pred: &[String], gold: &[String]) -> Result<f64> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyEval);
    }
    let matches = pred.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(matches as f64 / pred.len() as f64)
}

/// Unweighted mean of per-class F1 over `labels`. A class absent from both
/// predictions and gold contributes 0 and logs a warning.
pub fn macro_f1(pred: &[String], gold: &[String], labels: &[String]) -> Result<f64> {
    Ok(EvalReport::compute(pred, gold, labels)?.macro_f1)
}

/// Precision, recall and F1 for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold occurrences of this class.
    pub support: usize,
}

/// Full evaluation summary: accuracy, macro-F1, per-class metrics and the
/// confusion matrix (rows = gold, columns = predicted, label-set order).
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub labels: Vec<String>,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: Vec<Vec<usize>>,
    pub total: usize,
}

impl EvalReport {
    pub fn compute(pred: &[String], gold: &[String], labels: &[String]) -> Result<EvalReport> {
        if pred.len() != gold.len() {
            return Err(Error::LengthMismatch {
                pred: pred.len(),
                gold: gold.len(),
            });
        }
        if pred.is_empty() {
            return Err(Error::EmptyEval);
        }
        let index: BTreeMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        for g in gold {
            if !index.contains_key(g.as_str()) {
                return Err(Error::LabelNotInTask { label: g.clone() });
            }
        }
        let n = labels.len();
        let mut confusion = vec![vec![0usize; n]; n];
        let mut matches = 0;
        for (p, g) in pred.iter().zip(gold) {
            if p == g {
                matches += 1;
            }
            // Predictions outside the label set only count against accuracy.
            if let (Some(&gi), Some(&pi)) = (index.get(g.as_str()), index.get(p.as_str())) {
                confusion[gi][pi] += 1;
            }
        }

        let mut per_class = Vec::with_capacity(n);
        let mut f1_sum = 0.0;
        for (i, label) in labels.iter().enumerate() {
            let tp = confusion[i][i];
            let gold_count: usize = confusion[i].iter().sum();
            let pred_count: usize = (0..n).map(|g| confusion[g][i]).sum();
            let fp = pred_count - tp;
            let fn_ = gold_count - tp;
            if gold_count == 0 && pred_count == 0 {
                log::warn!(
                    "class {label:?} absent from both predictions and gold; F1 counted as 0"
                );
            }
            let precision = if tp + fp > 0 {
                tp as f64 / (tp + fp) as f64
            } else {
                0.0
            };
            let recall = if tp + fn_ > 0 {
                tp as f64 / (tp + fn_) as f64
            } else {
                0.0
            };
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            f1_sum += f1;
            per_class.push(ClassMetrics {
                label: label.clone(),
                precision,
                recall,
                f1,
                support: gold_count,
            });
        }

        Ok(EvalReport {
            labels: labels.to_vec(),
            accuracy: matches as f64 / pred.len() as f64,
            macro_f1: if n > 0 { f1_sum / n as f64 } else { 0.0 },
            per_class,
            confusion,
            total: pred.len(),
        })
    }

    /// Machine-readable `key=value` lines for CI assertions.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("total={}\n", self.total));
        out.push_str(&format!("accuracy={:.6}\n", self.accuracy));
        out.push_str(&format!("macro_f1={:.6}\n", self.macro_f1));
        for c in &self.per_class {
            out.push_str(&format!(
                "precision.{}={:.6}\nrecall.{}={:.6}\nf1.{}={:.6}\nsupport.{}={}\n",
                c.label, c.precision, c.label, c.recall, c.label, c.f1, c.label, c.support
            ));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "samples: {}", self.total)?;
        writeln!(f, "accuracy: {:.4}", self.accuracy)?;
        writeln!(f, "macro-F1: {:.4}", self.macro_f1)?;
        writeln!(f, "{:<16} {:>9} {:>9} {:>9} {:>9}", "class", "prec", "recall", "f1", "support")?;
        for c in &self.per_class {
            writeln!(
                f,
                "{:<16} {:>9.4} {:>9.4} {:>9.4} {:>9}",
                c.label, c.precision, c.recall, c.f1, c.support
            )?;
        }
        writeln!(f, "confusion (rows = gold, cols = predicted):")?;
        write!(f, "{:<16}", "")?;
        for l in &self.labels {
            write!(f, "{:>12}", l)?;
        }
        writeln!(f)?;
        for (i, row) in self.confusion.iter().enumerate() {
            write!(f, "{:<16}", self.labels[i])?;
            for v in row {
                write!(f, "{:>12}", v)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Collapse tweet-level predictions to one label per user.
///
/// Predictions whose top probability is below `threshold` are discarded;
/// the survivors vote by majority. If the filter discards everything, the
/// vote falls back to the unfiltered set. Ties break by summed probability
/// mass for the tied label, then by label order in the distributions.
pub fn user_aggregate(
    groups: &[(String, Vec<PredictionResult>)],
    threshold: f64,
) -> Result<Vec<(String, String)>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::BadThreshold(threshold));
    }
    let mut out = Vec::with_capacity(groups.len());
    for (user, preds) in groups {
        if preds.is_empty() {
            return Err(Error::EmptyUserGroup);
        }
        let survivors: Vec<&PredictionResult> = preds
            .iter()
            .filter(|p| p.confidence() >= threshold)
            .collect();
        let voters: Vec<&PredictionResult> = if survivors.is_empty() {
            preds.iter().collect()
        } else {
            survivors
        };
        // Label order comes from the first distribution, which is the task
        // label order for every prediction of one model.
        let label_order: Vec<&str> = preds[0]
            .distribution
            .iter()
            .map(|(l, _)| l.as_str())
            .collect();
        let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for p in &voters {
            let entry = votes.entry(p.label.as_str()).or_insert((0, 0.0));
            entry.0 += 1;
            entry.1 += p.prob(&p.label).unwrap_or(0.0);
        }
        let winner = label_order
            .iter()
            .enumerate()
            .filter_map(|(idx, l)| votes.get(l).map(|&(count, mass)| (count, mass, idx, *l)))
            .max_by(|a, b| {
                a.0.cmp(&b.0)
                    .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                    // Earlier label-set position wins remaining ties.
                    .then(b.2.cmp(&a.2))
            })
            .map(|(_, _, _, l)| l.to_string())
            .unwrap_or_else(|| voters[0].label.clone());
        out.push((user.clone(), winner));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn pred(label: &str, dist: &[(&str, f64)]) -> PredictionResult {
        PredictionResult {
            label: label.to_string(),
            distribution: dist.iter().map(|(l, p)| (l.to_string(), *p)).collect(),
        }
    }

    #[test]
    fn accuracy_basics() {
        let a = labels(&["a", "a", "b", "b"]);
        let g = labels(&["a", "b", "b", "b"]);
        assert_eq!(accuracy(&a, &a).unwrap(), 1.0);
        assert_eq!(accuracy(&a, &g).unwrap(), 0.75);
        let all_wrong = labels(&["b", "a", "a", "a"]);
        assert_eq!(accuracy(&all_wrong, &g).unwrap(), 0.0);
        assert!(matches!(
            accuracy(&a, &labels(&["a"])),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(accuracy(&[], &[]), Err(Error::EmptyEval)));
    }

    #[test]
    fn macro_f1_hand_computed_binary_example() {
        // preds [p,p,n] vs gold [p,n,n]:
        //   p: tp=1 fp=1 fn=0 → P=1/2 R=1 F1=2/3
        //   n: tp=1 fp=0 fn=1 → P=1 R=1/2 F1=2/3
        let p = labels(&["p", "p", "n"]);
        let g = labels(&["p", "n", "n"]);
        let f1 = macro_f1(&p, &g, &labels(&["p", "n"])).unwrap();
        assert!((f1 - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn macro_f1_perfect_and_single_class() {
        let p = labels(&["a", "b", "a"]);
        assert_eq!(macro_f1(&p, &p, &labels(&["a", "b"])).unwrap(), 1.0);
        // Single-class gold, matching preds, 2-label set: absent class
        // contributes 0 → macro 0.5.
        let single = labels(&["a", "a"]);
        let f1 = macro_f1(&single, &single, &labels(&["a", "b"])).unwrap();
        assert!((f1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn report_confusion_row_sums_are_gold_counts() {
        let p = labels(&["a", "b", "b", "c", "a"]);
        let g = labels(&["a", "a", "b", "c", "c"]);
        let set = labels(&["a", "b", "c"]);
        let report = EvalReport::compute(&p, &g, &set).unwrap();
        for (i, label) in set.iter().enumerate() {
            let row_sum: usize = report.confusion[i].iter().sum();
            let gold_count = g.iter().filter(|x| *x == label).count();
            assert_eq!(row_sum, gold_count);
        }
        let trace: usize = (0..3).map(|i| report.confusion[i][i]).sum();
        assert!((report.accuracy - trace as f64 / 5.0).abs() < 1e-12);
        assert!(report.to_kv().contains("accuracy=0.6"));
    }

    #[test]
    fn metrics_are_permutation_invariant() {
        let p = labels(&["a", "b", "b", "a", "c"]);
        let g = labels(&["a", "a", "b", "c", "c"]);
        let set = labels(&["a", "b", "c"]);
        let acc = accuracy(&p, &g).unwrap();
        let f1 = macro_f1(&p, &g, &set).unwrap();
        let perm = [4usize, 2, 0, 3, 1];
        let pp: Vec<String> = perm.iter().map(|&i| p[i].clone()).collect();
        let gp: Vec<String> = perm.iter().map(|&i| g[i].clone()).collect();
        assert_eq!(accuracy(&pp, &gp).unwrap(), acc);
        assert_eq!(macro_f1(&pp, &gp, &set).unwrap(), f1);
    }

    #[test]
    fn user_aggregate_threshold_filters_votes() {
        // [m 0.9, f 0.6, m 0.95] at threshold 0.8 → both survivors are m.
        let group = vec![(
            "u1".to_string(),
            vec![
                pred("m", &[("m", 0.9), ("f", 0.1)]),
                pred("f", &[("m", 0.4), ("f", 0.6)]),
                pred("m", &[("m", 0.95), ("f", 0.05)]),
            ],
        )];
        let out = user_aggregate(&group, 0.8).unwrap();
        assert_eq!(out, vec![("u1".to_string(), "m".to_string())]);
    }

    #[test]
    fn user_aggregate_falls_back_when_all_filtered() {
        let group = vec![(
            "solo".to_string(),
            vec![pred("f", &[("m", 0.45), ("f", 0.55)])],
        )];
        let out = user_aggregate(&group, 0.99).unwrap();
        assert_eq!(out[0].1, "f");
    }

    #[test]
    fn user_aggregate_threshold_zero_is_plain_majority() {
        let group = vec![(
            "u".to_string(),
            vec![
                pred("a", &[("a", 0.6), ("b", 0.4)]),
                pred("b", &[("a", 0.3), ("b", 0.7)]),
                pred("a", &[("a", 0.8), ("b", 0.2)]),
            ],
        )];
        let out = user_aggregate(&group, 0.0).unwrap();
        assert_eq!(out[0].1, "a");
    }

    #[test]
    fn user_aggregate_tie_breaks_by_mass_then_order() {
        // 1 vote each; b has more mass.
        let group = vec![(
            "u".to_string(),
            vec![
                pred("a", &[("a", 0.55), ("b", 0.45)]),
                pred("b", &[("a", 0.1), ("b", 0.9)]),
            ],
        )];
        assert_eq!(user_aggregate(&group, 0.0).unwrap()[0].1, "b");
        // Equal mass → label order wins.
        let group = vec![(
            "u".to_string(),
            vec![
                pred("a", &[("a", 0.7), ("b", 0.3)]),
                pred("b", &[("a", 0.3), ("b", 0.7)]),
            ],
        )];
        assert_eq!(user_aggregate(&group, 0.0).unwrap()[0].1, "a");
    }

    #[test]
    fn user_aggregate_validates_threshold() {
        assert!(matches!(
            user_aggregate(&[], 1.5),
            Err(Error::BadThreshold(_))
        ));
        assert!(matches!(
            user_aggregate(&[], -0.1),
            Err(Error::BadThreshold(_))
        ));
    }
}
