//! Domain types for multiple instance data: instances, bags and datasets.

use serde::{Deserialize, Serialize};

use crate::error::{MindError, Result};

/// A single feature vector inside a bag. Its label is never observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub values: Vec<f64>,
}

impl Instance {
    pub fn new(values: Vec<f64>) -> Self {
        Instance { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
    Unknown,
}

impl Label {
    /// +1/-1 encoding used by the classifiers; unknown labels are rejected.
    pub fn sign(&self, bag_id: &str) -> Result<f64> {
        match self {
            Label::Positive => Ok(1.0),
            Label::Negative => Ok(-1.0),
            Label::Unknown => Err(MindError::UnknownLabel(bag_id.to_string())),
        }
    }
}

/// A set of instances classified as one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    pub id: String,
    pub instances: Vec<Instance>,
    pub label: Label,
}

impl Bag {
    pub fn new(id: impl Into<String>, instances: Vec<Instance>, label: Label) -> Self {
        Bag {
            id: id.into(),
            instances,
            label,
        }
    }

    pub fn size(&self) -> usize {
        self.instances.len()
    }
}

/// A collection of bags sharing one instance dimensionality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MILDataset {
    pub bags: Vec<Bag>,
    pub dim: usize,
}

impl MILDataset {
    pub fn new(bags: Vec<Bag>, dim: usize) -> Self {
        MILDataset { bags, dim }
    }

    pub fn bag(&self, id: &str) -> Option<&Bag> {
        self.bags.iter().find(|b| b.id == id)
    }
}

/// One broken invariant, naming the offending bag and rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub bag_id: String,
    pub rule: String,
}

/// Checks every dataset invariant. Violations are data, not failures.
pub fn validate_dataset(dataset: &MILDataset) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for bag in &dataset.bags {
        if !seen.insert(bag.id.as_str()) {
            violations.push(Violation {
                bag_id: bag.id.clone(),
                rule: "duplicate bag id".to_string(),
            });
        }
        if bag.instances.is_empty() {
            violations.push(Violation {
                bag_id: bag.id.clone(),
                rule: "empty bag".to_string(),
            });
        }
        for inst in &bag.instances {
            if inst.dim() != dataset.dim {
                violations.push(Violation {
                    bag_id: bag.id.clone(),
                    rule: "dimension mismatch".to_string(),
                });
                break;
            }
        }
        for inst in &bag.instances {
            if !inst.is_finite() {
                violations.push(Violation {
                    bag_id: bag.id.clone(),
                    rule: "non-finite value".to_string(),
                });
                break;
            }
        }
    }
    violations
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub positive_bags: usize,
    pub negative_bags: usize,
    pub unknown_bags: usize,
    pub dim: usize,
    pub total_instances: usize,
    pub min_bag_size: usize,
    pub avg_bag_size: f64,
    pub max_bag_size: usize,
}

pub fn dataset_summary(dataset: &MILDataset) -> DatasetSummary {
    let mut positive = 0;
    let mut negative = 0;
    let mut unknown = 0;
    let mut total = 0;
    let mut min_size = usize::MAX;
    let mut max_size = 0;
    for bag in &dataset.bags {
        match bag.label {
            Label::Positive => positive += 1,
            Label::Negative => negative += 1,
            Label::Unknown => unknown += 1,
        }
        total += bag.size();
        min_size = min_size.min(bag.size());
        max_size = max_size.max(bag.size());
    }
    if dataset.bags.is_empty() {
        min_size = 0;
    }
    let avg = if dataset.bags.is_empty() {
        0.0
    } else {
        total as f64 / dataset.bags.len() as f64
    };
    DatasetSummary {
        positive_bags: positive,
        negative_bags: negative,
        unknown_bags: unknown,
        dim: dataset.dim,
        total_instances: total,
        min_bag_size: min_size,
        avg_bag_size: avg,
        max_bag_size: max_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag2d(id: &str, points: &[(f64, f64)], label: Label) -> Bag {
        Bag::new(
            id,
            points
                .iter()
                .map(|&(a, b)| Instance::new(vec![a, b]))
                .collect(),
            label,
        )
    }

    #[test]
    fn consistent_dataset_is_ok() {
        let ds = MILDataset::new(
            vec![
                bag2d("a", &[(0.0, 0.0), (1.0, 1.0)], Label::Positive),
                bag2d("b", &[(2.0, 2.0)], Label::Negative),
            ],
            2,
        );
        assert!(validate_dataset(&ds).is_empty());
    }

    #[test]
    fn empty_bag_is_flagged() {
        let ds = MILDataset::new(vec![Bag::new("e", vec![], Label::Positive)], 2);
        let violations = validate_dataset(&ds);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, "empty bag");
        assert_eq!(violations[0].bag_id, "e");
    }

    #[test]
    fn mixed_dims_are_flagged() {
        let ds = MILDataset::new(
            vec![
                bag2d("a", &[(0.0, 0.0)], Label::Positive),
                Bag::new(
                    "b",
                    vec![Instance::new(vec![1.0, 2.0, 3.0])],
                    Label::Negative,
                ),
            ],
            2,
        );
        let violations = validate_dataset(&ds);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, "dimension mismatch");
        assert_eq!(violations[0].bag_id, "b");
    }

    #[test]
    fn duplicate_ids_are_flagged() {
        let ds = MILDataset::new(
            vec![
                bag2d("a", &[(0.0, 0.0)], Label::Positive),
                bag2d("a", &[(1.0, 1.0)], Label::Negative),
            ],
            2,
        );
        assert_eq!(validate_dataset(&ds)[0].rule, "duplicate bag id");
    }

    #[test]
    fn validate_is_idempotent() {
        let ds = MILDataset::new(vec![Bag::new("e", vec![], Label::Positive)], 2);
        assert_eq!(validate_dataset(&ds), validate_dataset(&ds));
    }

    #[test]
    fn summary_counts_single_bag() {
        let ds = MILDataset::new(
            vec![bag2d(
                "p0",
                &[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)],
                Label::Positive,
            )],
            2,
        );
        let s = dataset_summary(&ds);
        assert_eq!(s.positive_bags, 1);
        assert_eq!(s.negative_bags, 0);
        assert_eq!(s.dim, 2);
        assert_eq!(s.total_instances, 3);
        assert_eq!(s.min_bag_size, 3);
        assert_eq!(s.avg_bag_size, 3.0);
        assert_eq!(s.max_bag_size, 3);
    }

    #[test]
    fn summary_of_empty_dataset_is_zero() {
        let s = dataset_summary(&MILDataset::new(vec![], 2));
        assert_eq!(s.positive_bags, 0);
        assert_eq!(s.negative_bags, 0);
        assert_eq!(s.total_instances, 0);
        assert_eq!(s.min_bag_size, 0);
        assert_eq!(s.avg_bag_size, 0.0);
        assert_eq!(s.max_bag_size, 0);
    }

    #[test]
    fn summary_total_matches_per_bag_sum() {
        let ds = MILDataset::new(
            vec![
                bag2d("a", &[(0.0, 0.0), (1.0, 1.0)], Label::Positive),
                bag2d("b", &[(2.0, 2.0)], Label::Negative),
                bag2d("c", &[(3.0, 3.0), (4.0, 4.0), (5.0, 5.0)], Label::Unknown),
            ],
            2,
        );
        let s = dataset_summary(&ds);
        let per_bag: usize = ds.bags.iter().map(Bag::size).sum();
        assert_eq!(s.total_instances, per_bag);
        assert_eq!(s.unknown_bags, 1);
    }
}
