//! Point-set bag dissimilarities built from pairwise squared Euclidean
//! instance distances, plus symmetrization of directed values.

use serde::{Deserialize, Serialize};

use crate::data::{Bag, Instance};
use crate::error::{MindError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSetMeasure {
    MinMin,
    MeanMin,
    MaxMin,
    Hausdorff,
    MeanMean,
}

impl PointSetMeasure {
    /// meanmin and maxmin depend on the argument order; the rest do not.
    pub fn is_directed(&self) -> bool {
        matches!(self, PointSetMeasure::MeanMin | PointSetMeasure::MaxMin)
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PointSetMeasure::MinMin => "minmin",
            PointSetMeasure::MeanMin => "meanmin",
            PointSetMeasure::MaxMin => "maxmin",
            PointSetMeasure::Hausdorff => "hausdorff",
            PointSetMeasure::MeanMean => "meanmean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrizationMode {
    None,
    Average,
    Min,
    Max,
}

impl SymmetrizationMode {
    pub fn tag(&self) -> &'static str {
        match self {
            SymmetrizationMode::None => "none",
            SymmetrizationMode::Average => "avg",
            SymmetrizationMode::Min => "min",
            SymmetrizationMode::Max => "max",
        }
    }
}

pub fn sq_euclidean(x: &Instance, y: &Instance) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(MindError::DimensionMismatch(format!(
            "instance dims {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    Ok(sq_euclidean_unchecked(&x.values, &y.values))
}

#[inline]
pub(crate) fn sq_euclidean_unchecked(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

fn check_bags(a: &Bag, b: &Bag) -> Result<()> {
    for bag in [a, b] {
        if bag.instances.is_empty() {
            return Err(MindError::EmptyBag(bag.id.clone()));
        }
    }
    let da = a.instances[0].dim();
    let db = b.instances[0].dim();
    if da != db {
        return Err(MindError::DimensionMismatch(format!(
            "bags {} ({}-d) vs {} ({}-d)",
            a.id, da, b.id, db
        )));
    }
    Ok(())
}

/// Directed min distance from each instance of `from` to the whole of `to`.
fn min_rows(from: &Bag, to: &Bag) -> Vec<f64> {
    from.instances
        .iter()
        .map(|x| {
            to.instances
                .iter()
                .map(|y| sq_euclidean_unchecked(&x.values, &y.values))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

fn maxmin(from: &Bag, to: &Bag) -> f64 {
    min_rows(from, to).into_iter().fold(0.0, f64::max)
}

/// Bag-to-bag dissimilarity. meanmin and maxmin are directed (`b_i` to
/// `b_j`); minmin, hausdorff and meanmean are symmetric by construction.
pub fn pointset_dissim(b_i: &Bag, b_j: &Bag, measure: PointSetMeasure) -> Result<f64> {
    check_bags(b_i, b_j)?;
    let value = match measure {
        PointSetMeasure::MinMin => min_rows(b_i, b_j).into_iter().fold(f64::INFINITY, f64::min),
        PointSetMeasure::MeanMin => {
            let rows = min_rows(b_i, b_j);
            rows.iter().sum::<f64>() / rows.len() as f64
        }
        PointSetMeasure::MaxMin => maxmin(b_i, b_j),
        PointSetMeasure::Hausdorff => maxmin(b_i, b_j).max(maxmin(b_j, b_i)),
        PointSetMeasure::MeanMean => {
            let mut total = 0.0;
            for x in &b_i.instances {
                for y in &b_j.instances {
                    total += sq_euclidean_unchecked(&x.values, &y.values);
                }
            }
            total / (b_i.size() * b_j.size()) as f64
        }
    };
    Ok(value)
}

pub fn symmetrize(value_ij: f64, value_ji: f64, mode: SymmetrizationMode) -> f64 {
    match mode {
        SymmetrizationMode::None => value_ij,
        SymmetrizationMode::Average => 0.5 * (value_ij + value_ji),
        SymmetrizationMode::Min => value_ij.min(value_ji),
        SymmetrizationMode::Max => value_ij.max(value_ji),
    }
}
