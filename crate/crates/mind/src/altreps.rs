//! Baseline bag representations that reuse the same linear classifiers:
//! the Minimax per-feature summary and a MILES-style instance-similarity
//! representation.

use serde::{Deserialize, Serialize};

use crate::data::{Instance, MILDataset};
use crate::error::Result;
use crate::pointset::sq_euclidean_unchecked;
use crate::space::FeatureTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilesParams {
    pub sigma: f64,
}

impl Default for MilesParams {
    fn default() -> Self {
        MilesParams { sigma: 10.0 }
    }
}

/// Per bag: 2d columns, per-feature minimum over instances first (feature
/// order), then per-feature maximum.
pub fn minimax_rep(bags: &MILDataset) -> Result<FeatureTable> {
    let d = bags.dim;
    let mut values = Vec::with_capacity(bags.bags.len() * 2 * d);
    for bag in &bags.bags {
        let mut mins = vec![f64::INFINITY; d];
        let mut maxes = vec![f64::NEG_INFINITY; d];
        for inst in &bag.instances {
            for k in 0..d {
                mins[k] = mins[k].min(inst.values[k]);
                maxes[k] = maxes[k].max(inst.values[k]);
            }
        }
        values.extend_from_slice(&mins);
        values.extend_from_slice(&maxes);
    }
    let mut columns: Vec<String> = (0..d).map(|k| format!("min:f{k}")).collect();
    columns.extend((0..d).map(|k| format!("max:f{k}")));
    Ok(FeatureTable {
        row_ids: bags.bags.iter().map(|b| b.id.clone()).collect(),
        labels: bags.bags.iter().map(|b| b.label).collect(),
        columns,
        values,
    })
}

/// Feature j of bag B = max over instances x of exp(-||x - t_j||^2 / sigma^2),
/// one column per training instance, in the given instance order.
pub fn miles_rep(
    bags: &MILDataset,
    training_instances: &[Instance],
    params: MilesParams,
) -> Result<FeatureTable> {
    let inv = 1.0 / (params.sigma * params.sigma);
    let mut values = Vec::with_capacity(bags.bags.len() * training_instances.len());
    for bag in &bags.bags {
        for target in training_instances {
            let sim = bag
                .instances
                .iter()
                .map(|x| (-sq_euclidean_unchecked(&x.values, &target.values) * inv).exp())
                .fold(0.0f64, f64::max);
            values.push(sim);
        }
    }
    Ok(FeatureTable {
        row_ids: bags.bags.iter().map(|b| b.id.clone()).collect(),
        labels: bags.bags.iter().map(|b| b.label).collect(),
        columns: (0..training_instances.len())
            .map(|j| format!("miles:t{j}"))
            .collect(),
        values,
    })
}

/// All instances of the given dataset in bag order, the column order MILES
/// uses when the training set is the instance source.
pub fn all_instances(dataset: &MILDataset) -> Vec<Instance> {
    dataset
        .bags
        .iter()
        .flat_map(|b| b.instances.iter().cloned())
        .collect()
}
