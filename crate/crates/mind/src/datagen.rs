//! Seeded generators for the three artificial problems: Concept,
//! Distribution and Multi-concept. All randomness comes from ChaCha20
//! streams, so a seed reproduces the same dataset on any platform.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Bag, Instance, Label, MILDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub bags_per_class: usize,
    /// Instances per bag (S).
    pub instances_per_bag: usize,
    pub dim: usize,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            bags_per_class: 50,
            instances_per_bag: 10,
            dim: 2,
            seed: 0,
        }
    }
}

fn gaussian_instance(rng: &mut ChaCha20Rng, mean: &[f64], std: f64) -> Instance {
    let normal = Normal::new(0.0, std).unwrap();
    Instance::new(mean.iter().map(|m| m + normal.sample(rng)).collect())
}

/// Positive bags carry one draw from a dense concept at the origin
/// (std 0.1) among wide background instances (std 2); negative bags are
/// all background.
pub fn gen_concept(config: &GenConfig) -> MILDataset {
    assert!(config.instances_per_bag >= 1);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let zero = vec![0.0; config.dim];
    let mut bags = Vec::with_capacity(2 * config.bags_per_class);
    for b in 0..config.bags_per_class {
        let mut instances: Vec<Instance> = (0..config.instances_per_bag - 1)
            .map(|_| gaussian_instance(&mut rng, &zero, 2.0))
            .collect();
        instances.push(gaussian_instance(&mut rng, &zero, 0.1));
        bags.push(Bag::new(format!("p{b}"), instances, Label::Positive));
    }
    for b in 0..config.bags_per_class {
        let instances = (0..config.instances_per_bag)
            .map(|_| gaussian_instance(&mut rng, &zero, 2.0))
            .collect();
        bags.push(Bag::new(format!("n{b}"), instances, Label::Negative));
    }
    MILDataset::new(bags, config.dim)
}

/// Overlapping class-conditional instance distributions: positives drawn
/// around (+0.5, 0, ...) and negatives around (-0.5, 0, ...), both std 1.
pub fn gen_distribution(config: &GenConfig) -> MILDataset {
    assert!(config.instances_per_bag >= 2);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut pos_mean = vec![0.0; config.dim];
    pos_mean[0] = 0.5;
    let mut neg_mean = vec![0.0; config.dim];
    neg_mean[0] = -0.5;
    let mut bags = Vec::with_capacity(2 * config.bags_per_class);
    for b in 0..config.bags_per_class {
        let instances = (0..config.instances_per_bag)
            .map(|_| gaussian_instance(&mut rng, &pos_mean, 1.0))
            .collect();
        bags.push(Bag::new(format!("p{b}"), instances, Label::Positive));
    }
    for b in 0..config.bags_per_class {
        let instances = (0..config.instances_per_bag)
            .map(|_| gaussian_instance(&mut rng, &neg_mean, 1.0))
            .collect();
        bags.push(Bag::new(format!("n{b}"), instances, Label::Negative));
    }
    MILDataset::new(bags, config.dim)
}

/// All-background core (std 1); each positive bag replaces one instance by
/// an outlying draw at radius uniform in [4, 6], uniform random direction.
pub fn gen_multiconcept(config: &GenConfig) -> MILDataset {
    assert!(config.instances_per_bag >= 2);
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let zero = vec![0.0; config.dim];
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut bags = Vec::with_capacity(2 * config.bags_per_class);
    for b in 0..config.bags_per_class {
        let mut instances: Vec<Instance> = (0..config.instances_per_bag - 1)
            .map(|_| gaussian_instance(&mut rng, &zero, 1.0))
            .collect();
        // uniform direction via a normalized gaussian draw
        let mut direction: Vec<f64> = (0..config.dim).map(|_| unit.sample(&mut rng)).collect();
        let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let radius = rng.gen_range(4.0..6.0);
        for v in &mut direction {
            *v *= radius / norm;
        }
        instances.push(Instance::new(direction));
        bags.push(Bag::new(format!("p{b}"), instances, Label::Positive));
    }
    for b in 0..config.bags_per_class {
        let instances = (0..config.instances_per_bag)
            .map(|_| gaussian_instance(&mut rng, &zero, 1.0))
            .collect();
        bags.push(Bag::new(format!("n{b}"), instances, Label::Negative));
    }
    MILDataset::new(bags, config.dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{dataset_summary, validate_dataset};

    fn config() -> GenConfig {
        GenConfig {
            bags_per_class: 20,
            instances_per_bag: 10,
            dim: 2,
            seed: 42,
        }
    }

    #[test]
    fn generators_produce_valid_balanced_datasets() {
        for ds in [
            gen_concept(&config()),
            gen_distribution(&config()),
            gen_multiconcept(&config()),
        ] {
            assert!(validate_dataset(&ds).is_empty());
            let summary = dataset_summary(&ds);
            assert_eq!(summary.positive_bags, 20);
            assert_eq!(summary.negative_bags, 20);
            assert_eq!(summary.total_instances, 400);
        }
    }

    #[test]
    fn same_seed_reproduces_dataset() {
        assert_eq!(gen_concept(&config()), gen_concept(&config()));
        assert_eq!(gen_distribution(&config()), gen_distribution(&config()));
        assert_eq!(gen_multiconcept(&config()), gen_multiconcept(&config()));
        let mut other = config();
        other.seed = 43;
        assert_ne!(gen_concept(&config()), gen_concept(&other));
    }

    #[test]
    fn concept_bags_have_exactly_one_concept_draw() {
        // concept instances sit within a tight radius of the origin; with
        // background std 2 a radius of 0.5 separates them reliably enough
        // for counting
        let ds = gen_concept(&config());
        for bag in ds.bags.iter().filter(|b| b.label == Label::Positive) {
            let near = bag
                .instances
                .iter()
                .filter(|i| i.values.iter().map(|v| v * v).sum::<f64>().sqrt() < 0.5)
                .count();
            assert!(near >= 1, "bag {} has no concept-like instance", bag.id);
        }
    }

    #[test]
    fn multiconcept_positive_bags_have_an_outlier() {
        let ds = gen_multiconcept(&config());
        for bag in &ds.bags {
            let max_norm = bag
                .instances
                .iter()
                .map(|i| i.values.iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0f64, f64::max);
            match bag.label {
                Label::Positive => {
                    assert!(max_norm >= 4.0, "bag {} max norm {max_norm}", bag.id)
                }
                _ => assert!(max_norm < 6.0),
            }
        }
    }
}
