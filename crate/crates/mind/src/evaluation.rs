//! AUC, repeated stratified k-fold cross-validation over the full
//! pipeline, and learning curves over training-set size.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::altreps::{miles_rep, minimax_rep, MilesParams};
use crate::classifiers::{
    predict_scores, train_linear_svm, train_logistic, LinearModel, TrainConfig,
};
use crate::data::{Bag, Label, MILDataset};
use crate::error::{MindError, Result};
use crate::pointset::SymmetrizationMode;
use crate::space::{
    build_representation, compute_matrix_directed, select_prototypes, FeatureTable,
    MatrixDirection, Measure, RepresentationMode, SelectionStrategy,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Representation {
    Dissim {
        measure: Measure,
        symmetrization: SymmetrizationMode,
        mode: RepresentationMode,
    },
    Minimax,
    Miles {
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Logistic,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub representation: Representation,
    pub classifier: ClassifierKind,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CVConfig {
    pub folds: usize,
    pub repeats: usize,
    pub seed: u64,
    pub pipeline: PipelineSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub matrix_build_secs: f64,
    pub train_secs: f64,
    pub test_secs: f64,
}

impl PhaseTimings {
    fn add(&mut self, other: &PhaseTimings) {
        self.matrix_build_secs += other.matrix_build_secs;
        self.train_secs += other.train_secs;
        self.test_secs += other.test_secs;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_fold_auc: Vec<f64>,
    pub mean_auc: f64,
    /// Sample standard deviation of fold AUCs over sqrt(folds * repeats).
    pub std_error: f64,
    pub timings: PhaseTimings,
    pub config: CVConfig,
}

/// Mann-Whitney AUC: probability a random positive outscores a random
/// negative, ties counted one half.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    assert_eq!(scores.len(), labels.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let n_pos = labels.iter().filter(|&&l| l == Label::Positive).count();
    let n_neg = labels.iter().filter(|&&l| l == Label::Negative).count();
    if let Some(i) = labels.iter().position(|&l| l == Label::Unknown) {
        return Err(MindError::UnknownLabel(format!("index {i}")));
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(MindError::SingleClass);
    }
    // average ranks over tie groups, then the rank-sum statistic
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            if labels[idx] == Label::Positive {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let p = n_pos as f64;
    let n = n_neg as f64;
    Ok((rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n))
}

/// Everything one train/test split produces; exposed so protocol checks
/// can compare models and tables across label perturbations.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub table: FeatureTable,
    pub model: LinearModel,
    pub test_scores: Vec<f64>,
    pub auc: f64,
    pub timings: PhaseTimings,
}

/// Trains on `train_idx`, scores `test_idx`. Test bags enter the pipeline
/// with their labels stripped; held-out labels are used only for the final
/// AUC.
pub fn run_fold(
    dataset: &MILDataset,
    train_idx: &[usize],
    test_idx: &[usize],
    pipeline: &PipelineSpec,
) -> Result<FoldResult> {
    let train_bags: Vec<Bag> = train_idx.iter().map(|&i| dataset.bags[i].clone()).collect();
    let mut combined_bags = train_bags.clone();
    combined_bags.extend(test_idx.iter().map(|&i| {
        let mut bag = dataset.bags[i].clone();
        bag.label = Label::Unknown;
        bag
    }));
    let combined = MILDataset::new(combined_bags, dataset.dim);
    let train_only = MILDataset::new(train_bags, dataset.dim);

    let build_start = Instant::now();
    let table = match pipeline.representation {
        Representation::Dissim {
            measure,
            symmetrization,
            mode,
        } => {
            let prototypes =
                select_prototypes(&train_only, SelectionStrategy::All, 0, 0)?;
            let d_to = compute_matrix_directed(
                &combined,
                &prototypes,
                measure,
                symmetrization,
                MatrixDirection::To,
            )?;
            let d_from = match mode {
                RepresentationMode::To => None,
                _ => Some(compute_matrix_directed(
                    &combined,
                    &prototypes,
                    measure,
                    symmetrization,
                    MatrixDirection::From,
                )?),
            };
            build_representation(&combined, &d_to, d_from.as_ref(), mode)?
        }
        Representation::Minimax => minimax_rep(&combined)?,
        Representation::Miles { sigma } => {
            let targets = crate::altreps::all_instances(&train_only);
            miles_rep(&combined, &targets, MilesParams { sigma })?
        }
    };
    let matrix_build_secs = build_start.elapsed().as_secs_f64();

    let n_train = train_idx.len();
    let train_rows: Vec<usize> = (0..n_train).collect();
    let test_rows: Vec<usize> = (n_train..n_train + test_idx.len()).collect();
    let train_table = table.select_rows(&train_rows);

    let train_start = Instant::now();
    let model = match pipeline.classifier {
        ClassifierKind::Logistic => train_logistic(&train_table, &pipeline.train)?,
        ClassifierKind::Svm => train_linear_svm(&train_table, &pipeline.train)?,
    };
    let train_secs = train_start.elapsed().as_secs_f64();

    let test_start = Instant::now();
    let test_table = table.select_rows(&test_rows);
    let test_scores = predict_scores(&model, &test_table)?;
    let test_labels: Vec<Label> = test_idx.iter().map(|&i| dataset.bags[i].label).collect();
    let fold_auc = auc(&test_scores, &test_labels)?;
    let test_secs = test_start.elapsed().as_secs_f64();

    Ok(FoldResult {
        table,
        model,
        test_scores,
        auc: fold_auc,
        timings: PhaseTimings {
            matrix_build_secs,
            train_secs,
            test_secs,
        },
    })
}

fn class_indices(dataset: &MILDataset) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, bag) in dataset.bags.iter().enumerate() {
        match bag.label {
            Label::Positive => pos.push(i),
            Label::Negative => neg.push(i),
            Label::Unknown => return Err(MindError::UnknownLabel(bag.id.clone())),
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(MindError::SingleClass);
    }
    Ok((pos, neg))
}

/// Stratified fold assignment: shuffled class lists dealt round-robin, so
/// per-fold class proportions stay within one bag of each other.
fn stratified_folds(
    pos: &[usize],
    neg: &[usize],
    folds: usize,
    rng: &mut ChaCha20Rng,
) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > pos.len() || folds > neg.len() {
        return Err(MindError::FoldWithoutBothClasses);
    }
    let mut pos = pos.to_vec();
    let mut neg = neg.to_vec();
    pos.shuffle(rng);
    neg.shuffle(rng);
    let mut assignment = vec![Vec::new(); folds];
    for (i, &idx) in pos.iter().enumerate() {
        assignment[i % folds].push(idx);
    }
    for (i, &idx) in neg.iter().enumerate() {
        assignment[i % folds].push(idx);
    }
    Ok(assignment)
}

pub fn cross_validate(dataset: &MILDataset, config: &CVConfig) -> Result<EvalReport> {
    let (pos, neg) = class_indices(dataset)?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut per_fold_auc = Vec::with_capacity(config.folds * config.repeats);
    let mut timings = PhaseTimings::default();
    for _repeat in 0..config.repeats {
        let folds = stratified_folds(&pos, &neg, config.folds, &mut rng)?;
        for f in 0..config.folds {
            let test_idx = &folds[f];
            let train_idx: Vec<usize> = (0..config.folds)
                .filter(|&g| g != f)
                .flat_map(|g| folds[g].iter().copied())
                .collect();
            let result = run_fold(dataset, &train_idx, test_idx, &config.pipeline)?;
            per_fold_auc.push(result.auc);
            timings.add(&result.timings);
        }
    }
    let mean = per_fold_auc.iter().sum::<f64>() / per_fold_auc.len() as f64;
    let std_error = sample_std(&per_fold_auc, mean) / (per_fold_auc.len() as f64).sqrt();
    Ok(EvalReport {
        per_fold_auc,
        mean_auc: mean,
        std_error,
        timings,
        config: *config,
    })
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub requested_per_class: usize,
    pub actual_positive: usize,
    pub actual_negative: usize,
    pub capped: bool,
    pub per_iteration_auc: Vec<f64>,
    pub mean_auc: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurveReport {
    pub sizes: Vec<SizeReport>,
    pub iterations: usize,
    pub seed: u64,
    pub pipeline: PipelineSpec,
}

/// Per iteration an 80/20 stratified split; the training set is then
/// subsampled to each requested bags-per-class size, capped at what is
/// available, while the test partition stays fixed across sizes.
pub fn learning_curve(
    dataset: &MILDataset,
    sizes: &[usize],
    iterations: usize,
    seed: u64,
    pipeline: &PipelineSpec,
) -> Result<LearningCurveReport> {
    let (pos, neg) = class_indices(dataset)?;
    let test_pos = (pos.len() / 5).max(1);
    let test_neg = (neg.len() / 5).max(1);
    if test_pos >= pos.len() || test_neg >= neg.len() {
        return Err(MindError::FoldWithoutBothClasses);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut per_size_auc: Vec<Vec<f64>> = vec![Vec::new(); sizes.len()];
    let mut actual = vec![(0usize, 0usize); sizes.len()];
    for _iter in 0..iterations {
        let mut pos_shuffled = pos.clone();
        let mut neg_shuffled = neg.clone();
        pos_shuffled.shuffle(&mut rng);
        neg_shuffled.shuffle(&mut rng);
        let (test_p, train_p) = pos_shuffled.split_at(test_pos);
        let (test_n, train_n) = neg_shuffled.split_at(test_neg);
        let test_idx: Vec<usize> = test_p.iter().chain(test_n).copied().collect();
        for (s, &size) in sizes.iter().enumerate() {
            let take_p = size.min(train_p.len());
            let take_n = size.min(train_n.len());
            actual[s] = (take_p, take_n);
            let train_idx: Vec<usize> = train_p[..take_p]
                .iter()
                .chain(&train_n[..take_n])
                .copied()
                .collect();
            let result = run_fold(dataset, &train_idx, &test_idx, pipeline)?;
            per_size_auc[s].push(result.auc);
        }
    }
    let sizes_out = sizes
        .iter()
        .enumerate()
        .map(|(s, &size)| {
            let aucs = &per_size_auc[s];
            let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
            SizeReport {
                requested_per_class: size,
                actual_positive: actual[s].0,
                actual_negative: actual[s].1,
                capped: actual[s].0 < size || actual[s].1 < size,
                per_iteration_auc: aucs.clone(),
                mean_auc: mean,
                std_error: sample_std(aucs, mean) / (aucs.len() as f64).sqrt(),
            }
        })
        .collect();
    Ok(LearningCurveReport {
        sizes: sizes_out,
        iterations,
        seed,
        pipeline: *pipeline,
    })
}
