//! The dissimilarity space: bags-by-prototypes matrices, prototype
//! selection, and the feature tables fed to the linear classifiers.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Bag, Label, MILDataset};
use crate::distribution::{cs_divergence, emd_capped, mahalanobis_dissim, CSParams};
use crate::error::{MindError, Result};
use crate::pointset::{pointset_dissim, symmetrize, PointSetMeasure, SymmetrizationMode};

/// Any bag-to-bag dissimilarity the toolkit knows, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    PointSet { measure: PointSetMeasure },
    Mahalanobis { ridge: f64 },
    Cs { sigma: f64 },
    Emd { cap: usize },
}

impl Measure {
    pub fn dissim(&self, b_i: &Bag, b_j: &Bag) -> Result<f64> {
        match *self {
            Measure::PointSet { measure } => pointset_dissim(b_i, b_j, measure),
            Measure::Mahalanobis { ridge } => mahalanobis_dissim(b_i, b_j, ridge),
            Measure::Cs { sigma } => cs_divergence(b_i, b_j, CSParams { sigma }),
            Measure::Emd { cap } => emd_capped(b_i, b_j, cap).map(|(cost, _)| cost),
        }
    }

    pub fn is_directed(&self) -> bool {
        matches!(
            self,
            Measure::PointSet { measure } if measure.is_directed()
        )
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Measure::PointSet { measure } => measure.tag(),
            Measure::Mahalanobis { .. } => "mahalanobis",
            Measure::Cs { .. } => "cs",
            Measure::Emd { .. } => "emd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionStrategy {
    All,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeSet {
    pub ids: Vec<String>,
    pub strategy: SelectionStrategy,
    pub seed: u64,
}

/// Picks prototype bags from the training set. `all` keeps every training
/// bag in dataset order; `random` draws M without replacement,
/// deterministically for a given seed.
pub fn select_prototypes(
    training: &MILDataset,
    strategy: SelectionStrategy,
    m: usize,
    seed: u64,
) -> Result<PrototypeSet> {
    let ids: Vec<String> = training.bags.iter().map(|b| b.id.clone()).collect();
    match strategy {
        SelectionStrategy::All => Ok(PrototypeSet {
            ids,
            strategy,
            seed,
        }),
        SelectionStrategy::Random => {
            if m == 0 || m > ids.len() {
                return Err(MindError::InvalidDataset(format!(
                    "cannot select {m} prototypes from {} training bags",
                    ids.len()
                )));
            }
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mut indices: Vec<usize> = (0..ids.len()).collect();
            indices.shuffle(&mut rng);
            indices.truncate(m);
            indices.sort_unstable();
            Ok(PrototypeSet {
                ids: indices.into_iter().map(|i| ids[i].clone()).collect(),
                strategy,
                seed,
            })
        }
    }
}

/// Rectangular bag-by-prototype dissimilarity matrix; possibly asymmetric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissimMatrix {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    /// Row-major, rows x cols.
    pub values: Vec<f64>,
    pub measure_tag: String,
    pub symmetrization_tag: String,
}

impl DissimMatrix {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.col_ids.len() + col]
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn is_square(&self) -> bool {
        self.row_ids == self.col_ids
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n_rows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                dev = dev.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        dev
    }
}

/// Which argument order the matrix entries use for directed measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixDirection {
    /// entry (i, j) = d(B_i, P_j)
    To,
    /// entry (i, j) = d(P_j, B_i)
    From,
}

pub fn compute_matrix(
    bags: &MILDataset,
    prototypes: &PrototypeSet,
    measure: Measure,
    symmetrization: SymmetrizationMode,
) -> Result<DissimMatrix> {
    compute_matrix_directed(bags, prototypes, measure, symmetrization, MatrixDirection::To)
}

/// Computes every (bag, prototype) entry. Entries are independent, so the
/// computation fans out over a thread pool; each entry has a fixed internal
/// reduction order, so the result is bitwise identical for any thread count.
pub fn compute_matrix_directed(
    bags: &MILDataset,
    prototypes: &PrototypeSet,
    measure: Measure,
    symmetrization: SymmetrizationMode,
    direction: MatrixDirection,
) -> Result<DissimMatrix> {
    let protos: Vec<&Bag> = prototypes
        .ids
        .iter()
        .map(|id| {
            bags.bag(id)
                .ok_or_else(|| MindError::IdMismatch(format!("prototype {id} not in dataset")))
        })
        .collect::<Result<_>>()?;
    let n_cols = protos.len();

    let entry = |bag: &Bag, proto: &Bag| -> Result<f64> {
        let wrap = |e: MindError| MindError::MatrixEntry {
            bag: bag.id.clone(),
            prototype: proto.id.clone(),
            source: Box::new(e),
        };
        let (first, second) = match direction {
            MatrixDirection::To => (bag, proto),
            MatrixDirection::From => (proto, bag),
        };
        let forward = measure.dissim(first, second).map_err(wrap)?;
        if measure.is_directed() && symmetrization != SymmetrizationMode::None {
            let backward = measure.dissim(second, first).map_err(wrap)?;
            Ok(symmetrize(forward, backward, symmetrization))
        } else {
            Ok(forward)
        }
    };

    let values: Vec<f64> = bags
        .bags
        .par_iter()
        .map(|bag| -> Result<Vec<f64>> {
            protos.iter().map(|proto| entry(bag, proto)).collect()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?
        .into_iter()
        .flatten()
        .collect();

    debug_assert_eq!(values.len(), bags.bags.len() * n_cols);
    Ok(DissimMatrix {
        row_ids: bags.bags.iter().map(|b| b.id.clone()).collect(),
        col_ids: prototypes.ids.clone(),
        values,
        measure_tag: measure.tag().to_string(),
        symmetrization_tag: symmetrization.tag().to_string(),
    })
}

/// Bags-as-rows numeric table feeding the classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    pub row_ids: Vec<String>,
    pub labels: Vec<Label>,
    pub columns: Vec<String>,
    /// Row-major, rows x columns.
    pub values: Vec<f64>,
}

impl FeatureTable {
    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols()..(i + 1) * self.n_cols()]
    }

    /// Sub-table with only the given row indices.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        let cols = self.n_cols();
        let mut values = Vec::with_capacity(indices.len() * cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureTable {
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            columns: self.columns.clone(),
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentationMode {
    To,
    From,
    Extended,
}

/// Turns dissimilarity matrices into a feature table. `to` uses d(B_i, P_j)
/// columns, `from` uses d(P_j, B_i), `extended` concatenates both into 2M
/// columns. Labels are looked up from the dataset by row id.
pub fn build_representation(
    dataset: &MILDataset,
    d_to: &DissimMatrix,
    d_from: Option<&DissimMatrix>,
    mode: RepresentationMode,
) -> Result<FeatureTable> {
    let labels: Vec<Label> = d_to
        .row_ids
        .iter()
        .map(|id| {
            dataset
                .bag(id)
                .map(|b| b.label)
                .ok_or_else(|| MindError::IdMismatch(format!("row id {id} not in dataset")))
        })
        .collect::<Result<_>>()?;

    let col_names = |m: &DissimMatrix, suffix: &str| -> Vec<String> {
        m.col_ids
            .iter()
            .map(|id| format!("{}:{}{}", m.measure_tag, id, suffix))
            .collect()
    };

    match mode {
        RepresentationMode::To => Ok(FeatureTable {
            row_ids: d_to.row_ids.clone(),
            labels,
            columns: col_names(d_to, ""),
            values: d_to.values.clone(),
        }),
        RepresentationMode::From => {
            let m = d_from.ok_or_else(|| {
                MindError::IdMismatch("from-mode requires the from-direction matrix".into())
            })?;
            if m.row_ids != d_to.row_ids || m.col_ids != d_to.col_ids {
                return Err(MindError::IdMismatch(
                    "to/from matrices disagree on row or column ids".into(),
                ));
            }
            Ok(FeatureTable {
                row_ids: m.row_ids.clone(),
                labels,
                columns: col_names(m, ":from"),
                values: m.values.clone(),
            })
        }
        RepresentationMode::Extended => {
            let m = d_from.ok_or_else(|| {
                MindError::IdMismatch("extended mode requires both matrices".into())
            })?;
            if m.row_ids != d_to.row_ids || m.col_ids != d_to.col_ids {
                return Err(MindError::IdMismatch(
                    "to/from matrices disagree on row or column ids".into(),
                ));
            }
            let n = d_to.n_rows();
            let k = d_to.n_cols();
            let mut values = Vec::with_capacity(n * 2 * k);
            for i in 0..n {
                values.extend_from_slice(&d_to.values[i * k..(i + 1) * k]);
                values.extend_from_slice(&m.values[i * k..(i + 1) * k]);
            }
            let mut columns = col_names(d_to, ":to");
            columns.extend(col_names(m, ":from"));
            Ok(FeatureTable {
                row_ids: d_to.row_ids.clone(),
                labels,
                columns,
                values,
            })
        }
    }
}
