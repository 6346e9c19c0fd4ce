//! Text formats: the instance-per-row dataset table, dissimilarity matrix
//! files, and JSON report documents.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Bag, Instance, Label, MILDataset};
use crate::error::{MindError, Result};
use crate::space::DissimMatrix;

fn label_tag(label: Label) -> &'static str {
    match label {
        Label::Positive => "+1",
        Label::Negative => "-1",
        Label::Unknown => "?",
    }
}

fn parse_label(s: &str, line: usize) -> Result<Label> {
    match s {
        "+1" => Ok(Label::Positive),
        "-1" => Ok(Label::Negative),
        "?" => Ok(Label::Unknown),
        other => Err(MindError::Parse(format!(
            "line {line}: label must be +1, -1 or ?, found {other:?}"
        ))),
    }
}

/// Header "bag_id,label,f0,..,f{d-1}", one instance per row, rows of a bag
/// grouped by id in order of first appearance.
pub fn format_mil_table(dataset: &MILDataset) -> String {
    let mut out = String::from("bag_id,label");
    for k in 0..dataset.dim {
        out.push_str(&format!(",f{k}"));
    }
    out.push('\n');
    for bag in &dataset.bags {
        for inst in &bag.instances {
            out.push_str(&bag.id);
            out.push(',');
            out.push_str(label_tag(bag.label));
            for v in &inst.values {
                // shortest round-trip formatting keeps values bitwise exact
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_mil_table(path: &Path, dataset: &MILDataset) -> Result<()> {
    fs::write(path, format_mil_table(dataset))?;
    Ok(())
}

pub fn parse_mil_table_str(text: &str) -> Result<MILDataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| MindError::Parse("empty file".into()))?;
    let head: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if head.len() < 3 || head[0] != "bag_id" || head[1] != "label" {
        return Err(MindError::Parse(format!(
            "line 1: expected header bag_id,label,f0,.., found {header:?}"
        )));
    }
    let dim = head.len() - 2;
    for (k, name) in head[2..].iter().enumerate() {
        if *name != format!("f{k}") {
            return Err(MindError::Parse(format!(
                "line 1: feature column {} should be f{k}, found {name:?}",
                k + 2
            )));
        }
    }

    let mut order: Vec<String> = Vec::new();
    let mut bags: std::collections::HashMap<String, (Label, Vec<Instance>)> =
        std::collections::HashMap::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != dim + 2 {
            return Err(MindError::Parse(format!(
                "line {line_no}: expected {} fields, found {}",
                dim + 2,
                fields.len()
            )));
        }
        let id = fields[0].to_string();
        let label = parse_label(fields[1], line_no)?;
        let values: Vec<f64> = fields[2..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    MindError::Parse(format!("line {line_no}: bad number {f:?}"))
                })
            })
            .collect::<Result<_>>()?;
        match bags.get_mut(&id) {
            Some((existing, instances)) => {
                if *existing != label {
                    return Err(MindError::Parse(format!("inconsistent label: {id}")));
                }
                instances.push(Instance::new(values));
            }
            None => {
                order.push(id.clone());
                bags.insert(id, (label, vec![Instance::new(values)]));
            }
        }
    }
    let bags = order
        .into_iter()
        .map(|id| {
            let (label, instances) = bags.remove(&id).unwrap();
            Bag::new(id, instances, label)
        })
        .collect();
    Ok(MILDataset::new(bags, dim))
}

pub fn parse_mil_table(path: &Path) -> Result<MILDataset> {
    parse_mil_table_str(&fs::read_to_string(path)?)
}

/// Header line "measure:symmetrization,col ids..", then one row per bag id.
/// Values print with 17 significant digits, so a read is bitwise faithful.
pub fn format_matrix(m: &DissimMatrix) -> String {
    let mut out = format!("{}:{}", m.measure_tag, m.symmetrization_tag);
    for id in &m.col_ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in m.row_ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..m.n_cols() {
            out.push_str(&format!(",{:.16e}", m.get(i, j)));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, m: &DissimMatrix) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

pub fn parse_matrix_str(text: &str) -> Result<DissimMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| MindError::Parse("empty matrix file".into()))?;
    let head: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    let (measure_tag, symmetrization_tag) = head[0]
        .split_once(':')
        .ok_or_else(|| MindError::Parse(format!("bad matrix header cell {:?}", head[0])))?;
    let col_ids: Vec<String> = head[1..].iter().map(|s| s.to_string()).collect();
    if col_ids.is_empty() {
        return Err(MindError::Parse("matrix header lists no column ids".into()));
    }
    let mut row_ids = Vec::new();
    let mut values = Vec::new();
    for (i, raw) in lines {
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != col_ids.len() + 1 {
            return Err(MindError::IdMismatch(format!(
                "line {}: row {:?} has {} values for {} column ids",
                i + 1,
                fields[0],
                fields.len() - 1,
                col_ids.len()
            )));
        }
        row_ids.push(fields[0].to_string());
        for f in &fields[1..] {
            values.push(f.parse::<f64>().map_err(|_| {
                MindError::Parse(format!("line {}: bad number {f:?}", i + 1))
            })?);
        }
    }
    Ok(DissimMatrix {
        row_ids,
        col_ids,
        values,
        measure_tag: measure_tag.to_string(),
        symmetrization_tag: symmetrization_tag.to_string(),
    })
}

pub fn read_matrix(path: &Path) -> Result<DissimMatrix> {
    parse_matrix_str(&fs::read_to_string(path)?)
}

/// Header "bag_id,label,<column names>", one bag per row, shortest
/// round-trip number formatting.
pub fn format_feature_table(t: &crate::space::FeatureTable) -> String {
    let mut out = String::from("bag_id,label");
    for c in &t.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for i in 0..t.n_rows() {
        out.push_str(&t.row_ids[i]);
        out.push(',');
        out.push_str(label_tag(t.labels[i]));
        for v in t.row(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_feature_table(path: &Path, t: &crate::space::FeatureTable) -> Result<()> {
    fs::write(path, format_feature_table(t))?;
    Ok(())
}

/// Every report file carries the toolkit version next to the payload; the
/// payload types echo their own config and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument<T> {
    pub toolkit_version: String,
    pub report: T,
}

pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    let doc = ReportDocument {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        report,
    };
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| MindError::Parse(format!("serialization failed: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

pub fn read_report<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<ReportDocument<T>> {
    serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| MindError::Parse(format!("bad report file: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_concept, gen_multiconcept, GenConfig};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn small_sample_parses_into_expected_bags() {
        let text = "bag_id,label,f0,f1\nb1,+1,0,1.5\nb1,+1,2,3\nb2,-1,4,5\n";
        let ds = parse_mil_table_str(text).unwrap();
        assert_eq!(ds.dim, 2);
        assert_eq!(ds.bags.len(), 2);
        assert_eq!(ds.bags[0].instances.len(), 2);
        assert_eq!(ds.bags[1].instances.len(), 1);
        assert_eq!(ds.bags[0].label, Label::Positive);
        assert_eq!(ds.bags[1].instances[0].values, vec![4.0, 5.0]);
    }

    #[test]
    fn generated_datasets_round_trip_bitwise() {
        for ds in [
            gen_concept(&GenConfig::default()),
            gen_multiconcept(&GenConfig {
                bags_per_class: 5,
                instances_per_bag: 4,
                dim: 3,
                seed: 8,
            }),
        ] {
            let parsed = parse_mil_table_str(&format_mil_table(&ds)).unwrap();
            assert_eq!(parsed, ds);
        }
    }

    #[test]
    fn unknown_labels_round_trip() {
        let text = "bag_id,label,f0\nq,?,1\n";
        let ds = parse_mil_table_str(text).unwrap();
        assert_eq!(ds.bags[0].label, Label::Unknown);
        assert_eq!(format_mil_table(&ds), text);
    }

    #[test]
    fn inconsistent_label_names_the_bag() {
        let text = "bag_id,label,f0\nb1,+1,0\nb1,-1,1\n";
        let err = parse_mil_table_str(text).unwrap_err();
        assert_eq!(err.to_string(), "inconsistent label: b1");
    }

    #[test]
    fn ragged_row_reports_line_number() {
        let text = "bag_id,label,f0,f1\nb1,+1,0,1\nb1,+1,2\n";
        let err = parse_mil_table_str(text).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_mil_table_str("id,label,f0\nb,+1,0\n").is_err());
        assert!(parse_mil_table_str("bag_id,label,f1\nb,+1,0\n").is_err());
    }

    fn random_matrix(rows: usize, cols: usize) -> DissimMatrix {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        DissimMatrix {
            row_ids: (0..rows).map(|i| format!("r{i}")).collect(),
            col_ids: (0..cols).map(|j| format!("c{j}")).collect(),
            values: (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            measure_tag: "meanmin".into(),
            symmetrization_tag: "avg".into(),
        }
    }

    #[test]
    fn matrix_round_trip_is_bitwise() {
        let m = random_matrix(5, 3);
        let back = parse_matrix_str(&format_matrix(&m)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn one_by_one_matrix_is_two_lines() {
        let m = random_matrix(1, 1);
        let text = format_matrix(&m);
        assert_eq!(text.trim_end().lines().count(), 2);
        assert_eq!(parse_matrix_str(&text).unwrap(), m);
    }

    #[test]
    fn short_matrix_row_is_an_error() {
        let text = "minmin:none,c0,c1\nr0,1.0\n";
        assert!(matches!(
            parse_matrix_str(text),
            Err(MindError::IdMismatch(_))
        ));
    }

    #[test]
    fn report_document_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let payload = vec![0.25f64, 1.0 / 3.0];
        write_report(&path, &payload).unwrap();
        let doc: ReportDocument<Vec<f64>> = read_report(&path).unwrap();
        assert_eq!(doc.report, payload);
        assert_eq!(doc.toolkit_version, env!("CARGO_PKG_VERSION"));
    }
}
