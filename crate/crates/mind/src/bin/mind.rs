use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mind::analysis::{nef_ner, nmf, MetricityReport, SpectrumReport};
use mind::classifiers::TrainConfig;
use mind::data::{dataset_summary, validate_dataset, MILDataset};
use mind::datagen::{gen_concept, gen_distribution, gen_multiconcept, GenConfig};
use mind::distribution::{CSParams, DEFAULT_EMD_CAP};
use mind::error::{MindError, Result};
use mind::evaluation::{
    cross_validate, learning_curve, CVConfig, ClassifierKind, PipelineSpec, Representation,
};
use mind::io::{
    parse_mil_table, read_matrix, write_feature_table, write_matrix, write_mil_table,
    write_report,
};
use mind::pointset::{PointSetMeasure, SymmetrizationMode};
use mind::space::{
    build_representation, compute_matrix_directed, select_prototypes, DissimMatrix,
    MatrixDirection, Measure, RepresentationMode, SelectionStrategy,
};

#[derive(Parser)]
#[command(name = "mind", version, about = "Multiple instance learning with bag dissimilarities")]
struct Cli {
    /// Worker threads for matrix builds (default: all cores)
    #[arg(long, global = true, env = "MIND_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset
    Gen {
        #[arg(long)]
        problem: ProblemArg,
        #[arg(long, default_value_t = 50)]
        bags_per_class: usize,
        /// Instances per bag
        #[arg(long, default_value_t = 10)]
        instances: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Compute the square bag-by-bag dissimilarity matrix of a dataset
    Dissim {
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write the dissimilarity-space feature table of a dataset
    Represent {
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, value_enum, default_value_t = RepArg::To)]
        representation: RepArg,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Repeated stratified k-fold cross-validation
    Cv {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Learning curve over training-set size
    Curve {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Comma-separated bags-per-class sizes
        #[arg(long, default_value = "5,10,20,40")]
        sizes: String,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Spectrum and metricity diagnostics of a square matrix
    Analyze {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Dataset shape and validity summary
    Summary {
        #[arg(short, long)]
        input: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Concept,
    Distribution,
    Multiconcept,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    Minmin,
    Meanmin,
    Maxmin,
    Hausdorff,
    Meanmean,
    Mahalanobis,
    Cs,
    Emd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymArg {
    None,
    Avg,
    Min,
    Max,
}

impl SymArg {
    fn mode(self) -> SymmetrizationMode {
        match self {
            SymArg::None => SymmetrizationMode::None,
            SymArg::Avg => SymmetrizationMode::Average,
            SymArg::Min => SymmetrizationMode::Min,
            SymArg::Max => SymmetrizationMode::Max,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RepArg {
    To,
    From,
    Extended,
}

impl RepArg {
    fn mode(self) -> RepresentationMode {
        match self {
            RepArg::To => RepresentationMode::To,
            RepArg::From => RepresentationMode::From,
            RepArg::Extended => RepresentationMode::Extended,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Logistic,
    Svm,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineArg {
    Minimax,
    Miles,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long, value_enum)]
    measure: MeasureArg,
    #[arg(long, value_enum, default_value_t = SymArg::Avg)]
    symmetrize: SymArg,
    /// Kernel width for cs (default sqrt(dim)) and miles (default 10)
    #[arg(long)]
    sigma: Option<f64>,
    /// Covariance ridge for mahalanobis (0 = automatic on ill-conditioning)
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
}

impl MeasureArgs {
    fn measure(&self, dim: usize) -> Measure {
        match self.measure {
            MeasureArg::Minmin => Measure::PointSet {
                measure: PointSetMeasure::MinMin,
            },
            MeasureArg::Meanmin => Measure::PointSet {
                measure: PointSetMeasure::MeanMin,
            },
            MeasureArg::Maxmin => Measure::PointSet {
                measure: PointSetMeasure::MaxMin,
            },
            MeasureArg::Hausdorff => Measure::PointSet {
                measure: PointSetMeasure::Hausdorff,
            },
            MeasureArg::Meanmean => Measure::PointSet {
                measure: PointSetMeasure::MeanMean,
            },
            MeasureArg::Mahalanobis => Measure::Mahalanobis { ridge: self.ridge },
            MeasureArg::Cs => Measure::Cs {
                sigma: self
                    .sigma
                    .unwrap_or_else(|| CSParams::default_for_dim(dim).sigma),
            },
            MeasureArg::Emd => Measure::Emd {
                cap: DEFAULT_EMD_CAP,
            },
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    measure: MeasureArgs,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Logistic)]
    classifier: ClassifierArg,
    #[arg(long, value_enum, default_value_t = RepArg::To)]
    representation: RepArg,
    /// Replace the dissimilarity representation by a baseline one
    #[arg(long, value_enum)]
    baseline: Option<BaselineArg>,
}

impl PipelineArgs {
    fn spec(&self, dim: usize) -> PipelineSpec {
        let representation = match self.baseline {
            Some(BaselineArg::Minimax) => Representation::Minimax,
            Some(BaselineArg::Miles) => Representation::Miles {
                sigma: self.measure.sigma.unwrap_or(10.0),
            },
            None => Representation::Dissim {
                measure: self.measure.measure(dim),
                symmetrization: self.measure.symmetrize.mode(),
                mode: self.representation.mode(),
            },
        };
        let (classifier, train) = match self.classifier {
            ClassifierArg::Logistic => (ClassifierKind::Logistic, TrainConfig::logistic_default()),
            ClassifierArg::Svm => (ClassifierKind::Svm, TrainConfig::svm_default()),
        };
        PipelineSpec {
            representation,
            classifier,
            train,
        }
    }
}

fn load_dataset(path: &PathBuf) -> Result<MILDataset> {
    let dataset = parse_mil_table(path)?;
    let violations = validate_dataset(&dataset);
    if let Some(v) = violations.first() {
        return Err(MindError::InvalidDataset(format!(
            "{} ({} violations total): {}",
            v.bag_id,
            violations.len(),
            v.rule
        )));
    }
    Ok(dataset)
}

fn square_matrix(
    dataset: &MILDataset,
    measure: Measure,
    symmetrize: SymmetrizationMode,
    direction: MatrixDirection,
) -> Result<DissimMatrix> {
    let prototypes = select_prototypes(dataset, SelectionStrategy::All, 0, 0)?;
    compute_matrix_directed(dataset, &prototypes, measure, symmetrize, direction)
}

fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| MindError::Parse(format!("bad size {s:?}")))
        })
        .collect()
}

#[derive(serde::Serialize)]
struct AnalysisReport {
    input: String,
    spectrum: SpectrumReport,
    metricity: MetricityReport,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            problem,
            bags_per_class,
            instances,
            dim,
            seed,
            output,
        } => {
            let min_instances = match problem {
                ProblemArg::Concept => 1,
                _ => 2,
            };
            if bags_per_class == 0 || instances < min_instances || dim == 0 {
                return Err(MindError::InvalidDataset(format!(
                    "need bags-per-class >= 1, instances >= {min_instances}, dim >= 1"
                )));
            }
            let config = GenConfig {
                bags_per_class,
                instances_per_bag: instances,
                dim,
                seed,
            };
            let dataset = match problem {
                ProblemArg::Concept => gen_concept(&config),
                ProblemArg::Distribution => gen_distribution(&config),
                ProblemArg::Multiconcept => gen_multiconcept(&config),
            };
            write_mil_table(&output, &dataset)?;
            println!(
                "wrote {} bags ({} instances) to {}",
                dataset.bags.len(),
                dataset.bags.iter().map(|b| b.size()).sum::<usize>(),
                output.display()
            );
        }
        Command::Dissim {
            measure,
            input,
            output,
        } => {
            let dataset = load_dataset(&input)?;
            let m = square_matrix(
                &dataset,
                measure.measure(dataset.dim),
                measure.symmetrize.mode(),
                MatrixDirection::To,
            )?;
            write_matrix(&output, &m)?;
            println!(
                "wrote {}x{} {} matrix to {}",
                m.n_rows(),
                m.n_cols(),
                m.measure_tag,
                output.display()
            );
        }
        Command::Represent {
            measure,
            representation,
            input,
            output,
        } => {
            let dataset = load_dataset(&input)?;
            let meas = measure.measure(dataset.dim);
            let sym = measure.symmetrize.mode();
            let mode = representation.mode();
            let d_to = square_matrix(&dataset, meas, sym, MatrixDirection::To)?;
            let d_from = match mode {
                RepresentationMode::To => None,
                _ => Some(square_matrix(&dataset, meas, sym, MatrixDirection::From)?),
            };
            let table = build_representation(&dataset, &d_to, d_from.as_ref(), mode)?;
            write_feature_table(&output, &table)?;
            println!(
                "wrote {}x{} feature table to {}",
                table.n_rows(),
                table.n_cols(),
                output.display()
            );
        }
        Command::Cv {
            pipeline,
            folds,
            repeats,
            seed,
            input,
            output,
        } => {
            let dataset = load_dataset(&input)?;
            let config = CVConfig {
                folds,
                repeats,
                seed,
                pipeline: pipeline.spec(dataset.dim),
            };
            let report = cross_validate(&dataset, &config)?;
            println!(
                "mean_auc={:.16e} std_error={:.16e} folds={} repeats={} seed={}",
                report.mean_auc, report.std_error, folds, repeats, seed
            );
            if let Some(path) = output {
                write_report(&path, &report)?;
            }
        }
        Command::Curve {
            pipeline,
            sizes,
            iterations,
            seed,
            input,
            output,
        } => {
            let dataset = load_dataset(&input)?;
            let sizes = parse_sizes(&sizes)?;
            let report = learning_curve(
                &dataset,
                &sizes,
                iterations,
                seed,
                &pipeline.spec(dataset.dim),
            )?;
            for size in &report.sizes {
                println!(
                    "size={} actual={}+{} capped={} mean_auc={:.16e} std_error={:.16e}",
                    size.requested_per_class,
                    size.actual_positive,
                    size.actual_negative,
                    size.capped,
                    size.mean_auc,
                    size.std_error
                );
            }
            if let Some(path) = output {
                write_report(&path, &report)?;
            }
        }
        Command::Analyze { input, output } => {
            let m = read_matrix(&input)?;
            if !m.is_square() {
                return Err(MindError::IdMismatch(
                    "analyze needs a square matrix with matching row and column ids".into(),
                ));
            }
            // spectrum diagnostics are defined on the symmetrized matrix;
            // the metricity report still records the raw asymmetry
            let n = m.n_rows();
            let mut sym = m.clone();
            for i in 0..n {
                for j in 0..n {
                    sym.values[i * n + j] = 0.5 * (m.get(i, j) + m.get(j, i));
                }
            }
            let spectrum = nef_ner(&sym)?;
            let metricity = nmf(&m, 0)?;
            println!(
                "nef={:.16e} ner={:.16e} nmf={:.16e} violated={} total={} asymmetry={:.16e}",
                spectrum.nef,
                spectrum.ner,
                metricity.nmf,
                metricity.violated,
                metricity.total,
                metricity.symmetry_deviation
            );
            if let Some(path) = output {
                write_report(
                    &path,
                    &AnalysisReport {
                        input: input.display().to_string(),
                        spectrum,
                        metricity,
                    },
                )?;
            }
        }
        Command::Summary { input } => {
            let dataset = parse_mil_table(&input)?;
            let s = dataset_summary(&dataset);
            println!(
                "positive_bags={} negative_bags={} unknown_bags={} dim={} total_instances={} min_bag_size={} avg_bag_size={} max_bag_size={}",
                s.positive_bags,
                s.negative_bags,
                s.unknown_bags,
                s.dim,
                s.total_instances,
                s.min_bag_size,
                s.avg_bag_size,
                s.max_bag_size
            );
            for v in validate_dataset(&dataset) {
                println!("violation bag={} rule={}", v.bag_id, v.rule);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        // ignore the error if a pool already exists (e.g. repeated init in tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
