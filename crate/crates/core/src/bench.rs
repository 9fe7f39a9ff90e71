//! Benchmark matrix: subsample fractions × feature sets × classifiers, one
//! cross-validation per cell, summarized as F-score, timing and
//! embedding-training tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{cross_validate, Classifier, CvOptions, CvReport, TrainerSpec};
use crate::corpus::{stratified_subsample, Corpus};
use crate::error::{Error, Result};
use crate::features::FeatureSpec;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub fractions: Vec<f64>,
    pub features: Vec<FeatureSpec>,
    pub classifiers: Vec<Classifier>,
    pub seed: u64,
    /// Per-cell protocol; its seed is replaced by `seed`.
    pub cv: CvOptions,
    /// Trainer settings shared by every cell; the classifier is overridden.
    pub trainer: TrainerSpec,
    /// Cells evaluated at once.
    pub workers: usize,
}

impl BenchConfig {
    pub fn new(fractions: Vec<f64>, features: Vec<FeatureSpec>, classifiers: Vec<Classifier>) -> Self {
        Self {
            fractions,
            features,
            classifiers,
            seed: 1,
            cv: CvOptions::default(),
            trainer: TrainerSpec::new(Classifier::Logistic),
            workers: 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() || self.features.is_empty() || self.classifiers.is_empty() {
            return Err(Error::invalid("bench needs at least one fraction, feature set and classifier"));
        }
        if let Some(f) = self.fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(Error::invalid(format!("fraction {f} not in (0, 1]")));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub fraction: f64,
    pub features: String,
    pub classifier: String,
    pub tweets: usize,
    pub outcome: std::result::Result<CellSummary, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub f1: f64,
    pub accuracy: f64,
    /// Mean featurize + train + predict seconds per run.
    pub classify_s: f64,
    /// Mean embedding training seconds per repetition, when used.
    pub embedding_s: Option<f64>,
    pub failed_runs: usize,
    #[serde(skip)]
    pub report: Option<CvReport>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
    pub fscore: Table,
    pub timing: Table,
    pub embedding: Table,
}

pub fn fraction_label(fraction: f64) -> String {
    let pct = format!("{:.4}", fraction * 100.0);
    let pct = pct.trim_end_matches('0').trim_end_matches('.');
    format!("{pct}%")
}

fn summarize(report: CvReport) -> std::result::Result<CellSummary, String> {
    let a = &report.aggregate;
    if a.succeeded == 0 {
        let reason = report
            .failed_reasons()
            .first()
            .map_or_else(|| "no runs".to_string(), |(_, r)| r.to_string());
        return Err(reason);
    }
    let embedding_s = (!report.embedding_s.is_empty())
        .then(|| report.embedding_s.iter().sum::<f64>() / report.embedding_s.len() as f64);
    Ok(CellSummary {
        f1: a.f1.mean,
        accuracy: a.accuracy.mean,
        classify_s: a.featurize_s.mean + a.train_s.mean + a.predict_s.mean,
        embedding_s,
        failed_runs: a.failed,
        report: Some(report),
    })
}

pub fn run_bench(corpus: &Corpus, config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let subsets: Vec<std::result::Result<Corpus, String>> = config
        .fractions
        .iter()
        .map(|&f| {
            if f == 1.0 {
                Ok(corpus.clone())
            } else {
                stratified_subsample(corpus, f, config.seed).map_err(|e| e.to_string())
            }
        })
        .collect();
    let mut jobs = Vec::new();
    for (fi, _) in config.fractions.iter().enumerate() {
        for feature in &config.features {
            for &classifier in &config.classifiers {
                jobs.push((fi, feature, classifier));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    let cells: Vec<BenchCell> = pool.install(|| {
        jobs.par_iter()
            .map(|&(fi, feature, classifier)| {
                let fraction = config.fractions[fi];
                let subset = &subsets[fi];
                let outcome = subset.as_ref().map_err(Clone::clone).and_then(|c| {
                    let trainer = TrainerSpec {
                        classifier,
                        ..config.trainer.clone()
                    };
                    let options = CvOptions {
                        seed: config.seed,
                        dataset: format!("{}@{}", config.cv.dataset, fraction_label(fraction)),
                        ..config.cv.clone()
                    };
                    cross_validate(c, feature, &trainer, &options)
                        .map_err(|e| e.to_string())
                        .and_then(summarize)
                });
                if let Err(reason) = &outcome {
                    log::warn!("cell {} {feature} {classifier}: {reason}", fraction_label(fraction));
                }
                BenchCell {
                    fraction,
                    features: feature.to_string(),
                    classifier: classifier.to_string(),
                    tweets: subset.as_ref().map_or(0, Corpus::len),
                    outcome,
                }
            })
            .collect()
    });
    let fscore = grid_table("F-score", config, &cells, |s| Some(s.f1), 2);
    let timing = grid_table("classification time (s)", config, &cells, |s| Some(s.classify_s), 3);
    let embedding = embedding_table(config, &subsets, &cells);
    Ok(BenchReport {
        cells,
        fscore,
        timing,
        embedding,
    })
}

fn grid_table(title: &str, config: &BenchConfig, cells: &[BenchCell], value: impl Fn(&CellSummary) -> Option<f64>, decimals: usize) -> Table {
    let mut columns = Vec::new();
    for c in &config.classifiers {
        for &f in &config.fractions {
            columns.push(format!("{c} {}", fraction_label(f)));
        }
    }
    let rows = config
        .features
        .iter()
        .map(|feature| {
            let name = feature.to_string();
            let row = config
                .classifiers
                .iter()
                .flat_map(|c| config.fractions.iter().map(move |&f| (c.to_string(), f)))
                .map(|(c, f)| {
                    cells
                        .iter()
                        .find(|x| x.features == name && x.classifier == c && x.fraction == f)
                        .map_or(Cell::Missing, |x| match &x.outcome {
                            Ok(s) => value(s).map_or(Cell::Missing, Cell::Value),
                            Err(_) => Cell::Err,
                        })
                })
                .collect();
            (name, row)
        })
        .collect();
    Table {
        title: title.to_string(),
        corner: "features".to_string(),
        columns,
        rows,
        decimals,
    }
}

fn embedding_table(config: &BenchConfig, subsets: &[std::result::Result<Corpus, String>], cells: &[BenchCell]) -> Table {
    let columns = config.fractions.iter().map(|&f| fraction_label(f)).collect();
    let counts = subsets
        .iter()
        .map(|s| s.as_ref().map_or(Cell::Err, |c| Cell::Value(c.len() as f64)))
        .collect();
    let times = config
        .fractions
        .iter()
        .map(|&f| {
            let times: Vec<f64> = cells
                .iter()
                .filter(|c| c.fraction == f)
                .filter_map(|c| c.outcome.as_ref().ok().and_then(|s| s.embedding_s))
                .collect();
            if times.is_empty() {
                Cell::Missing
            } else {
                Cell::Value(times.iter().sum::<f64>() / times.len() as f64)
            }
        })
        .collect();
    Table {
        title: "embedding training time (s)".to_string(),
        corner: "".to_string(),
        columns,
        rows: vec![("tweets".to_string(), counts), ("w2v training time".to_string(), times)],
        decimals: 2,
    }
}

impl BenchReport {
    /// Writes `<name>.tsv` and `<name>.txt` for each table plus `cells.jsonl`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (name, table) in [("fscore", &self.fscore), ("timing", &self.timing), ("w2v", &self.embedding)] {
            for (ext, body) in [("tsv", table.to_tsv()), ("txt", table.to_aligned())] {
                let path = dir.join(format!("{name}.{ext}"));
                fs::write(&path, body)?;
                written.push(path);
            }
        }
        let mut lines = String::new();
        for c in &self.cells {
            lines.push_str(&serde_json::to_string(c)?);
            lines.push('\n');
        }
        let path = dir.join("cells.jsonl");
        fs::write(&path, lines)?;
        written.push(path);
        for c in &self.cells {
            if let Ok(CellSummary { report: Some(r), .. }) = &c.outcome {
                let path = dir.join(format!(
                    "cv_{}_{}_{}.tsv",
                    fraction_label(c.fraction).trim_end_matches('%'),
                    c.features.replace([':', ','], "_"),
                    c.classifier
                ));
                fs::write(&path, r.to_tsv())?;
                written.push(path);
            }
        }
        Ok(written)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    /// The cell's run failed.
    Err,
    /// Nothing to report for the cell.
    Missing,
}

impl Cell {
    fn render(self, decimals: usize) -> String {
        match self {
            Cell::Value(v) => format!("{v:.decimals$}"),
            Cell::Err => "ERR".to_string(),
            Cell::Missing => "-".to_string(),
        }
    }

    fn parse(s: &str, line: usize) -> Result<Self> {
        match s {
            "ERR" => Ok(Cell::Err),
            "-" => Ok(Cell::Missing),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Cell::Value)
                .ok_or_else(|| Error::format(line, format!("bad table cell {s:?}"))),
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// A labeled grid. Renders as tab-separated or space-aligned text, and both
/// parse back into the printed values.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<Cell>)>,
    pub decimals: usize,
}

impl Table {
    pub fn get(&self, row: &str, column: &str) -> Option<Cell> {
        let j = self.columns.iter().position(|c| c == column)?;
        self.rows.iter().find(|(r, _)| r == row).map(|(_, cells)| cells[j])
    }

    fn lines(&self) -> Vec<Vec<String>> {
        let mut out = vec![std::iter::once(self.corner.clone()).chain(self.columns.iter().cloned()).collect()];
        for (name, cells) in &self.rows {
            out.push(
                std::iter::once(name.clone())
                    .chain(cells.iter().map(|c| c.render(self.decimals)))
                    .collect(),
            );
        }
        out
    }

    /// `# title` then a header row and one row per label.
    pub fn to_tsv(&self) -> String {
        let mut s = format!("# {}\n", self.title);
        for line in self.lines() {
            s.push_str(&line.join("\t"));
            s.push('\n');
        }
        s
    }

    /// Columns padded to a common width and separated by at least two spaces.
    pub fn to_aligned(&self) -> String {
        let lines = self.lines();
        let ncols = self.columns.len() + 1;
        let widths: Vec<usize> = (0..ncols)
            .map(|j| lines.iter().map(|l| l[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut s = format!("# {}\n", self.title);
        for line in &lines {
            let mut row = String::new();
            for (j, field) in line.iter().enumerate() {
                if j == 0 {
                    let _ = write!(row, "{field:<w$}", w = widths[0]);
                } else {
                    let _ = write!(row, "  {field:>w$}", w = widths[j]);
                }
            }
            s.push_str(row.trim_end());
            s.push('\n');
        }
        s
    }

    /// Reads either rendering. Decimals are taken from the widest printed
    /// fraction.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or(Error::Empty("table"))?;
        let title = first
            .strip_prefix("# ")
            .ok_or_else(|| Error::format(1, "table must start with '# title'"))?
            .to_string();
        let (hline, header) = lines.next().ok_or_else(|| Error::format(2, "missing header row"))?;
        let tabbed = header.contains('\t');
        let split = |l: &str| -> Vec<String> {
            if tabbed {
                l.split('\t').map(str::to_string).collect()
            } else {
                l.split("  ").map(str::trim).filter(|f| !f.is_empty()).map(str::to_string).collect()
            }
        };
        let mut head = split(header);
        // an empty corner label vanishes in the aligned form
        let corner = if !tabbed && header.starts_with(' ') { String::new() } else { head.remove(0) };
        if head.is_empty() {
            return Err(Error::format(hline + 1, "table has no columns"));
        }
        let mut rows = Vec::new();
        let mut decimals = 0;
        for (i, line) in lines {
            let fields = if tabbed {
                split(line)
            } else {
                // row labels may contain single spaces; cells never do
                let mut f: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if f.len() < head.len() + 1 {
                    return Err(Error::format(i + 1, "row is too short"));
                }
                let cells = f.split_off(f.len() - head.len());
                std::iter::once(f.join(" ")).chain(cells).collect()
            };
            if fields.len() != head.len() + 1 {
                return Err(Error::format(i + 1, format!("expected {} fields, found {}", head.len() + 1, fields.len())));
            }
            let cells = fields[1..]
                .iter()
                .map(|f| {
                    if let Some((_, frac)) = f.split_once('.') {
                        decimals = decimals.max(frac.len());
                    }
                    Cell::parse(f, i + 1)
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((fields[0].clone(), cells));
        }
        Ok(Table {
            title,
            corner,
            columns: head,
            rows,
            decimals,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Label, Tweet};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, seed: u64) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Corpus::from_tweets((0..n).map(|i| {
            let pos = i % 4 == 0;
            let mut words: Vec<&str> = (0..5).map(|_| ["x", "y", "z", "w"][rng.random_range(0..4)]).collect();
            words.push(if pos { "great" } else { "meh" });
            let label = if pos { Label::Positive } else { Label::Negative };
            Tweet::new(i.to_string(), words.join(" "), label).preprocessed()
        }))
        .unwrap()
    }

    fn small_config() -> BenchConfig {
        let mut c = BenchConfig::new(
            vec![0.5, 1.0],
            vec![FeatureSpec::Ngrams(vec![1]), FeatureSpec::Ngrams(vec![1, 2])],
            vec![Classifier::Logistic, Classifier::Svm],
        );
        c.cv.repetitions = 1;
        c.cv.folds = 2;
        c.workers = 2;
        c
    }

    #[test]
    fn matrix_shape_and_rerun() {
        let corpus = toy(80, 1);
        let cfg = small_config();
        let a = run_bench(&corpus, &cfg).unwrap();
        assert_eq!(a.cells.len(), 8);
        assert_eq!(a.fscore.rows.len(), 2);
        assert_eq!(a.fscore.columns, vec!["logistic 50%", "logistic 100%", "svm 50%", "svm 100%"]);
        let b = run_bench(&corpus, &cfg).unwrap();
        assert_eq!(a.fscore.to_tsv(), b.fscore.to_tsv());
        assert_eq!(a.embedding.get("tweets", "50%"), Some(Cell::Value(40.0)));
        assert_eq!(a.embedding.get("w2v training time", "50%"), Some(Cell::Missing));
    }

    #[test]
    fn single_cell_single_row() {
        let mut cfg = small_config();
        cfg.fractions = vec![1.0];
        cfg.features.truncate(1);
        cfg.classifiers.truncate(1);
        let r = run_bench(&toy(40, 2), &cfg).unwrap();
        assert_eq!(r.fscore.rows.len(), 1);
        assert_eq!(r.fscore.columns.len(), 1);
        assert_eq!(r.timing.rows.len(), 1);
    }

    #[test]
    fn failed_cell_is_err_not_abort() {
        let mut cfg = small_config();
        // 1% of 40 tweets rounds to zero positives
        cfg.fractions = vec![0.01, 1.0];
        let r = run_bench(&toy(40, 3), &cfg).unwrap();
        assert_eq!(r.fscore.get("ngrams:1", "logistic 1%"), Some(Cell::Err));
        assert!(matches!(r.fscore.get("ngrams:1", "logistic 100%"), Some(Cell::Value(_))));
        let text = r.fscore.to_aligned();
        assert!(text.contains("ERR"));
    }

    #[test]
    fn files_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config();
        cfg.fractions = vec![1.0];
        let r = run_bench(&toy(40, 4), &cfg).unwrap();
        let files = r.write_to(dir.path()).unwrap();
        assert!(files.iter().any(|p| p.ends_with("fscore.tsv")));
        let back = Table::parse(&fs::read_to_string(dir.path().join("fscore.txt")).unwrap()).unwrap();
        assert_eq!(back.to_tsv(), r.fscore.to_tsv());
    }

    #[test]
    fn labels_for_fractions() {
        assert_eq!(fraction_label(0.001), "0.1%");
        assert_eq!(fraction_label(0.01), "1%");
        assert_eq!(fraction_label(1.0), "100%");
    }

    fn cell() -> impl Strategy<Value = Cell> {
        prop_oneof![
            (-1e4f64..1e4).prop_map(Cell::Value),
            Just(Cell::Err),
            Just(Cell::Missing),
        ]
    }

    proptest! {
        #[test]
        fn tables_round_trip(
            decimals in 1usize..4,
            ncols in 1usize..4,
            rows in proptest::collection::vec(("[a-z]{1,6}( [a-z]{1,4})?", proptest::collection::vec(cell(), 3)), 1..5),
        ) {
            let t = Table {
                title: "t".into(),
                corner: "features".into(),
                columns: (0..ncols).map(|j| format!("lr {j}%")).collect(),
                rows: rows.into_iter().map(|(n, mut c)| { c.truncate(ncols); (n, c) }).collect(),
                decimals,
            };
            for text in [t.to_tsv(), t.to_aligned()] {
                let back = Table::parse(&text).unwrap();
                prop_assert_eq!(back.columns.clone(), t.columns.clone());
                for ((name, a), (name2, b)) in t.rows.iter().zip(&back.rows) {
                    prop_assert_eq!(name, name2);
                    for (x, y) in a.iter().zip(b) {
                        match (x, y) {
                            (Cell::Value(x), Cell::Value(y)) => {
                                let printed: f64 = format!("{x:.decimals$}").parse().unwrap();
                                prop_assert_eq!(printed, *y);
                            }
                            _ => prop_assert_eq!(x, y),
                        }
                    }
                }
                let (x, y) = (back.to_tsv(), t.to_tsv());
                prop_assert_eq!(x.lines().skip(2).collect::<Vec<_>>(), y.lines().skip(2).collect::<Vec<_>>());
            }
        }
    }
}
