//! CSV ingestion and emission.
//!
//! Prediction file: `example_id,gold,<learner_id>...`, one row per example.
//! Meta file: `learner_id,name,category`. UTF-8, LF line endings. Row numbers
//! in errors are 1-based and count the header as row 1.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{is_valid_id, DataError, DatasetBundle, Label, LearnerCategory, LearnerMeta, PredictionMatrix, Split};

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>, DataError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(file))
}

fn csv_err(file: &str, row: u64, e: csv::Error) -> DataError {
    let row = e.position().map(|p| p.line()).unwrap_or(row);
    DataError::Malformed {
        file: file.to_string(),
        row,
        message: e.to_string(),
    }
}

fn parse_label(file: &str, row: u64, cell: &str, class_count: usize) -> Result<Label, DataError> {
    if cell.is_empty() || !cell.bytes().all(|b| b.is_ascii_digit()) {
        return Err(DataError::Malformed {
            file: file.to_string(),
            row,
            message: format!("label `{cell}` is not a non-negative base-10 integer"),
        });
    }
    let value: u64 = cell.parse().map_err(|_| DataError::Malformed {
        file: file.to_string(),
        row,
        message: format!("label `{cell}` does not fit in 32 bits"),
    })?;
    if value >= class_count as u64 {
        return Err(DataError::LabelOutOfRange {
            file: file.to_string(),
            row,
            label: value,
            class_count,
        });
    }
    Ok(value as Label)
}

/// Reads one prediction CSV.
pub fn read_matrix(path: &Path, split: Split, class_count: usize) -> Result<PredictionMatrix, DataError> {
    let file = file_label(path);
    let mut reader = open_reader(path)?;
    let mut records = reader.records();

    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(&file, 1, e))?,
        None => {
            return Err(DataError::Malformed {
                file,
                row: 1,
                message: "empty file".into(),
            })
        }
    };
    if header.len() < 2 || &header[0] != "example_id" || &header[1] != "gold" {
        return Err(DataError::Malformed {
            file,
            row: 1,
            message: "header must start with `example_id,gold`".into(),
        });
    }
    let mut learner_ids: Vec<String> = Vec::with_capacity(header.len() - 2);
    let mut seen = HashSet::new();
    for id in header.iter().skip(2) {
        if !is_valid_id(id) {
            return Err(DataError::Malformed {
                file,
                row: 1,
                message: format!("invalid learner id `{id}`"),
            });
        }
        if !seen.insert(id.to_string()) {
            return Err(DataError::DuplicateLearner {
                file,
                row: 1,
                id: id.to_string(),
            });
        }
        learner_ids.push(id.to_string());
    }

    let mut example_ids = Vec::new();
    let mut gold = Vec::new();
    let mut columns: Vec<Vec<Label>> = vec![Vec::new(); learner_ids.len()];
    let mut seen_examples = HashSet::new();
    for (i, record) in records.enumerate() {
        let row = i as u64 + 2;
        let record = record.map_err(|e| csv_err(&file, row, e))?;
        let example = &record[0];
        if !is_valid_id(example) {
            return Err(DataError::Malformed {
                file,
                row,
                message: format!("invalid example id `{example}`"),
            });
        }
        if !seen_examples.insert(example.to_string()) {
            return Err(DataError::DuplicateExample {
                file,
                row,
                id: example.to_string(),
            });
        }
        example_ids.push(example.to_string());
        gold.push(parse_label(&file, row, &record[1], class_count)?);
        for (col, cell) in columns.iter_mut().zip(record.iter().skip(2)) {
            col.push(parse_label(&file, row, cell, class_count)?);
        }
    }
    if gold.is_empty() {
        return Err(DataError::Malformed {
            file,
            row: 2,
            message: "no example rows".into(),
        });
    }
    PredictionMatrix::new(
        split,
        class_count,
        example_ids,
        gold,
        learner_ids.into_iter().zip(columns).collect(),
    )
}

/// Reads the learner catalogue.
pub fn read_meta(path: &Path) -> Result<Vec<LearnerMeta>, DataError> {
    let file = file_label(path);
    let mut reader = open_reader(path)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(&file, 1, e))?,
        None => {
            return Err(DataError::Malformed {
                file,
                row: 1,
                message: "empty file".into(),
            })
        }
    };
    if header.iter().collect::<Vec<_>>() != ["learner_id", "name", "category"] {
        return Err(DataError::Malformed {
            file,
            row: 1,
            message: "header must be `learner_id,name,category`".into(),
        });
    }
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, record) in records.enumerate() {
        let row = i as u64 + 2;
        let record = record.map_err(|e| csv_err(&file, row, e))?;
        let id = record[0].to_string();
        if !is_valid_id(&id) {
            return Err(DataError::Malformed {
                file,
                row,
                message: format!("invalid learner id `{id}`"),
            });
        }
        if !seen.insert(id.clone()) {
            return Err(DataError::DuplicateLearner { file, row, id });
        }
        let category: LearnerCategory = record[2].parse().map_err(|message| DataError::Malformed {
            file: file.clone(),
            row,
            message,
        })?;
        out.push(LearnerMeta {
            id,
            name: record[1].to_string(),
            category,
        });
    }
    Ok(out)
}

/// Loads and cross-validates the three files of a bundle.
pub fn load_bundle(
    validation_path: &Path,
    test_path: &Path,
    meta_path: &Path,
    class_count: usize,
) -> Result<DatasetBundle, DataError> {
    let meta = read_meta(meta_path)?;
    let validation = read_matrix(validation_path, Split::Validation, class_count)?;
    let test = read_matrix(test_path, Split::Test, class_count)?;

    let val_ids: HashSet<&str> = validation.learner_ids().iter().map(String::as_str).collect();
    let test_ids: HashSet<&str> = test.learner_ids().iter().map(String::as_str).collect();
    if val_ids != test_ids {
        let mut only_val: Vec<&str> = val_ids.difference(&test_ids).copied().collect();
        let mut only_test: Vec<&str> = test_ids.difference(&val_ids).copied().collect();
        only_val.sort_unstable();
        only_test.sort_unstable();
        return Err(DataError::LearnerSetMismatch {
            detail: format!(
                "only in {}: {only_val:?}; only in {}: {only_test:?}",
                validation_path.display(),
                test_path.display()
            ),
        });
    }
    let meta_ids: HashSet<&str> = meta.iter().map(|m| m.id.as_str()).collect();
    if let Some(id) = validation.learner_ids().iter().find(|id| !meta_ids.contains(id.as_str())) {
        return Err(DataError::MissingMeta {
            file: file_label(meta_path),
            id: id.clone(),
        });
    }
    DatasetBundle::new(meta, validation, test)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, DataError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn write_failed(path: &Path, e: csv::Error) -> DataError {
    io_err(path, std::io::Error::other(e.to_string()))
}

pub fn write_matrix(matrix: &PredictionMatrix, path: &Path) -> Result<(), DataError> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["example_id", "gold"];
    header.extend(matrix.learner_ids().iter().map(String::as_str));
    w.write_record(&header).map_err(|e| write_failed(path, e))?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in 0..matrix.len() {
        row.clear();
        row.push(matrix.example_ids()[r].clone());
        row.push(matrix.gold()[r].to_string());
        for c in 0..matrix.learner_count() {
            row.push(matrix.column_at(c)[r].to_string());
        }
        w.write_record(&row).map_err(|e| write_failed(path, e))?;
    }
    w.into_inner()
        .map_err(|e| io_err(path, std::io::Error::other(e.to_string())))?
        .flush()
        .map_err(|e| io_err(path, e))
}

pub fn write_meta(meta: &[LearnerMeta], path: &Path) -> Result<(), DataError> {
    let mut w = csv_writer(path)?;
    w.write_record(["learner_id", "name", "category"])
        .map_err(|e| write_failed(path, e))?;
    for m in meta {
        w.write_record([m.id.as_str(), m.name.as_str(), m.category.as_str()])
            .map_err(|e| write_failed(path, e))?;
    }
    w.into_inner()
        .map_err(|e| io_err(path, std::io::Error::other(e.to_string())))?
        .flush()
        .map_err(|e| io_err(path, e))
}

/// Writes `validation.csv`, `test.csv` and `meta.csv` into `dir` and returns
/// their paths in that order.
pub fn emit_bundle(bundle: &DatasetBundle, dir: &Path) -> Result<[PathBuf; 3], DataError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let paths = [dir.join("validation.csv"), dir.join("test.csv"), dir.join("meta.csv")];
    write_matrix(bundle.validation(), &paths[0])?;
    write_matrix(bundle.test(), &paths[1])?;
    write_meta(bundle.meta(), &paths[2])?;
    Ok(paths)
}
