//! The prediction matrix: the sole interface between training and
//! evaluation, persisted as `predictions.csv`.
//!
//! CSV layout: header `image_id,true_label,p_<class0>,...,p_<classK-1>`
//! with class names taken from the manifest; probabilities are printed
//! with 6 decimal places.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Row-stochastic class scores with their true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    pub image_ids: Vec<String>,
    pub true_labels: Vec<usize>,
    pub scores: Vec<Vec<f64>>,
}

/// How far a row sum may drift from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-5;

impl PredictionMatrix {
    pub fn len(&self) -> usize {
        self.image_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image_ids.is_empty()
    }

    /// Check the structural invariants: parallel lengths, labels in range,
    /// row widths equal to `classes`, rows summing to 1 within tolerance.
    pub fn validate(&self, classes: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyScores);
        }
        if self.true_labels.len() != self.len() || self.scores.len() != self.len() {
            return Err(Error::MalformedPredictions(format!(
                "parallel field lengths differ: {} ids, {} labels, {} score rows",
                self.len(),
                self.true_labels.len(),
                self.scores.len()
            )));
        }
        for (row, scores) in self.scores.iter().enumerate() {
            if scores.len() != classes {
                return Err(Error::RaggedScores {
                    expected: classes,
                    actual: scores.len(),
                    row,
                });
            }
            let sum: f64 = scores.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::MalformedPredictions(format!(
                    "row {row} sums to {sum}, expected 1 within {ROW_SUM_TOLERANCE}"
                )));
            }
            let label = self.true_labels[row];
            if label >= classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    row,
                    classes,
                });
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W, class_names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["image_id".to_string(), "true_label".to_string()];
        header.extend(class_names.iter().map(|n| format!("p_{n}")));
        w.write_record(&header)
            .map_err(|e| Error::csv("writing predictions header", e))?;
        for i in 0..self.len() {
            let mut record = vec![self.image_ids[i].clone(), self.true_labels[i].to_string()];
            record.extend(self.scores[i].iter().map(|v| format!("{v:.6}")));
            w.write_record(&record)
                .map_err(|e| Error::csv(format!("writing predictions row {i}"), e))?;
        }
        w.flush()
            .map_err(|e| Error::io("flushing predictions", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path, class_names: &[String]) -> Result<()> {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_csv(file, class_names)
    }

    /// Read a predictions CSV, recovering the class names from the header.
    pub fn read_csv<R: Read>(reader: R) -> Result<(Self, Vec<String>)> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r
            .headers()
            .map_err(|e| Error::csv("reading predictions header", e))?
            .clone();
        if header.len() < 3 || &header[0] != "image_id" || &header[1] != "true_label" {
            return Err(Error::MalformedPredictions(
                "header must start with image_id,true_label,p_<class>...".into(),
            ));
        }
        let mut class_names = Vec::with_capacity(header.len() - 2);
        for field in header.iter().skip(2) {
            let name = field.strip_prefix("p_").ok_or_else(|| {
                Error::MalformedPredictions(format!(
                    "probability column {field:?} does not start with p_"
                ))
            })?;
            class_names.push(name.to_string());
        }

        let mut image_ids = Vec::new();
        let mut true_labels = Vec::new();
        let mut scores = Vec::new();
        for (row, record) in r.records().enumerate() {
            let record = record.map_err(|e| Error::csv(format!("reading row {row}"), e))?;
            if record.len() != header.len() {
                return Err(Error::MalformedPredictions(format!(
                    "row {row} has {} fields, expected {}",
                    record.len(),
                    header.len()
                )));
            }
            image_ids.push(record[0].to_string());
            true_labels.push(record[1].parse::<usize>().map_err(|e| {
                Error::MalformedPredictions(format!("row {row} true_label: {e}"))
            })?);
            let row_scores: Vec<f64> = record
                .iter()
                .skip(2)
                .map(|f| {
                    f.parse::<f64>().map_err(|e| {
                        Error::MalformedPredictions(format!("row {row} probability: {e}"))
                    })
                })
                .collect::<Result<_>>()?;
            scores.push(row_scores);
        }
        Ok((
            PredictionMatrix {
                image_ids,
                true_labels,
                scores,
            },
            class_names,
        ))
    }

    pub fn load_csv(path: &Path) -> Result<(Self, Vec<String>)> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::read_csv(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (PredictionMatrix, Vec<String>) {
        let pm = PredictionMatrix {
            image_ids: vec!["sp0/a.png".into(), "sp1/b.png".into()],
            true_labels: vec![0, 1],
            scores: vec![vec![0.75, 0.25], vec![0.1, 0.9]],
        };
        (pm, vec!["Acer".to_string(), "Ulmus glabra".to_string()])
    }

    #[test]
    fn csv_round_trip_at_six_decimals() {
        let (pm, names) = sample();
        let mut buf = Vec::new();
        pm.write_csv(&mut buf, &names).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("image_id,true_label,p_Acer,p_Ulmus glabra"));
        assert!(text.contains("0.750000"));

        let (back, back_names) = PredictionMatrix::read_csv(&buf[..]).unwrap();
        assert_eq!(back_names, names);
        assert_eq!(back, pm);
        back.validate(2).unwrap();
    }

    #[test]
    fn validate_rejects_bad_rows() {
        let (mut pm, _) = sample();
        pm.scores[0] = vec![0.9, 0.9];
        assert!(pm.validate(2).is_err());

        let (mut pm, _) = sample();
        pm.true_labels[1] = 5;
        assert!(matches!(pm.validate(2), Err(Error::LabelOutOfRange { .. })));

        let (mut pm, _) = sample();
        pm.scores[1] = vec![1.0];
        assert!(matches!(pm.validate(2), Err(Error::RaggedScores { .. })));
    }

    #[test]
    fn read_rejects_malformed_header() {
        let bad = b"id,label,p_a\n1,0,1.0\n";
        assert!(PredictionMatrix::read_csv(&bad[..]).is_err());
    }
}
