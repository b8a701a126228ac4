use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::dataset::{RawRecording, UNLABELED};
use crate::error::{Error, Result};

pub const RAW_COLUMNS: [&str; 11] = ["subject", "t", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "label"];

/// Largest allowed deviation of any time step from the subject's first step.
pub const SAMPLING_TOLERANCE_S: f64 = 1e-6;

struct Builder {
    rec: RawRecording,
    times: Vec<f64>,
    first_line: u64,
}

pub fn read_raw_csv(path: impl AsRef<Path>) -> Result<Vec<RawRecording>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_raw_csv(file)
}

/// One recording per subject, in order of first appearance.
pub fn parse_raw_csv(input: impl Read) -> Result<Vec<RawRecording>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let mut col = [0usize; 11];
    for (slot, name) in col.iter_mut().zip(RAW_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))?;
    }

    let mut order: Vec<String> = Vec::new();
    let mut builders: HashMap<String, Builder> = HashMap::new();
    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(col[i]).unwrap_or("");
        let number = |i: usize| -> Result<f64> {
            let raw = field(i);
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    line,
                    msg: format!("column `{}`: `{raw}` is not a finite number", RAW_COLUMNS[i]),
                }),
            }
        };
        let subject = field(0).to_string();
        if subject.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "empty subject".into(),
            });
        }
        let t = number(1)?;
        let values = (2..10).map(number).collect::<Result<Vec<f64>>>()?;
        let label = match field(10).parse::<i8>() {
            Ok(l) if l == UNLABELED || (0..=3).contains(&l) => l,
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("label `{}` is not one of -1, 0, 1, 2, 3", field(10)),
                })
            }
        };
        let b = builders.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            Builder {
                rec: RawRecording {
                    subject_id: subject,
                    sample_rate_hz: 0.0,
                    channels: vec![Vec::new(); 8],
                    labels: Vec::new(),
                },
                times: Vec::new(),
                first_line: line,
            }
        });
        if let Some(&prev) = b.times.last() {
            if t <= prev {
                return Err(Error::Parse {
                    line,
                    msg: format!(
                        "time {t} does not increase past {prev} for subject {}",
                        b.rec.subject_id
                    ),
                });
            }
        }
        b.times.push(t);
        for (ch, v) in b.rec.channels.iter_mut().zip(values) {
            ch.push(v);
        }
        b.rec.labels.push(label);
    }

    order
        .into_iter()
        .map(|s| {
            let mut b = builders.remove(&s).expect("builder for every subject");
            b.rec.sample_rate_hz = infer_rate(&b.times, &b.rec.subject_id, b.first_line)?;
            Ok(b.rec)
        })
        .collect()
}

fn infer_rate(times: &[f64], subject: &str, line: u64) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Schema(format!(
            "subject {subject} (from line {line}) has fewer than two samples; sample rate cannot be inferred"
        )));
    }
    let step = times[1] - times[0];
    for (i, w) in times.windows(2).enumerate() {
        let dt = w[1] - w[0];
        if (dt - step).abs() > SAMPLING_TOLERANCE_S {
            return Err(Error::Schema(format!(
                "subject {subject}: sample {} has interval {dt} s, expected {step} s",
                i + 1
            )));
        }
    }
    Ok((times.len() - 1) as f64 / (times[times.len() - 1] - times[0]))
}
