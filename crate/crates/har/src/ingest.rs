//! CSV dataset ingestion: parsing, norm recomputation and removal of the
//! transitional class.
//!
//! Format (10 columns, header row, UTF-8, `,` separator, `.` decimal):
//! `index,participant,participant_ref,trial,timestamp,ax,ay,az,an,activity`
//! with timestamps as `YYYY-mm-dd HH:MM:SS.FFF`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use chrono::NaiveDateTime;

use crate::model::{ActivityLabel, LabeledStream, Sample};
use crate::{HarError, Result};

pub const CSV_HEADER: &str = "index,participant,participant_ref,trial,timestamp,ax,ay,az,an,activity";

const TS_FORMAT: &str = "%Y-%m-%d %H:%M:%S%.3f";

/// Euclidean norm of the three axes.
pub fn compute_norm(ax: f64, ay: f64, az: f64) -> Result<f64> {
    if !(ax.is_finite() && ay.is_finite() && az.is_finite()) {
        return Err(HarError::InvalidInput(format!(
            "non-finite acceleration ({ax}, {ay}, {az})"
        )));
    }
    Ok((ax * ax + ay * ay + az * az).sqrt())
}

/// Remove all transitional samples, preserving order. The resulting
/// timestamp gaps later break windows in segmentation.
pub fn drop_transitional(stream: &LabeledStream) -> LabeledStream {
    LabeledStream {
        subject_id: stream.subject_id,
        trial_id: stream.trial_id,
        sample_rate_hz: stream.sample_rate_hz,
        samples: stream
            .samples
            .iter()
            .filter(|s| !s.label.is_transitional())
            .copied()
            .collect(),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> HarError {
    HarError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Parse a dataset CSV into one stream per (participant, trial) group.
/// The norm channel is recomputed from the raw axes, not trusted from the
/// file. The transitional class is retained; callers drop it explicitly.
pub fn parse_dataset(path: &Path) -> Result<Vec<LabeledStream>> {
    let text = fs::read_to_string(path).map_err(|e| HarError::io(path.display().to_string(), e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(parse_err(path, 1, format!("bad header {header:?}")));
        }
        None => return Err(parse_err(path, 1, "empty file")),
    }

    // BTreeMap keeps the output ordered by (participant, trial).
    let mut groups: BTreeMap<(u32, u32), Vec<Sample>> = BTreeMap::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 10 columns, found {}", fields.len()),
            ));
        }
        let participant: u32 = fields[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad participant {:?}", fields[1])))?;
        let trial: u32 = fields[3]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, lineno, format!("bad trial {:?}", fields[3])))?;
        let ts = NaiveDateTime::parse_from_str(fields[4].trim(), TS_FORMAT)
            .map_err(|_| parse_err(path, lineno, format!("bad timestamp {:?}", fields[4])))?;
        let timestamp_ms = ts.and_utc().timestamp_millis();
        let axis = |i: usize| -> Result<f64> {
            fields[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| parse_err(path, lineno, format!("bad float {:?}", fields[i])))
        };
        let ax = axis(5)?;
        let ay = axis(6)?;
        let az = axis(7)?;
        let _an_from_file = axis(8)?;
        let label = ActivityLabel::from_name(fields[9].trim())?;
        let an = compute_norm(ax, ay, az)
            .map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let group = groups.entry((participant, trial)).or_default();
        if let Some(last) = group.last() {
            if timestamp_ms <= last.timestamp_ms {
                return Err(parse_err(
                    path,
                    lineno,
                    format!(
                        "non-monotonic timestamp within participant {participant} trial {trial}"
                    ),
                ));
            }
        }
        group.push(Sample {
            timestamp_ms,
            ax,
            ay,
            az,
            an,
            label,
        });
    }

    Ok(groups
        .into_iter()
        .map(|((subject_id, trial_id), samples)| LabeledStream {
            subject_id,
            trial_id,
            sample_rate_hz: 64,
            samples,
        })
        .collect())
}

fn format_ts(ms: i64) -> String {
    chrono::DateTime::from_timestamp_millis(ms)
        .expect("timestamp in representable range")
        .naive_utc()
        .format(TS_FORMAT)
        .to_string()
}

/// Write streams in the ingestion CSV format (inverse of `parse_dataset`).
pub fn write_dataset(streams: &[LabeledStream], path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut index = 1usize;
    for stream in streams {
        let reference = format!("P{:02}", stream.subject_id);
        for s in &stream.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                index,
                stream.subject_id,
                reference,
                stream.trial_id,
                format_ts(s.timestamp_ms),
                s.ax,
                s.ay,
                s.az,
                s.an,
                s.label.name()
            ));
            index += 1;
        }
    }
    let mut file =
        fs::File::create(path).map_err(|e| HarError::io(path.display().to_string(), e))?;
    file.write_all(out.as_bytes())
        .map_err(|e| HarError::io(path.display().to_string(), e))
}
