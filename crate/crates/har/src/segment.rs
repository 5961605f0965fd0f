//! Fixed-size overlapping sliding-window segmentation into a K x T x m
//! tensor of label-pure windows.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::Path;

use crate::model::{ActivityLabel, LabeledStream};
use crate::{HarError, Result};

/// Channel count: Ax, Ay, Az, An in that order.
pub const CHANNELS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSpec {
    pub window_samples: usize,
    pub overlap_fraction: f64,
}

impl Default for WindowSpec {
    fn default() -> Self {
        // 1 s at 64 Hz with 50% overlap
        WindowSpec {
            window_samples: 64,
            overlap_fraction: 0.5,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.window_samples < 2 {
            return Err(HarError::Config("window_samples must be >= 2".into()));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(HarError::Config(
                "overlap_fraction must be in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Round-half-up of window_samples * (1 - overlap); 32 for the defaults.
    pub fn stride(&self) -> usize {
        let s = (self.window_samples as f64 * (1.0 - self.overlap_fraction) + 0.5).floor() as usize;
        s.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub subject_id: u32,
    pub trial_id: u32,
    pub start_index: usize,
}

/// K segments of T samples over m=4 channels, each label-pure.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTensor {
    /// Row-major (segment, time, channel).
    pub data: Vec<f64>,
    pub n_segments: usize,
    pub window_len: usize,
    pub labels: Vec<ActivityLabel>,
    pub provenance: Vec<Provenance>,
}

impl SegmentTensor {
    pub fn empty(window_len: usize) -> Self {
        SegmentTensor {
            data: Vec::new(),
            n_segments: 0,
            window_len,
            labels: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn value(&self, segment: usize, t: usize, channel: usize) -> f64 {
        self.data[(segment * self.window_len + t) * CHANNELS + channel]
    }

    /// One channel of one segment as a contiguous vector.
    pub fn channel(&self, segment: usize, channel: usize) -> Vec<f64> {
        (0..self.window_len)
            .map(|t| self.value(segment, t, channel))
            .collect()
    }

    /// Concatenate tensors with identical window length.
    pub fn concat(parts: &[SegmentTensor]) -> SegmentTensor {
        let window_len = parts.first().map(|p| p.window_len).unwrap_or(0);
        let mut out = SegmentTensor::empty(window_len);
        for p in parts {
            assert_eq!(p.window_len, window_len, "window length mismatch");
            out.data.extend_from_slice(&p.data);
            out.labels.extend_from_slice(&p.labels);
            out.provenance.extend_from_slice(&p.provenance);
            out.n_segments += p.n_segments;
        }
        out
    }
}

/// Upper bound on the number of windows: floor((N-T)/stride)+1, or 0 for N < T.
pub fn count_segments(n: usize, window: usize, stride: usize) -> usize {
    if n < window {
        0
    } else {
        (n - window) / stride + 1
    }
}

/// Slice a stream into pure, gap-free windows.
///
/// A candidate window is kept iff all T samples share one label and no
/// consecutive timestamp gap exceeds 1.5x the nominal sample period (gaps
/// arise from transitional-class removal).
pub fn segment_stream(stream: &LabeledStream, spec: &WindowSpec) -> Result<SegmentTensor> {
    spec.validate()?;
    let t = spec.window_samples;
    let stride = spec.stride();
    let n = stream.samples.len();
    let mut tensor = SegmentTensor::empty(t);
    if n < t {
        return Ok(tensor);
    }
    let max_gap_ms = 1.5 * stream.period_ms();
    let mut start = 0usize;
    while start + t <= n {
        let window = &stream.samples[start..start + t];
        let label = window[0].label;
        let pure = window.iter().all(|s| s.label == label);
        let gap_free = window
            .windows(2)
            .all(|p| (p[1].timestamp_ms - p[0].timestamp_ms) as f64 <= max_gap_ms);
        if pure && gap_free {
            for s in window {
                tensor.data.extend_from_slice(&[s.ax, s.ay, s.az, s.an]);
            }
            tensor.labels.push(label);
            tensor.provenance.push(Provenance {
                subject_id: stream.subject_id,
                trial_id: stream.trial_id,
                start_index: start,
            });
            tensor.n_segments += 1;
        }
        start += stride;
    }
    Ok(tensor)
}

/// Binary cache format: little-endian u64 header (K, T, m), K*T*m f64 in
/// row-major (segment, time, channel) order, then K labels as u32.
pub fn write_tensor(tensor: &SegmentTensor, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + tensor.data.len() * 8 + tensor.labels.len() * 4);
    buf.extend_from_slice(&(tensor.n_segments as u64).to_le_bytes());
    buf.extend_from_slice(&(tensor.window_len as u64).to_le_bytes());
    buf.extend_from_slice(&(CHANNELS as u64).to_le_bytes());
    for v in &tensor.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for l in &tensor.labels {
        buf.extend_from_slice(&(l.id() as u32).to_le_bytes());
    }
    let mut file =
        fs::File::create(path).map_err(|e| HarError::io(path.display().to_string(), e))?;
    file.write_all(&buf)
        .map_err(|e| HarError::io(path.display().to_string(), e))
}

pub fn read_tensor(path: &Path) -> Result<SegmentTensor> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| HarError::io(path.display().to_string(), e))?;
    let bad = || HarError::InvalidInput(format!("truncated tensor file {}", path.display()));
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        let end = pos.checked_add(n).ok_or_else(bad)?;
        let slice = bytes.get(pos..end).ok_or_else(bad)?;
        pos = end;
        Ok(slice)
    };
    let k = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let t = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let m = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    if m != CHANNELS {
        return Err(HarError::InvalidInput(format!(
            "tensor file has {m} channels, expected {CHANNELS}"
        )));
    }
    let mut data = Vec::with_capacity(k * t * m);
    for _ in 0..k * t * m {
        data.push(f64::from_le_bytes(take(8)?.try_into().unwrap()));
    }
    let mut labels = Vec::with_capacity(k);
    for _ in 0..k {
        let id = u32::from_le_bytes(take(4)?.try_into().unwrap());
        labels.push(ActivityLabel::new(id as u8)?);
    }
    Ok(SegmentTensor {
        data,
        n_segments: k,
        window_len: t,
        labels,
        // provenance is not persisted in the cache format
        provenance: vec![
            Provenance {
                subject_id: 0,
                trial_id: 0,
                start_index: 0
            };
            k
        ],
    })
}
