//! Synthetic accelerometer dataset generator.
//!
//! Signal models are deliberately simple sinusoids, ramps and impulses: the
//! goal is separable-but-confusable classes (walk and stairs share the gait
//! frequency), not biomechanical realism. The z axis carries a 1 g gravity
//! baseline so static postures differ by orientation.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{ActivityLabel, LabeledStream, Sample};
use crate::seed::mix;
use crate::{HarError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_subjects: u32,
    pub n_trials: u32,
    pub activities: Vec<ActivityLabel>,
    /// Duration in seconds per activity id.
    pub seconds_per_activity: BTreeMap<u8, f64>,
    pub sample_rate_hz: u32,
    pub seed: u64,
    pub noise_std: f64,
    pub subject_variability: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let activities: Vec<ActivityLabel> = [1u8, 2, 3, 4, 5, 6, 7, 8, 9, 10]
            .iter()
            .map(|&id| ActivityLabel::new(id).unwrap())
            .collect();
        let seconds_per_activity = activities
            .iter()
            .map(|a| {
                let secs = match a.id() {
                    6..=9 => 1.0, // falls are short; imbalance arises naturally
                    1 | 2 => 20.0,
                    _ => 30.0,
                };
                (a.id(), secs)
            })
            .collect();
        SynthConfig {
            n_subjects: 6,
            n_trials: 6,
            activities,
            seconds_per_activity,
            sample_rate_hz: 64,
            seed: 42,
            noise_std: 0.05,
            subject_variability: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(HarError::Config(
                "synth.n_subjects must be >= 2 (LOSO needs at least two subjects)".into(),
            ));
        }
        if self.n_trials == 0 {
            return Err(HarError::Config("synth.n_trials must be positive".into()));
        }
        if self.sample_rate_hz == 0 {
            return Err(HarError::Config("synth.sample_rate_hz must be positive".into()));
        }
        if self.activities.is_empty() {
            return Err(HarError::Config("synth.activities must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.subject_variability) {
            return Err(HarError::Config(
                "synth.subject_variability must be in [0, 1]".into(),
            ));
        }
        for a in &self.activities {
            if a.is_transitional() {
                return Err(HarError::Config(
                    "synth.activities must not include the transitional class".into(),
                ));
            }
            match self.seconds_per_activity.get(&a.id()) {
                Some(d) if *d > 0.0 => {}
                _ => {
                    return Err(HarError::Config(format!(
                        "missing or non-positive duration for activity {}",
                        a.name()
                    )))
                }
            }
        }
        Ok(())
    }

    /// Base gait frequency for a subject: 2.0 Hz center, spread up to
    /// Uniform(1.6, 2.4) at full variability.
    pub fn gait_frequency(&self, subject: u32) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(self.seed, 0x5_0000 + subject as u64));
        let u: f64 = rng.gen_range(-0.4..0.4);
        2.0 + self.subject_variability * u
    }
}

struct AxisSignal {
    ax: f64,
    ay: f64,
    az: f64,
}

/// Noise-free signal model at time `t` seconds into the activity.
fn activity_signal(id: u8, t: f64, gait_hz: f64, amp: f64) -> AxisSignal {
    let walk = |freq: f64, a: f64| AxisSignal {
        ax: 0.3 * a * (2.0 * PI * freq * t + 1.0).sin(),
        ay: 0.2 * a * (2.0 * PI * freq * t + 2.0).sin(),
        az: 1.0 + a * (2.0 * PI * freq * t).sin(),
    };
    // slow sawtooth shared by both stair directions
    let ramp = (t * 0.2).fract();
    let impulse = 3.0 * (-((t - 0.5) / 0.1).powi(2)).exp();
    match id {
        3 => walk(gait_hz, amp),
        4 => walk(2.0 * gait_hz, 2.0 * amp),
        1 => {
            let mut s = walk(gait_hz, amp);
            s.az += 0.25 * ramp;
            s
        }
        2 => {
            let mut s = walk(gait_hz, amp);
            s.az -= 0.25 * ramp;
            s
        }
        5 => AxisSignal {
            ax: 0.0,
            ay: 0.0,
            az: 1.0,
        },
        10 => AxisSignal {
            ax: 1.0,
            ay: 0.0,
            az: 0.0,
        },
        6 => AxisSignal {
            ax: 0.0,
            ay: impulse,
            az: 1.0,
        },
        7 => AxisSignal {
            ax: 0.0,
            ay: -impulse,
            az: 1.0,
        },
        8 => AxisSignal {
            ax: impulse,
            ay: 0.0,
            az: 1.0,
        },
        9 => AxisSignal {
            ax: -impulse,
            ay: 0.0,
            az: 1.0,
        },
        _ => unreachable!("validated activity id"),
    }
}

/// Deterministic labeled dataset: one stream per (subject, trial), activity
/// order shuffled per trial, amplitude jittered +-10% per trial.
pub fn generate_dataset(config: &SynthConfig) -> Result<Vec<LabeledStream>> {
    config.validate()?;
    let mut streams = Vec::new();
    for subject in 1..=config.n_subjects {
        let gait_hz = config.gait_frequency(subject);
        for trial in 1..=config.n_trials {
            streams.push(generate_trial(config, subject, trial, gait_hz)?);
        }
    }
    Ok(streams)
}

fn generate_trial(
    config: &SynthConfig,
    subject: u32,
    trial: u32,
    gait_hz: f64,
) -> Result<LabeledStream> {
    let salt = 0xA_0000 + (subject as u64) * 1000 + trial as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(mix(config.seed, salt));
    let mut order: Vec<ActivityLabel> = config.activities.clone();
    // Fisher-Yates with the trial RNG
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let amp = 0.5 * (1.0 + rng.gen_range(-0.1..0.1));
    let rate = config.sample_rate_hz as f64;
    let base_ms = 1_700_000_000_000i64
        + subject as i64 * 86_400_000
        + trial as i64 * 3_600_000;

    let mut samples = Vec::new();
    let mut index = 0i64;
    for activity in &order {
        let duration = config.seconds_per_activity[&activity.id()];
        let n = (duration * rate).round() as usize;
        for i in 0..n {
            let t = i as f64 / rate;
            let s = activity_signal(activity.id(), t, gait_hz, amp);
            let ax = s.ax + config.noise_std * standard_normal(&mut rng);
            let ay = s.ay + config.noise_std * standard_normal(&mut rng);
            let az = s.az + config.noise_std * standard_normal(&mut rng);
            samples.push(Sample {
                timestamp_ms: base_ms + (index as f64 * 1000.0 / rate).round() as i64,
                ax,
                ay,
                az,
                an: (ax * ax + ay * ay + az * az).sqrt(),
                label: *activity,
            });
            index += 1;
        }
    }
    Ok(LabeledStream {
        subject_id: subject,
        trial_id: trial,
        sample_rate_hz: config.sample_rate_hz,
        samples,
    })
}

/// Box-Muller from the uniform stream.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
