//! Desk-scale synthetic dataset generator in the ingest layout.
//!
//! Both classes share the same per-segment noise covariance; they differ
//! only in the amplitude of a slow alternating mean envelope (a square wave
//! spanning whole segments, with zero trial mean). Under per-trial centering
//! that envelope survives into the per-segment means, where the
//! cross-covariance picks it up at roughly √N better signal-to-noise than
//! the sample covariance — which is what the block representation is built
//! to exploit. Because the envelope magnitude is constant across segments,
//! the sample covariance sees no temporal pattern either, only a weak
//! constant offset below its estimation noise.

use super::CliError;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Per-class generative knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassGen {
    /// Multiplier on the shared noise covariance (1.0 keeps the generator
    /// identical across classes).
    pub covariance_scale: f64,
    /// Amplitude of the slow mean envelope.
    pub envelope_amplitude: f64,
}

/// Synthetic cohort specification; deterministic per seed, byte-identical
/// files included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub subjects: usize,
    pub trials_per_subject: usize,
    pub duration_seconds: f64,
    pub class0: ClassGen,
    pub class1: ClassGen,
    pub envelope_period_seconds: f64,
    pub noise_level: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            subjects: 8,
            trials_per_subject: 4,
            duration_seconds: 480.0,
            class0: ClassGen {
                covariance_scale: 1.0,
                envelope_amplitude: 0.0,
            },
            class1: ClassGen {
                covariance_scale: 1.0,
                envelope_amplitude: 0.28,
            },
            envelope_period_seconds: 80.0,
            noise_level: 1.0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    /// Same spec with the envelope difference removed: both classes get the
    /// class-1 amplitude, so no statistic carries label information.
    pub fn null_effect(mut self) -> Self {
        self.class0.envelope_amplitude = self.class1.envelope_amplitude;
        self.class0.covariance_scale = self.class1.covariance_scale;
        self
    }
}

/// Fixed channel roster of the generator: name, rate, baseline noise scale,
/// and the channel's weight in the envelope direction. Noise scales grow
/// with the rate so that after anti-aliased decimation to the 4 Hz common
/// rate every channel carries roughly unit noise.
pub const SYNTH_CHANNELS: [(&str, f64, f64, f64); 6] = [
    ("eda", 4.0, 1.0, 1.0),
    ("hr", 4.0, 1.0, -1.0),
    ("resp", 8.0, 1.4, 1.0),
    ("temp", 4.0, 1.0, -1.0),
    ("acc_x", 16.0, 2.0, 1.0),
    ("acc_y", 16.0, 2.0, -1.0),
];

/// Deterministic Gaussian stream: Box–Muller over ChaCha8 uniforms.
struct Gauss(rand_chacha::ChaCha8Rng);

impl Gauss {
    fn new(seed: u64) -> Self {
        use rand::SeedableRng;
        Self(rand_chacha::ChaCha8Rng::seed_from_u64(seed))
    }

    fn next(&mut self) -> f64 {
        use rand::Rng;
        let u1: f64 = self.0.random_range(1e-12..1.0);
        let u2: f64 = self.0.random_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::Rng;
        self.0.random_range(lo..hi)
    }
}

/// Generate the dataset under `root` in the ingest layout
/// (`root/<subject>/<trial>/<channel>.csv` plus per-trial `meta.json`).
pub fn generate(spec: &SyntheticSpec, root: &Path) -> Result<(), CliError> {
    if spec.subjects == 0 || spec.trials_per_subject == 0 || spec.duration_seconds <= 0.0 {
        return Err(CliError::Usage(
            "synthetic spec needs subjects, trials and a positive duration".into(),
        ));
    }
    if spec.trials_per_subject < 2 {
        return Err(CliError::Usage(
            "need at least 2 trials per subject so both classes appear".into(),
        ));
    }
    let mut rng = Gauss::new(spec.seed);
    let dir_norm = (SYNTH_CHANNELS.len() as f64).sqrt();

    for s in 0..spec.subjects {
        let subject = format!("s{s:02}");
        // Subject idiosyncrasies: per-channel offset and a mild amplitude
        // jitter, drawn in a fixed order.
        let offsets: Vec<f64> = SYNTH_CHANNELS.iter().map(|_| 0.5 * rng.next()).collect();
        let jitter = rng.uniform(0.9, 1.1);
        for t in 0..spec.trials_per_subject {
            let trial = format!("t{t:02}");
            let label = t % 2 == 1;
            let class = if label { &spec.class1 } else { &spec.class0 };
            // Per-trial sign of the alternating envelope; its square is what
            // carries class information, so the sign itself is uninformative.
            let trial_sign = if rng.uniform(0.0, 1.0) < 0.5 { 1.0 } else { -1.0 };
            let trial_dir = root.join(&subject).join(&trial);
            std::fs::create_dir_all(&trial_dir).map_err(|source| CliError::Io {
                path: trial_dir.clone(),
                source,
            })?;

            let mut rates = std::collections::BTreeMap::new();
            for (ci, (name, rate, sigma, direction)) in SYNTH_CHANNELS.iter().enumerate() {
                let n = (spec.duration_seconds * rate) as usize;
                let mut body = String::with_capacity(n * 24);
                body.push_str("t,value\n");
                let u = direction / dir_norm;
                let half_period = spec.envelope_period_seconds / 2.0;
                for i in 0..n {
                    let time = i as f64 / rate;
                    // Square wave of the configured period: +1 on the first
                    // half-period, −1 on the second, constant within each.
                    let square = if (time / half_period).floor() as i64 % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    let envelope = class.envelope_amplitude * jitter * u * trial_sign * square;
                    let value = offsets[ci]
                        + spec.noise_level * class.covariance_scale * sigma * rng.next()
                        + envelope;
                    let _ = writeln!(body, "{time:.6},{value:.12e}");
                }
                let path = trial_dir.join(format!("{name}.csv"));
                std::fs::write(&path, body).map_err(|source| CliError::Io { path, source })?;
                rates.insert(name.to_string(), *rate);
            }

            let meta = serde_json::json!({
                "label": if label { 1 } else { 0 },
                "rates": rates,
            });
            let path = trial_dir.join("meta.json");
            std::fs::write(&path, serde_json::to_string_pretty(&meta).unwrap())
                .map_err(|source| CliError::Io { path, source })?;
        }
    }
    Ok(())
}
