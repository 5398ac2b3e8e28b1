use std::io::Cursor;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::{AudioClip, IngestError};
use crate::scalar::Scalar;

const PCM16_SCALE: f64 = 32768.0;

/// What to do with float samples outside [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampPolicy {
    /// Largest tolerated fraction of clamped samples before the file is
    /// rejected.
    pub max_clipped_fraction: f64,
}

impl Default for ClampPolicy {
    fn default() -> Self {
        Self {
            max_clipped_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub channels: u16,
    pub frames: usize,
    pub clamped: usize,
}

/// Loads a PCM16 or float32 WAV file as a mono clip (channel 0).
pub fn load_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioClip<T>, IngestError> {
    load_wav_with(path, ClampPolicy::default()).map(|(clip, _)| clip)
}

pub fn load_wav_with<T: Scalar>(
    path: impl AsRef<Path>,
    policy: ClampPolicy,
) -> Result<(AudioClip<T>, LoadStats), IngestError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    if std::fs::metadata(path)?.len() == 0 {
        return Err(IngestError::EmptyFile(shown));
    }
    let reader = WavReader::open(path).map_err(|e| map_hound(e, &shown))?;
    let spec = reader.spec();
    let channels = usize::from(spec.channels.max(1));

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| f64::from(v) / PCM16_SCALE))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(e, &shown))?,
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(e, &shown))?,
        (fmt, bits) => {
            return Err(IngestError::UnsupportedFormat(format!(
                "{shown}: {bits}-bit {fmt:?} samples (only 16-bit PCM and 32-bit float are read)"
            )))
        }
    };
    if interleaved.is_empty() {
        return Err(IngestError::EmptyFile(shown));
    }

    let mut clamped = 0usize;
    let mut samples = Vec::with_capacity(interleaved.len() / channels);
    for (i, &v) in interleaved.iter().step_by(channels).enumerate() {
        if !v.is_finite() {
            return Err(IngestError::NonFiniteSample(i));
        }
        let c = if v > 1.0 {
            clamped += 1;
            1.0
        } else if v < -1.0 {
            clamped += 1;
            -1.0
        } else {
            v
        };
        samples.push(T::lit(c));
    }
    let total = samples.len();
    if clamped > 0 {
        if clamped as f64 > policy.max_clipped_fraction * total as f64 {
            return Err(IngestError::ExcessiveClipping { clipped: clamped, total });
        }
        tracing::warn!(path = %shown, clamped, total, "clamped out-of-range samples");
    }

    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| shown.clone());
    let clip = AudioClip {
        id,
        samples,
        sample_rate: spec.sample_rate,
        source_path: shown,
        start_timestamp: None,
    };
    let stats = LoadStats {
        channels: spec.channels,
        frames: total,
        clamped,
    };
    Ok((clip, stats))
}

fn map_hound(err: hound::Error, path: &str) -> IngestError {
    match err {
        hound::Error::IoError(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
            IngestError::CorruptHeader(format!("{path}: truncated file"))
        }
        hound::Error::IoError(e) => IngestError::Io(e),
        hound::Error::FormatError(msg) => IngestError::CorruptHeader(format!("{path}: {msg}")),
        hound::Error::Unsupported => {
            IngestError::UnsupportedFormat(format!("{path}: unsupported WAV encoding"))
        }
        other => IngestError::CorruptHeader(format!("{path}: {other}")),
    }
}

/// Encodes mono samples as a canonical 44-byte-header PCM16 WAV.
pub fn encode_wav_pcm16<T: Scalar>(samples: &[T], rate: u32) -> Vec<u8> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut buf = Cursor::new(Vec::with_capacity(44 + 2 * samples.len()));
    {
        let mut writer = WavWriter::new(&mut buf, spec).expect("in-memory WAV writer");
        for &s in samples {
            let v = (s.as_f64() * PCM16_SCALE).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(v).expect("in-memory write");
        }
        writer.finalize().expect("in-memory finalize");
    }
    buf.into_inner()
}
