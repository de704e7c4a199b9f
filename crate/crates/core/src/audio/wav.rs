//! RIFF/WAVE reading and writing for 16/24-bit PCM and 32-bit float.
//!
//! Integer PCM maps to [-1, 1) by division by `2^(bits-1)`; encoding rounds
//! and saturates, so full-scale -1.0 lands on the minimum code.

use std::io::Cursor;

use crate::buffer::AudioBuffer;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 0x0001;
const FORMAT_FLOAT: u16 = 0x0003;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Pcm16,
    Pcm24,
    Float32,
}

impl BitDepth {
    pub fn bits(self) -> u16 {
        match self {
            BitDepth::Pcm16 => 16,
            BitDepth::Pcm24 => 24,
            BitDepth::Float32 => 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub channels: u16,
    pub bit_depth: BitDepth,
    pub sample_rate_hz: u32,
    /// Interleaved, normalized samples.
    pub samples: Vec<f64>,
}

impl WavData {
    pub fn from_buffer(buffer: &AudioBuffer, bit_depth: BitDepth) -> Self {
        Self {
            channels: 1,
            bit_depth,
            sample_rate_hz: buffer.sample_rate_hz.round() as u32,
            samples: buffer.samples.clone(),
        }
    }

    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels as usize
    }

    /// Mono view, averaging channels.
    pub fn to_mono(&self) -> AudioBuffer {
        let ch = self.channels as usize;
        let samples = if ch == 1 {
            self.samples.clone()
        } else {
            self.samples
                .chunks_exact(ch)
                .map(|frame| frame.iter().sum::<f64>() / ch as f64)
                .collect()
        };
        AudioBuffer::new(samples, self.sample_rate_hz as f64)
    }
}

pub fn read_wav(bytes: &[u8]) -> Result<WavData> {
    let (tag, bits) = peek_format(bytes)?;
    let reader = hound::WavReader::new(Cursor::new(bytes)).map_err(|e| match e {
        hound::Error::Unsupported => Error::UnsupportedWav { tag, bits },
        other => Error::Wav(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels == 0 || spec.channels > 2 {
        return Err(Error::Wav(format!("{} channels; only mono and stereo are supported", spec.channels)));
    }
    let bit_depth = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => BitDepth::Pcm16,
        (hound::SampleFormat::Int, 24) => BitDepth::Pcm24,
        (hound::SampleFormat::Float, 32) => BitDepth::Float32,
        (_, bits) => return Err(Error::UnsupportedWav { tag, bits }),
    };
    let expected = reader.len() as usize;
    let samples: Vec<f64> = match bit_depth {
        BitDepth::Float32 => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        _ => {
            let scale = (1_i64 << (bit_depth.bits() - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
        }
    }
    .map_err(|e| Error::Wav(format!("truncated data chunk: {e}")))?;
    if samples.len() != expected || !samples.len().is_multiple_of(spec.channels as usize) {
        return Err(Error::Wav(format!(
            "truncated data chunk: header declares {expected} samples, found {}",
            samples.len()
        )));
    }
    Ok(WavData { channels: spec.channels, bit_depth, sample_rate_hz: spec.sample_rate, samples })
}

pub fn write_wav(wav: &WavData) -> Result<Vec<u8>> {
    let spec = hound::WavSpec {
        channels: wav.channels,
        sample_rate: wav.sample_rate_hz,
        bits_per_sample: wav.bit_depth.bits(),
        sample_format: match wav.bit_depth {
            BitDepth::Float32 => hound::SampleFormat::Float,
            _ => hound::SampleFormat::Int,
        },
    };
    let mut cursor = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut cursor, spec).map_err(|e| Error::Wav(e.to_string()))?;
        match wav.bit_depth {
            BitDepth::Float32 => {
                for &s in &wav.samples {
                    writer.write_sample(s as f32).map_err(|e| Error::Wav(e.to_string()))?;
                }
            }
            depth => {
                for &s in &wav.samples {
                    writer.write_sample(quantize(s, depth.bits())).map_err(|e| Error::Wav(e.to_string()))?;
                }
            }
        }
        writer.finalize().map_err(|e| Error::Wav(e.to_string()))?;
    }
    Ok(cursor.into_inner())
}

fn quantize(x: f64, bits: u16) -> i32 {
    let scale = (1_i64 << (bits - 1)) as f64;
    let v = (x * scale).round();
    v.clamp(-scale, scale - 1.0) as i32
}

// Pull the format tag and bit depth out of the fmt chunk so unsupported files
// can be reported by what they are.
fn peek_format(bytes: &[u8]) -> Result<(u16, u16)> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::Wav("not a RIFF/WAVE file".into()));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes([bytes[pos + 4], bytes[pos + 5], bytes[pos + 6], bytes[pos + 7]]) as usize;
        let body = pos + 8;
        if id == b"fmt " {
            if size < 16 || body + size > bytes.len() {
                return Err(Error::Wav("truncated fmt chunk".into()));
            }
            let mut tag = u16_at(body);
            let bits = u16_at(body + 14);
            if tag == FORMAT_EXTENSIBLE && size >= 40 {
                // First two bytes of the sub-format GUID carry the real tag.
                tag = u16_at(body + 24);
            }
            if tag != FORMAT_PCM && tag != FORMAT_FLOAT {
                return Err(Error::UnsupportedWav { tag, bits });
            }
            return Ok((tag, bits));
        }
        pos = body + size + (size & 1);
    }
    Err(Error::Wav("missing fmt chunk".into()))
}
