//! Minimal RIFF/WAVE reader and writer.
//!
//! Reads PCM 16-bit and IEEE-float 32-bit, mono or stereo (stereo is averaged
//! to mono). Writes 16-bit mono PCM.

use super::AudioClip;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn u16_at(b: &[u8], off: usize) -> u16 {
    u16::from_le_bytes([b[off], b[off + 1]])
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes([b[off], b[off + 1], b[off + 2], b[off + 3]])
}

fn wav_err(msg: impl Into<String>) -> Error {
    Error::Wav(msg.into())
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 {
        return Err(wav_err("RIFF header: file shorter than 12 bytes"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(wav_err("RIFF header: missing 'RIFF' magic"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(wav_err("RIFF header: form type is not 'WAVE'"));
    }

    let mut format: Option<Format> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let declared = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                if declared < 16 || body_start + declared > bytes.len() {
                    return Err(wav_err("fmt chunk: shorter than 16 bytes"));
                }
                let body = &bytes[body_start..body_start + declared];
                let mut tag = u16_at(body, 0);
                if tag == FORMAT_EXTENSIBLE {
                    if declared < 26 {
                        return Err(wav_err("fmt chunk: extensible format without sub-format"));
                    }
                    tag = u16_at(body, 24);
                }
                format = Some(Format {
                    tag,
                    channels: u16_at(body, 2),
                    sample_rate: u32_at(body, 4),
                    bits: u16_at(body, 14),
                });
            }
            b"data" => {
                let fmt = format.as_ref().ok_or_else(|| wav_err("data chunk: appears before fmt chunk"))?;
                if body_start + declared > bytes.len() {
                    return Err(wav_err("data chunk shorter than declared"));
                }
                return decode_samples(fmt, &bytes[body_start..body_start + declared]);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body_start + declared + (declared & 1);
    }
    Err(wav_err("data chunk: not found"))
}

fn decode_samples(fmt: &Format, data: &[u8]) -> Result<AudioClip> {
    if fmt.channels != 1 && fmt.channels != 2 {
        return Err(wav_err(format!("fmt chunk: unsupported channel count {}", fmt.channels)));
    }
    if fmt.sample_rate == 0 {
        return Err(wav_err("fmt chunk: sample rate is zero"));
    }
    let width = match (fmt.tag, fmt.bits) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (FORMAT_PCM, bits) | (FORMAT_IEEE_FLOAT, bits) => {
            return Err(wav_err(format!("fmt chunk: unsupported bits per sample {bits}")));
        }
        (tag, _) => return Err(wav_err(format!("fmt chunk: unsupported audio format tag {tag}"))),
    };
    let channels = fmt.channels as usize;
    let frame = width * channels;
    let read = |chunk: &[u8]| -> f64 {
        if width == 2 {
            i16::from_le_bytes([chunk[0], chunk[1]]) as f64 / 32768.0
        } else {
            f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64
        }
    };
    let samples: Vec<f64> = data
        .chunks_exact(frame)
        .map(|f| f.chunks_exact(width).map(read).sum::<f64>() / channels as f64)
        .collect();
    if samples.is_empty() {
        return Err(wav_err("data chunk: contains no complete sample frames"));
    }
    AudioClip::new(samples, fmt.sample_rate)
}

/// Quantises one sample to signed 16-bit.
pub fn quantize_i16(sample: f64) -> i16 {
    (sample * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

/// Encodes a clip as 16-bit mono PCM.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples().len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for &s in clip.samples() {
        out.extend_from_slice(&quantize_i16(s).to_le_bytes());
    }
    out
}
