//! Raw-frame binary format: a 36-byte little-endian header followed by
//! channel-interleaved samples.
//!
//! Header layout: magic "R2UB" (4) · version u16 · channel_count u16 ·
//! sample_rate u32 · samples_per_channel u32 · sample_format u16
//! (0 = int16, 1 = float32) · gain_db i16 · trigger_epoch u64 ns ·
//! reserved 8 bytes.

use std::io::{Read, Write};

use r2usbl_core::detector::{FrameSource, MultichannelFrame};
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"R2UB";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 36;

#[derive(Debug, Error)]
pub enum RawFileError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("payload truncated: expected {expected} bytes, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("unknown sample format code {0}")]
    UnknownSampleFormat(u16),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFormat {
    Int16,
    Float32,
}

impl SampleFormat {
    fn code(self) -> u16 {
        match self {
            SampleFormat::Int16 => 0,
            SampleFormat::Float32 => 1,
        }
    }

    fn from_code(code: u16) -> Result<Self, RawFileError> {
        match code {
            0 => Ok(SampleFormat::Int16),
            1 => Ok(SampleFormat::Float32),
            other => Err(RawFileError::UnknownSampleFormat(other)),
        }
    }

    fn sample_size(self) -> usize {
        match self {
            SampleFormat::Int16 => 2,
            SampleFormat::Float32 => 4,
        }
    }
}

/// Serialize one frame.
pub fn encode_frame(frame: &MultichannelFrame, format: SampleFormat) -> Vec<u8> {
    let channels = frame.channel_count();
    let samples = frame.samples_per_channel();
    let mut out = Vec::with_capacity(HEADER_LEN + channels * samples * format.sample_size());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(channels as u16).to_le_bytes());
    out.extend_from_slice(&(frame.sample_rate.round() as u32).to_le_bytes());
    out.extend_from_slice(&(samples as u32).to_le_bytes());
    out.extend_from_slice(&format.code().to_le_bytes());
    out.extend_from_slice(&(frame.gain_db.round() as i16).to_le_bytes());
    out.extend_from_slice(&frame.trigger_epoch_ns.to_le_bytes());
    out.extend_from_slice(&[0u8; 8]);
    debug_assert_eq!(out.len(), HEADER_LEN);
    for s in 0..samples {
        for ch in &frame.channels {
            match format {
                SampleFormat::Int16 => {
                    let q = (ch[s].clamp(-1.0, 1.0) * 32_767.0).round() as i16;
                    out.extend_from_slice(&q.to_le_bytes());
                }
                SampleFormat::Float32 => {
                    out.extend_from_slice(&(ch[s] as f32).to_le_bytes());
                }
            }
        }
    }
    out
}

/// Deserialize one frame; returns the frame and the bytes consumed.
pub fn decode_frame(bytes: &[u8]) -> Result<(MultichannelFrame, usize), RawFileError> {
    if bytes.len() < HEADER_LEN {
        return Err(RawFileError::TruncatedPayload { expected: HEADER_LEN, got: bytes.len() });
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    if magic != MAGIC {
        return Err(RawFileError::BadMagic(magic));
    }
    let u16le = |i: usize| u16::from_le_bytes(bytes[i..i + 2].try_into().unwrap());
    let u32le = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u16le(4);
    if version != VERSION {
        return Err(RawFileError::UnsupportedVersion(version));
    }
    let channels = u16le(6) as usize;
    let sample_rate = u32le(8) as f64;
    let samples = u32le(12) as usize;
    let format = SampleFormat::from_code(u16le(16))?;
    let gain_db = i16::from_le_bytes(bytes[18..20].try_into().unwrap()) as f64;
    let trigger_epoch_ns = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let payload = channels * samples * format.sample_size();
    let total = HEADER_LEN + payload;
    if bytes.len() < total {
        return Err(RawFileError::TruncatedPayload { expected: total, got: bytes.len() });
    }
    let mut data = vec![vec![0.0f64; samples]; channels];
    let mut at = HEADER_LEN;
    for s in 0..samples {
        for ch in data.iter_mut() {
            ch[s] = match format {
                SampleFormat::Int16 => {
                    let v = i16::from_le_bytes(bytes[at..at + 2].try_into().unwrap());
                    v as f64 / 32_767.0
                }
                SampleFormat::Float32 => {
                    f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64
                }
            };
            at += format.sample_size();
        }
    }
    Ok((
        MultichannelFrame {
            channels: data,
            sample_rate,
            trigger_epoch_ns,
            gain_db,
            source: FrameSource::Replayed,
        },
        total,
    ))
}

pub fn write_frame<W: Write>(
    writer: &mut W,
    frame: &MultichannelFrame,
    format: SampleFormat,
) -> Result<(), RawFileError> {
    writer.write_all(&encode_frame(frame, format))?;
    Ok(())
}

/// Read the next frame from a stream; `Ok(None)` at a clean end of stream.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<MultichannelFrame>, RawFileError> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        let n = reader.read(&mut header[filled..])?;
        if n == 0 {
            if filled == 0 {
                return Ok(None);
            }
            return Err(RawFileError::TruncatedPayload { expected: HEADER_LEN, got: filled });
        }
        filled += n;
    }
    let channels = u16::from_le_bytes(header[6..8].try_into().unwrap()) as usize;
    let samples = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let format = SampleFormat::from_code(u16::from_le_bytes(header[16..18].try_into().unwrap()))?;
    let payload = channels * samples * format.sample_size();
    let mut bytes = header.to_vec();
    bytes.resize(HEADER_LEN + payload, 0);
    reader.read_exact(&mut bytes[HEADER_LEN..]).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            RawFileError::TruncatedPayload { expected: HEADER_LEN + payload, got: HEADER_LEN }
        } else {
            RawFileError::Io(e)
        }
    })?;
    decode_frame(&bytes).map(|(frame, _)| Some(frame))
}

/// Read every frame of a file.
pub fn read_frames(path: &std::path::Path) -> Result<Vec<MultichannelFrame>, RawFileError> {
    let mut file = std::fs::File::open(path)?;
    let mut frames = Vec::new();
    while let Some(frame) = read_frame(&mut file)? {
        frames.push(frame);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_frame(channels: usize, samples: usize, seed: u64) -> MultichannelFrame {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        MultichannelFrame {
            channels: (0..channels)
                .map(|_| (0..samples).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            sample_rate: 48_000.0,
            trigger_epoch_ns: 123_456_789_000,
            gain_db: 24.0,
            source: FrameSource::Simulated,
        }
    }

    #[test]
    fn header_is_36_bytes() {
        assert_eq!(HEADER_LEN, 4 + 2 + 2 + 4 + 4 + 2 + 2 + 8 + 8);
        let frame = random_frame(1, 4, 0);
        let bytes = encode_frame(&frame, SampleFormat::Float32);
        assert_eq!(bytes.len(), HEADER_LEN + 4 * 4);
    }

    #[test]
    fn float32_round_trip_is_bit_exact() {
        let frame = random_frame(6, 480, 7);
        // Quantize the source to f32 so the round trip is bit-exact.
        let frame = MultichannelFrame {
            channels: frame
                .channels
                .iter()
                .map(|ch| ch.iter().map(|&v| v as f32 as f64).collect())
                .collect(),
            ..frame
        };
        let bytes = encode_frame(&frame, SampleFormat::Float32);
        let (decoded, consumed) = decode_frame(&bytes).unwrap();
        assert_eq!(consumed, bytes.len());
        assert_eq!(decoded.channels, frame.channels);
        assert_eq!(decoded.trigger_epoch_ns, frame.trigger_epoch_ns);
        assert_eq!(decoded.gain_db, frame.gain_db);
        assert_eq!(decoded.sample_rate, frame.sample_rate);
        assert_eq!(decoded.source, FrameSource::Replayed);
    }

    #[test]
    fn int16_round_trip_within_quantization_step() {
        let frame = random_frame(3, 256, 9);
        let bytes = encode_frame(&frame, SampleFormat::Int16);
        let (decoded, _) = decode_frame(&bytes).unwrap();
        for (a, b) in frame.channels.iter().flatten().zip(decoded.channels.iter().flatten()) {
            assert!((a - b).abs() <= 1.0 / 32_767.0);
        }
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let frame = random_frame(2, 16, 1);
        let mut bytes = encode_frame(&frame, SampleFormat::Float32);
        bytes[0] ^= 0xFF;
        assert!(matches!(decode_frame(&bytes), Err(RawFileError::BadMagic(_))));

        let mut bytes = encode_frame(&frame, SampleFormat::Float32);
        bytes[4] = 9;
        assert!(matches!(decode_frame(&bytes), Err(RawFileError::UnsupportedVersion(9))));

        let bytes = encode_frame(&frame, SampleFormat::Float32);
        assert!(matches!(
            decode_frame(&bytes[..bytes.len() - 3]),
            Err(RawFileError::TruncatedPayload { .. })
        ));
    }

    #[test]
    fn streaming_reads_consecutive_frames() {
        let mut buf = Vec::new();
        for seed in 0..3 {
            write_frame(&mut buf, &random_frame(2, 32, seed), SampleFormat::Float32).unwrap();
        }
        let mut cursor = std::io::Cursor::new(buf);
        let mut count = 0;
        while let Some(_frame) = read_frame(&mut cursor).unwrap() {
            count += 1;
        }
        assert_eq!(count, 3);
    }
}
