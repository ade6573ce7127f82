//! RIFF/WAVE PCM16 mono reading and writing.

use byteorder::{ByteOrder, LittleEndian as LE};

use crate::StageError;

/// iFormat code for RIFF/WAVE, 16-bit PCM, one channel.
pub const FORMAT_WAV_PCM16: i32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub format: i32,
    pub sample_rate: u32,
    /// Amplitudes in [-1, 1].
    pub data: Vec<f64>,
}

fn malformed(reason: &str) -> StageError {
    StageError::MalformedWav(reason.to_string())
}

/// Parses `bytes` as a WAV file of the declared format. Chunks other than
/// `fmt ` and `data` are skipped.
pub fn load_sample(bytes: &[u8], declared_format: i32) -> Result<Sample, StageError> {
    if declared_format != FORMAT_WAV_PCM16 {
        return Err(StageError::UnsupportedFormat(format!("iFormat {declared_format}")));
    }
    if bytes.len() < 12 {
        return Err(malformed("truncated RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(malformed("not a RIFF/WAVE file"));
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let len = LE::read_u32(&bytes[pos + 4..pos + 8]) as usize;
        let body = pos + 8;
        let end = body.checked_add(len).filter(|&e| e <= bytes.len());
        match id {
            b"fmt " => {
                let end = end.ok_or_else(|| malformed("truncated fmt chunk"))?;
                if len < 16 {
                    return Err(malformed("fmt chunk shorter than 16 bytes"));
                }
                let c = &bytes[body..end];
                fmt = Some((
                    LE::read_u16(&c[0..2]),
                    LE::read_u16(&c[2..4]),
                    LE::read_u32(&c[4..8]),
                    LE::read_u16(&c[14..16]),
                ));
            }
            b"data" => {
                let (tag, channels, rate, bits) = fmt.ok_or_else(|| malformed("data chunk before fmt chunk"))?;
                if tag != 1 {
                    return Err(StageError::UnsupportedFormat(format!("WAVE format tag {tag}")));
                }
                if channels != 1 {
                    return Err(StageError::UnsupportedFormat(format!("{channels} channels")));
                }
                if bits != 16 {
                    return Err(StageError::UnsupportedFormat(format!("{bits} bits per sample")));
                }
                let end = end.ok_or_else(|| malformed("truncated data chunk"))?;
                let pcm = &bytes[body..end];
                if !pcm.len().is_multiple_of(2) {
                    return Err(malformed("odd data chunk length"));
                }
                if pcm.is_empty() {
                    return Err(malformed("no samples"));
                }
                let data = pcm.chunks_exact(2).map(|b| LE::read_i16(b) as f64 / 32768.0).collect();
                return Ok(Sample { format: declared_format, sample_rate: rate, data });
            }
            _ => {}
        }
        // chunks are padded to even length
        pos = body.saturating_add(len).saturating_add(len & 1);
    }
    Err(malformed(if fmt.is_some() { "missing data chunk" } else { "missing fmt chunk" }))
}

/// A canonical 44-byte-header PCM16 mono WAV file.
pub fn encode_wav(pcm: &[i16], sample_rate: u32) -> Vec<u8> {
    let data_len = (pcm.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + pcm.len() * 2);
    let u32le = |out: &mut Vec<u8>, v: u32| out.extend_from_slice(&v.to_le_bytes());
    out.extend_from_slice(b"RIFF");
    u32le(&mut out, 36 + data_len);
    out.extend_from_slice(b"WAVEfmt ");
    u32le(&mut out, 16);
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    u32le(&mut out, sample_rate);
    u32le(&mut out, sample_rate * 2);
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    u32le(&mut out, data_len);
    for s in pcm {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scales_by_two_to_the_fifteen() {
        let pcm = [0, 16384, -32768, 32767, -16384, 1, -1, 0];
        let s = load_sample(&encode_wav(&pcm, 8000), FORMAT_WAV_PCM16).unwrap();
        assert_eq!(s.data[..3], [0.0, 0.5, -1.0]);
        assert_eq!(s.data.len(), 8);
        assert_eq!(s.sample_rate, 8000);
    }

    #[test]
    fn rejects_what_it_cannot_read() {
        let good = encode_wav(&[1, 2, 3], 8000);
        assert!(matches!(load_sample(&good[..10], 1), Err(StageError::MalformedWav(_))));
        assert!(matches!(load_sample(&good[..43], 1), Err(StageError::MalformedWav(_))));
        assert!(matches!(load_sample(&good, 2), Err(StageError::UnsupportedFormat(_))));
        let mut stereo = good.clone();
        stereo[22] = 2;
        assert_eq!(load_sample(&stereo, 1), Err(StageError::UnsupportedFormat("2 channels".into())));
        let mut eight_bit = good;
        eight_bit[34] = 8;
        assert!(matches!(load_sample(&eight_bit, 1), Err(StageError::UnsupportedFormat(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = encode_wav(&[100, -100], 16000);
        let mut with_list = plain[..12].to_vec();
        with_list.extend_from_slice(b"LIST\x03\x00\x00\x00abc\x00");
        with_list.extend_from_slice(&plain[12..]);
        assert_eq!(load_sample(&with_list, 1).unwrap(), load_sample(&plain, 1).unwrap());
    }
}
