//! The `$R2UBL` fix sentence: NMEA-style line protocol with an XOR checksum.
//!
//! `$R2UBL,<epoch_s.9>,<tof_s.6>,<range_m.2>,<rel_bearing.2>,<abs_bearing.2>,
//! <gain_db>,<snr_db.1>,<quality>*HH\r\n`, where HH is the XOR of all bytes
//! between `$` and `*` in uppercase hex.

use r2usbl_core::fix::{FixQuality, PositionFix};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SentenceError {
    #[error("sentence framing is malformed: {0}")]
    Malformed(String),
    #[error("checksum mismatch: computed {computed:02X}, stated {stated:02X}")]
    BadChecksum { computed: u8, stated: u8 },
}

/// XOR of every byte of the body (the text between `$` and `*`).
pub fn checksum(body: &str) -> u8 {
    body.bytes().fold(0, |acc, b| acc ^ b)
}

fn render_body(fix: &PositionFix) -> String {
    let secs = fix.trigger_epoch_ns / 1_000_000_000;
    let nanos = fix.trigger_epoch_ns % 1_000_000_000;
    format!(
        "R2UBL,{secs}.{nanos:09},{:.6},{:.2},{:.2},{:.2},{:.0},{:.1},{}",
        fix.tof_s,
        fix.slant_range_m,
        fix.relative_bearing_deg,
        fix.absolute_bearing_deg,
        fix.gain_db,
        fix.snr_db,
        fix.quality.as_str(),
    )
}

/// Format one fix as a wire sentence, including CRLF.
pub fn format_fix_sentence(fix: &PositionFix) -> String {
    let body = render_body(fix);
    format!("${body}*{:02X}\r\n", checksum(&body))
}

/// Fields recovered from a sentence, at printed precision.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceFields {
    pub epoch_ns: u64,
    pub tof_s: f64,
    pub range_m: f64,
    pub relative_bearing_deg: f64,
    pub absolute_bearing_deg: f64,
    pub gain_db: f64,
    pub snr_db: f64,
    pub quality: FixQuality,
}

impl SentenceFields {
    /// Re-render exactly as `format_fix_sentence` would print these fields.
    pub fn render(&self) -> String {
        let secs = self.epoch_ns / 1_000_000_000;
        let nanos = self.epoch_ns % 1_000_000_000;
        let body = format!(
            "R2UBL,{secs}.{nanos:09},{:.6},{:.2},{:.2},{:.2},{:.0},{:.1},{}",
            self.tof_s,
            self.range_m,
            self.relative_bearing_deg,
            self.absolute_bearing_deg,
            self.gain_db,
            self.snr_db,
            self.quality.as_str(),
        );
        format!("${body}*{:02X}\r\n", checksum(&body))
    }
}

/// Parse and checksum-verify one sentence line.
pub fn parse_fix_sentence(line: &str) -> Result<SentenceFields, SentenceError> {
    let line = line.trim_end_matches(['\r', '\n']);
    let rest = line
        .strip_prefix('$')
        .ok_or_else(|| SentenceError::Malformed("missing $".into()))?;
    let (body, stated_hex) = rest
        .rsplit_once('*')
        .ok_or_else(|| SentenceError::Malformed("missing *".into()))?;
    let stated = u8::from_str_radix(stated_hex, 16)
        .map_err(|_| SentenceError::Malformed(format!("bad checksum field `{stated_hex}`")))?;
    let computed = checksum(body);
    if stated != computed {
        return Err(SentenceError::BadChecksum { computed, stated });
    }
    let fields: Vec<&str> = body.split(',').collect();
    if fields.len() != 9 || fields[0] != "R2UBL" {
        return Err(SentenceError::Malformed(format!("expected 9 R2UBL fields, got {}", fields.len())));
    }
    let (secs_str, nanos_str) = fields[1]
        .split_once('.')
        .ok_or_else(|| SentenceError::Malformed("epoch missing fraction".into()))?;
    if nanos_str.len() != 9 {
        return Err(SentenceError::Malformed("epoch fraction must have 9 digits".into()));
    }
    let parse_f = |s: &str, what: &str| {
        s.parse::<f64>().map_err(|_| SentenceError::Malformed(format!("bad {what} `{s}`")))
    };
    let secs: u64 = secs_str
        .parse()
        .map_err(|_| SentenceError::Malformed(format!("bad epoch `{secs_str}`")))?;
    let nanos: u64 = nanos_str
        .parse()
        .map_err(|_| SentenceError::Malformed(format!("bad epoch fraction `{nanos_str}`")))?;
    let quality = match fields[8] {
        "ok" => FixQuality::Ok,
        "suspect" => FixQuality::Suspect,
        other => return Err(SentenceError::Malformed(format!("bad quality `{other}`"))),
    };
    Ok(SentenceFields {
        epoch_ns: secs * 1_000_000_000 + nanos,
        tof_s: parse_f(fields[2], "tof")?,
        range_m: parse_f(fields[3], "range")?,
        relative_bearing_deg: parse_f(fields[4], "relative bearing")?,
        absolute_bearing_deg: parse_f(fields[5], "absolute bearing")?,
        gain_db: parse_f(fields[6], "gain")?,
        snr_db: parse_f(fields[7], "snr")?,
        quality,
    })
}
