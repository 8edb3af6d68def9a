//! Risk-beacon advertising payload and RSSI bucketing.
//!
//! Wire layout, 27 bytes (fits the 31-byte advertising budget):
//!
//! | bytes  | content                                  |
//! |--------|------------------------------------------|
//! | 0..16  | service UUID                             |
//! | 16..22 | `r` + risk as `dd.dd` (zero padded)      |
//! | 22..27 | `w` + weight as `d.dd`                   |
//!
//! Values are rounded half away from zero to two decimals. Rounding works on
//! the shortest decimal representation of the input, so `0.955` encodes as
//! `00.96` even though the nearest double is slightly below it.

use thiserror::Error;

pub const PAYLOAD_LEN: usize = 27;
pub const ADVERTISING_BUDGET: usize = 31;
pub const UUID_LEN: usize = 16;
const RISK_FIELD: std::ops::Range<usize> = 16..22;
const WEIGHT_FIELD: std::ops::Range<usize> = 22..27;

/// Largest encodable risk, in hundredths.
pub const MAX_RISK_HUNDREDTHS: u32 = 9999;

/// Default service identifier: the ASCII bytes of `riskscore-beacon`.
pub const DEFAULT_SERVICE_UUID: [u8; UUID_LEN] = *b"riskscore-beacon";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("length: expected {PAYLOAD_LEN} bytes, got {0}")]
    Length(usize),
    #[error("foreign beacon: service uuid does not match")]
    ForeignBeacon,
    #[error("corrupt: {0}")]
    Corrupt(&'static str),
    #[error("range: {0}")]
    Range(String),
}

impl CodecError {
    /// Short class name, e.g. for command-line output.
    pub fn class(&self) -> &'static str {
        match self {
            CodecError::Length(_) => "length",
            CodecError::ForeignBeacon => "foreign-beacon",
            CodecError::Corrupt(_) => "corrupt",
            CodecError::Range(_) => "range",
        }
    }
}

/// Rounds a finite non-negative value to hundredths, half away from zero.
/// Returns `None` for negative, non-finite or absurdly large input.
pub fn round_hundredths(x: f64) -> Option<u64> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    if x == 0.0 {
        return Some(0);
    }
    let text = x.to_string();
    let (int_part, frac_part) = text.split_once('.').unwrap_or((text.as_str(), ""));
    let int: u64 = int_part.parse().ok()?;
    let digit = |i: usize| frac_part.as_bytes().get(i).map_or(0, |b| u64::from(b - b'0'));
    let mut hundredths = int.checked_mul(100)?.checked_add(digit(0) * 10 + digit(1))?;
    if digit(2) >= 5 {
        hundredths = hundredths.checked_add(1)?;
    }
    Some(hundredths)
}

/// `x` rounded to two decimals, as the decoder would see it.
pub fn round2(x: f64) -> Option<f64> {
    round_hundredths(x).map(|h| h as f64 / 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdvertisingPayload([u8; PAYLOAD_LEN]);

impl AdvertisingPayload {
    pub fn as_bytes(&self) -> &[u8; PAYLOAD_LEN] {
        &self.0
    }

    pub fn uuid(&self) -> &[u8] {
        &self.0[..UUID_LEN]
    }

    pub fn risk_field(&self) -> &[u8] {
        &self.0[RISK_FIELD]
    }

    pub fn weight_field(&self) -> &[u8] {
        &self.0[WEIGHT_FIELD]
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

/// Decoded beacon contents, kept in hundredths so comparisons are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Beacon {
    pub risk_hundredths: u32,
    pub weight_hundredths: u32,
}

impl Beacon {
    pub fn risk(&self) -> f64 {
        f64::from(self.risk_hundredths) / 100.0
    }

    pub fn weight(&self) -> f64 {
        f64::from(self.weight_hundredths) / 100.0
    }
}

pub fn encode(risk: f64, weight: f64, uuid: &[u8; UUID_LEN]) -> Result<AdvertisingPayload, CodecError> {
    let risk_h = round_hundredths(risk)
        .filter(|&h| h <= u64::from(MAX_RISK_HUNDREDTHS))
        .ok_or_else(|| CodecError::Range(format!("risk {risk} not representable as dd.dd")))?;
    if !(0.0..=1.0).contains(&weight) {
        return Err(CodecError::Range(format!("weight {weight} outside [0, 1]")));
    }
    let weight_h = round_hundredths(weight).expect("weight in [0, 1] always rounds");

    let mut bytes = [0u8; PAYLOAD_LEN];
    bytes[..UUID_LEN].copy_from_slice(uuid);
    let risk_text = format!("r{:02}.{:02}", risk_h / 100, risk_h % 100);
    let weight_text = format!("w{}.{:02}", weight_h / 100, weight_h % 100);
    bytes[RISK_FIELD].copy_from_slice(risk_text.as_bytes());
    bytes[WEIGHT_FIELD].copy_from_slice(weight_text.as_bytes());
    Ok(AdvertisingPayload(bytes))
}

fn digit(b: u8) -> Result<u32, CodecError> {
    if b.is_ascii_digit() {
        Ok(u32::from(b - b'0'))
    } else {
        Err(CodecError::Corrupt("non-digit in numeric field"))
    }
}

/// Parses a payload. A UUID mismatch yields [`CodecError::ForeignBeacon`],
/// which scanners should treat as "not ours" rather than as corruption.
pub fn decode(payload: &[u8], uuid: &[u8; UUID_LEN]) -> Result<Beacon, CodecError> {
    if payload.len() != PAYLOAD_LEN {
        return Err(CodecError::Length(payload.len()));
    }
    if payload[..UUID_LEN] != uuid[..] {
        return Err(CodecError::ForeignBeacon);
    }
    let r = &payload[RISK_FIELD];
    if r[0] != b'r' {
        return Err(CodecError::Corrupt("risk field must start with 'r'"));
    }
    if r[3] != b'.' {
        return Err(CodecError::Corrupt("risk field must be dd.dd"));
    }
    let risk_hundredths = digit(r[1])? * 1000 + digit(r[2])? * 100 + digit(r[4])? * 10 + digit(r[5])?;

    let w = &payload[WEIGHT_FIELD];
    if w[0] != b'w' {
        return Err(CodecError::Corrupt("weight field must start with 'w'"));
    }
    if w[2] != b'.' {
        return Err(CodecError::Corrupt("weight field must be d.dd"));
    }
    let weight_hundredths = digit(w[1])? * 100 + digit(w[3])? * 10 + digit(w[4])?;
    if weight_hundredths > 100 {
        return Err(CodecError::Corrupt("weight above 1.00"));
    }
    Ok(Beacon { risk_hundredths, weight_hundredths })
}

/// Parses a 128-bit UUID written as 32 hex digits, dashes optional.
pub fn parse_uuid(text: &str) -> Option<[u8; UUID_LEN]> {
    let compact: String = text.chars().filter(|&c| c != '-').collect();
    let bytes = hex::decode(compact).ok()?;
    bytes.try_into().ok()
}

/// RSSI plateau: readings strictly above `above_dbm` (and not above the next
/// plateau) map to `weight`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssiBucket {
    pub above_dbm: f64,
    pub weight: f64,
}

/// Plateaus from strongest to weakest signal.
pub const RSSI_BUCKETS: [RssiBucket; 4] = [
    RssiBucket { above_dbm: -55.0, weight: 0.8 },
    RssiBucket { above_dbm: -63.0, weight: 0.5 },
    RssiBucket { above_dbm: -75.0, weight: 0.1 },
    RssiBucket { above_dbm: f64::NEG_INFINITY, weight: 0.0 },
];

/// Coarse proximity value for a received signal strength in dBm.
pub fn rssi_to_weight(rssi_dbm: f64) -> f64 {
    RSSI_BUCKETS
        .iter()
        .find(|b| rssi_dbm > b.above_dbm)
        .map_or(0.0, |b| b.weight)
}
