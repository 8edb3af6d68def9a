//! Line-oriented dataset reader and canonical writer.
//!
//! Each data line is `epoch <d> person <d> room`. Lines starting with `#` are
//! comments, except `#room <id>` which declares a room that may never be
//! occupied (so occupancy fractions keep the right denominator).

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use super::{ContactRecord, GraphError, TemporalGraph, DEFAULT_DELTA_T_SECONDS};

const ROOM_DIRECTIVE: &str = "#room";
const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    #[default]
    Comma,
    Whitespace,
}

/// How the first column is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeColumn {
    /// Already an epoch index; kept as is.
    #[default]
    Epoch,
    /// Wall-clock seconds; floored to `Δt` bins and shifted so the earliest bin is epoch 0.
    Seconds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetFormat {
    pub delimiter: Delimiter,
    pub time_column: TimeColumn,
    pub delta_t_seconds: u32,
}

impl Default for DatasetFormat {
    fn default() -> Self {
        Self { delimiter: Delimiter::Comma, time_column: TimeColumn::Epoch, delta_t_seconds: DEFAULT_DELTA_T_SECONDS }
    }
}

impl DatasetFormat {
    pub fn whitespace() -> Self {
        Self { delimiter: Delimiter::Whitespace, ..Self::default() }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self.delimiter {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

fn valid_identifier(id: &str) -> bool {
    !id.is_empty() && !id.contains(|c: char| c == ',' || c.is_whitespace())
}

struct RawRecord {
    line: usize,
    time: u64,
    person: String,
    room: String,
}

impl TemporalGraph {
    /// Reads a dataset from a text stream.
    pub fn ingest<R: BufRead>(source: R, format: &DatasetFormat) -> Result<Self, GraphError> {
        if format.delta_t_seconds == 0 {
            return Err(GraphError::Parse { line: 0, message: "delta_t_seconds must be positive".into() });
        }
        let mut raw = Vec::new();
        let mut declared = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix(ROOM_DIRECTIVE) {
                if rest.starts_with(char::is_whitespace) && !rest.trim().is_empty() {
                    if !valid_identifier(rest.trim()) {
                        return Err(GraphError::Parse { line: line_no, message: "invalid room identifier".into() });
                    }
                    declared.push(rest.trim().to_owned());
                }
                continue;
            }
            if trimmed.starts_with('#') {
                continue;
            }
            let fields = format.split(trimmed);
            if fields.len() != 3 {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("expected 3 fields (epoch, person, room), found {}", fields.len()),
                });
            }
            let time: u64 = fields[0].parse().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("invalid time value {:?}", fields[0]),
            })?;
            if fields[1].is_empty() || fields[2].is_empty() {
                return Err(GraphError::Parse { line: line_no, message: "empty person or room identifier".into() });
            }
            if !fields[1..].iter().all(|f| valid_identifier(f)) {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: "identifiers may not contain commas or whitespace".into(),
                });
            }
            raw.push(RawRecord { line: line_no, time, person: fields[1].to_owned(), room: fields[2].to_owned() });
        }

        let to_epoch = |time: u64| -> u64 {
            match format.time_column {
                TimeColumn::Epoch => time,
                TimeColumn::Seconds => time / u64::from(format.delta_t_seconds),
            }
        };
        let origin = match format.time_column {
            TimeColumn::Epoch => 0,
            TimeColumn::Seconds => raw.iter().map(|r| to_epoch(r.time)).min().unwrap_or(0),
        };
        let mut records = Vec::with_capacity(raw.len());
        for r in raw {
            let epoch = u32::try_from(to_epoch(r.time) - origin).map_err(|_| GraphError::Parse {
                line: r.line,
                message: format!("epoch {} does not fit in 32 bits", r.time),
            })?;
            records.push((r.line, ContactRecord { epoch, person: r.person, room: r.room }));
        }
        Self::build(records, declared, format.delta_t_seconds)
    }

    /// Reads a dataset file; gzip-compressed files are detected by their magic bytes.
    pub fn ingest_path(path: impl AsRef<Path>, format: &DatasetFormat) -> Result<Self, GraphError> {
        let mut file = File::open(path)?;
        let mut magic = [0u8; 2];
        let n = read_prefix(&mut file, &mut magic)?;
        let head = io::Cursor::new(magic[..n].to_vec());
        let chained = head.chain(file);
        if n == 2 && magic == GZIP_MAGIC {
            Self::ingest(BufReader::new(MultiGzDecoder::new(chained)), format)
        } else {
            Self::ingest(BufReader::new(chained), format)
        }
    }

    /// Adds rooms that may never be occupied, e.g. from a building's room list.
    pub fn with_rooms<I>(&self, rooms: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = String>,
    {
        let declared: Vec<String> = self.rooms().iter().cloned().chain(rooms).collect();
        if let Some(bad) = declared.iter().find(|r| !valid_identifier(r)) {
            return Err(GraphError::InvalidSpec(format!("invalid room identifier {bad:?}")));
        }
        let numbered = self.records().enumerate().map(|(i, r)| (i + 1, r));
        Self::build(numbered, declared, self.delta_t_seconds())
    }

    /// Reads a room list: one identifier per line, blank lines and `#` comments skipped.
    pub fn read_room_list<R: BufRead>(source: R) -> Result<Vec<String>, GraphError> {
        let mut rooms = Vec::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !valid_identifier(trimmed) {
                return Err(GraphError::Parse { line: idx + 1, message: format!("invalid room identifier {trimmed:?}") });
            }
            rooms.push(trimmed.to_owned());
        }
        Ok(rooms)
    }

    /// Writes the canonical form: comma-delimited epoch-index lines sorted by
    /// (epoch, room, person), preceded by `#room` lines for rooms never occupied.
    pub fn write_canonical<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# epoch,person,room")?;
        let mut occupied = vec![false; self.room_count()];
        for snap in self.snapshots() {
            for (room, _) in snap.occupied_rooms() {
                occupied[room.index()] = true;
            }
        }
        for (name, used) in self.rooms().iter().zip(&occupied) {
            if !used {
                writeln!(out, "{ROOM_DIRECTIVE} {name}")?;
            }
        }
        for rec in self.records() {
            writeln!(out, "{},{},{}", rec.epoch, rec.person, rec.room)?;
        }
        Ok(())
    }

    pub fn to_canonical_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_canonical(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("identifiers are valid UTF-8")
    }
}

fn read_prefix(file: &mut File, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match file.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}
