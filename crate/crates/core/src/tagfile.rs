//! Shared time-tag stream container and its on-disk formats.
//!
//! Binary format "QTT1": 4-byte magic, u64 LE resolution in femtoseconds,
//! then 9-byte records (channel u8, timestamp u64 LE in resolution units).
//! A CSV alternative `channel,timestamp_ps` is accepted on ingest and
//! fixes the resolution at 1 ps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::detection::{Channel, DetectionEvent};
use crate::error::{Error, Result};

pub const QTT_MAGIC: [u8; 4] = *b"QTT1";

/// A time-ordered stream of detector clicks with its tagger resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct TagStream {
    /// Seconds per timestamp tick.
    pub resolution_s: f64,
    pub events: Vec<DetectionEvent>,
}

impl TagStream {
    pub fn new(resolution_s: f64) -> Self {
        Self {
            resolution_s,
            events: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Timestamp of an event in seconds.
    pub fn time_of(&self, e: &DetectionEvent) -> f64 {
        e.ticks as f64 * self.resolution_s
    }

    /// Time of the last event, seconds (0 for an empty stream).
    pub fn span(&self) -> f64 {
        self.events
            .last()
            .map(|e| self.time_of(e))
            .unwrap_or(0.0)
    }

    fn resolution_fs(&self) -> Result<u64> {
        let fs = self.resolution_s / 1e-15;
        let rounded = fs.round();
        if rounded < 1.0 || (fs - rounded).abs() > 1e-6 * fs {
            return Err(Error::TagFormat(format!(
                "resolution {} s is not a whole femtosecond count",
                self.resolution_s
            )));
        }
        Ok(rounded as u64)
    }

    pub fn write_qtt<W: Write>(&self, mut w: W) -> Result<()> {
        let fs = self.resolution_fs()?;
        w.write_all(&QTT_MAGIC)?;
        w.write_all(&fs.to_le_bytes())?;
        for e in &self.events {
            w.write_all(&[e.channel.code()])?;
            w.write_all(&e.ticks.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_qtt<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| Error::TagFormat("file too short for QTT1 header".into()))?;
        if magic != QTT_MAGIC {
            return Err(Error::TagFormat("missing QTT1 magic".into()));
        }
        let mut res = [0u8; 8];
        r.read_exact(&mut res)
            .map_err(|_| Error::TagFormat("truncated resolution field".into()))?;
        let fs = u64::from_le_bytes(res);
        if fs == 0 {
            return Err(Error::TagFormat("zero resolution".into()));
        }
        let mut events = Vec::new();
        let mut rec = [0u8; 9];
        loop {
            match r.read_exact(&mut rec) {
                Ok(()) => {
                    let channel = Channel::from_code(rec[0]).ok_or_else(|| {
                        Error::TagFormat(format!("invalid channel code {}", rec[0]))
                    })?;
                    let ticks = u64::from_le_bytes(rec[1..9].try_into().unwrap());
                    events.push(DetectionEvent { channel, ticks });
                }
                Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(Self {
            resolution_s: fs as f64 * 1e-15,
            events,
        })
    }

    /// Writes `channel,timestamp_ps` rows. Timestamps are rounded to
    /// whole picoseconds (integer arithmetic, exact for any tick count).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "channel,timestamp_ps")?;
        let fs_per_tick = self.resolution_fs()? as u128;
        for e in &self.events {
            let ps = (e.ticks as u128 * fs_per_tick + 500) / 1000;
            writeln!(w, "{},{}", e.channel.label(), ps)?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(r);
        let mut events = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let ch_field = rec
                .get(0)
                .ok_or_else(|| Error::TagFormat("missing channel column".into()))?;
            let channel = parse_channel(ch_field)
                .ok_or_else(|| Error::TagFormat(format!("invalid channel `{ch_field}`")))?;
            let ticks: u64 = rec
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::TagFormat("invalid timestamp_ps".into()))?;
            events.push(DetectionEvent { channel, ticks });
        }
        Ok(Self {
            resolution_s: 1e-12,
            events,
        })
    }

    /// Reads either format, sniffing the QTT1 magic.
    pub fn read_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let mut f = File::open(&path)?;
        let mut magic = [0u8; 4];
        let n = f.read(&mut magic)?;
        drop(f);
        let reader = BufReader::new(File::open(&path)?);
        if n == 4 && magic == QTT_MAGIC {
            Self::read_qtt(reader)
        } else {
            Self::read_csv(reader)
        }
    }

    pub fn write_qtt_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_qtt(BufWriter::new(File::create(path)?))
    }

    pub fn write_csv_path<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_csv(BufWriter::new(File::create(path)?))
    }
}

fn parse_channel(s: &str) -> Option<Channel> {
    match s {
        "H" | "h" | "0" => Some(Channel::H),
        "V" | "v" | "1" => Some(Channel::V),
        "D" | "d" | "2" => Some(Channel::D),
        "A" | "a" | "3" => Some(Channel::A),
        _ => None,
    }
}
