use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};

use super::candle::{CandleSeries, PredictionRecord, Resolution, Timestamp};
use super::ingest::{ingest_candles, CandleFormat, IngestOptions};
use crate::error::{Error, Result};

pub const PREDICTION_SCHEMA_VERSION: u32 = 1;

/// Identifier of a stored prediction: table plus 1-based row number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RecordId {
    pub resolution: Resolution,
    pub seq: u64,
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", table_name(self.resolution), self.seq)
    }
}

pub fn table_name(resolution: Resolution) -> String {
    format!("predictions_{}", resolution.label())
}

/// Persistence handle for forecast archives.
pub trait PredictionStore: Send + Sync {
    fn store(&self, record: &PredictionRecord) -> Result<RecordId>;

    /// Records for `symbol` at `resolution` whose `issued_at` lies in `range`,
    /// in insertion order.
    fn load(&self, symbol: &str, resolution: Resolution, range: RangeInclusive<Timestamp>) -> Result<Vec<(RecordId, PredictionRecord)>>;
}

pub fn store_prediction(record: &PredictionRecord, store: &dyn PredictionStore) -> Result<RecordId> {
    store.store(record)
}

pub fn load_predictions(
    symbol: &str,
    resolution: Resolution,
    range: RangeInclusive<Timestamp>,
    store: &dyn PredictionStore,
) -> Result<Vec<PredictionRecord>> {
    Ok(store.load(symbol, resolution, range)?.into_iter().map(|(_, r)| r).collect())
}

#[derive(Serialize, Deserialize)]
struct Row {
    schema_version: u32,
    id: u64,
    #[serde(flatten)]
    record: PredictionRecord,
}

#[derive(Clone, Copy)]
struct Slot {
    seq: u64,
    offset: u64,
    len: u64,
}

#[derive(Default)]
struct TableIndex {
    by_key: BTreeMap<(String, Timestamp), Vec<Slot>>,
    next_seq: u64,
    end: u64,
}

/// Append-only JSONL tables, one file per resolution, with an in-memory
/// index keyed by `(symbol, issued_at)` rebuilt on open.
pub struct FilePredictionStore {
    dir: PathBuf,
    tables: BTreeMap<Resolution, Table>,
}

struct Table {
    path: PathBuf,
    writer: Mutex<()>,
    index: RwLock<TableIndex>,
}

impl FilePredictionStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::StorageUnavailable(format!("{}: {e}", dir.display())))?;
        let mut tables = BTreeMap::new();
        for res in Resolution::ALL {
            let path = dir.join(format!("{}.jsonl", table_name(res)));
            let index = scan(&path)?;
            tables.insert(res, Table { path, writer: Mutex::new(()), index: RwLock::new(index) });
        }
        Ok(FilePredictionStore { dir, tables })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn table_path(&self, resolution: Resolution) -> &Path {
        &self.tables[&resolution].path
    }
}

fn scan(path: &Path) -> Result<TableIndex> {
    let mut index = TableIndex { next_seq: 1, ..Default::default() };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(index),
        Err(e) => return Err(Error::StorageUnavailable(e.to_string())),
    };
    let mut reader = BufReader::new(file);
    let mut offset = 0u64;
    let mut line = String::new();
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::StorageUnavailable(e.to_string()))?;
        if n == 0 {
            break;
        }
        let body = line.trim_end();
        if !body.is_empty() {
            let row: Row = serde_json::from_str(body)
                .map_err(|e| Error::StorageUnavailable(format!("{}: corrupt row: {e}", path.display())))?;
            index
                .by_key
                .entry((row.record.symbol.clone(), row.record.issued_at))
                .or_default()
                .push(Slot { seq: row.id, offset, len: body.len() as u64 });
            index.next_seq = index.next_seq.max(row.id + 1);
        }
        offset += n as u64;
    }
    index.end = offset;
    Ok(index)
}

impl PredictionStore for FilePredictionStore {
    fn store(&self, record: &PredictionRecord) -> Result<RecordId> {
        record.validate()?;
        let table = &self.tables[&record.resolution];
        let _guard = table.writer.lock();
        let (seq, offset) = {
            let idx = table.index.read();
            (idx.next_seq, idx.end)
        };
        let row = Row { schema_version: PREDICTION_SCHEMA_VERSION, id: seq, record: record.clone() };
        let mut line = serde_json::to_string(&row)?;
        let len = line.len() as u64;
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&table.path)
            .map_err(|e| Error::StorageUnavailable(format!("{}: {e}", table.path.display())))?;
        file.write_all(line.as_bytes()).map_err(|e| Error::StorageUnavailable(e.to_string()))?;
        file.flush().map_err(|e| Error::StorageUnavailable(e.to_string()))?;
        let mut idx = table.index.write();
        idx.by_key
            .entry((record.symbol.clone(), record.issued_at))
            .or_default()
            .push(Slot { seq, offset, len });
        idx.next_seq = seq + 1;
        idx.end = offset + line.len() as u64;
        Ok(RecordId { resolution: record.resolution, seq })
    }

    fn load(&self, symbol: &str, resolution: Resolution, range: RangeInclusive<Timestamp>) -> Result<Vec<(RecordId, PredictionRecord)>> {
        let table = &self.tables[&resolution];
        let mut slots: Vec<Slot> = {
            let idx = table.index.read();
            idx.by_key
                .range((symbol.to_string(), *range.start())..=(symbol.to_string(), *range.end()))
                .flat_map(|(_, v)| v.iter().copied())
                .collect()
        };
        if slots.is_empty() {
            return Ok(Vec::new());
        }
        slots.sort_by_key(|s| s.seq);
        let mut file = File::open(&table.path).map_err(|e| Error::StorageUnavailable(e.to_string()))?;
        let mut out = Vec::with_capacity(slots.len());
        for slot in slots {
            let mut buf = vec![0u8; slot.len as usize];
            file.seek(SeekFrom::Start(slot.offset)).map_err(|e| Error::StorageUnavailable(e.to_string()))?;
            file.read_exact(&mut buf).map_err(|e| Error::StorageUnavailable(e.to_string()))?;
            let row: Row = serde_json::from_slice(&buf)?;
            out.push((RecordId { resolution, seq: row.id }, row.record));
        }
        Ok(out)
    }
}

/// Volatile store for tests and ephemeral services.
#[derive(Default)]
pub struct MemoryPredictionStore {
    rows: RwLock<BTreeMap<Resolution, Vec<PredictionRecord>>>,
}

impl MemoryPredictionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.rows.read().values().map(Vec::len).sum()
    }
}

impl PredictionStore for MemoryPredictionStore {
    fn store(&self, record: &PredictionRecord) -> Result<RecordId> {
        record.validate()?;
        let mut rows = self.rows.write();
        let table = rows.entry(record.resolution).or_default();
        table.push(record.clone());
        Ok(RecordId { resolution: record.resolution, seq: table.len() as u64 })
    }

    fn load(&self, symbol: &str, resolution: Resolution, range: RangeInclusive<Timestamp>) -> Result<Vec<(RecordId, PredictionRecord)>> {
        let rows = self.rows.read();
        Ok(rows
            .get(&resolution)
            .map(|table| {
                table
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.symbol == symbol && range.contains(&r.issued_at))
                    .map(|(i, r)| (RecordId { resolution, seq: i as u64 + 1 }, r.clone()))
                    .collect()
            })
            .unwrap_or_default())
    }
}

/// Directory of ingested candle series, one JSONL file per (symbol, resolution).
pub struct CandleStore {
    dir: PathBuf,
}

impl CandleStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::StorageUnavailable(format!("{}: {e}", dir.display())))?;
        Ok(CandleStore { dir })
    }

    fn path(&self, symbol: &str, resolution: Resolution) -> PathBuf {
        self.dir.join(format!("{}_{}.jsonl", symbol.to_ascii_uppercase(), resolution.label()))
    }

    /// Replaces the stored series atomically (write to temp, rename).
    pub fn save(&self, series: &CandleSeries) -> Result<()> {
        let path = self.path(&series.symbol, series.resolution);
        let tmp = path.with_extension("jsonl.tmp");
        let mut out = String::new();
        for c in &series.candles {
            out.push_str(&serde_json::to_string(c)?);
            out.push('\n');
        }
        fs::write(&tmp, out).map_err(|e| Error::StorageUnavailable(e.to_string()))?;
        fs::rename(&tmp, &path).map_err(|e| Error::StorageUnavailable(e.to_string()))?;
        Ok(())
    }

    pub fn load(&self, symbol: &str, resolution: Resolution) -> Result<CandleSeries> {
        let path = self.path(symbol, resolution);
        let file = File::open(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::UnknownSymbol(symbol.to_string()),
            _ => Error::StorageUnavailable(e.to_string()),
        })?;
        ingest_candles(file, CandleFormat::Jsonl, &symbol.to_ascii_uppercase(), resolution, IngestOptions { allow_gaps: false })
    }

    /// Symbols with at least one stored series, sorted.
    pub fn symbols(&self) -> Result<Vec<String>> {
        let mut out: Vec<String> = fs::read_dir(&self.dir)
            .map_err(|e| Error::StorageUnavailable(e.to_string()))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().to_string();
                let stem = name.strip_suffix(".jsonl")?;
                let (sym, _) = stem.rsplit_once('_')?;
                Some(sym.to_string())
            })
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn resolutions(&self, symbol: &str) -> Vec<Resolution> {
        Resolution::ALL.into_iter().filter(|r| self.path(symbol, *r).exists()).collect()
    }
}
