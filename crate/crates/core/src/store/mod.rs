//! Append-only capture store with a CDXJ-style index.
//!
//! An archive directory holds three files:
//!
//! * `records.dat`: one frame per capture, `REC <header-len> <body-len>\n`,
//!   then the header block as a single JSON line, then the raw body bytes
//!   followed by `\n`.
//! * `index.cdxj`: one line per capture,
//!   `<canonical-uri> <14-digit-timestamp> {"id":..,"status":..,"variant":[[dim,val],..]}`.
//!   Lines are appended in capture order; a plain byte sort groups them by
//!   URI then timestamp.
//! * `meta.json`: format version and the `VariantConfig` keys were derived
//!   with.
//!
//! Variant keys are computed when a capture is ingested and stored; replay
//! never needs the crawl-time configuration.

mod variant;

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::http::{CanonicalUri, Headers};
use crate::time::Timestamp;

pub use variant::{cookie_dimension_value, derive_variant_key, VariantConfig, VariantKey, ALL_DIMENSIONS};

pub const FORMAT_VERSION: u32 = 1;
pub const RECORDS_FILE: &str = "records.dat";
pub const INDEX_FILE: &str = "index.cdxj";
pub const META_FILE: &str = "meta.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("failed to append record {id}: {source}")]
    Append { id: u64, source: io::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("corrupt archive {}: {detail}", path.display())]
    Corrupt { path: PathBuf, detail: String },
    #[error("an archive already exists at {}", .0.display())]
    Exists(PathBuf),
    #[error("unsupported archive format version {0}")]
    Version(u32),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One capture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub id: u64,
    pub uri: CanonicalUri,
    pub datetime: Timestamp,
    pub request_headers: Headers,
    pub response_status: u16,
    pub response_headers: Headers,
    #[serde(skip)]
    pub body: Vec<u8>,
    pub variant_key: VariantKey,
}

impl ArchiveRecord {
    pub fn body_text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

/// Index row for one capture of a URI.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub datetime: Timestamp,
    pub variant_key: VariantKey,
    pub id: u64,
    pub status: u16,
}

#[derive(Serialize, Deserialize)]
struct IndexPayload {
    id: u64,
    status: u16,
    variant: VariantKey,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    format_version: u32,
    variant_config: VariantConfig,
}

#[derive(Debug)]
struct Disk {
    dir: PathBuf,
    records: File,
    index: File,
}

#[derive(Debug)]
pub struct ArchiveStore {
    cfg: VariantConfig,
    records: Vec<ArchiveRecord>,
    index: HashMap<CanonicalUri, Vec<IndexEntry>>,
    disk: Option<Disk>,
}

impl ArchiveStore {
    pub fn in_memory(cfg: VariantConfig) -> Self {
        ArchiveStore {
            cfg: cfg.normalized(),
            records: Vec::new(),
            index: HashMap::new(),
            disk: None,
        }
    }

    /// Creates a new, empty archive in `dir` (created if missing).
    pub fn create(dir: impl AsRef<Path>, cfg: VariantConfig) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        for f in [RECORDS_FILE, INDEX_FILE, META_FILE] {
            if dir.join(f).exists() {
                return Err(StoreError::Exists(dir.to_path_buf()));
            }
        }
        let cfg = cfg.normalized();
        let meta_path = dir.join(META_FILE);
        let meta = Meta {
            format_version: FORMAT_VERSION,
            variant_config: cfg.clone(),
        };
        let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
        fs::write(&meta_path, json + "\n").map_err(io_err(&meta_path))?;
        let mut store = ArchiveStore::in_memory(cfg);
        store.disk = Some(Disk::open(dir)?);
        Ok(store)
    }

    /// Loads an existing archive and checks index and records agree.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        let meta_path = dir.join(META_FILE);
        let meta_text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
        let meta: Meta = serde_json::from_str(&meta_text).map_err(|e| StoreError::Corrupt {
            path: meta_path.clone(),
            detail: e.to_string(),
        })?;
        if meta.format_version != FORMAT_VERSION {
            return Err(StoreError::Version(meta.format_version));
        }
        let mut store = ArchiveStore::in_memory(meta.variant_config);
        let records_path = dir.join(RECORDS_FILE);
        for record in read_records(&records_path)? {
            store.insert(record);
        }
        store.verify_index(&dir.join(INDEX_FILE))?;
        store.disk = Some(Disk::open(dir)?);
        Ok(store)
    }

    /// Opens `dir` if it holds an archive, otherwise creates one.
    pub fn open_or_create(dir: impl AsRef<Path>, cfg: VariantConfig) -> Result<Self, StoreError> {
        if dir.as_ref().join(META_FILE).exists() {
            Self::open(dir)
        } else {
            Self::create(dir, cfg)
        }
    }

    pub fn variant_config(&self) -> &VariantConfig {
        &self.cfg
    }

    pub fn dir(&self) -> Option<&Path> {
        self.disk.as_ref().map(|d| d.dir.as_path())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn next_id(&self) -> u64 {
        self.records.last().map_or(1, |r| r.id + 1)
    }

    /// Appends `record` under the next id, which is returned. On a disk store
    /// the record is synced before this returns.
    pub fn append(&mut self, mut record: ArchiveRecord) -> Result<u64, StoreError> {
        let id = self.next_id();
        record.id = id;
        if let Some(disk) = &mut self.disk {
            disk.write(&record)
                .map_err(|source| StoreError::Append { id, source })?;
        }
        self.insert(record);
        Ok(id)
    }

    fn insert(&mut self, record: ArchiveRecord) {
        let entry = IndexEntry {
            datetime: record.datetime,
            variant_key: record.variant_key.clone(),
            id: record.id,
            status: record.response_status,
        };
        let rows = self.index.entry(record.uri.clone()).or_default();
        let pos = rows.partition_point(|e| (e.datetime, e.id) <= (entry.datetime, entry.id));
        rows.insert(pos, entry);
        self.records.push(record);
    }

    pub fn get(&self, id: u64) -> Option<&ArchiveRecord> {
        let idx = self.records.partition_point(|r| r.id < id);
        self.records.get(idx).filter(|r| r.id == id)
    }

    /// Captures of `uri`, ordered by datetime then id.
    pub fn lookup(&self, uri: &CanonicalUri) -> &[IndexEntry] {
        self.index.get(uri).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn records(&self) -> impl Iterator<Item = &ArchiveRecord> {
        self.records.iter()
    }

    /// Distinct URIs, sorted by their printed form.
    pub fn uris(&self) -> Vec<&CanonicalUri> {
        let mut uris: Vec<&CanonicalUri> = self.index.keys().collect();
        uris.sort_by_cached_key(|u| u.to_string());
        uris
    }

    fn verify_index(&self, path: &Path) -> Result<(), StoreError> {
        let corrupt = |detail: String| StoreError::Corrupt {
            path: path.to_path_buf(),
            detail,
        };
        let file = File::open(path).map_err(io_err(path))?;
        let mut rows = 0usize;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io_err(path))?;
            if line.is_empty() {
                continue;
            }
            let (uri, ts, payload) =
                parse_index_line(&line).ok_or_else(|| corrupt(format!("line {}: malformed", n + 1)))?;
            let record = self
                .get(payload.id)
                .ok_or_else(|| corrupt(format!("line {}: no record {}", n + 1, payload.id)))?;
            if record.uri != uri || record.datetime != ts || record.variant_key != payload.variant {
                return Err(corrupt(format!("line {}: disagrees with record {}", n + 1, payload.id)));
            }
            rows += 1;
        }
        if rows != self.records.len() {
            return Err(corrupt(format!("{rows} index rows for {} records", self.records.len())));
        }
        Ok(())
    }
}

/// Formats one index line (no trailing newline).
pub fn index_line(record: &ArchiveRecord) -> String {
    let payload = IndexPayload {
        id: record.id,
        status: record.response_status,
        variant: record.variant_key.clone(),
    };
    format!(
        "{} {} {}",
        record.uri,
        record.datetime.to_14(),
        serde_json::to_string(&payload).expect("payload serializes")
    )
}

fn parse_index_line(line: &str) -> Option<(CanonicalUri, Timestamp, IndexPayload)> {
    let mut parts = line.splitn(3, ' ');
    let uri = parts.next()?.parse().ok()?;
    let ts = Timestamp::parse_14(parts.next()?).ok()?;
    let payload = serde_json::from_str(parts.next()?).ok()?;
    Some((uri, ts, payload))
}

impl Disk {
    fn open(dir: &Path) -> Result<Self, StoreError> {
        let open = |name: &str| {
            let path = dir.join(name);
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(io_err(&path))
        };
        Ok(Disk {
            dir: dir.to_path_buf(),
            records: open(RECORDS_FILE)?,
            index: open(INDEX_FILE)?,
        })
    }

    fn write(&mut self, record: &ArchiveRecord) -> io::Result<()> {
        let header = serde_json::to_string(record).map_err(io::Error::other)?;
        let mut frame = format!("REC {} {}\n{header}\n", header.len(), record.body.len()).into_bytes();
        frame.extend_from_slice(&record.body);
        frame.push(b'\n');
        self.records.write_all(&frame)?;
        self.records.sync_data()?;
        self.index.write_all(format!("{}\n", index_line(record)).as_bytes())?;
        self.index.sync_data()
    }
}

fn read_records(path: &Path) -> Result<Vec<ArchiveRecord>, StoreError> {
    let corrupt = |detail: String| StoreError::Corrupt {
        path: path.to_path_buf(),
        detail,
    };
    let file = File::open(path).map_err(io_err(path))?;
    let mut reader = BufReader::new(file);
    let mut out: Vec<ArchiveRecord> = Vec::new();
    let mut line = String::new();
    loop {
        line.clear();
        if reader.read_line(&mut line).map_err(io_err(path))? == 0 {
            break;
        }
        let frame_no = out.len() + 1;
        let lens: Vec<usize> = line
            .trim_end()
            .strip_prefix("REC ")
            .map(|rest| rest.split(' ').filter_map(|n| n.parse().ok()).collect())
            .unwrap_or_default();
        let [header_len, body_len] = lens[..] else {
            return Err(corrupt(format!(
                "frame {frame_no}: bad frame line {:?}",
                line.trim_end()
            )));
        };
        let mut header = vec![0u8; header_len + 1];
        reader.read_exact(&mut header).map_err(io_err(path))?;
        let mut body = vec![0u8; body_len + 1];
        reader.read_exact(&mut body).map_err(io_err(path))?;
        if header.pop() != Some(b'\n') || body.pop() != Some(b'\n') {
            return Err(corrupt(format!("frame {frame_no}: missing terminator")));
        }
        let mut record: ArchiveRecord =
            serde_json::from_slice(&header).map_err(|e| corrupt(format!("frame {frame_no}: {e}")))?;
        record.body = body;
        if out.last().is_some_and(|prev| prev.id >= record.id) {
            return Err(corrupt(format!("frame {frame_no}: ids not increasing")));
        }
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::http::canonicalize;

    fn rec(uri: &str, t: i64, cookie: &str) -> ArchiveRecord {
        let cfg = VariantConfig::default();
        let req: Headers = [("cookie", cookie)].into_iter().collect();
        let resp: Headers = [("content-language", "en")].into_iter().collect();
        ArchiveRecord {
            id: 0,
            uri: canonicalize(uri).unwrap(),
            datetime: Timestamp::from_unix(t),
            variant_key: derive_variant_key(&req, &resp, &cfg),
            request_headers: req,
            response_status: 200,
            response_headers: resp,
            body: format!("<html lang=\"en\">{t}</html>\n").into_bytes(),
        }
    }

    #[test]
    fn stored_keys_survive_reopen_under_other_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = VariantConfig {
            implied_vary: vec![],
            ..Default::default()
        };
        let mut s = ArchiveStore::create(dir.path(), cfg).unwrap();
        // key computed at crawl time with the default configuration
        s.append(rec("https://t.co/", 1, "lang=kn")).unwrap();
        drop(s);
        let s = ArchiveStore::open(dir.path()).unwrap();
        assert_eq!(s.get(1).unwrap().variant_key.get("cookie"), Some("lang=kn"));
    }

    #[test]
    fn ids_are_sequential() {
        let mut s = ArchiveStore::in_memory(VariantConfig::default());
        let ids: Vec<u64> = (0..3).map(|i| s.append(rec("https://t.co/", i, "")).unwrap()).collect();
        assert_eq!(ids, [1, 2, 3]);
        assert_eq!(s.get(2).unwrap().datetime.unix(), 1);
        assert!(s.get(4).is_none());
    }

    #[test]
    fn lookup_orders_and_keeps_duplicates() {
        let mut s = ArchiveStore::in_memory(VariantConfig::default());
        s.append(rec("https://t.co/", 50, "lang=kn")).unwrap();
        s.append(rec("https://t.co/", 10, "lang=en")).unwrap();
        s.append(rec("https://t.co/", 50, "lang=en")).unwrap();
        s.append(rec("https://t.co/", 50, "lang=en")).unwrap();
        s.append(rec("https://t.co/x", 0, "")).unwrap();
        let rows = s.lookup(&canonicalize("https://t.co/").unwrap());
        let ids: Vec<u64> = rows.iter().map(|r| r.id).collect();
        assert_eq!(ids, [2, 1, 3, 4]);
        assert!(s.lookup(&canonicalize("https://unknown/").unwrap()).is_empty());
    }

    #[test]
    fn disk_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ArchiveStore::create(dir.path(), VariantConfig::default()).unwrap();
        s.append(rec("https://t.co/?lang=kn", 5, "lang=fr")).unwrap();
        let mut binary = rec("https://t.co/", 6, "lang=kn");
        binary.body = vec![0, 159, 146, 150, b'\n', b'R', b'E', b'C'];
        s.append(binary).unwrap();
        drop(s);
        let reopened = ArchiveStore::open(dir.path()).unwrap();
        assert_eq!(reopened.len(), 2);
        assert_eq!(
            reopened.get(2).unwrap().body,
            vec![0, 159, 146, 150, b'\n', b'R', b'E', b'C']
        );
        let index = fs::read_to_string(dir.path().join(INDEX_FILE)).unwrap();
        assert_eq!(
            index.lines().next().unwrap(),
            r#"https://t.co/?lang=kn 19700101000005 {"id":1,"status":200,"variant":[["cookie","lang=fr"]]}"#
        );
        assert!(matches!(
            ArchiveStore::create(dir.path(), VariantConfig::default()),
            Err(StoreError::Exists(_))
        ));
    }

    #[test]
    fn reopened_store_keeps_appending() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ArchiveStore::create(dir.path(), VariantConfig::default()).unwrap();
        s.append(rec("https://t.co/", 1, "")).unwrap();
        drop(s);
        let mut s = ArchiveStore::open(dir.path()).unwrap();
        assert_eq!(s.append(rec("https://t.co/", 2, "")).unwrap(), 2);
        drop(s);
        assert_eq!(ArchiveStore::open(dir.path()).unwrap().len(), 2);
    }

    #[test]
    fn tampered_index_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ArchiveStore::create(dir.path(), VariantConfig::default()).unwrap();
        s.append(rec("https://t.co/", 1, "lang=kn")).unwrap();
        drop(s);
        let path = dir.path().join(INDEX_FILE);
        let text = fs::read_to_string(&path).unwrap().replace("lang=kn", "lang=en");
        fs::write(&path, text).unwrap();
        assert!(matches!(
            ArchiveStore::open(dir.path()),
            Err(StoreError::Corrupt { .. })
        ));
    }

    #[test]
    fn truncated_records_detected() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = ArchiveStore::create(dir.path(), VariantConfig::default()).unwrap();
        s.append(rec("https://t.co/", 1, "")).unwrap();
        drop(s);
        let path = dir.path().join(RECORDS_FILE);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(ArchiveStore::open(dir.path()).is_err());
    }
}
