//! On-disk formats.
//!
//! * Manifest: JSON `{"name", "n_nodes", "views": [{"attributes", "adjacency"}],
//!   "labels"?, "format_version": 1}`; paths are relative to the manifest.
//! * Adjacency: Matrix Market coordinate files (1-based), symmetrized as
//!   `max(A, Aᵀ)` on load.
//! * Attributes: CSV (optional header) or `MVGF` binary: magic, `u16`
//!   version, `u64` rows, `u64` cols, then little-endian `f32` row-major.
//! * Labels: one nonnegative integer per line.
//! * Codes: `MVGH` magic, `u16` version, `u64` n, `u32` bits, `ceil(bits/64)`
//!   little-endian `u64` words per node, then a `u32` length and that many
//!   bytes of JSON metadata.
//! * Neighbor cache: `MVGN` magic, `u16` version, `u64` n, `u32` k, `u32`
//!   views, `u32` ids, then `u32`-length-prefixed JSON metadata.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codes::{words_per_code, BinaryCodes, CodesMetadata};
use crate::error::{Error, Result};
use crate::model::{validate_dataset, DenseMatrix, MultiViewGraphDataset, SparseAdjacency, View};
use crate::neighbors::{NeighborSets, Neighbors};
use crate::retrieval::EvalReport;
use crate::trainer::TrainConfig;

pub const MANIFEST_VERSION: u32 = 1;
pub const CODES_MAGIC: &[u8; 4] = b"MVGH";
pub const CODES_VERSION: u16 = 1;
pub const FEATURES_MAGIC: &[u8; 4] = b"MVGF";
pub const FEATURES_VERSION: u16 = 1;
pub const NEIGHBORS_MAGIC: &[u8; 4] = b"MVGN";
pub const NEIGHBORS_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewPaths {
    pub attributes: PathBuf,
    pub adjacency: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub name: String,
    pub n_nodes: usize,
    pub views: Vec<ViewPaths>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    pub format_version: u32,
}

impl DatasetManifest {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        if m.format_version != MANIFEST_VERSION {
            return Err(Error::BadVersion {
                path: path.to_path_buf(),
                found: m.format_version,
                expected: MANIFEST_VERSION,
            });
        }
        if m.views.is_empty() {
            return Err(Error::parse(path, 1, "manifest lists no views"));
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Every input file in manifest order, resolved against `base`.
    pub fn input_files(&self, base: &Path) -> Vec<PathBuf> {
        let mut files = Vec::new();
        for v in &self.views {
            files.push(base.join(&v.attributes));
            files.push(base.join(&v.adjacency));
        }
        if let Some(l) = &self.labels {
            files.push(base.join(l));
        }
        files
    }
}

/// Preprocessing applied while loading.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Scale every attribute row to unit L2 norm.
    pub row_normalize: bool,
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Loads and validates a dataset described by a manifest.
pub fn load_dataset(manifest_path: &Path, opts: LoadOptions) -> Result<MultiViewGraphDataset> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let base = base_dir(manifest_path);
    let n = manifest.n_nodes;
    let mut graphs: HashMap<PathBuf, Arc<SparseAdjacency>> = HashMap::new();
    let mut views = Vec::with_capacity(manifest.views.len());
    for vp in &manifest.views {
        let adj_path = base.join(&vp.adjacency);
        let adjacency = match graphs.get(&adj_path) {
            Some(a) => a.clone(),
            None => {
                let a = Arc::new(read_matrix_market(&adj_path)?);
                graphs.insert(adj_path.clone(), a.clone());
                a
            }
        };
        let mut attributes = read_attributes(&base.join(&vp.attributes))?;
        if opts.row_normalize {
            attributes = attributes.row_normalized();
        }
        views.push(View {
            attributes,
            adjacency,
        });
    }
    let labels = match &manifest.labels {
        Some(p) => {
            let p = base.join(p);
            let labels = read_labels(&p)?;
            if labels.len() != n {
                return Err(Error::LabelCount {
                    expected: n,
                    got: labels.len(),
                });
            }
            Some(labels)
        }
        None => None,
    };
    let ds = MultiViewGraphDataset {
        name: manifest.name,
        n_nodes: n,
        views,
        labels,
    };
    let report = validate_dataset(&ds);
    if !report.is_empty() {
        return Err(Error::InvalidDataset(report));
    }
    Ok(ds)
}

/// SHA-256 over the manifest and every file it references.
pub fn dataset_digest(manifest_path: &Path) -> Result<String> {
    let manifest = DatasetManifest::read(manifest_path)?;
    let mut hasher = Sha256::new();
    let mut files = vec![manifest_path.to_path_buf()];
    files.extend(manifest.input_files(&base_dir(manifest_path)));
    for f in files {
        let bytes = fs::read(&f).map_err(|e| Error::io(&f, e))?;
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

// ---------------------------------------------------------------------------
// Matrix Market

#[derive(Clone, Copy, PartialEq)]
enum MmField {
    Real,
    Pattern,
}

/// Reads a square coordinate Matrix Market file as a symmetrized adjacency.
pub fn read_matrix_market(path: &Path) -> Result<SparseAdjacency> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let perr = |line: usize, msg: String| Error::parse(path, line, msg);

    let (_, header) = lines
        .next()
        .ok_or_else(|| perr(1, "empty file".into()))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(perr(1, format!("not a Matrix Market header: {header:?}")));
    }
    if tokens[2] != "coordinate" {
        return Err(perr(1, format!("only coordinate format is supported, got {}", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "integer" | "double" => MmField::Real,
        "pattern" => MmField::Pattern,
        other => return Err(perr(1, format!("unsupported field type {other}"))),
    };
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(perr(1, format!("unsupported symmetry {other}"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    let mut listed = 0usize;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        let Some((n, nnz)) = size else {
            if parts.len() != 3 {
                return Err(perr(lineno, format!("expected 'rows cols nnz', got {t:?}")));
            }
            let nums: Vec<usize> = parts
                .iter()
                .map(|p| p.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| perr(lineno, format!("bad size line: {e}")))?;
            if nums[0] != nums[1] {
                return Err(perr(lineno, format!("adjacency must be square, got {}x{}", nums[0], nums[1])));
            }
            size = Some((nums[0], nums[2]));
            entries.reserve(if symmetric { 2 * nums[2] } else { nums[2] });
            continue;
        };
        let want = if field == MmField::Pattern { 2 } else { 3 };
        if parts.len() < want {
            return Err(perr(lineno, format!("expected {want} fields, got {t:?}")));
        }
        let idx_of = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|e| perr(lineno, format!("bad index {s:?}: {e}")))?;
            if v == 0 || v > n {
                return Err(perr(lineno, format!("index {v} out of range 1..={n}")));
            }
            Ok(v - 1)
        };
        let i = idx_of(parts[0])?;
        let j = idx_of(parts[1])?;
        let w = if field == MmField::Pattern {
            1.0
        } else {
            let w: f64 = parts[2]
                .parse()
                .map_err(|e| perr(lineno, format!("bad weight {:?}: {e}", parts[2])))?;
            if !(w >= 0.0) || !w.is_finite() {
                return Err(perr(lineno, format!("edge weight must be finite and nonnegative, got {w}")));
            }
            w
        };
        entries.push((i, j, w));
        if symmetric && i != j {
            entries.push((j, i, w));
        }
        listed += 1;
        if listed > nnz {
            return Err(perr(lineno, format!("more entries than the declared {nnz}")));
        }
    }
    let Some((n, nnz)) = size else {
        return Err(perr(1, "missing size line".into()));
    };
    if listed != nnz {
        return Err(perr(1, format!("header declares {nnz} entries but file has {listed}")));
    }
    Ok(SparseAdjacency::from_entries(n, entries, false).symmetrized())
}

/// Writes the upper triangle (including the diagonal) as a symmetric file.
pub fn write_matrix_market(path: &Path, adj: &SparseAdjacency) -> Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let upper: Vec<_> = adj.entries().iter().filter(|e| e.col >= e.row).collect();
    out.push_str(&format!("{} {} {}\n", adj.n(), adj.n(), upper.len()));
    for e in upper {
        // stored lower-triangular per convention: row >= col
        out.push_str(&format!("{} {} {}\n", e.col + 1, e.row + 1, e.weight));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Attributes

/// Reads CSV or `MVGF` attributes, chosen by the leading magic bytes.
pub fn read_attributes(path: &Path) -> Result<DenseMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(FEATURES_MAGIC) {
        read_features_binary(path, &bytes)
    } else {
        read_attributes_csv(path, &bytes)
    }
}

fn read_attributes_csv(path: &Path, bytes: &[u8]) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut cols = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(idx + 1, |p| p.line() as usize);
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if idx == 0 => continue, // header
            Err(e) => return Err(Error::parse(path, line, format!("bad number: {e}"))),
        };
        match cols {
            None => cols = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(Error::parse(path, line, format!("expected {c} columns, got {}", values.len())))
            }
            _ => {}
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::parse(path, line, format!("non-finite value in column {j}")));
        }
        data.extend(values);
        rows += 1;
    }
    DenseMatrix::new(rows, cols.unwrap_or(0), data)
}

pub fn write_attributes_csv(path: &Path, x: &DenseMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for i in 0..x.rows() {
        w.write_record(x.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Little-endian binary reader that maps short reads to `Truncated`.
struct ByteReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        ByteReader { path, bytes, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                path: self.path.to_path_buf(),
            }),
        }
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        if self.take(4)? != expected {
            return Err(Error::BadMagic {
                path: self.path.to_path_buf(),
                expected: String::from_utf8_lossy(expected).into_owned(),
            });
        }
        Ok(())
    }

    fn version(&mut self, expected: u16) -> Result<()> {
        let v = self.u16()?;
        if v != expected {
            return Err(Error::BadVersion {
                path: self.path.to_path_buf(),
                found: v.into(),
                expected: expected.into(),
            });
        }
        Ok(())
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self, count: u64, width: usize) -> Result<usize> {
        usize::try_from(count)
            .ok()
            .and_then(|c| c.checked_mul(width))
            .filter(|&b| b <= self.bytes.len() - self.pos)
            .ok_or_else(|| Error::Truncated {
                path: self.path.to_path_buf(),
            })
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::parse(
                self.path,
                0,
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn read_features_binary(path: &Path, bytes: &[u8]) -> Result<DenseMatrix> {
    let mut r = ByteReader::new(path, bytes);
    r.magic(FEATURES_MAGIC)?;
    r.version(FEATURES_VERSION)?;
    let rows = r.u64()?;
    let cols = r.u64()?;
    let count = rows.checked_mul(cols).ok_or_else(|| Error::parse(path, 0, "size overflow"))?;
    let body = r.len(count, 4)?;
    let data: Vec<f64> = r
        .take(body)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    r.finish()?;
    if let Some(p) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::parse(path, 0, format!("non-finite value at flat index {p}")));
    }
    DenseMatrix::new(rows as usize, cols as usize, data)
}

/// Writes `MVGF` binary attributes; values are narrowed to `f32`.
pub fn write_features_binary(path: &Path, x: &DenseMatrix) -> Result<()> {
    let mut buf = Vec::with_capacity(22 + 4 * x.as_slice().len());
    buf.extend_from_slice(FEATURES_MAGIC);
    buf.extend_from_slice(&FEATURES_VERSION.to_le_bytes());
    buf.extend_from_slice(&(x.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(x.cols() as u64).to_le_bytes());
    for &v in x.as_slice() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// CSV for `.csv` paths, `MVGF` otherwise.
pub fn write_attributes(path: &Path, x: &DenseMatrix) -> Result<()> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_attributes_csv(path, x)
    } else {
        write_features_binary(path, x)
    }
}

// ---------------------------------------------------------------------------
// Labels

pub fn read_labels(path: &Path) -> Result<Vec<u32>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let body = text.trim_end();
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.lines()
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse::<u32>()
                .map_err(|e| Error::parse(path, i + 1, format!("bad label {l:?}: {e}")))
        })
        .collect()
}

pub fn write_labels(path: &Path, labels: &[u32]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Codes

pub fn codes_to_bytes(codes: &BinaryCodes) -> Result<Vec<u8>> {
    let meta = serde_json::to_vec(&codes.metadata)?;
    let mut buf = Vec::with_capacity(22 + 8 * codes.words().len() + meta.len());
    buf.extend_from_slice(CODES_MAGIC);
    buf.extend_from_slice(&CODES_VERSION.to_le_bytes());
    buf.extend_from_slice(&(codes.n() as u64).to_le_bytes());
    buf.extend_from_slice(&(codes.bits() as u32).to_le_bytes());
    for w in codes.words() {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta);
    Ok(buf)
}

pub fn codes_from_bytes(path: &Path, bytes: &[u8]) -> Result<BinaryCodes> {
    let mut r = ByteReader::new(path, bytes);
    r.magic(CODES_MAGIC)?;
    r.version(CODES_VERSION)?;
    let n = r.u64()?;
    let bits = r.u32()? as usize;
    let count = n
        .checked_mul(words_per_code(bits) as u64)
        .ok_or_else(|| Error::parse(path, 0, "size overflow"))?;
    let body = r.len(count, 8)?;
    let words: Vec<u64> = r
        .take(body)?
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let meta_len = r.u32()? as usize;
    let meta: CodesMetadata = serde_json::from_slice(r.take(meta_len)?)
        .map_err(|e| Error::parse(path, 0, format!("bad metadata: {e}")))?;
    r.finish()?;
    Ok(BinaryCodes::from_words(n as usize, bits, words)?.with_metadata(meta))
}

pub fn save_codes(codes: &BinaryCodes, path: &Path) -> Result<()> {
    let bytes = codes_to_bytes(codes)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_codes(path: &Path) -> Result<BinaryCodes> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    codes_from_bytes(path, &bytes)
}

// ---------------------------------------------------------------------------
// Neighbor cache

/// How a neighbor cache was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborCacheMeta {
    pub m: usize,
    pub s: f64,
    pub k: usize,
    pub filtered: bool,
}

pub fn save_neighbors(path: &Path, nbrs: &NeighborSets, meta: &NeighborCacheMeta) -> Result<()> {
    let n = nbrs.per_view.first().map_or(0, Neighbors::n);
    let k = nbrs.per_view.first().map_or(0, Neighbors::k);
    let mut buf = Vec::new();
    buf.extend_from_slice(NEIGHBORS_MAGIC);
    buf.extend_from_slice(&NEIGHBORS_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    buf.extend_from_slice(&(k as u32).to_le_bytes());
    buf.extend_from_slice(&(nbrs.n_views() as u32).to_le_bytes());
    for nb in &nbrs.per_view {
        for &id in nb.ids() {
            buf.extend_from_slice(&(id as u32).to_le_bytes());
        }
    }
    let meta = serde_json::to_vec(meta)?;
    buf.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    buf.extend_from_slice(&meta);
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_neighbors(path: &Path) -> Result<(NeighborSets, NeighborCacheMeta)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = ByteReader::new(path, &bytes);
    r.magic(NEIGHBORS_MAGIC)?;
    r.version(NEIGHBORS_VERSION)?;
    let n = r.u64()? as usize;
    let k = r.u32()? as usize;
    let views = r.u32()? as usize;
    let mut per_view = Vec::with_capacity(views);
    for _ in 0..views {
        let body = r.len((n * k) as u64, 4)?;
        let ids: Vec<usize> = r
            .take(body)?
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
            .collect();
        let rows = if k == 0 {
            vec![Vec::new(); n]
        } else {
            ids.chunks(k).map(<[usize]>::to_vec).collect()
        };
        per_view.push(Neighbors::from_rows(rows)?);
    }
    let meta_len = r.u32()? as usize;
    let meta: NeighborCacheMeta = serde_json::from_slice(r.take(meta_len)?)
        .map_err(|e| Error::parse(path, 0, format!("bad metadata: {e}")))?;
    r.finish()?;
    Ok((NeighborSets { per_view }, meta))
}

// ---------------------------------------------------------------------------
// Run records

/// Everything needed to re-derive a result from its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub tool_version: String,
    pub manifest: PathBuf,
    pub dataset_digest: String,
    pub load_options: LoadOptions,
    pub config: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codes_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalReport>,
    pub epochs: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub lambda: Vec<f64>,
    pub wall_ms: f64,
}

impl RunRecord {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    /// Whether the inputs named by the record still hash to the stored digest.
    pub fn digest_matches(&self) -> Result<bool> {
        Ok(dataset_digest(&self.manifest)? == self.dataset_digest)
    }
}
