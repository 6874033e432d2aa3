//! The frozen event vector index: exact and inverted-file cosine search,
//! plus a versioned binary persistence format.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::dot;
use crate::reformulate::EventPhrase;
use crate::textcore::tokenize;
use crate::{Error, Result};

use super::DualTower;

/// Inverted-file tables: spherical k-means centroids and per-centroid
/// posting lists partitioning the index rows.
#[derive(Debug, Clone, PartialEq)]
pub struct IvfTables {
    pub k: usize,
    /// k × dim, row-major, unit rows.
    pub centroids: Vec<f64>,
    pub lists: Vec<Vec<u32>>,
}

/// Frozen collection of unit event vectors. Built once from a tower and
/// an event list; never mutated afterwards (replacement is wholesale).
#[derive(Debug, Clone, PartialEq)]
pub struct EventIndex {
    pub ids: Vec<String>,
    pub dim: usize,
    /// n × dim row-major unit vectors.
    vectors: Vec<f64>,
    pub ivf: Option<IvfTables>,
}

/// Search strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exact,
    /// Probe the `nprobe` centroids nearest to the query.
    Ivf { nprobe: usize },
}

impl EventIndex {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    pub fn position_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}

/// Encodes every event with the tower's event side. With `ivf_k` of
/// `Some(0)` the centroid count defaults to ⌈√n⌉.
pub fn build_index(
    tower: &DualTower,
    events: &[EventPhrase],
    build_ivf: bool,
    kmeans_iters: usize,
    seed: u64,
) -> Result<EventIndex> {
    if events.is_empty() {
        return Err(Error::invalid("cannot build an index over zero events"));
    }
    let dim = tower.event_tower().dim;
    let mut vectors = Vec::with_capacity(events.len() * dim);
    let mut ids = Vec::with_capacity(events.len());
    for e in events {
        vectors.extend(tower.encode_event(&tokenize(&e.text)));
        ids.push(e.event_id.clone());
    }
    let ivf = if build_ivf {
        let k = (events.len() as f64).sqrt().ceil() as usize;
        Some(kmeans_ivf(&vectors, events.len(), dim, k.max(1), kmeans_iters, seed))
    } else {
        None
    };
    Ok(EventIndex { ids, dim, vectors, ivf })
}

/// Spherical k-means: centroids stay unit-norm, assignment by cosine.
/// Empty clusters keep their previous centroid.
fn kmeans_ivf(
    vectors: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    iters: usize,
    seed: u64,
) -> IvfTables {
    let k = k.min(n);
    let row = |i: usize| &vectors[i * dim..(i + 1) * dim];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut centroids: Vec<f64> = Vec::with_capacity(k * dim);
    for &i in order.iter().take(k) {
        centroids.extend_from_slice(row(i));
    }
    let mut assignment = vec![0usize; n];
    for _ in 0..iters {
        for (i, slot) in assignment.iter_mut().enumerate() {
            *slot = nearest_centroid(row(i), &centroids, dim, k);
        }
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c * dim..(c + 1) * dim].iter_mut().zip(row(i)) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let slice = &mut sums[c * dim..(c + 1) * dim];
            let norm = dot(slice, slice).sqrt();
            if norm > 1e-12 {
                for v in slice.iter_mut() {
                    *v /= norm;
                }
                centroids[c * dim..(c + 1) * dim].copy_from_slice(slice);
            }
        }
    }
    let mut lists = vec![Vec::new(); k];
    for (i, slot) in assignment.iter_mut().enumerate() {
        *slot = nearest_centroid(row(i), &centroids, dim, k);
        lists[*slot].push(i as u32);
    }
    IvfTables { k, centroids, lists }
}

fn nearest_centroid(v: &[f64], centroids: &[f64], dim: usize, k: usize) -> usize {
    let mut best = 0usize;
    let mut best_score = f64::NEG_INFINITY;
    for c in 0..k {
        let s = dot(v, &centroids[c * dim..(c + 1) * dim]);
        if s > best_score {
            best_score = s;
            best = c;
        }
    }
    best
}

/// Top-k events by cosine. Ordering is (score desc, id asc); `k > n`
/// returns all n. The query vector must be unit norm.
pub fn search_topk(
    index: &EventIndex,
    query_vec: &[f64],
    k: usize,
    mode: SearchMode,
) -> Vec<(String, f64)> {
    assert!(k >= 1, "k must be at least 1");
    assert_eq!(query_vec.len(), index.dim, "query vector dimension mismatch");
    let mut scored: Vec<(usize, f64)> = match mode {
        SearchMode::Exact => (0..index.len())
            .map(|i| (i, dot(query_vec, index.vector(i))))
            .collect(),
        SearchMode::Ivf { nprobe } => {
            let ivf = index
                .ivf
                .as_ref()
                .expect("ivf search requested on an index built without ivf tables");
            let mut cells: Vec<(usize, f64)> = (0..ivf.k)
                .map(|c| {
                    (
                        c,
                        dot(query_vec, &ivf.centroids[c * index.dim..(c + 1) * index.dim]),
                    )
                })
                .collect();
            cells.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            cells
                .iter()
                .take(nprobe.max(1))
                .flat_map(|&(c, _)| ivf.lists[c].iter())
                .map(|&i| (i as usize, dot(query_vec, index.vector(i as usize))))
                .collect()
        }
    };
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap()
            .then_with(|| index.ids[a.0].cmp(&index.ids[b.0]))
    });
    scored
        .into_iter()
        .take(k)
        .map(|(i, s)| (index.ids[i].clone(), s))
        .collect()
}

const INDEX_MAGIC: &[u8; 4] = b"EVQI";
const INDEX_VERSION: u32 = 1;

impl EventIndex {
    /// Versioned binary layout: magic, version, dim, n, ivf flag, ids
    /// (length-prefixed UTF-8), vectors (f64 LE), optional IVF tables.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
        );
        let io = |e: std::io::Error| Error::io(path, e);
        w.write_all(INDEX_MAGIC).map_err(io)?;
        w.write_all(&INDEX_VERSION.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.dim as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.len() as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&[self.ivf.is_some() as u8]).map_err(io)?;
        for id in &self.ids {
            let b = id.as_bytes();
            w.write_all(&(b.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(b).map_err(io)?;
        }
        for v in &self.vectors {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        if let Some(ivf) = &self.ivf {
            w.write_all(&(ivf.k as u32).to_le_bytes()).map_err(io)?;
            for v in &ivf.centroids {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
            for list in &ivf.lists {
                w.write_all(&(list.len() as u64).to_le_bytes()).map_err(io)?;
                for entry in list {
                    w.write_all(&entry.to_le_bytes()).map_err(io)?;
                }
            }
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = std::io::BufReader::new(
            std::fs::File::open(path).map_err(|e| Error::io(path, e))?,
        );
        let bad = |msg: &str| Error::BadArtifact(format!("index file: {msg}"));
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic, path)?;
        if &magic != INDEX_MAGIC {
            return Err(bad("wrong magic"));
        }
        let version = read_u32(&mut r, path)?;
        if version != INDEX_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let dim = read_u32(&mut r, path)? as usize;
        let n = read_u64(&mut r, path)? as usize;
        let mut flag = [0u8; 1];
        read_exact(&mut r, &mut flag, path)?;
        let mut ids = Vec::with_capacity(n);
        for _ in 0..n {
            let len = read_u32(&mut r, path)? as usize;
            let mut buf = vec![0u8; len];
            read_exact(&mut r, &mut buf, path)?;
            ids.push(String::from_utf8(buf).map_err(|_| bad("id is not utf-8"))?);
        }
        let mut vectors = vec![0.0f64; n * dim];
        for v in vectors.iter_mut() {
            *v = read_f64(&mut r, path)?;
        }
        let ivf = if flag[0] == 1 {
            let k = read_u32(&mut r, path)? as usize;
            let mut centroids = vec![0.0f64; k * dim];
            for v in centroids.iter_mut() {
                *v = read_f64(&mut r, path)?;
            }
            let mut lists = Vec::with_capacity(k);
            for _ in 0..k {
                let len = read_u64(&mut r, path)? as usize;
                let mut list = Vec::with_capacity(len);
                for _ in 0..len {
                    let e = read_u32(&mut r, path)?;
                    if e as usize >= n {
                        return Err(bad("posting entry out of range"));
                    }
                    list.push(e);
                }
                lists.push(list);
            }
            Some(IvfTables { k, centroids, lists })
        } else {
            None
        };
        Ok(EventIndex { ids, dim, vectors, ivf })
    }
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::io(path, e))
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, path)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, path)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, path)?;
    Ok(f64::from_le_bytes(b))
}
