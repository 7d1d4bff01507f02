//! Binary model container.
//!
//! All integers and floats little-endian; strings are a `u32` byte length
//! followed by UTF-8.
//!
//! ```text
//! magic        8 bytes  "SDGDIVLM"
//! version      u32      1
//! order        u32
//! smoothing    u8 tag (0 add-k, 1 Kneser-Ney), f64 parameter
//! rep_dim      u32
//! rep_window   u32
//! rep_seed     u64
//! meta         u32 count, then (key, value) string pairs in key order
//! vocabulary   u32 count, then the tokens in id order
//! tables       for h in 0..order:
//!                u64 context count, then per context in sorted order:
//!                  h token ids (u32), u32 entry count,
//!                  then (token id u32, count u64) in id order
//! reps         vocabulary count * rep_dim f64, row-major
//! ```
//!
//! Kneser-Ney continuation counts are rebuilt on load.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::Serialize;

use super::ngram::{NgramModel, Row, Smoothing, Table};
use super::repr::Representations;
use super::vocab::Vocabulary;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SDGDIVLM";
const VERSION: u32 = 1;

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str(r: &mut impl Read) -> Result<String> {
    let len = r.read_u32::<LE>().map_err(truncated)? as usize;
    if len > 1 << 24 {
        return Err(Error::ModelFormat(format!("string length {len} too large")));
    }
    let mut buf = vec![0; len];
    r.read_exact(&mut buf).map_err(truncated)?;
    String::from_utf8(buf).map_err(|_| Error::ModelFormat("string is not UTF-8".into()))
}

fn truncated(e: std::io::Error) -> Error {
    Error::ModelFormat(format!("truncated model: {e}"))
}

impl NgramModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Vec::new();
        self.write_to(&mut w).expect("writing to a Vec cannot fail");
        w
    }

    fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LE>(VERSION)?;
        w.write_u32::<LE>(self.order as u32)?;
        match self.smoothing {
            Smoothing::AddK { k } => {
                w.write_u8(0)?;
                w.write_f64::<LE>(k)?;
            }
            Smoothing::KneserNey { discount } => {
                w.write_u8(1)?;
                w.write_f64::<LE>(discount)?;
            }
        }
        w.write_u32::<LE>(self.reps.dim() as u32)?;
        w.write_u32::<LE>(self.rep_window)?;
        w.write_u64::<LE>(self.rep_seed)?;
        w.write_u32::<LE>(self.meta.len() as u32)?;
        for (k, v) in &self.meta {
            write_str(w, k)?;
            write_str(w, v)?;
        }
        w.write_u32::<LE>(self.vocab.len() as u32)?;
        for t in self.vocab.tokens() {
            write_str(w, t)?;
        }
        for table in &self.tables {
            w.write_u64::<LE>(table.len() as u64)?;
            for (ctx, row) in table {
                for &id in ctx {
                    w.write_u32::<LE>(id)?;
                }
                w.write_u32::<LE>(row.counts.len() as u32)?;
                for (&tok, &n) in &row.counts {
                    w.write_u32::<LE>(tok)?;
                    w.write_u64::<LE>(n)?;
                }
            }
        }
        for &x in self.reps.raw() {
            w.write_f64::<LE>(x)?;
        }
        Ok(())
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let r = &mut bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::ModelFormat("bad magic bytes".into()));
        }
        let version = r.read_u32::<LE>().map_err(truncated)?;
        if version != VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let order = r.read_u32::<LE>().map_err(truncated)? as usize;
        if order == 0 || order > 8 {
            return Err(Error::ModelFormat(format!("bad order {order}")));
        }
        let tag = r.read_u8().map_err(truncated)?;
        let param = r.read_f64::<LE>().map_err(truncated)?;
        let smoothing = match tag {
            0 => Smoothing::AddK { k: param },
            1 => Smoothing::KneserNey { discount: param },
            t => return Err(Error::ModelFormat(format!("unknown smoothing tag {t}"))),
        };
        smoothing
            .validate()
            .map_err(|e| Error::ModelFormat(e.to_string()))?;
        let dim = r.read_u32::<LE>().map_err(truncated)? as usize;
        let rep_window = r.read_u32::<LE>().map_err(truncated)?;
        let rep_seed = r.read_u64::<LE>().map_err(truncated)?;
        let n_meta = r.read_u32::<LE>().map_err(truncated)?;
        let mut meta = BTreeMap::new();
        for _ in 0..n_meta {
            let k = read_str(r)?;
            meta.insert(k, read_str(r)?);
        }
        let v = r.read_u32::<LE>().map_err(truncated)? as usize;
        let tokens = (0..v).map(|_| read_str(r)).collect::<Result<Vec<_>>>()?;
        let vocab = Vocabulary::from(tokens);
        if !vocab.is_valid() {
            return Err(Error::ModelFormat("invalid vocabulary block".into()));
        }
        let check_id = |id: u32| -> Result<u32> {
            if (id as usize) < v {
                Ok(id)
            } else {
                Err(Error::ModelFormat(format!("token id {id} out of range")))
            }
        };
        let mut tables = Vec::with_capacity(order);
        for h in 0..order {
            let n_ctx = r.read_u64::<LE>().map_err(truncated)?;
            let mut table = Table::new();
            for _ in 0..n_ctx {
                let ctx = (0..h)
                    .map(|_| check_id(r.read_u32::<LE>().map_err(truncated)?))
                    .collect::<Result<Vec<_>>>()?;
                let n = r.read_u32::<LE>().map_err(truncated)?;
                let mut row = Row::default();
                for _ in 0..n {
                    let tok = check_id(r.read_u32::<LE>().map_err(truncated)?)?;
                    let c = r.read_u64::<LE>().map_err(truncated)?;
                    row.counts.insert(tok, c);
                    row.total += c;
                }
                table.insert(ctx, row);
            }
            tables.push(table);
        }
        if tables[0].get(&Vec::new()).is_none_or(|r| r.total == 0) {
            return Err(Error::ModelFormat("missing unigram counts".into()));
        }
        let mut data = Vec::with_capacity(v * dim);
        for _ in 0..v * dim {
            data.push(r.read_f64::<LE>().map_err(truncated)?);
        }
        if !r.is_empty() {
            return Err(Error::ModelFormat(format!("{} trailing bytes", r.len())));
        }
        let reps = Representations::from_raw(dim, data)
            .ok_or_else(|| Error::ModelFormat("bad representation block".into()))?;
        Ok(NgramModel::assemble(
            order, smoothing, vocab, tables, reps, rep_window, rep_seed, meta,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Human-readable dump with token strings in place of ids.
    pub fn to_debug_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Entry<'a> {
            context: Vec<&'a str>,
            total: u64,
            counts: BTreeMap<&'a str, u64>,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            order: usize,
            smoothing: String,
            meta: &'a BTreeMap<String, String>,
            vocabulary: &'a [String],
            tables: Vec<Vec<Entry<'a>>>,
            rep_dim: usize,
            representations: BTreeMap<&'a str, &'a [f64]>,
        }
        let tok = |id: u32| self.vocab.token(id);
        let dump = Dump {
            order: self.order,
            smoothing: self.smoothing.to_string(),
            meta: &self.meta,
            vocabulary: self.vocab.tokens(),
            tables: self
                .tables
                .iter()
                .map(|t| {
                    t.iter()
                        .map(|(ctx, row)| Entry {
                            context: ctx.iter().map(|&i| tok(i)).collect(),
                            total: row.total,
                            counts: row.counts.iter().map(|(&i, &n)| (tok(i), n)).collect(),
                        })
                        .collect()
                })
                .collect(),
            rep_dim: self.reps.dim(),
            representations: (0..self.vocab.len() as u32)
                .map(|i| (tok(i), self.reps.row(i)))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&dump)?)
    }
}
