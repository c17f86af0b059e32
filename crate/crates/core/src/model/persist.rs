//! Binary model container.
//!
//! Layout: magic `DBND`, `u32` format version, payload, `u32` CRC-32 of every
//! preceding byte. All integers and reals are little-endian. Parameter tensors are
//! stored as named blocks: name, `u32` rows, `u32` cols, `rows·cols` `f64`s.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::hyper::{FeatureSet, Hyperparams, Variant};
use super::network::Network;
use super::segmenter::{LexicalModel, ProsodicModel, TrainedSegmenter};
use crate::corpus::PROSODY_DIM;
use crate::error::{Error, Result};
use crate::features::{ProsodyStats, Vocab};
use crate::numerics::{Activation, BiLstm, Conv1d, Dense, Lstm, Matrix};

pub const MAGIC: &[u8; 4] = b"DBND";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("size fits in u32");
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn matrix(&mut self, name: &str, m: &Matrix) {
        self.str(name);
        self.u32(m.rows());
        self.u32(m.cols());
        for v in m.as_slice() {
            self.f64(*v);
        }
    }

    fn hyper(&mut self, h: &Hyperparams) {
        for v in [h.word_dim, h.tag_dim, h.filters, h.filter_len, h.pool_size, h.recurrent_units, h.mlp_hidden] {
            self.u32(v);
        }
        for v in [h.gamma, h.eta, h.dropout_rate] {
            self.f64(v);
        }
    }

    fn network(&mut self, net: &Network) {
        self.u8(net.variant.code());
        self.u32(net.feature_dim);
        self.u32(net.pool_size);
        self.f64(net.dropout_rate);
        self.u32(net.conv.as_ref().map_or(0, |c| c.width));
        let tensors = net.named_tensors();
        self.u32(tensors.len());
        for (name, m) in tensors {
            self.matrix(&name, m);
        }
    }

    fn vocab(&mut self, v: Option<&Vocab>) {
        match v {
            None => self.u8(0),
            Some(v) => {
                self.u8(1);
                self.u32(v.len());
                for w in v.words() {
                    self.str(w);
                }
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::data("model payload ends early"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::data("invalid UTF-8 in model file"))
    }

    fn matrix(&mut self) -> Result<(String, Matrix)> {
        let name = self.str()?;
        let rows = self.u32()?;
        let cols = self.u32()?;
        let n = rows
            .checked_mul(cols)
            .filter(|n| n.saturating_mul(8) <= self.buf.len())
            .ok_or_else(|| Error::data(format!("tensor {name} has an impossible shape")))?;
        let data = (0..n).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Ok((name, Matrix::from_vec(rows, cols, data)?))
    }

    fn hyper(&mut self) -> Result<Hyperparams> {
        Ok(Hyperparams {
            word_dim: self.u32()?,
            tag_dim: self.u32()?,
            filters: self.u32()?,
            filter_len: self.u32()?,
            pool_size: self.u32()?,
            recurrent_units: self.u32()?,
            mlp_hidden: self.u32()?,
            gamma: self.f64()?,
            eta: self.f64()?,
            dropout_rate: self.f64()?,
        })
    }

    fn network(&mut self) -> Result<Network> {
        let variant = Variant::from_code(self.u8()?).ok_or_else(|| Error::data("unknown variant code"))?;
        let feature_dim = self.u32()?;
        let pool_size = self.u32()?;
        let dropout_rate = self.f64()?;
        let conv_width = self.u32()?;
        let count = self.u32()?;
        let mut blocks = BTreeMap::new();
        for _ in 0..count {
            let (name, m) = self.matrix()?;
            blocks.insert(name, m);
        }
        let mut take = |name: &str| {
            blocks
                .remove(name)
                .ok_or_else(|| Error::data(format!("model file lacks tensor {name}")))
        };
        let word_embeddings = if feature_dim == 0 {
            take("embedding.word").ok()
        } else {
            None
        };
        let tag_embeddings = if feature_dim == 0 {
            take("embedding.tag").ok()
        } else {
            None
        };
        let conv = if variant.has_conv() {
            Some(Conv1d::new(take("conv.weight")?, take("conv.bias")?, conv_width, Activation::Relu)?)
        } else {
            None
        };
        let recurrent = if variant.has_recurrence() {
            let mut lstm = |dir: &str| -> Result<Lstm> {
                Lstm::new(
                    take(&format!("lstm.{dir}.wx"))?,
                    take(&format!("lstm.{dir}.wh"))?,
                    take(&format!("lstm.{dir}.b"))?,
                    take(&format!("lstm.{dir}.wy"))?,
                    take(&format!("lstm.{dir}.by"))?,
                )
            };
            Some(BiLstm {
                forward: lstm("fwd")?,
                backward: lstm("bwd")?,
            })
        } else {
            None
        };
        let hidden = if variant == Variant::Mlp {
            Some(Dense::new(take("hidden.weight")?, take("hidden.bias")?, Activation::Sigmoid)?)
        } else {
            None
        };
        let output = Dense::new(take("output.weight")?, take("output.bias")?, Activation::Identity)?;
        if let Some(extra) = blocks.keys().next() {
            return Err(Error::data(format!("unexpected tensor {extra} in model file")));
        }
        Ok(Network {
            variant,
            word_embeddings,
            tag_embeddings,
            feature_dim,
            conv,
            pool_size,
            recurrent,
            hidden,
            output,
            dropout_rate,
        })
    }

    fn vocab(&mut self) -> Result<Option<Vocab>> {
        if self.u8()? == 0 {
            return Ok(None);
        }
        let n = self.u32()?;
        let words = (0..n).map(|_| self.str()).collect::<Result<Vec<_>>>()?;
        Ok(Some(Vocab::new(words)?))
    }
}

pub fn encode_model(seg: &TrainedSegmenter) -> Result<Vec<u8>> {
    seg.validate()?;
    let mut w = Writer::default();
    w.buf.extend_from_slice(MAGIC);
    w.buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    w.u8(seg.variant.code());
    w.u8(seg.features.bits());
    w.f64(seg.alpha);
    match &seg.lexical {
        None => w.u8(0),
        Some(lex) => {
            w.u8(1);
            w.hyper(&lex.hyper);
            w.network(&lex.net);
            w.vocab(lex.words.as_ref());
            w.vocab(lex.tags.as_ref());
        }
    }
    match &seg.prosodic {
        None => w.u8(0),
        Some(p) => {
            w.u8(1);
            w.hyper(&p.hyper);
            w.network(&p.net);
            for v in p.stats.mean.iter().chain(&p.stats.std) {
                w.f64(*v);
            }
        }
    }
    let crc = crc32fast::hash(&w.buf);
    w.buf.extend_from_slice(&crc.to_le_bytes());
    Ok(w.buf)
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedSegmenter> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::data("not a model file (bad magic bytes)"));
    }
    if bytes.len() < 12 {
        return Err(Error::Checksum);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version > FORMAT_VERSION || version == 0 {
        return Err(Error::Version {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::Checksum);
    }
    let mut r = Reader { buf: body, pos: 8 };
    let variant = Variant::from_code(r.u8()?).ok_or_else(|| Error::data("unknown variant code"))?;
    let features = FeatureSet::from_bits(r.u8()?).ok_or_else(|| Error::data("invalid feature set"))?;
    let alpha = r.f64()?;
    let lexical = if r.u8()? == 1 {
        let hyper = r.hyper()?;
        let net = r.network()?;
        let words = r.vocab()?;
        let tags = r.vocab()?;
        Some(LexicalModel { net, hyper, words, tags })
    } else {
        None
    };
    let prosodic = if r.u8()? == 1 {
        let hyper = r.hyper()?;
        let net = r.network()?;
        let mut mean = [0.0; PROSODY_DIM];
        let mut std = [0.0; PROSODY_DIM];
        for v in mean.iter_mut().chain(std.iter_mut()) {
            *v = r.f64()?;
        }
        Some(ProsodicModel {
            net,
            hyper,
            stats: ProsodyStats { mean, std },
        })
    } else {
        None
    };
    if r.pos != body.len() {
        return Err(Error::data("trailing bytes in model payload"));
    }
    let seg = TrainedSegmenter {
        variant,
        features,
        lexical,
        prosodic,
        alpha,
    };
    seg.validate()?;
    Ok(seg)
}

pub fn save_model(seg: &TrainedSegmenter, path: &Path) -> Result<()> {
    fs::write(path, encode_model(seg)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<TrainedSegmenter> {
    decode_model(&fs::read(path)?)
}
