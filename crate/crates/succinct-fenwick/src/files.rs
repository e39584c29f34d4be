//! On-disk formats: element arrays, op traces, and serialized structures.
//!
//! Array files are binary, little-endian throughout:
//!
//! ```text
//! offset 0   magic "PSAR"
//! offset 4   version, one byte, currently 1
//! offset 5   n, u64
//! offset 13  k, u16
//! offset 15  payload: n k-bit values packed lsb-first into 64-bit words,
//!            ceil(n*k / 64) words of 8 bytes, pad bits zero
//! ```
//!
//! Structure files share the header shape with a tag byte after the version,
//! then per-kind parameters and the raw buffers. Every buffer length is
//! derivable from (n, k, params), so encoding is canonical: equal states
//! produce identical bytes.
//!
//! Trace files are text, one op per line: `sum I`, `update I D`, `search J`,
//! `access I`. Blank lines and lines starting with `#` are skipped; line
//! numbers in errors count them anyway.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::bits::{ceil_log2, mask, PackedIntArray};
use crate::classic::ClassicFenwick;
use crate::error::{Error, Result};
use crate::layered::{Geometry, LayeredFenwick, MAX_N};
use crate::packed::{parts::PackedParts, PackedFenwick, PackedParams};
use crate::sampled::SampledFenwick;
use crate::traits::{Op, PartialSums};

const ARRAY_MAGIC: [u8; 4] = *b"PSAR";
const STRUCT_MAGIC: [u8; 4] = *b"PSFS";
const VERSION: u8 = 1;

// ---------------------------------------------------------------- reading

/// Byte cursor that reports the offset of whatever failed to parse.
struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Reader<'a> {
        Reader { buf, pos: 0 }
    }

    fn fail<T>(&self, reason: String) -> Result<T> {
        Err(Error::Parse { offset: self.pos as u64, reason })
    }

    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < len {
            return self.fail(format!(
                "{what} needs {len} bytes, only {} left",
                self.buf.len() - self.pos
            ));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn words(&mut self, count: u64, what: &str) -> Result<Vec<u64>> {
        let bytes = self.take(count as usize * 8, what)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    /// A packed array of `count` `width`-bit values; checks pad bits.
    fn packed(&mut self, count: u64, width: u32, what: &str) -> Result<PackedIntArray> {
        let start = self.pos as u64;
        let nwords = (count * width as u64).div_ceil(64);
        let words = self.words(nwords, what)?;
        PackedIntArray::from_raw(count, width, words).ok_or_else(|| Error::Parse {
            offset: start + 8 * nwords.saturating_sub(1),
            reason: format!("{what}: padding bits past the last value are nonzero"),
        })
    }

    fn magic(&mut self, expect: [u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expect {
            self.pos = 0;
            return self.fail(format!(
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(&expect),
                String::from_utf8_lossy(got)
            ));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let v = self.u8("version")?;
        if v != VERSION {
            self.pos -= 1;
            return self.fail(format!("unsupported version {v}, expected {VERSION}"));
        }
        Ok(())
    }

    /// Header fields shared by both formats; validates ranges.
    fn n_and_k(&mut self) -> Result<(u64, u32)> {
        let npos = self.pos;
        let n = self.u64("length n")?;
        if n > MAX_N {
            self.pos = npos;
            return self.fail(format!("length {n} outside 0..={MAX_N}"));
        }
        let kpos = self.pos;
        let k = self.u16("element width k")?;
        if !(1..=32).contains(&k) {
            self.pos = kpos;
            return self.fail(format!("element width {k} outside 1..=32"));
        }
        Ok((n, k as u32))
    }

    fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return self.fail(format!(
                "{} trailing bytes after the end of the payload",
                self.buf.len() - self.pos
            ));
        }
        Ok(())
    }
}

fn put_u64(out: &mut Vec<u8>, x: u64) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_words(out: &mut Vec<u8>, words: &[u64]) {
    for &w in words {
        put_u64(out, w);
    }
}

// ------------------------------------------------------------ array files

pub fn encode_array(values: &[u64], k: u32) -> Result<Vec<u8>> {
    if !(1..=32).contains(&k) {
        return Err(Error::invalid(format!("element width {k} outside 1..=32")));
    }
    if values.len() as u64 > MAX_N {
        return Err(Error::invalid(format!("length {} outside 0..={MAX_N}", values.len())));
    }
    if let Some(&v) = values.iter().find(|&&v| v > mask(k)) {
        return Err(Error::ValueOverflow { value: v, width: k });
    }
    let packed = PackedIntArray::from_values(values, k);
    let mut out = Vec::with_capacity(15 + packed.word_count() * 8);
    out.extend_from_slice(&ARRAY_MAGIC);
    out.push(VERSION);
    put_u64(&mut out, values.len() as u64);
    out.extend_from_slice(&(k as u16).to_le_bytes());
    put_words(&mut out, packed.words());
    Ok(out)
}

pub fn decode_array(bytes: &[u8]) -> Result<(Vec<u64>, u32)> {
    let mut r = Reader::new(bytes);
    r.magic(ARRAY_MAGIC)?;
    r.version()?;
    let (n, k) = r.n_and_k()?;
    let packed = r.packed(n, k, "payload")?;
    r.finish()?;
    Ok(((1..=n).map(|i| packed.get(i)).collect(), k))
}

pub fn write_array_file(path: &Path, values: &[u64], k: u32) -> Result<()> {
    Ok(fs::write(path, encode_array(values, k)?)?)
}

pub fn read_array_file(path: &Path) -> Result<(Vec<u64>, u32)> {
    decode_array(&fs::read(path)?)
}

// ------------------------------------------------------------ trace files

/// Parses a trace against an array of length n, so op indices are validated
/// here and errors carry the 1-based line number.
pub fn parse_trace(text: &str, n: u64) -> Result<Vec<Op>> {
    Ok(parse_trace_lines(text, n)?.into_iter().map(|(_, op)| op).collect())
}

/// Like [`parse_trace`], but keeps each op's 1-based source line so later
/// stages (replay) can still point at the offending line.
pub fn parse_trace_lines(text: &str, n: u64) -> Result<Vec<(usize, Op)>> {
    let mut ops = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fail = |reason: String| Error::TraceLine { line, reason };
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut parts = t.split_whitespace();
        let op = parts.next().unwrap();
        let mut arg = |what: &str| {
            parts
                .next()
                .ok_or_else(|| fail(format!("op {op} is missing its {what}")))
        };
        let parsed = match op {
            "sum" => {
                let i = parse_u64(arg("index")?, fail)?;
                if i > n {
                    return Err(fail(format!("index {i} out of 0..={n}")));
                }
                Op::Sum { i }
            }
            "update" => {
                let i = parse_u64(arg("index")?, fail)?;
                let d = arg("delta")?;
                let delta: i64 =
                    d.parse().map_err(|_| fail(format!("bad integer {d:?}")))?;
                if i < 1 || i > n {
                    return Err(fail(format!("index {i} out of 1..={n}")));
                }
                Op::Update { i, delta }
            }
            "search" => {
                let j = parse_u64(arg("target")?, fail)?;
                if j < 1 {
                    return Err(fail("search target must be at least 1".to_string()));
                }
                Op::Search { j }
            }
            "access" => {
                let i = parse_u64(arg("index")?, fail)?;
                if i < 1 || i > n {
                    return Err(fail(format!("index {i} out of 1..={n}")));
                }
                Op::Access { i }
            }
            other => {
                return Err(fail(format!(
                    "unknown op {other:?}, expected sum, update, search, or access"
                )))
            }
        };
        if let Some(extra) = parts.next() {
            return Err(fail(format!("unexpected trailing token {extra:?}")));
        }
        ops.push((line, parsed));
    }
    Ok(ops)
}

fn parse_u64(tok: &str, fail: impl Fn(String) -> Error) -> Result<u64> {
    tok.parse().map_err(|_| fail(format!("bad integer {tok:?}")))
}

pub fn format_trace(ops: &[Op]) -> String {
    let mut out = String::new();
    for op in ops {
        match *op {
            Op::Sum { i } => writeln!(out, "sum {i}"),
            Op::Update { i, delta } => writeln!(out, "update {i} {delta}"),
            Op::Search { j } => writeln!(out, "search {j}"),
            Op::Access { i } => writeln!(out, "access {i}"),
        }
        .unwrap();
    }
    out
}

pub fn read_trace_file(path: &Path, n: u64) -> Result<Vec<Op>> {
    parse_trace(&fs::read_to_string(path)?, n)
}

// -------------------------------------------------------- structure files

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureKind {
    Classic,
    Layered,
    Sampled,
    Packed,
}

impl StructureKind {
    pub const ALL: [StructureKind; 4] = [
        StructureKind::Classic,
        StructureKind::Layered,
        StructureKind::Sampled,
        StructureKind::Packed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Classic => "classic",
            StructureKind::Layered => "layered",
            StructureKind::Sampled => "sampled",
            StructureKind::Packed => "packed",
        }
    }

    fn tag(self) -> u8 {
        match self {
            StructureKind::Classic => 1,
            StructureKind::Layered => 2,
            StructureKind::Sampled => 3,
            StructureKind::Packed => 4,
        }
    }

    fn from_tag(t: u8) -> Option<StructureKind> {
        StructureKind::ALL.into_iter().find(|k| k.tag() == t)
    }
}

impl std::str::FromStr for StructureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<StructureKind> {
        StructureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown structure {s:?}, expected classic, layered, sampled, or packed"
                ))
            })
    }
}

/// Any of the four structures behind one door, for code that picks at
/// runtime.
#[derive(Debug)]
pub enum AnyStructure {
    Classic(ClassicFenwick),
    Layered(LayeredFenwick),
    Sampled(SampledFenwick),
    Packed(PackedFenwick),
}

impl AnyStructure {
    pub fn kind(&self) -> StructureKind {
        match self {
            AnyStructure::Classic(_) => StructureKind::Classic,
            AnyStructure::Layered(_) => StructureKind::Layered,
            AnyStructure::Sampled(_) => StructureKind::Sampled,
            AnyStructure::Packed(_) => StructureKind::Packed,
        }
    }

    pub fn as_dyn(&self) -> &dyn PartialSums {
        match self {
            AnyStructure::Classic(s) => s,
            AnyStructure::Layered(s) => s,
            AnyStructure::Sampled(s) => s,
            AnyStructure::Packed(s) => s,
        }
    }

    pub fn as_dyn_mut(&mut self) -> &mut dyn PartialSums {
        match self {
            AnyStructure::Classic(s) => s,
            AnyStructure::Layered(s) => s,
            AnyStructure::Sampled(s) => s,
            AnyStructure::Packed(s) => s,
        }
    }

    /// Branching factor as reported in headers and CSV; classic is the b=2
    /// tree it is equivalent to.
    pub fn branching(&self) -> u64 {
        match self {
            AnyStructure::Classic(_) => 2,
            AnyStructure::Layered(s) => s.geometry().b(),
            AnyStructure::Sampled(s) => s.branching(),
            AnyStructure::Packed(s) => s.params().b,
        }
    }

    /// Sample rate as reported in headers and CSV; 1 where nothing is
    /// dropped.
    pub fn sample_rate(&self) -> u64 {
        match self {
            AnyStructure::Classic(_) | AnyStructure::Layered(_) => 1,
            AnyStructure::Sampled(s) => s.sample_rate(),
            AnyStructure::Packed(s) => s.sample_rate(),
        }
    }
}

pub fn encode_structure(s: &AnyStructure) -> Vec<u8> {
    let d = s.as_dyn();
    let mut out = Vec::new();
    out.extend_from_slice(&STRUCT_MAGIC);
    out.push(VERSION);
    out.push(s.kind().tag());
    put_u64(&mut out, d.len());
    out.extend_from_slice(&(d.value_width() as u16).to_le_bytes());
    match s {
        AnyStructure::Classic(c) => put_words(&mut out, c.slots()),
        AnyStructure::Layered(l) => {
            put_u64(&mut out, l.geometry().b());
            for lv in l.level_arrays() {
                put_words(&mut out, lv.words());
            }
        }
        AnyStructure::Sampled(sp) => {
            put_u64(&mut out, sp.branching());
            put_u64(&mut out, sp.sample_rate());
            for lv in sp.tree().level_arrays() {
                put_words(&mut out, lv.words());
            }
            put_words(&mut out, sp.base_array().words());
        }
        AnyStructure::Packed(p) => {
            let PackedParts { params, entries, pending, cursors, base_words, .. } = p.parts();
            out.extend_from_slice(&(params.delta_bits as u16).to_le_bytes());
            for lv in entries {
                put_words(&mut out, lv.words());
            }
            for level in pending {
                put_words(&mut out, level);
            }
            for cur in cursors {
                put_words(&mut out, cur.words());
            }
            put_words(&mut out, base_words);
        }
    }
    out
}

pub fn decode_structure(bytes: &[u8]) -> Result<AnyStructure> {
    let mut r = Reader::new(bytes);
    r.magic(STRUCT_MAGIC)?;
    r.version()?;
    let tagpos = r.pos;
    let tag = r.u8("structure tag")?;
    let kind = StructureKind::from_tag(tag).ok_or(Error::Parse {
        offset: tagpos as u64,
        reason: format!("unknown structure tag {tag}"),
    })?;
    let (n, k) = r.n_and_k()?;
    if n < 1 {
        return Err(Error::Parse {
            offset: 6,
            reason: "structure length must be at least 1".to_string(),
        });
    }
    let out = match kind {
        StructureKind::Classic => {
            let slots = r.words(n, "slots")?;
            AnyStructure::Classic(ClassicFenwick::from_slots(k, slots))
        }
        StructureKind::Layered => {
            let geo = read_geometry(&mut r, n, k)?;
            let levels = read_levels(&mut r, &geo)?;
            AnyStructure::Layered(LayeredFenwick::from_parts(geo, levels))
        }
        StructureKind::Sampled => {
            let bpos = r.pos;
            let b = r.u64("branching factor")?;
            let dpos = r.pos;
            let d = r.u64("sample rate")?;
            if d < 1 || d > n {
                r.pos = dpos;
                return r.fail(format!("sample rate {d} outside 1..={n}"));
            }
            let groups = n / d;
            let geo = Geometry::new(groups, k + ceil_log2(d), b).map_err(|e| Error::Parse {
                offset: bpos as u64,
                reason: e.to_string(),
            })?;
            let levels = read_levels(&mut r, &geo)?;
            let base = r.packed(n - groups, k, "base array")?;
            AnyStructure::Sampled(SampledFenwick::from_parts(
                n,
                k,
                d,
                LayeredFenwick::from_parts(geo, levels),
                base,
            ))
        }
        StructureKind::Packed => {
            let ppos = r.pos;
            let delta = r.u16("delta width")? as u32;
            let reparam = |e: Error| Error::Parse { offset: ppos as u64, reason: e.to_string() };
            let params = PackedParams::derive(n, k, delta).map_err(reparam)?;
            let groups = n / params.d;
            let geo =
                Geometry::new(groups, k + ceil_log2(params.d), params.b).map_err(reparam)?;
            let entries = read_levels(&mut r, &geo)?;
            let bm1 = params.b - 1;
            let mut pending = Vec::new();
            for (j, lv) in geo.levels().iter().enumerate() {
                pending
                    .push(r.words(lv.size.div_ceil(bm1), &format!("pending words, level {}", j + 1))?);
            }
            let cwidth = ceil_log2(bm1).max(1);
            let mut cursors = Vec::new();
            for (j, lv) in geo.levels().iter().enumerate() {
                cursors.push(r.packed(
                    lv.size.div_ceil(bm1),
                    cwidth,
                    &format!("flush cursors, level {}", j + 1),
                )?);
            }
            let per_word = 64 / k;
            let base_words =
                r.words((n - groups).div_ceil(per_word as u64), "base array")?;
            AnyStructure::Packed(
                PackedFenwick::from_parts(params, n, k, entries, pending, cursors, base_words)
                    .map_err(reparam)?,
            )
        }
    };
    r.finish()?;
    Ok(out)
}

fn read_geometry(r: &mut Reader, n: u64, k: u32) -> Result<Geometry> {
    let bpos = r.pos;
    let b = r.u64("branching factor")?;
    Geometry::new(n, k, b).map_err(|e| Error::Parse { offset: bpos as u64, reason: e.to_string() })
}

fn read_levels(r: &mut Reader, geo: &Geometry) -> Result<Vec<PackedIntArray>> {
    let mut levels = Vec::with_capacity(geo.levels().len());
    for (j, lv) in geo.levels().iter().enumerate() {
        levels.push(r.packed(lv.size, lv.width, &format!("entries, level {}", j + 1))?);
    }
    Ok(levels)
}

pub fn write_structure_file(path: &Path, s: &AnyStructure) -> Result<()> {
    Ok(fs::write(path, encode_structure(s))?)
}

pub fn read_structure_file(path: &Path) -> Result<AnyStructure> {
    decode_structure(&fs::read(path)?)
}
