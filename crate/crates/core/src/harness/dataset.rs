//! Labeled feature-vector datasets.
//!
//! Binary layout (`TLDS`, little-endian): magic, version u32, `T` u32,
//! `C` u32, record count u32, then per record: label u32, group u32 and
//! `T` f32 values.
//!
//! CSV layout: one record per line, `label,group,v0,...,v(T-1)`, no header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::FeatureVector;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRecord {
    pub label: u32,
    pub group: u32,
    pub values: Vec<f32>,
}

impl DatasetRecord {
    pub fn to_feature_vector(&self) -> FeatureVector {
        FeatureVector::labeled(
            self.values.iter().map(|&v| v as f64).collect(),
            self.label as usize,
            self.group as u64,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetFile {
    pub dim: usize,
    pub classes: usize,
    pub records: Vec<DatasetRecord>,
}

impl DatasetFile {
    pub const MAGIC: &'static [u8; 4] = b"TLDS";
    pub const VERSION: u32 = 1;

    pub fn new(dim: usize, classes: usize, records: Vec<DatasetRecord>) -> Result<Self> {
        let ds = DatasetFile { dim, classes, records };
        ds.validate()?;
        Ok(ds)
    }

    /// Check record widths, label range, and that each group forms one
    /// contiguous run with a single label.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.classes == 0 {
            return Err(Error::format("dataset", "T and C must be at least 1"));
        }
        let mut seen = std::collections::HashSet::new();
        let mut prev: Option<&DatasetRecord> = None;
        for (i, r) in self.records.iter().enumerate() {
            if r.values.len() != self.dim {
                return Err(Error::format("dataset", format!("record {i} has {} values, expected {}", r.values.len(), self.dim)));
            }
            if r.label as usize >= self.classes {
                return Err(Error::format("dataset", format!("record {i} has label {} >= C={}", r.label, self.classes)));
            }
            match prev {
                Some(p) if p.group == r.group => {
                    if p.label != r.label {
                        return Err(Error::format("dataset", format!("group {} mixes labels", r.group)));
                    }
                }
                _ => {
                    if !seen.insert(r.group) {
                        return Err(Error::format("dataset", format!("group {} is not contiguous", r.group)));
                    }
                }
            }
            prev = Some(r);
        }
        Ok(())
    }

    /// Contiguous runs of records sharing a group id.
    pub fn groups(&self) -> Vec<&[DatasetRecord]> {
        self.records
            .chunk_by(|a, b| a.group == b.group)
            .collect()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(Self::MAGIC)?;
        for v in [Self::VERSION, self.dim as u32, self.classes as u32, self.records.len() as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for r in &self.records {
            w.write_all(&r.label.to_le_bytes())?;
            w.write_all(&r.group.to_le_bytes())?;
            for v in &r.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut head = [0u8; 20];
        r.read_exact(&mut head)?;
        if &head[..4] != Self::MAGIC {
            return Err(Error::format("dataset", "bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(head[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        if word(0) != Self::VERSION {
            return Err(Error::format("dataset", format!("unsupported version {}", word(0))));
        }
        let (dim, classes, count) = (word(1) as usize, word(2) as usize, word(3) as usize);
        let mut buf = vec![0u8; 8 + 4 * dim];
        let mut records = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            r.read_exact(&mut buf)?;
            records.push(DatasetRecord {
                label: u32::from_le_bytes(buf[0..4].try_into().unwrap()),
                group: u32::from_le_bytes(buf[4..8].try_into().unwrap()),
                values: buf[8..]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            });
        }
        Self::new(dim, classes, records)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        for r in &self.records {
            let mut row = vec![r.label.to_string(), r.group.to_string()];
            row.extend(r.values.iter().map(|v| v.to_string()));
            out.write_record(&row).map_err(|e| Error::format("dataset", e.to_string()))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Read CSV records. `classes` defaults to one past the largest label.
    pub fn read_csv<R: Read>(r: R, classes: Option<usize>) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(r);
        let mut records = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::format("dataset", e.to_string()))?;
            let bad = |what: &str| Error::format("dataset", format!("line {}: bad {what}", i + 1));
            if row.len() < 3 {
                return Err(bad("record (need label,group,values...)"));
            }
            records.push(DatasetRecord {
                label: row[0].parse().map_err(|_| bad("label"))?,
                group: row[1].parse().map_err(|_| bad("group"))?,
                values: row
                    .iter()
                    .skip(2)
                    .map(|v| v.parse::<f32>().map_err(|_| bad("value")))
                    .collect::<Result<_>>()?,
            });
        }
        let dim = records.first().map_or(0, |r| r.values.len());
        let classes = classes.unwrap_or_else(|| records.iter().map(|r| r.label as usize + 1).max().unwrap_or(0));
        Self::new(dim, classes, records)
    }

    /// Load either format, picking binary when the file starts with the magic.
    pub fn load(path: impl AsRef<Path>, classes_hint: Option<usize>) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(Self::MAGIC) {
            Self::read_from(&bytes[..])
        } else {
            Self::read_csv(&bytes[..], classes_hint)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(label: u32, group: u32, values: &[f32]) -> DatasetRecord {
        DatasetRecord {
            label,
            group,
            values: values.to_vec(),
        }
    }

    fn sample() -> DatasetFile {
        DatasetFile::new(
            2,
            3,
            vec![rec(0, 0, &[0.5, -1.0]), rec(2, 1, &[1.25, 3.0]), rec(2, 1, &[1.5, 2.75]), rec(1, 5, &[0.0, 1e-3])],
        )
        .unwrap()
    }

    #[test]
    fn binary_layout() {
        let ds = sample();
        let mut bytes = Vec::new();
        ds.write_to(&mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"TLDS");
        assert_eq!(bytes.len(), 20 + 4 * (8 + 8));
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 4);
        assert_eq!(f32::from_le_bytes(bytes[28..32].try_into().unwrap()), 0.5);
        let back = DatasetFile::read_from(&bytes[..]).unwrap();
        assert_eq!(back, ds);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(again, bytes);
    }

    #[test]
    fn csv_round_trip() {
        let ds = sample();
        let mut text = Vec::new();
        ds.write_csv(&mut text).unwrap();
        assert_eq!(String::from_utf8(text.clone()).unwrap().lines().next(), Some("0,0,0.5,-1"));
        assert_eq!(DatasetFile::read_csv(&text[..], Some(3)).unwrap(), ds);
        assert_eq!(DatasetFile::read_csv(&b"1, 4, 0.5, 2\n"[..], None).unwrap().classes, 2);
        assert!(DatasetFile::read_csv(&b"1,4\n"[..], None).is_err());
        assert!(DatasetFile::read_csv(&b"x,4,1\n"[..], None).is_err());
    }

    #[test]
    fn groups_are_contiguous_runs() {
        let ds = sample();
        let sizes: Vec<usize> = ds.groups().iter().map(|g| g.len()).collect();
        assert_eq!(sizes, vec![1, 2, 1]);
    }

    #[test]
    fn validation_failures() {
        assert!(DatasetFile::new(2, 3, vec![rec(3, 0, &[0.0, 0.0])]).is_err());
        assert!(DatasetFile::new(2, 3, vec![rec(0, 0, &[0.0])]).is_err());
        assert!(DatasetFile::new(1, 3, vec![rec(0, 0, &[0.0]), rec(1, 0, &[0.0])]).is_err());
        assert!(DatasetFile::new(1, 3, vec![rec(0, 0, &[0.0]), rec(0, 1, &[0.0]), rec(0, 0, &[0.0])]).is_err());
        assert!(DatasetFile::read_from(&b"TLDX\x01\0\0\0"[..]).is_err());
    }
}
