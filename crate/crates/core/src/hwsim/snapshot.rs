//! `TLSM` machine snapshots.
//!
//! Layout, little-endian: magic `TLSM`, version u32, L-P mode u32
//! (0 learn, 1 process), cycle count u64, `R` u32, six (total, integer)
//! bit pairs of the stage formats as u32, followed by a complete `TLDB`
//! anchor bank holding the dequantized block memories.

use std::io::{Read, Write};
use std::sync::Arc;

use super::{LpMode, SimMachine};
use crate::error::{Error, Result};
use crate::fixedpoint::{QFormat, ReciprocalLut, StageFormats};
use crate::model::{AnchorBank, TildaConfig};

pub const MAGIC: &[u8; 4] = b"TLSM";
pub const VERSION: u32 = 1;

impl SimMachine {
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        if !self.is_idle() {
            return Err(Error::Protocol("cannot snapshot a machine mid-transaction".into()));
        }
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        let mode: u32 = match self.lp_mode {
            LpMode::Learn => 0,
            LpMode::Process => 1,
        };
        buf.extend_from_slice(&mode.to_le_bytes());
        buf.extend_from_slice(&self.cycle_count.to_le_bytes());
        buf.extend_from_slice(&(self.config.versions as u32).to_le_bytes());
        for f in self.formats.as_table() {
            buf.extend_from_slice(&f.total_bits().to_le_bytes());
            buf.extend_from_slice(&f.int_bits().to_le_bytes());
        }
        w.write_all(&buf)?;
        self.to_anchor_bank().write_to(w)
    }

    /// Restore a machine; the reciprocal table is not part of the snapshot.
    pub fn read_snapshot<R: Read>(mut r: R, lut: Arc<ReciprocalLut>) -> Result<Self> {
        let mut head = [0u8; 24 + 48];
        r.read_exact(&mut head)?;
        if &head[..4] != MAGIC {
            return Err(Error::format("machine snapshot", "bad magic"));
        }
        let u32_at = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
        if u32_at(4) != VERSION {
            return Err(Error::format("machine snapshot", format!("unsupported version {}", u32_at(4))));
        }
        let mode = match u32_at(8) {
            0 => LpMode::Learn,
            1 => LpMode::Process,
            other => return Err(Error::format("machine snapshot", format!("unknown L-P mode {other}"))),
        };
        let cycle_count = u64::from_le_bytes(head[12..20].try_into().unwrap());
        let versions = u32_at(20) as usize;
        let mut table = [StageFormats::PAPER.feature_anchor; 6];
        for (i, slot) in table.iter_mut().enumerate() {
            *slot = QFormat::new(u32_at(24 + 8 * i), u32_at(28 + 8 * i))
                .map_err(|e| Error::format("machine snapshot", e.to_string()))?;
        }
        let bank = AnchorBank::read_from(r)?;
        let b = bank.config();
        let config = TildaConfig::new(b.dim, b.parts, b.classes, b.anchors, versions)
            .map_err(|e| Error::format("machine snapshot", e.to_string()))?;
        let mut machine = SimMachine::new(config, StageFormats::from_table(table), lut)?;
        machine.load_anchor_bank(&bank)?;
        machine.lp_mode = mode;
        machine.cycle_count = cycle_count;
        Ok(machine)
    }
}
