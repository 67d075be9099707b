//! Binary trajectory record format.
//!
//! Little-endian layout:
//!
//! ```text
//! magic   "TPF1"                      4 bytes
//! version u32                         (currently 1)
//! H, W, T u32
//! dt      f64
//! stride  u32
//! pore_radius f64
//! charge  f64
//! obstacle count u32, then per obstacle cx, cy, r as f64
//! mask    H*W u8 (1 = fluid), row-major
//! frames  T*H*W f32, row-major, time-major; solid cells are 0
//! crc32   u32 over every byte after the magic
//! ```
//!
//! The grid is the standard tube of width 3; the geometry mask is
//! reconstructed from the scenario header on read and must agree with the
//! stored mask bytes.

use crate::error::{DataError, Result};
use oilpore_core::{
    build_geometry_mask, CellLabel, GeometryMask, GridSpec, ObstacleSpec, ScenarioParams,
};
use oilpore_solver::SimulationRun;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"TPF1";
pub const FORMAT_VERSION: u32 = 1;

/// Subsampled phase-field trajectory plus the scenario that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRecord {
    pub scenario: ScenarioParams,
    pub mask: GeometryMask,
    /// Flattened frames, time-major: `frames[t * h * w + j * w + i]`.
    pub frames: Vec<f32>,
    pub t_len: usize,
    pub dt: f64,
    pub stride: usize,
    /// False when the producing run diverged (not persisted; manifest
    /// metadata. Generation replaces invalid runs, so written records are
    /// always valid).
    pub valid: bool,
}

impl SimulationRecord {
    pub fn from_run(run: SimulationRun) -> Self {
        let grid = run.mask.grid();
        let mut frames = Vec::with_capacity(run.frames.len() * grid.len());
        for frame in &run.frames {
            frames.extend_from_slice(frame);
        }
        Self {
            scenario: run.scenario,
            mask: run.mask,
            t_len: run.frames.len(),
            frames,
            dt: run.dt,
            stride: run.stride,
            valid: run.valid,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.mask.grid()
    }

    pub fn width(&self) -> usize {
        self.grid().width()
    }

    pub fn height(&self) -> usize {
        self.grid().height()
    }

    #[inline]
    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.grid().len();
        &self.frames[t * n..(t + 1) * n]
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.len() != self.t_len * self.grid().len() {
            return Err(DataError::Format(format!(
                "frame buffer length {} does not match {} frames of {} cells",
                self.frames.len(),
                self.t_len,
                self.grid().len()
            )));
        }
        for (idx, value) in self.frames.iter().enumerate() {
            if !value.is_finite() || !(-1.05..=1.05).contains(&(*value as f64)) {
                return Err(DataError::Format(format!(
                    "frame value {value} at {idx} outside [-1.05, 1.05]"
                )));
            }
        }
        Ok(())
    }
}

// -- CRC32 (IEEE), table-driven ---------------------------------------------

fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 != 0 { 0xEDB8_8320 ^ (crc >> 1) } else { crc >> 1 };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

pub fn crc32(bytes: &[u8]) -> u32 {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(crc32_table);
    let mut crc = 0xFFFF_FFFFu32;
    for byte in bytes {
        crc = table[((crc ^ *byte as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    crc ^ 0xFFFF_FFFF
}

// -- encoding -----------------------------------------------------------------

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(DataError::Format("truncated file".into()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn encode_record(record: &SimulationRecord) -> Result<Vec<u8>> {
    record.validate()?;
    let grid = record.grid();
    let mut out = Vec::with_capacity(64 + grid.len() * (1 + 4 * record.t_len));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(record.height() as u32).to_le_bytes());
    out.extend_from_slice(&(record.width() as u32).to_le_bytes());
    out.extend_from_slice(&(record.t_len as u32).to_le_bytes());
    out.extend_from_slice(&record.dt.to_le_bytes());
    out.extend_from_slice(&(record.stride as u32).to_le_bytes());
    out.extend_from_slice(&record.scenario.pore_radius.to_le_bytes());
    out.extend_from_slice(&record.scenario.surface_charge.to_le_bytes());
    out.extend_from_slice(&(record.scenario.obstacles.len() as u32).to_le_bytes());
    for obstacle in &record.scenario.obstacles {
        out.extend_from_slice(&obstacle.center_x.to_le_bytes());
        out.extend_from_slice(&obstacle.center_y.to_le_bytes());
        out.extend_from_slice(&obstacle.radius.to_le_bytes());
    }
    for label in record.mask.labels() {
        out.push(if *label == CellLabel::Fluid { 1 } else { 0 });
    }
    for value in &record.frames {
        out.extend_from_slice(&value.to_le_bytes());
    }
    let checksum = crc32(&out[4..]);
    out.extend_from_slice(&checksum.to_le_bytes());
    Ok(out)
}

/// Decode a record; the scenario seed is not persisted (it lives in the
/// dataset manifest) and is restored as 0.
pub fn decode_record(bytes: &[u8]) -> Result<SimulationRecord> {
    if bytes.len() < 8 {
        return Err(DataError::Format("truncated file".into()));
    }
    if bytes[..4] != MAGIC {
        return Err(DataError::Format(format!(
            "bad magic {:02x?}, expected {:02x?}",
            &bytes[..4],
            MAGIC
        )));
    }
    let payload = &bytes[4..bytes.len() - 4];
    let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let actual_crc = crc32(payload);
    if stored_crc != actual_crc {
        return Err(DataError::Format(format!(
            "checksum mismatch: stored {stored_crc:08x}, computed {actual_crc:08x}"
        )));
    }

    let mut cur = Cursor { bytes: payload, pos: 0 };
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(DataError::Format(format!(
            "unsupported version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let h = cur.u32()? as usize;
    let w = cur.u32()? as usize;
    let t_len = cur.u32()? as usize;
    let dt = cur.f64()?;
    let stride = cur.u32()? as usize;
    let pore_radius = cur.f64()?;
    let surface_charge = cur.f64()?;
    let n_obstacles = cur.u32()? as usize;
    if n_obstacles > 2 {
        return Err(DataError::Format(format!("{n_obstacles} obstacles > 2")));
    }
    let mut obstacles = Vec::with_capacity(n_obstacles);
    for _ in 0..n_obstacles {
        obstacles.push(ObstacleSpec {
            center_x: cur.f64()?,
            center_y: cur.f64()?,
            radius: cur.f64()?,
        });
    }
    let scenario = ScenarioParams {
        pore_radius,
        surface_charge,
        obstacles,
        rng_seed: 0,
    };

    let grid = GridSpec::standard(w, h)?;
    let mask_bytes = cur.take(w * h)?;
    let mask = build_geometry_mask(&scenario, grid)?;
    for (idx, byte) in mask_bytes.iter().enumerate() {
        let stored_fluid = *byte == 1;
        if stored_fluid != mask.is_fluid_idx(idx) {
            return Err(DataError::Format(format!(
                "stored mask disagrees with the scenario geometry at cell {idx}"
            )));
        }
    }

    let frame_bytes = cur.take(t_len * w * h * 4)?;
    if cur.pos != payload.len() {
        return Err(DataError::Format("trailing bytes after frames".into()));
    }
    let mut frames = Vec::with_capacity(t_len * w * h);
    for chunk in frame_bytes.chunks_exact(4) {
        frames.push(f32::from_le_bytes(chunk.try_into().unwrap()));
    }

    let record = SimulationRecord {
        scenario,
        mask,
        frames,
        t_len,
        dt,
        stride,
        valid: true,
    };
    record.validate()?;
    Ok(record)
}

pub fn write_record(record: &SimulationRecord, path: &Path) -> Result<()> {
    let bytes = encode_record(record)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read_record(path: &Path) -> Result<SimulationRecord> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_record(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use oilpore_core::SplitMix64;

    pub(crate) fn random_record(seed: u64, w: usize, h: usize, t_len: usize) -> SimulationRecord {
        let mut rng = SplitMix64::new(seed);
        let grid = GridSpec::standard(w, h).unwrap();
        let obstacles = if rng.next_f64() < 0.5 {
            vec![ObstacleSpec {
                center_x: rng.range_f64(0.0, 3.0),
                center_y: rng.range_f64(0.55, 0.95),
                radius: rng.range_f64(0.05, 0.15),
            }]
        } else {
            Vec::new()
        };
        let scenario = ScenarioParams {
            pore_radius: rng.range_f64(0.1, 0.25),
            surface_charge: rng.range_f64(-10.0, -1.0),
            obstacles,
            rng_seed: 0,
        };
        let mask = build_geometry_mask(&scenario, grid).unwrap();
        let mut frames = Vec::with_capacity(t_len * grid.len());
        for _ in 0..t_len {
            for idx in 0..grid.len() {
                let value = if mask.is_fluid_idx(idx) {
                    rng.range_f64(-1.0, 1.0) as f32
                } else {
                    0.0
                };
                frames.push(value);
            }
        }
        SimulationRecord {
            scenario,
            mask,
            frames,
            t_len,
            dt: 0.02,
            stride: 5,
            valid: true,
        }
    }

    #[test]
    fn roundtrip_is_bit_identical() {
        for seed in 0..8 {
            let record = random_record(seed, 24, 16, 6);
            let bytes = encode_record(&record).unwrap();
            let back = decode_record(&bytes).unwrap();
            assert_eq!(back.frames, record.frames);
            assert_eq!(back.scenario.pore_radius, record.scenario.pore_radius);
            assert_eq!(back.scenario.obstacles, record.scenario.obstacles);
            assert_eq!(back.mask.labels(), record.mask.labels());
            // file-level: re-encoding reproduces the same bytes
            assert_eq!(encode_record(&back).unwrap(), bytes);
        }
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let record = random_record(1, 24, 16, 3);
        let mut bytes = encode_record(&record).unwrap();
        bytes[0] ^= 0x55;
        match decode_record(&bytes) {
            Err(DataError::Format(msg)) => assert!(msg.contains("magic")),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn corrupted_payload_fails_checksum() {
        let record = random_record(2, 24, 16, 3);
        let mut bytes = encode_record(&record).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xFF;
        match decode_record(&bytes) {
            Err(DataError::Format(msg)) => {
                assert!(msg.contains("checksum") || msg.contains("mask"), "{msg}")
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_rejected() {
        let record = random_record(3, 24, 16, 3);
        let bytes = encode_record(&record).unwrap();
        let truncated = &bytes[..bytes.len() / 2];
        assert!(decode_record(truncated).is_err());
    }

    #[test]
    fn payload_size_matches_arithmetic() {
        // 500 frames of 64x96 single-precision values: 12,288,000 bytes of
        // frame payload plus header, mask and checksum
        let grid = GridSpec::standard(96, 64).unwrap();
        let scenario = ScenarioParams {
            pore_radius: 0.2,
            surface_charge: -5.0,
            obstacles: Vec::new(),
            rng_seed: 0,
        };
        let mask = build_geometry_mask(&scenario, grid).unwrap();
        let t_len = 500;
        let record = SimulationRecord {
            scenario,
            frames: vec![0.0; t_len * grid.len()],
            mask,
            t_len,
            dt: 0.02,
            stride: 5,
            valid: true,
        };
        let bytes = encode_record(&record).unwrap();
        let frame_payload = 500 * 64 * 96 * 4;
        assert_eq!(frame_payload, 12_288_000);
        let header = 4 + 4 + 3 * 4 + 8 + 4 + 8 + 8 + 4; // magic..obstacle count
        let expected = header + grid.len() + frame_payload + 4;
        assert_eq!(bytes.len(), expected);
    }

    #[test]
    fn crc32_matches_reference_vector() {
        // standard IEEE CRC-32 check value
        assert_eq!(crc32(b"123456789"), 0xCBF4_3926);
    }
}
