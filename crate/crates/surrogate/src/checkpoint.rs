//! Model checkpoint file: architecture echo plus named parameter tensors.
//!
//! Little-endian layout: magic `OPC1`, format version u32, spec blob
//! (architecture tag, bundle length, widths, decoder, flags, mass epsilon,
//! grid binding, arch-specific fields), tensor count, then per tensor a
//! name, shape and f32 data, and a trailing CRC32 over everything after
//! the magic. Loading rejects mismatched specs, names and shapes.

use crate::error::{ModelError, Result};
use crate::model::SurrogateModel;
use crate::param::HasParams;
use crate::spec::{AblationFlags, ArchSpec, ArchTag, DecoderSpec, DrnSpec, ModelSpec, UfnoSpec, UnetSpec};
use std::io::{Read, Write};
use std::path::Path;

pub const CKPT_MAGIC: [u8; 4] = *b"OPC1";
pub const CKPT_VERSION: u32 = 1;

fn crc32(bytes: &[u8]) -> u32 {
    // same IEEE polynomial as the record format
    oilpore_data_crc(bytes)
}

// small local copy so this crate does not depend on the data crate
fn oilpore_data_crc(bytes: &[u8]) -> u32 {
    static TABLE: std::sync::OnceLock<[u32; 256]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut table = [0u32; 256];
        for (i, entry) in table.iter_mut().enumerate() {
            let mut crc = i as u32;
            for _ in 0..8 {
                crc = if crc & 1 != 0 { 0xEDB8_8320 ^ (crc >> 1) } else { crc >> 1 };
            }
            *entry = crc;
        }
        table
    });
    let mut crc = 0xFFFF_FFFFu32;
    for byte in bytes {
        crc = table[((crc ^ *byte as u32) & 0xFF) as usize] ^ (crc >> 8);
    }
    crc ^ 0xFFFF_FFFF
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_str(out: &mut Vec<u8>, s: &str) {
    push_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(ModelError::Checkpoint("truncated checkpoint".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| ModelError::Checkpoint("non-utf8 tensor name".into()))
    }
}

fn encode_spec(spec: &ModelSpec, grid_h: usize, grid_w: usize, out: &mut Vec<u8>) {
    out.push(match spec.tag() {
        ArchTag::Drn => 0,
        ArchTag::Unet => 1,
        ArchTag::Ufno => 2,
        ArchTag::UfnoAlt => 3,
    });
    push_u32(out, spec.k as u32);
    push_u32(out, spec.hidden as u32);
    push_u32(out, grid_h as u32);
    push_u32(out, grid_w as u32);
    push_u32(out, spec.decoder.temporal_kernel as u32);
    push_u32(out, spec.decoder.features as u32);
    let flags = (spec.flags.enforce_periodicity as u8)
        | ((spec.flags.enforce_mass as u8) << 1)
        | ((spec.flags.enforce_geometry_bc as u8) << 2);
    out.push(flags);
    push_f64(out, spec.mass_epsilon);
    match &spec.arch {
        ArchSpec::Drn(d) => {
            push_u32(out, d.blocks as u32);
            push_u32(out, d.kernel as u32);
        }
        ArchSpec::Unet(u) => {
            push_u32(out, u.multipliers.len() as u32);
            for m in &u.multipliers {
                push_u32(out, *m as u32);
            }
            push_u32(out, u.depth as u32);
            push_u32(out, u.norm_groups as u32);
        }
        ArchSpec::Ufno(u) => {
            push_u32(out, u.layers as u32);
            push_u32(out, u.modes as u32);
            push_u32(out, u.unet_multipliers.len() as u32);
            for m in &u.unet_multipliers {
                push_u32(out, *m as u32);
            }
        }
    }
}

fn decode_spec(r: &mut Reader) -> Result<(ModelSpec, usize, usize)> {
    let tag = match r.take(1)?[0] {
        0 => ArchTag::Drn,
        1 => ArchTag::Unet,
        2 => ArchTag::Ufno,
        3 => ArchTag::UfnoAlt,
        other => {
            return Err(ModelError::Checkpoint(format!("unknown arch tag {other}")))
        }
    };
    let k = r.u32()? as usize;
    let hidden = r.u32()? as usize;
    let grid_h = r.u32()? as usize;
    let grid_w = r.u32()? as usize;
    let temporal_kernel = r.u32()? as usize;
    let features = r.u32()? as usize;
    let flag_bits = r.take(1)?[0];
    let flags = AblationFlags {
        enforce_periodicity: flag_bits & 1 != 0,
        enforce_mass: flag_bits & 2 != 0,
        enforce_geometry_bc: flag_bits & 4 != 0,
    };
    let mass_epsilon = r.f64()?;
    let arch = match tag {
        ArchTag::Drn => ArchSpec::Drn(DrnSpec {
            blocks: r.u32()? as usize,
            kernel: r.u32()? as usize,
        }),
        ArchTag::Unet => {
            let n = r.u32()? as usize;
            let mut multipliers = Vec::with_capacity(n);
            for _ in 0..n {
                multipliers.push(r.u32()? as usize);
            }
            ArchSpec::Unet(UnetSpec {
                multipliers,
                depth: r.u32()? as usize,
                norm_groups: r.u32()? as usize,
            })
        }
        ArchTag::Ufno | ArchTag::UfnoAlt => {
            let layers = r.u32()? as usize;
            let modes = r.u32()? as usize;
            let n = r.u32()? as usize;
            let mut unet_multipliers = Vec::with_capacity(n);
            for _ in 0..n {
                unet_multipliers.push(r.u32()? as usize);
            }
            ArchSpec::Ufno(UfnoSpec {
                layers,
                modes,
                unet_multipliers,
                alternate: tag == ArchTag::UfnoAlt,
            })
        }
    };
    let spec = ModelSpec {
        arch,
        k,
        hidden,
        decoder: DecoderSpec {
            temporal_kernel,
            features,
        },
        flags,
        mass_epsilon,
    };
    Ok((spec, grid_h, grid_w))
}

pub fn encode_checkpoint(model: &SurrogateModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CKPT_MAGIC);
    push_u32(&mut out, CKPT_VERSION);
    encode_spec(&model.spec, model.grid_h, model.grid_w, &mut out);
    let mut count = 0u32;
    model.for_each_param(&mut |_| count += 1);
    push_u32(&mut out, count);
    model.for_each_param(&mut |p| {
        push_str(&mut out, &p.name);
        push_u32(&mut out, p.shape.len() as u32);
        for dim in &p.shape {
            push_u32(&mut out, *dim as u32);
        }
        for value in &p.w {
            out.extend_from_slice(&value.to_le_bytes());
        }
    });
    let checksum = crc32(&out[4..]);
    out.extend_from_slice(&checksum.to_le_bytes());
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<SurrogateModel> {
    if bytes.len() < 12 {
        return Err(ModelError::Checkpoint("truncated checkpoint".into()));
    }
    if bytes[..4] != CKPT_MAGIC {
        return Err(ModelError::Checkpoint(format!(
            "bad magic {:02x?}",
            &bytes[..4]
        )));
    }
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    let payload = &bytes[4..bytes.len() - 4];
    let computed = crc32(payload);
    if stored != computed {
        return Err(ModelError::Checkpoint(format!(
            "checksum mismatch: stored {stored:08x}, computed {computed:08x}"
        )));
    }
    let mut r = Reader { bytes: payload, pos: 0 };
    let version = r.u32()?;
    if version != CKPT_VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let (spec, grid_h, grid_w) = decode_spec(&mut r)?;
    let mut model = SurrogateModel::build(&spec, grid_h, grid_w, 0)?;
    let count = r.u32()? as usize;

    // collect raw tensors, then fill the freshly built parameter set
    let mut loaded: Vec<(String, Vec<usize>, Vec<f32>)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name = r.string()?;
        let ndim = r.u32()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let data_bytes = r.take(len * 4)?;
        let mut data = Vec::with_capacity(len);
        for chunk in data_bytes.chunks_exact(4) {
            data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        loaded.push((name, shape, data));
    }
    if r.pos != payload.len() {
        return Err(ModelError::Checkpoint("trailing bytes".into()));
    }

    let mut idx = 0usize;
    let mut error: Option<ModelError> = None;
    model.for_each_param_mut(&mut |p| {
        if error.is_some() {
            return;
        }
        if idx >= loaded.len() {
            error = Some(ModelError::Checkpoint("missing tensors".into()));
            return;
        }
        let (name, shape, data) = &loaded[idx];
        if *name != p.name || *shape != p.shape {
            error = Some(ModelError::Checkpoint(format!(
                "tensor mismatch: file has {name} {shape:?}, model expects {} {:?}",
                p.name, p.shape
            )));
            return;
        }
        p.w.copy_from_slice(data);
        idx += 1;
    });
    if let Some(err) = error {
        return Err(err);
    }
    if idx != loaded.len() {
        return Err(ModelError::Checkpoint("extra tensors in file".into()));
    }
    Ok(model)
}

/// Load a checkpoint, requiring it to match an expected spec.
pub fn decode_checkpoint_expecting(bytes: &[u8], expected: &ModelSpec) -> Result<SurrogateModel> {
    let model = decode_checkpoint(bytes)?;
    if model.spec != *expected {
        return Err(ModelError::Checkpoint(
            "checkpoint spec does not match the expected configuration".into(),
        ));
    }
    Ok(model)
}

pub fn save_checkpoint(model: &SurrogateModel, path: &Path) -> Result<()> {
    let bytes = encode_checkpoint(model);
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&bytes))
        .map_err(|e| ModelError::Checkpoint(format!("write {}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<SurrogateModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| ModelError::Checkpoint(format!("read {}: {e}", path.display())))?;
    decode_checkpoint(&bytes)
}
