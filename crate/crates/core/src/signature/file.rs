//! Binary signature file format (little-endian):
//!
//! ```text
//! magic "URSG" | version u16 = 1 | preset u8 | K u16 | D u16 | threshold f32
//! K × f32 fractions | K × u8 flags | K×D × f32 features (row-major)
//! ```

use super::{LayoutPreset, OcclusionEncoding, Signature, SignatureError, PRESET_DIM};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"URSG";
const VERSION: u16 = 1;

fn io_err(path: &Path, source: std::io::Error) -> SignatureError {
    SignatureError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes a signature file atomically (write to a temp sibling, then rename)
/// so interrupted writers never leave partial files behind.
pub fn write_signature(sig: &Signature, path: &Path) -> Result<(), SignatureError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| SignatureError::File(format!("{} has no file name", path.display())))?;
    let tmp_path = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let file = fs::File::create(&tmp_path).map_err(|e| io_err(&tmp_path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e: std::io::Error| io_err(&tmp_path, e);
        w.write_all(MAGIC).map_err(io)?;
        w.write_u16::<LittleEndian>(VERSION).map_err(io)?;
        w.write_u8(sig.preset.code()).map_err(io)?;
        w.write_u16::<LittleEndian>(sig.patch_count as u16).map_err(io)?;
        w.write_u16::<LittleEndian>(sig.dim as u16).map_err(io)?;
        w.write_f32::<LittleEndian>(sig.encoding.threshold as f32).map_err(io)?;
        for &f in &sig.encoding.fractions {
            w.write_f32::<LittleEndian>(f as f32).map_err(io)?;
        }
        for &flag in &sig.encoding.flags {
            w.write_u8(u8::from(flag)).map_err(io)?;
        }
        for &v in &sig.features {
            w.write_f32::<LittleEndian>(v).map_err(io)?;
        }
        w.flush().map_err(io)?;
    }
    fs::rename(&tmp_path, path).map_err(|e| io_err(path, e))
}

/// Reads and validates a signature file.
pub fn read_signature(path: &Path) -> Result<Signature, SignatureError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let io = |e: std::io::Error| io_err(path, e);
    let fail = |message: String| SignatureError::File(format!("{}: {message}", path.display()));

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(fail("bad magic (not a signature file)".into()));
    }
    let version = r.read_u16::<LittleEndian>().map_err(io)?;
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    let preset_code = r.read_u8().map_err(io)?;
    let preset = LayoutPreset::from_code(preset_code)
        .ok_or_else(|| fail(format!("unknown preset code {preset_code}")))?;
    let k = r.read_u16::<LittleEndian>().map_err(io)? as usize;
    let dim = r.read_u16::<LittleEndian>().map_err(io)? as usize;
    match preset {
        LayoutPreset::Prfs64 if k != 64 || dim != PRESET_DIM => {
            return Err(fail(format!("preset expects 64x{PRESET_DIM}, file has {k}x{dim}")));
        }
        LayoutPreset::Dprfs8 if k != 8 || dim != PRESET_DIM => {
            return Err(fail(format!("preset expects 8x{PRESET_DIM}, file has {k}x{dim}")));
        }
        _ => {}
    }
    if k == 0 || dim == 0 {
        return Err(fail("empty patch grid".into()));
    }
    let threshold = r.read_f32::<LittleEndian>().map_err(io)? as f64;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(fail(format!("threshold {threshold} outside (0, 1]")));
    }
    let mut fractions = Vec::with_capacity(k);
    for _ in 0..k {
        let f = r.read_f32::<LittleEndian>().map_err(io)? as f64;
        if !(0.0..=1.0).contains(&f) {
            return Err(fail(format!("fraction {f} outside [0, 1]")));
        }
        fractions.push(f);
    }
    let mut flags = Vec::with_capacity(k);
    for i in 0..k {
        let b = r.read_u8().map_err(io)?;
        let flag = match b {
            0 => false,
            1 => true,
            _ => return Err(fail(format!("flag byte {b} at patch {i}"))),
        };
        if flag != (fractions[i] >= threshold) {
            return Err(fail(format!(
                "flag/fraction inconsistency at patch {i} (fraction {}, threshold {threshold})",
                fractions[i]
            )));
        }
        flags.push(flag);
    }
    let mut features = vec![0.0f32; k * dim];
    for v in &mut features {
        *v = r.read_f32::<LittleEndian>().map_err(io)?;
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(io)? != 0 {
        return Err(fail("trailing bytes after feature block".into()));
    }
    Ok(Signature {
        preset,
        patch_count: k,
        dim,
        features,
        encoding: OcclusionEncoding {
            fractions,
            flags,
            threshold,
        },
        subject_hint: None,
    })
}
