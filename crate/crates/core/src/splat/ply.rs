//! Reader and writer for the 3DGS subset of the PLY format.

use std::fs;
use std::io::Read;
use std::path::Path;

use flate2::read::GzDecoder;
use log::warn;

use super::{GaussianKernel, SplatModel};
use crate::error::{GmeaError, Result};
use crate::scalar::Real;

const REQUIRED: [&str; 14] = [
    "x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity", "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
];

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    /// Little-endian binary at the model's native scalar width.
    Binary,
    /// Little-endian binary with `float` properties regardless of scalar width.
    BinaryF32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            other => return Err(GmeaError::Format(format!("unknown property type `{other}`"))),
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Clone, Debug)]
enum Property {
    Scalar { name: String, ty: ScalarType },
    List { name: String, count: ScalarType, item: ScalarType },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    source_tag: Option<String>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut next_line = || -> Result<&str> {
        let rest = &bytes[offset..];
        let end = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| GmeaError::Format("unterminated header".into()))?;
        offset += end + 1;
        std::str::from_utf8(&rest[..end])
            .map(|s| s.trim_end_matches('\r'))
            .map_err(|_| GmeaError::Format("header is not valid UTF-8".into()))
    };

    if next_line()?.trim() != "ply" {
        return Err(GmeaError::Format("missing `ply` magic".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    let mut source_tag = None;
    loop {
        let line = next_line()?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("format") => {
                format = Some(match tokens.next() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLe,
                    Some(other) => {
                        return Err(GmeaError::Format(format!("unsupported encoding `{other}`")))
                    }
                    None => return Err(GmeaError::Format("empty format line".into())),
                });
            }
            Some("comment") => {
                let rest = line.trim_start()["comment".len()..].trim_start();
                if let Some(tag) = rest.strip_prefix("source_tag ") {
                    source_tag = Some(tag.to_string());
                }
            }
            Some("obj_info") | None => {}
            Some("element") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| GmeaError::Format("element without name".into()))?;
                let count = tokens
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| GmeaError::Format(format!("bad count for element `{name}`")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| GmeaError::Format("property before element".into()))?;
                let toks: Vec<&str> = tokens.collect();
                let prop = match toks.as_slice() {
                    ["list", count, item, name] => Property::List {
                        name: name.to_string(),
                        count: ScalarType::parse(count)?,
                        item: ScalarType::parse(item)?,
                    },
                    [ty, name] => Property::Scalar {
                        name: name.to_string(),
                        ty: ScalarType::parse(ty)?,
                    },
                    _ => return Err(GmeaError::Format(format!("malformed property `{line}`"))),
                };
                element.properties.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(GmeaError::Format(format!("unexpected header keyword `{other}`"))),
        }
    }
    Ok(Header {
        format: format.ok_or_else(|| GmeaError::Format("missing format line".into()))?,
        elements,
        source_tag,
        body_offset: offset,
    })
}

/// Loads a splat model from an ASCII or little-endian binary PLY file,
/// optionally gzip-compressed.
pub fn load_ply<T: Real>(path: impl AsRef<Path>) -> Result<SplatModel<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let mut model = load_ply_from_bytes(&bytes)?;
    if model.source_tag.is_empty() {
        model.source_tag = path.display().to_string();
    }
    Ok(model)
}

pub fn load_ply_from_bytes<T: Real>(bytes: &[u8]) -> Result<SplatModel<T>> {
    if bytes.starts_with(&GZIP_MAGIC) {
        let mut inflated = Vec::new();
        GzDecoder::new(bytes).read_to_end(&mut inflated)?;
        return parse_ply(&inflated);
    }
    parse_ply(bytes)
}

fn parse_ply<T: Real>(bytes: &[u8]) -> Result<SplatModel<T>> {
    let header = parse_header(bytes)?;
    let vertex_pos = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| GmeaError::Format("no `vertex` element".into()))?;
    let vertex = &header.elements[vertex_pos];

    let mut slots = [usize::MAX; 14];
    for (slot, name) in slots.iter_mut().zip(REQUIRED) {
        *slot = vertex
            .properties
            .iter()
            .position(|p| p.name() == name)
            .ok_or_else(|| GmeaError::MissingProperty(name.to_string()))?;
        if matches!(vertex.properties[*slot], Property::List { .. }) {
            return Err(GmeaError::Format(format!("property `{name}` must be scalar")));
        }
    }
    if vertex.properties.iter().any(|p| p.name().starts_with("f_rest_")) {
        warn!("ignoring higher-order spherical harmonic coefficients (f_rest_*)");
    }

    let body = &bytes[header.body_offset..];
    let rows = match header.format {
        Format::Ascii => read_ascii_rows(body, &header.elements[..=vertex_pos])?,
        Format::BinaryLe => read_binary_rows(body, &header.elements[..=vertex_pos])?,
    };

    let mut kernels = Vec::with_capacity(rows.len());
    for row in rows {
        let v = |i: usize| T::lit(row[slots[i]]);
        let q = [v(10), v(11), v(12), v(13)];
        let norm = q.iter().map(|&c| c * c).sum::<T>().sqrt();
        if !(norm >= T::lit(1e-8)) {
            return Err(GmeaError::Format(format!(
                "degenerate rotation quaternion at vertex {}",
                kernels.len()
            )));
        }
        // already-unit quaternions are kept verbatim so binary round trips stay exact
        let rotation = if (norm - T::one()).abs() > T::lit(1e-6) { q.map(|c| c / norm) } else { q };
        kernels.push(GaussianKernel {
            position: [v(0), v(1), v(2)],
            dc_color: [v(3), v(4), v(5)],
            opacity_logit: v(6),
            log_scale: [v(7), v(8), v(9)],
            rotation,
        });
    }
    Ok(SplatModel {
        kernels,
        source_tag: header.source_tag.unwrap_or_default(),
    })
}

/// Reads every row of the elements up to and including the last one, returning
/// only the rows of the last element.
fn read_ascii_rows(body: &[u8], elements: &[Element]) -> Result<Vec<Vec<f64>>> {
    let text = std::str::from_utf8(body).map_err(|_| GmeaError::Format("non UTF-8 ascii body".into()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let (last, before) = elements.split_last().unwrap();
    for e in before {
        for _ in 0..e.count {
            lines.next();
        }
    }
    let mut rows = Vec::with_capacity(last.count);
    for _ in 0..last.count {
        let Some(line) = lines.next() else {
            return Err(GmeaError::Truncation {
                expected: last.count,
                found: rows.len(),
            });
        };
        let mut tokens = line.split_whitespace();
        let mut row = Vec::with_capacity(last.properties.len());
        for p in &last.properties {
            match p {
                Property::Scalar { name, .. } => {
                    let tok = tokens.next().ok_or(GmeaError::Truncation {
                        expected: last.count,
                        found: rows.len(),
                    })?;
                    row.push(tok.parse::<f64>().map_err(|_| {
                        GmeaError::Format(format!("bad value `{tok}` for property `{name}`"))
                    })?);
                }
                Property::List { .. } => {
                    let n: usize = tokens.next().and_then(|t| t.parse().ok()).unwrap_or(0);
                    for _ in 0..n {
                        tokens.next();
                    }
                    row.push(f64::NAN);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_binary_rows(body: &[u8], elements: &[Element]) -> Result<Vec<Vec<f64>>> {
    let mut cursor = 0usize;
    let (last, before) = elements.split_last().unwrap();
    let short = |found| GmeaError::Truncation {
        expected: last.count,
        found,
    };
    for e in before {
        for _ in 0..e.count {
            for p in &e.properties {
                cursor = skip_property(body, cursor, p).ok_or_else(|| short(0))?;
            }
        }
    }
    let mut rows = Vec::with_capacity(last.count);
    for _ in 0..last.count {
        let mut row = Vec::with_capacity(last.properties.len());
        for p in &last.properties {
            match p {
                Property::Scalar { ty, .. } => {
                    let end = cursor + ty.size();
                    if end > body.len() {
                        return Err(short(rows.len()));
                    }
                    row.push(ty.read_le(&body[cursor..end]));
                    cursor = end;
                }
                Property::List { .. } => {
                    cursor = skip_property(body, cursor, p).ok_or_else(|| short(rows.len()))?;
                    row.push(f64::NAN);
                }
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn skip_property(body: &[u8], cursor: usize, p: &Property) -> Option<usize> {
    match p {
        Property::Scalar { ty, .. } => {
            let end = cursor + ty.size();
            (end <= body.len()).then_some(end)
        }
        Property::List { count, item, .. } => {
            let end = cursor + count.size();
            if end > body.len() {
                return None;
            }
            let n = count.read_le(&body[cursor..end]) as usize;
            let end = end + n * item.size();
            (end <= body.len()).then_some(end)
        }
    }
}

/// Serializes a model into PLY bytes.
pub fn write_ply<T: Real>(model: &SplatModel<T>, encoding: PlyEncoding) -> Vec<u8> {
    let (format, ty) = match encoding {
        PlyEncoding::Ascii => ("ascii", T::PLY_TYPE),
        PlyEncoding::Binary => ("binary_little_endian", T::PLY_TYPE),
        PlyEncoding::BinaryF32 => ("binary_little_endian", "float"),
    };
    let mut out = Vec::new();
    let mut header = format!("ply\nformat {format} 1.0\n");
    if !model.source_tag.is_empty() {
        let tag = model.source_tag.replace(['\n', '\r'], " ");
        header.push_str(&format!("comment source_tag {tag}\n"));
    }
    header.push_str(&format!("element vertex {}\n", model.len()));
    for name in REQUIRED {
        header.push_str(&format!("property {ty} {name}\n"));
    }
    header.push_str("end_header\n");
    out.extend_from_slice(header.as_bytes());

    for k in &model.kernels {
        let values = [
            k.position[0],
            k.position[1],
            k.position[2],
            k.dc_color[0],
            k.dc_color[1],
            k.dc_color[2],
            k.opacity_logit,
            k.log_scale[0],
            k.log_scale[1],
            k.log_scale[2],
            k.rotation[0],
            k.rotation[1],
            k.rotation[2],
            k.rotation[3],
        ];
        match encoding {
            PlyEncoding::Ascii => {
                let line: Vec<String> = values.iter().map(|v| v.to_string()).collect();
                out.extend_from_slice(line.join(" ").as_bytes());
                out.push(b'\n');
            }
            PlyEncoding::Binary => values.iter().for_each(|v| v.write_le(&mut out)),
            PlyEncoding::BinaryF32 => values
                .iter()
                .for_each(|v| out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes())),
        }
    }
    out
}

/// Writes a lossless little-endian binary PLY.
pub fn save_ply<T: Real>(model: &SplatModel<T>, path: impl AsRef<Path>) -> Result<()> {
    save_ply_with(model, path, PlyEncoding::Binary)
}

pub fn save_ply_with<T: Real>(
    model: &SplatModel<T>,
    path: impl AsRef<Path>,
    encoding: PlyEncoding,
) -> Result<()> {
    fs::write(path, write_ply(model, encoding))?;
    Ok(())
}
