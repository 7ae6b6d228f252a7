//! Point cloud and mesh files: XYZ, PLY (ASCII and binary little-endian)
//! and OBJ.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    PlyAscii,
    PlyBinary,
}

impl CloudFormat {
    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::Xyz => "xyz",
            CloudFormat::PlyAscii | CloudFormat::PlyBinary => "ply",
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xyz" => Ok(CloudFormat::Xyz),
            "ply" | "ply-binary" => Ok(CloudFormat::PlyBinary),
            "ply-ascii" => Ok(CloudFormat::PlyAscii),
            other => Err(Error::InvalidParameter(format!(
                "unknown format \"{other}\""
            ))),
        }
    }
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads a cloud, choosing the parser from the extension (`.ply` or anything
/// else as XYZ).
pub fn read_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let is_ply = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        read_ply(path)
    } else {
        read_xyz(path)
    }
}

pub fn write_cloud(path: impl AsRef<Path>, pc: &PointCloud, format: CloudFormat) -> Result<()> {
    match format {
        CloudFormat::Xyz => write_xyz(path, pc),
        CloudFormat::PlyAscii => write_ply(path, pc, false),
        CloudFormat::PlyBinary => write_ply(path, pc, true),
    }
}

pub fn read_xyz(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut points = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut coords = [0.0; 3];
        let mut fields = trimmed.split_whitespace();
        for c in coords.iter_mut() {
            let tok = fields
                .next()
                .ok_or_else(|| parse_err(path, n + 1, "expected three coordinates"))?;
            *c = tok
                .parse()
                .map_err(|_| parse_err(path, n + 1, format!("bad number \"{tok}\"")))?;
        }
        points.push(Point::from(coords));
    }
    PointCloud::new(points)
}

/// One point per line, shortest round-trip decimal form.
pub fn write_xyz(path: impl AsRef<Path>, pc: &PointCloud) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for p in pc.points() {
        writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ply(path: impl AsRef<Path>, pc: &PointCloud, binary: bool) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let format = if binary {
        "binary_little_endian"
    } else {
        "ascii"
    };
    write!(
        w,
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        pc.len()
    )?;
    for p in pc.points() {
        let v = [p.x as f32, p.y as f32, p.z as f32];
        if binary {
            for c in v {
                w.write_all(&c.to_le_bytes())?;
            }
        } else {
            writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    /// Text values of single-precision properties are rounded to f32, as
    /// the binary encoding would be.
    fn parse_text(self, s: &str) -> Option<f64> {
        match self {
            Scalar::F32 => s.parse::<f32>().ok().map(f64::from),
            _ => s.parse::<f64>().ok(),
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

/// Reads the `vertex` element's x, y, z; everything else is skipped.
pub fn read_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut line = String::new();
    let mut line_no = 0;
    let mut next_line = |reader: &mut BufReader<fs::File>, line: &mut String| -> Result<usize> {
        line.clear();
        if reader.read_line(line)? == 0 {
            return Err(parse_err(path, line_no + 1, "unexpected end of header"));
        }
        line_no += 1;
        Ok(line_no)
    };
    next_line(&mut reader, &mut line)?;
    if line.trim_end() != "ply" {
        return Err(parse_err(path, 1, "missing \"ply\" magic"));
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let n = next_line(&mut reader, &mut line)?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", other, _] => {
                return Err(parse_err(path, n, format!("unsupported format {other}")))
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| parse_err(path, n, "bad element count"))?,
                properties: Vec::new(),
            }),
            ["property", "list", count_ty, item_ty, _] => {
                let (c, i) = Scalar::parse(count_ty)
                    .zip(Scalar::parse(item_ty))
                    .ok_or_else(|| parse_err(path, n, "unknown list type"))?;
                elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, n, "property before element"))?
                    .properties
                    .push(Property::List(c, i));
            }
            ["property", ty, name] => {
                let t = Scalar::parse(ty).ok_or_else(|| parse_err(path, n, "unknown type"))?;
                elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, n, "property before element"))?
                    .properties
                    .push(Property::Scalar(name.to_string(), t));
            }
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => {
                return Err(parse_err(
                    path,
                    n,
                    format!("unrecognized header line: {}", line.trim()),
                ))
            }
        }
    }
    let binary = binary.ok_or_else(|| parse_err(path, line_no, "missing format line"))?;
    let vertex = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| parse_err(path, line_no, "no vertex element"))?;
    let slot = |name: &str| {
        elements[vertex]
            .properties
            .iter()
            .position(|p| matches!(p, Property::Scalar(n, _) if n == name))
    };
    let xyz = [slot("x"), slot("y"), slot("z")];
    let [Some(xi), Some(yi), Some(zi)] = xyz else {
        return Err(parse_err(path, line_no, "vertex element lacks x, y or z"));
    };

    let mut points = Vec::new();
    if binary {
        let mut body = Vec::new();
        reader.read_to_end(&mut body)?;
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let end = pos + n;
            if end > body.len() {
                return Err(parse_err(path, line_no, "binary body truncated"));
            }
            let s = &body[pos..end];
            pos = end;
            Ok(s)
        };
        for (ei, el) in elements.iter().enumerate() {
            for _ in 0..el.count {
                let mut values = vec![0.0; el.properties.len()];
                for (pi, prop) in el.properties.iter().enumerate() {
                    match *prop {
                        Property::Scalar(_, t) => values[pi] = t.decode(take(t.size())?),
                        Property::List(c, item) => {
                            let count = c.decode(take(c.size())?) as usize;
                            take(count * item.size())?;
                        }
                    }
                }
                if ei == vertex {
                    points.push(Point::new(values[xi], values[yi], values[zi]));
                }
            }
            if ei == vertex {
                break;
            }
        }
    } else {
        let mut lines = reader.lines();
        for (ei, el) in elements.iter().enumerate() {
            for _ in 0..el.count {
                line_no += 1;
                let text = lines
                    .next()
                    .ok_or_else(|| parse_err(path, line_no, "ascii body truncated"))??;
                if ei != vertex {
                    continue;
                }
                let toks: Vec<&str> = text.split_whitespace().collect();
                let get = |i: usize| -> Result<f64> {
                    let tok = toks
                        .get(i)
                        .ok_or_else(|| parse_err(path, line_no, "missing vertex value"))?;
                    let ty = match &elements[vertex].properties[i] {
                        Property::Scalar(_, t) => *t,
                        Property::List(..) => Scalar::F64,
                    };
                    ty.parse_text(tok)
                        .ok_or_else(|| parse_err(path, line_no, "bad vertex value"))
                };
                // Scalar properties before any list keep their token position.
                points.push(Point::new(get(xi)?, get(yi)?, get(zi)?));
            }
            if ei == vertex {
                break;
            }
        }
    }
    PointCloud::new(points)
}

/// ASCII OBJ with `v` and `f` lines (1-based indices).
pub fn write_obj(path: impl AsRef<Path>, mesh: &TriangleMesh) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for v in mesh.vertices() {
        writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `v`/`f` lines of an OBJ file; polygons are fan-triangulated.
pub fn read_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let reader = BufReader::new(fs::File::open(path)?);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for v in c.iter_mut() {
                    *v = toks
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(path, n + 1, "bad vertex"))?;
                }
                vertices.push(Point::from(c));
            }
            Some("f") => {
                let idx = toks
                    .map(|t| {
                        t.split('/')
                            .next()
                            .and_then(|i| i.parse::<usize>().ok())
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| parse_err(path, n + 1, "bad face index"))
                    })
                    .collect::<Result<Vec<_>>>()?;
                for k in 1..idx.len().saturating_sub(1) {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, faces)
}

/// `dir/stem.ext` for an output cloud.
pub fn output_path(dir: &Path, stem: &str, format: CloudFormat) -> PathBuf {
    dir.join(format!("{stem}.{}", format.extension()))
}
