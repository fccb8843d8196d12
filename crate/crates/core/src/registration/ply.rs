//! PLY 1.0 reading (ascii, binary little-endian) and ascii writing.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quat::Vec3;

use super::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    fn parse(s: &str) -> Option<Scalar> {
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

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    format: Format,
    elements: Vec<Element>,
    body_offset: usize,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::MalformedHeader(msg.into())
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut offset = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(malformed("missing end_header"));
        };
        let line = std::str::from_utf8(&rest[..nl]).map_err(|_| malformed("header is not valid text"))?;
        let line = line.trim_end_matches('\r').trim();
        offset += nl + 1;
        if line == "end_header" {
            break;
        }
        lines.push(line.to_string());
    }

    let mut it = lines.iter();
    if it.next().map(String::as_str) != Some("ply") {
        return Err(malformed("missing 'ply' magic"));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in it {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.first().copied() {
            None | Some("comment") | Some("obj_info") => {}
            Some("format") => {
                if tok.len() != 3 {
                    return Err(malformed(format!("bad format line '{line}'")));
                }
                if tok[2] != "1.0" {
                    return Err(Error::UnsupportedFormat(format!("version {}", tok[2])));
                }
                format = Some(match tok[1] {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLe,
                    "binary_big_endian" => return Err(Error::UnsupportedFormat("binary_big_endian".into())),
                    other => return Err(malformed(format!("unknown format '{other}'"))),
                });
            }
            Some("element") => {
                if tok.len() != 3 {
                    return Err(malformed(format!("bad element line '{line}'")));
                }
                let count = tok[2].parse().map_err(|_| malformed(format!("bad element count '{}'", tok[2])))?;
                elements.push(Element { name: tok[1].to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| malformed("property before any element"))?;
                let bad_type = |t: &str| malformed(format!("unknown property type '{t}'"));
                if tok.get(1) == Some(&"list") {
                    if tok.len() != 5 {
                        return Err(malformed(format!("bad list property '{line}'")));
                    }
                    let count = Scalar::parse(tok[2]).ok_or_else(|| bad_type(tok[2]))?;
                    let item = Scalar::parse(tok[3]).ok_or_else(|| bad_type(tok[3]))?;
                    el.props.push(Property::List { count, item });
                } else {
                    if tok.len() != 3 {
                        return Err(malformed(format!("bad property line '{line}'")));
                    }
                    let ty = Scalar::parse(tok[1]).ok_or_else(|| bad_type(tok[1]))?;
                    el.props.push(Property::Scalar(tok[2].to_string(), ty));
                }
            }
            Some(other) => return Err(malformed(format!("unexpected keyword '{other}'"))),
        }
    }
    let format = format.ok_or_else(|| malformed("missing format line"))?;
    Ok(Header { format, elements, body_offset: offset })
}

fn xyz_slots(el: &Element) -> Result<[usize; 3]> {
    let find = |name: &str| {
        el.props
            .iter()
            .position(|p| matches!(p, Property::Scalar(n, _) if n == name))
            .ok_or_else(|| malformed(format!("vertex element has no '{name}' property")))
    };
    Ok([find("x")?, find("y")?, find("z")?])
}

/// Parses a PLY file and returns its vertex positions.
///
/// Properties other than `x`, `y`, `z` and elements other than `vertex` are
/// skipped. A file without a vertex element yields an empty cloud.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud> {
    let header = parse_header(bytes)?;
    let body = &bytes[header.body_offset..];
    let mut points = Vec::new();
    match header.format {
        Format::Ascii => {
            let text = String::from_utf8_lossy(body);
            let mut tokens = text.split_ascii_whitespace();
            let mut next = |what: &str| -> Result<f64> {
                let t = tokens.next().ok_or_else(|| Error::TruncatedBody(format!("expected {what}")))?;
                t.parse::<f64>().map_err(|_| Error::TruncatedBody(format!("bad number '{t}' in {what}")))
            };
            for el in &header.elements {
                let slots = if el.name == "vertex" { Some(xyz_slots(el)?) } else { None };
                for _ in 0..el.count {
                    let mut xyz = [0.0; 3];
                    for (k, prop) in el.props.iter().enumerate() {
                        match prop {
                            Property::Scalar(..) => {
                                let v = next(&el.name)?;
                                if let Some(s) = slots {
                                    for (c, &slot) in s.iter().enumerate() {
                                        if slot == k {
                                            xyz[c] = v;
                                        }
                                    }
                                }
                            }
                            Property::List { .. } => {
                                let len = next(&el.name)?;
                                for _ in 0..len as usize {
                                    next(&el.name)?;
                                }
                            }
                        }
                    }
                    if slots.is_some() {
                        points.push(Vec3::from(xyz));
                    }
                }
            }
        }
        Format::BinaryLe => {
            let mut pos = 0usize;
            let take = |pos: &mut usize, n: usize, what: &str| -> Result<&[u8]> {
                let end = *pos + n;
                if end > body.len() {
                    return Err(Error::TruncatedBody(format!("{what} ends past byte {}", body.len())));
                }
                let s = &body[*pos..end];
                *pos = end;
                Ok(s)
            };
            for el in &header.elements {
                let slots = if el.name == "vertex" { Some(xyz_slots(el)?) } else { None };
                for _ in 0..el.count {
                    let mut xyz = [0.0; 3];
                    for (k, prop) in el.props.iter().enumerate() {
                        match *prop {
                            Property::Scalar(_, ty) => {
                                let v = ty.read_le(take(&mut pos, ty.size(), &el.name)?);
                                if let Some(s) = slots {
                                    for (c, &slot) in s.iter().enumerate() {
                                        if slot == k {
                                            xyz[c] = v;
                                        }
                                    }
                                }
                            }
                            Property::List { count, item } => {
                                let len = count.read_le(take(&mut pos, count.size(), &el.name)?) as usize;
                                take(&mut pos, len * item.size(), &el.name)?;
                            }
                        }
                    }
                    if slots.is_some() {
                        points.push(Vec3::from(xyz));
                    }
                }
            }
        }
    }
    Ok(PointCloud::new(points))
}

/// Reads and parses a PLY file; the cloud is named after the file stem.
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path)?;
    let mut cloud = parse_ply(&bytes)?;
    cloud.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(cloud)
}

/// Writes points as ascii PLY with double coordinates and, when `colors` is
/// given, `uchar` red/green/blue per vertex. Each comment becomes a header
/// `comment` line.
pub fn write_ply_ascii<W: Write>(
    out: &mut W,
    points: &[Vec3],
    colors: Option<&[[u8; 3]]>,
    comments: &[String],
) -> Result<()> {
    if let Some(c) = colors {
        if c.len() != points.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: c.len() });
        }
    }
    writeln!(out, "ply\nformat ascii 1.0")?;
    for c in comments {
        writeln!(out, "comment {}", c.replace(['\n', '\r'], " "))?;
    }
    writeln!(out, "element vertex {}", points.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    if colors.is_some() {
        writeln!(out, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
    }
    writeln!(out, "end_header")?;
    for (k, p) in points.iter().enumerate() {
        match colors {
            Some(c) => writeln!(out, "{:?} {:?} {:?} {} {} {}", p.x, p.y, p.z, c[k][0], c[k][1], c[k][2])?,
            None => writeln!(out, "{:?} {:?} {:?}", p.x, p.y, p.z)?,
        }
    }
    Ok(())
}

/// Binary little-endian writer with float coordinates; used for fixtures.
pub fn write_ply_binary_le<W: Write>(out: &mut W, points: &[Vec3]) -> Result<()> {
    writeln!(out, "ply\nformat binary_little_endian 1.0\nelement vertex {}", points.len())?;
    writeln!(out, "property float x\nproperty float y\nproperty float z\nend_header")?;
    for p in points {
        for c in [p.x, p.y, p.z] {
            out.write_all(&(c as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ASCII: &str = "ply
format ascii 1.0
comment three points and a face
element vertex 3
property float x
property float y
property float z
property uchar red
element face 1
property list uchar int vertex_indices
end_header
0 0 0 255
1.5 -2 3.25 0
1e-3 4 -5 17
3 0 1 2
";

    #[test]
    fn ascii_fixture() {
        let c = parse_ply(ASCII.as_bytes()).unwrap();
        assert_eq!(
            c.points,
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.5, -2.0, 3.25), Vec3::new(1e-3, 4.0, -5.0)]
        );
    }

    #[test]
    fn ascii_and_binary_agree() {
        let pts: Vec<Vec3> = (0..50).map(|k| {
            let t = k as f64 * 0.37;
            Vec3::new(t.sin(), t.cos() * 2.0, t - 3.0)
        }).collect();
        let mut a = Vec::new();
        write_ply_ascii(&mut a, &pts, None, &["fixture".to_string()]).unwrap();
        let mut b = Vec::new();
        write_ply_binary_le(&mut b, &pts).unwrap();
        let pa = parse_ply(&a).unwrap().points;
        let pb = parse_ply(&b).unwrap().points;
        assert_eq!(pa, pts);
        for (x, y) in pa.iter().zip(&pb) {
            assert!(x.distance(y) < 1e-6);
        }
    }

    #[test]
    fn binary_double_and_extra_properties() {
        let mut b = b"ply\r\nformat binary_little_endian 1.0\r\nelement vertex 2\r\nproperty uchar flag\r\nproperty double x\r\nproperty double y\r\nproperty double z\r\nproperty list uchar int idx\r\nend_header\r\n".to_vec();
        for (flag, p) in [(1u8, [1.0f64, 2.0, 3.0]), (2, [-4.0, 5.5, 0.125])] {
            b.push(flag);
            for c in p {
                b.extend_from_slice(&c.to_le_bytes());
            }
            b.push(2);
            b.extend_from_slice(&7i32.to_le_bytes());
            b.extend_from_slice(&8i32.to_le_bytes());
        }
        let c = parse_ply(&b).unwrap();
        assert_eq!(c.points, vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(-4.0, 5.5, 0.125)]);
        b.truncate(b.len() - 3);
        assert!(matches!(parse_ply(&b), Err(Error::TruncatedBody(_))));
    }

    #[test]
    fn empty_vertex_element() {
        let s = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
        assert!(parse_ply(s.as_bytes()).unwrap().points.is_empty());
    }

    #[test]
    fn header_errors() {
        let big = "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n";
        assert!(matches!(parse_ply(big.as_bytes()), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(parse_ply(b"plx\nformat ascii 1.0\nend_header\n"), Err(Error::MalformedHeader(_))));
        assert!(matches!(parse_ply(b"ply\nformat ascii 1.0\n"), Err(Error::MalformedHeader(_))));
        let no_z = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n";
        assert!(matches!(parse_ply(no_z.as_bytes()), Err(Error::MalformedHeader(_))));
        let short = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n4 5\n";
        assert!(matches!(parse_ply(short.as_bytes()), Err(Error::TruncatedBody(_))));
    }

    #[test]
    fn colored_output_round_trips() {
        let pts = vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(0.1, 0.2, 0.3)];
        let mut out = Vec::new();
        write_ply_ascii(&mut out, &pts, Some(&[[255, 0, 0], [0, 0, 255]]), &[]).unwrap();
        assert_eq!(parse_ply(&out).unwrap().points, pts);
    }
}
