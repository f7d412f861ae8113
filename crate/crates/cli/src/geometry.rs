//! Point and mesh file formats (OBJ, PLY, dense scalar grids) and the
//! normalisation into the working box.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Half-width of the box that inputs are normalised into.
pub const NORMALIZED_HALF_WIDTH: f64 = 0.7;

/// Grid cells with a value above this produce samples.
pub const GRID_THRESHOLD: f64 = 1.0;

/// Points with optional per-point weights and triangle connectivity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Geometry {
    pub points: Vec<[f64; 3]>,
    pub weights: Option<Vec<f64>>,
    pub triangles: Option<Vec<[usize; 3]>>,
}

impl Geometry {
    pub fn from_points(points: Vec<[f64; 3]>) -> Self {
        Geometry {
            points,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same connectivity and weights with new coordinates.
    pub fn with_points(&self, points: Vec<[f64; 3]>) -> Self {
        debug_assert_eq!(points.len(), self.points.len());
        Geometry {
            points,
            weights: self.weights.clone(),
            triangles: self.triangles.clone(),
        }
    }
}

/// Uniform scaling about a centre: `n = (p − center) · scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    pub center: [f64; 3],
    pub scale: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Normalization {
            center: [0.0; 3],
            scale: 1.0,
        }
    }

    /// Centres the bounding box and scales its longest side to the working box.
    pub fn fit(points: &[[f64; 3]]) -> Self {
        if points.is_empty() {
            return Self::identity();
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in points {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let center = [0, 1, 2].map(|k| 0.5 * (lo[k] + hi[k]));
        let extent = (0..3).map(|k| hi[k] - lo[k]).fold(0.0, f64::max);
        let scale = if extent > 0.0 { 2.0 * NORMALIZED_HALF_WIDTH / extent } else { 1.0 };
        Normalization { center, scale }
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| (p[k] - self.center[k]) * self.scale)
    }

    pub fn undo(&self, n: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|k| n[k] / self.scale + self.center[k])
    }

    pub fn apply_all(&self, ps: &[[f64; 3]]) -> Vec<[f64; 3]> {
        ps.iter().map(|&p| self.apply(p)).collect()
    }

    pub fn undo_all(&self, ps: &[[f64; 3]]) -> Vec<[f64; 3]> {
        ps.iter().map(|&p| self.undo(p)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0) || !self.scale.is_finite() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(CliError::Config(format!("invalid normalization {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeometryFormat {
    Obj,
    Ply,
    Grid,
}

impl GeometryFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "obj" => Ok(GeometryFormat::Obj),
            "ply" => Ok(GeometryFormat::Ply),
            "grid" => Ok(GeometryFormat::Grid),
            _ => Err(CliError::Config(format!(
                "{}: unknown geometry extension (expected .obj, .ply or .grid)",
                path.display()
            ))),
        }
    }
}

/// Reads a geometry file, dispatching on its extension. Coordinates are returned as stored.
pub fn load_geometry(path: &Path) -> Result<Geometry> {
    let format = GeometryFormat::from_path(path)?;
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let geometry = match format {
        GeometryFormat::Obj => parse_obj(utf8(&bytes, path)?, path)?,
        GeometryFormat::Ply => parse_ply(&bytes, path)?,
        GeometryFormat::Grid => parse_grid(utf8(&bytes, path)?, path)?,
    };
    if geometry.is_empty() {
        return Err(CliError::Config(format!("{}: geometry contains no points", path.display())));
    }
    Ok(geometry)
}

/// Reads a geometry file and normalises it into the working box.
pub fn load_normalized(path: &Path) -> Result<(Geometry, Normalization)> {
    let g = load_geometry(path)?;
    let n = Normalization::fit(&g.points);
    let pts = n.apply_all(&g.points);
    Ok((g.with_points(pts), n))
}

fn utf8<'a>(bytes: &'a [u8], path: &Path) -> Result<&'a str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        CliError::parse(path, line, "invalid UTF-8")
    })
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(CliError::parse(path, line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn check_triangles(tris: &[[usize; 3]], n: usize, path: &Path) -> Result<()> {
    if let Some((i, t)) = tris.iter().enumerate().find(|(_, t)| t.iter().any(|&v| v >= n)) {
        return Err(CliError::parse(
            path,
            0,
            format!("face {i} references vertex {:?} but only {n} exist", t),
        ));
    }
    Ok(())
}

/// Wavefront OBJ: `v` records and polygonal `f` records (fan-triangulated).
pub fn parse_obj(text: &str, path: &Path) -> Result<Geometry> {
    let mut points = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let xyz: Vec<&str> = toks.take(3).collect();
                if xyz.len() < 3 {
                    return Err(CliError::parse(path, line, "vertex needs three coordinates"));
                }
                points.push([
                    parse_f64(xyz[0], path, line)?,
                    parse_f64(xyz[1], path, line)?,
                    parse_f64(xyz[2], path, line)?,
                ]);
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in toks {
                    let head = tok.split('/').next().unwrap_or("");
                    let k: i64 = head
                        .parse()
                        .map_err(|_| CliError::parse(path, line, format!("bad face index {tok:?}")))?;
                    let v = match k {
                        k if k > 0 => (k - 1) as usize,
                        k if k < 0 && (-k) as usize <= points.len() => points.len() - (-k) as usize,
                        _ => return Err(CliError::parse(path, line, format!("bad face index {tok:?}"))),
                    };
                    idx.push(v);
                }
                if idx.len() < 3 {
                    return Err(CliError::parse(path, line, "face needs at least three vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    check_triangles(&triangles, points.len(), path)?;
    Ok(Geometry {
        points,
        weights: None,
        triangles: (!triangles.is_empty()).then_some(triangles),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            PlyType::I8 => b[0] as i8 as f64,
            PlyType::U8 => b[0] as f64,
            PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().expect("eight bytes")),
        }
    }
}

#[derive(Clone, Debug)]
enum PlyProperty {
    Scalar(String, PlyType),
    List(String, PlyType, PlyType),
}

#[derive(Clone, Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

/// Property names accepted as a per-point weight channel, in priority order.
const PLY_WEIGHT_NAMES: [&str; 5] = ["weight", "density", "value", "scalar", "quality"];

/// Source of record values: whitespace tokens (ascii) or little-endian bytes.
enum PlyBody<'a> {
    Ascii { tokens: Vec<(usize, &'a str)>, next: usize },
    Binary { data: &'a [u8], offset: usize },
}

impl PlyBody<'_> {
    fn read(&mut self, ty: PlyType, path: &Path) -> Result<f64> {
        match self {
            PlyBody::Ascii { tokens, next } => {
                let &(line, tok) = tokens
                    .get(*next)
                    .ok_or_else(|| CliError::parse(path, tokens.last().map_or(0, |t| t.0), "unexpected end of data"))?;
                *next += 1;
                parse_f64(tok, path, line)
            }
            PlyBody::Binary { data, offset } => {
                let n = ty.size();
                if *offset + n > data.len() {
                    return Err(CliError::parse(path, 0, format!("unexpected end of data at byte {offset}")));
                }
                let v = ty.read_le(&data[*offset..*offset + n]);
                *offset += n;
                if !v.is_finite() {
                    return Err(CliError::parse(path, 0, format!("non-finite value at byte {}", *offset - n)));
                }
                Ok(v)
            }
        }
    }

    fn line(&self) -> usize {
        match self {
            PlyBody::Ascii { tokens, next } => tokens.get(next.saturating_sub(1)).map_or(0, |t| t.0),
            PlyBody::Binary { .. } => 0,
        }
    }
}

/// Stanford PLY (ascii or binary little-endian): vertices, optional weight channel, optional faces.
pub fn parse_ply(bytes: &[u8], path: &Path) -> Result<Geometry> {
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut binary = None;
    let mut pos = 0;
    let mut line = 0;
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|e| pos + e)
            .ok_or_else(|| CliError::parse(path, line + 1, "header is missing end_header"))?;
        line += 1;
        let text = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| CliError::parse(path, line, "header is not valid text"))?
            .trim();
        pos = end + 1;
        if line == 1 {
            if text != "ply" {
                return Err(CliError::parse(path, line, "missing ply magic"));
            }
            continue;
        }
        let toks: Vec<&str> = text.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", other, _] => {
                return Err(CliError::parse(path, line, format!("unsupported format {other}")));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| CliError::parse(path, line, format!("bad element count {count:?}")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count_ty, item_ty, name] => {
                let (c, t) = match (PlyType::parse(count_ty), PlyType::parse(item_ty)) {
                    (Some(c), Some(t)) => (c, t),
                    _ => return Err(CliError::parse(path, line, "unknown property type")),
                };
                elements
                    .last_mut()
                    .ok_or_else(|| CliError::parse(path, line, "property before element"))?
                    .properties
                    .push(PlyProperty::List(name.to_string(), c, t));
            }
            ["property", ty, name] => {
                let t = PlyType::parse(ty)
                    .ok_or_else(|| CliError::parse(path, line, format!("unknown property type {ty:?}")))?;
                elements
                    .last_mut()
                    .ok_or_else(|| CliError::parse(path, line, "property before element"))?
                    .properties
                    .push(PlyProperty::Scalar(name.to_string(), t));
            }
            ["end_header"] => break,
            _ => return Err(CliError::parse(path, line, format!("unrecognised header line {text:?}"))),
        }
    }
    let binary = binary.ok_or_else(|| CliError::parse(path, line, "header has no format line"))?;
    let mut body = if binary {
        PlyBody::Binary {
            data: &bytes[pos..],
            offset: 0,
        }
    } else {
        let rest = std::str::from_utf8(&bytes[pos..]).map_err(|_| CliError::parse(path, line + 1, "invalid UTF-8"))?;
        let tokens = rest
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (line + 1 + i, t)))
            .collect();
        PlyBody::Ascii { tokens, next: 0 }
    };

    let mut points = Vec::new();
    let mut weights: Option<Vec<f64>> = None;
    let mut triangles = Vec::new();
    for el in &elements {
        let scalar_index = |name: &str| {
            el.properties
                .iter()
                .position(|p| matches!(p, PlyProperty::Scalar(n, _) if n == name))
        };
        let (xyz, weight_slot) = if el.name == "vertex" {
            let xyz = ["x", "y", "z"].map(scalar_index);
            if xyz.iter().any(Option::is_none) {
                return Err(CliError::parse(path, line, "vertex element lacks x, y or z"));
            }
            let w = PLY_WEIGHT_NAMES.iter().find_map(|n| scalar_index(n));
            (Some(xyz.map(|i| i.expect("checked"))), w)
        } else {
            (None, None)
        };
        if weight_slot.is_some() {
            weights = Some(Vec::with_capacity(el.count));
        }
        for _ in 0..el.count {
            let mut p = [0.0; 3];
            for (k, prop) in el.properties.iter().enumerate() {
                match prop {
                    PlyProperty::Scalar(_, ty) => {
                        let v = body.read(*ty, path)?;
                        if let Some(xyz) = xyz {
                            if let Some(c) = xyz.iter().position(|&i| i == k) {
                                p[c] = v;
                            }
                        }
                        if weight_slot == Some(k) {
                            weights.as_mut().expect("allocated").push(v);
                        }
                    }
                    PlyProperty::List(name, count_ty, item_ty) => {
                        let count = body.read(*count_ty, path)?;
                        if count < 0.0 || count.fract() != 0.0 {
                            return Err(CliError::parse(path, body.line(), format!("bad list length {count}")));
                        }
                        let mut idx = Vec::with_capacity(count as usize);
                        for _ in 0..count as usize {
                            idx.push(body.read(*item_ty, path)?);
                        }
                        let is_face = el.name == "face" && (name == "vertex_indices" || name == "vertex_index");
                        if is_face {
                            if idx.len() < 3 || idx.iter().any(|&v| v < 0.0 || v.fract() != 0.0) {
                                return Err(CliError::parse(path, body.line(), "bad face"));
                            }
                            for j in 1..idx.len() - 1 {
                                triangles.push([idx[0] as usize, idx[j] as usize, idx[j + 1] as usize]);
                            }
                        }
                    }
                }
            }
            if xyz.is_some() {
                points.push(p);
            }
        }
    }
    check_triangles(&triangles, points.len(), path)?;
    Ok(Geometry {
        points,
        weights,
        triangles: (!triangles.is_empty()).then_some(triangles),
    })
}

/// Dense scalar grid:
///
/// ```text
/// grid NX NY NZ
/// bounds X0 Y0 Z0 X1 Y1 Z1
/// v v v ...        (NX·NY·NZ values, x fastest, then y, then z)
/// ```
///
/// Every cell whose value exceeds [`GRID_THRESHOLD`] yields a sample at its
/// centre, weighted by its value relative to the mean over the kept cells.
pub fn parse_grid(text: &str, path: &Path) -> Result<Geometry> {
    let mut tokens = text.lines().enumerate().flat_map(|(i, l)| {
        l.split('#')
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(move |t| (i + 1, t))
    });
    let mut expect = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| CliError::parse(path, 0, format!("unexpected end of file, expected {what}")))
    };
    let (l, kw) = expect("grid")?;
    if kw != "grid" {
        return Err(CliError::parse(path, l, format!("expected \"grid\", found {kw:?}")));
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        let (l, t) = expect("grid dimension")?;
        *d = t
            .parse()
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| CliError::parse(path, l, format!("bad grid dimension {t:?}")))?;
    }
    let (l, kw) = expect("bounds")?;
    if kw != "bounds" {
        return Err(CliError::parse(path, l, format!("expected \"bounds\", found {kw:?}")));
    }
    let mut b = [0.0; 6];
    for v in &mut b {
        let (l, t) = expect("bound")?;
        *v = parse_f64(t, path, l)?;
    }
    if (0..3).any(|k| !(b[k + 3] > b[k])) {
        return Err(CliError::parse(path, l, "bounds must have max > min on every axis"));
    }
    let total = dims[0] * dims[1] * dims[2];
    let mut points = Vec::new();
    let mut values = Vec::new();
    for idx in 0..total {
        let (l, t) = expect("grid value")?;
        let v = parse_f64(t, path, l)?;
        if v > GRID_THRESHOLD {
            let cell = [idx % dims[0], (idx / dims[0]) % dims[1], idx / (dims[0] * dims[1])];
            points.push([0, 1, 2].map(|k| b[k] + (cell[k] as f64 + 0.5) * (b[k + 3] - b[k]) / dims[k] as f64));
            values.push(v);
        }
    }
    if let Some((l, t)) = tokens.next() {
        return Err(CliError::parse(path, l, format!("trailing data {t:?} after {total} values")));
    }
    if points.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no grid cell exceeds the threshold {GRID_THRESHOLD}",
            path.display()
        )));
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    Ok(Geometry {
        points,
        weights: Some(values.iter().map(|v| v / mean).collect()),
        triangles: None,
    })
}

/// Writes OBJ or ascii PLY (chosen by extension) atomically.
pub fn save_geometry(path: &Path, g: &Geometry) -> Result<()> {
    let mut out = String::new();
    match GeometryFormat::from_path(path)? {
        GeometryFormat::Obj => {
            for p in &g.points {
                out.push_str(&format!("v {} {} {}\n", p[0], p[1], p[2]));
            }
            for t in g.triangles.iter().flatten() {
                out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
            }
        }
        GeometryFormat::Ply => {
            let tris = g.triangles.as_deref().unwrap_or(&[]);
            out.push_str("ply\nformat ascii 1.0\n");
            out.push_str(&format!("element vertex {}\n", g.points.len()));
            out.push_str("property double x\nproperty double y\nproperty double z\n");
            if g.weights.is_some() {
                out.push_str("property double weight\n");
            }
            if !tris.is_empty() {
                out.push_str(&format!("element face {}\nproperty list uchar int vertex_indices\n", tris.len()));
            }
            out.push_str("end_header\n");
            for (i, p) in g.points.iter().enumerate() {
                out.push_str(&format!("{} {} {}", p[0], p[1], p[2]));
                if let Some(w) = &g.weights {
                    out.push_str(&format!(" {}", w[i]));
                }
                out.push('\n');
            }
            for t in tris {
                out.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
            }
        }
        GeometryFormat::Grid => {
            return Err(CliError::Config(format!(
                "{}: grid files are input only; write .obj or .ply",
                path.display()
            )));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test")
    }

    #[test]
    fn unit_cube_normalizes_into_box() {
        let mut text = String::new();
        for i in 0..8 {
            text.push_str(&format!("v {} {} {}\n", i & 1, (i >> 1) & 1, (i >> 2) & 1));
        }
        text.push_str("f 1 2 4 3\n");
        let g = parse_obj(&text, p()).unwrap();
        assert_eq!(g.triangles.as_ref().unwrap().len(), 2);
        let n = Normalization::fit(&g.points);
        assert_eq!(n.center, [0.5; 3]);
        assert!((n.scale - 1.4).abs() < 1e-15);
        for q in n.apply_all(&g.points) {
            for c in q {
                assert!((c.abs() - 0.7).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalization_round_trip() {
        let pts = vec![[3.0, -2.5, 100.0], [7.25, 1e-3, -40.0], [0.1, 0.2, 0.3]];
        let n = Normalization::fit(&pts);
        for (a, b) in pts.iter().zip(n.undo_all(&n.apply_all(&pts))) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-9 * a[k].abs().max(1.0));
            }
        }
        let m = n.apply_all(&pts);
        assert!(m.iter().flatten().all(|c| c.abs() <= 0.7 + 1e-12));
    }

    #[test]
    fn obj_negative_indices_and_errors() {
        let g = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3/1 -2/2 -1/3\n", p()).unwrap();
        assert_eq!(g.triangles.unwrap(), vec![[0, 1, 2]]);
        match parse_obj("v 0 0 0\nv 1 x 0\n", p()) {
            Err(CliError::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n", p()).is_err());
    }

    #[test]
    fn ply_ascii_with_weight_channel() {
        let text = "ply\nformat ascii 1.0\ncomment x\nelement vertex 3\nproperty float x\nproperty float y\n\
                    property float z\nproperty float weight\nelement face 1\nproperty list uchar int vertex_indices\n\
                    end_header\n0 0 0 0.5\n1 0 0 2\n0 1 0 3\n3 0 1 2\n";
        let g = parse_ply(text.as_bytes(), p()).unwrap();
        assert_eq!(g.points[1], [1.0, 0.0, 0.0]);
        assert_eq!(g.weights.unwrap(), vec![0.5, 2.0, 3.0]);
        assert_eq!(g.triangles.unwrap(), vec![[0, 1, 2]]);
    }

    #[test]
    fn ply_binary_little_endian() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty double x\n\
                          property double y\nproperty double z\nproperty uchar density\nend_header\n"
            .to_vec();
        for (p, w) in [([1.5f64, -2.0, 0.25], 7u8), ([0.0, 3.0, -1.0], 9)] {
            for c in p {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
            bytes.push(w);
        }
        let g = parse_ply(&bytes, p()).unwrap();
        assert_eq!(g.points, vec![[1.5, -2.0, 0.25], [0.0, 3.0, -1.0]]);
        assert_eq!(g.weights.unwrap(), vec![7.0, 9.0]);
        assert!(parse_ply(&bytes[..bytes.len() - 3], p()).is_err());
    }

    #[test]
    fn grid_threshold_selects_cells_above_one() {
        let text = "grid 2 2 1\nbounds 0 0 0 2 2 1\n0.5 1.0\n3 1.5 # comment\n";
        let g = parse_grid(text, p()).unwrap();
        assert_eq!(g.points, vec![[0.5, 1.5, 0.5], [1.5, 1.5, 0.5]]);
        let w = g.weights.unwrap();
        assert!((w[0] - 1.333_333_333_333_333_3).abs() < 1e-12 && (w[1] - 0.666_666_666_666_666_6).abs() < 1e-12);
        assert!(parse_grid("grid 1 1 1\nbounds 0 0 0 1 1 1\n0.2\n", p()).is_err());
        assert!(parse_grid("grid 1 1 1\nbounds 0 0 0 1 1 1\n2 2\n", p()).is_err());
    }

    #[test]
    fn save_then_load_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = Geometry {
            points: vec![[0.1, 1.0 / 3.0, -2e-17], [std::f64::consts::PI, 5.0, 6.0], [1.0, 1.0, 1.0]],
            weights: Some(vec![0.25, 1.0 / 7.0, 2.0]),
            triangles: Some(vec![[0, 1, 2]]),
        };
        let ply = dir.path().join("a.ply");
        save_geometry(&ply, &g).unwrap();
        assert_eq!(load_geometry(&ply).unwrap(), g);
        let obj = dir.path().join("a.obj");
        save_geometry(&obj, &g).unwrap();
        let back = load_geometry(&obj).unwrap();
        assert_eq!(back.points, g.points);
        assert_eq!(back.triangles, g.triangles);
    }
}
