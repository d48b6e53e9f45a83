//! Parametric description of the triangular nanobeam cavity.
//!
//! Frame convention: origin at the centre of the beam's top face, `x`
//! transverse, `y` pointing down into the beam, `z` along the beam with
//! `z = 0` at the cavity centre. All lengths are nanometres.

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Named geometry presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    /// Fabricated base cavity, lengths in nm.
    #[serde(rename = "table1-base")]
    Table1Base,
    /// Tapered high-Q design: 11 central gaps at 0.9a, H = 1.65a.
    #[serde(rename = "fig7-highq")]
    Fig7HighQ,
}

impl Preset {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "table1-base" => Some(Preset::Table1Base),
            "fig7-highq" => Some(Preset::Fig7HighQ),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1Base => "table1-base",
            Preset::Fig7HighQ => "fig7-highq",
        }
    }

    pub fn spec(self) -> GeometrySpec {
        match self {
            Preset::Table1Base => GeometrySpec::table1_base(),
            Preset::Fig7HighQ => GeometrySpec::fig7_highq(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    /// Mirror period `a`.
    pub lattice_constant: f64,
    /// Central gap `D` used when `taper` is empty.
    pub defect_spacing: f64,
    pub beam_height: f64,
    /// Width of the flat top face.
    pub beam_width: f64,
    pub beam_length: f64,
    /// Groove extent along the beam (z).
    pub groove_width: f64,
    /// Groove extent across the beam (x).
    pub groove_length: f64,
    /// Groove depth measured down from the top face.
    pub groove_depth: f64,
    pub clearance_below: f64,
    pub clearance_side: f64,
    /// Centre-to-centre gap widths of the cavity region, palindromic.
    /// Empty means a single gap of `defect_spacing`.
    #[serde(default)]
    pub taper: Vec<f64>,
    /// Number of period-`a` gaps on each side beyond the cavity region.
    pub mirror_gaps_per_side: usize,
    pub refractive_index: f64,
    /// The beam continues past `beam_length / 2` without grooves, as a
    /// bridge joined to bulk material; otherwise it ends in vacuum.
    #[serde(default)]
    pub anchored_ends: bool,
}

impl GeometrySpec {
    pub fn table1_base() -> Self {
        GeometrySpec {
            lattice_constant: 205.0,
            defect_spacing: 180.0,
            beam_height: 450.0,
            beam_width: 1240.0,
            beam_length: 8000.0,
            groove_width: 82.0,
            groove_length: 460.0,
            groove_depth: 225.0,
            clearance_below: 5000.0,
            clearance_side: 6000.0,
            taper: Vec::new(),
            mirror_gaps_per_side: 9,
            refractive_index: 2.4,
            anchored_ends: true,
        }
    }

    pub fn fig7_highq() -> Self {
        let a = 205.0;
        let height = 1.65 * a;
        let width = 6.0 * a;
        GeometrySpec {
            lattice_constant: a,
            defect_spacing: 0.9 * a,
            beam_height: height,
            beam_width: width,
            beam_length: 39.0 * a,
            groove_width: 0.4 * a,
            groove_length: 0.37 * width,
            groove_depth: 0.5 * height,
            clearance_below: 5000.0,
            clearance_side: 6000.0,
            taper: vec![0.9 * a; 11],
            mirror_gaps_per_side: 8,
            refractive_index: 2.4,
            anchored_ends: true,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = [
            ("lattice_constant", self.lattice_constant),
            ("defect_spacing", self.defect_spacing),
            ("beam_height", self.beam_height),
            ("beam_width", self.beam_width),
            ("beam_length", self.beam_length),
            ("groove_width", self.groove_width),
            ("groove_length", self.groove_length),
            ("groove_depth", self.groove_depth),
            ("clearance_below", self.clearance_below),
            ("clearance_side", self.clearance_side),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(GeometryError::invalid(
                    field,
                    format!("must be > 0, got {value}"),
                ));
            }
        }
        if !(self.refractive_index.is_finite() && self.refractive_index >= 1.0) {
            return Err(GeometryError::invalid(
                "refractive_index",
                format!("must be >= 1, got {}", self.refractive_index),
            ));
        }
        if self.groove_depth > self.beam_height {
            return Err(GeometryError::invalid(
                "groove_depth",
                format!(
                    "{} exceeds beam_height {}",
                    self.groove_depth, self.beam_height
                ),
            ));
        }
        if self.groove_length > self.beam_width {
            return Err(GeometryError::invalid(
                "groove_length",
                format!(
                    "{} exceeds beam_width {}",
                    self.groove_length, self.beam_width
                ),
            ));
        }
        if !self.taper.is_empty() {
            if self.taper.len().is_multiple_of(2) {
                return Err(GeometryError::invalid("taper", "length must be odd"));
            }
            if let Some(bad) = self.taper.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
                return Err(GeometryError::invalid(
                    "taper",
                    format!("gap {bad} must be > 0"),
                ));
            }
            let n = self.taper.len();
            if (0..n / 2).any(|i| self.taper[i] != self.taper[n - 1 - i]) {
                return Err(GeometryError::invalid("taper", "must be palindromic"));
            }
        }
        let gaps = self.gaps();
        let occupied = gaps.iter().sum::<f64>() + (gaps.len() + 1) as f64 * self.groove_width;
        if occupied > self.beam_length {
            return Err(GeometryError::invalid(
                "beam_length",
                format!(
                    "groove lattice needs {occupied} nm but beam is {} nm",
                    self.beam_length
                ),
            ));
        }
        Ok(())
    }

    /// Gap widths of the cavity region (taper, or the single defect gap).
    pub fn central_gaps(&self) -> Vec<f64> {
        if self.taper.is_empty() {
            vec![self.defect_spacing]
        } else {
            self.taper.clone()
        }
    }

    /// All centre-to-centre gaps from one end of the lattice to the other.
    pub fn gaps(&self) -> Vec<f64> {
        let mirror = vec![self.lattice_constant; self.mirror_gaps_per_side];
        let mut gaps = mirror.clone();
        gaps.extend(self.central_gaps());
        gaps.extend(mirror);
        gaps
    }

    /// Groove centre positions along z, ascending and symmetric about 0.
    pub fn groove_centers(&self) -> Vec<f64> {
        let gaps = self.gaps();
        let total: f64 = gaps.iter().sum();
        let mut centers = Vec::with_capacity(gaps.len() + 1);
        let mut z = -0.5 * total;
        centers.push(z);
        for g in &gaps {
            z += g;
            centers.push(z);
        }
        // Exact mirror symmetry regardless of rounding in the running sum.
        let n = centers.len();
        for i in 0..n / 2 {
            let m = 0.5 * (centers[n - 1 - i] - centers[i]);
            centers[i] = -m;
            centers[n - 1 - i] = m;
        }
        if n % 2 == 1 {
            centers[n / 2] = 0.0;
        }
        centers
    }

    pub fn permittivity(&self) -> f64 {
        self.refractive_index * self.refractive_index
    }

    /// Half-width of the triangular cross-section at depth `y`.
    pub fn half_width_at(&self, y: f64) -> f64 {
        0.5 * self.beam_width * (1.0 - y / self.beam_height)
    }

    /// Solid volume of the patterned beam, assuming every groove lies
    /// inside the triangle (true for all presets).
    pub fn solid_volume(&self) -> f64 {
        let prism = 0.5 * self.beam_width * self.beam_height * self.beam_length;
        let groove = self.groove_width * self.groove_length * self.groove_depth;
        prism - groove * self.groove_centers().len() as f64
    }

    /// True when every groove box sits strictly within the triangle.
    pub fn grooves_inside_triangle(&self) -> bool {
        0.5 * self.groove_length <= self.half_width_at(self.groove_depth)
    }
}

/// A length in a config file: bare number (nm) or a suffixed string such
/// as `"205nm"`, `"1.24um"` or `"0.9a"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthValue {
    Nanometres(f64),
    Text(String),
}

impl LengthValue {
    pub fn resolve(
        &self,
        field: &str,
        lattice_constant: Option<f64>,
    ) -> Result<f64, GeometryError> {
        match self {
            LengthValue::Nanometres(v) => Ok(*v),
            LengthValue::Text(s) => parse_length(s, lattice_constant)
                .ok_or_else(|| GeometryError::invalid(field, format!("cannot parse length {s:?}"))),
        }
    }
}

fn parse_length(text: &str, lattice_constant: Option<f64>) -> Option<f64> {
    let t = text.trim();
    let split = t
        .find(|c: char| {
            !(c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E')
        })
        .unwrap_or(t.len());
    // `e` is ambiguous with exponents only when followed by a digit; no unit starts with e.
    let (num, unit) = t.split_at(split);
    let value: f64 = num.trim().parse().ok()?;
    match unit.trim() {
        "" | "nm" => Some(value),
        "um" | "µm" => Some(value * 1e3),
        "a" => lattice_constant.map(|a| value * a),
        _ => None,
    }
}

/// On-disk form of [`GeometrySpec`]: every length may be written in nm or
/// in units of the lattice constant.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub preset: Option<String>,
    pub lattice_constant: Option<LengthValue>,
    pub defect_spacing: Option<LengthValue>,
    pub beam_height: Option<LengthValue>,
    pub beam_width: Option<LengthValue>,
    pub beam_length: Option<LengthValue>,
    pub groove_width: Option<LengthValue>,
    pub groove_length: Option<LengthValue>,
    pub groove_depth: Option<LengthValue>,
    pub clearance_below: Option<LengthValue>,
    pub clearance_side: Option<LengthValue>,
    pub taper: Option<Vec<LengthValue>>,
    pub mirror_gaps_per_side: Option<usize>,
    pub refractive_index: Option<f64>,
    pub anchored_ends: Option<bool>,
}

impl GeometryConfig {
    /// Resolve to a validated spec. Fields override the preset when both
    /// are present; without a preset every field is required.
    pub fn resolve(&self) -> Result<GeometrySpec, GeometryError> {
        let base = match &self.preset {
            Some(name) => Some(
                Preset::from_name(name)
                    .ok_or_else(|| {
                        GeometryError::invalid("preset", format!("unknown preset {name:?}"))
                    })?
                    .spec(),
            ),
            None => None,
        };
        let a = match (&self.lattice_constant, &base) {
            (Some(v), _) => v.resolve("lattice_constant", None)?,
            (None, Some(b)) => b.lattice_constant,
            (None, None) => return Err(GeometryError::invalid("lattice_constant", "missing")),
        };
        let len = |field: &str,
                   v: &Option<LengthValue>,
                   fallback: Option<f64>|
         -> Result<f64, GeometryError> {
            match (v, fallback) {
                (Some(v), _) => v.resolve(field, Some(a)),
                (None, Some(f)) => Ok(f),
                (None, None) => Err(GeometryError::invalid(field, "missing")),
            }
        };
        let b = base.as_ref();
        let spec = GeometrySpec {
            lattice_constant: a,
            defect_spacing: len(
                "defect_spacing",
                &self.defect_spacing,
                b.map(|b| b.defect_spacing),
            )?,
            beam_height: len("beam_height", &self.beam_height, b.map(|b| b.beam_height))?,
            beam_width: len("beam_width", &self.beam_width, b.map(|b| b.beam_width))?,
            beam_length: len("beam_length", &self.beam_length, b.map(|b| b.beam_length))?,
            groove_width: len(
                "groove_width",
                &self.groove_width,
                b.map(|b| b.groove_width),
            )?,
            groove_length: len(
                "groove_length",
                &self.groove_length,
                b.map(|b| b.groove_length),
            )?,
            groove_depth: len(
                "groove_depth",
                &self.groove_depth,
                b.map(|b| b.groove_depth),
            )?,
            clearance_below: len(
                "clearance_below",
                &self.clearance_below,
                b.map(|b| b.clearance_below),
            )?,
            clearance_side: len(
                "clearance_side",
                &self.clearance_side,
                b.map(|b| b.clearance_side),
            )?,
            taper: match (&self.taper, b) {
                (Some(t), _) => t
                    .iter()
                    .map(|v| v.resolve("taper", Some(a)))
                    .collect::<Result<_, _>>()?,
                (None, Some(b)) => b.taper.clone(),
                (None, None) => Vec::new(),
            },
            mirror_gaps_per_side: match (self.mirror_gaps_per_side, b) {
                (Some(n), _) => n,
                (None, Some(b)) => b.mirror_gaps_per_side,
                (None, None) => 9,
            },
            refractive_index: match (self.refractive_index, b) {
                (Some(n), _) => n,
                (None, Some(b)) => b.refractive_index,
                (None, None) => 2.4,
            },
            anchored_ends: self
                .anchored_ends
                .or(b.map(|b| b.anchored_ends))
                .unwrap_or(false),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_spec(spec: &GeometrySpec) -> Self {
        let nm = |v: f64| Some(LengthValue::Nanometres(v));
        GeometryConfig {
            preset: None,
            lattice_constant: nm(spec.lattice_constant),
            defect_spacing: nm(spec.defect_spacing),
            beam_height: nm(spec.beam_height),
            beam_width: nm(spec.beam_width),
            beam_length: nm(spec.beam_length),
            groove_width: nm(spec.groove_width),
            groove_length: nm(spec.groove_length),
            groove_depth: nm(spec.groove_depth),
            clearance_below: nm(spec.clearance_below),
            clearance_side: nm(spec.clearance_side),
            taper: Some(
                spec.taper
                    .iter()
                    .map(|&g| LengthValue::Nanometres(g))
                    .collect(),
            ),
            mirror_gaps_per_side: Some(spec.mirror_gaps_per_side),
            refractive_index: Some(spec.refractive_index),
            anchored_ends: Some(spec.anchored_ends),
        }
    }
}
