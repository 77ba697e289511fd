//! E-I inductor cross-section.
//!
//! The core is centred on the origin with the E-yoke legs pointing down
//! towards the I-bar. Widths from left to right are
//! `w_E | w_C | w_Fe - 2 w_C | w_C | w_E`, so `w_Fe` spans the centre leg and
//! both coil windows. Heights from bottom to top are
//! `l_I | l_air | l_C | l_E`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    IronE,
    IronI,
    CoilPos,
    CoilNeg,
    AirGap,
    Air,
}

impl Region {
    pub const ALL: [Region; 6] = [
        Region::IronE,
        Region::IronI,
        Region::CoilPos,
        Region::CoilNeg,
        Region::AirGap,
        Region::Air,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::IronE => "IRON_E",
            Region::IronI => "IRON_I",
            Region::CoilPos => "COIL_POS",
            Region::CoilNeg => "COIL_NEG",
            Region::AirGap => "AIR_GAP",
            Region::Air => "AIR",
        }
    }

    pub fn from_name(name: &str) -> Option<Region> {
        Region::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Integer code used in VTK cell data.
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn is_iron(self) -> bool {
        matches!(self, Region::IronE | Region::IronI)
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]` in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let w = self.x1.min(other.x1) - self.x0.max(other.x0);
        let h = self.y1.min(other.y1) - self.y0.max(other.y0);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }
}

/// Geometric parameters of the inductor, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InductorGeometry {
    /// Height of the E-yoke back bar.
    pub l_e: f64,
    /// Leg length, equal to the coil window height.
    pub l_c: f64,
    /// Thickness of the I-bar.
    pub l_i: f64,
    /// Air-gap height between the leg tips and the I-bar.
    pub l_air: f64,
    /// Width of each outer leg.
    pub w_e: f64,
    /// Width of each coil window.
    pub w_c: f64,
    /// Span of the centre leg plus both coil windows.
    pub w_fe: f64,
    pub air_box_half_width: f64,
}

/// Inductor dimensions of the reference electromagnet (millimetre table
/// values converted to meters) in a 0.28 m air box.
pub fn default_geometry() -> InductorGeometry {
    InductorGeometry {
        l_e: 0.030,
        l_c: 0.090,
        l_i: 0.030,
        l_air: 0.0033,
        w_e: 0.030,
        w_c: 0.030,
        w_fe: 0.090,
        air_box_half_width: 0.28,
    }
}

impl Default for InductorGeometry {
    fn default() -> Self {
        default_geometry()
    }
}

impl InductorGeometry {
    pub fn centre_leg_width(&self) -> f64 {
        self.w_fe - 2.0 * self.w_c
    }

    pub fn core_width(&self) -> f64 {
        self.w_fe + 2.0 * self.w_e
    }

    pub fn core_height(&self) -> f64 {
        self.l_i + self.l_air + self.l_c + self.l_e
    }

    /// Cross-section area of one coil window.
    pub fn coil_area(&self) -> f64 {
        self.w_c * self.l_c
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("l_E", self.l_e),
            ("l_C", self.l_c),
            ("l_I", self.l_i),
            ("l_air", self.l_air),
            ("w_E", self.w_e),
            ("w_C", self.w_c),
            ("w_Fe", self.w_fe),
            ("air_box_half_width", self.air_box_half_width),
        ];
        for (name, v) in lengths {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.l_air >= self.l_i {
            return Err(Error::InvalidGeometry(format!(
                "air gap {} must be thinner than the I-bar {}",
                self.l_air, self.l_i
            )));
        }
        if self.centre_leg_width() <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "w_Fe = {} leaves no room for a centre leg between two windows of width {}",
                self.w_fe, self.w_c
            )));
        }
        let largest = lengths[..7].iter().map(|(_, v)| *v).fold(0.0, f64::max);
        if self.air_box_half_width < 3.0 * largest {
            return Err(Error::InvalidGeometry(format!(
                "air box half width {} is below 3x the largest core dimension {}",
                self.air_box_half_width, largest
            )));
        }
        let half = 0.5 * self.core_width().max(self.core_height());
        if half >= self.air_box_half_width {
            return Err(Error::InvalidGeometry(
                "core does not fit inside the air box".into(),
            ));
        }
        Ok(())
    }
}

/// Region rectangles. `parts` are painted over the enclosing `air_box`
/// (tagged [`Region::Air`]); parts never overlap each other.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionLayout {
    pub air_box: Rect,
    pub parts: Vec<(Rect, Region)>,
}

impl RegionLayout {
    /// Air box only, no parts. Handy for tests on plain domains.
    pub fn empty(air_box: Rect) -> Self {
        RegionLayout {
            air_box,
            parts: Vec::new(),
        }
    }

    pub fn with_parts(air_box: Rect, parts: Vec<(Rect, Region)>) -> Result<Self> {
        let layout = RegionLayout { air_box, parts };
        layout.check()?;
        Ok(layout)
    }

    /// Region owning the point, parts first.
    pub fn region_at(&self, x: f64, y: f64) -> Region {
        self.parts
            .iter()
            .find(|(r, _)| r.contains(x, y))
            .map(|(_, tag)| *tag)
            .unwrap_or(Region::Air)
    }

    pub fn parts_of(&self, region: Region) -> impl Iterator<Item = &Rect> {
        self.parts
            .iter()
            .filter(move |(_, t)| *t == region)
            .map(|(r, _)| r)
    }

    fn check(&self) -> Result<()> {
        if !(self.air_box.width() > 0.0 && self.air_box.height() > 0.0) {
            return Err(Error::InvalidGeometry("air box has no area".into()));
        }
        for (i, (a, ta)) in self.parts.iter().enumerate() {
            if !(a.width() > 0.0 && a.height() > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "{ta} rectangle #{i} is degenerate ({} x {})",
                    a.width(),
                    a.height()
                )));
            }
            if a.x0 < self.air_box.x0
                || a.x1 > self.air_box.x1
                || a.y0 < self.air_box.y0
                || a.y1 > self.air_box.y1
            {
                return Err(Error::InvalidGeometry(format!(
                    "{ta} rectangle #{i} leaves the air box"
                )));
            }
            for (b, tb) in &self.parts[i + 1..] {
                if a.overlap_area(b) > 0.0 {
                    return Err(Error::GeometryOverlap {
                        first: ta.to_string(),
                        second: tb.to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Lay out the inductor cross-section.
pub fn build_regions(geom: &InductorGeometry) -> Result<RegionLayout> {
    geom.validate()?;
    let half_w = 0.5 * geom.core_width();
    let bottom = -0.5 * geom.core_height();
    let i_top = bottom + geom.l_i;
    let gap_top = i_top + geom.l_air;
    let legs_top = gap_top + geom.l_c;
    let top = legs_top + geom.l_e;
    let half_c = 0.5 * geom.centre_leg_width();

    let win_l = -half_w + geom.w_e;
    let win_r = half_w - geom.w_e;

    let parts = vec![
        (Rect::new(-half_w, half_w, legs_top, top), Region::IronE),
        (Rect::new(-half_w, win_l, gap_top, legs_top), Region::IronE),
        (Rect::new(-half_c, half_c, gap_top, legs_top), Region::IronE),
        (Rect::new(win_r, half_w, gap_top, legs_top), Region::IronE),
        (
            Rect::new(win_l, -half_c, gap_top, legs_top),
            Region::CoilPos,
        ),
        (Rect::new(half_c, win_r, gap_top, legs_top), Region::CoilNeg),
        (Rect::new(-half_w, half_w, i_top, gap_top), Region::AirGap),
        (Rect::new(-half_w, half_w, bottom, i_top), Region::IronI),
    ];
    let a = geom.air_box_half_width;
    RegionLayout::with_parts(Rect::new(-a, a, -a, a), parts)
}
