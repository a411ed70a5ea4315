//! 3D FPGA architecture description: grid geometry, segment mix, switch-box
//! flexibility, TSV electrical/geometric parameters, delay and area tables.
//!
//! The architecture file is TOML (key/value with nested sections). A
//! reference file lives in `arch/reference.toml`.

use thiserror::Error;
use toml::Value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsvParams {
    /// Ohms.
    pub resistance: f64,
    /// Farads.
    pub capacitance: f64,
    /// Micrometers.
    pub diameter: f64,
    /// Micrometers.
    pub pitch: f64,
    /// Micrometers.
    pub height: f64,
}

/// Per-element delays, seconds. These are user-supplied table values, not
/// extracted from any device model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayModel {
    pub t_lut: f64,
    pub t_ff_clk_to_q: f64,
    pub t_ff_setup: f64,
    pub t_seg1: f64,
    pub t_seg2: f64,
    pub t_seg4: f64,
    pub t_sb_switch: f64,
    pub t_cb: f64,
    pub t_tsv: f64,
}

impl DelayModel {
    /// Delay of a planar segment of nominal length 1, 2 or 4.
    pub fn t_seg(&self, len: u8) -> f64 {
        match len {
            1 => self.t_seg1,
            2 => self.t_seg2,
            4 => self.t_seg4,
            _ => panic!("segment length {len} not in {{1,2,4}}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaModel {
    pub transistors_per_clb: u64,
    pub transistors_per_cb_per_track: u64,
}

/// Fractions of channel tracks at segment lengths 1 / 2 / 4; sums to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMix {
    pub single: f64,
    pub double: f64,
    pub quad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arch3D {
    pub tiers: usize,
    pub grid_x: usize,
    pub grid_y: usize,
    pub lut_size: usize,
    pub cluster_size: usize,
    /// Switch-box flexibility F_s.
    pub fs: usize,
    pub segment_mix: SegmentMix,
    /// Target fraction of switch boxes that are 3D (carry TSV tracks).
    pub sb3d_fraction: f64,
    /// Fraction of W provisioned as TSV tracks per 3D switch box (r_z).
    pub vertical_track_ratio: f64,
    pub tsv: TsvParams,
    /// Unit length absorbed into grid_x/grid_y; reporting only.
    pub tsv_area_overhead: f64,
    /// Conversion from micrometers to grid-length units.
    pub grid_units_per_um: f64,
    pub delays: DelayModel,
    pub area: AreaModel,
}

#[derive(Debug, Error, PartialEq)]
pub enum ArchError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("invariant violated on `{field}`: {reason}")]
    InvariantViolation { field: String, reason: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("architecture file is not valid TOML: {0}")]
    Syntax(String),
    #[error("switch-box coordinate ({0}, {1}) outside the SB grid")]
    OutOfGrid(usize, usize),
}

fn violation(field: &str, reason: impl Into<String>) -> ArchError {
    ArchError::InvariantViolation {
        field: field.to_string(),
        reason: reason.into(),
    }
}

struct Section<'a> {
    prefix: String,
    table: &'a toml::map::Map<String, Value>,
    seen: Vec<String>,
}

impl<'a> Section<'a> {
    fn new(prefix: &str, table: &'a toml::map::Map<String, Value>) -> Self {
        Section {
            prefix: prefix.to_string(),
            table,
            seen: Vec::new(),
        }
    }

    fn key(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{}", self.prefix, name)
        }
    }

    fn get(&mut self, name: &str) -> Option<&'a Value> {
        self.seen.push(name.to_string());
        self.table.get(name)
    }

    fn f64(&mut self, name: &str) -> Result<f64, ArchError> {
        let key = self.key(name);
        match self.get(name) {
            Some(Value::Float(f)) => Ok(*f),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(violation(&key, "expected a number")),
            None => Err(ArchError::MissingField(key)),
        }
    }

    fn f64_or(&mut self, name: &str, default: f64) -> Result<f64, ArchError> {
        let key = self.key(name);
        match self.get(name) {
            Some(Value::Float(f)) => Ok(*f),
            Some(Value::Integer(i)) => Ok(*i as f64),
            Some(_) => Err(violation(&key, "expected a number")),
            None => Ok(default),
        }
    }

    fn usize(&mut self, name: &str) -> Result<usize, ArchError> {
        let key = self.key(name);
        match self.get(name) {
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(violation(&key, "expected a nonnegative integer")),
            None => Err(ArchError::MissingField(key)),
        }
    }

    fn usize_or(&mut self, name: &str, default: usize) -> Result<usize, ArchError> {
        let key = self.key(name);
        match self.get(name) {
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as usize),
            Some(_) => Err(violation(&key, "expected a nonnegative integer")),
            None => Ok(default),
        }
    }

    fn section(&mut self, name: &str) -> Result<Section<'a>, ArchError> {
        let key = self.key(name);
        match self.get(name) {
            Some(Value::Table(t)) => Ok(Section::new(&key, t)),
            Some(_) => Err(violation(&key, "expected a table")),
            None => Err(ArchError::MissingField(key)),
        }
    }

    fn reject_unknown(&self) -> Result<(), ArchError> {
        for k in self.table.keys() {
            if !self.seen.iter().any(|s| s == k) {
                return Err(ArchError::UnknownKey(self.key(k)));
            }
        }
        Ok(())
    }
}

/// Parse and validate an architecture file.
pub fn load_arch(text: &str) -> Result<Arch3D, ArchError> {
    let value: Value = text
        .parse()
        .map_err(|e: toml::de::Error| ArchError::Syntax(e.to_string()))?;
    let root_table = match &value {
        Value::Table(t) => t,
        _ => return Err(ArchError::Syntax("top level must be a table".into())),
    };
    let mut root = Section::new("", root_table);

    let tiers = root.usize("tiers")?;
    let grid_x = root.usize("grid_x")?;
    let grid_y = root.usize("grid_y")?;
    let lut_size = root.usize("lut_size")?;
    let cluster_size = root.usize_or("cluster_size", 1)?;
    let fs = root.usize("fs")?;
    let sb3d_fraction = root.f64_or("sb3d_fraction", 1.0 / 3.0)?;
    let vertical_track_ratio = root.f64_or("vertical_track_ratio", 0.5)?;
    let tsv_area_overhead = root.f64_or("tsv_area_overhead", 0.0)?;
    let grid_units_per_um = root.f64("grid_units_per_um")?;

    let mut mix = root.section("segment_mix")?;
    let segment_mix = SegmentMix {
        single: mix.f64("single")?,
        double: mix.f64("double")?,
        quad: mix.f64("quad")?,
    };
    mix.reject_unknown()?;

    let mut tsv_sec = root.section("tsv")?;
    let tsv = TsvParams {
        resistance: tsv_sec.f64("resistance")?,
        capacitance: tsv_sec.f64("capacitance")?,
        diameter: tsv_sec.f64("diameter")?,
        pitch: tsv_sec.f64("pitch")?,
        height: tsv_sec.f64("height")?,
    };
    tsv_sec.reject_unknown()?;

    let mut d = root.section("delays")?;
    let delays = DelayModel {
        t_lut: d.f64("lut")?,
        t_ff_clk_to_q: d.f64("ff_clk_to_q")?,
        t_ff_setup: d.f64("ff_setup")?,
        t_seg1: d.f64("seg1")?,
        t_seg2: d.f64("seg2")?,
        t_seg4: d.f64("seg4")?,
        t_sb_switch: d.f64("sb_switch")?,
        t_cb: d.f64("cb")?,
        t_tsv: d.f64("tsv")?,
    };
    d.reject_unknown()?;

    let mut a = root.section("area")?;
    let area = AreaModel {
        transistors_per_clb: a.usize("transistors_per_clb")? as u64,
        transistors_per_cb_per_track: a.usize("transistors_per_cb_per_track")? as u64,
    };
    a.reject_unknown()?;
    root.reject_unknown()?;

    let arch = Arch3D {
        tiers,
        grid_x,
        grid_y,
        lut_size,
        cluster_size,
        fs,
        segment_mix,
        sb3d_fraction,
        vertical_track_ratio,
        tsv,
        tsv_area_overhead,
        grid_units_per_um,
        delays,
        area,
    };
    arch.validate()?;
    Ok(arch)
}

impl Arch3D {
    // `!(v > 0.0)` deliberately rejects NaN as well as non-positive values.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), ArchError> {
        if self.tiers < 1 {
            return Err(violation("tiers", "must be >= 1"));
        }
        if self.grid_x < 1 || self.grid_y < 1 {
            return Err(violation("grid_x/grid_y", "must be >= 1"));
        }
        if self.lut_size < 2 {
            return Err(violation("lut_size", "K must be >= 2"));
        }
        if self.cluster_size < 1 {
            return Err(violation("cluster_size", "must be >= 1"));
        }
        if self.fs < 1 {
            return Err(violation("fs", "F_s must be >= 1"));
        }
        let m = &self.segment_mix;
        if m.single < 0.0 || m.double < 0.0 || m.quad < 0.0 {
            return Err(violation("segment_mix", "fractions must be nonnegative"));
        }
        if (m.single + m.double + m.quad - 1.0).abs() > 1e-9 {
            return Err(violation("segment_mix", "fractions must sum to 1"));
        }
        if !(self.sb3d_fraction > 0.0 && self.sb3d_fraction <= 1.0) {
            return Err(violation("sb3d_fraction", "must be in (0, 1]"));
        }
        if !(self.vertical_track_ratio > 0.0 && self.vertical_track_ratio <= 1.0) {
            return Err(violation("vertical_track_ratio", "must be in (0, 1]"));
        }
        for (name, v) in [
            ("tsv.resistance", self.tsv.resistance),
            ("tsv.capacitance", self.tsv.capacitance),
            ("tsv.diameter", self.tsv.diameter),
            ("tsv.pitch", self.tsv.pitch),
            ("tsv.height", self.tsv.height),
        ] {
            if !(v > 0.0) {
                return Err(violation(name, "must be strictly positive"));
            }
        }
        if !(self.grid_units_per_um > 0.0) {
            return Err(violation("grid_units_per_um", "must be strictly positive"));
        }
        let d = &self.delays;
        for (name, v) in [
            ("delays.lut", d.t_lut),
            ("delays.ff_clk_to_q", d.t_ff_clk_to_q),
            ("delays.ff_setup", d.t_ff_setup),
            ("delays.seg1", d.t_seg1),
            ("delays.seg2", d.t_seg2),
            ("delays.seg4", d.t_seg4),
            ("delays.sb_switch", d.t_sb_switch),
            ("delays.cb", d.t_cb),
            ("delays.tsv", d.t_tsv),
        ] {
            if v < 0.0 {
                return Err(violation(name, "must be nonnegative"));
            }
        }
        if self.area.transistors_per_clb == 0 || self.area.transistors_per_cb_per_track == 0 {
            return Err(violation("area", "transistor constants must be positive"));
        }
        Ok(())
    }

    /// Whether the switch box at SB-grid coordinate (x, y) carries TSV
    /// tracks. The SB grid is one larger than the CLB grid in each
    /// dimension. The diagonal pattern (x + y) mod 3 == 0 yields ~1/3 of
    /// sites and repeats identically on every tier.
    pub fn is_3d_sb(&self, x: usize, y: usize) -> Result<bool, ArchError> {
        if x > self.grid_x || y > self.grid_y {
            return Err(ArchError::OutOfGrid(x, y));
        }
        Ok((x + y).is_multiple_of(3))
    }

    /// TSV height expressed in grid-length units.
    pub fn tsv_height_grid(&self) -> f64 {
        self.tsv.height * self.grid_units_per_um
    }

    /// Maximum 3D Manhattan distance: (X + Y) + (n - 1) * h_TSV, with the
    /// TSV area overhead already embedded in X and Y.
    pub fn dmax(&self) -> f64 {
        (self.grid_x as f64 + self.grid_y as f64)
            + (self.tiers as f64 - 1.0) * self.tsv_height_grid()
    }

    /// TSV tracks per 3D switch box at channel width `w`: ceil(r_z * w).
    pub fn vertical_tracks(&self, w: usize) -> usize {
        (self.vertical_track_ratio * w as f64).ceil() as usize
    }
}

/// Pass-transistor count of one switch box: round-half-up of 1.5*w for a 2D
/// SB and 2.5*w for a 3D SB.
pub fn sb_switch_count(w: usize, is_3d: bool) -> u64 {
    let k = if is_3d { 5 * w as u64 } else { 3 * w as u64 };
    k.div_ceil(2)
}

/// Single-pole RC estimate for one TSV, seconds. Reported for
/// documentation; routing delays use `DelayModel::t_tsv`.
pub fn tsv_rc_delay(tsv: &TsvParams) -> f64 {
    tsv.resistance * tsv.capacitance
}

/// An architecture value with plausible defaults, used by tests and as the
/// base for generated fixtures.
pub fn test_arch(tiers: usize, grid_x: usize, grid_y: usize) -> Arch3D {
    Arch3D {
        tiers,
        grid_x,
        grid_y,
        lut_size: 6,
        cluster_size: 1,
        fs: 3,
        segment_mix: SegmentMix {
            single: 1.0,
            double: 0.0,
            quad: 0.0,
        },
        sb3d_fraction: 1.0 / 3.0,
        vertical_track_ratio: 0.5,
        tsv: TsvParams {
            resistance: 0.35,
            capacitance: 3e-15,
            diameter: 2.0,
            pitch: 4.0,
            height: 20.0,
        },
        tsv_area_overhead: 1.0,
        grid_units_per_um: 0.1,
        delays: DelayModel {
            t_lut: 2.0e-10,
            t_ff_clk_to_q: 6.0e-11,
            t_ff_setup: 4.0e-11,
            t_seg1: 1.0e-10,
            t_seg2: 1.6e-10,
            t_seg4: 2.6e-10,
            t_sb_switch: 4.0e-11,
            t_cb: 3.0e-11,
            t_tsv: 2.0e-11,
        },
        area: AreaModel {
            transistors_per_clb: 1700,
            transistors_per_cb_per_track: 6,
        },
    }
}
