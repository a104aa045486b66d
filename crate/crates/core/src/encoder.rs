//! Boolean input images: pie-shaped N-bit headers surrounded by an always-ON
//! locking ring, rasterized on the input micro-mirror grid.

use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const MAX_BITS: u32 = 16;

/// Square raster of the input mirror array with the circular illumination
/// disk centered on it. Only in-disk pixels can ever be switched on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub side_px: usize,
    pub disk_radius_px: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            side_px: 64,
            disk_radius_px: 30.0,
        }
    }
}

impl Grid {
    pub fn new(side_px: usize, disk_radius_px: f64) -> Result<Self> {
        let grid = Grid {
            side_px,
            disk_radius_px,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.side_px == 0 {
            return Err(Error::domain("side_px", "must be positive"));
        }
        if !(self.disk_radius_px > 0.0 && self.disk_radius_px <= self.side_px as f64 / 2.0) {
            return Err(Error::domain(
                "disk_radius_px",
                format!(
                    "must lie in (0, side_px/2 = {}], got {}",
                    self.side_px as f64 / 2.0,
                    self.disk_radius_px
                ),
            ));
        }
        Ok(())
    }

    /// Pixel-center coordinates relative to the disk center, `x` to the
    /// right and `y` upwards.
    fn center_offset(&self, row: usize, col: usize) -> (f64, f64) {
        let half = self.side_px as f64 / 2.0;
        let x = col as f64 + 0.5 - half;
        let y = half - (row as f64 + 0.5);
        (x, y)
    }

    /// In-disk pixels in row-major order. This enumeration fixes the
    /// meaning of every index of an input vector `u`.
    pub fn disk_pixels(&self) -> Vec<(usize, usize)> {
        let r2 = self.disk_radius_px * self.disk_radius_px;
        let mut out = Vec::new();
        for row in 0..self.side_px {
            for col in 0..self.side_px {
                let (x, y) = self.center_offset(row, col);
                if x * x + y * y <= r2 {
                    out.push((row, col));
                }
            }
        }
        out
    }

    pub fn disk_pixel_count(&self) -> usize {
        self.disk_pixels().len()
    }
}

/// Which part of the header image a pixel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Ring,
    Sector(u32),
}

/// Partition of the in-disk pixels into the locking ring and `n_bits`
/// angular sectors. Shared by every pattern of a sequence.
#[derive(Debug, Clone)]
pub struct HeaderLayout {
    grid: Grid,
    n_bits: u32,
    ring_fraction: f64,
    pixels: Vec<(usize, usize)>,
    regions: Vec<Region>,
}

fn check_bits(n_bits: u32) -> Result<()> {
    if (1..=MAX_BITS).contains(&n_bits) {
        Ok(())
    } else {
        Err(Error::domain(
            "n_bits",
            format!("must lie in [1, {MAX_BITS}], got {n_bits}"),
        ))
    }
}

fn check_ring_fraction(ring_fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&ring_fraction) {
        Ok(())
    } else {
        Err(Error::domain(
            "ring_fraction",
            format!("must lie in [0, 1], got {ring_fraction}"),
        ))
    }
}

/// Sector index of an angle, with pixels lying exactly on a boundary
/// assigned to the lower-index sector.
fn sector_of(x: f64, y: f64, n_bits: u32) -> u32 {
    let mut theta = y.atan2(x);
    if theta < 0.0 {
        theta += std::f64::consts::TAU;
    }
    let t = theta * n_bits as f64 / std::f64::consts::TAU;
    let nearest = t.round();
    let idx = if (t - nearest).abs() < 1e-9 {
        // On a boundary between sectors `nearest - 1` and `nearest`.
        if nearest >= 1.0 {
            nearest as u32 - 1
        } else {
            0
        }
    } else {
        t.floor() as u32
    };
    idx.min(n_bits - 1)
}

impl HeaderLayout {
    pub fn new(grid: Grid, n_bits: u32, ring_fraction: f64) -> Result<Self> {
        grid.validate()?;
        check_bits(n_bits)?;
        check_ring_fraction(ring_fraction)?;

        let pixels = grid.disk_pixels();
        let p = pixels.len();
        let radius: Vec<f64> = pixels
            .iter()
            .map(|&(r, c)| {
                let (x, y) = grid.center_offset(r, c);
                x.hypot(y)
            })
            .collect();

        // The ring is the outermost `round(f * p)` pixels, so its area
        // fraction matches the request to within one pixel.
        let ring_count = (ring_fraction * p as f64).round() as usize;
        let mut by_radius: Vec<usize> = (0..p).collect();
        by_radius.sort_by(|&a, &b| radius[b].total_cmp(&radius[a]).then(a.cmp(&b)));
        let mut in_ring = vec![false; p];
        for &i in &by_radius[..ring_count] {
            in_ring[i] = true;
        }

        let regions = pixels
            .iter()
            .zip(&in_ring)
            .map(|(&(r, c), &ring)| {
                if ring {
                    Region::Ring
                } else {
                    let (x, y) = grid.center_offset(r, c);
                    Region::Sector(sector_of(x, y, n_bits))
                }
            })
            .collect();

        Ok(HeaderLayout {
            grid,
            n_bits,
            ring_fraction,
            pixels,
            regions,
        })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn n_classes(&self) -> usize {
        1usize << self.n_bits
    }

    pub fn ring_fraction(&self) -> f64 {
        self.ring_fraction
    }

    /// Number of in-disk pixels `p`.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[(usize, usize)] {
        &self.pixels
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    /// Pixel indices of one region.
    pub fn region_indices(&self, region: Region) -> Vec<usize> {
        self.regions
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| (r == region).then_some(i))
            .collect()
    }

    pub fn ring_count(&self) -> usize {
        self.regions.iter().filter(|&&r| r == Region::Ring).count()
    }

    pub fn check_class(&self, class_id: u32) -> Result<()> {
        if (class_id as usize) < self.n_classes() {
            Ok(())
        } else {
            Err(Error::domain(
                "class_id",
                format!(
                    "must lie in [0, 2^{}) = [0, {}), got {class_id}",
                    self.n_bits,
                    self.n_classes()
                ),
            ))
        }
    }

    pub fn pattern(&self, class_id: u32) -> Result<InputPattern> {
        self.check_class(class_id)?;
        let pixels = self
            .regions
            .iter()
            .map(|&r| match r {
                Region::Ring => true,
                Region::Sector(j) => (class_id >> j) & 1 == 1,
            })
            .collect();
        Ok(InputPattern {
            grid: self.grid,
            pixels,
            n_bits: self.n_bits,
            class_id,
            ring_fraction: self.ring_fraction,
        })
    }
}

/// One Boolean input image.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPattern {
    pub grid: Grid,
    /// In-disk pixels in [`Grid::disk_pixels`] order.
    pub pixels: Vec<bool>,
    pub n_bits: u32,
    pub class_id: u32,
    pub ring_fraction: f64,
}

impl InputPattern {
    pub fn on_count(&self) -> usize {
        self.pixels.iter().filter(|&&b| b).count()
    }

    /// Writes the full square raster as an ASCII graymap (P2).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let side = self.grid.side_px;
        let mut raster = vec![0u8; side * side];
        for (&(r, c), &on) in self.grid.disk_pixels().iter().zip(&self.pixels) {
            raster[r * side + c] = if on { 255 } else { 0 };
        }
        writeln!(w, "P2\n{side} {side}\n255")?;
        for row in raster.chunks(side) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

pub fn make_header_pattern(
    grid: Grid,
    n_bits: u32,
    class_id: u32,
    ring_fraction: f64,
) -> Result<InputPattern> {
    HeaderLayout::new(grid, n_bits, ring_fraction)?.pattern(class_id)
}

/// Boolean input vector `u` of a pattern.
pub fn pattern_to_vector(pattern: &InputPattern) -> Vec<bool> {
    pattern.pixels.clone()
}

/// Random header sequence with its class labels.
#[derive(Debug, Clone)]
pub struct LabeledSequence {
    pub patterns: Vec<InputPattern>,
    pub labels: Vec<u32>,
    pub seed: u64,
    layout: Arc<HeaderLayout>,
}

impl LabeledSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn layout(&self) -> &HeaderLayout {
        &self.layout
    }

    pub fn n_classes(&self) -> usize {
        self.layout.n_classes()
    }

    /// Builds a sequence from explicit labels, e.g. to present a fixed set
    /// of headers.
    pub fn from_labels(layout: Arc<HeaderLayout>, labels: Vec<u32>, seed: u64) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::domain("T", "sequence must contain at least one pattern"));
        }
        let patterns = labels
            .iter()
            .map(|&c| layout.pattern(c))
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledSequence {
            patterns,
            labels,
            seed,
            layout,
        })
    }
}

pub fn make_sequence(
    grid: Grid,
    n_bits: u32,
    t: usize,
    ring_fraction: f64,
    seed: u64,
) -> Result<LabeledSequence> {
    let layout = Arc::new(HeaderLayout::new(grid, n_bits, ring_fraction)?);
    make_sequence_with_layout(layout, t, seed)
}

pub fn make_sequence_with_layout(
    layout: Arc<HeaderLayout>,
    t: usize,
    seed: u64,
) -> Result<LabeledSequence> {
    if t == 0 {
        return Err(Error::domain("T", "sequence length must be at least 1"));
    }
    let mut rng = seed::rng(seed);
    let n_classes = layout.n_classes() as u32;
    let labels: Vec<u32> = (0..t).map(|_| rng.random_range(0..n_classes)).collect();
    LabeledSequence::from_labels(layout, labels, seed)
}
