//! Pupil detection by bright/dark field differencing, thresholding and
//! 8-connected blob analysis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::{join, Issues, Validate};
use crate::frame::{check_dims, BinaryImage, FramePair, GrayImage};
use crate::geometry::Point;
use crate::Result;

pub const DEFAULT_THRESHOLD: u8 = 40;

/// Inclusive integer rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BoundingBox {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x0 as f64 && p.x <= self.x1 as f64 && p.y >= self.y0 as f64 && p.y <= self.y1 as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub area: usize,
    /// Weighted by the difference-image intensity.
    pub centroid: Point,
    pub bbox: BoundingBox,
    /// 4π·area / perimeter², perimeter counted as exposed pixel edges.
    pub circularity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PupilConstraints {
    pub min_area: usize,
    pub max_area: usize,
    pub min_circularity: f64,
    pub min_separation: f64,
    pub max_separation: f64,
    pub max_vertical_skew: f64,
}

impl Default for PupilConstraints {
    fn default() -> Self {
        Self {
            min_area: 4,
            max_area: 400,
            min_circularity: 0.3,
            min_separation: 20.0,
            max_separation: 120.0,
            max_vertical_skew: 30.0,
        }
    }
}

impl Validate for PupilConstraints {
    fn validate_into(&self, prefix: &str, issues: &mut Issues) {
        let p = |f| join(prefix, f);
        issues.check(self.min_area >= 1, p("min_area"), "must be >= 1");
        issues.check(
            self.min_area <= self.max_area,
            p("max_area"),
            "must be >= min_area",
        );
        issues.check(
            (0.0..=1.0).contains(&self.min_circularity),
            p("min_circularity"),
            "must be within [0, 1]",
        );
        issues.check(self.min_separation >= 0.0, p("min_separation"), "must be >= 0");
        issues.check(
            self.min_separation <= self.max_separation,
            p("max_separation"),
            "must be >= min_separation",
        );
        issues.check(
            self.max_vertical_skew >= 0.0,
            p("max_vertical_skew"),
            "must be >= 0",
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PupilMeasurement {
    pub centroid: Point,
    pub area: usize,
}

/// Detected pupils for one frame. A lone pupil is reported in `left`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PupilObservation {
    pub t: f64,
    pub left: Option<PupilMeasurement>,
    pub right: Option<PupilMeasurement>,
    pub confidence: f64,
}

impl PupilObservation {
    pub fn empty(t: f64) -> Self {
        Self {
            t,
            left: None,
            right: None,
            confidence: 0.0,
        }
    }

    pub fn present(&self) -> impl Iterator<Item = &PupilMeasurement> {
        self.left.iter().chain(self.right.iter())
    }

    /// Midpoint of both pupils, when both were found.
    pub fn midpoint(&self) -> Option<Point> {
        Some(self.left?.centroid.midpoint(self.right?.centroid))
    }

    pub const CSV_HEADER: &'static str = "t,left_x,left_y,right_x,right_y,confidence";
    pub const CSV_HEADER_WITH_AREA: &'static str =
        "t,left_x,left_y,right_x,right_y,confidence,left_area,right_area";

    /// `t,left_x,left_y,right_x,right_y,confidence`, missing pupils as
    /// empty cells.
    pub fn csv_row(&self) -> String {
        let cell = |p: Option<PupilMeasurement>| match p {
            Some(m) => (format!("{:.4}", m.centroid.x), format!("{:.4}", m.centroid.y)),
            None => (String::new(), String::new()),
        };
        let (lx, ly) = cell(self.left);
        let (rx, ry) = cell(self.right);
        format!("{:.6},{lx},{ly},{rx},{ry},{:.1}", self.t, self.confidence)
    }

    /// [`Self::csv_row`] followed by `left_area,right_area`.
    pub fn csv_row_with_area(&self) -> String {
        let area = |p: Option<PupilMeasurement>| p.map(|m| m.area.to_string()).unwrap_or_default();
        format!("{},{},{}", self.csv_row(), area(self.left), area(self.right))
    }
}

/// Per-pixel `max(even - odd, 0)`.
pub fn difference_image(pair: &FramePair) -> Result<GrayImage> {
    pair.even.same_dims(&pair.odd)?;
    let data = pair
        .even
        .as_raw()
        .iter()
        .zip(pair.odd.as_raw())
        .map(|(&e, &o)| e.saturating_sub(o))
        .collect();
    GrayImage::from_raw(pair.even.width(), pair.even.height(), data)
}

/// Sets every pixel with intensity `>= tau`.
pub fn threshold(img: &GrayImage, tau: u8) -> BinaryImage {
    let bits = img.as_raw().iter().map(|&v| v >= tau).collect();
    BinaryImage::from_bits(img.width(), img.height(), bits).expect("dims preserved")
}

const NEIGHBORS_8: [(isize, isize); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-connected component labels of `bin` in raster order of first pixel:
/// 0 for background, `1..=count` for components. Returns `(labels, count)`.
pub fn label_components(bin: &BinaryImage) -> (Vec<u32>, u32) {
    let (w, h) = (bin.width(), bin.height());
    let bits = bin.bits();
    let mut labels = vec![0u32; w * h];
    let mut stack = Vec::new();
    let mut count = 0;

    for start in 0..w * h {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        count += 1;
        labels[start] = count;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in NEIGHBORS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if bits[j] && labels[j] == 0 {
                    labels[j] = count;
                    stack.push(j);
                }
            }
        }
    }
    (labels, count)
}

/// Labels 8-connected components of `bin` and measures each against `diff`.
///
/// Blobs are ordered by descending area, ties broken by the `(y, x)` origin
/// of their bounding box.
pub fn connected_components(bin: &BinaryImage, diff: &GrayImage) -> Result<Vec<Blob>> {
    let (w, h) = (bin.width(), bin.height());
    check_dims((w, h), (diff.width(), diff.height()))?;
    let (labels, count) = label_components(bin);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count as usize];
    for (i, &l) in labels.iter().enumerate() {
        if l > 0 {
            members[l as usize - 1].push(i);
        }
    }
    let mut blobs: Vec<Blob> = members
        .iter()
        .map(|pixels| measure(pixels, bin.bits(), diff, w, h))
        .collect();

    blobs.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then(a.bbox.y0.cmp(&b.bbox.y0))
            .then(a.bbox.x0.cmp(&b.bbox.x0))
    });
    Ok(blobs)
}

fn measure(pixels: &[usize], bits: &[bool], diff: &GrayImage, w: usize, h: usize) -> Blob {
    let mut bbox = BoundingBox {
        x0: usize::MAX,
        y0: usize::MAX,
        x1: 0,
        y1: 0,
    };
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let (mut ux, mut uy) = (0.0, 0.0);
    let mut perimeter = 0usize;
    let raw = diff.as_raw();
    for &i in pixels {
        let (x, y) = (i % w, i / w);
        bbox.x0 = bbox.x0.min(x);
        bbox.y0 = bbox.y0.min(y);
        bbox.x1 = bbox.x1.max(x);
        bbox.y1 = bbox.y1.max(y);
        let wgt = raw[i] as f64;
        sw += wgt;
        sx += wgt * x as f64;
        sy += wgt * y as f64;
        ux += x as f64;
        uy += y as f64;
        let exposed = |nx: isize, ny: isize| {
            nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize || !bits[ny as usize * w + nx as usize]
        };
        let (xi, yi) = (x as isize, y as isize);
        perimeter += [(xi - 1, yi), (xi + 1, yi), (xi, yi - 1), (xi, yi + 1)]
            .into_iter()
            .filter(|&(nx, ny)| exposed(nx, ny))
            .count();
    }
    let area = pixels.len();
    let centroid = if sw > 0.0 {
        Point::new(sx / sw, sy / sw)
    } else {
        Point::new(ux / area as f64, uy / area as f64)
    };
    let circularity = (4.0 * PI * area as f64 / (perimeter * perimeter) as f64).clamp(0.0, 1.0);
    Blob {
        area,
        centroid,
        bbox,
        circularity,
    }
}

/// Picks the most plausible pupil pair among size/shape-admissible blobs,
/// falling back to the largest admissible blob alone.
pub fn select_pupils(blobs: &[Blob], c: &PupilConstraints, t: f64) -> PupilObservation {
    let admissible: Vec<&Blob> = blobs
        .iter()
        .filter(|b| b.area >= c.min_area && b.area <= c.max_area && b.circularity >= c.min_circularity)
        .collect();

    let mut best: Option<(usize, f64, &Blob, &Blob)> = None;
    for (i, a) in admissible.iter().enumerate() {
        for b in &admissible[i + 1..] {
            let (l, r) = if a.centroid.x <= b.centroid.x { (*a, *b) } else { (*b, *a) };
            let sep = r.centroid.x - l.centroid.x;
            let skew = (r.centroid.y - l.centroid.y).abs();
            if sep < c.min_separation || sep > c.max_separation || skew > c.max_vertical_skew {
                continue;
            }
            let total = l.area + r.area;
            let better = match best {
                None => true,
                Some((bt, bx, _, _)) => total > bt || (total == bt && l.centroid.x < bx),
            };
            if better {
                best = Some((total, l.centroid.x, l, r));
            }
        }
    }

    let to_meas = |b: &Blob| PupilMeasurement {
        centroid: b.centroid,
        area: b.area,
    };
    if let Some((_, _, l, r)) = best {
        return PupilObservation {
            t,
            left: Some(to_meas(l)),
            right: Some(to_meas(r)),
            confidence: 1.0,
        };
    }
    // `blobs` is area-sorted, so the first admissible one is the largest.
    match admissible.first() {
        Some(b) => PupilObservation {
            t,
            left: Some(to_meas(b)),
            right: None,
            confidence: 0.5,
        },
        None => PupilObservation::empty(t),
    }
}

/// Full detection chain for one field pair.
pub fn detect(pair: &FramePair, tau: u8, c: &PupilConstraints) -> Result<PupilObservation> {
    let diff = difference_image(pair)?;
    let bin = threshold(&diff, tau);
    let blobs = connected_components(&bin, &diff)?;
    Ok(select_pupils(&blobs, c, pair.t))
}

#[derive(Deserialize)]
struct ObservationRow {
    t: f64,
    left_x: Option<f64>,
    left_y: Option<f64>,
    right_x: Option<f64>,
    right_y: Option<f64>,
    confidence: f64,
    #[serde(default)]
    left_area: Option<f64>,
    #[serde(default)]
    right_area: Option<f64>,
}

/// Observations parsed from CSV, with whether pupil areas were present.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    pub rows: Vec<PupilObservation>,
    pub has_area: bool,
}

/// Reads observation CSV rows. Optional `left_area`/`right_area` columns
/// carry pupil areas; without them areas read as zero.
pub fn read_observations(reader: impl std::io::Read) -> Result<ObservationTable> {
    let mut rdr = csv::Reader::from_reader(reader);
    let has_area = {
        let h = rdr.headers()?;
        h.iter().any(|c| c == "left_area") && h.iter().any(|c| c == "right_area")
    };
    let mut rows = Vec::new();
    for rec in rdr.deserialize() {
        let r: ObservationRow = rec?;
        let side = |x: Option<f64>, y: Option<f64>, a: Option<f64>| {
            Some(PupilMeasurement {
                centroid: Point::new(x?, y?),
                area: a.unwrap_or(0.0).max(0.0).round() as usize,
            })
        };
        rows.push(PupilObservation {
            t: r.t,
            left: side(r.left_x, r.left_y, r.left_area),
            right: side(r.right_x, r.right_y, r.right_area),
            confidence: r.confidence,
        });
    }
    Ok(ObservationTable { rows, has_area })
}
