//! Ground-plane occupancy bitmask.
//!
//! Cell `(col, row)` covers `[x0 + col·δ, x0 + (col+1)·δ) × [y0 + row·δ, …)`.
//! Rasterization is conservative: a cell is set when its open square
//! intersects the interior of the shape. Shapes that only touch a cell
//! along an edge or at a corner do not claim it.

use serde::{Deserialize, Serialize};

use crate::geometry::{box_corners, Bounds, Point};

/// Relative slack (in cells) used when deciding whether a coordinate sits
/// on a grid line.
const GRID_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RasterSpec {
    pub origin_x: f64,
    pub origin_y: f64,
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl RasterSpec {
    pub fn new(origin_x: f64, origin_y: f64, resolution: f64, width: usize, height: usize) -> Self {
        assert!(resolution > 0.0, "raster resolution must be positive");
        RasterSpec {
            origin_x,
            origin_y,
            resolution,
            width,
            height,
        }
    }

    /// Smallest spec covering `bounds` whose origin lies on the global
    /// `resolution` lattice, so specs built for different frames align.
    pub fn covering(bounds: &Bounds, resolution: f64) -> Self {
        let ix0 = (bounds.min[0] / resolution).floor();
        let iy0 = (bounds.min[1] / resolution).floor();
        let ix1 = (bounds.max[0] / resolution).ceil();
        let iy1 = (bounds.max[1] / resolution).ceil();
        RasterSpec::new(
            ix0 * resolution,
            iy0 * resolution,
            resolution,
            ((ix1 - ix0) as usize).max(1),
            ((iy1 - iy0) as usize).max(1),
        )
    }

    pub fn words_per_row(&self) -> usize {
        self.width.div_ceil(64)
    }

    pub fn cell_area(&self) -> f64 {
        self.resolution * self.resolution
    }

    pub fn extent(&self) -> Bounds {
        Bounds {
            min: [self.origin_x, self.origin_y],
            max: [
                self.origin_x + self.width as f64 * self.resolution,
                self.origin_y + self.height as f64 * self.resolution,
            ],
        }
    }

    pub fn cell_center(&self, col: usize, row: usize) -> Point {
        [
            self.origin_x + (col as f64 + 0.5) * self.resolution,
            self.origin_y + (row as f64 + 0.5) * self.resolution,
        ]
    }

    fn col_f(&self, x: f64) -> f64 {
        (x - self.origin_x) / self.resolution
    }

    fn row_f(&self, y: f64) -> f64 {
        (y - self.origin_y) / self.resolution
    }
}

/// Half-open run of cells `[c0, c1)` in one row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub row: usize,
    pub c0: usize,
    pub c1: usize,
}

/// Cells covered by a shape, already clipped to the raster.
#[derive(Debug, Clone, Default)]
pub struct Coverage {
    pub spans: Vec<Span>,
    /// Part of the shape fell outside the raster extent.
    pub clipped: bool,
}

impl Coverage {
    pub fn clear(&mut self) {
        self.spans.clear();
        self.clipped = false;
    }

    pub fn cell_count(&self) -> usize {
        self.spans.iter().map(|s| s.c1 - s.c0).sum()
    }

    /// Pushes the unclipped column range `[lo, hi)` for `row`.
    fn push(&mut self, spec: &RasterSpec, row: i64, lo: i64, hi: i64) {
        if hi <= lo {
            return;
        }
        if row < 0 || row >= spec.height as i64 {
            self.clipped = true;
            return;
        }
        let c0 = lo.max(0);
        let c1 = hi.min(spec.width as i64);
        if c0 != lo || c1 != hi {
            self.clipped = true;
        }
        if c1 > c0 {
            self.spans.push(Span {
                row: row as usize,
                c0: c0 as usize,
                c1: c1 as usize,
            });
        }
    }
}

fn first_cell(f: f64) -> i64 {
    (f + GRID_EPS).floor() as i64
}

fn end_cell(f: f64) -> i64 {
    (f - GRID_EPS).ceil() as i64
}

/// x-range of segment `p`-`q` inside the horizontal band `[ylo, yhi]`.
fn clip_edge_to_band(p: Point, q: Point, ylo: f64, yhi: f64) -> Option<(f64, f64)> {
    let (pmin, pmax) = if p[1] <= q[1] { (p, q) } else { (q, p) };
    if pmax[1] < ylo || pmin[1] > yhi {
        return None;
    }
    let dy = pmax[1] - pmin[1];
    if dy <= 1e-12 {
        return Some((p[0].min(q[0]), p[0].max(q[0])));
    }
    let x_at = |y: f64| pmin[0] + (y - pmin[1]) / dy * (pmax[0] - pmin[0]);
    let xa = x_at(ylo.max(pmin[1]));
    let xb = x_at(yhi.min(pmax[1]));
    Some((xa.min(xb), xa.max(xb)))
}

/// Conservative coverage of a convex polygon.
pub fn convex_coverage(spec: &RasterSpec, poly: &[Point], out: &mut Coverage) {
    out.clear();
    let b = Bounds::of_points(poly);
    let r0 = first_cell(spec.row_f(b.min[1]));
    let r1 = end_cell(spec.row_f(b.max[1]));
    let n = poly.len();
    let band_eps = GRID_EPS * spec.resolution;
    for row in r0..r1 {
        let ylo = spec.origin_y + row as f64 * spec.resolution + band_eps;
        let yhi = spec.origin_y + (row + 1) as f64 * spec.resolution - band_eps;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            if let Some((a, c)) = clip_edge_to_band(poly[i], poly[(i + 1) % n], ylo, yhi) {
                lo = lo.min(a);
                hi = hi.max(c);
            }
        }
        if lo <= hi {
            let c0 = first_cell(spec.col_f(lo));
            let c1 = end_cell(spec.col_f(hi));
            out.push(spec, row, c0, c1);
        }
    }
}

/// Conservative coverage of an oriented rectangle grown by `padding` on
/// every side.
#[allow(clippy::too_many_arguments)]
pub fn box_coverage(
    spec: &RasterSpec,
    cx: f64,
    cy: f64,
    yaw: f64,
    length: f64,
    width: f64,
    padding: f64,
    out: &mut Coverage,
) {
    let corners = box_corners(cx, cy, yaw, length + 2.0 * padding, width + 2.0 * padding);
    convex_coverage(spec, &corners, out);
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundRaster {
    spec: RasterSpecKey,
    bits: Vec<u64>,
}

/// `RasterSpec` with bitwise float comparison so rasters can be `Eq`.
#[derive(Debug, Clone, Copy)]
struct RasterSpecKey(RasterSpec);

impl PartialEq for RasterSpecKey {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (&self.0, &other.0);
        a.origin_x.to_bits() == b.origin_x.to_bits()
            && a.origin_y.to_bits() == b.origin_y.to_bits()
            && a.resolution.to_bits() == b.resolution.to_bits()
            && a.width == b.width
            && a.height == b.height
    }
}

impl Eq for RasterSpecKey {}

impl std::hash::Hash for RasterSpecKey {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.origin_x.to_bits().hash(state);
        self.0.origin_y.to_bits().hash(state);
        self.0.resolution.to_bits().hash(state);
        self.0.width.hash(state);
        self.0.height.hash(state);
    }
}

fn run_mask(c0: usize, c1: usize) -> u64 {
    // bits [c0, c1) within one word, c1 <= 64
    let hi = if c1 >= 64 { u64::MAX } else { (1u64 << c1) - 1 };
    let lo = (1u64 << c0) - 1;
    hi & !lo
}

impl GroundRaster {
    pub fn empty(spec: RasterSpec) -> Self {
        GroundRaster {
            bits: vec![0; spec.words_per_row() * spec.height],
            spec: RasterSpecKey(spec),
        }
    }

    pub fn full(spec: RasterSpec) -> Self {
        let mut r = GroundRaster::empty(spec);
        for row in 0..spec.height {
            r.set_run(row, 0, spec.width);
        }
        r
    }

    pub fn spec(&self) -> &RasterSpec {
        &self.spec.0
    }

    fn check_same(&self, other: &GroundRaster) {
        assert!(
            self.spec == other.spec,
            "raster spec mismatch: {:?} vs {:?}",
            self.spec.0,
            other.spec.0
        );
    }

    fn index(&self, col: usize, row: usize) -> (usize, u64) {
        let wpr = self.spec.0.words_per_row();
        (row * wpr + col / 64, 1u64 << (col % 64))
    }

    pub fn get(&self, col: usize, row: usize) -> bool {
        let (w, m) = self.index(col, row);
        self.bits[w] & m != 0
    }

    pub fn set(&mut self, col: usize, row: usize) {
        let (w, m) = self.index(col, row);
        self.bits[w] |= m;
    }

    fn set_run(&mut self, row: usize, c0: usize, c1: usize) {
        let base = row * self.spec.0.words_per_row();
        let mut c = c0;
        while c < c1 {
            let w = c / 64;
            let end = ((w + 1) * 64).min(c1);
            self.bits[base + w] |= run_mask(c % 64, end - w * 64);
            c = end;
        }
    }

    fn run_words(&self, row: usize, c0: usize, c1: usize) -> impl Iterator<Item = (u64, u64)> + '_ {
        let base = row * self.spec.0.words_per_row();
        let mut c = c0;
        std::iter::from_fn(move || {
            if c >= c1 {
                return None;
            }
            let w = c / 64;
            let end = ((w + 1) * 64).min(c1);
            let m = run_mask(c % 64, end - w * 64);
            c = end;
            Some((self.bits[base + w], m))
        })
    }

    pub fn set_coverage(&mut self, cov: &Coverage) {
        for s in &cov.spans {
            self.set_run(s.row, s.c0, s.c1);
        }
    }

    /// Every covered cell is set here (and nothing was clipped away).
    pub fn contains_coverage(&self, cov: &Coverage) -> bool {
        !cov.clipped
            && cov.spans.iter().all(|s| {
                self.run_words(s.row, s.c0, s.c1)
                    .all(|(word, m)| word & m == m)
            })
    }

    /// Any covered cell is set here.
    pub fn intersects_coverage(&self, cov: &Coverage) -> bool {
        cov.spans.iter().any(|s| {
            self.run_words(s.row, s.c0, s.c1)
                .any(|(word, m)| word & m != 0)
        })
    }

    pub fn from_coverage(spec: RasterSpec, cov: &Coverage) -> Self {
        let mut r = GroundRaster::empty(spec);
        r.set_coverage(cov);
        r
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn area_m2(&self) -> f64 {
        self.count() as f64 * self.spec.0.cell_area()
    }

    /// True iff the two masks share a set cell. Panics on mismatched specs.
    pub fn overlaps(&self, other: &GroundRaster) -> bool {
        self.check_same(other);
        self.bits.iter().zip(&other.bits).any(|(a, b)| a & b != 0)
    }

    /// Bitwise OR of `src` into `self`. Panics on mismatched specs.
    pub fn union_into(&mut self, src: &GroundRaster) {
        self.check_same(src);
        for (d, s) in self.bits.iter_mut().zip(&src.bits) {
            *d |= *s;
        }
    }

    pub fn intersection_count(&self, other: &GroundRaster) -> usize {
        self.check_same(other);
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn is_subset_of(&self, other: &GroundRaster) -> bool {
        self.check_same(other);
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    /// Chebyshev dilation by `cells`.
    pub fn dilate(&self, cells: usize) -> GroundRaster {
        let spec = *self.spec();
        let mut out = GroundRaster::empty(spec);
        for (col, row) in self.iter_set() {
            let r0 = row.saturating_sub(cells);
            let r1 = (row + cells + 1).min(spec.height);
            let c0 = col.saturating_sub(cells);
            let c1 = (col + cells + 1).min(spec.width);
            for r in r0..r1 {
                out.set_run(r, c0, c1);
            }
        }
        out
    }

    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let wpr = self.spec.0.words_per_row();
        self.bits.iter().enumerate().flat_map(move |(i, &w)| {
            let row = i / wpr;
            let base = (i % wpr) * 64;
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    return None;
                }
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                Some((base + b, row))
            })
        })
    }

    /// Maximal horizontal runs of set cells, row by row.
    pub fn row_runs(&self) -> Vec<Span> {
        let spec = self.spec();
        let mut runs = Vec::new();
        for row in 0..spec.height {
            let mut col = 0;
            while col < spec.width {
                if self.get(col, row) {
                    let start = col;
                    while col < spec.width && self.get(col, row) {
                        col += 1;
                    }
                    runs.push(Span {
                        row,
                        c0: start,
                        c1: col,
                    });
                } else {
                    col += 1;
                }
            }
        }
        runs
    }

    /// Binary PGM (P5), north up, 0 = free, 255 = set.
    pub fn to_pgm(&self) -> Vec<u8> {
        let spec = self.spec();
        let mut out = format!("P5\n{} {}\n255\n", spec.width, spec.height).into_bytes();
        out.reserve(spec.width * spec.height);
        for row in (0..spec.height).rev() {
            for col in 0..spec.width {
                out.push(if self.get(col, row) { 255 } else { 0 });
            }
        }
        out
    }
}

/// Conservative rasterization of an oriented box; cells outside the raster
/// are dropped.
pub fn rasterize_box(
    spec: &RasterSpec,
    center: Point,
    yaw: f64,
    length: f64,
    width: f64,
    padding: f64,
) -> GroundRaster {
    let mut cov = Coverage::default();
    box_coverage(
        spec, center[0], center[1], yaw, length, width, padding, &mut cov,
    );
    GroundRaster::from_coverage(*spec, &cov)
}

/// Conservative rasterization of a simple (possibly non-convex) polygon:
/// cells crossed by an edge plus cells whose center is inside.
pub fn rasterize_polygon(spec: &RasterSpec, poly: &[Point]) -> GroundRaster {
    let mut out = GroundRaster::empty(*spec);
    if poly.len() < 3 {
        return out;
    }
    let n = poly.len();
    let h = spec.height as i64;
    let w = spec.width as i64;
    let band_eps = GRID_EPS * spec.resolution;
    let mut crossings: Vec<Vec<f64>> = vec![Vec::new(); spec.height];

    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let ymin = p[1].min(q[1]);
        let ymax = p[1].max(q[1]);
        let r0 = first_cell(spec.row_f(ymin)).max(0);
        let r1 = end_cell(spec.row_f(ymax)).min(h);
        for row in r0..r1 {
            let ylo = spec.origin_y + row as f64 * spec.resolution;
            let yhi = ylo + spec.resolution;
            if let Some((a, c)) = clip_edge_to_band(p, q, ylo + band_eps, yhi - band_eps) {
                let c0 = first_cell(spec.col_f(a)).max(0);
                let c1 = end_cell(spec.col_f(c)).min(w);
                if c1 > c0 {
                    out.set_run(row as usize, c0 as usize, c1 as usize);
                }
            }
            // scanline through the row's cell centers, half-open in y
            let yc = ylo + 0.5 * spec.resolution;
            if (p[1] > yc) != (q[1] > yc) {
                let x = p[0] + (yc - p[1]) / (q[1] - p[1]) * (q[0] - p[0]);
                crossings[row as usize].push(x);
            }
        }
    }

    for (row, xs) in crossings.iter_mut().enumerate() {
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            let c0 = (spec.col_f(pair[0]) - 0.5).ceil().max(0.0) as i64;
            let c1 = ((spec.col_f(pair[1]) - 0.5).floor() as i64 + 1).min(w);
            if c1 > c0 {
                out.set_run(row, c0 as usize, c1 as usize);
            }
        }
    }
    out
}
