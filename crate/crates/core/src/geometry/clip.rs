//! Union of occupancy polygons via trapezoid decomposition.
//!
//! The union of a set of simple polygons is returned as a collection of
//! simple polygons with pairwise disjoint interiors that covers exactly the
//! same point set. Inputs are first grouped into overlap-connected
//! components; isolated polygons pass through unchanged, every other
//! component is decomposed by a vertical sweep: slab boundaries at every
//! vertex and every pairwise edge crossing, interior bands per slab from
//! even-odd pairing, overlapping bands merged, and axis-adjacent trapezoids
//! with collinear rails re-joined so rectangle unions come back as
//! rectangles rather than slivers.

use super::point::{segment_crossing, Point2};
use super::polygon::Polygon;
use super::GEOM_EPS;
use crate::scalar::{real, Real};

/// Union of a set of polygons as disjoint-interior simple polygons.
///
/// Output order is deterministic: sorted by bounding-box minimum.
pub fn occupancy_union<T: Real>(polys: &[Polygon<T>]) -> Vec<Polygon<T>> {
    let polys = dedupe(polys);
    let n = polys.len();
    let mut seen = vec![false; n];
    let mut out: Vec<Polygon<T>> = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // Flood-fill the overlap graph.
        let mut component = vec![start];
        seen[start] = true;
        let mut cursor = 0;
        while cursor < component.len() {
            let i = component[cursor];
            cursor += 1;
            for j in 0..n {
                if !seen[j] && polys[i].intersects(&polys[j]) {
                    seen[j] = true;
                    component.push(j);
                }
            }
        }
        if component.len() == 1 {
            out.push(polys[start].clone());
        } else {
            let members: Vec<&Polygon<T>> = component.iter().map(|&i| &polys[i]).collect();
            out.extend(sweep_union(&members));
        }
    }
    out.sort_by(|a, b| {
        let (amin, _) = a.bounds();
        let (bmin, _) = b.bounds();
        (amin.x, amin.y)
            .partial_cmp(&(bmin.x, bmin.y))
            .expect("finite bounds")
    });
    out
}

/// Drop polygons that duplicate an earlier one vertex-for-vertex.
fn dedupe<T: Real>(polys: &[Polygon<T>]) -> Vec<Polygon<T>> {
    let eps = real::<T>(GEOM_EPS);
    let mut kept: Vec<Polygon<T>> = Vec::with_capacity(polys.len());
    'outer: for p in polys {
        for q in &kept {
            if same_ring(p, q, eps) {
                continue 'outer;
            }
        }
        kept.push(p.clone());
    }
    kept
}

fn same_ring<T: Real>(a: &Polygon<T>, b: &Polygon<T>, eps: T) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let key = |p: &Polygon<T>| {
        let mut v: Vec<Point2<T>> = p.vertices().to_vec();
        v.sort_by(|l, r| (l.x, l.y).partial_cmp(&(r.x, r.y)).expect("finite vertex"));
        v
    };
    key(a)
        .iter()
        .zip(key(b).iter())
        .all(|(l, r)| l.distance(*r) <= eps)
}

/// One trapezoid: vertical sides at `xl` / `xr`, linear rails between.
#[derive(Clone, Copy)]
struct Trap<T> {
    xl: T,
    xr: T,
    /// Rail y-values at (left, right) for the bottom and top.
    bot: (T, T),
    top: (T, T),
}

fn sweep_union<T: Real>(polys: &[&Polygon<T>]) -> Vec<Polygon<T>> {
    let eps = real::<T>(GEOM_EPS);

    // Slab boundaries: every vertex x plus every cross-polygon edge crossing.
    let mut xs: Vec<T> = Vec::new();
    for p in polys {
        xs.extend(p.vertices().iter().map(|v| v.x));
    }
    for (i, p) in polys.iter().enumerate() {
        for q in &polys[i + 1..] {
            for (a, b) in p.edges() {
                for (c, d) in q.edges() {
                    if let Some(x) = segment_crossing(a, b, c, d) {
                        xs.push(x.x);
                    }
                }
            }
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinate"));
    xs.dedup_by(|a, b| (*a - *b).abs() <= eps);

    let mut traps: Vec<Trap<T>> = Vec::new();
    // Indices into `traps` of the previous slab, for the horizontal merge.
    let mut prev_slab: Vec<usize> = Vec::new();

    for w in xs.windows(2) {
        let (xl, xr) = (w[0], w[1]);
        if xr - xl <= eps {
            continue;
        }
        // Interior bands of each polygon across this slab.
        let mut bands: Vec<((T, T), (T, T))> = Vec::new();
        for p in polys {
            let mut rails: Vec<(T, T)> = Vec::new();
            for (a, b) in p.edges() {
                if a.x.min(b.x) <= xl + eps && a.x.max(b.x) >= xr - eps {
                    let dx = b.x - a.x;
                    if dx.abs() <= eps {
                        continue; // vertical edge cannot span a slab
                    }
                    let y_at = |x: T| a.y + (b.y - a.y) * ((x - a.x) / dx);
                    rails.push((y_at(xl), y_at(xr)));
                }
            }
            rails.sort_by(|l, r| {
                (l.0 + l.1).partial_cmp(&(r.0 + r.1)).expect("finite rail")
            });
            debug_assert!(rails.len().is_multiple_of(2), "odd rail count across a slab");
            let mut it = rails.chunks_exact(2);
            for pair in &mut it {
                bands.push((pair[0], pair[1]));
            }
        }
        // Merge overlapping bands across polygons. Slab boundaries include
        // all crossings, so rails from different polygons do not cross inside
        // a slab and pointwise comparisons are order-safe.
        bands.sort_by(|l, r| {
            (l.0 .0 + l.0 .1).partial_cmp(&(r.0 .0 + r.0 .1)).expect("finite band")
        });
        let mut merged: Vec<((T, T), (T, T))> = Vec::new();
        for band in bands {
            match merged.last_mut() {
                Some(cur)
                    if band.0 .0 <= cur.1 .0 + eps && band.0 .1 <= cur.1 .1 + eps =>
                {
                    cur.1 .0 = cur.1 .0.max(band.1 .0);
                    cur.1 .1 = cur.1 .1.max(band.1 .1);
                }
                _ => merged.push(band),
            }
        }
        // Emit trapezoids, merging into the previous slab where the shared
        // side matches and both rails continue collinearly.
        let mut this_slab: Vec<usize> = Vec::new();
        for (bot, top) in merged {
            let trap = Trap { xl, xr, bot, top };
            let mut joined = false;
            for &idx in &prev_slab {
                let prev = &mut traps[idx];
                if (prev.xr - trap.xl).abs() <= eps
                    && (prev.bot.1 - trap.bot.0).abs() <= eps
                    && (prev.top.1 - trap.top.0).abs() <= eps
                    && collinear_rail(prev.xl, prev.bot.0, prev.xr, prev.bot.1, trap.xr, trap.bot.1, eps)
                    && collinear_rail(prev.xl, prev.top.0, prev.xr, prev.top.1, trap.xr, trap.top.1, eps)
                {
                    prev.xr = trap.xr;
                    prev.bot.1 = trap.bot.1;
                    prev.top.1 = trap.top.1;
                    this_slab.push(idx);
                    joined = true;
                    break;
                }
            }
            if !joined {
                traps.push(trap);
                this_slab.push(traps.len() - 1);
            }
        }
        prev_slab = this_slab;
    }

    traps
        .into_iter()
        .filter_map(|t| {
            Polygon::new(vec![
                Point2::new(t.xl, t.bot.0),
                Point2::new(t.xr, t.bot.1),
                Point2::new(t.xr, t.top.1),
                Point2::new(t.xl, t.top.0),
            ])
            .ok() // degenerate slivers vanish here
        })
        .collect()
}

/// Whether the rail through (x0,y0)-(x1,y1) continues straight to (x2,y2).
fn collinear_rail<T: Real>(x0: T, y0: T, x1: T, y1: T, x2: T, y2: T, eps: T) -> bool {
    let s01 = (y1 - y0) / (x1 - x0);
    let s12 = (y2 - y1) / (x2 - x1);
    (s01 - s12).abs() <= eps
}
