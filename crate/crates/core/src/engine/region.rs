//! Two-dimensional support regions: membership grid and level-set contour.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{evaluate_curve, BffModel, GridSpec};
use crate::{Error, Result};

/// `{(theta0, tau0) : BF01 >= k}` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportRegion {
    pub level: f64,
    pub axes: [Vec<f64>; 2],
    /// Membership per grid point, first axis slowest.
    pub inside: Vec<bool>,
    /// Polylines of the `ln BF01 = ln k` contour from marching squares with
    /// linear interpolation. Closed curves repeat their first point at the end.
    pub contours: Vec<Vec<[f64; 2]>>,
}

impl SupportRegion {
    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    /// Between `(i, j)` and `(i + 1, j)`.
    AlongFirst(usize, usize),
    /// Between `(i, j)` and `(i, j + 1)`.
    AlongSecond(usize, usize),
}

pub fn support_region_2d<M: BffModel + ?Sized>(model: &M, k: f64, grid: &GridSpec) -> Result<SupportRegion> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(alloc::format!("support level k must be positive and finite, got {k}")));
    }
    if grid.dim() != 2 {
        return Err(Error::domain("support regions need a two-dimensional grid"));
    }
    let curve = evaluate_curve(model, grid)?;
    let log_k = k.ln();
    let n = grid.points_per_dim;
    let axes = [grid.axis(0), grid.axis(1)];
    let g: Vec<Option<f64>> = curve.log_bf.iter().map(|v| v.map(|v| v - log_k)).collect();
    let inside: Vec<bool> = g.iter().map(|v| v.is_some_and(|v| v >= 0.0)).collect();
    let at = |i: usize, j: usize| i * n + j;

    let point_on = |e: Edge| -> [f64; 2] {
        let (a, b) = match e {
            Edge::AlongFirst(i, j) => ((i, j), (i + 1, j)),
            Edge::AlongSecond(i, j) => ((i, j), (i, j + 1)),
        };
        let t = match (g[at(a.0, a.1)], g[at(b.0, b.1)]) {
            (Some(ga), Some(gb)) if ga != gb => (ga / (ga - gb)).clamp(0.0, 1.0),
            _ => 0.5,
        };
        [
            axes[0][a.0] + t * (axes[0][b.0] - axes[0][a.0]),
            axes[1][a.1] + t * (axes[1][b.1] - axes[1][a.1]),
        ]
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            let ins = c.map(|idx| inside[idx]);
            let e = [
                Edge::AlongFirst(i, j),
                Edge::AlongSecond(i + 1, j),
                Edge::AlongFirst(i, j + 1),
                Edge::AlongSecond(i, j),
            ];
            // edge m joins corners m and m+1 (mod 4)
            let crossing: Vec<usize> = (0..4).filter(|&m| ins[m] != ins[(m + 1) % 4]).collect();
            match crossing.len() {
                2 => segments.push((e[crossing[0]], e[crossing[1]])),
                4 => {
                    let vals: Vec<f64> = c.iter().filter_map(|&idx| g[idx]).collect();
                    let center_inside = !vals.is_empty() && vals.iter().sum::<f64>() / vals.len() as f64 >= 0.0;
                    // isolate the two corners whose membership differs from the centre
                    let isolated: [usize; 2] = if ins[0] != center_inside { [0, 2] } else { [1, 3] };
                    for corner in isolated {
                        segments.push((e[(corner + 3) % 4], e[corner]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut by_edge: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        by_edge.entry(a).or_default().push(s);
        by_edge.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut contours = Vec::new();
    // open curves start at edges on the grid boundary (degree 1); then closed loops
    let mut seeds: Vec<(Edge, usize)> = by_edge
        .iter()
        .filter(|(_, s)| s.len() == 1)
        .map(|(e, s)| (*e, s[0]))
        .collect();
    seeds.extend(segments.iter().enumerate().map(|(s, &(a, _))| (a, s)));
    for (start_edge, start_seg) in seeds {
        if used[start_seg] {
            continue;
        }
        let mut line = vec![point_on(start_edge)];
        let (mut edge, mut seg) = (start_edge, start_seg);
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next_edge = if a == edge { b } else { a };
            line.push(point_on(next_edge));
            edge = next_edge;
            match by_edge[&edge].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        contours.push(line);
    }

    Ok(SupportRegion { level: k, axes, inside, contours })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Bounds, FnModel};

    #[test]
    fn disc_contour() {
        // ln BF = 1 - r^2 ; k = 1 gives the unit circle
        let m = FnModel::new("disc", vec![Bounds::REAL, Bounds::REAL], |t: &[f64]| Ok(1.0 - t[0] * t[0] - t[1] * t[1]));
        let g = GridSpec::new(vec![-2.0, -2.0], vec![2.0, 2.0], 81).unwrap();
        let r = support_region_2d(&m, 1.0, &g).unwrap();
        assert_eq!(r.contours.len(), 1);
        let c = &r.contours[0];
        assert_eq!(c.first(), c.last());
        for p in c {
            let rad = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((rad - 1.0).abs() < 2e-3, "{rad}");
        }
        let area = r.inside.iter().filter(|&&b| b).count() as f64 * 0.05 * 0.05;
        assert!((area - core::f64::consts::PI).abs() < 0.1);
    }

    #[test]
    fn above_maximum_is_empty() {
        let m = FnModel::new("disc", vec![Bounds::REAL, Bounds::REAL], |t: &[f64]| Ok(-t[0] * t[0] - t[1] * t[1]));
        let g = GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 11).unwrap();
        let r = support_region_2d(&m, 2.0, &g).unwrap();
        assert!(r.is_empty() && r.contours.is_empty());
    }

    #[test]
    fn half_plane_is_open_polyline() {
        let m = FnModel::new("ramp", vec![Bounds::REAL, Bounds::REAL], |t: &[f64]| Ok(t[0] - 0.25));
        let g = GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 9).unwrap();
        let r = support_region_2d(&m, 1.0, &g).unwrap();
        assert_eq!(r.contours.len(), 1);
        assert!(r.contours[0].iter().all(|p| (p[0] - 0.25).abs() < 1e-12));
        assert_eq!(r.contours[0].len(), 9);
    }
}
