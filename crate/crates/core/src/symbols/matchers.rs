//! The four distance matchers compared by the symbol recognizer. All of
//! them work on ink normalized by [`SymbolFeatures::extract`].

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::ink::{BBox, Point};

/// Points per symbol for elastic matching.
pub const ELASTIC_POINTS: usize = 64;
/// Polynomial degree of the Legendre-Sobolev series, per coordinate.
pub const LS_DEGREE: usize = 10;
/// Sobolev weight on the derivative term.
pub const LS_MU: f64 = 0.125;
/// Raster resolution used for the Hausdorff matcher.
pub const RASTER: usize = 24;

const LS_INTERVALS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Matcher {
    Elastic,
    LegendreSobolev,
    Hausdorff,
    Summary,
}

impl Matcher {
    pub const ALL: [Matcher; 4] = [
        Matcher::Elastic,
        Matcher::LegendreSobolev,
        Matcher::Hausdorff,
        Matcher::Summary,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Everything the matchers need about one ink sample, computed once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolFeatures {
    pub stroke_count: usize,
    /// Unit-box normalized strokes.
    pub strokes: Vec<Vec<Point>>,
    pub elastic: Vec<Point>,
    pub legendre: Vec<f64>,
    pub raster: Vec<Point>,
    pub summary: Vec<f64>,
}

/// Scales ink into a unit box centred on the origin, keeping aspect ratio.
pub fn normalize(strokes: &[Vec<Point>]) -> (Vec<Vec<Point>>, BBox) {
    let bbox = BBox::of_points(strokes.iter().flatten().copied()).expect("non-empty ink");
    let size = bbox.width().max(bbox.height());
    let scale = if size > 0.0 { 1.0 / size } else { 1.0 };
    let c = bbox.center();
    let out = strokes
        .iter()
        .map(|s| {
            s.iter()
                .map(|p| Point::new((p.x - c.x) * scale, (p.y - c.y) * scale))
                .collect()
        })
        .collect();
    (out, bbox)
}

fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Resamples a polyline to `n` points equally spaced in arc length.
pub fn resample(points: &[Point], n: usize) -> Vec<Point> {
    assert!(n >= 2 && !points.is_empty());
    let total = polyline_length(points);
    if total == 0.0 {
        return vec![points[0]; n];
    }
    let step = total / (n - 1) as f64;
    let mut out = Vec::with_capacity(n);
    out.push(points[0]);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 1..n - 1 {
        let target = step * k as f64;
        while seg + 1 < points.len() - 1
            && seg_start + points[seg].dist(points[seg + 1]) < target
        {
            seg_start += points[seg].dist(points[seg + 1]);
            seg += 1;
        }
        let (a, b) = (points[seg], points[seg + 1]);
        let len = a.dist(b);
        let t = if len > 0.0 {
            ((target - seg_start) / len).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(Point::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)));
    }
    out.push(*points.last().unwrap());
    out
}

impl SymbolFeatures {
    pub fn extract(strokes: &[Vec<Point>]) -> SymbolFeatures {
        let (norm, raw_box) = normalize(strokes);
        let concat: Vec<Point> = norm.iter().flatten().copied().collect();
        let elastic = resample(&concat, ELASTIC_POINTS);
        let legendre = norm.iter().flat_map(|s| legendre_coefficients(s)).collect();
        let raster = rasterize(&norm);
        let summary = summary_features(&norm, &raw_box);
        SymbolFeatures {
            stroke_count: strokes.len(),
            strokes: norm,
            elastic,
            legendre,
            raster,
            summary,
        }
    }

    /// Distance under one matcher. Stroke-count mismatches beyond what the
    /// matcher tolerates yield `+inf`.
    pub fn distance(&self, other: &SymbolFeatures, m: Matcher) -> f64 {
        match m {
            Matcher::Elastic => {
                if self.stroke_count.abs_diff(other.stroke_count) > 1 {
                    f64::INFINITY
                } else {
                    elastic_distance(&self.elastic, &other.elastic)
                }
            }
            Matcher::LegendreSobolev => {
                if self.stroke_count != other.stroke_count {
                    f64::INFINITY
                } else {
                    euclidean(&self.legendre, &other.legendre)
                }
            }
            Matcher::Hausdorff => hausdorff(&self.raster, &other.raster),
            Matcher::Summary => euclidean(&self.summary, &other.summary),
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Dynamic-time-warping alignment of two point sequences; the summed
/// Euclidean cost along the best path divided by the sequence length.
pub fn elastic_distance(a: &[Point], b: &[Point]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![f64::INFINITY; m];
    for i in 0..n {
        for j in 0..m {
            let c = a[i].dist(b[j]);
            let best = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[j],
                _ => prev[j].min(cur[j - 1]).min(prev[j - 1]),
            };
            cur[j] = c + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1] / n.max(m) as f64
}

/// Orthonormal basis for polynomials of degree <= LS_DEGREE under the
/// discretized Sobolev inner product, tabulated at interval midpoints as
/// (values, derivatives).
struct SobolevBasis {
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

fn sobolev_basis() -> &'static SobolevBasis {
    static BASIS: OnceLock<SobolevBasis> = OnceLock::new();
    BASIS.get_or_init(|| {
        let dt = 2.0 / LS_INTERVALS as f64;
        let mids: Vec<f64> = (0..LS_INTERVALS).map(|j| -1.0 + dt * (j as f64 + 0.5)).collect();
        // Legendre polynomials and their derivatives via the three-term recurrence
        let mut vals = vec![vec![0.0; LS_INTERVALS]; LS_DEGREE + 1];
        let mut ders = vec![vec![0.0; LS_INTERVALS]; LS_DEGREE + 1];
        for (j, &t) in mids.iter().enumerate() {
            let mut p = vec![0.0; LS_DEGREE + 1];
            let mut d = vec![0.0; LS_DEGREE + 1];
            p[0] = 1.0;
            if LS_DEGREE >= 1 {
                p[1] = t;
                d[1] = 1.0;
            }
            for k in 1..LS_DEGREE {
                let kf = k as f64;
                p[k + 1] = ((2.0 * kf + 1.0) * t * p[k] - kf * p[k - 1]) / (kf + 1.0);
                d[k + 1] = d[k - 1] + (2.0 * kf + 1.0) * p[k];
            }
            for k in 0..=LS_DEGREE {
                vals[k][j] = p[k];
                ders[k][j] = d[k];
            }
        }
        let inner = |av: &[f64], ad: &[f64], bv: &[f64], bd: &[f64]| -> f64 {
            (0..LS_INTERVALS)
                .map(|j| av[j] * bv[j] + LS_MU * ad[j] * bd[j])
                .sum::<f64>()
                * dt
        };
        // modified Gram-Schmidt
        let mut values: Vec<Vec<f64>> = Vec::new();
        let mut derivs: Vec<Vec<f64>> = Vec::new();
        for k in 0..=LS_DEGREE {
            let mut v = vals[k].clone();
            let mut d = ders[k].clone();
            for (bv, bd) in values.iter().zip(&derivs) {
                let c = inner(&v, &d, bv, bd);
                for j in 0..LS_INTERVALS {
                    v[j] -= c * bv[j];
                    d[j] -= c * bd[j];
                }
            }
            let norm = inner(&v, &d, &v, &d).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            d.iter_mut().for_each(|x| *x /= norm);
            values.push(v);
            derivs.push(d);
        }
        SobolevBasis { values, derivs }
    })
}

/// Coefficients of x(t) and y(t) (arc-length parametrized on [-1, 1]) in
/// the Sobolev-orthonormal polynomial basis; `2 * (LS_DEGREE + 1)` values.
pub fn legendre_coefficients(stroke: &[Point]) -> Vec<f64> {
    let basis = sobolev_basis();
    let samples = resample(stroke, LS_INTERVALS + 1);
    let dt = 2.0 / LS_INTERVALS as f64;
    let mut out = Vec::with_capacity(2 * (LS_DEGREE + 1));
    for coord in [|p: &Point| p.x, |p: &Point| p.y] {
        let f: Vec<f64> = samples.iter().map(coord).collect();
        for k in 0..=LS_DEGREE {
            let mut acc = 0.0;
            for j in 0..LS_INTERVALS {
                let mid = 0.5 * (f[j] + f[j + 1]);
                let slope = (f[j + 1] - f[j]) / dt;
                acc += mid * basis.values[k][j] + LS_MU * slope * basis.derivs[k][j];
            }
            out.push(acc * dt);
        }
    }
    out
}

/// Centres of the raster cells touched by normalized ink.
pub fn rasterize(strokes: &[Vec<Point>]) -> Vec<Point> {
    let cell = 1.0 / RASTER as f64;
    let mut filled = vec![false; RASTER * RASTER];
    let mut mark = |p: Point| {
        let cx = (((p.x + 0.5) / cell).floor() as isize).clamp(0, RASTER as isize - 1) as usize;
        let cy = (((p.y + 0.5) / cell).floor() as isize).clamp(0, RASTER as isize - 1) as usize;
        filled[cy * RASTER + cx] = true;
    };
    for s in strokes {
        mark(s[0]);
        for w in s.windows(2) {
            let steps = (w[0].dist(w[1]) / (0.25 * cell)).ceil().max(1.0) as usize;
            for k in 1..=steps {
                let t = k as f64 / steps as f64;
                mark(Point::new(
                    w[0].x + t * (w[1].x - w[0].x),
                    w[0].y + t * (w[1].y - w[0].y),
                ));
            }
        }
    }
    let mut out = Vec::new();
    for cy in 0..RASTER {
        for cx in 0..RASTER {
            if filled[cy * RASTER + cx] {
                out.push(Point::new(
                    -0.5 + (cx as f64 + 0.5) * cell,
                    -0.5 + (cy as f64 + 0.5) * cell,
                ));
            }
        }
    }
    out
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    fn directed(a: &[Point], b: &[Point]) -> f64 {
        a.iter()
            .map(|p| b.iter().map(|q| p.dist(*q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    directed(a, b).max(directed(b, a))
}

/// Aspect of the raw box, first/last pen positions, total arc length, and
/// the boxes of the first two strokes relative to the symbol.
fn summary_features(norm: &[Vec<Point>], raw: &BBox) -> Vec<f64> {
    let size = raw.width().max(raw.height());
    let (w, h) = if size > 0.0 {
        (raw.width() / size, raw.height() / size)
    } else {
        (0.0, 0.0)
    };
    let first = norm[0][0];
    let last = *norm.last().unwrap().last().unwrap();
    let arclength: f64 = norm.iter().map(|s| polyline_length(s)).sum();
    let mut v = vec![w, h, first.x, first.y, last.x, last.y, 0.25 * arclength];
    for k in 0..2 {
        match norm.get(k) {
            Some(s) => {
                let b = BBox::of_points(s.iter().copied()).unwrap();
                let c = b.center();
                v.extend([c.x, c.y, b.width(), b.height()]);
            }
            None => v.extend([0.0; 4]),
        }
    }
    v
}
