use serde::{Deserialize, Serialize};

use crate::ink::{min_stroke_distance, Observable, StrokeSet};

/// The grouping feature vector of a candidate stroke group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupFeatures {
    pub d: f64,
    pub l_in: f64,
    pub c_in: f64,
    pub l_out: f64,
    pub c_out: f64,
}

pub const ALPHA: f64 = 0.9;
pub const BETA: f64 = 0.9;

/// G(o): how plausible it is that the strokes form a single symbol.
pub fn grouping_score(f: &GroupFeatures, lambda: f64, alpha: f64, beta: f64) -> f64 {
    debug_assert!(lambda > 0.0);
    let not_dist = (1.0 - (-f.d / lambda).exp()).powf(alpha);
    let not_x_in = (1.0 - f.l_in * (1.0 - f.c_in)).powf(1.0 - alpha);
    let not_x_out = 1.0 - f.l_out * (1.0 - f.c_in.max(f.c_out));
    let g = (1.0 - not_dist * not_x_in).max(0.0).powf(beta) * not_x_out.max(0.0).powf(1.0 - beta);
    g.clamp(0.0, 1.0)
}

/// Per-input cache of stroke distances, overlaps and container resemblance.
#[derive(Debug, Clone)]
pub struct GroupingContext {
    n: usize,
    dist: Vec<f64>,
    overlap: Vec<f64>,
    container: Vec<f64>,
    obs: Observable,
}

impl GroupingContext {
    /// `container[s]` is C(s) in [0, 1] for every stroke.
    pub fn new(obs: &Observable, container: Vec<f64>) -> Self {
        let n = obs.len();
        assert_eq!(container.len(), n);
        let mut dist = vec![0.0; n * n];
        let mut overlap = vec![0.0; n * n];
        for a in 0..n {
            for b in a + 1..n {
                let d = min_stroke_distance(obs.stroke(a), obs.stroke(b));
                let o = obs
                    .overlap(StrokeSet::single(a), StrokeSet::single(b))
                    .expect("non-empty");
                dist[a * n + b] = d;
                dist[b * n + a] = d;
                overlap[a * n + b] = o;
                overlap[b * n + a] = o;
            }
        }
        GroupingContext {
            n,
            dist,
            overlap,
            container,
            obs: obs.clone(),
        }
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n + b]
    }

    /// Largest edge of the minimum spanning tree over the members: the
    /// worst step of the best accretion order.
    fn spanning_radius(&self, g: StrokeSet) -> f64 {
        let members: Vec<usize> = g.iter().collect();
        let mut best: Vec<f64> = vec![f64::INFINITY; members.len()];
        let mut done = vec![false; members.len()];
        let mut radius: f64 = 0.0;
        let mut cur = 0;
        done[0] = true;
        for _ in 1..members.len() {
            for (k, &m) in members.iter().enumerate() {
                if !done[k] {
                    best[k] = best[k].min(self.distance(members[cur], m));
                }
            }
            let (next, d) = best
                .iter()
                .enumerate()
                .filter(|(k, _)| !done[*k])
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, &d)| (k, d))
                .unwrap();
            radius = radius.max(d);
            done[next] = true;
            cur = next;
        }
        radius
    }

    pub fn features(&self, g: StrokeSet) -> GroupFeatures {
        assert!(!g.is_empty());
        let d = self.spanning_radius(g);
        let mut l_in: f64 = 0.0;
        let mut c_in: f64 = 0.0;
        for a in g.iter() {
            c_in = c_in.max(self.container[a]);
            for b in g.iter().filter(|&b| b > a) {
                l_in = l_in.max(self.overlap[a * self.n + b]);
            }
        }
        let mut l_out: f64 = 0.0;
        let mut c_arg = c_in;
        let outside = self.obs.all().difference(g);
        for s in outside.iter() {
            let o = self.obs.overlap(g, StrokeSet::single(s)).expect("non-empty");
            if o > l_out {
                l_out = o;
                c_arg = self.container[s];
            }
        }
        GroupFeatures {
            d,
            l_in,
            c_in,
            l_out,
            c_out: c_in.max(c_arg),
        }
    }
}
