use crate::grammar::{Axis, Relation};
use crate::ink::{BBox, StrokeSet};

/// Stroke boxes of one input, used to order and cut subsets.
#[derive(Debug, Clone)]
pub struct Layout {
    boxes: Vec<BBox>,
}

impl Layout {
    pub fn new(boxes: Vec<BBox>) -> Self {
        Layout { boxes }
    }

    pub fn bbox(&self, set: StrokeSet) -> BBox {
        set.iter()
            .map(|i| self.boxes[i])
            .reduce(|a, b| a.union(&b))
            .expect("non-empty subset")
    }

    /// Members of `set` in cut order for `relation`: by box centre along the
    /// relation's axis, then along the other axis, then by id. Containment
    /// orders by left edge so the container comes first.
    pub fn order(&self, set: StrokeSet, relation: Relation) -> Vec<usize> {
        let mut ids: Vec<usize> = set.iter().collect();
        let key = |i: usize| {
            let b = &self.boxes[i];
            let c = b.center();
            match (relation, relation.axis()) {
                (Relation::Contain, _) => (b.left, c.y),
                (_, Axis::X) => (c.x, c.y),
                (_, Axis::Y) => (c.y, c.x),
            }
        };
        ids.sort_by(|&a, &b| {
            let (ka, kb) = (key(a), key(b));
            ka.0.total_cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(a.cmp(&b))
        });
        ids
    }
}

/// All ways to cut `n` ordered items into `k` non-empty contiguous runs, as
/// run lengths. There are C(n-1, k-1) of them.
pub fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == 1 {
            prefix.push(n);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 1..=n - (k - 1) {
            prefix.push(first);
            rec(n - first, k - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if k >= 1 && n >= k {
        rec(n, k, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// Overlap of two intervals relative to the shorter one.
fn interval_overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    let inter = a.1.min(b.1) - a.0.max(b.0);
    let shorter = (a.1 - a.0).min(b.1 - b.0);
    if inter <= 0.0 {
        0.0
    } else if shorter <= 0.0 {
        1.0
    } else {
        (inter / shorter).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutRules {
    /// Reject cuts whose adjacent runs overlap along the axis by more than
    /// this fraction; `None` keeps every cut.
    pub prune_overlap: Option<f64>,
    /// Minimum box overlap of the contained part with its container.
    pub contain_overlap: f64,
    /// Box padding for degenerate boxes.
    pub eps: f64,
}

/// The ordered partitions of `set` into `k` parts for `relation`.
pub fn partitions(layout: &Layout, set: StrokeSet, k: usize, relation: Relation, rules: &CutRules) -> Vec<Vec<StrokeSet>> {
    let order = layout.order(set, relation);
    let mut out = Vec::new();
    for lens in compositions(order.len(), k) {
        let mut parts = Vec::with_capacity(k);
        let mut at = 0;
        for len in lens {
            parts.push(order[at..at + len].iter().copied().collect::<StrokeSet>());
            at += len;
        }
        if relation == Relation::Contain {
            let (outer, inner) = (layout.bbox(parts[0]), layout.bbox(parts[1]));
            if inner.overlap(&outer, rules.eps) < rules.contain_overlap {
                continue;
            }
        }
        if let Some(limit) = rules.prune_overlap {
            let axis = relation.axis();
            let span = |b: BBox| match axis {
                Axis::X => (b.left, b.right),
                Axis::Y => (b.top, b.bottom),
            };
            let crowded = parts.windows(2).any(|w| {
                interval_overlap(span(layout.bbox(w[0])), span(layout.bbox(w[1]))) > limit
            });
            if crowded && relation != Relation::Contain {
                continue;
            }
        }
        out.push(parts);
    }
    out
}
