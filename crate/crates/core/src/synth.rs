//! Synthetic annotated corpora: expressions sampled from a grammar, laid
//! out in two dimensions and drawn with procedural glyphs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusItem;
use crate::error::{Error, Result};
use crate::glyphs;
use crate::grammar::{Grammar, NonterminalId, Relation, Symbol};
use crate::ink::{BBox, Observable, Point};
use crate::truth::TruthExpr;

/// Layout constants, in em units unless noted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LayoutConfig {
    pub gap: f64,
    /// Size of scripts relative to their base.
    pub script_scale: f64,
    /// Bottom of a superscript, as a fraction of base height from its top.
    pub super_raise: f64,
    /// Top of a subscript, as a fraction of base height from its top.
    pub sub_drop: f64,
    pub script_gap: f64,
    pub frac_gap: f64,
    pub frac_overhang: f64,
    /// Height of a fraction bar above the baseline.
    pub axis: f64,
    pub paren_pad: f64,
    pub paren_width: f64,
    pub root_hook: f64,
    pub root_pad: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            gap: 0.2,
            script_scale: 0.6,
            super_raise: 0.45,
            sub_drop: 0.6,
            script_gap: 0.06,
            frac_gap: 0.15,
            frac_overhang: 0.1,
            axis: 0.45,
            paren_pad: 0.1,
            paren_width: 0.3,
            root_hook: 0.55,
            root_pad: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub count: usize,
    /// Standard deviation of point jitter relative to symbol size; also
    /// enables per-symbol scale noise when positive.
    pub noise: f64,
    pub seed: u64,
    pub max_symbols: usize,
    pub max_strokes: usize,
    /// Relative weight of productions that cannot finish as fast as the
    /// shallowest alternative.
    pub branch: f64,
    pub max_depth: usize,
    pub scale_range: (f64, f64),
    pub layout: LayoutConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            count: 100,
            noise: 0.05,
            seed: 1,
            max_symbols: 6,
            max_strokes: 9,
            branch: 0.35,
            max_depth: 16,
            scale_range: (0.8, 1.25),
            layout: LayoutConfig::default(),
        }
    }
}

/// Shapes to draw terminals with.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSet {
    shapes: BTreeMap<String, Vec<Vec<Point>>>,
}

impl GlyphSet {
    pub fn builtin() -> Self {
        GlyphSet {
            shapes: glyphs::NAMES
                .iter()
                .chain(glyphs::LOOKALIKES.iter().map(|l| &l.0))
                .map(|n| (n.to_string(), glyphs::glyph(n).unwrap()))
                .collect(),
        }
    }

    pub fn new(shapes: BTreeMap<String, Vec<Vec<Point>>>) -> Self {
        GlyphSet { shapes }
    }

    pub fn get(&self, name: &str) -> Option<&Vec<Vec<Point>>> {
        self.shapes.get(name)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sampled {
    Leaf(String),
    Concat(Relation, Vec<Sampled>),
}

impl Sampled {
    fn symbols(&self) -> usize {
        match self {
            Sampled::Leaf(_) => 1,
            Sampled::Concat(_, k) => k.iter().map(|c| c.symbols()).sum(),
        }
    }

    fn strokes(&self, glyphs: &GlyphSet) -> usize {
        match self {
            Sampled::Leaf(s) => glyphs.get(s).map_or(1, |g| g.len()),
            Sampled::Concat(_, k) => k.iter().map(|c| c.strokes(glyphs)).sum(),
        }
    }
}

/// Minimum derivation depth of every nonterminal.
fn min_depths(g: &Grammar) -> Vec<usize> {
    let mut md = vec![usize::MAX; g.nonterminals().len()];
    loop {
        let mut changed = false;
        for p in g.productions() {
            let d = production_depth(p.rhs.iter(), &md);
            if d < md[p.lhs.0 as usize] {
                md[p.lhs.0 as usize] = d;
                changed = true;
            }
        }
        if !changed {
            return md;
        }
    }
}

fn production_depth<'a>(rhs: impl Iterator<Item = &'a Symbol>, md: &[usize]) -> usize {
    rhs.map(|s| match s {
        Symbol::T(_) => 0,
        Symbol::N(n) => md[n.0 as usize],
    })
    .max()
    .unwrap_or(0)
    .saturating_add(1)
}

struct Sampler<'a> {
    g: &'a Grammar,
    md: Vec<usize>,
    branch: f64,
}

impl Sampler<'_> {
    fn sample(&self, nt: NonterminalId, budget: usize, rng: &mut ChaCha8Rng) -> Option<Sampled> {
        let options: Vec<(f64, &crate::grammar::Production)> = self
            .g
            .productions_of(nt)
            .filter_map(|(_, p)| {
                let d = production_depth(p.rhs.iter(), &self.md);
                (d <= budget).then(|| (if d == self.md[nt.0 as usize] { 1.0 } else { self.branch }, p))
            })
            .collect();
        let total: f64 = options.iter().map(|o| o.0).sum();
        if options.is_empty() {
            return None;
        }
        let mut pick = rng.random::<f64>() * total;
        let mut chosen = options[options.len() - 1].1;
        for (w, p) in &options {
            if pick < *w {
                chosen = p;
                break;
            }
            pick -= w;
        }
        let mut kids = Vec::with_capacity(chosen.rhs.len());
        for s in &chosen.rhs {
            kids.push(match *s {
                Symbol::T(t) => Sampled::Leaf(self.g.terminal_name(t).to_string()),
                Symbol::N(n) => self.sample(n, budget - 1, rng)?,
            });
        }
        match chosen.relation {
            Some(r) if kids.len() > 1 => Some(Sampled::Concat(r, kids)),
            _ => kids.pop(),
        }
    }
}

/// Drawn leaves in truth order, with a local frame whose baseline is y = 0.
struct Laid {
    leaves: Vec<(String, Vec<Vec<Point>>)>,
    bbox: BBox,
}

impl Laid {
    fn shift(mut self, dx: f64, dy: f64) -> Laid {
        for (_, strokes) in &mut self.leaves {
            for s in strokes.iter_mut() {
                for q in s.iter_mut() {
                    q.x += dx;
                    q.y += dy;
                }
            }
        }
        self.bbox = BBox::new(self.bbox.left + dx, self.bbox.right + dx, self.bbox.top + dy, self.bbox.bottom + dy);
        self
    }

    fn width(&self) -> f64 {
        self.bbox.right - self.bbox.left
    }

    fn height(&self) -> f64 {
        self.bbox.bottom - self.bbox.top
    }

    fn join(parts: Vec<Laid>) -> Laid {
        let bbox = parts.iter().map(|p| p.bbox).reduce(|a, b| a.union(&b)).expect("non-empty");
        Laid {
            leaves: parts.into_iter().flat_map(|p| p.leaves).collect(),
            bbox,
        }
    }
}

fn bbox_of(strokes: &[Vec<Point>]) -> BBox {
    BBox::of_points(strokes.iter().flatten().copied()).expect("glyphs have points")
}

struct Renderer<'a> {
    glyphs: &'a GlyphSet,
    cfg: &'a SynthConfig,
    rng: ChaCha8Rng,
}

impl Renderer<'_> {
    fn jitter(&mut self, strokes: &mut [Vec<Point>], size: f64) {
        if self.cfg.noise <= 0.0 {
            return;
        }
        let n = Normal::new(0.0, self.cfg.noise * size).expect("finite noise");
        for q in strokes.iter_mut().flatten() {
            q.x += n.sample(&mut self.rng);
            q.y += n.sample(&mut self.rng);
        }
    }

    fn leaf(&mut self, name: &str, scale: f64) -> Laid {
        let mut k = scale;
        if self.cfg.noise > 0.0 {
            let (lo, hi) = self.cfg.scale_range;
            k *= self.rng.random_range(lo..=hi);
        }
        let mut strokes: Vec<Vec<Point>> = self.glyphs.get(name).expect("glyph coverage checked").clone();
        for q in strokes.iter_mut().flatten() {
            *q = Point::new(q.x * k, (q.y - 1.0) * k);
        }
        self.jitter(&mut strokes, k);
        Laid {
            bbox: bbox_of(&strokes),
            leaves: vec![(name.to_string(), strokes)],
        }
    }

    /// A glyph stretched onto `target`.
    fn fitted(&mut self, name: &str, target: BBox, size: f64) -> Laid {
        let mut strokes = self.glyphs.get(name).expect("glyph coverage checked").clone();
        let b = bbox_of(&strokes);
        let map = |v: f64, lo: f64, hi: f64, tlo: f64, thi: f64| {
            if hi > lo {
                tlo + (v - lo) / (hi - lo) * (thi - tlo)
            } else {
                0.5 * (tlo + thi)
            }
        };
        for q in strokes.iter_mut().flatten() {
            *q = Point::new(
                map(q.x, b.left, b.right, target.left, target.right),
                map(q.y, b.top, b.bottom, target.top, target.bottom),
            );
        }
        self.jitter(&mut strokes, size);
        Laid {
            bbox: bbox_of(&strokes),
            leaves: vec![(name.to_string(), strokes)],
        }
    }

    fn root(&mut self, content: &Laid, scale: f64) -> Laid {
        let l = &self.cfg.layout;
        let (c, s) = (content.bbox, scale);
        let left = c.left - l.root_hook * s;
        let top = c.top - l.root_pad * s;
        let bottom = c.bottom + 0.05 * s;
        let h = bottom - top;
        let mut strokes = vec![vec![
            Point::new(left, top + 0.7 * h),
            Point::new(left + 0.12 * s, top + 0.62 * h),
            Point::new(left + 0.3 * s, bottom),
            Point::new(left + 0.5 * s, top),
            Point::new(c.right + 0.1 * s, top),
        ]];
        self.jitter(&mut strokes, s);
        Laid {
            bbox: bbox_of(&strokes),
            leaves: vec![("sqrt".to_string(), strokes)],
        }
    }

    fn render(&mut self, e: &Sampled, scale: f64) -> Laid {
        let l = self.cfg.layout.clone();
        let Sampled::Concat(rel, kids) = e else {
            let Sampled::Leaf(name) = e else { unreachable!() };
            return self.leaf(name, scale);
        };
        let stretchy = |k: &Sampled| matches!(k, Sampled::Leaf(n) if glyphs::is_stretchy(n));
        match rel {
            Relation::Right => {
                let drawn: Vec<Option<Laid>> =
                    kids.iter().map(|k| (!stretchy(k)).then(|| self.render(k, scale))).collect();
                let (top, bottom) = drawn
                    .iter()
                    .flatten()
                    .fold((-scale, 0.0f64), |(t, b), d| (t.min(d.bbox.top), b.max(d.bbox.bottom)));
                let mut x = 0.0;
                let mut parts = Vec::new();
                for (k, d) in kids.iter().zip(drawn) {
                    let part = match d {
                        Some(d) => {
                            let dx = x - d.bbox.left;
                            d.shift(dx, 0.0)
                        }
                        None => {
                            let Sampled::Leaf(name) = k else { unreachable!() };
                            let pad = l.paren_pad * scale;
                            let target = BBox::new(x, x + l.paren_width * scale, top - pad, bottom + pad);
                            self.fitted(name, target, scale)
                        }
                    };
                    x = part.bbox.right + l.gap * scale;
                    parts.push(part);
                }
                Laid::join(parts)
            }
            Relation::Super | Relation::Sub => {
                let base = self.render(&kids[0], scale);
                let mut parts = vec![];
                let mut right = base.bbox.right;
                let (btop, bh) = (base.bbox.top, base.height());
                parts.push(base);
                for k in &kids[1..] {
                    let s = self.render(k, scale * l.script_scale);
                    let dx = right + l.script_gap * scale - s.bbox.left;
                    let dy = if *rel == Relation::Super {
                        btop + l.super_raise * bh - s.bbox.bottom
                    } else {
                        btop + l.sub_drop * bh - s.bbox.top
                    };
                    let s = s.shift(dx, dy);
                    right = s.bbox.right;
                    parts.push(s);
                }
                Laid::join(parts)
            }
            Relation::Below => {
                let is_bar = |k: &Sampled| matches!(k, Sampled::Leaf(n) if n == "-");
                let drawn: Vec<Option<Laid>> =
                    kids.iter().map(|k| (!is_bar(k)).then(|| self.render(k, scale))).collect();
                let w = drawn.iter().flatten().map(|d| d.width()).fold(0.0, f64::max) + 2.0 * l.frac_overhang * scale;
                let mut y = 0.0;
                let mut bar_y = None;
                let mut parts = Vec::new();
                for (k, d) in kids.iter().zip(drawn) {
                    let part = match d {
                        Some(d) => {
                            let (dx, dy) = ((w - d.width()) / 2.0 - d.bbox.left, y - d.bbox.top);
                            d.shift(dx, dy)
                        }
                        None => {
                            let Sampled::Leaf(name) = k else { unreachable!() };
                            bar_y.get_or_insert(y);
                            self.fitted(name, BBox::new(0.0, w, y, y), scale)
                        }
                    };
                    y = part.bbox.bottom + l.frac_gap * scale;
                    parts.push(part);
                }
                let all = Laid::join(parts);
                let anchor = bar_y.unwrap_or(0.5 * (all.bbox.top + all.bbox.bottom));
                all.shift(0.0, -l.axis * scale - anchor)
            }
            Relation::Contain => {
                let inner: Vec<Laid> = kids[1..].iter().map(|k| self.render(k, scale)).collect();
                let content = Laid::join(inner);
                let container = match &kids[0] {
                    Sampled::Leaf(n) if n == "sqrt" => self.root(&content, scale),
                    Sampled::Leaf(n) => {
                        let c = content.bbox;
                        let pad = l.root_pad * scale;
                        self.fitted(n, BBox::new(c.left - pad, c.right + pad, c.top - pad, c.bottom + pad), scale)
                    }
                    other => self.render(other, scale),
                };
                Laid::join(vec![container, content])
            }
        }
    }
}

fn to_truth(e: &Sampled, next: &mut usize, leaves: &[(String, Vec<Vec<Point>>)], at: &mut usize) -> TruthExpr {
    match e {
        Sampled::Leaf(name) => {
            let n = leaves[*at].1.len();
            *at += 1;
            let strokes = (*next..*next + n).collect();
            *next += n;
            TruthExpr::Symbol { symbol: name.clone(), strokes }
        }
        Sampled::Concat(relation, kids) => TruthExpr::Concat {
            relation: *relation,
            children: kids.iter().map(|k| to_truth(k, next, leaves, at)).collect(),
        },
    }
}

/// Samples `cfg.count` annotated expressions. Deterministic per seed.
pub fn synth_corpus(g: &Grammar, glyphs: &GlyphSet, cfg: &SynthConfig) -> Result<Vec<CorpusItem>> {
    let missing: Vec<&str> = g
        .terminals()
        .iter()
        .map(|t| t.name.as_str())
        .filter(|n| glyphs.get(n).is_none())
        .collect();
    if !missing.is_empty() {
        return Err(Error::Model(format!("no glyph for terminals {missing:?}")));
    }
    let sampler = Sampler { g, md: min_depths(g), branch: cfg.branch };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut renderer = Renderer {
        glyphs,
        cfg,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15),
    };
    let mut items = Vec::with_capacity(cfg.count);
    let mut attempts = 0usize;
    while items.len() < cfg.count {
        attempts += 1;
        if attempts > 1000 * (cfg.count + 1) {
            return Err(Error::Model("sampler cannot meet the size limits".into()));
        }
        let Some(e) = sampler.sample(g.start(), cfg.max_depth, &mut rng) else {
            continue;
        };
        if e.symbols() > cfg.max_symbols || e.strokes(glyphs) > cfg.max_strokes {
            continue;
        }
        let laid = renderer.render(&e, 1.0);
        let (mut next, mut at) = (0, 0);
        let truth = to_truth(&e, &mut next, &laid.leaves, &mut at);
        let strokes: Vec<Vec<Point>> = laid
            .leaves
            .into_iter()
            .flat_map(|(_, s)| s)
            .map(|s| s.into_iter().map(|q| Point::new(q.x - laid.bbox.left, q.y - laid.bbox.top)).collect())
            .collect();
        let observable = Observable::from_points(strokes)?;
        items.push(CorpusItem::from_expr(format!("synth_{:05}", items.len()), observable, truth));
    }
    Ok(items)
}
