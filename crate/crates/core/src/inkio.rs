//! Ink file formats.
//!
//! The native format is a JSON object:
//!
//! ```json
//! {
//!   "format": "inkgram-ink",
//!   "version": 1,
//!   "strokes": [[[0.0, 0.0], [1.0, 1.0]], [[2.0, 0.0]]],
//!   "truth": {
//!     "groups": [{"symbol": "x", "strokes": [0, 1]}],
//!     "expr": {"t": "x", "strokes": [0, 1]}
//!   }
//! }
//! ```
//!
//! `truth` is optional. Relation nodes of `expr` are written as
//! `{"rel": "right", "args": [...]}`.
//!
//! The InkML reader understands `<trace>` elements (extra channels beyond x
//! and y are ignored) and `<traceGroup>` elements annotated with
//! `<annotation type="truth">` that reference traces through `<traceView>`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ink::{Observable, Point};
use crate::truth::{SymbolGroup, Truth};

pub const NATIVE_FORMAT: &str = "inkgram-ink";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InkFormat {
    Native,
    InkMl,
}

impl InkFormat {
    /// Guesses from the file extension; anything other than `.inkml` is native.
    pub fn from_path(path: &Path) -> InkFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("inkml") => InkFormat::InkMl,
            _ => InkFormat::Native,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InkFile {
    pub observable: Observable,
    pub truth: Option<Truth>,
}

#[derive(Serialize, Deserialize)]
struct NativeFile {
    #[serde(default)]
    format: Option<String>,
    #[serde(default)]
    version: Option<u32>,
    strokes: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    truth: Option<Truth>,
}

pub fn load_ink(path: impl AsRef<Path>, format: InkFormat) -> Result<InkFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        InkFormat::Native => parse_native(&text),
        InkFormat::InkMl => parse_inkml(&text),
    }
}

pub fn save_native(path: impl AsRef<Path>, ink: &InkFile) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_native_string(ink)).map_err(|e| Error::io(path, e))
}

pub fn to_native_string(ink: &InkFile) -> String {
    let file = NativeFile {
        format: Some(NATIVE_FORMAT.to_string()),
        version: Some(1),
        strokes: ink
            .observable
            .strokes()
            .iter()
            .map(|s| s.points.iter().map(|p| [p.x, p.y]).collect())
            .collect(),
        truth: ink.truth.clone(),
    };
    serde_json::to_string(&file).expect("ink serializes")
}

pub fn parse_native(text: &str) -> Result<InkFile> {
    let file: NativeFile = serde_json::from_str(text).map_err(|e| Error::InkParse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(f) = &file.format {
        if f != NATIVE_FORMAT {
            return Err(Error::InkParse {
                line: 1,
                column: 1,
                message: format!("unexpected format tag `{f}`"),
            });
        }
    }
    let strokes = file
        .strokes
        .into_iter()
        .map(|s| s.into_iter().map(|[x, y]| Point::new(x, y)).collect())
        .collect();
    let observable = Observable::from_points(strokes)?;
    Ok(InkFile {
        observable,
        truth: file.truth,
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

pub fn parse_inkml(text: &str) -> Result<InkFile> {
    let doc = roxmltree::Document::parse(text).map_err(|e| {
        let pos = e.pos();
        Error::InkParse {
            line: pos.row as usize,
            column: pos.col as usize,
            message: e.to_string(),
        }
    })?;
    let parse_err = |node: roxmltree::Node, message: String| {
        let (line, column) = line_col(text, node.range().start);
        Error::InkParse {
            line,
            column,
            message,
        }
    };

    let mut strokes = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    for trace in doc.descendants().filter(|n| n.has_tag_name("trace")) {
        let body = trace.text().unwrap_or("");
        let mut points = Vec::new();
        for chunk in body.split(',') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                continue;
            }
            let mut nums = chunk.split_whitespace().map(str::parse::<f64>);
            match (nums.next(), nums.next()) {
                (Some(Ok(x)), Some(Ok(y))) => points.push(Point::new(x, y)),
                _ => {
                    return Err(parse_err(trace, format!("bad trace point `{chunk}`")));
                }
            }
        }
        if points.is_empty() {
            return Err(parse_err(trace, "trace has no points".to_string()));
        }
        let id = trace
            .attribute(("http://www.w3.org/XML/1998/namespace", "id"))
            .or_else(|| trace.attribute("id"))
            .map(str::to_string)
            .unwrap_or_else(|| strokes.len().to_string());
        ids.insert(id, strokes.len());
        strokes.push(points);
    }

    let mut groups = Vec::new();
    for group in doc.descendants().filter(|n| n.has_tag_name("traceGroup")) {
        let label = group
            .children()
            .find(|c| c.has_tag_name("annotation") && c.attribute("type") == Some("truth"))
            .and_then(|a| a.text())
            .map(|t| t.trim().to_string());
        let refs: Vec<_> = group
            .children()
            .filter(|c| c.has_tag_name("traceView"))
            .collect();
        let (Some(symbol), false) = (label, refs.is_empty()) else {
            continue;
        };
        let mut members = Vec::new();
        for r in refs {
            let key = r.attribute("traceDataRef").unwrap_or("");
            match ids.get(key) {
                Some(&i) => members.push(i),
                None => return Err(parse_err(r, format!("unknown trace reference `{key}`"))),
            }
        }
        groups.push(SymbolGroup {
            symbol,
            strokes: members,
        });
    }

    let observable = Observable::from_points(strokes)?;
    let truth = (!groups.is_empty()).then_some(Truth { groups, expr: None });
    Ok(InkFile { observable, truth })
}
