//! Annotated ink collections: one file per item in a directory.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grammar::Expression;
use crate::ink::Observable;
use crate::inkio::{self, InkFile, InkFormat};
use crate::truth::{SymbolGroup, Truth, TruthExpr};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub name: String,
    pub observable: Observable,
    pub truth: Truth,
}

impl CorpusItem {
    pub fn from_expr(name: impl Into<String>, observable: Observable, expr: TruthExpr) -> Self {
        CorpusItem {
            name: name.into(),
            observable,
            truth: Truth::from_expr(expr),
        }
    }

    pub fn groups(&self) -> &[SymbolGroup] {
        &self.truth.groups
    }

    pub fn expr(&self) -> Option<&TruthExpr> {
        self.truth.expr.as_ref()
    }

    pub fn expression(&self) -> Option<Expression> {
        self.expr().map(|e| e.expression())
    }

    pub fn to_ink(&self) -> InkFile {
        InkFile {
            observable: self.observable.clone(),
            truth: Some(self.truth.clone()),
        }
    }
}

/// Writes `<name>.json` per item in the native ink format.
pub fn save_corpus(dir: impl AsRef<Path>, items: &[CorpusItem]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for item in items {
        inkio::save_native(dir.join(format!("{}.json", item.name)), &item.to_ink())?;
    }
    Ok(())
}

/// Reads every `.json` and `.inkml` file of a directory, sorted by name.
/// Files without ground truth are rejected.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusItem>> {
    let dir = dir.as_ref();
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if ext == "json" || ext.eq_ignore_ascii_case("inkml") {
            paths.push(path);
        }
    }
    paths.sort();
    let mut items = Vec::with_capacity(paths.len());
    for path in paths {
        let ink = inkio::load_ink(&path, InkFormat::from_path(&path))?;
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("item").to_string();
        let truth = ink
            .truth
            .ok_or_else(|| Error::Model(format!("{} has no ground truth", path.display())))?;
        items.push(CorpusItem {
            name,
            observable: ink.observable,
            truth,
        });
    }
    Ok(items)
}
