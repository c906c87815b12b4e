//! Trained model bundles.
//!
//! A bundle is a directory holding:
//!
//! | file | contents |
//! |---|---|
//! | `grammar.txt` | grammar DSL |
//! | `templates.json` | template library with precomputed features |
//! | `profile.json` | matcher quantile knots and weights, grouping scale |
//! | `relations.json` | classed relation Gaussians |
//! | `bag.txt` | symbol occurrence and co-occurrence counts |
//! | `config.json` | recognizer thresholds |

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::ForestConfig;
use crate::grammar::Grammar;
use crate::relations::RelationModel;
use crate::scoring::input::AdmissionConfig;
use crate::scoring::SymbolBag;
use crate::symbols::{MatcherProfile, SymbolModel, SymbolTemplate};

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognizerConfig {
    pub forest: ForestConfig,
    pub admission: AdmissionConfig,
    /// Alternates offered per correction menu.
    pub k_max: usize,
    /// Raw trees a locked extraction may skip before giving up.
    pub lock_search: usize,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            forest: ForestConfig::default(),
            admission: AdmissionConfig::default(),
            k_max: 10,
            lock_search: 20_000,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TemplateFile {
    version: u32,
    containers: Vec<String>,
    templates: Vec<SymbolTemplate>,
}

#[derive(Serialize, Deserialize)]
struct ProfileFile {
    version: u32,
    #[serde(flatten)]
    profile: MatcherProfile,
    lambda: f64,
}

/// Everything needed to recognize ink.
#[derive(Debug, Clone)]
pub struct Model {
    /// As written; `grammar` is its normalized form.
    pub source_grammar: Grammar,
    pub grammar: Grammar,
    pub symbols: SymbolModel,
    pub relations: RelationModel,
    pub bag: SymbolBag,
    pub config: RecognizerConfig,
}

impl Model {
    pub fn new(
        grammar: Grammar,
        symbols: SymbolModel,
        relations: RelationModel,
        bag: SymbolBag,
        config: RecognizerConfig,
    ) -> Self {
        Model {
            grammar: grammar.normalize(),
            source_grammar: grammar,
            symbols,
            relations,
            bag,
            config,
        }
    }

    fn containers(&self) -> Vec<String> {
        self.source_grammar
            .terminals()
            .iter()
            .filter(|t| t.container)
            .map(|t| t.name.clone())
            .collect()
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
        };
        write("grammar.txt", self.source_grammar.render())?;
        write(
            "templates.json",
            serde_json::to_string(&TemplateFile {
                version: BUNDLE_VERSION,
                containers: self.containers(),
                templates: self.symbols.templates().to_vec(),
            })?,
        )?;
        write(
            "profile.json",
            serde_json::to_string_pretty(&ProfileFile {
                version: BUNDLE_VERSION,
                profile: self.symbols.profile().clone(),
                lambda: self.symbols.lambda(),
            })?,
        )?;
        write("relations.json", serde_json::to_string_pretty(&self.relations)?)?;
        write("bag.txt", self.bag.to_text())?;
        write("config.json", serde_json::to_string_pretty(&self.config)?)?;
        Ok(())
    }

    /// Loads a bundle; a missing `config.json` means defaults.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))
        };
        let grammar = Grammar::parse(&read("grammar.txt")?)?;
        let t: TemplateFile = serde_json::from_str(&read("templates.json")?)?;
        let p: ProfileFile = serde_json::from_str(&read("profile.json")?)?;
        for v in [t.version, p.version] {
            if v != BUNDLE_VERSION {
                return Err(Error::Model(format!("unsupported bundle version {v}")));
            }
        }
        let containers: Vec<&str> = t.containers.iter().map(String::as_str).collect();
        let symbols = SymbolModel::new(t.templates, p.profile, p.lambda, &containers)?;
        let r: RelationModel = serde_json::from_str(&read("relations.json")?)?;
        let relations = if r.pairs().is_empty() {
            RelationModel::untrained(r.config)
        } else {
            RelationModel::from_pairs(r.config.clone(), r.pairs().clone())?
        };
        let bag = SymbolBag::parse(&read("bag.txt")?)?;
        let config = match read("config.json") {
            Ok(text) => serde_json::from_str(&text)?,
            Err(_) if !dir.join("config.json").exists() => RecognizerConfig::default(),
            Err(e) => return Err(e),
        };
        Ok(Model::new(grammar, symbols, relations, bag, config))
    }
}
