//! Interactive recognition sessions with user-locked corrections.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::Constraint;
use crate::grammar::Expression;
use crate::ink::{Observable, Point, StrokeSet};
use crate::model::Model;
use crate::recognize::{Pipeline, RankedTree, TreeSummary};
use crate::scoring::input::ScoringMode;
use crate::scoring::ParseTree;

/// A stroke subset forced to one reading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lock {
    pub strokes: Vec<u64>,
    pub expression: Expression,
}

/// Result of a mutation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Update {
    pub revision: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stroke: Option<u64>,
    /// `None` when the strokes have no parse.
    pub tree: Option<TreeSummary>,
    pub locks: Vec<Lock>,
    pub dropped_locks: Vec<Lock>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alternates {
    pub revision: u64,
    pub strokes: Vec<u64>,
    pub alternates: Vec<TreeSummary>,
}

pub struct Session {
    id: u64,
    model: Arc<Model>,
    strokes: Vec<(u64, Vec<Point>)>,
    next_stroke: u64,
    revision: u64,
    locks: Vec<Lock>,
    served: HashMap<Vec<u64>, Vec<Expression>>,
    top: Option<RankedTree>,
}

impl Session {
    pub fn new(id: u64, model: Arc<Model>) -> Self {
        Session {
            id,
            model,
            strokes: Vec::new(),
            next_stroke: 0,
            revision: 0,
            locks: Vec::new(),
            served: HashMap::new(),
            top: None,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn locks(&self) -> &[Lock] {
        &self.locks
    }

    /// The model's alternate-list length.
    pub fn default_k(&self) -> usize {
        self.model.config.k_max
    }

    pub fn stroke_ids(&self) -> Vec<u64> {
        self.strokes.iter().map(|s| s.0).collect()
    }

    pub fn tree(&self) -> Option<TreeSummary> {
        self.top.as_ref().map(|t| self.summary(t))
    }

    /// Trees report session stroke ids rather than positions.
    fn summary(&self, t: &RankedTree) -> TreeSummary {
        let mut s = t.summary();
        s.strokes = s.strokes.iter().map(|&i| self.strokes[i as usize].0).collect();
        s
    }

    fn observable(&self) -> Result<Observable> {
        Observable::from_points(self.strokes.iter().map(|s| s.1.clone()).collect())
    }

    fn positions(&self, ids: &[u64]) -> Result<StrokeSet> {
        let mut set = StrokeSet::empty();
        for &id in ids {
            let i = self.strokes.iter().position(|s| s.0 == id).ok_or(Error::UnknownStroke(id))?;
            set.insert(i);
        }
        if set.is_empty() {
            return Err(Error::EmptySubset);
        }
        Ok(set)
    }

    fn constraints(&self) -> Result<Vec<Constraint>> {
        self.locks
            .iter()
            .map(|l| {
                let (g, want) = (self.model.grammar.clone(), l.expression.clone());
                Ok(Constraint {
                    subset: self.positions(&l.strokes)?,
                    accept: Arc::new(move |t: &ParseTree| t.expression(&g) == want),
                })
            })
            .collect()
    }

    fn recompute(&self) -> Result<Option<RankedTree>> {
        if self.strokes.is_empty() {
            return Ok(None);
        }
        let obs = self.observable()?;
        let constraints = self.constraints()?;
        let mut p = Pipeline::build(&self.model, &obs, ScoringMode::Default)?;
        Ok(p.top_with(1, &constraints).pop())
    }

    /// Commits a new top tree and bumps the revision.
    fn commit(&mut self, top: Option<RankedTree>, stroke: Option<u64>, dropped: Vec<Lock>) -> Update {
        self.top = top;
        self.revision += 1;
        self.served.clear();
        Update {
            revision: self.revision,
            stroke,
            tree: self.tree(),
            locks: self.locks.clone(),
            dropped_locks: dropped,
        }
    }

    /// Appends a stroke. On error the session is left unchanged.
    pub fn add_stroke(&mut self, points: Vec<Point>) -> Result<Update> {
        let id = self.next_stroke;
        self.strokes.push((id, points));
        match self.observable().and_then(|_| self.recompute()) {
            Ok(top) => {
                self.next_stroke += 1;
                Ok(self.commit(top, Some(id), Vec::new()))
            }
            Err(e) => {
                self.strokes.pop();
                Err(e)
            }
        }
    }

    /// Removes a stroke and every lock that touches it.
    pub fn remove_stroke(&mut self, id: u64) -> Result<Update> {
        let i = self.strokes.iter().position(|s| s.0 == id).ok_or(Error::UnknownStroke(id))?;
        let saved = (self.strokes.clone(), self.locks.clone());
        self.strokes.remove(i);
        let (dropped, kept) = self.locks.drain(..).partition(|l: &Lock| l.strokes.contains(&id));
        self.locks = kept;
        match self.recompute() {
            Ok(top) => Ok(self.commit(top, None, dropped)),
            Err(e) => {
                (self.strokes, self.locks) = saved;
                Err(e)
            }
        }
    }

    /// Ranked readings of a stroke subset under the current locks.
    pub fn alternates(&mut self, ids: &[u64], k: usize) -> Result<Alternates> {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let subset = self.positions(&ids)?;
        let obs = self.observable()?;
        let constraints = self.constraints()?;
        let mut p = Pipeline::build(&self.model, &obs, ScoringMode::Default)?;
        let current = self.top.as_ref().map(|t| t.tree.clone());
        let alts = p.alternates(subset, current.as_deref(), k, &constraints)?;
        self.served.insert(ids.clone(), alts.iter().map(|a| a.expression.clone()).collect());
        Ok(Alternates {
            revision: self.revision,
            strokes: ids,
            alternates: alts.iter().map(|a| self.summary(a)).collect(),
        })
    }

    /// Forces a served alternate. Locks that overlap the subset without
    /// lying inside it are dropped.
    pub fn lock_choice(&mut self, revision: u64, ids: &[u64], index: usize) -> Result<Update> {
        let mut ids = ids.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let stale = Error::StaleAlternates { served: revision, current: self.revision };
        if revision != self.revision {
            return Err(stale);
        }
        let list = self.served.get(&ids).ok_or(stale)?;
        let expression = list
            .get(index)
            .cloned()
            .ok_or(Error::BadChoice { index, len: list.len() })?;
        let subset = self.positions(&ids)?;
        let saved = self.locks.clone();
        let mut dropped = Vec::new();
        let mut kept = Vec::new();
        for l in &self.locks {
            let s = self.positions(&l.strokes)?;
            if s.is_disjoint(subset) || (s.is_subset_of(subset) && s != subset) {
                kept.push(l.clone());
            } else {
                dropped.push(l.clone());
            }
        }
        kept.push(Lock { strokes: ids, expression });
        self.locks = kept;
        match self.recompute() {
            Ok(top) => Ok(self.commit(top, None, dropped)),
            Err(e) => {
                self.locks = saved;
                Err(e)
            }
        }
    }
}

/// Loaded models and live sessions. Each session is behind its own lock;
/// the models are shared read-only.
#[derive(Default)]
pub struct SessionManager {
    models: BTreeMap<String, Arc<Model>>,
    sessions: RwLock<HashMap<u64, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl SessionManager {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_model(&mut self, name: impl Into<String>, model: Model) {
        self.models.insert(name.into(), Arc::new(model));
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models.keys().cloned().collect()
    }

    pub fn create(&self, model: &str) -> Result<u64> {
        let m = self.models.get(model).ok_or_else(|| Error::UnknownModel(model.to_string()))?;
        let id = self.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        let s = Arc::new(Mutex::new(Session::new(id, m.clone())));
        self.sessions.write().unwrap().insert(id, s);
        Ok(id)
    }

    pub fn delete(&self, id: u64) -> Result<()> {
        self.sessions
            .write()
            .unwrap()
            .remove(&id)
            .map(|_| ())
            .ok_or(Error::UnknownSession(id))
    }

    /// Runs `f` with exclusive access to one session.
    pub fn with<R>(&self, id: u64, f: impl FnOnce(&mut Session) -> Result<R>) -> Result<R> {
        let s = self.sessions.read().unwrap().get(&id).cloned().ok_or(Error::UnknownSession(id))?;
        let mut guard = s.lock().unwrap_or_else(|e| e.into_inner());
        f(&mut guard)
    }
}
