//! Pretrained models, concept graph and importance weights shared by every
//! session.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use maat_core::cdm::{DiagnosisModel, Model, ModelCheckpoint, ModelKind};
use maat_core::environment::{load_dataset, ConceptGraph, DatasetFormat, IdMaps};
use maat_core::importance::ImportanceTable;
use maat_core::{MaatError, Result};

pub struct Engine {
    pub models: BTreeMap<ModelKind, Model>,
    pub graph: Arc<ConceptGraph>,
    pub weights: Arc<Vec<f64>>,
    pub ids: IdMaps,
}

impl Engine {
    pub fn new(
        models: impl IntoIterator<Item = Model>,
        graph: ConceptGraph,
        weights: Vec<f64>,
        ids: IdMaps,
    ) -> Result<Self> {
        let models: BTreeMap<ModelKind, Model> = models.into_iter().map(|m| (m.kind(), m)).collect();
        if models.is_empty() {
            return Err(MaatError::Config("at least one model is required".into()));
        }
        if let Some(m) = models.values().find(|m| m.n_questions() != graph.n_questions()) {
            return Err(MaatError::Config(format!(
                "{} model covers {} questions, the graph has {}",
                m.kind(),
                m.n_questions(),
                graph.n_questions()
            )));
        }
        if weights.len() != graph.n_concepts()
            || ids.questions.len() != graph.n_questions()
            || ids.concepts.len() != graph.n_concepts()
        {
            return Err(MaatError::Config(
                "importance weights or id maps do not match the graph".into(),
            ));
        }
        Ok(Self {
            models,
            graph: Arc::new(graph),
            weights: Arc::new(weights),
            ids,
        })
    }

    /// Loads the graph from a dataset directory plus model checkpoints and
    /// an importance table that were produced from the same dataset.
    pub fn load(dataset: &Path, checkpoints: &[impl AsRef<Path>], importance: &Path) -> Result<Self> {
        let (env, _) = load_dataset(dataset, DatasetFormat::Csv)?;
        let mut models = Vec::new();
        for path in checkpoints {
            let ckpt = ModelCheckpoint::load(path.as_ref())?;
            if ckpt.question_ids != env.ids().questions {
                return Err(MaatError::Config(format!(
                    "{} was trained on a different question pool",
                    path.as_ref().display()
                )));
            }
            models.push(ckpt.model);
        }
        let table = ImportanceTable::load(importance, env.ids())?;
        Self::new(models, env.graph().clone(), table.weights, env.ids().clone())
    }

    pub fn model(&self, kind: ModelKind) -> Result<&Model> {
        self.models
            .get(&kind)
            .ok_or_else(|| MaatError::Config(format!("no {kind} model is loaded")))
    }
}
