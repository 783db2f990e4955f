use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Pooling, TaggerConfig};
use crate::corpus::{Abstract, LabeledCorpus};
use crate::crf::CrfLayer;
use crate::tensor::{bilstm_encode, init, Checkpoint, Graph, LstmCellParams, ParamId, ParamStore, Tensor, Var};
use crate::text::{tokenize, EmbeddingTable, Vocabulary, UNK_ID};
use crate::{Error, Result};

/// Parameter-name prefixes replaced when a model is transferred to a new
/// label set.
pub const HEAD_PREFIXES: [&str; 3] = ["ff.", "head.", "crf."];

pub(crate) fn is_head(name: &str) -> bool {
    HEAD_PREFIXES.iter().any(|p| name.starts_with(p))
}

/// Token ids per sentence plus gold label ids (empty when unlabelled).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedAbstract {
    pub tokens: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
}

/// Everything besides the tensors that a checkpoint needs to rebuild a model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaggerMetadata {
    pub kind: String,
    pub config: TaggerConfig,
    pub labels: Vec<String>,
    pub vocab: Vocabulary,
}

const METADATA_KIND: &str = "claimx-tagger";

#[derive(Clone, Debug)]
pub struct TaggerModel {
    pub config: TaggerConfig,
    pub labels: Vec<String>,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    embedding: ParamId,
    word_fwd: LstmCellParams,
    word_bwd: LstmCellParams,
    sentence_lstm: Option<(LstmCellParams, LstmCellParams)>,
    ff_w: ParamId,
    ff_b: ParamId,
    head_w: ParamId,
    head_b: ParamId,
    crf: Option<CrfLayer>,
}

impl TaggerModel {
    /// Fresh model. `embeddings`, when given, must match the vocabulary size
    /// and `config.embedding_dim`; otherwise rows are seeded uniform.
    pub fn new(
        config: TaggerConfig,
        labels: Vec<String>,
        vocab: Vocabulary,
        embeddings: Option<&EmbeddingTable>,
    ) -> Result<Self> {
        config.validate()?;
        if labels.len() != config.num_labels {
            return Err(Error::Invalid(format!(
                "{} label names for num_labels = {}",
                labels.len(),
                config.num_labels
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let table = match embeddings {
            Some(t) => {
                if t.dim != config.embedding_dim || t.rows.len() != vocab.len() {
                    return Err(Error::Invalid(format!(
                        "embedding table is {}x{}, model expects {}x{}",
                        t.rows.len(),
                        t.dim,
                        vocab.len(),
                        config.embedding_dim
                    )));
                }
                t.clone()
            }
            None => EmbeddingTable::random(vocab.len(), config.embedding_dim, rng.gen()),
        };
        let embedding = store.add("embedding", Tensor::matrix(vocab.len(), config.embedding_dim, table.flat())?)?;
        let (e, hw) = (config.embedding_dim, config.word_hidden);
        let word_fwd = LstmCellParams::new(&mut store, "word_lstm.fwd", e, hw, &mut rng)?;
        let word_bwd = LstmCellParams::new(&mut store, "word_lstm.bwd", e, hw, &mut rng)?;
        let sentence_lstm = match config.sentence_hidden {
            Some(hs) => Some((
                LstmCellParams::new(&mut store, "sentence_lstm.fwd", 2 * hw, hs, &mut rng)?,
                LstmCellParams::new(&mut store, "sentence_lstm.bwd", 2 * hw, hs, &mut rng)?,
            )),
            None => None,
        };
        let sd = config.sentence_dim();
        let ff_w = store.add("ff.w", init::xavier_uniform(&mut rng, config.ff_hidden, sd))?;
        let ff_b = store.add("ff.b", Tensor::zeros(&[config.ff_hidden]))?;
        let head_w = store.add("head.w", init::xavier_uniform(&mut rng, config.num_labels, config.ff_hidden))?;
        let head_b = store.add("head.b", Tensor::zeros(&[config.num_labels]))?;
        let crf = if config.use_crf {
            let layer = CrfLayer::new(&mut store, "crf", config.num_labels)?;
            if !config.crf_boundary_scores {
                store.set_trainable(layer.start, false);
                store.set_trainable(layer.end, false);
            }
            Some(layer)
        } else {
            None
        };
        Ok(TaggerModel {
            config,
            labels,
            vocab,
            store,
            embedding,
            word_fwd,
            word_bwd,
            sentence_lstm,
            ff_w,
            ff_b,
            head_w,
            head_b,
            crf,
        })
    }

    pub fn crf(&self) -> Option<&CrfLayer> {
        self.crf.as_ref()
    }

    pub fn num_labels(&self) -> usize {
        self.config.num_labels
    }

    pub fn embedding_param(&self) -> ParamId {
        self.embedding
    }

    /// Tokenises and maps every sentence to vocabulary ids. Empty sentences
    /// become a single UNK.
    pub fn encode_tokens(&self, doc: &Abstract) -> Vec<Vec<usize>> {
        doc.sentences
            .iter()
            .map(|s| {
                let ids = self.vocab.encode(&tokenize(s));
                if ids.is_empty() {
                    vec![UNK_ID]
                } else {
                    ids
                }
            })
            .collect()
    }

    /// Encodes a labelled corpus. Its label set must equal the model's.
    pub fn encode_corpus(&self, corpus: &LabeledCorpus) -> Result<Vec<EncodedAbstract>> {
        if corpus.labels != self.labels {
            return Err(Error::Invalid(format!(
                "corpus labels {:?} differ from model labels {:?}",
                corpus.labels, self.labels
            )));
        }
        corpus
            .abstracts
            .iter()
            .map(|a| {
                if a.labels.len() != a.doc.len() {
                    return Err(Error::Integrity {
                        abstract_id: a.doc.id.clone(),
                        message: "label count differs from sentence count".into(),
                    });
                }
                if let Some(&bad) = a.labels.iter().find(|&&l| l >= self.labels.len()) {
                    return Err(Error::Invalid(format!(
                        "label id {bad} in `{}` outside the label vocabulary",
                        a.doc.id
                    )));
                }
                Ok(EncodedAbstract {
                    tokens: self.encode_tokens(&a.doc),
                    labels: a.labels.clone(),
                })
            })
            .collect()
    }

    fn dropout<R: Rng>(&self, g: &mut Graph, x: Var, rng: &mut Option<&mut R>) -> Var {
        let p = self.config.dropout;
        match rng {
            Some(r) if p > 0.0 => {
                let keep = 1.0 / (1.0 - p);
                let mask = (0..g.value(x).len())
                    .map(|_| if r.gen::<f64>() < p { 0.0 } else { keep })
                    .collect();
                g.mask(x, mask)
            }
            _ => x,
        }
    }

    /// `T x K` per-sentence scores for one abstract. Passing an RNG turns on
    /// dropout (training mode); `None` is deterministic evaluation.
    pub fn encode_abstract<R: Rng>(
        &self,
        g: &mut Graph,
        tokens: &[Vec<usize>],
        mut dropout_rng: Option<&mut R>,
    ) -> Result<Var> {
        if tokens.is_empty() {
            return Err(Error::contract("abstract without sentences"));
        }
        let v = self.vocab.len();
        let s = &self.store;
        let mut sentence_vecs = Vec::with_capacity(tokens.len());
        for sent in tokens {
            if sent.is_empty() {
                return Err(Error::contract("empty sentence; map it to UNK before encoding"));
            }
            if let Some(&bad) = sent.iter().find(|&&t| t >= v) {
                return Err(Error::contract(format!("token id {bad} outside vocabulary of {v}")));
            }
            let embs: Vec<Var> = sent
                .iter()
                .map(|&t| {
                    let e = g.gather(s, self.embedding, t);
                    self.dropout(g, e, &mut dropout_rng)
                })
                .collect();
            let enc = bilstm_encode(g, s, &embs, &self.word_fwd, &self.word_bwd)?;
            let pooled = match self.config.pooling {
                Pooling::FinalStates => g.concat(&[enc.final_fwd, enc.final_bwd]),
                Pooling::Mean => {
                    let sum = g.add_n(&enc.outputs);
                    g.scale(sum, 1.0 / enc.outputs.len() as f64)
                }
            };
            sentence_vecs.push(pooled);
        }
        if let Some((f, b)) = &self.sentence_lstm {
            sentence_vecs = bilstm_encode(g, s, &sentence_vecs, f, b)?.outputs;
        }
        let (ffw, ffb, hw, hb) = (
            g.param(s, self.ff_w),
            g.param(s, self.ff_b),
            g.param(s, self.head_w),
            g.param(s, self.head_b),
        );
        let mut rows = Vec::with_capacity(sentence_vecs.len());
        for x in sentence_vecs {
            let x = self.dropout(g, x, &mut dropout_rng);
            let h = g.matmul(ffw, x);
            let h = g.add(h, ffb);
            let h = g.tanh(h);
            let h = self.dropout(g, h, &mut dropout_rng);
            let o = g.matmul(hw, h);
            rows.push(g.add(o, hb));
        }
        Ok(g.stack(&rows))
    }

    /// Training loss for one abstract: sequence NLL with a CRF, otherwise
    /// the summed per-sentence cross-entropy. Both are sums over sentences,
    /// so dividing by the sentence count gives a per-sentence loss.
    pub fn loss<R: Rng>(&self, g: &mut Graph, doc: &EncodedAbstract, dropout_rng: Option<&mut R>) -> Result<Var> {
        if doc.labels.len() != doc.tokens.len() {
            return Err(Error::contract("label count differs from sentence count"));
        }
        let logits = self.encode_abstract(g, &doc.tokens, dropout_rng)?;
        match &self.crf {
            Some(crf) => {
                let em = if self.config.crf_on_log_probs {
                    g.log_softmax(logits)
                } else {
                    logits
                };
                crf.nll(g, &self.store, em, &doc.labels)
            }
            None => {
                let terms: Vec<Var> = (0..doc.labels.len())
                    .map(|i| {
                        let r = g.row(logits, i);
                        g.softmax_cross_entropy(r, doc.labels[i])
                    })
                    .collect();
                Ok(g.add_n(&terms))
            }
        }
    }

    /// Emission scores as fed to the CRF (or plain logits without one).
    pub(crate) fn emissions(&self, tokens: &[Vec<usize>]) -> Result<Tensor> {
        let mut g = Graph::new();
        let logits = self.encode_abstract::<ChaCha8Rng>(&mut g, tokens, None)?;
        let out = if self.crf.is_some() && self.config.crf_on_log_probs {
            g.log_softmax(logits)
        } else {
            logits
        };
        Ok(g.value(out).clone())
    }

    pub fn metadata(&self) -> TaggerMetadata {
        TaggerMetadata {
            kind: METADATA_KIND.into(),
            config: self.config.clone(),
            labels: self.labels.clone(),
            vocab: self.vocab.clone(),
        }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint::from_store(
            &self.store,
            serde_json::to_value(self.metadata()).expect("metadata serialises"),
        )
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.to_checkpoint().to_bytes()
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let mut meta: TaggerMetadata = serde_json::from_value(ck.metadata.clone())
            .map_err(|e| Error::Checkpoint(format!("tagger metadata: {e}")))?;
        if meta.kind != METADATA_KIND {
            return Err(Error::Checkpoint(format!("unexpected checkpoint kind `{}`", meta.kind)));
        }
        meta.vocab.reindex();
        let mut model = TaggerModel::new(meta.config, meta.labels, meta.vocab, None)?;
        model.load_weights(ck, |_| false)?;
        for t in &ck.tensors {
            let id = model.store.id(&t.name).expect("restored above");
            model.store.set_trainable(id, t.trainable);
        }
        Ok(model)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::from_bytes(bytes)?)
    }

    /// Copies matching tensors from `ck`, skipping names selected by
    /// `exclude`. Shape or name mismatches are load errors.
    pub fn load_weights(&mut self, ck: &Checkpoint, exclude: impl Fn(&str) -> bool) -> Result<Vec<String>> {
        ck.restore_into(&mut self.store, exclude)
    }

    /// A model with this one's embeddings and encoders and a freshly
    /// initialised feedforward head and CRF for `labels`.
    /// The transfer goes through the checkpoint path.
    pub fn with_new_head(&self, labels: Vec<String>, seed: u64) -> Result<Self> {
        let mut config = self.config.clone();
        config.num_labels = labels.len();
        config.seed = seed;
        let mut fresh = TaggerModel::new(config, labels, self.vocab.clone(), None)?;
        let ck = Checkpoint::from_bytes(&self.to_bytes()?)?;
        fresh.load_weights(&ck, is_head)?;
        Ok(fresh)
    }

    /// Marks every non-head parameter frozen (or trainable).
    pub fn freeze_body(&mut self, frozen: bool) {
        self.store.set_trainable_where(!frozen, |n| !is_head(n));
        self.apply_fixed_flags();
    }

    pub fn set_embeddings_trainable(&mut self, trainable: bool) {
        self.store.set_trainable(self.embedding, trainable);
    }

    pub(crate) fn apply_fixed_flags(&mut self) {
        if let Some(crf) = self.crf {
            if !self.config.crf_boundary_scores {
                self.store.set_trainable(crf.start, false);
                self.store.set_trainable(crf.end, false);
            }
        }
    }

    /// SHA-256 over the embeddings and encoder weights.
    pub fn body_checksum(&self) -> String {
        self.store.checksum(|n| !is_head(n))
    }
}
