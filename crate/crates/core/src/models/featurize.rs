use serde::{Deserialize, Serialize};

use super::{ModelParams, ModelSpec, ModelsError, Resources, TokenBudgets};
use crate::corpus::{PatentRecord, TextField};
use crate::features::{
    build_vocabulary, cpc_avg_embedding, cpc_seq_embedding, mean_embedding, onehop_cpc_counts, pca_fit, pca_project,
    tfidf_vector, tokenize, twohop_pair_counts, CodeSpace, EmbeddingTable, PcaProjection, SparseVector, StopWords,
    Vocabulary,
};
use crate::neural::{NetworkConfig, NeuralError, StreamInputs, StreamKind, StreamSpec};

fn record<'a>(res: &Resources<'a>, id: &str) -> Result<&'a PatentRecord, ModelsError> {
    res.corpus.get(id).ok_or_else(|| ModelsError::UnknownPatent(id.to_string()))
}

fn field_tokens(rec: &PatentRecord, field: TextField) -> Vec<String> {
    tokenize(rec.text(field))
}

/// Abstract and claims tf-idf over separate vocabularies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextPair {
    pub abstract_vocab: Vocabulary,
    pub claims_vocab: Vocabulary,
}

impl TextPair {
    fn fit(res: &Resources, ids: &[&str], min_df: usize) -> Result<Self, ModelsError> {
        let mut abs = Vec::with_capacity(ids.len());
        let mut claims = Vec::with_capacity(ids.len());
        for id in ids {
            let rec = record(res, id)?;
            abs.push(field_tokens(rec, TextField::Abstract));
            claims.push(field_tokens(rec, TextField::Claims));
        }
        let sw = StopWords::english();
        Ok(TextPair {
            abstract_vocab: build_vocabulary(&abs, &sw, min_df),
            claims_vocab: build_vocabulary(&claims, &sw, min_df),
        })
    }

    pub fn dim(&self) -> usize {
        self.abstract_vocab.len() + self.claims_vocab.len()
    }

    /// Both halves are unit vectors scaled by `1/sqrt(2)`.
    fn transform(&self, rec: &PatentRecord) -> SparseVector {
        let mut a = tfidf_vector(&field_tokens(rec, TextField::Abstract), &self.abstract_vocab);
        let mut c = tfidf_vector(&field_tokens(rec, TextField::Claims), &self.claims_vocab);
        a.scale(std::f64::consts::FRAC_1_SQRT_2);
        c.scale(std::f64::consts::FRAC_1_SQRT_2);
        a.concat(&c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableSource {
    WordVectors,
    FastText,
}

impl TableSource {
    fn table<'a>(self, res: &Resources<'a>) -> Result<&'a EmbeddingTable, ModelsError> {
        match self {
            TableSource::WordVectors => res.word_vectors(),
            TableSource::FastText => res.fasttext(),
        }
    }
}

/// Featurizer state frozen on a training split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedFeatures {
    Tfidf {
        text: TextPair,
    },
    /// Mean abstract and claims embeddings, concatenated, then PCA.
    Embedding {
        source: TableSource,
        table_dim: usize,
        tokens: TokenBudgets,
        pca: PcaProjection,
    },
    OneHop {
        codes: CodeSpace,
    },
    /// The count half is L2-normalized like the tf-idf halves.
    TfidfOneHop {
        text: TextPair,
        codes: CodeSpace,
    },
    Neural(NeuralFeatures),
}

fn pooled_text(rec: &PatentRecord, table: &EmbeddingTable, tokens: &TokenBudgets) -> Vec<f64> {
    let mut v = mean_embedding(&field_tokens(rec, TextField::Abstract), table, tokens.abstract_text);
    v.extend(mean_embedding(&field_tokens(rec, TextField::Claims), table, tokens.claims));
    v
}

impl FittedFeatures {
    pub fn fit(spec: &ModelSpec, params: &ModelParams, res: &Resources, ids: &[&str]) -> Result<Self, ModelsError> {
        Ok(match spec {
            ModelSpec::SvmTfidf => FittedFeatures::Tfidf {
                text: TextPair::fit(res, ids, params.min_df)?,
            },
            ModelSpec::SvmW2v | ModelSpec::SvmFastText => {
                let source = if *spec == ModelSpec::SvmW2v {
                    TableSource::WordVectors
                } else {
                    TableSource::FastText
                };
                let table = source.table(res)?;
                let pooled = ids
                    .iter()
                    .map(|id| Ok(pooled_text(record(res, id)?, table, &params.tokens)))
                    .collect::<Result<Vec<_>, ModelsError>>()?;
                FittedFeatures::Embedding {
                    source,
                    table_dim: table.dim(),
                    tokens: params.tokens.clone(),
                    pca: pca_fit(&pooled, params.pca_components)?,
                }
            }
            ModelSpec::Svm1Hop => FittedFeatures::OneHop {
                codes: CodeSpace::observed(ids.iter().copied(), 1, res.index)?,
            },
            ModelSpec::SvmTfidf1Hop => FittedFeatures::TfidfOneHop {
                text: TextPair::fit(res, ids, params.min_df)?,
                codes: CodeSpace::observed(ids.iter().copied(), 1, res.index)?,
            },
            ModelSpec::Neural(streams) => FittedFeatures::Neural(NeuralFeatures::fit(streams, params, res, ids)?),
        })
    }

    /// Feature vector for the SVM variants.
    pub fn svm_vector(&self, res: &Resources, id: &str) -> Result<SparseVector, ModelsError> {
        let rec = record(res, id)?;
        match self {
            FittedFeatures::Tfidf { text } => Ok(text.transform(rec)),
            FittedFeatures::Embedding {
                source,
                table_dim,
                tokens,
                pca,
            } => {
                let table = source.table(res)?;
                if table.dim() != *table_dim {
                    return Err(ModelsError::Format(format!(
                        "embedding table has dimension {}, model was fitted with {table_dim}",
                        table.dim()
                    )));
                }
                let z = pca_project(&pooled_text(rec, table, tokens), pca)?;
                Ok(SparseVector::from_dense(&z))
            }
            FittedFeatures::OneHop { codes } => Ok(onehop_cpc_counts(id, res.index, codes)?),
            FittedFeatures::TfidfOneHop { text, codes } => {
                let mut counts = onehop_cpc_counts(id, res.index, codes)?;
                counts.normalize();
                counts.scale(std::f64::consts::FRAC_1_SQRT_2);
                Ok(text.transform(rec).concat(&counts))
            }
            FittedFeatures::Neural(_) => Err(ModelsError::Format("neural features have no SVM vector".into())),
        }
    }
}

/// Per-stream input builders for the neural classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuralFeatures {
    pub streams: Vec<StreamKind>,
    pub table_dim: usize,
    pub tokens: TokenBudgets,
    pub onehop: Option<CodeSpace>,
    pub twohop: Option<CodeSpace>,
}

impl NeuralFeatures {
    fn fit(streams: &[StreamKind], params: &ModelParams, res: &Resources, ids: &[&str]) -> Result<Self, ModelsError> {
        let table = res.word_vectors()?;
        if streams.iter().any(|k| matches!(k, StreamKind::CpcAvg | StreamKind::CpcSeq)) {
            res.cpc_titles()?;
        }
        let space = |hops: u8| -> Result<Option<CodeSpace>, ModelsError> {
            let kind = if hops == 1 {
                StreamKind::Citation1hop
            } else {
                StreamKind::Citation2hop
            };
            if !streams.contains(&kind) {
                return Ok(None);
            }
            let s = CodeSpace::observed(ids.iter().copied(), hops, res.index)?;
            if s.is_empty() {
                return Err(NeuralError::InvalidConfig(format!(
                    "stream {kind}: no citation codes observed in the training patents"
                ))
                .into());
            }
            Ok(Some(s))
        };
        Ok(NeuralFeatures {
            streams: streams.to_vec(),
            table_dim: table.dim(),
            tokens: params.tokens.clone(),
            onehop: space(1)?,
            twohop: space(2)?,
        })
    }

    pub fn input_dim(&self, kind: StreamKind) -> usize {
        match kind {
            StreamKind::AbstractText | StreamKind::ClaimsText | StreamKind::DescriptionText | StreamKind::CpcSeq => {
                self.table_dim
            }
            StreamKind::CpcAvg => self.tokens.cpc_title * self.table_dim,
            StreamKind::Citation1hop => self.onehop.as_ref().map_or(0, CodeSpace::len),
            StreamKind::Citation2hop => self.twohop.as_ref().map_or(0, CodeSpace::len),
        }
    }

    pub fn network_config(&self, params: &ModelParams) -> NetworkConfig {
        let streams = self
            .streams
            .iter()
            .map(|&k| StreamSpec::new(k, self.input_dim(k)).with_width(params.neural.stream_width))
            .collect();
        NetworkConfig {
            streams,
            hidden: params.neural.hidden.clone(),
            dropout: params.neural.dropout,
        }
    }

    pub fn inputs(&self, res: &Resources, id: &str) -> Result<StreamInputs, ModelsError> {
        let rec = record(res, id)?;
        let table = res.word_vectors()?;
        if table.dim() != self.table_dim {
            return Err(ModelsError::Format(format!(
                "embedding table has dimension {}, model was fitted with {}",
                table.dim(),
                self.table_dim
            )));
        }
        let mut out = StreamInputs::new();
        for &k in &self.streams {
            let v = match k {
                StreamKind::AbstractText => {
                    mean_embedding(&field_tokens(rec, TextField::Abstract), table, self.tokens.abstract_text)
                }
                StreamKind::ClaimsText => mean_embedding(&field_tokens(rec, TextField::Claims), table, self.tokens.claims),
                StreamKind::DescriptionText => {
                    mean_embedding(&field_tokens(rec, TextField::Description), table, self.tokens.description)
                }
                StreamKind::Citation1hop => {
                    let space = self.onehop.as_ref().expect("fitted with the stream");
                    onehop_cpc_counts(id, res.index, space)?.to_dense()
                }
                StreamKind::Citation2hop => {
                    let space = self.twohop.as_ref().expect("fitted with the stream");
                    twohop_pair_counts(id, res.index, space)?.to_dense()
                }
                StreamKind::CpcAvg => cpc_avg_embedding(&rec.cpc(), res.cpc_titles()?, table, self.tokens.cpc_title)
                    .into_iter()
                    .flatten()
                    .collect(),
                StreamKind::CpcSeq => cpc_seq_embedding(&rec.cpc(), res.cpc_titles()?, table, self.tokens.cpc_seq),
            };
            out.insert(k, v);
        }
        Ok(out)
    }
}
