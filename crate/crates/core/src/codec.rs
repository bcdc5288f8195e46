//! Codec descriptors and a wrapper over both constructions.

use serde::{Deserialize, Serialize};

use crate::access::{AccessLog, StripeReader};
use crate::anynode::{
    build_anynode, build_anynode_from_search, build_anynode_searched, AnyNodeCode,
};
use crate::array::ArrayCode;
use crate::error::{Error, Result};
use crate::field::{Elem, Field};
use crate::rebuild::{rebuild_multi, rebuild_single, Fallback, RebuildPlan};
use crate::rowspace::Lattice;
use crate::zigzag::{
    build_from_search, build_general, build_optimal, optimal_vectors, parse_vectors,
    CoefficientTable, Provenance, ZigzagCode,
};

pub const DEFAULT_MAX_TRIES: u32 = 2000;

/// Everything needed to rebuild a codec bit-exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecDescriptor {
    /// 1 for the zigzag code, 2 for the any-node code.
    pub construction: u8,
    pub r: u32,
    pub m: usize,
    pub k: usize,
    pub q: u32,
    pub poly: u32,
    /// Generator vectors as digit lists (construction 1 only).
    #[serde(default)]
    pub vectors: Vec<Vec<u32>>,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Elem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_node: Option<usize>,
    /// Parity-1 coefficients per node, for explicit construction-1 codecs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<Vec<Elem>>>,
}

/// Builder options, as given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodecOptions {
    pub construction: u8,
    pub r: u32,
    pub m: usize,
    pub q: Option<u32>,
    pub vectors: Option<Vec<Vec<u32>>>,
    pub seed: u64,
    pub max_tries: u32,
    pub alpha: Option<Elem>,
}

impl CodecOptions {
    pub fn new(construction: u8, r: u32, m: usize) -> Self {
        Self {
            construction,
            r,
            m,
            q: None,
            vectors: None,
            seed: 1,
            max_tries: DEFAULT_MAX_TRIES,
            alpha: None,
        }
    }

    fn closed_form(&self) -> bool {
        (2..=3).contains(&self.r)
            && match &self.vectors {
                None => true,
                Some(v) => self.construction == 1 && is_optimal_set(self.r, self.m, v),
            }
    }

    /// GF(3) / GF(4) for the closed forms, GF(16) for searched codecs.
    pub fn default_field(&self) -> u32 {
        if self.closed_form() {
            if self.r == 2 {
                3
            } else {
                4
            }
        } else {
            16
        }
    }
}

fn is_optimal_set(r: u32, m: usize, raw: &[Vec<u32>]) -> bool {
    let want: Vec<Vec<u32>> = optimal_vectors(r, m)
        .iter()
        .map(|v| v.digits().to_vec())
        .collect();
    want == raw
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Codec {
    Zigzag(ZigzagCode),
    AnyNode(AnyNodeCode),
}

/// Result of rebuilding the erased columns of one stripe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeRebuild {
    pub erased: Vec<usize>,
    pub columns: Vec<Vec<Elem>>,
    pub log: AccessLog,
    pub plan: Option<RebuildPlan>,
    pub fallback: Option<Fallback>,
}

impl Codec {
    pub fn build(opts: &CodecOptions) -> Result<Self> {
        let field = Field::new(opts.q.unwrap_or_else(|| opts.default_field()))?;
        match opts.construction {
            1 => {
                if opts.alpha.is_some() {
                    return Err(Error::InvalidParameters(
                        "alpha only applies to construction 2".into(),
                    ));
                }
                if opts.closed_form() {
                    return Ok(Codec::Zigzag(build_optimal(opts.r, opts.m, field)?));
                }
                let vectors = match &opts.vectors {
                    Some(v) => v.clone(),
                    None => optimal_vectors(opts.r, opts.m)
                        .iter()
                        .map(|v| v.digits().to_vec())
                        .collect(),
                };
                let code = crate::rebuild::search_rebuildable(
                    opts.r,
                    opts.m,
                    &vectors,
                    field,
                    opts.seed,
                    opts.max_tries,
                )?;
                Ok(Codec::Zigzag(code))
            }
            2 => {
                if opts.vectors.is_some() {
                    return Err(Error::InvalidParameters(
                        "construction 2 has fixed generator vectors".into(),
                    ));
                }
                let code = if opts.closed_form() {
                    build_anynode(opts.r, opts.m, field, opts.alpha)?
                } else {
                    build_anynode_searched(
                        opts.r,
                        opts.m,
                        field,
                        opts.alpha,
                        opts.seed,
                        opts.max_tries,
                    )?
                };
                Ok(Codec::AnyNode(code))
            }
            c => Err(Error::InvalidParameters(format!(
                "construction must be 1 or 2, got {c}"
            ))),
        }
    }

    pub fn from_descriptor(d: &CodecDescriptor) -> Result<Self> {
        let field = Field::with_polynomial(d.q, d.poly)?;
        let codec = match (d.construction, d.provenance) {
            (1, Provenance::ClosedForm) => {
                if !is_optimal_set(d.r, d.m, &d.vectors) {
                    return Err(Error::Format(
                        "closed-form codec with non-standard vectors".into(),
                    ));
                }
                Codec::Zigzag(build_optimal(d.r, d.m, field)?)
            }
            (1, Provenance::Search { seed, tries }) => {
                Codec::Zigzag(build_from_search(d.r, d.m, &d.vectors, field, seed, tries)?)
            }
            (1, Provenance::Explicit) => {
                let base = d
                    .coefficients
                    .as_ref()
                    .ok_or_else(|| Error::Format("explicit codec without coefficients".into()))?;
                let parsed = parse_vectors(d.r, d.m, &d.vectors)?;
                if base.len() != parsed.len() {
                    return Err(Error::DimensionMismatch {
                        expected: parsed.len(),
                        actual: base.len(),
                    });
                }
                let p = (d.r as u64)
                    .checked_pow(d.m as u32)
                    .filter(|&p| p <= crate::array::MAX_ROWS as u64)
                    .ok_or_else(|| Error::CapExceeded(format!("r^m = {}^{} rows", d.r, d.m)))?
                    as usize;
                if let Some(row) = base.iter().find(|row| row.len() != p) {
                    return Err(Error::DimensionMismatch {
                        expected: p,
                        actual: row.len(),
                    });
                }
                let table = CoefficientTable::from_parity_one(
                    &field,
                    Lattice::new(d.r, d.m),
                    &parsed,
                    base,
                );
                Codec::Zigzag(build_general(d.r, d.m, &d.vectors, field, table)?)
            }
            (2, Provenance::ClosedForm) => Codec::AnyNode(build_anynode(d.r, d.m, field, d.alpha)?),
            (2, Provenance::Search { seed, tries }) => Codec::AnyNode(build_anynode_from_search(
                d.r, d.m, field, d.alpha, seed, tries,
            )?),
            (c, p) => {
                return Err(Error::Format(format!(
                    "unsupported construction {c} with {p:?}"
                )))
            }
        };
        let again = codec.descriptor();
        if again.k != d.k
            || again.zero_node != d.zero_node
            || (d.construction == 2 && again.alpha != d.alpha)
        {
            return Err(Error::Format(
                "descriptor fields disagree with the rebuilt codec".into(),
            ));
        }
        Ok(codec)
    }

    pub fn descriptor(&self) -> CodecDescriptor {
        let f = self.field();
        match self {
            Codec::Zigzag(c) => CodecDescriptor {
                construction: 1,
                r: c.r(),
                m: c.m(),
                k: c.k(),
                q: f.order(),
                poly: f.polynomial_id(),
                vectors: c.vectors().iter().map(|v| v.digits().to_vec()).collect(),
                provenance: c.provenance(),
                alpha: None,
                zero_node: c.zero_node(),
                coefficients: match c.provenance() {
                    Provenance::Explicit => Some(c.coefficients().parity_one()),
                    _ => None,
                },
            },
            Codec::AnyNode(c) => CodecDescriptor {
                construction: 2,
                r: c.r(),
                m: c.m(),
                k: c.k(),
                q: f.order(),
                poly: f.polynomial_id(),
                vectors: Vec::new(),
                provenance: c.provenance(),
                alpha: Some(c.alpha()),
                zero_node: None,
                coefficients: None,
            },
        }
    }

    pub fn array(&self) -> &dyn ArrayCode {
        match self {
            Codec::Zigzag(c) => c,
            Codec::AnyNode(c) => c,
        }
    }

    pub fn field(&self) -> &Field {
        self.array().field()
    }

    pub fn r(&self) -> u32 {
        match self {
            Codec::Zigzag(c) => c.r(),
            Codec::AnyNode(c) => c.r(),
        }
    }

    pub fn k(&self) -> usize {
        self.array().systematic()
    }

    pub fn n(&self) -> usize {
        self.array().nodes()
    }

    pub fn p(&self) -> usize {
        self.array().rows()
    }

    /// Rebuilds every erased column through the construction's own path.
    pub fn rebuild(&self, shards: &[Option<Vec<Elem>>]) -> Result<StripeRebuild> {
        let erased: Vec<usize> = (0..shards.len()).filter(|&j| shards[j].is_none()).collect();
        if erased.is_empty() {
            return Err(Error::InvalidParameters("nothing to rebuild".into()));
        }
        if erased.len() > self.r() as usize {
            return Err(Error::TooManyErasures {
                erased: erased.len(),
                max: self.r() as usize,
            });
        }
        match self {
            Codec::Zigzag(c) => {
                let out = if erased.len() == 1 {
                    rebuild_single(c, shards)?
                } else {
                    rebuild_multi(c, shards)?
                };
                Ok(StripeRebuild {
                    erased: out.erased,
                    columns: out.columns,
                    log: out.log,
                    plan: out.plan,
                    fallback: out.fallback,
                })
            }
            Codec::AnyNode(c) if erased.len() == 1 => {
                let out = c.rebuild_any(shards)?;
                Ok(StripeRebuild {
                    erased,
                    columns: vec![out.column],
                    log: out.log,
                    plan: None,
                    fallback: None,
                })
            }
            Codec::AnyNode(c) => {
                if shards.len() != c.nodes() {
                    return Err(Error::DimensionMismatch {
                        expected: c.nodes(),
                        actual: shards.len(),
                    });
                }
                let mut rd = StripeReader::new(shards, c.p());
                let columns = c.recover_erased(&mut rd)?;
                Ok(StripeRebuild {
                    erased,
                    columns,
                    log: rd.into_log(),
                    plan: None,
                    fallback: Some(Fallback::MultipleErasures),
                })
            }
        }
    }
}
