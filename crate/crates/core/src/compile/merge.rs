use crate::error::{Error, Result};
use crate::mesh::{FacetRef, HyperplaneRegistry};
use crate::net::{ReluNet2, Triplet};

/// Network whose first-layer neurons are `σ(w·x + b − ε|w|)` for individual
/// cell facets, each tagged with its registry entry.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggedNet {
    pub net: ReluNet2,
    pub tags: Vec<FacetRef>,
    pub epsilon: f64,
}

/// Replaces the first layer with one canonical neuron `σ(u·x + β − ε)` per
/// registry entry. Since `σ(λ(u·x + β − ε)) = λσ(u·x + β − ε)` for `λ > 0`,
/// each consumer weight is multiplied by its facet's scale.
pub fn merge_duplicate_neurons(tagged: &TaggedNet, registry: &HyperplaneRegistry) -> Result<ReluNet2> {
    let net = &tagged.net;
    if tagged.tags.len() != net.h1() {
        return Err(Error::Internal(format!(
            "{} tags for {} first-layer neurons",
            tagged.tags.len(),
            net.h1()
        )));
    }
    if let Some(t) = tagged.tags.iter().find(|t| t.entry >= registry.len()) {
        return Err(Error::Internal(format!("tag references missing registry entry {}", t.entry)));
    }
    let w1 = registry.entries().iter().map(|e| e.normal.clone()).collect();
    let b1 = registry.entries().iter().map(|e| e.offset - tagged.epsilon).collect();

    let mut w2: Vec<Triplet> = net
        .w2
        .iter()
        .map(|t| {
            let tag = tagged.tags[t.col];
            Triplet {
                row: t.row,
                col: tag.entry,
                value: t.value * tag.scale,
            }
        })
        .collect();
    w2.sort_by_key(|t| (t.row, t.col));
    w2.dedup_by(|later, kept| {
        let same = later.row == kept.row && later.col == kept.col;
        if same {
            kept.value += later.value;
        }
        same
    });

    Ok(ReluNet2 {
        n: net.n,
        w1,
        b1,
        w2,
        b2: net.b2.clone(),
        w3: net.w3.clone(),
        output_bias: net.output_bias,
        provenance: net.provenance.clone(),
    })
}
