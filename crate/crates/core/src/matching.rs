//! Occlusion-masked cosine matching, template aggregation and gallery
//! identification.
//!
//! Two signatures are compared patch by patch over the set of patches usable
//! in *both*; the score is the mean of per-patch cosines. Pairs with no
//! mutually usable patch are not scorable — that is reported as a distinct
//! condition, never as a score of 0.

use crate::signature::{OcclusionEncoding, Signature, SignatureError};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("signature shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("no mutually visible patches; the pair cannot be scored")]
    NoOverlap,
    #[error("gallery is empty")]
    EmptyGallery,
    #[error("cannot aggregate an empty signature list")]
    EmptyTemplate,
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Similarity over the mutually usable patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchScore {
    /// Mean per-patch cosine, in [-1, 1].
    pub value: f64,
    /// Number of patches usable in both signatures.
    pub mutually_visible: usize,
}

/// A subject template: signature-shaped average plus, per patch, how many
/// contributing signatures had the patch usable.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub signature: Signature,
    pub source_count: Vec<u32>,
}

/// Anything that can stand in for a signature when scoring.
pub trait AsSignature {
    fn as_signature(&self) -> &Signature;
}

impl AsSignature for Signature {
    fn as_signature(&self) -> &Signature {
        self
    }
}

impl AsSignature for Template {
    fn as_signature(&self) -> &Signature {
        &self.signature
    }
}

impl<T: AsSignature> AsSignature for &T {
    fn as_signature(&self) -> &Signature {
        (*self).as_signature()
    }
}

fn check_shapes(a: &Signature, b: &Signature) -> Result<(), MatchError> {
    if !a.same_shape(b) {
        return Err(MatchError::ShapeMismatch(format!(
            "{:?} {}x{} vs {:?} {}x{}",
            a.preset, a.patch_count, a.dim, b.preset, b.patch_count, b.dim
        )));
    }
    Ok(())
}

/// Mean cosine over patches usable in both signatures.
///
/// Exactly symmetric in its arguments; patches unusable in either signature
/// never influence the result.
pub fn match_signatures(a: &Signature, b: &Signature) -> Result<MatchScore, MatchError> {
    check_shapes(a, b)?;
    let mut sum = 0.0f64;
    let mut used = 0usize;
    for i in 0..a.patch_count {
        if !(a.usable(i) && b.usable(i)) {
            continue;
        }
        let ra = a.row(i);
        let rb = b.row(i);
        let mut dot = 0.0f64;
        let mut na = 0.0f64;
        let mut nb = 0.0f64;
        for (&x, &y) in ra.iter().zip(rb) {
            dot += x as f64 * y as f64;
            na += x as f64 * x as f64;
            nb += y as f64 * y as f64;
        }
        if na == 0.0 || nb == 0.0 {
            // A usable patch with a zero row violates the signature
            // invariant; skip it rather than divide by zero.
            continue;
        }
        let cosine = (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0);
        sum += cosine;
        used += 1;
    }
    if used == 0 {
        return Err(MatchError::NoOverlap);
    }
    Ok(MatchScore {
        value: sum / used as f64,
        mutually_visible: used,
    })
}

/// Aggregates several signatures of one subject into a template.
///
/// Per patch, the usable rows are averaged weighted by their visible
/// fraction and re-normalized; fractions are averaged over contributors.
/// Patches usable nowhere stay zero with `source_count` 0. In the
/// degenerate case where weighted rows cancel to numerical zero the patch
/// is dropped as unusable.
pub fn aggregate_template(sigs: &[Signature]) -> Result<Template, MatchError> {
    let Some(first) = sigs.first() else {
        return Err(MatchError::EmptyTemplate);
    };
    for s in &sigs[1..] {
        check_shapes(first, s)?;
        if s.encoding.threshold != first.encoding.threshold {
            return Err(MatchError::ShapeMismatch(format!(
                "occlusion thresholds differ: {} vs {}",
                first.encoding.threshold, s.encoding.threshold
            )));
        }
    }
    let k = first.patch_count;
    let dim = first.dim;
    let mut features = vec![0.0f32; k * dim];
    let mut fractions = vec![0.0f64; k];
    let mut flags = vec![false; k];
    let mut source_count = vec![0u32; k];
    let mut acc = vec![0.0f64; dim];

    for patch in 0..k {
        acc.iter_mut().for_each(|v| *v = 0.0);
        let mut contributors = 0u32;
        let mut fraction_sum = 0.0f64;
        for s in sigs {
            if !s.usable(patch) {
                continue;
            }
            let weight = s.encoding.fractions[patch];
            for (a, &v) in acc.iter_mut().zip(s.row(patch)) {
                *a += weight * v as f64;
            }
            contributors += 1;
            fraction_sum += s.encoding.fractions[patch];
        }
        if contributors == 0 {
            continue;
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        for (dst, &v) in features[patch * dim..(patch + 1) * dim]
            .iter_mut()
            .zip(acc.iter())
        {
            *dst = (v / norm) as f32;
        }
        fractions[patch] = fraction_sum / contributors as f64;
        flags[patch] = true;
        source_count[patch] = contributors;
    }

    let subject_hint = sigs
        .iter()
        .map(|s| s.subject_hint.clone())
        .reduce(|a, b| if a == b { a } else { None })
        .flatten();

    Ok(Template {
        signature: Signature {
            preset: first.preset,
            patch_count: k,
            dim,
            features,
            encoding: OcclusionEncoding {
                fractions,
                flags,
                threshold: first.encoding.threshold,
            },
            subject_hint,
        },
        source_count,
    })
}

/// One row of an identification result.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedMatch {
    pub label: String,
    /// `None` marks a pair with no mutually visible patches; such entries
    /// sort after every scorable entry.
    pub score: Option<MatchScore>,
    /// Position of the entry in the input gallery.
    pub gallery_index: usize,
}

/// Scores the probe against every gallery entry and ranks descending.
///
/// Ties break toward the earlier gallery position; unscorable pairs rank
/// last (in gallery order). The output is always a permutation of the
/// gallery.
pub fn identify<P: AsSignature, G: AsSignature>(
    probe: &P,
    gallery: &[(String, G)],
) -> Result<Vec<RankedMatch>, MatchError> {
    if gallery.is_empty() {
        return Err(MatchError::EmptyGallery);
    }
    let probe = probe.as_signature();
    let mut ranked = Vec::with_capacity(gallery.len());
    for (idx, (label, entry)) in gallery.iter().enumerate() {
        let score = match match_signatures(probe, entry.as_signature()) {
            Ok(s) => Some(s),
            Err(MatchError::NoOverlap) => None,
            Err(e) => return Err(e),
        };
        ranked.push(RankedMatch {
            label: label.clone(),
            score,
            gallery_index: idx,
        });
    }
    ranked.sort_by(|a, b| match (&a.score, &b.score) {
        (Some(x), Some(y)) => y
            .value
            .partial_cmp(&x.value)
            .expect("scores are finite")
            .then(a.gallery_index.cmp(&b.gallery_index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.gallery_index.cmp(&b.gallery_index),
    });
    Ok(ranked)
}

/// Writes a score matrix as CSV: probe ids as rows, gallery labels as
/// columns, six-decimal scores, `NA` for unscorable pairs.
pub fn write_score_matrix(
    path: &Path,
    gallery_labels: &[String],
    rows: &[(String, Vec<Option<f64>>)],
) -> Result<(), MatchError> {
    let mut text = String::from("probe_id");
    for label in gallery_labels {
        write!(text, ",{label}").unwrap();
    }
    text.push('\n');
    for (probe_id, scores) in rows {
        debug_assert_eq!(scores.len(), gallery_labels.len());
        write!(text, "{probe_id}").unwrap();
        for score in scores {
            match score {
                Some(v) => write!(text, ",{v:.6}").unwrap(),
                None => text.push_str(",NA"),
            }
        }
        text.push('\n');
    }
    fs::write(path, text).map_err(|e| MatchError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Reads a score matrix written by [`write_score_matrix`].
pub fn read_score_matrix(
    path: &Path,
) -> Result<(Vec<String>, Vec<(String, Vec<Option<f64>>)>), MatchError> {
    let text = fs::read_to_string(path).map_err(|e| MatchError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let bad = |message: String| {
        MatchError::Signature(SignatureError::File(format!(
            "{}: {message}",
            path.display()
        )))
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty score matrix".into()))?;
    let labels: Vec<String> = header.split(',').skip(1).map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let probe_id = fields.next().unwrap_or("").to_owned();
        let scores: Vec<Option<f64>> = fields
            .map(|f| {
                if f == "NA" {
                    Ok(None)
                } else {
                    f.parse::<f64>().map(Some).map_err(|_| {
                        bad(format!("bad score '{f}' at line {}", lineno + 2))
                    })
                }
            })
            .collect::<Result<_, _>>()?;
        if scores.len() != labels.len() {
            return Err(bad(format!(
                "row {} has {} scores for {} gallery columns",
                lineno + 2,
                scores.len(),
                labels.len()
            )));
        }
        rows.push((probe_id, scores));
    }
    Ok((labels, rows))
}
