//! JSON interchange format: `{"dim": 3, "cutoff": M, "modes": [[p, m, k, re, im], ...]}`.
//!
//! On the 2-torus entries are `[n1, n2, re, im]`. Omitted modes are zero; output lists the
//! nonzero modes in lexicographic order.

use std::collections::HashSet;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Dim, FourierField, ModeIndex};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModeEntry {
    Torus3(i64, i64, i64, f64, f64),
    Torus2(i64, i64, f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDocument {
    pub dim: u8,
    pub cutoff: usize,
    pub modes: Vec<ModeEntry>,
}

impl FieldDocument {
    pub fn from_field<T: Real>(field: &FourierField<T>) -> Self {
        let modes = field
            .iter()
            .filter(|(_, c)| !(c.re == T::zero() && c.im == T::zero()))
            .map(|(n, c)| {
                let (re, im) = (c.re.to_f64_lossy(), c.im.to_f64_lossy());
                match field.dim() {
                    Dim::Torus3 => ModeEntry::Torus3(n.p, n.m, n.k, re, im),
                    Dim::Torus2 => ModeEntry::Torus2(n.p, n.m, re, im),
                }
            })
            .collect();
        Self {
            dim: field.dim().rank() as u8,
            cutoff: field.cutoff(),
            modes,
        }
    }

    pub fn to_field<T: Real>(&self) -> Result<FourierField<T>> {
        let dim = Dim::from_rank(self.dim as usize)
            .ok_or_else(|| Error::Format(format!("dim must be 2 or 3, got {}", self.dim)))?;
        if self.cutoff == 0 {
            return Err(Error::Format("cutoff must be positive".into()));
        }
        let mut field = FourierField::zeros(dim, self.cutoff);
        let mut seen = HashSet::new();
        for (i, entry) in self.modes.iter().enumerate() {
            let (n, re, im) = match (dim, entry) {
                (Dim::Torus3, ModeEntry::Torus3(p, m, k, re, im)) => (ModeIndex::new(*p, *m, *k), *re, *im),
                (Dim::Torus2, ModeEntry::Torus2(p, m, re, im)) => (ModeIndex::t2(*p, *m), *re, *im),
                _ => {
                    return Err(Error::Format(format!(
                        "modes[{i}] has the wrong arity for dim {}",
                        self.dim
                    )))
                }
            };
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Format(format!("modes[{i}] has a non-finite coefficient")));
            }
            if !field.contains(n) {
                return Err(Error::Format(format!(
                    "modes[{i}] = {n} lies outside cutoff {}",
                    self.cutoff
                )));
            }
            if !seen.insert(n) {
                return Err(Error::Format(format!("modes[{i}] repeats mode {n}")));
            }
            field.set(n, Complex::new(T::lit(re), T::lit(im)));
        }
        Ok(field)
    }
}

impl<T: Real> FourierField<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&FieldDocument::from_field(self)).expect("field serialization")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: FieldDocument = serde_json::from_str(text)?;
        doc.to_field()
    }
}
