//! Kernel similarity matrices over speaker embeddings.
//!
//! All kernels are evaluated from one shared Gram matrix in double
//! precision. Each unordered pair `(i, j)` is computed once and mirrored, so
//! every [`KernelMatrix`] is bit-exactly symmetric.

use std::f64::consts::PI;
use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Cosine,
    Poly,
    Exp,
    ArcCos,
}

/// Identity of one kernel function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelId {
    /// `x.y / (|x| |y|)`
    Cosine,
    /// `(x.y + offset)^degree`
    Poly { offset: f64, degree: u32 },
    /// Gaussian RBF `exp(-|x - y|^2 / (2 sigma^2))`
    Exp { sigma: f64 },
    /// Arc-cosine kernel of order 0 or 1.
    ArcCos { degree: u32 },
}

/// `(name, kernel)` pairs for every named kernel, in display order.
pub const NAMED_KERNELS: [(&str, KernelId); 10] = [
    ("cosine", KernelId::Cosine),
    ("poly1", KernelId::Poly { offset: 0.0, degree: 2 }),
    ("poly2", KernelId::Poly { offset: 1.0, degree: 2 }),
    ("poly3", KernelId::Poly { offset: 0.0, degree: 3 }),
    ("poly4", KernelId::Poly { offset: 1.0, degree: 3 }),
    ("exp1", KernelId::Exp { sigma: 0.5 }),
    ("exp2", KernelId::Exp { sigma: 1.0 }),
    ("exp3", KernelId::Exp { sigma: 2.0 }),
    ("arccos0", KernelId::ArcCos { degree: 0 }),
    ("arccos1", KernelId::ArcCos { degree: 1 }),
];

impl KernelId {
    pub fn family(&self) -> KernelFamily {
        match self {
            KernelId::Cosine => KernelFamily::Cosine,
            KernelId::Poly { .. } => KernelFamily::Poly,
            KernelId::Exp { .. } => KernelFamily::Exp,
            KernelId::ArcCos { .. } => KernelFamily::ArcCos,
        }
    }

    /// Looks up a named kernel such as `poly3` or `arccos1`.
    pub fn from_name(name: &str) -> Option<KernelId> {
        NAMED_KERNELS
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, k)| *k)
    }

    /// Short name for named kernels, `None` for parameterizations outside the
    /// named set.
    pub fn name(&self) -> Option<&'static str> {
        NAMED_KERNELS.iter().find(|(_, k)| k == self).map(|(n, _)| *n)
    }

    /// Whether this kernel is one of the ten named kernels.
    pub fn is_canonical(&self) -> bool {
        self.name().is_some()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelId::Cosine => Ok(()),
            KernelId::Poly { offset, degree } => {
                if degree == 0 {
                    Err(Error::InvalidKernel("polynomial degree must be >= 1".into()))
                } else if !(offset.is_finite() && offset >= 0.0) {
                    Err(Error::InvalidKernel(format!(
                        "polynomial offset must be finite and >= 0, got {offset}"
                    )))
                } else {
                    Ok(())
                }
            }
            KernelId::Exp { sigma } => {
                if sigma.is_finite() && sigma > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidKernel(format!(
                        "exponential bandwidth must be positive, got {sigma}"
                    )))
                }
            }
            KernelId::ArcCos { degree } => {
                if degree <= 1 {
                    Ok(())
                } else {
                    Err(Error::InvalidKernel(format!(
                        "arc-cosine degree must be 0 or 1, got {degree}"
                    )))
                }
            }
        }
    }

    fn needs_nonzero_rows(&self) -> bool {
        matches!(self, KernelId::Cosine | KernelId::ArcCos { .. })
    }

    /// Evaluates the kernel from a Gram entry `dot = x.y` and the squared
    /// norms `sq_x`, `sq_y`.
    #[inline]
    pub fn eval(&self, dot: f64, sq_x: f64, sq_y: f64) -> f64 {
        match *self {
            KernelId::Cosine => (dot / (sq_x * sq_y).sqrt()).clamp(-1.0, 1.0),
            KernelId::Poly { offset, degree } => (dot + offset).powi(degree as i32),
            KernelId::Exp { sigma } => {
                let dist2 = (sq_x + sq_y - 2.0 * dot).max(0.0);
                (-dist2 / (2.0 * sigma * sigma)).exp()
            }
            KernelId::ArcCos { degree } => {
                let norms = (sq_x * sq_y).sqrt();
                let theta = (dot / norms).clamp(-1.0, 1.0).acos();
                match degree {
                    0 => 1.0 - theta / PI,
                    _ => norms / PI * (theta.sin() + (PI - theta) * theta.cos()),
                }
            }
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(name) = self.name() {
            return f.write_str(name);
        }
        match self {
            KernelId::Cosine => f.write_str("cosine"),
            KernelId::Poly { offset, degree } => write!(f, "poly(a={offset},b={degree})"),
            KernelId::Exp { sigma } => write!(f, "exp(sigma={sigma})"),
            KernelId::ArcCos { degree } => write!(f, "arccos{degree}"),
        }
    }
}

/// The five-kernel bank: four polynomials and the order-1 arc-cosine kernel.
pub fn default_bank() -> Vec<KernelId> {
    parse_bank("paper5").expect("built-in preset")
}

/// Parses a kernel selection.
///
/// Tokens are separated by `+` or `,`. A token is a preset (`paper5`, `all`),
/// a kernel name (`poly2`), or a numbered range within one family
/// (`poly1-4`, `arccos0-1`, `exp1-3`). Duplicates are rejected.
pub fn parse_bank(selection: &str) -> Result<Vec<KernelId>> {
    let mut bank: Vec<KernelId> = Vec::new();
    for token in selection.split(['+', ',']).map(str::trim) {
        if token.is_empty() {
            return Err(Error::InvalidKernel(format!("empty token in '{selection}'")));
        }
        for id in expand_token(token)? {
            if bank.contains(&id) {
                return Err(Error::DuplicateKernel(id.to_string()));
            }
            bank.push(id);
        }
    }
    Ok(bank)
}

fn expand_token(token: &str) -> Result<Vec<KernelId>> {
    let lower = token.to_ascii_lowercase();
    match lower.as_str() {
        "paper5" => return parse_bank("poly1-4+arccos1"),
        "all" => return Ok(NAMED_KERNELS.iter().map(|(_, k)| *k).collect()),
        _ => {}
    }
    if let Some(id) = KernelId::from_name(&lower) {
        return Ok(vec![id]);
    }
    let unknown = || Error::InvalidKernel(format!("unknown kernel '{token}'"));
    let split = lower.find(|c: char| c.is_ascii_digit()).ok_or_else(unknown)?;
    let (family, range) = lower.split_at(split);
    let (lo, hi) = range.split_once('-').ok_or_else(unknown)?;
    let lo: u32 = lo.parse().map_err(|_| unknown())?;
    let hi: u32 = hi.parse().map_err(|_| unknown())?;
    if lo > hi {
        return Err(unknown());
    }
    (lo..=hi)
        .map(|i| KernelId::from_name(&format!("{family}{i}")).ok_or_else(unknown))
        .collect()
}

/// Display name of a bank, e.g. `poly1+poly2+arccos1`.
pub fn bank_name(bank: &[KernelId]) -> String {
    bank.iter().map(ToString::to_string).collect::<Vec<_>>().join("+")
}

/// A symmetric `n x n` kernel similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: Array2<f64>,
    pub id: KernelId,
}

impl KernelMatrix {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Upper-triangle Gram matrix plus squared norms.
struct Gram {
    dots: Array2<f64>,
    sq_norms: Vec<f64>,
}

impl Gram {
    fn new(emb: &EmbeddingSet) -> Self {
        let x = emb.vectors();
        let dots = x.dot(&x.t());
        let sq_norms = (0..emb.len()).map(|i| dots[[i, i]]).collect();
        Gram { dots, sq_norms }
    }

    fn check_nonzero(&self) -> Result<()> {
        match self.sq_norms.iter().position(|&s| s == 0.0) {
            Some(i) => Err(Error::ZeroNormRow(i)),
            None => Ok(()),
        }
    }

    fn kernel(&self, id: KernelId) -> Result<KernelMatrix> {
        id.validate()?;
        if id.needs_nonzero_rows() {
            self.check_nonzero()?;
        }
        let n = self.sq_norms.len();
        let mut values = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let v = id.eval(self.dots[[i, j]], self.sq_norms[i], self.sq_norms[j]);
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                values[[i, j]] = v;
                values[[j, i]] = v;
            }
        }
        Ok(KernelMatrix { values, id })
    }
}

pub fn compute_kernel(emb: &EmbeddingSet, id: KernelId) -> Result<KernelMatrix> {
    Gram::new(emb).kernel(id)
}

/// Computes one kernel matrix per id, preserving order. The Gram matrix is
/// shared across the bank.
pub fn compute_kernel_bank(emb: &EmbeddingSet, ids: &[KernelId]) -> Result<Vec<KernelMatrix>> {
    if ids.is_empty() {
        return Err(Error::EmptyBank);
    }
    for (i, id) in ids.iter().enumerate() {
        if ids[..i].contains(id) {
            return Err(Error::DuplicateKernel(id.to_string()));
        }
    }
    let gram = Gram::new(emb);
    ids.par_iter().map(|&id| gram.kernel(id)).collect()
}
