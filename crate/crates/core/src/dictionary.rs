//! Unit-norm dictionaries: construction, synthetic generators, the lateral
//! competition weights, and a small binary on-disk format.
//!
//! A dictionary is an `input_dim x atom_count` matrix whose columns (atoms)
//! have unit Euclidean norm. Norms are always accumulated in `f64`, whatever
//! the element type, so the acceptance bands behave identically for `f32`
//! and `f64` dictionaries.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::Scalar;

/// Magic bytes opening the dictionary file format.
pub const FILE_MAGIC: [u8; 4] = *b"LCAD";
/// Current format version.
pub const FILE_VERSION: u32 = 1;

/// Column norms within this band of 1 load untouched, preserving the exact
/// stored bytes across a save/load/save cycle.
const NORM_ACCEPT: f64 = 1e-6;
/// Column norms within this band of 1 are silently renormalized on load.
const NORM_REPAIR: f64 = 1e-3;
/// Band enforced when wrapping an existing matrix directly.
const NORM_CONSTRUCT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    atoms: Mat<T>,
}

fn col_norm_f64<T: Scalar>(col: &[T]) -> f64 {
    col.iter()
        .map(|v| {
            let x = v.to_f64().expect("float widens to f64");
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

impl<T: Scalar> Dictionary<T> {
    /// Wraps a matrix whose columns are already unit norm (within 1e-4).
    pub fn new(atoms: Mat<T>) -> Result<Dictionary<T>> {
        if !atoms.is_finite() {
            return Err(Error::NonFinite {
                context: "dictionary atoms",
            });
        }
        for c in 0..atoms.cols() {
            let norm = col_norm_f64(atoms.col(c));
            if (norm - 1.0).abs() > NORM_CONSTRUCT {
                return Err(Error::NormDeviation { index: c, norm });
            }
        }
        Ok(Dictionary { atoms })
    }

    /// Normalizes every column to unit length, in `f64` precision.
    pub fn from_unnormalized(raw: Mat<T>) -> Result<Dictionary<T>> {
        if !raw.is_finite() {
            return Err(Error::NonFinite {
                context: "dictionary atoms",
            });
        }
        let mut atoms = raw;
        for c in 0..atoms.cols() {
            let norm = col_norm_f64(atoms.col(c));
            if norm == 0.0 {
                return Err(Error::ZeroColumn { index: c });
            }
            for v in atoms.col_mut(c) {
                let scaled = v.to_f64().expect("float widens to f64") / norm;
                *v = T::from_f64(scaled).expect("f64 narrows to the element type");
            }
        }
        Ok(Dictionary { atoms })
    }

    /// Atoms with independent standard normal entries, normalized.
    /// The same seed always produces the same dictionary.
    pub fn gaussian(input_dim: usize, atom_count: usize, seed: u64) -> Result<Dictionary<T>> {
        if input_dim == 0 || atom_count == 0 {
            return Err(Error::InvalidConfig {
                reason: "dictionary dimensions must be positive".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw = Mat::from_fn(input_dim, atom_count, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            T::from_f64(v).expect("f64 narrows to the element type")
        });
        Dictionary::from_unnormalized(raw)
    }

    /// Separable cosine atoms on an `height x width` pixel grid, laid out on
    /// a frequency grid just large enough for `atom_count` atoms. With
    /// `atom_count == height * width` on a square grid this is exactly the
    /// 2D DCT-II basis; more atoms pack the same band with fractional
    /// frequencies, giving a smooth overcomplete frame.
    pub fn overcomplete_dct(
        height: usize,
        width: usize,
        atom_count: usize,
    ) -> Result<Dictionary<T>> {
        if height == 0 || width == 0 || atom_count == 0 {
            return Err(Error::InvalidConfig {
                reason: "dictionary dimensions must be positive".into(),
            });
        }
        let (h, w, n) = (height as f64, width as f64, atom_count as f64);
        let grid_p = ((n * h / w).sqrt().ceil() as usize).max(1);
        let grid_q = atom_count.div_ceil(grid_p);
        let raw = Mat::from_fn(height * width, atom_count, |r, a| {
            let (y, x) = (r / width, r % width);
            let (p, q) = (a / grid_q, a % grid_q);
            let fp = p as f64 * h / grid_p as f64;
            let fq = q as f64 * w / grid_q as f64;
            let v = (std::f64::consts::PI * (2 * y + 1) as f64 * fp / (2.0 * h)).cos()
                * (std::f64::consts::PI * (2 * x + 1) as f64 * fq / (2.0 * w)).cos();
            T::from_f64(v).expect("f64 narrows to the element type")
        });
        Dictionary::from_unnormalized(raw)
    }

    pub fn atoms(&self) -> &Mat<T> {
        &self.atoms
    }

    /// Pixels per atom.
    pub fn input_dim(&self) -> usize {
        self.atoms.rows()
    }

    /// Number of atoms.
    pub fn atom_count(&self) -> usize {
        self.atoms.cols()
    }

    pub fn atom(&self, index: usize) -> &[T] {
        self.atoms.col(index)
    }

    /// `dict^T * dict`.
    pub fn gram(&self) -> Mat<T> {
        self.atoms.gram()
    }

    /// Lateral competition weights `-tau * (gram - I)`: zero on the
    /// diagonal (exactly, not by subtraction), `-tau * <atom_i, atom_j>`
    /// off it.
    pub fn lateral_weights(&self, tau: T) -> Mat<T> {
        let gram = self.gram();
        Mat::from_fn(self.atom_count(), self.atom_count(), |r, c| {
            if r == c {
                T::zero()
            } else {
                -tau * gram.get(r, c)
            }
        })
    }

    /// `dict^T * x`: drive of each atom for an input image.
    pub fn analyze(&self, x: &[T]) -> Result<Vec<T>> {
        self.atoms.transpose_dot(x)
    }

    /// `dict * a`: image reconstructed from coefficients.
    pub fn synthesize(&self, coefficients: &[T]) -> Result<Vec<T>> {
        self.atoms.dot(coefficients)
    }

    /// Writes the dictionary: magic, version, dims, then the atoms as
    /// little-endian `f32`, column-major, nothing after.
    pub fn save(&self, path: &Path) -> Result<()> {
        if self.input_dim() > u32::MAX as usize || self.atom_count() > u32::MAX as usize {
            return Err(Error::InvalidConfig {
                reason: "dictionary too large for the file format".into(),
            });
        }
        let mut buf = Vec::with_capacity(16 + 4 * self.atoms.as_slice().len());
        buf.extend_from_slice(&FILE_MAGIC);
        buf.extend_from_slice(&FILE_VERSION.to_le_bytes());
        buf.extend_from_slice(&(self.input_dim() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.atom_count() as u32).to_le_bytes());
        for v in self.atoms.as_slice() {
            let bits = v.to_f32().expect("float narrows to f32");
            buf.extend_from_slice(&bits.to_le_bytes());
        }
        fs::write(path, buf).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })
    }

    /// Reads a dictionary written by [`Dictionary::save`].
    ///
    /// Column norms within 1e-6 of 1 are kept exactly as stored, so saving
    /// the loaded dictionary reproduces the file byte for byte. Norms within
    /// 1e-3 are renormalized; anything further off is an error.
    pub fn load(path: &Path) -> Result<Dictionary<T>> {
        let bytes = fs::read(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        let fail = |reason: String| Error::Format {
            path: path.into(),
            reason,
        };
        if bytes.len() < 16 {
            return Err(fail(format!(
                "header needs 16 bytes, file has {}",
                bytes.len()
            )));
        }
        if bytes[0..4] != FILE_MAGIC {
            return Err(fail("bad magic bytes".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != FILE_VERSION {
            return Err(fail(format!("unsupported version {version}")));
        }
        let rows = word(8) as usize;
        let cols = word(12) as usize;
        if rows == 0 || cols == 0 {
            return Err(fail("empty dictionary".into()));
        }
        let expected = 16 + 4 * (rows as u64) * (cols as u64);
        if bytes.len() as u64 != expected {
            return Err(fail(format!(
                "expected {expected} bytes for a {rows}x{cols} dictionary, got {}",
                bytes.len()
            )));
        }

        let mut values = Vec::with_capacity(rows * cols);
        for chunk in bytes[16..].chunks_exact(4) {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(fail(format!("non-finite value at entry {}", values.len())));
            }
            values.push(v as f64);
        }

        for c in 0..cols {
            let col = &mut values[c * rows..(c + 1) * rows];
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            let off = (norm - 1.0).abs();
            if off <= NORM_ACCEPT {
                continue;
            }
            if off <= NORM_REPAIR {
                for v in col.iter_mut() {
                    *v /= norm;
                }
            } else {
                return Err(Error::NormDeviation { index: c, norm });
            }
        }

        let atoms = Mat::from_fn(rows, cols, |r, c| {
            T::from_f64(values[c * rows + r]).expect("f64 narrows to the element type")
        });
        Ok(Dictionary { atoms })
    }
}
