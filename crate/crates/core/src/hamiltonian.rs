//! Pauli-sum Hamiltonians.
//!
//! Text format: one `<coefficient> <pauli_word>` per line, `#` starts a comment.
//! Letter `k` of a word acts on qubit `k` (qubit 0 is the most significant bit).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Dense diagonalization limit.
pub const MAX_DENSE_QUBITS: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum HamiltonianError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("pauli word {word:?} has length {got}, expected {expected}")]
    LengthMismatch {
        word: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid pauli letter {0:?} (expected one of I, X, Y, Z)")]
    BadLetter(char),
    #[error("hamiltonian has no terms")]
    Empty,
    #[error("chain length must be at least {min}, got {got}")]
    TooSmall { min: usize, got: usize },
    #[error("{0} qubits is beyond the dense diagonalization limit of {MAX_DENSE_QUBITS}")]
    TooLarge(usize),
    #[error("coefficient {0} is not finite")]
    NonFinite(f64),
}

/// A Pauli word stored as bit masks; bit `n-1-k` belongs to qubit `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self { n, x: 0, z: 0 }
    }

    /// Builds a word from `(qubit, letter)` pairs; later pairs overwrite earlier ones.
    pub fn from_sparse(n: usize, ops: &[(usize, char)]) -> Result<Self, HamiltonianError> {
        let mut s = Self::identity(n);
        for &(q, c) in ops {
            s.set(q, c)?;
        }
        Ok(s)
    }

    fn set(&mut self, q: usize, c: char) -> Result<(), HamiltonianError> {
        let bit = 1u64 << (self.n - 1 - q);
        let (x, z) = match c {
            'I' => (false, false),
            'X' => (true, false),
            'Y' => (true, true),
            'Z' => (false, true),
            other => return Err(HamiltonianError::BadLetter(other)),
        };
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn letter(&self, q: usize) -> char {
        let bit = 1u64 << (self.n - 1 - q);
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => 'I',
            (true, false) => 'X',
            (true, true) => 'Y',
            (false, true) => 'Z',
        }
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    /// `i^{#Y}`.
    fn base_phase(&self) -> Complex64 {
        match self.y_count() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Whether the matrix has only real entries.
    pub fn is_real(&self) -> bool {
        self.y_count().is_multiple_of(2)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.letter(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = HamiltonianError;

    fn from_str(word: &str) -> Result<Self, Self::Err> {
        let n = word.chars().count();
        if n == 0 || n > 63 {
            return Err(HamiltonianError::LengthMismatch {
                word: word.to_string(),
                expected: n.clamp(1, 63),
                got: n,
            });
        }
        let mut s = Self::identity(n);
        for (q, c) in word.chars().enumerate() {
            s.set(q, c)?;
        }
        Ok(s)
    }
}

/// Sum of real-weighted Pauli strings with no repeated string.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliHamiltonian {
    n: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliHamiltonian {
    /// Merges duplicate strings by summing coefficients, keeping first-seen order.
    pub fn new(
        n: usize,
        terms: impl IntoIterator<Item = (f64, PauliString)>,
    ) -> Result<Self, HamiltonianError> {
        let mut merged: Vec<(f64, PauliString)> = Vec::new();
        let mut index: HashMap<PauliString, usize> = HashMap::new();
        for (c, p) in terms {
            if !c.is_finite() {
                return Err(HamiltonianError::NonFinite(c));
            }
            if p.n != n {
                return Err(HamiltonianError::LengthMismatch {
                    word: p.to_string(),
                    expected: n,
                    got: p.n,
                });
            }
            match index.get(&p) {
                Some(&i) => merged[i].0 += c,
                None => {
                    index.insert(p, merged.len());
                    merged.push((c, p));
                }
            }
        }
        if merged.is_empty() {
            return Err(HamiltonianError::Empty);
        }
        Ok(Self { n, terms: merged })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, word: &str) -> Option<f64> {
        let p: PauliString = word.parse().ok()?;
        self.terms.iter().find(|(_, q)| *q == p).map(|(c, _)| *c)
    }

    pub fn from_text(text: &str) -> Result<Self, HamiltonianError> {
        let mut terms = Vec::new();
        let mut n = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HamiltonianError::Parse {
                line: line_no,
                message,
            };
            let mut fields = line.split_whitespace();
            let (Some(coef), Some(word), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(err("expected `<coefficient> <pauli_word>`".into()));
            };
            let c: f64 = coef
                .parse()
                .map_err(|_| err(format!("coefficient {coef:?} is not a number")))?;
            if !c.is_finite() {
                return Err(err(format!("coefficient {coef:?} is not finite")));
            }
            let p: PauliString = word.parse().map_err(|e| err(format!("{e}")))?;
            match n {
                None => n = Some(p.n),
                Some(n) if n != p.n => {
                    return Err(err(format!(
                        "pauli word {word:?} has length {}, expected {n}",
                        p.n
                    )))
                }
                _ => {}
            }
            terms.push((c, p));
        }
        let n = n.ok_or(HamiltonianError::Empty)?;
        Self::new(n, terms)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (c, p) in &self.terms {
            out.push_str(&format!("{c:?} {p}\n"));
        }
        out
    }

    /// `H|ψ>` for amplitudes of length `2^n`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(psi.len(), 1 << self.n, "state dimension mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (c, p) in &self.terms {
            let base = p.base_phase() * *c;
            let neg = -base;
            for (b, a) in psi.iter().enumerate() {
                let w = if (b as u64 & p.z).count_ones().is_multiple_of(2) {
                    base
                } else {
                    neg
                };
                out[b ^ p.x as usize] += w * a;
            }
        }
        out
    }

    /// `<ψ|H|ψ>` (real part; the imaginary part vanishes for Hermitian H).
    pub fn expectation(&self, psi: &[Complex64]) -> f64 {
        assert_eq!(psi.len(), 1 << self.n, "state dimension mismatch");
        let mut total = 0.0;
        for (c, p) in &self.terms {
            let mut acc = Complex64::new(0.0, 0.0);
            for (b, a) in psi.iter().enumerate() {
                let v = psi[b ^ p.x as usize].conj() * a;
                if (b as u64 & p.z).count_ones().is_multiple_of(2) {
                    acc += v;
                } else {
                    acc -= v;
                }
            }
            total += c * (p.base_phase() * acc).re;
        }
        total
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn to_dense(&self) -> Result<DMatrix<Complex64>, HamiltonianError> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(HamiltonianError::TooLarge(self.n));
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for (c, p) in &self.terms {
            let base = p.base_phase() * *c;
            for b in 0..dim {
                let sign = if (b as u64 & p.z).count_ones().is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                };
                m[(b ^ p.x as usize, b)] += base * sign;
            }
        }
        Ok(m)
    }

    /// Smallest eigenvalue of the dense matrix.
    pub fn exact_ground_energy(&self) -> Result<f64, HamiltonianError> {
        let dense = self.to_dense()?;
        let dim = dense.nrows();
        let eig = if self.terms.iter().all(|(_, p)| p.is_real()) {
            dense.map(|z| z.re).symmetric_eigenvalues()
        } else {
            // [[A, -B], [B, A]] has the spectrum of A + iB, each value twice.
            let mut r = DMatrix::zeros(2 * dim, 2 * dim);
            for i in 0..dim {
                for j in 0..dim {
                    let z = dense[(i, j)];
                    r[(i, j)] = z.re;
                    r[(i + dim, j + dim)] = z.re;
                    r[(i, j + dim)] = -z.im;
                    r[(i + dim, j)] = z.im;
                }
            }
            r.symmetric_eigenvalues()
        };
        Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
    }
}

impl fmt::Display for PauliHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn chain_bonds(n: usize, periodic: bool) -> impl Iterator<Item = (usize, usize)> {
    let bonds = if periodic { n } else { n - 1 };
    (0..bonds).map(move |i| (i, (i + 1) % n))
}

fn two_site(n: usize, a: usize, b: usize, c: char) -> PauliString {
    let mut s = PauliString::identity(n);
    s.set(a, c).expect("valid letter");
    s.set(b, c).expect("valid letter");
    s
}

fn one_site(n: usize, a: usize, c: char) -> PauliString {
    let mut s = PauliString::identity(n);
    s.set(a, c).expect("valid letter");
    s
}

/// `sum_i Z_i Z_{i+1} + X_i`.
pub fn build_tfim(n: usize, periodic: bool) -> Result<PauliHamiltonian, HamiltonianError> {
    if n < 2 {
        return Err(HamiltonianError::TooSmall { min: 2, got: n });
    }
    let zz = chain_bonds(n, periodic).map(|(a, b)| (1.0, two_site(n, a, b, 'Z')));
    let x = (0..n).map(|i| (1.0, one_site(n, i, 'X')));
    PauliHamiltonian::new(n, zz.chain(x).collect::<Vec<_>>())
}

/// `sum_i X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1} + Z_i`.
pub fn build_heisenberg(n: usize, periodic: bool) -> Result<PauliHamiltonian, HamiltonianError> {
    if n < 2 {
        return Err(HamiltonianError::TooSmall { min: 2, got: n });
    }
    let mut terms = Vec::new();
    for (a, b) in chain_bonds(n, periodic) {
        for c in ['X', 'Y', 'Z'] {
            terms.push((1.0, two_site(n, a, b, c)));
        }
    }
    terms.extend((0..n).map(|i| (1.0, one_site(n, i, 'Z'))));
    PauliHamiltonian::new(n, terms)
}
