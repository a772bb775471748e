//! Pauli strings and the Hamiltonian families used as label sources.
//!
//! Qubit `q` (0-based) is bit `n − 1 − q` of the basis index, so qubit 0 is
//! the most significant bit.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c {
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `coefficient · ⊗_q σ_q` with identity on unlisted qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    n: usize,
    letters: Vec<(usize, Pauli)>,
    coefficient: f64,
    flip_mask: usize,
    phase_mask: usize,
    ny: u32,
}

impl PauliString {
    pub fn new(n: usize, letters: &[(usize, Pauli)], coefficient: f64) -> Result<Self> {
        let mut sorted = letters.to_vec();
        sorted.sort_by_key(|&(q, _)| q);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidArgument(format!("qubit {} listed twice", w[0].0)));
            }
        }
        let mut flip_mask = 0;
        let mut phase_mask = 0;
        let mut ny = 0;
        for &(q, p) in &sorted {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
            let bit = 1usize << (n - 1 - q);
            match p {
                Pauli::X => flip_mask |= bit,
                Pauli::Z => phase_mask |= bit,
                Pauli::Y => {
                    flip_mask |= bit;
                    phase_mask |= bit;
                    ny += 1;
                }
            }
        }
        Ok(Self { n, letters: sorted, coefficient, flip_mask, phase_mask, ny })
    }

    /// Builds e.g. `("ZXZ", [0, 1, 2])`.
    pub fn from_letters(n: usize, word: &str, qubits: &[usize], coefficient: f64) -> Result<Self> {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() != qubits.len() {
            return Err(Error::InvalidArgument(format!(
                "Pauli word {word:?} does not match {} qubit indices",
                qubits.len()
            )));
        }
        let mut letters = Vec::with_capacity(chars.len());
        for (&c, &q) in chars.iter().zip(qubits) {
            let p = Pauli::from_char(c)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown Pauli letter {c:?}")))?;
            letters.push((q, p));
        }
        Self::new(n, &letters, coefficient)
    }

    pub fn single(n: usize, q: usize, p: Pauli) -> Result<Self> {
        Self::new(n, &[(q, p)], 1.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> &[(usize, Pauli)] {
        &self.letters
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn with_coefficient(&self, c: f64) -> Self {
        Self { coefficient: c, ..self.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Basis bits flipped by X and Y letters.
    pub fn flip_mask(&self) -> usize {
        self.flip_mask
    }

    /// Basis bits picking up a sign from Z and Y letters.
    pub fn phase_mask(&self) -> usize {
        self.phase_mask
    }

    /// Phase of the unit-coefficient string on basis state `x`:
    /// `P|x⟩ = phase(x)·|x ⊕ flip⟩`.
    #[inline]
    pub fn phase(&self, x: usize) -> C64 {
        let sign = if (x & self.phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        match self.ny % 4 {
            0 => C64::new(sign, 0.0),
            1 => C64::new(0.0, sign),
            2 => C64::new(-sign, 0.0),
            _ => C64::new(0.0, -sign),
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = (self.flip_mask & other.phase_mask) ^ (self.phase_mask & other.flip_mask);
        anti.count_ones() % 2 == 0
    }

    /// `out += coefficient · P·v`.
    pub fn apply_add(&self, v: &[C64], out: &mut [C64]) {
        for (x, &a) in v.iter().enumerate() {
            if a != ZERO {
                out[x ^ self.flip_mask] += self.phase(x) * a * self.coefficient;
            }
        }
    }

    /// The letters without qubit indices, e.g. `"ZZ"`.
    pub fn word(&self) -> String {
        self.letters.iter().map(|&(_, p)| p.as_char()).collect()
    }

    pub fn qubits(&self) -> Vec<usize> {
        self.letters.iter().map(|&(q, _)| q).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coefficient)?;
        for &(q, p) in &self.letters {
            write!(f, " {}{}", p.as_char(), q)?;
        }
        Ok(())
    }
}

/// Dense matrix of `p`, coefficient included.
pub fn pauli_matrix(p: &PauliString) -> DenseMatrix {
    let d = 1usize << p.n;
    let mut m = DenseMatrix::zeros(d);
    for x in 0..d {
        m[(x ^ p.flip_mask, x)] = p.phase(x) * p.coefficient;
    }
    m
}

/// A real-weighted sum of Pauli strings plus an identity offset.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    pub n: usize,
    pub terms: Vec<PauliString>,
    pub constant: f64,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        Self { n, terms: Vec::new(), constant: 0.0 }
    }

    pub fn push(&mut self, p: PauliString) {
        debug_assert_eq!(p.n, self.n);
        if p.coefficient == 0.0 {
            return;
        }
        if p.is_identity() {
            self.constant += p.coefficient;
        } else {
            self.terms.push(p);
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        let d = 1usize << self.n;
        let mut m = DenseMatrix::identity(d).scale_real(self.constant);
        for p in &self.terms {
            for x in 0..d {
                m[(x ^ p.flip_mask, x)] += p.phase(x) * p.coefficient;
            }
        }
        m
    }

    pub fn all_commute(&self) -> bool {
        self.terms
            .iter()
            .enumerate()
            .all(|(i, a)| self.terms[i + 1..].iter().all(|b| a.commutes_with(b)))
    }
}

fn check_qubits(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("need at least {min} qubits, got {n}")));
    }
    if n > 12 {
        return Err(Error::InvalidArgument(format!("{n} qubits exceeds the dense limit of 12")));
    }
    Ok(())
}

/// Transverse-field Ising ring `Σ ZᵢZᵢ₊₁ + h Σ Xᵢ` (periodic).
pub fn ising_terms(n: usize, h: f64) -> Result<PauliSum> {
    check_qubits(n, 2)?;
    let mut s = PauliSum::new(n);
    for i in 0..n {
        s.push(PauliString::from_letters(n, "ZZ", &[i, (i + 1) % n], 1.0)?);
    }
    if h != 0.0 {
        for i in 0..n {
            s.push(PauliString::new(n, &[(i, Pauli::X)], h)?);
        }
    }
    Ok(s)
}

pub fn ising(n: usize, h: f64) -> Result<DenseMatrix> {
    Ok(ising_terms(n, h)?.to_matrix())
}

/// Form of the electric-field energy in the lattice Schwinger model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldTerm {
    /// `g Σ_{j=1}^{n} (ε₀ − ½ Σ_{l≤j} (Z_l + (−1)^j))`, linear in the fields.
    Literal,
    /// `g Σ_{j=1}^{n−1} (ε₀ − ½ Σ_{l≤j} (Z_l + (−1)^l))²`, the squared
    /// Gauss-law field energy. The `j = n` term is omitted since it measures
    /// total charge, which the hopping term conserves.
    #[default]
    Squared,
}

impl FieldTerm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(FieldTerm::Literal),
            "squared" => Ok(FieldTerm::Squared),
            _ => Err(Error::Config(format!("unknown field term {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FieldTerm::Literal => "literal",
            FieldTerm::Squared => "squared",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchwingerParams {
    pub w: f64,
    pub g: f64,
    pub eps0: f64,
    pub field: FieldTerm,
}

impl Default for SchwingerParams {
    fn default() -> Self {
        Self { w: 1.0, g: 1.0, eps0: 0.0, field: FieldTerm::Squared }
    }
}

/// `(−1)^j` for the 1-based site number of 0-based qubit `q`.
fn stagger(q: usize) -> f64 {
    if (q + 1) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Lattice Schwinger model on `n` (even) staggered sites, open boundary.
pub fn schwinger_terms(n: usize, mu: f64, p: SchwingerParams) -> Result<PauliSum> {
    check_qubits(n, 2)?;
    if n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "staggered fermions need an even number of sites, got {n}"
        )));
    }
    let mut s = PauliSum::new(n);
    if p.w != 0.0 {
        for j in 0..n - 1 {
            s.push(PauliString::from_letters(n, "XX", &[j, j + 1], p.w)?);
            s.push(PauliString::from_letters(n, "YY", &[j, j + 1], p.w)?);
        }
    }
    if mu != 0.0 {
        for j in 0..n {
            s.push(PauliString::new(n, &[(j, Pauli::Z)], 0.5 * mu * stagger(j))?);
        }
    }
    if p.g != 0.0 {
        match p.field {
            FieldTerm::Literal => {
                // Σ_j [ε₀ − ½ Σ_{l≤j} Z_l − ½ j (−1)^j]; Z_l appears in every j ≥ l.
                for j in 0..n {
                    let sites = (j + 1) as f64;
                    s.add_constant(p.g * (p.eps0 - 0.5 * sites * stagger(j)));
                }
                for l in 0..n {
                    let count = (n - l) as f64;
                    s.push(PauliString::new(n, &[(l, Pauli::Z)], -0.5 * p.g * count)?);
                }
            }
            FieldTerm::Squared => {
                // L_j = c_j − ½ Σ_{l≤j} Z_l with c_j = ε₀ − ½ Σ_{l≤j} (−1)^l.
                // L_j² = c_j² + ¼ (j+1) − c_j Σ Z_l + ½ Σ_{l<k≤j} Z_l Z_k.
                let mut c = p.eps0;
                for j in 0..n - 1 {
                    c -= 0.5 * stagger(j);
                    s.add_constant(p.g * (c * c + 0.25 * (j + 1) as f64));
                    for l in 0..=j {
                        if c != 0.0 {
                            s.push(PauliString::new(n, &[(l, Pauli::Z)], -p.g * c)?);
                        }
                        for k in l + 1..=j {
                            s.push(PauliString::from_letters(n, "ZZ", &[l, k], 0.5 * p.g)?);
                        }
                    }
                }
            }
        }
    }
    Ok(s)
}

pub fn schwinger(n: usize, mu: f64, p: SchwingerParams) -> Result<DenseMatrix> {
    Ok(schwinger_terms(n, mu, p)?.to_matrix())
}

/// `−cos(πx/2) Σ ZᵢXᵢ₊₁Zᵢ₊₂ − sin(πx/2) Σ Xᵢ − ε Σ Zᵢ` (periodic).
pub fn cluster_terms(n: usize, x: f64, eps: f64) -> Result<PauliSum> {
    check_qubits(n, 3)?;
    let (sn, cs) = (PI * x / 2.0).sin_cos();
    let mut s = PauliSum::new(n);
    for i in 0..n {
        s.push(PauliString::from_letters(n, "ZXZ", &[i, (i + 1) % n, (i + 2) % n], -cs)?);
    }
    for i in 0..n {
        s.push(PauliString::new(n, &[(i, Pauli::X)], -sn)?);
    }
    if eps != 0.0 {
        for i in 0..n {
            s.push(PauliString::new(n, &[(i, Pauli::Z)], -eps)?);
        }
    }
    Ok(s)
}

pub fn cluster(n: usize, x: f64, eps: f64) -> Result<DenseMatrix> {
    Ok(cluster_terms(n, x, eps)?.to_matrix())
}

pub const CLUSTER_DEFAULT_EPS: f64 = 1e-2;
