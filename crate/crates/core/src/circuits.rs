//! Parametrized circuits, the HEA / QCNN / HVA builders and a statevector
//! simulator.
//!
//! Rotations follow `R_σ(θ) = e^{−iθσ}`. `U3(θ, φ, λ) = R_Z(φ)·R_Y(θ)·R_Z(λ)`
//! under the same convention, so `U3(0, 0, 0) = 𝟙`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonians::{Pauli, PauliString};
use crate::linalg::{basis_vector, DenseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    /// `e^{−iθ·P}`; the string's coefficient scales the angle.
    PauliRotation { pauli: PauliString, slot: usize },
    /// Single-qubit `U3(θ, φ, λ)` reading slots `[θ, φ, λ]`.
    U3 { qubit: usize, slots: [usize; 3] },
    /// `U3` on `target` applied when `control` is `|1⟩`.
    ControlledU3 { control: usize, target: usize, slots: [usize; 3] },
    /// `e^{−iθ·Σ_k c_k P_k}` for mutually commuting strings.
    Evolution { terms: Vec<PauliString>, slot: usize },
}

impl Gate {
    fn slots(&self) -> Vec<usize> {
        match self {
            Gate::PauliRotation { slot, .. } | Gate::Evolution { slot, .. } => vec![*slot],
            Gate::U3 { slots, .. } | Gate::ControlledU3 { slots, .. } => slots.to_vec(),
        }
    }

    fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::PauliRotation { pauli, .. } => pauli.qubits(),
            Gate::U3 { qubit, .. } => vec![*qubit],
            Gate::ControlledU3 { control, target, .. } => vec![*control, *target],
            Gate::Evolution { terms, .. } => terms.iter().flat_map(|t| t.qubits()).collect(),
        }
    }
}

/// Ordered gate list; the first gate acts first.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n: usize,
    param_count: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n: usize, param_count: usize) -> Self {
        Self { n, param_count, gates: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        for s in gate.slots() {
            if s >= self.param_count {
                return Err(Error::InvalidArgument(format!(
                    "slot {s} exceeds parameter count {}",
                    self.param_count
                )));
            }
        }
        for q in gate.qubits() {
            if q >= self.n {
                return Err(Error::QubitOutOfRange { index: q, n: self.n });
            }
        }
        match &gate {
            Gate::ControlledU3 { control, target, .. } if control == target => {
                return Err(Error::InvalidArgument("control equals target".into()));
            }
            Gate::Evolution { terms, .. } => {
                for (i, a) in terms.iter().enumerate() {
                    if a.n() != self.n {
                        return Err(Error::DimensionMismatch { expected: self.n, found: a.n() });
                    }
                    if terms[i + 1..].iter().any(|b| !a.commutes_with(b)) {
                        return Err(Error::InvalidArgument(
                            "evolution gate terms must commute".into(),
                        ));
                    }
                }
            }
            Gate::PauliRotation { pauli, .. } if pauli.n() != self.n => {
                return Err(Error::DimensionMismatch { expected: self.n, found: pauli.n() });
            }
            _ => {}
        }
        self.gates.push(gate);
        Ok(())
    }

    fn rotation(&mut self, word: &str, qubits: &[usize], slot: usize) -> Result<()> {
        let pauli = PauliString::from_letters(self.n, word, qubits, 1.0)?;
        self.push(Gate::PauliRotation { pauli, slot })
    }

    /// Binds the parameters; the result applies the circuit to vectors.
    pub fn compile(&self, theta: &[f64]) -> Result<CompiledCircuit> {
        if theta.len() != self.param_count {
            return Err(Error::ParamLength { expected: self.param_count, found: theta.len() });
        }
        let mut ops = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            match g {
                Gate::PauliRotation { pauli, slot } => {
                    ops.push(Op::rotation(pauli, theta[*slot] * pauli.coefficient(), self.n));
                }
                Gate::Evolution { terms, slot } => {
                    for t in terms {
                        ops.push(Op::rotation(t, theta[*slot] * t.coefficient(), self.n));
                    }
                }
                Gate::U3 { qubit, slots } => ops.push(Op::Single {
                    bit: self.bit(*qubit),
                    control: 0,
                    m: u3_matrix(theta[slots[0]], theta[slots[1]], theta[slots[2]]),
                }),
                Gate::ControlledU3 { control, target, slots } => ops.push(Op::Single {
                    bit: self.bit(*target),
                    control: self.bit(*control),
                    m: u3_matrix(theta[slots[0]], theta[slots[1]], theta[slots[2]]),
                }),
            }
        }
        Ok(CompiledCircuit { dim: self.dim(), ops })
    }

    pub fn apply(&self, theta: &[f64], psi: &mut [C64]) -> Result<()> {
        self.compile(theta)?.apply(psi)
    }

    /// Dense `U_θ`.
    pub fn unitary(&self, theta: &[f64]) -> Result<DenseMatrix> {
        let c = self.compile(theta)?;
        let d = self.dim();
        let mut u = DenseMatrix::zeros(d);
        for j in 0..d {
            let mut col = basis_vector(d, j);
            c.apply(&mut col)?;
            u.set_column(j, &col);
        }
        Ok(u)
    }

    fn bit(&self, q: usize) -> usize {
        1 << (self.n - 1 - q)
    }

    /// Circuit with a subrange of the gates; parameter slots are unchanged.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Circuit {
        Circuit { n: self.n, param_count: self.param_count, gates: self.gates[range].to_vec() }
    }

    /// Same gates acting on the first `n` qubits of a wider register.
    pub fn widened(&self, n: usize) -> Result<Circuit> {
        if n < self.n {
            return Err(Error::InvalidArgument(format!("cannot narrow {} qubits to {n}", self.n)));
        }
        let mut out = Circuit::new(n, self.param_count);
        let lift = |p: &PauliString| PauliString::new(n, p.letters(), p.coefficient());
        for g in &self.gates {
            let g = match g {
                Gate::PauliRotation { pauli, slot } => Gate::PauliRotation { pauli: lift(pauli)?, slot: *slot },
                Gate::Evolution { terms, slot } => Gate::Evolution {
                    terms: terms.iter().map(lift).collect::<Result<_>>()?,
                    slot: *slot,
                },
                other => other.clone(),
            };
            out.push(g)?;
        }
        Ok(out)
    }
}

/// A circuit with parameters bound, ready to act on statevectors.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    dim: usize,
    ops: Vec<Op>,
}

#[derive(Debug, Clone)]
enum Op {
    /// `cos φ − i sin φ · P` with `P|x⟩ = phase(x)|x ⊕ flip⟩`.
    Rotation { pauli: PauliString, cos: f64, sin: f64, pivot: usize },
    /// 2×2 block on `bit`, active where all `control` bits are set.
    Single { bit: usize, control: usize, m: [C64; 4] },
}

impl Op {
    fn rotation(p: &PauliString, phi: f64, _n: usize) -> Op {
        let flip = p.flip_mask();
        let pivot = if flip == 0 { 0 } else { 1 << (usize::BITS - 1 - flip.leading_zeros()) };
        let (s, c) = phi.sin_cos();
        Op::Rotation { pauli: p.with_coefficient(1.0), cos: c, sin: s, pivot }
    }
}

impl CompiledCircuit {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, psi: &mut [C64]) -> Result<()> {
        if psi.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: psi.len() });
        }
        for op in &self.ops {
            match op {
                Op::Rotation { pauli, cos, sin, pivot } => {
                    let mis = C64::new(0.0, -sin);
                    if *pivot == 0 {
                        for (x, a) in psi.iter_mut().enumerate() {
                            *a *= *cos + mis * pauli.phase(x);
                        }
                    } else {
                        let flip = pauli.flip_mask();
                        for x in 0..self.dim {
                            if x & pivot != 0 {
                                continue;
                            }
                            let y = x ^ flip;
                            let (a, b) = (psi[x], psi[y]);
                            psi[x] = a * cos + mis * pauli.phase(y) * b;
                            psi[y] = b * cos + mis * pauli.phase(x) * a;
                        }
                    }
                }
                Op::Single { bit, control, m } => {
                    for x in 0..self.dim {
                        if x & bit != 0 || x & control != *control {
                            continue;
                        }
                        let y = x | bit;
                        let (a, b) = (psi[x], psi[y]);
                        psi[x] = m[0] * a + m[1] * b;
                        psi[y] = m[2] * a + m[3] * b;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Row-major `R_Z(φ)·R_Y(θ)·R_Z(λ)` with `R_σ(t) = e^{−itσ}`.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> [C64; 4] {
    let (s, c) = theta.sin_cos();
    let e = |t: f64| C64::from_polar(1.0, t);
    [
        e(-phi - lambda) * c,
        -e(-phi + lambda) * s,
        e(phi - lambda) * s,
        e(phi + lambda) * c,
    ]
}

/// Hardware-efficient ansatz: per layer `R_X` and `R_Z` on every qubit, then
/// `R_ZZ` on the open ladder `(i, i+1)`.
pub fn hea(n: usize, layers: usize) -> Result<Circuit> {
    if n < 2 || layers < 1 {
        return Err(Error::InvalidArgument(format!("hea needs n ≥ 2 and layers ≥ 1 (got {n}, {layers})")));
    }
    let per_layer = 3 * n - 1;
    let mut c = Circuit::new(n, layers * per_layer);
    let mut slot = 0;
    for _ in 0..layers {
        for word in ["X", "Z"] {
            for q in 0..n {
                c.rotation(word, &[q], slot)?;
                slot += 1;
            }
        }
        for q in 0..n - 1 {
            c.rotation("ZZ", &[q, q + 1], slot)?;
            slot += 1;
        }
    }
    Ok(c)
}

pub const QCNN_SLOTS_PER_LEVEL: usize = 18;

/// Number of convolution/pooling levels for `n` qubits (halving to one).
pub fn qcnn_levels(n: usize) -> usize {
    let mut k = n;
    let mut levels = 0;
    while k > 1 {
        k -= k / 2;
        levels += 1;
    }
    levels
}

fn conv_block(c: &mut Circuit, a: usize, b: usize, base: usize) -> Result<()> {
    c.push(Gate::U3 { qubit: a, slots: [base, base + 1, base + 2] })?;
    c.push(Gate::U3 { qubit: b, slots: [base + 3, base + 4, base + 5] })?;
    c.rotation("XX", &[a, b], base + 6)?;
    c.rotation("YY", &[a, b], base + 7)?;
    c.rotation("ZZ", &[a, b], base + 8)?;
    c.push(Gate::U3 { qubit: a, slots: [base + 9, base + 10, base + 11] })?;
    c.push(Gate::U3 { qubit: b, slots: [base + 12, base + 13, base + 14] })
}

/// Quantum convolutional network. Each level runs convolution blocks on
/// neighbouring active qubits (with a wrap-around block when `ring` is set and
/// more than two qubits are active), then pools: the lower half of the active
/// qubits become controls of a controlled-`U3` on the upper half and drop out.
/// The survivors are always the highest-index qubits, so the final active
/// qubit is `n − 1`. All blocks in a level share 18 slots (15 for C, 3 for P).
pub fn qcnn(n: usize, ring: bool) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("qcnn needs at least 2 qubits, got {n}")));
    }
    let levels = qcnn_levels(n);
    let mut c = Circuit::new(n, levels * QCNN_SLOTS_PER_LEVEL);
    let mut active: Vec<usize> = (0..n).collect();
    for level in 0..levels {
        let base = level * QCNN_SLOTS_PER_LEVEL;
        let k = active.len();
        for i in 0..k - 1 {
            conv_block(&mut c, active[i], active[i + 1], base)?;
        }
        if ring && k > 2 {
            conv_block(&mut c, active[k - 1], active[0], base)?;
        }
        let controls = k / 2;
        let offset = k - controls;
        let pool = [base + 15, base + 16, base + 17];
        for j in 0..controls {
            c.push(Gate::ControlledU3 { control: active[j], target: active[j + offset], slots: pool })?;
        }
        active.drain(..controls);
    }
    Ok(c)
}

/// Hamiltonian-variational ansatz for the cluster model. Layer `k` applies
/// `e^{−iθ_{k,1} Σ X}`, then `e^{−iθ_{k,2} Σ Z}`, then `e^{−iθ_{k,3} Σ ZXZ}`.
pub fn hva_cluster(n: usize, layers: usize) -> Result<Circuit> {
    if n < 3 || layers < 1 {
        return Err(Error::InvalidArgument(format!("hva needs n ≥ 3 and layers ≥ 1 (got {n}, {layers})")));
    }
    let mut c = Circuit::new(n, 3 * layers);
    let singles = |p: Pauli| -> Result<Vec<PauliString>> {
        (0..n).map(|q| PauliString::single(n, q, p)).collect()
    };
    let xs = singles(Pauli::X)?;
    let zs = singles(Pauli::Z)?;
    let zxz: Vec<PauliString> = (0..n)
        .map(|i| PauliString::from_letters(n, "ZXZ", &[i, (i + 1) % n, (i + 2) % n], 1.0))
        .collect::<Result<_>>()?;
    for k in 0..layers {
        c.push(Gate::Evolution { terms: xs.clone(), slot: 3 * k })?;
        c.push(Gate::Evolution { terms: zs.clone(), slot: 3 * k + 1 })?;
        c.push(Gate::Evolution { terms: zxz.clone(), slot: 3 * k + 2 })?;
    }
    Ok(c)
}

/// A circuit with no gates and no parameters.
pub fn identity_circuit(n: usize) -> Circuit {
    Circuit::new(n, 0)
}

// Text format, one item per line:
//
//   circuit <n> <param_count>
//   rot <WORD> <qubits…> : <slot>
//   u3 <qubit> : <θ slot> <φ slot> <λ slot>
//   cu3 <control> <target> : <θ slot> <φ slot> <λ slot>
//   evo [<coef>*]<WORD> <qubits…> , … : <slot>
//
// Blank lines and text after `#` are ignored.

fn write_term(f: &mut fmt::Formatter<'_>, p: &PauliString, with_coef: bool) -> fmt::Result {
    if with_coef && p.coefficient() != 1.0 {
        write!(f, "{}*", p.coefficient())?;
    }
    write!(f, "{}", p.word())?;
    for q in p.qubits() {
        write!(f, " {q}")?;
    }
    Ok(())
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "circuit {} {}", self.n, self.param_count)?;
        for g in &self.gates {
            match g {
                Gate::PauliRotation { pauli, slot } => {
                    write!(f, "rot ")?;
                    write_term(f, pauli, true)?;
                    writeln!(f, " : {slot}")?;
                }
                Gate::U3 { qubit, slots } => {
                    writeln!(f, "u3 {qubit} : {} {} {}", slots[0], slots[1], slots[2])?
                }
                Gate::ControlledU3 { control, target, slots } => writeln!(
                    f,
                    "cu3 {control} {target} : {} {} {}",
                    slots[0], slots[1], slots[2]
                )?,
                Gate::Evolution { terms, slot } => {
                    write!(f, "evo ")?;
                    for (i, t) in terms.iter().enumerate() {
                        if i > 0 {
                            write!(f, " , ")?;
                        }
                        write_term(f, t, true)?;
                    }
                    writeln!(f, " : {slot}")?;
                }
            }
        }
        Ok(())
    }
}

fn parse_num<T: FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("bad {what} {s:?}") })
}

fn parse_term(n: usize, text: &str, line: usize) -> Result<PauliString> {
    let mut parts = text.split_whitespace();
    let head = parts.next().ok_or(Error::Parse { line, msg: "empty Pauli term".into() })?;
    let (coef, word) = match head.split_once('*') {
        Some((c, w)) => (parse_num::<f64>(c, line, "coefficient")?, w),
        None => (1.0, head),
    };
    let qubits: Vec<usize> = parts.map(|q| parse_num(q, line, "qubit")).collect::<Result<_>>()?;
    PauliString::from_letters(n, word, &qubits, coef).map_err(|e| Error::Parse { line, msg: e.to_string() })
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Circuit> {
        let mut circuit: Option<Circuit> = None;
        for (idx, raw) in s.lines().enumerate() {
            let line = idx + 1;
            let text = raw.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let (kind, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
            let Some(c) = circuit.as_mut() else {
                if kind != "circuit" {
                    return Err(Error::Parse { line, msg: "expected `circuit <n> <params>` header".into() });
                }
                let nums: Vec<usize> =
                    rest.split_whitespace().map(|t| parse_num(t, line, "integer")).collect::<Result<_>>()?;
                if nums.len() != 2 || nums[0] == 0 {
                    return Err(Error::Parse { line, msg: "header needs qubit and parameter counts".into() });
                }
                circuit = Some(Circuit::new(nums[0], nums[1]));
                continue;
            };
            let (lhs, rhs) = rest
                .split_once(':')
                .ok_or(Error::Parse { line, msg: "missing `:` before slot list".into() })?;
            let slots: Vec<usize> =
                rhs.split_whitespace().map(|t| parse_num(t, line, "slot")).collect::<Result<_>>()?;
            let targets = || -> Result<Vec<usize>> {
                lhs.split_whitespace().map(|t| parse_num(t, line, "qubit")).collect()
            };
            let want = |k: usize| -> Result<()> {
                if slots.len() == k {
                    Ok(())
                } else {
                    Err(Error::Parse { line, msg: format!("`{kind}` takes {k} slot(s), got {}", slots.len()) })
                }
            };
            let gate = match kind {
                "rot" => {
                    want(1)?;
                    Gate::PauliRotation { pauli: parse_term(c.n, lhs, line)?, slot: slots[0] }
                }
                "u3" => {
                    want(3)?;
                    let t = targets()?;
                    if t.len() != 1 {
                        return Err(Error::Parse { line, msg: "`u3` takes one qubit".into() });
                    }
                    Gate::U3 { qubit: t[0], slots: [slots[0], slots[1], slots[2]] }
                }
                "cu3" => {
                    want(3)?;
                    let t = targets()?;
                    if t.len() != 2 {
                        return Err(Error::Parse { line, msg: "`cu3` takes control and target".into() });
                    }
                    Gate::ControlledU3 { control: t[0], target: t[1], slots: [slots[0], slots[1], slots[2]] }
                }
                "evo" => {
                    want(1)?;
                    let terms = lhs.split(',').map(|t| parse_term(c.n, t, line)).collect::<Result<_>>()?;
                    Gate::Evolution { terms, slot: slots[0] }
                }
                other => return Err(Error::Parse { line, msg: format!("unknown gate {other:?}") }),
            };
            c.push(gate).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        }
        circuit.ok_or(Error::Parse { line: 0, msg: "empty circuit description".into() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{pauli_matrix, PauliSum};
    use crate::linalg::{herm_exp_i, kron, pauli, ZERO};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_theta(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
        (0..k).map(|_| rng.random_range(0.0..2.0 * PI)).collect()
    }

    /// Reference: multiply dense gate matrices.
    fn dense_unitary(c: &Circuit, theta: &[f64]) -> DenseMatrix {
        let n = c.n();
        let d = c.dim();
        let embed1 = |q: usize, m: &DenseMatrix| {
            let id2 = DenseMatrix::identity(2);
            let mut out = DenseMatrix::identity(1);
            for k in 0..n {
                out = kron(&out, if k == q { m } else { &id2 });
            }
            out
        };
        let mut u = DenseMatrix::identity(d);
        for g in c.gates() {
            let gm = match g {
                Gate::PauliRotation { pauli, slot } => {
                    herm_exp_i(&pauli_matrix(pauli), theta[*slot]).unwrap()
                }
                Gate::Evolution { terms, slot } => {
                    let mut s = PauliSum::new(n);
                    terms.iter().for_each(|t| s.push(t.clone()));
                    herm_exp_i(&s.to_matrix(), theta[*slot]).unwrap()
                }
                Gate::U3 { qubit, slots } => {
                    let m = u3_dense(theta[slots[0]], theta[slots[1]], theta[slots[2]]);
                    embed1(*qubit, &m)
                }
                Gate::ControlledU3 { control, target, slots } => {
                    let m = u3_dense(theta[slots[0]], theta[slots[1]], theta[slots[2]]);
                    let p0 = DenseMatrix::diag_real(&[1.0, 0.0]);
                    let p1 = DenseMatrix::diag_real(&[0.0, 1.0]);
                    let off = embed1(*control, &p0);
                    let on = embed1(*control, &p1).matmul(&embed1(*target, &m));
                    &off + &on
                }
            };
            u = gm.matmul(&u);
        }
        u
    }

    fn u3_dense(t: f64, p: f64, l: f64) -> DenseMatrix {
        let rz = |a: f64| herm_exp_i(&pauli::z(), a).unwrap();
        let ry = herm_exp_i(&pauli::y(), t).unwrap();
        rz(p).matmul(&ry).matmul(&rz(l))
    }

    #[test]
    fn empty_circuit_is_identity() {
        let u = identity_circuit(3).unitary(&[]).unwrap();
        assert!(u.max_diff(&DenseMatrix::identity(8)) < 1e-15);
    }

    #[test]
    fn rx_quarter_turn() {
        let mut c = Circuit::new(1, 1);
        c.rotation("X", &[0], 0).unwrap();
        let mut psi = basis_vector(2, 0);
        c.apply(&[PI / 4.0], &mut psi).unwrap();
        let s = 1.0 / 2f64.sqrt();
        assert!((psi[0] - C64::new(s, 0.0)).norm() < 1e-15);
        assert!((psi[1] - C64::new(0.0, -s)).norm() < 1e-15);
        let mut psi = basis_vector(2, 0);
        c.apply(&[PI / 2.0], &mut psi).unwrap();
        assert!((psi[1] - C64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn u3_matches_product_of_rotations() {
        let m = u3_matrix(0.3, -1.1, 2.0);
        let d = u3_dense(0.3, -1.1, 2.0);
        for (a, b) in m.iter().zip(d.as_slice()) {
            assert!((a - b).norm() < 1e-14);
        }
        let id = u3_matrix(0.0, 0.0, 0.0);
        assert_eq!(id, [C64::new(1.0, 0.0), ZERO, ZERO, C64::new(1.0, 0.0)]);
    }

    #[test]
    fn simulator_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for c in [hea(3, 2).unwrap(), qcnn(4, true).unwrap(), qcnn(3, false).unwrap(), hva_cluster(4, 2).unwrap()] {
            let theta = random_theta(&mut rng, c.param_count());
            let fast = c.unitary(&theta).unwrap();
            let slow = dense_unitary(&c, &theta);
            assert!(fast.max_diff(&slow) < 1e-12, "{}", fast.max_diff(&slow));
        }
    }

    #[test]
    fn y_rotation_pairs() {
        let mut c = Circuit::new(3, 1);
        c.rotation("YXY", &[0, 1, 2], 0).unwrap();
        let theta = [0.7];
        let fast = c.unitary(&theta).unwrap();
        assert!(fast.max_diff(&dense_unitary(&c, &theta)) < 1e-14);
    }

    #[test]
    fn hea_unitarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let c = hea(4, 2).unwrap();
        for _ in 0..50 {
            let theta = random_theta(&mut rng, c.param_count());
            let u = c.unitary(&theta).unwrap();
            assert!(u.adjoint().matmul(&u).max_diff(&DenseMatrix::identity(16)) < 1e-10);
        }
    }

    #[test]
    fn hea_structure() {
        assert_eq!(hea(5, 5).unwrap().param_count(), 70);
        assert_eq!(hea(3, 2).unwrap().param_count(), 16);
        let c = hea(2, 1).unwrap();
        assert_eq!(c.param_count(), 5);
        let words: Vec<(String, Vec<usize>, usize)> = c
            .gates()
            .iter()
            .map(|g| match g {
                Gate::PauliRotation { pauli, slot } => (pauli.word(), pauli.qubits(), *slot),
                _ => panic!("unexpected gate"),
            })
            .collect();
        let expected = vec![
            ("X".to_string(), vec![0], 0),
            ("X".to_string(), vec![1], 1),
            ("Z".to_string(), vec![0], 2),
            ("Z".to_string(), vec![1], 3),
            ("ZZ".to_string(), vec![0, 1], 4),
        ];
        assert_eq!(words, expected);
    }

    #[test]
    fn qcnn_structure() {
        assert_eq!(qcnn_levels(8), 3);
        let c = qcnn(8, true).unwrap();
        assert_eq!(c.param_count(), 54);
        let pools: Vec<(usize, usize)> = c
            .gates()
            .iter()
            .filter_map(|g| match g {
                Gate::ControlledU3 { control, target, .. } => Some((*control, *target)),
                _ => None,
            })
            .collect();
        assert_eq!(pools, vec![(0, 4), (1, 5), (2, 6), (3, 7), (4, 6), (5, 7), (6, 7)]);

        let c = qcnn(2, true).unwrap();
        let kinds: Vec<&str> = c
            .gates()
            .iter()
            .map(|g| match g {
                Gate::U3 { .. } => "u3",
                Gate::PauliRotation { .. } => "rot",
                Gate::ControlledU3 { .. } => "cu3",
                Gate::Evolution { .. } => "evo",
            })
            .collect();
        assert_eq!(kinds, vec!["u3", "u3", "rot", "rot", "rot", "u3", "u3", "cu3"]);
        assert!(qcnn(1, true).is_err());
        let open = qcnn(8, false).unwrap();
        assert!(open.gates().len() < qcnn(8, true).unwrap().gates().len());
    }

    #[test]
    fn qcnn_conv_blocks_share_slots() {
        // First ring level at n = 4 has blocks (0,1), (1,2), (2,3), (3,0). Shifting
        // every qubit by one maps each block onto the next, so S·L·S† equals the
        // layer with its blocks cyclically reordered only because they share slots.
        let c = qcnn(4, true).unwrap();
        let blocks: Vec<&[Gate]> = c.gates()[..4 * 7].chunks(7).collect();
        let layer = |order: &[usize]| {
            let mut l = Circuit::new(4, c.param_count());
            for &b in order {
                blocks[b].iter().for_each(|g| l.push(g.clone()).unwrap());
            }
            l
        };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let theta = random_theta(&mut rng, c.param_count());
        let l = layer(&[0, 1, 2, 3]).unitary(&theta).unwrap();
        let shifted = layer(&[1, 2, 3, 0]).unitary(&theta).unwrap();
        let shift = DenseMatrix::from_fn(16, |y, x| {
            // Qubit q of x moves to qubit (q + 1) mod 4 of y.
            let mut z = 0;
            for q in 0..4 {
                if x >> (3 - q) & 1 == 1 {
                    z |= 1 << (3 - (q + 1) % 4);
                }
            }
            if y == z { C64::new(1.0, 0.0) } else { ZERO }
        });
        let conj = shift.matmul(&l).matmul(&shift.adjoint());
        assert!(conj.max_diff(&shifted) < 1e-12);
        assert!(l.max_diff(&shifted) > 1e-3);
    }

    #[test]
    fn hva_structure_and_identity() {
        let c = hva_cluster(8, 10).unwrap();
        assert_eq!(c.param_count(), 30);
        let c = hva_cluster(4, 2).unwrap();
        let u = c.unitary(&[0.0; 6]).unwrap();
        assert!(u.max_diff(&DenseMatrix::identity(16)) < 1e-15);
        match &c.gates()[0] {
            Gate::Evolution { terms, slot } => {
                assert_eq!(*slot, 0);
                assert!(terms.iter().all(|t| t.word() == "X"));
            }
            _ => panic!(),
        }
        match &c.gates()[2] {
            Gate::Evolution { terms, .. } => {
                assert_eq!(terms.len(), 4);
                for (i, t) in terms.iter().enumerate() {
                    let x: Vec<usize> = t.letters().iter().filter(|l| l.1 == Pauli::X).map(|l| l.0).collect();
                    assert_eq!(x, vec![(i + 1) % 4]);
                    assert_eq!(t.letters().len(), 3);
                }
            }
            _ => panic!(),
        }
    }

    #[test]
    fn zero_angles_give_identity() {
        for c in [hea(3, 2).unwrap(), qcnn(4, true).unwrap(), hva_cluster(3, 1).unwrap()] {
            let u = c.unitary(&vec![0.0; c.param_count()]).unwrap();
            assert!(u.max_diff(&DenseMatrix::identity(c.dim())) < 1e-15);
        }
    }

    #[test]
    fn derivative_matches_generator_insertion() {
        let c = hea(3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let theta = random_theta(&mut rng, c.param_count());
        let h = 1e-5;
        for (j, g) in c.gates().iter().enumerate() {
            let Gate::PauliRotation { pauli, slot } = g else { unreachable!() };
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[*slot] += h;
            tm[*slot] -= h;
            let fd = (&c.unitary(&tp).unwrap() - &c.unitary(&tm).unwrap()).scale_real(0.5 / h);
            let before = c.slice(0..j + 1).unitary(&theta).unwrap();
            let after = c.slice(j + 1..c.gates().len()).unitary(&theta).unwrap();
            let gen = pauli_matrix(pauli).scale(C64::new(0.0, -1.0));
            let exact = after.matmul(&gen).matmul(&before);
            assert!(fd.max_diff(&exact) < 1e-6);
        }
    }

    #[test]
    fn param_length_checked() {
        let c = hea(2, 1).unwrap();
        assert!(matches!(c.unitary(&[0.0; 4]), Err(Error::ParamLength { expected: 5, found: 4 })));
    }

    #[test]
    fn push_validation() {
        let mut c = Circuit::new(2, 1);
        assert!(c.push(Gate::U3 { qubit: 2, slots: [0, 0, 0] }).is_err());
        assert!(c.push(Gate::U3 { qubit: 0, slots: [0, 1, 0] }).is_err());
        let x = PauliString::single(2, 0, Pauli::X).unwrap();
        let z = PauliString::single(2, 0, Pauli::Z).unwrap();
        assert!(c.push(Gate::Evolution { terms: vec![x, z], slot: 0 }).is_err());
    }

    #[test]
    fn text_round_trip() {
        for c in [hea(3, 2).unwrap(), qcnn(8, false).unwrap(), hva_cluster(4, 2).unwrap()] {
            let text = c.to_string();
            let back: Circuit = text.parse().unwrap();
            assert_eq!(back, c);
        }
        let mut c = Circuit::new(2, 1);
        c.push(Gate::PauliRotation {
            pauli: PauliString::from_letters(2, "XY", &[0, 1], 0.25).unwrap(),
            slot: 0,
        })
        .unwrap();
        assert_eq!(c.to_string().parse::<Circuit>().unwrap(), c);
    }

    #[test]
    fn text_parse_errors() {
        assert!(matches!("rot X 0 : 0".parse::<Circuit>(), Err(Error::Parse { line: 1, .. })));
        let bad = "circuit 2 1\n# comment\nrot X 5 : 0\n";
        assert!(matches!(bad.parse::<Circuit>(), Err(Error::Parse { line: 3, .. })));
        assert!("circuit 2 1\nu3 0 : 0 0\n".parse::<Circuit>().is_err());
        assert!("circuit 2 1\nfoo 0 : 0\n".parse::<Circuit>().is_err());
        assert!("".parse::<Circuit>().is_err());
    }

    #[test]
    fn widened_circuit_acts_on_prefix() {
        let c = hea(2, 1).unwrap();
        let w = c.widened(3).unwrap();
        let theta = [0.1, 0.2, 0.3, 0.4, 0.5];
        let u = c.unitary(&theta).unwrap();
        let uw = w.unitary(&theta).unwrap();
        assert!(uw.max_diff(&kron(&u, &DenseMatrix::identity(2))) < 1e-14);
    }
}
