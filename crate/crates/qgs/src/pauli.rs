//! Symbolic algebra of n-qudit generalized Pauli operators.
//!
//! An operator is stored as `ω^phase · ⊗_i X_i^{x[i]} Z_i^{z[i]}` with X
//! applied after Z on each site and all exponents in `F_d`. For odd `d` the
//! group generated by X and Z with `ω^k` phases is closed under products and
//! powers, so no 2d-th roots of unity are ever needed.
//!
//! Graph-state stabilizers ([`stabilizer_of`]) and the eigenvalue bookkeeping
//! of stabilizer products ([`eigenvalue_exponent`]) live here too; the
//! non-Pauli local operators (S, U, R) exist only inside the dense oracle.

use std::fmt;

use thiserror::Error;

use crate::field::{Field, FieldElement};
use crate::graphstate::{GraphError, LabelledGraph, VertexId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("operator site counts differ: {0} vs {1}")]
    SiteCountMismatch(usize, usize),
    #[error("operators live over different fields: F_{0} vs F_{1}")]
    FieldMismatch(u64, u64),
}

/// `ω^{phase} · ⊗_i X_i^{x[i]} Z_i^{z[i]}`, X after Z on each site.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    field: Field,
    phase: FieldElement,
    x: Vec<FieldElement>,
    z: Vec<FieldElement>,
}

impl PauliOperator {
    pub fn identity(field: Field, sites: usize) -> PauliOperator {
        PauliOperator {
            field,
            phase: field.zero(),
            x: vec![field.zero(); sites],
            z: vec![field.zero(); sites],
        }
    }

    /// Single-site `X^a Z^b` embedded at `site` (zero-based position).
    pub fn single(field: Field, sites: usize, site: usize, a: FieldElement, b: FieldElement) -> PauliOperator {
        assert!(site < sites, "site {site} out of range for {sites} sites");
        let mut op = PauliOperator::identity(field, sites);
        op.x[site] = a;
        op.z[site] = b;
        op
    }

    pub fn from_parts(
        field: Field,
        phase: FieldElement,
        x: Vec<FieldElement>,
        z: Vec<FieldElement>,
    ) -> PauliOperator {
        assert_eq!(x.len(), z.len(), "x and z exponent vectors must align");
        PauliOperator { field, phase, x, z }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn sites(&self) -> usize {
        self.x.len()
    }

    pub fn phase(&self) -> FieldElement {
        self.phase
    }

    pub fn x_exp(&self, site: usize) -> FieldElement {
        self.x[site]
    }

    pub fn z_exp(&self, site: usize) -> FieldElement {
        self.z[site]
    }

    pub fn with_phase(mut self, phase: FieldElement) -> PauliOperator {
        self.phase = phase;
        self
    }

    /// Sites where the operator acts nontrivially.
    pub fn support(&self) -> Vec<usize> {
        (0..self.sites())
            .filter(|&i| !self.x[i].is_zero() || !self.z[i].is_zero())
            .collect()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.support().is_empty()
    }

    fn check_compatible(&self, rhs: &PauliOperator) -> Result<(), PauliError> {
        if self.field != rhs.field {
            return Err(PauliError::FieldMismatch(
                self.field.modulus(),
                rhs.field.modulus(),
            ));
        }
        if self.sites() != rhs.sites() {
            return Err(PauliError::SiteCountMismatch(self.sites(), rhs.sites()));
        }
        Ok(())
    }

    /// Operator product `self · rhs` (rhs acts on the state first).
    ///
    /// Moving each of rhs's X factors left past self's Z factors picks up
    /// `ω^{self.z · rhs.x}` — the entire reordering cost in one dot product.
    pub fn multiply(&self, rhs: &PauliOperator) -> Result<PauliOperator, PauliError> {
        self.check_compatible(rhs)?;
        let mut phase = self.phase + rhs.phase;
        for i in 0..self.sites() {
            phase += self.z[i] * rhs.x[i];
        }
        let x = self
            .x
            .iter()
            .zip(&rhs.x)
            .map(|(&a, &b)| a + b)
            .collect();
        let z = self
            .z
            .iter()
            .zip(&rhs.z)
            .map(|(&a, &b)| a + b)
            .collect();
        Ok(PauliOperator {
            field: self.field,
            phase,
            x,
            z,
        })
    }

    /// `self^k` in closed form:
    /// `(X^a Z^b)^k = ω^{ab·k(k−1)/2} X^{ka} Z^{kb}` per site, with the
    /// existing phase scaled by k. `k(k−1)/2` is integral because d is odd.
    pub fn power(&self, k: FieldElement) -> PauliOperator {
        let binom = (k * (k - self.field.one())).half();
        let mut phase = k * self.phase;
        for i in 0..self.sites() {
            phase += self.x[i] * self.z[i] * binom;
        }
        PauliOperator {
            field: self.field,
            phase,
            x: self.x.iter().map(|&a| a * k).collect(),
            z: self.z.iter().map(|&b| b * k).collect(),
        }
    }

    pub fn inverse(&self) -> PauliOperator {
        self.power(-self.field.one())
    }

    /// `c` such that `self · rhs = ω^c · rhs · self`.
    pub fn commutation_exponent(&self, rhs: &PauliOperator) -> Result<FieldElement, PauliError> {
        self.check_compatible(rhs)?;
        let mut c = self.field.zero();
        for i in 0..self.sites() {
            c += self.z[i] * rhs.x[i] - self.x[i] * rhs.z[i];
        }
        Ok(c)
    }

    /// Display with explicit site names instead of 1-based positions, for
    /// graphs whose vertices are not numbered 1..n (e.g. a dealer vertex 0).
    pub fn display_with_ids(&self, ids: &[VertexId]) -> String {
        assert_eq!(ids.len(), self.sites(), "id list must cover every site");
        self.render(|site| ids[site].0.to_string())
    }

    fn render(&self, site_name: impl Fn(usize) -> String) -> String {
        let mut out = String::new();
        if !self.phase.is_zero() {
            out.push('w');
            if self.phase.value() != 1 {
                out.push_str(&format!("^{}", self.phase));
            }
            out.push(' ');
        }
        let mut any = false;
        for i in 0..self.sites() {
            for (sym, e) in [('X', self.x[i]), ('Z', self.z[i])] {
                if e.is_zero() {
                    continue;
                }
                if any {
                    out.push(' ');
                }
                out.push(sym);
                out.push_str(&site_name(i));
                if e.value() != 1 {
                    out.push_str(&format!("^{}", e));
                }
                any = true;
            }
        }
        if !any {
            out.push('I');
        }
        out
    }
}

/// Rendered as e.g. `w^2 X1 Z2^3 X4`: optional `w^k` phase prefix (`w` for
/// k = 1), then per-site factors in site order, X before Z, sites 1-based,
/// exponent suffix omitted when 1; bare `I` for the identity.
impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render(|site| (site + 1).to_string()))
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (mod {})", self.field.modulus())
    }
}

/// The measurement families the protocols use: the computational `Z` basis
/// and the rotated `X^m Z` bases (eigenbases of order-d Paulis).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum MeasurementBasis {
    Z,
    XmZ(FieldElement),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unrecognized basis spec {0:?} (expected Z, XZ, or X<m>Z)")]
pub struct BasisParseError(pub String);

impl MeasurementBasis {
    /// The measured single-site observable's (x, z) exponent pair.
    pub fn site_exponents(&self, field: Field) -> (FieldElement, FieldElement) {
        match *self {
            MeasurementBasis::Z => (field.zero(), field.one()),
            MeasurementBasis::XmZ(m) => (m, field.one()),
        }
    }

    /// `m` in the X^m Z family; the Z basis is its m = 0 member.
    pub fn m(&self, field: Field) -> FieldElement {
        match *self {
            MeasurementBasis::Z => field.zero(),
            MeasurementBasis::XmZ(m) => m,
        }
    }

    /// Inverse of the `Display` grammar: `Z`, `XZ`, `X<m>Z` with m < d.
    pub fn parse(spec: &str, field: Field) -> Result<MeasurementBasis, BasisParseError> {
        let err = || BasisParseError(spec.to_string());
        if spec == "Z" {
            return Ok(MeasurementBasis::Z);
        }
        let inner = spec.strip_prefix('X').and_then(|s| s.strip_suffix('Z')).ok_or_else(err)?;
        if inner.is_empty() {
            return Ok(MeasurementBasis::XmZ(field.one()));
        }
        let m: u64 = inner.parse().map_err(|_| err())?;
        let m = field.checked_elem(m).map_err(|_| err())?;
        Ok(MeasurementBasis::XmZ(m))
    }
}

impl fmt::Display for MeasurementBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MeasurementBasis::Z => write!(f, "Z"),
            MeasurementBasis::XmZ(m) if m.value() == 1 => write!(f, "XZ"),
            MeasurementBasis::XmZ(m) => write!(f, "X{}Z", m),
        }
    }
}

/// The graph-state stabilizer `K_i = (X Z^{m_i})_i Z^{A_i}`: X on vertex i,
/// Z^{m_i} folded onto the same site, and Z^{A_ij} on every neighbour j.
/// Sites follow the graph's vertex order.
pub fn stabilizer_of(graph: &LabelledGraph, vertex: VertexId) -> Result<PauliOperator, GraphError> {
    let field = graph.field();
    let pos = graph.index_of(vertex)?;
    let n = graph.vertex_count();
    let mut op = PauliOperator::identity(field, n);
    op.x[pos] = field.one();
    op.z[pos] = graph.m_label(vertex)?;
    for j in 0..n {
        if j != pos {
            op.z[j] = graph.weight_at(pos, j);
        }
    }
    Ok(op)
}

/// Exponent of the eigenvalue of `Π_i K_i^{w_i}` on an encoded graph state:
/// `−Σ_i w_i z_i`. Valid whenever all x-labels vanish (the encoded case).
pub fn eigenvalue_exponent(graph: &LabelledGraph, weights: &[FieldElement]) -> FieldElement {
    assert_eq!(
        weights.len(),
        graph.vertex_count(),
        "weight vector must cover every vertex"
    );
    let mut acc = graph.field().zero();
    for (pos, &w) in weights.iter().enumerate() {
        acc += w * graph.z_label_at(pos);
    }
    -acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(d: u64) -> Field {
        Field::new(d).unwrap()
    }

    fn x(field: Field) -> PauliOperator {
        PauliOperator::single(field, 1, 0, field.one(), field.zero())
    }

    fn z(field: Field) -> PauliOperator {
        PauliOperator::single(field, 1, 0, field.zero(), field.one())
    }

    #[test]
    fn z_times_x_picks_up_omega() {
        for d in [3, 5, 7] {
            let field = f(d);
            let zx = z(field).multiply(&x(field)).unwrap();
            assert_eq!(zx.phase().value(), 1);
            assert_eq!(zx.x_exp(0).value(), 1);
            assert_eq!(zx.z_exp(0).value(), 1);
            // XZ keeps phase 0: the canonical order needs no reordering.
            let xz = x(field).multiply(&z(field)).unwrap();
            assert_eq!(xz.phase().value(), 0);
        }
    }

    #[test]
    fn x_order_d() {
        let field = f(5);
        let mut acc = x(field);
        for _ in 1..5 {
            acc = acc.multiply(&x(field)).unwrap();
        }
        assert!(acc.is_identity_up_to_phase());
        assert_eq!(acc.phase().value(), 0);
    }

    #[test]
    fn power_matches_repeated_multiply_exhaustively() {
        for d in [3u64, 5] {
            let field = f(d);
            for a in field.elements() {
                for b in field.elements() {
                    let op = PauliOperator::single(field, 1, 0, a, b);
                    let mut acc = PauliOperator::identity(field, 1);
                    for k in 0..2 * d {
                        let direct = op.power(field.elem(k as i64));
                        assert_eq!(direct, acc, "({a},{b})^{k} at d={d}");
                        acc = acc.multiply(&op).unwrap();
                    }
                }
            }
        }
    }

    #[test]
    fn power_of_x_inv_z() {
        // (X^{-1} Z)^A = w^{-A(A-1)/2} X^{-A} Z^{A}: the ab=-1 case of the
        // closed form, oracle-verified (see the verify suites).
        for d in [3u64, 5, 7] {
            let field = f(d);
            let op = PauliOperator::single(field, 1, 0, -field.one(), field.one());
            for a in field.elements() {
                let p = op.power(a);
                let expected_phase = -(a * (a - field.one())).half();
                assert_eq!(p.phase(), expected_phase, "A={a}, d={d}");
                assert_eq!(p.x_exp(0), -a);
                assert_eq!(p.z_exp(0), a);
            }
        }
    }

    #[test]
    fn multiply_associative_randomized() {
        let field = f(7);
        let mut state = 42u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..200 {
            let rand_op = |next: &mut dyn FnMut() -> u64| {
                let phase = field.elem((next() % 7) as i64);
                let x = (0..3).map(|_| field.elem((next() % 7) as i64)).collect();
                let z = (0..3).map(|_| field.elem((next() % 7) as i64)).collect();
                PauliOperator::from_parts(field, phase, x, z)
            };
            let (p, q, r) = (rand_op(&mut next), rand_op(&mut next), rand_op(&mut next));
            let left = p.multiply(&q).unwrap().multiply(&r).unwrap();
            let right = p.multiply(&q.multiply(&r).unwrap()).unwrap();
            assert_eq!(left, right);

            let inv = p.inverse();
            let prod = p.multiply(&inv).unwrap();
            assert!(prod.is_identity_up_to_phase());
            assert_eq!(prod.phase().value(), 0, "P · P^-1 = I exactly");

            // self · rhs = ω^c rhs · self
            let c = p.commutation_exponent(&q).unwrap();
            let pq = p.multiply(&q).unwrap();
            let qp = q.multiply(&p).unwrap();
            assert_eq!(pq.phase(), qp.phase() + c);
        }
    }

    #[test]
    fn display_grammar() {
        let field = f(5);
        let op = PauliOperator::from_parts(
            field,
            field.elem(2),
            vec![field.elem(1), field.elem(0), field.elem(0), field.elem(1)],
            vec![field.elem(0), field.elem(3), field.elem(0), field.elem(0)],
        );
        assert_eq!(op.to_string(), "w^2 X1 Z2^3 X4");
        assert_eq!(PauliOperator::identity(field, 3).to_string(), "I");
        let phase_only = PauliOperator::identity(field, 2).with_phase(field.one());
        assert_eq!(phase_only.to_string(), "w I");
        let xz = PauliOperator::single(field, 2, 1, field.one(), field.elem(4));
        assert_eq!(xz.to_string(), "X2 Z2^4");
    }

    #[test]
    fn basis_parse_round_trip() {
        let field = f(5);
        for basis in [
            MeasurementBasis::Z,
            MeasurementBasis::XmZ(field.one()),
            MeasurementBasis::XmZ(field.elem(3)),
        ] {
            let rendered = basis.to_string();
            assert_eq!(MeasurementBasis::parse(&rendered, field).unwrap(), basis);
        }
        assert!(MeasurementBasis::parse("X7Z", field).is_err(), "m must be < d");
        assert!(MeasurementBasis::parse("Y", field).is_err());
        assert!(MeasurementBasis::parse("XZ2", field).is_err());
    }

    #[test]
    fn mismatched_operators_error() {
        let p = PauliOperator::identity(f(3), 2);
        let q = PauliOperator::identity(f(3), 3);
        assert!(matches!(
            p.multiply(&q),
            Err(PauliError::SiteCountMismatch(2, 3))
        ));
        let r = PauliOperator::identity(f(5), 2);
        assert!(matches!(p.multiply(&r), Err(PauliError::FieldMismatch(3, 5))));
    }
}
