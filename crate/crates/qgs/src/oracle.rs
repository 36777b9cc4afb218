//! Dense state-vector oracle.
//!
//! Everything the symbolic layer claims is checked here against literal
//! amplitudes: graph-state construction, local Clifford gates, generalized
//! Pauli measurement with Born sampling, Bell measurement, and density
//! matrices with trace distance. Sites are addressed by [`VertexId`], in
//! little-endian order: `sites[0]` is the fastest-varying digit of the
//! amplitude index.
//!
//! State dimension is capped at 10^7 amplitudes; protocol-scale systems
//! (d ≤ 7, a handful of qudits) stay far below it.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::field::{Field, FieldElement};
use crate::graphstate::{LabelledGraph, VertexId};
use crate::pauli::{MeasurementBasis, PauliOperator};

const MAX_DIM: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("state of dimension {dim} exceeds the {limit}-amplitude oracle budget")]
    StateTooLarge { dim: u128, limit: usize },
    #[error("unknown site {0}")]
    UnknownSite(VertexId),
    #[error("duplicate site {0}")]
    DuplicateSite(VertexId),
    #[error("operator acts on {operator} sites but the state has {state}")]
    SiteCountMismatch { operator: usize, state: usize },
    #[error("field mismatch: F_{0} vs F_{1}")]
    FieldMismatch(u64, u64),
    #[error("projection has probability {0:.3e}; that branch does not occur")]
    ZeroProbability(f64),
    #[error("site {0} is entangled with the rest of the state")]
    NotProductSite(VertexId),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

/// ω^e for ω = e^{2πi/d}.
pub fn omega_pow(d: u64, e: i64) -> Complex64 {
    let r = e.rem_euclid(d as i64) as f64;
    Complex64::from_polar(1.0, TAU * r / d as f64)
}

/// Dense multi-qudit state over `F_d` sites.
#[derive(Clone, Debug)]
pub struct DenseState {
    field: Field,
    sites: Vec<VertexId>,
    amps: Vec<Complex64>,
}

impl DenseState {
    fn checked_dim(field: Field, n_sites: usize) -> Result<usize, OracleError> {
        let mut dim: u128 = 1;
        for _ in 0..n_sites {
            dim *= field.modulus() as u128;
            if dim > MAX_DIM as u128 {
                return Err(OracleError::StateTooLarge { dim, limit: MAX_DIM });
            }
        }
        Ok(dim as usize)
    }

    fn check_sites(sites: &[VertexId]) -> Result<(), OracleError> {
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(OracleError::DuplicateSite(*s));
            }
        }
        Ok(())
    }

    /// Computational basis state |values[0], values[1], …⟩.
    pub fn basis(
        field: Field,
        sites: Vec<VertexId>,
        values: &[FieldElement],
    ) -> Result<DenseState, OracleError> {
        Self::check_sites(&sites)?;
        assert_eq!(values.len(), sites.len(), "one value per site");
        let dim = Self::checked_dim(field, sites.len())?;
        let mut amps = vec![Complex64::ZERO; dim];
        let d = field.modulus() as usize;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for v in values {
            idx += v.value() as usize * stride;
            stride *= d;
        }
        amps[idx] = Complex64::ONE;
        Ok(DenseState { field, sites, amps })
    }

    /// |G_ℓ⟩: CZ-entangled uniform state, then per-site Z^z, X^x, S^m
    /// (S outermost).
    pub fn from_graph(graph: &LabelledGraph) -> Result<DenseState, OracleError> {
        let field = graph.field();
        let n = graph.vertex_count();
        let sites = graph.ids().to_vec();
        Self::check_sites(&sites)?;
        let dim = Self::checked_dim(field, n)?;
        let norm = 1.0 / (field.modulus() as f64).sqrt().powi(n as i32);
        let mut st = DenseState {
            field,
            sites,
            amps: vec![Complex64::new(norm, 0.0); dim],
        };
        for i in 0..n {
            for j in (i + 1)..n {
                let w = graph.weight_at(i, j);
                if !w.is_zero() {
                    st.apply_controlled_z_at(i, j, w);
                }
            }
        }
        for i in 0..n {
            let z = graph.z_label_at(i);
            if !z.is_zero() {
                st.apply_z_at(i, z);
            }
        }
        for i in 0..n {
            let x = graph.x_label_at(i);
            if !x.is_zero() {
                st.apply_x_at(i, x);
            }
        }
        for i in 0..n {
            let m = graph.m_label_at(i);
            if !m.is_zero() {
                st.apply_s_at(i, m);
            }
        }
        Ok(st)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn sites(&self) -> &[VertexId] {
        &self.sites
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn site_pos(&self, v: VertexId) -> Result<usize, OracleError> {
        self.sites
            .iter()
            .position(|&s| s == v)
            .ok_or(OracleError::UnknownSite(v))
    }

    fn d(&self) -> usize {
        self.field.modulus() as usize
    }

    fn stride(&self, pos: usize) -> usize {
        self.d().pow(pos as u32)
    }

    fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.stride(pos)) % self.d()
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amps {
                *a *= inv;
            }
        }
        n
    }

    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.amps {
            *a *= c;
        }
    }

    pub fn inner(&self, other: &DenseState) -> Result<Complex64, OracleError> {
        if self.sites != other.sites {
            return Err(OracleError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Σ c_k |ψ_k⟩ over states with identical site layout (unnormalized).
    pub fn scaled_sum(terms: &[(Complex64, &DenseState)]) -> Result<DenseState, OracleError> {
        let (_, first) = terms.first().expect("at least one term");
        let mut out = DenseState {
            field: first.field,
            sites: first.sites.clone(),
            amps: vec![Complex64::ZERO; first.dim()],
        };
        for (c, st) in terms {
            if st.sites != out.sites {
                return Err(OracleError::DimensionMismatch(st.dim(), out.dim()));
            }
            for (o, a) in out.amps.iter_mut().zip(&st.amps) {
                *o += c * a;
            }
        }
        Ok(out)
    }

    pub fn max_abs_diff(&self, other: &DenseState) -> f64 {
        assert_eq!(self.sites, other.sites, "comparable states share sites");
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest ‖self − e^{iφ}·other‖_∞ over global phases φ, using the
    /// largest amplitude of `self` to fix φ. Returns ∞ when `other` is
    /// (near) zero where `self` is not.
    pub fn max_deviation_up_to_phase(&self, other: &DenseState) -> f64 {
        assert_eq!(self.sites, other.sites, "comparable states share sites");
        let (k, peak) = self
            .amps
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("states are nonempty");
        if peak.norm() == 0.0 {
            return other.norm();
        }
        if other.amps[k].norm() < 1e-140 {
            return f64::INFINITY;
        }
        let phase = (peak / other.amps[k]) / (peak / other.amps[k]).norm();
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - phase * b).norm())
            .fold(0.0, f64::max)
    }

    pub fn equal_up_to_global_phase(&self, other: &DenseState, tol: f64) -> bool {
        self.max_deviation_up_to_phase(other) < tol
    }

    // ---- local gates -------------------------------------------------

    fn apply_z_at(&mut self, pos: usize, c: FieldElement) {
        let modulus = self.field.modulus();
        let d = self.d();
        let stride = self.stride(pos);
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let a = (idx / stride) % d;
            *amp *= omega_pow(modulus, c.value() as i64 * a as i64);
        }
    }

    fn apply_x_at(&mut self, pos: usize, c: FieldElement) {
        let d = self.d();
        let stride = self.stride(pos);
        let shift = c.value() as usize;
        let mut out = vec![Complex64::ZERO; self.amps.len()];
        for (idx, amp) in self.amps.iter().enumerate() {
            let a = (idx / stride) % d;
            let b = (a + shift) % d;
            out[idx - a * stride + b * stride] = *amp;
        }
        self.amps = out;
    }

    fn apply_s_at(&mut self, pos: usize, c: FieldElement) {
        let d = self.field.modulus();
        let stride = self.stride(pos);
        let dd = self.d();
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let a = ((idx / stride) % dd) as i64;
            *amp *= omega_pow(d, c.value() as i64 * (a * (a - 1) / 2));
        }
    }

    fn apply_controlled_z_at(&mut self, pa: usize, pb: usize, w: FieldElement) {
        let d = self.field.modulus();
        let (sa, sb) = (self.stride(pa), self.stride(pb));
        let dd = self.d();
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            let a = ((idx / sa) % dd) as i64;
            let b = ((idx / sb) % dd) as i64;
            *amp *= omega_pow(d, w.value() as i64 * a * b);
        }
    }

    pub fn apply_z(&mut self, v: VertexId, c: FieldElement) -> Result<(), OracleError> {
        let pos = self.site_pos(v)?;
        self.apply_z_at(pos, c);
        Ok(())
    }

    pub fn apply_x(&mut self, v: VertexId, c: FieldElement) -> Result<(), OracleError> {
        let pos = self.site_pos(v)?;
        self.apply_x_at(pos, c);
        Ok(())
    }

    pub fn apply_s(&mut self, v: VertexId, c: FieldElement) -> Result<(), OracleError> {
        let pos = self.site_pos(v)?;
        self.apply_s_at(pos, c);
        Ok(())
    }

    pub fn apply_controlled_z(
        &mut self,
        a: VertexId,
        b: VertexId,
        w: FieldElement,
    ) -> Result<(), OracleError> {
        let (pa, pb) = (self.site_pos(a)?, self.site_pos(b)?);
        self.apply_controlled_z_at(pa, pb, w);
        Ok(())
    }

    /// Fourier gate U|k⟩ = (1/√d) Σ_j ω^{jk}|j⟩ on one site.
    pub fn apply_u(&mut self, v: VertexId) -> Result<(), OracleError> {
        self.apply_fourier(v, 1)
    }

    /// U^{-1}|k⟩ = (1/√d) Σ_j ω^{-jk}|j⟩.
    pub fn apply_u_inv(&mut self, v: VertexId) -> Result<(), OracleError> {
        self.apply_fourier(v, -1)
    }

    fn apply_fourier(&mut self, v: VertexId, sign: i64) -> Result<(), OracleError> {
        let pos = self.site_pos(v)?;
        let d = self.d();
        let stride = self.stride(pos);
        let norm = 1.0 / (d as f64).sqrt();
        let table: Vec<Complex64> = (0..d * d)
            .map(|e| omega_pow(self.field.modulus(), sign * (e / d * (e % d)) as i64) * norm)
            .collect();
        let mut out = vec![Complex64::ZERO; self.amps.len()];
        for (idx, amp) in self.amps.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let k = (idx / stride) % d;
            let base = idx - k * stride;
            for j in 0..d {
                out[base + j * stride] += table[j * d + k] * amp;
            }
        }
        self.amps = out;
        Ok(())
    }

    /// R = U^{-1} S^{-1} U, the Fourier-conjugated phase gate.
    pub fn apply_r(&mut self, v: VertexId) -> Result<(), OracleError> {
        self.apply_u(v)?;
        self.apply_s(v, self.field.elem(-1))?;
        self.apply_u_inv(v)
    }

    /// Multiplication gate |k⟩ → |c·k⟩ (c must be invertible).
    pub fn apply_mult(&mut self, v: VertexId, c: FieldElement) -> Result<(), OracleError> {
        assert!(!c.is_zero(), "multiplier must be invertible");
        let pos = self.site_pos(v)?;
        let d = self.d();
        let stride = self.stride(pos);
        let cval = c.value() as usize;
        let mut out = vec![Complex64::ZERO; self.amps.len()];
        for (idx, amp) in self.amps.iter().enumerate() {
            let a = (idx / stride) % d;
            let b = (a * cval) % d;
            out[idx - a * stride + b * stride] = *amp;
        }
        self.amps = out;
        Ok(())
    }

    /// Controlled addition |a⟩|b⟩ → |a⟩|b + λ·a⟩, optionally reading the
    /// control or writing the target in the Fourier (barred) basis by
    /// conjugating that site with U / U^{-1}.
    pub fn apply_cadd(
        &mut self,
        control: VertexId,
        target: VertexId,
        lambda: FieldElement,
        control_barred: bool,
        target_barred: bool,
    ) -> Result<(), OracleError> {
        if control_barred {
            self.apply_u(control)?;
        }
        if target_barred {
            self.apply_u(target)?;
        }
        let (pc, pt) = (self.site_pos(control)?, self.site_pos(target)?);
        assert_ne!(pc, pt, "control and target must differ");
        let d = self.d();
        let (sc, st) = (self.stride(pc), self.stride(pt));
        let lam = lambda.value() as usize;
        let mut out = vec![Complex64::ZERO; self.amps.len()];
        for (idx, amp) in self.amps.iter().enumerate() {
            let a = (idx / sc) % d;
            let b = (idx / st) % d;
            let nb = (b + lam * a) % d;
            out[idx + nb * st - b * st] = *amp;
        }
        self.amps = out;
        if target_barred {
            self.apply_u_inv(target)?;
        }
        if control_barred {
            self.apply_u_inv(control)?;
        }
        Ok(())
    }

    /// Applies a multi-site operator ω^φ Π_i X_i^{a_i} Z_i^{b_i} (site-wise
    /// Z first, then X). The operator's site k acts on this state's site k.
    pub fn apply_pauli(&mut self, p: &PauliOperator) -> Result<(), OracleError> {
        if p.sites() != self.sites.len() {
            return Err(OracleError::SiteCountMismatch {
                operator: p.sites(),
                state: self.sites.len(),
            });
        }
        if p.field().modulus() != self.field.modulus() {
            return Err(OracleError::FieldMismatch(
                p.field().modulus(),
                self.field.modulus(),
            ));
        }
        for pos in 0..self.sites.len() {
            let b = p.z_exp(pos);
            if !b.is_zero() {
                self.apply_z_at(pos, b);
            }
            let a = p.x_exp(pos);
            if !a.is_zero() {
                self.apply_x_at(pos, a);
            }
        }
        let phase = omega_pow(self.field.modulus(), p.phase().value() as i64);
        self.scale(phase);
        Ok(())
    }

    // ---- measurement ---------------------------------------------------

    /// Unnormalized eigencomponents P_s|ψ⟩ of a generalized Pauli, where
    /// P_s = (1/d) Σ_k ω^{-sk} P^k. Their squared norms are the Born
    /// probabilities of outcomes ω^s.
    pub fn eigencomponents(&self, p: &PauliOperator) -> Result<Vec<DenseState>, OracleError> {
        let d = self.d();
        let modulus = self.field.modulus();
        let mut comps = vec![
            DenseState {
                field: self.field,
                sites: self.sites.clone(),
                amps: vec![Complex64::ZERO; self.dim()],
            };
            d
        ];
        let mut power = self.clone(); // P^k |ψ⟩
        for k in 0..d {
            for (s, comp) in comps.iter_mut().enumerate() {
                let w = omega_pow(modulus, -((s * k) as i64)) / d as f64;
                for (c, a) in comp.amps.iter_mut().zip(&power.amps) {
                    *c += w * a;
                }
            }
            if k + 1 < d {
                power.apply_pauli(p)?;
            }
        }
        Ok(comps)
    }

    /// Born probabilities of the outcomes ω^0, ω^1, … of measuring `p`.
    pub fn outcome_probabilities(&self, p: &PauliOperator) -> Result<Vec<f64>, OracleError> {
        Ok(self
            .eigencomponents(p)?
            .iter()
            .map(|c| c.norm().powi(2))
            .collect())
    }

    /// Samples a measurement of `p`, collapses the state, and returns the
    /// outcome exponent with its Born probability.
    pub fn measure_pauli<R: Rng>(
        &mut self,
        p: &PauliOperator,
        rng: &mut R,
    ) -> Result<(FieldElement, f64), OracleError> {
        let comps = self.eigencomponents(p)?;
        let probs: Vec<f64> = comps.iter().map(|c| c.norm().powi(2)).collect();
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        for (s, &pr) in probs.iter().enumerate() {
            acc += pr;
            if u < acc {
                chosen = Some(s);
                break;
            }
        }
        // Cumulative shortfall from rounding: take the most likely outcome.
        let chosen = chosen.unwrap_or_else(|| {
            probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(s, _)| s)
                .expect("at least one outcome")
        });
        let mut post = comps[chosen].clone();
        post.normalize();
        *self = post;
        Ok((self.field.elem(chosen as i64), probs[chosen]))
    }

    /// Projects onto the outcome-ω^s eigenspace of `p`; collapses and
    /// returns the branch probability (error if it is numerically zero).
    pub fn project_pauli(
        &mut self,
        p: &PauliOperator,
        s: FieldElement,
    ) -> Result<f64, OracleError> {
        let comps = self.eigencomponents(p)?;
        let mut post = comps[s.value() as usize].clone();
        let prob = post.norm().powi(2);
        if prob < 1e-12 {
            return Err(OracleError::ZeroProbability(prob));
        }
        post.normalize();
        *self = post;
        Ok(prob)
    }

    /// Measures one site in a local basis (`Z` or `X^m Z`).
    pub fn measure_in_basis<R: Rng>(
        &mut self,
        v: VertexId,
        basis: MeasurementBasis,
        rng: &mut R,
    ) -> Result<(FieldElement, f64), OracleError> {
        let pos = self.site_pos(v)?;
        let (a, b) = basis.site_exponents(self.field);
        let op = PauliOperator::single(self.field, self.sites.len(), pos, a, b);
        self.measure_pauli(&op, rng)
    }

    /// Projection of sites (a, b) onto the Bell state
    /// |ψ_mn⟩ = (1/√d) Σ_j ω^{jn} |j⟩_a |j+m⟩_b. Returns the branch
    /// probability and the exact (normalized) remainder on the other sites.
    pub fn bell_projection(
        &self,
        a: VertexId,
        b: VertexId,
        m: FieldElement,
        n: FieldElement,
    ) -> Result<(f64, DenseState), OracleError> {
        let (pa, pb) = (self.site_pos(a)?, self.site_pos(b)?);
        assert_ne!(pa, pb, "Bell projection needs two distinct sites");
        let d = self.d();
        let modulus = self.field.modulus();
        let rest_sites: Vec<VertexId> = self
            .sites
            .iter()
            .copied()
            .filter(|&s| s != a && s != b)
            .collect();
        let rest_dim = self.dim() / (d * d);
        let mut rest = vec![Complex64::ZERO; rest_dim];
        let (sa, sb) = (self.stride(pa), self.stride(pb));
        let norm = 1.0 / (d as f64).sqrt();
        let mshift = m.value() as usize;
        for (idx, amp) in self.amps.iter().enumerate() {
            let j = (idx / sa) % d;
            let jb = (idx / sb) % d;
            if jb != (j + mshift) % d {
                continue;
            }
            // Collapse idx to a remainder index by deleting both digits.
            let mut r = 0usize;
            let mut stride_out = 1usize;
            for pos in 0..self.sites.len() {
                if pos == pa || pos == pb {
                    continue;
                }
                r += self.digit(idx, pos) * stride_out;
                stride_out *= d;
            }
            rest[r] += amp * omega_pow(modulus, -(j as i64 * n.value() as i64)) * norm;
        }
        let mut rest = DenseState {
            field: self.field,
            sites: rest_sites,
            amps: rest,
        };
        let prob = rest.norm().powi(2);
        if prob > 0.0 {
            rest.normalize();
        }
        Ok((prob, rest))
    }

    /// Samples a Bell measurement of sites (a, b), removing them.
    pub fn measure_bell<R: Rng>(
        self,
        a: VertexId,
        b: VertexId,
        rng: &mut R,
    ) -> Result<BellMeasurement, OracleError> {
        let d = self.field.modulus();
        let mut branches = Vec::with_capacity((d * d) as usize);
        for m in 0..d {
            for n in 0..d {
                let (m, n) = (self.field.elem(m as i64), self.field.elem(n as i64));
                let (probability, state) = self.bell_projection(a, b, m, n)?;
                branches.push(BellMeasurement { m, n, probability, state });
            }
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, br) in branches.iter().enumerate() {
            acc += br.probability;
            if u < acc {
                chosen = Some(i);
                break;
            }
        }
        // Cumulative shortfall from rounding: take the most likely branch.
        let chosen = chosen.unwrap_or_else(|| {
            branches
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.probability.total_cmp(&b.1.probability))
                .map(|(i, _)| i)
                .expect("at least one branch")
        });
        Ok(branches.swap_remove(chosen))
    }

    /// The unnormalized slice ⟨value|_v ψ on the remaining sites. For a
    /// state where site v is exactly |value⟩ this is the exact remainder,
    /// global phase included.
    pub fn slice_site(&self, v: VertexId, value: FieldElement) -> Result<DenseState, OracleError> {
        let pos = self.site_pos(v)?;
        let d = self.d();
        let rest_sites: Vec<VertexId> =
            self.sites.iter().copied().filter(|&s| s != v).collect();
        let mut rest = vec![Complex64::ZERO; self.dim() / d];
        let val = value.value() as usize;
        for (idx, amp) in self.amps.iter().enumerate() {
            if (idx / self.stride(pos)) % d != val {
                continue;
            }
            let mut r = 0usize;
            let mut stride_out = 1usize;
            for p in 0..self.sites.len() {
                if p == pos {
                    continue;
                }
                r += self.digit(idx, p) * stride_out;
                stride_out *= d;
            }
            rest[r] = *amp;
        }
        Ok(DenseState {
            field: self.field,
            sites: rest_sites,
            amps: rest,
        })
    }

    /// Removes an unentangled site, returning the normalized remainder
    /// (global phase fixed by the dominant slice). Errors if the site is
    /// entangled with the rest.
    pub fn factor_out_site(&self, v: VertexId) -> Result<DenseState, OracleError> {
        let d = self.field.modulus() as i64;
        let slices: Vec<DenseState> = (0..d)
            .map(|j| self.slice_site(v, self.field.elem(j)))
            .collect::<Result<_, _>>()?;
        let (best, _) = slices
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("d ≥ 3 slices");
        let mut rest = slices[best].clone();
        rest.normalize();
        // Every slice must be proportional to the dominant one.
        for sl in &slices {
            let coeff = rest.inner(sl).expect("same layout");
            let mut recon = rest.clone();
            recon.scale(coeff);
            if recon.max_abs_diff(sl) > 1e-9 {
                return Err(OracleError::NotProductSite(v));
            }
        }
        Ok(rest)
    }

    /// Tensor product; `self`'s sites stay fastest-varying.
    pub fn tensor(&self, other: &DenseState) -> Result<DenseState, OracleError> {
        if self.field.modulus() != other.field.modulus() {
            return Err(OracleError::FieldMismatch(
                self.field.modulus(),
                other.field.modulus(),
            ));
        }
        let mut sites = self.sites.clone();
        for s in &other.sites {
            if sites.contains(s) {
                return Err(OracleError::DuplicateSite(*s));
            }
            sites.push(*s);
        }
        Self::checked_dim(self.field, sites.len())?;
        let mut amps = vec![Complex64::ZERO; self.dim() * other.dim()];
        for (j, b) in other.amps.iter().enumerate() {
            if b.norm_sqr() == 0.0 {
                continue;
            }
            let base = j * self.dim();
            for (i, a) in self.amps.iter().enumerate() {
                amps[base + i] = a * b;
            }
        }
        Ok(DenseState {
            field: self.field,
            sites,
            amps,
        })
    }

    /// Reduced density matrix on `keep` (row index little-endian in the
    /// order given), tracing out everything else.
    pub fn reduced_density(&self, keep: &[VertexId]) -> Result<DensityMatrix, OracleError> {
        let d = self.d();
        let mut keep_pos = Vec::with_capacity(keep.len());
        for &v in keep {
            keep_pos.push(self.site_pos(v)?);
        }
        let keep_dim = d.pow(keep.len() as u32);
        let env_dim = self.dim() / keep_dim;
        // Regroup amplitudes as table[env][keep].
        let mut table = vec![Complex64::ZERO; self.dim()];
        for (idx, amp) in self.amps.iter().enumerate() {
            let mut ki = 0usize;
            let mut ks = 1usize;
            for &p in &keep_pos {
                ki += self.digit(idx, p) * ks;
                ks *= d;
            }
            let mut ei = 0usize;
            let mut es = 1usize;
            for p in 0..self.sites.len() {
                if keep_pos.contains(&p) {
                    continue;
                }
                ei += self.digit(idx, p) * es;
                es *= d;
            }
            table[ei * keep_dim + ki] = *amp;
        }
        let mut rho = DMatrix::<Complex64>::zeros(keep_dim, keep_dim);
        for e in 0..env_dim {
            let v = &table[e * keep_dim..(e + 1) * keep_dim];
            for r in 0..keep_dim {
                if v[r].norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..keep_dim {
                    rho[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        Ok(DensityMatrix { data: rho })
    }
}

/// Outcome of a sampled Bell measurement: the two exponents, the branch
/// probability, and the collapsed remainder.
#[derive(Clone, Debug)]
pub struct BellMeasurement {
    pub m: FieldElement,
    pub n: FieldElement,
    pub probability: f64,
    pub state: DenseState,
}

/// Dense density matrix (Hermitian by construction where produced here).
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    data: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &DenseState) -> DensityMatrix {
        let dim = state.dim();
        let mut data = DMatrix::<Complex64>::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                data[(r, c)] = state.amps[r] * state.amps[c].conj();
            }
        }
        DensityMatrix { data }
    }

    pub fn maximally_mixed(dim: usize) -> DensityMatrix {
        let mut data = DMatrix::<Complex64>::zeros(dim, dim);
        for i in 0..dim {
            data[(i, i)] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.data[(r, c)]
    }

    pub fn trace(&self) -> Complex64 {
        self.data.trace()
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        // Kronecker with `self` fastest-varying, matching DenseState::tensor.
        let (da, db) = (self.dim(), other.dim());
        let mut data = DMatrix::<Complex64>::zeros(da * db, da * db);
        for rb in 0..db {
            for cb in 0..db {
                for ra in 0..da {
                    for ca in 0..da {
                        data[(rb * da + ra, cb * da + ca)] =
                            self.data[(ra, ca)] * other.data[(rb, cb)];
                    }
                }
            }
        }
        DensityMatrix { data }
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "comparable densities share dim");
        let mut worst = 0.0f64;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                worst = worst.max((self.data[(r, c)] - other.data[(r, c)]).norm());
            }
        }
        worst
    }

    /// ⟨k|ρ|k⟩ for a computational basis index.
    pub fn diagonal_element(&self, k: usize) -> f64 {
        self.data[(k, k)].re
    }

    /// Trace distance (1/2)‖ρ − σ‖₁ via the eigenvalues of the Hermitian
    /// difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim(), "comparable densities share dim");
        let diff = &self.data - &other.data;
        let eig = diff.symmetric_eigen();
        0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>()
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with_pure(&self, state: &DenseState) -> f64 {
        assert_eq!(self.dim(), state.dim(), "dimensions must match");
        let mut acc = Complex64::ZERO;
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                acc += state.amps[r].conj() * self.data[(r, c)] * state.amps[c];
            }
        }
        acc.re
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::pauli::stabilizer_of;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn f(d: u64) -> Field {
        Field::new(d).unwrap()
    }

    fn random_state(field: Field, sites: Vec<VertexId>, seed: u64) -> DenseState {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let dim = DenseState::checked_dim(field, sites.len()).unwrap();
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let mut st = DenseState { field, sites, amps };
        st.normalize();
        st
    }

    fn sites(n: u32) -> Vec<VertexId> {
        (1..=n).map(VertexId).collect()
    }

    #[test]
    fn fourier_is_unitary() {
        for d in [3, 5, 7] {
            let field = f(d);
            let mut st = random_state(field, sites(2), d);
            let orig = st.clone();
            st.apply_u(VertexId(1)).unwrap();
            assert!((st.norm() - 1.0).abs() < 1e-12);
            st.apply_u_inv(VertexId(1)).unwrap();
            assert!(st.max_abs_diff(&orig) < 1e-12);
        }
    }

    #[test]
    fn barred_basis_laws() {
        // |x̄⟩ = U^{-1}|x⟩ satisfies X|x̄⟩ = ω^x |x̄⟩ and Z^c|x̄⟩ = |(x-c)‾⟩.
        let field = f(5);
        for x in 0..5i64 {
            let mut bar = DenseState::basis(field, sites(1), &[field.elem(x)]).unwrap();
            bar.apply_u_inv(VertexId(1)).unwrap();

            let mut shifted = bar.clone();
            shifted.apply_x(VertexId(1), field.one()).unwrap();
            let mut expect = bar.clone();
            expect.scale(omega_pow(5, x));
            assert!(shifted.max_abs_diff(&expect) < 1e-12);

            for c in 0..5i64 {
                let mut rotated = bar.clone();
                rotated.apply_z(VertexId(1), field.elem(c)).unwrap();
                let mut target =
                    DenseState::basis(field, sites(1), &[field.elem(x - c)]).unwrap();
                target.apply_u_inv(VertexId(1)).unwrap();
                assert!(rotated.max_abs_diff(&target) < 1e-12);
            }
        }
    }

    #[test]
    fn clifford_conjugations() {
        // S X S^{-1} = XZ and R Z R^{-1} = XZ, with exact phases.
        let field = f(5);
        let v = VertexId(1);
        let st = random_state(field, sites(1), 7);

        let mut lhs = st.clone();
        lhs.apply_s(v, field.elem(-1)).unwrap();
        lhs.apply_x(v, field.one()).unwrap();
        lhs.apply_s(v, field.one()).unwrap();
        let mut rhs = st.clone();
        rhs.apply_z(v, field.one()).unwrap();
        rhs.apply_x(v, field.one()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12, "S X S^-1 = XZ");

        let mut lhs = st.clone();
        // R^{-1} = U^{-1} S U
        lhs.apply_u(v).unwrap();
        lhs.apply_s(v, field.one()).unwrap();
        lhs.apply_u_inv(v).unwrap();
        lhs.apply_z(v, field.one()).unwrap();
        lhs.apply_r(v).unwrap();
        let mut rhs = st.clone();
        rhs.apply_z(v, field.one()).unwrap();
        rhs.apply_x(v, field.one()).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12, "R Z R^-1 = XZ");
    }

    #[test]
    fn graph_state_amplitudes() {
        // Bare graph state amplitudes are (1/√d^n) ω^{Σ_{i<j} A_ij a_i a_j}.
        let field = f(3);
        let g = fixtures::cc_ring(field, 3, field.zero());
        let st = DenseState::from_graph(&g).unwrap();
        let norm = 1.0 / (3.0f64).powf(1.5);
        for idx in 0..st.dim() {
            let a0 = (idx % 3) as i64;
            let a1 = ((idx / 3) % 3) as i64;
            let a2 = ((idx / 9) % 3) as i64;
            let expect = omega_pow(3, a0 * a1 + a1 * a2 + a0 * a2) * norm;
            assert!((st.amplitudes()[idx] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn stabilizer_fixes_graph_state() {
        let field = f(5);
        let g = fixtures::sample_weighted_graph(field);
        let mut bare = g.clone();
        for &v in g.ids() {
            bare.set_labels(v, field.zero(), field.zero(), field.zero())
                .unwrap();
        }
        let st = DenseState::from_graph(&bare).unwrap();
        for &v in bare.ids() {
            let mut moved = st.clone();
            moved.apply_pauli(&stabilizer_of(&bare, v).unwrap()).unwrap();
            assert!(moved.max_abs_diff(&st) < 1e-10, "K_{v} fixes |G⟩");
        }
    }

    #[test]
    fn measurement_completeness_and_collapse() {
        let field = f(5);
        let st = random_state(field, sites(2), 11);
        let op = PauliOperator::single(field, 2, 0, field.elem(2), field.one());
        let probs = st.outcome_probabilities(&op).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-10);

        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut collapsed = st.clone();
        let (s, p) = collapsed.measure_pauli(&op, &mut rng).unwrap();
        assert!(p > 0.0);
        // Measuring again yields the same outcome with probability 1.
        let again = collapsed.outcome_probabilities(&op).unwrap();
        assert!((again[s.value() as usize] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_probability_projection_errors() {
        let field = f(3);
        let st = DenseState::basis(field, sites(1), &[field.zero()]).unwrap();
        let z = PauliOperator::single(field, 1, 0, field.zero(), field.one());
        // |0⟩ has Z-outcome ω^0 with certainty; ω^1 never occurs.
        let mut branch = st.clone();
        assert!(matches!(
            branch.project_pauli(&z, field.one()),
            Err(OracleError::ZeroProbability(_))
        ));
        let mut ok = st;
        assert!((ok.project_pauli(&z, field.zero()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn z_collapse_branch_phase() {
        // ⟨s|_i |G_ℓ⟩ = (1/√d) ω^{z_i s + m_i s(s-1)/2} |G'⟩ with
        // G' = G − i, z_j += s·A_ij: exact amplitudes, not just up to phase.
        let field = f(5);
        let g = fixtures::sample_weighted_graph(field);
        let st = DenseState::from_graph(&g).unwrap();
        for v in [VertexId(2), VertexId(5)] {
            for s in 0..5i64 {
                let s = field.elem(s);
                let slice = st.slice_site(v, s).unwrap();

                let keep: Vec<VertexId> =
                    g.ids().iter().copied().filter(|&u| u != v).collect();
                let mut reduced = g.induced_subgraph(&keep).unwrap();
                for &u in &keep {
                    let shift = s * g.weight(v, u).unwrap();
                    let z = reduced.z_label(u).unwrap();
                    reduced.set_z(u, z + shift).unwrap();
                }
                let mut expect = DenseState::from_graph(&reduced).unwrap();
                let zi = g.z_label(v).unwrap();
                let mi = g.m_label(v).unwrap();
                let sv = s.value() as i64;
                let phase = (zi.value() as i64) * sv
                    + (mi.value() as i64) * (sv * (sv - 1) / 2);
                expect.scale(omega_pow(5, phase) / (5.0f64).sqrt());
                assert!(slice.max_abs_diff(&expect) < 1e-12);
            }
        }
    }

    #[test]
    fn bell_projection_completeness_and_pickout() {
        let field = f(3);
        let st = random_state(field, sites(3), 21);
        let mut total = 0.0;
        for m in 0..3 {
            for n in 0..3 {
                let (p, _) = st
                    .bell_projection(VertexId(1), VertexId(2), field.elem(m), field.elem(n))
                    .unwrap();
                total += p;
            }
        }
        assert!((total - 1.0).abs() < 1e-10);

        // Build |ψ_mn⟩ ⊗ |φ⟩ and check the projection picks it out exactly.
        let (m, n) = (field.elem(2), field.elem(1));
        let mut terms = Vec::new();
        let kets: Vec<DenseState> = (0..3)
            .map(|j| {
                DenseState::basis(
                    field,
                    vec![VertexId(1), VertexId(2)],
                    &[field.elem(j), field.elem(j) + m],
                )
                .unwrap()
            })
            .collect();
        let coeffs: Vec<Complex64> = (0..3)
            .map(|j| omega_pow(3, j * n.value() as i64) / (3.0f64).sqrt())
            .collect();
        for (c, k) in coeffs.iter().zip(&kets) {
            terms.push((*c, k));
        }
        let bell = DenseState::scaled_sum(&terms).unwrap();
        let phi = random_state(field, vec![VertexId(9)], 5);
        let joint = bell.tensor(&phi).unwrap();
        let (p, rest) = joint.bell_projection(VertexId(1), VertexId(2), m, n).unwrap();
        assert!((p - 1.0).abs() < 1e-10);
        assert!(rest.max_abs_diff(&phi) < 1e-10);
        let (p2, _) = joint
            .bell_projection(VertexId(1), VertexId(2), m, field.zero())
            .unwrap();
        assert!(p2 < 1e-12);
    }

    #[test]
    fn factor_out_detects_entanglement() {
        let field = f(3);
        let phi = random_state(field, vec![VertexId(1)], 2);
        let psi = random_state(field, vec![VertexId(2), VertexId(3)], 3);
        let joint = phi.tensor(&psi).unwrap();
        let rest = joint.factor_out_site(VertexId(1)).unwrap();
        assert!(rest.equal_up_to_global_phase(&psi, 1e-10));

        // A maximally entangled pair cannot be factored.
        let mut bell = DenseState::basis(
            field,
            vec![VertexId(1), VertexId(2)],
            &[field.zero(), field.zero()],
        )
        .unwrap();
        bell.apply_u(VertexId(1)).unwrap();
        bell.apply_cadd(VertexId(1), VertexId(2), field.one(), false, false)
            .unwrap();
        assert!(matches!(
            bell.factor_out_site(VertexId(1)),
            Err(OracleError::NotProductSite(_))
        ));
    }

    #[test]
    fn cadd_on_basis_states() {
        let field = f(5);
        for a in 0..5i64 {
            for b in 0..5i64 {
                let mut st = DenseState::basis(
                    field,
                    vec![VertexId(1), VertexId(2)],
                    &[field.elem(a), field.elem(b)],
                )
                .unwrap();
                st.apply_cadd(VertexId(1), VertexId(2), field.elem(3), false, false)
                    .unwrap();
                let expect = DenseState::basis(
                    field,
                    vec![VertexId(1), VertexId(2)],
                    &[field.elem(a), field.elem(b + 3 * a)],
                )
                .unwrap();
                assert!(st.max_abs_diff(&expect) < 1e-12);
            }
        }
    }

    #[test]
    fn cadd_barred_control_reads_fourier_value() {
        // On |x̄⟩_1 |b⟩_2, a barred-control CADD_λ adds λx to the target.
        let field = f(5);
        for x in 0..5i64 {
            for b in 0..5i64 {
                let mut bar = DenseState::basis(field, vec![VertexId(1)], &[field.elem(x)])
                    .unwrap();
                bar.apply_u_inv(VertexId(1)).unwrap();
                let target =
                    DenseState::basis(field, vec![VertexId(2)], &[field.elem(b)]).unwrap();
                let mut joint = bar.tensor(&target).unwrap();
                joint
                    .apply_cadd(VertexId(1), VertexId(2), field.elem(2), true, false)
                    .unwrap();

                let mut expect_bar =
                    DenseState::basis(field, vec![VertexId(1)], &[field.elem(x)]).unwrap();
                expect_bar.apply_u_inv(VertexId(1)).unwrap();
                let expect_t = DenseState::basis(
                    field,
                    vec![VertexId(2)],
                    &[field.elem(b + 2 * x)],
                )
                .unwrap();
                let expect = expect_bar.tensor(&expect_t).unwrap();
                assert!(joint.max_abs_diff(&expect) < 1e-11);
            }
        }
    }

    #[test]
    fn mult_gate_permutes_basis_and_inverts() {
        let field = f(7);
        for a in 0..7i64 {
            let mut st = DenseState::basis(field, vec![VertexId(1)], &[field.elem(a)]).unwrap();
            st.apply_mult(VertexId(1), field.elem(3)).unwrap();
            let expect =
                DenseState::basis(field, vec![VertexId(1)], &[field.elem(3 * a)]).unwrap();
            assert!(st.max_abs_diff(&expect) < 1e-12);
            st.apply_mult(VertexId(1), field.elem(3).inv()).unwrap();
            let back = DenseState::basis(field, vec![VertexId(1)], &[field.elem(a)]).unwrap();
            assert!(st.max_abs_diff(&back) < 1e-12);
        }
    }

    #[test]
    fn reduced_density_of_entangled_pair_is_mixed() {
        let field = f(3);
        let mut bell = DenseState::basis(
            field,
            vec![VertexId(1), VertexId(2)],
            &[field.zero(), field.zero()],
        )
        .unwrap();
        bell.apply_u(VertexId(1)).unwrap();
        bell.apply_cadd(VertexId(1), VertexId(2), field.one(), false, false)
            .unwrap();
        let rho = bell.reduced_density(&[VertexId(1)]).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(3)) < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_extremes() {
        let field = f(3);
        let zero = DenseState::basis(field, sites(1), &[field.zero()]).unwrap();
        let one = DenseState::basis(field, sites(1), &[field.one()]).unwrap();
        let r0 = DensityMatrix::from_pure(&zero);
        let r1 = DensityMatrix::from_pure(&one);
        assert!(r0.trace_distance(&r0) < 1e-12);
        assert!((r0.trace_distance(&r1) - 1.0).abs() < 1e-12);
        assert!((r0.fidelity_with_pure(&zero) - 1.0).abs() < 1e-12);
        assert!(r0.fidelity_with_pure(&one) < 1e-12);
    }

    #[test]
    fn tensor_layout_is_little_endian() {
        let field = f(3);
        let a = DenseState::basis(field, vec![VertexId(1)], &[field.one()]).unwrap();
        let b = DenseState::basis(field, vec![VertexId(2)], &[field.elem(2)]).unwrap();
        let ab = a.tensor(&b).unwrap();
        // index = 1 + 3*2 = 7
        assert!((ab.amplitudes()[7] - Complex64::ONE).norm() < 1e-15);
        assert_eq!(ab.sites(), &[VertexId(1), VertexId(2)]);
    }

    #[test]
    fn state_budget_enforced() {
        let field = f(31);
        let many: Vec<VertexId> = (1..=6).map(VertexId).collect();
        let values = vec![field.zero(); 6];
        assert!(matches!(
            DenseState::basis(field, many, &values),
            Err(OracleError::StateTooLarge { .. })
        ));
    }
}
