//! Quantum secret, quantum shares: teleport in, decode with local work.
//!
//! The dealer prepares the dealer-extended graph state, distributes the
//! player qudits, and projects its input register together with its own
//! graph vertex onto a generalized Bell state. Conditioned on the announced
//! outcome (m, n), one Pauli correction on the players' side leaves the
//! share system in the encoded family `Σ_j α_j |g_{z = j·ζ}⟩`, where g is
//! the players' share graph and ζ the per-player secret coefficient — the
//! quantum analogue of the classical z-label encoding.
//!
//! Decoding is scheme-specific but always local to the authorized subset:
//! the 2-of-3 star uses two controlled register additions between the pair,
//! the 3-of-5 ring first pins down the complement's influence with two
//! coset (stabilizer-product) measurements inside the trio, and the
//! all-or-nothing star funnels the secret to any chosen player with
//! single-qudit measurements everywhere else. Subsets below the threshold
//! get nothing: their reduced state is independent of the secret, which the
//! denial audit certifies by a vanishing trace distance over a probe family.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::field::{solve_linear, Field, FieldElement, LinearSolution, Matrix};
use crate::fixtures::DEALER;
use crate::graphstate::{LabelledGraph, VertexId};
use crate::oracle::{DenseState, DensityMatrix};
use crate::pauli::{stabilizer_of, MeasurementBasis, PauliOperator};

use super::transcript::{RoleId, Transcript};
use super::{embed_pauli, ProtocolError, SchemeShape, SchemeSpec, QQ_SOURCE};

/// An arbitrary qudit state to be shared.
#[derive(Clone, Debug)]
pub struct QuantumSecret {
    field: Field,
    amps: Vec<Complex64>,
}

impl QuantumSecret {
    /// The basis secret |k⟩.
    pub fn basis(field: Field, k: FieldElement) -> QuantumSecret {
        let mut amps = vec![Complex64::ZERO; field.modulus() as usize];
        amps[k.value() as usize] = Complex64::ONE;
        QuantumSecret { field, amps }
    }

    /// The balanced superposition (|k⟩ + |l⟩)/√2 of two distinct dits.
    pub fn uniform_pair(field: Field, k: FieldElement, l: FieldElement) -> QuantumSecret {
        assert_ne!(k, l, "pair probe needs distinct dits");
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let mut amps = vec![Complex64::ZERO; field.modulus() as usize];
        amps[k.value() as usize] = w;
        amps[l.value() as usize] = w;
        QuantumSecret { field, amps }
    }

    /// A unit-norm amplitude vector of length d.
    pub fn from_amplitudes(
        field: Field,
        amps: Vec<Complex64>,
    ) -> Result<QuantumSecret, ProtocolError> {
        if amps.len() != field.modulus() as usize {
            return Err(ProtocolError::InvalidSecret(format!(
                "expected {} amplitudes, got {}",
                field.modulus(),
                amps.len()
            )));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(ProtocolError::InvalidSecret(format!(
                "amplitudes have norm {norm:.8}, need 1"
            )));
        }
        Ok(QuantumSecret { field, amps })
    }

    /// A Haar-ish random secret (uniform cube sampled, then normalized).
    pub fn random<R: Rng>(field: Field, rng: &mut R) -> QuantumSecret {
        loop {
            let amps: Vec<Complex64> = (0..field.modulus())
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-3 {
                let amps = amps.iter().map(|a| a / norm).collect();
                return QuantumSecret { field, amps };
            }
        }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// The secret as a single-qudit dense state at `site`.
    pub fn state_at(&self, site: VertexId) -> DenseState {
        let basis_states: Vec<DenseState> = (0..self.field.modulus())
            .map(|k| {
                DenseState::basis(self.field, vec![site], &[self.field.elem(k as i64)])
                    .expect("single site fits")
            })
            .collect();
        let terms: Vec<(Complex64, &DenseState)> =
            self.amps.iter().copied().zip(basis_states.iter()).collect();
        DenseState::scaled_sum(&terms).expect("same shapes")
    }
}

/// One teleportation: announced Bell outcome, its probability, and the
/// corrected share state (player sites only).
#[derive(Clone, Debug)]
pub struct QqDeal {
    pub m: FieldElement,
    pub n: FieldElement,
    pub probability: f64,
    pub state: DenseState,
}

/// The reference encoding `Σ_j α_j |g_{z=j·ζ}⟩` built directly on the
/// players' share graph — what a perfect deal must produce.
pub fn encoded_state(
    scheme: &SchemeSpec,
    secret: &QuantumSecret,
) -> Result<DenseState, ProtocolError> {
    let field = scheme.field();
    let bare = scheme.cc_encode(field.zero()).into_inner();
    let coeff = scheme.secret_coeff();
    let mut branches = Vec::new();
    for j in 0..field.modulus() {
        let j = field.elem(j as i64);
        let mut g = bare.clone();
        for (pos, &v) in bare.ids().to_vec().iter().enumerate() {
            g.set_z(v, j * coeff[pos])?;
        }
        branches.push(DenseState::from_graph(&g)?);
    }
    let terms: Vec<(Complex64, &DenseState)> = secret
        .amplitudes()
        .iter()
        .copied()
        .zip(branches.iter())
        .collect();
    Ok(DenseState::scaled_sum(&terms)?)
}

fn initial_state(
    scheme: &SchemeSpec,
    secret: &QuantumSecret,
) -> Result<DenseState, ProtocolError> {
    let ext = scheme.extended_graph()?;
    let source = secret.state_at(QQ_SOURCE);
    Ok(source.tensor(&DenseState::from_graph(ext.as_graph())?)?)
}

/// The outcome-conditioned Pauli that turns the post-measurement share
/// state into the canonical encoding: `K_a^{-n·A_{Da}^{-1}} · Π_p Z_p^{-m·A_{Dp}}`,
/// with K the players' share-graph stabilizers, A the dealer's extension
/// weights, and anchor a a player adjacent to the dealer.
fn bell_correction(
    scheme: &SchemeSpec,
    m: FieldElement,
    n: FieldElement,
) -> Result<PauliOperator, ProtocolError> {
    let field = scheme.field();
    let ext = scheme.extended_graph()?;
    let bare = scheme.cc_encode(field.zero()).into_inner();
    let anchor = match scheme.shape() {
        SchemeShape::TwoThree => VertexId(2),
        _ => VertexId(1),
    };
    let a_anchor = ext.as_graph().weight(DEALER, anchor)?;
    let kpow = stabilizer_of(&bare, anchor)?.power(-(n * a_anchor.inv()));
    let z: Vec<FieldElement> = bare
        .ids()
        .iter()
        .map(|&p| {
            ext.as_graph()
                .weight(DEALER, p)
                .map(|w| -(m * w))
        })
        .collect::<Result<_, _>>()?;
    let x = vec![field.zero(); bare.vertex_count()];
    Ok(kpow.multiply(&PauliOperator::from_parts(field, field.zero(), x, z))?)
}

/// Teleportation conditioned on a chosen Bell outcome (for exhaustive
/// replay of all d² branches).
pub fn qq_deal_projected(
    scheme: &SchemeSpec,
    secret: &QuantumSecret,
    m: FieldElement,
    n: FieldElement,
) -> Result<QqDeal, ProtocolError> {
    let joint = initial_state(scheme, secret)?;
    let (probability, mut state) = joint.bell_projection(QQ_SOURCE, DEALER, m, n)?;
    state.apply_pauli(&bell_correction(scheme, m, n)?)?;
    Ok(QqDeal {
        m,
        n,
        probability,
        state,
    })
}

/// Teleportation with a sampled Bell outcome.
pub fn qq_deal<R: Rng>(
    scheme: &SchemeSpec,
    secret: &QuantumSecret,
    rng: &mut R,
) -> Result<QqDeal, ProtocolError> {
    let joint = initial_state(scheme, secret)?;
    let bell = joint.measure_bell(QQ_SOURCE, DEALER, rng)?;
    let mut state = bell.state;
    state.apply_pauli(&bell_correction(scheme, bell.m, bell.n)?)?;
    Ok(QqDeal {
        m: bell.m,
        n: bell.n,
        probability: bell.probability,
        state,
    })
}

/// Result of a subset's decode.
#[derive(Clone, Debug)]
pub struct QqRecovery {
    /// The player site now holding the secret.
    pub output_site: VertexId,
    /// Reduced state of the output site after all corrections.
    pub output: DensityMatrix,
    /// Amplitudes read off the output state (meaningful when it is pure).
    pub decoded: Vec<Complex64>,
    /// Public measurement announcements made along the way.
    pub events: Vec<(RoleId, String, u64)>,
}

impl QqRecovery {
    /// ⟨s|ρ_out|s⟩ against a reference secret.
    pub fn fidelity_against(&self, secret: &QuantumSecret) -> f64 {
        self.output
            .fidelity_with_pure(&secret.state_at(self.output_site))
    }
}

fn finish(
    state: &DenseState,
    output_site: VertexId,
    events: Vec<(RoleId, String, u64)>,
) -> Result<QqRecovery, ProtocolError> {
    let output = state.reduced_density(&[output_site])?;
    let d = output.dim();
    let k0 = (0..d)
        .max_by(|&a, &b| {
            output
                .diagonal_element(a)
                .total_cmp(&output.diagonal_element(b))
        })
        .expect("nonempty");
    let w = output.diagonal_element(k0).max(f64::MIN_POSITIVE).sqrt();
    let decoded = (0..d).map(|j| output.entry(j, k0) / w).collect();
    Ok(QqRecovery {
        output_site,
        output,
        decoded,
        events,
    })
}

/// Decodes the teleported secret inside an authorized subset, using only
/// operations on subset sites. Unauthorized subsets are refused (see
/// [`qq_audit_denial`] for what they can prove instead).
pub fn qq_recover<R: Rng>(
    scheme: &SchemeSpec,
    dealt: &DenseState,
    subset: &[VertexId],
    rng: &mut R,
) -> Result<QqRecovery, ProtocolError> {
    let sorted = scheme.validate_subset(subset)?;
    if !scheme.authorized(&sorted)? {
        return Err(ProtocolError::NotAuthorized(
            sorted.iter().map(|v| v.0).collect(),
        ));
    }
    match scheme.shape() {
        SchemeShape::TwoThree => {
            let mut state = dealt.clone();
            let pair = (sorted[0].0, sorted[1].0);
            recover_twothree_pair(&mut state, pair, scheme.field())?;
            let output = if pair == (2, 3) { VertexId(2) } else { VertexId(1) };
            finish(&state, output, Vec::new())
        }
        SchemeShape::Ring35 => recover_ring35_trio(scheme, dealt, &sorted[..3], rng),
        SchemeShape::Tree { .. } => qq_isolate(scheme, dealt, VertexId(1), rng),
        SchemeShape::Ring34 => Err(ProtocolError::Unsupported {
            scheme: "ring34",
            operation: "quantum-share decoding",
        }),
    }
}

/// Two controlled register additions inside the pair, then a local relabel,
/// leave the secret on the output site in the computational basis.
fn recover_twothree_pair(
    state: &mut DenseState,
    pair: (u32, u32),
    field: Field,
) -> Result<(), ProtocolError> {
    let one = field.one();
    let inv2 = one.half();
    let (v1, v2, v3) = (VertexId(1), VertexId(2), VertexId(3));
    match pair {
        (1, 2) => {
            state.apply_cadd(v1, v2, -one, false, true)?;
            state.apply_cadd(v2, v1, inv2, true, false)?;
            state.apply_mult(v1, -one)?;
        }
        (1, 3) => {
            state.apply_cadd(v1, v3, inv2, false, true)?;
            state.apply_cadd(v3, v1, one + one, true, false)?;
            state.apply_mult(v1, -inv2)?;
        }
        (2, 3) => {
            state.apply_cadd(v3, v2, -one, true, true)?;
            state.apply_cadd(v2, v3, -one, true, true)?;
            state.apply_u(v2)?;
            state.apply_mult(v2, -one)?;
        }
        _ => {
            return Err(ProtocolError::UnsupportedSubset(vec![pair.0, pair.1]));
        }
    }
    Ok(())
}

/// The induced trio graph and the two trio-local stabilizer products whose
/// measurement pins down the ring complement. Their exponent vectors
/// (1, −1, 0) and (0, 1, −1) sum to zero, so both products commute with
/// every secret branch of the encoding — measuring them reveals nothing
/// about the secret, only the complement's effective Z values.
fn trio_products(
    scheme: &SchemeSpec,
    trio: &[VertexId],
) -> Result<(LabelledGraph, [PauliOperator; 2]), ProtocolError> {
    if !matches!(scheme.shape(), SchemeShape::Ring35) {
        return Err(ProtocolError::Unsupported {
            scheme: scheme.name(),
            operation: "coset syndrome measurement",
        });
    }
    let field = scheme.field();
    let bare = scheme.cc_encode(field.zero()).into_inner();
    let h = bare.induced_subgraph(trio)?;
    let one = field.one();
    let phis = [
        [one, -one, field.zero()],
        [field.zero(), one, -one],
    ];
    let mut out = Vec::with_capacity(2);
    for phi in &phis {
        let mut op = PauliOperator::identity(field, h.vertex_count());
        for (t, &vt) in trio.iter().enumerate() {
            if phi[t].is_zero() {
                continue;
            }
            op = op.multiply(&stabilizer_of(&h, vt)?.power(phi[t]))?;
        }
        out.push(op);
    }
    let ops = [out.remove(0), out.remove(0)];
    Ok((h, ops))
}

/// The trio's coset-measurement operators laid out over the full
/// player-site list (ascending), identity off the trio — the public view
/// for auditing their outcome statistics on a dealt state.
pub fn coset_operators(
    scheme: &SchemeSpec,
    trio: &[VertexId],
) -> Result<[PauliOperator; 2], ProtocolError> {
    let (h, [o1, o2]) = trio_products(scheme, trio)?;
    let players = scheme.players();
    Ok([
        embed_pauli(&o1, h.ids(), &players),
        embed_pauli(&o2, h.ids(), &players),
    ])
}

/// Trio decode on the 5-ring: two coset measurements inside the trio fix
/// the complement's Z-basis values, outcome-conditioned Paulis restore the
/// uniform encoding, undoing the trio's internal edges leaves conjugate
/// copies of the secret on all three sites, and two Z measurements funnel
/// it onto the last one.
fn recover_ring35_trio<R: Rng>(
    scheme: &SchemeSpec,
    dealt: &DenseState,
    trio: &[VertexId],
    rng: &mut R,
) -> Result<QqRecovery, ProtocolError> {
    let field = scheme.field();
    let bare = scheme.cc_encode(field.zero()).into_inner();
    let (h, products) = trio_products(scheme, trio)?;
    let complement: Vec<VertexId> = scheme
        .players()
        .into_iter()
        .filter(|v| !trio.contains(v))
        .collect();
    let mut state = dealt.clone();
    let mut events = Vec::new();

    // Coset measurements resolve the complement's influence without
    // touching the secret branch.
    let one = field.one();
    let phis = [
        [one, -one, field.zero()],
        [field.zero(), one, -one],
    ];
    let mut syndromes = Vec::new();
    for (k, op) in products.iter().enumerate() {
        let embedded = embed_pauli(op, h.ids(), state.sites());
        let (e, _) = state.measure_pauli(&embedded, rng)?;
        events.push((
            RoleId::Player(trio[k].0),
            format!("coset{}", k + 1),
            e.value(),
        ));
        syndromes.push(e);
    }

    // e_k = -Σ_i M_ki v_i with M_ki = Σ_t φ_kt A(compl_i, trio_t): solve for
    // the complement's effective Z values v.
    let rows: Vec<Vec<FieldElement>> = phis
        .iter()
        .map(|phi| {
            complement
                .iter()
                .map(|&ci| {
                    trio.iter()
                        .zip(phi)
                        .fold(field.zero(), |acc, (&vt, &p)| {
                            acc + p * bare.weight(ci, vt).expect("player pair")
                        })
                })
                .collect()
        })
        .collect();
    let rhs: Vec<FieldElement> = syndromes.iter().map(|&e| -e).collect();
    let LinearSolution::Solution {
        particular: v,
        nullspace,
    } = solve_linear(&Matrix::from_rows(field, &rows), &rhs)
    else {
        unreachable!("syndrome map is onto for every trio of the 5-ring");
    };
    assert!(
        nullspace.is_empty(),
        "syndrome map must pin the complement uniquely"
    );

    // Clear the complement's imprint: label shifts, then the residual
    // branch phase via a stabilizer power at the first trio site.
    for &vt in trio {
        let delta = complement
            .iter()
            .zip(&v)
            .fold(field.zero(), |acc, (&ci, &vi)| {
                acc + vi * bare.weight(ci, vt).expect("player pair")
            });
        state.apply_z(vt, -delta)?;
    }
    let ksum = v[0] + v[1];
    if !ksum.is_zero() {
        let op = embed_pauli(
            &stabilizer_of(&h, trio[0])?.power(ksum),
            h.ids(),
            state.sites(),
        );
        state.apply_pauli(&op)?;
    }

    // Undo the trio's internal edges, leaving ⊗ U|j⟩ on its sites.
    for (a, b, w) in h.edges() {
        state.apply_controlled_z(a, b, -w)?;
    }

    // Funnel onto the last trio site.
    let (a1, _) = state.measure_in_basis(trio[0], MeasurementBasis::Z, rng)?;
    events.push((RoleId::Player(trio[0].0), "Z".to_string(), a1.value()));
    let (a2, _) = state.measure_in_basis(trio[1], MeasurementBasis::Z, rng)?;
    events.push((RoleId::Player(trio[1].0), "Z".to_string(), a2.value()));
    let out = trio[2];
    state.apply_x(out, a1 + a2)?;
    state.apply_u(out)?;
    state.apply_mult(out, -one)?;
    finish(&state, out, events)
}

/// All-or-nothing decode on the star: everyone but `target` measures a
/// single qudit (the centre in the X basis unless it is the target, leaves
/// in Z), and an outcome-conditioned correction leaves the secret at
/// `target` in the computational basis.
pub fn qq_isolate<R: Rng>(
    scheme: &SchemeSpec,
    dealt: &DenseState,
    target: VertexId,
    rng: &mut R,
) -> Result<QqRecovery, ProtocolError> {
    let SchemeShape::Tree { .. } = scheme.shape() else {
        return Err(ProtocolError::Unsupported {
            scheme: scheme.name(),
            operation: "single-player isolation",
        });
    };
    let field = scheme.field();
    let players = scheme.players();
    if !players.contains(&target) {
        return Err(ProtocolError::InvalidSubset(vec![target.0]));
    }
    let mut state = dealt.clone();
    let mut events = Vec::new();
    let centre = VertexId(1);
    let mut shift = field.zero();

    if target != centre {
        let pos = state.site_pos(centre)?;
        let x_op =
            PauliOperator::single(field, state.sites().len(), pos, field.one(), field.zero());
        let (s1, _) = state.measure_pauli(&x_op, rng)?;
        events.push((RoleId::Player(centre.0), "X".to_string(), s1.value()));
        shift += s1;
    }
    for &p in &players {
        if p == target || p == centre {
            continue;
        }
        let (k, _) = state.measure_in_basis(p, MeasurementBasis::Z, rng)?;
        events.push((RoleId::Player(p.0), "Z".to_string(), k.value()));
        shift += k;
    }

    if target == centre {
        state.apply_u(target)?;
    }
    state.apply_mult(target, -field.one())?;
    state.apply_x(target, -shift)?;
    finish(&state, target, events)
}

/// Probe-family denial audit: the largest pairwise trace distance between
/// the subset's reduced states over d basis secrets and all balanced
/// two-dit superpositions. Errors on authorized subsets (they can decode —
/// there is nothing to deny).
pub fn qq_audit_denial(
    scheme: &SchemeSpec,
    subset: &[VertexId],
) -> Result<f64, ProtocolError> {
    let sorted = scheme.validate_subset(subset)?;
    if scheme.authorized(&sorted)? {
        return Err(ProtocolError::SubsetIsAuthorized(
            sorted.iter().map(|v| v.0).collect(),
        ));
    }
    let field = scheme.field();
    let d = field.modulus();
    let mut probes = Vec::new();
    for k in 0..d {
        probes.push(QuantumSecret::basis(field, field.elem(k as i64)));
    }
    for k in 0..d {
        for l in k + 1..d {
            probes.push(QuantumSecret::uniform_pair(
                field,
                field.elem(k as i64),
                field.elem(l as i64),
            ));
        }
    }
    let mut reduced = Vec::new();
    for probe in &probes {
        let state = encoded_state(scheme, probe)?;
        reduced.push(state.reduced_density(&sorted)?);
    }
    let mut max = 0.0f64;
    for i in 0..reduced.len() {
        for j in i + 1..reduced.len() {
            max = max.max(reduced[i].trace_distance(&reduced[j]));
        }
    }
    Ok(max)
}

/// Summary of one orchestrated run (deal + recover or denial audit).
#[derive(Clone, Debug)]
pub struct QqRunSummary {
    pub authorized: bool,
    pub bell: Option<(u64, u64)>,
    pub output_site: Option<VertexId>,
    pub fidelity: Option<f64>,
    pub max_trace_distance: Option<f64>,
}

/// Full protocol pass for one subset, with transcript: teleport the secret
/// in and decode it (authorized), or run the denial audit (unauthorized).
pub fn qq_run(
    scheme: &SchemeSpec,
    secret: &QuantumSecret,
    subset: Option<&[VertexId]>,
    seed: u64,
) -> Result<(QqRunSummary, Transcript), ProtocolError> {
    let chosen = subset
        .map(<[VertexId]>::to_vec)
        .unwrap_or_else(|| scheme.default_subset());
    let sorted = scheme.validate_subset(&chosen)?;
    let mut transcript = Transcript::new();
    let d = scheme.field().modulus();

    if scheme.authorized(&sorted)? {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let deal = qq_deal(scheme, secret, &mut rng)?;
        transcript.record(
            0,
            RoleId::Dealer,
            "bell".to_string(),
            deal.m.value() * d + deal.n.value(),
            true,
        );
        let recovery = qq_recover(scheme, &deal.state, &sorted, &mut rng)?;
        for (role, basis, outcome) in &recovery.events {
            transcript.record(0, *role, basis.clone(), *outcome, true);
        }
        let fidelity = recovery.fidelity_against(secret);
        transcript.audit(
            "qq_fidelity",
            fidelity >= 1.0 - 1e-10,
            format!("{fidelity:.6}"),
        );
        Ok((
            QqRunSummary {
                authorized: true,
                bell: Some((deal.m.value(), deal.n.value())),
                output_site: Some(recovery.output_site),
                fidelity: Some(fidelity),
                max_trace_distance: None,
            },
            transcript,
        ))
    } else {
        let td = qq_audit_denial(scheme, &sorted)?;
        transcript.audit("qq_denial_max_td", td < 1e-10, format!("{td:.6}"));
        Ok((
            QqRunSummary {
                authorized: false,
                bell: None,
                output_site: None,
                fidelity: None,
                max_trace_distance: Some(td),
            },
            transcript,
        ))
    }
}
