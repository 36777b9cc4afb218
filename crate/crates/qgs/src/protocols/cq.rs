//! Classical secret, quantum shares: rounds of prepare-and-measure key
//! agreement.
//!
//! Each round the dealer prepares the dealer-extended graph state, sends
//! each player its share qudit over a public quantum channel, and measures
//! the dealer vertex in `X^{t_D} Z` with a fresh uniform `t_D`, producing a
//! uniformly random dit `s_D`. The measuring subset draws its own exponent
//! and measures the local factors of a stabilizer product chosen so that,
//! whenever the draws match (sifting, probability exactly 1/d), the product
//! of announced outcomes reveals `s_D`. Half of the kept rounds are
//! sacrificed: their outcomes are checked against a stabilizer identity of
//! the extended graph, and any violation exposes interference on the
//! quantum channels — an intercept-resend eavesdropper fails the check at a
//! macroscopic rate.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::field::FieldElement;
use crate::fixtures::DEALER;
use crate::graphstate::{LabelledGraph, VertexId};
use crate::oracle::{DenseState, DensityMatrix};
use crate::pauli::{stabilizer_of, MeasurementBasis, PauliOperator};

use super::transcript::{site_basis_label, RoleId, Transcript};
use super::{
    embed_pauli, ChannelMedium, ChannelPrivacy, ProtocolError, SchemeShape, SchemeSpec,
    EVE_REGISTER, EVE_REGISTER_2,
};

/// Fraction of kept rounds sacrificed to the verification check.
pub const SACRIFICE_FRACTION: f64 = 0.5;

/// Adversary model on the public quantum channels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Eavesdropper {
    None,
    /// Measures every transiting share qudit in a uniformly random basis
    /// from the d+1 bases {Z} ∪ {X^m Z} and forwards the collapsed state.
    InterceptResend,
}

/// Statistics and transcript of a multi-round run.
#[derive(Clone, Debug)]
pub struct CqRunResult {
    pub transcript: Transcript,
    pub rounds: u64,
    /// Rounds surviving the sift.
    pub kept: usize,
    /// Kept rounds whose subset decode matched the dealer's dit.
    pub agreements: usize,
    /// Kept rounds sacrificed to verification.
    pub sacrificed: usize,
    /// Sacrificed rounds that failed the stabilizer identity.
    pub violations: usize,
    /// Subset-side key dits from the kept, unsacrificed rounds.
    pub key: Vec<FieldElement>,
    /// Dealer-side dits on the same rounds.
    pub dealer_key: Vec<FieldElement>,
}

impl CqRunResult {
    pub fn sift_rate(&self) -> f64 {
        self.kept as f64 / self.rounds as f64
    }

    pub fn agreement_rate(&self) -> f64 {
        if self.kept == 0 {
            1.0
        } else {
            self.agreements as f64 / self.kept as f64
        }
    }

    pub fn violation_rate(&self) -> f64 {
        if self.sacrificed == 0 {
            0.0
        } else {
            self.violations as f64 / self.sacrificed as f64
        }
    }
}

/// Measurement weights prescribed for a threshold subset, as a function of
/// the subset's drawn exponent. Aligned with the sorted subset.
fn subset_weights(
    scheme: &SchemeSpec,
    subset: &[VertexId],
    t: FieldElement,
) -> Result<Vec<FieldElement>, ProtocolError> {
    let field = scheme.field();
    let one = field.one();
    let raw = || subset.iter().map(|v| v.0).collect::<Vec<u32>>();
    match scheme.shape() {
        SchemeShape::Tree { .. } => Err(ProtocolError::UnsupportedSubset(raw())),
        SchemeShape::Ring34 => Err(ProtocolError::Unsupported {
            scheme: "ring34",
            operation: "quantum-share rounds",
        }),
        SchemeShape::TwoThree => {
            if subset.len() != 2 {
                return Err(ProtocolError::UnsupportedSubset(raw()));
            }
            let pair = (subset[0].0, subset[1].0);
            Ok(match pair {
                (1, 2) | (1, 3) => vec![-(t + t), one],
                (2, 3) => vec![one, -one],
                _ => unreachable!("validated pair"),
            })
        }
        SchemeShape::Ring35 => {
            if subset.len() != 3 {
                return Err(ProtocolError::UnsupportedSubset(raw()));
            }
            let adjacent = |a: u32, b: u32| {
                let diff = (a as i64 - b as i64).rem_euclid(5);
                diff == 1 || diff == 4
            };
            let ids: Vec<u32> = subset.iter().map(|v| v.0).collect();
            let pairs: Vec<(usize, usize)> = [(0usize, 1usize), (0, 2), (1, 2)]
                .into_iter()
                .filter(|&(i, j)| adjacent(ids[i], ids[j]))
                .collect();
            let mut w = vec![field.zero(); 3];
            match pairs.len() {
                2 => {
                    // Path: the common endpoint of both ring edges is the
                    // middle; it gets 1+2t, the ends get -t.
                    let middle = (0..3)
                        .find(|&k| pairs.iter().all(|&(i, j)| i == k || j == k))
                        .expect("a path has a middle");
                    for (k, wk) in w.iter_mut().enumerate() {
                        *wk = if k == middle { one + t + t } else { -t };
                    }
                }
                1 => {
                    // One ring edge plus an isolated member: the pair gets
                    // 1+t each, the isolated member -(1+2t).
                    let (i, j) = pairs[0];
                    for (k, wk) in w.iter_mut().enumerate() {
                        *wk = if k == i || k == j {
                            one + t
                        } else {
                            -(one + t + t)
                        };
                    }
                }
                _ => unreachable!("every trio of a 5-ring spans 1 or 2 ring edges"),
            }
            Ok(w)
        }
    }
}

/// The stabilizer product `Π_p k_p^{w_p}` over the reduced share graph,
/// multiplied in ascending subset order.
fn assemble_product(
    reduced: &LabelledGraph,
    subset: &[VertexId],
    weights: &[FieldElement],
) -> Result<PauliOperator, ProtocolError> {
    let field = reduced.field();
    let mut product = PauliOperator::identity(field, reduced.vertex_count());
    for (&v, &w) in subset.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        let k = stabilizer_of(reduced, v)?.power(w);
        product = product.multiply(&k)?;
    }
    Ok(product)
}

/// Outcome of checking one kept round's stabilizer identity.
#[derive(Clone, Debug)]
pub struct VerificationIdentity {
    /// Do the two sides agree site-by-site in their X/Z exponents?
    /// (They must — a mismatch indicates a broken weight table.)
    pub matches: bool,
    /// Phase gap: lhs = ω^c · rhs as operators.
    pub c: FieldElement,
    /// Dealer-operator power on the right-hand side, `b = Σ_p w_p A_{pD}`.
    pub b: FieldElement,
    /// Dealer-stabilizer power on the left-hand side, `a = t·b`.
    pub a: FieldElement,
}

/// Builds both sides of the kept-round identity
/// `K_D^a · Π_p K_p^{w_p} = ω^c · (X^t Z)_D^b · Π_p k_p^{w_p}`
/// for the subset's weight table at exponent `t`, entirely symbolically.
/// Left: stabilizers of the dealer-extended graph. Right: the dealer's
/// measured operator to the power b times the subset's reduced-graph
/// product, embedded with identity on the dealer site.
pub fn verification_identity(
    scheme: &SchemeSpec,
    subset: &[VertexId],
    t: FieldElement,
) -> Result<VerificationIdentity, ProtocolError> {
    let sorted = scheme.validate_subset(subset)?;
    let weights = subset_weights(scheme, &sorted, t)?;
    let ext = scheme.extended_graph()?;
    let assumed = ext
        .measure_symbolic(DEALER, MeasurementBasis::XmZ(t), scheme.field().zero())?
        .reduced;
    let product = assemble_product(&assumed, &sorted, &weights)?;
    identity_parts(scheme, ext.as_graph(), &assumed, &sorted, &weights, t, &product)
}

fn identity_parts(
    scheme: &SchemeSpec,
    ext: &LabelledGraph,
    reduced: &LabelledGraph,
    subset: &[VertexId],
    weights: &[FieldElement],
    t: FieldElement,
    product: &PauliOperator,
) -> Result<VerificationIdentity, ProtocolError> {
    let field = scheme.field();
    let mut b = field.zero();
    for (&v, &w) in subset.iter().zip(weights) {
        b += w * ext.weight(v, DEALER)?;
    }
    let a = t * b;

    let mut lhs = stabilizer_of(ext, DEALER)?.power(a);
    for (&v, &w) in subset.iter().zip(weights) {
        if w.is_zero() {
            continue;
        }
        lhs = lhs.multiply(&stabilizer_of(ext, v)?.power(w))?;
    }

    let dealer_pos = ext.index_of(DEALER)?;
    let dealer_op = PauliOperator::single(field, ext.vertex_count(), dealer_pos, t, field.one());
    let rhs = dealer_op
        .power(b)
        .multiply(&embed_pauli(product, reduced.ids(), ext.ids()))?;

    let matches = (0..ext.vertex_count())
        .all(|i| lhs.x_exp(i) == rhs.x_exp(i) && lhs.z_exp(i) == rhs.z_exp(i));
    Ok(VerificationIdentity {
        matches,
        c: lhs.phase() - rhs.phase(),
        b,
        a,
    })
}

/// Runs `rounds` rounds of the prepare-and-measure protocol. `subset` must
/// be a prescribed measuring subset (`None` picks the scheme's canonical
/// one); for the all-or-nothing tree it is always the full player set.
pub fn cq_run(
    scheme: &SchemeSpec,
    subset: Option<&[VertexId]>,
    rounds: u64,
    eve: Eavesdropper,
    seed: u64,
) -> Result<CqRunResult, ProtocolError> {
    let field = scheme.field();
    let d = field.modulus();
    let ext = scheme.extended_graph()?;
    let ext_graph = ext.as_graph();
    let coeff = scheme.secret_coeff();
    let is_tree = matches!(scheme.shape(), SchemeShape::Tree { .. });

    let chosen = subset.map(<[VertexId]>::to_vec).unwrap_or_else(|| scheme.default_subset());
    let sorted = scheme.validate_subset(&chosen)?;
    if is_tree {
        if sorted != scheme.players() {
            return Err(ProtocolError::UnsupportedSubset(
                sorted.iter().map(|v| v.0).collect(),
            ));
        }
    } else {
        // Probe the weight table once so an unsupported subset fails fast.
        subset_weights(scheme, &sorted, field.zero())?;
    }

    // Share qudits transit these interceptable channels.
    let exposed: Vec<VertexId> = scheme
        .channels()
        .iter()
        .filter(|c| c.medium == ChannelMedium::Quantum && c.privacy == ChannelPrivacy::Public)
        .filter_map(|c| match c.to {
            RoleId::Player(p) => Some(VertexId(p)),
            RoleId::Dealer => None,
        })
        .collect();

    let mut transcript = Transcript::new();
    let mut kept_count = 0usize;
    let mut agreements = 0usize;
    let mut sacrificed_count = 0usize;
    let mut violations = 0usize;
    let mut key = Vec::new();
    let mut dealer_key = Vec::new();

    for round in 0..rounds {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ round);
        let mut state = DenseState::from_graph(ext_graph)?;

        if eve == Eavesdropper::InterceptResend {
            for &p in &exposed {
                let pick = rng.gen_range(0..d + 1);
                let basis = if pick == 0 {
                    MeasurementBasis::Z
                } else {
                    MeasurementBasis::XmZ(field.elem(pick as i64 - 1))
                };
                state.measure_in_basis(p, basis, &mut rng)?;
            }
        }

        let draw = |rng: &mut ChaCha12Rng| field.elem(rng.gen_range(0..d) as i64);
        let t_dealer = draw(&mut rng);

        // Subset draws and the operators actually measured this round.
        let (t_subset, weights, ops): (
            FieldElement,
            Vec<FieldElement>,
            Vec<(FieldElement, FieldElement)>,
        ) = if is_tree {
            let draws: Vec<FieldElement> = sorted.iter().map(|_| draw(&mut rng)).collect();
            let mut ops = vec![(field.one(), draws[0])]; // player 1: X Z^{t_1}
            ops.extend(draws[1..].iter().map(|&tj| (tj, field.one())));
            let mut weights = draws.clone();
            weights[0] = field.one();
            (draws[0], weights, ops)
        } else {
            let t = draw(&mut rng);
            let weights = subset_weights(scheme, &sorted, t)?;
            let assumed = ext
                .measure_symbolic(DEALER, MeasurementBasis::XmZ(t), field.zero())?
                .reduced;
            let product = assemble_product(&assumed, &sorted, &weights)?;
            let ops = sorted
                .iter()
                .map(|&v| {
                    let pos = assumed.index_of(v).expect("subset member");
                    (product.x_exp(pos), product.z_exp(pos))
                })
                .collect();
            (t, weights, ops)
        };

        let (s_dealer, _) =
            state.measure_in_basis(DEALER, MeasurementBasis::XmZ(t_dealer), &mut rng)?;

        let mut outcomes = Vec::with_capacity(sorted.len());
        for (&v, &(x, z)) in sorted.iter().zip(&ops) {
            if x.is_zero() && z.is_zero() {
                outcomes.push(None);
                continue;
            }
            let pos = state.site_pos(v)?;
            let op = PauliOperator::single(field, state.sites().len(), pos, x, z);
            let (e, _) = state.measure_pauli(&op, &mut rng)?;
            outcomes.push(Some(e));
        }

        // Sift: the subset's guess must line up with the dealer's draw.
        let kept = if is_tree {
            let sum: FieldElement = weights[1..]
                .iter()
                .fold(t_dealer, |acc, &tj| acc + tj);
            t_subset == sum
        } else {
            t_subset == t_dealer
        };

        transcript.record(
            round,
            RoleId::Dealer,
            site_basis_label(t_dealer, field.one()),
            s_dealer.value(),
            kept,
        );
        for (&v, outcome, &(x, z)) in sorted
            .iter()
            .zip(&outcomes)
            .zip(&ops)
            .map(|((v, o), op)| (v, o, op))
        {
            if let Some(e) = outcome {
                transcript.record(
                    round,
                    RoleId::Player(v.0),
                    site_basis_label(x, z),
                    e.value(),
                    kept,
                );
            }
        }

        if !kept {
            continue;
        }
        kept_count += 1;

        // Decode against the reduced graph at the announced dealer draw.
        let reduced = ext
            .measure_symbolic(DEALER, MeasurementBasis::XmZ(t_dealer), field.zero())?
            .reduced;
        let product = assemble_product(&reduced, &sorted, &weights)?;
        let esum = outcomes
            .iter()
            .flatten()
            .fold(field.zero(), |acc, &e| acc + e);
        let mut z_off = field.zero();
        let mut w_dot_coeff = field.zero();
        for (&v, &w) in sorted.iter().zip(&weights) {
            let pos = reduced.index_of(v)?;
            z_off += w * reduced.z_label_at(pos);
            w_dot_coeff += w * coeff[pos];
        }
        let decoded = -(esum + product.phase() + z_off) * w_dot_coeff.inv();
        if decoded == s_dealer {
            agreements += 1;
        }

        if rng.gen::<f64>() < SACRIFICE_FRACTION {
            sacrificed_count += 1;
            let identity = identity_parts(
                scheme, ext_graph, &reduced, &sorted, &weights, t_dealer, &product,
            )?;
            assert!(identity.matches, "weight table breaks the identity");
            let check = identity.c + identity.b * s_dealer + product.phase() + esum;
            if !check.is_zero() {
                violations += 1;
            }
        } else {
            key.push(decoded);
            dealer_key.push(s_dealer);
        }
    }

    let sift_rate = kept_count as f64 / rounds.max(1) as f64;
    let p = 1.0 / d as f64;
    let se = (p * (1.0 - p) / rounds.max(1) as f64).sqrt();
    transcript.audit(
        "sift_rate",
        (sift_rate - p).abs() <= 5.0 * se,
        format!("{sift_rate:.6}"),
    );
    let agreement_rate = if kept_count == 0 {
        1.0
    } else {
        agreements as f64 / kept_count as f64
    };
    transcript.audit(
        "key_agreement",
        agreements == kept_count,
        format!("{agreement_rate:.6}"),
    );
    let violation_rate = if sacrificed_count == 0 {
        0.0
    } else {
        violations as f64 / sacrificed_count as f64
    };
    transcript.audit(
        "verification_violations",
        violations == 0,
        format!("{violation_rate:.6}"),
    );

    Ok(CqRunResult {
        transcript,
        rounds,
        kept: kept_count,
        agreements,
        sacrificed: sacrificed_count,
        violations,
        key,
        dealer_key,
    })
}

/// Checks that a dealer entangled with a reference register reveals nothing
/// through the public shares: for states of the form
/// `Σ_i α_i |i⟩_E |graph_i⟩` built on the scheme's adversarial family, the
/// joint reduced state of reference and dealer must factor as
/// `ρ_E ⊗ I_d/d`. Returns the largest entrywise deviation over `trials`
/// random amplitude vectors.
pub fn cq_audit_security(
    scheme: &SchemeSpec,
    trials: usize,
    seed: u64,
) -> Result<f64, ProtocolError> {
    let field = scheme.field();
    let d = field.modulus() as usize;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;

    let random_amps = |rng: &mut ChaCha12Rng, len: usize| -> Vec<Complex64> {
        loop {
            let amps: Vec<Complex64> = (0..len)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-3 {
                return amps.iter().map(|a| a / norm).collect();
            }
        }
    };

    for _ in 0..trials {
        let deviation = match scheme.shape() {
            SchemeShape::TwoThree => {
                let base = scheme
                    .extended_graph()?
                    .as_graph()
                    .induced_subgraph(&[DEALER, VertexId(1), VertexId(2)])?;
                let amps = random_amps(&mut rng, d);
                let mut terms = Vec::new();
                for i in 0..d {
                    let mut g = base.clone();
                    let zi = field.elem(i as i64);
                    g.set_z(DEALER, zi)?;
                    g.set_z(VertexId(1), zi)?;
                    let tag = DenseState::basis(field, vec![EVE_REGISTER], &[zi])?;
                    terms.push(tag.tensor(&DenseState::from_graph(&g)?)?);
                }
                let refs: Vec<(Complex64, &DenseState)> =
                    amps.iter().copied().zip(terms.iter()).collect();
                let psi = DenseState::scaled_sum(&refs)?;
                product_form_deviation(&psi, &[EVE_REGISTER], d)?
            }
            SchemeShape::Ring35 => {
                let base = scheme
                    .extended_graph()?
                    .as_graph()
                    .induced_subgraph(&[DEALER, VertexId(1), VertexId(2), VertexId(3)])?;
                let amps = random_amps(&mut rng, d * d);
                let mut terms = Vec::new();
                for i in 0..d {
                    for j in 0..d {
                        let (zi, zj) = (field.elem(i as i64), field.elem(j as i64));
                        let mut g = base.clone();
                        g.set_z(DEALER, zi + zj)?;
                        g.set_z(VertexId(1), zi)?;
                        g.set_z(VertexId(3), zj)?;
                        let tag = DenseState::basis(
                            field,
                            vec![EVE_REGISTER, EVE_REGISTER_2],
                            &[zi, zj],
                        )?;
                        terms.push(tag.tensor(&DenseState::from_graph(&g)?)?);
                    }
                }
                let refs: Vec<(Complex64, &DenseState)> =
                    amps.iter().copied().zip(terms.iter()).collect();
                let psi = DenseState::scaled_sum(&refs)?;
                product_form_deviation(&psi, &[EVE_REGISTER, EVE_REGISTER_2], d)?
            }
            SchemeShape::Tree { .. } | SchemeShape::Ring34 => {
                return Err(ProtocolError::Unsupported {
                    scheme: scheme.name(),
                    operation: "the entangled-dealer security audit",
                })
            }
        };
        worst = worst.max(deviation);
    }
    Ok(worst)
}

fn product_form_deviation(
    psi: &DenseState,
    reference: &[VertexId],
    d: usize,
) -> Result<f64, ProtocolError> {
    let mut keep = reference.to_vec();
    keep.push(DEALER);
    let rho_ed = psi.reduced_density(&keep)?;
    let rho_e = psi.reduced_density(reference)?;
    let expected = rho_e.tensor(&DensityMatrix::maximally_mixed(d));
    Ok(rho_ed.max_abs_diff(&expected))
}
