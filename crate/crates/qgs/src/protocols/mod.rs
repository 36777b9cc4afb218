//! Executable secret-sharing protocols over labelled graph states.
//!
//! Three protocol kinds share one scheme table:
//!
//! * **cc** — classical secret, classical shares: the dealer encodes a dit
//!   into the z-labels of a graph state description; authorized subsets
//!   reconstruct it from a stabilizer witness, denied subsets receive a
//!   label-shuffling certificate that their shares are independent of it.
//! * **cq** — classical secret, quantum shares: a prepare-and-measure key
//!   agreement in rounds, with sifting, key extraction, and a sacrificed
//!   verification fraction that detects an intercept-resend eavesdropper.
//! * **qq** — quantum secret, quantum shares: the dealer teleports an
//!   arbitrary qudit state into the share system through a generalized Bell
//!   measurement; authorized subsets decode it with local operations.
//!
//! Supported schemes: the all-or-nothing star `tree(n)` for any n ≥ 2, the
//! threshold schemes `twothree` (2-of-3) and `ring35` (3-of-5), and the
//! share-only `ring34` (3-of-4, cc only — it has no dealer extension).

pub mod cc;
pub mod cq;
pub mod qq;
pub mod transcript;

use thiserror::Error;

use crate::field::{Field, FieldElement, FieldError};
use crate::fixtures::{self, DEALER};
use crate::graphstate::{EncodedGraph, GraphError, VertexId};
use crate::oracle::OracleError;
use crate::pauli::{PauliError, PauliOperator};
use transcript::RoleId;

/// Dealer's input register for quantum-secret teleportation.
pub const QQ_SOURCE: VertexId = VertexId(90);
/// Adversarial reference registers used by the security audits.
pub const EVE_REGISTER: VertexId = VertexId(100);
pub const EVE_REGISTER_2: VertexId = VertexId(101);

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("scheme {scheme} does not support {operation}")]
    Unsupported {
        scheme: &'static str,
        operation: &'static str,
    },
    #[error("subset {0:?} is not a valid player subset")]
    InvalidSubset(Vec<u32>),
    #[error("subset {0:?} is not one of the prescribed measuring subsets")]
    UnsupportedSubset(Vec<u32>),
    #[error("subset {0:?} is below the threshold and cannot decode")]
    NotAuthorized(Vec<u32>),
    #[error("subset {0:?} meets the threshold; denial audit does not apply")]
    SubsetIsAuthorized(Vec<u32>),
    #[error("secret amplitudes invalid: {0}")]
    InvalidSecret(String),
}

/// Which protocol a [`SchemeSpec`] drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    Cc,
    Cq,
    Qq,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeKind::Cc => "cc",
            SchemeKind::Cq => "cq",
            SchemeKind::Qq => "qq",
        })
    }
}

/// The share-graph family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeShape {
    /// Star on n players: all n are needed (an (n,n) scheme).
    Tree { players: u32 },
    /// 2-of-3 threshold star.
    TwoThree,
    /// 3-of-4 threshold ring (classical shares only).
    Ring34,
    /// 3-of-5 threshold ring.
    Ring35,
}

/// A protocol kind bound to a share-graph family over a fixed field.
#[derive(Clone, Copy, Debug)]
pub struct SchemeSpec {
    kind: SchemeKind,
    shape: SchemeShape,
    field: Field,
}

impl SchemeSpec {
    fn new(kind: SchemeKind, shape: SchemeShape, d: u64) -> Result<SchemeSpec, ProtocolError> {
        if let SchemeShape::Tree { players } = shape {
            if players < 2 {
                return Err(ProtocolError::Unsupported {
                    scheme: "tree",
                    operation: "fewer than two players",
                });
            }
        }
        if shape == SchemeShape::Ring34 && kind != SchemeKind::Cc {
            return Err(ProtocolError::Unsupported {
                scheme: "ring34",
                operation: "quantum-share protocols (no dealer extension)",
            });
        }
        Ok(SchemeSpec {
            kind,
            shape,
            field: Field::new(d)?,
        })
    }

    pub fn cc_tree(d: u64, players: u32) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Cc, SchemeShape::Tree { players }, d)
    }

    pub fn cc_twothree(d: u64) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Cc, SchemeShape::TwoThree, d)
    }

    pub fn cc_ring34(d: u64) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Cc, SchemeShape::Ring34, d)
    }

    pub fn cc_ring35(d: u64) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Cc, SchemeShape::Ring35, d)
    }

    pub fn cq_tree(d: u64, players: u32) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Cq, SchemeShape::Tree { players }, d)
    }

    pub fn cq_twothree(d: u64) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Cq, SchemeShape::TwoThree, d)
    }

    pub fn cq_ring35(d: u64) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Cq, SchemeShape::Ring35, d)
    }

    pub fn qq_tree(d: u64, players: u32) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Qq, SchemeShape::Tree { players }, d)
    }

    pub fn qq_twothree(d: u64) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Qq, SchemeShape::TwoThree, d)
    }

    pub fn qq_ring35(d: u64) -> Result<SchemeSpec, ProtocolError> {
        SchemeSpec::new(SchemeKind::Qq, SchemeShape::Ring35, d)
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn shape(&self) -> SchemeShape {
        self.shape
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn name(&self) -> &'static str {
        match self.shape {
            SchemeShape::Tree { .. } => "tree",
            SchemeShape::TwoThree => "twothree",
            SchemeShape::Ring34 => "ring34",
            SchemeShape::Ring35 => "ring35",
        }
    }

    /// (threshold k, player count n).
    pub fn threshold(&self) -> (usize, usize) {
        match self.shape {
            SchemeShape::Tree { players } => (players as usize, players as usize),
            SchemeShape::TwoThree => (2, 3),
            SchemeShape::Ring34 => (3, 4),
            SchemeShape::Ring35 => (3, 5),
        }
    }

    pub fn player_count(&self) -> usize {
        self.threshold().1
    }

    pub fn players(&self) -> Vec<VertexId> {
        (1..=self.player_count() as u32).map(VertexId).collect()
    }

    /// The share graph with the secret dit encoded into its z-labels.
    pub fn cc_encode(&self, s: FieldElement) -> EncodedGraph {
        match self.shape {
            SchemeShape::Tree { players } => fixtures::cc_tree(self.field, players, s),
            SchemeShape::TwoThree => fixtures::cc_twothree(self.field, s),
            SchemeShape::Ring34 => fixtures::cc_ring(self.field, 4, s),
            SchemeShape::Ring35 => fixtures::cc_ring(self.field, 5, s),
        }
    }

    /// Per-player coefficient of the secret in the z-encoding.
    pub fn secret_coeff(&self) -> Vec<FieldElement> {
        match self.shape {
            SchemeShape::Tree { players } => fixtures::cc_tree_coeff(self.field, players),
            SchemeShape::TwoThree => fixtures::cc_twothree_coeff(self.field),
            SchemeShape::Ring34 => fixtures::cc_ring_coeff(self.field, 4),
            SchemeShape::Ring35 => fixtures::cc_ring_coeff(self.field, 5),
        }
    }

    /// The dealer-extended graph used by the quantum-share protocols.
    /// The dealer vertex is listed first; measuring it in `X^t Z` with
    /// outcome s reproduces the classical encoding of s shifted by t.
    pub fn extended_graph(&self) -> Result<EncodedGraph, ProtocolError> {
        match self.shape {
            SchemeShape::Tree { players } => Ok(fixtures::ext_tree(self.field, players)),
            SchemeShape::TwoThree => Ok(fixtures::ext_twothree(self.field)),
            SchemeShape::Ring35 => Ok(fixtures::ext_ring35(self.field)),
            SchemeShape::Ring34 => Err(ProtocolError::Unsupported {
                scheme: "ring34",
                operation: "dealer extension",
            }),
        }
    }

    /// Validates that `subset` consists of distinct players of this scheme,
    /// returning their sorted vertex ids.
    pub fn validate_subset(&self, subset: &[VertexId]) -> Result<Vec<VertexId>, ProtocolError> {
        let n = self.player_count() as u32;
        let mut sorted: Vec<VertexId> = subset.to_vec();
        sorted.sort_by_key(|v| v.0);
        sorted.dedup();
        let bad = sorted.len() != subset.len()
            || sorted.is_empty()
            || sorted.iter().any(|v| v.0 < 1 || v.0 > n);
        if bad {
            return Err(ProtocolError::InvalidSubset(
                subset.iter().map(|v| v.0).collect(),
            ));
        }
        Ok(sorted)
    }

    /// Threshold test: a valid subset is authorized iff it has at least k
    /// members.
    pub fn authorized(&self, subset: &[VertexId]) -> Result<bool, ProtocolError> {
        let sorted = self.validate_subset(subset)?;
        Ok(sorted.len() >= self.threshold().0)
    }

    /// The canonical measuring subset used when the caller does not pick one.
    pub fn default_subset(&self) -> Vec<VertexId> {
        match self.shape {
            SchemeShape::Tree { .. } => self.players(),
            SchemeShape::TwoThree => vec![VertexId(1), VertexId(2)],
            SchemeShape::Ring34 | SchemeShape::Ring35 => {
                vec![VertexId(1), VertexId(2), VertexId(3)]
            }
        }
    }

    /// The participants of this scheme: the dealer plus one party per
    /// share vertex.
    pub fn parties(&self) -> Vec<Party> {
        let mut out = vec![Party {
            role: RoleId::Dealer,
            site: Some(DEALER),
        }];
        for p in self.players() {
            out.push(Party {
                role: RoleId::Player(p.0),
                site: Some(p),
            });
        }
        out
    }

    /// Channel topology for this protocol kind. Quantum-share protocols
    /// route each player's share qudit over a channel from the dealer; the
    /// cq channels are public (interceptable), the qq distribution and the
    /// cc share delivery are private. Every scheme also has a public
    /// classical broadcast from each party.
    pub fn channels(&self) -> Vec<Channel> {
        let mut out = Vec::new();
        for p in self.players() {
            let (medium, privacy) = match self.kind {
                SchemeKind::Cc => (ChannelMedium::Classical, ChannelPrivacy::Private),
                SchemeKind::Cq => (ChannelMedium::Quantum, ChannelPrivacy::Public),
                SchemeKind::Qq => (ChannelMedium::Quantum, ChannelPrivacy::Private),
            };
            out.push(Channel {
                from: RoleId::Dealer,
                to: RoleId::Player(p.0),
                medium,
                privacy,
            });
        }
        for party in self.parties() {
            out.push(Channel {
                from: party.role,
                to: RoleId::Dealer,
                medium: ChannelMedium::Classical,
                privacy: ChannelPrivacy::Public,
            });
        }
        out
    }
}

/// A protocol participant and the share vertex it holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Party {
    pub role: RoleId,
    pub site: Option<VertexId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelMedium {
    Classical,
    Quantum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelPrivacy {
    Public,
    Private,
}

/// A directed communication link between two parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Channel {
    pub from: RoleId,
    pub to: RoleId,
    pub medium: ChannelMedium,
    pub privacy: ChannelPrivacy,
}

/// Re-expresses `op` (given over the ordered site list `from`) on the
/// ordered site list `into`, acting as identity on the extra sites. Every
/// site of `from` with a nonidentity factor must appear in `into`.
pub(crate) fn embed_pauli(
    op: &PauliOperator,
    from: &[VertexId],
    into: &[VertexId],
) -> PauliOperator {
    assert_eq!(op.sites(), from.len(), "operator matches its site list");
    let field = op.field();
    let mut x = vec![field.zero(); into.len()];
    let mut z = vec![field.zero(); into.len()];
    for (i, v) in from.iter().enumerate() {
        if op.x_exp(i).is_zero() && op.z_exp(i).is_zero() {
            continue;
        }
        let j = into
            .iter()
            .position(|w| w == v)
            .expect("embedding target contains the operator's support");
        x[j] = op.x_exp(i);
        z[j] = op.z_exp(i);
    }
    PauliOperator::from_parts(field, op.phase(), x, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_table_thresholds_and_subsets() {
        let s = SchemeSpec::cc_ring35(5).unwrap();
        assert_eq!(s.threshold(), (3, 5));
        assert_eq!(s.name(), "ring35");
        assert!(s.authorized(&[VertexId(1), VertexId(3), VertexId(5)]).unwrap());
        assert!(!s.authorized(&[VertexId(1), VertexId(3)]).unwrap());
        assert!(s.authorized(&[VertexId(1), VertexId(1)]).is_err());
        assert!(s.authorized(&[VertexId(6)]).is_err());

        let t = SchemeSpec::qq_tree(3, 4).unwrap();
        assert_eq!(t.threshold(), (4, 4));
        assert_eq!(t.default_subset(), t.players());
    }

    #[test]
    fn ring34_is_share_only() {
        assert!(SchemeSpec::cc_ring34(5).is_ok());
        assert!(SchemeSpec::new(SchemeKind::Cq, SchemeShape::Ring34, 5).is_err());
        assert!(SchemeSpec::new(SchemeKind::Qq, SchemeShape::Ring34, 5).is_err());
        assert!(SchemeSpec::cc_ring34(5).unwrap().extended_graph().is_err());
    }

    #[test]
    fn channel_topology_matches_kind() {
        let cq = SchemeSpec::cq_twothree(3).unwrap();
        let channels = cq.channels();
        let quantum: Vec<&Channel> = channels
            .iter()
            .filter(|c| c.medium == ChannelMedium::Quantum)
            .collect();
        assert_eq!(quantum.len(), 3);
        assert!(quantum.iter().all(|c| c.privacy == ChannelPrivacy::Public));

        let qq = SchemeSpec::qq_twothree(3).unwrap();
        assert!(qq
            .channels()
            .iter()
            .filter(|c| c.medium == ChannelMedium::Quantum)
            .all(|c| c.privacy == ChannelPrivacy::Private));
    }

    #[test]
    fn embedding_preserves_exponents_and_phase() {
        let field = Field::new(5).unwrap();
        let op = PauliOperator::from_parts(
            field,
            field.elem(2),
            vec![field.one(), field.zero()],
            vec![field.elem(3), field.zero()],
        );
        let from = [VertexId(2), VertexId(4)];
        let into = [VertexId(0), VertexId(2), VertexId(4)];
        let emb = embed_pauli(&op, &from, &into);
        assert_eq!(emb.sites(), 3);
        assert_eq!(emb.phase(), field.elem(2));
        assert_eq!(emb.x_exp(1), field.one());
        assert_eq!(emb.z_exp(1), field.elem(3));
        assert!(emb.x_exp(0).is_zero() && emb.z_exp(0).is_zero());
    }
}
