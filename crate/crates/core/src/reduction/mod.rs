//! Reductions `(G_ext, T, G_int)` with a claimed `β`, and the empirical checks
//! run against them.

pub mod beta;
pub mod checks;
pub mod hybrid;

use std::fmt;
use std::sync::Arc;

use crate::game::{
    AdversaryHandle, AdversaryProgram, AdversarySession, AdversaryStep, BlackBox,
    ChallengerProgram, ChallengerSession, ChallengerStep, Embedding, GameDef, PlayError,
    RunContext, Verdict,
};
use crate::tape::{Tape, TapeError};
use crate::Error;

pub use beta::{rat, BetaForm, BetaSpec, Poly, Rational};
pub use checks::{
    check_behavioral_dominance, check_effectiveness, check_straight_line, lift_check,
    DominanceReport, EffectivenessReport, LiftConfig, LiftVerdict, StraightLineReport,
};
pub use hybrid::{build_distinguishing_game, hybrid_chain_check, HybridChain, TableSampler};

pub type Mapping = Arc<dyn Fn(&AdversaryHandle) -> AdversaryHandle + Send + Sync>;

#[derive(Clone)]
pub struct Transformer {
    pub name: String,
    pub black_box: bool,
    pub straight_line_claimed: bool,
    mapping: Mapping,
}

impl fmt::Debug for Transformer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transformer")
            .field("name", &self.name)
            .field("black_box", &self.black_box)
            .field("straight_line_claimed", &self.straight_line_claimed)
            .finish()
    }
}

impl Transformer {
    pub fn new(
        name: impl Into<String>,
        black_box: bool,
        straight_line_claimed: bool,
        mapping: Mapping,
    ) -> Transformer {
        Transformer {
            name: name.into(),
            black_box,
            straight_line_claimed,
            mapping,
        }
    }

    pub fn map(&self, a: &AdversaryHandle) -> AdversaryHandle {
        (self.mapping)(a)
    }

    /// Forwards every message unchanged, giving the wrapped adversary the
    /// transformer's own tape. The resulting adversary speaks `interface`.
    pub fn relay(name: impl Into<String>, interface: impl Into<String>) -> Transformer {
        let interface: String = interface.into();
        Transformer::new(
            name,
            true,
            true,
            Arc::new(move |a: &AdversaryHandle| {
                AdversaryHandle::new(
                    a.name.clone(),
                    interface.clone(),
                    a.randomness_bits,
                    Arc::new(Relay { inner: a.clone() }),
                )
            }),
        )
    }
}

struct Relay {
    inner: AdversaryHandle,
}

struct RelaySession {
    bb: BlackBox,
}

impl AdversaryProgram for Relay {
    fn spawn(&self, tape: Tape, ctx: &RunContext) -> Box<dyn AdversarySession> {
        ctx.set_embedding(Embedding::Identity);
        Box::new(RelaySession {
            bb: self.inner.spawn_black_box(tape, ctx),
        })
    }
}

impl AdversarySession for RelaySession {
    fn respond(&mut self, incoming: &[u8]) -> Result<AdversaryStep, TapeError> {
        self.bb.send(incoming)
    }
}

#[derive(Clone)]
pub struct Reduction {
    pub name: String,
    pub external: GameDef,
    pub transformer: Transformer,
    pub internal: GameDef,
    pub claimed_beta: BetaSpec,
    /// `(outer, inner)` for composed reductions.
    pub components: Option<(Box<Reduction>, Box<Reduction>)>,
}

impl fmt::Debug for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Reduction")
            .field("name", &self.name)
            .field("external", &self.external.name)
            .field("internal", &self.internal.name)
            .field("transformer", &self.transformer)
            .field("claimed_beta", &self.claimed_beta.to_string())
            .finish()
    }
}

impl Reduction {
    pub fn new(
        name: impl Into<String>,
        external: GameDef,
        transformer: Transformer,
        internal: GameDef,
        claimed_beta: BetaSpec,
    ) -> Reduction {
        Reduction {
            name: name.into(),
            external,
            transformer,
            internal,
            claimed_beta,
            components: None,
        }
    }

    /// External and internal game are the same; the transformer relays.
    pub fn identity(game: &GameDef) -> Reduction {
        Reduction::new(
            format!("id[{}]", game.name),
            game.clone(),
            Transformer::relay("identity", game.interface.clone()),
            game.clone(),
            BetaSpec::identity(),
        )
    }
}

pub fn apply_transformer(r: &Reduction, a: &AdversaryHandle) -> Result<AdversaryHandle, Error> {
    if a.interface != r.internal.interface {
        return Err(Error::Schema(format!(
            "adversary `{}` speaks `{}` but {} expects `{}`",
            a.name, a.interface, r.name, r.internal.interface
        )));
    }
    let out = r.transformer.map(a);
    if out.interface != r.external.interface {
        return Err(Error::Schema(format!(
            "transformer {} produced interface `{}`, external game expects `{}`",
            r.transformer.name, out.interface, r.external.interface
        )));
    }
    Ok(out)
}

/// `outer ∘ inner`: requires `outer.internal` to be `inner.external`.
pub fn compose(outer: &Reduction, inner: &Reduction) -> Result<Reduction, Error> {
    if outer.internal.name != inner.external.name {
        return Err(Error::GameMismatch(format!(
            "outer internal game `{}` is not inner external game `{}`",
            outer.internal.name, inner.external.name
        )));
    }
    let (to, ti) = (outer.transformer.clone(), inner.transformer.clone());
    let transformer = Transformer::new(
        format!("{}∘{}", to.name, ti.name),
        to.black_box && ti.black_box,
        to.straight_line_claimed && ti.straight_line_claimed,
        Arc::new(move |a: &AdversaryHandle| to.map(&ti.map(a))),
    );
    Ok(Reduction {
        name: format!("{}∘{}", outer.name, inner.name),
        external: outer.external.clone(),
        transformer,
        internal: inner.internal.clone(),
        claimed_beta: BetaSpec::compose(&outer.claimed_beta, &inner.claimed_beta),
        components: Some((Box::new(outer.clone()), Box::new(inner.clone()))),
    })
}

/// A game with no content: the challenger sends one empty message and
/// declares failure. Stands in for games only referenced by name.
pub fn placeholder_game(name: &str) -> GameDef {
    struct Empty;
    struct EmptySession(bool);
    impl ChallengerSession for EmptySession {
        fn step(&mut self, _incoming: Option<&[u8]>) -> Result<ChallengerStep, PlayError> {
            if self.0 {
                return Ok(ChallengerStep::finish(Verdict::Fail));
            }
            self.0 = true;
            Ok(ChallengerStep::Send(Vec::new()))
        }
    }
    impl ChallengerProgram for Empty {
        fn start(&self, _tape: Tape) -> Box<dyn ChallengerSession> {
            Box::new(EmptySession(false))
        }
    }
    GameDef::new(name, Arc::new(Empty), 3).with_randomness(0)
}

/// An opaque reduction between two placeholder games carrying only its `β`.
pub fn opaque_reduction(
    name: &str,
    external: &GameDef,
    internal: &GameDef,
    beta: BetaSpec,
) -> Reduction {
    Reduction::new(
        name,
        external.clone(),
        Transformer::relay(format!("{name}/T"), external.interface.clone()),
        internal.clone(),
        beta,
    )
}

/// The three-step UOWHF-from-OWF chain at input length `l_prime`, as opaque
/// reductions `R1 = (inv, T1, inv')`, `R2 = (inv', T2, col'')`,
/// `R3 = (col'', T3, col')` with `β_i(x) = x/p_i`, `p_1 = ℓ'`, `p_2 = 3`,
/// `p_3 = 5ℓ' + ⌈log₂ ℓ'⌉ + 2`.
pub fn rompel_chain(l_prime: u64) -> Result<[Reduction; 3], Error> {
    let inv = placeholder_game("rompel/inv");
    let inv2 = placeholder_game("rompel/inv'");
    let col2 = placeholder_game("rompel/col''");
    let col1 = placeholder_game("rompel/col'");
    let one = rat(1, 1);
    let p1 = Poly::new(vec![rat(0, 1), rat(1, 1)]);
    let p2 = Poly::constant(3);
    let p3 = Poly::new(vec![rat(2, 1), rat(5, 1)]).with_log(rat(1, 1));
    Ok([
        opaque_reduction(
            "R1",
            &inv,
            &inv2,
            BetaSpec::linear_over_poly(one.clone(), p1, l_prime)?,
        ),
        opaque_reduction(
            "R2",
            &inv2,
            &col2,
            BetaSpec::linear_over_poly(one.clone(), p2, l_prime)?,
        ),
        opaque_reduction(
            "R3",
            &col2,
            &col1,
            BetaSpec::linear_over_poly(one, p3, l_prime)?,
        ),
    ])
}

/// `R1 ∘ (R2 ∘ R3)`.
pub fn rompel_demo(l_prime: u64) -> Result<Reduction, Error> {
    let [r1, r2, r3] = rompel_chain(l_prime)?;
    compose(&r1, &compose(&r2, &r3)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rompel_composes_to_4128() {
        let r = rompel_demo(16).unwrap();
        assert_eq!(r.claimed_beta.slope(), rat(1, 4128));
        assert_eq!(r.claimed_beta.to_string(), "x/4128");
        assert_eq!(r.external.name, "rompel/inv");
        assert_eq!(r.internal.name, "rompel/col'");
    }

    #[test]
    fn compose_rejects_mismatch() {
        let [r1, _, r3] = rompel_chain(16).unwrap();
        assert!(matches!(compose(&r1, &r3), Err(Error::GameMismatch(_))));
    }

    #[test]
    fn compose_with_identity_keeps_beta() {
        let [r1, ..] = rompel_chain(16).unwrap();
        let id = Reduction::identity(&r1.internal);
        let c = compose(&r1, &id).unwrap();
        for i in 0..=10 {
            let x = rat(i, 10);
            assert_eq!(
                c.claimed_beta.evaluate_exact(&x),
                r1.claimed_beta.evaluate_exact(&x)
            );
        }
    }
}
