//! Two-party causal games: brute-force causal bounds, game values of
//! behaviors, and the standard non-causal process that violates one.
//!
//! Game success is linear in the behavior, and every causal behavior is a
//! mixture of deterministic one-way strategies, so the causal bound is a
//! maximum over those vertices. For a fixed order the second party can
//! best-respond pointwise, which leaves only the first party's functions to
//! enumerate.

use serde::{Deserialize, Serialize};

use crate::causal::behavior::{behavior_of, Behavior};
use crate::error::{Error, Result};
use crate::linalg::{basis_vector, hadamard, pauli_x, pauli_z, CMatrix};
use crate::process::{Instrument, Lab, ProcessMatrix};
use crate::tensor::{DenseOperator, SpaceLabel};

/// Largest per-lab setting or outcome count accepted by [`causal_bound`].
pub const MAX_GAME_SIZE: usize = 4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalGame {
    pub name: String,
    #[serde(default)]
    pub source: String,
    pub labs: Vec<String>,
    pub settings: Vec<usize>,
    pub outcomes: Vec<usize>,
    /// `[s_A][s_B]`
    pub input_distribution: Vec<Vec<f64>>,
    /// `[s_A][s_B][o_A][o_B]`, each 0 or 1
    pub payoff: Vec<Vec<Vec<Vec<u8>>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameResult {
    pub value: f64,
    pub bound: f64,
    pub violates: bool,
}

impl CausalGame {
    pub fn from_json(text: &str) -> Result<Self> {
        let g: CausalGame = serde_json::from_str(text).map_err(|e| Error::parse(format!("line {}", e.line()), e.to_string()))?;
        g.check()?;
        Ok(g)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::parse(format!("game `{}`", self.name), m.to_string()));
        if self.labs.len() != 2 || self.settings.len() != 2 || self.outcomes.len() != 2 {
            return bad("games have exactly two labs");
        }
        let (sa, sb) = (self.settings[0], self.settings[1]);
        let (oa, ob) = (self.outcomes[0], self.outcomes[1]);
        if sa == 0 || sb == 0 || oa == 0 || ob == 0 {
            return bad("sizes must be positive");
        }
        if self.input_distribution.len() != sa || self.input_distribution.iter().any(|r| r.len() != sb) {
            return bad("input distribution shape");
        }
        let total: f64 = self.input_distribution.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-9 || self.input_distribution.iter().flatten().any(|&p| p < 0.0) {
            return bad("input distribution must be a probability distribution");
        }
        let shape_ok = self.payoff.len() == sa
            && self.payoff.iter().all(|r| {
                r.len() == sb && r.iter().all(|q| q.len() == oa && q.iter().all(|t| t.len() == ob && t.iter().all(|&v| v <= 1)))
            });
        if !shape_ok {
            return bad("payoff must be a 0/1 table indexed [s_A][s_B][o_A][o_B]");
        }
        Ok(())
    }

    pub fn win(&self, sa: usize, sb: usize, oa: usize, ob: usize) -> f64 {
        f64::from(self.payoff[sa][sb][oa][ob])
    }

    fn swapped(&self) -> CausalGame {
        let (sa, sb) = (self.settings[0], self.settings[1]);
        let (oa, ob) = (self.outcomes[0], self.outcomes[1]);
        CausalGame {
            name: self.name.clone(),
            source: self.source.clone(),
            labs: vec![self.labs[1].clone(), self.labs[0].clone()],
            settings: vec![sb, sa],
            outcomes: vec![ob, oa],
            input_distribution: (0..sb).map(|y| (0..sa).map(|x| self.input_distribution[x][y]).collect()).collect(),
            payoff: (0..sb)
                .map(|y| {
                    (0..sa)
                        .map(|x| (0..ob).map(|b| (0..oa).map(|a| self.payoff[x][y][a][b]).collect()).collect())
                        .collect()
                })
                .collect(),
        }
    }
}

pub fn ocb_game() -> CausalGame {
    CausalGame::from_json(include_str!("../games/ocb.json")).expect("bundled game")
}

pub fn gyni_game() -> CausalGame {
    CausalGame::from_json(include_str!("../games/gyni.json")).expect("bundled game")
}

pub fn constant_game() -> CausalGame {
    CausalGame::from_json(include_str!("../games/constant.json")).expect("bundled game")
}

/// Best value with the first lab acting first.
fn one_way_bound(g: &CausalGame) -> f64 {
    let (sa, sb) = (g.settings[0], g.settings[1]);
    let (oa, ob) = (g.outcomes[0], g.outcomes[1]);
    let nf = oa.pow(sa as u32);
    let mut best: f64 = 0.0;
    for fi in 0..nf {
        let mut v = 0.0;
        let mut code = fi;
        for x in 0..sa {
            let a = code % oa;
            code /= oa;
            for y in 0..sb {
                let br = (0..ob).map(|b| g.win(x, y, a, b)).fold(0.0, f64::max);
                v += g.input_distribution[x][y] * br;
            }
        }
        best = best.max(v);
    }
    best
}

/// Maximum success probability of causal strategies.
pub fn causal_bound(g: &CausalGame) -> Result<f64> {
    if g.settings.iter().chain(&g.outcomes).any(|&k| k > MAX_GAME_SIZE) {
        return Err(Error::TooLarge(format!("game sizes are limited to {MAX_GAME_SIZE}")));
    }
    Ok(one_way_bound(g).max(one_way_bound(&g.swapped())))
}

/// Expected payoff of a behavior whose shape matches the game.
pub fn game_value(b: &Behavior, g: &CausalGame) -> Result<f64> {
    if b.settings() != g.settings.as_slice() || b.outcomes() != g.outcomes.as_slice() {
        return Err(Error::DimensionMismatch(format!(
            "behavior has settings {:?} / outcomes {:?}, game needs {:?} / {:?}",
            b.settings(),
            b.outcomes(),
            g.settings,
            g.outcomes
        )));
    }
    let mut v = 0.0;
    for x in 0..g.settings[0] {
        for y in 0..g.settings[1] {
            for a in 0..g.outcomes[0] {
                for bb in 0..g.outcomes[1] {
                    v += g.input_distribution[x][y] * g.win(x, y, a, bb) * b.prob(&[x, y], &[a, bb]);
                }
            }
        }
    }
    Ok(v)
}

pub fn play(b: &Behavior, g: &CausalGame, tol: f64) -> Result<GameResult> {
    let value = game_value(b, g)?;
    let bound = causal_bound(g)?;
    Ok(GameResult {
        value,
        bound,
        violates: value > bound + tol,
    })
}

/// Best value reachable from a resource behavior by choosing, per game
/// setting, one resource setting and a deterministic relabeling of its
/// outcomes. The second lab best-responds to each choice of the first.
pub fn best_game_value(resource: &Behavior, g: &CausalGame) -> Result<f64> {
    if resource.labs().len() != 2 {
        return Err(Error::LabCount { expected: 2, got: resource.labs().len() });
    }
    let (ra, rb) = (resource.settings()[0], resource.settings()[1]);
    let (ka, kb) = (resource.outcomes()[0], resource.outcomes()[1]);
    let (sa, sb) = (g.settings[0], g.settings[1]);
    let (oa, ob) = (g.outcomes[0], g.outcomes[1]);
    let relabels_a = oa.pow(ka as u32);
    let relabels_b = ob.pow(kb as u32);
    let choices_a = ra * relabels_a;
    let total = (choices_a as u128).pow(sa as u32);
    if total > 5_000_000 {
        return Err(Error::TooLarge("too many strategies for the first lab".into()));
    }
    let relabel = |code: usize, k: usize, base: usize| -> usize { (code / base.pow(k as u32)) % base };

    let mut best: f64 = 0.0;
    let mut choice = vec![0usize; sa];
    loop {
        let mut v = 0.0;
        for y in 0..sb {
            let mut best_y: f64 = 0.0;
            for rs in 0..rb {
                for rl in 0..relabels_b {
                    let mut acc = 0.0;
                    for (x, &c) in choice.iter().enumerate() {
                        let (s_a, rl_a) = (c / relabels_a, c % relabels_a);
                        let pxy = g.input_distribution[x][y];
                        if pxy == 0.0 {
                            continue;
                        }
                        for ia in 0..ka {
                            let a = relabel(rl_a, ia, oa);
                            for ib in 0..kb {
                                let bb = relabel(rl, ib, ob);
                                acc += pxy * g.win(x, y, a, bb) * resource.prob(&[s_a, rs], &[ia, ib]);
                            }
                        }
                    }
                    best_y = best_y.max(acc);
                }
            }
            v += best_y;
        }
        best = best.max(v);
        // next choice
        let mut k = 0;
        loop {
            if k == sa {
                return Ok(best);
            }
            choice[k] += 1;
            if choice[k] < choices_a {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

/// The two-qubit-lab non-causal process
/// `W = [1 + (Z^{A_out} Z^{B_in} + Z^{A_in} X^{B_in} Z^{B_out}) / sqrt2] / 4`
/// on `A_in, A_out, B_in, B_out`.
pub fn ocb_process() -> ProcessMatrix {
    let (a, b) = ocb_labs();
    let i2 = CMatrix::identity(2);
    let z = pauli_z();
    let x = pauli_x();
    let kron4 = |m: [&CMatrix; 4]| m[0].kron(m[1]).kron(m[2]).kron(m[3]);
    let t1 = kron4([&i2, &z, &z, &i2]);
    let t2 = kron4([&z, &i2, &x, &z]);
    let w = CMatrix::identity(16)
        .add(&t1.add(&t2).scale_real(std::f64::consts::FRAC_1_SQRT_2))
        .scale_real(0.25);
    let factors: Vec<SpaceLabel> = a.spaces().into_iter().chain(b.spaces()).collect();
    ProcessMatrix::new(vec![a, b], DenseOperator::new(factors, w).expect("shape")).expect("labs")
}

pub fn ocb_labs() -> (Lab, Lab) {
    (Lab::qubit("A"), Lab::qubit("B"))
}

/// Optimal instruments for the OCB game on [`ocb_process`].
///
/// A measures Z (its outcome is its guess of b) and re-prepares its bit `a`
/// in the Z basis. B with `b' = 0` measures Z and outputs the result; with
/// `b' = 1` it measures X with result `beta` and prepares `|b + beta>`.
pub fn ocb_instruments() -> [Vec<Instrument>; 2] {
    let (a, b) = ocb_labs();
    let ket = |k: usize| CMatrix::outer(&basis_vector(2, k));
    let z_basis = CMatrix::identity(2);
    let alice = (0..2)
        .map(|bit| Instrument::measure_prepare(&a, &z_basis, &[ket(bit), ket(bit)]).expect("shape"))
        .collect();
    let bob = (0..4)
        .map(|s| {
            let (bit, selector) = (s % 2, s / 2);
            if selector == 0 {
                Instrument::measure_prepare(&b, &z_basis, &[ket(0), ket(0)])
            } else {
                Instrument::measure_prepare(&b, &hadamard(), &[ket(bit), ket(bit ^ 1)])
            }
            .expect("shape")
        })
        .collect();
    [alice, bob]
}

pub fn ocb_behavior() -> Behavior {
    let [alice, bob] = ocb_instruments();
    behavior_of(&ocb_process(), &[alice, bob]).expect("instruments fit")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::causal::behavior::signalling_graph;
    use crate::process::validate_process;

    // oracle: enumerate every deterministic one-way strategy explicitly
    fn brute_force_bound(g: &CausalGame) -> f64 {
        let (sa, sb) = (g.settings[0], g.settings[1]);
        let (oa, ob) = (g.outcomes[0], g.outcomes[1]);
        let mut best: f64 = 0.0;
        for a_first in [true, false] {
            let (first_s, first_o, second_o) = if a_first { (sa, oa, ob) } else { (sb, ob, oa) };
            for f in 0..first_o.pow(first_s as u32) {
                for h in 0..second_o.pow((sa * sb) as u32) {
                    let mut v = 0.0;
                    for x in 0..sa {
                        for y in 0..sb {
                            let own = if a_first { x } else { y };
                            let fo = f / first_o.pow(own as u32) % first_o;
                            let ho = h / second_o.pow((x * sb + y) as u32) % second_o;
                            let (a, b) = if a_first { (fo, ho) } else { (ho, fo) };
                            v += g.input_distribution[x][y] * g.win(x, y, a, b);
                        }
                    }
                    best = best.max(v);
                }
            }
        }
        best
    }

    #[test]
    fn bundled_tables_follow_their_rules() {
        let g = ocb_game();
        for a in 0..2 {
            for s in 0..4 {
                for x in 0..2 {
                    for y in 0..2 {
                        let (b, sel) = (s % 2, s / 2);
                        let expected = if sel == 0 { y == a } else { x == b };
                        assert_eq!(g.win(a, s, x, y) == 1.0, expected);
                    }
                }
            }
        }
        let g = gyni_game();
        assert_eq!(g.win(0, 1, 1, 0), 1.0);
        assert_eq!(g.win(0, 1, 0, 0), 0.0);
    }

    #[test]
    fn bounds_match_exhaustive_enumeration() {
        for g in [ocb_game(), gyni_game(), constant_game()] {
            let b = causal_bound(&g).unwrap();
            assert!((b - brute_force_bound(&g)).abs() < 1e-12, "{}", g.name);
        }
        assert!((causal_bound(&ocb_game()).unwrap() - 0.75).abs() < 1e-12);
        assert!((causal_bound(&gyni_game()).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(causal_bound(&constant_game()).unwrap(), 1.0);
    }

    #[test]
    fn random_guessing_gets_half() {
        let g = ocb_game();
        let b = Behavior::from_fn(&["A", "B"], vec![2, 4], vec![2, 2], |_, _| 0.25).unwrap();
        assert!((game_value(&b, &g).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn optimal_causal_strategy_reaches_bound() {
        // A sends a to B; B outputs a and A guesses b = 0
        let g = ocb_game();
        let b = Behavior::from_fn(&["A", "B"], vec![2, 4], vec![2, 2], |s, o| {
            if o[0] == 0 && o[1] == s[0] {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        assert!((game_value(&b, &g).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ocb_process_violates() {
        let p = ocb_process();
        assert!((p.w().trace().re - 4.0).abs() < 1e-12);
        let r = validate_process(&p, 16, 1e-9);
        assert!(r.valid(), "{r:?}");
        let v = game_value(&ocb_behavior(), &ocb_game()).unwrap();
        let expected = (2.0 + 2f64.sqrt()) / 4.0;
        assert!((v - expected).abs() < 1e-9, "{v}");
        let res = play(&ocb_behavior(), &ocb_game(), 1e-9).unwrap();
        assert!(res.violates && res.value - res.bound > 0.1);
        // two-way signalling in the statistics
        let g = signalling_graph(&ocb_behavior(), 1e-7);
        assert!(g.has_edge("A", "B") && g.has_edge("B", "A"));
    }

    #[test]
    fn shape_mismatch() {
        let b = Behavior::from_fn(&["A", "B"], vec![2, 2], vec![2, 2], |_, _| 0.25).unwrap();
        assert!(matches!(game_value(&b, &ocb_game()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn malformed_game_file() {
        assert!(matches!(CausalGame::from_json("{"), Err(Error::Parse { .. })));
        let mut g = ocb_game();
        g.payoff[0][0][0][0] = 2;
        let text = serde_json::to_string(&g).unwrap();
        assert!(CausalGame::from_json(&text).is_err());
    }

    #[test]
    fn best_value_over_resource_finds_optimum() {
        let v = best_game_value(&ocb_behavior(), &ocb_game()).unwrap();
        assert!((v - (2.0 + 2f64.sqrt()) / 4.0).abs() < 1e-9);
    }
}
