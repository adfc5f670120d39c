//! Quantum causal models: DAGs over quantum nodes, process operators built
//! from commuting per-node channels, the Markov check, and influence graphs
//! of unitaries.
//!
//! A node's channel `rho_{A|Pa(A)}` is a Choi operator (see [`crate::tensor`])
//! from the parents' outputs to the node's input, so a node without parents
//! carries a state. The process operator uses the same convention as process
//! matrices: a chain `A -> B` gives `rho_A (x) J_{B|A} (x) 1_{B_out}`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DiGraph;
use crate::linalg::{basis_vector, CMatrix};
use crate::process::{random_channel, Lab};
use crate::tensor::{is_cptp, partial_trace, DenseOperator, SpaceLabel};

pub type QuantumNode = Lab;

pub const COMMUTATION_TOL: f64 = 1e-8;
pub const FACTORIZATION_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dag {
    pub nodes: Vec<QuantumNode>,
    pub graph: DiGraph,
}

impl Dag {
    pub fn new(nodes: Vec<QuantumNode>, edges: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("node names must be unique".into()));
        }
        let mut graph = DiGraph::new(names);
        for (a, b) in edges {
            let i = graph.index_of(a).ok_or_else(|| Error::InvalidGraph(format!("unknown node `{a}`")))?;
            let j = graph.index_of(b).ok_or_else(|| Error::InvalidGraph(format!("unknown node `{b}`")))?;
            graph.add_edge(i, j);
        }
        if !graph.is_acyclic() {
            return Err(Error::InvalidGraph("graph has a directed cycle".into()));
        }
        Ok(Dag { nodes, graph })
    }

    pub fn parents(&self, i: usize) -> Vec<usize> {
        self.graph.parents(i)
    }

    /// All in/out spaces, node by node.
    pub fn spaces(&self) -> Vec<SpaceLabel> {
        self.nodes.iter().flat_map(Lab::spaces).collect()
    }

    /// Factors of node `i`'s channel: parent outputs, then the node input.
    pub fn channel_spaces(&self, i: usize) -> Vec<SpaceLabel> {
        let mut f: Vec<SpaceLabel> = self.parents(i).iter().map(|&p| self.nodes[p].out_space.clone()).collect();
        f.push(self.nodes[i].in_space.clone());
        f
    }

    pub fn reversed(&self) -> Self {
        Dag {
            nodes: self.nodes.clone(),
            graph: self.graph.reversed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumCausalModel {
    pub dag: Dag,
    /// One channel per node, in node order.
    pub channels: Vec<DenseOperator>,
}

impl QuantumCausalModel {
    pub fn new(dag: Dag, channels: Vec<DenseOperator>) -> Result<Self> {
        let m = QuantumCausalModel { dag, channels };
        m.check(FACTORIZATION_TOL)?;
        let dev = m.max_commutator()?;
        if dev > COMMUTATION_TOL {
            return Err(Error::NonCommuting(dev));
        }
        Ok(m)
    }

    fn check(&self, tol: f64) -> Result<()> {
        if self.channels.len() != self.dag.nodes.len() {
            return Err(Error::LabCount {
                expected: self.dag.nodes.len(),
                got: self.channels.len(),
            });
        }
        for (i, ch) in self.channels.iter().enumerate() {
            let want = self.dag.channel_spaces(i);
            let mut have = ch.factors().to_vec();
            let mut expected = want.clone();
            have.sort();
            expected.sort();
            if have != expected {
                return Err(Error::DimensionMismatch(format!(
                    "channel of `{}` lives on {:?}, expected {:?}",
                    self.dag.nodes[i].name,
                    ch.labels(),
                    want.iter().map(|f| f.name.as_str()).collect::<Vec<_>>()
                )));
            }
            let inputs: Vec<&str> = want[..want.len() - 1].iter().map(|f| f.name.as_str()).collect();
            if !is_cptp(ch, &inputs, tol) {
                return Err(Error::NotCptp(format!("channel of `{}`", self.dag.nodes[i].name)));
            }
        }
        Ok(())
    }

    fn embedded(&self) -> Result<Vec<DenseOperator>> {
        let full = self.dag.spaces();
        self.channels.iter().map(|c| c.embed(&full)).collect()
    }

    /// Largest entry of any pairwise commutator of embedded channels.
    pub fn max_commutator(&self) -> Result<f64> {
        let ops = self.embedded()?;
        let mut worst: f64 = 0.0;
        for i in 0..ops.len() {
            for j in i + 1..ops.len() {
                let ab = ops[i].matmul(&ops[j])?;
                let ba = ops[j].matmul(&ops[i])?;
                worst = worst.max(ab.max_abs_diff(&ba));
            }
        }
        Ok(worst)
    }

    /// Random model on `dag`. Channels into nodes that share a parent measure
    /// that parent's output in the computational basis (so they commute);
    /// others are Haar-random channels; source nodes get random states.
    pub fn random(seed: u64, dag: Dag) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dag.nodes.len();
        let mut channels = Vec::with_capacity(n);
        for i in 0..n {
            let parents = dag.parents(i);
            let node_in = dag.nodes[i].in_space.clone();
            let shared = parents
                .iter()
                .any(|&p| (0..n).any(|k| k != i && dag.parents(k).contains(&p)));
            let ch = if parents.is_empty() {
                DenseOperator::new(vec![node_in.clone()], CMatrix::random_density(node_in.dim, &mut rng))?
            } else if shared {
                measure_prepare_channel(&dag, i, &mut rng)?
            } else {
                let inputs: Vec<SpaceLabel> = parents.iter().map(|&p| dag.nodes[p].out_space.clone()).collect();
                random_channel(inputs, vec![node_in], 2, &mut rng)
            };
            channels.push(ch);
        }
        QuantumCausalModel::new(dag, channels)
    }
}

fn measure_prepare_channel<R: Rng + ?Sized>(dag: &Dag, i: usize, rng: &mut R) -> Result<DenseOperator> {
    let spaces = dag.channel_spaces(i);
    let (inputs, output) = spaces.split_at(spaces.len() - 1);
    let din: usize = inputs.iter().map(|f| f.dim).product();
    let dout = output[0].dim;
    let mut m = CMatrix::zeros(din * dout, din * dout);
    for x in 0..din {
        let proj = CMatrix::outer(&basis_vector(din, x));
        m = m.add(&proj.kron(&CMatrix::random_density(dout, rng)));
    }
    DenseOperator::new(spaces.to_vec(), m)
}

/// Product of the embedded channels in node order.
pub fn build_process_operator(m: &QuantumCausalModel) -> Result<DenseOperator> {
    m.check(FACTORIZATION_TOL)?;
    let dev = m.max_commutator()?;
    if dev > COMMUTATION_TOL {
        return Err(Error::NonCommuting(dev));
    }
    product(&m.embedded()?, &m.dag.spaces())
}

fn product(ops: &[DenseOperator], full: &[SpaceLabel]) -> Result<DenseOperator> {
    let mut acc = DenseOperator::identity(full.to_vec())?;
    for op in ops {
        acc = acc.matmul(op)?;
    }
    Ok(acc)
}

/// `sigma` equals the model's process operator within `tol` (max entry),
/// with channels that commute and fit the DAG. Any mismatch gives `false`.
pub fn verify_markov(sigma: &DenseOperator, m: &QuantumCausalModel, tol: f64) -> bool {
    if m.check(tol.max(FACTORIZATION_TOL)).is_err() {
        return false;
    }
    let Ok(dev) = m.max_commutator() else { return false };
    if dev > COMMUTATION_TOL {
        return false;
    }
    let full = m.dag.spaces();
    let order: Vec<&str> = full.iter().map(|f| f.name.as_str()).collect();
    let Ok(sigma) = sigma.permute(&order) else { return false };
    if sigma.factors() != full.as_slice() {
        return false;
    }
    match m.embedded().and_then(|ops| product(&ops, &full)) {
        Ok(built) => sigma.max_abs_diff(&built) <= tol,
        Err(_) => false,
    }
}

/// Candidate channels from partial traces of `sigma`, accepted only if they
/// pass [`verify_markov`]. Node `i`'s candidate keeps its input and its
/// parents' outputs and divides by the dimension of every traced output.
pub fn markov_discover(sigma: &DenseOperator, dag: &Dag, tol: f64) -> Option<QuantumCausalModel> {
    let mut channels = Vec::with_capacity(dag.nodes.len());
    for i in 0..dag.nodes.len() {
        let keep_spaces = dag.channel_spaces(i);
        let keep: Vec<&str> = keep_spaces.iter().map(|f| f.name.as_str()).collect();
        let traced_out: usize = dag
            .nodes
            .iter()
            .filter(|n| !keep.contains(&n.out_space.name.as_str()))
            .map(|n| n.out_space.dim)
            .product();
        let reduced = partial_trace(sigma, &keep).ok()?.permute(&keep).ok()?;
        let mut candidate = reduced.scale(1.0 / traced_out as f64);
        // strip rounding-level anti-Hermitian noise
        candidate = candidate.add(&candidate.adjoint()).ok()?.scale(0.5);
        channels.push(candidate);
    }
    let m = QuantumCausalModel {
        dag: dag.clone(),
        channels,
    };
    verify_markov(sigma, &m, tol).then_some(m)
}

/// No-influence graph of a unitary channel with Choi `u` over
/// `inputs ++ outputs`. Edge `a -> b` is absent iff the marginal Choi onto
/// output `b` equals `1_a (x) Tr_a(.) / d_a`. Nodes are the inputs followed
/// by the outputs.
pub fn influence_graph(u: &DenseOperator, inputs: &[&str], outputs: &[&str], tol: f64) -> Result<DiGraph> {
    check_unitary_choi(u, inputs, tol)?;
    let mut nodes: Vec<String> = inputs.iter().map(|s| s.to_string()).collect();
    nodes.extend(outputs.iter().map(|s| s.to_string()));
    let mut g = DiGraph::new(nodes);
    for (bi, b) in outputs.iter().enumerate() {
        let mut keep: Vec<&str> = inputs.to_vec();
        keep.push(b);
        let marginal = partial_trace(u, &keep)?;
        for (ai, a) in inputs.iter().enumerate() {
            let replaced = marginal.trace_replace(&[a])?;
            if marginal.max_abs_diff(&replaced) > tol {
                g.add_edge(ai, inputs.len() + bi);
            }
        }
    }
    Ok(g)
}

fn check_unitary_choi(u: &DenseOperator, inputs: &[&str], tol: f64) -> Result<()> {
    let din: usize = inputs
        .iter()
        .map(|s| u.position(s).map(|k| u.factors()[k].dim))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .product();
    if din * din != u.dim() || !is_cptp(u, inputs, tol.max(1e-9)) {
        return Err(Error::NotUnitary(f64::NAN));
    }
    let spec = u.spectrum(tol.max(1e-9))?;
    let rank_dev = (spec.max() - din as f64).abs().max(spec.eigenvalues[1..].iter().map(|l| l.abs()).fold(0.0, f64::max));
    if rank_dev > 1e-6 {
        return Err(Error::NotUnitary(rank_dev));
    }
    Ok(())
}

/// Choi of `U` from `inputs` to `outputs` (qudit factors of the given dims).
pub fn unitary_choi(u: &CMatrix, inputs: Vec<SpaceLabel>, outputs: Vec<SpaceLabel>) -> Result<DenseOperator> {
    let dev = u.unitary_deviation();
    if dev > 1e-9 {
        return Err(Error::NotUnitary(dev));
    }
    crate::tensor::choi_from_kraus(std::slice::from_ref(u), inputs, outputs)
}

/// Random DAG on the given nodes: a random topological order with each
/// forward edge present with probability 1/2.
pub fn random_dag<R: Rng + ?Sized>(nodes: Vec<QuantumNode>, rng: &mut R) -> Dag {
    let mut perm: Vec<usize> = (0..nodes.len()).collect();
    perm.shuffle(rng);
    let names: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
    let mut edges = Vec::new();
    for a in 0..perm.len() {
        for b in a + 1..perm.len() {
            if rng.random_bool(0.5) {
                edges.push((names[perm[a]].as_str(), names[perm[b]].as_str()));
            }
        }
    }
    Dag::new(nodes.clone(), &edges).expect("forward edges are acyclic")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, ONE, ZERO};
    use crate::process::identity_channel;
    use crate::tensor::tensor_all;

    fn nodes(names: &[&str]) -> Vec<QuantumNode> {
        names.iter().map(|n| Lab::qubit(n)).collect()
    }

    fn chain_model() -> QuantumCausalModel {
        let dag = Dag::new(nodes(&["A", "B"]), &[("A", "B")]).unwrap();
        let rho = DenseOperator::new(vec![dag.nodes[0].in_space.clone()], CMatrix::diag(&[ONE, ZERO])).unwrap();
        let j = identity_channel(dag.nodes[0].out_space.clone(), dag.nodes[1].in_space.clone()).unwrap();
        QuantumCausalModel::new(dag, vec![rho, j]).unwrap()
    }

    fn q(name: &str) -> SpaceLabel {
        SpaceLabel::new(name, 2)
    }

    #[test]
    fn single_node_is_its_state() {
        let dag = Dag::new(nodes(&["A"]), &[]).unwrap();
        let rho = DenseOperator::new(vec![dag.nodes[0].in_space.clone()], CMatrix::diag(&[ONE, ZERO])).unwrap();
        let m = QuantumCausalModel::new(dag.clone(), vec![rho.clone()]).unwrap();
        let s = build_process_operator(&m).unwrap();
        let expected = rho.embed(&dag.spaces()).unwrap();
        assert!(s.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn chain_round_trip_and_failures() {
        let m = chain_model();
        let s = build_process_operator(&m).unwrap();
        let oracle = tensor_all(&[
            m.channels[0].clone(),
            m.channels[1].clone(),
            DenseOperator::identity(vec![m.dag.nodes[1].out_space.clone()]).unwrap(),
        ])
        .unwrap()
        .permute(&["A_in", "A_out", "B_in", "B_out"])
        .unwrap();
        assert!(s.max_abs_diff(&oracle) < 1e-15);
        assert!(verify_markov(&s, &m, FACTORIZATION_TOL));

        // perturbed
        let mut bumped = s.matrix().clone();
        bumped.add_at(1, 2, ONE * 1e-3);
        bumped.add_at(2, 1, ONE * 1e-3);
        let bumped = DenseOperator::new(s.factors().to_vec(), bumped).unwrap();
        assert!(!verify_markov(&bumped, &m, FACTORIZATION_TOL));

        // reversed DAG with the same channels
        let rev = QuantumCausalModel {
            dag: m.dag.reversed(),
            channels: m.channels.clone(),
        };
        assert!(!verify_markov(&s, &rev, FACTORIZATION_TOL));

        let found = markov_discover(&s, &m.dag, FACTORIZATION_TOL).unwrap();
        assert!(verify_markov(&s, &found, FACTORIZATION_TOL));
        let edgeless = Dag::new(nodes(&["A", "B"]), &[]).unwrap();
        assert!(markov_discover(&s, &edgeless, FACTORIZATION_TOL).is_none());
    }

    #[test]
    fn product_of_preparations_is_edgeless() {
        let dag = Dag::new(nodes(&["A", "B"]), &[]).unwrap();
        let m = QuantumCausalModel::random(3, dag.clone()).unwrap();
        let s = build_process_operator(&m).unwrap();
        assert!(markov_discover(&s, &dag, FACTORIZATION_TOL).is_some());
    }

    #[test]
    fn fork_matches_direct_assembly() {
        let dag = Dag::new(nodes(&["A", "B", "C"]), &[("A", "B"), ("A", "C")]).unwrap();
        let m = QuantumCausalModel::random(5, dag.clone()).unwrap();
        let s = build_process_operator(&m).unwrap();
        // oracle: the two child channels are diagonal in A_out; assemble
        // sum_x |x><x| (x) sigma_x (x) tau_x by hand
        let rho_a = &m.channels[0];
        let jb = m.channels[1].permute(&["A_out", "B_in"]).unwrap();
        let jc = m.channels[2].permute(&["A_out", "C_in"]).unwrap();
        let block = |j: &DenseOperator, x: usize| CMatrix::from_fn(2, 2, |r, c| j.get(x * 2 + r, x * 2 + c));
        let mut core = CMatrix::zeros(8, 8);
        for x in 0..2 {
            let p = CMatrix::outer(&basis_vector(2, x));
            core = core.add(&p.kron(&block(&jb, x)).kron(&block(&jc, x)));
        }
        let core = DenseOperator::new(vec![q("A_out"), q("B_in"), q("C_in")], core).unwrap();
        let oracle = tensor_all(&[rho_a.clone(), core, DenseOperator::identity(vec![q("B_out"), q("C_out")]).unwrap()])
            .unwrap()
            .permute(&dag.spaces().iter().map(|f| f.name.as_str()).collect::<Vec<_>>())
            .unwrap();
        assert!(s.max_abs_diff(&oracle) < 1e-12);
        assert!(markov_discover(&s, &dag, FACTORIZATION_TOL).is_some());
    }

    #[test]
    fn non_commuting_channels_rejected() {
        let dag = Dag::new(nodes(&["A", "B", "C"]), &[("A", "B"), ("A", "C")]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = DenseOperator::new(vec![q("A_in")], CMatrix::random_density(2, &mut rng)).unwrap();
        let jb = random_channel(vec![q("A_out")], vec![q("B_in")], 1, &mut rng);
        let jc = random_channel(vec![q("A_out")], vec![q("C_in")], 1, &mut rng);
        assert!(matches!(QuantumCausalModel::new(dag, vec![rho, jb, jc]), Err(Error::NonCommuting(_))));
    }

    fn swap() -> CMatrix {
        CMatrix::from_fn(4, 4, |r, c| if (r == c && (r == 0 || r == 3)) || (r == 1 && c == 2) || (r == 2 && c == 1) { ONE } else { ZERO })
    }

    fn two_qubit_graph(u: &CMatrix) -> DiGraph {
        let j = unitary_choi(u, vec![q("1"), q("2")], vec![q("1'"), q("2'")]).unwrap();
        influence_graph(&j, &["1", "2"], &["1'", "2'"], 1e-8).unwrap()
    }

    #[test]
    fn influence_examples() {
        let g = two_qubit_graph(&swap());
        assert_eq!(g.edge_names(), vec![("1".into(), "2'".into()), ("2".into(), "1'".into())]);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let prod = CMatrix::haar_unitary(2, &mut rng).kron(&CMatrix::haar_unitary(2, &mut rng));
        let g = two_qubit_graph(&prod);
        assert_eq!(g.edge_names(), vec![("1".into(), "1'".into()), ("2".into(), "2'".into())]);
        let p0 = CMatrix::outer(&basis_vector(2, 0));
        let p1 = CMatrix::outer(&basis_vector(2, 1));
        let cnot = p0.kron(&CMatrix::identity(2)).add(&p1.kron(&pauli_x()));
        let g = two_qubit_graph(&cnot);
        assert!(g.has_edge("1", "1'") && g.has_edge("1", "2'") && g.has_edge("2", "2'"));
        // phase kickback: with the control in |+>, a target in |+> or |->
        // leaves the control in |+> or |->, so the target does influence it
        assert!(g.has_edge("2", "1'"));
        let h = crate::linalg::hadamard();
        let plus = h.apply(&basis_vector(2, 0));
        let minus = h.apply(&basis_vector(2, 1));
        let control_out = |t: &[crate::linalg::C64]| {
            let out = cnot.apply(&CMatrix::column(&plus).kron(&CMatrix::column(t)).col(0));
            let full = DenseOperator::new(vec![q("c"), q("t")], CMatrix::outer(&out)).unwrap();
            partial_trace(&full, &["c"]).unwrap()
        };
        assert!(control_out(&plus).max_abs_diff(&control_out(&minus)) > 0.9);
        // only a trivial controlled gate leaves the control untouched
        let trivial = p0.kron(&CMatrix::identity(2)).add(&p1.kron(&CMatrix::identity(2)));
        assert!(!two_qubit_graph(&trivial).has_edge("2", "1'"));
    }

    #[test]
    fn inverse_reverses_arrows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let u = CMatrix::haar_unitary(4, &mut rng);
            let fwd = influence_graph(
                &unitary_choi(&u, vec![q("1"), q("2")], vec![q("1'"), q("2'")]).unwrap(),
                &["1", "2"],
                &["1'", "2'"],
                1e-8,
            )
            .unwrap();
            let back = influence_graph(
                &unitary_choi(&u.adjoint(), vec![q("1'"), q("2'")], vec![q("1"), q("2")]).unwrap(),
                &["1'", "2'"],
                &["1", "2"],
                1e-8,
            )
            .unwrap();
            let mut a: Vec<_> = fwd.reversed().edge_names();
            let mut b: Vec<_> = back.edge_names();
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        let dep = DenseOperator::identity(vec![q("1"), q("1'")]).unwrap().scale(0.5);
        assert!(matches!(influence_graph(&dep, &["1"], &["1'"], 1e-8), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn cyclic_dag_rejected() {
        assert!(matches!(Dag::new(nodes(&["A", "B"]), &[("A", "B"), ("B", "A")]), Err(Error::InvalidGraph(_))));
    }
}
