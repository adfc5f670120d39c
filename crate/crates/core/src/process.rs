//! Laboratories, instruments and process matrices.
//!
//! A process matrix `W` lives on `in_1 (x) out_1 (x) in_2 (x) out_2 ...` in lab
//! order. Each lab's CP map is a Choi operator on `in_i (x) out_i` (see
//! [`crate::tensor`] for the Choi convention) and outcome probabilities follow
//!
//! ```text
//! p = Tr[ W (M_1 (x) ... (x) M_n)^T ]
//! ```
//!
//! With this pairing a valid `W` has `Tr W = prod_i dim(out_i)`, and a lab
//! fed a state `rho` from the global past sees `W = rho (x) 1_out`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::causal::order::PartialOrder;
use crate::error::{Error, Result};
use crate::linalg::{basis_vector, CMatrix, C64, I, ZERO};
use crate::tensor::{choi_from_kraus, is_cptp, tensor_all, DenseOperator, SpaceLabel};

pub const DEFAULT_N_RANDOM: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lab {
    pub name: String,
    pub in_space: SpaceLabel,
    pub out_space: SpaceLabel,
}

impl Lab {
    pub fn new(name: impl Into<String>, in_space: SpaceLabel, out_space: SpaceLabel) -> Self {
        Lab {
            name: name.into(),
            in_space,
            out_space,
        }
    }

    /// Lab with spaces named `<name>_in` / `<name>_out`.
    pub fn qudit(name: &str, din: usize, dout: usize) -> Self {
        Lab::new(
            name,
            SpaceLabel::new(format!("{name}_in"), din),
            SpaceLabel::new(format!("{name}_out"), dout),
        )
    }

    pub fn qubit(name: &str) -> Self {
        Self::qudit(name, 2, 2)
    }

    pub fn spaces(&self) -> Vec<SpaceLabel> {
        vec![self.in_space.clone(), self.out_space.clone()]
    }

    /// Relabel an operator on `in (x) out` of matching dimensions onto this lab.
    pub fn adopt(&self, op: &DenseOperator) -> Result<DenseOperator> {
        if op.dims() == [self.in_space.dim, self.out_space.dim] {
            if op.labels() == [self.in_space.name.as_str(), self.out_space.name.as_str()] {
                return Ok(op.clone());
            }
            return op.with_factors(self.spaces());
        }
        Err(Error::DimensionMismatch(format!(
            "CP map on {:?} does not fit lab `{}` ({} -> {})",
            op.dims(),
            self.name,
            self.in_space.dim,
            self.out_space.dim
        )))
    }
}

/// One lab's instrument: a CP map per outcome, summing to a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Instrument {
    pub lab: String,
    pub cp_maps: Vec<DenseOperator>,
}

impl Instrument {
    /// Checks each map is PSD and that the maps sum to a trace-preserving one.
    pub fn new(lab: &Lab, cp_maps: Vec<DenseOperator>, tol: f64) -> Result<Self> {
        let cp_maps = cp_maps
            .iter()
            .map(|m| lab.adopt(m))
            .collect::<Result<Vec<_>>>()?;
        let Some(first) = cp_maps.first() else {
            return Err(Error::NotCptp("instrument has no outcomes".into()));
        };
        let mut sum = DenseOperator::zeros(first.factors().to_vec())?;
        for m in &cp_maps {
            if !m.is_psd(tol) {
                return Err(Error::NotCptp(format!(
                    "a CP map of lab `{}` is not positive",
                    lab.name
                )));
            }
            sum = sum.add(m)?;
        }
        if !is_cptp(&sum, &[lab.in_space.name.as_str()], tol) {
            return Err(Error::NotCptp(format!(
                "maps of lab `{}` do not sum to a trace-preserving map",
                lab.name
            )));
        }
        Ok(Instrument {
            lab: lab.name.clone(),
            cp_maps,
        })
    }

    pub(crate) fn trusted(lab: &Lab, cp_maps: Vec<DenseOperator>) -> Self {
        Instrument {
            lab: lab.name.clone(),
            cp_maps,
        }
    }

    pub fn outcomes(&self) -> usize {
        self.cp_maps.len()
    }

    /// The trace-preserving map obtained by ignoring the outcome.
    pub fn channel(&self) -> DenseOperator {
        let mut it = self.cp_maps.iter();
        let first = it.next().expect("nonempty instrument").clone();
        it.fold(first, |acc, m| acc.add(m).expect("same spaces"))
    }

    /// Single-outcome instrument for a channel.
    pub fn from_channel(lab: &Lab, choi: DenseOperator, tol: f64) -> Result<Self> {
        Self::new(lab, vec![choi], tol)
    }

    /// Measure the input in an orthonormal basis (columns of `basis`) and
    /// prepare `preps[o]` on outcome `o`.
    pub fn measure_prepare(lab: &Lab, basis: &CMatrix, preps: &[CMatrix]) -> Result<Self> {
        if basis.rows() != lab.in_space.dim || preps.len() != basis.cols() {
            return Err(Error::DimensionMismatch(
                "measure-and-prepare shapes do not fit lab".into(),
            ));
        }
        let maps = (0..basis.cols())
            .map(|o| {
                let proj = CMatrix::outer(&basis.col(o));
                DenseOperator::new(lab.spaces(), proj.transpose().kron(&preps[o]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Instrument::trusted(lab, maps))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessMatrix {
    labs: Vec<Lab>,
    w: DenseOperator,
}

impl ProcessMatrix {
    /// `w` may list its factors in any order; it is stored in the canonical
    /// `in_1, out_1, in_2, out_2, ...` layout.
    pub fn new(labs: Vec<Lab>, w: DenseOperator) -> Result<Self> {
        let mut names: Vec<&str> = labs.iter().map(|l| l.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::DuplicateLabel("lab names must be unique".into()));
        }
        for lab in &labs {
            if lab.in_space.name == lab.out_space.name {
                return Err(Error::DuplicateLabel(lab.in_space.name.clone()));
            }
        }
        let canonical: Vec<SpaceLabel> = labs.iter().flat_map(Lab::spaces).collect();
        if w.factors().len() != canonical.len() {
            return Err(Error::DimensionMismatch(format!(
                "W has {} factors, labs need {}",
                w.factors().len(),
                canonical.len()
            )));
        }
        let order: Vec<&str> = canonical.iter().map(|f| f.name.as_str()).collect();
        let w = w.permute(&order)?;
        if w.factors() != canonical.as_slice() {
            return Err(Error::DimensionMismatch(
                "W factor dimensions disagree with lab spaces".into(),
            ));
        }
        Ok(ProcessMatrix { labs, w })
    }

    pub fn labs(&self) -> &[Lab] {
        &self.labs
    }

    pub fn lab(&self, name: &str) -> Option<&Lab> {
        self.labs.iter().find(|l| l.name == name)
    }

    pub fn lab_names(&self) -> Vec<String> {
        self.labs.iter().map(|l| l.name.clone()).collect()
    }

    pub fn w(&self) -> &DenseOperator {
        &self.w
    }

    /// `prod_i dim(out_i)`.
    pub fn expected_trace(&self) -> f64 {
        self.labs.iter().map(|l| l.out_space.dim as f64).product()
    }

    /// The process seen by the other labs when `lab` always applies the
    /// channel with Choi `channel`.
    pub fn plug(&self, lab: &str, channel: &DenseOperator) -> Result<ProcessMatrix> {
        let l = self.lab(lab).ok_or_else(|| Error::UnknownLabel(lab.to_string()))?;
        let reduced = self.w.contract(&l.adopt(channel)?)?;
        let labs = self.labs.iter().filter(|x| x.name != lab).cloned().collect();
        ProcessMatrix::new(labs, reduced)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub psd_ok: bool,
    pub trace_ok: bool,
    pub normalization_ok: bool,
    pub max_normalization_deviation: f64,
    pub min_eigenvalue: f64,
    pub trace: f64,
}

impl ValidityReport {
    pub fn valid(&self) -> bool {
        self.psd_ok && self.trace_ok && self.normalization_ok
    }
}

/// `Tr[W (x)_i M_i^T]` for one CP map per lab (lab order). The imaginary part
/// is dropped; it vanishes for Hermitian `W` and positive maps.
pub fn born_probability(p: &ProcessMatrix, choice: &[&DenseOperator]) -> Result<f64> {
    Ok(born_amplitude(p, choice)?.re)
}

pub(crate) fn born_amplitude(p: &ProcessMatrix, choice: &[&DenseOperator]) -> Result<C64> {
    if choice.len() != p.labs.len() {
        return Err(Error::LabCount {
            expected: p.labs.len(),
            got: choice.len(),
        });
    }
    let mut acc = p.w.clone();
    for (lab, m) in p.labs.iter().zip(choice) {
        acc = acc.contract(&lab.adopt(m)?)?;
    }
    Ok(acc.get(0, 0))
}

/// Orthonormal measurement bases whose projectors span all operators on `C^d`:
/// the computational basis plus, for every pair `j < k`, the bases that swap
/// `|j>, |k>` for `(|j> +- |k>)/sqrt2` and `(|j> +- i|k>)/sqrt2`. Columns are
/// basis vectors.
pub fn tomographic_bases(d: usize) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::identity(d)];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in j + 1..d {
            for phase in [C64::new(1.0, 0.0), I] {
                let mut b = CMatrix::identity(d);
                b.set(j, j, C64::new(s, 0.0));
                b.set(k, j, phase * s);
                b.set(j, k, C64::new(s, 0.0));
                b.set(k, k, -phase * s);
                out.push(b);
            }
        }
    }
    out
}

/// `d^2` pure states whose projectors span all operators on `C^d`.
pub fn tomographic_states(d: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out: Vec<CMatrix> = (0..d).map(|j| CMatrix::outer(&basis_vector(d, j))).collect();
    for j in 0..d {
        for k in j + 1..d {
            for phase in [C64::new(1.0, 0.0), I] {
                let mut v = vec![ZERO; d];
                v[j] = C64::new(s, 0.0);
                v[k] = phase * s;
                out.push(CMatrix::outer(&v));
            }
        }
    }
    out
}

/// Informationally complete instrument family for one lab.
///
/// Every setting measures the input in one of the [`tomographic_bases`] and
/// prepares an outcome-dependent state: either the same tomographic state for
/// every outcome, or `|0><0|` except on a single outcome. Individual CP maps
/// span all operators on `in (x) out` and the induced channels affinely span
/// every channel, so signalling in `W` shows up in the resulting behavior.
pub fn ic_instruments(lab: &Lab) -> Vec<Instrument> {
    let bases = tomographic_bases(lab.in_space.dim);
    let states = tomographic_states(lab.out_space.dim);
    let din = lab.in_space.dim;
    let mut out = Vec::new();
    for basis in &bases {
        for k in 0..states.len() {
            let preps = vec![states[k].clone(); din];
            out.push(Instrument::measure_prepare(lab, basis, &preps).expect("shapes fit"));
        }
        for o in 0..din {
            for k in 1..states.len() {
                let mut preps = vec![states[0].clone(); din];
                preps[o] = states[k].clone();
                out.push(Instrument::measure_prepare(lab, basis, &preps).expect("shapes fit"));
            }
        }
    }
    out
}

/// A minimal set of channels on the lab whose Choi operators affinely span
/// the whole set of channels `in -> out`.
pub fn spanning_channels(lab: &Lab) -> Vec<DenseOperator> {
    let candidates: Vec<DenseOperator> = ic_instruments(lab).iter().map(Instrument::channel).collect();
    let target = lab.in_space.dim.pow(2) * (lab.out_space.dim.pow(2) - 1);
    let base = candidates[0].clone();
    let mut chosen = vec![base.clone()];
    // Gram-Schmidt on differences from the first channel
    let mut ortho: Vec<Vec<C64>> = Vec::new();
    for c in candidates.iter().skip(1) {
        if ortho.len() == target {
            break;
        }
        let mut v: Vec<C64> = c.matrix().sub(base.matrix()).data().to_vec();
        for u in &ortho {
            let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, y) in v.iter_mut().zip(u) {
                *x -= proj * y;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-8 {
            ortho.push(v.iter().map(|z| z / norm).collect());
            chosen.push(c.clone());
        }
    }
    debug_assert_eq!(ortho.len(), target);
    chosen
}

/// Random instrument with `outcomes` outcomes from a Haar-random Stiefel
/// isometry.
pub fn random_instrument<R: Rng + ?Sized>(lab: &Lab, outcomes: usize, rng: &mut R) -> Instrument {
    let din = lab.in_space.dim;
    let dout = lab.out_space.dim;
    let per_outcome = din.div_ceil(dout * outcomes).max(1);
    let rows = dout * outcomes * per_outcome;
    let v = CMatrix::haar_isometry(rows, din, rng);
    let maps = (0..outcomes)
        .map(|o| {
            let kraus: Vec<CMatrix> = (0..per_outcome)
                .map(|r| {
                    let offset = (o * per_outcome + r) * dout;
                    CMatrix::from_fn(dout, din, |a, b| v.get(offset + a, b))
                })
                .collect();
            choi_from_kraus(&kraus, vec![lab.in_space.clone()], vec![lab.out_space.clone()])
                .expect("shapes fit")
        })
        .collect();
    Instrument::trusted(lab, maps)
}

/// Random channel `inputs -> outputs` with Kraus rank `rank`.
pub(crate) fn random_channel<R: Rng + ?Sized>(
    inputs: Vec<SpaceLabel>,
    outputs: Vec<SpaceLabel>,
    rank: usize,
    rng: &mut R,
) -> DenseOperator {
    let din: usize = inputs.iter().map(|f| f.dim).product();
    let dout: usize = outputs.iter().map(|f| f.dim).product();
    let rank = rank.max(din.div_ceil(dout));
    let v = CMatrix::haar_isometry(dout * rank, din, rng);
    let kraus: Vec<CMatrix> = (0..rank)
        .map(|r| CMatrix::from_fn(dout, din, |a, b| v.get(r * dout + a, b)))
        .collect();
    choi_from_kraus(&kraus, inputs, outputs).expect("shapes fit")
}

fn check_products(
    w: &DenseOperator,
    labs: &[Lab],
    families: &[Vec<DenseOperator>],
    worst: &mut f64,
) -> Result<()> {
    let Some((lab, rest_labs)) = labs.split_first() else {
        *worst = worst.max((w.get(0, 0) - C64::new(1.0, 0.0)).norm());
        return Ok(());
    };
    let _ = lab;
    for m in &families[0] {
        let reduced = w.contract(m)?;
        check_products(&reduced, rest_labs, &families[1..], worst)?;
    }
    Ok(())
}

/// PSD, trace and normalization checks.
///
/// Normalization is verified on every product of [`spanning_channels`] (which
/// by multilinearity covers all channels) and on `n_random` draws of random
/// two-outcome instruments, where each outcome probability must also lie in
/// `[-tol, 1 + tol]`.
pub fn validate_process(p: &ProcessMatrix, n_random: usize, tol: f64) -> ValidityReport {
    validate_process_seeded(p, n_random, tol, 0x5eed)
}

pub fn validate_process_seeded(p: &ProcessMatrix, n_random: usize, tol: f64, seed: u64) -> ValidityReport {
    let hermitian = p.w.is_hermitian(tol);
    let min_eigenvalue = if hermitian {
        p.w.spectrum(f64::INFINITY).map(|s| s.min()).unwrap_or(f64::NEG_INFINITY)
    } else {
        f64::NEG_INFINITY
    };
    let trace = p.w.trace().re;
    let psd_ok = hermitian && min_eigenvalue >= -tol;
    let trace_ok = (trace - p.expected_trace()).abs() <= tol * p.expected_trace().max(1.0);

    let families: Vec<Vec<DenseOperator>> = p.labs.iter().map(spanning_channels).collect();
    let mut worst: f64 = 0.0;
    if check_products(&p.w, &p.labs, &families, &mut worst).is_err() {
        worst = f64::INFINITY;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n_random {
        let instruments: Vec<Instrument> =
            p.labs.iter().map(|l| random_instrument(l, 2, &mut rng)).collect();
        let mut total = 0.0;
        let mut out_of_range: f64 = 0.0;
        for_each_outcome(&instruments, |maps| {
            let prob = born_probability(p, maps).unwrap_or(f64::NAN);
            total += prob;
            if prob < 0.0 {
                out_of_range = out_of_range.max(-prob);
            } else if prob > 1.0 {
                out_of_range = out_of_range.max(prob - 1.0);
            }
        });
        worst = worst.max((total - 1.0).abs()).max(out_of_range);
        if worst.is_nan() {
            worst = f64::INFINITY;
        }
    }
    ValidityReport {
        psd_ok,
        trace_ok,
        normalization_ok: worst <= tol,
        max_normalization_deviation: worst,
        min_eigenvalue,
        trace,
    }
}

fn for_each_outcome(instruments: &[Instrument], mut f: impl FnMut(&[&DenseOperator])) {
    let mut idx = vec![0usize; instruments.len()];
    loop {
        let maps: Vec<&DenseOperator> = instruments
            .iter()
            .zip(&idx)
            .map(|(ins, &k)| &ins.cp_maps[k])
            .collect();
        f(&maps);
        let mut k = instruments.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < instruments[k].outcomes() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Process matrix of a fixed-order circuit: `state` enters the first lab,
/// `channels[i]` carries lab `i`'s output to lab `i + 1`'s input, and the last
/// output is discarded.
///
/// Each channel is a Choi operator with two factors (input, output) of the
/// right dimensions; its labels are replaced by the lab spaces.
pub fn w_from_chain(state: &DenseOperator, channels: &[DenseOperator], labs: &[Lab]) -> Result<ProcessMatrix> {
    let Some(first) = labs.first() else {
        return Err(Error::LabCount { expected: 1, got: 0 });
    };
    if channels.len() + 1 != labs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} labs need {} channels, got {}",
            labs.len(),
            labs.len() - 1,
            channels.len()
        )));
    }
    if state.dim() != first.in_space.dim {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, lab `{}` expects {}",
            state.dim(),
            first.name,
            first.in_space.dim
        )));
    }
    let rho = DenseOperator::new(vec![first.in_space.clone()], state.matrix().clone())?;
    if !rho.is_psd(1e-9) || (rho.trace().re - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition("initial state must be a density operator".into()));
    }
    let mut pieces = vec![rho];
    for (k, ch) in channels.iter().enumerate() {
        let (from, to) = (&labs[k], &labs[k + 1]);
        if ch.factors().len() != 2 || ch.dims() != [from.out_space.dim, to.in_space.dim] {
            return Err(Error::DimensionMismatch(format!(
                "channel {k} must map `{}` ({}) to `{}` ({})",
                from.out_space.name, from.out_space.dim, to.in_space.name, to.in_space.dim
            )));
        }
        let ch = ch.with_factors(vec![from.out_space.clone(), to.in_space.clone()])?;
        if !is_cptp(&ch, &[from.out_space.name.as_str()], 1e-9) {
            return Err(Error::NotCptp(format!("channel {k}")));
        }
        pieces.push(ch);
    }
    let last = labs.last().expect("nonempty");
    pieces.push(DenseOperator::identity(vec![last.out_space.clone()])?);
    let w = tensor_all(&pieces)?;
    ProcessMatrix::new(labs.to_vec(), w)
}

/// Random process whose signalling follows `order`.
///
/// Every non-maximal lab sends its whole output through a random channel into
/// its first immediate successor; labs receiving nothing share a random
/// (generally entangled) state from the global past. Channels come from
/// Haar-random Stiefel isometries, i.e. random unitaries with a traced
/// ancilla. Labs are matched to order elements by name.
pub fn random_causal_process(seed: u64, order: &PartialOrder, labs: &[Lab]) -> Result<ProcessMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idx = labs
        .iter()
        .map(|l| {
            order
                .index_of(&l.name)
                .ok_or_else(|| Error::InvalidOrder(format!("lab `{}` missing from order", l.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    if order.len() != labs.len() {
        return Err(Error::InvalidOrder("order and labs differ in size".into()));
    }
    let n = labs.len();
    // target[k] = lab receiving lab k's output
    let target: Vec<Option<usize>> = (0..n)
        .map(|k| {
            order
                .covers_of(idx[k])
                .first()
                .map(|&e| idx.iter().position(|&x| x == e).expect("bijective"))
        })
        .collect();
    let mut pieces = Vec::new();
    let mut past: Vec<SpaceLabel> = Vec::new();
    for i in 0..n {
        let sources: Vec<SpaceLabel> = (0..n)
            .filter(|&k| target[k] == Some(i))
            .map(|k| labs[k].out_space.clone())
            .collect();
        if sources.is_empty() {
            past.push(labs[i].in_space.clone());
        } else {
            pieces.push(random_channel(sources, vec![labs[i].in_space.clone()], 2, &mut rng));
        }
    }
    let dpast: usize = past.iter().map(|f| f.dim).product();
    pieces.push(DenseOperator::new(past, CMatrix::random_density(dpast, &mut rng))?);
    let sinks: Vec<SpaceLabel> = (0..n)
        .filter(|&k| target[k].is_none())
        .map(|k| labs[k].out_space.clone())
        .collect();
    pieces.push(DenseOperator::identity(sinks)?);
    let w = tensor_all(&pieces)?;
    ProcessMatrix::new(labs.to_vec(), w)
}

/// Choi of the identity channel between two spaces of equal dimension.
pub fn identity_channel(input: SpaceLabel, output: SpaceLabel) -> Result<DenseOperator> {
    if input.dim != output.dim {
        return Err(Error::DimensionMismatch("identity channel needs equal dimensions".into()));
    }
    choi_from_kraus(&[CMatrix::identity(input.dim)], vec![input], vec![output])
}

/// Choi of the fully depolarizing channel `rho -> Tr(rho) 1/d`.
pub fn depolarizing_channel(input: SpaceLabel, output: SpaceLabel) -> Result<DenseOperator> {
    let dout = output.dim as f64;
    DenseOperator::identity(vec![input, output]).map(|j| j.scale(1.0 / dout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli_x, ONE};
    use crate::tensor::tensor;

    fn re(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn chain_ab(rho: &CMatrix) -> ProcessMatrix {
        let a = Lab::qubit("A");
        let b = Lab::qubit("B");
        let state = DenseOperator::new(vec![a.in_space.clone()], rho.clone()).unwrap();
        let ch = identity_channel(a.out_space.clone(), b.in_space.clone()).unwrap();
        w_from_chain(&state, &[ch], &[a, b]).unwrap()
    }

    #[test]
    fn single_lab_born_rule_matches_direct_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lab = Lab::qubit("A");
        let rho = CMatrix::random_density(2, &mut rng);
        let state = DenseOperator::new(vec![lab.in_space.clone()], rho.clone()).unwrap();
        let p = w_from_chain(&state, &[], std::slice::from_ref(&lab)).unwrap();
        let expected_w = tensor(&state, &DenseOperator::identity(vec![lab.out_space.clone()]).unwrap()).unwrap();
        assert!(p.w().max_abs_diff(&expected_w) < 1e-15);

        // measure along a complex direction and discard
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = [re(s), C64::new(0.0, s)];
        let basis = CMatrix::from_fn(2, 2, |r, c| if c == 0 { v[r] } else { [re(s), C64::new(0.0, -s)][r] });
        let half = CMatrix::identity(2).scale_real(0.5);
        let ins = Instrument::measure_prepare(&lab, &basis, &[half.clone(), half]).unwrap();
        let prob = born_probability(&p, &[&ins.cp_maps[0]]).unwrap();
        let direct = CMatrix::outer(&v).mul(&rho).trace().re;
        assert!((prob - direct).abs() < 1e-12, "{prob} vs {direct}");
    }

    #[test]
    fn trace_preserving_choice_gives_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = chain_ab(&CMatrix::random_density(2, &mut rng));
        for _ in 0..5 {
            let a = random_instrument(&p.labs()[0], 1, &mut rng);
            let b = random_instrument(&p.labs()[1], 1, &mut rng);
            let prob = born_probability(&p, &[&a.cp_maps[0], &b.cp_maps[0]]).unwrap();
            assert!((prob - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_chain_transmits_preparation() {
        let p = chain_ab(&CMatrix::diag(&[ONE, ZERO]));
        let a = &p.labs()[0];
        let b = &p.labs()[1];
        let zero = CMatrix::outer(&basis_vector(2, 0));
        let prep0 = Instrument::measure_prepare(a, &CMatrix::identity(2), &[zero.clone(), zero.clone()]).unwrap();
        let meas = Instrument::measure_prepare(b, &CMatrix::identity(2), &[zero.clone(), zero]).unwrap();
        let p0 = born_probability(&p, &[&prep0.channel(), &meas.cp_maps[0]]).unwrap();
        let p1 = born_probability(&p, &[&prep0.channel(), &meas.cp_maps[1]]).unwrap();
        assert!((p0 - 1.0).abs() < 1e-12 && p1.abs() < 1e-12);
    }

    #[test]
    fn space_mismatch_is_an_error() {
        let p = chain_ab(&CMatrix::diag(&[ONE, ZERO]));
        let bad = DenseOperator::identity(vec![SpaceLabel::new("x", 3), SpaceLabel::new("y", 2)]).unwrap();
        assert!(matches!(born_probability(&p, &[&bad, &bad]), Err(Error::DimensionMismatch(_))));
        assert!(matches!(born_probability(&p, &[&bad]), Err(Error::LabCount { .. })));
    }

    #[test]
    fn born_rule_is_linear_in_each_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = chain_ab(&CMatrix::random_density(2, &mut rng));
        let a1 = random_instrument(&p.labs()[0], 2, &mut rng);
        let b1 = random_instrument(&p.labs()[1], 2, &mut rng);
        let m = &a1.cp_maps[0];
        let n = &a1.cp_maps[1];
        let mix = m.scale(0.3).add(&n.scale(0.7)).unwrap();
        let lhs = born_probability(&p, &[&mix, &b1.cp_maps[0]]).unwrap();
        let rhs = 0.3 * born_probability(&p, &[m, &b1.cp_maps[0]]).unwrap()
            + 0.7 * born_probability(&p, &[n, &b1.cp_maps[0]]).unwrap();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn chain_is_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = chain_ab(&CMatrix::random_density(2, &mut rng));
        let r = validate_process(&p, 8, 1e-9);
        assert!(r.valid(), "{r:?}");
    }

    #[test]
    fn wrong_trace_is_flagged() {
        let lab = Lab::qubit("A");
        let w = DenseOperator::identity(lab.spaces()).unwrap(); // trace 4, needs 2
        let p = ProcessMatrix::new(vec![lab], w).unwrap();
        let r = validate_process(&p, 4, 1e-9);
        assert!(r.psd_ok);
        assert!(!r.trace_ok);
        assert!(!r.valid());
    }

    #[test]
    fn self_loop_fails_normalization() {
        // identity channel from A_out back into A_in
        let lab = Lab::qubit("A");
        let loop_w = identity_channel(lab.out_space.clone(), lab.in_space.clone()).unwrap();
        let p = ProcessMatrix::new(vec![lab.clone()], loop_w).unwrap();
        let r = validate_process(&p, 4, 1e-9);
        assert!(r.psd_ok && r.trace_ok);
        assert!(!r.normalization_ok);
        // the bit-flip choice makes the probability vanish
        let flip = choi_from_kraus(&[pauli_x()], vec![lab.in_space.clone()], vec![lab.out_space.clone()]).unwrap();
        assert!(born_probability(&p, &[&flip]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn depolarized_chain_does_not_signal() {
        let a = Lab::qubit("A");
        let b = Lab::qubit("B");
        let state = DenseOperator::new(vec![a.in_space.clone()], CMatrix::diag(&[ONE, ZERO])).unwrap();
        let ch = depolarizing_channel(a.out_space.clone(), b.in_space.clone()).unwrap();
        let p = w_from_chain(&state, &[ch], &[a.clone(), b.clone()]).unwrap();
        let meas = Instrument::measure_prepare(&b, &CMatrix::identity(2), &[CMatrix::identity(2).scale_real(0.5), CMatrix::identity(2).scale_real(0.5)]).unwrap();
        for k in 0..2 {
            let prep = CMatrix::outer(&basis_vector(2, k));
            let send = Instrument::measure_prepare(&a, &CMatrix::identity(2), &[prep.clone(), prep]).unwrap();
            let p0 = born_probability(&p, &[&send.channel(), &meas.cp_maps[0]]).unwrap();
            assert!((p0 - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn chain_dimension_mismatch() {
        let a = Lab::qudit("A", 2, 3);
        let b = Lab::qubit("B");
        let state = DenseOperator::new(vec![a.in_space.clone()], CMatrix::diag(&[ONE, ZERO])).unwrap();
        let ch = identity_channel(SpaceLabel::new("x", 2), SpaceLabel::new("y", 2)).unwrap();
        assert!(matches!(w_from_chain(&state, &[ch], &[a, b]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn spanning_channel_count() {
        assert_eq!(spanning_channels(&Lab::qubit("A")).len(), 13);
        assert_eq!(spanning_channels(&Lab::qudit("F", 2, 1)).len(), 1);
        assert_eq!(spanning_channels(&Lab::qudit("P", 1, 2)).len(), 4);
        assert_eq!(ic_instruments(&Lab::qubit("A")).len(), 30);
    }

    #[test]
    fn ic_instruments_are_instruments() {
        let lab = Lab::qudit("A", 3, 2);
        for ins in ic_instruments(&lab) {
            Instrument::new(&lab, ins.cp_maps.clone(), 1e-10).unwrap();
        }
    }

    #[test]
    fn random_process_is_valid_and_deterministic() {
        let labs = vec![Lab::qubit("A"), Lab::qubit("B"), Lab::qubit("C")];
        let names: Vec<String> = labs.iter().map(|l| l.name.clone()).collect();
        let order = PartialOrder::new(names, &[("A", "C"), ("B", "C")]).unwrap();
        let p = random_causal_process(42, &order, &labs).unwrap();
        let q = random_causal_process(42, &order, &labs).unwrap();
        assert_eq!(p, q);
        let r = validate_process(&p, 4, 1e-9);
        assert!(r.valid(), "{r:?}");
    }
}
