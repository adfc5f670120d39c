//! The quantum switch: two gate slots applied in an order set by a control
//! qubit. Control `|0>` applies A first, control `|1>` applies B first.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{basis_vector, pauli_x, CMatrix, C64, ZERO};
use crate::process::{tomographic_states, Lab, ProcessMatrix};
use crate::tensor::{choi_from_kraus, is_cptp, kraus_from_choi, partial_trace, DenseOperator, SpaceLabel};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchInstance {
    pub target_dim: usize,
    /// Qubit density operator.
    pub control: CMatrix,
    /// Choi operators on `(in, out)` of the target.
    pub gate_a: DenseOperator,
    pub gate_b: DenseOperator,
}

impl SwitchInstance {
    pub fn new(control: CMatrix, gate_a: DenseOperator, gate_b: DenseOperator) -> Result<Self> {
        if control.rows() != 2 || control.cols() != 2 {
            return Err(Error::DimensionMismatch("control must be a qubit".into()));
        }
        let c = DenseOperator::new(vec![SpaceLabel::new("c", 2)], control.clone())?;
        if !c.is_psd(TOL) || (c.trace().re - 1.0).abs() > TOL {
            return Err(Error::Precondition("control is not a density operator".into()));
        }
        let d = gate_dim(&gate_a)?;
        if gate_dim(&gate_b)? != d {
            return Err(Error::DimensionMismatch("gate slots act on different dimensions".into()));
        }
        for g in [&gate_a, &gate_b] {
            let input = g.labels()[0].to_string();
            if !is_cptp(g, &[input.as_str()], TOL) {
                return Err(Error::NotCptp("switch slot".into()));
            }
        }
        Ok(SwitchInstance {
            target_dim: d,
            control,
            gate_a,
            gate_b,
        })
    }

    pub fn unitary(control: CMatrix, u: &CMatrix, v: &CMatrix) -> Result<Self> {
        Self::new(control, unitary_choi(u)?, unitary_choi(v)?)
    }

    /// Unitaries of the two slots, when both are unitary channels.
    pub fn slot_unitaries(&self) -> Result<(CMatrix, CMatrix)> {
        let one = |g: &DenseOperator| -> Result<CMatrix> {
            let mut k = kraus_from_choi(g, self.target_dim, TOL)?;
            if k.len() != 1 {
                return Err(Error::Precondition("slot is not a unitary channel".into()));
            }
            Ok(k.remove(0))
        };
        Ok((one(&self.gate_a)?, one(&self.gate_b)?))
    }
}

fn gate_dim(g: &DenseOperator) -> Result<usize> {
    let d = g.dims();
    if d.len() != 2 || d[0] != d[1] {
        return Err(Error::DimensionMismatch("gate Choi must be on (in, out) of equal dimension".into()));
    }
    Ok(d[0])
}

fn unitary_choi(u: &CMatrix) -> Result<DenseOperator> {
    let dev = u.unitary_deviation();
    if !u.is_square() || dev > TOL {
        return Err(Error::NotUnitary(dev));
    }
    let d = u.rows();
    choi_from_kraus(
        std::slice::from_ref(u),
        vec![SpaceLabel::new("t_in", d)],
        vec![SpaceLabel::new("t_out", d)],
    )
}

fn spaces(d: usize) -> (Vec<SpaceLabel>, Vec<SpaceLabel>) {
    (
        vec![SpaceLabel::new("c_in", 2), SpaceLabel::new("t_in", d)],
        vec![SpaceLabel::new("c_out", 2), SpaceLabel::new("t_out", d)],
    )
}

/// Choi operator of the induced channel on control (x) target, factors
/// `c_in, t_in, c_out, t_out`. Kraus operators are
/// `|0><0| (x) B_j A_i + |1><1| (x) A_i B_j`.
pub fn switch_supermap(s: &SwitchInstance) -> Result<DenseOperator> {
    let d = s.target_dim;
    let ka = kraus_from_choi(&s.gate_a, d, TOL)?;
    let kb = kraus_from_choi(&s.gate_b, d, TOL)?;
    let p0 = CMatrix::outer(&basis_vector(2, 0));
    let p1 = CMatrix::outer(&basis_vector(2, 1));
    let mut kraus = Vec::new();
    for a in &ka {
        for b in &kb {
            kraus.push(p0.kron(&b.mul(a)).add(&p1.kron(&a.mul(b))));
        }
    }
    let (inputs, outputs) = spaces(d);
    choi_from_kraus(&kraus, inputs, outputs)
}

/// Output on control (x) target for the instance's control and target
/// state `target`.
pub fn switch_output(s: &SwitchInstance, target: &CMatrix) -> Result<CMatrix> {
    let d = s.target_dim;
    let (inputs, _) = spaces(d);
    let rho = DenseOperator::new(inputs, s.control.kron(target))?;
    Ok(switch_supermap(s)?.contract(&rho)?.into_matrix())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Commutation {
    Commute,
    Anticommute,
    /// Neither; the probability is then not deterministic.
    Neither,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    pub p_plus: f64,
    pub relation: Commutation,
}

/// Control `|+>`, target `|0>`; probability of finding the control in `|+>`.
pub fn switch_discriminate(u: &CMatrix, v: &CMatrix) -> Result<Discrimination> {
    let plus = CMatrix::from_fn(2, 2, |_, _| C64::new(0.5, 0.0));
    let s = SwitchInstance::unitary(plus.clone(), u, v)?;
    let d = s.target_dim;
    let out = switch_output(&s, &CMatrix::outer(&basis_vector(d, 0)))?;
    let p_plus = plus.kron(&CMatrix::identity(d)).mul(&out).trace().re;
    let uv = u.mul(v);
    let vu = v.mul(u);
    let relation = if uv.max_abs_diff(&vu) <= TOL {
        Commutation::Commute
    } else if uv.max_abs_diff(&vu.scale_real(-1.0)) <= TOL {
        Commutation::Anticommute
    } else {
        Commutation::Neither
    };
    Ok(Discrimination { p_plus, relation })
}

/// Operator on `control (x) target (x) flags` applying `gate` to the target
/// and flipping flag `flag` when the control is `branch`.
fn visit(branch: usize, gate: &CMatrix, flag: usize, n_flags: usize) -> CMatrix {
    let d = gate.rows();
    let mut flip = CMatrix::identity(1);
    let mut idle = CMatrix::identity(1);
    for f in 0..n_flags {
        flip = flip.kron(&if f == flag { pauli_x() } else { CMatrix::identity(2) });
        idle = idle.kron(&CMatrix::identity(2));
    }
    let on = CMatrix::outer(&basis_vector(2, branch));
    let off = CMatrix::outer(&basis_vector(2, 1 - branch));
    on.kron(gate).kron(&flip).add(&off.kron(&CMatrix::identity(d)).kron(&idle))
}

/// Runs a routing over regions; each slot is `(branch, gate, region)`.
fn route(s: &SwitchInstance, target: &CMatrix, slots: &[(usize, &CMatrix, usize)], n_flags: usize) -> Result<CMatrix> {
    let d = s.target_dim;
    let mut flags0 = vec![ZERO; 1 << n_flags];
    flags0[0] = C64::new(1.0, 0.0);
    let mut rho = s.control.kron(target).kron(&CMatrix::outer(&flags0));
    for &(branch, gate, region) in slots {
        let g = visit(branch, gate, region, n_flags);
        rho = g.mul(&rho).mul(&g.adjoint());
    }
    let mut factors = vec![SpaceLabel::new("c", 2), SpaceLabel::new("t", d)];
    factors.extend((0..n_flags).map(|k| SpaceLabel::new(format!("f{k}"), 2)));
    let full = DenseOperator::new(factors, rho)?;
    Ok(partial_trace(&full, &["c", "t"])?.into_matrix())
}

fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let (vals, _) = a.sub(b).eigh();
    0.5 * vals.iter().map(|l| l.abs()).sum::<f64>()
}

fn max_deviation(s: &SwitchInstance, slots: impl Fn(&CMatrix, &CMatrix) -> Result<(Vec<(usize, CMatrix, usize)>, usize)>) -> Result<f64> {
    let (u, v) = s.slot_unitaries()?;
    let (plan, n_flags) = slots(&u, &v)?;
    let plan_ref: Vec<(usize, &CMatrix, usize)> = plan.iter().map(|(b, g, r)| (*b, g, *r)).collect();
    let mut worst: f64 = 0.0;
    for target in tomographic_states(s.target_dim) {
        let fine = route(s, &target, &plan_ref, n_flags)?;
        let coarse = switch_output(s, &target)?;
        worst = worst.max(trace_distance(&fine, &coarse));
    }
    Ok(worst)
}

/// Correlated-path circuit: one region per gate, each holding a "visited"
/// flag. Over four time slots branch 0 visits A then B and branch 1 visits
/// B then A; both branches end with both flags set, so the regions carry no
/// which-path record. Returns the largest trace distance to the switch
/// output over a spanning set of target inputs.
pub fn fine_grained_equivalence(s: &SwitchInstance) -> Result<f64> {
    max_deviation(s, |u, v| {
        Ok((
            vec![(0, u.clone(), 0), (1, v.clone(), 1), (0, v.clone(), 1), (1, u.clone(), 0)],
            2,
        ))
    })
}

/// Same routing with a separate copy of each gate per branch (four regions).
/// The flags then record the path and destroy control coherence.
pub fn uncorrelated_copies_deviation(s: &SwitchInstance) -> Result<f64> {
    max_deviation(s, |u, v| {
        Ok((
            vec![(0, u.clone(), 0), (1, v.clone(), 1), (0, v.clone(), 2), (1, u.clone(), 3)],
            4,
        ))
    })
}

/// The switch as a process on labs `A`, `B` (qubit slots) and `F` (global
/// future receiving the control, trivial output). Target starts in `|0>`
/// and the control in `|+>`; the target's final system is discarded:
///
/// ```text
/// |w> = (|0>_{A_in} |1>>_{A_out B_in} |1>>_{B_out T} |0>_{F_in}
///      + |0>_{B_in} |1>>_{B_out A_in} |1>>_{A_out T} |1>_{F_in}) / sqrt2
/// W = Tr_T |w><w|
/// ```
pub fn switch_w_matrix() -> ProcessMatrix {
    let a = Lab::qubit("A");
    let b = Lab::qubit("B");
    let f = Lab::qudit("F", 2, 1);
    // index order: A_in, A_out, B_in, B_out, F_in, T
    let dims = [2usize, 2, 2, 2, 2, 2];
    let n: usize = dims.iter().product();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = vec![ZERO; n];
    for ai in 0..2 {
        for ao in 0..2 {
            for bi in 0..2 {
                for bo in 0..2 {
                    for t in 0..2 {
                        let idx = |fc: usize| ((((ai * 2 + ao) * 2 + bi) * 2 + bo) * 2 + fc) * 2 + t;
                        if ai == 0 && ao == bi && bo == t {
                            w[idx(0)] += C64::new(h, 0.0);
                        }
                        if bi == 0 && bo == ai && ao == t {
                            w[idx(1)] += C64::new(h, 0.0);
                        }
                    }
                }
            }
        }
    }
    let mut factors: Vec<SpaceLabel> = a.spaces();
    factors.extend(b.spaces());
    factors.push(f.in_space.clone());
    factors.push(SpaceLabel::new("T", 2));
    let full = DenseOperator::new(factors, CMatrix::outer(&w)).expect("shape");
    let keep = ["A_in", "A_out", "B_in", "B_out", "F_in"];
    let reduced = partial_trace(&full, &keep).expect("labels");
    let mut factors = reduced.factors().to_vec();
    factors.push(f.out_space.clone());
    let w = DenseOperator::new(factors, reduced.into_matrix()).expect("trivial output");
    ProcessMatrix::new(vec![a, b, f], w).expect("labs")
}
