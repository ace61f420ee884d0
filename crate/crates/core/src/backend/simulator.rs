//! Twirled Pauli-stochastic noise simulator.
//!
//! Clifford circuits run on a Pauli-frame engine: the observable's Heisenberg
//! frame at every noise location is computed once per twirl, and each shot
//! flips the outcome sign for every sampled error that anticommutes with the
//! frame at its location. Non-Clifford circuits run dense statevector
//! trajectories with the sampled errors inserted; error-free shots and
//! repeated error patterns reuse cached expectations.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use super::exact::{locations_after, noisy_pauli_propagation, NoiseLocation};
use super::noise::{local_anticommutes, CompiledNoise};
use super::{
    execution_order, Backend, BackendError, ExecutionPlan, Job, NoiseModel, NoisyEstimate,
};
use crate::circuit::{quarter_turn_gates, Circuit, GateOp};
use crate::pauli::{CliffordGate, PauliOp, PauliString};
use crate::rng;
use crate::statevector::StateVector;

/// Default qubit cap for non-Clifford trajectory simulation.
pub const DEFAULT_TRAJECTORY_QUBITS: usize = 14;

/// Memory budget for trajectory checkpoints, in bytes.
const CHECKPOINT_BUDGET: usize = 64 << 20;

#[derive(Debug, Clone)]
pub struct SimulatorBackend {
    noise: NoiseModel,
    compiled: CompiledNoise,
    trajectory_qubit_cap: usize,
    exact_term_cap: usize,
    workers: usize,
}

impl SimulatorBackend {
    pub fn new(noise: NoiseModel) -> Result<Self, BackendError> {
        let compiled = noise.compile()?;
        Ok(SimulatorBackend {
            noise,
            compiled,
            trajectory_qubit_cap: DEFAULT_TRAJECTORY_QUBITS,
            exact_term_cap: 1 << 22,
            workers: 1,
        })
    }

    pub fn noiseless() -> Self {
        Self::new(NoiseModel::noiseless()).expect("noiseless model is valid")
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn with_trajectory_cap(mut self, cap: usize) -> Self {
        self.trajectory_qubit_cap = cap.min(crate::statevector::MAX_DENSE_QUBITS);
        self
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Engine {
    Frame,
    Trajectory,
}

/// Per-job data shared across twirls.
struct Prepared<'a> {
    job: &'a Job,
    engine: Engine,
    locs: Vec<NoiseLocation>,
    /// First location index of every op.
    loc_start: Vec<usize>,
    one_locs: Vec<u32>,
    two_locs: Vec<u32>,
    support: Vec<usize>,
}

impl<'a> Prepared<'a> {
    fn new(job: &'a Job, engine: Engine) -> Self {
        let mut locs = Vec::new();
        let mut loc_start = Vec::with_capacity(job.circuit.ops().len());
        for op in job.circuit.ops() {
            loc_start.push(locs.len());
            locs.extend(locations_after(op));
        }
        let one_locs = (0..locs.len())
            .filter(|&l| !locs[l].two_qubit)
            .map(|l| l as u32)
            .collect();
        let two_locs = (0..locs.len())
            .filter(|&l| locs[l].two_qubit)
            .map(|l| l as u32)
            .collect();
        Prepared {
            support: job.observable.support(),
            job,
            engine,
            locs,
            loc_start,
            one_locs,
            two_locs,
        }
    }
}

/// Twirl Paulis `(before, after)` for each two-qubit gate, in circuit order.
type Twirl = Vec<([PauliOp; 2], [PauliOp; 2])>;

const LETTERS: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];

fn sample_twirl<R: Rng>(circuit: &Circuit, rng: &mut R) -> Twirl {
    let mut out = Vec::new();
    for op in circuit.ops() {
        let local_gate = match op {
            GateOp::Clifford(CliffordGate::CZ(..)) => CliffordGate::CZ(0, 1),
            GateOp::Clifford(CliffordGate::CX(..)) => CliffordGate::CX(0, 1),
            _ => continue,
        };
        let before = [
            LETTERS[rng.random_range(0..4)],
            LETTERS[rng.random_range(0..4)],
        ];
        // For self-inverse G, G·T·G† equals the Heisenberg image G†·T·G.
        let mut after = PauliString::from_ops(&before, false);
        after.conjugate_in_place(&local_gate);
        let ops = after.ops();
        out.push((before, [ops[0], ops[1]]));
    }
    out
}

fn pauli_gate(q: usize, op: PauliOp) -> Option<CliffordGate> {
    match op {
        PauliOp::I => None,
        PauliOp::X => Some(CliffordGate::X(q)),
        PauliOp::Y => Some(CliffordGate::Y(q)),
        PauliOp::Z => Some(CliffordGate::Z(q)),
    }
}

fn local_gates(qubits: [usize; 2], ops: [PauliOp; 2]) -> impl Iterator<Item = CliffordGate> {
    pauli_gate(qubits[0], ops[0])
        .into_iter()
        .chain(pauli_gate(qubits[1], ops[1]))
}

fn for_each_event<R: Rng>(count: usize, p: f64, rng: &mut R, mut f: impl FnMut(usize, &mut R)) {
    if p <= 0.0 || count == 0 {
        return;
    }
    if p >= 1.0 {
        for i in 0..count {
            f(i, rng);
        }
        return;
    }
    let ln_q = (-p).ln_1p();
    let mut i = 0usize;
    loop {
        let u = 1.0 - rng.random::<f64>();
        let skip = (u.ln() / ln_q).floor();
        if skip >= (count - i) as f64 {
            return;
        }
        i += skip as usize;
        f(i, rng);
        i += 1;
        if i >= count {
            return;
        }
    }
}

/// Sampled errors of one shot as `(location, error index)`, sorted by location.
fn sample_events<R: Rng>(
    prep: &Prepared,
    noise: &CompiledNoise,
    rng: &mut R,
    out: &mut Vec<(u32, u8)>,
) {
    out.clear();
    for (locs, ch) in [(&prep.one_locs, &noise.one), (&prep.two_locs, &noise.two)] {
        for_each_event(locs.len(), ch.total, rng, |i, r| {
            let e = ch.pick(r.random::<f64>());
            out.push((locs[i], e as u8));
        });
    }
    out.sort_unstable();
}

fn readout_flips<R: Rng>(support: &[usize], noise: &NoiseModel, rng: &mut R) -> bool {
    let mut flip = false;
    for &q in support {
        let r = noise.readout.flip(q);
        if r > 0.0 && rng.random::<f64>() < r {
            flip = !flip;
        }
    }
    flip
}

impl SimulatorBackend {
    fn run_unit(
        &self,
        prep: &Prepared,
        plan: &ExecutionPlan,
        job_index: usize,
        twirl_index: usize,
    ) -> i64 {
        let mut rng = rng::stream(
            plan.seed,
            &[0x6e6f_6973, job_index as u64, twirl_index as u64],
        );
        let twirl = sample_twirl(&prep.job.circuit, &mut rng);
        match prep.engine {
            Engine::Frame => self.frame_unit(prep, &twirl, plan.shots_per_twirl, &mut rng),
            Engine::Trajectory => {
                self.trajectory_unit(prep, &twirl, plan.shots_per_twirl, &mut rng)
            }
        }
    }

    fn frame_unit<R: Rng>(&self, prep: &Prepared, twirl: &Twirl, shots: usize, rng: &mut R) -> i64 {
        let circuit = &prep.job.circuit;
        let mut frame = prep.job.observable.clone();
        let mut local = vec![[PauliOp::I; 2]; prep.locs.len()];
        let mut tw = twirl.len();
        for (i, op) in circuit.ops().iter().enumerate().rev() {
            let start = prep.loc_start[i];
            let n_locs = locations_after(op).len();
            let twirled = matches!(
                op,
                GateOp::Clifford(CliffordGate::CZ(..) | CliffordGate::CX(..))
            );
            if twirled {
                tw -= 1;
                for g in local_gates(prep.locs[start].qubits, twirl[tw].1) {
                    frame.conjugate_in_place(&g);
                }
            }
            for l in start..start + n_locs {
                local[l] = prep.locs[l].local(&frame);
            }
            match op {
                GateOp::Clifford(g) => frame.conjugate_in_place(g),
                GateOp::Rotation(r) => {
                    let turns = r
                        .quarter_turns()
                        .expect("frame engine requires a Clifford circuit");
                    for g in quarter_turn_gates(&r.generator, turns.rem_euclid(4))
                        .iter()
                        .rev()
                    {
                        frame.conjugate_in_place(g);
                    }
                }
            }
            if twirled {
                for g in local_gates(prep.locs[start].qubits, twirl[tw].0) {
                    frame.conjugate_in_place(&g);
                }
            }
        }
        let ideal = frame.expectation_on_stabilizer_input(circuit.input_kind());

        let mut sum = 0i64;
        let mut events = Vec::new();
        for _ in 0..shots {
            if ideal == 0 {
                sum += if rng.random::<bool>() { 1 } else { -1 };
                continue;
            }
            sample_events(prep, &self.compiled, rng, &mut events);
            let mut negative = ideal < 0;
            for &(l, e) in &events {
                let loc = &prep.locs[l as usize];
                let err = self.compiled.channel(loc.two_qubit).errors[e as usize].0;
                negative ^= local_anticommutes(err, local[l as usize]);
            }
            negative ^= readout_flips(&prep.support, &self.noise, rng);
            sum += if negative { -1 } else { 1 };
        }
        sum
    }

    fn trajectory_unit<R: Rng>(
        &self,
        prep: &Prepared,
        twirl: &Twirl,
        shots: usize,
        rng: &mut R,
    ) -> i64 {
        let sim = Trajectory::new(prep, twirl);
        let mut cache: HashMap<Vec<(u32, u8)>, f64> = HashMap::new();
        let mut events = Vec::new();
        let mut sum = 0i64;
        for _ in 0..shots {
            sample_events(prep, &self.compiled, rng, &mut events);
            let value = if events.is_empty() {
                sim.ideal
            } else if let Some(&v) = cache.get(&events) {
                v
            } else {
                let v = sim.run_with_errors(prep, &self.compiled, &events);
                cache.insert(events.clone(), v);
                v
            };
            let p_plus = ((1.0 + value) / 2.0).clamp(0.0, 1.0);
            let mut negative = rng.random::<f64>() >= p_plus;
            negative ^= readout_flips(&prep.support, &self.noise, rng);
            sum += if negative { -1 } else { 1 };
        }
        sum
    }
}

/// One instruction of a twirled circuit.
enum Step {
    Op(usize),
    Pauli(CliffordGate),
    Noise(u32),
}

/// A twirled non-Clifford circuit with ideal-state checkpoints.
struct Trajectory {
    steps: Vec<Step>,
    ops: Vec<GateOp>,
    /// `(step index, state)` just before the noise step of every `stride`-th location.
    checkpoints: Vec<(usize, StateVector)>,
    stride: usize,
    ideal: f64,
    observable: PauliString,
}

impl Trajectory {
    fn new(prep: &Prepared, twirl: &Twirl) -> Self {
        let circuit = &prep.job.circuit;
        let mut steps = Vec::new();
        let mut tw = 0;
        for (i, op) in circuit.ops().iter().enumerate() {
            let start = prep.loc_start[i];
            let n_locs = locations_after(op).len();
            let twirled = matches!(
                op,
                GateOp::Clifford(CliffordGate::CZ(..) | CliffordGate::CX(..))
            );
            if twirled {
                steps.extend(local_gates(prep.locs[start].qubits, twirl[tw].0).map(Step::Pauli));
            }
            steps.push(Step::Op(i));
            steps.extend((start..start + n_locs).map(|l| Step::Noise(l as u32)));
            if twirled {
                steps.extend(local_gates(prep.locs[start].qubits, twirl[tw].1).map(Step::Pauli));
                tw += 1;
            }
        }
        let n = circuit.num_qubits();
        let state_bytes = (1usize << n) * 16;
        let stride = (prep.locs.len() * state_bytes)
            .div_ceil(CHECKPOINT_BUDGET)
            .max(1);
        let ops = circuit.ops().to_vec();
        let mut state = StateVector::new(n, circuit.input_kind());
        let mut checkpoints = Vec::new();
        for (si, step) in steps.iter().enumerate() {
            match step {
                Step::Op(i) => state.apply_op(&ops[*i]),
                Step::Pauli(g) => state.apply_clifford(g),
                Step::Noise(l) => {
                    if (*l as usize).is_multiple_of(stride) {
                        checkpoints.push((si, state.clone()));
                    }
                }
            }
        }
        let observable = prep.job.observable.clone();
        let ideal = state.expectation(&observable);
        Trajectory {
            steps,
            ops,
            checkpoints,
            stride,
            ideal,
            observable,
        }
    }

    fn run_with_errors(&self, prep: &Prepared, noise: &CompiledNoise, events: &[(u32, u8)]) -> f64 {
        let first = events[0].0 as usize;
        let (start, state) = &self.checkpoints[first / self.stride];
        let mut state = state.clone();
        let mut next = 0;
        for step in &self.steps[*start..] {
            match step {
                Step::Op(i) => state.apply_op(&self.ops[*i]),
                Step::Pauli(g) => state.apply_clifford(g),
                Step::Noise(l) => {
                    while next < events.len() && events[next].0 == *l {
                        let loc = &prep.locs[*l as usize];
                        let err = noise.channel(loc.two_qubit).errors[events[next].1 as usize].0;
                        for g in local_gates(loc.qubits, err) {
                            state.apply_clifford(&g);
                        }
                        next += 1;
                    }
                }
            }
        }
        state.expectation(&self.observable)
    }
}

impl Backend for SimulatorBackend {
    fn name(&self) -> &str {
        "pauli-twirled-simulator"
    }

    fn submit_batch(
        &self,
        jobs: &[Job],
        plan: &ExecutionPlan,
    ) -> Vec<Result<NoisyEstimate, BackendError>> {
        if let Err(e) = plan.validate() {
            return jobs.iter().map(|_| Err(e.clone())).collect();
        }
        let mut results: Vec<Option<Result<NoisyEstimate, BackendError>>> = vec![None; jobs.len()];
        let mut prepared: Vec<Option<Prepared>> = Vec::with_capacity(jobs.len());
        for (j, job) in jobs.iter().enumerate() {
            let n = job.circuit.num_qubits();
            if job.observable.num_qubits() != n {
                results[j] = Some(Err(crate::pauli::PauliError::DimensionMismatch {
                    left: n,
                    right: job.observable.num_qubits(),
                }
                .into()));
                prepared.push(None);
                continue;
            }
            if plan.infinite_shots {
                results[j] = Some(
                    noisy_pauli_propagation(
                        &job.circuit,
                        &job.observable,
                        &self.noise,
                        self.exact_term_cap,
                    )
                    .map(NoisyEstimate::exact),
                );
                prepared.push(None);
                continue;
            }
            let engine = if job.circuit.is_clifford() {
                Engine::Frame
            } else if n <= self.trajectory_qubit_cap {
                Engine::Trajectory
            } else {
                results[j] = Some(Err(BackendError::Capability {
                    num_qubits: n,
                    cap: self.trajectory_qubit_cap,
                }));
                prepared.push(None);
                continue;
            };
            prepared.push(Some(Prepared::new(job, engine)));
        }

        let units: Vec<(usize, usize)> =
            execution_order(jobs.len(), plan.num_twirls, plan.interleave)
                .into_iter()
                .filter(|(j, _)| prepared[*j].is_some())
                .collect();
        let run = |&(j, t): &(usize, usize)| {
            self.run_unit(prepared[j].as_ref().expect("prepared"), plan, j, t)
        };
        let sums: Vec<i64> = if self.workers > 1 {
            match rayon::ThreadPoolBuilder::new()
                .num_threads(self.workers)
                .build()
            {
                Ok(pool) => pool.install(|| units.par_iter().map(run).collect()),
                Err(_) => units.iter().map(run).collect(),
            }
        } else {
            units.iter().map(run).collect()
        };
        let mut totals = vec![0i64; jobs.len()];
        for (&(j, _), s) in units.iter().zip(sums) {
            totals[j] += s;
        }
        results
            .into_iter()
            .enumerate()
            .map(|(j, r)| {
                r.unwrap_or_else(|| {
                    Ok(NoisyEstimate::from_outcome_sum(
                        totals[j],
                        plan.total_shots(),
                    ))
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::InputKind;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn bell_like() -> Circuit {
        let mut c = Circuit::new(3);
        c.push_clifford(CliffordGate::H(0)).unwrap();
        c.push_clifford(CliffordGate::CX(0, 1)).unwrap();
        c.push_clifford(CliffordGate::CZ(1, 2)).unwrap();
        c.push_clifford(CliffordGate::S(2)).unwrap();
        c
    }

    #[test]
    fn noiseless_clifford_is_exact_per_shot() {
        let be = SimulatorBackend::noiseless();
        let plan = ExecutionPlan::new(3, 50, 1);
        let e = be.estimate(&bell_like(), &p("ZZI"), &plan).unwrap();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.total_shots, 150);
    }

    #[test]
    fn frame_engine_matches_analytic_fidelity() {
        let noise = NoiseModel::depolarizing(0.05, 0.01, 0.02);
        let be = SimulatorBackend::new(noise.clone()).unwrap();
        let c = bell_like();
        let o = p("ZZI");
        let exact = noisy_pauli_propagation(&c, &o, &noise, 100).unwrap();
        let mut plan = ExecutionPlan::new(20, 5000, 7);
        let e = be.estimate(&c, &o, &plan).unwrap();
        assert!(
            (e.mean - exact).abs() < 5.0 * e.std_error,
            "{} vs {exact}",
            e.mean
        );
        plan.infinite_shots = true;
        assert_eq!(be.estimate(&c, &o, &plan).unwrap().mean, exact);
    }

    #[test]
    fn trajectories_match_exact_propagation() {
        let noise = NoiseModel::depolarizing(0.08, 0.02, 0.01);
        let be = SimulatorBackend::new(noise.clone()).unwrap();
        let mut c = bell_like();
        c.push_rx(0, 0.3).unwrap();
        c.push_clifford(CliffordGate::CZ(0, 2)).unwrap();
        c.push_rotation(p("YIX"), 0.7).unwrap();
        let o = p("XZY");
        let exact = noisy_pauli_propagation(&c, &o, &noise, 1000).unwrap();
        let e = be
            .estimate(&c, &o, &ExecutionPlan::new(40, 1000, 3))
            .unwrap();
        assert!(
            (e.mean - exact).abs() < 5.0 * e.std_error,
            "{} vs {exact}",
            e.mean
        );
    }

    #[test]
    fn off_diagonal_frame_gives_fair_coin() {
        let be = SimulatorBackend::noiseless();
        let e = be
            .estimate(&bell_like(), &p("XII"), &ExecutionPlan::new(4, 2500, 2))
            .unwrap();
        assert!(e.mean.abs() < 5.0 * e.std_error);
    }

    #[test]
    fn capability_and_dimension_errors_are_per_job() {
        let be = SimulatorBackend::noiseless().with_trajectory_cap(2);
        let mut big = Circuit::with_input(3, InputKind::AllZero);
        big.push_rx(0, 0.2).unwrap();
        let jobs = vec![
            Job::new(big, p("ZII")),
            Job::new(bell_like(), p("ZZ")),
            Job::new(bell_like(), p("ZZI")),
        ];
        let r = be.submit_batch(&jobs, &ExecutionPlan::new(1, 10, 0));
        assert!(matches!(
            r[0],
            Err(BackendError::Capability {
                num_qubits: 3,
                cap: 2
            })
        ));
        assert!(matches!(r[1], Err(BackendError::Pauli(_))));
        assert_eq!(r[2].as_ref().unwrap().mean, 1.0);
    }

    #[test]
    fn interleaving_and_batching_do_not_change_results() {
        let be = SimulatorBackend::new(NoiseModel::depolarizing(0.05, 0.01, 0.02)).unwrap();
        let mut c2 = bell_like();
        c2.push_rx(1, 0.4).unwrap();
        let jobs = vec![Job::new(bell_like(), p("ZZI")), Job::new(c2, p("ZZZ"))];
        let mut plan = ExecutionPlan::new(5, 100, 11);
        let a = be.submit_batch(&jobs, &plan);
        plan.interleave = true;
        let b = be.submit_batch(&jobs, &plan);
        assert_eq!(a, b);
        let single = be.submit_batch(&jobs[..1], &plan);
        assert_eq!(single[0], a[0]);
        let parallel = be.clone().with_workers(3).submit_batch(&jobs, &plan);
        assert_eq!(parallel, a);
    }
}
