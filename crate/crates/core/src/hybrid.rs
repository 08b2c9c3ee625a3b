//! Krylov phases alternating with flip-flop controlled MIIO sweeps.
//!
//! Each visit to the Krylov phase runs `arnoldi_runs` cycles starting from
//! the current iterate. The splitting phase then refines that iterate until
//! the residual stalls `maxit` times, at which point control returns to the
//! Krylov phase.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::krylov::{adaptive_garnoldi_cycle, check_krylov, finish_vector, AdaptiveWeightState, ThickRestart};
use crate::operator::{Session, TransitionOperator};
use crate::report::{History, Method, Phase, PhaseRecord, SolveReport};
use crate::splitting::{check_start, Iterate, SplittingParams};
use crate::vecops;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipFlopParams {
    /// Outer ratio threshold.
    pub alpha1: f64,
    /// Inner ratio threshold.
    pub alpha2: f64,
    /// Stall budget per splitting visit.
    pub maxit: usize,
    /// Krylov cycles per visit.
    pub arnoldi_runs: usize,
    pub m: usize,
    /// Retained Ritz vectors; ignored by the weighted variant.
    pub p: usize,
    /// Reset the inner residual state `d = d₀ = 1` on every splitting visit.
    pub reset_d0: bool,
    pub mv_budget: u64,
    pub trace: bool,
}

impl FlipFlopParams {
    /// `α1 = α2 = α − 0.1`, `maxit = 10`, two Krylov cycles, `m = 8`, `p = 4`.
    pub fn paper(alpha: f64) -> Self {
        Self {
            alpha1: alpha - 0.1,
            alpha2: alpha - 0.1,
            maxit: 10,
            arnoldi_runs: 2,
            m: 8,
            p: 4,
            reset_d0: false,
            mv_budget: 10_000_000,
            trace: false,
        }
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(invalid(format!("{name} = {r} must lie in (0, 1)")));
            }
        }
        if self.maxit == 0 {
            return Err(invalid("maxit must be at least 1"));
        }
        if !(1..=3).contains(&self.arnoldi_runs) {
            return Err(invalid("arnoldi_runs must be 1, 2 or 3"));
        }
        if self.p == 0 || self.p >= self.m {
            return Err(invalid(format!("p = {} must lie in 1..{}", self.p, self.m)));
        }
        if self.mv_budget == 0 {
            return Err(invalid("Mv budget must be positive"));
        }
        Ok(())
    }
}

enum Accelerator<'s, 'a> {
    Thick(ThickRestart<'s, 'a>),
    Weighted(AdaptiveWeightState),
}

struct KrylovVisit {
    x: Vec<f64>,
    residual: f64,
    converged: bool,
    cycles: usize,
}

struct Driver<'s, 'a> {
    session: &'s Session<'a>,
    sp: &'s SplittingParams,
    ff: &'s FlipFlopParams,
    history: History,
    trace: Vec<PhaseRecord>,
    iterations: usize,
    // flip-flop state shared across splitting visits
    r: f64,
    d: f64,
    d0: f64,
}

impl<'s, 'a> Driver<'s, 'a> {
    fn over_budget(&self) -> bool {
        self.session.mv() >= self.ff.mv_budget
    }

    fn record(&mut self, phase: Phase, mv_start: u64, entry: f64, exit: f64, restarts: usize) {
        if self.ff.trace {
            self.trace.push(PhaseRecord {
                phase,
                mv: self.session.mv() - mv_start,
                entry_residual: entry,
                exit_residual: exit,
                restarts,
            });
        }
    }

    fn krylov(&mut self, acc: &mut Accelerator<'s, 'a>, x: Vec<f64>) -> Result<KrylovVisit> {
        let mv_start = self.session.mv();
        let entry = self.r;
        let alpha = self.sp.alpha;
        let tol = self.sp.tau;
        let mut visit = KrylovVisit {
            x,
            residual: f64::INFINITY,
            converged: false,
            cycles: 0,
        };
        if let Accelerator::Thick(tr) = acc {
            tr.restart_from(&visit.x)?;
        }
        for _ in 0..self.ff.arnoldi_runs {
            let (x, res, done) = match acc {
                Accelerator::Thick(tr) => {
                    let step = tr.cycle()?;
                    (step.ritz_vector, step.ritz.residual_estimate, step.converged)
                }
                Accelerator::Weighted(state) => {
                    let step = adaptive_garnoldi_cycle(self.session, alpha, &visit.x, self.ff.m, state)?;
                    let mut x = step.x;
                    vecops::scale(1.0 / vecops::norm2(&x), &mut x);
                    (x, step.residual_norm, step.residual_norm < tol)
                }
            };
            if x.iter().any(|v| !v.is_finite()) {
                return Err(crate::error::Error::Solver("Krylov phase produced a non-finite vector".into()));
            }
            visit.x = x;
            visit.residual = res;
            visit.converged = done;
            visit.cycles += 1;
            self.history.push(self.session.mv(), res);
            if done || self.over_budget() {
                break;
            }
        }
        self.iterations += visit.cycles;
        self.r = visit.residual;
        self.record(Phase::Krylov, mv_start, entry, visit.residual, 0);
        Ok(visit)
    }

    /// Flip-flop controlled splitting sweeps. Returns the new iterate, a unit
    /// sum vector.
    fn splitting(&mut self, x: Vec<f64>) -> Vec<f64> {
        let sp = self.sp;
        let ff = self.ff;
        let mv_start = self.session.mv();
        if ff.reset_d0 {
            self.d = 1.0;
            self.d0 = 1.0;
        }
        let mut it = Iterate {
            session: self.session,
            alpha: sp.alpha,
            z: vec![0.0; x.len()],
            x,
        };
        let mut entry = None;
        let mut restart = 0;
        while restart < ff.maxit && self.r > sp.tau && !self.over_budget() {
            it.rescale();
            self.r = it.residual();
            self.history.push(self.session.mv(), self.r);
            entry.get_or_insert(self.r);
            let mut r0 = self.r;
            let r1 = self.r;
            let mut ratio = 0.0;
            while ratio < ff.alpha1 && self.r > sp.tau && !self.over_budget() {
                for _ in 0..sp.m1 {
                    it.power_step();
                }
                let f = it.splitting_rhs(sp.beta);
                for _ in 0..sp.m2 {
                    it.splitting_step(&f, sp.beta);
                }
                let mut ratio1 = 0.0;
                let mut inner = 0;
                while ratio1 < ff.alpha2 && self.d > sp.eta && inner < sp.max_inner {
                    it.splitting_step(&f, sp.beta);
                    self.d = it.inner_residual(&f, sp.beta);
                    ratio1 = self.d / self.d0;
                    self.d0 = self.d;
                    inner += 1;
                }
                self.r = it.residual();
                self.history.push(self.session.mv(), self.r);
                ratio = self.r / r0;
                r0 = self.r;
                self.iterations += 1;
            }
            it.power_combine();
            if self.r / r1 > ff.alpha1 {
                restart += 1;
            }
        }
        let entry = entry.unwrap_or(self.r);
        let exit = self.r;
        self.record(Phase::Splitting, mv_start, entry, exit, restart);
        it.x
    }
}

fn hybrid_solve(
    op: &TransitionOperator,
    sp: &SplittingParams,
    ff: &FlipFlopParams,
    x0: &[f64],
    method: Method,
) -> Result<SolveReport> {
    sp.validate()?;
    ff.validate()?;
    check_krylov(ff.m, Some(ff.p), sp.tau)?;
    check_start(op, x0)?;
    let clock = Instant::now();
    let session = op.session();
    let mut acc = match method {
        Method::ArnoldiMiio => Accelerator::Thick(ThickRestart::new(&session, sp.alpha, ff.m, ff.p, sp.tau)),
        _ => Accelerator::Weighted(AdaptiveWeightState::euclidean(op.n())),
    };
    let mut driver = Driver {
        session: &session,
        sp,
        ff,
        history: History::default(),
        trace: Vec::new(),
        iterations: 0,
        r: 1.0,
        d: 1.0,
        d0: 1.0,
    };
    let mut x = x0.to_vec();
    let converged = loop {
        let visit = driver.krylov(&mut acc, x)?;
        if visit.converged {
            x = visit.x;
            break true;
        }
        if driver.over_budget() {
            x = visit.x;
            break false;
        }
        x = driver.splitting(visit.x);
        if driver.r < sp.tau {
            break true;
        }
        if driver.over_budget() {
            break false;
        }
    };
    Ok(SolveReport {
        method,
        x: finish_vector(x)?,
        iterations: driver.iterations,
        mv: session.mv(),
        cpu_seconds: clock.elapsed().as_secs_f64(),
        residual_history: driver.history.into_inner(),
        converged,
        trace: driver.trace,
    })
}

/// Thick-restart Arnoldi alternating with MIIO sweeps. `iterations` counts
/// Krylov cycles plus MIIO passes.
pub fn arnoldi_miio_solve(
    op: &TransitionOperator,
    sp: &SplittingParams,
    ff: &FlipFlopParams,
    x0: &[f64],
) -> Result<SolveReport> {
    hybrid_solve(op, sp, ff, x0, Method::ArnoldiMiio)
}

/// Adaptive weighted Arnoldi alternating with MIIO sweeps. The weights
/// persist across Krylov visits.
pub fn garnoldi_miio_solve(
    op: &TransitionOperator,
    sp: &SplittingParams,
    ff: &FlipFlopParams,
    x0: &[f64],
) -> Result<SolveReport> {
    hybrid_solve(op, sp, ff, x0, Method::GArnoldiMiio)
}

/// Phase log of a traced hybrid run; empty otherwise.
pub fn flip_flop_trace(report: &SolveReport) -> &[PhaseRecord] {
    &report.trace
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::dense_oracle_pagerank;
    use crate::matrix::CompressedSparseMatrix;
    use crate::splitting::miio_solve;
    use crate::synthetic::{generate, GraphSpec};

    fn params(alpha: f64, tau: f64) -> (SplittingParams, FlipFlopParams) {
        (
            SplittingParams::paper(alpha).with_tau(tau),
            FlipFlopParams::paper(alpha).with_trace(true),
        )
    }

    #[test]
    fn converged_start_stays_in_krylov_phase() {
        let adj = CompressedSparseMatrix::from_edges(2, &[(0, 1), (1, 0)]).unwrap();
        let op = TransitionOperator::uniform(&adj).unwrap();
        let (sp, mut ff) = params(0.85, 1e-10);
        ff.p = 1;
        ff.m = 2;
        for solve in [arnoldi_miio_solve, garnoldi_miio_solve] {
            let rep = solve(&op, &sp, &ff, &[0.5, 0.5]).unwrap();
            assert!(rep.converged);
            assert_eq!(rep.x, vec![0.5, 0.5]);
            let trace = flip_flop_trace(&rep);
            assert_eq!(trace.len(), 1);
            assert_eq!(trace[0].phase, Phase::Krylov);
            assert_eq!(rep.iterations, 1);
        }
    }

    #[test]
    fn small_graph_needs_no_splitting() {
        let adj = generate(&GraphSpec::new(6, 2.0, 0.2, 8)).unwrap();
        let op = TransitionOperator::uniform(&adj).unwrap();
        let (sp, ff) = params(0.9, 1e-10);
        let rep = arnoldi_miio_solve(&op, &sp, &ff, op.teleport()).unwrap();
        assert!(rep.converged);
        assert!(rep.trace.iter().all(|t| t.phase == Phase::Krylov));
        let oracle = dense_oracle_pagerank(&adj, 0.9, op.teleport()).unwrap();
        assert!(vecops::max_abs_diff(&rep.x, &oracle) < 1e-9);
    }

    #[test]
    fn hybrids_match_oracle_and_beat_miio() {
        let adj = generate(&GraphSpec::new(100, 4.0, 0.15, 21)).unwrap();
        let op = TransitionOperator::uniform(&adj).unwrap();
        let (sp, ff) = params(0.99, 1e-10);
        let oracle = dense_oracle_pagerank(&adj, 0.99, op.teleport()).unwrap();
        let miio = miio_solve(&op, &sp, op.teleport()).unwrap();
        for solve in [arnoldi_miio_solve, garnoldi_miio_solve] {
            let rep = solve(&op, &sp, &ff, op.teleport()).unwrap();
            assert!(rep.converged, "{:?}", rep.method);
            assert!(vecops::max_abs_diff(&rep.x, &oracle) < 1e-7);
            let phase_mv: u64 = rep.trace.iter().map(|t| t.mv).sum();
            assert_eq!(phase_mv, rep.mv);
            assert!(rep.trace.windows(2).all(|w| w[0].phase != w[1].phase));
            assert!(rep.trace.iter().all(|t| t.restarts <= ff.maxit));
            assert!(rep.trace.iter().all(|t| t.entry_residual.is_finite() && t.exit_residual.is_finite()));
            assert!(rep.final_residual().unwrap() <= sp.tau);
            if rep.method == Method::ArnoldiMiio {
                assert!(rep.mv < miio.mv, "{} vs {}", rep.mv, miio.mv);
            }
        }
    }

    #[test]
    fn budget_stops_the_run() {
        let adj = generate(&GraphSpec::new(200, 4.0, 0.1, 2)).unwrap();
        let op = TransitionOperator::uniform(&adj).unwrap();
        let (sp, mut ff) = params(0.99, 1e-14);
        ff.mv_budget = 40;
        let rep = arnoldi_miio_solve(&op, &sp, &ff, op.teleport()).unwrap();
        assert!(!rep.converged);
        assert!(rep.mv < 40 + 200);
    }

    #[test]
    fn untraced_runs_have_empty_log() {
        let adj = generate(&GraphSpec::new(50, 4.0, 0.1, 3)).unwrap();
        let op = TransitionOperator::uniform(&adj).unwrap();
        let sp = SplittingParams::paper(0.85);
        let ff = FlipFlopParams::paper(0.85);
        let rep = garnoldi_miio_solve(&op, &sp, &ff, op.teleport()).unwrap();
        assert!(rep.converged);
        assert!(flip_flop_trace(&rep).is_empty());
    }

    #[test]
    fn rejects_bad_params() {
        let mut ff = FlipFlopParams::paper(0.99);
        ff.arnoldi_runs = 4;
        assert!(ff.validate().is_err());
        let mut ff = FlipFlopParams::paper(0.99);
        ff.p = 8;
        assert!(ff.validate().is_err());
        assert!(FlipFlopParams::paper(0.05).validate().is_err());
    }
}
