//! Driver state, per-iteration trace records and run outcomes.

/// Current point of a homotopy run: parameters plus the two hyperparameters.
#[derive(Debug, Clone)]
pub struct HomotopyState<P> {
    pub theta: P,
    /// Annealing level, in (0, 1].
    pub r: f64,
    /// Barrier weight, >= 0.
    pub xi: f64,
    /// Outer iterations consumed so far.
    pub iter: usize,
    /// Observed-data log-likelihood at `theta`, in nats.
    pub loglik: f64,
}

/// Why a candidate was accepted or rejected by the adaptive driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcceptanceReason {
    /// KL test failed at the current annealing level.
    Rule1Failed,
    /// Accepted after the barrier weight was reduced by the second rule.
    Rule2AdjustedXi,
    /// Accepted with both rules holding at the current weight.
    Accepted,
    /// The M-step could not produce a feasible candidate.
    InfeasibleCandidate,
    /// The candidate failed the generalized-EM inequality at the adjusted weight.
    GemViolated,
}

/// Outcome of one adaptive acceptance decision.
#[derive(Debug, Clone, Copy)]
pub struct AcceptanceOutcome {
    pub accepted: bool,
    pub reason: AcceptanceReason,
    pub new_r: f64,
    pub new_xi: f64,
}

/// One outer iteration of any driver.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iter: usize,
    pub r: f64,
    pub xi: f64,
    /// Observed log-likelihood of the state after this iteration.
    pub loglik: f64,
    /// KL change term of the acceptance test; only the adaptive driver fills it.
    pub delta_dkl: Option<f64>,
    /// Barrier change of the candidate; only the adaptive driver fills it.
    pub delta_barrier: Option<f64>,
    /// Surrogate gradient norms per constrained coordinate block.
    pub grad_norms: Vec<f64>,
    pub accepted: bool,
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Parameter and likelihood tolerances were met.
    Converged,
    /// The adaptive driver could no longer certify monotonicity at r = 1.
    CertificateStop,
    /// The iteration budget ran out.
    IterationCap,
}

impl Termination {
    /// Budget exhaustion is the only uncontrolled stop.
    pub fn stopped_early(self) -> bool {
        !matches!(self, Termination::IterationCap)
    }
}

/// Final state and diagnostics of one driver run.
#[derive(Debug, Clone)]
pub struct RunOutcome<P> {
    pub params: P,
    pub loglik: f64,
    pub iterations: usize,
    pub final_r: f64,
    pub final_xi: f64,
    pub termination: Termination,
    pub trace: Vec<TraceRecord>,
}
