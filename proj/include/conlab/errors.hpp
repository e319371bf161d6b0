#pragma once

#include <stdexcept>
#include <string>

namespace conlab {

/// Base class for every error raised by the toolkit.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A graph violated a structural invariant (self-loop, nonpositive weight,
/// edge into a leader, index out of range, ...).
struct InvalidGraph : Error {
  using Error::Error;
};

/// Matrix / vector dimensions do not line up.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// The follower-follower Laplacian block is singular; this is the numerical
/// signature of a spanning-tree assumption violation.
struct SingularL1 : Error {
  using Error::Error;
};

/// An eigenvalue or linear-solve routine failed to converge.
struct NumericalFailure : Error {
  using Error::Error;
};

/// (A, B) fails the PBH stabilizability test.
struct NotStabilizable : Error {
  using Error::Error;
};

/// Newton iteration on the Riccati equation stagnated above tolerance.
struct NewtonDivergence : Error {
  using Error::Error;
};

/// A user-supplied P matrix is singular or not positive definite.
struct SingularP : Error {
  using Error::Error;
};

/// A protocol evaluation was called with the wrong protocol kind.
struct WrongKind : Error {
  using Error::Error;
};

/// An adaptive coupling weight dropped below 1; the run state is corrupted.
struct WeightBelowOne : Error {
  using Error::Error;
};

/// rho() was evaluated outside its domain s >= 0.
struct NegativeArgument : Error {
  using Error::Error;
};

/// NaN or Inf appeared in the integrated state.
struct NonFiniteState : Error {
  using Error::Error;
};

/// The adaptive integrator's step size fell below min_step.
struct StepUnderflow : Error {
  using Error::Error;
};

/// Closed-form Lyapunov evaluation requested for an exponent other than 3.
struct WrongExponent : Error {
  using Error::Error;
};

/// Reports being compared do not belong to the same scenario family.
struct IncompatibleScenarios : Error {
  using Error::Error;
};

/// Containment weight matrix failed the row-stochasticity check.
struct RowStochasticViolation : Error {
  using Error::Error;
};

/// Simulation or design was requested on a graph violating the
/// spanning-tree / leader-reachability assumption.
struct AssumptionViolated : Error {
  using Error::Error;
};

/// Scenario / graph / dynamics file could not be parsed.
struct ParseError : Error {
  using Error::Error;
};

}  // namespace conlab
