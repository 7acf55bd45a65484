#pragma once

#include <stdexcept>
#include <string>

namespace tempest {

/// Broad failure classes; the CLI maps them onto exit codes 1/2/3.
enum class ErrorClass { Config, Numerical, Resource };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define TEMPEST_DEFINE_ERROR(Name, Class)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorClass::Class, what) {} \
  };

// stochastic-graph
TEMPEST_DEFINE_ERROR(InvalidChain, Config)
TEMPEST_DEFINE_ERROR(ReducibleChain, Numerical)
TEMPEST_DEFINE_ERROR(InvalidRates, Config)
TEMPEST_DEFINE_ERROR(InvalidGraph, Config)
// spectral-core
TEMPEST_DEFINE_ERROR(NumericalFailure, Numerical)
TEMPEST_DEFINE_ERROR(DomainError, Numerical)
TEMPEST_DEFINE_ERROR(ConvergenceFailure, Numerical)
TEMPEST_DEFINE_ERROR(EmptyInterval, Numerical)
TEMPEST_DEFINE_ERROR(DivergenceDetected, Numerical)
// threshold-engine
TEMPEST_DEFINE_ERROR(WrongKind, Config)
TEMPEST_DEFINE_ERROR(NonIrreducible, Config)
TEMPEST_DEFINE_ERROR(BracketError, Numerical)
// exact-oracle
TEMPEST_DEFINE_ERROR(TooManyEdges, Resource)
TEMPEST_DEFINE_ERROR(NonMarkovEdge, Config)
TEMPEST_DEFINE_ERROR(TooManyConfigurations, Resource)
// epidemic-sim
TEMPEST_DEFINE_ERROR(ParamRange, Config)
TEMPEST_DEFINE_ERROR(ToleranceFailure, Numerical)
TEMPEST_DEFINE_ERROR(InsufficientData, Numerical)
// cli-harness
TEMPEST_DEFINE_ERROR(ConfigError, Config)

#undef TEMPEST_DEFINE_ERROR

}  // namespace tempest
