#pragma once

#include <stdexcept>
#include <string>

namespace roadwatch {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define ROADWATCH_DEFINE_ERROR(Name)     \
  class Name : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

// network
ROADWATCH_DEFINE_ERROR(InvalidNetwork)
ROADWATCH_DEFINE_ERROR(MissingMeasurement)
ROADWATCH_DEFINE_ERROR(MissingCost)
ROADWATCH_DEFINE_ERROR(Unreachable)
// gp_predictor
ROADWATCH_DEFINE_ERROR(DimensionError)
ROADWATCH_DEFINE_ERROR(InsufficientSensors)
ROADWATCH_DEFINE_ERROR(IllConditioned)
// cusum
ROADWATCH_DEFINE_ERROR(InvalidStd)
// fault injection
ROADWATCH_DEFINE_ERROR(EpisodeBounds)
ROADWATCH_DEFINE_ERROR(InvalidPrior)
ROADWATCH_DEFINE_ERROR(InvalidFault)
// tradeoff
ROADWATCH_DEFINE_ERROR(InsufficientData)
// pipeline
ROADWATCH_DEFINE_ERROR(ParseError)
ROADWATCH_DEFINE_ERROR(ConfigError)
ROADWATCH_DEFINE_ERROR(ArtifactError)

#undef ROADWATCH_DEFINE_ERROR

}  // namespace roadwatch
