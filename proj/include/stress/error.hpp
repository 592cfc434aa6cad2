#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stress {

enum class ErrorCode {
  // ingest
  MissingChannel,
  NonFiniteSample,
  TooShort,
  NonContiguous,
  BadAlternation,
  SectionTooShort,
  UnmatchedDrive,
  DurationMismatch,
  BadFormat,
  Io,
  // preprocess
  ConstantSignal,
  TooShortForFilter,
  // features
  EmptyBand,
  InsufficientBeats,
  DegenerateSpectrum,
  // dataset
  TooFewWindows,
  SingleDrive,
  // forest
  EmptyNode,
  SingleClassTrainingSet,
  ArityMismatch,
  // eval
  EmptyMatrix,
  // cli
  Usage,
  Internal,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for an error: 1 usage, 2 data, 3 internal invariant.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace stress
